//! Sequential system-reservoir collisions.
//!
//! Each round the system qubit meets a fresh reservoir qubit prepared in the
//! target state `xi` and the pair evolves under the partial SWAP
//! `U(eta) = cos(eta) 1 + i sin(eta) SWAP`. Because every reservoir qubit is
//! used once, the reduced system dynamics can be iterated exactly on 2x2
//! matrices ([`Mode::Reduced`]); [`Mode::FullState`] carries the whole
//! `(N+1)`-qubit density matrix and is used to cross-check it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::partial_swap;
use crate::linalg::{self, CMatrix, SubsystemShape};
use crate::states::{hilbert_schmidt_distance, DensityMatrix};

/// Default limit on reservoir size for full-state runs (2^11 x 2^11 joint
/// density matrix).
pub const DEFAULT_FULL_STATE_CAP: usize = 10;

/// Distances below this are treated as zero when forming contraction ratios.
pub const RATIO_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Mode {
    #[default]
    Reduced,
    FullState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub eta: f64,
    pub num_rounds: usize,
    pub mode: Mode,
    pub delta_target: f64,
    pub full_state_qubit_cap: usize,
}

impl ProtocolConfig {
    pub fn new(eta: f64, num_rounds: usize) -> Self {
        Self {
            eta,
            num_rounds,
            mode: Mode::Reduced,
            delta_target: 1e-3,
            full_state_qubit_cap: DEFAULT_FULL_STATE_CAP,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta_target = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta = {}", self.eta)));
        }
        if !(self.delta_target > 0.0 && self.delta_target < 1.0) {
            return Err(Error::InvalidParameter(format!("delta = {} is outside (0, 1)", self.delta_target)));
        }
        if self.mode == Mode::FullState && self.num_rounds > self.full_state_qubit_cap {
            return Err(Error::RoundCap { rounds: self.num_rounds, cap: self.full_state_qubit_cap });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub round: usize,
    pub system_state: DensityMatrix,
    /// Marginal of the reservoir qubit used in this round, right after its
    /// collision. `None` for round 0.
    pub ancilla_state: Option<DensityMatrix>,
    pub distance_to_target: f64,
    /// `D(l) / D(l-1)`; `None` for round 0 or when `D(l-1)` is negligible.
    pub contraction_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub eta: f64,
    pub reservoir: DensityMatrix,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn distances(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.distance_to_target).collect()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        &self.steps.last().expect("trajectory has round 0").system_state
    }
}

fn require_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho.dim() });
    }
    Ok(())
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// One collision in closed form. Returns the new system state and the
/// outgoing reservoir qubit:
///
/// ```text
/// rho' = cos^2 rho + sin^2 xi + i cos sin [xi, rho]
/// xi'  = sin^2 rho + cos^2 xi + i cos sin [rho, xi]
/// ```
pub fn collide(system: &DensityMatrix, ancilla: &DensityMatrix, eta: f64) -> Result<(DensityMatrix, DensityMatrix)> {
    require_qubit(system)?;
    require_qubit(ancilla)?;
    let (s, c) = eta.sin_cos();
    let (rho, xi) = (system.matrix(), ancilla.matrix());
    let cross = linalg::I * (c * s);
    let comm = commutator(xi, rho);
    let rho_out = rho.scale(c * c) + xi.scale(s * s) + &comm * cross;
    let xi_out = rho.scale(s * s) + xi.scale(c * c) - comm * cross;
    let shape = SubsystemShape::qubits(1);
    let rho_out = DensityMatrix::with_shape(linalg::hermitian_part(&rho_out), shape.clone()).map_err(contract)?;
    let xi_out = DensityMatrix::with_shape(linalg::hermitian_part(&xi_out), shape).map_err(contract)?;
    Ok((rho_out, xi_out))
}

fn contract(e: Error) -> Error {
    Error::Contract(e.to_string())
}

/// `rho_S (x) xi^(x)N` evolved by `U_N ... U_1`, with `U_k` the partial
/// SWAP on wires `(0, k)`.
pub fn evolve_joint(initial: &DensityMatrix, reservoir: &DensityMatrix, eta: f64, rounds: usize) -> Result<DensityMatrix> {
    let mut joint = initial.clone();
    for _ in 0..rounds {
        joint = joint.tensor(reservoir)?;
    }
    let u = partial_swap(eta);
    let n = rounds + 1;
    let mut mat = joint.into_matrix();
    for k in 1..=rounds {
        mat = linalg::conjugate_on_wires(&mat, u.matrix(), &[0, k], n)?;
    }
    Ok(DensityMatrix::trusted(mat, SubsystemShape::qubits(n)))
}

struct Recorder {
    target: DensityMatrix,
    steps: Vec<StepRecord>,
}

impl Recorder {
    fn push(&mut self, system: DensityMatrix, ancilla: Option<DensityMatrix>) -> Result<()> {
        system.validate().map_err(contract)?;
        if let Some(a) = &ancilla {
            a.validate().map_err(contract)?;
        }
        let distance = hilbert_schmidt_distance(&system, &self.target)?;
        if !distance.is_finite() {
            return Err(Error::Contract(format!("non-finite distance at round {}", self.steps.len())));
        }
        let contraction_factor = self
            .steps
            .last()
            .filter(|prev| prev.distance_to_target >= RATIO_FLOOR)
            .map(|prev| distance / prev.distance_to_target);
        self.steps.push(StepRecord {
            round: self.steps.len(),
            system_state: system,
            ancilla_state: ancilla,
            distance_to_target: distance,
            contraction_factor,
        });
        Ok(())
    }
}

pub fn run_protocol(initial: &DensityMatrix, reservoir: &DensityMatrix, config: &ProtocolConfig) -> Result<Trajectory> {
    config.validate()?;
    require_qubit(initial)?;
    require_qubit(reservoir)?;
    let mut rec = Recorder { target: reservoir.clone(), steps: Vec::with_capacity(config.num_rounds + 1) };
    rec.push(initial.clone(), None)?;

    match config.mode {
        Mode::Reduced => {
            let mut system = initial.clone();
            for _ in 0..config.num_rounds {
                let (next, ancilla) = collide(&system, reservoir, config.eta)?;
                rec.push(next.clone(), Some(ancilla))?;
                system = next;
            }
        }
        Mode::FullState => {
            let n = config.num_rounds + 1;
            let mut joint = initial.clone();
            for _ in 0..config.num_rounds {
                joint = joint.tensor(reservoir)?;
            }
            let u = partial_swap(config.eta);
            let mut mat = joint.into_matrix();
            let shape = SubsystemShape::qubits(n);
            for k in 1..=config.num_rounds {
                mat = linalg::conjugate_on_wires(&mat, u.matrix(), &[0, k], n)?;
                let system = linalg::partial_trace(&mat, &shape, &[0])?;
                let ancilla = linalg::partial_trace(&mat, &shape, &[k])?;
                rec.push(
                    DensityMatrix::trusted(system, SubsystemShape::qubits(1)),
                    Some(DensityMatrix::trusted(ancilla, SubsystemShape::qubits(1))),
                )?;
            }
        }
    }
    Ok(Trajectory { eta: config.eta, reservoir: reservoir.clone(), steps: rec.steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub first_round_below_delta: Option<usize>,
    pub monotone: bool,
    pub gamma_max: f64,
}

/// Slack allowed when deciding whether distances are non-increasing.
const MONOTONE_SLACK: f64 = 1e-12;

pub fn convergence_report(t: &Trajectory, delta: f64) -> ConvergenceReport {
    let d = t.distances();
    let first_round_below_delta = d.iter().position(|&x| x <= delta);
    let monotone = d.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
    let gamma_max = d
        .windows(2)
        .filter(|w| w[0] >= RATIO_FLOOR)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    ConvergenceReport { first_round_below_delta, monotone, gamma_max }
}

/// Smallest number of rounds `N <= max_rounds` with `D(rho^(N), xi) <= delta`.
pub fn steady_state_threshold(
    initial: &DensityMatrix,
    reservoir: &DensityMatrix,
    eta: f64,
    delta: f64,
    max_rounds: usize,
) -> Result<Option<usize>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} is outside (0, 1)")));
    }
    if max_rounds == 0 {
        return Err(Error::InvalidParameter("max_rounds must be at least 1".into()));
    }
    require_qubit(initial)?;
    require_qubit(reservoir)?;
    let mut system = initial.clone();
    for round in 0..=max_rounds {
        if hilbert_schmidt_distance(&system, reservoir)? <= delta {
            return Ok(Some(round));
        }
        if round < max_rounds {
            system = collide(&system, reservoir, eta)?.0;
        }
    }
    Ok(None)
}
