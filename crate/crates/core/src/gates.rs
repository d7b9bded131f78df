//! Two-qubit exchange gates, the single-qubit gate family used to build
//! them from CNOTs, and a small circuit representation that compiles to a
//! dense unitary.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, c, cis, CMatrix, CVector, ONE, ZERO};
use crate::states::BellState;

/// Tolerance for the `U^dagger U = 1` check.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryGate {
    mat: CMatrix,
    arity: usize,
}

impl UnitaryGate {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let d = linalg::check_square(&mat)?;
        linalg::check_finite(&mat)?;
        if !d.is_power_of_two() {
            return Err(Error::InvalidShape(format!("gate dimension {d} is not a power of two")));
        }
        let deviation = linalg::unitarity_deviation(&mat);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { arity: d.trailing_zeros() as usize, mat })
    }

    fn trusted(mat: CMatrix) -> Self {
        let arity = mat.nrows().trailing_zeros() as usize;
        Self { mat, arity }
    }

    pub fn identity(arity: usize) -> Self {
        Self::trusted(linalg::identity(1 << arity))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self::trusted(self.mat.adjoint())
    }

    /// `self * other`: apply `other` first.
    pub fn then_after(&self, other: &UnitaryGate) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(Self::trusted(&self.mat * &other.mat))
    }
}

pub fn swap_matrix() -> CMatrix {
    linalg::from_rows(&[
        &[ONE, ZERO, ZERO, ZERO],
        &[ZERO, ZERO, ONE, ZERO],
        &[ZERO, ONE, ZERO, ZERO],
        &[ZERO, ZERO, ZERO, ONE],
    ])
}

/// Controlled-NOT with the first (most significant) qubit as control.
pub fn cnot_matrix() -> CMatrix {
    linalg::from_rows(&[
        &[ONE, ZERO, ZERO, ZERO],
        &[ZERO, ONE, ZERO, ZERO],
        &[ZERO, ZERO, ZERO, ONE],
        &[ZERO, ZERO, ONE, ZERO],
    ])
}

/// `cos(eta) 1 + i sin(eta) SWAP`
pub fn partial_swap(eta: f64) -> UnitaryGate {
    let (s, co) = eta.sin_cos();
    let diag = c(co, s);
    UnitaryGate::trusted(linalg::from_rows(&[
        &[diag, ZERO, ZERO, ZERO],
        &[ZERO, c(co, 0.0), c(0.0, s), ZERO],
        &[ZERO, c(0.0, s), c(co, 0.0), ZERO],
        &[ZERO, ZERO, ZERO, diag],
    ]))
}

/// Exchange gate: identity on the triplet, phase `e^{i pi alpha}` on the
/// singlet `|Psi->`.
pub fn swap_alpha(alpha: f64) -> UnitaryGate {
    let mut m = BellState::PhiPlus.projector() + BellState::PhiMinus.projector() + BellState::PsiPlus.projector();
    m += BellState::PsiMinus.projector() * cis(PI * alpha);
    UnitaryGate::trusted(m)
}

/// The coupling angle, exchange exponent and exponent denominator tied by
/// `-2 eta = pi / n` and `alpha = 1 / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub eta: f64,
    pub alpha: f64,
    /// Infinite when `alpha == 0`.
    pub n: f64,
}

impl CouplingParams {
    pub fn from_eta(eta: f64) -> Result<Self> {
        if !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta = {eta}")));
        }
        let alpha = -2.0 * eta / PI;
        Ok(Self { eta, alpha, n: 1.0 / alpha })
    }

    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha = {alpha}")));
        }
        Ok(Self { eta: -PI * alpha / 2.0, alpha, n: 1.0 / alpha })
    }
}

/// Phase-equivalence residual `|| U_SR(eta) - e^{i eta} U^alpha ||_F` with
/// `alpha = -2 eta / pi`.
pub fn verify_phase_equivalence(eta: f64) -> Result<f64> {
    if eta == 0.0 {
        return Err(Error::InvalidParameter(
            "eta = 0 leaves the exponent denominator undefined".into(),
        ));
    }
    let p = CouplingParams::from_eta(eta)?;
    let lhs = partial_swap(eta);
    let rhs = swap_alpha(p.alpha).matrix() * cis(eta);
    Ok(linalg::frobenius_distance(lhs.matrix(), &rhs))
}

/// Single-qubit gates of the exchange-gate decomposition. The rotations use
/// the `exp(-i theta sigma)` convention, so `RyQuarter` is a quarter turn
/// about Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyGate {
    U1,
    RyQuarter,
    RyMinusQuarter,
    RzEta,
    RzMinus2Eta,
}

pub fn single_qubit_gate(kind: FamilyGate, params: &CouplingParams) -> UnitaryGate {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let eta = params.eta;
    let m = match kind {
        FamilyGate::U1 => linalg::from_diagonal(&[ONE, cis(PI * params.alpha / 2.0)]),
        FamilyGate::RyQuarter => linalg::from_rows(&[&[c(h, 0.0), c(-h, 0.0)], &[c(h, 0.0), c(h, 0.0)]]),
        FamilyGate::RyMinusQuarter => linalg::from_rows(&[&[c(h, 0.0), c(h, 0.0)], &[c(-h, 0.0), c(h, 0.0)]]),
        FamilyGate::RzEta => linalg::from_diagonal(&[cis(-eta), cis(eta)]),
        // exp(2i eta Z), not the global phase e^{2i eta}
        FamilyGate::RzMinus2Eta => linalg::from_diagonal(&[cis(2.0 * eta), cis(-2.0 * eta)]),
    };
    UnitaryGate::trusted(m)
}

impl FamilyGate {
    /// The same matrix (up to global phase) in the `qelib1` gate set.
    pub fn to_gate(self, params: &CouplingParams) -> Gate {
        match self {
            FamilyGate::U1 => Gate::U1(PI * params.alpha / 2.0),
            FamilyGate::RyQuarter => Gate::Ry(PI / 2.0),
            FamilyGate::RyMinusQuarter => Gate::Ry(-PI / 2.0),
            FamilyGate::RzEta => Gate::Rz(2.0 * params.eta),
            FamilyGate::RzMinus2Eta => Gate::Rz(-4.0 * params.eta),
        }
    }
}

/// Gates a circuit may contain. Parametrized gates follow `qelib1.inc`
/// conventions; `Rz` is taken as `diag(e^{-i t/2}, e^{i t/2})`, which
/// differs from `qelib1`'s `u1`-based definition only by a global phase.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// Control is the first wire.
    Cx,
    U1(f64),
    Ry(f64),
    Rz(f64),
    Unitary { name: String, gate: UnitaryGate },
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::Cx => 2,
            Gate::U1(_) | Gate::Ry(_) | Gate::Rz(_) => 1,
            Gate::Unitary { gate, .. } => gate.arity(),
        }
    }

    pub fn matrix(&self) -> CMatrix {
        match *self {
            Gate::Cx => cnot_matrix(),
            Gate::U1(lambda) => linalg::from_diagonal(&[ONE, cis(lambda)]),
            Gate::Ry(theta) => {
                let (s, co) = (theta / 2.0).sin_cos();
                linalg::from_rows(&[&[c(co, 0.0), c(-s, 0.0)], &[c(s, 0.0), c(co, 0.0)]])
            }
            Gate::Rz(theta) => linalg::from_diagonal(&[cis(-theta / 2.0), cis(theta / 2.0)]),
            Gate::Unitary { ref gate, .. } => gate.matrix().clone(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Gate::Cx => "cx",
            Gate::U1(_) => "u1",
            Gate::Ry(_) => "ry",
            Gate::Rz(_) => "rz",
            Gate::Unitary { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    pub gate: Gate,
    pub wires: Vec<usize>,
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}", self.gate.name(), self.wires)
    }
}

/// Ordered gate list on `num_qubits` wires. Wire 0 is the most significant
/// bit of basis indices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCircuit {
    num_qubits: usize,
    ops: Vec<Operation>,
}

impl QuantumCircuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidParameter("circuit needs at least one qubit".into()));
        }
        Ok(Self { num_qubits, ops: Vec::new() })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn push(&mut self, gate: Gate, wires: &[usize]) -> Result<&mut Self> {
        if gate.arity() != wires.len() {
            return Err(Error::InvalidParameter(format!(
                "{} takes {} wires, got {}",
                gate.name(),
                gate.arity(),
                wires.len()
            )));
        }
        for (k, &w) in wires.iter().enumerate() {
            if w >= self.num_qubits {
                return Err(Error::WireOutOfRange { wire: w, num_qubits: self.num_qubits });
            }
            if wires[..k].contains(&w) {
                return Err(Error::DuplicateWire(w));
            }
        }
        self.ops.push(Operation { gate, wires: wires.to_vec() });
        Ok(self)
    }

    /// Append `other`, mapping its wire `k` to `wire_map[k]`.
    pub fn append_mapped(&mut self, other: &QuantumCircuit, wire_map: &[usize]) -> Result<()> {
        if wire_map.len() != other.num_qubits {
            return Err(Error::DimensionMismatch { expected: other.num_qubits, found: wire_map.len() });
        }
        for op in &other.ops {
            let wires: Vec<usize> = op.wires.iter().map(|&w| wire_map[w]).collect();
            self.push(op.gate.clone(), &wires)?;
        }
        Ok(())
    }

    pub fn cnot_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op.gate, Gate::Cx)).count()
    }

    pub fn single_qubit_count(&self) -> usize {
        self.ops.iter().filter(|op| op.wires.len() == 1).count()
    }

    /// Apply every operation in order to the columns of `m`.
    pub fn apply_to(&self, m: &mut CMatrix) -> Result<()> {
        for op in &self.ops {
            linalg::apply_on_wires(m, &op.gate.matrix(), &op.wires, self.num_qubits)?;
        }
        Ok(())
    }

    pub fn simulate(&self, state: &CVector) -> Result<CVector> {
        let mut m = CMatrix::from_column_slice(state.len(), 1, state.as_slice());
        self.apply_to(&mut m)?;
        Ok(CVector::from_column_slice(m.as_slice()))
    }
}

/// Dense unitary of the whole circuit.
pub fn compile_circuit(circuit: &QuantumCircuit) -> Result<UnitaryGate> {
    let dim = 1usize.checked_shl(circuit.num_qubits as u32).filter(|&d| d <= linalg::MAX_DIM).ok_or(
        Error::DimensionCap { dim: usize::MAX, cap: linalg::MAX_DIM },
    )?;
    let mut m = linalg::identity(dim);
    circuit.apply_to(&mut m)?;
    Ok(UnitaryGate::trusted(m))
}

/// Result of comparing two unitaries modulo a global phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAlignment {
    /// `min_theta || a - e^{i theta} b ||_F`
    pub distance: f64,
    /// Minimizing phase; zero when the overlap vanishes.
    pub phase: f64,
    /// False when `tr(a^dagger b) = 0`, where every phase is equally good.
    pub comparable: bool,
}

pub fn distance_up_to_global_phase(a: &UnitaryGate, b: &UnitaryGate) -> Result<PhaseAlignment> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let overlap = linalg::trace(&(a.matrix().adjoint() * b.matrix()));
    let na = linalg::frobenius(a.matrix()).powi(2);
    let nb = linalg::frobenius(b.matrix()).powi(2);
    let comparable = overlap.norm() > 1e-12 * (na * nb).sqrt();
    // |a - e^{it} b|^2 = |a|^2 + |b|^2 - 2 Re(e^{it} tr(a^dagger b)) is
    // minimized at t = -arg tr(a^dagger b)
    if !comparable {
        return Ok(PhaseAlignment { distance: (na + nb).sqrt(), phase: 0.0, comparable });
    }
    let phase = -overlap.arg();
    let distance = linalg::frobenius_distance(a.matrix(), &(b.matrix() * cis(phase)));
    Ok(PhaseAlignment { distance, phase, comparable })
}

/// Four-CNOT circuit for `U^alpha` on two wires.
///
/// Conjugating by `CX(0->1)` maps `U^alpha` to a controlled `X^alpha` with
/// control on wire 1; the quarter-turn Y rotations carry that to a
/// controlled phase `diag(1, 1, 1, e^{i pi alpha})`, built from two `U1`
/// gates and one `Rz` between a CNOT pair.
pub fn build_decomposition_circuit(params: &CouplingParams) -> QuantumCircuit {
    let mut qc = QuantumCircuit::new(2).expect("two wires");
    let half_phase = PI * params.alpha / 2.0;
    let ops: [(Gate, &[usize]); 9] = [
        (Gate::Cx, &[0, 1]),
        (FamilyGate::RyMinusQuarter.to_gate(params), &[0]),
        (FamilyGate::U1.to_gate(params), &[0]),
        (FamilyGate::U1.to_gate(params), &[1]),
        (Gate::Cx, &[0, 1]),
        (Gate::Rz(-half_phase), &[1]),
        (Gate::Cx, &[0, 1]),
        (FamilyGate::RyQuarter.to_gate(params), &[0]),
        (Gate::Cx, &[0, 1]),
    ];
    for (gate, wires) in ops {
        qc.push(gate, wires).expect("static wiring");
    }
    qc
}
