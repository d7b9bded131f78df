//! Experiment specs and the artifacts the command-line front end writes:
//! trajectory CSV, correctability JSON and OpenQASM circuits.
//!
//! A spec file is a flat list of `key = value` lines; `#` starts a comment.
//!
//! ```text
//! initial   = 1            # 0, 1, +, -, i, -i or bloch:x,y,z
//! reservoir = 0
//! eta       = 0.39269908169872414   # or alpha = ..., never both
//! rounds    = 5
//! mode      = reduced      # or full
//! delta     = 1e-3
//! measure   = true
//! probes    = 0;1;+;-;i;-i
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use serde_json::value::RawValue;

use crate::channels::{correctability_report, CorrectabilityReport};
use crate::error::{Error, Result};
use crate::gates::{build_decomposition_circuit, CouplingParams, Gate, QuantumCircuit};
use crate::protocol::{run_protocol, Mode, ProtocolConfig, Trajectory};
use crate::qasm::{self, QasmProgram};
use crate::states::DensityMatrix;

/// Rounds accepted by QASM emission.
pub const QASM_ROUND_CAP: usize = 20;

const PURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateDescriptor {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
    Bloch([f64; 3]),
}

impl StateDescriptor {
    pub fn bloch(self) -> [f64; 3] {
        match self {
            Self::Zero => [0.0, 0.0, 1.0],
            Self::One => [0.0, 0.0, -1.0],
            Self::Plus => [1.0, 0.0, 0.0],
            Self::Minus => [-1.0, 0.0, 0.0],
            Self::PlusI => [0.0, 1.0, 0.0],
            Self::MinusI => [0.0, -1.0, 0.0],
            Self::Bloch(r) => r,
        }
    }

    pub fn density(self) -> Result<DensityMatrix> {
        match self {
            Self::Zero => DensityMatrix::basis(2, 0),
            Self::One => DensityMatrix::basis(2, 1),
            other => DensityMatrix::from_bloch(other.bloch()),
        }
    }

    /// `(theta, phi)` with `u1(phi) ry(theta) |0>` equal to the state.
    /// Mixed states have no such preparation.
    pub fn prep_angles(self) -> Result<(f64, f64)> {
        let [x, y, z] = self.bloch();
        let len = (x * x + y * y + z * z).sqrt();
        if (len - 1.0).abs() > PURE_TOL {
            return Err(Error::MixedState);
        }
        let theta = (z / len).clamp(-1.0, 1.0).acos();
        let phi = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) };
        Ok((theta, phi))
    }
}

impl FromStr for StateDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let name = s.trim_start_matches('|').trim_end_matches('>').trim_end_matches('⟩');
        let d = match name {
            "0" => Self::Zero,
            "1" => Self::One,
            "+" => Self::Plus,
            "-" => Self::Minus,
            "i" | "+i" => Self::PlusI,
            "-i" => Self::MinusI,
            _ => {
                let body = s
                    .strip_prefix("bloch:")
                    .ok_or_else(|| Error::Spec(format!("unknown state `{s}`")))?;
                let parts = body
                    .split(',')
                    .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Spec(format!("bad Bloch component `{p}`: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                let r: [f64; 3] =
                    parts.try_into().map_err(|_| Error::Spec(format!("Bloch vector `{body}` needs 3 components")))?;
                DensityMatrix::from_bloch(r)?;
                Self::Bloch(r)
            }
        };
        Ok(d)
    }
}

impl fmt::Display for StateDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("0"),
            Self::One => f.write_str("1"),
            Self::Plus => f.write_str("+"),
            Self::Minus => f.write_str("-"),
            Self::PlusI => f.write_str("i"),
            Self::MinusI => f.write_str("-i"),
            Self::Bloch([x, y, z]) => write!(f, "bloch:{x},{y},{z}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Eta(f64),
    Alpha(f64),
}

impl Coupling {
    pub fn params(self) -> Result<CouplingParams> {
        match self {
            Self::Eta(eta) => CouplingParams::from_eta(eta),
            Self::Alpha(alpha) => CouplingParams::from_alpha(alpha),
        }
    }
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s.trim().to_ascii_lowercase().as_str() {
        "reduced" => Ok(Mode::Reduced),
        "full" | "fullstate" | "full-state" | "full_state" => Ok(Mode::FullState),
        other => Err(Error::Spec(format!("unknown mode `{other}`"))),
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::Spec(format!("expected a boolean, got `{other}`"))),
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let x = s.trim().parse::<f64>().map_err(|e| Error::Spec(format!("{key}: {e}")))?;
    if !x.is_finite() {
        return Err(Error::Spec(format!("{key} must be finite")));
    }
    Ok(x)
}

pub fn parse_probes(s: &str) -> Result<Vec<StateDescriptor>> {
    let probes = s.split(';').filter(|p| !p.trim().is_empty()).map(str::parse).collect::<Result<Vec<_>>>()?;
    if probes.is_empty() {
        return Err(Error::Spec("probe list is empty".into()));
    }
    Ok(probes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub initial: StateDescriptor,
    pub reservoir: StateDescriptor,
    pub coupling: Coupling,
    pub rounds: usize,
    pub mode: Mode,
    pub delta: f64,
    pub measure: bool,
    pub probes: Vec<StateDescriptor>,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn params(&self) -> Result<CouplingParams> {
        self.coupling.params()
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        let config = ProtocolConfig::new(self.params()?.eta, self.rounds).with_mode(self.mode).with_delta(self.delta);
        config.validate()?;
        Ok(config)
    }

    pub fn probe_states(&self) -> Result<Vec<DensityMatrix>> {
        self.probes.iter().map(|p| p.density()).collect()
    }
}

/// Partially specified experiment. Layers are merged with [`SpecBuilder::merge`],
/// later layers winning key by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecBuilder {
    pub initial: Option<StateDescriptor>,
    pub reservoir: Option<StateDescriptor>,
    pub coupling: Option<Coupling>,
    pub rounds: Option<usize>,
    pub mode: Option<Mode>,
    pub delta: Option<f64>,
    pub measure: Option<bool>,
    pub probes: Option<Vec<StateDescriptor>>,
    pub out: Option<PathBuf>,
}

impl SpecBuilder {
    pub fn parse(text: &str) -> Result<Self> {
        let mut b = Self::default();
        let mut eta = None;
        let mut alpha = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Spec(format!("line {}: expected `key = value`", idx + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let at = |e: Error| Error::Spec(format!("line {}: {e}", idx + 1));
            match key {
                "initial" => b.initial = Some(value.parse().map_err(at)?),
                "reservoir" => b.reservoir = Some(value.parse().map_err(at)?),
                "eta" => eta = Some(parse_f64(key, value).map_err(at)?),
                "alpha" => alpha = Some(parse_f64(key, value).map_err(at)?),
                "rounds" => {
                    b.rounds = Some(value.parse().map_err(|e| Error::Spec(format!("line {}: rounds: {e}", idx + 1)))?)
                }
                "mode" => b.mode = Some(parse_mode(value).map_err(at)?),
                "delta" => b.delta = Some(parse_f64(key, value).map_err(at)?),
                "measure" => b.measure = Some(parse_bool(value).map_err(at)?),
                "probes" => b.probes = Some(parse_probes(value).map_err(at)?),
                "out" => b.out = Some(PathBuf::from(value)),
                other => return Err(Error::Spec(format!("line {}: unknown key `{other}`", idx + 1))),
            }
        }
        b.coupling = exclusive_coupling(eta, alpha)?;
        Ok(b)
    }

    pub fn merge(self, over: SpecBuilder) -> SpecBuilder {
        SpecBuilder {
            initial: over.initial.or(self.initial),
            reservoir: over.reservoir.or(self.reservoir),
            coupling: over.coupling.or(self.coupling),
            rounds: over.rounds.or(self.rounds),
            mode: over.mode.or(self.mode),
            delta: over.delta.or(self.delta),
            measure: over.measure.or(self.measure),
            probes: over.probes.or(self.probes),
            out: over.out.or(self.out),
        }
    }

    /// Defaults: `|1>` into `|0>`, 5 rounds, reduced mode, `delta = 1e-3`,
    /// no measurement, the six Pauli eigenstates as probes. The coupling
    /// has no default.
    pub fn build(self) -> Result<ExperimentSpec> {
        let coupling = self.coupling.ok_or_else(|| Error::Spec("one of eta or alpha is required".into()))?;
        coupling.params()?;
        Ok(ExperimentSpec {
            initial: self.initial.unwrap_or(StateDescriptor::One),
            reservoir: self.reservoir.unwrap_or(StateDescriptor::Zero),
            coupling,
            rounds: self.rounds.unwrap_or(5),
            mode: self.mode.unwrap_or_default(),
            delta: self.delta.unwrap_or(1e-3),
            measure: self.measure.unwrap_or(false),
            probes: self.probes.unwrap_or_else(|| {
                vec![
                    StateDescriptor::Zero,
                    StateDescriptor::One,
                    StateDescriptor::Plus,
                    StateDescriptor::Minus,
                    StateDescriptor::PlusI,
                    StateDescriptor::MinusI,
                ]
            }),
            out: self.out,
        })
    }
}

pub fn exclusive_coupling(eta: Option<f64>, alpha: Option<f64>) -> Result<Option<Coupling>> {
    match (eta, alpha) {
        (Some(_), Some(_)) => Err(Error::Spec("give eta or alpha, not both".into())),
        (Some(e), None) => Ok(Some(Coupling::Eta(e))),
        (None, Some(a)) => Ok(Some(Coupling::Alpha(a))),
        (None, None) => Ok(None),
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "round", "rho_00_re", "rho_00_im", "rho_01_re", "rho_01_im", "rho_10_re", "rho_10_im", "rho_11_re", "rho_11_im",
    "distance", "gamma",
];

/// One row per round, round 0 included. `gamma` is left empty where the
/// ratio is undefined.
pub fn trajectory_csv(t: &Trajectory) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for step in &t.steps {
        let m = step.system_state.matrix();
        let mut row = vec![step.round.to_string()];
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            row.push(m[(r, c)].re.to_string());
            row.push(m[(r, c)].im.to_string());
        }
        row.push(step.distance_to_target.to_string());
        row.push(step.contraction_factor.map(|g| g.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn number(x: f64) -> Result<Box<RawValue>> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(RawValue::from_string(format!("{x:.16e}"))?)
}

#[derive(Serialize)]
struct ReportJson {
    kl_residual: Box<RawValue>,
    forgetfulness: Box<RawValue>,
    recovery_fidelity: Box<RawValue>,
    diamond_lower: Box<RawValue>,
    diamond_upper: Box<RawValue>,
    delta_bound: Box<RawValue>,
    k: usize,
    eta: Box<RawValue>,
    alpha: Box<RawValue>,
    rounds: usize,
}

/// Fixed-key JSON object, floats with 17 significant digits.
pub fn report_json(report: &CorrectabilityReport, params: &CouplingParams, rounds: usize) -> Result<String> {
    let doc = ReportJson {
        kl_residual: number(report.kl_residual)?,
        forgetfulness: number(report.forgetfulness)?,
        recovery_fidelity: number(report.recovery_fidelity)?,
        diamond_lower: number(report.diamond_lower)?,
        diamond_upper: number(report.diamond_upper)?,
        delta_bound: number(report.delta_bound)?,
        k: report.k,
        eta: number(params.eta)?,
        alpha: number(params.alpha)?,
        rounds,
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

fn push_prep(c: &mut QuantumCircuit, state: StateDescriptor, wire: usize) -> Result<()> {
    let (theta, phi) = state.prep_angles()?;
    if theta != 0.0 {
        c.push(Gate::Ry(theta), &[wire])?;
    }
    if phi != 0.0 {
        c.push(Gate::U1(phi), &[wire])?;
    }
    Ok(())
}

/// `N + 1` wires: preparation of the initial state on wire 0 and the
/// reservoir state on wires `1..=N`, then one exchange block per round
/// between wire 0 and wire `k`.
pub fn homogenization_circuit(spec: &ExperimentSpec) -> Result<QasmProgram> {
    if spec.rounds > QASM_ROUND_CAP {
        return Err(Error::RoundCap { rounds: spec.rounds, cap: QASM_ROUND_CAP });
    }
    let block = build_decomposition_circuit(&spec.params()?);
    let mut c = QuantumCircuit::new(spec.rounds + 1)?;
    push_prep(&mut c, spec.initial, 0)?;
    for k in 1..=spec.rounds {
        push_prep(&mut c, spec.reservoir, k)?;
    }
    for k in 1..=spec.rounds {
        c.append_mapped(&block, &[0, k])?;
    }
    let measurements = if spec.measure { vec![(0, 0)] } else { Vec::new() };
    Ok(QasmProgram { circuit: c, measurements })
}

pub fn simulate_trajectory(spec: &ExperimentSpec) -> Result<Trajectory> {
    run_protocol(&spec.initial.density()?, &spec.reservoir.density()?, &spec.protocol_config()?)
}

pub fn cmd_simulate(spec: &ExperimentSpec) -> Result<String> {
    trajectory_csv(&simulate_trajectory(spec)?)
}

pub fn cmd_decompose(alpha: f64) -> Result<String> {
    qasm::emit_circuit(&build_decomposition_circuit(&CouplingParams::from_alpha(alpha)?))
}

pub fn cmd_homogenize_qasm(spec: &ExperimentSpec) -> Result<String> {
    qasm::emit(&homogenization_circuit(spec)?)
}

pub fn analyze(spec: &ExperimentSpec) -> Result<CorrectabilityReport> {
    let probes = spec.probe_states()?;
    correctability_report(spec.params()?.eta, spec.rounds, &spec.reservoir.density()?, &probes)
}

pub fn cmd_analyze(spec: &ExperimentSpec) -> Result<String> {
    report_json(&analyze(spec)?, &spec.params()?, spec.rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, CVector, ONE, ZERO};
    use crate::qasm::parse;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn spec(text: &str) -> ExperimentSpec {
        SpecBuilder::parse(text).unwrap().build().unwrap()
    }

    #[test]
    fn descriptors() {
        for (s, d) in [("0", StateDescriptor::Zero), ("|1>", StateDescriptor::One), ("-i", StateDescriptor::MinusI)] {
            assert_eq!(s.parse::<StateDescriptor>().unwrap(), d);
        }
        assert_eq!("bloch:0.1, 0.2,0.3".parse::<StateDescriptor>().unwrap(), StateDescriptor::Bloch([0.1, 0.2, 0.3]));
        assert!("bloch:1,1,0".parse::<StateDescriptor>().is_err());
        assert!("bloch:1,0".parse::<StateDescriptor>().is_err());
        assert!("psi".parse::<StateDescriptor>().is_err());
        for d in [StateDescriptor::Plus, StateDescriptor::Bloch([0.0, 0.6, -0.8])] {
            assert_eq!(d.to_string().parse::<StateDescriptor>().unwrap(), d);
        }
    }

    #[test]
    fn prep_angles_reproduce_state() {
        for d in ["0", "1", "+", "-", "i", "-i", "bloch:0.48,-0.6,0.64"] {
            let d: StateDescriptor = d.parse().unwrap();
            let mut c = QuantumCircuit::new(1).unwrap();
            push_prep(&mut c, d, 0).unwrap();
            let psi = c.simulate(&CVector::from_column_slice(&[ONE, ZERO])).unwrap();
            let rho = DensityMatrix::pure(psi.as_slice()).unwrap();
            assert!(linalg::frobenius_distance(rho.matrix(), d.density().unwrap().matrix()) < 1e-12, "{d}");
        }
        assert!(matches!(StateDescriptor::Bloch([0.0, 0.0, 0.5]).prep_angles(), Err(Error::MixedState)));
    }

    #[test]
    fn spec_file_and_overrides() {
        let base = SpecBuilder::parse("# sweep\ninitial = +\nalpha = 0.25 # quarter\nrounds = 3\nmode = full\nmeasure = yes\n").unwrap();
        let s = base.clone().build().unwrap();
        assert_eq!(s.initial, StateDescriptor::Plus);
        assert_eq!(s.reservoir, StateDescriptor::Zero);
        assert_eq!(s.coupling, Coupling::Alpha(0.25));
        assert_eq!(s.mode, Mode::FullState);
        assert!(s.measure);
        assert_eq!(s.probes.len(), 6);
        let flags = SpecBuilder { coupling: Some(Coupling::Eta(0.1)), rounds: Some(7), ..Default::default() };
        let merged = base.merge(flags).build().unwrap();
        assert_eq!((merged.coupling, merged.rounds), (Coupling::Eta(0.1), 7));
    }

    #[test]
    fn spec_errors() {
        assert!(SpecBuilder::parse("eta = 1\nalpha = 1\n").is_err());
        assert!(SpecBuilder::parse("rounds = -1\n").is_err());
        assert!(SpecBuilder::parse("colour = red\n").is_err());
        assert!(SpecBuilder::parse("eta\n").is_err());
        assert!(SpecBuilder::parse("eta = inf\n").is_err());
        assert!(SpecBuilder::parse("rounds = 3\n").unwrap().build().is_err());
    }

    #[test]
    fn eta_alpha_relation() {
        let p = Coupling::Alpha(0.25).params().unwrap();
        assert_abs_diff_eq!(p.eta, -PI / 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.n, 4.0, epsilon = 1e-12);
        let q = Coupling::Eta(-PI / 8.0).params().unwrap();
        assert_abs_diff_eq!(q.alpha, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn simulate_csv_shape() {
        let csv = cmd_simulate(&spec(&format!("initial = 1\nreservoir = 0\neta = {}\nrounds = 5\n", PI / 8.0))).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 7);
        let dist: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(9).unwrap().parse().unwrap()).collect();
        assert!(dist.windows(2).all(|w| w[1] < w[0]));
        assert!(lines[1].ends_with(','));
    }

    #[test]
    fn simulate_fixed_point_rows() {
        let csv = cmd_simulate(&spec("initial = +\nreservoir = +\neta = 0.7\nrounds = 4\n")).unwrap();
        for line in csv.lines().skip(1) {
            assert_eq!(line.split(',').nth(9).unwrap().parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn report_json_keys() {
        let json = cmd_analyze(&spec(&format!("eta = {}\nrounds = 1\n", PI / 2.0))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            ["kl_residual", "forgetfulness", "recovery_fidelity", "diamond_lower", "diamond_upper", "delta_bound", "k", "eta", "alpha", "rounds"]
        );
        assert!(v["recovery_fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
        assert_eq!(v["k"], 2);
        assert_eq!(v["rounds"], 1);
    }

    #[test]
    fn homogenization_single_swap() {
        let s = spec("initial = 1\nreservoir = 0\nalpha = 1\nrounds = 1\nmeasure = true\n");
        let text = cmd_homogenize_qasm(&s).unwrap();
        assert!(text.trim_end().ends_with("measure q[0] -> c[0];"));
        let program = parse(&text).unwrap();
        let mut zero = CVector::zeros(4);
        zero[0] = ONE;
        let psi = program.circuit.simulate(&zero).unwrap();
        let wire0 = DensityMatrix::pure(psi.as_slice()).unwrap().reduce(&[0]).unwrap();
        assert!(linalg::frobenius_distance(wire0.matrix(), DensityMatrix::basis(2, 0).unwrap().matrix()) < 1e-12);
    }

    #[test]
    fn homogenization_limits() {
        let prep_only = homogenization_circuit(&spec("initial = +\nalpha = 0.5\nrounds = 0\n")).unwrap();
        assert_eq!(prep_only.circuit.num_qubits(), 1);
        assert_eq!(prep_only.circuit.cnot_count(), 0);
        assert!(matches!(
            homogenization_circuit(&spec("alpha = 0.5\nrounds = 21\n")),
            Err(Error::RoundCap { .. })
        ));
        assert!(matches!(
            homogenization_circuit(&spec("initial = bloch:0,0,0\nalpha = 0.5\nrounds = 1\n")),
            Err(Error::MixedState)
        ));
    }
}
