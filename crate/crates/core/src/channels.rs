//! CPTP channels for the correctability analysis.
//!
//! The collision unitary `U_N ... U_1` acting on `|psi> (x) |xi>^N` is a
//! Stinespring isometry from the system qubit into (code space) x
//! (environment). Discarding the environment gives the encoding channel,
//! discarding the code space gives its complement. The encoding is judged by
//! how constant the complement is (forgetfulness), by the Knill-Laflamme
//! residual of its Kraus slices, and by how well the Petz map undoes it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::partial_swap;
use crate::linalg::{self, CMatrix, CVector, SubsystemShape, ONE};
use crate::protocol::DEFAULT_FULL_STATE_CAP;
use crate::states::{self, bures_from_fidelity, trace_distance, DensityMatrix};

/// Tolerance for `sum K^dagger K = 1` and `M^dagger M = 1`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Relative eigenvalue cutoff defining the support for pseudo-inverses.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// Kraus operators below this Frobenius norm are dropped.
const NEGLIGIBLE_KRAUS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    dim_in: usize,
    dim_out: usize,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidParameter("a channel needs at least one Kraus operator".into()))?;
        let (dim_out, dim_in) = first.shape();
        for k in &ops {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::DimensionMismatch { expected: dim_out * dim_in, found: k.nrows() * k.ncols() });
            }
            linalg::check_finite(k)?;
        }
        let ch = Self { ops, dim_in, dim_out };
        let residual = ch.completeness_residual();
        if residual > COMPLETENESS_TOL {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self { ops: vec![linalg::identity(d)], dim_in: d, dim_out: d }
    }

    /// `rho -> U rho U^dagger`
    pub fn unitary(u: &CMatrix) -> Result<Self> {
        Self::new(vec![u.clone()])
    }

    /// `rho -> tr(rho) sigma` on a `dim_in`-dimensional input.
    pub fn constant(sigma: &DensityMatrix, dim_in: usize) -> Self {
        let (values, vectors) = linalg::hermitian_eigen(sigma.matrix()).expect("density matrix is Hermitian");
        let mut ops = Vec::new();
        for (k, &p) in values.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let v = vectors.column(k).scale(p.sqrt());
            for j in 0..dim_in {
                let mut op = CMatrix::zeros(sigma.dim(), dim_in);
                op.set_column(j, &v);
                ops.push(op);
            }
        }
        Self { ops, dim_in, dim_out: sigma.dim() }
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn completeness_residual(&self) -> f64 {
        let sum = self.ops.iter().fold(CMatrix::zeros(self.dim_in, self.dim_in), |acc, k| acc + k.adjoint() * k);
        linalg::frobenius_distance(&sum, &linalg::identity(self.dim_in))
    }

    /// `sum_i K_i X K_i^dagger` on an arbitrary operator.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.dim_in || x.ncols() != self.dim_in {
            return Err(Error::DimensionMismatch { expected: self.dim_in, found: x.nrows() });
        }
        Ok(self.ops.iter().fold(CMatrix::zeros(self.dim_out, self.dim_out), |acc, k| acc + k * x * k.adjoint()))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = linalg::hermitian_part(&self.apply_matrix(rho.matrix())?);
        DensityMatrix::with_shape(out, SubsystemShape::infer(self.dim_out))
    }

    /// `after . self`: apply `self` first.
    pub fn then(&self, after: &KrausChannel) -> Result<KrausChannel> {
        if after.dim_in != self.dim_out {
            return Err(Error::DimensionMismatch { expected: self.dim_out, found: after.dim_in });
        }
        let ops = after
            .ops
            .iter()
            .flat_map(|b| self.ops.iter().map(move |a| b * a))
            .filter(|k| linalg::frobenius(k) > NEGLIGIBLE_KRAUS)
            .collect::<Vec<_>>();
        let ops = if ops.is_empty() { vec![CMatrix::zeros(after.dim_out, self.dim_in)] } else { ops };
        Ok(KrausChannel { ops, dim_in: self.dim_in, dim_out: after.dim_out })
    }

    /// Unnormalized Choi matrix `sum_ij |i><j| (x) Phi(|i><j|)`, input
    /// factor first. Trace equals `dim_in`.
    pub fn choi(&self) -> CMatrix {
        let (di, dout) = (self.dim_in, self.dim_out);
        let mut j = CMatrix::zeros(di * dout, di * dout);
        for k in &self.ops {
            // vec(K) = sum_i |i> (x) K|i>
            let mut v = CVector::zeros(di * dout);
            for i in 0..di {
                for r in 0..dout {
                    v[i * dout + r] = k[(r, i)];
                }
            }
            j += &v * v.adjoint();
        }
        j
    }

    /// Choi matrix divided by `dim_in`, a density matrix.
    pub fn choi_state(&self) -> CMatrix {
        self.choi().unscale(self.dim_in as f64)
    }
}

fn same_dims(a: &KrausChannel, b: &KrausChannel) -> Result<()> {
    if a.dim_in != b.dim_in {
        return Err(Error::DimensionMismatch { expected: a.dim_in, found: b.dim_in });
    }
    if a.dim_out != b.dim_out {
        return Err(Error::DimensionMismatch { expected: a.dim_out, found: b.dim_out });
    }
    Ok(())
}

/// Which outgoing wires play the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Environment {
    /// Code space = the N reservoir wires, environment = outgoing system wire.
    #[default]
    SystemWire,
    /// Code space = outgoing system wire, environment = the reservoir wires.
    ReservoirWires,
}

/// Isometry `H_S -> H_R (x) H_E` with the environment as the last factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationIsometry {
    mat: CMatrix,
    dim_s: usize,
    dim_r: usize,
    dim_e: usize,
}

impl DilationIsometry {
    pub fn new(mat: CMatrix, dim_r: usize, dim_e: usize) -> Result<Self> {
        let dim_s = mat.ncols();
        if mat.nrows() != dim_r * dim_e {
            return Err(Error::DimensionMismatch { expected: dim_r * dim_e, found: mat.nrows() });
        }
        linalg::check_finite(&mat)?;
        let residual = linalg::frobenius_distance(&(mat.adjoint() * &mat), &linalg::identity(dim_s));
        if residual > COMPLETENESS_TOL {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Self { mat, dim_s, dim_r, dim_e })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_r(&self) -> usize {
        self.dim_r
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    /// `M rho M^dagger` on `R (x) E`.
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        if rho.dim() != self.dim_s {
            return Err(Error::DimensionMismatch { expected: self.dim_s, found: rho.dim() });
        }
        Ok(&self.mat * rho.matrix() * self.mat.adjoint())
    }

    pub fn output_shape(&self) -> SubsystemShape {
        let mut dims = Vec::new();
        if self.dim_r > 1 {
            dims.push(self.dim_r);
        }
        if self.dim_e > 1 {
            dims.push(self.dim_e);
        }
        SubsystemShape::new(dims).expect("dimensions within cap")
    }
}

/// Stinespring isometry of `N` collisions with a pure reservoir state.
pub fn dilation_from_protocol(
    reservoir: &DensityMatrix,
    eta: f64,
    num_rounds: usize,
    environment: Environment,
) -> Result<DilationIsometry> {
    if reservoir.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: reservoir.dim() });
    }
    if !reservoir.is_pure() {
        return Err(Error::MixedState);
    }
    if num_rounds > DEFAULT_FULL_STATE_CAP {
        return Err(Error::RoundCap { rounds: num_rounds, cap: DEFAULT_FULL_STATE_CAP });
    }
    let xi = reservoir.principal_vector();
    let n = num_rounds + 1;
    let dim = 1usize << n;

    // column s holds |s> (x) |xi>^N
    let mut tail = CVector::from_element(1, ONE);
    for _ in 0..num_rounds {
        tail = tail.kronecker(&xi);
    }
    let half = dim / 2;
    let mut cols = CMatrix::zeros(dim, 2);
    for s in 0..2 {
        cols.view_mut((s * half, s), (half, 1)).copy_from(&tail);
    }
    let u = partial_swap(eta);
    for k in 1..=num_rounds {
        linalg::apply_on_wires(&mut cols, u.matrix(), &[0, k], n)?;
    }

    match environment {
        Environment::ReservoirWires => DilationIsometry::new(cols, 2, half),
        Environment::SystemWire => {
            // move wire 0 to the end: (s, rest) -> (rest, s)
            let mut moved = CMatrix::zeros(dim, 2);
            for idx in 0..dim {
                let s = idx / half;
                let rest = idx % half;
                moved.set_row(rest * 2 + s, &cols.row(idx));
            }
            DilationIsometry::new(moved, half, 2)
        }
    }
}

fn prune(ops: Vec<CMatrix>, rows: usize, cols: usize) -> Vec<CMatrix> {
    let kept: Vec<CMatrix> = ops.into_iter().filter(|k| linalg::frobenius(k) > NEGLIGIBLE_KRAUS).collect();
    if kept.is_empty() {
        vec![CMatrix::zeros(rows, cols)]
    } else {
        kept
    }
}

/// Encoding channel `rho -> tr_E(M rho M^dagger)`; Kraus operators
/// `(1_R (x) <e|_E) M`.
pub fn channel_from_dilation(m: &DilationIsometry) -> Result<KrausChannel> {
    let ops = (0..m.dim_e)
        .map(|e| CMatrix::from_fn(m.dim_r, m.dim_s, |r, s| m.mat[(r * m.dim_e + e, s)]))
        .collect();
    KrausChannel::new(prune(ops, m.dim_r, m.dim_s))
}

/// Complementary channel `rho -> tr_R(M rho M^dagger)`; Kraus operators
/// `(<r|_R (x) 1_E) M`.
pub fn complementary_channel(m: &DilationIsometry) -> Result<KrausChannel> {
    let ops = (0..m.dim_r)
        .map(|r| CMatrix::from_fn(m.dim_e, m.dim_s, |e, s| m.mat[(r * m.dim_e + e, s)]))
        .collect();
    KrausChannel::new(prune(ops, m.dim_e, m.dim_s))
}

pub fn apply_channel(c: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    c.apply(rho)
}

/// Environment-slice noise operators `1_R (x) |0><e|_E`, one per
/// environment basis state. With these, `M^dagger N_i^dagger N_j M` is
/// `K_i^dagger K_j` for the encoding channel's Kraus slices.
pub fn default_noise_basis(m: &DilationIsometry) -> Vec<CMatrix> {
    (0..m.dim_e)
        .map(|e| {
            let mut slice = CMatrix::zeros(m.dim_e, m.dim_e);
            slice[(0, e)] = ONE;
            linalg::identity(m.dim_r).kronecker(&slice)
        })
        .collect()
}

/// Aggregate Knill-Laflamme residual
/// `sqrt(sum_ij || A_ij - lambda_ij 1 ||_F^2)` with
/// `A_ij = M^dagger N_i^dagger N_j M` and `lambda_ij = tr(A_ij) / dim_S`.
/// Zero exactly when every `A_ij` is a multiple of the identity; the sum
/// over pairs makes the value independent of the basis chosen for the
/// span of the noise operators.
pub fn kl_residual(m: &DilationIsometry, noise_basis: &[CMatrix]) -> Result<f64> {
    let d = m.dim_r * m.dim_e;
    let mut images = Vec::with_capacity(noise_basis.len());
    for op in noise_basis {
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.nrows() });
        }
        images.push(op * &m.mat);
    }
    Ok(kl_from_images(&images, m.dim_s))
}

/// [`kl_residual`] for [`default_noise_basis`], computed from the Kraus
/// slices without forming the `dim_R dim_E`-square noise operators.
pub fn kl_residual_default(m: &DilationIsometry) -> f64 {
    let images: Vec<CMatrix> = (0..m.dim_e)
        .map(|e| CMatrix::from_fn(m.dim_r, m.dim_s, |r, s| m.mat[(r * m.dim_e + e, s)]))
        .collect();
    kl_from_images(&images, m.dim_s)
}

fn kl_from_images(images: &[CMatrix], dim_s: usize) -> f64 {
    let eye = linalg::identity(dim_s);
    let mut total = 0.0;
    for a in images {
        for b in images {
            let gram = a.adjoint() * b;
            let lambda = linalg::trace(&gram) / dim_s as f64;
            total += linalg::frobenius_distance(&gram, &(&eye * lambda)).powi(2);
        }
    }
    total.sqrt()
}

/// Largest pairwise trace distance between the channel's outputs on the
/// probe states. It lower-bounds `|| chat - P ||_diamond` for every
/// constant channel `P`.
pub fn forgetfulness_probe(chat: &KrausChannel, probe_states: &[DensityMatrix]) -> Result<f64> {
    if probe_states.is_empty() {
        return Err(Error::InvalidParameter("probe set is empty".into()));
    }
    let outputs = probe_states.iter().map(|p| chat.apply(p)).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for (i, a) in outputs.iter().enumerate() {
        for b in &outputs[i + 1..] {
            worst = worst.max(trace_distance(a, b)?);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PetzRecovery {
    /// Petz map, completed on the kernel of `c(reference)` by preparing the
    /// reference state.
    pub channel: KrausChannel,
    /// `|| sum R_i^dagger R_i - 1 ||_F` of the bare Petz operators, i.e.
    /// the weight outside the support of `c(reference)`.
    pub completeness_residual: f64,
}

/// Petz recovery `X -> ref^1/2 c^dagger(c(ref)^-1/2 X c(ref)^-1/2) ref^1/2`
/// with a pseudo-inverse on the support of `c(ref)`.
pub fn petz_recovery(c: &KrausChannel, reference: &DensityMatrix) -> Result<PetzRecovery> {
    if reference.dim() != c.dim_in {
        return Err(Error::DimensionMismatch { expected: c.dim_in, found: reference.dim() });
    }
    let out_ref = linalg::hermitian_part(&c.apply_matrix(reference.matrix())?);
    let (values, _) = linalg::hermitian_eigen(&out_ref)?;
    let cutoff = SUPPORT_CUTOFF * values.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let inv_sqrt = linalg::psd_pinv_sqrt(&out_ref, cutoff)?;
    let ref_sqrt = linalg::matrix_sqrt_psd(reference.matrix())?;

    let mut ops: Vec<CMatrix> = c.ops.iter().map(|k| &ref_sqrt * k.adjoint() * &inv_sqrt).collect();
    let bare = KrausChannel { ops: ops.clone(), dim_in: c.dim_out, dim_out: c.dim_in };
    let completeness_residual = bare.completeness_residual();

    let (_, kernel) = linalg::psd_support(&out_ref, cutoff)?;
    let (ref_vals, ref_vecs) = linalg::hermitian_eigen(reference.matrix())?;
    for q in &kernel {
        for (k, &p) in ref_vals.iter().enumerate() {
            if p > 0.0 {
                ops.push(ref_vecs.column(k).scale(p.sqrt()) * q.adjoint());
            }
        }
    }
    let channel = KrausChannel::new(prune(ops, c.dim_in, c.dim_out))?;
    Ok(PetzRecovery { channel, completeness_residual })
}

/// Fidelity of the normalized Choi states.
pub fn channel_fidelity(a: &KrausChannel, b: &KrausChannel) -> Result<f64> {
    same_dims(a, b)?;
    states::matrix_fidelity(&a.choi_state(), &b.choi_state())
}

/// `(||J_a - J_b||_1 / dim_in, ||J_a - J_b||_1)` for unnormalized Choi
/// matrices; the diamond distance lies between the two.
pub fn diamond_distance_bounds(a: &KrausChannel, b: &KrausChannel) -> Result<(f64, f64)> {
    same_dims(a, b)?;
    let upper = linalg::trace_norm(&(a.choi() - b.choi()))?;
    Ok((upper / a.dim_in as f64, upper))
}

/// The six Pauli eigenstates.
pub fn default_probes() -> Vec<DensityMatrix> {
    [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]
        .into_iter()
        .map(|r| DensityMatrix::from_bloch(r).expect("unit Bloch vector"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectabilityReport {
    pub kl_residual: f64,
    pub forgetfulness: f64,
    /// Choi fidelity of Petz-recovered encoding against the identity.
    pub recovery_fidelity: f64,
    /// Bures distance matching `recovery_fidelity`.
    pub recovery_bures: f64,
    pub diamond_lower: f64,
    pub diamond_upper: f64,
    /// `2 sqrt(2 * forgetfulness)`
    pub delta_bound: f64,
    /// Environment subsystem dimension.
    pub k: usize,
    /// Largest trace distance of recovered probe states from the reservoir
    /// state.
    pub reservoir_distance: f64,
    pub petz_completeness_residual: f64,
}

pub fn correctability_report(
    eta: f64,
    num_rounds: usize,
    reservoir: &DensityMatrix,
    probes: &[DensityMatrix],
) -> Result<CorrectabilityReport> {
    correctability_report_for(Environment::SystemWire, eta, num_rounds, reservoir, probes)
}

pub fn correctability_report_for(
    environment: Environment,
    eta: f64,
    num_rounds: usize,
    reservoir: &DensityMatrix,
    probes: &[DensityMatrix],
) -> Result<CorrectabilityReport> {
    let m = dilation_from_protocol(reservoir, eta, num_rounds, environment)?;
    let zeta = channel_from_dilation(&m)?;
    let zeta_hat = complementary_channel(&m)?;

    let forgetfulness = forgetfulness_probe(&zeta_hat, probes)?;
    let petz = petz_recovery(&zeta, &DensityMatrix::maximally_mixed(m.dim_s))?;
    let round_trip = zeta.then(&petz.channel)?;
    let target = KrausChannel::identity(m.dim_s);
    let recovery_fidelity = channel_fidelity(&round_trip, &target)?;
    let (diamond_lower, diamond_upper) = diamond_distance_bounds(&round_trip, &target)?;

    let mut reservoir_distance: f64 = 0.0;
    for p in probes {
        reservoir_distance = reservoir_distance.max(trace_distance(&round_trip.apply(p)?, reservoir)?);
    }

    Ok(CorrectabilityReport {
        kl_residual: kl_residual_default(&m),
        forgetfulness,
        recovery_fidelity,
        recovery_bures: bures_from_fidelity(recovery_fidelity),
        diamond_lower,
        diamond_upper,
        delta_bound: 2.0 * (2.0 * forgetfulness).sqrt(),
        k: m.dim_e,
        reservoir_distance,
        petz_completeness_residual: petz.completeness_residual,
    })
}
