//! Density matrices and the distance measures used to track convergence
//! and recovery quality.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, check_finite, check_square, hermitian_eigen, hermiticity_deviation, matrix_sqrt_psd, CMatrix,
    CVector, SubsystemShape, C64, ONE, PSD_TOL, ZERO,
};

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    shape: SubsystemShape,
}

impl DensityMatrix {
    /// Validates `mat` and infers a qubit shape when its dimension is a
    /// power of two.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let shape = SubsystemShape::infer(check_square(&mat)?);
        Self::with_shape(mat, shape)
    }

    pub fn with_shape(mat: CMatrix, shape: SubsystemShape) -> Result<Self> {
        let d = check_square(&mat)?;
        if shape.total_dim() != d {
            return Err(Error::DimensionMismatch { expected: shape.total_dim(), found: d });
        }
        let rho = Self { mat, shape };
        rho.validate()?;
        Ok(rho)
    }

    /// Skips the eigenvalue check. Used for large joint states whose
    /// validity follows from construction.
    pub(crate) fn trusted(mat: CMatrix, shape: SubsystemShape) -> Self {
        debug_assert_eq!(mat.nrows(), shape.total_dim());
        Self { mat, shape }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite(&self.mat)?;
        let dev = hermiticity_deviation(&self.mat);
        if dev > PSD_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = linalg::trace(&self.mat);
        if (tr.re - 1.0).abs() > PSD_TOL || tr.im.abs() > PSD_TOL {
            return Err(Error::NotNormalized { trace: tr.re });
        }
        let (values, _) = hermitian_eigen(&self.mat)?;
        let min = values.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(())
    }

    /// `|psi><psi|` after normalizing the amplitudes.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let v = CVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        let v = v.unscale(norm);
        Self::new(linalg::outer(&v, &v))
    }

    /// Qubit state `(I + x X + y Y + z Z) / 2`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let [x, y, z] = r;
        let len = (x * x + y * y + z * z).sqrt();
        if !len.is_finite() || len > 1.0 + PSD_TOL {
            return Err(Error::InvalidParameter(format!("Bloch vector length {len} exceeds 1")));
        }
        let m = linalg::from_rows(&[
            &[c(0.5 * (1.0 + z), 0.0), c(0.5 * x, -0.5 * y)],
            &[c(0.5 * x, 0.5 * y), c(0.5 * (1.0 - z), 0.0)],
        ]);
        Self::new(m)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::trusted(linalg::identity(d).scale(1.0 / d as f64), SubsystemShape::infer(d))
    }

    /// Computational basis state `|index><index|` in dimension `d`.
    pub fn basis(d: usize, index: usize) -> Result<Self> {
        if index >= d {
            return Err(Error::InvalidParameter(format!("basis index {index} >= dimension {d}")));
        }
        let mut m = CMatrix::zeros(d, d);
        m[(index, index)] = ONE;
        Ok(Self::trusted(m, SubsystemShape::infer(d)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.mat).map(|(v, _)| v).unwrap_or_default()
    }

    /// `tr(rho^2)`
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Rank-one check at the crate tolerance.
    pub fn is_pure(&self) -> bool {
        (self.purity() - 1.0).abs() <= 1e-8
    }

    /// Dominant eigenvector; for a pure state this is `|psi>` up to phase.
    pub fn principal_vector(&self) -> CVector {
        let (_, vectors) = hermitian_eigen(&self.mat).expect("density matrix is Hermitian");
        vectors.column(vectors.ncols() - 1).into_owned()
    }

    /// Bloch vector of a qubit state.
    pub fn bloch(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 {
            return None;
        }
        let m = &self.mat;
        Some([2.0 * m[(1, 0)].re, 2.0 * m[(1, 0)].im, (m[(0, 0)] - m[(1, 1)]).re])
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mat = linalg::kron(&self.mat, &other.mat)?;
        Ok(Self::trusted(mat, self.shape.concat(&other.shape)))
    }

    /// Reduced state on the listed factors.
    pub fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let mat = linalg::partial_trace(&self.mat, &self.shape, keep)?;
        Ok(Self::trusted(mat, self.shape.select(keep)))
    }

    /// `U rho U^dagger`
    pub fn conjugate(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if u.ncols() != self.dim() || u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.nrows() });
        }
        let mat = linalg::hermitian_part(&(u * &self.mat * u.adjoint()));
        Ok(Self::trusted(mat, self.shape.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];

    pub fn amplitudes(self) -> [C64; 4] {
        let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            Self::PhiPlus => [h, ZERO, ZERO, h],
            Self::PhiMinus => [h, ZERO, ZERO, -h],
            Self::PsiPlus => [ZERO, h, h, ZERO],
            Self::PsiMinus => [ZERO, h, -h, ZERO],
        }
    }

    pub fn projector(self) -> CMatrix {
        let v = CVector::from_column_slice(&self.amplitudes());
        linalg::outer(&v, &v)
    }
}

pub fn bell_state(which: BellState) -> DensityMatrix {
    DensityMatrix::trusted(which.projector(), SubsystemShape::qubits(2))
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// `sqrt(tr[(a-b)^dagger (a-b)])`
pub fn hilbert_schmidt_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dim(a, b)?;
    Ok(linalg::frobenius_distance(&a.mat, &b.mat))
}

/// Half the trace norm of the difference, in `[0, 1]`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dim(a, b)?;
    let diff = linalg::hermitian_part(&(&a.mat - &b.mat));
    let (values, _) = hermitian_eigen(&diff)?;
    Ok((0.5 * values.iter().map(|v| v.abs()).sum::<f64>()).min(1.0))
}

/// Squared-trace fidelity `(tr sqrt(sqrt(a) b sqrt(a)))^2`, clamped to `[0, 1]`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dim(a, b)?;
    matrix_fidelity(&a.mat, &b.mat)
}

/// Fidelity of two PSD unit-trace matrices without wrapping them.
pub(crate) fn matrix_fidelity(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let sa = matrix_sqrt_psd(a)?;
    let inner = linalg::hermitian_part(&(&sa * b * &sa));
    let (values, _) = hermitian_eigen(&inner)?;
    let root_sum: f64 = values.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Bures distance from a fidelity value: `sqrt(2 - 2 sqrt(F))`.
pub fn bures_from_fidelity(f: f64) -> f64 {
    (2.0 - 2.0 * f.clamp(0.0, 1.0).sqrt()).max(0.0).sqrt()
}

pub fn bures_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    Ok(bures_from_fidelity(fidelity(a, b)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateDistanceReport {
    pub hilbert_schmidt: f64,
    pub trace_distance: f64,
    pub fidelity: f64,
    pub bures: f64,
}

pub fn distance_report(a: &DensityMatrix, b: &DensityMatrix) -> Result<StateDistanceReport> {
    let fid = fidelity(a, b)?;
    Ok(StateDistanceReport {
        hilbert_schmidt: hilbert_schmidt_distance(a, b)?,
        trace_distance: trace_distance(a, b)?,
        fidelity: fid,
        bures: bures_from_fidelity(fid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket0() -> DensityMatrix {
        DensityMatrix::pure(&[ONE, ZERO]).unwrap()
    }
    fn ket1() -> DensityMatrix {
        DensityMatrix::pure(&[ZERO, ONE]).unwrap()
    }
    fn plus() -> DensityMatrix {
        DensityMatrix::pure(&[ONE, ONE]).unwrap()
    }

    #[test]
    fn pure_state_examples() {
        assert_eq!(ket0().matrix(), &linalg::from_diagonal(&[ONE, ZERO]));
        let p = plus();
        for z in p.matrix().iter() {
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        }
        // |0> + i|1>: outer product by hand
        let y = DensityMatrix::pure(&[ONE, c(0.0, 1.0)]).unwrap();
        let expected = linalg::from_rows(&[&[c(0.5, 0.0), c(0.0, -0.5)], &[c(0.0, 0.5), c(0.5, 0.0)]]);
        assert_abs_diff_eq!(linalg::frobenius_distance(y.matrix(), &expected), 0.0, epsilon = 1e-15);
        assert!(matches!(DensityMatrix::pure(&[ZERO, ZERO]), Err(Error::ZeroVector)));
    }

    #[test]
    fn validation_rejects_invalid_matrices() {
        let not_unit = linalg::from_diagonal(&[ONE, ONE]);
        assert!(matches!(DensityMatrix::new(not_unit), Err(Error::NotNormalized { .. })));
        let negative = linalg::from_diagonal(&[c(1.5, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(negative), Err(Error::NotPositive { .. })));
        let skew = linalg::from_rows(&[&[c(0.5, 0.0), c(0.1, 0.0)], &[ZERO, c(0.5, 0.0)]]);
        assert!(matches!(DensityMatrix::new(skew), Err(Error::NotHermitian { .. })));
        assert!(DensityMatrix::from_bloch([1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn bell_states() {
        let phi = bell_state(BellState::PhiPlus);
        assert_abs_diff_eq!(phi.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(phi.matrix()[(0, 3)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(phi.matrix()[(3, 3)].re, 0.5, epsilon = 1e-15);
        let psi = bell_state(BellState::PsiMinus);
        assert_abs_diff_eq!(psi.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.matrix()[(1, 2)].re, -0.5, epsilon = 1e-15);
        let sum = BellState::ALL.iter().fold(CMatrix::zeros(4, 4), |acc, b| acc + b.projector());
        assert_abs_diff_eq!(linalg::frobenius_distance(&sum, &linalg::identity(4)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn hilbert_schmidt_examples() {
        assert_abs_diff_eq!(hilbert_schmidt_distance(&plus(), &plus()).unwrap(), 0.0);
        assert_abs_diff_eq!(hilbert_schmidt_distance(&ket0(), &ket1()).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        // entrywise diff [[.5,-.5],[-.5,-.5]] -> Frobenius 1
        assert_abs_diff_eq!(hilbert_schmidt_distance(&ket0(), &plus()).unwrap(), 1.0, epsilon = 1e-15);
        let bell = bell_state(BellState::PhiPlus);
        assert!(matches!(hilbert_schmidt_distance(&ket0(), &bell), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn fidelity_and_bures_examples() {
        assert_abs_diff_eq!(fidelity(&plus(), &plus()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&ket0(), &ket1()).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&ket0(), &plus()).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(bures_distance(&plus(), &plus()).unwrap(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(bures_distance(&ket0(), &ket1()).unwrap(), 2f64.sqrt(), epsilon = 1e-6);
        assert_abs_diff_eq!(bures_distance(&ket0(), &plus()).unwrap(), 0.76536686473, epsilon = 1e-10);
    }

    #[test]
    fn distance_report_is_consistent() {
        let a = DensityMatrix::from_bloch([0.3, -0.2, 0.5]).unwrap();
        let b = DensityMatrix::from_bloch([-0.1, 0.4, 0.2]).unwrap();
        let r = distance_report(&a, &b).unwrap();
        assert_abs_diff_eq!(r.bures * r.bures, 2.0 * (1.0 - r.fidelity.sqrt()), epsilon = 1e-14);
        // qubit trace distance is half the Bloch-vector separation
        let sep = ((0.4f64).powi(2) + (0.6f64).powi(2) + (0.3f64).powi(2)).sqrt();
        assert_abs_diff_eq!(r.trace_distance, 0.5 * sep, epsilon = 1e-12);
    }

    #[test]
    fn bloch_round_trip() {
        let r = [0.1, -0.7, 0.4];
        let rho = DensityMatrix::from_bloch(r).unwrap();
        let back = rho.bloch().unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(back[k], r[k], epsilon = 1e-15);
        }
    }
}
