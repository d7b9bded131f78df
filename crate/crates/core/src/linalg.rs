//! Dense complex linear algebra: tensor products, partial traces, Hermitian
//! matrix functions, norms, and local gate application on qubit registers.
//!
//! Qubit registers follow one convention throughout the crate: wire 0 is the
//! leftmost tensor factor and the most significant bit of a basis index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Absolute eigenvalue tolerance for Hermiticity and positivity checks.
pub const PSD_TOL: f64 = 1e-9;

/// Largest matrix dimension `kron` will build (2^14).
pub const MAX_DIM: usize = 1 << 14;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^{i theta}`
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Tensor-factor dimensions annotating a square matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    /// An empty list of factors describes the trivial one-dimensional space.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidShape(format!("factor dimension {d} < 2")));
        }
        let mut total: usize = 1;
        for &d in &dims {
            total = total
                .checked_mul(d)
                .filter(|&t| t <= MAX_DIM)
                .ok_or(Error::DimensionCap { dim: usize::MAX, cap: MAX_DIM })?;
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self { dims: vec![2; n] }
    }

    /// Single factor of dimension `d`, or the trivial shape when `d == 1`.
    pub fn single(d: usize) -> Self {
        if d == 1 {
            Self { dims: Vec::new() }
        } else {
            Self { dims: vec![d] }
        }
    }

    /// Shape for a matrix of dimension `d`: qubits when `d` is a power of
    /// two, otherwise one factor.
    pub fn infer(d: usize) -> Self {
        if d.is_power_of_two() {
            Self::qubits(d.trailing_zeros() as usize)
        } else {
            Self::single(d)
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &SubsystemShape) -> SubsystemShape {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        SubsystemShape { dims }
    }

    /// Shape of the factors listed in `keep`, in ascending factor order.
    pub fn select(&self, keep: &[usize]) -> SubsystemShape {
        let mut idx: Vec<usize> = keep.to_vec();
        idx.sort_unstable();
        idx.dedup();
        SubsystemShape { dims: idx.iter().map(|&k| self.dims[k]).collect() }
    }

    /// Row-major strides: the last factor varies fastest.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() == m.ncols() {
        Ok(m.nrows())
    } else {
        Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() })
    }
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn from_rows(rows: &[&[C64]]) -> CMatrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

pub fn from_diagonal(diag: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(diag))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_finite(a)?;
    check_finite(b)?;
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r <= MAX_DIM && c <= MAX_DIM => Ok(a.kronecker(b)),
        (r, c) => Err(Error::DimensionCap {
            dim: r.unwrap_or(usize::MAX).max(c.unwrap_or(usize::MAX)),
            cap: MAX_DIM,
        }),
    }
}

/// Kronecker product of a non-empty list of factors.
pub fn kron_all<'a, It>(factors: It) -> Result<CMatrix>
where
    It: IntoIterator<Item = &'a CMatrix>,
{
    let mut acc = identity(1);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// Reduced matrix on the factors in `keep`. Kept factors appear in
/// ascending order regardless of the order given.
pub fn partial_trace(m: &CMatrix, shape: &SubsystemShape, keep: &[usize]) -> Result<CMatrix> {
    let d = check_square(m)?;
    if shape.total_dim() != d {
        return Err(Error::InvalidShape(format!(
            "shape {:?} has dimension {} but matrix has {}",
            shape.dims(),
            shape.total_dim(),
            d
        )));
    }
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= shape.len()) {
        return Err(Error::InvalidShape(format!(
            "factor {bad} out of range for {} factors",
            shape.len()
        )));
    }
    let traced: Vec<usize> = (0..shape.len()).filter(|k| !kept.contains(k)).collect();

    let strides = shape.strides();
    let offsets = |factors: &[usize]| -> Vec<usize> {
        // enumerate multi-indices over `factors`, last factor fastest
        let mut out = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(out.len() * shape.dims[f]);
            for &base in &out {
                for digit in 0..shape.dims[f] {
                    next.push(base + digit * strides[f]);
                }
            }
            out = next;
        }
        out
    };
    let kept_off = offsets(&kept);
    let traced_off = offsets(&traced);

    let dk = kept_off.len();
    let mut out = CMatrix::zeros(dk, dk);
    for (a, &ra) in kept_off.iter().enumerate() {
        for (b, &rb) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += m[(ra + t, rb + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a - b))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues (ascending) and
/// the unitary whose columns are the matching eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_square(m)?;
    check_finite(m)?;
    let dev = hermiticity_deviation(m);
    if dev > PSD_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((values, vectors))
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    Ok(spectral_rebuild(&values.into_iter().map(f).collect::<Vec<_>>(), &vectors))
}

fn spectral_rebuild(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(v);
    }
    let out = scaled * vectors.adjoint();
    hermitian_part(&out)
}

fn checked_psd_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (values, vectors) = hermitian_eigen(m)?;
    let min = values.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    Ok((values, vectors))
}

/// Principal square root of a Hermitian PSD matrix. Eigenvalues within
/// `PSD_TOL` below zero are clipped.
pub fn matrix_sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = checked_psd_eigen(m)?;
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    Ok(spectral_rebuild(&roots, &vectors))
}

/// Moore-Penrose inverse square root of a PSD matrix: eigenvalues at or
/// below `cutoff` map to zero.
pub fn psd_pinv_sqrt(m: &CMatrix, cutoff: f64) -> Result<CMatrix> {
    let (values, vectors) = checked_psd_eigen(m)?;
    let inv: Vec<f64> = values
        .iter()
        .map(|&v| if v > cutoff { 1.0 / v.sqrt() } else { 0.0 })
        .collect();
    Ok(spectral_rebuild(&inv, &vectors))
}

/// Projector onto the eigenspaces of a PSD matrix with eigenvalue above
/// `cutoff`, together with an orthonormal basis of the complement.
pub fn psd_support(m: &CMatrix, cutoff: f64) -> Result<(CMatrix, Vec<CVector>)> {
    let (values, vectors) = checked_psd_eigen(m)?;
    let mask: Vec<f64> = values.iter().map(|&v| if v > cutoff { 1.0 } else { 0.0 }).collect();
    let kernel = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= cutoff)
        .map(|(k, _)| vectors.column(k).into_owned())
        .collect();
    Ok((spectral_rebuild(&mask, &vectors), kernel))
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone().singular_values().iter().copied().collect()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    check_square(m)?;
    check_finite(m)?;
    Ok(singular_values(m).iter().sum())
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// `max |U^dagger U - 1|` entrywise.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    max_abs(&(u.adjoint() * u - identity(u.ncols())))
}

fn validate_wires(wires: &[usize], num_qubits: usize) -> Result<()> {
    for (k, &w) in wires.iter().enumerate() {
        if w >= num_qubits {
            return Err(Error::WireOutOfRange { wire: w, num_qubits });
        }
        if wires[..k].contains(&w) {
            return Err(Error::DuplicateWire(w));
        }
    }
    Ok(())
}

/// Left-multiply `m` (whose rows index an `num_qubits`-qubit register) by
/// `gate` acting on `wires`, identity elsewhere. The first listed wire is
/// the most significant bit of the gate's own index.
pub fn apply_on_wires(m: &mut CMatrix, gate: &CMatrix, wires: &[usize], num_qubits: usize) -> Result<()> {
    validate_wires(wires, num_qubits)?;
    let k = wires.len();
    let gd = 1usize << k;
    if gate.nrows() != gd || gate.ncols() != gd {
        return Err(Error::DimensionMismatch { expected: gd, found: gate.nrows() });
    }
    let dim = 1usize << num_qubits;
    if m.nrows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: m.nrows() });
    }
    let masks: Vec<usize> = wires.iter().map(|&w| 1usize << (num_qubits - 1 - w)).collect();
    let wire_mask: usize = masks.iter().sum();
    // register offsets for each local gate index
    let local: Vec<usize> = (0..gd)
        .map(|g| {
            (0..k)
                .filter(|&b| g & (1 << (k - 1 - b)) != 0)
                .map(|b| masks[b])
                .sum()
        })
        .collect();

    let ncols = m.ncols();
    let data = m.as_mut_slice();
    let mut gathered = vec![ZERO; gd];
    for col in 0..ncols {
        let column = &mut data[col * dim..(col + 1) * dim];
        for base in (0..dim).filter(|i| i & wire_mask == 0) {
            for (g, &off) in local.iter().enumerate() {
                gathered[g] = column[base + off];
            }
            for (r, &off) in local.iter().enumerate() {
                let mut acc = ZERO;
                for (s, &v) in gathered.iter().enumerate() {
                    acc += gate[(r, s)] * v;
                }
                column[base + off] = acc;
            }
        }
    }
    Ok(())
}

/// `rho -> G rho G^dagger` for a gate on a subset of wires.
pub fn conjugate_on_wires(rho: &CMatrix, gate: &CMatrix, wires: &[usize], num_qubits: usize) -> Result<CMatrix> {
    let mut left = rho.clone();
    apply_on_wires(&mut left, gate, wires, num_qubits)?;
    let mut right = left.adjoint();
    apply_on_wires(&mut right, gate, wires, num_qubits)?;
    Ok(right.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli_x() -> CMatrix {
        from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
    }

    #[test]
    fn kron_identities_and_projectors() {
        let i4 = kron(&identity(2), &identity(2)).unwrap();
        assert_eq!(i4, identity(4));
        let p0 = from_diagonal(&[ONE, ZERO]);
        let p1 = from_diagonal(&[ZERO, ONE]);
        let k = kron(&p0, &p1).unwrap();
        assert_eq!(k, from_diagonal(&[ZERO, ONE, ZERO, ZERO]));
    }

    #[test]
    fn kron_xx_flips_both_bits() {
        let xx = kron(&pauli_x(), &pauli_x()).unwrap();
        let ket00 = CVector::from_column_slice(&[ONE, ZERO, ZERO, ZERO]);
        let out = xx * ket00;
        assert_eq!(out, CVector::from_column_slice(&[ZERO, ZERO, ZERO, ONE]));
    }

    #[test]
    fn kron_rejects_oversized_results() {
        let err = kron(&identity(1 << 7), &identity(1 << 8)).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { .. }));
    }

    #[test]
    fn partial_trace_errors() {
        let m = identity(4);
        assert!(matches!(
            partial_trace(&m, &SubsystemShape::qubits(2), &[]),
            Err(Error::EmptyKeep)
        ));
        assert!(matches!(
            partial_trace(&m, &SubsystemShape::qubits(3), &[0]),
            Err(Error::InvalidShape(_))
        ));
        assert!(matches!(
            partial_trace(&m, &SubsystemShape::qubits(2), &[2]),
            Err(Error::InvalidShape(_))
        ));
        assert!(SubsystemShape::new(vec![2, 1]).is_err());
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = CVector::from_column_slice(&[c(h, 0.0), ZERO, ZERO, c(h, 0.0)]);
        let rho = outer(&phi, &phi);
        for keep in [0, 1] {
            let r = partial_trace(&rho, &SubsystemShape::qubits(2), &[keep]).unwrap();
            assert_abs_diff_eq!(frobenius_distance(&r, &identity(2).scale(0.5)), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn partial_trace_mixed_dimensions() {
        // tr_B(A (x) B) = tr(B) A for a 3x3 (x) 2x2 product
        let a = CMatrix::from_fn(3, 3, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let b = CMatrix::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.25));
        let ab = kron(&a, &b).unwrap();
        let shape = SubsystemShape::new(vec![3, 2]).unwrap();
        let left = partial_trace(&ab, &shape, &[0]).unwrap();
        assert_abs_diff_eq!(frobenius_distance(&left, &(a.clone() * trace(&b))), 0.0, epsilon = 1e-12);
        let right = partial_trace(&ab, &shape, &[1]).unwrap();
        assert_abs_diff_eq!(frobenius_distance(&right, &(b * trace(&a))), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_examples() {
        assert_abs_diff_eq!(frobenius_distance(&matrix_sqrt_psd(&identity(3)).unwrap(), &identity(3)), 0.0, epsilon = 1e-14);
        let m = from_diagonal(&[c(4.0, 0.0), c(9.0, 0.0)]);
        let s = matrix_sqrt_psd(&m).unwrap();
        assert_abs_diff_eq!(frobenius_distance(&s, &from_diagonal(&[c(2.0, 0.0), c(3.0, 0.0)])), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sqrt_rejects_bad_input() {
        let non_herm = from_rows(&[&[ONE, ONE], &[ZERO, ONE]]);
        assert!(matches!(matrix_sqrt_psd(&non_herm), Err(Error::NotHermitian { .. })));
        let neg = from_diagonal(&[ONE, c(-1e-3, 0.0)]);
        assert!(matches!(matrix_sqrt_psd(&neg), Err(Error::NotPositive { .. })));
        // tiny negative eigenvalue is clipped
        let clip = from_diagonal(&[ONE, c(-1e-10, 0.0)]);
        let s = matrix_sqrt_psd(&clip).unwrap();
        assert_eq!(s[(1, 1)], ZERO);
    }

    #[test]
    fn trace_norm_examples() {
        assert_abs_diff_eq!(trace_norm(&identity(5)).unwrap(), 5.0, epsilon = 1e-12);
        let z = from_diagonal(&[ONE, -ONE]);
        assert_abs_diff_eq!(trace_norm(&z).unwrap(), 2.0, epsilon = 1e-12);
        // |0><0| - |+><+|: pure-state trace distance formula 2 sqrt(1 - |<0|+>|^2)
        let ket0 = CVector::from_column_slice(&[ONE, ZERO]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = CVector::from_column_slice(&[c(h, 0.0), c(h, 0.0)]);
        let diff = outer(&ket0, &ket0) - outer(&plus, &plus);
        let expected = 2.0 * (std::f64::consts::PI / 4.0).sin();
        assert_abs_diff_eq!(trace_norm(&diff).unwrap(), expected, epsilon = 1e-12);
        // eigenvalue route agrees with SVD for Hermitian input
        let (vals, _) = hermitian_eigen(&diff).unwrap();
        assert_abs_diff_eq!(vals.iter().map(|v| v.abs()).sum::<f64>(), expected, epsilon = 1e-12);
    }

    #[test]
    fn apply_on_wires_matches_embedding() {
        let x = pauli_x();
        // X on wire 1 of 3 qubits == I (x) X (x) I
        let mut m = identity(8);
        apply_on_wires(&mut m, &x, &[1], 3).unwrap();
        let expected = kron_all([&identity(2), &x, &identity(2)]).unwrap();
        assert_eq!(m, expected);
        assert!(matches!(apply_on_wires(&mut m, &x, &[3], 3), Err(Error::WireOutOfRange { .. })));
        let cnot = from_rows(&[
            &[ONE, ZERO, ZERO, ZERO],
            &[ZERO, ONE, ZERO, ZERO],
            &[ZERO, ZERO, ZERO, ONE],
            &[ZERO, ZERO, ONE, ZERO],
        ]);
        assert!(matches!(apply_on_wires(&mut m, &cnot, &[1, 1], 3), Err(Error::DuplicateWire(1))));
    }
}
