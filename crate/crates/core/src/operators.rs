//! Dense operators on truncated Fock spaces and their tensor products.
//!
//! Units are ħ = M = 1 throughout.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix tagged with the subsystem dimensions it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    data: CMatrix,
    dims: Vec<usize>,
}

impl DenseOperator {
    pub fn new(data: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let size: usize = dims.iter().product();
        if !data.is_square() || data.nrows() != size || dims.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: format!("square matrix of size {size} for dims {dims:?}"),
                found: format!("{}x{}", data.nrows(), data.ncols()),
            });
        }
        Ok(Self { data, dims })
    }

    /// Single-subsystem operator.
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        let n = data.nrows();
        Self::new(data, vec![n])
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self {
            data: CMatrix::zeros(n, n),
            dims: dims.to_vec(),
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self {
            data: CMatrix::identity(n, n),
            dims: dims.to_vec(),
        }
    }

    /// `|row⟩⟨col|` on a single subsystem.
    pub fn ket_bra(dim: usize, row: usize, col: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(row, col)] = ONE;
        Self {
            data: m,
            dims: vec![dim],
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn size(&self) -> usize {
        self.data.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            data: &self.data * c,
            dims: self.dims.clone(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max |A_ij − A_ji*|`
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.size();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Upper-left `k × k` block (lowest Fock levels of a single mode).
    pub fn leading_block(&self, k: usize) -> CMatrix {
        self.data.view((0, 0), (k, k)).into_owned()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.dims),
                found: format!("{:?}", other.dims),
            });
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            data: &self.data * &other.data,
            dims: self.dims.clone(),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            data: &self.data + &other.data,
            dims: self.dims.clone(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            data: &self.data - &other.data,
            dims: self.dims.clone(),
        })
    }
}

// Operator arithmetic panics on mismatched dims; the `try_*` forms report it.
impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: Self) -> DenseOperator {
        self.try_mul(rhs).expect("operator dimensions must agree")
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: Self) -> DenseOperator {
        self.try_add(rhs).expect("operator dimensions must agree")
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: Self) -> DenseOperator {
        self.try_sub(rhs).expect("operator dimensions must agree")
    }
}

/// Bosonic annihilation operator: `√k` at `(k−1, k)`.
pub fn annihilation(dim: usize) -> Result<DenseOperator> {
    if dim < 2 {
        return Err(Error::InvalidParameter {
            name: "dim",
            reason: format!("Fock cutoff must be at least 2, got {dim}"),
        });
    }
    let mut m = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        m[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    DenseOperator::from_matrix(m)
}

pub fn creation(dim: usize) -> Result<DenseOperator> {
    Ok(annihilation(dim)?.dagger())
}

/// Number operator `a†a` (exactly diagonal, no truncation artefact).
pub fn number(dim: usize) -> DenseOperator {
    let m = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| {
        Complex64::new(k as f64, 0.0)
    }));
    DenseOperator {
        data: m,
        dims: vec![dim],
    }
}

/// Position and momentum of an oscillator of frequency `nu`:
/// `x = (b + b†)/√(2ν)`, `p = i√(ν/2)(b† − b)`.
pub fn quadratures(dim: usize, nu: f64) -> Result<(DenseOperator, DenseOperator)> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter {
            name: "nu",
            reason: format!("oscillator frequency must be positive, got {nu}"),
        });
    }
    let b = annihilation(dim)?;
    let bd = b.dagger();
    let x = (&b + &bd).scale_real(1.0 / (2.0 * nu).sqrt());
    let p = (&bd - &b).scale(Complex64::new(0.0, (nu / 2.0).sqrt()));
    Ok((x, p))
}

/// `D[L]ρ = 2LρL† − L†Lρ − ρL†L`.
pub fn dissipator(l: &DenseOperator, rho: &DenseOperator) -> Result<DenseOperator> {
    l.check_same(rho)?;
    let ld = l.data.adjoint();
    let ldl = &ld * &l.data;
    let data = (&l.data * &rho.data * &ld) * Complex64::new(2.0, 0.0)
        - &ldl * &rho.data
        - &rho.data * &ldl;
    Ok(DenseOperator {
        data,
        dims: rho.dims.clone(),
    })
}

/// Kronecker product; dims are concatenated.
pub fn tensor(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    DenseOperator {
        data: a.data.kronecker(&b.data),
        dims,
    }
}

pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    a.check_same(b)?;
    Ok(DenseOperator {
        data: &a.data * &b.data - &b.data * &a.data,
        dims: a.dims.clone(),
    })
}

/// `Tr[Aρ]`
pub fn expectation(a: &DenseOperator, rho: &DenseOperator) -> Result<Complex64> {
    a.check_same(rho)?;
    let n = a.size();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a.data[(i, k)] * rho.data[(k, i)];
        }
    }
    Ok(acc)
}

/// Thermal state with mean occupation `nbar`, normalised on the truncated space.
pub fn thermal_state(dim: usize, nbar: f64) -> DenseOperator {
    let mut m = CMatrix::zeros(dim, dim);
    if nbar <= 0.0 {
        m[(0, 0)] = ONE;
    } else {
        let q = nbar / (nbar + 1.0);
        let weights: Vec<f64> = (0..dim).map(|k| q.powi(k as i32) / (nbar + 1.0)).collect();
        let total: f64 = weights.iter().sum();
        for (k, w) in weights.iter().enumerate() {
            m[(k, k)] = Complex64::new(w / total, 0.0);
        }
    }
    DenseOperator {
        data: m,
        dims: vec![dim],
    }
}

/// Fock projector `|k⟩⟨k|`.
pub fn fock_state(dim: usize, k: usize) -> DenseOperator {
    DenseOperator::ket_bra(dim, k, k)
}

/// Tolerances applied by [`DensityMatrix`] validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityTolerance {
    pub hermiticity: f64,
    pub trace: f64,
    /// Smallest admissible eigenvalue (negative).
    pub min_eigenvalue: f64,
}

impl Default for ValidityTolerance {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            trace: 1e-8,
            min_eigenvalue: -1e-8,
        }
    }
}

impl ValidityTolerance {
    /// Relaxed positivity bound used for long integrations.
    pub fn long_run() -> Self {
        Self {
            min_eigenvalue: -1e-6,
            hermiticity: 1e-9,
            trace: 1e-7,
        }
    }
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// A validated density matrix with a timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: DenseOperator,
    pub time: f64,
}

impl DensityMatrix {
    pub fn new(op: DenseOperator, time: f64) -> Result<Self> {
        Self::with_tolerance(op, time, ValidityTolerance::default())
    }

    pub fn with_tolerance(op: DenseOperator, time: f64, tol: ValidityTolerance) -> Result<Self> {
        check_density(&op, tol)?;
        Ok(Self { op, time })
    }

    /// Wraps without validation; used on integrator output that is checked
    /// separately.
    pub(crate) fn unchecked(op: DenseOperator, time: f64) -> Self {
        Self { op, time }
    }

    pub fn op(&self) -> &DenseOperator {
        &self.op
    }

    pub fn into_op(self) -> DenseOperator {
        self.op
    }

    pub fn dims(&self) -> &[usize] {
        self.op.dims()
    }

    /// Product state of per-subsystem density matrices.
    pub fn product(parts: &[DenseOperator], time: f64) -> Result<Self> {
        let mut it = parts.iter();
        let first = it.next().ok_or_else(|| Error::InvalidState("no subsystems".into()))?;
        let op = it.fold(first.clone(), |acc, p| tensor(&acc, p));
        Self::new(op, time)
    }
}

pub fn check_density(op: &DenseOperator, tol: ValidityTolerance) -> Result<()> {
    let herm = op.hermiticity_error();
    if herm > tol.hermiticity {
        return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
    }
    let tr = op.trace();
    if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let min_eig = min_hermitian_eigenvalue(op.matrix());
    if min_eig < tol.min_eigenvalue {
        return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Random Hermitian, positive, unit-trace matrix.
    fn random_density(dim: usize, seed: &[f64]) -> DenseOperator {
        let mut a = CMatrix::zeros(dim, dim);
        let mut k = 0;
        for i in 0..dim {
            for j in 0..dim {
                a[(i, j)] = Complex64::new(seed[k % seed.len()], seed[(k + 7) % seed.len()]);
                k += 1;
            }
        }
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        DenseOperator::from_matrix(rho / tr).unwrap()
    }

    #[test]
    fn annihilation_dim2() {
        let a = annihilation(2).unwrap();
        assert_eq!(a.matrix()[(0, 1)], c(1.0));
        assert_eq!(a.matrix()[(0, 0)], c(0.0));
        assert_eq!(a.matrix()[(1, 0)], c(0.0));
        assert_eq!(a.matrix()[(1, 1)], c(0.0));
        assert!(annihilation(1).is_err());
    }

    #[test]
    fn ladder_commutator_and_vacuum() {
        let dim = 6;
        let a = annihilation(dim).unwrap();
        let comm = commutator(&a, &a.dagger()).unwrap();
        for k in 0..dim - 1 {
            assert!((comm.matrix()[(k, k)] - c(1.0)).norm() < 1e-14);
        }
        assert!((comm.matrix()[(dim - 1, dim - 1)] - c(1.0 - dim as f64)).norm() < 1e-12);
        let vac = a.matrix().column(0).into_owned();
        assert!(vac.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn quadrature_properties() {
        let dim = 8;
        let nu = 1.7;
        let (x, p) = quadratures(dim, nu).unwrap();
        let comm = commutator(&x, &p).unwrap();
        let block = comm.leading_block(dim - 1);
        for i in 0..dim - 1 {
            for j in 0..dim - 1 {
                let want = if i == j { Complex64::i() } else { ZERO };
                assert!((block[(i, j)] - want).norm() < 1e-12);
            }
        }
        let energy = &(&p * &p).scale_real(0.5) + &(&x * &x).scale_real(0.5 * nu * nu);
        assert!((energy.matrix()[(0, 0)] - c(nu / 2.0)).norm() < 1e-12);

        let (x1, _) = quadratures(2, 1.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((x1.matrix()[(0, 1)] - c(s)).norm() < 1e-15);
        assert!((x1.matrix()[(1, 0)] - c(s)).norm() < 1e-15);
    }

    #[test]
    fn dissipator_examples() {
        let dim = 4;
        let a = annihilation(dim).unwrap();
        let vac = fock_state(dim, 0);
        assert!(dissipator(&a, &vac).unwrap().max_abs() < 1e-15);
        let one = fock_state(dim, 1);
        let d = dissipator(&a, &one).unwrap();
        let want = &vac.scale_real(2.0) - &one.scale_real(2.0);
        assert!((&d - &want).max_abs() < 1e-14);
        assert!(dissipator(&a, &fock_state(3, 0)).is_err());
    }

    #[test]
    fn tensor_and_expectation() {
        let i6 = tensor(&DenseOperator::identity(&[2]), &DenseOperator::identity(&[3]));
        assert_eq!(i6.matrix(), &CMatrix::identity(6, 6));
        assert_eq!(i6.dims(), &[2, 3]);
        let a = annihilation(5).unwrap();
        assert!(commutator(&a, &a).unwrap().max_abs() == 0.0);
        let n = &a.dagger() * &a;
        let e = expectation(&n, &fock_state(5, 2)).unwrap();
        assert!((e - c(2.0)).norm() < 1e-14);
        assert!(expectation(&n, &fock_state(4, 2)).is_err());
    }

    #[test]
    fn number_matches_ladder_product() {
        let a = annihilation(7).unwrap();
        let n = &a.dagger() * &a;
        assert!((&n - &number(7)).max_abs() < 1e-14);
    }

    #[test]
    fn density_validation() {
        for nbar in [0.0, 0.3, 1.0, 1.6] {
            let rho = thermal_state(16, nbar);
            assert!(DensityMatrix::new(rho, 0.0).is_ok(), "nbar={nbar}");
        }
        let mut m = thermal_state(4, 0.5).into_matrix();
        let last = m[(3, 3)].re;
        m[(3, 3)] -= c(1e-3 + last);
        m[(0, 0)] += c(1e-3 + 0.0);
        let tr = m.trace();
        m[(1, 1)] += c(1.0) - tr;
        let op = DenseOperator::from_matrix(m).unwrap();
        assert!(matches!(DensityMatrix::new(op, 0.0), Err(Error::InvalidState(_))));

        let mut not_herm = thermal_state(3, 0.2).into_matrix();
        not_herm[(0, 1)] = Complex64::new(0.0, 0.1);
        assert!(DensityMatrix::new(DenseOperator::from_matrix(not_herm).unwrap(), 0.0).is_err());
    }

    #[test]
    fn tensor_dims_checked() {
        let m = CMatrix::identity(6, 6);
        assert!(DenseOperator::new(m.clone(), vec![2, 3]).is_ok());
        assert!(DenseOperator::new(m, vec![2, 2]).is_err());
    }

    proptest! {
        #[test]
        fn dissipator_is_traceless(seed in proptest::collection::vec(-1.0f64..1.0, 16..40)) {
            let dim = 5;
            let rho = random_density(dim, &seed);
            let a = annihilation(dim).unwrap();
            for l in [a.clone(), a.dagger(), &a + &(&a.dagger() * &a)] {
                let d = dissipator(&l, &rho).unwrap();
                prop_assert!(d.trace().norm() < 1e-12);
            }
        }

        #[test]
        fn tensor_is_associative(vals in proptest::collection::vec(-8i32..8, 34)) {
            // integer entries keep every product exact
            let mk = |dim: usize, off: usize| {
                let m = CMatrix::from_fn(dim, dim, |i, j| {
                    let k = off + i * dim + j;
                    Complex64::new(vals[k % vals.len()] as f64, vals[(k + 3) % vals.len()] as f64)
                });
                DenseOperator::from_matrix(m).unwrap()
            };
            let (a, b, cc) = (mk(2, 0), mk(3, 4), mk(2, 13));
            let left = tensor(&tensor(&a, &b), &cc);
            let right = tensor(&a, &tensor(&b, &cc));
            prop_assert_eq!(left.matrix(), right.matrix());
            prop_assert_eq!(left.dims(), right.dims());
        }
    }
}
