//! Damping basis of the leaky cavity.
//!
//! The generator is `L ρ = iω_c[a†a, ρ] + (κ/2)(n_p+1)D[a]ρ + (κ/2)n_p D[a†]ρ`
//! (the coherent part of `H = −ω_c a†a`, which is how the cavity enters the
//! displaced-frame model). Its right eigenoperators ρ̂ and left
//! eigenoperators ρ̌ are labelled by a radial index `n ≥ 0` and a winding
//! index `j`, with eigenvalue `ijω_c − κ(n + |j|/2)`.
//!
//! Both families are banded: ρ̂ lives on the `j`-th off-diagonal. The
//! diagonal entries of the normal-ordered Laguerre expressions are evaluated
//! exactly from the polynomial coefficients.

use nalgebra::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{annihilation, CMatrix, DenseOperator};

const I: Complex64 = Complex64::new(0.0, 1.0);
const TWO: Complex64 = Complex64::new(2.0, 0.0);

/// One member of the damping basis.
#[derive(Debug, Clone)]
pub struct DampingEigenstate {
    pub n: usize,
    pub j: i64,
    pub right: DenseOperator,
    pub left: DenseOperator,
    pub eigenvalue: Complex64,
}

/// `λ = ijω_c − κ(n + |j|/2)`.
pub fn eigenvalue(n: usize, j: i64, omega_c: f64, kappa: f64) -> Complex64 {
    Complex64::new(-kappa * (n as f64 + 0.5 * j.unsigned_abs() as f64), j as f64 * omega_c)
}

/// Generalised Laguerre polynomial `L_n^α(x)` by the three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Power-series coefficients of `L_n^j(x)` for integer `j ≥ 0`:
/// `c_k = (−1)^k C(n+j, n−k) / k!`.
pub fn laguerre_coefficients(n: usize, j: usize) -> Vec<f64> {
    let mut fact = 1.0;
    (0..=n)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n + j, n - k) / fact
        })
        .collect()
}

/// `√((m+j)!/m!)`
fn ladder_weight(m: usize, j: usize) -> f64 {
    (1..=j).map(|i| ((m + i) as f64).sqrt()).product()
}

fn check_index(n: usize, j: i64, dim: usize) -> Result<usize> {
    let ja = j.unsigned_abs() as usize;
    if n + ja >= dim {
        return Err(Error::IndexOutOfTruncation { n, j, dim });
    }
    Ok(ja)
}

fn check_occupancy(n_p: f64) -> Result<()> {
    if n_p >= 0.0 && n_p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "n_p",
            reason: format!("bath occupation must be non-negative, got {n_p}"),
        })
    }
}

/// Places `values[m]` at `(m + j, m)` for `j ≥ 0` or `(m, m + |j|)` for `j < 0`.
fn banded(values: &[f64], j: i64, dim: usize, transpose: bool) -> DenseOperator {
    let ja = j.unsigned_abs() as usize;
    let mut m = CMatrix::zeros(dim, dim);
    for (k, &v) in values.iter().enumerate() {
        let (lo, hi) = (k, k + ja);
        let below = (j >= 0) != transpose;
        if below {
            m[(hi, lo)] = Complex64::new(v, 0.0);
        } else {
            m[(lo, hi)] = Complex64::new(v, 0.0);
        }
    }
    DenseOperator::new(m, vec![dim]).expect("square by construction")
}

/// Right eigenoperator ρ̂_n^j on a `dim`-level cavity.
pub fn right_state(n: usize, j: i64, n_p: f64, dim: usize) -> Result<DenseOperator> {
    let ja = check_index(n, j, dim)?;
    check_occupancy(n_p)?;
    let c = 1.0 / (n_p + 1.0);
    let coeffs = laguerre_coefficients(n, ja);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let pre = sign * c.powi(ja as i32 + 1);
    let values: Vec<f64> = (0..dim - ja)
        .map(|m| {
            // ⟨m|:(a†a)^k e^{−c a†a}:|m⟩ = m!/(m−k)! (1−c)^{m−k}
            let mut falling = 1.0;
            let mut sum = 0.0;
            for (k, &ck) in coeffs.iter().enumerate().take(m.min(n) + 1) {
                if k > 0 {
                    falling *= (m + 1 - k) as f64;
                }
                sum += ck * c.powi(k as i32) * falling * (1.0 - c).powi((m - k) as i32);
            }
            pre * sum * ladder_weight(m, ja)
        })
        .collect();
    Ok(banded(&values, j, dim, false))
}

/// Left eigenoperator ρ̌_n^j, dual to [`right_state`].
pub fn left_state(n: usize, j: i64, n_p: f64, dim: usize) -> Result<DenseOperator> {
    let ja = check_index(n, j, dim)?;
    check_occupancy(n_p)?;
    let norm: f64 = (n + 1..=n + ja).map(|i| i as f64).product::<f64>().recip();
    let q = n_p / (n_p + 1.0);
    let values: Vec<f64> = (0..dim - ja)
        .map(|m| {
            let mut sum = 0.0;
            for k in 0..=n.min(m) {
                let sign = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
                sum += sign
                    * q.powi((n - k) as i32)
                    * (n_p + 1.0).powi(-(k as i32))
                    * binomial(n + ja, n - k)
                    * binomial(m, k);
            }
            norm * sum * ladder_weight(m, ja)
        })
        .collect();
    Ok(banded(&values, j, dim, true))
}

/// Right and left eigenoperators with their eigenvalue.
pub fn damping_eigenstate(
    n: usize,
    j: i64,
    omega_c: f64,
    kappa: f64,
    n_p: f64,
    dim: usize,
) -> Result<DampingEigenstate> {
    Ok(DampingEigenstate {
        n,
        j,
        right: right_state(n, j, n_p, dim)?,
        left: left_state(n, j, n_p, dim)?,
        eigenvalue: eigenvalue(n, j, omega_c, kappa),
    })
}

/// Undamped mechanical eigenoperators `|n+l⟩⟨n|` (left: `|n⟩⟨n+l|`) of
/// `iν0[b†b, ·]`, eigenvalue `ilν0`.
pub fn mechanical_eigenstates(n: usize, l: i64, nu0: f64, dim: usize) -> Result<DampingEigenstate> {
    let row = n as i64 + l;
    if row < 0 || row as usize >= dim || n >= dim {
        return Err(Error::IndexOutOfTruncation { n, j: l, dim });
    }
    let right = DenseOperator::ket_bra(dim, row as usize, n);
    Ok(DampingEigenstate {
        n,
        j: l,
        left: right.dagger(),
        right,
        eigenvalue: Complex64::new(0.0, l as f64 * nu0),
    })
}

/// Cavity generator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGenerator {
    pub omega_c: f64,
    pub kappa: f64,
    pub n_p: f64,
    pub dim: usize,
}

impl CavityGenerator {
    fn ops(&self) -> Result<(CMatrix, CMatrix, CMatrix, CMatrix)> {
        let a = annihilation(self.dim)?.into_matrix();
        let ad = a.adjoint();
        let n = &ad * &a;
        let aad = &a * &ad;
        Ok((a, ad, n, aad))
    }

    fn rates(&self) -> (f64, f64) {
        (0.5 * self.kappa * (self.n_p + 1.0), 0.5 * self.kappa * self.n_p)
    }

    /// `L ρ`
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let (a, ad, n, aad) = self.ops()?;
        let (r1, r2) = self.rates();
        let mut out = (&n * rho - rho * &n) * (I * self.omega_c);
        out += (&a * rho * &ad * TWO - &n * rho - rho * &n) * Complex64::from(r1);
        out += (&ad * rho * &a * TWO - &aad * rho - rho * &aad) * Complex64::from(r2);
        Ok(out)
    }

    /// Dual action `L^‡(A)` defined by `Tr[A L(X)] = Tr[L^‡(A) X]`.
    pub fn apply_dual(&self, x: &CMatrix) -> Result<CMatrix> {
        let (a, ad, n, aad) = self.ops()?;
        let (r1, r2) = self.rates();
        let mut out = (x * &n - &n * x) * (I * self.omega_c);
        out += (&ad * x * &a * TWO - x * &n - &n * x) * Complex64::from(r1);
        out += (&a * x * &ad * TWO - x * &aad - &aad * x) * Complex64::from(r2);
        Ok(out)
    }

    /// Superoperator matrix acting on row-major vectorised density matrices.
    pub fn superoperator(&self) -> Result<CMatrix> {
        let d = self.dim;
        let mut s = CMatrix::zeros(d * d, d * d);
        for col in 0..d * d {
            let mut e = CMatrix::zeros(d, d);
            e[(col / d, col % d)] = Complex64::new(1.0, 0.0);
            let img = self.apply(&e)?;
            for r in 0..d * d {
                s[(r, col)] = img[(r / d, r % d)];
            }
        }
        Ok(s)
    }

    /// Eigenvalues of the truncated superoperator (complex Schur form).
    pub fn spectrum(&self) -> Result<Vec<Complex64>> {
        let s = self.superoperator()?;
        let schur = Schur::try_new(s, 1e-14, 10_000).ok_or_else(|| {
            Error::InvalidState("Schur decomposition did not converge".into())
        })?;
        let (_, t) = schur.unpack();
        Ok((0..t.nrows()).map(|k| t[(k, k)]).collect())
    }
}

/// Largest entry of `m` on the leading `k × k` block.
pub fn block_max(m: &CMatrix, k: usize) -> f64 {
    m.view((0, 0), (k, k)).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Residuals `‖Lρ̂ − λρ̂‖` and `‖L^‡ρ̌ − λρ̌‖` on the Fock levels below the
/// cutoff level (the truncated ladder operators are wrong there).
pub fn eigen_residuals(gen: &CavityGenerator, state: &DampingEigenstate) -> Result<(f64, f64)> {
    let lam = state.eigenvalue;
    let r = gen.apply(state.right.matrix())? - state.right.matrix() * lam;
    let l = gen.apply_dual(state.left.matrix())? - state.left.matrix() * lam;
    let k = gen.dim - 1;
    Ok((block_max(&r, k), block_max(&l, k)))
}

/// `Tr[ρ̂ ρ̌]`
pub fn pairing(right: &DenseOperator, left: &DenseOperator) -> Complex64 {
    (right.matrix() * left.matrix()).trace()
}

/// Rebuilds `x` from its damping-basis coefficients `Tr[ρ̌ x]`, summing over
/// every index pair that fits in the truncation.
pub fn reconstruct(x: &CMatrix, n_p: f64, dim: usize) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(dim, dim);
    for n in 0..dim {
        let jmax = (dim - 1 - n) as i64;
        for j in -jmax..=jmax {
            let right = right_state(n, j, n_p, dim)?;
            let left = left_state(n, j, n_p, dim)?;
            let coef = (left.matrix() * x).trace();
            out += right.matrix() * coef;
        }
    }
    Ok(out)
}
