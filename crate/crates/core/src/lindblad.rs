//! Brute-force integration of the full master equation on the truncated
//! `cavity ⊗ mechanics` space.
//!
//! The generator is assembled from a fixed set of sparse ladder monomials
//! (`a†a`, `b†b`, `a⊗b†`, ...) whose time-dependent weights are recomputed at
//! every right-hand-side call. Writing `H_eff = H − i Σ r_k L_k†L_k`, the
//! equation of motion is
//!
//! `dρ/dt = −i H_eff ρ + (−i H_eff ρ)† + Σ 2 r_k L_k ρ L_k†`,
//!
//! which only needs sparse-times-dense products. By default the state is
//! propagated in the interaction picture of `H0 = −δ a†a + ν0 b†b`; since
//! `H0` is diagonal in the Fock basis the populations, traces and
//! expectation values of the number-type observables are frame independent.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::floquet::MechanicalDrive;
use crate::model::{floquet_coefficients, gamma_op, interaction_weight, ModelParams};
use crate::ode::Dopri5;
use crate::operators::{
    annihilation, check_density, expectation, min_hermitian_eigenvalue, tensor,
    CMatrix, DenseOperator, DensityMatrix, ValidityTolerance,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sampled time evolution.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Stored states (empty unless requested, see [`EvolveOptions::keep_states`]).
    pub states: Vec<DensityMatrix>,
    /// Observable name → one value per entry of `times`.
    pub observables: BTreeMap<String, Vec<f64>>,
    /// Samples before this time belong to the transient.
    pub transient_end: f64,
    /// State at the last sample time.
    pub final_state: Option<DensityMatrix>,
}

impl Trajectory {
    pub fn observable(&self, name: &str) -> Result<&[f64]> {
        self.observables
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownObservable(name.to_string()))
    }

    /// Largest `|Tr ρ − 1|` over all samples.
    pub fn max_trace_error(&self) -> f64 {
        self.observables
            .get("trace_err")
            .map(|v| v.iter().fold(0.0, |m: f64, x| m.max(*x)))
            .unwrap_or(0.0)
    }

    /// Writes `time,m_mech,n_cav,trace_err`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,m_mech,n_cav,trace_err")?;
        let cols: Vec<&[f64]> = ["m_mech", "n_cav", "trace_err"]
            .iter()
            .map(|k| self.observables.get(*k).map(Vec::as_slice).unwrap_or(&[]))
            .collect();
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{t:.12e}")?;
            for c in &cols {
                match c.get(i) {
                    Some(v) => write!(out, ",{v:.12e}")?,
                    None => write!(out, ",NaN")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Reference frame used for propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    /// Interaction picture of the bare cavity and mechanical energies.
    Rotating,
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub t_end: f64,
    pub sample_dt: f64,
    /// Samples are recorded every `sample_dt` from this time on (the initial
    /// state is always recorded).
    pub record_from: f64,
    /// Marks the end of the transient on the returned trajectory.
    pub transient_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub keep_states: bool,
    /// Positivity is checked at every `positivity_stride`-th sample and at the
    /// end.
    pub positivity_stride: usize,
    pub positivity_floor: f64,
    pub frame: Frame,
}

impl EvolveOptions {
    pub fn new(t_end: f64, sample_dt: f64) -> Self {
        Self {
            t_end,
            sample_dt,
            record_from: 0.0,
            transient_end: 0.0,
            rtol: 1e-8,
            atol: 1e-10,
            keep_states: false,
            positivity_stride: 64,
            positivity_floor: -1e-4,
            frame: Frame::Rotating,
        }
    }
}

/// Row-compressed sparse matrix on a union pattern shared by several terms.
#[derive(Debug, Clone)]
struct TermSet {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// One value array per term, aligned with `cols`.
    terms: Vec<Vec<Complex64>>,
    /// Interaction-picture frequency of each term.
    freqs: Vec<f64>,
}

impl TermSet {
    fn new(mats: &[&CMatrix], energies: &[f64]) -> Self {
        let n = mats[0].nrows();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if mats.iter().any(|m| m[(r, c)] != ZERO) {
                    cols.push(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let mut terms = Vec::with_capacity(mats.len());
        let mut freqs = Vec::with_capacity(mats.len());
        for m in mats {
            let mut vals = vec![ZERO; cols.len()];
            let mut freq = None;
            for r in 0..n {
                for idx in row_ptr[r]..row_ptr[r + 1] {
                    let v = m[(r, cols[idx])];
                    vals[idx] = v;
                    if v != ZERO && freq.is_none() {
                        freq = Some(energies[r] - energies[cols[idx]]);
                    }
                }
            }
            terms.push(vals);
            freqs.push(freq.unwrap_or(0.0));
        }
        Self {
            n,
            row_ptr,
            cols,
            terms,
            freqs,
        }
    }

    fn assemble(&self, coeffs: &[Complex64], t: f64, frame: Frame, out: &mut Vec<Complex64>) {
        out.clear();
        out.resize(self.cols.len(), ZERO);
        for ((vals, &c), &w) in self.terms.iter().zip(coeffs).zip(&self.freqs) {
            if c == ZERO {
                continue;
            }
            let c = match frame {
                Frame::Lab => c,
                Frame::Rotating => c * Complex64::from_polar(1.0, w * t),
            };
            for (o, v) in out.iter_mut().zip(vals) {
                *o += c * v;
            }
        }
    }

    /// `out += alpha · S · x` for row-major `x`.
    fn left_mul_add(&self, vals: &[Complex64], x: &[Complex64], out: &mut [Complex64], alpha: Complex64) {
        let n = self.n;
        for r in 0..n {
            let orow = &mut out[r * n..(r + 1) * n];
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                let s = alpha * vals[idx];
                let k = self.cols[idx];
                let xrow = &x[k * n..(k + 1) * n];
                for (o, xv) in orow.iter_mut().zip(xrow) {
                    *o += s * xv;
                }
            }
        }
    }

    /// `out += alpha · x · S†` for row-major `x`.
    fn right_mul_adj_add(&self, vals: &[Complex64], x: &[Complex64], out: &mut [Complex64], alpha: Complex64) {
        let n = self.n;
        for i in 0..n {
            let xrow = &x[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (j, o) in orow.iter_mut().enumerate() {
                let mut acc = ZERO;
                for idx in self.row_ptr[j]..self.row_ptr[j + 1] {
                    acc += xrow[self.cols[idx]] * vals[idx].conj();
                }
                *o += alpha * acc;
            }
        }
    }

    /// `Tr[S x]`
    fn trace_with(&self, vals: &[Complex64], x: &[Complex64]) -> Complex64 {
        let n = self.n;
        let mut acc = ZERO;
        for r in 0..n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += vals[idx] * x[self.cols[idx] * n + r];
            }
        }
        acc
    }
}

// Term order inside the Hamiltonian set.
const T_NA: usize = 0;
const T_AAD: usize = 1;
const T_BDB: usize = 2;
const T_BBD: usize = 3;
const T_BDBD: usize = 4;
const T_BB: usize = 5;
const T_A_B: usize = 6;
const T_A_BD: usize = 7;
const T_AD_B: usize = 8;
const T_AD_BD: usize = 9;

/// Sparse, time-dependent generator of the full model.
#[derive(Debug, Clone)]
pub struct FastGenerator {
    params: ModelParams,
    frame: Frame,
    n: usize,
    energies: Vec<f64>,
    ham: TermSet,
    /// `1⊗b`, `1⊗b†`
    mech: TermSet,
    /// `a⊗1`, `a†⊗1`
    cav: TermSet,
    heff_vals: Vec<Complex64>,
    jump_vals: Vec<Complex64>,
    scratch: Vec<Complex64>,
    cav_a: Vec<Complex64>,
    cav_ad: Vec<Complex64>,
}

impl FastGenerator {
    pub fn new(params: &ModelParams, frame: Frame) -> Result<Self> {
        params.validate()?;
        let (dc, dm) = (params.cav_dim, params.mech_dim);
        let ic = DenseOperator::identity(&[dc]);
        let im = DenseOperator::identity(&[dm]);
        let a = annihilation(dc)?;
        let b = annihilation(dm)?;
        let ad = a.dagger();
        let bd = b.dagger();
        let full = |x: &DenseOperator, y: &DenseOperator| tensor(x, y).into_matrix();
        let ham_ops = [
            full(&(&ad * &a), &im),
            full(&(&a * &ad), &im),
            full(&ic, &(&bd * &b)),
            full(&ic, &(&b * &bd)),
            full(&ic, &(&bd * &bd)),
            full(&ic, &(&b * &b)),
            full(&a, &b),
            full(&a, &bd),
            full(&ad, &b),
            full(&ad, &bd),
        ];
        let mech_ops = [full(&ic, &b), full(&ic, &bd)];
        let cav_ops = [full(&a, &im), full(&ad, &im)];
        let energies: Vec<f64> = (0..dc * dm)
            .map(|k| -params.cavity.delta * (k / dm) as f64 + params.drive.nu0 * (k % dm) as f64)
            .collect();
        let ham = TermSet::new(&ham_ops.iter().collect::<Vec<_>>(), &energies);
        let mech = TermSet::new(&mech_ops.iter().collect::<Vec<_>>(), &energies);
        let cav = TermSet::new(&cav_ops.iter().collect::<Vec<_>>(), &energies);
        let mut cav_a = Vec::new();
        let mut cav_ad = Vec::new();
        cav.assemble(&[Complex64::new(1.0, 0.0), ZERO], 0.0, Frame::Lab, &mut cav_a);
        cav.assemble(&[ZERO, Complex64::new(1.0, 0.0)], 0.0, Frame::Lab, &mut cav_ad);
        let n = dc * dm;
        Ok(Self {
            params: *params,
            frame,
            n,
            energies,
            ham,
            mech,
            cav,
            heff_vals: Vec::new(),
            jump_vals: Vec::new(),
            scratch: vec![ZERO; n * n],
            cav_a,
            cav_ad,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    fn rates(&self) -> [f64; 4] {
        let c = &self.params.cavity;
        let d = &self.params.drive;
        [
            0.5 * c.kappa * (c.n_p + 1.0),
            0.5 * c.kappa * c.n_p,
            0.5 * d.gamma * (d.n_m + 1.0),
            0.5 * d.gamma * d.n_m,
        ]
    }

    /// Weights of the Hamiltonian terms and of `(u, v)` at time `t`.
    fn coefficients(&self, t: f64, with_decay: bool) -> ([Complex64; 10], Complex64, Complex64) {
        let p = &self.params;
        let (u, v) = floquet_coefficients(&p.drive, t).expect("validated drive");
        let c = interaction_weight(&p.drive, t).expect("validated drive");
        let nu0 = p.drive.nu0;
        let g = p.coupling.g_eff;
        let ph = p.coupling.phase();
        let pw = c * u + c.conj() * v.conj();
        let qw = c * v + c.conj() * u.conj();
        let uu = u.norm_sqr();
        let vv = v.norm_sqr();
        let mut k = [ZERO; 10];
        k[T_NA] = Complex64::from(-p.cavity.delta);
        k[T_BDB] = Complex64::from(nu0 * uu);
        k[T_BBD] = Complex64::from(nu0 * vv);
        k[T_BDBD] = nu0 * u.conj() * v;
        k[T_BB] = nu0 * v.conj() * u;
        k[T_A_B] = -g * ph.conj() * pw;
        k[T_A_BD] = -g * ph.conj() * qw;
        k[T_AD_B] = -g * ph * pw;
        k[T_AD_BD] = -g * ph * qw;
        if self.frame == Frame::Rotating {
            k[T_NA] -= -p.cavity.delta;
            k[T_BDB] -= nu0;
        }
        if with_decay {
            let [r1, r2, r3, r4] = self.rates();
            k[T_NA] -= I * r1;
            k[T_AAD] -= I * r2;
            k[T_BDB] -= I * (r3 * uu + r4 * vv);
            k[T_BBD] -= I * (r3 * vv + r4 * uu);
            k[T_BDBD] -= I * (r3 + r4) * u.conj() * v;
            k[T_BB] -= I * (r3 + r4) * v.conj() * u;
        }
        (k, u, v)
    }

    /// `dρ/dt` for a row-major `ρ`.
    pub fn rhs(&mut self, t: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let (k, u, v) = self.coefficients(t, true);
        let mut heff = std::mem::take(&mut self.heff_vals);
        self.ham.assemble(&k, t, self.frame, &mut heff);

        out.iter_mut().for_each(|z| *z = ZERO);
        let [r1, r2, r3, r4] = self.rates();
        let mut jump = std::mem::take(&mut self.jump_vals);
        if r1 != 0.0 {
            self.sandwich(JumpKind::CavA, &jump, rho, out, 2.0 * r1);
        }
        if r2 != 0.0 {
            self.sandwich(JumpKind::CavAd, &jump, rho, out, 2.0 * r2);
        }
        if r3 != 0.0 {
            self.mech.assemble(&[u, v], t, self.frame, &mut jump);
            self.sandwich(JumpKind::Mech, &jump, rho, out, 2.0 * r3);
        }
        if r4 != 0.0 {
            self.mech.assemble(&[v.conj(), u.conj()], t, self.frame, &mut jump);
            self.sandwich(JumpKind::Mech, &jump, rho, out, 2.0 * r4);
        }
        self.jump_vals = jump;

        // the output is made exactly Hermitian: rounding would otherwise seed
        // an anti-Hermitian part that the jump terms alone amplify
        let y = &mut self.scratch;
        y.iter_mut().for_each(|z| *z = ZERO);
        self.ham.left_mul_add(&heff, rho, y, -I);
        for i in 0..n {
            out[i * n + i] = Complex64::from(2.0 * y[i * n + i].re + out[i * n + i].re);
            for j in i + 1..n {
                let jump = 0.5 * (out[i * n + j] + out[j * n + i].conj());
                let a = y[i * n + j] + y[j * n + i].conj() + jump;
                out[i * n + j] = a;
                out[j * n + i] = a.conj();
            }
        }
        self.heff_vals = heff;
    }

    fn sandwich(&mut self, kind: JumpKind, vals: &[Complex64], rho: &[Complex64], out: &mut [Complex64], w: f64) {
        let (set, vals) = match kind {
            JumpKind::CavA => (&self.cav, self.cav_a.as_slice()),
            JumpKind::CavAd => (&self.cav, self.cav_ad.as_slice()),
            JumpKind::Mech => (&self.mech, vals),
        };
        let y = &mut self.scratch;
        y.iter_mut().for_each(|z| *z = ZERO);
        set.left_mul_add(vals, rho, y, Complex64::from(w));
        set.right_mul_adj_add(vals, y, out, Complex64::new(1.0, 0.0));
    }

    /// `⟨Γ†Γ⟩`, `⟨a†a⟩` and `⟨b†b⟩` for a state in this generator's frame.
    pub fn observables(&self, t: f64, rho: &[Complex64]) -> (f64, f64, f64) {
        let (u, v) = floquet_coefficients(&self.params.drive, t).expect("validated drive");
        let mut k = [ZERO; 10];
        k[T_BDB] = Complex64::from(u.norm_sqr());
        k[T_BBD] = Complex64::from(v.norm_sqr());
        k[T_BDBD] = u.conj() * v;
        k[T_BB] = v.conj() * u;
        let mut vals = Vec::new();
        self.ham.assemble(&k, t, self.frame, &mut vals);
        let m = self.ham.trace_with(&vals, rho).re;
        let mut unit = [ZERO; 10];
        unit[T_NA] = Complex64::new(1.0, 0.0);
        self.ham.assemble(&unit, t, Frame::Lab, &mut vals);
        let nc = self.ham.trace_with(&vals, rho).re;
        unit[T_NA] = ZERO;
        unit[T_BDB] = Complex64::new(1.0, 0.0);
        self.ham.assemble(&unit, t, Frame::Lab, &mut vals);
        let nb = self.ham.trace_with(&vals, rho).re;
        (m, nc, nb)
    }

    /// Converts a row-major state between the lab frame and this generator's
    /// frame (`to_lab = false` goes lab → frame).
    pub fn transform(&self, t: f64, rho: &[Complex64], to_lab: bool) -> Vec<Complex64> {
        let n = self.n;
        if self.frame == Frame::Lab {
            return rho.to_vec();
        }
        let sign = if to_lab { -1.0 } else { 1.0 };
        let ph: Vec<Complex64> = self
            .energies
            .iter()
            .map(|e| Complex64::from_polar(1.0, sign * e * t))
            .collect();
        let mut out = rho.to_vec();
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] *= ph[i] * ph[j].conj();
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
enum JumpKind {
    CavA,
    CavAd,
    Mech,
}

fn to_row_major(m: &CMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            out.push(m[(r, c)]);
        }
    }
    out
}

fn from_row_major(v: &[Complex64], n: usize) -> CMatrix {
    CMatrix::from_row_slice(n, n, v)
}

/// Integrates the master equation, sampling every `sample_dt`.
pub fn evolve(rho0: &DensityMatrix, params: &ModelParams, t_end: f64, sample_dt: f64) -> Result<Trajectory> {
    evolve_with(rho0, params, &EvolveOptions::new(t_end, sample_dt))
}

/// Integrates the master equation with explicit options.
pub fn evolve_with(rho0: &DensityMatrix, params: &ModelParams, opts: &EvolveOptions) -> Result<Trajectory> {
    let mut gen = FastGenerator::new(params, opts.frame)?;
    let n = gen.size();
    if rho0.dims() != params.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", params.dims()),
            found: format!("{:?}", rho0.dims()),
        });
    }
    let t0 = rho0.time;
    if !(opts.t_end > t0) || !(opts.sample_dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("need t_end > {t0} and sample_dt > 0"),
        });
    }

    let start = opts.record_from.max(t0);
    let mut t_out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = start + k as f64 * opts.sample_dt;
        if t >= opts.t_end - 1e-9 * opts.sample_dt {
            break;
        }
        if t > t0 {
            t_out.push(t);
        }
        k += 1;
    }
    t_out.push(opts.t_end);

    let mut traj = Trajectory {
        transient_end: opts.transient_end,
        ..Default::default()
    };
    let y0 = gen.transform(t0, &to_row_major(rho0.op().matrix()), false);
    let obs_gen = gen.clone();
    let record = |traj: &mut Trajectory, t: f64, y: &[Complex64], force_check: bool| -> Result<()> {
        let (m, nc, nb) = obs_gen.observables(t, y);
        let tr: Complex64 = (0..n).map(|i| y[i * n + i]).sum();
        let mut herm = 0f64;
        for i in 0..n {
            for j in i..n {
                herm = herm.max((y[i * n + j] - y[j * n + i].conj()).norm());
            }
        }
        let idx = traj.times.len();
        traj.times.push(t);
        for (key, val) in [
            ("m_mech", m),
            ("n_cav", nc),
            ("n_bare", nb),
            ("trace_err", (tr - 1.0).norm()),
            ("herm_err", herm),
        ] {
            traj.observables.entry(key.to_string()).or_default().push(val);
        }
        let check = force_check || (opts.positivity_stride > 0 && idx.is_multiple_of(opts.positivity_stride));
        if check || opts.keep_states {
            let lab = from_row_major(&obs_gen.transform(t, y, true), n);
            if check {
                let h = (&lab + lab.adjoint()) * Complex64::new(0.5, 0.0);
                let min_eig = min_hermitian_eigenvalue(&h);
                if min_eig < opts.positivity_floor {
                    return Err(Error::PositivityLoss { t, min_eig });
                }
            }
            if opts.keep_states {
                let op = DenseOperator::new(lab, params.dims().to_vec())?;
                traj.states.push(DensityMatrix::unchecked(op, t));
            }
        }
        Ok(())
    };
    record(&mut traj, t0, &y0, false)?;

    let stepper = Dopri5 {
        rtol: opts.rtol,
        atol: opts.atol,
        max_steps: usize::MAX,
        ..Dopri5::default()
    };
    let t_last = *t_out.last().expect("non-empty");
    let mut last_state: Option<Vec<Complex64>> = None;
    stepper.integrate(
        |t, y: &Vec<Complex64>, dy: &mut Vec<Complex64>| gen.rhs(t, y, dy),
        t0,
        y0,
        &t_out,
        |t, y| {
            let is_last = t == t_last;
            record(&mut traj, t, y, is_last)?;
            if is_last {
                last_state = Some(y.clone());
            }
            Ok(())
        },
    )?;
    if let Some(y) = last_state {
        let lab = from_row_major(&obs_gen.transform(t_last, &y, true), n);
        let op = DenseOperator::new(lab, params.dims().to_vec())?;
        traj.final_state = Some(DensityMatrix::unchecked(op, t_last));
    }
    Ok(traj)
}

/// `Re Tr[(1 ⊗ Γ†(t)Γ(t)) ρ]` on a dense state.
pub fn mech_excitations(state: &DensityMatrix, drive: &MechanicalDrive, t: f64) -> Result<f64> {
    let dims = state.dims();
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "[cavity, mechanics]".into(),
            found: format!("{dims:?}"),
        });
    }
    let gamma = gamma_op(drive, t, dims[1])?;
    let num = &gamma.dagger() * &gamma;
    let full = tensor(&DenseOperator::identity(&[dims[0]]), &num);
    let val = expectation(&full, state.op())?;
    Ok(val.re)
}

/// Trapezoidal average of an observable over the final period `period`.
///
/// The window start is linearly interpolated when it falls between samples.
pub fn period_average(traj: &Trajectory, name: &str, period: f64) -> Result<f64> {
    let vals = traj.observable(name)?;
    let times = &traj.times;
    let t_last = *times.last().ok_or(Error::InsufficientSpan { span: 0.0, period })?;
    let span = t_last - traj.transient_end.max(times[0]);
    let start = t_last - period;
    if span < period * (1.0 - 1e-9) || start < times[0] - 1e-9 * period {
        return Err(Error::InsufficientSpan { span, period });
    }
    let first = times.partition_point(|&t| t < start - 1e-9 * period);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    if (times[first] - start).abs() > 1e-9 * period && first > 0 {
        let (t0, t1) = (times[first - 1], times[first]);
        let w = (start - t0) / (t1 - t0);
        pts.push((start, vals[first - 1] * (1.0 - w) + vals[first] * w));
    }
    pts.extend(times[first..].iter().copied().zip(vals[first..].iter().copied()));
    let area: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    Ok(area / (pts.last().expect("non-empty").0 - pts[0].0))
}

/// Angular frequency of the largest non-constant Fourier component of the
/// last `window` time units of an observable (uniformly sampled).
pub fn dominant_frequency(traj: &Trajectory, name: &str, window: f64) -> Result<f64> {
    let vals = traj.observable(name)?;
    let times = &traj.times;
    let t_last = *times.last().ok_or(Error::InsufficientSpan { span: 0.0, period: window })?;
    let first = times.partition_point(|&t| t < t_last - window - 1e-9 * window);
    // drop the closing sample so the window covers an exact number of periods
    let seg = &vals[first..vals.len() - 1];
    let ts = &times[first..times.len() - 1];
    if seg.len() < 8 || t_last - ts[0] < window * (1.0 - 1e-9) {
        return Err(Error::InsufficientSpan {
            span: t_last - times[first],
            period: window,
        });
    }
    let len = seg.len();
    let mean = seg.iter().sum::<f64>() / len as f64;
    let mut best = (0usize, 0.0);
    for k in 1..len / 2 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in seg.iter().enumerate() {
            acc += (v - mean) * Complex64::from_polar(1.0, -2.0 * PI * (k * i) as f64 / len as f64);
        }
        if acc.norm() > best.1 {
            best = (k, acc.norm());
        }
    }
    Ok(2.0 * PI * best.0 as f64 / window)
}

/// Initial state `vacuum ⊗ thermal(n_m)`.
pub fn default_initial_state(params: &ModelParams) -> Result<DensityMatrix> {
    use crate::operators::{fock_state, thermal_state};
    let op = tensor(&fock_state(params.cav_dim, 0), &thermal_state(params.mech_dim, params.drive.n_m));
    let mut tol = ValidityTolerance::default();
    tol.trace = 1e-6;
    check_density(&op, tol)?;
    Ok(DensityMatrix::unchecked(op, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{liouvillian_apply, CavityConfig, EffectiveCoupling};
    use crate::operators::{fock_state, thermal_state};

    fn params(eps: f64, g: f64, gamma: f64, np: f64, dims: (usize, usize)) -> ModelParams {
        let drive = MechanicalDrive::from_eps(1.0, 2, eps, gamma, 0.3).unwrap();
        let cavity = CavityConfig {
            delta: -0.9469,
            kappa: 0.25,
            n_p: np,
            pump: 1.0,
            chi0: 1.0,
        };
        ModelParams {
            drive,
            cavity,
            coupling: EffectiveCoupling::from_g_eff(g, &cavity).unwrap(),
            cav_dim: dims.0,
            mech_dim: dims.1,
        }
    }

    fn random_state(n: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        let r = &a * a.adjoint();
        let tr = r.trace();
        r / tr
    }

    #[test]
    fn rhs_is_exactly_hermitian() {
        let p = params(1.0 / 18.0, 0.3, 0.07, 0.4, (4, 5));
        let mut gen = FastGenerator::new(&p, Frame::Rotating).unwrap();
        let mut rho = to_row_major(&random_state(20, 5));
        // a non-Hermitian perturbation must not leak into the derivative
        rho[7] += Complex64::new(1e-3, 2e-3);
        let mut out = vec![ZERO; 400];
        gen.rhs(0.8, &rho, &mut out);
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(out[i * 20 + j], out[j * 20 + i].conj());
            }
        }
    }

    #[test]
    fn thermal_cavity_run_stays_bounded() {
        let p = params(0.0, 0.08, 0.0, 0.05, (4, 4));
        let traj = evolve(&default_initial_state(&p).unwrap(), &p, 400.0, 50.0).unwrap();
        let m = traj.observable("m_mech").unwrap();
        assert!((m[m.len() - 1] - m[m.len() - 2]).abs() < 1e-8);
        assert!(m.iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn lab_generator_matches_dense_liouvillian() {
        let p = params(1.0 / 18.0, 0.3, 0.07, 0.4, (4, 5));
        let mut gen = FastGenerator::new(&p, Frame::Lab).unwrap();
        let rho = random_state(20, 3);
        let mut out = vec![ZERO; 400];
        for t in [0.0, 0.61, 2.9] {
            gen.rhs(t, &to_row_major(&rho), &mut out);
            let dense = liouvillian_apply(&DenseOperator::new(rho.clone(), vec![4, 5]).unwrap(), t, &p).unwrap();
            let diff = (from_row_major(&out, 20) - dense.matrix()).camax();
            assert!(diff < 1e-13, "t={t} diff={diff}");
        }
    }

    #[test]
    fn rotating_generator_is_the_interaction_picture() {
        // d/dt(U0† ρ U0) = U0† (L ρ) U0 + i[H0, ρ_I]
        let p = params(1.0 / 18.0, 0.3, 0.07, 0.4, (4, 5));
        let mut lab = FastGenerator::new(&p, Frame::Lab).unwrap();
        let mut rot = FastGenerator::new(&p, Frame::Rotating).unwrap();
        let rho = to_row_major(&random_state(20, 9));
        let t = 1.37;
        let rho_i = rot.transform(t, &rho, false);
        let mut d_lab = vec![ZERO; 400];
        let mut d_rot = vec![ZERO; 400];
        lab.rhs(t, &rho, &mut d_lab);
        rot.rhs(t, &rho_i, &mut d_rot);
        let mut want = rot.transform(t, &d_lab, false);
        for i in 0..20 {
            for j in 0..20 {
                want[i * 20 + j] += I * (rot.energies[i] - rot.energies[j]) * rho_i[i * 20 + j];
            }
        }
        let diff = want.iter().zip(&d_rot).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn observables_match_dense_expectations() {
        let p = params(1.0 / 18.0, 0.3, 0.0, 0.0, (4, 6));
        let gen = FastGenerator::new(&p, Frame::Rotating).unwrap();
        let rho = random_state(24, 5);
        let t = 0.83;
        let state = DensityMatrix::unchecked(DenseOperator::new(rho.clone(), vec![4, 6]).unwrap(), t);
        let (m, _, _) = gen.observables(t, &gen.transform(t, &to_row_major(&rho), false));
        let want = mech_excitations(&state, &p.drive, t).unwrap();
        assert!((m - want).abs() < 1e-13);
    }

    #[test]
    fn cavity_thermalizes() {
        let p = params(0.0, 0.0, 0.0, 0.5, (12, 4));
        let rho0 = default_initial_state(&p).unwrap();
        let traj = evolve(&rho0, &p, 20.0 / 0.25, 1.0).unwrap();
        let nc = traj.observable("n_cav").unwrap();
        assert!((nc.last().unwrap() - 0.5).abs() < 1e-3);
        assert!(traj.max_trace_error() < 1e-7);
        assert!(traj.observable("herm_err").unwrap().iter().all(|&h| h < 1e-9));
    }

    #[test]
    fn mechanics_decays_exponentially() {
        let mut p = params(0.0, 0.0, 0.1, 0.0, (4, 8));
        p.drive.n_m = 0.0;
        let op = tensor(&fock_state(4, 0), &fock_state(8, 3));
        let rho0 = DensityMatrix::new(op, 0.0).unwrap();
        let traj = evolve(&rho0, &p, 20.0, 0.5).unwrap();
        let nb = traj.observable("n_bare").unwrap();
        for (t, v) in traj.times.iter().zip(nb) {
            let want = 3.0 * (-0.1 * t).exp();
            assert!((v - want).abs() <= 1e-4 * want, "t={t}");
        }
    }

    #[test]
    fn mech_excitation_examples() {
        let d0 = MechanicalDrive::from_eps(1.0, 2, 0.0, 0.0, 0.0).unwrap();
        let vac = DensityMatrix::new(tensor(&fock_state(3, 0), &fock_state(5, 0)), 0.0).unwrap();
        assert!(mech_excitations(&vac, &d0, 0.4).unwrap().abs() < 1e-15);
        let one = DensityMatrix::new(tensor(&thermal_state(3, 0.2), &fock_state(5, 1)), 0.0).unwrap();
        assert!((mech_excitations(&one, &d0, 0.4).unwrap() - 1.0).abs() < 1e-12);
        let d = MechanicalDrive::from_eps(1.0, 2, 1.0 / 18.0, 0.0, 0.0).unwrap();
        let m = mech_excitations(&vac, &d, 0.4).unwrap();
        assert!((0.0..=1e-2).contains(&m));
    }

    fn synthetic(f: impl Fn(f64) -> f64, period: f64, per: usize, periods: usize) -> Trajectory {
        let n = per * periods;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * period / per as f64).collect();
        let vals = times.iter().map(|&t| f(t)).collect();
        let mut obs = BTreeMap::new();
        obs.insert("x".to_string(), vals);
        Trajectory {
            times,
            observables: obs,
            ..Default::default()
        }
    }

    #[test]
    fn period_average_examples() {
        let period = PI / 0.5;
        let c = synthetic(|_| 2.5, period, 64, 3);
        assert!((period_average(&c, "x", period).unwrap() - 2.5).abs() < 1e-14);
        let s = synthetic(|t| (2.0 * 0.5 * t).sin(), period, 64, 3);
        assert!(period_average(&s, "x", period).unwrap().abs() < 1e-6);
        let mut short = synthetic(|_| 1.0, period, 64, 1);
        short.transient_end = 1.0;
        assert!(matches!(period_average(&short, "x", period), Err(Error::InsufficientSpan { .. })));
        assert!(matches!(period_average(&c, "y", period), Err(Error::UnknownObservable(_))));
    }

    #[test]
    fn dominant_frequency_of_a_tone() {
        let period = PI / 0.5;
        let s = synthetic(|t| 0.1 + (2.0 * 0.5 * t + 0.3).cos() + 0.2 * (3.0 * t).sin(), period, 64, 4);
        let w = dominant_frequency(&s, "x", 4.0 * period).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_expected_header() {
        let t = synthetic(|_| 1.0, 1.0, 4, 1);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("time,m_mech,n_cav,trace_err\n"));
        assert_eq!(s.lines().count(), 6);
    }
}
