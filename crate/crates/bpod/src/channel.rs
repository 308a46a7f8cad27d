//! Single-wavenumber Orr–Sommerfeld/Squire model of plane Poiseuille flow.
//!
//! State `x = (v, η)` on the N−1 interior Chebyshev nodes. `v` is clamped
//! (`v = v′ = 0`), `η` is Dirichlet. The model is `ẋ = A x`, with
//! `A = M_op⁻¹ L`, `M_op = diag(−Δ, I)`.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, cmul, to_complex, CMat, CVec, RMat, C64, I};
use crate::spectral::{self, Boundary, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavenumberPair {
    pub alpha: f64,
    pub beta: f64,
}

impl WavenumberPair {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn k2(&self) -> f64 {
        self.alpha * self.alpha + self.beta * self.beta
    }
}

/// Laminar profile `U = 1 − y²` sampled on every node.
#[derive(Debug, Clone)]
pub struct BaseFlow {
    pub u: Vec<f64>,
    pub uprime: Vec<f64>,
    pub udoubleprime: Vec<f64>,
}

impl BaseFlow {
    pub fn laminar(grid: &Grid1D) -> Self {
        let y = &grid.points;
        BaseFlow {
            u: y.iter().map(|t| 1.0 - t * t).collect(),
            uprime: y.iter().map(|t| -2.0 * t).collect(),
            udoubleprime: vec![-2.0; y.len()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateVector {
    pub v: CVec,
    pub eta: CVec,
}

impl StateVector {
    pub fn from_state(x: &CVec) -> Self {
        let m = x.len() / 2;
        StateVector { v: x.rows(0, m).into_owned(), eta: x.rows(m, m).into_owned() }
    }

    pub fn to_state(&self) -> CVec {
        let m = self.v.len();
        let mut x = CVec::zeros(2 * m);
        x.rows_mut(0, m).copy_from(&self.v);
        x.rows_mut(m, m).copy_from(&self.eta);
        x
    }
}

#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    pub wavenumber: WavenumberPair,
    pub re: f64,
    pub grid: Grid1D,
    pub a: CMat,
    pub a_conv: CMat,
    pub a_diff: CMat,
    /// Input columns; empty until an actuator is attached.
    pub b: CMat,
    /// Output map; `None` means the full state.
    pub c: Option<CMat>,
    /// Discrete weight of `∫ v̄(−Δ)v + η̄η`.
    pub m_weight: RMat,
    /// Discrete weight of `½∫ |u|² + |v|² + |w|²`.
    pub e_weight: RMat,
}

/// Operator pieces shared by the direct and continuous-adjoint builds.
struct Pieces {
    m: usize,
    d1: RMat,
    d1i: RMat,
    d2d: RMat,
    d4c: RMat,
    u: Vec<f64>,
    up: Vec<f64>,
}

fn pieces(grid: &Grid1D) -> Result<Pieces> {
    let d1 = spectral::diff_matrix(grid, 1, Boundary::None)?;
    let d2 = spectral::diff_matrix(grid, 2, Boundary::None)?;
    let d4c = spectral::diff_matrix(grid, 4, Boundary::Clamped)?.matrix;
    let base = BaseFlow::laminar(grid);
    let n = grid.n;
    Ok(Pieces {
        m: n - 1,
        d1i: spectral::interior_block(&d1),
        d1: d1.matrix,
        d2d: spectral::interior_block(&d2),
        d4c,
        u: base.u[1..n].to_vec(),
        up: base.uprime[1..n].to_vec(),
    })
}

fn diag(v: &[f64]) -> RMat {
    RMat::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

fn blocks(tl: &CMat, tr: &CMat, bl: &CMat, br: &CMat) -> CMat {
    let m = tl.nrows();
    let mut out = CMat::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(tl);
    out.view_mut((0, m), (m, m)).copy_from(tr);
    out.view_mut((m, 0), (m, m)).copy_from(bl);
    out.view_mut((m, m), (m, m)).copy_from(br);
    out
}

/// `M_op⁻¹ L` for block operator `L`, using the real inverse of `−Δ`.
fn apply_mass_inverse(neg_lap_inv: &RMat, l: &CMat) -> CMat {
    let m = neg_lap_inv.nrows();
    let mut out = l.clone();
    let top = cmul(&to_complex(neg_lap_inv), &l.rows(0, m).into_owned());
    out.rows_mut(0, m).copy_from(&top);
    out
}

/// Exact integrals of products of interpolants: `(∫ Dv̄ Dv, ∫ v̄ v)` as
/// matrices on interior values, via Clenshaw–Curtis on the doubled grid.
fn exact_grams(grid: &Grid1D, d1: &RMat) -> Result<(RMat, RMat)> {
    let n = grid.n;
    let fine = spectral::chebyshev_grid(2 * n)?;
    let w = spectral::quadrature_weights(&fine).weights;
    let p = spectral::interpolation_matrix(grid, &fine.points);
    let gv = p.columns(1, n - 1).into_owned();
    let gd = (&p * d1).columns(1, n - 1).into_owned();
    let wd = diag(&w);
    let gdd = gd.transpose() * &wd * &gd;
    let gvv = gv.transpose() * &wd * &gv;
    Ok(((&gdd + gdd.transpose()) * 0.5, (&gvv + gvv.transpose()) * 0.5))
}

pub fn build_os_squire(wn: WavenumberPair, re: f64, grid: &Grid1D) -> Result<StateSpaceModel> {
    if grid.n < 4 {
        return Err(Error::invalid(format!("channel operators need N ≥ 4, got {}", grid.n)));
    }
    if !(re > 0.0) {
        return Err(Error::invalid(format!("Reynolds number must be positive, got {re}")));
    }
    let k2 = wn.k2();
    if !(k2 > 0.0) {
        return Err(Error::invalid("the (α, β) = (0, 0) mode has no Orr–Sommerfeld operator"));
    }
    let p = pieces(grid)?;
    let m = p.m;
    let (al, be) = (wn.alpha, wn.beta);
    let id = RMat::identity(m, m);
    let lap = &p.d2d - &id * k2;
    let lap2 = &p.d4c - &p.d2d * (2.0 * k2) + &id * (k2 * k2);
    let u = diag(&p.u);
    let up = diag(&p.up);
    let zero = CMat::zeros(m, m);

    // convective part: iαUΔ − iαU″ (U″ = −2), coupling −iβU′, Squire −iαU
    let los_c = to_complex(&(&u * &lap)) * (I * al) + to_complex(&id) * (I * (2.0 * al));
    let coupling = to_complex(&up) * (-I * be);
    let lsq_c = to_complex(&u) * (-I * al);
    let l_conv = blocks(&los_c, &zero, &coupling, &lsq_c);
    // diffusive part (multiplied by 1/Re): −Δ² and Δ
    let l_diff = blocks(&to_complex(&(-&lap2)), &zero, &zero, &to_complex(&lap));

    let neg_lap_inv = (-&lap)
        .try_inverse()
        .ok_or_else(|| Error::Factorization("singular Laplacian in mass operator".into()))?;
    let a_conv = apply_mass_inverse(&neg_lap_inv, &l_conv);
    let a_diff = apply_mass_inverse(&neg_lap_inv, &l_diff);
    let a = assemble(&a_conv, &a_diff, re);

    let (gdd, gvv) = exact_grams(grid, &p.d1)?;
    let mut mw = RMat::zeros(2 * m, 2 * m);
    mw.view_mut((0, 0), (m, m)).copy_from(&(&gdd + &gvv * k2));
    mw.view_mut((m, m), (m, m)).copy_from(&gvv);
    let ew = &mw / (2.0 * k2);

    Ok(StateSpaceModel {
        wavenumber: wn,
        re,
        grid: grid.clone(),
        a,
        a_conv,
        a_diff,
        b: CMat::zeros(2 * m, 0),
        c: None,
        m_weight: mw,
        e_weight: ew,
    })
}

/// `A_conv + (1/Re)·A_diff`, elementwise so that the split reproduces A bit for bit.
pub fn assemble(a_conv: &CMat, a_diff: &CMat, re: f64) -> CMat {
    let s = 1.0 / re;
    a_conv.zip_map(a_diff, |c, d| c + d * s)
}

impl StateSpaceModel {
    pub fn n_state(&self) -> usize {
        self.a.nrows()
    }

    pub fn with_input(mut self, b: CMat) -> Result<Self> {
        if b.nrows() != self.n_state() {
            return Err(Error::dim("input matrix rows"));
        }
        self.b = b;
        Ok(self)
    }

    /// The same model at another Reynolds number.
    pub fn at_reynolds(&self, re: f64) -> Result<Self> {
        if !(re > 0.0) {
            return Err(Error::invalid("Reynolds number must be positive"));
        }
        let mut out = self.clone();
        out.re = re;
        out.a = assemble(&self.a_conv, &self.a_diff, re);
        Ok(out)
    }

    pub fn m_inner(&self, x: &CVec, y: &CVec) -> C64 {
        x.dotc(&(to_complex(&self.m_weight) * y))
    }

    pub fn e_inner(&self, x: &CVec, y: &CVec) -> C64 {
        x.dotc(&(to_complex(&self.e_weight) * y))
    }

    pub fn energy(&self, x: &CVec) -> f64 {
        self.e_inner(x, x).re
    }
}

/// Adjoint of `A` in the M-inner product: `A⁺ = M⁻¹ Aᴴ M`.
pub fn build_adjoint(model: &StateSpaceModel) -> Result<CMat> {
    weighted_adjoint(&model.a, &model.m_weight)
}

pub fn weighted_adjoint(a: &CMat, w: &RMat) -> Result<CMat> {
    let chol = Cholesky::new(w.clone())
        .ok_or_else(|| Error::Factorization("weight is not positive definite".into()))?;
    let wc = to_complex(w);
    let rhs = cmul(&a.adjoint(), &wc);
    let re = chol.solve(&linalg::re_part(&rhs));
    let im = chol.solve(&linalg::im_part(&rhs));
    Ok(CMat::from_fn(re.nrows(), re.ncols(), |i, j| c64(re[(i, j)], im[(i, j)])))
}

/// Independent collocation of the continuous adjoint equations:
/// `L*_OS = −iαUΔ − 2iαU′D − Δ²/Re`, `L*_SQ = iαU + Δ/Re`, coupling `+iβU′`
/// from η into the v-equation.
pub fn continuous_adjoint(model: &StateSpaceModel) -> Result<CMat> {
    let p = pieces(&model.grid)?;
    let m = p.m;
    let wn = model.wavenumber;
    let (al, be, re, k2) = (wn.alpha, wn.beta, model.re, wn.k2());
    let id = RMat::identity(m, m);
    let lap = &p.d2d - &id * k2;
    let lap2 = &p.d4c - &p.d2d * (2.0 * k2) + &id * (k2 * k2);
    let u = diag(&p.u);
    let up = diag(&p.up);
    let los = to_complex(&(&u * &lap)) * (-I * al) - to_complex(&(&up * &p.d1i)) * (I * (2.0 * al))
        - to_complex(&lap2) * c64(1.0 / re, 0.0);
    let coupling = to_complex(&up) * (I * be);
    let lsq = to_complex(&u) * (I * al) + to_complex(&lap) * c64(1.0 / re, 0.0);
    let l = blocks(&los, &coupling, &CMat::zeros(m, m), &lsq);
    let neg_lap_inv = (-&lap)
        .try_inverse()
        .ok_or_else(|| Error::Factorization("singular Laplacian in mass operator".into()))?;
    Ok(apply_mass_inverse(&neg_lap_inv, &l))
}

pub fn m_inner_product(q1: &StateVector, q2: &StateVector, model: &StateSpaceModel) -> Result<C64> {
    check_len(q1, q2, model)?;
    Ok(model.m_inner(&q1.to_state(), &q2.to_state()))
}

pub fn energy_inner_product(q1: &StateVector, q2: &StateVector, model: &StateSpaceModel) -> Result<C64> {
    check_len(q1, q2, model)?;
    Ok(model.e_inner(&q1.to_state(), &q2.to_state()))
}

fn check_len(q1: &StateVector, q2: &StateVector, model: &StateSpaceModel) -> Result<()> {
    let m = model.grid.interior_count();
    if [q1.v.len(), q1.eta.len(), q2.v.len(), q2.eta.len()].iter().any(|&l| l != m) {
        return Err(Error::dim(format!("state parts must have {m} interior values")));
    }
    Ok(())
}

/// `(u, v, w)` on the interior nodes from continuity and the definition of η.
pub fn recover_velocities(q: &StateVector, wn: WavenumberPair, grid: &Grid1D) -> Result<(CVec, CVec, CVec)> {
    let k2 = wn.k2();
    if !(k2 > 0.0) {
        return Err(Error::invalid("velocity recovery undefined at k² = 0"));
    }
    let d1 = spectral::diff_matrix(grid, 1, Boundary::None)?;
    let dv = to_complex(&spectral::interior_block(&d1)) * &q.v;
    let f = I / k2;
    let u = (&dv * c64(wn.alpha, 0.0) - &q.eta * c64(wn.beta, 0.0)) * f;
    let w = (&dv * c64(wn.beta, 0.0) + &q.eta * c64(wn.alpha, 0.0)) * f;
    Ok((u, q.v.clone(), w))
}

#[derive(Debug, Clone, Copy)]
pub enum Horizon {
    At(f64),
    /// Maximize over `(0, t_max]`.
    Global { t_max: f64 },
}

#[derive(Debug, Clone)]
pub struct GrowthCurve {
    pub times: Vec<f64>,
    pub gain: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OptimalPerturbation {
    /// Unit-energy initial condition.
    pub state: CVec,
    pub t_opt: f64,
    pub g_opt: f64,
    pub curve: GrowthCurve,
}

struct EnergyFrame {
    f: CMat,
    finv: CMat,
}

fn energy_frame(w: &RMat) -> Result<EnergyFrame> {
    let chol = Cholesky::new(w.clone())
        .ok_or_else(|| Error::Factorization("energy weight is not positive definite".into()))?;
    let f = chol.l().transpose();
    let finv = f
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Factorization("energy factor not invertible".into()))?;
    Ok(EnergyFrame { f: to_complex(&f), finv: to_complex(&finv) })
}

/// `‖F P F⁻¹‖₂²` and the maximizing direction in F-coordinates.
fn gain_of(frame: &EnergyFrame, prop: &CMat) -> (f64, CVec) {
    let k = cmul(&cmul(&frame.f, prop), &frame.finv);
    let (vals, vecs) = linalg::herm_eig_desc(&linalg::cmul_adj(&k, &k));
    (vals[0].max(0.0), vecs.column(0).into_owned())
}

/// Energy growth envelope `G(t) = max E(x(t))/E(x(0))`.
pub fn growth_curve(model: &StateSpaceModel, t_max: f64, dt: f64) -> Result<GrowthCurve> {
    let frame = energy_frame(&model.e_weight)?;
    let steps = (t_max / dt).round() as usize;
    let step = linalg::expm(&(&model.a * c64(dt, 0.0)))?;
    let mut prop = CMat::identity(model.n_state(), model.n_state());
    let mut times = vec![0.0];
    let mut gain = vec![1.0];
    for k in 1..=steps {
        prop = cmul(&step, &prop);
        times.push(k as f64 * dt);
        gain.push(gain_of(&frame, &prop).0);
    }
    Ok(GrowthCurve { times, gain })
}

pub fn optimal_perturbation(model: &StateSpaceModel, horizon: Horizon) -> Result<OptimalPerturbation> {
    let absc = linalg::abscissa(&model.a)?;
    if absc >= 0.0 {
        return Err(Error::Unstable(absc));
    }
    let frame = energy_frame(&model.e_weight)?;
    let gain_at = |t: f64| -> Result<(f64, CVec)> {
        if t == 0.0 {
            let n = model.n_state();
            let mut e = CVec::zeros(n);
            e[0] = c64(1.0, 0.0);
            return Ok((1.0, e));
        }
        Ok(gain_of(&frame, &linalg::expm(&(&model.a * c64(t, 0.0)))?))
    };
    let (t_opt, curve) = match horizon {
        Horizon::At(t) => {
            if !(t >= 0.0) {
                return Err(Error::invalid("horizon must be non-negative"));
            }
            let g = gain_at(t)?.0;
            let curve = GrowthCurve { times: vec![0.0, t], gain: vec![1.0, g] };
            (t, curve)
        }
        Horizon::Global { t_max } => {
            if !(t_max > 0.0) {
                return Err(Error::invalid("t_max must be positive"));
            }
            let dt = (t_max / 400.0).min(0.5);
            let curve = growth_curve(model, t_max, dt)?;
            let (imax, _) = curve
                .gain
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc });
            let lo = curve.times[imax.saturating_sub(1)];
            let hi = curve.times[(imax + 1).min(curve.times.len() - 1)];
            let t = golden_max(|t| gain_at(t).map(|g| g.0).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-7);
            (t, curve)
        }
    };
    let (g_opt, y) = gain_at(t_opt)?;
    let mut x = &frame.finv * y;
    let e = model.energy(&x).sqrt();
    x /= c64(e, 0.0);
    Ok(OptimalPerturbation { state: x, t_opt, g_opt, curve })
}

/// Golden-section search for the maximum of a unimodal function on [a, b].
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
