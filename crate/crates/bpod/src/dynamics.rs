//! RK4 time integration of the direct and adjoint systems, and the
//! quadrature-weighted snapshot matrices built from impulse responses.
//!
//! The integrator is the classical four-stage scheme. Because the systems are
//! linear and autonomous, `s` steps of size `h` are applied as the exact power
//! `R(hA)^s` of the one-step matrix, which is the same map evaluated with far
//! fewer operations.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, CVec, C64};
use crate::modal::ModeBasis;
use crate::system::{self, BlockSystem, Blocks};

/// Blow-up factor relative to the initial norm.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotKind {
    Direct,
    Adjoint,
}

impl SnapshotKind {
    pub fn code(self) -> u8 {
        match self {
            SnapshotKind::Direct => 0,
            SnapshotKind::Adjoint => 1,
        }
    }
}

/// Sample times of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub times: Vec<f64>,
}

impl Schedule {
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("empty schedule"));
        }
        if !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("schedule times must be finite and non-negative"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("schedule times must be strictly increasing"));
        }
        Ok(Schedule { times })
    }

    /// `count` equally spaced samples on `[0, t_end]`.
    pub fn uniform(count: usize, t_end: f64) -> Result<Self> {
        if count < 2 || !(t_end > 0.0) {
            return Err(Error::invalid("uniform schedule needs count ≥ 2 and t_end > 0"));
        }
        let dt = t_end / (count - 1) as f64;
        Self::from_times((0..count).map(|j| j as f64 * dt).collect())
    }

    /// Fine sampling first, coarse afterwards: `round(count·count_frac)`
    /// samples cover `[0, time_frac·t_end)`, the rest are uniform up to `t_end`.
    pub fn two_phase(count: usize, t_end: f64, count_frac: f64, time_frac: f64) -> Result<Self> {
        if !(0.0 < count_frac && count_frac < 1.0 && 0.0 < time_frac && time_frac < 1.0) {
            return Err(Error::invalid("two-phase fractions must lie in (0, 1)"));
        }
        let n1 = ((count as f64) * count_frac).round() as usize;
        if n1 == 0 || n1 >= count || !(t_end > 0.0) {
            return Err(Error::invalid("two-phase schedule needs both phases non-empty"));
        }
        let n2 = count - n1;
        let t1 = time_frac * t_end;
        let mut times: Vec<f64> = (0..n1).map(|j| j as f64 * t1 / n1 as f64).collect();
        times.extend((1..=n2).map(|j| t1 + j as f64 * (t_end - t1) / n2 as f64));
        Self::from_times(times)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Trapezoidal weights on the (possibly non-uniform) sample times.
    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.times)
    }
}

pub fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let m = t.len();
    if m == 1 {
        return vec![1.0];
    }
    (0..m)
        .map(|j| {
            let left = if j > 0 { t[j] - t[j - 1] } else { 0.0 };
            let right = if j + 1 < m { t[j + 1] - t[j] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Snapshot matrix with `√w_j`-scaled columns. Adjoint sets hold several runs
/// side by side (`runs` blocks of equal length).
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub data: Blocks,
    pub times: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: SnapshotKind,
    pub source: String,
    pub runs: usize,
    /// Integration step actually used.
    pub dt: f64,
    pub decay_threshold: f64,
    /// Largest terminal/initial energy ratio over the runs.
    pub terminal_ratio: f64,
}

impl SnapshotSet {
    pub fn n_state(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn per_run(&self) -> usize {
        self.len() / self.runs.max(1)
    }

    /// Whether the response decayed below the declared threshold.
    pub fn decayed(&self) -> bool {
        self.terminal_ratio <= self.decay_threshold
    }

    /// Unscaled state at column `j`.
    pub fn state(&self, j: usize) -> Blocks {
        let s = 1.0 / self.weights[j].sqrt();
        Blocks(self.data.0.iter().map(|b| b.columns(j, 1) * c64(s, 0.0)).collect())
    }

    /// The first `k` runs of a concatenated set.
    pub fn first_runs(&self, k: usize) -> Result<SnapshotSet> {
        if k == 0 || k > self.runs {
            return Err(Error::invalid(format!("requested {k} of {} runs", self.runs)));
        }
        let m = k * self.per_run();
        let mut out = self.clone();
        out.data = self.data.columns(0, m);
        out.times.truncate(m);
        out.weights.truncate(m);
        out.runs = k;
        out.source = self.source.split(';').take(k).collect::<Vec<_>>().join(";");
        Ok(out)
    }

    /// Concatenate runs (columns) of sets with identical layout.
    pub fn concat(sets: Vec<SnapshotSet>) -> Result<SnapshotSet> {
        let mut it = sets.into_iter();
        let mut out = it.next().ok_or_else(|| Error::invalid("no snapshot sets to join"))?;
        for s in it {
            if s.data.0.len() != out.data.0.len() || s.n_state() != out.n_state() {
                return Err(Error::dim("snapshot sets have different layouts"));
            }
            for (a, b) in out.data.0.iter_mut().zip(&s.data.0) {
                let (n, m1, m2) = (a.nrows(), a.ncols(), b.ncols());
                let mut c = CMat::zeros(n, m1 + m2);
                c.columns_mut(0, m1).copy_from(a);
                c.columns_mut(m1, m2).copy_from(b);
                *a = c;
            }
            out.times.extend(s.times);
            out.weights.extend(s.weights);
            out.runs += s.runs;
            out.dt = out.dt.min(s.dt);
            out.terminal_ratio = out.terminal_ratio.max(s.terminal_ratio);
            out.source = format!("{};{}", out.source, s.source);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    /// Requested step; reduced per interval so it divides the sample spacing.
    pub dt: f64,
    /// Halve the step until RK4 is stable on the operator's spectrum.
    pub auto_dt: bool,
    pub decay_threshold: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { dt: 0.004, auto_dt: true, decay_threshold: 1e-4 }
    }
}

/// RK4 amplification factor `R(z) = 1 + z + z²/2 + z³/6 + z⁴/24`.
pub fn rk4_amplification(z: C64) -> C64 {
    c64(1.0, 0.0) + z * (c64(1.0, 0.0) + z * (c64(0.5, 0.0) + z * (c64(1.0 / 6.0, 0.0) + z / 24.0)))
}

/// Largest `dt / 2^k` for which every decaying eigenmode of `a` is damped by
/// the RK4 step.
pub fn stable_dt(a: &CMat, dt: f64) -> Result<f64> {
    let eig = linalg::eigenvalues(a)?;
    let mut h = dt;
    for _ in 0..40 {
        let ok = eig
            .iter()
            .filter(|l| l.re < 0.0)
            .all(|&l| rk4_amplification(l * h).norm() <= 1.0);
        if ok {
            return Ok(h);
        }
        h *= 0.5;
    }
    Err(Error::invalid("no stable RK4 step found"))
}

/// Integrate `ẋ = Ax` from the columns of `x0` (taken at t = 0) and sample at
/// `times`. Returns one `n × m` matrix per initial column and the largest
/// step actually used.
pub fn integrate(a: &CMat, x0: &CMat, dt: f64, times: &[f64]) -> Result<(Vec<CMat>, f64)> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    if a.nrows() != a.ncols() || a.nrows() != x0.nrows() {
        return Err(Error::dim("operator and initial state sizes differ"));
    }
    Schedule::from_times(times.to_vec())?;
    let (n, p, m) = (a.nrows(), x0.ncols(), times.len());
    let mut out = vec![CMat::zeros(n, m); p];
    let limits: Vec<f64> = (0..p).map(|j| x0.column(j).norm() * DIVERGENCE_FACTOR).collect();
    let mut cache: HashMap<(u64, u64), CMat> = HashMap::new();
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut h_used = 0.0f64;
    for (k, &tk) in times.iter().enumerate() {
        let span = tk - t;
        if span > 0.0 {
            let steps = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
            let h = span / steps as f64;
            h_used = h_used.max(h);
            let step = cache
                .entry((span.to_bits(), steps))
                .or_insert_with(|| linalg::mat_pow(&linalg::rk4_step_matrix(a, h), steps));
            x = linalg::cmul(step, &x);
            t = tk;
        }
        for j in 0..p {
            let col = x.column(j);
            let norm = col.norm();
            if !norm.is_finite() || (limits[j] > 0.0 && norm > limits[j]) {
                return Err(Error::Divergence { t: tk, norm });
            }
            out[j].column_mut(k).copy_from(&col);
        }
    }
    Ok((out, if h_used > 0.0 { h_used } else { dt }))
}

/// RK4 trajectory of one initial state, sampled at `times` with trapezoidal
/// weights baked into the columns.
pub fn propagate(a: &CMat, x0: &CVec, dt: f64, times: &[f64]) -> Result<SnapshotSet> {
    let schedule = Schedule::from_times(times.to_vec())?;
    let (traj, h) = integrate(a, &CMat::from_column_slice(x0.len(), 1, x0.as_slice()), dt, times)?;
    let w = schedule.weights();
    let data = scale_columns(&traj[0], &w);
    let e0 = x0.norm_squared();
    let e1 = traj[0].column(times.len() - 1).norm_squared();
    Ok(SnapshotSet {
        data: Blocks::single(data),
        times: schedule.times,
        weights: w,
        kind: SnapshotKind::Direct,
        source: "x0".into(),
        runs: 1,
        dt: h,
        decay_threshold: f64::INFINITY,
        terminal_ratio: if e0 > 0.0 { e1 / e0 } else { 0.0 },
    })
}

fn scale_columns(x: &CMat, w: &[f64]) -> CMat {
    let mut out = x.clone();
    for (j, wj) in w.iter().enumerate() {
        out.column_mut(j).scale_mut(wj.sqrt());
    }
    out
}

fn block_energy(system: &BlockSystem, x: &Blocks) -> f64 {
    let g = system::real_gram(x, &system.e_weights(), x);
    (0..g.ncols()).map(|j| g[(j, j)]).sum()
}

/// Run one block-diagonal trajectory per initial column and return the
/// weighted snapshot blocks (one set per column).
fn run_blocks(
    ops: &[CMat],
    x0: &Blocks,
    schedule: &Schedule,
    opts: &StepOptions,
) -> Result<(Vec<Blocks>, f64)> {
    let p = x0.ncols();
    let w = schedule.weights();
    let mut runs: Vec<Vec<CMat>> = vec![Vec::with_capacity(ops.len()); p];
    let mut h_max = 0.0f64;
    for (a, xb) in ops.iter().zip(&x0.0) {
        let dt = if opts.auto_dt { stable_dt(a, opts.dt)? } else { opts.dt };
        let (traj, h) = integrate(a, xb, dt, &schedule.times)?;
        h_max = h_max.max(h);
        for (j, tr) in traj.into_iter().enumerate() {
            runs[j].push(scale_columns(&tr, &w));
        }
    }
    Ok((runs.into_iter().map(Blocks).collect(), h_max))
}

fn terminal_ratio(system: &BlockSystem, x0: &Blocks, data: &Blocks, w_last: f64) -> f64 {
    let m = data.ncols();
    let e0 = block_energy(system, x0);
    let e1 = block_energy(system, &data.columns(m - 1, 1)) / w_last;
    if e0 > 0.0 {
        e1 / e0
    } else {
        0.0
    }
}

/// Impulse-state response `x(t) = e^{At} b` for input column `col`.
pub fn direct_impulse_snapshots(
    system: &BlockSystem,
    col: usize,
    schedule: &Schedule,
    opts: &StepOptions,
) -> Result<SnapshotSet> {
    if col >= system.n_inputs() {
        return Err(Error::invalid(format!("input column {col} out of range")));
    }
    let ops: Vec<CMat> = (0..system.blocks.len()).map(|k| system.a(k)).collect();
    let x0 = system.input().columns(col, 1);
    let (mut runs, h) = run_blocks(&ops, &x0, schedule, opts)?;
    let data = runs.pop().unwrap();
    let w = schedule.weights();
    let ratio = terminal_ratio(system, &x0, &data, *w.last().unwrap());
    Ok(SnapshotSet {
        data,
        times: schedule.times.clone(),
        weights: w,
        kind: SnapshotKind::Direct,
        source: format!("B[:,{col}]"),
        runs: 1,
        dt: h,
        decay_threshold: opts.decay_threshold,
        terminal_ratio: ratio,
    })
}

/// Adjoint initial conditions `M⁻¹ E θ_j`: the adjoint of the output map
/// `x ↦ Re⟨θ_j, x⟩_E` under the M inner product.
pub fn adjoint_initial_conditions(system: &BlockSystem, basis: &ModeBasis, s: usize) -> Result<Blocks> {
    let proj = crate::modal::output_projection(basis, s)?;
    let e_theta = system::apply_weight(&system.e_weights(), &proj.theta);
    system::solve_weight(&system.m_weights(), &e_theta)
}

/// One adjoint trajectory under `A⁺ = M⁻¹AᴴM` from the given initial state.
pub fn adjoint_run(
    system: &BlockSystem,
    adjoint_ops: &[CMat],
    z0: &Blocks,
    schedule: &Schedule,
    opts: &StepOptions,
    label: &str,
) -> Result<SnapshotSet> {
    let (mut runs, h) = run_blocks(adjoint_ops, z0, schedule, opts)?;
    let data = runs.pop().unwrap();
    let w = schedule.weights();
    let ratio = terminal_ratio(system, z0, &data, *w.last().unwrap());
    Ok(SnapshotSet {
        data,
        times: schedule.times.clone(),
        weights: w,
        kind: SnapshotKind::Adjoint,
        source: label.to_string(),
        runs: 1,
        dt: h,
        decay_threshold: opts.decay_threshold,
        terminal_ratio: ratio,
    })
}

/// Adjoint impulse responses for the first `s` POD modes, one run each.
pub fn adjoint_impulse_snapshots(
    system: &BlockSystem,
    basis: &ModeBasis,
    s: usize,
    schedule: &Schedule,
    opts: &StepOptions,
) -> Result<SnapshotSet> {
    let z0 = adjoint_initial_conditions(system, basis, s)?;
    let ops = system.adjoint()?;
    let runs = (0..s)
        .map(|j| adjoint_run(system, &ops, &z0.columns(j, 1), schedule, opts, &format!("theta{}", j + 1)))
        .collect::<Result<Vec<_>>>()?;
    SnapshotSet::concat(runs)
}

/// First time at which the energy of `e^{At}x0` falls below `threshold` times
/// its initial value, searched in steps of `probe` up to `t_max`.
pub fn decay_horizon(system: &BlockSystem, col: usize, threshold: f64, probe: f64, t_max: f64) -> Result<Option<f64>> {
    if !(threshold > 0.0 && probe > 0.0 && t_max > probe) {
        return Err(Error::invalid("decay search needs positive threshold, probe and horizon"));
    }
    let ew = system.e_weights();
    let x0 = system.input().columns(col, 1);
    let steps: Vec<CMat> = (0..system.blocks.len())
        .map(|k| linalg::expm(&(system.a(k) * c64(probe, 0.0))))
        .collect::<Result<_>>()?;
    let energy = |x: &Blocks| system::real_gram(x, &ew, x)[(0, 0)];
    let e0 = energy(&x0);
    let mut x = x0;
    let mut prev = 1.0f64;
    let mut t = 0.0;
    while t < t_max {
        x = Blocks(steps.iter().zip(&x.0).map(|(p, xb)| linalg::cmul(p, xb)).collect());
        t += probe;
        let r = energy(&x) / e0;
        if r <= threshold {
            // log-linear interpolation inside the last probe interval
            let f = (prev.ln() - threshold.ln()) / (prev.ln() - r.ln());
            return Ok(Some(t - probe + f.clamp(0.0, 1.0) * probe));
        }
        prev = r;
    }
    Ok(None)
}

/// Time-quadrature estimate of `∫‖x‖²_W dt` from a weighted snapshot set.
pub fn integrated_energy(set: &SnapshotSet, system: &BlockSystem) -> f64 {
    block_energy(system, &set.data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Field;
    use crate::channel::{self, WavenumberPair};
    use crate::spectral::chebyshev_grid;
    use proptest::prelude::*;

    fn model(n: usize, re: f64) -> channel::StateSpaceModel {
        let grid = chebyshev_grid(n).unwrap();
        channel::build_os_squire(WavenumberPair::new(1.0, 1.0), re, &grid).unwrap()
    }

    fn smooth_state(m: &channel::StateSpaceModel) -> CVec {
        let y = m.grid.interior();
        let k = y.len();
        CVec::from_fn(2 * k, |i, _| {
            let yy = y[i % k];
            let bump = (1.0 - yy * yy).powi(2);
            if i < k {
                c64(bump, 0.3 * bump * yy)
            } else {
                c64(0.5 * (1.0 - yy * yy) * yy, 0.0)
            }
        })
    }

    #[test]
    fn schedules() {
        let u = Schedule::uniform(5, 2.0).unwrap();
        assert_eq!(u.times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(u.weights(), vec![0.25, 0.5, 0.5, 0.5, 0.25]);
        let t = Schedule::two_phase(1000, 1200.0, 0.25, 0.1).unwrap();
        assert_eq!(t.len(), 1000);
        assert!((t.times[1] - 0.48).abs() < 1e-12);
        assert!((t.times[251] - t.times[250] - 1.44).abs() < 1e-9);
        assert!((t.end() - 1200.0).abs() < 1e-9);
        assert!(Schedule::from_times(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Schedule::two_phase(4, 1.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        let m = model(16, 1000.0);
        let s = propagate(&m.a, &CVec::zeros(m.n_state()), 0.01, &[0.0, 0.5, 1.0]).unwrap();
        assert!(s.data.0[0].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn eigenvector_evolves_exponentially() {
        let m = model(24, 1000.0);
        let schur = linalg::Schur::new(&m.a).unwrap();
        let lam = schur.eigenvalues();
        let vecs = schur.eigenvectors();
        // least-stable mode
        let k = (0..lam.len()).max_by(|&i, &j| lam[i].re.total_cmp(&lam[j].re)).unwrap();
        let x0 = vecs.column(k).into_owned();
        let (traj, _) = integrate(&m.a, &CMat::from_column_slice(x0.len(), 1, x0.as_slice()), 1e-3, &[1.0]).unwrap();
        let exact = &x0 * lam[k].exp();
        let err = (traj[0].column(0) - exact).norm() / x0.norm();
        assert!(err <= 1e-6, "err {err}");
    }

    #[test]
    fn rk4_fourth_order() {
        let m = model(16, 1000.0);
        let x0 = smooth_state(&m);
        let x0m = CMat::from_column_slice(x0.len(), 1, x0.as_slice());
        let t = [2.0];
        let run = |dt: f64| integrate(&m.a, &x0m, dt, &t).unwrap().0[0].column(0).into_owned();
        let dt = 0.04;
        let reference = run(dt / 8.0);
        let e1 = (run(dt) - &reference).norm();
        let e2 = (run(dt / 2.0) - &reference).norm();
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn divergence_is_detected() {
        let a = CMat::identity(2, 2) * c64(10.0, 0.0);
        let x0 = CVec::from_element(2, c64(1.0, 0.0));
        let err = propagate(&a, &x0, 0.01, &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
        // too large a step on a stiff stable operator also blows up
        let m = model(32, 1000.0);
        let x0 = smooth_state(&m);
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 5.0).collect();
        assert!(matches!(propagate(&m.a, &x0, 0.05, &times), Err(Error::Divergence { .. })));
        let h = stable_dt(&m.a, 0.05).unwrap();
        assert!(h < 0.05 && propagate(&m.a, &x0, h, &times).is_ok());
    }

    #[test]
    fn quadrature_consistency() {
        let m = model(32, 1000.0);
        let x0 = smooth_state(&m);
        let n = m.n_state();
        let sys = BlockSystem::from_model(&m.with_input(CMat::from_column_slice(n, 1, x0.as_slice())).unwrap(), Field::Real);
        let opts = StepOptions { dt: 0.01, ..Default::default() };
        let coarse = direct_impulse_snapshots(&sys, 0, &Schedule::uniform(300, 300.0).unwrap(), &opts).unwrap();
        let fine = direct_impulse_snapshots(&sys, 0, &Schedule::uniform(1197, 300.0).unwrap(), &opts).unwrap();
        let (ec, ef) = (integrated_energy(&coarse, &sys), integrated_energy(&fine, &sys));
        assert!(((ec - ef) / ef).abs() < 0.01, "{ec} vs {ef}");
        assert!(coarse.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn decay_horizon_and_flag() {
        let m = model(24, 1000.0);
        let x0 = smooth_state(&m);
        let sys = BlockSystem::from_model(&m.with_input(CMat::from_column_slice(46, 1, x0.as_slice())).unwrap(), Field::Real);
        let t = decay_horizon(&sys, 0, 1e-4, 0.5, 2000.0).unwrap().unwrap();
        let opts = StepOptions { dt: 0.01, ..Default::default() };
        let set = direct_impulse_snapshots(&sys, 0, &Schedule::uniform(200, t * 1.001).unwrap(), &opts).unwrap();
        assert!(set.decayed(), "ratio {}", set.terminal_ratio);
        let short = direct_impulse_snapshots(&sys, 0, &Schedule::uniform(50, 0.5 * t).unwrap(), &opts).unwrap();
        assert!(!short.decayed());
    }

    #[test]
    fn state_undoes_weighting() {
        let m = model(16, 1000.0);
        let x0 = smooth_state(&m);
        let s = propagate(&m.a, &x0, 0.01, &[0.0, 0.3, 0.9]).unwrap();
        let first = s.state(0);
        assert!((first.0[0].column(0) - &x0).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn linearity(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let m = model(16, 800.0);
            let n = m.n_state();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rv = || CVec::from_fn(n, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let (a, b) = (rv(), rv());
            let times = [0.0, 0.7, 1.4, 3.0];
            let sa = propagate(&m.a, &a, 0.01, &times).unwrap();
            let sb = propagate(&m.a, &b, 0.01, &times).unwrap();
            let sab = propagate(&m.a, &(&a + &b), 0.01, &times).unwrap();
            let diff = &sab.data.0[0] - &sa.data.0[0] - &sb.data.0[0];
            prop_assert!(linalg::frob(&diff) <= 1e-10 * linalg::frob(&sab.data.0[0]).max(1.0));
        }
    }
}
