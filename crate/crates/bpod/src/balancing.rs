//! Snapshot-based balanced POD, exact balanced truncation through dense
//! Lyapunov solves (the reference the snapshot method is measured against),
//! and Petrov–Galerkin assembly of reduced-order models.

use crate::channel;
use crate::dynamics::SnapshotSet;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::modal::{BasisKind, ModeBasis, OutputProjection, WeightId};
use crate::system::{self, BlockSystem, BlockWeight, Blocks, Field};

/// Singular values below this fraction of the largest count as zero.
pub const HSV_RANK_TOL: f64 = 1e-10;
/// Relative gap under which two Hankel singular values are treated as a tie.
pub const TIE_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Pod,
    Bpod,
    ExactBt,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Pod => "pod",
            Provenance::Bpod => "bpod",
            Provenance::ExactBt => "exact_bt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pod" => Some(Provenance::Pod),
            "bpod" => Some(Provenance::Bpod),
            "exact_bt" => Some(Provenance::ExactBt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReducedOrderModel {
    pub ar: CMat,
    pub br: CMat,
    pub cr: CMat,
    pub ar_conv: CMat,
    pub ar_diff: CMat,
    pub rank: usize,
    pub output_rank: usize,
    /// Reynolds number of the data the model was built from.
    pub design_re: f64,
    /// Reynolds number `ar` currently represents.
    pub re: f64,
    pub provenance: Provenance,
    pub field: Field,
    /// Full-state estimate `x ≈ recon · a` from the reduced state.
    pub recon: Blocks,
}

impl ReducedOrderModel {
    pub fn spectrum(&self) -> Result<Vec<linalg::C64>> {
        linalg::sorted_spectrum(&self.ar)
    }

    pub fn abscissa(&self) -> Result<f64> {
        linalg::abscissa(&self.ar)
    }
}

#[derive(Debug, Clone)]
pub struct BpodDiagnostics {
    /// Number of singular values above the rank tolerance.
    pub numerical_rank: usize,
    /// `σ_r` and `σ_{r+1}` nearly coincide: stability is not guaranteed.
    pub tie_warning: bool,
}

/// Balanced POD from stored direct and adjoint snapshots.
pub fn bpod(x: &SnapshotSet, y: &SnapshotSet, m: &BlockWeight, r: usize) -> Result<(ModeBasis, BpodDiagnostics)> {
    let field = Field::Real;
    bpod_with_field(x, y, m, r, field)
}

pub fn bpod_with_field(
    x: &SnapshotSet,
    y: &SnapshotSet,
    m: &BlockWeight,
    r: usize,
    field: Field,
) -> Result<(ModeBasis, BpodDiagnostics)> {
    if y.n_state() != x.n_state() || y.data.0.len() != x.data.0.len() {
        return Err(Error::dim("direct and adjoint snapshots have different layouts"));
    }
    let per = y.per_run();
    bpod_streamed(x, y.runs, |j| Ok(y.data.columns(j * per, per)), m, r, field)
}

/// Balanced POD where adjoint runs are produced on demand (twice: once for
/// `YᴴMX`, once to assemble the adjoint modes), so only one run is held in
/// memory at a time.
pub fn bpod_streamed<F>(
    x: &SnapshotSet,
    runs: usize,
    mut adjoint_run: F,
    m: &BlockWeight,
    r: usize,
    field: Field,
) -> Result<(ModeBasis, BpodDiagnostics)>
where
    F: FnMut(usize) -> Result<Blocks>,
{
    if runs == 0 {
        return Err(Error::invalid("no adjoint runs"));
    }
    if x.data.0.len() != m.blocks.len() {
        return Err(Error::dim("snapshot blocks and weight blocks differ"));
    }
    let mut pieces = Vec::with_capacity(runs);
    for j in 0..runs {
        let yj = adjoint_run(j)?;
        if yj.0.len() != m.blocks.len() || yj.nrows() != x.n_state() {
            return Err(Error::dim("adjoint run layout"));
        }
        pieces.push(system::gram(&yj, m, &x.data, field));
    }
    let rows: usize = pieces.iter().map(|p| p.nrows()).sum();
    let mut h = CMat::zeros(rows, x.len());
    let mut at = 0;
    let mut offsets = Vec::with_capacity(runs);
    for p in &pieces {
        offsets.push((at, p.nrows()));
        h.rows_mut(at, p.nrows()).copy_from(p);
        at += p.nrows();
    }
    let (u, s, v) = match field {
        Field::Real => {
            let (u, s, v) = linalg::svd_desc(&linalg::re_part(&h))?;
            (linalg::to_complex(&u), s, linalg::to_complex(&v))
        }
        Field::Complex => linalg::svd_desc_complex(&h)?,
    };
    let top = s.first().copied().unwrap_or(0.0);
    let p = s.iter().filter(|&&v| top > 0.0 && v >= HSV_RANK_TOL * top).count();
    let rr = r.min(p);
    let tie = rr > 0 && rr < s.len() && s[rr - 1] - s[rr] <= TIE_TOL * s[rr - 1];
    let inv_sqrt: Vec<f64> = s[..rr].iter().map(|v| 1.0 / v.sqrt()).collect();
    let scale = |mut c: CMat| {
        for (j, f) in inv_sqrt.iter().enumerate() {
            c.column_mut(j).scale_mut(*f);
        }
        c
    };
    let phi = x.data.mul(&scale(v.columns(0, rr).into_owned()));
    let mut psi = Blocks(m.blocks.iter().map(|w| CMat::zeros(w.nrows(), rr)).collect());
    for (j, &(off, len)) in offsets.iter().enumerate() {
        let yj = adjoint_run(j)?;
        let coef = scale(u.view((off, 0), (len, rr)).into_owned());
        for (acc, part) in psi.0.iter_mut().zip(yj.mul(&coef).0) {
            *acc += part;
        }
    }
    Ok((
        ModeBasis {
            modes: phi,
            adjoint_modes: Some(psi),
            values: s,
            weight: WeightId::Mass,
            kind: BasisKind::Balancing,
            field,
            truncated: r > p,
        },
        BpodDiagnostics { numerical_rank: p, tie_warning: tie },
    ))
}

/// Smallest rank ≥ `r` that does not split a group of (nearly) equal values.
pub fn pair_boundary(values: &[f64], mut r: usize, tol: f64) -> usize {
    while r > 0 && r < values.len() && values[r - 1] - values[r] <= tol * values[r - 1] {
        r += 1;
    }
    r
}

/// Petrov–Galerkin projection of the system onto the first `r` modes. POD
/// bases project orthogonally in the energy inner product; balancing bases
/// use their adjoint modes and the M inner product. With an output
/// projection the outputs are its POD coefficients; without one (POD only)
/// they are the reduced coordinates themselves.
pub fn reduce(
    system: &BlockSystem,
    basis: &ModeBasis,
    r: usize,
    output: Option<&OutputProjection>,
) -> Result<ReducedOrderModel> {
    if r == 0 || r > basis.rank() {
        return Err(Error::invalid(format!("model rank {r} outside 1..={}", basis.rank())));
    }
    if basis.modes.0.len() != system.blocks.len() || basis.modes.nrows() != system.n_state() {
        return Err(Error::dim("basis does not match the system layout"));
    }
    let field = system.field;
    let phi = basis.modes.columns(0, r);
    let (left, w, provenance) = match basis.kind {
        BasisKind::Pod => (phi.clone(), system.e_weights(), Provenance::Pod),
        BasisKind::Balancing => {
            let psi = basis
                .adjoint_modes
                .as_ref()
                .ok_or_else(|| Error::invalid("balancing basis without adjoint modes"))?;
            (psi.columns(0, r), system.m_weights(), Provenance::Bpod)
        }
    };
    let project = |ops: Vec<&CMat>| -> CMat {
        let applied = Blocks(ops.iter().zip(&phi.0).map(|(a, p)| linalg::cmul(a, p)).collect());
        system::gram(&left, &w, &applied, field)
    };
    let ar_conv = project(system.blocks.iter().map(|b| &b.a_conv).collect());
    let ar_diff = project(system.blocks.iter().map(|b| &b.a_diff).collect());
    let ar = channel::assemble(&ar_conv, &ar_diff, system.re);
    let br = system::gram(&left, &w, &system.input(), field);
    let e = system.e_weights();
    let (cr, recon, s) = match (output, basis.kind) {
        (Some(op), _) => {
            let cr = system::gram(&op.theta, &e, &phi, field);
            let recon = op.theta.mul(&cr);
            (cr, recon, op.rank())
        }
        (None, BasisKind::Pod) => (CMat::identity(r, r), phi.clone(), r),
        (None, BasisKind::Balancing) => {
            return Err(Error::invalid("balanced models need the output projection they were built with"))
        }
    };
    Ok(ReducedOrderModel {
        ar,
        br,
        cr,
        ar_conv,
        ar_diff,
        rank: r,
        output_rank: s,
        design_re: system.re,
        re: system.re,
        provenance,
        field,
        recon,
    })
}

/// Controllability and observability Gramians of the realified system, the
/// latter for the full-state energy output.
#[derive(Debug, Clone)]
pub struct GramianPair {
    pub wc: RMat,
    pub wo: RMat,
    pub hsv: Vec<f64>,
}

/// Real (realified) form of a single-block real-field system.
#[derive(Debug, Clone)]
pub struct RealSystem {
    pub a: RMat,
    pub a_conv: RMat,
    pub a_diff: RMat,
    pub b: RMat,
    /// Energy weight `blockdiag(E, E)`.
    pub e: RMat,
    pub m: RMat,
    /// Upper factor with `FᵀF = e`: maps states to energy-orthonormal outputs.
    pub f: RMat,
    pub re: f64,
}

impl RealSystem {
    pub fn new(system: &BlockSystem) -> Result<Self> {
        if system.blocks.len() != 1 {
            return Err(Error::invalid("dense balancing handles single-block systems only"));
        }
        if system.field != Field::Real {
            return Err(Error::invalid("dense balancing is defined for real-field systems"));
        }
        let blk = &system.blocks[0];
        let e = linalg::realify(&linalg::to_complex(&blk.e_weight));
        let chol = nalgebra::Cholesky::new(e.clone())
            .ok_or_else(|| Error::Factorization("energy weight is not positive definite".into()))?;
        Ok(RealSystem {
            a: linalg::realify(&system.a(0)),
            a_conv: linalg::realify(&blk.a_conv),
            a_diff: linalg::realify(&blk.a_diff),
            b: linalg::stack_re_im(&blk.b),
            m: linalg::realify(&linalg::to_complex(&blk.m_weight)),
            f: chol.l().transpose(),
            e,
            re: system.re,
        })
    }
}

/// Square-root balancing of the full realified system, computed once and
/// truncated to any rank.
#[derive(Debug, Clone)]
pub struct BalancedRealization {
    pub sys: RealSystem,
    pub gramians: GramianPair,
    /// Balancing modes (columns of `T`) and their adjoints (`S`, `SᵀT = I`).
    pub t: RMat,
    pub s: RMat,
}

impl BalancedRealization {
    pub fn new(system: &BlockSystem) -> Result<Self> {
        let absc = system.abscissa()?;
        if absc >= 0.0 {
            return Err(Error::Unstable(absc));
        }
        let sys = RealSystem::new(system)?;
        let bbt = &sys.b * sys.b.transpose();
        let wc = linalg::lyapunov_real(&sys.a, &bbt)?;
        let wo = linalg::lyapunov_real(&sys.a.transpose(), &sys.e)?;
        let lc = linalg::psd_factor(&wc);
        let lo = linalg::psd_factor(&wo);
        let (u, hsv, v) = linalg::svd_desc(&(lo.transpose() * &lc))?;
        let top = hsv.first().copied().unwrap_or(0.0);
        let k = hsv.iter().filter(|&&x| top > 0.0 && x >= HSV_RANK_TOL * top).count();
        let mut t = &lc * v.columns(0, k);
        let mut s = &lo * u.columns(0, k);
        for j in 0..k {
            let f = 1.0 / hsv[j].sqrt();
            t.column_mut(j).scale_mut(f);
            s.column_mut(j).scale_mut(f);
        }
        Ok(BalancedRealization { sys, gramians: GramianPair { wc, wo, hsv }, t, s })
    }

    pub fn hsv(&self) -> &[f64] {
        &self.gramians.hsv
    }

    pub fn max_rank(&self) -> usize {
        self.t.ncols()
    }

    /// Relative Lyapunov residuals of the two Gramians.
    pub fn residuals(&self) -> (f64, f64) {
        let (a, g) = (&self.sys.a, &self.gramians);
        let bbt = &self.sys.b * self.sys.b.transpose();
        let rc = (a * &g.wc + &g.wc * a.transpose() + &bbt).norm() / bbt.norm();
        let ro = (a.transpose() * &g.wo + &g.wo * a + &self.sys.e).norm() / self.sys.e.norm();
        (rc, ro)
    }

    /// Rank-`r` truncation. Outputs are energy-orthonormal coordinates of the
    /// reconstructed full state.
    pub fn truncate(&self, r: usize) -> Result<ReducedOrderModel> {
        if r == 0 || r > self.max_rank() {
            return Err(Error::invalid(format!("rank {r} outside 1..={}", self.max_rank())));
        }
        let t = self.t.columns(0, r).into_owned();
        let st = self.s.columns(0, r).transpose();
        let ar_conv = linalg::to_complex(&(&st * &self.sys.a_conv * &t));
        let ar_diff = linalg::to_complex(&(&st * &self.sys.a_diff * &t));
        Ok(ReducedOrderModel {
            ar: channel::assemble(&ar_conv, &ar_diff, self.sys.re),
            br: linalg::to_complex(&(&st * &self.sys.b)),
            cr: linalg::to_complex(&(&self.sys.f * &t)),
            ar_conv,
            ar_diff,
            rank: r,
            output_rank: self.sys.f.nrows(),
            design_re: self.sys.re,
            re: self.sys.re,
            provenance: Provenance::ExactBt,
            field: Field::Real,
            recon: Blocks::single(linalg::unstack_re_im(&t)),
        })
    }

    /// Reduced Gramians `SᵀWcS` and `TᵀWoT` of a rank-`r` truncation.
    pub fn reduced_gramians(&self, r: usize) -> (RMat, RMat) {
        let t = self.t.columns(0, r);
        let s = self.s.columns(0, r);
        (s.transpose() * &self.gramians.wc * s, t.transpose() * &self.gramians.wo * t)
    }
}

pub fn exact_balanced_truncation(system: &BlockSystem, r: usize) -> Result<(ReducedOrderModel, GramianPair)> {
    let bal = BalancedRealization::new(system)?;
    let rom = bal.truncate(r)?;
    Ok((rom, bal.gramians))
}

/// Hankel singular values from the Gramians of the M-weighted adjoint system,
/// `A G_c + G_c A⁺ + B B⁺ = 0` and `A⁺ G_o + G_o A + C⁺ C = 0` with
/// `A⁺ = M⁻¹AᵀM`, `B⁺ = BᵀM`, `C⁺ = M⁻¹Cᵀ`, as `sqrt(eig(G_c G_o))`. These
/// are solved as general Sylvester equations, independently of the
/// symmetric Lyapunov route.
pub fn weighted_hsv(system: &BlockSystem) -> Result<Vec<f64>> {
    let sys = RealSystem::new(system)?;
    let m_inv = sys
        .m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Factorization("mass weight not invertible".into()))?;
    let a_plus = &m_inv * sys.a.transpose() * &sys.m;
    let bbp = &sys.b * sys.b.transpose() * &sys.m;
    let cpc = &m_inv * sys.f.transpose() * &sys.f;
    let a = linalg::to_complex(&sys.a);
    let ap = linalg::to_complex(&a_plus);
    let gc = linalg::sylvester(&a, &ap, &linalg::to_complex(&(-bbp)))?;
    let go = linalg::sylvester(&ap, &a, &linalg::to_complex(&(-cpc)))?;
    let prod = linalg::cmul(&gc, &go);
    let mut hsv: Vec<f64> = linalg::eigenvalues(&prod)?.iter().map(|l| l.re.max(0.0).sqrt()).collect();
    hsv.sort_by(|x, y| y.total_cmp(x));
    Ok(hsv)
}

/// `√w`-scaled realified snapshots give the empirical Gramian `X̃X̃ᵀ`.
pub fn empirical_gramian(x: &SnapshotSet) -> RMat {
    let xr = linalg::stack_re_im(&x.data.stacked());
    &xr * xr.transpose()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::channel::WavenumberPair;
    use crate::linalg::c64;
    use crate::dynamics::{self, Schedule, StepOptions};
    use crate::modal;
    use crate::spectral::chebyshev_grid;

    pub(crate) fn test_system(n: usize, re: f64) -> BlockSystem {
        let grid = chebyshev_grid(n).unwrap();
        let m = channel::build_os_squire(WavenumberPair::new(1.0, 1.0), re, &grid).unwrap();
        let y = grid.interior();
        let k = y.len();
        let b = CMat::from_fn(2 * k, 1, |i, _| {
            let yy = y[i % k];
            if i < k {
                c64((1.0 - yy * yy).powi(2) * (1.0 + 0.5 * yy), 0.0)
            } else {
                c64(0.0, yy * (1.0 - yy * yy))
            }
        });
        BlockSystem::from_model(&m.with_input(b).unwrap(), Field::Real)
    }

    fn bpod_case(n: usize, s: usize) -> (BlockSystem, modal::ModeBasis, OutputProjection, ModeBasis) {
        let sys = test_system(n, 1000.0);
        let opts = StepOptions { dt: 0.01, ..Default::default() };
        let t_end = dynamics::decay_horizon(&sys, 0, 1e-6, 0.5, 3000.0).unwrap().unwrap();
        let sched = Schedule::uniform(400, t_end).unwrap();
        let x = dynamics::direct_impulse_snapshots(&sys, 0, &sched, &opts).unwrap();
        let pod = modal::pod(&x, &sys.e_weights(), Field::Real, None).unwrap();
        let op = modal::output_projection(&pod, s).unwrap();
        let y = dynamics::adjoint_impulse_snapshots(&sys, &pod, s, &sched, &opts).unwrap();
        let (bal, _) = bpod(&x, &y, &sys.m_weights(), 12).unwrap();
        (sys, pod, op, bal)
    }

    #[test]
    fn biorthogonality() {
        let (sys, _, _, bal) = bpod_case(24, 4);
        let psi = bal.adjoint_modes.as_ref().unwrap();
        let g = system::real_gram(psi, &sys.m_weights(), &bal.modes);
        let err = (g - RMat::identity(bal.rank(), bal.rank())).norm();
        assert!(err < 1e-8, "{err}");
        assert!(bal.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn split_parts_reassemble() {
        let (sys, pod, op, bal) = bpod_case(16, 4);
        for rom in [reduce(&sys, &pod, 6, None).unwrap(), reduce(&sys, &bal, 4, Some(&op)).unwrap()] {
            let ar = channel::assemble(&rom.ar_conv, &rom.ar_diff, rom.design_re);
            assert!(linalg::frob(&(ar - &rom.ar)) <= 1e-12 * linalg::frob(&rom.ar));
        }
        assert!(reduce(&sys, &bal, 4, None).is_err());
        assert!(reduce(&sys, &pod, 0, None).is_err());
    }

    #[test]
    fn exact_bt_reduced_gramians_are_diagonal() {
        let sys = test_system(24, 1000.0);
        let bal = BalancedRealization::new(&sys).unwrap();
        let (rc, ro) = bal.residuals();
        assert!(rc < 1e-8 && ro < 1e-8, "{rc} {ro}");
        let r = bal.max_rank().min(30);
        let (p, q) = bal.reduced_gramians(r);
        let sig = RMat::from_diagonal(&nalgebra::DVector::from_column_slice(&bal.hsv()[..r]));
        let s1 = bal.hsv()[0];
        assert!((p - &sig).norm() <= 1e-8 * s1);
        assert!((q - &sig).norm() <= 1e-8 * s1);
    }

    #[test]
    fn exact_bt_truncations_are_stable() {
        let sys = test_system(24, 1000.0);
        let bal = BalancedRealization::new(&sys).unwrap();
        let h = bal.hsv();
        for r in 1..=16 {
            if h[r - 1] > h[r] * (1.0 + 1e-9) {
                let rom = bal.truncate(r).unwrap();
                assert!(rom.abscissa().unwrap() < 0.0, "rank {r}");
            }
        }
    }

    #[test]
    fn refuses_unstable_systems() {
        let grid = chebyshev_grid(32).unwrap();
        let m = channel::build_os_squire(WavenumberPair::new(1.02, 0.0), 8000.0, &grid).unwrap();
        let b = CMat::from_element(m.n_state(), 1, c64(1.0, 0.0));
        let sys = BlockSystem::from_model(&m.with_input(b).unwrap(), Field::Real);
        assert!(matches!(BalancedRealization::new(&sys), Err(Error::Unstable(_))));
    }

    #[test]
    fn weighted_adjoint_gives_same_hsv() {
        let sys = test_system(20, 1000.0);
        let plain = BalancedRealization::new(&sys).unwrap();
        let weighted = weighted_hsv(&sys).unwrap();
        let s1 = plain.hsv()[0];
        for (j, (a, b)) in plain.hsv().iter().zip(&weighted).enumerate().take(12) {
            assert!((a - b).abs() <= 1e-6 * a.max(1e-3 * s1), "σ{} {a} vs {b}", j + 1);
        }
    }

    #[test]
    fn empirical_gramian_matches_lyapunov() {
        let sys = test_system(16, 400.0);
        let bal = BalancedRealization::new(&sys).unwrap();
        let t_end = dynamics::decay_horizon(&sys, 0, 1e-10, 0.5, 5000.0).unwrap().unwrap();
        let opts = StepOptions { dt: 0.01, ..Default::default() };
        let x = dynamics::direct_impulse_snapshots(&sys, 0, &Schedule::uniform(4000, t_end).unwrap(), &opts).unwrap();
        let emp = empirical_gramian(&x);
        let rel = (&emp - &bal.gramians.wc).norm() / bal.gramians.wc.norm();
        assert!(rel < 0.02, "{rel}");
    }

    #[test]
    fn pair_boundaries() {
        let v = [10.0, 9.9, 5.0, 4.99, 4.98, 1.0];
        assert_eq!(pair_boundary(&v, 1, 0.02), 2);
        assert_eq!(pair_boundary(&v, 2, 0.02), 2);
        assert_eq!(pair_boundary(&v, 3, 0.02), 5);
        assert_eq!(pair_boundary(&v, 6, 0.02), 6);
    }

    #[test]
    fn bpod_rank_is_capped() {
        let (sys, _, _, _) = bpod_case(16, 1);
        let opts = StepOptions { dt: 0.01, ..Default::default() };
        let sched = Schedule::uniform(3, 1.0).unwrap();
        let x = dynamics::direct_impulse_snapshots(&sys, 0, &sched, &opts).unwrap();
        let pod = modal::pod(&x, &sys.e_weights(), Field::Real, None).unwrap();
        let y = dynamics::adjoint_impulse_snapshots(&sys, &pod, 1, &sched, &opts).unwrap();
        let (b, d) = bpod(&x, &y, &sys.m_weights(), 10).unwrap();
        assert!(b.truncated);
        assert!(b.rank() <= 3 && d.numerical_rank == b.rank());
    }
}
