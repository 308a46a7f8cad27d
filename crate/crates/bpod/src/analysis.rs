//! Evaluation of full and reduced models: impulse-response errors, frequency
//! response and H∞ error against the balanced-truncation bounds, spectra,
//! Reynolds-number continuation, subspace traces and input-projection norms.
//!
//! Outputs of real-field systems are real. Their transfer function at `iω`
//! combines the complex-coefficient responses at `+ω` and `−ω`:
//! `H(iω) = ½(K(iω − A)⁻¹b + conj(K(−iω − A)⁻¹b))` where `K` is the complex
//! form of the (real) output map.

use std::collections::HashMap;

use crate::balancing::ReducedOrderModel;
use crate::channel::{self, golden_max};
use crate::dynamics::{trapezoid_weights, SnapshotSet};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, RMat, C64, I};
use crate::modal::{BasisKind, ModeBasis, OutputProjection};
use crate::system::{self, BlockSystem, BlockWeight, Blocks, Field};

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub omegas: Vec<f64>,
    pub sigma_max: Vec<f64>,
}

impl FrequencyResponse {
    /// Sweep point with the largest gain.
    pub fn peak(&self) -> (f64, f64) {
        self.omegas
            .iter()
            .zip(&self.sigma_max)
            .fold((f64::NAN, f64::NEG_INFINITY), |acc, (&w, &s)| if s > acc.1 { (w, s) } else { acc })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub rank: usize,
    /// Relative time-domain error; NaN when not computed.
    pub two_norm_rel: f64,
    pub hinf_est: f64,
    /// `σ_{r+1}`.
    pub hsv_lower: f64,
    /// `2 Σ_{j>r} σ_j`.
    pub hsv_upper: f64,
}

impl ErrorReport {
    pub fn bounds(hsv: &[f64], r: usize) -> (f64, f64) {
        let lower = hsv.get(r).copied().unwrap_or(0.0);
        let upper = 2.0 * hsv.iter().skip(r).sum::<f64>();
        (lower, upper)
    }

    /// Whether the H∞ estimate lies inside the bounds with relative `slack`.
    pub fn within_bounds(&self, slack: f64) -> bool {
        self.hinf_est >= self.hsv_lower * (1.0 - slack) && self.hinf_est <= self.hsv_upper * (1.0 + slack)
    }
}

/// `n` log-spaced frequencies on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

pub trait TransferFunction {
    fn n_outputs(&self) -> usize;
    /// `H(iω)` as an outputs × inputs matrix.
    fn eval(&self, omega: f64) -> Result<CMat>;
}

/// Largest singular value of a small complex matrix.
pub fn sigma_max(h: &CMat) -> f64 {
    if h.ncols() == 1 || h.nrows() == 1 {
        return h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    h.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Output map of the full model.
#[derive(Debug, Clone, Copy)]
pub enum FullOutput<'a> {
    /// Energy-orthonormal coordinates of the full state.
    State,
    /// Coefficients of the leading POD modes.
    Pod(&'a OutputProjection),
}

struct SchurBlock {
    t: CMat,
    qb: CMat,
    kq: CMat,
}

/// Full block-diagonal model evaluated through one Schur form per block.
pub struct FullModel {
    blocks: Vec<SchurBlock>,
    field: Field,
    n_out: usize,
    stacked: bool,
}

/// Upper factor `F` with `FᵀF = E`.
fn energy_factor(e: &RMat) -> Result<RMat> {
    let chol = nalgebra::Cholesky::new(e.clone())
        .ok_or_else(|| Error::Factorization("energy weight is not positive definite".into()))?;
    Ok(chol.l().transpose())
}

/// Complex output maps `K_k` per block.
fn output_maps(system: &BlockSystem, output: FullOutput) -> Result<Vec<CMat>> {
    let mut maps = Vec::with_capacity(system.blocks.len());
    for (k, blk) in system.blocks.iter().enumerate() {
        let n = blk.e_weight.nrows();
        let map = match output {
            FullOutput::State => {
                let f = linalg::to_complex(&energy_factor(&blk.e_weight)?);
                match system.field {
                    Field::Real => {
                        let mut kk = CMat::zeros(2 * n, n);
                        kk.rows_mut(0, n).copy_from(&f);
                        kk.rows_mut(n, n).copy_from(&(&f * (-I)));
                        kk
                    }
                    Field::Complex => f,
                }
            }
            FullOutput::Pod(op) => {
                let theta = &op.theta.0[k];
                linalg::cmul_adj(theta, &linalg::to_complex(&blk.e_weight))
            }
        };
        maps.push(map);
    }
    Ok(maps)
}

impl FullModel {
    pub fn new(system: &BlockSystem, output: FullOutput) -> Result<Self> {
        let maps = output_maps(system, output)?;
        let mut blocks = Vec::with_capacity(system.blocks.len());
        for (k, kmap) in maps.into_iter().enumerate() {
            let s = linalg::Schur::new(&system.a(k))?;
            blocks.push(SchurBlock {
                qb: linalg::cmul_adj(&s.q, &system.blocks[k].b),
                kq: linalg::cmul(&kmap, &s.q),
                t: s.t,
            });
        }
        // full-state outputs stack block by block; POD coefficients sum
        let stacked = matches!(output, FullOutput::State);
        let n_out = if stacked {
            blocks.iter().map(|b| b.kq.nrows()).sum()
        } else {
            blocks.first().map_or(0, |b| b.kq.nrows())
        };
        Ok(FullModel { blocks, field: system.field, n_out, stacked })
    }
}

/// `(sI − T)⁻¹ R` for upper-triangular `T`.
fn shifted_tri_solve(t: &CMat, s: C64, rhs: &CMat) -> CMat {
    let n = t.nrows();
    let mut x = rhs.clone();
    for c in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut acc = x[(i, c)];
            for j in (i + 1)..n {
                acc += t[(i, j)] * x[(j, c)];
            }
            x[(i, c)] = acc / (s - t[(i, i)]);
        }
    }
    x
}

impl TransferFunction for FullModel {
    fn n_outputs(&self) -> usize {
        self.n_out
    }

    fn eval(&self, omega: f64) -> Result<CMat> {
        let p = self.blocks.first().map_or(0, |b| b.qb.ncols());
        let mut out = CMat::zeros(self.n_out, p);
        let mut row = 0;
        for b in &self.blocks {
            let z = shifted_tri_solve(&b.t, c64(0.0, omega), &b.qb);
            let mut y = linalg::cmul(&b.kq, &z);
            if self.field == Field::Real {
                let w = shifted_tri_solve(&b.t, c64(0.0, -omega), &b.qb);
                let yw = linalg::cmul(&b.kq, &w);
                y = (y + yw.map(|v| v.conj())) * c64(0.5, 0.0);
            }
            if self.stacked {
                out.rows_mut(row, y.nrows()).copy_from(&y);
                row += y.nrows();
            } else {
                out += &y;
            }
        }
        if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Factorization(format!("singular resolvent at ω = {omega}")));
        }
        Ok(out)
    }
}

/// Reduced model `out · (iω − Ar)⁻¹ Br`.
pub struct RomTf {
    ar: CMat,
    br: CMat,
    out: CMat,
}

impl RomTf {
    /// The model's own outputs.
    pub fn native(rom: &ReducedOrderModel) -> Self {
        RomTf { ar: rom.ar.clone(), br: rom.br.clone(), out: rom.cr.clone() }
    }

    /// Energy-orthonormal coordinates of the reconstructed full state, in the
    /// same layout as `FullOutput::State`.
    pub fn full_state(rom: &ReducedOrderModel, e: &BlockWeight) -> Result<Self> {
        let mut rows: Vec<CMat> = Vec::new();
        for (rb, eb) in rom.recon.0.iter().zip(&e.blocks) {
            let f = energy_factor(eb)?;
            match rom.field {
                Field::Real => {
                    rows.push(linalg::to_complex(&(&f * linalg::re_part(rb))));
                    rows.push(linalg::to_complex(&(&f * linalg::im_part(rb))));
                }
                Field::Complex => rows.push(linalg::cmul(&linalg::to_complex(&f), rb)),
            }
        }
        let n: usize = rows.iter().map(|r| r.nrows()).sum();
        let mut out = CMat::zeros(n, rom.rank);
        let mut at = 0;
        for r in rows {
            out.rows_mut(at, r.nrows()).copy_from(&r);
            at += r.nrows();
        }
        Ok(RomTf { ar: rom.ar.clone(), br: rom.br.clone(), out })
    }
}

impl RomTf {
    /// Output-projection coefficients of the reconstructed state, matching
    /// `FullOutput::Pod(op)`.
    pub fn projected(rom: &ReducedOrderModel, op: &OutputProjection, e: &BlockWeight) -> Self {
        RomTf { ar: rom.ar.clone(), br: rom.br.clone(), out: op.coefficients(&rom.recon, e) }
    }
}

impl TransferFunction for RomTf {
    fn n_outputs(&self) -> usize {
        self.out.nrows()
    }

    fn eval(&self, omega: f64) -> Result<CMat> {
        let r = self.ar.nrows();
        let m = CMat::identity(r, r) * c64(0.0, omega) - &self.ar;
        let a = linalg::solve(&m, &self.br)?;
        Ok(&self.out * a)
    }
}

/// Difference of two transfer functions with matching outputs.
pub struct Difference<'a>(pub &'a dyn TransferFunction, pub &'a dyn TransferFunction);

impl TransferFunction for Difference<'_> {
    fn n_outputs(&self) -> usize {
        self.0.n_outputs()
    }

    fn eval(&self, omega: f64) -> Result<CMat> {
        let a = self.0.eval(omega)?;
        let b = self.1.eval(omega)?;
        if a.shape() != b.shape() {
            return Err(Error::dim("transfer functions have different output spaces"));
        }
        Ok(a - b)
    }
}

/// `σ_max(H(iω))` over a frequency grid.
pub fn frequency_response(tf: &dyn TransferFunction, omegas: &[f64]) -> Result<FrequencyResponse> {
    if omegas.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::invalid("frequencies must be positive"));
    }
    let sigma = omegas.iter().map(|&w| tf.eval(w).map(|h| sigma_max(&h))).collect::<Result<Vec<_>>>()?;
    Ok(FrequencyResponse { omegas: omegas.to_vec(), sigma_max: sigma })
}

/// Peak of `σ_max` refined by golden-section search around the best sweep
/// point (in log frequency).
pub fn refined_peak(tf: &dyn TransferFunction, omegas: &[f64]) -> Result<(f64, f64)> {
    let fr = frequency_response(tf, omegas)?;
    let k = fr
        .sigma_max
        .iter()
        .enumerate()
        .fold(0, |best, (i, &s)| if s > fr.sigma_max[best] { i } else { best });
    let lo = omegas[k.saturating_sub(1)].ln();
    let hi = omegas[(k + 1).min(omegas.len() - 1)].ln();
    if hi <= lo {
        return Ok((omegas[k], fr.sigma_max[k]));
    }
    let f = |lw: f64| tf.eval(lw.exp()).map(|h| sigma_max(&h)).unwrap_or(f64::NEG_INFINITY);
    let lw = golden_max(f, lo, hi, 1e-9);
    let s = f(lw);
    Ok(if s >= fr.sigma_max[k] { (lw.exp(), s) } else { (omegas[k], fr.sigma_max[k]) })
}

/// H∞ norm of the error system with the balanced-truncation bounds for rank
/// `r` taken from `hsv`.
pub fn hinf_error(
    full: &dyn TransferFunction,
    rom: &dyn TransferFunction,
    hsv: &[f64],
    r: usize,
    omegas: &[f64],
) -> Result<ErrorReport> {
    let diff = Difference(full, rom);
    let (_, hinf) = refined_peak(&diff, omegas)?;
    let (lower, upper) = ErrorReport::bounds(hsv, r);
    Ok(ErrorReport { rank: r, two_norm_rel: f64::NAN, hinf_est: hinf, hsv_lower: lower, hsv_upper: upper })
}

/// Output samples `values[:, k]` at `times[k]`.
#[derive(Debug, Clone)]
pub struct OutputSeries {
    pub times: Vec<f64>,
    pub values: CMat,
}

/// `‖y_full − y_rom‖ / ‖y_full‖` in the time-quadrature L2 norm.
pub fn impulse_error_2norm(full: &OutputSeries, rom: &OutputSeries) -> Result<f64> {
    if full.times != rom.times || full.values.shape() != rom.values.shape() {
        return Err(Error::dim("output series are sampled differently"));
    }
    let w = trapezoid_weights(&full.times);
    let (mut num, mut den) = (0.0, 0.0);
    for (k, wk) in w.iter().enumerate() {
        num += wk * (full.values.column(k) - rom.values.column(k)).norm_squared();
        den += wk * full.values.column(k).norm_squared();
    }
    Ok((num / den).sqrt())
}

/// Reduced impulse response `a(t_k) = e^{Ar t_k} Br[:, col]` (r × m).
pub fn rom_impulse(rom: &ReducedOrderModel, col: usize, times: &[f64]) -> Result<CMat> {
    if col >= rom.br.ncols() {
        return Err(Error::invalid("input column out of range"));
    }
    let r = rom.rank;
    let mut out = CMat::zeros(r, times.len());
    let mut a = rom.br.column(col).into_owned();
    let mut t = 0.0;
    let mut cache: HashMap<u64, CMat> = HashMap::new();
    for (k, &tk) in times.iter().enumerate() {
        let span = tk - t;
        if span < 0.0 {
            return Err(Error::invalid("times must be increasing"));
        }
        if span > 0.0 {
            let step = match cache.get(&span.to_bits()) {
                Some(s) => s.clone(),
                None => {
                    let s = linalg::expm(&(&rom.ar * c64(span, 0.0)))?;
                    cache.insert(span.to_bits(), s.clone());
                    s
                }
            };
            a = step * a;
            t = tk;
        }
        out.column_mut(k).copy_from(&a);
    }
    Ok(out)
}

/// Model output series from reduced coordinates.
pub fn rom_outputs(rom: &ReducedOrderModel, coeffs: &CMat, times: &[f64]) -> OutputSeries {
    OutputSeries { times: times.to_vec(), values: &rom.cr * coeffs }
}

/// Output-projection coefficients of a model's reconstructed state.
pub fn projected_outputs(rom: &ReducedOrderModel, op: &OutputProjection, e: &BlockWeight, coeffs: &CMat, times: &[f64]) -> OutputSeries {
    OutputSeries { times: times.to_vec(), values: op.coefficients(&rom.recon, e) * coeffs }
}

/// POD-coefficient outputs of the full snapshots (`Θ_s⁺ x(t_k)`).
pub fn full_outputs(set: &SnapshotSet, op: &OutputProjection, e: &BlockWeight) -> OutputSeries {
    let mut y = op.coefficients(&set.data, e);
    for (k, w) in set.weights.iter().enumerate() {
        y.column_mut(k).scale_mut(1.0 / w.sqrt());
    }
    OutputSeries { times: set.times.clone(), values: y }
}

/// Full-state impulse error `‖x − recon·a‖ / ‖x‖` in the time-integrated
/// energy norm, evaluated from inner products without forming the residual.
pub fn state_error_2norm(set: &SnapshotSet, e: &BlockWeight, recon: &Blocks, coeffs: &CMat, field: Field) -> Result<f64> {
    let parts = state_error_parts(set, e, recon, coeffs, field)?;
    let num: f64 = parts.iter().map(|p| p.0).sum();
    let den: f64 = parts.iter().map(|p| p.1).sum();
    Ok((num.max(0.0) / den).sqrt())
}

/// Per-sample `(w_k‖x_k − recon a_k‖², w_k‖x_k‖²)`.
fn state_error_parts(set: &SnapshotSet, e: &BlockWeight, recon: &Blocks, coeffs: &CMat, field: Field) -> Result<Vec<(f64, f64)>> {
    if coeffs.ncols() != set.len() || coeffs.nrows() != recon.ncols() {
        return Err(Error::dim("coefficient history does not match the snapshots"));
    }
    let mut scaled = coeffs.clone();
    for (k, w) in set.weights.iter().enumerate() {
        scaled.column_mut(k).scale_mut(w.sqrt());
    }
    let cross = system::gram(recon, e, &set.data, field);
    let rr = system::gram(recon, e, recon, field);
    let ex = system::apply_weight(e, &set.data);
    let mut out = Vec::with_capacity(set.len());
    for k in 0..set.len() {
        let mut xx = 0.0;
        for (xb, eb) in set.data.0.iter().zip(&ex.0) {
            xx += xb.column(k).iter().zip(eb.column(k).iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        }
        let a = scaled.column(k);
        let ax = (a.adjoint() * cross.column(k))[(0, 0)].re;
        let aa = (a.adjoint() * &rr * a)[(0, 0)].re;
        out.push((xx - 2.0 * ax + aa, xx));
    }
    Ok(out)
}

/// Energy `E(t_k)` of the unweighted snapshots.
pub fn snapshot_energy(set: &SnapshotSet, e: &BlockWeight) -> Vec<f64> {
    let ex = system::apply_weight(e, &set.data);
    (0..set.len())
        .map(|k| {
            let s: f64 = set
                .data
                .0
                .iter()
                .zip(&ex.0)
                .map(|(xb, eb)| xb.column(k).iter().zip(eb.column(k).iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>())
                .sum();
            s / set.weights[k]
        })
        .collect()
}

/// Energy of the full-state estimate `recon·a(t_k)`.
pub fn rom_energy(rom: &ReducedOrderModel, e: &BlockWeight, coeffs: &CMat) -> Vec<f64> {
    let g = system::gram(&rom.recon, e, &rom.recon, rom.field);
    (0..coeffs.ncols())
        .map(|k| {
            let a = coeffs.column(k);
            (a.adjoint() * &g * a)[(0, 0)].re
        })
        .collect()
}

/// Eigenvalues sorted by real part, descending.
pub fn spectrum(a: &CMat) -> Result<Vec<C64>> {
    linalg::sorted_spectrum(a)
}

/// Pair each reference eigenvalue (dominant first) with its nearest unused
/// candidate. Returns `(reference, candidate, distance)`.
pub fn match_eigenvalues(reference: &[C64], candidates: &[C64]) -> Vec<(C64, C64, f64)> {
    let mut used = vec![false; candidates.len()];
    let mut out = Vec::new();
    for &r in reference {
        let best = (0..candidates.len())
            .filter(|&j| !used[j])
            .min_by(|&i, &j| (candidates[i] - r).norm().total_cmp(&(candidates[j] - r).norm()));
        if let Some(j) = best {
            used[j] = true;
            out.push((r, candidates[j], (candidates[j] - r).norm()));
        }
    }
    out
}

/// For each eigenvalue λ of block `k`, the modal controllability residual
/// `|⟨w, b⟩_M| / (‖w‖_M ‖b‖_M)` where `w` is the adjoint eigenvector with
/// eigenvalue `λ̄`. A zero residual marks a mode the input cannot excite.
pub fn controllability_residuals(system: &BlockSystem, k: usize) -> Result<Vec<(C64, f64)>> {
    let blk = &system.blocks[k];
    let aplus = channel::weighted_adjoint(&system.a(k), &blk.m_weight)?;
    let s = linalg::Schur::new(&aplus)?;
    let lam = s.eigenvalues();
    let vecs = s.eigenvectors();
    let mb = linalg::apply_real(&blk.m_weight, &blk.b);
    let bnorm = linalg::herm_inner(&blk.b, &blk.m_weight, &blk.b)[(0, 0)].re.sqrt();
    let mut out: Vec<(C64, f64)> = (0..lam.len())
        .map(|j| {
            let w = vecs.columns(j, 1).into_owned();
            let wn = linalg::herm_inner(&w, &blk.m_weight, &w)[(0, 0)].re.sqrt();
            let proj = (w.adjoint() * &mb).norm();
            (lam[j].conj(), proj / (wn * bnorm))
        })
        .collect();
    out.sort_by(|a, b| b.0.re.total_cmp(&a.0.re));
    Ok(out)
}

/// The same reduced model at another Reynolds number: `Ar = Ar_conv + Ar_diff/Re`.
pub fn reynolds_continuation(rom: &ReducedOrderModel, re_new: f64) -> Result<ReducedOrderModel> {
    if !(re_new > 0.0) {
        return Err(Error::invalid("Reynolds number must be positive"));
    }
    let mut out = rom.clone();
    out.ar = channel::assemble(&rom.ar_conv, &rom.ar_diff, re_new);
    out.re = re_new;
    Ok(out)
}

/// Orthonormal basis of the span of `x` under `w`.
fn orthonormal_span(x: &Blocks, w: &BlockWeight, field: Field) -> Blocks {
    let g = system::gram(x, w, x, field);
    let (vals, vecs) = match field {
        Field::Real => {
            let (v, e) = linalg::sym_eig_desc(&linalg::re_part(&g));
            (v, linalg::to_complex(&e))
        }
        Field::Complex => linalg::herm_eig_desc(&g),
    };
    let top = vals.first().copied().unwrap_or(0.0);
    let k = vals.iter().filter(|&&l| top > 0.0 && l > 1e-12 * top).count();
    let mut c = vecs.columns(0, k).into_owned();
    for j in 0..k {
        c.column_mut(j).scale_mut(1.0 / vals[j].sqrt());
    }
    x.mul(&c)
}

/// `Tr(P_A P_B P_A)` for the `w`-orthogonal projectors onto two subspaces.
pub fn subspace_trace(a: &Blocks, b: &Blocks, w: &BlockWeight, field: Field) -> Result<f64> {
    if a.0.len() != b.0.len() || a.nrows() != b.nrows() || a.0.len() != w.blocks.len() {
        return Err(Error::dim("subspaces live in different spaces"));
    }
    let qa = orthonormal_span(a, w, field);
    let qb = orthonormal_span(b, w, field);
    let c = system::gram(&qa, w, &qb, field);
    Ok(c.iter().map(|z| z.norm_sqr()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    Orthogonal,
    Petrov,
}

/// `‖P_r B‖_E / ‖B‖_E` for the rank-`r` projector of a basis: orthogonal
/// `Θ_rΘ_r⁺` or oblique `Φ_rΨ_r⁺` (M-paired adjoint modes).
pub fn input_projection_norm(
    basis: &ModeBasis,
    b: &Blocks,
    system: &BlockSystem,
    r: usize,
    mode: ProjectionMode,
) -> Result<f64> {
    let field = basis.field;
    let e = system.e_weights();
    let bnorm = system::gram(b, &e, b, field)[(0, 0)].re.sqrt();
    if r == 0 {
        return Ok(0.0);
    }
    if r > basis.rank() {
        return Err(Error::invalid(format!("rank {r} exceeds basis rank {}", basis.rank())));
    }
    let phi = basis.modes.columns(0, r);
    let coef = match mode {
        ProjectionMode::Orthogonal => {
            if basis.kind != BasisKind::Pod {
                let q = orthonormal_span(&phi, &e, field);
                let c = system::gram(&q, &e, b, field);
                let p = q.mul(&c);
                return Ok(system::gram(&p, &e, &p, field)[(0, 0)].re.sqrt() / bnorm);
            }
            system::gram(&phi, &e, b, field)
        }
        ProjectionMode::Petrov => {
            let psi = basis
                .adjoint_modes
                .as_ref()
                .ok_or_else(|| Error::invalid("Petrov projection needs adjoint modes"))?;
            system::gram(&psi.columns(0, r), &system.m_weights(), b, field)
        }
    };
    let p = phi.mul(&coef);
    Ok(system::gram(&p, &e, &p, field)[(0, 0)].re.sqrt() / bnorm)
}
