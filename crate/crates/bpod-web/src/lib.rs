//! Browser bindings: eigenvalue spectrum, transient-growth envelope and a
//! POD vs balanced-POD frequency-response comparison for one wavenumber pair.
//!
//! Every function returns a flat `Float64Array`; the layouts are documented
//! per function and decoded in `www/index.html`.

use bpod::analysis::{self, FullModel, FullOutput, RomTf};
use bpod::balancing;
use bpod::channel::{self, Horizon, StateSpaceModel, WavenumberPair};
use bpod::dynamics::{self, Schedule, StepOptions};
use bpod::linalg::CMat;
use bpod::modal;
use bpod::spectral;
use bpod::system::{BlockSystem, Field};
use wasm_bindgen::prelude::*;

fn model(alpha: f64, beta: f64, re: f64, n: usize) -> bpod::Result<StateSpaceModel> {
    let grid = spectral::chebyshev_grid(n)?;
    channel::build_os_squire(WavenumberPair::new(alpha, beta), re, &grid)
}

/// Least-stable eigenvalues, sorted by decreasing real part: `[re0, im0, re1, im1, ...]`.
pub fn spectrum_of(alpha: f64, beta: f64, re: f64, n: usize, count: usize) -> bpod::Result<Vec<f64>> {
    let m = model(alpha, beta, re, n)?;
    let eig = analysis::spectrum(&m.a)?;
    Ok(eig.iter().take(count).flat_map(|z| [z.re, z.im]).collect())
}

/// Envelope `G(t)`: `[t0, G0, t1, G1, ...]`.
pub fn growth_of(alpha: f64, beta: f64, re: f64, n: usize, t_max: f64) -> bpod::Result<Vec<f64>> {
    let m = model(alpha, beta, re, n)?;
    let curve = channel::growth_curve(&m, t_max, t_max / 200.0)?;
    Ok(curve.times.iter().zip(&curve.gain).flat_map(|(t, g)| [*t, *g]).collect())
}

/// Frequency response of the full model, rank-`r` POD and rank-`r` BPOD
/// models (input: optimal perturbation; output: first `s` POD coefficients).
/// Layout: `[ω, σ_full, σ_pod, σ_bpod]` per frequency.
pub fn response_of(alpha: f64, beta: f64, re: f64, n: usize, r: usize, s: usize) -> bpod::Result<Vec<f64>> {
    let m = model(alpha, beta, re, n)?;
    let opt = channel::optimal_perturbation(&m, Horizon::Global { t_max: 60.0 })?;
    let b = CMat::from_column_slice(opt.state.len(), 1, opt.state.as_slice());
    let system = BlockSystem::from_model(&m.with_input(b)?, Field::Real);
    let t_end = dynamics::decay_horizon(&system, 0, 1e-4, 1.0, 2000.0)?
        .ok_or_else(|| bpod::Error::Unstable(0.0))?;
    let sched = Schedule::uniform(200, t_end)?;
    let opts = StepOptions { dt: 0.01, ..Default::default() };
    let e = system.e_weights();
    let x = dynamics::direct_impulse_snapshots(&system, 0, &sched, &opts)?;
    let pod = modal::pod(&x, &e, Field::Real, Some(r.max(s) + 2))?;
    let op = modal::output_projection(&pod, s)?;
    let y = dynamics::adjoint_impulse_snapshots(&system, &pod, s, &sched, &opts)?;
    let (bal, _) = balancing::bpod(&x, &y, &system.m_weights(), r + 2)?;
    let pod_rom = balancing::reduce(&system, &pod, r, None)?;
    let bpod_rom = balancing::reduce(&system, &bal, r.min(bal.rank()), Some(&op))?;

    let omegas = analysis::log_grid(1e-2, 10.0, 150);
    let full = analysis::frequency_response(&FullModel::new(&system, FullOutput::Pod(&op))?, &omegas)?;
    let p = analysis::frequency_response(&RomTf::projected(&pod_rom, &op, &e), &omegas)?;
    let q = analysis::frequency_response(&RomTf::projected(&bpod_rom, &op, &e), &omegas)?;
    Ok((0..omegas.len()).flat_map(|k| [omegas[k], full.sigma_max[k], p.sigma_max[k], q.sigma_max[k]]).collect())
}

fn js(e: bpod::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
pub fn spectrum(alpha: f64, beta: f64, re: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    spectrum_of(alpha, beta, re, n, 60).map_err(js)
}

#[wasm_bindgen]
pub fn growth(alpha: f64, beta: f64, re: f64, n: usize, t_max: f64) -> Result<Vec<f64>, JsValue> {
    growth_of(alpha, beta, re, n, t_max).map_err(js)
}

#[wasm_bindgen]
pub fn response(alpha: f64, beta: f64, re: f64, n: usize, r: usize, s: usize) -> Result<Vec<f64>, JsValue> {
    response_of(alpha, beta, re, n, r, s).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts() {
        let s = spectrum_of(1.0, 1.0, 1000.0, 24, 10).unwrap();
        assert_eq!(s.len(), 20);
        assert!(s[0] < 0.0 && s.chunks(2).all(|z| z[0] <= s[0]));
        let g = growth_of(1.0, 1.0, 1000.0, 24, 40.0).unwrap();
        assert_eq!(g[1], 1.0);
        assert!(g.chunks(2).map(|p| p[1]).fold(0.0, f64::max) > 10.0);
    }

    #[test]
    fn balanced_model_tracks_the_peak() {
        let v = response_of(1.0, 1.0, 1000.0, 24, 2, 4).unwrap();
        let rows: Vec<&[f64]> = v.chunks(4).collect();
        let argmax = |c: usize| rows.iter().max_by(|a, b| a[c].total_cmp(&b[c])).unwrap()[0];
        let (wf, wb) = (argmax(1), argmax(3));
        assert!((wb - wf).abs() / wf < 0.1, "{wf} vs {wb}");
    }
}
