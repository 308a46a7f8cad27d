//! The periodic box: localized actuator, the Fourier map between real 3-D
//! fields and per-wavenumber states, block-diagonal evolution and global
//! energy accounting.
//!
//! A real field is `f = Σ_κ f̂_κ(y) e^{i(k_x x + k_z z)}` with `f̂_{−κ} = f̂_κ*`.
//! Only the independent half of the spectrum is stored: `k_z > 0` with any
//! `k_x`, plus `k_z = 0` with `k_x > 0`. Nyquist modes are not represented
//! and the mean `(0, 0)` is pinned to zero, so each stored block carries the
//! real field `2 Re{f̂_κ e^{iκ·x}}` and the global energy weight of a block
//! is `2 L_x L_z E_κ`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::channel::{self, StateVector, WavenumberPair};
use crate::dynamics::{self, Schedule, SnapshotSet, StepOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, to_complex, CMat, CVec, I};
use crate::spectral::{self, Boundary, Grid1D};
use crate::system::{self, BlockSystem, Blocks, Field, SystemBlock};

#[derive(Debug, Clone, PartialEq)]
pub struct Box3D {
    pub lx: f64,
    pub lz: f64,
    pub nx: usize,
    pub nz: usize,
    pub grid: Grid1D,
}

impl Box3D {
    pub fn new(lx: f64, lz: f64, nx: usize, nz: usize, grid: Grid1D) -> Result<Self> {
        if !(lx > 0.0 && lz > 0.0) {
            return Err(Error::invalid("box periods must be positive"));
        }
        if !nx.is_power_of_two() || !nz.is_power_of_two() || nx < 4 || nz < 4 {
            return Err(Error::invalid(format!("Nx, Nz must be powers of two ≥ 4, got {nx}×{nz}")));
        }
        Ok(Box3D { lx, lz, nx, nz, grid })
    }

    /// The 2π × 2π box with `N` Chebyshev intervals in y.
    pub fn periodic_2pi(nx: usize, n: usize, nz: usize) -> Result<Self> {
        Self::new(2.0 * PI, 2.0 * PI, nx, nz, spectral::chebyshev_grid(n)?)
    }

    pub fn ny(&self) -> usize {
        self.grid.n_points()
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.lx / self.nx as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        k as f64 * self.lz / self.nz as f64
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * self.lx, 0.5 * self.lz)
    }

    /// Independent wavenumber indices in block order.
    pub fn wavenumbers(&self) -> Vec<(i32, i32)> {
        let hx = (self.nx / 2) as i32;
        let hz = (self.nz / 2) as i32;
        let mut out: Vec<(i32, i32)> = (1..hx).map(|kx| (kx, 0)).collect();
        for kz in 1..hz {
            for kx in (1 - hx)..hx {
                out.push((kx, kz));
            }
        }
        out
    }

    pub fn pair(&self, kx: i32, kz: i32) -> WavenumberPair {
        WavenumberPair::new(2.0 * PI * kx as f64 / self.lx, 2.0 * PI * kz as f64 / self.lz)
    }

    /// Number of physical unknowns `2·Nx·Ny·Nz` (v and η on every node).
    pub fn n_physical_states(&self) -> usize {
        2 * self.nx * self.ny() * self.nz
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny() + j) * self.nz + k
    }

    fn fft_index(&self, kx: i32, kz: i32) -> usize {
        let ix = kx.rem_euclid(self.nx as i32) as usize;
        let iz = kz.rem_euclid(self.nz as i32) as usize;
        ix * self.nz + iz
    }
}

/// Real wall-normal velocity and vorticity on the full grid (walls included),
/// indexed `(x, y, z)` with z fastest.
#[derive(Debug, Clone)]
pub struct Field3D {
    pub bx: Box3D,
    pub v: Vec<f64>,
    pub eta: Vec<f64>,
}

impl Field3D {
    pub fn at(&self, i: usize, j: usize, k: usize) -> (f64, f64) {
        let n = self.bx.idx(i, j, k);
        (self.v[n], self.eta[n])
    }

    /// `x, z, v` rows of one y-plane.
    pub fn slice_csv(&self, j: usize) -> String {
        let mut s = String::from("x,z,v\n");
        for i in 0..self.bx.nx {
            for k in 0..self.bx.nz {
                s.push_str(&format!("{:.9e},{:.9e},{:.12e}\n", self.bx.x(i), self.bx.z(k), self.v[self.bx.idx(i, j, k)]));
            }
        }
        s
    }
}

/// Independent half-spectrum, one interior-node state per wavenumber in
/// `Box3D::wavenumbers` order.
#[derive(Debug, Clone)]
pub struct Spectral3D {
    pub bx: Box3D,
    pub modes: Vec<StateVector>,
}

impl Spectral3D {
    pub fn zeros(bx: &Box3D) -> Self {
        let m = bx.grid.interior_count();
        let modes = bx
            .wavenumbers()
            .iter()
            .map(|_| StateVector { v: CVec::zeros(m), eta: CVec::zeros(m) })
            .collect();
        Spectral3D { bx: bx.clone(), modes }
    }

    /// States as one column per block.
    pub fn to_blocks(&self) -> Blocks {
        Blocks(
            self.modes
                .iter()
                .map(|q| {
                    let x = q.to_state();
                    CMat::from_column_slice(x.len(), 1, x.as_slice())
                })
                .collect(),
        )
    }

    pub fn from_blocks(bx: &Box3D, x: &Blocks, col: usize) -> Result<Self> {
        if x.0.len() != bx.wavenumbers().len() {
            return Err(Error::dim("block count does not match the box"));
        }
        let modes = x.0.iter().map(|b| StateVector::from_state(&b.column(col).into_owned())).collect();
        Ok(Spectral3D { bx: bx.clone(), modes })
    }
}

/// Localized actuator profile `A(1 − r²/α²) e^{−r²/α² − y²/α_y²}(cos πy + 1)`
/// centred in the box, sampled on the grid (periodic images included).
pub fn gaussian_actuator(bx: &Box3D, amp: f64, alpha: f64, alpha_y: f64) -> Result<Field3D> {
    check_actuator(amp, alpha, alpha_y)?;
    let (xc, zc) = bx.center();
    let ny = bx.ny();
    let mut v = vec![0.0; bx.nx * ny * bx.nz];
    for i in 0..bx.nx {
        for k in 0..bx.nz {
            let mut h = 0.0;
            for px in -1..=1 {
                for pz in -1..=1 {
                    let dx = bx.x(i) - xc + px as f64 * bx.lx;
                    let dz = bx.z(k) - zc + pz as f64 * bx.lz;
                    let s = (dx * dx + dz * dz) / (alpha * alpha);
                    h += (1.0 - s) * (-s).exp();
                }
            }
            for j in 0..ny {
                v[bx.idx(i, j, k)] = amp * h * wall_profile(bx.grid.points[j], alpha_y);
            }
        }
    }
    let eta = vec![0.0; v.len()];
    Ok(Field3D { bx: bx.clone(), v, eta })
}

fn check_actuator(amp: f64, alpha: f64, alpha_y: f64) -> Result<()> {
    if !(amp > 0.0 && alpha > 0.0 && alpha_y > 0.0) {
        return Err(Error::invalid("actuator parameters must be positive"));
    }
    Ok(())
}

fn wall_profile(y: f64, alpha_y: f64) -> f64 {
    (-(y * y) / (alpha_y * alpha_y)).exp() * ((PI * y).cos() + 1.0)
}

/// Exact Fourier-series coefficients of the periodized actuator. The plane
/// transform of `(1 − r²/α²)e^{−r²/α²}` is `π α² (k²α²/4) e^{−k²α²/4}`, which
/// vanishes at `k = 0`: the disturbance is mean-free.
pub fn actuator_spectrum(bx: &Box3D, amp: f64, alpha: f64, alpha_y: f64) -> Result<Spectral3D> {
    check_actuator(amp, alpha, alpha_y)?;
    let (xc, zc) = bx.center();
    let y = bx.grid.interior();
    let g: Vec<f64> = y.iter().map(|&t| wall_profile(t, alpha_y)).collect();
    let m = g.len();
    let modes = bx
        .wavenumbers()
        .iter()
        .map(|&(kx, kz)| {
            let wn = bx.pair(kx, kz);
            let q = wn.k2() * alpha * alpha / 4.0;
            let mag = amp * PI * alpha * alpha * q * (-q).exp() / (bx.lx * bx.lz);
            let phase = c64(0.0, -(wn.alpha * xc + wn.beta * zc)).exp();
            let coef = phase * mag;
            StateVector { v: CVec::from_fn(m, |j, _| coef * g[j]), eta: CVec::zeros(m) }
        })
        .collect();
    Ok(Spectral3D { bx: bx.clone(), modes })
}

fn fft2(bx: &Box3D, data: &mut [Complex<f64>], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (fx, fz) = if inverse {
        (planner.plan_fft_inverse(bx.nx), planner.plan_fft_inverse(bx.nz))
    } else {
        (planner.plan_fft_forward(bx.nx), planner.plan_fft_forward(bx.nz))
    };
    for row in data.chunks_mut(bx.nz) {
        fz.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); bx.nx];
    for k in 0..bx.nz {
        for i in 0..bx.nx {
            col[i] = data[i * bx.nz + k];
        }
        fx.process(&mut col);
        for i in 0..bx.nx {
            data[i * bx.nz + k] = col[i];
        }
    }
}

/// Half-spectrum of a real field. Rejects fields with a horizontal mean.
pub fn to_spectral(field: &Field3D) -> Result<Spectral3D> {
    let bx = &field.bx;
    let ny = bx.ny();
    let m = ny - 2;
    let keys = bx.wavenumbers();
    let mut out = Spectral3D::zeros(bx);
    let peak = field.v.iter().chain(&field.eta).fold(0.0f64, |a, b| a.max(b.abs()));
    let norm = 1.0 / (bx.nx * bx.nz) as f64;
    for (part, data) in [(0usize, &field.v), (1, &field.eta)] {
        for j in 1..ny - 1 {
            let mut plane: Vec<Complex<f64>> = (0..bx.nx * bx.nz)
                .map(|n| Complex::new(data[bx.idx(n / bx.nz, j, n % bx.nz)], 0.0))
                .collect();
            fft2(bx, &mut plane, false);
            let mean = plane[0].norm() * norm;
            if mean > 1e-10 * peak.max(f64::MIN_POSITIVE) {
                return Err(Error::invalid(format!(
                    "field has a horizontal mean ({mean:.3e}) at y = {:.4}; only mean-free disturbances are represented",
                    bx.grid.points[j]
                )));
            }
            for (b, &(kx, kz)) in keys.iter().enumerate() {
                let c = plane[bx.fft_index(kx, kz)] * norm;
                let q = &mut out.modes[b];
                if part == 0 {
                    q.v[j - 1] = c;
                } else {
                    q.eta[j - 1] = c;
                }
            }
        }
    }
    debug_assert_eq!(out.modes[0].v.len(), m);
    Ok(out)
}

fn synthesize(bx: &Box3D, coef: impl Fn(usize, usize) -> linalg::C64, ny: usize) -> Vec<f64> {
    let keys = bx.wavenumbers();
    let mut out = vec![0.0; bx.nx * ny * bx.nz];
    for j in 0..ny {
        let mut plane = vec![Complex::new(0.0, 0.0); bx.nx * bx.nz];
        for (b, &(kx, kz)) in keys.iter().enumerate() {
            let c = coef(b, j);
            plane[bx.fft_index(kx, kz)] = c;
            plane[bx.fft_index(-kx, -kz)] = c.conj();
        }
        fft2(bx, &mut plane, true);
        for i in 0..bx.nx {
            for k in 0..bx.nz {
                out[(i * ny + j) * bx.nz + k] = plane[i * bx.nz + k].re;
            }
        }
    }
    out
}

/// Real field of a half-spectrum; walls are zero.
pub fn from_spectral(spec: &Spectral3D) -> Field3D {
    let bx = &spec.bx;
    let ny = bx.ny();
    let pick = |b: usize, j: usize, eta: bool| {
        if j == 0 || j == ny - 1 {
            c64(0.0, 0.0)
        } else if eta {
            spec.modes[b].eta[j - 1]
        } else {
            spec.modes[b].v[j - 1]
        }
    };
    Field3D {
        bx: bx.clone(),
        v: synthesize(bx, |b, j| pick(b, j, false), ny),
        eta: synthesize(bx, |b, j| pick(b, j, true), ny),
    }
}

/// Physical `(u, v, w)` on every node, walls included. `u` and `w` are the
/// degree-N polynomials given by continuity and the vorticity definition.
pub fn velocities(spec: &Spectral3D) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let bx = &spec.bx;
    let ny = bx.ny();
    let d1 = to_complex(&spectral::diff_matrix(&bx.grid, 1, Boundary::None)?.matrix);
    let keys = bx.wavenumbers();
    let mut uh = Vec::with_capacity(keys.len());
    let mut vh = Vec::with_capacity(keys.len());
    let mut wh = Vec::with_capacity(keys.len());
    for (q, &(kx, kz)) in spec.modes.iter().zip(&keys) {
        let wn = bx.pair(kx, kz);
        let mut vf = CVec::zeros(ny);
        let mut ef = CVec::zeros(ny);
        vf.rows_mut(1, ny - 2).copy_from(&q.v);
        ef.rows_mut(1, ny - 2).copy_from(&q.eta);
        let dv = &d1 * &vf;
        let f = I / wn.k2();
        uh.push((&dv * c64(wn.alpha, 0.0) - &ef * c64(wn.beta, 0.0)) * f);
        wh.push((&dv * c64(wn.beta, 0.0) + &ef * c64(wn.alpha, 0.0)) * f);
        vh.push(vf);
    }
    Ok((synthesize(bx, |b, j| uh[b][j], ny), synthesize(bx, |b, j| vh[b][j], ny), synthesize(bx, |b, j| wh[b][j], ny)))
}

/// `½∫|u|² dV` by direct quadrature in physical space: the periodic
/// trapezoid rule in x and z (exact for the band-limited products) and
/// Clenshaw–Curtis on the doubled grid in y (exact for polynomial products).
pub fn physical_energy(spec: &Spectral3D) -> Result<f64> {
    let bx = &spec.bx;
    let (u, v, w) = velocities(spec)?;
    let fine = spectral::chebyshev_grid(2 * bx.grid.n)?;
    let wq = spectral::quadrature_weights(&fine).weights;
    let p = spectral::interpolation_matrix(&bx.grid, &fine.points);
    let ny = bx.ny();
    let mut total = 0.0;
    for i in 0..bx.nx {
        for k in 0..bx.nz {
            for comp in [&u, &v, &w] {
                let col = nalgebra::DVector::from_fn(ny, |j, _| comp[bx.idx(i, j, k)]);
                let fine_vals = &p * col;
                total += fine_vals.iter().zip(&wq).map(|(f, q)| f * f * q).sum::<f64>();
            }
        }
    }
    Ok(0.5 * total * bx.lx * bx.lz / (bx.nx * bx.nz) as f64)
}

/// Block-diagonal system of the box at Reynolds number `re`, with global
/// energy weights and the given spectrum as input column.
pub fn build_system(bx: &Box3D, re: f64, input: &Spectral3D) -> Result<BlockSystem> {
    let scale = 2.0 * bx.lx * bx.lz;
    let mut blocks = Vec::new();
    for (q, &(kx, kz)) in input.modes.iter().zip(&bx.wavenumbers()) {
        let wn = bx.pair(kx, kz);
        let m = channel::build_os_squire(wn, re, &bx.grid)?;
        let x = q.to_state();
        blocks.push(SystemBlock {
            wavenumber: wn,
            a_conv: m.a_conv,
            a_diff: m.a_diff,
            b: CMat::from_column_slice(x.len(), 1, x.as_slice()),
            m_weight: m.m_weight * scale,
            e_weight: m.e_weight * scale,
        });
    }
    Ok(BlockSystem { blocks, re, field: Field::Real })
}

/// Global energy `Σ_κ 2 L_x L_z E_κ` of a half-spectrum.
pub fn spectral_energy(system: &BlockSystem, spec: &Spectral3D) -> f64 {
    let x = spec.to_blocks();
    system::real_gram(&x, &system.e_weights(), &x)[(0, 0)]
}

/// Energy per block of column `col` of `x`.
pub fn block_energies(system: &BlockSystem, x: &Blocks, col: usize) -> Vec<f64> {
    system
        .blocks
        .iter()
        .zip(&x.0)
        .map(|(b, xb)| {
            let c = xb.columns(col, 1).into_owned();
            linalg::real_inner(&c, &b.e_weight, &c)[(0, 0)]
        })
        .collect()
}

/// Share of the energy held by streamwise-constant (`k_x = 0`) modes.
pub fn streamwise_constant_fraction(system: &BlockSystem, x: &Blocks, col: usize) -> f64 {
    let e = block_energies(system, x, col);
    let total: f64 = e.iter().sum();
    let streak: f64 = system
        .blocks
        .iter()
        .zip(&e)
        .filter(|(b, _)| b.wavenumber.alpha == 0.0)
        .map(|(_, v)| v)
        .sum();
    streak / total
}

/// Evolve the box from the spectrum `ic`: each wavenumber block is
/// integrated independently and the weighted snapshots are stacked.
pub fn evolve_field(
    bx: &Box3D,
    ic: &Spectral3D,
    re: f64,
    schedule: &Schedule,
    opts: &StepOptions,
) -> Result<(BlockSystem, SnapshotSet)> {
    let system = build_system(bx, re, ic)?;
    let set = dynamics::direct_impulse_snapshots(&system, 0, schedule, opts)?;
    Ok((system, set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_box() -> Box3D {
        Box3D::periodic_2pi(8, 12, 8).unwrap()
    }

    fn random_spectrum(bx: &Box3D, seed: u64) -> Spectral3D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Spectral3D::zeros(bx);
        let y = bx.grid.interior().to_vec();
        for q in &mut s.modes {
            let (a, b, c, d): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
            for (j, &t) in y.iter().enumerate() {
                let bump = (1.0 - t * t).powi(2);
                q.v[j] = c64(a - 0.5, b - 0.5) * bump * (1.0 + t);
                q.eta[j] = c64(c - 0.5, d - 0.5) * (1.0 - t * t) * (0.3 - t);
            }
        }
        s
    }

    #[test]
    fn block_layout() {
        let bx = Box3D::periodic_2pi(16, 32, 16).unwrap();
        assert_eq!(bx.wavenumbers().len(), 112);
        assert!(Box3D::periodic_2pi(12, 32, 16).is_err());
        let wn = bx.pair(-3, 2);
        assert!((wn.alpha + 3.0).abs() < 1e-14 && (wn.beta - 2.0).abs() < 1e-14);
    }

    #[test]
    fn actuator_centre_walls_and_mean() {
        let bx = Box3D::periodic_2pi(16, 32, 16).unwrap();
        let f = gaussian_actuator(&bx, 1.0, 0.7, 0.6).unwrap();
        let mid = bx.grid.n / 2;
        assert!(bx.grid.points[mid].abs() < 1e-15);
        let (v, eta) = f.at(8, mid, 8);
        assert!((v - 2.0).abs() < 1e-6, "{v}");
        assert_eq!(eta, 0.0);
        let ny = bx.ny();
        let vmax = f.v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for j in 0..ny {
            let mean: f64 = (0..16).flat_map(|i| (0..16).map(move |k| (i, k))).map(|(i, k)| f.at(i, j, k).0).sum::<f64>()
                * (bx.lx * bx.lz / 256.0);
            assert!(mean.abs() <= 1e-6 * vmax, "y index {j}: {mean}");
        }
        // v and ∂v/∂y vanish at the walls
        for &yw in &[-1.0f64, 1.0] {
            assert!(wall_profile(yw, 0.6).abs() < 1e-15);
            let h = 1e-6;
            let d = (wall_profile(yw - h * yw.signum(), 0.6) - wall_profile(yw, 0.6)) / h;
            assert!(d.abs() < 1e-5);
        }
        assert!(gaussian_actuator(&bx, 1.0, -0.7, 0.6).is_err());
    }

    #[test]
    fn actuator_spectrum_matches_sampled_field() {
        let bx = Box3D::periodic_2pi(32, 16, 32).unwrap();
        let f = gaussian_actuator(&bx, 1.0, 0.7, 0.6).unwrap();
        let sampled = to_spectral(&f).unwrap();
        let exact = actuator_spectrum(&bx, 1.0, 0.7, 0.6).unwrap();
        let peak = exact.modes.iter().map(|q| q.v.camax()).fold(0.0, f64::max);
        for (a, b) in sampled.modes.iter().zip(&exact.modes) {
            assert!((&a.v - &b.v).camax() <= 1e-3 * peak);
        }
    }

    #[test]
    fn round_trip() {
        let bx = small_box();
        let s = random_spectrum(&bx, 5);
        let f = from_spectral(&s);
        let back = to_spectral(&f).unwrap();
        for (a, b) in s.modes.iter().zip(&back.modes) {
            assert!((&a.v - &b.v).camax() <= 1e-12 && (&a.eta - &b.eta).camax() <= 1e-12);
        }
        let again = from_spectral(&back);
        let d = f.v.iter().zip(&again.v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(d <= 1e-12);
    }

    #[test]
    fn single_wavenumber_maps_to_one_pair() {
        let bx = small_box();
        let keys = bx.wavenumbers();
        let target = keys.iter().position(|&k| k == (-2, 1)).unwrap();
        let mut s = Spectral3D::zeros(&bx);
        let y = bx.grid.interior().to_vec();
        for (j, t) in y.iter().enumerate() {
            s.modes[target].v[j] = c64(1.0 - t * t, 0.5 * t);
        }
        let back = to_spectral(&from_spectral(&s)).unwrap();
        for (b, q) in back.modes.iter().enumerate() {
            let mag = q.v.camax().max(q.eta.camax());
            if b == target {
                assert!(mag > 0.1);
            } else {
                assert!(mag < 1e-14, "block {b}: {mag}");
            }
        }
    }

    #[test]
    fn mean_is_rejected() {
        let bx = small_box();
        let mut f = from_spectral(&random_spectrum(&bx, 1));
        let ny = bx.ny();
        for i in 0..bx.nx {
            for k in 0..bx.nz {
                f.v[bx.idx(i, ny / 2, k)] += 0.1;
            }
        }
        assert!(matches!(to_spectral(&f), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn parseval() {
        let bx = small_box();
        let s = random_spectrum(&bx, 9);
        let sys = build_system(&bx, 1000.0, &s).unwrap();
        let spec = spectral_energy(&sys, &s);
        let phys = physical_energy(&s).unwrap();
        assert!(((spec - phys) / phys).abs() <= 1e-10, "{spec} vs {phys}");
    }

    #[test]
    fn single_block_evolves_like_its_model() {
        let bx = small_box();
        let keys = bx.wavenumbers();
        let target = keys.iter().position(|&k| k == (1, 1)).unwrap();
        let full = random_spectrum(&bx, 2);
        let mut s = Spectral3D::zeros(&bx);
        s.modes[target] = full.modes[target].clone();
        let sched = Schedule::uniform(11, 5.0).unwrap();
        let opts = StepOptions { dt: 0.01, auto_dt: false, ..Default::default() };
        let (_, set) = evolve_field(&bx, &s, 1000.0, &sched, &opts).unwrap();
        let m = channel::build_os_squire(bx.pair(1, 1), 1000.0, &bx.grid).unwrap();
        let one = dynamics::propagate(&m.a, &s.modes[target].to_state(), 0.01, &sched.times).unwrap();
        let d = linalg::frob(&(&set.data.0[target] - &one.data.0[0]));
        assert!(d <= 1e-10 * linalg::frob(&one.data.0[0]));
        for (b, blk) in set.data.0.iter().enumerate() {
            if b != target {
                assert_eq!(linalg::frob(blk), 0.0);
            }
        }
    }
}
