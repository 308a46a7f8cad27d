//! POD by the method of snapshots, and the output projection onto the
//! leading POD modes.

use crate::dynamics::SnapshotSet;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::system::{self, BlockWeight, Blocks, Field};

/// Relative eigenvalue floor of the snapshot Gram matrix.
pub const POD_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Pod,
    Balancing,
}

/// Which inner product a basis is (bi)orthonormal under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightId {
    Energy,
    Mass,
}

#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub modes: Blocks,
    pub adjoint_modes: Option<Blocks>,
    /// POD eigenvalues or Hankel singular values, all of them, decreasing.
    pub values: Vec<f64>,
    pub weight: WeightId,
    pub kind: BasisKind,
    pub field: Field,
    /// Fewer modes than requested were numerically available.
    pub truncated: bool,
}

impl ModeBasis {
    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    /// Leading `r` modes (and adjoint modes).
    pub fn leading(&self, r: usize) -> Result<ModeBasis> {
        if r > self.rank() {
            return Err(Error::invalid(format!("requested {r} modes, basis has {}", self.rank())));
        }
        Ok(ModeBasis {
            modes: self.modes.columns(0, r),
            adjoint_modes: self.adjoint_modes.as_ref().map(|a| a.columns(0, r)),
            values: self.values.clone(),
            weight: self.weight,
            kind: self.kind,
            field: self.field,
            truncated: self.truncated,
        })
    }

    /// Cumulative fraction `Σ_{j≤k} λ_j / Σ λ_j` for each k.
    pub fn cumulative_fractions(&self) -> Vec<f64> {
        let total: f64 = self.values.iter().sum();
        let mut acc = 0.0;
        self.values
            .iter()
            .map(|v| {
                acc += v;
                if total > 0.0 {
                    acc / total
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Fraction of the total in the first `k` values.
    pub fn fraction(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.cumulative_fractions()[k.min(self.values.len()) - 1]
    }
}

/// POD of a weighted snapshot set under the block weight `w`. `max_rank`
/// caps the number of modes kept; eigenvalues are returned in full.
pub fn pod(snapshots: &SnapshotSet, w: &BlockWeight, field: Field, max_rank: Option<usize>) -> Result<ModeBasis> {
    pod_of(&snapshots.data, w, field, max_rank)
}

pub fn pod_of(x: &Blocks, w: &BlockWeight, field: Field, max_rank: Option<usize>) -> Result<ModeBasis> {
    if x.0.len() != w.blocks.len() {
        return Err(Error::dim("snapshot blocks and weight blocks differ"));
    }
    for (xb, wb) in x.0.iter().zip(&w.blocks) {
        if xb.nrows() != wb.nrows() {
            return Err(Error::dim("snapshot rows and weight size differ"));
        }
    }
    let g = system::gram(x, w, x, field);
    let (vals, coeffs) = match field {
        Field::Real => {
            let (v, e) = linalg::sym_eig_desc(&linalg::re_part(&g));
            (v, linalg::to_complex(&e))
        }
        Field::Complex => linalg::herm_eig_desc(&g),
    };
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let avail = vals.iter().take_while(|&&l| top > 0.0 && l >= POD_RANK_TOL * top).count();
    let want = max_rank.unwrap_or(avail);
    let r = want.min(avail);
    let mut scale = coeffs.columns(0, r).into_owned();
    for j in 0..r {
        scale.column_mut(j).scale_mut(1.0 / vals[j].sqrt());
    }
    let modes = reorthonormalize(x.mul(&scale), w, field)?;
    Ok(ModeBasis {
        modes,
        adjoint_modes: None,
        values: vals.iter().map(|v| v.max(0.0)).collect(),
        weight: WeightId::Energy,
        kind: BasisKind::Pod,
        field,
        truncated: want > avail,
    })
}

/// One Cholesky–QR pass in the weight `w`. Modes lifted from tiny snapshot
/// eigenvalues lose orthogonality to round-off; this restores it without
/// disturbing the well-conditioned leading modes.
fn reorthonormalize(q: Blocks, w: &BlockWeight, field: Field) -> Result<Blocks> {
    if q.ncols() == 0 {
        return Ok(q);
    }
    let g = system::gram(&q, w, &q, field);
    let g = (&g + g.adjoint()) * linalg::c64(0.5, 0.0);
    let chol = nalgebra::Cholesky::new(g)
        .ok_or_else(|| Error::Factorization("POD modes are not linearly independent".into()))?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Factorization("POD Gram factor not invertible".into()))?;
    Ok(q.mul(&linv.adjoint()))
}

/// The map from a state to its first `s` POD coefficients, `Θ_s⁺ x`, with
/// `Θ_s⁺ = Θ_sᴴ E` (real part for real fields).
#[derive(Debug, Clone)]
pub struct OutputProjection {
    pub theta: Blocks,
    pub field: Field,
}

pub fn output_projection(basis: &ModeBasis, s: usize) -> Result<OutputProjection> {
    if basis.kind != BasisKind::Pod {
        return Err(Error::invalid("output projection needs a POD basis"));
    }
    if s == 0 || s > basis.rank() {
        return Err(Error::invalid(format!("output rank {s} outside 1..={}", basis.rank())));
    }
    Ok(OutputProjection { theta: basis.modes.columns(0, s), field: basis.field })
}

impl OutputProjection {
    pub fn rank(&self) -> usize {
        self.theta.ncols()
    }

    /// POD coefficients of the columns of `x` (real-valued for real fields).
    pub fn coefficients(&self, x: &Blocks, e: &BlockWeight) -> CMat {
        system::gram(&self.theta, e, x, self.field)
    }

    /// `P_s x = Θ_s Θ_s⁺ x`.
    pub fn project(&self, x: &Blocks, e: &BlockWeight) -> Blocks {
        self.theta.mul(&self.coefficients(x, e))
    }
}

/// Realified coordinates of a set of real fields: `[Re X; Im X]` per block.
pub fn realified(x: &Blocks) -> RMat {
    linalg::stack_re_im(&x.stacked())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::dynamics::{direct_impulse_snapshots, Schedule, StepOptions};
    use crate::channel::{self, WavenumberPair};
    use crate::spectral::chebyshev_grid;
    use crate::system::BlockSystem;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn case(n: usize) -> (BlockSystem, SnapshotSet) {
        let grid = chebyshev_grid(n).unwrap();
        let m = channel::build_os_squire(WavenumberPair::new(1.0, 1.0), 1000.0, &grid).unwrap();
        let y = grid.interior();
        let k = y.len();
        let b = CMat::from_fn(2 * k, 1, |i, _| {
            let yy = y[i % k];
            if i < k {
                c64((1.0 - yy * yy).powi(2), 0.0)
            } else {
                c64(0.0, yy * (1.0 - yy * yy))
            }
        });
        let sys = BlockSystem::from_model(&m.with_input(b).unwrap(), Field::Real);
        let opts = StepOptions { dt: 0.01, ..Default::default() };
        let set = direct_impulse_snapshots(&sys, 0, &Schedule::uniform(120, 120.0).unwrap(), &opts).unwrap();
        (sys, set)
    }

    fn rand_blocks(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Blocks {
        Blocks::single(CMat::from_fn(n, m, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
    }

    #[test]
    fn single_snapshot() {
        let x = Blocks::single(CMat::from_fn(4, 1, |i, _| c64(i as f64 + 1.0, 0.5)));
        let w = BlockWeight::single(RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])));
        for field in [Field::Real, Field::Complex] {
            let b = pod_of(&x, &w, field, None).unwrap();
            assert_eq!(b.rank(), 1);
            let norm2 = system::real_gram(&x, &w, &x)[(0, 0)];
            assert!((b.values[0] - norm2).abs() < 1e-12 * norm2);
            let expect = Blocks::single(&x.0[0] * c64(1.0 / norm2.sqrt(), 0.0));
            // the mode is fixed only up to a unit factor
            let overlap = system::gram(&expect, &w, &b.modes, Field::Complex)[(0, 0)].norm();
            assert!((overlap - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_and_trace() {
        let (sys, set) = case(24);
        let e = sys.e_weights();
        for field in [Field::Real, Field::Complex] {
            let b = pod(&set, &e, field, None).unwrap();
            let g = system::gram(&b.modes, &e, &b.modes, field);
            let err = linalg::frob(&(g - CMat::identity(b.rank(), b.rank())));
            assert!(err < 1e-8, "{field:?} {err}");
            let trace: f64 = system::real_gram(&set.data, &e, &set.data).diagonal().sum();
            let sum: f64 = b.values.iter().sum();
            assert!(((sum - trace) / trace).abs() < 1e-10);
            assert!(b.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        let x = Blocks::single(CMat::from_fn(6, 3, |i, j| c64((i * (j + 1)) as f64, 0.0)));
        let w = BlockWeight::single(RMat::identity(6, 6));
        let b = pod_of(&x, &w, Field::Real, Some(3)).unwrap();
        assert_eq!(b.rank(), 1);
        assert!(b.truncated);
    }

    #[test]
    fn pod_is_optimal_against_random_subspaces() {
        let (sys, set) = case(24);
        let e = sys.e_weights();
        let b = pod(&set, &e, Field::Real, None).unwrap();
        let total: f64 = system::real_gram(&set.data, &e, &set.data).diagonal().sum();
        let captured = |q: &Blocks| -> f64 {
            let c = system::real_gram(q, &e, &set.data);
            c.iter().map(|v| v * v).sum()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for r in [1usize, 2, 4] {
            let pod_err = total - captured(&b.modes.columns(0, r));
            for _ in 0..20 {
                // random orthonormal subspace of the snapshot span
                let coef = RMat::from_fn(set.len(), r, |_, _| rng.random::<f64>() - 0.5);
                let q = set.data.mul_real(&coef);
                let basis = pod_of(&q, &e, Field::Real, Some(r)).unwrap();
                assert_eq!(basis.rank(), r);
                let err = total - captured(&basis.modes);
                assert!(pod_err <= err * (1.0 + 1e-12), "r={r}: {pod_err} > {err}");
            }
        }
    }

    #[test]
    fn projection_rank_checked() {
        let (sys, set) = case(16);
        let b = pod(&set, &sys.e_weights(), Field::Real, Some(4)).unwrap();
        assert!(output_projection(&b, 5).is_err());
        assert!(output_projection(&b, 0).is_err());
        assert!(output_projection(&b, 4).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn projector_idempotent_and_parseval(seed in 0u64..500, s in 1usize..6) {
            let (sys, set) = case(16);
            let e = sys.e_weights();
            let b = pod(&set, &e, Field::Real, Some(8)).unwrap();
            let p = output_projection(&b, s).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = rand_blocks(sys.n_state(), 3, &mut rng);
            let px = p.project(&x, &e);
            let ppx = p.project(&px, &e);
            let d = linalg::frob(&(&ppx.0[0] - &px.0[0]));
            prop_assert!(d <= 1e-10 * linalg::frob(&x.0[0]));
            let y = p.coefficients(&x, &e);
            for j in 0..3 {
                let ny = y.column(j).norm();
                let col = px.columns(j, 1);
                let npx = system::real_gram(&col, &e, &col)[(0, 0)].sqrt();
                prop_assert!((ny - npx).abs() <= 1e-10 * npx.max(1e-300));
            }
        }
    }
}
