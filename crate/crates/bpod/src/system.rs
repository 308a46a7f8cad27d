//! Block-diagonal linear systems. A single wavenumber pair is one block; the
//! periodic box is one block per independent wavenumber pair. Everything
//! downstream (snapshots, modes, projections) is stored per block.

use crate::channel::{self, StateSpaceModel, WavenumberPair};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};

/// How complex coefficient vectors are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    /// Each complex vector stands for the real field `Re{x e^{iθ}}`; inner
    /// products are `Re(xᴴWy)` and expansion coefficients are real.
    Real,
    /// Genuinely complex states with the Hermitian product `xᴴWy`.
    Complex,
}

#[derive(Debug, Clone)]
pub struct SystemBlock {
    pub wavenumber: WavenumberPair,
    pub a_conv: CMat,
    pub a_diff: CMat,
    pub b: CMat,
    pub m_weight: RMat,
    pub e_weight: RMat,
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub blocks: Vec<SystemBlock>,
    pub re: f64,
    pub field: Field,
}

impl BlockSystem {
    pub fn from_model(model: &StateSpaceModel, field: Field) -> Self {
        BlockSystem {
            blocks: vec![SystemBlock {
                wavenumber: model.wavenumber,
                a_conv: model.a_conv.clone(),
                a_diff: model.a_diff.clone(),
                b: model.b.clone(),
                m_weight: model.m_weight.clone(),
                e_weight: model.e_weight.clone(),
            }],
            re: model.re,
            field,
        }
    }

    pub fn a(&self, k: usize) -> CMat {
        channel::assemble(&self.blocks[k].a_conv, &self.blocks[k].a_diff, self.re)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.a_conv.nrows()).collect()
    }

    pub fn n_state(&self) -> usize {
        self.sizes().iter().sum()
    }

    pub fn n_inputs(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.b.ncols())
    }

    pub fn m_weights(&self) -> BlockWeight {
        BlockWeight { blocks: self.blocks.iter().map(|b| b.m_weight.clone()).collect() }
    }

    pub fn e_weights(&self) -> BlockWeight {
        BlockWeight { blocks: self.blocks.iter().map(|b| b.e_weight.clone()).collect() }
    }

    pub fn input(&self) -> Blocks {
        Blocks(self.blocks.iter().map(|b| b.b.clone()).collect())
    }

    pub fn at_reynolds(&self, re: f64) -> Result<Self> {
        if !(re > 0.0) {
            return Err(Error::invalid("Reynolds number must be positive"));
        }
        let mut out = self.clone();
        out.re = re;
        Ok(out)
    }

    /// Largest real part over all blocks.
    pub fn abscissa(&self) -> Result<f64> {
        let mut s = f64::NEG_INFINITY;
        for k in 0..self.blocks.len() {
            s = s.max(linalg::abscissa(&self.a(k))?);
        }
        Ok(s)
    }

    /// Adjoint operators `M⁻¹AᴴM` per block.
    pub fn adjoint(&self) -> Result<Vec<CMat>> {
        (0..self.blocks.len())
            .map(|k| channel::weighted_adjoint(&self.a(k), &self.blocks[k].m_weight))
            .collect()
    }
}

/// Block-diagonal real symmetric weight.
#[derive(Debug, Clone)]
pub struct BlockWeight {
    pub blocks: Vec<RMat>,
}

impl BlockWeight {
    pub fn single(w: RMat) -> Self {
        BlockWeight { blocks: vec![w] }
    }

    pub fn scaled(&self, s: f64) -> Self {
        BlockWeight { blocks: self.blocks.iter().map(|w| w * s).collect() }
    }
}

/// A tall complex matrix split into row blocks (one per system block).
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks(pub Vec<CMat>);

impl Blocks {
    pub fn single(m: CMat) -> Self {
        Blocks(vec![m])
    }

    pub fn ncols(&self) -> usize {
        self.0.first().map_or(0, |b| b.ncols())
    }

    pub fn nrows(&self) -> usize {
        self.0.iter().map(|b| b.nrows()).sum()
    }

    pub fn columns(&self, start: usize, count: usize) -> Blocks {
        Blocks(self.0.iter().map(|b| b.columns(start, count).into_owned()).collect())
    }

    /// `X · C` for a real coefficient matrix.
    pub fn mul_real(&self, c: &RMat) -> Blocks {
        let cc = linalg::to_complex(c);
        Blocks(self.0.iter().map(|b| linalg::cmul(b, &cc)).collect())
    }

    pub fn mul(&self, c: &CMat) -> Blocks {
        Blocks(self.0.iter().map(|b| linalg::cmul(b, c)).collect())
    }

    /// Concatenate into one tall matrix.
    pub fn stacked(&self) -> CMat {
        let n = self.nrows();
        let m = self.ncols();
        let mut out = CMat::zeros(n, m);
        let mut r = 0;
        for b in &self.0 {
            out.view_mut((r, 0), (b.nrows(), m)).copy_from(b);
            r += b.nrows();
        }
        out
    }

    pub fn split(full: &CMat, sizes: &[usize]) -> Blocks {
        let mut r = 0;
        Blocks(
            sizes
                .iter()
                .map(|&s| {
                    let b = full.rows(r, s).into_owned();
                    r += s;
                    b
                })
                .collect(),
        )
    }
}

/// `Σ_k Re(X_kᴴ W_k Y_k)` for real fields, `Σ_k X_kᴴ W_k Y_k` for complex ones.
pub fn gram(x: &Blocks, w: &BlockWeight, y: &Blocks, field: Field) -> CMat {
    check(x, w, y);
    match field {
        Field::Real => {
            let mut g = RMat::zeros(x.ncols(), y.ncols());
            for ((xb, wb), yb) in x.0.iter().zip(&w.blocks).zip(&y.0) {
                g += linalg::real_inner(xb, wb, yb);
            }
            linalg::to_complex(&g)
        }
        Field::Complex => {
            let mut g = CMat::zeros(x.ncols(), y.ncols());
            for ((xb, wb), yb) in x.0.iter().zip(&w.blocks).zip(&y.0) {
                g += linalg::herm_inner(xb, wb, yb);
            }
            g
        }
    }
}

/// Real part of the Gram matrix (real-field inner products).
pub fn real_gram(x: &Blocks, w: &BlockWeight, y: &Blocks) -> RMat {
    linalg::re_part(&gram(x, w, y, Field::Real))
}

fn check(x: &Blocks, w: &BlockWeight, y: &Blocks) {
    assert_eq!(x.0.len(), w.blocks.len(), "block count mismatch");
    assert_eq!(y.0.len(), w.blocks.len(), "block count mismatch");
}

/// Per-block application `W_k X_k`.
pub fn apply_weight(w: &BlockWeight, x: &Blocks) -> Blocks {
    Blocks(w.blocks.iter().zip(&x.0).map(|(wb, xb)| linalg::apply_real(wb, xb)).collect())
}

/// Per-block solve `W_k Z_k = X_k`.
pub fn solve_weight(w: &BlockWeight, x: &Blocks) -> Result<Blocks> {
    let mut out = Vec::with_capacity(x.0.len());
    for (wb, xb) in w.blocks.iter().zip(&x.0) {
        let chol = nalgebra::Cholesky::new(wb.clone())
            .ok_or_else(|| Error::Factorization("weight is not positive definite".into()))?;
        let re = chol.solve(&linalg::re_part(xb));
        let im = chol.solve(&linalg::im_part(xb));
        out.push(CMat::from_fn(re.nrows(), re.ncols(), |i, j| linalg::c64(re[(i, j)], im[(i, j)])));
    }
    Ok(Blocks(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn split_and_stack_roundtrip() {
        let m = CMat::from_fn(7, 3, |i, j| c64(i as f64, j as f64));
        let b = Blocks::split(&m, &[3, 4]);
        assert_eq!(b.0.len(), 2);
        assert_eq!(b.stacked(), m);
        assert_eq!(b.nrows(), 7);
        assert_eq!(b.columns(1, 2).ncols(), 2);
    }

    #[test]
    fn real_gram_is_real_part_of_hermitian() {
        let x = Blocks(vec![CMat::from_fn(3, 2, |i, j| c64(i as f64 + 1.0, j as f64 - i as f64))]);
        let w = BlockWeight::single(RMat::identity(3, 3) * 2.0);
        let h = gram(&x, &w, &x, Field::Complex);
        let r = gram(&x, &w, &x, Field::Real);
        assert!(linalg::frob(&(h.map(|z| c64(z.re, 0.0)) - r)) < 1e-14);
    }
}
