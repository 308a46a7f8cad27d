//! Chebyshev collocation on Gauss–Lobatto nodes: grids, differentiation
//! matrices, Clenshaw–Curtis weights and barycentric interpolation.

use crate::error::{Error, Result};
use crate::linalg::RMat;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    /// Polynomial degree N; there are N+1 nodes.
    pub n: usize,
    /// `cos(πj/N)`, from +1 down to −1.
    pub points: Vec<f64>,
}

impl Grid1D {
    pub fn n_points(&self) -> usize {
        self.n + 1
    }

    pub fn interior_count(&self) -> usize {
        self.n - 1
    }

    pub fn interior(&self) -> &[f64] {
        &self.points[1..self.n]
    }
}

/// Gauss–Lobatto nodes `y_j = cos(πj/N)`. The channel operators need N ≥ 4;
/// the grid itself is also defined for N = 2.
pub fn chebyshev_grid(n: usize) -> Result<Grid1D> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(format!("Chebyshev degree must be even and ≥ 2, got {n}")));
    }
    let points = (0..=n)
        .map(|j| {
            // sin form keeps the symmetry y_j = −y_{N−j} exact
            let theta = std::f64::consts::PI * (n as f64 - 2.0 * j as f64) / (2.0 * n as f64);
            theta.sin()
        })
        .collect();
    Ok(Grid1D { n, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    None,
    /// f(±1) = f′(±1) = 0, interior nodes only.
    Clamped,
}

#[derive(Debug, Clone)]
pub struct DiffOperator {
    pub order: usize,
    pub boundary: Boundary,
    pub matrix: RMat,
}

/// First-derivative matrix on the full Gauss–Lobatto grid.
fn cheb_d1(grid: &Grid1D) -> RMat {
    let n = grid.n;
    let x = &grid.points;
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
    let mut d = RMat::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = c(i) / c(j) * sign / (x[i] - x[j]);
            }
        }
    }
    // negative-sum trick: rows annihilate constants exactly
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d
}

/// Differentiation matrix of the polynomial interpolant through arbitrary nodes.
fn lagrange_d1(x: &[f64]) -> RMat {
    let n = x.len();
    let w: Vec<f64> = (0..n)
        .map(|j| 1.0 / (0..n).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect();
    let mut d = RMat::zeros(n, n);
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            if i != j {
                d[(i, j)] = (w[j] / w[i]) / (x[i] - x[j]);
                s += d[(i, j)];
            }
        }
        d[(i, i)] = -s;
    }
    d
}

/// Clamped fourth derivative by (1−y²)² recombination of the interior
/// Lagrange basis: f = w·p with p interpolating f/w on the interior nodes.
fn clamped_d4(grid: &Grid1D) -> RMat {
    let y = grid.interior();
    let di = lagrange_d1(y);
    let m = y.len();
    let wd: [Vec<f64>; 5] = [
        y.iter().map(|&t| (1.0 - t * t).powi(2)).collect(),
        y.iter().map(|&t| -4.0 * t * (1.0 - t * t)).collect(),
        y.iter().map(|&t| 12.0 * t * t - 4.0).collect(),
        y.iter().map(|&t| 24.0 * t).collect(),
        vec![24.0; m],
    ];
    let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
    let mut pow = vec![RMat::identity(m, m)];
    for k in 1..=4 {
        let mut next = &pow[k - 1] * &di;
        // every power must annihilate constants; repair round-off on the diagonal
        for i in 0..m {
            let s = next.row(i).sum();
            next[(i, i)] -= s;
        }
        pow.push(next);
    }
    let mut d4 = RMat::zeros(m, m);
    for k in 0..=4 {
        let p = &pow[4 - k];
        for i in 0..m {
            for j in 0..m {
                d4[(i, j)] += binom[k] * wd[k][i] * p[(i, j)];
            }
        }
    }
    for j in 0..m {
        let s = 1.0 / wd[0][j];
        for i in 0..m {
            d4[(i, j)] *= s;
        }
    }
    d4
}

pub fn diff_matrix(grid: &Grid1D, order: usize, boundary: Boundary) -> Result<DiffOperator> {
    let matrix = match (order, boundary) {
        (1, Boundary::None) => cheb_d1(grid),
        (2, Boundary::None) => {
            let d = cheb_d1(grid);
            &d * &d
        }
        (4, Boundary::None) => {
            let d = cheb_d1(grid);
            let d2 = &d * &d;
            &d2 * &d2
        }
        (4, Boundary::Clamped) => clamped_d4(grid),
        (o, Boundary::Clamped) => {
            return Err(Error::invalid(format!("clamped treatment only defined for order 4, got {o}")))
        }
        (o, _) => return Err(Error::invalid(format!("unsupported derivative order {o}"))),
    };
    Ok(DiffOperator { order, boundary, matrix })
}

/// Restriction of a full-grid operator to interior nodes (homogeneous
/// Dirichlet data at the walls).
pub fn interior_block(op: &DiffOperator) -> RMat {
    let n = op.matrix.nrows();
    op.matrix.view((1, 1), (n - 2, n - 2)).into_owned()
}

#[derive(Debug, Clone)]
pub struct Quadrature {
    pub weights: Vec<f64>,
}

/// Clenshaw–Curtis weights on the Gauss–Lobatto nodes (exact to degree N).
pub fn quadrature_weights(grid: &Grid1D) -> Quadrature {
    let n = grid.n;
    let nf = n as f64;
    let weights = (0..=n)
        .map(|j| {
            let cj = if j == 0 || j == n { 1.0 } else { 2.0 };
            let mut s = 1.0;
            for k in 1..=n / 2 {
                let bk = if 2 * k == n { 1.0 } else { 2.0 };
                let kf = k as f64;
                s -= bk / (4.0 * kf * kf - 1.0)
                    * (2.0 * std::f64::consts::PI * (j * k) as f64 / nf).cos();
            }
            cj / nf * s
        })
        .collect();
    Quadrature { weights }
}

/// Barycentric interpolation matrix from the Gauss–Lobatto nodes to `targets`.
pub fn interpolation_matrix(grid: &Grid1D, targets: &[f64]) -> RMat {
    let n = grid.n;
    let x = &grid.points;
    let w: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let mut p = RMat::zeros(targets.len(), n + 1);
    for (i, &t) in targets.iter().enumerate() {
        if let Some(j) = x.iter().position(|&xj| (t - xj).abs() < 1e-15) {
            p[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..=n).map(|j| w[j] / (t - x[j])).collect();
        let den: f64 = terms.iter().sum();
        for j in 0..=n {
            p[(i, j)] = terms[j] / den;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn apply(m: &RMat, f: impl Fn(f64) -> f64, x: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_iterator(x.len(), x.iter().map(|&t| f(t)));
        (m * v).iter().copied().collect()
    }

    #[test]
    fn grid_examples() {
        let g = chebyshev_grid(2).unwrap();
        assert_eq!(g.points.len(), 3);
        assert!((g.points[0] - 1.0).abs() < 1e-16 && g.points[1].abs() < 1e-16 && (g.points[2] + 1.0).abs() < 1e-16);
        let g = chebyshev_grid(4).unwrap();
        assert!((g.points[1] - 0.70710678118654752).abs() < 1e-15);
        let g = chebyshev_grid(64).unwrap();
        assert_eq!(g.n_points(), 65);
        assert!(g.points.windows(2).all(|w| w[0] > w[1]));
        for j in 0..=64 {
            assert_eq!(g.points[j], -g.points[64 - j]);
        }
    }

    #[test]
    fn grid_rejects_bad_degree() {
        assert!(chebyshev_grid(0).is_err());
        assert!(chebyshev_grid(7).is_err());
    }

    #[test]
    fn d1_examples() {
        let g = chebyshev_grid(16).unwrap();
        let d = diff_matrix(&g, 1, Boundary::None).unwrap().matrix;
        for v in apply(&d, |_| 1.0, &g.points) {
            assert!(v.abs() <= 1e-12);
        }
        for v in apply(&d, |t| t, &g.points) {
            assert!((v - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn clamped_d4_on_quartic() {
        for n in [8, 16, 32, 64] {
            let g = chebyshev_grid(n).unwrap();
            let d4 = diff_matrix(&g, 4, Boundary::Clamped).unwrap().matrix;
            for v in apply(&d4, |t| (1.0 - t * t).powi(2), g.interior()) {
                assert!((v - 24.0).abs() <= 1e-8, "N={n}: {v}");
            }
        }
    }

    #[test]
    fn clamped_d4_exact_on_clamped_polynomials() {
        // f = (1−y²)² (1 + y + 2y³), degree 7, f'''' = 24(1 + y + 2y³) + 8·... computed analytically below
        let g = chebyshev_grid(12).unwrap();
        let d4 = diff_matrix(&g, 4, Boundary::Clamped).unwrap().matrix;
        let f = |t: f64| (1.0 - t * t).powi(2) * (1.0 + t + 2.0 * t.powi(3));
        // expand: (1 − 2t² + t⁴)(1 + t + 2t³) = 1 + t − 2t² + 0t³ + t⁴ − 3t⁵ + 0 + 2t⁷ ... do it numerically by coefficients
        let p = [1.0, 1.0, -2.0, 0.0, 1.0, -3.0, 0.0, 2.0];
        let d4f = |t: f64| {
            let mut s = 0.0;
            for (k, c) in p.iter().enumerate().skip(4) {
                let kk = k as f64;
                s += c * kk * (kk - 1.0) * (kk - 2.0) * (kk - 3.0) * t.powi(k as i32 - 4);
            }
            s
        };
        // sanity of expansion
        for &t in &[0.3f64, -0.7] {
            let e: f64 = p.iter().enumerate().map(|(k, c)| c * t.powi(k as i32)).sum();
            assert!((e - f(t)).abs() < 1e-14);
        }
        let got = apply(&d4, f, g.interior());
        for (v, &t) in got.iter().zip(g.interior()) {
            assert!((v - d4f(t)).abs() < 1e-8, "{v} vs {}", d4f(t));
        }
    }

    #[test]
    fn clamped_only_for_order_four() {
        let g = chebyshev_grid(8).unwrap();
        assert!(diff_matrix(&g, 2, Boundary::Clamped).is_err());
        assert!(diff_matrix(&g, 3, Boundary::None).is_err());
    }

    #[test]
    fn d2_matches_d1_squared_on_interior() {
        for n in [16, 32, 64] {
            let g = chebyshev_grid(n).unwrap();
            let d1 = diff_matrix(&g, 1, Boundary::None).unwrap().matrix;
            let d2 = diff_matrix(&g, 2, Boundary::None).unwrap();
            let sq = &d1 * &d1;
            let diff = (interior_block(&d2) - sq.view((1, 1), (n - 1, n - 1))).abs().max();
            assert!(diff <= 1e-8, "N={n} diff={diff}");
        }
    }

    #[test]
    fn d1_converges_spectrally() {
        let err = |n: usize| {
            let g = chebyshev_grid(n).unwrap();
            let d = diff_matrix(&g, 1, Boundary::None).unwrap().matrix;
            let pi = std::f64::consts::PI;
            apply(&d, |t| (pi * t).sin(), &g.points)
                .iter()
                .zip(&g.points)
                .map(|(v, &t)| (v - pi * (pi * t).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e16, e32) = (err(16), err(32));
        assert!(e16 / e32.max(1e-300) >= 100.0, "e16={e16} e32={e32}");
    }

    #[test]
    fn cc_examples() {
        let w = quadrature_weights(&chebyshev_grid(2).unwrap()).weights;
        let expect = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        for n in [4, 10, 64, 128] {
            let g = chebyshev_grid(n).unwrap();
            let w = quadrature_weights(&g).weights;
            assert!((w.iter().sum::<f64>() - 2.0).abs() <= 1e-12);
            let s: f64 = w.iter().zip(&g.points).map(|(w, y)| w * (1.0 - y * y)).sum();
            assert!((s - 4.0 / 3.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn cc_exact_to_degree_n() {
        let n = 12;
        let g = chebyshev_grid(n).unwrap();
        let w = quadrature_weights(&g).weights;
        for k in 0..=n {
            let s: f64 = w.iter().zip(&g.points).map(|(w, y)| w * y.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-13, "degree {k}");
        }
    }

    #[test]
    fn interpolation_is_exact_for_polynomials() {
        let g = chebyshev_grid(10).unwrap();
        let f = |t: f64| 3.0 * t.powi(10) - t.powi(3) + 0.5;
        let targets = [0.123, -0.9, 1.0, 0.0, 0.77];
        let p = interpolation_matrix(&g, &targets);
        let got = apply(&p, f, &g.points);
        for (v, &t) in got.iter().zip(&targets) {
            assert!((v - f(t)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn weights_positive_and_symmetric(half in 1usize..40) {
            let n = 2 * half;
            let g = chebyshev_grid(n).unwrap();
            let w = quadrature_weights(&g).weights;
            for j in 0..=n {
                prop_assert!(w[j] > 0.0);
                prop_assert!((w[j] - w[n - j]).abs() < 1e-14);
            }
            prop_assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        }

        #[test]
        fn d1_row_sums_vanish(half in 2usize..33) {
            let g = chebyshev_grid(2 * half).unwrap();
            let d = diff_matrix(&g, 1, Boundary::None).unwrap().matrix;
            for i in 0..d.nrows() {
                prop_assert!(d.row(i).sum().abs() <= 1e-12);
            }
        }

        #[test]
        fn grid_symmetric_decreasing(half in 1usize..80) {
            let n = 2 * half;
            let g = chebyshev_grid(n).unwrap();
            prop_assert_eq!(g.points[0], 1.0);
            prop_assert_eq!(g.points[n], -1.0);
            for j in 0..n {
                prop_assert!(g.points[j] > g.points[j + 1]);
                prop_assert_eq!(g.points[j], -g.points[n - j]);
            }
        }
    }
}
