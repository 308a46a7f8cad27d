//! Dense complex linear algebra that nalgebra does not cover for complex
//! non-normal matrices: Schur form, eigenvectors, Sylvester/Lyapunov solves,
//! plus the real-field helpers (realification, real inner products) used
//! throughout.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(a: &RMat) -> CMat {
    a.map(|x| C64::new(x, 0.0))
}

pub fn re_part(a: &CMat) -> RMat {
    a.map(|z| z.re)
}

pub fn im_part(a: &CMat) -> RMat {
    a.map(|z| z.im)
}

/// Real 2n×2n form `[[Re A, −Im A], [Im A, Re A]]` acting on `[Re x; Im x]`.
pub fn realify(a: &CMat) -> RMat {
    let (n, m) = a.shape();
    let mut r = RMat::zeros(2 * n, 2 * m);
    for j in 0..m {
        for i in 0..n {
            let z = a[(i, j)];
            r[(i, j)] = z.re;
            r[(i, j + m)] = -z.im;
            r[(i + n, j)] = z.im;
            r[(i + n, j + m)] = z.re;
        }
    }
    r
}

/// Stack `[Re X; Im X]`, the real coordinates of a set of real fields.
pub fn stack_re_im(x: &CMat) -> RMat {
    let (n, m) = x.shape();
    let mut r = RMat::zeros(2 * n, m);
    for j in 0..m {
        for i in 0..n {
            r[(i, j)] = x[(i, j)].re;
            r[(i + n, j)] = x[(i, j)].im;
        }
    }
    r
}

pub fn unstack_re_im(r: &RMat) -> CMat {
    let n = r.nrows() / 2;
    CMat::from_fn(n, r.ncols(), |i, j| C64::new(r[(i, j)], r[(i + n, j)]))
}

/// Complex product through four real gemms (nalgebra only dispatches f64
/// products to an optimized kernel).
pub fn cmul(a: &CMat, b: &CMat) -> CMat {
    if a.nrows() * a.ncols() * b.ncols() < 32_768 {
        return a * b;
    }
    let (ar, ai) = (re_part(a), im_part(a));
    let (br, bi) = (re_part(b), im_part(b));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMat::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

/// `Xᴴ · B` through real gemms.
pub fn cmul_adj(x: &CMat, b: &CMat) -> CMat {
    if x.nrows() * x.ncols() * b.ncols() < 32_768 {
        return x.adjoint() * b;
    }
    let (xr, xi) = (re_part(x).transpose(), im_part(x).transpose());
    let (br, bi) = (re_part(b), im_part(b));
    let re = &xr * &br + &xi * &bi;
    let im = &xr * &bi - &xi * &br;
    CMat::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

/// `Re(Xᴴ W Y)` for a real symmetric weight: the inner product of real fields.
pub fn real_inner(x: &CMat, w: &RMat, y: &CMat) -> RMat {
    let wyr = w * re_part(y);
    let wyi = w * im_part(y);
    re_part(x).transpose() * wyr + im_part(x).transpose() * wyi
}

/// `Xᴴ W Y` (sesquilinear) for a real symmetric weight.
pub fn herm_inner(x: &CMat, w: &RMat, y: &CMat) -> CMat {
    let wy = CMat::from_fn(y.nrows(), y.ncols(), |_, _| C64::new(0.0, 0.0));
    let wyr = w * re_part(y);
    let wyi = w * im_part(y);
    let mut wy = wy;
    for j in 0..y.ncols() {
        for i in 0..y.nrows() {
            wy[(i, j)] = C64::new(wyr[(i, j)], wyi[(i, j)]);
        }
    }
    cmul_adj(x, &wy)
}

/// Real symmetric weight applied to complex data.
pub fn apply_real(w: &RMat, x: &CMat) -> CMat {
    let r = w * re_part(x);
    let i = w * im_part(x);
    CMat::from_fn(r.nrows(), r.ncols(), |a, b| C64::new(r[(a, b)], i[(a, b)]))
}

pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Complex Schur form `A = Q T Qᴴ`, `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub q: CMat,
    pub t: CMat,
}

impl Schur {
    pub fn new(a: &CMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim("Schur form of a non-square matrix"));
        }
        let n = a.nrows();
        let mut h = a.clone();
        let mut q = CMat::identity(n, n);
        hessenberg(&mut h, &mut q);
        hqr(&mut h, &mut q)?;
        for j in 0..n {
            for i in (j + 1)..n {
                h[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        Ok(Schur { q, t: h })
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Right eigenvectors (unit 2-norm columns) in the order of `eigenvalues`.
    pub fn eigenvectors(&self) -> CMat {
        let t = &self.t;
        let n = t.nrows();
        let tnorm = frob(t).max(f64::MIN_POSITIVE);
        let small = f64::EPSILON * tnorm;
        let mut x = CMat::zeros(n, n);
        for k in 0..n {
            let lam = t[(k, k)];
            x[(k, k)] = C64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let mut s = C64::new(0.0, 0.0);
                for j in (i + 1)..=k {
                    s += t[(i, j)] * x[(j, k)];
                }
                let mut d = t[(i, i)] - lam;
                if d.norm() < small {
                    d = C64::new(small, 0.0);
                }
                x[(i, k)] = -s / d;
            }
        }
        let mut v = cmul(&self.q, &x);
        for mut col in v.column_iter_mut() {
            let nrm = col.norm();
            if nrm > 0.0 {
                col /= C64::new(nrm, 0.0);
            }
        }
        v
    }
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    Ok(Schur::new(a)?.eigenvalues())
}

/// Eigenvalues sorted by real part, largest first.
pub fn sorted_spectrum(a: &CMat) -> Result<Vec<C64>> {
    let mut ev = eigenvalues(a)?;
    ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(ev)
}

pub fn abscissa(a: &CMat) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

fn hessenberg(h: &mut CMat, q: &mut CMat) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { C64::new(1.0, 0.0) };
        v[0] += phase * xnorm;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vn;
        }
        // H ← (I − 2vvᴴ) H (I − 2vvᴴ)
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (l, vl) in v.iter().enumerate() {
                s += vl.conj() * h[(k + 1 + l, j)];
            }
            s *= 2.0;
            for (l, vl) in v.iter().enumerate() {
                h[(k + 1 + l, j)] -= vl * s;
            }
        }
        for i in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (l, vl) in v.iter().enumerate() {
                s += h[(i, k + 1 + l)] * vl;
            }
            s *= 2.0;
            for (l, vl) in v.iter().enumerate() {
                h[(i, k + 1 + l)] -= s * vl.conj();
            }
            let mut s = C64::new(0.0, 0.0);
            for (l, vl) in v.iter().enumerate() {
                s += q[(i, k + 1 + l)] * vl;
            }
            s *= 2.0;
            for (l, vl) in v.iter().enumerate() {
                q[(i, k + 1 + l)] -= s * vl.conj();
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

#[inline]
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let rho = (ax * ax + y.norm_sqr()).sqrt();
    if rho == 0.0 {
        (1.0, C64::new(0.0, 0.0))
    } else if ax == 0.0 {
        (0.0, C64::new(1.0, 0.0))
    } else {
        (ax / rho, (x / ax) * y.conj() / rho)
    }
}

/// Single-shift complex QR iteration on an upper Hessenberg matrix.
fn hqr(h: &mut CMat, q: &mut CMat) -> Result<()> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // locate the bottom of the active unreduced block
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 60 * n {
            return Err(Error::Factorization("QR iteration did not converge".into()));
        }
        let mu = if iter % 11 == 0 {
            // exceptional shift
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let m1 = d - b * c / (half + disc);
            let m2 = d - b * c / (half - disc);
            let m1 = if (half + disc).norm() == 0.0 { d } else { m1 };
            let m2 = if (half - disc).norm() == 0.0 { d } else { m2 };
            if (m1 - d).norm() <= (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };
        let mut x = h[(l, l)] - mu;
        let mut y = h[(l + 1, l)];
        for k in l..hi {
            if k > l {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let jstart = if k > l { k - 1 } else { l };
            for j in jstart..n {
                let u = h[(k, j)];
                let v = h[(k + 1, j)];
                h[(k, j)] = u * c + s * v;
                h[(k + 1, j)] = -s.conj() * u + v * c;
            }
            let iend = (k + 2).min(hi);
            for i in 0..=iend {
                let u = h[(i, k)];
                let v = h[(i, k + 1)];
                h[(i, k)] = u * c + v * s.conj();
                h[(i, k + 1)] = -u * s + v * c;
            }
            for i in 0..n {
                let u = q[(i, k)];
                let v = q[(i, k + 1)];
                q[(i, k)] = u * c + v * s.conj();
                q[(i, k + 1)] = -u * s + v * c;
            }
            if k > l {
                h[(k + 1, k - 1)] = C64::new(0.0, 0.0);
            }
        }
    }
    Ok(())
}

/// Solve `(T + shift·I) y = r` for upper-triangular `T`.
fn tri_solve(t: &CMat, shift: C64, r: &mut [C64]) {
    let n = t.nrows();
    let scale = f64::EPSILON * frob(t).max(1.0);
    for i in (0..n).rev() {
        let mut s = r[i];
        for j in (i + 1)..n {
            s -= t[(i, j)] * r[j];
        }
        let mut d = t[(i, i)] + shift;
        if d.norm() < scale {
            d = C64::new(scale, 0.0);
        }
        r[i] = s / d;
    }
}

/// Bartels–Stewart solve of `A X + X B = C`.
pub fn sylvester(a: &CMat, b: &CMat, c: &CMat) -> Result<CMat> {
    if c.nrows() != a.nrows() || c.ncols() != b.nrows() {
        return Err(Error::dim("Sylvester right-hand side"));
    }
    let sa = Schur::new(a)?;
    let sb = Schur::new(b)?;
    let ct = cmul(&cmul_adj(&sa.q, c), &sb.q);
    let (n, m) = ct.shape();
    let mut y = CMat::zeros(n, m);
    for k in 0..m {
        let mut rhs: Vec<C64> = (0..n).map(|i| ct[(i, k)]).collect();
        for j in 0..k {
            let tb = sb.t[(j, k)];
            if tb.norm() != 0.0 {
                for i in 0..n {
                    rhs[i] -= y[(i, j)] * tb;
                }
            }
        }
        tri_solve(&sa.t, sb.t[(k, k)], &mut rhs);
        for i in 0..n {
            y[(i, k)] = rhs[i];
        }
    }
    Ok(cmul(&cmul(&sa.q, &y), &sb.q.adjoint()))
}

/// Solve `A X + X Aᴴ + Q = 0` with one Schur factorization.
pub fn lyapunov(a: &CMat, qrhs: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if qrhs.shape() != (n, n) {
        return Err(Error::dim("Lyapunov right-hand side"));
    }
    let s = Schur::new(a)?;
    let ct = -cmul(&cmul_adj(&s.q, qrhs), &s.q);
    // T Y + Y Tᴴ = C̃, columns from last to first.
    let mut y = CMat::zeros(n, n);
    for k in (0..n).rev() {
        let mut rhs: Vec<C64> = (0..n).map(|i| ct[(i, k)]).collect();
        for j in (k + 1)..n {
            let tk = s.t[(k, j)].conj();
            if tk.norm() != 0.0 {
                for i in 0..n {
                    rhs[i] -= y[(i, j)] * tk;
                }
            }
        }
        tri_solve(&s.t, s.t[(k, k)].conj(), &mut rhs);
        for i in 0..n {
            y[(i, k)] = rhs[i];
        }
    }
    let x = cmul(&cmul(&s.q, &y), &s.q.adjoint());
    Ok((&x + x.adjoint()) * C64::new(0.5, 0.0))
}

/// Real Lyapunov solve `A X + X Aᵀ + Q = 0` through the complex Schur form.
pub fn lyapunov_real(a: &RMat, qrhs: &RMat) -> Result<RMat> {
    let x = lyapunov(&to_complex(a), &to_complex(qrhs))?;
    let xr = re_part(&x);
    Ok((&xr + xr.transpose()) * 0.5)
}

/// Factor a symmetric positive semidefinite matrix as `L Lᵀ`, clipping the
/// negative round-off part of the spectrum. Columns are ordered by decreasing
/// eigenvalue; zero columns are dropped.
pub fn psd_factor(p: &RMat) -> RMat {
    let sym = (p + p.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[idx[0]].max(0.0);
    let keep: Vec<usize> = idx.into_iter().filter(|&k| eig.eigenvalues[k] > 1e-15 * top).collect();
    let mut l = RMat::zeros(p.nrows(), keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for i in 0..p.nrows() {
            l[(i, c)] = eig.eigenvectors[(i, k)] * s;
        }
    }
    l
}

/// Eigen-decomposition of a real symmetric matrix, sorted descending.
pub fn sym_eig_desc(a: &RMat) -> (Vec<f64>, RMat) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let vals = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut v = RMat::zeros(a.nrows(), idx.len());
    for (c, &k) in idx.iter().enumerate() {
        v.set_column(c, &eig.eigenvectors.column(k));
    }
    (vals, v)
}

/// Eigen-decomposition of a Hermitian matrix, sorted descending.
pub fn herm_eig_desc(a: &CMat) -> (Vec<f64>, CMat) {
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let vals = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut v = CMat::zeros(a.nrows(), idx.len());
    for (c, &k) in idx.iter().enumerate() {
        v.set_column(c, &eig.eigenvectors.column(k));
    }
    (vals, v)
}

/// Thin SVD `A = U diag(s) Vᵀ`, singular values descending.
pub fn svd_desc(a: &RMat) -> Result<(RMat, Vec<f64>, RMat)> {
    let svd = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Factorization("SVD did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Factorization("SVD: missing U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Factorization("SVD: missing Vᵀ".into()))?;
    let s = svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&x, &y| s[y].total_cmp(&s[x]));
    let mut uo = RMat::zeros(u.nrows(), idx.len());
    let mut vo = RMat::zeros(vt.ncols(), idx.len());
    for (c, &k) in idx.iter().enumerate() {
        uo.set_column(c, &u.column(k));
        vo.set_column(c, &vt.row(k).transpose());
    }
    Ok((uo, idx.iter().map(|&k| s[k]).collect(), vo))
}

/// Complex thin SVD `A = U diag(s) Vᴴ`, singular values descending.
pub fn svd_desc_complex(a: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let svd = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Factorization("SVD did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Factorization("SVD: missing U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Factorization("SVD: missing Vᴴ".into()))?;
    let s = svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&x, &y| s[y].total_cmp(&s[x]));
    let mut uo = CMat::zeros(u.nrows(), idx.len());
    let mut vo = CMat::zeros(vt.ncols(), idx.len());
    for (c, &k) in idx.iter().enumerate() {
        uo.set_column(c, &u.column(k));
        vo.set_column(c, &vt.row(k).adjoint());
    }
    Ok((uo, idx.iter().map(|&k| s[k]).collect(), vo))
}

/// Complex LU solve with a dimension check.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(Error::dim("linear solve"));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Factorization("singular matrix in LU solve".into()))
}

pub fn solve_real(a: &RMat, b: &RMat) -> Result<RMat> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Factorization("singular matrix in LU solve".into()))
}

/// Exact RK4 one-step propagator `I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24`.
pub fn rk4_step_matrix(a: &CMat, h: f64) -> CMat {
    let n = a.nrows();
    let z = a * C64::new(h, 0.0);
    // Horner: I + Z(I + Z/2(I + Z/3(I + Z/4)))
    let id = CMat::identity(n, n);
    let mut p = &id + &z * C64::new(0.25, 0.0);
    p = &id + cmul(&z, &p) * C64::new(1.0 / 3.0, 0.0);
    p = &id + cmul(&z, &p) * C64::new(0.5, 0.0);
    &id + cmul(&z, &p)
}

pub fn mat_pow(a: &CMat, mut k: u64) -> CMat {
    let n = a.nrows();
    let mut result = CMat::identity(n, n);
    let mut base = a.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = cmul(&result, &base);
        }
        k >>= 1;
        if k > 0 {
            base = cmul(&base, &base);
        }
    }
    result
}

pub fn mat_pow_real(a: &RMat, mut k: u64) -> RMat {
    let n = a.nrows();
    let mut result = RMat::identity(n, n);
    let mut base = a.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Matrix exponential of a real matrix (scaling and squaring, degree-13 Padé
/// is overkill at our sizes; degree-6 Padé with scaling to ‖A‖ ≤ 0.5).
pub fn expm_real(a: &RMat) -> Result<RMat> {
    let n = a.nrows();
    let norm = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = a / 2f64.powi(s);
    let c = [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];
    let id = RMat::identity(n, n);
    let mut num = id.clone() * c[0];
    let mut den = id.clone() * c[0];
    let mut p = id.clone();
    for (k, ck) in c.iter().enumerate().skip(1) {
        p = &p * &x;
        num += &p * *ck;
        den += &p * (if k % 2 == 0 { *ck } else { -*ck });
    }
    let mut e = solve_real(&den, &num)?;
    for _ in 0..s {
        e = &e * &e;
    }
    Ok(e)
}

/// Matrix exponential of a complex matrix, same scheme as `expm_real`.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let norm = a.iter().map(|x| x.norm()).fold(0.0, f64::max) * n as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = a * C64::new(1.0 / 2f64.powi(s), 0.0);
    let c = [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];
    let id = CMat::identity(n, n);
    let mut num = id.clone();
    let mut den = id.clone();
    let mut p = id.clone();
    for (k, ck) in c.iter().enumerate().skip(1) {
        p = cmul(&p, &x);
        num += &p * C64::new(*ck, 0.0);
        den += &p * C64::new(if k % 2 == 0 { *ck } else { -*ck }, 0.0);
    }
    let mut e = solve(&den, &num)?;
    for _ in 0..s {
        e = cmul(&e, &e);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_cmat(n: usize, m: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, m, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn schur_reconstructs() {
        for (n, seed) in [(1, 1), (2, 2), (7, 3), (40, 4)] {
            let a = random_cmat(n, n, seed);
            let s = Schur::new(&a).unwrap();
            let back = cmul(&cmul(&s.q, &s.t), &s.q.adjoint());
            assert!(frob(&(back - &a)) < 1e-12 * frob(&a).max(1.0) * n as f64);
            let qq = s.q.adjoint() * &s.q - CMat::identity(n, n);
            assert!(frob(&qq) < 1e-12 * n as f64);
        }
    }

    #[test]
    fn eigenvectors_satisfy_definition() {
        let a = random_cmat(30, 30, 9);
        let s = Schur::new(&a).unwrap();
        let v = s.eigenvectors();
        for (k, lam) in s.eigenvalues().iter().enumerate() {
            let x = v.column(k).into_owned();
            let r = &a * &x - &x * *lam;
            assert!(r.norm() < 1e-10, "residual {}", r.norm());
        }
    }

    #[test]
    fn real_matrix_with_complex_pairs() {
        // rotation generator: eigenvalues ±i
        let a = to_complex(&RMat::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -2.0]));
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.im.total_cmp(&y.im));
        assert!((ev[0] - c64(0.0, -1.0)).norm() < 1e-13);
        assert!((ev[1] - c64(-2.0, 0.0)).norm() < 1e-13);
        assert!((ev[2] - c64(0.0, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn sylvester_residual() {
        let a = random_cmat(12, 12, 5) - CMat::identity(12, 12) * c64(3.0, 0.0);
        let b = random_cmat(7, 7, 6) - CMat::identity(7, 7) * c64(3.0, 0.0);
        let c = random_cmat(12, 7, 7);
        let x = sylvester(&a, &b, &c).unwrap();
        assert!(frob(&(&a * &x + &x * &b - &c)) < 1e-11);
    }

    #[test]
    fn lyapunov_residual_and_hermitian() {
        let a = random_cmat(15, 15, 11) - CMat::identity(15, 15) * c64(2.0, 0.0);
        let b = random_cmat(15, 2, 12);
        let q = &b * b.adjoint();
        let x = lyapunov(&a, &q).unwrap();
        let r = &a * &x + &x * a.adjoint() + &q;
        assert!(frob(&r) < 1e-11 * frob(&q));
        assert!(frob(&(&x - x.adjoint())) < 1e-13);
    }

    #[test]
    fn realify_is_homomorphism() {
        let a = random_cmat(5, 5, 1);
        let b = random_cmat(5, 3, 2);
        let lhs = realify(&(&a * &b));
        let rhs = realify(&a) * realify(&b);
        assert!((lhs - rhs).norm() < 1e-13);
        let x = random_cmat(5, 1, 3);
        let y = stack_re_im(&(&a * &x));
        assert!((y - realify(&a) * stack_re_im(&x)).norm() < 1e-13);
        assert_eq!(unstack_re_im(&stack_re_im(&x)), x);
    }

    #[test]
    fn fast_products_match_naive() {
        let a = random_cmat(60, 70, 1);
        let b = random_cmat(70, 50, 2);
        assert!(frob(&(cmul(&a, &b) - &a * &b)) < 1e-11);
        let x = random_cmat(70, 60, 3);
        assert!(frob(&(cmul_adj(&x, &b) - x.adjoint() * &b)) < 1e-11);
        let w = RMat::from_fn(70, 70, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let wc = to_complex(&w);
        let h = herm_inner(&x, &w, &b);
        assert!(frob(&(&h - x.adjoint() * &wc * &b)) < 1e-11);
        let r = real_inner(&x, &w, &b);
        assert!((r - re_part(&h)).norm() < 1e-11);
    }

    #[test]
    fn expm_matches_eigen_formula() {
        let a = RMat::from_row_slice(2, 2, &[-1.0, 3.0, 0.0, -2.0]);
        let e = expm_real(&(a.clone() * 2.0)).unwrap();
        // upper triangular: e^{-2}, e^{-4}, off-diagonal 3(e^{-2}-e^{-4})/(1)
        let e11 = (-2f64).exp();
        let e22 = (-4f64).exp();
        assert!((e[(0, 0)] - e11).abs() < 1e-14);
        assert!((e[(1, 1)] - e22).abs() < 1e-14);
        assert!((e[(0, 1)] - 3.0 * (e11 - e22)).abs() < 1e-13);
        let ac = random_cmat(8, 8, 4) * c64(4.0, 0.0);
        let e1 = expm(&ac).unwrap();
        let half = expm(&(&ac * c64(0.5, 0.0))).unwrap();
        assert!(frob(&(&e1 - &half * &half)) < 1e-10 * frob(&e1));
    }

    #[test]
    fn rk4_matrix_is_taylor_truncation() {
        let a = random_cmat(4, 4, 8);
        let h = 0.1;
        let r = rk4_step_matrix(&a, h);
        let z = &a * c64(h, 0.0);
        let z2 = &z * &z;
        let z3 = &z2 * &z;
        let z4 = &z3 * &z;
        let t = CMat::identity(4, 4) + &z + z2 * c64(0.5, 0.0) + z3 * c64(1.0 / 6.0, 0.0) + z4 * c64(1.0 / 24.0, 0.0);
        assert!(frob(&(r - t)) < 1e-15);
        let p = mat_pow(&a, 13);
        let mut q = CMat::identity(4, 4);
        for _ in 0..13 {
            q = &q * &a;
        }
        assert!(frob(&(p - q)) < 1e-12 * frob(&mat_pow(&a, 13)).max(1.0));
    }

    #[test]
    fn psd_factor_roundtrip() {
        let b = re_part(&random_cmat(6, 3, 1));
        let p = &b * b.transpose();
        let l = psd_factor(&p);
        assert_eq!(l.ncols(), 3);
        assert!((&l * l.transpose() - p).norm() < 1e-13);
    }
}
