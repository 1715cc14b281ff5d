//! Complex dense and banded linear algebra.
//!
//! Provides LU factorizations with partial pivoting for dense and banded
//! matrices (LAPACK-style band storage), a Woodbury solver for banded plus
//! low-rank systems, a Hager-style 1-norm condition estimator, and a
//! Cholesky factorization used to certify positive semi-definiteness.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::Cplx;

/// Dense complex matrix in column-major storage.
#[derive(Debug, Clone)]
pub struct Mat<R: Real> {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<Cplx<R>>,
}

impl<R: Real> Mat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, a: vec![Complex::new(R::zero(), R::zero()); rows * cols] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Cplx<R> {
        self.a[j * self.rows + i]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Cplx<R> {
        &mut self.a[j * self.rows + i]
    }

    pub fn col(&self, j: usize) -> &[Cplx<R>] {
        &self.a[j * self.rows..(j + 1) * self.rows]
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[Cplx<R>]) -> Vec<Cplx<R>> {
        let mut y = vec![Complex::new(R::zero(), R::zero()); self.rows];
        for j in 0..self.cols {
            let xj = x[j];
            let col = self.col(j);
            for i in 0..self.rows {
                y[i] += col[i] * xj;
            }
        }
        y
    }

    /// `y = A^H x`.
    pub fn matvec_adjoint(&self, x: &[Cplx<R>]) -> Vec<Cplx<R>> {
        let mut y = vec![Complex::new(R::zero(), R::zero()); self.cols];
        for j in 0..self.cols {
            let col = self.col(j);
            let mut s = Complex::new(R::zero(), R::zero());
            for i in 0..self.rows {
                s += col[i].conj() * x[i];
            }
            y[j] = s;
        }
        y
    }

    /// `y = A^T x`.
    pub fn matvec_transpose(&self, x: &[Cplx<R>]) -> Vec<Cplx<R>> {
        let mut y = vec![Complex::new(R::zero(), R::zero()); self.cols];
        for j in 0..self.cols {
            let col = self.col(j);
            let mut s = Complex::new(R::zero(), R::zero());
            for i in 0..self.rows {
                s += col[i] * x[i];
            }
            y[j] = s;
        }
        y
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> R {
        let mut best = R::zero();
        for j in 0..self.cols {
            let s: R = self.col(j).iter().map(|v| v.norm()).sum();
            best = best.max(s);
        }
        best
    }
}

/// LU factorization with partial pivoting of a dense square matrix.
#[derive(Debug, Clone)]
pub struct DenseLu<R: Real> {
    n: usize,
    lu: Vec<Cplx<R>>,
    piv: Vec<usize>,
}

impl<R: Real> DenseLu<R> {
    pub fn factor(mat: &Mat<R>) -> Result<Self> {
        assert_eq!(mat.rows, mat.cols);
        let n = mat.rows;
        let mut lu = mat.a.clone();
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k + k * n].norm();
            for i in k + 1..n {
                let v = lu[i + k * n].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == R::zero() || !best.is_finite() {
                return Err(Error::SingularSystem);
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    lu.swap(k + j * n, p + j * n);
                }
            }
            let pivot = lu[k + k * n];
            for i in k + 1..n {
                lu[i + k * n] /= pivot;
            }
            for j in k + 1..n {
                let ukj = lu[k + j * n];
                if ukj.re != R::zero() || ukj.im != R::zero() {
                    for i in k + 1..n {
                        let lik = lu[i + k * n];
                        lu[i + j * n] -= lik * ukj;
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, piv })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Cplx<R>]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for k in 0..n {
            let bk = b[k];
            for i in k + 1..n {
                let lik = self.lu[i + k * n];
                b[i] -= lik * bk;
            }
        }
        for k in (0..n).rev() {
            b[k] /= self.lu[k + k * n];
            let bk = b[k];
            for i in 0..k {
                let uik = self.lu[i + k * n];
                b[i] -= uik * bk;
            }
        }
    }

    /// Solves `A^H x = b` in place.
    pub fn solve_adjoint(&self, b: &mut [Cplx<R>]) {
        let n = self.n;
        // U^H w = b (forward substitution).
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[j + i * n].conj() * b[j];
            }
            b[i] = s / self.lu[i + i * n].conj();
        }
        // L^H v = w (backward substitution, unit diagonal).
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lu[j + i * n].conj() * b[j];
            }
            b[i] = s;
        }
        for k in (0..n).rev() {
            b.swap(k, self.piv[k]);
        }
    }
}

/// Banded complex matrix in LAPACK band storage with room for pivot fill-in:
/// entry `(i, j)` lives at `ab[j * ldab + (kl + ku + i - j)]` with
/// `ldab = 2 kl + ku + 1`.
#[derive(Debug, Clone)]
pub struct BandMat<R: Real> {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    ab: Vec<Cplx<R>>,
}

impl<R: Real> BandMat<R> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMat { n, kl, ku, ab: vec![Complex::new(R::zero(), R::zero()); n * ldab] }
    }

    #[inline]
    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        (j <= i + self.ku) && (i <= j + self.kl)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Cplx<R> {
        self.ab[j * self.ldab() + (self.kl + self.ku + i - j)]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Cplx<R>) {
        let idx = j * self.ldab() + (self.kl + self.ku + i - j);
        self.ab[idx] += v;
    }

    /// Approximate storage in scalars, for path-selection heuristics.
    pub fn storage(n: usize, kl: usize, ku: usize) -> usize {
        n * (2 * kl + ku + 1)
    }
}

/// LU factorization with partial pivoting of a banded matrix; fill-in stays
/// within `kl` extra superdiagonals.
#[derive(Debug, Clone)]
pub struct BandLu<R: Real> {
    mat: BandMat<R>,
    piv: Vec<usize>,
}

impl<R: Real> BandLu<R> {
    pub fn factor(mut m: BandMat<R>) -> Result<Self> {
        let n = m.n;
        let (kl, ku) = (m.kl, m.ku);
        let mut piv = vec![0usize; n];
        for j in 0..n {
            let imax = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = m.at(j, j).norm();
            for i in j + 1..=imax {
                let v = m.at(i, j).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == R::zero() || !best.is_finite() {
                return Err(Error::SingularSystem);
            }
            piv[j] = p;
            let jmax = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=jmax {
                    let ij = c * m.ldab() + (kl + ku + j - c);
                    let pj = c * m.ldab() + (kl + ku + p - c);
                    m.ab.swap(ij, pj);
                }
            }
            let pivot = m.at(j, j);
            for i in j + 1..=imax {
                let v = m.at(i, j) / pivot;
                let idx = j * m.ldab() + (kl + ku + i - j);
                m.ab[idx] = v;
            }
            for c in j + 1..=jmax {
                let u = m.at(j, c);
                if u.re == R::zero() && u.im == R::zero() {
                    continue;
                }
                for i in j + 1..=imax {
                    let l = m.at(i, j);
                    let idx = c * m.ldab() + (kl + ku + i - c);
                    m.ab[idx] -= l * u;
                }
            }
        }
        Ok(BandLu { mat: m, piv })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Cplx<R>]) {
        let n = self.mat.n;
        let (kl, ku) = (self.mat.kl, self.mat.ku);
        for j in 0..n {
            b.swap(j, self.piv[j]);
            let bj = b[j];
            let imax = (j + kl).min(n - 1);
            for i in j + 1..=imax {
                let l = self.mat.at(i, j);
                b[i] -= l * bj;
            }
        }
        for j in (0..n).rev() {
            let cmax = (j + kl + ku).min(n - 1);
            let mut s = b[j];
            for c in j + 1..=cmax {
                s -= self.mat.at(j, c) * b[c];
            }
            b[j] = s / self.mat.at(j, j);
        }
    }

    /// Solves `A^H x = b` in place.
    pub fn solve_adjoint(&self, b: &mut [Cplx<R>]) {
        let n = self.mat.n;
        let (kl, ku) = (self.mat.kl, self.mat.ku);
        // U^H x = b (forward substitution over rows within the band).
        for j in 0..n {
            let imin = j.saturating_sub(kl + ku);
            let mut s = b[j];
            for i in imin..j {
                s -= self.mat.at(i, j).conj() * b[i];
            }
            b[j] = s / self.mat.at(j, j).conj();
        }
        // (L^H with interleaved interchanges), reversed order.
        for j in (0..n).rev() {
            let imax = (j + kl).min(n - 1);
            let mut s = b[j];
            for i in j + 1..=imax {
                s -= self.mat.at(i, j).conj() * b[i];
            }
            b[j] = s;
            b.swap(j, self.piv[j]);
        }
    }
}

/// Factorization-backed solver for `A = S + conj(U) W^T` with `S` banded or
/// dense and `U`, `W` thin (Woodbury identity).
pub enum SparseLu<R: Real> {
    Dense(DenseLu<R>),
    Band(BandLu<R>),
}

impl<R: Real> SparseLu<R> {
    pub fn solve(&self, b: &mut [Cplx<R>]) {
        match self {
            SparseLu::Dense(f) => f.solve(b),
            SparseLu::Band(f) => f.solve(b),
        }
    }

    pub fn solve_adjoint(&self, b: &mut [Cplx<R>]) {
        match self {
            SparseLu::Dense(f) => f.solve_adjoint(b),
            SparseLu::Band(f) => f.solve_adjoint(b),
        }
    }
}

/// Woodbury solver: given a factorization of `S` and thin factors so that
/// `A = S + conj(U) W^T`, solves with `A` and `A^H` at the cost of solves
/// with `S` plus dense work of size `rank(U)`.
pub struct Woodbury<R: Real> {
    s: SparseLu<R>,
    u: Mat<R>,
    w: Mat<R>,
    /// Y = S^{-1} conj(U).
    y: Mat<R>,
    /// K = I + W^T Y, factored.
    k: DenseLu<R>,
    /// Yh = S^{-H} conj(W).
    yh: Mat<R>,
}

impl<R: Real> Woodbury<R> {
    pub fn new(s: SparseLu<R>, u: Mat<R>, w: Mat<R>) -> Result<Self> {
        let n = u.rows;
        let r = u.cols;
        assert_eq!(w.rows, n);
        assert_eq!(w.cols, r);
        let mut y = Mat::zeros(n, r);
        let mut yh = Mat::zeros(n, r);
        for c in 0..r {
            let mut col: Vec<Cplx<R>> = u.col(c).iter().map(|v| v.conj()).collect();
            s.solve(&mut col);
            y.a[c * n..(c + 1) * n].copy_from_slice(&col);
            let mut colh: Vec<Cplx<R>> = w.col(c).iter().map(|v| v.conj()).collect();
            s.solve_adjoint(&mut colh);
            yh.a[c * n..(c + 1) * n].copy_from_slice(&colh);
        }
        let mut k = Mat::zeros(r, r);
        for c in 0..r {
            let wty = w.matvec_transpose(y.col(c));
            for i in 0..r {
                *k.at_mut(i, c) = wty[i];
            }
            *k.at_mut(c, c) += Complex::new(R::one(), R::zero());
        }
        let k = DenseLu::factor(&k)?;
        Ok(Woodbury { s, u, w, y, k, yh })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Cplx<R>]) {
        self.s.solve(b);
        let mut t = self.w.matvec_transpose(b);
        self.k.solve(&mut t);
        let corr = self.y.matvec(&t);
        for (bi, ci) in b.iter_mut().zip(corr) {
            *bi -= ci;
        }
    }

    /// Solves `A^H x = b` in place (`A^H = S^H + conj(W) U^T`, whose
    /// capacitance matrix is `K^H`).
    pub fn solve_adjoint(&self, b: &mut [Cplx<R>]) {
        self.s.solve_adjoint(b);
        let mut t = self.u.matvec_transpose(b);
        self.k.solve_adjoint(&mut t);
        let corr = self.yh.matvec(&t);
        for (bi, ci) in b.iter_mut().zip(corr) {
            *bi -= ci;
        }
    }
}

/// Hager/Higham estimate of the 1-norm of a linear operator given its action
/// and the action of its adjoint.
pub fn estimate_norm_one<R: Real>(
    n: usize,
    mut apply: impl FnMut(&[Cplx<R>]) -> Vec<Cplx<R>>,
    mut apply_adjoint: impl FnMut(&[Cplx<R>]) -> Vec<Cplx<R>>,
) -> R {
    if n == 0 {
        return R::zero();
    }
    let inv_n = R::one() / R::of(n as f64);
    let mut x = vec![Complex::new(inv_n, R::zero()); n];
    let mut est = R::zero();
    for _ in 0..5 {
        let y = apply(&x);
        let new_est: R = y.iter().map(|v| v.norm()).sum();
        let xi: Vec<Cplx<R>> = y
            .iter()
            .map(|v| {
                let m = v.norm();
                if m == R::zero() {
                    Complex::new(R::one(), R::zero())
                } else {
                    v / m
                }
            })
            .collect();
        let z = apply_adjoint(&xi);
        let (mut jbest, mut zbest) = (0usize, R::zero());
        for (j, v) in z.iter().enumerate() {
            // Real-part heuristic as in Higham's complex estimator.
            let m = v.re.abs().max(v.im.abs());
            if m > zbest {
                zbest = m;
                jbest = j;
            }
        }
        let zx: R = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        est = est.max(new_est);
        if zbest <= zx.abs() * (R::one() + R::of(1e-12)) {
            break;
        }
        x = vec![Complex::new(R::zero(), R::zero()); n];
        x[jbest] = Complex::new(R::one(), R::zero());
    }
    est
}

/// Cholesky factorization of a Hermitian matrix shifted by `shift * I`.
/// Succeeds iff `A + shift I` is positive definite.
pub fn cholesky_in_place<R: Real>(mat: &mut Mat<R>, shift: R) -> Result<()> {
    assert_eq!(mat.rows, mat.cols);
    let n = mat.rows;
    for i in 0..n {
        *mat.at_mut(i, i) += Complex::new(shift, R::zero());
    }
    for j in 0..n {
        let mut d = mat.at(j, j).re;
        for k in 0..j {
            d -= mat.at(j, k).norm_sqr();
        }
        if !(d > R::zero()) {
            return Err(Error::SingularSystem);
        }
        let d = d.sqrt();
        *mat.at_mut(j, j) = Complex::new(d, R::zero());
        for i in j + 1..n {
            let mut s = mat.at(i, j);
            for k in 0..j {
                s -= mat.at(i, k) * mat.at(j, k).conj();
            }
            *mat.at_mut(i, j) = s / d;
        }
    }
    Ok(())
}
