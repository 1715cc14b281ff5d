//! Quadrature-free assembly of the Trefftz DG system.
//!
//! Every entry of the sesquilinear form is a product of plane waves
//! integrated over a mesh face, i.e. a closed-form segment integral
//! ([`crate::basis::segment_exp_integral`]). The truncated DtN terms on the
//! top and bottom boundaries couple all elements touching that boundary;
//! they are kept as a low-rank factor `conj(U) W^T` with one column pair per
//! retained Fourier mode, so the sparse skeleton part of the matrix stays
//! banded for band-ordered meshes.

use num_complex::Complex;

use crate::basis::{segment_exp_integral, GlobalBasis};
use crate::error::{Error, Result};
use crate::geometry::{FaceKind, Mesh, ProblemConfig};
use crate::linalg::Mat;
use crate::scalar::{cplx, dot, CVec2, Point, Real};
use crate::spectral::{incident_beta0, SpectralLadder};
use crate::Cplx;

/// Positive flux coefficients: `a` on interior and Dirichlet faces,
/// `b` on interior faces, `d` on the top/bottom boundaries.
#[derive(Debug, Clone, Copy)]
pub struct FluxParameters<R: Real> {
    pub a: R,
    pub b: R,
    pub d: R,
}

impl<R: Real> Default for FluxParameters<R> {
    /// Ultra-weak variational formulation choice `a = b = d = 1/2`.
    fn default() -> Self {
        FluxParameters { a: R::of(0.5), b: R::of(0.5), d: R::of(0.5) }
    }
}

impl<R: Real> FluxParameters<R> {
    pub fn validate(&self) -> Result<()> {
        if self.a > R::zero() && self.b > R::zero() && self.d > R::zero() {
            Ok(())
        } else {
            Err(Error::Config("flux parameters a, b, d must be positive".into()))
        }
    }
}

/// Which copy of an identified periodic face hosts the face integral.
///
/// The assembled values are analytically identical; the option exists to
/// verify that invariance numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// Integrate on the left segment (x1 = 0), transporting right traces.
    #[default]
    LeftCell,
    /// Integrate on the right segment (x1 = L), transporting left traces.
    RightCell,
}

/// Low-rank DtN coupling of one horizontal boundary: the boundary block of
/// the matrix is `conj(U) W^T`.
#[derive(Debug, Clone)]
pub struct BoundaryCoupling<R: Real> {
    pub u: Mat<R>,
    pub w: Mat<R>,
}

impl<R: Real> BoundaryCoupling<R> {
    pub fn rank(&self) -> usize {
        self.u.cols
    }
}

/// Assembled discrete system `A c = rhs` with
/// `A = S + sum_b conj(U_b) W_b^T`.
#[derive(Debug, Clone)]
pub struct TdgSystem<R: Real> {
    /// Number of degrees of freedom.
    pub n: usize,
    /// Sparse skeleton part `S`, sorted by (column, row), duplicates merged.
    pub triplets: Vec<(usize, usize, Cplx<R>)>,
    /// DtN couplings for the top and bottom boundaries.
    pub couplings: Vec<BoundaryCoupling<R>>,
    pub rhs: Vec<Cplx<R>>,
    /// Maximum |row - col| over the skeleton entries.
    pub bandwidth: usize,
}

/// Assembles matrix and right-hand side for a mesh, plane-wave basis and
/// DtN truncation.
pub fn assemble_system<R: Real>(
    config: &ProblemConfig<R>,
    mesh: &Mesh<R>,
    basis: &GlobalBasis<R>,
    ladder: &SpectralLadder<R>,
    phase: PhaseConvention,
) -> Result<TdgSystem<R>> {
    config.validate()?;
    let n = basis.dofs();
    let p = basis.p;
    let i = Complex::<R>::i();
    let one = Complex::new(R::one(), R::zero());
    let flux = config.flux;
    let period = mesh.period;
    let alpha0 = config.alpha0();
    let nmodes = ladder.len();

    let mut triplets: Vec<(usize, usize, Cplx<R>)> = Vec::new();
    let mut rhs = vec![Complex::new(R::zero(), R::zero()); n];
    let mut top = BoundaryCoupling {
        u: Mat::zeros(n, 2 * nmodes),
        w: Mat::zeros(n, 2 * nmodes),
    };
    let mut bottom = BoundaryCoupling {
        u: Mat::zeros(n, 2 * nmodes),
        w: Mat::zeros(n, 2 * nmodes),
    };

    // Contribution of one (trial element, test element) pair on one face
    // segment. `coeff(l, j)` supplies the flux coefficient, `tf`/`sf` the
    // per-direction transport phases of trial and test functions. Test
    // functions enter through exp(-i kappa d_j . x) with the element's
    // (possibly complex) wavenumber kept as is: this is the conjugate trace
    // for real kappa and its analytic continuation otherwise, which is what
    // keeps the scheme consistent on absorbing elements.
    let pair_block = |triplets: &mut Vec<(usize, usize, Cplx<R>)>,
                          et: usize,
                          es: usize,
                          seg: (Point<R>, Point<R>),
                          tf: &[Cplx<R>],
                          sf: &[Cplx<R>],
                          coeff: &dyn Fn(usize, usize) -> Cplx<R>| {
        let kt = mesh.elements[et].kappa;
        let ks = mesh.elements[es].kappa;
        for l in 0..p {
            let dl = basis.directions[l];
            let wl = [kt * dl[0], kt * dl[1]];
            for j in 0..p {
                let dj = basis.directions[j];
                let w: CVec2<R> = [wl[0] - ks * dj[0], wl[1] - ks * dj[1]];
                let v = coeff(l, j) * tf[l] * sf[j] * segment_exp_integral(w, seg.0, seg.1);
                triplets.push((basis.dof(es, j), basis.dof(et, l), v));
            }
        }
    };

    let unit: Vec<Cplx<R>> = vec![one; p];

    for face in &mesh.faces {
        match face.kind {
            FaceKind::Interior | FaceKind::PeriodicPair => {
                let e1 = face.elem1;
                let e2 = face.elem2.expect("interior face has two elements");
                let k1 = mesh.elements[e1].kappa;
                let k2 = mesh.elements[e2].kappa;
                let xi = (k1.re + k2.re) / R::of(2.0);

                // Transport phases and integration segment. For plain
                // interior faces all phases are 1 and both segments agree.
                let (seg, fac1t, fac1s, fac2t, fac2s);
                match face.kind {
                    FaceKind::Interior => {
                        seg = (face.a1, face.b1);
                        fac1t = unit.clone();
                        fac1s = unit.clone();
                        fac2t = unit.clone();
                        fac2s = unit.clone();
                    }
                    _ => {
                        // Quasi-periodic identification: the left element's
                        // trace carries exp(i alpha_0 L); evaluating an
                        // element on the other copy of the face shifts every
                        // plane wave by its horizontal wavenumber.
                        let qp = (i * alpha0 * period).exp();
                        let shift = |kappa: Cplx<R>, d: Point<R>| (i * kappa * d[0] * period).exp();
                        match phase {
                            PhaseConvention::LeftCell => {
                                seg = (face.a1, face.b1);
                                fac1t = vec![qp; p];
                                fac1s = vec![qp.conj(); p];
                                fac2t = basis
                                    .directions
                                    .iter()
                                    .map(|&d| shift(k2, d))
                                    .collect();
                                fac2s = basis
                                    .directions
                                    .iter()
                                    .map(|&d| shift(k2, d).inv())
                                    .collect();
                            }
                            PhaseConvention::RightCell => {
                                seg = (face.a2, face.b2);
                                fac1t = basis
                                    .directions
                                    .iter()
                                    .map(|&d| qp * shift(k1, d).inv())
                                    .collect();
                                fac1s = fac1t.iter().map(|v| v.inv()).collect();
                                fac2t = unit.clone();
                                fac2s = unit.clone();
                            }
                        }
                    }
                }

                // Outward normals of each element on its own copy.
                let n1 = face.normal;
                let n2 = [-face.normal[0], -face.normal[1]];

                for (e, ne, ft, fs) in
                    [(e1, n1, &fac1t, &fac1s), (e2, n2, &fac2t, &fac2s)]
                {
                    let kappa = mesh.elements[e].kappa;
                    let coeff = |l: usize, j: usize| {
                        let dln = dot(basis.directions[l], ne);
                        let djn = dot(basis.directions[j], ne);
                        -i * kappa * (djn + dln) * R::of(0.5)
                            - i * (flux.b / xi) * kappa * kappa * (dln * djn)
                            - i * (xi * flux.a)
                    };
                    pair_block(&mut triplets, e, e, seg, ft, fs, &coeff);
                }

                for (et, es, nstar, ft, fs) in [
                    (e1, e2, n1, &fac1t, &fac2s),
                    (e2, e1, n2, &fac2t, &fac1s),
                ] {
                    let kt = mesh.elements[et].kappa;
                    let ks = mesh.elements[es].kappa;
                    let coeff = |l: usize, j: usize| {
                        let dln = dot(basis.directions[l], nstar);
                        let djn = dot(basis.directions[j], nstar);
                        i * (ks * djn + kt * dln) * R::of(0.5)
                            + i * (flux.b / xi) * kt * ks * (dln * djn)
                            + i * (xi * flux.a)
                    };
                    pair_block(&mut triplets, et, es, seg, ft, fs, &coeff);
                }
            }
            FaceKind::DirichletGammaD => {
                let e = face.elem1;
                let kappa = mesh.elements[e].kappa;
                let ne = face.normal;
                let coeff = |l: usize, _j: usize| {
                    let dln = dot(basis.directions[l], ne);
                    -i * kappa * (flux.a + dln)
                };
                pair_block(&mut triplets, e, e, (face.a1, face.b1), &unit, &unit, &coeff);
            }
            FaceKind::Top | FaceKind::Bottom => {
                let is_top = face.kind == FaceKind::Top;
                let e = face.elem1;
                let kappa = mesh.elements[e].kappa;
                let ne = face.normal;
                let kb: Cplx<R> = if is_top {
                    Complex::new(config.kappa_plus(), R::zero())
                } else {
                    config.kappa_minus()
                };
                let betas = if is_top { &ladder.beta_plus } else { &ladder.beta_minus };
                let coupling = if is_top { &mut top } else { &mut bottom };

                // Local boundary terms u dnv' - d i/kb dnu dnv'.
                let coeff = |l: usize, j: usize| {
                    let dln = dot(basis.directions[l], ne);
                    let djn = dot(basis.directions[j], ne);
                    -i * kappa * djn * (one + (kappa / kb) * (flux.d * dln))
                };
                pair_block(&mut triplets, e, e, (face.a1, face.b1), &unit, &unit, &coeff);

                // Fourier trace coefficients of each basis function on this
                // face segment, filling the low-rank DtN factors.
                let inv_l = R::one() / period;
                for (mi, (_n, alpha)) in ladder.modes().enumerate() {
                    let beta = betas[mi];
                    for l in 0..p {
                        let d = basis.directions[l];
                        let w: CVec2<R> = [
                            kappa * d[0] - Complex::new(alpha, R::zero()),
                            kappa * d[1],
                        ];
                        let tr = segment_exp_integral(w, face.a1, face.b1) * inv_l;
                        // Test-side trace coefficient: the integral of
                        // exp(-i kappa d . x) against exp(i alpha x1), which
                        // is the conjugate of `tr` only for real kappa.
                        let trw =
                            segment_exp_integral([-w[0], -w[1]], face.a1, face.b1) * inv_l;
                        let dln = dot(d, ne);
                        let dof = basis.dof(e, l);
                        let fl = one - (kappa / kb) * (flux.d * dln);
                        // Column pair (mode, 0) and (mode, 1); see the
                        // factorization in the module docs.
                        *coupling.u.at_mut(dof, mi) += (fl * trw).conj();
                        *coupling.u.at_mut(dof, nmodes + mi) += beta * trw.conj();
                        *coupling.w.at_mut(dof, mi) += -i * beta * tr * period;
                        *coupling.w.at_mut(dof, nmodes + mi) += i
                            * (flux.d * period)
                            * tr
                            * ((kappa / kb) * dln - beta / kb);
                    }
                }

                // Incident-wave load, top boundary only.
                if is_top {
                    let beta0 = incident_beta0(config);
                    let h = mesh.half_height;
                    let winc: CVec2<R> = [
                        Complex::new(alpha0, R::zero()),
                        Complex::new(-beta0, R::zero()),
                    ];
                    let phase0 = (-i * beta0 * h).exp();
                    for j in 0..p {
                        let d = basis.directions[j];
                        let djn = dot(d, ne);
                        let fj = one - (kappa / kb) * (flux.d * djn);
                        let w: CVec2<R> = [
                            winc[0] - kappa * d[0],
                            winc[1] - kappa * d[1],
                        ];
                        let inc = segment_exp_integral(w, face.a1, face.b1);
                        let wtr: CVec2<R> = [
                            winc[0] - kappa * d[0],
                            -kappa * d[1],
                        ];
                        let trw0 = segment_exp_integral(wtr, face.a1, face.b1) * inv_l;
                        let dof = basis.dof(e, j);
                        rhs[dof] += -i * (R::of(2.0) * beta0) * fj * inc
                            + trw0
                                * phase0
                                * cplx(0.0, -2.0)
                                * (beta0 * beta0 * flux.d * period)
                                / kb;
                    }
                }
            }
        }
    }

    // Merge duplicate entries and sort for deterministic downstream use.
    triplets.sort_by_key(|&(r, c, _)| (c, r));
    let mut merged: Vec<(usize, usize, Cplx<R>)> = Vec::with_capacity(triplets.len());
    for (r, c, v) in triplets {
        match merged.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => merged.push((r, c, v)),
        }
    }
    let bandwidth = merged
        .iter()
        .map(|&(r, c, _)| r.max(c) - r.min(c))
        .max()
        .unwrap_or(0);

    Ok(TdgSystem { n, triplets: merged, couplings: vec![top, bottom], rhs, bandwidth })
}

impl<R: Real> TdgSystem<R> {
    /// `y = A x` including the low-rank DtN couplings.
    pub fn matvec(&self, x: &[Cplx<R>]) -> Vec<Cplx<R>> {
        let mut y = vec![Complex::new(R::zero(), R::zero()); self.n];
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
        for cp in &self.couplings {
            let t = cp.w.matvec_transpose(x);
            for (ci, tc) in t.iter().enumerate() {
                if tc.re == R::zero() && tc.im == R::zero() {
                    continue;
                }
                let col = cp.u.col(ci);
                for (yi, ui) in y.iter_mut().zip(col) {
                    *yi += ui.conj() * tc;
                }
            }
        }
        y
    }

    /// `y = A^H x`.
    pub fn matvec_adjoint(&self, x: &[Cplx<R>]) -> Vec<Cplx<R>> {
        let mut y = vec![Complex::new(R::zero(), R::zero()); self.n];
        for &(r, c, v) in &self.triplets {
            y[c] += v.conj() * x[r];
        }
        for cp in &self.couplings {
            // (conj(U) W^T)^H = conj(W) U^T.
            let t = cp.u.matvec_transpose(x);
            for (ci, tc) in t.iter().enumerate() {
                if tc.re == R::zero() && tc.im == R::zero() {
                    continue;
                }
                let col = cp.w.col(ci);
                for (yi, wi) in y.iter_mut().zip(col) {
                    *yi += wi.conj() * tc;
                }
            }
        }
        y
    }

    /// Full dense matrix (for small systems, diagnostics and tests).
    pub fn to_dense(&self) -> Mat<R> {
        let mut a = Mat::zeros(self.n, self.n);
        for &(r, c, v) in &self.triplets {
            *a.at_mut(r, c) += v;
        }
        for cp in &self.couplings {
            for ci in 0..cp.u.cols {
                let ucol = cp.u.col(ci).to_vec();
                let wcol = cp.w.col(ci).to_vec();
                for (j, wv) in wcol.iter().enumerate() {
                    if wv.re == R::zero() && wv.im == R::zero() {
                        continue;
                    }
                    for (ii, uv) in ucol.iter().enumerate() {
                        *a.at_mut(ii, j) += uv.conj() * wv;
                    }
                }
            }
        }
        a
    }

    /// Estimated 1-norm of the full operator.
    pub fn norm_one_estimate(&self) -> R {
        crate::linalg::estimate_norm_one(
            self.n,
            |x| self.matvec(x),
            |x| self.matvec_adjoint(x),
        )
    }

    /// Writes the full matrix in a simple triplet text format:
    /// `n nnz` followed by `row col re im` lines.
    pub fn write_matrix(&self, out: &mut dyn std::io::Write) -> Result<()> {
        let a = self.to_dense();
        let mut lines = Vec::new();
        for c in 0..a.cols {
            for r in 0..a.rows {
                let v = a.at(r, c);
                if v.re != R::zero() || v.im != R::zero() {
                    lines.push((r, c, v));
                }
            }
        }
        writeln!(out, "{} {}", self.n, lines.len())?;
        for (r, c, v) in lines {
            writeln!(out, "{} {} {:e} {:e}", r, c, v.re, v.im)?;
        }
        Ok(())
    }
}
