//! Error measurement, diffraction efficiencies and convergence studies.
//!
//! Volume integrals (only needed for error norms, never for assembly) use a
//! Duffy-type tensor Gauss rule on triangles; convex elements are fanned
//! into triangles around their centroid. Convergence studies sweep the
//! number of plane waves per element or the DtN truncation order and record
//! relative errors, condition estimates and timings.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::assembly::{assemble_system, PhaseConvention};
use crate::basis::{segment_exp_integral, GlobalBasis};
use crate::error::{Error, Result};
use crate::geometry::{build_structured, FaceKind, Mesh, ProblemConfig};
use crate::oracles::FieldEval;
use crate::scalar::{CVec2, Point, Real};
use crate::solver::{solve, DiscreteSolution, SolveOptions};
use crate::spectral::{build_ladder, incident_beta0, m_star, SpectralLadder};
use crate::Cplx;

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// Legendre recurrence).
pub fn gauss_legendre<R: Real>(n: usize) -> (Vec<R>, Vec<R>) {
    assert!(n >= 1);
    let mut nodes = vec![R::zero(); n];
    let mut weights = vec![R::zero(); n];
    let nf = R::of(n as f64);
    for i in 0..(n + 1) / 2 {
        let mut x = (R::PI() * (R::of(i as f64) + R::of(0.75)) / (nf + R::of(0.5))).cos();
        let mut dp = R::one();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = R::one();
            let mut p1 = x;
            for j in 2..=n {
                let jf = R::of(j as f64);
                let p2 = ((R::of(2.0) * jf - R::one()) * x * p1 - (jf - R::one()) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - R::one());
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= R::of(1e-16) {
                break;
            }
        }
        let w = R::of(2.0) / ((R::one() - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor Gauss rule on the triangle `(a, b, c)` through the Duffy map
/// `x(u, v) = a (1-u) + b u (1-v) + c u v` with Jacobian `2 |T| u`.
pub fn duffy_triangle<R: Real>(
    a: Point<R>,
    b: Point<R>,
    c: Point<R>,
    order: usize,
) -> Vec<(Point<R>, R)> {
    let (gx, gw) = gauss_legendre::<R>(order);
    let half = R::of(0.5);
    let area2 = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
    let mut rule = Vec::with_capacity(order * order);
    for (xu, wu) in gx.iter().zip(&gw) {
        let u = (*xu + R::one()) * half;
        for (xv, wv) in gx.iter().zip(&gw) {
            let v = (*xv + R::one()) * half;
            let p = [
                a[0] * (R::one() - u) + b[0] * u * (R::one() - v) + c[0] * u * v,
                a[1] * (R::one() - u) + b[1] * u * (R::one() - v) + c[1] * u * v,
            ];
            // The two 1/2 factors map the Gauss weights to [0, 1].
            let w = *wu * *wv * half * half * u * area2;
            rule.push((p, w));
        }
    }
    rule
}

/// Quadrature on a convex polygon: centroid fan of Duffy triangles.
pub fn polygon_quadrature<R: Real>(poly: &[Point<R>], order: usize) -> Vec<(Point<R>, R)> {
    if poly.len() == 3 {
        return duffy_triangle(poly[0], poly[1], poly[2], order);
    }
    let nf = R::of(poly.len() as f64);
    let mut c = [R::zero(), R::zero()];
    for p in poly {
        c[0] += p[0];
        c[1] += p[1];
    }
    let c = [c[0] / nf, c[1] / nf];
    let mut rule = Vec::new();
    for i in 0..poly.len() {
        rule.extend(duffy_triangle(c, poly[i], poly[(i + 1) % poly.len()], order));
    }
    rule
}

/// Relative L2 and (full) H1 errors of a discrete solution against a
/// reference field.
#[derive(Debug, Clone, Copy)]
pub struct ErrorNorms<R: Real> {
    pub l2_rel: R,
    pub h1_rel: R,
}

pub fn error_norms<R: Real>(
    sol: &DiscreteSolution<R>,
    exact: &dyn FieldEval<R>,
    quad_order: usize,
) -> ErrorNorms<R> {
    let mesh = &sol.mesh;
    let sums: [R; 4] = (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| {
            let poly = mesh.element_polygon(e);
            let mut l2e = R::zero();
            let mut l2x = R::zero();
            let mut h1e = R::zero();
            let mut h1x = R::zero();
            for (p, w) in polygon_quadrature(&poly, quad_order) {
                let uh = sol.eval_in(e, p);
                let gu = sol.grad_in(e, p);
                let ux = exact.value(p);
                let gx = exact.gradient(p);
                l2e += w * (uh - ux).norm_sqr();
                l2x += w * ux.norm_sqr();
                h1e += w * ((gu[0] - gx[0]).norm_sqr() + (gu[1] - gx[1]).norm_sqr());
                h1x += w * (gx[0].norm_sqr() + gx[1].norm_sqr());
            }
            [l2e, l2x, h1e, h1x]
        })
        .reduce(
            || [R::zero(); 4],
            |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]],
        );
    let [l2e, l2x, h1e, h1x] = sums;
    ErrorNorms {
        l2_rel: (l2e / l2x).sqrt(),
        h1_rel: ((l2e + h1e) / (l2x + h1x)).sqrt(),
    }
}

impl<R: Real> FieldEval<R> for DiscreteSolution<R> {
    fn value(&self, x: Point<R>) -> Cplx<R> {
        self.eval(x).unwrap_or(Complex::new(R::zero(), R::zero()))
    }

    fn gradient(&self, x: Point<R>) -> CVec2<R> {
        self.grad(x)
            .unwrap_or([Complex::new(R::zero(), R::zero()); 2])
    }
}

/// Fourier trace coefficients of the discrete solution on the top
/// (`x2 = H`) or bottom (`x2 = -H`) boundary, for all retained modes.
pub fn boundary_trace_coeffs<R: Real>(
    sol: &DiscreteSolution<R>,
    ladder: &SpectralLadder<R>,
    top: bool,
) -> Vec<Cplx<R>> {
    let mesh = &sol.mesh;
    let basis = &sol.basis;
    let mut coeffs = vec![Complex::new(R::zero(), R::zero()); ladder.len()];
    let inv_l = R::one() / mesh.period;
    let kind = if top { FaceKind::Top } else { FaceKind::Bottom };
    for face in &mesh.faces {
        if face.kind != kind {
            continue;
        }
        let e = face.elem1;
        let kappa = mesh.elements[e].kappa;
        for (mi, (_n, alpha)) in ladder.modes().enumerate() {
            for j in 0..basis.p {
                let d = basis.directions[j];
                let w: CVec2<R> = [
                    kappa * d[0] - Complex::new(alpha, R::zero()),
                    kappa * d[1],
                ];
                coeffs[mi] += sol.coeffs[basis.dof(e, j)]
                    * segment_exp_integral(w, face.a1, face.b1)
                    * inv_l;
            }
        }
    }
    coeffs
}

/// Diffraction efficiencies of the propagative reflected and transmitted
/// modes, each normalized by the incident vertical flux.
#[derive(Debug, Clone)]
pub struct Efficiencies<R: Real> {
    pub reflected: Vec<(isize, R)>,
    pub transmitted: Vec<(isize, R)>,
    /// Sum of all listed efficiencies (1 up to discretization error for
    /// lossless materials).
    pub total: R,
}

pub fn diffraction_efficiencies<R: Real>(
    config: &ProblemConfig<R>,
    ladder: &SpectralLadder<R>,
    sol: &DiscreteSolution<R>,
) -> Result<Efficiencies<R>> {
    let beta0 = incident_beta0(config);
    if beta0 <= R::of(1e-14) {
        return Err(Error::DegenerateIncidence);
    }
    let top = boundary_trace_coeffs(sol, ladder, true);
    let bot = boundary_trace_coeffs(sol, ladder, false);
    let inc0 = (Complex::<R>::i() * (-beta0) * config.half_height).exp();
    let tol = R::of(1e-12);
    let mut reflected = Vec::new();
    let mut transmitted = Vec::new();
    let mut total = R::zero();
    for (mi, (n, _alpha)) in ladder.modes().enumerate() {
        let bp = ladder.beta_plus[mi];
        if bp.im.abs() <= tol * (R::one() + bp.norm()) && bp.re > tol {
            let mut a = top[mi];
            if n == 0 {
                a -= inc0;
            }
            let e = bp.re / beta0 * a.norm_sqr();
            total += e;
            reflected.push((n, e));
        }
        let bm = ladder.beta_minus[mi];
        if bm.im.abs() <= tol * (R::one() + bm.norm()) && bm.re > tol {
            let e = bm.re / beta0 * bot[mi].norm_sqr();
            total += e;
            transmitted.push((n, e));
        }
    }
    Ok(Efficiencies { reflected, transmitted, total })
}

/// Which discretization parameter a convergence study sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Plane waves per element `p`.
    PlaneWaves,
    /// DtN truncation order `M`.
    DtnModes,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<usize>,
}

/// One row of a convergence study.
#[derive(Debug, Clone)]
pub struct SweepRow<R: Real> {
    pub value: usize,
    pub l2_rel: R,
    pub h1_rel: R,
    pub cond: R,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable<R: Real> {
    pub rows: Vec<SweepRow<R>>,
}

impl<R: Real> ConvergenceTable<R> {
    pub fn write_csv(&self, out: &mut dyn std::io::Write) -> Result<()> {
        writeln!(out, "sweep,l2_rel,h1_rel,cond,seconds")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e}",
                r.value,
                r.l2_rel.to_f64_lossy(),
                r.h1_rel.to_f64_lossy(),
                r.cond.to_f64_lossy(),
                r.seconds
            )?;
        }
        Ok(())
    }
}

/// Assembles and solves one discretization of a fixed mesh.
pub fn solve_once<R: Real>(
    config: &ProblemConfig<R>,
    mesh: &Arc<Mesh<R>>,
    p: usize,
    m: usize,
    rotation: R,
    opts: &SolveOptions<R>,
) -> Result<DiscreteSolution<R>> {
    let basis = Arc::new(GlobalBasis::new(mesh, p, rotation));
    let ladder = build_ladder(config, m);
    let sys = assemble_system(config, mesh, &basis, &ladder, PhaseConvention::LeftCell)?;
    solve(&sys, mesh.clone(), basis, opts)
}

/// Runs a convergence study on a fixed mesh against a reference field.
#[allow(clippy::too_many_arguments)]
pub fn run_convergence<R: Real>(
    config: &ProblemConfig<R>,
    mesh: &Arc<Mesh<R>>,
    spec: &SweepSpec,
    fixed_p: usize,
    fixed_m: usize,
    rotation: R,
    reference: &dyn FieldEval<R>,
    quad_order: usize,
    opts: &SolveOptions<R>,
) -> Result<ConvergenceTable<R>> {
    let mut rows = Vec::with_capacity(spec.values.len());
    for &v in &spec.values {
        let (p, m) = match spec.variable {
            SweepVariable::PlaneWaves => (v, fixed_m),
            SweepVariable::DtnModes => (fixed_p, v),
        };
        let start = std::time::Instant::now();
        let sol = solve_once(config, mesh, p, m, rotation, opts)?;
        let seconds = start.elapsed().as_secs_f64();
        let norms = error_norms(&sol, reference, quad_order);
        rows.push(SweepRow {
            value: v,
            l2_rel: norms.l2_rel,
            h1_rel: norms.h1_rel,
            cond: sol.report.cond_estimate,
            seconds,
        });
    }
    Ok(ConvergenceTable { rows })
}

/// Default DtN truncation: one more than the propagative cutoff.
pub fn auto_truncation<R: Real>(config: &ProblemConfig<R>) -> Result<usize> {
    Ok(m_star(config)?.ceil().to_f64_lossy() as usize + 1)
}

/// Result of solving the same problem on a horizontally replicated cell and
/// comparing against the quasi-periodic extension of the single-cell
/// solution.
#[derive(Debug, Clone)]
pub struct ExtendedDomainReport<R: Real> {
    pub copies: usize,
    pub base_m: usize,
    pub extended_m: usize,
    /// Relative L2 mismatch over the extended domain.
    pub l2_rel: R,
    /// Relative H1 seminorm-augmented mismatch over the extended domain.
    pub h1_rel: R,
}

/// Quasi-periodic extension of a single-cell solution to a replicated cell:
/// `u*(x1, x2) = exp(i alpha0 L j) u(x1 - j L, x2)` with `j = floor(x1 / L)`.
struct QuasiPeriodicExtension<'a, R: Real> {
    base: &'a DiscreteSolution<R>,
    period: R,
    alpha0: R,
}

impl<R: Real> QuasiPeriodicExtension<'_, R> {
    fn transport(&self, x: Point<R>) -> (Point<R>, Cplx<R>) {
        let cell = (x[0] / self.period).floor();
        let x1 = (x[0] - cell * self.period)
            .max(R::zero())
            .min(self.period);
        let phase = (Complex::i() * self.alpha0 * self.period * cell).exp();
        ([x1, x[1]], phase)
    }
}

impl<R: Real> FieldEval<R> for QuasiPeriodicExtension<'_, R> {
    fn value(&self, x: Point<R>) -> Cplx<R> {
        let (xb, phase) = self.transport(x);
        self.base.value(xb) * phase
    }

    fn gradient(&self, x: Point<R>) -> CVec2<R> {
        let (xb, phase) = self.transport(x);
        let g = self.base.gradient(xb);
        [g[0] * phase, g[1] * phase]
    }
}

/// Horizontally replicated copy of a configuration.
pub fn replicate_config<R: Real>(config: &ProblemConfig<R>, copies: usize) -> ProblemConfig<R> {
    let mut ext = config.clone();
    ext.period = config.period * R::of(copies as f64);
    ext.regions.clear();
    ext.obstacles.clear();
    for c in 0..copies {
        let shift = config.period * R::of(c as f64);
        for r in &config.regions {
            let mut poly = r.polygon.clone();
            for p in poly.iter_mut() {
                p[0] += shift;
            }
            ext.regions.push(crate::geometry::Region { polygon: poly, eps: r.eps });
        }
        for o in &config.obstacles {
            let mut poly = o.clone();
            for p in poly.iter_mut() {
                p[0] += shift;
            }
            ext.obstacles.push(poly);
        }
    }
    ext
}

/// Solves on the base cell and on `copies` replicated cells, then samples
/// both solutions: the replicated one must equal the quasi-periodic
/// extension `exp(i alpha_0 L j) u(x1 - j L, x2)` of the base one.
#[allow(clippy::too_many_arguments)]
pub fn extended_domain_check<R: Real>(
    config: &ProblemConfig<R>,
    h: R,
    p: usize,
    m_base: usize,
    m_ext: usize,
    copies: usize,
    rotation: R,
    opts: &SolveOptions<R>,
) -> Result<ExtendedDomainReport<R>> {
    let base_mesh = Arc::new(build_structured(config, h)?);
    let base = solve_once(config, &base_mesh, p, m_base, rotation, opts)?;

    let ext_config = replicate_config(config, copies);
    let ext_mesh = Arc::new(build_structured(&ext_config, h)?);
    let ext = solve_once(&ext_config, &ext_mesh, p, m_ext, rotation, opts)?;

    let reference = QuasiPeriodicExtension {
        base: &base,
        period: config.period,
        alpha0: config.alpha0(),
    };
    let norms = error_norms(&ext, &reference, 12);
    Ok(ExtendedDomainReport {
        copies,
        base_m: m_base,
        extended_m: m_ext,
        l2_rel: norms.l2_rel,
        h1_rel: norms.h1_rel,
    })
}
