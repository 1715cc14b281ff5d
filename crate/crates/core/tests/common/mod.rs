//! Shared test helpers: direct Gauss-Legendre quadrature of the skeleton
//! sesquilinear form and right-hand side, for cross-validating the
//! closed-form assembly.

use num_complex::Complex;
use std::sync::Arc;

use tdg_core::analysis::gauss_legendre;
use tdg_core::assembly::{assemble_system, PhaseConvention};
use tdg_core::basis::GlobalBasis;
use tdg_core::geometry::{build_structured, FaceKind, Mesh, ProblemConfig};
use tdg_core::linalg::Mat;
use tdg_core::spectral::{build_ladder, incident_beta0, SpectralLadder};

pub type C = Complex<f64>;

pub const NQ: usize = 40;

pub fn cdot(a: [C; 2], b: [f64; 2]) -> C {
    a[0] * b[0] + a[1] * b[1]
}

/// Quadrature points and weights on the segment [a, b].
pub fn seg_quad(a: [f64; 2], b: [f64; 2]) -> Vec<([f64; 2], f64)> {
    let (nodes, weights) = gauss_legendre::<f64>(NQ);
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| {
            let s = 0.5 * (1.0 + t);
            (
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
                0.5 * len * w,
            )
        })
        .collect()
}

/// Assembles the dense system matrix and load vector by numerical quadrature
/// of the skeleton form, term by term.
pub fn quadrature_dense(
    config: &ProblemConfig<f64>,
    mesh: &Mesh<f64>,
    basis: &GlobalBasis<f64>,
    ladder: &SpectralLadder<f64>,
) -> (Mat<f64>, Vec<C>) {
    let n = basis.dofs();
    let p = basis.p;
    let mut a = Mat::<f64>::zeros(n, n);
    let mut rhs = vec![C::new(0.0, 0.0); n];
    let fl = config.flux;
    let i = C::new(0.0, 1.0);
    let l = mesh.period;
    let qp = (i * config.alpha0() * l).exp();

    // Interior, periodic and Dirichlet faces.
    for face in &mesh.faces {
        match face.kind {
            FaceKind::Interior | FaceKind::PeriodicPair => {
                let e1 = face.elem1;
                let e2 = face.elem2.unwrap();
                let n1 = face.normal;
                let n2 = [-n1[0], -n1[1]];
                let periodic = face.kind == FaceKind::PeriodicPair;
                // Integrate over the identified face at x1 = L for periodic
                // pairs; the left element's trace is transported by the
                // quasi-periodicity phase.
                let pts = if periodic {
                    seg_quad(face.a2, face.b2)
                } else {
                    seg_quad(face.a1, face.b1)
                };
                let xi = 0.5 * (mesh.elements[e1].kappa.re + mesh.elements[e2].kappa.re);
                // Trace of dof (e, j) on side 1 / side 2 of the face.
                let trace = |e: usize, j: usize, x: [f64; 2], side1: bool| -> (C, [C; 2]) {
                    let (xe, phase) = if periodic && side1 {
                        ([x[0] - l, x[1]], qp)
                    } else {
                        (x, C::new(1.0, 0.0))
                    };
                    let v = basis.eval(mesh, e, j, xe) * phase;
                    let g = basis.grad(mesh, e, j, xe);
                    (v, [g[0] * phase, g[1] * phase])
                };
                let dofs: Vec<(usize, usize, bool)> = (0..p)
                    .map(|j| (e1, j, true))
                    .chain((0..p).map(|j| (e2, j, false)))
                    .collect();
                for &(et, jt, t1) in &dofs {
                    for &(es, js, s1) in &dofs {
                        let mut acc = C::new(0.0, 0.0);
                        for &(x, w) in &pts {
                            let (uv, ug) = trace(et, jt, x, t1);
                            // The test function enters as exp(-i kappa d . x),
                            // the pointwise inverse of the trial trace; this
                            // is its conjugate exactly when kappa is real.
                            let (vv0, vg0) = trace(es, js, x, s1);
                            let vv = vv0.inv();
                            let vg = [-vg0[0] * vv * vv, -vg0[1] * vv * vv];
                            let (u1, g1u) = if t1 { (uv, ug) } else { (C::new(0.0, 0.0), [C::new(0.0, 0.0); 2]) };
                            let (u2, g2u) = if t1 { (C::new(0.0, 0.0), [C::new(0.0, 0.0); 2]) } else { (uv, ug) };
                            let (v1, g1v) = if s1 { (vv, vg) } else { (C::new(0.0, 0.0), [C::new(0.0, 0.0); 2]) };
                            let (v2, g2v) = if s1 { (C::new(0.0, 0.0), [C::new(0.0, 0.0); 2]) } else { (vv, vg) };
                            let avg_u = 0.5 * (u1 + u2);
                            let avg_gu = [0.5 * (g1u[0] + g2u[0]), 0.5 * (g1u[1] + g2u[1])];
                            let jump_u = [u1 * n1[0] + u2 * n2[0], u1 * n1[1] + u2 * n2[1]];
                            let jump_gu = cdot(g1u, n1) + cdot(g2u, n2);
                            let jump_vb = [
                                v1 * n1[0] + v2 * n2[0],
                                v1 * n1[1] + v2 * n2[1],
                            ];
                            let jump_gvb = cdot(g1v, n1) + cdot(g2v, n2);
                            let term = avg_u * jump_gvb
                                - (avg_gu[0] * jump_vb[0] + avg_gu[1] * jump_vb[1])
                                - i * xi * fl.a * (jump_u[0] * jump_vb[0] + jump_u[1] * jump_vb[1])
                                - i * (fl.b / xi) * jump_gu * jump_gvb;
                            acc += w * term;
                        }
                        *a.at_mut(basis.dof(es, js), basis.dof(et, jt)) += acc;
                    }
                }
            }
            FaceKind::DirichletGammaD => {
                let e = face.elem1;
                let kappa = mesh.elements[e].kappa;
                let nrm = face.normal;
                let pts = seg_quad(face.a1, face.b1);
                for jt in 0..p {
                    for js in 0..p {
                        let mut acc = C::new(0.0, 0.0);
                        for &(x, w) in &pts {
                            let u = basis.eval(mesh, e, jt, x);
                            let gu = basis.grad(mesh, e, jt, x);
                            let v = basis.eval(mesh, e, js, x).inv();
                            acc += w * (-cdot(gu, nrm) * v - i * kappa * fl.a * u * v);
                        }
                        *a.at_mut(basis.dof(e, js), basis.dof(e, jt)) += acc;
                    }
                }
            }
            FaceKind::Top | FaceKind::Bottom => {}
        }
    }

    // DtN boundaries: the truncated operator couples every face on the same
    // boundary, so assemble it globally from Fourier trace coefficients.
    for top in [true, false] {
        let kind = if top { FaceKind::Top } else { FaceKind::Bottom };
        let faces: Vec<_> = mesh.faces.iter().filter(|f| f.kind == kind).collect();
        if faces.is_empty() {
            continue;
        }
        let kappa_b = if top {
            C::new(config.kappa_plus(), 0.0)
        } else {
            config.kappa_minus()
        };
        let betas = if top { &ladder.beta_plus } else { &ladder.beta_minus };
        let dofs: Vec<(usize, usize)> = faces
            .iter()
            .flat_map(|f| (0..p).map(move |j| (f.elem1, j)))
            .collect();
        // Fourier coefficients of each boundary dof's trace: `hat` for the
        // trial role (against exp(-i alpha x1)), `what` for the test role,
        // whose trace is the pointwise inverse of the trial one.
        let mut hat = vec![vec![C::new(0.0, 0.0); ladder.len()]; dofs.len()];
        let mut what = vec![vec![C::new(0.0, 0.0); ladder.len()]; dofs.len()];
        for (di, &(e, j)) in dofs.iter().enumerate() {
            let face = faces.iter().find(|f| f.elem1 == e).unwrap();
            for &(x, w) in &seg_quad(face.a1, face.b1) {
                let u = basis.eval(mesh, e, j, x);
                for (mi, (_, alpha)) in ladder.modes().enumerate() {
                    hat[di][mi] += w * u * (-i * alpha * x[0]).exp() / l;
                    what[di][mi] += w * u.inv() * (i * alpha * x[0]).exp() / l;
                }
            }
        }
        let tm = |di: usize, x1: f64| -> C {
            let mut s = C::new(0.0, 0.0);
            for (mi, (_, alpha)) in ladder.modes().enumerate() {
                s += i * betas[mi] * hat[di][mi] * (i * alpha * x1).exp();
            }
            s
        };
        // DtN applied to the test trace, with conjugated symbols.
        let tmw = |di: usize, x1: f64| -> C {
            let mut s = C::new(0.0, 0.0);
            for (mi, (_, alpha)) in ladder.modes().enumerate() {
                s += -i * betas[mi].conj() * what[di][mi] * (-i * alpha * x1).exp();
            }
            s
        };
        let beta0 = incident_beta0(config);
        let h = config.half_height;
        for face in &faces {
            let ef = face.elem1;
            let nrm = face.normal;
            for &(x, w) in &seg_quad(face.a1, face.b1) {
                let vals: Vec<(C, C, C, C, C, C)> = dofs
                    .iter()
                    .enumerate()
                    .map(|(di, &(e, j))| {
                        let (v, dn, wv, dwn) = if e == ef {
                            let v = basis.eval(mesh, e, j, x);
                            let dn = cdot(basis.grad(mesh, e, j, x), nrm);
                            let wv = v.inv();
                            (v, dn, wv, -dn * wv * wv)
                        } else {
                            let z = C::new(0.0, 0.0);
                            (z, z, z, z)
                        };
                        (v, dn, tm(di, x[0]), wv, dwn, tmw(di, x[0]))
                    })
                    .collect();
                for (dt, &(uv, du, tu, _, _, _)) in vals.iter().enumerate() {
                    for (ds, &(_, _, _, wv, dwv, twv)) in vals.iter().enumerate() {
                        let term = uv * dwv - tu * wv
                            - fl.d * i / kappa_b * (du - tu) * (dwv - twv);
                        *a.at_mut(
                            basis.dof(dofs[ds].0, dofs[ds].1),
                            basis.dof(dofs[dt].0, dofs[dt].1),
                        ) += w * term;
                    }
                }
                if top {
                    let uinc = (i * (config.alpha0() * x[0] - beta0 * h)).exp();
                    for (ds, &(_, _, _, wv, dwv, twv)) in vals.iter().enumerate() {
                        rhs[basis.dof(dofs[ds].0, dofs[ds].1)] += w
                            * (-2.0 * i * beta0 * uinc)
                            * (wv - fl.d * i / kappa_b * (dwv - twv));
                    }
                }
            }
        }
    }
    (a, rhs)
}

pub fn compare(config: &ProblemConfig<f64>, h: f64, p: usize, m: usize, rotation: f64) -> usize {
    let mesh = Arc::new(build_structured(config, h).unwrap());
    let basis = Arc::new(GlobalBasis::new(&mesh, p, rotation));
    let ladder = build_ladder(config, m);
    let sys = assemble_system(config, &mesh, &basis, &ladder, PhaseConvention::LeftCell).unwrap();
    let dense = sys.to_dense();
    let (quad, rhs_quad) = quadrature_dense(config, &mesh, &basis, &ladder);

    let n = basis.dofs();
    let scale = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| dense.at(r, c).norm())
        .fold(0.0f64, f64::max);
    let mut max_rel = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let d = (dense.at(r, c) - quad.at(r, c)).norm();
            max_rel = max_rel.max(d / scale);
        }
    }
    let rhs_scale = sys.rhs.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let rhs_rel = sys
        .rhs
        .iter()
        .zip(&rhs_quad)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0f64, f64::max)
        / rhs_scale.max(1e-300);
    println!(
        "faces = {}, matrix rel = {max_rel:.3e}, rhs rel = {rhs_rel:.3e}",
        mesh.faces.len()
    );
    assert!(max_rel < 1e-10, "matrix mismatch {max_rel:.3e}");
    assert!(rhs_rel < 1e-10, "rhs mismatch {rhs_rel:.3e}");
    mesh.faces.len()
}
