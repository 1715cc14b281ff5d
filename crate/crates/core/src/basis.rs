//! Plane-wave Trefftz basis and closed-form segment integrals.
//!
//! Each element `K` carries `p` plane waves `exp(i kappa_K d_j . x)` with
//! equispaced unit directions `d_j`. Because products of plane waves are
//! again complex exponentials, every entry of the discrete system reduces to
//! the segment integral computed by [`segment_exp_integral`]; assembly never
//! uses numerical quadrature.

use num_complex::Complex;

use crate::geometry::Mesh;
use crate::scalar::{cdot, CVec2, Point, Real};
use crate::Cplx;

/// Equispaced unit directions `d_j = (cos, sin)(2 pi j / p + rotation)`,
/// `j = 1..=p`.
pub fn directions<R: Real>(p: usize, rotation: R) -> Vec<Point<R>> {
    (1..=p)
        .map(|j| {
            let angle = R::of(2.0) * R::PI() * R::of(j as f64) / R::of(p as f64) + rotation;
            [angle.cos(), angle.sin()]
        })
        .collect()
}

/// Global enumeration of the plane-wave space on a mesh: `p` shared
/// directions per element, degree of freedom `e * p + j`.
#[derive(Debug, Clone)]
pub struct GlobalBasis<R: Real> {
    /// Plane waves per element.
    pub p: usize,
    /// Common rotation applied to all direction fans.
    pub rotation: R,
    pub directions: Vec<Point<R>>,
    pub n_elements: usize,
}

impl<R: Real> GlobalBasis<R> {
    pub fn new(mesh: &Mesh<R>, p: usize, rotation: R) -> Self {
        GlobalBasis {
            p,
            rotation,
            directions: directions(p, rotation),
            n_elements: mesh.elements.len(),
        }
    }

    /// Total number of degrees of freedom.
    pub fn dofs(&self) -> usize {
        self.p * self.n_elements
    }

    /// Global index of direction `j` on element `e`.
    pub fn dof(&self, e: usize, j: usize) -> usize {
        e * self.p + j
    }

    /// `(element, direction)` of a global index.
    pub fn split(&self, dof: usize) -> (usize, usize) {
        (dof / self.p, dof % self.p)
    }

    /// Complex wave vector `kappa_K d_j` of a basis function.
    pub fn wave_vector(&self, mesh: &Mesh<R>, e: usize, j: usize) -> CVec2<R> {
        let kappa = mesh.elements[e].kappa;
        [kappa * self.directions[j][0], kappa * self.directions[j][1]]
    }

    /// Value of basis function `j` of element `e` at `x`.
    pub fn eval(&self, mesh: &Mesh<R>, e: usize, j: usize, x: Point<R>) -> Cplx<R> {
        let w = self.wave_vector(mesh, e, j);
        (cdot(w, x) * Complex::i()).exp()
    }

    /// Gradient of basis function `j` of element `e` at `x`.
    pub fn grad(&self, mesh: &Mesh<R>, e: usize, j: usize, x: Point<R>) -> CVec2<R> {
        let w = self.wave_vector(mesh, e, j);
        let v = self.eval(mesh, e, j, x) * Complex::i();
        [v * w[0], v * w[1]]
    }
}

/// `sin(z)/z` with a Taylor fallback near the removable singularity.
pub fn sinc<R: Real>(z: Cplx<R>) -> Cplx<R> {
    if z.norm() < R::of(1e-4) {
        let z2 = z * z;
        let one = Complex::new(R::one(), R::zero());
        one - z2 / R::of(6.0) + z2 * z2 / R::of(120.0)
    } else {
        z.sin() / z
    }
}

/// Arclength integral of `exp(i w . x)` over the segment from `a` to `b`
/// for a complex wave vector `w`:
/// `|b - a| * exp(i w . m) * sinc(w . (b - a) / 2)` with midpoint `m`.
pub fn segment_exp_integral<R: Real>(w: CVec2<R>, a: Point<R>, b: Point<R>) -> Cplx<R> {
    let len = crate::scalar::norm2(crate::scalar::sub(b, a));
    let half = R::of(0.5);
    let mid = [(a[0] + b[0]) * half, (a[1] + b[1]) * half];
    let z = cdot(w, [(b[0] - a[0]) * half, (b[1] - a[1]) * half]);
    (cdot(w, mid) * Complex::i()).exp() * sinc(z) * len
}
