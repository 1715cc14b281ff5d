//! Closed-form reference solutions for layered media.
//!
//! For flat horizontal interfaces the scattering problem reduces to 1D
//! transmission conditions, giving exact solutions: a Fresnel two-layer
//! solution, a three-layer (slab) solution obtained from a 4x4 interface
//! system, and the guided modes responsible for non-uniqueness of the slab
//! problem at critical incidence angles. These fields are used as references
//! for convergence studies and in tests.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{DenseLu, Mat};
use crate::scalar::{cdot, CVec2, Point, Real};
use crate::Cplx;

/// A scalar field with values and gradients, used as error reference.
pub trait FieldEval<R: Real>: Sync {
    fn value(&self, x: Point<R>) -> Cplx<R>;
    fn gradient(&self, x: Point<R>) -> CVec2<R>;
}

fn plane_wave<R: Real>(w: CVec2<R>, x: Point<R>) -> Cplx<R> {
    (cdot(w, x) * Complex::i()).exp()
}

/// Incident plane wave `exp(i k (x1 cos theta + x2 sin theta))`.
#[derive(Debug, Clone)]
pub struct IncidentWave<R: Real> {
    pub w: CVec2<R>,
}

impl<R: Real> IncidentWave<R> {
    pub fn new(kappa_plus: R, theta: R) -> Self {
        IncidentWave {
            w: [
                Complex::new(kappa_plus * theta.cos(), R::zero()),
                Complex::new(kappa_plus * theta.sin(), R::zero()),
            ],
        }
    }
}

impl<R: Real> FieldEval<R> for IncidentWave<R> {
    fn value(&self, x: Point<R>) -> Cplx<R> {
        plane_wave(self.w, x)
    }

    fn gradient(&self, x: Point<R>) -> CVec2<R> {
        let v = plane_wave(self.w, x) * Complex::i();
        [v * self.w[0], v * self.w[1]]
    }
}

/// Exact solution for a single flat interface at `x2 = 0` between vacuum
/// above and permittivity `eps_minus` below, unit-amplitude incidence.
#[derive(Debug, Clone)]
pub struct TwoLayerSolution<R: Real> {
    pub k: R,
    pub theta: R,
    pub eps_minus: Cplx<R>,
    /// Reflection coefficient.
    pub r: Cplx<R>,
    /// Transmission coefficient.
    pub t: Cplx<R>,
    /// `sqrt(eps_minus - cos^2 theta)`, principal branch.
    pub s: Cplx<R>,
}

/// Fresnel coefficients for the two-layer problem:
/// `T = 2 sin(theta) / (sin(theta) - s)`,
/// `R = (sin(theta) + s) / (sin(theta) - s)` with
/// `s = sqrt(eps_minus - cos^2 theta)`.
pub fn two_layer<R: Real>(k: R, theta: R, eps_minus: Cplx<R>) -> Result<TwoLayerSolution<R>> {
    let sin = theta.sin();
    let cos = theta.cos();
    let s = (eps_minus - Complex::new(cos * cos, R::zero())).sqrt();
    let den = Complex::new(sin, R::zero()) - s;
    if den.norm() < R::of(1e-14) {
        return Err(Error::ResonanceDetected);
    }
    let r = (Complex::new(sin, R::zero()) + s) / den;
    let t = Complex::new(sin + sin, R::zero()) / den;
    Ok(TwoLayerSolution { k, theta, eps_minus, r, t, s })
}

impl<R: Real> TwoLayerSolution<R> {
    fn waves(&self) -> (CVec2<R>, CVec2<R>, CVec2<R>) {
        let kc = Complex::new(self.k * self.theta.cos(), R::zero());
        let ks = Complex::new(self.k * self.theta.sin(), R::zero());
        let inc = [kc, ks];
        let refl = [kc, -ks];
        let trans = [kc, -self.s * self.k];
        (inc, refl, trans)
    }
}

impl<R: Real> FieldEval<R> for TwoLayerSolution<R> {
    fn value(&self, x: Point<R>) -> Cplx<R> {
        let (inc, refl, trans) = self.waves();
        if x[1] >= R::zero() {
            plane_wave(inc, x) + self.r * plane_wave(refl, x)
        } else {
            self.t * plane_wave(trans, x)
        }
    }

    fn gradient(&self, x: Point<R>) -> CVec2<R> {
        let (inc, refl, trans) = self.waves();
        if x[1] >= R::zero() {
            let vi = plane_wave(inc, x) * Complex::i();
            let vr = self.r * plane_wave(refl, x) * Complex::i();
            [vi * inc[0] + vr * refl[0], vi * inc[1] + vr * refl[1]]
        } else {
            let vt = self.t * plane_wave(trans, x) * Complex::i();
            [vt * trans[0], vt * trans[1]]
        }
    }
}

/// Exact solution for a slab `|x2| < d` of permittivity `eps_in` embedded in
/// vacuum, unit-amplitude incidence from above.
#[derive(Debug, Clone)]
pub struct ThreeLayerSolution<R: Real> {
    pub k: R,
    pub theta: R,
    pub d: R,
    pub eps_in: R,
    pub r: Cplx<R>,
    pub t1: Cplx<R>,
    pub t2: Cplx<R>,
    pub t3: Cplx<R>,
    /// `gamma = sqrt(eps_in - cos^2 theta)`.
    pub gamma: R,
}

/// Solves the 4x4 interface system (continuity of the field and its vertical
/// derivative at `x2 = +-d`) for the slab coefficients.
pub fn three_layer<R: Real>(k: R, theta: R, eps_in: R, d: R) -> Result<ThreeLayerSolution<R>> {
    let sin = theta.sin();
    let cos = theta.cos();
    let gamma2 = eps_in - cos * cos;
    if gamma2 <= R::zero() {
        return Err(Error::NotApplicable(
            "slab oracle requires eps_in > cos^2 theta".into(),
        ));
    }
    let gamma = gamma2.sqrt();
    let i = Complex::<R>::i();
    let ep = |z: R| (i * z).exp();
    let g = Complex::new(gamma, R::zero());
    let sn = Complex::new(sin, R::zero());
    let kd = k * d;

    let mut a = Mat::<R>::zeros(4, 4);
    // Unknowns ordered [R, T1, T2, T3].
    *a.at_mut(0, 0) = ep(-kd * sin);
    *a.at_mut(0, 1) = -ep(-kd * gamma);
    *a.at_mut(0, 2) = -ep(kd * gamma);
    *a.at_mut(1, 0) = -sn * ep(-kd * sin);
    *a.at_mut(1, 1) = g * ep(-kd * gamma);
    *a.at_mut(1, 2) = -g * ep(kd * gamma);
    *a.at_mut(2, 1) = ep(kd * gamma);
    *a.at_mut(2, 2) = ep(-kd * gamma);
    *a.at_mut(2, 3) = -ep(-kd * sin);
    *a.at_mut(3, 1) = -g * ep(kd * gamma);
    *a.at_mut(3, 2) = g * ep(-kd * gamma);
    *a.at_mut(3, 3) = -sn * ep(-kd * sin);

    let lu = DenseLu::factor(&a).map_err(|_| Error::ResonanceDetected)?;
    let zero = Complex::new(R::zero(), R::zero());
    let mut b = [-ep(kd * sin), -sn * ep(kd * sin), zero, zero];
    lu.solve(&mut b);
    Ok(ThreeLayerSolution {
        k,
        theta,
        d,
        eps_in,
        r: b[0],
        t1: b[1],
        t2: b[2],
        t3: b[3],
        gamma,
    })
}

impl<R: Real> ThreeLayerSolution<R> {
    fn terms(&self, x: Point<R>) -> Vec<(Cplx<R>, CVec2<R>)> {
        let kc = Complex::new(self.k * self.theta.cos(), R::zero());
        let ks = Complex::new(self.k * self.theta.sin(), R::zero());
        let kg = Complex::new(self.k * self.gamma, R::zero());
        let one = Complex::new(R::one(), R::zero());
        if x[1] > self.d {
            vec![(one, [kc, ks]), (self.r, [kc, -ks])]
        } else if x[1] >= -self.d {
            vec![(self.t1, [kc, -kg]), (self.t2, [kc, kg])]
        } else {
            vec![(self.t3, [kc, ks])]
        }
    }
}

impl<R: Real> FieldEval<R> for ThreeLayerSolution<R> {
    fn value(&self, x: Point<R>) -> Cplx<R> {
        self.terms(x)
            .into_iter()
            .map(|(c, w)| c * plane_wave(w, x))
            .sum()
    }

    fn gradient(&self, x: Point<R>) -> CVec2<R> {
        let mut grad = [Complex::new(R::zero(), R::zero()); 2];
        for (c, w) in self.terms(x) {
            let v = c * plane_wave(w, x) * Complex::i();
            grad[0] += v * w[0];
            grad[1] += v * w[1];
        }
        grad
    }
}

/// A guided mode of the slab problem: decays like `exp(-k3 |x2|)` outside
/// `|x2| < d` and oscillates as `cos(k2 x2)` inside.
#[derive(Debug, Clone)]
pub struct GuidedMode<R: Real> {
    pub k1: R,
    pub k2: R,
    pub k3: R,
    /// Matching amplitude `C = cos(k2 d) exp(k3 d)`.
    pub c: R,
    pub d: R,
}

/// All interior wavenumbers `k2` solving
/// `k2^2 (1 + tan^2(k2 d)) = k^2 (eps_in - eps_plus)` on
/// `(0, k sqrt(eps_in - eps_plus))` with `tan(k2 d) > 0` (so the mode
/// decays away from the slab).
pub fn guided_mode_wavenumbers<R: Real>(k: R, eps_plus: R, eps_in: R, d: R) -> Vec<R> {
    let ksq = k * k * (eps_in - eps_plus);
    if ksq <= R::zero() {
        return Vec::new();
    }
    let kmax = ksq.sqrt();
    let f = |k2: R| {
        let t = (k2 * d).tan();
        k2 * k2 * (R::one() + t * t) - ksq
    };
    // Scan each pole-free interval of tan(k2 d) for sign changes.
    let half_pi = R::PI() / R::of(2.0);
    let margin = R::of(1e-9);
    let mut roots = Vec::new();
    let mut m = 0usize;
    loop {
        let lo = (R::PI() * R::of(m as f64)) / d + margin;
        let hi = ((R::PI() * R::of(m as f64) + half_pi) / d - margin).min(kmax);
        if lo >= kmax {
            break;
        }
        if hi > lo {
            // f is increasing from f(lo) to +infinity on this branch
            // (tan > 0), so at most one root; bisect if the signs differ.
            let (mut a, mut b) = (lo, hi);
            if f(a) < R::zero() && f(b) > R::zero() {
                for _ in 0..200 {
                    let mid = (a + b) * R::of(0.5);
                    if f(mid) < R::zero() {
                        a = mid;
                    } else {
                        b = mid;
                    }
                    if (b - a) <= a * R::of(1e-15) {
                        break;
                    }
                }
                roots.push((a + b) * R::of(0.5));
            }
        }
        m += 1;
    }
    roots
}

/// Builds the guided-mode parameters for one interior wavenumber root.
pub fn guided_mode<R: Real>(k: R, eps_plus: R, eps_in: R, d: R, k2: R) -> GuidedMode<R> {
    let k3 = k2 * (k2 * d).tan();
    let k1 = (k * k * eps_in - k2 * k2).sqrt();
    let c = (k2 * d).cos() * (k3 * d).exp();
    let _ = eps_plus;
    GuidedMode { k1, k2, k3, c, d }
}

/// Incidence angles at which the guided mode with horizontal wavenumber `k1`
/// becomes quasi-periodic: `k1 = k cos(theta) + 2 pi n / L` for integer `n`,
/// `theta` in `[-pi, 0]`. Returns `(n, theta)` pairs.
pub fn critical_angles<R: Real>(k: R, k1: R, period: R) -> Vec<(isize, R)> {
    let two_pi = R::of(2.0) * R::PI();
    let mut out = Vec::new();
    // cos(theta) = (k1 - 2 pi n / L) / k must lie in [-1, 1].
    let nmin = ((k1 - k) * period / two_pi).ceil().to_f64_lossy() as isize;
    let nmax = ((k1 + k) * period / two_pi).floor().to_f64_lossy() as isize;
    for n in nmin..=nmax {
        let c = (k1 - two_pi * R::of(n as f64) / period) / k;
        if c.abs() <= R::one() {
            out.push((n, -c.acos()));
        }
    }
    out
}

impl<R: Real> FieldEval<R> for GuidedMode<R> {
    fn value(&self, x: Point<R>) -> Cplx<R> {
        let osc = (Complex::<R>::i() * self.k1 * x[0]).exp();
        if x[1] > self.d {
            osc * self.c * (-self.k3 * x[1]).exp()
        } else if x[1] >= -self.d {
            osc * (self.k2 * x[1]).cos()
        } else {
            osc * self.c * (self.k3 * x[1]).exp()
        }
    }

    fn gradient(&self, x: Point<R>) -> CVec2<R> {
        let i = Complex::<R>::i();
        let osc = (i * self.k1 * x[0]).exp();
        let (v, dv) = if x[1] > self.d {
            let e = self.c * (-self.k3 * x[1]).exp();
            (e, -self.k3 * e)
        } else if x[1] >= -self.d {
            ((self.k2 * x[1]).cos(), -self.k2 * (self.k2 * x[1]).sin())
        } else {
            let e = self.c * (self.k3 * x[1]).exp();
            (e, self.k3 * e)
        };
        [osc * i * self.k1 * v, osc * dv]
    }
}
