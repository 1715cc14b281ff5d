//! Quasi-periodic Fourier ladder and Dirichlet-to-Neumann symbols.
//!
//! A quasi-periodic field with parameter `alpha_0` expands on the top and
//! bottom boundaries into modes `exp(i alpha_n x1)` with
//! `alpha_n = alpha_0 + 2 pi n / L`. The DtN operators are diagonal in this
//! basis with symbols `i beta_n`, where `beta_n = sqrt(k^2 eps - alpha_n^2)`
//! taken with nonnegative real and imaginary parts.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::ProblemConfig;
use crate::scalar::Real;
use crate::Cplx;

/// Fourier exponents and DtN symbols for modes `|n| <= m`.
#[derive(Debug, Clone)]
pub struct SpectralLadder<R: Real> {
    /// Truncation order M: modes n = -M..=M are retained.
    pub m: usize,
    pub alpha0: R,
    pub period: R,
    /// alpha_n for n = -M..=M (index n + M).
    pub alphas: Vec<R>,
    /// beta_n for the upper half-space, same indexing.
    pub beta_plus: Vec<Cplx<R>>,
    /// beta_n for the lower half-space, same indexing.
    pub beta_minus: Vec<Cplx<R>>,
}

impl<R: Real> SpectralLadder<R> {
    /// Index of mode n into the coefficient vectors.
    pub fn idx(&self, n: isize) -> usize {
        (n + self.m as isize) as usize
    }

    /// Iterates over (n, alpha_n).
    pub fn modes(&self) -> impl Iterator<Item = (isize, R)> + '_ {
        let m = self.m as isize;
        (-m..=m).map(move |n| (n, self.alphas[self.idx(n)]))
    }

    /// Number of retained modes, 2M + 1.
    pub fn len(&self) -> usize {
        2 * self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// DtN symbol beta = sqrt(k^2 eps - alpha^2), principal branch.
///
/// For real nonnegative arguments this is the positive real root
/// (propagative mode); for negative arguments the root `i sqrt(|.|)`
/// (evanescent mode); for complex eps the principal square root, which has
/// nonnegative real part and, for arguments in the upper half-plane,
/// nonnegative imaginary part.
pub fn dtn_symbol<R: Real>(k: R, eps: Cplx<R>, alpha: R) -> Cplx<R> {
    (eps * k * k - Complex::new(alpha * alpha, R::zero())).sqrt()
}

/// Builds the spectral ladder for truncation order `m`.
pub fn build_ladder<R: Real>(config: &ProblemConfig<R>, m: usize) -> SpectralLadder<R> {
    let alpha0 = config.alpha0();
    let two_pi_over_l = R::of(2.0) * R::PI() / config.period;
    let eps_plus = Complex::new(config.eps_plus, R::zero());
    let mi = m as isize;
    let mut alphas = Vec::with_capacity(2 * m + 1);
    let mut beta_plus = Vec::with_capacity(2 * m + 1);
    let mut beta_minus = Vec::with_capacity(2 * m + 1);
    for n in -mi..=mi {
        let alpha = alpha0 + two_pi_over_l * R::of(n as f64);
        alphas.push(alpha);
        beta_plus.push(dtn_symbol(config.k, eps_plus, alpha));
        beta_minus.push(dtn_symbol(config.k, config.eps_minus, alpha));
    }
    SpectralLadder { m, alpha0, period: config.period, alphas, beta_plus, beta_minus }
}

/// Smallest truncation order capturing all propagative modes:
/// `M* = (L / 2 pi) (max(kappa_plus, kappa_minus) + |alpha_0|)`.
///
/// Only defined for real permittivity below the grating.
pub fn m_star<R: Real>(config: &ProblemConfig<R>) -> Result<R> {
    if config.eps_minus.im != R::zero() {
        return Err(Error::NotApplicable(
            "M* requires a real permittivity in the lower half-space".into(),
        ));
    }
    let kappa_max = config.kappa_plus().max(config.kappa_minus().re);
    Ok(config.period / (R::of(2.0) * R::PI()) * (kappa_max + config.alpha0().abs()))
}

/// Distance of the configuration to a Rayleigh-Wood anomaly:
/// the minimum of `|beta_n|` over the upper (`sign > 0`) or lower
/// (`sign < 0`) symbols, scanned over `|n| <= 4 ceil(M*)` (computed with
/// the real part of the lower wavenumber).
pub fn rayleigh_wood_distance<R: Real>(config: &ProblemConfig<R>, upper: bool) -> R {
    let kappa_max = config.kappa_plus().max(config.kappa_minus().re);
    let m_scan = (config.period / (R::of(2.0) * R::PI())
        * (kappa_max + config.alpha0().abs()))
    .ceil()
    .to_f64_lossy() as usize
        * 4;
    let ladder = build_ladder(config, m_scan.max(1));
    let betas = if upper { &ladder.beta_plus } else { &ladder.beta_minus };
    betas
        .iter()
        .map(|b| b.norm())
        .fold(R::infinity(), R::min)
}

/// A-priori bound on the DtN truncation error decay,
/// `(2 pi m / L - |alpha_0|)^(-t)`, defined once the truncation order
/// exceeds the propagative range.
pub fn truncation_error_bound<R: Real>(
    m: usize,
    t: R,
    config: &ProblemConfig<R>,
) -> Result<R> {
    let gap = R::of(2.0) * R::PI() * R::of(m as f64) / config.period - config.alpha0().abs();
    if gap <= R::zero() {
        return Err(Error::Domain(
            "truncation bound requires 2 pi m / L > |alpha_0|".into(),
        ));
    }
    Ok(gap.powf(-t))
}

/// Vertical wavenumber of the incident wave, `beta_0^+ = -kappa_plus sin(theta)`.
pub fn incident_beta0<R: Real>(config: &ProblemConfig<R>) -> R {
    -config.kappa_plus() * config.theta.sin()
}

/// Fourier coefficients of the incident trace on the top boundary:
/// only mode 0 is present, with value `exp(-i beta_0^+ H)`.
pub fn incident_trace_coeffs<R: Real>(
    config: &ProblemConfig<R>,
    ladder: &SpectralLadder<R>,
) -> Vec<Cplx<R>> {
    let beta0 = incident_beta0(config);
    let mut coeffs = vec![Complex::new(R::zero(), R::zero()); ladder.len()];
    coeffs[ladder.idx(0)] =
        Complex::new(R::zero(), -beta0 * config.half_height).exp();
    coeffs
}
