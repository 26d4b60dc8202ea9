//! Limits at large `n`, the Gamma/exponential comparison identities with
//! independent quadrature checks, the exact jump-chain oracle and
//! statistical helpers.

mod dp;
pub mod quadrature;
pub mod special;
pub mod stats;

pub use dp::{exact_distribution_w, ExactDistribution, DP_MAX_N};

use rand::RngCore;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::birth_death::sample_gamma;
use crate::error::{Error, Result};
use crate::rng::standard_exp;
use crate::scalar::Real;
use quadrature::{integrate, integrate_half_line, DEFAULT_MAX_INTERVALS};
use special::ln_gamma;

/// Absolute error target of the quadrature routines.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LimitRegime {
    Subcritical,
    Critical,
    Supercritical,
}

impl LimitRegime {
    /// Exact comparison of `lambda` with 1; there is no tolerance band.
    pub fn classify<T: Real>(lambda: T) -> Self {
        if lambda < T::one() {
            LimitRegime::Subcritical
        } else if lambda == T::one() {
            LimitRegime::Critical
        } else {
            LimitRegime::Supercritical
        }
    }
}

/// Limit of `P(W = 0)`: 0 below criticality, `2^-alpha` at `lambda = 1`, 1 above.
pub fn extinction_limit<T: Real>(lambda: T, alpha: T) -> T {
    match LimitRegime::classify(lambda) {
        LimitRegime::Subcritical => T::zero(),
        LimitRegime::Critical => prob_gamma_less_exp_closed(alpha),
        LimitRegime::Supercritical => T::one(),
    }
}

/// Limit of `E[W]` at `lambda = 1`.
pub fn expected_white_limit<T: Real>(alpha: T) -> T {
    T::lit(2.0) * alpha
}

/// Limit in probability of `C / ln n` at `lambda = 1`.
pub fn conversion_growth_limit<T: Real>(alpha: T) -> T {
    alpha
}

/// `P(G < E)` for independent `G ~ Gamma(alpha, 1)`, `E ~ Exp(1)`: `2^-alpha`.
pub fn prob_gamma_less_exp_closed<T: Real>(alpha: T) -> T {
    T::lit(2.0).powf(-alpha)
}

/// `E[(G - E) 1{G > E}] = alpha - (1 - 2^-alpha)`.
pub fn expected_excess_closed<T: Real>(alpha: T) -> T {
    // 2^-alpha - 1 = expm1(-alpha ln 2) keeps accuracy as alpha -> 0.
    alpha + (-alpha * T::lit(std::f64::consts::LN_2)).exp_m1()
}

/// `E[Z] = P(G > E) + E[(G - E) 1{G > E}]`, assembled from the two closed
/// forms.
pub fn expected_z<T: Real>(alpha: T) -> T {
    (T::one() - prob_gamma_less_exp_closed(alpha)) + expected_excess_closed(alpha)
}

/// `∫_lo^hi h(x) f(x) dx` for the Gamma(alpha, 1) density `f`.
///
/// For `alpha < 1` the substitution `x = y^(1/alpha)` absorbs the `x^(alpha-1)`
/// singularity into the Jacobian, leaving the smooth integrand
/// `exp(-y^(1/alpha)) h(y^(1/alpha)) / Γ(alpha + 1)`.
fn gamma_density_integral<T, H>(alpha: T, upper: Option<T>, mut h: H) -> Result<T>
where
    T: Real,
    H: FnMut(T) -> T,
{
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha:?}")));
    }
    let tol = T::lit(QUADRATURE_TOL).max(T::epsilon() * T::lit(100.0));
    let one = T::one();
    let power = if alpha < one { one / alpha } else { one };
    let log_norm = ln_gamma(alpha);
    let integrand = |y: T| {
        if y <= T::zero() {
            return T::zero();
        }
        let x = y.powf(power);
        let hx = h(x);
        if hx == T::zero() {
            return T::zero();
        }
        // Density times Jacobian: power * y^(power*alpha - 1) * e^-x / Γ(alpha).
        let log_w = power.ln() + (power * alpha - one) * y.ln() - x - log_norm;
        log_w.exp() * hx
    };
    let q = match upper {
        Some(hi) => integrate(integrand, T::zero(), hi.powf(one / power), tol, DEFAULT_MAX_INTERVALS)?,
        None => integrate_half_line(integrand, tol)?,
    };
    Ok(q.value)
}

/// `(1/Γ(alpha)) ∫_0^∞ x^(alpha-1) e^(-2x) dx` by adaptive quadrature.
pub fn prob_gamma_less_exp_quadrature<T: Real>(alpha: T) -> Result<T> {
    gamma_density_integral(alpha, None, |x: T| (-x).exp())
}

/// `∫_0^∞ (x - 1 + e^-x) f(x) dx` for the Gamma(alpha, 1) density `f`.
pub fn expected_excess_quadrature<T: Real>(alpha: T) -> Result<T> {
    gamma_density_integral(alpha, None, |x: T| x + (-x).exp_m1())
}

/// Gamma(alpha, 1) CDF at `x` by quadrature of the density.
pub fn gamma_cdf_quadrature<T: Real>(alpha: T, x: T) -> Result<T> {
    if x <= T::zero() {
        return Ok(T::zero());
    }
    gamma_density_integral(alpha, Some(x), |_| T::one())
}

/// One draw of `Z = [1 + Poisson(G - E)] 1{G > E}`.
pub fn sample_z<R: RngCore + ?Sized>(alpha: f64, rng: &mut R) -> Result<u64> {
    let g = sample_gamma(alpha, rng)?;
    let e = standard_exp(rng);
    if g <= e {
        return Ok(0);
    }
    let poisson = Poisson::new(g - e)
        .map_err(|err| Error::InvalidInput(format!("poisson mean {}: {err}", g - e)))?;
    Ok(1 + poisson.sample(rng) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn regimes_and_limits() {
        assert_eq!(LimitRegime::classify(0.999_999), LimitRegime::Subcritical);
        assert_eq!(LimitRegime::classify(1.0), LimitRegime::Critical);
        assert_eq!(LimitRegime::classify(1.000_001), LimitRegime::Supercritical);
        assert_eq!(extinction_limit(0.5, 3.0), 0.0);
        assert_eq!(extinction_limit(1.0, 1.0), 0.5);
        assert_eq!(extinction_limit(1.0, 3.0), 0.125);
        assert_eq!(extinction_limit(2.0, 3.0), 1.0);
        assert_eq!(expected_white_limit(1.0), 2.0);
        assert_eq!(expected_white_limit(3.0), 6.0);
        assert_eq!(expected_white_limit(0.5), 1.0);
        assert_eq!(conversion_growth_limit(4.0), 4.0);
        assert_eq!(conversion_growth_limit(0.1), 0.1);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(prob_gamma_less_exp_closed(1.0), 0.5);
        assert_eq!(prob_gamma_less_exp_closed(2.0), 0.25);
        assert!((prob_gamma_less_exp_closed(0.5) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((expected_excess_closed(1.0f64) - 0.5).abs() < 1e-15);
        assert!((expected_excess_closed(2.0f64) - 1.25).abs() < 1e-15);
        assert!(expected_excess_closed(1e-12_f64).abs() < 1e-12);
        for a in [0.1f64, 0.3, 1.0, 2.0, 2.5, 4.0, 8.0] {
            assert!((expected_z(a) - a).abs() < 1e-14);
        }
    }

    #[test]
    fn quadrature_matches_known_values() {
        assert!((prob_gamma_less_exp_quadrature(1.0f64).unwrap() - 0.5).abs() < 1e-10);
        assert!((prob_gamma_less_exp_quadrature(2.0f64).unwrap() - 0.25).abs() < 1e-10);
        assert!((prob_gamma_less_exp_quadrature(3.7f64).unwrap() - 2f64.powf(-3.7)).abs() < 1e-8);
        assert!((expected_excess_quadrature(1.0f64).unwrap() - 0.5).abs() < 1e-10);
        assert!((expected_excess_quadrature(2.0f64).unwrap() - 1.25).abs() < 1e-10);
        let a = 0.3f64;
        assert!((expected_excess_quadrature(a).unwrap() - (a - 1.0 + 2f64.powf(-a))).abs() < 1e-8);
        assert!(prob_gamma_less_exp_quadrature(0.0f64).is_err());
    }

    #[test]
    fn gamma_cdf_two_routes_agree() {
        for alpha in [0.1f64, 0.5, 1.0, 1.5, 3.0, 8.0] {
            for x in [0.01, 0.3, 1.0, 2.5, 6.0, 15.0] {
                let series = special::gamma_cdf(alpha, x).unwrap();
                let quad = gamma_cdf_quadrature(alpha, x).unwrap();
                assert!((series - quad).abs() < 1e-9, "alpha={alpha} x={x}: {series} vs {quad}");
            }
        }
    }

    #[test]
    fn single_precision_closed_forms() {
        assert_eq!(prob_gamma_less_exp_closed(2.0f32), 0.25f32);
        assert!((prob_gamma_less_exp_quadrature(2.0f32).unwrap() - 0.25).abs() < 1e-4);
    }

    #[test]
    fn z_is_zero_or_at_least_one() {
        let mut rng = StreamRng::new(1);
        let draws: Vec<u64> = (0..10_000).map(|_| sample_z(2.0, &mut rng).unwrap()).collect();
        let zeros = draws.iter().filter(|&&z| z == 0).count() as f64 / draws.len() as f64;
        // P(Z = 0) = P(G <= E) = 1/4
        assert!((zeros - 0.25).abs() < 4.0 * (0.1875f64 / 10_000.0).sqrt());
    }
}
