//! Log-gamma, regularized incomplete gamma and the normal distribution.

use crate::error::{Error, Result};
use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, nine terms; about 15 digits).
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // Reflection: Γ(x) Γ(1 - x) = π / sin(π x).
        let pi = T::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_count(i as u64));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    T::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

const MAX_ITER: usize = 100_000;

/// Returns `(P(a, x), Q(a, x))`, the regularized lower and upper incomplete
/// gamma functions. Series for `x < a + 1`, Lentz continued fraction
/// otherwise.
pub fn gamma_pq<T: Real>(a: T, x: T) -> Result<(T, T)> {
    let zero = T::zero();
    let one = T::one();
    if !(a > zero) || !(x >= zero) {
        return Err(Error::InvalidInput(format!("incomplete gamma needs a > 0, x >= 0; got a={a:?}, x={x:?}")));
    }
    if x == zero {
        return Ok((zero, one));
    }
    if x.is_infinite() {
        return Ok((one, zero));
    }
    let prefactor = (a * x.ln() - x - ln_gamma(a)).exp();
    let eps = T::epsilon();
    if x < a + one {
        let mut ap = a;
        let mut term = one / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap = ap + one;
            term = term * x / ap;
            sum = sum + term;
            if term.abs() < sum.abs() * eps {
                let p = (prefactor * sum).min(one);
                return Ok((p, one - p));
            }
        }
        Err(Error::Convergence("incomplete gamma series"))
    } else {
        let tiny = T::min_positive_value() / eps;
        let mut b = x + one - a;
        let mut c = one / tiny;
        let mut d = one / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let fi = T::from_count(i as u64);
            let an = -fi * (fi - a);
            b = b + T::lit(2.0);
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = one / d;
            let delta = d * c;
            h = h * delta;
            if (delta - one).abs() < eps {
                let q = (prefactor * h).min(one);
                return Ok((one - q, q));
            }
        }
        Err(Error::Convergence("incomplete gamma continued fraction"))
    }
}

/// CDF of Gamma(shape, 1).
pub fn gamma_cdf<T: Real>(shape: T, x: T) -> Result<T> {
    if x <= T::zero() {
        return Ok(T::zero());
    }
    Ok(gamma_pq(shape, x)?.0)
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom.
pub fn chi_square_sf(statistic: f64, dof: u64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::InvalidInput("chi-square needs at least one degree of freedom".into()));
    }
    if statistic <= 0.0 {
        return Ok(1.0);
    }
    Ok(gamma_pq(dof as f64 / 2.0, statistic / 2.0)?.1)
}

/// Standard normal CDF through `P(1/2, z^2/2)`.
pub fn normal_cdf(z: f64) -> f64 {
    if z == 0.0 {
        return 0.5;
    }
    let (p, q) = gamma_pq(0.5, 0.5 * z * z).expect("valid arguments");
    if z > 0.0 {
        0.5 + 0.5 * p
    } else {
        0.5 * q
    }
}

/// Standard normal quantile by bisection on [`normal_cdf`].
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("normal quantile needs 0 < p < 1, got {p}")));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
