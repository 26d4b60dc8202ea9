//! Death process, defective birth process and their terminal values.
//!
//! The death process starts with `n` individuals dying at rate `lambda`
//! each; the defective birth process starts with one individual reproducing
//! at rate `alpha` whose descendants reproduce at rate 1. Merging their jump
//! streams in time order (death = growth of red, birth = loss of red)
//! replays the embedded jump chain of the population process, with the
//! factor `r` removed from the clock.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::chain::{EventKind, FixationResult, Jump, PopulationState, Trajectory};
use crate::error::{Error, Result};
use crate::rng::{exponential, standard_exp, uniform_open01};
use crate::scalar::Real;

/// Default horizon for [`sample_terminal_gamma_process`].
pub const DEFAULT_PROCESS_HORIZON: f64 = 12.0;
/// Default truncation for [`sample_limit_sum`].
pub const DEFAULT_LIMIT_SUM_TRUNCATION: f64 = 40.0;
/// Default cap on the expected population of [`simulate_birth_count`].
pub const DEFAULT_POPULATION_CAP: f64 = 1e7;

/// Ordered death times `delta(1) < ... < delta(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeathTimes<T> {
    pub delta: Vec<T>,
}

/// Ordered birth times and, per birth, whether the defective progenitor
/// produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct BirthTimes<T> {
    pub beta: Vec<T>,
    pub defective: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TerminalKind {
    /// Terminal value of the reversed death process, Exp(1).
    ExpUnit,
    /// Terminal value of the defective birth process, Gamma(alpha, 1).
    GammaAlpha,
    /// The Poisson-weighted sum `sum_i exp(-T_i) E_i`.
    LimitSum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TerminalSample<T> {
    pub value: T,
    pub kind: TerminalKind,
}

fn check_positive<T: Real>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive and finite, got {x:?}")))
    }
}

/// Spacings `delta(i+1) - delta(i) ~ Exp(lambda (n - i))`.
pub fn simulate_death_times<T: Real, R: RngCore + ?Sized>(
    n: u64,
    lambda: T,
    rng: &mut R,
) -> Result<DeathTimes<T>> {
    if n == 0 {
        return Err(Error::InvalidParams("death process needs n >= 1".into()));
    }
    check_positive("lambda", lambda)?;
    let mut t = T::zero();
    let delta = (0..n)
        .map(|i| {
            t = t + exponential(rng, lambda * T::from_count(n - i));
            t
        })
        .collect();
    Ok(DeathTimes { delta })
}

/// First `k` births: spacing `Exp(i + alpha)` after the `i`-th birth, each
/// birth attributed to the defective progenitor with probability
/// `alpha / (i + alpha)`. Per birth the spacing is drawn before the flag.
pub fn simulate_birth_times<T: Real, R: RngCore + ?Sized>(
    alpha: T,
    k: u64,
    rng: &mut R,
) -> Result<BirthTimes<T>> {
    check_positive("alpha", alpha)?;
    if k == 0 {
        return Err(Error::InvalidParams("need at least one birth".into()));
    }
    let mut t = T::zero();
    let mut beta = Vec::with_capacity(k as usize);
    let mut defective = Vec::with_capacity(k as usize);
    for i in 0..k {
        let rate = T::from_count(i) + alpha;
        t = t + exponential(rng, rate);
        beta.push(t);
        defective.push(T::lit(uniform_open01(rng)) * rate < alpha);
    }
    Ok(BirthTimes { beta, defective })
}

/// Replays chase-escape with conversion on `K_{n+1}` from independent death
/// and birth streams.
///
/// Fixation happens at the first birth `i` with `beta(i) <= delta(i)`,
/// taking `delta(n + 1) = +inf`; ties go to the birth. Then
/// `W = n - (i - 1)`, `C` counts defective births among the first `i`, and
/// the fixation time is `beta(i)` on the birth/death clock.
pub fn coupled_fixation<T: Real, R: RngCore + ?Sized>(
    n: u64,
    lambda: T,
    alpha: T,
    rng: &mut R,
) -> Result<FixationResult<T>> {
    let deaths = simulate_death_times(n, lambda, rng)?;
    let births = simulate_birth_times(alpha, n + 1, rng)?;
    let first = births
        .beta
        .iter()
        .enumerate()
        .position(|(i, b)| deaths.delta.get(i).is_none_or(|d| b <= d))
        .expect("birth n + 1 always precedes the missing death n + 1");
    let births_used = first as u64 + 1;
    let conversions = births.defective[..=first].iter().filter(|&&d| d).count() as u64;
    Ok(FixationResult {
        white_survivors: n - first as u64,
        blue_total: births_used,
        conversions,
        fixation_time: births.beta[first],
        jump_count: 2 * births_used - 1,
    })
}

/// The jump sequence replayed by [`coupled_fixation`], on the birth/death
/// clock: deaths before fixation become growth events, births become chase
/// or (when defective) conversion events. Uses the generator exactly as
/// [`coupled_fixation`] does.
pub fn coupled_trajectory<T: Real, R: RngCore + ?Sized>(
    n: u64,
    lambda: T,
    alpha: T,
    rng: &mut R,
) -> Result<Trajectory<T>> {
    let deaths = simulate_death_times(n, lambda, rng)?;
    let births = simulate_birth_times(alpha, n + 1, rng)?;
    let mut state = PopulationState::new(1, 0, n);
    let initial = state;
    let mut jumps = Vec::new();
    let (mut i, mut j) = (0, 0);
    while !state.is_fixated() {
        // Ties go to the birth, matching `coupled_fixation`.
        let event = match deaths.delta.get(i) {
            Some(&d) if d < births.beta[j] => {
                i += 1;
                (d, EventKind::Grow)
            }
            _ => {
                let kind = if births.defective[j] { EventKind::Convert } else { EventKind::Chase };
                j += 1;
                (births.beta[j - 1], kind)
            }
        };
        state = state.apply(event.1);
        jumps.push(Jump { time: event.0, state, event: event.1 });
    }
    Ok(Trajectory { initial, jumps })
}

pub fn sample_terminal_exp<T: Real, R: RngCore + ?Sized>(rng: &mut R) -> TerminalSample<T> {
    TerminalSample { value: T::lit(standard_exp(rng)), kind: TerminalKind::ExpUnit }
}

/// Gamma(alpha, 1) by Marsaglia and Tsang's squeeze method; shapes below 1
/// use `G(alpha + 1) * U^(1/alpha)`.
pub fn sample_gamma<T: Real, R: RngCore + ?Sized>(alpha: T, rng: &mut R) -> Result<T> {
    check_positive("alpha", alpha)?;
    let one = T::one();
    if alpha < one {
        let boosted = sample_gamma(alpha + one, rng)?;
        let u = T::lit(uniform_open01(rng));
        return Ok(boosted * u.powf(one / alpha));
    }
    let d = alpha - T::lit(1.0 / 3.0);
    let c = one / (T::lit(9.0) * d).sqrt();
    loop {
        let x = T::lit(StandardNormal.sample(rng));
        let v = one + c * x;
        if v <= T::zero() {
            continue;
        }
        let v = v * v * v;
        let u = T::lit(uniform_open01(rng));
        let x2 = x * x;
        if u < one - T::lit(0.0331) * x2 * x2 {
            return Ok(d * v);
        }
        if u.ln() < T::lit(0.5) * x2 + d * (one - v + v.ln()) {
            return Ok(d * v);
        }
    }
}

pub fn sample_terminal_gamma_direct<T: Real, R: RngCore + ?Sized>(
    alpha: T,
    rng: &mut R,
) -> Result<TerminalSample<T>> {
    Ok(TerminalSample { value: sample_gamma(alpha, rng)?, kind: TerminalKind::GammaAlpha })
}

/// Geometric count on {1, 2, ...} with success probability `p`: the size of
/// a rate-1 Yule process started from one individual after time `-ln p`.
fn yule_size<T: Real, R: RngCore + ?Sized>(p: T, rng: &mut R) -> T {
    if p >= T::one() {
        return T::one();
    }
    let u = T::lit(uniform_open01(rng));
    T::one() + (u.ln() / (-p).ln_1p()).floor()
}

/// Size of the defective birth process at time `t`, sampled exactly.
///
/// The progenitor's own births form a rate-`alpha` Poisson process; the
/// child born at time `s` founds a rate-1 Yule family whose size at `t` is
/// geometric with parameter `exp(-(t - s))`. The result counts the
/// progenitor plus all families.
pub fn sample_birth_count<T: Real, R: RngCore + ?Sized>(alpha: T, t: T, rng: &mut R) -> Result<T> {
    check_positive("alpha", alpha)?;
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidParams(format!("horizon must be non-negative, got {t:?}")));
    }
    let mut count = T::one();
    let mut s = exponential(rng, alpha);
    while s <= t {
        count = count + yule_size((s - t).exp(), rng);
        s = s + exponential(rng, alpha);
    }
    Ok(count)
}

/// Size of the defective birth process at time `t` by simulating every
/// jump: from `c` individuals the next birth comes after `Exp(c - 1 + alpha)`.
/// Work is proportional to the population, so the expected population
/// `1 + alpha (e^t - 1)` must not exceed `cap`.
pub fn simulate_birth_count<T: Real, R: RngCore + ?Sized>(
    alpha: T,
    t: T,
    cap: f64,
    rng: &mut R,
) -> Result<u64> {
    check_positive("alpha", alpha)?;
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidParams(format!("horizon must be non-negative, got {t:?}")));
    }
    let expected = 1.0 + alpha.to_f64_lossy() * t.to_f64_lossy().exp_m1();
    if expected > cap {
        return Err(Error::ResourceCap(format!(
            "expected population {expected:.3e} exceeds cap {cap:.3e}"
        )));
    }
    let mut count: u64 = 1;
    let mut clock = T::zero();
    loop {
        clock = clock + exponential(rng, T::from_count(count - 1) + alpha);
        if clock > t {
            return Ok(count);
        }
        count += 1;
    }
}

/// `e^{-t} B_t` for the defective birth process at horizon `t`.
pub fn sample_terminal_gamma_process<T: Real, R: RngCore + ?Sized>(
    alpha: T,
    t_horizon: T,
    rng: &mut R,
) -> Result<TerminalSample<T>> {
    let count = sample_birth_count(alpha, t_horizon, rng)?;
    Ok(TerminalSample { value: (-t_horizon).exp() * count, kind: TerminalKind::GammaAlpha })
}

/// `sum_i exp(-T_i) E_i` over the points `T_i` of a rate-`alpha` Poisson
/// process on `[0, truncation]` with independent Exp(1) marks `E_i`.
/// Truncation removes at most `alpha e^{-truncation}` in expectation.
pub fn sample_limit_sum<T: Real, R: RngCore + ?Sized>(
    alpha: T,
    truncation: T,
    rng: &mut R,
) -> Result<TerminalSample<T>> {
    check_positive("alpha", alpha)?;
    check_positive("truncation", truncation)?;
    let mut sum = T::zero();
    let mut point = exponential(rng, alpha);
    while point <= truncation {
        sum = sum + (-point).exp() * T::lit(standard_exp(rng));
        point = point + exponential(rng, alpha);
    }
    Ok(TerminalSample { value: sum, kind: TerminalKind::LimitSum })
}
