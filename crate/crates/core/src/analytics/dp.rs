use serde::Serialize;

use crate::chain::{initial_state, Params};
use crate::error::{Error, Result};
use crate::scalar::Field;

/// Largest `n` accepted by [`exact_distribution_w`]; the work is O(n^2).
pub const DP_MAX_N: u64 = 5000;

/// Exact law of the number of white survivors at fixation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactDistribution<T> {
    /// `probabilities[k] = P(W = k)` for `k = 0..=n`.
    pub probabilities: Vec<T>,
    pub expected_w: T,
    /// Expected number of conversions.
    pub expected_c: T,
    pub extinction_probability: T,
    /// Number of jump layers the propagation visited.
    pub layers: u64,
}

/// Forward propagation of probability mass through the embedded jump chain.
///
/// States `(r, b)` with `r >= 1` are grouped by the layer `r + 2b`, which
/// grows by one at every jump, so mass moves strictly from one layer to the
/// next. Mass leaving through `r = 0` is recorded against the white count at
/// that moment. Expected conversions accumulate `mass * alpha / (lambda w + b + alpha)`
/// over every visited state.
pub fn exact_distribution_w<T: Field>(params: &Params<T>) -> Result<ExactDistribution<T>> {
    let n = params.n();
    if n > DP_MAX_N {
        return Err(Error::TooLarge { n, cap: DP_MAX_N });
    }
    let total = params.total_vertices();
    let lambda = params.lambda().clone();
    let alpha = params.alpha().clone();
    let start = initial_state(params);

    let width = total as usize + 1;
    let mut current = vec![T::zero(); width];
    let mut next = vec![T::zero(); width];
    let mut probabilities = vec![T::zero(); n as usize + 1];
    let mut expected_c = T::zero();

    current[start.b as usize] = T::one();
    let (mut lo, mut hi) = (start.b, start.b);
    let mut layer = start.layer();
    let mut layers = 0u64;
    loop {
        let mut next_lo = u64::MAX;
        let mut next_hi = 0;
        for b in lo..=hi {
            let mass = std::mem::replace(&mut current[b as usize], T::zero());
            if mass == T::zero() {
                continue;
            }
            let r = layer - 2 * b;
            let w = total - r - b;
            let grow = lambda.clone() * T::from_count(w);
            let chase = T::from_count(b);
            let denom = grow.clone() + chase.clone() + alpha.clone();
            if denom == T::zero() {
                return Err(Error::InvalidParams("state with zero total rate reached".into()));
            }
            expected_c = expected_c + mass.clone() * alpha.clone() / denom.clone();
            if w > 0 {
                let slot = &mut next[b as usize];
                *slot = slot.clone() + mass.clone() * grow / denom.clone();
                next_lo = next_lo.min(b);
                next_hi = next_hi.max(b);
            }
            let decrease = mass * (chase + alpha.clone()) / denom;
            if r == 1 {
                let slot = &mut probabilities[w as usize];
                *slot = slot.clone() + decrease;
            } else {
                let slot = &mut next[b as usize + 1];
                *slot = slot.clone() + decrease;
                next_lo = next_lo.min(b + 1);
                next_hi = next_hi.max(b + 1);
            }
        }
        layers += 1;
        if next_lo > next_hi {
            break;
        }
        std::mem::swap(&mut current, &mut next);
        lo = next_lo;
        hi = next_hi;
        layer += 1;
        if layers > 2 * total {
            return Err(Error::InvalidInput("jump chain exceeded 2(n+1) layers".into()));
        }
    }

    let expected_w = probabilities
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, p)| acc + T::from_count(k as u64) * p.clone());
    Ok(ExactDistribution {
        extinction_probability: probabilities[0].clone(),
        probabilities,
        expected_w,
        expected_c,
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{EventKind, InitMode, PopulationState};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    type Q = BigRational;

    fn q(num: i64, den: i64) -> Q {
        Q::new(BigInt::from(num), BigInt::from(den))
    }

    /// Recursive enumeration of the jump tree, independent of the layered
    /// propagation. Returns (distribution of W, E[C]).
    fn enumerate(state: PopulationState, lambda: &Q, alpha: &Q, n: usize) -> (Vec<Q>, Q) {
        let mut dist = vec![Q::zero(); n + 1];
        if state.r == 0 {
            dist[state.w as usize] = Q::one();
            return (dist, Q::zero());
        }
        let grow = lambda * Q::from_integer(BigInt::from(state.w));
        let chase = Q::from_integer(BigInt::from(state.b));
        let denom = &grow + &chase + alpha;
        let mut ec = alpha / &denom;
        let mut branches = vec![(EventKind::Chase, &chase / &denom), (EventKind::Convert, alpha / &denom)];
        if state.w > 0 {
            branches.push((EventKind::Grow, &grow / &denom));
        }
        for (event, p) in branches {
            if p.is_zero() {
                continue;
            }
            let (d, c) = enumerate(state.apply(event), lambda, alpha, n);
            for (slot, x) in dist.iter_mut().zip(d) {
                *slot += &p * x;
            }
            ec += &p * c;
        }
        (dist, ec)
    }

    #[test]
    fn two_vertex_hand_enumeration() {
        let params = Params::standard(1, q(1, 1), q(1, 1)).unwrap();
        let d = exact_distribution_w(&params).unwrap();
        assert_eq!(d.probabilities, vec![q(1, 2), q(1, 2)]);
        assert_eq!(d.expected_w, q(1, 2));
        assert_eq!(d.expected_c, q(5, 4));
        assert_eq!(d.extinction_probability, q(1, 2));
    }

    #[test]
    fn rational_dp_matches_tree_enumeration() {
        for (n, lambda, alpha, mode) in [
            (2, q(1, 1), q(1, 1), InitMode::Standard),
            (4, q(3, 2), q(1, 3), InitMode::Standard),
            (5, q(1, 1), q(2, 1), InitMode::Standard),
            (5, q(1, 2), q(0, 1), InitMode::Kortchemski),
            (4, q(2, 1), q(7, 5), InitMode::Kortchemski),
        ] {
            let params = Params::new(n, lambda.clone(), alpha.clone(), mode).unwrap();
            let dp = exact_distribution_w(&params).unwrap();
            let (dist, ec) = enumerate(initial_state(&params), &lambda, &alpha, n as usize);
            assert_eq!(dp.probabilities, dist, "n={n} {mode:?}");
            assert_eq!(dp.expected_c, ec);
            assert_eq!(dp.probabilities.iter().cloned().sum::<Q>(), Q::one());
        }
    }

    #[test]
    fn instant_conversion_exact_in_rationals() {
        for (n, l, a) in [(10u64, q(1, 1), q(1, 1)), (30, q(2, 1), q(1, 2)), (17, q(5, 3), q(4, 1))] {
            let params = Params::standard(n, l.clone(), a.clone()).unwrap();
            let d = exact_distribution_w(&params).unwrap();
            let expected = &a / (&l * Q::from_integer(BigInt::from(n)) + &a);
            assert_eq!(d.probabilities[n as usize], expected);
        }
    }

    #[test]
    fn conversion_one_equals_kortchemski_exactly() {
        let std = exact_distribution_w(&Params::standard(12, q(1, 1), q(1, 1)).unwrap()).unwrap();
        let kor = exact_distribution_w(&Params::kortchemski(12, q(1, 1), q(0, 1)).unwrap()).unwrap();
        assert_eq!(std.probabilities, kor.probabilities);
    }

    #[test]
    fn float_normalization_and_layers() {
        for (n, l, a) in [(50u64, 1.0, 2.0), (200, 0.7, 0.3), (333, 1.9, 5.0)] {
            let d = exact_distribution_w(&Params::standard(n, l, a).unwrap()).unwrap();
            let s: f64 = d.probabilities.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(d.layers <= 2 * (n + 1));
            assert_eq!(d.extinction_probability, d.probabilities[0]);
        }
    }

    #[test]
    fn size_cap() {
        let p = Params::standard(DP_MAX_N + 1, 1.0, 1.0).unwrap();
        assert!(matches!(exact_distribution_w(&p), Err(Error::TooLarge { .. })));
    }
}
