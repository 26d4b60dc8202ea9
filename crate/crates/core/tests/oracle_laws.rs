//! Monte Carlo laws of each engine against the exact dynamic program.

use chase_escape::analytics::exact_distribution_w;
use chase_escape::analytics::stats::chi_square_gof;
use chase_escape::harness::{run_trials, Engine, Estimator, ExperimentConfig};
use chase_escape::{InitMode, Params64};

struct Sample {
    histogram: Vec<u64>,
    mean_c: f64,
    se_c: f64,
    trials: u64,
}

fn sample(engine: Engine, params: &Params64, trials: u64, seed: u64) -> Sample {
    let config = ExperimentConfig::new(params.clone(), trials, seed, Estimator::ExpectedW, engine).unwrap();
    let results = run_trials(&config).unwrap();
    let mut histogram = vec![0u64; params.n() as usize + 1];
    for r in &results {
        histogram[r.white_survivors as usize] += 1;
    }
    let cs: Vec<f64> = results.iter().map(|r| r.conversions as f64).collect();
    let mean_c = cs.iter().sum::<f64>() / trials as f64;
    let var = cs.iter().map(|c| (c - mean_c).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Sample { histogram, mean_c, se_c: (var / trials as f64).sqrt(), trials }
}

fn assert_matches_dp(engine: Engine, params: Params64, trials: u64, seed: u64) {
    let exact = exact_distribution_w(&params).unwrap();
    let s = sample(engine, &params, trials, seed);
    // Componentwise with a Bonferroni-sized band; bins too thin for the normal
    // approximation are left to the pooled chi-square below.
    for (k, (&count, &p)) in s.histogram.iter().zip(&exact.probabilities).enumerate() {
        if p * (s.trials as f64) < 5.0 {
            continue;
        }
        let phat = count as f64 / s.trials as f64;
        let se = (p * (1.0 - p) / s.trials as f64).sqrt();
        assert!((phat - p).abs() <= 4.5 * se + 1e-12, "{engine:?} P(W={k}): {phat} vs {p}");
    }
    let chi = chi_square_gof(&s.histogram, &exact.probabilities, 5.0).unwrap();
    assert!(chi.p_value > 1e-3, "{engine:?} chi-square p = {}", chi.p_value);
    assert!((s.mean_c - exact.expected_c).abs() <= 4.0 * s.se_c, "{engine:?} E[C] {} vs {}", s.mean_c, exact.expected_c);
}

#[test]
fn embedded_chain_law() {
    assert_matches_dp(Engine::Chain, Params64::standard(50, 1.0, 1.5).unwrap(), 100_000, 11);
}

#[test]
fn embedded_chain_law_kortchemski() {
    assert_matches_dp(Engine::Chain, Params64::kortchemski(40, 0.8, 0.5).unwrap(), 50_000, 12);
}

#[test]
fn coupling_law() {
    assert_matches_dp(Engine::Coupling, Params64::standard(30, 0.7, 1.5).unwrap(), 100_000, 13);
}

#[test]
fn graph_law() {
    assert_matches_dp(Engine::Graph, Params64::new(12, 2.0, 0.7, InitMode::Kortchemski).unwrap(), 20_000, 14);
}
