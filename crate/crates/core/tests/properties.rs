mod common;

use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vfm_calib::eval::{mad_report, truth_targets, validation_errors, welltest_targets, ValidationError};
use vfm_calib::model::coordinate;
use vfm_calib::smc::{
    effective_sample_size, normalize_log_weights, offspring_counts, resample, summarize_projected, Marginal,
    PosteriorSummary, ResamplingScheme,
};
use vfm_calib::state_space::{
    composition_from_factors, observation_covariance, predicted_well_rates, AssetState, NoiseConfig, Parameter,
    SeparatorVariance, WellParameters,
};
use vfm_calib::synth::{generate_dataset, ScenarioKind, ScenarioSpec};

fn weights_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, 1..200).prop_map(|lw| normalize_log_weights(&lw).unwrap())
}

fn params_strategy() -> impl Strategy<Value = WellParameters> {
    (0.0..3.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(beta, gamma, lambda)| WellParameters { beta, gamma, lambda })
}

proptest! {
    #[test]
    fn normalized_weights_sum_to_one(lw in prop::collection::vec(-1e3..1e3f64, 1..500)) {
        let w = normalize_log_weights(&lw).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn ess_is_between_one_and_n(w in weights_strategy()) {
        let ess = effective_sample_size(&w);
        prop_assert!((1.0..=w.len() as f64).contains(&ess));
    }

    #[test]
    fn systematic_offspring_are_floor_or_ceil(w in weights_strategy(), seed in any::<u64>()) {
        let n = w.len();
        let anc = resample(&w, ResamplingScheme::Systematic, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(anc.len(), n);
        for (c, wi) in offspring_counts(&anc, n).into_iter().zip(&w) {
            // |c - N w| < 1 means c is the floor or the ceiling; the slack covers cumulative-sum rounding
            prop_assert!((c as f64 - n as f64 * wi).abs() < 1.0 + 1e-9);
            if *wi == 0.0 {
                prop_assert_eq!(c, 0);
            }
        }
    }

    #[test]
    fn ancestors_are_ascending_and_weighted(w in weights_strategy(), seed in any::<u64>()) {
        for scheme in [ResamplingScheme::Systematic, ResamplingScheme::Multinomial, ResamplingScheme::Stratified] {
            let anc = resample(&w, scheme, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(anc.windows(2).all(|p| p[0] <= p[1]));
            prop_assert!(anc.iter().all(|&a| w[a] > 0.0));
        }
    }

    #[test]
    fn composition_sums_to_one(gamma in 0.0..=1.0f64, lambda in 0.0..=1.0f64) {
        let phi = composition_from_factors(gamma, lambda).unwrap();
        prop_assert!((phi.gas + phi.oil + phi.water - 1.0).abs() <= 1e-15);
        prop_assert!(phi.as_array().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn observation_covariance_is_spd(
        wells in prop::collection::vec(params_strategy(), 1..8),
        y in prop::array::uniform3(0.0..50.0f64),
        mask in any::<u8>(),
        squared in any::<bool>(),
    ) {
        let active: Vec<usize> = (0..wells.len()).filter(|j| mask & (1 << j) != 0 || *j == 0).collect();
        let noise = NoiseConfig {
            separator_variance: if squared { SeparatorVariance::Squared } else { SeparatorVariance::Proportional },
            ..NoiseConfig::default()
        };
        let cov: Matrix3<f64> = observation_covariance(&AssetState::new(wells), &y, &active, &noise);
        prop_assert!((cov - cov.transpose()).abs().max() == 0.0);
        prop_assert!(cov.cholesky().is_some());
        prop_assert!(cov.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn percentiles_are_ordered(
        values in prop::collection::vec(-100.0..100.0f64, 1..300),
        lw in prop::collection::vec(-20.0..0.0f64, 300),
    ) {
        let w = normalize_log_weights(&lw[..values.len()]).unwrap();
        let m = summarize_projected(&values, 1, &w, false)[0];
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= m.p5 && m.p5 <= m.p25 && m.p25 <= m.p75 && m.p75 <= m.p95 && m.p95 <= hi);
        prop_assert!(lo - 1e-9 <= m.mean && m.mean <= hi + 1e-9);
    }

    #[test]
    fn mad_is_permutation_invariant(
        raw in prop::collection::vec((0usize..300, 0usize..4, prop::option::of(0.0..1.0f64)), 1..100),
        seed in any::<u64>(),
    ) {
        let errors: Vec<ValidationError> = raw
            .iter()
            .map(|&(t, well, e)| ValidationError { t, well, errors: [e, e.map(|v| v / 2.0), None] })
            .collect();
        let mut shuffled = errors.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = mad_report(&errors, &[0.5], 4, 300, 50).unwrap();
        let b = mad_report(&shuffled, &[0.5], 4, 300, 50).unwrap();
        for (x, y) in a.overall.iter().zip(&b.overall) {
            prop_assert_eq!(x.count, y.count);
            prop_assert_eq!(x.undefined, y.undefined);
            match (x.mad, y.mad) {
                (Some(p), Some(q)) => prop_assert!((p - q).abs() <= 1e-12),
                (p, q) => prop_assert_eq!(p, q),
            }
        }
        prop_assert_eq!(a.buckets, b.buckets);
    }
}

fn noise_free(kind: ScenarioKind, seed: u64) -> vfm_calib::dataset::Dataset {
    let mut spec = ScenarioSpec::for_kind(kind, seed).unwrap();
    spec.noise.enabled = false;
    generate_dataset(&spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn noise_free_observations_balance_mass(seed in any::<u64>(), kind in prop_oneof![
        Just(ScenarioKind::Constructed), Just(ScenarioKind::Copy), Just(ScenarioKind::Random)
    ]) {
        let ds = noise_free(kind, seed);
        let truth = ds.truth.as_ref().unwrap();
        let fluid = vfm_calib::choke::FluidProperties::default();
        for (t, obs) in ds.observations.iter().enumerate() {
            let mut sum = [0.0; 3];
            for &j in &obs.active {
                let r = predicted_well_rates(&truth[t][j], &ds.features[t][j].x, &fluid).unwrap();
                for (s, v) in sum.iter_mut().zip(r) {
                    *s += v;
                }
            }
            for (y, s) in obs.y.iter().zip(sum) {
                prop_assert!((y - s).abs() <= 1e-12 * s.max(1.0));
            }
            prop_assert!(ds.features[t].iter().enumerate().all(|(j, f)| f.active == obs.active.contains(&j)));
        }
    }
}

/// Summaries whose step `t - 1` carries the true parameters of step `t`.
fn oracle_summaries(truth: &[Vec<WellParameters>]) -> Vec<PosteriorSummary> {
    (0..truth.len())
        .map(|t| {
            let next = &truth[(t + 1).min(truth.len() - 1)];
            let mut marginals = vec![Marginal::point(f64::NAN); 3 * next.len()];
            for (j, w) in next.iter().enumerate() {
                for p in Parameter::ALL {
                    marginals[coordinate(j, p)] = Marginal::point(w.get(p));
                }
            }
            PosteriorSummary { t, marginals, ess: 1.0, rel_ess: 1.0 }
        })
        .collect()
}

#[test]
fn exact_estimates_have_zero_error() {
    let fluid = vfm_calib::choke::FluidProperties::default();
    for kind in [ScenarioKind::Constructed, ScenarioKind::Copy] {
        let ds = noise_free(kind, 4);
        let summaries = oracle_summaries(ds.truth.as_ref().unwrap());
        for targets in [truth_targets(&ds).unwrap(), welltest_targets(&ds, &fluid).unwrap()] {
            assert!(!targets.is_empty());
            let errors = validation_errors(&summaries, &targets).unwrap();
            for e in errors.iter().flat_map(|e| e.errors.iter().flatten()) {
                assert!(*e < 1e-10, "{kind:?}: error {e}");
            }
        }
    }
}

#[test]
fn multinomial_resampling_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let w = normalize_log_weights(&[0.0, -1.0, -2.0, 0.5, -0.2, -5.0, 1.0, -0.7]).unwrap();
    let reps = 20_000;
    let n = w.len();
    for scheme in [ResamplingScheme::Multinomial, ResamplingScheme::Stratified, ResamplingScheme::Systematic] {
        let mut totals = vec![0usize; n];
        for _ in 0..reps {
            for (t, c) in totals.iter_mut().zip(offspring_counts(&resample(&w, scheme, &mut rng), n)) {
                *t += c;
            }
        }
        for (i, &wi) in w.iter().enumerate() {
            let mean = totals[i] as f64 / reps as f64;
            // multinomial count variance bounds the other schemes'
            let se = (n as f64 * wi * (1.0 - wi) / reps as f64).sqrt();
            assert!((mean - n as f64 * wi).abs() < 4.5 * se, "{scheme:?} index {i}: {mean} vs {}", n as f64 * wi);
        }
    }
}
