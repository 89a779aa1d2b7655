mod common;

use cscs::harness::{reference_dataset, synth_dataset};
use cscs::phasefit::{FitStatus, FitWarning, PhaseTypeDoc};
use cscs::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

#[test]
fn erlang_cdf_matches_gamma_law() {
    let d = PhaseTypeDist::erlang(3, 0.2).unwrap();
    let g = Gamma::new(3.0, 0.2).unwrap();
    for x in [0.0, 0.5, 4.0, 15.0, 40.0, 120.0] {
        assert!((d.cdf(x).unwrap() - g.cdf(x)).abs() < 1e-10, "x={x}");
    }
    assert!((d.mean() - 15.0).abs() < 1e-10);
    assert!((d.second_moment() - 3.0 * 4.0 / 0.04).abs() < 1e-8);
}

#[test]
fn density_integrates_to_cdf() {
    let r = nalgebra::DMatrix::from_row_slice(2, 2, &[-0.3, 0.1, 0.05, -0.08]);
    let d = PhaseTypeDist::new(vec![0.7, 0.3], r).unwrap();
    let (a, b, n) = (0.0, 25.0, 20_000);
    let h = (b - a) / n as f64;
    let integral: f64 = (0..n).map(|k| d.density(a + (k as f64 + 0.5) * h).unwrap() * h).sum();
    assert!((integral - (d.cdf(b).unwrap() - d.cdf(a).unwrap())).abs() < 1e-7);
    assert!(matches!(d.density(-1.0), Err(Error::Domain(_))));
}

#[test]
fn invalid_parameters_are_rejected() {
    let r = nalgebra::DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.5, -1.0]);
    assert!(PhaseTypeDist::new(vec![0.5, 0.6], r.clone()).is_err());
    assert!(PhaseTypeDist::new(vec![0.5, 0.5, 0.0], r).is_err());
    let leaky = nalgebra::DMatrix::from_row_slice(2, 2, &[-1.0, 1.5, 0.5, -1.0]);
    assert!(PhaseTypeDist::new(vec![0.5, 0.5], leaky).is_err());
    let closed = nalgebra::DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    assert!(PhaseTypeDist::new(vec![0.5, 0.5], closed).is_err());
}

#[test]
fn library_sampler_agrees_with_reference_ctmc() {
    let r = nalgebra::DMatrix::from_row_slice(3, 3, &[-0.5, 0.3, 0.1, 0.0, -0.2, 0.1, 0.05, 0.0, -0.1]);
    let d = PhaseTypeDist::new(vec![0.2, 0.5, 0.3], r).unwrap();
    let n = 40_000;
    let ours: f64 = d.sample_n(n, 3).iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let reference: f64 = (0..n).map(|_| common::ph_sample(&d, &mut rng)).sum::<f64>() / n as f64;
    let sd = (d.second_moment() - d.mean().powi(2)).sqrt() / (n as f64).sqrt();
    assert!((ours - d.mean()).abs() < 4.0 * sd, "{ours} vs {}", d.mean());
    assert!((reference - d.mean()).abs() < 4.0 * sd);
}

#[test]
fn single_phase_fit_is_the_exponential_mle() {
    let samples = DurationSamples::new(PhaseTypeDist::exponential(0.05).unwrap().sample_n(500, 9)).unwrap();
    let fit = empht_fit(&samples, &EmOptions { phases: 1, ..Default::default() }).unwrap();
    let rate = -fit.distribution.rate_matrix()[(0, 0)];
    assert!((rate - 1.0 / samples.mean()).abs() < 1e-6 * rate);
    let n = samples.count() as f64;
    let ll = n * rate.ln() - rate * samples.values().iter().sum::<f64>();
    assert!((fit.log_likelihood() - ll).abs() < 1e-6 * ll.abs());
}

#[test]
fn fit_recovers_erlang_moments() {
    let truth = PhaseTypeDist::erlang(4, 0.1).unwrap();
    let samples = DurationSamples::new(truth.sample_n(3000, 21)).unwrap();
    let fit = empht_fit(&samples, &EmOptions { phases: 4, ..Default::default() }).unwrap();
    let d = &fit.distribution;
    assert!((d.mean() - samples.mean()).abs() < 0.01 * samples.mean());
    let cv = (d.second_moment() - d.mean().powi(2)).sqrt() / d.mean();
    assert!((cv - 0.5).abs() < 0.08, "cv {cv}");
    let trace = &fit.log_likelihood_trace;
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn reference_data_set_mean_is_reproduced() {
    let attrs = reference_dataset(1).unwrap();
    let (samples, _) = synth_dataset(&attrs, 17).unwrap();
    assert!((samples.mean() - attrs.mean_stay_min).abs() < 1e-9 * attrs.mean_stay_min);
    assert!((samples.std_dev() - attrs.sd_stay_min).abs() < 1e-6 * attrs.sd_stay_min);
    let fit = empht_fit(&samples, &EmOptions::default()).unwrap();
    assert!((fit.distribution.mean() - attrs.mean_stay_min).abs() < 0.05 * attrs.mean_stay_min);
}

#[test]
fn degenerate_and_sparse_inputs_warn() {
    let same = DurationSamples::new(vec![5.0; 30]).unwrap();
    let fit = empht_fit(&same, &EmOptions { phases: 2, max_iters: 50, ..Default::default() }).unwrap();
    assert!(fit.warnings.contains(&FitWarning::DegenerateSamples));
    let few = DurationSamples::new(vec![1.0, 2.0, 3.5, 0.7]).unwrap();
    let fit = empht_fit(&few, &EmOptions { phases: 2, max_iters: 50, ..Default::default() }).unwrap();
    assert!(fit.warnings.iter().any(|w| matches!(w, FitWarning::FewSamplesPerPhase { .. })));
}

#[test]
fn iteration_cap_is_reported() {
    let samples = DurationSamples::new(PhaseTypeDist::erlang(3, 1.0).unwrap().sample_n(400, 5)).unwrap();
    let fit = empht_fit(&samples, &EmOptions { phases: 3, max_iters: 3, ll_tol: 0.0, ..Default::default() }).unwrap();
    assert_eq!(fit.status, FitStatus::MaxIterations);
    assert!(fit.iterations() <= 4);
}

#[test]
fn sample_file_parsing() {
    let s = DurationSamples::parse("# stays\n12.5\n\n30\n  7.25 \n").unwrap();
    assert_eq!(s.values(), &[12.5, 30.0, 7.25]);
    match DurationSamples::parse("1.0\n2.0\nabc\n") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    match DurationSamples::parse("1.0\n-4\n") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    let empty = DurationSamples::parse("\n# nothing\n").unwrap_err();
    assert!(empty.to_string().contains("no samples"));
    let again = DurationSamples::parse(&s.to_text()).unwrap();
    assert_eq!(again, s);
}

#[test]
fn document_roundtrip() {
    let d = PhaseTypeDist::erlang(2, 0.3).unwrap();
    let json = serde_json::to_string(&d).unwrap();
    let doc: PhaseTypeDoc = serde_json::from_str(&json).unwrap();
    assert_eq!(doc.m, 2);
    assert_eq!(serde_json::from_str::<PhaseTypeDist>(&json).unwrap(), d);
    assert!(serde_json::from_str::<PhaseTypeDist>(r#"{"m":1,"alpha":[1.0],"rate_matrix":[[0.5]]}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn em_never_decreases_likelihood(
        seed in any::<u64>(),
        n in 40usize..200,
        phases in 1usize..4,
        shape in 1usize..4,
        rate in 0.02f64..2.0,
    ) {
        let samples = DurationSamples::new(PhaseTypeDist::erlang(shape, rate).unwrap().sample_n(n, seed)).unwrap();
        let fit = empht_fit(&samples, &EmOptions { phases, max_iters: 150, seed, ..Default::default() }).unwrap();
        let tr = &fit.log_likelihood_trace;
        for w in tr.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn cdf_and_survival_are_complementary(x in 0.0f64..500.0, rate in 0.001f64..3.0, k in 1usize..6) {
        let d = PhaseTypeDist::erlang(k, rate).unwrap();
        let f = d.cdf(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f + d.survival(x).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(d.cdf(x + 1.0).unwrap() + 1e-12 >= f);
    }

    #[test]
    fn scaling_rates_divides_mean(factor in 0.01f64..100.0) {
        let d = PhaseTypeDist::erlang(3, 0.4).unwrap();
        let s = d.scaled(factor).unwrap();
        prop_assert!((s.mean() * factor - d.mean()).abs() < 1e-9 * d.mean());
    }
}
