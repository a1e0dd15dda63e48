//! Sampling properties of the estimator and forecasts at desk scale.

mod common;

use rayon::prelude::*;

use common::mean_se;
use uwarma::fit::{fit_pmle, wald_test, FitOptions};
use uwarma::forecast::forecast_ahead;
use uwarma::model::{simulate, ModelSpec, ParamVector, SimOptions};
use uwarma::study::{run_estimation_study, run_forecast_study, Covariates, StudyConfig, StudySummary};
use uwarma::Link;

fn arma11_study(n: usize, replicas: usize) -> StudySummary {
    let cfg = StudyConfig {
        replicas,
        n,
        base_seed: 10_000 * n as u64,
        ..Default::default()
    };
    run_estimation_study(&cfg, &FitOptions::default()).unwrap()
}

fn sample_sd(v: &[f64]) -> f64 {
    mean_se(v).1 * (v.len() as f64).sqrt()
}

#[test]
fn estimator_sampling_distribution() {
    let studies: Vec<StudySummary> = [250, 500, 1000].iter().map(|&n| arma11_study(n, 1000)).collect();
    let truth = [0.0, 0.6, 0.4, 5.0];
    for s in &studies {
        assert!(s.failures <= 5, "{} failures", s.failures);
    }

    for (j, name) in ["phi1", "theta1", "lambda"].iter().enumerate() {
        let j = j + 1;
        let sds: Vec<f64> = studies.iter().map(|s| s.param(name).unwrap().sd).collect();
        let bias: Vec<f64> = studies.iter().map(|s| s.param(name).unwrap().bias.abs()).collect();
        println!("{name}: sd {sds:?}, |bias| {bias:?}");
        for w in sds.windows(2) {
            let ratio = w[1] / w[0];
            assert!((0.6..=0.85).contains(&ratio), "{name}: sd ratio {ratio}");
        }

        // n = 1000: empirical variance against the average inverse-information variance
        let big = &studies[2];
        let est: Vec<f64> = big.converged().map(|r| r.estimates[j]).collect();
        let var = sample_sd(&est).powi(2);
        let model_var = big.converged().map(|r| r.se[j].powi(2)).sum::<f64>() / est.len() as f64;
        assert!((var / model_var - 1.0).abs() <= 0.15, "{name}: {var} vs {model_var}");

        let inside = big
            .converged()
            .filter(|r| ((r.estimates[j] - truth[j]) / r.se[j]).abs() <= 1.959_964)
            .count() as f64
            / est.len() as f64;
        assert!((0.92..=0.98).contains(&inside), "{name}: central mass {inside}");
    }

    // |bias| is of the order of its Monte Carlo error here, so "shrinks" is checked up to that error
    for name in ["phi1", "theta1", "lambda"] {
        let b: Vec<(f64, f64)> = studies
            .iter()
            .map(|s| {
                let p = s.param(name).unwrap();
                (p.bias.abs(), p.sd / (s.converged().count() as f64).sqrt())
            })
            .collect();
        for w in b.windows(2) {
            let slack = 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt();
            assert!(w[1].0 <= w[0].0 + slack, "{name}: {b:?}");
        }
        assert!(b[2].0 <= 3.0 * b[2].1, "{name}: {b:?}");
    }
}

#[test]
fn wald_size_under_the_null() {
    let cfg = StudyConfig {
        replicas: 500,
        n: 500,
        alpha: 0.5,
        beta: vec![0.0],
        phi: vec![0.5],
        theta: vec![],
        covariates: Covariates::monthly_sinusoid(),
        base_seed: 333,
        ..Default::default()
    };
    let s = run_estimation_study(&cfg, &FitOptions::default()).unwrap();
    let tests: Vec<bool> = s.converged().map(|r| wald_test(r.estimates[1], r.se[1], 0.0).p_value < 0.05).collect();
    let rate = tests.iter().filter(|&&x| x).count() as f64 / tests.len() as f64;
    assert!((0.03..=0.07).contains(&rate), "rejection rate {rate}");
}

#[test]
fn aic_prefers_the_true_order() {
    let (spec, gamma) = common::arma11(0.5, 5.0, 0.6, 0.4);
    let candidates = [(1, 1), (0, 1), (1, 0), (2, 2)];
    let wins = (0..200u64)
        .into_par_iter()
        .filter(|&i| {
            let data = simulate(&spec, &gamma, None, 1000, &SimOptions { seed: 5000 + i, ..Default::default() }).unwrap().data;
            let aic: Vec<f64> = candidates
                .iter()
                .map(|&(p, q)| {
                    let s = ModelSpec::new(p, q, 0.5, Link::Logit, 0).unwrap();
                    fit_pmle(&s, &data, &FitOptions::default()).map_or(f64::INFINITY, |f| f.information_criteria().aic)
                })
                .collect();
            aic[0] <= aic.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .count();
    assert!(wins >= 120, "AIC picked (1,1) in {wins} of 200");
}

#[test]
fn constant_quantile_simulation_has_the_right_median() {
    let spec = ModelSpec::new(0, 0, 0.5, Link::Logit, 0).unwrap();
    let gamma = ParamVector::new(0.0, vec![], vec![], vec![], 5.0).unwrap();
    let mut y = simulate(&spec, &gamma, None, 100_000, &SimOptions { seed: 1, ..Default::default() }).unwrap().data.y;
    assert!(y.iter().all(|&v| v > 0.0 && v < 1.0));
    y.sort_by(f64::total_cmp);
    assert!((y[50_000] - 0.5).abs() < 0.01, "{}", y[50_000]);
}

#[test]
fn forecasts_with_a_very_large_shape_are_nearly_exact() {
    let (spec, gamma) = common::arma11(0.5, 200.0, 0.6, 0.4);
    let ape: Vec<f64> = (0..100)
        .map(|i| {
            let sim = simulate(&spec, &gamma, None, 301, &SimOptions { seed: i, ..Default::default() }).unwrap();
            let fc = forecast_ahead(&spec, &gamma, &sim.data.window(0, 300), 1, None).unwrap();
            ((sim.data.y[300] - fc.yhat[0]) / sim.data.y[300]).abs()
        })
        .collect();
    let (m, _) = mean_se(&ape);
    assert!(m < 0.01, "{m}");
}

#[test]
fn forecast_error_grows_with_rho_and_horizon() {
    let base = StudyConfig {
        replicas: 100,
        n: 1000,
        alpha: 0.5,
        beta: vec![0.5],
        covariates: Covariates::monthly_sinusoid(),
        base_seed: 1,
        ..Default::default()
    };
    let horizons = [1, 24];
    let mid = run_forecast_study(&base, &horizons, &FitOptions::default()).unwrap();
    let high = run_forecast_study(&StudyConfig { rho: 0.75, ..base.clone() }, &horizons, &FitOptions::default()).unwrap();
    println!("rho 0.5: {:?}, rho 0.75: {:?}", mid.mape, high.mape);
    assert!(mid.mape[0] <= mid.mape[1]);
    assert!((high.mape[0] - 0.172).abs() < 0.03, "{}", high.mape[0]);
    assert!(high.mape[0] > 2.0 * mid.mape[0]);
}
