//! Forecast 12 steps ahead with a sinusoidal covariate known in advance.
//!
//! cargo run --release --example forecast

use uwarma::study::Covariates;
use uwarma::{fit_pmle, forecast_ahead, mape, simulate, FitOptions, Link, ModelSpec, ParamVector, SimOptions};

fn main() -> uwarma::Result<()> {
    let (n, h, burnin) = (500, 12, 500);
    let spec = ModelSpec::new(1, 1, 0.5, Link::Logit, 1)?;
    let truth = ParamVector::new(0.5, vec![0.5], vec![0.6], vec![0.4], 5.0)?;
    let x = Covariates::monthly_sinusoid().matrix(1 - burnin as i64, burnin + n + h);
    let sim = simulate(&spec, &truth, Some(&x), n + h, &SimOptions { burnin, seed: 3, ..Default::default() })?;

    let train = sim.data.window(0, n);
    let fit = fit_pmle(&spec, &train, &FitOptions::default())?;
    let x_future = sim.data.x.rows(n, h).into_owned();
    let fc = forecast_ahead(&spec, &fit.gamma_hat, &train, h, Some(&x_future))?;

    let actual = &sim.data.y[n..];
    for (k, (a, p)) in actual.iter().zip(&fc.yhat).enumerate() {
        println!("t+{:<2} actual {a:.4}  forecast {p:.4}", k + 1);
    }
    println!("MAPE over {h} steps: {:.4}", mape(actual, &fc.yhat)?);
    Ok(())
}
