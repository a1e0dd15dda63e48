//! Density, CDF, quantile and sampling for the unit-Weibull law.
//!
//! cargo run --example distribution

use uwarma::dist::{LogRatioMoment, UwParams};

fn main() -> uwarma::Result<()> {
    let d = UwParams::new(0.6, 5.0, 0.5)?;
    println!("median = {}", d.quantile(0.5)?);
    for y in [0.3, 0.5, 0.6, 0.7, 0.9] {
        println!("y = {y:.1}  pdf = {:.5}  cdf = {:.5}", d.pdf(y)?, d.cdf(y)?);
    }

    let draws = d.sample(100_000, 42);
    let below = draws.iter().filter(|&&y| y <= 0.6).count() as f64 / draws.len() as f64;
    println!("share of draws below mu: {below:.4} (rho = 0.5)");

    for m in LogRatioMoment::ALL {
        println!("{m:?}: {:.6}", d.log_ratio_moment(m));
    }
    Ok(())
}
