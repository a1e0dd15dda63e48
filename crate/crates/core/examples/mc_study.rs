//! A small parameter-recovery study for UWARMA(1,1).
//!
//! cargo run --release --example mc_study [replicas] [n]

use uwarma::fit::FitOptions;
use uwarma::study::{run_estimation_study, StudyConfig};

fn main() -> uwarma::Result<()> {
    let mut args = std::env::args().skip(1);
    let replicas = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(500);
    let cfg = StudyConfig {
        replicas,
        n,
        ..Default::default()
    };
    let summary = run_estimation_study(&cfg, &FitOptions::default())?;
    print!("{}", summary.summary_csv());
    println!("failed replicas: {}", summary.failures);
    Ok(())
}
