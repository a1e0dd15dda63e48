//! Backward elimination: one informative covariate and two pure-noise ones.
//!
//! cargo run --release --example select

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uwarma::{backward_eliminate, simulate, FitOptions, Link, ModelSpec, ParamVector, SeriesData, SimOptions};

fn main() -> uwarma::Result<()> {
    let n = 600;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = DMatrix::from_fn(n, 3, |_, _| rng.random::<f64>() - 0.5);
    let spec = ModelSpec::new(1, 0, 0.5, Link::Logit, 3)?;
    let truth = ParamVector::new(0.3, vec![1.0, 0.0, 0.0], vec![0.5], vec![], 6.0)?;
    let sim = simulate(&spec, &truth, Some(&x), n, &SimOptions { burnin: 0, seed: 9, ..Default::default() })?;
    let data = SeriesData::with_names(sim.data.y, x, vec!["signal".into(), "noise_a".into(), "noise_b".into()])?;

    let e = backward_eliminate(&spec, &data, 0.05, &FitOptions::default())?;
    for r in &e.trace {
        println!("removed {:<8} p = {:.3}", r.name, r.p_value);
    }
    println!("kept: {:?}", e.data.names);
    Ok(())
}
