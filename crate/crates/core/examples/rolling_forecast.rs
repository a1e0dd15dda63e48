//! Rolling-window evaluation with lagged covariates and per-window
//! backward elimination, written as an average-MAPE table.
//!
//! cargo run --release --example rolling_forecast

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uwarma::io::{prepare_covariates, Dataset};
use uwarma::rolling::{mape_table_csv, rolling_forecast, RollingOptions};
use uwarma::{simulate, Link, ModelSpec, ParamVector, SeriesData, SimOptions};

fn main() -> uwarma::Result<()> {
    let n = 220;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let z = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() - 0.5);
    let spec = ModelSpec::new(1, 0, 0.5, Link::Logit, 2)?;
    let gamma = ParamVector::new(1.0, vec![0.8, 0.0], vec![0.5], vec![], 20.0)?;
    let sim = simulate(&spec, &gamma, Some(&z), n, &SimOptions { burnin: 0, seed: 2, ..Default::default() })?;
    let ds = Dataset {
        data: SeriesData::with_names(sim.data.y, z, vec!["lead".into(), "noise".into()])?,
        dates: None,
    };
    let lagged = prepare_covariates(&ds, &BTreeMap::new(), 2)?;

    let opts = RollingOptions {
        window: 180,
        h: 6,
        ..Default::default()
    };
    let rows = [(1, 0), (2, 0)]
        .into_iter()
        .map(|(p, q)| rolling_forecast(p, q, 0.5, Link::Logit, &lagged.data, &opts))
        .collect::<uwarma::Result<Vec<_>>>()?;
    print!("{}", mape_table_csv(&rows));
    Ok(())
}
