//! Fit a UWARMA(1,1) to simulated data and report estimates, intervals and
//! information criteria.
//!
//! cargo run --release --example fit

use uwarma::{fit_pmle, simulate, FitOptions, Link, ModelSpec, ParamVector, SimOptions};

fn main() -> uwarma::Result<()> {
    let spec = ModelSpec::new(1, 1, 0.5, Link::Logit, 0)?;
    let truth = ParamVector::new(0.0, vec![], vec![0.6], vec![0.4], 5.0)?;
    let sim = simulate(&spec, &truth, None, 1000, &SimOptions { seed: 11, ..Default::default() })?;

    let fit = fit_pmle(&spec, &sim.data, &FitOptions::default())?;
    let names = spec.param_names(&[]);
    for (ci, name) in fit.confidence_intervals(0.95)?.iter().zip(&names) {
        println!("{name:<7} {:>9.4} ({:.4})  [{:.4}, {:.4}]", ci.estimate, ci.se, ci.lo, ci.hi);
    }
    let ic = fit.information_criteria();
    println!("loglik {:.3}  AIC {:.3}  BIC {:.3}  HQC {:.3}", fit.loglik, ic.aic, ic.bic, ic.hqc);
    println!("converged: {} after {} iterations", fit.converged, fit.iterations);
    Ok(())
}
