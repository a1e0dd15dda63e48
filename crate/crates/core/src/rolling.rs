//! Rolling-window forecast evaluation with per-window backward elimination.
//!
//! For every origin a model is re-selected on the trailing window and used to
//! forecast the next `h` points. Covariate values over the forecast period are
//! taken from the data (their realized values), as is usual for lagged
//! regressors whose first lag is already known at the origin.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{backward_eliminate, fit_pmle, FitOptions};
use crate::forecast::{ape, forecast_ahead};
use crate::link::Link;
use crate::model::{ModelSpec, SeriesData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingOptions {
    pub window: usize,
    pub h: usize,
    /// Backward elimination threshold; covariates with larger p-values are dropped.
    pub p_threshold: f64,
    pub parallel: bool,
    pub fit: FitOptions,
}

impl Default for RollingOptions {
    fn default() -> Self {
        Self {
            window: 287,
            h: 6,
            p_threshold: 0.05,
            parallel: true,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingRow {
    pub model: String,
    pub p: usize,
    pub q: usize,
    /// Average absolute percentage error at steps `1..=h`.
    pub mape: Vec<f64>,
    pub origins: usize,
    pub failures: usize,
    /// Average number of covariates retained by elimination.
    pub mean_covariates: f64,
}

struct Origin {
    ape: Vec<f64>,
    kept: usize,
}

fn one_origin(spec: &ModelSpec, data: &SeriesData, start: usize, opts: &RollingOptions) -> Result<Origin> {
    let end = start + opts.window;
    let train = data.window(start, end);
    let (fit, kept) = if data.r() > 0 {
        let e = backward_eliminate(spec, &train, opts.p_threshold, &opts.fit)?;
        let idx: Vec<usize> = e
            .data
            .names
            .iter()
            .map(|n| data.names.iter().position(|m| m == n).expect("retained column exists"))
            .collect();
        (e.fit, idx)
    } else {
        (fit_pmle(spec, &train, &opts.fit)?, Vec::new())
    };
    if !fit.converged {
        return Err(Error::Optimizer(format!("window at {start} did not converge ({:?})", fit.termination)));
    }
    let reduced = train.select_columns(&kept);
    let xf = data.x.rows(end, opts.h).select_columns(&kept);
    let fc = forecast_ahead(&fit.spec, &fit.gamma_hat, &reduced, opts.h, Some(&xf))?;
    Ok(Origin {
        ape: ape(&data.y[end..end + opts.h], &fc.yhat),
        kept: kept.len(),
    })
}

/// Evaluates a UWARMA(p, q) specification over every origin that leaves `h`
/// realized observations after its window.
pub fn rolling_forecast(p: usize, q: usize, rho: f64, link: Link, data: &SeriesData, opts: &RollingOptions) -> Result<RollingRow> {
    if opts.h == 0 || opts.window == 0 {
        return Err(Error::Config("window and horizon must be positive".into()));
    }
    if data.len() < opts.window + opts.h {
        return Err(Error::Dimension(format!(
            "{} observations cannot hold a window of {} plus {} steps ahead",
            data.len(),
            opts.window,
            opts.h
        )));
    }
    let spec = ModelSpec::new(p, q, rho, link, data.r())?;
    let origins = data.len() - opts.window - opts.h + 1;
    let run = |s: usize| {
        one_origin(&spec, data, s, opts).map_err(|e| {
            log::warn!("origin {s}: {e}");
            e
        })
    };
    let results: Vec<Result<Origin>> = if opts.parallel {
        (0..origins).into_par_iter().map(run).collect()
    } else {
        (0..origins).map(run).collect()
    };
    let ok: Vec<&Origin> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    if ok.is_empty() {
        return Err(Error::Optimizer(format!("all {origins} rolling windows failed")));
    }
    let m = ok.len() as f64;
    Ok(RollingRow {
        model: format!("UWARMA({p},{q})"),
        p,
        q,
        mape: (0..opts.h).map(|k| ok.iter().map(|o| o.ape[k]).sum::<f64>() / m).collect(),
        origins,
        failures: origins - ok.len(),
        mean_covariates: ok.iter().map(|o| o.kept as f64).sum::<f64>() / m,
    })
}

/// All orders with `p, q <= max_order` except `p = q = 0`.
pub fn order_grid(max_order: usize) -> Vec<(usize, usize)> {
    (0..=max_order)
        .flat_map(|p| (0..=max_order).map(move |q| (p, q)))
        .filter(|&(p, q)| p + q > 0)
        .collect()
}

/// Table with header `model,t+1,...,t+h`, one row per evaluated model.
/// Model labels contain a comma and are quoted.
pub fn mape_table_csv(rows: &[RollingRow]) -> String {
    let h = rows.first().map_or(0, |r| r.mape.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("model".to_string()).chain((1..=h).map(|k| format!("t+{k}")));
    w.write_record(header).expect("in-memory write");
    for r in rows {
        let fields = std::iter::once(r.model.clone()).chain(r.mape.iter().map(|v| format!("{v:.4}")));
        w.write_record(fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
