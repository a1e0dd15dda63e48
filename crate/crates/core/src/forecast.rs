//! In-sample fitted quantiles and recursive h-step forecasts.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{filter_series, ModelSpec, ParamVector, SeriesData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub horizon: usize,
    /// `yhat_{n+1}, ..., yhat_{n+h}`.
    pub yhat: Vec<f64>,
    /// In-sample conditional quantiles `mu_1, ..., mu_n`.
    pub mu_insample: Vec<f64>,
}

/// Forecasts `h` steps past the end of `data`.
///
/// Observations are replaced by their own forecasts once they run out and
/// future residuals are zero. `x_future` must be `h x r` when the model has
/// covariates.
pub fn forecast_ahead(
    spec: &ModelSpec,
    gamma: &ParamVector,
    data: &SeriesData,
    h: usize,
    x_future: Option<&DMatrix<f64>>,
) -> Result<ForecastResult> {
    if h == 0 {
        return Err(Error::InvalidParameter {
            name: "h",
            value: 0.0,
            reason: "forecast horizon must be positive",
        });
    }
    let r = spec.r;
    let empty = DMatrix::zeros(h, 0);
    let xf = match x_future {
        Some(x) if x.nrows() >= h && x.ncols() == r => x,
        Some(x) => {
            return Err(Error::MissingFutureCovariates { h, r, rows: x.nrows() });
        }
        None if r == 0 => &empty,
        None => return Err(Error::MissingFutureCovariates { h, r, rows: 0 }),
    };
    let f = filter_series(spec, gamma, data)?;
    let n = data.len();
    let link = spec.link;

    // extend link-scale response, covariate effect and residual past n
    let mut g_y = f.g_y.clone();
    let mut x_beta = f.x_beta.clone();
    let mut resid = f.resid.clone();
    let mut yhat = Vec::with_capacity(h);
    for k in 0..h {
        let t = n + k;
        x_beta.push((0..r).map(|l| xf[(k, l)] * gamma.beta[l]).sum());
        let mut eta = gamma.alpha + x_beta[t];
        for (i, phi) in gamma.phi.iter().enumerate() {
            let lag = i + 1;
            if t >= lag {
                eta += phi * (g_y[t - lag] - x_beta[t - lag]);
            }
        }
        for (j, theta) in gamma.theta.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                eta += theta * resid[t - lag];
            }
        }
        let y = link.inverse(eta);
        yhat.push(y);
        g_y.push(link.apply(y));
        resid.push(0.0);
    }
    Ok(ForecastResult {
        horizon: h,
        yhat,
        mu_insample: f.mu,
    })
}

/// Mean absolute percentage error `mean(|a - p| / a)` as a fraction.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::Dimension(format!(
            "{} actual values vs {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Dimension("MAPE of an empty series".into()));
    }
    Ok(actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| ((a - p) / a).abs())
        .sum::<f64>()
        / actual.len() as f64)
}

/// Absolute percentage errors per horizon step.
pub fn ape(actual: &[f64], predicted: &[f64]) -> Vec<f64> {
    actual.iter().zip(predicted).map(|(a, p)| ((a - p) / a).abs()).collect()
}
