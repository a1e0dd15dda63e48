//! Model specification, parameters, data and the UWARMA recursion.
//!
//! The linear predictor is
//!
//! ```text
//! eta_t = alpha + x_t' beta + sum_i phi_i [g(y_{t-i}) - x_{t-i}' beta] + sum_j theta_j r_{t-j}
//! mu_t  = g^{-1}(eta_t),   r_t = g(y_t) - g(mu_t)
//! ```
//!
//! with every pre-sample term (index <= 0) contributing zero.

use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::quantile_raw;
use crate::error::{Error, Result};
use crate::link::{Link, MU_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// AR order.
    pub p: usize,
    /// MA order.
    pub q: usize,
    /// Known quantile level modelled by `mu_t`.
    pub rho: f64,
    pub link: Link,
    /// Number of covariates.
    pub r: usize,
}

impl ModelSpec {
    pub fn new(p: usize, q: usize, rho: f64, link: Link, r: usize) -> Result<Self> {
        let spec = Self { p, q, rho, link, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: self.rho,
                reason: "quantile level must lie strictly inside (0,1)",
            });
        }
        Ok(())
    }

    /// Dimension of the full parameter vector `(alpha, beta, phi, theta, lambda)`.
    pub fn dim(&self) -> usize {
        self.r + self.p + self.q + 2
    }

    /// Number of linear-predictor coefficients `(alpha, beta, phi, theta)`.
    pub fn dim_nu(&self) -> usize {
        self.r + self.p + self.q + 1
    }

    pub fn with_covariates(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    /// Labels in parameter-vector order; covariate names are used for beta when given.
    pub fn param_names(&self, covariates: &[String]) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        names.push("alpha".to_string());
        for l in 0..self.r {
            match covariates.get(l) {
                Some(c) => names.push(format!("beta[{c}]")),
                None => names.push(format!("beta{}", l + 1)),
            }
        }
        names.extend((1..=self.p).map(|k| format!("phi{k}")));
        names.extend((1..=self.q).map(|k| format!("theta{k}")));
        names.push("lambda".to_string());
        names
    }
}

/// Full parameter vector `gamma = (alpha, beta', phi', theta', lambda)'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub lambda: f64,
}

impl ParamVector {
    pub fn new(alpha: f64, beta: Vec<f64>, phi: Vec<f64>, theta: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "shape must be positive and finite",
            });
        }
        Ok(Self {
            alpha,
            beta,
            phi,
            theta,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.beta.len() + self.phi.len() + self.theta.len() + 2
    }

    pub fn check_spec(&self, spec: &ModelSpec) -> Result<()> {
        if self.beta.len() != spec.r || self.phi.len() != spec.p || self.theta.len() != spec.q {
            return Err(Error::Dimension(format!(
                "parameters have (r, p, q) = ({}, {}, {}) but the model has ({}, {}, {})",
                self.beta.len(),
                self.phi.len(),
                self.theta.len(),
                spec.r,
                spec.p,
                spec.q
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: self.lambda,
                reason: "shape must be positive",
            });
        }
        Ok(())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.alpha);
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.phi);
        v.extend_from_slice(&self.theta);
        v.push(self.lambda);
        v
    }

    pub fn from_slice(spec: &ModelSpec, v: &[f64]) -> Result<Self> {
        if v.len() != spec.dim() {
            return Err(Error::Dimension(format!(
                "parameter slice has length {} but the model needs {}",
                v.len(),
                spec.dim()
            )));
        }
        let (r, p, q) = (spec.r, spec.p, spec.q);
        Self::new(
            v[0],
            v[1..1 + r].to_vec(),
            v[1 + r..1 + r + p].to_vec(),
            v[1 + r + p..1 + r + p + q].to_vec(),
            v[1 + r + p + q],
        )
    }
}

/// Response series in (0,1) with an `n x r` covariate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesData {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
}

impl SeriesData {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|l| format!("x{l}")).collect();
        Self::with_names(y, x, names)
    }

    pub fn with_names(y: Vec<f64>, x: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "{} observations but covariate matrix has {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if names.len() != x.ncols() {
            return Err(Error::Dimension(format!(
                "{} covariate names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        if let Some((t, &v)) = y.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Domain {
                value: v,
                context: if t == 0 { "response y_1" } else { "response series" },
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("covariate matrix contains non-finite values".into()));
        }
        Ok(Self { y, x, names })
    }

    pub fn univariate(y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::new(y, DMatrix::zeros(n, 0))
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn r(&self) -> usize {
        self.x.ncols()
    }

    /// Keeps only the covariate columns listed in `keep`, in that order.
    pub fn select_columns(&self, keep: &[usize]) -> SeriesData {
        let x = self.x.select_columns(keep);
        let names = keep.iter().map(|&c| self.names[c].clone()).collect();
        SeriesData {
            y: self.y.clone(),
            x,
            names,
        }
    }

    /// Rows `start..end` of the series.
    pub fn window(&self, start: usize, end: usize) -> SeriesData {
        SeriesData {
            y: self.y[start..end].to_vec(),
            x: self.x.rows(start, end - start).into_owned(),
            names: self.names.clone(),
        }
    }

    pub(crate) fn check_spec(&self, spec: &ModelSpec) -> Result<()> {
        if self.r() != spec.r {
            return Err(Error::Dimension(format!(
                "data has {} covariates but the model expects {}",
                self.r(),
                spec.r
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub eta: Vec<f64>,
    pub mu: Vec<f64>,
    /// `r_t = g(y_t) - g(mu_t)`.
    pub resid: Vec<f64>,
    /// Link-scale responses `g(y_t)`.
    pub g_y: Vec<f64>,
    /// `x_t' beta` for each t.
    pub x_beta: Vec<f64>,
    /// Number of times `mu_t` had to be saturated to `[MU_EPS, 1 - MU_EPS]`.
    pub clamp_events: usize,
}

pub(crate) fn covariate_effect(x: &DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
    (0..x.nrows())
        .map(|t| beta.iter().enumerate().map(|(l, b)| x[(t, l)] * b).sum())
        .collect()
}

/// One step of the linear predictor at (0-based) time `t`.
#[inline]
pub(crate) fn linear_predictor(t: usize, gamma: &ParamVector, x_beta: &[f64], g_y: &[f64], resid: &[f64]) -> f64 {
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
    eta
}

#[inline]
fn saturate(link: Link, eta: f64, clamp_events: &mut usize) -> f64 {
    let raw = link.inverse_raw(eta);
    if !(MU_EPS..=1.0 - MU_EPS).contains(&raw) {
        *clamp_events += 1;
    }
    raw.clamp(MU_EPS, 1.0 - MU_EPS)
}

/// Runs the recursion over observed data, producing `eta_t`, `mu_t` and `r_t`.
pub fn filter_series(spec: &ModelSpec, gamma: &ParamVector, data: &SeriesData) -> Result<FilterOutput> {
    gamma.check_spec(spec)?;
    data.check_spec(spec)?;
    let n = data.len();
    let link = spec.link;
    let g_y: Vec<f64> = data.y.iter().map(|&y| link.apply(y)).collect();
    if let Some(t) = g_y.iter().position(|v| !v.is_finite()) {
        return Err(Error::BoundaryCollapse {
            t: t + 1,
            detail: format!("g(y_t) is not finite for y_t = {}", data.y[t]),
        });
    }
    let x_beta = covariate_effect(&data.x, &gamma.beta);
    let mut eta = vec![0.0; n];
    let mut mu = vec![0.0; n];
    let mut resid = vec![0.0; n];
    let mut clamp_events = 0;
    for t in 0..n {
        eta[t] = linear_predictor(t, gamma, &x_beta, &g_y, &resid);
        mu[t] = saturate(link, eta[t], &mut clamp_events);
        resid[t] = g_y[t] - link.apply(mu[t]);
    }
    if !eta.iter().all(|v| v.is_finite()) {
        let t = eta.iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(Error::BoundaryCollapse {
            t: t + 1,
            detail: "linear predictor diverged".into(),
        });
    }
    Ok(FilterOutput {
        eta,
        mu,
        resid,
        g_y,
        x_beta,
        clamp_events,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub burnin: usize,
    pub seed: u64,
    /// Allow `lambda < 1`, which is rejected by default.
    pub force_small_shape: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            burnin: 1000,
            seed: 0,
            force_small_shape: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// The retained sample (burn-in removed).
    pub data: SeriesData,
    /// Conditional quantiles `mu_t` of the retained sample.
    pub mu: Vec<f64>,
    /// Whole generated path including burn-in.
    pub full_y: Vec<f64>,
    pub full_mu: Vec<f64>,
    pub burnin: usize,
    pub clamp_events: usize,
}

/// Simulates `n` observations after `burnin` discarded ones.
///
/// `covariates` must have `burnin + n` rows when `spec.r > 0`; its first
/// `burnin` rows belong to the burn-in segment.
pub fn simulate(
    spec: &ModelSpec,
    gamma: &ParamVector,
    covariates: Option<&DMatrix<f64>>,
    n: usize,
    opts: &SimOptions,
) -> Result<Simulation> {
    spec.validate()?;
    gamma.check_spec(spec)?;
    if gamma.lambda < 1.0 && !opts.force_small_shape {
        return Err(Error::SmallShape(gamma.lambda));
    }
    let total = opts.burnin + n;
    let x = match covariates {
        Some(x) => {
            if x.nrows() != total || x.ncols() != spec.r {
                return Err(Error::Dimension(format!(
                    "covariate matrix is {}x{} but burn-in + n = {} rows and r = {} columns are needed",
                    x.nrows(),
                    x.ncols(),
                    total,
                    spec.r
                )));
            }
            x.clone()
        }
        None if spec.r == 0 => DMatrix::zeros(total, 0),
        None => {
            return Err(Error::Dimension(format!(
                "model has r = {} covariates but none were supplied",
                spec.r
            )))
        }
    };
    for warning in arma_root_warnings(&gamma.phi, &gamma.theta) {
        log::warn!("{warning}");
    }

    let link = spec.link;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x_beta = covariate_effect(&x, &gamma.beta);
    let mut g_y = vec![0.0; total];
    let mut resid = vec![0.0; total];
    let mut y = vec![0.0; total];
    let mut mu = vec![0.0; total];
    let mut clamp_events = 0;
    for t in 0..total {
        let eta = linear_predictor(t, gamma, &x_beta, &g_y, &resid);
        if !eta.is_finite() {
            return Err(Error::BoundaryCollapse {
                t: t + 1,
                detail: "linear predictor diverged during simulation".into(),
            });
        }
        mu[t] = saturate(link, eta, &mut clamp_events);
        let u: f64 = rng.sample(Open01);
        let draw = quantile_raw(u, mu[t], gamma.lambda, spec.rho);
        if draw <= f64::MIN_POSITIVE || draw >= 1.0 - f64::EPSILON / 2.0 {
            return Err(Error::BoundaryCollapse {
                t: t + 1,
                detail: format!("draw with mu_t = {:.3e} is not representable inside (0,1)", mu[t]),
            });
        }
        y[t] = draw;
        g_y[t] = link.apply(draw);
        resid[t] = g_y[t] - link.apply(mu[t]);
    }
    if clamp_events > 0 {
        log::warn!("{clamp_events} conditional quantiles saturated at the boundary during simulation");
    }

    let kept_x = x.rows(opts.burnin, n).into_owned();
    let data = SeriesData::new(y[opts.burnin..].to_vec(), kept_x)?;
    Ok(Simulation {
        data,
        mu: mu[opts.burnin..].to_vec(),
        full_y: y,
        full_mu: mu,
        burnin: opts.burnin,
        clamp_events,
    })
}

const ROOT_TOL: f64 = 1e-8;

/// Inverse roots of `1 - c_1 z - ... - c_k z^k`, i.e. eigenvalues of its companion matrix.
fn inverse_roots(coefs: &[f64]) -> Vec<nalgebra::Complex<f64>> {
    let k = coefs.len();
    if k == 0 {
        return Vec::new();
    }
    let mut companion = DMatrix::zeros(k, k);
    for (j, c) in coefs.iter().enumerate() {
        companion[(0, j)] = *c;
    }
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Classical ARMA sanity checks: AR unit roots and AR/MA common roots.
///
/// Returns human-readable warnings; an empty vector means both checks pass.
pub fn arma_root_warnings(phi: &[f64], theta: &[f64]) -> Vec<String> {
    let mut warnings = Vec::new();
    let ar = inverse_roots(phi);
    // MA polynomial is 1 + theta_1 z + ..., i.e. 1 - (-theta_1) z - ...
    let neg_theta: Vec<f64> = theta.iter().map(|t| -t).collect();
    let ma = inverse_roots(&neg_theta);
    for z in &ar {
        if (z.norm() - 1.0).abs() < ROOT_TOL {
            warnings.push(format!("AR polynomial has a unit root (inverse root {z})"));
        }
    }
    for a in &ar {
        for m in &ma {
            if (a - m).norm() < ROOT_TOL {
                warnings.push(format!("AR and MA polynomials share the root 1/({a})"));
            }
        }
    }
    warnings
}
