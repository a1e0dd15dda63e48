//! Partial maximum likelihood estimation and the inference built on it:
//! standard errors, confidence intervals, Wald tests, information criteria
//! and p-value driven backward elimination of covariates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{info_from_score, score, InfoMatrix};
use crate::link::{normal_quantile, normal_sf};
use crate::model::{ModelSpec, ParamVector, SeriesData};
use crate::optim::{bfgs, nelder_mead, Minimum, OptimOptions, Termination};

/// Condition number of `K_n` above which the likelihood is reported as flat.
pub const FLAT_CONDITION: f64 = 1e8;

const POLISH_STEPS: usize = 8;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, g| m.max(g.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub optim: OptimOptions,
    /// Restart from a Nelder–Mead solution when the quasi-Newton run fails.
    pub simplex_fallback: bool,
    /// Initial shape value.
    pub lambda_init: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optim: OptimOptions::default(),
            simplex_fallback: true,
            lambda_init: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub gamma_hat: ParamVector,
    pub loglik: f64,
    pub info: InfoMatrix,
    /// Standard errors; NaN when `K_n` cannot be inverted.
    pub se: Vec<f64>,
    /// Score at the estimate.
    pub score: Vec<f64>,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub evaluations: usize,
    pub clamp_events: usize,
    pub n: usize,
    pub condition_number: f64,
    /// Log-likelihood at the starting values.
    pub init_loglik: f64,
}

impl FitResult {
    pub fn flat_likelihood(&self) -> bool {
        !(self.condition_number <= FLAT_CONDITION)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.gamma_hat.to_vec()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn confidence_intervals(&self, level: f64) -> Result<Vec<ConfidenceInterval>> {
        let z = ci_multiplier(level)?;
        Ok(self
            .estimates()
            .into_iter()
            .zip(&self.se)
            .map(|(est, &se)| ConfidenceInterval {
                estimate: est,
                se,
                lo: est - z * se,
                hi: est + z * se,
            })
            .collect())
    }

    /// Wald z test of `H0: gamma_j = null`.
    pub fn wald_z(&self, j: usize, null: f64) -> WaldTest {
        let est = self.estimates()[j];
        wald_test(est, self.se[j], null)
    }

    pub fn information_criteria(&self) -> InformationCriteria {
        InformationCriteria::new(self.loglik, self.dim(), self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub se: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldTest {
    pub z: f64,
    pub p_value: f64,
}

pub fn wald_test(estimate: f64, se: f64, null: f64) -> WaldTest {
    if estimate == null {
        return WaldTest { z: 0.0, p_value: 1.0 };
    }
    let z = (estimate - null) / se;
    WaldTest {
        z,
        p_value: 2.0 * normal_sf(z.abs()),
    }
}

/// Two-sided normal multiplier `z_{1 - delta/2}` for confidence `level = 1 - delta`.
pub fn ci_multiplier(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter {
            name: "level",
            value: level,
            reason: "confidence level must lie in (0,1)",
        });
    }
    Ok(normal_quantile(1.0 - (1.0 - level) / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
    pub hqc: f64,
}

impl InformationCriteria {
    /// `k` is the number of estimated parameters, `n` the sample size.
    pub fn new(loglik: f64, k: usize, n: usize) -> Self {
        Self::from_real_n(loglik, k, n as f64)
    }

    pub fn from_real_n(loglik: f64, k: usize, n: f64) -> Self {
        let k = k as f64;
        Self {
            aic: -2.0 * loglik + 2.0 * k,
            bic: -2.0 * loglik + k * n.ln(),
            hqc: -2.0 * loglik + 2.0 * k * n.ln().ln(),
        }
    }
}

/// Starting values: OLS of `g(y_t)` on an intercept, `x_t` and `g(y_{t-1}), ..., g(y_{t-p})`
/// over `t = p+1..n`; `theta = 0` and `lambda = 10`.
pub fn init_params(spec: &ModelSpec, data: &SeriesData) -> Result<ParamVector> {
    init_params_with(spec, data, 10.0)
}

fn init_params_with(spec: &ModelSpec, data: &SeriesData, lambda: f64) -> Result<ParamVector> {
    data.check_spec(spec)?;
    let (n, p, r) = (data.len(), spec.p, spec.r);
    if n <= p + r + 1 {
        return Err(Error::Dimension(format!(
            "need more than p + r + 1 = {} observations to initialise, got {n}",
            p + r + 1
        )));
    }
    let g_y: Vec<f64> = data.y.iter().map(|&y| spec.link.apply(y)).collect();
    let rows = n - p;
    let cols = 1 + r + p;
    let mut design = DMatrix::<f64>::zeros(rows, cols);
    let mut resp = DVector::<f64>::zeros(rows);
    for (i, t) in (p..n).enumerate() {
        design[(i, 0)] = 1.0;
        for l in 0..r {
            design[(i, 1 + l)] = data.x[(t, l)];
        }
        for k in 0..p {
            design[(i, 1 + r + k)] = g_y[t - k - 1];
        }
        resp[i] = g_y[t];
    }
    let svd = design.svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    if svd.rank(tol) < cols {
        log::warn!("initial OLS design is rank deficient; using the pseudo-inverse solution");
    }
    let coef = svd
        .solve(&resp, tol)
        .map_err(|e| Error::Optimizer(format!("initial least squares failed: {e}")))?;
    ParamVector::new(
        coef[0],
        coef.rows(1, r).iter().copied().collect(),
        coef.rows(1 + r, p).iter().copied().collect(),
        vec![0.0; spec.q],
        lambda,
    )
}

fn to_internal(gamma: &ParamVector) -> Vec<f64> {
    let mut v = gamma.to_vec();
    let last = v.len() - 1;
    v[last] = v[last].ln();
    v
}

fn from_internal(spec: &ModelSpec, x: &[f64]) -> Option<ParamVector> {
    let mut v = x.to_vec();
    let last = v.len() - 1;
    v[last] = v[last].exp();
    ParamVector::from_slice(spec, &v).ok()
}

/// Negative log-likelihood and its gradient in the internal `(nu, log lambda)` coordinates.
fn objective(spec: &ModelSpec, data: &SeriesData, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let gamma = from_internal(spec, x)?;
    let s = score(spec, &gamma, data).ok()?;
    let last = s.grad.len() - 1;
    let mut g: Vec<f64> = s.grad.iter().map(|v| -v).collect();
    g[last] *= gamma.lambda;
    Some((-s.loglik, g))
}

/// Maximizes the partial log-likelihood.
///
/// Non-convergence is not an error: the best point found is returned with
/// `converged = false`.
pub fn fit_pmle(spec: &ModelSpec, data: &SeriesData, opts: &FitOptions) -> Result<FitResult> {
    spec.validate()?;
    data.check_spec(spec)?;
    let n = data.len();
    if n < 10 * spec.dim() {
        log::warn!(
            "only {n} observations for {} parameters; estimates may be unreliable",
            spec.dim()
        );
    }
    let mut start = init_params_with(spec, data, opts.lambda_init)?;
    let mut init_eval = objective(spec, data, &to_internal(&start));
    if init_eval.is_none() {
        // OLS start can push mu_t to the boundary; fall back to a pure intercept start
        start.phi.iter_mut().for_each(|v| *v = 0.0);
        start.beta.iter_mut().for_each(|v| *v = 0.0);
        start.alpha = data.y.iter().map(|&y| spec.link.apply(y)).sum::<f64>() / n as f64;
        init_eval = objective(spec, data, &to_internal(&start));
    }
    let Some((init_neg, _)) = init_eval else {
        return Err(Error::Optimizer(
            "log-likelihood is not finite at the starting values".into(),
        ));
    };

    let x0 = to_internal(&start);
    let f = |x: &[f64]| objective(spec, data, x);
    let mut best = bfgs(f, &x0, &opts.optim);
    let mut iterations = best.iterations;
    let mut evaluations = best.evaluations;
    if !best.termination.converged() && opts.simplex_fallback {
        log::info!(
            "quasi-Newton stopped with {:?}; restarting from a simplex search",
            best.termination
        );
        let nm = nelder_mead(
            |x| objective(spec, data, x).map_or(f64::INFINITY, |(v, _)| v),
            &best.x,
            0.1,
            400 * x0.len(),
            1e-12,
        );
        evaluations += nm.evaluations;
        let restart: Minimum = bfgs(|x: &[f64]| objective(spec, data, x), &nm.x, &opts.optim);
        iterations += nm.iterations + restart.iterations;
        evaluations += restart.evaluations;
        if restart.f <= best.f || restart.termination.converged() {
            best = restart;
        }
    }

    let mut gamma_hat = from_internal(spec, &best.x).ok_or_else(|| Error::Optimizer("invalid final parameters".into()))?;
    let mut s = score(spec, &gamma_hat, data)?;
    if best.termination.converged() {
        // a relative-change stop can leave the score above grad_tol; finish with scoring steps
        for _ in 0..POLISH_STEPS {
            let g_norm = max_abs(&s.grad);
            if g_norm < opts.optim.grad_tol {
                break;
            }
            let Ok(inv) = info_from_score(spec, &gamma_hat, &s).inverse() else { break };
            let step = inv * DVector::from_column_slice(&s.grad);
            let v: Vec<f64> = gamma_hat.to_vec().iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let Ok(cand) = ParamVector::from_slice(spec, &v) else { break };
            match score(spec, &cand, data) {
                Ok(cs) if cs.loglik >= s.loglik - 1e-12 * s.loglik.abs() && max_abs(&cs.grad) < g_norm => {
                    gamma_hat = cand;
                    s = cs;
                    evaluations += 1;
                }
                _ => break,
            }
        }
    }
    let info = info_from_score(spec, &gamma_hat, &s);
    let se = match info.inverse() {
        Ok(inv) => (0..spec.dim()).map(|j| inv[(j, j)].sqrt()).collect(),
        Err(e) => {
            log::warn!("{e}; standard errors are not available");
            vec![f64::NAN; spec.dim()]
        }
    };
    let condition_number = info.condition_number();
    if !(condition_number <= FLAT_CONDITION) {
        log::warn!("information matrix condition number {condition_number:.3e}: flat likelihood surface");
    }
    Ok(FitResult {
        spec: *spec,
        gamma_hat,
        loglik: s.loglik,
        info,
        se,
        score: s.grad,
        converged: best.termination.converged(),
        termination: best.termination,
        iterations,
        evaluations,
        clamp_events: s.filter.clamp_events,
        n,
        condition_number,
        init_loglik: -init_neg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    /// Covariate name as it appeared in the data.
    pub name: String,
    pub p_value: f64,
}

#[derive(Debug, Clone)]
pub struct Elimination {
    pub fit: FitResult,
    /// Removed covariates in removal order.
    pub trace: Vec<Removal>,
    /// Data restricted to the retained covariates.
    pub data: SeriesData,
}

/// Refits repeatedly, dropping the covariate with the largest Wald p-value
/// above `p_threshold`, until every remaining covariate is significant.
///
/// Only regression coefficients are candidates; intercept, AR, MA and shape
/// terms always stay. A covariate without a standard error counts as p = 1.
pub fn backward_eliminate(spec: &ModelSpec, data: &SeriesData, p_threshold: f64, opts: &FitOptions) -> Result<Elimination> {
    let mut current = data.clone();
    let mut trace = Vec::new();
    loop {
        let spec_now = spec.with_covariates(current.r());
        let fit = fit_pmle(&spec_now, &current, opts)?;
        let worst = (0..current.r())
            .map(|l| {
                let p = fit.wald_z(1 + l, 0.0).p_value;
                (l, if p.is_nan() { 1.0 } else { p })
            })
            .filter(|&(_, p)| p > p_threshold)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            None => {
                return Ok(Elimination {
                    fit,
                    trace,
                    data: current,
                })
            }
            Some((l, p_value)) => {
                trace.push(Removal {
                    name: current.names[l].clone(),
                    p_value,
                });
                let keep: Vec<usize> = (0..current.r()).filter(|&c| c != l).collect();
                current = current.select_columns(&keep);
            }
        }
    }
}
