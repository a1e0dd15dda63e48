//! Partial log-likelihood, analytic score and the cumulative partial
//! information matrix.
//!
//! With `A_t = log y_t / log mu_t` the contribution of one observation is
//!
//! ```text
//! l_t = log(lambda) - log(y_t) + log(log rho / log mu_t) + (lambda - 1) log(A_t) + log(rho) A_t^lambda
//! ```
//!
//! Derivatives with respect to the linear-predictor coefficients go through
//! `dl_t/dmu_t * 1/g'(mu_t) * deta_t/dnu` where `deta_t/dnu` obeys an MA-type
//! recursion started at zero.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dist::{log_density, log_ratio, log_ratio_moment, LogRatioMoment, EULER_GAMMA};
use crate::error::{Error, Result};
use crate::model::{filter_series, FilterOutput, ModelSpec, ParamVector, SeriesData};

#[derive(Debug, Clone)]
pub struct ScoreOutput {
    pub loglik: f64,
    /// `U(gamma)` in `(alpha, beta, phi, theta, lambda)` order.
    pub grad: Vec<f64>,
    /// `n x (r + p + q + 1)` matrix of `d eta_t / d nu_j`.
    pub eta_jacobian: DMatrix<f64>,
    pub filter: FilterOutput,
}

/// Cumulative partial information matrix `K_n(gamma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    pub k: DMatrix<f64>,
}

impl InfoMatrix {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn nu_nu(&self) -> DMatrix<f64> {
        let m = self.dim() - 1;
        self.k.view((0, 0), (m, m)).into_owned()
    }

    pub fn nu_lambda(&self) -> DVector<f64> {
        let m = self.dim() - 1;
        self.k.view((0, m), (m, 1)).column(0).into_owned()
    }

    pub fn lambda_lambda(&self) -> f64 {
        let m = self.dim() - 1;
        self.k[(m, m)]
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(self.k.clone()).eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().min()
    }

    /// Ratio of the largest to the smallest eigenvalue; infinite when not positive definite.
    pub fn condition_number(&self) -> f64 {
        let ev = self.eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// `K_n^{-1}` via Cholesky; fails when the matrix is not positive definite.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        match self.k.clone().cholesky() {
            Some(ch) => Ok(ch.inverse()),
            None => Err(Error::SingularInformation {
                min_eigenvalue: self.min_eigenvalue(),
            }),
        }
    }

    pub fn scaled(&self, factor: f64) -> InfoMatrix {
        InfoMatrix { k: &self.k * factor }
    }
}

/// `-E(d^2 l_t / d mu_t^2 | F_{t-1}) = lambda^2 / (mu^2 log^2 mu)`.
pub fn mu_information(mu: f64, lambda: f64) -> f64 {
    let s = mu * mu.ln();
    lambda * lambda / (s * s)
}

/// `-E(d^2 l_t / d mu_t d lambda | F_{t-1}) = (kappa + log(-log rho) - 1) / (mu log mu)`.
pub fn mu_lambda_information(mu: f64, rho: f64) -> f64 {
    (EULER_GAMMA + (-rho.ln()).ln() - 1.0) / (mu * mu.ln())
}

/// `-E(d^2 l_t / d lambda^2 | F_{t-1})`, one observation.
///
/// Equals `1/lambda^2 - log(rho) E[A^lambda (log A)^2]`.
pub fn lambda_information(lambda: f64, rho: f64) -> f64 {
    1.0 / (lambda * lambda) - rho.ln() * log_ratio_moment(LogRatioMoment::PowerLogSquared, lambda, rho)
}

fn loglik_from_filter(spec: &ModelSpec, gamma: &ParamVector, data: &SeriesData, f: &FilterOutput) -> Result<f64> {
    let log_rho = spec.rho.ln();
    let mut total = 0.0;
    for (t, (&y, &mu)) in data.y.iter().zip(&f.mu).enumerate() {
        let lt = log_density(y.ln(), mu.ln(), gamma.lambda, log_rho);
        if !lt.is_finite() {
            return Err(Error::BoundaryCollapse {
                t: t + 1,
                detail: format!("log-likelihood term is {lt} (y_t = {y}, mu_t = {mu})"),
            });
        }
        total += lt;
    }
    Ok(total)
}

pub fn partial_loglik(spec: &ModelSpec, gamma: &ParamVector, data: &SeriesData) -> Result<f64> {
    let f = filter_series(spec, gamma, data)?;
    loglik_from_filter(spec, gamma, data, &f)
}

fn eta_gradients_from_filter(spec: &ModelSpec, gamma: &ParamVector, data: &SeriesData, f: &FilterOutput) -> DMatrix<f64> {
    let n = data.len();
    let (r, p, q) = (spec.r, spec.p, spec.q);
    let m = spec.dim_nu();
    let mut d = DMatrix::<f64>::zeros(n, m);
    for t in 0..n {
        d[(t, 0)] = 1.0;
        for l in 0..r {
            let mut v = data.x[(t, l)];
            for (i, phi) in gamma.phi.iter().enumerate() {
                if t > i {
                    v -= phi * data.x[(t - i - 1, l)];
                }
            }
            d[(t, 1 + l)] = v;
        }
        for k in 0..p {
            if t > k {
                d[(t, 1 + r + k)] = f.g_y[t - k - 1] - f.x_beta[t - k - 1];
            }
        }
        for s in 0..q {
            if t > s {
                d[(t, 1 + r + p + s)] = f.resid[t - s - 1];
            }
        }
        for (j, theta) in gamma.theta.iter().enumerate() {
            if t > j {
                for c in 0..m {
                    let prev = d[(t - j - 1, c)];
                    d[(t, c)] -= theta * prev;
                }
            }
        }
    }
    d
}

/// `d eta_t / d nu_j` for `nu = (alpha, beta, phi, theta)`.
pub fn eta_gradients(spec: &ModelSpec, gamma: &ParamVector, data: &SeriesData) -> Result<DMatrix<f64>> {
    let f = filter_series(spec, gamma, data)?;
    Ok(eta_gradients_from_filter(spec, gamma, data, &f))
}

pub fn score(spec: &ModelSpec, gamma: &ParamVector, data: &SeriesData) -> Result<ScoreOutput> {
    let f = filter_series(spec, gamma, data)?;
    let loglik = loglik_from_filter(spec, gamma, data, &f)?;
    let d = eta_gradients_from_filter(spec, gamma, data, &f);
    let lambda = gamma.lambda;
    let log_rho = spec.rho.ln();
    let m = spec.dim_nu();

    let mut grad = vec![0.0; m + 1];
    for (t, (&y, &mu)) in data.y.iter().zip(&f.mu).enumerate() {
        let log_mu = mu.ln();
        let log_a = log_ratio(y.ln(), log_mu);
        let a_pow = (lambda * log_a).exp();
        // dl/dmu * dmu/deta
        let h1 = -lambda * (1.0 + log_rho * a_pow) / (mu * log_mu);
        let w = h1 / spec.link.derivative(mu);
        for (j, g) in grad.iter_mut().take(m).enumerate() {
            *g += w * d[(t, j)];
        }
        grad[m] += 1.0 / lambda + (1.0 + a_pow * log_rho) * log_a;
    }
    Ok(ScoreOutput {
        loglik,
        grad,
        eta_jacobian: d,
        filter: f,
    })
}

/// Assembles `K_n` from a previously computed score evaluation at the same `gamma`.
pub fn info_from_score(spec: &ModelSpec, gamma: &ParamVector, s: &ScoreOutput) -> InfoMatrix {
    let m = spec.dim_nu();
    let n = s.filter.mu.len();
    let lambda = gamma.lambda;
    let mut k = DMatrix::<f64>::zeros(m + 1, m + 1);
    for t in 0..n {
        let mu = s.filter.mu[t];
        let inv_gp = 1.0 / spec.link.derivative(mu);
        let w_nn = mu_information(mu, lambda) * inv_gp * inv_gp;
        let w_nl = mu_lambda_information(mu, spec.rho) * inv_gp;
        let row = s.eta_jacobian.row(t);
        for i in 0..m {
            let di = row[i];
            for j in i..m {
                k[(i, j)] += w_nn * di * row[j];
            }
            k[(i, m)] += w_nl * di;
        }
    }
    k[(m, m)] = n as f64 * lambda_information(lambda, spec.rho);
    k.fill_lower_triangle_with_upper_triangle();
    InfoMatrix { k }
}

pub fn info_matrix(spec: &ModelSpec, gamma: &ParamVector, data: &SeriesData) -> Result<InfoMatrix> {
    let s = score(spec, gamma, data)?;
    Ok(info_from_score(spec, gamma, &s))
}
