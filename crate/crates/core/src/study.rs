//! Monte Carlo harness: repeated simulate-then-fit experiments for parameter
//! recovery, and simulate-fit-forecast experiments for forecast accuracy.
//!
//! Replica `i` always uses seed `base_seed + i`, so a study is reproducible
//! regardless of whether replicas run in parallel.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_pmle, FitOptions};
use crate::forecast::{forecast_ahead, mape};
use crate::link::Link;
use crate::model::{simulate, ModelSpec, ParamVector, SimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Covariates {
    None,
    /// `x_t = sin(2 pi (t - shift) / period)`, `t = 1..n` for the retained sample.
    Sinusoid { period: f64, shift: f64 },
}

impl Covariates {
    pub fn monthly_sinusoid() -> Self {
        Covariates::Sinusoid {
            period: 12.0,
            shift: 6.0,
        }
    }

    pub fn r(&self) -> usize {
        match self {
            Covariates::None => 0,
            Covariates::Sinusoid { .. } => 1,
        }
    }

    /// Rows for times `first..first + len` (1-based, may be non-positive for burn-in).
    pub fn matrix(&self, first: i64, len: usize) -> DMatrix<f64> {
        match *self {
            Covariates::None => DMatrix::zeros(len, 0),
            Covariates::Sinusoid { period, shift } => DMatrix::from_fn(len, 1, |i, _| {
                let t = (first + i as i64) as f64;
                (2.0 * PI * (t - shift) / period).sin()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub replicas: usize,
    pub n: usize,
    pub rho: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub link: Link,
    pub burnin: usize,
    pub base_seed: u64,
    pub parallel: bool,
    pub covariates: Covariates,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            replicas: 100,
            n: 1000,
            rho: 0.5,
            lambda: 5.0,
            alpha: 0.0,
            beta: Vec::new(),
            phi: vec![0.6],
            theta: vec![0.4],
            link: Link::Logit,
            burnin: 1000,
            base_seed: 1,
            parallel: true,
            covariates: Covariates::None,
        }
    }
}

impl StudyConfig {
    pub fn spec(&self) -> Result<ModelSpec> {
        if self.beta.len() != self.covariates.r() {
            return Err(Error::Config(format!(
                "{} beta coefficients but the covariate generator provides {} columns",
                self.beta.len(),
                self.covariates.r()
            )));
        }
        ModelSpec::new(self.phi.len(), self.theta.len(), self.rho, self.link, self.beta.len())
    }

    pub fn gamma(&self) -> Result<ParamVector> {
        ParamVector::new(
            self.alpha,
            self.beta.clone(),
            self.phi.clone(),
            self.theta.clone(),
            self.lambda,
        )
    }

    pub fn seed(&self, replica: usize) -> u64 {
        self.base_seed.wrapping_add(replica as u64)
    }

    fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        self.spec()?;
        self.gamma()?;
        Ok(())
    }

    /// Parses a flat `key = value` file. Lists are comma separated; `#` starts a comment.
    ///
    /// Recognised keys: `replicas n rho lambda alpha beta phi theta link burnin
    /// base_seed parallel covariate` (`none` or `sinusoid`). Any other key is an
    /// error, except `horizons`, which is returned separately.
    pub fn from_kv_str(text: &str) -> Result<(Self, Option<Vec<usize>>)> {
        let mut cfg = StudyConfig {
            phi: Vec::new(),
            theta: Vec::new(),
            ..Default::default()
        };
        let mut horizons = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {}: invalid {what} `{value}`", lineno + 1));
            let float = || value.parse::<f64>().map_err(|_| bad(key));
            let list = || -> Result<Vec<f64>> {
                if value.is_empty() {
                    return Ok(Vec::new());
                }
                value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| bad(key)))
                    .collect()
            };
            match key {
                "replicas" => cfg.replicas = value.parse().map_err(|_| bad(key))?,
                "n" => cfg.n = value.parse().map_err(|_| bad(key))?,
                "burnin" => cfg.burnin = value.parse().map_err(|_| bad(key))?,
                "base_seed" | "seed" => cfg.base_seed = value.parse().map_err(|_| bad(key))?,
                "rho" => cfg.rho = float()?,
                "lambda" => cfg.lambda = float()?,
                "alpha" => cfg.alpha = float()?,
                "beta" => cfg.beta = list()?,
                "phi" => cfg.phi = list()?,
                "theta" => cfg.theta = list()?,
                "link" => cfg.link = value.parse()?,
                "parallel" => cfg.parallel = value.parse().map_err(|_| bad(key))?,
                "covariate" => {
                    cfg.covariates = match value {
                        "none" => Covariates::None,
                        "sinusoid" => Covariates::monthly_sinusoid(),
                        _ => return Err(bad(key)),
                    }
                }
                "horizons" => {
                    horizons = Some(
                        value
                            .split(',')
                            .map(|v| v.trim().parse::<usize>().map_err(|_| bad(key)))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok((cfg, horizons))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replica {
    pub index: usize,
    pub seed: u64,
    pub converged: bool,
    pub estimates: Vec<f64>,
    pub se: Vec<f64>,
    pub loglik: f64,
    /// MAPE over forecast steps `1..=h` for each requested horizon (forecast studies only).
    pub ape: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub true_value: f64,
    pub mean: f64,
    pub sd: f64,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub config: StudyConfig,
    pub params: Vec<ParamSummary>,
    /// Replicas that errored or did not converge; excluded from the aggregates.
    pub failures: usize,
    pub replicas: Vec<Replica>,
    pub horizons: Vec<usize>,
    /// Replica-averaged MAPE per horizon.
    pub mape: Vec<f64>,
}

impl StudySummary {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn converged(&self) -> impl Iterator<Item = &Replica> {
        self.replicas.iter().filter(|r| r.converged)
    }

    /// `parameter,mean,sd,bias,true_value`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("parameter,mean,sd,bias,true_value\n");
        for p in &self.params {
            let _ = writeln!(out, "{},{},{},{},{}", p.name, p.mean, p.sd, p.bias, p.true_value);
        }
        out
    }

    /// One row per replica per parameter: `replica,seed,converged,parameter,estimate,se`.
    pub fn replicas_csv(&self) -> String {
        let names = self.params.iter().map(|p| p.name.as_str()).collect::<Vec<_>>();
        let mut out = String::from("replica,seed,converged,parameter,estimate,se\n");
        for r in &self.replicas {
            for (j, name) in names.iter().enumerate() {
                let est = r.estimates.get(j).copied().unwrap_or(f64::NAN);
                let se = r.se.get(j).copied().unwrap_or(f64::NAN);
                let _ = writeln!(out, "{},{},{},{},{},{}", r.index, r.seed, r.converged, name, est, se);
            }
        }
        out
    }

    /// `horizon,mape`.
    pub fn mape_csv(&self) -> String {
        let mut out = String::from("horizon,mape\n");
        for (h, m) in self.horizons.iter().zip(&self.mape) {
            let _ = writeln!(out, "{h},{m}");
        }
        out
    }

    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: String, body: String| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
        };
        write(format!("{stem}_summary.csv"), self.summary_csv())?;
        write(format!("{stem}_replicas.csv"), self.replicas_csv())?;
        if !self.horizons.is_empty() {
            write(format!("{stem}_mape.csv"), self.mape_csv())?;
        }
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: dir.join(format!("{stem}_summary.json")),
            source: e,
        })?;
        write(format!("{stem}_summary.json"), json)
    }
}

fn run_replica(cfg: &StudyConfig, spec: &ModelSpec, gamma: &ParamVector, horizons: &[usize], index: usize, fit_opts: &FitOptions) -> Replica {
    let seed = cfg.seed(index);
    let max_h = horizons.iter().copied().max().unwrap_or(0);
    let total = cfg.n + max_h;
    let x = cfg.covariates.matrix(1 - cfg.burnin as i64, cfg.burnin + total);
    let sim_opts = SimOptions {
        burnin: cfg.burnin,
        seed,
        force_small_shape: false,
    };
    let outcome = (|| -> Result<(crate::fit::FitResult, Vec<f64>)> {
        let sim = simulate(spec, gamma, Some(&x), total, &sim_opts)?;
        let train = sim.data.window(0, cfg.n);
        let fit = fit_pmle(spec, &train, fit_opts)?;
        let mut errors = Vec::new();
        if max_h > 0 {
            let xf = sim.data.x.rows(cfg.n, max_h).into_owned();
            let fc = forecast_ahead(spec, &fit.gamma_hat, &train, max_h, Some(&xf))?;
            let actual = &sim.data.y[cfg.n..];
            errors = horizons
                .iter()
                .map(|&h| mape(&actual[..h], &fc.yhat[..h]))
                .collect::<Result<_>>()?;
        }
        Ok((fit, errors))
    })();
    match outcome {
        Ok((fit, errors)) => Replica {
            index,
            seed,
            converged: fit.converged,
            estimates: fit.estimates(),
            se: fit.se.clone(),
            loglik: fit.loglik,
            ape: errors,
            error: (!fit.converged).then(|| format!("optimizer stopped with {:?}", fit.termination)),
        },
        Err(e) => {
            log::warn!("replica {index} (seed {seed}) failed: {e}");
            Replica {
                index,
                seed,
                converged: false,
                estimates: Vec::new(),
                se: Vec::new(),
                loglik: f64::NAN,
                ape: Vec::new(),
                error: Some(e.to_string()),
            }
        }
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run(cfg: &StudyConfig, horizons: &[usize], fit_opts: &FitOptions) -> Result<StudySummary> {
    cfg.validate()?;
    if horizons.contains(&0) {
        return Err(Error::Config("forecast horizons must be positive".into()));
    }
    let spec = cfg.spec()?;
    let gamma = cfg.gamma()?;
    let replicas: Vec<Replica> = if cfg.parallel {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|i| run_replica(cfg, &spec, &gamma, horizons, i, fit_opts))
            .collect()
    } else {
        (0..cfg.replicas)
            .map(|i| run_replica(cfg, &spec, &gamma, horizons, i, fit_opts))
            .collect()
    };
    let ok: Vec<&Replica> = replicas.iter().filter(|r| r.converged).collect();
    let failures = replicas.len() - ok.len();
    if failures > 0 {
        log::warn!("{failures} of {} replicas failed or did not converge", replicas.len());
    }
    let names = spec.param_names(&[]);
    let truth = gamma.to_vec();
    let params = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let vals: Vec<f64> = ok.iter().map(|r| r.estimates[j]).collect();
            let (mean, sd) = mean_sd(&vals);
            ParamSummary {
                name,
                true_value: truth[j],
                mean,
                sd,
                bias: mean - truth[j],
            }
        })
        .collect();
    let mape = (0..horizons.len())
        .map(|k| ok.iter().map(|r| r.ape[k]).sum::<f64>() / ok.len() as f64)
        .collect();
    Ok(StudySummary {
        config: cfg.clone(),
        params,
        failures,
        replicas,
        horizons: horizons.to_vec(),
        mape,
    })
}

pub fn run_estimation_study(cfg: &StudyConfig, fit_opts: &FitOptions) -> Result<StudySummary> {
    run(cfg, &[], fit_opts)
}

/// Fits on `n` points and forecasts up to `max(horizons)` steps ahead. For each
/// listed horizon `h` the replica records the MAPE of its first `h` forecasts;
/// the summary averages these over converged replicas.
pub fn run_forecast_study(cfg: &StudyConfig, horizons: &[usize], fit_opts: &FitOptions) -> Result<StudySummary> {
    if horizons.is_empty() {
        return Err(Error::Config("forecast study needs at least one horizon".into()));
    }
    run(cfg, horizons, fit_opts)
}
