//! File formats: dataset CSVs, covariate transformations and lag expansion,
//! and the JSON result file written by `fit` and `select`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{FitResult, Removal};
use crate::link::Link;
use crate::model::{ModelSpec, ParamVector, SeriesData};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadOptions {
    /// Divide the response by 100 (series published in percent).
    pub rescale_percent: bool,
}

/// A loaded dataset: the series plus the optional pass-through date column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub data: SeriesData,
    pub dates: Option<Vec<String>>,
}

impl Dataset {
    pub fn window(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            data: self.data.window(start, end),
            dates: self.dates.as_ref().map(|d| d[start..end].to_vec()),
        }
    }
}

fn data_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a dataset CSV. The response is the column named `y` (or, failing
/// that, the first column that is not `date`); every other column except
/// `date` is a covariate.
pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, path, opts)
}

/// As [`load_csv`], reading from any reader; `label` is used in error messages.
pub fn read_csv<R: Read>(reader: R, label: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            path: label.to_path_buf(),
            source: e,
        })?
        .clone();
    let date_col = headers.iter().position(|h| h.eq_ignore_ascii_case("date"));
    let y_col = headers
        .iter()
        .position(|h| h == "y")
        .or_else(|| (0..headers.len()).find(|&c| Some(c) != date_col))
        .ok_or_else(|| data_err(label, 1, "no response column"))?;
    let cov_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != y_col && Some(c) != date_col).collect();
    let names: Vec<String> = cov_cols.iter().map(|&c| headers[c].to_string()).collect();

    let mut y = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    let mut dates = date_col.map(|_| Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            path: label.to_path_buf(),
            source: e,
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan") {
                return Err(data_err(label, line, format!("missing value in column `{}`", &headers[c])));
            }
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| data_err(label, line, format!("column `{}`: cannot parse `{raw}` as a number", &headers[c])))
        };
        let mut v = field(y_col)?;
        if opts.rescale_percent {
            v /= 100.0;
        }
        if v == 0.0 || v == 1.0 {
            return Err(data_err(
                label,
                line,
                format!(
                    "response {v} lies on the boundary of (0,1); the likelihood is unbounded there. \
                     Remove or nudge the observation{}",
                    if opts.rescale_percent { "" } else { ", or pass --rescale-percent if y is in percent" }
                ),
            ));
        }
        if !(v > 0.0 && v < 1.0) {
            return Err(data_err(
                label,
                line,
                format!(
                    "response {v} is outside (0,1){}",
                    if opts.rescale_percent || v <= 0.0 { "" } else { "; pass --rescale-percent for percentages" }
                ),
            ));
        }
        y.push(v);
        for &c in &cov_cols {
            xs.push(field(c)?);
        }
        if let (Some(d), Some(col)) = (dates.as_mut(), date_col) {
            d.push(rec.get(col).unwrap_or("").to_string());
        }
    }
    if y.is_empty() {
        return Err(data_err(label, 1, "no data rows"));
    }
    let x = DMatrix::from_row_slice(y.len(), cov_cols.len(), &xs);
    Ok(Dataset {
        data: SeriesData::with_names(y, x, names)?,
        dates,
    })
}

/// CSV text for a dataset: `[date,]y,covariates...`. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn dataset_csv(ds: &Dataset) -> String {
    let mut out = String::new();
    if ds.dates.is_some() {
        out.push_str("date,");
    }
    out.push('y');
    for name in &ds.data.names {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for t in 0..ds.data.len() {
        if let Some(d) = &ds.dates {
            let _ = write!(out, "{},", d[t]);
        }
        let _ = write!(out, "{}", ds.data.y[t]);
        for c in 0..ds.data.r() {
            let _ = write!(out, ",{}", ds.data.x[(t, c)]);
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    write_file(path.as_ref(), &dataset_csv(ds))
}

pub(crate) fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Transformation codes for covariates: 1 level, 2 first difference,
/// 5 difference of logs, 6 second difference of logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tcode {
    Level,
    Diff,
    DiffLog,
    Diff2Log,
}

impl Tcode {
    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(Tcode::Level),
            2 => Ok(Tcode::Diff),
            5 => Ok(Tcode::DiffLog),
            6 => Ok(Tcode::Diff2Log),
            other => Err(Error::Config(format!("unsupported tcode {other} (expected 1, 2, 5 or 6)"))),
        }
    }

    /// Leading observations lost to differencing.
    pub fn lost(self) -> usize {
        match self {
            Tcode::Level => 0,
            Tcode::Diff | Tcode::DiffLog => 1,
            Tcode::Diff2Log => 2,
        }
    }

    /// Transformed series of the same length, NaN where undefined.
    pub fn apply(self, x: &[f64]) -> Result<Vec<f64>> {
        let logs = || -> Result<Vec<f64>> {
            x.iter()
                .map(|&v| {
                    if v > 0.0 {
                        Ok(v.ln())
                    } else {
                        Err(Error::Domain {
                            value: v,
                            context: "log transform of a covariate",
                        })
                    }
                })
                .collect()
        };
        let diff = |v: &[f64]| -> Vec<f64> {
            (0..v.len()).map(|t| if t == 0 { f64::NAN } else { v[t] - v[t - 1] }).collect()
        };
        Ok(match self {
            Tcode::Level => x.to_vec(),
            Tcode::Diff => diff(x),
            Tcode::DiffLog => diff(&logs()?),
            Tcode::Diff2Log => diff(&diff(&logs()?)),
        })
    }
}

/// Parses `name=code,name=code`.
pub fn parse_tcode_map(text: &str) -> Result<BTreeMap<String, Tcode>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (name, code) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("tcode entry `{pair}` is not name=code")))?;
            let code = code
                .trim()
                .parse::<u8>()
                .map_err(|_| Error::Config(format!("tcode entry `{pair}`: code is not an integer")))?;
            Ok((name.trim().to_string(), Tcode::from_code(code)?))
        })
        .collect()
}

/// Applies per-covariate transformations and then expands each covariate into
/// lags `1..=lags`, named `var_lag1..var_lagk`. Leading rows that any
/// transformation or lag leaves undefined are dropped from the whole dataset.
pub fn prepare_covariates(ds: &Dataset, tcodes: &BTreeMap<String, Tcode>, lags: usize) -> Result<Dataset> {
    let data = &ds.data;
    for name in tcodes.keys() {
        if !data.names.contains(name) {
            return Err(Error::Config(format!("tcode given for unknown column `{name}`")));
        }
    }
    let n = data.len();
    let mut cols = Vec::with_capacity(data.r());
    let mut lost = 0;
    for (c, name) in data.names.iter().enumerate() {
        let code = tcodes.get(name).copied().unwrap_or(Tcode::Level);
        lost = lost.max(code.lost());
        let raw: Vec<f64> = data.x.column(c).iter().copied().collect();
        cols.push(code.apply(&raw)?);
    }
    let drop = lost + lags;
    if drop >= n {
        return Err(Error::Dimension(format!(
            "{n} observations leave nothing after dropping {drop} leading rows"
        )));
    }
    let rows = n - drop;
    let (x, names) = if lags == 0 {
        let x = DMatrix::from_fn(rows, cols.len(), |t, c| cols[c][t + drop]);
        (x, data.names.clone())
    } else {
        let x = DMatrix::from_fn(rows, cols.len() * lags, |t, j| {
            let (c, l) = (j / lags, j % lags + 1);
            cols[c][t + drop - l]
        });
        let names = data
            .names
            .iter()
            .flat_map(|name| (1..=lags).map(move |l| format!("{name}_lag{l}")))
            .collect();
        (x, names)
    };
    Ok(Dataset {
        data: SeriesData::with_names(data.y[drop..].to_vec(), x, names)?,
        dates: ds.dates.as_ref().map(|d| d[drop..].to_vec()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub p: usize,
    pub q: usize,
    pub rho: f64,
    pub link: Link,
    pub covariates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub termination: String,
    pub iterations: usize,
    pub evaluations: usize,
    pub clamp_events: usize,
    pub condition_number: Option<f64>,
    pub flat_likelihood: bool,
    pub max_abs_score: Option<f64>,
}

/// Everything needed to report a fit and to forecast from it later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub tool: String,
    pub version: String,
    pub spec: SpecEcho,
    pub data_file: Option<String>,
    pub n: usize,
    pub seed: Option<u64>,
    pub level: f64,
    pub parameters: Vec<ParamRow>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub hqc: f64,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eliminated: Option<Vec<Removal>>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl ResultFile {
    pub fn from_fit(fit: &FitResult, covariates: &[String], level: f64) -> Result<Self> {
        let names = fit.spec.param_names(covariates);
        let cis = fit.confidence_intervals(level)?;
        let est = fit.estimates();
        let parameters = names
            .into_iter()
            .enumerate()
            .map(|(j, name)| {
                let w = fit.wald_z(j, 0.0);
                ParamRow {
                    name,
                    estimate: est[j],
                    se: finite(fit.se[j]),
                    ci_lower: finite(cis[j].lo),
                    ci_upper: finite(cis[j].hi),
                    z: finite(w.z),
                    p_value: finite(w.p_value),
                }
            })
            .collect();
        let ic = fit.information_criteria();
        Ok(Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            spec: SpecEcho {
                p: fit.spec.p,
                q: fit.spec.q,
                rho: fit.spec.rho,
                link: fit.spec.link,
                covariates: covariates.to_vec(),
            },
            data_file: None,
            n: fit.n,
            seed: None,
            level,
            parameters,
            loglik: fit.loglik,
            aic: ic.aic,
            bic: ic.bic,
            hqc: ic.hqc,
            diagnostics: Diagnostics {
                converged: fit.converged,
                termination: format!("{:?}", fit.termination),
                iterations: fit.iterations,
                evaluations: fit.evaluations,
                clamp_events: fit.clamp_events,
                condition_number: finite(fit.condition_number),
                flat_likelihood: fit.flat_likelihood(),
                max_abs_score: finite(fit.score.iter().fold(0.0f64, |m, g| m.max(g.abs()))),
            },
            eliminated: None,
        })
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(self.spec.p, self.spec.q, self.spec.rho, self.spec.link, self.spec.covariates.len())
    }

    pub fn gamma(&self) -> Result<ParamVector> {
        let spec = self.model_spec()?;
        let v: Vec<f64> = self.parameters.iter().map(|r| r.estimate).collect();
        ParamVector::from_slice(&spec, &v)
    }

    /// Restricts `data` to this model's covariates, by name and in model order.
    pub fn select_data(&self, data: &SeriesData) -> Result<SeriesData> {
        let idx = self
            .spec
            .covariates
            .iter()
            .map(|name| {
                data.names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::Config(format!("data has no covariate column `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(data.select_columns(&idx))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result file serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: PathBuf::from(path),
            source: e,
        })
    }
}

/// `step,yhat`, with `date` carried through when the caller supplies one.
pub fn forecast_csv(yhat: &[f64]) -> String {
    let mut out = String::from("step,yhat\n");
    for (k, y) in yhat.iter().enumerate() {
        let _ = writeln!(out, "{},{}", k + 1, y);
    }
    out
}
