//! The Unit-Weibull distribution parameterized by a fixed quantile.
//!
//! If `Y ~ UW(mu, lambda; rho)` then `P(Y <= mu) = rho` exactly. With
//! `A = log(y) / log(mu)` the density is
//!
//! ```text
//! f(y) = (lambda / y) * (log rho / log mu) * A^(lambda - 1) * rho^(A^lambda),   0 < y < 1
//! ```
//!
//! and the distribution function is `F(y) = rho^(A^lambda)`. The transformed
//! variable `A^lambda` is exponential with rate `-log rho`, which gives the
//! closed-form expectations in [`log_ratio_moment`].

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Lower floor applied to `A = log y / log mu` before taking logarithms.
pub(crate) const LOG_RATIO_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UwParams {
    mu: f64,
    lambda: f64,
    rho: f64,
}

impl UwParams {
    pub fn new(mu: f64, lambda: f64, rho: f64) -> Result<Self> {
        check_unit("mu", mu)?;
        check_unit("rho", rho)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "shape must be positive and finite",
            });
        }
        Ok(Self { mu, lambda, rho })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn log_pdf(&self, y: f64) -> Result<f64> {
        check_open(y, "log_pdf argument")?;
        Ok(log_density(y.ln(), self.mu.ln(), self.lambda, self.rho.ln()))
    }

    pub fn pdf(&self, y: f64) -> Result<f64> {
        self.log_pdf(y).map(f64::exp)
    }

    pub fn cdf(&self, y: f64) -> Result<f64> {
        check_open(y, "cdf argument")?;
        let log_a = log_ratio(y.ln(), self.mu.ln());
        Ok((self.rho.ln() * (self.lambda * log_a).exp()).exp())
    }

    /// Inverse of [`cdf`](Self::cdf): `mu^((log u / log rho)^(1/lambda))`.
    ///
    /// Written as a power of `mu` so that `quantile(rho) == mu` holds bit for bit.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_open(u, "quantile level")?;
        Ok(self.quantile_unchecked(u))
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        quantile_raw(u, self.mu, self.lambda, self.rho)
    }

    /// `count` independent draws by inverse-transform sampling, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile_unchecked(u)
            })
            .collect()
    }

    pub fn log_ratio_moment(&self, which: LogRatioMoment) -> f64 {
        log_ratio_moment(which, self.lambda, self.rho)
    }
}

#[inline]
pub(crate) fn quantile_raw(u: f64, mu: f64, lambda: f64, rho: f64) -> f64 {
    let power = (u.ln() / rho.ln()).powf(lambda.recip());
    mu.powf(power).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `log(log y / log mu)` evaluated as a difference of logs, floored at `log(1e-300)`.
#[inline]
pub(crate) fn log_ratio(log_y: f64, log_mu: f64) -> f64 {
    ((-log_y).ln() - (-log_mu).ln()).max(LOG_RATIO_FLOOR.ln())
}

/// Log density from pre-computed logarithms; no domain checks.
#[inline]
pub(crate) fn log_density(log_y: f64, log_mu: f64, lambda: f64, log_rho: f64) -> f64 {
    let log_a = log_ratio(log_y, log_mu);
    let a_pow = (lambda * log_a).exp();
    lambda.ln() - log_y + (log_rho / log_mu).ln() + (lambda - 1.0) * log_a + log_rho * a_pow
}

/// Expectations of functions of `A = log Y / log mu` under `UW(mu, lambda; rho)`.
///
/// None of them depend on `mu`. Writing `c = -log rho` and `L = log c`:
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogRatioMoment {
    /// `E[A^lambda] = 1/c`.
    Power,
    /// `E[log A] = -(kappa + L) / lambda`.
    Log,
    /// `E[A^lambda log A] = (1 - kappa - L) / (lambda c)`.
    PowerLog,
    /// `E[A^lambda (log A)^2] = (pi^2/6 + (kappa - 2) kappa + L (L + 2 kappa - 2)) / (lambda^2 c)`.
    PowerLogSquared,
}

impl LogRatioMoment {
    pub const ALL: [LogRatioMoment; 4] = [
        LogRatioMoment::Power,
        LogRatioMoment::Log,
        LogRatioMoment::PowerLog,
        LogRatioMoment::PowerLogSquared,
    ];
}

pub fn log_ratio_moment(which: LogRatioMoment, lambda: f64, rho: f64) -> f64 {
    let kappa = EULER_GAMMA;
    let log_rho = rho.ln();
    let l = (-log_rho).ln();
    match which {
        LogRatioMoment::Power => -1.0 / log_rho,
        LogRatioMoment::Log => -(kappa + l) / lambda,
        LogRatioMoment::PowerLog => (kappa + l - 1.0) / (lambda * log_rho),
        LogRatioMoment::PowerLogSquared => {
            -(PI * PI + 6.0 * (kappa - 2.0) * kappa + 6.0 * l * (l + 2.0 * kappa - 2.0))
                / (6.0 * lambda * lambda * log_rho)
        }
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must lie strictly inside (0,1)",
        })
    }
}

fn check_open(v: f64, context: &'static str) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { value: v, context })
    }
}
