//! Link functions mapping the conditional quantile in (0,1) to the real line.
//!
//! All four links are strictly increasing. `loglog` is taken as
//! `-log(-log mu)` so that it shares that orientation with the others.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Saturation margin for inverse links: outputs are kept in `[EPS, 1 - EPS]`.
pub const MU_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    #[default]
    Logit,
    Probit,
    LogLog,
    CLogLog,
}

impl Link {
    pub const ALL: [Link; 4] = [Link::Logit, Link::Probit, Link::LogLog, Link::CLogLog];

    pub fn name(self) -> &'static str {
        match self {
            Link::Logit => "logit",
            Link::Probit => "probit",
            Link::LogLog => "loglog",
            Link::CLogLog => "cloglog",
        }
    }

    /// `g(mu)`, checking that `mu` is inside (0,1).
    pub fn eval(self, mu: f64) -> Result<f64> {
        check(mu)?;
        Ok(self.apply(mu))
    }

    /// `g'(mu)`, checking that `mu` is inside (0,1).
    pub fn deriv(self, mu: f64) -> Result<f64> {
        check(mu)?;
        Ok(self.derivative(mu))
    }

    /// `g(mu)` without domain checks; endpoints map to infinities.
    #[inline]
    pub fn apply(self, mu: f64) -> f64 {
        match self {
            Link::Logit => (mu / (1.0 - mu)).ln(),
            Link::Probit => normal_quantile(mu),
            Link::LogLog => -(-mu.ln()).ln(),
            Link::CLogLog => (-(-mu).ln_1p()).ln(),
        }
    }

    /// `g^{-1}(eta)`, saturated to `[MU_EPS, 1 - MU_EPS]`.
    #[inline]
    pub fn inverse(self, eta: f64) -> f64 {
        self.inverse_raw(eta).clamp(MU_EPS, 1.0 - MU_EPS)
    }

    /// Unsaturated inverse; may return exactly 0 or 1 for extreme `eta`.
    #[inline]
    pub fn inverse_raw(self, eta: f64) -> f64 {
        match self {
            Link::Logit => {
                if eta >= 0.0 {
                    1.0 / (1.0 + (-eta).exp())
                } else {
                    let e = eta.exp();
                    e / (1.0 + e)
                }
            }
            Link::Probit => normal_cdf(eta),
            Link::LogLog => (-(-eta).exp()).exp(),
            Link::CLogLog => -(-eta.exp()).exp_m1(),
        }
    }

    #[inline]
    pub fn derivative(self, mu: f64) -> f64 {
        match self {
            Link::Logit => 1.0 / (mu * (1.0 - mu)),
            Link::Probit => 1.0 / normal_pdf(normal_quantile(mu)),
            Link::LogLog => -1.0 / (mu * mu.ln()),
            Link::CLogLog => -1.0 / ((1.0 - mu) * (-mu).ln_1p()),
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logit" => Ok(Link::Logit),
            "probit" => Ok(Link::Probit),
            "loglog" => Ok(Link::LogLog),
            "cloglog" => Ok(Link::CLogLog),
            other => Err(Error::Config(format!(
                "unknown link `{other}` (expected logit, probit, loglog or cloglog)"
            ))),
        }
    }
}

fn check(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            value: mu,
            context: "link argument",
        })
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal quantile.
///
/// Acklam's rational approximation (relative error below 1.15e-9 over the
/// whole range) followed by one Halley step against `erfc`, which brings the
/// result to within a few ulps.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p.is_nan() {
        return f64::NAN;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        let q = (-2.0 * q.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail(p)
    } else if p > 1.0 - P_LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // Halley refinement; work in the smaller tail to avoid cancellation.
    let (e, sign) = if p <= 0.5 {
        (normal_cdf(x) - p, 1.0)
    } else {
        (normal_sf(x) - (1.0 - p), -1.0)
    };
    let u = sign * e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}
