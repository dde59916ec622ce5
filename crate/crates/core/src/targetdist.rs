//! Target distributions for quantile matching.
//!
//! A target `G` is used only through its quantile function `Q = G^-1` and
//! the log-quantile-derivative `log Q'(p) = -log g(Q(p))`. Those are the
//! two ingredients of every likelihood term.

use std::fmt;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{self, HALF_LN_2PI};

/// Reciprocal degrees of freedom of the Student-t family.
///
/// `0` is the Gaussian limit and `1` the Cauchy distribution.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TFamilyParam(f64);

impl TFamilyParam {
    pub fn new(inv_nu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&inv_nu) {
            return Err(Error::domain(format!("inv_nu must lie in [0, 1], got {inv_nu}")));
        }
        Ok(Self(inv_nu))
    }

    /// Parameter for `nu` degrees of freedom, `nu >= 1` (infinite gives 0).
    pub fn from_nu(nu: f64) -> Result<Self> {
        if nu.is_nan() || nu < 1.0 {
            return Err(Error::domain(format!("degrees of freedom must be >= 1, got {nu}")));
        }
        Self::new(1.0 / nu)
    }

    pub fn inv_nu(self) -> f64 {
        self.0
    }

    /// Degrees of freedom; infinite at the Gaussian limit.
    pub fn nu(self) -> f64 {
        1.0 / self.0
    }
}

/// Parameters of the quantile family `q(p) = p^a/a - (1-p)^b/b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBetaParam {
    alpha: f64,
    beta: f64,
}

impl AlphaBetaParam {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must lie in [-1, 1], got {v}")));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn diagonal(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha)
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    pub fn beta(self) -> f64 {
        self.beta
    }
}

/// The families of standardized target laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Uniform,
    Logistic,
    StudentT(TFamilyParam),
    AlphaBeta(AlphaBetaParam),
}

/// A target law `loc + scale * G0` for a standardized family member `G0`.
///
/// Location and scale default to `0` and `1`. They exist so that affine
/// reparametrizations can be compared directly; the profile likelihood does
/// not depend on them. A negative scale reverses the order of the matched
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution {
    family: Family,
    loc: f64,
    scale: f64,
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability must lie in (0, 1), got {p}")))
    }
}

/// `ln(exp(a) + exp(b))`.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `(p^a - 1) / a`, continuous at `a = 0` where it equals `ln p`.
fn box_power(ln_p: f64, a: f64) -> f64 {
    if a == 0.0 {
        ln_p
    } else {
        (a * ln_p).exp_m1() / a
    }
}

impl TargetDistribution {
    pub fn new(family: Family) -> Self {
        Self { family, loc: 0.0, scale: 1.0 }
    }

    pub fn gaussian() -> Self {
        Self::new(Family::Gaussian)
    }

    pub fn uniform() -> Self {
        Self::new(Family::Uniform)
    }

    pub fn logistic() -> Self {
        Self::new(Family::Logistic)
    }

    pub fn student_t(inv_nu: f64) -> Result<Self> {
        Ok(Self::new(Family::StudentT(TFamilyParam::new(inv_nu)?)))
    }

    pub fn alpha_beta(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self::new(Family::AlphaBeta(AlphaBetaParam::new(alpha, beta)?)))
    }

    /// The composition `loc + scale * self`.
    pub fn affine(self, loc: f64, scale: f64) -> Result<Self> {
        if scale == 0.0 || !scale.is_finite() || !loc.is_finite() {
            return Err(Error::domain(format!(
                "affine map needs finite loc and nonzero finite scale, got ({loc}, {scale})"
            )));
        }
        Ok(Self {
            family: self.family,
            loc: loc + scale * self.loc,
            scale: self.scale * scale,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn loc(&self) -> f64 {
        self.loc
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Quantile `Q(p)` for `0 < p < 1`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        Ok(self.quantile_unchecked(p))
    }

    /// `log Q'(p) = -log g(Q(p))` for `0 < p < 1`.
    pub fn log_quantile_derivative(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        Ok(self.log_quantile_derivative_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let q = match self.family {
            Family::Gaussian => special::norm_ppf(p),
            Family::Uniform => p,
            Family::Logistic => p.ln() - (-p).ln_1p(),
            Family::StudentT(t) => {
                if t.inv_nu() == 0.0 {
                    special::norm_ppf(p)
                } else {
                    special::student_t_ppf(p, t.nu())
                }
            }
            Family::AlphaBeta(ab) => {
                if ab.alpha == 0.0 && ab.beta == 0.0 {
                    p.ln() - (-p).ln_1p()
                } else {
                    box_power(p.ln(), ab.alpha) - box_power((-p).ln_1p(), ab.beta)
                }
            }
        };
        self.loc + self.scale * q
    }

    pub(crate) fn log_quantile_derivative_unchecked(&self, p: f64) -> f64 {
        let base = match self.family {
            Family::Gaussian => HALF_LN_2PI + 0.5 * special::norm_ppf(p).powi(2),
            Family::Uniform => 0.0,
            Family::Logistic => -(p.ln() + (-p).ln_1p()),
            Family::StudentT(t) => {
                if t.inv_nu() == 0.0 {
                    HALF_LN_2PI + 0.5 * special::norm_ppf(p).powi(2)
                } else {
                    let nu = t.nu();
                    -special::student_t_log_pdf(special::student_t_ppf(p, nu), nu)
                }
            }
            Family::AlphaBeta(ab) => {
                let ln_p = p.ln();
                let ln_q = (-p).ln_1p();
                if ab.alpha == 0.0 && ab.beta == 0.0 {
                    -(ln_p + ln_q)
                } else {
                    log_add_exp((ab.alpha - 1.0) * ln_p, (ab.beta - 1.0) * ln_q)
                }
            }
        };
        if self.scale == 1.0 {
            base
        } else {
            base + self.scale.abs().ln()
        }
    }

    /// `(Q(p), log Q'(p))` sharing a single quantile evaluation.
    pub(crate) fn quantile_and_log_derivative_unchecked(&self, p: f64) -> (f64, f64) {
        match self.family {
            Family::StudentT(t) if t.inv_nu() > 0.0 => {
                let nu = t.nu();
                let q = special::student_t_ppf(p, nu);
                let mut lqd = -special::student_t_log_pdf(q, nu);
                if self.scale != 1.0 {
                    lqd += self.scale.abs().ln();
                }
                (self.loc + self.scale * q, lqd)
            }
            _ => (self.quantile_unchecked(p), self.log_quantile_derivative_unchecked(p)),
        }
    }

    /// CDF where a closed form or standard routine exists. `None` for the
    /// alpha-beta family, which is defined through its quantile function.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        let z = (x - self.loc) / self.scale;
        let f = match self.family {
            Family::Gaussian => special::norm_cdf(z),
            Family::Uniform => z.clamp(0.0, 1.0),
            Family::Logistic => 1.0 / (1.0 + (-z).exp()),
            Family::StudentT(t) => {
                if t.inv_nu() == 0.0 {
                    special::norm_cdf(z)
                } else {
                    special::student_t_cdf(z, t.nu())
                }
            }
            Family::AlphaBeta(_) => return None,
        };
        Some(if self.scale > 0.0 { f } else { 1.0 - f })
    }

    /// Differential entropy `-E log g(X)` in nats, where known in closed form.
    pub fn entropy(&self) -> Option<f64> {
        let base = match self.family {
            Family::Gaussian => 0.5 + HALF_LN_2PI,
            Family::Uniform => 0.0,
            Family::Logistic => 2.0,
            Family::StudentT(t) => {
                if t.inv_nu() == 0.0 {
                    0.5 + HALF_LN_2PI
                } else if t.inv_nu() == 1.0 {
                    (4.0 * PI).ln()
                } else {
                    let nu = t.nu();
                    let half = 0.5 * (nu + 1.0);
                    half * (special::digamma(half) - special::digamma(0.5 * nu))
                        + 0.5 * nu.ln()
                        + statrs::function::beta::ln_beta(0.5 * nu, 0.5)
                }
            }
            Family::AlphaBeta(ab) if ab.alpha == 0.0 && ab.beta == 0.0 => 2.0,
            Family::AlphaBeta(_) => return None,
        };
        Some(base + self.scale.abs().ln())
    }
}

impl fmt::Display for TargetDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Gaussian => write!(f, "gaussian")?,
            Family::Uniform => write!(f, "uniform")?,
            Family::Logistic => write!(f, "logistic")?,
            Family::StudentT(t) if t.inv_nu() == 0.0 => write!(f, "t:inv_nu=0")?,
            Family::StudentT(t) => write!(f, "t:nu={}", t.nu())?,
            Family::AlphaBeta(ab) => write!(f, "alpha:a={},b={}", ab.alpha, ab.beta)?,
        }
        if self.loc != 0.0 || self.scale != 1.0 {
            write!(f, "[{}+{}*]", self.loc, self.scale)?;
        }
        Ok(())
    }
}
