//! Special functions for the Gaussian and Student-t targets.
//!
//! `erfc`, `ln_gamma` and `digamma` come from `statrs`. The regularized
//! incomplete beta is implemented here because the shape parameters reach
//! `nu / 2 ~ 5e5` near the Gaussian end of the t family, well beyond the
//! fixed iteration budget of the `statrs` continued fraction.

use statrs::function::{erf::erfc, gamma::ln_gamma};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub use statrs::function::gamma::digamma;

/// `0.5 * ln(2 pi)`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal log density.
pub fn norm_log_pdf(x: f64) -> f64 {
    -HALF_LN_2PI - 0.5 * x * x
}

/// Standard normal quantile (Wichura's AS 241, PPND16).
///
/// Relative accuracy is about 1e-16 over the whole open unit interval.
/// Returns `-inf`/`inf` at 0/1 and NaN outside `[0, 1]`.
pub fn norm_ppf(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
                + 6.726_577_092_700_87e4)
                * r
                + 4.592_195_393_154_987e4)
                * r
                + 1.373_169_376_550_946e4)
                * r
                + 1.971_590_950_306_551_3e3)
                * r
                + 1.331_416_678_917_843_8e2)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
                + 3.930_789_580_009_271e4)
                * r
                + 2.121_379_430_158_659_7e4)
                * r
                + 5.394_196_021_424_751e3)
                * r
                + 6.871_870_074_920_579e2)
                * r
                + 4.231_333_070_160_091e1)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 1.519_866_656_361_645_7e-2)
                * r
                + 1.481_039_764_274_800_8e-1)
                * r
                + 6.897_673_349_851e-1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 1.487_536_129_085_061_5e-2)
                * r
                + 1.369_298_809_227_358e-1)
                * r
                + 5.998_322_065_558_88e-1)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// `tan(pi * x)`, exact at the quarter points `x = +-1/4`.
pub fn tan_pi(x: f64) -> f64 {
    // reduce to (-1/2, 1/2]
    let mut r = x - x.round();
    if r == -0.5 {
        r = 0.5;
    }
    if r == 0.25 {
        1.0
    } else if r == -0.25 {
        -1.0
    } else if r == 0.0 {
        0.0
    } else {
        (PI * r).tan()
    }
}

/// Regularized incomplete beta `I_x(a, b)`, given both `x` and `1 - x`.
///
/// Passing the complement separately keeps full relative precision when it
/// is available from a better-conditioned expression than `1.0 - x`.
pub fn beta_reg_pair(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * one_minus_x.ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, one_minus_x) / b
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_pair(a, b, x, 1.0 - x)
}

// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 20_000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= EPS {
            break;
        }
    }
    h
}

/// `ln Gamma((nu + 1) / 2) - ln Gamma(nu / 2)`.
fn ln_gamma_half_ratio(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)
}

/// Student-t log density with `nu > 0` degrees of freedom (non-integer allowed).
pub fn student_t_log_pdf(x: f64, nu: f64) -> f64 {
    if nu == 1.0 {
        return -PI.ln() - (x * x).ln_1p();
    }
    ln_gamma_half_ratio(nu) - 0.5 * (nu * PI).ln() - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

/// Lower tail `P(T <= x)` for `x <= 0`, accurate in relative terms.
fn student_t_lower_tail(x: f64, nu: f64) -> f64 {
    debug_assert!(x <= 0.0);
    let x2 = x * x;
    let denom = nu + x2;
    0.5 * beta_reg_pair(0.5 * nu, 0.5, nu / denom, x2 / denom)
}

/// Student-t CDF.
pub fn student_t_cdf(x: f64, nu: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if nu == 1.0 {
        return 0.5 + x.atan() / PI;
    }
    if x <= 0.0 {
        student_t_lower_tail(x, nu)
    } else {
        1.0 - student_t_lower_tail(-x, nu)
    }
}

/// Student-t quantile for `0 < p < 1`.
///
/// Cauchy (`nu = 1`) and `nu = 2` use closed forms. Otherwise the
/// Cornish-Fisher expansion seeds a bracketed Newton iteration on the lower
/// tail, stopped at relative probability error 1e-13.
pub fn student_t_ppf(p: f64, nu: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    if nu == 1.0 {
        return tan_pi(p - 0.5);
    }
    if nu == 2.0 {
        return (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
    }
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        return -student_t_lower_quantile(1.0 - p, nu);
    }
    student_t_lower_quantile(p, nu)
}

fn cornish_fisher(z: f64, nu: f64) -> f64 {
    let z2 = z * z;
    let g1 = z * (z2 + 1.0) / 4.0;
    let g2 = z * ((5.0 * z2 + 16.0) * z2 + 3.0) / 96.0;
    let g3 = z * (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) / 384.0;
    let g4 = z * ((((79.0 * z2 + 776.0) * z2 + 1482.0) * z2 - 1920.0) * z2 - 945.0) / 92160.0;
    z + (g1 + (g2 + (g3 + g4 / nu) / nu) / nu) / nu
}

fn student_t_lower_quantile(p: f64, nu: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 0.5);
    let tol = 1e-13 * p;
    let mut x = cornish_fisher(norm_ppf(p), nu).min(-f64::MIN_POSITIVE);
    if !x.is_finite() {
        x = -1.0;
    }

    // bracket [lo, hi] with cdf(lo) <= p <= cdf(hi), hi <= 0
    let mut hi = 0.0_f64;
    let mut lo = x;
    let mut f_lo = student_t_lower_tail(lo, nu);
    while f_lo > p {
        hi = lo;
        lo *= 2.0;
        f_lo = student_t_lower_tail(lo, nu);
        if !lo.is_finite() {
            return f64::NEG_INFINITY;
        }
    }
    if f_lo == p {
        return lo;
    }

    for _ in 0..300 {
        let f = student_t_lower_tail(x, nu) - p;
        if f.abs() <= tol {
            return x;
        }
        if f < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let dens = student_t_log_pdf(x, nu).exp();
        let mut next = x - f / dens;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if next == x || hi - lo <= 4.0 * f64::EPSILON * lo.abs() {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bisect_normal(p: f64) -> f64 {
        if p > 0.5 {
            return -bisect_normal(1.0 - p);
        }
        let (mut lo, mut hi) = (-40.0, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn ppf_matches_bisection_oracle() {
        for &p in &[1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999, 1.0 - 1e-12] {
            let oracle = bisect_normal(p);
            assert!((norm_ppf(p) - oracle).abs() < 1e-9, "p={p}: {} vs {oracle}", norm_ppf(p));
        }
    }

    #[test]
    fn tan_pi_quarters() {
        assert_eq!(tan_pi(0.25), 1.0);
        assert_eq!(tan_pi(-0.25), -1.0);
        assert_eq!(tan_pi(0.0), 0.0);
        assert_relative_eq!(tan_pi(0.4), 3.077_683_537_175_253_4, max_relative = 1e-14);
    }

    #[test]
    fn beta_reg_known_values() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_x(1, b) = 1 - (1-x)^b
        assert_relative_eq!(beta_reg(1.0, 1.0, 0.3), 0.3, max_relative = 1e-14);
        assert_relative_eq!(beta_reg(2.5, 1.0, 0.4), 0.4f64.powf(2.5), max_relative = 1e-13);
        assert_relative_eq!(beta_reg(1.0, 3.5, 0.2), 1.0 - 0.8f64.powf(3.5), max_relative = 1e-13);
    }

    #[test]
    fn t_cdf_closed_forms() {
        // nu = 2: F(x) = 1/2 + x / (2 sqrt(2 + x^2))
        for x in [-5.0f64, -1.0, -0.1, 0.0, 0.3, 2.0] {
            let exact = 0.5 + x / (2.0 * (2.0 + x * x).sqrt());
            assert_relative_eq!(student_t_cdf(x, 2.0), exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn t_quantile_large_nu_near_normal() {
        for &p in &[0.01, 0.2, 0.6, 0.99] {
            let t = student_t_ppf(p, 1e6);
            assert!((t - norm_ppf(p)).abs() < 1e-4);
        }
    }
}
