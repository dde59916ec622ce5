//! Profile log likelihoods of quantile-matching transformations.
//!
//! For a target `G` with quantile function `Q`, the transformation
//! `y_i -> Q(pc(y_i))` has profile log likelihood
//!
//! ```text
//! -1/2 log det(Sigma_hat_G) + sum log pc'(y_i) - sum log g(Q(pc(y_i)))
//! ```
//!
//! The middle sum depends on how `pc` is interpolated between data points
//! and is the same for every target, so everything reported here is the
//! *reduced* profile made of the first and last terms. Differences of
//! reduced profiles are exact log likelihood ratios.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::{self, DesignSpec, ModelFit, ModelKind};
use crate::optimize::golden_section_max;
use crate::percentile::{percentiles, PercentileVector};
use crate::targetdist::TargetDistribution;

/// Reduced profile log likelihood of one target under one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProfileLoglik {
    pub target: TargetDistribution,
    pub model: ModelKind,
    /// `-1/2 log det Sigma_hat`.
    pub det_term: f64,
    /// `sum log Q'(pc(y_i)) = -sum log g(Q(pc(y_i)))`.
    pub jacobian_term: f64,
    /// `det_term + jacobian_term`.
    pub value: f64,
    pub fit: ModelFit,
}

/// Reduced profile of `dist` for the response `y`.
pub fn reduced_profile_loglik(
    y: &[f64],
    dist: &TargetDistribution,
    design: &DesignSpec,
) -> Result<ReducedProfileLoglik> {
    let pc = percentiles(y)?;
    reduced_profile_from_percentiles(&pc, dist, design)
}

/// Reduced profile computed from precomputed percentiles.
pub fn reduced_profile_from_percentiles(
    pc: &PercentileVector,
    dist: &TargetDistribution,
    design: &DesignSpec,
) -> Result<ReducedProfileLoglik> {
    let (z, log_derivative_sum) = pc.transform(dist);
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!("{dist} produced non-finite quantiles")));
    }
    let fit = linmodel::fit(&z, design)?;
    let det_term = -0.5 * fit.log_det_sigma_hat;
    let jacobian_term = log_derivative_sum;
    Ok(ReducedProfileLoglik {
        target: *dist,
        model: design.model(),
        det_term,
        jacobian_term,
        value: det_term + jacobian_term,
        fit,
    })
}

/// Log likelihood ratio of `dist_a` against `dist_b`; positive favours `a`.
pub fn loglik_ratio(
    y: &[f64],
    dist_a: &TargetDistribution,
    dist_b: &TargetDistribution,
    design: &DesignSpec,
) -> Result<f64> {
    let pc = percentiles(y)?;
    let a = reduced_profile_from_percentiles(&pc, dist_a, design)?;
    let b = reduced_profile_from_percentiles(&pc, dist_b, design)?;
    Ok(a.value - b.value)
}

/// Gaussian-versus-uniform ratio split into its two parts, each next to
/// the first-order prediction: the determinant ratio near `-(n/2) ln 12`
/// (Gaussian variance is 12 times the uniform one) and the correction near
/// `(n/2)(1 + ln 2 pi)` (the Gaussian entropy times `n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianUniformDiagnostics {
    pub n: usize,
    /// `-1/2 log det(Sigma_Phi Sigma_U^-1)`.
    pub det_term: f64,
    /// `-(n/2) ln 12`, about `-1.242 n`.
    pub det_prediction: f64,
    /// `1/2 sum Phi^-1(pc)^2 + (n/2) ln 2 pi`.
    pub correction_term: f64,
    /// `(n/2)(1 + ln 2 pi)`, about `1.419 n`.
    pub correction_prediction: f64,
    pub lr: f64,
}

pub fn lr_diagnostics_gaussian_uniform(y: &[f64], design: &DesignSpec) -> Result<GaussianUniformDiagnostics> {
    let pc = percentiles(y)?;
    let gauss = reduced_profile_from_percentiles(&pc, &TargetDistribution::gaussian(), design)?;
    let unif = reduced_profile_from_percentiles(&pc, &TargetDistribution::uniform(), design)?;
    let n = y.len();
    let nf = n as f64;
    let det_term = gauss.det_term - unif.det_term;
    let correction_term = gauss.jacobian_term - unif.jacobian_term;
    Ok(GaussianUniformDiagnostics {
        n,
        det_term,
        det_prediction: -0.5 * nf * 12f64.ln(),
        correction_term,
        correction_prediction: 0.5 * nf * (1.0 + (2.0 * PI).ln()),
        lr: gauss.value - unif.value,
    })
}

/// Logistic-versus-uniform ratio next to the approximation that replaces
/// `-sum log(pc (1 - pc))` by `2n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticUniformDiagnostics {
    pub n: usize,
    /// `-1/2 log det(Sigma_0 Sigma_U^-1)`.
    pub det_term: f64,
    /// `-sum log(pc (1 - pc))`.
    pub correction_term: f64,
    /// `2n`.
    pub correction_prediction: f64,
    pub lr: f64,
    /// `det_term + 2n`.
    pub lr_approx: f64,
}

pub fn lr_diagnostics_logistic_uniform(y: &[f64], design: &DesignSpec) -> Result<LogisticUniformDiagnostics> {
    let pc = percentiles(y)?;
    let logi = reduced_profile_from_percentiles(&pc, &TargetDistribution::logistic(), design)?;
    let unif = reduced_profile_from_percentiles(&pc, &TargetDistribution::uniform(), design)?;
    let n = y.len();
    let det_term = logi.det_term - unif.det_term;
    Ok(LogisticUniformDiagnostics {
        n,
        det_term,
        correction_term: logi.jacobian_term - unif.jacobian_term,
        correction_prediction: 2.0 * n as f64,
        lr: logi.value - unif.value,
        lr_approx: det_term + 2.0 * n as f64,
    })
}

/// Which one-parameter family a curve profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFamily {
    /// Student-t indexed by `1/nu`.
    StudentT,
    /// Alpha-beta quantile family with `alpha = beta`.
    AlphaBetaDiagonal,
    /// Box-Cox power family.
    BoxCox,
}

/// Terms at one parameter value. For Box-Cox the "jacobian" term is
/// `(g - 1) sum ln y_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveTerms {
    pub det_term: f64,
    pub jacobian_term: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub param: f64,
    /// `None` when the fit failed at this parameter.
    pub terms: Option<CurveTerms>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub family: CurveFamily,
    pub model: ModelKind,
    /// One point per grid value, in grid order.
    pub points: Vec<CurvePoint>,
    /// Point found by golden-section refinement, if it beat the grid.
    pub refined: Option<CurvePoint>,
    pub argmax_param: f64,
    pub argmax_value: f64,
    /// Grid values whose evaluation failed, with the reason.
    pub failures: Vec<(f64, Error)>,
}

impl ProfileCurve {
    pub fn values(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.points.iter().map(|p| p.terms.map(|t| t.value))
    }
}

/// Refinement tolerance on the family parameter.
pub const REFINE_TOL: f64 = 1e-3;
/// Minimum fraction of grid points that must evaluate.
pub const MIN_SUCCESS_FRACTION: f64 = 0.8;

/// Evenly spaced grid `lo, lo + step, ..., hi`. When `1/step` is an
/// integer `m` the points are exactly `k / m`, so `0` and the defaults are
/// reproduced bit for bit.
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain(format!("bad grid lo={lo} hi={hi} step={step}")));
    }
    let m = (1.0 / step).round();
    let k_lo = lo * m;
    if (1.0 / step - m).abs() < 1e-9 * m && (k_lo - k_lo.round()).abs() < 1e-6 {
        let k_lo = k_lo.round() as i64;
        let k_hi = (hi * m + 1e-6).floor() as i64;
        return Ok((k_lo..=k_hi).map(|k| k as f64 / m).collect());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| lo + i as f64 * step).collect())
}

/// Default `1/nu` grid: 0, 0.02, ..., 1.
pub fn default_inv_nu_grid() -> Vec<f64> {
    (0..=50).map(|i| i as f64 / 50.0).collect()
}

/// Default alpha grid: -1, -0.99, ..., 1.
pub fn default_alpha_grid() -> Vec<f64> {
    (-100..=100).map(|i| i as f64 / 100.0).collect()
}

/// Default Box-Cox grid: -1, -0.95, ..., 1.
pub fn default_boxcox_grid() -> Vec<f64> {
    (-20..=20).map(|i| i as f64 / 20.0).collect()
}

fn check_grid(grid: &[f64], lo: f64, hi: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("empty grid"));
    }
    if let Some(v) = grid.iter().find(|v| !(lo..=hi).contains(*v)) {
        return Err(Error::domain(format!("grid value {v} outside [{lo}, {hi}]")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    Ok(())
}

fn sweep<F>(family: CurveFamily, model: ModelKind, grid: &[f64], refine: bool, eval: F) -> Result<ProfileCurve>
where
    F: Fn(f64) -> Result<CurveTerms> + Sync,
{
    let outcomes: Vec<Result<CurveTerms>> = grid.par_iter().map(|&g| eval(g)).collect();
    let mut points = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (&param, outcome) in grid.iter().zip(outcomes) {
        match outcome {
            Ok(t) => points.push(CurvePoint { param, terms: Some(t) }),
            Err(e) => {
                failures.push((param, e));
                points.push(CurvePoint { param, terms: None });
            }
        }
    }
    let ok = grid.len() - failures.len();
    if (ok as f64) < MIN_SUCCESS_FRACTION * grid.len() as f64 {
        return Err(Error::Numeric {
            message: format!("only {ok} of {} grid points could be evaluated", grid.len()),
            best_objective: f64::NAN,
        });
    }

    // first maximum in grid order
    let (best_idx, best_value) = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.terms.map(|t| (i, t.value)))
        .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut curve = ProfileCurve {
        family,
        model,
        argmax_param: grid[best_idx],
        argmax_value: best_value,
        points,
        refined: None,
        failures,
    };

    if refine && grid.len() > 1 {
        let lo = grid[best_idx.saturating_sub(1)];
        let hi = grid[(best_idx + 1).min(grid.len() - 1)];
        let (x, _) = golden_section_max(
            |g| eval(g).map(|t| t.value).unwrap_or(f64::NEG_INFINITY),
            lo,
            hi,
            REFINE_TOL,
        );
        if let Ok(t) = eval(x) {
            if t.value > best_value {
                curve.argmax_param = x;
                curve.argmax_value = t.value;
                curve.refined = Some(CurvePoint { param: x, terms: Some(t) });
            }
        }
    }
    Ok(curve)
}

fn terms_of(r: &ReducedProfileLoglik) -> CurveTerms {
    CurveTerms {
        det_term: r.det_term,
        jacobian_term: r.jacobian_term,
        value: r.value,
    }
}

/// Reduced profile over the Student-t family indexed by `1/nu` in `[0, 1]`;
/// `1/nu = 0` is the Gaussian target.
pub fn profile_student_t(y: &[f64], design: &DesignSpec, grid: &[f64], refine: bool) -> Result<ProfileCurve> {
    check_grid(grid, 0.0, 1.0)?;
    let pc = percentiles(y)?;
    sweep(CurveFamily::StudentT, design.model(), grid, refine, |inv_nu| {
        let dist = TargetDistribution::student_t(inv_nu)?;
        reduced_profile_from_percentiles(&pc, &dist, design).map(|r| terms_of(&r))
    })
}

/// Reduced profile over the alpha-beta family with `alpha = beta` in
/// `[-1, 1]`; `alpha = 0` is the logistic target.
pub fn profile_alpha(y: &[f64], design: &DesignSpec, grid: &[f64], refine: bool) -> Result<ProfileCurve> {
    check_grid(grid, -1.0, 1.0)?;
    let pc = percentiles(y)?;
    sweep(CurveFamily::AlphaBetaDiagonal, design.model(), grid, refine, |alpha| {
        let dist = TargetDistribution::alpha_beta(alpha, alpha)?;
        reduced_profile_from_percentiles(&pc, &dist, design).map(|r| terms_of(&r))
    })
}

/// Box-Cox transform `(y^g - 1)/g`, `ln y` at `g = 0`.
pub fn boxcox_transform(y: &[f64], g: f64) -> Vec<f64> {
    y.iter()
        .map(|&v| if g == 0.0 { v.ln() } else { (g * v.ln()).exp_m1() / g })
        .collect()
}

/// Box-Cox profile `-1/2 log det Sigma_hat_g + (g - 1) sum ln y_i`.
pub fn boxcox_profile(y: &[f64], design: &DesignSpec, grid: &[f64], refine: bool) -> Result<ProfileCurve> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("grid must be nonempty and strictly increasing"));
    }
    if let Some(v) = y.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("Box-Cox needs positive finite data, found {v}")));
    }
    let sum_log: f64 = y.iter().map(|v| v.ln()).sum();
    sweep(CurveFamily::BoxCox, design.model(), grid, refine, |g| {
        let z = boxcox_transform(y, g);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("Box-Cox transform overflowed at g = {g}")));
        }
        let fit = linmodel::fit(&z, design)?;
        let det_term = -0.5 * fit.log_det_sigma_hat;
        let jacobian_term = (g - 1.0) * sum_log;
        Ok(CurveTerms { det_term, jacobian_term, value: det_term + jacobian_term })
    })
}

/// Midpoint quadrature of the entropy integral at the rankits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyQuadrature {
    pub n: usize,
    /// `-(1/n) sum log g(Q((2i - 1)/2n))`.
    pub quadrature: f64,
    pub exact: Option<f64>,
    /// `quadrature - exact`.
    pub gap: Option<f64>,
}

pub fn entropy_quadrature(dist: &TargetDistribution, n: usize) -> Result<EntropyQuadrature> {
    if n < 10 {
        return Err(Error::domain(format!("entropy quadrature needs n >= 10, got {n}")));
    }
    let two_n = (2 * n) as f64;
    let sum: f64 = (1..=n)
        .map(|i| dist.log_quantile_derivative_unchecked((2 * i - 1) as f64 / two_n))
        .sum();
    let quadrature = sum / n as f64;
    let exact = dist.entropy();
    Ok(EntropyQuadrature { n, quadrature, exact, gap: exact.map(|e| quadrature - e) })
}

/// Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension("correlation of vectors with different lengths".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::domain("correlation with a zero-variance vector"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Correlations between `y` and each of its quantile-matched versions.
pub fn correlation_report(y: &[f64], dists: &[TargetDistribution]) -> Result<Vec<f64>> {
    if y.len() < 3 {
        return Err(Error::domain(format!("correlations need n >= 3, got {}", y.len())));
    }
    let pc = percentiles(y)?;
    dists.iter().map(|d| pearson(y, &pc.matched(d))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simdesign::{simulate, EffectDist, SimConfig};

    fn small_data(seed: u64) -> (Vec<f64>, DesignSpec) {
        let out = simulate(&SimConfig { nrows: 8, ncols: 6, ..SimConfig::paper_scale(EffectDist::Gaussian, seed) }).unwrap();
        (out.y, out.design)
    }

    #[test]
    fn uniform_has_zero_jacobian() {
        let (y, d) = small_data(1);
        let r = reduced_profile_loglik(&y, &TargetDistribution::uniform(), &d).unwrap();
        assert_eq!(r.jacobian_term, 0.0);
        assert_eq!(r.value, r.det_term);
    }

    #[test]
    fn identical_targets_give_zero_ratio() {
        let (y, d) = small_data(2);
        let g = TargetDistribution::gaussian();
        assert_eq!(loglik_ratio(&y, &g, &g, &d).unwrap(), 0.0);
    }

    #[test]
    fn shifted_and_unshifted_alpha_beta_agree() {
        // unshifted p^a/a - (1-p)^b/b differs from the shifted form by 1/a - 1/b
        let (y, d) = small_data(3);
        let (a, b) = (0.4, -0.3);
        let shifted = TargetDistribution::alpha_beta(a, b).unwrap();
        let unshifted = shifted.affine(1.0 / a - 1.0 / b, 1.0).unwrap();
        let lr = loglik_ratio(&y, &shifted, &unshifted, &d).unwrap();
        assert!(lr.abs() < 1e-9, "{lr}");
    }

    #[test]
    fn alpha_curve_symmetric_under_negation() {
        let (y, d) = small_data(4);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let grid = [-0.5, -0.1, 0.0, 0.3, 0.8];
        let a = profile_alpha(&y, &d, &grid, false).unwrap();
        let b = profile_alpha(&neg, &d, &grid, false).unwrap();
        for (p, q) in a.values().zip(b.values()) {
            assert!((p.unwrap() - q.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_checks() {
        let (y, d) = small_data(5);
        assert!(profile_student_t(&y, &d, &[], false).is_err());
        assert!(profile_student_t(&y, &d, &[0.0, 1.5], false).is_err());
        assert!(profile_alpha(&y, &d, &[0.2, 0.1], false).is_err());
        assert!(boxcox_profile(&[1.0, 0.0, 2.0, 3.0], &DesignSpec::column_major(2, 2, ModelKind::FixedEffects).unwrap(), &[1.0], false).is_err());
    }

    #[test]
    fn linear_grid_hits_zero() {
        let g = linear_grid(-1.0, 1.0, 0.01).unwrap();
        assert_eq!(g.len(), 201);
        assert!(g.contains(&0.0));
        assert_eq!(g[0], -1.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(linear_grid(0.0, 1.0, 0.02).unwrap(), default_inv_nu_grid());
    }

    #[test]
    fn entropy_of_uniform_is_zero() {
        for n in [10, 11, 500] {
            assert_eq!(entropy_quadrature(&TargetDistribution::uniform(), n).unwrap().quadrature, 0.0);
        }
        assert!(entropy_quadrature(&TargetDistribution::uniform(), 9).is_err());
    }

    #[test]
    fn logistic_entropy_quadrature() {
        let e = entropy_quadrature(&TargetDistribution::logistic(), 1000).unwrap();
        assert!(e.gap.unwrap().abs() < 0.02, "{e:?}");
    }

    #[test]
    fn uniform_correlation_is_rankit_correlation() {
        let (y, _) = small_data(6);
        let pc = percentiles(&y).unwrap();
        let r = correlation_report(&y, &[TargetDistribution::uniform()]).unwrap();
        assert_eq!(r[0], pearson(&y, pc.values()).unwrap());
        assert!(correlation_report(&[1.0, 1.0, 1.0], &[TargetDistribution::gaussian()]).is_err());
    }
}
