//! Maximum-likelihood fits for balanced row-column designs.
//!
//! Two model classes are supported for a transformed response `z`:
//!
//! - fixed effects: mean space `row + col`, covariance `sigma2 * I`;
//! - random effects: mean space `1`, covariance
//!   `sigma2 * I + sigma2_row * ROW + sigma2_col * COL`, where `ROW` and
//!   `COL` are the block (same-row / same-column) indicator matrices.
//!
//! In a balanced replicate-1 design every covariance in the random-effects
//! cone shares the eigenspaces {grand mean, row contrasts, column contrasts,
//! interaction}, with eigenvalues
//!
//! ```text
//! lambda_0 = s2 + c s2_row + r s2_col    (dim 1)
//! lambda_R = s2 + c s2_row               (dim r - 1)
//! lambda_C = s2 + r s2_col               (dim c - 1)
//! lambda_E = s2                          (dim (r - 1)(c - 1))
//! ```
//!
//! so all fits work on the four squared projection norms of `z` alone.
//! Everything here is ML, not REML.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{nelder_mead_min, NelderMeadOptions};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Which mean space and covariance cone to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Additive row + column means, covariance proportional to the identity.
    FixedEffects,
    /// Constant mean, covariance in the cone spanned by `I`, `ROW`, `COL`.
    RandomEffects,
}

/// A balanced replicate-1 row-column layout plus the model to fit on it.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    model: ModelKind,
}

impl DesignSpec {
    /// Full grid in column-major order: observation `k` sits in row
    /// `k % nrows` and column `k / nrows`.
    pub fn column_major(nrows: usize, ncols: usize, model: ModelKind) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(Error::Dimension(format!("empty design {nrows}x{ncols}")));
        }
        let n = nrows * ncols;
        Ok(Self {
            nrows,
            ncols,
            rows: (0..n).map(|k| k % nrows).collect(),
            cols: (0..n).map(|k| k / nrows).collect(),
            model,
        })
    }

    /// Layout from explicit 0-based row and column labels. Every cell of the
    /// `(max row + 1) x (max col + 1)` grid must appear exactly once.
    pub fn from_labels(rows: Vec<usize>, cols: Vec<usize>, model: ModelKind) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(Error::Dimension(format!(
                "{} row labels but {} column labels",
                rows.len(),
                cols.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::Dimension("empty design".into()));
        }
        let nrows = rows.iter().max().unwrap() + 1;
        let ncols = cols.iter().max().unwrap() + 1;
        if nrows * ncols != rows.len() {
            return Err(Error::Dimension(format!(
                "{} observations cannot fill a balanced {nrows}x{ncols} grid",
                rows.len()
            )));
        }
        let mut seen = vec![false; nrows * ncols];
        for (&r, &c) in rows.iter().zip(&cols) {
            let cell = &mut seen[c * nrows + r];
            if *cell {
                return Err(Error::Dimension(format!("cell ({r}, {c}) appears more than once")));
            }
            *cell = true;
        }
        Ok(Self { nrows, ncols, rows, cols, model })
    }

    pub fn with_model(&self, model: ModelKind) -> Self {
        Self { model, ..self.clone() }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    fn check_len(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.n() {
            return Err(Error::Dimension(format!(
                "response has length {} but the design has {} cells",
                z.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Squared norms of the projections of `z` onto the four eigenspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDecomposition {
    pub grand_mean: f64,
    pub row_means: Vec<f64>,
    pub col_means: Vec<f64>,
    /// `n * mean^2`, the squared norm of the grand-mean component.
    pub s_mean: f64,
    pub s_row: f64,
    pub s_col: f64,
    pub s_int: f64,
    pub d_row: usize,
    pub d_col: usize,
    pub d_int: usize,
}

impl ProjectionDecomposition {
    /// `sum (z_i - mean)^2`.
    pub fn centered_total(&self) -> f64 {
        self.s_row + self.s_col + self.s_int
    }

    fn norms(&self) -> [f64; 4] {
        [self.s_mean, self.s_row, self.s_col, self.s_int]
    }

    fn dims(&self) -> [f64; 4] {
        [1.0, self.d_row as f64, self.d_col as f64, self.d_int as f64]
    }
}

/// Decompose `z` into grand-mean, row, column and interaction components.
pub fn decompose(z: &[f64], design: &DesignSpec) -> Result<ProjectionDecomposition> {
    design.check_len(z)?;
    let (r, c) = (design.nrows, design.ncols);
    let n = z.len() as f64;
    let grand_mean = z.iter().sum::<f64>() / n;
    let mut row_means = vec![0.0; r];
    let mut col_means = vec![0.0; c];
    for ((&v, &i), &j) in z.iter().zip(&design.rows).zip(&design.cols) {
        row_means[i] += v;
        col_means[j] += v;
    }
    row_means.iter_mut().for_each(|m| *m /= c as f64);
    col_means.iter_mut().for_each(|m| *m /= r as f64);

    let s_row = c as f64 * row_means.iter().map(|m| (m - grand_mean).powi(2)).sum::<f64>();
    let s_col = r as f64 * col_means.iter().map(|m| (m - grand_mean).powi(2)).sum::<f64>();
    let s_int = z
        .iter()
        .zip(&design.rows)
        .zip(&design.cols)
        .map(|((&v, &i), &j)| (v - row_means[i] - col_means[j] + grand_mean).powi(2))
        .sum();
    Ok(ProjectionDecomposition {
        grand_mean,
        row_means,
        col_means,
        s_mean: n * grand_mean * grand_mean,
        s_row,
        s_col,
        s_int,
        d_row: r - 1,
        d_col: c - 1,
        d_int: (r - 1) * (c - 1),
    })
}

/// Variance parameters; the fixed-effects model only uses `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceParams {
    pub sigma2: f64,
    pub sigma2_row: f64,
    pub sigma2_col: f64,
}

impl VarianceParams {
    pub fn isotropic(sigma2: f64) -> Self {
        Self { sigma2, sigma2_row: 0.0, sigma2_col: 0.0 }
    }

    /// Eigenvalues `[lambda_0, lambda_R, lambda_C, lambda_E]` of the
    /// covariance on an `nrows x ncols` balanced grid.
    pub fn eigenvalues(&self, nrows: usize, ncols: usize) -> [f64; 4] {
        let a = ncols as f64 * self.sigma2_row;
        let b = nrows as f64 * self.sigma2_col;
        [self.sigma2 + a + b, self.sigma2 + a, self.sigma2 + b, self.sigma2]
    }
}

/// ML summary after fitting a transformed response.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub kind: ModelKind,
    pub params: VarianceParams,
    pub log_det_sigma_hat: f64,
    pub mu_hat: Vec<f64>,
    /// Gaussian log likelihood at the MLE, without any Jacobian term.
    pub max_loglik_core: f64,
}

impl ModelFit {
    /// Same fit with every variance parameter multiplied by `factor`.
    pub fn with_scaled_variance(&self, factor: f64) -> Self {
        let p = self.params;
        let n = self.mu_hat.len() as f64;
        Self {
            params: VarianceParams {
                sigma2: p.sigma2 * factor,
                sigma2_row: p.sigma2_row * factor,
                sigma2_col: p.sigma2_col * factor,
            },
            log_det_sigma_hat: self.log_det_sigma_hat + n * factor.ln(),
            ..self.clone()
        }
    }
}

/// Fit whichever model the design names.
pub fn fit(z: &[f64], design: &DesignSpec) -> Result<ModelFit> {
    match design.model {
        ModelKind::FixedEffects => fit_fixed(z, design),
        ModelKind::RandomEffects => fit_random_balanced(z, design),
    }
}

fn check_fittable(design: &DesignSpec, dec: &ProjectionDecomposition) -> Result<()> {
    if design.nrows < 2 || design.ncols < 2 {
        return Err(Error::Dimension(format!(
            "need at least 2 rows and 2 columns, got {}x{}",
            design.nrows, design.ncols
        )));
    }
    let total = dec.centered_total() + dec.s_mean;
    if !(dec.s_int > 1e-26 * total) {
        return Err(Error::Degenerate(
            "interaction sum of squares is zero; the data are exactly additive".into(),
        ));
    }
    Ok(())
}

/// Fixed-effects fit: additive row + column means, `sigma2 = S_E / n`.
pub fn fit_fixed(z: &[f64], design: &DesignSpec) -> Result<ModelFit> {
    let dec = decompose(z, design)?;
    check_fittable(design, &dec)?;
    let n = z.len() as f64;
    let sigma2 = dec.s_int / n;
    let mu_hat = design
        .rows
        .iter()
        .zip(&design.cols)
        .map(|(&i, &j)| dec.row_means[i] + dec.col_means[j] - dec.grand_mean)
        .collect();
    Ok(ModelFit {
        kind: ModelKind::FixedEffects,
        params: VarianceParams::isotropic(sigma2),
        log_det_sigma_hat: n * sigma2.ln(),
        mu_hat,
        max_loglik_core: -0.5 * n * (sigma2.ln() + 1.0 + LN_2PI),
    })
}

/// Negative twice log likelihood (minus `n ln 2 pi`) in the eigenvalue form,
/// over `theta = (sigma2, c * sigma2_row, r * sigma2_col)`.
#[derive(Debug, Clone)]
struct EigenObjective {
    s: [f64; 4],
    d: [f64; 4],
}

// rows of the map theta -> lambda
const LAMBDA_MAP: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [1.0, 0.0, 0.0]];

impl EigenObjective {
    fn lambdas(theta: &[f64; 3]) -> [f64; 4] {
        let [e, a, b] = *theta;
        [e + a + b, e + a, e + b, e]
    }

    fn value(&self, theta: &[f64; 3]) -> f64 {
        let lam = Self::lambdas(theta);
        if lam.iter().any(|&l| !(l > 0.0)) {
            return f64::INFINITY;
        }
        (0..4).map(|k| self.d[k] * lam[k].ln() + self.s[k] / lam[k]).sum()
    }

    fn log_det(&self, theta: &[f64; 3]) -> f64 {
        let lam = Self::lambdas(theta);
        (0..4).map(|k| self.d[k] * lam[k].ln()).sum()
    }

    fn grad_hess(&self, theta: &[f64; 3]) -> (Vector3<f64>, Matrix3<f64>) {
        let lam = Self::lambdas(theta);
        let mut g = Vector3::zeros();
        let mut h = Matrix3::zeros();
        for k in 0..4 {
            let gk = self.d[k] / lam[k] - self.s[k] / (lam[k] * lam[k]);
            let hk = -self.d[k] / (lam[k] * lam[k]) + 2.0 * self.s[k] / lam[k].powi(3);
            for i in 0..3 {
                g[i] += LAMBDA_MAP[k][i] * gk;
                for j in 0..3 {
                    h[(i, j)] += LAMBDA_MAP[k][i] * LAMBDA_MAP[k][j] * hk;
                }
            }
        }
        (g, h)
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    theta: [f64; 3],
    value: f64,
}

const GRAD_TOL: f64 = 1e-10;
const LOOSE_GRAD_TOL: f64 = 1e-7;
const MAX_NEWTON_ITER: usize = 200;

fn scaled_grad_norm(obj: &EigenObjective, theta: &[f64; 3], idx: &[usize]) -> f64 {
    let (g, _) = obj.grad_hess(theta);
    idx.iter().map(|&i| (theta[i] * g[i]).abs()).fold(0.0, f64::max)
}

/// Newton iteration in log coordinates over the free components of theta,
/// with the others held at zero. Returns `None` if a free component heads to
/// the zero boundary (that optimum belongs to a smaller active set) or the
/// iteration fails to converge.
fn newton_active_set(obj: &EigenObjective, start: [f64; 3], free: [bool; 3]) -> Option<Candidate> {
    let idx: Vec<usize> = (0..3).filter(|&i| free[i]).collect();
    let m = idx.len();
    let mut theta = start;
    for i in 0..3 {
        if !free[i] {
            theta[i] = 0.0;
        }
    }
    let mut f = obj.value(&theta);
    if !f.is_finite() {
        return None;
    }

    for _ in 0..MAX_NEWTON_ITER {
        let (g, h) = obj.grad_hess(&theta);
        let gu = DMatrix::from_fn(m, 1, |r, _| theta[idx[r]] * g[idx[r]]);
        let grad_norm = gu.amax();
        if grad_norm <= GRAD_TOL {
            return Some(Candidate { theta, value: f });
        }
        let hu = DMatrix::from_fn(m, m, |r, c| {
            let (i, j) = (idx[r], idx[c]);
            let mut v = theta[i] * theta[j] * h[(i, j)];
            if r == c {
                v += theta[i] * g[i];
            }
            v
        });

        // Levenberg damping until the system is positive definite
        let mut damping = 0.0;
        let step = loop {
            let mut a = hu.clone();
            for d in 0..m {
                a[(d, d)] += damping;
            }
            if let Some(ch) = a.cholesky() {
                break ch.solve(&(-&gu));
            }
            damping = if damping == 0.0 { 1e-8 * (1.0 + hu.amax()) } else { damping * 10.0 };
            if damping > 1e12 {
                return None;
            }
        };
        let mut step = step;
        let big = step.amax();
        if big > 2.0 {
            step *= 2.0 / big;
        }
        let slope = gu.dot(&step);

        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let mut trial = theta;
            for (r, &i) in idx.iter().enumerate() {
                trial[i] = theta[i] * (t * step[r]).exp();
            }
            if trial == theta {
                break;
            }
            let ft = obj.value(&trial);
            // where f is flat to rounding, judge the step by the gradient instead
            let flat = (ft - f).abs() <= 1e-12 * (1.0 + f.abs()) && scaled_grad_norm(obj, &trial, &idx) < grad_norm;
            if ft <= f + 1e-4 * t * slope || flat {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, ft)) => {
                theta = trial;
                f = ft;
            }
            None => {
                // no further decrease representable
                return (grad_norm <= LOOSE_GRAD_TOL).then_some(Candidate { theta, value: f });
            }
        }
        if idx.iter().any(|&i| i > 0 && theta[i] < 1e-13 * theta[0]) {
            return None;
        }
    }
    None
}

/// Separable solution ignoring the single grand-mean eigenvalue: each
/// eigenvalue is `S_k / d_k`, pooled with `lambda_E` where the ordering
/// `lambda_R, lambda_C >= lambda_E` would be violated.
fn separable_lambdas(dec: &ProjectionDecomposition) -> [f64; 3] {
    let s = [dec.s_row, dec.s_col, dec.s_int];
    let d = [dec.d_row as f64, dec.d_col as f64, dec.d_int as f64];
    let mut pooled = [false, false];
    loop {
        let mut ss = s[2];
        let mut dd = d[2];
        for k in 0..2 {
            if pooled[k] {
                ss += s[k];
                dd += d[k];
            }
        }
        let lam_e = ss / dd;
        let mut changed = false;
        for k in 0..2 {
            if !pooled[k] && s[k] / d[k] < lam_e {
                pooled[k] = true;
                changed = true;
            }
        }
        if !changed {
            let lam = |k: usize| if pooled[k] { lam_e } else { s[k] / d[k] };
            return [lam(0), lam(1), lam_e];
        }
    }
}

fn random_fit_from_theta(
    theta_scaled: [f64; 3],
    scale: f64,
    obj: &EigenObjective,
    dec: &ProjectionDecomposition,
    design: &DesignSpec,
) -> ModelFit {
    let n = design.n() as f64;
    let theta = theta_scaled.map(|t| t * scale);
    let params = VarianceParams {
        sigma2: theta[0],
        sigma2_row: theta[1] / design.ncols as f64,
        sigma2_col: theta[2] / design.nrows as f64,
    };
    let log_det = obj.log_det(&theta_scaled) + n * scale.ln();
    let quad: f64 = (0..4).map(|k| obj.s[k] / EigenObjective::lambdas(&theta_scaled)[k]).sum();
    ModelFit {
        kind: ModelKind::RandomEffects,
        params,
        log_det_sigma_hat: log_det,
        mu_hat: vec![dec.grand_mean; design.n()],
        max_loglik_core: -0.5 * (n * LN_2PI + log_det + quad),
    }
}

fn scaled_objective(dec: &ProjectionDecomposition, n: f64) -> (EigenObjective, f64) {
    let scale = dec.centered_total() / n;
    let mut s = dec.norms();
    // grand mean is absorbed by the fitted mean
    s[0] = 0.0;
    let s = s.map(|v| v / scale);
    (EigenObjective { s, d: dec.dims() }, scale)
}

/// Balanced random-effects ML fit.
///
/// Starts from the separable solution and refines with Newton's method on
/// each of the four active sets of the constraints `sigma2_row >= 0`,
/// `sigma2_col >= 0`; the best KKT point is returned. Zero row or column
/// variance is a legal output.
pub fn fit_random_balanced(z: &[f64], design: &DesignSpec) -> Result<ModelFit> {
    let dec = decompose(z, design)?;
    check_fittable(design, &dec)?;
    let n = design.n() as f64;
    let (obj, scale) = scaled_objective(&dec, n);

    let [lr, lc, le] = separable_lambdas(&dec).map(|l| l / scale);
    let init = [le, (lr - le).max(0.0), (lc - le).max(0.0)];

    let mut best: Option<Candidate> = None;
    for free in [[true, true, true], [true, false, true], [true, true, false], [true, false, false]] {
        let mut start = init;
        for i in 1..3 {
            if free[i] {
                start[i] = start[i].max(0.1 * init[0]);
            }
        }
        let Some(cand) = newton_active_set(&obj, start, free) else {
            continue;
        };
        // multipliers of the active constraints must be nonnegative
        let (g, _) = obj.grad_hess(&cand.theta);
        let kkt = (1..3).all(|i| free[i] || g[i] * cand.theta[0] >= -1e-8);
        if kkt && best.as_ref().is_none_or(|b| cand.value < b.value) {
            best = Some(cand);
        }
    }
    match best {
        Some(c) => Ok(random_fit_from_theta(c.theta, scale, &obj, &dec, design)),
        None => Err(Error::Numeric {
            message: "random-effects Newton refinement did not converge on any active set".into(),
            best_objective: -0.5 * (n * LN_2PI + obj.value(&init) + n * scale.ln()),
        }),
    }
}

/// The separable (ANOVA-type) estimate that drops the coupling through the
/// grand-mean eigenvalue. Kept for comparison with the full fit; it is not
/// the MLE.
pub fn fit_random_separable(z: &[f64], design: &DesignSpec) -> Result<ModelFit> {
    let dec = decompose(z, design)?;
    check_fittable(design, &dec)?;
    let n = design.n() as f64;
    let (obj, scale) = scaled_objective(&dec, n);
    let [lr, lc, le] = separable_lambdas(&dec).map(|l| l / scale);
    Ok(random_fit_from_theta([le, lr - le, lc - le], scale, &obj, &dec, design))
}

/// Random-effects fit by a derivative-free simplex search over
/// `(ln sigma2, u, w)` with `c * sigma2_row = u^2`, `r * sigma2_col = w^2`.
/// Independent of the Newton path; used as an oracle and fallback.
pub fn fit_random_numeric(z: &[f64], design: &DesignSpec) -> Result<ModelFit> {
    let dec = decompose(z, design)?;
    check_fittable(design, &dec)?;
    let n = design.n() as f64;
    let (obj, scale) = scaled_objective(&dec, n);
    let to_theta = |x: &[f64]| [x[0].exp(), x[1] * x[1], x[2] * x[2]];
    let opts = NelderMeadOptions { restarts: 12, ..NelderMeadOptions::default() };
    let res = nelder_mead_min(|x| obj.value(&to_theta(x)), &[0.0, 0.5, 0.5], &opts);
    if !res.converged {
        return Err(Error::Numeric {
            message: format!("simplex search did not converge in {} evaluations", res.evals),
            best_objective: -0.5 * (n * LN_2PI + res.value + n * scale.ln()),
        });
    }
    Ok(random_fit_from_theta(to_theta(&res.x), scale, &obj, &dec, design))
}

/// `(z - mu_hat)' Sigma_hat^{-1} (z - mu_hat)`, evaluated in the eigenbasis.
pub fn quadratic_form(z: &[f64], fit: &ModelFit, design: &DesignSpec) -> Result<f64> {
    design.check_len(z)?;
    if fit.mu_hat.len() != z.len() {
        return Err(Error::Dimension("fit does not belong to this response".into()));
    }
    let lam = match fit.kind {
        ModelKind::FixedEffects => [fit.params.sigma2; 4],
        ModelKind::RandomEffects => fit.params.eigenvalues(design.nrows, design.ncols),
    };
    if lam.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::domain("covariance has a zero eigenvalue"));
    }
    let resid: Vec<f64> = z.iter().zip(&fit.mu_hat).map(|(a, b)| a - b).collect();
    let dec = decompose(&resid, design)?;
    Ok(dec.norms().iter().zip(lam).map(|(s, l)| s / l).sum())
}

/// Dense `n x n` covariance for the given parameters; intended for small
/// designs and cross-checks.
pub fn covariance_matrix(params: &VarianceParams, design: &DesignSpec) -> DMatrix<f64> {
    let n = design.n();
    DMatrix::from_fn(n, n, |i, j| {
        let mut v = 0.0;
        if i == j {
            v += params.sigma2;
        }
        if design.rows[i] == design.rows[j] {
            v += params.sigma2_row;
        }
        if design.cols[i] == design.cols[j] {
            v += params.sigma2_col;
        }
        v
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(r: usize, c: usize) -> DesignSpec {
        DesignSpec::column_major(r, c, ModelKind::FixedEffects).unwrap()
    }

    // small deterministic pseudo-random data
    fn data(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
            })
            .collect()
    }

    #[test]
    fn constant_vector_has_no_variation() {
        let d = decompose(&[3.0; 12], &grid(4, 3)).unwrap();
        assert_eq!((d.s_row, d.s_col, d.s_int), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_by_two_interaction() {
        // z11=1, z21=2, z12=3, z22=5; contrast (1,-1,-1,1)/2 gives (1-2-3+5)/2 = 0.5
        let z = [1.0, 2.0, 3.0, 5.0];
        let d = decompose(&z, &grid(2, 2)).unwrap();
        assert_relative_eq!(d.s_int, 0.25, epsilon = 1e-15);
        let f = fit_fixed(&z, &grid(2, 2)).unwrap();
        assert_relative_eq!(f.params.sigma2, 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn decomposition_is_orthogonal() {
        let z = data(20, 3);
        let d = decompose(&z, &grid(5, 4)).unwrap();
        let mean = z.iter().sum::<f64>() / 20.0;
        let total: f64 = z.iter().map(|v| (v - mean).powi(2)).sum();
        assert_relative_eq!(d.centered_total(), total, max_relative = 1e-10);
    }

    #[test]
    fn additive_data_is_degenerate() {
        let design = grid(3, 4);
        let z: Vec<f64> = (0..12).map(|k| (k % 3) as f64 + 10.0 * (k / 3) as f64).collect();
        assert!(matches!(fit_fixed(&z, &design), Err(Error::Degenerate(_))));
        assert!(matches!(fit_random_balanced(&z, &design), Err(Error::Degenerate(_))));
        assert!(matches!(fit_random_numeric(&[1.0; 12], &design), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_cell_perturbation_matches_least_squares() {
        // additive data plus eps in one cell: the residual is eps times the
        // interaction projection of e_k, whose squared norm is (r-1)(c-1)/n
        let (r, c) = (4, 3);
        let design = grid(r, c);
        let eps = 0.7;
        let mut z: Vec<f64> = (0..12).map(|k| (k % r) as f64 * 1.5 - (k / r) as f64).collect();
        z[5] += eps;
        let f = fit_fixed(&z, &design).unwrap();
        let n = 12.0;
        let proj = ((r - 1) * (c - 1)) as f64 / n;
        assert_relative_eq!(f.params.sigma2, eps * eps * proj / n, max_relative = 1e-12);
    }

    #[test]
    fn fixed_fit_is_scale_equivariant() {
        let design = grid(5, 4);
        let z = data(20, 9);
        let zs: Vec<f64> = z.iter().map(|v| 3.0 - 2.5 * v).collect();
        let a = fit_fixed(&z, &design).unwrap();
        let b = fit_fixed(&zs, &design).unwrap();
        assert_relative_eq!(b.params.sigma2, 6.25 * a.params.sigma2, max_relative = 1e-12);
    }

    #[test]
    fn row_variance_hits_boundary_when_rows_are_flat() {
        // identical row means => S_R = 0 < S_E/d_E
        let design = grid(4, 5).with_model(ModelKind::RandomEffects);
        let mut z = data(20, 11);
        let dec = decompose(&z, &design).unwrap();
        for (k, v) in z.iter_mut().enumerate() {
            *v -= dec.row_means[k % 4] - dec.grand_mean;
        }
        let f = fit_random_balanced(&z, &design).unwrap();
        assert_eq!(f.params.sigma2_row, 0.0);
        let g = fit_random_numeric(&z, &design).unwrap();
        assert!((f.max_loglik_core - g.max_loglik_core).abs() < 1e-6);
    }

    #[test]
    fn random_fit_scale_equivariance() {
        let design = grid(6, 5).with_model(ModelKind::RandomEffects);
        let z: Vec<f64> = data(30, 5).iter().enumerate().map(|(k, v)| v + (k % 6) as f64 * 0.8).collect();
        let a = fit_random_balanced(&z, &design).unwrap();
        let b = fit_random_balanced(&z.iter().map(|v| 3.0 * v).collect::<Vec<_>>(), &design).unwrap();
        assert_relative_eq!(b.params.sigma2, 9.0 * a.params.sigma2, max_relative = 1e-8);
        assert_relative_eq!(b.params.sigma2_row, 9.0 * a.params.sigma2_row, max_relative = 1e-8);
        assert_relative_eq!(b.params.sigma2_col, 9.0 * a.params.sigma2_col, epsilon = 1e-8 * a.params.sigma2);
        assert_relative_eq!(b.log_det_sigma_hat, a.log_det_sigma_hat + 30.0 * 9f64.ln(), max_relative = 1e-10);
    }

    #[test]
    fn refined_fit_beats_separable() {
        let design = grid(6, 5).with_model(ModelKind::RandomEffects);
        let z: Vec<f64> = data(30, 21).iter().enumerate().map(|(k, v)| v + (k / 6) as f64).collect();
        let full = fit_random_balanced(&z, &design).unwrap();
        let sep = fit_random_separable(&z, &design).unwrap();
        assert!(full.max_loglik_core >= sep.max_loglik_core - 1e-12);
    }

    #[test]
    fn doubled_variance_halves_quadratic_form() {
        let design = grid(5, 4);
        let z = data(20, 2);
        let f = fit_fixed(&z, &design).unwrap();
        let q = quadratic_form(&z, &f, &design).unwrap();
        assert_relative_eq!(q, 20.0, max_relative = 1e-10);
        let q2 = quadratic_form(&z, &f.with_scaled_variance(2.0), &design).unwrap();
        assert_relative_eq!(q2, 10.0, max_relative = 1e-10);
    }

    #[test]
    fn labels_must_be_balanced() {
        assert!(DesignSpec::from_labels(vec![0, 1, 0], vec![0, 0, 1], ModelKind::FixedEffects).is_err());
        assert!(DesignSpec::from_labels(vec![0, 0, 1, 1], vec![0, 0, 1, 1], ModelKind::FixedEffects).is_err());
        let d = DesignSpec::from_labels(vec![1, 0, 1, 0], vec![1, 1, 0, 0], ModelKind::FixedEffects).unwrap();
        assert_eq!((d.nrows(), d.ncols()), (2, 2));
        assert!(fit_fixed(&[1.0, 2.0], &d).is_err());
    }
}
