use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use quantmatch::translik::{
    self, boxcox_profile, correlation_report, linear_grid, loglik_ratio, lr_diagnostics_gaussian_uniform,
    lr_diagnostics_logistic_uniform, profile_alpha, profile_student_t, reduced_profile_loglik, CurveTerms,
    GaussianUniformDiagnostics, LogisticUniformDiagnostics, ProfileCurve,
};
use quantmatch::{simdesign, EffectDist, Family, ModelKind, SimConfig, TargetDistribution};

use crate::data::{self, fmt_f64, read_data, with_suffix, write_curve, write_data, write_json, CurveRow};
use crate::error::{CliError, Result};
use crate::manifest::{input_seed, RunManifest};
use crate::targetspec::{parse_target, parse_targets};

/// Write to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("<stdout>")(e)),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectsArg {
    Gaussian,
    Cauchy,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Fixed,
    Random,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Fixed => ModelKind::FixedEffects,
            ModelArg::Random => ModelKind::RandomEffects,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    /// Student-t indexed by 1/nu in [0, 1]
    T,
    /// alpha-beta family with alpha = beta in [-1, 1]
    Alpha,
    /// Box-Cox power g in [-1, 1] (positive data only)
    Boxcox,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 50)]
    pub nrows: usize,
    #[arg(long, default_value_t = 30)]
    pub ncols: usize,
    #[arg(long, value_enum, default_value_t = EffectsArg::Gaussian)]
    pub effects: EffectsArg,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub intercept: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Data CSV to write; the manifest goes next to it as <stem>.manifest.json
    #[arg(long)]
    pub out: PathBuf,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let config = SimConfig {
        nrows: args.nrows,
        ncols: args.ncols,
        effect_dist: match args.effects {
            EffectsArg::Gaussian => EffectDist::Gaussian,
            EffectsArg::Cauchy => EffectDist::Cauchy,
        },
        intercept: args.intercept,
        noise_sd: args.noise_sd,
        seed: args.seed,
    };
    let out = simdesign::simulate(&config)?;
    write_data(&args.out, &out.y, &out.design)?;
    let manifest = RunManifest::new("simulate", serde_json::to_value(&config)?, Some(args.seed));
    write_json(&data::manifest_path(&args.out), &manifest)?;
    eprintln!("wrote {} observations to {}", out.y.len(), args.out.display());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value_t = ModelArg::Fixed)]
    pub model: ModelArg,
    #[arg(long)]
    pub input: PathBuf,
    /// Explicit comma-separated grid; overrides --grid-min/--grid-max/--grid-step
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with_all = ["grid_min", "grid_max", "grid_step"])]
    pub grid: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Golden-section refinement around the best grid point
    #[arg(long)]
    pub refine: bool,
    /// Output prefix: writes <PREFIX>.curve.csv and <PREFIX>.summary.json
    #[arg(long)]
    pub out: PathBuf,
}

impl ProfileArgs {
    fn resolved_grid(&self) -> Result<Vec<f64>> {
        if let Some(g) = &self.grid {
            return Ok(g.clone());
        }
        let (lo, hi, step) = match self.family {
            FamilyArg::T => (0.0, 1.0, 0.02),
            FamilyArg::Alpha => (-1.0, 1.0, 0.01),
            FamilyArg::Boxcox => (-1.0, 1.0, 0.05),
        };
        Ok(linear_grid(
            self.grid_min.unwrap_or(lo),
            self.grid_max.unwrap_or(hi),
            self.grid_step.unwrap_or(step),
        )?)
    }
}

#[derive(Debug, Serialize)]
struct TArgmax {
    inv_nu: f64,
    value: f64,
}

#[derive(Debug, Default, Serialize)]
struct Comparators {
    #[serde(skip_serializing_if = "Option::is_none")]
    gaussian: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    logistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_argmax: Option<TArgmax>,
}

#[derive(Debug, Serialize)]
struct ProfileSummary {
    family: FamilyArg,
    model: ModelArg,
    n: usize,
    argmax_param: f64,
    argmax_value: f64,
    refined: bool,
    grid_points: usize,
    failed_points: usize,
    comparators: Comparators,
    warnings: Vec<String>,
    manifest: RunManifest,
}

fn curve_row(param: f64, t: &CurveTerms) -> CurveRow {
    CurveRow { param, value: t.value, det_term: t.det_term, jacobian_term: t.jacobian_term }
}

pub fn profile(args: &ProfileArgs) -> Result<()> {
    let data = read_data(&args.input)?;
    let design = data.design(args.model.into())?;
    let grid = args.resolved_grid()?;
    let y = &data.y;
    let curve: ProfileCurve = match args.family {
        FamilyArg::T => profile_student_t(y, &design, &grid, args.refine)?,
        FamilyArg::Alpha => profile_alpha(y, &design, &grid, args.refine)?,
        FamilyArg::Boxcox => boxcox_profile(y, &design, &grid, args.refine)?,
    };

    let mut warnings: Vec<String> = curve
        .failures
        .iter()
        .map(|(p, e)| format!("grid point {p} failed: {e}"))
        .collect();
    let mut comparators = Comparators::default();
    let mut comparator = |name: &str, dist: TargetDistribution| match reduced_profile_loglik(y, &dist, &design) {
        Ok(r) => Some(r.value),
        Err(e) => {
            warnings.push(format!("{name} comparator failed: {e}"));
            None
        }
    };
    match args.family {
        FamilyArg::T => comparators.gaussian = comparator("gaussian", TargetDistribution::gaussian()),
        FamilyArg::Alpha => {
            comparators.gaussian = comparator("gaussian", TargetDistribution::gaussian());
            comparators.logistic = comparator("logistic", TargetDistribution::logistic());
            match profile_student_t(y, &design, &translik::default_inv_nu_grid(), true) {
                Ok(t) => comparators.t_argmax = Some(TArgmax { inv_nu: t.argmax_param, value: t.argmax_value }),
                Err(e) => warnings.push(format!("t-family comparator failed: {e}")),
            }
        }
        FamilyArg::Boxcox => {}
    }

    let mut rows: Vec<(f64, Option<CurveRow>)> =
        curve.points.iter().map(|p| (p.param, p.terms.as_ref().map(|t| curve_row(p.param, t)))).collect();
    if let Some(r) = &curve.refined {
        if let Some(t) = &r.terms {
            let at = rows.partition_point(|(p, _)| *p < r.param);
            rows.insert(at, (r.param, Some(curve_row(r.param, t))));
        }
    }
    let curve_path = with_suffix(&args.out, ".curve.csv");
    write_curve(&curve_path, &rows)?;

    let summary = ProfileSummary {
        family: args.family,
        model: args.model,
        n: y.len(),
        argmax_param: curve.argmax_param,
        argmax_value: curve.argmax_value,
        refined: curve.refined.is_some(),
        grid_points: grid.len(),
        failed_points: curve.failures.len(),
        comparators,
        warnings,
        manifest: RunManifest::new("profile", serde_json::to_value(args)?, input_seed(&args.input)),
    };
    let summary_path = with_suffix(&args.out, ".summary.json");
    write_json(&summary_path, &summary)?;
    emit(&format!(
        "argmax_param = {}\nargmax_value = {}\n",
        fmt_f64(summary.argmax_param),
        fmt_f64(summary.argmax_value)
    ))?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("wrote {} and {}", curve_path.display(), summary_path.display());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Target spec for the numerator, e.g. gaussian, t:nu=6.67, alpha:a=-0.05,b=-0.05
    #[arg(long)]
    pub a: String,
    /// Target spec for the denominator
    #[arg(long)]
    pub b: String,
    #[arg(long, value_enum, default_value_t = ModelArg::Fixed)]
    pub model: ModelArg,
    #[arg(long)]
    pub input: PathBuf,
    /// Also write the JSON report to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Side {
    target: String,
    det_term: f64,
    jacobian_term: f64,
    value: f64,
}

#[derive(Debug, Default, Serialize)]
struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    gaussian_uniform: Option<GaussianUniformDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    logistic_uniform: Option<LogisticUniformDiagnostics>,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    model: ModelArg,
    n: usize,
    lr: f64,
    a: Side,
    b: Side,
    diagnostics: Diagnostics,
    manifest: RunManifest,
}

fn plain(dist: &TargetDistribution) -> Option<&'static str> {
    if dist.loc() != 0.0 || dist.scale() != 1.0 {
        return None;
    }
    match dist.family() {
        Family::Gaussian => Some("gaussian"),
        Family::Uniform => Some("uniform"),
        Family::Logistic => Some("logistic"),
        _ => None,
    }
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    let a = parse_target(&args.a)?;
    let b = parse_target(&args.b)?;
    let data = read_data(&args.input)?;
    let design = data.design(args.model.into())?;
    let y = &data.y;
    let side = |dist: &TargetDistribution| -> Result<Side> {
        let r = reduced_profile_loglik(y, dist, &design)?;
        Ok(Side { target: dist.to_string(), det_term: r.det_term, jacobian_term: r.jacobian_term, value: r.value })
    };
    let (sa, sb) = (side(&a)?, side(&b)?);

    let mut diagnostics = Diagnostics::default();
    let mut pair = [plain(&a), plain(&b)];
    pair.sort();
    match pair {
        [Some("gaussian"), Some("uniform")] => {
            diagnostics.gaussian_uniform = Some(lr_diagnostics_gaussian_uniform(y, &design)?)
        }
        [Some("logistic"), Some("uniform")] => {
            diagnostics.logistic_uniform = Some(lr_diagnostics_logistic_uniform(y, &design)?)
        }
        _ => {}
    }

    let report = CompareReport {
        model: args.model,
        n: y.len(),
        lr: loglik_ratio(y, &a, &b, &design)?,
        a: sa,
        b: sb,
        diagnostics,
        manifest: RunManifest::new("compare", serde_json::to_value(args)?, input_seed(&args.input)),
    };
    emit(&format!("{}\n", serde_json::to_string_pretty(&report)?))?;
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated target specs, e.g. alpha:a=-0.05,b=-0.05,logistic,gaussian,t:nu=6.67
    #[arg(long)]
    pub targets: String,
    /// Also write the CSV row to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn correlate(args: &CorrelateArgs) -> Result<()> {
    let targets = parse_targets(&args.targets)?;
    let data = read_data(&args.input)?;
    let corr = correlation_report(&data.y, &targets)?;
    let names: Vec<String> = targets.iter().map(ToString::to_string).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Data(format!("formatting CSV: {e}"));
    w.write_record(&names).map_err(csv_err)?;
    w.write_record(corr.iter().map(|c| fmt_f64(*c))).map_err(csv_err)?;
    let csv_text = String::from_utf8(w.into_inner().map_err(|e| CliError::Data(e.to_string()))?)
        .expect("CSV output is UTF-8");

    let width = names.iter().map(String::len).max().unwrap_or(0).max(8);
    let header: String = names.iter().map(|n| format!("  {n:>width$}")).collect();
    let values: String = corr.iter().map(|c| format!("  {c:>width$.3}")).collect();
    emit(&format!("{csv_text}\n{:<8}{header}\n{:<8}{values}\n", "", "identity"))?;

    if let Some(path) = &args.out {
        std::fs::write(path, &csv_text).map_err(CliError::io(path))?;
        let manifest = RunManifest::new("correlate", json!(args), input_seed(&args.input));
        write_json(&data::manifest_path(path), &manifest)?;
    }
    Ok(())
}
