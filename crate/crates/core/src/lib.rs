//! Likelihood-based comparison of quantile-matching transformations.
//!
//! A quantile-matching transformation sends each observed response value
//! to the quantile of a target distribution `G` at the value's empirical
//! percentile. Different targets are compared by the profile log likelihood
//! of the transformed response under a Gaussian linear model. Because the
//! percentile function is only pinned down at the data points, every
//! statistic here is a *reduced* profile: the term depending on the
//! derivative of the percentile interpolant is common to all targets and
//! is dropped.
//!
//! Modules:
//! - [`targetdist`]: target distributions via quantile function and
//!   log-quantile-derivative.
//! - [`percentile`]: tie-consistent rankit percentiles.
//! - [`linmodel`]: ML fits for balanced row-column designs (fixed effects
//!   and random effects).
//! - [`translik`]: reduced profile likelihoods, likelihood ratios, family
//!   profiles and the Box-Cox comparator.
//! - [`simdesign`]: seedable simulation of row-column experiments.

// NaN-rejecting comparisons are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linmodel;
pub mod optimize;
pub mod percentile;
pub mod simdesign;
pub mod special;
pub mod targetdist;
pub mod translik;

pub use error::{Error, Result};
pub use linmodel::{DesignSpec, ModelFit, ModelKind, ProjectionDecomposition, VarianceParams};
pub use percentile::PercentileVector;
pub use simdesign::{EffectDist, SimConfig, SimOutput};
pub use targetdist::{AlphaBetaParam, Family, TFamilyParam, TargetDistribution};
pub use translik::{CurveFamily, CurvePoint, ProfileCurve, ReducedProfileLoglik};
