use proptest::prelude::*;

use quantmatch::linmodel::{decompose, fit_fixed, fit_random_balanced};
use quantmatch::percentile::percentiles;
use quantmatch::translik::loglik_ratio;
use quantmatch::{DesignSpec, ModelKind, TargetDistribution};

fn distinct(v: Vec<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn any_target() -> impl Strategy<Value = TargetDistribution> {
    prop_oneof![
        Just(TargetDistribution::gaussian()),
        Just(TargetDistribution::uniform()),
        Just(TargetDistribution::logistic()),
        (0.0..=1.0f64).prop_map(|v| TargetDistribution::student_t(v).unwrap()),
        (-1.0..=1.0f64, -1.0..=1.0f64).prop_map(|(a, b)| TargetDistribution::alpha_beta(a, b).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn percentiles_invariant_under_cubing(y in prop::collection::vec(-50.0..50.0f64, 1..200)) {
        let cubed: Vec<f64> = y.iter().map(|v| v * v * v).collect();
        prop_assert_eq!(percentiles(&y).unwrap(), percentiles(&cubed).unwrap());
    }

    #[test]
    fn percentiles_sum_to_half_n(y in prop::collection::vec(-5i32..5, 1..300)) {
        // small integer range forces plenty of ties
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let pc = percentiles(&y).unwrap();
        let n = y.len() as f64;
        let sum: f64 = pc.values().iter().sum();
        prop_assert!((sum - n / 2.0).abs() <= 1e-12 * n);
        prop_assert!(pc.values().iter().all(|p| *p > 0.0 && *p < 1.0));
    }

    #[test]
    fn percentiles_preserve_order(y in prop::collection::vec(-3i32..3, 2..100)) {
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let p = percentiles(&y).unwrap();
        let p = p.values();
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] < y[j] {
                    prop_assert!(p[i] < p[j]);
                } else if y[i] == y[j] {
                    prop_assert_eq!(p[i], p[j]);
                }
            }
        }
    }

    #[test]
    fn duplicated_sample_straddles(y in prop::collection::vec(-100.0..100.0f64, 1..100)) {
        let y = distinct(y);
        let n = y.len();
        let mut doubled = y.clone();
        doubled.extend_from_slice(&y);
        let single = percentiles(&y).unwrap();
        let double = percentiles(&doubled).unwrap();
        for i in 0..n {
            // value of rank r (1-based) occupies positions 2r-1, 2r in the doubled sample
            let r = (single.values()[i] * (2 * n) as f64 + 1.0) / 2.0;
            let left = (2.0 * (2.0 * r - 1.0) - 1.0) / (4 * n) as f64;
            let right = (2.0 * (2.0 * r) - 1.0) / (4 * n) as f64;
            prop_assert!((double.values()[i] - 0.5 * (left + right)).abs() < 1e-15);
            prop_assert!((double.values()[i] - single.values()[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_monotone_and_derivative_consistent(dist in any_target()) {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..1000 {
            let q = dist.quantile(k as f64 / 1000.0).unwrap();
            prop_assert!(q > prev, "{dist} not increasing at {k}");
            prev = q;
        }
        for k in 1..=99 {
            let p = k as f64 / 100.0;
            let h = 1e-6 * p.min(1.0 - p);
            let fd = (dist.quantile(p + h).unwrap() - dist.quantile(p - h).unwrap()) / (2.0 * h);
            let exact = dist.log_quantile_derivative(p).unwrap().exp();
            prop_assert!(((fd - exact) / exact).abs() < 1e-5, "{dist} at {p}: {fd} vs {exact}");
        }
    }

    #[test]
    fn cdf_inverts_quantile(inv_nu in 0.0..=1.0f64, k in 1usize..1000) {
        let p = k as f64 / 1000.0;
        for dist in [
            TargetDistribution::gaussian(),
            TargetDistribution::uniform(),
            TargetDistribution::logistic(),
            TargetDistribution::student_t(inv_nu).unwrap(),
        ] {
            let back = dist.cdf(dist.quantile(p).unwrap()).unwrap();
            prop_assert!((back - p).abs() < 1e-10, "{dist}: {back} vs {p}");
        }
    }

    #[test]
    fn ratios_are_antisymmetric_and_chain(
        seed in 0u64..1000,
        a in any_target(),
        b in any_target(),
        c in any_target(),
    ) {
        let out = quantmatch::simdesign::simulate(&quantmatch::SimConfig {
            nrows: 6,
            ncols: 5,
            ..quantmatch::SimConfig::paper_scale(quantmatch::EffectDist::Cauchy, seed)
        }).unwrap();
        for model in [ModelKind::FixedEffects, ModelKind::RandomEffects] {
            let d = out.design.with_model(model);
            let ab = loglik_ratio(&out.y, &a, &b, &d).unwrap();
            prop_assert_eq!(ab, -loglik_ratio(&out.y, &b, &a, &d).unwrap());
            let bc = loglik_ratio(&out.y, &b, &c, &d).unwrap();
            let ac = loglik_ratio(&out.y, &a, &c, &d).unwrap();
            prop_assert!((ac - ab - bc).abs() < 1e-8 * (1.0 + ac.abs()));
        }
    }

    #[test]
    fn fitted_parameters_are_local_maxima(z in prop::collection::vec(-3.0..3.0f64, 30)) {
        let design = DesignSpec::column_major(6, 5, ModelKind::RandomEffects).unwrap();
        let dec = decompose(&z, &design).unwrap();
        prop_assume!(dec.s_int > 1e-6);
        let n = 30.0;
        let fixed = fit_fixed(&z, &design).unwrap();
        let fixed_ll = |s2: f64| -0.5 * (n * s2.ln() + dec.s_int / s2);
        for f in [0.99, 1.01] {
            prop_assert!(fixed_ll(fixed.params.sigma2 * f) <= fixed_ll(fixed.params.sigma2));
        }

        let fit = fit_random_balanced(&z, &design).unwrap();
        let ll = |p: [f64; 3]| {
            let lam = [p[0] + 5.0 * p[1] + 6.0 * p[2], p[0] + 5.0 * p[1], p[0] + 6.0 * p[2], p[0]];
            let s = [0.0, dec.s_row, dec.s_col, dec.s_int];
            let d = [1.0, 5.0, 4.0, 20.0];
            -0.5 * (0..4).map(|k| d[k] * lam[k].ln() + s[k] / lam[k]).sum::<f64>()
        };
        let best = [fit.params.sigma2, fit.params.sigma2_row, fit.params.sigma2_col];
        let at_best = ll(best);
        prop_assert!((at_best - (fit.max_loglik_core + 0.5 * n * (2.0 * std::f64::consts::PI).ln())).abs() < 1e-9 * (1.0 + at_best.abs()));
        for i in 0..3 {
            for f in [0.99, 1.01] {
                let mut p = best;
                p[i] *= f;
                prop_assert!(ll(p) <= at_best + 1e-12 * at_best.abs());
            }
        }
    }
}

#[test]
fn t_family_approaches_gaussian() {
    let t = TargetDistribution::student_t(1e-6).unwrap();
    let g = TargetDistribution::gaussian();
    for k in 1..=99 {
        let p = k as f64 / 100.0;
        assert!((t.quantile(p).unwrap() - g.quantile(p).unwrap()).abs() < 1e-3);
    }
}

#[test]
fn alpha_beta_approaches_logistic() {
    let ab = TargetDistribution::alpha_beta(1e-6, 1e-6).unwrap();
    let l = TargetDistribution::logistic();
    for k in 1..=99 {
        let p = k as f64 / 100.0;
        assert!((ab.quantile(p).unwrap() - l.quantile(p).unwrap()).abs() < 1e-3);
    }
}
