//! Target specifications of the form `name[:key=val,...]`.
//!
//! ```text
//! gaussian | uniform | logistic
//! t:nu=<1..inf>  |  t:inv_nu=<0..1>
//! alpha:a=<-1..1>[,b=<-1..1>]      (b defaults to a)
//! ```
//!
//! In a list, targets are separated by commas; a comma-separated `key=val`
//! without a name continues the previous target, so
//! `alpha:a=-0.05,b=-0.05,logistic` is two targets.

use quantmatch::TargetDistribution;

use crate::error::{CliError, Result};

pub const GRAMMAR: &str = "target spec grammar: gaussian | uniform | logistic | t:nu=<1..inf> | t:inv_nu=<0..1> | alpha:a=<-1..1>[,b=<-1..1>]";

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{msg}\n{GRAMMAR}"))
}

fn parse_value(key: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("cannot parse {key}={raw:?} as a number")))
}

fn build(name: &str, args: &[(String, String)]) -> Result<TargetDistribution> {
    let get = |key: &str| -> Result<Option<f64>> {
        args.iter()
            .find(|(k, _)| k == key)
            .map(|(k, v)| parse_value(k, v))
            .transpose()
    };
    let allow = |keys: &[&str]| -> Result<()> {
        match args.iter().find(|(k, _)| !keys.contains(&k.as_str())) {
            Some((k, _)) => Err(usage(format!("unknown key {k:?} for target {name:?}"))),
            None => Ok(()),
        }
    };
    let dist = match name {
        "gaussian" | "uniform" | "logistic" => {
            allow(&[])?;
            match name {
                "gaussian" => TargetDistribution::gaussian(),
                "uniform" => TargetDistribution::uniform(),
                _ => TargetDistribution::logistic(),
            }
        }
        "t" => {
            allow(&["nu", "inv_nu"])?;
            match (get("nu")?, get("inv_nu")?) {
                (Some(nu), None) => {
                    if nu.is_nan() || nu < 1.0 {
                        return Err(usage(format!("t needs nu >= 1, got {nu}")));
                    }
                    TargetDistribution::student_t(1.0 / nu)
                }
                (None, Some(v)) => TargetDistribution::student_t(v),
                _ => return Err(usage("t needs exactly one of nu= or inv_nu=")),
            }
            .map_err(usage)?
        }
        "alpha" => {
            allow(&["a", "b"])?;
            let a = get("a")?.ok_or_else(|| usage("alpha needs a="))?;
            let b = get("b")?.unwrap_or(a);
            TargetDistribution::alpha_beta(a, b).map_err(usage)?
        }
        other => return Err(usage(format!("unknown target {other:?}"))),
    };
    Ok(dist)
}

fn split_key_value(token: &str) -> Result<(String, String)> {
    match token.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(usage(format!("expected key=value, got {token:?}"))),
    }
}

/// Parse a single target.
pub fn parse_target(spec: &str) -> Result<TargetDistribution> {
    let list = parse_targets(spec)?;
    match list.as_slice() {
        [one] => Ok(*one),
        _ => Err(usage(format!("expected one target, got {} in {spec:?}", list.len()))),
    }
}

/// Parse a comma-separated list of targets.
pub fn parse_targets(spec: &str) -> Result<Vec<TargetDistribution>> {
    let mut pending: Vec<(String, Vec<(String, String)>)> = Vec::new();
    for token in spec.split(',').map(str::trim) {
        if token.is_empty() {
            continue;
        }
        if let Some((name, first)) = token.split_once(':') {
            pending.push((name.trim().to_string(), vec![split_key_value(first)?]));
        } else if token.contains('=') {
            let Some(last) = pending.last_mut() else {
                return Err(usage(format!("{token:?} does not follow a target name")));
            };
            last.1.push(split_key_value(token)?);
        } else {
            pending.push((token.to_string(), Vec::new()));
        }
    }
    if pending.is_empty() {
        return Err(usage("no targets given"));
    }
    pending.iter().map(|(name, args)| build(name, args)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_with_continuations() {
        let v = parse_targets("alpha:a=-0.05,b=-0.05,logistic,gaussian,t:nu=6.67").unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], TargetDistribution::alpha_beta(-0.05, -0.05).unwrap());
        assert_eq!(v[1], TargetDistribution::logistic());
        assert_eq!(v[2], TargetDistribution::gaussian());
        assert_eq!(v[3], TargetDistribution::student_t(1.0 / 6.67).unwrap());
    }

    #[test]
    fn single_targets() {
        assert_eq!(parse_target("uniform").unwrap(), TargetDistribution::uniform());
        assert_eq!(parse_target("t:inv_nu=0.25").unwrap(), TargetDistribution::student_t(0.25).unwrap());
        assert_eq!(parse_target("alpha:a=0.3").unwrap(), TargetDistribution::alpha_beta(0.3, 0.3).unwrap());
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "normal", "t", "t:nu=0.5", "t:nu=2,inv_nu=0.5", "alpha:b=1", "alpha:a=2", "gaussian:x=1", "b=1", "t:nu=abc", "gaussian,logistic"] {
            let err = parse_target(bad).unwrap_err();
            assert!(matches!(err, CliError::Usage(_)), "{bad}");
            assert!(err.to_string().contains("grammar"), "{bad}");
        }
    }
}
