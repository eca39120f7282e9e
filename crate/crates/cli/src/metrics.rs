//! Model-error metrics and the JSON metrics report.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use viscowri::{RealField, C64};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Re,
    Im,
    Magnitude,
    Phase,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [Attribute::Re, Attribute::Im, Attribute::Magnitude, Attribute::Phase];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Re => "re",
            Attribute::Im => "im",
            Attribute::Magnitude => "magnitude",
            Attribute::Phase => "phase",
        }
    }
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(d: f64) -> f64 {
    let r = d.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

fn relative_l2(diff: impl Iterator<Item = f64>, truth: impl Iterator<Item = f64>) -> f64 {
    let num: f64 = diff.map(|d| d * d).sum();
    let den: f64 = truth.map(|t| t * t).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Relative l2 error of one attribute of a complex model; falls back to the
/// absolute norm when the truth vanishes. Phases are compared modulo `2 pi`.
pub fn model_error(estimate: &[C64], truth: &[C64], attribute: Attribute) -> CliResult<f64> {
    if estimate.len() != truth.len() {
        return Err(CliError::config(format!(
            "cannot compare models of {} and {} cells",
            estimate.len(),
            truth.len()
        )));
    }
    let pairs = || estimate.iter().zip(truth);
    Ok(match attribute {
        Attribute::Re => relative_l2(pairs().map(|(e, t)| e.re - t.re), truth.iter().map(|t| t.re)),
        Attribute::Im => relative_l2(pairs().map(|(e, t)| e.im - t.im), truth.iter().map(|t| t.im)),
        Attribute::Magnitude => relative_l2(pairs().map(|(e, t)| e.norm() - t.norm()), truth.iter().map(|t| t.norm())),
        Attribute::Phase => {
            relative_l2(pairs().map(|(e, t)| wrap_angle(e.arg() - t.arg())), truth.iter().map(|t| t.arg()))
        }
    })
}

/// Relative l2 error of a real field, ignoring cells where the estimate is not finite.
pub fn field_error(estimate: &RealField, truth: &RealField) -> CliResult<f64> {
    real_error(estimate.values(), truth.values())
}

pub fn real_error(estimate: &[f64], truth: &[f64]) -> CliResult<f64> {
    if estimate.len() != truth.len() {
        return Err(CliError::config(format!(
            "cannot compare fields of {} and {} cells",
            estimate.len(),
            truth.len()
        )));
    }
    let ok = || estimate.iter().zip(truth).filter(|(e, _)| e.is_finite());
    Ok(relative_l2(ok().map(|(e, t)| e - t), ok().map(|(_, t)| *t)))
}

/// Per-attribute errors of a complex model.
pub fn complex_errors(estimate: &[C64], truth: &[C64]) -> CliResult<BTreeMap<String, f64>> {
    Attribute::ALL.iter().map(|&a| Ok((a.name().to_string(), model_error(estimate, truth, a)?))).collect()
}

/// Results of one run (a regularization scheme, a CS configuration, a mechanism).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub name: String,
    /// Relative l2 errors keyed by attribute (`re`, `im`, `magnitude`, `phase`, `v_kf`, ...).
    pub errors: BTreeMap<String, f64>,
    /// Scenario-specific scalars such as inclusion means.
    pub values: BTreeMap<String, f64>,
    /// Data misfit per iteration.
    pub misfit: Vec<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub runs: Vec<RunMetrics>,
    pub wall_time: f64,
}

impl MetricsReport {
    pub fn run(&self, name: &str) -> Option<&RunMetrics> {
        self.runs.iter().find(|r| r.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_models_have_zero_error() {
        let m = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.1)];
        for a in Attribute::ALL {
            assert_eq!(model_error(&m, &m, a).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_estimate_has_unit_magnitude_error() {
        let t = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.1)];
        let e = vec![C64::new(0.0, 0.0); 2];
        assert!((model_error(&e, &t, Attribute::Magnitude).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_error_is_wrapped() {
        let t: Vec<C64> = [0.3, -1.2, 2.9].iter().map(|&p| C64::from_polar(1.0, p)).collect();
        let e: Vec<C64> = [0.3, -1.2, 2.9].iter().map(|&p| C64::from_polar(1.0, p + 2.0 * PI)).collect();
        assert!(model_error(&e, &t, Attribute::Phase).unwrap() < 1e-14);
    }

    #[test]
    fn zero_truth_uses_absolute_norm() {
        let t = vec![C64::new(0.0, 0.0); 2];
        let e = vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0)];
        assert!((model_error(&e, &t, Attribute::Re).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(model_error(&[C64::new(1.0, 0.0)], &[], Attribute::Re).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }
}
