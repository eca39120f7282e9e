//! Cell-wise extraction of `(v, alpha)` that keeps going past bad cells.

use viscowri::atten::{inverse_scalar, AttenuationModelKind, FrequencySpec};
use viscowri::{ComplexField, RealField};

/// Extracted fields; cells outside the extraction domain hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub v: RealField,
    pub alpha: RealField,
    pub bad: Vec<usize>,
}

pub fn extract_cells(kind: AttenuationModelKind, m: &ComplexField, freq: FrequencySpec) -> Extracted {
    let mut bad = Vec::new();
    let mut alpha = RealField::zeros(*m.grid());
    let mut v = RealField::zeros(*m.grid());
    for (i, &z) in m.values().iter().enumerate() {
        let (vi, ai) = inverse_scalar(kind, z, freq).unwrap_or_else(|| {
            bad.push(i);
            (f64::NAN, f64::NAN)
        });
        v.values_mut()[i] = vi;
        alpha.values_mut()[i] = ai;
    }
    Extracted { v, alpha, bad }
}

pub fn kind_name(kind: AttenuationModelKind) -> &'static str {
    match kind {
        AttenuationModelKind::Kf => "kf",
        AttenuationModelKind::Sls => "sls",
    }
}
