//! Kolsky-Futterman (KF) and standard-linear-solid (SLS) maps between the
//! physical pair `(v, alpha)` and complex squared slowness `m`.
//!
//! Time dependence is `exp(-i omega t)`, so attenuating media have `Im(m) > 0`.

use std::f64::consts::PI;

use crate::error::{BadCells, Error, Result};
use crate::field::{ComplexField, Field, Grid2D, RealField, C64};

const ALPHA_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttenuationModelKind {
    Kf,
    Sls,
}

impl std::str::FromStr for AttenuationModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kf" => Ok(Self::Kf),
            "sls" => Ok(Self::Sls),
            other => Err(Error::invalid(format!("unknown attenuation model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencySpec {
    pub omega: f64,
    pub omega_r: f64,
}

impl FrequencySpec {
    pub fn new(omega: f64, omega_r: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite() && omega_r > 0.0 && omega_r.is_finite()) {
            return Err(Error::invalid(format!(
                "frequencies must be positive, got omega={omega}, omega_r={omega_r}"
            )));
        }
        Ok(FrequencySpec { omega, omega_r })
    }

    pub fn from_hz(f: f64, f_r: f64) -> Result<Self> {
        Self::new(2.0 * PI * f, 2.0 * PI * f_r)
    }

    fn log_ratio(&self) -> f64 {
        (self.omega / self.omega_r).ln()
    }
}

/// Phase velocity and attenuation factor at the reference frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationPair {
    pub v: RealField,
    pub alpha: RealField,
}

impl AttenuationPair {
    pub fn new(v: RealField, alpha: RealField) -> Result<Self> {
        if !v.grid().same_shape(alpha.grid()) {
            return Err(Error::DimensionMismatch { expected: v.len(), actual: alpha.len() });
        }
        check_velocity(&v)?;
        if let Some(a) = alpha.values().iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(Error::Domain(format!("attenuation factor must be >= 0, got {a}")));
        }
        Ok(AttenuationPair { v, alpha })
    }

    pub fn uniform(grid: Grid2D, v: f64, alpha: f64) -> Result<Self> {
        Self::new(RealField::constant(grid, v), RealField::constant(grid, alpha))
    }

    pub fn grid(&self) -> &Grid2D {
        self.v.grid()
    }
}

fn check_velocity(v: &RealField) -> Result<()> {
    match v.values().iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        Some(x) => Err(Error::Domain(format!("velocity must be positive, got {x}"))),
        None => Ok(()),
    }
}

fn clamp_alpha(a: f64) -> f64 {
    if a < 0.0 && a > -ALPHA_NOISE {
        0.0
    } else {
        a
    }
}

pub fn kf_forward_scalar(v: f64, alpha: f64, freq: FrequencySpec) -> C64 {
    let s = C64::new(1.0 - alpha / PI * freq.log_ratio(), alpha / 2.0);
    s * s / (v * v)
}

/// Returns `None` when the extraction denominator is not positive.
pub fn kf_inverse_scalar(m: C64, freq: FrequencySpec) -> Option<(f64, f64)> {
    let s = m.sqrt();
    let denom = s.re + 2.0 / PI * freq.log_ratio() * s.im;
    if !(denom > 0.0 && denom.is_finite()) {
        return None;
    }
    Some((1.0 / denom, clamp_alpha(2.0 * s.im / denom)))
}

pub fn sls_relaxation_times_scalar(alpha: f64, omega_r: f64) -> (f64, f64) {
    let r = alpha.hypot(1.0);
    ((r + alpha) / omega_r, (r - alpha) / omega_r)
}

/// `Re(sqrt((1 + i w_r tau_s) / (1 + i w_r tau_e)))`.
fn sls_k(tau_eps: f64, tau_sig: f64, omega_r: f64) -> f64 {
    (C64::new(1.0, omega_r * tau_sig) / C64::new(1.0, omega_r * tau_eps)).sqrt().re
}

pub fn sls_forward_scalar(v: f64, alpha: f64, freq: FrequencySpec) -> C64 {
    let (te, ts) = sls_relaxation_times_scalar(alpha, freq.omega_r);
    let k = sls_k(te, ts, freq.omega_r);
    let ratio = C64::new(1.0, -freq.omega * ts) / C64::new(1.0, -freq.omega * te);
    ratio / (v * v * k * k)
}

/// Returns `None` when `Re(1/m)` is not positive.
pub fn sls_inverse_scalar(m: C64, freq: FrequencySpec) -> Option<(f64, f64)> {
    let inv = m.inv();
    if !(inv.re > 0.0 && inv.re.is_finite() && inv.im.is_finite()) {
        return None;
    }
    let (w, wr) = (freq.omega, freq.omega_r);
    let alpha = if inv.im == 0.0 {
        0.0
    } else {
        clamp_alpha((w * w + wr * wr) / (2.0 * w * wr * inv.re / -inv.im))
    };
    let (te, ts) = sls_relaxation_times_scalar(alpha, wr);
    let k = sls_k(te, ts, wr);
    let v2 = inv.re * (1.0 + w * w * ts * ts) / (k * k * (1.0 + w * w * ts * te));
    if !(v2 > 0.0 && v2.is_finite()) {
        return None;
    }
    Some((v2.sqrt(), alpha))
}

pub fn forward_scalar(kind: AttenuationModelKind, v: f64, alpha: f64, freq: FrequencySpec) -> C64 {
    match kind {
        AttenuationModelKind::Kf => kf_forward_scalar(v, alpha, freq),
        AttenuationModelKind::Sls => sls_forward_scalar(v, alpha, freq),
    }
}

pub fn inverse_scalar(kind: AttenuationModelKind, m: C64, freq: FrequencySpec) -> Option<(f64, f64)> {
    match kind {
        AttenuationModelKind::Kf => kf_inverse_scalar(m, freq),
        AttenuationModelKind::Sls => sls_inverse_scalar(m, freq),
    }
}

fn map_forward(pair: &AttenuationPair, f: impl Fn(f64, f64) -> C64) -> Result<ComplexField> {
    check_velocity(&pair.v)?;
    let values = pair.v.values().iter().zip(pair.alpha.values()).map(|(&v, &a)| f(v, a)).collect();
    Field::new(*pair.grid(), values)
}

fn map_inverse(
    m: &ComplexField,
    reason: &str,
    f: impl Fn(C64) -> Option<(f64, f64)>,
) -> Result<AttenuationPair> {
    let mut v = Vec::with_capacity(m.len());
    let mut alpha = Vec::with_capacity(m.len());
    let mut bad = Vec::new();
    for (i, &z) in m.values().iter().enumerate() {
        match f(z) {
            Some((vi, ai)) => {
                v.push(vi);
                alpha.push(ai);
            }
            None => {
                bad.push(i);
                v.push(f64::NAN);
                alpha.push(f64::NAN);
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::Extraction { reason: reason.into(), cells: BadCells(bad) });
    }
    let grid = *m.grid();
    Ok(AttenuationPair { v: Field::new(grid, v)?, alpha: Field::new(grid, alpha)? })
}

pub fn kf_forward(pair: &AttenuationPair, freq: FrequencySpec) -> Result<ComplexField> {
    map_forward(pair, |v, a| kf_forward_scalar(v, a, freq))
}

pub fn kf_inverse(m: &ComplexField, freq: FrequencySpec) -> Result<AttenuationPair> {
    map_inverse(m, "non-positive KF denominator", |z| kf_inverse_scalar(z, freq))
}

pub fn sls_relaxation_times(alpha: &RealField, omega_r: f64) -> (RealField, RealField) {
    (
        alpha.map(|a| sls_relaxation_times_scalar(a, omega_r).0),
        alpha.map(|a| sls_relaxation_times_scalar(a, omega_r).1),
    )
}

pub fn sls_forward(pair: &AttenuationPair, freq: FrequencySpec) -> Result<ComplexField> {
    map_forward(pair, |v, a| sls_forward_scalar(v, a, freq))
}

pub fn sls_inverse(m: &ComplexField, freq: FrequencySpec) -> Result<AttenuationPair> {
    map_inverse(m, "non-positive Re(1/m)", |z| sls_inverse_scalar(z, freq))
}

pub fn forward(
    kind: AttenuationModelKind,
    pair: &AttenuationPair,
    freq: FrequencySpec,
) -> Result<ComplexField> {
    match kind {
        AttenuationModelKind::Kf => kf_forward(pair, freq),
        AttenuationModelKind::Sls => sls_forward(pair, freq),
    }
}

pub fn inverse(
    kind: AttenuationModelKind,
    m: &ComplexField,
    freq: FrequencySpec,
) -> Result<AttenuationPair> {
    match kind {
        AttenuationModelKind::Kf => kf_inverse(m, freq),
        AttenuationModelKind::Sls => sls_inverse(m, freq),
    }
}

/// Arithmetic mean of a batch of angular frequencies.
pub fn band_center(batch: &[f64]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("empty frequency batch"));
    }
    Ok(batch.iter().sum::<f64>() / batch.len() as f64)
}

/// One frequency-independent model per batch, evaluated at the batch center.
/// Batches hold angular frequencies.
pub fn piecewise_band_models(
    pair: &AttenuationPair,
    batches: &[Vec<f64>],
    omega_r: f64,
    kind: AttenuationModelKind,
) -> Result<Vec<ComplexField>> {
    if batches.is_empty() {
        return Err(Error::invalid("no frequency batches"));
    }
    batches
        .iter()
        .map(|b| forward(kind, pair, FrequencySpec::new(band_center(b)?, omega_r)?))
        .collect()
}

/// Phase velocity `omega / Re(k)` with `k = omega sqrt(m)`.
pub fn phase_velocity(m: C64) -> f64 {
    1.0 / m.sqrt().re
}

/// Inverse quality factor `Im(m) / Re(m)`.
pub fn inverse_q(m: C64) -> f64 {
    m.im / m.re
}
