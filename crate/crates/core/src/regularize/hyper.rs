use super::operator::Gram;
use crate::error::{Error, Result};

/// Regularizer applied to the phase in the magnitude/phase scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseReg {
    /// Total variation of the phase; prox by an inner split-Bregman loop.
    TvPhase,
    /// `1/2 |grad theta|^2`; prox by one linear solve.
    #[default]
    SmoothPhase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegHyperparams {
    pub lambda: f64,
    pub gamma_x: f64,
    pub gamma_z: f64,
    pub tau: f64,
    pub max_iters: usize,
    pub phase_reg: PhaseReg,
    /// Multiplier of the phase regularizer.
    pub phase_weight: f64,
    /// Multiplier of the initial phase curvature estimate.
    pub curvature_scale: f64,
    pub armijo_alpha: f64,
    pub armijo_shrink: f64,
    pub armijo_max_shrinks: usize,
}

impl Default for RegHyperparams {
    fn default() -> Self {
        RegHyperparams {
            lambda: 1.0,
            gamma_x: 1.0,
            gamma_z: 1.0,
            tau: 0.5,
            max_iters: 100,
            phase_reg: PhaseReg::SmoothPhase,
            phase_weight: 1.0,
            curvature_scale: 1.0,
            armijo_alpha: 1e-4,
            armijo_shrink: 0.5,
            armijo_max_shrinks: 30,
        }
    }
}

impl RegHyperparams {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_x = gamma;
        self.gamma_z = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.lambda) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(pos(self.gamma_x) && pos(self.gamma_z)) {
            return Err(Error::invalid("TV penalty weights must be positive"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::invalid(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        if !(self.phase_weight >= 0.0 && self.phase_weight.is_finite()) {
            return Err(Error::invalid("phase weight must be nonnegative"));
        }
        if !pos(self.curvature_scale) {
            return Err(Error::invalid(format!("curvature scale must be positive, got {}", self.curvature_scale)));
        }
        if !pos(self.armijo_alpha) || !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return Err(Error::invalid("Armijo needs alpha > 0 and 0 < shrink < 1"));
        }
        Ok(())
    }
}

/// Scale-aware TV penalty `0.01 lambda median(diag(G^H G))`.
pub fn default_gamma(gram: &Gram, lambda: f64) -> f64 {
    let mut d = gram.diagonal();
    if d.is_empty() {
        return lambda;
    }
    d.sort_by(|a, b| a.total_cmp(b));
    let mid = d.len() / 2;
    let median = if d.len().is_multiple_of(2) { 0.5 * (d[mid - 1] + d[mid]) } else { d[mid] };
    0.01 * lambda * median
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RegHyperparams::default().validate().is_ok());
        assert!(RegHyperparams { tau: 1.5, ..Default::default() }.validate().is_err());
        assert!(RegHyperparams { lambda: 0.0, ..Default::default() }.validate().is_err());
        assert!(RegHyperparams::default().with_gamma(-1.0).validate().is_err());
    }

    #[test]
    fn default_gamma_uses_median() {
        let g = Gram::Diagonal(vec![1.0, 100.0, 3.0, 2.0]);
        assert!((default_gamma(&g, 10.0) - 0.01 * 10.0 * 2.5).abs() < 1e-15);
    }
}
