use std::f64::consts::PI;

use super::pml::Domain;
use super::system::HelmholtzSystem;
use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};

/// Point source at a physical cell with a complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceTerm {
    pub index: usize,
    pub amplitude: C64,
}

impl SourceTerm {
    pub fn new(index: usize, amplitude: C64) -> Self {
        SourceTerm { index, amplitude }
    }

    pub fn unit(index: usize) -> Self {
        Self::new(index, C64::new(1.0, 0.0))
    }
}

/// Right-hand side on the extended grid for a set of point sources.
pub fn source_vector(domain: &Domain, sources: &[SourceTerm]) -> Result<Vec<C64>> {
    let mut b = vec![C64::new(0.0, 0.0); domain.extended().len()];
    for s in sources {
        if s.index >= domain.physical().len() {
            return Err(Error::invalid(format!("source cell {} outside the grid", s.index)));
        }
        b[domain.to_extended(s.index)] += s.amplitude;
    }
    Ok(b)
}

/// Solves `A u = b` for point sources; the wavefield lives on the extended grid.
pub fn solve_forward(sys: &HelmholtzSystem, sources: &[SourceTerm]) -> Result<ComplexField> {
    let b = source_vector(sys.domain(), sources)?;
    sys.extended_field(sys.solve(&b)?)
}

/// Receiver sampling operator `P`, a pure extraction at grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationOperator {
    physical: Vec<usize>,
    extended: Vec<usize>,
    n_ext: usize,
}

impl ObservationOperator {
    /// `receivers` are physical cell indices; they must be distinct and in range.
    pub fn new(domain: &Domain, receivers: &[usize]) -> Result<Self> {
        let n = domain.physical().len();
        let mut seen = std::collections::HashSet::new();
        for &r in receivers {
            if r >= n {
                return Err(Error::invalid(format!("receiver cell {r} outside a grid of {n} cells")));
            }
            if !seen.insert(r) {
                return Err(Error::invalid(format!("receiver cell {r} listed twice")));
            }
        }
        Ok(ObservationOperator {
            physical: receivers.to_vec(),
            extended: receivers.iter().map(|&r| domain.to_extended(r)).collect(),
            n_ext: domain.extended().len(),
        })
    }

    pub fn len(&self) -> usize {
        self.extended.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extended.is_empty()
    }

    pub fn physical_indices(&self) -> &[usize] {
        &self.physical
    }

    pub fn extended_indices(&self) -> &[usize] {
        &self.extended
    }

    /// `P u` for an extended-grid wavefield.
    pub fn sample(&self, u: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.n_ext, u.len())?;
        Ok(self.extended.iter().map(|&i| u[i]).collect())
    }

    /// `P^T d`, scattering receiver values onto the extended grid.
    pub fn scatter(&self, d: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.len(), d.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.n_ext];
        for (&i, &v) in self.extended.iter().zip(d) {
            out[i] += v;
        }
        Ok(out)
    }
}

/// Fourier coefficient of a zero-phase Ricker wavelet with dominant frequency
/// `f_dominant` (Hz), for synthesis `r(t) = int S(omega) exp(-i omega t) d omega`.
pub fn ricker_spectrum(f_dominant: f64, omega: f64) -> C64 {
    let wp = 2.0 * PI * f_dominant;
    let r = omega / wp;
    C64::new(2.0 / PI.sqrt() * r * r / wp * (-r * r).exp(), 0.0)
}

/// Time-domain Ricker wavelet `(1 - 2 (pi f t)^2) exp(-(pi f t)^2)`.
pub fn ricker(f_dominant: f64, t: f64) -> f64 {
    let a = (PI * f_dominant * t).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid2D;

    #[test]
    fn sampling_and_scatter() {
        let g = Grid2D::new(3, 3, 1.0).unwrap();
        let d = Domain::new(g, 1).unwrap();
        let p = ObservationOperator::new(&d, &[4]).unwrap();
        let mut u = vec![C64::new(0.0, 0.0); d.extended().len()];
        u[d.to_extended(4)] = C64::new(2.0, -1.0);
        assert_eq!(p.sample(&u).unwrap(), vec![C64::new(2.0, -1.0)]);
        assert!(p.sample(&vec![C64::new(0.0, 0.0); 25]).unwrap()[0].norm() == 0.0);
        assert_eq!(p.scatter(&[C64::new(1.0, 0.0)]).unwrap()[12], C64::new(1.0, 0.0));
        assert!(ObservationOperator::new(&d, &[9]).is_err());
        assert!(ObservationOperator::new(&d, &[1, 1]).is_err());
    }

    #[test]
    fn ricker_spectrum_shape() {
        assert_eq!(ricker_spectrum(10.0, 0.0).norm(), 0.0);
        let wp = 20.0 * PI;
        let peak = ricker_spectrum(10.0, wp).norm();
        for w in [0.9 * wp, 0.99 * wp, 1.01 * wp, 1.1 * wp] {
            assert!(ricker_spectrum(10.0, w).norm() < peak);
        }
    }

    #[test]
    fn sources_outside_grid_are_rejected() {
        let d = Domain::new(Grid2D::new(3, 3, 1.0).unwrap(), 0).unwrap();
        assert!(source_vector(&d, &[SourceTerm::unit(9)]).is_err());
    }
}
