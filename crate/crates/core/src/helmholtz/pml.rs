use crate::error::{Error, Result};
use crate::field::{ComplexField, Field, Grid2D, Scalar, C64};

/// Polynomial damping profile `sigma(d) = max_damping * (d / n_layers)^power`,
/// with `d` the depth into the layer in cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlProfile {
    pub n_layers: usize,
    pub power: f64,
    pub max_damping: f64,
}

impl PmlProfile {
    pub fn new(n_layers: usize, power: f64, max_damping: f64) -> Result<Self> {
        if !(power >= 1.0 && power.is_finite()) {
            return Err(Error::invalid(format!("PML power must be >= 1, got {power}")));
        }
        if !(max_damping >= 0.0 && max_damping.is_finite()) {
            return Err(Error::invalid(format!("PML damping must be >= 0, got {max_damping}")));
        }
        Ok(PmlProfile { n_layers, power, max_damping })
    }

    /// Quadratic profile whose peak damping targets a normal-incidence
    /// reflection coefficient `reflection` for waves of speed `velocity`.
    pub fn for_velocity(n_layers: usize, velocity: f64, h: f64, reflection: f64) -> Result<Self> {
        if n_layers == 0 {
            return Self::new(0, 2.0, 0.0);
        }
        if !(velocity > 0.0 && h > 0.0 && reflection > 0.0 && reflection < 1.0) {
            return Err(Error::invalid("PML design needs positive velocity, spacing and 0 < R < 1"));
        }
        let power = 2.0;
        let width = n_layers as f64 * h;
        Self::new(n_layers, power, (power + 1.0) * velocity * (1.0 / reflection).ln() / (2.0 * width))
    }

    pub fn none() -> Self {
        PmlProfile { n_layers: 0, power: 2.0, max_damping: 0.0 }
    }

    pub fn damping(&self, depth: f64) -> f64 {
        if self.n_layers == 0 || depth <= 0.0 {
            return 0.0;
        }
        self.max_damping * (depth / self.n_layers as f64).powf(self.power)
    }

    /// Complex stretching factor `1 + i sigma / omega`.
    pub fn stretch(&self, depth: f64, omega: f64) -> C64 {
        C64::new(1.0, self.damping(depth) / omega)
    }
}

/// Physical grid surrounded by `n_layers` absorbing cells on every side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    physical: Grid2D,
    extended: Grid2D,
    n_layers: usize,
}

impl Domain {
    pub fn new(physical: Grid2D, n_layers: usize) -> Result<Self> {
        let extended = Grid2D::new(
            physical.nz() + 2 * n_layers,
            physical.nx() + 2 * n_layers,
            physical.h(),
        )?;
        if extended.nz() < 3 || extended.nx() < 3 {
            return Err(Error::invalid("grid too small for a 3x3 stencil"));
        }
        Ok(Domain { physical, extended, n_layers })
    }

    pub fn physical(&self) -> &Grid2D {
        &self.physical
    }

    pub fn extended(&self) -> &Grid2D {
        &self.extended
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    /// Extended-grid index of a physical cell.
    pub fn to_extended(&self, i: usize) -> usize {
        let (iz, ix) = self.physical.coords(i);
        self.extended.index(iz + self.n_layers, ix + self.n_layers)
    }

    /// Physical index of an extended cell, if it lies in the physical region.
    pub fn to_physical(&self, i: usize) -> Option<usize> {
        let (iz, ix) = self.extended.coords(i);
        let l = self.n_layers;
        (iz >= l && ix >= l && iz < l + self.physical.nz() && ix < l + self.physical.nx())
            .then(|| self.physical.index(iz - l, ix - l))
    }

    /// Extended-grid indices of all physical cells, in physical order.
    pub fn physical_indices(&self) -> Vec<usize> {
        (0..self.physical.len()).map(|i| self.to_extended(i)).collect()
    }

    /// Depth in cells into the absorbing layer along one axis; `p` may be a half index.
    pub fn depth(&self, p: f64, n_physical: usize) -> f64 {
        let l = self.n_layers as f64;
        (l - p).max(p - (l + n_physical as f64 - 1.0)).max(0.0)
    }

    pub fn depth_z(&self, pz: f64) -> f64 {
        self.depth(pz, self.physical.nz())
    }

    pub fn depth_x(&self, px: f64) -> f64 {
        self.depth(px, self.physical.nx())
    }

    /// For every extended cell, the physical cell whose value `extend` copies into it.
    pub fn replication_map(&self) -> Vec<usize> {
        let (l, nz, nx) = (self.n_layers, self.physical.nz(), self.physical.nx());
        (0..self.extended.len())
            .map(|i| {
                let (iz, ix) = self.extended.coords(i);
                self.physical.index(iz.saturating_sub(l).min(nz - 1), ix.saturating_sub(l).min(nx - 1))
            })
            .collect()
    }

    /// Extends a physical field into the absorbing layers by edge replication.
    pub fn extend<T: Scalar>(&self, f: &Field<T>) -> Result<Field<T>> {
        Error::check_len(self.physical.len(), f.len())?;
        let (l, nz, nx) = (self.n_layers, self.physical.nz(), self.physical.nx());
        Ok(Field::from_fn(self.extended, |iz, ix| {
            let pz = iz.saturating_sub(l).min(nz - 1);
            let px = ix.saturating_sub(l).min(nx - 1);
            f.get(pz, px)
        }))
    }

    pub fn restrict<T: Scalar>(&self, f: &Field<T>) -> Result<Field<T>> {
        self.restrict_slice(f.values())
    }

    pub fn restrict_slice<T: Scalar>(&self, v: &[T]) -> Result<Field<T>> {
        Error::check_len(self.extended.len(), v.len())?;
        let l = self.n_layers;
        Ok(Field::from_fn(self.physical, |iz, ix| v[self.extended.index(iz + l, ix + l)]))
    }

    pub fn restrict_complex(&self, v: &[C64]) -> Result<ComplexField> {
        self.restrict_slice(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RealField;

    #[test]
    fn damping_profile() {
        let p = PmlProfile::new(10, 2.0, 50.0).unwrap();
        assert_eq!(p.damping(0.0), 0.0);
        assert_eq!(p.damping(5.0), 12.5);
        assert_eq!(p.damping(10.0), 50.0);
        assert_eq!(p.stretch(10.0, 25.0), C64::new(1.0, 2.0));
        assert!(PmlProfile::new(10, 0.5, 1.0).is_err());
        assert!(PmlProfile::new(10, 2.0, -1.0).is_err());
    }

    #[test]
    fn depth_and_index_maps() {
        let d = Domain::new(Grid2D::new(4, 5, 1.0).unwrap(), 3).unwrap();
        assert_eq!(d.extended().nz(), 10);
        assert_eq!(d.depth_z(0.0), 3.0);
        assert_eq!(d.depth_z(2.5), 0.5);
        assert_eq!(d.depth_z(3.0), 0.0);
        assert_eq!(d.depth_z(6.0), 0.0);
        assert_eq!(d.depth_z(9.0), 3.0);
        for i in 0..d.physical().len() {
            assert_eq!(d.to_physical(d.to_extended(i)), Some(i));
        }
        assert_eq!(d.to_physical(0), None);
    }

    #[test]
    fn replication_map_matches_extend() {
        let d = Domain::new(Grid2D::new(3, 4, 1.0).unwrap(), 2).unwrap();
        let f = RealField::from_fn(*d.physical(), |iz, ix| (iz * 10 + ix) as f64);
        let e = d.extend(&f).unwrap();
        for (i, &p) in d.replication_map().iter().enumerate() {
            assert_eq!(e.values()[i], f.values()[p]);
        }
    }

    #[test]
    fn extend_replicates_edges() {
        let g = Grid2D::new(2, 3, 1.0).unwrap();
        let d = Domain::new(g, 2).unwrap();
        let f = RealField::from_fn(g, |iz, ix| (10 * iz + ix) as f64);
        let e = d.extend(&f).unwrap();
        assert_eq!(e.get(0, 0), 0.0);
        assert_eq!(e.get(5, 6), 12.0);
        assert_eq!(e.get(3, 4), 12.0);
        assert_eq!(e.get(2, 3), 1.0);
        assert_eq!(d.restrict(&e).unwrap(), f);
    }
}
