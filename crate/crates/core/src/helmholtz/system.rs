use std::sync::OnceLock;

use super::pml::{Domain, PmlProfile};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Field, C64};
use crate::sparse::{CsrMatrix, SparseLu};

/// Laplacian mixing factor and mass weights of the nine-point scheme.
/// The Laplacian is `a * cartesian + (1 - a) * rotated`; mass weights are per
/// node, with the corner weight chosen so that the nine weights sum to one.
pub const NINE_POINT_LAPLACIAN_MIX: f64 = 0.5461;
pub const NINE_POINT_MASS_CENTER: f64 = 0.6248;
pub const NINE_POINT_MASS_EDGE: f64 = 0.09381;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Stencil {
    FivePoint,
    #[default]
    NinePoint,
}

impl std::str::FromStr for Stencil {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fivepoint" | "five" | "5" => Ok(Stencil::FivePoint),
            "ninepoint" | "nine" | "9" => Ok(Stencil::NinePoint),
            other => Err(Error::invalid(format!("unknown stencil `{other}`"))),
        }
    }
}

impl Stencil {
    /// Row weights `(w_-1, w_0, w_+1)` used to average each second derivative
    /// across the neighboring grid lines.
    fn line_weights(self) -> [f64; 3] {
        match self {
            Stencil::FivePoint => [0.0, 1.0, 0.0],
            Stencil::NinePoint => {
                let g = (1.0 - NINE_POINT_LAPLACIAN_MIX) / 4.0;
                [g, 1.0 - 2.0 * g, g]
            }
        }
    }

    /// Mass weight for the neighbor at offset `(dz, dx)`.
    fn mass_weight(self, dz: isize, dx: isize) -> f64 {
        match (self, dz.abs() + dx.abs()) {
            (Stencil::FivePoint, 0) => 1.0,
            (Stencil::FivePoint, _) => 0.0,
            (Stencil::NinePoint, 0) => NINE_POINT_MASS_CENTER,
            (Stencil::NinePoint, 1) => NINE_POINT_MASS_EDGE,
            (Stencil::NinePoint, _) => {
                (1.0 - NINE_POINT_MASS_CENTER - 4.0 * NINE_POINT_MASS_EDGE) / 4.0
            }
        }
    }
}

/// Discrete operator `A = Lap + omega^2 diag(m) M` on a PML-extended grid.
///
/// `Lap` is the stretched-coordinate Laplacian and `M` the mass operator with
/// the stretching factors `s_x s_z` folded in (the product of the boundary
/// operator and mass matrix). Both are complex symmetric.
pub struct HelmholtzSystem {
    domain: Domain,
    omega: f64,
    stencil: Stencil,
    pml: PmlProfile,
    lap: CsrMatrix,
    mass: CsrMatrix,
    m_ext: Vec<C64>,
    a: CsrMatrix,
    lu: OnceLock<SparseLu>,
}

impl std::fmt::Debug for HelmholtzSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HelmholtzSystem")
            .field("domain", &self.domain)
            .field("omega", &self.omega)
            .field("stencil", &self.stencil)
            .field("nnz", &self.a.nnz())
            .field("factored", &self.lu.get().is_some())
            .finish()
    }
}

fn check_model(m: &ComplexField) -> Result<()> {
    for (i, z) in m.values().iter().enumerate() {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite model value at cell {i}")));
        }
        if z.re <= 0.0 {
            return Err(Error::Domain(format!("Re(m) must be positive, cell {i} has {}", z.re)));
        }
    }
    Ok(())
}

fn assemble_operators(
    domain: &Domain,
    omega: f64,
    pml: &PmlProfile,
    stencil: Stencil,
) -> Result<(CsrMatrix, CsrMatrix)> {
    let g = domain.extended();
    let (nz, nx, h2) = (g.nz() as isize, g.nx() as isize, g.h() * g.h());
    let sz = |p: f64| pml.stretch(domain.depth_z(p), omega);
    let sx = |p: f64| pml.stretch(domain.depth_x(p), omega);
    let w = stencil.line_weights();
    let inside = |iz: isize, ix: isize| iz >= 0 && ix >= 0 && iz < nz && ix < nx;
    let idx = |iz: isize, ix: isize| (iz + ix * nz) as usize;

    let mut lap = Vec::with_capacity(g.len() * 15);
    let mut mass = Vec::with_capacity(g.len() * 9);
    for ix in 0..nx {
        for iz in 0..nz {
            let k = idx(iz, ix);
            let (fz, fx) = (iz as f64, ix as f64);
            for d in -1isize..=1 {
                let wd = w[(d + 1) as usize];
                if wd == 0.0 {
                    continue;
                }
                // d/dx (1/s_x d/dx) on line z = iz + d, weighted by s_z between the lines
                if inside(iz + d, ix) {
                    let c = sz(fz + 0.5 * d as f64) * (wd / h2);
                    let (ip, im) = (sx(fx + 0.5).inv(), sx(fx - 0.5).inv());
                    lap.push((k, idx(iz + d, ix), -c * (ip + im)));
                    if ix + 1 < nx {
                        lap.push((k, idx(iz + d, ix + 1), c * ip));
                    }
                    if ix >= 1 {
                        lap.push((k, idx(iz + d, ix - 1), c * im));
                    }
                }
                // d/dz (1/s_z d/dz) on line x = ix + d, weighted by s_x between the lines
                if inside(iz, ix + d) {
                    let c = sx(fx + 0.5 * d as f64) * (wd / h2);
                    let (ip, im) = (sz(fz + 0.5).inv(), sz(fz - 0.5).inv());
                    lap.push((k, idx(iz, ix + d), -c * (ip + im)));
                    if iz + 1 < nz {
                        lap.push((k, idx(iz + 1, ix + d), c * ip));
                    }
                    if iz >= 1 {
                        lap.push((k, idx(iz - 1, ix + d), c * im));
                    }
                }
            }
            for dx in -1isize..=1 {
                for dz in -1isize..=1 {
                    let wm = stencil.mass_weight(dz, dx);
                    if wm == 0.0 || !inside(iz + dz, ix + dx) {
                        continue;
                    }
                    let s = sz(fz + 0.5 * dz as f64) * sx(fx + 0.5 * dx as f64);
                    mass.push((k, idx(iz + dz, ix + dx), s * wm));
                }
            }
        }
    }
    Ok((
        CsrMatrix::from_triplets(g.len(), g.len(), &lap)?,
        CsrMatrix::from_triplets(g.len(), g.len(), &mass)?,
    ))
}

/// Assembles the Helmholtz operator for model `m` given on the physical grid.
pub fn assemble(
    domain: &Domain,
    m: &ComplexField,
    omega: f64,
    pml: &PmlProfile,
    stencil: Stencil,
) -> Result<HelmholtzSystem> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("angular frequency must be positive, got {omega}")));
    }
    if pml.n_layers != domain.n_layers() {
        return Err(Error::invalid(format!(
            "PML has {} layers but the domain was built with {}",
            pml.n_layers,
            domain.n_layers()
        )));
    }
    if !m.grid().same_shape(domain.physical()) {
        return Err(Error::DimensionMismatch { expected: domain.physical().len(), actual: m.len() });
    }
    check_model(m)?;
    let (lap, mass) = assemble_operators(domain, omega, pml, stencil)?;
    let m_ext = domain.extend(m)?.into_values();
    let a = combine(&lap, &mass, &m_ext, omega)?;
    Ok(HelmholtzSystem {
        domain: *domain,
        omega,
        stencil,
        pml: *pml,
        lap,
        mass,
        m_ext,
        a,
        lu: OnceLock::new(),
    })
}

fn combine(lap: &CsrMatrix, mass: &CsrMatrix, m_ext: &[C64], omega: f64) -> Result<CsrMatrix> {
    let scaled: Vec<C64> = m_ext.iter().map(|&m| m * (omega * omega)).collect();
    lap.add_scaled(C64::new(1.0, 0.0), &mass.scale_rows(&scaled)?, C64::new(1.0, 0.0))
}

const RESIDUAL_TARGET: f64 = 1e-12;
const RESIDUAL_FAIL: f64 = 1e-8;

impl HelmholtzSystem {
    /// Same frequency, stencil and boundary with a new model; reuses the
    /// model-independent operators.
    pub fn with_model(&self, m: &ComplexField) -> Result<HelmholtzSystem> {
        if !m.grid().same_shape(self.domain.physical()) {
            return Err(Error::DimensionMismatch {
                expected: self.domain.physical().len(),
                actual: m.len(),
            });
        }
        check_model(m)?;
        let m_ext = self.domain.extend(m)?.into_values();
        let a = combine(&self.lap, &self.mass, &m_ext, self.omega)?;
        Ok(HelmholtzSystem {
            domain: self.domain,
            omega: self.omega,
            stencil: self.stencil,
            pml: self.pml,
            lap: self.lap.clone(),
            mass: self.mass.clone(),
            m_ext,
            a,
            lu: OnceLock::new(),
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn pml(&self) -> &PmlProfile {
        &self.pml
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    /// Stretched-coordinate Laplacian.
    pub fn laplacian(&self) -> &CsrMatrix {
        &self.lap
    }

    /// Mass operator including the stretching factors.
    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Model on the extended grid.
    pub fn model_extended(&self) -> &[C64] {
        &self.m_ext
    }

    pub fn len(&self) -> usize {
        self.a.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, u: &[C64]) -> Result<Vec<C64>> {
        self.a.mul_vec(u)
    }

    pub fn apply_adjoint(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.a.adjoint_mul_vec(v)
    }

    /// `b - A u`.
    pub fn residual(&self, u: &[C64], b: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.len(), b.len())?;
        let au = self.apply(u)?;
        Ok(b.iter().zip(&au).map(|(b, a)| b - a).collect())
    }

    pub fn is_factored(&self) -> bool {
        self.lu.get().is_some()
    }

    fn factor(&self) -> Result<&SparseLu> {
        if let Some(lu) = self.lu.get() {
            return Ok(lu);
        }
        let lu = SparseLu::new(&self.a)?;
        let _ = self.lu.set(lu);
        Ok(self.lu.get().expect("factorization was just stored"))
    }

    /// Solves `A u = b` with the cached LU factorization and iterative refinement.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        Error::check_len(self.len(), b.len())?;
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(vec![C64::new(0.0, 0.0); b.len()]);
        }
        let lu = self.factor()?;
        let mut u = lu.solve(b)?;
        let mut rel = f64::INFINITY;
        for _ in 0..3 {
            let r = self.residual(&u, b)?;
            rel = norm(&r) / bnorm;
            if rel <= RESIDUAL_TARGET || !rel.is_finite() {
                break;
            }
            let du = lu.solve(&r)?;
            for (ui, di) in u.iter_mut().zip(&du) {
                *ui += di;
            }
        }
        if !(rel <= RESIDUAL_FAIL) {
            return Err(Error::Solver(format!(
                "forward solve left relative residual {rel:.3e} at omega = {}; the system is singular or nearly so",
                self.omega
            )));
        }
        Ok(u)
    }

    /// Virtual-source diagonal `omega^2 (M u)`, the derivative of `A u` with respect to
    /// the model value of each row's cell.
    pub fn virtual_source(&self, u: &[C64]) -> Result<Vec<C64>> {
        let w2 = self.omega * self.omega;
        Ok(self.mass.mul_vec(u)?.into_iter().map(|v| v * w2).collect())
    }

    /// Wraps an extended-grid vector as a field.
    pub fn extended_field(&self, v: Vec<C64>) -> Result<ComplexField> {
        Field::new(*self.domain.extended(), v)
    }
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
