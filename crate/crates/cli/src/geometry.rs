//! Grid, absorbing boundary and acquisition built from the configuration.

use viscowri::helmholtz::{Domain, PmlProfile, SourceTerm, Stencil};
use viscowri::irwri::{Acquisition, ModelingSetup};
use viscowri::Grid2D;

use crate::config::{AcquisitionConfig, Cell, GridConfig};
use crate::error::{CliError, CliResult};

/// Target reflection coefficient of the absorbing layer.
const PML_REFLECTION: f64 = 1e-3;

pub fn grid(cfg: &GridConfig) -> CliResult<Grid2D> {
    Ok(Grid2D::new(cfg.nz, cfg.nx, cfg.h)?)
}

/// Nine-point modeling setup with a PML tuned to `velocity`.
pub fn modeling_setup(cfg: &GridConfig, velocity: f64) -> CliResult<ModelingSetup> {
    let g = grid(cfg)?;
    Ok(ModelingSetup {
        domain: Domain::new(g, cfg.pml_layers)?,
        pml: PmlProfile::for_velocity(cfg.pml_layers, velocity, cfg.h, PML_REFLECTION)?,
        stencil: Stencil::NinePoint,
    })
}

/// `count` items split over four edges as evenly as possible, earlier edges first.
fn per_edge(count: usize) -> [usize; 4] {
    let base = count / 4;
    let extra = count % 4;
    std::array::from_fn(|e| base + usize::from(e < extra))
}

/// Edge cells: top row, bottom row, left column, right column, each `inset` cells inside.
fn edge_cell(grid: &Grid2D, edge: usize, inset: usize, p: usize) -> usize {
    let (nz, nx) = (grid.nz(), grid.nx());
    match edge {
        0 => grid.index(inset, p),
        1 => grid.index(nz - 1 - inset, p),
        2 => grid.index(p, inset),
        _ => grid.index(p, nx - 1 - inset),
    }
}

fn edge_len(grid: &Grid2D, edge: usize) -> usize {
    if edge < 2 {
        grid.nx()
    } else {
        grid.nz()
    }
}

/// Sources at the interior division points of each edge; receivers spread
/// evenly between the perpendicular source lines so no cell is shared.
pub fn perimeter(grid: &Grid2D, n_sources: usize, n_receivers: usize, inset: usize) -> CliResult<Acquisition> {
    if n_sources == 0 || n_receivers == 0 {
        return Err(CliError::config("perimeter acquisition needs at least one source and one receiver"));
    }
    if 2 * inset + 4 > grid.nz().min(grid.nx()) {
        return Err(CliError::config(format!("inset {inset} leaves no room on a {}x{} grid", grid.nz(), grid.nx())));
    }
    let mut shots = Vec::with_capacity(n_sources);
    for (edge, k) in per_edge(n_sources).into_iter().enumerate() {
        let n = edge_len(grid, edge);
        for j in 0..k {
            let p = (n - 1) * (j + 1) / (k + 1);
            shots.push(SourceTerm::unit(edge_cell(grid, edge, inset, p)));
        }
    }
    let mut receivers = Vec::with_capacity(n_receivers);
    for (edge, k) in per_edge(n_receivers).into_iter().enumerate() {
        if k == 0 {
            continue;
        }
        let (lo, hi) = (inset + 1, edge_len(grid, edge) - 2 - inset);
        if k > hi - lo + 1 {
            return Err(CliError::config(format!(
                "{k} receivers do not fit on an edge with {} free cells",
                hi - lo + 1
            )));
        }
        for j in 0..k {
            let p = if k == 1 { (lo + hi) / 2 } else { lo + ((hi - lo) as f64 * j as f64 / (k - 1) as f64).round() as usize };
            receivers.push(edge_cell(grid, edge, inset, p));
        }
    }
    Ok(Acquisition { shots, receivers })
}

fn cell_index(grid: &Grid2D, c: Cell) -> CliResult<usize> {
    let [iz, ix] = c;
    if iz >= grid.nz() || ix >= grid.nx() {
        return Err(CliError::config(format!("cell [{iz}, {ix}] lies outside the {}x{} grid", grid.nz(), grid.nx())));
    }
    Ok(grid.index(iz, ix))
}

pub fn acquisition(grid: &Grid2D, cfg: &AcquisitionConfig) -> CliResult<Acquisition> {
    match cfg {
        AcquisitionConfig::Perimeter { n_sources, n_receivers, inset } => {
            perimeter(grid, *n_sources, *n_receivers, *inset)
        }
        AcquisitionConfig::Explicit { sources, receivers } => {
            if sources.is_empty() || receivers.is_empty() {
                return Err(CliError::config("explicit acquisition needs sources and receivers"));
            }
            Ok(Acquisition {
                shots: sources.iter().map(|&c| Ok(SourceTerm::unit(cell_index(grid, c)?))).collect::<CliResult<_>>()?,
                receivers: receivers.iter().map(|&c| cell_index(grid, c)).collect::<CliResult<_>>()?,
            })
        }
    }
}
