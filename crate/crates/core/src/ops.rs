//! Finite-volume operators with homogeneous Neumann boundaries.
//!
//! Every operator is written as a sum of face fluxes, so cell sums telescope
//! and transport conserves mass up to rounding. Boundary faces carry zero
//! flux; for the Laplacian this is the same as reflecting ghost cells.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{FaceField, Grid};

/// Discrete Laplacian of a cell field.
pub fn laplacian(field: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_cells(field)?;
    let mut out = grid.zeros();
    add_laplacian(field, 1.0, grid, &mut out);
    Ok(out)
}

/// Two-point gradient on interior faces, zero on boundary faces.
pub fn grad_face(field: &[f64], grid: &Grid) -> Result<FaceField> {
    grid.check_cells(field)?;
    let mut faces = FaceField::zeros(grid);
    grid.for_each_x_face(|f, a, b, inv_h| faces.x[f] = (field[b] - field[a]) * inv_h);
    grid.for_each_y_face(|f, a, b, inv_h| faces.y[f] = (field[b] - field[a]) * inv_h);
    Ok(faces)
}

/// Discrete `-∇·(coeff · carrier · ∇potential)`.
///
/// The face flux is `coeff · carrier_up · ∇potential`, where `carrier_up` is
/// taken from the cell the face velocity `coeff · ∇potential` points away
/// from. With a non-negative carrier this keeps the explicit update monotone.
pub fn taxis_divergence(carrier: &[f64], potential: &[f64], coeff: f64, grid: &Grid) -> Result<Vec<f64>> {
    grid.check_cells(carrier)?;
    grid.check_cells(potential)?;
    if let Some((cell, &value)) = carrier.iter().enumerate().find(|(_, c)| !(**c >= 0.0)) {
        return Err(Error::NegativeCarrier { cell, value });
    }
    let mut out = grid.zeros();
    add_taxis_divergence(carrier, potential, coeff, grid, &mut out);
    Ok(out)
}

/// Pointwise product, the alarm-signal potential `uv`.
pub fn product_field(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: crate::error::Located::Cells,
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}

/// `out += scale · Δ field`. Lengths are assumed to match the grid.
pub(crate) fn add_laplacian(field: &[f64], scale: f64, grid: &Grid, out: &mut [f64]) {
    let mut flux = |a: usize, b: usize, inv_h: f64| {
        let q = scale * (field[b] - field[a]) * inv_h * inv_h;
        out[a] += q;
        out[b] -= q;
    };
    grid.for_each_x_face(|_, a, b, inv_h| flux(a, b, inv_h));
    grid.for_each_y_face(|_, a, b, inv_h| flux(a, b, inv_h));
}

/// `out += -∇·(coeff · carrier · ∇potential)` with upwinded carrier.
pub(crate) fn add_taxis_divergence(carrier: &[f64], potential: &[f64], coeff: f64, grid: &Grid, out: &mut [f64]) {
    let mut flux = |a: usize, b: usize, inv_h: f64| {
        let velocity = coeff * (potential[b] - potential[a]) * inv_h;
        let upwind = if velocity > 0.0 { carrier[a] } else { carrier[b] };
        let q = velocity * upwind * inv_h;
        out[a] -= q;
        out[b] += q;
    };
    grid.for_each_x_face(|_, a, b, inv_h| flux(a, b, inv_h));
    grid.for_each_y_face(|_, a, b, inv_h| flux(a, b, inv_h));
}
