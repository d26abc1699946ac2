//! Periodic multilinear interpolation on uniform torus grids.

use crate::torus::Grid;

/// Multilinear interpolation of nodal `values` at an arbitrary point
/// (coordinates may be any covering representative).
pub fn multilinear(grid: &Grid, values: &[f64], point: &[f64]) -> f64 {
    let m = grid.points_per_axis();
    let dim = grid.dim();
    debug_assert_eq!(point.len(), dim);
    let mut base = Vec::with_capacity(dim);
    let mut frac = Vec::with_capacity(dim);
    for &c in point {
        let u = (c - c.floor()) * m as f64;
        let i = u.floor() as usize;
        base.push(i.min(m - 1));
        frac.push(u - i as f64);
    }
    let corners = 1usize << dim;
    let mut acc = 0.0;
    for corner in 0..corners {
        let mut weight = 1.0;
        let mut multi = Vec::with_capacity(dim);
        for d in 0..dim {
            if corner >> d & 1 == 1 {
                weight *= frac[d];
                multi.push((base[d] + 1) % m);
            } else {
                weight *= 1.0 - frac[d];
                multi.push(base[d]);
            }
        }
        if weight != 0.0 {
            acc += weight * values[grid.flat_index(&multi)];
        }
    }
    acc
}
