//! Geometry of the flat torus Ω = ℝⁿ/ℤⁿ with its covering space ℝⁿ.
//!
//! Points on the torus keep every coordinate in [0,1); points on the
//! covering space are unconstrained. `min_displacement` realises the
//! minimum-image convention: the shortest representative of y − x over
//! all integer shifts, with ties at the half period broken toward +1/2
//! so that plans and kernels are reproducible.

use crate::error::{Error, Result};

/// A point on Ω = ℝⁿ/ℤⁿ; every coordinate lies in [0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

/// A representative in the covering space ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    pub coords: Vec<f64>,
}

impl TorusPoint {
    /// Wraps an arbitrary finite vector onto the torus.
    pub fn wrap(v: &[f64]) -> Result<TorusPoint> {
        if v.is_empty() {
            return Err(Error::InvalidPoint("empty coordinate vector".into()));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinates {v:?}")));
        }
        Ok(TorusPoint {
            coords: v.iter().map(|&c| wrap_coord(c)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The canonical representative in [0,1)ⁿ.
    pub fn lift(&self) -> LiftedPoint {
        LiftedPoint {
            coords: self.coords.clone(),
        }
    }
}

impl LiftedPoint {
    pub fn new(coords: Vec<f64>) -> LiftedPoint {
        LiftedPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Projection back onto the torus.
    pub fn wrap(&self) -> Result<TorusPoint> {
        TorusPoint::wrap(&self.coords)
    }

    /// The representative shifted by an integer vector.
    pub fn shifted(&self, shift: &[i64]) -> LiftedPoint {
        LiftedPoint {
            coords: self
                .coords
                .iter()
                .zip(shift)
                .map(|(c, q)| c + *q as f64)
                .collect(),
        }
    }
}

fn wrap_coord(c: f64) -> f64 {
    let w = c - c.floor();
    // c slightly below an integer can round to exactly 1.0.
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Componentwise minimal displacement d with wrap(x + d) = y and
/// |d_i| ≤ 1/2. A tie at the half period picks d_i = +1/2.
pub fn min_displacement(x: &TorusPoint, y: &TorusPoint) -> Result<Vec<f64>> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionError {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(x.coords
        .iter()
        .zip(&y.coords)
        .map(|(&a, &b)| {
            let mut d = wrap_coord(b - a);
            if d > 0.5 {
                d -= 1.0;
            }
            d
        })
        .collect())
}

/// Euclidean geodesic distance on the torus.
pub fn torus_distance(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    let d = min_displacement(x, y)?;
    Ok(d.iter().map(|c| c * c).sum::<f64>().sqrt())
}

/// Uniform axis-aligned spatial grid with a uniform time axis.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    spacing: f64,
    times: Vec<f64>,
}

impl Grid {
    /// Builds an n-dimensional grid with m points per axis and K uniform
    /// time steps on [0, T]. Grids with n > 3 are refused: full Hopf-Lax
    /// sweeps cost O(m^{2n}) per step.
    pub fn new(dim: usize, points_per_axis: usize, horizon: f64, time_steps: usize) -> Result<Grid> {
        if dim == 0 {
            return Err(Error::ConfigError("dimension must be at least 1".into()));
        }
        if dim > 3 {
            return Err(Error::CostTooLarge(format!(
                "grid operations support n <= 3, got n = {dim}"
            )));
        }
        if points_per_axis < 4 {
            return Err(Error::ConfigError(format!(
                "need at least 4 points per axis, got {points_per_axis}"
            )));
        }
        if time_steps < 2 {
            return Err(Error::ConfigError(format!(
                "need at least 2 time steps, got {time_steps}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::ConfigError(format!("horizon must be positive, got {horizon}")));
        }
        let dt = horizon / time_steps as f64;
        let times = (0..=time_steps)
            .map(|k| if k == time_steps { horizon } else { k as f64 * dt })
            .collect();
        Ok(Grid {
            dim,
            points_per_axis,
            spacing: 1.0 / points_per_axis as f64,
            times,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of spatial nodes mⁿ.
    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn dt(&self) -> f64 {
        self.horizon() / self.time_steps() as f64
    }

    /// Flattened index of a multi-index; axis 0 varies fastest.
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dim);
        let m = self.points_per_axis;
        multi.iter().rev().fold(0, |acc, &i| acc * m + i)
    }

    /// Inverse of `flat_index`.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let m = self.points_per_axis;
        let mut multi = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            multi.push(flat % m);
            flat /= m;
        }
        multi
    }

    /// Coordinates of the node with the given flat index.
    pub fn point(&self, flat: usize) -> TorusPoint {
        let multi = self.multi_index(flat);
        TorusPoint {
            coords: multi.iter().map(|&i| i as f64 * self.spacing).collect(),
        }
    }

    /// Flat index of the grid node exactly at `p`, if `p` lies on the grid.
    pub fn index_of(&self, p: &TorusPoint) -> Option<usize> {
        let m = self.points_per_axis as f64;
        let mut multi = Vec::with_capacity(self.dim);
        for &c in p.coords() {
            let i = (c * m).round();
            if (c * m - i).abs() > 1e-9 * m {
                return None;
            }
            multi.push(i as usize % self.points_per_axis);
        }
        Some(self.flat_index(&multi))
    }

    /// Neighbour of `flat` along `axis`, offset ±1 with periodic wrap.
    pub fn neighbor(&self, flat: usize, axis: usize, step: isize) -> usize {
        let m = self.points_per_axis;
        let mut multi = self.multi_index(flat);
        let i = multi[axis] as isize + step;
        multi[axis] = i.rem_euclid(m as isize) as usize;
        self.flat_index(&multi)
    }
}

/// Lexicographic enumeration of integer shift vectors in {-w..w}ⁿ.
pub fn shift_window(dim: usize, width: i64) -> Vec<Vec<i64>> {
    let mut shifts = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for s in &shifts {
            for q in -width..=width {
                let mut t = s.clone();
                t.push(q);
                next.push(t);
            }
        }
        shifts = next;
    }
    shifts
}
