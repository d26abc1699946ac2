//! Exact transportation simplex.
//!
//! Solves min Σ γ_ij c_ij over nonnegative γ with fixed row sums a_i and
//! column sums b_j. The basis is a spanning tree of the bipartite
//! supply/demand graph; pivots follow Bland's rule (lexicographically
//! first entering cell, lowest-index leaving cell), which is immune to
//! cycling under degeneracy and deterministic. Desk-scale problems
//! (≤ 64×64) solve in microseconds; exactness is what the duality checks
//! need, so no entropic smoothing.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Row-major m×n coupling matrix.
    pub flow: Vec<f64>,
    pub value: f64,
    /// Duals with u_i + v_j ≤ c_ij, equality on the support.
    pub row_duals: Vec<f64>,
    pub col_duals: Vec<f64>,
}

pub fn solve_transportation(cost: &[f64], supplies: &[f64], demands: &[f64]) -> Result<LpSolution> {
    let m = supplies.len();
    let n = demands.len();
    if cost.len() != m * n {
        return Err(Error::DimensionError { expected: m * n, got: cost.len() });
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidMeasure("empty marginals".into()));
    }
    let total_a: f64 = supplies.iter().sum();
    let total_b: f64 = demands.iter().sum();
    if (total_a - total_b).abs() > 1e-10 {
        return Err(Error::InvalidMeasure(format!(
            "unbalanced marginals: {total_a} vs {total_b}"
        )));
    }
    if supplies.iter().chain(demands).any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidMeasure("negative or non-finite weights".into()));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidMeasure("non-finite cost entry".into()));
    }

    let mut flow = vec![0.0; m * n];
    let mut in_basis = vec![false; m * n];

    // northwest-corner initial basic feasible solution: advances one
    // index per step, leaving exactly m+n-1 basis cells
    {
        let mut a = supplies.to_vec();
        let mut b = demands.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = a[i].min(b[j]);
            flow[i * n + j] = x;
            in_basis[i * n + j] = true;
            a[i] -= x;
            b[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if a[i] <= b[j] && i < m - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-12 * scale;
    let max_pivots = 2000 * (m + n) * (m + n);

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    for _pivot in 0..max_pivots {
        compute_duals(cost, &in_basis, m, n, &mut u, &mut v)?;

        // Bland: first cell (row-major) with negative reduced cost
        let mut entering = None;
        'search: for i in 0..m {
            for j in 0..n {
                if !in_basis[i * n + j] && cost[i * n + j] - u[i] - v[j] < -tol {
                    entering = Some((i, j));
                    break 'search;
                }
            }
        }
        let (ei, ej) = match entering {
            Some(cell) => cell,
            None => {
                let value = flow.iter().zip(cost).map(|(f, c)| f * c).sum();
                return Ok(LpSolution { flow, value, row_duals: u, col_duals: v });
            }
        };

        let cycle = find_cycle(&in_basis, m, n, ei, ej);
        // odd positions lose flow
        let mut theta = f64::INFINITY;
        let mut leave_pos = 1;
        for (pos, &(i, j)) in cycle.iter().enumerate().skip(1).step_by(2) {
            if flow[i * n + j] < theta {
                theta = flow[i * n + j];
                leave_pos = pos;
            }
        }
        for (pos, &(i, j)) in cycle.iter().enumerate() {
            if pos % 2 == 0 {
                flow[i * n + j] += theta;
            } else {
                flow[i * n + j] -= theta;
            }
        }
        let (li, lj) = cycle[leave_pos];
        flow[li * n + lj] = 0.0;
        in_basis[li * n + lj] = false;
        in_basis[ei * n + ej] = true;
    }
    let value = flow.iter().zip(cost).map(|(f, c)| f * c).sum();
    Err(Error::OptimizationFailed { value, residual: f64::NAN })
}

/// Tree duals: u_i + v_j = c_ij on basis cells, u_0 = 0.
fn compute_duals(
    cost: &[f64],
    in_basis: &[bool],
    m: usize,
    n: usize,
    u: &mut [f64],
    v: &mut [f64],
) -> Result<()> {
    let mut u_known = vec![false; m];
    let mut v_known = vec![false; n];
    u[0] = 0.0;
    u_known[0] = true;
    let mut stack = vec![(true, 0usize)]; // (is_row, index)
    while let Some((is_row, idx)) = stack.pop() {
        if is_row {
            for j in 0..n {
                if in_basis[idx * n + j] && !v_known[j] {
                    v[j] = cost[idx * n + j] - u[idx];
                    v_known[j] = true;
                    stack.push((false, j));
                }
            }
        } else {
            for i in 0..m {
                if in_basis[i * n + idx] && !u_known[i] {
                    u[i] = cost[i * n + idx] - v[idx];
                    u_known[i] = true;
                    stack.push((true, i));
                }
            }
        }
    }
    if u_known.iter().all(|&k| k) && v_known.iter().all(|&k| k) {
        Ok(())
    } else {
        Err(Error::InvalidMeasure("degenerate basis: tree not spanning".into()))
    }
}

/// The unique alternating cycle closed by the entering cell: a path of
/// basis cells from row `ei` back to column `ej`, found by DFS on the
/// basis tree.
fn find_cycle(in_basis: &[bool], m: usize, n: usize, ei: usize, ej: usize) -> Vec<(usize, usize)> {
    // nodes: rows 0..m, cols m..m+n
    let mut parent_edge: Vec<Option<(usize, (usize, usize))>> = vec![None; m + n];
    let mut visited = vec![false; m + n];
    visited[ei] = true;
    let mut stack = vec![ei];
    while let Some(node) = stack.pop() {
        if node < m {
            let i = node;
            for j in 0..n {
                if in_basis[i * n + j] && !visited[m + j] {
                    visited[m + j] = true;
                    parent_edge[m + j] = Some((i, (i, j)));
                    stack.push(m + j);
                }
            }
        } else {
            let j = node - m;
            for i in 0..m {
                if in_basis[i * n + j] && !visited[i] {
                    visited[i] = true;
                    parent_edge[i] = Some((m + j, (i, j)));
                    stack.push(i);
                }
            }
        }
    }
    // walk back from column ej to row ei
    let mut cells = vec![(ei, ej)];
    let mut node = m + ej;
    while node != ei {
        let (prev, cell) = parent_edge[node].expect("basis tree is spanning");
        cells.push(cell);
        node = prev;
    }
    cells
}
