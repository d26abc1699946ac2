//! The optimal flow: v = ∇ψ on the reversibility set, its Lipschitz
//! extension to the whole torus, and the induced transport maps.
//!
//! On K₀ the pair's upper field is differentiable and the discrete
//! gradient is trustworthy; off K₀ it is not, so the velocity is
//! extended per component by the McShane inf-formula
//! ṽ(x) = min_y [ v(y) + L·d(x,y) ] over masked nodes y, clamped to the
//! masked range. Flow maps integrate the extended field with classical
//! RK4, multilinear in space and linear in time between interior slices,
//! frozen at the first/last interior slice beyond them.

use crate::action::{torus_action, MinimizeOptions, Path};
use crate::error::{Error, Result};
use crate::hj::ReversiblePair;
use crate::interp::multilinear;
use crate::pressure::PressureSpec;
use crate::torus::{Grid, TorusPoint};
use crate::transport::{cost_matrix, solve_kantorovich, wasserstein, DiscreteMeasure, TransportPlan};

/// Grid velocity slices at the interior times of a pair, masked by K₀.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub grid: Grid,
    /// Interior slice times t_1 .. t_{K-1}.
    pub times: Vec<f64>,
    /// slices[k][node*dim + d]; values off the mask are only meaningful
    /// after `lipschitz_extend`.
    pub slices: Vec<Vec<f64>>,
    pub k0_mask: Vec<Vec<bool>>,
    /// max |Δv|/|Δx| over masked neighbour pairs.
    pub lipschitz_estimate: f64,
    /// True once every node carries a velocity.
    pub full_domain: bool,
}

impl VelocityField {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Largest |v| over carried nodes.
    pub fn max_speed(&self) -> f64 {
        let dim = self.grid.dim();
        let mut worst: f64 = 0.0;
        for (slice, mask) in self.slices.iter().zip(&self.k0_mask) {
            for i in 0..self.grid.node_count() {
                if self.full_domain || mask[i] {
                    let v2: f64 = (0..dim).map(|d| slice[i * dim + d].powi(2)).sum();
                    worst = worst.max(v2.sqrt());
                }
            }
        }
        worst
    }

    /// Velocity at (x, t): multilinear in space, linear in time between
    /// interior slices, constant beyond the first/last one.
    pub fn sample(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let dim = self.grid.dim();
        let n = self.grid.node_count();
        let (lo, hi, w) = self.bracket(t);
        for d in 0..dim {
            // per-component view of the flattened slice
            let comp_lo: Vec<f64> = (0..n).map(|i| self.slices[lo][i * dim + d]).collect();
            let a = multilinear(&self.grid, &comp_lo, x);
            if hi == lo {
                out[d] = a;
            } else {
                let comp_hi: Vec<f64> = (0..n).map(|i| self.slices[hi][i * dim + d]).collect();
                let b = multilinear(&self.grid, &comp_hi, x);
                out[d] = a + w * (b - a);
            }
        }
    }

    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        if t <= self.times[0] {
            return (0, 0, 0.0);
        }
        if t >= *self.times.last().unwrap() {
            let last = self.times.len() - 1;
            return (last, last, 0.0);
        }
        let mut k = 0;
        while self.times[k + 1] < t {
            k += 1;
        }
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (k, k + 1, w)
    }

    /// Discrete Lipschitz constant over all neighbour pairs (used after
    /// extension, when every node carries a value).
    pub fn discrete_lipschitz_full(&self) -> f64 {
        let dim = self.grid.dim();
        let h = self.grid.spacing();
        let mut worst: f64 = 0.0;
        for slice in &self.slices {
            for i in 0..self.grid.node_count() {
                for axis in 0..self.grid.dim() {
                    let up = self.grid.neighbor(i, axis, 1);
                    let dv2: f64 = (0..dim)
                        .map(|d| (slice[up * dim + d] - slice[i * dim + d]).powi(2))
                        .sum();
                    worst = worst.max(dv2.sqrt() / h);
                }
            }
        }
        worst
    }
}

/// Reads v = ∇(upper field) on the masked nodes of each interior slice.
/// Nodes at the mask boundary use one-sided differences into the mask;
/// isolated masked nodes fall back to centered differences.
pub fn velocity_on_k0(pair: &ReversiblePair) -> Result<VelocityField> {
    let grid = pair.grid().clone();
    let dim = grid.dim();
    let h = grid.spacing();
    let n = grid.node_count();
    let interior = pair.k0_mask.len();
    let mut slices = Vec::with_capacity(interior);
    let mut times = Vec::with_capacity(interior);
    for k in 0..interior {
        let mask = &pair.k0_mask[k];
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyReversibilitySet(k + 1));
        }
        let field = &pair.upper.slices[k + 1];
        times.push(field.time_tag);
        let mut slice = vec![0.0; n * dim];
        for i in 0..n {
            if !mask[i] {
                continue;
            }
            for d in 0..dim {
                let up = grid.neighbor(i, d, 1);
                let dn = grid.neighbor(i, d, -1);
                let g = match (mask[up], mask[dn]) {
                    (true, true) => (field.values[up] - field.values[dn]) / (2.0 * h),
                    (true, false) => (field.values[up] - field.values[i]) / h,
                    (false, true) => (field.values[i] - field.values[dn]) / h,
                    (false, false) => (field.values[up] - field.values[dn]) / (2.0 * h),
                };
                slice[i * dim + d] = g;
            }
        }
        slices.push(slice);
    }
    // neighbour-pair Lipschitz estimate on the mask
    let mut lip: f64 = 0.0;
    for (slice, mask) in slices.iter().zip(&pair.k0_mask) {
        for i in 0..n {
            if !mask[i] {
                continue;
            }
            for axis in 0..dim {
                let up = grid.neighbor(i, axis, 1);
                if mask[up] {
                    let dv2: f64 = (0..dim)
                        .map(|d| (slice[up * dim + d] - slice[i * dim + d]).powi(2))
                        .sum();
                    lip = lip.max(dv2.sqrt() / h);
                }
            }
        }
    }
    Ok(VelocityField {
        grid,
        times,
        slices,
        k0_mask: pair.k0_mask.clone(),
        lipschitz_estimate: lip,
        full_domain: false,
    })
}

/// McShane extension of the masked velocity to the whole grid, per
/// component and slice, clamped to the masked range. Agrees with the
/// input exactly on the mask.
pub fn lipschitz_extend(v: &VelocityField) -> VelocityField {
    let grid = &v.grid;
    let dim = grid.dim();
    let n = grid.node_count();
    let mut out_slices = Vec::with_capacity(v.slices.len());
    for (slice, mask) in v.slices.iter().zip(&v.k0_mask) {
        let masked: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let positions: Vec<TorusPoint> = masked.iter().map(|&i| grid.point(i)).collect();
        let mut out = slice.clone();
        for d in 0..dim {
            // pairwise Lipschitz constant of this component on the mask;
            // the neighbour estimate can miss chords between mask islands
            let mut lip = 0.0f64;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (a, &ia) in masked.iter().enumerate() {
                let va = slice[ia * dim + d];
                lo = lo.min(va);
                hi = hi.max(va);
                for (b, &ib) in masked.iter().enumerate().skip(a + 1) {
                    let dist = crate::torus::torus_distance(&positions[a], &positions[b])
                        .expect("grid points share a dimension");
                    if dist > 1e-12 {
                        lip = lip.max((va - slice[ib * dim + d]).abs() / dist);
                    }
                }
            }
            for i in 0..n {
                if mask[i] {
                    continue;
                }
                let p = grid.point(i);
                let mut best = f64::INFINITY;
                for (a, &ia) in masked.iter().enumerate() {
                    let dist = crate::torus::torus_distance(&p, &positions[a])
                        .expect("grid points share a dimension");
                    best = best.min(slice[ia * dim + d] + lip * dist);
                }
                out[i * dim + d] = best.clamp(lo, hi);
            }
        }
        out_slices.push(out);
    }
    VelocityField {
        grid: grid.clone(),
        times: v.times.clone(),
        slices: out_slices,
        k0_mask: v.k0_mask.clone(),
        lipschitz_estimate: v.lipschitz_estimate,
        full_domain: true,
    }
}

/// Sampled flow map T_{t1}^{t2} with its integrator statistics.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub t1: f64,
    pub t2: f64,
    pub seeds: Vec<TorusPoint>,
    pub arrivals: Vec<TorusPoint>,
    pub substeps: usize,
    pub dt_sub: f64,
}

/// Integrates ẋ = v(x,t) from t1 to t2 for every seed with classical
/// RK4; substeps are capped at h/max|v|.
pub fn integrate_flow(
    v: &VelocityField,
    seeds: &[TorusPoint],
    t1: f64,
    t2: f64,
) -> Result<FlowMap> {
    if !(t2 > t1) {
        return Err(Error::IntegrationFailed(format!("need t1 < t2, got [{t1}, {t2}]")));
    }
    if !v.full_domain {
        return Err(Error::IntegrationFailed(
            "velocity field must be Lipschitz-extended to the full domain".into(),
        ));
    }
    let dim = v.grid.dim();
    let span = t2 - t1;
    let speed = v.max_speed();
    let dt_cap = if speed > 0.0 { v.grid.spacing() / speed } else { span };
    let substeps = (span / dt_cap).ceil().max(4.0) as usize;
    if substeps > 2_000_000 {
        return Err(Error::IntegrationFailed(format!("step underflow: {substeps} substeps")));
    }
    let dt = span / substeps as f64;

    let mut arrivals = Vec::with_capacity(seeds.len());
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];
    for seed in seeds {
        let mut x: Vec<f64> = seed.coords().to_vec();
        for s in 0..substeps {
            let t = t1 + s as f64 * dt;
            v.sample(&x, t, &mut k1);
            for d in 0..dim {
                stage[d] = x[d] + 0.5 * dt * k1[d];
            }
            v.sample(&stage, t + 0.5 * dt, &mut k2);
            for d in 0..dim {
                stage[d] = x[d] + 0.5 * dt * k2[d];
            }
            v.sample(&stage, t + 0.5 * dt, &mut k3);
            for d in 0..dim {
                stage[d] = x[d] + dt * k3[d];
            }
            v.sample(&stage, t + dt, &mut k4);
            for d in 0..dim {
                x[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
            }
        }
        arrivals.push(TorusPoint::wrap(&x)?);
    }
    Ok(FlowMap { t1, t2, seeds: seeds.to_vec(), arrivals, substeps, dt_sub: dt })
}

/// Optimal orbits attached to the support of a transport plan; the
/// interpolated measure path μ_(t).
#[derive(Debug, Clone)]
pub struct MeasurePath {
    pub plan: TransportPlan,
    /// (row, col, weight, orbit) per support pair.
    pub orbits: Vec<(usize, usize, f64, Path)>,
    pub t_start: f64,
    pub t_end: f64,
}

impl MeasurePath {
    /// Measure of orbit positions at time t (weights are the plan's).
    pub fn slice(&self, t: f64) -> Result<DiscreteMeasure> {
        let atoms = self
            .orbits
            .iter()
            .map(|(_, _, w, orbit)| Ok((TorusPoint::wrap(&orbit.position(t))?, *w)))
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(atoms)
    }
}

/// Stores the minimising orbit for every support pair of the plan.
pub fn build_measure_path(
    plan: &TransportPlan,
    pressure: &PressureSpec,
    t1: f64,
    t2: f64,
    opts: &MinimizeOptions,
) -> Result<MeasurePath> {
    let mut orbits = Vec::new();
    for (i, j, w) in plan.support() {
        let r = torus_action(&plan.mu0.atoms()[i].0, &plan.mu1.atoms()[j].0, t1, t2, pressure, None, opts)?;
        orbits.push((i, j, w, r.path));
    }
    Ok(MeasurePath { plan: plan.clone(), orbits, t_start: t1, t_end: t2 })
}

/// Pushforward and optimality check of the flow over one (t1, t2) span.
#[derive(Debug, Clone)]
pub struct TransportCheck {
    /// W₁ between the pushforward of slice(t1) and slice(t2).
    pub w1_defect: f64,
    /// Σ w·J_P(x, T(x), t1, t2) along the flow.
    pub flow_cost: f64,
    /// K(slice(t1), slice(t2)) from the exact LP.
    pub k_cost: f64,
    pub cost_defect: f64,
}

/// Pushes slice(t1) through the flow and compares against slice(t2),
/// then checks the flow's own cost against the Kantorovich optimum.
pub fn verify_transport(
    path: &MeasurePath,
    v: &VelocityField,
    t1: f64,
    t2: f64,
    pressure: &PressureSpec,
    opts: &MinimizeOptions,
) -> Result<TransportCheck> {
    let from = path.slice(t1)?;
    let to = path.slice(t2)?;
    let seeds: Vec<TorusPoint> = from.atoms().iter().map(|(p, _)| p.clone()).collect();
    let map = integrate_flow(v, &seeds, t1, t2)?;
    let pushed = DiscreteMeasure::new(
        map.arrivals
            .iter()
            .zip(from.atoms())
            .map(|(arrival, (_, w))| (arrival.clone(), *w))
            .collect(),
    )?;
    let w1_defect = wasserstein(&pushed, &to, 1.0)?;

    let mut flow_cost = 0.0;
    for ((p, w), arrival) in from.atoms().iter().zip(&map.arrivals) {
        flow_cost += w * torus_action(p, arrival, t1, t2, pressure, None, opts)?.value;
    }
    let cost = cost_matrix(&from, &to, pressure, t1, t2, opts)?;
    let (plan, _) = solve_kantorovich(&from, &to, &cost)?;
    Ok(TransportCheck {
        w1_defect,
        flow_cost,
        k_cost: plan.value,
        cost_defect: (flow_cost - plan.value).abs(),
    })
}
