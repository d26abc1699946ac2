//! Kantorovich transport with cost J_P, Wasserstein distances, the Euler
//! value read off reversible pairs, and the duality gap K − E.
//!
//! K is the exact optimum of the transportation LP over the tabulated
//! action costs. E is maximised heuristically: candidate initial data
//! seeded from the Kantorovich duals (a McShane interpolation of u and
//! the c-transform of v), plus a zero seed and two random Fourier seeds,
//! each turned into a reversible pair whose endpoint slices are paired
//! against the marginals. The contract is a certified lower bound on E
//! with gap reporting, not a certified maximiser.

use crate::action::{torus_action, MinimizeOptions};
use crate::error::{Error, Result};
use crate::hj::{GridFunction, HopfLaxSolver, ReversiblePair};
use crate::lp::solve_transportation;
use crate::pressure::PressureSpec;
use crate::torus::{torus_distance, Grid, TorusPoint};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Finite atomic probability measure on the torus. Atoms with equal
/// positions are merged on construction; weights must be positive and
/// sum to 1 within 1e-9 (then rescaled to machine-exact total 1).
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    atoms: Vec<(TorusPoint, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(TorusPoint, f64)>) -> Result<DiscreteMeasure> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut merged: Vec<(TorusPoint, f64)> = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("weight {w} must be positive")));
            }
            match merged.iter_mut().find(|(q, _)| q.coords() == p.coords()) {
                Some((_, total)) => *total += w,
                None => merged.push((p, w)),
            }
        }
        let total: f64 = merged.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, expected 1")));
        }
        for (_, w) in &mut merged {
            *w /= total;
        }
        Ok(DiscreteMeasure { atoms: merged })
    }

    /// Single Dirac mass.
    pub fn dirac(p: TorusPoint) -> DiscreteMeasure {
        DiscreteMeasure { atoms: vec![(p, 1.0)] }
    }

    /// k uniform-weight atoms at seeded-random positions.
    pub fn random(dim: usize, k: usize, seed: u64) -> Result<DiscreteMeasure> {
        if k == 0 {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let atoms = (0..k)
            .map(|_| {
                let coords: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
                Ok((TorusPoint::wrap(&coords)?, 1.0 / k as f64))
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(atoms)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[(TorusPoint, f64)] {
        &self.atoms
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|(_, w)| *w).collect()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].0.dim()
    }
}

/// Tabulated transport costs between two atom sets.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl CostMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// c_ij = J_P(x_i, y_j, t1, t2), entries computed in parallel.
pub fn cost_matrix(
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    pressure: &PressureSpec,
    t1: f64,
    t2: f64,
    opts: &MinimizeOptions,
) -> Result<CostMatrix> {
    let rows = mu0.len();
    let cols = mu1.len();
    let data: Vec<f64> = (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / cols, idx % cols);
            torus_action(&mu0.atoms[i].0, &mu1.atoms[j].0, t1, t2, pressure, None, opts)
                .map(|r| r.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CostMatrix { rows, cols, data })
}

/// Optimal coupling of the Kantorovich problem.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub mu0: DiscreteMeasure,
    pub mu1: DiscreteMeasure,
    /// Row-major coupling weights γ_ij.
    pub gamma: Vec<f64>,
    pub cost: CostMatrix,
    pub value: f64,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gamma[i * self.mu1.len() + j]
    }

    /// Support pairs (i, j, γ_ij) with γ_ij > 0.
    pub fn support(&self) -> Vec<(usize, usize, f64)> {
        let cols = self.mu1.len();
        self.gamma
            .iter()
            .enumerate()
            .filter(|(_, g)| **g > 1e-12)
            .map(|(idx, g)| (idx / cols, idx % cols, *g))
            .collect()
    }

    /// True when every row ships its whole weight to a single column,
    /// i.e. the plan is induced by a map and the Monge value equals K.
    pub fn is_permutation(&self) -> bool {
        let cols = self.mu1.len();
        for i in 0..self.mu0.len() {
            let w = self.mu0.atoms[i].1;
            let mut hits = 0;
            for j in 0..cols {
                let g = self.get(i, j);
                if g > 1e-9 {
                    hits += 1;
                    if (g - w).abs() > 1e-9 {
                        return false;
                    }
                }
            }
            if hits != 1 {
                return false;
            }
        }
        true
    }

    /// Largest marginal defect of the coupling.
    pub fn marginal_defect(&self) -> f64 {
        let cols = self.mu1.len();
        let mut worst: f64 = 0.0;
        for i in 0..self.mu0.len() {
            let row: f64 = (0..cols).map(|j| self.get(i, j)).sum();
            worst = worst.max((row - self.mu0.atoms[i].1).abs());
        }
        for j in 0..cols {
            let col: f64 = (0..self.mu0.len()).map(|i| self.get(i, j)).sum();
            worst = worst.max((col - self.mu1.atoms[j].1).abs());
        }
        worst
    }
}

/// Kantorovich duals in the Euler convention: v_j − u_i ≤ c_ij with
/// equality on the support, K = Σ v_j w1_j − Σ u_i w0_i.
#[derive(Debug, Clone)]
pub struct DualPotentials {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl DualPotentials {
    pub fn dual_value(&self, mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> f64 {
        let take: f64 = self.v.iter().zip(mu1.atoms()).map(|(v, (_, w))| v * w).sum();
        let give: f64 = self.u.iter().zip(mu0.atoms()).map(|(u, (_, w))| u * w).sum();
        take - give
    }
}

/// Exact optimum of the transportation LP.
pub fn solve_kantorovich(
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    cost: &CostMatrix,
) -> Result<(TransportPlan, DualPotentials)> {
    if cost.rows != mu0.len() || cost.cols != mu1.len() {
        return Err(Error::DimensionError { expected: mu0.len() * mu1.len(), got: cost.data.len() });
    }
    let sol = solve_transportation(&cost.data, &mu0.weights(), &mu1.weights())?;
    let duals = DualPotentials {
        u: sol.row_duals.iter().map(|u| -u).collect(),
        v: sol.col_duals.clone(),
    };
    let plan = TransportPlan {
        mu0: mu0.clone(),
        mu1: mu1.clone(),
        gamma: sol.flow,
        cost: cost.clone(),
        value: sol.value,
    };
    Ok((plan, duals))
}

/// Wasserstein-p distance: LP with cost d_torus(x,y)^p, p-th root of the
/// optimal value.
pub fn wasserstein(mu0: &DiscreteMeasure, mu1: &DiscreteMeasure, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::ConfigError(format!("wasserstein needs p >= 1, got {p}")));
    }
    let rows = mu0.len();
    let cols = mu1.len();
    let mut data = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            data[i * cols + j] = torus_distance(&mu0.atoms[i].0, &mu1.atoms[j].0)?.powf(p);
        }
    }
    let sol = solve_transportation(&data, &mu0.weights(), &mu1.weights())?;
    Ok(sol.value.max(0.0).powf(1.0 / p))
}

/// E = Σ w1_j ψ(y_j, T) − Σ w0_i ψ(x_i, 0) using the pair's shared
/// endpoint slices, atoms evaluated by multilinear interpolation.
pub fn euler_value(pair: &ReversiblePair, mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> f64 {
    let first = &pair.upper.slices[0];
    let last = pair.upper.slices.last().unwrap();
    let take: f64 = mu1
        .atoms()
        .iter()
        .map(|(p, w)| w * last.interp(p.coords()))
        .sum();
    let give: f64 = mu0
        .atoms()
        .iter()
        .map(|(p, w)| w * first.interp(p.coords()))
        .sum();
    take - give
}

/// Everything the duality check produces.
#[derive(Debug)]
pub struct DualityReport {
    pub k_value: f64,
    pub e_best: f64,
    pub gap: f64,
    pub plan: TransportPlan,
    pub duals: DualPotentials,
    /// Pair achieving e_best.
    pub pair: ReversiblePair,
    pub best_seed: String,
    /// E for every seed tried, by name.
    pub seed_values: Vec<(String, f64)>,
    pub grid_tol: f64,
    pub is_permutation: bool,
    /// K reported as the Monge value when the plan is a permutation.
    pub monge_value: Option<f64>,
}

/// Options for `duality_gap`.
#[derive(Debug, Clone)]
pub struct DualityOptions {
    pub action: MinimizeOptions,
    pub kernel: MinimizeOptions,
    pub seed: u64,
    pub eps_rev: Option<f64>,
}

impl Default for DualityOptions {
    fn default() -> Self {
        DualityOptions {
            action: MinimizeOptions::default(),
            kernel: MinimizeOptions::kernel(),
            seed: 7,
            eps_rev: None,
        }
    }
}

/// Computes K by the exact LP and a certified lower bound on E by seeded
/// reversible pairs; reports the gap K − E_best.
pub fn duality_gap(
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    pressure: &PressureSpec,
    grid: &Grid,
    opts: &DualityOptions,
) -> Result<DualityReport> {
    let big_t = grid.horizon();
    let cost = cost_matrix(mu0, mu1, pressure, 0.0, big_t, &opts.action)?;
    let (plan, duals) = solve_kantorovich(mu0, mu1, &cost)?;
    let k_value = plan.value;

    let solver = HopfLaxSolver::new(grid, pressure, &opts.kernel)?;
    let grid_tol = crate::hj::measure_grid_tol(grid);
    let eps_rev = opts.eps_rev.unwrap_or(5.0 * grid_tol);

    let mut seeds: Vec<(String, GridFunction)> = Vec::new();
    seeds.push(("dual-mcshane".into(), mcshane_seed(grid, mu0, &duals.u)));
    seeds.push((
        "dual-ctransform".into(),
        ctransform_seed(grid, mu1, &duals.v, pressure, big_t, &opts.action)?,
    ));
    seeds.push(("zero".into(), GridFunction::constant(grid, 0.0, 0.0)));
    for r in 0..2 {
        seeds.push((format!("fourier-{r}"), fourier_seed(grid, opts.seed.wrapping_add(r))));
    }

    let mut best: Option<(String, f64, ReversiblePair)> = None;
    let mut seed_values = Vec::new();
    for (name, phi0) in seeds {
        let pair = solver.make_reversible_pair(&phi0, Some(eps_rev))?;
        let e = euler_value(&pair, mu0, mu1);
        seed_values.push((name.clone(), e));
        if best.as_ref().map_or(true, |(_, b, _)| e > *b) {
            best = Some((name, e, pair));
        }
    }
    let (best_seed, e_best, pair) = best.expect("at least one seed");
    let is_permutation = plan.is_permutation();
    Ok(DualityReport {
        k_value,
        e_best,
        gap: k_value - e_best,
        monge_value: is_permutation.then_some(k_value),
        is_permutation,
        plan,
        duals,
        pair,
        best_seed,
        seed_values,
        grid_tol,
    })
}

/// McShane interpolation of the dual potential u from the μ0 atoms to
/// the grid: φ0(x) = min_i [ u_i + L·d(x, x_i) ] with the measured
/// pairwise Lipschitz constant L; exact at the atoms.
fn mcshane_seed(grid: &Grid, mu0: &DiscreteMeasure, u: &[f64]) -> GridFunction {
    let atoms = mu0.atoms();
    let mut lip: f64 = 0.0;
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            let d = torus_distance(&atoms[i].0, &atoms[j].0).expect("same dim");
            if d > 1e-12 {
                lip = lip.max((u[i] - u[j]).abs() / d);
            }
        }
    }
    GridFunction::from_fn(grid, 0.0, |p| {
        atoms
            .iter()
            .zip(u)
            .map(|((a, _), ui)| ui + lip * torus_distance(p, a).expect("same dim"))
            .fold(f64::INFINITY, f64::min)
    })
}

/// c-transform of the dual potential v: φ0(x) = max_j [ v_j − J_P(x, y_j, 0, T) ].
/// Feasibility v_j − u_i ≤ c_ij makes this the largest initial datum
/// whose forward evolution still satisfies φ(y_j, T) ≥ v_j.
fn ctransform_seed(
    grid: &Grid,
    mu1: &DiscreteMeasure,
    v: &[f64],
    pressure: &PressureSpec,
    big_t: f64,
    opts: &MinimizeOptions,
) -> Result<GridFunction> {
    let values: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let mut best = f64::NEG_INFINITY;
            for ((y, _), vj) in mu1.atoms().iter().zip(v) {
                let c = torus_action(&x, y, 0.0, big_t, pressure, None, opts)?.value;
                best = best.max(vj - c);
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GridFunction { grid: grid.clone(), values, time_tag: 0.0 })
}

/// Small random Fourier datum (modes 1..3, amplitudes ~ 1/k).
fn fourier_seed(grid: &Grid, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let mut modes = Vec::new();
    for k in 1..=3usize {
        for d in 0..dim {
            let mut wave = vec![0i64; dim];
            wave[d] = k as i64;
            let amp_c = rng.gen_range(-0.1..0.1) / k as f64;
            let amp_s = rng.gen_range(-0.1..0.1) / k as f64;
            modes.push((wave, amp_c, amp_s));
        }
    }
    GridFunction::from_fn(grid, 0.0, |p| {
        modes
            .iter()
            .map(|(wave, a, b)| {
                let phase: f64 = 2.0
                    * PI
                    * wave
                        .iter()
                        .zip(p.coords())
                        .map(|(&k, &c)| k as f64 * c)
                        .sum::<f64>();
                a * phase.cos() + b * phase.sin()
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(coords: &[f64]) -> TorusPoint {
        TorusPoint::wrap(coords).unwrap()
    }

    fn two_atom(a: f64, b: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(vec![(point(&[a]), 0.5), (point(&[b]), 0.5)]).unwrap()
    }

    #[test]
    fn measure_merges_duplicates_and_normalises() {
        let m = DiscreteMeasure::new(vec![
            (point(&[0.25]), 0.25),
            (point(&[0.25]), 0.25),
            (point(&[0.75]), 0.5),
        ])
        .unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.atoms()[0].1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn measure_rejects_bad_weights() {
        assert!(DiscreteMeasure::new(vec![(point(&[0.1]), 0.4)]).is_err());
        assert!(DiscreteMeasure::new(vec![(point(&[0.1]), -1.0), (point(&[0.2]), 2.0)]).is_err());
    }

    #[test]
    fn cost_matrix_identical_diracs() {
        let p = PressureSpec::zero(1, 1.0);
        let mu = DiscreteMeasure::dirac(point(&[0.3]));
        let c = cost_matrix(&mu, &mu, &p, 0.0, 1.0, &MinimizeOptions::default()).unwrap();
        assert!(c.get(0, 0).abs() < 1e-14);
    }

    #[test]
    fn cost_matrix_closed_form_pair() {
        let p = PressureSpec::zero(1, 1.0);
        let mu0 = DiscreteMeasure::dirac(point(&[0.0]));
        let mu1 = DiscreteMeasure::dirac(point(&[0.5]));
        let c01 = cost_matrix(&mu0, &mu1, &p, 0.0, 1.0, &MinimizeOptions::default()).unwrap();
        let c10 = cost_matrix(&mu1, &mu0, &p, 0.0, 1.0, &MinimizeOptions::default()).unwrap();
        assert!((c01.get(0, 0) - 0.125).abs() < 1e-12);
        assert!((c10.get(0, 0) - 0.125).abs() < 1e-12);
    }

    #[test]
    fn cost_matrix_invariant_under_common_shift() {
        let p = PressureSpec::single_mode(1, vec![1], 0.05, 1.0).unwrap();
        let opts = MinimizeOptions { restarts: 1, ..Default::default() };
        let mu0 = two_atom(0.1, 0.4);
        let mu1 = two_atom(0.6, 0.9);
        let base = cost_matrix(&mu0, &mu1, &p, 0.0, 1.0, &opts).unwrap();
        let shift = |m: &DiscreteMeasure| {
            DiscreteMeasure::new(
                m.atoms()
                    .iter()
                    .map(|(q, w)| (point(&[q.coords()[0] + 2.0]), *w))
                    .collect(),
            )
            .unwrap()
        };
        let shifted = cost_matrix(&shift(&mu0), &shift(&mu1), &p, 0.0, 1.0, &opts).unwrap();
        for (a, b) in base.data.iter().zip(&shifted.data) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn kantorovich_dirac_to_dirac() {
        let p = PressureSpec::zero(1, 1.0);
        let mu0 = DiscreteMeasure::dirac(point(&[0.1]));
        let mu1 = DiscreteMeasure::dirac(point(&[0.35]));
        let c = cost_matrix(&mu0, &mu1, &p, 0.0, 1.0, &MinimizeOptions::default()).unwrap();
        let (plan, duals) = solve_kantorovich(&mu0, &mu1, &c).unwrap();
        assert_eq!(plan.gamma, vec![1.0]);
        assert!((plan.value - c.get(0, 0)).abs() < 1e-15);
        assert!((duals.dual_value(&mu0, &mu1) - plan.value).abs() < 1e-10);
    }

    #[test]
    fn kantorovich_prefers_identity_on_antidiagonal_cost() {
        let mu0 = two_atom(0.0, 0.5);
        let mu1 = two_atom(0.0, 0.5);
        let cost = CostMatrix { rows: 2, cols: 2, data: vec![0.0, 1.0, 1.0, 0.0] };
        let (plan, _) = solve_kantorovich(&mu0, &mu1, &cost).unwrap();
        assert!(plan.value.abs() < 1e-15);
        assert!(plan.is_permutation());
    }

    #[test]
    fn dual_feasibility_and_slackness() {
        let p = PressureSpec::single_mode(1, vec![1], 0.05, 1.0).unwrap();
        let mu0 = two_atom(0.05, 0.45);
        let mu1 = two_atom(0.3, 0.8);
        let opts = MinimizeOptions { restarts: 1, ..Default::default() };
        let c = cost_matrix(&mu0, &mu1, &p, 0.0, 1.0, &opts).unwrap();
        let (plan, duals) = solve_kantorovich(&mu0, &mu1, &c).unwrap();
        assert!(plan.marginal_defect() < 1e-10);
        assert!((duals.dual_value(&mu0, &mu1) - plan.value).abs() < 1e-8);
        for i in 0..2 {
            for j in 0..2 {
                let slack = c.get(i, j) - (duals.v[j] - duals.u[i]);
                assert!(slack > -1e-10);
                if plan.get(i, j) > 1e-12 {
                    assert!(slack.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn wasserstein_examples() {
        let mu = two_atom(0.2, 0.7);
        assert!(wasserstein(&mu, &mu, 2.0).unwrap() < 1e-12);

        let d0 = DiscreteMeasure::dirac(point(&[0.0]));
        let d5 = DiscreteMeasure::dirac(point(&[0.5]));
        assert!((wasserstein(&d0, &d5, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kantorovich_zero_pressure_is_half_w2_squared() {
        let mu0 = two_atom(0.05, 0.45);
        let mu1 = two_atom(0.3, 0.8);
        let p = PressureSpec::zero(1, 1.0);
        let c = cost_matrix(&mu0, &mu1, &p, 0.0, 1.0, &MinimizeOptions::default()).unwrap();
        let (plan, _) = solve_kantorovich(&mu0, &mu1, &c).unwrap();
        let w2 = wasserstein(&mu0, &mu1, 2.0).unwrap();
        assert!((plan.value - 0.5 * w2 * w2).abs() < 1e-10);
    }

    #[test]
    fn euler_value_trivial_cases() {
        let grid = Grid::new(1, 32, 1.0, 4).unwrap();
        let p = PressureSpec::zero(1, 1.0);
        let solver = HopfLaxSolver::new(&grid, &p, &MinimizeOptions::kernel()).unwrap();
        let pair = solver
            .make_reversible_pair(&GridFunction::constant(&grid, 0.0, 0.0), None)
            .unwrap();
        let mu = two_atom(0.1, 0.6);
        assert!(euler_value(&pair, &mu, &mu).abs() < 1e-12);

        // constant shift of φ0 cancels in E
        let shifted = solver
            .make_reversible_pair(&GridFunction::constant(&grid, 0.0, 3.0), None)
            .unwrap();
        assert!(euler_value(&shifted, &mu, &mu).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_transport_closed_form() {
        let p = PressureSpec::zero(2, 1.0);
        let mu0 = DiscreteMeasure::new(vec![
            (point(&[0.1, 0.1]), 0.5),
            (point(&[0.6, 0.4]), 0.5),
        ])
        .unwrap();
        let mu1 = DiscreteMeasure::new(vec![
            (point(&[0.3, 0.1]), 0.5),
            (point(&[0.9, 0.4]), 0.5),
        ])
        .unwrap();
        let c = cost_matrix(&mu0, &mu1, &p, 0.0, 1.0, &MinimizeOptions::default()).unwrap();
        let (plan, duals) = solve_kantorovich(&mu0, &mu1, &c).unwrap();
        // identity pairing: both moves are +0.2 along one axis and
        // wrap-around -0.2/+0.3... the direct displacements are 0.2 and 0.3
        assert!(plan.is_permutation());
        assert!((plan.value - 0.5 * (0.02 + 0.045)).abs() < 1e-10, "{}", plan.value);
        assert!((duals.dual_value(&mu0, &mu1) - plan.value).abs() < 1e-8);

        let w2 = wasserstein(&mu0, &mu1, 2.0).unwrap();
        assert!((plan.value - 0.5 * w2 * w2).abs() < 1e-10);
    }

    #[test]
    fn duality_gap_identity_problem() {
        let grid = Grid::new(1, 32, 1.0, 4).unwrap();
        let p = PressureSpec::zero(1, 1.0);
        let mu = DiscreteMeasure::dirac(point(&[0.0]));
        let report = duality_gap(&mu, &mu, &p, &grid, &DualityOptions::default()).unwrap();
        assert!(report.k_value.abs() < 1e-12);
        assert!(report.e_best.abs() < 2.0 * report.grid_tol + 1e-9);
        assert!(report.gap.abs() < 2.0 * report.grid_tol + 1e-9);
    }

    #[test]
    fn duality_gap_two_atom_zero_pressure() {
        // atoms on the m = 128 grid
        let grid = Grid::new(1, 128, 1.0, 8).unwrap();
        let p = PressureSpec::zero(1, 1.0);
        let mu0 = two_atom(0.125, 0.625);
        let mu1 = two_atom(0.375, 0.875);
        let report = duality_gap(&mu0, &mu1, &p, &grid, &DualityOptions::default()).unwrap();
        assert!(report.gap >= -2.0 * report.grid_tol, "gap {}", report.gap);
        assert!(
            report.gap <= 2e-2 * report.k_value.abs().max(1e-2),
            "gap {} vs K {}",
            report.gap,
            report.k_value
        );
    }
}
