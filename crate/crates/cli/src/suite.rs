//! The acceptance battery: one function per criterion, each returning a
//! deterministic report with every checked metric and its bound. The
//! `suite` subcommand writes these as JSON; the acceptance test target
//! asserts them.

use pressure_transport::action::{minimize_action, torus_action, MinimizeOptions};
use pressure_transport::flow::{
    build_measure_path, integrate_flow, lipschitz_extend, velocity_on_k0, verify_transport,
};
use pressure_transport::hj::{
    hopf_lax_step, legendre_pair_zero_pressure, measure_grid_tol, Direction, GridFunction,
    HopfLaxSolver,
};
use pressure_transport::norm::{
    h2_norm_orbits, holder_check, rayleigh_lower_bound, regularized_dual_eval, tube_measure_build,
    OrbitMeasure, TestFunctionFamily,
};
use pressure_transport::pressure::{Amplitude, Mode, PressureSpec};
use pressure_transport::torus::{torus_distance, Grid, LiftedPoint, TorusPoint};
use pressure_transport::transport::{
    cost_matrix, duality_gap, solve_kantorovich, DiscreteMeasure, DualityOptions,
};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cmp {
    /// value must be ≤ bound
    Le,
    /// value must be ≥ bound
    Ge,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub cmp: Cmp,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub metrics: Vec<Metric>,
}

impl CriterionReport {
    fn new(id: u32, name: &str) -> CriterionReport {
        CriterionReport { id, name: name.into(), passed: true, metrics: Vec::new() }
    }

    fn le(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        let passed = value <= bound;
        self.passed &= passed;
        self.metrics.push(Metric { name: name.into(), value, bound, cmp: Cmp::Le, passed });
    }

    fn ge(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        let passed = value >= bound;
        self.passed &= passed;
        self.metrics.push(Metric { name: name.into(), value, bound, cmp: Cmp::Ge, passed });
    }
}

/// xorshift stream; deterministic given the config seed.
struct Stream(u64);

impl Stream {
    fn new(seed: u64) -> Stream {
        Stream(seed | 1)
    }

    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn single_mode(amp: f64, offset: f64, horizon: f64) -> PressureSpec {
    PressureSpec::new(
        1,
        offset,
        vec![Mode {
            wavevector: vec![1],
            cos_amp: Amplitude::Constant(amp),
            sin_amp: Amplitude::zero(),
        }],
        horizon,
    )
    .expect("catalog pressure")
}

fn atoms_1d(xs: &[f64]) -> DiscreteMeasure {
    let w = 1.0 / xs.len() as f64;
    DiscreteMeasure::new(
        xs.iter()
            .map(|&x| (TorusPoint::wrap(&[x]).unwrap(), w))
            .collect(),
    )
    .unwrap()
}

/// The duality benchmark problems: atoms sit on both the m = 256 and
/// m = 512 grids so interpolation is exact at the marginals.
fn benchmark_problems() -> Vec<(&'static str, DiscreteMeasure, DiscreteMeasure)> {
    vec![
        ("two-atom", atoms_1d(&[0.125, 0.625]), atoms_1d(&[0.375, 0.875])),
        (
            "eight-atom",
            atoms_1d(&[0.0, 0.09375, 0.25, 0.3125, 0.5, 0.59375, 0.75, 0.90625]),
            atoms_1d(&[0.03125, 0.1875, 0.28125, 0.40625, 0.53125, 0.6875, 0.8125, 0.96875]),
        ),
    ]
}

fn benchmark_pressures() -> Vec<(&'static str, PressureSpec)> {
    vec![
        ("zero", PressureSpec::zero(1, 1.0)),
        ("single-mode", single_mode(0.05, 0.25, 1.0)),
    ]
}

/// 1. Pressureless action closed form: |minimize_action − |x−y|²/(2Δt)|
///    ≤ 1e−8 on 100 random pairs in n = 1, 2.
pub fn criterion_1(seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(1, "pressureless action closed form");
    let mut stream = Stream::new(seed ^ 0xC1);
    let opts = MinimizeOptions::default();
    let mut worst: f64 = 0.0;
    for dim in [1usize, 2] {
        let p = PressureSpec::zero(dim, 3.0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..dim).map(|_| stream.next() * 2.0 - 0.5).collect();
            let y: Vec<f64> = (0..dim).map(|_| stream.next() * 2.0 - 0.5).collect();
            let dt = 0.2 + 2.0 * stream.next();
            let r = minimize_action(
                &LiftedPoint::new(x.clone()),
                &LiftedPoint::new(y.clone()),
                0.0,
                dt,
                &p,
                &opts,
            )
            .expect("pressureless minimisation");
            let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            worst = worst.max((r.value - d2 / (2.0 * dt)).abs());
        }
    }
    report.le("max |value − closed form| over 100 pairs", worst, 1e-8);
    report
}

/// 2. Action additivity: J(x,y,0,τ) + J(y,z,τ,1) ≥ J(x,z,0,1) − 2e−3 on
///    a fine midpoint lattice, with equality attained within 2e−3.
pub fn criterion_2(seed: u64) -> CriterionReport {
    use rayon::prelude::*;
    let mut report = CriterionReport::new(2, "action additivity and midpoint equality");
    let mut stream = Stream::new(seed ^ 0xC2);
    let p = single_mode(0.05, 0.0, 1.0);
    let opts = MinimizeOptions { restarts: 1, ..Default::default() };
    let lattice = 128usize;
    let mut worst_violation: f64 = 0.0; // most negative split − whole
    let mut worst_equality: f64 = 0.0; // largest (best split − whole)
    for _ in 0..50 {
        let x = TorusPoint::wrap(&[stream.next()]).unwrap();
        let z = TorusPoint::wrap(&[stream.next()]).unwrap();
        let tau = 0.25 + 0.5 * stream.next();
        let whole = torus_action(&x, &z, 0.0, 1.0, &p, None, &opts).unwrap().value;
        let splits: Vec<f64> = (0..lattice)
            .into_par_iter()
            .map(|k| {
                let y = TorusPoint::wrap(&[k as f64 / lattice as f64]).unwrap();
                let left = torus_action(&x, &y, 0.0, tau, &p, None, &opts).unwrap().value;
                let right = torus_action(&y, &z, tau, 1.0, &p, None, &opts).unwrap().value;
                left + right
            })
            .collect();
        let best = splits.iter().cloned().fold(f64::INFINITY, f64::min);
        worst_violation = worst_violation.min(best - whole);
        worst_equality = worst_equality.max((best - whole).abs());
    }
    report.ge("min (split − whole) over 50 triples", worst_violation, -2e-3);
    report.le("max |best split − whole|", worst_equality, 2e-3);
    report
}

/// 3. HJ-from-a-point residual at m = 256: relative residual ≤ 1e−2 on
///    at least 80% of the unmasked nodes, for P ≡ 0 and one single mode.
pub fn criterion_3(_seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(3, "HJ residual of the tabulated action");
    let grid = Grid::new(1, 256, 1.0, 2).unwrap();
    let x = TorusPoint::wrap(&[0.0]).unwrap();
    let opts = MinimizeOptions { restarts: 0, node_count: 33, ..Default::default() };
    for (name, p) in [
        ("zero", PressureSpec::zero(1, 1.0)),
        ("single-mode", single_mode(0.05, 0.0, 1.0)),
    ] {
        let field =
            pressure_transport::action::action_hj_residual(&p, &x, &grid, 0.0, 0.5, None, &opts)
                .expect("residual field");
        let unmasked: Vec<usize> = (0..grid.node_count()).filter(|&i| !field.masked[i]).collect();
        let good = unmasked.iter().filter(|&&i| field.relative(i) <= 1e-2).count();
        let fraction = good as f64 / unmasked.len() as f64;
        report.ge(format!("{name}: fraction of unmasked nodes within 1e-2"), fraction, 0.8);
        report.le(format!("{name}: masked fraction"), field.masked_fraction(), 0.2);
    }
    report
}

/// 4. Semigroup: Δt∘Δt equals the 2Δt step within 2·grid_tol in sup
///    norm on the regression field set.
pub fn criterion_4(_seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(4, "Hopf-Lax semigroup law");
    let opts = MinimizeOptions::kernel();
    let cases: Vec<(&str, usize, PressureSpec, Box<dyn Fn(&TorusPoint) -> f64>)> = vec![
        (
            "cos m=128 P=0",
            128,
            PressureSpec::zero(1, 0.25),
            Box::new(|p: &TorusPoint| 0.2 * (2.0 * PI * p.coords()[0]).cos()),
        ),
        (
            "two-mode m=128 P=0",
            128,
            PressureSpec::zero(1, 0.25),
            Box::new(|p: &TorusPoint| {
                0.1 * (2.0 * PI * p.coords()[0]).cos() + 0.05 * (4.0 * PI * p.coords()[0]).sin()
            }),
        ),
        (
            "cos m=128 single-mode",
            128,
            single_mode(0.05, 0.0, 0.25),
            Box::new(|p: &TorusPoint| 0.2 * (2.0 * PI * p.coords()[0]).cos()),
        ),
    ];
    for (name, m, pressure, phi0) in cases {
        let grid = Grid::new(1, m, 0.25, 2).unwrap();
        let tol = 2.0 * measure_grid_tol(&grid);
        let data = GridFunction::from_fn(&grid, 0.0, &phi0);
        let half = hopf_lax_step(&data, 0.0, 0.125, &pressure, Direction::Forward, &opts).unwrap();
        let two = hopf_lax_step(&half, 0.125, 0.25, &pressure, Direction::Forward, &opts).unwrap();
        let one = hopf_lax_step(&data, 0.0, 0.25, &pressure, Direction::Forward, &opts).unwrap();
        let defect = two
            .values
            .iter()
            .zip(&one.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.le(format!("{name}: sup |Δt∘Δt − 2Δt|"), defect, tol);
    }
    report
}

/// 5. Reversible-pair ordering, endpoints, pressureless collapse and the
///    Legendre cross-check at m = 512.
pub fn criterion_5(_seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(5, "reversible pair ordering and endpoints");
    let grid = Grid::new(1, 512, 1.0, 8).unwrap();
    let grid_tol = measure_grid_tol(&grid);
    let opts = MinimizeOptions::kernel();
    let phi0 = GridFunction::from_fn(&grid, 0.0, |p| 0.2 * (2.0 * PI * p.coords()[0]).cos());

    let zero = PressureSpec::zero(1, 1.0);
    let solver = HopfLaxSolver::new(&grid, &zero, &opts).unwrap();
    let pair = solver.make_reversible_pair(&phi0, None).unwrap();
    report.ge("P=0: min(upper − lower)", pair.ordering_defect(), -1e-9);
    report.le("P=0: endpoint gap", pair.endpoint_gap(), 1e-9);
    let sup_gap = (0..pair.upper.slices.len())
        .flat_map(|k| pair.gap(k))
        .fold(0.0f64, |a, g| a.max(g.abs()));
    report.le("P=0: sup |upper − lower|", sup_gap, 1e-3);

    let legendre = legendre_pair_zero_pressure(&phi0, &zero, None).unwrap();
    report.le(
        "P=0: distance to legendre construction",
        pair.upper.sup_distance(&legendre.upper),
        2.0 * grid_tol,
    );

    let single = single_mode(0.05, 0.25, 1.0);
    let solver = HopfLaxSolver::new(&grid, &single, &opts).unwrap();
    let pair = solver.make_reversible_pair(&phi0, None).unwrap();
    report.ge("single-mode: min(upper − lower)", pair.ordering_defect(), -1e-9);
    report.le("single-mode: endpoint gap", pair.endpoint_gap(), 1e-9);
    report
}

/// 6. Transport duality on the benchmark problems at m = 256 and 512:
///    relative gap ≤ 2e−2, gap ≥ −2·grid_tol, |gap| non-increasing in m.
pub fn criterion_6(seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(6, "duality gap K vs E");
    for (pname, pressure) in benchmark_pressures() {
        for (mname, mu0, mu1) in benchmark_problems() {
            let mut gaps = Vec::new();
            for m in [256usize, 512] {
                let grid = Grid::new(1, m, 1.0, 32).unwrap();
                let dopts = DualityOptions { seed, ..Default::default() };
                let r = duality_gap(&mu0, &mu1, &pressure, &grid, &dopts).unwrap();
                report.le(
                    format!("{pname}/{mname} m={m}: relative gap"),
                    r.gap / r.k_value.abs().max(1e-12),
                    2e-2,
                );
                report.ge(
                    format!("{pname}/{mname} m={m}: gap above -2·grid_tol"),
                    r.gap,
                    -2.0 * r.grid_tol,
                );
                gaps.push(r.gap.abs());
            }
            report.le(
                format!("{pname}/{mname}: |gap| at m=512 vs m=256"),
                gaps[1],
                gaps[0] + 1e-9,
            );
        }
    }
    report
}

/// 7. Flow transport and optimality at m = 512 over a one-step span:
///    W1 of the pushforward ≤ 1e−3, flow cost within 3·grid_tol of K,
///    P ≡ 0 closed-form map within 1e−4 of the integrator.
pub fn criterion_7(seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(7, "flow transport and optimality");
    let grid = Grid::new(1, 512, 1.0, 32).unwrap();
    let grid_tol = measure_grid_tol(&grid);
    let opts = MinimizeOptions::default();
    for (pname, pressure) in benchmark_pressures() {
        for (mname, mu0, mu1) in benchmark_problems() {
            let dopts = DualityOptions { seed, ..Default::default() };
            let r = duality_gap(&mu0, &mu1, &pressure, &grid, &dopts).unwrap();
            let v = lipschitz_extend(&velocity_on_k0(&r.pair).unwrap());
            let path = build_measure_path(&r.plan, &pressure, 0.0, 1.0, &opts).unwrap();
            let (t1, t2) = (grid.times()[16], grid.times()[17]);
            let check = verify_transport(&path, &v, t1, t2, &pressure, &opts).unwrap();
            report.le(format!("{pname}/{mname}: W1 pushforward defect"), check.w1_defect, 1e-3);
            report.le(
                format!("{pname}/{mname}: flow cost vs K"),
                check.cost_defect,
                3.0 * grid_tol,
            );
            if pressure.is_zero() {
                let from = path.slice(t1).unwrap();
                let seeds: Vec<TorusPoint> =
                    from.atoms().iter().map(|(q, _)| q.clone()).collect();
                let map = integrate_flow(&v, &seeds, t1, t2).unwrap();
                let mut worst: f64 = 0.0;
                for (s, arrival) in map.seeds.iter().zip(&map.arrivals) {
                    let mut v0 = vec![0.0; 1];
                    v.sample(s.coords(), t1, &mut v0);
                    let formula =
                        TorusPoint::wrap(&[s.coords()[0] + (t2 - t1) * v0[0]]).unwrap();
                    worst = worst.max(torus_distance(arrival, &formula).unwrap());
                }
                report.le(format!("{pname}/{mname}: closed-form map defect"), worst, 1e-4);
            }
        }
    }
    report
}

/// 8. K₀ invariance: masked seeds stay within one grid cell of the mask
///    at every sampled interior time.
pub fn criterion_8(seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(8, "reversibility set invariance under the flow");
    let grid = Grid::new(1, 512, 1.0, 32).unwrap();
    let h = grid.spacing();
    for (pname, pressure) in benchmark_pressures() {
        for (mname, mu0, mu1) in benchmark_problems() {
            let dopts = DualityOptions { seed, ..Default::default() };
            let r = duality_gap(&mu0, &mu1, &pressure, &grid, &dopts).unwrap();
            let v = lipschitz_extend(&velocity_on_k0(&r.pair).unwrap());
            let start_k = 8usize;
            let end_k = 24usize;
            let mask0 = r.pair.mask_at(start_k).unwrap();
            let mut seeds: Vec<TorusPoint> = (0..grid.node_count())
                .filter(|&i| mask0[i])
                .step_by(32)
                .map(|i| grid.point(i))
                .collect();
            let mut worst: f64 = 0.0;
            for k in start_k..end_k {
                let map = integrate_flow(&v, &seeds, grid.times()[k], grid.times()[k + 1]).unwrap();
                seeds = map.arrivals;
                let mask = r.pair.mask_at(k + 1).unwrap();
                for s in &seeds {
                    let dist = (0..grid.node_count())
                        .filter(|&i| mask[i])
                        .map(|i| torus_distance(&grid.point(i), s).unwrap())
                        .fold(f64::INFINITY, f64::min);
                    worst = worst.max(dist);
                }
            }
            report.le(format!("{pname}/{mname}: max distance to mask"), worst, h + 1e-12);
        }
    }
    report
}

/// 9. Dynamic-norm identities: the orbit-sum formula, the Rayleigh bound
///    bracket and the single-atom Wasserstein identity.
pub fn criterion_9(_seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(9, "dynamic norm identities");

    // weighted two-orbit measure: h2² = Σ β_j ∫|ẋ_j|²
    let times: Vec<f64> = (0..=512).map(|k| k as f64 / 512.0).collect();
    let orbit = |v: f64| -> Vec<f64> { times.iter().map(|t| v * t).collect() };
    let mu = OrbitMeasure::new(times.clone(), 1, vec![(0.5, orbit(0.2)), (0.5, orbit(0.4))]).unwrap();
    let h2 = h2_norm_orbits(&mu).unwrap();
    let expected = (0.5 * 0.04 + 0.5 * 0.16f64).sqrt();
    report.le("two-orbit sum identity", (h2 - expected).abs(), 1e-8);

    // polyline orbit: piecewise speeds 0.3 then 0.1
    let mut polyline = Vec::new();
    for &t in &times {
        polyline.push(if t <= 0.5 { 0.3 * t } else { 0.15 + 0.1 * (t - 0.5) });
    }
    let mu_poly = OrbitMeasure::new(times.clone(), 1, vec![(1.0, polyline)]).unwrap();
    let h2_poly = h2_norm_orbits(&mu_poly).unwrap();
    let expected_poly = (0.5 * 0.09 + 0.5 * 0.01f64).sqrt();
    report.le("polyline orbit identity", (h2_poly - expected_poly).abs(), 1e-8);

    // Rayleigh bracket on single straight orbits
    let family = TestFunctionFamily::rayleigh_1d(1.0);
    let fine: Vec<f64> = (0..=2048).map(|k| k as f64 / 2048.0).collect();
    for v in [0.25, -0.4, 0.1] {
        let positions: Vec<f64> = fine.iter().map(|t| 0.3 + v * t).collect();
        let m = OrbitMeasure::new(fine.clone(), 1, vec![(1.0, positions)]).unwrap();
        let h2 = h2_norm_orbits(&m).unwrap();
        let bound = rayleigh_lower_bound(&m, &family).unwrap();
        report.le(format!("rayleigh upper bracket (v={v})"), bound, h2 * h2 + 1e-8);
        report.ge(format!("rayleigh lower bracket (v={v})"), bound, 0.9 * h2 * h2);
    }

    // single-atom endpoints: h2 of the straight orbit equals W2 exactly
    let straight: Vec<f64> = fine.iter().map(|t| 0.15 + 0.25 * t).collect();
    let m = OrbitMeasure::new(fine.clone(), 1, vec![(1.0, straight)]).unwrap();
    let h2 = h2_norm_orbits(&m).unwrap();
    let mu0 = DiscreteMeasure::dirac(TorusPoint::wrap(&[0.15]).unwrap());
    let mu1 = DiscreteMeasure::dirac(TorusPoint::wrap(&[0.4]).unwrap());
    let w2 = pressure_transport::transport::wasserstein(&mu0, &mu1, 2.0).unwrap();
    report.le("single-atom h2 = W2", (h2 - w2).abs(), 1e-10);

    // Hölder-1/2 modulus of the straight orbit stays finite and stable
    let coarse = holder_check(&mu_poly, 2).unwrap();
    let refined = holder_check(&mu_poly, 5).unwrap();
    report.le("holder modulus stable under refinement", refined.sup_ratio, coarse.sup_ratio + 1e-9);
    report
}

/// 10. Tube construction: unit slice mass, stable energy constant and
///     the L^p scaling slope across an α sweep.
pub fn criterion_10(_seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(10, "mollified tube bounds");
    let core = pressure_transport::action::Path::straight(
        &LiftedPoint::new(vec![0.1]),
        &LiftedPoint::new(vec![0.6]),
        0.0,
        1.0,
        33,
    )
    .unwrap();

    let mut mass_defect: f64 = 0.0;
    let mut constants = Vec::new();
    for alpha in [1.0, 2.0, 4.0, 8.0] {
        let tube = tube_measure_build(core.clone(), alpha).unwrap();
        for t in [0.1, 0.25, 0.5, 0.75, 0.9] {
            mass_defect = mass_defect.max((tube.slice_mass(t).unwrap() - 1.0).abs());
        }
        let energy = tube.total_energy(512).unwrap();
        constants.push((energy - 0.25) * alpha * alpha);
    }
    report.le("slice mass defect across α sweep", mass_defect, 1e-6);
    let mean: f64 = constants.iter().sum::<f64>() / constants.len() as f64;
    let spread = constants
        .iter()
        .map(|c| (c - mean).abs() / mean)
        .fold(0.0f64, f64::max);
    report.le("energy constant spread across α", spread, 0.1);

    let p = 1.5;
    let tube_a = tube_measure_build(core.clone(), 2.0).unwrap();
    let tube_b = tube_measure_build(core.clone(), 8.0).unwrap();
    let slope = (tube_b.lp_norm(p, 256).unwrap() / tube_a.lp_norm(p, 256).unwrap()).ln()
        / (8.0f64 / 2.0).ln();
    let expected = (p - 1.0) / p;
    report.le("L^p slope relative error", (slope - expected).abs() / expected, 0.1);
    report
}

/// 11. Regularised dual: Ψ_ε of the duality-seeded field stays below
///     K + 2·grid_tol for ε ∈ {1e−1, 1e−2} on the two-atom problem.
pub fn criterion_11(seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(11, "regularised dual upper bound");
    let grid = Grid::new(1, 256, 1.0, 16).unwrap();
    let (_, mu0, mu1) = benchmark_problems().remove(0);
    let pressure = PressureSpec::zero(1, 1.0);
    let dopts = DualityOptions { seed, ..Default::default() };
    let r = duality_gap(&mu0, &mu1, &pressure, &grid, &dopts).unwrap();
    for eps in [0.1, 0.01] {
        let psi = regularized_dual_eval(&r.pair.upper, &pressure, eps, 1.3, &mu0, &mu1).unwrap();
        report.le(format!("Ψ_ε(ε={eps}) vs K"), psi, r.k_value + 2.0 * r.grid_tol);
    }
    report
}

/// Runs criteria 1..=11 (12, determinism, is exercised by running the
/// whole binary twice).
pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    vec![
        criterion_1(seed),
        criterion_2(seed),
        criterion_3(seed),
        criterion_4(seed),
        criterion_5(seed),
        criterion_6(seed),
        criterion_7(seed),
        criterion_8(seed),
        criterion_9(seed),
        criterion_10(seed),
        criterion_11(seed),
    ]
}

/// Verifies restriction consistency along a measure path; part of the
/// regression checks the `suite` command repeats.
pub fn restriction_consistency(seed: u64) -> CriterionReport {
    let mut report = CriterionReport::new(0, "restriction consistency");
    let pressure = single_mode(0.05, 0.0, 1.0);
    let (_, mu0, mu1) = benchmark_problems().remove(0);
    let opts = MinimizeOptions { seed, ..Default::default() };
    let cost = cost_matrix(&mu0, &mu1, &pressure, 0.0, 1.0, &opts).unwrap();
    let (plan, _) = solve_kantorovich(&mu0, &mu1, &cost).unwrap();
    let path = build_measure_path(&plan, &pressure, 0.0, 1.0, &opts).unwrap();
    let grid = Grid::new(1, 256, 1.0, 8).unwrap();
    let tol = 3.0 * measure_grid_tol(&grid);
    for t in [0.25, 0.5, 0.75] {
        let mid = path.slice(t).unwrap();
        let c1 = cost_matrix(&mu0, &mid, &pressure, 0.0, t, &opts).unwrap();
        let (p1, _) = solve_kantorovich(&mu0, &mid, &c1).unwrap();
        let c2 = cost_matrix(&mid, &mu1, &pressure, t, 1.0, &opts).unwrap();
        let (p2, _) = solve_kantorovich(&mid, &mu1, &c2).unwrap();
        report.le(
            format!("t={t}: |K(0,t) + K(t,T) − K|"),
            (p1.value + p2.value - plan.value).abs(),
            tol,
        );
    }
    report
}
