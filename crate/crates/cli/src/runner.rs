//! Subcommand execution: builds core objects from the config, runs the
//! requested computation and emits artifacts into the hashed run dir.

use crate::config::{ConfigError, Phi0Config, RunConfig};
use crate::io::{self, IoError};
use pressure_transport::action::{torus_action, MinimizeOptions};
use pressure_transport::error::Error as CoreError;
use pressure_transport::flow::{
    build_measure_path, integrate_flow, lipschitz_extend, velocity_on_k0, verify_transport,
};
use pressure_transport::hj::{Direction, GridFunction, HopfLaxSolver};
use pressure_transport::norm::{
    h2_norm_orbits, holder_check, rayleigh_lower_bound, regularized_dual_eval, tube_measure_build,
    TestFunctionFamily,
};
use pressure_transport::transport::{cost_matrix, duality_gap, solve_kantorovich, DualityOptions};
use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Failure taxonomy mapping to exit codes: validation → 2, numerics → 3.
#[derive(Debug)]
pub enum RunError {
    Validation(String),
    Numerical { module: String, error: String },
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(msg) => write!(f, "{msg}"),
            RunError::Numerical { module, error } => write!(f, "[{module}] {error}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Validation(e.to_string())
    }
}

impl From<IoError> for RunError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::NonFinite(path) => {
                RunError::Numerical { module: "emit".into(), error: format!("non-finite value at {path}") }
            }
            other => RunError::Validation(other.to_string()),
        }
    }
}

fn core(module: &str) -> impl Fn(CoreError) -> RunError + '_ {
    move |e| RunError::Numerical { module: module.into(), error: e.to_string() }
}

pub struct RunContext {
    pub config: RunConfig,
    pub config_text: String,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub quiet: bool,
    pub emit_slices: bool,
}

impl RunContext {
    fn dir_for(&self, subcommand: &str) -> Result<PathBuf, RunError> {
        let dir = io::run_dir(&self.out_dir, subcommand, &self.config_text, self.config.seed);
        std::fs::create_dir_all(&dir)
            .map_err(|e| RunError::Validation(format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

#[derive(Serialize)]
struct ActionReport {
    value: f64,
    shift: Vec<i64>,
    el_residual: f64,
}

pub fn run_action(ctx: &RunContext) -> Result<PathBuf, RunError> {
    let spec = ctx
        .config
        .action
        .clone()
        .ok_or_else(|| RunError::Validation("config has no [action] section".into()))?;
    let pressure = ctx.config.build_pressure()?;
    let x = pressure_transport::torus::TorusPoint::wrap(&spec.x).map_err(core("torus"))?;
    let y = pressure_transport::torus::TorusPoint::wrap(&spec.y).map_err(core("torus"))?;
    let mut opts = MinimizeOptions { seed: ctx.config.seed, ..Default::default() };
    if let Some(nc) = spec.node_count {
        opts.node_count = nc;
    }
    let result =
        torus_action(&x, &y, spec.t1, spec.t2, &pressure, None, &opts).map_err(core("action"))?;
    let dir = ctx.dir_for("action")?;
    io::write_json(
        &dir.join("report.json"),
        &ActionReport { value: result.value, shift: result.shift.clone(), el_residual: result.el_residual },
    )?;
    if spec.emit_path {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(dir.join("path.csv"))
            .map_err(|e| RunError::Validation(e.to_string()))?;
        for k in 0..result.path.node_count() {
            let mut row = vec![format!("{:.17e}", result.path.node_time(k))];
            row.extend(result.path.node(k).iter().map(|c| format!("{c:.17e}")));
            writer.write_record(&row).map_err(|e| RunError::Validation(e.to_string()))?;
        }
    }
    ctx.say(format!("action value {:.6} (shift {:?})", result.value, result.shift));
    Ok(dir)
}

fn build_phi0(
    config: &RunConfig,
    phi0: &Phi0Config,
    grid: &pressure_transport::torus::Grid,
    base_dir: &Path,
) -> Result<GridFunction, RunError> {
    Ok(match phi0 {
        Phi0Config::Constant { constant } => GridFunction::constant(grid, 0.0, *constant),
        Phi0Config::Fourier { modes } => {
            let modes = modes.clone();
            GridFunction::from_fn(grid, 0.0, move |p| {
                modes
                    .iter()
                    .map(|m| {
                        let phase: f64 = 2.0
                            * PI
                            * m.k.iter().zip(p.coords()).map(|(&k, &c)| k as f64 * c).sum::<f64>();
                        m.a * phase.cos() + m.b * phase.sin()
                    })
                    .sum()
            })
        }
        Phi0Config::Csv { csv } => {
            let values = read_values_csv(&base_dir.join(csv), grid.node_count())?;
            GridFunction { grid: grid.clone(), values, time_tag: 0.0 }
        }
    }
    .clone_with_dim_check(config.dimension)?)
}

trait DimCheck: Sized {
    fn clone_with_dim_check(self, dim: usize) -> Result<Self, RunError>;
}

impl DimCheck for GridFunction {
    fn clone_with_dim_check(self, dim: usize) -> Result<Self, RunError> {
        if self.grid.dim() != dim {
            return Err(RunError::Validation("grid dimension mismatch".into()));
        }
        Ok(self)
    }
}

fn read_values_csv(path: &Path, expected: usize) -> Result<Vec<f64>, RunError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| RunError::Validation(e.to_string()))?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| RunError::Validation(e.to_string()))?;
        let last = &record[record.len() - 1];
        values.push(
            last.trim()
                .parse::<f64>()
                .map_err(|e| RunError::Validation(format!("bad value {last}: {e}")))?,
        );
    }
    if values.len() != expected {
        return Err(RunError::Validation(format!(
            "expected {expected} node values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

#[derive(Serialize)]
struct HjReport {
    direction: String,
    slices: usize,
    final_min: f64,
    final_max: f64,
    discrete_lipschitz_final: f64,
}

pub fn run_hj(ctx: &RunContext) -> Result<PathBuf, RunError> {
    let spec = ctx
        .config
        .hj
        .clone()
        .ok_or_else(|| RunError::Validation("config has no [hj] section".into()))?;
    let grid = ctx.config.build_grid()?;
    let pressure = ctx.config.build_pressure()?;
    let solver = HopfLaxSolver::new(&grid, &pressure, &MinimizeOptions::kernel()).map_err(core("hj"))?;
    let mut data = build_phi0(&ctx.config, &spec.phi0, &grid, &ctx.base_dir)?;
    let direction = if spec.direction == "forward" {
        Direction::Forward
    } else {
        data.time_tag = grid.horizon();
        Direction::Backward
    };
    let field = solver.propagate(&data, direction).map_err(core("hj"))?;
    let dir = ctx.dir_for("hj")?;
    let terminal = match direction {
        Direction::Forward => field.slices.last().unwrap(),
        Direction::Backward => &field.slices[0],
    };
    io::write_json(
        &dir.join("report.json"),
        &HjReport {
            direction: spec.direction.clone(),
            slices: field.slices.len(),
            final_min: terminal.values.iter().cloned().fold(f64::INFINITY, f64::min),
            final_max: terminal.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            discrete_lipschitz_final: terminal.discrete_lipschitz(),
        },
    )?;
    if ctx.emit_slices {
        io::write_field_csv(&dir.join("slices.csv"), &field)?;
    }
    ctx.say(format!("hj {} propagation over {} slices", spec.direction, field.slices.len()));
    Ok(dir)
}

#[derive(Serialize)]
struct PairReport {
    eps_rev: f64,
    ordering_defect: f64,
    endpoint_gap: f64,
    masked_fraction: Vec<f64>,
}

pub fn run_pair(ctx: &RunContext) -> Result<PathBuf, RunError> {
    let spec = ctx
        .config
        .hj
        .clone()
        .ok_or_else(|| RunError::Validation("config has no [hj] section".into()))?;
    let grid = ctx.config.build_grid()?;
    let pressure = ctx.config.build_pressure()?;
    let solver = HopfLaxSolver::new(&grid, &pressure, &MinimizeOptions::kernel()).map_err(core("hj"))?;
    let phi0 = build_phi0(&ctx.config, &spec.phi0, &grid, &ctx.base_dir)?;
    let eps_rev = ctx.config.duality.as_ref().and_then(|d| d.eps_rev);
    let pair = solver.make_reversible_pair(&phi0, eps_rev).map_err(core("hj"))?;
    let dir = ctx.dir_for("pair")?;
    io::write_json(
        &dir.join("report.json"),
        &PairReport {
            eps_rev: pair.eps_rev,
            ordering_defect: pair.ordering_defect(),
            endpoint_gap: pair.endpoint_gap(),
            masked_fraction: pair
                .k0_mask
                .iter()
                .map(|m| m.iter().filter(|&&x| x).count() as f64 / m.len() as f64)
                .collect(),
        },
    )?;
    io::write_pair_csv(&dir.join("pair.csv"), &pair)?;
    ctx.say(format!(
        "pair: ordering defect {:.2e}, endpoint gap {:.2e}",
        pair.ordering_defect(),
        pair.endpoint_gap()
    ));
    Ok(dir)
}

#[derive(Serialize)]
struct OtReport {
    k_value: f64,
    dual_value: f64,
    marginal_defect: f64,
    is_permutation: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    monge_value: Option<f64>,
}

pub fn run_ot(ctx: &RunContext) -> Result<PathBuf, RunError> {
    let measures = ctx
        .config
        .measures
        .clone()
        .ok_or_else(|| RunError::Validation("config has no [measures] section".into()))?;
    let pressure = ctx.config.build_pressure()?;
    let mu0 = ctx.config.build_measure(&measures.mu0, &ctx.base_dir, ctx.config.seed)?;
    let mu1 = ctx.config.build_measure(&measures.mu1, &ctx.base_dir, ctx.config.seed + 1)?;
    let opts = MinimizeOptions { seed: ctx.config.seed, ..Default::default() };
    let cost = cost_matrix(&mu0, &mu1, &pressure, 0.0, ctx.config.grid.horizon, &opts)
        .map_err(core("transport"))?;
    let (plan, duals) = solve_kantorovich(&mu0, &mu1, &cost).map_err(core("transport"))?;
    let dir = ctx.dir_for("ot")?;
    let is_permutation = plan.is_permutation();
    io::write_json(
        &dir.join("report.json"),
        &OtReport {
            k_value: plan.value,
            dual_value: duals.dual_value(&mu0, &mu1),
            marginal_defect: plan.marginal_defect(),
            is_permutation,
            monge_value: is_permutation.then_some(plan.value),
        },
    )?;
    write_plan_csv(&dir.join("plan.csv"), &plan)?;
    ctx.say(format!("ot: K = {:.8}, permutation: {is_permutation}", plan.value));
    Ok(dir)
}

fn write_plan_csv(
    path: &Path,
    plan: &pressure_transport::transport::TransportPlan,
) -> Result<(), RunError> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| RunError::Validation(e.to_string()))?;
    for (i, j, mass) in plan.support() {
        writer
            .write_record(&[i.to_string(), j.to_string(), format!("{mass:.17e}")])
            .map_err(|e| RunError::Validation(e.to_string()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DualityJson {
    k_value: f64,
    e_best: f64,
    gap: f64,
    relative_gap: f64,
    grid_tol: f64,
    eps_rev: f64,
    best_seed: String,
    seed_values: Vec<(String, f64)>,
    is_permutation: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    monge_value: Option<f64>,
    gap_nonnegative_within_tolerance: bool,
}

pub fn run_duality(ctx: &RunContext) -> Result<PathBuf, RunError> {
    let measures = ctx
        .config
        .measures
        .clone()
        .ok_or_else(|| RunError::Validation("config has no [measures] section".into()))?;
    let grid = ctx.config.build_grid()?;
    let pressure = ctx.config.build_pressure()?;
    let mu0 = ctx.config.build_measure(&measures.mu0, &ctx.base_dir, ctx.config.seed)?;
    let mu1 = ctx.config.build_measure(&measures.mu1, &ctx.base_dir, ctx.config.seed + 1)?;
    let mut dopts = DualityOptions { seed: ctx.config.seed, ..Default::default() };
    dopts.action.seed = ctx.config.seed;
    if let Some(d) = &ctx.config.duality {
        dopts.eps_rev = d.eps_rev;
    }
    let report = duality_gap(&mu0, &mu1, &pressure, &grid, &dopts).map_err(core("transport"))?;
    let dir = ctx.dir_for("duality")?;
    io::write_json(
        &dir.join("report.json"),
        &DualityJson {
            k_value: report.k_value,
            e_best: report.e_best,
            gap: report.gap,
            relative_gap: report.gap / report.k_value.abs().max(1e-300),
            grid_tol: report.grid_tol,
            eps_rev: report.pair.eps_rev,
            best_seed: report.best_seed.clone(),
            seed_values: report.seed_values.clone(),
            is_permutation: report.is_permutation,
            monge_value: report.monge_value,
            gap_nonnegative_within_tolerance: report.gap >= -2.0 * report.grid_tol,
        },
    )?;
    write_plan_csv(&dir.join("plan.csv"), &report.plan)?;
    io::write_pair_csv(&dir.join("pair.csv"), &report.pair)?;
    io::write_measure_csv(&dir.join("mu0.csv"), &mu0)?;
    io::write_measure_csv(&dir.join("mu1.csv"), &mu1)?;
    ctx.say(format!(
        "duality: K = {:.8}, E = {:.8}, gap = {:.3e} (seed {})",
        report.k_value, report.e_best, report.gap, report.best_seed
    ));
    Ok(dir)
}

#[derive(Serialize)]
struct FlowReport {
    t1: f64,
    t2: f64,
    seeds: usize,
    substeps: usize,
    lipschitz_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    w1_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flow_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_cost: Option<f64>,
}

pub fn run_flow(ctx: &RunContext) -> Result<PathBuf, RunError> {
    let spec = ctx.config.flow.clone().unwrap_or_default();
    let grid = ctx.config.build_grid()?;
    let pressure = ctx.config.build_pressure()?;

    // the pair comes from a saved duality run when given, otherwise the
    // duality pipeline runs in-process
    let (pair, plan) = match &spec.duality_dir {
        Some(dir) => {
            let dir = ctx.base_dir.join(dir);
            let report: serde_json::Value = serde_json::from_str(
                &std::fs::read_to_string(dir.join("report.json"))
                    .map_err(|e| RunError::Validation(format!("cannot read duality report: {e}")))?,
            )
            .map_err(|e| RunError::Validation(e.to_string()))?;
            let eps_rev = report["eps_rev"].as_f64().unwrap_or(0.0);
            let pair = io::read_pair_csv(&dir.join("pair.csv"), &grid, eps_rev)?;
            (pair, None)
        }
        None => {
            let measures = ctx
                .config
                .measures
                .clone()
                .ok_or_else(|| RunError::Validation("flow needs [measures] or flow.duality_dir".into()))?;
            let mu0 = ctx.config.build_measure(&measures.mu0, &ctx.base_dir, ctx.config.seed)?;
            let mu1 = ctx.config.build_measure(&measures.mu1, &ctx.base_dir, ctx.config.seed + 1)?;
            let dopts = DualityOptions { seed: ctx.config.seed, ..Default::default() };
            let report =
                duality_gap(&mu0, &mu1, &pressure, &grid, &dopts).map_err(core("transport"))?;
            (report.pair.clone(), Some(report.plan))
        }
    };

    let velocity = lipschitz_extend(&velocity_on_k0(&pair).map_err(core("flow"))?);
    let k_mid = grid.time_steps() / 2;
    let t1 = spec.t1.unwrap_or(grid.times()[k_mid]);
    let t2 = spec.t2.unwrap_or(grid.times()[k_mid + 1]);

    let opts = MinimizeOptions { seed: ctx.config.seed, ..Default::default() };
    let dir = ctx.dir_for("flow")?;

    let (seeds, check) = match (&spec.seeds_csv, &plan) {
        (Some(csv), _) => (io::read_points_csv(&ctx.base_dir.join(csv), grid.dim())?, None),
        (None, Some(plan)) => {
            let path = build_measure_path(plan, &pressure, 0.0, grid.horizon(), &opts)
                .map_err(core("flow"))?;
            let check =
                verify_transport(&path, &velocity, t1, t2, &pressure, &opts).map_err(core("flow"))?;
            let from = path.slice(t1).map_err(core("flow"))?;
            (from.atoms().iter().map(|(p, _)| p.clone()).collect(), Some(check))
        }
        (None, None) => {
            return Err(RunError::Validation(
                "flow needs flow.seeds_csv when reading a saved duality run".into(),
            ))
        }
    };

    let map = integrate_flow(&velocity, &seeds, t1, t2).map_err(core("flow"))?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(dir.join("arrivals.csv"))
        .map_err(|e| RunError::Validation(e.to_string()))?;
    for (s, a) in map.seeds.iter().zip(&map.arrivals) {
        let mut row: Vec<String> = s.coords().iter().map(|c| format!("{c:.17e}")).collect();
        row.extend(a.coords().iter().map(|c| format!("{c:.17e}")));
        writer.write_record(&row).map_err(|e| RunError::Validation(e.to_string()))?;
    }
    io::write_json(
        &dir.join("report.json"),
        &FlowReport {
            t1,
            t2,
            seeds: map.seeds.len(),
            substeps: map.substeps,
            lipschitz_estimate: velocity.lipschitz_estimate,
            w1_defect: check.as_ref().map(|c| c.w1_defect),
            flow_cost: check.as_ref().map(|c| c.flow_cost),
            k_cost: check.as_ref().map(|c| c.k_cost),
        },
    )?;
    ctx.say(format!("flow: {} seeds over [{t1}, {t2}]", map.seeds.len()));
    Ok(dir)
}

#[derive(Serialize)]
struct NormReport {
    h2_norm: f64,
    rayleigh_bound: f64,
    rayleigh_family_size: usize,
    holder_sup_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tube: Option<TubeReport>,
    psi: Vec<PsiReport>,
}

#[derive(Serialize)]
struct TubeReport {
    alpha: f64,
    mass_defect: f64,
    total_energy: f64,
}

#[derive(Serialize)]
struct PsiReport {
    epsilon: f64,
    omega: f64,
    value: f64,
}

pub fn run_norm(ctx: &RunContext) -> Result<PathBuf, RunError> {
    let spec = ctx
        .config
        .norm
        .clone()
        .ok_or_else(|| RunError::Validation("config has no [norm] section".into()))?;
    let orbits_csv = spec
        .orbits_csv
        .as_ref()
        .ok_or_else(|| RunError::Validation("norm.orbits_csv is required".into()))?;
    let measure = io::read_orbits_csv(&ctx.base_dir.join(orbits_csv), ctx.config.dimension)?;
    let h2 = h2_norm_orbits(&measure).map_err(core("norm"))?;

    let family = TestFunctionFamily::rayleigh_1d(ctx.config.grid.horizon);
    let family = TestFunctionFamily {
        horizon: family.horizon,
        members: family.members.into_iter().take(spec.rayleigh_modes).collect(),
    };
    let bound = rayleigh_lower_bound(&measure, &family).map_err(core("norm"))?;
    let holder = holder_check(&measure, 4).map_err(core("norm"))?;

    let tube = match spec.tube_alpha {
        Some(alpha) => {
            // tube around the first orbit of the measure
            let (_, positions) = &measure.orbits()[0];
            let times = measure.times();
            let path = pressure_transport::action::Path::new(
                times[0],
                *times.last().unwrap(),
                ctx.config.dimension,
                positions.clone(),
            )
            .map_err(core("norm"))?;
            let tube = tube_measure_build(path, alpha).map_err(core("norm"))?;
            let mut mass_defect: f64 = 0.0;
            for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let span = times.last().unwrap() - times[0];
                let tt = times[0] + t * span;
                mass_defect = mass_defect.max((tube.slice_mass(tt).map_err(core("norm"))? - 1.0).abs());
            }
            Some(TubeReport {
                alpha,
                mass_defect,
                total_energy: tube.total_energy(512).map_err(core("norm"))?,
            })
        }
        None => None,
    };

    // Ψ_ε of the forward field seeded by zero data, against the orbit
    // measure's endpoint slices
    let grid = ctx.config.build_grid()?;
    let pressure = ctx.config.build_pressure()?;
    let solver = HopfLaxSolver::new(&grid, &pressure, &MinimizeOptions::kernel()).map_err(core("hj"))?;
    let field = solver
        .propagate_forward(&GridFunction::constant(&grid, 0.0, 0.0))
        .map_err(core("hj"))?;
    let mu0 = measure.slice_at_index(0).map_err(core("norm"))?;
    let mu1 = measure.slice_at_index(measure.times().len() - 1).map_err(core("norm"))?;
    let mut psi = Vec::new();
    for &eps in &spec.psi_eps {
        let value = regularized_dual_eval(&field, &pressure, eps, spec.omega, &mu0, &mu1)
            .map_err(core("norm"))?;
        psi.push(PsiReport { epsilon: eps, omega: spec.omega, value });
    }

    let dir = ctx.dir_for("norm")?;
    io::write_json(
        &dir.join("report.json"),
        &NormReport {
            h2_norm: h2,
            rayleigh_bound: bound,
            rayleigh_family_size: family.members.len(),
            holder_sup_ratio: holder.sup_ratio,
            tube,
            psi,
        },
    )?;
    ctx.say(format!("norm: h2 = {h2:.8}, rayleigh bound = {bound:.8}"));
    Ok(dir)
}

#[derive(Serialize)]
struct SuiteSummary {
    seed: u64,
    passed: bool,
    criteria: Vec<crate::suite::CriterionReport>,
    regression: crate::suite::CriterionReport,
}

pub fn run_suite(ctx: &RunContext) -> Result<PathBuf, RunError> {
    let dir = ctx.dir_for("suite")?;
    let seed = ctx.config.seed;
    let mut criteria = Vec::new();
    for report in crate::suite::run_all(seed) {
        ctx.say(format!(
            "criterion {:02} ({}): {}",
            report.id,
            report.name,
            if report.passed { "pass" } else { "FAIL" }
        ));
        io::write_json(&dir.join(format!("criterion-{:02}.json", report.id)), &report)?;
        criteria.push(report);
    }
    let regression = crate::suite::restriction_consistency(seed);
    ctx.say(format!(
        "regression ({}): {}",
        regression.name,
        if regression.passed { "pass" } else { "FAIL" }
    ));
    let passed = criteria.iter().all(|c| c.passed) && regression.passed;
    io::write_json(&dir.join("summary.json"), &SuiteSummary { seed, passed, criteria, regression })?;
    if !passed {
        return Err(RunError::Numerical {
            module: "suite".into(),
            error: "one or more criteria failed; see summary.json".into(),
        });
    }
    Ok(dir)
}
