//! Experiment drivers: manufactured-solution convergence tables, energy and
//! blow-up histories, micromagnetic relaxations, and the fixed-point
//! contraction check of the implicit scheme.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{BoundaryKind, Experiment, ExperimentConfig, H1Norm, IcKind, Refinement, SourceKind};
use super::output::{fmt_num, fmt_opt, write_csv, write_vtk_snapshot};
use crate::fvem::{error_norms, error_norms_exact, grad_linf, ErrorNorms, VectorField3};
use crate::mesh::{build_rect_mesh, TriMesh};
use crate::physics::{
    energy, manufactured_gradient, manufactured_solution, manufactured_source, BoundaryCondition, DiscreteEnergy,
};
use crate::stepper::{picard_implicit_step, project, Discretization, GspmStepper, PicardState};
use crate::vec3;
use crate::{Error, Result};

/// One line of a convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub linf: f64,
    pub linf_order: Option<f64>,
    pub l2: f64,
    pub l2_order: Option<f64>,
    pub h1: f64,
    pub h1_order: Option<f64>,
}

/// State diagnostics at one output time.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    /// Dimensionless time.
    pub t: f64,
    /// Physical time, for SI runs.
    pub t_seconds: Option<f64>,
    pub energy: DiscreteEnergy<f64>,
    pub grad_linf: f64,
    /// `m3` at the node nearest the probe center.
    pub m3_center: f64,
    /// Smallest `m3` within `probe_radius` of the probe center.
    pub min_m3_core: f64,
}

/// One fixed-point increment.
#[derive(Clone, Debug, PartialEq)]
pub struct PicardRow {
    pub tau: f64,
    pub iteration: usize,
    pub increment_h1: f64,
    /// `‖w^l‖ / ‖w^{l-1}‖`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunArtifacts {
    pub error_table: Vec<ErrorRow>,
    pub timeseries: Vec<SeriesRow>,
    pub picard: Vec<PicardRow>,
    pub snapshots: Vec<PathBuf>,
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
    /// Largest `(F_{k+1} - F_k) / |F_k|` over all steps of an evolution run.
    pub max_energy_increase: Option<f64>,
    pub final_state: Option<(TriMesh<f64>, VectorField3<f64>)>,
}

/// Runs `cfg`; writes CSV and VTK files under `out` when given.
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunArtifacts> {
    cfg.validate()?;
    let mut art = match cfg.experiment {
        Experiment::Convergence => run_convergence(cfg, out)?,
        Experiment::Energy | Experiment::Blowup | Experiment::Micromag => run_evolution(cfg, out)?,
        Experiment::PicardCheck => run_picard_check(cfg, out)?,
    };
    if let Some(dir) = out {
        let path = dir.join(format!("{}.cfg", cfg.name));
        std::fs::create_dir_all(dir)?;
        std::fs::write(&path, cfg.to_text())?;
        art.files.push(path);
    }
    Ok(art)
}

/// Observed order `log(e_c/e_f) / log(h_c/h_f)` between successive rows.
pub fn observed_order(coarse: (f64, f64), fine: (f64, f64)) -> Option<f64> {
    let (hc, ec) = coarse;
    let (hf, ef) = fine;
    if ec > 0.0 && ef > 0.0 && hc != hf {
        Some((ec / ef).ln() / (hc / hf).ln())
    } else {
        None
    }
}

/// Fills in the order columns of a table sorted from coarse to fine.
pub fn fill_orders(rows: &mut [ErrorRow]) {
    for k in 1..rows.len() {
        let (c, f) = (rows[k - 1].clone(), &mut rows[k]);
        f.linf_order = observed_order((c.h, c.linf), (f.h, f.linf));
        f.l2_order = observed_order((c.h, c.l2), (f.h, f.l2));
        f.h1_order = observed_order((c.h, c.h1), (f.h, f.h1));
    }
}

/// Manufactured-solution errors at `t_end` on an `n × n` mesh of the
/// configured rectangle, with the step size given by the refinement mode.
pub fn convergence_point(cfg: &ExperimentConfig, n: usize) -> Result<(ErrorRow, f64)> {
    let start = Instant::now();
    let params = cfg.params()?;
    let alpha = params.alpha;
    let mesh = build_rect_mesh(n, n, cfg.rect)?;
    let h = mesh.h_max / std::f64::consts::SQRT_2;
    let dt = match cfg.refinement {
        Refinement::Linked => 1.0 / n as f64,
        Refinement::Quadratic => 1.0 / (n * n) as f64,
    };
    let steps = (cfg.t_end / dt).round() as usize;
    if ((steps as f64) * dt - cfg.t_end).abs() > 1e-9 * cfg.t_end.max(1.0) {
        return Err(Error::InvalidParameter(format!("t_end = {} is not a multiple of dt = {dt}", cfg.t_end)));
    }
    let disc = Arc::new(Discretization::new(mesh)?);
    let src = move |x: [f64; 2], t: f64| manufactured_source(x[0], x[1], t, alpha);
    let mut m = VectorField3::from_fn(&disc.mesh, |x| manufactured_solution(x[0], x[1], 0.0));
    if steps > 0 {
        let mut stepper = GspmStepper::new(disc.clone(), params, BoundaryCondition::ManufacturedMoving, dt, cfg.gspm)?;
        for k in 0..steps {
            m = stepper.step(&m, k as f64 * dt, Some(&src))?;
        }
    }
    let t = steps as f64 * dt;
    let exact = |x: [f64; 2]| manufactured_solution(x[0], x[1], t);
    let e: ErrorNorms<f64> = match cfg.h1_norm {
        H1Norm::ExactGradient => {
            error_norms_exact(&m, exact, |x| manufactured_gradient(x[0], x[1], t), &disc.mesh, &disc.dual)?
        }
        H1Norm::Nodal => error_norms(&m, exact, &disc.mesh, &disc.dual)?,
    };
    let row = ErrorRow { n, h, dt, linf: e.linf, linf_order: None, l2: e.l2, l2_order: None, h1: e.h1, h1_order: None };
    Ok((row, start.elapsed().as_secs_f64()))
}

/// Error table over `cfg.resolutions`; resolutions run in parallel.
pub fn run_convergence(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunArtifacts> {
    let mut ns = cfg.resolutions.clone();
    ns.sort_unstable();
    ns.dedup();
    let results: Vec<Result<(ErrorRow, f64)>> = std::thread::scope(|s| {
        let handles: Vec<_> = ns.iter().map(|&n| s.spawn(move || convergence_point(cfg, n))).collect();
        handles.into_iter().map(|h| h.join().expect("convergence worker panicked")).collect()
    });
    let mut rows = Vec::with_capacity(ns.len());
    for r in results {
        let (row, secs) = r?;
        info!(
            "n = {:4}  dt = {:.3e}  L∞ = {:.3e}  L2 = {:.3e}  H1 = {:.3e}  ({secs:.1} s)",
            row.n, row.dt, row.linf, row.l2, row.h1
        );
        rows.push(row);
    }
    fill_orders(&mut rows);
    let mut art = RunArtifacts { error_table: rows, ..Default::default() };
    if let Some(dir) = out {
        let path = dir.join(format!("{}.csv", cfg.name));
        write_error_table(&path, &art.error_table)?;
        art.files.push(path);
    }
    Ok(art)
}

pub fn write_error_table(path: &Path, rows: &[ErrorRow]) -> Result<()> {
    let header = ["n", "h", "dt", "linf", "linf_order", "l2", "l2_order", "h1", "h1_order"];
    write_csv(
        path,
        &header,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt_num(r.h),
                fmt_num(r.dt),
                fmt_num(r.linf),
                fmt_opt(r.linf_order),
                fmt_num(r.l2),
                fmt_opt(r.l2_order),
                fmt_num(r.h1),
                fmt_opt(r.h1_order),
            ]
        }),
    )
}

pub fn write_series(path: &Path, rows: &[SeriesRow]) -> Result<()> {
    let header = [
        "step",
        "t",
        "t_seconds",
        "energy",
        "exchange",
        "anisotropy",
        "zeeman",
        "stray",
        "grad_linf",
        "m3_center",
        "min_m3_core",
    ];
    write_csv(
        path,
        &header,
        rows.iter().map(|r| {
            vec![
                r.step.to_string(),
                fmt_num(r.t),
                fmt_opt(r.t_seconds),
                fmt_num(r.energy.total),
                fmt_num(r.energy.exchange_part),
                fmt_num(r.energy.anisotropy_part),
                fmt_num(r.energy.zeeman_part),
                fmt_num(r.energy.stray_part),
                fmt_num(r.grad_linf),
                fmt_num(r.m3_center),
                fmt_num(r.min_m3_core),
            ]
        }),
    )
}

pub fn write_picard_trace(path: &Path, rows: &[PicardRow]) -> Result<()> {
    write_csv(
        path,
        &["tau", "iteration", "increment_h1", "ratio"],
        rows.iter().map(|r| vec![fmt_num(r.tau), r.iteration.to_string(), fmt_num(r.increment_h1), fmt_opt(r.ratio)]),
    )
}

/// Initial field with optional seeded noise on interior nodes.
pub fn initial_field(cfg: &ExperimentConfig, mesh: &TriMesh<f64>) -> Result<VectorField3<f64>> {
    let mut m = cfg.initial_condition().sample(mesh);
    if cfg.ic_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for (i, v) in m.values.iter_mut().enumerate() {
            let kick = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if !mesh.is_boundary(i) {
                *v = vec3::add(*v, vec3::scale(kick, cfg.ic_noise));
            }
        }
        m = project(&m)?;
    }
    Ok(m)
}

fn probe_center(cfg: &ExperimentConfig) -> [f64; 2] {
    match cfg.ic {
        IcKind::Blowup => cfg.ic_center,
        _ => {
            let r = cfg.rect;
            [(r.x0 + r.x1) / 2.0, (r.y0 + r.y1) / 2.0]
        }
    }
}

fn source_fn(cfg: &ExperimentConfig, alpha: f64) -> Option<impl Fn([f64; 2], f64) -> vec3::Vec3<f64>> {
    match cfg.source {
        SourceKind::None => None,
        SourceKind::Manufactured => Some(move |x: [f64; 2], t: f64| manufactured_source(x[0], x[1], t, alpha)),
    }
}

/// GSPM evolution with energy and core diagnostics (energy, blow-up and
/// micromagnetics runs).
pub fn run_evolution(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunArtifacts> {
    let params = cfg.params()?;
    let dt = cfg.to_model_time(cfg.dt)?;
    let t_end = cfg.to_model_time(cfg.t_end)?;
    let steps = (t_end / dt).round() as usize;
    let mesh = build_rect_mesh(cfg.nx, cfg.ny, cfg.rect)?;
    let disc = Arc::new(Discretization::new(mesh)?);
    let mesh = &disc.mesh;

    let mut m = initial_field(cfg, mesh)?;
    let boundary_now: Vec<_> = mesh.boundary_nodes.iter().map(|&i| m.values[i]).collect();
    let bc = cfg.boundary_condition(&boundary_now);
    if cfg.bc != BoundaryKind::FixedFromIc {
        for (&i, v) in mesh.boundary_nodes.iter().zip(bc.values(mesh, 0.0)) {
            m.values[i] = v;
        }
    }
    let src = source_fn(cfg, params.alpha);
    let src_ref = src.as_ref().map(|f| f as &dyn Fn([f64; 2], f64) -> vec3::Vec3<f64>);
    let mut stepper = GspmStepper::new(disc.clone(), params, bc, dt, cfg.gspm)?;

    let center = probe_center(cfg);
    let center_node = mesh.nearest_node(center);
    let r2 = cfg.probe_radius * cfg.probe_radius;
    let core: Vec<usize> = (0..mesh.num_nodes())
        .filter(|&i| {
            let x = mesh.nodes[i];
            (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) < r2
        })
        .collect();
    let snapshot_steps: Vec<usize> = cfg
        .snapshot_times
        .iter()
        .map(|&s| cfg.to_model_time(s).map(|s| (s / dt).round() as usize))
        .collect::<Result<_>>()?;

    let record = |step: usize, m: &VectorField3<f64>, e: DiscreteEnergy<f64>| -> Result<SeriesRow> {
        let t = step as f64 * dt;
        Ok(SeriesRow {
            step,
            t,
            t_seconds: params.time_unit.map(|u| t * u),
            energy: e,
            grad_linf: grad_linf(m, mesh)?,
            m3_center: m.values[center_node][2],
            min_m3_core: core.iter().map(|&i| m.values[i][2]).fold(f64::INFINITY, f64::min),
        })
    };

    let mut art = RunArtifacts::default();
    let write_snapshot = |step: usize, m: &VectorField3<f64>, art: &mut RunArtifacts| -> Result<()> {
        if let Some(dir) = out {
            for (k, _) in snapshot_steps.iter().enumerate().filter(|(_, &s)| s == step) {
                let path = dir.join(format!("{}_{k:03}.vtk", cfg.name));
                write_vtk_snapshot(mesh, m, &path)?;
                art.snapshots.push(path.clone());
                art.files.push(path);
            }
        }
        Ok(())
    };

    let mut e_prev = energy(&m, &params, mesh, &disc.dual)?;
    art.timeseries.push(record(0, &m, e_prev)?);
    write_snapshot(0, &m, &mut art)?;
    let mut max_increase = f64::NEG_INFINITY;
    let started = Instant::now();
    for k in 0..steps {
        m = stepper.step(&m, k as f64 * dt, src_ref)?;
        let e = energy(&m, &params, mesh, &disc.dual)?;
        let scale = e_prev.total.abs().max(f64::MIN_POSITIVE);
        max_increase = max_increase.max((e.total - e_prev.total) / scale);
        e_prev = e;
        let step = k + 1;
        if step % cfg.series_every == 0 || step == steps {
            art.timeseries.push(record(step, &m, e)?);
        }
        write_snapshot(step, &m, &mut art)?;
        if steps >= 10 && step % (steps / 10) == 0 {
            info!(
                "step {step}/{steps}  t = {:.4e}  F = {:.6e}  ({:.1} s)",
                step as f64 * dt,
                e.total,
                started.elapsed().as_secs_f64()
            );
        }
    }
    if steps > 0 {
        art.max_energy_increase = Some(max_increase);
    }
    if let Some(dir) = out {
        let path = dir.join(format!("{}_series.csv", cfg.name));
        write_series(&path, &art.timeseries)?;
        art.files.push(path);
    }
    art.final_state = Some((disc.mesh.clone(), m));
    Ok(art)
}

/// One implicit step per configured `τ`, recording every fixed-point
/// increment.
pub fn run_picard_check(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunArtifacts> {
    let params = cfg.params()?;
    let mesh = build_rect_mesh(cfg.nx, cfg.ny, cfg.rect)?;
    let disc = Discretization::new(mesh)?;
    let mut m0 = initial_field(cfg, &disc.mesh)?;
    let boundary_now: Vec<_> = disc.mesh.boundary_nodes.iter().map(|&i| m0.values[i]).collect();
    let bc = cfg.boundary_condition(&boundary_now);
    if cfg.bc != BoundaryKind::FixedFromIc {
        for (&i, v) in disc.mesh.boundary_nodes.iter().zip(bc.values(&disc.mesh, 0.0)) {
            m0.values[i] = v;
        }
    }
    let src = source_fn(cfg, params.alpha);
    let src_ref = src.as_ref().map(|f| f as &dyn Fn([f64; 2], f64) -> vec3::Vec3<f64>);
    let mut art = RunArtifacts::default();
    for &tau in &cfg.picard_taus {
        let tau = cfg.to_model_time(tau)?;
        let mut state = PicardState::new(cfg.picard_tol, cfg.picard_max_iters);
        let (_, trace) =
            picard_implicit_step(&m0, 0.0, tau, &params, &disc, &bc, src_ref, &mut state, cfg.gspm.solver)?;
        info!(
            "tau = {tau:.3e}: {} iterations, last increment {:.3e}",
            trace.len(),
            trace.last().copied().unwrap_or(0.0)
        );
        for (l, &w) in trace.iter().enumerate() {
            let ratio = if l > 0 && trace[l - 1] > 0.0 { Some(w / trace[l - 1]) } else { None };
            art.picard.push(PicardRow { tau, iteration: l + 1, increment_h1: w, ratio });
        }
    }
    if let Some(dir) = out {
        let path = dir.join(format!("{}_trace.csv", cfg.name));
        write_picard_trace(&path, &art.picard)?;
        art.files.push(path);
    }
    Ok(art)
}

/// Contraction summary of one `τ`: the ratios of successive increments
/// before the iteration reaches round-off.
#[derive(Clone, Debug, PartialEq)]
pub struct Contraction {
    pub tau: f64,
    pub iterations: usize,
    pub ratios: Vec<f64>,
}

impl Contraction {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Geometric mean of the ratios.
    pub fn mean_ratio(&self) -> f64 {
        let n = self.ratios.len().max(1) as f64;
        (self.ratios.iter().map(|r| r.ln()).sum::<f64>() / n).exp()
    }
}

/// Groups a trace by `τ`; increments below `floor` are treated as
/// round-off and left out of the ratios.
pub fn contraction_summary(rows: &[PicardRow], floor: f64) -> Vec<Contraction> {
    let mut out: Vec<Contraction> = Vec::new();
    for r in rows {
        if out.last().map(|c| c.tau) != Some(r.tau) {
            out.push(Contraction { tau: r.tau, iterations: 0, ratios: Vec::new() });
        }
        let c = out.last_mut().expect("just pushed");
        c.iterations += 1;
        if let Some(q) = r.ratio {
            if r.increment_h1 > floor {
                c.ratios.push(q);
            }
        }
    }
    out
}
