//! The canonical experiments behind the command-line tool: profile constants,
//! a single simulation, sphere equilibrium, multiplier comparison and the
//! ε-convergence study. Each returns a report that knows whether it passed.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::approx::{build_approx_field, ApproxSpec};
use crate::config::{Initial, SimConfig};
use crate::diagnostics::{save_csv, volume_drift, Recorder, TimeSeriesRecord};
use crate::dynamics::{run, MultiplierKind, RunFailure, RunOutput, RunParams};
use crate::error::{Error, Result};
use crate::fronttrack::{run_flow, FlowHistory, FlowParams, FlowState};
use crate::geometry::{extract_zero_levelset, largest_component, Curve};
use crate::grid::{Field, Snapshot};
use crate::profile1d::{profile_constants, RhoGrid};

/// Relative mass tolerance of the conserving multipliers.
pub const MASS_TOL: f64 = 1e-11;
/// Stored reference curves per flow.
const FLOW_SNAPSHOTS: f64 = 50.0;

/// Initial field, reference interface flow and (for well-prepared data)
/// the approximate solution the run is compared against.
#[derive(Debug, Clone)]
pub struct Setup {
    pub u0: Field,
    pub flow: Arc<FlowHistory>,
    pub approx: Option<ApproxSpec>,
}

/// Initial interface described by the configuration.
pub fn initial_curve(cfg: &SimConfig) -> Result<(Curve, Option<Field>)> {
    let n = cfg.fronttrack.npoints;
    match &cfg.initial {
        Initial::Circle { cx, cy, r } => Ok((Curve::circle([*cx, *cy], *r, n)?, None)),
        Initial::Ellipse { cx, cy, a, b } => Ok((Curve::ellipse([*cx, *cy], *a, *b, n)?, None)),
        Initial::File { path } => {
            let snap = Snapshot::load(path)?;
            if *snap.field.spec() != cfg.grid {
                return Err(Error::config("initial.path", "snapshot grid differs from grid.* settings"));
            }
            let (curve, _) = largest_component(extract_zero_levelset(&snap.field));
            let curve = curve.ok_or_else(|| Error::config("initial.path", "snapshot has no closed zero level set"))?;
            Ok((curve.resample_linear(n), Some(snap.field)))
        }
    }
}

/// Front-tracked reference flow from `curve0` over `[0, tmax]`.
pub fn reference_flow(cfg: &SimConfig, curve0: Curve) -> Result<Arc<FlowHistory>> {
    let dt = cfg.fronttrack.dt.unwrap_or_else(|| 0.5 * FlowState::stable_dt(&curve0));
    let output_interval = if cfg.tmax > 0.0 { cfg.tmax / FLOW_SNAPSHOTS } else { 1.0 };
    let params = FlowParams { dt, tmax: cfg.tmax, projection: cfg.fronttrack.projection, output_interval };
    Ok(Arc::new(run_flow(curve0, &params)?))
}

pub fn prepare(cfg: &SimConfig) -> Result<Setup> {
    let (curve0, field) = initial_curve(cfg)?;
    let flow = reference_flow(cfg, curve0)?;
    prepare_with_flow(cfg, flow, field)
}

fn prepare_with_flow(cfg: &SimConfig, flow: Arc<FlowHistory>, field: Option<Field>) -> Result<Setup> {
    match field {
        Some(u0) => Ok(Setup { u0, flow, approx: None }),
        None => {
            let spec = ApproxSpec::new(cfg.eps, cfg.approx_order, flow.clone())?;
            let u0 = build_approx_field(&spec, 0.0, &cfg.grid)?.u;
            Ok(Setup { u0, flow, approx: Some(spec) })
        }
    }
}

fn run_params(cfg: &SimConfig, kind: MultiplierKind) -> RunParams {
    RunParams {
        eps: cfg.eps,
        dt: cfg.dt,
        tmax: cfg.tmax,
        kind,
        record_stride: cfg.record_stride,
        snapshot_stride: cfg.snapshot_stride,
    }
}

/// Runs one simulation without touching the filesystem.
pub fn simulate(cfg: &SimConfig, setup: &Setup, kind: MultiplierKind) -> std::result::Result<RunOutput, RunFailure> {
    let recorder = Recorder { reference: Some(setup.flow.clone()), approx: setup.approx.clone() };
    run(&run_params(cfg, kind), setup.u0.clone(), &recorder)
}

/// Largest `|mass - mass(0)| / |Ω|` over the records.
pub fn mass_drift(records: &[TimeSeriesRecord], area: f64) -> f64 {
    let m0 = records.first().map_or(0.0, |r| r.mass);
    records.iter().map(|r| (r.mass - m0).abs() / area).fold(0.0, f64::max)
}

/// Writes the time series, snapshots, reference curves and the final zero
/// level set into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput, flow: &FlowHistory, csv_name: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save_csv(&out.records, &dir.join(csv_name))?;
    let snaps = dir.join("snapshots");
    std::fs::create_dir_all(&snaps)?;
    for (i, s) in out.snapshots.iter().enumerate() {
        s.save(&snaps.join(format!("snap_{i:04}.pfs")))?;
    }
    flow.write_csvs(&dir.join("flow"))?;
    if let Some(last) = out.final_snapshot() {
        if let (Some(c), _) = largest_component(extract_zero_levelset(&last.field)) {
            c.save_csv(&dir.join("final_levelset.csv"))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub kind: MultiplierKind,
    pub records: Vec<TimeSeriesRecord>,
    pub mass_drift: f64,
}

impl SimulationReport {
    /// Mass conservation is the only assertion of a plain simulation.
    pub fn passed(&self) -> bool {
        !self.kind.conserves_mass() || self.mass_drift <= MASS_TOL
    }
}

impl fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.records.last();
        writeln!(f, "multiplier {}: {} records", self.kind, self.records.len())?;
        if let Some(r) = last {
            writeln!(
                f,
                "final t = {:.6}  area_levelset = {:.9}  l2_err_step = {:.6e}  l2_err_approx = {:.6e}",
                r.time, r.area_levelset, r.l2_err_step, r.l2_err_approx
            )?;
        }
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "max |mass drift|/|Ω| = {:.3e} (tol {MASS_TOL:e}) {verdict}", self.mass_drift)
    }
}

/// Simulates the configured run and writes its outputs. A run that aborts
/// still writes everything recorded before the failure.
pub fn cmd_simulate(cfg: &SimConfig) -> Result<SimulationReport> {
    let setup = prepare(cfg)?;
    let out = match simulate(cfg, &setup, cfg.multiplier) {
        Ok(out) => out,
        Err(fail) => {
            write_outputs(&cfg.output_dir, &fail.partial, &setup.flow, "timeseries.csv")?;
            return Err(fail.error);
        }
    };
    write_outputs(&cfg.output_dir, &out, &setup.flow, "timeseries.csv")?;
    Ok(SimulationReport { kind: cfg.multiplier, mass_drift: mass_drift(&out.records, cfg.grid.area()), records: out.records })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCheck {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl ConstantCheck {
    pub fn passed(&self) -> bool {
        (self.value - self.expected).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct ConstantsReport {
    pub checks: Vec<ConstantCheck>,
}

impl ConstantsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(ConstantCheck::passed)
    }
}

impl fmt::Display for ConstantsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let verdict = if c.passed() { "pass" } else { "FAIL" };
            writeln!(f, "{:<12} = {:.12}  expected {:.12} ± {:e}  {verdict}", c.name, c.value, c.expected, c.tolerance)?;
        }
        Ok(())
    }
}

pub fn cmd_profile_constants() -> ConstantsReport {
    let c = profile_constants(&RhoGrid::default());
    let s2 = std::f64::consts::SQRT_2;
    let check = |name, value, expected| ConstantCheck { name, value, expected, tolerance: 1e-8 };
    ConstantsReport {
        checks: vec![
            check("sigma", c.sigma, s2),
            check("sigma_star", c.sigma_star, 0.75 * s2),
            check("int_theta'", c.int_theta_prime, 2.0),
            check("int_theta'^2", c.int_theta_prime_sq, 2.0 * s2 / 3.0),
            check("I_rho", c.rho_f_moment, 2.0),
        ],
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    /// Largest relative radius change of the tracked circle.
    pub tracker_drift: f64,
    /// Largest relative change of the mean radius of the zero level set.
    pub phase_drift: f64,
    pub radii: Vec<(f64, f64)>,
    pub tracker_tol: f64,
    pub phase_tol: f64,
}

impl EquilibriumReport {
    pub fn passed(&self) -> bool {
        self.tracker_drift < self.tracker_tol && self.phase_drift < self.phase_tol
    }
}

impl fmt::Display for EquilibriumReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "time        level-set mean radius")?;
        for (t, r) in &self.radii {
            writeln!(f, "{t:<10.6}  {r:.9}")?;
        }
        writeln!(f, "front tracker radius drift {:.3e} (tol {:e})", self.tracker_drift, self.tracker_tol)?;
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "phase field radius drift   {:.3e} (tol {:e}) {verdict}", self.phase_drift, self.phase_tol)
    }
}

fn radius_of(c: &Curve) -> f64 {
    c.mean_radius(c.centroid())
}

/// Circle run with the configured multiplier; reports how far the tracked
/// circle and the phase-field level set drift in radius.
pub fn cmd_equilibrium(cfg: &SimConfig) -> Result<EquilibriumReport> {
    let Initial::Circle { r, .. } = cfg.initial else {
        return Err(Error::config("initial", "equilibrium needs a circle"));
    };
    let mut cfg = cfg.clone();
    if cfg.snapshot_stride == 0 {
        let steps = crate::dynamics::steps_to_reach(cfg.tmax, cfg.dt);
        cfg.snapshot_stride = (steps / 10).max(1);
    }
    let setup = prepare(&cfg)?;
    let tracker_drift = setup
        .flow
        .snapshots
        .iter()
        .map(|(_, c)| (radius_of(c) - r).abs() / r)
        .fold(0.0, f64::max);
    let out = simulate(&cfg, &setup, cfg.multiplier).map_err(|f| f.error)?;
    write_outputs(&cfg.output_dir, &out, &setup.flow, "timeseries.csv")?;
    let mut radii = Vec::new();
    for s in &out.snapshots {
        let (c, _) = largest_component(extract_zero_levelset(&s.field));
        let c = c.ok_or_else(|| Error::InvalidArgument(format!("no zero level set at t = {}", s.time)))?;
        radii.push((s.time, radius_of(&c)));
    }
    let r0 = radii[0].1;
    let phase_drift = radii.iter().map(|(_, rr)| (rr - r0).abs() / r0).fold(0.0, f64::max);
    Ok(EquilibriumReport { tracker_drift, phase_drift, radii, tracker_tol: 1e-6, phase_tol: 0.02 })
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub drift_bb: f64,
    pub drift_rs: f64,
    pub phase_drift_bb: f64,
    pub phase_drift_rs: f64,
    /// `(time, multiplier)` for each run.
    pub lambda_bb: Vec<(f64, f64)>,
    pub lambda_rs: Vec<(f64, f64)>,
}

impl CompareReport {
    pub const DRIFT_TOL: f64 = 0.05;

    pub fn ratio(&self) -> f64 {
        self.drift_bb / self.drift_rs
    }

    pub fn passed(&self) -> bool {
        self.drift_bb < Self::DRIFT_TOL && self.drift_rs < Self::DRIFT_TOL && self.drift_bb <= 2.0 * self.drift_rs
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "time        lambda_bb           lambda_rs")?;
        let stride = (self.lambda_bb.len() / 10).max(1);
        for (a, b) in self.lambda_bb.iter().zip(&self.lambda_rs).step_by(stride) {
            writeln!(f, "{:<10.6}  {:<+18.10e}  {:<+18.10e}", a.0, a.1, b.1)?;
        }
        writeln!(f, "level-set area drift  bb {:.4e}  rs {:.4e}", self.drift_bb, self.drift_rs)?;
        writeln!(f, "phase area drift      bb {:.4e}  rs {:.4e}", self.phase_drift_bb, self.phase_drift_rs)?;
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "drift ratio bb/rs = {:.4} {verdict}", self.ratio())
    }
}

/// Runs both conserving multipliers from identical data.
pub fn cmd_compare_multipliers(cfg: &SimConfig) -> Result<CompareReport> {
    let setup = prepare(cfg)?;
    let (bb, rs) = rayon::join(
        || simulate(cfg, &setup, MultiplierKind::Bb),
        || simulate(cfg, &setup, MultiplierKind::Rs),
    );
    let bb = bb.map_err(|f| f.error)?;
    let rs = rs.map_err(|f| f.error)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    save_csv(&bb.records, &cfg.output_dir.join("timeseries_bb.csv"))?;
    save_csv(&rs.records, &cfg.output_dir.join("timeseries_rs.csv"))?;
    let db = volume_drift(&bb.records)?;
    let dr = volume_drift(&rs.records)?;
    let trace = |o: &RunOutput| o.records.iter().map(|r| (r.time, r.lambda)).collect();
    Ok(CompareReport {
        drift_bb: db.max_rel_levelset,
        drift_rs: dr.max_rel_levelset,
        phase_drift_bb: db.max_rel_phase,
        phase_drift_rs: dr.max_rel_phase,
        lambda_bb: trace(&bb),
        lambda_rs: trace(&rs),
    })
}

#[derive(Debug, Clone)]
pub struct ConvergeReport {
    /// `(ε, error at tmax)`, in the order given.
    pub rows: Vec<(f64, f64)>,
    pub order: f64,
    pub min_order: f64,
}

impl ConvergeReport {
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].1 < w[0].1)
    }

    pub fn passed(&self) -> bool {
        let first_ok = self.rows.first().is_some_and(|r| r.1.is_finite() && r.1 < 1.0);
        first_ok && self.decreasing() && self.order >= self.min_order
    }
}

impl fmt::Display for ConvergeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "eps         l2_err_step")?;
        for (e, err) in &self.rows {
            writeln!(f, "{e:<10.6}  {err:.9e}")?;
        }
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        write!(
            f,
            "strictly decreasing: {}  fitted order {:.4} (need >= {}) {verdict}",
            self.decreasing(),
            self.order,
            self.min_order
        )
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_order(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs the local multiplier from well-prepared data at each `ε` and fits
/// the order of the L² error against the shared sharp-interface flow.
pub fn cmd_converge(cfg: &SimConfig, eps_list: &[f64]) -> Result<ConvergeReport> {
    if eps_list.len() < 3 || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("converge needs at least 3 strictly decreasing eps values".into()));
    }
    if matches!(cfg.initial, Initial::File { .. }) {
        return Err(Error::config("initial", "converge needs an analytic initial curve"));
    }
    let configs = eps_list.iter().map(|&e| cfg.with_eps(e)).collect::<Result<Vec<_>>>()?;
    let (curve0, _) = initial_curve(cfg)?;
    let flow = reference_flow(cfg, curve0)?;
    let errors = configs
        .par_iter()
        .map(|c| {
            let setup = prepare_with_flow(c, flow.clone(), None)?;
            let out = simulate(c, &setup, MultiplierKind::Bb).map_err(|f| f.error)?;
            Ok(out.records.last().map_or(f64::NAN, |r| r.l2_err_step))
        })
        .collect::<Result<Vec<f64>>>()?;
    let rows: Vec<(f64, f64)> = eps_list.iter().copied().zip(errors.iter().copied()).collect();
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut text = String::from("eps,l2_err_step\n");
    for (e, err) in &rows {
        text.push_str(&format!("{e:.17e},{err:.17e}\n"));
    }
    std::fs::write(cfg.output_dir.join("converge.csv"), text)?;
    Ok(ConvergeReport { order: fit_order(eps_list, &errors), rows, min_order: 0.25 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_order_of_power_law() {
        let xs = [0.08, 0.04, 0.02];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.7)).collect();
        assert!((fit_order(&xs, &ys) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn constants_pass() {
        let r = cmd_profile_constants();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn converge_rejects_short_lists() {
        let cfg = SimConfig::parse_str(
            "grid.nx = 32\ngrid.ny = 32\ngrid.lx = 2\ngrid.ly = 2\neps = 0.04\ntmax = 0\ninitial = circle\n\
             initial.cx = 1\ninitial.cy = 1\ninitial.r = 0.3",
        )
        .unwrap();
        assert!(cmd_converge(&cfg, &[0.04, 0.02]).is_err());
        assert!(cmd_converge(&cfg, &[0.02, 0.04, 0.01]).is_err());
    }
}
