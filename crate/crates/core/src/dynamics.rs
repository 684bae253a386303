//! Time stepping for the Allen–Cahn family
//!
//! ```text
//! ∂t u = Δu + ε⁻² (f(u) - λ̂ w(u))
//! ```
//!
//! where the weight `w` and the multiplier `λ̂` select the variant:
//! `w = √(4W)` with `λ̂ = Σf/Σ√(4W)` conserves mass through a multiplier that
//! acts only inside the layer ([`MultiplierKind::Bb`]), `w ≡ 1` with
//! `λ̂ = mean f` is the purely nonlocal constraint ([`MultiplierKind::Rs`]),
//! and `λ̂ = 0` is the plain equation ([`MultiplierKind::None`]).
//!
//! The multiplier is formed from the same discrete sums the scheme conserves,
//! so `Σ(f - λ̂w) = 0` holds to roundoff and the discrete mass is exact.

use std::fmt;
use std::str::FromStr;

use crate::diagnostics::{Recorder, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::grid::{compensated_sum, integrate, Field, NeumannSolver, Snapshot};
use crate::potential;

/// Largest tolerated `max|u| - 1` before a run is aborted.
pub const TOL_OVERSHOOT: f64 = 1e-3;
/// Lower bound on `∫√(4W(u)) / |Ω|` for the local multiplier to be defined.
pub const ETA_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MultiplierKind {
    /// Multiplier weighted by `√(4W(u))`.
    Bb,
    /// Spatially uniform multiplier.
    Rs,
    /// No constraint.
    None,
}

impl MultiplierKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MultiplierKind::Bb => "bb",
            MultiplierKind::Rs => "rs",
            MultiplierKind::None => "none",
        }
    }

    pub fn conserves_mass(&self) -> bool {
        !matches!(self, MultiplierKind::None)
    }
}

impl fmt::Display for MultiplierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MultiplierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bb" => Ok(MultiplierKind::Bb),
            "rs" => Ok(MultiplierKind::Rs),
            "none" => Ok(MultiplierKind::None),
            other => Err(Error::InvalidArgument(format!("unknown multiplier `{other}` (bb|rs|none)"))),
        }
    }
}

/// Stability budget `0.2·ε²` of the explicit reaction.
pub fn dt_max(eps: f64) -> f64 {
    0.2 * eps * eps
}

pub fn default_dt(eps: f64) -> f64 {
    0.1 * eps * eps
}

/// Multiplier value for the current field: `Σf/Σ√(4W)` (the quantity `ελ`)
/// for [`MultiplierKind::Bb`], `(1/|Ω|)∫f` for [`MultiplierKind::Rs`], zero
/// otherwise.
pub fn compute_multiplier(u: &Field, kind: MultiplierKind) -> Result<f64> {
    match kind {
        MultiplierKind::None => Ok(0.0),
        MultiplierKind::Rs => Ok(compensated_sum(u.values().iter().map(|&v| potential::f(v))) / u.values().len() as f64),
        MultiplierKind::Bb => {
            let num = compensated_sum(u.values().iter().map(|&v| potential::f(v)));
            let den = compensated_sum(u.values().iter().map(|&v| potential::sqrt_4w(v)));
            let mean_den = den / u.values().len() as f64;
            if !(mean_den >= ETA_FLOOR) {
                return Err(Error::DegeneratePhase {
                    denominator: mean_den * u.spec().area(),
                    floor: ETA_FLOOR * u.spec().area(),
                });
            }
            Ok(num / den)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: Field,
    pub time: f64,
    pub step: u64,
    pub eps: f64,
    pub dt: f64,
    pub kind: MultiplierKind,
    /// Discrete mass of the initial field.
    pub mass0: f64,
    /// Most recent multiplier value (see [`compute_multiplier`]).
    pub lambda_last: f64,
}

impl SimState {
    pub fn new(u: Field, eps: f64, dt: f64, kind: MultiplierKind) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if dt > dt_max(eps) {
            return Err(Error::TimeStepTooLarge { dt, dt_max: dt_max(eps) });
        }
        let lambda_last = match kind {
            MultiplierKind::Bb => compute_multiplier(&u, kind).unwrap_or(0.0),
            _ => compute_multiplier(&u, kind)?,
        };
        let mass0 = integrate(&u);
        Ok(Self { u, time: 0.0, step: 0, eps, dt, kind, mass0, lambda_last })
    }

    pub fn mass(&self) -> f64 {
        integrate(&self.u)
    }
}

/// IMEX Euler stepper: explicit reaction and multiplier, implicit diffusion.
#[derive(Debug)]
pub struct Stepper {
    solver: NeumannSolver,
}

impl Stepper {
    pub fn new(state: &SimState) -> Self {
        Self { solver: NeumannSolver::new(*state.u.spec()) }
    }

    pub fn step(&self, state: &SimState) -> Result<SimState> {
        self.step_with_dt(state, state.dt)
    }

    /// One step of length `dt <= state.dt`.
    pub fn step_with_dt(&self, state: &SimState, dt: f64) -> Result<SimState> {
        if !(dt > 0.0 && dt <= state.dt) {
            return Err(Error::InvalidArgument(format!("step length {dt} outside (0, {}]", state.dt)));
        }
        let lambda = compute_multiplier(&state.u, state.kind)?;
        let k = dt / (state.eps * state.eps);
        let g = state.u.map(|v| {
            let w = match state.kind {
                MultiplierKind::Bb => potential::sqrt_4w(v),
                MultiplierKind::Rs => 1.0,
                MultiplierKind::None => 0.0,
            };
            v + k * (potential::f(v) - lambda * w)
        });
        let u = self.solver.solve(&g, dt)?;
        let max_abs = u.max_abs();
        let time = state.time + dt;
        let bound = bulk_bound(state.kind, lambda) + TOL_OVERSHOOT;
        if max_abs > bound {
            return Err(Error::OvershootAbort { step: state.step + 1, time, max_abs, bound });
        }
        Ok(SimState {
            u,
            time,
            step: state.step + 1,
            eps: state.eps,
            dt: state.dt,
            kind: state.kind,
            mass0: state.mass0,
            lambda_last: lambda,
        })
    }
}

/// Largest `|u|` of the stable bulk states of the reaction. The local
/// multiplier vanishes at `±1`, so the bulk stays at `±1`; a uniform
/// multiplier `λ` moves one phase to the outer root of `f(u) = λ`, about
/// `1 + |λ|/2`, and the overshoot guard is measured from there.
pub fn bulk_bound(kind: MultiplierKind, lambda: f64) -> f64 {
    match kind {
        MultiplierKind::Rs if lambda != 0.0 => {
            let mut u = -lambda.signum();
            for _ in 0..20 {
                u -= (potential::f(u) - lambda) / potential::f_prime(u);
            }
            u.abs().max(1.0)
        }
        _ => 1.0,
    }
}

/// One step with a freshly planned solver.
pub fn step(state: &SimState) -> Result<SimState> {
    Stepper::new(state).step(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub eps: f64,
    pub dt: f64,
    pub tmax: f64,
    pub kind: MultiplierKind,
    /// Emit a record every this many steps (and at the final step).
    pub record_stride: u64,
    /// Keep a snapshot every this many steps (and at the final step); 0 keeps
    /// only the initial and final fields.
    pub snapshot_stride: u64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub records: Vec<TimeSeriesRecord>,
    pub snapshots: Vec<Snapshot>,
}

impl RunOutput {
    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// A run that stopped early, with everything recorded up to the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub partial: RunOutput,
    pub error: Error,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run aborted after {} records: {}", self.partial.records.len(), self.error)
    }
}

impl std::error::Error for RunFailure {}

/// Advances `u0` to `tmax`, recording diagnostics and snapshots on the
/// configured strides. The last step is shortened to land on `tmax`.
pub fn run(params: &RunParams, u0: Field, recorder: &Recorder) -> std::result::Result<RunOutput, RunFailure> {
    let mut out = RunOutput::default();
    macro_rules! bail {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => return Err(RunFailure { partial: out, error }),
            }
        };
    }
    if !(params.tmax >= 0.0 && params.tmax.is_finite()) {
        bail!(Err(Error::InvalidArgument(format!("tmax must be non-negative, got {}", params.tmax))));
    }
    let mut state = bail!(SimState::new(u0, params.eps, params.dt, params.kind));
    let stepper = Stepper::new(&state);
    let n_steps = steps_to_reach(params.tmax, params.dt);
    let record_stride = params.record_stride.max(1);

    out.records.push(bail!(recorder.record(&state)));
    out.snapshots.push(Snapshot { field: state.u.clone(), time: state.time, eps: state.eps });

    for n in 1..=n_steps {
        let dt = if n == n_steps { params.tmax - params.dt * (n_steps - 1) as f64 } else { params.dt };
        state = bail!(stepper.step_with_dt(&state, dt.min(params.dt)));
        if n == n_steps {
            state.time = params.tmax;
        }
        let last = n == n_steps;
        if n % record_stride == 0 || last {
            out.records.push(bail!(recorder.record(&state)));
        }
        if (params.snapshot_stride > 0 && n % params.snapshot_stride == 0) || last {
            out.snapshots.push(Snapshot { field: state.u.clone(), time: state.time, eps: state.eps });
        }
    }
    Ok(out)
}

/// Number of steps of length at most `dt` needed to cover `[0, tmax]`.
pub fn steps_to_reach(tmax: f64, dt: f64) -> u64 {
    if tmax <= 0.0 {
        return 0;
    }
    (tmax / dt - 1e-9).ceil().max(1.0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::gl_energy;
    use crate::grid::GridSpec;
    use crate::profile1d::theta0;

    fn spec() -> GridSpec {
        GridSpec::square(64, 1.0).unwrap()
    }

    fn bumpy(spec: GridSpec, seed: u64) -> Field {
        let mut s = seed;
        let vals = (0..spec.len())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                0.9 * (((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0)
            })
            .collect();
        Field::new(spec, vals).unwrap()
    }

    #[test]
    fn multiplier_values() {
        let s = spec();
        assert_eq!(compute_multiplier(&Field::constant(s, 0.0), MultiplierKind::Bb).unwrap(), 0.0);
        let half = compute_multiplier(&Field::constant(s, 0.5), MultiplierKind::Bb).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
        assert_eq!(compute_multiplier(&Field::constant(s, 0.5), MultiplierKind::None).unwrap(), 0.0);
        let rs = compute_multiplier(&Field::constant(s, 0.5), MultiplierKind::Rs).unwrap();
        assert!((rs - 0.375).abs() < 1e-15);
        assert!(matches!(
            compute_multiplier(&Field::constant(s, 1.0), MultiplierKind::Bb),
            Err(Error::DegeneratePhase { .. })
        ));
    }

    #[test]
    fn multiplier_vanishes_for_centered_straight_interface() {
        let s = spec();
        let eps = 0.05;
        let u = Field::from_fn(s, |x, _| theta0((x - 0.5) / eps));
        assert!(compute_multiplier(&u, MultiplierKind::Bb).unwrap().abs() < 1e-8);
    }

    #[test]
    fn multiplier_is_odd_under_phase_and_mirror_flip() {
        let s = GridSpec::new(40, 24, 1.0, 0.6).unwrap();
        let u = Field::from_fn(s, |x, y| 0.8 * ((7.0 * x).sin() * (3.0 * y + 0.2).cos()) + 0.1);
        let flipped = Field::new(
            s,
            (0..s.len())
                .map(|k| {
                    let (i, j) = (k % s.nx, k / s.nx);
                    -u.get(s.nx - 1 - i, j)
                })
                .collect(),
        )
        .unwrap();
        let a = compute_multiplier(&u, MultiplierKind::Bb).unwrap();
        let b = compute_multiplier(&flipped, MultiplierKind::Bb).unwrap();
        assert!((a + b).abs() < 1e-13, "{a} {b}");
    }

    #[test]
    fn rejects_large_dt() {
        let err = SimState::new(Field::constant(spec(), 0.0), 0.1, 0.0021, MultiplierKind::Rs);
        assert!(matches!(err, Err(Error::TimeStepTooLarge { .. })));
    }

    #[test]
    fn pure_phase_is_fixed_point() {
        let eps = 0.05;
        for kind in [MultiplierKind::None, MultiplierKind::Rs] {
            let st = SimState::new(Field::constant(spec(), 1.0), eps, default_dt(eps), kind).unwrap();
            let next = step(&st).unwrap();
            assert!(next.u.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        }
        // The local multiplier is undefined when u ≡ 1.
        let st = SimState::new(Field::constant(spec(), 1.0), eps, default_dt(eps), MultiplierKind::Bb).unwrap();
        assert!(matches!(step(&st), Err(Error::DegeneratePhase { .. })));
    }

    #[test]
    fn mass_conserved_per_step() {
        let eps = 0.05;
        for kind in [MultiplierKind::Bb, MultiplierKind::Rs] {
            for seed in 1..4 {
                let st = SimState::new(bumpy(spec(), seed), eps, default_dt(eps), kind).unwrap();
                let next = step(&st).unwrap();
                assert!((next.mass() - st.mass()).abs() < 1e-12 * spec().area(), "{kind}");
            }
        }
    }

    #[test]
    fn unconstrained_step_decreases_energy() {
        let eps = 0.05;
        let u = Field::from_fn(spec(), |x, y| 0.7 * (6.0 * x).sin() * (5.0 * y).cos());
        let mut st = SimState::new(u, eps, default_dt(eps), MultiplierKind::None).unwrap();
        let stepper = Stepper::new(&st);
        let mut e = gl_energy(&st.u, eps);
        for _ in 0..50 {
            st = stepper.step(&st).unwrap();
            let e2 = gl_energy(&st.u, eps);
            assert!(e2 <= e + 1e-12, "{e2} > {e}");
            e = e2;
        }
    }

    #[test]
    fn kinds_agree_when_multipliers_vanish() {
        let eps = 0.05;
        let s = spec();
        // Odd about x = 1/2: both multipliers vanish.
        let u = Field::from_fn(s, |x, y| theta0((x - 0.5) / eps) * (1.0 + 0.0 * y));
        let next: Vec<Field> = [MultiplierKind::Bb, MultiplierKind::Rs, MultiplierKind::None]
            .into_iter()
            .map(|k| step(&SimState::new(u.clone(), eps, default_dt(eps), k).unwrap()).unwrap().u)
            .collect();
        for other in &next[1..] {
            for (a, b) in next[0].values().iter().zip(other.values()) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn overshoot_aborts() {
        let s = spec();
        let eps = 0.05;
        let u = Field::from_fn(s, |x, _| if x < 0.5 { 1.0005 } else { -1.0005 });
        let mut st = SimState::new(u, eps, dt_max(eps), MultiplierKind::None).unwrap();
        // Push the plateau past the threshold.
        st.u = st.u.map(|v| v * 1.002);
        assert!(matches!(step(&st), Err(Error::OvershootAbort { .. })));
    }

    #[test]
    fn bulk_bound_of_uniform_multiplier() {
        assert_eq!(bulk_bound(MultiplierKind::Bb, 0.3), 1.0);
        let b = bulk_bound(MultiplierKind::Rs, 0.02);
        assert!((potential::f(-b) - 0.02).abs() < 1e-15);
        assert!((b - 1.01).abs() < 1e-3);
        assert_eq!(bulk_bound(MultiplierKind::Rs, -0.02), b);
    }

    #[test]
    fn step_count() {
        assert_eq!(steps_to_reach(0.0, 0.1), 0);
        assert_eq!(steps_to_reach(1.0, 0.1), 10);
        assert_eq!(steps_to_reach(1.05, 0.1), 11);
    }
}
