//! Reference sharp-interface motion: area-preserving curve shortening flow
//! `V = -κ + κ̄` on a closed polygon, with normal velocity measured along the
//! outward normal and `κ̄` the arclength mean of the curvature.
//!
//! The integrator is explicit Euler. After each move the polygon is
//! optionally re-spaced through a Catmull–Rom interpolant and then shifted
//! uniformly along its normals to restore the initial enclosed area.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{enclosed_area, lerp, Curve, Point};

/// Smallest vertex count accepted by the tracker.
pub const MIN_POINTS: usize = 16;
/// Relative area error left after projection.
pub const AREA_TOL: f64 = 1e-9;
/// Resample once an edge leaves `[0.5, 2]` times the mean spacing.
const SPACING_BAND: (f64, f64) = (0.5, 2.0);
/// Explicit stability factor: `dt <= 0.25·Δs²`.
const CFL: f64 = 0.25;

/// Curvature at each vertex from the circle through it and its neighbours,
/// positive where a counter-clockwise curve is convex. Collinear triples get 0.
pub fn curvature(curve: &Curve) -> Vec<f64> {
    let n = curve.len() as isize;
    (0..n)
        .map(|i| {
            let a = curve.vertex(i - 1);
            let b = curve.vertex(i);
            let c = curve.vertex(i + 1);
            let (ux, uy) = (b[0] - a[0], b[1] - a[1]);
            let (vx, vy) = (c[0] - b[0], c[1] - b[1]);
            let cross = ux * vy - uy * vx;
            let lu = ux.hypot(uy);
            let lv = vx.hypot(vy);
            let lw = (c[0] - a[0]).hypot(c[1] - a[1]);
            if cross.abs() <= 1e-14 * lu * lv || lw == 0.0 {
                0.0
            } else {
                2.0 * cross / (lu * lv * lw)
            }
        })
        .collect()
}

/// Dual arclength weight of each vertex, half of each adjacent edge.
pub fn vertex_weights(curve: &Curve) -> Vec<f64> {
    let e = curve.edge_lengths();
    let n = e.len();
    (0..n).map(|i| 0.5 * (e[(i + n - 1) % n] + e[i])).collect()
}

/// Arclength-weighted mean of the vertex curvatures.
pub fn average_curvature(curve: &Curve) -> f64 {
    let k = curvature(curve);
    let w = vertex_weights(curve);
    let total: f64 = w.iter().sum();
    k.iter().zip(&w).map(|(k, w)| k * w).sum::<f64>() / total
}

/// `∫κ ds` of the polygon with the same weights as [`average_curvature`].
pub fn total_curvature(curve: &Curve) -> f64 {
    curvature(curve).iter().zip(vertex_weights(curve)).map(|(k, w)| k * w).sum()
}

/// Outward unit normal at each vertex for a counter-clockwise curve, from
/// the chord between its neighbours.
pub fn vertex_normals(curve: &Curve) -> Vec<Point> {
    let n = curve.len() as isize;
    (0..n)
        .map(|i| {
            let a = curve.vertex(i - 1);
            let c = curve.vertex(i + 1);
            let (tx, ty) = (c[0] - a[0], c[1] - a[1]);
            let l = tx.hypot(ty);
            if l == 0.0 {
                [0.0, 0.0]
            } else {
                [ty / l, -tx / l]
            }
        })
        .collect()
}

/// Catmull–Rom spline through the vertices, re-sampled at `n` points of
/// (approximately) equal arclength.
pub fn resample_cubic(curve: &Curve, n: usize) -> Result<Curve> {
    const SUB: usize = 16;
    let m = curve.len() as isize;
    let mut dense = Vec::with_capacity(curve.len() * SUB);
    for i in 0..m {
        let p0 = curve.vertex(i - 1);
        let p1 = curve.vertex(i);
        let p2 = curve.vertex(i + 1);
        let p3 = curve.vertex(i + 2);
        for s in 0..SUB {
            let t = s as f64 / SUB as f64;
            let (t2, t3) = (t * t, t * t * t);
            let w0 = -0.5 * t3 + t2 - 0.5 * t;
            let w1 = 1.5 * t3 - 2.5 * t2 + 1.0;
            let w2 = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
            let w3 = 0.5 * t3 - 0.5 * t2;
            dense.push([
                w0 * p0[0] + w1 * p1[0] + w2 * p2[0] + w3 * p3[0],
                w0 * p0[1] + w1 * p1[1] + w2 * p2[1] + w3 * p3[1],
            ]);
        }
    }
    Ok(Curve::new(dense)?.resample_linear(n))
}

fn shift_along_normals(curve: &Curve, delta: f64) -> Result<Curve> {
    let normals = vertex_normals(curve);
    Curve::new(
        curve
            .points()
            .iter()
            .zip(&normals)
            .map(|(p, nv)| [p[0] + delta * nv[0], p[1] + delta * nv[1]])
            .collect(),
    )
}

/// Uniform normal shift restoring the enclosed area `target`, iterated until
/// the relative error is below [`AREA_TOL`].
pub fn project_area(curve: &Curve, target: f64) -> Result<Curve> {
    let mut c = curve.clone();
    for _ in 0..8 {
        let a = enclosed_area(&c);
        if (a - target).abs() <= 0.1 * AREA_TOL * target.abs() {
            break;
        }
        c = shift_along_normals(&c, (target - a) / c.perimeter())?;
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub curve: Curve,
    pub time: f64,
    pub dt: f64,
    /// Enclosed area of the initial curve.
    pub area0: f64,
    /// Restore `area0` after every step.
    pub projection: bool,
}

impl FlowState {
    /// Starts a flow. The curve is made counter-clockwise; it must be simple,
    /// have at least [`MIN_POINTS`] vertices and satisfy `dt <= 0.25·Δs²` for
    /// its shortest edge.
    pub fn new(curve: Curve, dt: f64, projection: bool) -> Result<Self> {
        if curve.len() < MIN_POINTS {
            return Err(Error::InvalidCurve(format!(
                "front tracking needs at least {MIN_POINTS} vertices, got {}",
                curve.len()
            )));
        }
        if !curve.is_simple() {
            return Err(Error::SelfIntersection { time: 0.0 });
        }
        let curve = curve.oriented_ccw();
        let ds = min_edge(&curve);
        if !(dt > 0.0) || dt > CFL * ds * ds {
            return Err(Error::InvalidArgument(format!(
                "flow dt {dt:e} must be positive and at most 0.25·Δs² = {:e}",
                CFL * ds * ds
            )));
        }
        let area0 = enclosed_area(&curve);
        Ok(Self { curve, time: 0.0, dt, area0, projection })
    }

    /// Largest stable step for the curve's current shortest edge.
    pub fn stable_dt(curve: &Curve) -> f64 {
        let ds = min_edge(curve);
        CFL * ds * ds
    }
}

fn min_edge(curve: &Curve) -> f64 {
    curve.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
}

/// One explicit Euler step of length at most `state.dt`.
pub fn step_flow(state: &FlowState) -> Result<FlowState> {
    step_flow_by(state, state.dt)
}

/// One explicit Euler step of length `min(dt, 0.25·Δs²)`, where `Δs` is the
/// current shortest edge, so a shrinking curve never outruns its stability
/// limit.
pub fn step_flow_by(state: &FlowState, dt: f64) -> Result<FlowState> {
    let c = &state.curve;
    let dt = dt.min(FlowState::stable_dt(c));
    let n = c.len();
    let kappa = curvature(c);
    let w = vertex_weights(c);
    let kbar = kappa.iter().zip(&w).map(|(k, w)| k * w).sum::<f64>() / w.iter().sum::<f64>();
    let normals = vertex_normals(c);
    let moved: Vec<Point> = c
        .points()
        .iter()
        .zip(kappa.iter().zip(&normals))
        .map(|(p, (k, nv))| {
            let v = -k + kbar;
            [p[0] + dt * v * nv[0], p[1] + dt * v * nv[1]]
        })
        .collect();
    let time = state.time + dt;
    let mut curve = Curve::new(moved)?;

    let mean = curve.perimeter() / n as f64;
    if curve.edge_lengths().iter().any(|&e| e < SPACING_BAND.0 * mean || e > SPACING_BAND.1 * mean) {
        curve = resample_cubic(&curve, n)?;
    }
    if state.projection {
        curve = project_area(&curve, state.area0)?;
    }
    if !curve.is_simple() {
        return Err(Error::SelfIntersection { time });
    }
    Ok(FlowState { curve, time, ..state.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub dt: f64,
    pub tmax: f64,
    pub projection: bool,
    /// Spacing of stored snapshots in time; `tmax` is always stored.
    pub output_interval: f64,
}

/// Stored curves of one flow, all with the same vertex count.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowHistory {
    pub snapshots: Vec<(f64, Curve)>,
    pub area0: f64,
}

/// Integrates the flow to `tmax`, storing the curve at every multiple of
/// `output_interval` (steps are shortened to land on them).
pub fn run_flow(curve0: Curve, params: &FlowParams) -> Result<FlowHistory> {
    if !(params.tmax >= 0.0) || !(params.output_interval > 0.0) {
        return Err(Error::InvalidArgument("flow needs tmax >= 0 and output_interval > 0".into()));
    }
    let mut state = FlowState::new(curve0, params.dt, params.projection)?;
    let mut snapshots = vec![(0.0, state.curve.clone())];
    let mut k = 1u64;
    loop {
        let target = (k as f64 * params.output_interval).min(params.tmax);
        if snapshots.last().map(|s| s.0) == Some(params.tmax) {
            break;
        }
        while state.time < target - 1e-12 * params.tmax.max(1.0) {
            let dt = state.dt.min(target - state.time);
            state = step_flow_by(&state, dt)?;
        }
        state.time = target;
        snapshots.push((target, state.curve.clone()));
        k += 1;
    }
    Ok(FlowHistory { snapshots, area0: state.area0 })
}

impl FlowHistory {
    /// Static history: the same curve at every time.
    pub fn stationary(curve: Curve) -> Self {
        let area0 = enclosed_area(&curve);
        Self { snapshots: vec![(0.0, curve)], area0 }
    }

    pub fn start_time(&self) -> f64 {
        self.snapshots[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.snapshots[self.snapshots.len() - 1].0
    }

    /// Curve at time `t`, interpolated vertex by vertex between the stored
    /// snapshots and clamped to the stored range.
    pub fn curve_at(&self, t: f64) -> Curve {
        let s = &self.snapshots;
        if t <= s[0].0 || s.len() == 1 {
            return s[0].1.clone();
        }
        let k = s.partition_point(|(ts, _)| *ts <= t);
        if k >= s.len() {
            return s[s.len() - 1].1.clone();
        }
        let (t0, c0) = &s[k - 1];
        let (t1, c1) = &s[k];
        let w = (t - t0) / (t1 - t0);
        let pts = c0.points().iter().zip(c1.points()).map(|(a, b)| lerp(*a, *b, w)).collect();
        Curve::new(pts).expect("interpolated curve has the same vertex count")
    }

    /// Writes `gamma_t{index}.csv` for every snapshot into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, (_, c)) in self.snapshots.iter().enumerate() {
            c.save_csv(&dir.join(format!("gamma_t{i}.csv")))?;
        }
        Ok(())
    }
}
