//! Measurements on phase fields: mass, energy, areas, L² errors against the
//! sharp-interface and approximate solutions, and a probe of the lowest
//! eigenvalue of the linearized operator.

use std::io::Write;
use std::path::Path;

use crate::approx::{build_approx_field, ApproxSpec};
use crate::dynamics::SimState;
use crate::error::{Error, Result};
use crate::fronttrack::FlowHistory;
use crate::geometry::{distance_field, enclosed_area, extract_zero_levelset, largest_component, phase_area, Curve};
use crate::grid::{integrate, Field, GridSpec};
use crate::potential;

pub const CSV_HEADER: &str =
    "step,time,mass,lambda,area_levelset,area_phase,gl_energy,l2_err_step,l2_err_approx,levelset_count";

/// Iteration budget of the inverse power iteration.
pub const EIG_MAX_ITER: usize = 500;
/// Relative tolerance on successive Rayleigh quotients.
pub const EIG_TOL: f64 = 1e-6;
/// Largest grid accepted by [`spectral_lower_bound`].
pub const EIG_MAX_CELLS: usize = 128 * 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRecord {
    pub step: u64,
    pub time: f64,
    pub mass: f64,
    /// `ελ̂` for the local multiplier, the uniform multiplier for the
    /// nonlocal one, 0 without constraint.
    pub lambda: f64,
    /// Enclosed area of the largest zero-level component (NaN if none).
    pub area_levelset: f64,
    pub area_phase: f64,
    pub gl_energy: f64,
    /// L² distance to the sharp-interface field (NaN without a reference).
    pub l2_err_step: f64,
    /// L² distance to the approximate solution (NaN without one).
    pub l2_err_approx: f64,
    pub levelset_count: usize,
}

impl TimeSeriesRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.step,
            self.time,
            self.mass,
            self.lambda,
            self.area_levelset,
            self.area_phase,
            self.gl_energy,
            self.l2_err_step,
            self.l2_err_approx,
            self.levelset_count
        )
    }
}

pub fn write_csv(records: &[TimeSeriesRecord], mut w: impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.to_csv_row())?;
    }
    Ok(())
}

pub fn save_csv(records: &[TimeSeriesRecord], path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(records, f)
}

/// `‖u - ũ‖` in L², with `ũ = -1` inside the curve and `+1` outside.
pub fn l2_error_vs_step(u: &Field, curve: &Curve) -> Result<f64> {
    let d = distance_field(curve, u.spec())?;
    let sq = u.zip_map(&d, |u, d| {
        let s = if d < 0.0 { -1.0 } else { 1.0 };
        (u - s) * (u - s)
    });
    Ok(integrate(&sq).sqrt())
}

/// `‖u - v‖` in L².
pub fn l2_distance(u: &Field, v: &Field) -> f64 {
    integrate(&u.zip_map(v, |a, b| (a - b) * (a - b))).sqrt()
}

/// Ginzburg–Landau energy `∫ (ε/2)|∇u|² + W(u)/ε`.
///
/// Differences are taken across cell faces, and boundary faces carry no
/// flux, so this is the discrete energy whose gradient is the five-point
/// Neumann Laplacian used by the stepper.
pub fn gl_energy(u: &Field, eps: f64) -> f64 {
    let s = u.spec();
    let (hx, hy) = (s.hx(), s.hy());
    let v = u.values();
    let mut grad = 0.0;
    for j in 0..s.ny {
        for i in 0..s.nx {
            let k = s.index(i, j);
            if i + 1 < s.nx {
                let d = (v[k + 1] - v[k]) / hx;
                grad += d * d;
            }
            if j + 1 < s.ny {
                let d = (v[k + s.nx] - v[k]) / hy;
                grad += d * d;
            }
        }
    }
    let pot: f64 = v.iter().map(|&x| potential::w(x)).sum();
    s.cell_area() * (0.5 * eps * grad + pot / eps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeDrift {
    pub max_rel_levelset: f64,
    pub max_rel_phase: f64,
}

/// Largest relative deviation of each area column from its first value.
pub fn volume_drift(records: &[TimeSeriesRecord]) -> Result<VolumeDrift> {
    if records.len() < 2 {
        return Err(Error::InvalidArgument(format!("volume drift needs at least 2 records, got {}", records.len())));
    }
    let drift = |get: fn(&TimeSeriesRecord) -> f64| {
        let a0 = get(&records[0]);
        records.iter().map(|r| ((get(r) - a0) / a0).abs()).fold(0.0, f64::max)
    };
    Ok(VolumeDrift { max_rel_levelset: drift(|r| r.area_levelset), max_rel_phase: drift(|r| r.area_phase) })
}

/// Builds a [`TimeSeriesRecord`] from a simulation state, comparing against
/// an optional reference flow and an optional approximate solution.
#[derive(Debug, Clone, Default)]
pub struct Recorder {
    pub reference: Option<std::sync::Arc<FlowHistory>>,
    pub approx: Option<ApproxSpec>,
}

impl Recorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, state: &SimState) -> Result<TimeSeriesRecord> {
        let u = &state.u;
        let (largest, count) = largest_component(extract_zero_levelset(u));
        let area_levelset = largest.map(|c| enclosed_area(&c).abs()).unwrap_or(f64::NAN);
        let l2_err_step = match &self.reference {
            Some(flow) => l2_error_vs_step(u, &flow.curve_at(state.time))?,
            None => f64::NAN,
        };
        let l2_err_approx = match &self.approx {
            Some(spec) => l2_distance(u, &build_approx_field(spec, state.time, u.spec())?.u),
            None => f64::NAN,
        };
        Ok(TimeSeriesRecord {
            step: state.step,
            time: state.time,
            mass: integrate(u),
            lambda: state.lambda_last,
            area_levelset,
            area_phase: phase_area(u),
            gl_energy: gl_energy(u, state.eps),
            l2_err_step,
            l2_err_approx,
            levelset_count: count,
        })
    }
}

/// Symmetric five-point operator `-Δ_h + V` with reflective boundaries.
struct Operator {
    spec: GridSpec,
    potential: Vec<f64>,
    cx: f64,
    cy: f64,
}

impl Operator {
    fn diag(&self, k: usize) -> f64 {
        let (i, j) = (k % self.spec.nx, k / self.spec.nx);
        let nbx = (i > 0) as u8 + (i + 1 < self.spec.nx) as u8;
        let nby = (j > 0) as u8 + (j + 1 < self.spec.ny) as u8;
        nbx as f64 * self.cx + nby as f64 * self.cy + self.potential[k]
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let mut y = vec![0.0; x.len()];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let mut acc = self.diag(k) * x[k];
                if i > 0 {
                    acc -= self.cx * x[k - 1];
                }
                if i + 1 < nx {
                    acc -= self.cx * x[k + 1];
                }
                if j > 0 {
                    acc -= self.cy * x[k - nx];
                }
                if j + 1 < ny {
                    acc -= self.cy * x[k + nx];
                }
                y[k] = acc;
            }
        }
        y
    }

    /// Gershgorin lower bound on the spectrum.
    fn lower_bound(&self) -> f64 {
        self.potential.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Banded Cholesky factor of `A - σI` (bandwidth `nx`), or `None` when
    /// the shifted matrix is not positive definite.
    fn cholesky(&self, sigma: f64) -> Option<BandCholesky> {
        let n = self.spec.len();
        let b = self.spec.nx;
        let w = b + 1;
        // Row k stores columns k-b..=k at offsets 0..=b.
        let mut l = vec![0.0; n * w];
        for k in 0..n {
            let lo = k.saturating_sub(b);
            for m in lo..=k {
                let a = if m == k {
                    self.diag(k) - sigma
                } else if m + 1 == k && k % b != 0 {
                    -self.cx
                } else if m + b == k {
                    -self.cy
                } else {
                    0.0
                };
                let lo_m = m.saturating_sub(b).max(lo);
                let mut s = a;
                for p in lo_m..m {
                    s -= l[k * w + (p + b - k)] * l[m * w + (p + b - m)];
                }
                if m == k {
                    if !(s > 0.0) {
                        return None;
                    }
                    l[k * w + b] = s.sqrt();
                } else {
                    l[k * w + (m + b - k)] = s / l[m * w + b];
                }
            }
        }
        Some(BandCholesky { l, n, b })
    }
}

struct BandCholesky {
    l: Vec<f64>,
    n: usize,
    b: usize,
}

impl BandCholesky {
    #[allow(clippy::needless_range_loop)]
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b, w) = (self.n, self.b, self.b + 1);
        let mut y = rhs.to_vec();
        for k in 0..n {
            let lo = k.saturating_sub(b);
            let mut s = y[k];
            for p in lo..k {
                s -= self.l[k * w + (p + b - k)] * y[p];
            }
            y[k] = s / self.l[k * w + b];
        }
        for k in (0..n).rev() {
            let hi = (k + b).min(n - 1);
            let mut s = y[k];
            for p in k + 1..=hi {
                s -= self.l[p * w + (k + b - p)] * y[p];
            }
            y[k] = s / self.l[k * w + b];
        }
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest eigenvalue of `-Δ_h - ε⁻²(f'(u_k) + ratio·2u_k)`.
///
/// A Cholesky inertia test brackets the eigenvalue by bisection, then
/// inverse iteration shifted just below it refines the Rayleigh quotient to
/// a relative change below [`EIG_TOL`].
pub fn spectral_lower_bound(u_k: &Field, eps: f64, ratio: f64) -> Result<f64> {
    let spec = *u_k.spec();
    if spec.len() > EIG_MAX_CELLS {
        return Err(Error::InvalidArgument(format!(
            "spectral probe limited to {EIG_MAX_CELLS} cells, got {}",
            spec.len()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let e2 = eps * eps;
    let op = Operator {
        spec,
        potential: u_k.values().iter().map(|&u| -(potential::f_prime(u) + ratio * 2.0 * u) / e2).collect(),
        cx: 1.0 / (spec.hx() * spec.hx()),
        cy: 1.0 / (spec.hy() * spec.hy()),
    };

    // Deterministic start vector with components along every mode.
    let n = spec.len();
    let mut seed = 0x9e37_79b9_7f4a_7c15u64;
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            1.0 + 0.5 * ((seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        })
        .collect();
    let norm = dot(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);

    // Bracket: Cholesky succeeds below the eigenvalue, fails at or above it.
    let mut lo = op.lower_bound() - 1.0;
    let mut hi = dot(&x, &op.apply(&x));
    let scale = hi.abs().max(lo.abs()).max(1.0);
    let mut factor = op.cholesky(lo).ok_or(Error::EigSolverStall { iterations: 0, estimate: lo })?;
    while hi - lo > 1e-3 * scale.min(hi.abs().max(1.0)) {
        let mid = 0.5 * (lo + hi);
        match op.cholesky(mid) {
            Some(f) => {
                lo = mid;
                factor = f;
            }
            None => hi = mid,
        }
    }

    let mut mu = hi;
    for it in 0..EIG_MAX_ITER {
        let mut y = factor.solve(&x);
        let norm = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let next = dot(&y, &op.apply(&y));
        x = y;
        if it > 0 && (next - mu).abs() <= EIG_TOL * next.abs().max(1.0) {
            return Ok(next);
        }
        mu = next;
    }
    Err(Error::EigSolverStall { iterations: EIG_MAX_ITER, estimate: mu })
}
