//! Second-order matched-asymptotics approximation of the phase field around a
//! moving interface, and the multiplier that goes with it.
//!
//! Near the curve the field is `θ0(d/ε) + ε²·κ²·ψ̂(d/ε)`, where `d` is the
//! signed distance and `ψ̂` solves `ℒψ̂ = -ρθ0'`. Away from it the field is
//! `sign(d)`; the two are blended by a quintic cutoff between `√ε` and `2√ε`,
//! and a time-dependent constant restores the initial mass.

use std::f64::consts::SQRT_2;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fronttrack::{average_curvature, curvature, total_curvature, vertex_normals, FlowHistory};
use crate::geometry::{closest_points, Curve, Point};
use crate::grid::{integrate, Field, GridSpec};
use crate::profile1d::{profile_constants, solve_linearized, theta0, theta0_prime, Profile, RhoGrid};

/// `σ`, the coupling of the multiplier into the normal velocity.
pub const SIGMA: f64 = SQRT_2;

/// Order of the inner expansion. Order one coincides with order zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxOrder {
    Zero,
    Two,
}

impl ApproxOrder {
    pub fn from_int(k: i64) -> Result<Self> {
        match k {
            0 => Ok(ApproxOrder::Zero),
            2 => Ok(ApproxOrder::Two),
            _ => Err(Error::InvalidArgument(format!("approximation order must be 0 or 2, got {k}"))),
        }
    }

    pub fn as_int(&self) -> i64 {
        match self {
            ApproxOrder::Zero => 0,
            ApproxOrder::Two => 2,
        }
    }
}

/// Inner-layer correction profile `ψ̂`, odd, with `ψ̂(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct U2Kernel {
    pub psi_hat: Profile,
}

/// Solves `ℒψ̂ = -ρθ0'` once per process and shares the result.
pub fn build_u2_kernel() -> Result<Arc<U2Kernel>> {
    static KERNEL: OnceLock<Arc<U2Kernel>> = OnceLock::new();
    if let Some(k) = KERNEL.get() {
        return Ok(k.clone());
    }
    let rhs = Profile::from_fn(RhoGrid::default(), |r| -r * theta0_prime(r));
    let psi_hat = solve_linearized(&rhs)?;
    Ok(KERNEL.get_or_init(|| Arc::new(U2Kernel { psi_hat })).clone())
}

/// Leading-order multiplier `κ̄/σ`.
pub fn lambda0(curve: &Curve) -> f64 {
    average_curvature(curve) / SIGMA
}

/// Leading coefficients of `∫f(u_k) ≈ ε²α` and `∫√(4W(u_k)) ≈ εβ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
}

/// `α = (∫κ ds)·∫ρf(θ0)` and `β = 2√2·L` with `L` the arclength.
pub fn alpha_beta(curve: &Curve) -> AlphaBeta {
    let i_rho = profile_constants(&RhoGrid::default()).rho_f_moment;
    AlphaBeta { alpha: total_curvature(curve) * i_rho, beta: 2.0 * SQRT_2 * curve.perimeter() }
}

/// Cutoff equal to 1 for `|d| <= √ε`, 0 for `|d| >= 2√ε`, quintic in between.
pub fn cutoff(d: f64, eps: f64) -> f64 {
    let r = eps.sqrt();
    let s = (d.abs() - r) / r;
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

#[derive(Debug, Clone)]
pub struct ApproxSpec {
    pub eps: f64,
    pub order: ApproxOrder,
    pub flow: Arc<FlowHistory>,
}

impl ApproxSpec {
    pub fn new(eps: f64, order: ApproxOrder, flow: Arc<FlowHistory>) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(Self { eps, order, flow })
    }

    /// Outer cutoff radius `2√ε`.
    pub fn outer_radius(&self) -> f64 {
        2.0 * self.eps.sqrt()
    }

    fn check_clearance(&self, curve: &Curve, grid: &GridSpec) -> Result<()> {
        let clearance = curve.clearance(grid);
        let required = self.outer_radius() + grid.max_spacing();
        if clearance < required {
            return Err(Error::CurveTouchesBoundary { clearance, required });
        }
        Ok(())
    }

    /// Field before the mass correction.
    fn raw_field(&self, curve: &Curve, grid: &GridSpec) -> Result<Field> {
        self.check_clearance(curve, grid)?;
        let kernel = match self.order {
            ApproxOrder::Two => Some(build_u2_kernel()?),
            ApproxOrder::Zero => None,
        };
        let kappa = curvature(curve);
        let normals = vertex_normals(curve);
        let n = kappa.len();
        let eps = self.eps;
        let cps = closest_points(curve, grid)?;
        let values = cps
            .iter()
            .enumerate()
            .map(|(k, cp)| {
                let p = [grid.x(k % grid.nx), grid.y(k / grid.nx)];
                let d = if cp.distance.abs() < 2.0 * self.outer_radius() {
                    let (i, j) = (cp.segment, (cp.segment + 1) % n);
                    let di = arc_distance(p, curve.points()[i], normals[i], kappa[i]);
                    let dj = arc_distance(p, curve.points()[j], normals[j], kappa[j]);
                    (1.0 - cp.t) * di + cp.t * dj
                } else {
                    cp.distance
                };
                let zeta = cutoff(d, eps);
                let outer = if d < 0.0 { -1.0 } else { 1.0 };
                if zeta == 0.0 {
                    return outer;
                }
                let rho = d / eps;
                let mut inner = theta0(rho);
                if let Some(k) = &kernel {
                    let kap = (1.0 - cp.t) * kappa[cp.segment] + cp.t * kappa[(cp.segment + 1) % n];
                    inner += eps * eps * kap * kap * k.psi_hat.value_at(rho);
                }
                zeta * inner + (1.0 - zeta) * outer
            })
            .collect();
        Field::new(*grid, values)
    }
}

/// Signed distance from `p` to the circle of curvature `kappa` touching the
/// curve at `q` with outward normal `n`; a straight line when `kappa = 0`.
/// Blending these osculating arcs along an edge gives a distance whose
/// Laplacian follows the curvature smoothly, unlike the polygon distance
/// whose curvature is concentrated on the vertex bisectors.
fn arc_distance(p: Point, q: Point, n: Point, kappa: f64) -> f64 {
    let w = [p[0] - q[0], p[1] - q[1]];
    let wn = w[0] * n[0] + w[1] * n[1];
    let ww = w[0] * w[0] + w[1] * w[1];
    let disc = 1.0 + 2.0 * kappa * wn + kappa * kappa * ww;
    (2.0 * wn + kappa * ww) / (disc.max(0.0).sqrt() + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxField {
    pub u: Field,
    pub lambda_k: f64,
}

/// Approximate solution at time `t` on `grid`, mass-matched to `t = start`.
pub fn build_approx_field(spec: &ApproxSpec, t: f64, grid: &GridSpec) -> Result<ApproxField> {
    let (t0, t1) = (spec.flow.start_time(), spec.flow.end_time());
    if t < t0 || t > t1 + 1e-12 * t1.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!("t = {t} outside the flow range [{t0}, {t1}]")));
    }
    let curve = spec.flow.curve_at(t);
    let raw = spec.raw_field(&curve, grid)?;
    let lambda_k = lambda0(&curve);
    if t == t0 {
        return Ok(ApproxField { u: raw, lambda_k });
    }
    let m0 = integrate(&spec.raw_field(&spec.flow.curve_at(t0), grid)?);
    let shift = (m0 - integrate(&raw)) / grid.area();
    Ok(ApproxField { u: raw.map(|v| v + shift), lambda_k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::laplacian;
    use crate::potential;
    use std::f64::consts::PI;

    #[test]
    fn kernel_is_odd_and_pinned() {
        let k = build_u2_kernel().unwrap();
        let v = k.psi_hat.values();
        let n = v.len();
        assert_eq!(v[n / 2], 0.0);
        for i in 0..n {
            assert!((v[i] + v[n - 1 - i]).abs() < 1e-10);
        }
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn lambda0_examples() {
        let c = Curve::circle([0.0, 0.0], 0.25, 256).unwrap();
        assert!((lambda0(&c) - 4.0 / SQRT_2).abs() < 1e-3);
        let big = c.scaled_about([0.0, 0.0], 2.0);
        assert!((lambda0(&big) - 0.5 * lambda0(&c)).abs() < 1e-6);
        let e = Curve::ellipse([0.0, 0.0], 0.4, 0.2, 256).unwrap();
        let gb = 2.0 * PI / e.perimeter() / SQRT_2;
        assert!((lambda0(&e) - gb).abs() < 5e-3 * gb);
    }

    #[test]
    fn alpha_beta_of_circle() {
        let c = Curve::circle([0.0, 0.0], 0.25, 256).unwrap();
        let ab = alpha_beta(&c);
        assert!((ab.alpha - 4.0 * PI).abs() < 5e-3 * 4.0 * PI);
        assert_eq!(ab.beta, 2.0 * SQRT_2 * c.perimeter());
    }

    #[test]
    fn cutoff_shape() {
        let eps: f64 = 0.04;
        assert_eq!(cutoff(0.1, eps), 1.0);
        assert_eq!(cutoff(-0.4, eps), 0.0);
        assert_eq!(cutoff(0.2, eps), 1.0);
        assert_eq!(cutoff(0.4, eps), 0.0);
        // |z ζ'(z)| <= 4 across the transition.
        let h = 1e-7;
        for k in 1..1000 {
            let z = 0.2 + 0.2 * k as f64 / 1000.0;
            let dz = (cutoff(z + h, eps) - cutoff(z - h, eps)) / (2.0 * h);
            assert!((z * dz).abs() <= 4.0);
            assert!(dz <= 0.0);
        }
    }

    fn stationary(r: f64) -> Arc<FlowHistory> {
        Arc::new(FlowHistory::stationary(Curve::circle([1.0, 1.0], r, 512).unwrap()))
    }

    #[test]
    fn outer_cells_are_pure_phases() {
        let grid = GridSpec::square(128, 2.0).unwrap();
        let spec = ApproxSpec::new(0.04, ApproxOrder::Two, stationary(0.3)).unwrap();
        let a = build_approx_field(&spec, 0.0, &grid).unwrap();
        let d = crate::geometry::distance_field(&spec.flow.curve_at(0.0), &grid).unwrap();
        for (u, d) in a.u.values().iter().zip(d.values()) {
            if d.abs() >= spec.outer_radius() {
                assert_eq!(u.abs(), 1.0);
            }
        }
        assert!((a.lambda_k - (1.0 / 0.3) / SQRT_2).abs() < 1e-3);
    }

    #[test]
    fn rejects_thin_clearance() {
        let grid = GridSpec::square(64, 1.0).unwrap();
        let flow = Arc::new(FlowHistory::stationary(Curve::circle([0.5, 0.5], 0.3, 128).unwrap()));
        let spec = ApproxSpec::new(0.04, ApproxOrder::Zero, flow).unwrap();
        assert!(matches!(build_approx_field(&spec, 0.0, &grid), Err(Error::CurveTouchesBoundary { .. })));
    }

    #[test]
    fn mass_matched_along_flow() {
        let c = Curve::ellipse([1.0, 1.0], 0.35, 0.25, 128).unwrap();
        let dt = 0.5 * crate::fronttrack::FlowState::stable_dt(&c);
        let params = crate::fronttrack::FlowParams { dt, tmax: 0.01, projection: true, output_interval: 0.005 };
        let flow = Arc::new(crate::fronttrack::run_flow(c, &params).unwrap());
        let grid = GridSpec::square(128, 2.0).unwrap();
        let spec = ApproxSpec::new(0.04, ApproxOrder::Two, flow).unwrap();
        let m0 = integrate(&build_approx_field(&spec, 0.0, &grid).unwrap().u);
        for t in [0.003, 0.007, 0.01] {
            let m = integrate(&build_approx_field(&spec, t, &grid).unwrap().u);
            assert!((m - m0).abs() < 1e-12 * grid.area());
        }
    }

    // Residual of the stationary equation at cells inside the inner tube.
    fn interior_residual(eps: f64, n: usize) -> f64 {
        let grid = GridSpec::square(n, 2.0).unwrap();
        let spec = ApproxSpec::new(eps, ApproxOrder::Two, stationary(0.3)).unwrap();
        let a = build_approx_field(&spec, 0.0, &grid).unwrap();
        let lap = laplacian(&a.u);
        let d = crate::geometry::distance_field(&spec.flow.curve_at(0.0), &grid).unwrap();
        let e2 = eps * eps;
        a.u.values()
            .iter()
            .zip(lap.values())
            .zip(d.values())
            .filter(|(_, d)| d.abs() < eps.sqrt())
            .map(|((&u, &l), _)| {
                (l + (potential::f(u) - eps * a.lambda_k * potential::sqrt_4w(u)) / e2).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn pde_residual_shrinks() {
        let r1 = interior_residual(0.08, 1024);
        let r2 = interior_residual(0.04, 1024);
        assert!(r1 / r2 >= 3.0, "{r1} {r2}");
    }
}
