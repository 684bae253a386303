//! One-dimensional layer profiles in the stretched normal variable `ρ`.
//!
//! The standing wave `θ0(ρ) = tanh(ρ/√2)` connects the two pure phases and
//! solves `θ0'' + f(θ0) = 0`. Linearizing the reaction around it gives the
//! operator `ℒψ = -ψ'' - f'(θ0)ψ`, whose kernel is spanned by `θ0'`. Correction
//! terms of the inner expansion are bounded solutions of `ℒψ = A`, which
//! exist only when `∫ A θ0' = 0`.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::potential;

/// Default truncation radius of the `ρ` axis.
pub const DEFAULT_RHO_MAX: f64 = 20.0;
/// Default node count (`Δρ = 0.01`).
pub const DEFAULT_RHO_POINTS: usize = 4001;
/// Threshold on `|∫ A θ0'|` below which a right-hand side counts as solvable.
pub const SOLVABILITY_TOL: f64 = 1e-8;

/// Symmetric uniform grid on `[-rho_max, rho_max]` with an odd node count, so
/// that `ρ = 0` is the middle node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoGrid {
    rho_max: f64,
    n: usize,
}

impl RhoGrid {
    pub fn new(rho_max: f64, n: usize) -> Result<Self> {
        if !(rho_max.is_finite() && rho_max > 0.0) {
            return Err(Error::InvalidArgument(format!("rho_max must be positive, got {rho_max}")));
        }
        if n < 5 || n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("rho grid needs an odd count >= 5, got {n}")));
        }
        if (-SQRT_2 * rho_max).exp() >= 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "rho_max = {rho_max} too small: exp(-√2·rho_max) must be below 1e-12"
            )));
        }
        Ok(Self { rho_max, n })
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.rho_max / (self.n - 1) as f64
    }

    /// Index of the `ρ = 0` node.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    pub fn node(&self, i: usize) -> f64 {
        // Symmetric construction keeps ρ(n-1-i) = -ρ(i) bit for bit.
        let c = self.center() as f64;
        (i as f64 - c) * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }
}

impl Default for RhoGrid {
    fn default() -> Self {
        Self { rho_max: DEFAULT_RHO_MAX, n: DEFAULT_RHO_POINTS }
    }
}

/// A function of `ρ` sampled on a [`RhoGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: RhoGrid,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: RhoGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "profile has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("profile values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RhoGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: RhoGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn grid(&self) -> &RhoGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Cubic Lagrange interpolation; outside the grid the nearest end value is
    /// returned (profiles here are flat to 1e-12 at the truncation radius).
    pub fn value_at(&self, rho: f64) -> f64 {
        let n = self.grid.len();
        let h = self.grid.spacing();
        let x = (rho + self.grid.rho_max) / h;
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = (x.floor() as usize).clamp(1, n - 3);
        let t = x - i as f64;
        let [p0, p1, p2, p3] = [
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        ];
        // Nodes at -1, 0, 1, 2 relative to i.
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3
    }

    /// Composite Simpson quadrature of the profile over the whole grid.
    pub fn integral(&self) -> f64 {
        simpson(self.grid.spacing(), &self.values)
    }
}

/// Standing wave `tanh(ρ/√2)`.
pub fn theta0(rho: f64) -> f64 {
    (rho / SQRT_2).tanh()
}

/// `θ0'(ρ) = sech²(ρ/√2)/√2`, evaluated without overflow in the tails.
pub fn theta0_prime(rho: f64) -> f64 {
    let e = (-SQRT_2 * rho.abs()).exp();
    let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    sech2 / SQRT_2
}

/// Composite Simpson rule on an odd number of equispaced samples.
pub fn simpson(h: f64, y: &[f64]) -> f64 {
    let n = y.len();
    debug_assert!(n >= 3 && n % 2 == 1);
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, &v) in y.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (y[0] + y[n - 1] + 4.0 * odd + 2.0 * even)
}

/// Integrals of the standing wave that fix the constants of the interface law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConstants {
    /// `∫(1-θ0²)θ0' / ∫θ0'²`, the coupling of the multiplier into the normal
    /// velocity.
    pub sigma: f64,
    /// `(∫θ0'²)⁻¹`.
    pub sigma_star: f64,
    /// `∫θ0'` (the jump between the phases).
    pub int_theta_prime: f64,
    /// `∫θ0'²`, the surface tension of the layer.
    pub int_theta_prime_sq: f64,
    /// `∫ρ f(θ0)`, the first moment of the reaction across the layer.
    pub rho_f_moment: f64,
}

pub fn profile_constants(grid: &RhoGrid) -> ProfileConstants {
    let h = grid.spacing();
    let tp: Vec<f64> = grid.nodes().map(theta0_prime).collect();
    let tp_sq: Vec<f64> = tp.iter().map(|v| v * v).collect();
    let numer: Vec<f64> = grid
        .nodes()
        .zip(&tp)
        .map(|(r, &d)| {
            let t = theta0(r);
            (1.0 - t * t) * d
        })
        .collect();
    let moment: Vec<f64> = grid.nodes().map(|r| r * potential::f(theta0(r))).collect();

    let int_theta_prime = simpson(h, &tp);
    let int_theta_prime_sq = simpson(h, &tp_sq);
    ProfileConstants {
        sigma: simpson(h, &numer) / int_theta_prime_sq,
        sigma_star: 1.0 / int_theta_prime_sq,
        int_theta_prime,
        int_theta_prime_sq,
        rho_f_moment: simpson(h, &moment),
    }
}

/// `∫ A θ0'`; the equation `ℒψ = A` has a bounded solution iff this vanishes.
pub fn check_solvability(a: &Profile) -> f64 {
    let grid = a.grid();
    let prod: Vec<f64> = grid.nodes().zip(a.values()).map(|(r, &v)| v * theta0_prime(r)).collect();
    simpson(grid.spacing(), &prod)
}

/// Bounded solution of `-ψ'' - f'(θ0)ψ = A` with `ψ(0) = 0`.
///
/// Uses the variation-of-constants representation
/// `ψ(ρ) = θ0'(ρ) ∫_0^ρ θ0'(ζ)⁻² G(ζ) dζ` with `G(ζ) = ∫_ζ^∞ A θ0'`.
/// On `ζ < 0` the solvability condition turns `G` into `-∫_{-∞}^ζ A θ0'`; both
/// halves are accumulated from the far end inward so the tiny tail values of
/// `G` are never formed by cancellation before being multiplied by the
/// exponentially large `θ0'⁻²`.
pub fn solve_linearized(a: &Profile) -> Result<Profile> {
    let integral = check_solvability(a);
    if !(integral.abs() < SOLVABILITY_TOL) {
        return Err(Error::SolvabilityViolation { integral, tolerance: SOLVABILITY_TOL });
    }
    let grid = *a.grid();
    let n = grid.len();
    let c = grid.center();
    let h = grid.spacing();
    let tp: Vec<f64> = grid.nodes().map(theta0_prime).collect();

    let g: Vec<f64> = a.values().iter().zip(&tp).map(|(v, d)| v * d).collect();
    let seg = interval_integrals(h, &g);
    let mut big_g = vec![0.0; n];
    // ζ >= 0: running sum from +rho_max inward.
    let mut acc = 0.0;
    for i in (c..n - 1).rev() {
        acc += seg[i];
        big_g[i] = acc;
    }
    // ζ < 0: running sum from -rho_max inward.
    acc = 0.0;
    for i in 1..c {
        acc += seg[i - 1];
        big_g[i] = -acc;
    }

    let q: Vec<f64> = big_g.iter().zip(&tp).map(|(gv, d)| gv / (d * d)).collect();
    let seg_q = interval_integrals(h, &q);
    let mut values = vec![0.0; n];
    acc = 0.0;
    for i in c + 1..n {
        acc += seg_q[i - 1];
        values[i] = tp[i] * acc;
    }
    acc = 0.0;
    for i in (0..c).rev() {
        acc -= seg_q[i];
        values[i] = tp[i] * acc;
    }
    Profile::new(grid, values)
}

/// Per-interval integrals `∫_{x_i}^{x_{i+1}} y` from a cubic through the four
/// surrounding samples (one-sided cubics at the two ends). The error is smooth
/// along the grid, which keeps finite differences of cumulative sums clean.
fn interval_integrals(h: f64, y: &[f64]) -> Vec<f64> {
    let m = y.len();
    let mut seg = vec![0.0; m - 1];
    seg[0] = h * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3]) / 24.0;
    seg[m - 2] = h * (9.0 * y[m - 1] + 19.0 * y[m - 2] - 5.0 * y[m - 3] + y[m - 4]) / 24.0;
    for i in 1..m - 2 {
        seg[i] = h * (-y[i - 1] + 13.0 * y[i] + 13.0 * y[i + 1] - y[i + 2]) / 24.0;
    }
    seg
}
