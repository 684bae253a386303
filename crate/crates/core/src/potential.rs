//! Cubic bistable nonlinearity `f(u) = u(1 - u²)` and its double-well
//! potential `W(u) = (1 - u²)² / 4`, with `f = -W'`.

/// Bistable reaction term.
#[inline]
pub fn f(u: f64) -> f64 {
    u * (1.0 - u * u)
}

/// Double-well potential, minimal (zero) at `u = ±1`.
#[inline]
pub fn w(u: f64) -> f64 {
    let s = 1.0 - u * u;
    0.25 * s * s
}

/// `√(4W(u))`, evaluated as `|1 - u²|` so that it stays well defined when a
/// discrete scheme overshoots `[-1, 1]` slightly.
#[inline]
pub fn sqrt_4w(u: f64) -> f64 {
    (1.0 - u * u).abs()
}

/// Derivative of the reaction term.
#[inline]
pub fn f_prime(u: f64) -> f64 {
    1.0 - 3.0 * u * u
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pointwise_values() {
        assert_eq!(f(0.0), 0.0);
        assert_eq!(f(1.0), 0.0);
        assert_eq!(f(0.5), 0.375);
        assert_eq!(w(1.0), 0.0);
        assert_eq!(w(0.0), 0.25);
        assert_eq!(w(0.5), 0.140625);
        assert_eq!(sqrt_4w(0.0), 1.0);
        assert_eq!(sqrt_4w(1.0), 0.0);
        assert_eq!(sqrt_4w(-1.0), 0.0);
        assert_eq!(sqrt_4w(2.0), 3.0);
        assert_eq!(f_prime(0.0), 1.0);
        assert_eq!(f_prime(1.0), -2.0);
        assert_eq!(f_prime(0.5), 0.25);
    }

    #[test]
    fn bistable_signs() {
        assert!(f_prime(0.0) > 0.0);
        assert!(f_prime(1.0) < 0.0 && f_prime(-1.0) < 0.0);
    }

    proptest! {
        #[test]
        fn f_is_odd(u in -2.0f64..2.0) {
            prop_assert_eq!(f(-u), -f(u));
        }

        #[test]
        fn reaction_is_minus_potential_gradient(u in -1.5f64..1.5) {
            let h = 1e-6;
            let dw = (w(u + h) - w(u - h)) / (2.0 * h);
            prop_assert!((dw + f(u)).abs() <= 1e-8 * f(u).abs().max(1.0));
        }

        #[test]
        fn sqrt_4w_squares_to_4w(u in -2.0f64..2.0) {
            let lhs = sqrt_4w(u).powi(2);
            let rhs = 4.0 * w(u);
            prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs.max(1e-300));
        }
    }
}
