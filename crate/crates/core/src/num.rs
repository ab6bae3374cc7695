//! Tolerance-aware comparisons for amounts and ratios.

/// Relative tolerance applied to every equality or threshold check on reals.
pub const REL_TOL: f64 = 1e-9;

fn slack(a: f64, b: f64) -> f64 {
    REL_TOL * a.abs().max(b.abs())
}

/// `a ≥ b` up to the relative tolerance.
pub fn approx_ge(a: f64, b: f64) -> bool {
    a >= b - slack(a, b)
}

/// `a ≤ b` up to the relative tolerance.
pub fn approx_le(a: f64, b: f64) -> bool {
    approx_ge(b, a)
}

/// `a < b` by more than the relative tolerance.
pub fn definitely_lt(a: f64, b: f64) -> bool {
    !approx_ge(a, b)
}

pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= slack(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerant_comparisons() {
        assert!(approx_eq(1.5, 1.5 * (1.0 + 1e-12)));
        assert!(!approx_eq(1.5, 1.5 * (1.0 + 1e-8)));
        assert!(approx_ge(1.4999999999999998, 1.5));
        assert!(!definitely_lt(1.4999999999999998, 1.5));
        assert!(definitely_lt(1.49, 1.5));
        assert!(approx_le(1.5000000000001, 1.5));
        assert!(approx_eq(0.0, 0.0));
    }
}
