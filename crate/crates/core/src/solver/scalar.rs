use crate::error::{domain, Error, Result};

use super::SolverOptions;

/// One type's share of the Lagrangian of the reduced program,
///
/// `weight · ln(window − drag / f) − (unit_cost + λ) · curvature · f²`,
///
/// where `curvature · f²` is the type's contribution to expected spend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryTerm {
    pub weight: f64,
    pub drag: f64,
    pub curvature: f64,
}

impl StationaryTerm {
    /// Smallest frequency that still meets the deadline (exclusive).
    pub fn floor(&self, window: f64) -> f64 {
        self.drag / window
    }

    pub fn value(&self, f: f64, window: f64, price: f64) -> f64 {
        self.weight * (window - self.drag / f).ln() - price * self.curvature * f * f
    }

    fn slope(&self, f: f64, window: f64, price: f64) -> f64 {
        self.weight * self.drag / (f * (window * f - self.drag)) - 2.0 * price * self.curvature * f
    }
}

/// Maximizes the sum of `terms` over a single shared frequency. The summed
/// derivative is strictly decreasing on the feasible half-line, so bisection
/// on its sign brackets the unique root.
pub fn maximize_pooled(
    terms: &[StationaryTerm],
    window: f64,
    unit_cost: f64,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    if terms.is_empty() {
        return Err(domain("no terms to optimize"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(domain(format!(
            "multiplier must be finite and >= 0, got {lambda}"
        )));
    }
    if !(window > 0.0) {
        return Err(Error::Infeasible(format!(
            "non-positive compute window {window}"
        )));
    }
    for t in terms {
        if !(t.weight > 0.0 && t.drag > 0.0 && t.curvature > 0.0)
            || !(t.weight.is_finite() && t.drag.is_finite() && t.curvature.is_finite())
        {
            return Err(domain(format!("degenerate stationary term {t:?}")));
        }
    }
    let price = unit_cost + lambda;
    let slope = |f: f64| terms.iter().map(|t| t.slope(f, window, price)).sum::<f64>();
    let floor = terms.iter().map(|t| t.floor(window)).fold(0.0, f64::max);

    let mut lo = floor * (1.0 + 1e-12);
    if slope(lo) <= 0.0 {
        return Ok(lo);
    }
    let mut hi = (2.0 * floor).max(1.0);
    let mut doublings = 0;
    while slope(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 {
            return Err(Error::NonConvergence {
                iterations: doublings,
                residual: slope(hi),
            });
        }
    }
    for _ in 0..opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= opts.tolerance * hi || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual: slope(mid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(weight: f64, drag: f64, curvature: f64) -> StationaryTerm {
        StationaryTerm {
            weight,
            drag,
            curvature,
        }
    }

    #[test]
    fn root_satisfies_cubic() {
        // w d = 2 C f² (D f − d) at the optimum
        let t = term(5000.0, 160.9, 926.0);
        let f = maximize_pooled(&[t], 590.0, 1.0, 0.0, &SolverOptions::default()).unwrap();
        let lhs = t.weight * t.drag;
        let rhs = 2.0 * t.curvature * f * f * (590.0 * f - t.drag);
        assert!((lhs - rhs).abs() <= 1e-7 * lhs);
    }

    #[test]
    fn beats_nearby_points() {
        let terms = [term(3000.0, 50.0, 300.0), term(1000.0, 20.0, 80.0)];
        let opts = SolverOptions::default();
        let f = maximize_pooled(&terms, 590.0, 1.0, 0.5, &opts).unwrap();
        let total = |x: f64| terms.iter().map(|t| t.value(x, 590.0, 1.5)).sum::<f64>();
        for step in [1e-3, 1e-2, 1e-1] {
            assert!(total(f) >= total(f * (1.0 + step)));
            assert!(total(f) >= total(f * (1.0 - step)));
        }
    }

    #[test]
    fn rejects_degenerate_terms() {
        let opts = SolverOptions::default();
        assert!(maximize_pooled(&[term(1.0, 1.0, 0.0)], 10.0, 1.0, 0.0, &opts).is_err());
        assert!(maximize_pooled(&[term(0.0, 1.0, 1.0)], 10.0, 1.0, 0.0, &opts).is_err());
        assert!(maximize_pooled(&[term(1.0, 1.0, 1.0)], 10.0, 1.0, -1.0, &opts).is_err());
        assert!(maximize_pooled(&[], 10.0, 1.0, 0.0, &opts).is_err());
    }

    #[test]
    fn reports_nonconvergence() {
        let opts = SolverOptions {
            max_iterations: 3,
            ..SolverOptions::default()
        };
        let err =
            maximize_pooled(&[term(5000.0, 160.9, 926.0)], 590.0, 1.0, 0.0, &opts).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }));
    }
}
