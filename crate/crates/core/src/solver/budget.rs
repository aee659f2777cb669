use std::ops::Range;

use crate::error::{Error, Result};

use super::ironing::iron;
use super::scalar::{maximize_pooled, StationaryTerm};
use super::SolverOptions;

/// Separable program `max Σ term_n(f_n)` under the budget
/// `base_spend + Σ curvature_n f_n² ≤ r_max`, optionally with f non-decreasing.
pub(crate) struct BudgetedProgram {
    pub terms: Vec<StationaryTerm>,
    pub window: f64,
    pub unit_cost: f64,
    pub base_spend: f64,
    pub r_max: f64,
    pub monotone: bool,
}

pub(crate) struct Solution {
    pub schedule: Vec<f64>,
    pub segments: Vec<Range<usize>>,
    pub rounds: usize,
    pub lambda: f64,
}

impl BudgetedProgram {
    pub fn spend(&self, schedule: &[f64]) -> f64 {
        self.base_spend
            + self
                .terms
                .iter()
                .zip(schedule)
                .map(|(t, f)| t.curvature * f * f)
                .sum::<f64>()
    }

    /// Infimum of spend over time-feasible schedules; not attained.
    pub fn min_spend(&self) -> f64 {
        let floors: Vec<f64> = self.terms.iter().map(|t| t.floor(self.window)).collect();
        if self.monotone {
            // non-decreasing f cannot drop below the first type's floor anywhere
            let mut running = 0.0_f64;
            let mut total = self.base_spend;
            for (t, floor) in self.terms.iter().zip(&floors) {
                running = running.max(*floor);
                total += t.curvature * running * running;
            }
            total
        } else {
            self.spend(&floors)
        }
    }

    pub fn schedule_at(&self, lambda: f64, opts: &SolverOptions) -> Result<Solution> {
        let solo = self
            .terms
            .iter()
            .map(|t| {
                maximize_pooled(
                    std::slice::from_ref(t),
                    self.window,
                    self.unit_cost,
                    lambda,
                    opts,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        if !self.monotone {
            return Ok(Solution {
                schedule: solo,
                segments: Vec::new(),
                rounds: 0,
                lambda,
            });
        }
        let ironed = iron(
            &solo,
            &self.terms,
            self.window,
            self.unit_cost,
            lambda,
            opts,
        )?;
        Ok(Solution {
            schedule: ironed.schedule,
            segments: ironed.segments,
            rounds: ironed.rounds,
            lambda,
        })
    }

    /// Bisection on the budget multiplier. Spend is non-increasing in λ, so the
    /// returned schedule sits on the feasible side of the budget.
    pub fn solve(&self, opts: &SolverOptions) -> Result<Solution> {
        let free = self.schedule_at(0.0, opts)?;
        if self.spend(&free.schedule) <= self.r_max {
            return Ok(free);
        }
        let min_spend = self.min_spend();
        if min_spend >= self.r_max {
            return Err(Error::BudgetInfeasible {
                min_spend,
                r_max: self.r_max,
            });
        }

        // f is solved to full precision here: at the 1e-10 default the spend
        // carries noise of order 1e-10 * r_max, too coarse to pin the budget.
        let opts = &SolverOptions {
            tolerance: f64::EPSILON,
            ..*opts
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut best = self.schedule_at(hi, opts)?;
        let mut doublings = 0;
        while self.spend(&best.schedule) > self.r_max {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > opts.max_iterations {
                return Err(Error::NonConvergence {
                    iterations: doublings,
                    residual: self.spend(&best.schedule) - self.r_max,
                });
            }
            best = self.schedule_at(hi, opts)?;
        }
        for _ in 0..opts.max_iterations {
            if self.r_max - self.spend(&best.schedule) <= opts.budget_tolerance {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let trial = self.schedule_at(mid, opts)?;
            if self.spend(&trial.schedule) > self.r_max {
                lo = mid;
            } else {
                hi = mid;
                best = trial;
            }
        }
        Ok(best)
    }
}
