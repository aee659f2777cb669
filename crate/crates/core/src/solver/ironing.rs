//! Restores monotonicity of a frequency schedule by pooling adjacent types.
//!
//! Each round finds the leftmost strictly decreasing run of blocks, merges it
//! into one block and re-solves that block with the summed objective. For
//! strictly concave separable terms this converges to the monotone-constrained
//! optimum regardless of pooling order.

use std::ops::Range;

use crate::error::{Error, Result};

use super::scalar::{maximize_pooled, StationaryTerm};
use super::SolverOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct Ironed {
    pub schedule: Vec<f64>,
    /// Pooled index ranges (0-based, half-open) of length at least two.
    pub segments: Vec<Range<usize>>,
    pub rounds: usize,
}

#[derive(Debug, Clone)]
struct Block {
    span: Range<usize>,
    value: f64,
}

pub(crate) fn iron(
    initial: &[f64],
    terms: &[StationaryTerm],
    window: f64,
    unit_cost: f64,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<Ironed> {
    if initial.len() != terms.len() {
        return Err(Error::Alignment {
            items: initial.len(),
            types: terms.len(),
        });
    }
    let mut blocks: Vec<Block> = initial
        .iter()
        .enumerate()
        .map(|(i, &value)| Block {
            span: i..i + 1,
            value,
        })
        .collect();
    let limit = initial.len().saturating_sub(1);
    let mut rounds = 0;

    while let Some(start) =
        (0..blocks.len().saturating_sub(1)).find(|&i| blocks[i].value > blocks[i + 1].value)
    {
        let mut end = start + 1;
        while end + 1 < blocks.len() && blocks[end].value > blocks[end + 1].value {
            end += 1;
        }
        rounds += 1;
        if rounds > limit {
            return Err(Error::NonConvergence {
                iterations: rounds,
                residual: blocks[start].value - blocks[start + 1].value,
            });
        }
        let span = blocks[start].span.start..blocks[end].span.end;
        let value = maximize_pooled(&terms[span.clone()], window, unit_cost, lambda, opts)?;
        blocks.splice(start..=end, [Block { span, value }]);
    }

    let mut schedule = Vec::with_capacity(initial.len());
    let mut segments = Vec::new();
    for block in &blocks {
        if block.span.len() > 1 {
            segments.push(block.span.clone());
            schedule.extend(std::iter::repeat_n(block.value, block.span.len()));
        } else {
            schedule.push(initial[block.span.start]);
        }
    }
    Ok(Ironed {
        schedule,
        segments,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const WINDOW: f64 = 590.0;

    fn solo(terms: &[StationaryTerm]) -> Vec<f64> {
        let opts = SolverOptions::default();
        terms
            .iter()
            .map(|t| maximize_pooled(std::slice::from_ref(t), WINDOW, 1.0, 0.0, &opts).unwrap())
            .collect()
    }

    #[test]
    fn monotone_input_is_a_fixpoint() {
        let terms = vec![
            StationaryTerm {
                weight: 5000.0,
                drag: 100.0,
                curvature: 900.0,
            },
            StationaryTerm {
                weight: 5000.0,
                drag: 60.0,
                curvature: 300.0,
            },
            StationaryTerm {
                weight: 5000.0,
                drag: 20.0,
                curvature: 50.0,
            },
        ];
        let start = solo(&terms);
        assert!(start.windows(2).all(|w| w[0] <= w[1]));
        let out = iron(&start, &terms, WINDOW, 1.0, 0.0, &SolverOptions::default()).unwrap();
        assert_eq!(out.schedule, start);
        assert!(out.segments.is_empty());
        assert_eq!(out.rounds, 0);
    }

    #[test]
    fn inverted_pair_is_pooled_between_optima() {
        let terms = vec![
            StationaryTerm {
                weight: 5000.0,
                drag: 100.0,
                curvature: 50.0,
            },
            StationaryTerm {
                weight: 5000.0,
                drag: 60.0,
                curvature: 900.0,
            },
        ];
        let start = solo(&terms);
        assert!(start[0] > start[1]);
        let out = iron(&start, &terms, WINDOW, 1.0, 0.0, &SolverOptions::default()).unwrap();
        assert_eq!(out.segments, vec![0..2]);
        assert_eq!(out.schedule[0], out.schedule[1]);
        assert!(out.schedule[0] < start[0] && out.schedule[0] > start[1]);
    }

    #[test]
    fn rounds_bounded_by_type_count() {
        // strictly decreasing optima collapse into a single block
        let terms: Vec<_> = (0..6)
            .map(|i| StationaryTerm {
                weight: 5000.0,
                drag: 100.0 - 10.0 * i as f64,
                curvature: 20.0 + 200.0 * i as f64,
            })
            .collect();
        let start = solo(&terms);
        assert!(start.windows(2).all(|w| w[0] > w[1]));
        let out = iron(&start, &terms, WINDOW, 1.0, 0.0, &SolverOptions::default()).unwrap();
        assert!(out.rounds < terms.len());
        assert!(out.schedule.windows(2).all(|w| w[0] <= w[1]));
    }
}
