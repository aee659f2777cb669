//! Optimal contract menus.
//!
//! With IR binding at the lowest type and every local downward IC binding,
//! rewards are a function of the frequency schedule alone, and expected spend
//! collapses to `N μ E_com + N μ ζ Σ g_n c s f_n²`. What remains is a separable
//! concave program in the frequencies, solved per type through a budget
//! multiplier and ironed where the per-type optima are not monotone.

mod budget;
mod ironing;
mod scalar;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::cost::{
    computation_energy, publisher_profit_one, ContractItem, SystemParams, TypeProfile,
};
use crate::error::{domain, Error, Result};

pub(crate) use budget::BudgetedProgram;
pub use ironing::Ironed;
pub use scalar::{maximize_pooled, StationaryTerm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative bracket width at which the 1-D bisection stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Absolute slack below `r_max` accepted when the budget binds.
    pub budget_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-10,
            max_iterations: 200,
            budget_tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractMenu {
    /// One item per type, index-aligned with the type list.
    pub items: Vec<ContractItem>,
    pub budget_multiplier: f64,
    /// Type ranges (0-based, half-open) sharing one pooled item.
    pub ironed_segments: Vec<Range<usize>>,
    pub ironing_rounds: usize,
    pub expected_total_reward: f64,
    pub publisher_profit: f64,
}

impl ContractMenu {
    pub fn frequencies(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.cpu_freq).collect()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.reward).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GCoefficients {
    pub g: Vec<f64>,
}

/// Checks ordering, probabilities and shared workload of a type set.
pub fn validate_types(types: &[TypeProfile]) -> Result<()> {
    let first = types.first().ok_or_else(|| domain("empty type set"))?;
    for (i, ty) in types.iter().enumerate() {
        if !(ty.theta.is_finite() && ty.theta > 0.0) {
            return Err(domain(format!(
                "type {} has invalid theta {}",
                ty.index, ty.theta
            )));
        }
        if i > 0 && ty.theta <= types[i - 1].theta {
            return Err(Error::Ordering { index: ty.index });
        }
        if !(ty.probability > 0.0 && ty.probability <= 1.0) {
            return Err(domain(format!(
                "type {} needs probability in (0,1], got {}",
                ty.index, ty.probability
            )));
        }
        if ty.cpu_cycles != first.cpu_cycles || ty.samples != first.samples {
            return Err(domain(
                "all types in a menu must share cpu_cycles and samples",
            ));
        }
    }
    let total: f64 = types.iter().map(|t| t.probability).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(domain(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Spend coefficients of the reduced program:
/// `g_n = ψ p_n/θ_n + (ψ/θ_n − ψ/θ_{n+1}) Σ_{i>n} p_i`, `g_M = ψ p_M/θ_M`.
pub fn g_coefficients(types: &[TypeProfile], psi: f64) -> Result<GCoefficients> {
    for pair in types.windows(2) {
        if pair[1].theta <= pair[0].theta {
            return Err(Error::Ordering {
                index: pair[1].index,
            });
        }
    }
    let mut g = vec![0.0; types.len()];
    let mut tail = 0.0;
    for n in (0..types.len()).rev() {
        let here = psi / types[n].theta;
        g[n] = here * types[n].probability;
        if n + 1 < types.len() {
            g[n] += (here - psi / types[n + 1].theta) * tail;
        }
        tail += types[n].probability;
    }
    Ok(GCoefficients { g })
}

/// Cheapest rewards meeting binding IR at type 1 and binding local downward IC.
pub fn recover_rewards(
    schedule: &[f64],
    types: &[TypeProfile],
    params: &SystemParams,
) -> Result<Vec<f64>> {
    if schedule.len() != types.len() {
        return Err(Error::Alignment {
            items: schedule.len(),
            types: types.len(),
        });
    }
    let mu = params.energy_weight;
    let psi = params.iteration_coeff;
    let mut rewards = Vec::with_capacity(types.len());
    let mut previous: Option<(f64, f64)> = None;
    for (ty, &f) in types.iter().zip(schedule) {
        let energy = computation_energy(params.capacitance, ty.cpu_cycles, ty.samples, f)?;
        let reward = match previous {
            None => mu * (params.comm_energy()? + ty.iterations(psi) * energy),
            Some((last_reward, last_energy)) => {
                last_reward + mu * ty.iterations(psi) * (energy - last_energy)
            }
        };
        rewards.push(reward);
        previous = Some((reward, energy));
    }
    Ok(rewards)
}

fn population(params: &SystemParams) -> f64 {
    params.population as f64
}

/// Publisher profit written in frequencies only.
pub fn reduced_objective(
    schedule: &[f64],
    types: &[TypeProfile],
    params: &SystemParams,
) -> Result<f64> {
    if schedule.len() != types.len() {
        return Err(Error::Alignment {
            items: schedule.len(),
            types: types.len(),
        });
    }
    let g = g_coefficients(types, params.iteration_coeff)?;
    let n = population(params);
    let t_com = params.comm_time()?;
    let window = params.t_max - t_com;
    let mut satisfaction = 0.0;
    let mut spend = 0.0;
    for ((ty, &f), g_n) in types.iter().zip(schedule).zip(&g.g) {
        if !(f > 0.0) {
            return Err(domain(format!("frequency must be > 0, got {f}")));
        }
        let delay = params.iteration_coeff * ty.workload() / (f * ty.theta);
        if delay >= window {
            return Err(Error::InfeasibleTime {
                time: t_com + delay,
                t_max: params.t_max,
            });
        }
        satisfaction += n * ty.probability * params.satisfaction * (window - delay).ln();
        spend += g_n * ty.workload() * f * f;
    }
    let l = params.reward_unit_cost;
    let mu = params.energy_weight;
    Ok(satisfaction - n * l * mu * params.comm_energy()? - n * l * mu * params.capacitance * spend)
}

/// Per-type Lagrangian terms of the contract program.
pub fn contract_terms(types: &[TypeProfile], params: &SystemParams) -> Result<Vec<StationaryTerm>> {
    let g = g_coefficients(types, params.iteration_coeff)?;
    let n = population(params);
    types
        .iter()
        .zip(&g.g)
        .map(|(ty, &g_n)| {
            if !(g_n > 0.0) {
                return Err(domain(format!(
                    "type {} has non-positive g = {g_n}",
                    ty.index
                )));
            }
            Ok(StationaryTerm {
                weight: n * ty.probability * params.satisfaction,
                drag: ty.iterations(params.iteration_coeff) * ty.workload(),
                curvature: n * params.energy_weight * params.capacitance * g_n * ty.workload(),
            })
        })
        .collect()
}

/// Unconstrained maximizer of one type's Lagrangian term at multiplier `lambda`.
/// `position` is the 0-based position in `types`.
pub fn solve_stationary(
    lambda: f64,
    position: usize,
    types: &[TypeProfile],
    params: &SystemParams,
    opts: &SolverOptions,
) -> Result<f64> {
    let terms = contract_terms(types, params)?;
    let term = terms
        .get(position)
        .ok_or_else(|| domain(format!("no type at position {position}")))?;
    maximize_pooled(
        std::slice::from_ref(term),
        params.compute_window()?,
        params.reward_unit_cost,
        lambda,
        opts,
    )
}

/// Irons a per-type schedule at multiplier `lambda` into the best
/// non-decreasing schedule.
pub fn iron_monotonicity(
    schedule: &[f64],
    types: &[TypeProfile],
    params: &SystemParams,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<Ironed> {
    let terms = contract_terms(types, params)?;
    ironing::iron(
        schedule,
        &terms,
        params.compute_window()?,
        params.reward_unit_cost,
        lambda,
        opts,
    )
}

/// Assembles a menu from a frequency schedule with minimal IC/IR rewards.
pub fn assemble_menu(
    schedule: &[f64],
    types: &[TypeProfile],
    params: &SystemParams,
) -> Result<ContractMenu> {
    let rewards = recover_rewards(schedule, types, params)?;
    let items: Vec<ContractItem> = schedule
        .iter()
        .zip(&rewards)
        .map(|(&cpu_freq, &reward)| ContractItem { cpu_freq, reward })
        .collect();
    let n = population(params);
    let mut expected_total_reward = 0.0;
    let mut publisher_profit = 0.0;
    for (ty, item) in types.iter().zip(&items) {
        expected_total_reward += n * ty.probability * item.reward;
        publisher_profit += n * ty.probability * publisher_profit_one(ty, item, params)?;
    }
    Ok(ContractMenu {
        items,
        budget_multiplier: 0.0,
        ironed_segments: Vec::new(),
        ironing_rounds: 0,
        expected_total_reward,
        publisher_profit,
    })
}

/// Profit-maximizing IC/IR menu under the reward budget.
pub fn solve(
    types: &[TypeProfile],
    params: &SystemParams,
    opts: &SolverOptions,
) -> Result<ContractMenu> {
    params.validate()?;
    validate_types(types)?;
    let program = BudgetedProgram {
        terms: contract_terms(types, params)?,
        window: params.compute_window()?,
        unit_cost: params.reward_unit_cost,
        base_spend: population(params) * params.energy_weight * params.comm_energy()?,
        r_max: params.r_max,
        monotone: true,
    };
    let solution = program.solve(opts)?;
    let mut menu = assemble_menu(&solution.schedule, types, params)?;
    menu.budget_multiplier = solution.lambda;
    menu.ironed_segments = solution.segments;
    menu.ironing_rounds = solution.rounds;
    Ok(menu)
}
