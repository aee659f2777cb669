//! Independent verification of contract menus: IR, IC, monotonicity, time and
//! budget checks, direct profit evaluation, and a brute-force grid solver used
//! as ground truth on small instances.
//!
//! Nothing here calls into the solver; rewards for a frequency tuple are
//! rebuilt from the binding constraints directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{
    owner_utility, publisher_profit_one, total_iteration_time, ContractItem, SystemParams,
    TypeProfile,
};
use crate::error::{domain, Error, Result};
use crate::solver::{validate_types, ContractMenu};

/// Absolute slack allowed on the reward budget.
pub const BUDGET_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrCheck {
    pub ok: bool,
    /// Largest shortfall below zero utility, 0 if none.
    pub worst_violation: f64,
    /// 1-based type index of the worst shortfall.
    pub worst_type: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcCheck {
    pub ok: bool,
    /// Largest gain any type gets from a foreign item, 0 if none.
    pub worst_violation: f64,
    /// 1-based (type, item) of the worst gain.
    pub worst_pair: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub tolerance: f64,
    pub ir: IrCheck,
    pub ic: IcCheck,
    pub monotone_ok: bool,
    pub time_feasible_ok: bool,
    pub budget_ok: bool,
    pub expected_spend: f64,
    pub r_max: f64,
}

impl FeasibilityReport {
    pub fn all_ok(&self) -> bool {
        self.ir.ok && self.ic.ok && self.monotone_ok && self.time_feasible_ok && self.budget_ok
    }
}

fn aligned(items: &[ContractItem], types: &[TypeProfile]) -> Result<()> {
    if items.len() != types.len() || items.is_empty() {
        return Err(Error::Alignment {
            items: items.len(),
            types: types.len(),
        });
    }
    Ok(())
}

/// `U_D(type n, item m)` for every pair, rows by type.
pub fn utility_matrix(
    items: &[ContractItem],
    types: &[TypeProfile],
    params: &SystemParams,
) -> Result<Vec<Vec<f64>>> {
    aligned(items, types)?;
    types
        .iter()
        .map(|ty| {
            items
                .iter()
                .map(|item| owner_utility(ty, item, params))
                .collect()
        })
        .collect()
}

pub fn check_ir(
    items: &[ContractItem],
    types: &[TypeProfile],
    params: &SystemParams,
    tol: f64,
) -> Result<Vec<bool>> {
    aligned(items, types)?;
    types
        .iter()
        .zip(items)
        .map(|(ty, item)| Ok(owner_utility(ty, item, params)? >= -tol))
        .collect()
}

/// Entry `[n][m]` is true when type n weakly prefers its own item to item m.
pub fn check_ic(
    items: &[ContractItem],
    types: &[TypeProfile],
    params: &SystemParams,
    tol: f64,
) -> Result<Vec<Vec<bool>>> {
    let utilities = utility_matrix(items, types, params)?;
    Ok(utilities
        .iter()
        .enumerate()
        .map(|(n, row)| row.iter().map(|&u| row[n] >= u - tol).collect())
        .collect())
}

pub fn check_monotone(items: &[ContractItem]) -> bool {
    items
        .windows(2)
        .all(|w| w[1].cpu_freq >= w[0].cpu_freq && w[1].reward >= w[0].reward)
}

pub fn check_time(
    items: &[ContractItem],
    types: &[TypeProfile],
    params: &SystemParams,
) -> Result<bool> {
    aligned(items, types)?;
    for (ty, item) in types.iter().zip(items) {
        if total_iteration_time(ty, item, params)? >= params.t_max {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Σ N p_n R_n.
pub fn expected_spend(
    items: &[ContractItem],
    types: &[TypeProfile],
    params: &SystemParams,
) -> Result<f64> {
    aligned(items, types)?;
    let n = params.population as f64;
    Ok(types
        .iter()
        .zip(items)
        .map(|(ty, item)| n * ty.probability * item.reward)
        .sum())
}

/// Expected publisher profit Σ N p_n [w ln(T_max − T_n) − l R_n].
pub fn publisher_total_profit(
    items: &[ContractItem],
    types: &[TypeProfile],
    params: &SystemParams,
) -> Result<f64> {
    aligned(items, types)?;
    let n = params.population as f64;
    let mut total = 0.0;
    for (ty, item) in types.iter().zip(items) {
        total += n * ty.probability * publisher_profit_one(ty, item, params)?;
    }
    Ok(total)
}

pub fn assess(
    items: &[ContractItem],
    types: &[TypeProfile],
    params: &SystemParams,
    tol: f64,
) -> Result<FeasibilityReport> {
    let utilities = utility_matrix(items, types, params)?;

    let mut ir = IrCheck {
        ok: true,
        worst_violation: 0.0,
        worst_type: None,
    };
    let mut ic = IcCheck {
        ok: true,
        worst_violation: 0.0,
        worst_pair: None,
    };
    for (n, row) in utilities.iter().enumerate() {
        let own = row[n];
        if -own > ir.worst_violation {
            ir.worst_violation = -own;
            ir.worst_type = Some(types[n].index);
        }
        for (m, &other) in row.iter().enumerate() {
            if m != n && other - own > ic.worst_violation {
                ic.worst_violation = other - own;
                ic.worst_pair = Some((types[n].index, types[m].index));
            }
        }
    }
    ir.ok = ir.worst_violation <= tol;
    ic.ok = ic.worst_violation <= tol;

    let spend = expected_spend(items, types, params)?;
    Ok(FeasibilityReport {
        tolerance: tol,
        ir,
        ic,
        monotone_ok: check_monotone(items),
        time_feasible_ok: check_time(items, types, params)?,
        budget_ok: spend <= params.r_max + BUDGET_SLACK,
        expected_spend: spend,
        r_max: params.r_max,
    })
}

/// Per-instance quantities shared by the grid search and the bound.
struct Instance {
    window: f64,
    comm_energy: f64,
    population: f64,
    /// ψ/θ per type.
    iterations: Vec<f64>,
    probabilities: Vec<f64>,
    workload: f64,
}

impl Instance {
    fn new(types: &[TypeProfile], params: &SystemParams) -> Result<Self> {
        Ok(Instance {
            window: params.compute_window()?,
            comm_energy: params.comm_energy()?,
            population: params.population as f64,
            iterations: types
                .iter()
                .map(|t| t.iterations(params.iteration_coeff))
                .collect(),
            probabilities: types.iter().map(|t| t.probability).collect(),
            workload: types[0].workload(),
        })
    }

    fn floor(&self, n: usize) -> f64 {
        self.iterations[n] * self.workload / self.window
    }

    /// Profit and spend of a non-decreasing schedule with binding-constraint
    /// rewards; `None` if some type misses the deadline.
    fn evaluate(&self, schedule: &[f64], params: &SystemParams) -> Option<(f64, f64)> {
        let mu = params.energy_weight;
        let mut reward = 0.0;
        let mut last_energy = 0.0;
        let mut satisfaction = 0.0;
        let mut spend = 0.0;
        for (n, &f) in schedule.iter().enumerate() {
            let slack = self.window - self.iterations[n] * self.workload / f;
            if !(slack > 0.0) {
                return None;
            }
            let energy = params.capacitance * self.workload * f * f;
            reward = if n == 0 {
                mu * (self.comm_energy + self.iterations[0] * energy)
            } else {
                reward + mu * self.iterations[n] * (energy - last_energy)
            };
            last_energy = energy;
            let mass = self.population * self.probabilities[n];
            satisfaction += mass * params.satisfaction * slack.ln();
            spend += mass * reward;
        }
        Some((satisfaction - params.reward_unit_cost * spend, spend))
    }
}

/// Log-spaced frequency grid from just above the loosest deadline floor to a
/// point past every type's unconstrained optimum.
pub fn oracle_grid(
    types: &[TypeProfile],
    params: &SystemParams,
    grid_size: usize,
) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(Error::Guard(format!(
            "grid needs at least 2 points, got {grid_size}"
        )));
    }
    let inst = Instance::new(types, params)?;
    let lo = (0..types.len())
        .map(|n| inst.floor(n))
        .fold(f64::INFINITY, f64::min)
        * (1.0 + 1e-6);
    // Past f_hi the marginal energy cost beats the marginal satisfaction gain
    // even when the spend coefficient is cut down to the type's own p_n ψ/θ_n.
    let mut hi = 0.0_f64;
    for n in 0..types.len() {
        let drag = inst.iterations[n] * inst.workload;
        let weight = inst.population * inst.probabilities[n] * params.satisfaction;
        let spend_coeff = inst.population
            * params.energy_weight
            * params.capacitance
            * inst.probabilities[n]
            * inst.iterations[n]
            * inst.workload;
        let crossing =
            (weight * drag / (inst.window * params.reward_unit_cost * spend_coeff)).cbrt();
        hi = hi.max(2.0 * inst.floor(n)).max(crossing);
    }
    let hi = 1.25 * hi;
    let ratio = (hi / lo).ln();
    Ok((0..grid_size)
        .map(|i| lo * (ratio * i as f64 / (grid_size - 1) as f64).exp())
        .collect())
}

#[derive(Debug, Clone)]
struct Candidate {
    profit: f64,
    spend: f64,
    tuple: Vec<usize>,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    if b.profit > a.profit || (b.profit == a.profit && b.tuple < a.tuple) {
        b
    } else {
        a
    }
}

struct Search<'a> {
    inst: &'a Instance,
    params: &'a SystemParams,
    grid: &'a [f64],
    energy: Vec<f64>,
    /// `sat[n][i]`: expected satisfaction of type n at grid point i.
    sat: Vec<Vec<f64>>,
}

impl Search<'_> {
    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        level: usize,
        start: usize,
        reward: f64,
        satisfaction: f64,
        spend: f64,
        tuple: &mut Vec<usize>,
        best: &mut Option<Candidate>,
        cheapest: &mut f64,
    ) {
        let mu = self.params.energy_weight;
        let m = self.inst.iterations.len();
        for i in start..self.grid.len() {
            let s = self.sat[level][i];
            if !s.is_finite() {
                continue;
            }
            let r = if level == 0 {
                mu * (self.inst.comm_energy + self.inst.iterations[0] * self.energy[i])
            } else {
                let prev = *tuple.last().expect("parent index");
                reward + mu * self.inst.iterations[level] * (self.energy[i] - self.energy[prev])
            };
            let mass = self.inst.population * self.inst.probabilities[level];
            let spend_here = spend + mass * r;
            let sat_here = satisfaction + s;
            tuple.push(i);
            if level + 1 == m {
                *cheapest = cheapest.min(spend_here);
                if spend_here <= self.params.r_max {
                    let profit = sat_here - self.params.reward_unit_cost * spend_here;
                    let candidate = Candidate {
                        profit,
                        spend: spend_here,
                        tuple: tuple.clone(),
                    };
                    *best = Some(match best.take() {
                        None => candidate,
                        Some(incumbent) => better(incumbent, candidate),
                    });
                }
            } else {
                self.descend(level + 1, i, r, sat_here, spend_here, tuple, best, cheapest);
            }
            tuple.pop();
        }
    }
}

/// Exhaustive search over non-decreasing frequency tuples drawn from
/// [`oracle_grid`], with the cheapest IC/IR rewards for each tuple.
/// Limited to four types.
pub fn brute_force_solve(
    types: &[TypeProfile],
    params: &SystemParams,
    grid_size: usize,
) -> Result<ContractMenu> {
    if types.is_empty() || types.len() > 4 {
        return Err(Error::Guard(format!(
            "brute force supports 1..=4 types, got {}",
            types.len()
        )));
    }
    if grid_size < 50 {
        return Err(Error::Guard(format!(
            "grid_size must be >= 50, got {grid_size}"
        )));
    }
    params.validate()?;
    validate_types(types)?;
    let inst = Instance::new(types, params)?;
    let grid = oracle_grid(types, params, grid_size)?;
    let energy: Vec<f64> = grid
        .iter()
        .map(|f| params.capacitance * inst.workload * f * f)
        .collect();
    let sat = (0..types.len())
        .map(|n| {
            let mass = inst.population * inst.probabilities[n] * params.satisfaction;
            grid.iter()
                .map(|&f| {
                    let slack = inst.window - inst.iterations[n] * inst.workload / f;
                    if slack > 0.0 {
                        mass * slack.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect()
        })
        .collect();
    let search = Search {
        inst: &inst,
        params,
        grid: &grid,
        energy,
        sat,
    };

    let (best, cheapest) = (0..grid.len())
        .into_par_iter()
        .map(|first| {
            let mut best = None;
            let mut cheapest = f64::INFINITY;
            let s = search.sat[0][first];
            if s.is_finite() {
                let r = params.energy_weight
                    * (inst.comm_energy + inst.iterations[0] * search.energy[first]);
                let spend = inst.population * inst.probabilities[0] * r;
                let mut tuple = vec![first];
                if types.len() == 1 {
                    cheapest = spend;
                    if spend <= params.r_max {
                        best = Some(Candidate {
                            profit: s - params.reward_unit_cost * spend,
                            spend,
                            tuple,
                        });
                    }
                } else {
                    search.descend(1, first, r, s, spend, &mut tuple, &mut best, &mut cheapest);
                }
            }
            (best, cheapest)
        })
        .reduce(
            || (None, f64::INFINITY),
            |(a, ca), (b, cb)| {
                let merged = match (a, b) {
                    (None, x) | (x, None) => x,
                    (Some(x), Some(y)) => Some(better(x, y)),
                };
                (merged, ca.min(cb))
            },
        );

    let best = best.ok_or(Error::BudgetInfeasible {
        min_spend: cheapest,
        r_max: params.r_max,
    })?;
    let schedule: Vec<f64> = best.tuple.iter().map(|&i| grid[i]).collect();
    let rewards = binding_rewards(&schedule, types, params)?;
    let items: Vec<ContractItem> = schedule
        .iter()
        .zip(&rewards)
        .map(|(&cpu_freq, &reward)| ContractItem { cpu_freq, reward })
        .collect();
    let mut ironed_segments = Vec::new();
    let mut start = 0;
    for i in 1..=items.len() {
        if i == items.len() || best.tuple[i] != best.tuple[start] {
            if i - start > 1 {
                ironed_segments.push(start..i);
            }
            start = i;
        }
    }
    Ok(ContractMenu {
        publisher_profit: publisher_total_profit(&items, types, params)?,
        expected_total_reward: best.spend,
        items,
        budget_multiplier: 0.0,
        ironed_segments,
        ironing_rounds: 0,
    })
}

/// Binding IR at type 1 and binding downward IC along the schedule.
pub fn binding_rewards(
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
    let e_com = params.comm_energy()?;
    let mut out = Vec::with_capacity(schedule.len());
    for (n, (ty, &f)) in types.iter().zip(schedule).enumerate() {
        if !(f > 0.0) {
            return Err(domain(format!("frequency must be > 0, got {f}")));
        }
        let own_cost =
            ty.iterations(params.iteration_coeff) * params.capacitance * ty.workload() * f * f;
        let reward = if n == 0 {
            mu * (e_com + own_cost)
        } else {
            // type n is indifferent between its item and item n−1
            let prev = schedule[n - 1];
            let prev_cost = ty.iterations(params.iteration_coeff)
                * params.capacitance
                * ty.workload()
                * prev
                * prev;
            out[n - 1] + mu * (own_cost - prev_cost)
        };
        out.push(reward);
    }
    Ok(out)
}

/// Upper bound on how far the best grid menu can fall short of a continuous
/// optimum at `schedule` with profit `profit`: the loss from snapping the
/// schedule down or up onto the grid, whichever is feasible and better.
/// Returns infinity if neither snap is feasible.
pub fn grid_resolution_bound(
    schedule: &[f64],
    profit: f64,
    types: &[TypeProfile],
    params: &SystemParams,
    grid: &[f64],
) -> Result<f64> {
    let inst = Instance::new(types, params)?;
    let snap_down: Vec<f64> = schedule
        .iter()
        .map(|&f| {
            grid.iter()
                .rev()
                .copied()
                .find(|&g| g <= f)
                .unwrap_or(grid[0])
        })
        .collect();
    let snap_up: Vec<f64> = schedule
        .iter()
        .map(|&f| {
            grid.iter()
                .copied()
                .find(|&g| g >= f)
                .unwrap_or(grid[grid.len() - 1])
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for candidate in [snap_down, snap_up] {
        if !candidate.windows(2).all(|w| w[0] <= w[1]) {
            continue;
        }
        if let Some((_, spend)) = inst.evaluate(&candidate, params) {
            if spend <= params.r_max {
                // scored exactly as brute_force_solve reports its winner
                let rewards = binding_rewards(&candidate, types, params)?;
                let items: Vec<ContractItem> = candidate
                    .iter()
                    .zip(&rewards)
                    .map(|(&cpu_freq, &reward)| ContractItem { cpu_freq, reward })
                    .collect();
                best = best.max(publisher_total_profit(&items, types, params)?);
            }
        }
    }
    Ok(if best.is_finite() {
        (profit - best).max(0.0)
    } else {
        f64::INFINITY
    })
}
