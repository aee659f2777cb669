//! Leader–follower pricing baselines.
//!
//! Under symmetric information the publisher sees each owner's type, asks for
//! a frequency and pays exactly the owner's energy cost. Under asymmetric
//! information it posts one linear rate π per unit of frequency and every
//! owner best-responds.

use serde::{Deserialize, Serialize};

use crate::cost::{ContractItem, SystemParams, TypeProfile};
use crate::error::{domain, Error, Result};
use crate::solver::{validate_types, BudgetedProgram, SolverOptions, StationaryTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoRegime {
    Symmetric,
    Asymmetric,
}

impl InfoRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            InfoRegime::Symmetric => "symmetric",
            InfoRegime::Asymmetric => "asymmetric",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackelbergOutcome {
    pub info_regime: InfoRegime,
    /// Zero for types that do not participate.
    pub per_type_f: Vec<f64>,
    pub per_type_reward: Vec<f64>,
    pub participating: Vec<bool>,
    pub publisher_profit: f64,
    /// Posted rate; only set for the asymmetric regime.
    pub price: Option<f64>,
    pub budget_multiplier: f64,
}

/// First-best: IC dropped, IR binding for every type, same budget.
pub fn solve_symmetric(
    types: &[TypeProfile],
    params: &SystemParams,
    opts: &SolverOptions,
) -> Result<StackelbergOutcome> {
    params.validate()?;
    validate_types(types)?;
    let n = params.population as f64;
    let mu = params.energy_weight;
    let psi = params.iteration_coeff;
    let e_com = params.comm_energy()?;
    let terms: Vec<StationaryTerm> = types
        .iter()
        .map(|ty| StationaryTerm {
            weight: n * ty.probability * params.satisfaction,
            drag: ty.iterations(psi) * ty.workload(),
            curvature: n
                * mu
                * ty.probability
                * ty.iterations(psi)
                * params.capacitance
                * ty.workload(),
        })
        .collect();
    let program = BudgetedProgram {
        terms,
        window: params.compute_window()?,
        unit_cost: params.reward_unit_cost,
        base_spend: n * mu * e_com,
        r_max: params.r_max,
        monotone: false,
    };
    let solution = program.solve(opts)?;

    let mut rewards = Vec::with_capacity(types.len());
    let mut profit = 0.0;
    for (ty, &f) in types.iter().zip(&solution.schedule) {
        let item = ContractItem {
            cpu_freq: f,
            reward: 0.0,
        };
        let reward = mu * crate::cost::total_iteration_energy(ty, &item, params)?;
        let item = ContractItem { reward, ..item };
        profit += n * ty.probability * crate::cost::publisher_profit_one(ty, &item, params)?;
        rewards.push(reward);
    }
    Ok(StackelbergOutcome {
        info_regime: InfoRegime::Symmetric,
        participating: vec![true; types.len()],
        per_type_f: solution.schedule,
        per_type_reward: rewards,
        publisher_profit: profit,
        price: None,
        budget_multiplier: solution.lambda,
    })
}

/// Interior best response to rate π: argmax of π f − μ[(ψ/θ) ζ c s f² + E_com],
/// i.e. f = π θ / (2 μ ψ ζ c s).
pub fn follower_best_response(price: f64, ty: &TypeProfile, params: &SystemParams) -> f64 {
    price
        / (2.0
            * params.energy_weight
            * ty.iterations(params.iteration_coeff)
            * params.capacitance
            * ty.workload())
}

/// Follower response to rate π: `Some(f)` if the owner joins, `None` if its
/// best utility is negative or it cannot meet the deadline.
pub fn follower_response(
    price: f64,
    ty: &TypeProfile,
    params: &SystemParams,
) -> Result<Option<f64>> {
    if price <= 0.0 {
        return Ok(None);
    }
    let f = follower_best_response(price, ty, params);
    let cost = ty.iterations(params.iteration_coeff) * params.capacitance * ty.workload() * f * f;
    let utility = price * f - params.energy_weight * (cost + params.comm_energy()?);
    let delay = ty.iterations(params.iteration_coeff) * ty.workload() / f;
    if utility < 0.0 || delay >= params.compute_window()? {
        return Ok(None);
    }
    Ok(Some(f))
}

struct PriceModel<'a> {
    types: &'a [TypeProfile],
    params: &'a SystemParams,
    window: f64,
    n: f64,
}

impl PriceModel<'_> {
    /// Profit and spend at π with participation fixed to `members`.
    fn profit_with(&self, price: f64, members: &[usize]) -> (f64, f64) {
        let mut profit = 0.0;
        let mut spend = 0.0;
        for &i in members {
            let ty = &self.types[i];
            let f = follower_best_response(price, ty, self.params);
            let reward = price * f;
            let delay = ty.iterations(self.params.iteration_coeff) * ty.workload() / f;
            let mass = self.n * ty.probability;
            profit += mass
                * (self.params.satisfaction * (self.window - delay).ln()
                    - self.params.reward_unit_cost * reward);
            spend += mass * reward;
        }
        (profit, spend)
    }

    fn slope_with(&self, price: f64, members: &[usize]) -> f64 {
        // d/dπ of w ln(W − c1/π) − l π²/c2 with f = π/c2, delay = c1/π
        members
            .iter()
            .map(|&i| {
                let ty = &self.types[i];
                let c2 = 2.0
                    * self.params.energy_weight
                    * ty.iterations(self.params.iteration_coeff)
                    * self.params.capacitance
                    * ty.workload();
                let c1 = ty.iterations(self.params.iteration_coeff) * ty.workload() * c2;
                let mass = self.n * ty.probability;
                mass * (self.params.satisfaction * c1 / (price * (self.window * price - c1))
                    - 2.0 * self.params.reward_unit_cost * price / c2)
            })
            .sum()
    }

    fn members(&self, price: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (i, ty) in self.types.iter().enumerate() {
            if follower_response(price, ty, self.params)?.is_some() {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Lowest rate at which type i joins (inclusive of utility, exclusive of deadline).
    fn entry_price(&self, i: usize) -> Result<f64> {
        let ty = &self.types[i];
        let k = ty.iterations(self.params.iteration_coeff);
        let mu = self.params.energy_weight;
        let zcs = self.params.capacitance * ty.workload();
        let utility_entry = (4.0 * mu * mu * k * zcs * self.params.comm_energy()?).sqrt();
        let deadline_entry = 2.0 * mu * k * k * zcs * ty.workload() / self.window;
        Ok(utility_entry.max(deadline_entry))
    }
}

/// Best single linear rate, searched interval by interval between the rates
/// where some type starts participating. Within an interval the participant
/// set is fixed and profit is concave in π, so each interval is solved by
/// bisection on the derivative. Spend is capped at the budget.
pub fn solve_asymmetric(
    types: &[TypeProfile],
    params: &SystemParams,
    opts: &SolverOptions,
) -> Result<StackelbergOutcome> {
    params.validate()?;
    validate_types(types)?;
    let model = PriceModel {
        types,
        params,
        window: params.compute_window()?,
        n: params.population as f64,
    };

    // Beyond this rate every participant costs more than the largest
    // satisfaction it could bring, so profit is below the π = 0 value of 0.
    let k_max = types
        .iter()
        .map(|t| t.iterations(params.iteration_coeff))
        .fold(0.0, f64::max);
    let cap = (2.0
        * params.energy_weight
        * k_max
        * params.capacitance
        * types[0].workload()
        * params.satisfaction
        * model.window.ln().max(1e-12)
        / params.reward_unit_cost)
        .sqrt();

    let mut breaks: Vec<f64> = (0..types.len())
        .map(|i| model.entry_price(i))
        .collect::<Result<_>>()?;
    breaks.retain(|&b| b < cap);
    breaks.push(cap);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut best: Option<(f64, f64)> = None;
    for pair in std::iter::once(&[0.0, breaks[0]][..]).chain(breaks.windows(2)) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        // participation is constant on (lo, hi); sample the interior to read it
        let probe = lo + 0.5 * (hi - lo);
        let members = model.members(probe)?;
        if members.is_empty() {
            continue;
        }
        // start just inside the interval so the deadline singularity is avoided
        let mut left = lo.max(lo * (1.0 + 1e-12));
        if model.members(left)? != members {
            left = lo + (hi - lo) * 1e-12;
        }
        let mut right = hi * (1.0 - 1e-15);
        // keep the spend inside the budget
        if model.profit_with(right, &members).1 > params.r_max {
            if model.profit_with(left, &members).1 > params.r_max {
                continue;
            }
            let (mut a, mut b) = (left, right);
            for _ in 0..opts.max_iterations {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if model.profit_with(mid, &members).1 > params.r_max {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            right = a;
        }
        let price = if model.slope_with(right, &members) >= 0.0 {
            right
        } else if model.slope_with(left, &members) <= 0.0 {
            left
        } else {
            let (mut a, mut b) = (left, right);
            for _ in 0..opts.max_iterations {
                let mid = 0.5 * (a + b);
                if b - a <= opts.tolerance * b || mid <= a || mid >= b {
                    break;
                }
                if model.slope_with(mid, &members) > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        };
        let (profit, _) = model.profit_with(price, &members);
        if best.is_none_or(|(p, _)| profit > p) {
            best = Some((profit, price));
        }
    }

    let (_, price) = best.ok_or(Error::NoParticipation)?;
    let mut per_type_f = Vec::with_capacity(types.len());
    let mut per_type_reward = Vec::with_capacity(types.len());
    let mut participating = Vec::with_capacity(types.len());
    let mut profit = 0.0;
    for ty in types {
        match follower_response(price, ty, params)? {
            Some(f) => {
                let item = ContractItem {
                    cpu_freq: f,
                    reward: price * f,
                };
                profit += model.n
                    * ty.probability
                    * crate::cost::publisher_profit_one(ty, &item, params)?;
                per_type_f.push(f);
                per_type_reward.push(item.reward);
                participating.push(true);
            }
            None => {
                per_type_f.push(0.0);
                per_type_reward.push(0.0);
                participating.push(false);
            }
        }
    }
    if !participating.iter().any(|&p| p) {
        return Err(Error::NoParticipation);
    }
    Ok(StackelbergOutcome {
        info_regime: InfoRegime::Asymmetric,
        per_type_f,
        per_type_reward,
        participating,
        publisher_profit: profit,
        price: Some(price),
        budget_multiplier: 0.0,
    })
}

/// Profit the publisher would get at a given posted rate (0 when nobody joins).
pub fn asymmetric_profit_at(
    price: f64,
    types: &[TypeProfile],
    params: &SystemParams,
) -> Result<f64> {
    if !(price >= 0.0) {
        return Err(domain(format!("rate must be >= 0, got {price}")));
    }
    let n = params.population as f64;
    let mut profit = 0.0;
    for ty in types {
        if let Some(f) = follower_response(price, ty, params)? {
            let item = ContractItem {
                cpu_freq: f,
                reward: price * f,
            };
            profit += n * ty.probability * crate::cost::publisher_profit_one(ty, &item, params)?;
        }
    }
    Ok(profit)
}
