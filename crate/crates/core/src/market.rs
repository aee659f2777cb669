//! Agent-based evaluation of a solved menu and the two experiment sweeps.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{owner_utility, publisher_profit_one, ContractItem, SystemParams, TypeProfile};
use crate::error::{domain, Error, Result};
use crate::oracle::{self, FeasibilityReport};
use crate::solver::{self, ContractMenu, SolverOptions};
use crate::stackelberg::{self, InfoRegime, StackelbergOutcome};

/// Relative utility gap under which an owner treats two items as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// How owners are drawn from the type distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Exactly round(N p_m) owners per type (largest remainder).
    #[default]
    Quota,
    /// Independent draws from the type distribution with a seeded generator.
    Iid,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub accuracy_upper_limits: Option<Vec<f64>>,
    pub type_counts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub type_count: usize,
    /// Lowest and highest local data accuracy, used as quality ε.
    pub accuracy_range: [f64; 2],
    /// Uniform when absent.
    pub type_probabilities: Option<Vec<f64>>,
    /// Owners simulated; defaults to `params.population`.
    pub owner_count: Option<usize>,
    pub sampling: Sampling,
    pub cpu_cycles: f64,
    pub samples: f64,
    pub seed: u64,
    /// Feasibility tolerance for IR/IC verdicts.
    pub tolerance: f64,
    pub solver: SolverOptions,
    /// 1-based types whose utility rows go to utilities.csv.
    pub utility_curve_types: Vec<usize>,
    pub oracle_grid_size: usize,
    pub params: SystemParams,
    pub sweep: Option<Sweep>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            type_count: 10,
            accuracy_range: [0.20, 0.92],
            type_probabilities: None,
            owner_count: None,
            sampling: Sampling::Quota,
            cpu_cycles: 5.0,
            samples: 20.0,
            seed: 0,
            tolerance: 1e-9,
            solver: SolverOptions::default(),
            utility_curve_types: vec![2, 4, 6, 8],
            oracle_grid_size: 200,
            params: SystemParams::default(),
            sweep: None,
        }
    }
}

pub const DEFAULT_ACCURACY_LIMITS: [f64; 5] = [0.98, 0.93, 0.88, 0.83, 0.78];
pub const DEFAULT_TYPE_COUNTS: [usize; 9] = [2, 3, 4, 5, 6, 7, 8, 9, 10];

impl ScenarioConfig {
    pub fn owners(&self) -> usize {
        self.owner_count.unwrap_or(self.params.population as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::Config(msg));
        if self.type_count == 0 {
            return invalid("type_count must be >= 1".into());
        }
        let [lo, hi] = self.accuracy_range;
        if !(lo > 0.0 && hi < 1.0 && lo < hi) {
            return invalid(format!(
                "accuracy_range must satisfy 0 < lo < hi < 1, got [{lo}, {hi}]"
            ));
        }
        if let Some(p) = &self.type_probabilities {
            if p.len() != self.type_count {
                return invalid(format!(
                    "type_probabilities has {} entries for type_count {}",
                    p.len(),
                    self.type_count
                ));
            }
            if p.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
                return invalid("type_probabilities entries must lie in (0, 1]".into());
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return invalid(format!("type_probabilities sum to {total}, not 1"));
            }
        }
        if !(self.cpu_cycles > 0.0 && self.samples > 0.0) {
            return invalid("cpu_cycles and samples must be > 0".into());
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return invalid(format!(
                "tolerance must be finite and >= 0, got {}",
                self.tolerance
            ));
        }
        if !(self.solver.tolerance > 0.0
            && self.solver.max_iterations > 0
            && self.solver.budget_tolerance >= 0.0)
        {
            return invalid("solver options must be positive".into());
        }
        if self.oracle_grid_size < 50 {
            return invalid(format!(
                "oracle_grid_size must be >= 50, got {}",
                self.oracle_grid_size
            ));
        }
        if self.utility_curve_types.contains(&0) {
            return invalid("utility_curve_types are 1-based".into());
        }
        self.params
            .validate()
            .map_err(|e| Error::Config(format!("params: {e}")))?;
        if let Some(sweep) = &self.sweep {
            if let Some(limits) = &sweep.accuracy_upper_limits {
                check_limits(limits, lo).map_err(|e| Error::Config(format!("sweep: {e}")))?;
            }
            if let Some(counts) = &sweep.type_counts {
                check_counts(counts).map_err(|e| Error::Config(format!("sweep: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn accuracy_limits(&self) -> Vec<f64> {
        self.sweep
            .as_ref()
            .and_then(|s| s.accuracy_upper_limits.clone())
            .unwrap_or_else(|| DEFAULT_ACCURACY_LIMITS.to_vec())
    }

    pub fn type_counts(&self) -> Vec<usize> {
        self.sweep
            .as_ref()
            .and_then(|s| s.type_counts.clone())
            .unwrap_or_else(|| DEFAULT_TYPE_COUNTS.to_vec())
    }

    pub fn build_types(&self) -> Result<Vec<TypeProfile>> {
        build_types(
            self.type_count,
            self.accuracy_range,
            self.params.iteration_coeff,
            self.cpu_cycles,
            self.samples,
            self.type_probabilities.as_deref(),
        )
    }
}

fn check_limits(limits: &[f64], lo: f64) -> Result<()> {
    if limits.is_empty() {
        return Err(domain("no accuracy limits given"));
    }
    if limits.iter().any(|&u| !(u > lo && u < 1.0)) {
        return Err(domain(format!("accuracy limits must lie in ({lo}, 1)")));
    }
    if limits.windows(2).any(|w| w[1] > w[0]) {
        return Err(domain("accuracy limits must be descending"));
    }
    Ok(())
}

fn check_counts(counts: &[usize]) -> Result<()> {
    if counts.is_empty() {
        return Err(domain("no type counts given"));
    }
    if counts.iter().any(|&m| m < 2) {
        return Err(domain("type counts must be >= 2"));
    }
    if counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("type counts must be ascending"));
    }
    Ok(())
}

/// M types with qualities evenly spaced on the accuracy range, ascending.
/// A single type sits at the lower end.
pub fn build_types(
    count: usize,
    accuracy_range: [f64; 2],
    psi: f64,
    cpu_cycles: f64,
    samples: f64,
    probabilities: Option<&[f64]>,
) -> Result<Vec<TypeProfile>> {
    let [lo, hi] = accuracy_range;
    if count == 0 {
        return Err(domain("need at least one type"));
    }
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(domain(format!("bad accuracy range [{lo}, {hi}]")));
    }
    if let Some(p) = probabilities {
        if p.len() != count {
            return Err(Error::Alignment {
                items: p.len(),
                types: count,
            });
        }
    }
    (0..count)
        .map(|m| {
            let epsilon = if m == 0 {
                lo
            } else if m + 1 == count {
                hi
            } else {
                lo + (hi - lo) * m as f64 / (count - 1) as f64
            };
            let p = probabilities.map_or(1.0 / count as f64, |p| p[m]);
            TypeProfile::new(m + 1, epsilon, psi, p, cpu_cycles, samples)
        })
        .collect()
}

/// Position of the item an owner of type `ty` picks: highest utility, ties
/// (within [`TIE_TOLERANCE`]) going to the larger index.
pub fn owner_select_item(
    items: &[ContractItem],
    ty: &TypeProfile,
    params: &SystemParams,
) -> Result<usize> {
    if items.is_empty() {
        return Err(domain("empty menu"));
    }
    let utilities = items
        .iter()
        .map(|item| owner_utility(ty, item, params))
        .collect::<Result<Vec<_>>>()?;
    let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOLERANCE * best.abs().max(1.0);
    Ok(utilities
        .iter()
        .rposition(|&u| u >= best - slack)
        .expect("maximum is attained"))
}

/// Owners per type for a population of `owners`.
pub fn owner_counts(
    types: &[TypeProfile],
    owners: usize,
    sampling: Sampling,
    seed: u64,
) -> Result<Vec<usize>> {
    let weights: Vec<f64> = types.iter().map(|t| t.probability).collect();
    let mut counts = vec![0usize; types.len()];
    match sampling {
        Sampling::Quota => {
            let exact: Vec<f64> = weights.iter().map(|p| p * owners as f64).collect();
            for (c, e) in counts.iter_mut().zip(&exact) {
                *c = e.floor() as usize;
            }
            let assigned: usize = counts.iter().sum();
            let mut order: Vec<usize> = (0..types.len()).collect();
            order.sort_by(|&a, &b| {
                let fa = exact[a] - exact[a].floor();
                let fb = exact[b] - exact[b].floor();
                fb.total_cmp(&fa).then(a.cmp(&b))
            });
            for &i in order.iter().take(owners.saturating_sub(assigned)) {
                counts[i] += 1;
            }
        }
        Sampling::Iid => {
            if owners > 0 {
                let dist = WeightedIndex::new(&weights).map_err(|e| domain(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..owners {
                    counts[dist.sample(&mut rng)] += 1;
                }
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub types: Vec<TypeProfile>,
    pub menu: ContractMenu,
    /// Expected profit over `params.population` owners.
    pub expected_profit: f64,
    /// Profit over the simulated owners and their actual choices.
    pub realized_profit: f64,
    pub owner_counts: Vec<usize>,
    /// 0-based item chosen by each type.
    pub per_type_selected_index: Vec<usize>,
    /// True when every type ends up with the bundle designed for it.
    pub assignment_realized: bool,
    /// `U_D(type, item)` for all pairs, rows by type.
    pub utilities: Vec<Vec<f64>>,
    pub baselines: Vec<StackelbergOutcome>,
    pub baseline_profits: BTreeMap<InfoRegime, f64>,
    pub feasibility: FeasibilityReport,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    let params = &config.params;
    let types = config.build_types()?;
    let menu = solver::solve(&types, params, &config.solver)?;
    let feasibility = oracle::assess(&menu.items, &types, params, config.tolerance)?;
    let utilities = oracle::utility_matrix(&menu.items, &types, params)?;

    let per_type_selected_index = types
        .iter()
        .map(|ty| owner_select_item(&menu.items, ty, params))
        .collect::<Result<Vec<_>>>()?;
    let assignment_realized = per_type_selected_index
        .iter()
        .enumerate()
        .all(|(n, &pick)| menu.items[pick] == menu.items[n]);

    let owner_counts = owner_counts(&types, config.owners(), config.sampling, config.seed)?;
    let mut realized_profit = 0.0;
    for ((ty, &pick), &count) in types
        .iter()
        .zip(&per_type_selected_index)
        .zip(&owner_counts)
    {
        if count > 0 {
            realized_profit += count as f64 * publisher_profit_one(ty, &menu.items[pick], params)?;
        }
    }

    let baselines = vec![
        stackelberg::solve_symmetric(&types, params, &config.solver)?,
        stackelberg::solve_asymmetric(&types, params, &config.solver)?,
    ];
    let baseline_profits = baselines
        .iter()
        .map(|b| (b.info_regime, b.publisher_profit))
        .collect();

    Ok(ScenarioReport {
        expected_profit: menu.publisher_profit,
        types,
        menu,
        realized_profit,
        owner_counts,
        per_type_selected_index,
        assignment_realized,
        utilities,
        baselines,
        baseline_profits,
        feasibility,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub upper_limit: f64,
    pub expected_profit: f64,
    pub realized_profit: f64,
    pub feasibility: FeasibilityReport,
}

/// Re-solves the scenario with the quality grid's upper end set to each limit.
pub fn accuracy_sweep(config: &ScenarioConfig, upper_limits: &[f64]) -> Result<Vec<AccuracyRow>> {
    check_limits(upper_limits, config.accuracy_range[0])?;
    upper_limits
        .par_iter()
        .map(|&upper| {
            let mut scenario = config.clone();
            scenario.accuracy_range[1] = upper;
            scenario.sweep = None;
            let report = run_scenario(&scenario)?;
            Ok(AccuracyRow {
                upper_limit: upper,
                expected_profit: report.expected_profit,
                realized_profit: report.realized_profit,
                feasibility: report.feasibility,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeCountRow {
    pub type_count: usize,
    pub contract_profit: f64,
    pub symmetric_profit: f64,
    pub asymmetric_profit: f64,
    pub feasibility: FeasibilityReport,
}

/// One scenario per type count, with uniform type probabilities.
pub fn type_count_sweep(
    config: &ScenarioConfig,
    type_counts: &[usize],
) -> Result<Vec<TypeCountRow>> {
    check_counts(type_counts)?;
    type_counts
        .par_iter()
        .map(|&m| {
            let mut scenario = config.clone();
            scenario.type_count = m;
            scenario.type_probabilities = None;
            scenario.sweep = None;
            let report = run_scenario(&scenario)?;
            Ok(TypeCountRow {
                type_count: m,
                contract_profit: report.expected_profit,
                symmetric_profit: report.baseline_profits[&InfoRegime::Symmetric],
                asymmetric_profit: report.baseline_profits[&InfoRegime::Asymmetric],
                feasibility: report.feasibility,
            })
        })
        .collect()
}
