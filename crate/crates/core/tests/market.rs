mod common;

use common::random_probabilities;
use fedcontract::cost::{publisher_profit_one, SystemParams};
use fedcontract::market::{
    accuracy_sweep, owner_counts, type_count_sweep, Sampling, DEFAULT_ACCURACY_LIMITS,
    DEFAULT_TYPE_COUNTS,
};
use fedcontract::{run_scenario, ScenarioConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_type_takes_its_designed_item() {
    for m in 1..=10 {
        let config = ScenarioConfig {
            type_count: m,
            ..ScenarioConfig::default()
        };
        let report = run_scenario(&config).unwrap();
        assert!(report.assignment_realized);
        assert_eq!(report.per_type_selected_index, (0..m).collect::<Vec<_>>());
        assert!(report.feasibility.all_ok());
    }
}

#[test]
fn quota_sampling_reproduces_expected_profit() {
    let report = run_scenario(&ScenarioConfig::default()).unwrap();
    assert_eq!(report.owner_counts, vec![10; 10]);
    let gap = (report.realized_profit - report.expected_profit).abs();
    assert!(gap <= 1e-9 * report.expected_profit.abs(), "{gap}");
}

#[test]
fn no_owners_no_profit() {
    for sampling in [Sampling::Quota, Sampling::Iid] {
        let config = ScenarioConfig {
            owner_count: Some(0),
            sampling,
            ..ScenarioConfig::default()
        };
        let report = run_scenario(&config).unwrap();
        assert_eq!(report.realized_profit, 0.0);
        assert!(report.owner_counts.iter().all(|&c| c == 0));
    }
}

#[test]
fn large_iid_population_matches_expectation() {
    let config = ScenarioConfig {
        owner_count: Some(10_000),
        sampling: Sampling::Iid,
        seed: 42,
        ..ScenarioConfig::default()
    };
    let report = run_scenario(&config).unwrap();
    assert_eq!(report.owner_counts.iter().sum::<usize>(), 10_000);
    let per_owner_realized = report.realized_profit / 10_000.0;
    let per_owner_expected = report.expected_profit / config.params.population as f64;
    let gap = (per_owner_realized - per_owner_expected).abs() / per_owner_expected.abs();
    assert!(gap <= 0.02, "relative gap {gap}");
}

#[test]
fn scenarios_are_deterministic() {
    let config = ScenarioConfig {
        sampling: Sampling::Iid,
        seed: 9,
        ..ScenarioConfig::default()
    };
    let a = serde_json::to_string(&run_scenario(&config).unwrap()).unwrap();
    let b = serde_json::to_string(&run_scenario(&config).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = ScenarioConfig {
        seed: 10,
        ..config.clone()
    };
    let c = run_scenario(&other).unwrap();
    assert_ne!(
        serde_json::to_string(&c.owner_counts).unwrap(),
        serde_json::to_string(&run_scenario(&config).unwrap().owner_counts).unwrap()
    );
}

#[test]
fn realized_profit_is_sum_over_owners() {
    let config = ScenarioConfig {
        owner_count: Some(37),
        sampling: Sampling::Iid,
        seed: 3,
        ..ScenarioConfig::default()
    };
    let report = run_scenario(&config).unwrap();
    let mut total = 0.0;
    for (n, &count) in report.owner_counts.iter().enumerate() {
        let item = &report.menu.items[report.per_type_selected_index[n]];
        total +=
            count as f64 * publisher_profit_one(&report.types[n], item, &config.params).unwrap();
    }
    assert!((total - report.realized_profit).abs() <= 1e-9 * total.abs().max(1.0));
}

#[test]
fn utility_rows_peak_on_the_diagonal() {
    let report = run_scenario(&ScenarioConfig::default()).unwrap();
    for row in [2usize, 4, 6, 8] {
        let u = &report.utilities[row - 1];
        assert!(u[row - 1] >= 0.0);
        let best = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(u[row - 1] >= best - 1e-9, "row {row}");
    }
}

#[test]
fn profit_falls_as_the_accuracy_ceiling_drops() {
    let rows = accuracy_sweep(&ScenarioConfig::default(), &DEFAULT_ACCURACY_LIMITS).unwrap();
    assert_eq!(rows.len(), 5);
    for w in rows.windows(2) {
        assert!(w[1].expected_profit <= w[0].expected_profit);
    }
    assert!(rows[1].expected_profit < rows[0].expected_profit);
    assert!(rows[4].expected_profit < rows[3].expected_profit);
    assert!(rows.iter().all(|r| r.feasibility.all_ok()));
}

#[test]
fn contract_beats_stackelberg_and_grows_with_types() {
    let rows = type_count_sweep(&ScenarioConfig::default(), &DEFAULT_TYPE_COUNTS).unwrap();
    assert_eq!(rows.len(), 9);
    for w in rows.windows(2) {
        assert!(w[1].contract_profit >= w[0].contract_profit);
    }
    for r in &rows {
        assert!(r.contract_profit >= r.asymmetric_profit, "{r:?}");
        assert!(r.symmetric_profit >= r.asymmetric_profit, "{r:?}");
    }
}

#[test]
fn sweep_rejects_bad_inputs() {
    let config = ScenarioConfig::default();
    assert!(accuracy_sweep(&config, &[0.8, 0.9]).is_err());
    assert!(accuracy_sweep(&config, &[0.1]).is_err());
    assert!(type_count_sweep(&config, &[1, 2]).is_err());
    assert!(type_count_sweep(&config, &[5, 3]).is_err());
}

#[test]
fn larger_budget_never_hurts() {
    let mut last = f64::NEG_INFINITY;
    for r_max in [3000.0, 4000.0, 5000.0, 10_000.0] {
        let config = ScenarioConfig {
            params: SystemParams {
                r_max,
                ..SystemParams::default()
            },
            ..ScenarioConfig::default()
        };
        let report = run_scenario(&config).unwrap();
        assert!(report.expected_profit >= last);
        last = report.expected_profit;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn designed_assignment_holds_for_any_distribution(seed in any::<u64>(), m in 1usize..8, owners in 0usize..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_probabilities(&mut rng, m);
        let config = ScenarioConfig {
            type_count: m,
            type_probabilities: Some(p),
            owner_count: Some(owners),
            sampling: Sampling::Iid,
            seed,
            ..ScenarioConfig::default()
        };
        let report = run_scenario(&config).unwrap();
        prop_assert!(report.assignment_realized);
        prop_assert_eq!(report.owner_counts.iter().sum::<usize>(), owners);
    }

    #[test]
    fn quota_counts_are_exact(m in 1usize..12, owners in 0usize..1000) {
        let types = fedcontract::market::build_types(m, [0.2, 0.9], 1.0, 5.0, 20.0, None).unwrap();
        let counts = owner_counts(&types, owners, Sampling::Quota, 0).unwrap();
        prop_assert_eq!(counts.iter().sum::<usize>(), owners);
        let lo = owners / m;
        prop_assert!(counts.iter().all(|&c| c == lo || c == lo + 1));
    }
}
