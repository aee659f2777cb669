mod common;

use common::random_instance;
use fedcontract::market::build_types;
use fedcontract::oracle::{self, brute_force_solve, grid_resolution_bound, oracle_grid};
use fedcontract::solver::{self, solve_stationary};
use fedcontract::{Error, SolverOptions, SystemParams, TypeProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: usize = 200;

/// Returns the gap and the allowance, or None when the instance has no
/// feasible menu at all.
fn compare(types: &[TypeProfile], params: &SystemParams) -> Option<(f64, f64)> {
    let menu = match solver::solve(types, params, &SolverOptions::default()) {
        Ok(menu) => menu,
        Err(Error::BudgetInfeasible { .. }) => {
            assert!(matches!(
                brute_force_solve(types, params, GRID),
                Err(Error::BudgetInfeasible { .. })
            ));
            return None;
        }
        Err(e) => panic!("{e}"),
    };
    let grid_menu = brute_force_solve(types, params, GRID).unwrap();
    assert!(oracle::assess(&grid_menu.items, types, params, 1e-9)
        .unwrap()
        .all_ok());
    let grid = oracle_grid(types, params, GRID).unwrap();
    let bound = grid_resolution_bound(
        &menu.frequencies(),
        menu.publisher_profit,
        types,
        params,
        &grid,
    )
    .unwrap();
    let allowance = bound.max(1e-9);
    // the grid can never beat the continuous optimum
    assert!(
        grid_menu.publisher_profit
            <= menu.publisher_profit + 1e-9 * menu.publisher_profit.abs().max(1.0)
    );
    Some((
        (menu.publisher_profit - grid_menu.publisher_profit).abs(),
        allowance,
    ))
}

#[test]
fn random_instances_match_the_grid() {
    for m in 1..=3 {
        let mut compared = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 * m as u64 + seed);
            let (types, params) = random_instance(&mut rng, m);
            if let Some((gap, allowance)) = compare(&types, &params) {
                assert!(
                    gap <= allowance,
                    "m {m} seed {seed}: gap {gap} allowance {allowance}"
                );
                compared += 1;
            }
        }
        assert!(compared >= 10, "m {m}: only {compared} feasible instances");
    }
}

/// Nearly all mass on one type drives its first-best frequency above the
/// next type's virtual optimum.
fn inverting_instance(rng: &mut ChaCha8Rng, m: usize) -> (Vec<TypeProfile>, SystemParams) {
    let (_, params) = random_instance(rng, m);
    let params = SystemParams {
        r_max: 1e12,
        ..params
    };
    let p: Vec<f64> = match m {
        2 => vec![0.97, 0.03],
        3 => vec![0.49, 0.02, 0.49],
        _ => unreachable!(),
    };
    let lo = rng.gen_range(0.1..0.3);
    let types = build_types(
        m,
        [lo, lo + 0.6],
        params.iteration_coeff,
        5.0,
        20.0,
        Some(&p),
    )
    .unwrap();
    (types, params)
}

#[test]
fn ironing_instances_match_the_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    for _ in 0..200 {
        if checked == 10 {
            break;
        }
        let m = 2 + checked % 2;
        let (types, params) = inverting_instance(&mut rng, m);
        let solo: Vec<f64> = (0..m)
            .map(|n| solve_stationary(0.0, n, &types, &params, &SolverOptions::default()).unwrap())
            .collect();
        if solo.windows(2).all(|w| w[0] <= w[1]) {
            continue;
        }
        let menu = solver::solve(&types, &params, &SolverOptions::default()).unwrap();
        assert!(!menu.ironed_segments.is_empty());
        let (gap, allowance) = compare(&types, &params).unwrap();
        assert!(gap <= allowance, "gap {gap} allowance {allowance}");
        checked += 1;
    }
    assert_eq!(checked, 10);
}
