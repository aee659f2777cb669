#![allow(dead_code)]

use fedcontract::market::build_types;
use fedcontract::{SystemParams, TypeProfile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn section_four(m: usize, upper: f64) -> (Vec<TypeProfile>, SystemParams) {
    let types = build_types(m, [0.20, upper], 1.0, 5.0, 20.0, None).unwrap();
    (types, SystemParams::default())
}

pub fn random_probabilities(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // put the rounding residue on the largest entry
    let residue = 1.0 - p.iter().sum::<f64>();
    let big = (0..m).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    p[big] += residue;
    p
}

/// Random market with `m` types; the budget is sometimes generous and
/// sometimes tight enough to bind.
pub fn random_instance(rng: &mut ChaCha8Rng, m: usize) -> (Vec<TypeProfile>, SystemParams) {
    let lo = rng.gen_range(0.05..0.5);
    let hi = rng.gen_range(lo + 0.05..0.97);
    let psi = rng.gen_range(0.5..3.0);
    let cycles = rng.gen_range(1.0..10.0);
    let samples = rng.gen_range(5.0..50.0);
    let p = random_probabilities(rng, m);
    let types = build_types(m, [lo, hi], psi, cycles, samples, Some(&p)).unwrap();
    let population = rng.gen_range(10..200u64);
    let e_com = rng.gen_range(0.0..40.0);
    let mu = rng.gen_range(0.5..2.0);
    let r_max = if rng.gen_bool(0.5) {
        1e9
    } else {
        population as f64 * mu * (e_com + 1.0) * rng.gen_range(1.2..6.0)
    };
    let params = SystemParams {
        capacitance: rng.gen_range(0.02..1.0),
        iteration_coeff: psi,
        satisfaction: rng.gen_range(50.0..1000.0),
        reward_unit_cost: rng.gen_range(0.5..2.0),
        energy_weight: mu,
        t_max: rng.gen_range(200.0..1000.0),
        r_max,
        population,
        tcom_override: Some(rng.gen_range(1.0..50.0)),
        ecom_override: Some(e_com),
        ..SystemParams::default()
    };
    (types, params)
}
