//! Time, energy, type, profit and utility formulas of the federated learning
//! market. Every other module goes through these functions.
//!
//! All quantities are dimensionless toy units. Logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Global constants of the market. Every owner shares one wireless
/// environment, so bandwidth, power and channel gain are scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    pub bandwidth: f64,
    pub tx_power: f64,
    pub channel_gain: f64,
    pub noise: f64,
    /// Size of one local model update.
    pub update_size: f64,
    /// Effective capacitance of the computing chipset.
    pub capacitance: f64,
    /// Iteration coefficient ψ linking quality to the type value.
    pub iteration_coeff: f64,
    /// Publisher satisfaction weight w.
    pub satisfaction: f64,
    /// Publisher cost per unit of reward l.
    pub reward_unit_cost: f64,
    /// Owner weight on energy consumption μ.
    pub energy_weight: f64,
    pub t_max: f64,
    pub r_max: f64,
    pub population: u64,
    /// Communication time per update; replaces the rate-derived value when set.
    pub tcom_override: Option<f64>,
    /// Communication energy per update; replaces the rate-derived value when set.
    pub ecom_override: Option<f64>,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            bandwidth: 1.0,
            tx_power: 2.0,
            channel_gain: 1.0,
            noise: 1.0,
            update_size: 10.0,
            capacitance: 0.1,
            iteration_coeff: 1.0,
            satisfaction: 500.0,
            reward_unit_cost: 1.0,
            energy_weight: 1.0,
            t_max: 600.0,
            r_max: 10_000.0,
            population: 100,
            tcom_override: Some(10.0),
            ecom_override: Some(20.0),
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth", self.bandwidth),
            ("tx_power", self.tx_power),
            ("channel_gain", self.channel_gain),
            ("noise", self.noise),
            ("update_size", self.update_size),
            ("capacitance", self.capacitance),
            ("iteration_coeff", self.iteration_coeff),
            ("satisfaction", self.satisfaction),
            ("reward_unit_cost", self.reward_unit_cost),
            ("energy_weight", self.energy_weight),
            ("t_max", self.t_max),
            ("r_max", self.r_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(domain(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if self.population == 0 {
            return Err(domain("population must be > 0"));
        }
        for (name, value) in [
            ("tcom_override", self.tcom_override),
            ("ecom_override", self.ecom_override),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(domain(format!("{name} must be finite and >= 0, got {v}")));
                }
            }
        }
        let t_com = self.comm_time()?;
        if self.t_max <= t_com {
            return Err(Error::Infeasible(format!(
                "t_max {} does not exceed communication time {t_com}",
                self.t_max
            )));
        }
        Ok(())
    }

    pub fn rate(&self) -> Result<f64> {
        transmission_rate(self.bandwidth, self.tx_power, self.channel_gain, self.noise)
    }

    pub fn comm_time(&self) -> Result<f64> {
        match self.tcom_override {
            Some(t) => Ok(t),
            None => transmission_time(self.update_size, self.rate()?),
        }
    }

    pub fn comm_energy(&self) -> Result<f64> {
        match self.ecom_override {
            Some(e) => Ok(e),
            None => communication_energy(self.update_size, self.rate()?, self.tx_power),
        }
    }

    /// Time left for local computation once the upload is accounted for.
    pub fn compute_window(&self) -> Result<f64> {
        Ok(self.t_max - self.comm_time()?)
    }
}

/// One data-owner type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeProfile {
    /// 1-based rank within its type set.
    pub index: usize,
    pub epsilon: f64,
    pub theta: f64,
    pub probability: f64,
    pub cpu_cycles: f64,
    pub samples: f64,
}

impl TypeProfile {
    pub fn new(
        index: usize,
        epsilon: f64,
        psi: f64,
        probability: f64,
        cpu_cycles: f64,
        samples: f64,
    ) -> Result<Self> {
        let theta = type_from_quality(epsilon, psi)?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(domain(format!(
                "probability must lie in [0,1], got {probability}"
            )));
        }
        positive("cpu_cycles", cpu_cycles)?;
        positive("samples", samples)?;
        Ok(TypeProfile {
            index,
            epsilon,
            theta,
            probability,
            cpu_cycles,
            samples,
        })
    }

    /// Local iterations per update, ψ/θ.
    pub fn iterations(&self, psi: f64) -> f64 {
        psi / self.theta
    }

    pub fn workload(&self) -> f64 {
        self.cpu_cycles * self.samples
    }
}

/// One (cpu frequency, reward) bundle of a menu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractItem {
    pub cpu_freq: f64,
    pub reward: f64,
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "{name} must be finite and > 0, got {value}"
        )))
    }
}

fn quality(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("quality must lie in (0,1), got {epsilon}")))
    }
}

/// Iterations of one local update, ln(1/ε).
pub fn local_iterations(epsilon: f64) -> Result<f64> {
    quality(epsilon)?;
    Ok(-epsilon.ln())
}

/// θ = ψ / ln(1/ε).
pub fn type_from_quality(epsilon: f64, psi: f64) -> Result<f64> {
    positive("psi", psi)?;
    Ok(psi / local_iterations(epsilon)?)
}

pub fn computation_time(cycles: f64, samples: f64, freq: f64) -> Result<f64> {
    positive("cpu_cycles", cycles)?;
    positive("samples", samples)?;
    positive("cpu_freq", freq)?;
    Ok(cycles * samples / freq)
}

pub fn computation_energy(zeta: f64, cycles: f64, samples: f64, freq: f64) -> Result<f64> {
    positive("capacitance", zeta)?;
    positive("cpu_cycles", cycles)?;
    positive("samples", samples)?;
    positive("cpu_freq", freq)?;
    Ok(zeta * cycles * samples * freq * freq)
}

/// Shannon rate B ln(1 + ρh/N0).
pub fn transmission_rate(bandwidth: f64, power: f64, gain: f64, noise: f64) -> Result<f64> {
    positive("bandwidth", bandwidth)?;
    positive("tx_power", power)?;
    positive("channel_gain", gain)?;
    positive("noise", noise)?;
    Ok(bandwidth * (power * gain / noise).ln_1p())
}

pub fn transmission_time(update_size: f64, rate: f64) -> Result<f64> {
    positive("update_size", update_size)?;
    positive("rate", rate)?;
    Ok(update_size / rate)
}

pub fn communication_energy(update_size: f64, rate: f64, power: f64) -> Result<f64> {
    positive("tx_power", power)?;
    Ok(transmission_time(update_size, rate)? * power)
}

/// Wall time of one global iteration for an owner of `ty` delivering `item`.
pub fn total_iteration_time(
    ty: &TypeProfile,
    item: &ContractItem,
    params: &SystemParams,
) -> Result<f64> {
    let compute = computation_time(ty.cpu_cycles, ty.samples, item.cpu_freq)?;
    Ok(ty.iterations(params.iteration_coeff) * compute + params.comm_time()?)
}

pub fn total_iteration_energy(
    ty: &TypeProfile,
    item: &ContractItem,
    params: &SystemParams,
) -> Result<f64> {
    let compute = computation_energy(params.capacitance, ty.cpu_cycles, ty.samples, item.cpu_freq)?;
    Ok(ty.iterations(params.iteration_coeff) * compute + params.comm_energy()?)
}

/// Publisher profit from one owner: w ln(T_max − T_t) − l R.
pub fn publisher_profit_one(
    ty: &TypeProfile,
    item: &ContractItem,
    params: &SystemParams,
) -> Result<f64> {
    let time = total_iteration_time(ty, item, params)?;
    if time >= params.t_max {
        return Err(Error::InfeasibleTime {
            time,
            t_max: params.t_max,
        });
    }
    Ok(params.satisfaction * (params.t_max - time).ln() - params.reward_unit_cost * item.reward)
}

/// Owner utility R − μ E_t.
pub fn owner_utility(ty: &TypeProfile, item: &ContractItem, params: &SystemParams) -> Result<f64> {
    Ok(item.reward - params.energy_weight * total_iteration_energy(ty, item, params)?)
}
