use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::beliefs::{message_posteriors, Policy, Prior};
use super::joint::{locate, JointDensityCP, Marginal};
use crate::error::{Error, Result};
use crate::grid::PiecewiseLinear;

const CHUNK: usize = 8192;

/// Empirical share of supporters in a simulated population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationResult {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

fn sample_marginal(m: &Marginal, rng: &mut ChaCha8Rng) -> f64 {
    match m {
        Marginal::PointMass(x) => *x,
        Marginal::Density(d) => d.quantile(rng.random::<f64>()),
    }
}

fn sample_receiver(f: &JointDensityCP, prior_marginal: Option<&PiecewiseLinear>, rng: &mut ChaCha8Rng) -> (f64, f64) {
    match f {
        JointDensityCP::Product { cost, prior } => (sample_marginal(cost, rng), sample_marginal(prior, rng)),
        JointDensityCP::Grid(g) => {
            let pm = prior_marginal.expect("grid joints carry a prior marginal");
            let p = pm.inverse_cdf(rng.random::<f64>());
            let (_, n_p) = g.dims();
            let (j, t) = locate(p, n_p);
            // the conditional cost density at p mixes the two neighbouring rows
            let rows = g.rows();
            let lo = (1.0 - t) * rows[j].total();
            let hi = t * rows[j + 1].total();
            let row = if rng.random::<f64>() * (lo + hi) < lo { &rows[j] } else { &rows[j + 1] };
            (row.inverse_cdf(rng.random::<f64>()), p)
        }
    }
}

fn simulate_chunk(f: &JointDensityCP, policy: &Policy, p_s: f64, seed: u64, chunk: u64, n: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let prior_marginal = match f {
        JointDensityCP::Grid(g) => Some(g.prior_marginal()),
        _ => None,
    };
    let mut support = 0;
    for _ in 0..n {
        let (c, p) = sample_receiver(f, prior_marginal.as_ref(), &mut rng);
        let good_state = rng.random::<f64>() < p_s;
        let s = if good_state { policy.sigma1 } else { policy.sigma0 };
        let good_message = rng.random::<f64>() < s;
        let (after_good, after_bad) = message_posteriors(policy, p);
        let posterior = if good_message { after_good } else { after_bad };
        if c <= posterior {
            support += 1;
        }
    }
    support
}

/// Draw `n_agents` receivers from `f`, a state from `p_s` and a message from
/// the policy for each, and report the share that supports. Agents are
/// simulated in fixed-size chunks, each with its own stream of a seeded
/// generator, so the result does not depend on the number of threads.
pub fn simulate_population(
    f: &JointDensityCP,
    policy: &Policy,
    p_s: Prior,
    n_agents: usize,
    seed: u64,
) -> Result<SimulationResult> {
    if n_agents < 1000 {
        return Err(Error::Precondition(format!("simulation needs at least 1000 agents, got {n_agents}")));
    }
    f.check_normalized()?;
    let chunks = n_agents.div_ceil(CHUNK);
    let counts: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK.min(n_agents - k * CHUNK);
            simulate_chunk(f, policy, p_s.value(), seed, k as u64, len)
        })
        .collect();
    let total: u64 = counts.iter().sum();
    let mean = total as f64 / n_agents as f64;
    let std_error = (mean * (1.0 - mean) / n_agents as f64).sqrt();
    Ok(SimulationResult { mean, std_error, n: n_agents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{GridDensity1D, ParametricDensity1D, DEFAULT_GRID_N};
    use crate::persuasion::joint::GridJoint;
    use crate::persuasion::partition::sender_payoff;

    fn beta(a: f64, b: f64) -> GridDensity1D {
        ParametricDensity1D::beta(a, b).unwrap().tabulate(DEFAULT_GRID_N).unwrap()
    }

    #[test]
    fn fully_informative_reveals_state() {
        let f = JointDensityCP::independent(beta(2.0, 3.0), beta(3.0, 2.0)).unwrap();
        let r = simulate_population(&f, &Policy::fully_informative(), Prior::new(0.4).unwrap(), 20_000, 7).unwrap();
        assert!((r.mean - 0.4).abs() < 3.0 * r.std_error);
    }

    #[test]
    fn uninformative_gives_ex_ante_supporters() {
        let f = JointDensityCP::independent(beta(2.0, 3.0), beta(3.0, 2.0)).unwrap();
        let r = simulate_population(&f, &Policy::uninformative(0.5).unwrap(), Prior::new(0.4).unwrap(), 20_000, 3).unwrap();
        assert!((r.mean - f.ex_ante_supporters()).abs() < 3.0 * r.std_error);
    }

    #[test]
    fn matches_quadrature_on_grid_joint() {
        let g = GridJoint::from_fn(101, 101, |c, p| (1.0 + c) * p * (1.0 - p)).unwrap();
        let f = JointDensityCP::Grid(g);
        let pol = Policy::new(0.25, 0.8).unwrap();
        let p_s = Prior::new(0.55).unwrap();
        let r = simulate_population(&f, &pol, p_s, 50_000, 11).unwrap();
        assert!((r.mean - sender_payoff(&pol, &f, p_s)).abs() < 3.0 * (0.25f64 / 50_000.0).sqrt());
    }

    #[test]
    fn reproducible_for_a_seed() {
        let f = JointDensityCP::common_prior(beta(2.0, 2.0), 0.5).unwrap();
        let pol = Policy::new(1.0 / 3.0, 1.0).unwrap();
        let p_s = Prior::new(0.5).unwrap();
        let a = simulate_population(&f, &pol, p_s, 30_000, 42).unwrap();
        let b = simulate_population(&f, &pol, p_s, 30_000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_population(&f, &pol, p_s, 30_000, 43).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn preconditions() {
        let f = JointDensityCP::common_prior(beta(2.0, 2.0), 0.5).unwrap();
        let pol = Policy::fully_informative();
        let p_s = Prior::new(0.5).unwrap();
        assert!(matches!(simulate_population(&f, &pol, p_s, 999, 1), Err(Error::Precondition(_))));
        let raw = JointDensityCP::Grid(GridJoint::new(3, 3, vec![3.0; 9]).unwrap());
        assert!(matches!(simulate_population(&raw, &pol, p_s, 1000, 1), Err(Error::Validation(_))));
    }
}
