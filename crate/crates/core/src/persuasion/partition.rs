use serde::Serialize;

use super::beliefs::{message_posteriors, Policy, Prior};
use super::joint::{JointDensityCP, Marginal};
use crate::grid;

/// Receiver thresholds under a policy, tabulated on a cost grid. A receiver
/// `(c, p)` opposes after both messages when `p < p_lo(c)`, supports after
/// both when `p >= p_hi(c)`, and follows the message in between.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverPartition {
    policy: Policy,
    c: Vec<f64>,
    p_lo: Vec<f64>,
    p_hi: Vec<f64>,
}

/// Masses of never-supporters, compliers and always-supporters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionMeasures {
    pub never: f64,
    pub compliers: f64,
    pub always: f64,
}

impl PartitionMeasures {
    pub fn total(&self) -> f64 {
        self.never + self.compliers + self.always
    }
}

fn threshold_lo(policy: &Policy, c: f64) -> f64 {
    let (s0, s1) = (policy.sigma0, policy.sigma1);
    if s0 == 0.0 {
        0.0
    } else if s0 == s1 {
        c
    } else {
        c * s0 / (c * s0 + (1.0 - c) * s1)
    }
}

fn threshold_hi(policy: &Policy, c: f64) -> f64 {
    let (s0, s1) = (policy.sigma0, policy.sigma1);
    if s1 == 1.0 {
        1.0
    } else if s0 == s1 {
        c
    } else {
        c * (1.0 - s0) / (c * (1.0 - s0) + (1.0 - c) * (1.0 - s1))
    }
}

impl ReceiverPartition {
    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn p_lo(&self) -> &[f64] {
        &self.p_lo
    }

    pub fn p_hi(&self) -> &[f64] {
        &self.p_hi
    }

    /// Lowest prior at which a receiver with cost `c` complies.
    pub fn p_lo_at(&self, c: f64) -> f64 {
        threshold_lo(&self.policy, c)
    }

    /// Prior at which a receiver with cost `c` supports regardless of the message.
    pub fn p_hi_at(&self, c: f64) -> f64 {
        threshold_hi(&self.policy, c)
    }
}

/// Tabulate the thresholds on `n` uniform cost nodes. An uninformative policy
/// sets both thresholds to `c`, except that a message never sent is read as
/// revealing the state: under `(1, 1)` nobody supports after the bad message
/// (`p_hi = 1`) and under `(0, 0)` everybody supports after the good one
/// (`p_lo = 0`).
pub fn partition(policy: &Policy, n: usize) -> ReceiverPartition {
    let c = grid::uniform_nodes(n.max(2));
    let p_lo = c.iter().map(|&x| threshold_lo(policy, x)).collect();
    let p_hi = c.iter().map(|&x| threshold_hi(policy, x)).collect();
    ReceiverPartition { policy: *policy, c, p_lo, p_hi }
}

/// Integrate the joint density over the three regions of the partition.
pub fn partition_measures(part: &ReceiverPartition, f: &JointDensityCP) -> PartitionMeasures {
    let policy = part.policy;
    let (never, always) = match f {
        JointDensityCP::Product { cost: Marginal::Density(cd), prior: Marginal::PointMass(p) } => {
            let (good, bad) = message_posteriors(&policy, *p);
            (cd.integral() - cd.cdf(good), cd.cdf(bad))
        }
        JointDensityCP::Product { cost: Marginal::PointMass(c), prior: Marginal::Density(pd) } => {
            (pd.cdf(part.p_lo_at(*c)), pd.integral() - pd.cdf(part.p_hi_at(*c)))
        }
        JointDensityCP::Product { cost: Marginal::Density(cd), prior: Marginal::Density(pd) } => {
            let w = grid::trapezoid_weights(cd.len());
            let total = pd.integral();
            let mut acc = (0.0, 0.0);
            for ((c, fc), w) in grid::uniform_nodes(cd.len()).into_iter().zip(cd.values()).zip(w) {
                acc.0 += w * fc * pd.cdf(part.p_lo_at(c));
                acc.1 += w * fc * (total - pd.cdf(part.p_hi_at(c)));
            }
            acc
        }
        JointDensityCP::Grid(g) => {
            let (n_c, _) = g.dims();
            let w = grid::trapezoid_weights(n_c);
            let mut acc = (0.0, 0.0);
            for ((c, col), w) in grid::uniform_nodes(n_c).into_iter().zip(g.cols()).zip(w) {
                acc.0 += w * col.cdf(part.p_lo_at(c));
                acc.1 += w * (col.total() - col.cdf(part.p_hi_at(c)));
            }
            acc
        }
        JointDensityCP::Product { .. } => unreachable!("rejected at construction"),
    };
    let mass = f.mass();
    PartitionMeasures { never, compliers: mass - never - always, always }
}

/// Expected share of supporters: compliers act on the good message, which the
/// sender expects with probability `p_s sigma1 + (1 - p_s) sigma0`.
pub fn sender_payoff(policy: &Policy, f: &JointDensityCP, p_s: Prior) -> f64 {
    let m = partition_measures(&partition(policy, 2), f);
    payoff_from_measures(policy, &m, p_s)
}

pub(crate) fn payoff_from_measures(policy: &Policy, m: &PartitionMeasures, p_s: Prior) -> f64 {
    m.compliers * policy.good_message_prob(p_s.value()) + m.always
}
