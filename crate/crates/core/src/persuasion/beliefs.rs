use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The sender's prior that the state is good; shared by the representative
/// receiver.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Prior(f64);

impl Prior {
    pub fn new(p_s: f64) -> Result<Self> {
        if !(p_s > 0.0 && p_s < 1.0) {
            return Err(Error::Domain(format!("sender prior must lie in (0, 1), got {p_s}")));
        }
        Ok(Self(p_s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Probabilities of the good message in the bad (`sigma0`) and good
/// (`sigma1`) states, labelled so that `sigma0 <= sigma1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub sigma0: f64,
    pub sigma1: f64,
}

impl Policy {
    pub fn new(sigma0: f64, sigma1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma0) || !(0.0..=1.0).contains(&sigma1) || sigma0 > sigma1 {
            return Err(Error::Domain(format!(
                "policy needs 0 <= sigma0 <= sigma1 <= 1, got ({sigma0}, {sigma1})"
            )));
        }
        Ok(Self { sigma0, sigma1 })
    }

    /// Accept any pair in [0, 1]^2; when `sigma0 > sigma1` the message labels
    /// are swapped, which leaves the information structure unchanged.
    pub fn relabeled(sigma0: f64, sigma1: f64) -> Result<Self> {
        if sigma0 > sigma1 {
            Self::new(1.0 - sigma0, 1.0 - sigma1)
        } else {
            Self::new(sigma0, sigma1)
        }
    }

    pub fn fully_informative() -> Self {
        Self { sigma0: 0.0, sigma1: 1.0 }
    }

    /// A policy that sends the good message with probability `s` in both states.
    pub fn uninformative(s: f64) -> Result<Self> {
        Self::new(s, s)
    }

    pub fn is_uninformative(&self) -> bool {
        self.sigma0 == self.sigma1
    }

    /// Probability of the good message under prior `p`.
    pub fn good_message_prob(&self, p: f64) -> f64 {
        p * self.sigma1 + (1.0 - p) * self.sigma0
    }
}

/// Posterior of a receiver with prior `p_r` when the representative receiver
/// (prior `p_s`) holds posterior `mu_s`.
pub fn posterior_update(p_r: f64, p_s: Prior, mu_s: f64) -> f64 {
    if mu_s <= 0.0 || mu_s >= 1.0 {
        return mu_s.clamp(0.0, 1.0);
    }
    let ps = p_s.value();
    let r = p_r / ps;
    let q = (1.0 - p_r) / (1.0 - ps);
    let num = mu_s * r;
    num / (num + (1.0 - mu_s) * q)
}

/// Largest cost at which a receiver with prior `p` supports the policy when
/// the representative posterior is `mu`.
pub fn cutoff_c(mu: f64, p: f64, p_s: Prior) -> f64 {
    posterior_update(p, p_s, mu)
}

/// `d cutoff_c / d mu`, in closed form: `r q / (mu r + (1 - mu) q)^2` with
/// `r = p / p_s` and `q = (1 - p) / (1 - p_s)`. Zero where the denominator
/// vanishes (p = 1 at mu = 0, p = 0 at mu = 1).
pub fn cutoff_c_slope(mu: f64, p: f64, p_s: Prior) -> f64 {
    let ps = p_s.value();
    let r = p / ps;
    let q = (1.0 - p) / (1.0 - ps);
    let d = mu * r + (1.0 - mu) * q;
    if d <= 0.0 {
        0.0
    } else {
        r * q / (d * d)
    }
}

/// Smallest prior at which a receiver with cost `c` supports the policy when
/// the representative posterior is `mu`.
pub fn cutoff_p(mu: f64, c: f64, p_s: Prior) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Degenerate(format!("cost cutoff needs c in (0, 1), got {c}")));
    }
    let ps = p_s.value();
    let gamma = (1.0 - c) / c * (1.0 - ps) / ps;
    Ok((1.0 - mu) / ((1.0 - mu) + mu * gamma))
}

/// Posteriors of a receiver with prior `p_r` after the good and the bad
/// message. A message that has probability zero under `p_r` is off path: the
/// good message then reveals the good state and the bad message the bad one.
pub fn message_posteriors(policy: &Policy, p_r: f64) -> (f64, f64) {
    let (s0, s1) = (policy.sigma0, policy.sigma1);
    let good_num = p_r * s1;
    let good_den = good_num + (1.0 - p_r) * s0;
    let good = if good_den > 0.0 { good_num / good_den } else { 1.0 };
    let bad_num = p_r * (1.0 - s1);
    let bad_den = bad_num + (1.0 - p_r) * (1.0 - s0);
    let bad = if bad_den > 0.0 { bad_num / bad_den } else { 0.0 };
    (good, bad)
}
