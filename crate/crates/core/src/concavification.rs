//! Optimal two-message signals: the concave envelope of the value function,
//! a general hull-based oracle, and closed forms for single-peaked and
//! single-dipped virtual densities.

use serde::Serialize;

use crate::densities::{Shape, ShapeClass};
use crate::error::{Error, Result};
use crate::persuasion::{message_posteriors, Policy, Prior, ValueTable};

/// Gap below which the envelope is taken to touch `v`.
pub const COINCIDENCE_TOL: f64 = 1e-9;
/// Band around zero inside which `y` or `z` counts as zero.
pub const ROOT_TOL: f64 = 1e-9;
/// Allowed disagreement between a closed form and the oracle on each of
/// `sigma0` and `sigma1`.
pub const POLICY_TOL: f64 = 2e-3;
/// Allowed disagreement between a closed form and the oracle on the value.
pub const VALUE_TOL: f64 = 1e-4;

const BISECTION_STEPS: usize = 60;
const BRANCH_TOL: f64 = 1e-10;

/// Upper concave envelope of a tabulated value function.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveEnvelope {
    /// Hull vertices `(mu, V)` in increasing `mu`.
    pub hull_vertices: Vec<(f64, f64)>,
    /// Grid nodes at which the envelope touches `v`.
    pub coincidence_mask: Vec<bool>,
}

impl ConcaveEnvelope {
    /// Envelope value at `mu`, linear between hull vertices.
    pub fn value_at(&self, mu: f64) -> f64 {
        let (a, b) = self.segment(mu);
        if b.0 == a.0 {
            return a.1;
        }
        a.1 + (b.1 - a.1) * (mu - a.0) / (b.0 - a.0)
    }

    /// Hull segment whose closed span contains `mu`.
    pub fn segment(&self, mu: f64) -> ((f64, f64), (f64, f64)) {
        let h = &self.hull_vertices;
        let k = h.partition_point(|&(x, _)| x < mu).clamp(1, h.len() - 1);
        (h[k - 1], h[k])
    }

    /// Slopes between consecutive hull vertices are nonincreasing.
    pub fn is_concave(&self) -> bool {
        let slopes: Vec<f64> = self.hull_vertices.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        slopes.windows(2).all(|s| s[1] <= s[0] + 1e-12 * s[0].abs().max(1.0))
    }
}

/// How a solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    ClosedFormPeaked,
    ClosedFormDipped,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::ClosedFormPeaked => "closed_form_peaked",
            Method::ClosedFormDipped => "closed_form_dipped",
        }
    }
}

/// Which uninformative policy represents "no information": the good message
/// always (`sigma = 1`) or the bad message always (`sigma = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoInfo {
    AlwaysGood,
    AlwaysBad,
}

/// An optimal signal and the split of the representative posterior it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct PersuasionSolution {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub weight_hi: f64,
    pub policy: Policy,
    pub optimal_value: f64,
    pub mu_hat: Option<f64>,
    pub shape_used: ShapeClass,
    pub method: Method,
}

#[derive(Serialize)]
struct SolutionJson {
    method: &'static str,
    mu_hat: Option<f64>,
    mu_lo: f64,
    mu_hi: f64,
    weight_hi: f64,
    sigma0: f64,
    sigma1: f64,
    value: f64,
}

impl Serialize for PersuasionSolution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SolutionJson {
            method: self.method.as_str(),
            mu_hat: self.mu_hat,
            mu_lo: self.mu_lo,
            mu_hi: self.mu_hi,
            weight_hi: self.weight_hi,
            sigma0: self.policy.sigma0,
            sigma1: self.policy.sigma1,
            value: self.optimal_value,
        }
        .serialize(s)
    }
}

impl PersuasionSolution {
    /// `|weight_hi mu_hi + (1 - weight_hi) mu_lo - p_s|`.
    pub fn bayes_residual(&self, p_s: Prior) -> f64 {
        (self.weight_hi * self.mu_hi + (1.0 - self.weight_hi) * self.mu_lo - p_s.value()).abs()
    }

    /// Largest gap between the stored split and the one the policy induces
    /// through Bayes' rule, ignoring off-path posteriors.
    pub fn policy_residual(&self, p_s: Prior) -> f64 {
        let (good, bad) = message_posteriors(&self.policy, p_s.value());
        let w = self.policy.good_message_prob(p_s.value());
        let mut r = (w - self.weight_hi).abs();
        if w > 0.0 {
            r = r.max((good - self.mu_hi).abs());
        }
        if w < 1.0 {
            r = r.max((bad - self.mu_lo).abs());
        }
        r
    }
}

/// Upper hull of the points `(mu_i, v_i)` by a monotone chain.
pub fn concave_envelope(vt: &ValueTable) -> ConcaveEnvelope {
    let (mu, v) = (vt.mu(), vt.v());
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(mu.len());
    for (&x, &y) in mu.iter().zip(v) {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b unless it lies strictly above the chord from a to the new point
            if (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    let mut env = ConcaveEnvelope { hull_vertices: hull, coincidence_mask: Vec::new() };
    env.coincidence_mask = mu.iter().zip(v).map(|(&x, &y)| env.value_at(x) - y <= COINCIDENCE_TOL).collect();
    env
}

fn no_info_solution(vt: &ValueTable, p_s: Prior, convention: NoInfo, mu_hat: Option<f64>, shape: ShapeClass, method: Method) -> PersuasionSolution {
    let ps = p_s.value();
    let (policy, mu_lo, mu_hi, weight_hi) = match convention {
        NoInfo::AlwaysGood => (Policy { sigma0: 1.0, sigma1: 1.0 }, 0.0, ps, 1.0),
        NoInfo::AlwaysBad => (Policy { sigma0: 0.0, sigma1: 0.0 }, ps, 1.0, 0.0),
    };
    PersuasionSolution { mu_lo, mu_hi, weight_hi, policy, optimal_value: vt.v_at(ps), mu_hat, shape_used: shape, method }
}

/// Policy sending the good message with total probability `weight` and
/// leaving posterior `b` after it.
fn policy_for_split(b: f64, weight: f64, p_s: f64) -> Policy {
    let s1 = (weight * b / p_s).clamp(0.0, 1.0);
    let s0 = (weight * (1.0 - b) / (1.0 - p_s)).clamp(0.0, s1);
    Policy { sigma0: s0, sigma1: s1 }
}

/// [`solve_oracle_with`] using the always-good-message convention.
pub fn solve_oracle(vt: &ValueTable, p_s: Prior) -> PersuasionSolution {
    solve_oracle_with(vt, p_s, NoInfo::AlwaysGood)
}

/// Split `p_s` between the endpoints of the envelope segment above it. Where
/// the envelope touches `v` at `p_s` no information is sent.
pub fn solve_oracle_with(vt: &ValueTable, p_s: Prior, convention: NoInfo) -> PersuasionSolution {
    let ps = p_s.value();
    let env = concave_envelope(vt);
    let shape = vt.shape();
    let big_v = env.value_at(ps);
    if big_v - vt.v_at(ps) <= COINCIDENCE_TOL {
        return no_info_solution(vt, p_s, convention, None, shape, Method::Oracle);
    }
    let ((a, va), (b, vb)) = env.segment(ps);
    let weight_hi = (ps - a) / (b - a);
    PersuasionSolution {
        mu_lo: a,
        mu_hi: b,
        weight_hi,
        policy: policy_for_split(b, weight_hi, ps),
        optimal_value: weight_hi * vb + (1.0 - weight_hi) * va,
        mu_hat: None,
        shape_used: shape,
        method: Method::Oracle,
    }
}

/// `y(mu) = h(mu) mu - v(mu)` at every node.
pub fn y_function(vt: &ValueTable) -> Vec<f64> {
    vt.mu().iter().zip(vt.h()).zip(vt.v()).map(|((m, h), v)| h * m - v).collect()
}

/// `z(mu) = h(mu) (1 - mu) - (1 - v(mu))` at every node.
pub fn z_function(vt: &ValueTable) -> Vec<f64> {
    vt.mu().iter().zip(vt.h()).zip(vt.v()).map(|((m, h), v)| h * (1.0 - m) - (1.0 - v)).collect()
}

/// Bisect `[lo, hi]` keeping `positive(lo)` true and `positive(hi)` false.
fn bisect(mut lo: f64, mut hi: f64, positive: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if positive(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn require_shape(vt: &ValueTable, ok: fn(&Shape) -> bool, what: &str) -> Result<()> {
    let shape = vt.shape().tag;
    if ok(&shape) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("virtual density must be {what}, found {shape}")))
    }
}

/// Tangency point of the envelope chord from the origin: the right end of
/// `{y >= 0}`. Returns 1 when `y` never turns negative (including `y = 0`)
/// and 0 when it is never positive.
pub fn solve_mu_hat_peaked(vt: &ValueTable) -> Result<f64> {
    require_shape(vt, Shape::is_weakly_single_peaked, "single-peaked")?;
    let y = y_function(vt);
    let mu = vt.mu();
    if y.iter().all(|v| v.abs() <= ROOT_TOL) || y.iter().all(|&v| v >= -ROOT_TOL) {
        return Ok(1.0);
    }
    let Some(i) = y.iter().rposition(|&v| v > ROOT_TOL) else {
        return Ok(0.0);
    };
    if i + 1 == y.len() {
        return Ok(1.0);
    }
    Ok(bisect(mu[i], mu[i + 1], |m| vt.h_at(m) * m - vt.v_at(m) > 0.0))
}

/// Tangency point of the envelope chord to `(1, 1)`: the right end of
/// `{z >= 0}`. Returns 0 when `z` is never positive (including `z = 0`) and 1
/// when it never turns negative.
pub fn solve_mu_hat_dipped(vt: &ValueTable) -> Result<f64> {
    require_shape(vt, Shape::is_weakly_single_dipped, "single-dipped")?;
    let z = z_function(vt);
    let mu = vt.mu();
    if z.iter().all(|v| v.abs() <= ROOT_TOL) {
        return Ok(0.0);
    }
    let Some(j) = z.iter().position(|&v| v < -ROOT_TOL) else {
        return Ok(1.0);
    };
    if j == 0 {
        return Ok(0.0);
    }
    Ok(bisect(mu[j - 1], mu[j], |m| vt.h_at(m) * (1.0 - m) - (1.0 - vt.v_at(m)) >= 0.0))
}

/// The bad message reveals the bad state and the good message leaves the
/// representative posterior at `mu_hat`. No information when `p_s >= mu_hat`.
pub fn policy_from_mu_hat_peaked(mu_hat: f64, p_s: Prior) -> Result<Policy> {
    if !(mu_hat > 0.0 && mu_hat <= 1.0) {
        return Err(Error::Degenerate(format!("peaked threshold must lie in (0, 1], got {mu_hat}")));
    }
    let ps = p_s.value();
    if ps < mu_hat - BRANCH_TOL {
        let s0 = ps * (1.0 - mu_hat) / ((1.0 - ps) * mu_hat);
        Policy::new(s0, 1.0).map_err(|e| Error::Consistency(e.to_string()))
    } else {
        Ok(Policy { sigma0: 1.0, sigma1: 1.0 })
    }
}

/// The good message reveals the good state and the bad message leaves the
/// representative posterior at `mu_hat`. No information when `p_s <= mu_hat`.
pub fn policy_from_mu_hat_dipped(mu_hat: f64, p_s: Prior) -> Result<Policy> {
    if !(0.0..1.0).contains(&mu_hat) {
        return Err(Error::Degenerate(format!("dipped threshold must lie in [0, 1), got {mu_hat}")));
    }
    let ps = p_s.value();
    if ps > mu_hat + BRANCH_TOL {
        let s1 = 1.0 - mu_hat / (1.0 - mu_hat) * (1.0 - ps) / ps;
        if !(0.0..=1.0).contains(&s1) {
            return Err(Error::Consistency(format!("dipped closed form gives sigma1 = {s1}")));
        }
        Ok(Policy { sigma0: 0.0, sigma1: s1 })
    } else {
        Ok(Policy { sigma0: 0.0, sigma1: 0.0 })
    }
}

fn closed_form_peaked(vt: &ValueTable, p_s: Prior, shape: ShapeClass) -> Result<PersuasionSolution> {
    let mu_hat = solve_mu_hat_peaked(vt)?;
    let ps = p_s.value();
    if mu_hat <= ps + BRANCH_TOL {
        return Ok(no_info_solution(vt, p_s, NoInfo::AlwaysGood, Some(mu_hat), shape, Method::ClosedFormPeaked));
    }
    let policy = policy_from_mu_hat_peaked(mu_hat, p_s)?;
    let weight_hi = ps / mu_hat;
    Ok(PersuasionSolution {
        mu_lo: 0.0,
        mu_hi: mu_hat,
        weight_hi,
        policy,
        optimal_value: weight_hi * vt.v_at(mu_hat) + (1.0 - weight_hi) * vt.v_at(0.0),
        mu_hat: Some(mu_hat),
        shape_used: shape,
        method: Method::ClosedFormPeaked,
    })
}

fn closed_form_dipped(vt: &ValueTable, p_s: Prior, shape: ShapeClass) -> Result<PersuasionSolution> {
    let mu_hat = solve_mu_hat_dipped(vt)?;
    let ps = p_s.value();
    if mu_hat >= ps - BRANCH_TOL {
        return Ok(no_info_solution(vt, p_s, NoInfo::AlwaysBad, Some(mu_hat), shape, Method::ClosedFormDipped));
    }
    let policy = policy_from_mu_hat_dipped(mu_hat, p_s)?;
    let weight_hi = (ps - mu_hat) / (1.0 - mu_hat);
    Ok(PersuasionSolution {
        mu_lo: mu_hat,
        mu_hi: 1.0,
        weight_hi,
        policy,
        optimal_value: weight_hi * vt.v_at(1.0) + (1.0 - weight_hi) * vt.v_at(mu_hat),
        mu_hat: Some(mu_hat),
        shape_used: shape,
        method: Method::ClosedFormDipped,
    })
}

/// Classify `h` and solve in closed form when it is (weakly) single-peaked or
/// single-dipped, checking the result against the oracle; otherwise return
/// the oracle solution. Monotone and flat densities use the peaked form.
pub fn solve(vt: &ValueTable, p_s: Prior) -> Result<PersuasionSolution> {
    let shape = vt.shape();
    let (sol, convention) = match shape.tag {
        Shape::Neither => return Ok(solve_oracle(vt, p_s)),
        Shape::SingleDipped => (closed_form_dipped(vt, p_s, shape)?, NoInfo::AlwaysBad),
        _ => (closed_form_peaked(vt, p_s, shape)?, NoInfo::AlwaysGood),
    };
    let oracle = solve_oracle_with(vt, p_s, convention);
    let dv = (sol.optimal_value - oracle.optimal_value).abs();
    // with a flat h every policy is optimal, so only the value is compared
    let ds = if shape.tag == Shape::Flat {
        0.0
    } else {
        (sol.policy.sigma0 - oracle.policy.sigma0).abs().max((sol.policy.sigma1 - oracle.policy.sigma1).abs())
    };
    if ds > POLICY_TOL || dv > VALUE_TOL {
        return Err(Error::Consistency(format!(
            "{} solution ({}, {}) value {} disagrees with oracle ({}, {}) value {}; refine the grid",
            sol.method.as_str(),
            sol.policy.sigma0,
            sol.policy.sigma1,
            sol.optimal_value,
            oracle.policy.sigma0,
            oracle.policy.sigma1,
            oracle.optimal_value
        )));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{GridDensity1D, ParametricDensity1D, DEFAULT_GRID_N};
    use crate::persuasion::JointDensityCP;
    use crate::persuasion::{build_value_table, partition, partition_measures, sender_payoff};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ps(p: f64) -> Prior {
        Prior::new(p).unwrap()
    }

    fn beta(a: f64, b: f64) -> GridDensity1D {
        ParametricDensity1D::beta(a, b).unwrap().tabulate(DEFAULT_GRID_N).unwrap()
    }

    fn common_prior_table(costs: GridDensity1D, p: f64) -> ValueTable {
        build_value_table(&JointDensityCP::common_prior(costs, p).unwrap(), ps(p), DEFAULT_GRID_N).unwrap()
    }

    fn beta22() -> ValueTable {
        ValueTable::from_fn(DEFAULT_GRID_N, |m| 3.0 * m * m - 2.0 * m * m * m, |m| 6.0 * m * (1.0 - m)).unwrap()
    }

    #[test]
    fn envelope_of_linear_and_concave_tables() {
        let lin = ValueTable::from_fn(101, |m| m, |_| 1.0).unwrap();
        let env = concave_envelope(&lin);
        assert!(env.coincidence_mask.iter().all(|&b| b));
        let sq = ValueTable::from_fn(101, f64::sqrt, |m| 0.5 / m.sqrt().max(1e-12)).unwrap();
        let env = concave_envelope(&sq);
        assert!(env.coincidence_mask.iter().all(|&b| b));
        assert_eq!(env.hull_vertices.len(), 101);
        assert!(env.is_concave());
    }

    #[test]
    fn envelope_of_beta22_table() {
        let vt = beta22();
        let env = concave_envelope(&vt);
        assert_eq!(env.hull_vertices[0], (0.0, 0.0));
        let (mu1, v1) = env.hull_vertices[1];
        assert_abs_diff_eq!(mu1, 0.75, epsilon = 1e-3);
        assert_abs_diff_eq!(v1, 0.84375, epsilon = 1e-3);
        for (i, &m) in vt.mu().iter().enumerate() {
            let expected = m == 0.0 || m >= 0.75 - vt.dx();
            if (m - 0.75).abs() > vt.dx() {
                assert_eq!(env.coincidence_mask[i], expected, "mu = {m}");
            }
            assert!(env.value_at(m) >= vt.v()[i] - 1e-10);
        }
        assert!(env.is_concave());
    }

    #[test]
    fn oracle_examples() {
        let sq = ValueTable::from_fn(201, f64::sqrt, |m| 0.5 / m.sqrt().max(1e-12)).unwrap();
        let s = solve_oracle(&sq, ps(0.3));
        assert!(s.policy.is_uninformative());
        assert_abs_diff_eq!(s.optimal_value, 0.3f64.sqrt(), epsilon = 1e-4);

        let convex = ValueTable::from_fn(201, |m| m * m, |m| 2.0 * m).unwrap();
        let s = solve_oracle(&convex, ps(0.3));
        assert_eq!((s.mu_lo, s.mu_hi), (0.0, 1.0));
        assert_abs_diff_eq!(s.optimal_value, 0.3, epsilon = 1e-12);
        assert_eq!(s.policy, Policy::fully_informative());

        let s = solve_oracle(&beta22(), ps(0.5));
        assert_eq!(s.mu_lo, 0.0);
        assert_abs_diff_eq!(s.mu_hi, 0.75, epsilon = 1e-3);
        assert_abs_diff_eq!(s.weight_hi, 2.0 / 3.0, epsilon = 1e-3);
        assert_abs_diff_eq!(s.optimal_value, 0.5625, epsilon = 1e-6);
        assert!(s.bayes_residual(ps(0.5)) < 1e-12);
        assert!(s.policy_residual(ps(0.5)) < 1e-9);
    }

    #[test]
    fn y_function_examples() {
        let lin = ValueTable::from_fn(101, |m| m, |_| 1.0).unwrap();
        assert!(y_function(&lin).iter().all(|y| y.abs() < 1e-15));
        let vt = common_prior_table(beta(2.0, 2.0), 0.5);
        let y = y_function(&vt);
        assert_eq!(y[0], 0.0);
        for (m, y) in vt.mu().iter().zip(&y) {
            assert_abs_diff_eq!(*y, m * m * (3.0 - 4.0 * m), epsilon = 1e-4);
        }
        // rises then falls
        let k = y.iter().enumerate().fold(0, |b, (i, v)| if *v > y[b] { i } else { b });
        assert!(y[..=k].windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(y[k..].windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn mu_hat_peaked_examples() {
        assert_abs_diff_eq!(solve_mu_hat_peaked(&beta22()).unwrap(), 0.75, epsilon = 1e-6);
        assert_abs_diff_eq!(
            solve_mu_hat_peaked(&common_prior_table(beta(2.0, 2.0), 0.5)).unwrap(),
            0.75,
            epsilon = 1e-4
        );
        // decreasing h: v concave, the threshold collapses to 0 and the oracle sends nothing
        let dec = common_prior_table(beta(1.0, 2.0), 0.4);
        assert_eq!(solve_mu_hat_peaked(&dec).unwrap(), 0.0);
        assert!(solve_oracle(&dec, ps(0.4)).policy.is_uninformative());
        let inc = common_prior_table(beta(2.0, 1.0), 0.4);
        assert_eq!(solve_mu_hat_peaked(&inc).unwrap(), 1.0);
        let lin = ValueTable::from_fn(201, |m| m, |_| 1.0).unwrap();
        assert_eq!(solve_mu_hat_peaked(&lin).unwrap(), 1.0);
        let dip = ValueTable::from_fn(201, |m| 3.0 * m - 3.0 * m * m + m * m * m, |m| 3.0 * (1.0 - m).powi(2)).unwrap();
        assert!(solve_mu_hat_peaked(&dip).is_ok());
        let u = ValueTable::from_virtual_density(&beta(0.5, 0.5)).unwrap();
        assert!(matches!(solve_mu_hat_peaked(&u), Err(Error::Precondition(_))));
    }

    #[test]
    fn policy_peaked_examples() {
        let p = policy_from_mu_hat_peaked(0.75, ps(0.5)).unwrap();
        assert_abs_diff_eq!(p.sigma0, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(p.sigma1, 1.0);
        assert_eq!(policy_from_mu_hat_peaked(1.0, ps(0.3)).unwrap(), Policy::fully_informative());
        assert_eq!(policy_from_mu_hat_peaked(0.75, ps(0.8)).unwrap(), Policy { sigma0: 1.0, sigma1: 1.0 });
        assert!(matches!(policy_from_mu_hat_peaked(0.0, ps(0.3)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mu_hat_dipped_examples() {
        let lin = ValueTable::from_fn(201, |m| m, |_| 1.0).unwrap();
        assert_eq!(solve_mu_hat_dipped(&lin).unwrap(), 0.0);
        let convex = common_prior_table(beta(2.0, 1.0), 0.4);
        assert_eq!(solve_mu_hat_dipped(&convex).unwrap(), 0.0);
        let o = solve_oracle(&convex, ps(0.4));
        assert_eq!((o.mu_lo, o.mu_hi), (0.0, 1.0));

        // reflecting v through (1/2, 1/2) maps y onto z
        let peaked = ValueTable::from_virtual_density(&beta(2.0, 3.0)).unwrap();
        let reflected = ValueTable::from_parts(
            peaked.v().iter().rev().map(|v| 1.0 - v).collect(),
            peaked.h().iter().rev().cloned().collect(),
        )
        .unwrap();
        let (y, z) = (y_function(&peaked), z_function(&reflected));
        for i in 0..z.len() {
            assert_abs_diff_eq!(z[i], y[z.len() - 1 - i], epsilon = 1e-12);
        }

        // the dipped threshold is the lower contact point of the oracle's chord to (1, 1)
        let dip = ValueTable::from_virtual_density(&beta(0.6, 0.8)).unwrap();
        let mu_hat = solve_mu_hat_dipped(&dip).unwrap();
        let o = solve_oracle(&dip, ps(0.99));
        assert_eq!(o.mu_hi, 1.0);
        assert_abs_diff_eq!(o.mu_lo, mu_hat, epsilon = 2.0 * dip.dx());
    }

    #[test]
    fn policy_dipped_examples() {
        assert_eq!(policy_from_mu_hat_dipped(0.0, ps(0.4)).unwrap(), Policy::fully_informative());
        assert_eq!(policy_from_mu_hat_dipped(0.5, ps(0.25)).unwrap(), Policy { sigma0: 0.0, sigma1: 0.0 });
        let p = policy_from_mu_hat_dipped(0.5, ps(0.75)).unwrap();
        assert_eq!(p.sigma0, 0.0);
        assert_abs_diff_eq!(p.sigma1, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(message_posteriors(&p, 0.75).1, 0.5, epsilon = 1e-15);
        assert!(policy_from_mu_hat_dipped(1.0, ps(0.5)).is_err());
    }

    #[test]
    fn solve_benchmark() {
        let f = JointDensityCP::common_prior(beta(2.0, 2.0), 0.5).unwrap();
        let vt = build_value_table(&f, ps(0.5), DEFAULT_GRID_N).unwrap();
        let s = solve(&vt, ps(0.5)).unwrap();
        assert_eq!(s.method, Method::ClosedFormPeaked);
        assert_abs_diff_eq!(s.mu_hat.unwrap(), 0.75, epsilon = 1e-4);
        assert_abs_diff_eq!(s.policy.sigma0, 1.0 / 3.0, epsilon = 2e-3);
        assert_eq!(s.policy.sigma1, 1.0);
        assert_abs_diff_eq!(s.optimal_value, 0.5625, epsilon = 1e-4);
        assert_abs_diff_eq!(sender_payoff(&s.policy, &f, ps(0.5)), s.optimal_value, epsilon = 1e-4);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["method"], "closed_form_peaked");
        assert_eq!(json["sigma1"], 1.0);
    }

    #[test]
    fn solve_single_dipped() {
        let vt = ValueTable::from_virtual_density(&ParametricDensity1D::beta(0.5, 0.5).unwrap().tabulate(DEFAULT_GRID_N).unwrap()).unwrap();
        assert_eq!(vt.shape().tag, Shape::SingleDipped);
        let mu_hat = solve_mu_hat_dipped(&vt).unwrap();
        let p = (mu_hat + 1.0) / 2.0;
        let s = solve(&vt, ps(p)).unwrap();
        assert_eq!(s.method, Method::ClosedFormDipped);
        assert_eq!(s.policy.sigma0, 0.0);
        assert!(s.policy.sigma1 > 0.0 && s.policy.sigma1 < 1.0);
        let part = partition(&s.policy, 101);
        assert!(part.c().iter().zip(part.p_hi()).all(|(c, hi)| hi >= c));
    }

    #[test]
    fn solve_flat_attains_p_s() {
        let vt = common_prior_table(GridDensity1D::uniform(DEFAULT_GRID_N), 0.35);
        let s = solve(&vt, ps(0.35)).unwrap();
        assert_eq!(s.shape_used.tag, Shape::Flat);
        assert_abs_diff_eq!(s.optimal_value, 0.35, epsilon = 1e-9);
    }

    #[test]
    fn peaked_solution_has_no_always_supporters() {
        let f = JointDensityCP::independent(beta(3.0, 4.0), beta(5.0, 5.0)).unwrap();
        let vt = build_value_table(&f, ps(0.3), DEFAULT_GRID_N).unwrap();
        let s = solve(&vt, ps(0.3)).unwrap();
        assert_eq!(s.method, Method::ClosedFormPeaked);
        assert_eq!(s.policy.sigma1, 1.0);
        let m = partition_measures(&partition(&s.policy, 2), &f);
        assert!(m.always < 1e-6);
        assert_abs_diff_eq!(sender_payoff(&s.policy, &f, ps(0.3)), s.optimal_value, epsilon = 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn envelope_dominates_and_is_concave(a in 0.6f64..6.0, b in 0.6f64..6.0, w in 0.0f64..1.0) {
            let h1 = ParametricDensity1D::beta(a, b).unwrap().tabulate(401).unwrap();
            let h2 = ParametricDensity1D::beta(b, a + 1.0).unwrap().tabulate(401).unwrap();
            let mix = GridDensity1D::new(h1.values().iter().zip(h2.values()).map(|(x, y)| w * x + (1.0 - w) * y).collect()).unwrap();
            let vt = ValueTable::from_virtual_density(&mix).unwrap();
            let env = concave_envelope(&vt);
            prop_assert!(env.is_concave());
            for (i, &m) in vt.mu().iter().enumerate() {
                prop_assert!(env.value_at(m) >= vt.v()[i] - 1e-10);
            }
            for &(m, v) in &env.hull_vertices {
                prop_assert!((vt.v_at(m) - v).abs() < 1e-12);
            }
        }

        #[test]
        fn oracle_is_bayes_plausible(a in 0.6f64..6.0, b in 0.6f64..6.0, p in 0.02f64..0.98) {
            let vt = ValueTable::from_virtual_density(&ParametricDensity1D::beta(a, b).unwrap().tabulate(401).unwrap()).unwrap();
            let s = solve_oracle(&vt, ps(p));
            prop_assert!(s.bayes_residual(ps(p)) < 1e-9);
            prop_assert!(s.policy_residual(ps(p)) < 1e-6);
            prop_assert!(s.policy.sigma0 <= s.policy.sigma1);
            prop_assert!(s.optimal_value >= vt.v_at(p) - 1e-12);
        }
    }
}
