//! Comparative statics of media bias: sweeps over chains of densities ordered
//! by (reversed) hazard rate or by polarization, and the curvature conditions
//! on the prior density that make the virtual density single-peaked or
//! single-dipped under a common cost.

use rayon::prelude::*;
use serde::Serialize;

use crate::concavification::{solve, Method, PersuasionSolution};
use crate::densities::{
    classify_shape_default, hazard_compare, polarize, reversed_hazard_compare, GridDensity1D, OrderVerdict, Shape,
};
use crate::error::{Error, Result};
use crate::persuasion::{build_value_table, virtual_density_common_cost, JointDensityCP, Prior, ValueTable};

/// Slack allowed before a step in a monotone sequence counts as a violation.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Media bias: the probability of sending the good message in the bad state.
/// Only defined for single-peaked instances.
pub fn bias_of(sol: &PersuasionSolution) -> Result<f64> {
    let ok = match sol.method {
        Method::ClosedFormPeaked => true,
        Method::ClosedFormDipped => false,
        Method::Oracle => sol.shape_used.tag.is_weakly_single_peaked(),
    };
    if ok {
        Ok(sol.policy.sigma0)
    } else {
        Err(Error::NotApplicable(format!(
            "bias is summarized by sigma0 only for single-peaked virtual densities, found {}",
            sol.shape_used.tag
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    Eq6,
    Eq12,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Eq6 => "Eq6",
            Condition::Eq12 => "Eq12",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eq6" | "6" | "peaked" => Ok(Condition::Eq6),
            "eq12" | "12" | "dipped" => Ok(Condition::Eq12),
            _ => Err(Error::Parse(format!("unknown condition {s:?}, expected Eq6 or Eq12"))),
        }
    }
}

/// Outcome of a curvature check on the prior density. `lhs` is the supremum
/// (Eq6) or infimum (Eq12) of the second log-derivative over interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub gamma: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// `((1 - c) / c) ((1 - p_s) / p_s)`, snapped to exactly 1 when `c + p_s = 1`
/// up to rounding so that the strict conditions see a zero right-hand side.
pub fn gamma(c: f64, p_s: Prior) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("common cost must lie in (0, 1), got {c}")));
    }
    let ps = p_s.value();
    let g = (1.0 - c) / c * (1.0 - ps) / ps;
    Ok(if (g - 1.0).abs() <= 1e-12 { 1.0 } else { g })
}

/// Central second differences of `log f` at interior nodes. Stencils that
/// reach a zero endpoint give negative infinity.
fn second_log_derivative(f: &GridDensity1D) -> Result<Vec<f64>> {
    let v = f.values();
    let n = v.len();
    if let Some(i) = (1..n - 1).find(|&i| v[i] <= 0.0) {
        return Err(Error::Domain(format!("density vanishes at interior node {i}; log is undefined")));
    }
    let dx2 = f.dx() * f.dx();
    let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    Ok((1..n - 1).map(|i| (logs[i + 1] - 2.0 * logs[i] + logs[i - 1]) / dx2).collect())
}

/// Sufficient condition for a single-peaked virtual density under a common
/// cost: `sup (log f)'' < 2 (gamma - 1)^2 min(1, 1 / gamma^2)`.
pub fn check_eq6_condition(f_p: &GridDensity1D, c: f64, p_s: Prior) -> Result<ConditionReport> {
    let g = gamma(c, p_s)?;
    let lhs = second_log_derivative(f_p)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let rhs = 2.0 * (g - 1.0).powi(2) * (1.0f64).min(1.0 / (g * g));
    Ok(ConditionReport { condition: Condition::Eq6, gamma: g, lhs, rhs, satisfied: lhs < rhs })
}

/// Sufficient condition for a single-dipped virtual density under a common
/// cost: `inf (log f)'' > 2 (gamma - 1)^2 max(1, 1 / gamma^2)`.
pub fn check_eq12_condition(f_p: &GridDensity1D, c: f64, p_s: Prior) -> Result<ConditionReport> {
    let g = gamma(c, p_s)?;
    let lhs = second_log_derivative(f_p)?.into_iter().fold(f64::INFINITY, f64::min);
    let rhs = 2.0 * (g - 1.0).powi(2) * (1.0f64).max(1.0 / (g * g));
    Ok(ConditionReport { condition: Condition::Eq12, gamma: g, lhs, rhs, satisfied: lhs > rhs })
}

pub fn check_condition(condition: Condition, f_p: &GridDensity1D, c: f64, p_s: Prior) -> Result<ConditionReport> {
    match condition {
        Condition::Eq6 => check_eq6_condition(f_p, c, p_s),
        Condition::Eq12 => check_eq12_condition(f_p, c, p_s),
    }
}

/// One solved member of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub param: f64,
    pub mu_hat: Option<f64>,
    pub sigma0: f64,
    pub sigma1: f64,
    pub value: f64,
    pub shape: Shape,
}

impl SweepRecord {
    fn from_solution(param: f64, sol: &PersuasionSolution) -> Self {
        Self {
            param,
            mu_hat: sol.mu_hat,
            sigma0: sol.policy.sigma0,
            sigma1: sol.policy.sigma1,
            value: sol.optimal_value,
            shape: sol.shape_used.tag,
        }
    }
}

/// Whether the sweep moved in the predicted direction; `violations` lists the
/// index `i` of every step from record `i` to `i + 1` that went the wrong way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub monotone: bool,
    pub violations: Vec<usize>,
}

impl Verdict {
    fn from_violations(violations: Vec<usize>) -> Self {
        Self { monotone: violations.is_empty(), violations }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub verdict: Verdict,
    /// Members whose sufficient shape condition failed but were solved anyway.
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn params(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.param).collect()
    }

    pub fn sigma0(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sigma0).collect()
    }
}

/// Steps `i` where `xs[i + 1]` falls below `xs[i]` by more than the tolerance
/// (or rises above it, for a nonincreasing check).
fn violations(xs: &[f64], increasing: bool) -> Vec<usize> {
    xs.windows(2)
        .enumerate()
        .filter(|(_, w)| if increasing { w[1] < w[0] - MONOTONE_TOL } else { w[1] > w[0] + MONOTONE_TOL })
        .map(|(i, _)| i)
        .collect()
}

/// Reject chains whose consecutive members are not ascending in `compare`.
fn require_ascending(
    chain: &[GridDensity1D],
    compare: fn(&GridDensity1D, &GridDensity1D) -> Result<OrderVerdict>,
    order: &str,
) -> Result<()> {
    for (i, w) in chain.windows(2).enumerate() {
        match compare(&w[0], &w[1])? {
            OrderVerdict::D2Larger | OrderVerdict::Equal => {}
            other => {
                return Err(Error::Precondition(format!(
                    "members {i} and {} are not ascending in the {order} order ({other:?})",
                    i + 1
                )))
            }
        }
    }
    Ok(())
}

fn require_peaked(vt: &ValueTable, i: usize) -> Result<()> {
    let shape = vt.shape().tag;
    if shape.is_weakly_single_peaked() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("member {i} has a {shape} virtual density, expected single-peaked")))
    }
}

fn solve_all(tables: &[ValueTable], p_s: Prior) -> Result<Vec<PersuasionSolution>> {
    tables.par_iter().map(|vt| solve(vt, p_s)).collect()
}

fn sigma0_sweep(tables: Vec<ValueTable>, p_s: Prior, increasing: bool, warnings: Vec<String>) -> Result<SweepResult> {
    for (i, vt) in tables.iter().enumerate() {
        require_peaked(vt, i)?;
    }
    let sols = solve_all(&tables, p_s)?;
    let records: Vec<SweepRecord> =
        sols.iter().enumerate().map(|(i, s)| SweepRecord::from_solution(i as f64, s)).collect();
    let s0: Vec<f64> = records.iter().map(|r| r.sigma0).collect();
    Ok(SweepResult { records, verdict: Verdict::from_violations(violations(&s0, increasing)), warnings })
}

/// Solve a chain of virtual densities ascending in the reversed hazard rate
/// order; bias should not increase along it.
pub fn theorem2_sweep(virtual_densities: &[GridDensity1D], p_s: Prior) -> Result<SweepResult> {
    require_ascending(virtual_densities, reversed_hazard_compare, "reversed hazard rate")?;
    let tables = virtual_densities.iter().map(ValueTable::from_virtual_density).collect::<Result<Vec<_>>>()?;
    sigma0_sweep(tables, p_s, false, Vec::new())
}

/// As [`theorem2_sweep`] for cost densities under a common prior `p_s`, with
/// each value table built from the joint density.
pub fn corollary2_sweep(cost_densities: &[GridDensity1D], p_s: Prior, n: usize) -> Result<SweepResult> {
    require_ascending(cost_densities, reversed_hazard_compare, "reversed hazard rate")?;
    let tables = cost_densities
        .iter()
        .map(|f| build_value_table(&JointDensityCP::common_prior(f.clone(), p_s.value())?, p_s, n))
        .collect::<Result<Vec<_>>>()?;
    sigma0_sweep(tables, p_s, false, Vec::new())
}

/// Solve a chain of prior densities ascending in the hazard rate order under
/// a common cost `c`; bias should not decrease along it. Members failing the
/// Eq6 condition are solved anyway and listed in the warnings.
pub fn corollary3_sweep(prior_densities: &[GridDensity1D], c: f64, p_s: Prior) -> Result<SweepResult> {
    require_ascending(prior_densities, hazard_compare, "hazard rate")?;
    let mut warnings = Vec::new();
    let mut tables = Vec::with_capacity(prior_densities.len());
    for (i, f) in prior_densities.iter().enumerate() {
        match check_eq6_condition(f, c, p_s) {
            Ok(r) if r.satisfied => {}
            Ok(r) => warnings.push(format!("member {i}: Eq6 fails (sup {} >= {})", r.lhs, r.rhs)),
            Err(e) => warnings.push(format!("member {i}: Eq6 not checked ({e})")),
        }
        tables.push(ValueTable::from_virtual_density(&virtual_density_common_cost(f, c, p_s)?)?);
    }
    sigma0_sweep(tables, p_s, true, warnings)
}

/// Polarize `base_h` by each `alpha` (ascending) and solve. Larger `alpha`
/// means less polarized: the threshold should not rise and bias should not
/// fall.
pub fn theorem3_sweep(base_h: &GridDensity1D, alphas: &[f64], p_s: Prior) -> Result<SweepResult> {
    if alphas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("alphas must be sorted ascending".into()));
    }
    if !classify_shape_default(base_h).tag.is_weakly_single_peaked() {
        return Err(Error::Precondition("base virtual density must be single-peaked".into()));
    }
    let tables = alphas
        .iter()
        .map(|&a| ValueTable::from_virtual_density(&polarize(base_h, a)?))
        .collect::<Result<Vec<_>>>()?;
    for (i, vt) in tables.iter().enumerate() {
        require_peaked(vt, i)?;
    }
    let sols = solve_all(&tables, p_s)?;
    let records: Vec<SweepRecord> =
        sols.iter().zip(alphas).map(|(s, &a)| SweepRecord::from_solution(a, s)).collect();
    let mu_hat: Vec<f64> = records.iter().map(|r| r.mu_hat.unwrap_or(f64::NAN)).collect();
    let s0: Vec<f64> = records.iter().map(|r| r.sigma0).collect();
    let mut bad = violations(&mu_hat, false);
    bad.extend(violations(&s0, true));
    bad.sort_unstable();
    bad.dedup();
    Ok(SweepResult { records, verdict: Verdict::from_violations(bad), warnings: Vec::new() })
}
