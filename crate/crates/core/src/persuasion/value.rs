use rayon::prelude::*;

use super::beliefs::{cutoff_c, cutoff_c_slope, cutoff_p, Prior};
use super::joint::{JointDensityCP, Marginal};
use crate::densities::{classify_values, normalize, GridDensity1D, ShapeClass, SHAPE_TOL_REL};
use crate::error::{Error, Result};
use crate::grid::{self, PiecewiseLinear};

/// Smallest posterior grid accepted by [`build_value_table`].
pub const MIN_VALUE_GRID_N: usize = 201;

/// The sender's value function `v(mu)` (mass of supporters when the
/// representative posterior is `mu`) and its derivative, the virtual density
/// `h(mu)`, sampled on a uniform posterior grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    mu: Vec<f64>,
    v: Vec<f64>,
    h: Vec<f64>,
}

impl ValueTable {
    /// Assemble a table from samples on the uniform grid of the same length.
    pub fn from_parts(v: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if v.len() != h.len() || v.len() < 3 {
            return Err(Error::Validation(format!(
                "value table needs matching v/h samples (>= 3), got {} and {}",
                v.len(),
                h.len()
            )));
        }
        if v.iter().chain(&h).any(|x| !x.is_finite()) {
            return Err(Error::Validation("value table samples must be finite".into()));
        }
        let mu = grid::uniform_nodes(v.len());
        Ok(Self { mu, v, h })
    }

    /// Tabulate closed-form `v` and `h` on `n` nodes.
    pub fn from_fn(n: usize, v: impl Fn(f64) -> f64, h: impl Fn(f64) -> f64) -> Result<Self> {
        let mu = grid::uniform_nodes(n);
        Self::from_parts(mu.iter().map(|&m| v(m)).collect(), mu.iter().map(|&m| h(m)).collect())
    }

    /// Treat a density directly as the virtual density: `h` is the normalized
    /// density and `v` its cumulative trapezoid integral, pinned to `v(1) = 1`.
    pub fn from_virtual_density(h: &GridDensity1D) -> Result<Self> {
        let h = normalize(h)?;
        let cum = grid::cumulative_trapezoid(h.values(), h.dx());
        let end = *cum.last().unwrap();
        let v = cum.iter().map(|c| c / end).collect();
        Self::from_parts(v, h.values().iter().map(|x| x / end).collect())
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }

    fn interp(&self, ys: &[f64], mu: f64) -> f64 {
        let (i, t) = super::joint::locate(mu, self.len());
        ys[i] + t * (ys[i + 1] - ys[i])
    }

    /// `v` interpolated linearly between nodes.
    pub fn v_at(&self, mu: f64) -> f64 {
        self.interp(&self.v, mu)
    }

    /// `h` interpolated linearly between nodes.
    pub fn h_at(&self, mu: f64) -> f64 {
        self.interp(&self.h, mu)
    }

    /// The virtual density as a grid density (tiny negative quadrature noise
    /// clipped to zero).
    pub fn virtual_density(&self) -> Result<GridDensity1D> {
        GridDensity1D::new(self.h.iter().map(|x| x.max(0.0)).collect())
    }

    /// Shape of `h` with the default relative tolerance.
    pub fn shape(&self) -> ShapeClass {
        let max = self.h.iter().cloned().fold(0.0, f64::max);
        classify_values(&self.h, SHAPE_TOL_REL * max.max(f64::MIN_POSITIVE))
    }

    /// Largest gap between `h` and the central difference of `v` at interior nodes.
    pub fn max_derivative_gap(&self) -> f64 {
        let dx = self.dx();
        (1..self.len() - 1)
            .map(|i| ((self.v[i + 1] - self.v[i - 1]) / (2.0 * dx) - self.h[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Check monotonicity, the boundary values, nonnegativity and mass of `h`,
    /// and agreement of `h` with the finite-difference slope of `v`.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.len();
        if let Some(i) = (1..n).find(|&i| self.v[i] < self.v[i - 1] - 1e-12) {
            return Err(Error::Validation(format!("v decreases at node {i}")));
        }
        if self.v[0].abs() > 1e-6 || (self.v[n - 1] - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!(
                "v(0) = {} and v(1) = {} should be 0 and 1",
                self.v[0],
                self.v[n - 1]
            )));
        }
        if let Some(i) = (0..n).find(|&i| self.h[i] < -1e-9) {
            return Err(Error::Validation(format!("h is negative at node {i}: {}", self.h[i])));
        }
        let mass = grid::trapezoid(&self.h, self.dx());
        if (mass - 1.0).abs() > 1e-4 {
            return Err(Error::Validation(format!("h integrates to {mass}, expected 1")));
        }
        let gap = self.max_derivative_gap();
        if gap > 1e-4 {
            return Err(Error::Validation(format!("h differs from dv/dmu by up to {gap}")));
        }
        Ok(())
    }
}

/// One prior-level slice of the joint density: receivers with prior `p`
/// carrying quadrature weight `weight`, costs distributed as `costs`.
struct PriorSlice<'a> {
    weight: f64,
    p: f64,
    costs: &'a PiecewiseLinear,
}

fn prior_slices(f: &JointDensityCP) -> Vec<PriorSlice<'_>> {
    match f {
        JointDensityCP::Product { cost: Marginal::Density(c), prior: Marginal::PointMass(p) } => {
            vec![PriorSlice { weight: 1.0, p: *p, costs: c.piecewise() }]
        }
        JointDensityCP::Product { cost: Marginal::Density(c), prior: Marginal::Density(g) } => {
            let w = grid::trapezoid_weights(g.len());
            grid::uniform_nodes(g.len())
                .into_iter()
                .zip(g.values())
                .zip(w)
                .filter(|((_, &gv), _)| gv > 0.0)
                .map(|((p, &gv), w)| PriorSlice { weight: w * gv, p, costs: c.piecewise() })
                .collect()
        }
        JointDensityCP::Grid(g) => {
            let (_, n_p) = g.dims();
            let w = grid::trapezoid_weights(n_p);
            grid::uniform_nodes(n_p)
                .into_iter()
                .zip(g.rows())
                .zip(w)
                .map(|((p, row), w)| PriorSlice { weight: w, p, costs: row })
                .collect()
        }
        JointDensityCP::Product { cost: Marginal::PointMass(_), .. } => Vec::new(),
    }
}

/// Build `v` and `h` on an `n`-node posterior grid.
///
/// For each prior level `p` the mass of costs below `cutoff_c(mu, p)` is the
/// exact integral of the linearly interpolated cost slice; these are summed
/// over the prior grid with trapezoid weights. `h` differentiates the same
/// sum under the integral sign using the closed-form slope of the cutoff, so
/// it is the exact derivative of the tabulated `v`. A common cost is handled
/// through the prior cutoff instead, which keeps the point mass exact.
pub fn build_value_table(f: &JointDensityCP, p_s: Prior, n: usize) -> Result<ValueTable> {
    if n < MIN_VALUE_GRID_N {
        return Err(Error::Precondition(format!("value grid needs n >= {MIN_VALUE_GRID_N}, got {n}")));
    }
    f.check_normalized()?;
    let mu = grid::uniform_nodes(n);

    if let JointDensityCP::Product { cost: Marginal::PointMass(c), prior: Marginal::Density(g) } = f {
        let c = *c;
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Degenerate(format!("common cost must lie in (0, 1), got {c}")));
        }
        let ps = p_s.value();
        let gamma = (1.0 - c) / c * (1.0 - ps) / ps;
        let total = g.integral();
        let (v, h): (Vec<f64>, Vec<f64>) = mu
            .par_iter()
            .map(|&m| {
                let p = cutoff_p(m, c, p_s).expect("c checked above");
                let v = (total - g.cdf(p)) / total;
                let d = 1.0 + (gamma - 1.0) * m;
                (v, g.piecewise().eval(p) / total * gamma / (d * d))
            })
            .unzip();
        return ValueTable::from_parts(v, h);
    }

    let slices = prior_slices(f);
    let (v, h): (Vec<f64>, Vec<f64>) = mu
        .par_iter()
        .map(|&m| {
            let (mut v, mut h) = (0.0, 0.0);
            for s in &slices {
                let c = cutoff_c(m, s.p, p_s);
                v += s.weight * s.costs.cdf(c);
                h += s.weight * s.costs.eval(c) * cutoff_c_slope(m, s.p, p_s);
            }
            (v, h)
        })
        .unzip();
    ValueTable::from_parts(v, h)
}

/// With a common prior equal to the sender's, `cutoff_c(mu, p_s) = mu`, so the
/// virtual density is the cost density itself.
pub fn virtual_density_common_prior(f_c: &GridDensity1D) -> GridDensity1D {
    f_c.clone()
}

/// Closed-form virtual density for a common cost `c`:
/// `h(mu) = f(p) (1 + (gamma - 1) p)^2 / gamma` with `p = cutoff_p(mu, c)` and
/// `gamma = ((1 - c) / c) ((1 - p_s) / p_s)`. Tabulated on the prior's grid.
pub fn virtual_density_common_cost(f_p: &GridDensity1D, c: f64, p_s: Prior) -> Result<GridDensity1D> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Degenerate(format!("common cost must lie in (0, 1), got {c}")));
    }
    let ps = p_s.value();
    let gamma = (1.0 - c) / c * (1.0 - ps) / ps;
    let mass = f_p.integral();
    let values = grid::uniform_nodes(f_p.len())
        .into_iter()
        .map(|m| {
            let p = cutoff_p(m, c, p_s).expect("c checked above");
            let k = 1.0 + (gamma - 1.0) * p;
            f_p.piecewise().eval(p) / mass * k * k / gamma
        })
        .collect();
    GridDensity1D::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{ParametricDensity1D, DEFAULT_GRID_N};
    use crate::persuasion::joint::GridJoint;
    use approx::assert_abs_diff_eq;

    fn beta(a: f64, b: f64) -> GridDensity1D {
        ParametricDensity1D::beta(a, b).unwrap().tabulate(DEFAULT_GRID_N).unwrap()
    }

    fn ps(p: f64) -> Prior {
        Prior::new(p).unwrap()
    }

    #[test]
    fn common_prior_uniform_costs_is_identity() {
        let f = JointDensityCP::common_prior(GridDensity1D::uniform(DEFAULT_GRID_N), 0.4).unwrap();
        let vt = build_value_table(&f, ps(0.4), 1001).unwrap();
        for (i, &m) in vt.mu().iter().enumerate() {
            assert_abs_diff_eq!(vt.v()[i], m, epsilon = 1e-12);
            assert_abs_diff_eq!(vt.h()[i], 1.0, epsilon = 1e-12);
        }
        vt.check_invariants().unwrap();
    }

    #[test]
    fn common_prior_beta_costs() {
        let f = JointDensityCP::common_prior(beta(2.0, 2.0), 0.5).unwrap();
        let vt = build_value_table(&f, ps(0.5), 2001).unwrap();
        for (i, &m) in vt.mu().iter().enumerate() {
            assert_abs_diff_eq!(vt.h()[i], 6.0 * m * (1.0 - m), epsilon = 1e-4);
            assert_abs_diff_eq!(vt.v()[i], 3.0 * m * m - 2.0 * m * m * m, epsilon = 1e-4);
        }
        vt.check_invariants().unwrap();
    }

    #[test]
    fn common_cost_matches_closed_form() {
        let (c, p_s) = (0.4, ps(0.35));
        let g = beta(2.0, 3.0);
        let f = JointDensityCP::common_cost(c, g.clone()).unwrap();
        let vt = build_value_table(&f, p_s, 2001).unwrap();
        let gamma: f64 = (1.0 - c) / c * (0.65 / 0.35);
        for (i, &m) in vt.mu().iter().enumerate() {
            let p = (1.0 - m) / ((1.0 - m) + m * gamma);
            let expected = 12.0 * p * (1.0 - p) * (1.0 - p) * (1.0 + (gamma - 1.0) * p).powi(2) / gamma;
            assert_abs_diff_eq!(vt.h()[i], expected, epsilon = 1e-4);
        }
        vt.check_invariants().unwrap();
        let closed = virtual_density_common_cost(&g, c, p_s).unwrap();
        for (a, b) in closed.values().iter().zip(vt.h()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn heterogeneous_table_is_consistent() {
        let f = JointDensityCP::independent(beta(5.0, 7.0), beta(6.0, 5.0)).unwrap();
        let vt = build_value_table(&f, ps(0.45), 2001).unwrap();
        vt.check_invariants().unwrap();
    }

    #[test]
    fn grid_joint_table_is_consistent() {
        let g = GridJoint::from_fn(201, 201, |c, p| (c * (1.0 - c) * p * (1.0 - p)).powi(5) * (1.0 + 2.0 * c * p)).unwrap();
        let vt = build_value_table(&JointDensityCP::Grid(g), ps(0.5), 1001).unwrap();
        vt.check_invariants().unwrap();
    }

    #[test]
    fn slow_edge_decay_steepens_h_near_the_boundary() {
        // Prior mass near p = 1 pulls the cost cutoff up quickly at small mu, so
        // central differences of v lose accuracy there; h itself stays consistent.
        let f = JointDensityCP::independent(beta(2.0, 5.0), beta(5.0, 2.0)).unwrap();
        let coarse = build_value_table(&f, ps(0.45), 1001).unwrap();
        let fine = build_value_table(&f, ps(0.45), 4001).unwrap();
        assert!(coarse.max_derivative_gap() > 1e-3);
        assert!(fine.max_derivative_gap() < coarse.max_derivative_gap() / 2.0);
        for i in 0..1001 {
            assert_abs_diff_eq!(coarse.v()[i], fine.v()[4 * i], epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_small_grids_and_unnormalized_joints() {
        let f = JointDensityCP::common_prior(beta(2.0, 2.0), 0.5).unwrap();
        assert!(matches!(build_value_table(&f, ps(0.5), 100), Err(Error::Precondition(_))));
        let raw = GridJoint::new(3, 3, vec![2.0; 9]).unwrap();
        assert!(matches!(
            build_value_table(&JointDensityCP::Grid(raw), ps(0.5), 201),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn common_prior_virtual_density_matches_table() {
        let f_c = beta(2.0, 2.0);
        let h = virtual_density_common_prior(&f_c);
        assert_eq!(h, f_c);
        let vt = build_value_table(&JointDensityCP::common_prior(f_c, 0.3).unwrap(), ps(0.3), 2001).unwrap();
        for (a, b) in h.values().iter().zip(vt.h()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-4);
        }
        let u = GridDensity1D::uniform(11);
        assert_eq!(virtual_density_common_prior(&u), u);
    }

    #[test]
    fn common_cost_reflection_when_gamma_is_one() {
        // c + p_s = 1 gives gamma = 1 and h(mu) = f(1 - mu)
        let p_s = ps(0.3);
        let u = virtual_density_common_cost(&GridDensity1D::uniform(DEFAULT_GRID_N), 0.7, p_s).unwrap();
        assert!(u.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let b = virtual_density_common_cost(&beta(2.0, 2.0), 0.7, p_s).unwrap();
        for (m, v) in b.nodes().iter().zip(b.values()) {
            assert_abs_diff_eq!(*v, 6.0 * m * (1.0 - m), epsilon = 1e-4);
        }
        assert_abs_diff_eq!(b.integral(), 1.0, epsilon = 1e-6);
        let skew = virtual_density_common_cost(&beta(2.0, 5.0), 0.45, ps(0.4)).unwrap();
        assert_abs_diff_eq!(skew.integral(), 1.0, epsilon = 1e-6);
        assert!(virtual_density_common_cost(&beta(2.0, 2.0), 0.0, p_s).is_err());
    }

    #[test]
    fn from_virtual_density_pins_endpoints() {
        let vt = ValueTable::from_virtual_density(&beta(2.0, 5.0)).unwrap();
        assert_eq!(vt.v()[0], 0.0);
        assert_eq!(*vt.v().last().unwrap(), 1.0);
        vt.check_invariants().unwrap();
    }
}
