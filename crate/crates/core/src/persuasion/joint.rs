use serde::{Deserialize, Serialize};

use crate::densities::{normalize, DensitySpec, GridDensity1D};
use crate::error::{Error, Result};
use crate::grid::{self, PiecewiseLinear};

/// Joint densities must integrate to one within this tolerance.
pub const JOINT_MASS_TOL: f64 = 1e-8;

/// One axis of a product-form joint density.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Density(GridDensity1D),
    /// Every receiver shares this value.
    PointMass(f64),
}

impl Marginal {
    pub fn mass(&self) -> f64 {
        match self {
            Marginal::Density(d) => d.integral(),
            Marginal::PointMass(_) => 1.0,
        }
    }
}

/// Serialized marginal: either `{"point": 0.5}` or a density spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarginalSpec {
    Point { point: f64 },
    Density(DensitySpec),
}

impl MarginalSpec {
    pub fn to_marginal(&self, n: usize) -> Result<Marginal> {
        match self {
            MarginalSpec::Point { point } => Ok(Marginal::PointMass(*point)),
            MarginalSpec::Density(spec) => Ok(Marginal::Density(spec.to_grid(n)?)),
        }
    }
}

/// A joint density of (cost, prior) tabulated on a uniform `n_c x n_p` grid
/// and interpolated bilinearly.
#[derive(Debug, Clone, PartialEq)]
pub struct GridJoint {
    n_c: usize,
    n_p: usize,
    /// `values[j * n_c + k] = f(c_k, p_j)`
    values: Vec<f64>,
    /// Slices at fixed prior `p_j`, as functions of the cost.
    rows: Vec<PiecewiseLinear>,
    /// Slices at fixed cost `c_k`, as functions of the prior.
    cols: Vec<PiecewiseLinear>,
}

impl GridJoint {
    pub fn new(n_c: usize, n_p: usize, values: Vec<f64>) -> Result<Self> {
        if n_c < 3 || n_p < 3 {
            return Err(Error::Validation(format!("joint grid needs at least 3x3 nodes, got {n_c}x{n_p}")));
        }
        if values.len() != n_c * n_p {
            return Err(Error::Validation(format!(
                "joint grid expects {} values, got {}",
                n_c * n_p,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation("joint grid values must be finite and nonnegative".into()));
        }
        let rows = (0..n_p).map(|j| PiecewiseLinear::new(values[j * n_c..(j + 1) * n_c].to_vec())).collect();
        let cols = (0..n_c)
            .map(|k| PiecewiseLinear::new((0..n_p).map(|j| values[j * n_c + k]).collect()))
            .collect();
        Ok(Self { n_c, n_p, values, rows, cols })
    }

    /// Tabulate `f(c, p)` and rescale to unit double-trapezoid mass.
    pub fn from_fn(n_c: usize, n_p: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let cs = grid::uniform_nodes(n_c);
        let ps = grid::uniform_nodes(n_p);
        let values = ps.iter().flat_map(|&p| cs.iter().map(move |&c| (c, p))).map(|(c, p)| f(c, p)).collect();
        Self::new(n_c, n_p, values)?.normalized()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_c, self.n_p)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        let w = grid::trapezoid_weights(self.n_p);
        self.rows.iter().zip(&w).map(|(r, w)| w * r.total()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::Degenerate("joint density has zero mass".into()));
        }
        Self::new(self.n_c, self.n_p, self.values.iter().map(|v| v / m).collect())
    }

    /// Bilinear interpolation at `(c, p)`.
    pub fn eval(&self, c: f64, p: f64) -> f64 {
        let (j, t) = locate(p, self.n_p);
        let lo = self.rows[j].eval(c);
        let hi = self.rows[j + 1].eval(c);
        lo + t * (hi - lo)
    }

    pub(crate) fn rows(&self) -> &[PiecewiseLinear] {
        &self.rows
    }

    pub(crate) fn cols(&self) -> &[PiecewiseLinear] {
        &self.cols
    }

    /// Marginal density of the prior; linear between prior nodes.
    pub(crate) fn prior_marginal(&self) -> PiecewiseLinear {
        PiecewiseLinear::new(self.rows.iter().map(|r| r.total()).collect())
    }
}

pub(crate) fn locate(x: f64, n: usize) -> (usize, f64) {
    let dx = 1.0 / (n - 1) as f64;
    let s = x.clamp(0.0, 1.0) / dx;
    let j = (s.floor() as usize).min(n - 2);
    (j, (s - j as f64).clamp(0.0, 1.0))
}

/// Joint density `f(c, p)` of receiver costs and priors.
#[derive(Debug, Clone, PartialEq)]
pub enum JointDensityCP {
    /// Independent costs and priors; either axis may be a point mass.
    Product { cost: Marginal, prior: Marginal },
    Grid(GridJoint),
}

impl JointDensityCP {
    pub fn product(cost: Marginal, prior: Marginal) -> Result<Self> {
        for (name, m) in [("cost", &cost), ("prior", &prior)] {
            if let Marginal::PointMass(x) = m {
                if !(0.0..=1.0).contains(x) {
                    return Err(Error::Domain(format!("{name} point mass at {x} is outside [0, 1]")));
                }
            }
        }
        if matches!((&cost, &prior), (Marginal::PointMass(_), Marginal::PointMass(_))) {
            return Err(Error::Degenerate("costs and priors cannot both be point masses".into()));
        }
        Ok(Self::Product { cost, prior })
    }

    /// Every receiver holds prior `p`; costs drawn from `costs`.
    pub fn common_prior(costs: GridDensity1D, p: f64) -> Result<Self> {
        Self::product(Marginal::Density(normalize(&costs)?), Marginal::PointMass(p))
    }

    /// Every receiver has cost `c`; priors drawn from `priors`.
    pub fn common_cost(c: f64, priors: GridDensity1D) -> Result<Self> {
        Self::product(Marginal::PointMass(c), Marginal::Density(normalize(&priors)?))
    }

    pub fn independent(costs: GridDensity1D, priors: GridDensity1D) -> Result<Self> {
        Self::product(Marginal::Density(normalize(&costs)?), Marginal::Density(normalize(&priors)?))
    }

    pub fn mass(&self) -> f64 {
        match self {
            Self::Product { cost, prior } => cost.mass() * prior.mass(),
            Self::Grid(g) => g.mass(),
        }
    }

    pub fn check_normalized(&self) -> Result<()> {
        let m = self.mass();
        if (m - 1.0).abs() > JOINT_MASS_TOL {
            return Err(Error::Validation(format!("joint density integrates to {m}, expected 1")));
        }
        Ok(())
    }

    /// Mass of receivers who support the policy without any information
    /// (prior at least as large as cost).
    pub fn ex_ante_supporters(&self) -> f64 {
        match self {
            Self::Product { cost: Marginal::Density(c), prior: Marginal::PointMass(p) } => c.cdf(*p),
            Self::Product { cost: Marginal::PointMass(c), prior: Marginal::Density(g) } => g.integral() - g.cdf(*c),
            Self::Product { cost: Marginal::Density(cd), prior: Marginal::Density(pd) } => {
                let w = grid::trapezoid_weights(pd.len());
                pd.values().iter().zip(grid::uniform_nodes(pd.len())).zip(&w).map(|((f, p), w)| w * f * cd.cdf(p)).sum()
            }
            Self::Grid(g) => {
                let w = grid::trapezoid_weights(g.n_p);
                g.rows.iter().zip(grid::uniform_nodes(g.n_p)).zip(&w).map(|((r, p), w)| w * r.cdf(p)).sum()
            }
            Self::Product { .. } => unreachable!("rejected at construction"),
        }
    }
}

/// Serialized joint density: a product of marginal specs or a full grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JointSpec {
    Product { cost: MarginalSpec, prior: MarginalSpec },
    Grid { n_c: usize, n_p: usize, values: Vec<f64> },
}

impl JointSpec {
    pub fn to_joint(&self, n: usize) -> Result<JointDensityCP> {
        match self {
            JointSpec::Product { cost, prior } => JointDensityCP::product(cost.to_marginal(n)?, prior.to_marginal(n)?),
            JointSpec::Grid { n_c, n_p, values } => {
                Ok(JointDensityCP::Grid(GridJoint::new(*n_c, *n_p, values.clone())?.normalized()?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{ParametricDensity1D, DEFAULT_GRID_N};
    use approx::assert_abs_diff_eq;

    #[test]
    fn both_point_masses_rejected() {
        let r = JointDensityCP::product(Marginal::PointMass(0.3), Marginal::PointMass(0.5));
        assert!(matches!(r, Err(Error::Degenerate(_))));
        assert!(JointDensityCP::product(Marginal::PointMass(1.3), Marginal::Density(GridDensity1D::uniform(5))).is_err());
    }

    #[test]
    fn grid_joint_normalizes_and_interpolates() {
        let g = GridJoint::from_fn(41, 31, |c, p| 1.0 + c * p).unwrap();
        assert_abs_diff_eq!(g.mass(), 1.0, epsilon = 1e-12);
        let scale = 1.0 / 1.25;
        assert_abs_diff_eq!(g.eval(0.5, 0.5), 1.25 * scale, epsilon = 1e-3);
        let j = JointDensityCP::Grid(g);
        assert!(j.check_normalized().is_ok());
    }

    #[test]
    fn unnormalized_joint_detected() {
        let g = GridJoint::new(3, 3, vec![2.0; 9]).unwrap();
        assert!(JointDensityCP::Grid(g).check_normalized().is_err());
    }

    #[test]
    fn ex_ante_supporters_common_prior() {
        let b = ParametricDensity1D::beta(2.0, 2.0).unwrap().tabulate(DEFAULT_GRID_N).unwrap();
        let j = JointDensityCP::common_prior(b, 0.5).unwrap();
        assert_abs_diff_eq!(j.ex_ante_supporters(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn joint_spec_parses() {
        let s: JointSpec = serde_json::from_str(
            r#"{"cost":{"family":"beta","a":2,"b":2},"prior":{"point":0.5}}"#,
        )
        .unwrap();
        let j = s.to_joint(201).unwrap();
        assert!(matches!(j, JointDensityCP::Product { prior: Marginal::PointMass(p), .. } if p == 0.5));
        let g: JointSpec = serde_json::from_str(r#"{"n_c":3,"n_p":3,"values":[1,1,1,1,1,1,1,1,1]}"#).unwrap();
        assert!(g.to_joint(201).unwrap().check_normalized().is_ok());
    }
}
