//! One-dimensional densities on [0, 1]: tabulated grids, the parametric
//! families used by the experiments, the polarization transform, shape
//! classification and the (reversed) hazard rate orders.

use serde::{Deserialize, Serialize};
use statrs::function::{beta::ln_beta, erf::erfc};

use crate::error::{Error, Result};
use crate::grid::{self, PiecewiseLinear};

/// Default number of grid nodes used when tabulating densities.
pub const DEFAULT_GRID_N: usize = 2001;

/// Beta densities with a parameter below one are tabulated on `[EPS, 1 - EPS]`.
pub const BETA_CLIP_EPS: f64 = 1e-6;

/// Relative derivative tolerance used by [`classify_shape_default`].
pub const SHAPE_TOL_REL: f64 = 1e-7;

/// Order comparisons ignore nodes whose CDF (or survival) is below this.
pub const ORDER_DENOM_FLOOR: f64 = 1e-12;

/// Tolerance on rate differences in the order comparisons, relative to the
/// magnitude of the rates being compared.
pub const ORDER_TOL: f64 = 1e-9;

/// Anything that can be evaluated as a density on [0, 1].
pub trait Density1D {
    /// Density at `x`; callers guarantee `x` is in [0, 1].
    fn density(&self, x: f64) -> f64;
}

/// Evaluate a density, rejecting points outside the unit interval.
pub fn eval_density<D: Density1D + ?Sized>(d: &D, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("density evaluated at {x}, outside [0, 1]")));
    }
    Ok(d.density(x))
}

/// A nonnegative density tabulated on a uniform grid over [0, 1] and
/// linearly interpolated between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity1D {
    pl: PiecewiseLinear,
}

impl GridDensity1D {
    /// Wrap grid values (node `i` sits at `i / (n - 1)`). The values are not
    /// rescaled; see [`normalize`].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::Validation(format!(
                "grid density needs at least 3 nodes, got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!("grid value {v} at node {i} is negative or not finite")));
        }
        Ok(Self { pl: PiecewiseLinear::new(values) })
    }

    /// Tabulate `f` on `n` nodes without normalizing.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid::uniform_nodes(n).into_iter().map(f).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self { pl: PiecewiseLinear::new(vec![1.0; n]) }
    }

    pub fn len(&self) -> usize {
        self.pl.values().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        self.pl.values()
    }

    pub fn nodes(&self) -> Vec<f64> {
        grid::uniform_nodes(self.len())
    }

    pub fn dx(&self) -> f64 {
        self.pl.dx()
    }

    /// Trapezoid integral over [0, 1].
    pub fn integral(&self) -> f64 {
        self.pl.total()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.integral() - 1.0).abs() <= tol
    }

    /// Mass in `[0, x]` of the interpolated density.
    pub fn cdf(&self, x: f64) -> f64 {
        self.pl.cdf(x)
    }

    /// Node-wise CDF (cumulative trapezoid), scaled to end at one.
    pub fn cdf_nodes(&self) -> Vec<f64> {
        let total = self.integral();
        self.pl.cumulative().iter().map(|c| c / total).collect()
    }

    /// Node-wise survival function accumulated from the right end so that it
    /// keeps full precision in the upper tail.
    pub fn survival_nodes(&self) -> Vec<f64> {
        let v = self.values();
        let n = v.len();
        let dx = self.dx();
        let total = self.integral();
        let mut s = vec![0.0; n];
        for i in (0..n - 1).rev() {
            s[i] = s[i + 1] + 0.5 * dx * (v[i] + v[i + 1]);
        }
        s.iter_mut().for_each(|x| *x /= total);
        s
    }

    /// Quantile of the normalized interpolant.
    pub fn quantile(&self, u: f64) -> f64 {
        self.pl.inverse_cdf(u)
    }

    pub(crate) fn piecewise(&self) -> &PiecewiseLinear {
        &self.pl
    }

    /// Node index of the largest value (first one on ties).
    pub fn argmax(&self) -> usize {
        let v = self.values();
        (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best })
    }
}

impl Density1D for GridDensity1D {
    fn density(&self, x: f64) -> f64 {
        self.pl.eval(x)
    }
}

/// The closed-form families used to build experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum ParametricDensity1D {
    Beta { a: f64, b: f64 },
    /// Normal with the given mean and variance, truncated to [0, 1].
    TruncatedNormal { mean: f64, var: f64 },
    Uniform,
    /// Linear interpolation through `(x, y)` knots spanning [0, 1],
    /// rescaled to unit mass.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl ParametricDensity1D {
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        let d = Self::Beta { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn truncated_normal(mean: f64, var: f64) -> Result<Self> {
        let d = Self::TruncatedNormal { mean, var };
        d.validate()?;
        Ok(d)
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        let d = Self::PiecewiseLinear { knots };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Beta { a, b } => {
                if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(Error::Domain(format!("Beta({a}, {b}) needs positive finite parameters")));
                }
            }
            Self::TruncatedNormal { mean, var } => {
                if !(*var > 0.0 && var.is_finite() && mean.is_finite()) {
                    return Err(Error::Domain(format!(
                        "TruncatedNormal(mean={mean}, var={var}) needs a positive variance"
                    )));
                }
            }
            Self::Uniform => {}
            Self::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(Error::Domain("piecewise-linear density needs at least two knots".into()));
                }
                if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
                    return Err(Error::Domain("piecewise-linear knots must start at 0 and end at 1".into()));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Domain("piecewise-linear knots must be strictly increasing".into()));
                }
                if knots.iter().any(|k| !(k.1 >= 0.0) || !k.1.is_finite()) {
                    return Err(Error::Domain("piecewise-linear knot values must be nonnegative".into()));
                }
                if knots_mass(knots) <= 0.0 {
                    return Err(Error::Degenerate("piecewise-linear density has zero mass".into()));
                }
            }
        }
        Ok(())
    }

    /// Tabulate on `n` nodes and normalize with the trapezoid rule.
    pub fn tabulate(&self, n: usize) -> Result<GridDensity1D> {
        self.validate()?;
        normalize(&GridDensity1D::from_fn(n, |x| self.density(x))?)
    }
}

fn knots_mass(knots: &[(f64, f64)]) -> f64 {
    knots.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl Density1D for ParametricDensity1D {
    fn density(&self, x: f64) -> f64 {
        match self {
            Self::Beta { a, b } => {
                let x = if *a < 1.0 || *b < 1.0 { x.clamp(BETA_CLIP_EPS, 1.0 - BETA_CLIP_EPS) } else { x };
                x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0) * (-ln_beta(*a, *b)).exp()
            }
            Self::TruncatedNormal { mean, var } => {
                let s = var.sqrt();
                let z = (x - mean) / s;
                let mass = std_normal_cdf((1.0 - mean) / s) - std_normal_cdf(-mean / s);
                (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s * mass)
            }
            Self::Uniform => 1.0,
            Self::PiecewiseLinear { knots } => {
                let k = knots.partition_point(|p| p.0 <= x).clamp(1, knots.len() - 1);
                let (x0, y0) = knots[k - 1];
                let (x1, y1) = knots[k];
                let y = y0 + (x - x0) / (x1 - x0) * (y1 - y0);
                y / knots_mass(knots)
            }
        }
    }
}

/// Serialized density description, e.g. `{"family":"beta","a":2,"b":2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DensitySpec {
    Beta { a: f64, b: f64 },
    #[serde(rename = "truncnormal")]
    TruncNormal { mean: f64, var: f64 },
    Uniform,
    #[serde(rename = "piecewise")]
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    Grid { values: Vec<f64> },
}

impl DensitySpec {
    /// Build the normalized grid density. Grid specs are resampled onto `n`
    /// nodes only when their own length differs.
    pub fn to_grid(&self, n: usize) -> Result<GridDensity1D> {
        match self {
            Self::Grid { values } => {
                let g = GridDensity1D::new(values.clone())?;
                let g = if g.len() == n { g } else { GridDensity1D::from_fn(n, |x| g.density(x))? };
                normalize(&g)
            }
            other => other.parametric().expect("non-grid spec").tabulate(n),
        }
    }

    pub fn parametric(&self) -> Option<ParametricDensity1D> {
        Some(match self {
            Self::Beta { a, b } => ParametricDensity1D::Beta { a: *a, b: *b },
            Self::TruncNormal { mean, var } => ParametricDensity1D::TruncatedNormal { mean: *mean, var: *var },
            Self::Uniform => ParametricDensity1D::Uniform,
            Self::PiecewiseLinear { knots } => ParametricDensity1D::PiecewiseLinear { knots: knots.clone() },
            Self::Grid { .. } => return None,
        })
    }
}

/// Rescale to unit trapezoid mass.
pub fn normalize(d: &GridDensity1D) -> Result<GridDensity1D> {
    let mass = d.integral();
    if !(mass > 0.0) {
        return Err(Error::Degenerate("density has zero mass".into()));
    }
    if mass == 1.0 {
        return Ok(d.clone());
    }
    GridDensity1D::new(d.values().iter().map(|v| v / mass).collect())
}

/// `d^alpha / kappa`. `alpha < 1` spreads mass toward the tails, `alpha > 1`
/// concentrates it around the mode, `alpha = 0` gives the uniform density.
pub fn polarize(d: &GridDensity1D, alpha: f64) -> Result<GridDensity1D> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("polarization exponent must be >= 0, got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(GridDensity1D::uniform(d.len()));
    }
    let powered = d.values().iter().map(|&v| if v == 0.0 { 0.0 } else { v.powf(alpha) }).collect();
    normalize(&GridDensity1D::new(powered)?)
}

/// `Beta(1 + alpha (a - 1), 1 + alpha (b - 1))`: the member of the Beta family
/// obtained by polarizing `Beta(a, b)` with exponent `alpha`.
pub fn beta_polarization_pair(a1: f64, b1: f64, alpha: f64) -> Result<ParametricDensity1D> {
    if !(a1 > 1.0 && b1 > 1.0) {
        return Err(Error::Domain(format!("Beta({a1}, {b1}) is not single-peaked; need a, b > 1")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("polarization exponent must be >= 0, got {alpha}")));
    }
    let (a2, b2) = (1.0 + alpha * (a1 - 1.0), 1.0 + alpha * (b1 - 1.0));
    if !(a2 > 0.0 && b2 > 0.0) {
        return Err(Error::Domain(format!("polarized parameters ({a2}, {b2}) are not positive")));
    }
    ParametricDensity1D::beta(a2, b2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    SinglePeaked,
    SingleDipped,
    MonotoneIncreasing,
    MonotoneDecreasing,
    Flat,
    Neither,
}

impl Shape {
    pub fn as_str(&self) -> &'static str {
        match self {
            Shape::SinglePeaked => "SinglePeaked",
            Shape::SingleDipped => "SingleDipped",
            Shape::MonotoneIncreasing => "MonotoneIncreasing",
            Shape::MonotoneDecreasing => "MonotoneDecreasing",
            Shape::Flat => "Flat",
            Shape::Neither => "Neither",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "SinglePeaked" => Shape::SinglePeaked,
            "SingleDipped" => Shape::SingleDipped,
            "MonotoneIncreasing" => Shape::MonotoneIncreasing,
            "MonotoneDecreasing" => Shape::MonotoneDecreasing,
            "Flat" => Shape::Flat,
            "Neither" => Shape::Neither,
            other => return Err(Error::Parse(format!("unknown shape {other:?}"))),
        })
    }

    /// Single-peaked in the weak sense: monotone and flat densities qualify.
    pub fn is_weakly_single_peaked(&self) -> bool {
        !matches!(self, Shape::SingleDipped | Shape::Neither)
    }

    pub fn is_weakly_single_dipped(&self) -> bool {
        !matches!(self, Shape::SinglePeaked | Shape::Neither)
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeClass {
    pub tag: Shape,
    /// Grid node of the peak (single-peaked) or dip (single-dipped).
    pub location: Option<f64>,
}

/// Classify samples spaced uniformly over [0, 1] by the sign pattern of their
/// central differences; derivatives with `|d| <= tol` count as zero.
pub fn classify_values(values: &[f64], tol: f64) -> ShapeClass {
    let n = values.len();
    let dx = 1.0 / (n - 1) as f64;
    let mut signs: Vec<i8> = Vec::new();
    for i in 1..n - 1 {
        let d = (values[i + 1] - values[i - 1]) / (2.0 * dx);
        let s = if d > tol {
            1
        } else if d < -tol {
            -1
        } else {
            continue;
        };
        if signs.last() != Some(&s) {
            signs.push(s);
        }
    }
    let node = |i: usize| i as f64 * dx;
    match signs.as_slice() {
        [] => ShapeClass { tag: Shape::Flat, location: None },
        [1] => ShapeClass { tag: Shape::MonotoneIncreasing, location: None },
        [-1] => ShapeClass { tag: Shape::MonotoneDecreasing, location: None },
        [1, -1] => {
            let i = (0..n).fold(0, |b, i| if values[i] > values[b] { i } else { b });
            ShapeClass { tag: Shape::SinglePeaked, location: Some(node(i)) }
        }
        [-1, 1] => {
            let i = (0..n).fold(0, |b, i| if values[i] < values[b] { i } else { b });
            ShapeClass { tag: Shape::SingleDipped, location: Some(node(i)) }
        }
        _ => ShapeClass { tag: Shape::Neither, location: None },
    }
}

pub fn classify_shape(d: &GridDensity1D, tol: f64) -> ShapeClass {
    classify_values(d.values(), tol)
}

/// [`classify_shape`] with the tolerance scaled to the density's maximum.
pub fn classify_shape_default(d: &GridDensity1D) -> ShapeClass {
    let max = d.values().iter().cloned().fold(0.0, f64::max);
    classify_shape(d, SHAPE_TOL_REL * max.max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderVerdict {
    D1Larger,
    D2Larger,
    Equal,
    Incomparable,
}

/// Sign summary of `a - b` over paired rates; `larger_when_positive` says
/// whether a positive difference makes the first distribution the larger one.
fn order_verdict(pairs: impl Iterator<Item = (f64, f64)>, larger_when_positive: bool) -> OrderVerdict {
    let (mut pos, mut neg) = (false, false);
    for (a, b) in pairs {
        let tol = ORDER_TOL * a.abs().max(b.abs()).max(1.0);
        let diff = a - b;
        if diff > tol {
            pos = true;
        } else if diff < -tol {
            neg = true;
        }
    }
    match (pos, neg) {
        (false, false) => OrderVerdict::Equal,
        (true, true) => OrderVerdict::Incomparable,
        (true, false) if larger_when_positive => OrderVerdict::D1Larger,
        (true, false) => OrderVerdict::D2Larger,
        (false, true) if larger_when_positive => OrderVerdict::D2Larger,
        (false, true) => OrderVerdict::D1Larger,
    }
}

fn check_same_grid(d1: &GridDensity1D, d2: &GridDensity1D) -> Result<()> {
    if d1.len() != d2.len() {
        return Err(Error::Domain(format!("grids differ in size: {} vs {}", d1.len(), d2.len())));
    }
    Ok(())
}

/// Compare `f1/F1` against `f2/F2` on interior nodes. `D1Larger` means `d1`
/// dominates in the reversed hazard rate order.
pub fn reversed_hazard_compare(d1: &GridDensity1D, d2: &GridDensity1D) -> Result<OrderVerdict> {
    check_same_grid(d1, d2)?;
    let (c1, c2) = (d1.cdf_nodes(), d2.cdf_nodes());
    let (m1, m2) = (d1.integral(), d2.integral());
    let n = d1.len();
    let pairs = (1..n - 1)
        .filter(|&i| c1[i] >= ORDER_DENOM_FLOOR && c2[i] >= ORDER_DENOM_FLOOR)
        .map(|i| (d1.values()[i] / m1 / c1[i], d2.values()[i] / m2 / c2[i]));
    Ok(order_verdict(pairs, true))
}

/// Compare `f1/(1-F1)` against `f2/(1-F2)`. The distribution with the smaller
/// hazard rate is the larger one, so `D1Larger` means `h1 <= h2` everywhere.
pub fn hazard_compare(d1: &GridDensity1D, d2: &GridDensity1D) -> Result<OrderVerdict> {
    check_same_grid(d1, d2)?;
    let (s1, s2) = (d1.survival_nodes(), d2.survival_nodes());
    let (m1, m2) = (d1.integral(), d2.integral());
    let n = d1.len();
    let pairs = (1..n - 1)
        .filter(|&i| s1[i] >= ORDER_DENOM_FLOOR && s2[i] >= ORDER_DENOM_FLOOR)
        .map(|i| (d1.values()[i] / m1 / s1[i], d2.values()[i] / m2 / s2[i]));
    Ok(order_verdict(pairs, false))
}
