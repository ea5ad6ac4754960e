//! Uniform grids on the unit interval and the piecewise-linear quadrature
//! shared by every density in the crate.

/// Nodes `i / (n - 1)` for `i = 0..n`, with the last node pinned to exactly 1.
pub fn uniform_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs at least two nodes");
    let dx = 1.0 / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
    nodes[n - 1] = 1.0;
    nodes
}

/// Composite trapezoid rule for samples spaced `dx` apart.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dx * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Running trapezoid integral; `out[0] = 0` and `out[i]` integrates up to node `i`.
pub fn cumulative_trapezoid(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Trapezoid weights for a uniform grid of `n` nodes on [0, 1].
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let dx = 1.0 / (n - 1) as f64;
    let mut w = vec![dx; n];
    w[0] = 0.5 * dx;
    w[n - 1] = 0.5 * dx;
    w
}

/// A nonnegative function on [0, 1] given by its values on a uniform grid and
/// interpolated linearly in between. Its integral, CDF and inverse CDF are
/// exact for the interpolant, so they agree with the trapezoid rule at nodes.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PiecewiseLinear {
    values: Vec<f64>,
    cum: Vec<f64>,
    dx: f64,
}

impl PiecewiseLinear {
    pub(crate) fn new(values: Vec<f64>) -> Self {
        let dx = 1.0 / (values.len() - 1) as f64;
        let cum = cumulative_trapezoid(&values, dx);
        Self { values, cum, dx }
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn dx(&self) -> f64 {
        self.dx
    }

    pub(crate) fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub(crate) fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let last = self.values.len() - 2;
        let s = x / self.dx;
        let i = (s.floor().max(0.0) as usize).min(last);
        let t = (s - i as f64).clamp(0.0, 1.0);
        (i, t)
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x.clamp(0.0, 1.0));
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// Integral of the interpolant over `[0, x]` (x clamped to [0, 1]).
    pub(crate) fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return self.total();
        }
        let (i, t) = self.locate(x);
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        self.cum[i] + self.dx * t * (f0 + 0.5 * t * (f1 - f0))
    }

    /// Smallest `x` with `cdf(x) = u * total()`, `u` in [0, 1].
    pub(crate) fn inverse_cdf(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.total();
        let n = self.values.len();
        // first node whose cumulative mass reaches the target
        let k = self.cum.partition_point(|&c| c < target);
        if k == 0 {
            return 0.0;
        }
        if k >= n {
            return 1.0;
        }
        let i = k - 1;
        let r = (target - self.cum[i]) / self.dx;
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let a = 0.5 * (f1 - f0);
        // a t^2 + f0 t - r = 0, in the cancellation-free form
        let disc = (f0 * f0 + 4.0 * a * r).max(0.0);
        let denom = f0 + disc.sqrt();
        let t = if denom > 0.0 { (2.0 * r / denom).clamp(0.0, 1.0) } else { 1.0 };
        (i as f64 + t) * self.dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_cover_unit_interval() {
        let x = uniform_nodes(2001);
        assert_eq!(x[0], 0.0);
        assert_eq!(x[2000], 1.0);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(x[1000], 0.5);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let x = uniform_nodes(11);
        let v: Vec<f64> = x.iter().map(|&t| 2.0 * t).collect();
        assert!((trapezoid(&v, 0.1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cdf_matches_cumulative_at_nodes_and_inverts() {
        let x = uniform_nodes(101);
        let v: Vec<f64> = x.iter().map(|&t| 6.0 * t * (1.0 - t)).collect();
        let pl = PiecewiseLinear::new(v);
        for (&t, &cum) in x.iter().zip(pl.cumulative()) {
            assert!((pl.cdf(t) - cum).abs() < 1e-14);
        }
        for &u in &[0.0, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0] {
            let q = pl.inverse_cdf(u);
            assert!((pl.cdf(q) / pl.total() - u).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn cdf_derivative_is_the_interpolant() {
        let x = uniform_nodes(51);
        let v: Vec<f64> = x.iter().map(|&t| 1.0 + t * t).collect();
        let pl = PiecewiseLinear::new(v);
        let h = 1e-7;
        for &t in &[0.013, 0.25, 0.611, 0.97] {
            let fd = (pl.cdf(t + h) - pl.cdf(t - h)) / (2.0 * h);
            assert!((fd - pl.eval(t)).abs() < 1e-6);
        }
    }
}
