//! Composite Gauss-Legendre quadrature over caller-supplied subsegments.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    /// Nodes on `(-1, 1)`, ascending.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Problem("Gauss-Legendre rule needs at least one node".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    /// Sum of the rule over consecutive pairs of `breaks`. Terms are added in
    /// order, so the result is deterministic.
    pub fn integrate<F>(&self, breaks: &[f64], mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut total = 0.0;
        for w in breaks.windows(2) {
            for (x, wt) in self.mapped(w[0], w[1]) {
                total += wt * f(x)?;
            }
        }
        Ok(total)
    }

    /// Vector-valued version of [`GaussLegendre::integrate`].
    pub fn integrate_vec<F>(&self, breaks: &[f64], dim: usize, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(f64) -> Result<Vec<f64>>,
    {
        let mut total = vec![0.0; dim];
        for w in breaks.windows(2) {
            for (x, wt) in self.mapped(w[0], w[1]) {
                for (acc, v) in total.iter_mut().zip(f(x)?) {
                    *acc += wt * v;
                }
            }
        }
        Ok(total)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..=20 {
            let rule = GaussLegendre::new(n).unwrap();
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}");
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(rule.nodes.iter().all(|x| x.abs() < 1.0));
        }
    }

    #[test]
    fn exact_for_degree_2n_minus_1() {
        for n in 1..=10 {
            let rule = GaussLegendre::new(n).unwrap();
            for deg in 0..2 * n {
                let got = rule.integrate(&[0.0, 1.0, 2.5], |x| Ok(x.powi(deg as i32))).unwrap();
                let want = 2.5f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((got - want).abs() < 1e-12 * want.max(1.0), "n = {n}, deg = {deg}");
            }
        }
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(GaussLegendre::new(0).is_err());
    }
}
