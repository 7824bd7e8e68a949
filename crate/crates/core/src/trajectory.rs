//! Vector-valued piecewise polynomials on `[t1 - tau, t2]`.
//!
//! Each segment stores its coefficients in the local variable
//! `s = t - b_i`, where `b_i` is the segment's left endpoint. Evaluation at a
//! breakpoint is always one-sided; the caller picks the side.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Symbol};

pub const DEFAULT_MAX_DEGREE: usize = 5;
pub const DEFAULT_CONTINUITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTrajectory {
    dim: usize,
    order: usize,
    breakpoints: Vec<f64>,
    /// `[interval][coordinate][coefficient]`
    segments: Vec<Vec<Vec<f64>>>,
}

impl PiecewiseTrajectory {
    /// Builds a trajectory of smoothness class `W^{order,inf}` with the default
    /// degree cap and continuity tolerance.
    pub fn new(
        dim: usize,
        order: usize,
        breakpoints: Vec<f64>,
        segments: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        Self::with_limits(
            dim,
            order,
            breakpoints,
            segments,
            DEFAULT_MAX_DEGREE,
            DEFAULT_CONTINUITY_TOL,
        )
    }

    pub fn with_limits(
        dim: usize,
        order: usize,
        breakpoints: Vec<f64>,
        segments: Vec<Vec<Vec<f64>>>,
        max_degree: usize,
        continuity_tol: f64,
    ) -> Result<Self> {
        if dim == 0 || order == 0 {
            return Err(Error::Trajectory("dimension and order must be positive".into()));
        }
        if breakpoints.len() < 2 {
            return Err(Error::Trajectory("need at least two breakpoints".into()));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Trajectory("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Trajectory("breakpoints must be strictly increasing".into()));
        }
        if segments.len() != breakpoints.len() - 1 {
            return Err(Error::Trajectory(format!(
                "{} breakpoints need {} segments, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                segments.len()
            )));
        }
        for (i, seg) in segments.iter().enumerate() {
            if seg.len() != dim {
                return Err(Error::Trajectory(format!(
                    "segment {i} has {} coordinates, expected {dim}",
                    seg.len()
                )));
            }
            for coeffs in seg {
                if coeffs.is_empty() || coeffs.len() > max_degree + 1 {
                    return Err(Error::Trajectory(format!(
                        "segment {i}: need between 1 and {} coefficients, got {}",
                        max_degree + 1,
                        coeffs.len()
                    )));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Trajectory(format!("segment {i}: non-finite coefficient")));
                }
            }
        }
        let traj = PiecewiseTrajectory {
            dim,
            order,
            breakpoints,
            segments,
        };
        traj.check_continuity(continuity_tol)?;
        Ok(traj)
    }

    /// Continuous piecewise-linear interpolant through `(times[j], values[j])`.
    pub fn piecewise_linear(order: usize, times: &[f64], values: &[Vec<f64>]) -> Result<Self> {
        if times.len() != values.len() || values.is_empty() {
            return Err(Error::Trajectory("times and values differ in length".into()));
        }
        let dim = values[0].len();
        let segments = times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| {
                let h = t[1] - t[0];
                (0..dim)
                    .map(|i| vec![v[0][i], (v[1][i] - v[0][i]) / h])
                    .collect()
            })
            .collect();
        Self::new(dim, order, times.to_vec(), segments)
    }

    /// Piecewise Hermite interpolant matching derivatives `0..=jet` of a
    /// smooth function at every breakpoint; degree `2*jet + 1`.
    ///
    /// `jets(t)[k][i]` is the `k`-th derivative of coordinate `i` at `t`.
    pub fn hermite(
        order: usize,
        breakpoints: &[f64],
        jet: usize,
        jets: impl Fn(f64) -> Vec<Vec<f64>>,
    ) -> Result<Self> {
        let values: Vec<Vec<Vec<f64>>> = breakpoints.iter().map(|&b| jets(b)).collect();
        let dim = values.first().and_then(|v| v.first()).map_or(0, Vec::len);
        if values.iter().any(|v| v.len() <= jet || v.iter().any(|c| c.len() != dim)) {
            return Err(Error::Trajectory("jet function returned the wrong shape".into()));
        }
        let degree = 2 * jet + 1;
        let mut factorial = vec![1.0; degree + 1];
        for k in 1..=degree {
            factorial[k] = factorial[k - 1] * k as f64;
        }
        let mut segments = Vec::with_capacity(breakpoints.len().saturating_sub(1));
        for (idx, w) in breakpoints.windows(2).enumerate() {
            let len = w[1] - w[0];
            let (left, right) = (&values[idx], &values[idx + 1]);
            // upper coefficients c_{jet+1..=degree} from the right-end conditions
            let size = jet + 1;
            let mut mat = DMatrix::<f64>::zeros(size, size);
            for d in 0..=jet {
                for (col, k) in (jet + 1..=degree).enumerate() {
                    mat[(d, col)] = factorial[k] / factorial[k - d] * len.powi((k - d) as i32);
                }
            }
            let lu = mat.lu();
            let mut seg = Vec::with_capacity(dim);
            for i in 0..dim {
                let lower: Vec<f64> = (0..=jet).map(|k| left[k][i] / factorial[k]).collect();
                let rhs = DVector::from_iterator(
                    size,
                    (0..=jet).map(|d| {
                        let known: f64 = (d..=jet)
                            .map(|k| lower[k] * factorial[k] / factorial[k - d] * len.powi((k - d) as i32))
                            .sum();
                        right[d][i] - known
                    }),
                );
                let upper = lu
                    .solve(&rhs)
                    .ok_or_else(|| Error::Trajectory("singular Hermite system".into()))?;
                let mut coeffs = lower;
                coeffs.extend(upper.iter());
                seg.push(coeffs);
            }
            segments.push(seg);
        }
        Self::with_limits(
            dim,
            order,
            breakpoints.to_vec(),
            segments,
            degree.max(DEFAULT_MAX_DEGREE),
            DEFAULT_CONTINUITY_TOL,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Vec<Vec<f64>>] {
        &self.segments
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().expect("at least two breakpoints")
    }

    fn span(&self) -> f64 {
        self.end() - self.start()
    }

    fn coefficient_scale(&self, segment: usize) -> f64 {
        self.segments[segment]
            .iter()
            .flatten()
            .fold(0.0f64, |acc, c| acc.max(c.abs()))
    }

    fn check_continuity(&self, tol: f64) -> Result<()> {
        for j in 1..self.breakpoints.len() - 1 {
            let len = self.breakpoints[j] - self.breakpoints[j - 1];
            let scale = 1.0 + self.coefficient_scale(j - 1).max(self.coefficient_scale(j));
            for k in 0..self.order {
                for i in 0..self.dim {
                    let left = poly_derivative(&self.segments[j - 1][i], len, k);
                    let right = poly_derivative(&self.segments[j][i], 0.0, k);
                    if (left - right).abs() > tol * scale {
                        return Err(Error::Trajectory(format!(
                            "derivative {k} of coordinate {i} jumps by {:e} at t = {}",
                            left - right,
                            self.breakpoints[j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Index of the segment selected by `side` at `t`, and `t` clamped into
    /// the domain when it sits within rounding distance of an end.
    fn locate(&self, t: f64, side: Side) -> Result<(usize, f64)> {
        let (lo, hi) = (self.start(), self.end());
        let slack = 1e-12 * self.span().max(1.0);
        let out = || Error::OutOfDomain { t, lo, hi };
        if !t.is_finite() || t < lo - slack || t > hi + slack {
            return Err(out());
        }
        let t = t.clamp(lo, hi);
        let last = self.segments.len() - 1;
        let idx = match side {
            Side::Left => {
                if t == lo {
                    return Err(out());
                }
                self.breakpoints.partition_point(|&b| b < t) - 1
            }
            Side::Right => {
                if t == hi {
                    return Err(out());
                }
                self.breakpoints.partition_point(|&b| b <= t) - 1
            }
        };
        Ok((idx.min(last), t))
    }

    /// `k`-th derivative at `t`, taken from the segment on `side`.
    pub fn eval_derivative(&self, t: f64, k: usize, side: Side) -> Result<Vec<f64>> {
        if k > self.order {
            return Err(Error::OrderTooHigh { k, m: self.order });
        }
        let (idx, t) = self.locate(t, side)?;
        let s = t - self.breakpoints[idx];
        Ok(self.segments[idx]
            .iter()
            .map(|coeffs| poly_derivative(coeffs, s, k))
            .collect())
    }

    /// Derivatives `0..=k_max` at `t` from one segment.
    pub fn eval_jet(&self, t: f64, k_max: usize, side: Side) -> Result<Vec<Vec<f64>>> {
        if k_max > self.order {
            return Err(Error::OrderTooHigh {
                k: k_max,
                m: self.order,
            });
        }
        let (idx, t) = self.locate(t, side)?;
        let s = t - self.breakpoints[idx];
        Ok((0..=k_max)
            .map(|k| {
                self.segments[idx]
                    .iter()
                    .map(|coeffs| poly_derivative(coeffs, s, k))
                    .collect()
            })
            .collect())
    }
}

/// `k`-th derivative of `sum c_j s^j` at `s`.
fn poly_derivative(coeffs: &[f64], s: f64, k: usize) -> f64 {
    if k >= coeffs.len() {
        return 0.0;
    }
    let mut acc = 0.0;
    for j in (k..coeffs.len()).rev() {
        let falling: f64 = ((j - k + 1)..=j).map(|x| x as f64).product();
        acc = acc * s + coeffs[j] * falling;
    }
    acc
}

/// `(t, q(t), ..., q^(m)(t), q(t-tau), ..., q^(m)(t-tau))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedArgs {
    pub t: f64,
    /// `current[k][i]` is `q_i^(k)(t)`.
    pub current: Vec<Vec<f64>>,
    /// `delayed[k][i]` is `q_i^(k)(t - tau)`.
    pub delayed: Vec<Vec<f64>>,
}

impl DelayedArgs {
    pub fn dim(&self) -> usize {
        self.current.first().map_or(0, Vec::len)
    }

    pub fn order(&self) -> usize {
        self.current.len() - 1
    }

    /// Flattened scalar entries: `1 + 2 n (m + 1)` of them.
    pub fn flatten(&self) -> Vec<f64> {
        std::iter::once(self.t)
            .chain(self.current.iter().flatten().copied())
            .chain(self.delayed.iter().flatten().copied())
            .collect()
    }

    /// Binding map keyed by canonical variable names.
    pub fn to_map(&self) -> std::collections::BTreeMap<String, f64> {
        let mut map = std::collections::BTreeMap::new();
        map.insert("t".to_string(), self.t);
        for (delayed, blocks) in [(false, &self.current), (true, &self.delayed)] {
            for (deriv, block) in blocks.iter().enumerate() {
                for (coord, v) in block.iter().enumerate() {
                    let sym = Symbol::State {
                        coord,
                        deriv,
                        delayed,
                    };
                    map.insert(sym.name(), *v);
                }
            }
        }
        map
    }
}

impl Bindings for DelayedArgs {
    fn value(&self, symbol: &Symbol) -> Option<f64> {
        match symbol {
            Symbol::Time => Some(self.t),
            Symbol::State {
                coord,
                deriv,
                delayed,
            } => {
                let blocks = if *delayed { &self.delayed } else { &self.current };
                blocks.get(*deriv)?.get(*coord).copied()
            }
            Symbol::Other(_) => None,
        }
    }
}

/// Assembles the delayed argument vector at `t`; `side` selects the segment
/// for both the current and the delayed stencil.
pub fn delayed_args(
    traj: &PiecewiseTrajectory,
    t: f64,
    tau: f64,
    m: usize,
    side: Side,
) -> Result<DelayedArgs> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::Problem(format!("delay must be positive, got {tau}")));
    }
    let slack = 1e-12 * (traj.end() - traj.start()).max(1.0);
    if t - tau < traj.start() - slack || t > traj.end() + slack {
        return Err(Error::OutOfDomain {
            t,
            lo: traj.start() + tau,
            hi: traj.end(),
        });
    }
    Ok(DelayedArgs {
        t,
        current: traj.eval_jet(t, m, side)?,
        delayed: traj.eval_jet(t - tau, m, side)?,
    })
}

/// Sorted union of `B`, `B + tau`, `B - tau` and `{t2 - tau}` restricted to
/// `window`, where `B` are the trajectory breakpoints and `t2` its right end.
/// The window ends are always included.
pub fn effective_breakpoints(traj: &PiecewiseTrajectory, tau: f64, window: (f64, f64)) -> Vec<f64> {
    let (a, b) = window;
    let tol = 1e-12 * (traj.end() - traj.start()).max(b - a).max(1.0);
    let mut points: Vec<f64> = vec![a, b, traj.end() - tau];
    for &bp in traj.breakpoints() {
        points.extend([bp, bp + tau, bp - tau]);
    }
    points.retain(|&p| p >= a - tol && p <= b + tol);
    points.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(points.len());
    for p in points {
        let p = p.clamp(a, b);
        match out.last() {
            Some(&last) if p - last <= tol => {
                // keep the exact window end when a shifted point lands on it
                if p == b {
                    *out.last_mut().unwrap() = b;
                }
            }
            _ => out.push(p),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The nonsmooth extremal: -t, t, -t + 4 on (-1,0], (0,2], (2,3].
    fn corner_path() -> PiecewiseTrajectory {
        PiecewiseTrajectory::new(
            1,
            1,
            vec![-1.0, 0.0, 2.0, 3.0],
            vec![vec![vec![1.0, -1.0]], vec![vec![0.0, 1.0]], vec![vec![2.0, -1.0]]],
        )
        .unwrap()
    }

    /// The zigzag extremal: -t, t, -t + 2, t - 2.
    fn zigzag_path() -> PiecewiseTrajectory {
        PiecewiseTrajectory::piecewise_linear(
            1,
            &[-1.0, 0.0, 1.0, 2.0, 3.0],
            &[vec![1.0], vec![0.0], vec![1.0], vec![0.0], vec![1.0]],
        )
        .unwrap()
    }

    #[test]
    fn one_sided_derivatives() {
        let q = corner_path();
        assert_eq!(q.eval_derivative(0.5, 1, Side::Right).unwrap(), vec![1.0]);
        assert_eq!(q.eval_derivative(2.0, 1, Side::Left).unwrap(), vec![1.0]);
        assert_eq!(q.eval_derivative(2.0, 1, Side::Right).unwrap(), vec![-1.0]);
        for &b in &[0.0, 2.0] {
            let l = q.eval_derivative(b, 0, Side::Left).unwrap()[0];
            let r = q.eval_derivative(b, 0, Side::Right).unwrap()[0];
            assert!((l - r).abs() <= 1e-9);
        }
    }

    #[test]
    fn domain_ends_are_one_sided() {
        let q = corner_path();
        assert!(q.eval_derivative(-1.0, 0, Side::Right).is_ok());
        assert!(q.eval_derivative(-1.0, 0, Side::Left).is_err());
        assert!(q.eval_derivative(3.0, 0, Side::Left).is_ok());
        assert!(q.eval_derivative(3.0, 0, Side::Right).is_err());
        assert!(matches!(
            q.eval_derivative(3.5, 0, Side::Left),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            q.eval_derivative(1.0, 2, Side::Left),
            Err(Error::OrderTooHigh { k: 2, m: 1 })
        ));
    }

    #[test]
    fn rejects_discontinuity() {
        let err = PiecewiseTrajectory::new(
            1,
            1,
            vec![0.0, 1.0, 2.0],
            vec![vec![vec![0.0, 1.0]], vec![vec![1.5, 0.0]]],
        );
        assert!(matches!(err, Err(Error::Trajectory(_))));
        // a slope jump is fine for order 1 but not for order 2
        let kink = vec![vec![vec![0.0, 1.0]], vec![vec![1.0, -1.0]]];
        assert!(PiecewiseTrajectory::new(1, 1, vec![0.0, 1.0, 2.0], kink.clone()).is_ok());
        assert!(PiecewiseTrajectory::new(1, 2, vec![0.0, 1.0, 2.0], kink).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PiecewiseTrajectory::new(1, 1, vec![0.0, 0.0], vec![vec![vec![0.0]]]).is_err());
        assert!(PiecewiseTrajectory::new(1, 1, vec![0.0, 1.0], vec![]).is_err());
        assert!(PiecewiseTrajectory::new(2, 1, vec![0.0, 1.0], vec![vec![vec![0.0]]]).is_err());
        assert!(PiecewiseTrajectory::new(1, 1, vec![0.0, 1.0], vec![vec![vec![0.0; 7]]]).is_err());
    }

    #[test]
    fn delayed_args_on_corner_path() {
        let q = corner_path();
        let args = delayed_args(&q, 0.5, 1.0, 1, Side::Right).unwrap();
        assert_eq!(args.flatten(), vec![0.5, 0.5, 1.0, 0.5, -1.0]);
        // at t1 the delayed block comes from the prehistory
        let args = delayed_args(&q, 0.0, 1.0, 1, Side::Right).unwrap();
        assert_eq!(args.delayed, vec![vec![1.0], vec![-1.0]]);
        assert!(delayed_args(&q, -0.5, 1.0, 1, Side::Right).is_err());
    }

    #[test]
    fn delayed_args_on_zigzag() {
        let q = zigzag_path();
        let args = delayed_args(&q, 2.5, 1.0, 1, Side::Right).unwrap();
        assert_eq!(args.flatten(), vec![2.5, 0.5, 1.0, 0.5, -1.0]);
        let map = args.to_map();
        assert_eq!(map["q0_d1_tau"], -1.0);
        assert_eq!(map.len(), 5);
    }

    #[test]
    fn effective_breakpoints_examples() {
        assert_eq!(
            effective_breakpoints(&corner_path(), 1.0, (0.0, 3.0)),
            vec![0.0, 1.0, 2.0, 3.0]
        );
        assert_eq!(
            effective_breakpoints(&zigzag_path(), 1.0, (0.0, 3.0)),
            vec![0.0, 1.0, 2.0, 3.0]
        );
        let single = PiecewiseTrajectory::new(1, 1, vec![0.0, 1.0], vec![vec![vec![0.0, 1.0]]]).unwrap();
        let pts = effective_breakpoints(&single, 0.3, (0.0, 1.0));
        assert_eq!(pts.first(), Some(&0.0));
        assert_eq!(pts.last(), Some(&1.0));
        assert!(pts.iter().any(|&p| (p - 0.7).abs() < 1e-15));
    }

    #[test]
    fn effective_breakpoints_idempotent_and_window_closed() {
        let q = corner_path();
        let all = effective_breakpoints(&q, 0.7, (0.0, 3.0));
        let window = (0.5, 2.5);
        let restricted = effective_breakpoints(&q, 0.7, window);
        let expected: Vec<f64> = std::iter::once(window.0)
            .chain(all.iter().copied().filter(|&p| p > window.0 && p < window.1))
            .chain(std::iter::once(window.1))
            .collect();
        assert_eq!(restricted, expected);
        assert_eq!(effective_breakpoints(&q, 0.7, window), restricted);
    }

    #[test]
    fn hermite_reproduces_sine() {
        let bps: Vec<f64> = (0..=20).map(|i| -0.1 + 0.16 * i as f64).collect();
        let q = PiecewiseTrajectory::hermite(1, &bps, 2, |t| {
            vec![vec![t.sin()], vec![t.cos()], vec![-t.sin()]]
        })
        .unwrap();
        for i in 0..200 {
            let t = -0.09 + 3.1 * i as f64 / 200.0;
            let v = q.eval_derivative(t, 1, Side::Right).unwrap()[0];
            assert!((v - t.cos()).abs() < 1e-8, "t = {t}");
        }
    }
}
