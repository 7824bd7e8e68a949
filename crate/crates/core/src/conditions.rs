//! Euler-Lagrange and DuBois-Reymond conditions with time delay, for any
//! order `m`.
//!
//! Slot conventions follow [`PartialIndex`]: `Current(k)` is the partial with
//! respect to `q^(k)(t)` and `Delayed(k)` with respect to `q^(k)(t - tau)`.
//! On the advanced region `[t1, t2 - tau]` the delayed partials enter shifted
//! to `t + tau`:
//!
//! ```text
//! phi_k(t) = dL/dq^(k)[q](t) + dL/dq^(k)_tau[q](t + tau)    t <= t2 - tau
//! phi_k(t) = dL/dq^(k)[q](t)                                t >= t2 - tau
//! psi^j(t) = sum_{i=0}^{m-j} (-1)^i d^i/dt^i phi_{i+j}(t)
//! ```
//!
//! `psi^0` is the differential Euler-Lagrange residual. Time derivatives
//! along the trajectory are central finite differences confined to one
//! smooth segment.

use crate::error::{Error, Result};
use crate::functional::{PartialIndex, Problem};
use crate::quadrature::GaussLegendre;
use crate::report::{
    assemble, sample_points, Criterion, FirstIntegralReport, FitMode, Region, ResidualReport,
    Sample, Sampling,
};
use crate::trajectory::{delayed_args, effective_breakpoints, DelayedArgs, PiecewiseTrajectory, Side};

/// Richardson-extrapolated central difference of order `order` at `t`.
///
/// The stencil (five points for orders up to four) must fit strictly inside
/// `segment`. The nominal step is `max(1e-5, 1e-3 * len)`, grown by a factor
/// of four per extra derivative order to keep rounding error down; it shrinks
/// to fit near the segment ends, and a step below a tenth of nominal (a
/// thousandth for first derivatives) is an error.
pub fn total_derivative<F>(mut f: F, t: f64, order: usize, segment: (f64, f64)) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if order == 0 {
        return f(t);
    }
    let (a, b) = segment;
    let crosses = || Error::StencilCrossesBreakpoint { t, order, a, b };
    if !(t > a && t < b) {
        return Err(crosses());
    }
    let reach = order.div_ceil(2).max(2);
    let nominal = (1e-5f64).max(1e-3 * (b - a)) * 4f64.powi(order as i32 - 1);
    let room = (t - a).min(b - t) / (reach as f64 * 1.01);
    let h = nominal.min(room);
    let floor = if order == 1 { 1e-3 * nominal } else { 0.1 * nominal };
    if h < floor {
        return Err(crosses());
    }
    let weights = central_weights(reach, order);
    // differences against the centre value, so constants give exactly zero
    let centre = f(t)?;
    let mut stencil = |h: f64| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; centre.len()];
        for (offset, w) in (-(reach as i64)..=reach as i64).zip(&weights) {
            if offset == 0 {
                continue;
            }
            let v = f(t + offset as f64 * h)?;
            for ((a, x), c) in acc.iter_mut().zip(v).zip(&centre) {
                *a += w * (x - c);
            }
        }
        let scale = h.powi(order as i32);
        Ok(acc.into_iter().map(|x| x / scale).collect())
    };
    let coarse = stencil(h)?;
    let fine = stencil(0.5 * h)?;
    // leading error term of the symmetric stencil is h^p with p even
    let p = 2 * (2 * reach + 1 - order).div_ceil(2);
    let r = 2f64.powi(p as i32);
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (r * f - c) / (r - 1.0))
        .collect())
}

/// Weights for the `order`-th derivative on the integer stencil
/// `-reach..=reach` (Fornberg's recursion).
fn central_weights(reach: usize, order: usize) -> Vec<f64> {
    let xs: Vec<f64> = (-(reach as i64)..=reach as i64).map(|x| x as f64).collect();
    let n = xs.len();
    let mut c = vec![vec![vec![0.0; n]; n]; order + 1];
    c[0][0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i];
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i][i] = c1 * (k as f64 * c[k - 1][i - 1][i - 1] - c5 * c[k][i - 1][i - 1]) / c2;
                }
                c[0][i][i] = -c1 * c5 * c[0][i - 1][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][i][j] = (c4 * c[k][i - 1][j] - k as f64 * c[k - 1][i - 1][j]) / c3;
            }
            c[0][i][j] = c4 * c[0][i - 1][j] / c3;
        }
        c1 = c2;
    }
    (0..n).map(|j| c[order][n - 1][j]).collect()
}

/// A problem paired with a trajectory, plus the effective breakpoints of
/// `[t1, t2]` that every stencil and quadrature respects.
#[derive(Debug, Clone)]
pub struct Along<'a> {
    problem: &'a Problem,
    traj: &'a PiecewiseTrajectory,
    breaks: Vec<f64>,
    warnings: Vec<String>,
}

impl<'a> Along<'a> {
    pub fn new(problem: &'a Problem, traj: &'a PiecewiseTrajectory) -> Result<Self> {
        let warnings = problem.compatibility(traj)?;
        let breaks = effective_breakpoints(traj, problem.tau(), (problem.t1(), problem.t2()));
        Ok(Along {
            problem,
            traj,
            breaks,
            warnings,
        })
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    pub fn trajectory(&self) -> &'a PiecewiseTrajectory {
        self.traj
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Boundary-condition warnings found when pairing.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn region_of(&self, t: f64) -> Region {
        if t <= self.problem.junction() {
            Region::Advanced
        } else {
            Region::Terminal
        }
    }

    /// The open effective segment containing `t`, if `t` is not itself an
    /// effective breakpoint.
    pub fn segment_of(&self, t: f64) -> Option<(f64, f64)> {
        let idx = self.breaks.partition_point(|&b| b <= t);
        if idx == 0 || idx == self.breaks.len() || self.breaks[idx - 1] == t {
            return None;
        }
        Some((self.breaks[idx - 1], self.breaks[idx]))
    }

    fn segment_or_point(&self, t: f64) -> (f64, f64) {
        // a degenerate segment makes any positive-order stencil fail
        self.segment_of(t).unwrap_or((t, t))
    }

    fn side(&self, s: f64) -> Side {
        if s >= self.traj.end() {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn args(&self, s: f64) -> Result<DelayedArgs> {
        delayed_args(self.traj, s, self.problem.tau(), self.problem.order(), self.side(s))
    }

    pub fn jet(&self, s: f64) -> Result<Vec<Vec<f64>>> {
        self.traj.eval_jet(s, self.problem.order(), self.side(s))
    }

    fn check_region(&self, region: Region, t: f64) -> Result<()> {
        let j = self.problem.junction();
        let ok = match region {
            Region::Advanced => t <= j && t >= self.problem.t1(),
            Region::Terminal => t >= j && t <= self.problem.t2(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Problem(format!(
                "t = {t} is outside region {}",
                region.number()
            )))
        }
    }

    /// `phi_k` on `region`, pointwise.
    pub fn phi(&self, k: usize, region: Region, s: f64) -> Result<Vec<f64>> {
        let mut v = self.problem.partial(PartialIndex::Current(k), &self.args(s)?)?;
        if region == Region::Advanced {
            let ahead = self.args(s + self.problem.tau())?;
            let adv = self.problem.partial(PartialIndex::Delayed(k), &ahead)?;
            for (a, b) in v.iter_mut().zip(adv) {
                *a += b;
            }
        }
        Ok(v)
    }

    /// `sum_i (-1)^i d^i/dt^i phi_{i+j}` over `i = 0..=m-j`, with every
    /// derivative order raised by `extra`.
    fn alternating_sum(&self, j: usize, region: Region, t: f64, extra: usize) -> Result<Vec<f64>> {
        let m = self.problem.order();
        let segment = self.segment_or_point(t);
        let mut acc = vec![0.0; self.problem.dim()];
        for i in 0..=m - j {
            let d = total_derivative(|s| self.phi(i + j, region, s), t, i + extra, segment)?;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            for (a, x) in acc.iter_mut().zip(d) {
                *a += sign * x;
            }
        }
        Ok(acc)
    }

    /// `psi^j` on `region` at `t`, `0 <= j <= m`.
    pub fn psi(&self, j: usize, region: Region, t: f64) -> Result<Vec<f64>> {
        let m = self.problem.order();
        if j > m {
            return Err(Error::Problem(format!("psi index {j} exceeds order {m}")));
        }
        self.check_region(region, t)?;
        self.alternating_sum(j, region, t, 0)
    }

    /// `psi^0`: the differential Euler-Lagrange residual.
    pub fn el_residual(&self, t: f64) -> Result<Vec<f64>> {
        self.psi(0, self.region_of(t), t)
    }

    /// `d/dt psi^j - (phi_{j-1} - psi^{j-1})`; `d/dt psi^j` is taken by
    /// differencing `psi^j` itself, so the two sides are computed by
    /// different routes.
    pub fn psi_identity_residual(&self, j: usize, t: f64) -> Result<Vec<f64>> {
        let m = self.problem.order();
        if j == 0 || j > m {
            return Err(Error::Problem(format!("psi identity needs 1 <= j <= {m}, got {j}")));
        }
        let region = self.region_of(t);
        let segment = self.segment_or_point(t);
        let d_psi = total_derivative(|s| self.alternating_sum(j, region, s, 0), t, 1, segment)?;
        let phi = self.phi(j - 1, region, t)?;
        let lower = self.psi(j - 1, region, t)?;
        Ok(d_psi
            .iter()
            .zip(phi.iter().zip(&lower))
            .map(|(d, (p, l))| d - (p - l))
            .collect())
    }

    /// `sum_{i=0}^m (-1)^(m-i-1) I^(m-i)[phi_i](t)` with `I^k` the `k`-fold
    /// integral from `t2 - tau`; equals a polynomial of degree `m - 1` on an
    /// integral-form extremal.
    pub fn el_integral_value(&self, rule: &GaussLegendre, t: f64) -> Result<Vec<f64>> {
        let m = self.problem.order();
        let n = self.problem.dim();
        let junction = self.problem.junction();
        let mut acc = vec![0.0; n];
        for i in 0..=m {
            let folds = m - i;
            let sign = if (m + 1 - i).is_multiple_of(2) { 1.0 } else { -1.0 };
            let term = if folds == 0 {
                self.phi(i, self.region_of(t), t)?
            } else {
                self.repeated_integral(rule, i, folds, junction, t)?
            };
            for (a, x) in acc.iter_mut().zip(term) {
                *a += sign * x;
            }
        }
        Ok(acc)
    }

    /// `k`-fold integral of `phi_i` from `from` to `t`, by Cauchy's formula
    /// `int (t - s)^(k-1)/(k-1)! phi(s) ds`.
    fn repeated_integral(
        &self,
        rule: &GaussLegendre,
        i: usize,
        folds: usize,
        from: f64,
        t: f64,
    ) -> Result<Vec<f64>> {
        let (lo, hi, sign) = if t >= from { (from, t, 1.0) } else { (t, from, -1.0) };
        if hi == lo {
            return Ok(vec![0.0; self.problem.dim()]);
        }
        let breaks = self.sub_breaks(lo, hi);
        let factorial: f64 = (1..folds).map(|x| x as f64).product();
        let v = rule.integrate_vec(&breaks, self.problem.dim(), |s| {
            let kernel = (t - s).powi(folds as i32 - 1) / factorial;
            Ok(self
                .phi(i, self.region_of(s), s)?
                .into_iter()
                .map(|x| kernel * x)
                .collect())
        })?;
        Ok(v.into_iter().map(|x| sign * x).collect())
    }

    fn sub_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut b = vec![lo];
        b.extend(self.breaks.iter().copied().filter(|&x| x > lo && x < hi));
        b.push(hi);
        b
    }

    /// `int_{from}^{t} dL/dt[q](s) ds`.
    pub fn time_partial_integral(&self, rule: &GaussLegendre, from: f64, t: f64) -> Result<f64> {
        let (lo, hi, sign) = if t >= from { (from, t, 1.0) } else { (t, from, -1.0) };
        if hi == lo {
            return Ok(0.0);
        }
        let breaks = self.sub_breaks(lo, hi);
        let v = rule.integrate(&breaks, |s| {
            Ok(self.problem.partial(PartialIndex::Time, &self.args(s)?)?[0])
        })?;
        Ok(sign * v)
    }

    /// `L - sum_j psi^j . q^(j) - int_{region start}^t dL/dt`; constant on
    /// each region along a DuBois-Reymond extremal.
    pub fn dbr_value(&self, rule: &GaussLegendre, region: Region, t: f64) -> Result<f64> {
        self.check_region(region, t)?;
        let m = self.problem.order();
        let args = self.args(t)?;
        let mut value = self.problem.lagrangian_at(&args)?;
        for j in 1..=m {
            let psi = self.psi(j, region, t)?;
            value -= dot(&psi, &args.current[j]);
        }
        let start = match region {
            Region::Advanced => self.problem.t1(),
            Region::Terminal => self.problem.junction(),
        };
        Ok(value - self.time_partial_integral(rule, start, t)?)
    }

    /// Sample points over `[t1, t2]`.
    pub fn sample_points(&self, sampling: &Sampling) -> Vec<crate::report::SamplePoint> {
        sample_points(&self.breaks, self.problem.junction(), sampling.points)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `d^order f / dt^order` at `t` within the effective segment of `context`.
pub fn total_derivative_along<F>(context: &Along<'_>, f: F, t: f64, order: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    total_derivative(f, t, order, context.segment_or_point(t))
}

pub fn psi(problem: &Problem, traj: &PiecewiseTrajectory, j: usize, region: Region, t: f64) -> Result<Vec<f64>> {
    Along::new(problem, traj)?.psi(j, region, t)
}

pub fn psi_identity_residual(problem: &Problem, traj: &PiecewiseTrajectory, j: usize, t: f64) -> Result<Vec<f64>> {
    Along::new(problem, traj)?.psi_identity_residual(j, t)
}

pub fn el_residual_differential(problem: &Problem, traj: &PiecewiseTrajectory, t: f64) -> Result<Vec<f64>> {
    Along::new(problem, traj)?.el_residual(t)
}

/// Differential Euler-Lagrange residual at every sample point. The verdict
/// scale is the largest `|phi_k|` seen.
pub fn el_residual_report(problem: &Problem, traj: &PiecewiseTrajectory, sampling: &Sampling) -> Result<ResidualReport> {
    let along = Along::new(problem, traj)?;
    let mut samples = Vec::new();
    let mut scale = 1.0f64;
    for p in along.sample_points(sampling) {
        for k in 0..=problem.order() {
            for v in along.phi(k, p.region, p.t)? {
                scale = scale.max(v.abs());
            }
        }
        samples.push(Sample {
            t: p.t,
            region: p.region,
            value: along.el_residual(p.t)?,
        });
    }
    Ok(ResidualReport::new("euler-lagrange residual", samples, scale, sampling.tolerance))
}

/// Integral-form Euler-Lagrange check. `Regional` fits a polynomial of
/// degree `m - 1` on every smooth segment independently; `Global` fits one
/// polynomial `p(t)` across `[t1, t2]`, which also detects corners.
pub fn el_first_integral(
    problem: &Problem,
    traj: &PiecewiseTrajectory,
    sampling: &Sampling,
    mode: FitMode,
) -> Result<FirstIntegralReport> {
    let along = Along::new(problem, traj)?;
    let rule = GaussLegendre::new(crate::functional::QuadratureSpec::default().gauss_points)?;
    let points = along.sample_points(sampling);
    let samples = points
        .iter()
        .map(|p| {
            Ok(Sample {
                t: p.t,
                region: p.region,
                value: along.el_integral_value(&rule, p.t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let criterion = match mode {
        FitMode::Regional => Criterion::PerSegment,
        FitMode::Global => Criterion::Global,
    };
    Ok(assemble(
        "euler-lagrange integral",
        along.breaks(),
        &points,
        samples,
        problem.order() - 1,
        criterion,
        sampling.tolerance,
    ))
}

/// DuBois-Reymond first integral, one constant per region.
pub fn dbr_first_integral(problem: &Problem, traj: &PiecewiseTrajectory, sampling: &Sampling) -> Result<FirstIntegralReport> {
    let along = Along::new(problem, traj)?;
    let rule = GaussLegendre::new(crate::functional::QuadratureSpec::default().gauss_points)?;
    let points = along.sample_points(sampling);
    let samples = points
        .iter()
        .map(|p| {
            Ok(Sample {
                t: p.t,
                region: p.region,
                value: vec![along.dbr_value(&rule, p.region, p.t)?],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(
        "dubois-reymond",
        along.breaks(),
        &points,
        samples,
        0,
        Criterion::PerRegion,
        sampling.tolerance,
    ))
}
