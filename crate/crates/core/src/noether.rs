//! Invariance under one-parameter groups of time and state transformations,
//! and the conserved charges they produce along extremals.
//!
//! A candidate symmetry is given by its generators: `eta(t, q)` for time,
//! `xi_i(t, q)` for the state and a gauge term `Phi` that may depend on the
//! whole delayed argument vector. The prolongation to derivatives is
//!
//! ```text
//! rho^0 = xi,    rho^i = d/dt rho^(i-1) - q^(i) d/dt eta
//! ```
//!
//! and the charge on either region is
//!
//! ```text
//! C = sum_j psi^j . rho^(j-1) + (L - sum_j psi^j . q^(j)) eta - Phi.
//! ```

use serde::Serialize;

use crate::conditions::{dot, total_derivative_along, Along};
use crate::error::{Error, Result};
use crate::expr::{Expression, Vocabulary};
use crate::functional::{PartialIndex, Problem};
use crate::report::{assemble, Criterion, FirstIntegralReport, Region, ResidualReport, Sample, Sampling};
use crate::trajectory::PiecewiseTrajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryCandidate {
    pub eta: Expression,
    pub xi: Vec<Expression>,
    pub gauge: Expression,
}

impl SymmetryCandidate {
    /// Time translation `(eta, xi, Phi) = (1, 0, 0)`.
    pub fn time_translation(dim: usize) -> Self {
        SymmetryCandidate {
            eta: Expression::constant(1.0),
            xi: vec![Expression::constant(0.0); dim],
            gauge: Expression::constant(0.0),
        }
    }

    /// Checks generator shapes and variable use against `problem`.
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let dim = problem.dim();
        if self.xi.len() != dim {
            return Err(Error::Problem(format!(
                "symmetry has {} state generators, problem dimension is {dim}",
                self.xi.len()
            )));
        }
        self.eta.check_vocabulary(Vocabulary::Generator { dim }, "eta")?;
        for (i, x) in self.xi.iter().enumerate() {
            x.check_vocabulary(Vocabulary::Generator { dim }, &format!("xi[{i}]"))?;
        }
        self.gauge.check_vocabulary(
            Vocabulary::Full {
                dim,
                order: problem.order(),
            },
            "gauge",
        )
    }
}

/// Symmetry data bound to a trajectory.
struct Probe<'a> {
    along: Along<'a>,
    sym: &'a SymmetryCandidate,
}

impl<'a> Probe<'a> {
    fn new(problem: &'a Problem, traj: &'a PiecewiseTrajectory, sym: &'a SymmetryCandidate) -> Result<Self> {
        sym.validate(problem)?;
        Ok(Probe {
            along: Along::new(problem, traj)?,
            sym,
        })
    }

    fn eta(&self, s: f64) -> Result<f64> {
        self.sym.eta.eval(&self.along.args(s)?)
    }

    fn xi(&self, s: f64) -> Result<Vec<f64>> {
        let args = self.along.args(s)?;
        self.sym.xi.iter().map(|x| x.eval(&args)).collect()
    }

    fn gauge(&self, s: f64) -> Result<f64> {
        self.sym.gauge.eval(&self.along.args(s)?)
    }

    fn eta_derivative(&self, t: f64, order: usize) -> Result<f64> {
        Ok(total_derivative_along(&self.along, |s| Ok(vec![self.eta(s)?]), t, order)?[0])
    }

    /// `rho^i` unrolled by Leibniz' rule:
    /// `D^i xi - sum_{k=1}^{i} sum_{l=0}^{i-k} C(i-k, l) q^(k+l) D^(i-k-l+1) eta`.
    fn rho(&self, i: usize, t: f64) -> Result<Vec<f64>> {
        let mut out = total_derivative_along(&self.along, |s| self.xi(s), t, i)?;
        if i == 0 {
            return Ok(out);
        }
        let jet = self.along.jet(t)?;
        let d_eta: Vec<f64> = (1..=i)
            .map(|r| self.eta_derivative(t, r))
            .collect::<Result<_>>()?;
        for k in 1..=i {
            let mut binom = 1.0;
            for l in 0..=i - k {
                let w = binom * d_eta[i - k - l];
                for (o, q) in out.iter_mut().zip(&jet[k + l]) {
                    *o -= w * q;
                }
                binom = binom * (i - k - l) as f64 / (l + 1) as f64;
            }
        }
        Ok(out)
    }

    /// Terms of the invariance integrand, which should cancel.
    fn invariance_terms(&self, t: f64) -> Result<Vec<f64>> {
        let problem = self.along.problem();
        let region = self.along.region_of(t);
        let args = self.along.args(t)?;
        let gauge_rate = total_derivative_along(&self.along, |s| Ok(vec![self.gauge(s)?]), t, 1)?[0];
        let mut terms = vec![
            -gauge_rate,
            problem.partial(PartialIndex::Time, &args)?[0] * self.eta(t)?,
            problem.lagrangian_at(&args)? * self.eta_derivative(t, 1)?,
        ];
        for i in 0..=problem.order() {
            terms.push(dot(&self.along.phi(i, region, t)?, &self.rho(i, t)?));
        }
        Ok(terms)
    }

    fn charge(&self, t: f64) -> Result<f64> {
        let problem = self.along.problem();
        let region = self.along.region_of(t);
        let args = self.along.args(t)?;
        let mut hamiltonian = problem.lagrangian_at(&args)?;
        let mut flow = 0.0;
        for j in 1..=problem.order() {
            let psi = self.along.psi(j, region, t)?;
            flow += dot(&psi, &self.rho(j - 1, t)?);
            hamiltonian -= dot(&psi, &args.current[j]);
        }
        Ok(flow + hamiltonian * self.eta(t)? - self.gauge(t)?)
    }
}

/// `rho^i(t)` along `traj`.
pub fn rho(
    problem: &Problem,
    traj: &PiecewiseTrajectory,
    sym: &SymmetryCandidate,
    t: f64,
    i: usize,
) -> Result<Vec<f64>> {
    Probe::new(problem, traj, sym)?.rho(i, t)
}

/// Pointwise integrand of the invariance condition; vanishes identically for
/// a symmetry of the functional.
pub fn invariance_residual(
    problem: &Problem,
    traj: &PiecewiseTrajectory,
    sym: &SymmetryCandidate,
    t: f64,
) -> Result<f64> {
    Ok(Probe::new(problem, traj, sym)?.invariance_terms(t)?.iter().sum())
}

/// Invariance residual at every sample point; the scale is the largest term
/// of the integrand seen.
pub fn invariance_report(
    problem: &Problem,
    traj: &PiecewiseTrajectory,
    sym: &SymmetryCandidate,
    sampling: &Sampling,
) -> Result<ResidualReport> {
    let probe = Probe::new(problem, traj, sym)?;
    let mut scale = 1.0f64;
    let mut samples = Vec::new();
    for p in probe.along.sample_points(sampling) {
        let terms = probe.invariance_terms(p.t)?;
        scale = terms.iter().fold(scale, |acc, x| acc.max(x.abs()));
        samples.push(Sample {
            t: p.t,
            region: p.region,
            value: vec![terms.iter().sum()],
        });
    }
    Ok(ResidualReport::new("invariance residual", samples, scale, sampling.tolerance))
}

/// The Noether charge at `t`, on the region containing `t`.
pub fn noether_charge(
    problem: &Problem,
    traj: &PiecewiseTrajectory,
    sym: &SymmetryCandidate,
    t: f64,
) -> Result<f64> {
    Probe::new(problem, traj, sym)?.charge(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    #[serde(flatten)]
    pub report: FirstIntegralReport,
    /// `|C(t2 - tau, left) - C(t2 - tau, right)|` from the constants fitted
    /// on the two segments meeting there. Not part of the verdict.
    pub junction_gap: Option<f64>,
}

/// Samples the charge on both regions and fits one constant per region.
pub fn check_conservation(
    problem: &Problem,
    traj: &PiecewiseTrajectory,
    sym: &SymmetryCandidate,
    sampling: &Sampling,
) -> Result<ConservationReport> {
    let probe = Probe::new(problem, traj, sym)?;
    let points = probe.along.sample_points(sampling);
    let samples = points
        .iter()
        .map(|p| {
            Ok(Sample {
                t: p.t,
                region: p.region,
                value: vec![probe.charge(p.t)?],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = assemble(
        "noether charge",
        probe.along.breaks(),
        &points,
        samples,
        0,
        Criterion::PerRegion,
        sampling.tolerance,
    );
    let left = report
        .region(Region::Advanced)
        .and_then(|r| r.segments.last())
        .map(|s| s.constant[0]);
    let right = report
        .region(Region::Terminal)
        .and_then(|r| r.segments.first())
        .map(|s| s.constant[0]);
    let junction_gap = left.zip(right).map(|(a, b)| (a - b).abs());
    Ok(ConservationReport { report, junction_gap })
}
