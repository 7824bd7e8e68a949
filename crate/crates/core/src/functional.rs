//! Delayed variational problems and their action functional.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expression, Symbol, Vocabulary};
use crate::quadrature::GaussLegendre;
use crate::trajectory::{delayed_args, effective_breakpoints, DelayedArgs, PiecewiseTrajectory, Side};

/// Terminal conditions must hold to this absolute tolerance or the action
/// report carries a warning.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Argument slot of the Lagrangian.
///
/// With `m` the order, `Time` is argument 1, `Current(k)` is argument `k + 2`
/// and `Delayed(k)` is argument `k + m + 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartialIndex {
    Time,
    Current(usize),
    Delayed(usize),
}

impl PartialIndex {
    /// Converts a 1-based argument position into a slot.
    pub fn from_position(position: usize, m: usize) -> Result<Self> {
        match position {
            1 => Ok(PartialIndex::Time),
            p if (2..=m + 2).contains(&p) => Ok(PartialIndex::Current(p - 2)),
            p if (m + 3..=2 * m + 3).contains(&p) => Ok(PartialIndex::Delayed(p - m - 3)),
            p => Err(Error::PartialIndex { index: p, m }),
        }
    }

    pub fn position(self, m: usize) -> usize {
        match self {
            PartialIndex::Time => 1,
            PartialIndex::Current(k) => k + 2,
            PartialIndex::Delayed(k) => k + m + 3,
        }
    }
}

/// Problem data as given by the user; validated by [`Problem::new`].
#[derive(Debug, Clone)]
pub struct ProblemDefinition {
    pub order: usize,
    pub dim: usize,
    pub t1: f64,
    pub t2: f64,
    pub tau: f64,
    pub lagrangian: Expression,
    pub prehistory: Vec<Expression>,
    pub terminal: Vec<f64>,
    /// `q^(i)(t2)` for `i = 1..m-1`.
    pub terminal_derivatives: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct Partials {
    time: Expression,
    /// `[k][i]`
    current: Vec<Vec<Expression>>,
    delayed: Vec<Vec<Expression>>,
}

/// A validated problem with its symbolic Lagrangian partials cached.
#[derive(Debug, Clone)]
pub struct Problem {
    def: ProblemDefinition,
    partials: Partials,
}

impl Problem {
    pub fn new(def: ProblemDefinition) -> Result<Self> {
        let ProblemDefinition {
            order: m,
            dim: n,
            t1,
            t2,
            tau,
            ..
        } = def;
        if m == 0 || n == 0 {
            return Err(Error::Problem("order and dimension must be at least 1".into()));
        }
        if !(t1.is_finite() && t2.is_finite() && t1 < t2) {
            return Err(Error::Problem(format!("need t1 < t2, got [{t1}, {t2}]")));
        }
        if !(tau > 0.0 && tau < t2 - t1) {
            return Err(Error::Problem(format!(
                "delay must satisfy 0 < tau < t2 - t1 = {}, got {tau}",
                t2 - t1
            )));
        }
        def.lagrangian
            .check_vocabulary(Vocabulary::Full { dim: n, order: m }, "the Lagrangian")?;
        if def.prehistory.len() != n {
            return Err(Error::Problem(format!(
                "prehistory needs {n} expressions, got {}",
                def.prehistory.len()
            )));
        }
        for p in &def.prehistory {
            p.check_vocabulary(Vocabulary::Time, "the prehistory")?;
        }
        if def.terminal.len() != n {
            return Err(Error::Problem(format!(
                "terminal value needs {n} entries, got {}",
                def.terminal.len()
            )));
        }
        if def.terminal_derivatives.len() != m - 1
            || def.terminal_derivatives.iter().any(|d| d.len() != n)
        {
            return Err(Error::Problem(format!(
                "terminal derivatives must be {} vectors of length {n}",
                m - 1
            )));
        }
        let block = |delayed: bool| -> Vec<Vec<Expression>> {
            (0..=m)
                .map(|deriv| {
                    (0..n)
                        .map(|coord| {
                            def.lagrangian.diff_symbol(&Symbol::State {
                                coord,
                                deriv,
                                delayed,
                            })
                        })
                        .collect()
                })
                .collect()
        };
        let partials = Partials {
            time: def.lagrangian.diff_symbol(&Symbol::Time),
            current: block(false),
            delayed: block(true),
        };
        Ok(Problem { def, partials })
    }

    pub fn definition(&self) -> &ProblemDefinition {
        &self.def
    }

    pub fn order(&self) -> usize {
        self.def.order
    }

    pub fn dim(&self) -> usize {
        self.def.dim
    }

    pub fn t1(&self) -> f64 {
        self.def.t1
    }

    pub fn t2(&self) -> f64 {
        self.def.t2
    }

    pub fn tau(&self) -> f64 {
        self.def.tau
    }

    /// `t2 - tau`, where the optimality conditions change form.
    pub fn junction(&self) -> f64 {
        self.def.t2 - self.def.tau
    }

    pub fn lagrangian(&self) -> &Expression {
        &self.def.lagrangian
    }

    pub fn prehistory(&self) -> &[Expression] {
        &self.def.prehistory
    }

    pub fn terminal(&self) -> &[f64] {
        &self.def.terminal
    }

    pub fn terminal_derivatives(&self) -> &[Vec<f64>] {
        &self.def.terminal_derivatives
    }

    /// The cached symbolic partial for one argument slot, per coordinate.
    pub fn partial_expressions(&self, index: PartialIndex) -> Result<&[Expression]> {
        let m = self.order();
        match index {
            PartialIndex::Time => Ok(std::slice::from_ref(&self.partials.time)),
            PartialIndex::Current(k) if k <= m => Ok(&self.partials.current[k]),
            PartialIndex::Delayed(k) if k <= m => Ok(&self.partials.delayed[k]),
            other => Err(Error::PartialIndex {
                index: other.position(m),
                m,
            }),
        }
    }

    /// Evaluates a Lagrangian partial at `args`; a one-element vector for
    /// the time slot.
    pub fn partial(&self, index: PartialIndex, args: &DelayedArgs) -> Result<Vec<f64>> {
        self.partial_expressions(index)?
            .iter()
            .map(|e| e.eval(args))
            .collect()
    }

    pub fn lagrangian_at(&self, args: &DelayedArgs) -> Result<f64> {
        self.def.lagrangian.eval(args)
    }

    /// `delta(t)` on the prehistory interval.
    pub fn prehistory_at(&self, t: f64) -> Result<Vec<f64>> {
        let env = std::collections::HashMap::from([("t".to_string(), t)]);
        self.def.prehistory.iter().map(|e| e.eval(&env)).collect()
    }

    /// Checks shape and domain; returns boundary-condition warnings.
    pub fn compatibility(&self, traj: &PiecewiseTrajectory) -> Result<Vec<String>> {
        if traj.dim() != self.dim() {
            return Err(Error::Incompatible(format!(
                "trajectory has dimension {}, problem {}",
                traj.dim(),
                self.dim()
            )));
        }
        if traj.order() < self.order() {
            return Err(Error::Incompatible(format!(
                "trajectory order {} is below problem order {}",
                traj.order(),
                self.order()
            )));
        }
        let start = self.t1() - self.tau();
        let tol = 1e-12 * (self.t2() - start).max(1.0);
        if (traj.start() - start).abs() > tol || (traj.end() - self.t2()).abs() > tol {
            return Err(Error::Incompatible(format!(
                "trajectory covers [{}, {}], problem needs [{start}, {}]",
                traj.start(),
                traj.end(),
                self.t2()
            )));
        }
        let mut warnings = Vec::new();

        // prehistory at the trajectory breakpoints inside the window and at
        // a uniform sample
        let mut probes: Vec<f64> = (0..=32)
            .map(|i| start + self.tau() * i as f64 / 32.0)
            .collect();
        probes.extend(traj.breakpoints().iter().copied().filter(|&b| b >= start && b <= self.t1()));
        let mut worst = 0.0f64;
        for &t in &probes {
            let side = if t >= self.t1() { Side::Left } else { Side::Right };
            let have = traj.eval_derivative(t, 0, side)?;
            let want = self.prehistory_at(t)?;
            for (h, w) in have.iter().zip(&want) {
                worst = worst.max((h - w).abs() / (1.0 + w.abs()));
            }
        }
        if worst > crate::trajectory::DEFAULT_CONTINUITY_TOL {
            warnings.push(format!(
                "trajectory departs from the prehistory by up to {worst:e}"
            ));
        }

        let end = traj.eval_jet(self.t2(), self.order() - 1, Side::Left)?;
        let mut targets = vec![self.terminal().to_vec()];
        targets.extend(self.terminal_derivatives().iter().cloned());
        for (k, (have, want)) in end.iter().zip(&targets).enumerate() {
            let gap = have
                .iter()
                .zip(want)
                .fold(0.0f64, |acc, (h, w)| acc.max((h - w).abs()));
            if gap > BOUNDARY_TOL {
                warnings.push(format!(
                    "terminal condition on derivative {k} violated by {gap:e}"
                ));
            }
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub gauss_points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { gauss_points: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionReport {
    pub action: f64,
    pub warnings: Vec<String>,
}

/// `J[q] = int_{t1}^{t2} L[q]_tau(t) dt`, composite Gauss-Legendre between
/// effective breakpoints.
pub fn action(problem: &Problem, traj: &PiecewiseTrajectory, quad: QuadratureSpec) -> Result<ActionReport> {
    let warnings = problem.compatibility(traj)?;
    let value = action_over(problem, traj, quad, (problem.t1(), problem.t2()))?;
    Ok(ActionReport {
        action: value,
        warnings,
    })
}

/// The action integral restricted to `window` within `[t1, t2]`.
pub fn action_over(
    problem: &Problem,
    traj: &PiecewiseTrajectory,
    quad: QuadratureSpec,
    window: (f64, f64),
) -> Result<f64> {
    let rule = GaussLegendre::new(quad.gauss_points)?;
    let breaks = effective_breakpoints(traj, problem.tau(), window);
    rule.integrate(&breaks, |s| {
        let args = delayed_args(traj, s, problem.tau(), problem.order(), Side::Right)?;
        problem.lagrangian_at(&args)
    })
}
