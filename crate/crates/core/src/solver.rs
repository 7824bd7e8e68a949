//! Direct transcription for first-order problems: the trajectory becomes a
//! vector of node values on a uniform grid whose step divides the delay, and
//! the midpoint-rule action is minimized by nonlinear conjugate gradients.
//!
//! Node `j` sits at `t1 - tau + j h`. Nodes `0..=k` (with `tau = k h`) are
//! the prehistory and the last node is the terminal value; both are pinned.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{PartialIndex, Problem};
use crate::trajectory::{DelayedArgs, PiecewiseTrajectory, Side};

pub const DEFAULT_GRAD_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// A uniform grid on `[t1 - tau, t2]` with `tau = k h` and `t2 - t1 = N h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub h: f64,
    /// Delay in steps.
    pub k: usize,
    /// Cells in `[t1, t2]`.
    pub cells: usize,
    pub t1: f64,
}

fn integral_ratio(a: f64, h: f64) -> Option<usize> {
    let r = a / h;
    let n = r.round();
    ((r - n).abs() <= 1e-12 * r.abs().max(1.0) && n >= 1.0).then_some(n as usize)
}

impl GridSpec {
    pub fn new(problem: &Problem, h: f64) -> Result<Self> {
        if problem.order() != 1 {
            return Err(Error::Unsupported(format!(
                "transcription solver handles order 1 only, got {}",
                problem.order()
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Grid(format!("step must be positive, got {h}")));
        }
        let span = problem.t2() - problem.t1();
        match (integral_ratio(problem.tau(), h), integral_ratio(span, h)) {
            (Some(k), Some(cells)) if cells > k => Ok(GridSpec {
                h,
                k,
                cells,
                t1: problem.t1(),
            }),
            _ => Err(Error::Grid(format!(
                "h = {h} must divide both tau = {} and t2 - t1 = {span}; admissible steps include {}",
                problem.tau(),
                suggestions(problem.tau(), span)
            ))),
        }
    }

    pub fn node_count(&self) -> usize {
        self.k + self.cells + 1
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t1 + (j as f64 - self.k as f64) * self.h
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.node_count()).map(|j| self.time(j)).collect()
    }

    pub fn is_pinned(&self, j: usize) -> bool {
        j <= self.k || j + 1 == self.node_count()
    }
}

fn suggestions(tau: f64, span: f64) -> String {
    let found: Vec<String> = (1..=1000)
        .map(|k| tau / k as f64)
        .filter(|&h| integral_ratio(span, h).is_some_and(|n| n as f64 * h > tau))
        .take(4)
        .map(|h| format!("{h}"))
        .collect();
    if found.is_empty() {
        "none with tau/h <= 1000".to_string()
    } else {
        found.join(", ")
    }
}

fn check_nodes(grid: &GridSpec, nodes: &[Vec<f64>], dim: usize) -> Result<()> {
    if nodes.len() != grid.node_count() || nodes.iter().any(|v| v.len() != dim) {
        return Err(Error::Grid(format!(
            "expected {} nodes of dimension {dim}, got {}",
            grid.node_count(),
            nodes.len()
        )));
    }
    Ok(())
}

/// Midpoint arguments of cell `c`, i.e. `[t1 + c h, t1 + (c + 1) h]`.
fn cell_args(grid: &GridSpec, nodes: &[Vec<f64>], c: usize) -> DelayedArgs {
    let h = grid.h;
    let pair = |j: usize| -> Vec<Vec<f64>> {
        let (a, b) = (&nodes[j], &nodes[j + 1]);
        vec![
            a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect(),
            a.iter().zip(b).map(|(x, y)| (y - x) / h).collect(),
        ]
    };
    DelayedArgs {
        t: grid.t1 + (c as f64 + 0.5) * h,
        current: pair(grid.k + c),
        delayed: pair(c),
    }
}

/// `sum_c h L(midpoint of cell c)`.
pub fn discrete_action(problem: &Problem, nodes: &[Vec<f64>], grid: &GridSpec) -> Result<f64> {
    check_nodes(grid, nodes, problem.dim())?;
    let mut total = 0.0;
    for c in 0..grid.cells {
        total += grid.h * problem.lagrangian_at(&cell_args(grid, nodes, c))?;
    }
    Ok(total)
}

/// Gradient of [`discrete_action`] with respect to every node; entries of
/// pinned nodes are zero.
pub fn gradient(problem: &Problem, nodes: &[Vec<f64>], grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
    check_nodes(grid, nodes, problem.dim())?;
    let n = problem.dim();
    let h = grid.h;
    let mut g = vec![vec![0.0; n]; nodes.len()];
    for c in 0..grid.cells {
        let args = cell_args(grid, nodes, c);
        let blocks = [
            (grid.k + c, PartialIndex::Current(0), PartialIndex::Current(1)),
            (c, PartialIndex::Delayed(0), PartialIndex::Delayed(1)),
        ];
        for (left, value_slot, rate_slot) in blocks {
            let dv = problem.partial(value_slot, &args)?;
            let dr = problem.partial(rate_slot, &args)?;
            for i in 0..n {
                g[left][i] += 0.5 * h * dv[i] - dr[i];
                g[left + 1][i] += 0.5 * h * dv[i] + dr[i];
            }
        }
    }
    for (j, row) in g.iter_mut().enumerate() {
        if grid.is_pinned(j) {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    Ok(g)
}

/// `(J(q + eps d) - J(q - eps d)) / (2 eps)`; `direction` must vanish on
/// pinned nodes.
pub fn discrete_first_variation(
    problem: &Problem,
    nodes: &[Vec<f64>],
    grid: &GridSpec,
    direction: &[Vec<f64>],
    epsilon: f64,
) -> Result<f64> {
    check_nodes(grid, direction, problem.dim())?;
    if let Some(j) = (0..direction.len()).find(|&j| grid.is_pinned(j) && direction[j].iter().any(|&x| x != 0.0)) {
        return Err(Error::PinnedDirection(j));
    }
    let shifted = |s: f64| -> Vec<Vec<f64>> {
        nodes
            .iter()
            .zip(direction)
            .map(|(q, d)| q.iter().zip(d).map(|(x, y)| x + s * y).collect())
            .collect()
    };
    let plus = discrete_action(problem, &shifted(epsilon), grid)?;
    let minus = discrete_action(problem, &shifted(-epsilon), grid)?;
    Ok((plus - minus) / (2.0 * epsilon))
}

/// Node values of `traj` on the grid.
pub fn sample_nodes(traj: &PiecewiseTrajectory, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
    let last = grid.node_count() - 1;
    (0..=last)
        .map(|j| {
            let side = if j == last { Side::Left } else { Side::Right };
            traj.eval_derivative(grid.time(j), 0, side)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Prehistory on the pinned nodes, then a straight line from `delta(t1)`
    /// to the terminal value.
    Prehistory,
    /// Given node values; pinned entries are overwritten.
    Nodes(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: DEFAULT_MAX_ITER,
            grad_tol: DEFAULT_GRAD_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// No step along steepest descent decreased the action; the result holds
    /// the last iterate.
    LineSearchFailed,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    pub action: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    #[serde(skip)]
    pub trajectory: PiecewiseTrajectory,
}

/// Flat view of the free nodes.
struct Free<'a> {
    problem: &'a Problem,
    grid: &'a GridSpec,
    template: Vec<Vec<f64>>,
    free: Vec<usize>,
}

impl Free<'_> {
    fn expand(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.problem.dim();
        let mut nodes = self.template.clone();
        for (slot, &j) in self.free.iter().enumerate() {
            nodes[j].copy_from_slice(&x[slot * n..(slot + 1) * n]);
        }
        nodes
    }

    fn flatten(&self, nodes: &[Vec<f64>]) -> Vec<f64> {
        self.free.iter().flat_map(|&j| nodes[j].iter().copied()).collect()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        discrete_action(self.problem, &self.expand(x), self.grid)
    }

    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.flatten(&gradient(self.problem, &self.expand(x), self.grid)?))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(x, d)| x + a * d).collect()
}

/// Step along `d` from `x`: a secant estimate of the zero of the directional
/// derivative, then Armijo backtracking. Exact on quadratics.
fn line_search(
    free: &Free<'_>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    trial: f64,
) -> Result<Option<(f64, Vec<f64>, f64)>> {
    let slope = dot(g0, d);
    let g_trial = free.grad(&axpy(x, trial, d))?;
    let slope_trial = dot(&g_trial, d);
    let mut alpha = if slope_trial > slope {
        trial * slope / (slope - slope_trial)
    } else {
        4.0 * trial
    };
    if !alpha.is_finite() || alpha <= 0.0 {
        alpha = trial;
    }
    let slack = 1e-12 * (1.0 + f0.abs());
    for _ in 0..60 {
        let candidate = axpy(x, alpha, d);
        let f = free.value(&candidate)?;
        if f.is_finite() && f <= f0 + 1e-4 * alpha * slope + slack {
            return Ok(Some((alpha, candidate, f)));
        }
        alpha *= 0.5;
    }
    Ok(None)
}

/// Minimizes the discrete action with Polak-Ribiere (clamped at zero)
/// conjugate gradients, restarting on loss of descent and every `n` steps.
pub fn minimize(problem: &Problem, grid: &GridSpec, init: Init, options: SolveOptions) -> Result<SolveResult> {
    let n = problem.dim();
    let last = grid.node_count() - 1;
    let line = matches!(init, Init::Prehistory);
    let mut template = match init {
        Init::Nodes(nodes) => {
            check_nodes(grid, &nodes, n)?;
            nodes
        }
        Init::Prehistory => vec![vec![0.0; n]; grid.node_count()],
    };
    for (j, node) in template.iter_mut().enumerate().take(grid.k + 1) {
        *node = problem.prehistory_at(grid.time(j))?;
    }
    template[last] = problem.terminal().to_vec();
    if line {
        let (start, end) = (template[grid.k].clone(), template[last].clone());
        for c in 1..grid.cells {
            let w = c as f64 / grid.cells as f64;
            template[grid.k + c] = start.iter().zip(&end).map(|(a, b)| a + w * (b - a)).collect();
        }
    }
    let free_idx: Vec<usize> = (grid.k + 1..last).collect();
    let free = Free {
        problem,
        grid,
        template,
        free: free_idx,
    };
    let mut x = free.flatten(&free.template);
    let restart_every = x.len().max(1);
    let mut f = free.value(&x)?;
    let mut g = free.grad(&x)?;
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut trial = free.grid.h;
    let mut iterations = 0;
    let mut since_restart = 0;
    let stop = loop {
        if sup(&g) <= options.grad_tol {
            break StopReason::Converged;
        }
        if iterations >= options.max_iter {
            break StopReason::MaxIterations;
        }
        if dot(&g, &d) >= 0.0 || since_restart >= restart_every {
            d = g.iter().map(|v| -v).collect();
            since_restart = 0;
        }
        let step = match line_search(&free, &x, f, &g, &d, trial)? {
            Some(step) => Some(step),
            None if since_restart > 0 => {
                d = g.iter().map(|v| -v).collect();
                since_restart = 0;
                line_search(&free, &x, f, &g, &d, trial)?
            }
            None => None,
        };
        let Some((alpha, x_new, f_new)) = step else {
            break StopReason::LineSearchFailed;
        };
        let g_new = free.grad(&x_new)?;
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let beta = (dot(&g_new, &y) / dot(&g, &g)).max(0.0);
        d = d.iter().zip(&g_new).map(|(d, g)| beta * d - g).collect();
        trial = alpha.max(f64::EPSILON);
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
        since_restart += 1;
    };
    let nodes = free.expand(&x);
    let times = grid.times();
    let trajectory = PiecewiseTrajectory::piecewise_linear(1, &times, &nodes)?;
    Ok(SolveResult {
        grid: *grid,
        times,
        nodes,
        action: f,
        gradient_norm: sup(&g),
        iterations,
        converged: stop == StopReason::Converged,
        stop,
        trajectory,
    })
}
