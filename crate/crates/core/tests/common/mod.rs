#![allow(dead_code)]

use std::collections::BTreeMap;

use delay_noether::expr::{parse, Expression};
use delay_noether::functional::{Problem, ProblemDefinition};
use delay_noether::PiecewiseTrajectory;
use rand::Rng;

pub const LEAVES: [&str; 5] = ["t", "q0_d0", "q0_d1", "q0_d0_tau", "q0_d1_tau"];

/// Random expression source over [`LEAVES`] that stays finite for bindings
/// in `[-1, 1]`: no logarithms or roots, bounded exponentials and divisors
/// kept away from zero.
pub fn random_expression<R: Rng>(rng: &mut R, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.7) {
            LEAVES[rng.gen_range(0..LEAVES.len())].to_string()
        } else {
            format!("{:.3}", rng.gen_range(-2.0..2.0))
        };
    }
    let a = random_expression(rng, depth - 1);
    let b = random_expression(rng, depth - 1);
    match rng.gen_range(0..10) {
        0 => format!("({a}) + ({b})"),
        1 => format!("({a}) - ({b})"),
        2 | 3 => format!("({a}) * ({b})"),
        4 => format!("({a}) / (2 + sin({b}))"),
        5 => format!("({a})^{}", rng.gen_range(2..4)),
        6 => format!("sin({a})"),
        7 => format!("cos({a})"),
        8 => format!("exp(sin({a}))"),
        _ => format!("-({a})"),
    }
}

pub fn random_bindings<R: Rng>(rng: &mut R) -> BTreeMap<String, f64> {
    LEAVES
        .iter()
        .map(|name| (name.to_string(), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Five-point central difference of `f` at `x`.
pub fn five_point<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Scalar problem on `[0, 2]` with `tau = 0.5`; terminal data is whatever
/// the tests need, compatibility warnings are ignored.
pub fn scalar_problem(order: usize, lagrangian: &str) -> Problem {
    Problem::new(ProblemDefinition {
        order,
        dim: 1,
        t1: 0.0,
        t2: 2.0,
        tau: 0.5,
        lagrangian: parse(lagrangian).unwrap(),
        prehistory: vec![parse("0").unwrap()],
        terminal: vec![0.0],
        terminal_derivatives: vec![vec![0.0]; order.saturating_sub(1)],
    })
    .unwrap()
}

/// Single-segment polynomial on `[-0.5, 2]` with coefficients in `t + 0.5`.
pub fn polynomial_trajectory(order: usize, coefficients: Vec<f64>) -> PiecewiseTrajectory {
    PiecewiseTrajectory::new(1, order, vec![-0.5, 2.0], vec![vec![coefficients]]).unwrap()
}

pub fn random_polynomial<R: Rng>(rng: &mut R, order: usize, degree: usize) -> PiecewiseTrajectory {
    polynomial_trajectory(order, (0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

pub fn eval(source: &Expression, bindings: &BTreeMap<String, f64>) -> f64 {
    source.eval(bindings).unwrap()
}
