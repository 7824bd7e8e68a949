//! Problem documents shipped with the crate.

use crate::document::ProblemDocument;

/// `(q' + q'_tau)^2` on `[0, 3]` with `tau = 1`, prehistory `-t` and
/// `q(3) = 1`. Variant `el_only` has a corner at `t = 2` and satisfies the
/// Euler-Lagrange equations on each region but not the DuBois-Reymond
/// condition; variant `el_dbr` is a zigzag that satisfies both.
pub const DELAY_COUNTEREXAMPLE: &str = include_str!("../scenarios/delay_counterexample.json");

/// `q'^2 - q^2` along `sin t` on `[0, 3]`, with a formal delay of `0.05` the
/// Lagrangian ignores. The trajectory is a quintic Hermite interpolant of
/// `sin` on a `0.05` grid.
pub const OSCILLATOR: &str = include_str!("../scenarios/oscillator.json");

/// `q'^2` on `[0, 2]`, zero prehistory, `q(2) = 1`; the minimizer is the
/// straight line `t / 2`.
pub const STRAIGHT_LINE: &str = include_str!("../scenarios/straight_line.json");

pub fn delay_counterexample() -> ProblemDocument {
    ProblemDocument::from_json(DELAY_COUNTEREXAMPLE).expect("bundled document is valid")
}

pub fn oscillator() -> ProblemDocument {
    ProblemDocument::from_json(OSCILLATOR).expect("bundled document is valid")
}

pub fn straight_line() -> ProblemDocument {
    ProblemDocument::from_json(STRAIGHT_LINE).expect("bundled document is valid")
}

/// All bundled documents by file stem.
pub fn all() -> Vec<(&'static str, ProblemDocument)> {
    vec![
        ("delay_counterexample", delay_counterexample()),
        ("oscillator", oscillator()),
        ("straight_line", straight_line()),
    ]
}
