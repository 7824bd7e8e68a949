//! JSON problem documents.
//!
//! ```json
//! {
//!   "order": 1, "dim": 1, "t1": 0, "t2": 3, "tau": 1,
//!   "lagrangian": "(q0_d1 + q0_d1_tau)^2",
//!   "prehistory": ["-t"],
//!   "terminal": {"q": [1], "derivatives": []},
//!   "trajectory": {"breakpoints": [-1, 0, 2, 3], "values": [[1], [0], [2], [1]]},
//!   "symmetry": {"eta": "1", "xi": ["0"], "gauge": "0"}
//! }
//! ```
//!
//! A trajectory is either `segments` (per interval, per coordinate, the
//! polynomial coefficients in `t - breakpoint`) or `values` at the
//! breakpoints, joined linearly. Extra trajectories may be stored under keys
//! `trajectory_<name>`; every other unknown key is rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Expression};
use crate::functional::{Problem, ProblemDefinition, QuadratureSpec};
use crate::noether::SymmetryCandidate;
use crate::report::DEFAULT_FIRST_INTEGRAL_TOL;
use crate::solver::DEFAULT_GRAD_TOL;
use crate::trajectory::{PiecewiseTrajectory, DEFAULT_CONTINUITY_TOL, DEFAULT_MAX_DEGREE};

const VARIANT_PREFIX: &str = "trajectory_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalDocument {
    pub q: Vec<f64>,
    #[serde(default)]
    pub derivatives: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDocument {
    pub breakpoints: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
}

impl TrajectoryDocument {
    pub fn from_trajectory(traj: &PiecewiseTrajectory) -> Self {
        TrajectoryDocument {
            breakpoints: traj.breakpoints().to_vec(),
            segments: Some(traj.segments().to_vec()),
            values: None,
        }
    }

    pub fn build(&self, order: usize, continuity_tol: f64) -> Result<PiecewiseTrajectory> {
        match (&self.segments, &self.values) {
            (Some(segments), None) => {
                let dim = segments.first().map_or(0, Vec::len);
                PiecewiseTrajectory::with_limits(
                    dim,
                    order,
                    self.breakpoints.clone(),
                    segments.clone(),
                    DEFAULT_MAX_DEGREE,
                    continuity_tol,
                )
            }
            (None, Some(values)) => {
                if order > 1 {
                    return Err(Error::Document(format!(
                        "node values give a piecewise-linear trajectory, which is not smooth enough for order {order}"
                    )));
                }
                PiecewiseTrajectory::piecewise_linear(order, &self.breakpoints, values)
            }
            _ => Err(Error::Document(
                "a trajectory needs exactly one of `segments` and `values`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryDocument {
    pub eta: String,
    pub xi: Vec<String>,
    #[serde(default = "zero")]
    pub gauge: String,
}

fn zero() -> String {
    "0".to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureDocument {
    pub gauss_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_first_integral")]
    pub first_integral: f64,
    #[serde(default = "default_continuity")]
    pub continuity: f64,
    #[serde(default = "default_gradient")]
    pub gradient: f64,
}

fn default_first_integral() -> f64 {
    DEFAULT_FIRST_INTEGRAL_TOL
}

fn default_continuity() -> f64 {
    DEFAULT_CONTINUITY_TOL
}

fn default_gradient() -> f64 {
    DEFAULT_GRAD_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            first_integral: DEFAULT_FIRST_INTEGRAL_TOL,
            continuity: DEFAULT_CONTINUITY_TOL,
            gradient: DEFAULT_GRAD_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub order: usize,
    pub dim: usize,
    pub t1: f64,
    pub t2: f64,
    pub tau: f64,
    pub lagrangian: String,
    pub prehistory: Vec<String>,
    pub terminal: TerminalDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    /// `trajectory_<name>` entries, checked by [`ProblemDocument::from_json`].
    #[serde(flatten)]
    pub variants: BTreeMap<String, serde_json::Value>,
}

fn parse_field(source: &str, field: &str) -> Result<Expression> {
    parse(source).map_err(|e| Error::Document(format!("{field}: {e}")))
}

impl ProblemDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProblemDocument =
            serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        for (key, value) in &doc.variants {
            if !key.starts_with(VARIANT_PREFIX) || key.len() == VARIANT_PREFIX.len() {
                return Err(Error::Document(format!("unknown field `{key}`")));
            }
            TrajectoryDocument::deserialize(value).map_err(|e| Error::Document(format!("{key}: {e}")))?;
        }
        Ok(doc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Document(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(ProblemDefinition {
            order: self.order,
            dim: self.dim,
            t1: self.t1,
            t2: self.t2,
            tau: self.tau,
            lagrangian: parse_field(&self.lagrangian, "lagrangian")?,
            prehistory: self
                .prehistory
                .iter()
                .enumerate()
                .map(|(i, s)| parse_field(s, &format!("prehistory[{i}]")))
                .collect::<Result<_>>()?,
            terminal: self.terminal.q.clone(),
            terminal_derivatives: self.terminal.derivatives.clone(),
        })
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        self.quadrature
            .map(|q| QuadratureSpec {
                gauss_points: q.gauss_points,
            })
            .unwrap_or_default()
    }

    /// Names of the stored `trajectory_<name>` variants.
    pub fn variant_names(&self) -> Vec<&str> {
        self.variants
            .keys()
            .filter_map(|k| k.strip_prefix(VARIANT_PREFIX))
            .collect()
    }

    /// The trajectory sub-document: `trajectory` when `name` is `None`,
    /// otherwise `trajectory_<name>`.
    pub fn trajectory_document(&self, name: Option<&str>) -> Result<TrajectoryDocument> {
        match name {
            None | Some("trajectory") => self
                .trajectory
                .clone()
                .ok_or_else(|| Error::Document("document has no `trajectory`".into())),
            Some(name) => {
                let key = if name.starts_with(VARIANT_PREFIX) {
                    name.to_string()
                } else {
                    format!("{VARIANT_PREFIX}{name}")
                };
                let value = self.variants.get(&key).ok_or_else(|| {
                    Error::Document(format!(
                        "no trajectory `{key}`; available: {}",
                        self.variant_names().join(", ")
                    ))
                })?;
                TrajectoryDocument::deserialize(value).map_err(|e| Error::Document(e.to_string()))
            }
        }
    }

    pub fn trajectory(&self, name: Option<&str>) -> Result<PiecewiseTrajectory> {
        self.trajectory_document(name)?
            .build(self.order, self.tolerances().continuity)
    }

    pub fn symmetry(&self) -> Result<SymmetryCandidate> {
        let doc = self
            .symmetry
            .as_ref()
            .ok_or_else(|| Error::Document("document has no `symmetry`".into()))?;
        Ok(SymmetryCandidate {
            eta: parse_field(&doc.eta, "symmetry.eta")?,
            xi: doc
                .xi
                .iter()
                .enumerate()
                .map(|(i, s)| parse_field(s, &format!("symmetry.xi[{i}]")))
                .collect::<Result<_>>()?,
            gauge: parse_field(&doc.gauge, "symmetry.gauge")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "order": 1, "dim": 1, "t1": 0, "t2": 2, "tau": 0.5,
        "lagrangian": "q0_d1^2",
        "prehistory": ["0"],
        "terminal": {"q": [1]}
    }"#;

    #[test]
    fn minimal_document() {
        let doc = ProblemDocument::from_json(MINIMAL).unwrap();
        let p = doc.problem().unwrap();
        assert_eq!(p.tau(), 0.5);
        assert_eq!(doc.tolerances(), Tolerances::default());
        assert!(doc.trajectory(None).is_err());
        assert!(doc.symmetry().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let extra = MINIMAL.replace("\"tau\"", "\"colour\": 1, \"tau\"");
        assert!(matches!(ProblemDocument::from_json(&extra), Err(Error::Document(m)) if m.contains("colour")));
        let nested = MINIMAL.replace("\"q\": [1]", "\"q\": [1], \"speed\": 2");
        assert!(ProblemDocument::from_json(&nested).is_err());
        let bad_variant = MINIMAL.replace("\"tau\"", "\"trajectory_x\": {\"breaks\": []}, \"tau\"");
        assert!(ProblemDocument::from_json(&bad_variant).is_err());
    }

    #[test]
    fn variants_and_round_trip() {
        let text = MINIMAL.replace(
            "\"tau\"",
            "\"trajectory_line\": {\"breakpoints\": [-0.5, 0, 2], \"values\": [[0], [0], [1]]}, \"tau\"",
        );
        let doc = ProblemDocument::from_json(&text).unwrap();
        assert_eq!(doc.variant_names(), vec!["line"]);
        let q = doc.trajectory(Some("line")).unwrap();
        assert_eq!(q.segments()[1], vec![vec![0.0, 0.5]]);
        assert!(doc.trajectory(Some("other")).is_err());
        let again = ProblemDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn expression_errors_name_the_field() {
        let text = MINIMAL.replace("q0_d1^2", "q0_d1^");
        let doc = ProblemDocument::from_json(&text).unwrap();
        assert!(matches!(doc.problem(), Err(Error::Document(m)) if m.starts_with("lagrangian")));
    }

    #[test]
    fn linear_values_need_first_order() {
        let doc = TrajectoryDocument {
            breakpoints: vec![0.0, 1.0],
            segments: None,
            values: Some(vec![vec![0.0], vec![1.0]]),
        };
        assert!(doc.build(2, 1e-9).is_err());
        let both = TrajectoryDocument {
            segments: Some(vec![vec![vec![0.0, 1.0]]]),
            ..doc
        };
        assert!(both.build(1, 1e-9).is_err());
    }
}
