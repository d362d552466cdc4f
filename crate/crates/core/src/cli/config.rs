//! Versioned JSON run configuration. Unknown fields are rejected so a
//! config echoed into a report is exactly the config that ran.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar_fn::{builtins, mollify_with, Mollifier, ScalarFunction};
use crate::spectral::SchattenIndex;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Derive,
    Taylor,
    Verify,
    Experiment,
}

/// Function specification: a builtin id with a parameter list, or a
/// mollified builtin {base_id, epsilon, quadrature_nodes}.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_nodes: Option<usize>,
}

impl FunctionSpec {
    pub fn named(id: &str) -> Self {
        FunctionSpec {
            id: id.to_string(),
            params: Vec::new(),
            base_id: None,
            epsilon: None,
            quadrature_nodes: None,
        }
    }

    pub fn resolve(&self) -> Result<ScalarFunction> {
        if self.id == "mollified" {
            let base_id = self
                .base_id
                .as_deref()
                .ok_or_else(|| Error::SchemaViolation {
                    locator: "function.base_id".into(),
                    message: "mollified spec requires base_id".into(),
                })?;
            let eps = self.epsilon.ok_or_else(|| Error::SchemaViolation {
                locator: "function.epsilon".into(),
                message: "mollified spec requires epsilon".into(),
            })?;
            let base = builtins::from_id(base_id, &self.params)?;
            let nodes = self
                .quadrature_nodes
                .unwrap_or(crate::scalar_fn::DEFAULT_QUADRATURE_NODES);
            mollify_with(&base, Mollifier::with_nodes(eps, nodes)?)
        } else {
            builtins::from_id(&self.id, &self.params)
        }
    }
}

fn default_dimension() -> usize {
    6
}

fn default_p() -> SchattenIndex {
    SchattenIndex::new(2.0).expect("2 is a valid exponent")
}

fn default_n() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_p")]
    pub p: SchattenIndex,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub diagnostics_mode: bool,
    /// Proceed past the C^n_b smoothness gate (the theorem hypothesis
    /// fails; the run becomes a probe of that failure).
    #[serde(default)]
    pub override_smoothness: bool,
    /// Experiment id for command = "experiment".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    /// Expected outcome for expectation-graded experiments:
    /// "uniform" | "violated" (necessity), "converges" | "plateaus"
    /// (mollifier convergence).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    /// Named grids/lists (t_grid, eps_list, lambda_range, k_list, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grids: BTreeMap<String, Vec<f64>>,
    /// Named scalar knobs (tolerances, steps, counts).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    /// Default output directory; the --out flag overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            command,
            function: None,
            n: default_n(),
            p: default_p(),
            dimension: default_dimension(),
            seed: 0,
            diagnostics_mode: false,
            override_smoothness: false,
            experiment: None,
            expect: None,
            grids: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaViolation {
                locator: "schema_version".into(),
                message: format!(
                    "unsupported schema version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            });
        }
        if self.n < 1 {
            return Err(Error::SchemaViolation {
                locator: "n".into(),
                message: "derivative order n must be >= 1".into(),
            });
        }
        if self.dimension < 1 {
            return Err(Error::SchemaViolation {
                locator: "dimension".into(),
                message: "dimension must be >= 1".into(),
            });
        }
        // 1 < p < inf unless diagnostics mode admits the endpoints
        if !self.p.in_theorem_scope() {
            let endpoint = self.p.value() == 1.0 || self.p.is_infinite();
            if !(self.diagnostics_mode && endpoint) {
                return Err(Error::InvalidP(self.p.value()));
            }
        }
        if let Some(e) = &self.expect {
            if !matches!(
                e.as_str(),
                "uniform" | "violated" | "converges" | "plateaus"
            ) {
                return Err(Error::SchemaViolation {
                    locator: "expect".into(),
                    message: format!(
                        "expect must be uniform|violated|converges|plateaus, got {e:?}"
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn resolve_function(&self) -> Result<ScalarFunction> {
        match &self.function {
            Some(spec) => spec.resolve(),
            None => Ok(builtins::sin()),
        }
    }

    pub fn grid(&self, name: &str, default: &[f64]) -> Vec<f64> {
        self.grids
            .get(name)
            .cloned()
            .unwrap_or_else(|| default.to_vec())
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Maps the expectation string onto the boolean the experiment
    /// configs understand.
    pub fn expectation(&self) -> Option<bool> {
        match self.expect.as_deref() {
            Some("uniform") | Some("converges") => Some(true),
            Some("violated") | Some("plateaus") => Some(false),
            _ => None,
        }
    }
}
