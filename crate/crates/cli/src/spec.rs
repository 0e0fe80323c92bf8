//! Kernel spec files.
//!
//! ```json
//! {"schema": "1", "type": "sum", "parts": [
//!   {"type": "quasi_carleman", "v0": 1, "q": 1, "alpha": 0, "r": 0},
//!   {"type": "finite_rank", "terms": [{"coeffs": [[-1, 0]], "beta": [1, 0]}]}
//! ]}
//! ```
//!
//! In a `sum` the last part is read as the perturbation `V` and the others
//! make up `H₀`; any other document is `V` alone with `H₀ = 0`.

use std::path::Path;

use hankel_core::{FiniteRankTerm, Kernel, QuasiCarlemanTerm, Term, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelNode {
    QuasiCarleman {
        v0: f64,
        q: f64,
        alpha: f64,
        #[serde(default)]
        r: f64,
    },
    FiniteRank {
        terms: Vec<FiniteTermNode>,
    },
    Sum {
        parts: Vec<KernelNode>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteTermNode {
    pub coeffs: Vec<[f64; 2]>,
    pub beta: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub schema: String,
    #[serde(flatten)]
    pub kernel: KernelNode,
}

impl KernelNode {
    fn collect(&self, out: &mut Vec<Term>) {
        match self {
            KernelNode::QuasiCarleman { v0, q, alpha, r } => {
                out.push(Term::QuasiCarleman(QuasiCarlemanTerm::new(*v0, *q, *alpha, *r)))
            }
            KernelNode::FiniteRank { terms } => out.extend(terms.iter().map(|t| {
                let poly = t.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect();
                Term::FiniteRank(FiniteRankTerm::new(poly, C64::new(t.beta[0], t.beta[1])))
            })),
            KernelNode::Sum { parts } => parts.iter().for_each(|p| p.collect(out)),
        }
    }

    pub fn kernel(&self) -> Result<Kernel, CliError> {
        let mut terms = Vec::new();
        self.collect(&mut terms);
        Ok(Kernel::new(terms)?)
    }

    /// `(H₀, V)` as described in the module docs.
    pub fn split(&self) -> Result<(Kernel, Kernel), CliError> {
        match self {
            KernelNode::Sum { parts } if !parts.is_empty() => {
                let (v, rest) = parts.split_last().unwrap();
                let h0 = KernelNode::Sum { parts: rest.to_vec() };
                Ok((h0.kernel()?, v.kernel()?))
            }
            _ => Ok((Kernel::zero(), self.kernel()?)),
        }
    }

    /// `(q, r)` of every quasi-Carleman part.
    pub fn quasi_params(&self) -> Vec<(f64, f64)> {
        let mut terms = Vec::new();
        self.collect(&mut terms);
        terms
            .iter()
            .filter_map(|t| match t {
                Term::QuasiCarleman(q) => Some((q.q, q.r)),
                Term::FiniteRank(_) => None,
            })
            .collect()
    }
}

pub fn check_schema(schema: &str) -> Result<(), CliError> {
    if schema != SCHEMA {
        return Err(CliError::Validation(format!("unsupported schema {schema:?}, expected {SCHEMA:?}")));
    }
    Ok(())
}

pub fn read_spec(path: &Path) -> Result<SpecFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let spec: SpecFile =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    check_schema(&spec.schema)?;
    // surface self-adjointness and definability problems before any command runs
    spec.kernel.kernel()?;
    Ok(spec)
}
