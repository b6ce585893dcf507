//! JSON wire formats for ensembles, problems, solver results, and reports.
//!
//! Reals are serialized as plain JSON numbers (shortest round-trip form) and
//! accepted on input either as numbers or as decimal strings, so documents
//! produced by tools that stringify floats stay readable.

use std::path::{Path, PathBuf};

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, MeasurementEnsemble};
use crate::solvers::{OptimalityCertificate, RecoveryProblem, SolverResult};

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

fn parse_flex(v: NumOrStr) -> std::result::Result<f64, String> {
    match v {
        NumOrStr::Num(x) => Ok(x),
        NumOrStr::Str(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("cannot parse {s:?} as a real: {e}")),
    }
}

fn flex_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    parse_flex(NumOrStr::deserialize(d)?).map_err(D::Error::custom)
}

fn flex_vec<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<NumOrStr>::deserialize(d)?
        .into_iter()
        .map(|v| parse_flex(v).map_err(D::Error::custom))
        .collect()
}

fn flex_vec_opt<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    match Option::<Vec<NumOrStr>>::deserialize(d)? {
        None => Ok(None),
        Some(v) => v
            .into_iter()
            .map(|x| parse_flex(x).map_err(D::Error::custom))
            .collect::<std::result::Result<Vec<f64>, D::Error>>()
            .map(Some),
    }
}

fn flex_matrix_list<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
    Vec::<Vec<NumOrStr>>::deserialize(d)?
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| parse_flex(v).map_err(D::Error::custom))
                .collect()
        })
        .collect()
}

/// Ensemble document: `{"m":…, "n1":…, "n2":…, "matrices":[[row-major]…]}`,
/// matrices listed in measurement order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleDoc {
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    #[serde(deserialize_with = "flex_matrix_list")]
    pub matrices: Vec<Vec<f64>>,
}

impl EnsembleDoc {
    pub fn from_ensemble(ens: &MeasurementEnsemble) -> Self {
        Self {
            m: ens.m(),
            n1: ens.n1(),
            n2: ens.n2(),
            matrices: ens.matrices().iter().map(|a| a.entries().to_vec()).collect(),
        }
    }

    pub fn into_ensemble(self) -> Result<MeasurementEnsemble> {
        if self.matrices.len() != self.m {
            return Err(Error::invalid(
                "ensemble document",
                format!(
                    "m = {} but {} matrices are listed",
                    self.m,
                    self.matrices.len()
                ),
            ));
        }
        let matrices = self
            .matrices
            .into_iter()
            .map(|entries| DenseMatrix::new(self.n1, self.n2, entries))
            .collect::<Result<Vec<_>>>()?;
        MeasurementEnsemble::new(self.n1, self.n2, matrices)
    }
}

pub fn read_ensemble(path: &Path) -> Result<MeasurementEnsemble> {
    let text = std::fs::read_to_string(path)?;
    let doc: EnsembleDoc = serde_json::from_str(&text)?;
    doc.into_ensemble()
}

pub fn write_ensemble(path: &Path, ens: &MeasurementEnsemble) -> Result<()> {
    let doc = EnsembleDoc::from_ensemble(ens);
    std::fs::write(path, to_pretty_json(&doc)?)?;
    Ok(())
}

/// Matrix document: `{"rows":…, "cols":…, "entries":[row-major]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    #[serde(deserialize_with = "flex_vec")]
    pub entries: Vec<f64>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &DenseMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            entries: m.entries().to_vec(),
        }
    }

    pub fn into_matrix(self) -> Result<DenseMatrix> {
        DenseMatrix::new(self.rows, self.cols, self.entries)
    }
}

/// Reference to an ensemble: inline document or a path relative to the
/// referring file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleRef {
    Path(PathBuf),
    Inline(EnsembleDoc),
}

/// Problem document:
/// `{"ensemble": <doc or path>, "b": […], "lambda": …, "epsilon": …,
///   "truth": optional matrix, "noise": optional vector}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDoc {
    pub ensemble: EnsembleRef,
    #[serde(deserialize_with = "flex_vec")]
    pub b: Vec<f64>,
    #[serde(deserialize_with = "flex_f64")]
    pub lambda: f64,
    #[serde(deserialize_with = "flex_f64")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<MatrixDoc>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "flex_vec_opt"
    )]
    pub noise: Option<Vec<f64>>,
}

impl ProblemDoc {
    pub fn from_problem(p: &RecoveryProblem) -> Self {
        Self {
            ensemble: EnsembleRef::Inline(EnsembleDoc::from_ensemble(p.ensemble())),
            b: p.b().to_vec(),
            lambda: p.lambda(),
            epsilon: p.epsilon(),
            truth: p.truth().map(MatrixDoc::from_matrix),
            noise: p.noise().map(|n| n.to_vec()),
        }
    }

    /// Build the problem; `base_dir` anchors relative ensemble paths.
    pub fn into_problem(self, base_dir: &Path) -> Result<RecoveryProblem> {
        let ens = match self.ensemble {
            EnsembleRef::Inline(doc) => doc.into_ensemble()?,
            EnsembleRef::Path(p) => {
                let resolved = if p.is_absolute() { p } else { base_dir.join(p) };
                read_ensemble(&resolved)?
            }
        };
        let mut problem = RecoveryProblem::new(ens, self.b, self.lambda, self.epsilon)?;
        if let Some(t) = self.truth {
            problem.set_truth(t.into_matrix()?)?;
        }
        if let Some(n) = self.noise {
            problem.set_noise(n)?;
        }
        Ok(problem)
    }
}

pub fn read_problem(path: &Path) -> Result<RecoveryProblem> {
    let text = std::fs::read_to_string(path)?;
    let doc: ProblemDoc = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    doc.into_problem(base)
}

pub fn write_problem(path: &Path, p: &RecoveryProblem) -> Result<()> {
    std::fs::write(path, to_pretty_json(&ProblemDoc::from_problem(p))?)?;
    Ok(())
}

/// Solver result document as written by the `solve` command and read back by
/// `verify`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResultDoc {
    pub version: String,
    pub solver: String,
    pub solution: MatrixDoc,
    pub iterations: usize,
    #[serde(deserialize_with = "flex_f64")]
    pub final_objective: f64,
    #[serde(deserialize_with = "flex_vec")]
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub certificate: OptimalityCertificate,
}

impl SolveResultDoc {
    pub fn from_result(solver: &str, r: &SolverResult) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            solver: solver.to_string(),
            solution: MatrixDoc::from_matrix(&r.solution),
            iterations: r.iterations,
            final_objective: r.final_objective,
            objective_trace: r.objective_trace.clone(),
            converged: r.converged,
            certificate: r.certificate,
        }
    }
}

pub fn read_solution_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)?;
    let doc: SolveResultDoc = serde_json::from_str(&text)?;
    doc.solution.into_matrix()
}

/// Pretty JSON with a trailing newline; field order fixed by struct
/// declaration so identical values serialize to identical bytes.
pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
