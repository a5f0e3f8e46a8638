//! JSON documents for states, basis sets and tomography results.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major arrays of
//! rows. Readers validate every physical invariant before handing back core
//! types.

use std::fs;
use std::path::Path;

use haqt_core::bases::{BasisSet, Element, MeasurementBasis};
use haqt_core::estimator::TomographyResult;
use haqt_core::gellmann::{Quadrature, Sign};
use haqt_core::{CMatrix, DensityMatrix, PureState, C64};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub type Complex = [f64; 2];

pub fn complex_to_json(z: C64) -> Complex {
    [z.re, z.im]
}

pub fn complex_from_json(z: Complex) -> C64 {
    C64::new(z[0], z[1])
}

pub fn matrix_to_json(m: &CMatrix) -> Vec<Vec<Complex>> {
    (0..m.rows()).map(|r| m.row(r).iter().copied().map(complex_to_json).collect()).collect()
}

/// Square `dim × dim` matrix; rejects ragged or mis-sized input.
pub fn matrix_from_json(dim: usize, rows: &[Vec<Complex>]) -> Result<CMatrix, String> {
    if rows.len() != dim {
        return Err(format!("matrix has {} rows, expected {dim}", rows.len()));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(format!("row {i} has {} entries, expected {dim}", row.len()));
        }
        data.extend(row.iter().copied().map(complex_from_json));
    }
    if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err("matrix has non-finite entries".into());
    }
    Ok(CMatrix::from_row_major(dim, dim, data))
}

fn vector_to_json(v: &[C64]) -> Vec<Complex> {
    v.iter().copied().map(complex_to_json).collect()
}

fn vector_from_json(v: &[Complex]) -> Vec<C64> {
    v.iter().copied().map(complex_from_json).collect()
}

/// `{"dim": d, "matrix": [[[re, im], ...], ...]}`. A pure state may instead
/// be given as `"amplitudes": [[re, im], ...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<Complex>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<Complex>>,
}

impl StateDoc {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        StateDoc { dim: rho.dim(), matrix: Some(matrix_to_json(rho.matrix())), amplitudes: None }
    }

    pub fn to_state(&self) -> Result<DensityMatrix, String> {
        if self.dim < 2 {
            return Err(format!("dim must be at least 2, got {}", self.dim));
        }
        match (&self.matrix, &self.amplitudes) {
            (Some(rows), None) => {
                let m = matrix_from_json(self.dim, rows)?;
                DensityMatrix::new(m).map_err(|e| e.to_string())
            }
            (None, Some(amps)) => {
                if amps.len() != self.dim {
                    return Err(format!("{} amplitudes, expected {}", amps.len(), self.dim));
                }
                let psi = PureState::new(vector_from_json(amps)).map_err(|e| e.to_string())?;
                Ok(psi.to_density())
            }
            _ => Err("exactly one of \"matrix\" or \"amplitudes\" is required".into()),
        }
    }
}

pub fn parse_state(text: &str) -> Result<DensityMatrix, String> {
    let doc: StateDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    doc.to_state()
}

pub fn read_state(path: &Path) -> AppResult<DensityMatrix> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_state(&text).map_err(|m| AppError::input(path, m))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementDoc {
    Computational { index: usize },
    Pair { quadrature: String, j: usize, k: usize, sign: String },
}

impl ElementDoc {
    fn from_element(e: &Element) -> Self {
        match *e {
            Element::Computational(index) => ElementDoc::Computational { index },
            Element::Pair { quadrature, j, k, sign } => ElementDoc::Pair {
                quadrature: match quadrature {
                    Quadrature::Re => "re",
                    Quadrature::Im => "im",
                }
                .into(),
                j,
                k,
                sign: match sign {
                    Sign::Plus => "+",
                    Sign::Minus => "-",
                }
                .into(),
            },
        }
    }

    fn to_element(&self) -> Result<Element, String> {
        match self {
            ElementDoc::Computational { index } => Ok(Element::Computational(*index)),
            ElementDoc::Pair { quadrature, j, k, sign } => {
                let quadrature = match quadrature.as_str() {
                    "re" => Quadrature::Re,
                    "im" => Quadrature::Im,
                    other => return Err(format!("unknown quadrature {other:?}")),
                };
                let sign = match sign.as_str() {
                    "+" => Sign::Plus,
                    "-" => Sign::Minus,
                    other => return Err(format!("unknown sign {other:?}")),
                };
                Ok(Element::Pair { quadrature, j: *j, k: *k, sign })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDoc {
    pub label: usize,
    pub vectors: Vec<Vec<Complex>>,
    pub provenance: Vec<ElementDoc>,
}

/// `{"dim", "frame", "bases": [{"label", "vectors", "provenance"}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSetDoc {
    pub dim: usize,
    pub frame: Vec<Vec<Complex>>,
    pub bases: Vec<BasisDoc>,
}

impl BasisSetDoc {
    pub fn from_set(set: &BasisSet) -> Self {
        BasisSetDoc {
            dim: set.dim(),
            frame: matrix_to_json(set.frame()),
            bases: set
                .bases()
                .iter()
                .map(|b| BasisDoc {
                    label: b.label(),
                    vectors: b.vectors().iter().map(|v| vector_to_json(v.amplitudes())).collect(),
                    provenance: b.provenance().iter().map(ElementDoc::from_element).collect(),
                })
                .collect(),
        }
    }

    pub fn to_set(&self) -> Result<BasisSet, String> {
        let frame = matrix_from_json(self.dim, &self.frame)?;
        let bases = self
            .bases
            .iter()
            .map(|b| {
                let vectors = b
                    .vectors
                    .iter()
                    .map(|v| PureState::new(vector_from_json(v)))
                    .collect::<haqt_core::Result<Vec<_>>>()
                    .map_err(|e| format!("basis {}: {e}", b.label))?;
                let provenance = b.provenance.iter().map(ElementDoc::to_element).collect::<Result<Vec<_>, _>>()?;
                MeasurementBasis::new(b.label, vectors, provenance).map_err(|e| format!("basis {}: {e}", b.label))
            })
            .collect::<Result<Vec<_>, _>>()?;
        BasisSet::new(self.dim, frame, bases).map_err(|e| e.to_string())
    }
}

/// One tomography run as written by `simulate` and `reconstruct`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub protocol: String,
    pub dim: usize,
    pub shots: u64,
    pub seed: Option<u64>,
    pub iterations: usize,
    pub final_log_likelihood: f64,
    pub converged: bool,
    pub estimate: StateDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage1: Option<Box<ResultDoc>>,
}

impl ResultDoc {
    pub fn new(result: &TomographyResult, shots: u64, seed: Option<u64>) -> Self {
        ResultDoc {
            protocol: result.protocol_tag.as_str().into(),
            dim: result.estimate.dim(),
            shots,
            seed,
            iterations: result.iterations,
            final_log_likelihood: result.final_log_likelihood,
            converged: result.converged,
            estimate: StateDoc::from_state(&result.estimate),
            infidelity: None,
            stage1: None,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}
