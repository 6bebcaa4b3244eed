//! Instance and witness documents.
//!
//! Block indices are 1-based in every file; conversion to the library's
//! 0-based indices happens here and nowhere else.

use genunitary::algebra::Automorphism;
use genunitary::corr::UnitalHom;
use genunitary::scalar::{CMat, Cx};
use genunitary::{HilbertModule, MultiMatrixAlgebra, Perm};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Rows of `[re, im]` pairs.
pub type ComplexMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Syntax { path: PathBuf, source: serde_json::Error },
    #[error("{field}: {constraint}")]
    Invalid { field: &'static str, constraint: String },
    #[error("{field}: required by `{command}`")]
    Missing { field: &'static str, command: &'static str },
}

fn invalid(field: &'static str, constraint: impl Into<String>) -> InputError {
    InputError::Invalid { field, constraint: constraint.into() }
}

/// Group enumeration runs over all of `S_k`.
pub const MAX_BLOCKS: usize = 6;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct InstanceFile {
    pub blocks: Vec<usize>,
    pub mult: Option<Vec<usize>>,
    pub perm: Option<Vec<usize>>,
    pub conjugators: Option<Vec<ComplexMatrix>>,
    pub mult_matrix: Option<Vec<Vec<usize>>>,
}

/// A validated instance.
#[derive(Debug)]
pub struct Instance {
    pub algebra: MultiMatrixAlgebra,
    pub module: Option<HilbertModule>,
    pub automorphism: Option<Automorphism<f64>>,
    pub hom: Option<UnitalHom<f64>>,
}

impl Instance {
    pub fn module(&self, command: &'static str) -> Result<&HilbertModule, InputError> {
        self.module.as_ref().ok_or(InputError::Missing { field: "mult", command })
    }

    pub fn automorphism(&self, command: &'static str) -> Result<&Automorphism<f64>, InputError> {
        self.automorphism.as_ref().ok_or(InputError::Missing { field: "perm", command })
    }

    pub fn hom(&self, command: &'static str) -> Result<&UnitalHom<f64>, InputError> {
        self.hom.as_ref().ok_or(InputError::Missing { field: "multMatrix", command })
    }
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| InputError::Syntax { path: path.into(), source })
}

pub fn load(path: &Path) -> Result<Instance, InputError> {
    read_json::<InstanceFile>(path)?.validate()
}

pub fn matrix_from_json(field: &'static str, index: usize, rows: &ComplexMatrix) -> Result<CMat<f64>, InputError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(invalid(field, format!("matrix {} has rows of unequal length", index + 1)));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(field, format!("matrix {} has a non-finite entry", index + 1)));
    }
    Ok(CMat::from_fn(r, c, |i, j| Cx::new(rows[i][j][0], rows[i][j][1])))
}

pub fn matrix_to_json(m: &CMat<f64>) -> ComplexMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Square matrices with the given sizes, one per block.
fn square_matrices(field: &'static str, data: &[ComplexMatrix], sizes: &[usize]) -> Result<Vec<CMat<f64>>, InputError> {
    if data.len() != sizes.len() {
        return Err(invalid(field, format!("expected {} matrices, got {}", sizes.len(), data.len())));
    }
    data.iter()
        .zip(sizes)
        .enumerate()
        .map(|(i, (rows, &n))| {
            let m = matrix_from_json(field, i, rows)?;
            if m.shape() != (n, n) {
                return Err(invalid(
                    field,
                    format!("matrix {} must be {n}x{n}, got {}x{}", i + 1, m.nrows(), m.ncols()),
                ));
            }
            if !genunitary::linalg::is_unitary(&m) {
                return Err(invalid(field, format!("matrix {} is not unitary", i + 1)));
            }
            Ok(m)
        })
        .collect()
}

/// Checks that `images` is a permutation of `1..=k` that preserves `sizes`.
pub fn perm_from_json(field: &'static str, images: &[usize], sizes: &[usize]) -> Result<Perm, InputError> {
    let k = sizes.len();
    if images.len() != k {
        return Err(invalid(field, format!("has {} entries but there are {k} blocks", images.len())));
    }
    let perm = Perm::from_one_based(images)
        .map_err(|_| invalid(field, format!("must be a permutation of 1..={k}")))?;
    if let Some(i) = (0..k).find(|&i| sizes[perm.apply(i)] != sizes[i]) {
        let j = perm.apply(i);
        return Err(invalid(
            field,
            format!(
                "must preserve block sizes (block {} of size {} maps to block {} of size {})",
                i + 1,
                sizes[i],
                j + 1,
                sizes[j]
            ),
        ));
    }
    Ok(perm)
}

impl InstanceFile {
    pub fn validate(self) -> Result<Instance, InputError> {
        if self.blocks.is_empty() {
            return Err(invalid("blocks", "must list at least one block size"));
        }
        if let Some(i) = self.blocks.iter().position(|&n| n == 0) {
            return Err(invalid("blocks", format!("entry {} is 0; block sizes must be positive", i + 1)));
        }
        let k = self.blocks.len();
        if k > MAX_BLOCKS {
            return Err(invalid("blocks", format!("at most {MAX_BLOCKS} blocks are supported, got {k}")));
        }
        let algebra = MultiMatrixAlgebra::new(self.blocks.clone()).map_err(|e| invalid("blocks", e.to_string()))?;

        let module = match self.mult {
            Some(m) if m.len() != k => {
                return Err(invalid("mult", format!("has {} entries but blocks has {k}", m.len())));
            }
            Some(m) => Some(HilbertModule::new(&algebra, m).map_err(|e| invalid("mult", e.to_string()))?),
            None => None,
        };

        let automorphism = match (self.perm, self.conjugators) {
            (None, Some(_)) => return Err(invalid("conjugators", "given without perm")),
            (None, None) => None,
            (Some(images), conj) => {
                let perm = perm_from_json("perm", &images, &self.blocks)?;
                let conj = match conj {
                    Some(c) => square_matrices("conjugators", &c, &self.blocks)?,
                    None => self.blocks.iter().map(|&n| CMat::identity(n, n)).collect(),
                };
                Some(Automorphism::new(&algebra, perm, conj).map_err(|e| invalid("perm", e.to_string()))?)
            }
        };

        let hom = match self.mult_matrix {
            None => None,
            Some(mu) => {
                if mu.len() != k {
                    return Err(invalid("multMatrix", format!("has {} rows but blocks has {k}", mu.len())));
                }
                let l = mu[0].len();
                if l == 0 || mu.iter().any(|r| r.len() != l) {
                    return Err(invalid("multMatrix", "rows must have the same positive length"));
                }
                if let Some(j) = (0..l).find(|&j| mu.iter().all(|r| r[j] == 0)) {
                    return Err(invalid(
                        "multMatrix",
                        format!("column {} is zero; every target block must receive the source", j + 1),
                    ));
                }
                Some(UnitalHom::from_mult(&algebra, mu).map_err(|e| invalid("multMatrix", e.to_string()))?)
            }
        };

        Ok(Instance { algebra, module, automorphism, hom })
    }
}

/// The data of a generalized unitary: its automorphism `(perm, conjugators)`
/// and one unitary per block of the module.
#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct WitnessFile {
    pub perm: Vec<usize>,
    pub conjugators: Vec<ComplexMatrix>,
    pub block_unitaries: Vec<ComplexMatrix>,
}

/// Accepts either a bare witness or an `exists-unitary --json` report.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum WitnessDocument {
    Report { witness: WitnessFile },
    Bare(WitnessFile),
}

impl WitnessDocument {
    pub fn into_witness(self) -> WitnessFile {
        match self {
            WitnessDocument::Report { witness } | WitnessDocument::Bare(witness) => witness,
        }
    }
}

impl WitnessFile {
    /// Parses the matrices; unitarity is left to the caller's check.
    pub fn decode(&self, e: &HilbertModule) -> Result<(Perm, Vec<CMat<f64>>, Vec<CMat<f64>>), InputError> {
        let blocks = e.algebra().blocks();
        let perm = perm_from_json("witness.perm", &self.perm, blocks)?;
        let decode_all = |field: &'static str, data: &[ComplexMatrix], sizes: &[usize]| {
            if data.len() != sizes.len() {
                return Err(invalid(field, format!("expected {} matrices, got {}", sizes.len(), data.len())));
            }
            data.iter().enumerate().map(|(i, m)| matrix_from_json(field, i, m)).collect::<Result<Vec<_>, _>>()
        };
        let conj = decode_all("witness.conjugators", &self.conjugators, blocks)?;
        let w = decode_all("witness.blockUnitaries", &self.block_unitaries, e.mults())?;
        Ok((perm, conj, w))
    }
}
