//! User-defined models from declarative JSON files.
//!
//! ```json
//! {
//!   "name": "pinned-pair",
//!   "kernel_form": "factorized",
//!   "kernel": "cosine-response",
//!   "atoms": [
//!     { "weight": "1/2", "theta1": "phi1",      "theta2": "phi1 + pi" },
//!     { "weight": "1/2", "theta1": "phi1 + pi", "theta2": "phi1" }
//!   ]
//! }
//! ```
//!
//! `kernel` is one of `cosine-response`, `sign-response`, `born`; the
//! declared `kernel_form` must agree with it. Weights are rationals written
//! as `p` or `p/q` and must sum to exactly 1. Angle expressions follow the
//! grammar in [`crate::angles`]. A setting-free grid density may be given
//! as `"grid_cells": N` instead of `atoms`.

use std::path::Path;

use num_rational::Rational64;
use serde::Deserialize;

use crate::angles::{parse_rational, AngleExpr};
use crate::error::{Error, Result};
use crate::model::{builtin, AtomSpec, BeableModel, DensitySpec, KernelForm, KernelPreset};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: String,
    kernel_form: KernelForm,
    kernel: KernelPreset,
    #[serde(default)]
    atoms: Option<Vec<AtomFile>>,
    #[serde(default)]
    grid_cells: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomFile {
    weight: String,
    theta1: String,
    theta2: String,
}

/// Parse a model definition from JSON text.
pub fn model_from_json(text: &str) -> Result<BeableModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    let malformed = |reason: String| Error::MalformedModel {
        model: file.name.clone(),
        reason,
    };

    if file.kernel.form() != file.kernel_form {
        return Err(malformed(format!(
            "kernel `{}` is {:?} but kernel_form declares {:?}",
            file.kernel.name(),
            file.kernel.form(),
            file.kernel_form
        )));
    }

    let density = match (&file.atoms, file.grid_cells) {
        (Some(_), Some(_)) => {
            return Err(malformed("give either `atoms` or `grid_cells`, not both".into()))
        }
        (None, None) => {
            return Err(malformed("model needs `atoms` or `grid_cells`".into()))
        }
        (None, Some(cells)) => {
            if cells == 0 {
                return Err(malformed("`grid_cells` must be positive".into()));
            }
            DensitySpec::UniformGrid { cells }
        }
        (Some(atoms), None) => {
            if atoms.is_empty() {
                return Err(malformed("`atoms` must be nonempty".into()));
            }
            let mut specs = Vec::with_capacity(atoms.len());
            let mut mass = Rational64::from_integer(0);
            for atom in atoms {
                let weight = parse_rational(&atom.weight)?;
                if weight < Rational64::from_integer(0) {
                    return Err(malformed(format!("negative atom weight {weight}")));
                }
                mass += weight;
                specs.push(AtomSpec {
                    weight,
                    theta1: atom.theta1.parse::<AngleExpr>()?,
                    theta2: atom.theta2.parse::<AngleExpr>()?,
                });
            }
            if mass != Rational64::from_integer(1) {
                return Err(malformed(format!("atom weights sum to {mass}, expected 1")));
            }
            DensitySpec::Atoms(specs)
        }
    };

    Ok(BeableModel::new(file.name, density, file.kernel))
}

/// Load a model definition from a file path.
pub fn model_from_path(path: &Path) -> Result<BeableModel> {
    let text = std::fs::read_to_string(path)?;
    model_from_json(&text)
}

/// Resolve a model argument: a built-in name, else a path to a definition
/// file.
pub fn resolve_model(spec: &str) -> Result<BeableModel> {
    if let Some(model) = builtin(spec) {
        return Ok(model);
    }
    let path = Path::new(spec);
    if path.exists() {
        return model_from_path(path);
    }
    Err(Error::Parse(format!(
        "unknown model `{spec}`: not a built-in ({}) and no such file",
        crate::model::BUILTIN_NAMES.join(", ")
    )))
}
