//! Joint diagonalisation of sample matrices, average-graph reconstruction,
//! and a self-contained symmetric eigensolver.

mod eig;
mod jd;

use std::path::Path;

use serde::Serialize;

pub use eig::{eig_sym, eigenvector_centrality, OrthoBasis};
pub use jd::{
    batch_matrices, joint_diagonalise, joint_diagonalise_batch, off2, project, reconstruct_average, JdOptions, JdResult,
};

use crate::error::{Error, Result};

/// JSON layout of a [`JdResult`]: the basis is flattened row-major.
#[derive(Debug, Serialize)]
pub struct JdExport<'a> {
    pub n: usize,
    pub basis: &'a [f64],
    pub avg_diag: &'a [f64],
    pub deviations: &'a [f64],
    pub off2_history: &'a [f64],
    pub converged: bool,
    pub sweeps: usize,
}

impl<'a> From<&'a JdResult> for JdExport<'a> {
    fn from(r: &'a JdResult) -> Self {
        JdExport {
            n: r.n(),
            basis: r.basis.matrix().as_slice(),
            avg_diag: &r.avg_diag,
            deviations: &r.deviations,
            off2_history: &r.off2_history,
            converged: r.converged,
            sweeps: r.sweeps,
        }
    }
}

pub fn save_jd_json(result: &JdResult, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&JdExport::from(result))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
