//! Loading, saving, and generating data.
//!
//! Text formats render reals with 17 significant digits so that a save
//! followed by a load reproduces every `f64` exactly. All writers go through
//! a temporary file in the destination directory followed by a rename.

pub mod images;
pub mod matrix_market;
pub mod synthetic;
pub mod text;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use images::{load_image_stack, reconstruct_image, save_image_stack, ImageStack};
pub use matrix_market::{load_graph, load_matrix_market, save_graph, save_matrix};
pub use synthetic::{make_synthetic, SyntheticInstance, SyntheticSpec};
pub use text::{
    load_csv_matrix, load_full_labels, load_labels, load_partial_labels, save_csv_matrix,
    save_history, save_labels, HISTORY_HEADER,
};

use crate::learning::LabelAssignment;
use crate::{ensure_finite, Matrix, Result, RgcError};

/// Renders a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `path` by filling a sibling temp file and renaming it into place.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| RgcError::io(path, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).map_err(|e| RgcError::io(path, e))?;
        buf.flush().map_err(|e| RgcError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| RgcError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Each column is a sample (features x samples).
    #[default]
    SamplesAsColumns,
    /// Each row is a sample, as most CSV exports store it.
    SamplesAsRows,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Csv(PathBuf),
    MatrixMarket(PathBuf),
    ImageDir(PathBuf),
}

impl Source {
    /// Picks the source kind from the path: directories are image stacks,
    /// `.mtx` is MatrixMarket, anything else is CSV.
    pub fn infer(path: &Path) -> Self {
        if path.is_dir() {
            Source::ImageDir(path.to_path_buf())
        } else if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("mtx"))
        {
            Source::MatrixMarket(path.to_path_buf())
        } else {
            Source::Csv(path.to_path_buf())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSpec {
    pub source: Source,
    pub orientation: Orientation,
    pub labels_path: Option<PathBuf>,
}

/// Loads a data matrix as features x samples, plus labels if configured.
/// Image directories always yield one column per image.
pub fn load_matrix(spec: &DatasetSpec) -> Result<(Matrix, Option<LabelAssignment>)> {
    let raw = match &spec.source {
        Source::Csv(p) => load_csv_matrix(p)?,
        Source::MatrixMarket(p) => load_matrix_market(p)?,
        Source::ImageDir(p) => load_image_stack(p)?.matrix,
    };
    let x = match (&spec.source, spec.orientation) {
        (Source::ImageDir(_), _) | (_, Orientation::SamplesAsColumns) => raw,
        (_, Orientation::SamplesAsRows) => raw.transpose(),
    };
    ensure_finite(&x, "data matrix")?;
    let labels = match &spec.labels_path {
        None => None,
        Some(p) => {
            let labels = text::load_full_labels(p)?;
            if labels.len() != x.ncols() {
                return Err(RgcError::InvalidInput(format!(
                    "{} has {} labels for {} samples",
                    p.display(),
                    labels.len(),
                    x.ncols()
                )));
            }
            Some(labels)
        }
    };
    Ok((x, labels))
}
