//! Stacks of equally sized 8-bit grayscale images (PNG or binary PGM).
//!
//! Image `i` in filename order becomes column `i`, pixels flattened
//! row-major and scaled from `0..=255` to `[0, 1]`.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ColorType, GrayImage, ImageFormat, ImageReader};

use super::write_atomic;
use crate::{Matrix, Result, RgcError};

#[derive(Debug, Clone)]
pub struct ImageStack {
    /// `(width * height) x images`
    pub matrix: Matrix,
    pub width: u32,
    pub height: u32,
    /// File names in column order.
    pub names: Vec<String>,
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm"))
}

fn load_gray(path: &Path) -> Result<GrayImage> {
    let img_err = |message: String| RgcError::Image {
        path: path.to_path_buf(),
        message,
    };
    let img = ImageReader::open(path)
        .map_err(|e| RgcError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| RgcError::io(path, e))?
        .decode()
        .map_err(|e| img_err(e.to_string()))?;
    if img.color() != ColorType::L8 {
        return Err(img_err(format!(
            "expected 8-bit grayscale, found {:?}; convert the input first",
            img.color()
        )));
    }
    Ok(img.into_luma8())
}

pub fn load_image_stack(dir: &Path) -> Result<ImageStack> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| RgcError::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| RgcError::io(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if paths.is_empty() {
        return Err(RgcError::InvalidInput(format!(
            "{} contains no .png or .pgm images",
            dir.display()
        )));
    }

    let images: Vec<GrayImage> = paths.iter().map(|p| load_gray(p)).collect::<Result<_>>()?;
    let (width, height) = images[0].dimensions();
    if let Some((p, img)) = paths
        .iter()
        .zip(&images)
        .find(|(_, img)| img.dimensions() != (width, height))
    {
        return Err(RgcError::InvalidInput(format!(
            "{} is {}x{} but {} is {width}x{height}",
            p.display(),
            img.width(),
            img.height(),
            paths[0].display()
        )));
    }

    let pixels = (width * height) as usize;
    let mut matrix = Matrix::zeros(pixels, images.len());
    for (j, img) in images.iter().enumerate() {
        for (i, &px) in img.as_raw().iter().enumerate() {
            matrix[(i, j)] = px as f64 / 255.0;
        }
    }
    let names = paths
        .iter()
        .map(|p| {
            p.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    Ok(ImageStack {
        matrix,
        width,
        height,
        names,
    })
}

/// Inverse of the vectorization: clamps to `[0, 1]` and rounds to 8 bits.
pub fn reconstruct_image(column: &[f64], width: u32, height: u32) -> Result<GrayImage> {
    if column.len() != (width * height) as usize {
        return Err(RgcError::InvalidInput(format!(
            "column of {} values cannot form a {width}x{height} image",
            column.len()
        )));
    }
    let raw = column
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    Ok(GrayImage::from_raw(width, height, raw).expect("length checked"))
}

/// Writes column `i` of `m` as `<dir>/<prefix>_<stem of names[i]>.png`.
/// Returns the written paths.
pub fn save_image_stack(
    dir: &Path,
    prefix: &str,
    m: &Matrix,
    width: u32,
    height: u32,
    names: &[String],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| RgcError::io(dir, e))?;
    let mut written = Vec::with_capacity(m.ncols());
    for (j, col) in m.column_iter().enumerate() {
        let values: Vec<f64> = col.iter().copied().collect();
        let img = reconstruct_image(&values, width, height)?;
        let stem = names
            .get(j)
            .and_then(|n| Path::new(n).file_stem())
            .map_or_else(|| format!("{j:04}"), |s| s.to_string_lossy().into_owned());
        let path = dir.join(format!("{prefix}_{stem}.png"));
        let mut buf = Cursor::new(Vec::new());
        img.write_to(&mut buf, ImageFormat::Png)
            .map_err(|e| RgcError::Image {
                path: path.clone(),
                message: e.to_string(),
            })?;
        write_atomic(&path, |w| w.write_all(buf.get_ref()))?;
        written.push(path);
    }
    Ok(written)
}
