//! Global image descriptors.
//!
//! Every technique, built-in or external, ends up as a [`DescriptorSet`]: one
//! fixed-length vector per image, in dataset index order. Built-in HOG lives
//! in [`hog`]; externally computed descriptors arrive through the VPRD file
//! format in [`vprd`].

pub mod hog;
pub mod vprd;

use std::path::Path;

use image::RgbImage;
use rayon::prelude::*;

use crate::codec::{read_image, CompressionLevel};
use crate::dataset::{file_name, list_images};
use crate::error::{Error, Result};

pub use hog::{compute_hog, HogParams};
pub use vprd::{load_descriptor_file, write_descriptor_file};

/// Norms at or below this are treated as zero.
pub const NORM_EPSILON: f64 = 1e-12;

/// A finite, non-empty vector of `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorVector(Vec<f32>);

impl DescriptorVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(DescriptorVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f32> {
        self.0
    }

    /// Euclidean norm, accumulated in `f64`.
    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| v as f64 * v as f64)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl TryFrom<Vec<f32>> for DescriptorVector {
    type Error = Error;

    fn try_from(values: Vec<f32>) -> Result<Self> {
        DescriptorVector::new(values)
    }
}

/// Scale `v` to unit L2 norm. Vectors with norm `<= NORM_EPSILON` become the
/// zero vector.
pub fn normalize(v: &DescriptorVector) -> DescriptorVector {
    let norm = v.norm();
    if norm <= NORM_EPSILON {
        return DescriptorVector(vec![0.0; v.dim()]);
    }
    DescriptorVector(v.0.iter().map(|&x| (x as f64 / norm) as f32).collect())
}

/// Descriptors for one corpus, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub label: String,
    /// Not stored in VPRD files; `None` after loading.
    pub level: Option<CompressionLevel>,
    descriptors: Vec<DescriptorVector>,
    filenames: Vec<String>,
}

impl DescriptorSet {
    pub fn new(
        label: impl Into<String>,
        level: Option<CompressionLevel>,
        descriptors: Vec<DescriptorVector>,
        filenames: Vec<String>,
    ) -> Result<Self> {
        if descriptors.len() != filenames.len() {
            return Err(Error::InvalidParams(format!(
                "{} descriptors but {} filenames",
                descriptors.len(),
                filenames.len()
            )));
        }
        if let Some(first) = descriptors.first() {
            if let Some(other) = descriptors.iter().find(|d| d.dim() != first.dim()) {
                return Err(Error::DimensionMismatch {
                    left: first.dim(),
                    right: other.dim(),
                });
            }
        }
        Ok(DescriptorSet {
            label: label.into(),
            level,
            descriptors,
            filenames,
        })
    }

    /// Shared dimension, 0 for an empty set.
    pub fn dim(&self) -> usize {
        self.descriptors.first().map_or(0, DescriptorVector::dim)
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn descriptors(&self) -> &[DescriptorVector] {
        &self.descriptors
    }

    pub fn filenames(&self) -> &[String] {
        &self.filenames
    }

    pub fn get(&self, index: usize) -> Option<&DescriptorVector> {
        self.descriptors.get(index)
    }

    pub fn with_level(mut self, level: Option<CompressionLevel>) -> Self {
        self.level = level;
        self
    }
}

/// HOG over a list of in-memory images, in order.
pub fn hog_set(
    label: &str,
    level: Option<CompressionLevel>,
    images: &[(String, RgbImage)],
    params: &HogParams,
    workers: usize,
) -> Result<DescriptorSet> {
    params.validate()?;
    let descriptors = crate::with_workers(workers, || {
        images
            .par_iter()
            .map(|(_, img)| compute_hog(img, params))
            .collect::<Result<Vec<_>>>()
    })??;
    let filenames = images.iter().map(|(name, _)| name.clone()).collect();
    DescriptorSet::new(label, level, descriptors, filenames)
}

/// HOG over every image in `dir`, in lexicographic filename order.
pub fn extract_hog_dir(
    dir: &Path,
    level: Option<CompressionLevel>,
    params: &HogParams,
    workers: usize,
) -> Result<DescriptorSet> {
    if !dir.is_dir() {
        return Err(Error::MissingCorpus(dir.to_path_buf()));
    }
    params.validate()?;
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::MissingCorpus(dir.to_path_buf()));
    }
    let descriptors = crate::with_workers(workers, || {
        paths
            .par_iter()
            .map(|p| read_image(p).and_then(|img| compute_hog(&img, params)))
            .collect::<Result<Vec<_>>>()
    })??;
    let filenames = paths.iter().map(|p| file_name(p)).collect();
    DescriptorSet::new(hog::LABEL, level, descriptors, filenames)
}
