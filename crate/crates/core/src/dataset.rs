//! Query/reference corpora and their ground-truth correspondence.
//!
//! A dataset is described by a small JSON manifest naming a query directory,
//! a reference directory and (optionally) an explicit list of
//! `[query, ref_lo, ref_hi]` triples. Images are enumerated in lexicographic
//! filename order and that order defines the frame index on each side.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// File extensions treated as images, compared case-insensitively.
pub const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Query,
    Reference,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Query, Side::Reference];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Query => "query",
            Side::Reference => "reference",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive range of reference frames that count as a correct match for one
/// query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub query_index: usize,
    pub ref_lo: usize,
    pub ref_hi: usize,
}

impl GroundTruthEntry {
    pub fn new(query_index: usize, ref_lo: usize, ref_hi: usize) -> Result<Self> {
        if ref_lo > ref_hi {
            return Err(Error::EmptyRange {
                query: query_index,
                lo: ref_lo,
                hi: ref_hi,
            });
        }
        Ok(GroundTruthEntry {
            query_index,
            ref_lo,
            ref_hi,
        })
    }

    /// Query `i` matches reference `i` only.
    pub fn identity(query_index: usize) -> Self {
        GroundTruthEntry {
            query_index,
            ref_lo: query_index,
            ref_hi: query_index,
        }
    }
}

/// Widen `gt` by `tolerance` frames on both sides and clamp to
/// `0..ref_count`.
///
/// The result is empty only when the entry itself lies entirely outside the
/// reference set, which a loaded manifest never allows.
pub fn accepted_refs(
    gt: &GroundTruthEntry,
    tolerance: usize,
    ref_count: usize,
) -> RangeInclusive<usize> {
    let lo = gt.ref_lo.saturating_sub(tolerance);
    let hi = gt
        .ref_hi
        .saturating_add(tolerance)
        .min(ref_count.saturating_sub(1));
    lo..=hi
}

/// Ground truth for every query of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    entries: Vec<Option<GroundTruthEntry>>,
    ref_count: usize,
    tolerance: usize,
    identity: bool,
}

impl GroundTruth {
    /// Query `i` ↔ reference `i`. Queries past the end of the reference set
    /// have no entry.
    pub fn identity(query_count: usize, ref_count: usize, tolerance: usize) -> Self {
        let entries = (0..query_count)
            .map(|q| (q < ref_count).then(|| GroundTruthEntry::identity(q)))
            .collect();
        GroundTruth {
            entries,
            ref_count,
            tolerance,
            identity: true,
        }
    }

    pub fn explicit(
        entries: impl IntoIterator<Item = GroundTruthEntry>,
        query_count: usize,
        ref_count: usize,
        tolerance: usize,
    ) -> Result<Self> {
        let mut slots = vec![None; query_count];
        for entry in entries {
            if entry.ref_lo > entry.ref_hi {
                return Err(Error::EmptyRange {
                    query: entry.query_index,
                    lo: entry.ref_lo,
                    hi: entry.ref_hi,
                });
            }
            if entry.query_index >= query_count || entry.ref_hi >= ref_count {
                return Err(Error::InvalidParams(format!(
                    "ground truth ({}, {}, {}) out of range for {} queries and {} references",
                    entry.query_index, entry.ref_lo, entry.ref_hi, query_count, ref_count
                )));
            }
            slots[entry.query_index] = Some(entry);
        }
        Ok(GroundTruth {
            entries: slots,
            ref_count,
            tolerance,
            identity: false,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn tolerance(&self) -> usize {
        self.tolerance
    }

    pub fn with_tolerance(mut self, tolerance: usize) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn query_count(&self) -> usize {
        self.entries.len()
    }

    pub fn ref_count(&self) -> usize {
        self.ref_count
    }

    pub fn entry(&self, query: usize) -> Option<&GroundTruthEntry> {
        self.entries.get(query).and_then(Option::as_ref)
    }

    /// Accepted reference interval for `query`, tolerance applied.
    pub fn accepted(&self, query: usize) -> Option<RangeInclusive<usize>> {
        self.entry(query)
            .map(|e| accepted_refs(e, self.tolerance, self.ref_count))
    }

    pub fn is_correct(&self, query: usize, matched_ref: usize) -> Option<bool> {
        self.accepted(query).map(|r| r.contains(&matched_ref))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImageRecord {
    pub index: usize,
    pub filename: String,
    pub path: PathBuf,
    /// `None` when the header could not be read; see [`validate_dataset`].
    pub dimensions: Option<(u32, u32)>,
    pub raw_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub name: String,
    pub query_dir: PathBuf,
    pub reference_dir: PathBuf,
    pub frame_tolerance: usize,
    pub ground_truth: GroundTruth,
    pub queries: Vec<ImageRecord>,
    pub references: Vec<ImageRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    name: String,
    query_dir: PathBuf,
    reference_dir: PathBuf,
    #[serde(default)]
    frame_tolerance: usize,
    #[serde(default)]
    ground_truth: Option<Vec<[usize; 3]>>,
}

/// Parse a manifest file and enumerate both image directories.
///
/// Relative directories are resolved against the manifest's own directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawManifest = serde_json::from_str(&text).map_err(|e| Error::ManifestParse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    DatasetManifest::from_parts(
        path,
        raw.name,
        base.join(raw.query_dir),
        base.join(raw.reference_dir),
        raw.frame_tolerance,
        raw.ground_truth,
    )
}

impl DatasetManifest {
    /// Build a manifest without a JSON file. `origin` is only used for error
    /// context.
    pub fn from_parts(
        origin: &Path,
        name: String,
        query_dir: PathBuf,
        reference_dir: PathBuf,
        frame_tolerance: usize,
        ground_truth: Option<Vec<[usize; 3]>>,
    ) -> Result<Self> {
        let manifest_err = |message: String| Error::Manifest {
            path: origin.to_path_buf(),
            message,
        };
        let queries = enumerate_side(origin, &query_dir, Side::Query)?;
        let references = enumerate_side(origin, &reference_dir, Side::Reference)?;

        let ground_truth = match ground_truth {
            None => GroundTruth::identity(queries.len(), references.len(), frame_tolerance),
            Some(triples) => {
                let mut seen = BTreeMap::new();
                for (i, [q, lo, hi]) in triples.iter().copied().enumerate() {
                    if lo > hi {
                        return Err(manifest_err(format!(
                            "ground_truth[{i}]: empty range [{lo}, {hi}] for query {q}"
                        )));
                    }
                    if q >= queries.len() {
                        return Err(manifest_err(format!(
                            "ground_truth[{i}]: query index {q} out of range ({} queries)",
                            queries.len()
                        )));
                    }
                    if hi >= references.len() {
                        return Err(manifest_err(format!(
                            "ground_truth[{i}]: reference index {hi} out of range ({} references)",
                            references.len()
                        )));
                    }
                    if let Some(prev) = seen.insert(q, i) {
                        return Err(manifest_err(format!(
                            "ground_truth[{i}]: query {q} already listed at ground_truth[{prev}]"
                        )));
                    }
                }
                let entries = triples.into_iter().map(|[q, lo, hi]| GroundTruthEntry {
                    query_index: q,
                    ref_lo: lo,
                    ref_hi: hi,
                });
                GroundTruth::explicit(entries, queries.len(), references.len(), frame_tolerance)?
            }
        };

        Ok(DatasetManifest {
            name,
            query_dir,
            reference_dir,
            frame_tolerance,
            ground_truth,
            queries,
            references,
        })
    }

    /// Override the frame tolerance of the manifest and its ground truth.
    pub fn with_tolerance(mut self, tolerance: usize) -> Self {
        self.frame_tolerance = tolerance;
        self.ground_truth = self.ground_truth.with_tolerance(tolerance);
        self
    }

    pub fn dir(&self, side: Side) -> &Path {
        match side {
            Side::Query => &self.query_dir,
            Side::Reference => &self.reference_dir,
        }
    }

    pub fn images(&self, side: Side) -> &[ImageRecord] {
        match side {
            Side::Query => &self.queries,
            Side::Reference => &self.references,
        }
    }
}

fn enumerate_side(origin: &Path, dir: &Path, side: Side) -> Result<Vec<ImageRecord>> {
    if !dir.is_dir() {
        return Err(Error::Manifest {
            path: origin.to_path_buf(),
            message: format!("{side}_dir {} does not exist", dir.display()),
        });
    }
    let paths = list_images(dir)?;
    let records: Vec<ImageRecord> = paths
        .into_iter()
        .enumerate()
        .map(|(index, path)| {
            let raw_bytes = fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
            let dimensions = image::image_dimensions(&path)
                .ok()
                .filter(|&(w, h)| w > 0 && h > 0);
            ImageRecord {
                index,
                filename: file_name(&path),
                path,
                dimensions,
                raw_bytes,
            }
        })
        .collect();
    if !records.iter().any(|r| r.dimensions.is_some()) {
        return Err(Error::Manifest {
            path: origin.to_path_buf(),
            message: format!("{side}_dir {} contains no decodable image", dir.display()),
        });
    }
    Ok(records)
}

/// Image files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && has_image_extension(p))
        .collect();
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
        .unwrap_or(false)
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Issue {
    Undecodable {
        side: Side,
        filename: String,
        reason: String,
    },
    /// Image size differs from the most common size on its side.
    DimensionMismatch {
        side: Side,
        filename: String,
        expected: (u32, u32),
        found: (u32, u32),
    },
    MissingGroundTruth {
        query_index: usize,
    },
}

impl Issue {
    pub fn severity(&self) -> Severity {
        match self {
            Issue::Undecodable { .. } => Severity::Error,
            Issue::DimensionMismatch { .. } => Severity::Warning,
            Issue::MissingGroundTruth { .. } => Severity::Warning,
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::Undecodable {
                side,
                filename,
                reason,
            } => write!(f, "{side}/{filename}: undecodable ({reason})"),
            Issue::DimensionMismatch {
                side,
                filename,
                expected,
                found,
            } => write!(
                f,
                "{side}/{filename}: {}x{} differs from {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Issue::MissingGroundTruth { query_index } => {
                write!(f, "query {query_index}: no ground truth entry")
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// No error-severity issue. Warnings do not prevent evaluation.
    pub fn is_usable(&self) -> bool {
        self.issues.iter().all(|i| i.severity() != Severity::Error)
    }
}

/// Fully decode every image and check ground-truth coverage.
pub fn validate_dataset(manifest: &DatasetManifest) -> ValidationReport {
    let mut issues = Vec::new();
    for side in Side::BOTH {
        let mut decoded = Vec::new();
        for record in manifest.images(side) {
            match crate::codec::read_image(&record.path) {
                Ok(img) => decoded.push((record.filename.clone(), img.dimensions())),
                Err(e) => issues.push(Issue::Undecodable {
                    side,
                    filename: record.filename.clone(),
                    reason: e.to_string(),
                }),
            }
        }
        if let Some(expected) = most_common(decoded.iter().map(|(_, d)| *d)) {
            for (filename, found) in decoded {
                if found != expected {
                    issues.push(Issue::DimensionMismatch {
                        side,
                        filename,
                        expected,
                        found,
                    });
                }
            }
        }
    }
    for q in 0..manifest.queries.len() {
        if manifest.ground_truth.entry(q).is_none() {
            issues.push(Issue::MissingGroundTruth { query_index: q });
        }
    }
    ValidationReport { issues }
}

fn most_common(items: impl Iterator<Item = (u32, u32)>) -> Option<(u32, u32)> {
    let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for item in items {
        *counts.entry(item).or_default() += 1;
    }
    // Ties resolve to the smallest size so the report is deterministic.
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(size, _)| size)
}
