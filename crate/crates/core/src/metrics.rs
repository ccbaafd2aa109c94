//! Accuracy, image entropy, degradation curves and non-uniform grids.
//!
//! Accuracy is the number of correctly matched queries divided by the number
//! of *reference* images, `N_c / N_r`. When the reference map is larger than
//! the query set this caps below 1, so every result also carries the
//! per-query rate `N_c / N_q`.

use std::collections::BTreeMap;
use std::path::Path;

use image::{GrayImage, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{corpus_dir, luma, read_image, CompressionLevel};
use crate::dataset::{file_name, list_images, GroundTruth, Side};
use crate::descriptor::DescriptorSet;
use crate::error::{Error, Result};
use crate::matcher::{match_all, MatchRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCount {
    pub n_c: usize,
    pub n_r: usize,
    pub n_q: usize,
    /// `n_c / n_r`.
    pub accuracy: f64,
    /// `n_c / n_q`, 0 when there are no queries.
    pub accuracy_per_query: f64,
    pub records: Vec<MatchRecord>,
}

/// Mark each record correct or not and count.
pub fn accuracy(records: &[MatchRecord], gt: &GroundTruth, n_r: usize) -> Result<AccuracyCount> {
    if n_r == 0 {
        return Err(Error::InvalidParams("reference count must be positive".into()));
    }
    let records = records
        .iter()
        .map(|r| {
            let correct = gt
                .is_correct(r.query_index, r.matched_ref_index)
                .ok_or(Error::MissingGroundTruth(r.query_index))?;
            Ok(MatchRecord {
                correct: Some(correct),
                ..*r
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n_c = records.iter().filter(|r| r.correct == Some(true)).count();
    let n_q = records.len();
    Ok(AccuracyCount {
        n_c,
        n_r,
        n_q,
        accuracy: n_c as f64 / n_r as f64,
        accuracy_per_query: if n_q == 0 { 0.0 } else { n_c as f64 / n_q as f64 },
        records,
    })
}

/// One (technique, query level, reference level) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub technique: String,
    pub dataset: String,
    pub query_level: CompressionLevel,
    pub ref_level: CompressionLevel,
    #[serde(flatten)]
    pub count: AccuracyCount,
}

impl EvaluationResult {
    pub fn accuracy(&self) -> f64 {
        self.count.accuracy
    }

    pub fn row(&self) -> ResultRow {
        ResultRow {
            technique: self.technique.clone(),
            dataset: self.dataset.clone(),
            q_level: self.query_level.percent(),
            r_level: self.ref_level.percent(),
            n_c: self.count.n_c,
            n_r: self.count.n_r,
            n_q: self.count.n_q,
            accuracy: self.count.accuracy,
            accuracy_per_query: self.count.accuracy_per_query,
        }
    }
}

/// Match `queries` against `refs` and score the result.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    technique: &str,
    dataset: &str,
    queries: &DescriptorSet,
    refs: &DescriptorSet,
    gt: &GroundTruth,
    query_level: CompressionLevel,
    ref_level: CompressionLevel,
    workers: usize,
) -> Result<EvaluationResult> {
    if refs.len() != gt.ref_count() || queries.len() != gt.query_count() {
        return Err(Error::InvalidParams(format!(
            "descriptor sets have {} queries / {} references, ground truth expects {} / {}",
            queries.len(),
            refs.len(),
            gt.query_count(),
            gt.ref_count()
        )));
    }
    let records = match_all(queries, refs, workers)?;
    Ok(EvaluationResult {
        technique: technique.to_string(),
        dataset: dataset.to_string(),
        query_level,
        ref_level,
        count: accuracy(&records, gt, refs.len())?,
    })
}

/// Shannon entropy in bits of the 256-bin histogram of `gray`.
pub fn gray_entropy(gray: &GrayImage) -> f64 {
    let mut hist = [0u64; 256];
    for &v in gray.as_raw() {
        hist[v as usize] += 1;
    }
    let n = gray.as_raw().len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Entropy of the BT.601 luma of `image`.
pub fn image_entropy(image: &RgbImage) -> f64 {
    gray_entropy(&luma(image))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub dataset: String,
    pub level: CompressionLevel,
    pub per_image: Vec<(String, f64)>,
    pub mean: f64,
}

/// Mean query-image entropy of the corpus compressed at `level` under
/// `corpus_root` (as laid out by [`crate::codec::sweep_compress`]).
pub fn average_entropy(
    dataset: &str,
    corpus_root: &Path,
    level: CompressionLevel,
    workers: usize,
) -> Result<EntropyReport> {
    average_entropy_dir(dataset, &corpus_dir(corpus_root, level, Side::Query), level, workers)
}

pub fn average_entropy_dir(
    dataset: &str,
    dir: &Path,
    level: CompressionLevel,
    workers: usize,
) -> Result<EntropyReport> {
    if !dir.is_dir() {
        return Err(Error::MissingCorpus(dir.to_path_buf()));
    }
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::MissingCorpus(dir.to_path_buf()));
    }
    let per_image = crate::with_workers(workers, || {
        paths
            .par_iter()
            .map(|p| read_image(p).map(|img| (file_name(p), image_entropy(&img))))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(entropy_report(dataset, level, per_image))
}

pub fn entropy_report(dataset: &str, level: CompressionLevel, per_image: Vec<(String, f64)>) -> EntropyReport {
    let mean = if per_image.is_empty() {
        0.0
    } else {
        per_image.iter().map(|(_, e)| e).sum::<f64>() / per_image.len() as f64
    };
    EntropyReport {
        dataset: dataset.to_string(),
        level,
        per_image,
        mean,
    }
}

/// Query and reference descriptors computed from one compression level.
#[derive(Debug, Clone)]
pub struct LevelSets {
    pub query: DescriptorSet,
    pub reference: DescriptorSet,
}

pub type DescriptorsByLevel = BTreeMap<CompressionLevel, LevelSets>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationCurve {
    pub technique: String,
    pub dataset: String,
    /// `(level, accuracy)`, ascending by level.
    pub points: Vec<(CompressionLevel, f64)>,
    pub results: Vec<EvaluationResult>,
}

/// Uniform protocol: queries and references compressed at the same level.
pub fn degradation_curve(
    technique: &str,
    dataset: &str,
    gt: &GroundTruth,
    sets: &DescriptorsByLevel,
    levels: &[CompressionLevel],
    workers: usize,
) -> Result<DegradationCurve> {
    let mut levels = levels.to_vec();
    levels.sort();
    levels.dedup();
    let results = levels
        .iter()
        .map(|&level| {
            let s = sets.get(&level).ok_or(Error::MissingLevel(level.percent()))?;
            evaluate(technique, dataset, &s.query, &s.reference, gt, level, level, workers)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DegradationCurve {
        technique: technique.to_string(),
        dataset: dataset.to_string(),
        points: results.iter().map(|r| (r.query_level, r.accuracy())).collect(),
        results,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonUniformGrid {
    pub technique: String,
    pub dataset: String,
    pub cells: BTreeMap<(CompressionLevel, CompressionLevel), EvaluationResult>,
}

impl NonUniformGrid {
    pub fn accuracy(&self, query_level: CompressionLevel, ref_level: CompressionLevel) -> Option<f64> {
        self.cells.get(&(query_level, ref_level)).map(EvaluationResult::accuracy)
    }
}

/// Every `(a, b)` in `q_levels x r_levels`: queries at `a`, references at `b`.
pub fn nonuniform_grid(
    technique: &str,
    dataset: &str,
    gt: &GroundTruth,
    sets: &DescriptorsByLevel,
    q_levels: &[CompressionLevel],
    r_levels: &[CompressionLevel],
    workers: usize,
) -> Result<NonUniformGrid> {
    let mut cells = BTreeMap::new();
    for &a in q_levels {
        let q = sets.get(&a).ok_or(Error::MissingLevel(a.percent()))?;
        for &b in r_levels {
            let r = sets.get(&b).ok_or(Error::MissingLevel(b.percent()))?;
            let result = evaluate(technique, dataset, &q.query, &r.reference, gt, a, b, workers)?;
            cells.insert((a, b), result);
        }
    }
    Ok(NonUniformGrid {
        technique: technique.to_string(),
        dataset: dataset.to_string(),
        cells,
    })
}

/// One line of the long-format results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub technique: String,
    pub dataset: String,
    pub q_level: u8,
    pub r_level: u8,
    #[serde(rename = "N_c")]
    pub n_c: usize,
    #[serde(rename = "N_r")]
    pub n_r: usize,
    #[serde(rename = "N_q")]
    pub n_q: usize,
    pub accuracy: f64,
    pub accuracy_per_query: f64,
}

pub fn curve_rows(curve: &DegradationCurve) -> Vec<ResultRow> {
    curve.results.iter().map(EvaluationResult::row).collect()
}

pub fn grid_rows(grid: &NonUniformGrid) -> Vec<ResultRow> {
    grid.cells.values().map(EvaluationResult::row).collect()
}

pub fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_results_json(rows: &[ResultRow], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(rows)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
