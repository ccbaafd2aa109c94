//! Cosine-similarity place matching.
//!
//! Each query descriptor is scored against every reference descriptor and the
//! highest-scoring reference is taken as the matched place. Ties go to the
//! lowest reference index.
//!
//! Descriptor values are `f32`; dot products and squared norms accumulate in
//! `f64` in index order, so a score is reproducible bit for bit regardless of
//! how rows are scheduled across threads.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{DescriptorSet, DescriptorVector, NORM_EPSILON};
use crate::error::{Error, Result};

/// Cosine similarity in `[-1, 1]`; `[0, 1]` for non-negative descriptors.
pub type SimilarityScore = f64;

/// `q . r / (|q| |r|)`, or 0 when either norm is at most [`NORM_EPSILON`].
pub fn cosine_similarity(q: &DescriptorVector, r: &DescriptorVector) -> Result<SimilarityScore> {
    if q.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            left: q.dim(),
            right: r.dim(),
        });
    }
    let (mut dot, mut qq, mut rr) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in q.values().iter().zip(r.values()) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        qq += a * a;
        rr += b * b;
    }
    let (qn, rn) = (qq.sqrt(), rr.sqrt());
    if qn <= NORM_EPSILON || rn <= NORM_EPSILON {
        return Ok(0.0);
    }
    Ok(dot / (qn * rn))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreList {
    pub query_index: usize,
    /// One score per reference, in reference order.
    pub scores: Vec<SimilarityScore>,
}

pub fn score_list(query_index: usize, q: &DescriptorVector, refs: &DescriptorSet) -> Result<ScoreList> {
    if refs.is_empty() {
        return Err(Error::EmptySet);
    }
    let scores = refs
        .descriptors()
        .iter()
        .map(|r| cosine_similarity(q, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreList {
        query_index,
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub query_index: usize,
    pub matched_ref_index: usize,
    pub score: SimilarityScore,
    /// Filled in by [`crate::metrics::accuracy`].
    #[serde(skip)]
    pub correct: Option<bool>,
}

pub fn best_match(list: &ScoreList) -> Result<MatchRecord> {
    let mut iter = list.scores.iter().copied().enumerate();
    let (mut best_index, mut best_score) = iter.next().ok_or(Error::EmptySet)?;
    for (i, s) in iter {
        if s > best_score {
            best_index = i;
            best_score = s;
        }
    }
    Ok(MatchRecord {
        query_index: list.query_index,
        matched_ref_index: best_index,
        score: best_score,
        correct: None,
    })
}

/// Row-major `queries x references` score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<SimilarityScore>,
}

impl SimilarityMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> SimilarityScore {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[SimilarityScore] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn score_list(&self, row: usize) -> ScoreList {
        ScoreList {
            query_index: row,
            scores: self.row(row).to_vec(),
        }
    }
}

/// Row `i` is exactly [`score_list`] of query `i`.
pub fn similarity_matrix(
    queries: &DescriptorSet,
    refs: &DescriptorSet,
    workers: usize,
) -> Result<SimilarityMatrix> {
    if !queries.is_empty() && !refs.is_empty() && queries.dim() != refs.dim() {
        return Err(Error::DimensionMismatch {
            left: queries.dim(),
            right: refs.dim(),
        });
    }
    let rows = crate::with_workers(workers, || {
        queries
            .descriptors()
            .par_iter()
            .enumerate()
            .map(|(i, q)| score_list(i, q, refs).map(|l| l.scores))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(SimilarityMatrix {
        rows: rows.len(),
        cols: refs.len(),
        data: rows.into_iter().flatten().collect(),
    })
}

/// Best reference for every query, in query order.
pub fn match_all(
    queries: &DescriptorSet,
    refs: &DescriptorSet,
    workers: usize,
) -> Result<Vec<MatchRecord>> {
    let matrix = similarity_matrix(queries, refs, workers)?;
    (0..matrix.rows())
        .map(|i| best_match(&matrix.score_list(i)))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct MatchRow {
    query_index: usize,
    matched_ref_index: usize,
    score: String,
}

/// `query_index, matched_ref_index, score` with scores to 9 decimals.
pub fn write_matches_csv(records: &[MatchRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(MatchRow {
            query_index: r.query_index,
            matched_ref_index: r.matched_ref_index,
            score: format!("{:.9}", r.score),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_matches_csv(path: &Path) -> Result<Vec<MatchRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|row| {
            let row: MatchRow = row?;
            let score = row
                .score
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad score {:?}", row.score)))?;
            Ok(MatchRecord {
                query_index: row.query_index,
                matched_ref_index: row.matched_ref_index,
                score,
                correct: None,
            })
        })
        .collect()
}

/// The matrix as a VPRD block: one row per query, `dim` = reference count.
pub fn matrix_as_descriptor_set(
    matrix: &SimilarityMatrix,
    queries: &DescriptorSet,
) -> Result<DescriptorSet> {
    let rows = (0..matrix.rows())
        .map(|i| DescriptorVector::new(matrix.row(i).iter().map(|&s| s as f32).collect()))
        .collect::<Result<Vec<_>>>()?;
    DescriptorSet::new(
        "similarity",
        None,
        rows,
        queries.filenames().to_vec(),
    )
}
