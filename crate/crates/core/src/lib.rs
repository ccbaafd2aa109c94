//! Benchmark harness for visual place recognition under JPEG compression.
//!
//! The crate is organised as a pipeline of independent stages that talk
//! through plain files:
//!
//! * [`dataset`]: query/reference corpora and ground truth.
//! * [`codec`]: the compression sweep and size accounting.
//! * [`descriptor`]: built-in HOG descriptors and the VPRD interchange
//!   format for descriptors computed elsewhere.
//! * [`matcher`]: cosine similarity and best-match retrieval.
//! * [`metrics`]: accuracy, entropy, degradation curves, non-uniform grids.
//! * [`bandwidth`]: transfer time, budget selection, accuracy/size Pareto.
//! * [`meta`]: run-metadata sidecars written next to every artifact.
//!
//! ```
//! use vpr_jpeg::descriptor::DescriptorVector;
//! use vpr_jpeg::matcher::cosine_similarity;
//!
//! let q = DescriptorVector::new(vec![1.0, 2.0, 2.0]).unwrap();
//! let r = DescriptorVector::new(vec![2.0, 1.0, 2.0]).unwrap();
//! let s = cosine_similarity(&q, &r).unwrap();
//! assert!((s - 8.0 / 9.0).abs() < 1e-6);
//! ```

pub mod bandwidth;
pub mod codec;
pub mod dataset;
pub mod descriptor;
pub mod error;
pub mod matcher;
pub mod meta;
pub mod metrics;

pub use error::{Error, ErrorClass, Result};

/// Run `f` on a dedicated pool of `workers` threads.
pub(crate) fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    Ok(pool.install(f))
}
