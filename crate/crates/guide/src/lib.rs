//! Runs the code blocks of the mdbook guide in `book/` as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/compression.md")]
pub mod compression {}
#[doc = include_str!("../../../book/src/hog.md")]
pub mod hog {}
#[doc = include_str!("../../../book/src/vprd.md")]
pub mod vprd {}
#[doc = include_str!("../../../book/src/matching.md")]
pub mod matching {}
#[doc = include_str!("../../../book/src/accuracy.md")]
pub mod accuracy {}
#[doc = include_str!("../../../book/src/bandwidth.md")]
pub mod bandwidth {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
