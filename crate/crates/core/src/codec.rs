//! JPEG compression sweep.
//!
//! Compression is expressed as a percentage `p` in `[0, 99]` and mapped to
//! encoder quality `100 - p`. Chroma is subsampled 4:2:0 from `p >= 90` and
//! kept at 4:4:4 below that. Encoding is baseline sequential JPEG with the
//! standard Annex K tables scaled by quality; the encoder build is pinned
//! because byte counts are part of the results.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{GrayImage, RgbImage};
use jpeg_encoder::{ColorType, Encoder, SamplingFactor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, Side};
use crate::error::{Error, Result};

/// Name and version of the JPEG encoder behind [`compress_image`].
pub const ENCODER: &str = "jpeg-encoder 0.6.1";

/// First percent at which chroma is subsampled 4:2:0.
pub const SUBSAMPLING_THRESHOLD: u8 = 90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct CompressionLevel(u8);

/// 0%, 50%, 80%, 90%, 95% and 97%.
pub const DEFAULT_LEVELS: [CompressionLevel; 6] = [
    CompressionLevel(0),
    CompressionLevel(50),
    CompressionLevel(80),
    CompressionLevel(90),
    CompressionLevel(95),
    CompressionLevel(97),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChromaSubsampling {
    /// Full-resolution chroma.
    None444,
    /// Chroma halved in both directions.
    Half420,
}

impl CompressionLevel {
    pub const MAX_PERCENT: u8 = 99;

    pub fn new(percent: u8) -> Result<Self> {
        if percent > Self::MAX_PERCENT {
            return Err(Error::InvalidLevel(percent.into()));
        }
        Ok(CompressionLevel(percent))
    }

    pub fn percent(self) -> u8 {
        self.0
    }

    /// Quality on the 1..=100 encoder scale: `100 - percent`.
    pub fn encoder_quality(self) -> u8 {
        100 - self.0
    }

    pub fn subsampling(self) -> ChromaSubsampling {
        if self.0 >= SUBSAMPLING_THRESHOLD {
            ChromaSubsampling::Half420
        } else {
            ChromaSubsampling::None444
        }
    }
}

impl TryFrom<u8> for CompressionLevel {
    type Error = Error;

    fn try_from(percent: u8) -> Result<Self> {
        CompressionLevel::new(percent)
    }
}

impl From<CompressionLevel> for u8 {
    fn from(level: CompressionLevel) -> u8 {
        level.0
    }
}

impl fmt::Display for CompressionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.0)
    }
}

impl FromStr for CompressionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_end_matches('%');
        let value: i64 = s
            .parse()
            .map_err(|_| Error::InvalidParams(format!("not a compression percent: {s:?}")))?;
        u8::try_from(value)
            .map_err(|_| Error::InvalidLevel(value))
            .and_then(CompressionLevel::new)
    }
}

/// Parse a comma-separated level list into a sorted, deduplicated set.
pub fn parse_levels(list: &str) -> Result<Vec<CompressionLevel>> {
    let levels: BTreeSet<CompressionLevel> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if levels.is_empty() {
        return Err(Error::InvalidParams("empty level list".into()));
    }
    Ok(levels.into_iter().collect())
}

/// Encode `image` as a baseline JPEG at `level`.
pub fn compress_image(image: &RgbImage, level: CompressionLevel) -> Result<Vec<u8>> {
    let (width, height) = image.dimensions();
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    let (w, h) = match (u16::try_from(width), u16::try_from(height)) {
        (Ok(w), Ok(h)) => (w, h),
        _ => return Err(Error::ImageTooLarge { width, height }),
    };
    let mut out = Vec::with_capacity(image.as_raw().len() / 4);
    let mut encoder = Encoder::new(&mut out, level.encoder_quality());
    encoder.set_sampling_factor(match level.subsampling() {
        ChromaSubsampling::None444 => SamplingFactor::F_1_1,
        ChromaSubsampling::Half420 => SamplingFactor::F_2_2,
    });
    encoder
        .encode(image.as_raw(), w, h, ColorType::Rgb)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out)
}

/// Decode a JPEG or PNG stream to 8-bit RGB.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    let format = image::guess_format(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    match format {
        image::ImageFormat::Jpeg if !has_final_eoi(bytes) => {
            return Err(Error::Decode("truncated JPEG stream: no EOI after last scan".into()));
        }
        image::ImageFormat::Jpeg | image::ImageFormat::Png => {}
        other => return Err(Error::Decode(format!("unsupported format {other:?}"))),
    }
    image::load_from_memory_with_format(bytes, format)
        .map(|img| img.to_rgb8())
        .map_err(|e| Error::Decode(e.to_string()))
}

/// An EOI marker (`FF D9`) must follow the last start-of-scan (`FF DA`).
/// Entropy-coded data byte-stuffs `FF`, so the pair cannot occur inside a
/// scan.
fn has_final_eoi(bytes: &[u8]) -> bool {
    let last_sos = bytes.windows(2).rposition(|w| w == [0xFF, 0xDA]);
    match last_sos {
        None => false,
        Some(pos) => bytes[pos..].windows(2).any(|w| w == [0xFF, 0xD9]),
    }
}

pub fn read_image(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Decode(msg) => Error::Decode(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// BT.601 luma, `Y = 0.299 R + 0.587 G + 0.114 B`, rounded half up.
///
/// Integer arithmetic keeps `luma(rgb + c) == luma(rgb) + c` exact.
pub fn luma(image: &RgbImage) -> GrayImage {
    let (w, h) = image.dimensions();
    let data = image
        .as_raw()
        .chunks_exact(3)
        .map(|p| luma_of(p[0], p[1], p[2]))
        .collect();
    GrayImage::from_raw(w, h, data).expect("buffer length matches dimensions")
}

#[inline]
pub fn luma_of(r: u8, g: u8, b: u8) -> u8 {
    let y = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((y + 500) / 1000) as u8
}

/// Peak signal-to-noise ratio over all RGB samples, in dB. Infinite for
/// identical images.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch {
            left: a.as_raw().len(),
            right: b.as_raw().len(),
        });
    }
    let sse: f64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    let mse = sse / a.as_raw().len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub side: Side,
    pub image_index: usize,
    /// Path relative to the level directory, e.g. `query/0001.jpg`.
    pub filename: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSizes {
    pub level: CompressionLevel,
    pub total_bytes: u64,
    pub mean_bytes: f64,
    pub images: Vec<ImageSize>,
}

impl LevelSizes {
    fn from_images(level: CompressionLevel, images: Vec<ImageSize>) -> Self {
        let total_bytes = images.iter().map(|i| i.bytes).sum();
        let mean_bytes = if images.is_empty() {
            0.0
        } else {
            total_bytes as f64 / images.len() as f64
        };
        LevelSizes {
            level,
            total_bytes,
            mean_bytes,
            images,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeFailure {
    pub side: Side,
    pub image_index: usize,
    pub filename: String,
    pub level: Option<CompressionLevel>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionSweepResult {
    pub dataset: String,
    pub encoder: String,
    /// Ascending by percent.
    pub levels: Vec<LevelSizes>,
    pub failures: Vec<EncodeFailure>,
}

impl CompressionSweepResult {
    pub fn level(&self, level: CompressionLevel) -> Option<&LevelSizes> {
        self.levels.iter().find(|l| l.level == level)
    }

    pub fn totals(&self) -> impl Iterator<Item = (CompressionLevel, u64)> + '_ {
        self.levels.iter().map(|l| (l.level, l.total_bytes))
    }
}

/// Directory holding one side of the corpus compressed at `level`.
pub fn corpus_dir(root: &Path, level: CompressionLevel, side: Side) -> PathBuf {
    root.join(level.percent().to_string()).join(side.as_str())
}

fn output_name(filename: &str) -> String {
    let stem = Path::new(filename)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!("{stem}.jpg")
}

/// Compress both sides of `manifest` at every level.
///
/// Writes `out_dir/<percent>/{query,reference}/<basename>.jpg`. Per-image
/// failures are collected in the result rather than aborting the sweep.
pub fn sweep_compress(
    manifest: &DatasetManifest,
    levels: &[CompressionLevel],
    out_dir: &Path,
    workers: usize,
) -> Result<CompressionSweepResult> {
    if levels.is_empty() {
        return Err(Error::InvalidParams("no compression levels given".into()));
    }
    let levels: Vec<CompressionLevel> = levels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    for side in Side::BOTH {
        let mut seen = BTreeSet::new();
        for record in manifest.images(side) {
            let name = output_name(&record.filename);
            if !seen.insert(name.clone()) {
                return Err(Error::Manifest {
                    path: manifest.dir(side).to_path_buf(),
                    message: format!("two {side} images map to the same output name {name}"),
                });
            }
        }
        for &level in &levels {
            let dir = corpus_dir(out_dir, level, side);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
    }

    // (side, index, filename, per-level outcome)
    type Outcome = (Side, usize, String, Vec<Result<u64, (Option<CompressionLevel>, String)>>);
    let jobs: Vec<(Side, &crate::dataset::ImageRecord)> = Side::BOTH
        .iter()
        .flat_map(|&side| manifest.images(side).iter().map(move |r| (side, r)))
        .collect();

    let outcomes: Vec<Outcome> = crate::with_workers(workers, || {
        jobs.par_iter()
            .map(|&(side, record)| {
                let name = output_name(&record.filename);
                let per_level = match read_image(&record.path) {
                    Err(e) => vec![Err((None, e.to_string())); levels.len()],
                    Ok(img) => levels
                        .iter()
                        .map(|&level| {
                            let bytes =
                                compress_image(&img, level).map_err(|e| (Some(level), e.to_string()))?;
                            let path = corpus_dir(out_dir, level, side).join(&name);
                            fs::write(&path, &bytes)
                                .map_err(|e| (Some(level), format!("{}: {e}", path.display())))?;
                            Ok(bytes.len() as u64)
                        })
                        .collect(),
                };
                (side, record.index, name, per_level)
            })
            .collect()
    })?;

    let mut failures = Vec::new();
    let mut per_level: Vec<Vec<ImageSize>> = vec![Vec::new(); levels.len()];
    for (side, image_index, name, results) in outcomes {
        let filename = format!("{side}/{name}");
        let mut reported_read_failure = false;
        for (slot, result) in results.into_iter().enumerate() {
            match result {
                Ok(bytes) => per_level[slot].push(ImageSize {
                    side,
                    image_index,
                    filename: filename.clone(),
                    bytes,
                }),
                Err((level, reason)) => {
                    if level.is_none() {
                        if reported_read_failure {
                            continue;
                        }
                        reported_read_failure = true;
                    }
                    failures.push(EncodeFailure {
                        side,
                        image_index,
                        filename: filename.clone(),
                        level,
                        reason,
                    });
                }
            }
        }
    }

    Ok(CompressionSweepResult {
        dataset: manifest.name.clone(),
        encoder: ENCODER.to_string(),
        levels: levels
            .into_iter()
            .zip(per_level)
            .map(|(level, images)| LevelSizes::from_images(level, images))
            .collect(),
        failures,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SizeRow {
    dataset: String,
    percent: u8,
    image_index: usize,
    filename: String,
    bytes: u64,
}

/// `dataset, percent, image_index, filename, bytes`, one row per image and
/// level, ordered by level then by input order.
pub fn write_sizes_csv(result: &CompressionSweepResult, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for level in &result.levels {
        for image in &level.images {
            writer.serialize(SizeRow {
                dataset: result.dataset.clone(),
                percent: level.level.percent(),
                image_index: image.image_index,
                filename: image.filename.clone(),
                bytes: image.bytes,
            })?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a sizes CSV back into per-level accounting. Failures are not part of
/// the CSV and come back empty.
pub fn read_sizes_csv(path: &Path) -> Result<CompressionSweepResult> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut dataset = None;
    let mut levels: std::collections::BTreeMap<CompressionLevel, Vec<ImageSize>> =
        Default::default();
    for row in reader.deserialize() {
        let row: SizeRow = row?;
        let level = CompressionLevel::new(row.percent)?;
        let side = if row.filename.starts_with("reference/") {
            Side::Reference
        } else {
            Side::Query
        };
        dataset.get_or_insert(row.dataset);
        levels.entry(level).or_default().push(ImageSize {
            side,
            image_index: row.image_index,
            filename: row.filename,
            bytes: row.bytes,
        });
    }
    if levels.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(CompressionSweepResult {
        dataset: dataset.unwrap_or_default(),
        encoder: ENCODER.to_string(),
        levels: levels
            .into_iter()
            .map(|(level, images)| LevelSizes::from_images(level, images))
            .collect(),
        failures: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn textured(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let v = ((x * 7 + y * 13) % 255) as u8;
            Rgb([v, v.wrapping_mul(3), (x ^ y) as u8])
        })
    }

    #[test]
    fn level_maps_to_quality() {
        assert_eq!(CompressionLevel::new(0).unwrap().encoder_quality(), 100);
        assert_eq!(CompressionLevel::new(97).unwrap().encoder_quality(), 3);
        assert_eq!(CompressionLevel::new(99).unwrap().encoder_quality(), 1);
        assert!(CompressionLevel::new(100).is_err());
    }

    #[test]
    fn subsampling_switches_at_ninety() {
        let s = |p| CompressionLevel::new(p).unwrap().subsampling();
        assert_eq!(s(89), ChromaSubsampling::None444);
        assert_eq!(s(90), ChromaSubsampling::Half420);
        assert_eq!(s(97), ChromaSubsampling::Half420);
    }

    #[test]
    fn parse_levels_sorts_and_dedups() {
        let got: Vec<u8> = parse_levels("97, 0,50,0")
            .unwrap()
            .into_iter()
            .map(u8::from)
            .collect();
        assert_eq!(got, vec![0, 50, 97]);
        assert!(matches!(parse_levels("0,100"), Err(Error::InvalidLevel(100))));
        assert!(parse_levels("-1").is_err());
        assert!(parse_levels("").is_err());
    }

    #[test]
    fn stream_has_soi_and_eoi_markers() {
        let img = textured(33, 17);
        for level in DEFAULT_LEVELS {
            let bytes = compress_image(&img, level).unwrap();
            assert_eq!(&bytes[..2], &[0xFF, 0xD8]);
            assert_eq!(&bytes[bytes.len() - 2..], &[0xFF, 0xD9]);
        }
    }

    #[test]
    fn round_trip_keeps_dimensions() {
        let img = textured(45, 31);
        for p in [0, 50, 97] {
            let bytes = compress_image(&img, CompressionLevel::new(p).unwrap()).unwrap();
            assert_eq!(decode_image(&bytes).unwrap().dimensions(), (45, 31));
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let img = textured(64, 48);
        let level = CompressionLevel::new(80).unwrap();
        assert_eq!(
            compress_image(&img, level).unwrap(),
            compress_image(&img, level).unwrap()
        );
    }

    #[test]
    fn empty_image_is_rejected() {
        let img = RgbImage::new(0, 5);
        assert!(matches!(
            compress_image(&img, DEFAULT_LEVELS[0]),
            Err(Error::EmptyImage)
        ));
    }

    #[test]
    fn truncated_stream_fails_to_decode() {
        let bytes = compress_image(&textured(64, 64), DEFAULT_LEVELS[1]).unwrap();
        assert!(decode_image(&bytes[..bytes.len() / 2]).is_err());
        assert!(decode_image(b"definitely not an image").is_err());
    }

    // Measured over every gray value with this encoder/decoder pair: at
    // quality 3 the luma DC step is 255, so a flat frame lands within 16
    // levels of its source (worst case at value 16).
    const FLAT_GRAY_Q3_BOUND: i32 = 16;

    #[test]
    fn flat_gray_survives_extreme_compression() {
        for v in 0..=255u8 {
            let img = RgbImage::from_pixel(64, 64, Rgb([v, v, v]));
            let bytes = compress_image(&img, CompressionLevel::new(97).unwrap()).unwrap();
            let back = decode_image(&bytes).unwrap();
            let max_dev = img
                .as_raw()
                .iter()
                .zip(back.as_raw())
                .map(|(&a, &b)| (a as i32 - b as i32).abs())
                .max()
                .unwrap();
            assert!(max_dev <= FLAT_GRAY_Q3_BOUND, "value {v}: deviation {max_dev}");
        }
    }

    #[test]
    fn luma_uses_bt601_weights() {
        assert_eq!(luma_of(255, 255, 255), 255);
        assert_eq!(luma_of(0, 0, 0), 0);
        assert_eq!(luma_of(255, 0, 0), 76); // 76.245
        assert_eq!(luma_of(0, 255, 0), 150); // 149.685
        assert_eq!(luma_of(0, 0, 255), 29); // 29.07
        assert_eq!(luma_of(10, 20, 30), 18); // 18.15
    }

    #[test]
    fn psnr_of_identical_images_is_infinite() {
        let img = textured(8, 8);
        assert_eq!(psnr(&img, &img).unwrap(), f64::INFINITY);
    }
}
