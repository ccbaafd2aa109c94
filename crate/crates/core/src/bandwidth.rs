//! Transmission feasibility of compressed corpora over a fixed-rate link.
//!
//! The channel is a pipe of constant byte rate with a multiplicative protocol
//! overhead. No loss, latency or contention is modelled.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{CompressionLevel, CompressionSweepResult};
use crate::error::{Error, Result};
use crate::metrics::DegradationCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    rate: f64,
    overhead_fraction: f64,
}

impl ChannelModel {
    /// `rate` in bytes per second (> 0), overhead in `[0, 1]`.
    pub fn new(rate: f64, overhead_fraction: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParams(format!("channel rate must be positive, got {rate}")));
        }
        if !(0.0..=1.0).contains(&overhead_fraction) {
            return Err(Error::InvalidParams(format!(
                "overhead fraction must be in [0, 1], got {overhead_fraction}"
            )));
        }
        Ok(ChannelModel {
            rate,
            overhead_fraction,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn overhead_fraction(&self) -> f64 {
        self.overhead_fraction
    }
}

/// `bytes * (1 + overhead) / rate`.
pub fn transfer_time(bytes: u64, channel: &ChannelModel) -> f64 {
    bytes as f64 * (1.0 + channel.overhead_fraction) / channel.rate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPlan {
    pub level: CompressionLevel,
    pub total_bytes: u64,
    pub transfer_seconds: f64,
    /// Frames per second the link sustains at the level's mean frame size.
    pub frames_per_second: f64,
    pub accuracy: Option<f64>,
}

pub fn plan(
    sweep: &CompressionSweepResult,
    level: CompressionLevel,
    channel: &ChannelModel,
    curve: Option<&DegradationCurve>,
) -> Result<TransmissionPlan> {
    let sizes = sweep
        .level(level)
        .ok_or(Error::MissingLevel(level.percent()))?;
    let per_frame = sizes.mean_bytes * (1.0 + channel.overhead_fraction) / channel.rate;
    Ok(TransmissionPlan {
        level,
        total_bytes: sizes.total_bytes,
        transfer_seconds: transfer_time(sizes.total_bytes, channel),
        frames_per_second: if per_frame > 0.0 { 1.0 / per_frame } else { f64::INFINITY },
        accuracy: curve.and_then(|c| {
            c.points
                .iter()
                .find(|(l, _)| *l == level)
                .map(|(_, a)| *a)
        }),
    })
}

/// Least compression whose corpus total fits in `budget` bytes, or `None`
/// when no level fits.
pub fn min_compression_for_budget(
    sweep: &CompressionSweepResult,
    budget: u64,
) -> Option<CompressionLevel> {
    sweep
        .totals()
        .filter(|&(_, total)| total <= budget)
        .map(|(level, _)| level)
        .min()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub level: CompressionLevel,
    pub bytes: u64,
    pub accuracy: f64,
    pub pareto_optimal: bool,
}

/// Flag every level not dominated by another level with both strictly fewer
/// bytes and strictly higher accuracy.
pub fn accuracy_bytes_pareto(
    curve: &DegradationCurve,
    sweep: &CompressionSweepResult,
) -> Result<Vec<ParetoPoint>> {
    let sizes: BTreeMap<CompressionLevel, u64> = sweep.totals().collect();
    let accs: BTreeMap<CompressionLevel, f64> = curve.points.iter().copied().collect();
    if !sizes.keys().eq(accs.keys()) {
        let fmt = |ks: Vec<&CompressionLevel>| {
            ks.iter().map(|l| l.percent().to_string()).collect::<Vec<_>>().join(",")
        };
        return Err(Error::LevelMismatch(format!(
            "sweep has {{{}}}, curve has {{{}}}",
            fmt(sizes.keys().collect()),
            fmt(accs.keys().collect())
        )));
    }
    Ok(pareto_front(
        sizes
            .into_iter()
            .map(|(level, bytes)| (level, bytes, accs[&level])),
    ))
}

/// Sort by bytes and sweep once, keeping the best accuracy seen among
/// strictly cheaper points.
pub fn pareto_front(
    points: impl IntoIterator<Item = (CompressionLevel, u64, f64)>,
) -> Vec<ParetoPoint> {
    let mut points: Vec<ParetoPoint> = points
        .into_iter()
        .map(|(level, bytes, accuracy)| ParetoPoint {
            level,
            bytes,
            accuracy,
            pareto_optimal: true,
        })
        .collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| points[i].bytes);

    let mut best_cheaper = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        // Points of equal size cannot dominate each other.
        let mut j = i;
        while j < order.len() && points[order[j]].bytes == points[order[i]].bytes {
            j += 1;
        }
        for &k in &order[i..j] {
            points[k].pareto_optimal = points[k].accuracy >= best_cheaper;
        }
        for &k in &order[i..j] {
            best_cheaper = best_cheaper.max(points[k].accuracy);
        }
        i = j;
    }
    points
}

pub fn write_pareto_csv(points: &[ParetoPoint], path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        percent: u8,
        bytes: u64,
        accuracy: f64,
        pareto_optimal: bool,
    }
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(Row {
            percent: p.level.percent(),
            bytes: p.bytes,
            accuracy: p.accuracy,
            pareto_optimal: p.pareto_optimal,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{ImageSize, LevelSizes, DEFAULT_LEVELS};
    use crate::dataset::Side;

    fn sweep_from_totals(totals: &[(u8, u64)]) -> CompressionSweepResult {
        CompressionSweepResult {
            dataset: "t".into(),
            encoder: "test".into(),
            levels: totals
                .iter()
                .map(|&(p, bytes)| LevelSizes {
                    level: CompressionLevel::new(p).unwrap(),
                    total_bytes: bytes,
                    mean_bytes: bytes as f64,
                    images: vec![ImageSize {
                        side: Side::Query,
                        image_index: 0,
                        filename: "query/a.jpg".into(),
                        bytes,
                    }],
                })
                .collect(),
            failures: vec![],
        }
    }

    // Campus Loop corpus sizes per level, in bytes (1 MB = 10^6 B).
    fn campus_loop() -> CompressionSweepResult {
        sweep_from_totals(&[
            (0, 46_800_000),
            (50, 9_000_000),
            (80, 4_600_000),
            (90, 2_600_000),
            (95, 1_500_000),
            (97, 1_000_000),
        ])
    }

    fn curve(points: &[(u8, f64)]) -> DegradationCurve {
        DegradationCurve {
            technique: "t".into(),
            dataset: "d".into(),
            points: points
                .iter()
                .map(|&(p, a)| (CompressionLevel::new(p).unwrap(), a))
                .collect(),
            results: vec![],
        }
    }

    #[test]
    fn transfer_time_examples() {
        let ch = ChannelModel::new(1_000_000.0, 0.0).unwrap();
        assert_eq!(transfer_time(1_000_000, &ch), 1.0);
        assert_eq!(transfer_time(0, &ch), 0.0);
        let ch = ChannelModel::new(1_000_000.0, 0.1).unwrap();
        assert!((transfer_time(1_000_000, &ch) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn transfer_time_is_linear_in_bytes_and_inverse_in_rate() {
        let base = ChannelModel::new(125_000.0, 0.05).unwrap();
        let t1 = transfer_time(10_000, &base);
        for k in [2u64, 7, 1000] {
            assert!((transfer_time(10_000 * k, &base) - k as f64 * t1).abs() < 1e-9 * k as f64);
            let faster = ChannelModel::new(125_000.0 * k as f64, 0.05).unwrap();
            assert!((transfer_time(10_000, &faster) - t1 / k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_rejects_bad_values() {
        assert!(ChannelModel::new(0.0, 0.0).is_err());
        assert!(ChannelModel::new(-5.0, 0.0).is_err());
        assert!(ChannelModel::new(1.0, 1.5).is_err());
        assert!(ChannelModel::new(1.0, -0.1).is_err());
        assert!(ChannelModel::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn five_megabytes_selects_eighty_percent() {
        let got = min_compression_for_budget(&campus_loop(), 5_000_000).unwrap();
        assert_eq!(got.percent(), 80);
    }

    #[test]
    fn generous_budget_selects_zero_and_zero_budget_selects_none() {
        assert_eq!(
            min_compression_for_budget(&campus_loop(), 100_000_000).map(u8::from),
            Some(0)
        );
        assert_eq!(min_compression_for_budget(&campus_loop(), 0), None);
        assert_eq!(min_compression_for_budget(&campus_loop(), 999_999), None);
    }

    #[test]
    fn plan_reports_accuracy_from_curve() {
        let sweep = campus_loop();
        let ch = ChannelModel::new(125_000.0, 0.0).unwrap();
        let c = curve(&[(0, 0.9), (50, 0.8), (80, 0.7), (90, 0.6), (95, 0.5), (97, 0.4)]);
        let p = plan(&sweep, DEFAULT_LEVELS[2], &ch, Some(&c)).unwrap();
        assert_eq!(p.total_bytes, 4_600_000);
        assert!((p.transfer_seconds - 36.8).abs() < 1e-9);
        assert_eq!(p.accuracy, Some(0.7));
        assert!((p.frames_per_second - 125_000.0 / 4_600_000.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_trade_off_is_all_pareto() {
        let c = curve(&[(0, 0.9), (50, 0.8), (80, 0.7), (90, 0.6), (95, 0.5), (97, 0.4)]);
        let pts = accuracy_bytes_pareto(&c, &campus_loop()).unwrap();
        assert!(pts.iter().all(|p| p.pareto_optimal));
    }

    #[test]
    fn larger_and_worse_level_is_dominated() {
        // 50% is bigger than 80% yet less accurate.
        let c = curve(&[(0, 0.9), (50, 0.6), (80, 0.7), (90, 0.6), (95, 0.5), (97, 0.4)]);
        let pts = accuracy_bytes_pareto(&c, &campus_loop()).unwrap();
        let flags: Vec<(u8, bool)> = pts.iter().map(|p| (p.level.percent(), p.pareto_optimal)).collect();
        assert_eq!(flags, vec![(0, true), (50, false), (80, true), (90, true), (95, true), (97, true)]);
    }

    #[test]
    fn level_set_mismatch_is_an_error() {
        let c = curve(&[(0, 0.9), (97, 0.4)]);
        assert!(matches!(
            accuracy_bytes_pareto(&c, &campus_loop()),
            Err(Error::LevelMismatch(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn budget_selection_is_monotone(
            totals in proptest::collection::vec(1u64..1_000_000, 6),
            a in 0u64..2_000_000,
            b in 0u64..2_000_000,
        ) {
            let levels = [0u8, 50, 80, 90, 95, 97];
            let sweep = sweep_from_totals(&levels.iter().copied().zip(totals).collect::<Vec<_>>());
            let (small, large) = (a.min(b), a.max(b));
            let s = min_compression_for_budget(&sweep, small);
            let l = min_compression_for_budget(&sweep, large);
            if let Some(s) = s {
                let l = l.expect("a larger budget fits whatever a smaller one does");
                proptest::prop_assert!(l <= s);
            }
        }

        #[test]
        fn pareto_matches_pairwise_oracle(
            pts in proptest::collection::vec((0u64..20, 0u8..10), 1..40)
        ) {
            let input: Vec<(CompressionLevel, u64, f64)> = pts
                .iter()
                .enumerate()
                .map(|(i, &(b, a))| (CompressionLevel::new(i as u8).unwrap(), b, a as f64 / 10.0))
                .collect();
            let got = pareto_front(input.clone());
            for (i, &(_, bi, ai)) in input.iter().enumerate() {
                let dominated = input.iter().any(|&(_, bj, aj)| bj < bi && aj > ai);
                proptest::prop_assert_eq!(got[i].pareto_optimal, !dominated);
            }
        }
    }
}
