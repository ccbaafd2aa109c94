use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use vpr_jpeg::bandwidth::{self, ChannelModel};
use vpr_jpeg::codec::{self, corpus_dir, parse_levels, CompressionLevel, DEFAULT_LEVELS};
use vpr_jpeg::dataset::{load_manifest, GroundTruth, Side};
use vpr_jpeg::descriptor::{self, HogParams};
use vpr_jpeg::matcher;
use vpr_jpeg::meta::RunMetadata;
use vpr_jpeg::metrics::{self, DegradationCurve, DescriptorsByLevel, EvaluationResult, LevelSets, ResultRow};
use vpr_jpeg::{Error, Result};

use crate::{
    BandwidthArgs, CompressArgs, DescriptorKind, EntropyArgs, EvaluateArgs, ExtractArgs, Format,
    GroundTruthArgs, HogArgs, MatchArgs, NonuniformArgs, ReportArgs,
};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn ensure_parent(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

fn percents(levels: &[CompressionLevel]) -> Vec<u8> {
    levels.iter().map(|l| l.percent()).collect()
}

/// `<root>/<percent>/<side>.vprd`
pub fn descriptor_path(root: &Path, level: CompressionLevel, side: Side) -> PathBuf {
    root.join(level.percent().to_string())
        .join(format!("{}.vprd", side.as_str()))
}

pub fn compress(args: &CompressArgs, workers: usize) -> Result<()> {
    let levels = parse_levels(&args.levels)?;
    let manifest = load_manifest(&args.manifest)?;
    ensure_dir(&args.out)?;
    let sweep = codec::sweep_compress(&manifest, &levels, &args.out, workers)?;
    for f in &sweep.failures {
        eprintln!("warning: {} {}: {}", f.side, f.filename, f.reason);
    }
    let sizes = args.out.join("sizes.csv");
    codec::write_sizes_csv(&sweep, &sizes)?;

    let mut meta = RunMetadata::new(
        "compress",
        json!({
            "manifest": args.manifest,
            "levels": percents(&levels),
            "out": args.out,
            "workers": workers,
        }),
    )
    .input(&args.manifest)?
    .input(&manifest.query_dir)?;
    if manifest.reference_dir != manifest.query_dir {
        meta = meta.input(&manifest.reference_dir)?;
    }
    meta.write_beside(&sizes)?;
    Ok(())
}

fn hog_params(args: &HogArgs) -> Result<HogParams> {
    let bad = || Error::InvalidParams(format!("--resize expects WIDTHxHEIGHT, got {:?}", args.resize));
    let (w, h) = args.resize.split_once(['x', 'X']).ok_or_else(bad)?;
    let params = HogParams {
        resize: (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?),
        cell: args.cell,
        block: args.block,
        stride: args.stride,
        bins: args.bins,
    };
    params.validate()?;
    Ok(params)
}

pub fn extract(args: &ExtractArgs, workers: usize) -> Result<()> {
    match args.descriptor {
        DescriptorKind::Vprd => import_vprd(args),
        DescriptorKind::Hog => {
            let params = hog_params(&args.hog)?;
            let hog_json = json!({
                "resize": [params.resize.0, params.resize.1],
                "cell": params.cell,
                "block": params.block,
                "stride": params.stride,
                "bins": params.bins,
            });
            match (&args.corpus, &args.corpus_root) {
                (Some(dir), None) => {
                    let set = descriptor::extract_hog_dir(dir, None, &params, workers)?;
                    ensure_parent(&args.out)?;
                    descriptor::write_descriptor_file(&set, &args.out)?;
                    RunMetadata::new(
                        "extract",
                        json!({"descriptor": "hog", "corpus": dir, "hog": hog_json, "workers": workers}),
                    )
                    .input(dir)?
                    .write_beside(&args.out)?;
                    Ok(())
                }
                (None, Some(root)) => {
                    let levels = parse_levels(&args.levels)?;
                    for &level in &levels {
                        for side in Side::BOTH {
                            let dir = corpus_dir(root, level, side);
                            let set = descriptor::extract_hog_dir(&dir, Some(level), &params, workers)?;
                            let out = descriptor_path(&args.out, level, side);
                            ensure_parent(&out)?;
                            descriptor::write_descriptor_file(&set, &out)?;
                            RunMetadata::new(
                                "extract",
                                json!({
                                    "descriptor": "hog",
                                    "corpus": dir,
                                    "level": level.percent(),
                                    "side": side.as_str(),
                                    "hog": hog_json,
                                    "workers": workers,
                                }),
                            )
                            .input(&dir)?
                            .write_beside(&out)?;
                        }
                    }
                    Ok(())
                }
                _ => Err(Error::InvalidParams(
                    "extract --descriptor hog needs exactly one of --corpus or --corpus-root".into(),
                )),
            }
        }
    }
}

/// Validate an externally produced VPRD file and copy it into place.
fn import_vprd(args: &ExtractArgs) -> Result<()> {
    let from = args
        .from
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("extract --descriptor vprd needs --from FILE".into()))?;
    let set = descriptor::load_descriptor_file(from)?;
    ensure_parent(&args.out)?;
    descriptor::write_descriptor_file(&set, &args.out)?;
    RunMetadata::new(
        "extract",
        json!({"descriptor": "vprd", "from": from, "label": set.label, "count": set.len(), "dim": set.dim()}),
    )
    .input(from)?
    .write_beside(&args.out)?;
    Ok(())
}

pub fn match_sets(args: &MatchArgs, workers: usize) -> Result<()> {
    let queries = descriptor::load_descriptor_file(&args.queries)?;
    let refs = descriptor::load_descriptor_file(&args.refs)?;
    let matrix = matcher::similarity_matrix(&queries, &refs, workers)?;
    let records = (0..matrix.rows())
        .map(|i| matcher::best_match(&matrix.score_list(i)))
        .collect::<Result<Vec<_>>>()?;
    ensure_parent(&args.out)?;
    matcher::write_matches_csv(&records, &args.out)?;
    let meta = RunMetadata::new(
        "match",
        json!({
            "queries": args.queries,
            "refs": args.refs,
            "matrix": args.matrix,
            "workers": workers,
        }),
    )
    .input(&args.queries)?
    .input(&args.refs)?;
    meta.write_beside(&args.out)?;
    if let Some(path) = &args.matrix {
        ensure_parent(path)?;
        let set = matcher::matrix_as_descriptor_set(&matrix, &queries)?;
        descriptor::write_descriptor_file(&set, path)?;
        meta.write_beside(path)?;
    }
    Ok(())
}

/// Ground truth and dataset name from a manifest, or identity without one.
fn ground_truth(args: &GroundTruthArgs, n_q: usize, n_r: usize) -> Result<(GroundTruth, String)> {
    match &args.manifest {
        Some(path) => {
            let manifest = load_manifest(path)?;
            let gt = match args.tolerance {
                Some(t) => manifest.ground_truth.with_tolerance(t),
                None => manifest.ground_truth,
            };
            Ok((gt, manifest.name))
        }
        None => Ok((
            GroundTruth::identity(n_q, n_r, args.tolerance.unwrap_or(0)),
            args.dataset.clone(),
        )),
    }
}

fn gt_meta(meta: RunMetadata, args: &GroundTruthArgs) -> Result<RunMetadata> {
    match &args.manifest {
        Some(path) => meta.input(path),
        None => Ok(meta),
    }
}

/// Levels present as `<percent>/query.vprd` under `root`.
fn tree_levels(root: &Path) -> Result<Vec<CompressionLevel>> {
    let mut levels = BTreeSet::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let Some(name) = entry.file_name().to_str().map(str::to_owned) else {
            continue;
        };
        if let Ok(level) = name.parse::<CompressionLevel>() {
            if descriptor_path(root, level, Side::Query).is_file() {
                levels.insert(level);
            }
        }
    }
    if levels.is_empty() {
        return Err(Error::MissingCorpus(root.to_path_buf()));
    }
    Ok(levels.into_iter().collect())
}

fn load_tree(root: &Path, levels: &[CompressionLevel]) -> Result<DescriptorsByLevel> {
    levels
        .iter()
        .map(|&level| {
            let load = |side| {
                descriptor::load_descriptor_file(descriptor_path(root, level, side))
                    .map(|s| s.with_level(Some(level)))
            };
            Ok((
                level,
                LevelSets {
                    query: load(Side::Query)?,
                    reference: load(Side::Reference)?,
                },
            ))
        })
        .collect()
}

fn counts(sets: &DescriptorsByLevel) -> (usize, usize, String) {
    sets.values()
        .next()
        .map(|s| (s.query.len(), s.reference.len(), s.query.label.clone()))
        .unwrap_or_default()
}

fn tree_inputs(mut meta: RunMetadata, root: &Path, levels: &[CompressionLevel]) -> Result<RunMetadata> {
    for &level in levels {
        for side in Side::BOTH {
            meta = meta.input(&descriptor_path(root, level, side))?;
        }
    }
    Ok(meta)
}

fn write_rows(rows: &[ResultRow], format: Format, out: &Path) -> Result<()> {
    ensure_parent(out)?;
    match format {
        Format::Csv => metrics::write_results_csv(rows, out),
        Format::Json => metrics::write_results_json(rows, out),
    }
}

pub fn evaluate(args: &EvaluateArgs, workers: usize) -> Result<()> {
    let rows = match (&args.descriptors, &args.matches) {
        (Some(root), None) => {
            let levels = match &args.levels {
                Some(list) => parse_levels(list)?,
                None => tree_levels(root)?,
            };
            let sets = load_tree(root, &levels)?;
            let (n_q, n_r, label) = counts(&sets);
            let technique = args.technique.clone().unwrap_or(label);
            let (gt, dataset) = ground_truth(&args.gt, n_q, n_r)?;
            let curve = metrics::degradation_curve(&technique, &dataset, &gt, &sets, &levels, workers)?;
            write_rows(&metrics::curve_rows(&curve), args.format, &args.out)?;
            let meta = RunMetadata::new(
                "evaluate",
                json!({
                    "descriptors": root,
                    "levels": percents(&levels),
                    "technique": technique,
                    "tolerance": gt.tolerance(),
                    "workers": workers,
                }),
            );
            let meta = gt_meta(tree_inputs(meta, root, &levels)?, &args.gt)?;
            meta.write_beside(&args.out)?;
            return Ok(());
        }
        (None, Some(path)) => {
            let records = matcher::read_matches_csv(path)?;
            let n_r = args.references.unwrap_or_default();
            let (gt, dataset) = ground_truth(&args.gt, records.len(), n_r)?;
            let result = EvaluationResult {
                technique: args.technique.clone().unwrap_or_else(|| "unnamed".into()),
                dataset,
                query_level: CompressionLevel::new(args.q_level)?,
                ref_level: CompressionLevel::new(args.r_level)?,
                count: metrics::accuracy(&records, &gt, n_r)?,
            };
            vec![result.row()]
        }
        _ => {
            return Err(Error::InvalidParams(
                "evaluate needs exactly one of --descriptors or --matches".into(),
            ))
        }
    };
    write_rows(&rows, args.format, &args.out)?;
    let matches = args.matches.as_deref().expect("match mode");
    let meta = RunMetadata::new(
        "evaluate",
        json!({
            "matches": matches,
            "references": args.references,
            "q_level": args.q_level,
            "r_level": args.r_level,
            "tolerance": args.gt.tolerance,
        }),
    )
    .input(matches)?;
    gt_meta(meta, &args.gt)?.write_beside(&args.out)?;
    Ok(())
}

pub fn entropy(args: &EntropyArgs, workers: usize) -> Result<()> {
    let (reports, input) = match (&args.corpus_root, &args.corpus) {
        (Some(root), None) => {
            let levels = match &args.levels {
                Some(list) => parse_levels(list)?,
                None => DEFAULT_LEVELS.to_vec(),
            };
            let reports = levels
                .iter()
                .map(|&l| metrics::average_entropy(&args.dataset, root, l, workers))
                .collect::<Result<Vec<_>>>()?;
            (reports, root)
        }
        (None, Some(dir)) => {
            let level = match &args.levels {
                Some(list) => match parse_levels(list)?.as_slice() {
                    [one] => *one,
                    _ => {
                        return Err(Error::InvalidParams(
                            "entropy --corpus takes a single level".into(),
                        ))
                    }
                },
                None => CompressionLevel::new(0)?,
            };
            (vec![metrics::average_entropy_dir(&args.dataset, dir, level, workers)?], dir)
        }
        _ => {
            return Err(Error::InvalidParams(
                "entropy needs exactly one of --corpus or --corpus-root".into(),
            ))
        }
    };
    ensure_parent(&args.out)?;
    match args.format {
        Format::Json => {
            let text = serde_json::to_string_pretty(&reports)?;
            fs::write(&args.out, text + "\n").map_err(io_err(&args.out))?;
        }
        Format::Csv => {
            let mut text = String::from("dataset,percent,images,mean_entropy\n");
            for r in &reports {
                text.push_str(&format!(
                    "{},{},{},{:.9}\n",
                    csv_field(&r.dataset),
                    r.level.percent(),
                    r.per_image.len(),
                    r.mean
                ));
            }
            fs::write(&args.out, text).map_err(io_err(&args.out))?;
        }
    }
    RunMetadata::new(
        "entropy",
        json!({
            "dataset": args.dataset,
            "levels": reports.iter().map(|r| r.level.percent()).collect::<Vec<_>>(),
            "workers": workers,
        }),
    )
    .input(input)?
    .write_beside(&args.out)?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn nonuniform(args: &NonuniformArgs, workers: usize) -> Result<()> {
    let q_levels = parse_levels(&args.q_levels)?;
    let r_levels = parse_levels(&args.r_levels)?;
    let all: Vec<CompressionLevel> = q_levels
        .iter()
        .chain(&r_levels)
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let sets = load_tree(&args.descriptors, &all)?;
    let (n_q, n_r, label) = counts(&sets);
    let technique = args.technique.clone().unwrap_or(label);
    let (gt, dataset) = ground_truth(&args.gt, n_q, n_r)?;
    let grid = metrics::nonuniform_grid(&technique, &dataset, &gt, &sets, &q_levels, &r_levels, workers)?;
    write_rows(&metrics::grid_rows(&grid), args.format, &args.out)?;
    let meta = RunMetadata::new(
        "nonuniform",
        json!({
            "descriptors": args.descriptors,
            "q_levels": percents(&q_levels),
            "r_levels": percents(&r_levels),
            "technique": technique,
            "tolerance": gt.tolerance(),
            "workers": workers,
        }),
    );
    gt_meta(tree_inputs(meta, &args.descriptors, &all)?, &args.gt)?.write_beside(&args.out)?;
    Ok(())
}

/// Uniform rows (`q_level == r_level`) of a results table as a curve.
fn curve_from_rows(rows: Vec<ResultRow>, technique: Option<&str>) -> Result<DegradationCurve> {
    let rows: Vec<ResultRow> = rows
        .into_iter()
        .filter(|r| r.q_level == r.r_level)
        .filter(|r| technique.is_none_or(|t| r.technique == t))
        .collect();
    let techniques: BTreeSet<&str> = rows.iter().map(|r| r.technique.as_str()).collect();
    if techniques.len() != 1 {
        return Err(Error::InvalidParams(format!(
            "curve needs exactly one technique, found {} (use --technique)",
            techniques.len()
        )));
    }
    let mut points = Vec::with_capacity(rows.len());
    let mut seen = BTreeSet::new();
    for r in &rows {
        if !seen.insert(r.q_level) {
            return Err(Error::LevelMismatch(format!("level {} listed twice in curve", r.q_level)));
        }
        points.push((CompressionLevel::new(r.q_level)?, r.accuracy));
    }
    points.sort_by_key(|p| p.0);
    Ok(DegradationCurve {
        technique: rows[0].technique.clone(),
        dataset: rows[0].dataset.clone(),
        points,
        results: Vec::new(),
    })
}

pub fn bandwidth(args: &BandwidthArgs) -> Result<()> {
    let sweep = codec::read_sizes_csv(&args.sweep)?;
    let channel = ChannelModel::new(args.rate_bytes, args.overhead)?;
    let curve = match &args.curve {
        Some(path) => Some(curve_from_rows(
            metrics::read_results_csv(path)?,
            args.technique.as_deref(),
        )?),
        None => None,
    };
    let plans = sweep
        .levels
        .iter()
        .map(|l| bandwidth::plan(&sweep, l.level, &channel, curve.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let selected = args
        .budget_bytes
        .and_then(|b| bandwidth::min_compression_for_budget(&sweep, b));
    if let (Some(b), None) = (args.budget_bytes, selected) {
        eprintln!("warning: no level fits a budget of {b} bytes");
    }
    let selected_plan = selected.and_then(|l| plans.iter().find(|p| p.level == l));

    ensure_dir(&args.out)?;
    let plan_path = args.out.join("plan.json");
    let doc = json!({
        "dataset": sweep.dataset,
        "rate_bytes_per_second": channel.rate(),
        "overhead_fraction": channel.overhead_fraction(),
        "budget_bytes": args.budget_bytes,
        "selected": selected_plan,
        "plans": plans,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    fs::write(&plan_path, text + "\n").map_err(io_err(&plan_path))?;

    let mut meta = RunMetadata::new(
        "bandwidth",
        json!({
            "rate_bytes": args.rate_bytes,
            "overhead": args.overhead,
            "budget_bytes": args.budget_bytes,
            "technique": args.technique,
        }),
    )
    .input(&args.sweep)?;
    if let (Some(curve), Some(path)) = (&curve, &args.curve) {
        let pareto_path = args.out.join("pareto.csv");
        bandwidth::write_pareto_csv(&bandwidth::accuracy_bytes_pareto(curve, &sweep)?, &pareto_path)?;
        meta = meta.input(path)?;
        meta.write_beside(&pareto_path)?;
    }
    meta.write_beside(&plan_path)?;
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    let mut meta = RunMetadata::new("report", json!({ "inputs": args.inputs }));
    for path in &args.inputs {
        rows.extend(metrics::read_results_csv(path)?);
        meta = meta.input(path)?;
    }
    write_rows(&rows, args.format, &args.out)?;
    meta.write_beside(&args.out)?;
    Ok(())
}
