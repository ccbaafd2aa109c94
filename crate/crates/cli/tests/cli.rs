use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_vpr-jpeg");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("VPR_JPEG_WORKERS")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Five query and five reference images in separate directories.
fn ten_image_manifest(dir: &Path) -> PathBuf {
    let photos: Vec<_> = {
        let mut v: Vec<_> = fs::read_dir(fixtures().join("photos"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        v.sort();
        v
    };
    for (side, offset) in [("q", 0), ("r", 5)] {
        fs::create_dir_all(dir.join(side)).unwrap();
        for p in &photos[offset..offset + 5] {
            fs::copy(p, dir.join(side).join(p.file_name().unwrap())).unwrap();
        }
    }
    let path = dir.join("ten.json");
    fs::write(&path, r#"{"name":"ten","query_dir":"q","reference_dir":"r"}"#).unwrap();
    path
}

#[test]
fn compress_two_levels_on_ten_images() {
    let tmp = tempfile::tempdir().unwrap();
    ten_image_manifest(tmp.path());
    ok(tmp.path(), &["compress", "--manifest", "ten.json", "--levels", "97,0", "--out", "out"]);
    for p in ["0", "97"] {
        for side in ["query", "reference"] {
            assert_eq!(fs::read_dir(tmp.path().join("out").join(p).join(side)).unwrap().count(), 5);
        }
    }
    let csv = fs::read_to_string(tmp.path().join("out/sizes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 20);
    assert!(csv.lines().nth(1).unwrap().starts_with("ten,0,0,query/"));
}

#[test]
fn self_match_lands_on_the_diagonal() {
    let tmp = tempfile::tempdir().unwrap();
    let photos = fixtures().join("photos");
    let photos = photos.to_str().unwrap();
    ok(tmp.path(), &["extract", "--descriptor", "hog", "--corpus", photos, "--out", "q.vprd"]);
    ok(tmp.path(), &["extract", "--descriptor", "hog", "--corpus", photos, "--out", "r.vprd"]);
    ok(tmp.path(), &["match", "--queries", "q.vprd", "--refs", "r.vprd", "--out", "m.csv"]);
    let csv = fs::read_to_string(tmp.path().join("m.csv")).unwrap();
    let rows: Vec<_> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 25);
    for row in rows {
        let cols: Vec<_> = row.split(',').collect();
        assert_eq!(cols[0], cols[1], "{row}");
    }
    ok(tmp.path(), &["evaluate", "--matches", "m.csv", "--references", "25", "--technique", "hog", "--out", "e.csv"]);
    let e = fs::read_to_string(tmp.path().join("e.csv")).unwrap();
    assert!(e.lines().nth(1).unwrap().starts_with("hog,unnamed,0,0,25,25,25,1.0,1.0"), "{e}");
}

#[test]
fn full_pipeline_yields_six_uniform_and_four_nonuniform_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let m = fixtures().join("photos.json");
    let m = m.to_str().unwrap();
    ok(tmp.path(), &["compress", "--manifest", m, "--out", "corpus"]);
    ok(tmp.path(), &["extract", "--corpus-root", "corpus", "--out", "desc"]);
    ok(tmp.path(), &["evaluate", "--descriptors", "desc", "--manifest", m, "--out", "curve.csv"]);
    ok(tmp.path(), &["nonuniform", "--descriptors", "desc", "--manifest", m, "--q-levels", "0,97", "--r-levels", "0,97", "--out", "grid.csv"]);
    ok(tmp.path(), &["report", "--inputs", "curve.csv", "grid.csv", "--out", "results.csv"]);
    let results = fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    let rows: Vec<Vec<&str>> = results.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.iter().filter(|r| r[2] == r[3]).count(), 8);
    assert!(rows.iter().any(|r| r[2] == "97" && r[3] == "0"));

    ok(tmp.path(), &["report", "--inputs", "results.csv", "--format", "json", "--out", "results.json"]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 10);
    assert!(json[0]["N_c"].is_u64());

    ok(tmp.path(), &[
        "bandwidth", "--sweep", "corpus/sizes.csv", "--rate-bytes", "125000", "--overhead", "0.05",
        "--budget-bytes", "200000", "--curve", "curve.csv", "--out", "bw",
    ]);
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("bw/plan.json")).unwrap()).unwrap();
    assert_eq!(plan["plans"].as_array().unwrap().len(), 6);
    assert_eq!(plan["selected"]["level"], 50);
    let pareto = fs::read_to_string(tmp.path().join("bw/pareto.csv")).unwrap();
    assert_eq!(pareto.lines().next(), Some("percent,bytes,accuracy,pareto_optimal"));
    assert_eq!(pareto.lines().count(), 7);

    ok(tmp.path(), &["entropy", "--corpus-root", "corpus", "--levels", "0,97", "--dataset", "photos", "--out", "ent.csv"]);
    let ent = fs::read_to_string(tmp.path().join("ent.csv")).unwrap();
    assert_eq!(ent.lines().count(), 3);
}

#[test]
fn every_artifact_gets_a_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    ten_image_manifest(tmp.path());
    ok(tmp.path(), &["compress", "--manifest", "ten.json", "--levels", "0", "--out", "out"]);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/sizes.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["subcommand"], "compress");
    assert_eq!(meta["encoder"], "jpeg-encoder 0.6.1");
    assert!(meta["tool"].as_str().unwrap().starts_with("vpr-jpeg "));
    assert_eq!(meta["params"]["levels"], serde_json::json!([0]));
    // Manifest plus ten images.
    let inputs = meta["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 11);
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));

    ok(tmp.path(), &["extract", "--corpus-root", "out", "--levels", "0", "--out", "desc"]);
    assert!(tmp.path().join("desc/0/query.vprd.meta.json").is_file());
    assert!(tmp.path().join("desc/0/reference.vprd.meta.json").is_file());
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    ten_image_manifest(tmp.path());
    let read = |p: &str| fs::read(tmp.path().join(p)).unwrap();
    ok(tmp.path(), &["compress", "--manifest", "ten.json", "--levels", "0,90", "--out", "out"]);
    ok(tmp.path(), &["extract", "--corpus-root", "out", "--levels", "0,90", "--out", "desc"]);
    let first = (read("out/sizes.csv"), read("desc/90/query.vprd"));
    ok(tmp.path(), &["compress", "--manifest", "ten.json", "--levels", "0,90", "--out", "out", "--workers", "3"]);
    ok(tmp.path(), &["extract", "--corpus-root", "out", "--levels", "0,90", "--out", "desc", "--workers", "3"]);
    assert_eq!(first, (read("out/sizes.csv"), read("desc/90/query.vprd")));
}

#[test]
fn vprd_import_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let good = fixtures().join("vprd/good.vprd");
    ok(tmp.path(), &["extract", "--descriptor", "vprd", "--from", good.to_str().unwrap(), "--out", "x.vprd"]);
    assert_eq!(fs::read(tmp.path().join("x.vprd")).unwrap(), fs::read(&good).unwrap());

    let bad = fixtures().join("vprd/bad_trailing.vprd");
    let out = run(tmp.path(), &["extract", "--descriptor", "vprd", "--from", bad.to_str().unwrap(), "--out", "y.vprd"]);
    assert_eq!(code(&out), 3);
    assert!(!tmp.path().join("y.vprd").exists());
}

#[test]
fn exit_codes_follow_failure_class() {
    let tmp = tempfile::tempdir().unwrap();
    ten_image_manifest(tmp.path());

    let bad_level = run(tmp.path(), &["compress", "--manifest", "ten.json", "--levels", "0,100", "--out", "o"]);
    assert_eq!(code(&bad_level), 2);
    let stderr = String::from_utf8(bad_level.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error: "));

    let bad_hog = run(tmp.path(), &["extract", "--corpus", "q", "--cell", "7", "--out", "x.vprd"]);
    assert_eq!(code(&bad_hog), 2);

    let unknown_flag = run(tmp.path(), &["compress", "--bogus"]);
    assert_eq!(code(&unknown_flag), 2);

    let zero_workers = run(tmp.path(), &["compress", "--manifest", "ten.json", "--out", "o", "--workers", "0"]);
    assert_eq!(code(&zero_workers), 2);

    let missing = run(tmp.path(), &["compress", "--manifest", "absent.json", "--out", "o"]);
    assert_eq!(code(&missing), 3);

    fs::write(tmp.path().join("q.vprd"), b"VPRD").unwrap();
    let truncated = run(tmp.path(), &["match", "--queries", "q.vprd", "--refs", "q.vprd", "--out", "m.csv"]);
    assert_eq!(code(&truncated), 3);

    let no_corpus = run(tmp.path(), &["entropy", "--corpus-root", "nowhere", "--out", "e.csv"]);
    assert_eq!(code(&no_corpus), 3);
}

#[test]
fn workers_default_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    ten_image_manifest(tmp.path());
    let out = Command::new(BIN)
        .args(["compress", "--manifest", "ten.json", "--levels", "50", "--out", "o"])
        .current_dir(tmp.path())
        .env("VPR_JPEG_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("o/sizes.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["params"]["workers"], 3);
}
