use std::fs;
use std::path::{Path, PathBuf};

use vpr_jpeg::codec::CompressionLevel;
use vpr_jpeg::dataset::{load_manifest, validate_dataset, Side};
use vpr_jpeg::descriptor::{self, DescriptorSet, DescriptorVector, HogParams};
use vpr_jpeg::matcher;
use vpr_jpeg::metrics;
use vpr_jpeg::{Error, ErrorClass};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn write_manifest(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("m.json");
    fs::write(&path, body).unwrap();
    path
}

fn copy_photos(dir: &Path, names: &[&str]) {
    fs::create_dir_all(dir).unwrap();
    for n in names {
        fs::copy(fixtures().join("photos").join(n), dir.join(n)).unwrap();
    }
}

#[test]
fn fixture_dataset_validates_clean() {
    let m = load_manifest(fixtures().join("photos.json")).unwrap();
    let report = validate_dataset(&m);
    assert!(report.is_empty(), "{:?}", report.issues);
}

#[test]
fn manifest_syntax_error_reports_position() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_manifest(tmp.path(), "{\n  \"name\": \"x\",\n  \"query_dir\": \n}");
    match load_manifest(&path) {
        Err(Error::ManifestParse { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn manifest_rejects_empty_ground_truth_range() {
    let tmp = tempfile::tempdir().unwrap();
    copy_photos(&tmp.path().join("q"), &["000_astronaut.png", "001_astronaut.png"]);
    let path = write_manifest(
        tmp.path(),
        r#"{"name":"x","query_dir":"q","reference_dir":"q","ground_truth":[[0,1,0]]}"#,
    );
    let err = load_manifest(&path).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Data);
    assert!(err.to_string().contains("ground_truth[0]"), "{err}");
}

#[test]
fn manifest_rejects_unknown_fields_and_missing_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_manifest(tmp.path(), r#"{"name":"x","query_dir":"q","reference_dir":"q","extra":1}"#);
    assert!(matches!(load_manifest(&unknown), Err(Error::ManifestParse { .. })));
    let missing = write_manifest(tmp.path(), r#"{"name":"x","query_dir":"nope","reference_dir":"nope"}"#);
    assert!(load_manifest(&missing).unwrap_err().to_string().contains("does not exist"));
}

/// References are the queries in reverse order, described by explicit
/// ground truth.
#[test]
fn explicit_ground_truth_drives_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let names = ["003_camera.png", "005_chelsea.png", "007_coffee.png", "010_coins.png"];
    copy_photos(&tmp.path().join("q"), &names);
    fs::create_dir_all(tmp.path().join("r")).unwrap();
    for (i, n) in names.iter().rev().enumerate() {
        fs::copy(fixtures().join("photos").join(n), tmp.path().join("r").join(format!("{i}.png"))).unwrap();
    }
    let path = write_manifest(
        tmp.path(),
        r#"{"name":"rev","query_dir":"q","reference_dir":"r",
            "ground_truth":[[0,3,3],[1,2,2],[2,1,1],[3,0,0]]}"#,
    );
    let m = load_manifest(&path).unwrap();
    let params = HogParams::default();
    let q = descriptor::extract_hog_dir(m.dir(Side::Query), None, &params, 2).unwrap();
    let r = descriptor::extract_hog_dir(m.dir(Side::Reference), None, &params, 2).unwrap();
    let zero = CompressionLevel::new(0).unwrap();
    let result = metrics::evaluate("hog", &m.name, &q, &r, &m.ground_truth, zero, zero, 2).unwrap();
    assert_eq!(result.count.n_c, 4);
    assert_eq!(result.accuracy(), 1.0);

    let identity = vpr_jpeg::dataset::GroundTruth::identity(4, 4, 0);
    let wrong = metrics::evaluate("hog", &m.name, &q, &r, &identity, zero, zero, 2).unwrap();
    assert_eq!(wrong.count.n_c, 0);
}

#[test]
fn tolerance_widens_accepted_window() {
    let v = |x: f32| DescriptorVector::new(vec![x, 1.0]).unwrap();
    let names = |n: usize| (0..n).map(|i| format!("{i}")).collect::<Vec<_>>();
    // Query i is closest to reference i + 1.
    let q = DescriptorSet::new("t", None, (0..4).map(|i| v(i as f32 + 1.0)).collect(), names(4)).unwrap();
    let r = DescriptorSet::new("t", None, (0..5).map(|i| v(i as f32)).collect(), names(5)).unwrap();
    let records = matcher::match_all(&q, &r, 1).unwrap();
    let strict = metrics::accuracy(&records, &vpr_jpeg::dataset::GroundTruth::identity(4, 5, 0), 5).unwrap();
    let loose = metrics::accuracy(&records, &vpr_jpeg::dataset::GroundTruth::identity(4, 5, 1), 5).unwrap();
    assert_eq!(strict.n_c, 0);
    assert_eq!(loose.n_c, 4);
    assert_eq!(loose.accuracy, 4.0 / 5.0);
    assert_eq!(loose.accuracy_per_query, 1.0);
}

#[test]
fn vprd_files_match_like_in_memory_sets() {
    let dir = fixtures().join("photos");
    let params = HogParams::default();
    let set = descriptor::extract_hog_dir(&dir, None, &params, 3).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("hog.vprd");
    let written = descriptor::write_descriptor_file(&set, &path).unwrap();
    assert_eq!(written, fs::metadata(&path).unwrap().len());
    let loaded = descriptor::load_descriptor_file(&path).unwrap();
    assert_eq!(loaded.dim(), 8100);
    assert_eq!(loaded.filenames(), set.filenames());
    let a = matcher::match_all(&set, &set, 2).unwrap();
    let b = matcher::match_all(&loaded, &loaded, 2).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|m| m.matched_ref_index == m.query_index));
}
