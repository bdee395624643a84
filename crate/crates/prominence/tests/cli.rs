use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use prominence::synthetic::{generate, write_world, SyntheticConfig};

fn prominence(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prominence"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_world(dir: &Path) {
    let cfg = SyntheticConfig {
        images: 12,
        max_pairs_per_image: 6,
        seed: 5,
        ..SyntheticConfig::default()
    };
    write_world(dir, &generate(&cfg).unwrap()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const FAST: [&str; 2] = ["--c-grid", "0.0625,1"];

#[test]
fn malformed_manifest_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("manifest.json");
    fs::write(&m, "{\"images\": [").unwrap();
    let out = prominence(&["extract", "--manifest", s(&m), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("manifest.json"));
}

#[test]
fn invalid_record_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("manifest.json");
    fs::write(
        &m,
        r#"{"images": [{"image_id": "i1", "pixel_width": 10, "pixel_height": 10,
             "faces": [{"face_id": "p1", "box": {"x": 1, "y": 1, "w": 0, "h": 3}}]}]}"#,
    )
    .unwrap();
    let out = prominence(&["extract", "--manifest", s(&m), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("i1/p1"), "{}", stderr(&out));
}

#[test]
fn missing_manifest_flag_exits_2() {
    let out = prominence(&["rank"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn overflowing_geometry_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("manifest.json");
    fs::write(
        &m,
        r#"{"images": [{"image_id": "i1", "pixel_width": 10, "pixel_height": 10,
             "faces": [{"face_id": "p1", "box": {"x": 0, "y": 0, "w": 1e308, "h": 1e308}}]}]}"#,
    )
    .unwrap();
    let out = prominence(&["extract", "--no-pixels", "--manifest", s(&m), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn missing_image_file_degrades_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    small_world(dir.path());
    fs::remove_file(dir.path().join("images/img003.png")).unwrap();
    let m = dir.path().join("manifest.json");
    let out = prominence(&["extract", "--manifest", s(&m), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("missing_pixels=1"), "{}", stdout(&out));
    assert!(stdout(&out).contains("warnings=1"));
    assert!(stderr(&out).contains("img003"));
    let table = fs::read_to_string(dir.path().join("o/features.tsv")).unwrap();
    assert!(table.starts_with("# layout_version\t1\n"));
    assert_eq!(table.lines().nth(1).unwrap().split('\t').count(), 39);
}

#[test]
fn synth_then_extract_round_trips_features() {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("w");
    let out = prominence(&["synth", "--images", "5", "--seed", "9", "--out", s(&world)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = prominence(&["extract", "--manifest", s(&world.join("manifest.json")), "--out", s(&world)]);
    assert_eq!(out.status.code(), Some(0));

    let cfg = SyntheticConfig {
        images: 5,
        seed: 9,
        ..SyntheticConfig::default()
    };
    let expected = generate(&cfg).unwrap();
    let text = fs::read_to_string(world.join("features.tsv")).unwrap();
    let rows = prominence::formats::parse_features_tsv(&text, Path::new("features.tsv")).unwrap();
    let flat: Vec<_> = expected.features.iter().flat_map(|f| f.vectors.iter()).collect();
    assert_eq!(rows.len(), flat.len());
    for ((_, _, got), want) in rows.iter().zip(flat) {
        assert_eq!(got, want);
    }
}

#[test]
fn eval_is_reproducible_and_flags_missing_saliency() {
    let dir = tempfile::tempdir().unwrap();
    small_world(dir.path());
    let m = dir.path().join("manifest.json");
    let run = |o: &str| {
        let mut args = vec!["eval", "--folds", "3", "--manifest", s(&m), "--out", o];
        args.extend(FAST);
        let out = prominence(&args);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(s(&a));
    run(s(&b));
    for f in ["report.tsv", "report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let tsv = fs::read_to_string(a.join("report.tsv")).unwrap();
    let saliency = tsv.lines().find(|l| l.starts_with("saliency\t")).unwrap();
    assert!(saliency.starts_with("saliency\tfalse\tNA"), "{saliency}");
    assert!(tsv.lines().any(|l| l.starts_with("svr\ttrue\t")));
    assert!(tsv.lines().any(|l| l.starts_with("human\t")));
}

#[test]
fn eval_with_fixations_and_held_out_workers() {
    let dir = tempfile::tempdir().unwrap();
    small_world(dir.path());
    let m = dir.path().join("manifest.json");
    let fix = dir.path().join("fixations.tsv");
    let o = dir.path().join("o");
    let mut args = vec![
        "eval", "--folds", "3", "--manifest", s(&m), "--fixations", s(&fix), "--out", s(&o),
        "--leave-one-human-out",
    ];
    args.extend(FAST);
    let out = prominence(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let tsv = fs::read_to_string(o.join("report.tsv")).unwrap();
    assert!(tsv.lines().any(|l| l.starts_with("saliency\ttrue\t")));
    assert!(tsv.contains("loho_weighted_accuracy"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["held_out_workers"].as_array().unwrap().len(), 10);
}

#[test]
fn rank_writes_one_table_per_image() {
    let dir = tempfile::tempdir().unwrap();
    small_world(dir.path());
    let m = dir.path().join("manifest.json");
    for extra in [None, Some("--per-judgment")] {
        let mut args = vec!["rank", "--manifest", s(&m), "--out", s(dir.path())];
        args.extend(extra);
        let out = prominence(&args);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let table = fs::read_to_string(dir.path().join("ranking.tsv")).unwrap();
        let mut lines = table.lines();
        assert_eq!(lines.next(), Some("group\titem_id\trating\trank"));
        let groups: std::collections::BTreeSet<&str> =
            lines.map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(groups.len(), 12);
    }
}

#[test]
fn saliency_compare_needs_fixations() {
    let dir = tempfile::tempdir().unwrap();
    small_world(dir.path());
    let m = dir.path().join("manifest.json");
    let out = prominence(&["saliency-compare", "--manifest", s(&m), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let fix = dir.path().join("fixations.tsv");
    let out = prominence(&[
        "saliency-compare", "--manifest", s(&m), "--fixations", s(&fix), "--out", s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("mean_tau="));
    let table = fs::read_to_string(dir.path().join("saliency.tsv")).unwrap();
    assert_eq!(table.lines().filter(|l| l.starts_with("img")).count(), 12);
}

#[test]
fn train_then_describe() {
    let dir = tempfile::tempdir().unwrap();
    small_world(dir.path());
    let m = dir.path().join("manifest.json");
    let mut args = vec!["train", "--manifest", s(&m), "--out", s(dir.path())];
    args.extend(FAST);
    let out = prominence(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let model = dir.path().join("model.json");
    let out = prominence(&[
        "describe",
        "--manifest",
        s(&m),
        "--sentences",
        s(&dir.path().join("sentences.tsv")),
        "--model",
        s(&model),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("agreement_with_annotations="));
    let table = fs::read_to_string(dir.path().join("descriptions.tsv")).unwrap();
    assert_eq!(table.lines().count(), 13);
    assert!(table.lines().nth(1).unwrap().contains("a person seen near"));
}

#[test]
fn describe_reports_a_missing_sentence() {
    let dir = tempfile::tempdir().unwrap();
    small_world(dir.path());
    let m = dir.path().join("manifest.json");
    let sentences = dir.path().join("partial.tsv");
    fs::write(&sentences, "img001\tp1\tonly one\n").unwrap();
    let mut args = vec![
        "describe", "--manifest", s(&m), "--sentences", s(&sentences), "--out", s(dir.path()),
    ];
    args.extend(FAST);
    let out = prominence(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("img001"), "{}", stderr(&out));
}
