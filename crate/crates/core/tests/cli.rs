use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use segfd::io::EvalReport;
use segfd::risk_coverage::{aurc, rc_curve};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e")
}

fn segfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segfd")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn copy_fixture(to: &Path) {
    let from = fixture();
    for sub in ["", "data"] {
        fs::create_dir_all(to.join(sub)).unwrap();
        for entry in fs::read_dir(from.join(sub)).unwrap() {
            let entry = entry.unwrap();
            if entry.file_type().unwrap().is_file() {
                fs::copy(entry.path(), to.join(sub).join(entry.file_name())).unwrap();
            }
        }
    }
}

#[test]
fn evaluate_strict_exits_one_when_a_case_fails() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixture(dir.path());
    fs::write(dir.path().join("data/case05_pred.npy"), b"not an npy file").unwrap();
    let out = dir.path().join("out");
    let manifest = dir.path().join("manifest.csv");
    let config = dir.path().join("config.json");
    let run = |strict: bool| {
        let mut args = vec!["evaluate", "--manifest", path(&manifest), "--config", path(&config), "--out", path(&out)];
        if strict {
            args.push("--strict");
        }
        segfd(&args)
    };

    let lenient = run(false);
    assert_eq!(lenient.status.code(), Some(0));
    let report = EvalReport::load(&out.join("report.json")).unwrap();
    assert_eq!(report.cases.len(), 19);
    assert!(report
        .errors
        .iter()
        .any(|e| e.case_id.as_deref() == Some("case05") && e.code == "BAD_MAGIC"));

    let strict = run(true);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("case05"));
}

#[test]
fn evaluate_rejects_unknown_config_keys_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"risks": {"dsc": {"metric": "dsc"}}, "methods": [], "colour": 1}"#).unwrap();
    let manifest = fixture().join("manifest.csv");
    let out = segfd(&[
        "evaluate",
        "--manifest",
        path(&manifest),
        "--config",
        path(&config),
        "--out",
        path(&dir.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error [CONFIG]"));
}

#[test]
fn missing_manifest_column_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.csv");
    fs::write(&manifest, "case_id,fold\na,0\n").unwrap();
    let out = segfd(&[
        "evaluate",
        "--manifest",
        path(&manifest),
        "--config",
        path(&fixture().join("config.json")),
        "--out",
        path(&dir.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MISSING_COLUMN"));
}

#[test]
fn rc_curve_writes_curve_and_aurc_family() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    fs::write(&input, "risk,confidence\n0.1,4\n0.5,3\n0.7,2\n0.72,1\n").unwrap();
    let out_dir = dir.path().join("rc");
    let out = segfd(&["rc-curve", "--input", path(&input), "--out", path(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let family: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(family["n"], 4);
    assert!((family["aurc"].as_f64().unwrap() - 0.334_583_333_333_333_3).abs() < 1e-12);
    assert_eq!(family["aurc"], family["aurc_optimal"]);
    assert_eq!(family["naurc"].as_f64(), Some(0.0));
    let curve = fs::read_to_string(out_dir.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 5);
    assert_eq!(fs::read(out_dir.join("aurc.json")).unwrap(), out.stdout);
}

#[test]
fn rc_curve_rejects_unparseable_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    fs::write(&input, "risk,confidence\n0.1,high\n").unwrap();
    let out = segfd(&["rc-curve", "--input", path(&input), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BAD_ROW"));
}

#[test]
fn aggregate_prints_four_scores_within_map_range() {
    let data = fixture().join("data");
    let out = segfd(&[
        "aggregate",
        "--conf",
        path(&data.join("case00_conf.npy")),
        "--pred",
        path(&data.join("case00_pred.npy")),
        "--spacing",
        "1,1",
        "--class-ids",
        "1,2",
        "--width",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scores: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["mean", "non_boundary", "mean_foreground", "patch_min"] {
        let v = scores[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }
}

#[test]
fn pairwise_dice_of_one_map_twice_is_one() {
    let pred = fixture().join("data/case03_pred.npy");
    let out = segfd(&[
        "pairwise-dice",
        "--samples",
        path(&pred),
        path(&pred),
        "--spacing",
        "1,1",
        "--class-ids",
        "1,2",
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1");
}

#[test]
fn fitted_models_are_json_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let train = fixture().join("train.csv");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for target in [&a, &b] {
        let out = segfd(&["fit-rf", "--manifest", path(&train), "--out", path(target), "--n-trees", "5", "--width", "2"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let gauss = dir.path().join("g.json");
    let out = segfd(&["fit-mahalanobis", "--manifest", path(&train), "--out", path(&gauss)]);
    assert!(out.status.success());
    let model: serde_json::Value = serde_json::from_slice(&fs::read(&gauss).unwrap()).unwrap();
    assert_eq!(model["mean"].as_array().unwrap().len(), 4);
}

#[test]
fn rank_reads_reports_and_writes_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let report = fixture().join("golden/report.json");
    let out = segfd(&[
        "rank",
        "--reports",
        path(&report),
        "--out",
        path(dir.path()),
        "--risk",
        "dsc",
        "--n-bootstrap",
        "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("ranking.csv")).unwrap();
    assert!(csv.starts_with("method,median_rank\n"));
    assert!(csv.contains("oracle_dsc,1\n"));

    let twice = segfd(&["rank", "--reports", path(&report), path(&report), "--out", path(dir.path())]);
    assert_eq!(twice.status.code(), Some(2));
}

#[test]
fn golden_summary_matches_values_recomputed_from_cases() {
    let golden = fixture().join("golden");
    let report = EvalReport::load(&golden.join("report.json")).unwrap();
    let mut reader = csv::Reader::from_path(golden.join("summary.csv")).unwrap();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let (conf, risk) = (&record[0], &record[1]);
        let pairs: Vec<(f64, f64)> = report
            .cases
            .iter()
            .filter_map(|c| Some((c.risk(risk)?, c.confidence(conf)?)))
            .collect();
        assert_eq!(record[2].parse::<usize>().unwrap(), pairs.len());
        let (risks, confs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let want = aurc(&rc_curve(&risks, &confs).unwrap());
        let got: f64 = record[3].parse().unwrap();
        assert!((got - want).abs() <= 1e-12, "{conf}/{risk}: {got} vs {want}");
        rows += 1;
    }
    assert_eq!(rows, report.summary.len());
}
