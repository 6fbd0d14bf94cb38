use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rainkit::enhance::{compute_histogram, Histogram};
use rainkit::pipeline::{ComparisonTable, PairManifest, RunReport, PAIR_MANIFEST_FILE, RUN_REPORT_FILE};
use rainkit::sequence::load_image;
use rainkit::synthetic::{clean_scene, rainy_sequence, RainParams};
use rainkit::{save_image, save_sequence, FrameSequence, QualityReport};

fn rainkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rainkit")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_scene(root: &Path, name: &str, seed: u64) -> (PathBuf, PathBuf) {
    let clean = clean_scene(24, 32, 3, seed);
    let params = RainParams {
        intensity: 0.25,
        max_coverage: 0.03,
        ..RainParams::default()
    };
    let rainy = rainy_sequence(&clean, 6, &params, seed).unwrap();
    let manifest = save_sequence(&FrameSequence::new(name, rainy.into_frames()).unwrap(), root.join(name)).unwrap();
    let gt = root.join(format!("{name}_gt.png"));
    save_image(&clean, &gt).unwrap();
    (manifest, gt)
}

#[test]
fn hist_prints_one_line_per_channel() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("x.png");
    save_image(&clean_scene(16, 16, 3, 1), &img).unwrap();
    let out = rainkit(&["hist", path_str(&img)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.split_whitespace().count() == 256));

    let saved = dir.path().join("x.hist");
    assert!(rainkit(&["hist", path_str(&img), "--out", path_str(&saved)]).status.success());
    assert_eq!(Histogram::load(&saved).unwrap(), compute_histogram(&load_image(&img).unwrap()));
}

#[test]
fn metrics_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    save_image(&clean_scene(16, 16, 1, 1), &a).unwrap();
    save_image(&clean_scene(16, 16, 1, 2), &b).unwrap();

    let same = QualityReport::from_json(&stdout(&rainkit(&["metrics", path_str(&a), path_str(&a)]))).unwrap();
    assert_eq!(same.psnr_db, 99.0);
    assert!((same.ssim - 1.0).abs() < 1e-12);

    let out = rainkit(&["metrics", path_str(&a), path_str(&b), "--hist-metric", "l1"]);
    let diff = QualityReport::from_json(&stdout(&out)).unwrap();
    assert!(diff.psnr_db < 99.0 && diff.histogram_distance.unwrap() > 0.0);

    let c = dir.path().join("c.png");
    save_image(&clean_scene(16, 20, 1, 2), &c).unwrap();
    let out = rainkit(&["metrics", path_str(&a), path_str(&c)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shape mismatch"));
}

#[test]
fn enhance_fixed_and_auto() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("in.png");
    save_image(&clean_scene(20, 20, 3, 4), &img).unwrap();

    let fixed = dir.path().join("fixed.png");
    let out = rainkit(&["enhance", path_str(&img), "--out", path_str(&fixed), "--gamma", "1.3", "--weight", "0.5", "--kernel-size", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("\"gamma\":1.3"));
    assert_ne!(load_image(&fixed).unwrap(), load_image(&img).unwrap());

    let hist = dir.path().join("ref.hist");
    compute_histogram(&load_image(&img).unwrap()).save(&hist).unwrap();
    let auto = dir.path().join("auto.png");
    let out = rainkit(&["enhance", path_str(&img), "--out", path_str(&auto), "--reference", path_str(&hist)]);
    assert!(out.status.success());
    // The image already matches its own histogram, so the identity wins.
    assert!(stdout(&out).starts_with("distance 0"), "{}", stdout(&out));
    assert_eq!(load_image(&auto).unwrap(), load_image(&img).unwrap());

    let out = rainkit(&["enhance", path_str(&img), "--out", path_str(&auto), "--kernel-size", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn derain_writes_collapsed_image_and_layers() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = write_scene(dir.path(), "lane", 5);
    let out_dir = dir.path().join("derained");
    let out = rainkit(&["derain", path_str(&manifest), "--out", path_str(&out_dir), "--dump", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).matches("converged true").count(), 3);
    assert!(out_dir.join("lane.png").is_file());
    assert!(out_dir.join("debug/rain_005.png").is_file());

    let median_dir = dir.path().join("median");
    let out = rainkit(&["derain", path_str(&manifest), "--out", path_str(&median_dir), "--method", "median"]);
    assert!(out.status.success());
    assert!(!stdout(&out).contains("channel"));
    assert!(median_dir.join("lane.png").is_file());
}

#[test]
fn pipeline_run_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let (m1, g1) = write_scene(dir.path(), "north", 1);
    let (m2, g2) = write_scene(dir.path(), "south", 2);
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "manifest = {}\nmanifest = {}\ngt.north = {}\ngt.south = {}\nout = ignored\n",
            m1.display(),
            m2.display(),
            g1.display(),
            g2.display()
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");

    let out = rainkit(&["pipeline", "run", "--config", path_str(&cfg), "--out", path_str(&out_dir), "--workers", "2", "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = RunReport::from_json(&fs::read_to_string(out_dir.join(RUN_REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(report.succeeded, 2);
    assert_eq!(report.config.seed, 9);
    let pairs = PairManifest::load(out_dir.join(PAIR_MANIFEST_FILE)).unwrap();
    assert_eq!(pairs.rows.len(), 12);
    assert!(!dir.path().join("ignored").exists());

    let out = rainkit(&["pipeline", "compare", "--config", path_str(&cfg), "--out", path_str(&out_dir), "--method", "median"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("method"));
    let table = ComparisonTable::from_json(&fs::read_to_string(out_dir.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 4);
}

#[test]
fn pipeline_run_exits_nonzero_when_a_sequence_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (good, _) = write_scene(dir.path(), "good", 1);
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "nowhere.png\nnowhere2.png\n").unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("manifest = {}\nmanifest = bad.txt\nmethod = average\n", good.display())).unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_rainkit"))
        .args(["pipeline", "run", "--config", path_str(&cfg)])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad"));
    let report = RunReport::from_json(&fs::read_to_string(dir.path().join("out").join(RUN_REPORT_FILE)).unwrap()).unwrap();
    assert_eq!((report.succeeded, report.failed), (1, 1));
    assert!(dir.path().join("out/pseudo_gt/good.png").is_file());
}

#[test]
fn bad_config_is_reported_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "method = lowrank\nrpca.rho = fast\n").unwrap();
    let out = rainkit(&["pipeline", "run", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("rpca.rho"), "{err}");
}
