use pulselab::manifest::RunManifest;
use pulselab::{Bench, Config, Reference};
use pulselab_core::substrate::Mode;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};

fn pulselab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulselab")).args(args).output().expect("spawn pulselab")
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn bad_usage_exits_with_one() {
    assert_eq!(pulselab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(pulselab(&["scan", "--n-a", "many"]).status.code(), Some(1));
    assert_eq!(pulselab(&["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let text = Config::default_config().to_toml().replacen("[ga]", "[ga]\npopulaton = 12", 1);
    std::fs::write(&cfg, text).unwrap();
    let o = pulselab(&["spectrum", "--ideal-reference", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("populaton"), "{err}");
}

#[test]
fn unknown_substrate_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pulselab(&["spectrum", "--ideal-reference", "--substrate", "CH4", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn single_point_scan_is_the_tl_yield() {
    let dir = tempfile::tempdir().unwrap();
    let o = pulselab(&["scan", "--ideal-reference", "--n-a", "1", "--n-b", "1", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("landscape_I_CH2BrCl.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    let j: f64 = rows[0][2].parse().unwrap();
    let bench = Bench::new(Config::default_config(), Reference::Ideal).unwrap();
    let tl = bench.objective("I", "CH2BrCl", Mode::Report).unwrap().tl_j().unwrap();
    assert!((j - tl).abs() <= 1e-12 * tl, "{j} vs {tl}");
}

#[test]
fn optimize_is_reproducible_and_manifested() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = pulselab(&["optimize", "--ideal-reference", "--system", "II", "--seed", "9", "--out", &out_arg(d.path())]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let name = "best_II_CH2BrCl.mask";
    let ma = std::fs::read(a.path().join(name)).unwrap();
    assert_eq!(ma, std::fs::read(b.path().join(name)).unwrap());

    let m = RunManifest::read(&a.path().join("manifest.toml")).unwrap();
    assert_eq!(m.command, "optimize");
    assert_eq!(m.seeds, vec![9]);
    assert_eq!(m.config_digest, Config::default_config().digest());
    assert_eq!(m.artifacts.len(), 2);
    for art in &m.artifacts {
        let bytes = std::fs::read(&art.path).unwrap();
        assert_eq!(art.sha256, hex::encode(Sha256::digest(&bytes)));
    }
}

#[test]
fn matrix_csv_covers_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = pulselab(&["matrix", "--ideal-reference", "--system", "II", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("matrix_II.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["reagent", "substrate", "J_tilde", "thresholded"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 81);
    for row in &rows {
        let j: f64 = row[2].parse().unwrap();
        assert!(j.is_finite() && j >= 0.0);
        assert!(matches!(&row[3], "true" | "false"));
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("trend (i)") && stdout.contains("trend (ii)"));
}

#[test]
fn spectrum_and_mask_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = pulselab(&["optimize", "--ideal-reference", "--seed", "3", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let mask = dir.path().join("best_I_CH2BrCl.mask");
    let spec_dir = dir.path().join("spec");
    let o = pulselab(&[
        "spectrum",
        "--ideal-reference",
        "--mask",
        mask.to_str().unwrap(),
        "--out",
        spec_dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(spec_dir.join("tof_I_CH2BrCl.csv")).unwrap();
    assert!(r.records().count() >= 3);
    // a mask for one shaper cannot be played on the other
    let o = pulselab(&["spectrum", "--ideal-reference", "--system", "II", "--mask", mask.to_str().unwrap(), "--out", spec_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
