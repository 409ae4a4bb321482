use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use basins_core::io;

fn basins(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basins"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn henon_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("henon.json");
    write(
        &cfg,
        r#"{
            "system": "henon",
            "grid": [{"min": -2, "max": 2, "len": 60}, {"min": -2, "max": 2, "len": 60}],
            "seed": 3
        }"#,
    );
    cfg
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = henon_config(dir.path());
    let out = dir.path().join("out");
    let o = basins(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["basins.bin", "basins.json", "attractors.csv", "fractions.json", "metadata.json", "basins.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let (header, labels) = io::read_basins(&out.join("basins.bin")).unwrap();
    assert_eq!(header.shape, vec![60, 60]);
    assert_eq!(header.attractor_count, 1);
    assert!(labels.iter().all(|&l| l == 1 || l == -1));
    let atts = io::read_attractors_csv(&out.join("attractors.csv")).unwrap();
    assert_eq!(atts.len(), 1);

    let fr: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fractions.json")).unwrap()).unwrap();
    let keys: Vec<&String> = fr["fractions"].as_object().unwrap().keys().collect();
    assert_eq!(keys, vec!["-1", "1"]);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["dt"], 1.0);
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(meta["version"].is_string());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("duffing.json");
    write(
        &cfg,
        r#"{"system": "duffing",
            "grid": [{"min": -2, "max": 2, "len": 12}, {"min": -2, "max": 2, "len": 12}],
            "recurrence": {"method": "rk4_fixed", "dt": 0.1}}"#,
    );
    let mut bins = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = basins(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        bins.push(fs::read(out.join("basins.bin")).unwrap());
    }
    assert_eq!(bins[0], bins[1]);
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (name, text) in [
        ("len1.json", r#"{"system": "henon", "grid": [{"min": -1, "max": 1, "len": 1}, {"min": -1, "max": 1, "len": 5}]}"#),
        ("unknown.json", r#"{"system": "henon", "colour": "red"}"#),
        ("syntax.json", r#"{"system": "henon""#),
        ("system.json", r#"{"system": "lorenz63"}"#),
    ] {
        let cfg = dir.path().join(name);
        write(&cfg, text);
        let o = basins(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!out.join("basins.bin").exists());
}

#[test]
fn vanishing_field_exits_3_without_outputs() {
    // sin(u) stays below the speed floor of the automatic step on this tiny box
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("still.json");
    write(
        &cfg,
        r#"{"system": "thomas", "params": {"b": 0.0},
            "wrapper": {"type": "none"}, "projection": [0, 1, 2],
            "grid": [{"min": 0, "max": 0.0000000000001, "len": 2},
                     {"min": 0, "max": 0.0000000000001, "len": 2},
                     {"min": 0, "max": 0.0000000000001, "len": 2}],
            "recurrence": {"dt": "auto"}}"#,
    );
    let out = dir.path().join("out");
    let o = basins(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("basins.bin").exists());
    assert!(!out.join("metadata.json").exists());
}

#[test]
fn refine_chains_from_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let coarse_cfg = dir.path().join("coarse.json");
    write(
        &coarse_cfg,
        r#"{"system": "magnetic_pendulum",
            "grid": [{"min": -2, "max": 2, "len": 16}, {"min": -2, "max": 2, "len": 16}],
            "output_dir": "coarse"}"#,
    );
    let o = basins(&["run", "--config", coarse_cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(io::read_attractors_csv(&dir.path().join("coarse/attractors.csv")).unwrap().len(), 3);

    let zoom_cfg = dir.path().join("zoom.json");
    write(
        &zoom_cfg,
        r#"{"system": "magnetic_pendulum",
            "grid": [{"min": 1.8, "max": 1.9, "len": 6}, {"min": 0.0, "max": 0.1, "len": 6}],
            "mode": {"type": "refine", "attractors": "coarse/attractors.csv"},
            "output_dir": "zoom"}"#,
    );
    let o = basins(&["refine", "--config", zoom_cfg.to_str().unwrap(), "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, labels) = io::read_basins(&dir.path().join("zoom/basins.bin")).unwrap();
    assert!(labels.iter().all(|l| (1..=3).contains(l)), "{labels:?}");
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("zoom/metadata.json")).unwrap()).unwrap();
    assert!((meta["details"]["epsilon"].as_f64().unwrap() - 4.0 / 15.0).abs() < 1e-12);
}

#[test]
fn refine_with_empty_attractors_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("attractors.csv"), "");
    let cfg = dir.path().join("refine.json");
    write(
        &cfg,
        r#"{"system": "henon", "mode": {"type": "refine", "attractors": "attractors.csv", "epsilon": 0.1}}"#,
    );
    let o = basins(&["refine", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn benchmark_reports_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.json");
    write(
        &cfg,
        r#"{"system": "magnetic_pendulum",
            "grid": [{"min": -2, "max": 2, "len": 10}, {"min": -2, "max": 2, "len": 10}]}"#,
    );
    let out = dir.path().join("out");
    let o = basins(&["benchmark", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("benchmark.json")).unwrap()).unwrap();
    for m in ["recurrence", "naive"] {
        assert_eq!(b[m]["method"], m);
        assert_eq!(b[m]["grid_size"], 100);
        assert!(b[m]["agreement"].as_f64().unwrap() >= 0.9);
    }
}

#[test]
fn render_slices() {
    let dir = tempfile::tempdir().unwrap();
    let grid = basins_core::Grid::from_ranges(&[(0.0, 1.0, 4), (0.0, 1.0, 3), (0.0, 1.0, 5)]).unwrap();
    let labels: Vec<i32> = (0..grid.len() as i32).map(|i| i % 3 - 1).collect();
    let bin = dir.path().join("basins.bin");
    io::write_basins(&bin, &io::BasinsHeader::new(&grid, 2, "synthetic"), &labels).unwrap();

    let img = dir.path().join("a.ppm");
    let args = ["render", "--input", bin.to_str().unwrap(), "--slice", ":,:,2", "--output", img.to_str().unwrap()];
    let o = basins(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = fs::read(&img).unwrap();
    assert!(bytes.starts_with(b"P6\n4 3\n255\n"));
    assert_eq!(bytes.len(), b"P6\n4 3\n255\n".len() + 4 * 3 * 3);
    assert!(basins(&args).status.success());
    assert_eq!(fs::read(&img).unwrap(), bytes);

    let o = basins(&["render", "--input", bin.to_str().unwrap(), "--slice", ":,:,5", "--output", img.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = basins(&["render", "--input", bin.to_str().unwrap(), "--output", img.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn list_systems_names_every_entry() {
    let o = basins(&["list-systems"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in basins_core::catalog::names() {
        assert!(text.contains(name), "{name}");
    }
    let o = basins(&["list-systems", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 7);
}
