//! End-to-end tests of the `tagforge` binary: exit codes, file outputs,
//! and printed summaries.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tagforge"))
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(path: &Path, ids: u32, per: u32, extra: &str) {
    let backgrounds = assets().join("backgrounds");
    let text = format!(
        r#"
seed = 42
num_identities = {ids}
images_per_identity = {per}
num_cameras = 4
background_corpus = "{}"
{extra}

[poses]
builtin = ["stand", "walk_0"]

[options]
camera_azimuth_deg = {{ uniform = [0.0, 360.0] }}
camera_depression_deg = {{ uniform = [0.0, 30.0] }}
camera_distance_m = {{ uniform = [3.0, 5.0] }}
light_azimuth_deg = {{ uniform = [0.0, 360.0] }}
light_elevation_deg = {{ uniform = [20.0, 70.0] }}
light_intensity = {{ uniform = [0.6, 1.3] }}
ambient = {{ fixed = 0.25 }}
gamma = {{ uniform = [0.8, 1.2] }}
working_height_px = {{ choice = [128, 256] }}
"#,
        backgrounds.display()
    );
    std::fs::write(path, text).unwrap();
}

#[test]
fn generate_produces_manifest_and_images() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    write_config(&cfg, 2, 2, "");
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("generated 4 images"));
    assert!(out_dir.join("manifest.csv").exists());
    let pngs = std::fs::read_dir(&out_dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, 4);
}

#[test]
fn generate_missing_config_names_path() {
    let out = bin()
        .args(["generate", "--config", "/nonexistent/cfg.toml", "--out", "/tmp/x"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/cfg.toml"));
}

#[test]
fn generate_unused_profile_warns_but_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    write_config(&cfg, 1, 1, "");
    let profile = tmp.path().join("p.tfprof");
    std::fs::write(
        &profile,
        "tagforge-profile v1\nseed 1\ncreated_unix_s 0\nestimator_version x\n\n[gamma]\nsource t\nvalues 1\n1.1\n",
    )
    .unwrap();
    let out = bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--profile")
        .arg(&profile)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("warning"), "no warning in: {}", stdout(&out));
}

#[test]
fn tagforge_seed_env_overrides_config_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    write_config(&cfg, 1, 1, "");
    let run = |dir: &Path, seed: &str| {
        let out = bin()
            .args(["generate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir)
            .env("TAGFORGE_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read_to_string(dir.join("manifest.csv")).unwrap()
    };
    let a = run(&tmp.path().join("a"), "7");
    let b = run(&tmp.path().join("b"), "7");
    let c = run(&tmp.path().join("c"), "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.contains("seed=7"));
    assert!(c.contains("seed=8"));
}

#[test]
fn calibrate_rejects_bad_options_and_small_n() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    write_config(&cfg, 1, 1, "");
    let est = tmp.path().join("x.tfest");

    let out = bin()
        .args(["calibrate", "--option", "swagger", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&est)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown option"));

    let out = bin()
        .args(["calibrate", "--option", "background_ref", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&est)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not estimable"));

    let out = bin()
        .args(["calibrate", "--option", "gamma", "--n", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&est)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

/// calibrate -> estimate -> profile flow, with merge on the second key.
#[test]
fn calibrate_estimate_compare_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    write_config(&cfg, 2, 2, "");

    // A small dataset to estimate over.
    let data_dir = tmp.path().join("data");
    let out = bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&data_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    // Small calibrations (n=24, k=5) for two options.
    let gamma_est = tmp.path().join("gamma.tfest");
    let out = bin()
        .args(["calibrate", "--option", "gamma", "--n", "24", "--lo", "0.5", "--hi", "2.0", "--seed", "99", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&gamma_est)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(gamma_est.exists());

    let dep_est = tmp.path().join("dep.tfest");
    let out = bin()
        .args(["calibrate", "--option", "camera_depression_deg", "--n", "24", "--lo", "0", "--hi", "60", "--seed", "99", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dep_est)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    // Estimate gamma into a fresh profile.
    let profile = tmp.path().join("target.tfprof");
    let csv = tmp.path().join("hist.csv");
    let out = bin()
        .args(["estimate", "--estimator"])
        .arg(&gamma_est)
        .arg("--images")
        .arg(&data_dir)
        .arg("--out")
        .arg(&profile)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("estimated gamma over 4 images"));
    assert!(text.contains(".."), "histogram missing: {text}");
    assert!(text.contains("1 key(s)"));
    assert!(csv.exists());

    // Second estimator merges a second key.
    let out = bin()
        .args(["estimate", "--estimator"])
        .arg(&dep_est)
        .arg("--images")
        .arg(&data_dir)
        .arg("--out")
        .arg(&profile)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("2 key(s)"), "{}", stdout(&out));

    // compare against itself: every W1 exactly 0.
    let out = bin().args(["compare", "--a"]).arg(&profile).arg("--b").arg(&profile).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("gamma"));
    assert!(text.contains("camera_depression_deg"));
    for line in text.lines() {
        assert!(line.contains("W1 = 0"), "nonzero self-distance: {line}");
    }
}

#[test]
fn estimate_empty_dir_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let est = tmp.path().join("e.tfest");
    // A minimal hand-written estimator file (2 pairs, k=1).
    let mut text = String::from("tagforge-estimator v1\noption_key gamma\nextractor thumbnail_16x8\nk 1\npairs 2\ndim 128\n");
    for label in ["1 ", "2 "] {
        text.push_str(label);
        text.push_str(&vec!["0.5"; 128].join(" "));
        text.push('\n');
    }
    std::fs::write(&est, text).unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = bin()
        .args(["estimate", "--estimator"])
        .arg(&est)
        .arg("--images")
        .arg(&empty)
        .arg("--out")
        .arg(tmp.path().join("p.tfprof"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no images"));
}

#[test]
fn compare_disjoint_profiles_fails_and_shifted_gamma_reads_half() {
    let tmp = tempfile::tempdir().unwrap();
    let header = "tagforge-profile v1\nseed 1\ncreated_unix_s 0\nestimator_version x\n";
    let a = tmp.path().join("a.tfprof");
    let b = tmp.path().join("b.tfprof");
    let c = tmp.path().join("c.tfprof");
    std::fs::write(&a, format!("{header}\n[gamma]\nsource t\nvalues 3\n0.8\n1.0\n1.2\n")).unwrap();
    std::fs::write(&b, format!("{header}\n[ambient]\nsource t\nvalues 1\n0.3\n")).unwrap();
    std::fs::write(&c, format!("{header}\n[gamma]\nsource t\nvalues 3\n1.3\n1.5\n1.7\n")).unwrap();

    let out = bin().args(["compare", "--a"]).arg(&a).arg("--b").arg(&b).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("share no option keys"));

    let out = bin().args(["compare", "--a"]).arg(&a).arg("--b").arg(&c).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let w1: f64 = text
        .split("W1 = ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((w1 - 0.5).abs() < 1e-9, "{text}");
}

fn silhouette_rows(png: &Path) -> usize {
    // Person pixels differ from the flat background constant (corner pixel).
    let img = tagforge_core::imageproc::load_image(png).unwrap();
    let corner = img.get(0, 0);
    let mut rows = 0;
    for y in 0..img.height() {
        let hit = (0..img.width()).any(|x| {
            let p = img.get(x, y);
            (0..3).any(|c| (p[c] - corner[c]).abs() > 8.0 / 255.0)
        });
        if hit {
            rows += 1;
        }
    }
    rows
}

#[test]
fn preview_depression_shortens_silhouette_and_gamma_orders_luma() {
    let tmp = tempfile::tempdir().unwrap();
    let level = tmp.path().join("level.png");
    let steep = tmp.path().join("steep.png");
    for (path, dep) in [(&level, 0.0), (&steep, 60.0)] {
        let out = bin()
            .args([
                "preview",
                "--options",
                &format!("camera_depression_deg={dep},camera_distance_m=4.0"),
                "--seed",
                "7",
                "--out",
            ])
            .arg(path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let (h0, h60) = (silhouette_rows(&level), silhouette_rows(&steep));
    assert!(h60 < h0, "rows {h60} !< {h0}");

    let luma = |gamma: f64| {
        let path = tmp.path().join(format!("g{gamma}.png"));
        let out = bin()
            .args(["preview", "--options", &format!("gamma={gamma}"), "--seed", "7", "--out"])
            .arg(&path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        let text = stdout(&out);
        text.split("mean luma ")
            .nth(1)
            .and_then(|s| s.split_whitespace().next())
            .unwrap()
            .parse::<f64>()
            .unwrap()
    };
    assert!(luma(0.5) > luma(2.0), "gamma 0.5 should be brighter");

    let out = bin()
        .args(["preview", "--options", "swagger=1.0", "--out"])
        .arg(tmp.path().join("x.png"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("swagger"));
}

#[test]
fn gamma_variant_runs_and_validates_range() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("variant");
    let out = bin()
        .args(["gamma-variant", "--lo", "0.5", "--hi", "1.5", "--seed", "3", "--images"])
        .arg(assets().join("backgrounds"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("gamma_values.csv").exists());
    assert_eq!(
        std::fs::read_dir(&out_dir)
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
            .count(),
        8
    );

    let out = bin()
        .args(["gamma-variant", "--lo", "1.5", "--hi", "0.5", "--images"])
        .arg(assets().join("backgrounds"))
        .arg("--out")
        .arg(tmp.path().join("bad"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_flags_and_unknown_flags_error() {
    for sub in ["generate", "calibrate", "estimate", "compare", "preview", "gamma-variant"] {
        let out = bin().args([sub, "--help"]).output().unwrap();
        assert!(out.status.success(), "{sub} --help failed");
        let text = stdout(&out);
        assert!(text.contains("--"), "{sub} help lists no flags");
    }
    let out = bin().args(["compare", "--a", "x", "--b", "y", "--frobnicate"]).output().unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("frobnicate"));
}
