mod common;

use common::*;
use npsq_cli::config::{resolve, AnyConfig, CommandKind};
use npsq_cli::{RunManifest, EXIT_CONFIG, EXIT_GUARD, MANIFEST_FILE, PRESETS};
use npsq_core::protocol::ProtocolConfig;

#[test]
fn presets_parse_and_validate() {
    for (name, _) in PRESETS {
        let cfg = AnyConfig::preset(name).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.kind().default_preset(), name);
    }
}

#[test]
fn protocol_preset_is_the_library_default() {
    match AnyConfig::preset("fig1-protocol").unwrap() {
        AnyConfig::Protocol(c) => assert_eq!(c, ProtocolConfig::default()),
        other => panic!("wrong kind {:?}", other.kind()),
    }
}

#[test]
fn resolve_rejects_conflicting_sources() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.toml", SMALL_PROTOCOL);
    let path = std::path::Path::new(&p);
    assert!(resolve(CommandKind::Protocol, Some(path), Some("fig2")).is_err());
    assert!(resolve(CommandKind::TransferSweep, Some(path), None).is_err());
    assert_eq!(resolve(CommandKind::Protocol, Some(path), None).unwrap().kind(), CommandKind::Protocol);
    assert!(AnyConfig::preset("fig9").is_err());
}

#[test]
fn seed_override_only_touches_protocol() {
    let cfg = AnyConfig::preset("fig1-protocol").unwrap().with_seed(Some(5));
    assert_eq!(cfg.seed(), Some(5));
    assert_eq!(AnyConfig::preset("fig2").unwrap().with_seed(Some(5)).seed(), None);
}

#[test]
fn config_survives_json_roundtrip() {
    for (name, _) in PRESETS {
        let cfg = AnyConfig::preset(name).unwrap();
        let back: AnyConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}

#[test]
fn eta_above_one_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL_PROTOCOL.replace("target_mean = 0.1", "target_mean = 0.1\neta = 1.5");
    let p = write(dir.path(), "bad.toml", &body);
    for cmd in ["validate", "protocol"] {
        let o = npsq(&[cmd, "--config", &p, "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(EXIT_CONFIG as i32), "{cmd}");
        assert!(stderr(&o).contains("detection.eta"), "{}", stderr(&o));
    }
}

#[test]
fn unknown_field_and_bad_preset_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.toml", &SMALL_PROTOCOL.replace("pulses = 3000", "pulses = 3000\nbogus = 1"));
    let out = dir.path().join("o");
    let o = npsq(&["protocol", "--config", &p, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG as i32));
    let o = npsq(&["transfer-sweep", "--preset", "fig9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG as i32));
    let o = npsq(&["transfer-sweep", "--preset", "fig3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG as i32));
}

#[test]
fn leaky_truncation_is_a_guard_abort() {
    let dir = tempfile::tempdir().unwrap();
    let body = PRESETS[1].1.replace("n_max_a = 64", "n_max_a = 32");
    let p = write(dir.path(), "leaky.toml", &body);
    let o = npsq(&["counter-displace", "--config", &p, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_GUARD as i32), "{}", stderr(&o));
}

#[test]
fn single_point_sweep_reports_the_input_state() {
    let dir = tempfile::tempdir().unwrap();
    let r: f64 = 0.6;
    let body = PRESETS[0]
        .1
        .replace("theta_max = 1.5707963267948966", "theta_max = 0.0")
        .replace("r = 1.0", &format!("r = {r}"));
    let p = write(dir.path(), "one.toml", &body);
    let out = dir.path().join("o");
    let o = npsq(&["transfer-sweep", "--config", &p, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = out.join("transfer_sweep.csv");
    let g2 = csv_f64(&csv, "g2_b");
    assert_eq!(g2.len(), 1);
    // Mode 2 starts in the port's coherent state; mode 1 carries the squeezed vacuum.
    assert!((g2[0] - 1.0).abs() < 1e-9, "{}", g2[0]);
    let dx = csv_f64(&csv, "delta_x_a")[0];
    assert!((dx - (-r).exp() / 2f64.sqrt()).abs() < 1e-9, "{dx}");
}

#[test]
fn quadrature_phase_coherent_input_stays_classical() {
    let dir = tempfile::tempdir().unwrap();
    let body = PRESETS[0].1.replace("r = 1.0", "r = 0.0")
        .replace("alpha = [0.0, 0.0]", "alpha = [0.0, 2.0]");
    let p = write(dir.path(), "coh.toml", &body);
    let out = dir.path().join("o");
    let o = npsq(&["transfer-sweep", "--config", &p, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for g in csv_f64(&out.join("transfer_sweep.csv"), "g2_b") {
        assert!(g >= 1.0 - 1e-3, "{g}");
    }
}

#[test]
fn same_seed_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.toml", SMALL_PROTOCOL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(npsq(&["protocol", "--config", &p, "--out", a.to_str().unwrap()]).status.success());
    let o = npsq(&["protocol", "--config", &p, "--workers", "1", "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (fa, fb) = (outputs(&a), outputs(&b));
    assert!(fa.contains_key("pulses.csv") && fa.contains_key("summary.json") && fa.contains_key("histogram.json"));
    assert_eq!(fa, fb);
    let c = dir.path().join("c");
    assert!(npsq(&["protocol", "--config", &p, "--seed", "78", "--out", c.to_str().unwrap()]).status.success());
    assert_ne!(fa["pulses.csv"], outputs(&c)["pulses.csv"]);
}

#[test]
fn manifest_records_config_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = npsq(&["counter-displace", "--plot", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = RunManifest::load(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.command, CommandKind::CounterDisplace);
    assert_eq!(m.config, AnyConfig::preset("fig3").unwrap());
    assert!(m.plot);
    for a in &m.artifacts {
        assert!(out.join(&a.path).exists(), "{}", a.path);
    }
    assert!(m.artifacts.iter().any(|a| a.path.ends_with(".svg")));
    let svg = std::fs::read_to_string(out.join("counter_g2.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}
