#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

pub fn npsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npsq"))
        .args(args)
        .output()
        .expect("npsq binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small, fast ensemble on the full pipeline.
pub const SMALL_PROTOCOL: &str = r#"
command = "protocol"
schema_version = 1
n_max_a = 50
n_max_b = 80
alpha = [3.0, 0.0]
theta = 1.5707963267948966
phi = 0.0
n_target = 15.0
pulses = 3000
copies = 2
seed = 77
classical_null = true

[port]
amplitude = [5.0, 0.0]

[detection]
method = "attenuate_spd"
target_mean = 0.1

[source.alpha]
law = "complex_gaussian"
mean = [0.4, 0.0]
sigma = 0.2

[source.squeeze]
law = "uniform"
min = 0.3
max = 0.5
"#;

pub fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

/// Every CSV and JSON output of a run except the manifest, by file name.
pub fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        let keep = name.ends_with(".csv") || name.ends_with(".json");
        if keep && name != "manifest.json" {
            map.insert(name, std::fs::read(&p).unwrap());
        }
    }
    map
}

pub fn csv_column(path: &Path, column: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == column).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

pub fn csv_f64(path: &Path, column: &str) -> Vec<f64> {
    csv_column(path, column).iter().map(|s| s.parse().unwrap()).collect()
}
