use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use npsq_core::protocol::{
    counter_displace_sweep, displaced_squeezed_moments, run_ensemble, transfer_sweep, CounterSweepConfig,
    EnsembleRun, EnsembleSummary, ProtocolConfig, PulseRecord, Stage, TransferSweepConfig,
};
use serde::Serialize;

use crate::config::AnyConfig;
use crate::output::{OutputDir, RunManifest, MANIFEST_SCHEMA_VERSION};
use crate::plot::{line_plot, Series};
use crate::CliError;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub plot: bool,
    pub workers: Option<usize>,
}

/// Validates and runs one configuration, writing every artifact and the manifest into `opts.out`.
pub fn execute(cfg: AnyConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let t0 = Instant::now();
    let mut out = OutputDir::create(&opts.out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cfg {
        AnyConfig::TransferSweep(c) => write_transfer(c, opts.plot, &mut out),
        AnyConfig::CounterDisplace(c) => write_counter(c, opts.plot, &mut out),
        AnyConfig::Protocol(c) => write_protocol(c, opts.plot, &mut out),
    })?;
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        command: cfg.kind(),
        engine_version: npsq_core::VERSION.to_string(),
        seed: cfg.seed(),
        plot: opts.plot,
        config: cfg,
        started_unix,
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
        artifacts: Vec::new(),
    };
    out.finish(manifest)
}

/// Re-runs the command and resolved config stored in a manifest.
pub fn rerun(manifest: &Path, out: &Path, workers: Option<usize>) -> Result<RunManifest, CliError> {
    let m = RunManifest::load(manifest)?;
    let opts = RunOptions {
        out: out.to_path_buf(),
        plot: m.plot,
        workers,
    };
    execute(m.config, &opts)
}

fn cell(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(cell).unwrap_or_default()
}

#[derive(Serialize)]
struct TransferRow {
    theta: f64,
    g2_b: f64,
    fano_b: f64,
    delta_x_a: f64,
    var_x_a: f64,
    var_p_a: f64,
    min_variance_a: f64,
    mean_b: f64,
    commutator_residual: f64,
    leakage: f64,
    guard: &'static str,
}

fn write_transfer(cfg: &TransferSweepConfig, plot: bool, out: &mut OutputDir) -> Result<(), CliError> {
    let sweep = transfer_sweep(cfg)?;
    let rows: Vec<TransferRow> = sweep
        .points
        .iter()
        .map(|p| TransferRow {
            theta: p.theta,
            g2_b: p.g2_b,
            fano_b: p.fano_b,
            delta_x_a: p.var_x_a.sqrt(),
            var_x_a: p.var_x_a,
            var_p_a: p.var_p_a,
            min_variance_a: p.min_variance_a,
            mean_b: p.mean_b,
            commutator_residual: p.commutator_residual,
            leakage: p.leakage,
            guard: if p.guard_passed { "pass" } else { "fail" },
        })
        .collect();
    out.csv("transfer", "transfer_sweep.csv", &rows)?;
    out.json("transfer", "transfer_sweep.json", &sweep)?;
    if plot {
        let g2 = Series {
            label: "g2(0) mode 2".into(),
            points: sweep.points.iter().map(|p| (p.theta, p.g2_b)).collect(),
        };
        out.text("plot", "transfer_g2.svg", &line_plot("Mode-2 g2(0)", "theta", "g2(0)", &[g2])?)?;
        let dx = Series {
            label: "Delta x mode 1".into(),
            points: sweep.points.iter().map(|p| (p.theta, p.var_x_a.sqrt())).collect(),
        };
        out.text("plot", "transfer_dx.svg", &line_plot("Mode-1 Delta x", "theta", "Delta x", &[dx])?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CounterRow {
    fraction: f64,
    n_target: f64,
    alpha_prime_abs: f64,
    alpha_prime_re: f64,
    alpha_prime_im: f64,
    mean: f64,
    g2: f64,
    fano: f64,
}

fn write_counter(cfg: &CounterSweepConfig, plot: bool, out: &mut OutputDir) -> Result<(), CliError> {
    let sweep = counter_displace_sweep(cfg)?;
    let rows: Vec<CounterRow> = sweep
        .points
        .iter()
        .map(|p| CounterRow {
            fraction: p.fraction,
            n_target: p.n_target,
            alpha_prime_abs: p.alpha_prime[0].hypot(p.alpha_prime[1]),
            alpha_prime_re: p.alpha_prime[0],
            alpha_prime_im: p.alpha_prime[1],
            mean: p.mean,
            g2: p.g2,
            fano: p.fano,
        })
        .collect();
    out.csv("counter_displacement", "counter_displace.csv", &rows)?;
    out.json("counter_displacement", "counter_displace.json", &sweep)?;
    if plot {
        let g2 = Series {
            label: "g2(0)".into(),
            points: rows.iter().map(|r| (r.alpha_prime_abs, r.g2)).collect(),
        };
        out.text("plot", "counter_g2.svg", &line_plot("g2(0) after D(alpha')", "|alpha'|", "g2(0)", &[g2])?)?;
        let fano = Series {
            label: "Fano".into(),
            points: rows.iter().map(|r| (r.alpha_prime_abs, r.fano)).collect(),
        };
        out.text("plot", "counter_fano.svg", &line_plot("Fano factor after D(alpha')", "|alpha'|", "F", &[fano])?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PulseRow {
    pulse: u64,
    copy: u64,
    alpha_i_re: f64,
    alpha_i_im: f64,
    r_i: f64,
    rejections: u32,
    mean_t: f64,
    mean_a: f64,
    d1: u32,
    d2: u32,
}

#[derive(Serialize)]
struct ProtocolSummary<'a> {
    ensemble: &'a EnsembleSummary,
    classical_null: Option<&'a EnsembleSummary>,
}

const STAGES: [(Stage, &str); 5] = [
    (Stage::RhoT, "t"),
    (Stage::RhoA, "a"),
    (Stage::RhoB, "b"),
    (Stage::RhoBPrime, "bp"),
    (Stage::RhoBDoublePrime, "bpp"),
];

fn copy_table(records: &[PulseRecord]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = [
        "copy", "alpha_i_re", "alpha_i_im", "r_i", "rejections", "aborted", "theta_reached",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for (_, tag) in STAGES {
        for col in ["mean", "fano", "g2", "min_variance", "leakage"] {
            header.push(format!("{col}_{tag}"));
        }
    }
    header.extend(
        [
            "commutator_residual_b",
            "var_x_mode1",
            "var_p_mode1",
            "min_variance_mode1",
            "alpha_prime_re",
            "alpha_prime_im",
            "eta",
            "shots",
            "s1",
            "s2",
            "coincidences",
            "g2_counts",
            "post_selected",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let rows = records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.index.to_string(),
                cell(r.alpha_i[0]),
                cell(r.alpha_i[1]),
                cell(r.r_i),
                r.rejections.to_string(),
                r.aborted.clone().unwrap_or_default(),
                cell(r.theta_reached),
            ];
            for (stage, _) in STAGES {
                match r.stage(stage) {
                    Some(s) => row.extend([cell(s.mean_photons), opt(s.fano), opt(s.g2), cell(s.min_variance), cell(s.leakage)]),
                    None => row.extend(std::iter::repeat_n(String::new(), 5)),
                }
            }
            row.push(opt(r.stage(Stage::RhoB).and_then(|s| s.commutator_residual)));
            let m1 = r.mode1_after_transfer;
            row.extend([
                opt(m1.map(|q| q.var_x)),
                opt(m1.map(|q| q.var_p)),
                opt(m1.map(|q| q.min_variance)),
                opt(r.alpha_prime.map(|a| a[0])),
                opt(r.alpha_prime.map(|a| a[1])),
                opt(r.eta),
            ]);
            match r.detection {
                Some(d) => row.extend([
                    d.shots.to_string(),
                    d.s1.to_string(),
                    d.s2.to_string(),
                    d.c.to_string(),
                    opt(d.g2),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
            row.push(r.post_selected.map(|b| b.to_string()).unwrap_or_default());
            row
        })
        .collect();
    (header, rows)
}

fn pulse_rows(cfg: &ProtocolConfig, run: &EnsembleRun) -> Vec<PulseRow> {
    let ph = cfg.source.squeeze_phase;
    run.draws
        .iter()
        .zip(&run.clicks)
        .map(|(d, c)| PulseRow {
            pulse: c.pulse,
            copy: c.copy,
            alpha_i_re: d.alpha.re,
            alpha_i_im: d.alpha.im,
            r_i: d.r,
            rejections: d.rejections,
            mean_t: displaced_squeezed_moments(d.alpha, d.r, ph).0,
            mean_a: displaced_squeezed_moments(cfg.alpha() + d.alpha, d.r, ph).0,
            d1: c.d1,
            d2: c.d2,
        })
        .collect()
}

fn write_protocol(cfg: &ProtocolConfig, plot: bool, out: &mut OutputDir) -> Result<(), CliError> {
    let run = run_ensemble(cfg)?;
    let null = if cfg.classical_null {
        let null_cfg = ProtocolConfig {
            source: cfg.source.without_squeezing(),
            ..cfg.clone()
        };
        Some(run_ensemble(&null_cfg)?)
    } else {
        None
    };
    out.csv("detection", "pulses.csv", &pulse_rows(cfg, &run))?;
    let (header, rows) = copy_table(&run.records);
    out.csv_table("pipeline", "copies.csv", &header, &rows)?;
    if let Some(h) = &run.histogram {
        out.json("histogram", "histogram.json", h)?;
    }
    if let Some(h) = null.as_ref().and_then(|n| n.histogram.as_ref()) {
        out.json("histogram", "histogram_null.json", h)?;
    }
    let summary = ProtocolSummary {
        ensemble: &run.summary,
        classical_null: null.as_ref().map(|n| &n.summary),
    };
    out.json("summary", "summary.json", &summary)?;
    if plot {
        let mut series = Vec::new();
        if let Some(h) = &run.histogram {
            series.push(Series {
                label: "squeezed ensemble".into(),
                points: h.bins.iter().map(|b| (b.lag as f64, b.g2)).collect(),
            });
        }
        if let Some(h) = null.as_ref().and_then(|n| n.histogram.as_ref()) {
            series.push(Series {
                label: "classical null".into(),
                points: h.bins.iter().map(|b| (b.lag as f64, b.g2)).collect(),
            });
        }
        if !series.is_empty() {
            out.text("plot", "histogram.svg", &line_plot("Coincidence histogram", "lag (pulses)", "g2(k)", &series)?)?;
        }
    }
    Ok(())
}
