use approx::assert_relative_eq;
use npsq_core::channels::{displaced_squeezed, pure_loss};
use npsq_core::detection::{g2_operator, NumberStats};
use npsq_core::fock::serial::{density_from_json, density_to_json};
use npsq_core::fock::{DensityOperator, ExpmOptions, FockSpace};
use npsq_core::protocol::{counter_displace_sweep, CounterSweepConfig, ProtocolConfig};
use npsq_core::C64;

#[test]
fn density_json_round_trip_is_exact() {
    let space = FockSpace::new(30).unwrap();
    let psi = displaced_squeezed(space, C64::new(1.2, -0.4), 0.3, 0.7, &ExpmOptions::default()).unwrap();
    let rho = pure_loss(&DensityOperator::from_pure(&psi), 0.6).unwrap();
    let back = density_from_json(&density_to_json(&rho).unwrap()).unwrap();
    assert_eq!(back.matrix(), rho.matrix());
}

#[test]
fn loss_scales_mean_and_keeps_g2() {
    let space = FockSpace::new(60).unwrap();
    let rho = DensityOperator::from_pure(
        &displaced_squeezed(space, C64::new(2.0, 0.0), 0.4, 0.0, &ExpmOptions::default()).unwrap(),
    );
    let out = pure_loss(&rho, 0.25).unwrap();
    let (m0, m1) = (NumberStats::of(&rho, 0).unwrap().mean, NumberStats::of(&out, 0).unwrap().mean);
    assert_relative_eq!(m1, 0.25 * m0, epsilon = 1e-12);
    assert_relative_eq!(g2_operator(&out, 0).unwrap(), g2_operator(&rho, 0).unwrap(), epsilon = 1e-12);
    assert_relative_eq!(out.trace(), 1.0, epsilon = 1e-12);
}

#[test]
fn default_protocol_config_is_valid_and_serializes() {
    let cfg = ProtocolConfig::default();
    cfg.validate().unwrap();
    let back: ProtocolConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn counter_ladder_on_coherent_transfer_keeps_fano() {
    let cfg: CounterSweepConfig = serde_json::from_value(serde_json::json!({
        "schema_version": 1,
        "n_max_a": 30,
        "n_max_b": 80,
        "input": {},
        "port": {"amplitude": [5.0, 0.0]},
        "theta": 0.2,
        "fractions": [1.0, 0.9]
    }))
    .unwrap();
    let sweep = counter_displace_sweep(&cfg).unwrap();
    assert_eq!(sweep.points.len(), 2);
    for p in &sweep.points {
        assert_relative_eq!(p.mean, p.n_target, epsilon = 1e-6);
        assert!((p.g2 - (1.0 + (p.fano - 1.0) / p.mean)).abs() < 1e-10);
    }
}
