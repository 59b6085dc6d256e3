//! Halving dz on the guided 5 cm transit at the default 50 µm step.

use std::path::Path;

use ramanprop::beams::probe_field;
use ramanprop::io::parse_config;
use ramanprop::io::run::{doppler_model, propagate_options};
use ramanprop::solver::{propagate, ComplexField2D, SplitOrder, StepPlan};

const HALVING_TOLERANCE: f64 = 1e-4;

fn output(order: SplitOrder, dz: f64) -> ComplexField2D {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets/guided_gaussian.toml");
    let config = parse_config(&path).unwrap().config;
    let mut grid = config.grid.unwrap();
    grid.dz = dz;
    let probe = probe_field(config.probe.as_ref().unwrap(), &grid).unwrap();
    let plan = StepPlan::new(order, &grid, config.params.wavenumber());
    propagate(
        probe,
        &config.control.unwrap(),
        &doppler_model(&config),
        &grid,
        &plan,
        &propagate_options(&config),
        &mut |_, _| Ok(()),
    )
    .unwrap()
    .output
}

fn halving_change(order: SplitOrder) -> f64 {
    let coarse = output(order, 0.005);
    let fine = output(order, 0.0025);
    coarse.relative_l2_distance(&fine)
}

#[test]
fn strang_halving_changes_output_below_tolerance() {
    let change = halving_change(SplitOrder::Second);
    assert!(change < HALVING_TOLERANCE, "order 2: relative L2 change {change:.3e}");
}

#[test]
fn fourth_order_halving_changes_output_below_tolerance() {
    let change = halving_change(SplitOrder::Fourth);
    assert!(change < HALVING_TOLERANCE, "order 4: relative L2 change {change:.3e}");
}
