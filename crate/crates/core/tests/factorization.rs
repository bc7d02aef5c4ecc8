//! Block-factored runs against brute-force global evolution of every mode.

use herald_core::evolution::{annihilate, apply};
use herald_core::heralding::{project, DetectionPattern};
use herald_core::interferometer::{compose, dft_unitary, embed};
use herald_core::schemes::connected::ghz_rectifier;
use herald_core::schemes::{ConnectedSetup, SchemeKind};
use herald_core::StateVector;

fn global_run(setup: &ConnectedSetup) -> Vec<herald_core::heralding::HeraldOutcome> {
    let ports = setup.block_ports;
    let total = ports * setup.blocks;
    let heralding: Vec<usize> = (0..setup.blocks).map(|b| b * ports).collect();

    let mut state = StateVector::product_input(&vec![1; total]).unwrap();
    let mut blocks = embed(&dft_unitary(ports).unwrap(), &(0..ports).collect::<Vec<_>>(), total).unwrap();
    for b in 1..setup.blocks {
        let modes: Vec<usize> = (b * ports..(b + 1) * ports).collect();
        blocks = compose(&blocks, &embed(&dft_unitary(ports).unwrap(), &modes, total).unwrap()).unwrap();
    }
    state = apply(&blocks, &state).unwrap();
    if setup.subtract {
        for &h in &heralding {
            state = annihilate(&state, h).unwrap();
        }
        state = state.normalized();
    }
    if setup.rectify {
        for b in 0..setup.blocks {
            let r = embed(&ghz_rectifier().unwrap(), &[b * ports + 1, b * ports + 3], total).unwrap();
            state = apply(&r, &state).unwrap();
        }
    }
    let connector = embed(&dft_unitary(setup.blocks).unwrap(), &heralding, total).unwrap();
    state = apply(&connector, &state).unwrap();
    let pattern = DetectionPattern::new().aggregate(heralding, setup.detected).unwrap();
    project(&state, &pattern).unwrap()
}

fn compare(kind: SchemeKind, d: u32) {
    let setup = ConnectedSetup::for_kind(kind, d).unwrap();
    let factored = setup.run_with(true).unwrap();
    let global = global_run(&setup);

    let p_global: f64 = global.iter().map(|o| o.probability).sum();
    assert!(
        (factored.total_probability - p_global).abs() < 1e-12,
        "{kind} d={d}: {} vs {p_global}",
        factored.total_probability
    );
    assert_eq!(factored.outcomes.len(), global.len(), "{kind} d={d}");
    for (f, g) in factored.outcomes.iter().zip(&global) {
        assert_eq!(f.counts(), g.counts(), "{kind} d={d}");
        assert!((f.probability - g.probability).abs() < 1e-12);
        assert!(f.conditional_state.max_abs_diff(&g.conditional_state) < 1e-9, "{kind} d={d}");
    }
}

#[test]
fn bell_blocks() {
    compare(SchemeKind::QuditBell3Sms, 2);
    compare(SchemeKind::QuditBell3Sms, 3);
    compare(SchemeKind::QuditBellInverted, 3);
}

#[test]
fn ghz_blocks() {
    compare(SchemeKind::QuditGhz4Sms, 2);
}

#[test]
fn beam_splitter_blocks() {
    compare(SchemeKind::QuditBell2Sms, 2);
}

#[test]
fn subtracted_blocks() {
    compare(SchemeKind::QuditBell3SmsSubtracted, 3);
    compare(SchemeKind::QuditBellInvertedSubtracted, 3);
    compare(SchemeKind::QuditGhz4SmsSubtracted, 2);
}
