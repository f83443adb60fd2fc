//! Shared fixtures for the criterion benches.

use newsvm::features::Assembled;
use newsvm::synth::{generate, SynthOutput};
use newsvm::{assemble, FeatureLayout, SynthConfig};

pub fn synth(days: usize) -> SynthOutput {
    generate(&SynthConfig::planted(7, days, 5, 1)).expect("planted config is valid")
}

pub fn assembled(out: &SynthOutput, lag: usize) -> Assembled {
    let signals = out.signals().expect("synthetic corpus aggregates");
    let layout = FeatureLayout::new(out.sources.len(), lag).expect("layout");
    assemble(&out.stocks[0], &signals, layout).expect("assemble")
}
