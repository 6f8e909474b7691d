//! Fixtures shared by the benchmarks.

use ris_pls::{ChannelSet, Placement, RisArrayGeometry, Scenario, TxMode, TxSignal};

/// Default scenario with a surface of `n_v × n_h` elements.
pub fn scenario(n_v: usize, n_h: usize) -> Scenario {
    let mut s = Scenario::default();
    s.ris = RisArrayGeometry::new(n_v, n_h, s.ris.element_spacing_m);
    s
}

/// Tone channels for the LU at 0° and the ED at 15°.
pub fn tone_instance(s: &Scenario) -> (ChannelSet, TxSignal) {
    let tx = s.tx_signal(TxMode::Tone).expect("tone");
    let range = s.grid.user_range_m;
    let ch = s
        .channels(&Placement::new(0.0, range), &Placement::new(15.0, range), &tx)
        .expect("channels");
    (ch, tx)
}
