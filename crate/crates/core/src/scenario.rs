//! A complete simulation scenario: geometry, surface, element model,
//! channel parameters, waveform and noise level. Scenarios are plain JSON
//! documents; their SHA-256 digest identifies the codebooks built from them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::geometry::{build_default_geometry, synthesize_channels, ChannelParams, ChannelSet, Placement, SectorGrid};
use crate::ofdm::{build_prs_grid, Numerology, TxMode, TxSignal};
use crate::optimizers::{uniform_config, Evaluator};
use crate::ris::{ElementModel, RisArrayGeometry};
use crate::secrecy::from_db;

/// LU SNR of the uniform surface at the reference placement used to derive
/// the default noise power.
pub const REFERENCE_SNR_DB: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub tx: Placement,
    pub grid: SectorGrid,
    pub ris: RisArrayGeometry,
    pub element: ElementModel,
    pub channel: ChannelParams,
    pub numerology: Numerology,
    pub num_rb: usize,
    pub prs_seed: u64,
    pub tx_mode: TxMode,
    /// Noise power per subcarrier; derived from [`REFERENCE_SNR_DB`] when
    /// absent.
    pub n0: Option<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        let (tx, grid) = build_default_geometry();
        Self {
            tx,
            grid,
            ris: RisArrayGeometry::default(),
            element: ElementModel::ideal(),
            channel: ChannelParams::default(),
            numerology: Numerology::default(),
            num_rb: 52,
            prs_seed: 0,
            tx_mode: TxMode::Tone,
            n0: None,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.tx.validate()?;
        self.grid.validate()?;
        self.ris.validate()?;
        self.element.validate()?;
        self.channel.validate()?;
        self.numerology.validate()?;
        if self.num_rb == 0 {
            return Err(invalid("num_rb", "at least one resource block is required"));
        }
        if let Some(n0) = self.n0 {
            ensure_finite("n0", n0)?;
            if n0 <= 0.0 {
                return Err(invalid("n0", "noise power must be positive"));
            }
        }
        Ok(())
    }

    /// Same scenario with another channel seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.channel.rng_seed = seed;
        s
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Transmit signal of `mode`; PRS signals keep only occupied subcarriers.
    pub fn tx_signal(&self, mode: TxMode) -> Result<TxSignal> {
        let carrier = self.channel.carrier_hz;
        match mode {
            TxMode::Tone => Ok(TxSignal::tone(carrier, self.numerology.subcarrier_spacing_hz())),
            TxMode::Prs => {
                let grid = build_prs_grid(self.numerology, self.num_rb, carrier, self.prs_seed)?;
                Ok(TxSignal::from_grid(&grid, 0)?.compact())
            }
        }
    }

    pub fn channels(&self, lu: &Placement, ed: &Placement, tx: &TxSignal) -> Result<ChannelSet> {
        synthesize_channels(&self.tx, lu, ed, &self.ris, &self.channel, &tx.freqs)
    }

    pub fn evaluator(&self, channels: &ChannelSet, tx: &TxSignal) -> Result<Evaluator> {
        Evaluator::new(channels, &self.element, tx, self.ris.n_v, self.ris.n_h)
    }

    /// Noise power: the configured value, or the level giving the uniform
    /// surface a 10 dB tone SNR at the LU placed on broadside at the user
    /// range.
    pub fn noise_power(&self) -> Result<f64> {
        if let Some(n0) = self.n0 {
            return Ok(n0);
        }
        let tx = self.tx_signal(TxMode::Tone)?;
        let reference = Placement::new(0.0, self.grid.user_range_m);
        let channels = self.channels(&reference, &reference, &tx)?;
        let eval = self.evaluator(&channels, &tx)?;
        let p = eval.powers(&uniform_config(self.ris.n_v, self.ris.n_h))?.p_lu;
        if p <= 0.0 {
            return Err(Error::DimensionMismatch("reference LU power is zero; set n0 explicitly".into()));
        }
        Ok(p / from_db(REFERENCE_SNR_DB))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secrecy::to_db;

    #[test]
    fn default_scenario_round_trips() {
        let s = Scenario::default();
        s.validate().unwrap();
        let back = Scenario::from_json(&s.to_json_pretty().unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.digest(), s.digest());
        assert_ne!(s.with_seed(9).digest(), s.digest());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let s = Scenario::from_json(r#"{"n0": 1e-9, "ris": {"n_v": 4, "n_h": 4, "element_spacing_m": 0.04}}"#).unwrap();
        assert_eq!(s.n0, Some(1e-9));
        assert_eq!(s.ris.num_elements(), 16);
        assert_eq!(s.grid, SectorGrid::default());
        assert!(Scenario::from_json(r#"{"n0": -1}"#).is_err());
    }

    #[test]
    fn calibrated_noise_gives_reference_snr() {
        let s = Scenario {
            ris: RisArrayGeometry::new(8, 8, 0.0422),
            ..Scenario::default()
        };
        let n0 = s.noise_power().unwrap();
        let tx = s.tx_signal(TxMode::Tone).unwrap();
        let p = Placement::new(0.0, 7.0);
        let ch = s.channels(&p, &p, &tx).unwrap();
        let lu = s.evaluator(&ch, &tx).unwrap().powers(&uniform_config(8, 8)).unwrap().p_lu;
        assert!((to_db(lu / n0) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn prs_signal_is_compacted() {
        let s = Scenario::default();
        let prs = s.tx_signal(TxMode::Prs).unwrap();
        assert_eq!(prs.len(), 312);
        assert!(prs.occupied.iter().all(|&o| o));
        assert_eq!(s.tx_signal(TxMode::Tone).unwrap().len(), 1);
    }
}
