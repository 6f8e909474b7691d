//! The 1-bit reconfigurable surface: array layout, binary configurations,
//! per-element reflection models and the per-subcarrier diagonal response.
//!
//! Elements are indexed row-major over an `n_v × n_h` grid; row 0 is the top
//! row and column 0 the leftmost column seen from the front of the panel.
//! The left half of the columns (`0..n_h/2`) is the LU partition used by the
//! partitioned optimizer, the right half the ED partition.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::SPEED_OF_LIGHT;

/// Default carrier of the prototype, in Hz.
pub const DEFAULT_CARRIER_HZ: f64 = 3.55e9;

/// How the panel is assembled from square tiles of unit cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileLayout {
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub tiles_vertical: usize,
    pub tiles_horizontal: usize,
}

impl Default for TileLayout {
    fn default() -> Self {
        Self {
            tile_rows: 16,
            tile_cols: 16,
            tiles_vertical: 2,
            tiles_horizontal: 2,
        }
    }
}

/// Physical layout of the element grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisArrayGeometry {
    pub n_v: usize,
    pub n_h: usize,
    pub element_spacing_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile_layout: Option<TileLayout>,
}

impl Default for RisArrayGeometry {
    /// Four 16×16 tiles in a 2×2 arrangement at half-wavelength spacing.
    fn default() -> Self {
        Self::from_tiles(TileLayout::default(), half_wavelength(DEFAULT_CARRIER_HZ))
    }
}

/// Half of the free-space wavelength at `freq_hz`.
pub fn half_wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz / 2.0
}

impl RisArrayGeometry {
    pub fn new(n_v: usize, n_h: usize, element_spacing_m: f64) -> Self {
        Self {
            n_v,
            n_h,
            element_spacing_m,
            tile_layout: None,
        }
    }

    pub fn from_tiles(layout: TileLayout, element_spacing_m: f64) -> Self {
        Self {
            n_v: layout.tile_rows * layout.tiles_vertical,
            n_h: layout.tile_cols * layout.tiles_horizontal,
            element_spacing_m,
            tile_layout: Some(layout),
        }
    }

    /// Number of elements `M`.
    pub fn num_elements(&self) -> usize {
        self.n_v * self.n_h
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_v == 0 || self.n_h == 0 {
            return Err(invalid("ris", "n_v and n_h must be positive"));
        }
        ensure_finite("element_spacing_m", self.element_spacing_m)?;
        if self.element_spacing_m <= 0.0 {
            return Err(invalid("element_spacing_m", "must be positive"));
        }
        if let Some(t) = self.tile_layout {
            if t.tile_rows * t.tiles_vertical != self.n_v
                || t.tile_cols * t.tiles_horizontal != self.n_h
            {
                return Err(invalid("tile_layout", "tiles do not cover the n_v × n_h grid"));
            }
        }
        Ok(())
    }

    /// Element centre in panel coordinates `(y, z)`, origin at the panel centre.
    pub fn element_position(&self, index: usize) -> (f64, f64) {
        let row = index / self.n_h;
        let col = index % self.n_h;
        let y = (col as f64 - (self.n_h as f64 - 1.0) / 2.0) * self.element_spacing_m;
        let z = ((self.n_v as f64 - 1.0) / 2.0 - row as f64) * self.element_spacing_m;
        (y, z)
    }
}

/// Which half of a row a partitioned flip targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    /// Columns `0..n_h/2`.
    Left,
    /// Columns `n_h/2..n_h`.
    Right,
}

/// A group flip of configuration bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    Column { index: usize },
    Row { index: usize },
    HalfRow { index: usize, half: Half },
}

impl Move {
    /// Element indices toggled by this move.
    pub fn indices(&self, n_v: usize, n_h: usize) -> Result<Vec<usize>> {
        match *self {
            Move::Column { index } => {
                check_index("column", index, n_h)?;
                Ok((0..n_v).map(|r| r * n_h + index).collect())
            }
            Move::Row { index } => {
                check_index("row", index, n_v)?;
                Ok((0..n_h).map(|c| index * n_h + c).collect())
            }
            Move::HalfRow { index, half } => {
                check_index("row", index, n_v)?;
                if !n_h.is_multiple_of(2) {
                    return Err(invalid("n_h", "half-row flips need an even column count"));
                }
                let cols = match half {
                    Half::Left => 0..n_h / 2,
                    Half::Right => n_h / 2..n_h,
                };
                Ok(cols.map(|c| index * n_h + c).collect())
            }
        }
    }
}

fn check_index(axis: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { axis, index, len })
    }
}

/// Binary configuration `c` of the surface, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RisConfig {
    n_v: usize,
    n_h: usize,
    bits: Vec<bool>,
}

impl RisConfig {
    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        Self {
            n_v,
            n_h,
            bits: vec![false; n_v * n_h],
        }
    }

    pub fn from_bits(n_v: usize, n_h: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != n_v * n_h {
            return Err(Error::DimensionMismatch(format!(
                "configuration has {} bits, grid needs {}",
                bits.len(),
                n_v * n_h
            )));
        }
        Ok(Self { n_v, n_h, bits })
    }

    /// Builds the configuration whose bit-string is the big-endian binary
    /// expansion of `code` (element 0 is the most significant bit).
    pub fn from_index(n_v: usize, n_h: usize, code: u64) -> Self {
        let m = n_v * n_h;
        let bits = (0..m).map(|i| (code >> (m - 1 - i)) & 1 == 1).collect();
        Self { n_v, n_h, bits }
    }

    pub fn parse(n_v: usize, n_h: usize, s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid configuration character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(n_v, n_h, bits)
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.n_h + col]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &RisConfig) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Toggles every bit touched by `mv` in place.
    pub fn apply(&mut self, mv: Move) -> Result<()> {
        for i in mv.indices(self.n_v, self.n_h)? {
            self.bits[i] = !self.bits[i];
        }
        Ok(())
    }

    pub fn flip_column(&self, col: usize) -> Result<Self> {
        self.flipped(Move::Column { index: col })
    }

    pub fn flip_row(&self, row: usize) -> Result<Self> {
        self.flipped(Move::Row { index: row })
    }

    pub fn flip_half_row(&self, row: usize, half: Half) -> Result<Self> {
        self.flipped(Move::HalfRow { index: row, half })
    }

    fn flipped(&self, mv: Move) -> Result<Self> {
        let mut out = self.clone();
        out.apply(mv)?;
        Ok(out)
    }

    /// A schema line, then `n_v` lines of `n_h` comma-separated 0/1 values.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.bits.len() * 2 + 32);
        out.push_str("# schema: ris-pls/ris-config/v1\n");
        for row in self.bits.chunks(self.n_h) {
            let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let row = line
                .split(',')
                .map(|v| match v.trim() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::Parse(format!("invalid CSV cell {other:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n_v = rows.len();
        let n_h = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_h) {
            return Err(Error::Parse("ragged configuration CSV".into()));
        }
        Self::from_bits(n_v, n_h, rows.concat())
    }
}

impl fmt::Display for RisConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct RisConfigRepr {
    n_v: usize,
    n_h: usize,
    bits: String,
}

impl Serialize for RisConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RisConfigRepr {
            n_v: self.n_v,
            n_h: self.n_h,
            bits: self.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RisConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RisConfigRepr::deserialize(d)?;
        RisConfig::parse(repr.n_v, repr.n_h, &repr.bits).map_err(serde::de::Error::custom)
    }
}

/// Frequency dependence of the element reflection phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Dispersion {
    /// Phase is the same on every subcarrier.
    #[default]
    Ideal,
    /// Phase shifts by `slope × (f − f_center)`.
    LinearDispersion { dispersion_rad_per_hz: f64 },
    /// Phase follows a lossless series resonator, `−2·atan(Q·(f/f_r − f_r/f))`,
    /// referenced to its value at the centre frequency.
    Lorentzian {
        resonance_hz: f64,
        quality_factor: f64,
    },
}

/// Reflection model shared by every element of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementModel {
    #[serde(flatten)]
    pub dispersion: Dispersion,
    /// Reflection phase for `c = 0` and `c = 1` at `center_hz`.
    pub phase_at_center: [f64; 2],
    pub amplitude: f64,
    pub center_hz: f64,
}

impl Default for ElementModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ElementModel {
    /// Frequency-flat `{0, π}` unit-amplitude element.
    pub fn ideal() -> Self {
        Self {
            dispersion: Dispersion::Ideal,
            phase_at_center: [0.0, PI],
            amplitude: 1.0,
            center_hz: DEFAULT_CARRIER_HZ,
        }
    }

    pub fn linear(dispersion_rad_per_hz: f64) -> Self {
        Self {
            dispersion: Dispersion::LinearDispersion {
                dispersion_rad_per_hz,
            },
            ..Self::ideal()
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self.dispersion, Dispersion::Ideal)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("amplitude", self.amplitude)?;
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(invalid("amplitude", "must lie in (0, 1]"));
        }
        for &p in &self.phase_at_center {
            ensure_finite("phase_at_center", p)?;
            if !(0.0..=PI).contains(&p) {
                return Err(invalid("phase_at_center", "phases must lie in [0, π]"));
            }
        }
        ensure_finite("center_hz", self.center_hz)?;
        if self.center_hz <= 0.0 {
            return Err(invalid("center_hz", "must be positive"));
        }
        match self.dispersion {
            Dispersion::Ideal => {}
            Dispersion::LinearDispersion {
                dispersion_rad_per_hz,
            } => ensure_finite("dispersion_rad_per_hz", dispersion_rad_per_hz)?,
            Dispersion::Lorentzian {
                resonance_hz,
                quality_factor,
            } => {
                ensure_finite("resonance_hz", resonance_hz)?;
                ensure_finite("quality_factor", quality_factor)?;
                if resonance_hz <= 0.0 || quality_factor <= 0.0 {
                    return Err(invalid("lorentzian", "resonance and Q must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Reflection phase `θ(f, c)`, clamped to `[0, π]`.
    pub fn phase(&self, freq_hz: f64, state: bool) -> Result<f64> {
        let base = self.phase_at_center[state as usize];
        let shifted = match self.dispersion {
            Dispersion::Ideal => return Ok(base),
            Dispersion::LinearDispersion {
                dispersion_rad_per_hz,
            } => base + dispersion_rad_per_hz * (freq_hz - self.center_hz),
            Dispersion::Lorentzian {
                resonance_hz,
                quality_factor,
            } => {
                if freq_hz <= 0.0 || !freq_hz.is_finite() {
                    return Err(invalid("frequency", format!("{freq_hz} Hz is outside the resonator model")));
                }
                let psi = |f: f64| -2.0 * (quality_factor * (f / resonance_hz - resonance_hz / f)).atan();
                base + psi(freq_hz) - psi(self.center_hz)
            }
        };
        Ok(shifted.clamp(0.0, PI))
    }

    /// `α·e^{jθ(f, c)}`.
    pub fn reflection(&self, freq_hz: f64, state: bool) -> Result<Complex64> {
        Ok(Complex64::from_polar(self.amplitude, self.phase(freq_hz, state)?))
    }

    /// Reflection coefficients for both states at each frequency.
    pub fn state_table(&self, freqs: &[f64]) -> Result<Vec<[Complex64; 2]>> {
        freqs
            .iter()
            .map(|&f| Ok([self.reflection(f, false)?, self.reflection(f, true)?]))
            .collect()
    }
}

/// Diagonals of `Φ_c[v]`, one length-`M` vector per subcarrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisResponse {
    pub diagonals: Vec<Vec<Complex64>>,
}

impl RisResponse {
    pub fn num_subcarriers(&self) -> usize {
        self.diagonals.len()
    }

    pub fn num_elements(&self) -> usize {
        self.diagonals.first().map_or(0, Vec::len)
    }
}

/// Evaluates the element model for every element and subcarrier.
pub fn build_response(config: &RisConfig, model: &ElementModel, freqs: &[f64]) -> Result<RisResponse> {
    if freqs.is_empty() {
        return Err(invalid("freqs", "frequency list is empty"));
    }
    model.validate()?;
    let table = model.state_table(freqs)?;
    let diagonals = table
        .iter()
        .map(|states| config.bits().iter().map(|&b| states[b as usize]).collect())
        .collect();
    Ok(RisResponse { diagonals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_panel_is_four_tiles() {
        let g = RisArrayGeometry::default();
        assert_eq!((g.n_v, g.n_h), (32, 32));
        assert_eq!(g.num_elements(), 1024);
        assert!((g.element_spacing_m - 0.04222).abs() < 1e-4);
        g.validate().unwrap();
    }

    #[test]
    fn flip_column_sets_whole_column() {
        let c = RisConfig::zeros(2, 2).flip_column(0).unwrap();
        assert_eq!(c.to_string(), "1010");
    }

    #[test]
    fn flip_row_is_involution() {
        let c = RisConfig::from_index(3, 4, 0b1011_0010_1110);
        assert_eq!(c.flip_row(1).unwrap().flip_row(1).unwrap(), c);
    }

    #[test]
    fn half_row_touches_half_the_columns() {
        let c = RisConfig::zeros(32, 32);
        for half in [Half::Left, Half::Right] {
            let f = c.flip_half_row(7, half).unwrap();
            assert_eq!(f.hamming(&c), 16);
        }
        let left = c.flip_half_row(0, Half::Left).unwrap();
        assert!(left.get(0, 15) && !left.get(0, 16));
    }

    #[test]
    fn out_of_range_flip_is_rejected() {
        let c = RisConfig::zeros(2, 3);
        assert!(matches!(c.flip_column(3), Err(Error::IndexOutOfRange { .. })));
        assert!(c.flip_row(2).is_err());
        assert!(c.flip_half_row(0, Half::Left).is_err());
    }

    #[test]
    fn ideal_response_values() {
        let m = ElementModel::ideal();
        let freqs = [3.54e9, 3.55e9, 3.56e9];
        let zeros = build_response(&RisConfig::zeros(2, 2), &m, &freqs).unwrap();
        for d in &zeros.diagonals {
            assert!(d.iter().all(|&z| z == Complex64::new(1.0, 0.0)));
        }
        let ones = RisConfig::parse(2, 2, "1111").unwrap();
        let r = build_response(&ones, &m, &freqs).unwrap();
        for d in &r.diagonals {
            for z in d {
                assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn linear_dispersion_clamps() {
        let slope = 2.0e-8;
        let m = ElementModel::linear(slope);
        let delta = -5.0e6;
        let expected = (PI + slope * delta).clamp(0.0, PI);
        let got = m.phase(m.center_hz + delta, true).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((expected - (PI - 0.1)).abs() < 1e-12);
        // Positive offset pushes state 1 past π: clamped.
        assert_eq!(m.phase(m.center_hz + 5e6, true).unwrap(), PI);
        assert_eq!(m.phase(m.center_hz - 5e6, false).unwrap(), 0.0);
    }

    #[test]
    fn lorentzian_rejects_nonpositive_frequency() {
        let m = ElementModel {
            dispersion: Dispersion::Lorentzian {
                resonance_hz: 3.5e9,
                quality_factor: 10.0,
            },
            ..ElementModel::ideal()
        };
        assert!(m.phase(0.0, false).is_err());
        assert!(build_response(&RisConfig::zeros(1, 1), &m, &[-1.0]).is_err());
        // Referenced to the centre frequency.
        assert!((m.phase(m.center_hz, true).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn config_text_formats() {
        let c = RisConfig::parse(2, 3, "100101").unwrap();
        assert_eq!(c.to_csv(), "# schema: ris-pls/ris-config/v1\n1,0,0\n1,0,1\n");
        assert_eq!(RisConfig::from_csv(&c.to_csv()).unwrap(), c);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"n_v":2,"n_h":3,"bits":"100101"}"#);
        assert!(RisConfig::parse(2, 3, "10010").is_err());
        assert!(RisConfig::parse(1, 2, "1x").is_err());
    }

    #[test]
    fn element_model_json() {
        let m = ElementModel::linear(1e-8);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains(r#""mode":"linear_dispersion""#));
        let back: ElementModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn flips_are_involutions(code in 0u64..(1 << 16), idx in 0usize..4, which in 0u8..4) {
            let c = RisConfig::from_index(4, 4, code);
            let mv = match which {
                0 => Move::Column { index: idx },
                1 => Move::Row { index: idx },
                2 => Move::HalfRow { index: idx, half: Half::Left },
                _ => Move::HalfRow { index: idx, half: Half::Right },
            };
            let mut d = c.clone();
            d.apply(mv).unwrap();
            prop_assert_ne!(&d, &c);
            d.apply(mv).unwrap();
            prop_assert_eq!(d, c);
        }

        #[test]
        fn unit_magnitude_and_binary_image(code in 0u64..(1 << 12), slope in -1e-7f64..1e-7, k in 1usize..8) {
            let c = RisConfig::from_index(3, 4, code);
            let freqs: Vec<f64> = (0..k).map(|i| 3.55e9 + (i as f64 - 3.0) * 1e6).collect();
            let r = build_response(&c, &ElementModel::linear(slope), &freqs).unwrap();
            for d in &r.diagonals {
                for z in d {
                    prop_assert!((z.norm() - 1.0).abs() < 1e-14);
                    prop_assert!(z.arg() >= -1e-15 && z.arg() <= PI + 1e-15);
                }
            }
            let ideal = build_response(&c, &ElementModel::ideal(), &freqs).unwrap();
            let mut distinct: Vec<Complex64> = Vec::new();
            for d in &ideal.diagonals {
                prop_assert_eq!(d, &ideal.diagonals[0]);
                for z in d {
                    if !distinct.contains(z) {
                        distinct.push(*z);
                    }
                }
            }
            prop_assert!(distinct.len() <= 2);
        }

        #[test]
        fn config_string_round_trip(code in 0u64..(1 << 20)) {
            let c = RisConfig::from_index(4, 5, code);
            prop_assert_eq!(RisConfig::parse(4, 5, &c.to_string()).unwrap(), c);
        }
    }
}
