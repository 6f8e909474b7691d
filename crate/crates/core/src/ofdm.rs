//! Transmit waveforms (single tone and a PRS-style comb resource grid),
//! OFDM modulation with cyclic prefix, and the per-subcarrier received
//! signal `y[v] = (h_d[v] + h_RIS[v]·Φ_c[v]·g_RIS[v])·x[v] + n[v]`.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::geometry::ChannelSet;
use crate::ris::RisResponse;
use crate::User;

pub const SUBCARRIERS_PER_RB: usize = 12;
pub const BASE_SPACING_HZ: f64 = 15_000.0;
/// Offset of the narrowband probe tone from the carrier.
pub const TONE_OFFSET_HZ: f64 = 100_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CpMode {
    Normal,
    #[default]
    Extended,
}

/// 5G NR numerology: spacing `2^μ × 15 kHz`, `2^μ` slots per subframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Numerology {
    pub mu: u8,
    #[serde(default)]
    pub cp_mode: CpMode,
}

impl Default for Numerology {
    fn default() -> Self {
        Self {
            mu: 2,
            cp_mode: CpMode::Extended,
        }
    }
}

impl Numerology {
    pub fn new(mu: u8, cp_mode: CpMode) -> Result<Self> {
        let n = Self { mu, cp_mode };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu > 4 {
            return Err(invalid("mu", format!("numerology {} is outside 0..=4", self.mu)));
        }
        Ok(())
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        (1u32 << self.mu) as f64 * BASE_SPACING_HZ
    }

    pub fn symbols_per_slot(&self) -> usize {
        match self.cp_mode {
            CpMode::Normal => 14,
            CpMode::Extended => 12,
        }
    }

    pub fn slots_per_subframe(&self) -> usize {
        1 << self.mu
    }

    /// Occupied subcarriers per resource block of the PRS comb, `12/μ`.
    pub fn prs_comb_occupancy(&self) -> Result<usize> {
        if self.mu == 0 {
            return Err(invalid("mu", "the PRS comb 12/μ is undefined for μ = 0"));
        }
        Ok(SUBCARRIERS_PER_RB / self.mu as usize)
    }
}

/// Bandwidth of `num_rb` resource blocks, `RB × 12 × 2^μ × 15 kHz`.
pub fn bandwidth_hz(numerology: Numerology, num_rb: usize) -> f64 {
    (num_rb * SUBCARRIERS_PER_RB) as f64 * numerology.subcarrier_spacing_hz()
}

/// Frequency of subcarrier `k` on a grid of `total` subcarriers centred on
/// `center_hz`; subcarrier `total/2` sits on the centre.
pub fn subcarrier_frequency(center_hz: f64, spacing_hz: f64, total: usize, k: usize) -> f64 {
    center_hz + (k as f64 - (total / 2) as f64) * spacing_hz
}

/// OFDM frequency/time grid for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceGrid {
    pub numerology: Numerology,
    pub num_resource_blocks: usize,
    pub occupied_per_rb: usize,
    pub occupied_mask: Vec<bool>,
    /// `symbols[k][s]`: subcarrier `k`, OFDM symbol `s`.
    pub symbols: Vec<Vec<Complex64>>,
    pub center_freq_hz: f64,
}

impl ResourceGrid {
    /// All-zero grid with nothing occupied.
    pub fn empty(numerology: Numerology, num_rb: usize, center_freq_hz: f64) -> Result<Self> {
        numerology.validate()?;
        if num_rb == 0 {
            return Err(invalid("num_rb", "at least one resource block is required"));
        }
        let total = num_rb * SUBCARRIERS_PER_RB;
        Ok(Self {
            numerology,
            num_resource_blocks: num_rb,
            occupied_per_rb: 0,
            occupied_mask: vec![false; total],
            symbols: vec![vec![Complex64::new(0.0, 0.0); numerology.symbols_per_slot()]; total],
            center_freq_hz,
        })
    }

    pub fn total_subcarriers(&self) -> usize {
        self.num_resource_blocks * SUBCARRIERS_PER_RB
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols.first().map_or(0, Vec::len)
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied_mask.iter().filter(|&&o| o).count()
    }

    pub fn bandwidth_hz(&self) -> f64 {
        bandwidth_hz(self.numerology, self.num_resource_blocks)
    }

    pub fn subcarrier_freqs(&self) -> Vec<f64> {
        let total = self.total_subcarriers();
        let df = self.numerology.subcarrier_spacing_hz();
        (0..total)
            .map(|k| subcarrier_frequency(self.center_freq_hz, df, total, k))
            .collect()
    }

    /// Subcarrier index nearest to `freq_hz`.
    pub fn nearest_subcarrier(&self, freq_hz: f64) -> usize {
        let total = self.total_subcarriers();
        let df = self.numerology.subcarrier_spacing_hz();
        let k = ((freq_hz - self.center_freq_hz) / df).round() + (total / 2) as f64;
        k.clamp(0.0, (total - 1) as f64) as usize
    }

    /// `subcarrier,symbol,re,im` rows behind a schema line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema: ris-pls/resource-grid/v1\nsubcarrier,symbol,re,im\n");
        for (k, row) in self.symbols.iter().enumerate() {
            for (s, z) in row.iter().enumerate() {
                out.push_str(&format!("{k},{s},{:e},{:e}\n", z.re, z.im));
            }
        }
        out
    }
}

fn qpsk<R: Rng>(rng: &mut R) -> Complex64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let re = if rng.random::<bool>() { a } else { -a };
    let im = if rng.random::<bool>() { a } else { -a };
    Complex64::new(re, im)
}

/// PRS-style grid: a comb of `12/μ` evenly spaced occupied subcarriers per
/// resource block, filled with seeded unit-modulus QPSK on every symbol.
pub fn build_prs_grid(numerology: Numerology, num_rb: usize, center_freq_hz: f64, seed: u64) -> Result<ResourceGrid> {
    let occupied_per_rb = numerology.prs_comb_occupancy()?;
    ensure_finite("center_freq_hz", center_freq_hz)?;
    let mut grid = ResourceGrid::empty(numerology, num_rb, center_freq_hz)?;
    grid.occupied_per_rb = occupied_per_rb;
    grid.occupied_mask = prs_comb_mask(numerology, num_rb)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (row, &occ) in grid.symbols.iter_mut().zip(&grid.occupied_mask) {
        if occ {
            for z in row.iter_mut() {
                *z = qpsk(&mut rng);
            }
        }
    }
    Ok(grid)
}

pub fn prs_comb_mask(numerology: Numerology, num_rb: usize) -> Result<Vec<bool>> {
    let step = SUBCARRIERS_PER_RB / numerology.prs_comb_occupancy()?;
    Ok((0..num_rb * SUBCARRIERS_PER_RB)
        .map(|k| (k % SUBCARRIERS_PER_RB).is_multiple_of(step))
        .collect())
}

/// FFT length: smallest power of two covering the grid.
pub fn fft_size(total_subcarriers: usize) -> usize {
    total_subcarriers.next_power_of_two()
}

/// Cyclic-prefix length in samples: a quarter symbol for extended CP, the
/// 144/2048 ratio for normal CP.
pub fn cp_length(numerology: Numerology, nfft: usize) -> usize {
    match numerology.cp_mode {
        CpMode::Extended => nfft / 4,
        CpMode::Normal => nfft * 144 / 2048,
    }
}

fn fft_bin(k: usize, total: usize, nfft: usize) -> usize {
    (k + nfft - total / 2) % nfft
}

/// Unitary IFFT per OFDM symbol with cyclic-prefix insertion.
pub fn modulate(grid: &ResourceGrid) -> Vec<Complex64> {
    let total = grid.total_subcarriers();
    let nfft = fft_size(total);
    let cp = cp_length(grid.numerology, nfft);
    let ifft = FftPlanner::new().plan_fft_inverse(nfft);
    let scale = 1.0 / (nfft as f64).sqrt();
    let mut out = Vec::with_capacity(grid.num_symbols() * (nfft + cp));
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for s in 0..grid.num_symbols() {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (k, row) in grid.symbols.iter().enumerate() {
            buf[fft_bin(k, total, nfft)] = row[s];
        }
        ifft.process(&mut buf);
        buf.iter_mut().for_each(|z| *z *= scale);
        out.extend_from_slice(&buf[nfft - cp..]);
        out.extend_from_slice(&buf);
    }
    out
}

/// Strips the cyclic prefixes and FFTs each symbol back onto the grid.
/// The returned occupancy mask is the PRS comb of `numerology` (every
/// subcarrier for μ = 0).
pub fn demodulate(samples: &[Complex64], numerology: Numerology, num_rb: usize, center_freq_hz: f64) -> Result<ResourceGrid> {
    let mut grid = ResourceGrid::empty(numerology, num_rb, center_freq_hz)?;
    let total = grid.total_subcarriers();
    let nfft = fft_size(total);
    let cp = cp_length(numerology, nfft);
    let symbol_len = nfft + cp;
    let expected = grid.num_symbols() * symbol_len;
    if samples.len() != expected {
        return Err(Error::TruncatedStream {
            expected,
            got: samples.len(),
        });
    }
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let scale = 1.0 / (nfft as f64).sqrt();
    for (s, chunk) in samples.chunks_exact(symbol_len).enumerate() {
        let mut buf = chunk[cp..].to_vec();
        fft.process(&mut buf);
        for (k, row) in grid.symbols.iter_mut().enumerate() {
            row[s] = buf[fft_bin(k, total, nfft)] * scale;
        }
    }
    if numerology.mu == 0 {
        grid.occupied_per_rb = SUBCARRIERS_PER_RB;
        grid.occupied_mask = vec![true; total];
    } else {
        grid.occupied_per_rb = numerology.prs_comb_occupancy()?;
        grid.occupied_mask = prs_comb_mask(numerology, num_rb)?;
    }
    Ok(grid)
}

/// Writes interleaved little-endian `f32` I/Q pairs.
pub fn write_iq_f32<W: Write>(mut w: W, samples: &[Complex64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(samples.len() * 8);
    for z in samples {
        bytes.extend_from_slice(&(z.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_iq_f32<R: Read>(mut r: R) -> Result<Vec<Complex64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Parse(format!("IQ stream length {} is not a multiple of 8", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TxMode {
    #[default]
    Tone,
    Prs,
}

/// Frequency-domain transmit symbols `x[v]` on `K` subcarriers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxSignal {
    pub mode: TxMode,
    pub freqs: Vec<f64>,
    pub symbols: Vec<Complex64>,
    pub occupied: Vec<bool>,
    /// Power multiplier applied to every symbol.
    pub power_scale: f64,
}

impl TxSignal {
    /// Single-subcarrier tone at the grid bin nearest `center + 100 kHz`.
    pub fn tone(center_hz: f64, spacing_hz: f64) -> Self {
        let f = center_hz + (TONE_OFFSET_HZ / spacing_hz).round() * spacing_hz;
        Self {
            mode: TxMode::Tone,
            freqs: vec![f],
            symbols: vec![Complex64::new(1.0, 0.0)],
            occupied: vec![true],
            power_scale: 1.0,
        }
    }

    /// Tone placed on a full grid: one occupied bin, every other bin empty.
    pub fn tone_on_grid(grid: &ResourceGrid) -> Self {
        let freqs = grid.subcarrier_freqs();
        let df = grid.numerology.subcarrier_spacing_hz();
        let bin = grid.nearest_subcarrier(grid.center_freq_hz + (TONE_OFFSET_HZ / df).round() * df);
        let mut symbols = vec![Complex64::new(0.0, 0.0); freqs.len()];
        let mut occupied = vec![false; freqs.len()];
        symbols[bin] = Complex64::new(1.0, 0.0);
        occupied[bin] = true;
        Self {
            mode: TxMode::Tone,
            freqs,
            symbols,
            occupied,
            power_scale: 1.0,
        }
    }

    /// Symbols of OFDM symbol `symbol` of a grid.
    pub fn from_grid(grid: &ResourceGrid, symbol: usize) -> Result<Self> {
        if symbol >= grid.num_symbols() {
            return Err(Error::IndexOutOfRange {
                axis: "symbol",
                index: symbol,
                len: grid.num_symbols(),
            });
        }
        Ok(Self {
            mode: TxMode::Prs,
            freqs: grid.subcarrier_freqs(),
            symbols: grid.symbols.iter().map(|row| row[symbol]).collect(),
            occupied: grid.occupied_mask.clone(),
            power_scale: 1.0,
        })
    }

    /// Keeps only the occupied subcarriers.
    pub fn compact(&self) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&v| self.occupied[v]).collect();
        Self {
            mode: self.mode,
            freqs: keep.iter().map(|&v| self.freqs[v]).collect(),
            symbols: keep.iter().map(|&v| self.symbols[v]).collect(),
            occupied: vec![true; keep.len()],
            power_scale: self.power_scale,
        }
    }

    /// Copy with every symbol multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            symbols: self.symbols.iter().map(|&x| x * factor).collect(),
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Transmitted symbol on subcarrier `v`, including `power_scale`.
    pub fn symbol(&self, v: usize) -> Complex64 {
        self.symbols[v] * self.power_scale.sqrt()
    }

    pub fn occupied_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupied.iter().enumerate().filter(|(_, &o)| o).map(|(v, _)| v)
    }
}

pub(crate) fn check_dimensions(channels: &ChannelSet, response: &RisResponse, tx: &TxSignal) -> Result<()> {
    if channels.k != response.num_subcarriers() || channels.k != tx.len() || tx.symbols.len() != tx.len() || tx.occupied.len() != tx.len() {
        return Err(Error::DimensionMismatch(format!(
            "subcarriers: channels {}, response {}, signal {}",
            channels.k,
            response.num_subcarriers(),
            tx.len()
        )));
    }
    if channels.m != response.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "elements: channels {}, response {}",
            channels.m,
            response.num_elements()
        )));
    }
    Ok(())
}

/// Effective scalar channel `h_d[v] + Σ_m h_m[v]·φ_m[v]·g_m[v]` of `user`
/// on subcarrier `v`.
pub fn effective_channel(channels: &ChannelSet, response: &RisResponse, user: User, v: usize) -> Complex64 {
    let (h_d, h_ris) = match user {
        User::Lu => (channels.h_d_lu[v], &channels.h_ris_lu[v]),
        User::Ed => (channels.h_d_ed[v], &channels.h_ris_ed[v]),
    };
    let cascade: Complex64 = h_ris
        .iter()
        .zip(&response.diagonals[v])
        .zip(&channels.g_ris[v])
        .map(|((h, phi), g)| h * phi * g)
        .sum();
    h_d + cascade
}

/// Received samples of both users on every subcarrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Received {
    pub y_lu: Vec<Complex64>,
    pub y_ed: Vec<Complex64>,
}

/// Received signals on each subcarrier with independent `CN(0, n0)` noise
/// per user and subcarrier. `n0 = 0` yields the noiseless signals.
pub fn receive(channels: &ChannelSet, response: &RisResponse, tx: &TxSignal, n0: f64, seed: u64) -> Result<Received> {
    check_dimensions(channels, response, tx)?;
    ensure_finite("n0", n0)?;
    if n0 < 0.0 {
        return Err(invalid("n0", "noise power must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (n0 / 2.0).sqrt();
    let mut noise = || {
        if n0 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * sigma, im * sigma)
    };
    let mut y_lu = Vec::with_capacity(channels.k);
    let mut y_ed = Vec::with_capacity(channels.k);
    for v in 0..channels.k {
        let x = tx.symbol(v);
        y_lu.push(effective_channel(channels, response, User::Lu, v) * x + noise());
        y_ed.push(effective_channel(channels, response, User::Ed, v) * x + noise());
    }
    Ok(Received { y_lu, y_ed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ris::{build_response, ElementModel, RisConfig};

    fn mu2() -> Numerology {
        Numerology::default()
    }

    fn scalar_set(h_d: Complex64, h: Complex64, g: Complex64) -> ChannelSet {
        ChannelSet {
            k: 1,
            m: 1,
            h_d_lu: vec![h_d],
            h_d_ed: vec![h_d],
            h_ris_lu: vec![vec![h]],
            h_ris_ed: vec![vec![h]],
            g_ris: vec![vec![g]],
        }
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn numerology_arithmetic() {
        for mu in 0..=4u8 {
            let n = Numerology::new(mu, CpMode::Normal).unwrap();
            assert_eq!(n.subcarrier_spacing_hz(), 15_000.0 * 2f64.powi(mu as i32));
            assert_eq!(n.slots_per_subframe(), 1 << mu);
            assert_eq!(n.symbols_per_slot(), 14);
        }
        assert_eq!(mu2().symbols_per_slot(), 12);
        assert!(Numerology::new(5, CpMode::Normal).is_err());
    }

    #[test]
    fn prs_grid_dimensions() {
        let g = build_prs_grid(mu2(), 52, 3.55e9, 1).unwrap();
        assert_eq!(g.total_subcarriers(), 624);
        assert_eq!(g.occupied_count(), 312);
        assert_eq!(g.bandwidth_hz(), 37.44e6);
        assert_eq!(g.num_symbols(), 12);
        let one_rb = build_prs_grid(mu2(), 1, 3.55e9, 1).unwrap();
        assert_eq!(one_rb.occupied_per_rb, 6);
        assert_eq!(one_rb.occupied_count(), 6);
        for (row, &occ) in g.symbols.iter().zip(&g.occupied_mask) {
            for z in row {
                if occ {
                    assert!((z.norm() - 1.0).abs() < 1e-15);
                } else {
                    assert_eq!(z.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn prs_rejects_mu_zero() {
        let n = Numerology::new(0, CpMode::Normal).unwrap();
        assert!(build_prs_grid(n, 52, 3.55e9, 0).is_err());
        assert!(build_prs_grid(mu2(), 0, 3.55e9, 0).is_err());
    }

    #[test]
    fn tone_sits_on_nearest_bin() {
        let t = TxSignal::tone(3.55e9, 60e3);
        assert_eq!(t.freqs, vec![3.55e9 + 120e3]);
        let g = build_prs_grid(mu2(), 52, 3.55e9, 0).unwrap();
        let t = TxSignal::tone_on_grid(&g);
        assert_eq!(t.occupied.iter().filter(|&&o| o).count(), 1);
        let v = t.occupied_indices().next().unwrap();
        assert_eq!(t.freqs[v], 3.55e9 + 120e3);
    }

    #[test]
    fn receive_cancellation_and_pass_through() {
        let flip = build_response(&RisConfig::parse(1, 1, "1").unwrap(), &ElementModel::ideal(), &[3.55e9]).unwrap();
        let tx = TxSignal::tone(3.55e9, 60e3);
        let r = receive(&scalar_set(one(), one(), one()), &flip, &tx, 0.0, 0).unwrap();
        assert!(r.y_lu[0].norm() < 1e-15);
        let pass = build_response(&RisConfig::zeros(1, 1), &ElementModel::ideal(), &[3.55e9]).unwrap();
        let r = receive(&scalar_set(Complex64::new(0.0, 0.0), one(), one()), &pass, &tx, 0.0, 0).unwrap();
        assert_eq!(r.y_lu[0], one());
    }

    #[test]
    fn receive_rejects_dimension_mismatch() {
        let resp = build_response(&RisConfig::zeros(1, 2), &ElementModel::ideal(), &[3.55e9]).unwrap();
        let tx = TxSignal::tone(3.55e9, 60e3);
        assert!(matches!(
            receive(&scalar_set(one(), one(), one()), &resp, &tx, 0.0, 0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn modulate_zero_grid() {
        let g = ResourceGrid::empty(mu2(), 52, 3.55e9).unwrap();
        let s = modulate(&g);
        assert_eq!(s.len(), 12 * (1024 + 256));
        assert!(s.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_bin_is_pure_exponential() {
        let mut g = ResourceGrid::empty(mu2(), 52, 3.55e9).unwrap();
        let k = 400;
        g.symbols[k][0] = Complex64::new(0.6, -0.8);
        let s = modulate(&g);
        let nfft = 1024;
        let cp = 256;
        let body = &s[cp..cp + nfft];
        let bin = fft_bin(k, 624, nfft) as f64;
        let proj: Complex64 = body
            .iter()
            .enumerate()
            .map(|(n, z)| z * Complex64::cis(-2.0 * std::f64::consts::PI * bin * n as f64 / nfft as f64))
            .sum::<Complex64>()
            / (nfft as f64).sqrt();
        let energy: f64 = body.iter().map(|z| z.norm_sqr()).sum();
        assert!(proj.norm_sqr() / energy > 0.999);
        // Cyclic prefix repeats the tail.
        assert_eq!(&s[..cp], &body[nfft - cp..]);
    }

    #[test]
    fn demodulate_rejects_truncated_stream() {
        let g = build_prs_grid(mu2(), 4, 3.55e9, 3).unwrap();
        let mut s = modulate(&g);
        s.pop();
        assert!(matches!(
            demodulate(&s, mu2(), 4, 3.55e9),
            Err(Error::TruncatedStream { .. })
        ));
    }

    #[test]
    fn iq_file_round_trip() {
        let samples = vec![Complex64::new(0.25, -1.5), Complex64::new(3.0, 0.125)];
        let mut buf = Vec::new();
        write_iq_f32(&mut buf, &samples).unwrap();
        assert_eq!(buf.len(), 16);
        assert_eq!(&buf[..4], &0.25f32.to_le_bytes());
        assert_eq!(read_iq_f32(&buf[..]).unwrap(), samples);
        assert!(read_iq_f32(&buf[..7]).is_err());
    }

    #[test]
    fn grid_csv_has_schema_header() {
        let g = build_prs_grid(mu2(), 1, 3.55e9, 0).unwrap();
        let csv = g.to_csv();
        assert!(csv.starts_with("# schema: ris-pls/resource-grid/v1\n"));
        assert_eq!(csv.lines().count(), 2 + 12 * 12);
    }
}
