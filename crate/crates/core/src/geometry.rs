//! Spatial layout of the transmitter, the surface and the user sectors, and
//! synthesis of per-subcarrier multipath channels for every link.
//!
//! The surface lies in the `y-z` plane with its centre at the origin and its
//! broadside along `+x`. A node at azimuth `φ` and horizontal range `r` sits
//! at `(r·cos φ, r·sin φ, h)`.
//!
//! Each link is a tapped-delay sum of rays, `h[v] = Σ_l a_l·e^{−j2π f_v τ_l}`,
//! one deterministic line-of-sight ray plus Rician scatterers. On the
//! surface side every ray also carries a plane-wave steering phase across
//! the element positions. Random draws come from per-link streams keyed by
//! `(seed, link kind, placement)`, so a user's channel depends only on where
//! the user stands, not on which role it plays.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::ris::{RisArrayGeometry, DEFAULT_CARRIER_HZ};
use crate::SPEED_OF_LIGHT;

/// Position of a node relative to the surface centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub azimuth_deg: f64,
    pub range_m: f64,
    #[serde(default)]
    pub height_m: f64,
}

impl Placement {
    pub fn new(azimuth_deg: f64, range_m: f64) -> Self {
        Self {
            azimuth_deg,
            range_m,
            height_m: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("azimuth_deg", self.azimuth_deg)?;
        ensure_finite("range_m", self.range_m)?;
        ensure_finite("height_m", self.height_m)?;
        if self.range_m <= 0.0 {
            return Err(invalid("range_m", "must be positive"));
        }
        if !(-90.0..=90.0).contains(&self.azimuth_deg) {
            return Err(invalid("azimuth_deg", "node must be in front of the surface ([-90, 90])"));
        }
        Ok(())
    }

    pub fn position(&self) -> [f64; 3] {
        let az = self.azimuth_deg.to_radians();
        [self.range_m * az.cos(), self.range_m * az.sin(), self.height_m]
    }

    /// Straight-line distance to the surface centre.
    pub fn distance(&self) -> f64 {
        norm(self.position())
    }

    /// Unit vector from the surface centre towards the node.
    pub fn direction(&self) -> [f64; 3] {
        let p = self.position();
        let d = norm(p);
        [p[0] / d, p[1] / d, p[2] / d]
    }

    fn key_bytes(&self) -> [u8; 24] {
        let mut out = [0u8; 24];
        out[..8].copy_from_slice(&self.azimuth_deg.to_bits().to_le_bytes());
        out[8..16].copy_from_slice(&self.range_m.to_bits().to_le_bytes());
        out[16..].copy_from_slice(&self.height_m.to_bits().to_le_bytes());
        out
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn angle_between(a: [f64; 3], b: [f64; 3]) -> f64 {
    let cos = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (norm(a) * norm(b));
    cos.clamp(-1.0, 1.0).acos()
}

/// Identifier of a sector: its index in [`SectorGrid::sector_centers_deg`].
pub type SectorId = usize;

/// Angular sectors around the surface where users may stand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorGrid {
    pub sector_width_deg: f64,
    pub sector_centers_deg: Vec<f64>,
    pub user_range_m: f64,
}

impl Default for SectorGrid {
    fn default() -> Self {
        Self {
            sector_width_deg: 15.0,
            sector_centers_deg: vec![0.0, 15.0, 30.0, 45.0],
            user_range_m: 7.0,
        }
    }
}

impl SectorGrid {
    /// `count` sectors of `width_deg` starting at `first_deg`.
    pub fn uniform(first_deg: f64, width_deg: f64, count: usize, user_range_m: f64) -> Self {
        Self {
            sector_width_deg: width_deg,
            sector_centers_deg: (0..count).map(|i| first_deg + i as f64 * width_deg).collect(),
            user_range_m,
        }
    }

    pub fn len(&self) -> usize {
        self.sector_centers_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sector_centers_deg.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("sector_width_deg", self.sector_width_deg)?;
        ensure_finite("user_range_m", self.user_range_m)?;
        if self.sector_width_deg <= 0.0 {
            return Err(invalid("sector_width_deg", "must be positive"));
        }
        if self.user_range_m <= 0.0 {
            return Err(invalid("user_range_m", "must be positive"));
        }
        for w in self.sector_centers_deg.windows(2) {
            if (w[1] - w[0] - self.sector_width_deg).abs() > 1e-9 {
                return Err(invalid(
                    "sector_centers_deg",
                    "centers must increase by exactly one sector width",
                ));
            }
        }
        for &c in &self.sector_centers_deg {
            Placement::new(c, self.user_range_m).validate()?;
        }
        Ok(())
    }

    pub fn center(&self, id: SectorId) -> Result<f64> {
        self.sector_centers_deg
            .get(id)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                axis: "sector",
                index: id,
                len: self.len(),
            })
    }

    pub fn placement(&self, id: SectorId) -> Result<Placement> {
        Ok(Placement::new(self.center(id)?, self.user_range_m))
    }

    /// Sector whose centre is exactly `azimuth_deg`.
    pub fn sector_at(&self, azimuth_deg: f64) -> Option<SectorId> {
        self.sector_centers_deg
            .iter()
            .position(|&c| (c - azimuth_deg).abs() < 1e-9)
    }

    /// Nearest sector centre and the snap distance in degrees. Ties go to
    /// the lower sector.
    pub fn nearest(&self, azimuth_deg: f64) -> Option<(SectorId, f64)> {
        self.sector_centers_deg
            .iter()
            .enumerate()
            .map(|(i, &c)| (i, (c - azimuth_deg).abs()))
            .fold(None, |best: Option<(SectorId, f64)>, cur| match best {
                Some(b) if b.1 <= cur.1 => Some(b),
                _ => Some(cur),
            })
    }
}

/// Transmitter placement and user sector grid of the measurement room:
/// Tx at −15°, 5 m; sectors centred on 0°, 15°, 30°, 45° at 7 m.
pub fn build_default_geometry() -> (Placement, SectorGrid) {
    (Placement::new(-15.0, 5.0), SectorGrid::default())
}

/// Multipath channel parameters shared by every link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    pub num_paths: usize,
    /// LOS-to-scatter power ratio in dB; `"inf"` in JSON for pure LOS.
    #[serde(with = "crate::serde_util::extended_f64")]
    pub rician_k_db: f64,
    pub max_excess_delay_s: f64,
    pub tx_beamwidth_deg: f64,
    pub direct_path_suppression_db: f64,
    /// Elevation spread of scattered arrivals at the surface, ± degrees.
    #[serde(default = "default_elevation_spread")]
    pub scatter_elevation_deg: f64,
    /// Phase front of the line-of-sight rays across the surface.
    #[serde(default)]
    pub wavefront: Wavefront,
    pub rng_seed: u64,
}

/// Line-of-sight phase model on the surface. Amplitudes always follow the
/// centre distance; only the per-element phase differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wavefront {
    /// Far-field steering vector.
    Planar,
    /// Exact path length to every element.
    #[default]
    Spherical,
}

fn default_elevation_spread() -> f64 {
    15.0
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_hz: DEFAULT_CARRIER_HZ,
            num_paths: 6,
            rician_k_db: 10.0,
            max_excess_delay_s: 50e-9,
            tx_beamwidth_deg: 20.0,
            direct_path_suppression_db: 30.0,
            scatter_elevation_deg: default_elevation_spread(),
            wavefront: Wavefront::default(),
            rng_seed: 0,
        }
    }
}

impl ChannelParams {
    /// Single-ray line-of-sight channels.
    pub fn pure_los() -> Self {
        Self {
            num_paths: 1,
            rician_k_db: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("carrier_hz", self.carrier_hz)?;
        ensure_finite("max_excess_delay_s", self.max_excess_delay_s)?;
        ensure_finite("tx_beamwidth_deg", self.tx_beamwidth_deg)?;
        ensure_finite("direct_path_suppression_db", self.direct_path_suppression_db)?;
        ensure_finite("scatter_elevation_deg", self.scatter_elevation_deg)?;
        if self.rician_k_db.is_nan() || self.rician_k_db == f64::NEG_INFINITY {
            return Err(invalid("rician_k_db", "must be a number or +inf"));
        }
        if self.carrier_hz <= 0.0 {
            return Err(invalid("carrier_hz", "must be positive"));
        }
        if self.num_paths == 0 {
            return Err(invalid("num_paths", "at least the LOS ray is required"));
        }
        if self.max_excess_delay_s < 0.0 {
            return Err(invalid("max_excess_delay_s", "must be non-negative"));
        }
        Ok(())
    }

    fn scatter_rays(&self) -> usize {
        if self.rician_k_db == f64::INFINITY {
            0
        } else {
            self.num_paths - 1
        }
    }

    fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }
}

/// Per-subcarrier channels of every link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    /// Subcarrier count `K`.
    pub k: usize,
    /// Element count `M`.
    pub m: usize,
    pub h_d_lu: Vec<Complex64>,
    pub h_d_ed: Vec<Complex64>,
    /// `K` rows of `M` RIS→LU coefficients.
    pub h_ris_lu: Vec<Vec<Complex64>>,
    pub h_ris_ed: Vec<Vec<Complex64>>,
    /// `K` rows of `M` Tx→RIS coefficients.
    pub g_ris: Vec<Vec<Complex64>>,
}

impl ChannelSet {
    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        let scalar_ok = self.h_d_lu.len() == k && self.h_d_ed.len() == k;
        let vec_ok = [&self.h_ris_lu, &self.h_ris_ed, &self.g_ris]
            .iter()
            .all(|rows| rows.len() == k && rows.iter().all(|r| r.len() == self.m));
        if !scalar_ok || !vec_ok {
            return Err(Error::DimensionMismatch(format!(
                "channel containers disagree with K = {k}, M = {}",
                self.m
            )));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        let all_finite = self.h_d_lu.iter().chain(&self.h_d_ed).all(finite)
            && [&self.h_ris_lu, &self.h_ris_ed, &self.g_ris]
                .iter()
                .all(|rows| rows.iter().flatten().all(finite));
        if !all_finite {
            return Err(invalid("channels", "non-finite coefficient"));
        }
        Ok(())
    }

    /// The same set with LU and ED exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            h_d_lu: self.h_d_ed.clone(),
            h_d_ed: self.h_d_lu.clone(),
            h_ris_lu: self.h_ris_ed.clone(),
            h_ris_ed: self.h_ris_lu.clone(),
            ..self.clone()
        }
    }

    /// Repeats a single-subcarrier set `k` times (frequency-flat channels).
    pub fn broadcast(&self, k: usize) -> Result<Self> {
        if self.k != 1 {
            return Err(Error::DimensionMismatch(format!(
                "broadcast needs a single-subcarrier set, got K = {}",
                self.k
            )));
        }
        Ok(Self {
            k,
            m: self.m,
            h_d_lu: vec![self.h_d_lu[0]; k],
            h_d_ed: vec![self.h_d_ed[0]; k],
            h_ris_lu: vec![self.h_ris_lu[0].clone(); k],
            h_ris_ed: vec![self.h_ris_ed[0].clone(); k],
            g_ris: vec![self.g_ris[0].clone(); k],
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: Self = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }
}

/// One propagation ray of a link.
#[derive(Debug, Clone, Copy)]
struct Ray {
    gain: Complex64,
    /// Propagation delay to/from the surface centre, seconds.
    delay_s: f64,
    /// Unit vector from the surface centre towards the far end of the ray.
    direction: [f64; 3],
    /// Far-end position for rays traced with exact per-element path
    /// lengths; plane-wave rays have none.
    source: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy)]
enum LinkKind {
    TxToRis,
    RisToUser,
    Direct,
}

impl LinkKind {
    fn tag(self) -> &'static [u8] {
        match self {
            LinkKind::TxToRis => b"tx-ris",
            LinkKind::RisToUser => b"ris-user",
            LinkKind::Direct => b"direct",
        }
    }
}

fn link_rng(seed: u64, kind: LinkKind, placements: &[&Placement]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(kind.tag());
    for p in placements {
        hasher.update(p.key_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Draws the LOS ray and the scatterers of one link.
fn draw_rays(
    rng: &mut ChaCha8Rng,
    params: &ChannelParams,
    los_amplitude: f64,
    los_distance: f64,
    los_direction: [f64; 3],
    los_source: Option<[f64; 3]>,
) -> Vec<Ray> {
    let los_delay = los_distance / SPEED_OF_LIGHT;
    let mut rays = vec![Ray {
        gain: Complex64::new(los_amplitude, 0.0),
        delay_s: los_delay,
        direction: los_direction,
        source: los_source,
    }];
    let n_scatter = params.scatter_rays();
    if n_scatter == 0 {
        return rays;
    }
    let k_lin = 10f64.powf(params.rician_k_db / 10.0);
    let ray_power = los_amplitude * los_amplitude / (k_lin * n_scatter as f64);
    for _ in 0..n_scatter {
        let excess = rng.random::<f64>() * params.max_excess_delay_s;
        let az = (rng.random::<f64>() - 0.5) * PI;
        let el = (rng.random::<f64>() * 2.0 - 1.0) * params.scatter_elevation_deg.to_radians();
        let gain = complex_gaussian(rng, ray_power);
        rays.push(Ray {
            gain,
            delay_s: los_delay + excess,
            direction: [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()],
            source: None,
        });
    }
    rays
}

/// Frequency response at each element for each frequency, `K × M`.
fn array_response(rays: &[Ray], elements: &[(f64, f64)], freqs: &[f64]) -> Vec<Vec<Complex64>> {
    // Per (ray, element) delay: a plane wave from `direction` reaches the
    // element at `p` earlier by `u·p / c`; a spherical wave travels the
    // exact distance from its source.
    let delays: Vec<Vec<f64>> = rays
        .iter()
        .map(|ray| {
            elements
                .iter()
                .map(|&(y, z)| match ray.source {
                    Some(src) => ray.delay_s + (norm(sub(src, [0.0, y, z])) - norm(src)) / SPEED_OF_LIGHT,
                    None => ray.delay_s - (ray.direction[1] * y + ray.direction[2] * z) / SPEED_OF_LIGHT,
                })
                .collect()
        })
        .collect();
    freqs
        .par_iter()
        .map(|&f| {
            let mut row = vec![Complex64::new(0.0, 0.0); elements.len()];
            for (ray, ray_delays) in rays.iter().zip(&delays) {
                for (acc, &tau) in row.iter_mut().zip(ray_delays) {
                    *acc += ray.gain * Complex64::cis(-2.0 * PI * f * tau);
                }
            }
            row
        })
        .collect()
}

fn scalar_response(rays: &[Ray], freqs: &[f64]) -> Vec<Complex64> {
    freqs
        .iter()
        .map(|&f| {
            rays.iter()
                .map(|r| r.gain * Complex64::cis(-2.0 * PI * f * r.delay_s))
                .sum()
        })
        .collect()
}

/// Surface-side rays of the link between the surface and `node`.
fn ris_link_rays(
    kind: LinkKind,
    node: &Placement,
    ris: &RisArrayGeometry,
    params: &ChannelParams,
) -> Vec<Ray> {
    let lambda = params.wavelength();
    let d = node.distance();
    // Free-space loss times the aperture gain of one element.
    let element_gain = 4.0 * PI * ris.element_spacing_m * ris.element_spacing_m / (lambda * lambda);
    let amp = lambda / (4.0 * PI * d) * element_gain.sqrt();
    let mut rng = link_rng(params.rng_seed, kind, &[node]);
    let source = (params.wavefront == Wavefront::Spherical).then(|| node.position());
    draw_rays(&mut rng, params, amp, d, node.direction(), source)
}

/// Whether the direct Tx→user path falls outside the Tx beam aimed at the
/// surface centre.
pub fn direct_path_blocked(tx: &Placement, user: &Placement, beamwidth_deg: f64) -> bool {
    let tx_pos = tx.position();
    let boresight = sub([0.0; 3], tx_pos);
    let to_user = sub(user.position(), tx_pos);
    angle_between(boresight, to_user).to_degrees() > beamwidth_deg / 2.0
}

fn direct_link(
    tx: &Placement,
    user: &Placement,
    params: &ChannelParams,
    freqs: &[f64],
) -> Vec<Complex64> {
    let d = norm(sub(user.position(), tx.position()));
    let mut amp = params.wavelength() / (4.0 * PI * d);
    if direct_path_blocked(tx, user, params.tx_beamwidth_deg) {
        amp *= 10f64.powf(-params.direct_path_suppression_db / 20.0);
    }
    let mut rng = link_rng(params.rng_seed, LinkKind::Direct, &[tx, user]);
    // The direction is unused for scalar links.
    let rays = draw_rays(&mut rng, params, amp, d, [1.0, 0.0, 0.0], None);
    scalar_response(&rays, freqs)
}

/// Channels of every link at each of `freqs`.
pub fn synthesize_channels(
    tx: &Placement,
    lu: &Placement,
    ed: &Placement,
    ris: &RisArrayGeometry,
    params: &ChannelParams,
    freqs: &[f64],
) -> Result<ChannelSet> {
    if freqs.is_empty() {
        return Err(invalid("freqs", "frequency list is empty"));
    }
    for &f in freqs {
        ensure_finite("freqs", f)?;
    }
    tx.validate()?;
    lu.validate()?;
    ed.validate()?;
    ris.validate()?;
    params.validate()?;

    let elements: Vec<(f64, f64)> = (0..ris.num_elements()).map(|i| ris.element_position(i)).collect();
    let g_rays = ris_link_rays(LinkKind::TxToRis, tx, ris, params);
    let lu_rays = ris_link_rays(LinkKind::RisToUser, lu, ris, params);
    let ed_rays = ris_link_rays(LinkKind::RisToUser, ed, ris, params);

    let set = ChannelSet {
        k: freqs.len(),
        m: ris.num_elements(),
        h_d_lu: direct_link(tx, lu, params, freqs),
        h_d_ed: direct_link(tx, ed, params, freqs),
        h_ris_lu: array_response(&lu_rays, &elements, freqs),
        h_ris_ed: array_response(&ed_rays, &elements, freqs),
        g_ris: array_response(&g_rays, &elements, freqs),
    };
    set.validate()?;
    Ok(set)
}

/// Channel from the surface to a probe receiver at `probe`, used for
/// power-pattern scans. Shares the Tx→surface and direct-link draws of
/// [`synthesize_channels`].
pub fn synthesize_probe(
    tx: &Placement,
    probe: &Placement,
    ris: &RisArrayGeometry,
    params: &ChannelParams,
    freqs: &[f64],
) -> Result<ChannelSet> {
    synthesize_channels(tx, probe, probe, ris, params, freqs)
}
