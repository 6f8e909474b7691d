//! Received powers, per-subcarrier spectral efficiencies and the sum secrecy
//! spectral efficiency `R_sec = [Σ_v (R_l[v] − R_e[v])]⁺`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::geometry::ChannelSet;
use crate::ofdm::{check_dimensions, effective_channel, TxSignal};
use crate::ris::RisResponse;
use crate::User;

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Noiseless received powers of both users (linear).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPowers {
    pub p_lu: f64,
    pub p_ed: f64,
}

impl LinkPowers {
    pub fn lu_db(&self) -> f64 {
        to_db(self.p_lu)
    }

    pub fn ed_db(&self) -> f64 {
        to_db(self.p_ed)
    }

    /// `P_LU / P_ED` in dB.
    pub fn gap_db(&self) -> f64 {
        self.lu_db() - self.ed_db()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierRate {
    pub v: usize,
    pub r_lu: f64,
    pub r_ed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyReport {
    /// Sum of LU rates over occupied subcarriers, bits/s/Hz.
    pub r_lu: f64,
    pub r_ed: f64,
    /// `r_lu − r_ed`, no clamping.
    pub r_sec_raw: f64,
    /// `max(0, r_sec_raw)`.
    pub r_sec: f64,
    /// Whether [`SecrecyReport::sse`] reports the clamped value.
    pub apply_max: bool,
    /// `r_sec_raw` divided by the number of occupied subcarriers.
    pub r_sec_raw_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_subcarrier: Option<Vec<SubcarrierRate>>,
}

impl SecrecyReport {
    /// The headline figure: clamped if the max operator was requested, raw
    /// otherwise.
    pub fn sse(&self) -> f64 {
        if self.apply_max {
            self.r_sec
        } else {
            self.r_sec_raw
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema: ris-pls/secrecy-per-subcarrier/v1\nv,r_lu,r_ed\n");
        for r in self.per_subcarrier.iter().flatten() {
            out.push_str(&format!("{},{},{}\n", r.v, r.r_lu, r.r_ed));
        }
        out
    }
}

/// Noiseless received power `|H[v]·x[v]|²` on each occupied subcarrier.
pub fn subcarrier_powers(channels: &ChannelSet, response: &RisResponse, tx: &TxSignal, user: User) -> Result<Vec<f64>> {
    check_dimensions(channels, response, tx)?;
    Ok(tx
        .occupied_indices()
        .map(|v| (effective_channel(channels, response, user, v) * tx.symbol(v)).norm_sqr())
        .collect())
}

/// Noiseless received power aggregated over occupied subcarriers.
pub fn received_power(channels: &ChannelSet, response: &RisResponse, tx: &TxSignal, user: User) -> Result<f64> {
    Ok(subcarrier_powers(channels, response, tx, user)?.iter().sum())
}

pub fn link_powers(channels: &ChannelSet, response: &RisResponse, tx: &TxSignal) -> Result<LinkPowers> {
    Ok(LinkPowers {
        p_lu: received_power(channels, response, tx, User::Lu)?,
        p_ed: received_power(channels, response, tx, User::Ed)?,
    })
}

/// `P_LU / P_ED`, the greedy objective of the full-surface optimizer.
pub fn power_ratio(channels: &ChannelSet, response: &RisResponse, tx: &TxSignal) -> Result<f64> {
    let p = link_powers(channels, response, tx)?;
    ratio(p.p_lu, p.p_ed)
}

pub(crate) fn ratio(p_lu: f64, p_ed: f64) -> Result<f64> {
    if p_ed == 0.0 {
        Err(Error::ZeroEavesdropperPower)
    } else {
        Ok(p_lu / p_ed)
    }
}

/// Secrecy report from per-subcarrier powers. `indices` labels the entries.
pub fn report_from_powers(p_lu: &[f64], p_ed: &[f64], indices: &[usize], n0: f64, apply_max: bool) -> Result<SecrecyReport> {
    ensure_finite("n0", n0)?;
    if n0 <= 0.0 {
        return Err(invalid("n0", "noise power must be positive"));
    }
    if p_lu.len() != p_ed.len() || p_lu.len() != indices.len() {
        return Err(Error::DimensionMismatch("per-subcarrier power lists differ in length".into()));
    }
    let per: Vec<SubcarrierRate> = indices
        .iter()
        .zip(p_lu.iter().zip(p_ed))
        .map(|(&v, (&l, &e))| SubcarrierRate {
            v,
            r_lu: (1.0 + l / n0).log2(),
            r_ed: (1.0 + e / n0).log2(),
        })
        .collect();
    let r_lu: f64 = per.iter().map(|r| r.r_lu).sum();
    let r_ed: f64 = per.iter().map(|r| r.r_ed).sum();
    let r_sec_raw = r_lu - r_ed;
    Ok(SecrecyReport {
        r_lu,
        r_ed,
        r_sec_raw,
        r_sec: r_sec_raw.max(0.0),
        apply_max,
        r_sec_raw_mean: if per.is_empty() { 0.0 } else { r_sec_raw / per.len() as f64 },
        per_subcarrier: Some(per),
    })
}

/// Sum secrecy spectral efficiency of a configuration response.
pub fn sum_sse(channels: &ChannelSet, response: &RisResponse, tx: &TxSignal, n0: f64, apply_max: bool) -> Result<SecrecyReport> {
    let p_lu = subcarrier_powers(channels, response, tx, User::Lu)?;
    let p_ed = subcarrier_powers(channels, response, tx, User::Ed)?;
    let idx: Vec<usize> = tx.occupied_indices().collect();
    report_from_powers(&p_lu, &p_ed, &idx, n0, apply_max)
}
