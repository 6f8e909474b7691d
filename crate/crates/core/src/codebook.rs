//! Sector codebooks: one optimized configuration per ordered (LU, ED)
//! sector pair and method, query-time selection for known, partially known
//! or unknown eavesdroppers, and fine-angle power-pattern scans.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::geometry::{synthesize_probe, ChannelParams, Placement, SectorGrid, SectorId};
use crate::ofdm::{TxMode, TxSignal};
use crate::optimizers::{Method, OptimizerOptions};
use crate::output::write_atomic;
use crate::ris::{build_response, RisConfig};
use crate::scenario::Scenario;
use crate::secrecy::{from_db, link_powers, received_power, sum_sse, to_db, LinkPowers, SecrecyReport};
use crate::User;

pub const CODEBOOK_SCHEMA: &str = "ris-pls/codebook/v1";
pub const TABLE_SCHEMA: &str = "ris-pls/codebook-table/v1";
pub const PATTERN_SCHEMA: &str = "ris-pls/power-pattern/v1";

/// Received power at one probe angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternPoint {
    pub angle_deg: f64,
    pub power: f64,
}

pub fn pattern_to_csv(pattern: &[PatternPoint]) -> String {
    let mut out = String::from("angle_deg,power_linear\n");
    for p in pattern {
        out.push_str(&format!("{},{}\n", p.angle_deg, p.power));
    }
    out
}

pub fn pattern_from_csv(text: &str) -> Result<Vec<PatternPoint>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some("angle_deg,power_linear") => {}
        other => return Err(Error::Parse(format!("unexpected pattern header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (a, p) = l
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad pattern row {l:?}")))?;
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            Ok(PatternPoint {
                angle_deg: num(a)?,
                power: num(p)?,
            })
        })
        .collect()
}

mod pattern_csv {
    use super::*;

    pub fn serialize<S: Serializer>(p: &Option<Vec<PatternPoint>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match p {
            Some(p) => s.serialize_some(&pattern_to_csv(p)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<PatternPoint>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| pattern_from_csv(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookEntry {
    pub lu_sector: SectorId,
    pub ed_sector: SectorId,
    pub method: Method,
    pub config: RisConfig,
    pub lu_power_db: f64,
    pub ed_power_db: f64,
    pub sse: SecrecyReport,
    #[serde(default, with = "pattern_csv", skip_serializing_if = "Option::is_none")]
    pub power_pattern: Option<Vec<PatternPoint>>,
}

impl CodebookEntry {
    /// `method/lu-ed`, e.g. `alg1/0-1`.
    pub fn id(&self) -> String {
        format!("{}/{}-{}", self.method, self.lu_sector, self.ed_sector)
    }

    pub fn achieved(&self) -> LinkPowers {
        LinkPowers {
            p_lu: from_db(self.lu_power_db),
            p_ed: from_db(self.ed_power_db),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub schema: String,
    pub grid: SectorGrid,
    pub scenario_digest: String,
    pub tx_mode: TxMode,
    pub n0: f64,
    pub methods: Vec<Method>,
    /// Sorted by (lu_sector, ed_sector, method).
    pub entries: Vec<CodebookEntry>,
}

impl Codebook {
    pub fn get(&self, lu: SectorId, ed: SectorId, method: Method) -> Option<&CodebookEntry> {
        self.entries
            .binary_search_by(|e| (e.lu_sector, e.ed_sector, e.method).cmp(&(lu, ed, method)))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn entries_for_lu(&self, lu: SectorId) -> impl Iterator<Item = &CodebookEntry> + '_ {
        self.entries.iter().filter(move |e| e.lu_sector == lu)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cb: Self = serde_json::from_str(text)?;
        if cb.schema != CODEBOOK_SCHEMA {
            return Err(Error::Codebook(format!("unsupported schema {:?}", cb.schema)));
        }
        cb.grid.validate()?;
        Ok(cb)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// One row per ordered sector pair with LU and ED dB columns for every
    /// stored method, rounded to 0.01 dB.
    pub fn to_table_csv(&self) -> String {
        let mut out = crate::output::schema_line(TABLE_SCHEMA);
        out.push_str("lu_deg,ed_deg");
        for m in &self.methods {
            out.push_str(&format!(",{m}_lu_db,{m}_ed_db"));
        }
        out.push('\n');
        for lu in 0..self.grid.len() {
            for ed in (0..self.grid.len()).filter(|&e| e != lu) {
                out.push_str(&format!(
                    "{},{}",
                    self.grid.sector_centers_deg[lu], self.grid.sector_centers_deg[ed]
                ));
                for &m in &self.methods {
                    match self.get(lu, ed, m) {
                        Some(e) => out.push_str(&format!(
                            ",{},{}",
                            crate::output::db2(e.lu_power_db),
                            crate::output::db2(e.ed_power_db)
                        )),
                        None => out.push_str(",,"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    /// Scans and stores the power pattern of every entry.
    pub fn attach_patterns(&mut self, scenario: &Scenario, angles: &[f64], range_m: f64, probe: ProbeMode) -> Result<()> {
        for e in &mut self.entries {
            e.power_pattern = Some(scan_power_pattern(scenario, &e.config, angles, range_m, probe)?);
        }
        Ok(())
    }
}

/// Builds the codebook of `scenario` over `grid`. Every (lu, ed, method)
/// cell is computed independently and in parallel.
pub fn generate_codebook(
    scenario: &Scenario,
    grid: &SectorGrid,
    methods: &[Method],
    tx_mode: TxMode,
    options: &OptimizerOptions,
) -> Result<Codebook> {
    if methods.is_empty() {
        return Err(invalid("methods", "at least one method is required"));
    }
    grid.validate()?;
    if grid.len() < 2 {
        return Err(invalid("grid", "at least two sectors are required"));
    }
    let mut methods: Vec<Method> = methods.to_vec();
    methods.sort();
    methods.dedup();
    let tx = scenario.tx_signal(tx_mode)?;
    let n0 = scenario.noise_power()?;
    let pairs: Vec<(SectorId, SectorId)> = (0..grid.len())
        .flat_map(|lu| (0..grid.len()).filter(move |&ed| ed != lu).map(move |ed| (lu, ed)))
        .collect();
    let cells: Vec<Vec<CodebookEntry>> = pairs
        .par_iter()
        .map(|&(lu, ed)| {
            let channels = scenario.channels(&grid.placement(lu)?, &grid.placement(ed)?, &tx)?;
            let eval = scenario.evaluator(&channels, &tx)?;
            methods
                .par_iter()
                .map(|&method| {
                    let trace = method.run(&eval, options)?;
                    let response = build_response(&trace.final_config, &scenario.element, &tx.freqs)?;
                    let powers = link_powers(&channels, &response, &tx)?;
                    let sse = sum_sse(&channels, &response, &tx, n0, false)?;
                    Ok(CodebookEntry {
                        lu_sector: lu,
                        ed_sector: ed,
                        method,
                        config: trace.final_config,
                        lu_power_db: powers.lu_db(),
                        ed_power_db: powers.ed_db(),
                        sse,
                        power_pattern: None,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut entries: Vec<CodebookEntry> = cells.into_iter().flatten().collect();
    entries.sort_by_key(|e| (e.lu_sector, e.ed_sector, e.method));
    Ok(Codebook {
        schema: CODEBOOK_SCHEMA.into(),
        grid: grid.clone(),
        scenario_digest: scenario.digest(),
        tx_mode,
        n0,
        methods,
        entries,
    })
}

/// What is known about the eavesdropper at query time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "sectors")]
pub enum EdKnowledge {
    Known(SectorId),
    /// The ED is somewhere outside these sectors.
    ExcludedRegion(BTreeSet<SectorId>),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectOptions {
    pub preferred: Method,
    /// Draw candidates from every stored method instead of `preferred` only.
    pub all_methods: bool,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            preferred: Method::Alg1,
            all_methods: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub entry: CodebookEntry,
    /// Worst-case raw SSE over the admissible ED sectors; may be negative.
    pub guaranteed_sse: f64,
    /// Raw SSE of the chosen configuration against each admissible ED
    /// sector.
    pub per_ed: Vec<(SectorId, f64)>,
    pub digest_mismatch: bool,
}

/// Raw SSE of `config` with the LU in sector `lu` and the ED in sector `ed`.
pub fn rescore(cb: &Codebook, scenario: &Scenario, tx: &TxSignal, config: &RisConfig, lu: SectorId, ed: SectorId) -> Result<f64> {
    let channels = scenario.channels(&cb.grid.placement(lu)?, &cb.grid.placement(ed)?, tx)?;
    let response = build_response(config, &scenario.element, &tx.freqs)?;
    Ok(sum_sse(&channels, &response, tx, cb.n0, false)?.r_sec_raw)
}

/// Picks a configuration for an LU in `lu_sector`.
///
/// With a known ED the stored entry is returned as is. Otherwise every
/// candidate entry for the LU is re-scored against each admissible ED
/// sector and the one with the largest worst case wins; ties keep the
/// earlier entry.
pub fn select_config(
    cb: &Codebook,
    scenario: &Scenario,
    lu_sector: SectorId,
    knowledge: &EdKnowledge,
    options: SelectOptions,
) -> Result<Selection> {
    cb.grid.center(lu_sector)?;
    let digest_mismatch = scenario.digest() != cb.scenario_digest;
    if digest_mismatch {
        log::warn!("codebook was generated from a different scenario");
    }
    let excluded = match knowledge {
        EdKnowledge::Known(ed) => {
            cb.grid.center(*ed)?;
            if *ed == lu_sector {
                return Err(invalid("ed_sector", "must differ from the LU sector"));
            }
            let entry = cb.get(lu_sector, *ed, options.preferred).ok_or_else(|| {
                Error::Codebook(format!("no {} entry for sectors {lu_sector}-{ed}", options.preferred))
            })?;
            return Ok(Selection {
                entry: entry.clone(),
                guaranteed_sse: entry.sse.r_sec_raw,
                per_ed: vec![(*ed, entry.sse.r_sec_raw)],
                digest_mismatch,
            });
        }
        EdKnowledge::ExcludedRegion(x) => {
            for &s in x {
                cb.grid.center(s)?;
            }
            x.clone()
        }
        EdKnowledge::Unknown => BTreeSet::new(),
    };
    let eds: Vec<SectorId> = (0..cb.grid.len())
        .filter(|&e| e != lu_sector && !excluded.contains(&e))
        .collect();
    if eds.is_empty() {
        return Err(invalid("excluded_region", "no ED sector is left"));
    }
    let pool: Vec<&CodebookEntry> = cb
        .entries_for_lu(lu_sector)
        .filter(|e| options.all_methods || e.method == options.preferred)
        .collect();
    if pool.is_empty() {
        return Err(Error::Codebook(format!("no candidate entries for LU sector {lu_sector}")));
    }
    let tx = scenario.tx_signal(cb.tx_mode)?;
    let scored: Vec<Vec<(SectorId, f64)>> = pool
        .par_iter()
        .map(|e| {
            eds.iter()
                .map(|&ed| Ok((ed, rescore(cb, scenario, &tx, &e.config, lu_sector, ed)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in scored.iter().enumerate() {
        let worst = row.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        if best.is_none_or(|b| worst > b.1) {
            best = Some((i, worst));
        }
    }
    let (i, guaranteed_sse) = best.expect("non-empty pool");
    Ok(Selection {
        entry: pool[i].clone(),
        guaranteed_sse,
        per_ed: scored[i].clone(),
        digest_mismatch,
    })
}

/// Channel model used for pattern probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    /// Line of sight only, so the pattern shows the array factor.
    #[default]
    Los,
    /// The scenario's own multipath model.
    Full,
}

/// Angles from `start` to `end` inclusive in steps of `step` degrees.
pub fn angle_grid(start_deg: f64, end_deg: f64, step_deg: f64) -> Result<Vec<f64>> {
    if step_deg.is_nan() || step_deg <= 0.0 || start_deg.is_nan() || end_deg.is_nan() || end_deg < start_deg {
        return Err(invalid("angles", "need start <= end and a positive step"));
    }
    let n = ((end_deg - start_deg) / step_deg + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start_deg + i as f64 * step_deg).collect())
}

/// Noiseless received power of `config` at a probe receiver placed at each
/// angle and `range_m` from the surface.
pub fn scan_power_pattern(
    scenario: &Scenario,
    config: &RisConfig,
    angles: &[f64],
    range_m: f64,
    probe: ProbeMode,
) -> Result<Vec<PatternPoint>> {
    if angles.is_empty() {
        return Err(invalid("angles", "at least one angle is required"));
    }
    for &a in angles {
        if !(-90.0..=90.0).contains(&a) {
            return Err(invalid("angles", format!("{a} is outside [-90, 90]")));
        }
    }
    let params = match probe {
        ProbeMode::Los => ChannelParams {
            num_paths: 1,
            rician_k_db: f64::INFINITY,
            ..scenario.channel.clone()
        },
        ProbeMode::Full => scenario.channel.clone(),
    };
    let tx = scenario.tx_signal(scenario.tx_mode)?;
    let response = build_response(config, &scenario.element, &tx.freqs)?;
    angles
        .par_iter()
        .map(|&a| {
            let p = Placement::new(a, range_m);
            p.validate()?;
            let channels = synthesize_probe(&scenario.tx, &p, &scenario.ris, &params, &tx.freqs)?;
            Ok(PatternPoint {
                angle_deg: a,
                power: received_power(&channels, &response, &tx, User::Lu)?,
            })
        })
        .collect()
}

/// Angles at least two sector widths from `lu_angle_deg` whose power is
/// within `threshold_db` of (or above) the power at the LU angle. The LU
/// power is read at the pattern sample nearest `lu_angle_deg`.
pub fn detect_side_lobes(
    pattern: &[PatternPoint],
    lu_angle_deg: f64,
    threshold_db: f64,
    sector_width_deg: f64,
) -> Result<Vec<f64>> {
    let lo = pattern.iter().map(|p| p.angle_deg).fold(f64::INFINITY, f64::min);
    let hi = pattern.iter().map(|p| p.angle_deg).fold(f64::NEG_INFINITY, f64::max);
    if pattern.is_empty() || lu_angle_deg < lo || lu_angle_deg > hi {
        return Err(invalid("lu_angle", "outside the pattern span"));
    }
    let lu = pattern
        .iter()
        .min_by(|a, b| (a.angle_deg - lu_angle_deg).abs().total_cmp(&(b.angle_deg - lu_angle_deg).abs()))
        .expect("non-empty pattern");
    let floor = lu.power * from_db(-threshold_db);
    Ok(pattern
        .iter()
        .filter(|p| (p.angle_deg - lu_angle_deg).abs() >= 2.0 * sector_width_deg - 1e-9 && p.power >= floor)
        .map(|p| p.angle_deg)
        .collect())
}

/// Pattern rows in dB for CSV output.
pub fn pattern_report_csv(pattern: &[PatternPoint]) -> String {
    let mut out = crate::output::schema_line(PATTERN_SCHEMA);
    out.push_str("angle_deg,power_db\n");
    for p in pattern {
        out.push_str(&format!("{},{}\n", p.angle_deg, crate::output::db2(to_db(p.power))));
    }
    out
}
