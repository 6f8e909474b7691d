//! Experiment drivers behind the command-line tool: method comparison over
//! placement pairs, the tone-versus-PRS frequency-selectivity study,
//! codebook generation and queries, and power-pattern scans.
//!
//! Every driver is a pure function of the spec, the scenario and the seeds.
//! Results are returned in memory and, when an output directory is given,
//! written as CSV (dB rounded to 0.01) and JSON (full precision) files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{
    angle_grid, detect_side_lobes, generate_codebook, pattern_report_csv, scan_power_pattern, select_config, Codebook,
    EdKnowledge, PatternPoint, ProbeMode, SelectOptions, Selection,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{ChannelSet, Placement};
use crate::ofdm::{TxMode, TxSignal};
use crate::optimizers::{MeasurementNoise, Method, OptimizerOptions, OptimizerTrace};
use crate::output::{db2, schema_line, write_atomic};
use crate::ris::{build_response, ElementModel, RisConfig};
use crate::scenario::Scenario;
use crate::secrecy::{link_powers, sum_sse, to_db, LinkPowers, SecrecyReport};

pub const COMPARE_SCHEMA: &str = "ris-pls/compare-table/v1";
pub const SSE_MATRIX_SCHEMA: &str = "ris-pls/sse-matrix/v1";
pub const FREQ_SCHEMA: &str = "ris-pls/freq-selectivity/v1";

/// The nine (LU, ED) azimuth pairs of the measurement campaign.
pub const DEFAULT_PAIRS: [(f64, f64); 9] = [
    (0.0, 15.0),
    (0.0, 30.0),
    (0.0, 45.0),
    (15.0, 0.0),
    (15.0, 30.0),
    (15.0, 45.0),
    (30.0, 0.0),
    (30.0, 15.0),
    (30.0, 45.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Compare,
    CodebookGen,
    CodebookQuery,
    PatternScan,
    FrequencySelectivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub lu_deg: f64,
    pub ed_deg: f64,
}

fn default_pairs() -> Vec<PairSpec> {
    DEFAULT_PAIRS
        .iter()
        .map(|&(lu_deg, ed_deg)| PairSpec { lu_deg, ed_deg })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EdQuery {
    Known { ed_deg: f64 },
    Excluded { ed_degs: Vec<f64> },
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodebookSpec {
    /// Codebook file, relative to the output directory unless absolute.
    pub path: PathBuf,
    pub attach_patterns: bool,
    pub lu_deg: f64,
    pub ed: EdQuery,
    pub preferred: Method,
    pub all_methods: bool,
}

impl Default for CodebookSpec {
    fn default() -> Self {
        Self {
            path: PathBuf::from("codebook.json"),
            attach_patterns: false,
            lu_deg: 0.0,
            ed: EdQuery::Unknown,
            preferred: Method::Alg1,
            all_methods: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanSpec {
    pub start_deg: f64,
    pub end_deg: f64,
    pub step_deg: f64,
    /// Probe distance; the sector grid's user range when absent.
    pub range_m: Option<f64>,
    pub probe: ProbeMode,
    /// Configuration to scan as a bit-string; optimized for `pair` with
    /// `method` when absent.
    pub config: Option<String>,
    pub pair: PairSpec,
    pub method: Method,
    pub side_lobe_threshold_db: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            start_deg: -90.0,
            end_deg: 90.0,
            step_deg: 0.5,
            range_m: None,
            probe: ProbeMode::Los,
            config: None,
            pair: PairSpec {
                lu_deg: 0.0,
                ed_deg: 15.0,
            },
            method: Method::Alg1,
            side_lobe_threshold_db: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Must match the subcommand when given.
    pub mode: Option<Mode>,
    /// Scenario file, relative to the spec file.
    pub scenario: Option<PathBuf>,
    pub pairs: Vec<PairSpec>,
    pub methods: Vec<Method>,
    pub tx_mode: TxMode,
    /// Overrides the scenario noise power.
    pub n0: Option<f64>,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    pub iters: usize,
    pub run_to_fixpoint: bool,
    pub noisy_measurements: bool,
    pub measurement_averages: usize,
    pub codebook: CodebookSpec,
    pub scan: ScanSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            mode: None,
            scenario: None,
            pairs: default_pairs(),
            methods: Method::ALL.to_vec(),
            tx_mode: TxMode::Tone,
            n0: None,
            seeds: vec![0],
            out_dir: None,
            iters: 2,
            run_to_fixpoint: false,
            noisy_measurements: false,
            measurement_averages: 8,
            codebook: CodebookSpec::default(),
            scan: ScanSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Loads a spec and resolves its scenario path against the spec's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut spec = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let (Some(s), Some(dir)) = (&spec.scenario, path.parent()) {
            if s.is_relative() {
                spec.scenario = Some(dir.join(s));
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method is required"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        if self.iters == 0 && !self.run_to_fixpoint {
            return Err(invalid("iters", "must be at least 1"));
        }
        if self.noisy_measurements && self.measurement_averages == 0 {
            return Err(invalid("measurement_averages", "must be at least 1"));
        }
        if let Some(n0) = self.n0 {
            if !(n0 > 0.0 && n0.is_finite()) {
                return Err(invalid("n0", "must be positive and finite"));
            }
        }
        for p in &self.pairs {
            if p.lu_deg == p.ed_deg {
                return Err(invalid("pairs", "LU and ED must not share an azimuth"));
            }
        }
        Ok(())
    }

    /// Scenario of this spec with its noise override applied.
    pub fn apply_overrides(&self, scenario: &Scenario) -> Scenario {
        let mut s = scenario.clone();
        if self.n0.is_some() {
            s.n0 = self.n0;
        }
        s
    }

    pub fn optimizer_options(&self, n0: f64, seed: u64) -> OptimizerOptions {
        OptimizerOptions {
            iters: self.iters,
            run_to_fixpoint: self.run_to_fixpoint,
            measurement_noise: self.noisy_measurements.then_some(MeasurementNoise {
                variance: n0,
                averages: self.measurement_averages,
                seed,
            }),
            ..OptimizerOptions::default()
        }
    }

    fn output_path(&self, name: &str) -> Option<PathBuf> {
        self.out_dir.as_ref().map(|d| d.join(name))
    }
}

/// Files written by a driver and a human-readable summary for stdout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn emit(spec: &ExperimentSpec, out: &mut RunOutput, name: &str, contents: &str) -> Result<()> {
    if let Some(path) = spec.output_path(name) {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        write_atomic(&path, contents.as_bytes())?;
        out.files.push(path);
    }
    Ok(())
}

/// Outcome of one method on one placement pair and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub seed: u64,
    pub lu_deg: f64,
    pub ed_deg: f64,
    pub method: Method,
    pub n0: f64,
    pub powers: LinkPowers,
    pub lu_db: f64,
    pub ed_db: f64,
    pub sse: SecrecyReport,
    pub trace: OptimizerTrace,
}

/// Runs every method on every pair for every seed. Results are ordered by
/// seed, then pair, then method as listed.
pub fn compare_methods(scenario: &Scenario, spec: &ExperimentSpec) -> Result<Vec<MethodResult>> {
    spec.validate()?;
    let range = scenario.grid.user_range_m;
    let jobs: Vec<(u64, PairSpec)> = spec
        .seeds
        .iter()
        .flat_map(|&seed| spec.pairs.iter().map(move |&p| (seed, p)))
        .collect();
    let nested: Vec<Vec<MethodResult>> = jobs
        .par_iter()
        .map(|&(seed, pair)| {
            let s = spec.apply_overrides(&scenario.with_seed(seed));
            let n0 = s.noise_power()?;
            let tx = s.tx_signal(spec.tx_mode)?;
            let lu = Placement::new(pair.lu_deg, range);
            let ed = Placement::new(pair.ed_deg, range);
            let channels = s.channels(&lu, &ed, &tx)?;
            let eval = s.evaluator(&channels, &tx)?;
            let options = spec.optimizer_options(n0, seed);
            spec.methods
                .iter()
                .map(|&method| {
                    let trace = method.run(&eval, &options)?;
                    let response = build_response(&trace.final_config, &s.element, &tx.freqs)?;
                    let powers = link_powers(&channels, &response, &tx)?;
                    let sse = sum_sse(&channels, &response, &tx, n0, false)?;
                    Ok(MethodResult {
                        seed,
                        lu_deg: pair.lu_deg,
                        ed_deg: pair.ed_deg,
                        method,
                        n0,
                        powers,
                        lu_db: powers.lu_db(),
                        ed_db: powers.ed_db(),
                        sse,
                        trace,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// One row per pair with the seed-averaged LU and ED power (dB) of every
/// method.
pub fn compare_table_csv(spec: &ExperimentSpec, results: &[MethodResult]) -> String {
    let mut out = schema_line(COMPARE_SCHEMA);
    out.push_str("lu_deg,ed_deg");
    for m in &spec.methods {
        out.push_str(&format!(",{m}_lu_db,{m}_ed_db"));
    }
    out.push('\n');
    for p in &spec.pairs {
        out.push_str(&format!("{},{}", p.lu_deg, p.ed_deg));
        for &m in &spec.methods {
            let rows: Vec<&MethodResult> = results
                .iter()
                .filter(|r| r.method == m && r.lu_deg == p.lu_deg && r.ed_deg == p.ed_deg)
                .collect();
            let lu = mean(rows.iter().map(|r| r.lu_db));
            let ed = mean(rows.iter().map(|r| r.ed_db));
            out.push_str(&format!(",{},{}", db2(lu), db2(ed)));
        }
        out.push('\n');
    }
    out
}

/// Seed-averaged raw SSE laid out as one LU-by-ED matrix per method; cells
/// without a pair are empty.
pub fn sse_matrix_csv(spec: &ExperimentSpec, results: &[MethodResult]) -> String {
    let key = |d: f64| d.to_bits();
    let lus: Vec<f64> = dedup_sorted(spec.pairs.iter().map(|p| p.lu_deg));
    let eds: Vec<f64> = dedup_sorted(spec.pairs.iter().map(|p| p.ed_deg));
    let mut cells: BTreeMap<(Method, u64, u64), Vec<f64>> = BTreeMap::new();
    for r in results {
        cells
            .entry((r.method, key(r.lu_deg), key(r.ed_deg)))
            .or_default()
            .push(r.sse.r_sec_raw);
    }
    let mut out = schema_line(SSE_MATRIX_SCHEMA);
    out.push_str("method,lu_deg");
    for e in &eds {
        out.push_str(&format!(",ed_{e}"));
    }
    out.push('\n');
    for &m in &spec.methods {
        for &lu in &lus {
            out.push_str(&format!("{m},{lu}"));
            for &ed in &eds {
                match cells.get(&(m, key(lu), key(ed))) {
                    Some(v) => out.push_str(&format!(",{:.4}", mean(v.iter().copied()))),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
    }
    out
}

fn dedup_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn run_compare(scenario: &Scenario, spec: &ExperimentSpec) -> Result<RunOutput> {
    let results = compare_methods(scenario, spec)?;
    let mut out = RunOutput::default();
    let table = compare_table_csv(spec, &results);
    emit(spec, &mut out, "compare_table.csv", &table)?;
    emit(spec, &mut out, "sse_matrix.csv", &sse_matrix_csv(spec, &results))?;
    emit(spec, &mut out, "compare_traces.json", &serde_json::to_string_pretty(&results)?)?;
    out.summary = table;
    Ok(out)
}

/// Narrowband and wideband LU−ED power gaps of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqSelectivityRow {
    pub seed: u64,
    pub lu_deg: f64,
    pub ed_deg: f64,
    pub config: RisConfig,
    pub narrowband_gap_db: f64,
    /// Gap over the PRS band with the channel held at its tone value, so
    /// only the surface response varies with frequency.
    pub wideband_gap_db: f64,
    pub delta_db: f64,
    /// Gap over the PRS band with frequency-selective channels.
    pub wideband_selective_gap_db: f64,
}

/// LU−ED gap (dB) of `config` over `wide`, with the single-subcarrier
/// `tone_channels` repeated on every subcarrier.
pub fn frozen_channel_gap_db(
    tone_channels: &ChannelSet,
    config: &RisConfig,
    element: &ElementModel,
    wide: &TxSignal,
) -> Result<f64> {
    let channels = tone_channels.broadcast(wide.len())?;
    let response = build_response(config, element, &wide.freqs)?;
    Ok(link_powers(&channels, &response, wide)?.gap_db())
}

/// Optimizes on the tone with `method` and evaluates the same
/// configuration over the scenario's PRS band.
pub fn frequency_selectivity(scenario: &Scenario, spec: &ExperimentSpec, method: Method) -> Result<Vec<FreqSelectivityRow>> {
    spec.validate()?;
    if scenario.element.is_ideal() {
        log::warn!("ideal element model: the wideband gap cannot collapse");
    }
    let range = scenario.grid.user_range_m;
    let jobs: Vec<(u64, PairSpec)> = spec
        .seeds
        .iter()
        .flat_map(|&seed| spec.pairs.iter().map(move |&p| (seed, p)))
        .collect();
    jobs.par_iter()
        .map(|&(seed, pair)| {
            let s = spec.apply_overrides(&scenario.with_seed(seed));
            let tone = s.tx_signal(TxMode::Tone)?;
            let prs = s.tx_signal(TxMode::Prs)?;
            let lu = Placement::new(pair.lu_deg, range);
            let ed = Placement::new(pair.ed_deg, range);
            let tone_channels = s.channels(&lu, &ed, &tone)?;
            let eval = s.evaluator(&tone_channels, &tone)?;
            let n0 = s.noise_power()?;
            let trace = method.run(&eval, &spec.optimizer_options(n0, seed))?;
            let config = trace.final_config;
            let narrow = link_powers(&tone_channels, &build_response(&config, &s.element, &tone.freqs)?, &tone)?.gap_db();
            let wide = frozen_channel_gap_db(&tone_channels, &config, &s.element, &prs)?;
            let wide_channels = s.channels(&lu, &ed, &prs)?;
            let selective = link_powers(&wide_channels, &build_response(&config, &s.element, &prs.freqs)?, &prs)?.gap_db();
            Ok(FreqSelectivityRow {
                seed,
                lu_deg: pair.lu_deg,
                ed_deg: pair.ed_deg,
                config,
                narrowband_gap_db: narrow,
                wideband_gap_db: wide,
                delta_db: wide - narrow,
                wideband_selective_gap_db: selective,
            })
        })
        .collect()
}

pub fn freq_selectivity_csv(rows: &[FreqSelectivityRow]) -> String {
    let mut out = schema_line(FREQ_SCHEMA);
    out.push_str("seed,lu_deg,ed_deg,narrowband_gap_db,wideband_gap_db,delta_db,wideband_selective_gap_db\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.seed,
            r.lu_deg,
            r.ed_deg,
            db2(r.narrowband_gap_db),
            db2(r.wideband_gap_db),
            db2(r.delta_db),
            db2(r.wideband_selective_gap_db)
        ));
    }
    out
}

pub fn run_frequency_selectivity(scenario: &Scenario, spec: &ExperimentSpec) -> Result<RunOutput> {
    let method = spec.methods.first().copied().unwrap_or(Method::Alg1);
    let rows = frequency_selectivity(scenario, spec, method)?;
    let mut out = RunOutput::default();
    let csv = freq_selectivity_csv(&rows);
    emit(spec, &mut out, "freq_selectivity.csv", &csv)?;
    emit(spec, &mut out, "freq_selectivity.json", &serde_json::to_string_pretty(&rows)?)?;
    out.summary = csv;
    Ok(out)
}

fn codebook_path(spec: &ExperimentSpec) -> PathBuf {
    let p = &spec.codebook.path;
    match &spec.out_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.clone(),
    }
}

/// Builds the codebook for the scenario's sector grid with the spec's
/// methods (the optimizers only when the list includes `uniform`).
pub fn build_codebook(scenario: &Scenario, spec: &ExperimentSpec) -> Result<Codebook> {
    spec.validate()?;
    let s = spec.apply_overrides(&scenario.with_seed(spec.seeds[0]));
    let methods: Vec<Method> = spec.methods.iter().copied().filter(|&m| m != Method::Uniform).collect();
    if methods.is_empty() {
        return Err(invalid("methods", "the codebook needs at least one optimizer"));
    }
    let n0 = s.noise_power()?;
    let mut cb = generate_codebook(&s, &s.grid, &methods, spec.tx_mode, &spec.optimizer_options(n0, spec.seeds[0]))?;
    if spec.codebook.attach_patterns {
        let angles = angle_grid(spec.scan.start_deg, spec.scan.end_deg, spec.scan.step_deg)?;
        let range = spec.scan.range_m.unwrap_or(s.grid.user_range_m);
        cb.attach_patterns(&s, &angles, range, spec.scan.probe)?;
    }
    Ok(cb)
}

pub fn run_codebook_gen(scenario: &Scenario, spec: &ExperimentSpec) -> Result<RunOutput> {
    let cb = build_codebook(scenario, spec)?;
    let mut out = RunOutput::default();
    if spec.out_dir.is_some() {
        let path = codebook_path(spec);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        cb.save(&path)?;
        out.files.push(path);
    }
    let table = cb.to_table_csv();
    emit(spec, &mut out, "codebook_table.csv", &table)?;
    out.summary = format!("{} entries, scenario {}\n", cb.entries.len(), cb.scenario_digest);
    Ok(out)
}

fn sector_of(cb: &Codebook, deg: f64) -> Result<usize> {
    let (id, snap) = cb
        .grid
        .nearest(deg)
        .ok_or_else(|| Error::Codebook("empty sector grid".into()))?;
    if snap > 0.0 {
        log::info!("{deg}° snapped to sector {id} ({snap}° away)");
    }
    Ok(id)
}

/// Translates an angle-based query into sector terms, snapping each angle
/// to the nearest sector centre.
pub fn resolve_query(cb: &Codebook, spec: &CodebookSpec) -> Result<(usize, EdKnowledge)> {
    let lu = sector_of(cb, spec.lu_deg)?;
    let knowledge = match &spec.ed {
        EdQuery::Known { ed_deg } => EdKnowledge::Known(sector_of(cb, *ed_deg)?),
        EdQuery::Excluded { ed_degs } => EdKnowledge::ExcludedRegion(
            ed_degs
                .iter()
                .map(|&d| sector_of(cb, d))
                .collect::<Result<BTreeSet<_>>>()?,
        ),
        EdQuery::Unknown => EdKnowledge::Unknown,
    };
    Ok((lu, knowledge))
}

pub fn query_codebook(scenario: &Scenario, spec: &ExperimentSpec, cb: &Codebook) -> Result<Selection> {
    let s = spec.apply_overrides(&scenario.with_seed(spec.seeds[0]));
    let (lu, knowledge) = resolve_query(cb, &spec.codebook)?;
    select_config(
        cb,
        &s,
        lu,
        &knowledge,
        SelectOptions {
            preferred: spec.codebook.preferred,
            all_methods: spec.codebook.all_methods,
        },
    )
}

pub fn run_codebook_query(scenario: &Scenario, spec: &ExperimentSpec) -> Result<RunOutput> {
    let path = codebook_path(spec);
    if !path.exists() {
        return Err(Error::Codebook(format!("codebook file {} not found", path.display())));
    }
    let cb = Codebook::load(&path)?;
    let sel = query_codebook(scenario, spec, &cb)?;
    let mut out = RunOutput::default();
    emit(spec, &mut out, "selection.json", &serde_json::to_string_pretty(&sel)?)?;
    out.summary = format!(
        "entry {}\nconfig {}\nguaranteed_sse {}\n{}",
        sel.entry.id(),
        sel.entry.config,
        sel.guaranteed_sse,
        if sel.digest_mismatch {
            "warning: scenario digest differs from the codebook\n"
        } else {
            ""
        }
    );
    Ok(out)
}

/// Pattern of the configured (or freshly optimized) surface and its side
/// lobes relative to the LU angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub config: RisConfig,
    pub pattern: Vec<PatternPoint>,
    pub side_lobes: Vec<f64>,
}

pub fn pattern_scan(scenario: &Scenario, spec: &ExperimentSpec) -> Result<ScanResult> {
    spec.validate()?;
    let s = spec.apply_overrides(&scenario.with_seed(spec.seeds[0]));
    let scan = &spec.scan;
    let config = match &scan.config {
        Some(bits) => RisConfig::parse(s.ris.n_v, s.ris.n_h, bits)?,
        None => {
            let tx = s.tx_signal(spec.tx_mode)?;
            let range = s.grid.user_range_m;
            let channels = s.channels(
                &Placement::new(scan.pair.lu_deg, range),
                &Placement::new(scan.pair.ed_deg, range),
                &tx,
            )?;
            let eval = s.evaluator(&channels, &tx)?;
            let n0 = s.noise_power()?;
            scan.method.run(&eval, &spec.optimizer_options(n0, spec.seeds[0]))?.final_config
        }
    };
    let angles = angle_grid(scan.start_deg, scan.end_deg, scan.step_deg)?;
    let range = scan.range_m.unwrap_or(s.grid.user_range_m);
    let pattern = scan_power_pattern(&s, &config, &angles, range, scan.probe)?;
    let side_lobes = detect_side_lobes(&pattern, scan.pair.lu_deg, scan.side_lobe_threshold_db, s.grid.sector_width_deg)?;
    Ok(ScanResult {
        config,
        pattern,
        side_lobes,
    })
}

pub fn run_pattern_scan(scenario: &Scenario, spec: &ExperimentSpec) -> Result<RunOutput> {
    let r = pattern_scan(scenario, spec)?;
    let mut out = RunOutput::default();
    emit(spec, &mut out, "pattern.csv", &pattern_report_csv(&r.pattern))?;
    let peak = r
        .pattern
        .iter()
        .max_by(|a, b| a.power.total_cmp(&b.power))
        .expect("non-empty pattern");
    out.summary = format!(
        "config {}\n{} points, peak {} dB at {}°\nside lobes: {:?}\n",
        r.config,
        r.pattern.len(),
        db2(to_db(peak.power)),
        peak.angle_deg,
        r.side_lobes
    );
    Ok(out)
}

/// Dispatches to the driver for `mode`.
pub fn run(mode: Mode, scenario: &Scenario, spec: &ExperimentSpec) -> Result<RunOutput> {
    match mode {
        Mode::Compare => run_compare(scenario, spec),
        Mode::CodebookGen => run_codebook_gen(scenario, spec),
        Mode::CodebookQuery => run_codebook_query(scenario, spec),
        Mode::PatternScan => run_pattern_scan(scenario, spec),
        Mode::FrequencySelectivity => run_frequency_selectivity(scenario, spec),
    }
}
