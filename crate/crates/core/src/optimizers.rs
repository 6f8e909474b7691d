//! Greedy configuration of the 1-bit surface.
//!
//! * [`algorithm1`] sweeps every column and then every row of the whole
//!   surface, keeping a flip only when the power ratio `P_LU / P_ED`
//!   strictly improves.
//! * [`algorithm2`] splits the surface into a left (LU) half that greedily
//!   raises `P_LU` and a right (ED) half that greedily lowers `P_ED`, each
//!   with its own "old" register.
//! * [`lu_max`] and [`ed_min`] run the full-surface sweep on one user's
//!   power, ignoring the other user.
//! * [`exhaustive_oracle`] enumerates all `2^M` configurations for small
//!   surfaces.
//!
//! Powers are the noiseless aggregate over occupied subcarriers unless a
//! [`MeasurementNoise`] model is supplied, in which case every decision is
//! taken on a noisy power estimate, like a capture-and-measure loop would.

use std::cmp::Ordering;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::ChannelSet;
use crate::ofdm::TxSignal;
use crate::ris::{ElementModel, Half, Move, RisConfig};
use crate::secrecy::LinkPowers;

/// Quantity a greedy step is judged on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// `P_LU / P_ED`, maximized; `+∞` when `P_ED = 0`.
    Ratio,
    /// `P_LU`, maximized.
    LuPower,
    /// `P_ED`, minimized.
    EdPower,
}

impl ObjectiveKind {
    pub fn maximize(self) -> bool {
        !matches!(self, ObjectiveKind::EdPower)
    }

    pub fn value(self, p: LinkPowers) -> f64 {
        match self {
            ObjectiveKind::Ratio => ratio_or_inf(p.p_lu, p.p_ed),
            ObjectiveKind::LuPower => p.p_lu,
            ObjectiveKind::EdPower => p.p_ed,
        }
    }

    /// Strict improvement of `new` over `old`; ties are not improvements.
    pub fn improves(self, new: f64, old: f64) -> bool {
        if self.maximize() {
            new > old
        } else {
            new < old
        }
    }
}

fn ratio_or_inf(p_lu: f64, p_ed: f64) -> f64 {
    if p_ed == 0.0 {
        if p_lu > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        p_lu / p_ed
    }
}

/// Configuration strategies compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Alg1,
    Alg2,
    LuMax,
    EdMin,
    Uniform,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Alg1, Method::Alg2, Method::LuMax, Method::EdMin, Method::Uniform];
    pub const OPTIMIZERS: [Method; 4] = [Method::Alg1, Method::Alg2, Method::LuMax, Method::EdMin];

    pub fn name(self) -> &'static str {
        match self {
            Method::Alg1 => "alg1",
            Method::Alg2 => "alg2",
            Method::LuMax => "lu_max",
            Method::EdMin => "ed_min",
            Method::Uniform => "uniform",
        }
    }

    pub fn run(self, eval: &Evaluator, options: &OptimizerOptions) -> Result<OptimizerTrace> {
        match self {
            Method::Alg1 => algorithm1(eval, options),
            Method::Alg2 => algorithm2(eval, options),
            Method::LuMax => lu_max(eval, options),
            Method::EdMin => ed_min(eval, options),
            Method::Uniform => uniform(eval),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Noisy power estimates: each measurement averages `averages` captures of
/// `|H·x + n|²` with `n ~ CN(0, variance)` per occupied subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementNoise {
    pub variance: f64,
    pub averages: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Initial configuration; all zeros when `None`.
    #[serde(default)]
    pub init: Option<RisConfig>,
    pub iters: usize,
    /// Keep sweeping until a whole pass accepts nothing.
    #[serde(default)]
    pub run_to_fixpoint: bool,
    #[serde(default)]
    pub measurement_noise: Option<MeasurementNoise>,
    /// Store the configuration after every step in the trace.
    #[serde(default)]
    pub record_configs: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            init: None,
            iters: 2,
            run_to_fixpoint: false,
            measurement_noise: None,
            record_configs: false,
        }
    }
}

const FIXPOINT_PASS_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Zero-based sweep pass.
    pub iteration: usize,
    #[serde(rename = "move")]
    pub mv: Move,
    pub objective: ObjectiveKind,
    #[serde(with = "crate::serde_util::extended_f64")]
    pub before: f64,
    #[serde(with = "crate::serde_util::extended_f64")]
    pub after: f64,
    pub accepted: bool,
    /// Configuration once the step (and any revert) completed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RisConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub method: Method,
    pub objective: ObjectiveKind,
    pub initial_config: RisConfig,
    pub steps: Vec<TraceStep>,
    pub passes: usize,
    pub final_config: RisConfig,
    /// Register value of `objective` at termination.
    #[serde(with = "crate::serde_util::extended_f64")]
    pub final_objective: f64,
    /// Noiseless powers of the final configuration.
    pub final_powers: LinkPowers,
}

impl OptimizerTrace {
    pub fn accepted_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }
}

/// Precomputed cascade terms of one problem instance, restricted to the
/// occupied subcarriers.
#[derive(Debug, Clone)]
pub struct Evaluator {
    n_v: usize,
    n_h: usize,
    /// `h_d` per occupied subcarrier.
    direct_lu: Vec<Complex64>,
    direct_ed: Vec<Complex64>,
    /// `h_m·g_m`, element-major: `cascade[m][v]` over occupied subcarriers.
    cascade_lu: Vec<Vec<Complex64>>,
    cascade_ed: Vec<Vec<Complex64>>,
    /// Reflection of states 0 and 1 per occupied subcarrier.
    states: Vec<[Complex64; 2]>,
    /// `|x[v]|²` per occupied subcarrier.
    tx_power: Vec<f64>,
}

/// Running effective channels of a configuration.
#[derive(Debug, Clone, PartialEq)]
struct SumState {
    config: RisConfig,
    lu: Vec<Complex64>,
    ed: Vec<Complex64>,
}

impl Evaluator {
    pub fn new(channels: &ChannelSet, model: &ElementModel, tx: &TxSignal, n_v: usize, n_h: usize) -> Result<Self> {
        channels.validate()?;
        model.validate()?;
        if channels.m != n_v * n_h {
            return Err(Error::DimensionMismatch(format!(
                "channels carry {} elements, surface has {n_v}×{n_h}",
                channels.m
            )));
        }
        if channels.k != tx.len() {
            return Err(Error::DimensionMismatch(format!(
                "channels carry {} subcarriers, signal has {}",
                channels.k,
                tx.len()
            )));
        }
        let occ: Vec<usize> = tx.occupied_indices().collect();
        let occ_freqs: Vec<f64> = occ.iter().map(|&v| tx.freqs[v]).collect();
        let cascade = |rows: &[Vec<Complex64>]| -> Vec<Vec<Complex64>> {
            (0..channels.m)
                .map(|i| occ.iter().map(|&v| rows[v][i] * channels.g_ris[v][i]).collect())
                .collect()
        };
        Ok(Self {
            n_v,
            n_h,
            direct_lu: occ.iter().map(|&v| channels.h_d_lu[v]).collect(),
            direct_ed: occ.iter().map(|&v| channels.h_d_ed[v]).collect(),
            cascade_lu: cascade(&channels.h_ris_lu),
            cascade_ed: cascade(&channels.h_ris_ed),
            states: model.state_table(&occ_freqs)?,
            tx_power: occ.iter().map(|&v| tx.symbol(v).norm_sqr()).collect(),
        })
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn num_elements(&self) -> usize {
        self.n_v * self.n_h
    }

    fn check_config(&self, config: &RisConfig) -> Result<()> {
        if config.n_v() != self.n_v || config.n_h() != self.n_h {
            return Err(Error::DimensionMismatch(format!(
                "configuration is {}×{}, surface is {}×{}",
                config.n_v(),
                config.n_h(),
                self.n_v,
                self.n_h
            )));
        }
        Ok(())
    }

    fn effective(&self, bits: impl Fn(usize) -> bool) -> (Vec<Complex64>, Vec<Complex64>) {
        let m = self.num_elements();
        let sum = |direct: &[Complex64], cascade: &[Vec<Complex64>]| -> Vec<Complex64> {
            direct
                .iter()
                .zip(&self.states)
                .enumerate()
                .map(|(v, (&d, st))| d + (0..m).map(|i| cascade[i][v] * st[bits(i) as usize]).sum::<Complex64>())
                .collect()
        };
        (sum(&self.direct_lu, &self.cascade_lu), sum(&self.direct_ed, &self.cascade_ed))
    }

    fn powers_of(&self, lu: &[Complex64], ed: &[Complex64]) -> LinkPowers {
        let agg = |s: &[Complex64]| s.iter().zip(&self.tx_power).map(|(z, p)| z.norm_sqr() * p).sum();
        LinkPowers {
            p_lu: agg(lu),
            p_ed: agg(ed),
        }
    }

    /// Noiseless powers of `config`, summed from scratch.
    pub fn powers(&self, config: &RisConfig) -> Result<LinkPowers> {
        self.check_config(config)?;
        let bits = config.bits();
        let (lu, ed) = self.effective(|i| bits[i]);
        Ok(self.powers_of(&lu, &ed))
    }

    pub fn objective(&self, config: &RisConfig, kind: ObjectiveKind) -> Result<f64> {
        Ok(kind.value(self.powers(config)?))
    }

    fn code_powers(&self, code: u64) -> LinkPowers {
        let m = self.num_elements();
        let (lu, ed) = self.effective(|i| (code >> (m - 1 - i)) & 1 == 1);
        self.powers_of(&lu, &ed)
    }

    fn state(&self, config: &RisConfig) -> SumState {
        let bits = config.bits();
        let (lu, ed) = self.effective(|i| bits[i]);
        SumState {
            config: config.clone(),
            lu,
            ed,
        }
    }

    fn apply(&self, state: &mut SumState, indices: &[usize]) {
        for &i in indices {
            let old = state.config.bits()[i] as usize;
            for (v, st) in self.states.iter().enumerate() {
                let delta = st[1 - old] - st[old];
                state.lu[v] += self.cascade_lu[i][v] * delta;
                state.ed[v] += self.cascade_ed[i][v] * delta;
            }
        }
        // Indices of one move are distinct, so toggling after the sums is safe.
        let mut bits = state.config.bits().to_vec();
        for &i in indices {
            bits[i] = !bits[i];
        }
        state.config = RisConfig::from_bits(self.n_v, self.n_h, bits).expect("same shape");
    }
}

/// Incremental evaluation context for one optimizer run.
struct Meter<'a> {
    eval: &'a Evaluator,
    noise: Option<(MeasurementNoise, ChaCha8Rng)>,
}

impl<'a> Meter<'a> {
    fn new(eval: &'a Evaluator, noise: Option<MeasurementNoise>) -> Result<Self> {
        if let Some(n) = noise {
            if !(n.variance.is_finite() && n.variance >= 0.0) || n.averages == 0 {
                return Err(invalid("measurement_noise", "variance must be ≥ 0 and averages ≥ 1"));
            }
        }
        Ok(Self {
            eval,
            noise: noise.map(|n| (n, ChaCha8Rng::seed_from_u64(n.seed))),
        })
    }

    fn apply(&self, state: &mut SumState, mv: Move) -> Result<()> {
        let idx = mv.indices(self.eval.n_v, self.eval.n_h)?;
        self.eval.apply(state, &idx);
        Ok(())
    }

    fn measure(&mut self, state: &SumState) -> LinkPowers {
        let exact = self.eval.powers_of(&state.lu, &state.ed);
        let Some((noise, rng)) = self.noise.as_mut() else {
            return exact;
        };
        let sigma = (noise.variance / 2.0).sqrt();
        let tx_power = &self.eval.tx_power;
        let mut noisy = |sums: &[Complex64]| -> f64 {
            let mut total = 0.0;
            for (z, p) in sums.iter().zip(tx_power) {
                let signal = z * p.sqrt();
                let mut acc = 0.0;
                for _ in 0..noise.averages {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    acc += (signal + Complex64::new(re * sigma, im * sigma)).norm_sqr();
                }
                total += acc / noise.averages as f64;
            }
            total
        };
        let p_lu = noisy(&state.lu);
        let p_ed = noisy(&state.ed);
        LinkPowers { p_lu, p_ed }
    }
}

fn initial_config(eval: &Evaluator, options: &OptimizerOptions) -> Result<RisConfig> {
    match &options.init {
        Some(c) => {
            eval.check_config(c)?;
            Ok(c.clone())
        }
        None => Ok(uniform_config(eval.n_v, eval.n_h)),
    }
}

fn pass_limit(options: &OptimizerOptions) -> usize {
    if options.run_to_fixpoint {
        FIXPOINT_PASS_LIMIT
    } else {
        options.iters
    }
}

/// One greedy flip: apply, measure, keep on strict improvement, otherwise
/// restore the pre-flip state exactly.
#[allow(clippy::too_many_arguments)]
fn greedy_step(
    meter: &mut Meter<'_>,
    state: &mut SumState,
    register: &mut f64,
    objective: ObjectiveKind,
    mv: Move,
    iteration: usize,
    record: bool,
    steps: &mut Vec<TraceStep>,
) -> Result<bool> {
    let saved = state.clone();
    meter.apply(state, mv)?;
    let after = objective.value(meter.measure(state));
    let before = *register;
    let accepted = objective.improves(after, before);
    if accepted {
        *register = after;
    } else {
        *state = saved;
    }
    steps.push(TraceStep {
        iteration,
        mv,
        objective,
        before,
        after,
        accepted,
        config: record.then(|| state.config.clone()),
    });
    Ok(accepted)
}

/// Column sweep then row sweep over the whole surface, per pass.
fn full_surface_greedy(eval: &Evaluator, objective: ObjectiveKind, method: Method, options: &OptimizerOptions) -> Result<OptimizerTrace> {
    let init = initial_config(eval, options)?;
    let mut meter = Meter::new(eval, options.measurement_noise)?;
    let mut state = eval.state(&init);
    let mut register = objective.value(meter.measure(&state));
    let mut steps = Vec::new();
    let mut passes = 0;
    for iteration in 0..pass_limit(options) {
        passes += 1;
        let mut any = false;
        let moves = (0..eval.n_h)
            .map(|index| Move::Column { index })
            .chain((0..eval.n_v).map(|index| Move::Row { index }));
        for mv in moves {
            any |= greedy_step(&mut meter, &mut state, &mut register, objective, mv, iteration, options.record_configs, &mut steps)?;
        }
        if options.run_to_fixpoint && !any {
            break;
        }
    }
    let final_powers = eval.powers(&state.config)?;
    Ok(OptimizerTrace {
        method,
        objective,
        initial_config: init,
        steps,
        passes,
        final_config: state.config,
        final_objective: register,
        final_powers,
    })
}

/// Full-surface greedy maximization of `P_LU / P_ED`.
pub fn algorithm1(eval: &Evaluator, options: &OptimizerOptions) -> Result<OptimizerTrace> {
    full_surface_greedy(eval, ObjectiveKind::Ratio, Method::Alg1, options)
}

/// Full-surface greedy maximization of the LU power alone.
pub fn lu_max(eval: &Evaluator, options: &OptimizerOptions) -> Result<OptimizerTrace> {
    full_surface_greedy(eval, ObjectiveKind::LuPower, Method::LuMax, options)
}

/// Full-surface greedy minimization of the ED power alone.
pub fn ed_min(eval: &Evaluator, options: &OptimizerOptions) -> Result<OptimizerTrace> {
    full_surface_greedy(eval, ObjectiveKind::EdPower, Method::EdMin, options)
}

/// Partitioned greedy: left columns raise `P_LU`, right columns lower
/// `P_ED`, then each row's left half for the LU and right half for the ED.
/// The two registers are only refreshed by their own accepted steps.
pub fn algorithm2(eval: &Evaluator, options: &OptimizerOptions) -> Result<OptimizerTrace> {
    if !eval.n_h.is_multiple_of(2) {
        return Err(invalid("n_h", "the partitioned optimizer needs an even column count"));
    }
    let init = initial_config(eval, options)?;
    let mut meter = Meter::new(eval, options.measurement_noise)?;
    let mut state = eval.state(&init);
    let start = meter.measure(&state);
    let mut lu_reg = start.p_lu;
    let mut ed_reg = start.p_ed;
    let half = eval.n_h / 2;
    let record = options.record_configs;
    let mut steps = Vec::new();
    let mut passes = 0;
    for iteration in 0..pass_limit(options) {
        passes += 1;
        let mut any = false;
        for index in 0..half {
            any |= greedy_step(&mut meter, &mut state, &mut lu_reg, ObjectiveKind::LuPower, Move::Column { index }, iteration, record, &mut steps)?;
        }
        for index in half..eval.n_h {
            any |= greedy_step(&mut meter, &mut state, &mut ed_reg, ObjectiveKind::EdPower, Move::Column { index }, iteration, record, &mut steps)?;
        }
        for index in 0..eval.n_v {
            let lu_move = Move::HalfRow { index, half: Half::Left };
            any |= greedy_step(&mut meter, &mut state, &mut lu_reg, ObjectiveKind::LuPower, lu_move, iteration, record, &mut steps)?;
            let ed_move = Move::HalfRow { index, half: Half::Right };
            any |= greedy_step(&mut meter, &mut state, &mut ed_reg, ObjectiveKind::EdPower, ed_move, iteration, record, &mut steps)?;
        }
        if options.run_to_fixpoint && !any {
            break;
        }
    }
    let final_powers = eval.powers(&state.config)?;
    Ok(OptimizerTrace {
        method: Method::Alg2,
        objective: ObjectiveKind::Ratio,
        initial_config: init,
        steps,
        passes,
        final_config: state.config,
        final_objective: ratio_or_inf(final_powers.p_lu, final_powers.p_ed),
        final_powers,
    })
}

/// The unconfigured surface: every element in state 0.
pub fn uniform_config(n_v: usize, n_h: usize) -> RisConfig {
    RisConfig::zeros(n_v, n_h)
}

fn uniform(eval: &Evaluator) -> Result<OptimizerTrace> {
    let config = uniform_config(eval.n_v, eval.n_h);
    let final_powers = eval.powers(&config)?;
    Ok(OptimizerTrace {
        method: Method::Uniform,
        objective: ObjectiveKind::Ratio,
        initial_config: config.clone(),
        steps: Vec::new(),
        passes: 0,
        final_config: config,
        final_objective: ratio_or_inf(final_powers.p_lu, final_powers.p_ed),
        final_powers,
    })
}

/// Largest surface [`exhaustive_oracle`] accepts.
pub const ORACLE_MAX_ELEMENTS: usize = 20;

/// Global optimum of `objective` over all `2^M` configurations. Ties go to
/// the lexicographically smallest bit-string.
pub fn exhaustive_oracle(eval: &Evaluator, objective: ObjectiveKind) -> Result<(RisConfig, f64)> {
    let m = eval.num_elements();
    if m > ORACLE_MAX_ELEMENTS {
        return Err(Error::SearchSpaceTooLarge(m));
    }
    let total: u64 = 1 << m;
    // (code, value); `better` prefers the objective, then the smaller code.
    let better = |a: (u64, f64), b: (u64, f64)| -> (u64, f64) {
        let ord = if objective.maximize() {
            a.1.partial_cmp(&b.1)
        } else {
            b.1.partial_cmp(&a.1)
        };
        match ord {
            Some(Ordering::Greater) => a,
            Some(Ordering::Less) => b,
            _ => {
                if a.0 <= b.0 {
                    a
                } else {
                    b
                }
            }
        }
    };
    let chunk = 1u64 << m.saturating_sub(6).min(12);
    let (code, value) = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            (lo..hi)
                .map(|code| (code, objective.value(eval.code_powers(code))))
                .reduce(better)
                .expect("non-empty chunk")
        })
        .reduce_with(better)
        .expect("non-empty search space");
    Ok((RisConfig::from_index(eval.n_v, eval.n_h, code), value))
}

/// Column and row flips of `config` that strictly improve `objective`,
/// evaluated from scratch.
pub fn improving_moves(eval: &Evaluator, config: &RisConfig, objective: ObjectiveKind) -> Result<Vec<Move>> {
    let base = eval.objective(config, objective)?;
    let mut out = Vec::new();
    let moves = (0..eval.n_h)
        .map(|index| Move::Column { index })
        .chain((0..eval.n_v).map(|index| Move::Row { index }));
    for mv in moves {
        let mut c = config.clone();
        c.apply(mv)?;
        if objective.improves(eval.objective(&c, objective)?, base) {
            out.push(mv);
        }
    }
    Ok(out)
}
