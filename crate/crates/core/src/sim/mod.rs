//! SNR sweeps over a fading channel with delayed CSI feedback.
//!
//! Per slot the UE measures the channel, selects a report, and the base
//! station applies the reported precoder `feedback_delay_slots` later. The
//! transmission succeeds when the effective SINR realized on the applied slot
//! reaches the threshold of the reported CQI.

use serde::{Deserialize, Serialize};

use crate::channel::{generate_channel, ChannelConfig, ChannelRealization};
use crate::codebook::{oversampling_factors, AntennaConfig, Type2Config};
use crate::csi::{
    effective_sinr, map_cqi, mimo_capacity, select_csi, svd_precode, CodebookSet, CqiTable,
    SelectionConfig,
};
use crate::csi::{layer_sinr_mmse, CsiReport};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use crate::overhead::expected_overhead;
use crate::par::{map_indexed, Execution};

mod output;

pub use output::{write_comparison_csv, write_cqi_hist_csv, write_ri_hist_csv, write_sweep_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodebookMode {
    #[serde(rename = "type1")]
    TypeI,
    #[serde(rename = "type2")]
    TypeII,
    /// Unquantized SVD precoding scored by its capacity; an upper bound.
    #[serde(rename = "svd")]
    SvdIdeal,
}

impl CodebookMode {
    pub fn name(self) -> &'static str {
        match self {
            CodebookMode::TypeI => "type1",
            CodebookMode::TypeII => "type2",
            CodebookMode::SvdIdeal => "svd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "type1" | "typei" | "i" => Some(CodebookMode::TypeI),
            "type2" | "typeii" | "ii" => Some(CodebookMode::TypeII),
            "svd" | "svdideal" => Some(CodebookMode::SvdIdeal),
            _ => None,
        }
    }
}

impl std::fmt::Display for CodebookMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// 52 PRBs of 12 subcarriers at 15 kHz.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 52.0 * 12.0 * 15e3;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub snr_points_db: Vec<f64>,
    pub num_slots: usize,
    pub feedback_delay_slots: usize,
    pub mode: CodebookMode,
    pub antenna: AntennaConfig,
    /// The channel seed is overridden by `seed`.
    pub channel: ChannelConfig,
    pub type2: Type2Config,
    pub cqi_table: CqiTable,
    pub selection: SelectionConfig,
    /// Occupied bandwidth used to convert bits/s/Hz into Mbit/s.
    pub bandwidth_hz: f64,
    pub estimation: CsiEstimation,
    pub seed: u64,
    pub execution: Execution,
}

/// How the UE obtains the channel it selects CSI on.
///
/// With `Pilot`, each subband matrix is observed through additive white
/// noise of variance `noise_var / 10^(gain_db / 10)` (the CSI-RS processing
/// gain), then LMMSE-shrunk; the residual estimation error is counted as
/// extra noise when predicting SINR.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CsiEstimation {
    #[default]
    Perfect,
    Pilot { gain_db: f64 },
}


impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            snr_points_db: (-10..=40).step_by(2).map(f64::from).collect(),
            num_slots: 1000,
            feedback_delay_slots: 1,
            mode: CodebookMode::TypeI,
            antenna: AntennaConfig::new(4, 1),
            channel: ChannelConfig::default(),
            type2: Type2Config::default(),
            cqi_table: CqiTable::default(),
            selection: SelectionConfig::default(),
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            estimation: CsiEstimation::default(),
            seed: 1,
            execution: Execution::Parallel,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_points_db.is_empty() {
            return Err(Error::config("snr", "at least one SNR point is required"));
        }
        if self.snr_points_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("snr", "SNR points must be finite"));
        }
        if self.snr_points_db.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("snr", "SNR points must be sorted ascending"));
        }
        if self.num_slots == 0 {
            return Err(Error::config("slots", "must be positive"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::config("bandwidth_hz", "must be positive"));
        }
        self.antenna.validate()?;
        if self.channel.num_tx_ports != self.antenna.num_ports() {
            return Err(Error::config(
                "num_tx_ports",
                format!(
                    "channel has {} tx ports but the array has {}",
                    self.channel.num_tx_ports,
                    self.antenna.num_ports()
                ),
            ));
        }
        self.channel.validate()?;
        self.cqi_table.validate()?;
        self.selection.validate()?;
        if let CsiEstimation::Pilot { gain_db } = self.estimation {
            if !gain_db.is_finite() {
                return Err(Error::config("estimation.gain_db", "must be finite"));
            }
        }
        if self.mode == CodebookMode::TypeII {
            self.type2.validate(&self.antenna)?;
        }
        Ok(())
    }

    fn channel_config(&self) -> ChannelConfig {
        ChannelConfig {
            seed: self.seed,
            ..self.channel.clone()
        }
    }

    fn codebooks(&self) -> Result<Option<CodebookSet>> {
        let ov = oversampling_factors(&self.antenna)?;
        Ok(match self.mode {
            CodebookMode::TypeI => Some(CodebookSet::type1(&self.antenna, &ov)?),
            CodebookMode::TypeII => Some(CodebookSet::type2(&self.antenna, &self.type2, &ov)?),
            CodebookMode::SvdIdeal => None,
        })
    }
}

/// Linear noise variance for an SNR in dB given unit mean per-entry channel power
/// and unit total transmit power.
pub fn noise_var_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    /// bits/s/Hz
    pub mean_throughput: f64,
    pub mean_mbps: f64,
    /// Standard error of `mean_throughput` from batch means over the slot sequence.
    pub std_error: f64,
    /// `ri_histogram[r - 1]` is the fraction of slots reporting rank `r`.
    pub ri_histogram: Vec<f64>,
    /// `cqi_histogram[k]` is the fraction of slots reporting CQI `k`, `k = 0..=15`.
    pub cqi_histogram: Vec<f64>,
    pub mean_overhead_bits: f64,
    pub slots_failed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub mode: CodebookMode,
    /// PMI report size per rank used for the overhead expectation.
    pub per_rank_bits: Vec<u32>,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SlotOutcome {
    ri: usize,
    cqi: u8,
    throughput: f64,
    failed: bool,
}

const STD_ERROR_BATCHES: usize = 20;

fn realized_eff_sinr(applied: &[CMat], precoder: &[CMat], noise_var: f64) -> Result<f64> {
    let mut sinrs = Vec::with_capacity(applied.len() * precoder[0].ncols());
    for (h, w) in applied.iter().zip(precoder) {
        sinrs.extend(layer_sinr_mmse(h, w, noise_var)?);
    }
    effective_sinr(&sinrs)
}

/// Salt separating the estimation-noise stream from the channel stream.
const ESTIMATION_SALT: u64 = 0x6e72_7369_6d5f_6573;

/// LMMSE estimate of one slot and the noise variance to predict SINR with.
///
/// The noise draw depends only on `seed` and `slot_index`, so every SNR point
/// and every mode sees the same normalized estimation error.
fn estimate_slot(
    slot: &[CMat],
    noise_var: f64,
    gain_db: f64,
    seed: u64,
    slot_index: usize,
) -> (Vec<CMat>, f64) {
    let err_var = noise_var / 10f64.powf(gain_db / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ESTIMATION_SALT);
    rng.set_stream(slot_index as u64);
    let std = (err_var / 2.0).sqrt();
    let shrink = 1.0 / (1.0 + err_var);
    let est = slot
        .iter()
        .map(|h| {
            CMat::from_fn(h.nrows(), h.ncols(), |r, c| {
                let e = C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
                (h[(r, c)] + e * std) * shrink
            })
        })
        .collect();
    (est, noise_var + err_var * shrink)
}

fn score_report(
    report: &CsiReport,
    applied: &[CMat],
    noise_var: f64,
    cfg: &SweepConfig,
) -> Result<SlotOutcome> {
    if report.cqi == 0 {
        return Ok(SlotOutcome {
            ri: report.ri,
            cqi: 0,
            throughput: 0.0,
            failed: false,
        });
    }
    let eff = realized_eff_sinr(applied, &report.precoder, noise_var)?;
    let ok = eff >= cfg.cqi_table.threshold_linear(report.cqi, cfg.selection.target_bler);
    Ok(SlotOutcome {
        ri: report.ri,
        cqi: report.cqi,
        throughput: if ok { report.predicted_throughput } else { 0.0 },
        failed: !ok,
    })
}

fn svd_outcome(applied: &[CMat], noise_var: f64, cfg: &SweepConfig) -> Result<SlotOutcome> {
    let mut cap = 0.0;
    let mut gains = Vec::new();
    let mut rank = 0;
    for h in applied {
        let s = svd_precode(h)?;
        cap += mimo_capacity(&s.sigma, noise_var)?;
        rank = rank.max(s.rank());
        gains.extend(s.sigma.iter().map(|x| x * x / noise_var));
    }
    let eff = effective_sinr(&gains)?;
    Ok(SlotOutcome {
        ri: rank.max(1),
        cqi: map_cqi(eff, &cfg.cqi_table, cfg.selection.target_bler),
        throughput: cap / applied.len() as f64,
        failed: false,
    })
}

fn aggregate(
    snr_db: f64,
    outcomes: &[SlotOutcome],
    max_rank: usize,
    per_rank_bits: &[u32],
    cfg: &SweepConfig,
) -> Result<SweepPoint> {
    let n = outcomes.len() as f64;
    let mut ri = vec![0usize; max_rank];
    let mut cqi = [0usize; 16];
    let mut failed = 0usize;
    let mut total = 0.0;
    for o in outcomes {
        ri[o.ri - 1] += 1;
        cqi[o.cqi as usize] += 1;
        failed += usize::from(o.failed);
        total += o.throughput;
    }
    let mean = total / n;

    let batches = STD_ERROR_BATCHES.min(outcomes.len());
    let std_error = if batches > 1 {
        let size = outcomes.len() / batches;
        let means: Vec<f64> = (0..batches)
            .map(|b| outcomes[b * size..(b + 1) * size].iter().map(|o| o.throughput).sum::<f64>() / size as f64)
            .collect();
        let m = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
        (var / batches as f64).sqrt()
    } else {
        0.0
    };

    let ri_histogram: Vec<f64> = ri.iter().map(|&c| c as f64 / n).collect();
    let mean_overhead_bits = expected_overhead(&ri_histogram, per_rank_bits)?;
    Ok(SweepPoint {
        snr_db,
        mean_throughput: mean,
        mean_mbps: mean * cfg.bandwidth_hz / 1e6,
        std_error,
        ri_histogram,
        cqi_histogram: cqi.iter().map(|&c| c as f64 / n).collect(),
        mean_overhead_bits,
        slots_failed: failed as f64 / n,
    })
}

/// Runs one sweep on a pre-generated channel.
pub fn run_sweep_on(cfg: &SweepConfig, channel: &ChannelRealization) -> Result<SweepResult> {
    cfg.validate()?;
    let needed = cfg.num_slots + cfg.feedback_delay_slots;
    if channel.num_slots() < needed {
        return Err(Error::InvalidArgument(format!(
            "channel has {} slots, sweep needs {needed}",
            channel.num_slots()
        )));
    }
    let codebooks = cfg.codebooks()?;
    let nsb = channel.num_subbands();
    let (max_rank, per_rank_bits) = match &codebooks {
        Some(set) => (
            set.max_rank(),
            set.per_rank_bits(if cfg.selection.subband_overhead { nsb } else { 1 })?,
        ),
        None => {
            let r = cfg.channel.num_rx_ports.min(cfg.channel.num_tx_ports);
            (r, vec![0; r])
        }
    };

    let n_snr = cfg.snr_points_db.len();
    let outcomes: Vec<Result<SlotOutcome>> = map_indexed(n_snr * cfg.num_slots, cfg.execution, |job| {
        let (p, s) = (job / cfg.num_slots, job % cfg.num_slots);
        let noise_var = noise_var_from_snr_db(cfg.snr_points_db[p]);
        let applied = channel.slot(s + cfg.feedback_delay_slots);
        match &codebooks {
            Some(set) => {
                let report = match cfg.estimation {
                    CsiEstimation::Perfect => {
                        select_csi(channel.slot(s), noise_var, set, &cfg.cqi_table, &cfg.selection)?
                    }
                    CsiEstimation::Pilot { gain_db } => {
                        let (est, nv) = estimate_slot(channel.slot(s), noise_var, gain_db, cfg.seed, s);
                        select_csi(&est, nv, set, &cfg.cqi_table, &cfg.selection)?
                    }
                };
                score_report(&report, applied, noise_var, cfg)
            }
            None => svd_outcome(applied, noise_var, cfg),
        }
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let points = cfg
        .snr_points_db
        .iter()
        .enumerate()
        .map(|(p, &snr)| {
            let chunk = &outcomes[p * cfg.num_slots..(p + 1) * cfg.num_slots];
            aggregate(snr, chunk, max_rank, &per_rank_bits, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepResult {
        mode: cfg.mode,
        per_rank_bits,
        points,
    })
}

/// Generates the channel from `cfg.seed` and runs the sweep. Every SNR point
/// sees the same channel realization.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let channel = generate_channel(&cfg.channel_config(), cfg.num_slots + cfg.feedback_delay_slots)?;
    run_sweep_on(cfg, &channel)
}

/// One SNR row of a mode comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub snr_db: f64,
    /// Mean throughput per mode, in the order of [`Comparison::modes`].
    pub throughput: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Index of the best mode, `None` on an exact tie.
    pub winner: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub modes: Vec<CodebookMode>,
    pub rows: Vec<ComparisonRow>,
    pub results: Vec<SweepResult>,
}

impl Comparison {
    /// Throughput difference `mode b - mode a` per SNR point.
    pub fn difference(&self, a: usize, b: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.throughput[b] - r.throughput[a]).collect()
    }

    pub fn winner_label(&self, row: &ComparisonRow) -> String {
        match row.winner {
            Some(i) => self.modes[i].name().to_string(),
            None => "tie".to_string(),
        }
    }
}

fn check_paired(a: &SweepConfig, b: &SweepConfig) -> Result<()> {
    if a.seed != b.seed {
        return Err(Error::config("seed", "compared sweeps must share the channel seed"));
    }
    if a.snr_points_db != b.snr_points_db {
        return Err(Error::config("snr", "compared sweeps must share SNR points"));
    }
    if a.num_slots != b.num_slots || a.feedback_delay_slots != b.feedback_delay_slots {
        return Err(Error::config("slots", "compared sweeps must share slot counts"));
    }
    if a.antenna != b.antenna || a.channel_config() != b.channel_config() {
        return Err(Error::config("scenario", "compared sweeps must share antenna and channel"));
    }
    Ok(())
}

/// Runs several sweeps on one shared channel realization and tabulates the
/// winner per SNR point.
pub fn compare_modes(cfgs: &[SweepConfig]) -> Result<Comparison> {
    let first = cfgs
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to compare".into()))?;
    for c in cfgs {
        c.validate()?;
        check_paired(first, c)?;
    }
    let channel = generate_channel(
        &first.channel_config(),
        first.num_slots + first.feedback_delay_slots,
    )?;
    let results = cfgs
        .iter()
        .map(|c| run_sweep_on(c, &channel))
        .collect::<Result<Vec<_>>>()?;

    let rows = first
        .snr_points_db
        .iter()
        .enumerate()
        .map(|(p, &snr_db)| {
            let throughput: Vec<f64> = results.iter().map(|r| r.points[p].mean_throughput).collect();
            let std_error = results.iter().map(|r| r.points[p].std_error).collect();
            let best = throughput.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let winners: Vec<usize> = (0..throughput.len()).filter(|&i| throughput[i] == best).collect();
            ComparisonRow {
                snr_db,
                throughput,
                std_error,
                winner: (winners.len() == 1).then(|| winners[0]),
            }
        })
        .collect();

    Ok(Comparison {
        modes: cfgs.iter().map(|c| c.mode).collect(),
        rows,
        results,
    })
}
