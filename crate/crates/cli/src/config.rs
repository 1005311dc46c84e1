//! TOML run configuration: file schema, flag overrides, and the resolved
//! snapshot stored in the run manifest.
//!
//! Every section and key is optional; missing keys take the library defaults.
//! A manifest's `[run]` table is ignored when it is loaded back as a config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nrsim_core::channel::{load_pdp, ChannelConfig, Tap};
use nrsim_core::codebook::{AntennaConfig, Type2Config};
use nrsim_core::csi::{CqiRow, CqiTable, SelectionConfig};
use nrsim_core::sim::{CodebookMode, CsiEstimation, SweepConfig};
use nrsim_core::{Error, Result};

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<toml::Table>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub antenna: AntennaSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub type2: Type2Section,
    #[serde(default)]
    pub cqi: CqiSection,
    #[serde(default)]
    pub estimation: EstimationSection,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `min:step:max` in dB.
    pub snr: Option<String>,
    /// Explicit SNR points in dB; exclusive with `snr`.
    pub snr_db: Option<Vec<f64>>,
    pub slots: Option<usize>,
    pub feedback_delay: Option<usize>,
    pub codebooks: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub bandwidth_hz: Option<f64>,
    pub target_bler: Option<f64>,
    pub subband_overhead: Option<bool>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaSection {
    pub n1: Option<usize>,
    pub n2: Option<usize>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub rx: Option<usize>,
    pub doppler_hz: Option<f64>,
    pub delay_spread_ns: Option<f64>,
    pub num_subbands: Option<usize>,
    pub subband_spacing_hz: Option<f64>,
    pub slot_duration_s: Option<f64>,
    /// Two-column `delay_ns power_db` profile file.
    pub pdp_file: Option<PathBuf>,
    /// `[normalized_delay, linear_power]` pairs; exclusive with `pdp_file`.
    pub pdp: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Type2Section {
    pub num_beams: Option<usize>,
    pub n_psk: Option<usize>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqiSection {
    pub gap_db: Option<f64>,
    /// CSV with `cqi_index,efficiency,threshold_db`.
    pub table_file: Option<PathBuf>,
    /// `[cqi_index, efficiency, threshold_db]` rows; exclusive with the other keys.
    pub rows: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    /// `perfect` or `pilot`.
    pub kind: Option<String>,
    pub gain_db: Option<f64>,
}

/// Command-line values that override the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub snr: Option<String>,
    pub slots: Option<usize>,
    pub codebooks: Option<Vec<String>>,
    pub rx: Option<usize>,
    pub seed: Option<u64>,
}

/// A fully resolved sweep request.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub base: SweepConfig,
    pub modes: Vec<CodebookMode>,
}

impl Resolved {
    pub fn sweep_configs(&self) -> Vec<SweepConfig> {
        self.modes
            .iter()
            .map(|&mode| SweepConfig {
                mode,
                ..self.base.clone()
            })
            .collect()
    }
}

pub fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
    parse_file(&text)
}

pub fn parse_file(text: &str) -> Result<FileConfig> {
    toml::from_str(text).map_err(|e| {
        let reason = e.message().to_string();
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
            .unwrap_or(0);
        Error::config("config", format!("line {line}: {reason}"))
    })
}

/// Parses `min:step:max` into an inclusive ascending list of points.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let bad = |reason: &str| Error::config("snr", format!("`{s}`: {reason}"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("expected min:step:max"))?;
    let [lo, step, hi] = parts[..] else {
        return Err(bad("expected min:step:max"));
    };
    if !(lo.is_finite() && step.is_finite() && hi.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if hi < lo {
        return Err(bad("max is below min"));
    }
    if step <= 0.0 {
        return Err(bad("step must be positive"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(bad("too many points"));
    }
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

pub fn parse_modes(names: &[String]) -> Result<Vec<CodebookMode>> {
    if names.is_empty() {
        return Err(Error::config("codebook", "at least one codebook is required"));
    }
    let mut modes = Vec::with_capacity(names.len());
    for n in names {
        let m = CodebookMode::parse(n.trim())
            .ok_or_else(|| Error::config("codebook", format!("unknown codebook `{n}`, expected type1, type2 or svd")))?;
        if modes.contains(&m) {
            return Err(Error::config("codebook", format!("`{n}` listed twice")));
        }
        modes.push(m);
    }
    Ok(modes)
}

fn resolve_pdp(ch: &ChannelSection, delay_spread_ns: f64, base_dir: &Path) -> Result<Option<Vec<Tap>>> {
    match (&ch.pdp_file, &ch.pdp) {
        (Some(_), Some(_)) => Err(Error::config("channel.pdp", "give either pdp or pdp_file, not both")),
        (Some(f), None) => Ok(Some(load_pdp(&base_dir.join(f), delay_spread_ns)?)),
        (None, Some(rows)) => Ok(Some(
            rows.iter()
                .map(|&[delay, power]| Tap { delay, power })
                .collect(),
        )),
        (None, None) => Ok(None),
    }
}

fn resolve_cqi(c: &CqiSection, base_dir: &Path) -> Result<CqiTable> {
    let given = [c.gap_db.is_some(), c.table_file.is_some(), c.rows.is_some()];
    if given.iter().filter(|&&g| g).count() > 1 {
        return Err(Error::config("cqi", "give only one of gap_db, table_file, rows"));
    }
    if let Some(g) = c.gap_db {
        if !g.is_finite() {
            return Err(Error::config("cqi.gap_db", "must be finite"));
        }
        return Ok(CqiTable::with_gap_db(g));
    }
    if let Some(f) = &c.table_file {
        let path = base_dir.join(f);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::config("cqi.table_file", format!("cannot read {}: {e}", path.display())))?;
        return CqiTable::from_csv(&text);
    }
    if let Some(rows) = &c.rows {
        let rows = rows
            .iter()
            .map(|&[i, eff, thr]| {
                if i.fract() != 0.0 || !(1.0..=15.0).contains(&i) {
                    return Err(Error::config("cqi.rows", format!("bad CQI index {i}")));
                }
                Ok(CqiRow {
                    index: i as u8,
                    efficiency: eff,
                    threshold_db: thr,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return CqiTable::new(rows);
    }
    Ok(CqiTable::default())
}

fn resolve_estimation(e: &EstimationSection) -> Result<CsiEstimation> {
    match e.kind.as_deref().unwrap_or("perfect") {
        "perfect" => {
            if e.gain_db.is_some() {
                return Err(Error::config("estimation.gain_db", "only used with kind = \"pilot\""));
            }
            Ok(CsiEstimation::Perfect)
        }
        "pilot" => Ok(CsiEstimation::Pilot {
            gain_db: e.gain_db.unwrap_or(0.0),
        }),
        other => Err(Error::config("estimation.kind", format!("unknown kind `{other}`, expected perfect or pilot"))),
    }
}

/// Merges defaults, the file, and flag overrides (flags win), then validates.
/// Relative paths in the file resolve against `base_dir`.
pub fn resolve(file: &FileConfig, over: &Overrides, base_dir: &Path) -> Result<Resolved> {
    let d = SweepConfig::default();
    let s = &file.sweep;

    let snr_points_db = match (&over.snr, &s.snr, &s.snr_db) {
        (Some(flag), _, _) => parse_snr_range(flag)?,
        (None, Some(_), Some(_)) => return Err(Error::config("snr", "give either snr or snr_db, not both")),
        (None, Some(r), None) => parse_snr_range(r)?,
        (None, None, Some(v)) => v.clone(),
        (None, None, None) => d.snr_points_db.clone(),
    };

    let default_modes = vec!["type1".to_string(), "type2".to_string()];
    let modes = parse_modes(over.codebooks.as_ref().or(s.codebooks.as_ref()).unwrap_or(&default_modes))?;

    let antenna = AntennaConfig::new(
        file.antenna.n1.unwrap_or(d.antenna.n1),
        file.antenna.n2.unwrap_or(d.antenna.n2),
    );
    antenna.validate()?;

    let ch = &file.channel;
    let dc = &d.channel;
    let delay_spread_ns = ch.delay_spread_ns.unwrap_or(dc.delay_spread_ns);
    let channel = ChannelConfig {
        num_tx_ports: antenna.num_ports(),
        num_rx_ports: over.rx.or(ch.rx).unwrap_or(dc.num_rx_ports),
        doppler_hz: ch.doppler_hz.unwrap_or(dc.doppler_hz),
        delay_spread_ns,
        num_subbands: ch.num_subbands.unwrap_or(dc.num_subbands),
        subband_spacing_hz: ch.subband_spacing_hz.unwrap_or(dc.subband_spacing_hz),
        slot_duration_s: ch.slot_duration_s.unwrap_or(dc.slot_duration_s),
        pdp: resolve_pdp(ch, delay_spread_ns, base_dir)?.unwrap_or_else(|| dc.pdp.clone()),
        seed: 0,
    };

    let type2 = Type2Config {
        num_beams: file.type2.num_beams.unwrap_or(d.type2.num_beams),
        n_psk: file.type2.n_psk.unwrap_or(d.type2.n_psk),
    };

    let base = SweepConfig {
        snr_points_db,
        num_slots: over.slots.or(s.slots).unwrap_or(d.num_slots),
        feedback_delay_slots: s.feedback_delay.unwrap_or(d.feedback_delay_slots),
        mode: modes[0],
        antenna,
        channel,
        type2,
        cqi_table: resolve_cqi(&file.cqi, base_dir)?,
        selection: SelectionConfig {
            target_bler: s.target_bler.unwrap_or(d.selection.target_bler),
            subband_overhead: s.subband_overhead.unwrap_or(d.selection.subband_overhead),
        },
        bandwidth_hz: s.bandwidth_hz.unwrap_or(d.bandwidth_hz),
        estimation: resolve_estimation(&file.estimation)?,
        seed: over.seed.or(s.seed).unwrap_or(d.seed),
        execution: d.execution,
    };
    for m in &modes {
        SweepConfig {
            mode: *m,
            ..base.clone()
        }
        .validate()?;
    }
    Ok(Resolved { base, modes })
}

/// The resolved configuration written back in file form. Loading it
/// reproduces `r` exactly: file paths are replaced by their contents.
pub fn snapshot(r: &Resolved) -> FileConfig {
    let b = &r.base;
    let (kind, gain_db) = match b.estimation {
        CsiEstimation::Perfect => ("perfect", None),
        CsiEstimation::Pilot { gain_db } => ("pilot", Some(gain_db)),
    };
    FileConfig {
        run: None,
        sweep: SweepSection {
            snr: None,
            snr_db: Some(b.snr_points_db.clone()),
            slots: Some(b.num_slots),
            feedback_delay: Some(b.feedback_delay_slots),
            codebooks: Some(r.modes.iter().map(|m| m.name().to_string()).collect()),
            seed: Some(b.seed),
            bandwidth_hz: Some(b.bandwidth_hz),
            target_bler: Some(b.selection.target_bler),
            subband_overhead: Some(b.selection.subband_overhead),
        },
        antenna: AntennaSection {
            n1: Some(b.antenna.n1),
            n2: Some(b.antenna.n2),
        },
        channel: ChannelSection {
            rx: Some(b.channel.num_rx_ports),
            doppler_hz: Some(b.channel.doppler_hz),
            delay_spread_ns: Some(b.channel.delay_spread_ns),
            num_subbands: Some(b.channel.num_subbands),
            subband_spacing_hz: Some(b.channel.subband_spacing_hz),
            slot_duration_s: Some(b.channel.slot_duration_s),
            pdp_file: None,
            pdp: Some(b.channel.pdp.iter().map(|t| [t.delay, t.power]).collect()),
        },
        type2: Type2Section {
            num_beams: Some(b.type2.num_beams),
            n_psk: Some(b.type2.n_psk),
        },
        cqi: CqiSection {
            gap_db: None,
            table_file: None,
            rows: Some(
                b.cqi_table
                    .rows()
                    .iter()
                    .map(|row| [f64::from(row.index), row.efficiency, row.threshold_db])
                    .collect(),
            ),
        },
        estimation: EstimationSection {
            kind: Some(kind.to_string()),
            gain_db,
        },
    }
}
