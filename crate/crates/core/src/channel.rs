//! Tapped-delay-line MIMO fading channel.
//!
//! Each tap carries an i.i.d. complex Gaussian `num_rx x num_tx` matrix whose
//! per-entry variance is the tap power. Taps evolve slot to slot as a
//! first-order autoregressive process with Clarke correlation
//! `rho = J0(2 pi f_d T_slot)`, and the subband frequency response is the
//! delay-phased sum of the taps.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{bessel_j0, ej, CMat, C64};

/// One tap of a power-delay profile. Delay is normalized to the delay spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub num_tx_ports: usize,
    pub num_rx_ports: usize,
    pub doppler_hz: f64,
    pub delay_spread_ns: f64,
    pub num_subbands: usize,
    pub subband_spacing_hz: f64,
    pub slot_duration_s: f64,
    pub pdp: Vec<Tap>,
    pub seed: u64,
}

/// 15 kHz subcarriers, 52 PRBs in 10 MHz grouped as 13 subbands of 4 PRBs.
pub const DEFAULT_NUM_SUBBANDS: usize = 13;
pub const DEFAULT_SUBBAND_SPACING_HZ: f64 = 4.0 * 12.0 * 15e3;
pub const DEFAULT_SLOT_DURATION_S: f64 = 1e-3;

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            num_tx_ports: 8,
            num_rx_ports: 4,
            doppler_hz: 5.0,
            delay_spread_ns: 100.0,
            num_subbands: DEFAULT_NUM_SUBBANDS,
            subband_spacing_hz: DEFAULT_SUBBAND_SPACING_HZ,
            slot_duration_s: DEFAULT_SLOT_DURATION_S,
            pdp: cdl_a_pdp(),
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_tx_ports == 0 {
            return Err(Error::config("num_tx_ports", "must be positive"));
        }
        if self.num_rx_ports == 0 {
            return Err(Error::config("num_rx_ports", "must be positive"));
        }
        if !(self.doppler_hz >= 0.0 && self.doppler_hz.is_finite()) {
            return Err(Error::config("doppler_hz", "must be finite and non-negative"));
        }
        if !(self.delay_spread_ns > 0.0 && self.delay_spread_ns.is_finite()) {
            return Err(Error::config("delay_spread_ns", "must be positive"));
        }
        if self.num_subbands == 0 {
            return Err(Error::config("num_subbands", "must be at least 1"));
        }
        if !(self.subband_spacing_hz > 0.0 && self.subband_spacing_hz.is_finite()) {
            return Err(Error::config("subband_spacing_hz", "must be positive"));
        }
        if !(self.slot_duration_s > 0.0 && self.slot_duration_s.is_finite()) {
            return Err(Error::config("slot_duration_s", "must be positive"));
        }
        if self.pdp.is_empty() {
            return Err(Error::config("pdp", "power-delay profile is empty"));
        }
        for tap in &self.pdp {
            if !(tap.delay >= 0.0 && tap.delay.is_finite()) {
                return Err(Error::config("pdp", "tap delays must be finite and >= 0"));
            }
            if !(tap.power >= 0.0 && tap.power.is_finite()) {
                return Err(Error::config("pdp", "tap powers must be finite and >= 0"));
            }
        }
        if self.pdp.iter().map(|t| t.power).sum::<f64>() <= 0.0 {
            return Err(Error::config("pdp", "total power must be positive"));
        }
        Ok(())
    }

    /// Tap powers rescaled to sum to one.
    pub fn normalized_pdp(&self) -> Vec<Tap> {
        normalize_powers(&self.pdp)
    }

    /// Center frequency offset of subband `k`, symmetric around the carrier.
    pub fn subband_offset_hz(&self, k: usize) -> f64 {
        (k as f64 - (self.num_subbands as f64 - 1.0) / 2.0) * self.subband_spacing_hz
    }

    /// Lag-one correlation of the tap process.
    pub fn slot_correlation(&self) -> f64 {
        bessel_j0(2.0 * PI * self.doppler_hz * self.slot_duration_s)
    }
}

/// Frequency-domain channel per slot and subband.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `h[slot][subband]` is a `num_rx x num_tx` matrix.
    pub h: Vec<Vec<CMat>>,
    pub noise_var: f64,
}

impl ChannelRealization {
    pub fn num_slots(&self) -> usize {
        self.h.len()
    }

    pub fn num_subbands(&self) -> usize {
        self.h.first().map_or(0, Vec::len)
    }

    pub fn slot(&self, s: usize) -> &[CMat] {
        &self.h[s]
    }

    pub fn with_noise_var(mut self, noise_var: f64) -> Self {
        self.noise_var = noise_var;
        self
    }
}

fn normalize_powers(pdp: &[Tap]) -> Vec<Tap> {
    let total: f64 = pdp.iter().map(|t| t.power).sum();
    pdp.iter()
        .map(|t| Tap {
            delay: t.delay,
            power: t.power / total,
        })
        .collect()
}

fn complex_gaussian(rng: &mut ChaCha8Rng, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Per-tap fading state evolving slot by slot.
///
/// `taps()[t]` is the `num_rx x num_tx` gain matrix of tap `t` in the current
/// slot. [`TapProcess::advance`] applies one AR(1) step.
#[derive(Debug, Clone)]
pub struct TapProcess {
    pdp: Vec<Tap>,
    taps: Vec<CMat>,
    rho: f64,
    innovation: f64,
    rng: ChaCha8Rng,
}

impl TapProcess {
    pub fn new(cfg: &ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        let pdp = cfg.normalized_pdp();
        let (nr, nt) = (cfg.num_rx_ports, cfg.num_tx_ports);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let taps = pdp
            .iter()
            .map(|t| CMat::from_fn(nr, nt, |_, _| complex_gaussian(&mut rng, t.power)))
            .collect();
        let rho = cfg.slot_correlation();
        Ok(TapProcess {
            pdp,
            taps,
            rho,
            innovation: (1.0 - rho * rho).max(0.0).sqrt(),
            rng,
        })
    }

    pub fn taps(&self) -> &[CMat] {
        &self.taps
    }

    pub fn advance(&mut self) {
        if self.innovation == 0.0 {
            return;
        }
        for (a, t) in self.taps.iter_mut().zip(&self.pdp) {
            for z in a.iter_mut() {
                *z = *z * self.rho + complex_gaussian(&mut self.rng, t.power) * self.innovation;
            }
        }
    }
}

/// Synthesizes `num_slots` slots of a frequency-selective fading channel.
///
/// The returned realization has unit noise variance; callers set the operating
/// point with [`ChannelRealization::with_noise_var`].
pub fn generate_channel(cfg: &ChannelConfig, num_slots: usize) -> Result<ChannelRealization> {
    if num_slots == 0 {
        return Err(Error::config("num_slots", "must be positive"));
    }
    let mut process = TapProcess::new(cfg)?;
    let (nr, nt) = (cfg.num_rx_ports, cfg.num_tx_ports);

    // phase[k][t] = exp(-j 2 pi f_k tau_t)
    let tau_s: Vec<f64> = process.pdp.iter().map(|t| t.delay * cfg.delay_spread_ns * 1e-9).collect();
    let phase: Vec<Vec<C64>> = (0..cfg.num_subbands)
        .map(|k| {
            let f = cfg.subband_offset_hz(k);
            tau_s.iter().map(|tau| ej(-2.0 * PI * f * tau)).collect()
        })
        .collect();

    let mut h = Vec::with_capacity(num_slots);
    for s in 0..num_slots {
        if s > 0 {
            process.advance();
        }
        let slot: Vec<CMat> = phase
            .iter()
            .map(|ph| {
                let mut hk = CMat::zeros(nr, nt);
                for (a, p) in process.taps().iter().zip(ph) {
                    hk.zip_apply(a, |acc, x| *acc += x * p);
                }
                hk
            })
            .collect();
        h.push(slot);
    }

    Ok(ChannelRealization { h, noise_var: 1.0 })
}

/// CDL-A clusters as (normalized delay, power in dB) from TR 38.901.
const CDL_A: [(f64, f64); 23] = [
    (0.0000, -13.4),
    (0.3819, 0.0),
    (0.4025, -2.2),
    (0.5868, -4.0),
    (0.4610, -6.0),
    (0.5375, -8.2),
    (0.6708, -9.9),
    (0.5750, -10.5),
    (0.7618, -7.5),
    (1.5375, -15.9),
    (1.8978, -6.6),
    (2.2242, -16.7),
    (2.1718, -12.4),
    (2.4942, -15.2),
    (2.5119, -10.8),
    (3.0582, -11.3),
    (4.0810, -12.7),
    (4.4579, -16.2),
    (4.5695, -18.3),
    (4.7966, -18.9),
    (5.0066, -16.6),
    (5.3043, -19.9),
    (9.6586, -29.7),
];

/// CDL-A power-delay profile with linear powers summing to one.
pub fn cdl_a_pdp() -> Vec<Tap> {
    let taps: Vec<Tap> = CDL_A
        .iter()
        .map(|&(delay, db)| Tap {
            delay,
            power: 10f64.powf(db / 10.0),
        })
        .collect();
    normalize_powers(&taps)
}

/// Parses a two-column text profile (`delay_ns power_db`, whitespace or comma
/// separated, `#` comments) into normalized taps for the given delay spread.
pub fn parse_pdp(text: &str, delay_spread_ns: f64) -> Result<Vec<Tap>> {
    if !(delay_spread_ns > 0.0) {
        return Err(Error::config("delay_spread_ns", "must be positive"));
    }
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                reason: format!("`{s}`: {e}"),
            })
        };
        raw.push((parse(cols[0])?, parse(cols[1])?));
    }
    if raw.is_empty() {
        return Err(Error::config("pdp", "profile file has no taps"));
    }
    let min_delay = raw.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let taps: Vec<Tap> = raw
        .into_iter()
        .map(|(d, db)| Tap {
            delay: (d - min_delay) / delay_spread_ns,
            power: 10f64.powf(db / 10.0),
        })
        .collect();
    Ok(normalize_powers(&taps))
}

pub fn load_pdp(path: &Path, delay_spread_ns: f64) -> Result<Vec<Tap>> {
    let text = std::fs::read_to_string(path)?;
    parse_pdp(&text, delay_spread_ns)
}
