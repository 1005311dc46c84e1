//! RI/PMI/CQI report selection.
//!
//! Type I is an exact search: every rank and wideband beam selection is
//! scored, with the per-subband co-phasing chosen to maximize the subband's
//! layer capacity. Type II is two-stage: pick the beam group capturing the
//! most channel energy, then quantize the dominant right singular vectors of
//! every subband onto it.
//!
//! Candidates are ranked by predicted throughput, then effective SINR; exact
//! ties keep the lower rank and the lexicographically lower PMI.

use nalgebra::DVector;

use super::cqi::{map_cqi, CqiTable};
use super::sinr::{effective_from_capacity, mmse_sinr};
use super::svd::svd_precode;
use crate::codebook::{
    optimal_phase_indices, AntennaConfig, Oversampling, PmiIndex, PrecoderEntry, Type1Codebook,
    Type2CodebookSpace, Type2Config, MAX_TYPE1_RANK, MAX_TYPE2_RANK, SUBBAND_AMPLITUDES,
    WIDEBAND_AMPLITUDES,
};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::overhead::{type1_rank_bits, type2_rank_bits};

/// The codebooks a UE searches.
#[derive(Debug, Clone)]
pub enum CodebookSet {
    /// One Type I codebook per rank, ascending from rank 1.
    TypeI(Vec<Type1Codebook>),
    TypeII(Type2CodebookSpace),
}

impl CodebookSet {
    /// Type I codebooks for every supported rank up to four.
    pub fn type1(antenna: &AntennaConfig, ov: &Oversampling) -> Result<Self> {
        let max = MAX_TYPE1_RANK.min(antenna.num_ports());
        let books = (1..=max)
            .map(|r| Type1Codebook::build(antenna, r, ov))
            .collect::<Result<Vec<_>>>()?;
        Ok(CodebookSet::TypeI(books))
    }

    pub fn type2(antenna: &AntennaConfig, t2: &Type2Config, ov: &Oversampling) -> Result<Self> {
        Ok(CodebookSet::TypeII(Type2CodebookSpace::build(antenna, t2, ov)?))
    }

    pub fn max_rank(&self) -> usize {
        match self {
            CodebookSet::TypeI(books) => books.last().map_or(0, Type1Codebook::rank),
            CodebookSet::TypeII(_) => MAX_TYPE2_RANK,
        }
    }

    pub fn num_ports(&self) -> usize {
        match self {
            CodebookSet::TypeI(books) => books.first().map_or(0, |b| b.antenna().num_ports()),
            CodebookSet::TypeII(s) => s.antenna().num_ports(),
        }
    }

    /// Report size of each rank `1..=max_rank`.
    pub fn per_rank_bits(&self, num_subbands: usize) -> Result<Vec<u32>> {
        match self {
            CodebookSet::TypeI(books) => {
                let first = books.first().ok_or(Error::EmptyCodebook)?;
                let mut q = type1_rank_bits(first.antenna(), first.oversampling(), num_subbands)?;
                q.truncate(books.len());
                Ok(q)
            }
            CodebookSet::TypeII(s) => type2_rank_bits(s.antenna(), s.oversampling(), s.config(), num_subbands),
        }
    }

    /// Realizes a reported `(ri, pmi)` pair. Type I indices do not encode the
    /// rank, so it is passed alongside.
    pub fn realize(&self, ri: usize, pmi: &PmiIndex) -> Result<PrecoderEntry> {
        let entry = match self {
            CodebookSet::TypeI(books) => books
                .iter()
                .find(|b| b.rank() == ri)
                .ok_or_else(|| Error::IndexOutOfRange(format!("no Type I codebook of rank {ri}")))?
                .realize(pmi)?,
            CodebookSet::TypeII(s) => s.realize_entry(pmi)?,
        };
        if entry.rank() != ri {
            return Err(Error::InvalidArgument(format!(
                "PMI has rank {}, report says {ri}",
                entry.rank()
            )));
        }
        Ok(entry)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub target_bler: f64,
    /// Count subband indices once per subband (true) or once per report.
    pub subband_overhead: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            target_bler: super::cqi::DEFAULT_TARGET_BLER,
            subband_overhead: true,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_bler > 0.0 && self.target_bler < 1.0) {
            return Err(Error::config("target_bler", "must be in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiReport {
    pub ri: usize,
    pub pmi: PmiIndex,
    pub cqi: u8,
    /// Rank times the spectral efficiency of the reported CQI, bits/s/Hz.
    pub predicted_throughput: f64,
    /// Effective SINR (linear) of the reported precoder on the measured channel.
    pub effective_sinr: f64,
    pub overhead_bits: u32,
    /// Realized precoder per subband, `num_ports x ri`.
    pub precoder: Vec<CMat>,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Score {
    throughput: f64,
    eff_sinr: f64,
}

fn score(sum_log: f64, count: usize, rank: usize, table: &CqiTable, target_bler: f64) -> (Score, u8) {
    let eff = effective_from_capacity(sum_log, count);
    let cqi = map_cqi(eff, table, target_bler);
    (
        Score {
            throughput: rank as f64 * table.efficiency(cqi),
            eff_sinr: eff,
        },
        cqi,
    )
}

fn layer_capacity(h: &CMat, w: &CMat, noise_var: f64) -> f64 {
    mmse_sinr(&(h * w), noise_var).iter().map(|s| (1.0 + s).log2()).sum()
}

fn check_slot(slot: &[CMat], ports: usize, noise_var: f64) -> Result<()> {
    let first = slot
        .first()
        .ok_or_else(|| Error::InvalidArgument("channel slot has no subbands".into()))?;
    if first.ncols() != ports {
        return Err(Error::Dimension(format!(
            "channel has {} tx ports, codebook has {ports}",
            first.ncols()
        )));
    }
    if slot.iter().any(|h| h.shape() != first.shape()) {
        return Err(Error::Dimension("subband matrices differ in shape".into()));
    }
    if !(noise_var > 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance {noise_var} must be > 0")));
    }
    Ok(())
}

/// Picks the report maximizing predicted throughput for one slot.
///
/// `slot` holds one `num_rx x num_tx` matrix per subband. Ranks above
/// `min(num_rx, num_tx)` are skipped.
pub fn select_csi(
    slot: &[CMat],
    noise_var: f64,
    codebooks: &CodebookSet,
    table: &CqiTable,
    cfg: &SelectionConfig,
) -> Result<CsiReport> {
    check_slot(slot, codebooks.num_ports(), noise_var)?;
    let nsb = slot.len();
    let q = codebooks.per_rank_bits(if cfg.subband_overhead { nsb } else { 1 })?;
    let mut report = match codebooks {
        CodebookSet::TypeI(books) => select_type1(slot, noise_var, books, table, cfg.target_bler)?,
        CodebookSet::TypeII(space) => select_type2(slot, noise_var, space, table, cfg.target_bler)?,
    };
    report.overhead_bits = q[report.ri - 1];
    Ok(report)
}

fn select_type1(
    slot: &[CMat],
    noise_var: f64,
    books: &[Type1Codebook],
    table: &CqiTable,
    target_bler: f64,
) -> Result<CsiReport> {
    let (nr, nt) = slot[0].shape();
    let max_rank = nr.min(nt);
    let nsb = slot.len();
    let mut best: Option<(Score, u8, usize, usize, Vec<usize>)> = None;

    for (bi, cb) in books.iter().enumerate() {
        let rank = cb.rank();
        if rank > max_rank {
            continue;
        }
        if cb.is_empty() {
            return Err(Error::EmptyCodebook);
        }
        let n2 = cb.num_cophase();
        let entries = cb.entries();
        for g in 0..entries.len() / n2 {
            let mut sum_log = 0.0;
            let mut i2 = Vec::with_capacity(nsb);
            for h in slot {
                let mut best_c = 0;
                let mut best_cap = f64::NEG_INFINITY;
                for c in 0..n2 {
                    let cap = layer_capacity(h, &entries[g * n2 + c].w, noise_var);
                    if cap > best_cap {
                        best_cap = cap;
                        best_c = c;
                    }
                }
                sum_log += best_cap;
                i2.push(best_c);
            }
            let (s, cqi) = score(sum_log, nsb * rank, rank, table, target_bler);
            if best.as_ref().is_none_or(|b| s > b.0) {
                best = Some((s, cqi, bi, g * n2, i2));
            }
        }
    }

    let (s, cqi, bi, base, i2) = best.ok_or(Error::EmptyCodebook)?;
    let cb = &books[bi];
    let e = &cb.entries()[base];
    let pmi = PmiIndex::TypeI {
        i11: e.i11,
        i12: e.i12,
        i13: e.i13,
        i2,
    };
    let entry = cb.realize(&pmi)?;
    Ok(CsiReport {
        ri: cb.rank(),
        pmi,
        cqi,
        predicted_throughput: s.throughput,
        effective_sinr: s.eff_sinr,
        overhead_bits: 0,
        precoder: entry.w_per_subband,
    })
}

/// Quantized coefficients of one Type II layer.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLayer {
    pub wideband_amplitude: Vec<u8>,
    /// `[subband][coef]`
    pub subband_amplitude: Vec<Vec<u8>>,
    /// `[subband][coef]`
    pub subband_phase: Vec<Vec<u8>>,
}

/// Nearest wideband level in dB; levels are 3 dB apart, zero below half a step under the lowest.
fn quantize_wideband(ratio: f64) -> u8 {
    if ratio <= 0.0 {
        return 0;
    }
    let db = -20.0 * ratio.log10();
    let step = 10.0 * 2f64.log10();
    let k = (db / step).round();
    if k > 6.0 {
        if db > 6.5 * step {
            0
        } else {
            1
        }
    } else {
        (7.0 - k.max(0.0)) as u8
    }
}

impl Type2CodebookSpace {
    /// Beam-domain coefficients `v_b^H t_pol / sqrt(n1 n2)` of a port-domain vector.
    pub fn beam_coefficients(&self, q1: usize, q2: usize, i12: usize, target: &[C64]) -> Vec<C64> {
        let n = self.num_orthogonal_beams();
        let norm = (n as f64).sqrt();
        let beams: Vec<Vec<C64>> = self
            .beam_combination(i12)
            .expect("valid beam group")
            .iter()
            .map(|&a| self.orthogonal_beam(q1, q2, a))
            .collect();
        (0..2)
            .flat_map(|pol| {
                beams.iter().map(move |v| {
                    v.iter()
                        .zip(&target[pol * n..(pol + 1) * n])
                        .map(|(b, t)| b.conj() * t)
                        .sum::<C64>()
                        / norm
                })
            })
            .collect()
    }

    /// Quantizes per-subband target vectors of one layer onto the beam group
    /// `(q1, q2, i12)`.
    ///
    /// Wideband amplitude is the mean coefficient magnitude across subbands
    /// relative to the strongest coefficient; the subband amplitude bit flags
    /// coefficients at or above their mean; phases maximize the correlation
    /// with each subband's target given those amplitudes.
    pub fn quantize_layer(&self, q1: usize, q2: usize, i12: usize, targets: &[Vec<C64>]) -> QuantizedLayer {
        let coefs: Vec<Vec<C64>> = targets
            .iter()
            .map(|t| self.beam_coefficients(q1, q2, i12, t))
            .collect();
        let nc = self.num_coefficients();
        let nsb = coefs.len().max(1);
        let mean: Vec<f64> = (0..nc)
            .map(|i| coefs.iter().map(|c| c[i].norm()).sum::<f64>() / nsb as f64)
            .collect();
        let strongest = (0..nc)
            .max_by(|&a, &b| mean[a].total_cmp(&mean[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let peak = mean[strongest];
        let mut wb: Vec<u8> = mean
            .iter()
            .map(|&m| if peak > 0.0 { quantize_wideband(m / peak) } else { 0 })
            .collect();
        wb[strongest] = 7;

        let n_psk = self.config().n_psk;
        let mut sb_amp = Vec::with_capacity(coefs.len());
        let mut sb_phase = Vec::with_capacity(coefs.len());
        for c in &coefs {
            let sb: Vec<u8> = (0..nc).map(|i| u8::from(c[i].norm() >= mean[i])).collect();
            let amps: Vec<f64> = (0..nc)
                .map(|i| WIDEBAND_AMPLITUDES[wb[i] as usize] * SUBBAND_AMPLITUDES[sb[i] as usize])
                .collect();
            sb_phase.push(optimal_phase_indices(c, &amps, n_psk));
            sb_amp.push(sb);
        }
        QuantizedLayer {
            wideband_amplitude: wb,
            subband_amplitude: sb_amp,
            subband_phase: sb_phase,
        }
    }

    /// Rotation and beam group capturing the most channel energy over all subbands.
    pub fn select_beam_group(&self, slot: &[CMat]) -> (usize, usize, usize) {
        let n = self.num_orthogonal_beams();
        let ov = *self.oversampling();
        let mut best = (0, 0, 0);
        let mut best_energy = f64::NEG_INFINITY;
        for q1 in 0..ov.o1 {
            for q2 in 0..ov.o2 {
                let energy: Vec<f64> = (0..n)
                    .map(|a| {
                        let v = DVector::from_vec(self.orthogonal_beam(q1, q2, a));
                        slot.iter()
                            .map(|h| {
                                let top = h.columns(0, n) * &v;
                                let bottom = h.columns(n, n) * &v;
                                top.norm_squared() + bottom.norm_squared()
                            })
                            .sum::<f64>()
                            / n as f64
                    })
                    .collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]).then(a.cmp(&b)));
                let mut group: Vec<usize> = order[..self.num_beams()].to_vec();
                group.sort_unstable();
                let total: f64 = group.iter().map(|&a| energy[a]).sum();
                if total > best_energy {
                    best_energy = total;
                    best = (q1, q2, self.combination_index(&group).expect("group enumerated"));
                }
            }
        }
        best
    }
}

fn select_type2(
    slot: &[CMat],
    noise_var: f64,
    space: &Type2CodebookSpace,
    table: &CqiTable,
    target_bler: f64,
) -> Result<CsiReport> {
    let (nr, nt) = slot[0].shape();
    let max_rank = MAX_TYPE2_RANK.min(nr).min(nt);
    let nsb = slot.len();
    let (q1, q2, i12) = space.select_beam_group(slot);

    let svds = slot.iter().map(svd_precode).collect::<Result<Vec<_>>>()?;
    let layers: Vec<QuantizedLayer> = (0..max_rank)
        .map(|l| {
            let targets: Vec<Vec<C64>> = svds.iter().map(|s| s.v.column(l).iter().copied().collect()).collect();
            space.quantize_layer(q1, q2, i12, &targets)
        })
        .collect();

    let mut best: Option<(Score, u8, PmiIndex, Vec<CMat>)> = None;
    for rank in 1..=max_rank {
        let used = &layers[..rank];
        let pmi = PmiIndex::TypeII {
            q1,
            q2,
            i12,
            wideband_amplitude: used.iter().map(|l| l.wideband_amplitude.clone()).collect(),
            subband_phase: used.iter().map(|l| l.subband_phase.clone()).collect(),
            subband_amplitude: used.iter().map(|l| l.subband_amplitude.clone()).collect(),
        };
        let entry = space.realize_entry(&pmi)?;
        let sum_log: f64 = slot
            .iter()
            .zip(&entry.w_per_subband)
            .map(|(h, w)| layer_capacity(h, w, noise_var))
            .sum();
        let (s, cqi) = score(sum_log, nsb * rank, rank, table, target_bler);
        if best.as_ref().is_none_or(|b| s > b.0) {
            best = Some((s, cqi, pmi, entry.w_per_subband));
        }
    }
    let (s, cqi, pmi, precoder) = best.ok_or(Error::EmptyCodebook)?;
    Ok(CsiReport {
        ri: precoder[0].ncols(),
        pmi,
        cqi,
        predicted_throughput: s.throughput,
        effective_sinr: s.eff_sinr,
        overhead_bits: 0,
        precoder,
    })
}
