//! PMI feedback overhead: per-index bit widths of Type I and Type II reports
//! and the expectation over an empirical rank distribution.
//!
//! Every logarithm is rounded up to whole bits. Subband indices are counted
//! once per reported subband; pass `num_subbands = 1` for a wideband-only count.

use serde::Serialize;

use crate::codebook::{AntennaConfig, Oversampling, Type2Config, MAX_TYPE1_RANK, MAX_TYPE2_RANK};
use crate::error::{Error, Result};
use crate::linalg::{binomial, ceil_log2};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverheadBreakdown {
    /// `(index name, bits)` in report order. Subband indices already include
    /// the subband multiplier.
    pub per_index_bits: Vec<(String, u32)>,
    pub total_bits: u32,
}

impl OverheadBreakdown {
    fn from_parts(parts: Vec<(String, u32)>) -> Self {
        let total_bits = parts.iter().map(|(_, b)| b).sum();
        OverheadBreakdown {
            per_index_bits: parts,
            total_bits,
        }
    }

    pub fn bits(&self, name: &str) -> Option<u32> {
        self.per_index_bits
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, b)| b)
    }
}

fn check_subbands(num_subbands: usize) -> Result<u32> {
    if num_subbands == 0 {
        return Err(Error::config("num_subbands", "must be at least 1"));
    }
    Ok(num_subbands as u32)
}

pub fn type1_overhead_bits(
    cfg: &AntennaConfig,
    ov: &Oversampling,
    rank: usize,
    num_subbands: usize,
) -> Result<OverheadBreakdown> {
    if !(1..=MAX_TYPE1_RANK).contains(&rank) {
        return Err(Error::config("rank", format!("Type I rank must be 1..=4, got {rank}")));
    }
    let nsb = check_subbands(num_subbands)?;
    let i11 = ceil_log2((cfg.n1 * ov.o1) as u64);
    let i12 = ceil_log2((cfg.n2 * ov.o2) as u64);
    let i13 = if rank == 1 { 0 } else { ceil_log2(4) };
    let i2 = if rank == 1 { ceil_log2(4) } else { ceil_log2(2) };
    Ok(OverheadBreakdown::from_parts(vec![
        ("i11".into(), i11),
        ("i12".into(), i12),
        ("i13".into(), i13),
        ("i2".into(), i2 * nsb),
    ]))
}

pub fn type2_overhead_bits(
    cfg: &AntennaConfig,
    ov: &Oversampling,
    t2: &Type2Config,
    layers: usize,
    num_subbands: usize,
) -> Result<OverheadBreakdown> {
    if !(1..=MAX_TYPE2_RANK).contains(&layers) {
        return Err(Error::config(
            "rank",
            format!("Type II supports at most two layers, got {layers}"),
        ));
    }
    t2.validate(cfg)?;
    let nsb = check_subbands(num_subbands)?;
    let b = t2.num_beams as u32;
    let mut parts = vec![
        ("i11".to_string(), ceil_log2(ov.o1 as u64) + ceil_log2(ov.o2 as u64)),
        (
            "i12".to_string(),
            ceil_log2(binomial(cfg.n1 * cfg.n2, t2.num_beams)),
        ),
    ];
    for l in 1..=layers {
        parts.push((format!("i13{l}"), ceil_log2(b as u64)));
        parts.push((format!("i14{l}"), 2 * b * ceil_log2(8)));
        parts.push((format!("i21{l}"), 2 * b * ceil_log2(t2.n_psk as u64) * nsb));
        parts.push((format!("i22{l}"), 2 * b * ceil_log2(2) * nsb));
    }
    Ok(OverheadBreakdown::from_parts(parts))
}

/// Worst-case report size per rank, ranks `1..=4` for Type I.
pub fn type1_rank_bits(cfg: &AntennaConfig, ov: &Oversampling, num_subbands: usize) -> Result<Vec<u32>> {
    (1..=MAX_TYPE1_RANK)
        .map(|r| type1_overhead_bits(cfg, ov, r, num_subbands).map(|b| b.total_bits))
        .collect()
}

/// Worst-case report size per rank, ranks `1..=2` for Type II.
pub fn type2_rank_bits(
    cfg: &AntennaConfig,
    ov: &Oversampling,
    t2: &Type2Config,
    num_subbands: usize,
) -> Result<Vec<u32>> {
    (1..=MAX_TYPE2_RANK)
        .map(|l| type2_overhead_bits(cfg, ov, t2, l, num_subbands).map(|b| b.total_bits))
        .collect()
}

/// Mean report size `sum_i p_i * Q_i` over a rank distribution.
pub fn expected_overhead(rank_probs: &[f64], per_rank_bits: &[u32]) -> Result<f64> {
    if rank_probs.len() != per_rank_bits.len() {
        return Err(Error::Dimension(format!(
            "{} probabilities for {} ranks",
            rank_probs.len(),
            per_rank_bits.len()
        )));
    }
    if rank_probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidArgument("rank probabilities must be >= 0".into()));
    }
    let total: f64 = rank_probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "rank probabilities sum to {total}, expected 1"
        )));
    }
    Ok(rank_probs
        .iter()
        .zip(per_rank_bits)
        .map(|(p, &q)| p * q as f64)
        .sum())
}
