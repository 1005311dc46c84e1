//! Type II codebook space: linear combination of `B` orthogonal DFT beams.
//!
//! The space is never materialized. A PMI fixes a rotation of the orthogonal
//! beam grid, a `B`-subset of it and, per layer, `2B` coefficients (one per
//! beam and polarization) with an 8-level wideband amplitude, a 1-bit subband
//! amplitude and an `N_PSK` subband phase.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{beam_unchecked, AntennaConfig, Oversampling, PmiIndex, PrecoderEntry};
use crate::error::{Error, Result};
use crate::linalg::{binomial, ej, CMat, C64};

pub const MAX_TYPE2_RANK: usize = 2;

/// Wideband amplitude levels, index 0..7.
pub const WIDEBAND_AMPLITUDES: [f64; 8] = [
    0.0,
    0.125,                          // sqrt(1/64)
    0.176_776_695_296_636_9,        // sqrt(1/32)
    0.25,                           // sqrt(1/16)
    0.353_553_390_593_273_8,        // sqrt(1/8)
    0.5,                            // sqrt(1/4)
    std::f64::consts::FRAC_1_SQRT_2, // sqrt(1/2)
    1.0,
];

/// Subband amplitude levels, index 0..1.
pub const SUBBAND_AMPLITUDES: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Type2Config {
    /// Number of combined beams `B`, 2..=4.
    pub num_beams: usize,
    /// Phase alphabet size, 4 or 8.
    pub n_psk: usize,
}

impl Default for Type2Config {
    fn default() -> Self {
        Type2Config {
            num_beams: 4,
            n_psk: 8,
        }
    }
}

impl Type2Config {
    pub fn validate(&self, antenna: &AntennaConfig) -> Result<()> {
        if !(2..=4).contains(&self.num_beams) {
            return Err(Error::config("num_beams", "must be 2, 3 or 4"));
        }
        if self.n_psk != 4 && self.n_psk != 8 {
            return Err(Error::config("n_psk", "must be 4 or 8"));
        }
        if self.num_beams > antenna.ports_per_pol() {
            return Err(Error::config(
                "num_beams",
                format!(
                    "B = {} exceeds n1*n2 = {}",
                    self.num_beams,
                    antenna.ports_per_pol()
                ),
            ));
        }
        Ok(())
    }
}

/// Enumerable Type II structure for one antenna configuration.
#[derive(Debug, Clone)]
pub struct Type2CodebookSpace {
    antenna: AntennaConfig,
    ov: Oversampling,
    cfg: Type2Config,
    /// Beam groups in lexicographic order; entries index the orthogonal grid as `a1 * n2 + a2`.
    combos: Vec<Vec<usize>>,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] != i + n - k) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

impl Type2CodebookSpace {
    pub fn build(antenna: &AntennaConfig, cfg: &Type2Config, ov: &Oversampling) -> Result<Self> {
        antenna.validate()?;
        cfg.validate(antenna)?;
        let combos = combinations(antenna.ports_per_pol(), cfg.num_beams);
        debug_assert_eq!(combos.len() as u64, binomial(antenna.ports_per_pol(), cfg.num_beams));
        Ok(Type2CodebookSpace {
            antenna: *antenna,
            ov: *ov,
            cfg: *cfg,
            combos,
        })
    }

    pub fn antenna(&self) -> &AntennaConfig {
        &self.antenna
    }

    pub fn oversampling(&self) -> &Oversampling {
        &self.ov
    }

    pub fn config(&self) -> &Type2Config {
        &self.cfg
    }

    pub fn num_beams(&self) -> usize {
        self.cfg.num_beams
    }

    /// Coefficients per layer: `B` beams times two polarizations.
    pub fn num_coefficients(&self) -> usize {
        2 * self.cfg.num_beams
    }

    pub fn num_rotations(&self) -> usize {
        self.ov.o1 * self.ov.o2
    }

    pub fn num_beam_combinations(&self) -> usize {
        self.combos.len()
    }

    pub fn beam_combination(&self, i12: usize) -> Option<&[usize]> {
        self.combos.get(i12).map(Vec::as_slice)
    }

    pub fn combination_index(&self, beams: &[usize]) -> Option<usize> {
        self.combos.iter().position(|c| c == beams)
    }

    /// Number of orthogonal beams in one rotated grid.
    pub fn num_orthogonal_beams(&self) -> usize {
        self.antenna.ports_per_pol()
    }

    /// Orthogonal beam `a` of rotation `(q1, q2)`, unnormalized.
    pub fn orthogonal_beam(&self, q1: usize, q2: usize, a: usize) -> Vec<C64> {
        let (a1, a2) = (a / self.antenna.n2, a % self.antenna.n2);
        beam_unchecked(self.ov.o1 * a1 + q1, self.ov.o2 * a2 + q2, &self.antenna, &self.ov)
    }

    /// PSK alphabet for this configuration.
    pub fn psk_alphabet(&self) -> Vec<C64> {
        psk(self.cfg.n_psk)
    }

    fn check_pmi<'a>(&self, pmi: &'a PmiIndex) -> Result<Type2Fields<'a>> {
        let PmiIndex::TypeII {
            q1,
            q2,
            i12,
            wideband_amplitude,
            subband_phase,
            subband_amplitude,
        } = pmi
        else {
            return Err(Error::InvalidArgument("Type I PMI given to a Type II space".into()));
        };
        let bad = |what: &str| Err(Error::IndexOutOfRange(format!("Type II PMI: {what}")));
        if *q1 >= self.ov.o1 || *q2 >= self.ov.o2 {
            return bad("rotation");
        }
        if *i12 >= self.combos.len() {
            return bad("i12");
        }
        let rank = wideband_amplitude.len();
        if rank == 0 || rank > MAX_TYPE2_RANK {
            return Err(Error::InvalidArgument(format!("Type II rank {rank} not in 1..=2")));
        }
        if subband_phase.len() != rank || subband_amplitude.len() != rank {
            return bad("layer count");
        }
        let nc = self.num_coefficients();
        let nsb = subband_phase[0].len();
        for l in 0..rank {
            if wideband_amplitude[l].len() != nc || wideband_amplitude[l].iter().any(|&a| a > 7) {
                return bad("wideband amplitude");
            }
            if subband_phase[l].len() != nsb || subband_amplitude[l].len() != nsb {
                return bad("subband count");
            }
            for k in 0..nsb {
                let ph = &subband_phase[l][k];
                let am = &subband_amplitude[l][k];
                if ph.len() != nc || ph.iter().any(|&c| c as usize >= self.cfg.n_psk) {
                    return bad("subband phase");
                }
                if am.len() != nc || am.iter().any(|&c| c > 1) {
                    return bad("subband amplitude");
                }
            }
        }
        Ok(Type2Fields {
            q1: *q1,
            q2: *q2,
            i12: *i12,
            wb: wideband_amplitude,
            phase: subband_phase,
            sb: subband_amplitude,
            num_subbands: nsb,
        })
    }

    /// Realizes the `num_ports x rank` precoder of one subband.
    pub fn realize(&self, pmi: &PmiIndex, subband: usize) -> Result<CMat> {
        let f = self.check_pmi(pmi)?;
        if subband >= f.num_subbands {
            return Err(Error::IndexOutOfRange(format!(
                "subband {subband} of {}",
                f.num_subbands
            )));
        }
        let beams: Vec<Vec<C64>> = self.combos[f.i12]
            .iter()
            .map(|&a| self.orthogonal_beam(f.q1, f.q2, a))
            .collect();
        let alphabet = self.psk_alphabet();
        let b = self.cfg.num_beams;
        let n = self.antenna.ports_per_pol();
        let rank = f.wb.len();
        let mut w = CMat::zeros(2 * n, rank);
        for l in 0..rank {
            for pol in 0..2 {
                for (i, beam) in beams.iter().enumerate() {
                    let c = pol * b + i;
                    let amp = WIDEBAND_AMPLITUDES[f.wb[l][c] as usize]
                        * SUBBAND_AMPLITUDES[f.sb[l][subband][c] as usize];
                    if amp == 0.0 {
                        continue;
                    }
                    let coef = alphabet[f.phase[l][subband][c] as usize] * amp;
                    for p in 0..n {
                        w[(pol * n + p, l)] += beam[p] * coef;
                    }
                }
            }
            let norm = w.column(l).norm();
            if norm == 0.0 {
                return Err(Error::InvalidArgument(format!("layer {l} has all-zero amplitudes")));
            }
            let scale = 1.0 / (norm * (rank as f64).sqrt());
            w.column_mut(l).scale_mut(scale);
        }
        Ok(w)
    }

    /// Realizes every subband of a report.
    pub fn realize_entry(&self, pmi: &PmiIndex) -> Result<PrecoderEntry> {
        let nsb = self.check_pmi(pmi)?.num_subbands;
        let w_per_subband = (0..nsb)
            .map(|k| self.realize(pmi, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(PrecoderEntry {
            pmi: pmi.clone(),
            w_per_subband,
        })
    }
}

struct Type2Fields<'a> {
    q1: usize,
    q2: usize,
    i12: usize,
    wb: &'a [Vec<u8>],
    phase: &'a [Vec<Vec<u8>>],
    sb: &'a [Vec<Vec<u8>>],
    num_subbands: usize,
}

fn psk(n: usize) -> Vec<C64> {
    (0..n).map(|c| ej(2.0 * PI * c as f64 / n as f64)).collect()
}

/// Phase indices maximizing `|sum_i amp_i * conj(psk[idx_i]) * target_i|`.
///
/// For any common phase reference `psi` the best index of every coefficient is
/// the grid point nearest `arg(target_i) - psi`; sweeping `psi` over one
/// revolution visits every assignment that can be optimal, so the result is the
/// exact maximizer over the `n_psk`-ary grid. The returned indices are rotated
/// so that the strongest weighted coefficient carries index 0.
pub fn optimal_phase_indices(target: &[C64], amplitudes: &[f64], n_psk: usize) -> Vec<u8> {
    assert_eq!(target.len(), amplitudes.len());
    let step = 2.0 * PI / n_psk as f64;
    let weights: Vec<C64> = target.iter().zip(amplitudes).map(|(t, a)| t * *a).collect();
    let active: Vec<usize> = (0..weights.len()).filter(|&i| weights[i].norm() > 0.0).collect();
    if active.is_empty() {
        return vec![0; target.len()];
    }

    // Breakpoints of psi where some coefficient switches its nearest grid point.
    let mut psis: Vec<f64> = Vec::with_capacity(active.len() * n_psk);
    for &i in &active {
        let a = weights[i].arg();
        for c in 0..n_psk {
            let bp = (a - (c as f64 + 0.5) * step).rem_euclid(2.0 * PI);
            psis.push(bp);
        }
    }
    psis.sort_by(|x, y| x.total_cmp(y));
    psis.dedup();

    let assign = |psi: f64| -> Vec<u8> {
        (0..weights.len())
            .map(|i| {
                if weights[i].norm() == 0.0 {
                    0
                } else {
                    let rel = (weights[i].arg() - psi).rem_euclid(2.0 * PI);
                    ((rel / step).round() as usize % n_psk) as u8
                }
            })
            .collect()
    };
    let score = |idx: &[u8]| -> f64 {
        let alphabet_step = step;
        weights
            .iter()
            .zip(idx)
            .map(|(w, &c)| w * ej(-(c as f64) * alphabet_step))
            .sum::<C64>()
            .norm()
    };

    let mut best = assign(0.0);
    let mut best_score = score(&best);
    for (j, &p) in psis.iter().enumerate() {
        let next = psis.get(j + 1).copied().unwrap_or(psis[0] + 2.0 * PI);
        let mid = 0.5 * (p + next);
        let cand = assign(mid);
        let s = score(&cand);
        if s > best_score {
            best_score = s;
            best = cand;
        }
    }

    let strongest = active
        .iter()
        .copied()
        .max_by(|&a, &b| weights[a].norm().total_cmp(&weights[b].norm()).then(b.cmp(&a)))
        .unwrap_or(0);
    let shift = best[strongest] as usize;
    best.iter()
        .map(|&c| ((c as usize + n_psk - shift) % n_psk) as u8)
        .collect()
}
