//! Type I single-panel codebook, ranks 1 to 4.

use std::f64::consts::FRAC_PI_2;

use super::{beam_unchecked, AntennaConfig, Oversampling, PmiIndex, PrecoderEntry};
use crate::error::{Error, Result};
use crate::linalg::{ej, CMat, C64};

pub const MAX_TYPE1_RANK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Entry {
    pub i11: usize,
    pub i12: usize,
    pub i13: usize,
    pub i2: usize,
    /// `num_ports x rank`, unit Frobenius norm.
    pub w: CMat,
}

/// Every precoder of one rank, enumerated in lexicographic `(i11, i12, i13, i2)` order.
#[derive(Debug, Clone)]
pub struct Type1Codebook {
    antenna: AntennaConfig,
    ov: Oversampling,
    rank: usize,
    offsets: Vec<(usize, usize)>,
    entries: Vec<Type1Entry>,
}

/// Second-beam offsets `(k1, k2)` selected by `i13` for rank 2.
fn rank2_offsets(n1: usize, n2: usize, o1: usize, o2: usize) -> Vec<(usize, usize)> {
    match (n1, n2) {
        (2, 1) => vec![(0, 0), (o1, 0)],
        (_, 1) => vec![(0, 0), (o1, 0), (2 * o1, 0), (3 * o1, 0)],
        _ if n1 == n2 => vec![(0, 0), (o1, 0), (0, o2), (o1, o2)],
        _ if n1 > n2 => vec![(0, 0), (o1, 0), (0, o2), (2 * o1, 0)],
        _ => fallback_offsets(n1, n2, o1, o2, true),
    }
}

/// Second-beam offsets for ranks 3 and 4. The listed arrays follow the
/// fewer-than-16-port table; larger arrays fall back to adjacent orthogonal beams.
fn rank34_offsets(n1: usize, n2: usize, o1: usize, o2: usize) -> Vec<(usize, usize)> {
    match (n1, n2) {
        (2, 1) => vec![(o1, 0)],
        (4, 1) => vec![(o1, 0), (2 * o1, 0), (3 * o1, 0)],
        (6, 1) => vec![(o1, 0), (2 * o1, 0), (3 * o1, 0), (4 * o1, 0)],
        (2, 2) => vec![(o1, 0), (0, o2), (o1, o2)],
        (3, 2) => vec![(o1, 0), (0, o2), (o1, o2), (2 * o1, 0)],
        _ => fallback_offsets(n1, n2, o1, o2, false),
    }
}

/// Up to four orthogonal-grid offsets ordered by distance from the first beam.
fn fallback_offsets(n1: usize, n2: usize, o1: usize, o2: usize, include_zero: bool) -> Vec<(usize, usize)> {
    let mut cands: Vec<(usize, usize)> = (0..n1)
        .flat_map(|a| (0..n2).map(move |b| (a, b)))
        .filter(|&(a, b)| include_zero || (a, b) != (0, 0))
        .collect();
    cands.sort_by_key(|&(a, b)| (a + b, b, a));
    cands.truncate(4);
    cands.into_iter().map(|(a, b)| (a * o1, b * o2)).collect()
}

impl Type1Codebook {
    pub fn build(antenna: &AntennaConfig, rank: usize, ov: &Oversampling) -> Result<Self> {
        antenna.validate()?;
        if rank == 0 || rank > MAX_TYPE1_RANK {
            return Err(Error::config("rank", format!("Type I rank must be 1..=4, got {rank}")));
        }
        if rank > antenna.num_ports() {
            return Err(Error::config(
                "rank",
                format!("rank {rank} exceeds {} ports", antenna.num_ports()),
            ));
        }
        if antenna.n2 == 1 && ov.o2 != 1 {
            return Err(Error::config("o2", "o2 must be 1 when n2 = 1"));
        }
        let (n1, n2, o1, o2) = (antenna.n1, antenna.n2, ov.o1, ov.o2);
        let offsets = match rank {
            1 => vec![(0, 0)],
            2 => rank2_offsets(n1, n2, o1, o2),
            _ => rank34_offsets(n1, n2, o1, o2),
        };
        if offsets.is_empty() {
            return Err(Error::config(
                "rank",
                format!("rank {rank} needs two orthogonal beams, array ({n1}, {n2}) has one"),
            ));
        }

        let mut cb = Type1Codebook {
            antenna: *antenna,
            ov: *ov,
            rank,
            offsets,
            entries: Vec::new(),
        };
        let [r11, r12, r13, r2] = cb.index_ranges();
        let mut entries = Vec::with_capacity(r11 * r12 * r13 * r2);
        for i11 in 0..r11 {
            for i12 in 0..r12 {
                for i13 in 0..r13 {
                    for i2 in 0..r2 {
                        let w = cb.matrix(i11, i12, i13, i2);
                        entries.push(Type1Entry { i11, i12, i13, i2, w });
                    }
                }
            }
        }
        cb.entries = entries;
        Ok(cb)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn antenna(&self) -> &AntennaConfig {
        &self.antenna
    }

    pub fn oversampling(&self) -> &Oversampling {
        &self.ov
    }

    /// Sizes of the `i11`, `i12`, `i13` and `i2` index ranges.
    pub fn index_ranges(&self) -> [usize; 4] {
        let r2 = if self.rank == 1 { 4 } else { 2 };
        [
            self.antenna.n1 * self.ov.o1,
            self.antenna.n2 * self.ov.o2,
            self.offsets.len(),
            r2,
        ]
    }

    /// Number of co-phasing values per wideband beam selection.
    pub fn num_cophase(&self) -> usize {
        self.index_ranges()[3]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Type1Entry] {
        &self.entries
    }

    pub fn position(&self, i11: usize, i12: usize, i13: usize, i2: usize) -> Option<usize> {
        let [r11, r12, r13, r2] = self.index_ranges();
        (i11 < r11 && i12 < r12 && i13 < r13 && i2 < r2)
            .then(|| ((i11 * r12 + i12) * r13 + i13) * r2 + i2)
    }

    pub fn get(&self, i11: usize, i12: usize, i13: usize, i2: usize) -> Option<&Type1Entry> {
        self.position(i11, i12, i13, i2).map(|p| &self.entries[p])
    }

    /// Position of the first entry equal to `w` within `tol` (max abs entry difference).
    pub fn lookup(&self, w: &CMat, tol: f64) -> Option<usize> {
        self.entries.iter().position(|e| {
            e.w.shape() == w.shape() && e.w.iter().zip(w.iter()).all(|(a, b)| (a - b).norm() <= tol)
        })
    }

    /// Realizes a full-band report: one precoder per subband `i2`.
    pub fn realize(&self, pmi: &PmiIndex) -> Result<PrecoderEntry> {
        let PmiIndex::TypeI { i11, i12, i13, i2 } = pmi else {
            return Err(Error::InvalidArgument("Type II PMI given to a Type I codebook".into()));
        };
        if i2.is_empty() {
            return Err(Error::InvalidArgument("PMI has no subband indices".into()));
        }
        let w_per_subband = i2
            .iter()
            .map(|&n| {
                self.get(*i11, *i12, *i13, n)
                    .map(|e| e.w.clone())
                    .ok_or_else(|| Error::IndexOutOfRange(format!("{pmi:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PrecoderEntry {
            pmi: pmi.clone(),
            w_per_subband,
        })
    }

    fn matrix(&self, i11: usize, i12: usize, i13: usize, i2: usize) -> CMat {
        let (k1, k2) = self.offsets[i13];
        let v = beam_unchecked(i11, i12, &self.antenna, &self.ov);
        let vp = beam_unchecked(i11 + k1, i12 + k2, &self.antenna, &self.ov);
        let n = self.antenna.ports_per_pol();
        // phi_n = exp(j pi n / 2); n spans 0..4 at rank 1 and 0..2 above
        let phi = ej(FRAC_PI_2 * i2 as f64);
        // column layout: (beam, polarization-2 co-phase)
        let cols: Vec<(&[C64], C64)> = match self.rank {
            1 => vec![(&v, phi)],
            2 => vec![(&v, phi), (&vp, -phi)],
            3 => vec![(&v, phi), (&vp, phi), (&v, -phi)],
            _ => vec![(&v, phi), (&vp, phi), (&v, -phi), (&vp, -phi)],
        };
        let scale = 1.0 / ((self.rank * self.antenna.num_ports()) as f64).sqrt();
        let mut w = CMat::zeros(2 * n, self.rank);
        for (c, (beam, cophase)) in cols.into_iter().enumerate() {
            for p in 0..n {
                w[(p, c)] = beam[p] * scale;
                w[(n + p, c)] = beam[p] * cophase * scale;
            }
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::oversampling_factors;
    use crate::linalg::frobenius_sq;

    fn codebook(n1: usize, n2: usize, rank: usize) -> Type1Codebook {
        let a = AntennaConfig::new(n1, n2);
        let ov = oversampling_factors(&a).unwrap();
        Type1Codebook::build(&a, rank, &ov).unwrap()
    }

    #[test]
    fn rank1_cardinality_4x1() {
        let cb = codebook(4, 1, 1);
        assert_eq!(cb.len(), 16 * 4);
        assert_eq!(cb.index_ranges(), [16, 1, 1, 4]);
    }

    #[test]
    fn rank2_cardinality_4x1() {
        let cb = codebook(4, 1, 2);
        assert_eq!(cb.index_ranges(), [16, 1, 4, 2]);
        assert_eq!(cb.len(), 128);
    }

    #[test]
    fn all_entries_normalized_and_orthogonal() {
        for (n1, n2) in [(2, 1), (4, 1), (2, 2), (4, 2)] {
            for rank in 1..=4 {
                let cb = codebook(n1, n2, rank);
                for e in cb.entries() {
                    assert!((frobenius_sq(&e.w) - 1.0).abs() < 1e-9);
                    let gram = e.w.adjoint() * &e.w;
                    let d = gram[(0, 0)].re;
                    for i in 0..rank {
                        for j in 0..rank {
                            let expect = if i == j { d } else { 0.0 };
                            assert!((gram[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let cb = codebook(4, 1, 2);
        let keys: Vec<_> = cb.entries().iter().map(|e| (e.i11, e.i12, e.i13, e.i2)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for (p, e) in cb.entries().iter().enumerate() {
            assert_eq!(cb.position(e.i11, e.i12, e.i13, e.i2), Some(p));
        }
    }

    #[test]
    fn lookup_round_trip() {
        for rank in 1..=4 {
            let cb = codebook(4, 1, rank);
            for (p, e) in cb.entries().iter().enumerate() {
                assert_eq!(cb.lookup(&e.w, 1e-12), Some(p));
            }
        }
    }

    #[test]
    fn rank_limits() {
        let a = AntennaConfig::new(4, 1);
        let ov = oversampling_factors(&a).unwrap();
        assert!(Type1Codebook::build(&a, 0, &ov).is_err());
        assert!(Type1Codebook::build(&a, 5, &ov).is_err());
    }

    #[test]
    fn realize_per_subband() {
        let cb = codebook(4, 1, 1);
        let pmi = PmiIndex::TypeI { i11: 3, i12: 0, i13: 0, i2: vec![0, 2, 1] };
        let entry = cb.realize(&pmi).unwrap();
        assert_eq!(entry.w_per_subband.len(), 3);
        assert_eq!(entry.rank(), 1);
        assert_eq!(entry.w_per_subband[1], cb.get(3, 0, 0, 2).unwrap().w);
        let bad = PmiIndex::TypeI { i11: 16, i12: 0, i13: 0, i2: vec![0] };
        assert!(cb.realize(&bad).is_err());
    }
}
