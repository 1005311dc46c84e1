//! Oversampled DFT beam grid and the NR Type I / Type II downlink codebooks.
//!
//! Both families compose a wideband beam selection (`i1` indices) with a
//! per-subband co-phasing or combination stage (`i2` indices). Type I picks a
//! single beam (or an orthogonal beam pair) and co-phases the two
//! polarizations; Type II linearly combines `B` orthogonal beams with
//! quantized amplitudes and phases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ej, CMat, C64};

mod type1;
mod type2;

pub use type1::{Type1Codebook, Type1Entry, MAX_TYPE1_RANK};
pub use type2::{
    optimal_phase_indices, Type2CodebookSpace, Type2Config, MAX_TYPE2_RANK, SUBBAND_AMPLITUDES,
    WIDEBAND_AMPLITUDES,
};

/// Cross-polarized uniform planar panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntennaConfig {
    /// Horizontal antenna count.
    pub n1: usize,
    /// Vertical antenna count.
    pub n2: usize,
    /// Panel count. Only single-panel arrays are supported.
    pub ng: usize,
    pub cross_polarized: bool,
}

impl AntennaConfig {
    pub fn new(n1: usize, n2: usize) -> Self {
        AntennaConfig {
            n1,
            n2,
            ng: 1,
            cross_polarized: true,
        }
    }

    pub fn num_ports(&self) -> usize {
        2 * self.n1 * self.n2 * self.ng
    }

    /// Ports per polarization.
    pub fn ports_per_pol(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::config("n1", "n1 and n2 must be positive"));
        }
        if self.ng != 1 {
            return Err(Error::config("ng", "only single-panel arrays (ng = 1) are supported"));
        }
        if !self.cross_polarized {
            return Err(Error::config(
                "cross_polarized",
                "only cross-polarized arrays are supported",
            ));
        }
        Ok(())
    }
}

impl Default for AntennaConfig {
    fn default() -> Self {
        AntennaConfig::new(4, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Oversampling {
    pub o1: usize,
    pub o2: usize,
}

/// Supported (N1, N2) -> (O1, O2) pairs from TS 38.214.
const OVERSAMPLING_TABLE: [((usize, usize), (usize, usize)); 13] = [
    ((2, 1), (4, 1)),
    ((2, 2), (4, 4)),
    ((4, 1), (4, 1)),
    ((3, 2), (4, 4)),
    ((6, 1), (4, 1)),
    ((4, 2), (4, 4)),
    ((8, 1), (4, 1)),
    ((4, 3), (4, 4)),
    ((6, 2), (4, 4)),
    ((12, 1), (4, 1)),
    ((4, 4), (4, 4)),
    ((8, 2), (4, 4)),
    ((16, 1), (4, 1)),
];

pub fn oversampling_factors(cfg: &AntennaConfig) -> Result<Oversampling> {
    cfg.validate()?;
    OVERSAMPLING_TABLE
        .iter()
        .find(|(dims, _)| *dims == (cfg.n1, cfg.n2))
        .map(|&(_, (o1, o2))| Oversampling { o1, o2 })
        .ok_or_else(|| {
            Error::config(
                "n1",
                format!("unsupported antenna configuration (n1, n2) = ({}, {})", cfg.n1, cfg.n2),
            )
        })
}

/// Oversampled 2-D DFT beam `v_{l,m} = u_l (x) u_m`, unnormalized.
pub fn dft_beam(l: usize, m: usize, cfg: &AntennaConfig, ov: &Oversampling) -> Result<Vec<C64>> {
    let (g1, g2) = (cfg.n1 * ov.o1, cfg.n2 * ov.o2);
    if l >= g1 || m >= g2 {
        return Err(Error::IndexOutOfRange(format!(
            "beam ({l}, {m}) outside {g1} x {g2} grid"
        )));
    }
    Ok(beam_unchecked(l, m, cfg, ov))
}

/// Same as [`dft_beam`] with indices taken modulo the grid size.
pub(crate) fn beam_unchecked(l: usize, m: usize, cfg: &AntennaConfig, ov: &Oversampling) -> Vec<C64> {
    use std::f64::consts::PI;
    let (g1, g2) = ((cfg.n1 * ov.o1) as f64, (cfg.n2 * ov.o2) as f64);
    let mut v = Vec::with_capacity(cfg.n1 * cfg.n2);
    for a in 0..cfg.n1 {
        let ua = ej(2.0 * PI * (a * l) as f64 / g1);
        for b in 0..cfg.n2 {
            v.push(ua * ej(2.0 * PI * (b * m) as f64 / g2));
        }
    }
    v
}

/// PMI report content.
///
/// Ordering is lexicographic over the fields in declaration order and is
/// used for deterministic tie-breaking during selection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PmiIndex {
    TypeI {
        i11: usize,
        i12: usize,
        i13: usize,
        /// Co-phasing index per subband.
        i2: Vec<usize>,
    },
    TypeII {
        /// Rotation (q1, q2) of the orthogonal beam grid.
        q1: usize,
        q2: usize,
        /// Combinatorial index of the selected beam group.
        i12: usize,
        /// `[layer][coef]`, level index 0..7 into [`WIDEBAND_AMPLITUDES`].
        wideband_amplitude: Vec<Vec<u8>>,
        /// `[layer][subband][coef]`, PSK index 0..n_psk.
        subband_phase: Vec<Vec<Vec<u8>>>,
        /// `[layer][subband][coef]`, index into [`SUBBAND_AMPLITUDES`].
        subband_amplitude: Vec<Vec<Vec<u8>>>,
    },
}

/// A PMI with its realized per-subband precoders (`num_ports x rank`).
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderEntry {
    pub pmi: PmiIndex,
    pub w_per_subband: Vec<CMat>,
}

impl PrecoderEntry {
    pub fn rank(&self) -> usize {
        self.w_per_subband.first().map_or(0, |w| w.ncols())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oversampling_lookup() {
        let ov = oversampling_factors(&AntennaConfig::new(4, 1)).unwrap();
        assert_eq!(ov, Oversampling { o1: 4, o2: 1 });
        let ov = oversampling_factors(&AntennaConfig::new(2, 2)).unwrap();
        assert_eq!(ov, Oversampling { o1: 4, o2: 4 });
        for ((n1, n2), (_, o2)) in OVERSAMPLING_TABLE {
            if n2 == 1 {
                assert_eq!(o2, 1, "({n1},{n2})");
            }
        }
        let err = oversampling_factors(&AntennaConfig::new(5, 1)).unwrap_err();
        assert!(err.to_string().contains("(5, 1)"));
    }

    #[test]
    fn zero_beam_is_all_ones() {
        let cfg = AntennaConfig::new(4, 2);
        let ov = oversampling_factors(&cfg).unwrap();
        let v = dft_beam(0, 0, &cfg, &ov).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn beams_have_unit_modulus_entries() {
        let cfg = AntennaConfig::new(4, 2);
        let ov = oversampling_factors(&cfg).unwrap();
        for l in 0..16 {
            for m in 0..8 {
                for z in dft_beam(l, m, &cfg, &ov).unwrap() {
                    assert!((z.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn orthogonal_subgrid() {
        let cfg = AntennaConfig::new(4, 1);
        let ov = oversampling_factors(&cfg).unwrap();
        for l in 0..16 {
            for k in 1..4 {
                let a = dft_beam(l, 0, &cfg, &ov).unwrap();
                let b = dft_beam((l + ov.o1 * k) % 16, 0, &cfg, &ov).unwrap();
                let ip: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
                assert!(ip.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn beam_index_out_of_range() {
        let cfg = AntennaConfig::new(4, 1);
        let ov = oversampling_factors(&cfg).unwrap();
        assert!(matches!(dft_beam(16, 0, &cfg, &ov), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(dft_beam(0, 1, &cfg, &ov), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn multi_panel_rejected() {
        let cfg = AntennaConfig {
            ng: 2,
            ..AntennaConfig::new(4, 1)
        };
        assert!(matches!(oversampling_factors(&cfg), Err(Error::Config { .. })));
    }
}
