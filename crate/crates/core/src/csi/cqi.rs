use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral efficiencies of the 4-bit CQI table (QPSK to 64QAM) from TS 38.214.
const CQI_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223,
    3.9023, 4.5234, 5.1152, 5.5547,
];

/// SNR gap to Shannon capacity used to place the default thresholds.
pub const DEFAULT_GAP_DB: f64 = 2.0;
pub const DEFAULT_TARGET_BLER: f64 = 0.1;

/// Slope of the logistic BLER proxy, per dB. The proxy crosses the 10% target
/// at each row's threshold.
const BLER_SLOPE_PER_DB: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqiRow {
    pub index: u8,
    pub efficiency: f64,
    pub threshold_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqiTable {
    rows: Vec<CqiRow>,
}

impl Default for CqiTable {
    fn default() -> Self {
        CqiTable::with_gap_db(DEFAULT_GAP_DB)
    }
}

impl CqiTable {
    /// Thresholds from the gap rule `Gamma * (2^SE - 1)`.
    pub fn with_gap_db(gap_db: f64) -> Self {
        let gap = 10f64.powf(gap_db / 10.0);
        let rows = CQI_EFFICIENCY
            .iter()
            .enumerate()
            .map(|(i, &se)| CqiRow {
                index: i as u8 + 1,
                efficiency: se,
                threshold_db: 10.0 * (gap * (se.exp2() - 1.0)).log10(),
            })
            .collect();
        CqiTable { rows }
    }

    pub fn new(rows: Vec<CqiRow>) -> Result<Self> {
        let t = CqiTable { rows };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() || self.rows.len() > 15 {
            return Err(Error::config("cqi_table", "must have 1 to 15 rows"));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.index as usize != i + 1 {
                return Err(Error::config("cqi_table", "indices must run 1, 2, ... in order"));
            }
            if !(r.efficiency > 0.0 && r.efficiency.is_finite() && r.threshold_db.is_finite()) {
                return Err(Error::config("cqi_table", format!("row {} is not finite/positive", r.index)));
            }
        }
        for w in self.rows.windows(2) {
            if !(w[1].efficiency > w[0].efficiency) || !(w[1].threshold_db > w[0].threshold_db) {
                return Err(Error::config(
                    "cqi_table",
                    "efficiency and threshold must be strictly increasing",
                ));
            }
        }
        Ok(())
    }

    /// Parses `cqi_index, efficiency, threshold_db` rows. A header line and `#` comments are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if rows.is_empty() && cols.first().is_some_and(|c| c.parse::<f64>().is_err()) {
                continue;
            }
            if cols.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("expected 3 columns, found {}", cols.len()),
                });
            }
            let bad = |e: String| Error::Parse { line: i + 1, reason: e };
            rows.push(CqiRow {
                index: cols[0].parse().map_err(|e| bad(format!("cqi_index: {e}")))?,
                efficiency: cols[1].parse().map_err(|e| bad(format!("efficiency: {e}")))?,
                threshold_db: cols[2].parse().map_err(|e| bad(format!("threshold_db: {e}")))?,
            });
        }
        CqiTable::new(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("cqi_index,efficiency,threshold_db\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.index, r.efficiency, r.threshold_db));
        }
        s
    }

    pub fn rows(&self) -> &[CqiRow] {
        &self.rows
    }

    pub fn max_cqi(&self) -> u8 {
        self.rows.len() as u8
    }

    /// Spectral efficiency per layer; 0 for CQI 0.
    pub fn efficiency(&self, cqi: u8) -> f64 {
        match cqi {
            0 => 0.0,
            k => self.rows[k as usize - 1].efficiency,
        }
    }

    /// Linear SINR needed by `cqi` at the given BLER target.
    pub fn threshold_linear(&self, cqi: u8, target_bler: f64) -> f64 {
        match cqi {
            0 => 0.0,
            k => 10f64.powf((self.rows[k as usize - 1].threshold_db + bler_offset_db(target_bler)) / 10.0),
        }
    }
}

/// Threshold shift for a BLER target other than 10% under the logistic proxy.
fn bler_offset_db(target_bler: f64) -> f64 {
    let logit = |p: f64| ((1.0 - p) / p).ln();
    (logit(target_bler) - logit(DEFAULT_TARGET_BLER)) / BLER_SLOPE_PER_DB
}

/// Largest CQI whose threshold does not exceed `eff_sinr` (linear); 0 if none.
pub fn map_cqi(eff_sinr: f64, table: &CqiTable, target_bler: f64) -> u8 {
    let offset = bler_offset_db(target_bler);
    let mut cqi = 0;
    for r in &table.rows {
        if 10f64.powf((r.threshold_db + offset) / 10.0) <= eff_sinr {
            cqi = r.index;
        } else {
            break;
        }
    }
    cqi
}
