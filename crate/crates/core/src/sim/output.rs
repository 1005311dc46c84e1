//! Plain CSV writers for sweep results. UTF-8, header row, one row per key.

use std::io::Write;

use super::{Comparison, SweepResult};
use crate::error::Result;

pub fn write_sweep_csv<W: Write>(out: &mut W, results: &[SweepResult]) -> Result<()> {
    writeln!(out, "snr_db,mode,mean_se,mean_mbps,mean_overhead_bits,fail_frac")?;
    for r in results {
        for p in &r.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.snr_db, r.mode, p.mean_throughput, p.mean_mbps, p.mean_overhead_bits, p.slots_failed
            )?;
        }
    }
    Ok(())
}

pub fn write_ri_hist_csv<W: Write>(out: &mut W, results: &[SweepResult]) -> Result<()> {
    writeln!(out, "snr_db,mode,ri,fraction")?;
    for r in results {
        for p in &r.points {
            for (i, f) in p.ri_histogram.iter().enumerate() {
                writeln!(out, "{},{},{},{}", p.snr_db, r.mode, i + 1, f)?;
            }
        }
    }
    Ok(())
}

pub fn write_cqi_hist_csv<W: Write>(out: &mut W, results: &[SweepResult]) -> Result<()> {
    writeln!(out, "snr_db,mode,cqi,fraction")?;
    for r in results {
        for p in &r.points {
            for (k, f) in p.cqi_histogram.iter().enumerate() {
                writeln!(out, "{},{},{},{}", p.snr_db, r.mode, k, f)?;
            }
        }
    }
    Ok(())
}

/// `snr_db, <mode>_se, <mode>_stderr ..., winner`
pub fn write_comparison_csv<W: Write>(out: &mut W, cmp: &Comparison) -> Result<()> {
    let mut header = vec!["snr_db".to_string()];
    for m in &cmp.modes {
        header.push(format!("{m}_se"));
        header.push(format!("{m}_stderr"));
    }
    header.push("winner".into());
    writeln!(out, "{}", header.join(","))?;
    for row in &cmp.rows {
        let mut cols = vec![row.snr_db.to_string()];
        for (t, e) in row.throughput.iter().zip(&row.std_error) {
            cols.push(t.to_string());
            cols.push(e.to_string());
        }
        cols.push(cmp.winner_label(row));
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}
