//! `channel probe`: ensemble statistics of the configured channel against
//! their targets.

use std::process::ExitCode;

use clap::Args;

use nrsim_core::channel::{generate_channel, ChannelConfig, TapProcess};
use nrsim_core::Result;

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Independent drops for the power checks.
    #[arg(long, default_value_t = 10_000)]
    drops: u64,
    /// Slots for the correlation check.
    #[arg(long, default_value_t = 100_000)]
    slots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const POWER_TOL: f64 = 0.03;
const CORR_TOL: f64 = 0.02;

struct Check {
    name: String,
    measured: f64,
    target: f64,
    pass: bool,
}

pub fn run(base: &ChannelConfig, args: &ProbeArgs) -> Result<ExitCode> {
    let drops = args.drops.max(1);
    let pdp = base.normalized_pdp();
    let mut tap_power = vec![0.0; pdp.len()];
    let mut tap_entries = 0usize;
    let mut sb_power = 0.0;
    let mut sb_entries = 0usize;
    for d in 0..drops {
        let cfg = ChannelConfig {
            seed: args.seed.wrapping_add(d),
            ..base.clone()
        };
        let p = TapProcess::new(&cfg)?;
        for (acc, t) in tap_power.iter_mut().zip(p.taps()) {
            *acc += t.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        tap_entries += p.taps()[0].len();
        for h in generate_channel(&cfg, 1)?.slot(0) {
            sb_power += h.iter().map(|z| z.norm_sqr()).sum::<f64>();
            sb_entries += h.len();
        }
    }

    let mut checks = Vec::new();
    let mean = sb_power / sb_entries as f64;
    checks.push(Check {
        name: "mean subband entry power".into(),
        measured: mean,
        target: 1.0,
        pass: (mean - 1.0).abs() <= POWER_TOL,
    });
    for (t, (acc, tap)) in tap_power.iter().zip(&pdp).enumerate() {
        let m = acc / tap_entries as f64;
        checks.push(Check {
            name: format!("tap {t:>2} power"),
            measured: m,
            target: tap.power,
            pass: ((m - tap.power) / tap.power).abs() <= POWER_TOL,
        });
    }

    let target = base.slot_correlation();
    let mut p = TapProcess::new(&ChannelConfig {
        seed: args.seed,
        ..base.clone()
    })?;
    let mut prev: Vec<Vec<_>> = p.taps().iter().map(|t| t.iter().copied().collect()).collect();
    let (mut cross, mut power) = (0.0, 0.0);
    for _ in 1..args.slots.max(2) {
        p.advance();
        for (old, t) in prev.iter_mut().zip(p.taps()) {
            for (a, b) in old.iter_mut().zip(t.iter()) {
                cross += (a.conj() * b).re;
                power += a.norm_sqr();
                *a = *b;
            }
        }
    }
    let emp = cross / power;
    checks.push(Check {
        name: "lag-1 correlation".into(),
        measured: emp,
        target,
        pass: (emp - target).abs() <= CORR_TOL,
    });

    println!(
        "channel {}x{}, {} taps, doppler {} Hz, {} drops, {} slots",
        base.num_rx_ports,
        base.num_tx_ports,
        pdp.len(),
        base.doppler_hz,
        drops,
        args.slots
    );
    println!("{:<26} {:>12} {:>12}  result", "check", "measured", "target");
    let mut failed = 0;
    for c in &checks {
        println!(
            "{:<26} {:>12.6} {:>12.6}  {}",
            c.name,
            c.measured,
            c.target,
            if c.pass { "PASS" } else { "FAIL" }
        );
        failed += usize::from(!c.pass);
    }
    if failed > 0 {
        eprintln!("{failed} channel checks failed");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
