//! Clears a synthetic 24-hour day on the Italian network, one hour per
//! thread, and reports per-hour timing.

use std::time::Instant;

use mgp_clearing::clearing::{clear_hour, ClearingConfig};
use mgp_clearing::synthetic::italian_day;
use rayon::prelude::*;

fn main() {
    let per_hour: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let (topology, offers, limits) = italian_day(2014, per_hour);
    let config = ClearingConfig::default();

    let start = Instant::now();
    let hours: Vec<_> = (1..=24u8)
        .into_par_iter()
        .map(|hour| {
            let t = Instant::now();
            let r = clear_hour(&offers, &topology, &limits, hour, &config).unwrap();
            (r, t.elapsed())
        })
        .collect();
    let wall = start.elapsed();

    for (r, took) in &hours {
        let p = r.prices();
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "hour {:2}  {} macrozones  {lo:7.2}..{hi:7.2}  {:6.1} ms",
            r.hour,
            r.macrozones.len(),
            took.as_secs_f64() * 1e3
        );
    }
    println!("{per_hour} offers/hour, day cleared in {:.0} ms", wall.as_secs_f64() * 1e3);
}
