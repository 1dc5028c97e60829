//! Corpus generators and independent oracles shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use mgp_clearing::clearing::{clear_hour_traced, ClearingConfig, ClearingTrace};
use mgp_clearing::market_data::{parse_limits, parse_offers, Offer, Purpose, TransitLimit};
use mgp_clearing::network::{NetworkTopology, ZoneId};
use mgp_clearing::synthetic::{random_limits, random_offers, random_tree, BookShape};
use rand::Rng;

pub fn data(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(path)
}

pub fn load(dir: &str, offers: &str, limits: &str) -> (NetworkTopology, Vec<Offer>, Vec<TransitLimit>) {
    let open = |name: &str| BufReader::new(File::open(data(&format!("{dir}/{name}"))).unwrap());
    let topology = NetworkTopology::parse(open("topology.txt")).unwrap();
    let offers = parse_offers(open(offers), &topology).unwrap();
    let limits = parse_limits(open(limits), &topology).unwrap();
    (topology, offers, limits)
}

pub fn italy() -> (NetworkTopology, Vec<Offer>, Vec<TransitLimit>) {
    load("italy", "offers_h09.csv", "limits.csv")
}

pub fn two_zone(relaxed: bool) -> (NetworkTopology, Vec<Offer>, Vec<TransitLimit>) {
    let limits = if relaxed { "limits_relaxed.csv" } else { "limits.csv" };
    load("two_zone", "offers.csv", limits)
}

/// Plain market: no foreign zones, no ring.
pub fn plain_config() -> ClearingConfig {
    ClearingConfig {
        foreign_zones: Vec::new(),
        ring_open_edge: None,
        ..ClearingConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub label: String,
    pub topology: NetworkTopology,
    pub offers: Vec<Offer>,
    pub limits: Vec<TransitLimit>,
    pub hour: u8,
    pub config: ClearingConfig,
}

impl Instance {
    pub fn clear(&self) -> ClearingTrace {
        clear_hour_traced(&self.offers, &self.topology, &self.limits, self.hour, &self.config)
            .unwrap_or_else(|e| panic!("{}: {e}", self.label))
    }
}

fn ensure_both_sides<R: Rng>(rng: &mut R, offers: &mut [Offer]) {
    for (k, purpose) in [(0, Purpose::Sell), (1, Purpose::Buy)] {
        if !offers.iter().any(|o| o.purpose == purpose) {
            offers[k].purpose = purpose;
            offers[k].price = rng.gen_range(0.0..100.0);
        }
    }
}

/// Up to 30 offers in one zone, prices in [0, 3000], quantities in [0, 1000].
pub fn single_zone_instance<R: Rng>(rng: &mut R, index: usize) -> Instance {
    let topology = NetworkTopology::new::<&str>(&["Z0"], &[]).unwrap();
    let shape = BookShape {
        quantity: 0.0..1000.0,
        sell_price: 0.0..3000.0,
        buy_price: 0.0..3000.0,
    };
    let count = rng.gen_range(2..=30);
    let mut offers = random_offers(rng, &[ZoneId(0)], count, 1, &shape, 0);
    ensure_both_sides(rng, &mut offers);
    Instance {
        label: format!("single-zone #{index}"),
        topology,
        offers,
        limits: Vec::new(),
        hour: 1,
        config: plain_config(),
    }
}

/// Random tree with 3 to 6 zones, 4 to 12 offers per zone and limits tight
/// enough to split the market regularly.
pub fn tree_instance<R: Rng>(rng: &mut R, index: usize) -> Instance {
    let zones = rng.gen_range(3..=6);
    let topology = random_tree(rng, zones);
    let ids: Vec<ZoneId> = topology.zones().iter().map(|z| z.id).collect();
    let count = zones * rng.gen_range(4..=12);
    let mut offers = random_offers(rng, &ids, count, 1, &BookShape::default(), 0);
    ensure_both_sides(rng, &mut offers);
    let limits = random_limits(rng, &topology, 0.0..150.0);
    Instance {
        label: format!("tree #{index}"),
        topology,
        offers,
        limits,
        hour: 1,
        config: plain_config(),
    }
}

/// At most 3 zones and 8 offers; quantities and limits are multiples of
/// 0.25 so a grid enumeration can reach every vertex.
pub fn small_grid_instance<R: Rng>(rng: &mut R, index: usize) -> Instance {
    let zones = rng.gen_range(1..=3);
    let topology = random_tree(rng, zones);
    let ids: Vec<ZoneId> = topology.zones().iter().map(|z| z.id).collect();
    let count = rng.gen_range(2..=8);
    let mut offers = random_offers(rng, &ids, count, 1, &BookShape::default(), 0);
    ensure_both_sides(rng, &mut offers);
    for o in &mut offers {
        o.quantity = 0.25 * rng.gen_range(1..=6) as f64;
    }
    let limits = topology
        .edges()
        .iter()
        .flat_map(|e| [e.forward(), e.backward()])
        .map(|d| TransitLimit {
            from: d.from,
            to: d.to,
            max_flow: 0.25 * rng.gen_range(0..=6) as f64,
        })
        .collect();
    Instance {
        label: format!("grid #{index}"),
        topology,
        offers,
        limits,
        hour: 1,
        config: plain_config(),
    }
}

/// Zones on the `from` side of the directed link, found by flooding the
/// link list directly.
fn side_of(topology: &NetworkTopology, from: ZoneId, to: ZoneId) -> Vec<bool> {
    let mut seen = vec![false; topology.zone_count()];
    seen[from.0] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for e in topology.edges() {
            if (e.a == from && e.b == to) || (e.a == to && e.b == from) {
                continue;
            }
            if seen[e.a.0] != seen[e.b.0] {
                seen[e.a.0] = true;
                seen[e.b.0] = true;
                changed = true;
            }
        }
    }
    seen
}

/// Best welfare over every acceptance pattern on the 0.25 grid that keeps
/// the energy balance and all declared limits. The last buy takes whatever
/// quantity balances the pattern. Needs a connected topology.
pub fn brute_force_welfare(inst: &Instance) -> f64 {
    let quarters = |v: f64| (v * 4.0).round() as i64;
    let offers = &inst.offers;
    let last_buy = offers.iter().rposition(|o| o.purpose == Purpose::Buy).unwrap();
    let free: Vec<usize> = (0..offers.len()).filter(|&k| k != last_buy).collect();
    let cap: Vec<i64> = offers.iter().map(|o| quarters(o.quantity)).collect();
    let rows: Vec<(Vec<bool>, i64)> = inst
        .limits
        .iter()
        .map(|l| (side_of(&inst.topology, l.from, l.to), quarters(l.max_flow)))
        .collect();

    let mut level = vec![0i64; offers.len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        let net: i64 = free.iter().map(|&k| offers[k].purpose.sign() as i64 * level[k]).sum();
        if (0..=cap[last_buy]).contains(&net) {
            level[last_buy] = net;
            let feasible = rows.iter().all(|(side, limit)| {
                let export: i64 = offers
                    .iter()
                    .zip(&level)
                    .filter(|(o, _)| side[o.zone.0])
                    .map(|(o, &q)| o.purpose.sign() as i64 * q)
                    .sum();
                export <= *limit
            });
            if feasible {
                let welfare: f64 = offers
                    .iter()
                    .zip(&level)
                    .map(|(o, &q)| -o.purpose.sign() * o.price * q as f64 * 0.25)
                    .sum();
                best = best.max(welfare);
            }
        }
        // odometer over the free offers
        let mut k = 0;
        loop {
            if k == free.len() {
                return best;
            }
            let j = free[k];
            if level[j] < cap[j] {
                level[j] += 1;
                break;
            }
            level[j] = 0;
            k += 1;
        }
    }
}

/// Every macrozone holding offers has exactly one partially accepted sell
/// and no partially accepted buy, so the sell alone sets the price.
pub fn sell_sets_every_price(trace: &ClearingTrace) -> bool {
    const TOL: f64 = 1e-7;
    trace.result.macrozones.iter().all(|zones| {
        let partial = |purpose: Purpose| {
            trace
                .offers
                .iter()
                .zip(&trace.regularized)
                .filter(|(o, _)| o.purpose == purpose && zones.contains(&o.zone))
                .filter(|(o, &x)| x > TOL && x < o.quantity - TOL)
                .count()
        };
        let has_offers = trace.offers.iter().any(|o| zones.contains(&o.zone));
        !has_offers || (partial(Purpose::Sell) == 1 && partial(Purpose::Buy) == 0)
    })
}

/// Copy of `inst` with every price, and the foreign price cap, scaled by `c`.
pub fn scaled(inst: &Instance, c: f64) -> Instance {
    let mut out = inst.clone();
    for o in &mut out.offers {
        o.price *= c;
    }
    out.config.foreign_buy_price_cap *= c;
    out.label = format!("{} x{c}", inst.label);
    out
}
