//! Seeded generators for test corpora, benchmarks and examples.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::market_data::{Offer, Purpose, TransitLimit};
use crate::network::{NetworkTopology, ZoneId};

const ITALY_TOPOLOGY: &str = include_str!("../data/italy/topology.txt");

/// The 22-zone Italian network, ring included.
pub fn italian_topology() -> NetworkTopology {
    NetworkTopology::parse(ITALY_TOPOLOGY.as_bytes()).expect("bundled topology parses")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree on `zones` zones named `Z0, Z1, ...`; zone `k > 0` hangs off
/// a uniformly chosen earlier zone.
pub fn random_tree<R: Rng>(rng: &mut R, zones: usize) -> NetworkTopology {
    let codes: Vec<String> = (0..zones).map(|k| format!("Z{k}")).collect();
    let links: Vec<(String, String)> = (1..zones)
        .map(|k| (codes[rng.gen_range(0..k)].clone(), codes[k].clone()))
        .collect();
    NetworkTopology::new(&codes, &links).expect("generated tree is valid")
}

/// Distributions an offer book is drawn from. Prices are continuous, so
/// ties have probability zero.
#[derive(Debug, Clone)]
pub struct BookShape {
    pub quantity: Range<f64>,
    pub sell_price: Range<f64>,
    pub buy_price: Range<f64>,
}

impl Default for BookShape {
    fn default() -> Self {
        BookShape {
            quantity: 1.0..100.0,
            sell_price: 0.0..100.0,
            buy_price: 20.0..150.0,
        }
    }
}

/// `count` offers for `hour` spread uniformly over `zones`, with sell and
/// buy equally likely. Ids count up from `first_id`.
pub fn random_offers<R: Rng>(
    rng: &mut R,
    zones: &[ZoneId],
    count: usize,
    hour: u8,
    shape: &BookShape,
    first_id: usize,
) -> Vec<Offer> {
    (0..count)
        .map(|k| {
            let purpose = if rng.gen_bool(0.5) { Purpose::Sell } else { Purpose::Buy };
            let price = match purpose {
                Purpose::Sell => rng.gen_range(shape.sell_price.clone()),
                Purpose::Buy => rng.gen_range(shape.buy_price.clone()),
            };
            Offer {
                id: first_id + k,
                purpose,
                hour,
                zone: *zones.choose(rng).expect("at least one zone"),
                quantity: rng.gen_range(shape.quantity.clone()),
                price,
            }
        })
        .collect()
}

/// Limits on both directions of every link, drawn from `range`.
pub fn random_limits<R: Rng>(
    rng: &mut R,
    topology: &NetworkTopology,
    range: Range<f64>,
) -> Vec<TransitLimit> {
    topology
        .edges()
        .iter()
        .flat_map(|e| [e.forward(), e.backward()])
        .map(|d| TransitLimit {
            from: d.from,
            to: d.to,
            max_flow: rng.gen_range(range.clone()),
        })
        .collect()
}

/// A full synthetic day on the Italian network: `per_hour` offers in each
/// of the 24 hours and one set of limits for the day.
pub fn italian_day(seed: u64, per_hour: usize) -> (NetworkTopology, Vec<Offer>, Vec<TransitLimit>) {
    let topology = italian_topology();
    let mut rng = rng(seed);
    let zones: Vec<ZoneId> = topology.zones().iter().map(|z| z.id).collect();
    let shape = BookShape {
        quantity: 5.0..400.0,
        sell_price: 0.0..150.0,
        buy_price: 10.0..250.0,
    };
    let mut offers = Vec::with_capacity(24 * per_hour);
    for hour in 1..=24 {
        let first = offers.len();
        offers.extend(random_offers(&mut rng, &zones, per_hour, hour, &shape, first));
    }
    let limits = random_limits(&mut rng, &topology, 300.0..4000.0);
    (topology, offers, limits)
}
