//! Two zones joined by one link: a cheap seller in A, a dear one in B and
//! most of the demand in B. Sweeping the link limit shows the market
//! splitting and then coupling.

use mgp_clearing::clearing::{clear_hour, ClearingConfig};
use mgp_clearing::market_data::{Offer, Purpose, TransitLimit};
use mgp_clearing::network::{NetworkTopology, ZoneId};

fn main() {
    let topology = NetworkTopology::new(&["A", "B"], &[("A", "B")]).unwrap();
    let (a, b) = (ZoneId(0), ZoneId(1));
    let offer = |id, purpose, zone, quantity, price| Offer {
        id,
        purpose,
        hour: 1,
        zone,
        quantity,
        price,
    };
    let offers = [
        offer(0, Purpose::Sell, a, 20.0, 10.0),
        offer(1, Purpose::Sell, b, 20.0, 30.0),
        offer(2, Purpose::Buy, a, 5.0, 50.0),
        offer(3, Purpose::Buy, b, 25.0, 50.0),
    ];

    println!("limit  flow   price A  price B  welfare  macrozones");
    for limit in [0.0, 5.0, 10.0, 15.0, 20.0] {
        let limits = [
            TransitLimit { from: a, to: b, max_flow: limit },
            TransitLimit { from: b, to: a, max_flow: limit },
        ];
        let r = clear_hour(&offers, &topology, &limits, 1, &ClearingConfig::default()).unwrap();
        let p = r.prices();
        println!(
            "{limit:5}  {:5}  {:7}  {:7}  {:7}  {}",
            r.transits[0].flow,
            p[0],
            p[1],
            r.welfare,
            r.macrozones.len()
        );
    }
}
