//! Builds the aggregated supply and demand curves of a random single-zone
//! book and crosses them.

use mgp_clearing::market_data::{build_merit_curves, merit_order_clear};
use mgp_clearing::network::ZoneId;
use mgp_clearing::synthetic::{random_offers, rng, BookShape};

fn main() {
    let mut r = rng(42);
    let offers = random_offers(&mut r, &[ZoneId(0)], 20, 1, &BookShape::default(), 0);
    let (supply, demand) = build_merit_curves(&offers, &[ZoneId(0)]);

    println!("side,cumulative_mwh,price");
    for (curve, label) in [(&supply, "supply"), (&demand, "demand")] {
        for s in &curve.steps {
            println!("{label},{:.3},{:.2}", s.cumulative, s.price);
        }
    }

    let cleared = merit_order_clear(&supply, &demand);
    let welfare = demand.area(cleared.volume) - supply.area(cleared.volume);
    println!(
        "\ncleared {:.3} MWh at {:.2} EUR/MWh, welfare {:.2}",
        cleared.volume, cleared.price, welfare
    );
}
