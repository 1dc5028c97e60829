//! Clears the bundled Italian hour and prints zonal prices, macrozones and
//! the congested links.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use mgp_clearing::clearing::{clear_hour_traced, ClearingConfig};
use mgp_clearing::market_data::{parse_limits, parse_offers};
use mgp_clearing::network::NetworkTopology;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/italy");
    let open = |name: &str| BufReader::new(File::open(dir.join(name)).unwrap());
    let topology = NetworkTopology::parse(open("topology.txt")).unwrap();
    let offers = parse_offers(open("offers_h09.csv"), &topology).unwrap();
    let limits = parse_limits(open("limits.csv"), &topology).unwrap();

    let trace = clear_hour_traced(&offers, &topology, &limits, 9, &ClearingConfig::default()).unwrap();
    let r = &trace.result;
    if let Some(e) = trace.opened_edge {
        println!("ring opened at {}", topology.edge_label(e));
    }
    println!("welfare {:.2} EUR", r.welfare);
    for e in &r.saturated_edges {
        println!("saturated {}", topology.edge_label(*e));
    }
    println!();
    let (marginal, dual) = (r.prices_marginal.as_ref().unwrap(), r.prices_dual.as_ref().unwrap());
    for (m, zones) in r.macrozones.iter().enumerate() {
        for z in zones {
            println!("{m}  {:<5} {:>8.2} {:>8.2}", topology.code(*z), marginal[z.0], dual[z.0]);
        }
    }
    println!();
    for f in &r.transits {
        println!("{:<5} -> {:<5} {:>10.3}", topology.code(f.from), topology.code(f.to), f.flow);
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
}
