//! Opens the Italian ring and prints, for every directed link, the zones
//! whose exports that link carries.

use mgp_clearing::network::{connected_components, detect_cycles, edge_cut, open_ring, Edge};
use mgp_clearing::synthetic::italian_topology;

fn main() {
    let topology = italian_topology();
    let closing = detect_cycles(&topology);
    println!("{} zones, {} links", topology.zone_count(), topology.edges().len());
    for e in &closing {
        println!("cycle closed by {}", topology.edge_label(*e));
    }

    let ring = Edge::new(topology.find("CNOR").unwrap(), topology.find("CORS").unwrap());
    let (forest, opened) = open_ring(&topology, Some(ring)).expect("single ring");
    println!("opened {}", topology.edge_label(opened.unwrap()));

    for e in forest.edges() {
        for dir in [e.forward(), e.backward()] {
            let cut = edge_cut(&forest, dir).unwrap();
            let side: Vec<&str> = forest
                .zones()
                .iter()
                .filter(|z| cut.contains(z.id))
                .map(|z| z.code.as_str())
                .collect();
            println!("{:<12} {}", forest.directed_label(dir), side.join(" "));
        }
    }

    let islands = connected_components(&forest, &[]);
    println!("{} connected components", islands.len());
}
