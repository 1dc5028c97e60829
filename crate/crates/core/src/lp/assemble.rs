use thiserror::Error;

use super::LinearProgram;
use crate::market_data::{Offer, Purpose, TransitLimit};
use crate::network::{connected_components, edge_cut, DirectedEdge, EdgeCut, NetworkError, NetworkTopology, ZoneId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("empty hour: no offers to clear")]
    EmptyHour,
    #[error("limit DA={0} A={1} has no edge")]
    LimitOnNonEdge(String, String),
    #[error("negative limit on {0}")]
    NegativeLimit(String),
    #[error("offer {0} has a zone outside the topology")]
    OfferZone(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// The clearing program of one hour together with the bookkeeping needed to
/// read prices and flows back out of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearingLp {
    pub lp: LinearProgram,
    /// Directed link of each `<=` row.
    pub row_edges: Vec<DirectedEdge>,
    /// Cut of each `<=` row.
    pub cuts: Vec<EdgeCut>,
    /// Zones covered by each balance row (one per connected component that
    /// holds offers).
    pub balance_zones: Vec<Vec<ZoneId>>,
}

/// One column per offer (cost `+price` for sells, `-price` for buys,
/// bounds `[0, quantity]`), one `<=` row per declared direction of every
/// link, and one balance row per connected component holding offers.
///
/// The row of `i -> j` carries `+1` on the sells and `-1` on the buys of the
/// zones on the `i` side of the link, with the declared limit as rhs. A
/// direction without a declared limit gets no row.
pub fn build_clearing_lp(
    offers: &[Offer],
    topology: &NetworkTopology,
    limits: &[TransitLimit],
) -> Result<ClearingLp, BuildError> {
    if offers.is_empty() {
        return Err(BuildError::EmptyHour);
    }
    if let Some(o) = offers.iter().find(|o| o.zone.0 >= topology.zone_count()) {
        return Err(BuildError::OfferZone(o.id));
    }
    for l in limits {
        let edge = DirectedEdge::new(l.from, l.to);
        let known = l.from.0 < topology.zone_count()
            && l.to.0 < topology.zone_count()
            && topology.has_edge(edge.undirected());
        if !known {
            let name = |z: ZoneId| {
                topology
                    .zones()
                    .get(z.0)
                    .map_or_else(|| z.to_string(), |z| z.code.clone())
            };
            return Err(BuildError::LimitOnNonEdge(name(l.from), name(l.to)));
        }
        if !(l.max_flow >= 0.0) {
            return Err(BuildError::NegativeLimit(topology.directed_label(edge)));
        }
    }

    let c = offers
        .iter()
        .map(|o| match o.purpose {
            Purpose::Sell => o.price,
            Purpose::Buy => -o.price,
        })
        .collect();
    let ub = offers.iter().map(|o| o.quantity).collect();
    let mut lp = LinearProgram::new(c, vec![0.0; offers.len()], ub);
    lp.col_tags = offers
        .iter()
        .map(|o| format!("{}#{}@{}", o.purpose.code(), o.id, topology.code(o.zone)))
        .collect();

    let mut row_edges = Vec::new();
    let mut cuts = Vec::new();
    for &edge in topology.edges() {
        for dir in [edge.forward(), edge.backward()] {
            let Some(limit) = limits.iter().find(|l| l.from == dir.from && l.to == dir.to) else {
                continue;
            };
            let cut = edge_cut(topology, dir)?;
            let row = offers
                .iter()
                .map(|o| if cut.contains(o.zone) { o.purpose.sign() } else { 0.0 })
                .collect();
            lp.add_le(row, limit.max_flow, topology.directed_label(dir));
            row_edges.push(dir);
            cuts.push(cut);
        }
    }

    let mut balance_zones = Vec::new();
    for component in connected_components(topology, &[]) {
        if !offers.iter().any(|o| component.contains(&o.zone)) {
            continue;
        }
        let row = offers
            .iter()
            .map(|o| if component.contains(&o.zone) { o.purpose.sign() } else { 0.0 })
            .collect();
        let tag = format!("balance:{}", topology.code(component[0]));
        lp.add_eq(row, 0.0, tag);
        balance_zones.push(component);
    }

    Ok(ClearingLp {
        lp,
        row_edges,
        cuts,
        balance_zones,
    })
}
