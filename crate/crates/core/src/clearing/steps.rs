//! Individual stages of the hourly clearing pipeline.

use crate::market_data::{merit_cmp, Offer, Purpose};
use crate::network::{connected_components, detect_cycles, DirectedEdge, Edge, EdgeCut, NetworkTopology, ZoneId};
use crate::QUANTITY_EPS;

use super::{ClearingConfig, ClearingError, ClearingWarning};

/// Foreign zones only report aggregated results, so their sells are priced
/// at zero and their buys at the configured cap.
pub fn apply_foreign_zone_policy(
    offers: &[Offer],
    topology: &NetworkTopology,
    config: &ClearingConfig,
) -> Vec<Offer> {
    let foreign: Vec<ZoneId> = config
        .foreign_zones
        .iter()
        .filter_map(|code| topology.find(code))
        .collect();
    offers
        .iter()
        .map(|o| {
            let mut o = o.clone();
            if foreign.contains(&o.zone) {
                o.price = match o.purpose {
                    Purpose::Sell => 0.0,
                    Purpose::Buy => config.foreign_buy_price_cap,
                };
            }
            o
        })
        .collect()
}

/// Forces every acceptance `<= threshold` to exactly zero.
pub fn snap_small_quantities(x: &[f64], threshold: f64) -> Vec<f64> {
    x.iter()
        .map(|&v| if v <= threshold { 0.0 } else { v })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Macrozones {
    pub partition: Vec<Vec<ZoneId>>,
    pub saturated: Vec<Edge>,
}

impl Macrozones {
    /// Index of the macrozone holding `zone`.
    pub fn of(&self, zone: ZoneId) -> usize {
        self.partition
            .iter()
            .position(|m| m.contains(&zone))
            .expect("partition covers every zone")
    }
}

/// A link is saturated when either of its rows carries a multiplier above
/// `tol`; macrozones are the components left after opening those links.
pub fn detect_macrozones(
    topology: &NetworkTopology,
    mu: &[f64],
    row_edges: &[DirectedEdge],
    tol: f64,
) -> Macrozones {
    let mut saturated: Vec<Edge> = row_edges
        .iter()
        .zip(mu)
        .filter(|(_, m)| m.abs() > tol)
        .map(|(e, _)| e.undirected())
        .collect();
    saturated.sort();
    saturated.dedup();
    Macrozones {
        partition: connected_components(topology, &saturated),
        saturated,
    }
}

/// Offer indices of one side of one macrozone in merit order.
fn merit_side(offers: &[Offer], zones: &[ZoneId], purpose: Purpose) -> Vec<usize> {
    let mut side: Vec<usize> = (0..offers.len())
        .filter(|&k| offers[k].purpose == purpose && zones.contains(&offers[k].zone))
        .collect();
    side.sort_by(|&i, &j| merit_cmp(purpose, &offers[i], &offers[j]));
    side
}

/// Re-deals each macrozone's accepted volume, side by side, along the merit
/// order: offers are filled completely until the volume runs out, leaving
/// at most one partial offer per side.
pub fn regularize_acceptances(x: &[f64], offers: &[Offer], macrozones: &[Vec<ZoneId>]) -> Vec<f64> {
    let mut out = x.to_vec();
    for zones in macrozones {
        for purpose in [Purpose::Sell, Purpose::Buy] {
            let order = merit_side(offers, zones, purpose);
            let mut remaining: f64 = order.iter().map(|&k| x[k]).sum();
            for k in order {
                let q = offers[k].quantity;
                if remaining <= QUANTITY_EPS {
                    out[k] = 0.0;
                } else if remaining >= q - QUANTITY_EPS {
                    out[k] = q;
                    remaining -= q;
                } else {
                    out[k] = remaining;
                    remaining = 0.0;
                }
            }
        }
    }
    out
}

/// Whether, inside every macrozone, accepted sells and buys form a prefix of
/// their merit order with at most one partial offer per side.
pub fn is_prefix_shaped(x: &[f64], offers: &[Offer], macrozones: &[Vec<ZoneId>]) -> bool {
    const TOL: f64 = 1e-9;
    macrozones.iter().all(|zones| {
        [Purpose::Sell, Purpose::Buy].iter().all(|&purpose| {
            let mut seen_short = false;
            merit_side(offers, zones, purpose).into_iter().all(|k| {
                let (v, q) = (x[k], offers[k].quantity);
                if seen_short {
                    v <= TOL
                } else {
                    if v < q - TOL {
                        seen_short = true;
                    }
                    true
                }
            })
        })
    })
}

/// Each macrozone is priced at its highest-priced accepted sell. A
/// macrozone without accepted sells gets 0 and a warning.
pub fn compute_zonal_prices_marginal(
    x: &[f64],
    offers: &[Offer],
    macrozones: &[Vec<ZoneId>],
    zone_count: usize,
) -> (Vec<f64>, Vec<ClearingWarning>) {
    let mut prices = vec![0.0; zone_count];
    let mut warnings = Vec::new();
    for (index, zones) in macrozones.iter().enumerate() {
        let marginal = offers
            .iter()
            .zip(x)
            .filter(|(o, &v)| o.purpose == Purpose::Sell && v > 0.0 && zones.contains(&o.zone))
            .map(|(o, _)| o.price)
            .max_by(f64::total_cmp);
        let price = marginal.unwrap_or_else(|| {
            warnings.push(ClearingWarning::NoAcceptedSell { macrozone: index });
            0.0
        });
        for z in zones {
            prices[z.0] = price;
        }
    }
    (prices, warnings)
}

/// `ρ_z = λ − Σ_r μ_r·[z on the cut side of r]`, with `λ` taken from the
/// balance row of `z`'s component (0 for components without offers).
pub fn compute_zonal_prices_dual(
    zone_count: usize,
    lambda: &[f64],
    balance_zones: &[Vec<ZoneId>],
    mu: &[f64],
    cuts: &[EdgeCut],
) -> Vec<f64> {
    let mut prices = vec![0.0; zone_count];
    for (l, zones) in lambda.iter().zip(balance_zones) {
        for z in zones {
            prices[z.0] = *l;
        }
    }
    for (m, cut) in mu.iter().zip(cuts) {
        for (z, p) in prices.iter_mut().enumerate() {
            if cut.side_membership[z] {
                *p -= m;
            }
        }
    }
    prices
}

/// `Tr = A·x`, one value per `<=` row.
pub fn compute_transits(a_ub: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    crate::lp::mat_vec(a_ub, x)
}

/// Accepted sells minus accepted buys per zone.
pub fn net_injections(offers: &[Offer], x: &[f64], zone_count: usize) -> Vec<f64> {
    let mut inj = vec![0.0; zone_count];
    for (o, v) in offers.iter().zip(x) {
        inj[o.zone.0] += o.purpose.sign() * v;
    }
    inj
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFlow {
    pub from: ZoneId,
    pub to: ZoneId,
    pub flow: f64,
}

/// Link flows from zonal balances alone: `opened_edge` carries nothing and
/// the rest of the network, which must then be a forest, is solved by
/// peeling leaves and pushing their net injection to the neighbour.
///
/// Returns one flow per link of `topology` oriented from the lower to the
/// higher zone index.
pub fn compute_transits_by_balance(
    topology: &NetworkTopology,
    injections: &[f64],
    opened_edge: Option<Edge>,
) -> Result<Vec<EdgeFlow>, ClearingError> {
    let forest = match opened_edge {
        Some(e) => topology.without_edge(e)?,
        None => topology.clone(),
    };
    if let Some(e) = detect_cycles(&forest).first() {
        return Err(crate::network::NetworkError::UnsupportedCycle(
            forest.code(e.a).to_string(),
            forest.code(e.b).to_string(),
        )
        .into());
    }
    let n = forest.zone_count();
    let edges = forest.edges();
    let mut degree = vec![0usize; n];
    for e in edges {
        degree[e.a.0] += 1;
        degree[e.b.0] += 1;
    }
    let mut residual = injections.to_vec();
    let mut flow: Vec<Option<f64>> = vec![None; edges.len()];
    let mut leaves: Vec<usize> = (0..n).filter(|&z| degree[z] == 1).collect();
    while let Some(u) = leaves.pop() {
        if degree[u] != 1 {
            continue;
        }
        let (k, e) = edges
            .iter()
            .enumerate()
            .find(|(k, e)| flow[*k].is_none() && (e.a.0 == u || e.b.0 == u))
            .expect("leaf has one open link");
        let v = if e.a.0 == u { e.b.0 } else { e.a.0 };
        // flow oriented a -> b
        flow[k] = Some(if e.a.0 == u { residual[u] } else { 0.0 - residual[u] });
        residual[v] += residual[u];
        residual[u] = 0.0;
        degree[u] = 0;
        degree[v] -= 1;
        if degree[v] == 1 {
            leaves.push(v);
        }
    }
    if let Some((z, r)) = residual
        .iter()
        .enumerate()
        .find(|(_, r)| r.abs() > 1e-6)
    {
        return Err(ClearingError::Imbalance {
            zone: topology.code(ZoneId(z)).to_string(),
            residual: *r,
        });
    }
    Ok(topology
        .edges()
        .iter()
        .map(|&e| {
            let value = forest
                .edges()
                .iter()
                .position(|&f| f == e)
                .and_then(|k| flow[k])
                .unwrap_or(0.0);
            EdgeFlow {
                from: e.a,
                to: e.b,
                flow: value,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: ZoneId = ZoneId(0);
    const B: ZoneId = ZoneId(1);
    const C: ZoneId = ZoneId(2);

    fn offer(id: usize, purpose: Purpose, zone: ZoneId, quantity: f64, price: f64) -> Offer {
        Offer {
            id,
            purpose,
            hour: 1,
            zone,
            quantity,
            price,
        }
    }

    #[test]
    fn foreign_policy() {
        let t = NetworkTopology::new(&["BSP", "XFRA", "NORD"], &[("BSP", "NORD"), ("XFRA", "NORD")])
            .unwrap();
        let offers = vec![
            offer(0, Purpose::Sell, A, 100.0, 60.02),
            offer(1, Purpose::Buy, B, 50.0, 12.0),
            offer(2, Purpose::Sell, C, 10.0, 25.0),
        ];
        let out = apply_foreign_zone_policy(&offers, &t, &ClearingConfig::default());
        assert_eq!(out[0].price, 0.0);
        assert_eq!(out[0].quantity, 100.0);
        assert_eq!(out[1].price, 3000.0);
        assert_eq!(out[2], offers[2]);
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_small_quantities(&[1e-8, 5.0], 1e-4), vec![0.0, 5.0]);
        assert_eq!(
            snap_small_quantities(&[1e-4, 1e-4 + 1e-9], 1e-4),
            vec![0.0, 1e-4 + 1e-9]
        );
        assert_eq!(snap_small_quantities(&[0.0, 0.0], 1e-4), vec![0.0, 0.0]);
    }

    #[test]
    fn macrozones_from_duals() {
        let t = NetworkTopology::new(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        let rows = [
            DirectedEdge::new(A, B),
            DirectedEdge::new(B, A),
            DirectedEdge::new(B, C),
        ];
        let none = detect_macrozones(&t, &[0.0, 0.0, 1e-9], &rows, 1e-7);
        assert_eq!(none.partition, vec![vec![A, B, C]]);
        assert!(none.saturated.is_empty());
        let split = detect_macrozones(&t, &[0.0, 0.0, 4.0], &rows, 1e-7);
        assert_eq!(split.partition, vec![vec![A, B], vec![C]]);
        assert_eq!(split.saturated, vec![Edge::new(B, C)]);
        assert_eq!(split.of(C), 1);
    }

    #[test]
    fn regularize_refills_merit_order() {
        let offers = vec![
            offer(0, Purpose::Sell, A, 20.0, 10.0),
            offer(1, Purpose::Sell, A, 20.0, 30.0),
        ];
        let mz = vec![vec![A]];
        assert_eq!(
            regularize_acceptances(&[17.0, 13.0], &offers, &mz),
            vec![20.0, 10.0]
        );
        assert_eq!(
            regularize_acceptances(&[20.0, 10.0], &offers, &mz),
            vec![20.0, 10.0]
        );
        assert_eq!(regularize_acceptances(&[0.0, 0.0], &offers, &mz), vec![0.0, 0.0]);
        assert!(!is_prefix_shaped(&[17.0, 13.0], &offers, &mz));
        assert!(is_prefix_shaped(&[20.0, 10.0], &offers, &mz));
    }

    #[test]
    fn regularize_buys_and_ties() {
        let offers = vec![
            offer(0, Purpose::Buy, A, 5.0, 40.0),
            offer(1, Purpose::Buy, A, 5.0, 50.0),
            offer(2, Purpose::Sell, A, 5.0, 10.0),
            offer(3, Purpose::Sell, A, 5.0, 10.0),
        ];
        let out = regularize_acceptances(&[3.0, 3.0, 3.0, 3.0], &offers, &[vec![A]]);
        assert_eq!(out, vec![1.0, 5.0, 5.0, 1.0]);
    }

    #[test]
    fn marginal_prices() {
        let offers = vec![
            offer(0, Purpose::Sell, A, 5.0, 10.0),
            offer(1, Purpose::Sell, A, 5.0, 30.0),
            offer(2, Purpose::Sell, A, 5.0, 45.0),
            offer(3, Purpose::Buy, B, 5.0, 45.0),
        ];
        let (p, w) = compute_zonal_prices_marginal(
            &[5.0, 2.0, 0.0, 7.0],
            &offers,
            &[vec![A], vec![B]],
            2,
        );
        assert_eq!(p, vec![30.0, 0.0]);
        assert_eq!(w, vec![ClearingWarning::NoAcceptedSell { macrozone: 1 }]);
    }

    #[test]
    fn dual_prices_telescope_over_cut() {
        let cuts = vec![
            EdgeCut {
                edge: DirectedEdge::new(A, B),
                side_membership: vec![true, false],
            },
            EdgeCut {
                edge: DirectedEdge::new(B, A),
                side_membership: vec![false, true],
            },
        ];
        let p = compute_zonal_prices_dual(2, &[30.0], &[vec![A, B]], &[20.0, 0.0], &cuts);
        assert_eq!(p, vec![10.0, 30.0]);
        let flat = compute_zonal_prices_dual(2, &[30.0], &[vec![A, B]], &[0.0, 0.0], &cuts);
        assert_eq!(flat, vec![30.0, 30.0]);
    }

    #[test]
    fn balance_transits_on_path() {
        let t = NetworkTopology::new(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        let flows = compute_transits_by_balance(&t, &[10.0, 0.0, -10.0], None).unwrap();
        assert_eq!(flows.iter().map(|f| f.flow).collect::<Vec<_>>(), vec![10.0, 10.0]);
        let zero = compute_transits_by_balance(&t, &[0.0; 3], None).unwrap();
        assert!(zero.iter().all(|f| f.flow == 0.0));
        assert!(matches!(
            compute_transits_by_balance(&t, &[1.0, 0.0, 0.0], None),
            Err(ClearingError::Imbalance { .. })
        ));
    }

    #[test]
    fn balance_transits_on_opened_ring() {
        let t = NetworkTopology::new(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]).unwrap();
        let flows = compute_transits_by_balance(&t, &[5.0, 0.0, -5.0], Some(Edge::new(C, A))).unwrap();
        // edges in index order: A-B, A-C, B-C
        assert_eq!(flows[0], EdgeFlow { from: A, to: B, flow: 5.0 });
        assert_eq!(flows[1], EdgeFlow { from: A, to: C, flow: 0.0 });
        assert_eq!(flows[2], EdgeFlow { from: B, to: C, flow: 5.0 });
        assert!(compute_transits_by_balance(&t, &[0.0; 3], None).is_err());
    }
}
