//! Hourly market clearing: filter the hour, price foreign zones, solve the
//! welfare program, then read macrozones, zonal prices and link flows off
//! the solution.

mod report;
mod steps;

use thiserror::Error;

pub use report::{write_price_table, AcceptedRecord, HourRecord, TransitRecord, ZonePrice};
pub use steps::{
    apply_foreign_zone_policy, compute_transits, compute_transits_by_balance,
    compute_zonal_prices_dual, compute_zonal_prices_marginal, detect_macrozones,
    is_prefix_shaped, net_injections, regularize_acceptances, snap_small_quantities, EdgeFlow,
    Macrozones,
};

use crate::lp::{build_clearing_lp, solve_lp, BuildError, ClearingLp, LpError, LpSolution, LpStatus};
use crate::market_data::{filter_by_hour, Offer, Purpose, TransitLimit};
use crate::network::{open_ring, Edge, NetworkError, NetworkTopology, ZoneId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceMode {
    Marginal,
    Dual,
    #[default]
    Both,
}

impl PriceMode {
    fn marginal(self) -> bool {
        matches!(self, PriceMode::Marginal | PriceMode::Both)
    }

    fn dual(self) -> bool {
        matches!(self, PriceMode::Dual | PriceMode::Both)
    }
}

impl std::str::FromStr for PriceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "marginal" => Ok(PriceMode::Marginal),
            "dual" => Ok(PriceMode::Dual),
            "both" => Ok(PriceMode::Both),
            other => Err(format!("unknown price mode {other:?} (marginal|dual|both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClearingConfig {
    /// Acceptances at or below this many MWh are forced to zero.
    pub snap_threshold: f64,
    /// A link is saturated when a multiplier on it exceeds this (EUR/MWh).
    pub saturation_dual_tol: f64,
    pub foreign_zones: Vec<String>,
    /// Price given to buys in foreign zones.
    pub foreign_buy_price_cap: f64,
    /// Link opened when the topology contains a ring.
    pub ring_open_edge: Option<(String, String)>,
    pub price_mode: PriceMode,
}

impl Default for ClearingConfig {
    fn default() -> Self {
        ClearingConfig {
            snap_threshold: 1e-4,
            saturation_dual_tol: 1e-7,
            foreign_zones: ["BSP", "XFRA", "XAUS", "MALT"].map(String::from).to_vec(),
            foreign_buy_price_cap: 3000.0,
            ring_open_edge: Some(("CNOR".into(), "CORS".into())),
            price_mode: PriceMode::Both,
        }
    }
}

impl ClearingConfig {
    pub fn validate(&self) -> Result<(), ClearingError> {
        if !(self.snap_threshold > 0.0) {
            return Err(ClearingError::Config(format!(
                "snap threshold must be positive, got {}",
                self.snap_threshold
            )));
        }
        if !(self.foreign_buy_price_cap > 0.0) {
            return Err(ClearingError::Config(format!(
                "price cap must be positive, got {}",
                self.foreign_buy_price_cap
            )));
        }
        if !(self.saturation_dual_tol >= 0.0) {
            return Err(ClearingError::Config("saturation tolerance must be >= 0".into()));
        }
        Ok(())
    }

    fn ring_edge(&self, topology: &NetworkTopology) -> Option<Edge> {
        let (a, b) = self.ring_open_edge.as_ref()?;
        Some(Edge::new(topology.find(a)?, topology.find(b)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClearingWarning {
    /// The macrozone accepted no sell offer; its marginal price is 0.
    NoAcceptedSell { macrozone: usize },
}

impl std::fmt::Display for ClearingWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClearingWarning::NoAcceptedSell { macrozone } => {
                write!(f, "macrozone {macrozone} has no accepted sell, price set to 0")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ClearingError {
    #[error("hour {hour}: no {missing} offers")]
    EmptyHour { hour: u8, missing: &'static str },
    #[error("hour {0} outside 1..24")]
    InvalidHour(u8),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("solver failed: {reason}")]
    Solver {
        reason: String,
        /// Tableau dump of the program that failed.
        dump: String,
    },
    #[error("zone {zone} left with imbalance {residual} MWh")]
    Imbalance { zone: String, residual: f64 },
}

impl ClearingError {
    /// Errors caused by the inputs rather than by the engine.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, ClearingError::Solver { .. } | ClearingError::Imbalance { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acceptance {
    pub offer_id: usize,
    pub quantity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClearingResult {
    pub hour: u8,
    /// One entry per offer of the hour, in input order.
    pub accepted: Vec<Acceptance>,
    pub macrozones: Vec<Vec<ZoneId>>,
    pub prices_marginal: Option<Vec<f64>>,
    pub prices_dual: Option<Vec<f64>>,
    /// One flow per link of the input topology, oriented from the lower to
    /// the higher zone index.
    pub transits: Vec<EdgeFlow>,
    pub welfare: f64,
    pub saturated_edges: Vec<Edge>,
    pub warnings: Vec<ClearingWarning>,
}

impl ClearingResult {
    /// Largest |dual − marginal| over all zones, when both are computed.
    pub fn max_price_gap(&self) -> Option<f64> {
        let (m, d) = (self.prices_marginal.as_ref()?, self.prices_dual.as_ref()?);
        Some(m.iter().zip(d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// The reported price series: marginal unless only duals were computed.
    pub fn prices(&self) -> &[f64] {
        self.prices_marginal
            .as_deref()
            .or(self.prices_dual.as_deref())
            .unwrap_or(&[])
    }
}

/// Everything produced along the way, for inspection and testing.
#[derive(Debug, Clone)]
pub struct ClearingTrace {
    pub result: ClearingResult,
    /// Offers of the hour after the foreign-zone policy.
    pub offers: Vec<Offer>,
    /// Network the program was built on (ring opened if needed).
    pub forest: NetworkTopology,
    pub opened_edge: Option<Edge>,
    pub program: ClearingLp,
    pub solution: LpSolution,
    pub snapped: Vec<f64>,
    pub regularized: Vec<f64>,
    pub macrozones: Macrozones,
}

pub fn clear_hour(
    offers: &[Offer],
    topology: &NetworkTopology,
    limits: &[TransitLimit],
    hour: u8,
    config: &ClearingConfig,
) -> Result<ClearingResult, ClearingError> {
    clear_hour_traced(offers, topology, limits, hour, config).map(|t| t.result)
}

pub fn clear_hour_traced(
    offers: &[Offer],
    topology: &NetworkTopology,
    limits: &[TransitLimit],
    hour: u8,
    config: &ClearingConfig,
) -> Result<ClearingTrace, ClearingError> {
    config.validate()?;
    if !(1..=24).contains(&hour) {
        return Err(ClearingError::InvalidHour(hour));
    }
    let hour_offers = filter_by_hour(offers, hour);
    for (purpose, missing) in [(Purpose::Sell, "sell"), (Purpose::Buy, "buy")] {
        if !hour_offers.iter().any(|o| o.purpose == purpose) {
            return Err(ClearingError::EmptyHour { hour, missing });
        }
    }
    let offers = apply_foreign_zone_policy(&hour_offers, topology, config);

    let (forest, opened_edge) = open_ring(topology, config.ring_edge(topology))?;
    let limits: Vec<TransitLimit> = limits
        .iter()
        .filter(|l| Some(Edge::new(l.from, l.to)) != opened_edge)
        .cloned()
        .collect();
    let program = build_clearing_lp(&offers, &forest, &limits)?;

    let dump = || {
        let mut buf = Vec::new();
        let _ = program.lp.write_tableau(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    };
    let solution = solve_lp(&program.lp).map_err(|e: LpError| ClearingError::Solver {
        reason: e.to_string(),
        dump: dump(),
    })?;
    if solution.status != LpStatus::Optimal {
        return Err(ClearingError::Solver {
            reason: format!("status {:?}", solution.status),
            dump: dump(),
        });
    }

    let n = topology.zone_count();
    let snapped = snap_small_quantities(&solution.x, config.snap_threshold);
    let macrozones = detect_macrozones(
        &forest,
        &solution.mu,
        &program.row_edges,
        config.saturation_dual_tol,
    );
    let regularized = regularize_acceptances(&snapped, &offers, &macrozones.partition);

    let mut warnings = Vec::new();
    let prices_marginal = config.price_mode.marginal().then(|| {
        let (p, w) = compute_zonal_prices_marginal(&regularized, &offers, &macrozones.partition, n);
        warnings = w;
        p
    });
    let prices_dual = config.price_mode.dual().then(|| {
        compute_zonal_prices_dual(
            n,
            &solution.lambda,
            &program.balance_zones,
            &solution.mu,
            &program.cuts,
        )
    });

    let injections = net_injections(&offers, &regularized, n);
    let transits = compute_transits_by_balance(topology, &injections, opened_edge)?;

    let result = ClearingResult {
        hour,
        accepted: offers
            .iter()
            .zip(&regularized)
            .map(|(o, &q)| Acceptance {
                offer_id: o.id,
                quantity: q,
            })
            .collect(),
        macrozones: macrozones.partition.clone(),
        prices_marginal,
        prices_dual,
        transits,
        welfare: solution.welfare(),
        saturated_edges: macrozones.saturated.clone(),
        warnings,
    };
    Ok(ClearingTrace {
        result,
        offers,
        forest,
        opened_edge,
        program,
        solution,
        snapped,
        regularized,
        macrozones,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::TransitLimit;

    const A: ZoneId = ZoneId(0);
    const B: ZoneId = ZoneId(1);

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

    fn two_zone(limit: f64) -> (NetworkTopology, Vec<Offer>, Vec<TransitLimit>) {
        let t = NetworkTopology::new(&["A", "B"], &[("A", "B")]).unwrap();
        let offers = vec![
            offer(0, Purpose::Sell, A, 20.0, 10.0),
            offer(1, Purpose::Sell, B, 20.0, 30.0),
            offer(2, Purpose::Buy, A, 5.0, 50.0),
            offer(3, Purpose::Buy, B, 25.0, 50.0),
        ];
        let limits = vec![
            TransitLimit { from: A, to: B, max_flow: limit },
            TransitLimit { from: B, to: A, max_flow: limit },
        ];
        (t, offers, limits)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }

    #[test]
    fn single_zone() {
        let t = NetworkTopology::new::<&str>(&["A"], &[]).unwrap();
        let offers = vec![
            offer(0, Purpose::Sell, A, 10.0, 20.0),
            offer(1, Purpose::Buy, A, 10.0, 40.0),
        ];
        let r = clear_hour(&offers, &t, &[], 1, &ClearingConfig::default()).unwrap();
        assert_eq!(r.accepted.iter().map(|a| a.quantity).collect::<Vec<_>>(), vec![10.0, 10.0]);
        assert_eq!(r.macrozones, vec![vec![A]]);
        assert_eq!(r.prices_marginal, Some(vec![20.0]));
        assert!(close(r.welfare, 200.0));
        assert!(r.transits.is_empty());
    }

    #[test]
    fn congested_two_zone() {
        let (t, offers, limits) = two_zone(10.0);
        let trace = clear_hour_traced(&offers, &t, &limits, 1, &ClearingConfig::default()).unwrap();
        let r = &trace.result;
        let q: Vec<f64> = r.accepted.iter().map(|a| a.quantity).collect();
        for (got, want) in q.iter().zip([15.0, 15.0, 5.0, 25.0]) {
            assert!(close(*got, want), "{q:?}");
        }
        assert_eq!(r.macrozones, vec![vec![A], vec![B]]);
        let pm = r.prices_marginal.as_ref().unwrap();
        assert!(close(pm[0], 10.0) && close(pm[1], 30.0), "{pm:?}");
        let pd = r.prices_dual.as_ref().unwrap();
        assert!(close(pd[0], 10.0) && close(pd[1], 30.0), "{pd:?}");
        assert!(close(r.transits[0].flow, 10.0));
        assert_eq!(r.saturated_edges, vec![Edge::new(A, B)]);
        assert!(close(r.welfare, 900.0));
        let row = compute_transits(&trace.program.lp.a_ub, &trace.regularized);
        assert!(close(row[0], 10.0) && close(row[1], -10.0), "{row:?}");
        assert!(close(trace.solution.mu[0], 20.0));
    }

    #[test]
    fn relaxed_two_zone() {
        let (t, offers, limits) = two_zone(20.0);
        let r = clear_hour(&offers, &t, &limits, 1, &ClearingConfig::default()).unwrap();
        let q: Vec<f64> = r.accepted.iter().map(|a| a.quantity).collect();
        for (got, want) in q.iter().zip([20.0, 10.0, 5.0, 25.0]) {
            assert!(close(*got, want), "{q:?}");
        }
        assert_eq!(r.macrozones, vec![vec![A, B]]);
        assert!(r.prices().iter().all(|&p| close(p, 30.0)));
        assert!(close(r.transits[0].flow, 15.0));
        assert!(close(r.welfare, 1000.0));
        assert!(r.saturated_edges.is_empty());
    }

    #[test]
    fn empty_hour() {
        let (t, offers, limits) = two_zone(10.0);
        let err = clear_hour(&offers, &t, &limits, 2, &ClearingConfig::default()).unwrap_err();
        assert!(matches!(err, ClearingError::EmptyHour { hour: 2, missing: "sell" }));
        assert!(err.is_input_error());
        let sells_only: Vec<Offer> = offers.into_iter().filter(|o| o.purpose == Purpose::Sell).collect();
        let err = clear_hour(&sells_only, &t, &limits, 1, &ClearingConfig::default()).unwrap_err();
        assert!(matches!(err, ClearingError::EmptyHour { missing: "buy", .. }));
    }

    #[test]
    fn price_modes() {
        let (t, offers, limits) = two_zone(10.0);
        let config = ClearingConfig {
            price_mode: PriceMode::Marginal,
            ..Default::default()
        };
        let r = clear_hour(&offers, &t, &limits, 1, &config).unwrap();
        assert!(r.prices_dual.is_none());
        assert!(r.max_price_gap().is_none());
        let r = clear_hour(&offers, &t, &limits, 1, &ClearingConfig::default()).unwrap();
        assert!(r.max_price_gap().unwrap() < 1e-9);
    }

    #[test]
    fn bad_config() {
        let (t, offers, limits) = two_zone(10.0);
        let config = ClearingConfig {
            snap_threshold: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            clear_hour(&offers, &t, &limits, 1, &config),
            Err(ClearingError::Config(_))
        ));
    }

    #[test]
    fn unsupported_cycle() {
        let t = NetworkTopology::new(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]).unwrap();
        let offers = vec![
            offer(0, Purpose::Sell, A, 1.0, 1.0),
            offer(1, Purpose::Buy, B, 1.0, 2.0),
        ];
        assert!(matches!(
            clear_hour(&offers, &t, &[], 1, &ClearingConfig::default()),
            Err(ClearingError::Network(NetworkError::UnsupportedCycle(..)))
        ));
        let config = ClearingConfig {
            ring_open_edge: Some(("C".into(), "A".into())),
            ..Default::default()
        };
        let r = clear_hour(&offers, &t, &[], 1, &config).unwrap();
        assert_eq!(r.transits.len(), 3);
    }
}
