//! Day-ahead zonal electricity market clearing.
//!
//! Sell and buy offers for one hour are cleared by a welfare-maximizing
//! linear program over a tree of bidding zones with directional transit
//! limits. Saturated links split the network into macrozones, each with its
//! own price.
//!
//! ```
//! use mgp_clearing::clearing::{clear_hour, ClearingConfig};
//! use mgp_clearing::market_data::{Offer, Purpose};
//! use mgp_clearing::network::{NetworkTopology, ZoneId};
//!
//! let topology = NetworkTopology::new::<&str>(&["A"], &[]).unwrap();
//! let offer = |id, purpose, quantity, price| Offer { id, purpose, hour: 1, zone: ZoneId(0), quantity, price };
//! let offers = [offer(0, Purpose::Sell, 10.0, 20.0), offer(1, Purpose::Buy, 10.0, 40.0)];
//! let result = clear_hour(&offers, &topology, &[], 1, &ClearingConfig::default()).unwrap();
//! assert_eq!(result.prices(), &[20.0]);
//! assert_eq!(result.welfare, 200.0);
//! ```

pub mod cli;
pub mod clearing;
pub mod lp;
pub mod market_data;
pub mod network;
pub mod synthetic;

/// Quantities below this are treated as zero when walking merit orders.
pub const QUANTITY_EPS: f64 = 1e-9;

pub use clearing::{clear_hour, ClearingConfig, ClearingError, ClearingResult, PriceMode};
pub use market_data::{Offer, Purpose, TransitLimit};
pub use network::{NetworkTopology, ZoneId};
