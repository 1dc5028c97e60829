//! Serializable views of a clearing result.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::ClearingResult;
use crate::network::NetworkTopology;

/// Clears the sign of negative zero so it never shows up as `-0.0`.
fn tidy(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePrice {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub marginal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitRecord {
    pub from: String,
    pub to: String,
    pub flow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedRecord {
    pub offer_id: usize,
    pub quantity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourRecord {
    pub hour: u8,
    pub welfare: f64,
    pub macrozones: Vec<Vec<String>>,
    pub prices: BTreeMap<String, ZonePrice>,
    pub transits: Vec<TransitRecord>,
    pub saturated_edges: Vec<[String; 2]>,
    pub accepted: Vec<AcceptedRecord>,
}

impl HourRecord {
    pub fn new(result: &ClearingResult, topology: &NetworkTopology) -> Self {
        let code = |z| topology.code(z).to_string();
        HourRecord {
            hour: result.hour,
            welfare: tidy(result.welfare),
            macrozones: result
                .macrozones
                .iter()
                .map(|m| m.iter().map(|&z| code(z)).collect())
                .collect(),
            prices: topology
                .zones()
                .iter()
                .map(|z| {
                    let price = ZonePrice {
                        marginal: result.prices_marginal.as_ref().map(|p| tidy(p[z.id.0])),
                        dual: result.prices_dual.as_ref().map(|p| tidy(p[z.id.0])),
                    };
                    (z.code.clone(), price)
                })
                .collect(),
            transits: result
                .transits
                .iter()
                .map(|t| TransitRecord {
                    from: code(t.from),
                    to: code(t.to),
                    flow: tidy(t.flow),
                })
                .collect(),
            saturated_edges: result
                .saturated_edges
                .iter()
                .map(|e| [code(e.a), code(e.b)])
                .collect(),
            accepted: result
                .accepted
                .iter()
                .map(|a| AcceptedRecord {
                    offer_id: a.offer_id,
                    quantity: tidy(a.quantity),
                })
                .collect(),
        }
    }

    /// Pretty JSON array of `records` with a trailing newline.
    pub fn write_json<W: Write>(records: &[HourRecord], mut out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut out, records)?;
        out.write_all(b"\n")
    }
}

/// `hour,zone,macrozone,price_marginal,price_dual`, zones grouped by
/// macrozone. A price that was not computed is left empty.
pub fn write_price_table<W: Write>(records: &[HourRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hour", "zone", "macrozone", "price_marginal", "price_dual"])?;
    let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        for (m, zones) in r.macrozones.iter().enumerate() {
            for zone in zones {
                let p = r.prices.get(zone).cloned().unwrap_or(ZonePrice {
                    marginal: None,
                    dual: None,
                });
                w.write_record([
                    r.hour.to_string(),
                    zone.clone(),
                    m.to_string(),
                    fmt(p.marginal),
                    fmt(p.dual),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
