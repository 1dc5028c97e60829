//! Offer and transit-limit records, plus merit-order curves.

use std::io::{Read, Write};

use thiserror::Error;

use crate::network::{NetworkTopology, ZoneId};
use crate::QUANTITY_EPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Sell,
    Buy,
}

impl Purpose {
    /// Sign used in the energy balance: sells inject, buys withdraw.
    pub fn sign(self) -> f64 {
        match self {
            Purpose::Sell => 1.0,
            Purpose::Buy => -1.0,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Purpose::Sell => "OFF",
            Purpose::Buy => "BID",
        }
    }
}

/// One hourly sell or buy bid. `id` is the ordinal of the record in its file.
#[derive(Debug, Clone, PartialEq)]
pub struct Offer {
    pub id: usize,
    pub purpose: Purpose,
    pub hour: u8,
    pub zone: ZoneId,
    pub quantity: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitLimit {
    pub from: ZoneId,
    pub to: ZoneId,
    pub max_flow: f64,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("bad header: expected {expected}, found {found}")]
    Header { expected: String, found: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

const OFFER_HEADER: [&str; 5] = [
    "CD_PURPOSE",
    "N_INTERVAL",
    "CD_ZONE",
    "N_QUANTITY",
    "N_ENERGY_PRICE",
];
const LIMIT_HEADER: [&str; 3] = ["DA", "A", "LIMITE_TRANSITO"];

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), ParseError> {
    let found = rdr.headers()?;
    if found.iter().ne(expected.iter().copied()) {
        return Err(ParseError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

fn non_negative(field: &str, what: &str, row: usize) -> Result<f64, ParseError> {
    let err = |message: String| ParseError::Row { row, message };
    let value: f64 = field
        .parse()
        .map_err(|_| err(format!("malformed {what} {field:?}")))?;
    if !value.is_finite() {
        return Err(err(format!("malformed {what} {field:?}")));
    }
    if value < 0.0 {
        return Err(err(format!("negative {what} {value}")));
    }
    Ok(value)
}

fn zone(topology: &NetworkTopology, code: &str, row: usize) -> Result<ZoneId, ParseError> {
    topology.find(code).ok_or_else(|| ParseError::Row {
        row,
        message: format!("unknown zone {code:?}"),
    })
}

/// Reads an offers CSV (`CD_PURPOSE,N_INTERVAL,CD_ZONE,N_QUANTITY,N_ENERGY_PRICE`).
/// Row numbers in errors are file line numbers.
pub fn parse_offers<R: Read>(input: R, topology: &NetworkTopology) -> Result<Vec<Offer>, ParseError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &OFFER_HEADER)?;
    let mut offers = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let err = |message: String| ParseError::Row { row, message };
        if record.len() != OFFER_HEADER.len() {
            return Err(err(format!("expected 5 fields, found {}", record.len())));
        }
        let purpose = match &record[0] {
            "OFF" => Purpose::Sell,
            "BID" => Purpose::Buy,
            other => return Err(err(format!("unknown purpose {other:?}"))),
        };
        let hour: u8 = record[1]
            .parse()
            .map_err(|_| err(format!("malformed hour {:?}", &record[1])))?;
        if !(1..=24).contains(&hour) {
            return Err(err(format!("hour {hour} outside 1..24")));
        }
        offers.push(Offer {
            id: offers.len(),
            purpose,
            hour,
            zone: zone(topology, &record[2], row)?,
            quantity: non_negative(&record[3], "quantity", row)?,
            price: non_negative(&record[4], "price", row)?,
        });
    }
    Ok(offers)
}

/// Writes offers back in the input format; numbers use the shortest
/// representation that round-trips.
pub fn write_offers<W: Write>(
    output: W,
    offers: &[Offer],
    topology: &NetworkTopology,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(OFFER_HEADER)?;
    for o in offers {
        w.write_record([
            o.purpose.code().to_string(),
            o.hour.to_string(),
            topology.code(o.zone).to_string(),
            o.quantity.to_string(),
            o.price.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a transit-limit CSV (`DA,A,LIMITE_TRANSITO`). Whether a pair is an
/// actual link is checked when the program is assembled.
pub fn parse_limits<R: Read>(
    input: R,
    topology: &NetworkTopology,
) -> Result<Vec<TransitLimit>, ParseError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &LIMIT_HEADER)?;
    let mut limits: Vec<TransitLimit> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != LIMIT_HEADER.len() {
            return Err(ParseError::Row {
                row,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let from = zone(topology, &record[0], row)?;
        let to = zone(topology, &record[1], row)?;
        let max_flow = non_negative(&record[2], "limit", row)?;
        if limits.iter().any(|l| l.from == from && l.to == to) {
            return Err(ParseError::Row {
                row,
                message: format!("duplicate limit {}->{}", &record[0], &record[1]),
            });
        }
        limits.push(TransitLimit { from, to, max_flow });
    }
    Ok(limits)
}

pub fn write_limits<W: Write>(
    output: W,
    limits: &[TransitLimit],
    topology: &NetworkTopology,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(LIMIT_HEADER)?;
    for l in limits {
        w.write_record([
            topology.code(l.from).to_string(),
            topology.code(l.to).to_string(),
            l.max_flow.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn filter_by_hour(offers: &[Offer], hour: u8) -> Vec<Offer> {
    offers.iter().filter(|o| o.hour == hour).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSide {
    Supply,
    Demand,
}

impl CurveSide {
    pub fn label(self) -> &'static str {
        match self {
            CurveSide::Supply => "supply",
            CurveSide::Demand => "demand",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritStep {
    pub cumulative: f64,
    pub price: f64,
}

/// Stacked offers of one side: each step ends at `cumulative` MWh and is
/// priced at `price` between the previous breakpoint and its own.
#[derive(Debug, Clone, PartialEq)]
pub struct MeritCurve {
    pub side: CurveSide,
    pub steps: Vec<MeritStep>,
}

impl MeritCurve {
    pub fn total(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative)
    }

    /// Integral of the step price from 0 to `volume`.
    pub fn area(&self, volume: f64) -> f64 {
        let mut area = 0.0;
        let mut prev = 0.0;
        for s in &self.steps {
            if volume <= prev {
                break;
            }
            area += (s.cumulative.min(volume) - prev) * s.price;
            prev = s.cumulative;
        }
        area
    }
}

/// Supply stacks sells by (price asc, id asc); demand stacks buys by
/// (price desc, id asc). Zero-quantity offers add no step.
pub fn build_merit_curves(offers: &[Offer], zones: &[ZoneId]) -> (MeritCurve, MeritCurve) {
    let pick = |purpose: Purpose| {
        let mut v: Vec<&Offer> = offers
            .iter()
            .filter(|o| o.purpose == purpose && zones.contains(&o.zone) && o.quantity > 0.0)
            .collect();
        sort_merit_order(&mut v, purpose);
        let mut cumulative = 0.0;
        v.into_iter()
            .map(|o| {
                cumulative += o.quantity;
                MeritStep {
                    cumulative,
                    price: o.price,
                }
            })
            .collect()
    };
    (
        MeritCurve {
            side: CurveSide::Supply,
            steps: pick(Purpose::Sell),
        },
        MeritCurve {
            side: CurveSide::Demand,
            steps: pick(Purpose::Buy),
        },
    )
}

/// Merit order of one side with ties broken by input ordinal.
pub(crate) fn sort_merit_order(offers: &mut [&Offer], purpose: Purpose) {
    offers.sort_by(|x, y| merit_cmp(purpose, x, y));
}

pub(crate) fn merit_cmp(purpose: Purpose, x: &Offer, y: &Offer) -> std::cmp::Ordering {
    let by_price = match purpose {
        Purpose::Sell => x.price.total_cmp(&y.price),
        Purpose::Buy => y.price.total_cmp(&x.price),
    };
    by_price.then(x.id.cmp(&y.id))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritClearing {
    pub volume: f64,
    /// Price of the last accepted supply step.
    pub price: f64,
}

/// Crosses the two step curves and clears the largest volume at which the
/// supply price does not exceed the demand price. Returns `(0, 0)` when
/// nothing trades.
pub fn merit_order_clear(supply: &MeritCurve, demand: &MeritCurve) -> MeritClearing {
    let (mut i, mut j) = (0, 0);
    let mut volume = 0.0;
    let mut price = 0.0;
    while i < supply.steps.len() && j < demand.steps.len() {
        let s = supply.steps[i];
        let d = demand.steps[j];
        if s.price > d.price + QUANTITY_EPS {
            break;
        }
        let next = s.cumulative.min(d.cumulative);
        if next > volume {
            volume = next;
            price = s.price;
        }
        if s.cumulative <= next {
            i += 1;
        }
        if d.cumulative <= next {
            j += 1;
        }
    }
    if volume <= 0.0 {
        return MeritClearing {
            volume: 0.0,
            price: 0.0,
        };
    }
    MeritClearing { volume, price }
}
