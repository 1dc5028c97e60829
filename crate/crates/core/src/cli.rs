//! Command-line front end: `clear`, `curves` and `validate`.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad input.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::clearing::{clear_hour, write_price_table, ClearingConfig, ClearingError, HourRecord, PriceMode};
use crate::lp::BuildError;
use crate::market_data::{build_merit_curves, filter_by_hour, parse_limits, parse_offers, Offer, Purpose, TransitLimit};
use crate::network::{open_ring, Edge, NetworkTopology, ZoneId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mgp", about = "Zonal day-ahead market clearing", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clear the selected hours and write one result per hour.
    Clear(ClearArgs),
    /// Write the aggregated supply and demand step curves of one hour.
    Curves(CurvesArgs),
    /// Check the inputs and list every problem found.
    Validate(InputArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long)]
    pub offers: PathBuf,
    #[arg(long)]
    pub limits: Option<PathBuf>,
    /// Hours to process, e.g. `1,3,5-8`. Defaults to every hour present in
    /// the offers file.
    #[arg(long)]
    pub hours: Option<String>,
    #[arg(long)]
    pub snap_threshold: Option<f64>,
    #[arg(long)]
    pub price_cap: Option<f64>,
    #[arg(long, value_parser = parse_price_mode)]
    pub price_mode: Option<PriceMode>,
    /// Link opened when the network has a ring, as `CODE_A-CODE_B`.
    #[arg(long)]
    pub ring_open: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClearArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated zone codes; all zones when omitted.
    #[arg(long)]
    pub zones: Option<String>,
}

fn parse_price_mode(s: &str) -> Result<PriceMode, String> {
    s.parse()
}

/// Parses `1,3,5-8` into a sorted, deduplicated list of hours in 1..=24.
pub fn parse_hours(spec: &str) -> Result<Vec<u8>, String> {
    let mut hours = Vec::new();
    for part in spec.split(',').map(str::trim) {
        let parse = |s: &str| -> Result<u8, String> {
            let h: u8 = s.trim().parse().map_err(|_| format!("bad hour {s:?}"))?;
            if (1..=24).contains(&h) {
                Ok(h)
            } else {
                Err(format!("hour {h} outside 1..24"))
            }
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(format!("empty range {part:?}"));
                }
                hours.extend(a..=b);
            }
            None => hours.push(parse(part)?),
        }
    }
    hours.sort_unstable();
    hours.dedup();
    if hours.is_empty() {
        return Err("no hours selected".into());
    }
    Ok(hours)
}

/// Everything one invocation needs, resolved from the flags.
#[derive(Debug, Clone)]
pub struct RunRequest {
    pub topology_path: PathBuf,
    pub offers_path: PathBuf,
    pub limits_path: Option<PathBuf>,
    /// `None` selects every hour present in the offers file.
    pub hours: Option<Vec<u8>>,
    pub config: ClearingConfig,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

impl RunRequest {
    pub fn from_args(args: &InputArgs) -> Result<Self, String> {
        let mut config = ClearingConfig::default();
        if let Some(v) = args.snap_threshold {
            config.snap_threshold = v;
        }
        if let Some(v) = args.price_cap {
            config.foreign_buy_price_cap = v;
        }
        if let Some(v) = args.price_mode {
            config.price_mode = v;
        }
        if let Some(pair) = &args.ring_open {
            let (a, b) = pair
                .split_once('-')
                .ok_or_else(|| format!("--ring-open expects CODE_A-CODE_B, got {pair:?}"))?;
            config.ring_open_edge = Some((a.to_string(), b.to_string()));
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(RunRequest {
            topology_path: args.topology.clone(),
            offers_path: args.offers.clone(),
            limits_path: args.limits.clone(),
            hours: args.hours.as_deref().map(parse_hours).transpose()?,
            config,
            output_path: None,
            output_format: OutputFormat::Json,
        })
    }
}

struct Inputs {
    topology: NetworkTopology,
    offers: Vec<Offer>,
    limits: Vec<TransitLimit>,
}

fn open(path: &Path) -> Result<BufReader<File>, String> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn load_topology(path: &Path) -> Result<NetworkTopology, String> {
    NetworkTopology::parse(open(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_offers(path: &Path, topology: &NetworkTopology) -> Result<Vec<Offer>, String> {
    parse_offers(open(path)?, topology).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_limits(path: Option<&Path>, topology: &NetworkTopology) -> Result<Vec<TransitLimit>, String> {
    match path {
        Some(path) => parse_limits(open(path)?, topology).map_err(|e| format!("{}: {e}", path.display())),
        None => Ok(Vec::new()),
    }
}

fn load(req: &RunRequest) -> Result<Inputs, String> {
    let topology = load_topology(&req.topology_path)?;
    let offers = load_offers(&req.offers_path, &topology)?;
    let limits = load_limits(req.limits_path.as_deref(), &topology)?;
    Ok(Inputs {
        topology,
        offers,
        limits,
    })
}

fn selected_hours(req: &RunRequest, offers: &[Offer]) -> Vec<u8> {
    req.hours.clone().unwrap_or_else(|| {
        let mut hours: Vec<u8> = offers.iter().map(|o| o.hour).collect();
        hours.sort_unstable();
        hours.dedup();
        hours
    })
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new)
}

/// Clears every requested hour, writes the results and prints one summary
/// line per hour to `log`. Hours that fail are reported and left out of the
/// output.
pub fn cmd_clear<W: Write>(req: &RunRequest, log: &mut W) -> i32 {
    let inputs = match load(req) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let hours = selected_hours(req, &inputs.offers);
    if hours.is_empty() {
        eprintln!("error: {}: no offers", req.offers_path.display());
        return EXIT_INPUT;
    }
    let outcomes: Vec<(u8, Result<_, ClearingError>, f64)> = hours
        .par_iter()
        .map(|&hour| {
            let start = Instant::now();
            let r = clear_hour(&inputs.offers, &inputs.topology, &inputs.limits, hour, &req.config);
            (hour, r, start.elapsed().as_secs_f64() * 1e3)
        })
        .collect();

    let mut status = EXIT_OK;
    let mut records = Vec::new();
    for (hour, outcome, ms) in outcomes {
        match outcome {
            Ok(result) => {
                let prices = result.prices();
                let lo = prices.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = prices.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let _ = writeln!(
                    log,
                    "hour {hour:2}: {} macrozones, prices {lo:.2}..{hi:.2} EUR/MWh, {ms:.1} ms",
                    result.macrozones.len()
                );
                for w in &result.warnings {
                    eprintln!("warning: hour {hour}: {w}");
                }
                records.push(HourRecord::new(&result, &inputs.topology));
            }
            Err(e) => {
                eprintln!("error: hour {hour}: {e}");
                if let ClearingError::Solver { dump, .. } = &e {
                    let path = req
                        .output_path
                        .as_ref()
                        .map(|p| p.with_extension(format!("h{hour:02}.lp.txt")));
                    if let Some(path) = path {
                        if std::fs::write(&path, dump).is_ok() {
                            eprintln!("program written to {}", path.display());
                        }
                    }
                }
                let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_INTERNAL };
                status = status.max(code);
            }
        }
    }

    let written = match &req.output_path {
        Some(path) => create(path).and_then(|mut out| {
            match req.output_format {
                OutputFormat::Json => HourRecord::write_json(&records, &mut out)?,
                OutputFormat::Csv => write_price_table(&records, &mut out).map_err(io::Error::other)?,
            }
            out.flush()
        }),
        None => Ok(()),
    };
    if let Err(e) = written {
        eprintln!("error: writing output: {e}");
        return EXIT_INTERNAL;
    }
    status
}

/// Writes `side,cumulative_mwh,price` rows for the single selected hour:
/// supply steps first, then demand.
pub fn cmd_curves<W: Write>(req: &RunRequest, zones: Option<&str>, out: &mut W) -> i32 {
    let (topology, offers) = match load_topology(&req.topology_path)
        .and_then(|t| load_offers(&req.offers_path, &t).map(|o| (t, o)))
    {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let hour = match selected_hours(req, &offers)[..] {
        [hour] => hour,
        _ => {
            eprintln!("error: curves need exactly one hour (use --hours)");
            return EXIT_INPUT;
        }
    };
    let subset: Vec<ZoneId> = match zones {
        None => topology.zones().iter().map(|z| z.id).collect(),
        Some(list) => {
            let mut ids = Vec::new();
            for code in list.split(',').map(str::trim).filter(|c| !c.is_empty()) {
                match topology.find(code) {
                    Some(z) => ids.push(z),
                    None => {
                        eprintln!("error: unknown zone {code:?}");
                        return EXIT_INPUT;
                    }
                }
            }
            ids
        }
    };
    let (supply, demand) = build_merit_curves(&filter_by_hour(&offers, hour), &subset);
    let mut w = csv::Writer::from_writer(out);
    let rows = supply.steps.iter().map(|s| (supply.side, s)).chain(demand.steps.iter().map(|s| (demand.side, s)));
    let written = w
        .write_record(["side", "cumulative_mwh", "price"])
        .and_then(|_| {
            for (side, step) in rows {
                w.write_record([side.label().to_string(), step.cumulative.to_string(), step.price.to_string()])?;
            }
            w.flush().map_err(csv::Error::from)
        });
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: writing curves: {e}");
            EXIT_INTERNAL
        }
    }
}

/// Every problem found in the inputs, in the order checked. An unreadable
/// topology stops the checks early.
pub fn validation_findings(req: &RunRequest) -> Vec<String> {
    let mut findings = Vec::new();
    let topology = match load_topology(&req.topology_path) {
        Ok(t) => t,
        Err(e) => return vec![e],
    };
    let ring_edge = req
        .config
        .ring_open_edge
        .as_ref()
        .and_then(|(a, b)| Some(Edge::new(topology.find(a)?, topology.find(b)?)));
    if let Err(e) = open_ring(&topology, ring_edge) {
        findings.push(e.to_string());
    }
    match load_limits(req.limits_path.as_deref(), &topology) {
        Ok(limits) => {
            for l in &limits {
                if !topology.has_edge(Edge::new(l.from, l.to)) {
                    findings.push(
                        BuildError::LimitOnNonEdge(
                            topology.code(l.from).to_string(),
                            topology.code(l.to).to_string(),
                        )
                        .to_string(),
                    );
                }
            }
        }
        Err(e) => findings.push(e),
    }
    match load_offers(&req.offers_path, &topology) {
        Ok(offers) => {
            if offers.is_empty() {
                findings.push(format!("{}: no offers", req.offers_path.display()));
            }
            for hour in selected_hours(req, &offers) {
                let hour_offers = filter_by_hour(&offers, hour);
                for (purpose, name) in [(Purpose::Sell, "sell"), (Purpose::Buy, "buy")] {
                    if !hour_offers.iter().any(|o| o.purpose == purpose) {
                        findings.push(format!("hour {hour}: no {name} offers"));
                    }
                }
            }
        }
        Err(e) => findings.push(e),
    }
    findings
}

pub fn cmd_validate<W: Write>(req: &RunRequest, out: &mut W) -> i32 {
    let findings = validation_findings(req);
    for f in &findings {
        let _ = writeln!(out, "{f}");
    }
    let _ = writeln!(out, "{} findings", findings.len());
    if findings.is_empty() {
        EXIT_OK
    } else {
        EXIT_INPUT
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let input = match &cli.command {
        Command::Clear(a) => &a.input,
        Command::Curves(a) => &a.input,
        Command::Validate(a) => a,
    };
    let mut req = match RunRequest::from_args(input) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    match &cli.command {
        Command::Clear(a) => {
            req.output_path = Some(a.out.clone());
            req.output_format = a.format;
            cmd_clear(&req, &mut stdout)
        }
        Command::Curves(a) => match &a.out {
            Some(path) => match create(path) {
                Ok(mut file) => cmd_curves(&req, a.zones.as_deref(), &mut file),
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    EXIT_INTERNAL
                }
            },
            None => cmd_curves(&req, a.zones.as_deref(), &mut stdout),
        },
        Command::Validate(_) => cmd_validate(&req, &mut stdout),
    }
}
