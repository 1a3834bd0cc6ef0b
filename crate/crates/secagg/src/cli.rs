//! Argument parsing and the three subcommands.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use secagg_core::airsim::{
    build_beamformers, gen_channel, leakage_sweep, verify_alignment, verify_independence, AirsimError,
    AlignmentConfig, AlignmentPlan, Direction, Duplex,
};
use secagg_core::analysis::{sweep, NdtReport, RRule};
use secagg_core::coding::{CodingConfig, CodingError, GradientVector};
use secagg_core::protocol::{run_end_to_end, InMemoryTransport, Participation, ProtocolError, RunReport};
use secagg_core::{seed, PrimeField};

use crate::format::{ratio, sig10};
use crate::socket::SocketTransport;

/// Largest fitted leakage slope accepted as "no leakage growth".
pub const SLOPE_LIMIT: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Domain(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::UnsupportedTopology { .. } | ProtocolError::Coding(_) => CliError::Domain(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}

impl From<AirsimError> for CliError {
    fn from(e: AirsimError) -> Self {
        match e {
            AirsimError::InvalidConfig(_) | AirsimError::BadPowers => CliError::Domain(e.to_string()),
            AirsimError::TooLarge { block_len, cap } => {
                CliError::Domain(format!("refusing: T′={block_len} exceeds --tprime-cap {cap}"))
            }
            _ => CliError::Verification(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "secagg", version, about = "Multi-server secure gradient aggregation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one aggregation end to end and print a JSON run report.
    E2e(E2eArgs),
    /// Check alignment, independence and leakage; writes CSV.
    Align(AlignArgs),
    /// Tabulate delivery times, bounds and DoF; writes CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportKind {
    Memory,
    Socket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DuplexArg {
    Full,
    Half,
}

impl From<DuplexArg> for Duplex {
    fn from(d: DuplexArg) -> Self {
        match d {
            DuplexArg::Full => Duplex::Full,
            DuplexArg::Half => Duplex::Half,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Up,
    Down,
    Both,
}

impl DirectionArg {
    fn directions(self) -> &'static [Direction] {
        match self {
            DirectionArg::Up => &[Direction::Uplink],
            DirectionArg::Down => &[Direction::Downlink],
            DirectionArg::Both => &[Direction::Uplink, Direction::Downlink],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct E2eArgs {
    /// Number of users.
    #[arg(long = "M", default_value_t = 5)]
    pub users: usize,
    /// Number of servers.
    #[arg(long = "K", default_value_t = 4)]
    pub servers: usize,
    /// Number of gradient partitions [default: K-1].
    #[arg(long = "r")]
    pub partitions: Option<usize>,
    /// Field modulus (prime).
    #[arg(long = "q", default_value_t = PrimeField::MERSENNE_31)]
    pub modulus: u64,
    /// Gradient length in field elements.
    #[arg(long = "p", default_value_t = 300)]
    pub grad_len: usize,
    #[arg(long, env = "SECAGG_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Drop this many servers (the highest-indexed) before the downlink.
    #[arg(long, default_value_t = 0)]
    pub stragglers: usize,
    #[arg(long, value_enum, default_value_t = TransportKind::Memory)]
    pub transport: TransportKind,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    #[arg(long = "M", default_value_t = 3)]
    pub users: usize,
    #[arg(long = "K", default_value_t = 3)]
    pub servers: usize,
    /// Beamformer exponent order.
    #[arg(long = "n", default_value_t = 1)]
    pub order: u32,
    /// First seed.
    #[arg(long, env = "SECAGG_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Transmit powers for the leakage fit.
    #[arg(long = "P", value_delimiter = ',', default_value = "1e2,1e3,1e4,1e5,1e6")]
    pub powers: Vec<f64>,
    /// Whether servers can receive while transmitting (downlink only).
    #[arg(long, value_enum, default_value_t = DuplexArg::Half)]
    pub duplex: DuplexArg,
    #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
    pub direction: DirectionArg,
    /// Refuse block lengths above this.
    #[arg(long = "tprime-cap", default_value_t = 4096)]
    pub tprime_cap: usize,
    /// Measure leakage without the artificial noise (negative control).
    #[arg(long)]
    pub no_noise: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// User counts: comma-separated values or inclusive ranges `a..=b` / `a-b`.
    #[arg(long = "M", default_value = "3..=32")]
    pub users: String,
    /// Server counts, same syntax as --M.
    #[arg(long = "K", default_value = "2,4,8")]
    pub servers: String,
    /// Fixed partition count [default: K-1 per row].
    #[arg(long = "r")]
    pub partitions: Option<usize>,
    /// Fill the single-server baseline columns.
    #[arg(long)]
    pub single_server: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command, writing its output to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (bytes, out, verdict) = match &cli.command {
        Command::E2e(a) => {
            let (bytes, v) = cmd_e2e(a)?;
            (bytes, &a.out, v)
        }
        Command::Align(a) => {
            let (bytes, v) = cmd_align(a)?;
            (bytes, &a.out, v)
        }
        Command::Sweep(a) => (cmd_sweep(a)?, &a.out, Ok(())),
    };
    match out {
        Some(path) => fs::write(path, &bytes)?,
        None => stdout.write_all(&bytes)?,
    }
    verdict
}

#[derive(Serialize)]
struct E2eOutput<'a> {
    #[serde(flatten)]
    report: &'a RunReport,
    /// Uplink payload in units of the gradient size.
    comm_up: f64,
    comm_down: f64,
    transport: TransportKind,
}

impl Serialize for TransportKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            TransportKind::Memory => "memory",
            TransportKind::Socket => "socket",
        })
    }
}

/// End-to-end run; the verdict fails unless every user recovered the sum.
pub fn cmd_e2e(a: &E2eArgs) -> Result<(Vec<u8>, Result<(), CliError>), CliError> {
    let field = PrimeField::new(a.modulus).map_err(|e| CliError::Domain(e.to_string()))?;
    let r = a.partitions.unwrap_or(a.servers.saturating_sub(1));
    let cfg = CodingConfig::new(field, a.users, a.servers, r, a.grad_len)
        .map_err(|e: CodingError| CliError::Domain(e.to_string()))?;
    let gradients: Vec<GradientVector> = (0..a.users)
        .map(|i| GradientVector::random(i, &cfg, &mut seed::stream(a.seed, "gradients", i as u64)))
        .collect();
    let participation = Participation::Stragglers(a.stragglers);
    let run = match a.transport {
        TransportKind::Memory => run_end_to_end(&gradients, &cfg, a.seed, &participation, &mut InMemoryTransport::new())?,
        TransportKind::Socket => run_end_to_end(&gradients, &cfg, a.seed, &participation, &mut SocketTransport::new())?,
    };
    let report = &run.report;
    let output = E2eOutput { report, comm_up: report.comm_up(), comm_down: report.comm_down(), transport: a.transport };
    let mut bytes = serde_json::to_vec_pretty(&output)?;
    bytes.push(b'\n');
    let verdict = if report.ok {
        Ok(())
    } else {
        Err(CliError::Verification("a user's estimate differs from the direct sum".into()))
    };
    Ok((bytes, verdict))
}

/// One row of the alignment report.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignRow {
    pub seed: u64,
    pub users: usize,
    pub servers: usize,
    pub order: u32,
    pub direction: Direction,
    pub relation_count: usize,
    pub max_containment_residual: f64,
    pub min_sv_ratio: f64,
    /// Largest slope over the receivers of this direction.
    pub leakage_slope: f64,
    pub ok: bool,
}

pub const ALIGN_HEADER: [&str; 9] = [
    "seed",
    "M",
    "K",
    "n",
    "direction",
    "relation_count",
    "max_containment_residual",
    "min_sv_ratio",
    "leakage_slope",
];

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Uplink => "uplink",
        Direction::Downlink => "downlink",
    }
}

fn align_config(a: &AlignArgs, direction: Direction, noise_user: usize) -> Result<(AlignmentConfig, usize), CliError> {
    let cfg = AlignmentConfig::new(direction, a.users, a.servers, a.order, noise_user, a.duplex.into())?;
    let t = cfg.checked_block_len(a.tprime_cap)?;
    Ok((cfg, t))
}

/// Builds and checks one channel realization. The noise user rotates with the seed.
pub fn align_once(a: &AlignArgs, seed: u64, direction: Direction) -> Result<AlignRow, CliError> {
    let (cfg, t) = align_config(a, direction, (seed % a.users as u64) as usize)?;
    let plan = AlignmentPlan::new(cfg);
    let channel = gen_channel(direction, t, a.users, a.servers, seed);
    let bf = build_beamformers(&plan, &channel, seed)?;
    let alignment = verify_alignment(&plan, &bf, &channel);
    let rank = verify_independence(&plan, &bf, &channel)?;
    let mut slope = f64::NEG_INFINITY;
    for group in &plan.groups {
        let sweep = leakage_sweep(&plan, &bf, &channel, group.target, &a.powers, !a.no_noise)?;
        slope = slope.max(sweep.slope);
    }
    Ok(AlignRow {
        seed,
        users: a.users,
        servers: a.servers,
        order: a.order,
        direction,
        relation_count: alignment.relation_count,
        max_containment_residual: alignment.max_residual,
        min_sv_ratio: rank.min_ratio,
        leakage_slope: slope,
        ok: alignment.holds() && rank.full_rank() && slope <= SLOPE_LIMIT,
    })
}

/// Alignment, rank and leakage over `--seeds` realizations per direction.
pub fn cmd_align(a: &AlignArgs) -> Result<(Vec<u8>, Result<(), CliError>), CliError> {
    // refuse oversized blocks before any allocation
    for &direction in a.direction.directions() {
        align_config(a, direction, 0)?;
    }
    let jobs: Vec<(u64, Direction)> = (a.seed..a.seed + a.seeds)
        .flat_map(|s| a.direction.directions().iter().map(move |&d| (s, d)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, d)| align_once(a, s, d))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ALIGN_HEADER)?;
    for row in &rows {
        w.write_record([
            row.seed.to_string(),
            row.users.to_string(),
            row.servers.to_string(),
            row.order.to_string(),
            direction_name(row.direction).to_owned(),
            row.relation_count.to_string(),
            sig10(row.max_containment_residual),
            sig10(row.min_sv_ratio),
            sig10(row.leakage_slope),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    let failed = rows.iter().filter(|r| !r.ok).count();
    let verdict = if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{failed} of {} rows failed", rows.len())))
    };
    Ok((bytes, verdict))
}

pub const SWEEP_HEADER: [&str; 15] = [
    "M", "K", "r", "ndt_up", "ndt_down", "ndt_up_lb", "ndt_down_lb", "gap_up", "gap_down", "dof_up", "dof_down",
    "single_up", "single_down", "comm_up", "comm_down",
];

/// Parses `3..=32`, `3-32`, `2,4,8` or any comma-separated mix; empty means none.
pub fn parse_list(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse list {s:?}"));
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let range = item.split_once("..=").or_else(|| item.split_once('-'));
        match range {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().map_err(|_| bad())?;
                let hi: usize = hi.trim().parse().map_err(|_| bad())?;
                out.extend(lo..=hi);
            }
            None => out.push(item.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

pub fn sweep_rows(a: &SweepArgs) -> Result<Vec<NdtReport>, CliError> {
    let ms = parse_list(&a.users)?;
    let ks = parse_list(&a.servers)?;
    let rule = a.partitions.map_or(RRule::KMinusOne, RRule::Fixed);
    // one cell per (M, K), evaluated in parallel but kept in M-major order
    Ok(ms.par_iter().flat_map_iter(|&m| sweep(&[m], &ks, rule)).collect())
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<Vec<u8>, CliError> {
    let rows = sweep_rows(a)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for row in &rows {
        let (single_up, single_down) =
            if a.single_server { (ratio(row.single_up), ratio(row.single_down)) } else { (String::new(), String::new()) };
        w.write_record([
            row.users.to_string(),
            row.servers.to_string(),
            row.partitions.to_string(),
            ratio(row.ndt_up),
            ratio(row.ndt_down),
            ratio(row.ndt_up_lb),
            ratio(row.ndt_down_lb),
            ratio(row.gap_up),
            ratio(row.gap_down),
            ratio(row.dof_up),
            ratio(row.dof_down),
            single_up,
            single_down,
            ratio(row.comm_up),
            ratio(row.comm_down),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("3..=5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_list("2,4, 8").unwrap(), vec![2, 4, 8]);
        assert_eq!(parse_list("3-4,7").unwrap(), vec![3, 4, 7]);
        assert!(parse_list("").unwrap().is_empty());
        assert!(parse_list("x").is_err());
    }

    #[test]
    fn arguments_are_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
