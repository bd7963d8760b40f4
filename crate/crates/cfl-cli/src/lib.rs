//! Command-line front end: exact rate reports, labeled transmission
//! schedules, all-demands verification, and end-to-end simulation.
//!
//! All user-facing indices are 1-based, demands are comma-separated file
//! indices, and identical arguments (including the seed) always produce
//! byte-identical output.

use std::error::Error;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cfl_core::{
    build_ec_schedule, build_gic_instance, cfl_deliver, cfl_place, constructive_subspace,
    end_to_end_sim, independence_number_below, min_rank_brute_force, min_rank_closed_form,
    rate_report, verify_decodable, verify_subspace_in_a, CachingParams, CodeInfo, CodeTable,
    Demand, EcSchedule, Placement, RateReport, ScheduleEntry, SimConfig, SimReport,
    SubspaceCheckMode,
};

/// Largest N^K for which `verify` will sweep every demand.
pub const SWEEP_LIMIT: u128 = 100_000;

/// Largest constructed-subspace dimension checked vector by vector; larger
/// subspaces fall back to the certificate-plus-sampling check.
const EXHAUSTIVE_DIM_LIMIT: usize = 20;

#[derive(Parser, Debug)]
#[command(
    name = "cfl",
    version,
    about = "Coded-prefetch caching: rates, schedules, verification, and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn common(&self) -> &CommonArgs {
        match &self.command {
            Command::Rates(a) => &a.common,
            Command::Schedule(a) => &a.common,
            Command::Verify(a) => &a.common,
            Command::Simulate(a) => &a.common,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the per-demand rate table with exact average and peak rates.
    Rates(RatesArgs),
    /// Print the labeled transmission schedule for one demand.
    Schedule(ScheduleArgs),
    /// Check schedule optimality and decodability, by default over every demand.
    Verify(VerifyArgs),
    /// Run placement, delivery, corruption, and decoding end to end.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Number of files.
    #[arg(long)]
    pub n: usize,
    /// Number of users.
    #[arg(long)]
    pub k: usize,
    /// CSV table of best known [n, k, d] binary codes.
    #[arg(long, env = "CFL_CODE_TABLE")]
    pub code_table: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of correctable symbol errors per delivery.
    #[arg(long, default_value_t = 0)]
    pub delta: usize,
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Demanded file per user, e.g. 1,2,3.
    #[arg(long, value_delimiter = ',', required = true)]
    pub demand: Vec<usize>,
    /// Number of correctable symbol errors per delivery.
    #[arg(long, default_value_t = 0)]
    pub delta: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Restrict the check to one demand instead of sweeping all of them.
    #[arg(long, value_delimiter = ',')]
    pub demand: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Demanded file per user, e.g. 1,2,3.
    #[arg(long, value_delimiter = ',', required = true)]
    pub demand: Vec<usize>,
    /// Number of correctable symbol errors per delivery.
    #[arg(long, default_value_t = 0)]
    pub delta: usize,
    /// Payload bits per subfile (1 to 64).
    #[arg(long, default_value_t = 8)]
    pub bits: u32,
    /// Random trials to run [default: 100, or 0 with --exhaustive].
    #[arg(long)]
    pub trials: Option<u64>,
    /// Seed for payloads and error masks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sweep every error-pattern support of weight up to delta first.
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Rendered output plus whether the command's checks succeeded; failed
/// checks map to exit code 1, configuration errors to exit code 2.
#[derive(Debug)]
pub struct CommandOutput {
    pub text: String,
    pub ok: bool,
}

/// Schedule emission in serialized form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchedulePayload {
    pub files: usize,
    pub users: usize,
    pub demand: Vec<usize>,
    pub delta: usize,
    pub code: CodeInfo,
    pub transmissions: Vec<ScheduleEntry>,
}

/// Verification outcome over one or more demands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub files: usize,
    pub users: usize,
    pub demands: usize,
    pub all_passed: bool,
    pub checks: Vec<DemandCheck>,
}

/// Per-demand verification results. Oracle fields are `None` when the
/// instance exceeds that oracle's search bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemandCheck {
    pub demand: Vec<usize>,
    pub distinct_files: usize,
    pub min_rank: usize,
    pub schedule_len: usize,
    pub decodable: bool,
    pub subspace_dim: usize,
    pub subspace_in_a: bool,
    pub subspace_check: String,
    pub brute_force_min_rank: Option<usize>,
    pub independence_bounded: Option<bool>,
    pub passed: bool,
}

pub fn execute(cli: &Cli) -> Result<CommandOutput, Box<dyn Error>> {
    match &cli.command {
        Command::Rates(a) => cmd_rates(a),
        Command::Schedule(a) => cmd_schedule(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn load_table(path: &Option<PathBuf>) -> Result<CodeTable, Box<dyn Error>> {
    Ok(match path {
        Some(p) => CodeTable::load_csv(p)?,
        None => CodeTable::empty(),
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Box<dyn Error>> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_rates(args: &RatesArgs) -> Result<CommandOutput, Box<dyn Error>> {
    let params = CachingParams::new(args.common.n, args.common.k)?;
    let table = load_table(&args.common.code_table)?;
    let report = rate_report(&params, args.delta, &table);
    let text = match args.common.format {
        Format::Text => render_rates(&report, args.delta),
        Format::Json => to_json(&report)?,
        Format::Csv => report.to_csv(),
    };
    Ok(CommandOutput { text, ok: true })
}

fn render_rates(report: &RateReport, delta: usize) -> String {
    let mut text = format!(
        "rates for N={}, K={}, delta={} (M = 1/K, {} subfiles per file)\n\n",
        report.files, report.users, report.delta, report.subfiles_per_file
    );
    let header = ["Ne", "P(Ne)", "kappa", "code", "rate"].map(String::from);
    let mut rows = vec![header];
    for entry in &report.entries {
        rows.push([
            entry.ne.to_string(),
            entry.probability.to_string(),
            entry.min_rank.to_string(),
            format!(
                "[{},{},{}] {}",
                entry.code_n,
                entry.min_rank,
                2 * delta + 1,
                entry.code_origin
            ),
            entry.rate.to_string(),
        ]);
    }
    let widths: Vec<usize> = (0..5)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap())
        .collect();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        text.push_str(line.join("  ").trim_end());
        text.push('\n');
    }
    let bound = if report.average_is_upper_bound {
        " (upper bound)"
    } else {
        ""
    };
    text.push_str(&format!("\naverage rate{bound}: {}\n", report.average));
    text.push_str(&format!("peak rate: {}\n", report.peak));
    for note in &report.notes {
        text.push_str(&format!("note: {note}\n"));
    }
    text
}

fn cmd_schedule(args: &ScheduleArgs) -> Result<CommandOutput, Box<dyn Error>> {
    let params = CachingParams::new(args.common.n, args.common.k)?;
    let demand = params.demand(args.demand.clone())?;
    let table = load_table(&args.common.code_table)?;
    let placement = cfl_place(&params);
    let inner = cfl_deliver(&placement, &demand);
    let schedule = build_ec_schedule(&inner, args.delta, &table)?;
    let text = match args.common.format {
        Format::Text => schedule.text(),
        Format::Json => {
            let outer = schedule.outer();
            to_json(&SchedulePayload {
                files: params.files(),
                users: params.users(),
                demand: demand.as_slice().to_vec(),
                delta: args.delta,
                code: CodeInfo {
                    n: outer.n(),
                    k: outer.k(),
                    d: outer.d(),
                    origin: outer.origin().label().to_string(),
                },
                transmissions: schedule.entries(params.subfiles_per_file()),
            })?
        }
        Format::Csv => schedule_csv(&schedule)?,
    };
    Ok(CommandOutput { text, ok: true })
}

fn schedule_csv(schedule: &EcSchedule) -> Result<String, Box<dyn Error>> {
    let mut writer = csv::Writer::from_writer(vec![]);
    writer.write_record(["index", "label"])?;
    for (i, label) in schedule.labels().iter().enumerate() {
        writer.write_record([(i + 1).to_string().as_str(), label.as_str()])?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

fn cmd_verify(args: &VerifyArgs) -> Result<CommandOutput, Box<dyn Error>> {
    let params = CachingParams::new(args.common.n, args.common.k)?;
    let demands: Vec<Demand> = match &args.demand {
        Some(d) => vec![params.demand(d.clone())?],
        None => match (params.files() as u128).checked_pow(params.users() as u32) {
            Some(count) if count <= SWEEP_LIMIT => params.all_demands().collect(),
            _ => {
                return Err(format!(
                    "refusing to sweep all {}^{} demands; the all-demands check is limited to \
                     N^K <= {SWEEP_LIMIT}, pass --demand to check a single demand",
                    params.files(),
                    params.users()
                )
                .into())
            }
        },
    };
    let placement = cfl_place(&params);
    let checks: Vec<DemandCheck> = demands
        .iter()
        .map(|d| check_demand(&params, &placement, d))
        .collect();
    let report = VerifyReport {
        files: params.files(),
        users: params.users(),
        demands: checks.len(),
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    };
    let text = match args.common.format {
        Format::Text => render_verify(&report),
        Format::Json => to_json(&report)?,
        Format::Csv => verify_csv(&report)?,
    };
    Ok(CommandOutput {
        text,
        ok: report.all_passed,
    })
}

fn check_demand(params: &CachingParams, placement: &Placement, demand: &Demand) -> DemandCheck {
    let min_rank = min_rank_closed_form(params, demand.distinct_files());
    let schedule = cfl_deliver(placement, demand);
    let decodable = verify_decodable(&schedule, placement, demand).is_ok();
    let inst = build_gic_instance(placement, demand);
    let subspace = constructive_subspace(placement, demand);
    let mode = if subspace.dim() <= EXHAUSTIVE_DIM_LIMIT {
        SubspaceCheckMode::Exhaustive
    } else {
        SubspaceCheckMode::Sampled {
            trials: 200,
            seed: 0,
        }
    };
    let subspace_check = match mode {
        SubspaceCheckMode::Exhaustive => "exhaustive",
        SubspaceCheckMode::Sampled { .. } => "sampled",
    };
    let subspace_in_a = verify_subspace_in_a(&inst, &subspace, mode)
        .map(|r| r.holds())
        .unwrap_or(false);
    let brute_force_min_rank = min_rank_brute_force(&inst).ok();
    let independence_bounded = independence_number_below(&inst, min_rank + 1).ok();
    let passed = schedule.len() == min_rank
        && decodable
        && subspace.dim() == min_rank
        && subspace_in_a
        && brute_force_min_rank.is_none_or(|b| b == min_rank)
        && independence_bounded != Some(false);
    DemandCheck {
        demand: demand.as_slice().to_vec(),
        distinct_files: demand.distinct_files(),
        min_rank,
        schedule_len: schedule.len(),
        decodable,
        subspace_dim: subspace.dim(),
        subspace_in_a,
        subspace_check: subspace_check.to_string(),
        brute_force_min_rank,
        independence_bounded,
        passed,
    }
}

fn render_verify(report: &VerifyReport) -> String {
    let mut text = String::new();
    for check in &report.checks {
        let brute = match check.brute_force_min_rank {
            Some(b) => format!("brute-force kappa={b}"),
            None => "brute-force skipped".to_string(),
        };
        let alpha = match check.independence_bounded {
            Some(true) => "alpha bound certified",
            Some(false) => "ALPHA BOUND FAILED",
            None => "alpha enumeration skipped",
        };
        text.push_str(&format!(
            "{} d=({}): kappa={}, schedule len={} decodable={}, subspace dim={} in_A={} ({}), \
             {brute}, {alpha}\n",
            if check.passed { "ok  " } else { "FAIL" },
            join(&check.demand),
            check.min_rank,
            check.schedule_len,
            check.decodable,
            check.subspace_dim,
            check.subspace_in_a,
            check.subspace_check,
        ));
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    text.push_str(&format!(
        "\n{passed}/{} demands verified for N={}, K={}\n",
        report.demands, report.files, report.users
    ));
    text
}

fn verify_csv(report: &VerifyReport) -> Result<String, Box<dyn Error>> {
    let mut writer = csv::Writer::from_writer(vec![]);
    writer.write_record([
        "demand",
        "ne",
        "kappa",
        "schedule_len",
        "decodable",
        "subspace_dim",
        "subspace_in_a",
        "subspace_check",
        "brute_force_kappa",
        "alpha_bounded",
        "passed",
    ])?;
    for check in &report.checks {
        let option = |v: &Option<String>| v.clone().unwrap_or_else(|| "skipped".to_string());
        writer.write_record([
            join(&check.demand),
            check.distinct_files.to_string(),
            check.min_rank.to_string(),
            check.schedule_len.to_string(),
            check.decodable.to_string(),
            check.subspace_dim.to_string(),
            check.subspace_in_a.to_string(),
            check.subspace_check.clone(),
            option(&check.brute_force_min_rank.map(|b| b.to_string())),
            option(&check.independence_bounded.map(|b| b.to_string())),
            check.passed.to_string(),
        ])?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<CommandOutput, Box<dyn Error>> {
    let params = CachingParams::new(args.common.n, args.common.k)?;
    let demand = params.demand(args.demand.clone())?;
    let table = load_table(&args.common.code_table)?;
    let config = SimConfig {
        delta: args.delta,
        bits: args.bits,
        trials: args.trials.unwrap_or(if args.exhaustive { 0 } else { 100 }),
        seed: args.seed,
        exhaustive: args.exhaustive,
    };
    let report = end_to_end_sim(&params, &demand, &config, &table)?;
    let ok = report.all_succeeded();
    let text = match args.common.format {
        Format::Text => render_sim(&report),
        Format::Json => to_json(&report)?,
        Format::Csv => sim_csv(&report)?,
    };
    Ok(CommandOutput { text, ok })
}

fn render_sim(report: &SimReport) -> String {
    let mut text = format!(
        "simulation for N={}, K={}, d=({}), delta={}, bits={}, seed={}\n",
        report.files,
        report.users,
        join(&report.demand),
        report.delta,
        report.bits,
        report.seed
    );
    text.push_str(&format!(
        "code: [{},{},{}] {}\n",
        report.code.n, report.code.k, report.code.d, report.code.origin
    ));
    let swept = report.runs - report.trials;
    text.push_str(&format!(
        "runs: {} ({swept} exhaustive patterns, {} random trials)\n",
        report.runs, report.trials
    ));
    for (user, successes) in report.successes.iter().enumerate() {
        text.push_str(&format!("user {}: {successes}/{}\n", user + 1, report.runs));
    }
    text.push_str(if report.all_succeeded() {
        "result: all users recovered their files\n"
    } else {
        "result: FAILURE\n"
    });
    text
}

fn sim_csv(report: &SimReport) -> Result<String, Box<dyn Error>> {
    let mut writer = csv::Writer::from_writer(vec![]);
    writer.write_record(["user", "successes", "runs"])?;
    for (user, successes) in report.successes.iter().enumerate() {
        writer.write_record([
            (user + 1).to_string(),
            successes.to_string(),
            report.runs.to_string(),
        ])?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn demand_flag_parses_comma_separated_values() {
        let cli = Cli::try_parse_from([
            "cfl", "schedule", "--n", "3", "--k", "3", "--demand", "1,2,3", "--delta", "1",
        ])
        .unwrap();
        match cli.command {
            Command::Schedule(args) => assert_eq!(args.demand, vec![1, 2, 3]),
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn verify_refuses_oversized_sweep() {
        let cli = Cli::try_parse_from(["cfl", "verify", "--n", "2", "--k", "20"]).unwrap();
        let err = execute(&cli).unwrap_err().to_string();
        assert!(err.contains("100000"), "unexpected message: {err}");
    }

    #[test]
    fn trials_default_depends_on_exhaustive() {
        let plain =
            Cli::try_parse_from(["cfl", "simulate", "--n", "2", "--k", "2", "--demand", "1,2"])
                .unwrap();
        match plain.command {
            Command::Simulate(args) => assert_eq!(args.trials, None),
            _ => panic!("wrong subcommand"),
        }
    }
}
