//! End-to-end checks of the `cfl` binary: exact values in reports, golden
//! schedule output, exit codes, determinism, and JSON round-trips.

use std::process::Command;

use cfl_cli::{SchedulePayload, VerifyReport};
use cfl_core::{RateReport, SimReport};

struct Run {
    stdout: String,
    stderr: String,
    code: Option<i32>,
}

fn cfl(args: &[&str]) -> Run {
    let output = Command::new(env!("CARGO_BIN_EXE_cfl"))
        .env_remove("CFL_CODE_TABLE")
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        stdout: String::from_utf8(output.stdout).expect("stdout is utf-8"),
        stderr: String::from_utf8(output.stderr).expect("stderr is utf-8"),
        code: output.status.code(),
    }
}

#[test]
fn rates_reports_exact_average_and_peak() {
    let run = cfl(&["rates", "--n", "3", "--k", "3", "--delta", "1"]);
    assert_eq!(run.code, Some(0), "stderr: {}", run.stderr);
    assert!(
        run.stdout.contains("average rate: 86/27"),
        "stdout: {}",
        run.stdout
    );
    assert!(
        run.stdout.contains("peak rate: 10/3"),
        "stdout: {}",
        run.stdout
    );

    let run = cfl(&["rates", "--n", "3", "--k", "3"]);
    assert!(
        run.stdout.contains("average rate: 17/9"),
        "stdout: {}",
        run.stdout
    );

    let run = cfl(&["rates", "--n", "3", "--k", "4", "--delta", "0"]);
    assert_eq!(run.code, Some(0));
    assert!(
        run.stdout.contains("peak rate: 9/4"),
        "stdout: {}",
        run.stdout
    );
}

#[test]
fn rates_csv_has_the_fixed_schema() {
    let run = cfl(&["rates", "--n", "3", "--k", "3", "--format", "csv"]);
    assert_eq!(run.code, Some(0));
    assert!(
        run.stdout
            .starts_with("Ne,prob_num,prob_den,kappa,code_n,code_origin,rate_num,rate_den"),
        "stdout: {}",
        run.stdout
    );
    assert_eq!(run.stdout.lines().count(), 4);
}

#[test]
fn schedule_matches_the_golden_transcript() {
    let run = cfl(&[
        "schedule", "--n", "3", "--k", "3", "--demand", "1,2,3", "--delta", "1",
    ]);
    assert_eq!(run.code, Some(0));
    assert_eq!(
        run.stdout,
        include_str!("../../cfl-core/tests/golden/ec_3_3_d123_delta1.txt")
    );

    let run = cfl(&["schedule", "--n", "3", "--k", "4", "--demand", "1,2,3,1"]);
    assert_eq!(run.code, Some(0));
    assert_eq!(
        run.stdout,
        include_str!("../../cfl-core/tests/golden/ec_3_4_d1231_delta0.txt")
    );
}

#[test]
fn schedule_for_a_repeated_demand_ends_with_the_last_parity() {
    let run = cfl(&[
        "schedule", "--n", "3", "--k", "3", "--demand", "1,1,1", "--delta", "1",
    ]);
    assert_eq!(run.code, Some(0));
    assert_eq!(run.stdout.lines().count(), 6);
    assert!(
        run.stdout.ends_with("T_6: X_{1,2} ⊕ X_{1,3}\n"),
        "stdout: {}",
        run.stdout
    );
}

#[test]
fn verify_passes_on_small_instances() {
    let run = cfl(&["verify", "--n", "2", "--k", "2"]);
    assert_eq!(run.code, Some(0), "stderr: {}", run.stderr);
    assert!(
        run.stdout.contains("4/4 demands verified"),
        "stdout: {}",
        run.stdout
    );
    assert!(
        run.stdout.contains("brute-force kappa=2"),
        "stdout: {}",
        run.stdout
    );
}

#[test]
fn verify_restricts_to_one_demand() {
    let run = cfl(&["verify", "--n", "3", "--k", "4", "--demand", "1,2,3,1"]);
    assert_eq!(run.code, Some(0));
    assert!(
        run.stdout.contains("1/1 demands verified"),
        "stdout: {}",
        run.stdout
    );
    assert!(run.stdout.contains("kappa=27"), "stdout: {}", run.stdout);
}

#[test]
fn verify_refuses_an_oversized_sweep() {
    let run = cfl(&["verify", "--n", "2", "--k", "20"]);
    assert_eq!(run.code, Some(2));
    assert!(run.stderr.contains("100000"), "stderr: {}", run.stderr);
}

#[test]
fn simulate_exhaustive_covers_all_patterns() {
    let run = cfl(&[
        "simulate",
        "--n",
        "3",
        "--k",
        "3",
        "--demand",
        "1,2,3",
        "--delta",
        "1",
        "--exhaustive",
    ]);
    assert_eq!(run.code, Some(0), "stderr: {}", run.stderr);
    assert!(run.stdout.contains("11/11"), "stdout: {}", run.stdout);
    assert!(
        run.stdout.contains("all users recovered"),
        "stdout: {}",
        run.stdout
    );
}

#[test]
fn invalid_demands_and_params_exit_with_config_errors() {
    let run = cfl(&["schedule", "--n", "3", "--k", "3", "--demand", "1,2,9"]);
    assert_eq!(run.code, Some(2));
    assert!(!run.stderr.is_empty());

    let run = cfl(&["schedule", "--n", "3", "--k", "3", "--demand", "1,2"]);
    assert_eq!(run.code, Some(2));

    let run = cfl(&["rates", "--n", "4", "--k", "3"]);
    assert_eq!(run.code, Some(2));

    let run = cfl(&["rates", "--n", "3"]);
    assert_eq!(run.code, Some(2));
}

#[test]
fn identical_arguments_give_byte_identical_output() {
    let args = [
        "simulate", "--n", "3", "--k", "4", "--demand", "1,2,3,1", "--delta", "1", "--trials",
        "50", "--seed", "7", "--format", "json",
    ];
    let first = cfl(&args);
    let second = cfl(&args);
    assert_eq!(first.code, Some(0));
    assert_eq!(first.stdout, second.stdout);

    let report: SimReport = serde_json::from_str(&first.stdout).expect("valid sim json");
    assert_eq!(report.runs, 50);
    assert!(report.all_succeeded());
}

#[test]
fn json_output_round_trips_for_every_command() {
    let run = cfl(&[
        "rates", "--n", "3", "--k", "3", "--delta", "1", "--format", "json",
    ]);
    let rates: RateReport = serde_json::from_str(&run.stdout).expect("valid rates json");
    assert_eq!(
        serde_json::to_string_pretty(&rates).unwrap() + "\n",
        run.stdout
    );

    let run = cfl(&[
        "schedule", "--n", "3", "--k", "3", "--demand", "1,2,3", "--delta", "1", "--format", "json",
    ]);
    let schedule: SchedulePayload = serde_json::from_str(&run.stdout).expect("valid schedule json");
    assert_eq!(
        serde_json::to_string_pretty(&schedule).unwrap() + "\n",
        run.stdout
    );
    assert_eq!(schedule.transmissions.len(), 10);
    assert_eq!(schedule.code.n, 10);

    let run = cfl(&["verify", "--n", "2", "--k", "2", "--format", "json"]);
    let verify: VerifyReport = serde_json::from_str(&run.stdout).expect("valid verify json");
    assert_eq!(
        serde_json::to_string_pretty(&verify).unwrap() + "\n",
        run.stdout
    );
    assert!(verify.all_passed);

    let run = cfl(&[
        "simulate", "--n", "2", "--k", "2", "--demand", "1,2", "--delta", "1", "--trials", "5",
        "--format", "json",
    ]);
    let sim: SimReport = serde_json::from_str(&run.stdout).expect("valid simulate json");
    assert_eq!(
        serde_json::to_string_pretty(&sim).unwrap() + "\n",
        run.stdout
    );
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("schedule.txt");
    let piped = cfl(&[
        "schedule", "--n", "3", "--k", "3", "--demand", "1,2,3", "--delta", "1",
    ]);
    let filed = cfl(&[
        "schedule",
        "--n",
        "3",
        "--k",
        "3",
        "--demand",
        "1,2,3",
        "--delta",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(filed.code, Some(0));
    assert!(filed.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), piped.stdout);
}

#[test]
fn code_table_flag_steers_code_selection() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("codes.csv");
    std::fs::write(&path, "k,d,n,source\n12,3,17,test-table\n").unwrap();
    let run = cfl(&[
        "rates",
        "--n",
        "3",
        "--k",
        "4",
        "--delta",
        "1",
        "--code-table",
        path.to_str().unwrap(),
    ]);
    assert_eq!(run.code, Some(0), "stderr: {}", run.stderr);
    assert!(
        run.stdout.contains("optimal (table)"),
        "stdout: {}",
        run.stdout
    );
    assert!(
        run.stdout.contains("shortened Hamming"),
        "stdout: {}",
        run.stdout
    );
}

#[test]
fn delta_zero_exhaustive_sweep_is_the_single_clean_run() {
    let run = cfl(&[
        "simulate",
        "--n",
        "3",
        "--k",
        "3",
        "--demand",
        "1,2,3",
        "--delta",
        "0",
        "--bits",
        "8",
        "--trials",
        "0",
        "--seed",
        "1",
        "--exhaustive",
    ]);
    assert_eq!(run.code, Some(0), "stderr: {}", run.stderr);
    assert!(run.stdout.contains("1/1"), "stdout: {}", run.stdout);
}

#[test]
fn invalid_user_table_code_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weak.csv");
    std::fs::write(&path, "k,d,n,source\n12,3,12,file:gen12.txt\n").unwrap();
    let mut gen = String::new();
    for i in 0..12 {
        for j in 0..12 {
            gen.push(if i == j { '1' } else { '0' });
        }
        gen.push('\n');
    }
    std::fs::write(dir.path().join("gen12.txt"), gen).unwrap();
    let run = cfl(&[
        "simulate",
        "--n",
        "3",
        "--k",
        "4",
        "--demand",
        "1,1,1,1",
        "--delta",
        "1",
        "--exhaustive",
        "--code-table",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        run.code,
        Some(2),
        "an identity generator cannot have distance 3"
    );
    assert!(!run.stderr.is_empty());
}
