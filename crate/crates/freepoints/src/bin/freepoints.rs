//! Thin command-line front end: every subcommand collects its flags into
//! an ExperimentConfig and hands off to the library runner. All science
//! lives in the library; this file only parses arguments, prints results,
//! and maps errors to exit codes (2 config, 3 budget, 4 invariant).

use clap::{Arg, Command};
use freepoints::runner::{self, ExperimentConfig};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

/// name, one-line help, parameter flags forwarded to the runner
const SPECS: &[(&str, &str, &[&str])] = &[
    (
        "survey",
        "freeness survey over all points of height <= B",
        &["B", "epsilon", "delta", "budget"],
    ),
    (
        "count",
        "count primitive points of height <= B",
        &["B", "budget"],
    ),
    (
        "e-star",
        "shell count of skew points and its theta majorant",
        &["R", "epsilon", "budget"],
    ),
    (
        "tangent-count",
        "count (point, tangent vector) pairs up to the given bounds",
        &["B", "Y", "primitive", "delta", "budget"],
    ),
    (
        "theta",
        "theta sum of the gradient-orthogonal lattice at x",
        &["x", "R", "tol", "budget"],
    ),
    (
        "majorant",
        "skewness majorant against the exact covering indicator at x",
        &["x", "R", "tol", "budget"],
    ),
    (
        "arcs",
        "major-arc membership and Dirichlet approximation for beta",
        &["beta", "d", "R", "k", "epsilon", "eta", "C_f"],
    ),
    (
        "s-beta",
        "the Gaussian exponential sum S(beta) by two routes",
        &["x", "beta", "R", "epsilon", "tol", "budget"],
    ),
    (
        "major-integral",
        "integral of S over the major arcs at x vs its prediction",
        &["x", "R", "k", "epsilon", "eta", "C_f", "tol", "seed", "budget"],
    ),
    (
        "count-m",
        "multilinear counting function M(tau; P, Q)",
        &["tau", "P", "Q", "norm", "budget"],
    ),
    (
        "shrink",
        "shrinking-lemma ratio for a symmetric matrix",
        &["n", "P", "Q", "theta", "seed", "gamma", "norm", "budget"],
    ),
    (
        "lemma23",
        "hypothesis check for the minor-arc approximation step",
        &["m", "a", "q", "z", "M", "R"],
    ),
    (
        "c-dn",
        "the freeness exponent constant c_{d,n}, exactly",
        &["d", "n"],
    ),
    (
        "densities",
        "truncated local densities and the leading constant",
        &["p_max", "tol", "delta", "budget"],
    ),
    (
        "verify-lemmas",
        "run a module's invariant suite as a pass/fail report",
        &["suite"],
    ),
];

fn cli() -> Command {
    let mut root = Command::new("freepoints")
        .version(env!("CARGO_PKG_VERSION"))
        .about("reproducible experiments on free rational points of hypersurfaces")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about, keys) in SPECS {
        let mut sc = Command::new(*name)
            .about(*about)
            .arg(
                Arg::new("form")
                    .long("form")
                    .value_name("FILE")
                    .help("polynomial file: one 'coeff e1 .. en' monomial per line"),
            )
            .arg(
                Arg::new("output")
                    .long("output")
                    .short('o')
                    .value_name("PREFIX")
                    .help("write <PREFIX>.manifest.json/.csv/.json artifacts"),
            );
        for key in *keys {
            sc = sc.arg(
                Arg::new(*key)
                    .long(key)
                    .value_name("VALUE")
                    .allow_hyphen_values(true),
            );
        }
        root = root.subcommand(sc);
    }
    root
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let spec = SPECS.iter().find(|s| s.0 == name).expect("known subcommand");
    let mut params = BTreeMap::new();
    for key in spec.2 {
        if let Some(v) = sub.get_one::<String>(key) {
            params.insert((*key).to_string(), v.clone());
        }
    }
    let cfg = ExperimentConfig {
        command: name.to_string(),
        form_file: sub.get_one::<String>("form").map(PathBuf::from),
        params,
        output: sub.get_one::<String>("output").map(PathBuf::from),
    };
    let artifacts = match runner::run(&cfg) {
        Ok(a) => a,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(runner::exit_code_for(&err) as u8);
        }
    };
    if name == "verify-lemmas" {
        let results = artifacts.aggregates["results"]
            .as_array()
            .cloned()
            .unwrap_or_default();
        for r in &results {
            let verdict = if r["pass"] == serde_json::json!(true) {
                "PASS"
            } else {
                "FAIL"
            };
            println!(
                "{verdict} {} ({})",
                r["name"].as_str().unwrap_or("?"),
                r["detail"].as_str().unwrap_or("")
            );
        }
        let failed = artifacts.aggregates["failed"].as_u64().unwrap_or(0);
        println!(
            "{} passed, {failed} failed",
            artifacts.aggregates["passed"].as_u64().unwrap_or(0)
        );
        if failed > 0 {
            // dump the violating records where a script can capture them
            let dump: Vec<_> = results
                .iter()
                .filter(|r| r["pass"] == serde_json::json!(false))
                .collect();
            eprintln!(
                "invariant violations: {}",
                serde_json::to_string(&dump).unwrap_or_default()
            );
            return ExitCode::from(4);
        }
    } else {
        match serde_json::to_string_pretty(&artifacts.aggregates) {
            Ok(text) => println!("{text}"),
            Err(err) => {
                eprintln!("error: {err}");
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::SUCCESS
}
