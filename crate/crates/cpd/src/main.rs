//! Command-line front end: validate models, enumerate or count scenarios,
//! cross-check against the oracle, run the benchmark family, and export
//! DIMACS.
//!
//! Exit codes are stable: 0 success, 1 model or parse error, 2 infeasible
//! or unsatisfiable input, 3 incomplete result (limit or budget), 4
//! internal invariant failure.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};

use cpd::analyze::{self, SceneFilter};
use cpd::dsl;
use cpd::enumerate::{self, EnumOptions};
use cpd::families;
use cpd::model::Model;
use cpd::oracle;
use cpd::positions;
use cpd::render;
use cpd::sat;

const EXIT_MODEL_ERROR: u8 = 1;
const EXIT_UNSAT: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "cpd", version, about = "Car position diagram toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// One scenario per line.
    Lines,
    /// Scene grids per scenario.
    Ascii,
    /// DOT prefix tree over all scenarios.
    Tree,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a model, printing diagnostics.
    Validate {
        /// Model file, `-` for stdin, or `bench:N`.
        path: String,
        /// Also print the model as a DOT graph.
        #[arg(long)]
        dot: bool,
    },
    /// Enumerate all scenarios.
    Enumerate {
        path: String,
        /// Step bound override (default: longest run bound).
        #[arg(long)]
        k: Option<u32>,
        /// Stop after this many scenarios.
        #[arg(long)]
        limit: Option<u64>,
        /// Scene filter: dist<INT, collision, no-collision,
        /// occupies(CAR.IDX); comma for conjunction.
        #[arg(long)]
        filter: Option<String>,
        /// Write scenarios here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Lines)]
        format: Format,
        /// Total solver conflict budget.
        #[arg(long)]
        max_conflicts: Option<u64>,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        timeout: Option<f64>,
    },
    /// Count scenarios without materializing them.
    Count {
        path: String,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        filter: Option<String>,
    },
    /// Cross-check the SAT enumerator against the explicit-state oracle.
    Oracle {
        path: String,
        #[arg(long)]
        filter: Option<String>,
        /// Firing-depth bound, required for cyclic models.
        #[arg(long)]
        max_depth: Option<usize>,
    },
    /// Run the two-car chain benchmark family over a range of n.
    Bench {
        /// Single n or inclusive range `A..B`.
        range: String,
        #[arg(long)]
        filter: Option<String>,
        /// Rows to run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Export the unrolled model as DIMACS CNF.
    Dimacs {
        path: String,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug)]
struct CmdError {
    message: String,
    code: u8,
}

impl CmdError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CmdError {
            message: message.into(),
            code,
        }
    }

    fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::new(EXIT_MODEL_ERROR, e.to_string())
    }
}

fn load_model(path: &str) -> Result<Model, CmdError> {
    if let Some(n) = path.strip_prefix("bench:") {
        let n: u32 = n
            .parse()
            .map_err(|_| CmdError::new(EXIT_MODEL_ERROR, format!("bad bench size `{n}`")))?;
        return Ok(families::bench(n));
    }
    let text = if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(path)?
    };
    dsl::parse(&text).map_err(|errors| {
        let mut msg = String::new();
        for e in &errors {
            msg.push_str(&format!("{path}:{e}\n"));
        }
        msg.pop();
        CmdError::new(EXIT_MODEL_ERROR, msg)
    })
}

fn parse_filter_arg(filter: &Option<String>) -> Result<Option<SceneFilter>, CmdError> {
    match filter {
        None => Ok(None),
        Some(text) => analyze::parse_filter(text)
            .map(Some)
            .map_err(|e| CmdError::new(EXIT_MODEL_ERROR, e.to_string())),
    }
}

fn seed_from_env() -> Result<u64, CmdError> {
    match std::env::var("CPD_SEED") {
        Err(_) => Ok(0),
        Ok(v) => v
            .parse()
            .map_err(|_| CmdError::new(EXIT_MODEL_ERROR, format!("bad CPD_SEED `{v}`"))),
    }
}

fn map_enum_error(e: enumerate::EnumError) -> CmdError {
    let code = match &e {
        enumerate::EnumError::Internal(_) => EXIT_INTERNAL,
        enumerate::EnumError::Filter(_) => EXIT_UNSAT,
        _ => EXIT_MODEL_ERROR,
    };
    CmdError::new(code, e.to_string())
}

fn run(cli: Cli) -> Result<ExitCode, CmdError> {
    match cli.cmd {
        Cmd::Validate { path, dot } => cmd_validate(&path, dot),
        Cmd::Enumerate {
            path,
            k,
            limit,
            filter,
            out,
            format,
            max_conflicts,
            timeout,
        } => {
            let options = EnumOptions {
                k,
                filter: parse_filter_arg(&filter)?,
                limit,
                max_conflicts,
                max_time: timeout.map(Duration::from_secs_f64),
                seed: seed_from_env()?,
            };
            cmd_enumerate(&path, &options, out, format)
        }
        Cmd::Count { path, k, filter } => {
            let options = EnumOptions {
                k,
                filter: parse_filter_arg(&filter)?,
                seed: seed_from_env()?,
                ..Default::default()
            };
            cmd_count(&path, &options)
        }
        Cmd::Oracle {
            path,
            filter,
            max_depth,
        } => cmd_oracle(&path, parse_filter_arg(&filter)?, max_depth),
        Cmd::Bench {
            range,
            filter,
            jobs,
        } => cmd_bench(&range, parse_filter_arg(&filter)?, jobs),
        Cmd::Dimacs { path, k, out } => cmd_dimacs(&path, k, out),
    }
}

fn cmd_validate(path: &str, dot: bool) -> Result<ExitCode, CmdError> {
    if let Some(n) = path.strip_prefix("bench:") {
        // Generated models are valid by construction.
        let m = load_model(path)?;
        println!("bench:{n}: ok ({} boxes)", m.num_boxes());
        if dot {
            print!("{}", render::render_model_dot(&m));
        }
        return Ok(ExitCode::SUCCESS);
    }
    let text = if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(path)?
    };
    let (raw, parse_errors) = dsl::parse_raw(&text);
    for e in &parse_errors {
        println!("{path}:{e}");
    }
    let report = cpd::model::validate_model(&raw);
    for e in &report.errors {
        println!("{path}: error: {e}");
    }
    for w in &report.warnings {
        println!("{path}: warning: {w}");
    }
    if !parse_errors.is_empty() || !report.is_usable() {
        return Ok(ExitCode::from(EXIT_MODEL_ERROR));
    }
    let m = Model::compile(&raw).expect("validated model compiles");
    println!(
        "{path}: ok ({} cars, {} boxes, {} transitions)",
        m.num_cars(),
        m.num_boxes(),
        m.transitions().len()
    );
    if dot {
        print!("{}", render::render_model_dot(&m));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_enumerate(
    path: &str,
    options: &EnumOptions,
    out: Option<PathBuf>,
    format: Format,
) -> Result<ExitCode, CmdError> {
    let m = load_model(path)?;
    let result = enumerate::enumerate_scenarios(&m, options).map_err(map_enum_error)?;

    let mut rendered = String::new();
    match format {
        Format::Lines => {
            let pos = positions::resolve_positions(&m)
                .map_err(|e| CmdError::new(EXIT_UNSAT, e.to_string()))?;
            for s in &result.scenarios {
                rendered.push_str(&enumerate::format_scenario(&m, &pos, s));
                rendered.push('\n');
            }
        }
        Format::Ascii => {
            let pos = positions::resolve_positions(&m)
                .map_err(|e| CmdError::new(EXIT_UNSAT, e.to_string()))?;
            for (i, s) in result.scenarios.iter().enumerate() {
                rendered.push_str(&format!("scenario {i}\n"));
                rendered.push_str(&render::render_scenario_ascii_with(&m, &pos, s));
            }
        }
        Format::Tree => {
            rendered = render::render_scenario_tree(
                &m,
                &result.scenarios,
                &render::RenderOptions::default(),
            );
        }
    }
    match out {
        Some(p) => std::fs::write(p, rendered)?,
        None => print!("{rendered}"),
    }

    println!("count={} complete={}", result.count, result.complete);
    let s = &result.stats;
    println!(
        "solves={} conflicts={} encode_ms={} cnf_ms={} solve_ms={} decode_ms={} vars={} clauses={}",
        s.solves,
        s.conflicts,
        s.encode.as_millis(),
        s.cnf.as_millis(),
        s.solve.as_millis(),
        s.decode.as_millis(),
        s.num_vars,
        s.num_clauses
    );
    if result.complete {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_INCOMPLETE))
    }
}

fn cmd_count(path: &str, options: &EnumOptions) -> Result<ExitCode, CmdError> {
    let m = load_model(path)?;
    let (count, complete) = enumerate::count_scenarios(&m, options).map_err(map_enum_error)?;
    println!("{count}");
    if complete {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("incomplete");
        Ok(ExitCode::from(EXIT_INCOMPLETE))
    }
}

fn cmd_oracle(
    path: &str,
    filter: Option<SceneFilter>,
    max_depth: Option<usize>,
) -> Result<ExitCode, CmdError> {
    let m = load_model(path)?;
    let orc = oracle::oracle_enumerate(&m, filter.as_ref(), max_depth)
        .map_err(|e| CmdError::new(EXIT_MODEL_ERROR, e.to_string()))?;
    let options = EnumOptions {
        filter,
        seed: seed_from_env()?,
        k: max_depth.map(|d| d as u32),
        ..Default::default()
    };
    let sat_result = enumerate::enumerate_scenarios(&m, &options).map_err(map_enum_error)?;

    let orc_set: std::collections::BTreeSet<_> =
        orc.scenarios.iter().map(|s| &s.scenes).collect();
    let sat_set: std::collections::BTreeSet<_> =
        sat_result.scenarios.iter().map(|s| &s.scenes).collect();
    let verdict = if orc_set == sat_set { "MATCH" } else { "MISMATCH" };
    println!(
        "oracle={} sat={} {verdict}",
        orc.count(),
        sat_result.count
    );
    if verdict == "MATCH" {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_INTERNAL))
    }
}

fn parse_range(range: &str) -> Result<(u32, u32), CmdError> {
    let bad = || CmdError::new(EXIT_MODEL_ERROR, format!("bad range `{range}`; use N or A..B"));
    if let Some((a, b)) = range.split_once("..") {
        let lo: u32 = a.parse().map_err(|_| bad())?;
        let hi: u32 = b.parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Ok((lo, hi))
    } else {
        let n: u32 = range.parse().map_err(|_| bad())?;
        Ok((n, n))
    }
}

fn cmd_bench(
    range: &str,
    filter: Option<SceneFilter>,
    jobs: usize,
) -> Result<ExitCode, CmdError> {
    let (lo, hi) = parse_range(range)?;
    let seed = seed_from_env()?;
    let ns: Vec<u32> = (lo..=hi).collect();
    let mut rows: Vec<(u32, u64, bool, u128)> = Vec::new();

    let worker = |n: u32| -> Result<(u32, u64, bool, u128), CmdError> {
        let m = families::bench(n);
        let options = EnumOptions {
            filter: filter.clone(),
            seed,
            ..Default::default()
        };
        let t = Instant::now();
        let (count, complete) =
            enumerate::count_scenarios(&m, &options).map_err(map_enum_error)?;
        Ok((n, count, complete, t.elapsed().as_millis()))
    };

    if jobs <= 1 {
        for &n in &ns {
            rows.push(worker(n)?);
        }
    } else {
        let results: Vec<Result<(u32, u64, bool, u128), CmdError>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = ns
                    .chunks(ns.len().div_ceil(jobs))
                    .map(|chunk| scope.spawn(move || chunk.iter().map(|&n| worker(n)).collect::<Vec<_>>()))
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("bench worker panicked"))
                    .collect()
            });
        for r in results {
            rows.push(r?);
        }
        rows.sort_by_key(|r| r.0);
    }

    println!("{:>3} {:>12} {:>9} {:>9}", "n", "count", "complete", "ms");
    for (n, count, complete, ms) in rows {
        println!("{n:>3} {count:>12} {complete:>9} {ms:>9}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_dimacs(path: &str, k: Option<u32>, out: Option<PathBuf>) -> Result<ExitCode, CmdError> {
    let m = load_model(path)?;
    let k = match k {
        Some(k) => k,
        None => m
            .longest_run_bound()
            .map_err(|e| CmdError::new(EXIT_MODEL_ERROR, e.to_string()))?,
    };
    let formula = cpd::encode::encode_unrolled(&m, k);
    let map = cpd::encode::VarMap::new(m.num_boxes(), k);
    let cnf = cpd::encode::to_cnf(&formula, map);
    let text = sat::export_dimacs(&cnf);
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    eprintln!("vars={} clauses={} k={k}", cnf.num_vars, cnf.clauses.len());
    Ok(ExitCode::SUCCESS)
}
