//! Command-line front end for `entroscope-core`.
//!
//! Subcommands run one engine (`cft1d`, `lattice`, `holo`, `twist`), sweep a
//! parameter (`scan`) or fit a stored series (`fit`). Parameters come from
//! defaults, an optional flat `key = value` file given by `--config`, and
//! flags, later sources winning. Output is CSV or JSON with every entropy in
//! nats and the resolved parameters echoed as `param.*` metadata.
//!
//! Exit codes: 0 on success, 2 for usage and validation errors (including an
//! unwritable output path), 3 for numerical failures.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};

pub mod commands;
mod error;
pub mod output;
pub mod parallel;
pub mod params;

pub use error::CliError;

use commands::Engine;
use params::{global_specs, Kind, ParamSpec, Params};

fn arg(spec: &ParamSpec) -> Arg {
    let mut help = spec.help.to_string();
    if let Kind::Choice(options) = spec.kind {
        help.push_str(&format!(" [{}]", options.join("|")));
    }
    if let Some(d) = spec.default {
        help.push_str(&format!(" [default: {d}]"));
    }
    let a = Arg::new(spec.key).long(spec.key).help(help);
    match spec.kind {
        Kind::Flag => a.action(ArgAction::SetTrue),
        _ => a.num_args(1).value_name("VALUE"),
    }
}

fn subcommand(name: &'static str, about: &'static str, specs: &[ParamSpec]) -> Command {
    let config = Arg::new("config").long("config").value_name("PATH").help("flat key = value parameter file");
    Command::new(name).about(about).allow_negative_numbers(true).arg(config).args(specs.iter().map(arg))
}

/// Every engine key once, for the `scan` flag set.
fn engine_union() -> Vec<ParamSpec> {
    let mut out: Vec<ParamSpec> = Vec::new();
    for name in commands::ENGINES {
        for s in Engine::parse(name).expect("listed engine").specs() {
            if !out.iter().any(|o| o.key == s.key) {
                // Defaults differ between engines; they apply after the engine is chosen.
                out.push(ParamSpec { default: None, ..s });
            }
        }
    }
    out
}

fn command_specs(name: &str) -> Vec<ParamSpec> {
    let mut specs = global_specs();
    match name {
        "scan" => {
            specs.extend(commands::scan_specs());
            specs.extend(engine_union());
        }
        "fit" => specs.extend(commands::fit_specs()),
        engine => specs.extend(Engine::parse(engine).expect("known subcommand").specs()),
    }
    specs
}

pub fn cli() -> Command {
    let about = [
        ("cft1d", "entropy or mutual information of intervals in a 1+1D CFT"),
        ("lattice", "free-fermion chain entropies from correlation matrices"),
        ("holo", "holographic strips and adiabatic profiles"),
        ("twist", "Gaussian twist-operator boundary integrals"),
        ("scan", "sweep one engine parameter over a grid"),
        ("fit", "fit the divergence of a stored series"),
    ];
    Command::new("entroscope")
        .about("Entanglement entropy and mutual information numerics")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands(about.iter().map(|&(name, text)| subcommand(name, text, &command_specs(name))))
}

/// Values given on the command line, as text.
fn given(m: &ArgMatches, specs: &[ParamSpec]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for s in specs {
        if m.value_source(s.key) != Some(ValueSource::CommandLine) {
            continue;
        }
        let v = match s.kind {
            Kind::Flag => m.get_flag(s.key).to_string(),
            _ => m.get_one::<String>(s.key).cloned().unwrap_or_default(),
        };
        out.insert(s.key.to_string(), v);
    }
    out
}

fn config_file(m: &ArgMatches) -> Result<BTreeMap<String, String>, CliError> {
    match m.get_one::<String>("config") {
        None => Ok(BTreeMap::new()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::invalid("config", format!("cannot read {path}: {e}")))?;
            params::parse_config(&text)
        }
    }
}

fn execute(name: &str, m: &ArgMatches, stdout: &mut dyn Write) -> Result<(), CliError> {
    let flags = given(m, &command_specs(name));
    let file = config_file(m)?;
    let (specs, engine) = match name {
        "scan" => {
            let chosen = flags
                .get("engine")
                .or_else(|| file.get("engine"))
                .ok_or_else(|| CliError::invalid("engine", "is required"))?;
            let engine = Engine::parse(chosen).ok_or_else(|| {
                CliError::invalid("engine", format!("'{chosen}' is not one of {}", commands::ENGINES.join(", ")))
            })?;
            let mut specs = global_specs();
            specs.extend(commands::scan_specs());
            specs.extend(engine.specs());
            (specs, Some(engine))
        }
        _ => (command_specs(name), Engine::parse(name)),
    };
    let p = Params::resolve(specs, &file, &flags)?;
    let threads = parallel::threads_from_env()?;
    let (series, fit) = parallel::pool(threads)?.install(|| match (name, engine) {
        ("scan", Some(engine)) => commands::scan(engine, &p),
        ("fit", _) => commands::fit(&p).map(|(s, f)| (s, Some(f))),
        (_, Some(engine)) => commands::single(engine, &p).map(|s| (s, None)),
        _ => unreachable!("every subcommand is an engine, scan or fit"),
    })?;
    let text = match p.text("format")? {
        "json" => output::to_json(&series, fit.as_ref()),
        _ => output::to_csv(&series, fit.as_ref()),
    };
    output::write_to(p.text("output")?, &text, stdout)
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                2
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    match execute(name, sub, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
