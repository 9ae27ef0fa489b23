//! Command-line front end: one subcommand per stage plus `pipeline`,
//! `verify` and `replay`.
//!
//! Every flag has a config-file key of the same name with `_` for `-`.
//! Settings resolve as defaults, then the config file (`--config` or the
//! `SYNBOOT_CONFIG` environment variable), then flags. Each run writes a
//! manifest; failures print one `key=value` line to stderr and exit with
//! 2 (usage), 3 (data) or 4 (verification).

pub mod commands;
pub mod config;
pub mod manifest;
pub mod pipeline;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches};

pub use commands::{run_stage, Command, Outcome};
pub use config::{Config, CONFIG_ENV, KEYS};
pub use manifest::{hash_file, verify_manifest, FileHash, RunManifest};
pub use pipeline::run_pipeline;

use crate::Error;

fn key_arg(name: &'static str) -> Arg {
    let k = config::find_key(name).expect("known key");
    let help = if k.default.is_empty() {
        k.help.to_string()
    } else {
        format!("{} [default: {}]", k.help, k.default)
    };
    let arg = Arg::new(k.name)
        .long(config::flag_name(k.name))
        .value_name(k.name.to_uppercase())
        .help(help);
    if k.list {
        arg.action(ArgAction::Append)
    } else {
        arg.action(ArgAction::Set)
    }
}

pub fn build_cli() -> clap::Command {
    let mut app = clap::Command::new("synboot")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Corpus perturbation and targeted word-learning evaluation")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .env(CONFIG_ENV)
                .value_name("FILE")
                .help("key = value config file"),
        )
        .arg(key_arg("threads").global(true));
    for cmd in Command::ALL {
        let mut sub = clap::Command::new(cmd.name()).about(cmd.about());
        for k in ["seed", "manifest"].iter().chain(cmd.keys()) {
            sub = sub.arg(key_arg(k));
        }
        app = app.subcommand(sub);
    }
    let mut pipe = clap::Command::new("pipeline")
        .about("Run every stage from corpus to report in one directory")
        .arg(
            Arg::new("all")
                .long("all")
                .action(ArgAction::SetTrue)
                .help("Train on all five corpus conditions"),
        );
    for k in pipeline::PIPELINE_KEYS {
        pipe = pipe.arg(key_arg(k));
    }
    app = app.subcommand(pipe);
    for (name, about) in [
        ("verify", "Recompute and check every hash listed in a manifest"),
        (
            "replay",
            "Re-run the command recorded in a manifest and check its outputs",
        ),
    ] {
        app = app.subcommand(
            clap::Command::new(name)
                .about(about)
                .arg(Arg::new("manifest").required(true).value_name("MANIFEST")),
        );
    }
    app
}

fn resolve_config(m: &ArgMatches) -> anyhow::Result<Config> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(p) => Config::from_file(Path::new(p))?,
        None => Config::default(),
    };
    for k in KEYS {
        let Ok(Some(vals)) = m.try_get_many::<String>(k.name) else {
            continue;
        };
        if m.value_source(k.name) == Some(ValueSource::CommandLine) {
            let v: Vec<&str> = vals.map(String::as_str).collect();
            cfg.set(k.name, v.join(","))?;
        }
    }
    Ok(cfg)
}

fn init_threads(cfg: &Config) -> anyhow::Result<()> {
    let n: usize = cfg.parsed("threads")?;
    if n > 0 {
        // A pool that already exists keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn absolutize(cfg: &mut Config) -> anyhow::Result<()> {
    const PATH_KEYS: &[&str] = &[
        "manifest",
        "input",
        "output",
        "tagger",
        "freq_table",
        "freq_output",
        "vocab",
        "vocab_output",
        "model",
        "eval",
        "responses",
        "trials",
        "corpus_dir",
    ];
    for &k in PATH_KEYS {
        if !cfg.is_set(k) {
            continue;
        }
        let abs: Vec<String> = cfg
            .list(k)
            .iter()
            .map(|p| std::path::absolute(p).map(|a| a.display().to_string()))
            .collect::<std::io::Result<_>>()?;
        cfg.set(k, abs.join(","))?;
    }
    Ok(())
}

fn default_manifest(cmd: Command, cfg: &Config) -> anyhow::Result<PathBuf> {
    if let Some(p) = cfg.opt_path("manifest") {
        return Ok(p);
    }
    let out = cfg.path("output")?;
    Ok(if cmd.writes_dir() {
        out.join("manifest.jsonl")
    } else {
        let mut s = out.into_os_string();
        s.push(".manifest.jsonl");
        PathBuf::from(s)
    })
}

/// Run one stage and write its manifest.
pub fn execute(cmd: Command, cfg: &Config) -> anyhow::Result<(PathBuf, Outcome)> {
    let mut cfg = cfg.clone();
    absolutize(&mut cfg)?;
    let mpath = default_manifest(cmd, &cfg)?;
    let seed: u64 = cfg.parsed("seed")?;
    let mut keys = vec!["seed"];
    keys.extend_from_slice(cmd.keys());
    let mut m = RunManifest::new(cmd.name(), cfg.snapshot(&keys), seed);
    let out = run_stage(cmd, &cfg)?;
    for p in &out.inputs {
        m.inputs.push(FileHash::of(p, &mpath)?);
    }
    for p in &out.outputs {
        m.outputs.push(FileHash::of(p, &mpath)?);
    }
    for (name, value) in &out.counters {
        m.counters.push(manifest::Counter {
            stage: cmd.name().to_string(),
            name: name.clone(),
            value: value.clone(),
        });
    }
    m.header.streams = out.streams.clone();
    m.header.finished_unix = manifest::unix_now();
    m.write(&mpath)?;
    Ok((mpath, out))
}

pub fn pipeline(cfg: &Config) -> anyhow::Result<PathBuf> {
    let mut cfg = cfg.clone();
    absolutize(&mut cfg)?;
    run_pipeline(&cfg)
}

/// Re-run the command a manifest records, then check that every output it
/// listed is reproduced byte for byte. Returns the number of files checked.
pub fn replay(path: &Path) -> anyhow::Result<usize> {
    let old = RunManifest::read(path)?;
    let cfg = Config::from_snapshot(&old.header.config)?;
    if old.header.command == "pipeline" {
        pipeline(&cfg)?;
    } else {
        let cmd: Command = old.header.command.parse()?;
        execute(cmd, &cfg.with("manifest", path.display()))?;
    }
    for f in &old.outputs {
        let file = f.resolve(path);
        let (sha, _) = hash_file(&file)?;
        if sha != f.sha256 {
            return Err(Error::Verification(format!("{}: replay produced different bytes", file.display())).into());
        }
    }
    Ok(old.outputs.len())
}

/// Root library error behind an `anyhow` chain, if any.
pub fn root_error(e: &anyhow::Error) -> Option<&Error> {
    e.chain().find_map(|c| c.downcast_ref::<Error>())
}

pub fn exit_code(e: &anyhow::Error) -> i32 {
    root_error(e).map_or(3, Error::exit_code)
}

/// The one-line error report.
pub fn error_line(command: &str, e: &anyhow::Error) -> String {
    let kind = root_error(e).map_or("internal", Error::kind);
    let msg = e.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ");
    format!(
        "synboot: error command={command} kind={kind} exit={} message={}",
        exit_code(e),
        serde_json::Value::String(msg)
    )
}

fn dispatch(m: &ArgMatches) -> anyhow::Result<()> {
    let (name, sub) = m.subcommand().expect("subcommand required");
    match name {
        "verify" => {
            let p = PathBuf::from(sub.get_one::<String>("manifest").expect("required"));
            let n = verify_manifest(&p)?;
            println!("ok {n} files {}", p.display());
        }
        "replay" => {
            let p = PathBuf::from(sub.get_one::<String>("manifest").expect("required"));
            let n = replay(&p)?;
            println!("ok {n} outputs reproduced {}", p.display());
        }
        "pipeline" => {
            let mut cfg = resolve_config(sub)?;
            init_threads(&cfg)?;
            if sub.get_flag("all") {
                let all: Vec<&str> = crate::perturb::PerturbKind::ALL.iter().map(|k| k.as_str()).collect();
                cfg.set("conditions", all.join(","))?;
            }
            let p = pipeline(&cfg)?;
            println!("{}", p.display());
        }
        _ => {
            let cmd: Command = name.parse()?;
            let cfg = resolve_config(sub)?;
            init_threads(&cfg)?;
            let (p, _) = execute(cmd, &cfg)?;
            println!("{}", p.display());
        }
    }
    Ok(())
}

/// Parse `args` (program name first), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let m = match build_cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = e.print();
                return 2;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!(
                "synboot: error command=- kind=usage exit=2 message={}",
                serde_json::Value::String(first.to_string())
            );
            return 2;
        }
    };
    let name = m.subcommand_name().unwrap_or("-").to_string();
    match dispatch(&m) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&name, &e));
            exit_code(&e)
        }
    }
}
