//! Command-line interface.
//!
//! Every training-style command accepts `--config FILE` holding `key = value`
//! lines plus one `--<key>` flag per setting; flags win over the file.
//! Outputs go to `--out`, or to `<root>/<command>` where the root comes from
//! `--out-root` or the `REPROJ_OUT_ROOT` environment variable.

mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};
use serde::Serialize;

use crate::error::Result;
use crate::synth::SynthSpec;

pub use config::{apply_all, apply_key, parse_key_values, RunConfig};
pub use manifest::{sha256_file, Manifest, MANIFEST_FILE};

pub const OUT_ROOT_ENV: &str = "REPROJ_OUT_ROOT";
const DEFAULT_OUT_ROOT: &str = "runs";

/// One `--<key>` flag per field of a flat config struct.
fn setting_args<T: Serialize>(defaults: &T) -> Vec<Arg> {
    let value = serde_json::to_value(defaults).expect("config serialises");
    value
        .as_object()
        .expect("config is a struct")
        .iter()
        .map(|(key, default)| {
            let shown = match default {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Null => "unset".into(),
                serde_json::Value::Array(items) => items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
                other => other.to_string(),
            };
            Arg::new(key.clone())
                .long(key.replace('_', "-"))
                .value_name("VALUE")
                .help(format!("[default: {shown}]"))
                .help_heading("Settings")
        })
        .collect()
}

fn output_args() -> [Arg; 2] {
    [
        Arg::new("out").long("out").value_name("DIR").help("Output directory"),
        Arg::new("out_root")
            .long("out-root")
            .value_name("DIR")
            .env(OUT_ROOT_ENV)
            .help("Root for default output directories [default: runs]"),
    ]
}

fn config_arg() -> Arg {
    Arg::new("config")
        .long("config")
        .value_name("FILE")
        .help("key = value settings file")
}

fn required(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name)
        .long(name.replace('_', "-"))
        .value_name("PATH")
        .required(true)
        .help(help)
}

pub fn command() -> Command {
    let run = RunConfig::default();
    Command::new("reproj")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Cross-lingual classifier transfer by representation projection")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("gen-synth")
                .about("Generate a synthetic bilingual corpus with a known cipher")
                .arg(config_arg())
                .args(output_args())
                .args(setting_args(&SynthSpec::default())),
        )
        .subcommand(
            Command::new("build-vocab")
                .about("Build source and target vocabularies")
                .arg(config_arg())
                .args(output_args())
                .args(setting_args(&run)),
        )
        .subcommand(
            Command::new("train")
                .about("Train with the selected regime and supervision")
                .arg(config_arg())
                .args(output_args())
                .args(setting_args(&run)),
        )
        .subcommand(
            Command::new("evaluate")
                .about("Evaluate a checkpoint on a labelled test file")
                .arg(required("checkpoint", "Model checkpoint"))
                .arg(required("test", "Labelled test file (JSON lines)"))
                .arg(
                    Arg::new("lang")
                        .long("lang")
                        .value_name("TAG")
                        .required(true)
                        .help("Embedding table to read through"),
                )
                .args(output_args()),
        )
        .subcommand(
            Command::new("neighbors")
                .about("Nearest target-language words of source-language queries")
                .arg(required("checkpoint", "Model checkpoint"))
                .arg(
                    Arg::new("source_lang")
                        .long("source-lang")
                        .value_name("TAG")
                        .required(true),
                )
                .arg(
                    Arg::new("target_lang")
                        .long("target-lang")
                        .value_name("TAG")
                        .required(true),
                )
                .arg(
                    Arg::new("k")
                        .short('k')
                        .long("k")
                        .value_name("K")
                        .default_value("10")
                        .value_parser(clap::value_parser!(usize)),
                )
                .arg(
                    Arg::new("queries")
                        .value_name("QUERY")
                        .num_args(1..)
                        .required(true)
                        .action(ArgAction::Append),
                )
                .args(output_args()),
        )
        .subcommand(
            Command::new("interpolate")
                .about("Mix two models' scores with the weight chosen on development data")
                .arg(required("dev_a", "Development scores of model A"))
                .arg(required("dev_b", "Development scores of model B"))
                .arg(required(
                    "dev_labels",
                    "Labelled development file aligned with the scores",
                ))
                .arg(required("test_a", "Test scores of model A"))
                .arg(required("test_b", "Test scores of model B"))
                .arg(
                    Arg::new("test_labels")
                        .long("test-labels")
                        .value_name("PATH")
                        .help("Labelled test file for a report"),
                )
                .args(output_args()),
        )
        .subcommand(
            Command::new("sweep")
                .about("Target accuracy over a grid of embedding and encoder sizes")
                .arg(config_arg())
                .args(output_args())
                .args(setting_args(&run)),
        )
}

/// Config file values first, then explicit flags.
fn merged<T: Serialize + serde::de::DeserializeOwned + Default>(m: &ArgMatches) -> Result<T> {
    let mut target = T::default();
    if let Some(path) = m.get_one::<String>("config") {
        apply_all(&mut target, &config::read_key_values(Path::new(path))?)?;
    }
    let keys: Vec<String> = serde_json::to_value(&target)
        .expect("config serialises")
        .as_object()
        .expect("config is a struct")
        .keys()
        .cloned()
        .collect();
    for key in keys {
        if m.value_source(&key) == Some(ValueSource::CommandLine) {
            let raw = m.get_one::<String>(&key).expect("flag has a value");
            apply_key(&mut target, &key, raw)?;
        }
    }
    Ok(target)
}

fn out_dir(m: &ArgMatches, command: &str) -> Result<PathBuf> {
    let dir = match (m.get_one::<String>("out"), m.get_one::<String>("out_root")) {
        (Some(out), _) => PathBuf::from(out),
        (None, Some(root)) => Path::new(root).join(command),
        (None, None) => Path::new(DEFAULT_OUT_ROOT).join(command),
    };
    Ok(dir)
}

fn path_arg(m: &ArgMatches, name: &str) -> PathBuf {
    PathBuf::from(m.get_one::<String>(name).expect("required argument"))
}

fn dispatch(m: &ArgMatches) -> Result<()> {
    let (name, sub) = m.subcommand().expect("subcommand required");
    match name {
        "gen-synth" => commands::gen_synth(&merged(sub)?, &out_dir(sub, name)?),
        "build-vocab" => commands::build_vocab(&merged(sub)?, &out_dir(sub, name)?),
        "train" => commands::train(&merged(sub)?, &out_dir(sub, name)?),
        "sweep" => commands::sweep(&merged(sub)?, &out_dir(sub, name)?),
        "evaluate" => commands::evaluate(
            &path_arg(sub, "checkpoint"),
            &path_arg(sub, "test"),
            sub.get_one::<String>("lang").expect("required"),
            &out_dir(sub, name)?,
        ),
        "neighbors" => {
            let queries: Vec<String> = sub.get_many::<String>("queries").expect("required").cloned().collect();
            commands::neighbors(
                &path_arg(sub, "checkpoint"),
                sub.get_one::<String>("source_lang").expect("required"),
                sub.get_one::<String>("target_lang").expect("required"),
                &queries,
                *sub.get_one::<usize>("k").expect("defaulted"),
                &out_dir(sub, name)?,
            )
        }
        "interpolate" => commands::interpolate(
            &commands::InterpolateInputs {
                dev_a: path_arg(sub, "dev_a"),
                dev_b: path_arg(sub, "dev_b"),
                dev_labels: path_arg(sub, "dev_labels"),
                test_a: path_arg(sub, "test_a"),
                test_b: path_arg(sub, "test_b"),
                test_labels: sub.get_one::<String>("test_labels").map(PathBuf::from),
            },
            &out_dir(sub, name)?,
        ),
        other => unreachable!("unknown subcommand {other}"),
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match dispatch(&matches) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        command().debug_assert();
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        std::fs::write(&cfg, "# sizes\nembed_dim = 16\nseed = 3\n").unwrap();
        let m = command()
            .try_get_matches_from(["reproj", "train", "--config", cfg.to_str().unwrap(), "--seed", "9"])
            .unwrap();
        let c: RunConfig = merged(m.subcommand_matches("train").unwrap()).unwrap();
        assert_eq!((c.embed_dim, c.seed), (16, 9));
    }

    #[test]
    fn unknown_file_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        std::fs::write(&cfg, "embedding_size = 16\n").unwrap();
        let m = command()
            .try_get_matches_from(["reproj", "train", "--config", cfg.to_str().unwrap()])
            .unwrap();
        let err = merged::<RunConfig>(m.subcommand_matches("train").unwrap()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let err = command()
            .try_get_matches_from(["reproj", "train", "--embedding-size", "3"])
            .unwrap_err();
        assert_eq!(err.kind(), ErrorKind::UnknownArgument);
        let err = command().try_get_matches_from(["reproj"]).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand);
    }
}
