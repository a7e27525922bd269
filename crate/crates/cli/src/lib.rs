//! The `ratchet` command line.
//!
//! Every subcommand writes CSV tables and a JSON manifest under the `--out`
//! prefix. Exit codes: 0 on success, 2 for usage or validation errors, 3 for
//! numerical failures.

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;

pub mod args;
pub mod commands;
pub mod config;
pub mod svg;

/// A bad flag combination caught after parsing.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

fn exit_code(e: &anyhow::Error) -> i32 {
    use ratchet_core::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::Quadrature { .. } | E::Numerical(_) | E::InsufficientData(_) | E::WindowOverflow { .. }) => {
            EXIT_NUMERICAL
        }
        _ => EXIT_USAGE,
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match config::find_path(&argv) {
        Some(path) => match config::load(Path::new(&path)) {
            Ok(entries) => config::merge(argv, &entries),
            Err(e) => {
                eprintln!("error: {e:#}");
                return EXIT_USAGE;
            }
        },
        None => argv,
    };
    let cli = match args::Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match commands::workers(&cli.command) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| commands::execute(cli.command)),
            Err(e) => Err(anyhow::anyhow!("building worker pool: {e}")),
        },
        None => commands::execute(cli.command),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
