use std::process::ExitCode;

use clap::Parser;
use freeway_bottleneck::cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse())
}
