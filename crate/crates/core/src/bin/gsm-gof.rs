use clap::Parser;
use gsm_gof::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
