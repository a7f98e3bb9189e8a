use clap::Parser;
use decoupled_saddle::cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
