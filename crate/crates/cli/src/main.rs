use clap::Parser;
use jacobi_fields_cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
