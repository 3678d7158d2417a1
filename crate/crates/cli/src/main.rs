use clap::Parser;
use perf_dro::cli::{run, status, Cli};

fn main() {
    let result = run(Cli::parse());
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    std::process::exit(status(&result));
}
