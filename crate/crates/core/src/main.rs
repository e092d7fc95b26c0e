use bubbleforce::cli::{run, Cli};
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("error: {}", error.message());
        std::process::exit(error.exit_code());
    }
}
