use clap::Parser;
use renewal_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = renewal_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
