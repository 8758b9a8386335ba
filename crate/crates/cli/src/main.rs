use clap::Parser;

fn main() {
    let cli = beamcast_cli::Cli::parse();
    std::process::exit(beamcast_cli::run_cli(&cli));
}
