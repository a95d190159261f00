use clap::Parser;

fn main() {
    let cli = geopid::cli::Cli::parse();
    std::process::exit(geopid::cli::execute(cli));
}
