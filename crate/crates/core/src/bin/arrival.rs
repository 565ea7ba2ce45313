use clap::Parser;

fn main() {
    let cli = arrival::cli::Cli::parse();
    std::process::exit(arrival::cli::main_with(cli));
}
