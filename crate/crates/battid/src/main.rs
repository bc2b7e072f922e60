use clap::Parser;

fn main() {
    let cli = battid::cli::Cli::parse();
    std::process::exit(battid::cli::main_with(cli));
}
