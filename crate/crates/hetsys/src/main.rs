use clap::Parser;

fn main() {
    let cli = hetsys::cli::Cli::parse();
    std::process::exit(hetsys::execute(&cli));
}
