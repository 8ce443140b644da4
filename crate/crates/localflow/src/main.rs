use clap::Parser;

fn main() {
    let cli = localflow::cli::Cli::parse();
    if let Err(e) = localflow::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
