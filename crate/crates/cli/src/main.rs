use clap::Parser;

fn main() {
    let cli = optograv_cli::Cli::parse();
    if let Err(e) = optograv_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
