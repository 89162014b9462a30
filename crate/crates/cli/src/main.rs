use clap::Parser;
use metahier_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    let mut log = std::io::stderr().lock();
    let code = run(cli, &mut out, &mut log);
    std::process::exit(code.into());
}
