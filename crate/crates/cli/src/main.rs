use clap::Parser;
use steinpert_cli::{main_with, Args};

fn main() {
    let args = Args::parse();
    let code = main_with(&args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
