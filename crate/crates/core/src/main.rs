use clap::Parser;

use degdiff::cli::{main_with, Args};

fn main() {
    let args = Args::parse();
    env_logger::Builder::new().filter_level(args.log).init();
    std::process::exit(main_with(&args));
}
