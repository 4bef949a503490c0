use clap::Parser;
use nbdeck::cli::{self, Cli, Command};

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate(args) => cli::generate(&args),
        Command::Eval(args) => cli::eval(&args),
        Command::Serve(args) => tokio::runtime::Runtime::new()?.block_on(cli::serve(&args)),
    }
}
