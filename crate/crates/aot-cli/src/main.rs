mod cli;
mod config;
mod dispatch;
mod figures;
mod output;

use clap::Parser;

use cli::{AlohaCommand, Cli, Command, SingleLinkCommand};

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SingleLink(cmd) => match cmd {
            SingleLinkCommand::Run(args) => dispatch::single_link_run(args),
            SingleLinkCommand::Sweep(args) => dispatch::single_link_sweep(args),
            SingleLinkCommand::Qtrain(args) => dispatch::qtrain(args),
        },
        Command::Aloha(cmd) => match cmd {
            AlohaCommand::Analyze(args) => dispatch::aloha_analyze(args),
            AlohaCommand::Optimize(args) => dispatch::aloha_optimize(args),
            AlohaCommand::Simulate(args) => dispatch::aloha_simulate(args),
        },
        Command::Reproduce(args) => figures::reproduce(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        let mut source = std::error::Error::source(&err);
        while let Some(cause) = source {
            eprintln!("  caused by: {cause}");
            source = cause.source();
        }
        std::process::exit(err.exit_code());
    }
}
