use clap::{Arg, ArgAction, ArgMatches, Command};
use dsqn_core::config::RunConfig;

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn checkpoint_arg() -> Arg {
    Arg::new("checkpoint")
        .long("checkpoint")
        .value_name("FILE")
        .default_value("run/best.ckpt")
        .help("Model or training checkpoint")
}

fn report_arg(default: &'static str) -> Arg {
    Arg::new("report").long("report").value_name("FILE").default_value(default).help("Where to write the report")
}

pub fn command() -> Command {
    let mut root = Command::new("dsqn")
        .about("Train and evaluate text-game agents with a state-equivalence head")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("workdir")
                .long("workdir")
                .global(true)
                .value_name("DIR")
                .default_value(".")
                .help("Directory all other paths are relative to"),
        )
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("Flat `key = value` settings file; flags override it"),
        );
    for (key, default) in RunConfig::default().entries() {
        root = root.arg(
            Arg::new(key.clone())
                .long(flag_name(&key))
                .global(true)
                .value_name("VALUE")
                .help(format!("Config `{key}` (default {default})"))
                .help_heading("Config overrides"),
        );
    }
    root.subcommand(Command::new("gen-games").about("Generate the game corpus under games/"))
        .subcommand(
            Command::new("train")
                .about("Train an agent on games/train, evaluating on games/dev")
                .arg(Arg::new("run").long("run").value_name("DIR").default_value("run").help("Run directory"))
                .arg(
                    Arg::new("resume")
                        .long("resume")
                        .action(ArgAction::SetTrue)
                        .help("Continue from the run's latest checkpoint"),
                ),
        )
        .subcommand(
            Command::new("eval-play")
                .about("Score greedy play with count penalties on test splits")
                .arg(checkpoint_arg())
                .arg(
                    Arg::new("splits")
                        .long("splits")
                        .value_name("LIST")
                        .default_value("test1,test2,test_th")
                        .help("Comma-separated splits"),
                )
                .arg(report_arg("reports/play.json")),
        )
        .subcommand(
            Command::new("eval-snn")
                .about("Pair classification accuracy on evaluation-episode memory")
                .arg(checkpoint_arg())
                .arg(report_arg("reports/snn.json")),
        )
        .subcommand(
            Command::new("eval-cluster")
                .about("k-means++ clustering of state encodings, scored by V-measure")
                .arg(checkpoint_arg())
                .arg(report_arg("reports/cluster.json")),
        )
        .subcommand(
            Command::new("export-embeddings")
                .about("Write one state encoding per gathered trajectory")
                .arg(checkpoint_arg())
                .arg(
                    Arg::new("output")
                        .long("output")
                        .value_name("FILE")
                        .default_value("embeddings.txt")
                        .help("Output file"),
                ),
        )
        .subcommand(
            Command::new("play")
                .about("Play a game in the terminal, or watch an agent play it")
                .arg(Arg::new("split").long("split").value_name("NAME").default_value("test1"))
                .arg(
                    Arg::new("game")
                        .long("game")
                        .value_name("INDEX")
                        .value_parser(clap::value_parser!(usize))
                        .default_value("0"),
                )
                .arg(Arg::new("spec").long("spec").value_name("FILE").help("Play this game file instead"))
                .arg(
                    Arg::new("checkpoint")
                        .long("checkpoint")
                        .value_name("FILE")
                        .help("Let this agent choose the commands"),
                ),
        )
}

/// Config keys given explicitly as flags.
pub fn overrides(m: &ArgMatches) -> Vec<(String, String)> {
    RunConfig::keys()
        .into_iter()
        .filter_map(|k| m.get_one::<String>(&k).map(|v| (k.clone(), v.clone())))
        .collect()
}
