use std::path::PathBuf;

use clap::Args;
use formdml::dataset::write_fixture_table;
use formdml::synth::{generate, SynthConfig};

use crate::config::{resolve_output_dir, KvConfig};
use crate::error::CliResult;

/// Generate a synthetic fixture dataset with known causal structure.
#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Where fixtures.csv and truth.txt are written.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Plant an all-zero truth matrix (null dataset).
    #[arg(long)]
    pub null: bool,
    /// key=value config file; its values override the flags. Keys: seed,
    /// null, teams, seasons, leagues, home-advantage, strength-effect,
    /// confounding-strength, noise-sd, output-dir.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(mut args: SimulateArgs) -> CliResult<()> {
    let kv = match &args.config {
        Some(path) => KvConfig::load(path)?,
        None => KvConfig::default(),
    };
    kv.override_path("output-dir", &mut args.output_dir);
    kv.override_parse("seed", &mut args.seed)?;
    kv.override_flag("null", &mut args.null)?;

    let mut config = if args.null {
        SynthConfig::null(args.seed)
    } else {
        SynthConfig::demo(args.seed)
    };
    kv.override_parse("teams", &mut config.n_teams)?;
    kv.override_parse("seasons", &mut config.n_seasons)?;
    kv.override_parse("leagues", &mut config.n_leagues)?;
    kv.override_parse("home-advantage", &mut config.home_advantage)?;
    kv.override_parse("strength-effect", &mut config.strength_effect)?;
    kv.override_parse("confounding-strength", &mut config.confounding_strength)?;
    kv.override_parse("noise-sd", &mut config.noise_sd)?;

    let out_dir = resolve_output_dir(args.output_dir)?;
    std::fs::create_dir_all(&out_dir)?;

    let (fixtures, truth) = generate(&config)?;
    let fixtures_path = out_dir.join("fixtures.csv");
    write_fixture_table(&fixtures_path, &fixtures)?;
    let truth_path = out_dir.join("truth.txt");
    std::fs::write(&truth_path, truth.to_text())?;

    let max_beta = truth
        .true_beta
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    println!(
        "wrote {} fixtures to {} (seed {})",
        fixtures.len(),
        fixtures_path.display(),
        args.seed
    );
    println!(
        "truth: k={}, home_advantage={}, max |beta| = {max_beta}",
        truth.k, truth.home_advantage
    );
    Ok(())
}
