//! `pac`: construct rate profiles, run FER/ANV sweeps, tabulate bounds and
//! dump node cutoff-rate trees.

use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pac_core::construction::{
    format_profile, node_cutoff_tree, ChannelModel, DEFAULT_EPSILON, DEFAULT_MC_SAMPLES,
};
use pac_core::fano::DEFAULT_DELTA;
use pac_core::harness::{
    bounds_table, bounds_to_csv, build_profile, rows_to_csv, rows_to_json, run_sweep,
    tree_to_csv, BuildParams, CodeSource, ExperimentConfig, Recipe, DEFAULT_BATCH,
    DEFAULT_BIAS_MC_SAMPLES, DEFAULT_MAX_FRAMES, DEFAULT_MIN_ERRORS,
};

#[derive(Parser)]
#[command(name = "pac", version, about = "PAC code construction, simulation and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a rate profile and write it as a profile file.
    Construct(ConstructArgs),
    /// Run a Monte-Carlo FER/ANV sweep.
    Simulate(SimulateArgs),
    /// Tabulate capacity, dispersion, cutoff rate and the normal approximation.
    Bounds(BoundsArgs),
    /// Dump the node cutoff-rate tree.
    Tree(TreeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RecipeKind {
    Rm,
    Polar,
    TamedRm,
    Merged,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ProfileFormat {
    /// "N K" followed by the information positions.
    Text,
    Json,
}

#[derive(Args)]
struct RecipeArgs {
    #[arg(long, value_enum)]
    recipe: Option<RecipeKind>,
    #[arg(long)]
    n: Option<usize>,
    /// Dimension: K for rm/polar, starting K for tamed-rm, target K for merged.
    #[arg(long)]
    k: Option<usize>,
    /// Design Eb/N0 in dB (base code for merged).
    #[arg(long, allow_negative_numbers = true)]
    design_snr: Option<f64>,
    /// Polarization level used for taming and merging.
    #[arg(long)]
    level: Option<usize>,
    /// Tame every level from 1 up to --level.
    #[arg(long)]
    multilevel: bool,
    /// Starting RM dimension of the merge base.
    #[arg(long)]
    base_k: Option<usize>,
    /// RM dimension of the merge donor.
    #[arg(long)]
    donor_k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    donor_design_snr: Option<f64>,
    /// Merge from the plain RM donor instead of its tamed version.
    #[arg(long)]
    untamed_donor: bool,
    /// Row weight of the positions a merge may add.
    #[arg(long, default_value_t = 16)]
    weight: usize,
    /// Overrides --k as the merge target.
    #[arg(long)]
    target_k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

fn need<T>(value: Option<T>, flag: &str, recipe: &str) -> Result<T> {
    value.with_context(|| format!("--{flag} is required for --recipe {recipe}"))
}

impl RecipeArgs {
    fn recipe(&self) -> Result<Recipe> {
        let kind = self.recipe.context("--recipe is required")?;
        let n = self.n.context("--n is required")?;
        Ok(match kind {
            RecipeKind::Rm => Recipe::Rm { n, k: need(self.k, "k", "rm")? },
            RecipeKind::Polar => Recipe::Polar {
                n,
                k: need(self.k, "k", "polar")?,
                design_ebn0_db: need(self.design_snr, "design-snr", "polar")?,
            },
            RecipeKind::TamedRm => Recipe::TamedRm {
                n,
                k_start: need(self.k, "k", "tamed-rm")?,
                design_ebn0_db: need(self.design_snr, "design-snr", "tamed-rm")?,
                level: need(self.level, "level", "tamed-rm")?,
                multilevel: self.multilevel,
            },
            RecipeKind::Merged => Recipe::Merged {
                n,
                base_k: need(self.base_k, "base-k", "merged")?,
                base_design_ebn0_db: need(self.design_snr, "design-snr", "merged")?,
                donor_k: need(self.donor_k, "donor-k", "merged")?,
                donor_design_ebn0_db: need(self.donor_design_snr, "donor-design-snr", "merged")?,
                tamed_donor: !self.untamed_donor,
                target_k: need(self.target_k.or(self.k), "target-k", "merged")?,
                weight: self.weight,
                level: need(self.level, "level", "merged")?,
            },
        })
    }
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    recipe: RecipeArgs,
    /// Monte-Carlo samples for node cutoff-rate estimates.
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    mc_samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: ProfileFormat,
}

#[derive(Args)]
struct SimulateArgs {
    /// Profile file; otherwise the code is built from the recipe flags.
    #[arg(long, conflicts_with = "recipe")]
    profile: Option<PathBuf>,
    #[command(flatten)]
    recipe: RecipeArgs,
    /// Monte-Carlo samples when building the code from a recipe.
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    build_mc_samples: usize,
    /// Connection polynomial in octal.
    #[arg(long, default_value = "3211")]
    g: String,
    /// Eb/N0 grid in dB, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    ebn0: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long)]
    max_visits: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    min_frames: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_ERRORS)]
    min_errors: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_FRAMES)]
    max_frames: u64,
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    batch: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte-Carlo samples for the per-point bias vector.
    #[arg(long, default_value_t = DEFAULT_BIAS_MC_SAMPLES)]
    mc_samples: usize,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Replace the channel by error-free saturated LLRs.
    #[arg(long)]
    noiseless: bool,
    /// Report zero wall time so that outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    ebn0: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long)]
    n: usize,
    /// Dimension setting the rate used to convert --design-snr.
    #[arg(long)]
    k: Option<usize>,
    /// Design Eb/N0 in dB.
    #[arg(long, allow_negative_numbers = true)]
    design_snr: Option<f64>,
    /// Use a BEC with this erasure probability instead of the BI-AWGN channel.
    #[arg(long, conflicts_with = "design_snr")]
    erasure: Option<f64>,
    #[arg(long)]
    level: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    mc_samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn construct(a: ConstructArgs) -> Result<()> {
    let params = BuildParams { epsilon: a.recipe.epsilon, mc_samples: a.mc_samples, seed: a.seed };
    let built = build_profile(&a.recipe.recipe()?, &params)?;
    eprintln!(
        "built {} profile: N = {}, K = {}, changed positions {:?}",
        built.meta.recipe.name(),
        built.meta.n,
        built.meta.k,
        built.meta.changed_positions
    );
    if built.meta.rm_dimension == Some(false) {
        eprintln!("warning: the starting K is not an RM dimension; the lowest weight class is partial");
    }
    let text = match a.format {
        ProfileFormat::Text => format_profile(&built.profile),
        ProfileFormat::Json => {
            let value = serde_json::json!({
                "meta": built.meta,
                "positions": built.profile.positions(),
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
    };
    emit(a.out.as_ref(), &text)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let code = match &a.profile {
        Some(path) => CodeSource::ProfileFile(path.clone()),
        None => CodeSource::Recipe {
            recipe: a.recipe.recipe()?,
            params: BuildParams {
                epsilon: a.recipe.epsilon,
                mc_samples: a.build_mc_samples,
                seed: a.seed,
            },
        },
    };
    let mut cfg = ExperimentConfig::new(code, &a.g, a.ebn0);
    cfg.min_frames = a.min_frames;
    cfg.min_errors = a.min_errors;
    cfg.max_frames = a.max_frames;
    cfg.batch = a.batch;
    cfg.delta = a.delta;
    cfg.max_visits = a.max_visits;
    cfg.seed = a.seed;
    cfg.mc_samples = a.mc_samples;
    cfg.workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cfg.noiseless = a.noiseless;
    cfg.timing = !a.no_timing;
    let rows = run_sweep(&cfg)?;
    for r in rows.iter().filter(|r| r.truncated) {
        eprintln!(
            "warning: {} dB stopped at {} frames with {} errors before the stopping rule was met",
            r.ebn0_db, r.frames, r.frame_errors
        );
    }
    let text = match a.format {
        Format::Csv => rows_to_csv(&rows),
        Format::Json => rows_to_json(&cfg, &rows)? + "\n",
    };
    emit(a.out.as_ref(), &text)
}

fn bounds(a: BoundsArgs) -> Result<()> {
    let rows = bounds_table(a.n, a.k, &a.ebn0)?;
    let text = match a.format {
        Format::Csv => bounds_to_csv(&rows),
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    emit(a.out.as_ref(), &text)
}

fn tree(a: TreeArgs) -> Result<()> {
    let ch = match (a.erasure, a.design_snr) {
        (Some(p), _) => ChannelModel::bec(p)?,
        (None, Some(db)) => {
            let k = a.k.context("--k is required with --design-snr")?;
            ChannelModel::biawgn_ebn0(db, k as f64 / a.n as f64)?
        }
        (None, None) => bail!("give either --design-snr or --erasure"),
    };
    let tree = node_cutoff_tree(&ch, a.n, a.level, a.epsilon, a.mc_samples, a.seed)?;
    let text = match a.format {
        Format::Csv => tree_to_csv(&tree),
        Format::Json => serde_json::to_string_pretty(&tree)? + "\n",
    };
    emit(a.out.as_ref(), &text)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Construct(a) => construct(a),
        Command::Simulate(a) => simulate(a),
        Command::Bounds(a) => bounds(a),
        Command::Tree(a) => tree(a),
    }
}
