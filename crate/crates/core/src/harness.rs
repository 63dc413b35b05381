//! Monte-Carlo experiment driver: profile recipes, FER/ANV sweeps and
//! result persistence.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    biawgn_constants, dispersion_fer, ebn0_to_esn0, transmit, transmit_noiseless, Lineage,
    NORMAL_APPROXIMATION_VARIANT,
};
use crate::construction::{
    bias_vector, merge_profiles, node_cutoff_tree, polar_profile, read_profile, rm_profile,
    tame_profile, tame_profile_multilevel, ChannelModel, DEFAULT_EPSILON,
};
use crate::error::{Error, Result};
use crate::fano::{decode_llrs, DecodeOutcome, FanoConfig, DEFAULT_DELTA};
use crate::polar::{BitWord, CodeSpec};
use crate::pretransform::{extract_data, ConnPoly, RateProfile};
use crate::rng::{derive_seed, stream, Purpose};

pub const CSV_HEADER: &str =
    "ebn0_db,frames,frame_errors,fer,anv,budget_exceedances,dispersion_fer,wall_time_s";
pub const DEFAULT_MIN_ERRORS: u64 = 100;
pub const DEFAULT_MAX_FRAMES: u64 = 1_000_000;
pub const DEFAULT_BATCH: u64 = 64;
/// Samples for the per-point bias vector; leaves need a full-depth tree, so
/// this is lower than the construction default.
pub const DEFAULT_BIAS_MC_SAMPLES: usize = 200_000;

/// How a rate profile is obtained. Design SNRs are Eb/N0 in dB, converted
/// with the rate of the code being constructed (`K / N`, or `K_start / N`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case")]
pub enum Recipe {
    Rm { n: usize, k: usize },
    Polar { n: usize, k: usize, design_ebn0_db: f64 },
    TamedRm {
        n: usize,
        k_start: usize,
        design_ebn0_db: f64,
        level: usize,
        #[serde(default)]
        multilevel: bool,
    },
    /// Tamed RM base grown with weight-`weight` rows of a donor profile.
    Merged {
        n: usize,
        base_k: usize,
        base_design_ebn0_db: f64,
        donor_k: usize,
        donor_design_ebn0_db: f64,
        /// Tame the donor at `level` before merging (otherwise plain RM).
        tamed_donor: bool,
        target_k: usize,
        weight: usize,
        level: usize,
    },
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::Rm { .. } => "rm",
            Recipe::Polar { .. } => "polar",
            Recipe::TamedRm { .. } => "tamed-rm",
            Recipe::Merged { .. } => "merged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub epsilon: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            epsilon: DEFAULT_EPSILON,
            mc_samples: crate::construction::DEFAULT_MC_SAMPLES,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub recipe: Recipe,
    pub params: BuildParams,
    pub n: usize,
    pub k: usize,
    /// For recipes starting from RM: whether the starting K is an RM dimension.
    pub rm_dimension: Option<bool>,
    /// Positions frozen by taming (tamed-rm) or added by merging (merged).
    pub changed_positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltProfile {
    pub profile: RateProfile,
    pub meta: ProfileMeta,
}

fn tamed_rm(
    n: usize,
    k: usize,
    db: f64,
    level: usize,
    multilevel: bool,
    p: &BuildParams,
) -> Result<(RateProfile, RateProfile, crate::construction::NodeCutoffTree)> {
    let rm = rm_profile(n, k)?;
    let ch = ChannelModel::biawgn_ebn0(db, k as f64 / n as f64)?;
    let tree = node_cutoff_tree(&ch, n, level, p.epsilon, p.mc_samples, p.seed)?;
    let tamed = if multilevel {
        tame_profile_multilevel(&rm, &tree, level)?
    } else {
        tame_profile(&rm, &tree, level)?
    };
    Ok((rm, tamed, tree))
}

fn diff(a: &RateProfile, b: &RateProfile) -> Vec<usize> {
    a.positions().into_iter().filter(|&p| !b.is_info(p)).collect()
}

pub fn build_profile(recipe: &Recipe, params: &BuildParams) -> Result<BuiltProfile> {
    let (profile, rm_dim, changed) = match *recipe {
        Recipe::Rm { n, k } => {
            (rm_profile(n, k)?, Some(crate::construction::is_rm_dimension(n, k)), vec![])
        }
        Recipe::Polar { n, k, design_ebn0_db } => {
            let ch = ChannelModel::biawgn_ebn0(design_ebn0_db, k as f64 / n as f64)?;
            (polar_profile(&ch, n, k, params.mc_samples, params.seed)?, None, vec![])
        }
        Recipe::TamedRm { n, k_start, design_ebn0_db, level, multilevel } => {
            let (rm, tamed, _) = tamed_rm(n, k_start, design_ebn0_db, level, multilevel, params)?;
            let frozen = diff(&rm, &tamed);
            (tamed, Some(crate::construction::is_rm_dimension(n, k_start)), frozen)
        }
        Recipe::Merged {
            n,
            base_k,
            base_design_ebn0_db,
            donor_k,
            donor_design_ebn0_db,
            tamed_donor,
            target_k,
            weight,
            level,
        } => {
            let (_, base, tree) = tamed_rm(n, base_k, base_design_ebn0_db, level, false, params)?;
            let donor = if tamed_donor {
                tamed_rm(n, donor_k, donor_design_ebn0_db, level, false, params)?.1
            } else {
                rm_profile(n, donor_k)?
            };
            let merged = merge_profiles(&base, &donor, target_k, weight, &tree, level)?;
            let added = diff(&merged, &base);
            (merged, Some(crate::construction::is_rm_dimension(n, base_k)), added)
        }
    };
    Ok(BuiltProfile {
        meta: ProfileMeta {
            recipe: recipe.clone(),
            params: *params,
            n: profile.len(),
            k: profile.k(),
            rm_dimension: rm_dim,
            changed_positions: changed,
        },
        profile,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeSource {
    ProfileFile(PathBuf),
    Profile(RateProfile),
    Recipe { recipe: Recipe, params: BuildParams },
}

impl CodeSource {
    pub fn resolve(&self) -> Result<RateProfile> {
        match self {
            CodeSource::ProfileFile(path) => read_profile(path),
            CodeSource::Profile(p) => Ok(p.clone()),
            CodeSource::Recipe { recipe, params } => Ok(build_profile(recipe, params)?.profile),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub code: CodeSource,
    /// Connection polynomial in octal.
    pub g: String,
    pub ebn0_grid: Vec<f64>,
    pub min_frames: u64,
    pub min_errors: u64,
    /// Hard frame cap per point; a point stopped here before meeting the
    /// other rules is flagged as truncated.
    pub max_frames: u64,
    /// Frames per scheduling batch. The stopping rule is checked between batches.
    pub batch: u64,
    pub delta: f64,
    pub max_visits: Option<u64>,
    pub seed: u64,
    /// Samples for the bias vector at each grid point.
    pub mc_samples: usize,
    pub workers: usize,
    /// Replace the channel by saturated, error-free LLRs.
    pub noiseless: bool,
    /// Record wall time per point (0 otherwise, for byte-identical outputs).
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(code: CodeSource, g: &str, ebn0_grid: Vec<f64>) -> Self {
        ExperimentConfig {
            code,
            g: g.to_string(),
            ebn0_grid,
            min_frames: 1000,
            min_errors: DEFAULT_MIN_ERRORS,
            max_frames: DEFAULT_MAX_FRAMES,
            batch: DEFAULT_BATCH,
            delta: DEFAULT_DELTA,
            max_visits: None,
            seed: 1,
            mc_samples: DEFAULT_BIAS_MC_SAMPLES,
            workers: 1,
            noiseless: false,
            timing: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ebn0_grid.is_empty() {
            return Err(Error::InvalidConfig("empty Eb/N0 grid".into()));
        }
        if self.min_frames == 0 || self.batch == 0 || self.max_frames == 0 {
            return Err(Error::InvalidConfig("min_frames, batch and max_frames must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ebn0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub anv: f64,
    pub budget_exceedances: u64,
    pub dispersion_fer: f64,
    pub wall_time_s: f64,
    /// Stopped at `max_frames` before `min_frames` and `min_errors` were met.
    pub truncated: bool,
}

struct FrameOutcome {
    error: bool,
    visits: u64,
    exceeded: bool,
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let profile = cfg.code.resolve()?;
    let poly: ConnPoly = cfg.g.parse()?;
    let spec = CodeSpec::new(profile, poly)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        cfg.ebn0_grid
            .iter()
            .enumerate()
            .map(|(idx, &db)| run_point(cfg, &spec, idx as u64, db))
            .collect()
    })
}

fn run_point(cfg: &ExperimentConfig, spec: &CodeSpec, idx: u64, ebn0_db: f64) -> Result<SweepRow> {
    let start = Instant::now();
    let (n, k) = (spec.n(), spec.k());
    let rate = if k == 0 { 1.0 / n as f64 } else { spec.rate() };
    let esn0 = ebn0_to_esn0(ebn0_db, rate)?;
    let seed = derive_seed(cfg.seed, idx);
    let ch = ChannelModel::biawgn(esn0)?;
    let bias = bias_vector(&ch, n, cfg.mc_samples, derive_seed(seed, 0xb1a5))?;
    let fano = FanoConfig::new(bias).with_delta(cfg.delta).with_max_visits(cfg.max_visits);

    let one_frame = |frame: u64| -> Result<FrameOutcome> {
        let mut rng = stream(seed, Purpose::Data, frame);
        let data = BitWord::from_bits((0..k).map(|_| rng.random_range(0..2u8)).collect())?;
        let (_, _, x) = spec.encode(&data)?;
        let lineage = Lineage { seed, frame };
        let draw = if cfg.noiseless {
            transmit_noiseless(&x, lineage)
        } else {
            transmit(&x, esn0, lineage)?
        };
        let r = decode_llrs(&draw.llrs, spec, &fano)?;
        let exceeded = r.outcome == DecodeOutcome::VisitBudgetExceeded;
        let error = exceeded || extract_data(&r.v_hat, spec.profile())? != data;
        Ok(FrameOutcome { error, visits: r.visits, exceeded })
    };

    let (mut frames, mut errors, mut visits, mut exceeded) = (0u64, 0u64, 0u64, 0u64);
    loop {
        let met = frames >= cfg.min_frames && errors >= cfg.min_errors;
        if met || frames >= cfg.max_frames {
            break;
        }
        let end = (frames + cfg.batch).min(cfg.max_frames);
        let batch: Vec<FrameOutcome> =
            (frames..end).into_par_iter().map(one_frame).collect::<Result<_>>()?;
        for o in batch {
            errors += u64::from(o.error);
            visits += o.visits;
            exceeded += u64::from(o.exceeded);
        }
        frames = end;
    }
    let truncated = !(frames >= cfg.min_frames && errors >= cfg.min_errors);
    let reference = if k == 0 { f64::NAN } else { dispersion_fer(n, k, esn0)? };
    Ok(SweepRow {
        ebn0_db,
        frames,
        frame_errors: errors,
        fer: errors as f64 / frames as f64,
        anv: visits as f64 / (frames as f64 * n as f64),
        budget_exceedances: exceeded,
        dispersion_fer: reference,
        wall_time_s: if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 },
        truncated,
    })
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.ebn0_db,
            r.frames,
            r.frame_errors,
            r.fer,
            r.anv,
            r.budget_exceedances,
            r.dispersion_fer,
            r.wall_time_s
        );
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct SweepReport<'a> {
    config: &'a ExperimentConfig,
    normal_approximation: &'static str,
    stopping_rule: String,
    rows: &'a [SweepRow],
}

pub fn rows_to_json(cfg: &ExperimentConfig, rows: &[SweepRow]) -> Result<String> {
    let report = SweepReport {
        config: cfg,
        normal_approximation: NORMAL_APPROXIMATION_VARIANT,
        stopping_rule: format!(
            "at least {} frames and {} frame errors, at most {} frames, checked every {} frames",
            cfg.min_frames, cfg.min_errors, cfg.max_frames, cfg.batch
        ),
        rows,
    };
    serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub ebn0_db: f64,
    pub esn0: f64,
    pub capacity: f64,
    pub dispersion: f64,
    pub cutoff_rate: f64,
    pub dispersion_fer: f64,
}

/// Channel constants and the normal-approximation FER over an Eb/N0 grid.
pub fn bounds_table(n: usize, k: usize, grid: &[f64]) -> Result<Vec<BoundsRow>> {
    grid.iter()
        .map(|&db| {
            let esn0 = ebn0_to_esn0(db, k as f64 / n as f64)?;
            let c = biawgn_constants(esn0)?;
            Ok(BoundsRow {
                ebn0_db: db,
                esn0,
                capacity: c.capacity,
                dispersion: c.dispersion,
                cutoff_rate: c.cutoff_rate,
                dispersion_fer: dispersion_fer(n, k, esn0)?,
            })
        })
        .collect()
}

pub fn bounds_to_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from("ebn0_db,esn0,capacity,dispersion,cutoff_rate,dispersion_fer\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.ebn0_db, r.esn0, r.capacity, r.dispersion, r.cutoff_rate, r.dispersion_fer
        );
    }
    out
}

pub fn tree_to_csv(tree: &crate::construction::NodeCutoffTree) -> String {
    let mut out = String::from("level,node,start,len,z,z_se,r0,r0_se,cap\n");
    for s in 0..=tree.depth() {
        for (j, e) in tree.level(s).iter().enumerate() {
            let _ = writeln!(
                out,
                "{s},{j},{},{},{},{},{},{},{}",
                e.start, e.len, e.z, e.z_se, e.r0, e.r0_se, e.cap
            );
        }
    }
    out
}
