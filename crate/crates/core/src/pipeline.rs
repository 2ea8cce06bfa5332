//! Stage orchestration. Stages talk only through files under the output
//! directory; each stage directory carries a `manifest.json` holding the
//! config hash, the seeds and the full config needed to re-run it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{save_checkpoint, OutputMode, TrainHyper};
use crate::embedding::{train_global, train_local, EmbeddingTable, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{
    f1_scores, train_fold, EvalConfig, FoldPlan, Protocol, Report, VariantResult,
};
use crate::features::{build_dataset, FeatureVariant, InstanceSet};
use crate::graph::{load_ego_dataset, Dataset, DatasetKind};
use crate::scalar::Scalar;
use crate::walks::{generate_ego_corpus, generate_global_corpus, Corpus, EgoCorpus, EgoWalkForm, WalkConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

/// Flat pipeline configuration, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub kind: DatasetKind,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub deterministic: bool,
    pub threads: usize,
    pub precision: Precision,

    pub walks_per_node: usize,
    pub walk_length: usize,
    pub ego_walk_length_cap: Option<usize>,
    pub ego_walk_form: EgoWalkForm,

    pub dim: usize,
    pub context: usize,
    pub negatives: usize,
    pub embed_epochs: usize,
    pub embed_lr: f64,
    pub noise_power: f64,

    pub profile_bits: usize,
    pub match_ones_only: bool,
    pub variants: Vec<FeatureVariant>,

    pub hidden_units: usize,
    pub epochs: usize,
    pub batch_size: Option<usize>,
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    pub threshold: Option<f64>,
    pub save_fold_models: bool,

    pub protocol: Protocol,
    pub folds: usize,
    pub train_fraction: f64,
    pub modes: Vec<OutputMode>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let w = WalkConfig::default();
        let t = TrainConfig::default();
        let h = TrainHyper::default();
        let e = EvalConfig::default();
        PipelineConfig {
            data_dir: PathBuf::from("data/facebook"),
            kind: DatasetKind::Facebook,
            out_dir: PathBuf::from("runs/facebook"),
            seed: 0x5eed,
            deterministic: true,
            threads: 0,
            precision: Precision::F32,
            walks_per_node: w.walks_per_node,
            walk_length: w.walk_length,
            ego_walk_length_cap: w.ego_walk_length_cap,
            ego_walk_form: w.ego_walk_form,
            dim: t.dim,
            context: t.context,
            negatives: t.negatives,
            embed_epochs: t.epochs,
            embed_lr: t.initial_lr,
            noise_power: t.noise_power,
            profile_bits: crate::features::DEFAULT_PROFILE_BITS,
            match_ones_only: false,
            variants: FeatureVariant::ALL.to_vec(),
            hidden_units: h.hidden_units,
            epochs: h.epochs,
            batch_size: h.batch_size,
            lr: h.lr,
            rho: h.rho,
            eps: h.eps,
            threshold: h.threshold,
            save_fold_models: false,
            protocol: e.protocol,
            folds: e.k,
            train_fraction: e.train_fraction,
            modes: e.modes,
        }
    }
}

/// Commented config with every default spelled out.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("default_config.toml");

/// Per-stage seeds, all derived from the master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub walks: u64,
    pub glo: u64,
    pub loc: u64,
    pub classifier: u64,
    pub folds: u64,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seeds(&self) -> Seeds {
        let s = |k: u64| self.seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        Seeds { master: self.seed, walks: s(1), glo: s(2), loc: s(3), classifier: s(4), folds: s(5) }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            walks_per_node: self.walks_per_node,
            walk_length: self.walk_length,
            ego_walk_length_cap: self.ego_walk_length_cap,
            ego_walk_form: self.ego_walk_form,
            seed: self.seeds().walks,
        }
    }

    fn embed_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            context: self.context,
            negatives: self.negatives,
            epochs: self.embed_epochs,
            initial_lr: self.embed_lr,
            min_lr: None,
            noise_power: self.noise_power,
            seed,
            parallel: !self.deterministic,
            threads: self.threads,
        }
    }

    pub fn glo_config(&self) -> TrainConfig {
        self.embed_config(self.seeds().glo)
    }

    pub fn loc_config(&self) -> TrainConfig {
        self.embed_config(self.seeds().loc)
    }

    pub fn train_hyper(&self) -> TrainHyper {
        TrainHyper {
            batch_size: self.batch_size,
            epochs: self.epochs,
            hidden_units: self.hidden_units,
            lr: self.lr,
            rho: self.rho,
            eps: self.eps,
            seed: self.seeds().classifier,
            threshold: self.threshold,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            protocol: self.protocol,
            k: self.folds,
            train_fraction: self.train_fraction,
            modes: self.modes.clone(),
            seed: self.seeds().folds,
        }
    }

    pub fn batch(&self) -> usize {
        self.batch_size.unwrap_or_else(|| self.kind.default_batch_size())
    }

    pub fn validate(&self) -> Result<()> {
        self.glo_config().validate()?;
        self.train_hyper().validate()?;
        if self.variants.is_empty() {
            return Err(Error::InvalidConfig("variants must not be empty".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("modes must not be empty".into()));
        }
        if self.protocol == Protocol::KFold && self.folds < 2 {
            return Err(Error::InvalidConfig("folds must be at least 2".into()));
        }
        Ok(())
    }

    fn needs_local(&self) -> bool {
        self.variants.iter().any(|v| v.uses_local())
    }

    /// Config as stored in manifests; the output directory is left out so
    /// the same run in another directory hashes identically.
    fn portable_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("out_dir");
        }
        v
    }

    /// SHA-256 of the portable config, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.portable_json().to_string().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out_dir.join(stage.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Walks,
    Glo,
    Loc,
    Features,
    Train,
    Eval,
    All,
}

impl Stage {
    pub const CHAIN: [Stage; 6] = [Stage::Walks, Stage::Glo, Stage::Loc, Stage::Features, Stage::Train, Stage::Eval];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Walks => "walks",
            Stage::Glo => "glo",
            Stage::Loc => "loc",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::All => "all",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Stage::All].into_iter().chain(Stage::CHAIN).find(|st| st.name() == s).ok_or_else(|| {
            Error::InvalidConfig(format!("unknown stage `{s}`; expected walks|glo|loc|features|train|eval|all"))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: Stage,
    pub version: String,
    pub config_hash: String,
    pub seeds: Seeds,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest> {
        let p = dir.join("manifest.json");
        let text = fs::read_to_string(&p).map_err(Error::io(&p))?;
        serde_json::from_str(&text).map_err(|e| Error::CorruptFile { path: p, msg: e.to_string() })
    }

    /// Recovers the producing config, placing its output one level above
    /// `dir`.
    pub fn config(&self, dir: &Path) -> Result<PipelineConfig> {
        let mut cfg: PipelineConfig = serde_json::from_value(self.config.clone())
            .map_err(|e| Error::CorruptFile { path: dir.join("manifest.json"), msg: e.to_string() })?;
        cfg.out_dir = dir.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }
}

fn write_manifest(cfg: &PipelineConfig, stage: Stage, outputs: Vec<String>) -> Result<()> {
    let m = Manifest {
        stage,
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config_hash: cfg.hash(),
        seeds: cfg.seeds(),
        outputs,
        config: cfg.portable_json(),
    };
    let p = cfg.stage_dir(stage).join("manifest.json");
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
    fs::write(&p, text).map_err(Error::io(&p))
}

fn stage_dir(cfg: &PipelineConfig, stage: Stage) -> Result<PathBuf> {
    let d = cfg.stage_dir(stage);
    fs::create_dir_all(&d).map_err(Error::io(&d))?;
    Ok(d)
}

/// Checks that `prereq` has run; warns when it ran under another config.
fn require(cfg: &PipelineConfig, stage: Stage, prereq: Stage, file: &str) -> Result<PathBuf> {
    let dir = cfg.stage_dir(prereq);
    let p = dir.join(file);
    if !p.exists() || !dir.join("manifest.json").is_file() {
        return Err(Error::MissingStage { stage: stage.name(), missing: p, run_first: prereq.name() });
    }
    if let Ok(m) = Manifest::load(&dir) {
        if m.config_hash != cfg.hash() {
            log::warn!("{} artifacts were produced under config {}, current is {}", prereq.name(), m.config_hash, cfg.hash());
        }
    }
    Ok(p)
}

fn write_losses(path: &Path, losses: &[f64]) -> Result<()> {
    let text: String = losses.iter().enumerate().map(|(e, l)| format!("{}\t{l:.17e}\n", e + 1)).collect();
    fs::write(path, text).map_err(Error::io(path))
}

fn load_dataset(cfg: &PipelineConfig) -> Result<Dataset> {
    if !cfg.data_dir.is_dir() {
        return Err(Error::InvalidConfig(format!("data_dir {} is not a directory", cfg.data_dir.display())));
    }
    load_ego_dataset(&cfg.data_dir, cfg.kind)
}

/// Runs one stage, or every stage in order for [`Stage::All`].
pub fn run_pipeline(cfg: &PipelineConfig, stage: Stage) -> Result<()> {
    cfg.validate()?;
    match cfg.precision {
        Precision::F32 => run_typed::<f32>(cfg, stage),
        Precision::F64 => run_typed::<f64>(cfg, stage),
    }
}

fn run_typed<T: Scalar>(cfg: &PipelineConfig, stage: Stage) -> Result<()> {
    match stage {
        Stage::All => Stage::CHAIN.into_iter().try_for_each(|s| run_typed::<T>(cfg, s)),
        Stage::Walks => stage_walks(cfg),
        Stage::Glo => stage_glo::<T>(cfg),
        Stage::Loc => stage_loc::<T>(cfg),
        Stage::Features => stage_features::<T>(cfg),
        Stage::Train => stage_train::<T>(cfg),
        Stage::Eval => stage_eval::<T>(cfg),
    }
}

fn stage_walks(cfg: &PipelineConfig) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let wc = cfg.walk_config();
    log::info!("walks: {} nodes, {} egos", ds.combined.node_count(), ds.records.len());
    let global = generate_global_corpus(&ds.combined, &wc)?;
    let ego = generate_ego_corpus(&ds, &wc)?;
    let dir = stage_dir(cfg, Stage::Walks)?;
    global.save(&dir.join("global.txt"))?;
    ego.save(&dir.join("ego.txt"))?;
    write_manifest(cfg, Stage::Walks, vec!["global.txt".into(), "ego.txt".into()])
}

fn stage_glo<T: Scalar>(cfg: &PipelineConfig) -> Result<()> {
    let corpus = Corpus::load(&require(cfg, Stage::Glo, Stage::Walks, "global.txt")?)?;
    log::info!("glo: {} walks, {} tokens", corpus.walks.len(), corpus.token_count());
    let emb = train_global::<T>(&corpus, &cfg.glo_config())?;
    let dir = stage_dir(cfg, Stage::Glo)?;
    emb.input.save(&dir.join("input.emb"))?;
    emb.output.save(&dir.join("output.emb"))?;
    write_losses(&dir.join("losses.tsv"), &emb.epoch_losses)?;
    write_manifest(cfg, Stage::Glo, vec!["input.emb".into(), "output.emb".into(), "losses.tsv".into()])
}

fn stage_loc<T: Scalar>(cfg: &PipelineConfig) -> Result<()> {
    let corpus = EgoCorpus::load(&require(cfg, Stage::Loc, Stage::Walks, "ego.txt")?)?;
    log::info!("loc: {} egos, {} tokens", corpus.walks.len(), corpus.token_count());
    let emb = train_local::<T>(&corpus, &cfg.loc_config())?;
    let dir = stage_dir(cfg, Stage::Loc)?;
    emb.egos.save(&dir.join("ego.emb"))?;
    emb.alters.save(&dir.join("alters.emb"))?;
    write_losses(&dir.join("losses.tsv"), &emb.epoch_losses)?;
    write_manifest(cfg, Stage::Loc, vec!["ego.emb".into(), "alters.emb".into(), "losses.tsv".into()])
}

fn stage_features<T: Scalar>(cfg: &PipelineConfig) -> Result<()> {
    let glo = EmbeddingTable::<T>::load(&require(cfg, Stage::Features, Stage::Glo, "input.emb")?)?;
    let loc = if cfg.needs_local() {
        Some(EmbeddingTable::<T>::load(&require(cfg, Stage::Features, Stage::Loc, "ego.emb")?)?)
    } else {
        None
    };
    let ds = load_dataset(cfg)?;
    let dir = stage_dir(cfg, Stage::Features)?;
    for &v in &cfg.variants {
        let set = build_dataset(&ds, v, &glo, loc.as_ref(), cfg.profile_bits, cfg.match_ones_only)?;
        log::info!("features: {v} {} instances x {}", set.len(), set.width);
        set.save(&dir.join(v.name()))?;
    }
    write_manifest(cfg, Stage::Features, cfg.variants.iter().map(|v| v.name().to_owned()).collect())
}

fn load_sets<T: Scalar>(cfg: &PipelineConfig, stage: Stage) -> Result<Vec<InstanceSet<T>>> {
    let mut sets: Vec<InstanceSet<T>> = Vec::with_capacity(cfg.variants.len());
    for &v in &cfg.variants {
        let set = InstanceSet::load(&require(cfg, stage, Stage::Features, v.name())?)?;
        if let Some(first) = sets.first() {
            if first.pairs != set.pairs {
                return Err(Error::InvalidConfig(format!("variant {v} has a different instance list")));
            }
        }
        sets.push(set);
    }
    Ok(sets)
}

fn predictions_path(dir: &Path, v: FeatureVariant, m: OutputMode) -> PathBuf {
    dir.join(v.name()).join(m.name()).join("predictions.tsv")
}

/// Fits one model per (variant, mode, fold) and records the label sets it
/// predicts for its held-out rows.
fn stage_train<T: Scalar>(cfg: &PipelineConfig) -> Result<()> {
    let sets = load_sets::<T>(cfg, Stage::Train)?;
    let ec = cfg.eval_config();
    let plan = ec.plan(sets[0].len())?;
    let hyper = cfg.train_hyper();
    let batch = cfg.batch();
    let dir = stage_dir(cfg, Stage::Train)?;
    let plan_path = dir.join("folds.json");
    fs::write(&plan_path, serde_json::to_string(&plan).expect("plan serializes") + "\n")
        .map_err(Error::io(&plan_path))?;

    let k = plan.k();
    let jobs: Vec<(usize, OutputMode, usize)> = (0..sets.len())
        .flat_map(|s| cfg.modes.iter().flat_map(move |&m| (0..k).map(move |f| (s, m, f))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(s, mode, fold)| -> Result<String> {
            let set = &sets[s];
            let (model, h) = train_fold(set, &plan, fold, mode, batch, &hyper)?;
            let rule = h.decision_rule(mode, set.n_labels());
            let mut pred = String::new();
            for &i in &plan.folds[fold] {
                let labels = rule.apply(&model.forward(set.x_row(i))?.scores);
                let ids: Vec<String> = labels.iter().map(usize::to_string).collect();
                let _ = writeln!(pred, "{fold}\t{i}\t{}", ids.join(","));
            }
            if cfg.save_fold_models {
                let d = predictions_path(&dir, set.variant, mode).with_file_name("");
                fs::create_dir_all(&d).map_err(Error::io(&d))?;
                save_checkpoint(&model, &h, &d.join(format!("fold-{fold:02}.ckpt")))?;
            }
            log::info!("train: {} {mode} fold {fold} done", set.variant);
            Ok(pred)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut outputs = vec!["folds.json".to_owned()];
    for (chunk, group) in results.chunks(plan.k()).zip(jobs.chunks(plan.k())) {
        let (s, mode, _) = group[0];
        let p = predictions_path(&dir, sets[s].variant, mode);
        let parent = p.parent().expect("has parent");
        fs::create_dir_all(parent).map_err(Error::io(parent))?;
        let text: String = chunk.concat();
        fs::write(&p, text).map_err(Error::io(&p))?;
        outputs.push(p.strip_prefix(&dir).unwrap_or(&p).display().to_string());
    }
    write_manifest(cfg, Stage::Train, outputs)
}

/// Per fold, `(row, predicted labels)` in file order.
type FoldPredictions = Vec<Vec<(usize, Vec<usize>)>>;

fn read_predictions(path: &Path, k: usize) -> Result<FoldPredictions> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut folds: FoldPredictions = vec![Vec::new(); k];
    for (no, line) in text.lines().enumerate() {
        let bad = |m: &str| Error::parse(path, no + 1, m);
        let mut it = line.split('\t');
        let (Some(f), Some(r), Some(l), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(bad("expected `fold<TAB>row<TAB>labels`"));
        };
        let f: usize = f.parse().map_err(|_| bad("bad fold"))?;
        let r: usize = r.parse().map_err(|_| bad("bad row"))?;
        let labels = l
            .split(',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| bad("bad label id")))
            .collect::<Result<Vec<usize>>>()?;
        folds.get_mut(f).ok_or_else(|| bad("fold out of range"))?.push((r, labels));
    }
    Ok(folds)
}

fn stage_eval<T: Scalar>(cfg: &PipelineConfig) -> Result<()> {
    let plan_path = require(cfg, Stage::Eval, Stage::Train, "folds.json")?;
    let plan: FoldPlan = serde_json::from_str(&fs::read_to_string(&plan_path).map_err(Error::io(&plan_path))?)
        .map_err(|e| Error::CorruptFile { path: plan_path.clone(), msg: e.to_string() })?;
    let sets = load_sets::<T>(cfg, Stage::Eval)?;
    let ec = cfg.eval_config();
    let mut report = Report::new(cfg.kind.as_str(), ec.protocol, plan.k(), cfg.seed, &cfg.hash());
    report.instances = sets[0].len();
    report.labels = sets[0].n_labels();
    for set in &sets {
        for &mode in &cfg.modes {
            let rel = predictions_path(Path::new(""), set.variant, mode);
            let p = require(cfg, Stage::Eval, Stage::Train, &rel.display().to_string())?;
            let folds = read_predictions(&p, plan.k())?;
            let mut scores = Vec::with_capacity(plan.k());
            for (f, rows) in folds.iter().enumerate() {
                let ids: Vec<usize> = rows.iter().map(|(r, _)| *r).collect();
                if ids != plan.folds[f] {
                    return Err(Error::CorruptFile { path: p.clone(), msg: format!("fold {f} rows differ from folds.json") });
                }
                let truth: Vec<&[u8]> = ids.iter().map(|&i| set.y_row(i)).collect();
                let pred: Vec<Vec<usize>> = rows.iter().map(|(_, l)| l.clone()).collect();
                scores.push((ids.len(), f1_scores(&truth, &pred, set.n_labels())?));
            }
            report.rows.push(VariantResult::from_folds(set.variant, mode, scores));
        }
    }
    let dir = stage_dir(cfg, Stage::Eval)?;
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(Error::io(&p))
    };
    write("report.txt", report.to_table())?;
    write("report.kv", report.to_key_values())?;
    write("report.json", serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    write_manifest(cfg, Stage::Eval, vec!["report.txt".into(), "report.kv".into(), "report.json".into()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{write_planted_circles, PlantedCircles};

    fn small(data: &Path, out: &Path) -> PipelineConfig {
        PipelineConfig {
            data_dir: data.to_owned(),
            out_dir: out.to_owned(),
            walks_per_node: 4,
            walk_length: 20,
            dim: 16,
            embed_epochs: 2,
            profile_bits: 24,
            hidden_units: 16,
            epochs: 10,
            folds: 3,
            ..PipelineConfig::default()
        }
    }

    fn read_tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
        let mut out = Vec::new();
        let mut stack = vec![root.to_owned()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.push((p.strip_prefix(root).unwrap().to_owned(), fs::read(&p).unwrap()));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn default_toml_matches_default_config() {
        assert_eq!(PipelineConfig::from_toml(DEFAULT_CONFIG_TOML).unwrap(), PipelineConfig::default());
        let d = PipelineConfig::default();
        assert_eq!((d.dim, d.context, d.profile_bits, d.epochs, d.folds, d.batch()), (300, 2, 500, 50, 10, 32));
        assert_eq!(d.lr, 0.001);
        assert_eq!(PipelineConfig::from_toml(&d.to_toml()).unwrap(), d);
        assert!(PipelineConfig::from_toml("dimm = 3").is_err());
    }

    #[test]
    fn all_stages_deterministic_and_idempotent() {
        let data = tempfile::tempdir().unwrap();
        write_planted_circles(data.path(), &PlantedCircles::default()).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ca = small(data.path(), a.path());
        let cb = small(data.path(), b.path());
        run_pipeline(&ca, Stage::All).unwrap();
        run_pipeline(&cb, Stage::All).unwrap();
        let ta = read_tree(a.path());
        assert_eq!(ta, read_tree(b.path()));

        let report = fs::read_to_string(a.path().join("eval/report.txt")).unwrap();
        for v in FeatureVariant::ALL {
            assert_eq!(report.lines().filter(|l| l.starts_with(&format!("{} ", v.name()))).count(), 1);
        }
        let m = Manifest::load(&a.path().join("glo")).unwrap();
        assert_eq!(m.config_hash, ca.hash());
        assert_eq!(m.config(&a.path().join("glo")).unwrap(), ca);

        run_pipeline(&ca, Stage::Loc).unwrap();
        run_pipeline(&ca, Stage::Train).unwrap();
        assert_eq!(read_tree(a.path()), ta);
    }

    #[test]
    fn later_stage_without_prerequisite() {
        let data = tempfile::tempdir().unwrap();
        write_planted_circles(data.path(), &PlantedCircles::default()).unwrap();
        let out = tempfile::tempdir().unwrap();
        let cfg = small(data.path(), out.path());
        match run_pipeline(&cfg, Stage::Eval) {
            Err(Error::MissingStage { stage: "eval", run_first: "train", .. }) => {}
            other => panic!("{other:?}"),
        }
        match run_pipeline(&cfg, Stage::Glo) {
            Err(Error::MissingStage { run_first: "walks", .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
