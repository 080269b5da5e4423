//! The experiment as a whole: ingest, split, score, tune, evaluate, export.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use spatial_katz::eval::{evaluate, optimal_threshold, EvaluationReport, ThresholdChoice};
use spatial_katz::format::{round_sig6, sig6};
use spatial_katz::geo::{distance_matrix, weighted_adjacency, DistanceMatrix};
use spatial_katz::graph::{
    build_adjacency, build_network, candidate_pairs, ingest_movements, temporal_split, write_movements,
    CandidateUniverse, MovementRecord, RowDiagnostic, Splits, TemporalNetwork,
};
use spatial_katz::katz::{apply_distance_decay, combine_raw, read_scores, write_scores, KatzScorer, ScoreTable};
use spatial_katz::synth::{generate, SynthTruth};

use crate::config::{LoadedConfig, Model, RunConfig, ScoreBasis, SplitName};
use crate::error::{CliError, Result};
use crate::output::OutputDir;

/// Command-line adjustments applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            match cfg.synth.as_mut() {
                Some(s) => s.seed = seed,
                None => return Err(CliError::Config("--seed-override needs a [synth] block".into())),
            }
        }
        Ok(())
    }
}

/// Ingested (or generated) movements and their chronological split.
pub struct Dataset {
    pub records: Vec<MovementRecord>,
    pub rejected: Vec<RowDiagnostic>,
    pub truth: Option<SynthTruth>,
    pub network: TemporalNetwork,
    pub splits: Splits,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let spec = cfg.split_spec()?;
    let (records, rejected, truth) = match (&cfg.input, &cfg.synth) {
        (Some(path), _) => {
            let f = File::open(path).map_err(CliError::io(path))?;
            let report = ingest_movements(BufReader::new(f), &cfg.schema, &cfg.ingest_options())?;
            info!("ingested {} rows, rejected {}", report.accepted(), report.rejected.len());
            (report.records, report.rejected, None)
        }
        (None, Some(s)) => {
            let (records, truth) = generate(s)?;
            info!("generated {} movements over {} active nodes", records.len(), truth.active_nodes);
            (records, Vec::new(), Some(truth))
        }
        (None, None) => return Err(CliError::Config("one of `input` or [synth] is required".into())),
    };
    if !rejected.is_empty() {
        warn!("{} input rows were rejected; see rejected_rows.csv", rejected.len());
    }
    let network = build_network(&records)?;
    let conflicts = network.registry().conflicts().len();
    if conflicts > 0 {
        warn!("{conflicts} nodes appeared with conflicting coordinates; first-seen values kept");
    }
    let splits = temporal_split(&network, &spec)?;
    Ok(Dataset {
        records,
        rejected,
        truth,
        network,
        splits,
    })
}

/// Raw and normalized scores of one model over one universe.
pub struct ModelTables {
    pub raw: ScoreTable,
    pub norm: ScoreTable,
}

impl ModelTables {
    fn new(raw: ScoreTable) -> Self {
        let norm = raw.normalize();
        ModelTables { raw, norm }
    }
}

/// Damping and spectral information for one scored matrix.
#[derive(Debug, Clone, Serialize)]
pub struct KatzFit {
    pub basis: &'static str,
    pub matrix: &'static str,
    pub beta: f64,
    pub spectral_radius: f64,
    pub spectral_lower: f64,
    pub iterations: usize,
    pub converged: bool,
    pub closed_form: bool,
}

impl KatzFit {
    fn new(basis: &'static str, matrix: &'static str, s: &KatzScorer) -> Self {
        let r = s.radius();
        KatzFit {
            basis,
            matrix,
            beta: round_sig6(s.beta()),
            spectral_radius: round_sig6(r.value),
            spectral_lower: round_sig6(r.lower),
            iterations: r.iterations,
            converged: r.converged,
            closed_form: s.uses_closed_form(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GammaTrial {
    pub gamma: f64,
    pub choice: ThresholdChoice,
}

/// Every table the requested models need, for the validation split (when
/// used) and the test split.
pub struct Scored {
    pub gamma: f64,
    pub tuning: Vec<GammaTrial>,
    pub fits: Vec<KatzFit>,
    pub val: Option<BTreeMap<Model, ModelTables>>,
    pub test: BTreeMap<Model, ModelTables>,
}

#[derive(Default)]
struct BaseTables {
    ki: Option<ScoreTable>,
    wki: Option<ScoreTable>,
}

fn score_bases(
    cfg: &RunConfig,
    net: &TemporalNetwork,
    basis: &'static str,
    universes: &[&Arc<CandidateUniverse>],
    distances: &DistanceMatrix,
) -> Result<(Vec<BaseTables>, Vec<KatzFit>)> {
    let bases = cfg.required_bases();
    let need_ki = bases.contains(&Model::KI) || bases.contains(&Model::EWKI);
    let need_wki = bases.contains(&Model::WKI);
    let adjacency = build_adjacency(net, cfg.adjacency)?;
    let mut out: Vec<BaseTables> = universes.iter().map(|_| BaseTables::default()).collect();
    let mut fits = Vec::new();
    if need_ki {
        let scorer = KatzScorer::new(&adjacency, &cfg.katz)?;
        fits.push(KatzFit::new(basis, "A", &scorer));
        for (o, u) in out.iter_mut().zip(universes) {
            o.ki = Some(scorer.scores("KI", u)?);
        }
    }
    if need_wki {
        let weighted = weighted_adjacency(&adjacency, distances, cfg.katz.wki_transform)?;
        let scorer = KatzScorer::new(&weighted, &cfg.katz)?;
        fits.push(KatzFit::new(basis, "A_w", &scorer));
        for (o, u) in out.iter_mut().zip(universes) {
            o.wki = Some(scorer.scores("WKI", u)?);
        }
    }
    Ok((out, fits))
}

/// Normalized and combined tables for every requested model.
fn model_tables(
    cfg: &RunConfig,
    base: BaseTables,
    gamma: f64,
    distances: &DistanceMatrix,
) -> Result<BTreeMap<Model, ModelTables>> {
    let bases = cfg.required_bases();
    let mut tables = BTreeMap::new();
    if let Some(ki) = base.ki {
        if bases.contains(&Model::EWKI) {
            let ewki = apply_distance_decay(&ki, distances, gamma, Model::EWKI.name())?;
            tables.insert(Model::EWKI, ModelTables::new(ewki));
        }
        if bases.contains(&Model::KI) {
            tables.insert(Model::KI, ModelTables::new(ki));
        }
    }
    if let Some(wki) = base.wki {
        tables.insert(Model::WKI, ModelTables::new(wki));
    }
    for &m in &cfg.models {
        if let Some((a, b)) = m.parts() {
            let raw = combine_raw(&tables[&a].norm, &tables[&b].norm, cfg.combination)?;
            tables.insert(m, ModelTables::new(raw));
        }
    }
    tables.retain(|m, _| cfg.models.contains(m));
    Ok(tables)
}

/// Scores EWKI on the validation universe for each candidate decay rate.
fn tune_gamma(ki_val: &ScoreTable, distances: &DistanceMatrix, grid: &[f64]) -> Result<Vec<GammaTrial>> {
    grid.par_iter()
        .map(|&gamma| {
            let t = apply_distance_decay(ki_val, distances, gamma, Model::EWKI.name())?.normalize();
            let choice = optimal_threshold(t.scores(), t.labels())?;
            Ok(GammaTrial { gamma, choice })
        })
        .collect()
}

/// First grid value reaching the highest validation F1.
fn best_gamma(trials: &[GammaTrial]) -> f64 {
    let mut best = trials[0];
    for t in &trials[1..] {
        if t.choice.confusion.f1_cmp(&best.choice.confusion).is_gt() {
            best = *t;
        }
    }
    best.gamma
}

pub fn score_dataset(cfg: &RunConfig, data: &Dataset) -> Result<Scored> {
    let registry = data.network.registry();
    let distances = distance_matrix(registry, cfg.distance_dense_max_nodes)?;
    let val_u = Arc::new(candidate_pairs(&data.splits.val));
    let test_u = Arc::new(candidate_pairs(&data.splits.test));

    let needs_ewki = cfg.required_bases().contains(&Model::EWKI);
    let tune_gamma_now = needs_ewki && cfg.gamma_tuning.enabled;
    let need_val = cfg.tune_on == SplitName::Val || tune_gamma_now;

    let basis_net;
    let basis_name = match cfg.score_basis {
        ScoreBasis::Train => "train",
        ScoreBasis::TrainVal => "train+val",
    };
    let basis = match cfg.score_basis {
        ScoreBasis::Train => &data.splits.train,
        ScoreBasis::TrainVal => {
            basis_net = data.splits.train.union(&data.splits.val)?;
            &basis_net
        }
    };
    let absent = data.splits.test.nodes().iter().filter(|&&v| !basis.contains_node(v)).count();
    if absent > 0 {
        warn!("{absent} test nodes have no {basis_name} edges; their pairs score zero");
    }

    let (val_base, test_base, fits) = match (need_val, cfg.score_basis) {
        (true, ScoreBasis::Train) => {
            let (mut t, fits) = score_bases(cfg, basis, "train", &[&val_u, &test_u], &distances)?;
            let test = t.pop().unwrap_or_default();
            (t.pop(), test, fits)
        }
        (true, ScoreBasis::TrainVal) => {
            let (mut v, mut fits) = score_bases(cfg, &data.splits.train, "train", &[&val_u], &distances)?;
            let (mut t, more) = score_bases(cfg, basis, basis_name, &[&test_u], &distances)?;
            fits.extend(more);
            (v.pop(), t.pop().unwrap_or_default(), fits)
        }
        (false, _) => {
            let (mut t, fits) = score_bases(cfg, basis, basis_name, &[&test_u], &distances)?;
            (None, t.pop().unwrap_or_default(), fits)
        }
    };

    let tuning = match (&val_base, tune_gamma_now) {
        (Some(BaseTables { ki: Some(ki), .. }), true) => tune_gamma(ki, &distances, &cfg.gamma_tuning.grid)?,
        _ => Vec::new(),
    };
    let gamma = if tuning.is_empty() { cfg.katz.gamma } else { best_gamma(&tuning) };
    if needs_ewki {
        info!("EWKI decay rate {} per km", sig6(gamma));
    }

    let val = match val_base {
        Some(b) if cfg.tune_on == SplitName::Val => Some(model_tables(cfg, b, gamma, &distances)?),
        _ => None,
    };
    let test = model_tables(cfg, test_base, gamma, &distances)?;
    Ok(Scored {
        gamma,
        tuning,
        fits,
        val,
        test,
    })
}

/// A model's test report together with where its threshold came from.
#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    #[serde(flatten)]
    pub report: EvaluationReport,
    pub evaluated_on: SplitName,
    pub threshold_tuned_on: Option<SplitName>,
    /// F1 at the chosen threshold on the tuning split; absent for a fixed threshold.
    #[serde(serialize_with = "ser_sig6")]
    pub tuning_f1: Option<f64>,
}

fn ser_sig6<S: serde::Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_f64(round_sig6(*v)),
        None => s.serialize_none(),
    }
}

pub fn evaluate_models(cfg: &RunConfig, scored: &Scored) -> Result<Vec<ModelReport>> {
    cfg.models
        .iter()
        .map(|m| {
            let tune = match (cfg.tune_on, &scored.val) {
                (SplitName::Val, Some(val)) => &val[m].norm,
                _ => &scored.test[m].norm,
            };
            let choice = optimal_threshold(tune.scores(), tune.labels())?;
            let report = evaluate(&scored.test[m].norm, choice.threshold)?;
            Ok(ModelReport {
                report,
                evaluated_on: SplitName::Test,
                threshold_tuned_on: Some(cfg.tune_on),
                tuning_f1: Some(choice.f1),
            })
        })
        .collect()
}

fn file_stem(model: &str) -> String {
    model
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_report(out: &OutputDir, cfg: &RunConfig, r: &ModelReport) -> Result<()> {
    let stem = file_stem(&r.report.model);
    out.write_json(&format!("reports/{stem}.json"), r)?;
    if cfg.export.curves {
        let mut w = out.create(&format!("curves/{stem}_roc.csv"))?;
        r.report.roc.write_csv(&mut w)?;
        let mut w = out.create(&format!("curves/{stem}_pr.csv"))?;
        r.report.pr.write_csv(&mut w)?;
    }
    Ok(())
}

/// Metric rows by model columns; cells are the report values.
pub fn summary_csv(reports: &[&EvaluationReport]) -> String {
    let mut s = String::from("Metric");
    for r in reports {
        s.push(',');
        s.push_str(&r.model);
    }
    s.push('\n');
    let rows: [(&str, fn(&EvaluationReport) -> f64); 6] = [
        ("Threshold", |r| r.threshold),
        ("Precision", |r| r.precision),
        ("Recall", |r| r.recall),
        ("F1-Score", |r| r.f1),
        ("AUPR", |r| r.aupr),
        ("AUCROC", |r| r.auroc),
    ];
    for (name, get) in rows {
        s.push_str(name);
        for r in reports {
            s.push(',');
            s.push_str(&sig6(get(r)));
        }
        s.push('\n');
    }
    s
}

fn confusion_csv(reports: &[&EvaluationReport]) -> String {
    let mut s = String::from("model,tp,fp,fn,tn\n");
    for r in reports {
        let c = r.confusion;
        s.push_str(&format!("{},{},{},{},{}\n", r.model, c.tp, c.fp, c.fn_, c.tn));
    }
    s
}

fn split_counts(net: &TemporalNetwork) -> serde_json::Value {
    json!({"nodes": net.node_count(), "edges": net.edge_count(), "links": net.links().len()})
}

fn universe_counts(net: &TemporalNetwork) -> serde_json::Value {
    let n = net.node_count();
    json!({"nodes": n, "pairs": n * n.saturating_sub(1), "positives": net.links().len()})
}

fn write_inputs(out: &OutputDir, cfg: &RunConfig, data: &Dataset) -> Result<()> {
    if !data.rejected.is_empty() {
        let mut text = String::from("line,message\n");
        for d in &data.rejected {
            text.push_str(&format!("{},\"{}\"\n", d.line, d.message.replace('"', "\"\"")));
        }
        out.write_string("rejected_rows.csv", &text)?;
    }
    if let Some(truth) = &data.truth {
        let w = out.create("movements.csv")?;
        write_movements(w, &data.records, cfg.delimiter as u8)?;
        out.write_json("truth.json", truth)?;
    }
    Ok(())
}

fn run_summary(cfg: &RunConfig, data: &Dataset, scored: &Scored) -> serde_json::Value {
    let tuning: Vec<_> = scored
        .tuning
        .iter()
        .map(|t| json!({"gamma": round_sig6(t.gamma), "val_f1": round_sig6(t.choice.f1), "threshold": round_sig6(t.choice.threshold)}))
        .collect();
    let degenerate: Vec<_> = scored
        .test
        .values()
        .filter(|t| t.norm.is_degenerate())
        .map(|t| t.norm.model().to_owned())
        .collect();
    json!({
        "ingest": {"accepted": data.records.len(), "rejected": data.rejected.len()},
        "network": split_counts(&data.network),
        "coordinate_conflicts": data.network.registry().conflicts().len(),
        "splits": {
            "train": split_counts(&data.splits.train),
            "val": split_counts(&data.splits.val),
            "test": split_counts(&data.splits.test),
        },
        "universes": {
            "val": universe_counts(&data.splits.val),
            "test": universe_counts(&data.splits.test),
        },
        "score_basis": cfg.score_basis,
        "threshold_tuned_on": cfg.tune_on,
        "katz": scored.fits,
        "gamma": round_sig6(scored.gamma),
        "gamma_tuning": tuning,
        "degenerate_tables": degenerate,
    })
}

fn write_scores_and_summary(out: &OutputDir, cfg: &RunConfig, data: &Dataset, scored: &Scored) -> Result<()> {
    write_inputs(out, cfg, data)?;
    if cfg.export.scores {
        for m in &cfg.models {
            let t = &scored.test[m];
            let w = out.create(&format!("scores/{}.csv", m.name()))?;
            write_scores(w, &t.raw, &t.norm)?;
        }
    }
    if !scored.tuning.is_empty() {
        let mut s = String::from("gamma,threshold,f1,tp,fp,fn,tn\n");
        for t in &scored.tuning {
            let c = t.choice.confusion;
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig6(t.gamma),
                sig6(t.choice.threshold),
                sig6(t.choice.f1),
                c.tp,
                c.fp,
                c.fn_,
                c.tn
            ));
        }
        out.write_string("tuning.csv", &s)?;
    }
    out.write_json("run.json", &run_summary(cfg, data, scored))
}

/// Prepares the output directory, runs `body` on a pool of `cfg.workers`
/// threads, and clears the incomplete marker only on success.
fn with_output<T: Send>(
    cfg: &RunConfig,
    text: &str,
    body: impl FnOnce(&OutputDir) -> Result<T> + Send,
) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let out = OutputDir::prepare(&cfg.output_dir, text)?;
    match pool.install(|| body(&out)) {
        Ok(v) => {
            out.finish()?;
            Ok(v)
        }
        Err(e) => {
            out.fail(&e);
            Err(e)
        }
    }
}

/// Full pipeline: every requested model scored, tuned and evaluated on test.
pub fn run(loaded: &LoadedConfig) -> Result<Vec<ModelReport>> {
    let cfg = &loaded.config;
    cfg.validate()?;
    with_output(cfg, &loaded.text, |out| {
        let data = load_dataset(cfg)?;
        let scored = score_dataset(cfg, &data)?;
        let reports = evaluate_models(cfg, &scored)?;
        write_scores_and_summary(out, cfg, &data, &scored)?;
        for r in &reports {
            write_report(out, cfg, r)?;
        }
        let plain: Vec<&EvaluationReport> = reports.iter().map(|r| &r.report).collect();
        out.write_string("summary.csv", &summary_csv(&plain))?;
        out.write_string("confusion.csv", &confusion_csv(&plain))?;
        Ok(reports)
    })
}

/// Scores only: test-split score tables plus the run summary.
pub fn score(loaded: &LoadedConfig) -> Result<()> {
    let cfg = &loaded.config;
    cfg.validate()?;
    let cfg = &RunConfig {
        export: crate::config::ExportOptions { scores: true, ..cfg.export.clone() },
        ..cfg.clone()
    };
    with_output(cfg, &loaded.text, |out| {
        let data = load_dataset(cfg)?;
        let scored = score_dataset(cfg, &data)?;
        write_scores_and_summary(out, cfg, &data, &scored)
    })
}

/// Metrics for an exported score table against the links of one split.
pub fn eval(loaded: &LoadedConfig) -> Result<ModelReport> {
    let cfg = &loaded.config;
    cfg.validate()?;
    let section = cfg
        .eval
        .clone()
        .ok_or_else(|| CliError::Config("the eval command needs an [eval] section".into()))?;
    if !section.scores.is_file() {
        return Err(CliError::Config(format!("score file {} does not exist", section.scores.display())));
    }
    with_output(cfg, &loaded.text, |out| {
        let data = load_dataset(cfg)?;
        let net = match section.split {
            SplitName::Val => &data.splits.val,
            SplitName::Test => &data.splits.test,
        };
        let universe = Arc::new(candidate_pairs(net));
        let f = File::open(&section.scores).map_err(CliError::io(&section.scores))?;
        let (_, norm) = read_scores(BufReader::new(f), universe)?;
        let (threshold, tuning_f1) = match section.threshold {
            Some(t) => (t, None),
            None => {
                let c = optimal_threshold(norm.scores(), norm.labels())?;
                (c.threshold, Some(c.f1))
            }
        };
        let report = evaluate(&norm, threshold)?;
        let r = ModelReport {
            report,
            evaluated_on: section.split,
            threshold_tuned_on: tuning_f1.map(|_| section.split),
            tuning_f1,
        };
        write_report(out, cfg, &r)?;
        out.write_string("summary.csv", &summary_csv(&[&r.report]))?;
        out.write_string("confusion.csv", &confusion_csv(&[&r.report]))?;
        Ok(r)
    })
}

/// Writes a synthetic movement file and its truth summary.
pub fn synth(loaded: &LoadedConfig) -> Result<SynthTruth> {
    let cfg = &loaded.config;
    let s = cfg
        .synth
        .as_ref()
        .ok_or_else(|| CliError::Config("the synth command needs a [synth] block".into()))?;
    s.validate()?;
    with_output(cfg, &loaded.text, |out| {
        let (records, truth) = generate(s)?;
        let w = out.create("movements.csv")?;
        write_movements(w, &records, cfg.delimiter as u8)?;
        out.write_json("truth.json", &truth)?;
        Ok(truth)
    })
}
