use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use qrw_core::eval::io::read_evalset;
use qrw_core::eval::{equivalence_curve, partition_metrics, rewritability_predictions, EvalRecord};
use qrw_core::format::SUPPORTED;
use qrw_core::markov::snapshot::{read_graph, write_graph};
use qrw_core::markov::{
    rewrite_table, top_rewrites, SolverConfig, DEFAULT_EPS, DEFAULT_MAX_ITERATIONS, DEFAULT_MIN_REWRITE_SUPPORT,
    DEFAULT_MIN_STATE_SUPPORT,
};
use qrw_core::meta::{AlphaConfig, DEFAULT_CONFIDENCE, DEFAULT_ETA, DEFAULT_IQ_THRESHOLD};
use qrw_core::session::io::{read_log, read_sessions, write_sessions};
use qrw_core::session::{
    assign_outcome, parse_hypothesis, segment_sessions, InterjectionLexicon, RecordedOrHeuristic,
    DEFAULT_MAX_GAP_SECS,
};
use qrw_core::sim::{run_loop, write_csv, write_simlog, Scenario, SimulationConfig};
use qrw_core::template::io::{read_templates, write_dags};
use qrw_core::template::{abridge_dialog, AbridgeConfig, ArticleRules, DagStore, DEFAULT_MIN_SAMPLES};
use qrw_core::train::{train, TrainConfig, TrainMode};
use qrw_core::Graph;

use crate::config::Config;
use crate::{AbridgeArgs, Cli, Command, EvaluateArgs, IngestArgs, ResolveArgs, SimulateArgs, SolverArgs, TrainArgs, UsageError};

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    if cli.version {
        writeln!(stdout, "qrw {}", env!("CARGO_PKG_VERSION"))?;
        for format in SUPPORTED {
            writeln!(stdout, "{format}")?;
        }
        return Ok(());
    }
    let config = match &cli.config {
        Some(path) => Config::parse(&read(path)?)?,
        None => Config::default(),
    };
    match cli.command {
        None => Err(UsageError("a subcommand is required".into()).into()),
        Some(Command::Ingest(a)) => ingest(a, &config),
        Some(Command::Abridge(a)) => abridge(a, &config),
        Some(Command::Train(a)) => train_cmd(a, &config),
        Some(Command::Resolve(a)) => resolve(a, &config, stdout),
        Some(Command::Simulate(a)) => simulate(a, &config),
        Some(Command::Evaluate(a)) => evaluate(a, &config, stdout),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write into {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn emit(output: Option<&Path>, contents: &str, stdout: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => write_atomic(path, contents),
        None => Ok(stdout.write_all(contents.as_bytes())?),
    }
}

fn lexicon(flag: Option<&Path>, config: &Config) -> Result<InterjectionLexicon> {
    match flag.map(Path::to_path_buf).or_else(|| config.get("lexicon").map(Into::into)) {
        Some(path) => Ok(InterjectionLexicon::parse(&read(&path)?)),
        None => Ok(InterjectionLexicon::english()),
    }
}

fn mode(flag: Option<String>, config: &Config) -> Result<TrainMode> {
    let text = config.resolve(flag, "mode", "discounting".to_string())?;
    Ok(text.parse().map_err(UsageError)?)
}

fn probability(name: &str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(UsageError(format!("{name} = {value} is outside [0, 1]")).into())
    }
}

fn alpha_config(eta: Option<f64>, confidence: Option<f64>, config: &Config) -> Result<AlphaConfig> {
    let eta = config.resolve(eta, "eta", DEFAULT_ETA)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(UsageError(format!("eta = {eta} is outside (0, 1]")).into());
    }
    let confidence = config.resolve(confidence, "confidence", DEFAULT_CONFIDENCE)?;
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(UsageError(format!("confidence = {confidence} is outside (0, 1)")).into());
    }
    Ok(AlphaConfig {
        eta,
        confidence,
        ..AlphaConfig::default()
    })
}

fn solver(args: &SolverArgs, config: &Config) -> Result<SolverConfig> {
    let eps = config.resolve(args.eps, "eps", DEFAULT_EPS)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(UsageError(format!("eps = {eps} must be positive")).into());
    }
    Ok(SolverConfig {
        eps,
        max_iterations: config.resolve(args.max_iterations, "max_iterations", DEFAULT_MAX_ITERATIONS)?,
    })
}

fn ingest(a: IngestArgs, config: &Config) -> Result<()> {
    let max_gap = config.resolve(a.max_gap, "max_gap", DEFAULT_MAX_GAP_SECS)?;
    let threshold = probability("iq_threshold", config.resolve(a.iq_threshold, "iq_threshold", DEFAULT_IQ_THRESHOLD)?)?;
    let lexicon = lexicon(a.lexicon.as_deref(), config)?;
    let mut events = read_log(&read(&a.input)?).with_context(|| format!("in {}", a.input.display()))?;
    events.sort_by(|x, y| (&x.customer_id, x.turn.timestamp).cmp(&(&y.customer_id, y.turn.timestamp)));
    let scorer = RecordedOrHeuristic::new(lexicon.clone());
    let sessions = segment_sessions(&events, max_gap)?
        .into_iter()
        .map(|s| assign_outcome(s, &scorer, threshold, &lexicon))
        .collect::<Result<Vec<_>, _>>()?;
    write_atomic(&a.output, &write_sessions(&sessions)?)
}

fn abridge(a: AbridgeArgs, config: &Config) -> Result<()> {
    let language = config.resolve(a.language, "language", "en".to_string())?;
    let min_samples = config.resolve(a.min_samples, "min_samples", DEFAULT_MIN_SAMPLES)?;
    let templates = read_templates(&read(&a.templates)?).with_context(|| format!("in {}", a.templates.display()))?;
    let store = DagStore::from_templates(&templates, min_samples)?;
    let abridge_config = AbridgeConfig {
        articles: ArticleRules::for_language(&language),
        language,
        lexicon: lexicon(a.lexicon.as_deref(), config)?,
        ..AbridgeConfig::default()
    };
    let sessions = read_sessions(&read(&a.input)?).with_context(|| format!("in {}", a.input.display()))?;
    let abridged = sessions
        .iter()
        .enumerate()
        .map(|(i, s)| abridge_dialog(s, &store, &abridge_config).with_context(|| format!("session {i}")))
        .collect::<Result<Vec<_>>>()?;
    if let Some(path) = &a.dags {
        let dags: Vec<_> = store.iter().cloned().collect();
        write_atomic(path, &write_dags(&dags)?)?;
    }
    write_atomic(&a.output, &write_sessions(&abridged)?)
}

fn train_cmd(a: TrainArgs, config: &Config) -> Result<()> {
    let train_config = TrainConfig {
        mode: mode(a.mode, config)?,
        min_state_support: config.resolve(a.min_state_support, "min_state_support", DEFAULT_MIN_STATE_SUPPORT)?,
        iq_threshold: probability("iq_threshold", config.resolve(a.iq_threshold, "iq_threshold", DEFAULT_IQ_THRESHOLD)?)?,
        alpha: alpha_config(a.eta, a.confidence, config)?,
    };
    let sessions = read_sessions(&read(&a.input)?).with_context(|| format!("in {}", a.input.display()))?;
    let scorer = RecordedOrHeuristic::new(lexicon(a.lexicon.as_deref(), config)?);
    let graph: Graph = train(&sessions, &train_config, &scorer)?;
    write_atomic(&a.output, &write_graph(&graph))
}

#[derive(Serialize)]
struct RankedRewrite {
    rank: usize,
    source: String,
    target: String,
    score: f64,
}

fn resolve(a: ResolveArgs, config: &Config, stdout: &mut dyn Write) -> Result<()> {
    let top = config.resolve(a.top, "top", 5)?;
    let min_support = config.resolve(a.min_support, "min_support", DEFAULT_MIN_REWRITE_SUPPORT)?;
    let solver = solver(&a.solver, config)?;
    let hypothesis = a
        .hypothesis
        .as_deref()
        .map(parse_hypothesis)
        .transpose()
        .map_err(|e| UsageError(format!("--hypothesis: {e}")))?;
    let graph: Graph = read_graph(&read(&a.graph)?).with_context(|| format!("in {}", a.graph.display()))?;
    let mut out = String::new();
    match hypothesis {
        Some(h) => {
            let source = graph.index_of(&h)?;
            for (i, c) in top_rewrites(&graph, source, top, min_support, &solver)?.iter().enumerate() {
                let record = RankedRewrite {
                    rank: i + 1,
                    source: h.to_string(),
                    target: graph.space().hypothesis(c.target).expect("transient target").to_string(),
                    score: c.score,
                };
                out.push_str(&serde_json::to_string(&record)?);
                out.push('\n');
            }
        }
        None => {
            for (source, target) in rewrite_table(&graph, min_support, &solver)?.iter() {
                let s = graph.index_of(source)?;
                let t = graph.index_of(target)?;
                let score = qrw_core::markov::phi_infinity(&graph, s, t, &solver)?;
                let record = RankedRewrite {
                    rank: 1,
                    source: source.to_string(),
                    target: target.to_string(),
                    score,
                };
                out.push_str(&serde_json::to_string(&record)?);
                out.push('\n');
            }
        }
    }
    emit(a.output.as_deref(), &out, stdout)
}

fn simulate(a: SimulateArgs, config: &Config) -> Result<()> {
    let scenario: Scenario = config
        .resolve(a.scenario, "scenario", "type2".to_string())?
        .parse()
        .map_err(UsageError)?;
    let mut sim = SimulationConfig::new(
        mode(a.mode, config)?,
        config.resolve(a.days, "days", 60)?,
        config.resolve(a.sessions_per_day, "sessions_per_day", 60)?,
        a.seed,
    );
    sim.min_rewrite_support = config.resolve(a.min_support, "min_support", DEFAULT_MIN_REWRITE_SUPPORT)?;
    sim.min_state_support = config.resolve(a.min_state_support, "min_state_support", DEFAULT_MIN_STATE_SUPPORT)?;
    sim.iq_threshold = probability("iq_threshold", config.resolve(a.iq_threshold, "iq_threshold", DEFAULT_IQ_THRESHOLD)?)?;
    sim.alpha = alpha_config(a.eta, a.confidence, config)?;
    sim.solver = solver(&a.solver, config)?;
    if sim.days == 0 || sim.sessions_per_day == 0 {
        bail!(UsageError("days and sessions_per_day must be at least 1".into()));
    }

    let run = run_loop(&scenario.world(a.seed), &sim)?;
    let records = run.log_records();
    if let Some(dir) = &a.snapshots {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for day in &run.days {
            write_atomic(&dir.join(format!("day-{:03}.graph", day.day)), &write_graph(&day.graph))?;
        }
    }
    if let Some(path) = &a.sessions {
        write_atomic(path, &write_sessions(&run.sessions)?)?;
    }
    if let Some(path) = &a.csv {
        write_atomic(path, &write_csv(&records))?;
    }
    write_atomic(&a.output, &write_simlog(&records)?)
}

#[derive(Serialize)]
struct EvalSummary {
    requests: usize,
    pairs: usize,
    positive_pairs: usize,
    pr_auc: f64,
    best_threshold: f64,
    best_f1: f64,
    precision: f64,
    recall: f64,
    accuracy: f64,
    f1: f64,
}

fn evaluate(a: EvaluateArgs, config: &Config, stdout: &mut dyn Write) -> Result<()> {
    let solver = solver(&a.solver, config)?;
    let graph: Graph = read_graph(&read(&a.graph)?).with_context(|| format!("in {}", a.graph.display()))?;
    let records: Vec<EvalRecord> = read_evalset(&read(&a.evalset)?).with_context(|| format!("in {}", a.evalset.display()))?;
    let curve = equivalence_curve(&graph, &records, &solver)?;
    let labels: Vec<bool> = records.iter().map(EvalRecord::label).collect();
    let partition = partition_metrics(&rewritability_predictions(&graph, &records, &solver)?, &labels)?;
    let best = curve.best_f1();
    let pairs: usize = records.iter().map(|r| r.positives.len() + r.negatives.len()).sum();
    let summary = EvalSummary {
        requests: records.len(),
        pairs,
        positive_pairs: records.iter().map(|r| r.positives.len()).sum(),
        pr_auc: curve.area,
        best_threshold: best.threshold,
        best_f1: best.f1(),
        precision: partition.precision,
        recall: partition.recall,
        accuracy: partition.accuracy,
        f1: partition.f1,
    };
    if let Some(path) = &a.curve {
        let mut csv = String::from("threshold,precision,recall\n");
        for p in &curve.points {
            csv.push_str(&format!("{},{},{}\n", p.threshold, p.precision, p.recall));
        }
        write_atomic(path, &csv)?;
    }
    let mut text = serde_json::to_string(&summary)?;
    text.push('\n');
    emit(a.output.as_deref(), &text, stdout)
}
