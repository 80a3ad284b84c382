use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use super::manifest::{now_ms, RunManifest};
use super::texts::{read_texts, write_texts, TextItem};
use super::*;
use crate::corpus::{self, PrefixRule, PrepConfig};
use crate::lm::{
    score_span, tokenize, train_ngram, DocumentScore, LanguageModel, NgramConfig, NgramModel,
    RecordReader,
};
use crate::metrics::{compute_metric_vectors, MetricContext, MetricTable, SelfBleuConfig};
use crate::sampling::{
    generate, learn_bin_distribution, BinLayout, NucleusSpec, Strategy, ThetaFile,
};
use crate::stats::{
    histograms, separation_table, train_detector, DetectorConfig, FeatureSet,
};
use crate::{rng, Error, Result};

type CmdResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Collects what a command touched, then writes the manifest.
struct Run {
    manifest: RunManifest,
    out: PathBuf,
}

impl Run {
    fn start(command: &Command, args: Vec<String>, out: &Path, seeds: Vec<u64>) -> Result<Self> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let (name, config) = match serde_json::to_value(command)? {
            serde_json::Value::Object(m) if m.len() == 1 => m.into_iter().next().unwrap(),
            other => ("unknown".to_string(), other),
        };
        Ok(Run {
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: name,
                args,
                config,
                seeds,
                inputs: Vec::new(),
                outputs: Vec::new(),
                started_unix_ms: now_ms(),
                finished_unix_ms: 0,
            },
            out: out.to_path_buf(),
        })
    }

    fn input(&mut self, p: &Path) {
        self.manifest.inputs.push(p.to_path_buf());
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.manifest.outputs.push(path.clone());
        Ok(path)
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.finished_unix_ms = now_ms();
        self.manifest.save(&self.out)
    }
}

/// A directory argument resolves to the file a previous command wrote there.
fn resolve(path: &Path, default_name: &str) -> PathBuf {
    if path.is_dir() {
        path.join(default_name)
    } else {
        path.to_path_buf()
    }
}

/// A text directory written by this tool holds one of these; any other
/// directory is read as loose `.txt` files.
fn resolve_texts(path: &Path) -> PathBuf {
    if path.is_dir() {
        for name in ["generations.jsonl", "pairs.jsonl", "corpus.jsonl"] {
            let p = path.join(name);
            if p.is_file() {
                return p;
            }
        }
    }
    path.to_path_buf()
}

pub(super) fn dispatch(command: Command, args: Vec<String>) -> CmdResult {
    match &command {
        Command::SampleCorpus(a) => sample_corpus(&command, a, args),
        Command::Prepare(a) => prepare(&command, a, args),
        Command::Train(a) => train(&command, a, args),
        Command::LearnBins(a) => learn_bins(&command, a, args),
        Command::Generate(a) => generate_cmd(&command, a, args),
        Command::Score(a) => score(&command, a, args),
        Command::Separate(a) => separate(&command, a, args),
        Command::Detect(a) => detect(&command, a, args),
        Command::Replay(a) => replay(a),
    }
}

fn sample_corpus(cmd: &Command, a: &SampleCorpusArgs, args: Vec<String>) -> CmdResult {
    if a.holdout >= a.docs {
        return Err(usage("--holdout must leave at least one training document"));
    }
    let mut run = Run::start(cmd, args, &a.out, vec![a.seed])?;
    let mut docs = corpus::sample_corpus(a.docs, a.seed);
    let heldout = docs.split_off(a.docs - a.holdout);
    let mut buf = Vec::new();
    corpus::write_corpus(&mut buf, &docs)?;
    let path = run.write("corpus.jsonl", &buf)?;
    println!("wrote {} documents ({} bytes) to {}", docs.len(), buf.len(), path.display());
    if !heldout.is_empty() {
        let mut buf = Vec::new();
        corpus::write_corpus(&mut buf, &heldout)?;
        let path = run.write("heldout.jsonl", &buf)?;
        println!("wrote {} held-out documents to {}", heldout.len(), path.display());
    }
    Ok(run.finish()?)
}

fn prepare(cmd: &Command, a: &PrepareArgs, args: Vec<String>) -> CmdResult {
    let prefix_rule = match a.leading_words {
        Some(0) => return Err(usage("--leading-words must be ≥ 1")),
        Some(w) => PrefixRule::LeadingWords(w),
        None if a.prefix_fraction > 0.0 && a.prefix_fraction < 1.0 => {
            PrefixRule::Fraction(a.prefix_fraction)
        }
        None => return Err(usage("--prefix-fraction must lie in (0, 1)")),
    };
    let mut run = Run::start(cmd, args, &a.out, vec![a.seed])?;
    let corpus_path = resolve_texts(&a.corpus);
    run.input(&corpus_path);
    let loaded = corpus::load_corpus(&corpus_path)?;
    let config = PrepConfig {
        max_chars: a.max_chars,
        subset_size: a.subset,
        prefix_rule,
        paragraph_mode: a.paragraphs,
        seed: a.seed,
    };
    let pairs = corpus::prepare(&loaded.documents, &config)?;
    let mut buf = Vec::new();
    corpus::write_pairs(&mut buf, &pairs)?;
    let path = run.write("pairs.jsonl", &buf)?;
    println!(
        "prepared {} pairs ({} empty documents skipped) into {}",
        pairs.len(),
        loaded.skipped,
        path.display()
    );
    Ok(run.finish()?)
}

fn seeded_subset<T: Clone>(items: Vec<T>, size: Option<usize>, seed: u64) -> Vec<T> {
    match size {
        Some(k) if k < items.len() => {
            let mut idx = index::sample(&mut rng::seeded(seed), items.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| items[i].clone()).collect()
        }
        _ => items,
    }
}

fn train(cmd: &Command, a: &TrainArgs, args: Vec<String>) -> CmdResult {
    let mut run = Run::start(cmd, args, &a.out, vec![a.seed])?;
    let corpus_path = resolve_texts(&a.corpus);
    run.input(&corpus_path);
    let items = seeded_subset(read_texts(&corpus_path)?, a.subset, a.seed);
    let token_docs: Vec<Vec<&str>> = items.iter().map(|t| tokenize(t.body())).collect();
    let config = NgramConfig {
        order: a.order,
        alpha: a.alpha,
        vocab_cap: a.vocab_cap,
        min_count: a.min_count,
    };
    let model = train_ngram(&token_docs, &config)?;
    run.write("model.json", model.to_json()?.as_bytes())?;
    let v = model.vocab().len();
    let layout = BinLayout::from_vocab(v);
    println!("vocabulary size: {v}");
    println!(
        "bin layout: {} bins, upper ranks {:?}, last bin to {v}",
        layout.n_bins(),
        layout.boundaries()
    );
    Ok(run.finish()?)
}

fn load_model(path: &Path) -> Result<NgramModel> {
    NgramModel::load(&resolve(path, "model.json"))
}

fn encode(model: &NgramModel, text: &str) -> Vec<u32> {
    model.vocab().encode(tokenize(text))
}

fn learn_bins(cmd: &Command, a: &LearnBinsArgs, args: Vec<String>) -> CmdResult {
    let mut run = Run::start(cmd, args, &a.out, vec![a.seed])?;
    let model_path = resolve(&a.model, "model.json");
    let corpus_path = resolve_texts(&a.corpus);
    run.input(&model_path);
    run.input(&corpus_path);
    let model = load_model(&model_path)?;
    let items = read_texts(&corpus_path)?;
    if items.is_empty() {
        return Err(Error::InsufficientData("corpus is empty".into()).into());
    }
    if a.subset > items.len() {
        log::warn!("subset of {} exceeds corpus of {}; using all", a.subset, items.len());
    }
    let items = seeded_subset(items, Some(a.subset), a.seed);
    let scores: Vec<DocumentScore<f64>> = items
        .par_iter()
        .filter_map(|t| {
            let ids = encode(&model, t.body());
            (!ids.is_empty()).then(|| score_span(&model, &t.id, &ids, 0))
        })
        .collect::<Result<_>>()?;
    let layout = BinLayout::from_vocab(LanguageModel::<f64>::vocab_size(&model));
    let theta = learn_bin_distribution(&scores, &layout)?;
    let file = ThetaFile::new(&layout, &theta);
    run.write("theta.json", serde_json::to_string(&file)?.as_bytes())?;
    println!("theta over {} documents: {:?}", scores.len(), theta.theta());
    Ok(run.finish()?)
}

fn build_strategy(a: &GenerateArgs, model_vocab: usize) -> CmdResult<Strategy<f64>> {
    let t = a.t.unwrap_or(1.0);
    let strategy = match a.strategy {
        StrategyKind::Greedy => Strategy::Greedy,
        StrategyKind::Temp => Strategy::Temperature {
            t: a.t.ok_or_else(|| usage("--strategy temp needs --t"))?,
        },
        StrategyKind::Topk => Strategy::TopK {
            k: a.k.ok_or_else(|| usage("--strategy topk needs --k"))?,
            t,
        },
        StrategyKind::Topp => Strategy::TopP {
            p: a.p.ok_or_else(|| usage("--strategy topp needs --p"))?,
            t,
        },
        StrategyKind::Burst => {
            let path = a
                .theta
                .as_ref()
                .ok_or_else(|| usage("--strategy burst needs --theta"))?;
            let (layout, theta) = ThetaFile::load(&resolve(path, "theta.json"))?.parts()?;
            if layout.vocab_size() != model_vocab {
                return Err(Error::LayoutMismatch(format!(
                    "theta file is for V={} but the model has V={model_vocab}",
                    layout.vocab_size()
                ))
                .into());
            }
            Strategy::Burst { layout, theta, t }
        }
    };
    strategy.validate().map_err(|e| usage(e.to_string()))?;
    Ok(strategy)
}

fn generate_cmd(cmd: &Command, a: &GenerateArgs, args: Vec<String>) -> CmdResult {
    if a.length < 1 {
        return Err(usage("--length must be ≥ 1"));
    }
    let model_path = resolve(&a.model, "model.json");
    let model = load_model(&model_path)?;
    let strategy = build_strategy(a, model.vocab().len())?;
    let label = strategy.to_string();

    let mut run = Run::start(cmd, args, &a.out, vec![a.seed])?;
    run.input(&model_path);
    let pairs_path = resolve_texts(&a.pairs);
    run.input(&pairs_path);
    if let Some(theta) = &a.theta {
        run.input(&resolve(theta, "theta.json"));
    }
    let items = read_texts(&pairs_path)?;
    log::info!("generating {} continuations of {} tokens ({label})", items.len(), a.length);
    let out: Vec<TextItem> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let prefix = item.prefix.clone().unwrap_or_default();
            let prefix_ids = encode(&model, &prefix);
            let mut r = rng::stream_rng(a.seed, i as u64);
            let ids = generate(&model, &prefix_ids, &strategy, a.length, &mut r)?;
            let continuation = model.vocab().decode(&ids[prefix_ids.len()..]);
            let full = if prefix.trim().is_empty() {
                continuation.clone()
            } else {
                format!("{} {continuation}", prefix.trim_end())
            };
            Ok(TextItem {
                id: item.id.clone(),
                source: Some(label.clone()),
                prefix: Some(prefix),
                continuation: Some(continuation),
                full: Some(full),
                text: None,
            })
        })
        .collect::<Result<_>>()?;
    let mut buf = Vec::new();
    write_texts(&mut buf, &out)?;
    let path = run.write("generations.jsonl", &buf)?;
    println!("generated {} continuations ({label}) into {}", out.len(), path.display());
    Ok(run.finish()?)
}

fn parse_specs(s: &str) -> CmdResult<Vec<NucleusSpec>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<NucleusSpec>().map_err(|e| usage(e.to_string())))
        .collect()
}

fn score(cmd: &Command, a: &ScoreArgs, args: Vec<String>) -> CmdResult {
    let specs = parse_specs(&a.nucleus_specs)?;
    let mut run = Run::start(cmd, args, &a.out, vec![a.seed])?;

    // (source, score) in input order
    let (scored, vocab_size): (Vec<(String, DocumentScore<f64>)>, usize) = match (&a.model, &a.records) {
        (Some(model_path), _) => {
            let texts = &resolve_texts(a.texts.as_ref().ok_or_else(|| usage("--model needs --texts"))?);
            let model_path = resolve(model_path, "model.json");
            run.input(&model_path);
            run.input(texts);
            let model = load_model(&model_path)?;
            let items = read_texts(texts)?;
            log::info!("scoring {} texts from {}", items.len(), texts.display());
            let scored: Vec<Option<(String, DocumentScore<f64>)>> = items
                .par_iter()
                .map(|item| {
                    let ids = encode(&model, item.body());
                    let start = match (&item.prefix, a.include_prefix) {
                        (Some(p), false) => tokenize(p).len(),
                        _ => 0,
                    };
                    if start >= ids.len() {
                        log::warn!("`{}` has no tokens to score; skipped", item.id);
                        return Ok(None);
                    }
                    let source = item
                        .source
                        .clone()
                        .or_else(|| a.source.clone())
                        .unwrap_or_else(|| "real".to_string());
                    Ok(Some((source, score_span(&model, &item.id, &ids, start)?)))
                })
                .collect::<Result<_>>()?;
            (scored.into_iter().flatten().collect(), model.vocab().len())
        }
        (None, Some(records)) => {
            run.input(records);
            let reader = RecordReader::<_, f64>::open(records)?;
            let v = reader.vocab_size();
            let source = a.source.clone().unwrap_or_else(|| "real".to_string());
            let docs = reader
                .map(|d| d.map(|d| (source.clone(), d)))
                .collect::<Result<Vec<_>>>()?;
            (docs, v)
        }
        (None, None) => return Err(usage("one of --model or --records is required")),
    };

    let context = MetricContext {
        layout: BinLayout::from_vocab(vocab_size),
        recoverability: specs,
    };
    let bleu = SelfBleuConfig {
        max_n: a.self_bleu_max_n,
        max_refs: a.self_bleu_refs,
        seed: a.seed,
    };
    // self-BLEU is computed within each source's collection
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (s, _)) in scored.iter().enumerate() {
        groups.entry(s.as_str()).or_default().push(i);
    }
    let mut vectors = vec![None; scored.len()];
    for (source, idx) in groups {
        log::info!("metrics for {} `{source}` documents", idx.len());
        let docs: Vec<DocumentScore<f64>> = idx.iter().map(|&i| scored[i].1.clone()).collect();
        let vs = compute_metric_vectors(&docs, source, &context, (!a.no_self_bleu).then_some(&bleu))?;
        for (i, v) in idx.into_iter().zip(vs) {
            vectors[i] = Some(v);
        }
    }
    let vectors: Vec<_> = vectors.into_iter().flatten().collect();
    let table = MetricTable::from_vectors(&vectors)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    let path = run.write("metrics.csv", &buf)?;
    println!("scored {} documents into {}", table.rows.len(), path.display());
    Ok(run.finish()?)
}

fn load_table(run: &mut Run, path: &Path) -> Result<MetricTable> {
    let path = resolve(path, "metrics.csv");
    run.input(&path);
    MetricTable::load(&path)
}

#[derive(Serialize)]
struct SeparationRow<'a> {
    sampler: &'a str,
    metric: &'a str,
    #[serde(rename = "D")]
    d: f64,
    n_real: usize,
    n_synth: usize,
}

fn separate(cmd: &Command, a: &SeparateArgs, args: Vec<String>) -> CmdResult {
    let mut run = Run::start(cmd, args, &a.out, vec![])?;
    let real = load_table(&mut run, &a.real)?;
    let mut synth = Vec::new();
    for p in &a.synth {
        synth.push(load_table(&mut run, p)?);
    }
    let reports = separation_table(&real, &synth)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &reports {
        w.serialize(SeparationRow {
            sampler: &r.sampler,
            metric: &r.metric,
            d: r.ks_statistic,
            n_real: r.n_real,
            n_synth: r.n_synth,
        })
        .map_err(Error::from)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    let path = run.write("separation.csv", &buf)?;

    let mut tables: Vec<&MetricTable> = vec![&real];
    tables.extend(synth.iter());
    let mut n_hist = 0;
    for metric in real.scalar_columns() {
        for h in histograms(&tables, &metric, a.bins) {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["bin", "lower", "upper", "count"]).map_err(Error::from)?;
            for (i, c) in h.counts.iter().enumerate() {
                w.write_record([
                    i.to_string(),
                    h.edges[i].to_string(),
                    h.edges[i + 1].to_string(),
                    c.to_string(),
                ])
                .map_err(Error::from)?;
            }
            let buf = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
            run.write(&format!("histograms/{}__{}.csv", h.source, h.metric), &buf)?;
            n_hist += 1;
        }
    }
    println!("{} separation rows into {}; {n_hist} histograms", reports.len(), path.display());
    let mut by_sampler: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in &reports {
        let e = by_sampler.entry(&r.sampler).or_default();
        e.0 += r.ks_statistic;
        e.1 += 1;
    }
    for (s, (sum, n)) in by_sampler {
        println!("  {s}: mean D {:.3} over {n} metrics", sum / n as f64);
    }
    Ok(run.finish()?)
}

fn detect(cmd: &Command, a: &DetectArgs, args: Vec<String>) -> CmdResult {
    let mut run = Run::start(cmd, args, &a.out, vec![a.seed])?;
    let real = load_table(&mut run, &a.real)?;
    let synth = load_table(&mut run, &a.synth)?;
    let set = match a.features {
        FeatureArg::Gltr => FeatureSet::Gltr,
        FeatureArg::All => FeatureSet::All,
    };
    let config = DetectorConfig {
        learning_rate: a.learning_rate,
        l2: a.l2,
        max_epochs: a.max_epochs,
        tolerance: a.tolerance,
        seed: a.seed,
        train_fraction: a.train_fraction,
    };
    log::info!("fitting detector on {} real and {} synthetic rows", real.rows.len(), synth.rows.len());
    let report = train_detector(&real, &synth, set, &config)?;
    run.write("detector.json", serde_json::to_string_pretty(&report)?.as_bytes())?;

    let sampler = synth.sources().join("+");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sampler", "features", "f1", "macro_f1", "n_train", "n_test"])
        .map_err(Error::from)?;
    w.write_record([
        sampler.clone(),
        set.to_string(),
        report.f1.to_string(),
        report.macro_f1.to_string(),
        report.n_train.to_string(),
        report.n_test.to_string(),
    ])
    .map_err(Error::from)?;
    let buf = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    run.write("report.csv", &buf)?;
    println!(
        "{sampler} ({} features): held-out F1 {:.4}, macro F1 {:.4}",
        set, report.f1, report.macro_f1
    );
    Ok(run.finish()?)
}

fn replay(a: &ReplayArgs) -> CmdResult {
    let manifest = RunManifest::load(&a.manifest)?;
    let mut args = manifest.args.clone();
    if let Some(out) = &a.out {
        let out = out.to_string_lossy().into_owned();
        match args.iter().position(|x| x == "--out") {
            Some(i) if i + 1 < args.len() => args[i + 1] = out,
            _ => match args.iter().position(|x| x.starts_with("--out=")) {
                Some(i) => args[i] = format!("--out={out}"),
                None => return Err(usage("recorded command has no --out to override")),
            },
        }
    }
    let mut argv = vec!["burstlab".to_string()];
    argv.extend(args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| usage(e.to_string()))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(usage("refusing to replay a replay"));
    }
    dispatch(cli.command, args)
}
