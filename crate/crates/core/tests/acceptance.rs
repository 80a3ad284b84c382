//! Acceptance criteria, one test each. Every test writes a single
//! `criterion N ... PASS|FAIL` line straight to stderr, so it shows up
//! even when the harness captures output.
//!
//! The trend check (criterion 7) is reported and never fails the build.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use burstlab::corpus::{prepare, sample_corpus, PrepConfig, PreparedPair};
use burstlab::lm::{score_span, tokenize, train_ngram, NextTokenDistribution, NgramConfig, NgramModel};
use burstlab::metrics::{
    compute_metric_vectors, gltr_fractions, log_likelihood, log_rank_score, perplexity,
    rank_score, recoverability, MetricContext, MetricRow, MetricTable, SelfBleuConfig,
};
use burstlab::rng::{seeded, stream_rng};
use burstlab::sampling::{
    burst_modify, generate, learn_bin_distribution, sample_token, BinDistribution, BinLayout,
    NucleusSpec, Strategy,
};
use burstlab::stats::{ks_statistic, separation_table, train_detector, DetectorConfig, FeatureSet};
use burstlab::DocScore;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn emit(line: String) {
    // bypasses the test harness's capture of print macros
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn report(n: u32, pass: bool, detail: impl std::fmt::Display) {
    emit(format!("criterion {n} ... {}: {detail}", if pass { "PASS" } else { "FAIL" }));
}

fn report_soft(n: u32, agree: bool, detail: impl std::fmt::Display) {
    let verdict = if agree { "AGREES" } else { "DISAGREES" };
    emit(format!("criterion {n} ... REPORTED (soft, {verdict}): {detail}"));
}

/// Sample corpus split into a training half and a held-out half, a bigram
/// model on the first half, and prepared prefix pairs from the second.
struct Bench {
    model: NgramModel,
    pairs: Vec<PreparedPair>,
}

fn bench() -> &'static Bench {
    static B: OnceLock<Bench> = OnceLock::new();
    B.get_or_init(|| {
        let mut docs = sample_corpus(2000, 7);
        let heldout = docs.split_off(1000);
        let bytes: usize = docs.iter().map(|d| d.text.len()).sum();
        assert!(bytes > 2_000_000, "training text is {bytes} bytes");
        let tokens: Vec<Vec<&str>> = docs.iter().map(|d| tokenize(&d.text)).collect();
        let model = train_ngram(&tokens, &NgramConfig::default()).unwrap();
        let pairs = prepare(&heldout, &PrepConfig::default()).unwrap();
        Bench { model, pairs }
    })
}

impl Bench {
    fn v(&self) -> usize {
        self.model.vocab().len()
    }

    fn encode(&self, text: &str) -> Vec<u32> {
        self.model.vocab().encode(tokenize(text))
    }

    /// Continuations of the first `n` prefixes, scored on the new tokens only.
    fn generate_scored(&self, strategy: &Strategy<f64>, n: usize, length: usize, seed: u64) -> Vec<DocScore> {
        self.pairs[..n]
            .par_iter()
            .enumerate()
            .map(|(i, pair)| {
                let prefix = self.encode(&pair.prefix);
                let ids = generate(&self.model, &prefix, strategy, length, &mut stream_rng(seed, i as u64)).unwrap();
                score_span(&self.model, &pair.id, &ids, prefix.len()).unwrap()
            })
            .collect()
    }

    /// Whole generated texts (prefix included), scored as the CLI does.
    fn generate_full(&self, strategy: &Strategy<f64>, length: usize, seed: u64) -> Vec<DocScore> {
        self.pairs
            .par_iter()
            .enumerate()
            .map(|(i, pair)| {
                let prefix = self.encode(&pair.prefix);
                let ids = generate(&self.model, &prefix, strategy, length, &mut stream_rng(seed, i as u64)).unwrap();
                score_span(&self.model, &pair.id, &ids, 0).unwrap()
            })
            .collect()
    }

    fn real_scores(&self) -> &'static [DocScore] {
        static R: OnceLock<Vec<DocScore>> = OnceLock::new();
        R.get_or_init(|| {
            self.pairs
                .par_iter()
                .map(|p| score_span(&self.model, &p.id, &self.encode(&p.full), 0).unwrap())
                .collect()
        })
    }

    fn context(&self) -> MetricContext {
        MetricContext {
            layout: BinLayout::from_vocab(self.v()),
            recoverability: vec![NucleusSpec::TopK(40), NucleusSpec::TopK(50)],
        }
    }

    fn table(&self, docs: &[DocScore], source: &str) -> MetricTable {
        let v = compute_metric_vectors(docs, source, &self.context(), Some(&SelfBleuConfig::default())).unwrap();
        MetricTable::from_vectors(&v).unwrap()
    }

    fn real_table(&self) -> &'static MetricTable {
        static T: OnceLock<MetricTable> = OnceLock::new();
        T.get_or_init(|| self.table(self.real_scores(), "real"))
    }
}

/// A Zipf-like next-token distribution over `v` tokens with shuffled ids.
fn zipf_dist(v: usize, seed: u64) -> NextTokenDistribution<f64> {
    let mut ids: Vec<usize> = (0..v).collect();
    ids.shuffle(&mut seeded(seed));
    let mut p = vec![0.0; v];
    for (r, &id) in ids.iter().enumerate() {
        p[id] = 1.0 / (r as f64 + 1.0).powf(1.1);
    }
    let z: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / z).collect();
    NextTokenDistribution::from_probs(&p)
}

fn total_variation(a: &BTreeMap<u32, f64>, b: &BTreeMap<u32, f64>) -> f64 {
    let keys: std::collections::BTreeSet<u32> = a.keys().chain(b.keys()).copied().collect();
    0.5 * keys
        .iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

fn frequencies(draws: &[u32]) -> BTreeMap<u32, f64> {
    let mut m = BTreeMap::new();
    for &d in draws {
        *m.entry(d).or_insert(0.0) += 1.0;
    }
    let n = draws.len() as f64;
    m.values_mut().for_each(|c| *c /= n);
    m
}

#[test]
fn criterion_1_burst_sampling_distribution() {
    const DRAWS: usize = 100_000;
    let dist = zipf_dist(200, 1);
    let layout = BinLayout::from_vocab(200);
    assert_eq!(layout.n_bins(), 3);

    // θ = (1, 0, 0) against top-10 sampling
    let theta = BinDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
    let mut rng = seeded(11);
    let burst: Vec<u32> = (0..DRAWS)
        .map(|_| burst_modify(&dist, &theta, &layout, &mut rng).unwrap().sample(&mut rng).unwrap())
        .collect();
    let mut rng = seeded(12);
    let topk: Vec<u32> = (0..DRAWS)
        .map(|_| sample_token(&dist, NucleusSpec::TopK(10), &mut rng).unwrap())
        .collect();
    let head = &dist.entries()[..10];
    let z: f64 = head.iter().map(|e| e.1).sum();
    let exact: BTreeMap<u32, f64> = head.iter().map(|&(id, p)| (id, p / z)).collect();
    let tv_exact = total_variation(&frequencies(&burst), &exact);
    let tv_topk = total_variation(&frequencies(&burst), &frequencies(&topk));

    // general θ: bin choice frequencies
    let theta_star = [0.5, 0.3, 0.2];
    let theta = BinDistribution::new(theta_star.to_vec()).unwrap();
    let mut rng = seeded(13);
    let mut counts = [0u64; 3];
    for _ in 0..DRAWS {
        counts[burst_modify(&dist, &theta, &layout, &mut rng).unwrap().bin()] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(theta_star)
        .map(|(&o, p)| {
            let e = p * DRAWS as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new(2.0).unwrap().inverse_cdf(0.99);

    let pass = tv_exact < 0.02 && tv_topk < 0.02 && chi2 < critical;
    report(
        1,
        pass,
        format!(
            "TV(burst, exact top-10) = {tv_exact:.4}, TV(burst, top-10 draws) = {tv_topk:.4} (< 0.02); \
             chi2 = {chi2:.3} < {critical:.3} (df 2, 99%), bin counts {counts:?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_recoverability_closure() {
    let b = bench();
    let ks = [30, 40, 50];
    let ps = [0.9, 0.95, 0.99];
    let mut worst: Option<(String, f64)> = None;
    let mut docs = Vec::new();
    for (i, spec) in ks
        .iter()
        .map(|&k| NucleusSpec::TopK(k))
        .chain(ps.iter().map(|&p| NucleusSpec::TopP(p)))
        .enumerate()
    {
        let strategy = match spec {
            NucleusSpec::TopK(k) => Strategy::TopK { k, t: 1.0 },
            NucleusSpec::TopP(p) => Strategy::TopP { p, t: 1.0 },
            NucleusSpec::Full => unreachable!(),
        };
        for d in b.generate_scored(&strategy, 40, 128, 100 + i as u64) {
            let r = recoverability(&d, spec);
            if r != 1.0 && worst.as_ref().is_none_or(|w| r < w.1) {
                worst = Some((format!("{spec} on {}", d.doc_id), r));
            }
            docs.push(d);
        }
    }
    docs.extend(b.real_scores().iter().take(200).cloned());

    let mut monotone = true;
    for d in &docs {
        let rk: Vec<f64> = ks.iter().map(|&k| recoverability(d, NucleusSpec::TopK(k))).collect();
        let rp: Vec<f64> = ps.iter().map(|&p| recoverability(d, NucleusSpec::TopP(p))).collect();
        monotone &= rk.windows(2).all(|w| w[0] <= w[1]) && rp.windows(2).all(|w| w[0] <= w[1]);
    }
    let pass = worst.is_none() && monotone;
    report(
        2,
        pass,
        format!(
            "closure over 6 specs x 40 docs x 128 tokens: {}; monotone in k and p on {} docs: {monotone}",
            match &worst {
                None => "all exactly 1.0".to_string(),
                Some((w, r)) => format!("{w} gave {r}"),
            },
            docs.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_bin_learning_self_consistency() {
    let b = bench();
    let layout = BinLayout::from_vocab(b.v());
    let theta_star = vec![0.4, 0.3, 0.2, 0.1];
    assert_eq!(layout.n_bins(), theta_star.len());
    let strategy = Strategy::Burst {
        layout,
        theta: BinDistribution::new(theta_star.clone()).unwrap(),
        t: 1.0,
    };
    let docs = b.generate_scored(&strategy, 200, 256, 300);
    let tokens: usize = docs.iter().map(|d| d.len()).sum();
    let learned = learn_bin_distribution(&docs, &layout).unwrap();
    let l1: f64 = learned.theta().iter().zip(&theta_star).map(|(a, b)| (a - b).abs()).sum();
    let pass = tokens >= 50_000 && l1 < 0.05;
    report(
        3,
        pass,
        format!("{tokens} tokens, theta* {theta_star:?}, learned {:.4?}, L1 = {l1:.4} (< 0.05)", learned.theta()),
    );
    assert!(pass);
}

#[test]
fn criterion_4_metric_identities() {
    let b = bench();
    let layout = BinLayout::from_vocab(b.v());
    let mut docs: Vec<&DocScore> = b.real_scores().iter().collect();
    let generated = b.generate_scored(&Strategy::TopP { p: 0.95, t: 1.0 }, 100, 200, 400);
    let burst = b.generate_scored(
        &Strategy::Burst {
            layout,
            theta: BinDistribution::new(vec![0.25; 4]).unwrap(),
            t: 1.0,
        },
        100,
        200,
        401,
    );
    docs.extend(generated.iter().chain(&burst));

    let mut failures = Vec::new();
    for d in &docs {
        let ll = log_likelihood(d).unwrap();
        let ppl = perplexity(d).unwrap();
        if ((ppl - (-ll).exp()) / ppl).abs() > 1e-6 {
            failures.push(format!("{}: perplexity", d.doc_id));
        }
        let g = gltr_fractions(d, &layout);
        if (g.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            failures.push(format!("{}: gltr sum", d.doc_id));
        }
        let rank = rank_score(d);
        if log_rank_score(d).exp() > rank * (1.0 + 1e-12) {
            failures.push(format!("{}: exp(log_rank) > rank", d.doc_id));
        }
        if recoverability(d, NucleusSpec::TopK(10)) != g[0] {
            failures.push(format!("{}: recov@k=10 != gltr bin 0", d.doc_id));
        }
    }
    let pass = failures.is_empty();
    report(4, pass, format!("{} documents checked, {} violations {:?}", docs.len(), failures.len(), failures.iter().take(3).collect::<Vec<_>>()));
    assert!(pass);
}

/// `sup_x |F_a(x) - F_b(x)|` over every sample value, by direct counting.
fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    a.iter()
        .chain(b)
        .map(|&x| {
            let i = a.iter().filter(|&&v| v <= x).count();
            let j = b.iter().filter(|&&v| v <= x).count();
            (i as f64 / n as f64 - j as f64 / m as f64).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_5_ks_oracle() {
    let mut rng = seeded(5);
    let mut mismatches = 0;
    for case in 0..1000 {
        let n = rng.random_range(1..=50);
        let m = rng.random_range(1..=50);
        // half the cases draw from a tiny integer range to force ties
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
            if case % 2 == 0 {
                rng.random_range(0..8) as f64
            } else {
                rng.random::<f64>() * 10.0 - 5.0
            }
        };
        let a: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let b: Vec<f64> = (0..m).map(|_| draw(&mut rng)).collect();
        if ks_statistic(&a, &b).unwrap() != ks_brute(&a, &b) {
            mismatches += 1;
        }
    }
    let same: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
    let d_same = ks_statistic(&same, &same).unwrap();
    let d_disjoint = ks_statistic(&[1.0, 2.0, 3.0], &[4.0, 5.0]).unwrap();
    let d_disjoint_rev = ks_statistic(&[10.0, 20.0], &[-1.0, 0.0, 0.5]).unwrap();
    let pass = mismatches == 0 && d_same == 0.0 && d_disjoint == 1.0 && d_disjoint_rev == 1.0;
    report(
        5,
        pass,
        format!("{mismatches} of 1000 random pairs differ from brute force; identical D = {d_same}; disjoint D = {d_disjoint}, {d_disjoint_rev}"),
    );
    assert!(pass);
}

fn fixture_table(source: &str, rows: Vec<Vec<f64>>) -> MetricTable {
    MetricTable {
        columns: vec!["x".into(), "y".into(), "z".into()],
        rows: rows
            .into_iter()
            .enumerate()
            .map(|(i, v)| MetricRow {
                doc_id: format!("{source}{i}"),
                source: source.into(),
                values: v.into_iter().map(Some).collect(),
            })
            .collect(),
    }
}

#[test]
fn criterion_6_detector_sanity() {
    // perfectly separable along x, noise elsewhere
    let mut rng = seeded(6);
    let mut rows = |lo: f64| -> Vec<Vec<f64>> {
        (0..150)
            .map(|_| vec![lo + rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>() * 3.0])
            .collect()
    };
    let real = fixture_table("real", rows(0.0));
    let synth = fixture_table("synth", rows(1.5));
    let cfg = DetectorConfig::default();
    let sep = train_detector(&real, &synth, FeatureSet::All, &cfg).unwrap();

    // label permutation of real documents
    let table = bench().real_table();
    let f1s: Vec<f64> = (0..20u64)
        .map(|seed| {
            let mut idx: Vec<usize> = (0..table.rows.len()).collect();
            idx.shuffle(&mut seeded(1000 + seed));
            let half = idx.len() / 2;
            let pick = |ix: &[usize], source: &str| MetricTable {
                columns: table.columns.clone(),
                rows: ix
                    .iter()
                    .map(|&i| MetricRow { source: source.into(), ..table.rows[i].clone() })
                    .collect(),
            };
            let a = pick(&idx[..half], "real");
            let b = pick(&idx[half..], "permuted");
            let cfg = DetectorConfig { seed, ..DetectorConfig::default() };
            train_detector(&a, &b, FeatureSet::All, &cfg).unwrap().f1
        })
        .collect();
    let mean = f1s.iter().sum::<f64>() / f1s.len() as f64;
    let (lo, hi) = f1s.iter().fold((f64::MAX, f64::MIN), |(l, h), &f| (l.min(f), h.max(f)));

    let again = train_detector(&real, &synth, FeatureSet::All, &cfg).unwrap();
    let bytes = |r: &burstlab::stats::DetectorReport| serde_json::to_vec(&r.model).unwrap();
    let identical = bytes(&sep) == bytes(&again);

    let pass = sep.f1 == 1.0 && (0.3..=0.7).contains(&lo) && (0.3..=0.7).contains(&hi) && identical;
    report(
        6,
        pass,
        format!(
            "separable F1 = {}; permuted-label F1 over 20 seeds in [{lo:.3}, {hi:.3}] (mean {mean:.3}); model bytes identical: {identical}",
            sep.f1
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_trend_temperature_vs_top_p() {
    let b = bench();
    let real = b.real_table();
    let cold = b.table(&b.generate_full(&Strategy::Temperature { t: 0.5 }, 256, 700), "t=0.5");
    let nucleus = b.table(&b.generate_full(&Strategy::TopP { p: 0.99, t: 1.0 }, 256, 701), "p=0.99");
    let rows = separation_table(real, &[cold, nucleus]).unwrap();
    let mut mean = BTreeMap::new();
    for r in &rows {
        let e = mean.entry(r.sampler.clone()).or_insert((0.0, 0));
        e.0 += r.ks_statistic;
        e.1 += 1;
    }
    let avg = |s: &str| mean[s].0 / mean[s].1 as f64;
    let (t05, p99) = (avg("t=0.5"), avg("p=0.99"));
    report_soft(
        7,
        t05 > p99,
        format!("mean KS over scalar metrics: t=0.5 {t05:.3}, p=0.99 {p99:.3} (expected t=0.5 > p=0.99)"),
    );
}

fn run(cwd: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_burstlab"))
        .current_dir(cwd)
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

const STRATEGIES: [(&str, &[&str]); 4] = [
    ("t05", &["--strategy", "temp", "--t", "0.5"]),
    ("p099", &["--strategy", "topp", "--p", "0.99"]),
    ("k40", &["--strategy", "topk", "--k", "40"]),
    ("burst", &["--strategy", "burst", "--theta", "theta"]),
];

fn pipeline(dir: &Path) -> Duration {
    let start = Instant::now();
    run(dir, &["sample-corpus", "--docs", "2000", "--holdout", "1000", "--seed", "7", "--out", "corpus"]);
    run(dir, &["prepare", "--corpus", "corpus/heldout.jsonl", "--seed", "1", "--out", "pairs"]);
    run(dir, &["train", "--corpus", "corpus/corpus.jsonl", "--out", "model"]);
    run(dir, &["learn-bins", "--model", "model", "--corpus", "corpus/corpus.jsonl", "--subset", "500", "--seed", "2", "--out", "theta"]);
    run(dir, &["score", "--model", "model", "--texts", "pairs", "--source", "real", "--out", "score_real"]);
    for (name, flags) in STRATEGIES {
        let gen = format!("gen_{name}");
        let mut args = vec!["generate", "--model", "model", "--pairs", "pairs", "--length", "256", "--seed", "3", "--out", &gen];
        args.extend_from_slice(flags);
        run(dir, &args);
        run(dir, &["score", "--model", "model", "--texts", &gen, "--out", &format!("score_{name}")]);
    }
    let mut sep = vec!["separate", "--real", "score_real", "--out", "separation", "--synth"];
    let synth: Vec<String> = STRATEGIES.iter().map(|(n, _)| format!("score_{n}")).collect();
    sep.extend(synth.iter().map(String::as_str));
    run(dir, &sep);
    for (name, _) in STRATEGIES {
        run(dir, &["detect", "--real", "score_real", "--synth", &format!("score_{name}"), "--out", &format!("detect_{name}")]);
    }
    start.elapsed()
}

/// Every output except manifests (which carry timestamps), relative path → bytes.
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, d: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else if p.file_name().unwrap() != "manifest.json" {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn criterion_8_end_to_end_reproducibility() {
    let a = tempfile::TempDir::new().unwrap();
    let b = tempfile::TempDir::new().unwrap();
    let ta = pipeline(a.path());
    let tb = pipeline(b.path());
    let (oa, ob) = (outputs(a.path()), outputs(b.path()));
    let differing: Vec<&String> = oa.keys().filter(|k| ob.get(*k) != oa.get(*k)).collect();
    let csvs = oa.keys().filter(|k| k.ends_with(".csv")).count();

    // replaying a recorded manifest into a fresh directory
    run(a.path(), &["replay", "score_burst", "--out", "score_burst_replayed"]);
    let replayed = std::fs::read(a.path().join("score_burst_replayed/metrics.csv")).unwrap()
        == oa["score_burst/metrics.csv"];

    let limit = Duration::from_secs(600);
    let pass = ta < limit && tb < limit && differing.is_empty() && oa.len() == ob.len() && replayed && csvs > 0;
    report(
        8,
        pass,
        format!(
            "pipeline runs took {:.1}s and {:.1}s (< 600s); {} files ({csvs} CSV) compared, {} differ {:?}; replay identical: {replayed}",
            ta.as_secs_f64(),
            tb.as_secs_f64(),
            oa.len(),
            differing.len(),
            differing.iter().take(3).collect::<Vec<_>>()
        ),
    );
    assert!(pass);
}
