//! Deterministic stand-in corpus for desk-scale runs.
//!
//! Documents are built from a fixed English function-word inventory and a
//! pseudo-word lexicon. Each document draws a topic that skews its content
//! words, repeats recently used words, and now and then reaches into the
//! rare end of the lexicon, which gives the heavy rank tail that separates
//! human text from truncated sampling.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::Document;
use crate::rng;

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "v", "w", "br", "cr", "dr",
    "gr", "pl", "pr", "sl", "st", "tr", "ch", "sh", "th",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "ou", "io"];
const CODAS: &[&str] = &["", "", "n", "r", "s", "t", "l", "m", "nd", "st", "ck"];

const DETERMINERS: &[&str] = &["the", "a", "this", "that", "every", "some", "its", "our"];
const PREPOSITIONS: &[&str] = &["of", "in", "on", "with", "for", "from", "under", "near", "across"];
const CONJUNCTIONS: &[&str] = &["and", "but", "while", "because", "although", "so"];
const PRONOUNS: &[&str] = &["it", "they", "we", "she", "he", "someone"];
const AUXILIARIES: &[&str] = &["will", "can", "might", "should", "must", "would"];

struct Lexicon {
    nouns: Vec<String>,
    verbs: Vec<String>,
    adjectives: Vec<String>,
    adverbs: Vec<String>,
}

fn pseudo_word<R: Rng>(rng: &mut R, syllables: usize) -> String {
    (0..syllables)
        .map(|_| {
            format!(
                "{}{}{}",
                ONSETS.choose(rng).unwrap(),
                NUCLEI.choose(rng).unwrap(),
                CODAS.choose(rng).unwrap()
            )
        })
        .collect()
}

impl Lexicon {
    fn new<R: Rng>(rng: &mut R) -> Self {
        let mut seen = std::collections::HashSet::new();
        let mut words = |n: usize, suffix: &str, rng: &mut R| {
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let syl = rng.random_range(1..=3);
                let w = format!("{}{suffix}", pseudo_word(rng, syl));
                if seen.insert(w.clone()) {
                    out.push(w);
                }
            }
            out
        };
        Lexicon {
            nouns: words(1800, "", rng),
            verbs: words(700, "s", rng),
            adjectives: words(500, "ic", rng),
            adverbs: words(150, "ly", rng),
        }
    }
}

/// Zipf-like index into a list of `n`: rank `r` has weight `1 / (r + 2)`.
fn zipf<R: Rng>(rng: &mut R, n: usize) -> usize {
    // inverse CDF of the continuous 1/x law over [2, n + 2)
    let u: f64 = rng.random();
    let x = 2.0 * ((n as f64 + 2.0) / 2.0).powf(u);
    ((x - 2.0) as usize).min(n - 1)
}

struct Writer<'a, R> {
    lex: &'a Lexicon,
    rng: R,
    /// Per-document offset that rotates which words are frequent.
    topic: usize,
    recent: Vec<String>,
}

impl<R: Rng> Writer<'_, R> {
    fn pick(&mut self, class: &[String]) -> String {
        let roll: f64 = self.rng.random();
        let word = if roll < 0.18 && !self.recent.is_empty() {
            self.recent.choose(&mut self.rng).unwrap().clone()
        } else if roll < 0.24 {
            class.choose(&mut self.rng).unwrap().clone()
        } else if roll < 0.55 {
            let i = (zipf(&mut self.rng, class.len() / 4) + self.topic) % class.len();
            class[i].clone()
        } else {
            class[zipf(&mut self.rng, class.len())].clone()
        };
        self.recent.push(word.clone());
        if self.recent.len() > 40 {
            self.recent.remove(0);
        }
        word
    }

    fn noun_phrase(&mut self, out: &mut Vec<String>) {
        out.push(DETERMINERS.choose(&mut self.rng).unwrap().to_string());
        if self.rng.random_bool(0.45) {
            let lex = self.lex;
            out.push(self.pick(&lex.adjectives));
        }
        let lex = self.lex;
        out.push(self.pick(&lex.nouns));
        if self.rng.random_bool(0.25) {
            out.push(PREPOSITIONS.choose(&mut self.rng).unwrap().to_string());
            out.push(DETERMINERS.choose(&mut self.rng).unwrap().to_string());
            out.push(self.pick(&lex.nouns));
        }
    }

    fn clause(&mut self, out: &mut Vec<String>) {
        let lex = self.lex;
        if self.rng.random_bool(0.3) {
            out.push(PRONOUNS.choose(&mut self.rng).unwrap().to_string());
        } else {
            self.noun_phrase(out);
        }
        if self.rng.random_bool(0.3) {
            out.push(AUXILIARIES.choose(&mut self.rng).unwrap().to_string());
        }
        if self.rng.random_bool(0.2) {
            out.push(self.pick(&lex.adverbs));
        }
        out.push(self.pick(&lex.verbs));
        if self.rng.random_bool(0.8) {
            self.noun_phrase(out);
        }
    }

    fn sentence(&mut self) -> String {
        let mut words = Vec::new();
        self.clause(&mut words);
        while self.rng.random_bool(0.35) {
            words.push(CONJUNCTIONS.choose(&mut self.rng).unwrap().to_string());
            self.clause(&mut words);
        }
        let mut s = words.join(" ");
        if let Some(first) = s.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        s.push(if self.rng.random_bool(0.9) { '.' } else { '?' });
        s
    }

    fn document(&mut self, min_chars: usize) -> String {
        let mut paragraphs = Vec::new();
        let mut len = 0;
        while len < min_chars {
            let n = self.rng.random_range(2..=6);
            let para: Vec<String> = (0..n).map(|_| self.sentence()).collect();
            let para = para.join(" ");
            if !paragraphs.is_empty() {
                len += 2;
            }
            len += para.len();
            paragraphs.push(para);
        }
        paragraphs.join("\n\n")
    }
}

/// `n_docs` documents of roughly 2,000–2,600 characters each, fully
/// determined by `seed`.
pub fn sample_corpus(n_docs: usize, seed: u64) -> Vec<Document> {
    let lex = Lexicon::new(&mut rng::stream_rng(seed, 0));
    (0..n_docs)
        .map(|i| {
            let mut r = rng::stream_rng(seed, i as u64 + 1);
            let topic = r.random_range(0..lex.nouns.len());
            let mut w = Writer {
                lex: &lex,
                rng: r,
                topic,
                recent: Vec::new(),
            };
            let text = w.document(2000);
            Document::new(format!("doc{i:05}"), text)
        })
        .collect()
}
