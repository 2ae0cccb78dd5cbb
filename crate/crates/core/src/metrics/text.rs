//! BLEU-4, ROUGE-L, METEOR and CIDEr over a shared tokenizer.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

/// Lowercase, put spaces around ASCII punctuation, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 16);
    for c in text.chars() {
        if c.is_ascii_punctuation() {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.extend(c.to_lowercase());
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// Parameters of the text metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricParams {
    /// Replaces zero higher-order BLEU precisions.
    pub bleu_epsilon: f64,
    pub rouge_beta: f64,
    pub meteor_alpha: f64,
    pub meteor_beta: f64,
    pub meteor_gamma: f64,
    pub cider_scale: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            bleu_epsilon: 1e-9,
            rouge_beta: 1.2,
            meteor_alpha: 0.9,
            meteor_beta: 3.0,
            meteor_gamma: 0.5,
            cider_scale: 1.0,
        }
    }
}

impl MetricParams {
    /// Sentence BLEU-4 against one or more references: clipped n-gram
    /// precisions for n = 1..4, geometric mean, brevity penalty against the
    /// closest reference length (shorter wins ties). No unigram match gives
    /// exactly 0; zero higher-order precisions are replaced by epsilon.
    pub fn bleu4(&self, candidate: &str, references: &[&str]) -> f64 {
        let cand = tokenize(candidate);
        let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r)).collect();
        if cand.is_empty() || refs.is_empty() {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 1..=4 {
            let counts = ngrams(&cand, n);
            let total: usize = counts.values().sum();
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in &refs {
                for (g, c) in ngrams(r, n) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            let clipped: usize = counts
                .iter()
                .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
                .sum();
            if n == 1 && clipped == 0 {
                return 0.0;
            }
            let p = if clipped == 0 || total == 0 {
                self.bleu_epsilon
            } else {
                clipped as f64 / total as f64
            };
            log_sum += p.ln();
        }
        let c = cand.len() as i64;
        let r = refs
            .iter()
            .map(|r| r.len() as i64)
            .min_by_key(|&len| ((len - c).abs(), len))
            .expect("nonempty refs");
        let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
        bp * (log_sum / 4.0).exp()
    }

    /// ROUGE-L F-measure: `(1+β²)PR / (R + β²P)` from the longest common
    /// subsequence.
    pub fn rouge_l(&self, candidate: &str, reference: &str) -> f64 {
        let cand = tokenize(candidate);
        let refr = tokenize(reference);
        let lcs = lcs_len(&cand, &refr);
        if lcs == 0 {
            return 0.0;
        }
        let p = lcs as f64 / cand.len() as f64;
        let r = lcs as f64 / refr.len() as f64;
        let b2 = self.rouge_beta * self.rouge_beta;
        (1.0 + b2) * p * r / (r + b2 * p)
    }

    /// METEOR with exact then stem matching, `Fmean = PR / (αP + (1−α)R)`
    /// and penalty `γ·(chunks/matches)^β`. No synonym stage.
    pub fn meteor(&self, candidate: &str, reference: &str) -> f64 {
        let cand = tokenize(candidate);
        let refr = tokenize(reference);
        let alignment = align(&cand, &refr);
        let m = alignment.len();
        if m == 0 {
            return 0.0;
        }
        let p = m as f64 / cand.len() as f64;
        let r = m as f64 / refr.len() as f64;
        let fmean = p * r / (self.meteor_alpha * p + (1.0 - self.meteor_alpha) * r);
        let chunks = count_chunks(&alignment);
        let penalty = self.meteor_gamma * (chunks as f64 / m as f64).powf(self.meteor_beta);
        fmean * (1.0 - penalty)
    }

    /// CIDEr per item: for n = 1..4 the cosine between TF-IDF n-gram vectors
    /// of candidate and each reference (averaged over references), then the
    /// mean over n, times `cider_scale`. IDF is `ln(N / max(1, df))` with df
    /// counted over the reference sets of all N items.
    pub fn cider(&self, candidates: &[&str], references: &[Vec<&str>]) -> Vec<f64> {
        assert_eq!(candidates.len(), references.len(), "one reference set per candidate");
        let n_items = candidates.len() as f64;
        let refs: Vec<Vec<Vec<String>>> = references
            .iter()
            .map(|rs| rs.iter().map(|r| tokenize(r)).collect())
            .collect();
        let cands: Vec<Vec<String>> = candidates.iter().map(|c| tokenize(c)).collect();

        let mut scores = vec![0.0; candidates.len()];
        for n in 1..=4 {
            let mut df: HashMap<Vec<String>, usize> = HashMap::new();
            for item in &refs {
                let mut seen: HashMap<&[String], ()> = HashMap::new();
                for r in item {
                    for g in ngrams(r, n).into_keys() {
                        seen.insert(g, ());
                    }
                }
                for g in seen.into_keys() {
                    *df.entry(g.to_vec()).or_insert(0) += 1;
                }
            }
            let idf = |g: &[String]| (n_items / df.get(g).copied().unwrap_or(0).max(1) as f64).ln();
            let tfidf = |tokens: &[String]| -> BTreeMap<Vec<String>, f64> {
                ngrams(tokens, n)
                    .into_iter()
                    .map(|(g, c)| (g.to_vec(), c as f64 * idf(g)))
                    .collect()
            };
            for (i, cand) in cands.iter().enumerate() {
                if refs[i].is_empty() {
                    continue;
                }
                let cv = tfidf(cand);
                let sum: f64 = refs[i].iter().map(|r| cosine(&cv, &tfidf(r))).sum();
                scores[i] += sum / refs[i].len() as f64;
            }
        }
        scores.iter().map(|s| s / 4.0 * self.cider_scale).collect()
    }
}

fn cosine(a: &BTreeMap<Vec<String>, f64>, b: &BTreeMap<Vec<String>, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(g, x)| b.get(g).map(|y| x * y))
        .sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub(crate) fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        prev = cur;
    }
    prev[b.len()]
}

const SUFFIXES: [&str; 6] = ["edly", "ing", "ed", "es", "ly", "s"];

/// Crude suffix-stripping stem; keeps at least three characters.
pub fn stem(word: &str) -> &str {
    for suffix in SUFFIXES {
        if let Some(base) = word.strip_suffix(suffix) {
            if base.chars().count() >= 3 {
                return base;
            }
        }
    }
    word
}

/// Greedy two-stage alignment, left to right: exact matches first, then stem
/// matches among still-unmatched tokens. Returns `(candidate, reference)`
/// index pairs sorted by candidate index.
fn align(cand: &[String], refr: &[String]) -> Vec<(usize, usize)> {
    let mut used_c = vec![false; cand.len()];
    let mut used_r = vec![false; refr.len()];
    let mut pairs = Vec::new();
    let stages: [fn(&str, &str) -> bool; 2] = [|a, b| a == b, |a, b| stem(a) == stem(b)];
    for same in stages {
        for (i, c) in cand.iter().enumerate() {
            if used_c[i] {
                continue;
            }
            if let Some(j) = (0..refr.len()).find(|&j| !used_r[j] && same(c, &refr[j])) {
                used_c[i] = true;
                used_r[j] = true;
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Runs of matches adjacent in both candidate and reference.
fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    if pairs.is_empty() {
        return 0;
    }
    1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
}

pub fn bleu4(candidate: &str, references: &[&str]) -> f64 {
    MetricParams::default().bleu4(candidate, references)
}

pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    MetricParams::default().rouge_l(candidate, reference)
}

pub fn meteor(candidate: &str, reference: &str) -> f64 {
    MetricParams::default().meteor(candidate, reference)
}

/// Per-item CIDEr scores and their mean.
pub fn cider(candidates: &[&str], references: &[Vec<&str>]) -> (Vec<f64>, f64) {
    let scores = MetricParams::default().cider(candidates, references);
    let mean = if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    };
    (scores, mean)
}
