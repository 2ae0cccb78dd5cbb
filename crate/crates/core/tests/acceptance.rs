//! Exit criteria for the whole pipeline. Every test writes one
//! `criterion N: PASS|FAIL` line straight to stderr so the verdicts show up
//! even when libtest captures output.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emforge::budget::{check_budget, pack_views, StageConfig, RESERVED_PROMPT_TOKENS};
use emforge::corpus::{
    build_corpus, desk_scale_counts, device_profiles, read_manifest, BuildOptions, CorpusSpec,
    ManifestRecord, Split, TaskFamily, BENCH_MANIFEST, TRAIN_MANIFEST,
};
use emforge::instrgen::{
    label_universe, make_mcqa_categorical, make_mcqa_numeric, DistractorPolicy, McqaOptions,
    Quantity, SpeParameter, OPTION_LETTERS, UNABLE_TO_ANSWER,
};
use emforge::metrics::{
    ajsd_composite, gold_predictions, mean_of_four, score, MetricParams, Prediction, ScoreReport,
    ScoringParams,
};
use emforge::sigsynth::{apply_awgn, measure_snr, modulate, IqSignal, ModulationKind, Payload};
use emforge::views::{fft_magnitude, RenderParams};

fn verdict(n: u32, name: &str, ok: bool, detail: &str) {
    let line = format!(
        "criterion {n:>2}: {} {name}: {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

#[test]
fn criterion_01_composite_score() {
    let got = ajsd_composite(0.253, 0.559, 0.515, 0.617).unwrap();
    let ok = (got - 48.59).abs() <= 0.05;
    verdict(1, "AJSD composite", ok, &format!("{got:.4} vs 48.59 ± 0.05"));
    assert!(ok);
}

/// Modality ablation rows: BLEU4, ROUGE, METEOR, CIDEr, reported average.
const ABLATION: [(&str, [f64; 5]); 15] = [
    ("Constellation", [0.069, 0.329, 0.227, 0.405, 0.258]),
    ("FFT", [0.056, 0.305, 0.194, 0.381, 0.234]),
    ("STFT", [0.094, 0.374, 0.267, 0.447, 0.2955]),
    ("IQ", [0.149, 0.438, 0.337, 0.530, 0.363]),
    ("Constellation+FFT", [0.070, 0.331, 0.227, 0.409, 0.259]),
    ("Constellation+STFT", [0.104, 0.384, 0.279, 0.465, 0.308]),
    ("Constellation+IQ", [0.168, 0.464, 0.359, 0.549, 0.385]),
    ("FFT+STFT", [0.095, 0.373, 0.267, 0.449, 0.296]),
    ("FFT+IQ", [0.153, 0.441, 0.341, 0.534, 0.367]),
    ("STFT+IQ", [0.185, 0.488, 0.381, 0.567, 0.405]),
    ("Constellation+FFT+STFT", [0.102, 0.379, 0.276, 0.464, 0.305]),
    ("Constellation+FFT+IQ", [0.168, 0.463, 0.357, 0.548, 0.384]),
    ("Constellation+STFT+IQ", [0.193, 0.499, 0.388, 0.575, 0.414]),
    ("FFT+STFT+IQ", [0.185, 0.489, 0.381, 0.567, 0.405]),
    ("Constellation+FFT+STFT+IQ", [0.253, 0.559, 0.515, 0.617, 0.486]),
];

#[test]
fn criterion_02_ablation_averages() {
    let mut misses = Vec::new();
    for (name, [b, r, m, c, avg]) in ABLATION {
        let got = mean_of_four(b, r, m, c);
        if (got - avg).abs() > 1e-4 {
            misses.push(format!("{name} {got:.5} vs {avg}"));
        }
    }
    let ok = misses.is_empty();
    let detail = if ok {
        "15/15 rows within 1e-4".to_string()
    } else {
        format!("{}/15 rows off by more than 1e-4: {}", misses.len(), misses.join("; "))
    };
    verdict(2, "ablation averages", ok, &detail);
    assert!(ok, "{detail}");
}

/// Reported benchmark composition in table order: (task, OpenQA, MCQA).
const COMPOSITION: [(TaskFamily, usize, usize); 6] = [
    (TaskFamily::Spe, 2250, 750),
    (TaskFamily::Ssd, 1700, 300),
    (TaskFamily::Mr, 0, 500),
    (TaskFamily::Pr, 0, 500),
    (TaskFamily::Ei, 0, 458),
    (TaskFamily::Ajsd, 2000, 0),
];

/// Hamilton apportionment with exact integer quotas; ties broken by table
/// position, OpenQA before MCQA.
fn largest_remainder_oracle(total: usize) -> BTreeMap<TaskFamily, (usize, usize)> {
    let cells: Vec<usize> = COMPOSITION.iter().flat_map(|&(_, o, m)| [o, m]).collect();
    let full: usize = cells.iter().sum();
    let mut alloc: Vec<usize> = cells.iter().map(|c| c * total / full).collect();
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = cells[a] * total % full;
        let rb = cells[b] * total % full;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    let short = total - alloc.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        alloc[i] += 1;
    }
    COMPOSITION
        .iter()
        .enumerate()
        .map(|(k, &(t, _, _))| (t, (alloc[2 * k], alloc[2 * k + 1])))
        .collect()
}

#[test]
fn criterion_03_benchmark_composition() {
    let full = desk_scale_counts(8458).unwrap();
    let expected: BTreeMap<TaskFamily, (usize, usize)> =
        COMPOSITION.iter().map(|&(t, o, m)| (t, (o, m))).collect();
    let scaled = desk_scale_counts(846).unwrap();
    let oracle = largest_remainder_oracle(846);
    let ok = full == expected && scaled == oracle && scaled.values().map(|(o, m)| o + m).sum::<usize>() == 846;
    verdict(
        3,
        "benchmark composition",
        ok,
        &format!("8458 exact: {}, 846 oracle agrees: {}", full == expected, scaled == oracle),
    );
    assert!(ok, "{full:?}\n{scaled:?}\n{oracle:?}");
}

#[test]
fn criterion_04_token_budgets() {
    let expected_layout = [729, 5 * 729 + 4, 10 * 729 + 9, 10 * 729 + 9];
    let expected_seq = [4096, 4096, 8192, 8192];
    let mut ok = true;
    let mut notes = Vec::new();
    for (k, stage) in StageConfig::all().iter().enumerate() {
        let layout = pack_views(&vec![729; stage.max_views]).unwrap();
        ok &= layout.total_len() == expected_layout[k] && stage.max_seq_len == expected_seq[k];
        ok &= stage.max_layout_len() == layout.total_len();
        if stage.stage <= 2 {
            ok &= layout.total_len() <= stage.max_seq_len - RESERVED_PROMPT_TOKENS;
        } else {
            let v = check_budget(&layout, 400, 400, stage).unwrap();
            ok &= v.fits && v.total == 8099 && v.slack == 93;
        }
        // One view past the cap is refused.
        let over = pack_views(&vec![729; stage.max_views + 1]).unwrap();
        ok &= check_budget(&over, 0, 0, stage).is_err();
        notes.push(format!("stage {}: {}/{}", stage.stage, layout.total_len(), stage.max_seq_len));
    }
    let lens: Vec<usize> = (1..=10).map(|v| pack_views(&vec![729; v]).unwrap().total_len()).collect();
    ok &= lens.windows(2).all(|w| w[0] < w[1]);
    verdict(4, "token budgets", ok, &notes.join(", "));
    assert!(ok);
}

#[test]
fn criterion_05_snr_calibration() {
    const N: usize = 65536;
    const SPS: usize = 8;
    let mut worst: f64 = 0.0;
    for snr in [-20.0, -10.0, 0.0, 10.0, 18.0] {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let symbols: Vec<usize> = (0..N / SPS).map(|_| rng.random_range(0..4)).collect();
            let clean = modulate(ModulationKind::Qpsk, &Payload::Symbols(symbols), SPS, 1e6).unwrap();
            assert_eq!(clean.len(), N);
            let noisy = apply_awgn(&clean, snr, 77 + seed).unwrap();
            let ps: f64 = clean.samples().iter().map(|s| s.norm_sqr()).sum();
            let pn: f64 = noisy
                .samples()
                .iter()
                .zip(clean.samples())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let measured = 10.0 * (ps / pn).log10();
            assert!((measure_snr(&noisy, &clean).unwrap() - measured).abs() < 1e-9);
            worst = worst.max((measured - snr).abs());
        }
    }
    let ok = worst <= 0.2;
    verdict(5, "SNR calibration", ok, &format!("worst error {worst:.4} dB over 25 runs (limit 0.2)"));
    assert!(ok);
}

fn naive_dft_centered(x: &[Complex64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let k = (i + n - n / 2) % n;
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let angle = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                acc += v * Complex64::from_polar(1.0, angle);
            }
            acc.norm()
        })
        .collect()
}

#[test]
fn criterion_06_dft_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = if trial < 8 { 8usize << trial } else { rng.random_range(8..=1024) };
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let got = fft_magnitude(&IqSignal::new(x.clone(), 1.0).unwrap()).unwrap();
        let want = naive_dft_centered(&x);
        let scale = want.iter().cloned().fold(0.0, f64::max);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs() / scale);
        }
    }
    let ok = worst <= 1e-9;
    verdict(6, "DFT oracle", ok, &format!("worst relative error {worst:.2e} (limit 1e-9)"));
    assert!(ok);
}

fn count_of(tokens: &[&str], gram: &[&str]) -> usize {
    if tokens.len() < gram.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len())
        .filter(|&i| &tokens[i..i + gram.len()] == gram)
        .count()
}

fn brute_bleu4(cand: &[&str], refr: &[&str]) -> f64 {
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let total = cand.len().saturating_sub(n - 1);
        let mut seen: Vec<&[&str]> = Vec::new();
        let mut clipped = 0;
        for i in 0..total {
            let g = &cand[i..i + n];
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            clipped += count_of(cand, g).min(count_of(refr, g));
        }
        if n == 1 && clipped == 0 {
            return 0.0;
        }
        let p = if clipped == 0 { 1e-9 } else { clipped as f64 / total as f64 };
        log_sum += p.ln();
    }
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    bp * (log_sum / 4.0).exp()
}

fn is_subsequence(sub: &[&str], of: &[&str]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|s| it.any(|o| o == s))
}

/// LCS by enumerating every subset of the candidate.
fn brute_lcs(a: &[&str], b: &[&str]) -> usize {
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let sub: Vec<&str> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
            is_subsequence(&sub, b).then_some(sub.len())
        })
        .max()
        .unwrap_or(0)
}

fn brute_rouge_l(cand: &[&str], refr: &[&str]) -> f64 {
    let l = brute_lcs(cand, refr) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (p, r) = (l / cand.len() as f64, l / refr.len() as f64);
    let b2 = 1.2f64 * 1.2;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// CIDEr with one reference per item.
fn brute_cider(cands: &[Vec<&str>], refs: &[Vec<&str>]) -> Vec<f64> {
    let n_items = cands.len() as f64;
    let mut out = vec![0.0; cands.len()];
    for n in 1..=4 {
        let grams = |t: &[&str]| -> Vec<Vec<String>> {
            let mut g: Vec<Vec<String>> = t.windows(n).map(|w| w.iter().map(|s| s.to_string()).collect()).collect();
            g.sort();
            g.dedup();
            g
        };
        let idf = |g: &[String]| {
            let gs: Vec<&str> = g.iter().map(String::as_str).collect();
            let df = refs.iter().filter(|r| count_of(r, &gs) > 0).count();
            (n_items / df.max(1) as f64).ln()
        };
        for i in 0..cands.len() {
            let mut vocab = grams(&cands[i]);
            vocab.extend(grams(&refs[i]));
            vocab.sort();
            vocab.dedup();
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for g in &vocab {
                let gs: Vec<&str> = g.iter().map(String::as_str).collect();
                let w = idf(g);
                let a = count_of(&cands[i], &gs) as f64 * w;
                let b = count_of(&refs[i], &gs) as f64 * w;
                dot += a * b;
                na += a * a;
                nb += b * b;
            }
            if na > 0.0 && nb > 0.0 {
                out[i] += dot / (na.sqrt() * nb.sqrt());
            }
        }
    }
    out.iter().map(|s| s / 4.0).collect()
}

/// `(candidate, reference, matches, chunks)` with hand-counted alignments.
const METEOR_FIXTURES: [(&str, &str, usize, usize); 10] = [
    ("the jammer sweeps", "the jammer sweeps", 3, 1),
    ("a b c", "c b a", 3, 3),
    ("noise floor rises", "the noise floor rises quickly", 3, 1),
    ("sweeping tones detected", "sweeps tones detect", 3, 1),
    ("alpha beta", "gamma delta", 0, 0),
    ("radar radar", "radar", 1, 1),
    ("hop now then notch", "notch then hop now", 4, 3),
    ("Jam, detected.", "jam detected", 2, 2),
    ("uses", "use", 1, 1),
    ("a a b", "b a a", 3, 2),
];

fn meteor_closed_form(cand: &str, refr: &str, m: usize, chunks: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let count = |s: &str| emforge::metrics::tokenize(s).len() as f64;
    let p = m as f64 / count(cand);
    let r = m as f64 / count(refr);
    let fmean = p * r / (0.9 * p + 0.1 * r);
    fmean * (1.0 - 0.5 * (chunks as f64 / m as f64).powi(3))
}

#[test]
fn criterion_07_metric_oracles() {
    const VOCAB: [&str; 6] = ["jam", "tone", "hop", "notch", "sweep", "noise"];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sentence = |rng: &mut ChaCha8Rng| -> Vec<&'static str> {
        let len = rng.random_range(1..=10);
        (0..len).map(|_| *VOCAB.choose(rng).unwrap()).collect()
    };
    let pairs: Vec<(Vec<&str>, Vec<&str>)> = (0..50).map(|_| (sentence(&mut rng), sentence(&mut rng))).collect();
    let params = MetricParams::default();
    let (mut bleu_err, mut rouge_err): (f64, f64) = (0.0, 0.0);
    for (c, r) in &pairs {
        let (cs, rs) = (c.join(" "), r.join(" "));
        bleu_err = bleu_err.max((params.bleu4(&cs, &[&rs]) - brute_bleu4(c, r)).abs());
        rouge_err = rouge_err.max((params.rouge_l(&cs, &rs) - brute_rouge_l(c, r)).abs());
    }
    let cand_text: Vec<String> = pairs.iter().map(|(c, _)| c.join(" ")).collect();
    let ref_text: Vec<String> = pairs.iter().map(|(_, r)| r.join(" ")).collect();
    let cands: Vec<&str> = cand_text.iter().map(String::as_str).collect();
    let refs: Vec<Vec<&str>> = ref_text.iter().map(|r| vec![r.as_str()]).collect();
    let got = params.cider(&cands, &refs);
    let want = brute_cider(
        &pairs.iter().map(|(c, _)| c.clone()).collect::<Vec<_>>(),
        &pairs.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>(),
    );
    let cider_err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let meteor_err = METEOR_FIXTURES
        .iter()
        .map(|&(c, r, m, ch)| (params.meteor(c, r) - meteor_closed_form(c, r, m, ch)).abs())
        .fold(0.0, f64::max);
    let ok = bleu_err <= 1e-9 && rouge_err <= 1e-9 && cider_err <= 1e-9 && meteor_err <= 1e-9;
    verdict(
        7,
        "metric oracles",
        ok,
        &format!("max error BLEU4 {bleu_err:.1e}, ROUGE-L {rouge_err:.1e}, CIDEr {cider_err:.1e}, METEOR {meteor_err:.1e}"),
    );
    assert!(ok);
}

fn check_structure(opts: &McqaOptions, gt: &str) -> Result<(), String> {
    if opts.options.len() != 5 {
        return Err(format!("{} options", opts.options.len()));
    }
    if opts.options.iter().filter(|o| *o == UNABLE_TO_ANSWER).count() != 1 {
        return Err("\"Unable to answer\" missing or repeated".into());
    }
    let distinct: BTreeSet<&String> = opts.options.iter().collect();
    if distinct.len() != 5 {
        return Err(format!("duplicate options {:?}", opts.options));
    }
    if opts.options.iter().filter(|o| *o == gt).count() != 1 || opts.correct_text() != gt {
        return Err(format!("correct option is not unique: {:?} / {}", opts.options, opts.correct));
    }
    Ok(())
}

/// |observed − expected| within 3 standard deviations of a sum of
/// independent Bernoulli draws.
fn within_3_sigma(observed: usize, probs: &[f64]) -> bool {
    let mean: f64 = probs.iter().sum();
    let var: f64 = probs.iter().map(|p| p * (1.0 - p)).sum();
    (observed as f64 - mean).abs() <= 3.0 * var.sqrt()
}

#[test]
fn criterion_08_mcqa_structure() {
    const ITEMS: usize = 10_000;
    let devices: Vec<String> = device_profiles(1, 12).into_iter().map(|d| d.device_id).collect();
    let universes: Vec<(TaskFamily, Vec<String>)> = [TaskFamily::Ssd, TaskFamily::Mr, TaskFamily::Pr, TaskFamily::Ei]
        .into_iter()
        .map(|t| (t, label_universe(t, &devices)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let mut letter_counts = [0usize; 5];
    let mut min_gap = f64::INFINITY;
    // Per universe: how often each label appeared as a distractor, and the
    // probability it had of appearing in each item.
    let mut picked: BTreeMap<(TaskFamily, String), usize> = BTreeMap::new();
    let mut chances: BTreeMap<(TaskFamily, String), Vec<f64>> = BTreeMap::new();

    for i in 0..ITEMS {
        let seed = rng.random::<u64>();
        let (opts, gt) = if i % 5 == 0 {
            let parameter = SpeParameter::ALL[i / 5 % 4];
            let value = match parameter {
                SpeParameter::PulseWidth => rng.random_range(10..=100) as f64 / 10.0,
                SpeParameter::Period => rng.random_range(200..=600) as f64 / 10.0,
                SpeParameter::Delay => rng.random_range(0..=200) as f64 / 10.0,
                SpeParameter::Count => rng.random_range(2..=6) as f64,
            };
            let q = Quantity::new(value, parameter.unit(), parameter.decimals());
            let tol = parameter.tolerance();
            let opts = make_mcqa_numeric(&q, tol, &DistractorPolicy::for_parameter(parameter), seed).unwrap();
            for o in &opts.options {
                if *o == q.format() || o == UNABLE_TO_ANSWER {
                    continue;
                }
                let d: f64 = o.trim_end_matches(parameter.unit()).trim().parse().unwrap();
                let gap = (d - value).abs();
                min_gap = min_gap.min(if tol > 0.0 { gap / tol } else { f64::INFINITY });
                if gap < 2.0 * tol || d < 0.0 {
                    failures.push(format!("{parameter:?} {value}: distractor {o}"));
                }
            }
            (opts, q.format())
        } else {
            let (task, universe) = &universes[i % 5 - 1];
            let gt = universe.choose(&mut rng).unwrap().clone();
            let opts = make_mcqa_categorical(&gt, universe, seed).unwrap();
            let p = 3.0 / (universe.len() - 1) as f64;
            for label in universe {
                if *label == gt {
                    continue;
                }
                let key = (*task, label.clone());
                chances.entry(key.clone()).or_default().push(p);
                if opts.options.contains(label) {
                    *picked.entry(key).or_default() += 1;
                }
            }
            (opts, gt)
        };
        if let Err(e) = check_structure(&opts, &gt) {
            failures.push(e);
        }
        letter_counts[OPTION_LETTERS.iter().position(|&l| l == opts.correct).unwrap()] += 1;
    }

    let letters_ok = letter_counts.iter().all(|&c| within_3_sigma(c, &vec![0.2; ITEMS]));
    let skewed: Vec<String> = chances
        .iter()
        .filter(|(k, probs)| !within_3_sigma(picked.get(*k).copied().unwrap_or(0), probs))
        .map(|(k, _)| format!("{}:{}", k.0, k.1))
        .collect();
    // 3-sigma bands over ~50 labels: allow the expected stray or two.
    let spread_ok = skewed.len() <= 2;
    let ok = failures.is_empty() && letters_ok && spread_ok;
    verdict(
        8,
        "MCQA structure",
        ok,
        &format!(
            "{ITEMS} items, {} structural failures, answer letters {letter_counts:?}, min distractor gap {min_gap:.1}× tolerance, {} skewed labels",
            failures.len(),
            skewed.len()
        ),
    );
    assert!(ok, "{failures:?} {skewed:?}");
}

#[test]
fn criterion_09_leakage() {
    let corpus = CorpusSpec::default().with_total(10_000).unwrap();
    let mut opts = BuildOptions::in_memory(9);
    opts.render = RenderParams {
        size: 16,
        ..RenderParams::default()
    };
    let out = build_corpus(&corpus, &opts).unwrap();
    let n = out.records.len();
    let train = out.split(Split::Train);
    let bench = out.split(Split::Bench);
    let ids = |rs: &[ManifestRecord]| rs.iter().map(|r| r.sample.sample_id.clone()).collect::<BTreeSet<_>>();
    let hashes = |rs: &[ManifestRecord]| rs.iter().map(|r| r.content_hash.clone()).collect::<BTreeSet<_>>();
    let id_disjoint = ids(&train).is_disjoint(&ids(&bench)) && ids(&out.records).len() == n;
    let hash_disjoint = hashes(&train).is_disjoint(&hashes(&bench));
    let fraction = bench.len() as f64 / n as f64;
    let fraction_ok = (fraction - corpus.bench_fraction).abs() <= 0.01;
    let mut empty_bins = Vec::new();
    for (task, spec) in &corpus.tasks {
        for &bin in &spec.snr_grid_db {
            let covered = bench
                .iter()
                .any(|r| r.sample.task == *task && r.sample.snr_db.is_some_and(|s| (s - bin).abs() < 1e-9));
            if !covered {
                empty_bins.push(format!("{task}@{bin}"));
            }
        }
    }
    let ok = n == 10_000 && id_disjoint && hash_disjoint && fraction_ok && empty_bins.is_empty();
    verdict(
        9,
        "leakage",
        ok,
        &format!(
            "{n} ids, id-disjoint {id_disjoint}, hash-disjoint {hash_disjoint}, bench fraction {fraction:.4}, empty bench bins {empty_bins:?}"
        ),
    );
    assert!(ok);
}

const DESK_SEED: u64 = 20250101;

fn desk_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

fn build_desk(name: &str, workers: usize) -> PathBuf {
    let dir = desk_dir(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let opts = BuildOptions {
        global_seed: DESK_SEED,
        render: RenderParams::default(),
        out_dir: Some(&dir),
        workers,
    };
    let out = build_corpus(&CorpusSpec::default(), &opts).unwrap();
    assert_eq!(out.records.len(), 600);
    dir
}

fn desk_a() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| build_desk("desk_a", 1))
}

fn load_all(dir: &Path) -> Vec<ManifestRecord> {
    let mut records = read_manifest(&dir.join(TRAIN_MANIFEST)).unwrap();
    records.extend(read_manifest(&dir.join(BENCH_MANIFEST)).unwrap());
    records
}

fn gold_report(dir: &Path) -> ScoreReport {
    let records = load_all(dir);
    score(&records, &gold_predictions(&records), &ScoringParams::default()).unwrap()
}

#[test]
fn criterion_10_gold_run() {
    let records = load_all(desk_a());
    let gold = gold_report(desk_a());
    let ajsd = gold.ajsd.clone().unwrap();
    let tasks_scored: BTreeSet<TaskFamily> = gold
        .mcqa_accuracy
        .keys()
        .chain(gold.openqa_accuracy.keys())
        .copied()
        .chain([TaskFamily::Ajsd])
        .collect();
    let gold_ok = records.len() == 600
        && tasks_scored.len() == 6
        && gold.missing == 0
        && gold.unparseable == 0
        && gold.mcqa_accuracy.values().chain(gold.openqa_accuracy.values()).all(|&a| a == 100.0)
        && (ajsd.composite - 100.0).abs() <= 0.05;

    let blanks: Vec<Prediction> = records
        .iter()
        .map(|r| Prediction {
            sample_id: r.sample.sample_id.clone(),
            text: String::new(),
        })
        .collect();
    let mut empty_ok = true;
    for preds in [blanks, Vec::new()] {
        let rep = score(&records, &preds, &ScoringParams::default()).unwrap();
        let a = rep.ajsd.unwrap();
        empty_ok &= rep.mcqa_accuracy.values().chain(rep.openqa_accuracy.values()).all(|&v| v == 0.0)
            && [a.bleu4, a.rouge_l, a.meteor, a.cider, a.composite].iter().all(|&v| v == 0.0);
    }
    let ok = gold_ok && empty_ok;
    verdict(
        10,
        "end-to-end gold run",
        ok,
        &format!(
            "gold: accuracy {:?} / {:?}, AJSD composite {:.4}; empty predictions all zero: {empty_ok}",
            gold.mcqa_accuracy.values().collect::<Vec<_>>(),
            gold.openqa_accuracy.values().collect::<Vec<_>>(),
            ajsd.composite
        ),
    );
    assert!(ok);
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_11_determinism() {
    let a = desk_a();
    let b = build_desk("desk_b", 3);
    let (ta, tb) = (tree(a), tree(&b));
    let differing: Vec<&PathBuf> = ta
        .keys()
        .chain(tb.keys())
        .filter(|k| ta.get(*k) != tb.get(*k))
        .collect();
    let (ra, rb) = (gold_report(a), gold_report(&b));
    let reports_equal = ra.to_json().unwrap() == rb.to_json().unwrap() && ra.snr_csv() == rb.snr_csv();
    let ok = !ta.is_empty() && differing.is_empty() && reports_equal;
    verdict(
        11,
        "determinism",
        ok,
        &format!(
            "{} files compared, {} differ, reports identical: {reports_equal}",
            ta.len(),
            differing.len()
        ),
    );
    assert!(ok, "{differing:?}");
}
