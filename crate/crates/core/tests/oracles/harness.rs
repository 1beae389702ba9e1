//! Drivers that run the library against the oracles on generated fixtures.
//! Each returns a report; callers decide how to assert on it.

use std::collections::{BTreeMap, HashMap};

use bitext_sieve::accept::{train_builtin, TrainConfig};
use bitext_sieve::align::{align_doc, pair_alignment_score, AlignmentParams, BeadType};
use bitext_sieve::eval::{pr_curve, roc_auc};
use bitext_sieve::langid::{LangIdConfig, LangIdModel};
use bitext_sieve::lm::{LmConfig, NGramLm, Smoothing};
use bitext_sieve::pipeline::{select_by_budget, select_top_percent, Candidate};
use bitext_sieve::synth::{build_training_set, write_labeled, Corruption, CorruptionPolicy};
use bitext_sieve::tokenize::{Scheme, TokenSeq};
use bitext_sieve::toy::{monolingual, ToyParallel};
use bitext_sieve::types::SentencePair;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::align::{pair_score, BruteAligner};
use super::lm::{NaiveLm, NaiveSmoothing};
use super::select::{budget_prefix, percent_prefix, Item};

#[derive(Debug, Default)]
pub struct LmGridReport {
    pub models: usize,
    pub queries: usize,
    pub max_abs_err: f64,
    pub contexts: usize,
    pub max_norm_dev: f64,
}

fn lm_corpus(rng: &mut ChaCha8Rng, types: usize) -> Vec<Vec<String>> {
    let alphabet: Vec<String> = (0..types).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let sentences = rng.gen_range(1..=6);
    let mut budget = 50usize;
    let mut out = Vec::new();
    for _ in 0..sentences {
        let len = rng.gen_range(0..=8).min(budget);
        budget -= len;
        out.push((0..len).map(|_| alphabet.choose(rng).unwrap().clone()).collect());
    }
    out
}

fn all_sequences(alphabet: &[String], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for a in alphabet {
                let mut t = s.clone();
                t.push(a.clone());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Every order 1..=3 model over 1..=5 word types, `seeds` corpora per size,
/// four smoothing settings.
pub fn lm_grid(seeds: u64) -> LmGridReport {
    let settings = [
        (Smoothing::KneserNey { discount: 0.75 }, NaiveSmoothing::KneserNey(0.75)),
        (Smoothing::KneserNey { discount: 0.4 }, NaiveSmoothing::KneserNey(0.4)),
        (Smoothing::AddK { k: 1.0 }, NaiveSmoothing::AddK(1.0)),
        (Smoothing::AddK { k: 0.05 }, NaiveSmoothing::AddK(0.05)),
    ];
    let mut report = LmGridReport::default();
    for types in 1..=5usize {
        let mut alphabet: Vec<String> = (0..types).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        alphabet.push("zz".into());
        let queries = all_sequences(&alphabet, 3);
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + types as u64);
            let corpus = lm_corpus(&mut rng, types);
            let seqs: Vec<TokenSeq> = corpus.iter().map(|s| TokenSeq::new(s.clone(), Scheme::Whitespace)).collect();
            for order in 1..=3 {
                for (lib, naive) in settings {
                    let lm = NGramLm::train(&seqs, &LmConfig { order, smoothing: lib, min_count: 1 }).unwrap();
                    let oracle = NaiveLm::new(&corpus, order, naive);
                    report.models += 1;
                    for q in queries.iter().chain(&corpus) {
                        let got = lm.log_prob(&TokenSeq::new(q.clone(), Scheme::Whitespace));
                        let want = oracle.log_prob(q);
                        report.max_abs_err = report.max_abs_err.max((got - want).abs());
                        report.queries += 1;
                    }
                    let predictable: Vec<&String> = lm.vocab().iter().filter(|w| *w != "<s>").collect();
                    for ctx in lm.contexts() {
                        let refs: Vec<&str> = ctx.iter().map(String::as_str).collect();
                        let sum: f64 = predictable.iter().map(|w| lm.ln_prob(&refs, w).exp()).sum();
                        report.max_norm_dev = report.max_norm_dev.max((sum - 1.0).abs());
                        report.contexts += 1;
                    }
                }
            }
        }
    }
    report
}

/// ARPA text for a unigram model that is uniform over `words`, `<unk>` and `</s>`.
pub fn uniform_arpa(words: &[&str]) -> (String, usize) {
    let v = words.len() + 2;
    let lp = (1.0 / v as f64).log10();
    let mut s = format!("\\data\\\nngram 1={}\n\n\\1-grams:\n", v + 1);
    s.push_str(&format!("{lp}\t</s>\n-99\t<s>\n{lp}\t<unk>\n"));
    for w in words {
        s.push_str(&format!("{lp}\t{w}\n"));
    }
    s.push_str("\n\\end\\\n");
    (s, v)
}

/// Largest |PPL - |V|| for uniform unigram models over 1..=`max_words` words.
pub fn uniform_ppl_error(max_words: usize) -> f64 {
    let pool = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=max_words.min(pool.len()) {
        let (arpa, v) = uniform_arpa(&pool[..n]);
        let lm = NGramLm::from_arpa(arpa.as_bytes()).unwrap();
        for _ in 0..20 {
            let len = rng.gen_range(1..12);
            let toks: Vec<String> = (0..len).map(|_| pool.choose(&mut rng).unwrap().to_string()).collect();
            let ppl = lm.perplexity(&TokenSeq::new(toks, Scheme::Whitespace)).unwrap().value;
            worst = worst.max((ppl - v as f64).abs());
        }
    }
    worst
}

#[derive(Debug, Default)]
pub struct AlignReport {
    pub grid_points: usize,
    pub max_formula_err: f64,
    pub documents: usize,
    pub sequences: u64,
    pub max_dp_err: f64,
    pub malformed: usize,
}

fn penalties_by_shape(params: &AlignmentParams) -> HashMap<(usize, usize), f64> {
    params.penalties.iter().map(|(b, p)| (b.shape(), *p)).collect()
}

fn text_of(len: usize) -> String {
    "x".repeat(len)
}

/// Formula grid plus DP-versus-enumeration on every document shape up to 6x6.
pub fn align_suite(draws_per_shape: u64) -> AlignReport {
    let mut report = AlignReport::default();
    let variants = [
        AlignmentParams::default(),
        AlignmentParams { c: 1.1, s2: 4.0, ..Default::default() },
    ];
    let mut lengths: Vec<(usize, usize)> = (0..=60).flat_map(|a| (0..=60).map(move |b| (a, b))).collect();
    lengths.extend((0..40).map(|i| (i * 17 % 400, i * 29 % 11)));
    lengths.extend([(400, 0), (0, 400), (900, 3), (2000, 0)]);
    for params in &variants {
        let pen = params.penalties[&BeadType::OneOne];
        for &(ls, lt) in &lengths {
            if ls == 0 && lt == 0 {
                continue;
            }
            let got = pair_alignment_score(&SentencePair::new(0, text_of(ls), text_of(lt)), params);
            let want = pair_score(ls, lt, params.c, params.s2, pen);
            report.max_formula_err = report.max_formula_err.max((got - want).abs());
            report.grid_points += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut restricted = AlignmentParams::default();
    restricted.penalties.retain(|b, _| matches!(b, BeadType::OneOne | BeadType::OneZero | BeadType::ZeroOne | BeadType::TwoOne));
    for params in [AlignmentParams::default(), restricted] {
        for n in 1..=6 {
            for m in 1..=6 {
                for _ in 0..draws_per_shape {
                    let src: Vec<usize> = (0..n).map(|_| rng.gen_range(0..50)).collect();
                    // targets loosely follow the sources so that every bead type wins somewhere
                    let tgt: Vec<usize> = (0..m)
                        .map(|j| {
                            let base = src.get(j).copied().unwrap_or(20) as f64;
                            (base * rng.gen_range(0.6..1.6)).round() as usize
                        })
                        .collect();
                    let src_txt: Vec<String> = src.iter().map(|&l| text_of(l)).collect();
                    let tgt_txt: Vec<String> = tgt.iter().map(|&l| text_of(l)).collect();
                    let a = align_doc(&src_txt, &tgt_txt, &params).unwrap();
                    let (best, visited) = BruteAligner::new(&src, &tgt, params.c, params.s2, penalties_by_shape(&params)).minimum();
                    report.max_dp_err = report.max_dp_err.max((a.cost - best).abs());
                    report.documents += 1;
                    report.sequences += visited;
                    let (mut i, mut j, mut sum) = (0, 0, 0.0);
                    for b in &a.beads {
                        if b.src.start != i || b.tgt.start != j || b.kind.shape() != (b.src.len(), b.tgt.len()) {
                            report.malformed += 1;
                        }
                        i = b.src.end;
                        j = b.tgt.end;
                        sum += b.cost;
                    }
                    if i != n || j != m || (sum - a.cost).abs() > 1e-9 {
                        report.malformed += 1;
                    }
                }
            }
        }
    }
    report
}

#[derive(Debug, Default)]
pub struct SelectionReport {
    pub fixtures: usize,
    pub checks: usize,
    pub mismatches: usize,
    pub crossing_violations: usize,
}

/// Randomized fixtures with heavy ties, compared with sort-then-prefix.
pub fn selection_suite(fixtures: usize, size: usize) -> SelectionReport {
    let mut report = SelectionReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for f in 0..fixtures {
        let coarse = f % 2 == 0;
        let mut ids: Vec<u64> = (0..size as u64).map(|i| i * 3 + (f as u64 % 3)).collect();
        ids.shuffle(&mut rng);
        let items: Vec<Item> = ids
            .iter()
            .map(|&id| {
                let score = if coarse { rng.gen_range(0..5) as f64 / 4.0 } else { rng.gen::<f64>() };
                (id, score, rng.gen_range(0..30))
            })
            .collect();
        let cands: Vec<Candidate> = items.iter().map(|&(id, score, words)| Candidate { id, score, words }).collect();
        let total: u64 = items.iter().map(|x| x.2).sum();
        report.fixtures += 1;
        for _ in 0..5 {
            let budget = rng.gen_range(1..=total + 20);
            let sel = select_by_budget(&cands, budget).unwrap();
            report.checks += 1;
            if sel.ids != budget_prefix(&items, budget) {
                report.mismatches += 1;
            }
            let words: HashMap<u64, u64> = items.iter().map(|x| (x.0, x.2)).collect();
            let before_last: u64 = sel.ids[..sel.ids.len().saturating_sub(1)].iter().map(|i| words[i]).sum();
            let crossing_ok = if sel.saturated { sel.ids.len() == size } else { before_last < budget && sel.words >= budget };
            if !crossing_ok {
                report.crossing_violations += 1;
            }
        }
        for (numer, denom) in [(1, 1), (50, 1), (100, 1), (125, 10), (333, 10), (rng.gen_range(1..=100), 1)] {
            let sel = select_top_percent(&cands, numer as f64 / denom as f64).unwrap();
            report.checks += 1;
            if sel.ids != percent_prefix(&items, numer, denom) {
                report.mismatches += 1;
            }
        }
    }
    report
}

#[derive(Debug, Default)]
pub struct NegativeReport {
    pub negatives: usize,
    pub tag_share: BTreeMap<String, f64>,
    pub truncate_violations: usize,
    pub swap_violations: usize,
    pub unchanged: usize,
    pub identical_runs: bool,
    pub identical_workers: bool,
}

fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn generate(pairs: &[SentencePair], policy: &CorruptionPolicy, workers: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
    let set = pool.install(|| build_training_set(pairs, policy)).unwrap();
    let mut out = Vec::new();
    write_labeled(&mut out, &set).unwrap();
    out
}

pub fn negative_sampling(n: usize, seed: u64) -> NegativeReport {
    let pairs = ToyParallel::new(seed).clean_pairs(n);
    let policy = CorruptionPolicy { seed, ..Default::default() };
    let set = build_training_set(&pairs, &policy).unwrap();
    let mut report = NegativeReport::default();
    let mut tags: BTreeMap<String, usize> = BTreeMap::new();
    for (pos, neg) in set.records.iter().step_by(2).zip(set.records.iter().skip(1).step_by(2)) {
        assert!(pos.label && !neg.label);
        report.negatives += 1;
        *tags.entry(neg.tag.to_string()).or_default() += 1;
        if neg.pair.source == pos.pair.source && neg.pair.target == pos.pair.target {
            report.unchanged += 1;
        }
        let changed: Vec<(&str, &str)> = [(&pos.pair.source, &neg.pair.source), (&pos.pair.target, &neg.pair.target)]
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        match neg.tag {
            Corruption::Truncate => {
                let ok = changed.len() == 1 && {
                    let (orig, cut) = (tokens(changed[0].0), tokens(changed[0].1));
                    let n = orig.len();
                    let removed = n - cut.len();
                    let lo = (0.3 * n as f64).ceil() as usize;
                    let hi = (0.7 * n as f64).ceil() as usize;
                    orig.starts_with(&cut) && (lo..=hi).contains(&removed)
                };
                report.truncate_violations += usize::from(!ok);
            }
            Corruption::Swap => {
                let ok = changed.len() == 1 && {
                    let (mut a, mut b) = (tokens(changed[0].0), tokens(changed[0].1));
                    a.sort_unstable();
                    b.sort_unstable();
                    a == b
                };
                report.swap_violations += usize::from(!ok);
            }
            _ => {}
        }
    }
    report.tag_share = tags.into_iter().map(|(k, v)| (k, v as f64 / report.negatives as f64)).collect();
    let one = generate(&pairs, &policy, 1);
    report.identical_runs = one == generate(&pairs, &policy, 1);
    report.identical_workers = one == generate(&pairs, &policy, 8);
    report
}

#[derive(Debug, Default)]
pub struct EndToEndReport {
    pub train_pairs: usize,
    pub heldout_pairs: usize,
    pub heldout_noise: f64,
    pub auc: f64,
    /// Best precision among thresholds with recall >= 0.5, and its threshold.
    pub precision_at_half_recall: f64,
    pub threshold: f64,
    pub recall: f64,
}

/// Trains the built-in filter on the first `train` pairs of the noisy toy
/// corpus (noise included, as it would be in practice) and evaluates on the
/// rest against the injected labels.
pub fn end_to_end(total: usize, train: usize, seed: u64) -> EndToEndReport {
    let corpus = ToyParallel::new(seed).noisy(total, 0.24);
    let (train_pairs, held) = corpus.pairs.split_at(train);
    let labels = &corpus.labels[train..];
    let set = build_training_set(train_pairs, &CorruptionPolicy { seed, ..Default::default() }).unwrap();
    let model = train_builtin(&set, &TrainConfig { seed, ..Default::default() }).unwrap();
    let scores: Vec<f64> = held.iter().map(|p| model.score(p)).collect();
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let curve = pr_curve(&scores, labels, &grid).unwrap();
    let best = curve
        .iter()
        .filter(|p| p.recall >= 0.5)
        .max_by(|a, b| a.precision.total_cmp(&b.precision))
        .copied()
        .unwrap();
    EndToEndReport {
        train_pairs: train,
        heldout_pairs: held.len(),
        heldout_noise: labels.iter().filter(|l| !**l).count() as f64 / labels.len() as f64,
        auc: roc_auc(&scores, labels).unwrap(),
        precision_at_half_recall: best.precision,
        threshold: best.threshold,
        recall: best.recall,
    }
}

#[derive(Debug, Default)]
pub struct LangIdReport {
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub accuracy: f64,
    pub languages: Vec<String>,
}

pub fn langid_from(train: &[(String, String)], test: &[(String, String)], seed: u64) -> LangIdReport {
    let model = LangIdModel::train(train.iter().map(|(t, l)| (t, l)), &LangIdConfig { seed, ..Default::default() }).unwrap();
    let correct = test.iter().filter(|(t, l)| model.detect(t).language == *l).count();
    LangIdReport {
        train_sentences: train.len(),
        test_sentences: test.len(),
        accuracy: correct as f64 / test.len() as f64,
        languages: model.languages().to_vec(),
    }
}

/// Toy sentences of one language, used where a shipped fixture is not at hand.
pub fn toy_langid(per_lang_train: usize, per_lang_test: usize) -> (Vec<(String, String)>, Vec<(String, String)>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (k, lang) in ["de", "en", "ja"].iter().enumerate() {
        train.extend(monolingual(lang, per_lang_train, 100 + k as u64).into_iter().map(|s| (s, lang.to_string())));
        test.extend(monolingual(lang, per_lang_test, 200 + k as u64).into_iter().map(|s| (s, lang.to_string())));
    }
    (train, test)
}

#[derive(Debug, Default)]
pub struct RemovalReport {
    pub cases: usize,
    /// Removals that would shrink the vocabulary, which changes the event space.
    pub vocab_changes: usize,
    pub violations: Vec<String>,
}

/// Enumerated corpora of up to `max_sentences` sentences over {a, b, c}:
/// dropping one sentence that leaves the vocabulary intact must not raise that
/// sentence's add-k probability.
pub fn add_k_removal(max_sentences: usize) -> RemovalReport {
    let words = ["a", "b", "c"];
    let mut sentences: Vec<Vec<&str>> = Vec::new();
    for len in 1..=2 {
        let mut idx = vec![0usize; len];
        loop {
            sentences.push(idx.iter().map(|i| words[*i]).collect());
            let Some(p) = (0..len).rev().find(|p| idx[*p] + 1 < words.len()) else { break };
            idx[p] += 1;
            idx[p + 1..].iter_mut().for_each(|x| *x = 0);
        }
    }
    let seq = |s: &[&str]| TokenSeq::new(s.iter().map(|t| t.to_string()).collect(), Scheme::Whitespace);
    let mut corpora: Vec<Vec<usize>> = (0..sentences.len()).map(|i| vec![i]).collect();
    for _ in 1..max_sentences {
        let longer: Vec<Vec<usize>> = corpora
            .iter()
            .flat_map(|c| (*c.last().unwrap()..sentences.len()).map(move |j| [c.clone(), vec![j]].concat()))
            .collect();
        corpora = longer;
    }
    let mut report = RemovalReport::default();
    for order in 1..=3 {
        for k in [0.5, 1.0] {
            let cfg = LmConfig { order, smoothing: Smoothing::AddK { k }, min_count: 1 };
            for corpus in &corpora {
                let full: Vec<TokenSeq> = corpus.iter().map(|i| seq(&sentences[*i])).collect();
                let lm = NGramLm::train(&full, &cfg).unwrap();
                for (drop, i) in corpus.iter().enumerate() {
                    let rest: Vec<TokenSeq> =
                        full.iter().enumerate().filter(|(j, _)| *j != drop).map(|(_, t)| t.clone()).collect();
                    let reduced = NGramLm::train(&rest, &cfg).unwrap();
                    if reduced.vocab() != lm.vocab() {
                        report.vocab_changes += 1;
                        continue;
                    }
                    let target = &full[drop];
                    report.cases += 1;
                    if reduced.log_prob(target) > lm.log_prob(target) + 1e-12 {
                        report.violations.push(format!("order {order} k {k} corpus {corpus:?} drop {i}"));
                    }
                }
            }
        }
    }
    report
}
