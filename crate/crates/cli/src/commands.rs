use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use bitext_sieve::accept::{train_builtin, AcceptabilityModel, FeatureConfig, ScorerCommand, TrainConfig};
use bitext_sieve::align::{pair_alignment_score, read_dictionary, AlignmentParams};
use bitext_sieve::corpus::{format_score, read_bitext, read_scored, write_columns, write_pair, write_scored, ErrorPolicy, ReadOptions, ScoredRecord};
use bitext_sieve::domain::{DomainConfig, DomainFilter, InDomainLm};
use bitext_sieve::eval::{corpus_stats, parse_grid, pr_curve, roc_auc, StatsRecord};
use bitext_sieve::langid::{LangIdConfig, LangIdModel};
use bitext_sieve::lm::{LmConfig, NGramLm, Smoothing};
use bitext_sieve::pipeline::{score_corpus, select_by_budget, select_top_percent, Candidate, Filters, LanguageFilter, Selection};
use bitext_sieve::synth::{build_training_set, read_labeled, write_labeled, CorruptionPolicy};
use bitext_sieve::tokenize::{token_count, tokenize, Scheme};
use bitext_sieve::types::{SentencePair, Side};
use bitext_sieve::Error;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::*;
use crate::manifest::{sidecar, RunManifest};
use crate::UsageError;

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::TrainLangid(a) => train_langid(a),
        Command::TrainLm(a) => train_lm(a),
        Command::GenSynth(a) => gen_synth(a),
        Command::TrainAccept(a) => train_accept(a),
        Command::AlignScore(a) => align_score(a),
        Command::Score(a) => score(a),
        Command::Select(a) => select(a),
        Command::EvalPr(a) => eval_pr(a),
        Command::Stats(a) => stats(a),
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path).map(BufReader::new).map_err(|e| Error::file(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::file(path, e))
}

fn finish(w: BufWriter<File>, path: &Path) -> Result<()> {
    w.into_inner().map_err(|e| Error::file(path, e.into_error()))?.sync_all().map_err(|e| Error::file(path, e))?;
    Ok(())
}

fn manifest<A: Serialize>(cmd: &'static str, args: &A, seed: Option<u64>) -> Result<RunManifest> {
    Ok(RunManifest::new(cmd, serde_json::to_value(args)?, seed))
}

fn read_options(input: &Input) -> ReadOptions {
    ReadOptions {
        on_error: match input.on_error {
            OnError::Skip => ErrorPolicy::Skip,
            OnError::Abort => ErrorPolicy::Abort,
        },
        nfc: input.nfc,
    }
}

fn load_bitext(input: &Input) -> Result<Vec<SentencePair>> {
    let (pairs, skipped) = read_bitext(&input.input, read_options(input))?;
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed lines", input.input.display());
    }
    Ok(pairs)
}

/// Splits `a<TAB>b` lines; blank lines are ignored.
fn read_two_columns(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rows = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line.split_once('\t').ok_or_else(|| Error::MalformedLine {
            line: i as u64,
            reason: format!("{}: expected two tab-separated columns", path.display()),
        })?;
        rows.push((a.to_owned(), b.trim_end().to_owned()));
    }
    Ok(rows)
}

fn train_langid(a: &TrainLangid) -> Result<()> {
    let rows = read_two_columns(&a.input)?;
    let cfg = LangIdConfig { n_max: a.nmax, buckets: a.buckets, epochs: a.epochs, learning_rate: a.lr, seed: a.seed };
    let model = LangIdModel::train(rows.iter().map(|(t, l)| (t, l)), &cfg)?;
    let mut w = create(&a.out)?;
    model.save(&mut w)?;
    finish(w, &a.out)?;
    log::info!("languages: {}", model.languages().join(","));

    let mut m = manifest("train-langid", a, Some(a.seed))?;
    m.input(&a.input)?;
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}

fn train_lm(a: &TrainLm) -> Result<()> {
    let mut sentences = Vec::new();
    for line in open(&a.input)?.lines() {
        let line = line.map_err(|e| Error::file(&a.input, e))?;
        let t = tokenize(&line, a.scheme);
        if !t.is_empty() {
            sentences.push(t);
        }
    }
    if let (Some(n), Some(seed)) = (a.sample, a.seed) {
        if n < sentences.len() {
            let mut keep = vec![false; sentences.len()];
            for i in index::sample(&mut ChaCha8Rng::seed_from_u64(seed), sentences.len(), n) {
                keep[i] = true;
            }
            sentences = sentences.into_iter().zip(keep).filter_map(|(t, k)| k.then_some(t)).collect();
        }
    }
    let smoothing = match a.smoothing {
        SmoothingKind::Kn => Smoothing::KneserNey { discount: a.discount },
        SmoothingKind::Addk => Smoothing::AddK { k: a.k },
    };
    let lm = NGramLm::train(&sentences, &LmConfig { order: a.order, smoothing, min_count: a.min_count })?;
    let mut w = create(&a.out)?;
    lm.to_arpa(&mut w)?;
    finish(w, &a.out)?;
    log::info!("{} sentences, n-gram counts {:?}", sentences.len(), lm.counts());

    let mut m = manifest("train-lm", a, a.seed)?;
    m.input(&a.input)?;
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}

fn gen_synth(a: &GenSynth) -> Result<()> {
    let (pairs, skipped) = read_bitext(&a.pos, ReadOptions::default())?;
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed lines", a.pos.display());
    }
    let policy = CorruptionPolicy {
        window: a.k,
        seed: a.seed,
        src_scheme: a.schemes.src_scheme,
        tgt_scheme: a.schemes.tgt_scheme,
        ..Default::default()
    };
    let set = build_training_set(&pairs, &policy)?;
    let mut w = create(&a.out)?;
    write_labeled(&mut w, &set)?;
    finish(w, &a.out)?;

    let mut m = manifest("gen-synth", a, Some(a.seed))?;
    m.input(&a.pos)?;
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}

fn train_accept(a: &TrainAccept) -> Result<()> {
    let set = read_labeled(open(&a.labeled)?)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        em_iterations: a.em_iterations,
        seed: a.seed,
        features: FeatureConfig { src_scheme: a.schemes.src_scheme, tgt_scheme: a.schemes.tgt_scheme, ..Default::default() },
        ..Default::default()
    };
    let model = AcceptabilityModel::Builtin(train_builtin(&set, &cfg)?);
    let mut w = create(&a.out)?;
    model.save(&mut w)?;
    finish(w, &a.out)?;

    let mut m = manifest("train-accept", a, Some(a.seed))?;
    m.input(&a.labeled)?;
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}

fn align_score(a: &AlignScore) -> Result<()> {
    let pairs = load_bitext(&a.input)?;
    let dictionary = a.dict.as_deref().map(|p| read_dictionary(open(p)?)).transpose()?;
    let params = AlignmentParams {
        c: a.c,
        s2: a.s2,
        lambda: a.lambda,
        dictionary,
        src_scheme: a.schemes.src_scheme,
        tgt_scheme: a.schemes.tgt_scheme,
        ..Default::default()
    };
    params.validate()?;
    let scores: Vec<f64> = pairs.par_iter().map(|p| pair_alignment_score(p, &params)).collect();
    let mut w = create(&a.out)?;
    for (p, s) in pairs.iter().zip(&scores) {
        write_columns(&mut w, p)?;
        writeln!(w, "\t{}", format_score(*s)).map_err(|e| Error::file(&a.out, e))?;
    }
    finish(w, &a.out)?;

    let mut m = manifest("align-score", a, None)?;
    m.input(&a.input.input)?;
    if let Some(d) = &a.dict {
        m.input(d)?;
    }
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}

fn scorer(cmd: &str, p: &ProtoLimits) -> ScorerCommand {
    ScorerCommand {
        command: cmd.to_owned(),
        window: p.proto_window,
        timeout: Duration::from_secs(p.proto_timeout),
        retries: p.proto_retries,
    }
}

fn load_lm(path: &Path) -> Result<NGramLm> {
    NGramLm::from_arpa(open(path)?).with_context(|| format!("loading {}", path.display()))
}

#[derive(Serialize)]
struct ScoreStats<'a> {
    input: &'a Path,
    records: u64,
    skipped_lines: u64,
    normalization: &'a bitext_sieve::pipeline::NormalizationStats,
}

fn score(a: &Score) -> Result<()> {
    let mut m = manifest("score", a, None)?;

    let langid = match &a.langid {
        Some(path) => {
            let (Some(src), Some(tgt)) = (&a.want_src, &a.want_tgt) else {
                return Err(usage("--langid needs --want-src and --want-tgt"));
            };
            m.input(path)?;
            Some((LangIdModel::load(open(path)?)?, src.clone(), tgt.clone()))
        }
        None if a.want_src.is_some() || a.want_tgt.is_some() => {
            return Err(usage("--want-src/--want-tgt need --langid"));
        }
        None => None,
    };
    let accept = match (&a.accept, &a.accept_proto) {
        (Some(path), _) => {
            m.input(path)?;
            Some(AcceptabilityModel::load(open(path)?)?)
        }
        (None, Some(cmd)) => Some(AcceptabilityModel::External(scorer(cmd, &a.proto))),
        (None, None) => None,
    };
    let wants_domain = a.domain || a.lm_in.is_some() || a.lm_in_proto.is_some() || a.lm_non.is_some();
    let domain = if wants_domain {
        let Some(non) = &a.lm_non else {
            return Err(usage("the domain filter needs --lm-non"));
        };
        let in_domain = match (&a.lm_in, &a.lm_in_proto) {
            (Some(path), _) => {
                m.input(path)?;
                InDomainLm::Local(load_lm(path)?)
            }
            (None, Some(cmd)) => InDomainLm::External(scorer(cmd, &a.proto)),
            (None, None) => return Err(usage("the domain filter needs --lm-in or --lm-in-proto")),
        };
        m.input(non)?;
        let cfg = DomainConfig { clip: a.clip, cutoff: a.cutoff, scheme: a.schemes.tgt_scheme };
        cfg.validate().map_err(|e| usage(format!("--clip/--cutoff: {e}")))?;
        Some(DomainFilter::new(cfg, in_domain, load_lm(non)?)?)
    } else {
        None
    };

    let (pairs, skipped) = read_bitext(&a.input.input, read_options(&a.input))?;
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed lines", a.input.input.display());
    }
    m.input(&a.input.input)?;
    let filters = Filters {
        langid: langid.as_ref().map(|(model, s, t)| LanguageFilter { model, want_src: s.clone(), want_tgt: t.clone() }),
        acceptability: accept.as_ref(),
        domain: domain.as_ref(),
    };
    let corpus_id = a.input.input.display().to_string();
    let scored = score_corpus(&pairs, &filters, &corpus_id)?;

    let mut w = create(&a.out)?;
    for (p, s) in pairs.iter().zip(&scored.scores) {
        write_scored(&mut w, p, s)?;
    }
    finish(w, &a.out)?;
    let stats_path = sidecar(&a.out, "stats.json");
    let stats = ScoreStats { input: &a.input.input, records: pairs.len() as u64, skipped_lines: skipped, normalization: &scored.stats };
    std::fs::write(&stats_path, serde_json::to_string_pretty(&stats)? + "\n").map_err(|e| Error::file(&stats_path, e))?;

    m.output(&a.out)?;
    m.output(&stats_path)?;
    m.write_for(&a.out)?;
    Ok(())
}

fn candidates(records: &[ScoredRecord], side: Side, scheme: Scheme) -> Vec<Candidate> {
    records
        .par_iter()
        .map(|r| Candidate {
            id: r.pair.id,
            score: r.scores.final_score,
            words: token_count(r.pair.side(side), scheme) as u64,
        })
        .collect()
}

fn check_percent(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(usage(format!("--top-percent must be in (0, 100], got {p}")));
    }
    Ok(())
}

fn check_budget(b: u64) -> Result<()> {
    if b == 0 {
        return Err(usage("--budget-words must be positive"));
    }
    Ok(())
}

fn run_selection(records: &[ScoredRecord], budget: Option<u64>, percent: Option<f64>, side: Side, scheme: Scheme) -> Result<Option<Selection>> {
    let cands = || candidates(records, side, scheme);
    Ok(match (budget, percent) {
        (Some(b), _) => {
            check_budget(b)?;
            let sel = select_by_budget(&cands(), b)?;
            if sel.saturated {
                log::warn!("budget of {b} words exceeds the corpus ({} words); selecting everything", sel.words);
            }
            Some(sel)
        }
        (None, Some(p)) => {
            check_percent(p)?;
            Some(select_top_percent(&cands(), p)?)
        }
        (None, None) => None,
    })
}

fn select(a: &Select) -> Result<()> {
    if let Some(p) = a.top_percent {
        check_percent(p)?;
    }
    let records = read_scored(&a.input)?;
    let sel = run_selection(&records, a.budget_words, a.top_percent, a.side, a.scheme)?.expect("clap requires a criterion");
    let chosen: BTreeSet<u64> = sel.ids.iter().copied().collect();
    let mut w = create(&a.out)?;
    for r in records.iter().filter(|r| chosen.contains(&r.pair.id)) {
        if a.keep_scores {
            write_scored(&mut w, &r.pair, &r.scores)?;
        } else {
            write_pair(&mut w, &r.pair)?;
        }
    }
    finish(w, &a.out)?;
    log::info!("selected {} of {} pairs, {} words on the {} side", sel.ids.len(), records.len(), sel.words, a.side);

    let mut m = manifest("select", a, None)?;
    m.input(&a.input)?;
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}

fn column(r: &ScoredRecord, c: Column) -> f64 {
    match c {
        Column::Lang => r.scores.language,
        Column::Accept => r.scores.acceptability,
        Column::Domain => r.scores.domain,
        Column::Final => r.scores.final_score,
    }
}

fn eval_pr(a: &EvalPr) -> Result<()> {
    let grid = parse_grid(&a.grid).map_err(|e| usage(format!("--grid: {e}")))?;
    let records = read_scored(&a.scored)?;
    let mut gold: HashMap<u64, bool> = HashMap::new();
    for (id, label) in read_two_columns(&a.labels)? {
        let bad = || Error::data(format!("{}: bad label row `{id}\t{label}`", a.labels.display()));
        let id: u64 = id.trim().parse().map_err(|_| bad())?;
        let label = match label.trim() {
            "1" => true,
            "0" => false,
            _ => return Err(bad().into()),
        };
        gold.insert(id, label);
    }
    let mut scores = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for r in &records {
        let l = gold.get(&r.pair.id).ok_or_else(|| Error::data(format!("no label for id {}", r.pair.id)))?;
        scores.push(column(r, a.column));
        labels.push(*l);
    }
    let curve = pr_curve(&scores, &labels, &grid)?;
    let mut w = create(&a.out)?;
    let io = |e| Error::file(&a.out, e);
    writeln!(w, "threshold\tprecision\trecall\tpredicted\ttrue_positives").map_err(io)?;
    for p in &curve {
        writeln!(w, "{}\t{}\t{}\t{}\t{}", format_score(p.threshold), format_score(p.precision), format_score(p.recall), p.predicted, p.true_positives)
            .map_err(io)?;
    }
    finish(w, &a.out)?;
    match roc_auc(&scores, &labels) {
        Ok(auc) => println!("auc\t{}", format_score(auc)),
        Err(e) => log::warn!("AUC undefined: {e}"),
    }

    let mut m = manifest("eval-pr", a, None)?;
    m.input(&a.scored)?;
    m.input(&a.labels)?;
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}

fn stats(a: &Stats) -> Result<()> {
    let records = read_scored(&a.input)?;
    let sel = run_selection(&records, a.budget_words, a.top_percent, a.side, a.scheme)?;
    let chosen: Option<BTreeSet<u64>> = sel.map(|s| s.ids.into_iter().collect());
    let rows: Vec<StatsRecord> = records
        .iter()
        .map(|r| StatsRecord {
            scores: r.scores,
            words: token_count(r.pair.side(a.side), a.scheme) as u64,
            selected: match &chosen {
                Some(ids) => ids.contains(&r.pair.id),
                None => r.scores.final_score > 0.0,
            },
        })
        .collect();
    let report = corpus_stats(&rows, a.clip);
    std::fs::write(&a.out, serde_json::to_string_pretty(&report)? + "\n").map_err(|e| Error::file(&a.out, e))?;
    for (name, f) in &report.filters {
        log::info!("zeroed by {name} filter: {:.1}%", f.zeroed_fraction * 100.0);
    }

    let mut m = manifest("stats", a, None)?;
    m.input(&a.input)?;
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}
