//! One function per subcommand. Each reads its inputs from a validated
//! [`RunConfig`], writes its primary output files, and prints a report whose
//! last line is `key=value`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use socatt_core::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use socatt_core::corpus::{load_corpus, load_lexicon, Label, LabeledCorpus};
use socatt_core::embeddings::{load_embeddings, load_word_embeddings, save_embeddings};
use socatt_core::eval::{average_f1, bootstrap_significance, word_specificity};
use socatt_core::graph::load_edge_list;
use socatt_core::homophily::{correctness_map, rewiring_experiment};
use socatt_core::line::{objective_estimate, train_line_embeddings};
use socatt_core::seed::derive_rng;
use socatt_core::synth::generate;
use socatt_core::training::fit;

use crate::{CliError, RunConfig};

type CmdResult = Result<(), CliError>;

fn path(p: &Option<PathBuf>) -> &Path {
    p.as_deref().expect("validated before dispatch")
}

fn write_file(p: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(p, contents).with_context(|| format!("cannot write {}", p.display()))
}

pub fn embed_network(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let graph = load_edge_list(path(&cfg.paths.graph))?;
    let mut rng = derive_rng(cfg.seed, "line", 0);
    let table = train_line_embeddings(&graph, &cfg.line, &mut rng)?;
    save_embeddings(&table, path(&cfg.paths.output))?;
    let objective = objective_estimate(&graph, &table, &cfg.line, 1000, cfg.seed)?;
    writeln!(out, "nodes={} edges={} dimension={}", graph.node_count(), graph.edge_count(), table.dim())?;
    writeln!(out, "objective={objective:.6}")?;
    Ok(())
}

pub fn train(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let fit_cfg = cfg.fit_config().map_err(CliError::Usage)?;
    let train = load_corpus(path(&cfg.paths.train))?;
    let dev = load_corpus(path(&cfg.paths.dev))?;
    let words = load_word_embeddings(path(&cfg.paths.words))?;
    let authors = match (&cfg.paths.authors, fit_cfg.shape.mode.uses_authors()) {
        (Some(p), true) => Some(load_embeddings(p)?),
        _ => None,
    };
    let (model, history) = fit(&fit_cfg, &train, &dev, words, authors)?;

    let ck_path = path(&cfg.paths.checkpoint);
    let echo = serde_json::to_value(cfg).context("cannot serialize the run configuration")?;
    save_checkpoint(&Checkpoint::new(echo, model), ck_path)?;
    let history_path = cfg
        .paths
        .history
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.history.tsv", ck_path.display())));
    write_file(&history_path, &history.to_tsv())?;

    write!(out, "{}", history.to_tsv())?;
    writeln!(out, "best_epoch={} dev_f1={:.6}", history.best_epoch, history.best_dev_f1)?;
    Ok(())
}

fn read_predictions(p: &Path, corpus: &LabeledCorpus) -> anyhow::Result<Vec<Label>> {
    let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
    let mut by_id = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| anyhow!("{}:{}: expected `id<TAB>label`", p.display(), i + 1))?;
        let label: Label = label
            .trim()
            .parse()
            .map_err(|e| anyhow!("{}:{}: {e}", p.display(), i + 1))?;
        if by_id.insert(id.to_string(), label).is_some() {
            bail!("{}:{}: duplicate prediction for `{id}`", p.display(), i + 1);
        }
    }
    corpus
        .documents()
        .iter()
        .map(|d| {
            by_id
                .get(&d.id)
                .copied()
                .ok_or_else(|| anyhow!("{} has no prediction for document `{}`", p.display(), d.id))
        })
        .collect()
}

fn checkpoint_predictions(p: &Path, corpus: &LabeledCorpus) -> anyhow::Result<Vec<Label>> {
    let model = load_checkpoint(p)?.model;
    let unknown = corpus
        .authors()
        .into_iter()
        .filter(|a| model.mode.uses_authors() && !model.knows_author(a))
        .count();
    if unknown > 0 {
        log::warn!("{unknown} author(s) have no embedding in {}", p.display());
    }
    Ok(corpus
        .documents()
        .iter()
        .map(|d| model.predict_label(d))
        .collect::<socatt_core::Result<_>>()?)
}

fn system_predictions(
    checkpoint: &Option<PathBuf>,
    predictions: &Option<PathBuf>,
    corpus: &LabeledCorpus,
) -> anyhow::Result<Option<Vec<Label>>> {
    match (checkpoint, predictions) {
        (Some(c), _) => checkpoint_predictions(c, corpus).map(Some),
        (None, Some(p)) => read_predictions(p, corpus).map(Some),
        (None, None) => Ok(None),
    }
}

pub fn eval(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let p = &cfg.paths;
    let test = load_corpus(path(&p.test))?;
    let gold = test.labels();
    let pred = system_predictions(&p.checkpoint, &p.predictions, &test)?.expect("validated before dispatch");
    let report = average_f1(&gold, &pred)?;

    let mut text = report.to_text();
    if let Some(other) = system_predictions(&p.compare, &p.compare_predictions, &test)? {
        let other_f1 = average_f1(&gold, &other)?.average_f1;
        let sig = bootstrap_significance(&gold, &pred, &other, cfg.eval.bootstrap_samples, cfg.seed)?;
        text.push_str(&format!("compare_avg_f1={other_f1:.6}\n"));
        text.push_str(&format!(
            "p_value={:.6} significant={} samples={}\n",
            sig.p_value, sig.significant, sig.samples
        ));
    }
    text.push_str(&format!("avg_f1={:.6}\n", report.average_f1));

    if let Some(o) = &p.output {
        write_file(o, &text)?;
    }
    if let Some(w) = &p.write_predictions {
        let lines: String = test
            .documents()
            .iter()
            .zip(&pred)
            .map(|(d, l)| format!("{}\t{l}\n", d.id))
            .collect();
        write_file(w, &lines)?;
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn homophily(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let p = &cfg.paths;
    let graph = load_edge_list(path(&p.graph))?;
    let corpus = load_corpus(path(&p.corpus))?;
    let lexicon = load_lexicon(path(&p.positive_lexicon), path(&p.negative_lexicon))?;
    let correct = correctness_map(&corpus, &lexicon);
    let report = rewiring_experiment(&graph, &correct, cfg.homophily.epochs, cfg.homophily.trials, cfg.seed)?;
    write_file(path(&p.output), &report.to_tsv())?;

    writeln!(out, "authors={} epochs={} trials={}", correct.len(), report.epochs, report.trials)?;
    writeln!(out, "epoch\tmean_assortativity\tstd_assortativity\tmean_overlap\tstd_overlap")?;
    for s in &report.summary {
        writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            s.epoch, s.mean_assortativity, s.std_assortativity, s.mean_overlap, s.std_overlap
        )?;
    }
    writeln!(out, "observed_assortativity={:.6}", report.observed)?;
    Ok(())
}

pub fn analyze_words(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let p = &cfg.paths;
    let model = load_checkpoint(path(&p.checkpoint))?.model;
    let lexicon = load_lexicon(path(&p.positive_lexicon), path(&p.negative_lexicon))?;
    let ws = word_specificity(&model, &lexicon, cfg.eval.top_n)?;
    let mut text = ws.to_text();
    text.push_str(&format!("skipped_oov={}\n", ws.skipped_oov));
    if let Some(o) = &p.output {
        write_file(o, &text)?;
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn synth(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let data = generate(&cfg.synth)?;
    let dir = path(&cfg.paths.out_dir);
    data.write(dir)?;
    writeln!(
        out,
        "authors={} edges={} train={} dev={} test={}",
        data.graph.node_count(),
        data.graph.edge_count(),
        data.train.len(),
        data.dev.len(),
        data.test.len()
    )?;
    writeln!(out, "out_dir={}", dir.display())?;
    Ok(())
}
