use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use stereoreader::adapter::{build_prompt, constrain, ingest_predictions, ChatClient, PromptMode, PromptRecord};
use stereoreader::analysis::{
    default_stopwords, distinct_words, emit_heatmap, relationship_arc, subversion_profile, LabelSource, Prior,
};
use stereoreader::canonicalize::{canonicalize_teleplay, read_rosters, TmdbClient};
use stereoreader::corpus::{
    read_corpus, read_instances, read_jsonl, read_predictions, read_relations, write_corpus, write_jsonl, Distribution,
    DyadInstance, InstanceKey, PredictionRecord, Split, Teleplay,
};
use stereoreader::dataset::{build_corpus_instances, corpus_stats, read_episode_map, BuildOptions, NameLexicon};
use stereoreader::metrics::{accuracy, align, bootstrap_ci, bootstrap_kappa_labels, correctness, kappa_of_labels};
use stereoreader::parser::{lines_from_ocr_jsonl, lines_from_text, parse_teleplay};
use stereoreader::reader::{majority_baseline, train, MaskMode, Model, Optimizer};
use stereoreader::taxonomy::RelationType;
use stereoreader::{Error, Result};

use crate::args::*;
use crate::config::Config;
use crate::Usage;

pub struct Context {
    pub config: Config,
    pub seed: Option<u64>,
}

impl Context {
    fn seed(&self) -> u64 {
        self.config.seed(self.seed)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn schema(path: &Path, line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        line,
        field: field.into(),
        message: message.into(),
    }
}

fn parse_dyad(s: &str) -> anyhow::Result<(String, String)> {
    match s.split(',').map(str::trim).collect::<Vec<_>>().as_slice() {
        [h, t] if !h.is_empty() && !t.is_empty() && h != t => Ok((h.to_string(), t.to_string())),
        _ => Err(Usage(format!(
            "--dyad expects \"HEAD,TAIL\" with two different names, got `{s}`"
        ))
        .into()),
    }
}

fn usage<T: std::str::FromStr<Err = Error>>(flag: &str, value: &str) -> anyhow::Result<T> {
    value.parse().map_err(|e: Error| Usage(format!("{flag}: {e}")).into())
}

pub fn parse(ctx: &Context, a: &ParseArgs) -> anyhow::Result<()> {
    let tolerance = a.tolerance.unwrap_or(ctx.config.parse.tolerance);
    let char_width = a.char_width.unwrap_or(ctx.config.parse.char_width);
    if !(char_width.is_finite() && char_width > 0.0) {
        return Err(Usage("--char-width must be positive".into()).into());
    }
    let ext = match a.format {
        InputFormat::Text => "txt",
        InputFormat::OcrJson => "jsonl",
    };
    let entries = fs::read_dir(&a.input).map_err(|e| Error::Io {
        path: a.input.clone(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Invalid(format!("no *.{ext} files in {}", a.input.display())).into());
    }

    let mut corpus = files
        .par_iter()
        .map(|path| {
            let title = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let content = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let lines = match a.format {
                InputFormat::Text => lines_from_text(&content),
                InputFormat::OcrJson => lines_from_ocr_jsonl(&content, char_width, path)?,
            };
            parse_teleplay(&title, &lines, tolerance)
        })
        .collect::<Result<Vec<Teleplay>>>()?;

    if let Some(path) = &a.splits {
        let splits = read_splits(path)?;
        for t in &mut corpus {
            match splits.get(&t.title_id) {
                Some(s) => t.split = *s,
                None => log::warn!("{} has no split assignment", t.title_id),
            }
        }
    }
    let scenes: usize = corpus.iter().map(|t| t.scenes.len()).sum();
    log::info!("parsed {} teleplays, {scenes} scenes", corpus.len());
    write_corpus(&corpus, &a.out)?;
    Ok(())
}

fn read_splits(path: &Path) -> Result<HashMap<String, Split>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((title, split)) = line.split_once('\t') else {
            return Err(schema(path, i + 1, "split", "expected `title_id<TAB>split`"));
        };
        let split: Split = split
            .trim()
            .parse()
            .map_err(|e: Error| schema(path, i + 1, "split", e.to_string()))?;
        out.insert(title.trim().to_string(), split);
    }
    Ok(out)
}

pub fn canonicalize(a: &CanonicalizeArgs) -> anyhow::Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let out: Vec<Teleplay> = if a.tmdb {
        let mut client = TmdbClient::from_env()?;
        if let Some(dir) = &a.tmdb_cache {
            fs::create_dir_all(dir).map_err(|e| Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            client = client.with_cache(dir);
        }
        corpus
            .iter()
            .map(|t| {
                let mut roster = client.fetch_roster(&t.title_id.replace('_', " "))?;
                roster.title_id = t.title_id.clone();
                Ok(canonicalize_teleplay(t, &roster))
            })
            .collect::<Result<_>>()?
    } else {
        let path = a.roster.as_ref().expect("clap requires --roster without --tmdb");
        let rosters = read_rosters(path)?;
        corpus
            .iter()
            .map(|t| {
                let roster = rosters
                    .get(&t.title_id)
                    .ok_or_else(|| Error::Invalid(format!("{}: no roster for `{}`", path.display(), t.title_id)))?;
                Ok(canonicalize_teleplay(t, roster))
            })
            .collect::<Result<_>>()?
    };
    write_corpus(&out, &a.out)?;
    Ok(())
}

pub fn build(ctx: &Context, a: &BuildArgs) -> anyhow::Result<()> {
    let mut corpus = read_corpus(&a.corpus)?;
    if let Some(split) = &a.split {
        let split: Split = usage("--split", split)?;
        corpus.retain(|t| t.split == split);
        if corpus.is_empty() {
            log::warn!("no titles in split {}", split.as_str());
        }
    }
    let relations = read_relations(&a.relations)?;
    let mut options = BuildOptions::default();
    if a.anonymize {
        let lexicon = NameLexicon::read(a.lexicon.as_ref().expect("clap requires --lexicon"))?;
        options.anonymize = Some((lexicon, ctx.seed()));
    }
    if let Some(path) = &a.episodes {
        options.episodes = read_episode_map(path)?;
    }
    let instances = build_corpus_instances(&corpus, &relations, &options);
    if instances.is_empty() {
        log::warn!("no labeled dyads found");
    }
    log::info!("built {} instances", instances.len());
    write_jsonl(&instances, &a.out)?;
    Ok(())
}

pub fn stats(a: &StatsArgs) -> anyhow::Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let instances = read_instances(&a.instances)?;
    let table = corpus_stats(&corpus, &instances);
    print!("{table}");
    if let Some(out) = &a.out {
        let json = serde_json::to_string_pretty(&table).map_err(|e| Error::Invalid(e.to_string()))?;
        write_text(out, &(json + "\n"))?;
    }
    Ok(())
}

pub fn train_cmd(ctx: &Context, a: &TrainArgs) -> anyhow::Result<()> {
    let mut cfg = ctx.config.reader.clone();
    if let Some(s) = ctx.seed.or(ctx.config.seed) {
        cfg.seed = s;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.d_model {
        cfg.d_model = v;
    }
    if let Some(v) = a.max_len {
        cfg.max_len = v;
    }
    if let Some(v) = a.warmup_steps {
        cfg.warmup_steps = v;
    }
    if let Some(v) = a.optimizer {
        cfg.optimizer = match v {
            OptimizerArg::Sgd => Optimizer::Sgd,
            OptimizerArg::Adam => Optimizer::Adam,
        };
    }
    if let Some(v) = a.mask_mode {
        cfg.mask_mode = match v {
            MaskArg::Additive => MaskMode::Additive,
            MaskArg::Multiplicative => MaskMode::Multiplicative,
        };
    }
    if a.no_pooling {
        cfg.use_scene_pooling = false;
    }
    cfg.validate().map_err(|e| Usage(e.to_string()))?;

    let instances = read_instances(&a.instances)?;
    let report = train(&instances, &cfg)?;
    log::info!("initial loss {:.4}", report.initial_loss);
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        log::info!("epoch {} loss {loss:.4}", epoch + 1);
    }
    report.model.save(&a.out)?;
    Ok(())
}

pub fn predict(a: &PredictArgs) -> anyhow::Result<()> {
    let model = Model::load(&a.model)?;
    let instances = read_instances(&a.instances)?;
    let preds = model.predict_all(&instances)?;
    write_jsonl(&preds, &a.out)?;
    Ok(())
}

pub fn prompt(ctx: &Context, a: &PromptArgs) -> anyhow::Result<()> {
    let mode: PromptMode = usage("--mode", &a.mode)?;
    let max = a.max_scene_tokens.unwrap_or(ctx.config.prompt.max_scene_tokens);
    let instances = read_instances(&a.instances)?;
    let prompts: Vec<PromptRecord> = instances.par_iter().map(|i| build_prompt(i, mode, max)).collect();
    write_jsonl(&prompts, &a.out)?;
    Ok(())
}

pub fn infer(ctx: &Context, a: &InferArgs) -> anyhow::Result<()> {
    let prompts: Vec<PromptRecord> = read_jsonl(&a.prompts)?;
    let client = ChatClient::from_env()?;
    let in_flight = a.in_flight.unwrap_or(ctx.config.prompt.in_flight);
    let replies = client.complete_all(&prompts, in_flight);
    let mut preds = Vec::new();
    let mut failures = Vec::new();
    for (p, reply) in prompts.iter().zip(replies) {
        match reply {
            Ok(text) => {
                let c = constrain(&text);
                if !c.exact() {
                    log::warn!("{}: reply `{}` constrained to {}", p.key(), text.trim(), c.label);
                }
                preds.push(PredictionRecord::new(
                    p.key(),
                    Distribution::one_hot(c.label),
                    client.model.as_str(),
                ));
            }
            Err(e) => {
                log::error!("{e}");
                failures.push(e);
            }
        }
    }
    write_jsonl(&preds, &a.out)?;
    match failures.len() {
        0 => Ok(()),
        1 => Err(failures.remove(0).into()),
        n => {
            let first = failures.remove(0);
            Err(anyhow::Error::new(first).context(format!("{n} of {} prompts failed", prompts.len())))
        }
    }
}

pub fn ingest(a: &IngestArgs) -> anyhow::Result<()> {
    let known: Option<HashSet<InstanceKey>> = match &a.instances {
        Some(p) => Some(read_instances(p)?.iter().map(DyadInstance::key).collect()),
        None => None,
    };
    let report = ingest_predictions(&a.file, &a.model_id, known.as_ref())?;
    println!("records      {}", report.records.len());
    println!("unmatched    {}", report.unmatched.len());
    println!("duplicates   {}", report.duplicates.len());
    println!("relabeled    {}", report.relabeled.len());
    for (key, raw, label) in &report.relabeled {
        println!("  {key}: `{raw}` -> {label}");
    }
    if let Some(out) = &a.out {
        write_jsonl(&report.records, out)?;
    }
    Ok(())
}

fn truth_map(instances: &[DyadInstance]) -> HashMap<InstanceKey, RelationType> {
    instances.iter().map(|i| (i.key(), i.label)).collect()
}

fn model_name(preds: &[PredictionRecord], path: &Path) -> String {
    let ids: std::collections::BTreeSet<&str> = preds.iter().map(|p| p.model_id.as_str()).collect();
    match ids.into_iter().collect::<Vec<_>>().as_slice() {
        [one] => one.to_string(),
        _ => path.file_stem().and_then(|s| s.to_str()).unwrap_or("preds").to_string(),
    }
}

pub fn evaluate(ctx: &Context, a: &EvaluateArgs) -> anyhow::Result<()> {
    let resamples = a.resamples.unwrap_or(ctx.config.evaluate.resamples);
    let level = a.level.unwrap_or(ctx.config.evaluate.level);
    if resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Usage("--resamples must be positive and --level in (0, 1)".into()).into());
    }
    let seed = ctx.seed();
    let instances = read_instances(&a.truth)?;
    let truths = truth_map(&instances);

    let mut rows: Vec<(String, Vec<PredictionRecord>)> = Vec::new();
    let preds = read_predictions(&a.preds)?;
    rows.push((model_name(&preds, &a.preds), preds));
    if let Some(path) = &a.compare {
        let other = read_predictions(path)?;
        rows.push((model_name(&other, path), other));
    }
    if let Some(BaselineArg::Majority) = a.baseline {
        let train_set = read_instances(a.train.as_ref().expect("clap requires --train"))?;
        let baseline = majority_baseline(&train_set)?;
        rows.push((
            "majority".into(),
            instances.iter().map(|i| baseline.predict(i)).collect(),
        ));
    }

    let mut report = String::new();
    let pct = level * 100.0;
    writeln!(report, "{:<24}{:>8}{:>10}  {pct:.0}% CI", "model", "n", "accuracy").unwrap();
    for (name, preds) in &rows {
        if preds.len() < truths.len() {
            log::warn!(
                "{name}: {} of {} test instances have predictions",
                preds.len(),
                truths.len()
            );
        }
        let acc = accuracy(preds, &truths)?;
        let (lo, hi) = bootstrap_ci(&correctness(preds, &truths)?, resamples, level, seed)?;
        writeln!(report, "{name:<24}{:>8}{acc:>10.3}  [{lo:.3}, {hi:.3}]", preds.len()).unwrap();
    }
    if a.compare.is_some() {
        let (la, lb) = align(&rows[0].1, &rows[1].1)?;
        let kappa = kappa_of_labels(&la, &lb)?;
        let (lo, hi) = bootstrap_kappa_labels(&la, &lb, resamples, level, seed)?;
        writeln!(
            report,
            "\ncohen's kappa ({} vs {}): {kappa:.3}  [{lo:.3}, {hi:.3}]",
            rows[0].0, rows[1].0
        )
        .unwrap();
    }
    print!("{report}");
    if let Some(out) = &a.out {
        write_text(out, &report)?;
    }
    Ok(())
}

pub fn distinct(a: &DistinctWordsArgs) -> anyhow::Result<()> {
    let by: LabelSource = usage("--by", &a.by)?;
    let relation: RelationType = usage("--type", &a.relation)?;
    let prior = match a.flat_prior {
        Some(alpha) if alpha > 0.0 => Prior::Flat { alpha },
        Some(_) => return Err(Usage("--flat-prior must be positive".into()).into()),
        None => Prior::default(),
    };
    let stopwords = if a.keep_stopwords {
        HashSet::new()
    } else {
        default_stopwords()
    };
    let preds = read_predictions(&a.preds)?;
    let instances = read_instances(&a.instances)?;
    let ranked = distinct_words(&preds, &instances, by, relation, a.top, &stopwords, prior)?;
    let mut csv = String::from("rank,token,delta,z\n");
    for (i, r) in ranked.iter().enumerate() {
        println!("{:>3}  {:<20}{:>9.3}{:>9.3}", i + 1, r.token, r.delta, r.z);
        writeln!(csv, "{},{},{:.6},{:.6}", i + 1, r.token, r.delta, r.z).unwrap();
    }
    if let Some(out) = &a.out {
        write_text(out, &csv)?;
    }
    Ok(())
}

pub fn arc(a: &ArcArgs) -> anyhow::Result<()> {
    let (h, t) = parse_dyad(&a.dyad)?;
    let preds = read_predictions(&a.preds)?;
    let instances = read_instances(&a.instances)?;
    let table = relationship_arc(&preds, &instances, (&h, &t), a.directed);
    if table.is_empty() {
        return Err(Error::Invalid(format!("no seasoned predictions for {h}/{t}")).into());
    }
    emit_heatmap(&table, a.top_n, &a.out, a.svg.as_deref())?;
    Ok(())
}

pub fn subversion(a: &SubversionArgs) -> anyhow::Result<()> {
    let (h, t) = parse_dyad(&a.dyad)?;
    let preds = read_predictions(&a.preds)?;
    let instances = read_instances(&a.instances)?;
    let profile = subversion_profile(&preds, &instances, (&h, &t))?;
    let mut text = String::new();
    writeln!(text, "dyad        {h}->{t}").unwrap();
    writeln!(text, "gold        {}", profile.truth).unwrap();
    writeln!(text, "scenes      {}", profile.count).unwrap();
    writeln!(text, "subversion  {:.4}", profile.rate).unwrap();
    for (i, p) in profile.distribution.iter().enumerate() {
        if *p > 0.0 {
            let r = RelationType::from_index(i).expect("index in range");
            writeln!(text, "  {:<22}{p:.4}", r.label()).unwrap();
        }
    }
    print!("{text}");
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    Ok(())
}
