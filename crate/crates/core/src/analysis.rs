//! Interpreting predictions: distinct words per relation type, per-season
//! relationship arcs and how far predictions drift from the gold label.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{DyadInstance, InstanceKey, PredictionRecord};
use crate::dataset::{is_marker, LINE};
use crate::error::{Error, Result};
use crate::taxonomy::{taxonomy, RelationType, NUM_RELATIONS};

pub type Counts = BTreeMap<String, u64>;

/// Dirichlet prior for the log-odds estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    /// α_w proportional to the combined frequency of w, with total mass
    /// `scale`; `None` uses 1% of the combined token count.
    Informative { scale: Option<f64> },
    /// The same α for every word.
    Flat { alpha: f64 },
}

impl Default for Prior {
    fn default() -> Self {
        Prior::Informative { scale: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenScore {
    pub delta: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogOddsResult {
    pub scores: BTreeMap<String, TokenScore>,
    pub target_size: u64,
    pub reference_size: u64,
}

/// Log-odds ratio of each word between two corpora, with z-scores.
pub fn log_odds(target: &Counts, reference: &Counts, prior: Prior) -> Result<LogOddsResult> {
    let ni: u64 = target.values().sum();
    let nj: u64 = reference.values().sum();
    if ni == 0 || nj == 0 {
        return Err(Error::Invalid("log-odds needs two non-empty corpora".into()));
    }
    let mut combined: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for (w, c) in target {
        combined.entry(w).or_default().0 = *c as f64;
    }
    for (w, c) in reference {
        combined.entry(w).or_default().1 = *c as f64;
    }
    combined.retain(|_, (a, b)| *a + *b > 0.0);
    if combined.len() < 2 {
        // With one word type its odds are infinite in both corpora.
        return Err(Error::Invalid("log-odds needs at least two word types".into()));
    }
    let total = (ni + nj) as f64;
    let (alpha_of, alpha0): (Box<dyn Fn(f64) -> f64>, f64) = match prior {
        Prior::Informative { scale } => {
            let s = scale.unwrap_or(0.01 * total);
            (Box::new(move |y: f64| s * y / total), s)
        }
        Prior::Flat { alpha } => (Box::new(move |_| alpha), alpha * combined.len() as f64),
    };
    let (ni_f, nj_f) = (ni as f64, nj as f64);
    let scores = combined
        .into_iter()
        .map(|(w, (yi, yj))| {
            let a = alpha_of(yi + yj);
            let delta = ((yi + a) / (ni_f + alpha0 - yi - a)).ln() - ((yj + a) / (nj_f + alpha0 - yj - a)).ln();
            let z = delta / (1.0 / (yi + a) + 1.0 / (yj + a)).sqrt();
            (w.to_string(), TokenScore { delta, z })
        })
        .collect();
    Ok(LogOddsResult {
        scores,
        target_size: ni,
        reference_size: nj,
    })
}

pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "am", "an", "and", "any", "are", "as", "at", "be", "because", "been",
    "before", "being", "but", "by", "can", "could", "d", "did", "do", "does", "doing", "don", "down", "for", "from",
    "get", "got", "had", "has", "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
    "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "know", "ll", "m", "me", "more", "my",
    "myself", "n", "no", "not", "now", "of", "off", "oh", "ok", "okay", "on", "one", "only", "or", "our", "ours",
    "out", "over", "re", "right", "s", "said", "say", "she", "should", "so", "some", "t", "than", "that", "the",
    "their", "them", "then", "there", "these", "they", "this", "those", "through", "to", "too", "up", "us", "ve",
    "very", "was", "we", "well", "were", "what", "when", "where", "which", "who", "why", "will", "with", "would",
    "yeah", "yes", "you", "your", "yours", "yourself",
];

pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// Lowercased alphabetic tokens of the head's spoken text (what follows
/// `<line>` in the head's turns). Anonymized `ENTITY` mentions are skipped.
pub fn head_utterance_tokens(inst: &DyadInstance) -> Vec<String> {
    let mut out = Vec::new();
    let mut in_line = false;
    for (tok, who) in inst.tokens.iter().zip(&inst.attribution) {
        if is_marker(tok) {
            in_line = tok == LINE;
            continue;
        }
        if !in_line || who.as_deref() != Some(inst.head.as_str()) || tok == "ENTITY" {
            continue;
        }
        // Clitics keep their apostrophe; the rest must be letters.
        let word = tok.trim_start_matches('\'');
        if !word.is_empty() && word.chars().all(char::is_alphabetic) {
            out.push(word.to_lowercase());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Predicted,
    True,
}

impl std::str::FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predicted" => Ok(LabelSource::Predicted),
            "true" => Ok(LabelSource::True),
            _ => Err(Error::Invalid(format!("unknown label source `{s}` (predicted|true)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedToken {
    pub token: String,
    pub delta: f64,
    pub z: f64,
}

fn prediction_index(preds: &[PredictionRecord]) -> HashMap<InstanceKey, RelationType> {
    preds.iter().map(|p| (p.key(), p.predicted)).collect()
}

/// Words most associated with `relation` in head utterances, by z-score.
/// Only instances that have a prediction are used.
pub fn distinct_words(
    preds: &[PredictionRecord],
    instances: &[DyadInstance],
    by: LabelSource,
    relation: RelationType,
    top_k: usize,
    stopwords: &HashSet<String>,
    prior: Prior,
) -> Result<Vec<RankedToken>> {
    let predicted = prediction_index(preds);
    let mut target = Counts::new();
    let mut reference = Counts::new();
    let mut target_instances = 0usize;
    for inst in instances {
        let Some(p) = predicted.get(&inst.key()) else {
            continue;
        };
        let label = match by {
            LabelSource::Predicted => *p,
            LabelSource::True => inst.label,
        };
        let bucket = if label == relation {
            target_instances += 1;
            &mut target
        } else {
            &mut reference
        };
        for w in head_utterance_tokens(inst) {
            if !stopwords.contains(&w) {
                *bucket.entry(w).or_default() += 1;
            }
        }
    }
    if target_instances == 0 {
        return Err(Error::Invalid(format!("no instances labeled {relation}")));
    }
    let result = log_odds(&target, &reference, prior)?;
    let mut ranked: Vec<RankedToken> = result
        .scores
        .into_iter()
        .map(|(token, s)| RankedToken {
            token,
            delta: s.delta,
            z: s.z,
        })
        .collect();
    ranked.sort_by(|a, b| b.z.total_cmp(&a.z).then_with(|| a.token.cmp(&b.token)));
    ranked.truncate(top_k);
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcRow {
    pub dyad: String,
    pub season: u32,
    pub relation: RelationType,
    pub percentage: f64,
}

/// Per-season shares of predicted types; every (dyad, season) has one row per
/// taxonomy type.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArcTable {
    pub rows: Vec<ArcRow>,
}

impl ArcTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Total percentage per type across all rows.
    pub fn mass(&self) -> [f64; NUM_RELATIONS] {
        let mut m = [0.0; NUM_RELATIONS];
        for r in &self.rows {
            m[r.relation.index()] += r.percentage;
        }
        m
    }
}

fn arc_rows(label: String, preds: &[RelationType], seasons: &[u32]) -> Vec<ArcRow> {
    let mut by_season: BTreeMap<u32, [usize; NUM_RELATIONS]> = BTreeMap::new();
    for (p, s) in preds.iter().zip(seasons) {
        by_season.entry(*s).or_insert([0; NUM_RELATIONS])[p.index()] += 1;
    }
    let mut rows = Vec::new();
    for (season, counts) in by_season {
        let total: usize = counts.iter().sum();
        for r in taxonomy() {
            rows.push(ArcRow {
                dyad: label.clone(),
                season,
                relation: r,
                percentage: 100.0 * counts[r.index()] as f64 / total as f64,
            });
        }
    }
    rows
}

/// Season-by-season prediction shares for a dyad. Directed views report
/// `HEAD->TAIL` and `TAIL->HEAD` separately; otherwise both directions are
/// pooled under `HEAD<->TAIL`.
pub fn relationship_arc(
    preds: &[PredictionRecord],
    instances: &[DyadInstance],
    dyad: (&str, &str),
    directed: bool,
) -> ArcTable {
    let predicted = prediction_index(preds);
    let (a, b) = dyad;
    let mut forward = (Vec::new(), Vec::new());
    let mut backward = (Vec::new(), Vec::new());
    let mut unseasoned = 0usize;
    for inst in instances {
        let side = if inst.head == a && inst.tail == b {
            &mut forward
        } else if inst.head == b && inst.tail == a {
            &mut backward
        } else {
            continue;
        };
        let Some(p) = predicted.get(&inst.key()) else {
            continue;
        };
        match inst.season {
            Some(s) => {
                side.0.push(*p);
                side.1.push(s);
            }
            None => unseasoned += 1,
        }
    }
    if unseasoned > 0 {
        log::warn!("{unseasoned} predictions for {a}/{b} lack a season and were skipped");
    }
    let rows = if directed {
        let mut rows = arc_rows(format!("{a}->{b}"), &forward.0, &forward.1);
        rows.extend(arc_rows(format!("{b}->{a}"), &backward.0, &backward.1));
        rows
    } else {
        forward.0.extend(backward.0);
        forward.1.extend(backward.1);
        arc_rows(format!("{a}<->{b}"), &forward.0, &forward.1)
    };
    if rows.is_empty() {
        log::warn!("dyad {a}/{b} has no seasoned predictions");
    }
    ArcTable { rows }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubversionProfile {
    /// Share of each predicted type, indexed by rank order.
    pub distribution: Vec<f64>,
    /// Most common gold label of the dyad.
    pub truth: RelationType,
    /// Share of predictions that differ from the gold label.
    pub rate: f64,
    pub count: usize,
}

/// How the predictions for the directed dyad (head, tail) depart from its gold
/// label.
pub fn subversion_profile(
    preds: &[PredictionRecord],
    instances: &[DyadInstance],
    dyad: (&str, &str),
) -> Result<SubversionProfile> {
    let predicted = prediction_index(preds);
    let mut dist = vec![0.0; NUM_RELATIONS];
    let mut truth_counts = [0usize; NUM_RELATIONS];
    let mut wrong = 0usize;
    let mut n = 0usize;
    let mut seen = false;
    for inst in instances.iter().filter(|i| i.head == dyad.0 && i.tail == dyad.1) {
        seen = true;
        let Some(p) = predicted.get(&inst.key()) else {
            continue;
        };
        dist[p.index()] += 1.0;
        truth_counts[inst.label.index()] += 1;
        wrong += usize::from(*p != inst.label);
        n += 1;
    }
    if !seen {
        return Err(Error::MissingTruth(format!("{}->{}", dyad.0, dyad.1)));
    }
    if n == 0 {
        return Err(Error::Invalid(format!("no predictions for {}->{}", dyad.0, dyad.1)));
    }
    dist.iter_mut().for_each(|v| *v /= n as f64);
    let best = truth_counts.iter().copied().max().unwrap_or(0);
    let truth =
        RelationType::from_index(truth_counts.iter().position(|&c| c == best).unwrap_or(0)).expect("index in range");
    Ok(SubversionProfile {
        distribution: dist,
        truth,
        rate: wrong as f64 / n as f64,
        count: n,
    })
}

/// The `top_n` types with the most total percentage, ties to the lower rank.
pub fn top_types(arc: &ArcTable, top_n: usize) -> Vec<RelationType> {
    let mass = arc.mass();
    let mut types = taxonomy();
    types.sort_by(|a, b| mass[b.index()].total_cmp(&mass[a.index()]).then(a.cmp(b)));
    types.truncate(top_n);
    types
}

/// CSV with columns dyad,season,relation_type,percentage, restricted to the
/// top types, which are listed in descending mass within each season.
pub fn heatmap_csv(arc: &ArcTable, top_n: usize) -> String {
    let types = top_types(arc, top_n);
    let mut out = String::from("dyad,season,relation_type,percentage\n");
    let mut cells: Vec<&ArcRow> = arc.rows.iter().filter(|r| types.contains(&r.relation)).collect();
    let order = |r: &RelationType| types.iter().position(|t| t == r).unwrap_or(usize::MAX);
    cells.sort_by_key(|r| (dyad_order(arc, &r.dyad), r.season, order(&r.relation)));
    for r in cells {
        let _ = writeln!(out, "{},{},{},{:.4}", r.dyad, r.season, r.relation, r.percentage);
    }
    out
}

fn dyad_order(arc: &ArcTable, dyad: &str) -> usize {
    let mut seen: Vec<&str> = Vec::new();
    for r in &arc.rows {
        if !seen.contains(&r.dyad.as_str()) {
            seen.push(&r.dyad);
        }
    }
    seen.iter().position(|d| *d == dyad).unwrap_or(usize::MAX)
}

const CELL_W: usize = 64;
const CELL_H: usize = 28;
const LABEL_W: usize = 150;
const TITLE_H: usize = 24;

/// White at 0%, dark blue at 100%.
fn ramp(pct: f64) -> String {
    let t = (pct / 100.0).clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(255.0, 8.0),
        lerp(255.0, 48.0),
        lerp(255.0, 107.0)
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Type × season grid per dyad with printed percentages.
pub fn heatmap_svg(arc: &ArcTable, top_n: usize) -> String {
    let types = top_types(arc, top_n);
    let mut dyads: Vec<&str> = Vec::new();
    for r in &arc.rows {
        if !dyads.contains(&r.dyad.as_str()) {
            dyads.push(&r.dyad);
        }
    }
    let seasons: Vec<u32> = arc
        .rows
        .iter()
        .map(|r| r.season)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let block_h = TITLE_H + CELL_H * (types.len() + 1);
    let width = LABEL_W + CELL_W * seasons.len();
    let height = block_h * dyads.len();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let lookup: HashMap<(&str, u32, RelationType), f64> = arc
        .rows
        .iter()
        .map(|r| ((r.dyad.as_str(), r.season, r.relation), r.percentage))
        .collect();
    for (d, dyad) in dyads.iter().enumerate() {
        let y0 = d * block_h;
        let _ = writeln!(
            out,
            "<text x=\"4\" y=\"{}\" font-weight=\"bold\">{}</text>",
            y0 + 16,
            xml_escape(dyad)
        );
        for (s, season) in seasons.iter().enumerate() {
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">S{season}</text>",
                LABEL_W + s * CELL_W + CELL_W / 2,
                y0 + TITLE_H + 18
            );
        }
        for (t, rel) in types.iter().enumerate() {
            let y = y0 + TITLE_H + CELL_H * (t + 1);
            let _ = writeln!(out, "<text x=\"4\" y=\"{}\">{}</text>", y + 18, xml_escape(rel.label()));
            for (s, season) in seasons.iter().enumerate() {
                let x = LABEL_W + s * CELL_W;
                match lookup.get(&(*dyad, *season, *rel)) {
                    Some(pct) => {
                        let fg = if *pct > 50.0 { "#ffffff" } else { "#000000" };
                        let _ = writeln!(
                            out,
                            "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" fill=\"{}\" stroke=\"#cccccc\"/>",
                            ramp(*pct)
                        );
                        let _ = writeln!(
                            out,
                            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{fg}\">{pct:.1}</text>",
                            x + CELL_W / 2,
                            y + 18
                        );
                    }
                    None => {
                        let _ = writeln!(
                            out,
                            "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" fill=\"#eeeeee\" stroke=\"#cccccc\"/>"
                        );
                    }
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Writes the CSV and, if requested, the SVG rendering.
pub fn emit_heatmap(arc: &ArcTable, top_n: usize, csv: &Path, svg: Option<&Path>) -> Result<()> {
    if arc.is_empty() {
        return Err(Error::Invalid("cannot draw a heatmap of an empty arc".into()));
    }
    std::fs::write(csv, heatmap_csv(arc, top_n)).map_err(|e| Error::io(csv, e))?;
    if let Some(svg) = svg {
        std::fs::write(svg, heatmap_svg(arc, top_n)).map_err(|e| Error::io(svg, e))?;
    }
    Ok(())
}
