//! Ranking metrics against exact answer sets.
//!
//! Every hard answer is ranked only against non-answers, the entities
//! outside the full answer set. An answer tied with non-answers is placed
//! after them unless [`TiePolicy::Average`] is chosen. RA-Oracle takes the
//! top `N = |hard|` entities of the ranking, with easy answers removed, and
//! reports the fraction that are hard answers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::entity_set::EntitySet;
use crate::executor::AnswerSets;
use crate::kg::EntityId;
use crate::rewrite::FormKind;
use crate::serialize::Dataset;

#[derive(Clone, Debug, PartialEq)]
pub enum Prediction {
    /// Entity ids best first; unlisted entities share the last place.
    Ranking(Vec<EntityId>),
    /// Higher is better; absent entities score −∞.
    Scores(BTreeMap<EntityId, f64>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    #[default]
    Pessimistic,
    Average,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaPool {
    #[default]
    ExcludeEasy,
    AllEntities,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Mean over the queries of each type, then over types.
    #[default]
    TwoStage,
    /// Mean over queries.
    Flat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    pub ties: TiePolicy,
    pub ra_pool: RaPool,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("query has no hard answers")]
    NoHardAnswers,
    #[error("hard answer {0} is missing from the ranking")]
    MissingAnswer(EntityId),
    #[error("entity {0} is ranked twice")]
    Duplicate(EntityId),
    #[error("entity {0} is outside the graph")]
    OutOfRange(EntityId),
    #[error("entity {0} has a NaN score")]
    NotANumber(EntityId),
}

/// Per-entity sort keys, higher first.
fn keys(pred: &Prediction, answers: &AnswerSets) -> Result<Vec<f64>, MetricError> {
    let n = answers.full.universe();
    let mut key = vec![f64::NEG_INFINITY; n];
    match pred {
        Prediction::Ranking(list) => {
            let mut seen = EntitySet::empty(n);
            for (pos, &e) in list.iter().enumerate() {
                if e.index() >= n {
                    return Err(MetricError::OutOfRange(e));
                }
                if seen.contains(e) {
                    return Err(MetricError::Duplicate(e));
                }
                seen.insert(e);
                key[e.index()] = -(pos as f64);
            }
            if let Some(a) = answers.hard.iter().find(|a| !seen.contains(*a)) {
                return Err(MetricError::MissingAnswer(a));
            }
        }
        Prediction::Scores(scores) => {
            for (&e, &s) in scores {
                if e.index() >= n {
                    return Err(MetricError::OutOfRange(e));
                }
                if s.is_nan() {
                    return Err(MetricError::NotANumber(e));
                }
                key[e.index()] = s;
            }
        }
    }
    Ok(key)
}

/// Filtered rank of every hard answer, ascending by entity id.
pub fn filtered_ranks(pred: &Prediction, answers: &AnswerSets, ties: TiePolicy) -> Result<Vec<f64>, MetricError> {
    if answers.hard.is_empty() {
        return Err(MetricError::NoHardAnswers);
    }
    let key = keys(pred, answers)?;
    let mut pool: Vec<f64> = answers.full.complement().iter().map(|e| key[e.index()]).collect();
    pool.sort_by(|a, b| b.total_cmp(a));
    Ok(answers
        .hard
        .iter()
        .map(|a| {
            let k = key[a.index()];
            let above = pool.partition_point(|x| *x > k);
            let tied = pool.partition_point(|x| *x >= k) - above;
            match ties {
                TiePolicy::Pessimistic => (1 + above + tied) as f64,
                TiePolicy::Average => 1.0 + above as f64 + tied as f64 / 2.0,
            }
        })
        .collect())
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    s / n as f64
}

pub fn mrr(pred: &Prediction, answers: &AnswerSets, ties: TiePolicy) -> Result<f64, MetricError> {
    Ok(mean(filtered_ranks(pred, answers, ties)?.into_iter().map(|r| 1.0 / r)))
}

pub fn hit_at_k(pred: &Prediction, answers: &AnswerSets, k: usize, ties: TiePolicy) -> Result<f64, MetricError> {
    Ok(mean(
        filtered_ranks(pred, answers, ties)?
            .into_iter()
            .map(|r| if r <= k as f64 { 1.0 } else { 0.0 }),
    ))
}

/// Fraction of hard answers among the top `|hard|` entities of the pool.
pub fn ra_oracle(pred: &Prediction, answers: &AnswerSets, pool: RaPool, ties: TiePolicy) -> Result<f64, MetricError> {
    let n = answers.hard.len();
    if n == 0 {
        return Err(MetricError::NoHardAnswers);
    }
    let key = keys(pred, answers)?;
    let mut cands: Vec<(f64, bool)> = (0..answers.full.universe())
        .map(EntityId::from_index)
        .filter(|e| pool == RaPool::AllEntities || !answers.easy.contains(*e))
        .map(|e| (key[e.index()], answers.hard.contains(e)))
        .collect();
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    // entities strictly above the key at the cut, then the tied block
    let cut = cands[n - 1].0;
    let above = cands.partition_point(|c| c.0 > cut);
    let end = cands.partition_point(|c| c.0 >= cut);
    let hard_above = cands[..above].iter().filter(|c| c.1).count();
    let tied = end - above;
    let hard_tied = cands[above..end].iter().filter(|c| c.1).count();
    let slots = n - above;
    let from_tie = match ties {
        TiePolicy::Pessimistic => slots.saturating_sub(tied - hard_tied) as f64,
        TiePolicy::Average => slots as f64 * hard_tied as f64 / tied as f64,
    };
    Ok((hard_above as f64 + from_tie) / n as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub mrr: f64,
    pub hit1: f64,
    pub hit3: f64,
    pub hit10: f64,
    pub ra: f64,
}

impl Metrics {
    fn mean_of(items: &[Metrics]) -> Metrics {
        let m = |f: fn(&Metrics) -> f64| mean(items.iter().map(f));
        Metrics {
            mrr: m(|x| x.mrr),
            hit1: m(|x| x.hit1),
            hit3: m(|x| x.hit3),
            hit10: m(|x| x.hit10),
            ra: m(|x| x.ra),
        }
    }

    pub fn values(&self) -> [f64; 5] {
        [self.mrr, self.hit1, self.hit3, self.hit10, self.ra]
    }
}

pub fn query_metrics(pred: &Prediction, answers: &AnswerSets, opts: &MetricOptions) -> Result<Metrics, MetricError> {
    let ranks = filtered_ranks(pred, answers, opts.ties)?;
    let hit = |k: f64| mean(ranks.iter().map(|r| if *r <= k { 1.0 } else { 0.0 }));
    Ok(Metrics {
        mrr: mean(ranks.iter().map(|r| 1.0 / r)),
        hit1: hit(1.0),
        hit3: hit(3.0),
        hit10: hit(10.0),
        ra: ra_oracle(pred, answers, opts.ra_pool, opts.ties)?,
    })
}

/// Ranks the hard answers first, in id order.
pub fn oracle_prediction(answers: &AnswerSets) -> Prediction {
    Prediction::Ranking(answers.hard.to_vec())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictionError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("no predictions")]
    Empty,
    #[error("form {form}: query {query} has no prediction")]
    Missing { form: FormKind, query: usize },
    #[error("form {form}: query {query} is predicted twice")]
    Repeated { form: FormKind, query: usize },
}

/// Predictions per form, indexed by dataset query position.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionSet {
    pub by_form: BTreeMap<FormKind, Vec<Prediction>>,
}

impl PredictionSet {
    /// Oracle predictions for the Original form.
    pub fn oracle<'a>(answers: impl IntoIterator<Item = &'a AnswerSets>) -> Self {
        let preds = answers.into_iter().map(oracle_prediction).collect();
        PredictionSet {
            by_form: BTreeMap::from([(FormKind::Original, preds)]),
        }
    }
}

/// Reads line records `{"query": i, "form": "DNF", "rank": [...]}` or with
/// `"score": {"id": value, ...}`. `form` defaults to Original. Every form
/// that occurs must cover each of the `num_queries` queries exactly once.
pub fn read_predictions(path: &Path, num_queries: usize) -> Result<PredictionSet, PredictionError> {
    let file = fs::File::open(path).map_err(|e| PredictionError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut slots: BTreeMap<FormKind, Vec<Option<Prediction>>> = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PredictionError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| PredictionError::Record { line: n + 1, message };
        let (form, query, pred) = parse_prediction(&line).map_err(bad)?;
        if query >= num_queries {
            return Err(bad(format!("query {query} out of range (dataset has {num_queries})")));
        }
        let slot = &mut slots.entry(form).or_insert_with(|| vec![None; num_queries])[query];
        if slot.is_some() {
            return Err(PredictionError::Repeated { form, query });
        }
        *slot = Some(pred);
    }
    if slots.is_empty() {
        return Err(PredictionError::Empty);
    }
    let mut by_form = BTreeMap::new();
    for (form, preds) in slots {
        let preds = preds
            .into_iter()
            .enumerate()
            .map(|(query, p)| p.ok_or(PredictionError::Missing { form, query }))
            .collect::<Result<_, _>>()?;
        by_form.insert(form, preds);
    }
    Ok(PredictionSet { by_form })
}

fn parse_prediction(line: &str) -> Result<(FormKind, usize, Prediction), String> {
    let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = v.as_object().ok_or("expected an object")?;
    for k in obj.keys() {
        if !["query", "form", "rank", "score"].contains(&k.as_str()) {
            return Err(format!("unknown key `{k}`"));
        }
    }
    let query = obj
        .get("query")
        .and_then(Value::as_u64)
        .ok_or("missing integer `query`")? as usize;
    let form = match obj.get("form") {
        None => FormKind::Original,
        Some(f) => f.as_str().ok_or("`form` must be a string")?.parse()?,
    };
    let entity = |v: &Value| -> Result<EntityId, String> {
        v.as_u64()
            .and_then(|x| u32::try_from(x).ok())
            .map(EntityId)
            .ok_or(format!("bad entity id {v}"))
    };
    let pred = match (obj.get("rank"), obj.get("score")) {
        (Some(r), None) => Prediction::Ranking(
            r.as_array()
                .ok_or("`rank` must be a list")?
                .iter()
                .map(entity)
                .collect::<Result<_, _>>()?,
        ),
        (None, Some(s)) => {
            let mut scores = BTreeMap::new();
            for (k, v) in s.as_object().ok_or("`score` must be an object")? {
                let e = k.parse::<u32>().map(EntityId).map_err(|_| format!("bad entity id `{k}`"))?;
                scores.insert(e, v.as_f64().ok_or(format!("score of {k} is not a number"))?);
            }
            Prediction::Scores(scores)
        }
        _ => return Err("exactly one of `rank` and `score` is required".into()),
    };
    Ok((form, query, pred))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupReport {
    pub anchors: usize,
    pub chain: usize,
    pub num_types: usize,
    pub num_queries: usize,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeReport {
    pub formula_id: String,
    pub formula: String,
    pub num_queries: usize,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormReport {
    pub form: String,
    pub overall: Metrics,
    pub epfo: Option<Metrics>,
    pub negation: Option<Metrics>,
    pub groups: Vec<GroupReport>,
    pub types: Vec<TypeReport>,
    pub queries: Vec<Metrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub options: MetricOptions,
    pub num_queries: usize,
    pub forms: Vec<FormReport>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error("form {form}: {count} predictions for {expected} queries")]
    Count { form: FormKind, count: usize, expected: usize },
    #[error("form {form}, query {query}: {source}")]
    Metric {
        form: FormKind,
        query: usize,
        #[source]
        source: MetricError,
    },
}

/// Scores `preds` against the answers stored in `ds`.
pub fn evaluate(ds: &Dataset, preds: &PredictionSet, opts: &MetricOptions) -> Result<EvaluationReport, EvaluateError> {
    let answers: Vec<&AnswerSets> = ds.instances.iter().map(|i| &i.answers).collect();
    evaluate_with(ds, &answers, preds, opts)
}

/// Like [`evaluate`] with answers supplied per query, e.g. recomputed by
/// the executor.
pub fn evaluate_with(
    ds: &Dataset,
    answers: &[&AnswerSets],
    preds: &PredictionSet,
    opts: &MetricOptions,
) -> Result<EvaluationReport, EvaluateError> {
    let n = ds.instances.len();
    let mut forms = Vec::new();
    for (&form, list) in &preds.by_form {
        if list.len() != n || answers.len() != n {
            return Err(EvaluateError::Count {
                form,
                count: list.len(),
                expected: n,
            });
        }
        let queries = list
            .iter()
            .zip(answers)
            .enumerate()
            .map(|(query, (p, a))| query_metrics(p, a, opts).map_err(|source| EvaluateError::Metric { form, query, source }))
            .collect::<Result<Vec<_>, _>>()?;
        forms.push(form_report(ds, form, queries, opts.aggregation));
    }
    Ok(EvaluationReport {
        options: *opts,
        num_queries: n,
        forms,
    })
}

fn form_report(ds: &Dataset, form: FormKind, queries: Vec<Metrics>, agg: Aggregation) -> FormReport {
    let mut by_type: BTreeMap<usize, Vec<Metrics>> = BTreeMap::new();
    for (inst, m) in ds.instances.iter().zip(&queries) {
        by_type.entry(inst.type_index).or_default().push(*m);
    }
    let types: Vec<TypeReport> = by_type
        .iter()
        .map(|(&t, ms)| TypeReport {
            formula_id: ds.types[t].id.clone(),
            formula: ds.types[t].form(form).to_string(),
            num_queries: ms.len(),
            metrics: Metrics::mean_of(ms),
        })
        .collect();
    let summarize = |keep: &dyn Fn(usize) -> bool| -> Option<(usize, usize, Metrics)> {
        let chosen: Vec<usize> = by_type.keys().copied().filter(|t| keep(*t)).collect();
        if chosen.is_empty() {
            return None;
        }
        let nq = chosen.iter().map(|t| by_type[t].len()).sum();
        let m = match agg {
            Aggregation::TwoStage => Metrics::mean_of(&chosen.iter().map(|t| Metrics::mean_of(&by_type[t])).collect::<Vec<_>>()),
            Aggregation::Flat => Metrics::mean_of(&chosen.iter().flat_map(|t| by_type[t].iter().copied()).collect::<Vec<_>>()),
        };
        Some((chosen.len(), nq, m))
    };
    let stats = |t: usize| ds.types[t].stats;
    let cells: BTreeSet<(usize, usize)> = by_type.keys().map(|&t| (stats(t).num_anchors, stats(t).max_chain)).collect();
    let groups = cells
        .into_iter()
        .filter_map(|(a, c)| {
            summarize(&|t| stats(t).num_anchors == a && stats(t).max_chain == c).map(|(nt, nq, metrics)| GroupReport {
                anchors: a,
                chain: c,
                num_types: nt,
                num_queries: nq,
                metrics,
            })
        })
        .collect();
    FormReport {
        form: form.name().to_string(),
        overall: summarize(&|_| true).map(|s| s.2).unwrap_or_default(),
        epfo: summarize(&|t| stats(t).num_negations == 0).map(|s| s.2),
        negation: summarize(&|t| stats(t).num_negations > 0).map(|s| s.2),
        groups,
        types,
        queries,
    }
}

impl EvaluationReport {
    /// A plain-text table per form.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for f in &self.forms {
            let _ = writeln!(s, "form {}", f.form);
            let _ = writeln!(
                s,
                "{:<12}{:>7}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}",
                "group", "types", "queries", "MRR", "HIT@1", "HIT@3", "HIT@10", "RA"
            );
            let mut row = |label: String, nt: String, nq: String, m: &Metrics| {
                let _ = write!(s, "{label:<12}{nt:>7}{nq:>9}");
                for v in m.values() {
                    let _ = write!(s, "{v:>9.4}");
                }
                s.push('\n');
            };
            for g in &f.groups {
                row(
                    format!("({},{})", g.anchors, g.chain),
                    g.num_types.to_string(),
                    g.num_queries.to_string(),
                    &g.metrics,
                );
            }
            if let Some(m) = &f.epfo {
                row("EPFO".into(), String::new(), String::new(), m);
            }
            if let Some(m) = &f.negation {
                row("Neg".into(), String::new(), String::new(), m);
            }
            row("all".into(), f.types.len().to_string(), f.queries.len().to_string(), &f.overall);
            s.push('\n');
        }
        s
    }
}
