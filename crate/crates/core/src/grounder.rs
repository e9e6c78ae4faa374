//! Reverse grounding of query types and seeded instance sampling.
//!
//! A type is grounded top-down: an entity is drawn as the seed answer at
//! the root and each node passes the entity its output must contain to its
//! operands. A projection draws `(relation, head)` uniformly from the edges
//! entering that entity and asks its operand to produce `head`.
//!
//! Negated operands get a witness: an answer `w ≠ seed` of the positive
//! operands is drawn and the negated subquery is grounded to produce `w`
//! while excluding the seed, so the negation removes a real candidate. If no
//! witness works within the retry budget the subquery is grounded from a
//! random entity with only the seed excluded and the instance is flagged as
//! relaxed. [`NegationPolicy::Disjoint`] instead requires the negated
//! subquery to exclude the witness.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity_set::EntitySet;
use crate::executor::{answer_sets, execute, AnswerSets, ExecError, GroundedFormula};
use crate::formula::{validate, Formula, SetOp, Tree};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::rewrite::{all_forms, FormKind, RewriteError, DEFAULT_NODE_CAP};

const LOCAL_RETRIES: usize = 8;
const NEGATION_RETRIES: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegationPolicy {
    /// The negated subquery must contain an answer of the positive side.
    #[default]
    Overlap,
    /// The negated subquery must exclude an answer of the positive side.
    Disjoint,
}

/// Which answer set the size bounds apply to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeFilter {
    #[default]
    Hard,
    Full,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub rng_seed: u64,
    /// Consecutive rejected attempts after which a type is given up.
    pub max_retries_per_query: usize,
    pub min_answers: usize,
    pub max_answers: usize,
    pub queries_per_type: usize,
    pub size_filter: SizeFilter,
    pub negation: NegationPolicy,
    pub node_cap: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            rng_seed: 0,
            max_retries_per_query: 100,
            min_answers: 1,
            max_answers: 100,
            queries_per_type: 10,
            size_filter: SizeFilter::Hard,
            negation: NegationPolicy::Overlap,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

impl SamplingConfig {
    pub fn check(&self) -> Result<(), SampleError> {
        if self.min_answers < 1 || self.min_answers > self.max_answers {
            return Err(SampleError::Config(format!(
                "answer bounds must satisfy 1 <= min <= max, got [{}, {}]",
                self.min_answers, self.max_answers
            )));
        }
        if self.max_retries_per_query == 0 {
            return Err(SampleError::Config("max_retries_per_query must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("grounding dead end at entity {0}")]
    DeadEnd(EntityId),
    #[error("type cannot be grounded: {0}")]
    InvalidType(String),
    #[error("graph has no entities")]
    EmptyGraph,
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("invalid sampling configuration: {0}")]
    Config(String),
    #[error("type {index} ({text}): {source}")]
    Ground {
        index: usize,
        text: String,
        #[source]
        source: GroundError,
    },
    #[error("type {index} ({text}): {source}")]
    Rewrite {
        index: usize,
        text: String,
        #[source]
        source: RewriteError,
    },
    #[error(transparent)]
    Exec(#[from] ExecError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grounding {
    pub tree: GroundedFormula,
    pub seed: EntityId,
    /// Some negated subquery could not get a witness.
    pub relaxed: bool,
}

/// Grounds `f` from a uniformly drawn seed.
pub fn ground_type(
    f: &Formula,
    kg: &KnowledgeGraph,
    policy: NegationPolicy,
    rng: &mut impl Rng,
) -> Result<Grounding, GroundError> {
    if kg.num_entities() == 0 {
        return Err(GroundError::EmptyGraph);
    }
    let seed = EntityId::from_index(rng.random_range(0..kg.num_entities()));
    ground_type_from(f, seed, kg, policy, rng)
}

/// Grounds `f` so that `seed` is among its answers on `kg`.
pub fn ground_type_from(
    f: &Formula,
    seed: EntityId,
    kg: &KnowledgeGraph,
    policy: NegationPolicy,
    rng: &mut impl Rng,
) -> Result<Grounding, GroundError> {
    if let Some(v) = validate(f, FormKind::Original.system(), true).first() {
        return Err(GroundError::InvalidType(v.to_string()));
    }
    let g = Grounder { kg, policy };
    let (tree, relaxed) = g.node(f, seed, rng)?;
    debug_assert!(execute(&tree, kg).unwrap().contains(seed));
    Ok(Grounding { tree, seed, relaxed })
}

struct Grounder<'a> {
    kg: &'a KnowledgeGraph,
    policy: NegationPolicy,
}

type Partial = (GroundedFormula, bool);

impl Grounder<'_> {
    fn answers(&self, q: &GroundedFormula) -> EntitySet {
        execute(q, self.kg).expect("grounded ids come from the graph")
    }

    fn random_entity(&self, rng: &mut impl Rng) -> EntityId {
        EntityId::from_index(rng.random_range(0..self.kg.num_entities()))
    }

    fn node(&self, f: &Formula, target: EntityId, rng: &mut impl Rng) -> Result<Partial, GroundError> {
        match f {
            Tree::Entity(()) => Ok((Tree::Entity(target), false)),
            Tree::Projection((), c) => {
                let cands = self.kg.reverse_candidates(target);
                if cands.is_empty() {
                    return Err(GroundError::DeadEnd(target));
                }
                for _ in 0..LOCAL_RETRIES {
                    let (r, h) = cands[rng.random_range(0..cands.len())];
                    match self.node(c, h, rng) {
                        Ok((g, relaxed)) => return Ok((Tree::project(r, g), relaxed)),
                        Err(GroundError::DeadEnd(_)) => continue,
                        Err(e) => return Err(e),
                    }
                }
                Err(GroundError::DeadEnd(target))
            }
            Tree::Set(SetOp::Intersection, ops) => self.intersection(ops, target, rng),
            Tree::Set(SetOp::Union, ops) => {
                let pick = rng.random_range(0..ops.len());
                let mut relaxed = false;
                let mut out = Vec::with_capacity(ops.len());
                for (k, op) in ops.iter().enumerate() {
                    let (g, r) = if k == pick {
                        self.node(op, target, rng)?
                    } else {
                        self.fresh(op, rng)?
                    };
                    relaxed |= r;
                    out.push(g);
                }
                Ok((Tree::Set(SetOp::Union, out), relaxed))
            }
            Tree::Negation(_) => Err(GroundError::InvalidType("negation outside an intersection".into())),
            Tree::Set(op, _) => Err(GroundError::InvalidType(format!("operator `{}`", op.tag()))),
        }
    }

    /// Grounds `f` towards a random entity.
    fn fresh(&self, f: &Formula, rng: &mut impl Rng) -> Result<Partial, GroundError> {
        let mut last = None;
        for _ in 0..LOCAL_RETRIES {
            let t = self.random_entity(rng);
            match self.node(f, t, rng) {
                Err(GroundError::DeadEnd(e)) => last = Some(e),
                other => return other,
            }
        }
        Err(GroundError::DeadEnd(last.expect("at least one attempt")))
    }

    fn positives(
        &self,
        ops: &[Formula],
        target: EntityId,
        rng: &mut impl Rng,
    ) -> Result<(Vec<Option<GroundedFormula>>, EntitySet, bool), GroundError> {
        let mut grounded = vec![None; ops.len()];
        let mut relaxed = false;
        let mut positive: Option<EntitySet> = None;
        for (k, op) in ops.iter().enumerate() {
            if !matches!(op, Tree::Negation(_)) {
                let (g, r) = self.node(op, target, rng)?;
                relaxed |= r;
                let s = self.answers(&g);
                match &mut positive {
                    Some(acc) => acc.intersect_with(&s),
                    None => positive = Some(s),
                }
                grounded[k] = Some(g);
            }
        }
        let positive =
            positive.ok_or_else(|| GroundError::InvalidType("intersection without a positive operand".into()))?;
        Ok((grounded, positive, relaxed))
    }

    /// Several negated operands each get their own witness.
    fn intersection(&self, ops: &[Formula], target: EntityId, rng: &mut impl Rng) -> Result<Partial, GroundError> {
        let finish = |grounded: Vec<Option<GroundedFormula>>, relaxed| {
            let ops = grounded.into_iter().map(|g| g.expect("every operand grounded")).collect();
            Ok((Tree::Set(SetOp::Intersection, ops), relaxed))
        };
        if !ops.iter().any(|op| matches!(op, Tree::Negation(_))) {
            let (grounded, _, relaxed) = self.positives(ops, target, rng)?;
            return finish(grounded, relaxed);
        }
        // a positive side answering only the seed has no witness to offer,
        // so it is regrounded before the witness requirement is dropped
        'round: for _ in 0..NEGATION_RETRIES {
            let (mut grounded, positive, mut relaxed) = self.positives(ops, target, rng)?;
            for (k, op) in ops.iter().enumerate() {
                if let Tree::Negation(inner) = op {
                    match self.witnessed(inner, &positive, target, rng) {
                        Some((g, r)) => {
                            relaxed |= r;
                            grounded[k] = Some(Tree::negate(g));
                        }
                        None => continue 'round,
                    }
                }
            }
            return finish(grounded, relaxed);
        }
        let (mut grounded, _, _) = self.positives(ops, target, rng)?;
        for (k, op) in ops.iter().enumerate() {
            if let Tree::Negation(inner) = op {
                grounded[k] = Some(Tree::negate(self.excluding(inner, target, rng)?));
            }
        }
        finish(grounded, true)
    }

    /// Grounds the operand of a negation whose positive siblings answer
    /// `positive` so that it meets the policy and never contains `seed`.
    fn witnessed(&self, f: &Formula, positive: &EntitySet, seed: EntityId, rng: &mut impl Rng) -> Option<Partial> {
        match self.policy {
            NegationPolicy::Overlap => {
                let mut pool = positive.clone();
                pool.remove(seed);
                if pool.is_empty() {
                    return None;
                }
                for _ in 0..NEGATION_RETRIES {
                    let w = pool.nth(rng.random_range(0..pool.len())).unwrap();
                    if let Ok((g, r)) = self.node(f, w, rng) {
                        if !self.answers(&g).contains(seed) {
                            return Some((g, r));
                        }
                    }
                }
            }
            NegationPolicy::Disjoint => {
                let w = positive.nth(rng.random_range(0..positive.len())).unwrap();
                for _ in 0..NEGATION_RETRIES {
                    if let Ok((g, r)) = self.fresh(f, rng) {
                        let s = self.answers(&g);
                        if !s.contains(seed) && !s.contains(w) {
                            return Some((g, r));
                        }
                    }
                }
            }
        }
        None
    }

    /// Grounds `f` towards random entities until its answers exclude `seed`.
    fn excluding(&self, f: &Formula, seed: EntityId, rng: &mut impl Rng) -> Result<GroundedFormula, GroundError> {
        for _ in 0..NEGATION_RETRIES {
            if let Ok((g, _)) = self.fresh(f, rng) {
                if !self.answers(&g).contains(seed) {
                    return Ok(g);
                }
            }
        }
        Err(GroundError::DeadEnd(seed))
    }
}

/// One sampled query with all of its forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryInstance {
    pub type_index: usize,
    pub seed: EntityId,
    pub relaxed: bool,
    /// Indexed like [`FormKind::ALL`].
    pub forms: Vec<GroundedFormula>,
    pub answers: AnswerSets,
}

impl QueryInstance {
    pub fn form(&self, kind: FormKind) -> &GroundedFormula {
        let i = FormKind::ALL.iter().position(|k| *k == kind).unwrap();
        &self.forms[i]
    }
}

/// A type that got fewer instances than requested.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeShortfall {
    pub type_index: usize,
    pub accepted: usize,
    pub requested: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SampleOutcome {
    /// Grouped by type in input order, then by acceptance order.
    pub instances: Vec<QueryInstance>,
    pub shortfalls: Vec<TypeShortfall>,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// The ChaCha8 stream for one attempt on one type.
pub fn substream(seed: u64, type_index: usize, attempt: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ type_index as u64) ^ attempt);
    ChaCha8Rng::seed_from_u64(key)
}

/// Samples up to `cfg.queries_per_type` instances of every type.
///
/// Attempts on one type draw from independent substreams, so the result
/// depends only on the graphs, the type list and `cfg`, whatever the
/// number of worker threads.
pub fn sample_instances(
    types: &[Formula],
    full: &KnowledgeGraph,
    train: &KnowledgeGraph,
    cfg: &SamplingConfig,
) -> Result<SampleOutcome, SampleError> {
    cfg.check()?;
    let per_type: Vec<Result<Vec<QueryInstance>, SampleError>> = types
        .par_iter()
        .enumerate()
        .map(|(i, f)| sample_type(i, f, full, train, cfg))
        .collect();
    let mut out = SampleOutcome::default();
    for (i, r) in per_type.into_iter().enumerate() {
        let got = r?;
        if got.len() < cfg.queries_per_type {
            out.shortfalls.push(TypeShortfall {
                type_index: i,
                accepted: got.len(),
                requested: cfg.queries_per_type,
            });
        }
        out.instances.extend(got);
    }
    Ok(out)
}

fn sample_type(
    index: usize,
    f: &Formula,
    full: &KnowledgeGraph,
    train: &KnowledgeGraph,
    cfg: &SamplingConfig,
) -> Result<Vec<QueryInstance>, SampleError> {
    let text = f.to_string();
    all_forms(f, cfg.node_cap).map_err(|source| SampleError::Rewrite {
        index,
        text: text.clone(),
        source,
    })?;
    let mut seen: HashSet<GroundedFormula> = HashSet::new();
    let mut out = Vec::new();
    let mut failures = 0;
    let mut attempt = 0u64;
    while out.len() < cfg.queries_per_type && failures < cfg.max_retries_per_query {
        let mut rng = substream(cfg.rng_seed, index, attempt);
        attempt += 1;
        let g = match ground_type(f, full, cfg.negation, &mut rng) {
            Ok(g) => g,
            Err(GroundError::DeadEnd(_)) => {
                failures += 1;
                continue;
            }
            Err(source) => {
                return Err(SampleError::Ground {
                    index,
                    text: text.clone(),
                    source,
                })
            }
        };
        let answers = answer_sets(&g.tree, full, train)?;
        let size = match cfg.size_filter {
            SizeFilter::Hard => answers.hard.len(),
            SizeFilter::Full => answers.full.len(),
        };
        let forms = all_forms(&g.tree, cfg.node_cap).map_err(|source| SampleError::Rewrite {
            index,
            text: text.clone(),
            source,
        })?;
        let original = forms[0].1.clone();
        if size < cfg.min_answers || size > cfg.max_answers || seen.contains(&original) {
            failures += 1;
            continue;
        }
        seen.insert(original);
        failures = 0;
        out.push(QueryInstance {
            type_index: index,
            seed: g.seed,
            relaxed: g.relaxed,
            forms: forms.into_iter().map(|(_, t)| t).collect(),
            answers,
        });
    }
    Ok(out)
}

/// Re-derives an instance's answers and checks the sampling contract.
pub fn verify_instance(
    inst: &QueryInstance,
    full: &KnowledgeGraph,
    train: &KnowledgeGraph,
    cfg: &SamplingConfig,
) -> Result<(), String> {
    let a = &inst.answers;
    if !a.full.contains(inst.seed) {
        return Err(format!("seed {} is not an answer", inst.seed));
    }
    if !a.easy.is_disjoint(&a.hard) {
        return Err("easy and hard answers overlap".into());
    }
    let size = match cfg.size_filter {
        SizeFilter::Hard => a.hard.len(),
        SizeFilter::Full => a.full.len(),
    };
    if size < cfg.min_answers || size > cfg.max_answers {
        return Err(format!("answer count {size} outside [{}, {}]", cfg.min_answers, cfg.max_answers));
    }
    for (kind, q) in FormKind::ALL.iter().zip(&inst.forms) {
        let got = answer_sets(q, full, train).map_err(|e| format!("{kind}: {e}"))?;
        if &got != a {
            return Err(format!("{kind} form answers differ from the stored answers"));
        }
    }
    Ok(())
}
