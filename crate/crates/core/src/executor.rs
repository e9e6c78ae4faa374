//! Set-semantic evaluation of grounded queries.

use thiserror::Error;

use crate::entity_set::EntitySet;
use crate::formula::{SetOp, Tree};
use crate::kg::{EntityId, KgError, KnowledgeGraph, RelationId};

/// A query whose projections carry relations and whose anchors carry
/// entities.
pub type GroundedFormula = Tree<RelationId, EntityId>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("entity id {0} out of range")]
    EntityOutOfRange(u32),
    #[error("relation id {0} out of range")]
    RelationOutOfRange(u32),
    #[error("`{tag}` node with {found} operands")]
    Arity { tag: char, found: usize },
    #[error("training graph vocabulary is not a prefix of the full graph vocabulary")]
    VocabularyMismatch,
}

/// Answer sets of one grounded query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSets {
    pub easy: EntitySet,
    pub hard: EntitySet,
    pub full: EntitySet,
}

impl AnswerSets {
    /// Builds the sets from the easy and hard parts.
    pub fn from_parts(easy: EntitySet, hard: EntitySet) -> Self {
        let mut full = easy.clone();
        full.union_with(&hard);
        AnswerSets { easy, hard, full }
    }
}

/// Evaluates `q` on `kg` with the graph's own entities as universe.
pub fn execute(q: &GroundedFormula, kg: &KnowledgeGraph) -> Result<EntitySet, ExecError> {
    execute_in(q, kg, kg.num_entities())
}

/// Evaluates `q` on `kg` with negation complementing against `0..universe`.
///
/// `universe` may exceed the graph's entity count; the extra entities have
/// no edges. Relation ids must be known to `kg`.
pub fn execute_in(q: &GroundedFormula, kg: &KnowledgeGraph, universe: usize) -> Result<EntitySet, ExecError> {
    eval(q, kg, universe, false)
}

fn eval(q: &GroundedFormula, kg: &KnowledgeGraph, universe: usize, lenient: bool) -> Result<EntitySet, ExecError> {
    Ok(match q {
        Tree::Entity(e) => {
            if e.index() >= universe {
                return Err(ExecError::EntityOutOfRange(e.0));
            }
            EntitySet::singleton(universe, *e)
        }
        Tree::Projection(r, c) => {
            let sources = eval(c, kg, universe, lenient)?;
            if lenient && r.index() >= kg.num_relations() {
                EntitySet::empty(universe)
            } else {
                kg.project(&sources, *r).map_err(|e| match e {
                    KgError::UnknownRelation(r) => ExecError::RelationOutOfRange(r),
                    other => unreachable!("{other}"),
                })?
            }
        }
        Tree::Negation(c) => eval(c, kg, universe, lenient)?.complement(),
        Tree::Set(op, ops) => {
            let ok = match op {
                SetOp::Intersection | SetOp::Union | SetOp::Difference => ops.len() == 2,
                _ => ops.len() >= 2,
            };
            if !ok {
                return Err(ExecError::Arity {
                    tag: op.tag().symbol(),
                    found: ops.len(),
                });
            }
            let mut acc = eval(&ops[0], kg, universe, lenient)?;
            for c in &ops[1..] {
                let s = eval(c, kg, universe, lenient)?;
                if op.is_intersection() {
                    acc.intersect_with(&s);
                } else if op.is_union() {
                    acc.union_with(&s);
                } else {
                    acc.difference_with(&s);
                }
            }
            acc
        }
    })
}

/// Full answers on `full`, easy answers on `train`, hard = full − easy.
///
/// Both graphs must share ids: the training vocabularies have to be a
/// prefix of the full ones. On the training graph, negation complements
/// against the full graph's entities and relations unseen in training have
/// no edges. With negation a training-graph answer need not be a full-graph
/// answer; such entities are not answers and are left out of `easy`.
pub fn answer_sets(q: &GroundedFormula, full: &KnowledgeGraph, train: &KnowledgeGraph) -> Result<AnswerSets, ExecError> {
    let (fv, tv) = (full.vocab(), train.vocab());
    if !tv.entities.is_prefix_of(&fv.entities) || !tv.relations.is_prefix_of(&fv.relations) {
        return Err(ExecError::VocabularyMismatch);
    }
    let universe = full.num_entities();
    let all = eval(q, full, universe, false)?;
    let mut easy = eval(q, train, universe, true)?;
    easy.intersect_with(&all);
    let mut hard = all.clone();
    hard.difference_with(&easy);
    Ok(AnswerSets { easy, hard, full: all })
}
