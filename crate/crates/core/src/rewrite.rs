//! Logic-preserving rewrites between the nine query forms.
//!
//! | form        | operators       | construction                                   |
//! |-------------|-----------------|------------------------------------------------|
//! | Original    | `[e,p,i,u,n]`   | operands sorted                                |
//! | DM          | `[e,p,i,n]`     | `u` replaced by `n`,`i` (De Morgan)            |
//! | DM+I        | `[e,p,I,n]`     | `i` runs of DM flattened into `I`              |
//! | Original+d  | `[e,p,i,u,d]`   | `i`-`n` pairs replaced by `d`                  |
//! | DNF         | `[e,p,i,u,n]`   | unions lifted to the root                      |
//! | DNF+d       | `[e,p,i,u,d]`   | `i`-`n` pairs of DNF replaced by `d`           |
//! | DNF+IU      | `[e,p,I,U,n]`   | `i`/`u` runs of DNF flattened into `I`/`U`     |
//! | DNF+IUd     | `[e,p,I,U,d]`   | negations of DNF+IU folded into nested `d`     |
//! | DNF+IUD     | `[e,p,I,U,D]`   | negations of DNF+IU gathered into one `D`      |
//!
//! Every rewrite is generic over the leaf payloads, so the same functions
//! normalize abstract types and grounded queries. Subtrees duplicated by the
//! DNF distribution laws keep their payloads, which is what makes all forms
//! of one grounded query refer to the same relations and anchors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{canonicalize, validate, OperatorSet, OperatorTag, SetOp, Tree};
#[cfg(test)]
use crate::formula::compute_stats;

/// Default node budget for DNF results.
pub const DEFAULT_NODE_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum FormKind {
    Original,
    Dm,
    DmI,
    OriginalD,
    Dnf,
    DnfD,
    DnfIu,
    DnfIud,
    DnfIuD,
}

impl FormKind {
    pub const ALL: [FormKind; 9] = [
        FormKind::Original,
        FormKind::Dm,
        FormKind::DmI,
        FormKind::OriginalD,
        FormKind::Dnf,
        FormKind::DnfD,
        FormKind::DnfIu,
        FormKind::DnfIud,
        FormKind::DnfIuD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormKind::Original => "Original",
            FormKind::Dm => "DM",
            FormKind::DmI => "DM+I",
            FormKind::OriginalD => "Original+d",
            FormKind::Dnf => "DNF",
            FormKind::DnfD => "DNF+d",
            FormKind::DnfIu => "DNF+IU",
            FormKind::DnfIud => "DNF+IUd",
            FormKind::DnfIuD => "DNF+IUD",
        }
    }

    /// The operator system the form is written in.
    pub fn system(self) -> OperatorSet {
        use OperatorTag::*;
        let tags: &[OperatorTag] = match self {
            FormKind::Original | FormKind::Dnf => &[Entity, Projection, Intersection, Union, Negation],
            FormKind::Dm => &[Entity, Projection, Intersection, Negation],
            FormKind::DmI => &[Entity, Projection, MultiIntersection, Negation],
            FormKind::OriginalD | FormKind::DnfD => &[Entity, Projection, Intersection, Union, Difference],
            FormKind::DnfIu => &[Entity, Projection, MultiIntersection, MultiUnion, Negation],
            FormKind::DnfIud => &[Entity, Projection, MultiIntersection, MultiUnion, Difference],
            FormKind::DnfIuD => &[Entity, Projection, MultiIntersection, MultiUnion, MultiDifference],
        };
        OperatorSet::of(tags)
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        FormKind::ALL
            .into_iter()
            .find(|k| k.name() == t || k.name().eq_ignore_ascii_case(t) && !t.ends_with(['d', 'D']))
            .ok_or_else(|| format!("unknown form `{s}`"))
    }
}

impl From<FormKind> for &'static str {
    fn from(k: FormKind) -> Self {
        k.name()
    }
}

impl TryFrom<String> for FormKind {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("operator `{0}` is not allowed in the input of this rewrite")]
    UnsupportedOperator(OperatorTag),
    #[error("input is not a valid bounded-negation formula: {0}")]
    InvalidInput(String),
    #[error("negation is not bounded by an intersection")]
    UnboundedNegation,
    #[error("rewritten formula exceeds the node cap ({size} > {cap})")]
    TooLarge { size: usize, cap: usize },
}

fn original_system() -> OperatorSet {
    FormKind::Original.system()
}

fn require_system<R, E>(f: &Tree<R, E>, system: OperatorSet) -> Result<(), RewriteError> {
    match f.operators().iter().find(|t| !system.contains(*t)) {
        Some(t) => Err(RewriteError::UnsupportedOperator(t)),
        None => Ok(()),
    }
}

/// Replaces every `u` with `n` over `i` of negated operands.
///
/// The double negations this creates are kept.
pub fn to_dm<R: Clone + Ord, E: Clone + Ord>(f: &Tree<R, E>) -> Result<Tree<R, E>, RewriteError> {
    require_system(f, original_system())?;
    Ok(canonicalize(&dm(f)))
}

fn dm<R: Clone, E: Clone>(f: &Tree<R, E>) -> Tree<R, E> {
    match f {
        Tree::Entity(_) => f.clone(),
        Tree::Projection(r, c) => Tree::project(r.clone(), dm(c)),
        Tree::Negation(c) => Tree::negate(dm(c)),
        Tree::Set(SetOp::Union, ops) => Tree::negate(Tree::Set(
            SetOp::Intersection,
            ops.iter().map(|c| Tree::negate(dm(c))).collect(),
        )),
        Tree::Set(op, ops) => Tree::Set(*op, ops.iter().map(dm).collect()),
    }
}

/// Converts a bounded-negation `[e,p,i,u,n]` formula to disjunctive normal
/// form with the default node cap.
pub fn to_dnf<R: Clone + Ord, E: Clone + Ord>(f: &Tree<R, E>) -> Result<Tree<R, E>, RewriteError> {
    to_dnf_capped(f, DEFAULT_NODE_CAP)
}

/// Converts to disjunctive normal form.
///
/// Four rules are applied innermost-first until none fires: De Morgan
/// push-down of `n` over `i`/`u`, cancellation of `n` over `n`, `p` over
/// `u` into `u` over copies of `p`, and distribution of `i` over a `u`
/// operand. In the result every `u` has only `u` ancestors and every `n`
/// sits directly above a `p`; intersections may remain below projections.
///
/// Each helper below takes arguments already in normal form and recurses
/// only on strict subterms of them, so the rewriting terminates.
pub fn to_dnf_capped<R: Clone + Ord, E: Clone + Ord>(
    f: &Tree<R, E>,
    cap: usize,
) -> Result<Tree<R, E>, RewriteError> {
    require_system(f, original_system())?;
    if let Some(v) = validate(f, original_system(), true).first() {
        return Err(RewriteError::InvalidInput(v.to_string()));
    }
    let out = Dnf { cap }.normalize(f)?;
    check_size(&out, cap)?;
    Ok(canonicalize(&out))
}

fn check_size<R, E>(t: &Tree<R, E>, cap: usize) -> Result<(), RewriteError> {
    let size = t.size();
    if size > cap {
        Err(RewriteError::TooLarge { size, cap })
    } else {
        Ok(())
    }
}

struct Dnf {
    cap: usize,
}

impl Dnf {
    fn normalize<R: Clone, E: Clone>(&self, f: &Tree<R, E>) -> Result<Tree<R, E>, RewriteError> {
        Ok(match f {
            Tree::Entity(_) => f.clone(),
            Tree::Projection(r, c) => {
                let c = self.normalize(c)?;
                self.project(r, c)?
            }
            Tree::Negation(c) => {
                let c = self.normalize(c)?;
                self.negate(c)?
            }
            Tree::Set(SetOp::Intersection, ops) => {
                let (a, b) = (self.normalize(&ops[0])?, self.normalize(&ops[1])?);
                self.conjoin(a, b)?
            }
            Tree::Set(SetOp::Union, ops) => {
                Tree::or(self.normalize(&ops[0])?, self.normalize(&ops[1])?)
            }
            Tree::Set(op, _) => return Err(RewriteError::UnsupportedOperator(op.tag())),
        })
    }

    fn project<R: Clone, E: Clone>(&self, r: &R, x: Tree<R, E>) -> Result<Tree<R, E>, RewriteError> {
        match x {
            Tree::Set(SetOp::Union, ops) => {
                let [a, b] = pair(ops);
                Ok(Tree::or(self.project(r, a)?, self.project(r, b)?))
            }
            x => Ok(Tree::project(r.clone(), x)),
        }
    }

    fn negate<R: Clone, E: Clone>(&self, x: Tree<R, E>) -> Result<Tree<R, E>, RewriteError> {
        match x {
            Tree::Negation(inner) => Ok(*inner),
            Tree::Set(SetOp::Intersection, ops) => {
                let [a, b] = pair(ops);
                Ok(Tree::or(self.negate(a)?, self.negate(b)?))
            }
            Tree::Set(SetOp::Union, ops) => {
                let [a, b] = pair(ops);
                let (na, nb) = (self.negate(a)?, self.negate(b)?);
                self.conjoin(na, nb)
            }
            x => Ok(Tree::negate(x)),
        }
    }

    fn conjoin<R: Clone, E: Clone>(&self, x: Tree<R, E>, y: Tree<R, E>) -> Result<Tree<R, E>, RewriteError> {
        check_size(&x, self.cap)?;
        check_size(&y, self.cap)?;
        match (x, y) {
            (Tree::Set(SetOp::Union, ops), y) => {
                let [a, b] = pair(ops);
                Ok(Tree::or(self.conjoin(a, y.clone())?, self.conjoin(b, y)?))
            }
            (x, Tree::Set(SetOp::Union, ops)) => {
                let [a, b] = pair(ops);
                Ok(Tree::or(self.conjoin(x.clone(), a)?, self.conjoin(x, b)?))
            }
            (x, y) => Ok(Tree::and(x, y)),
        }
    }
}

fn pair<T>(ops: Vec<T>) -> [T; 2] {
    ops.try_into()
        .unwrap_or_else(|v: Vec<T>| panic!("binary operator with {} operands", v.len()))
}

/// Collapses maximal runs of intersections into `I` and of unions into `U`.
///
/// A binary node that is not part of a longer run still becomes a
/// two-operand `I`/`U`.
pub fn flatten_multiary<R: Clone + Ord, E: Clone + Ord>(f: &Tree<R, E>) -> Tree<R, E> {
    canonicalize(&flatten(f, true, true))
}

/// Like [`flatten_multiary`] but leaves unions alone.
pub fn flatten_intersections<R: Clone + Ord, E: Clone + Ord>(f: &Tree<R, E>) -> Tree<R, E> {
    canonicalize(&flatten(f, true, false))
}

fn flatten<R: Clone, E: Clone>(f: &Tree<R, E>, and: bool, or: bool) -> Tree<R, E> {
    match f {
        Tree::Entity(_) => f.clone(),
        Tree::Projection(r, c) => Tree::project(r.clone(), flatten(c, and, or)),
        Tree::Negation(c) => Tree::negate(flatten(c, and, or)),
        Tree::Set(op, ops) => {
            let target = if and && op.is_intersection() {
                SetOp::MultiIntersection
            } else if or && op.is_union() {
                SetOp::MultiUnion
            } else {
                return Tree::Set(*op, ops.iter().map(|c| flatten(c, and, or)).collect());
            };
            let mut operands = Vec::new();
            collect_run(f, target, and, or, &mut operands);
            Tree::Set(target, operands)
        }
    }
}

fn collect_run<R: Clone, E: Clone>(f: &Tree<R, E>, target: SetOp, and: bool, or: bool, out: &mut Vec<Tree<R, E>>) {
    let same_family = |op: SetOp| match target {
        SetOp::MultiIntersection => op.is_intersection(),
        _ => op.is_union(),
    };
    match f {
        Tree::Set(op, ops) if same_family(*op) => {
            for c in ops {
                collect_run(c, target, and, or, out);
            }
        }
        other => out.push(flatten(other, and, or)),
    }
}

enum Signed<R, E> {
    Positive(Tree<R, E>),
    /// Subtrahends still waiting for a positive operand of an enclosing
    /// intersection.
    Negated(Vec<Tree<R, E>>),
}

/// Replaces intersection-negation structures with set difference.
///
/// With `multi` off, `(i,X,(n,Y))` becomes `(d,X,Y)`; an `I` node with
/// positives `P1..Pk` and negated operands `N1..Nm` becomes
/// `(d,(…(d,pos,N1)…),Nm)` where `pos` is `P1` for `k = 1` and `(I,P1..Pk)`
/// otherwise. With `multi` on the subtrahends are gathered into one
/// `(D,pos,N1..Nm)`. Negations that are not operands of an intersection run
/// with at least one positive operand are rejected.
pub fn replace_negation_with_difference<R: Clone + Ord, E: Clone + Ord>(
    f: &Tree<R, E>,
    multi: bool,
) -> Result<Tree<R, E>, RewriteError> {
    match signed(f, multi)? {
        Signed::Positive(t) => Ok(canonicalize(&t)),
        Signed::Negated(_) => Err(RewriteError::UnboundedNegation),
    }
}

fn positive<R: Clone, E: Clone>(f: &Tree<R, E>, multi: bool) -> Result<Tree<R, E>, RewriteError> {
    match signed(f, multi)? {
        Signed::Positive(t) => Ok(t),
        Signed::Negated(_) => Err(RewriteError::UnboundedNegation),
    }
}

fn subtract<R, E>(pos: Tree<R, E>, negs: Vec<Tree<R, E>>, multi: bool) -> Tree<R, E> {
    if multi {
        let mut ops = Vec::with_capacity(negs.len() + 1);
        ops.push(pos);
        ops.extend(negs);
        Tree::Set(SetOp::MultiDifference, ops)
    } else {
        negs.into_iter().fold(pos, Tree::minus)
    }
}

fn signed<R: Clone, E: Clone>(f: &Tree<R, E>, multi: bool) -> Result<Signed<R, E>, RewriteError> {
    Ok(match f {
        Tree::Entity(_) => Signed::Positive(f.clone()),
        Tree::Projection(r, c) => Signed::Positive(Tree::project(r.clone(), positive(c, multi)?)),
        Tree::Negation(c) => Signed::Negated(vec![positive(c, multi)?]),
        Tree::Set(op, ops) if op.is_intersection() => {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for c in ops {
                match signed(c, multi)? {
                    Signed::Positive(t) => pos.push(t),
                    Signed::Negated(ts) => neg.extend(ts),
                }
            }
            if neg.is_empty() {
                Signed::Positive(Tree::Set(*op, pos))
            } else if pos.is_empty() {
                Signed::Negated(neg)
            } else {
                let base = if pos.len() == 1 {
                    pos.pop().unwrap()
                } else {
                    Tree::Set(*op, pos)
                };
                Signed::Positive(subtract(base, neg, multi))
            }
        }
        Tree::Set(op, ops) => Signed::Positive(Tree::Set(
            *op,
            ops.iter().map(|c| positive(c, multi)).collect::<Result<_, _>>()?,
        )),
    })
}

/// Rewrites an Original-form formula into `kind`.
pub fn to_form<R: Clone + Ord, E: Clone + Ord>(f: &Tree<R, E>, kind: FormKind) -> Result<Tree<R, E>, RewriteError> {
    to_form_capped(f, kind, DEFAULT_NODE_CAP)
}

pub fn to_form_capped<R: Clone + Ord, E: Clone + Ord>(
    f: &Tree<R, E>,
    kind: FormKind,
    cap: usize,
) -> Result<Tree<R, E>, RewriteError> {
    require_system(f, original_system())?;
    Ok(match kind {
        FormKind::Original => canonicalize(f),
        FormKind::Dm => to_dm(f)?,
        FormKind::DmI => flatten_intersections(&to_dm(f)?),
        FormKind::OriginalD => replace_negation_with_difference(f, false)?,
        FormKind::Dnf => to_dnf_capped(f, cap)?,
        FormKind::DnfD => replace_negation_with_difference(&to_dnf_capped(f, cap)?, false)?,
        FormKind::DnfIu => flatten_multiary(&to_dnf_capped(f, cap)?),
        FormKind::DnfIud => {
            replace_negation_with_difference(&flatten_multiary(&to_dnf_capped(f, cap)?), false)?
        }
        FormKind::DnfIuD => {
            replace_negation_with_difference(&flatten_multiary(&to_dnf_capped(f, cap)?), true)?
        }
    })
}

/// All nine forms in [`FormKind::ALL`] order.
pub fn all_forms<R: Clone + Ord, E: Clone + Ord>(
    f: &Tree<R, E>,
    cap: usize,
) -> Result<Vec<(FormKind, Tree<R, E>)>, RewriteError> {
    FormKind::ALL
        .into_iter()
        .map(|k| to_form_capped(f, k, cap).map(|t| (k, t)))
        .collect()
}
