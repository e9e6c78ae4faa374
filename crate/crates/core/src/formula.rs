//! Operator trees for EFO-1 queries.
//!
//! A query type is written as a comma separated s-expression such as
//! `(i,(p,(e)),(n,(p,(e))))`. The first argument of every list is the
//! operator symbol and the remaining arguments are its operands. The same
//! tree shape is shared by abstract types and grounded queries: [`Tree`] is
//! generic over the payload carried by projection (`R`) and entity (`E`)
//! nodes, so [`Formula`] is simply `Tree<(), ()>`.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// The nine operator symbols of the query language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorTag {
    Entity,
    Projection,
    Negation,
    Intersection,
    Union,
    Difference,
    MultiIntersection,
    MultiUnion,
    MultiDifference,
}

/// Number of operands an operator accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn admits(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Exactly(k) => write!(f, "exactly {k}"),
            Arity::AtLeast(k) => write!(f, "at least {k}"),
        }
    }
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 9] = [
        OperatorTag::Entity,
        OperatorTag::Projection,
        OperatorTag::Negation,
        OperatorTag::Intersection,
        OperatorTag::Union,
        OperatorTag::Difference,
        OperatorTag::MultiIntersection,
        OperatorTag::MultiUnion,
        OperatorTag::MultiDifference,
    ];

    pub fn symbol(self) -> char {
        match self {
            OperatorTag::Entity => 'e',
            OperatorTag::Projection => 'p',
            OperatorTag::Negation => 'n',
            OperatorTag::Intersection => 'i',
            OperatorTag::Union => 'u',
            OperatorTag::Difference => 'd',
            OperatorTag::MultiIntersection => 'I',
            OperatorTag::MultiUnion => 'U',
            OperatorTag::MultiDifference => 'D',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        OperatorTag::ALL.into_iter().find(|t| t.symbol() == c)
    }

    /// Operand count, not counting the grounding slot of `e` and `p`.
    pub fn arity(self) -> Arity {
        match self {
            OperatorTag::Entity => Arity::Exactly(0),
            OperatorTag::Projection | OperatorTag::Negation => Arity::Exactly(1),
            OperatorTag::Intersection | OperatorTag::Union | OperatorTag::Difference => {
                Arity::Exactly(2)
            }
            OperatorTag::MultiIntersection
            | OperatorTag::MultiUnion
            | OperatorTag::MultiDifference => Arity::AtLeast(2),
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A set of operator tags, e.g. the `[e,p,I,U,n]` system.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct OperatorSet(u16);

impl OperatorSet {
    pub const EMPTY: OperatorSet = OperatorSet(0);
    pub const ALL: OperatorSet = OperatorSet(0x1ff);

    pub const fn from_bits(bits: u16) -> Self {
        OperatorSet(bits & 0x1ff)
    }

    pub fn of(tags: &[OperatorTag]) -> Self {
        tags.iter().fold(Self::EMPTY, |s, &t| s.with(t))
    }

    /// Parses a symbol list such as `e,p,i,u,n` or `[e,p,I,U,D]`.
    pub fn parse(text: &str) -> Option<Self> {
        let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
        let mut set = Self::EMPTY;
        for tok in inner.split(',') {
            let tok = tok.trim();
            let mut chars = tok.chars();
            let c = chars.next()?;
            if chars.next().is_some() {
                return None;
            }
            set = set.with(OperatorTag::from_symbol(c)?);
        }
        Some(set)
    }

    pub fn with(self, tag: OperatorTag) -> Self {
        OperatorSet(self.0 | tag.bit())
    }

    pub fn contains(self, tag: OperatorTag) -> bool {
        self.0 & tag.bit() != 0
    }

    pub fn is_subset(self, other: OperatorSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in the conventional listing order `e,p,i,I,u,U,n,d,D`.
    pub fn iter(self) -> impl Iterator<Item = OperatorTag> {
        const LISTING: [OperatorTag; 9] = [
            OperatorTag::Entity,
            OperatorTag::Projection,
            OperatorTag::Intersection,
            OperatorTag::MultiIntersection,
            OperatorTag::Union,
            OperatorTag::MultiUnion,
            OperatorTag::Negation,
            OperatorTag::Difference,
            OperatorTag::MultiDifference,
        ];
        LISTING.into_iter().filter(move |t| self.contains(*t))
    }
}

impl fmt::Display for OperatorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, t) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for OperatorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Set operators with two or more operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetOp {
    Intersection,
    Union,
    Difference,
    MultiIntersection,
    MultiUnion,
    MultiDifference,
}

impl SetOp {
    pub fn tag(self) -> OperatorTag {
        match self {
            SetOp::Intersection => OperatorTag::Intersection,
            SetOp::Union => OperatorTag::Union,
            SetOp::Difference => OperatorTag::Difference,
            SetOp::MultiIntersection => OperatorTag::MultiIntersection,
            SetOp::MultiUnion => OperatorTag::MultiUnion,
            SetOp::MultiDifference => OperatorTag::MultiDifference,
        }
    }

    pub fn from_tag(tag: OperatorTag) -> Option<Self> {
        Some(match tag {
            OperatorTag::Intersection => SetOp::Intersection,
            OperatorTag::Union => SetOp::Union,
            OperatorTag::Difference => SetOp::Difference,
            OperatorTag::MultiIntersection => SetOp::MultiIntersection,
            OperatorTag::MultiUnion => SetOp::MultiUnion,
            OperatorTag::MultiDifference => SetOp::MultiDifference,
            _ => return None,
        })
    }

    pub fn is_intersection(self) -> bool {
        matches!(self, SetOp::Intersection | SetOp::MultiIntersection)
    }

    pub fn is_union(self) -> bool {
        matches!(self, SetOp::Union | SetOp::MultiUnion)
    }

    pub fn is_difference(self) -> bool {
        matches!(self, SetOp::Difference | SetOp::MultiDifference)
    }
}

/// An operator tree. `R` is the payload of projection nodes and `E` the
/// payload of entity leaves; both are `()` for abstract query types.
///
/// The type admits arity-invalid trees (e.g. a one-operand `I`); use
/// [`validate`] to check a tree against a grammar.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tree<R, E> {
    Entity(E),
    Projection(R, Box<Tree<R, E>>),
    Negation(Box<Tree<R, E>>),
    Set(SetOp, Vec<Tree<R, E>>),
}

/// An abstract (ungrounded) query type.
pub type Formula = Tree<(), ()>;

impl Formula {
    pub fn anchor() -> Self {
        Tree::Entity(())
    }

    pub fn proj(child: Formula) -> Self {
        Tree::Projection((), Box::new(child))
    }
}

impl<R, E> Tree<R, E> {
    pub fn project(relation: R, child: Tree<R, E>) -> Self {
        Tree::Projection(relation, Box::new(child))
    }

    pub fn negate(child: Tree<R, E>) -> Self {
        Tree::Negation(Box::new(child))
    }

    pub fn set(op: SetOp, operands: Vec<Tree<R, E>>) -> Self {
        Tree::Set(op, operands)
    }

    pub fn and(a: Tree<R, E>, b: Tree<R, E>) -> Self {
        Tree::Set(SetOp::Intersection, vec![a, b])
    }

    pub fn or(a: Tree<R, E>, b: Tree<R, E>) -> Self {
        Tree::Set(SetOp::Union, vec![a, b])
    }

    pub fn minus(a: Tree<R, E>, b: Tree<R, E>) -> Self {
        Tree::Set(SetOp::Difference, vec![a, b])
    }

    pub fn tag(&self) -> OperatorTag {
        match self {
            Tree::Entity(_) => OperatorTag::Entity,
            Tree::Projection(..) => OperatorTag::Projection,
            Tree::Negation(_) => OperatorTag::Negation,
            Tree::Set(op, _) => op.tag(),
        }
    }

    pub fn children(&self) -> &[Tree<R, E>] {
        match self {
            Tree::Entity(_) => &[],
            Tree::Projection(_, c) | Tree::Negation(c) => std::slice::from_ref(c.as_ref()),
            Tree::Set(_, ops) => ops,
        }
    }

    /// Total number of operator nodes, leaves included.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Tree::size).sum::<usize>()
    }

    /// Set of operator tags occurring anywhere in the tree.
    pub fn operators(&self) -> OperatorSet {
        self.children()
            .iter()
            .fold(OperatorSet::EMPTY.with(self.tag()), |s, c| {
                OperatorSet::from_bits(s.0 | c.operators().0)
            })
    }

    /// Replaces the payloads, keeping the shape.
    pub fn map<R2, E2>(
        &self,
        fr: &mut impl FnMut(&R) -> R2,
        fe: &mut impl FnMut(&E) -> E2,
    ) -> Tree<R2, E2> {
        match self {
            Tree::Entity(e) => Tree::Entity(fe(e)),
            Tree::Projection(r, c) => {
                let r2 = fr(r);
                Tree::Projection(r2, Box::new(c.map(fr, fe)))
            }
            Tree::Negation(c) => Tree::Negation(Box::new(c.map(fr, fe))),
            Tree::Set(op, ops) => Tree::Set(*op, ops.iter().map(|c| c.map(fr, fe)).collect()),
        }
    }

    /// The abstract type of this tree.
    pub fn shape(&self) -> Formula {
        self.map(&mut |_| (), &mut |_| ())
    }

    /// The printed form, identical to `to_string()`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s);
        s
    }

    fn write_text(&self, out: &mut String) {
        out.push('(');
        out.push(self.tag().symbol());
        for c in self.children() {
            out.push(',');
            c.write_text(out);
        }
        out.push(')');
    }
}

impl<R, E> fmt::Display for Tree<R, E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Structural statistics used for grouping and generation bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FormulaStats {
    /// Number of `e` leaves.
    pub num_anchors: usize,
    /// Largest number of `p` nodes on a root-to-leaf path.
    pub max_chain: usize,
    /// Number of `n` nodes.
    pub num_negations: usize,
    /// Largest number of `p` and `n` nodes on a root-to-leaf path.
    pub max_pn_chain: usize,
}

pub fn compute_stats<R, E>(f: &Tree<R, E>) -> FormulaStats {
    match f {
        Tree::Entity(_) => FormulaStats {
            num_anchors: 1,
            ..Default::default()
        },
        Tree::Projection(_, c) => {
            let s = compute_stats(c);
            FormulaStats {
                max_chain: s.max_chain + 1,
                max_pn_chain: s.max_pn_chain + 1,
                ..s
            }
        }
        Tree::Negation(c) => {
            let s = compute_stats(c);
            FormulaStats {
                num_negations: s.num_negations + 1,
                max_pn_chain: s.max_pn_chain + 1,
                ..s
            }
        }
        Tree::Set(_, ops) => ops.iter().map(compute_stats).fold(
            FormulaStats::default(),
            |acc, s| FormulaStats {
                num_anchors: acc.num_anchors + s.num_anchors,
                max_chain: acc.max_chain.max(s.max_chain),
                num_negations: acc.num_negations + s.num_negations,
                max_pn_chain: acc.max_pn_chain.max(s.max_pn_chain),
            },
        ),
    }
}

/// Sorts the operands of commutative nodes by their printed form.
///
/// `i`, `u`, `I` and `U` have all operands sorted; `D` keeps its first
/// operand in place and sorts the subtrahends; `d`, `p` and `n` are left
/// untouched. Operands that print identically are ordered by their payloads
/// so grounded trees get a deterministic order too.
pub fn canonicalize<R: Clone + Ord, E: Clone + Ord>(f: &Tree<R, E>) -> Tree<R, E> {
    match f {
        Tree::Entity(_) => f.clone(),
        Tree::Projection(r, c) => Tree::Projection(r.clone(), Box::new(canonicalize(c))),
        Tree::Negation(c) => Tree::Negation(Box::new(canonicalize(c))),
        Tree::Set(op, ops) => {
            let mut keyed: Vec<(String, Tree<R, E>)> = ops
                .iter()
                .map(|c| {
                    let c = canonicalize(c);
                    (c.to_text(), c)
                })
                .collect();
            let by_key = |a: &(String, Tree<R, E>), b: &(String, Tree<R, E>)| -> Ordering {
                a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1))
            };
            match op {
                SetOp::Intersection | SetOp::Union | SetOp::MultiIntersection | SetOp::MultiUnion => {
                    keyed.sort_by(by_key)
                }
                SetOp::MultiDifference if keyed.len() > 1 => keyed[1..].sort_by(by_key),
                _ => {}
            }
            Tree::Set(*op, keyed.into_iter().map(|(_, c)| c).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("operator `{tag}` at byte {pos} takes {expected} operands, found {found}")]
    Arity {
        pos: usize,
        tag: OperatorTag,
        expected: Arity,
        found: usize,
    },
    #[error("operator `{tag}` at byte {pos} is not in the allowed set {allowed}")]
    TagNotAllowed {
        pos: usize,
        tag: OperatorTag,
        allowed: OperatorSet,
    },
    #[error("entity at byte {pos} is not the operand of a projection")]
    BareEntity { pos: usize },
}

/// Parses an s-expression such as `(i,(p,(e)),(n,(p,(e))))`.
///
/// Whitespace between tokens is ignored. Operator arities are checked, as
/// is the rule that `(e)` only appears directly under `p`.
pub fn parse_formula(text: &str, allowed: OperatorSet) -> Result<Formula, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        allowed,
    };
    let f = p.node(None)?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("trailing input after formula"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    allowed: OperatorSet,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), ParseError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", byte as char)))
        }
    }

    fn node(&mut self, parent: Option<OperatorTag>) -> Result<Formula, ParseError> {
        self.expect(b'(')?;
        self.skip_ws();
        let start = self.pos;
        let tag = match self.src.get(self.pos) {
            Some(&b) => OperatorTag::from_symbol(b as char)
                .ok_or_else(|| self.syntax(&format!("unknown operator `{}`", b as char)))?,
            None => return Err(self.syntax("unexpected end of input")),
        };
        self.pos += 1;
        if !self.allowed.contains(tag) {
            return Err(ParseError::TagNotAllowed {
                pos: start,
                tag,
                allowed: self.allowed,
            });
        }
        if tag == OperatorTag::Entity && parent != Some(OperatorTag::Projection) {
            return Err(ParseError::BareEntity { pos: start });
        }
        let mut operands = Vec::new();
        loop {
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b',') => {
                    self.pos += 1;
                    operands.push(self.node(Some(tag))?);
                }
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(_) => return Err(self.syntax("expected `,` or `)`")),
                None => return Err(self.syntax("unexpected end of input")),
            }
        }
        if !tag.arity().admits(operands.len()) {
            return Err(ParseError::Arity {
                pos: start,
                tag,
                expected: tag.arity(),
                found: operands.len(),
            });
        }
        Ok(match tag {
            OperatorTag::Entity => Tree::Entity(()),
            OperatorTag::Projection => Tree::Projection((), Box::new(operands.pop().unwrap())),
            OperatorTag::Negation => Tree::Negation(Box::new(operands.pop().unwrap())),
            _ => Tree::Set(SetOp::from_tag(tag).unwrap(), operands),
        })
    }
}

/// Prints a formula in the canonical comma-separated form without whitespace.
pub fn print_formula<R, E>(f: &Tree<R, E>) -> String {
    f.to_text()
}

/// A single grammar violation. `path` lists child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: Vec<usize>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViolationKind {
    #[error("operator `{0}` is not in the operator system")]
    TagNotInSystem(OperatorTag),
    #[error("operator `{tag}` takes {expected} operands, found {found}")]
    Arity {
        tag: OperatorTag,
        expected: Arity,
        found: usize,
    },
    #[error("entity is not the operand of a projection")]
    BareEntity,
    #[error("negation is not an operand of an intersection")]
    UnboundedNegation,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {:?}: {}", self.path, self.kind)
    }
}

/// Checks `f` against the grammar of `system`. With `bounded_negation`,
/// every `n` must be a direct operand of `i` or `I`.
pub fn validate<R, E>(f: &Tree<R, E>, system: OperatorSet, bounded_negation: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    validate_at(f, None, system, bounded_negation, &mut path, &mut out);
    out
}

fn validate_at<R, E>(
    f: &Tree<R, E>,
    parent: Option<OperatorTag>,
    system: OperatorSet,
    bounded: bool,
    path: &mut Vec<usize>,
    out: &mut Vec<Violation>,
) {
    let tag = f.tag();
    let mut push = |kind| {
        out.push(Violation {
            path: path.clone(),
            kind,
        })
    };
    if !system.contains(tag) {
        push(ViolationKind::TagNotInSystem(tag));
    }
    let n = f.children().len();
    if !tag.arity().admits(n) {
        push(ViolationKind::Arity {
            tag,
            expected: tag.arity(),
            found: n,
        });
    }
    if tag == OperatorTag::Entity && parent != Some(OperatorTag::Projection) {
        push(ViolationKind::BareEntity);
    }
    if bounded
        && tag == OperatorTag::Negation
        && !matches!(
            parent,
            Some(OperatorTag::Intersection | OperatorTag::MultiIntersection)
        )
    {
        push(ViolationKind::UnboundedNegation);
    }
    for (k, c) in f.children().iter().enumerate() {
        path.push(k);
        validate_at(c, Some(tag), system, bounded, path, out);
        path.pop();
    }
}
