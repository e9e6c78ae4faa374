//! Bounded enumeration of abstract query types.
//!
//! Types are produced by a depth-first expansion of the bounded-negation
//! grammar over `[e,p,i,u,n]`:
//!
//! ```text
//! Formula      := Intersection | Union | Projection
//! Intersection := (i,Formula,Formula|Negation)
//! Union        := (u,Formula,Formula)
//! Negation     := (n,Formula)
//! Projection   := (p,Formula|Entity)
//! ```
//!
//! A branch is pruned once a root-to-leaf path holds more than `max_chain`
//! projections or more than `max_pn_chain` projections and negations
//! together. All trees are binary; every emitted formula is canonical and
//! the output is sorted by its printed form.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formula::{canonicalize, compute_stats, Formula, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub max_anchors: usize,
    /// Bound on `p` nodes per root-to-leaf path.
    pub max_chain: usize,
    /// Bound on `p` plus `n` nodes per root-to-leaf path.
    pub max_pn_chain: usize,
    /// Only generate `n` as an operand of `i`.
    pub bounded_negation: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            max_anchors: 3,
            max_chain: 3,
            max_pn_chain: 3,
            bounded_negation: true,
        }
    }
}

impl GenerationConfig {
    pub fn is_valid(&self) -> bool {
        self.max_anchors >= 1 && self.max_chain >= 1 && self.max_pn_chain >= 1
    }
}

type Memo = HashMap<(usize, usize, usize), Vec<Formula>>;

/// Enumerates every canonical type within the bounds of `cfg`.
///
/// Returns an empty list when a bound is zero.
pub fn enumerate_types(cfg: &GenerationConfig) -> Vec<Formula> {
    if !cfg.is_valid() {
        return Vec::new();
    }
    let mut memo = Memo::new();
    let mut all: BTreeMap<String, Formula> = BTreeMap::new();
    for anchors in 1..=cfg.max_anchors {
        for f in expand(anchors, cfg.max_chain, cfg.max_pn_chain, cfg.bounded_negation, &mut memo) {
            all.insert(f.to_text(), f);
        }
    }
    all.into_values().collect()
}

/// All canonical formulas with exactly `anchors` leaves whose paths fit in
/// the remaining `p` budget and `p`+`n` budget.
fn expand(anchors: usize, p_budget: usize, pn_budget: usize, bounded: bool, memo: &mut Memo) -> Vec<Formula> {
    let key = (anchors, p_budget, pn_budget);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let mut found: BTreeSet<Formula> = BTreeSet::new();
    if p_budget >= 1 && pn_budget >= 1 {
        if anchors == 1 {
            found.insert(Formula::proj(Formula::anchor()));
        }
        for child in expand(anchors, p_budget - 1, pn_budget - 1, bounded, memo) {
            found.insert(Formula::proj(child));
        }
    }
    if !bounded && pn_budget >= 1 {
        for child in expand(anchors, p_budget, pn_budget - 1, bounded, memo) {
            found.insert(Formula::negate(child));
        }
    }
    for left_anchors in 1..anchors {
        let right_anchors = anchors - left_anchors;
        let left = expand(left_anchors, p_budget, pn_budget, bounded, memo);
        let right = expand(right_anchors, p_budget, pn_budget, bounded, memo);
        let negated = if pn_budget >= 2 {
            expand(right_anchors, p_budget, pn_budget - 1, bounded, memo)
        } else {
            Vec::new()
        };
        for l in &left {
            for r in &right {
                found.insert(canonicalize(&Tree::and(l.clone(), r.clone())));
                found.insert(canonicalize(&Tree::or(l.clone(), r.clone())));
            }
            for r in &negated {
                found.insert(canonicalize(&Tree::and(l.clone(), Formula::negate(r.clone()))));
            }
        }
    }
    let out: Vec<Formula> = found.into_iter().collect();
    memo.insert(key, out.clone());
    out
}

/// Type counts keyed by `(num_anchors, max_chain)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeCensus {
    cells: BTreeMap<(usize, usize), usize>,
}

impl TypeCensus {
    pub fn get(&self, anchors: usize, chain: usize) -> usize {
        self.cells.get(&(anchors, chain)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.cells.values().sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize), usize)> + '_ {
        self.cells.iter().map(|(k, v)| (*k, *v))
    }

    /// Sum over anchor counts for one chain length.
    pub fn chain_total(&self, chain: usize) -> usize {
        self.cells.iter().filter(|((_, c), _)| *c == chain).map(|(_, v)| v).sum()
    }

    /// Sum over chain lengths for one anchor count.
    pub fn anchor_total(&self, anchors: usize) -> usize {
        self.cells.iter().filter(|((a, _), _)| *a == anchors).map(|(_, v)| v).sum()
    }

    fn extent(&self) -> (usize, usize) {
        let a = self.cells.keys().map(|k| k.0).max().unwrap_or(0).max(3);
        let c = self.cells.keys().map(|k| k.1).max().unwrap_or(0).max(3);
        (a, c)
    }

    /// Cells where `self` differs from `reference`, as
    /// `(anchors, chain, ours, reference)`.
    pub fn deviations(&self, reference: &TypeCensus) -> Vec<CellDeviation> {
        let keys: BTreeSet<(usize, usize)> =
            self.cells.keys().chain(reference.cells.keys()).copied().collect();
        keys.into_iter()
            .filter_map(|(a, c)| {
                let (ours, theirs) = (self.get(a, c), reference.get(a, c));
                (ours != theirs).then_some(CellDeviation {
                    anchors: a,
                    chain: c,
                    found: ours,
                    expected: theirs,
                })
            })
            .collect()
    }

    pub fn from_cells(cells: impl IntoIterator<Item = ((usize, usize), usize)>) -> Self {
        TypeCensus {
            cells: cells.into_iter().filter(|(_, v)| *v > 0).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellDeviation {
    pub anchors: usize,
    pub chain: usize,
    pub found: usize,
    pub expected: usize,
}

impl fmt::Display for CellDeviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(anchors={}, chain={}): {} vs {} ({:+})",
            self.anchors,
            self.chain,
            self.found,
            self.expected,
            self.found as i64 - self.expected as i64
        )
    }
}

impl fmt::Display for TypeCensus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (max_a, max_c) = self.extent();
        write!(f, "{:<8}", "chain")?;
        for a in 1..=max_a {
            write!(f, "{:>8}", format!("a={a}"))?;
        }
        writeln!(f, "{:>8}", "sum")?;
        for c in 1..=max_c {
            write!(f, "{c:<8}")?;
            for a in 1..=max_a {
                write!(f, "{:>8}", self.get(a, c))?;
            }
            writeln!(f, "{:>8}", self.chain_total(c))?;
        }
        write!(f, "{:<8}", "sum")?;
        for a in 1..=max_a {
            write!(f, "{:>8}", self.anchor_total(a))?;
        }
        writeln!(f, "{:>8}", self.total())
    }
}

/// Counts the formulas per `(num_anchors, max_chain)` cell.
pub fn census<'a>(types: impl IntoIterator<Item = &'a Formula>) -> TypeCensus {
    let mut cells = BTreeMap::new();
    for f in types {
        let s = compute_stats(f);
        *cells.entry((s.num_anchors, s.max_chain)).or_insert(0) += 1;
    }
    TypeCensus { cells }
}

/// The type counts published for the reference benchmark with the default
/// bounds (rows are chain lengths 1..3, columns anchor counts 1..3).
pub const REFERENCE_CENSUS: [[usize; 3]; 3] = [[1, 3, 12], [1, 10, 91], [1, 13, 169]];

pub fn reference_census() -> TypeCensus {
    TypeCensus::from_cells((0..3).flat_map(|c| {
        (0..3).map(move |a| ((a + 1, c + 1), REFERENCE_CENSUS[c][a]))
    }))
}
