//! Fixed-universe bit sets of entity ids.

use std::fmt;

use crate::kg::EntityId;

const WORD: usize = 64;

/// A subset of `0..universe`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EntitySet {
    universe: usize,
    words: Vec<u64>,
}

impl EntitySet {
    pub fn empty(universe: usize) -> Self {
        EntitySet {
            universe,
            words: vec![0; universe.div_ceil(WORD)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = EntitySet {
            universe,
            words: vec![u64::MAX; universe.div_ceil(WORD)],
        };
        s.trim();
        s
    }

    pub fn singleton(universe: usize, e: EntityId) -> Self {
        let mut s = Self::empty(universe);
        s.insert(e);
        s
    }

    pub fn from_ids(universe: usize, ids: impl IntoIterator<Item = EntityId>) -> Self {
        let mut s = Self::empty(universe);
        for e in ids {
            s.insert(e);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Panics if `e` is outside the universe.
    pub fn insert(&mut self, e: EntityId) {
        let i = e.index();
        assert!(i < self.universe, "entity {i} outside universe of {}", self.universe);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    pub fn remove(&mut self, e: EntityId) {
        let i = e.index();
        if i < self.universe {
            self.words[i / WORD] &= !(1 << (i % WORD));
        }
    }

    pub fn contains(&self, e: EntityId) -> bool {
        let i = e.index();
        i < self.universe && self.words[i / WORD] & (1 << (i % WORD)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn union_with(&mut self, other: &EntitySet) {
        self.check(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &EntitySet) {
        self.check(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn difference_with(&mut self, other: &EntitySet) {
        self.check(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn complement(&self) -> EntitySet {
        let mut s = EntitySet {
            universe: self.universe,
            words: self.words.iter().map(|w| !w).collect(),
        };
        s.trim();
        s
    }

    pub fn is_subset(&self, other: &EntitySet) -> bool {
        self.check(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &EntitySet) -> bool {
        self.check(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(EntityId::from_index(wi * WORD + bit))
            })
        })
    }

    pub fn to_vec(&self) -> Vec<EntityId> {
        self.iter().collect()
    }

    /// The `k`-th member in ascending order.
    pub fn nth(&self, k: usize) -> Option<EntityId> {
        let mut k = k;
        for (wi, &w) in self.words.iter().enumerate() {
            let c = w.count_ones() as usize;
            if k < c {
                let mut w = w;
                for _ in 0..k {
                    w &= w - 1;
                }
                return Some(EntityId::from_index(wi * WORD + w.trailing_zeros() as usize));
            }
            k -= c;
        }
        None
    }

    fn check(&self, other: &EntitySet) {
        assert_eq!(self.universe, other.universe, "entity sets over different universes");
    }

    fn trim(&mut self) {
        let rem = self.universe % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for EntitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|e| e.0)).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn ids(v: &[u32]) -> Vec<EntityId> {
        v.iter().map(|&i| EntityId(i)).collect()
    }

    #[test]
    fn complement_respects_universe() {
        let s = EntitySet::from_ids(70, ids(&[0, 65, 69]));
        let c = s.complement();
        assert_eq!(c.len(), 67);
        assert!(!c.contains(EntityId(65)));
        assert!(!c.contains(EntityId(70)));
        assert_eq!(EntitySet::full(70).complement(), EntitySet::empty(70));
    }

    #[test]
    fn nth_walks_members() {
        let s = EntitySet::from_ids(200, ids(&[3, 64, 130, 199]));
        assert_eq!(s.nth(0), Some(EntityId(3)));
        assert_eq!(s.nth(2), Some(EntityId(130)));
        assert_eq!(s.nth(3), Some(EntityId(199)));
        assert_eq!(s.nth(4), None);
    }

    proptest! {
        #[test]
        fn matches_btreeset(
            n in 1usize..300,
            a in prop::collection::vec(0u32..300, 0..40),
            b in prop::collection::vec(0u32..300, 0..40),
        ) {
            let a: BTreeSet<u32> = a.into_iter().filter(|&x| (x as usize) < n).collect();
            let b: BTreeSet<u32> = b.into_iter().filter(|&x| (x as usize) < n).collect();
            let sa = EntitySet::from_ids(n, a.iter().map(|&i| EntityId(i)));
            let sb = EntitySet::from_ids(n, b.iter().map(|&i| EntityId(i)));
            let as_vec = |s: &EntitySet| s.iter().map(|e| e.0).collect::<Vec<_>>();

            let mut u = sa.clone();
            u.union_with(&sb);
            prop_assert_eq!(as_vec(&u), a.union(&b).copied().collect::<Vec<_>>());
            let mut i = sa.clone();
            i.intersect_with(&sb);
            prop_assert_eq!(as_vec(&i), a.intersection(&b).copied().collect::<Vec<_>>());
            let mut d = sa.clone();
            d.difference_with(&sb);
            prop_assert_eq!(as_vec(&d), a.difference(&b).copied().collect::<Vec<_>>());
            let c: Vec<u32> = (0..n as u32).filter(|x| !a.contains(x)).collect();
            prop_assert_eq!(as_vec(&sa.complement()), c);
            prop_assert_eq!(sa.len(), a.len());
            prop_assert_eq!(sa.is_disjoint(&sb), a.is_disjoint(&b));
            prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
        }
    }
}
