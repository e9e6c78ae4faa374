//! Knowledge-graph storage: vocabularies, triples and projection indices.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::entity_set::EntitySet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        EntityId(u32::try_from(i).expect("entity id exceeds u32"))
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        RelationId(u32::try_from(i).expect("relation id exceeds u32"))
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error)]
pub enum KgError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected 3 tab-separated fields, found {found}")]
    Malformed { path: PathBuf, line: usize, found: usize },
    #[error("{path}:{line}: duplicate vocabulary token `{token}`")]
    DuplicateToken { path: PathBuf, line: usize, token: String },
    #[error("no triples in input")]
    Empty,
    #[error("unknown relation id {0}")]
    UnknownRelation(u32),
    #[error("unknown entity id {0}")]
    UnknownEntity(u32),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> KgError + '_ {
    move |source| KgError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Token to dense id map; ids follow first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// A vocabulary whose tokens are the decimal ids `0..n`.
    pub fn numbered(n: usize) -> Self {
        let mut v = Self::new();
        for i in 0..n {
            v.intern(&i.to_string());
        }
        v
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(id) = self.index.get(token) {
            return *id;
        }
        let id = u32::try_from(self.names.len()).expect("vocabulary exceeds u32");
        self.names.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    /// True when `self` assigns every one of its tokens the same id as
    /// `other`.
    pub fn is_prefix_of(&self, other: &Vocabulary) -> bool {
        self.names.len() <= other.names.len() && self.names.iter().zip(&other.names).all(|(a, b)| a == b)
    }

    /// Reads one token per line; the line number is the id.
    pub fn read(path: &Path) -> Result<Self, KgError> {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let mut v = Self::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            let token = line.trim_end_matches('\r');
            if v.get(token).is_some() {
                return Err(KgError::DuplicateToken {
                    path: path.to_path_buf(),
                    line: n + 1,
                    token: token.to_string(),
                });
            }
            v.intern(token);
        }
        Ok(v)
    }

    pub fn write(&self, path: &Path) -> Result<(), KgError> {
        let mut out = Vec::new();
        for name in &self.names {
            out.extend_from_slice(name.as_bytes());
            out.push(b'\n');
        }
        fs::File::create(path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(io_err(path))
    }
}

/// Entity and relation vocabularies of one graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabularies {
    pub entities: Vocabulary,
    pub relations: Vocabulary,
}

/// Adjacency lists of all nodes, sorted by (relation, neighbour).
#[derive(Clone, Debug, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    edges: Vec<(RelationId, EntityId)>,
}

impl Csr {
    fn build(n: usize, mut pairs: Vec<(EntityId, RelationId, EntityId)>) -> Self {
        pairs.sort_unstable();
        let mut offsets = vec![0; n + 1];
        for (node, _, _) in &pairs {
            offsets[node.index() + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr {
            offsets,
            edges: pairs.into_iter().map(|(_, r, x)| (r, x)).collect(),
        }
    }

    fn of(&self, node: EntityId) -> &[(RelationId, EntityId)] {
        let i = node.index();
        if i + 1 >= self.offsets.len() {
            return &[];
        }
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }

    fn with(&self, node: EntityId, r: RelationId) -> &[(RelationId, EntityId)] {
        let all = self.of(node);
        let lo = all.partition_point(|(x, _)| *x < r);
        let hi = all.partition_point(|(x, _)| *x <= r);
        &all[lo..hi]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnowledgeGraph {
    vocab: Vocabularies,
    /// Sorted, deduplicated `(head, relation, tail)`.
    triples: Vec<(EntityId, RelationId, EntityId)>,
    out: Csr,
    inc: Csr,
}

impl KnowledgeGraph {
    /// Builds a graph over an existing vocabulary. Ids must be in range.
    pub fn new(vocab: Vocabularies, triples: impl IntoIterator<Item = (EntityId, RelationId, EntityId)>) -> Result<Self, KgError> {
        let mut triples: Vec<_> = triples.into_iter().collect();
        for &(h, r, t) in &triples {
            for e in [h, t] {
                if e.index() >= vocab.entities.len() {
                    return Err(KgError::UnknownEntity(e.0));
                }
            }
            if r.index() >= vocab.relations.len() {
                return Err(KgError::UnknownRelation(r.0));
            }
        }
        triples.sort_unstable();
        triples.dedup();
        let n = vocab.entities.len();
        let out = Csr::build(n, triples.clone());
        let inc = Csr::build(n, triples.iter().map(|&(h, r, t)| (t, r, h)).collect());
        Ok(KnowledgeGraph { vocab, triples, out, inc })
    }

    /// A graph with numbered vocabularies, convenient for synthetic data.
    pub fn from_ids(
        num_entities: usize,
        num_relations: usize,
        triples: impl IntoIterator<Item = (u32, u32, u32)>,
    ) -> Result<Self, KgError> {
        let vocab = Vocabularies {
            entities: Vocabulary::numbered(num_entities),
            relations: Vocabulary::numbered(num_relations),
        };
        Self::new(
            vocab,
            triples.into_iter().map(|(h, r, t)| (EntityId(h), RelationId(r), EntityId(t))),
        )
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.relations.len()
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn vocab(&self) -> &Vocabularies {
        &self.vocab
    }

    pub fn triples(&self) -> &[(EntityId, RelationId, EntityId)] {
        &self.triples
    }

    pub fn contains(&self, h: EntityId, r: RelationId, t: EntityId) -> bool {
        self.triples.binary_search(&(h, r, t)).is_ok()
    }

    /// Tails of `(head, relation, ·)`, ascending.
    pub fn tails(&self, head: EntityId, r: RelationId) -> impl Iterator<Item = EntityId> + '_ {
        self.out.with(head, r).iter().map(|(_, t)| *t)
    }

    /// Heads of `(·, relation, tail)`, ascending.
    pub fn heads(&self, tail: EntityId, r: RelationId) -> impl Iterator<Item = EntityId> + '_ {
        self.inc.with(tail, r).iter().map(|(_, h)| *h)
    }

    /// Every `(relation, head)` with `(head, relation, target)` in the graph,
    /// sorted.
    pub fn reverse_candidates(&self, target: EntityId) -> &[(RelationId, EntityId)] {
        self.inc.of(target)
    }

    /// Every `(relation, tail)` leaving `head`, sorted.
    pub fn out_edges(&self, head: EntityId) -> &[(RelationId, EntityId)] {
        self.out.of(head)
    }

    /// Image of `sources` under `relation`. The result has the universe of
    /// `sources`, which may be larger than this graph's entity count.
    pub fn project(&self, sources: &EntitySet, r: RelationId) -> Result<EntitySet, KgError> {
        if r.index() >= self.num_relations() {
            return Err(KgError::UnknownRelation(r.0));
        }
        let mut out = EntitySet::empty(sources.universe());
        for s in sources.iter() {
            for t in self.tails(s, r) {
                out.insert(t);
            }
        }
        Ok(out)
    }

    /// SHA-256 over vocabularies and the sorted triple list.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (tag, v) in [(b'E', &self.vocab.entities), (b'R', &self.vocab.relations)] {
            h.update([tag]);
            h.update((v.len() as u64).to_le_bytes());
            for name in v.names() {
                h.update((name.len() as u64).to_le_bytes());
                h.update(name.as_bytes());
            }
        }
        h.update(b"T");
        for (a, r, b) in &self.triples {
            h.update(a.0.to_le_bytes());
            h.update(r.0.to_le_bytes());
            h.update(b.0.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Loads tab-separated `head relation tail` lines from `files` in order.
///
/// With `vocab`, ids already assigned there are kept and unseen tokens are
/// appended, so a training graph and its superset share ids. Blank lines
/// are skipped.
pub fn load_triples<P: AsRef<Path>>(files: &[P], vocab: Option<&Vocabularies>) -> Result<KnowledgeGraph, KgError> {
    let mut voc = vocab.cloned().unwrap_or_default();
    let mut triples = Vec::new();
    for path in files {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(io_err(path))?;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
                return Err(KgError::Malformed {
                    path: path.to_path_buf(),
                    line: n + 1,
                    found: fields.iter().filter(|f| !f.is_empty()).count(),
                });
            }
            let h = voc.entities.intern(fields[0]);
            let r = voc.relations.intern(fields[1]);
            let t = voc.entities.intern(fields[2]);
            triples.push((EntityId(h), RelationId(r), EntityId(t)));
        }
    }
    if triples.is_empty() {
        return Err(KgError::Empty);
    }
    KnowledgeGraph::new(voc, triples)
}
