//! Grounded-query JSON and the on-disk dataset layout.
//!
//! A grounded query is a nested object with an operator key `o` and an
//! argument list `a`:
//!
//! ```text
//! {"o":"p","a":[5,{"o":"e","a":[7]}]}
//! ```
//!
//! A dataset directory holds
//!
//! * `manifest.json`: tool version, graph fingerprints, sampling settings
//!   and the formula ids;
//! * `formulas.tsv`: one row per type with its nine forms and statistics;
//! * `grounded/<formula_id>.jsonl`: one instance per line.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::entity_set::EntitySet;
use crate::executor::{AnswerSets, GroundedFormula};
use crate::formula::{compute_stats, parse_formula, Formula, FormulaStats, OperatorTag, SetOp, Tree};
use crate::grounder::{QueryInstance, SamplingConfig};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::rewrite::{all_forms, FormKind, RewriteError};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

struct Json<'a>(&'a GroundedFormula);

impl Serialize for Json<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let q = self.0;
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("o", &q.tag().symbol().to_string())?;
        m.serialize_entry("a", &Args(q))?;
        m.end()
    }
}

struct Args<'a>(&'a GroundedFormula);

impl Serialize for Args<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Tree::Entity(e) => {
                let mut seq = s.serialize_seq(Some(1))?;
                seq.serialize_element(&e.0)?;
                seq.end()
            }
            Tree::Projection(r, c) => {
                let mut seq = s.serialize_seq(Some(2))?;
                seq.serialize_element(&r.0)?;
                seq.serialize_element(&Json(c))?;
                seq.end()
            }
            q => {
                let ops = q.children();
                let mut seq = s.serialize_seq(Some(ops.len()))?;
                for c in ops {
                    seq.serialize_element(&Json(c))?;
                }
                seq.end()
            }
        }
    }
}

/// Minified JSON for `q`.
pub fn to_json(q: &GroundedFormula) -> String {
    serde_json::to_string(&Json(q)).expect("in-memory serialization")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JsonError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
}

fn schema(path: &str, message: impl Into<String>) -> JsonError {
    JsonError::Schema {
        path: if path.is_empty() { "$".into() } else { path.into() },
        message: message.into(),
    }
}

/// Parses a grounded query; the inverse of [`to_json`].
pub fn from_json(text: &str) -> Result<GroundedFormula, JsonError> {
    let v: Value = serde_json::from_str(text).map_err(|e| JsonError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_value(&v)
}

/// Like [`from_json`] over an already parsed value.
pub fn from_value(v: &Value) -> Result<GroundedFormula, JsonError> {
    let q = tree_from_value(v, "")?;
    if matches!(q, Tree::Entity(_)) {
        return Err(schema("$", "a bare entity is not a query"));
    }
    Ok(q)
}

fn id(v: &Value, path: &str) -> Result<u32, JsonError> {
    v.as_u64()
        .and_then(|x| u32::try_from(x).ok())
        .ok_or_else(|| schema(path, format!("expected a non-negative integer id, found {v}")))
}

fn tree_from_value(v: &Value, path: &str) -> Result<GroundedFormula, JsonError> {
    let obj = v.as_object().ok_or_else(|| schema(path, "expected an object"))?;
    if let Some(k) = obj.keys().find(|k| *k != "o" && *k != "a") {
        return Err(schema(path, format!("unknown key `{k}`")));
    }
    let o = obj
        .get("o")
        .and_then(Value::as_str)
        .ok_or_else(|| schema(path, "missing string key `o`"))?;
    let args = obj
        .get("a")
        .and_then(Value::as_array)
        .ok_or_else(|| schema(path, "missing list key `a`"))?;
    let mut chars = o.chars();
    let tag = match (chars.next(), chars.next()) {
        (Some(c), None) => OperatorTag::from_symbol(c),
        _ => None,
    }
    .ok_or_else(|| schema(path, format!("unknown operator `{o}`")))?;
    let arg = |i: usize| format!("{path}.a[{i}]");
    let arity = |n: usize| {
        if tag.arity().admits(n) {
            Ok(())
        } else {
            Err(schema(path, format!("`{tag}` takes {} operands, found {n}", tag.arity())))
        }
    };
    Ok(match tag {
        OperatorTag::Entity => {
            if args.len() != 1 {
                return Err(schema(path, format!("`e` takes one entity id, found {} arguments", args.len())));
            }
            Tree::Entity(EntityId(id(&args[0], &arg(0))?))
        }
        OperatorTag::Projection => {
            if args.len() != 2 {
                return Err(schema(path, format!("`p` takes a relation id and an operand, found {} arguments", args.len())));
            }
            Tree::project(RelationId(id(&args[0], &arg(0))?), tree_from_value(&args[1], &arg(1))?)
        }
        OperatorTag::Negation => {
            arity(args.len())?;
            Tree::negate(query_operand(&args[0], &arg(0))?)
        }
        _ => {
            arity(args.len())?;
            let op = SetOp::from_tag(tag).expect("set operator");
            let ops = args
                .iter()
                .enumerate()
                .map(|(i, a)| query_operand(a, &arg(i)))
                .collect::<Result<_, _>>()?;
            Tree::Set(op, ops)
        }
    })
}

fn query_operand(v: &Value, path: &str) -> Result<GroundedFormula, JsonError> {
    let q = tree_from_value(v, path)?;
    if matches!(q, Tree::Entity(_)) {
        return Err(schema(path, "entity outside a projection"));
    }
    Ok(q)
}

/// Formula id of the `index`-th type.
pub fn formula_id(index: usize) -> String {
    format!("type{index:04}")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool_version: String,
    pub full_graph: String,
    pub train_graph: String,
    pub num_entities: usize,
    pub num_relations: usize,
    pub sampling: SamplingConfig,
    /// Hash of the run configuration, if the dataset came from the CLI.
    pub config_sha256: Option<String>,
    pub formulas: Vec<String>,
}

impl Manifest {
    pub fn new(full: &KnowledgeGraph, train: &KnowledgeGraph, sampling: SamplingConfig, num_types: usize) -> Self {
        Manifest {
            tool_version: TOOL_VERSION.to_string(),
            full_graph: full.fingerprint(),
            train_graph: train.fingerprint(),
            num_entities: full.num_entities(),
            num_relations: full.num_relations(),
            sampling,
            config_sha256: None,
            formulas: (0..num_types).map(formula_id).collect(),
        }
    }
}

/// A row of the formula table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeRow {
    pub id: String,
    /// Indexed like [`FormKind::ALL`].
    pub forms: Vec<Formula>,
    pub stats: FormulaStats,
}

impl TypeRow {
    pub fn form(&self, kind: FormKind) -> &Formula {
        &self.forms[FormKind::ALL.iter().position(|k| *k == kind).unwrap()]
    }
}

pub fn type_rows(types: &[Formula], node_cap: usize) -> Result<Vec<TypeRow>, RewriteError> {
    types
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Ok(TypeRow {
                id: formula_id(i),
                forms: all_forms(t, node_cap)?.into_iter().map(|(_, f)| f).collect(),
                stats: compute_stats(t),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub types: Vec<TypeRow>,
    /// `type_index` refers into `types`.
    pub instances: Vec<QueryInstance>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Record { path: PathBuf, line: usize, message: String },
    #[error("grounded file for `{0}` has no formula row")]
    Orphan(String),
    #[error("formula `{0}` has no grounded file")]
    Missing(String),
    #[error("{graph} graph fingerprint {found} does not match the manifest ({expected})")]
    Fingerprint { graph: &'static str, expected: String, found: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl ToString) -> DatasetError {
    DatasetError::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

#[derive(Serialize)]
struct InstanceRecord<'a> {
    seed: u32,
    relaxed: bool,
    forms: FormsRecord<'a>,
    easy: Vec<u32>,
    hard: Vec<u32>,
}

struct FormsRecord<'a>(&'a [GroundedFormula]);

impl Serialize for FormsRecord<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, q) in FormKind::ALL.iter().zip(self.0) {
            m.serialize_entry(k.name(), &Json(q))?;
        }
        m.end()
    }
}

fn ids(s: &EntitySet) -> Vec<u32> {
    s.iter().map(|e| e.0).collect()
}

const STAT_COLUMNS: [&str; 4] = ["num_anchors", "max_chain", "num_negations", "max_pn_chain"];

/// Writes `ds` under `dir`, creating it if needed. Existing dataset files
/// are overwritten.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<(), DatasetError> {
    let grounded = dir.join("grounded");
    fs::create_dir_all(&grounded).map_err(io(&grounded))?;

    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&ds.manifest).expect("in-memory serialization");
    text.push('\n');
    fs::write(&path, text).map_err(io(&path))?;

    let path = dir.join("formulas.tsv");
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(&path)
        .map_err(|e| format_err(&path, e))?;
    let mut header = vec!["formula_id"];
    header.extend(FormKind::ALL.iter().map(|k| k.name()));
    header.extend(STAT_COLUMNS);
    w.write_record(&header).map_err(|e| format_err(&path, e))?;
    for row in &ds.types {
        let s = row.stats;
        let mut rec = vec![row.id.clone()];
        rec.extend(row.forms.iter().map(|f| f.to_string()));
        rec.extend([s.num_anchors, s.max_chain, s.num_negations, s.max_pn_chain].map(|x| x.to_string()));
        w.write_record(&rec).map_err(|e| format_err(&path, e))?;
    }
    w.flush().map_err(io(&path))?;

    let mut files: Vec<Vec<u8>> = vec![Vec::new(); ds.types.len()];
    for inst in &ds.instances {
        let buf = files
            .get_mut(inst.type_index)
            .ok_or_else(|| format_err(dir, format!("instance refers to missing type {}", inst.type_index)))?;
        let rec = InstanceRecord {
            seed: inst.seed.0,
            relaxed: inst.relaxed,
            forms: FormsRecord(&inst.forms),
            easy: ids(&inst.answers.easy),
            hard: ids(&inst.answers.hard),
        };
        serde_json::to_writer(&mut *buf, &rec).expect("in-memory serialization");
        buf.push(b'\n');
    }
    for (row, body) in ds.types.iter().zip(files) {
        let path = grounded.join(format!("{}.jsonl", row.id));
        fs::File::create(&path).and_then(|mut f| f.write_all(&body)).map_err(io(&path))?;
    }
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, DatasetError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&text).map_err(|e| format_err(&path, e))
}

/// Reads a dataset written by [`write_dataset`] and checks referential
/// integrity between the two tables.
pub fn read_dataset(dir: &Path) -> Result<Dataset, DatasetError> {
    let manifest = read_manifest(dir)?;
    let types = read_types(&dir.join("formulas.tsv"))?;
    let ids: Vec<&String> = types.iter().map(|t| &t.id).collect();
    if ids != manifest.formulas.iter().collect::<Vec<_>>() {
        return Err(format_err(&dir.join("formulas.tsv"), "formula ids differ from the manifest"));
    }

    let grounded = dir.join("grounded");
    let mut present = Vec::new();
    for entry in fs::read_dir(&grounded).map_err(io(&grounded))? {
        let entry = entry.map_err(io(&grounded))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let id = name.strip_suffix(".jsonl").unwrap_or(&name).to_string();
        if !types.iter().any(|t| t.id == id) {
            return Err(DatasetError::Orphan(id));
        }
        present.push(id);
    }
    if let Some(t) = types.iter().find(|t| !present.contains(&t.id)) {
        return Err(DatasetError::Missing(t.id.clone()));
    }

    let mut instances = Vec::new();
    for (index, row) in types.iter().enumerate() {
        let path = grounded.join(format!("{}.jsonl", row.id));
        let file = fs::File::open(&path).map_err(io(&path))?;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io(&path))?;
            if line.trim().is_empty() {
                continue;
            }
            let inst = parse_instance(&line, index, row, manifest.num_entities).map_err(|message| DatasetError::Record {
                path: path.clone(),
                line: n + 1,
                message,
            })?;
            instances.push(inst);
        }
    }
    Ok(Dataset {
        manifest,
        types,
        instances,
    })
}

fn read_types(path: &Path) -> Result<Vec<TypeRow>, DatasetError> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(|e| format_err(path, e))?;
    let header = r.headers().map_err(|e| format_err(path, e))?.clone();
    let mut expected = vec!["formula_id"];
    expected.extend(FormKind::ALL.iter().map(|k| k.name()));
    expected.extend(STAT_COLUMNS);
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(format_err(path, "unexpected header"));
    }
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| format_err(path, e))?;
        let bad = |message: String| DatasetError::Record {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut forms = Vec::new();
        for (k, text) in FormKind::ALL.iter().zip(rec.iter().skip(1)) {
            let f = parse_formula(text, k.system()).map_err(|e| bad(format!("{k}: {e}")))?;
            forms.push(f);
        }
        let stat = |i: usize| -> Result<usize, DatasetError> {
            rec[10 + i].parse().map_err(|_| bad(format!("bad {} value `{}`", STAT_COLUMNS[i], &rec[10 + i])))
        };
        let stats = FormulaStats {
            num_anchors: stat(0)?,
            max_chain: stat(1)?,
            num_negations: stat(2)?,
            max_pn_chain: stat(3)?,
        };
        if compute_stats(&forms[0]) != stats {
            return Err(bad("statistics do not match the Original form".into()));
        }
        rows.push(TypeRow {
            id: rec[0].to_string(),
            forms,
            stats,
        });
    }
    Ok(rows)
}

fn parse_instance(line: &str, type_index: usize, row: &TypeRow, universe: usize) -> Result<QueryInstance, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = v.as_object().ok_or("expected an object")?;
    for k in obj.keys() {
        if !["seed", "relaxed", "forms", "easy", "hard"].contains(&k.as_str()) {
            return Err(format!("unknown key `{k}`"));
        }
    }
    let entity = |v: &Value| -> Result<EntityId, String> {
        let i = id(v, "").map_err(|e| e.to_string())?;
        if (i as usize) < universe {
            Ok(EntityId(i))
        } else {
            Err(format!("entity id {i} out of range"))
        }
    };
    let seed = entity(obj.get("seed").ok_or("missing `seed`")?)?;
    let relaxed = obj.get("relaxed").and_then(Value::as_bool).ok_or("missing boolean `relaxed`")?;
    let set = |key: &str| -> Result<EntitySet, String> {
        let list = obj.get(key).and_then(Value::as_array).ok_or(format!("missing list `{key}`"))?;
        let ids = list.iter().map(entity).collect::<Result<Vec<_>, _>>()?;
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("`{key}` is not strictly ascending"));
        }
        Ok(EntitySet::from_ids(universe, ids))
    };
    let (easy, hard) = (set("easy")?, set("hard")?);
    if !easy.is_disjoint(&hard) {
        return Err("easy and hard answers overlap".into());
    }
    let forms_obj = obj.get("forms").and_then(Value::as_object).ok_or("missing object `forms`")?;
    if forms_obj.len() != FormKind::ALL.len() {
        return Err(format!("expected {} forms, found {}", FormKind::ALL.len(), forms_obj.len()));
    }
    let mut forms = Vec::new();
    for (k, shape) in FormKind::ALL.iter().zip(&row.forms) {
        let v = forms_obj.get(k.name()).ok_or(format!("missing form `{k}`"))?;
        let q = from_value(v).map_err(|e| format!("{k}: {e}"))?;
        if q.shape() != *shape {
            return Err(format!("{k} form does not match formula `{}`", row.id));
        }
        forms.push(q);
    }
    Ok(QueryInstance {
        type_index,
        seed,
        relaxed,
        forms,
        answers: AnswerSets::from_parts(easy, hard),
    })
}

/// Checks that the graphs are the ones the dataset was sampled from.
pub fn check_fingerprints(m: &Manifest, full: &KnowledgeGraph, train: &KnowledgeGraph) -> Result<(), DatasetError> {
    for (graph, expected, kg) in [("full", &m.full_graph, full), ("train", &m.train_graph, train)] {
        let found = kg.fingerprint();
        if &found != expected {
            return Err(DatasetError::Fingerprint {
                graph,
                expected: expected.clone(),
                found,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::tests::{random_kg, random_query};
    use crate::grounder::sample_instances;
    use crate::typegen::{enumerate_types, GenerationConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(r: u32, c: GroundedFormula) -> GroundedFormula {
        Tree::project(RelationId(r), c)
    }

    fn e(x: u32) -> GroundedFormula {
        Tree::Entity(EntityId(x))
    }

    #[test]
    fn projection_encoding() {
        assert_eq!(to_json(&p(5, e(7))), r#"{"o":"p","a":[5,{"o":"e","a":[7]}]}"#);
        let q = Tree::and(p(1, e(2)), p(3, e(4)));
        assert_eq!(
            to_json(&q),
            r#"{"o":"i","a":[{"o":"p","a":[1,{"o":"e","a":[2]}]},{"o":"p","a":[3,{"o":"e","a":[4]}]}]}"#
        );
        assert_eq!(from_json(r#"{"o":"p","a":[0,{"o":"e","a":[0]}]}"#).unwrap(), p(0, e(0)));
    }

    #[test]
    fn schema_violations() {
        let err = |s: &str| from_json(s).unwrap_err();
        assert!(matches!(err(r#"{"o":"e","a":[3]}"#), JsonError::Schema { .. }));
        assert!(matches!(err(r#"{"o":"i","a":[{"o":"e","a":[3]},{"o":"e","a":[3]}]}"#), JsonError::Schema { .. }));
        assert!(matches!(err(r#"{"o":"p","a":[1.5,{"o":"e","a":[0]}]}"#), JsonError::Schema { .. }));
        assert!(matches!(err(r#"{"o":"p","a":[-1,{"o":"e","a":[0]}]}"#), JsonError::Schema { .. }));
        assert!(matches!(err(r#"{"o":"I","a":[{"o":"p","a":[1,{"o":"e","a":[0]}]}]}"#), JsonError::Schema { .. }));
        assert!(matches!(err(r#"{"o":"p","a":[1,{"o":"e","a":[0]}],"r":1}"#), JsonError::Schema { .. }));
        assert!(matches!(err(r#"{"o":"x","a":[]}"#), JsonError::Schema { .. }));
        assert!(matches!(err(r#"{"a":[]}"#), JsonError::Schema { .. }));
    }

    #[test]
    fn truncated_json_reports_position() {
        match from_json("{\"o\":\"p\",\n\"a\":[5,{\"o\"") {
            Err(JsonError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 11)),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let depth = rng.random_range(0..4);
            let q = random_query(&mut rng, 1000, 50, depth);
            let text = to_json(&q);
            prop_assert_eq!(from_json(&text).unwrap(), q.clone());
            let v: Value = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(from_value(&v).unwrap(), q);
        }
    }

    fn toy_dataset() -> (Dataset, KnowledgeGraph, KnowledgeGraph) {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let full = random_kg(&mut rng, 40, 4, 300);
        let kept: Vec<_> = full.triples().iter().copied().filter(|_| rng.random_bool(0.8)).collect();
        let train = KnowledgeGraph::new(full.vocab().clone(), kept).unwrap();
        let types: Vec<Formula> = enumerate_types(&GenerationConfig::default()).into_iter().step_by(60).collect();
        let cfg = SamplingConfig {
            rng_seed: 1,
            queries_per_type: 2,
            ..Default::default()
        };
        let out = sample_instances(&types, &full, &train, &cfg).unwrap();
        let ds = Dataset {
            manifest: Manifest::new(&full, &train, cfg.clone(), types.len()),
            types: type_rows(&types, cfg.node_cap).unwrap(),
            instances: out.instances,
        };
        (ds, full, train)
    }

    #[test]
    fn dataset_round_trip_is_lossless_and_deterministic() {
        let (ds, full, train) = toy_dataset();
        assert!(ds.instances.len() >= 5, "{}", ds.instances.len());
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_dataset(a.path(), &ds).unwrap();
        write_dataset(b.path(), &ds).unwrap();
        let back = read_dataset(a.path()).unwrap();
        assert_eq!(back, ds);
        for name in ["manifest.json", "formulas.tsv"] {
            assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
        }
        for row in &ds.types {
            let f = format!("grounded/{}.jsonl", row.id);
            assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap());
        }
        check_fingerprints(&back.manifest, &full, &train).unwrap();
        assert!(matches!(
            check_fingerprints(&back.manifest, &train, &train),
            Err(DatasetError::Fingerprint { graph: "full", .. })
        ));
    }

    #[test]
    fn orphan_and_missing_files_are_named() {
        let (ds, _, _) = toy_dataset();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &ds).unwrap();
        fs::write(dir.path().join("grounded/type9999.jsonl"), "").unwrap();
        match read_dataset(dir.path()) {
            Err(DatasetError::Orphan(id)) => assert_eq!(id, "type9999"),
            other => panic!("{other:?}"),
        }
        fs::remove_file(dir.path().join("grounded/type9999.jsonl")).unwrap();
        fs::remove_file(dir.path().join("grounded/type0001.jsonl")).unwrap();
        match read_dataset(dir.path()) {
            Err(DatasetError::Missing(id)) => assert_eq!(id, "type0001"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn record_line_format() {
        let (ds, _, _) = toy_dataset();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &ds).unwrap();
        let inst = &ds.instances[0];
        let text = fs::read_to_string(dir.path().join(format!("grounded/{}.jsonl", formula_id(inst.type_index)))).unwrap();
        let line = text.lines().next().unwrap();
        assert!(line.starts_with(&format!("{{\"seed\":{},\"relaxed\":", inst.seed)));
        let keys: Vec<&str> = FormKind::ALL.iter().map(|k| k.name()).collect();
        let mut at = 0;
        for k in keys {
            let pos = line[at..].find(&format!("\"{k}\":")).unwrap();
            at += pos + 1;
        }
        assert!(line.ends_with("]}") && line.contains("\"hard\":["));
    }
}
