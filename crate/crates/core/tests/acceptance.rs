//! Acceptance run: prints one PASS/FAIL line per criterion, followed by
//! indented details, and exits nonzero if any criterion fails.
//!
//! Time limits are pinned below and count against each criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use efo1::entity_set::EntitySet;
use efo1::executor::{execute, AnswerSets, GroundedFormula};
use efo1::formula::{canonicalize, parse_formula, print_formula, validate, Formula, OperatorSet, SetOp, Tree};
use efo1::grounder::{sample_instances, QueryInstance, SamplingConfig};
use efo1::kg::{EntityId, KnowledgeGraph, RelationId};
use efo1::metrics::{
    evaluate, hit_at_k, mrr, oracle_prediction, ra_oracle, MetricOptions, Metrics, Prediction, PredictionSet, RaPool,
    TiePolicy,
};
use efo1::rewrite::{to_form, FormKind};
use efo1::serialize::{type_rows, write_dataset, Dataset, Manifest};
use efo1::typegen::{census, enumerate_types, reference_census, GenerationConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LIMIT_GRAMMAR: Duration = Duration::from_secs(1);
const LIMIT_FORMS: Duration = Duration::from_secs(1);
const LIMIT_CENSUS: Duration = Duration::from_secs(60);
const LIMIT_EQUIVALENCE: Duration = Duration::from_secs(60);
const LIMIT_EXECUTOR: Duration = Duration::from_secs(120);
const LIMIT_SAMPLING: Duration = Duration::from_secs(60);
const LIMIT_METRICS: Duration = Duration::from_secs(30);
/// Absolute tolerance for metric agreement with the references.
const METRIC_TOL: f64 = 1e-12;

/// The sixteen benchmark formula strings.
const BENCHMARK_FORMULAS: [(&str, &str); 16] = [
    ("1p", "(p,(e))"),
    ("2p", "(p,(p,(e)))"),
    ("3p", "(p,(p,(p,(e))))"),
    ("2i", "(i,(p,(e)),(p,(e)))"),
    ("3i", "(i,(i,(p,(e)),(p,(e))),(p,(e)))"),
    ("ip", "(p,(i,(p,(e)),(p,(e))))"),
    ("pi", "(i,(p,(p,(e))),(p,(e)))"),
    ("2in", "(i,(p,(e)),(n,(p,(e))))"),
    ("3in", "(i,(p,(e)),(i,(p,(e)),(n,(p,(e)))))"),
    ("inp", "(p,(i,(p,(e)),(n,(p,(e)))))"),
    ("pin", "(i,(p,(p,(e))),(n,(p,(e))))"),
    ("pni", "(i,(n,(p,(p,(e)))),(p,(e)))"),
    ("2u-DNF", "(u,(p,(e)),(p,(e)))"),
    ("up-DNF", "(u,(p,(p,(e))),(p,(p,(e))))"),
    ("2u-DM", "(n,(i,(n,(p,(e))),(n,(p,(e)))))"),
    ("up-DM", "(p,(n,(i,(n,(p,(e))),(n,(p,(e))))))"),
];

/// The five-anchor worked example, one published row per form with
/// whitespace removed. The DNF+IUd row is kept exactly as published.
const WORKED_EXAMPLE: [(FormKind, &str); 9] = [
    (FormKind::Original, "(i,(i,(n,(p,(e))),(p,(i,(n,(p,(e))),(p,(e))))),(u,(p,(e)),(p,(p,(e)))))"),
    (FormKind::Dm, "(i,(i,(n,(p,(e))),(p,(i,(n,(p,(e))),(p,(e))))),(n,(i,(n,(p,(e))),(n,(p,(p,(e)))))))"),
    (FormKind::DmI, "(I,(n,(p,(e))),(p,(i,(n,(p,(e))),(p,(e)))),(n,(i,(n,(p,(e))),(n,(p,(p,(e)))))))"),
    (
        FormKind::Dnf,
        "(u,(i,(i,(i,(n,(p,(p,(e)))),(p,(p,(e)))),(n,(p,(e)))),(p,(e))),(i,(i,(i,(n,(p,(p,(e)))),(p,(p,(e)))),(n,(p,(e)))),(p,(p,(e)))))",
    ),
    (FormKind::OriginalD, "(i,(d,(p,(d,(p,(e)),(p,(e)))),(p,(e))),(u,(p,(e)),(p,(p,(e)))))"),
    (
        FormKind::DnfD,
        "(u,(i,(d,(d,(p,(p,(e))),(p,(p,(e)))),(p,(e))),(p,(e))),(i,(d,(d,(p,(p,(e))),(p,(p,(e)))),(p,(e))),(p,(p,(e)))))",
    ),
    (
        FormKind::DnfIu,
        "(U,(I,(n,(p,(e))),(n,(p,(p,(e)))),(p,(e)),(p,(p,(e)))),(I,(n,(p,(e))),(n,(p,(p,(e)))),(p,(p,(e))),(p,(p,(e)))))",
    ),
    (
        FormKind::DnfIud,
        "(U,(d,(d,(I,(p,(e)),(p,(p,(e)))),(p,(e)))(p,(p,(e)))),(d,(d,(I,(p,(p,(e))),(p,(p,(e)))),(p,(e)))(p,(p,(e)))))",
    ),
    (
        FormKind::DnfIuD,
        "(U,(D,(I,(p,(e)),(p,(p,(e)))),(p,(e)),(p,(p,(e)))),(D,(I,(p,(p,(e))),(p,(p,(e)))),(p,(e)),(p,(p,(e)))))",
    ),
];

/// The Original formula whose forms the published DNF-family rows are.
/// It differs from the published Original by `(p,(i,A,B))` having become
/// `(i,(p,A),(p,B))` with the projection also pushed through the negation.
const IMPLIED_ORIGINAL: &str = "(i,(i,(n,(p,(e))),(i,(n,(p,(p,(e)))),(p,(p,(e))))),(u,(p,(e)),(p,(p,(e)))))";

struct Report {
    pass: bool,
    details: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Report {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: impl Into<String>) {
        self.pass &= ok;
        self.details.push(format!("{} {}", if ok { "ok  " } else { "FAIL" }, line.into()));
    }

    fn note(&mut self, line: impl Into<String>) {
        self.details.push(format!("     {}", line.into()));
    }
}

fn criterion(n: usize, title: &str, limit: Duration, body: impl FnOnce(&mut Report)) -> bool {
    let mut r = Report::new();
    let start = Instant::now();
    body(&mut r);
    let took = start.elapsed();
    let in_time = took <= limit;
    let pass = r.pass && in_time;
    println!(
        "criterion {n} {}: {title} ({took:.2?}, limit {limit:.0?}{})",
        if pass { "PASS" } else { "FAIL" },
        if in_time { "" } else { ", too slow" }
    );
    for d in r.details {
        println!("    {d}");
    }
    pass
}

fn parse_any(s: &str) -> Formula {
    parse_formula(s, OperatorSet::ALL).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn grammar(r: &mut Report) {
    for (name, text) in BENCHMARK_FORMULAS {
        let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        match parse_formula(&stripped, OperatorSet::ALL) {
            Ok(f) => {
                let back = print_formula(&f);
                r.check(back == stripped, format!("{name:<7} {back}"));
            }
            Err(e) => r.check(false, format!("{name}: {e}")),
        }
    }
}

fn forms(r: &mut Report) {
    let original = canonicalize(&parse_any(WORKED_EXAMPLE[0].1));
    for (kind, row) in WORKED_EXAMPLE {
        let ours = match to_form(&original, kind) {
            Ok(f) => f.to_string(),
            Err(e) => {
                r.check(false, format!("{kind}: {e}"));
                continue;
            }
        };
        match parse_formula(row, OperatorSet::ALL) {
            Ok(expected) => {
                let expected = canonicalize(&expected).to_string();
                r.check(ours == expected, format!("{kind}"));
                if ours != expected {
                    r.note(format!("  got      {ours}"));
                    r.note(format!("  expected {expected}"));
                }
            }
            Err(e) => {
                r.check(false, format!("{kind}: published row does not parse ({e})"));
                r.note(format!("  got      {ours}"));
            }
        }
    }

    let pairs = [
        ("2u", "(u,(p,(e)),(p,(e)))", "2u-DNF", "2u-DM"),
        ("up", "(p,(u,(p,(e)),(p,(e))))", "up-DNF", "up-DM"),
    ];
    let table: BTreeMap<&str, &str> = BENCHMARK_FORMULAS.into_iter().collect();
    for (name, original, dnf, dm) in pairs {
        let f = parse_any(original);
        for (kind, label) in [(FormKind::Dnf, dnf), (FormKind::Dm, dm)] {
            let got = to_form(&f, kind).map(|g| g.to_string()).unwrap_or_else(|e| e.to_string());
            r.check(got == table[label], format!("{name} -> {label}: {got}"));
        }
    }

    // Diagnostics for the rows above that fail.
    let implied = canonicalize(&parse_any(IMPLIED_ORIGINAL));
    let mut reproduced = Vec::new();
    for (kind, row) in WORKED_EXAMPLE {
        let repaired = row.replace(")))(p", "))),(p");
        let (Ok(g), Ok(e)) = (to_form(&implied, kind), parse_formula(&repaired, OperatorSet::ALL)) else {
            continue;
        };
        if [FormKind::Dnf, FormKind::DnfD, FormKind::DnfIu, FormKind::DnfIud, FormKind::DnfIuD].contains(&kind)
            && g == canonicalize(&e)
        {
            reproduced.push(kind.name());
        }
    }
    r.note(format!(
        "published DNF-family rows equal to the forms of {IMPLIED_ORIGINAL}: {}",
        reproduced.join(", ")
    ));
    let p_over_i = projection_over_intersection_differs();
    r.note(format!(
        "(p,(i,A,B)) and (i,(p,A),(p,B)) differ on a 4-entity graph: {p_over_i}"
    ));
}

/// `r` of `a ∩ b` versus `r a ∩ r b` where two different sources share a
/// target.
fn projection_over_intersection_differs() -> bool {
    let kg = KnowledgeGraph::from_ids(4, 1, [(1, 0, 3), (2, 0, 3)]).unwrap();
    let a: GroundedFormula = Tree::Entity(EntityId(1));
    let b: GroundedFormula = Tree::Entity(EntityId(2));
    let lhs = Tree::project(RelationId(0), Tree::and(a.clone(), b.clone()));
    let rhs = Tree::and(Tree::project(RelationId(0), a), Tree::project(RelationId(0), b));
    execute(&lhs, &kg).unwrap() != execute(&rhs, &kg).unwrap()
}

fn benchmark_originals() -> Vec<Formula> {
    let mut v: Vec<Formula> = BENCHMARK_FORMULAS
        .iter()
        .filter(|(name, _)| !name.ends_with("-DM") && !name.ends_with("-DNF"))
        .map(|(_, t)| canonicalize(&parse_any(t)))
        .collect();
    v.push(parse_any("(u,(p,(e)),(p,(e)))"));
    v.push(parse_any("(p,(u,(p,(e)),(p,(e))))"));
    v
}

fn type_census(r: &mut Report) {
    let types = enumerate_types(&GenerationConfig::default());
    let c = census(&types);
    let dev = c.deviations(&reference_census());
    r.note(format!("{} types, reference {}", c.total(), reference_census().total()));
    for line in c.to_string().lines() {
        r.note(format!("  {line}"));
    }
    if dev.is_empty() {
        r.check(true, "census matches the reference exactly");
        return;
    }
    r.note("census deviates; per-cell report and fallback suite follow");
    for d in &dev {
        r.note(format!("  {d}"));
    }
    let set: BTreeSet<String> = types.iter().map(|t| t.to_string()).collect();
    let missing: Vec<String> = benchmark_originals()
        .iter()
        .map(|f| f.to_string())
        .filter(|s| !set.contains(s))
        .collect();
    r.check(
        missing.is_empty(),
        format!("benchmark types present in Original form (missing: {missing:?})"),
    );
    r.check(set.len() == types.len(), format!("{} distinct canonical strings", set.len()));
    let invalid = types
        .iter()
        .filter(|t| !validate(*t, FormKind::Original.system(), true).is_empty())
        .count();
    r.check(invalid == 0, format!("{invalid} types fail grammar validation"));
}

fn random_kg(rng: &mut impl Rng, entities: u32, relations: u32, triples: usize) -> Vec<(u32, u32, u32)> {
    (0..triples)
        .map(|_| {
            (
                rng.random_range(0..entities),
                rng.random_range(0..relations),
                rng.random_range(0..entities),
            )
        })
        .collect()
}

/// Full graph over all triples, training graph without a tenth of them.
fn toy_graphs(seed: u64) -> (KnowledgeGraph, KnowledgeGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = random_kg(&mut rng, 50, 5, 500);
    let train: Vec<_> = all.iter().copied().filter(|_| rng.random_range(0..10) != 0).collect();
    (
        KnowledgeGraph::from_ids(50, 5, all).unwrap(),
        KnowledgeGraph::from_ids(50, 5, train).unwrap(),
    )
}

fn equivalence(r: &mut Report) {
    let types = enumerate_types(&GenerationConfig::default());
    let mut queries = 0;
    let mut disagreements = 0;
    let mut covered = BTreeSet::new();
    for seed in 1..=3 {
        let (full, train) = toy_graphs(seed);
        let cfg = SamplingConfig {
            rng_seed: seed,
            queries_per_type: 1,
            ..SamplingConfig::default()
        };
        let out = sample_instances(&types, &full, &train, &cfg).unwrap();
        for inst in &out.instances {
            let want = execute(inst.form(FormKind::Original), &full).unwrap();
            let same = FormKind::ALL.iter().all(|k| execute(inst.form(*k), &full).unwrap() == want);
            disagreements += usize::from(!same);
            covered.insert(inst.type_index);
        }
        queries += out.instances.len();
        r.note(format!("graph {seed}: {} queries", out.instances.len()));
    }
    r.check(queries >= 100, format!("{queries} grounded queries (need 100)"));
    r.check(covered.len() >= 50, format!("{} types covered (need 50)", covered.len()));
    r.check(disagreements == 0, format!("{disagreements} queries whose forms disagree"));
}

/// A query over every operator, with negation allowed anywhere.
fn random_query(rng: &mut ChaCha8Rng, n: u32, nr: u32, depth: u32) -> GroundedFormula {
    let choice = if depth == 0 { 0 } else { rng.random_range(0..9) };
    let sub = |rng: &mut ChaCha8Rng| random_query(rng, n, nr, depth - 1);
    match choice {
        0 => Tree::project(RelationId(rng.random_range(0..nr)), Tree::Entity(EntityId(rng.random_range(0..n)))),
        1 | 2 => Tree::project(RelationId(rng.random_range(0..nr)), sub(rng)),
        3 => Tree::and(sub(rng), sub(rng)),
        4 => Tree::or(sub(rng), sub(rng)),
        5 => Tree::negate(sub(rng)),
        6 => Tree::minus(sub(rng), sub(rng)),
        _ => {
            let op = [SetOp::MultiIntersection, SetOp::MultiUnion, SetOp::MultiDifference][rng.random_range(0..3)];
            let k = rng.random_range(2..=3);
            Tree::set(op, (0..k).map(|_| sub(rng)).collect())
        }
    }
}

/// Whether `y` satisfies `q`: projections are checked by trying every
/// entity as the existentially quantified source.
fn holds(q: &GroundedFormula, y: u32, triples: &BTreeSet<(u32, u32, u32)>, n: u32) -> bool {
    match q {
        Tree::Entity(e) => e.0 == y,
        Tree::Projection(r, c) => (0..n).any(|x| triples.contains(&(x, r.0, y)) && holds(c, x, triples, n)),
        Tree::Negation(c) => !holds(c, y, triples, n),
        Tree::Set(op, ops) => match op {
            SetOp::Intersection | SetOp::MultiIntersection => ops.iter().all(|c| holds(c, y, triples, n)),
            SetOp::Union | SetOp::MultiUnion => ops.iter().any(|c| holds(c, y, triples, n)),
            SetOp::Difference | SetOp::MultiDifference => {
                holds(&ops[0], y, triples, n) && !ops[1..].iter().any(|c| holds(c, y, triples, n))
            }
        },
    }
}

fn executor_oracle(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut agree = 0;
    let mut total = 0;
    let mut ops = BTreeSet::new();
    for _ in 0..20 {
        let n = rng.random_range(5..=30);
        let triples = random_kg(&mut rng, n, 4, 3 * n as usize);
        let kg = KnowledgeGraph::from_ids(n as usize, 4, triples.iter().copied()).unwrap();
        let set: BTreeSet<_> = triples.into_iter().collect();
        for _ in 0..50 {
            let q = random_query(&mut rng, n, 4, 3);
            ops.extend(q.operators().iter().map(|t| t.symbol()));
            let got = execute(&q, &kg).unwrap();
            let want = EntitySet::from_ids(n as usize, (0..n).filter(|&y| holds(&q, y, &set, n)).map(EntityId));
            agree += usize::from(got == want);
            total += 1;
        }
    }
    r.check(total == 1000, format!("{total} random queries on graphs with at most 30 entities"));
    r.check(agree == total, format!("{agree} of {total} answer sets equal the enumeration oracle"));
    r.note(format!("operators exercised: {}", ops.into_iter().collect::<String>()));
}

fn sampled_dataset(seed: u64, per_type: usize, types: &[Formula]) -> Dataset {
    let (full, train) = toy_graphs(seed);
    let cfg = SamplingConfig {
        rng_seed: seed,
        queries_per_type: per_type,
        ..SamplingConfig::default()
    };
    let out = sample_instances(types, &full, &train, &cfg).unwrap();
    Dataset {
        manifest: Manifest::new(&full, &train, cfg.clone(), types.len()),
        types: type_rows(types, cfg.node_cap).unwrap(),
        instances: out.instances,
    }
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn contract_holds(inst: &QueryInstance) -> bool {
    let a = &inst.answers;
    a.full.contains(inst.seed) && (1..=100).contains(&a.hard.len()) && a.easy.is_disjoint(&a.hard)
}

fn sampling(r: &mut Report) {
    let types = enumerate_types(&GenerationConfig::default());
    let mut total = 0;
    let mut broken = 0;
    for seed in [11, 12] {
        let ds = sampled_dataset(seed, 10, &types);
        total += ds.instances.len();
        broken += ds.instances.iter().filter(|i| !contract_holds(i)).count();
        if seed == 11 {
            let again = sampled_dataset(seed, 10, &types);
            let tmp = tempfile::tempdir().unwrap();
            let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
            write_dataset(&a, &ds).unwrap();
            write_dataset(&b, &again).unwrap();
            let (fa, fb) = (files_under(&a), files_under(&b));
            let bytes: usize = fa.values().map(Vec::len).sum();
            r.check(fa == fb, format!("two seeded runs give identical directories ({} files, {bytes} bytes)", fa.len()));
        }
    }
    r.check(total > 0, format!("{total} instances sampled"));
    r.check(broken == 0, format!("{broken} instances violate seed membership, hard size or disjointness"));
}

/// Filtered ranks by direct counting: a hard answer is preceded by every
/// non-answer that is listed earlier or, for scores, scores at least as high.
fn reference_ranks(order_key: &[f64], full: &BTreeSet<usize>, hard: &BTreeSet<usize>) -> Vec<usize> {
    hard.iter()
        .map(|&h| 1 + (0..order_key.len()).filter(|x| !full.contains(x) && order_key[*x] >= order_key[h]).count())
        .collect()
}

fn reference_ra(order_key: &[f64], easy: &BTreeSet<usize>, hard: &BTreeSet<usize>) -> f64 {
    let mut pool: Vec<usize> = (0..order_key.len()).filter(|x| !easy.contains(x)).collect();
    // best first; among equal keys, non-answers first
    pool.sort_by(|a, b| {
        order_key[*b]
            .partial_cmp(&order_key[*a])
            .unwrap()
            .then(hard.contains(a).cmp(&hard.contains(b)))
    });
    let n = hard.len();
    pool[..n].iter().filter(|x| hard.contains(x)).count() as f64 / n as f64
}

fn metric_oracle(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.random_range(3..=60);
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng);
        let nfull = rng.random_range(1..=n.min(12));
        let nhard = rng.random_range(1..=nfull);
        let hard: BTreeSet<usize> = ids[..nhard].iter().copied().collect();
        let easy: BTreeSet<usize> = ids[nhard..nfull].iter().copied().collect();
        let full: BTreeSet<usize> = hard.union(&easy).copied().collect();
        let answers = AnswerSets::from_parts(
            EntitySet::from_ids(n, easy.iter().map(|&x| EntityId(x as u32))),
            EntitySet::from_ids(n, hard.iter().map(|&x| EntityId(x as u32))),
        );
        let (pred, key) = if case % 2 == 0 {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut key = vec![0.0; n];
            for (pos, &e) in order.iter().enumerate() {
                key[e] = -(pos as f64);
            }
            (Prediction::Ranking(order.iter().map(|&e| EntityId(e as u32)).collect()), key)
        } else {
            // few distinct values, so ties are common
            let key: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64 * 0.5).collect();
            let scores = key.iter().enumerate().map(|(e, s)| (EntityId(e as u32), *s)).collect();
            (Prediction::Scores(scores), key)
        };
        let ranks = reference_ranks(&key, &full, &hard);
        let m = ranks.len() as f64;
        let want_mrr = ranks.iter().map(|&k| 1.0 / k as f64).sum::<f64>() / m;
        let hit = |k: usize| ranks.iter().filter(|&&x| x <= k).count() as f64 / m;
        let p = TiePolicy::Pessimistic;
        let diffs = [
            mrr(&pred, &answers, p).unwrap() - want_mrr,
            hit_at_k(&pred, &answers, 1, p).unwrap() - hit(1),
            hit_at_k(&pred, &answers, 3, p).unwrap() - hit(3),
            hit_at_k(&pred, &answers, 10, p).unwrap() - hit(10),
            ra_oracle(&pred, &answers, RaPool::ExcludeEasy, p).unwrap() - reference_ra(&key, &easy, &hard),
        ];
        worst = diffs.iter().fold(worst, |w, d| w.max(d.abs()));
    }
    r.check(
        worst <= METRIC_TOL,
        format!("1000 instances, largest deviation from the references {worst:.1e} (tolerance {METRIC_TOL:.0e})"),
    );

    let types = enumerate_types(&GenerationConfig::default());
    let ds = sampled_dataset(21, 2, &types);
    let preds = PredictionSet {
        by_form: FormKind::ALL
            .iter()
            .map(|k| {
                let list = ds
                    .instances
                    .iter()
                    .map(|i| oracle_prediction(&i.answers))
                    .collect();
                (*k, list)
            })
            .collect(),
    };
    let report = evaluate(&ds, &preds, &MetricOptions::default()).unwrap();
    let ones = |m: &Metrics| m.values().iter().all(|v| *v == 1.0);
    let mut checked = 0;
    let mut perfect = 0;
    for f in &report.forms {
        let mut all: Vec<&Metrics> = vec![&f.overall];
        all.extend(f.epfo.iter());
        all.extend(f.negation.iter());
        all.extend(f.groups.iter().map(|g| &g.metrics));
        all.extend(f.types.iter().map(|t| &t.metrics));
        all.extend(f.queries.iter());
        checked += all.len();
        perfect += all.iter().filter(|m| ones(m)).count();
    }
    r.check(
        checked == perfect && report.forms.len() == 9,
        format!(
            "oracle predictor: {perfect} of {checked} aggregates equal 1.0 across {} forms and {} queries",
            report.forms.len(),
            ds.instances.len()
        ),
    );
}

fn main() -> ExitCode {
    let results = [
        criterion(1, "grammar round-trip of the benchmark formulas", LIMIT_GRAMMAR, grammar),
        criterion(2, "normal forms of the worked example and of 2u/up", LIMIT_FORMS, forms),
        criterion(3, "type census", LIMIT_CENSUS, type_census),
        criterion(4, "semantic equivalence of all forms", LIMIT_EQUIVALENCE, equivalence),
        criterion(5, "executor against existential enumeration", LIMIT_EXECUTOR, executor_oracle),
        criterion(6, "sampling contract and reproducibility", LIMIT_SAMPLING, sampling),
        criterion(7, "metrics against brute-force references", LIMIT_METRICS, metric_oracle),
    ];
    println!(
        "criterion 8 SKIP: trained-model scores on the full benchmarks need neural models and are out of scope"
    );
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
