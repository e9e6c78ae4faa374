use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use efo1::entity_set::EntitySet;
use efo1::executor::{answer_sets, AnswerSets};
use efo1::formula::{canonicalize, parse_formula, validate, Formula, OperatorSet};
use efo1::grounder::{sample_instances, verify_instance};
use efo1::kg::{load_triples, KnowledgeGraph};
use efo1::metrics::{evaluate_with, oracle_prediction, read_predictions, PredictionSet};
use efo1::rewrite::{to_form_capped, FormKind};
use efo1::serialize::{check_fingerprints, read_dataset, type_rows, write_dataset, Dataset, Manifest};
use efo1::typegen::{census, enumerate_types, reference_census, GenerationConfig};
use log::{error, info, warn};
use rayon::prelude::*;

use crate::config::PipelineConfig;

fn refuse_existing(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        bail!("{} already exists; pass --force to overwrite", path.display());
    }
    Ok(())
}

/// Prepares `dir` for a dataset. With `force`, stale per-type files of an
/// earlier dataset are removed.
fn claim_dataset_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let nonempty = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .next()
            .is_some();
        if nonempty && !force {
            bail!("{} is not empty; pass --force to overwrite", dir.display());
        }
        let grounded = dir.join("grounded");
        if force && grounded.is_dir() {
            fs::remove_dir_all(&grounded).with_context(|| format!("removing {}", grounded.display()))?;
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_graphs(cfg: &PipelineConfig) -> Result<(KnowledgeGraph, KnowledgeGraph)> {
    let dir = cfg.kg_dir()?;
    let paths = |names: &[String]| -> Vec<PathBuf> { names.iter().map(|n| dir.join(n)).collect() };
    let train = load_triples(&paths(&cfg.graph.train), None)?;
    let full = load_triples(&paths(&cfg.graph.full), Some(train.vocab()))?;
    info!(
        "graphs loaded: full {} triples, train {} triples, {} entities, {} relations",
        full.num_triples(),
        train.num_triples(),
        full.num_entities(),
        full.num_relations()
    );
    Ok((full, train))
}

/// Reads a type list: one Original-form formula per line, `#` comments.
fn read_type_file(path: &Path) -> Result<Vec<Formula>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let at = || format!("{}:{}", path.display(), n + 1);
        let f = parse_formula(t, FormKind::Original.system()).with_context(at)?;
        if let Some(v) = validate(&f, FormKind::Original.system(), true).first() {
            bail!("{}: {v}", at());
        }
        let f = canonicalize(&f);
        if !seen.insert(f.to_string()) {
            bail!("{}: duplicate type {f}", at());
        }
        out.push(f);
    }
    Ok(out)
}

pub fn enumerate(cfg: &PipelineConfig, out: &Path, force: bool) -> Result<bool> {
    refuse_existing(out, force)?;
    let types = enumerate_types(&cfg.generation);
    let mut text = String::new();
    for t in &types {
        let _ = writeln!(text, "{t}");
    }
    write_file(out, &text)?;
    let c = census(&types);
    print!("{c}");
    println!("{} types", c.total());
    if cfg.generation == GenerationConfig::default() {
        let dev = c.deviations(&reference_census());
        if dev.is_empty() {
            println!("census matches the reference counts");
        } else {
            println!("census deviates from the reference counts ({} expected):", reference_census().total());
            for d in dev {
                println!("  {d}");
            }
        }
    }
    Ok(true)
}

pub fn normalize(cfg: &PipelineConfig, input: &Path, force: bool) -> Result<bool> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let dir = cfg.out_dir()?;
    let kinds = &cfg.forms.kinds;
    if kinds.is_empty() {
        bail!("no forms selected");
    }
    let paths: Vec<PathBuf> = kinds.iter().map(|k| dir.join(format!("{}.txt", k.name()))).collect();
    for p in &paths {
        refuse_existing(p, force)?;
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut outs = vec![String::new(); kinds.len()];
    let mut failures = 0usize;
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        let parsed = if t.is_empty() {
            None
        } else {
            match parse_formula(t, OperatorSet::ALL) {
                Ok(f) => Some(f),
                Err(e) => {
                    error!("{}:{}: {e}", input.display(), n + 1);
                    failures += 1;
                    None
                }
            }
        };
        for (k, o) in kinds.iter().zip(&mut outs) {
            if let Some(f) = &parsed {
                match to_form_capped(f, *k, cfg.sampling.node_cap) {
                    Ok(g) => o.push_str(&g.to_string()),
                    Err(e) => {
                        error!("{}:{}: {k}: {e}", input.display(), n + 1);
                        failures += 1;
                    }
                }
            }
            o.push('\n');
        }
    }
    for (p, o) in paths.iter().zip(&outs) {
        write_file(p, o)?;
    }
    info!("wrote {} form files to {}", paths.len(), dir.display());
    if failures > 0 {
        warn!("{failures} rewrites failed; their output lines are empty");
    }
    Ok(failures == 0)
}

pub fn sample(cfg: &PipelineConfig, types_file: Option<&Path>, force: bool) -> Result<bool> {
    let out = cfg.out_dir()?;
    let (full, train) = load_graphs(cfg)?;
    let types = match types_file {
        Some(p) => read_type_file(p)?,
        None => enumerate_types(&cfg.generation),
    };
    if types.is_empty() {
        bail!("no query types to sample");
    }
    info!("sampling {} types", types.len());
    let rows = type_rows(&types, cfg.sampling.node_cap)?;
    let outcome = sample_instances(&types, &full, &train, &cfg.sampling)?;

    let bad: Option<(usize, String)> = outcome
        .instances
        .par_iter()
        .enumerate()
        .find_map_first(|(i, inst)| verify_instance(inst, &full, &train, &cfg.sampling).err().map(|e| (i, e)));
    if let Some((i, e)) = bad {
        bail!("instance {i} failed verification: {e}");
    }

    claim_dataset_dir(out, force)?;
    let mut manifest = Manifest::new(&full, &train, cfg.sampling.clone(), types.len());
    manifest.config_sha256 = Some(cfg.provenance_sha256());
    let ds = Dataset {
        manifest,
        types: rows,
        instances: outcome.instances,
    };
    write_dataset(out, &ds)?;
    write_file(&out.join("config.toml"), &cfg.provenance_toml())?;
    full.vocab().entities.write(&out.join("entities.txt"))?;
    full.vocab().relations.write(&out.join("relations.txt"))?;

    let mut report = String::from("formula_id\tformula\taccepted\trequested\n");
    for s in &outcome.shortfalls {
        let row = &ds.types[s.type_index];
        let _ = writeln!(report, "{}\t{}\t{}\t{}", row.id, row.form(FormKind::Original), s.accepted, s.requested);
        warn!("{}: {} of {} instances", row.id, s.accepted, s.requested);
    }
    write_file(&out.join("shortfalls.tsv"), &report)?;

    println!(
        "{} instances over {} types written to {}",
        ds.instances.len(),
        ds.types.len(),
        out.display()
    );
    println!(
        "{} types below {} instances (see shortfalls.tsv)",
        outcome.shortfalls.len(),
        cfg.sampling.queries_per_type
    );
    Ok(true)
}

fn id_list(s: &EntitySet) -> String {
    s.iter().map(|e| e.0.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn answers(cfg: &PipelineConfig, dataset: &Path, out: Option<&Path>, force: bool) -> Result<bool> {
    if let Some(p) = out {
        refuse_existing(p, force)?;
    }
    let ds = read_dataset(dataset)?;
    let (full, train) = load_graphs(cfg)?;
    check_fingerprints(&ds.manifest, &full, &train)?;

    let recomputed: Vec<Vec<AnswerSets>> = ds
        .instances
        .par_iter()
        .map(|inst| inst.forms.iter().map(|q| answer_sets(q, &full, &train)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let mut mismatches = 0usize;
    let mut table = String::from("query\tformula_id\tseed\teasy\thard\n");
    for (i, (inst, got)) in ds.instances.iter().zip(&recomputed).enumerate() {
        for (k, a) in FormKind::ALL.iter().zip(got) {
            if *a != inst.answers {
                error!("query {i}: {k} answers differ from the stored answers");
                mismatches += 1;
            }
        }
        let a = &got[0];
        let _ = writeln!(
            table,
            "{i}\t{}\t{}\t{}\t{}",
            ds.types[inst.type_index].id,
            inst.seed,
            id_list(&a.easy),
            id_list(&a.hard)
        );
    }
    if let Some(p) = out {
        write_file(p, &table)?;
    }
    println!(
        "{} queries, {} forms each, {} mismatches",
        ds.instances.len(),
        FormKind::ALL.len(),
        mismatches
    );
    Ok(mismatches == 0)
}

pub fn evaluate(
    cfg: &PipelineConfig,
    dataset: &Path,
    predictions: Option<&Path>,
    oracle: bool,
    force: bool,
) -> Result<bool> {
    let dir = cfg.out_dir()?;
    let (json_path, table_path) = (dir.join("report.json"), dir.join("report.txt"));
    refuse_existing(&json_path, force)?;
    refuse_existing(&table_path, force)?;
    let ds = read_dataset(dataset)?;

    // answers per query, indexed like FormKind::ALL
    let answers: Vec<Vec<AnswerSets>> = if cfg.kg_dir.is_some() {
        let (full, train) = load_graphs(cfg)?;
        check_fingerprints(&ds.manifest, &full, &train)?;
        ds.instances
            .par_iter()
            .map(|inst| inst.forms.iter().map(|q| answer_sets(q, &full, &train)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?
    } else {
        ds.instances
            .iter()
            .map(|inst| vec![inst.answers.clone(); FormKind::ALL.len()])
            .collect()
    };

    let preds = if oracle {
        PredictionSet {
            by_form: FormKind::ALL
                .iter()
                .enumerate()
                .map(|(j, k)| (*k, answers.iter().map(|a| oracle_prediction(&a[j])).collect()))
                .collect(),
        }
    } else {
        let p = predictions.expect("clap requires predictions without --oracle");
        read_predictions(p, ds.instances.len()).with_context(|| format!("reading {}", p.display()))?
    };
    let truth: Vec<&AnswerSets> = answers.iter().map(|a| &a[0]).collect();
    let report = evaluate_with(&ds, &truth, &preds, &cfg.metrics)?;

    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_file(&json_path, &json)?;
    let table = report.to_table();
    write_file(&table_path, &table)?;
    print!("{table}");
    Ok(true)
}
