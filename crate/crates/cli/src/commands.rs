use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use turnkit::compare::{compare_corpora, render_duration_overlay};
use turnkit::model::CorpusTable;
use turnkit::parsers::{detect_format, parse_bytes, source_id_for, ParsedDocument, DETECT_HEAD_LEN};
use turnkit::qc::{build_report, render_report_svg, verify_sources};
use turnkit::table_io::{escape_field, read_table, write_table};
use turnkit::unify::{unify_detailed, Unified};
use turnkit::Error;
use walkdir::WalkDir;

use crate::config::{load_tier_map, RunConfig};
use crate::{AssessArgs, CompareArgs, InspectArgs, MineArgs, ParseArgs, EXIT_FATAL, EXIT_OK, EXIT_PARTIAL};

const TRANSCRIPT_EXTENSIONS: [&str; 4] = ["eaf", "cha", "textgrid", "exb"];

/// Files given directly are kept as-is; directories are searched for
/// transcript extensions, in path order.
fn expand_inputs(inputs: &[PathBuf]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            for e in WalkDir::new(p).sort_by_file_name().into_iter().filter_map(|e| e.ok()) {
                let ext = e.path().extension().map(|x| x.to_string_lossy().to_lowercase());
                if e.file_type().is_file() && ext.is_some_and(|x| TRANSCRIPT_EXTENSIONS.contains(&x.as_str())) {
                    out.push(e.into_path());
                }
            }
        } else {
            out.push(p.clone());
        }
    }
    out
}

fn read_document(path: &Path, source_id: &str) -> turnkit::Result<ParsedDocument> {
    let bytes = fs::read(path)?;
    let format = detect_format(path, &bytes[..bytes.len().min(DETECT_HEAD_LEN)])?;
    parse_bytes(&bytes, format, source_id)
}

/// File stems, falling back to the file name and then the full path where
/// stems collide, so uids stay unique across inputs.
fn source_ids(files: &[PathBuf]) -> Vec<String> {
    let count = |ids: &[String], id: &String| ids.iter().filter(|x| *x == id).count();
    let stems: Vec<String> = files.iter().map(|f| source_id_for(f)).collect();
    let names: Vec<String> = files
        .iter()
        .zip(&stems)
        .map(|(f, s)| match f.file_name() {
            Some(n) if count(&stems, s) > 1 => n.to_string_lossy().into_owned(),
            _ => s.clone(),
        })
        .collect();
    files
        .iter()
        .zip(&names)
        .map(|(f, n)| if count(&names, n) > 1 { f.display().to_string() } else { n.clone() })
        .collect()
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialise"));
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn load_table(path: &Path) -> Result<CorpusTable> {
    read_table(path).with_context(|| format!("reading table {}", path.display()))
}

fn output_dir(out: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = out.or_else(|| cfg.io.out.clone()).ok_or_else(|| anyhow!("--out is required"))?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn document_warnings(path: &Path, doc: &ParsedDocument, unified: &Unified) {
    let name = path.display();
    for (key, what) in [
        ("untimed_utterances", "untimed utterances"),
        ("skipped_point_tiers", "point tiers skipped"),
        ("orphan_dependent_lines", "dependent lines without a main line"),
    ] {
        if let Some(n) = doc.metadata.get(key).filter(|n| n.as_str() != "0") {
            eprintln!("warning: {name}: {n} {what}");
        }
    }
    if !unified.unmatched.is_empty() {
        eprintln!("warning: {name}: {} annotations matched no turn", unified.unmatched.len());
    }
}

fn unmatched_tsv(rows: &[&Unified]) -> String {
    let mut out = String::from("source_id\ttier_id\trole\tbegin\tend\ttext\n");
    for u in rows.iter().flat_map(|u| &u.unmatched) {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            escape_field(&u.source_id),
            escape_field(&u.tier_id),
            escape_field(&u.role.to_string()),
            u.begin_ms,
            u.end_ms,
            escape_field(&u.text)
        ));
    }
    out
}

pub fn parse(a: ParseArgs) -> Result<i32> {
    let mut cfg = RunConfig::load_or_default(a.common.config.as_deref())?;
    if let Some(p) = &a.tier_map {
        cfg.tier_map = load_tier_map(p)?;
    }
    if !a.inputs.is_empty() {
        cfg.io.inputs = a.inputs.clone();
    }
    if a.corpus_id.is_some() {
        cfg.io.corpus_id = a.corpus_id.clone();
    }
    if a.language.is_some() {
        cfg.io.language = a.language.clone();
    }
    let out = a.out.clone().or_else(|| cfg.io.out.clone()).ok_or_else(|| anyhow!("--out is required"))?;
    cfg.validate()?;

    let files = expand_inputs(&cfg.io.inputs);
    if files.is_empty() {
        bail!("no input files");
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs.max(1)).build()?;
    let ids = source_ids(&files);
    let results: Vec<turnkit::Result<(ParsedDocument, Unified)>> = pool.install(|| {
        files
            .par_iter()
            .zip(&ids)
            .map(|(f, id)| {
                let doc = read_document(f, id)?;
                let unified = unify_detailed(&doc, &cfg.tier_map, &cfg.tag_policy)?;
                Ok((doc, unified))
            })
            .collect()
    });

    let mut parsed = Vec::new();
    let mut failed = Vec::new();
    for (path, r) in files.iter().zip(results) {
        match r {
            Ok((doc, unified)) => {
                document_warnings(path, &doc, &unified);
                parsed.push(unified);
            }
            Err(e) if a.keep_going => {
                eprintln!("warning: skipping {}: {e}", path.display());
                failed.push(json!({ "path": path.display().to_string(), "error": e.to_string() }));
            }
            Err(e) => return Err(anyhow::Error::new(e).context(format!("parsing {}", path.display()))),
        }
    }
    if parsed.is_empty() {
        bail!("no input could be parsed");
    }

    let corpus_id = cfg
        .io
        .corpus_id
        .clone()
        .unwrap_or_else(|| out.file_stem().map_or_else(|| "corpus".into(), |s| s.to_string_lossy().into_owned()));
    let language = cfg.io.language.clone().unwrap_or_else(|| {
        let langs: BTreeSet<&str> = parsed.iter().map(|u| u.table.language.as_str()).filter(|l| !l.is_empty()).collect();
        if langs.len() == 1 { langs.into_iter().next().unwrap().to_string() } else { String::new() }
    });
    let refs: Vec<&Unified> = parsed.iter().collect();
    let sidecar = unmatched_tsv(&refs);
    let n_unmatched: usize = parsed.iter().map(|u| u.unmatched.len()).sum();
    let table = CorpusTable::concat(corpus_id, language, parsed.into_iter().map(|u| u.table).collect())?;

    write_table(&table, &out).with_context(|| format!("writing {}", out.display()))?;
    let mut sidecar_path = out.clone().into_os_string();
    sidecar_path.push(".unmatched.tsv");
    let sidecar_path = PathBuf::from(sidecar_path);
    if n_unmatched > 0 {
        write_text(&sidecar_path, &sidecar)?;
    } else if sidecar_path.exists() {
        fs::remove_file(&sidecar_path)?;
    }
    eprintln!("wrote {} turns from {} files to {}", table.len(), files.len() - failed.len(), out.display());

    if a.common.json {
        print_json(&json!({
            "command": "parse",
            "out": out.display().to_string(),
            "files": files.len(),
            "turns": table.len(),
            "unmatched": n_unmatched,
            "failed": failed,
        }));
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

pub fn assess(a: AssessArgs) -> Result<i32> {
    let mut cfg = RunConfig::load_or_default(a.common.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.qc.seed = s;
    }
    if let Some(n) = a.samples {
        cfg.qc.sample_count = n;
    }
    if a.media_dir.is_some() {
        cfg.io.media_dir = a.media_dir.clone();
    }
    cfg.io.inputs = vec![a.table.clone()];
    cfg.validate()?;

    let table = load_table(&a.table)?;
    let media = match &cfg.io.media_dir {
        Some(dir) => match verify_sources(&table, dir) {
            Ok(m) => Some(m),
            Err(e @ Error::MediaDirUnreadable { .. }) => {
                eprintln!("warning: {e}; all sources reported as not found");
                None
            }
            Err(e) => return Err(e.into()),
        },
        None => None,
    };
    let report = build_report(&table, media.as_ref(), &cfg.qc)?;
    let dir = output_dir(a.out.clone(), &cfg)?;
    cfg.io.out = Some(dir.clone());

    let report_path = dir.join("report.json");
    write_json(&report_path, &report)?;
    let panels = render_report_svg(&report);
    let mut written = vec![report_path.display().to_string()];
    for (name, doc) in panels.files() {
        let p = dir.join(name);
        write_text(&p, doc)?;
        written.push(p.display().to_string());
    }
    let cfg_path = dir.join("run_config.toml");
    write_text(&cfg_path, &cfg.to_toml()?)?;
    written.push(cfg_path.display().to_string());

    let missing = report.source_check.values().filter(|c| !c.found).count();
    if cfg.io.media_dir.is_some() && missing > 0 {
        eprintln!("warning: {missing} of {} sources have no media file", report.source_check.len());
    }
    eprintln!("assessed {} turns; report in {}", report.n_turns, dir.display());
    if a.common.json {
        print_json(&json!({ "command": "assess", "outputs": written }));
    }
    Ok(EXIT_OK)
}

pub fn mine(a: MineArgs) -> Result<i32> {
    let mut cfg = RunConfig::load_or_default(a.common.config.as_deref())?;
    if let Some(t) = a.threshold {
        cfg.mining.similarity_threshold = t;
    }
    if let Some(r) = a.min_count {
        cfg.mining.recurrent_min_count = r;
    }
    if let Some(u) = a.unique_max {
        cfg.mining.unique_max_count = u;
    }
    if let Some(n) = a.top {
        cfg.top_n = n;
    }
    cfg.io.inputs = vec![a.table.clone()];
    cfg.validate()?;

    let table = load_table(&a.table)?;
    let result = turnkit::mining::mine(&table, &cfg.mining, cfg.top_n)?;
    let dir = output_dir(a.out.clone(), &cfg)?;
    cfg.io.out = Some(dir.clone());

    write_json(&dir.join("candidates.json"), &result)?;
    let mut tsv = String::from("format\tcount\tcontinuer_contexts\trepair_contexts\tlabel\n");
    for s in &result.candidates {
        let label = serde_json::to_value(s.label)?;
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            escape_field(&s.format.normalized_form),
            s.format.count,
            s.continuer_contexts,
            s.repair_contexts,
            label.as_str().unwrap_or_default()
        ));
    }
    write_text(&dir.join("candidates.tsv"), &tsv)?;
    write_text(&dir.join("run_config.toml"), &cfg.to_toml()?)?;

    eprintln!(
        "{} recurrent formats; continuers: {}; repair initiators: {}",
        result.candidates.len(),
        result.continuers.join(", "),
        result.repair_initiators.join(", ")
    );
    if a.common.json {
        print_json(&json!({
            "command": "mine",
            "out": dir.display().to_string(),
            "continuers": result.continuers,
            "repair_initiators": result.repair_initiators,
        }));
    }
    Ok(EXIT_OK)
}

pub fn compare(a: CompareArgs) -> Result<i32> {
    let mut cfg = RunConfig::load_or_default(a.common.config.as_deref())?;
    if let Some(b) = a.bin {
        cfg.compare.bin_width_ms = b;
    }
    if let Some(m) = a.min_count {
        cfg.compare.min_count = m;
    }
    if let Some(k) = a.top_k {
        cfg.compare.top_k = k;
    }
    cfg.io.inputs = vec![a.table_a.clone(), a.table_b.clone()];
    cfg.validate()?;

    let ta = load_table(&a.table_a)?;
    let tb = load_table(&a.table_b)?;
    let cmp = compare_corpora(&ta, &tb, &cfg.compare)?;
    let dir = output_dir(a.out.clone(), &cfg)?;
    cfg.io.out = Some(dir.clone());

    write_json(&dir.join("comparison.json"), &cmp)?;
    let mut tsv = String::from("token\tcount_a\tcount_b\tscore\n");
    for t in &cmp.associations {
        tsv.push_str(&format!("{}\t{}\t{}\t{}\n", escape_field(&t.token), t.count_a, t.count_b, t.score));
    }
    write_text(&dir.join("tokens.tsv"), &tsv)?;
    write_text(&dir.join("durations.svg"), &render_duration_overlay(&cmp))?;
    write_text(&dir.join("run_config.toml"), &cfg.to_toml()?)?;

    eprintln!(
        "modal durations {} ms vs {} ms (ratio {:.2}), histogram overlap {:.3}",
        cmp.duration_a.modal_ms, cmp.duration_b.modal_ms, cmp.modal_ratio, cmp.overlap_coefficient
    );
    if a.common.json {
        print_json(&json!({
            "command": "compare",
            "out": dir.display().to_string(),
            "modal_ratio": cmp.modal_ratio,
            "overlap_coefficient": cmp.overlap_coefficient,
        }));
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct TierSummary<'a> {
    tier_id: &'a str,
    participant: &'a str,
    category: &'a str,
    parent_tier: Option<&'a str>,
    annotations: usize,
}

pub fn inspect(a: InspectArgs) -> Result<i32> {
    let files = expand_inputs(&a.inputs);
    if files.is_empty() {
        bail!("no input files");
    }
    let mut listing = Vec::new();
    let mut failures = 0;
    for path in &files {
        let doc = match read_document(path, &source_id_for(path)) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                failures += 1;
                continue;
            }
        };
        let tiers: Vec<TierSummary> = doc
            .tiers
            .iter()
            .map(|t| TierSummary {
                tier_id: &t.tier_id,
                participant: &t.participant,
                category: &t.category,
                parent_tier: t.parent_tier.as_deref(),
                annotations: t.annotations.len(),
            })
            .collect();
        if a.common.json {
            listing.push(json!({
                "path": path.display().to_string(),
                "format": doc.format,
                "source_id": doc.source_id,
                "media_refs": doc.media_refs,
                "tiers": tiers,
            }));
        } else {
            println!("{} ({}, {} tiers)", path.display(), doc.format, tiers.len());
            for m in &doc.media_refs {
                println!("  media: {m}");
            }
            for t in &tiers {
                let parent = t.parent_tier.map(|p| format!(" <- {p}")).unwrap_or_default();
                println!(
                    "  {:<24} participant={:<10} category={:<16} annotations={}{}",
                    t.tier_id, t.participant, t.category, t.annotations, parent
                );
            }
        }
    }
    if a.common.json {
        print_json(&serde_json::Value::Array(listing));
    }
    Ok(match failures {
        0 => EXIT_OK,
        n if n == files.len() => EXIT_FATAL,
        _ => EXIT_PARTIAL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colliding_stems_get_longer_ids() {
        let files: Vec<PathBuf> = ["a/x.eaf", "a/x.cha", "a/y.eaf", "b/y.eaf", "c/z.cha"].iter().map(PathBuf::from).collect();
        assert_eq!(source_ids(&files), ["x.eaf", "x.cha", "a/y.eaf", "b/y.eaf", "z"]);
    }
}
