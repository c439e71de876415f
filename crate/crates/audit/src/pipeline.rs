//! The subcommands. Each reads what it needs through the config, writes its
//! own files into the output directory and reports what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bias_audit_core::cbi::{aggregate_family, f1_score, VariantCbi};
use bias_audit_core::fidelity::{fid, gaussian_stats, kid_subsets, mmd2_unbiased, precision_recall, KidEstimate, KidParams};
use bias_audit_core::model::{validate_join, BiasFamily, BiasTag, ClassLabel, ImageRecord, PredictionSet, VariantId};
use bias_audit_core::stats::{cohen_kappa, phi_correlation, pps, prevalence, Artifact, GROUP_ORDER};
use rayon::prelude::*;

use crate::batch::{batch_insert, write_biased_manifest, BiasedSetManifest, BIASED_MANIFEST_FILE};
use crate::config::RunConfig;
use crate::embedding::load_embeddings;
use crate::error::{Error, Result};
use crate::masks::load_variants;
use crate::predictions::load_predictions;
use crate::report::{self, CbiRow, FidelityReport, PpsRow, Provenance};
use crate::tables::{load_annotations, load_manifest};

/// Whether a command finished cleanly or had to leave inputs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    CompletedWithSkips,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: Status,
    pub written: Vec<PathBuf>,
    pub notices: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { status: Status::Complete, written: Vec::new(), notices: Vec::new() }
    }

    fn notice(&mut self, msg: String) {
        log::warn!("{msg}");
        self.notices.push(msg);
    }
}

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance { config_sha256: cfg.digest(), seed: cfg.seed }
}

fn existing(cfg: &RunConfig, value: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    let p = cfg.require(value, key)?;
    if !p.exists() {
        return Err(Error::Config(format!("`{key}` points to {} which does not exist", p.display())));
    }
    Ok(p)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out_path();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write_file(outcome: &mut Outcome, path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    outcome.written.push(path);
    Ok(())
}

/// Image records from the manifest, or from the annotation file when no
/// manifest is configured.
pub fn image_records(cfg: &RunConfig) -> Result<Vec<ImageRecord>> {
    if cfg.manifest.is_some() {
        load_manifest(&existing(cfg, &cfg.manifest, "manifest")?)
    } else if cfg.annotations.is_some() {
        Ok(load_annotations(&existing(cfg, &cfg.annotations, "annotations")?)?.records)
    } else {
        Err(Error::Config("neither `manifest` nor `annotations` is set".into()))
    }
}

fn image_root(cfg: &RunConfig) -> Result<PathBuf> {
    match &cfg.images_dir {
        Some(_) => existing(cfg, &cfg.images_dir, "images_dir"),
        None => Ok(cfg.base_dir.clone()),
    }
}

pub fn cmd_insert(cfg: &RunConfig) -> Result<(Outcome, BiasedSetManifest)> {
    let masks = existing(cfg, &cfg.masks_dir, "masks_dir")?;
    let records = image_records(cfg)?;
    let root = image_root(cfg)?;
    let variants = load_variants(&masks, cfg.mask_threshold)?;
    let out = out_dir(cfg)?;
    let manifest = batch_insert(&records, &root, &variants, &out, cfg.feather_radius)?;
    let mut outcome = Outcome::new();
    let path = out.join(BIASED_MANIFEST_FILE);
    write_biased_manifest(&path, &manifest)?;
    outcome.written.push(path);
    let skipped = manifest.skipped();
    if skipped > 0 {
        outcome.status = Status::CompletedWithSkips;
        outcome.notice(format!("{skipped} of {} insertions skipped, see {BIASED_MANIFEST_FILE}", manifest.rows.len()));
    }
    log::info!("inserted {} variants into {} images", variants.len(), records.len());
    Ok((outcome, manifest))
}

/// Baseline at `dir/baseline.jsonl` and every `dir/<family>/<variant_id>.jsonl`.
pub fn load_prediction_tree(dir: &Path, threshold: f64) -> Result<(PredictionSet, Vec<PredictionSet>)> {
    let base_path = dir.join("baseline.jsonl");
    if !base_path.exists() {
        return Err(Error::Validation(format!("missing baseline predictions {}", base_path.display())));
    }
    let baseline = load_predictions(&base_path, threshold)?;
    if let Some(tag) = baseline.bias_tag() {
        return Err(Error::format(&base_path, format!("baseline carries bias tag {}/{}", tag.family, tag.variant)));
    }
    let mut biased = Vec::new();
    for &family in BiasFamily::ALL {
        for variant in VariantId::all() {
            let path = dir.join(family.as_str()).join(format!("{variant}.jsonl"));
            if !path.exists() {
                continue;
            }
            let expected = BiasTag { family, variant };
            let set = load_predictions(&path, threshold)?;
            let set = match set.bias_tag() {
                Some(t) if t == expected => set,
                Some(t) => return Err(Error::format(&path, format!("file tagged {}/{} sits at {family}/{variant}", t.family, t.variant))),
                None => PredictionSet::new(format!("{family}/{variant}"), Some(expected), set.records().to_vec())?,
            };
            biased.push(set);
        }
    }
    if biased.is_empty() {
        return Err(Error::Validation(format!("no biased sets under {}", dir.display())));
    }
    Ok((baseline, biased))
}

/// Per-variant metrics and one family row per family with predictions.
pub fn compute_cbi(records: &[ImageRecord], baseline: &PredictionSet, biased: &[PredictionSet]) -> Result<(Vec<VariantCbi>, Vec<bias_audit_core::cbi::CbiFamilyResult>)> {
    let report = validate_join(records, &[], Some(baseline), biased);
    if !report.is_clean() {
        let shown: Vec<String> = report.findings.iter().take(10).map(ToString::to_string).collect();
        return Err(Error::Validation(format!("{} join findings:\n  {}", report.findings.len(), shown.join("\n  "))));
    }
    let labels: BTreeMap<String, ClassLabel> = records.iter().map(|r| (r.image_id.clone(), r.class)).collect();
    let f1_clean = f1_score(baseline, &labels)?;
    let variants = biased
        .par_iter()
        .map(|set| VariantCbi::compute(set.bias_tag().expect("biased sets are tagged"), baseline, set, &labels))
        .collect::<bias_audit_core::Result<Vec<_>>>()?;
    let mut families = Vec::new();
    for &family in BiasFamily::ALL {
        let members: Vec<VariantCbi> = variants.iter().filter(|v| v.family == family).cloned().collect();
        if !members.is_empty() {
            families.push(aggregate_family(f1_clean, &members, baseline)?);
        }
    }
    Ok((variants, families))
}

pub fn cmd_cbi(cfg: &RunConfig) -> Result<Outcome> {
    let dir = existing(cfg, &cfg.predictions_dir, "predictions_dir")?;
    let records = image_records(cfg)?;
    let (baseline, biased) = load_prediction_tree(&dir, cfg.threshold)?;
    let (variants, families) = compute_cbi(&records, &baseline, &biased)?;
    let rows: Vec<CbiRow> = families.iter().map(|f| CbiRow::from_result(&cfg.regime, f)).collect();
    let prov = provenance(cfg);
    let out = out_dir(cfg)?;
    let mut outcome = Outcome::new();
    write_file(&mut outcome, out.join("cbi.csv"), &report::render_cbi_csv(Some(&prov), &rows))?;
    write_file(&mut outcome, out.join("cbi_variants.csv"), &report::render_variant_csv(Some(&prov), &cfg.regime, &variants))?;
    let denominators = families.first().map(|f| (f.baseline_malignant, f.baseline_benign));
    let md = format!("{}\n{}\n{}", prov.markdown_comment(), report::render_cbi_markdown(&rows), report::cbi_footer(denominators));
    write_file(&mut outcome, out.join("cbi.md"), &md)?;
    Ok(outcome)
}

pub fn cmd_stats(cfg: &RunConfig) -> Result<Outcome> {
    let table = load_annotations(&existing(cfg, &cfg.annotations, "annotations")?)?;
    let records = if cfg.manifest.is_some() { load_manifest(&existing(cfg, &cfg.manifest, "manifest")?)? } else { table.records.clone() };
    let report = validate_join(&records, &table.annotations, None, &[]);
    if !report.is_clean() {
        let shown: Vec<String> = report.findings.iter().take(10).map(ToString::to_string).collect();
        return Err(Error::Validation(format!("{} join findings:\n  {}", report.findings.len(), shown.join("\n  "))));
    }
    let prov = provenance(cfg);
    let out = out_dir(cfg)?;
    let mut outcome = Outcome::new();

    let prev = prevalence(&records, &table.annotations)?;
    write_file(&mut outcome, out.join("prevalence.csv"), &report::render_prevalence_csv(Some(&prov), &prev))?;

    let matrices = GROUP_ORDER.iter().map(|&g| phi_correlation(&records, &table.annotations, g)).collect::<bias_audit_core::Result<Vec<_>>>()?;
    write_file(&mut outcome, out.join("correlation.csv"), &report::render_correlation_csv(Some(&prov), &matrices))?;

    let groups: Vec<_> = std::iter::once(None).chain(GROUP_ORDER.iter().copied().map(Some)).collect();
    let mut pps_rows = Vec::new();
    for group in groups {
        for artifact in Artifact::ALL {
            let outcome_row = pps(&records, &table.annotations, group, artifact, cfg.pps_folds, cfg.seed).map_err(|e| e.to_string());
            pps_rows.push(PpsRow { group, artifact, outcome: outcome_row });
        }
    }
    for r in pps_rows.iter().filter(|r| r.outcome.is_err()) {
        let group = r.group.map_or("all", |g| g.as_str());
        outcome.notice(format!("pps {group}/{}: {}", r.artifact.as_str(), r.outcome.as_ref().unwrap_err()));
    }
    write_file(&mut outcome, out.join("pps.csv"), &report::render_pps_csv(Some(&prov), &pps_rows))?;

    if cfg.annotations_b.is_some() {
        let second = load_annotations(&existing(cfg, &cfg.annotations_b, "annotations_b")?)?;
        let k = cohen_kappa(&table.annotations, &second.annotations)?;
        write_file(&mut outcome, out.join("kappa.csv"), &report::render_kappa_csv(Some(&prov), &k))?;
    } else {
        outcome.notice("kappa skipped: no second annotator (`annotations_b`) configured".into());
    }
    Ok(outcome)
}

pub fn compute_fidelity(cfg: &RunConfig, real: &bias_audit_core::fidelity::EmbeddingSet, fake: &bias_audit_core::fidelity::EmbeddingSet) -> Result<FidelityReport> {
    if real.d() != fake.d() {
        return Err(Error::Validation(format!("embedding dimensions differ: real d={}, fake d={}", real.d(), fake.d())));
    }
    let fid_value = fid(&gaussian_stats(real)?, &gaussian_stats(fake)?)?;
    let base = KidParams { subset_size: 1000, n_subsets: cfg.kid_subsets, seed: cfg.seed };
    let params = match cfg.kid_subset_size {
        Some(m) => KidParams { subset_size: m, ..base },
        None => base.capped(real.n(), fake.n()),
    };
    let subsets = kid_subsets(real.n(), fake.n(), params)?;
    let values = subsets.par_iter().map(|s| mmd2_unbiased(real, fake, s)).collect::<bias_audit_core::Result<Vec<_>>>()?;
    let kid = KidEstimate::from_values(values);
    let pr = precision_recall(real, fake, cfg.pr_k)?;
    Ok(FidelityReport {
        n_real: real.n(),
        n_fake: fake.n(),
        dim: real.d(),
        fid: fid_value,
        kid_pct_mean: 100.0 * kid.mean,
        kid_pct_std: 100.0 * kid.std,
        kid_subset_size: params.subset_size,
        kid_subsets: params.n_subsets,
        precision: pr.precision,
        recall: pr.recall,
        k: cfg.pr_k,
    })
}

pub fn cmd_fidelity(cfg: &RunConfig) -> Result<Outcome> {
    let real = load_embeddings(&existing(cfg, &cfg.real_embeddings, "real_embeddings")?)?;
    let fake = load_embeddings(&existing(cfg, &cfg.fake_embeddings, "fake_embeddings")?)?;
    let rep = compute_fidelity(cfg, &real, &fake)?;
    let prov = provenance(cfg);
    let out = out_dir(cfg)?;
    let mut outcome = Outcome::new();
    let csv = report::render_fidelity_csv(Some(&prov), &rep);
    write_file(&mut outcome, out.join("fidelity.csv"), &csv)?;
    let md = format!("{}\n{}", prov.markdown_comment(), report::render_fidelity_markdown(&report::parse_fidelity_csv(&csv)?));
    write_file(&mut outcome, out.join("fidelity.md"), &md)?;
    Ok(outcome)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// CBI tables in the output directory and its immediate subdirectories.
fn cbi_inputs(out: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let top = out.join("cbi.csv");
    if top.exists() {
        found.push(top);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(out)
        .map_err(|e| Error::io(out, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    found.extend(subdirs.into_iter().map(|d| d.join("cbi.csv")).filter(|p| p.exists()));
    Ok(found)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<Outcome> {
    let out = cfg.out_path();
    if !out.is_dir() {
        return Err(Error::Config(format!("output directory {} does not exist; run other commands first", out.display())));
    }
    let mut outcome = Outcome::new();
    let mut doc = provenance(cfg).markdown_comment();
    doc.push_str("\n# Bias audit report\n");
    let mut sections = 0;

    let prev_path = out.join("prevalence.csv");
    if prev_path.exists() {
        let table = report::parse_prevalence_csv(&read_text(&prev_path)?)?;
        doc.push_str("\n## Artifact prevalence\n\n");
        doc.push_str(&report::render_prevalence_markdown(&table));
        sections += 1;
    }

    let mut rows = Vec::new();
    for p in cbi_inputs(&out)? {
        rows.extend(report::parse_cbi_csv(&read_text(&p)?)?);
    }
    if !rows.is_empty() {
        report::sort_cbi_rows(&mut rows);
        doc.push_str("\n## Counterfactual bias insertion\n\n");
        doc.push_str(&report::render_cbi_markdown(&rows));
        doc.push('\n');
        doc.push_str(&report::cbi_footer(None));
        sections += 1;
    }

    let fid_path = out.join("fidelity.csv");
    if fid_path.exists() {
        doc.push_str("\n## Generative fidelity\n\n");
        doc.push_str(&report::render_fidelity_markdown(&report::parse_fidelity_csv(&read_text(&fid_path)?)?));
        sections += 1;
    }

    if sections == 0 {
        return Err(Error::Validation(format!("nothing to report in {}", out.display())));
    }
    write_file(&mut outcome, out.join("report.md"), &doc)?;
    Ok(outcome)
}
