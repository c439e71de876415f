//! Rendering of result tables to CSV and Markdown, and reading back the CSV
//! files a previous run wrote.
//!
//! CSV files open with `#` comment lines naming the tool version, config
//! digest and seed. Counts print as integers, percentages and F1 with two
//! decimals, fidelity metrics with four.

use std::fmt::Write as _;

use bias_audit_core::cbi::{CbiFamilyResult, VariantCbi};
use bias_audit_core::model::{BiasFamily, ClassLabel, SourceKind};
use bias_audit_core::stats::{Artifact, KappaResult, PhiMatrix, PhiVar, PpsScore, PrevalenceCell, PrevalenceTable, GROUP_ORDER};

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn comment_lines(&self) -> String {
        format!("# bias-audit {TOOL_VERSION}\n# config_sha256: {}\n# seed: {}\n", self.config_sha256, self.seed)
    }

    pub fn markdown_comment(&self) -> String {
        format!("<!-- bias-audit {TOOL_VERSION}; config_sha256 {}; seed {} -->\n", self.config_sha256, self.seed)
    }
}

fn csv_string(prov: Option<&Provenance>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8");
    match prov {
        Some(p) => p.comment_lines() + &body,
        None => body,
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn table_err(what: &str, e: impl std::fmt::Display) -> Error {
    Error::Validation(format!("{what}: {e}"))
}

fn count(v: f64) -> String {
    format!("{v:.0}")
}

fn two(v: f64) -> String {
    format!("{v:.2}")
}

fn four(v: f64) -> String {
    format!("{v:.4}")
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn md_header(cols: &[&str], numeric_from: usize) -> String {
    let mut s = md_row(&cols.iter().map(|c| c.to_string()).collect::<Vec<_>>());
    let rule: Vec<String> = (0..cols.len()).map(|i| if i >= numeric_from { "---:".to_string() } else { "---".to_string() }).collect();
    s.push_str(&format!("|{}|\n", rule.join("|")));
    s
}

// CBI

pub const CBI_COLUMNS: [&str; 13] = [
    "family",
    "regime",
    "switched_mean",
    "switched_std",
    "switched_median",
    "mal_to_ben",
    "mal_to_ben_pct",
    "ben_to_mal",
    "ben_to_mal_pct",
    "f1_clean",
    "f1_biased_mean",
    "f1_biased_std",
    "f1_mean",
];

pub const CBI_MARKDOWN_COLUMNS: [&str; 11] =
    ["bias", "data", "switched mean", "switched std", "switched median", "mal to ben", "ben to mal", "F1", "F1 aug", "F1 aug std", "F1 mean"];

/// Known regime labels in table order; others sort after them by name.
pub const REGIME_ORDER: [&str; 5] = ["real", "aug_cgan", "aug_gan", "synth_cgan", "synth_gan"];

#[derive(Debug, Clone, PartialEq)]
pub struct CbiRow {
    pub family: BiasFamily,
    pub regime: String,
    pub switched_mean: f64,
    pub switched_std: f64,
    pub switched_median: f64,
    pub mal_to_ben: f64,
    pub mal_to_ben_pct: f64,
    pub ben_to_mal: f64,
    pub ben_to_mal_pct: f64,
    pub f1_clean: f64,
    pub f1_biased_mean: f64,
    pub f1_biased_std: f64,
    pub f1_mean: f64,
}

impl CbiRow {
    pub fn from_result(regime: &str, r: &CbiFamilyResult) -> Self {
        CbiRow {
            family: r.family,
            regime: regime.to_string(),
            switched_mean: r.switched_mean,
            switched_std: r.switched_std,
            switched_median: r.switched_median,
            mal_to_ben: r.mal_to_ben_mean,
            mal_to_ben_pct: r.mal_to_ben_pct,
            ben_to_mal: r.ben_to_mal_mean,
            ben_to_mal_pct: r.ben_to_mal_pct,
            f1_clean: r.f1_clean,
            f1_biased_mean: r.f1_biased_mean,
            f1_biased_std: r.f1_biased_std,
            f1_mean: r.f1_mean,
        }
    }

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.family.to_string(),
            self.regime.clone(),
            count(self.switched_mean),
            two(self.switched_std),
            count(self.switched_median),
            count(self.mal_to_ben),
            two(self.mal_to_ben_pct),
            count(self.ben_to_mal),
            two(self.ben_to_mal_pct),
            two(self.f1_clean),
            two(self.f1_biased_mean),
            two(self.f1_biased_std),
            two(self.f1_mean),
        ]
    }

    pub fn markdown_cells(&self) -> Vec<String> {
        vec![
            self.family.to_string(),
            self.regime.clone(),
            count(self.switched_mean),
            two(self.switched_std),
            count(self.switched_median),
            format!("{} ({}%)", count(self.mal_to_ben), two(self.mal_to_ben_pct)),
            format!("{} ({}%)", count(self.ben_to_mal), two(self.ben_to_mal_pct)),
            two(self.f1_clean),
            two(self.f1_biased_mean),
            two(self.f1_biased_std),
            two(self.f1_mean),
        ]
    }
}

fn regime_rank(regime: &str) -> (usize, &str) {
    (REGIME_ORDER.iter().position(|r| *r == regime).unwrap_or(REGIME_ORDER.len()), regime)
}

/// Family, then regime.
pub fn sort_cbi_rows(rows: &mut [CbiRow]) {
    rows.sort_by(|a, b| (a.family, regime_rank(&a.regime)).cmp(&(b.family, regime_rank(&b.regime))));
}

pub fn render_cbi_csv(prov: Option<&Provenance>, rows: &[CbiRow]) -> String {
    csv_string(prov, &CBI_COLUMNS, rows.iter().map(CbiRow::csv_fields))
}

pub fn render_cbi_markdown(rows: &[CbiRow]) -> String {
    let mut s = md_header(&CBI_MARKDOWN_COLUMNS, 2);
    for r in rows {
        s.push_str(&md_row(&r.markdown_cells()));
    }
    s
}

/// Notes printed under every CBI table.
pub fn cbi_footer(denominators: Option<(usize, usize)>) -> String {
    let mut s = String::from(
        "Directional columns (mal to ben, ben to mal) are means over the variants of a family, rounded to integers. \
         Percentages divide by the number of baseline images predicted in the source class",
    );
    match denominators {
        Some((mal, ben)) => {
            let _ = write!(s, " ({mal} predicted malignant, {ben} predicted benign).");
        }
        None => s.push('.'),
    }
    s.push_str(" Switched std and F1 aug std are sample standard deviations over variants (0 for a single variant).\n");
    s
}

pub fn parse_cbi_csv(text: &str) -> Result<Vec<CbiRow>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| table_err("cbi csv", e))?.clone();
    if headers.iter().collect::<Vec<_>>() != CBI_COLUMNS {
        return Err(table_err("cbi csv", "unexpected header"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| table_err("cbi csv", e))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| table_err("cbi csv", format!("{}: {e}", CBI_COLUMNS[i])));
        rows.push(CbiRow {
            family: rec[0].parse().map_err(|e| table_err("cbi csv", e))?,
            regime: rec[1].to_string(),
            switched_mean: num(2)?,
            switched_std: num(3)?,
            switched_median: num(4)?,
            mal_to_ben: num(5)?,
            mal_to_ben_pct: num(6)?,
            ben_to_mal: num(7)?,
            ben_to_mal_pct: num(8)?,
            f1_clean: num(9)?,
            f1_biased_mean: num(10)?,
            f1_biased_std: num(11)?,
            f1_mean: num(12)?,
        });
    }
    Ok(rows)
}

pub const VARIANT_COLUMNS: [&str; 9] = ["family", "regime", "variant_id", "switched", "mal_to_ben", "ben_to_mal", "mean_shift", "median_shift", "f1_biased"];

pub fn render_variant_csv(prov: Option<&Provenance>, regime: &str, variants: &[VariantCbi]) -> String {
    csv_string(
        prov,
        &VARIANT_COLUMNS,
        variants.iter().map(|v| {
            vec![
                v.family.to_string(),
                regime.to_string(),
                v.variant_id.to_string(),
                v.switched.to_string(),
                v.mal_to_ben.to_string(),
                v.ben_to_mal.to_string(),
                four(v.mean_shift),
                four(v.median_shift),
                two(v.f1_biased),
            ]
        }),
    )
}

// Prevalence

pub const PREVALENCE_COLUMNS: [&str; 10] = ["source", "class", "hair_normal", "hair_dense", "hair_short", "ruler", "frame", "other", "none", "total"];

fn group_label(s: SourceKind) -> &'static str {
    match s {
        SourceKind::Real => "Real",
        SourceKind::GanConditional => "cGAN",
        SourceKind::GanUnconditional => "GAN",
    }
}

fn cell_counts(c: &PrevalenceCell) -> [usize; 8] {
    [c.hair_normal, c.hair_dense, c.hair_short, c.ruler, c.frame, c.other, c.none, c.total]
}

pub fn render_prevalence_csv(prov: Option<&Provenance>, table: &PrevalenceTable) -> String {
    csv_string(
        prov,
        &PREVALENCE_COLUMNS,
        table.cells.iter().map(|c| {
            let mut row = vec![c.source.to_string(), c.class.to_string()];
            row.extend(cell_counts(c).iter().map(|v| v.to_string()));
            row
        }),
    )
}

pub fn parse_prevalence_csv(text: &str) -> Result<PrevalenceTable> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| table_err("prevalence csv", e))?.clone();
    if headers.iter().collect::<Vec<_>>() != PREVALENCE_COLUMNS {
        return Err(table_err("prevalence csv", "unexpected header"));
    }
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| table_err("prevalence csv", e))?;
        let n = |i: usize| rec[i].parse::<usize>().map_err(|e| table_err("prevalence csv", format!("{}: {e}", PREVALENCE_COLUMNS[i])));
        cells.push(PrevalenceCell {
            source: rec[0].parse().map_err(|e| table_err("prevalence csv", e))?,
            class: rec[1].parse().map_err(|e| table_err("prevalence csv", e))?,
            hair_normal: n(2)?,
            hair_dense: n(3)?,
            hair_short: n(4)?,
            ruler: n(5)?,
            frame: n(6)?,
            other: n(7)?,
            none: n(8)?,
            total: n(9)?,
        });
    }
    Ok(PrevalenceTable { cells })
}

pub fn render_prevalence_markdown(table: &PrevalenceTable) -> String {
    let mut s = md_header(&["", "class", "hair (normal)", "hair (dense)", "hair (short)", "ruler", "frame", "other", "none", "total"], 2);
    for source in GROUP_ORDER {
        for (i, class) in [ClassLabel::Benign, ClassLabel::Malignant].into_iter().enumerate() {
            let Some(c) = table.cells.iter().find(|c| c.source == source && c.class == class) else { continue };
            let mut row = vec![if i == 0 { group_label(source).to_string() } else { String::new() }, class.to_string()];
            row.extend(cell_counts(c).iter().map(|v| v.to_string()));
            s.push_str(&md_row(&row));
        }
    }
    s
}

// Correlation, PPS, kappa

pub fn render_correlation_csv(prov: Option<&Provenance>, matrices: &[PhiMatrix]) -> String {
    let mut rows = Vec::new();
    for m in matrices {
        for (i, a) in PhiVar::ALL.iter().enumerate() {
            for b in &PhiVar::ALL[i + 1..] {
                let v = m.get(*a, *b).map_or_else(|| "NA".to_string(), two);
                rows.push(vec![m.group.to_string(), a.as_str().to_string(), b.as_str().to_string(), v]);
            }
        }
    }
    csv_string(prov, &["group", "var_a", "var_b", "phi_pct"], rows)
}

/// One PPS evaluation; `group` is `None` for all groups pooled.
#[derive(Debug, Clone, PartialEq)]
pub struct PpsRow {
    pub group: Option<SourceKind>,
    pub artifact: Artifact,
    pub outcome: std::result::Result<PpsScore, String>,
}

pub fn render_pps_csv(prov: Option<&Provenance>, rows: &[PpsRow]) -> String {
    csv_string(
        prov,
        &["group", "feature", "target", "baseline_f1_pct", "model_f1_pct", "pps_pct", "note"],
        rows.iter().map(|r| {
            let group = r.group.map_or("all", SourceKind::as_str).to_string();
            match &r.outcome {
                Ok(s) => vec![group, s.feature.clone(), s.target.clone(), two(100.0 * s.baseline_f1), two(100.0 * s.model_f1), two(100.0 * s.pps), String::new()],
                Err(why) => vec![group, r.artifact.as_str().to_string(), "class".to_string(), "NA".into(), "NA".into(), "NA".into(), why.clone()],
            }
        }),
    )
}

pub fn render_kappa_csv(prov: Option<&Provenance>, k: &KappaResult) -> String {
    let mut rows: Vec<Vec<String>> = k
        .per_artifact
        .iter()
        .map(|(a, v)| vec![a.as_str().to_string(), four(v.kappa), four(v.observed), four(v.expected), if v.degenerate { "chance agreement is 1".into() } else { String::new() }])
        .collect();
    rows.push(vec!["mean".into(), four(k.mean_kappa), String::new(), String::new(), String::new()]);
    csv_string(prov, &["artifact", "kappa", "observed", "expected", "note"], rows)
}

// Fidelity

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub n_real: usize,
    pub n_fake: usize,
    pub dim: usize,
    pub fid: f64,
    /// KID mean and std, already multiplied by 100.
    pub kid_pct_mean: f64,
    pub kid_pct_std: f64,
    pub kid_subset_size: usize,
    pub kid_subsets: usize,
    pub precision: f64,
    pub recall: f64,
    pub k: usize,
}

pub fn render_fidelity_csv(prov: Option<&Provenance>, r: &FidelityReport) -> String {
    let rows = vec![
        vec!["n_real".to_string(), r.n_real.to_string()],
        vec!["n_fake".into(), r.n_fake.to_string()],
        vec!["dim".into(), r.dim.to_string()],
        vec!["fid".into(), four(r.fid)],
        vec!["kid_pct_mean".into(), four(r.kid_pct_mean)],
        vec!["kid_pct_std".into(), four(r.kid_pct_std)],
        vec!["kid_subset_size".into(), r.kid_subset_size.to_string()],
        vec!["kid_subsets".into(), r.kid_subsets.to_string()],
        vec!["precision".into(), four(r.precision)],
        vec!["recall".into(), four(r.recall)],
        vec!["k".into(), r.k.to_string()],
    ];
    csv_string(prov, &["metric", "value"], rows)
}

/// `(metric, value)` pairs of a fidelity CSV, as written.
pub fn parse_fidelity_csv(text: &str) -> Result<Vec<(String, String)>> {
    let mut rdr = reader(text);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| table_err("fidelity csv", e))?;
        if rec.len() != 2 {
            return Err(table_err("fidelity csv", "expected metric,value rows"));
        }
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

pub fn render_fidelity_markdown(pairs: &[(String, String)]) -> String {
    let get = |k: &str| pairs.iter().find(|(m, _)| m == k).map_or("NA", |(_, v)| v.as_str()).to_string();
    let mut s = md_header(&["n real", "n fake", "FID", "KID (%)", "KID std (%)", "precision", "recall"], 0);
    s.push_str(&md_row(&[get("n_real"), get("n_fake"), get("fid"), get("kid_pct_mean"), get("kid_pct_std"), get("precision"), get("recall")]));
    s
}
