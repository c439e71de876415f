//! Descriptive artifact statistics over an annotated image collection.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{diff_ids, ArtifactAnnotation, ClassLabel, HairKind, ImageRecord, SourceKind};

/// Row order of the prevalence table: real, conditional GAN, unconditional GAN.
pub const GROUP_ORDER: [SourceKind; 3] = [SourceKind::Real, SourceKind::GanConditional, SourceKind::GanUnconditional];

/// Annotated artifact kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Artifact {
    Hair,
    Frame,
    Ruler,
    Other,
}

impl Artifact {
    pub const ALL: [Artifact; 4] = [Artifact::Hair, Artifact::Frame, Artifact::Ruler, Artifact::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Artifact::Hair => "hair",
            Artifact::Frame => "frame",
            Artifact::Ruler => "ruler",
            Artifact::Other => "other",
        }
    }

    /// Presence indicator; hair counts as present for any non-`none` kind.
    pub fn present(self, a: &ArtifactAnnotation) -> bool {
        match self {
            Artifact::Hair => a.has_hair(),
            Artifact::Frame => a.frame,
            Artifact::Ruler => a.has_ruler(),
            Artifact::Other => a.other,
        }
    }

    /// Categorical code used by PPS and kappa: the hair kind for hair,
    /// presence for the rest.
    pub fn category(self, a: &ArtifactAnnotation) -> u32 {
        match self {
            Artifact::Hair => a.hair as u32,
            _ => self.present(a) as u32,
        }
    }
}

impl fmt::Display for Artifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn join<'a>(manifest: &'a [ImageRecord], annotations: &'a [ArtifactAnnotation]) -> Result<Vec<(&'a ImageRecord, &'a ArtifactAnnotation)>> {
    let by_id: BTreeMap<&str, &ImageRecord> = manifest.iter().map(|r| (r.image_id.as_str(), r)).collect();
    annotations
        .iter()
        .map(|a| by_id.get(a.image_id.as_str()).map(|r| (*r, a)).ok_or_else(|| Error::OrphanAnnotation(a.image_id.clone())))
        .collect()
}

// ---------------------------------------------------------------------------
// Prevalence

/// Image counts for one (source, class) group. An image with two rulers counts once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrevalenceCell {
    pub source: SourceKind,
    pub class: ClassLabel,
    pub hair_normal: usize,
    pub hair_dense: usize,
    pub hair_short: usize,
    pub ruler: usize,
    pub frame: usize,
    pub other: usize,
    pub none: usize,
    pub total: usize,
}

impl PrevalenceCell {
    fn empty(source: SourceKind, class: ClassLabel) -> Self {
        PrevalenceCell { source, class, hair_normal: 0, hair_dense: 0, hair_short: 0, ruler: 0, frame: 0, other: 0, none: 0, total: 0 }
    }

    fn add(&mut self, a: &ArtifactAnnotation) {
        match a.hair {
            HairKind::Normal => self.hair_normal += 1,
            HairKind::Dense => self.hair_dense += 1,
            HairKind::Short => self.hair_short += 1,
            HairKind::None => {}
        }
        self.ruler += a.has_ruler() as usize;
        self.frame += a.frame as usize;
        self.other += a.other as usize;
        self.none += a.none() as usize;
        self.total += 1;
    }
}

/// Six cells in [`GROUP_ORDER`], benign before malignant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrevalenceTable {
    pub cells: Vec<PrevalenceCell>,
}

impl PrevalenceTable {
    pub fn cell(&self, source: SourceKind, class: ClassLabel) -> &PrevalenceCell {
        self.cells.iter().find(|c| c.source == source && c.class == class).expect("table holds every group")
    }
}

pub fn prevalence(manifest: &[ImageRecord], annotations: &[ArtifactAnnotation]) -> Result<PrevalenceTable> {
    let mut cells: Vec<PrevalenceCell> = GROUP_ORDER
        .iter()
        .flat_map(|s| [ClassLabel::Benign, ClassLabel::Malignant].map(|c| PrevalenceCell::empty(*s, c)))
        .collect();
    for (record, ann) in join(manifest, annotations)? {
        let cell = cells.iter_mut().find(|c| c.source == record.source && c.class == record.class).expect("all groups present");
        cell.add(ann);
    }
    Ok(PrevalenceTable { cells })
}

// ---------------------------------------------------------------------------
// Phi correlation

/// Phi coefficient of two binary variables, in `[-1, 1]`.
/// `None` when either variable is constant.
pub fn phi(x: &[bool], y: &[bool]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    let mut n = [[0u64; 2]; 2];
    for (&a, &b) in x.iter().zip(y) {
        n[a as usize][b as usize] += 1;
    }
    let row1 = (n[1][0] + n[1][1]) as f64;
    let row0 = (n[0][0] + n[0][1]) as f64;
    let col1 = (n[0][1] + n[1][1]) as f64;
    let col0 = (n[0][0] + n[1][0]) as f64;
    let denom = row1 * row0 * col1 * col0;
    if denom == 0.0 {
        return Ok(None);
    }
    let num = n[1][1] as f64 * n[0][0] as f64 - n[1][0] as f64 * n[0][1] as f64;
    Ok(Some((num / libm::sqrt(denom)).clamp(-1.0, 1.0)))
}

/// Variables of the correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PhiVar {
    Artifact(Artifact),
    /// Class indicator, set for malignant.
    Malignant,
}

impl PhiVar {
    pub const ALL: [PhiVar; 5] = [
        PhiVar::Artifact(Artifact::Hair),
        PhiVar::Artifact(Artifact::Frame),
        PhiVar::Artifact(Artifact::Ruler),
        PhiVar::Artifact(Artifact::Other),
        PhiVar::Malignant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PhiVar::Artifact(a) => a.as_str(),
            PhiVar::Malignant => "class_mal",
        }
    }

    fn indicator(self, record: &ImageRecord, ann: &ArtifactAnnotation) -> bool {
        match self {
            PhiVar::Artifact(a) => a.present(ann),
            PhiVar::Malignant => record.class.is_malignant(),
        }
    }
}

/// Pairwise phi coefficients (percent) within one source group.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMatrix {
    pub group: SourceKind,
    pub samples: usize,
    /// Indexed like [`PhiVar::ALL`]; the diagonal and degenerate cells are `None`.
    pub cells: [[Option<f64>; 5]; 5],
}

impl PhiMatrix {
    pub fn get(&self, a: PhiVar, b: PhiVar) -> Option<f64> {
        let i = PhiVar::ALL.iter().position(|v| *v == a)?;
        let j = PhiVar::ALL.iter().position(|v| *v == b)?;
        self.cells[i][j]
    }
}

pub fn phi_correlation(manifest: &[ImageRecord], annotations: &[ArtifactAnnotation], group: SourceKind) -> Result<PhiMatrix> {
    let rows: Vec<_> = join(manifest, annotations)?.into_iter().filter(|(r, _)| r.source == group).collect();
    let columns: Vec<Vec<bool>> = PhiVar::ALL.iter().map(|v| rows.iter().map(|(r, a)| v.indicator(r, a)).collect()).collect();
    let mut cells = [[None; 5]; 5];
    for i in 0..5 {
        for j in (i + 1)..5 {
            let value = phi(&columns[i], &columns[j])?.map(|p| 100.0 * p);
            cells[i][j] = value;
            cells[j][i] = value;
        }
    }
    Ok(PhiMatrix { group, samples: rows.len(), cells })
}

// ---------------------------------------------------------------------------
// Predictive power score

/// Weighted F1 over the classes present in `truth`, each class weighted by
/// its support.
pub fn weighted_f1(truth: &[u32], predicted: &[u32]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let classes: BTreeSet<u32> = truth.iter().copied().collect();
    let mut total = 0.0;
    for c in classes {
        let (mut tp, mut fp, mut fn_, mut support) = (0usize, 0usize, 0usize, 0usize);
        for (&t, &p) in truth.iter().zip(predicted) {
            support += (t == c) as usize;
            match (t == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        let f1 = if denom == 0 { 0.0 } else { (2 * tp) as f64 / denom as f64 };
        total += f1 * support as f64;
    }
    total / truth.len() as f64
}

/// `max(0, (model - baseline) / (1 - baseline))`, 0 when the baseline is perfect.
pub fn pps_normalize(model_f1: f64, baseline_f1: f64) -> f64 {
    if model_f1 <= baseline_f1 || baseline_f1 >= 1.0 {
        return 0.0;
    }
    ((model_f1 - baseline_f1) / (1.0 - baseline_f1)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpsScore {
    pub feature: String,
    pub target: String,
    pub baseline_f1: f64,
    pub model_f1: f64,
    pub pps: f64,
}

/// Cross-validated F1 scores (fractions, not percent) and the resulting PPS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpsEstimate {
    pub baseline_f1: f64,
    pub model_f1: f64,
    pub pps: f64,
}

/// Fold index for every sample, stratified by target class.
fn stratified_folds(target: &[u32], folds: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &t) in target.iter().enumerate() {
        by_class.entry(t).or_default().push(i);
    }
    let mut assignment = vec![0; target.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(rng);
        for &i in members.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Most frequent value; ties go to the smallest.
fn majority(counts: &BTreeMap<u32, usize>) -> Option<u32> {
    counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(k, _)| *k)
}

/// Single-feature predictive power: cross-validated weighted F1 of a
/// per-category majority vote against a label-permutation baseline.
///
/// The majority vote is what an unconstrained decision tree learns from one
/// categorical feature. Each test fold's baseline predictions are a seeded
/// permutation of that fold's true labels. Both F1 scores are averaged over
/// folds.
pub fn pps_score(feature: &[u32], target: &[u32], folds: usize, seed: u64) -> Result<PpsEstimate> {
    if feature.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), actual: feature.len() });
    }
    if folds < 2 {
        return Err(Error::InvalidParameter("folds must be at least 2"));
    }
    let mut support: BTreeMap<u32, usize> = BTreeMap::new();
    for &t in target {
        *support.entry(t).or_default() += 1;
    }
    if support.len() < 2 {
        return Err(Error::ConstantTarget);
    }
    if let Some(&smallest) = support.values().min() {
        if smallest < folds {
            return Err(Error::TooFewSamples { needed: folds, actual: smallest });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = stratified_folds(target, folds, &mut rng);
    let (mut model_sum, mut baseline_sum) = (0.0, 0.0);
    for fold in 0..folds {
        let mut per_category: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
        let mut overall: BTreeMap<u32, usize> = BTreeMap::new();
        let mut test_truth = Vec::new();
        let mut test_feature = Vec::new();
        for i in 0..target.len() {
            if assignment[i] == fold {
                test_truth.push(target[i]);
                test_feature.push(feature[i]);
            } else {
                *per_category.entry(feature[i]).or_default().entry(target[i]).or_default() += 1;
                *overall.entry(target[i]).or_default() += 1;
            }
        }
        let fallback = majority(&overall).expect("training folds are non-empty");
        let rule: BTreeMap<u32, u32> = per_category.iter().map(|(cat, counts)| (*cat, majority(counts).unwrap_or(fallback))).collect();
        let predicted: Vec<u32> = test_feature.iter().map(|c| *rule.get(c).unwrap_or(&fallback)).collect();
        model_sum += weighted_f1(&test_truth, &predicted);

        let mut permuted = test_truth.clone();
        permuted.shuffle(&mut rng);
        baseline_sum += weighted_f1(&test_truth, &permuted);
    }
    let model_f1 = model_sum / folds as f64;
    let baseline_f1 = baseline_sum / folds as f64;
    Ok(PpsEstimate { baseline_f1, model_f1, pps: pps_normalize(model_f1, baseline_f1) })
}

/// PPS of one artifact predicting the class label within `group`
/// (or over all images when `group` is `None`).
pub fn pps(
    manifest: &[ImageRecord],
    annotations: &[ArtifactAnnotation],
    group: Option<SourceKind>,
    artifact: Artifact,
    folds: usize,
    seed: u64,
) -> Result<PpsScore> {
    let rows: Vec<_> = join(manifest, annotations)?.into_iter().filter(|(r, _)| group.is_none_or(|g| r.source == g)).collect();
    let feature: Vec<u32> = rows.iter().map(|(_, a)| artifact.category(a)).collect();
    let target: Vec<u32> = rows.iter().map(|(r, _)| r.class as u32).collect();
    let est = pps_score(&feature, &target, folds, seed)?;
    Ok(PpsScore {
        feature: artifact.as_str().to_string(),
        target: "class".to_string(),
        baseline_f1: est.baseline_f1,
        model_f1: est.model_f1,
        pps: est.pps,
    })
}

// ---------------------------------------------------------------------------
// Cohen's kappa

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaValue {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    /// Set when chance agreement is 1 and kappa was fixed to 1 by convention.
    pub degenerate: bool,
}

/// Cohen's kappa between two label sequences over the same items.
pub fn kappa<T: Ord + Copy>(a: &[T], b: &[T]) -> Result<KappaValue> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    if a.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, actual: 0 });
    }
    let n = a.len() as f64;
    let mut marg_a: BTreeMap<T, usize> = BTreeMap::new();
    let mut marg_b: BTreeMap<T, usize> = BTreeMap::new();
    let mut agree = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        *marg_a.entry(x).or_default() += 1;
        *marg_b.entry(y).or_default() += 1;
        agree += (x == y) as usize;
    }
    let observed = agree as f64 / n;
    let expected: f64 = marg_a.iter().map(|(k, ca)| (*ca as f64 / n) * (*marg_b.get(k).unwrap_or(&0) as f64 / n)).sum();
    if libm::fabs(1.0 - expected) < 1e-12 {
        return Ok(KappaValue { kappa: 1.0, observed, expected, degenerate: true });
    }
    Ok(KappaValue { kappa: (observed - expected) / (1.0 - expected), observed, expected, degenerate: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaResult {
    pub per_artifact: Vec<(Artifact, KappaValue)>,
    pub mean_kappa: f64,
}

/// Agreement between two annotators per artifact; hair is compared as a
/// four-way category, the rest as presence.
pub fn cohen_kappa(a: &[ArtifactAnnotation], b: &[ArtifactAnnotation]) -> Result<KappaResult> {
    let (missing, extra) = diff_ids(a.iter().map(|x| x.image_id.as_str()), b.iter().map(|x| x.image_id.as_str()));
    if !missing.is_empty() || !extra.is_empty() {
        let first = missing.first().or(extra.first()).cloned().unwrap_or_default();
        return Err(Error::IdMismatch { missing: missing.len(), extra: extra.len(), first });
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    let by_id: BTreeMap<&str, &ArtifactAnnotation> = b.iter().map(|x| (x.image_id.as_str(), x)).collect();
    let pairs: Vec<(&ArtifactAnnotation, &ArtifactAnnotation)> = a.iter().map(|x| (x, by_id[x.image_id.as_str()])).collect();

    let mut per_artifact = Vec::with_capacity(4);
    for artifact in Artifact::ALL {
        let la: Vec<u32> = pairs.iter().map(|(x, _)| artifact.category(x)).collect();
        let lb: Vec<u32> = pairs.iter().map(|(_, y)| artifact.category(y)).collect();
        per_artifact.push((artifact, kappa(&la, &lb)?));
    }
    let mean_kappa = per_artifact.iter().map(|(_, k)| k.kappa).sum::<f64>() / per_artifact.len() as f64;
    Ok(KappaResult { per_artifact, mean_kappa })
}
