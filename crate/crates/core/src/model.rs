//! Records shared across the pipeline and the join check between them.
//!
//! Enum text forms are the lowercase tokens used in the annotation and
//! prediction files (`real|gan|cgan`, `ben|mal`, `none|normal|dense|short`,
//! `frame|ruler|dense|medium|short`).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Probability at or above which a prediction is labelled malignant.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Upper bound accepted for `ruler_count`.
pub const MAX_RULERS: u32 = 8;

macro_rules! text_enum {
    ($name:ident, $field:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::InvalidValue { field: $field, value: s.to_string() }),
                }
            }
        }
    };
}

/// Where an image came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceKind {
    Real,
    /// One generator per class.
    GanUnconditional,
    /// A single class-conditioned generator.
    GanConditional,
}

text_enum!(SourceKind, "source", {
    Real => "real",
    GanUnconditional => "gan",
    GanConditional => "cgan",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Benign,
    Malignant,
}

text_enum!(ClassLabel, "class", {
    Benign => "ben",
    Malignant => "mal",
});

impl ClassLabel {
    pub fn is_malignant(self) -> bool {
        self == ClassLabel::Malignant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum HairKind {
    #[default]
    None,
    Normal,
    Dense,
    Short,
}

text_enum!(HairKind, "hair", {
    None => "none",
    Normal => "normal",
    Dense => "dense",
    Short => "short",
});

/// The five insertable bias families, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BiasFamily {
    Frame,
    Ruler,
    HairDense,
    HairMedium,
    HairShort,
}

text_enum!(BiasFamily, "bias_family", {
    Frame => "frame",
    Ruler => "ruler",
    HairDense => "dense",
    HairMedium => "medium",
    HairShort => "short",
});

/// Variant index inside a family, `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariantId(u8);

impl VariantId {
    pub const COUNT: u8 = 5;

    pub fn new(id: u8) -> Result<Self> {
        if (1..=Self::COUNT).contains(&id) {
            Ok(VariantId(id))
        } else {
            Err(Error::VariantOutOfRange(id))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = VariantId> {
        (1..=Self::COUNT).map(VariantId)
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BiasTag {
    pub family: BiasFamily,
    pub variant: VariantId,
}

/// One row of the image manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRecord {
    pub image_id: String,
    pub source: SourceKind,
    pub class: ClassLabel,
    /// Path relative to the image root.
    pub path: String,
}

impl ImageRecord {
    pub fn new(image_id: impl Into<String>, source: SourceKind, class: ClassLabel, path: impl Into<String>) -> Result<Self> {
        let image_id = image_id.into();
        let path = path.into();
        if image_id.is_empty() {
            return Err(Error::InvalidValue { field: "image_id", value: image_id });
        }
        if path.is_empty() {
            return Err(Error::InvalidValue { field: "path", value: path });
        }
        Ok(ImageRecord { image_id, source, class, path })
    }
}

/// Manual artifact annotation of one image.
///
/// `none` is never stored; it is always recomputed from the other flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactAnnotation {
    pub image_id: String,
    pub hair: HairKind,
    /// Generators sometimes draw two rulers in one image, so this is a count.
    pub ruler_count: u32,
    pub frame: bool,
    pub other: bool,
}

impl ArtifactAnnotation {
    pub fn new(image_id: impl Into<String>, hair: HairKind, ruler_count: u32, frame: bool, other: bool) -> Result<Self> {
        if ruler_count > MAX_RULERS {
            return Err(Error::TooManyRulers(ruler_count));
        }
        Ok(ArtifactAnnotation { image_id: image_id.into(), hair, ruler_count, frame, other })
    }

    pub fn has_hair(&self) -> bool {
        self.hair != HairKind::None
    }

    pub fn has_ruler(&self) -> bool {
        self.ruler_count >= 1
    }

    /// True iff the image carries no artifact at all.
    pub fn none(&self) -> bool {
        !self.has_hair() && !self.has_ruler() && !self.frame && !self.other
    }
}

/// Classifier output for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub image_id: String,
    pub p_malignant: f64,
    pub predicted: ClassLabel,
}

impl PredictionRecord {
    pub fn new(image_id: impl Into<String>, p_malignant: f64) -> Result<Self> {
        Self::with_threshold(image_id, p_malignant, DEFAULT_THRESHOLD)
    }

    /// Malignant iff `p_malignant >= threshold`.
    pub fn with_threshold(image_id: impl Into<String>, p_malignant: f64, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_malignant) {
            return Err(Error::ProbabilityOutOfRange(p_malignant));
        }
        let predicted = if p_malignant >= threshold { ClassLabel::Malignant } else { ClassLabel::Benign };
        Ok(PredictionRecord { image_id: image_id.into(), p_malignant, predicted })
    }
}

/// Predictions of one classifier run, either on clean images (no tag) or on
/// images carrying one inserted bias variant.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    run_id: String,
    bias_tag: Option<BiasTag>,
    records: Vec<PredictionRecord>,
    index: BTreeMap<String, usize>,
}

impl PredictionSet {
    pub fn new(run_id: impl Into<String>, bias_tag: Option<BiasTag>, records: Vec<PredictionRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyPredictionSet);
        }
        let mut index = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.image_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(r.image_id.clone()));
            }
        }
        Ok(PredictionSet { run_id: run_id.into(), bias_tag, records, index })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn bias_tag(&self) -> Option<BiasTag> {
        self.bias_tag
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&PredictionRecord> {
        self.index.get(image_id).map(|&i| &self.records[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn count_predicted(&self, class: ClassLabel) -> usize {
        self.records.iter().filter(|r| r.predicted == class).count()
    }

    /// Pairs every baseline record with its counterpart in `other`.
    /// Fails unless both sets hold exactly the same ids.
    pub fn pair_with<'a>(&'a self, other: &'a PredictionSet) -> Result<Vec<(&'a PredictionRecord, &'a PredictionRecord)>> {
        let (missing, extra) = diff_ids(self.ids(), other.ids());
        if !missing.is_empty() || !extra.is_empty() {
            let first = missing.first().or(extra.first()).cloned().unwrap_or_default();
            return Err(Error::IdMismatch { missing: missing.len(), extra: extra.len(), first });
        }
        Ok(self
            .records
            .iter()
            .map(|r| (r, other.get(&r.image_id).expect("id sets checked equal")))
            .collect())
    }
}

/// Ids only in `left` and ids only in `right`, both sorted.
pub fn diff_ids<'a>(left: impl IntoIterator<Item = &'a str>, right: impl IntoIterator<Item = &'a str>) -> (Vec<String>, Vec<String>) {
    let left: BTreeSet<&str> = left.into_iter().collect();
    let right: BTreeSet<&str> = right.into_iter().collect();
    let only_left = left.difference(&right).map(|s| s.to_string()).collect();
    let only_right = right.difference(&left).map(|s| s.to_string()).collect();
    (only_left, only_right)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FindingKind {
    /// Predicted image absent from the manifest.
    PredictionOrphan,
    /// Manifest image absent from the baseline predictions.
    PredictionMissing,
    /// Annotation for an image absent from the manifest.
    AnnotationOrphan,
    /// Manifest image without annotation.
    AnnotationMissing,
    /// Baseline image absent from a biased set.
    CoverageMissing,
    /// Biased-set image absent from the baseline.
    CoverageExtra,
}

impl FindingKind {
    /// The finding reported for the same id when the two compared inputs swap roles.
    pub fn mirrored(self) -> FindingKind {
        match self {
            FindingKind::PredictionOrphan => FindingKind::PredictionMissing,
            FindingKind::PredictionMissing => FindingKind::PredictionOrphan,
            FindingKind::AnnotationOrphan => FindingKind::AnnotationMissing,
            FindingKind::AnnotationMissing => FindingKind::AnnotationOrphan,
            FindingKind::CoverageMissing => FindingKind::CoverageExtra,
            FindingKind::CoverageExtra => FindingKind::CoverageMissing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Finding {
    pub kind: FindingKind,
    pub image_id: String,
    /// Run the finding belongs to, for prediction and coverage findings.
    pub run_id: Option<String>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            FindingKind::PredictionOrphan => "prediction for image not in manifest",
            FindingKind::PredictionMissing => "manifest image without baseline prediction",
            FindingKind::AnnotationOrphan => "annotation for image not in manifest",
            FindingKind::AnnotationMissing => "manifest image without annotation",
            FindingKind::CoverageMissing => "baseline image missing from biased set",
            FindingKind::CoverageExtra => "biased set image not in baseline",
        };
        match &self.run_id {
            Some(run) => write!(f, "{what}: {} (run {run})", self.image_id),
            None => write!(f, "{what}: {}", self.image_id),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn count(&self, kind: FindingKind) -> usize {
        self.findings.iter().filter(|f| f.kind == kind).count()
    }
}

/// Cross-checks the manifest, annotations and prediction files by image id.
///
/// An empty annotation slice means "no annotations supplied" and skips the
/// annotation checks. Biased sets are compared against the baseline when one
/// is given, otherwise against the manifest.
pub fn validate_join(
    manifest: &[ImageRecord],
    annotations: &[ArtifactAnnotation],
    baseline: Option<&PredictionSet>,
    biased: &[PredictionSet],
) -> ValidationReport {
    let mut findings = Vec::new();
    let manifest_ids = || manifest.iter().map(|r| r.image_id.as_str());

    let mut push = |kind, ids: Vec<String>, run_id: Option<&str>| {
        findings.extend(ids.into_iter().map(|image_id| Finding { kind, image_id, run_id: run_id.map(str::to_string) }));
    };

    if !annotations.is_empty() {
        let (missing, orphan) = diff_ids(manifest_ids(), annotations.iter().map(|a| a.image_id.as_str()));
        push(FindingKind::AnnotationMissing, missing, None);
        push(FindingKind::AnnotationOrphan, orphan, None);
    }

    if let Some(base) = baseline {
        let (missing, orphan) = diff_ids(manifest_ids(), base.ids());
        push(FindingKind::PredictionMissing, missing, Some(base.run_id()));
        push(FindingKind::PredictionOrphan, orphan, Some(base.run_id()));
    }

    for set in biased {
        let (missing, extra) = match baseline {
            Some(base) => diff_ids(base.ids(), set.ids()),
            None => diff_ids(manifest_ids(), set.ids()),
        };
        push(FindingKind::CoverageMissing, missing, Some(set.run_id()));
        push(FindingKind::CoverageExtra, extra, Some(set.run_id()));
    }

    ValidationReport { findings }
}
