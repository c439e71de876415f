//! Counterfactual bias insertion metrics.
//!
//! A baseline [`PredictionSet`] (clean images) is compared against one set per
//! inserted bias variant. Per variant we count label flips in each direction,
//! measure the absolute probability shift and the F1 score on the biased
//! images; [`aggregate_family`] folds the five variants of a family into the
//! row layout of the published CBI table.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{BiasFamily, BiasTag, ClassLabel, PredictionSet};
use crate::util::{mean, median, sample_std};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SwitchCounts {
    pub switched: usize,
    pub mal_to_ben: usize,
    pub ben_to_mal: usize,
}

/// Counts predictions whose label flips between `baseline` and `biased`.
pub fn switched(baseline: &PredictionSet, biased: &PredictionSet) -> Result<SwitchCounts> {
    let mut counts = SwitchCounts::default();
    for (before, after) in baseline.pair_with(biased)? {
        match (before.predicted, after.predicted) {
            (ClassLabel::Malignant, ClassLabel::Benign) => counts.mal_to_ben += 1,
            (ClassLabel::Benign, ClassLabel::Malignant) => counts.ben_to_mal += 1,
            _ => {}
        }
    }
    counts.switched = counts.mal_to_ben + counts.ben_to_mal;
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictionShift {
    pub mean: f64,
    pub median: f64,
}

/// Mean and median of `|p_biased - p_baseline|` over all images.
pub fn prediction_shift(baseline: &PredictionSet, biased: &PredictionSet) -> Result<PredictionShift> {
    let shifts: Vec<f64> = baseline
        .pair_with(biased)?
        .into_iter()
        .map(|(before, after)| libm::fabs(after.p_malignant - before.p_malignant))
        .collect();
    Ok(PredictionShift { mean: mean(&shifts), median: median(&shifts) })
}

/// Binary F1 in percent with malignant as the positive class.
/// Zero when precision and recall are both zero.
pub fn f1_score(predictions: &PredictionSet, labels: &BTreeMap<String, ClassLabel>) -> Result<f64> {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for r in predictions.records() {
        let truth = *labels.get(&r.image_id).ok_or_else(|| Error::MissingLabel(r.image_id.clone()))?;
        match (r.predicted, truth) {
            (ClassLabel::Malignant, ClassLabel::Malignant) => tp += 1,
            (ClassLabel::Malignant, ClassLabel::Benign) => fp += 1,
            (ClassLabel::Benign, ClassLabel::Malignant) => fn_ += 1,
            (ClassLabel::Benign, ClassLabel::Benign) => {}
        }
    }
    // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN); both vanish together.
    let denom = 2 * tp + fp + fn_;
    if tp == 0 || denom == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * (2 * tp) as f64 / denom as f64)
}

/// CBI metrics of a single bias variant.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantCbi {
    pub family: BiasFamily,
    pub variant_id: u8,
    pub switched: usize,
    pub mal_to_ben: usize,
    pub ben_to_mal: usize,
    pub mean_shift: f64,
    pub median_shift: f64,
    /// F1 (%) on the biased images.
    pub f1_biased: f64,
}

impl VariantCbi {
    pub fn compute(tag: BiasTag, baseline: &PredictionSet, biased: &PredictionSet, labels: &BTreeMap<String, ClassLabel>) -> Result<Self> {
        let counts = switched(baseline, biased)?;
        let shift = prediction_shift(baseline, biased)?;
        Ok(VariantCbi {
            family: tag.family,
            variant_id: tag.variant.get(),
            switched: counts.switched,
            mal_to_ben: counts.mal_to_ben,
            ben_to_mal: counts.ben_to_mal,
            mean_shift: shift.mean,
            median_shift: shift.median,
            f1_biased: f1_score(biased, labels)?,
        })
    }
}

/// One family row of the CBI table.
#[derive(Debug, Clone, PartialEq)]
pub struct CbiFamilyResult {
    pub family: BiasFamily,
    pub variants: usize,
    pub switched_mean: f64,
    pub switched_std: f64,
    pub switched_median: f64,
    pub mal_to_ben_mean: f64,
    pub mal_to_ben_pct: f64,
    pub ben_to_mal_mean: f64,
    pub ben_to_mal_pct: f64,
    /// Baseline-predicted malignant count, the denominator of `mal_to_ben_pct`.
    pub baseline_malignant: usize,
    /// Baseline-predicted benign count, the denominator of `ben_to_mal_pct`.
    pub baseline_benign: usize,
    pub f1_clean: f64,
    pub f1_biased_mean: f64,
    pub f1_biased_std: f64,
    pub f1_mean: f64,
}

/// Mean of the clean and biased F1 scores.
pub fn f1_family_mean(f1_clean: f64, f1_biased_mean: f64) -> f64 {
    (f1_clean + f1_biased_mean) / 2.0
}

fn pct(count: f64, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        100.0 * count / denom as f64
    }
}

/// Folds per-variant results of one family into a table row.
///
/// Standard deviations are sample deviations (n - 1) and are 0 for a single
/// variant. Directional percentages divide by the number of baseline
/// predictions in the source class.
pub fn aggregate_family(f1_clean: f64, per_variant: &[VariantCbi], baseline: &PredictionSet) -> Result<CbiFamilyResult> {
    let first = per_variant.first().ok_or(Error::NoVariants)?;
    if let Some(other) = per_variant.iter().find(|v| v.family != first.family) {
        return Err(Error::MixedFamilies(first.family, other.family));
    }

    let column = |f: fn(&VariantCbi) -> f64| per_variant.iter().map(f).collect::<Vec<f64>>();
    let switched = column(|v| v.switched as f64);
    let mal_to_ben = column(|v| v.mal_to_ben as f64);
    let ben_to_mal = column(|v| v.ben_to_mal as f64);
    let f1 = column(|v| v.f1_biased);

    let baseline_malignant = baseline.count_predicted(ClassLabel::Malignant);
    let baseline_benign = baseline.count_predicted(ClassLabel::Benign);
    let mal_to_ben_mean = mean(&mal_to_ben);
    let ben_to_mal_mean = mean(&ben_to_mal);
    let f1_biased_mean = mean(&f1);

    Ok(CbiFamilyResult {
        family: first.family,
        variants: per_variant.len(),
        switched_mean: mean(&switched),
        switched_std: sample_std(&switched),
        switched_median: median(&switched),
        mal_to_ben_mean,
        mal_to_ben_pct: pct(mal_to_ben_mean, baseline_malignant),
        ben_to_mal_mean,
        ben_to_mal_pct: pct(ben_to_mal_mean, baseline_benign),
        baseline_malignant,
        baseline_benign,
        f1_clean,
        f1_biased_mean,
        f1_biased_std: sample_std(&f1),
        f1_mean: f1_family_mean(f1_clean, f1_biased_mean),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PredictionRecord, VariantId};
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn set(run: &str, probs: &[f64]) -> PredictionSet {
        let records = probs.iter().enumerate().map(|(i, p)| PredictionRecord::new(format!("img{i}"), *p).unwrap()).collect();
        PredictionSet::new(run, None, records).unwrap()
    }

    fn variant(family: BiasFamily, id: u8, switched: usize) -> VariantCbi {
        VariantCbi {
            family,
            variant_id: id,
            switched,
            mal_to_ben: switched / 2,
            ben_to_mal: switched - switched / 2,
            mean_shift: 0.0,
            median_shift: 0.0,
            f1_biased: 80.0,
        }
    }

    #[test]
    fn identical_sets_do_not_switch() {
        let b = set("b", &[0.1, 0.7, 0.5]);
        assert_eq!(switched(&b, &b).unwrap(), SwitchCounts::default());
        assert_eq!(prediction_shift(&b, &b).unwrap(), PredictionShift { mean: 0.0, median: 0.0 });
    }

    #[test]
    fn three_record_switch_example() {
        let base = set("b", &[0.9, 0.1, 0.6]);
        let biased = set("x", &[0.1, 0.9, 0.55]);
        assert_eq!(switched(&base, &biased).unwrap(), SwitchCounts { switched: 2, mal_to_ben: 1, ben_to_mal: 1 });
    }

    #[test]
    fn shift_two_values() {
        let base = set("b", &[0.2, 0.5]);
        let biased = set("x", &[0.3, 0.8]);
        let s = prediction_shift(&base, &biased).unwrap();
        assert!((s.mean - 0.2).abs() < 1e-12);
        assert!((s.median - 0.2).abs() < 1e-12);
    }

    #[test]
    fn id_mismatch_is_an_error() {
        let a = set("a", &[0.1, 0.2]);
        let b = set("b", &[0.1]);
        assert!(matches!(switched(&a, &b), Err(Error::IdMismatch { .. })));
        assert!(matches!(prediction_shift(&a, &b), Err(Error::IdMismatch { .. })));
    }

    #[test]
    fn f1_examples() {
        let preds = set("p", &[0.9, 0.1, 0.8, 0.2]);
        let mut labels = BTreeMap::new();
        for (i, c) in [ClassLabel::Malignant, ClassLabel::Benign, ClassLabel::Malignant, ClassLabel::Benign].iter().enumerate() {
            labels.insert(format!("img{i}"), *c);
        }
        assert_eq!(f1_score(&preds, &labels).unwrap(), 100.0);

        // TP=1, FP=1, FN=1
        let preds = set("p", &[0.9, 0.9, 0.1]);
        let mut labels = BTreeMap::new();
        labels.insert("img0".to_string(), ClassLabel::Malignant);
        labels.insert("img1".to_string(), ClassLabel::Benign);
        labels.insert("img2".to_string(), ClassLabel::Malignant);
        assert!((f1_score(&preds, &labels).unwrap() - 50.0).abs() < 1e-12);

        labels.remove("img2");
        assert_eq!(f1_score(&preds, &labels), Err(Error::MissingLabel("img2".into())));
    }

    #[test]
    fn f1_zero_when_no_positives_hit() {
        let preds = set("p", &[0.1, 0.1]);
        let labels: BTreeMap<_, _> = [("img0".to_string(), ClassLabel::Malignant), ("img1".to_string(), ClassLabel::Benign)].into();
        assert_eq!(f1_score(&preds, &labels).unwrap(), 0.0);
    }

    #[test]
    fn family_mean_matches_published_frame_real() {
        assert!((f1_family_mean(91.99, 88.97) - 90.48).abs() < 0.01);
    }

    #[test]
    fn single_variant_degenerates() {
        let base = set("b", &[0.9, 0.1]);
        let r = aggregate_family(90.0, &[variant(BiasFamily::Ruler, 1, 7)], &base).unwrap();
        assert_eq!(r.switched_mean, 7.0);
        assert_eq!(r.switched_median, 7.0);
        assert_eq!(r.switched_std, 0.0);
        assert_eq!(r.f1_biased_std, 0.0);
    }

    #[test]
    fn five_variant_aggregate() {
        // mean 129, deviations -78,-52,0,51,79 -> ss 6084+2704+0+2601+6241 = 17630
        let base = set("b", &[0.9, 0.9, 0.1, 0.1, 0.1]);
        let vs: Vec<_> = [51, 77, 129, 180, 208].iter().enumerate().map(|(i, s)| variant(BiasFamily::Frame, i as u8 + 1, *s)).collect();
        let r = aggregate_family(91.99, &vs, &base).unwrap();
        assert_eq!(r.switched_mean, 129.0);
        assert_eq!(r.switched_median, 129.0);
        assert!((r.switched_std - (17630.0f64 / 4.0).sqrt()).abs() < 1e-9);
        assert_eq!(r.baseline_malignant, 2);
        assert_eq!(r.baseline_benign, 3);
        // mal_to_ben per variant: 25,38,64,90,104 -> mean 64.2
        assert!((r.mal_to_ben_mean - 64.2).abs() < 1e-12);
        assert!((r.mal_to_ben_pct - 3210.0).abs() < 1e-9);
        assert!((r.f1_mean - (91.99 + 80.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_rejects_mixed_and_empty() {
        let base = set("b", &[0.9]);
        let vs = vec![variant(BiasFamily::Frame, 1, 3), variant(BiasFamily::Ruler, 1, 3)];
        assert_eq!(aggregate_family(90.0, &vs, &base), Err(Error::MixedFamilies(BiasFamily::Frame, BiasFamily::Ruler)));
        assert_eq!(aggregate_family(90.0, &[], &base), Err(Error::NoVariants));
    }

    #[test]
    fn variant_compute_wires_everything() {
        let base = set("b", &[0.9, 0.1, 0.6]);
        let biased = set("x", &[0.1, 0.9, 0.55]);
        let labels: BTreeMap<_, _> = (0..3).map(|i| (format!("img{i}"), ClassLabel::Malignant)).collect();
        let tag = BiasTag { family: BiasFamily::HairShort, variant: VariantId::new(3).unwrap() };
        let v = VariantCbi::compute(tag, &base, &biased, &labels).unwrap();
        assert_eq!((v.switched, v.mal_to_ben, v.ben_to_mal), (2, 1, 1));
        assert_eq!(v.variant_id, 3);
        // biased: TP=2 (img1, img2), FN=1
        assert!((v.f1_biased - 80.0).abs() < 1e-9);
        assert!((v.mean_shift - (0.8 + 0.8 + 0.05) / 3.0).abs() < 1e-12);
    }
}
