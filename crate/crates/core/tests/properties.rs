//! Invariants checked with proptest.

use bias_audit_core::cbi::{prediction_shift, switched};
use bias_audit_core::compositor::{insert_artifact, Mask, PixelSource, RgbRaster};
use bias_audit_core::fidelity::{fid, precision_recall, EmbeddingSet, GaussianStats};
use bias_audit_core::model::{
    validate_join, ArtifactAnnotation, ClassLabel, FindingKind, HairKind, ImageRecord, PredictionRecord, PredictionSet, SourceKind,
};
use bias_audit_core::stats::{kappa, phi, pps_score, prevalence};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set(run: &str, probs: &[f64]) -> PredictionSet {
    let records = probs.iter().enumerate().map(|(i, p)| PredictionRecord::new(format!("r{i}"), *p).unwrap()).collect();
    PredictionSet::new(run, None, records).unwrap()
}

fn paired_probs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..60).prop_flat_map(|n| (prop::collection::vec(0.0..=1.0f64, n), prop::collection::vec(0.0..=1.0f64, n)))
}

fn raster(w: u32, h: u32) -> impl Strategy<Value = RgbRaster> {
    prop::collection::vec(any::<[u8; 3]>(), (w * h) as usize).prop_map(move |px| RgbRaster::new(w, h, px).unwrap())
}

proptest! {
    #[test]
    fn switched_identity_and_symmetry((a, b) in paired_probs()) {
        let (sa, sb) = (set("a", &a), set("b", &b));
        let same = switched(&sa, &sa).unwrap();
        prop_assert_eq!(same.switched, 0);
        let shift = prediction_shift(&sa, &sa).unwrap();
        prop_assert_eq!((shift.mean, shift.median), (0.0, 0.0));

        let fwd = switched(&sa, &sb).unwrap();
        let back = switched(&sb, &sa).unwrap();
        prop_assert_eq!(fwd.mal_to_ben, back.ben_to_mal);
        prop_assert_eq!(fwd.ben_to_mal, back.mal_to_ben);
        prop_assert_eq!(fwd.switched, back.switched);
        prop_assert!(fwd.switched <= a.len());

        let s1 = prediction_shift(&sa, &sb).unwrap();
        let s2 = prediction_shift(&sb, &sa).unwrap();
        prop_assert!((s1.mean - s2.mean).abs() < 1e-15);
        prop_assert_eq!(s1.median, s2.median);
        let max = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(s1.mean <= max + 1e-15);
        prop_assert!((0.0..=1.0).contains(&s1.mean) && (0.0..=1.0).contains(&s1.median));
    }

    #[test]
    fn phi_symmetric_and_bounded(pairs in prop::collection::vec(any::<(bool, bool)>(), 2..80)) {
        let x: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let xy = phi(&x, &y).unwrap();
        prop_assert_eq!(xy, phi(&y, &x).unwrap());
        if let Some(v) = xy {
            prop_assert!(v.abs() <= 1.0);
        }
        if x.iter().any(|&b| b) && x.iter().any(|&b| !b) {
            let self_phi = phi(&x, &x).unwrap().unwrap();
            prop_assert!((self_phi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_identity_and_symmetry(pairs in prop::collection::vec((0u32..4, 0u32..4), 1..60)) {
        let a: Vec<u32> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<u32> = pairs.iter().map(|p| p.1).collect();
        prop_assert_eq!(kappa(&a, &a).unwrap().kappa, 1.0);
        let ab = kappa(&a, &b).unwrap().kappa;
        let ba = kappa(&b, &a).unwrap().kappa;
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn insertion_is_idempotent_and_local(
        target in raster(8, 6),
        source in raster(8, 6),
        bits in prop::collection::vec(any::<bool>(), 48),
    ) {
        let mask = Mask::new(8, 6, bits.clone()).unwrap();
        let src = PixelSource::Image(source);
        let once = insert_artifact(&target, &src, &mask, 0).unwrap();
        let twice = insert_artifact(&once, &src, &mask, 0).unwrap();
        prop_assert_eq!(&once, &twice);
        for (i, set) in bits.iter().enumerate() {
            if !set {
                prop_assert_eq!(once.pixels()[i], target.pixels()[i]);
            }
        }
    }

    #[test]
    fn join_findings_mirror_when_sets_swap(
        left in prop::collection::btree_set("[a-f]{1,2}", 1..12),
        right in prop::collection::btree_set("[a-f]{1,2}", 1..12),
    ) {
        let to_set = |run: &str, ids: &std::collections::BTreeSet<String>| {
            PredictionSet::new(run, None, ids.iter().map(|id| PredictionRecord::new(id.clone(), 0.2).unwrap()).collect()).unwrap()
        };
        let (l, r) = (to_set("l", &left), to_set("r", &right));
        let fwd = validate_join(&[], &[], Some(&l), std::slice::from_ref(&r));
        let back = validate_join(&[], &[], Some(&r), std::slice::from_ref(&l));
        let coverage = |rep: &bias_audit_core::model::ValidationReport| {
            let mut v: Vec<(FindingKind, String)> = rep
                .findings
                .iter()
                .filter(|f| matches!(f.kind, FindingKind::CoverageMissing | FindingKind::CoverageExtra))
                .map(|f| (f.kind, f.image_id.clone()))
                .collect();
            v.sort();
            v
        };
        let mut mirrored: Vec<_> = coverage(&fwd).into_iter().map(|(k, id)| (k.mirrored(), id)).collect();
        mirrored.sort();
        prop_assert_eq!(mirrored, coverage(&back));
    }

    #[test]
    fn prevalence_ignores_row_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sources = [SourceKind::Real, SourceKind::GanConditional, SourceKind::GanUnconditional];
        let hairs = [HairKind::None, HairKind::Normal, HairKind::Dense, HairKind::Short];
        let mut manifest = Vec::new();
        let mut anns = Vec::new();
        for i in 0..40 {
            let id = format!("i{i}");
            let class = if rng.random_bool(0.5) { ClassLabel::Malignant } else { ClassLabel::Benign };
            manifest.push(ImageRecord::new(id.clone(), sources[rng.random_range(0..3)], class, format!("{id}.png")).unwrap());
            anns.push(ArtifactAnnotation::new(id, hairs[rng.random_range(0..4)], rng.random_range(0..3), rng.random_bool(0.3), rng.random_bool(0.2)).unwrap());
        }
        let t1 = prevalence(&manifest, &anns).unwrap();
        anns.reverse();
        manifest.swap(0, 39);
        prop_assert_eq!(t1, prevalence(&manifest, &anns).unwrap());
    }
}

#[test]
fn pps_of_independent_feature_is_near_zero() {
    let mut total = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let target: Vec<u32> = (0..400).map(|i| (i % 2) as u32).collect();
        let feature: Vec<u32> = (0..400).map(|_| rng.random_range(0..4)).collect();
        total += pps_score(&feature, &target, 4, seed).unwrap().pps;
    }
    assert!(total / 20.0 < 0.05, "mean pps {}", total / 20.0);
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(d, d) * 0.05
}

fn stats_of(mu: &nalgebra::DVector<f64>, sigma: &DMatrix<f64>) -> GaussianStats {
    GaussianStats::new(mu.as_slice().to_vec(), sigma.transpose().as_slice().to_vec()).unwrap()
}

#[test]
fn fid_symmetric_nonnegative_and_rotation_invariant() {
    for seed in 0..25u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let d = 2 + (seed as usize % 7);
        let mu_a = nalgebra::DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
        let mu_b = nalgebra::DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
        let sa = random_spd(&mut rng, d);
        let sb = random_spd(&mut rng, d);
        let (a, b) = (stats_of(&mu_a, &sa), stats_of(&mu_b, &sb));
        let ab = fid(&a, &b).unwrap();
        assert!((ab - fid(&b, &a).unwrap()).abs() < 1e-8);
        assert!(ab >= -1e-6);
        assert!(fid(&a, &a).unwrap().abs() <= 1e-6);

        // Rotating both embedding sets by Q maps (mu, S) to (Q mu, Q S Q^T).
        let q = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let ra = stats_of(&(&q * &mu_a), &(&q * &sa * q.transpose()));
        let rb = stats_of(&(&q * &mu_b), &(&q * &sb * q.transpose()));
        assert!((fid(&ra, &rb).unwrap() - ab).abs() < 1e-6);
    }
}

#[test]
fn precision_recall_self_is_perfect() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let rows: Vec<Vec<f32>> = (0..40).map(|_| (0..5).map(|_| rng.random_range(-1.0f32..1.0)).collect()).collect();
        let e = EmbeddingSet::from_rows(&rows).unwrap();
        let pr = precision_recall(&e, &e, 3).unwrap();
        assert_eq!((pr.precision, pr.recall), (1.0, 1.0));
    }
}
