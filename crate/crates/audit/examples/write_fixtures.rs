//! Regenerates the shipped fixtures under `crates/audit/fixtures`:
//! the canonical 25 masks at 256x256 and an annotation file whose group
//! counts equal the published prevalence table.
//!
//! cargo run -p bias-audit --example write_fixtures -- crates/audit/fixtures

use std::path::PathBuf;

use bias_audit::masks::write_variants;
use bias_audit::tables::{default_image_path, write_annotations, AnnotationTable};
use bias_audit_core::compositor::fixture::canonical_variants;
use bias_audit_core::model::{ArtifactAnnotation, ClassLabel, HairKind, ImageRecord, SourceKind};

/// hair normal, dense, short, ruler, frame, other, none, total
const COUNTS: [(SourceKind, ClassLabel, [usize; 8]); 6] = [
    (SourceKind::Real, ClassLabel::Benign, [467, 110, 45, 211, 57, 201, 269, 1000]),
    (SourceKind::Real, ClassLabel::Malignant, [444, 50, 51, 287, 251, 402, 141, 1000]),
    (SourceKind::GanConditional, ClassLabel::Benign, [319, 57, 8, 186, 84, 106, 352, 1000]),
    (SourceKind::GanConditional, ClassLabel::Malignant, [223, 29, 8, 110, 365, 128, 328, 1000]),
    (SourceKind::GanUnconditional, ClassLabel::Benign, [190, 43, 4, 94, 78, 257, 412, 1000]),
    (SourceKind::GanUnconditional, ClassLabel::Malignant, [234, 40, 16, 41, 381, 197, 289, 1000]),
];

/// Lays artifacts over the `total - none` artifact-bearing images: hair kinds
/// take consecutive slots, then ruler, frame and other continue cyclically,
/// so every bearing image gets at least one artifact and no flag repeats.
fn group(source: SourceKind, class: ClassLabel, c: [usize; 8], table: &mut AnnotationTable) {
    let [hn, hd, hs, ruler, frame, other, none, total] = c;
    let any = total - none;
    assert!(hn + hd + hs <= any && ruler <= any && frame <= any && other <= any);
    assert!(hn + hd + hs + ruler + frame + other >= any, "cannot cover every bearing image");
    let mut hair = vec![HairKind::None; total];
    let mut flags = vec![[false; 3]; total];
    for (i, h) in hair.iter_mut().enumerate().take(hn + hd + hs) {
        *h = if i < hn { HairKind::Normal } else if i < hn + hd { HairKind::Dense } else { HairKind::Short };
    }
    let mut cursor = hn + hd + hs;
    for (k, n) in [ruler, frame, other].into_iter().enumerate() {
        for j in 0..n {
            flags[(cursor + j) % any][k] = true;
        }
        cursor += n;
    }
    for i in 0..total {
        let id = format!("{}_{}_{i:04}", source.as_str(), class.as_str());
        // some generated images show two rulers; they still count once
        let rulers = if flags[i][0] { 1 + (source == SourceKind::GanConditional && i % 25 == 0) as u32 } else { 0 };
        table.records.push(ImageRecord::new(id.clone(), source, class, default_image_path(&id)).unwrap());
        table.annotations.push(ArtifactAnnotation::new(id, hair[i], rulers, flags[i][1], flags[i][2]).unwrap());
    }
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).expect("usage: write_fixtures <dir>"));
    std::fs::create_dir_all(&dir).unwrap();
    write_variants(&dir.join("masks"), &canonical_variants(256).unwrap()).unwrap();
    let mut table = AnnotationTable::default();
    for (s, c, counts) in COUNTS {
        group(s, c, counts, &mut table);
    }
    write_annotations(&dir.join("prevalence_annotations.csv"), &table).unwrap();
    println!("wrote fixtures to {}", dir.display());
}
