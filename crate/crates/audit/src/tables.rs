//! Annotation and manifest CSV files.
//!
//! Annotations: `image_id,source,class,hair,ruler_count,frame,other` with an
//! optional `path` column (default `<image_id>.png`). Manifest:
//! `image_id,source,class,path`. Columns may come in any order; unknown
//! columns are ignored with a warning.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use bias_audit_core::model::{ArtifactAnnotation, ClassLabel, HairKind, ImageRecord, SourceKind};

use crate::error::{Error, Result};

pub const ANNOTATION_COLUMNS: [&str; 7] = ["image_id", "source", "class", "hair", "ruler_count", "frame", "other"];
pub const MANIFEST_COLUMNS: [&str; 4] = ["image_id", "source", "class", "path"];

/// Contents of an annotation file: one manifest record and one annotation per row.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationTable {
    pub records: Vec<ImageRecord>,
    pub annotations: Vec<ArtifactAnnotation>,
}

pub fn default_image_path(image_id: &str) -> String {
    format!("{image_id}.png")
}

struct Columns {
    index: Vec<usize>,
    path: Option<usize>,
}

fn columns(path: &Path, headers: &csv::StringRecord, required: &[&str], optional: &[&str]) -> Result<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut index = Vec::with_capacity(required.len());
    for name in required {
        index.push(find(name).ok_or_else(|| Error::parse(path, 1, format!("missing column `{name}`")))?);
    }
    for h in headers.iter() {
        let h = h.trim();
        if !required.contains(&h) && !optional.contains(&h) {
            log::warn!("{}: ignoring unknown column `{h}`", path.display());
        }
    }
    Ok(Columns { index, path: optional.first().and_then(|o| find(o)) })
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, line, format!("{other:?}")),
    }
}

fn flag(s: &str) -> std::result::Result<bool, String> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("expected 0 or 1, found `{s}`")),
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("{name}: {e}"))
}

pub fn load_annotations(path: &Path) -> Result<AnnotationTable> {
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = columns(path, &headers, &ANNOTATION_COLUMNS, &["path"])?;
    let mut table = AnnotationTable::default();
    let mut seen = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(cols.index[i]).unwrap_or("");
        let parsed = (|| -> std::result::Result<(ImageRecord, ArtifactAnnotation), String> {
            let id = field(0);
            let source: SourceKind = parse_field(field(1), "source")?;
            let class: ClassLabel = parse_field(field(2), "class")?;
            let hair: HairKind = parse_field(field(3), "hair")?;
            let rulers: u32 = parse_field(field(4), "ruler_count")?;
            let frame = flag(field(5)).map_err(|e| format!("frame: {e}"))?;
            let other = flag(field(6)).map_err(|e| format!("other: {e}"))?;
            let image_path = match cols.path.and_then(|i| row.get(i)).filter(|p| !p.is_empty()) {
                Some(p) => p.to_string(),
                None => default_image_path(id),
            };
            let record = ImageRecord::new(id, source, class, image_path).map_err(|e| e.to_string())?;
            let ann = ArtifactAnnotation::new(id, hair, rulers, frame, other).map_err(|e| e.to_string())?;
            Ok((record, ann))
        })()
        .map_err(|m| Error::parse(path, line, m))?;
        if !seen.insert(parsed.0.image_id.clone()) {
            return Err(Error::parse(path, line, format!("duplicate image_id `{}`", parsed.0.image_id)));
        }
        table.records.push(parsed.0);
        table.annotations.push(parsed.1);
    }
    Ok(table)
}

/// Writes the canonical column order. The `path` column is only written when
/// some record deviates from the default path.
pub fn write_annotations(path: &Path, table: &AnnotationTable) -> Result<()> {
    if table.records.len() != table.annotations.len() {
        return Err(Error::Validation("records and annotations differ in length".into()));
    }
    let with_path = table.records.iter().any(|r| r.path != default_image_path(&r.image_id));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<&str> = ANNOTATION_COLUMNS.to_vec();
    if with_path {
        header.push("path");
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (r, a) in table.records.iter().zip(&table.annotations) {
        if r.image_id != a.image_id {
            return Err(Error::Validation(format!("record `{}` paired with annotation `{}`", r.image_id, a.image_id)));
        }
        let rulers = a.ruler_count.to_string();
        let mut row = vec![
            r.image_id.as_str(),
            r.source.as_str(),
            r.class.as_str(),
            a.hair.as_str(),
            rulers.as_str(),
            if a.frame { "1" } else { "0" },
            if a.other { "1" } else { "0" },
        ];
        if with_path {
            row.push(r.path.as_str());
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: &Path) -> Result<Vec<ImageRecord>> {
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = columns(path, &headers, &MANIFEST_COLUMNS, &[])?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(cols.index[i]).unwrap_or("");
        let record = (|| -> std::result::Result<ImageRecord, String> {
            let source: SourceKind = parse_field(field(1), "source")?;
            let class: ClassLabel = parse_field(field(2), "class")?;
            ImageRecord::new(field(0), source, class, field(3)).map_err(|e| e.to_string())
        })()
        .map_err(|m| Error::parse(path, line, m))?;
        if !seen.insert(record.image_id.clone()) {
            return Err(Error::parse(path, line, format!("duplicate image_id `{}`", record.image_id)));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, records: &[ImageRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(MANIFEST_COLUMNS).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.write_record([r.image_id.as_str(), r.source.as_str(), r.class.as_str(), r.path.as_str()]).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
