use std::fs;
use std::path::Path;

use serde::Serialize;

use super::generate::CAPTION_TABLE_NAME;
use super::record::{ManifestHeader, SampleRecord};
use super::PipelineError;
use crate::annotate::validate_cot;
use crate::caption::{default_caption_table, load_caption_table, measure_region_differences, CaptionTable};
use crate::compositor::ImageBuffer;
use crate::mask::{region_masks, LandmarkSet81};
use crate::reward::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Schema,
    MissingFile,
    Invariant,
    KeywordSoundness,
    Cot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// 1-based line number in the manifest; the header is line 1.
    pub row: usize,
    pub id: Option<String>,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rows: usize,
    /// Keywords whose measure was recomputed from the stored images.
    pub keywords_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every row of a manifest: schema, referenced files, record
/// invariants, CoT sidecars, and that every stored caption's difference
/// measure, recomputed from the stored images, still exceeds its threshold.
pub fn validate_manifest(path: &Path) -> Result<ValidationReport, PipelineError> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut report = ValidationReport::default();
    let mut lines = text.lines().enumerate();

    let table = match lines.next() {
        None => {
            report.violations.push(Violation {
                row: 1,
                id: None,
                kind: ViolationKind::Schema,
                detail: "missing header line".into(),
            });
            return Ok(report);
        }
        Some((_, line)) => match serde_json::from_str::<ManifestHeader>(line) {
            Ok(h) => header_table(base, &h, &mut report),
            Err(e) => {
                report.violations.push(Violation {
                    row: 1,
                    id: None,
                    kind: ViolationKind::Schema,
                    detail: format!("header: {e}"),
                });
                default_caption_table().clone()
            }
        },
    };

    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.rows += 1;
        match serde_json::from_str::<SampleRecord>(line) {
            Ok(rec) => check_record(base, row, &rec, &table, &mut report),
            Err(e) => report.violations.push(Violation { row, id: None, kind: ViolationKind::Schema, detail: e.to_string() }),
        }
    }
    Ok(report)
}

fn header_table(base: &Path, header: &ManifestHeader, report: &mut ValidationReport) -> CaptionTable {
    let path = base.join(if header.caption_table.is_empty() { CAPTION_TABLE_NAME } else { &header.caption_table });
    let loaded = fs::File::open(&path).map_err(|e| e.to_string()).and_then(|f| load_caption_table(f).map_err(|e| e.to_string()));
    match loaded {
        Ok(t) if t.version == header.caption_table_version => t,
        Ok(t) => {
            report.violations.push(Violation {
                row: 1,
                id: None,
                kind: ViolationKind::Invariant,
                detail: format!("caption table version {} but header says {}", t.version, header.caption_table_version),
            });
            t
        }
        Err(e) => {
            report.violations.push(Violation {
                row: 1,
                id: None,
                kind: ViolationKind::MissingFile,
                detail: format!("caption table {}: {e}", path.display()),
            });
            default_caption_table().clone()
        }
    }
}

fn check_record(base: &Path, row: usize, rec: &SampleRecord, table: &CaptionTable, report: &mut ValidationReport) {
    let mut push = |kind, detail: String| {
        report.violations.push(Violation { row, id: Some(rec.id.clone()), kind, detail });
    };
    for problem in rec.invariant_problems() {
        push(ViolationKind::Invariant, problem);
    }
    let mut files = vec![("real image", Some(&rec.real_image_path)), ("landmarks", Some(&rec.landmarks_path))];
    files.push(("forged image", rec.forged_image_path.as_ref()));
    files.push(("mask", rec.mask_path.as_ref()));
    files.push(("cot", rec.cot.as_ref().map(|c| &c.path)));
    let mut missing = false;
    for (what, p) in files {
        if let Some(p) = p {
            if !base.join(p).is_file() {
                push(ViolationKind::MissingFile, format!("{what} {p} does not exist"));
                missing = true;
            }
        }
    }
    if missing {
        return;
    }

    if let Some(cot) = &rec.cot {
        match fs::read_to_string(base.join(&cot.path)) {
            Ok(text) => {
                if let Err(why) = validate_cot(&text, &rec.captions, rec.label) {
                    push(ViolationKind::Cot, why);
                }
            }
            Err(e) => push(ViolationKind::MissingFile, e.to_string()),
        }
    }

    if rec.label == Label::Fake {
        let (Some(forged), Some(combo)) = (&rec.forged_image_path, &rec.combo) else {
            return;
        };
        let recomputed = (|| -> Result<_, String> {
            let real = ImageBuffer::load_png(&base.join(&rec.real_image_path)).map_err(|e| e.to_string())?;
            let forged = ImageBuffer::load_png(&base.join(forged)).map_err(|e| e.to_string())?;
            let (lm, _) = LandmarkSet81::load(&base.join(&rec.landmarks_path)).map_err(|e| e.to_string())?;
            let masks = region_masks(&lm, combo).map_err(|e| e.to_string())?;
            measure_region_differences(&real, &forged, &masks).map_err(|e| e.to_string())
        })();
        let stats = match recomputed {
            Ok(s) => s,
            Err(e) => {
                push(ViolationKind::KeywordSoundness, format!("cannot recompute differences: {e}"));
                return;
            }
        };
        for kw in &rec.captions.keywords {
            report_keywords(&mut push, kw, &stats, table, rec);
        }
        report.keywords_checked += rec.captions.keywords.len();
    }
}

fn report_keywords(
    push: &mut impl FnMut(ViolationKind, String),
    kw: &crate::caption::Keyword,
    stats: &crate::caption::DiffStats,
    table: &CaptionTable,
    rec: &SampleRecord,
) {
    let measure = stats.get(kw.region, kw.factor);
    let intensity = rec.xi.as_ref().and_then(|x| x.intensity_of(kw.factor));
    let Some(entry) = table.lookup(kw.region, kw.factor, intensity) else {
        push(ViolationKind::KeywordSoundness, format!("no table entry for ({}, {})", kw.region, kw.factor.as_str()));
        return;
    };
    if !entry.captions.contains(&kw.phrase) {
        push(
            ViolationKind::KeywordSoundness,
            format!("{:?} is not a caption of the ({}, {}) entry", kw.phrase, kw.region, kw.factor.as_str()),
        );
    }
    let threshold = entry.threshold.max(kw.threshold);
    if !(measure > threshold) {
        push(
            ViolationKind::KeywordSoundness,
            format!(
                "{:?}: recomputed {} measure {measure} for {} does not exceed threshold {threshold}",
                kw.phrase,
                kw.factor.as_str(),
                kw.region
            ),
        );
    }
}
