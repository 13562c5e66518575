//! Parsers and writers for annotation, prediction, score, and manifest
//! files: the wire boundary to external detector and regressor models.
//!
//! Annotation and prediction files are plain text, one box per line in
//! normalized center format:
//!
//! ```text
//! class cx cy w h [confidence]
//! ```
//!
//! with the frozen class table 0 = PI .. 10 = WRIST. The hand side comes
//! from the file stem: `<id>_R` is a right hand, anything else is left.
//! Floats are written in shortest round-trip form, so parse(write(x)) = x.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::detect_eval::EvalReport;
use crate::fsutil::atomic_write;
use crate::model::{
    average_readers, BoundingBox, Gender, HandSide, JointClass, JointDetection, SharpScore, Side,
};

#[derive(Debug, Error)]
pub enum AnnotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("line {line}: field {field}: {msg}")]
    Field {
        line: usize,
        field: &'static str,
        msg: String,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error("duplicate id {0}")]
    Duplicate(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> AnnotError + '_ {
    move |source| AnnotError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Image id and hand side from a file stem: a trailing `_R` marks the right
/// hand; the stem (including any suffix) stays the image id.
pub fn side_from_stem(stem: &str) -> HandSide {
    if stem.ends_with("_R") {
        HandSide::Right
    } else {
        HandSide::Left
    }
}

fn parse_box_line(
    line_no: usize,
    line: &str,
    with_confidence: bool,
) -> Result<(JointClass, BoundingBox, Option<f64>), AnnotError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let expected = if with_confidence { 6 } else { 5 };
    if tokens.len() != expected {
        return Err(AnnotError::Line {
            line: line_no,
            msg: format!("expected {expected} fields, got {}", tokens.len()),
        });
    }
    let class_idx: usize = tokens[0].parse().map_err(|_| AnnotError::Line {
        line: line_no,
        msg: format!("class index {:?} is not an integer", tokens[0]),
    })?;
    let class = JointClass::from_index(class_idx).ok_or(AnnotError::Field {
        line: line_no,
        field: "class",
        msg: format!("index {class_idx} outside 0..=10"),
    })?;
    let mut vals = [0.0f64; 4];
    for (i, (field, tok)) in ["cx", "cy", "w", "h"].iter().zip(&tokens[1..5]).enumerate() {
        vals[i] = tok.parse().map_err(|_| AnnotError::Field {
            line: line_no,
            field,
            msg: format!("{tok:?} is not a number"),
        })?;
    }
    let bbox = BoundingBox::new(vals[0], vals[1], vals[2], vals[3]).map_err(|e| {
        AnnotError::Field {
            line: line_no,
            field: "bbox",
            msg: e.to_string(),
        }
    })?;
    let confidence = if with_confidence {
        let c: f64 = tokens[5].parse().map_err(|_| AnnotError::Field {
            line: line_no,
            field: "confidence",
            msg: format!("{:?} is not a number", tokens[5]),
        })?;
        if !c.is_finite() || !(0.0..=1.0).contains(&c) {
            return Err(AnnotError::Field {
                line: line_no,
                field: "confidence",
                msg: format!("{c} outside [0, 1]"),
            });
        }
        Some(c)
    } else {
        None
    };
    Ok((class, bbox, confidence))
}

fn parse_boxes<R: BufRead>(
    reader: R,
    image_id: &str,
    side: HandSide,
    with_confidence: bool,
) -> Result<Vec<JointDetection>, AnnotError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| AnnotError::Line {
            line: i + 1,
            msg: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let (class, bbox, confidence) = parse_box_line(i + 1, &line, with_confidence)?;
        out.push(JointDetection {
            image_id: image_id.to_string(),
            class,
            side,
            bbox,
            confidence,
        });
    }
    Ok(out)
}

/// Parse a ground-truth annotation file (`class cx cy w h` per line).
/// An empty file is a valid image with zero visible joints.
pub fn parse_annotations(path: &Path) -> Result<Vec<JointDetection>, AnnotError> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_boxes(
        BufReader::new(file),
        &stem,
        side_from_stem(&stem),
        false,
    )
}

/// Parse annotations from any reader, with the image identity supplied.
pub fn parse_annotations_reader<R: Read>(
    reader: R,
    image_id: &str,
    side: HandSide,
) -> Result<Vec<JointDetection>, AnnotError> {
    parse_boxes(BufReader::new(reader), image_id, side, false)
}

/// Parse a prediction file (`class cx cy w h confidence` per line).
pub fn parse_predictions(path: &Path) -> Result<Vec<JointDetection>, AnnotError> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_boxes(BufReader::new(file), &stem, side_from_stem(&stem), true)
}

/// Parse predictions from any reader, with the image identity supplied.
pub fn parse_predictions_reader<R: Read>(
    reader: R,
    image_id: &str,
    side: HandSide,
) -> Result<Vec<JointDetection>, AnnotError> {
    parse_boxes(BufReader::new(reader), image_id, side, true)
}

/// Serialize detections to the text format. Confidences are written when
/// every detection has one, and omitted when none has one.
pub fn format_detections(dets: &[JointDetection]) -> Result<String, AnnotError> {
    let with_conf = match (
        dets.iter().all(|d| d.confidence.is_some()),
        dets.iter().all(|d| d.confidence.is_none()),
    ) {
        (true, _) => !dets.is_empty(),
        (_, true) => false,
        _ => {
            return Err(AnnotError::Schema(
                "mixed presence of confidence across detections".into(),
            ))
        }
    };
    let mut out = String::new();
    for d in dets {
        let (cx, cy, w, h) = (d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h);
        write!(out, "{} {} {} {} {}", d.class.index(), cx, cy, w, h).unwrap();
        if with_conf {
            write!(out, " {}", d.confidence.unwrap()).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Write detections atomically to a text file.
pub fn write_detections(dets: &[JointDetection], path: &Path) -> Result<(), AnnotError> {
    let body = format_detections(dets)?;
    atomic_write(path, body.as_bytes()).map_err(io_err(path))
}

fn parse_opt_number(
    line: usize,
    field: &'static str,
    raw: &str,
) -> Result<Option<f64>, AnnotError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = raw.parse().map_err(|_| AnnotError::Field {
        line,
        field,
        msg: format!("{raw:?} is not a number"),
    })?;
    Ok(Some(v))
}

fn reader_to_int(line: usize, field: &'static str, v: f64) -> Result<i64, AnnotError> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(AnnotError::Field {
            line,
            field,
            msg: format!("reader score {v} is not an integer"),
        });
    }
    Ok(v as i64)
}

/// Parse a score CSV. Accepted headers:
///
/// - `id,tss`
/// - `id,reader_a,reader_b`
/// - `id,reader_a,reader_b,tss` (readers optional per row; when present the
///   tss column must equal their average)
pub fn parse_scores(path: &Path) -> Result<Vec<SharpScore>, AnnotError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_scores_reader(file)
}

pub fn parse_scores_reader<R: Read>(reader: R) -> Result<Vec<SharpScore>, AnnotError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    enum Form {
        Tss,
        Readers,
        Full,
    }
    let form = match headers
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["id", "tss"] => Form::Tss,
        ["id", "reader_a", "reader_b"] => Form::Readers,
        ["id", "reader_a", "reader_b", "tss"] => Form::Full,
        other => {
            return Err(AnnotError::Schema(format!(
                "expected header id,tss or id,reader_a,reader_b[,tss], got {other:?}"
            )))
        }
    };

    let mut out: Vec<SharpScore> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or("").trim();
        let id = get(0);
        if id.is_empty() {
            return Err(AnnotError::Field {
                line,
                field: "id",
                msg: "empty id".into(),
            });
        }
        if !seen.insert(id.to_string()) {
            return Err(AnnotError::Duplicate(id.to_string()));
        }
        let score = match form {
            Form::Tss => {
                let tss = parse_opt_number(line, "tss", get(1))?.ok_or(AnnotError::Field {
                    line,
                    field: "tss",
                    msg: "missing tss".into(),
                })?;
                SharpScore::from_tss(id, tss).map_err(|e| AnnotError::Field {
                    line,
                    field: "tss",
                    msg: e.to_string(),
                })?
            }
            Form::Readers | Form::Full => {
                let a = parse_opt_number(line, "reader_a", get(1))?;
                let b = parse_opt_number(line, "reader_b", get(2))?;
                let tss_col = if matches!(form, Form::Full) {
                    parse_opt_number(line, "tss", get(3))?
                } else {
                    None
                };
                match (a, b) {
                    (Some(a), Some(b)) => {
                        let ai = reader_to_int(line, "reader_a", a)?;
                        let bi = reader_to_int(line, "reader_b", b)?;
                        let tss = average_readers(ai, bi).map_err(|e| AnnotError::Field {
                            line,
                            field: "reader_a",
                            msg: e.to_string(),
                        })?;
                        if let Some(t) = tss_col {
                            if t != tss {
                                return Err(AnnotError::Field {
                                    line,
                                    field: "tss",
                                    msg: format!("tss {t} does not equal reader average {tss}"),
                                });
                            }
                        }
                        SharpScore {
                            image_id: id.to_string(),
                            reader_a: Some(ai as f64),
                            reader_b: Some(bi as f64),
                            tss,
                        }
                    }
                    (None, None) => {
                        let tss = tss_col.ok_or(AnnotError::Field {
                            line,
                            field: "tss",
                            msg: "row has neither readers nor tss".into(),
                        })?;
                        SharpScore::from_tss(id, tss).map_err(|e| AnnotError::Field {
                            line,
                            field: "tss",
                            msg: e.to_string(),
                        })?
                    }
                    _ => {
                        return Err(AnnotError::Field {
                            line,
                            field: "reader_b",
                            msg: "both reader scores are required together".into(),
                        })
                    }
                }
            }
        };
        out.push(score);
    }
    Ok(out)
}

/// Serialize scores in the full `id,reader_a,reader_b,tss` form.
pub fn format_scores(scores: &[SharpScore]) -> String {
    let mut out = String::from("id,reader_a,reader_b,tss\n");
    for s in scores {
        let fmt_opt = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.image_id,
            fmt_opt(s.reader_a),
            fmt_opt(s.reader_b),
            s.tss
        );
    }
    out
}

pub fn write_scores(scores: &[SharpScore], path: &Path) -> Result<(), AnnotError> {
    atomic_write(path, format_scores(scores).as_bytes()).map_err(io_err(path))
}

/// One manifest row; optional cells are empty in the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub id: String,
    pub path: String,
    pub age: Option<f32>,
    pub gender: Option<Gender>,
    pub side: Side,
    pub reader_a: Option<i64>,
    pub reader_b: Option<i64>,
    /// External orientation label in degrees; overrides the moment
    /// estimator during preprocessing.
    pub orientation_deg: Option<f64>,
}

impl ManifestRow {
    /// Ground-truth score from the readers, when both are present.
    pub fn sharp_score(&self) -> Option<Result<SharpScore, crate::model::ModelError>> {
        match (self.reader_a, self.reader_b) {
            (Some(a), Some(b)) => Some(SharpScore::from_readers(self.id.clone(), a, b)),
            _ => None,
        }
    }
}

/// Parse the dataset manifest CSV with header
/// `id,path,age,gender,side,reader_a,reader_b[,orientation_deg]`.
pub fn parse_manifest(path: &Path) -> Result<Vec<ManifestRow>, AnnotError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_manifest_reader(file)
}

pub fn parse_manifest_reader<R: Read>(reader: R) -> Result<Vec<ManifestRow>, AnnotError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let base = ["id", "path", "age", "gender", "side", "reader_a", "reader_b"];
    let with_orientation = match headers.iter().map(String::as_str).collect::<Vec<_>>() {
        h if h == base => false,
        h if h.len() == 8 && h[..7] == base && h[7] == "orientation_deg" => true,
        other => {
            return Err(AnnotError::Schema(format!(
                "expected header {},[orientation_deg], got {other:?}",
                base.join(",")
            )))
        }
    };

    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or("").trim().to_string();
        let id = get(0);
        if id.is_empty() {
            return Err(AnnotError::Field {
                line,
                field: "id",
                msg: "empty id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(AnnotError::Duplicate(id));
        }
        let gender = match get(3).to_ascii_lowercase().as_str() {
            "" => None,
            "female" => Some(Gender::Female),
            "male" => Some(Gender::Male),
            other => {
                return Err(AnnotError::Field {
                    line,
                    field: "gender",
                    msg: format!("unknown gender {other:?}"),
                })
            }
        };
        let side = match get(4).to_ascii_lowercase().as_str() {
            "left" => Side::Left,
            "right" => Side::Right,
            "both" => Side::Both,
            other => {
                return Err(AnnotError::Field {
                    line,
                    field: "side",
                    msg: format!("unknown side {other:?} (expected left/right/both)"),
                })
            }
        };
        let age = parse_opt_number(line, "age", &get(2))?.map(|v| v as f32);
        let reader_a = parse_opt_number(line, "reader_a", &get(5))?
            .map(|v| reader_to_int(line, "reader_a", v))
            .transpose()?;
        let reader_b = parse_opt_number(line, "reader_b", &get(6))?
            .map(|v| reader_to_int(line, "reader_b", v))
            .transpose()?;
        let orientation_deg = if with_orientation {
            let v = parse_opt_number(line, "orientation_deg", &get(7))?;
            if let Some(deg) = v {
                if !(0.0..180.0).contains(&deg) {
                    return Err(AnnotError::Field {
                        line,
                        field: "orientation_deg",
                        msg: format!("{deg} outside [0, 180)"),
                    });
                }
            }
            v
        } else {
            None
        };
        out.push(ManifestRow {
            id,
            path: get(1),
            age,
            gender,
            side,
            reader_a,
            reader_b,
            orientation_deg,
        });
    }
    Ok(out)
}

pub fn write_manifest(rows: &[ManifestRow], path: &Path) -> Result<(), AnnotError> {
    let mut out = String::from("id,path,age,gender,side,reader_a,reader_b,orientation_deg\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.id,
            r.path,
            r.age.map(|v| format!("{v}")).unwrap_or_default(),
            match r.gender {
                Some(Gender::Female) => "female",
                Some(Gender::Male) => "male",
                None => "",
            },
            match r.side {
                Side::Left => "left",
                Side::Right => "right",
                Side::Both => "both",
            },
            r.reader_a.map(|v| v.to_string()).unwrap_or_default(),
            r.reader_b.map(|v| v.to_string()).unwrap_or_default(),
            r.orientation_deg.map(|v| format!("{v}")).unwrap_or_default(),
        );
    }
    atomic_write(path, out.as_bytes()).map_err(io_err(path))
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Write an evaluation report with deterministic byte layout: keys sorted,
/// floats fixed to 6 decimals, atomic replace. The same report always
/// serializes to identical bytes.
pub fn write_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<(), AnnotError> {
    let body = match format {
        ReportFormat::Json => report.to_json_string(),
        ReportFormat::Csv => report.to_csv_string(),
    };
    atomic_write(path, body.as_bytes()).map_err(io_err(path))
}

/// Parse a report back from its JSON form.
pub fn parse_report(path: &Path) -> Result<EvalReport, AnnotError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    EvalReport::from_json_str(&text).map_err(|e| AnnotError::Schema(e.to_string()))
}
