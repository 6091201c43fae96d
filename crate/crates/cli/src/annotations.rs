//! Text annotation and detection files.
//!
//! Annotations are one polygon per line: ICDAR 2015 style
//! `x1,y1,...,x4,y4,transcription` or CTW1500 style with 28 integers
//! (14 points) and an optional transcription. A transcription of `###`
//! marks a don't-care region.
//!
//! Detections are comma-separated vertex coordinates with an optional
//! trailing score (present when the field count is odd).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use kernelexpand::{DetectedInstance, GtInstance, Point2, Polygon};

use crate::error::{CliError, Result};
use crate::fsutil::{image_id, list_files, read_text};

pub const IGNORE_MARK: &str = "###";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationFormat {
    Icdar15,
    Ctw1500,
}

impl AnnotationFormat {
    pub fn coords(self) -> usize {
        match self {
            Self::Icdar15 => 8,
            Self::Ctw1500 => 28,
        }
    }
}

impl FromStr for AnnotationFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "icdar15" => Ok(Self::Icdar15),
            "ctw1500" => Ok(Self::Ctw1500),
            other => Err(format!(
                "unknown format {other:?} (expected icdar15 or ctw1500)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub instances: Vec<GtInstance>,
}

/// A parse failure on 1-based `line`; the caller adds the file path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub msg: String,
}

impl LineError {
    fn new(line: usize, msg: impl Into<String>) -> Self {
        Self {
            line,
            msg: msg.into(),
        }
    }

    pub fn at(self, path: &Path) -> CliError {
        CliError::Parse {
            path: path.to_path_buf(),
            line: self.line,
            msg: self.msg,
        }
    }
}

/// Non-empty lines with their 1-based numbers, BOM and `\r` stripped.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn polygon_from_ints(line: usize, fields: &[&str]) -> std::result::Result<Polygon, LineError> {
    let mut pts = Vec::with_capacity(fields.len() / 2);
    for pair in fields.chunks_exact(2) {
        let mut xy = [0.0; 2];
        for (v, f) in xy.iter_mut().zip(pair) {
            let n: i64 = f.trim().parse().map_err(|_| {
                LineError::new(line, format!("coordinate {:?} is not an integer", f.trim()))
            })?;
            *v = n as f64;
        }
        pts.push(Point2::new(xy[0], xy[1]));
    }
    Polygon::new(pts).map_err(|e| LineError::new(line, format!("invalid polygon: {e}")))
}

fn instance(poly: Polygon, transcription: &str) -> GtInstance {
    if transcription.trim() == IGNORE_MARK {
        GtInstance::ignored(poly)
    } else {
        GtInstance::new(poly)
    }
}

pub fn parse_icdar15(text: &str) -> std::result::Result<Vec<GtInstance>, LineError> {
    lines(text)
        .map(|(n, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() < 8 {
                return Err(LineError::new(
                    n,
                    format!(
                        "expected 8 coordinates and a transcription, found {} fields",
                        fields.len()
                    ),
                ));
            }
            let poly = polygon_from_ints(n, &fields[..8])?;
            Ok(instance(poly, &fields[8..].join(",")))
        })
        .collect()
}

pub fn parse_ctw1500(text: &str) -> std::result::Result<Vec<GtInstance>, LineError> {
    lines(text)
        .map(|(n, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() < 28 {
                return Err(LineError::new(
                    n,
                    format!("expected 28 coordinates, found {}", fields.len()),
                ));
            }
            let poly = polygon_from_ints(n, &fields[..28])?;
            Ok(instance(poly, &fields[28..].join(",")))
        })
        .collect()
}

pub fn parse_annotation(
    text: &str,
    format: AnnotationFormat,
) -> std::result::Result<Vec<GtInstance>, LineError> {
    match format {
        AnnotationFormat::Icdar15 => parse_icdar15(text),
        AnnotationFormat::Ctw1500 => parse_ctw1500(text),
    }
}

/// Every `*.txt` annotation in `dir`, sorted by image id.
pub fn read_annotation_dir(dir: &Path, format: AnnotationFormat) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for path in list_files(dir, ".txt")? {
        let text = read_text(&path)?;
        let instances = parse_annotation(&text, format).map_err(|e| e.at(&path))?;
        out.push(AnnotationRecord {
            image_id: image_id(&path, ".txt"),
            instances,
        });
    }
    out.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(out)
}

/// Annotation lines for `polys` in `format`, each with `transcription`.
pub fn format_annotation(
    polys: &[Polygon],
    format: AnnotationFormat,
    transcription: &str,
) -> Result<String> {
    let mut out = String::new();
    for p in polys {
        if 2 * p.len() != format.coords() {
            return Err(CliError::Invalid(format!(
                "{}-vertex polygon cannot be written as {format:?}",
                p.len()
            )));
        }
        let coords: Vec<String> = p
            .vertices()
            .iter()
            .flat_map(|v| [v.x, v.y])
            .map(|c| format!("{}", c.round() as i64))
            .collect();
        writeln!(out, "{},{transcription}", coords.join(",")).unwrap();
    }
    Ok(out)
}

pub fn format_detections(dets: &[DetectedInstance]) -> String {
    let mut out = String::new();
    for d in dets {
        let coords: Vec<String> = d
            .polygon
            .vertices()
            .iter()
            .flat_map(|v| [v.x, v.y])
            .map(|c| format!("{c}"))
            .collect();
        writeln!(out, "{},{:.6}", coords.join(","), d.score).unwrap();
    }
    out
}

/// Parses detection lines. An even field count means no score (taken as
/// 1.0); an odd count means the last field is the score.
pub fn parse_detections(text: &str) -> std::result::Result<Vec<DetectedInstance>, LineError> {
    lines(text)
        .map(|(n, l)| {
            let vals = l
                .split(',')
                .map(|f| {
                    let f = f.trim();
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| LineError::new(n, format!("field {f:?} is not a number")))
                })
                .collect::<std::result::Result<Vec<f64>, _>>()?;
            let (coords, score) = if vals.len() % 2 == 1 {
                (&vals[..vals.len() - 1], vals[vals.len() - 1])
            } else {
                (&vals[..], 1.0)
            };
            if coords.len() < 6 {
                return Err(LineError::new(
                    n,
                    format!(
                        "expected at least 3 vertices, found {} values",
                        coords.len()
                    ),
                ));
            }
            let pts = coords
                .chunks_exact(2)
                .map(|c| Point2::new(c[0], c[1]))
                .collect();
            let polygon = Polygon::new(pts)
                .map_err(|e| LineError::new(n, format!("invalid polygon: {e}")))?;
            Ok(DetectedInstance { polygon, score })
        })
        .collect()
}
