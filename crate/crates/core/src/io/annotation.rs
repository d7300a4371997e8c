//! Annotation files: one line per frame, `<frame> <label> <high_motion>`,
//! with `high_motion` written as `0` or `1`. Lines starting with `#` are
//! comments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::synth::{SegmentAnnotation, JITTER_RNG};

pub fn annotation_to_text(ann: &SegmentAnnotation) -> String {
    let mut out = format!("# rng={JITTER_RNG}\n# frame label high_motion\n");
    for (t, (label, high)) in ann.labels.iter().zip(&ann.high_motion).enumerate() {
        writeln!(out, "{t} {label} {}", u8::from(*high)).unwrap();
    }
    out
}

pub fn parse_annotation(text: &str, origin: &Path) -> Result<SegmentAnnotation> {
    let mut labels = Vec::new();
    let mut high_motion = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::format(origin, format!("line {}: {what}", n + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [frame, label, high] = fields[..] else {
            return Err(bad("expected `<frame> <label> <0|1>`"));
        };
        if frame.parse::<usize>().ok() != Some(labels.len()) {
            return Err(bad("frames must be numbered consecutively from 0"));
        }
        let high = match high {
            "0" => false,
            "1" => true,
            _ => return Err(bad("high_motion must be 0 or 1")),
        };
        labels.push(label.to_string());
        high_motion.push(high);
    }
    Ok(SegmentAnnotation {
        labels,
        high_motion,
    })
}

pub fn write_annotation(ann: &SegmentAnnotation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, annotation_to_text(ann)).map_err(|e| Error::io(path, e))
}

pub fn read_annotation(path: impl AsRef<Path>) -> Result<SegmentAnnotation> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotation(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let ann = SegmentAnnotation {
            labels: vec!["A".into(), "transition".into(), "B".into()],
            high_motion: vec![false, true, false],
        };
        let text = annotation_to_text(&ann);
        assert!(text.contains("1 transition 1\n"));
        assert_eq!(parse_annotation(&text, Path::new("a.ann")).unwrap(), ann);
    }

    #[test]
    fn rejects_gaps_and_bad_flags() {
        assert!(parse_annotation("0 A 0\n2 B 0\n", Path::new("a")).is_err());
        assert!(parse_annotation("0 A yes\n", Path::new("a")).is_err());
        assert!(parse_annotation("0 A\n", Path::new("a")).is_err());
    }
}
