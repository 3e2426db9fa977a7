//! System-output files: tab-separated, one segment per line, 11 in-domain
//! posteriors in label-id order.

use std::fs;
use std::path::Path;

use segtopic_core::corpus::{TopicLabel, NUM_IN_DOMAIN};
use segtopic_core::eval::{SegmentPosteriors, SystemOutput};

use crate::error::{CliError, Result};
use crate::float;

pub const OUTPUT_VERSION: u32 = 1;
pub const OUTPUT_HEADER: &str = "# segtopic-output 1";

fn column_header() -> String {
    let mut cols = vec!["doc_id".to_string(), "segment_id".to_string()];
    cols.extend(TopicLabel::in_domain().map(|l| l.name().to_string()));
    cols.join("\t")
}

pub fn output_to_string(out: &SystemOutput) -> String {
    let mut s = format!("{OUTPUT_HEADER}\n{}\n", column_header());
    for r in &out.records {
        s.push_str(&r.doc_id);
        s.push('\t');
        s.push_str(&r.segment_id);
        for p in r.posteriors {
            s.push('\t');
            s.push_str(&float::fmt(p));
        }
        s.push('\n');
    }
    s
}

pub fn parse_output(text: &str, origin: &Path) -> Result<SystemOutput> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, OUTPUT_HEADER)) => {}
        _ => return Err(CliError::parse(origin, 1, format!("expected {OUTPUT_HEADER:?}"))),
    }
    match lines.next() {
        Some((_, h)) if h == column_header() => {}
        _ => return Err(CliError::parse(origin, 2, "unexpected column header")),
    }
    let mut records = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 + NUM_IN_DOMAIN {
            return Err(CliError::parse(
                origin,
                n,
                format!("expected {} fields, found {}", 2 + NUM_IN_DOMAIN, fields.len()),
            ));
        }
        let mut posteriors = [0.0; NUM_IN_DOMAIN];
        for (dst, f) in posteriors.iter_mut().zip(&fields[2..]) {
            let v = float::parse(f).map_err(|m| CliError::parse(origin, n, m))?;
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::parse(origin, n, format!("posterior {v} outside (0, 1)")));
            }
            *dst = v;
        }
        records.push(SegmentPosteriors {
            doc_id: fields[0].into(),
            segment_id: fields[1].into(),
            posteriors,
        });
    }
    Ok(SystemOutput { records })
}

pub fn read_output(path: &Path) -> Result<SystemOutput> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_output(&text, path)
}

pub fn write_output(path: &Path, out: &SystemOutput) -> Result<()> {
    fs::write(path, output_to_string(out)).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_errors() {
        let out = SystemOutput {
            records: vec![SegmentPosteriors {
                doc_id: "d".into(),
                segment_id: "d_s000".into(),
                posteriors: [0.1, 0.2, 1.0 / 3.0, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99, 1e-9],
            }],
        };
        let text = output_to_string(&out);
        assert_eq!(parse_output(&text, Path::new("o")).unwrap(), out);
        let bad = text.replace("\t5.0000000000000000e-1", "");
        assert!(parse_output(&bad, Path::new("o")).unwrap_err().to_string().starts_with("o:3:"));
        let bad = text.replace("5.0000000000000000e-1", "1.5");
        assert!(parse_output(&bad, Path::new("o")).is_err());
    }
}
