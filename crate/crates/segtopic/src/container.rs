//! Line-based, versioned text container shared by feature-model and model
//! files.
//!
//! ```text
//! <kind> <version>
//! meta <key> <value>
//! floats <name> <dim>...      followed by one line of space-separated values
//! ints <name> <len>           followed by one line of space-separated values
//! strings <name> <len>        followed by <len> lines, each a JSON string
//! end
//! ```
//!
//! Records keep their order, so identical content always serializes to
//! identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::float;

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Meta(String, String),
    Floats {
        name: String,
        shape: Vec<usize>,
        values: Vec<f64>,
    },
    Ints(String, Vec<usize>),
    Strings(String, Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub version: u32,
    pub records: Vec<Record>,
}

impl Container {
    pub fn new(kind: &str, version: u32) -> Self {
        Container {
            kind: kind.into(),
            version,
            records: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.records.push(Record::Meta(key.into(), value.to_string()));
    }

    pub fn floats(&mut self, name: &str, shape: &[usize], values: &[f64]) {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        self.records.push(Record::Floats {
            name: name.into(),
            shape: shape.to_vec(),
            values: values.to_vec(),
        });
    }

    pub fn ints(&mut self, name: &str, values: &[usize]) {
        self.records.push(Record::Ints(name.into(), values.to_vec()));
    }

    pub fn strings(&mut self, name: &str, values: &[String]) {
        self.records.push(Record::Strings(name.into(), values.to_vec()));
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.kind, self.version);
        for r in &self.records {
            match r {
                Record::Meta(k, v) => writeln!(out, "meta {k} {v}").unwrap(),
                Record::Floats { name, shape, values } => {
                    let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
                    writeln!(out, "floats {name} {}", dims.join(" ")).unwrap();
                    let vals: Vec<String> = values.iter().map(|&v| float::fmt(v)).collect();
                    writeln!(out, "{}", vals.join(" ")).unwrap();
                }
                Record::Ints(name, values) => {
                    writeln!(out, "ints {name} {}", values.len()).unwrap();
                    let vals: Vec<String> = values.iter().map(usize::to_string).collect();
                    writeln!(out, "{}", vals.join(" ")).unwrap();
                }
                Record::Strings(name, values) => {
                    writeln!(out, "strings {name} {}", values.len()).unwrap();
                    for v in values {
                        writeln!(out, "{}", serde_json::to_string(v).unwrap()).unwrap();
                    }
                }
            }
        }
        out.push_str("end\n");
        out
    }

    /// Parses a container of the given kind and version.
    pub fn parse(text: &str, kind: &str, version: u32, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| CliError::parse(origin, line, msg);
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let expected = format!("{kind} {version}");
        if header != expected {
            return Err(err(1, format!("expected header {expected:?}, found {header:?}")));
        }
        let mut c = Container::new(kind, version);
        let mut next_line = |what: &str, after: usize| {
            lines
                .next()
                .ok_or_else(|| err(after + 1, format!("unexpected end of file, expected {what}")))
        };
        loop {
            let (n, line) = next_line("a record or `end`", 1)?;
            if line == "end" {
                break;
            }
            let mut parts = line.splitn(3, ' ');
            let tag = parts.next().unwrap_or_default();
            let name = parts.next().ok_or_else(|| err(n, format!("malformed record {line:?}")))?;
            let rest = parts.next().unwrap_or_default();
            let count = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(n, format!("invalid size {s:?}")))
            };
            match tag {
                "meta" => c.meta(name, rest),
                "floats" => {
                    let shape = rest.split(' ').map(count).collect::<Result<Vec<_>>>()?;
                    let (vn, vline) = next_line("float values", n)?;
                    let values = vline
                        .split(' ')
                        .filter(|s| !s.is_empty())
                        .map(|s| float::parse(s).map_err(|m| err(vn, m)))
                        .collect::<Result<Vec<_>>>()?;
                    let want: usize = shape.iter().product();
                    if values.len() != want {
                        return Err(err(vn, format!("{name}: expected {want} values, found {}", values.len())));
                    }
                    c.records.push(Record::Floats {
                        name: name.into(),
                        shape,
                        values,
                    });
                }
                "ints" => {
                    let len = count(rest)?;
                    let (vn, vline) = next_line("integer values", n)?;
                    let values = vline
                        .split(' ')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<usize>().map_err(|_| err(vn, format!("invalid integer {s:?}"))))
                        .collect::<Result<Vec<_>>>()?;
                    if values.len() != len {
                        return Err(err(vn, format!("{name}: expected {len} values, found {}", values.len())));
                    }
                    c.ints(name, &values);
                }
                "strings" => {
                    let len = count(rest)?;
                    let mut values = Vec::with_capacity(len);
                    for _ in 0..len {
                        let (vn, vline) = next_line("a JSON string", n)?;
                        values.push(
                            serde_json::from_str::<String>(vline).map_err(|e| err(vn, e.to_string()))?,
                        );
                    }
                    c.records.push(Record::Strings(name.into(), values));
                }
                other => return Err(err(n, format!("unknown record type {other:?}"))),
            }
        }
        Ok(c)
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.records.iter().find_map(|r| match r {
            Record::Meta(k, v) if k == key => Some(v.as_str()),
            _ => None,
        })
    }

    pub fn require_meta(&self, key: &str) -> Result<&str> {
        self.get_meta(key)
            .ok_or_else(|| CliError::Mismatch(format!("{} file lacks `meta {key}`", self.kind)))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.require_meta(key)?;
        v.parse()
            .map_err(|_| CliError::Mismatch(format!("{} file: invalid `{key}` value {v:?}", self.kind)))
    }

    pub fn get_floats(&self, name: &str) -> Result<(&[usize], &[f64])> {
        self.records
            .iter()
            .find_map(|r| match r {
                Record::Floats { name: n, shape, values } if n == name => Some((shape.as_slice(), values.as_slice())),
                _ => None,
            })
            .ok_or_else(|| CliError::Mismatch(format!("{} file lacks float array {name:?}", self.kind)))
    }

    pub fn get_ints(&self, name: &str) -> Result<&[usize]> {
        self.records
            .iter()
            .find_map(|r| match r {
                Record::Ints(n, v) if n == name => Some(v.as_slice()),
                _ => None,
            })
            .ok_or_else(|| CliError::Mismatch(format!("{} file lacks integer array {name:?}", self.kind)))
    }

    pub fn get_strings(&self, name: &str) -> Result<&[String]> {
        self.records
            .iter()
            .find_map(|r| match r {
                Record::Strings(n, v) if n == name => Some(v.as_slice()),
                _ => None,
            })
            .ok_or_else(|| CliError::Mismatch(format!("{} file lacks string list {name:?}", self.kind)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Container {
        let mut c = Container::new("segtopic-test", 3);
        c.meta("variant", "attn");
        c.meta("note", "two words");
        c.floats("w", &[2, 2], &[0.1, -2.0, 1.0 / 3.0, 5e-310]);
        c.floats("empty", &[0], &[]);
        c.ints("df", &[3, 0, 12]);
        c.strings("vocab", &["alpha".into(), "with space".into(), "q\"uote\n".into()]);
        c
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let text = c.to_text();
        let back = Container::parse(&text, "segtopic-test", 3, Path::new("x")).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
        assert_eq!(back.get_meta("note"), Some("two words"));
    }

    #[test]
    fn rejects_wrong_header_and_truncation() {
        let text = sample().to_text();
        let e = Container::parse(&text, "segtopic-test", 4, Path::new("x")).unwrap_err();
        assert!(e.to_string().contains("x:1:"));
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(Container::parse(&cut, "segtopic-test", 3, Path::new("x")).is_err());
        let bad = text.replace("-2.0000000000000000e0", "oops");
        assert_ne!(bad, text);
        assert!(Container::parse(&bad, "segtopic-test", 3, Path::new("x")).is_err());
    }
}
