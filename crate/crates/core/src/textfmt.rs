//! Line-oriented key/value text format shared by instance and solution files.
//!
//! ```text
//! format edgeharden-instance 1
//! num_areas 2
//! delay_penalty 0.1
//! demand [2]
//! 45 52
//! harden_cost [2 2 3]
//! 1.01 1.21 1.41
//! ...
//! ```
//!
//! A scalar line is `key value`. An array line is `key [d1 d2 ...]` followed by
//! `d1*d2*...` whitespace-separated values in row-major order; writers put one
//! innermost row per line, readers accept any line breaking. `#` starts a
//! comment. Reals are written in Rust's shortest round-trip notation, so
//! reading a file back reproduces every `f64` bit for bit.

use std::collections::HashSet;
use std::fmt::{Display, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct TextWriter {
    out: String,
}

impl TextWriter {
    pub fn new(kind: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(out, "format edgeharden-{kind} 1");
        Self { out }
    }

    pub fn comment(&mut self, text: &str) {
        let _ = writeln!(self.out, "# {text}");
    }

    pub fn scalar(&mut self, key: &str, value: impl Display) {
        let _ = writeln!(self.out, "{key} {value}");
    }

    pub fn real(&mut self, key: &str, value: f64) {
        let _ = writeln!(self.out, "{key} {value:?}");
    }

    pub fn array<T: Display>(&mut self, key: &str, dims: &[usize], values: &[T]) {
        debug_assert_eq!(dims.iter().product::<usize>(), values.len());
        let dims_txt: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(self.out, "{key} [{}]", dims_txt.join(" "));
        let row = dims.last().copied().unwrap_or(1).max(1);
        for chunk in values.chunks(row) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(self.out, "{}", line.join(" "));
        }
    }

    pub fn real_array(&mut self, key: &str, dims: &[usize], values: &[f64]) {
        let shown: Vec<RealRepr> = values.iter().map(|v| RealRepr(*v)).collect();
        self.array(key, dims, &shown);
    }

    pub fn finish(self) -> String {
        self.out
    }
}

struct RealRepr(f64);

impl Display for RealRepr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug)]
struct Entry {
    key: String,
    dims: Option<Vec<usize>>,
    tokens: Vec<String>,
    line: usize,
}

/// Parsed document. Fields are consumed with `scalar`/`array`; whatever is
/// left at the end is reported by `leftover_warnings`.
#[derive(Debug)]
pub(crate) struct TextDoc {
    path: String,
    entries: Vec<Entry>,
    consumed: HashSet<usize>,
    last_line: usize,
}

impl TextDoc {
    pub fn parse(text: &str, kind: &str, path: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };

        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, strip_comment(l).trim()))
            .filter(|(_, l)| !l.is_empty())
            .peekable();

        let expected = format!("edgeharden-{kind}");
        match lines.next() {
            Some((n, header)) => {
                let parts: Vec<&str> = header.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "format" || parts[1] != expected {
                    return Err(err(
                        n,
                        format!("expected header `format {expected} 1`, found `{header}`"),
                    ));
                }
                if parts[2] != "1" {
                    return Err(err(n, format!("unsupported format version `{}`", parts[2])));
                }
            }
            None => return Err(err(0, "empty file".into())),
        }

        let mut entries = Vec::new();
        let mut last_line = 0;
        while let Some((n, line)) = lines.next() {
            last_line = n;
            let (key, rest) = match line.split_once(char::is_whitespace) {
                Some((k, r)) => (k, r.trim()),
                None => return Err(err(n, format!("field `{line}` has no value"))),
            };
            if !is_key(key) {
                return Err(err(n, format!("malformed field name `{key}`")));
            }
            if let Some(inner) = rest.strip_prefix('[') {
                let inner = inner
                    .strip_suffix(']')
                    .ok_or_else(|| err(n, format!("unterminated dimension header for `{key}`")))?;
                let dims = inner
                    .split_whitespace()
                    .map(|d| d.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| err(n, format!("bad dimension header `[{inner}]` for `{key}`")))?;
                let count: usize = dims.iter().product();
                let mut tokens = Vec::with_capacity(count);
                while tokens.len() < count {
                    match lines.next() {
                        Some((m, data)) => {
                            last_line = m;
                            tokens.extend(data.split_whitespace().map(str::to_string));
                        }
                        None => {
                            return Err(err(
                                last_line,
                                format!(
                                    "unexpected end of file while reading `{key}` (expected {count} values, got {})",
                                    tokens.len()
                                ),
                            ))
                        }
                    }
                }
                if tokens.len() != count {
                    return Err(err(
                        last_line,
                        format!("`{key}` expects {count} values, found {}", tokens.len()),
                    ));
                }
                entries.push(Entry {
                    key: key.to_string(),
                    dims: Some(dims),
                    tokens,
                    line: n,
                });
            } else {
                entries.push(Entry {
                    key: key.to_string(),
                    dims: None,
                    tokens: vec![rest.to_string()],
                    line: n,
                });
            }
        }

        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.key.as_str()) {
                return Err(err(e.line, format!("duplicate field `{}`", e.key)));
            }
        }

        Ok(Self {
            path: path.to_string(),
            entries,
            consumed: HashSet::new(),
            last_line,
        })
    }

    fn err(&self, line: usize, message: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message,
        }
    }

    fn find(&mut self, key: &str) -> Result<usize> {
        match self.entries.iter().position(|e| e.key == key) {
            Some(idx) => {
                self.consumed.insert(idx);
                Ok(idx)
            }
            None => Err(self.err(self.last_line, format!("missing field `{key}`"))),
        }
    }

    pub fn scalar<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let idx = self.find(key)?;
        let entry = &self.entries[idx];
        if entry.dims.is_some() {
            return Err(self.err(entry.line, format!("field `{key}` must be a scalar")));
        }
        entry.tokens[0].parse().map_err(|_| {
            self.err(
                entry.line,
                format!("cannot parse `{}` for field `{key}`", entry.tokens[0]),
            )
        })
    }

    pub fn array<T: FromStr>(&mut self, key: &str, dims: &[usize]) -> Result<Vec<T>> {
        let idx = self.find(key)?;
        let entry = &self.entries[idx];
        match &entry.dims {
            Some(d) if d == dims => {}
            Some(d) => {
                return Err(self.err(
                    entry.line,
                    format!("field `{key}` has dimensions {d:?}, expected {dims:?}"),
                ))
            }
            None => return Err(self.err(entry.line, format!("field `{key}` must be an array"))),
        }
        entry
            .tokens
            .iter()
            .enumerate()
            .map(|(pos, tok)| {
                tok.parse()
                    .map_err(|_| self.err(entry.line, format!("cannot parse `{tok}` at position {pos} of `{key}`")))
            })
            .collect()
    }

    /// One warning per field that was present but never read.
    pub fn leftover_warnings(&self) -> Vec<String> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(idx, _)| !self.consumed.contains(idx))
            .map(|(_, e)| format!("{}:{}: ignoring unknown field `{}`", self.path, e.line, e.key))
            .collect()
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn is_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        && key.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars_and_arrays_round_trip() {
        let mut w = TextWriter::new("test");
        w.scalar("count", 3);
        w.real("rate", 0.1 + 0.2);
        w.real_array("grid", &[2, 2], &[1.0, 2.5, -0.0, 1e-300]);
        let text = w.finish();
        let mut doc = TextDoc::parse(&text, "test", "mem").unwrap();
        assert_eq!(doc.scalar::<usize>("count").unwrap(), 3);
        assert_eq!(doc.scalar::<f64>("rate").unwrap(), 0.1 + 0.2);
        let grid: Vec<f64> = doc.array("grid", &[2, 2]).unwrap();
        assert_eq!(grid, vec![1.0, 2.5, -0.0, 1e-300]);
        assert!(doc.leftover_warnings().is_empty());
    }

    #[test]
    fn truncated_array_reports_line() {
        let text = "format edgeharden-test 1\nvals [4]\n1 2\n";
        let e = TextDoc::parse(text, "test", "mem").unwrap_err();
        match e {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("unexpected end of file"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_become_warnings() {
        let text = "format edgeharden-test 1\na 1\nextra [2]\n5 6\n";
        let mut doc = TextDoc::parse(text, "test", "mem").unwrap();
        let _: u32 = doc.scalar("a").unwrap();
        let warnings = doc.leftover_warnings();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("extra"));
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(TextDoc::parse("format something-else 1\n", "test", "mem").is_err());
        assert!(TextDoc::parse("", "test", "mem").is_err());
    }

    #[test]
    fn duplicate_field_is_rejected() {
        let text = "format edgeharden-test 1\na 1\na 2\n";
        assert!(TextDoc::parse(text, "test", "mem").is_err());
    }
}
