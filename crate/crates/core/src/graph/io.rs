//! Plain-text edge-list format.
//!
//! ```text
//! p <n> <m>
//! <u> <v>        (m lines, 0-indexed, u != v, no duplicates)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

impl Graph {
    /// Parses the edge-list format.
    pub fn parse(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "p" {
            return Err(Error::Parse { line: hline, msg: "expected `p <n> <m>`".into() });
        }
        let n = parse_num(fields[1], hline)?;
        let m = parse_num(fields[2], hline)?;
        let mut edges = Vec::with_capacity(m);
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::Parse { line, msg: "expected `<u> <v>`".into() });
            }
            let u = parse_num(parts[0], line)?;
            let v = parse_num(parts[1], line)?;
            if u == v {
                return Err(Error::Parse { line, msg: format!("self loop at {u}") });
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::from_edges(n, edges).map_err(|e| Error::Parse { line: hline, msg: e.to_string() })
    }

    /// Serializes the simple part in the edge-list format.
    pub fn to_text(&self) -> String {
        let mut out = format!("p {} {}\n", self.n(), self.m());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Graph> {
        Graph::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_num(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("not a non-negative integer: {s:?}") })
}
