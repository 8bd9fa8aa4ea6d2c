//! `GRAPHV1` text format: a header, undirected edges listed once, feature
//! rows, then `LABELS`, `TRAIN`, `VAL` and `TEST` sections.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use super::{GraphBatch, GraphDataset, Splits, TaskKind};
use crate::error::{Error as CrateError, Result};
use crate::nn::{GraphIndex, SparseAdjacency, Tensor};

/// Loader failures. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed header: {detail}")]
    Header { line: usize, detail: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse `{token}` as a number")]
    Number { line: usize, token: String },
    #[error("line {line}: index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        line: usize,
        index: usize,
        bound: usize,
    },
    #[error("line {line}: label {label} invalid for {classes} classes")]
    Label {
        line: usize,
        label: i64,
        classes: usize,
    },
    #[error("line {line}: expected section `{expected}`")]
    MissingSection { line: usize, expected: &'static str },
    #[error("line {line}: file ended while reading {expected}")]
    UnexpectedEof { line: usize, expected: &'static str },
    #[error("line {line}: node {index} already assigned to a split")]
    DuplicateSplit { line: usize, index: usize },
    #[error("line {line}: unexpected content after the last section")]
    TrailingContent { line: usize },
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, expected: &'static str) -> Result<(usize, &'a str), ParseError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l.trim()))
            }
            None => Err(ParseError::UnexpectedEof {
                line: self.last + 1,
                expected,
            }),
        }
    }
}

fn number<T: FromStr>(line: usize, token: &str) -> Result<T, ParseError> {
    token.parse().map_err(|_| ParseError::Number {
        line,
        token: token.to_string(),
    })
}

fn fields(line: usize, text: &str, expected: usize) -> Result<Vec<&str>, ParseError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != expected {
        return Err(ParseError::FieldCount {
            line,
            expected,
            found: parts.len(),
        });
    }
    Ok(parts)
}

fn node_index(line: usize, token: &str, bound: usize) -> Result<usize, ParseError> {
    let index: usize = number(line, token)?;
    if index >= bound {
        return Err(ParseError::IndexOutOfRange { line, index, bound });
    }
    Ok(index)
}

fn section(lines: &mut Lines<'_>, name: &'static str) -> Result<(), ParseError> {
    let (line, text) = lines.next(name)?;
    if text != name {
        return Err(ParseError::MissingSection {
            line,
            expected: name,
        });
    }
    Ok(())
}

/// Parses a single-graph node-classification dataset.
pub fn parse_graph(text: &str) -> Result<GraphDataset, ParseError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (line, header) = lines.next("header")?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.first() != Some(&"GRAPHV1") {
        return Err(ParseError::Header {
            line,
            detail: "missing GRAPHV1 magic".into(),
        });
    }
    if parts.len() != 5 {
        return Err(ParseError::Header {
            line,
            detail: format!("expected 4 counts, found {}", parts.len() - 1),
        });
    }
    let counts = parts[1..]
        .iter()
        .map(|t| {
            t.parse::<usize>().map_err(|_| ParseError::Header {
                line,
                detail: format!("`{t}` is not a count"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (n, m, f, c) = (counts[0], counts[1], counts[2], counts[3]);

    let mut pairs = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, text) = lines.next("edges")?;
        let p = fields(line, text, 2)?;
        pairs.push((node_index(line, p[0], n)?, node_index(line, p[1], n)?));
    }

    let mut features = Vec::with_capacity(n * f);
    for _ in 0..n {
        let (line, text) = lines.next("features")?;
        for t in fields(line, text, f)? {
            let v: f64 = number(line, t)?;
            if !v.is_finite() {
                return Err(ParseError::Number {
                    line,
                    token: t.to_string(),
                });
            }
            features.push(v);
        }
    }

    section(&mut lines, "LABELS")?;
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, text) = lines.next("labels")?;
        let label: i64 = number(line, fields(line, text, 1)?[0])?;
        labels.push(match label {
            -1 => None,
            l if l >= 0 && (l as usize) < c => Some(l as usize),
            l => {
                return Err(ParseError::Label {
                    line,
                    label: l,
                    classes: c,
                })
            }
        });
    }

    let mut assigned = vec![false; n];
    let mut parts = Vec::with_capacity(3);
    for name in ["TRAIN", "VAL", "TEST"] {
        section(&mut lines, name)?;
        let (line, text) = match lines.next("split indices") {
            Ok(x) => x,
            Err(ParseError::UnexpectedEof { .. }) if name == "TEST" => (lines.last, ""),
            Err(e) => return Err(e),
        };
        let mut part = Vec::new();
        for t in text.split_whitespace() {
            let index = node_index(line, t, n)?;
            if assigned[index] {
                return Err(ParseError::DuplicateSplit { line, index });
            }
            assigned[index] = true;
            part.push(index);
        }
        parts.push(part);
    }
    while let Ok((line, text)) = lines.next("end") {
        if !text.is_empty() {
            return Err(ParseError::TrailingContent { line });
        }
    }

    let test = parts.pop().unwrap_or_default();
    let val = parts.pop().unwrap_or_default();
    let train = parts.pop().unwrap_or_default();
    let adjacency = SparseAdjacency::from_undirected(n, &pairs).expect("indices validated");
    let features = Tensor::from_vec(n, f, features).expect("row count validated");
    let graph_index = if n == 0 {
        GraphIndex::new(Vec::new(), 0).expect("no graphs")
    } else {
        GraphIndex::single(n).expect("non-empty")
    };
    Ok(GraphDataset {
        batches: vec![GraphBatch {
            adjacency,
            features,
            labels,
            graph_index,
        }],
        splits: Splits { train, val, test },
        task: TaskKind::NodeClass,
        num_classes: c,
    })
}

pub fn load_graph_file(path: impl AsRef<Path>) -> Result<GraphDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CrateError::io(path, e))?;
    Ok(parse_graph(&text)?)
}

/// Serializes a single-batch dataset. Each undirected edge is written once.
pub fn write_graph(dataset: &GraphDataset) -> Result<String> {
    let batch = dataset.node_batch()?;
    let edges: Vec<(usize, usize)> = batch
        .adjacency
        .edges()
        .iter()
        .copied()
        .filter(|(u, v)| u <= v)
        .collect();
    let mut out = String::new();
    let (n, f) = (batch.num_nodes(), batch.features.cols());
    let _ = writeln!(out, "GRAPHV1 {n} {} {f} {}", edges.len(), dataset.num_classes);
    for (u, v) in edges {
        let _ = writeln!(out, "{u} {v}");
    }
    for r in 0..n {
        let row: Vec<String> = batch.features.row(r).iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out.push_str("LABELS\n");
    for l in &batch.labels {
        let _ = writeln!(out, "{}", l.map_or(-1, |l| l as i64));
    }
    let s = &dataset.splits;
    for (name, part) in [("TRAIN", &s.train), ("VAL", &s.val), ("TEST", &s.test)] {
        let idx: Vec<String> = part.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{name}\n{}", idx.join(" "));
    }
    Ok(out)
}

pub fn write_graph_file(path: impl AsRef<Path>, dataset: &GraphDataset) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_graph(dataset)?).map_err(|e| CrateError::io(path, e))
}
