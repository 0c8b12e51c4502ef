//! Hypergraph text format: `p hcq <n> <m> <k>`, then `m` lines
//! `e v1 .. vk` with 1-based vertices. `c` lines are comments.

use std::fmt::Write;

use gkcm::Hypergraph;

use crate::error::CliError;

pub fn parse(text: &str, path: &str) -> Result<Hypergraph, CliError> {
    let mut graph: Option<(Hypergraph, usize)> = None;
    let mut edges = 0;
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last = line;
        let mut words = raw.split_whitespace();
        let Some(tag) = words.next() else { continue };
        let bad = |msg: String| CliError::format(path, line, msg);
        let num = |w: Option<&str>, what: &str| -> Result<usize, CliError> {
            let w = w.ok_or_else(|| bad(format!("missing {what}")))?;
            w.parse().map_err(|_| bad(format!("{what} `{w}` is not a non-negative integer")))
        };
        match tag {
            "c" => {}
            "p" => {
                if graph.is_some() {
                    return Err(bad("second problem line".into()));
                }
                if words.next() != Some("hcq") {
                    return Err(bad("expected `p hcq <n> <m> <k>`".into()));
                }
                let n = num(words.next(), "vertex count")?;
                let m = num(words.next(), "edge count")?;
                let k = num(words.next(), "arity")?;
                if words.next().is_some() {
                    return Err(bad("trailing fields on problem line".into()));
                }
                let g = Hypergraph::new(n, k).map_err(|e| bad(e.to_string()))?;
                graph = Some((g, m));
            }
            "e" => {
                let Some((g, _)) = graph.as_mut() else {
                    return Err(bad("edge before the problem line".into()));
                };
                let vs = words
                    .map(|w| match w.parse::<usize>() {
                        Ok(v) if v >= 1 => Ok(v - 1),
                        _ => Err(bad(format!("vertex `{w}` is not a positive integer"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                g.add_edge(&vs).map_err(|e| bad(e.to_string()))?;
                edges += 1;
            }
            other => return Err(bad(format!("unknown line type `{other}`"))),
        }
    }
    let Some((g, m)) = graph else {
        return Err(CliError::format(path, last.max(1), "missing `p hcq` problem line"));
    };
    if edges != m {
        return Err(CliError::format(path, last, format!("header declares {m} edges, found {edges}")));
    }
    Ok(g)
}

/// Serializes `g`; `comments` become leading `c` lines.
pub fn write(g: &Hypergraph, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "c {c}");
    }
    let _ = writeln!(out, "p hcq {} {} {}", g.n(), g.edge_count(), g.k());
    for e in g.edges() {
        out.push('e');
        for v in e.iter() {
            let _ = write!(out, " {}", v + 1);
        }
        out.push('\n');
    }
    out
}
