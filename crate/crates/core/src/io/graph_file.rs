// SPDX-License-Identifier: MIT
//! Reading graphs from edge lists and writing DOT.
//!
//! The reader accepts one `from -> to` edge per line, optionally quoted and
//! followed by DOT attributes, so files written by `export_graph` read back.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Graph;
use crate::search::EdgeFrequencies;

use super::dataset::compound_index;

/// Pen width of an edge selected in every run.
pub const MAX_PENWIDTH: f64 = 5.0;

fn strip_token(s: &str) -> &str {
    let s = s.trim();
    let s = s.split('[').next().unwrap_or("").trim();
    let s = s.trim_end_matches(';').trim();
    s.trim_matches('"')
}

/// Parses an edge list over `names`.
pub fn parse_graph(text: &str, names: &[String], path_for_errors: &str) -> Result<Graph> {
    let mut g = Graph::empty(names.len());
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("");
        let line = line.split('#').next().unwrap_or("").trim();
        let Some((lhs, rhs)) = line.split_once("->") else {
            continue;
        };
        let (from, to) = (strip_token(lhs), strip_token(rhs));
        if from.is_empty() || to.is_empty() {
            return Err(Error::Parse {
                path: path_for_errors.to_string(),
                line: n as u64 + 1,
                column: 1,
                message: format!("malformed edge `{line}`"),
            });
        }
        let (i, j) = (compound_index(names, from)?, compound_index(names, to)?);
        g.add_edge(i, j).map_err(|e| Error::Parse {
            path: path_for_errors.to_string(),
            line: n as u64 + 1,
            column: 1,
            message: e.to_string(),
        })?;
    }
    Ok(g)
}

pub fn read_graph(path: &Path, names: &[String]) -> Result<Graph> {
    parse_graph(&fs::read_to_string(path)?, names, &path.display().to_string())
}

/// Plain `from -> to` lines in row-major edge order.
pub fn edge_list(g: &Graph, names: &[String]) -> String {
    g.edges()
        .iter()
        .map(|&(i, j)| format!("{} -> {}\n", names[i], names[j]))
        .collect()
}

fn dot_header(names: &[String]) -> String {
    let mut out = String::from("digraph G {\n");
    for n in names {
        let _ = writeln!(out, "  \"{n}\";");
    }
    out
}

pub fn graph_to_dot(g: &Graph, names: &[String]) -> String {
    let mut out = dot_header(names);
    for (i, j) in g.edges() {
        let _ = writeln!(out, "  \"{}\" -> \"{}\";", names[i], names[j]);
    }
    out.push_str("}\n");
    out
}

/// DOT with pen width and opacity proportional to selection frequency.
/// Edges never selected are left out.
pub fn frequencies_to_dot(f: &EdgeFrequencies, names: &[String]) -> String {
    let mut out = dot_header(names);
    let d = f.d();
    for i in 0..d {
        for j in 0..d {
            let p = f.freq[(i, j)];
            if i == j || p <= 0.0 {
                continue;
            }
            let alpha = (p.clamp(0.0, 1.0) * 255.0).round() as u8;
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [penwidth={:.3}, color=\"#000000{alpha:02x}\", label=\"{p:.2}\"];",
                names[i],
                names[j],
                MAX_PENWIDTH * p
            );
        }
    }
    out.push_str("}\n");
    out
}

pub enum GraphExport<'a> {
    Graph(&'a Graph),
    Frequencies(&'a EdgeFrequencies),
}

pub fn export_graph(what: GraphExport<'_>, names: &[String], path: &Path) -> Result<()> {
    let text = match what {
        GraphExport::Graph(g) => graph_to_dot(g, names),
        GraphExport::Frequencies(f) => frequencies_to_dot(f, names),
    };
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn names() -> Vec<String> {
        ["raf", "mek", "erk"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_graph_lists_nodes_only() {
        let dot = graph_to_dot(&Graph::empty(3), &names());
        assert_eq!(dot, "digraph G {\n  \"raf\";\n  \"mek\";\n  \"erk\";\n}\n");
    }

    #[test]
    fn dot_round_trips_through_the_reader() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 0), (1, 2)]).unwrap();
        let back = parse_graph(&graph_to_dot(&g, &names()), &names(), "x").unwrap();
        assert_eq!(back, g);
        let back = parse_graph(&edge_list(&g, &names()), &names(), "x").unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn reader_rejects_unknown_names_and_self_loops() {
        assert!(matches!(
            parse_graph("raf -> pkc\n", &names(), "x"),
            Err(Error::UnknownCompound(_))
        ));
        assert!(matches!(
            parse_graph("# comment\nraf -> raf\n", &names(), "x"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn frequency_styling() {
        let mut freq = DMatrix::zeros(3, 3);
        freq[(0, 1)] = 1.0;
        freq[(2, 1)] = 0.5;
        let f = EdgeFrequencies { freq, runs: 4 };
        let dot = frequencies_to_dot(&f, &names());
        assert!(dot.contains("\"raf\" -> \"mek\" [penwidth=5.000, color=\"#000000ff\""));
        assert!(dot.contains("\"erk\" -> \"mek\" [penwidth=2.500, color=\"#00000080\""));
        assert_eq!(dot.matches("->").count(), 2);
        assert_eq!(dot, frequencies_to_dot(&f, &names()));
    }
}
