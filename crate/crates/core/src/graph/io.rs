//! Plain-text edge lists.
//!
//! One whitespace-separated pair of 0-based ids per line. An optional first
//! line `n <count>` fixes the node count; otherwise it is `1 + max id`.
//! Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

pub fn read_edge_list(path: impl AsRef<Path>, one_based: bool) -> Result<Graph> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text, one_based)
}

pub fn parse_edge_list(text: &str, one_based: bool) -> Result<Graph> {
    let mut declared_n = None;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    let mut seen_content = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !seen_content && tokens.first() == Some(&"n") {
            seen_content = true;
            if tokens.len() != 2 {
                return Err(parse_error(line_no, "header must be `n <count>`"));
            }
            let n = tokens[1]
                .parse::<usize>()
                .map_err(|_| parse_error(line_no, format!("invalid node count `{}`", tokens[1])))?;
            declared_n = Some(n);
            continue;
        }
        seen_content = true;
        if tokens.len() != 2 {
            return Err(parse_error(
                line_no,
                format!("expected two ids, found {}", tokens.len()),
            ));
        }
        let mut ids = [0usize; 2];
        for (slot, tok) in ids.iter_mut().zip(&tokens) {
            let id = tok
                .parse::<usize>()
                .map_err(|_| parse_error(line_no, format!("invalid node id `{tok}`")))?;
            *slot = if one_based {
                id.checked_sub(1)
                    .ok_or_else(|| parse_error(line_no, "id 0 in a 1-based file"))?
            } else {
                id
            };
        }
        max_id = Some(max_id.map_or(ids[0].max(ids[1]), |m| m.max(ids[0]).max(ids[1])));
        edges.push((ids[0], ids[1]));
    }

    let n = declared_n.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    Graph::new(n, edges)
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        message: message.into(),
    }
}

pub fn edge_list_string(g: &Graph) -> String {
    let mut out = String::with_capacity(16 * (g.edge_count() + 1));
    let _ = writeln!(out, "n {}", g.n());
    for &(i, j) in g.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    w.write_all(edge_list_string(g).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_less_file() {
        let g = parse_edge_list("0 1\n1 2", false).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn header_sets_node_count() {
        let g = parse_edge_list("n 5\n0 1", false).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(4), 0);
    }

    #[test]
    fn non_integer_token() {
        match parse_edge_list("0 x", false) {
            Err(Error::ParseError { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_edge_list("0 1\n\n2 3 4", false) {
            Err(Error::ParseError { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_based_shift() {
        let g = parse_edge_list("1 2\n2 3", true).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert!(parse_edge_list("0 1", true).is_err());
    }

    #[test]
    fn header_smaller_than_ids() {
        assert_eq!(
            parse_edge_list("n 2\n0 2", false),
            Err(Error::InvalidNode { node: 2, n: 2 })
        );
    }

    #[test]
    fn write_then_read() {
        let g = Graph::new(6, [(0, 1), (4, 2), (1, 3)]).unwrap();
        let text = edge_list_string(&g);
        assert!(text.starts_with("n 6\n0 1\n1 3\n2 4\n"));
        assert_eq!(parse_edge_list(&text, false).unwrap(), g);
    }
}
