//! Plain-text edge lists: one `u v` pair per line, `#` starts a comment.

use navgraph_core::{Edge, Graph, LatticeSpec};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Graph {
        line: usize,
        #[source]
        source: navgraph_core::Error,
    },
}

/// A parsed edge list. `missing_base` lists lattice edges absent from the
/// file; they are part of `graph` regardless.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub graph: Graph,
    pub missing_base: Vec<Edge>,
}

pub fn parse(text: &str, spec: &LatticeSpec) -> Result<EdgeList, ParseError> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(ParseError::Syntax { line, message: format!("expected `u v`, got {body:?}") });
        }
        let mut ends = [0usize; 2];
        for (slot, f) in ends.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| ParseError::Syntax { line, message: format!("not a vertex index: {f:?}") })?;
        }
        let [u, v] = ends;
        Graph::new(spec, &[Edge(u, v)]).map_err(|source| ParseError::Graph { line, source })?;
        edges.push(Edge::new(u, v));
    }
    let graph = Graph::new(spec, &edges).expect("edges validated per line");
    edges.sort_unstable();
    let missing_base = spec.base_edges().into_iter().filter(|e| edges.binary_search(e).is_err()).collect();
    Ok(EdgeList { graph, missing_base })
}

/// Every edge of `g`, ascending.
pub fn format(g: &Graph) -> String {
    let mut s = String::new();
    for e in g.edges() {
        writeln!(s, "{} {}", e.0, e.1).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(r: usize, c: usize) -> LatticeSpec {
        LatticeSpec::new(r, c).unwrap()
    }

    #[test]
    fn comments_and_blank_lines() {
        let l = parse("# diagonals\n\n0 3   # main\n 2 1\n", &sp(2, 2)).unwrap();
        assert!(l.graph.has_edge(0, 3));
        assert!(l.graph.has_edge(1, 2));
        assert_eq!(l.missing_base.len(), 4);
        assert_eq!(l.graph.edge_count(), 6);
    }

    #[test]
    fn round_trip() {
        let g = Graph::new(&sp(3, 3), &[Edge(0, 8), Edge(2, 4)]).unwrap();
        let l = parse(&format(&g), &sp(3, 3)).unwrap();
        assert_eq!(l.graph, g);
        assert!(l.missing_base.is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let s = sp(2, 2);
        assert!(matches!(parse("0 1\n0 1 2\n", &s), Err(ParseError::Syntax { line: 2, .. })));
        assert!(matches!(parse("0 x\n", &s), Err(ParseError::Syntax { line: 1, .. })));
        assert!(matches!(parse("\n\n0 9\n", &s), Err(ParseError::Graph { line: 3, .. })));
        assert!(matches!(parse("2 2\n", &s), Err(ParseError::Graph { line: 1, .. })));
    }
}
