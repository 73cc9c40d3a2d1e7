//! Graphviz export with pinned lattice positions. Render with
//! `neato -n2 -Tsvg` (or `-Kneato`) so the positions are honored.

use navgraph_core::Graph;
use std::fmt::Write as _;

const SPACING: f64 = 72.0;

pub fn to_dot(g: &Graph, name: &str) -> String {
    let spec = g.spec();
    let mut s = String::new();
    writeln!(s, "graph \"{}\" {{", name.replace('"', "'")).unwrap();
    writeln!(s, "  node [shape=circle, width=0.3, fixedsize=true, fontsize=10];").unwrap();
    for v in 0..g.n() {
        let [x, y] = spec.node_coordinates(v).expect("vertex in range");
        // Row 0 at the top.
        let py = (spec.rows() - 1) as f64 - y;
        writeln!(s, "  {v} [pos=\"{},{}!\"];", x * SPACING, py * SPACING).unwrap();
    }
    for e in g.edges() {
        let style = if g.is_base(e.0, e.1) { "solid" } else { "dashed" };
        writeln!(s, "  {} -- {} [style={style}];", e.0, e.1).unwrap();
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use navgraph_core::{Edge, LatticeSpec};

    #[test]
    fn styles_and_positions() {
        let spec = LatticeSpec::new(2, 3).unwrap();
        let g = Graph::new(&spec, &[Edge(0, 4)]).unwrap();
        let d = to_dot(&g, "t");
        assert!(d.starts_with("graph \"t\" {"));
        assert!(d.contains("  0 [pos=\"0,72!\"];"));
        assert!(d.contains("  5 [pos=\"144,0!\"];"));
        assert!(d.contains("  0 -- 4 [style=dashed];"));
        assert!(d.contains("  0 -- 1 [style=solid];"));
        assert_eq!(d.matches(" -- ").count(), 8);
    }
}
