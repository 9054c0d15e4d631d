//! Minimal EPANET INP reader: network topology and pipe lengths only.
//!
//! Recognized sections are `[JUNCTIONS]`, `[RESERVOIRS]`, `[TANKS]` (nodes)
//! and `[PIPES]` (edges with their Length column). Everything else —
//! `[PATTERNS]`, `[QUALITY]`, hydraulic options — is skipped. `;` starts a
//! comment, columns are whitespace-delimited.

use crate::error::{Error, Result};
use crate::graph::WdnGraph;

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Nodes,
    Pipes,
    Other,
}

/// Parse INP text into a [`WdnGraph`] with an empty sensor set.
pub fn parse_inp(text: &str) -> Result<WdnGraph> {
    let mut section = Section::Other;
    let mut saw_pipes = false;
    let mut nodes: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String, String, f64)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find(';') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            let name = line
                .trim_start_matches('[')
                .split(']')
                .next()
                .unwrap_or_default()
                .trim()
                .to_ascii_uppercase();
            section = match name.as_str() {
                "JUNCTIONS" | "RESERVOIRS" | "TANKS" => Section::Nodes,
                "PIPES" => {
                    saw_pipes = true;
                    Section::Pipes
                }
                _ => Section::Other,
            };
            continue;
        }
        match section {
            Section::Nodes => {
                let id = line.split_whitespace().next().unwrap_or_default();
                nodes.push(id.to_string());
            }
            Section::Pipes => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < 4 {
                    return Err(Error::Format(format!(
                        "line {}: pipe row needs at least id, two nodes and a length",
                        lineno + 1
                    )));
                }
                let length: f64 = fields[3].parse().map_err(|_| {
                    Error::Format(format!(
                        "line {}: pipe {:?} has unparseable length {:?}",
                        lineno + 1,
                        fields[0],
                        fields[3]
                    ))
                })?;
                edges.push((
                    fields[0].to_string(),
                    fields[1].to_string(),
                    fields[2].to_string(),
                    length,
                ));
            }
            Section::Other => {}
        }
    }

    if !saw_pipes {
        return Err(Error::Format("input has no [PIPES] section".into()));
    }
    WdnGraph::new(nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[JUNCTIONS]
;ID  Elev  Demand
J1   100   0
J2   100   0

[PIPES]
;ID  Node1  Node2  Length  Diameter  Roughness
P1   J1     J2     100     200       0.1
";

    #[test]
    fn minimal_network() {
        let g = parse_inp(MINIMAL).unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].length, 100.0);
        assert!(g.sensors().is_empty());
    }

    #[test]
    fn unknown_sections_are_skipped() {
        let text = format!("{MINIMAL}\n[QUALITY]\nJ1 0.5\n");
        let g = parse_inp(&text).unwrap();
        assert_eq!(g.n_nodes(), 2);
    }

    #[test]
    fn undeclared_node_is_reference_error() {
        let text = "\
[JUNCTIONS]
J1 100 0
J2 100 0
[PIPES]
P1 J1 J9 100 200 0.1
";
        assert!(matches!(parse_inp(text), Err(Error::Reference(_))));
    }

    #[test]
    fn missing_pipes_is_format_error() {
        let text = "[JUNCTIONS]\nJ1 100 0\n";
        assert!(matches!(parse_inp(text), Err(Error::Format(_))));
    }

    #[test]
    fn non_positive_length_is_value_error() {
        let text = "\
[JUNCTIONS]
J1 100 0
J2 100 0
[PIPES]
P1 J1 J2 -5 200 0.1
";
        assert!(matches!(parse_inp(text), Err(Error::Value(_))));
    }

    #[test]
    fn reservoirs_and_tanks_are_nodes() {
        let text = "\
[JUNCTIONS]
J1 100 0
[RESERVOIRS]
R1 120
[TANKS]
T1 110 5 0 10 20 0
[PIPES]
P1 J1 R1 50 200 0.1
P2 R1 T1 60 200 0.1
";
        let g = parse_inp(text).unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.edges().len(), 2);
    }
}
