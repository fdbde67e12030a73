//! DOT, JSON and PRISM renderings of a witness CTMC, plus JSON import.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::WitnessCtmc;
use crate::fmt::format_sig;
use crate::transient::FiniteCtmc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportNode {
    pub id: usize,
    pub populations: Vec<u64>,
    pub is_sink: bool,
    pub is_initial: bool,
    pub is_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportEdge {
    pub src: usize,
    pub dst: usize,
    pub rate: f64,
    pub reactions: Vec<usize>,
}

/// JSON document: `{ species, nodes, edges }`. Reaction indices are 0-based;
/// the sink node has empty populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedCtmc {
    pub species: Vec<String>,
    pub nodes: Vec<ExportNode>,
    pub edges: Vec<ExportEdge>,
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn reaction_label(reactions: &[usize]) -> String {
    reactions
        .iter()
        .map(|r| format!("R{}", r + 1))
        .collect::<Vec<_>>()
        .join("+")
}

impl WitnessCtmc {
    pub fn to_export(&self) -> ExportedCtmc {
        let sink = self.sink_id();
        let mut nodes: Vec<ExportNode> = self
            .states()
            .iter()
            .enumerate()
            .map(|(id, s)| ExportNode {
                id,
                populations: s.populations().to_vec(),
                is_sink: false,
                is_initial: id == self.initial(),
                is_target: self.is_target(id),
            })
            .collect();
        nodes.push(ExportNode {
            id: sink,
            populations: Vec::new(),
            is_sink: true,
            is_initial: false,
            is_target: false,
        });
        let mut edges: Vec<ExportEdge> = self
            .edges()
            .map(|(src, dst, e)| ExportEdge {
                src,
                dst,
                rate: e.rate,
                reactions: e.reactions.clone(),
            })
            .collect();
        for id in 0..self.node_count() {
            let e = self.sink_edge(id);
            if e.rate > 0.0 {
                edges.push(ExportEdge {
                    src: id,
                    dst: sink,
                    rate: e.rate,
                    reactions: e.reactions.clone(),
                });
            }
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        ExportedCtmc {
            species: self.crn().species().iter().map(|s| s.name.clone()).collect(),
            nodes,
            edges,
        }
    }

    pub fn export_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_export()).expect("export serializes")
    }

    /// Graphviz digraph; edges are labelled `R<i>:<rate>` with 6 significant digits.
    pub fn export_dot(&self) -> String {
        let ex = self.to_export();
        let mut out = String::from("digraph witness_ctmc {\n  rankdir=LR;\n");
        for n in &ex.nodes {
            if n.is_sink {
                let _ = writeln!(out, "  n{} [label=\"sink\", shape=doublecircle];", n.id);
                continue;
            }
            let label = n
                .populations
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(",");
            let mut attrs = format!("label=\"[{label}]\"");
            if n.is_initial {
                attrs.push_str(", style=filled, fillcolor=palegreen");
            }
            if n.is_target {
                attrs.push_str(", shape=box, peripheries=2");
            }
            let _ = writeln!(out, "  n{} [{attrs}];", n.id);
        }
        for e in &ex.edges {
            let style = if e.dst == self.sink_id() {
                ", style=dashed"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"{}:{}\"{style}];",
                e.src,
                e.dst,
                reaction_label(&e.reactions),
                format_sig(e.rate, 6)
            );
        }
        out.push_str("}\n");
        out
    }

    /// PRISM CTMC module over a single state index `s`; targets are labelled
    /// `"target"`. `time_bound` is echoed as the property to check.
    pub fn export_prism(&self, time_bound: f64) -> String {
        let ex = self.to_export();
        let sink = self.sink_id();
        let mut out = String::new();
        let _ = writeln!(out, "// P=? [ F<={time_bound:?} \"target\" ]");
        let _ = writeln!(out, "// state {sink} is the sink");
        out.push_str("ctmc\n\nmodule witness\n");
        let _ = writeln!(out, "  s : [0..{sink}] init {};", self.initial());
        let mut i = 0;
        while i < ex.edges.len() {
            let src = ex.edges[i].src;
            let mut updates = Vec::new();
            while i < ex.edges.len() && ex.edges[i].src == src {
                updates.push(format!("{:?}:(s'={})", ex.edges[i].rate, ex.edges[i].dst));
                i += 1;
            }
            let _ = writeln!(out, "  [] s={src} -> {};", updates.join(" + "));
        }
        out.push_str("endmodule\n\n");
        let targets = self.target_nodes();
        let guard = if targets.is_empty() {
            "false".to_string()
        } else {
            targets
                .iter()
                .map(|t| format!("s={t}"))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        let _ = writeln!(out, "label \"target\" = {guard};");
        out
    }
}

/// Rebuilds the finite CTMC from an exported JSON document.
pub fn finite_ctmc_from_json(text: &str) -> Result<FiniteCtmc, ImportError> {
    let ex: ExportedCtmc = serde_json::from_str(text)?;
    let n = ex.nodes.len();
    let mut seen = vec![false; n];
    for node in &ex.nodes {
        if node.id >= n || std::mem::replace(&mut seen[node.id], true) {
            return Err(ImportError::Invalid(format!(
                "node ids must be a permutation of 0..{n}, found {}",
                node.id
            )));
        }
    }
    let mut initial = ex.nodes.iter().filter(|x| x.is_initial);
    let init = match (initial.next(), initial.next()) {
        (Some(x), None) => x.id,
        _ => return Err(ImportError::Invalid("exactly one initial node required".into())),
    };
    let mut targets = vec![false; n];
    for node in &ex.nodes {
        targets[node.id] = node.is_target;
    }
    let transitions: Vec<(usize, usize, f64)> =
        ex.edges.iter().map(|e| (e.src, e.dst, e.rate)).collect();
    FiniteCtmc::new(n, &transitions, init, targets).map_err(|e| ImportError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::crn::{State, Target};
    use crate::models;
    use crate::witness::Witness;

    fn fig2b() -> WitnessCtmc {
        let crn = Arc::new(models::single_species());
        let mut g = WitnessCtmc::new(crn.clone(), Target { species: 1, value: 42 });
        let w = Witness::from_states(
            &crn,
            vec![State::from([1, 40]), State::from([1, 41]), State::from([1, 42])],
        )
        .unwrap();
        g.add_witness(&w);
        g
    }

    #[test]
    fn dot_counts() {
        let dot = fig2b().export_dot();
        let nodes = dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count();
        let edges = dot.lines().filter(|l| l.contains("->")).count();
        // Three states plus the sink; two real edges plus one sink edge per state.
        assert_eq!(nodes, 4);
        assert_eq!(edges, 5);
        assert!(dot.contains("n0 -> n1 [label=\"R1:1.00000\"]"));
        assert!(dot.contains("n1 -> n3 [label=\"R2:1.02500\", style=dashed]"));
        assert!(dot.contains("n2 -> n3 [label=\"R1+R2:2.05000\", style=dashed]"));
    }

    #[test]
    fn single_node_exports() {
        let crn = Arc::new(models::single_species());
        let g = WitnessCtmc::new(crn, Target { species: 1, value: 42 });
        let ex = g.to_export();
        assert_eq!(ex.nodes.len(), 2);
        assert_eq!(ex.edges.len(), 1);
        assert!(g.export_dot().starts_with("digraph"));
        assert!(g.export_prism(100.0).contains("label \"target\" = false;"));
        let c = finite_ctmc_from_json(&g.export_json()).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn json_schema_and_round_trip() {
        let g = fig2b();
        let text = g.export_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["species"], serde_json::json!(["S1", "S2"]));
        assert_eq!(v["nodes"][0]["populations"], serde_json::json!([1, 40]));
        assert_eq!(v["nodes"][2]["is_target"], serde_json::json!(true));
        assert_eq!(v["nodes"][3]["is_sink"], serde_json::json!(true));
        assert_eq!(v["edges"][0], serde_json::json!({"src": 0, "dst": 1, "rate": 1.0, "reactions": [0]}));
        let back = finite_ctmc_from_json(&text).unwrap();
        assert_eq!(back, g.to_finite_ctmc());
    }

    #[test]
    fn prism_module() {
        let text = fig2b().export_prism(100.0);
        assert!(text.contains("ctmc"));
        assert!(text.contains("s : [0..3] init 0;"));
        assert!(text.contains("[] s=0 -> 1.0:(s'=1) + 1.0:(s'=3);"));
        assert!(text.contains("label \"target\" = s=2;"));
        assert!(text.contains("F<=100.0"));
    }

    #[test]
    fn import_rejects_bad_documents() {
        assert!(finite_ctmc_from_json("{").is_err());
        let no_init = r#"{"species":[],"nodes":[{"id":0,"populations":[],"is_sink":false,"is_initial":false,"is_target":false}],"edges":[]}"#;
        assert!(finite_ctmc_from_json(no_init).is_err());
    }
}
