//! Human-reviewable output: model graphs and scenario grids as text (DOT
//! and ASCII). Image generation is left to external DOT tooling.

use std::collections::BTreeMap;

use crate::model::{Guard, Model, Scenario};
use crate::positions::{self, Infeasible, PositionAssignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Dot,
    Ascii,
}

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    pub format: OutputFormat,
    /// Cap on leaves in the scenario tree; extra scenarios collapse into one
    /// elision node.
    pub max_scenarios: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            format: OutputFormat::Dot,
            max_scenarios: 64,
        }
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT digraph of the diagram: one cluster per lane with boxes ordered by
/// position, solid transition edges, dashed guard-condition edges, sync
/// groups sharing one color, initial boxes double-bordered.
pub fn render_model_dot(m: &Model) -> String {
    let mut out = String::new();
    out.push_str(&format!("digraph \"{}\" {{\n", dot_escape(m.name())));
    out.push_str("  rankdir=LR;\n  node [shape=box];\n");

    for (li, lane) in m.lanes().iter().enumerate() {
        out.push_str(&format!("  subgraph cluster_{li} {{\n"));
        out.push_str(&format!("    label=\"{}\";\n", dot_escape(lane)));
        let mut members: Vec<usize> = (0..m.num_boxes())
            .filter(|&b| m.box_info(b).lane == li)
            .collect();
        members.sort_by_key(|&b| {
            let info = m.box_info(b);
            let key = match info.pos {
                crate::model::Position::Concrete(p) => p,
                crate::model::Position::Parametric => info.index,
            };
            (key, b)
        });
        for b in members {
            let initial = m.initial_box(m.box_info(b).car) == b;
            let peripheries = if initial { ", peripheries=2" } else { "" };
            out.push_str(&format!(
                "    b{b} [label=\"{}\"{peripheries}];\n",
                dot_escape(&m.box_id(b).to_string())
            ));
        }
        out.push_str("  }\n");
    }

    let sync_colors = ["blue", "red", "darkgreen", "purple", "orange"];
    for (ti, t) in m.transitions().iter().enumerate() {
        let mut attrs: Vec<String> = Vec::new();
        if let Some(g) = m.sync_of(ti) {
            let color = sync_colors[g % sync_colors.len()];
            attrs.push(format!("color={color}"));
            attrs.push(format!("label=\"sync{g}\""));
        }
        let attr_text = if attrs.is_empty() {
            String::new()
        } else {
            format!(" [{}]", attrs.join(", "))
        };
        out.push_str(&format!("  b{} -> b{}{attr_text};\n", t.src, t.dst));
        match t.guard {
            Guard::None => {}
            Guard::Exists(c) => out.push_str(&format!(
                "  b{c} -> b{} [style=dashed, label=\"exists\"];\n",
                t.src
            )),
            Guard::Absent(c) => out.push_str(&format!(
                "  b{c} -> b{} [style=dashed, label=\"absent\"];\n",
                t.src
            )),
        }
    }
    out.push_str("}\n");
    out
}

/// One numbered text grid per scene: rows are lanes, columns are positions,
/// cells carry the occupying car names. Co-located cars share a cell joined
/// by `+` and marked with `!`.
pub fn render_scenario_ascii(m: &Model, s: &Scenario) -> Result<String, Infeasible> {
    let pos = positions::resolve_positions(m)?;
    Ok(render_scenario_ascii_with(m, &pos, s))
}

pub fn render_scenario_ascii_with(m: &Model, pos: &PositionAssignment, s: &Scenario) -> String {
    let max_pos = (0..m.num_boxes()).map(|b| pos.get(b)).max().unwrap_or(0) as usize;
    let lane_width = m.lanes().iter().map(|l| l.len()).max().unwrap_or(0);

    // Cell texts first; the column width covers the widest one but is at
    // least the longest car name plus one.
    let min_width = (0..m.num_cars())
        .map(|c| m.car_name(c).len())
        .max()
        .unwrap_or(0)
        + 1;
    let mut grids: Vec<Vec<Vec<String>>> = Vec::with_capacity(s.scenes.len());
    for scene in &s.scenes {
        let mut grid = vec![vec![String::new(); max_pos + 1]; m.lanes().len()];
        for (c, &b) in scene.boxes().iter().enumerate() {
            let info = m.box_info(b);
            let cell = &mut grid[info.lane][pos.get(b) as usize];
            if cell.is_empty() {
                cell.push_str(m.car_name(c));
            } else {
                cell.push('+');
                cell.push_str(m.car_name(c));
                cell.push('!');
            }
        }
        grids.push(grid);
    }
    let width = grids
        .iter()
        .flatten()
        .flatten()
        .map(|c| c.len())
        .max()
        .unwrap_or(0)
        .max(min_width);

    let mut out = String::new();
    for (i, grid) in grids.iter().enumerate() {
        out.push_str(&format!("scene {i}\n"));
        for (li, row) in grid.iter().enumerate() {
            out.push_str(&format!("  {:lane_width$} |", m.lane_name(li)));
            for cell in row {
                let text = if cell.is_empty() { "." } else { cell };
                out.push_str(&format!(" {text:width$}"));
            }
            while out.ends_with(' ') {
                out.pop();
            }
            out.push('\n');
        }
    }
    out
}

/// DOT tree of shared scene prefixes; one leaf per scenario up to the cap,
/// then a single elision node noting how many were dropped.
pub fn render_scenario_tree(m: &Model, runs: &[Scenario], options: &RenderOptions) -> String {
    let cap = options.max_scenarios.max(1);
    let shown = &runs[..runs.len().min(cap)];
    let elided = runs.len().saturating_sub(cap);

    // Trie over scene sequences, nodes created in first-seen order.
    struct Node {
        label: String,
        children: BTreeMap<Vec<usize>, usize>,
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut root: BTreeMap<Vec<usize>, usize> = BTreeMap::new();

    for run in shown {
        let mut at: Option<usize> = None;
        for scene in &run.scenes {
            let key = scene.boxes().to_vec();
            let table = match at {
                None => &mut root,
                Some(n) => &mut nodes[n].children,
            };
            let next = match table.get(&key) {
                Some(&n) => n,
                None => {
                    let label = scene
                        .boxes()
                        .iter()
                        .map(|&b| m.box_id(b).to_string())
                        .collect::<Vec<_>>()
                        .join(" ");
                    let id = nodes.len();
                    match at {
                        None => {
                            root.insert(key, id);
                        }
                        Some(n) => {
                            nodes[n].children.insert(key, id);
                        }
                    }
                    nodes.push(Node {
                        label,
                        children: BTreeMap::new(),
                    });
                    if let Some(parent) = at {
                        edges.push((parent, id));
                    }
                    id
                }
            };
            at = Some(next);
        }
    }

    let mut out = String::new();
    out.push_str("digraph scenarios {\n  node [shape=box];\n");
    for (i, n) in nodes.iter().enumerate() {
        out.push_str(&format!("  n{i} [label=\"{}\"];\n", dot_escape(&n.label)));
    }
    for (a, b) in &edges {
        out.push_str(&format!("  n{a} -> n{b};\n"));
    }
    if elided > 0 {
        out.push_str(&format!(
            "  elided [label=\"… {elided} more\", shape=plaintext];\n"
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_scenarios, EnumOptions};
    use crate::families::{bench, fig2, lane_change, Strength};
    use crate::model::{BoxId, Configuration, Model, RawGuard, RawModel};

    /// Minimal structural DOT check: digraph header, balanced braces,
    /// statements end in `;` or open/close a block.
    fn assert_valid_dot(text: &str) {
        assert!(text.starts_with("digraph "), "missing digraph header");
        let mut depth = 0i32;
        for ch in text.chars() {
            match ch {
                '{' => depth += 1,
                '}' => depth -= 1,
                _ => {}
            }
            assert!(depth >= 0, "unbalanced braces");
        }
        assert_eq!(depth, 0, "unbalanced braces");
        for line in text.lines().skip(1) {
            let t = line.trim();
            if t.is_empty() || t == "}" {
                continue;
            }
            assert!(
                t.ends_with(';') || t.ends_with('{') || t.ends_with('}'),
                "unterminated statement: {t}"
            );
        }
    }

    #[test]
    fn fig2_dot_structure() {
        let m = Model::compile(&fig2()).unwrap();
        let dot = render_model_dot(&m);
        assert_valid_dot(&dot);
        assert_eq!(dot.matches("subgraph cluster_").count(), 2);
        assert_eq!(dot.matches("[label=\"LCar.").count(), 3);
        assert_eq!(dot.matches("[label=\"RCar.").count(), 3);
        // Four transitions, none dashed.
        assert_eq!(dot.matches(" -> ").count(), 4);
        assert!(!dot.contains("dashed"));
    }

    #[test]
    fn guard_renders_as_dashed_edge() {
        let mut raw = fig2();
        raw.add_guarded_trans("LCar", 0, 2, RawGuard::Exists(BoxId::new("RCar", 1)));
        let m = Model::compile(&raw).unwrap();
        let dot = render_model_dot(&m);
        assert_valid_dot(&dot);
        assert!(dot.contains("style=dashed"));
        assert!(dot.contains("exists"));
    }

    #[test]
    fn sync_edges_are_labeled() {
        let m = crate::families::fig3_sync();
        let dot = render_model_dot(&m);
        assert_valid_dot(&dot);
        assert_eq!(dot.matches("sync0").count(), 2);
    }

    #[test]
    fn empty_model_is_valid_dot() {
        let raw = RawModel {
            name: "empty".into(),
            ..Default::default()
        };
        let m = Model::compile(&raw).unwrap();
        assert_valid_dot(&render_model_dot(&m));
    }

    #[test]
    fn bench1_run_renders_three_grids() {
        let m = bench(1);
        let b = |car: &str, i: u32| m.find_box(&BoxId::new(car, i)).unwrap();
        let s = Scenario {
            scenes: vec![
                Configuration::new(vec![b("LCar", 0), b("RCar", 0)]),
                Configuration::new(vec![b("LCar", 1), b("RCar", 0)]),
                Configuration::new(vec![b("LCar", 1), b("RCar", 1)]),
            ],
        };
        let text = render_scenario_ascii(&m, &s).unwrap();
        assert_eq!(text.matches("scene ").count(), 3);
        assert!(text.contains("scene 0"));
        assert!(text.contains("LCar"));
        assert!(text.contains("Left"));
    }

    #[test]
    fn collision_scene_is_marked() {
        let m = lane_change(Strength::Normal);
        let ego3 = m.find_box(&BoxId::new("EgoCar", 3)).unwrap();
        let r1 = m.find_box(&BoxId::new("RCar", 1)).unwrap();
        let s = Scenario {
            scenes: vec![Configuration::new(vec![ego3, r1])],
        };
        let text = render_scenario_ascii(&m, &s).unwrap();
        assert!(text.contains('+'));
        assert!(text.contains('!'));
    }

    #[test]
    fn ascii_is_injective_over_fig2_scenarios() {
        let m = Model::compile(&fig2()).unwrap();
        let r = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        let texts: std::collections::BTreeSet<String> = r
            .scenarios
            .iter()
            .map(|s| render_scenario_ascii(&m, s).unwrap())
            .collect();
        assert_eq!(texts.len(), r.scenarios.len());
    }

    #[test]
    fn fig2_tree_has_six_leaves() {
        let m = Model::compile(&fig2()).unwrap();
        let r = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        let dot = render_scenario_tree(&m, &r.scenarios, &RenderOptions::default());
        assert_valid_dot(&dot);
        let nodes = dot.matches("n").count();
        let _ = nodes;
        // Leaves = nodes that never appear as an edge source.
        let mut sources = std::collections::BTreeSet::new();
        let mut all = std::collections::BTreeSet::new();
        for line in dot.lines() {
            let t = line.trim();
            if let Some((a, rest)) = t.split_once(" -> ") {
                sources.insert(a.to_string());
                all.insert(a.to_string());
                all.insert(rest.trim_end_matches(';').to_string());
            } else if t.starts_with('n') && t.contains("[label=") {
                all.insert(t.split_whitespace().next().unwrap().to_string());
            }
        }
        let leaves = all.difference(&sources).count();
        assert_eq!(leaves, 6);
        assert!(!dot.contains("elided"));
    }

    #[test]
    fn single_scenario_tree_is_a_path() {
        let m = bench(1);
        let r = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        let dot = render_scenario_tree(&m, &r.scenarios[..1], &RenderOptions::default());
        assert_valid_dot(&dot);
        assert_eq!(dot.matches(" -> ").count(), r.scenarios[0].len() - 1);
    }

    #[test]
    fn tree_cap_elides() {
        let m = Model::compile(&fig2()).unwrap();
        let r = enumerate_scenarios(&m, &EnumOptions::default()).unwrap();
        let dot = render_scenario_tree(
            &m,
            &r.scenarios,
            &RenderOptions {
                max_scenarios: 3,
                ..Default::default()
            },
        );
        assert_valid_dot(&dot);
        assert!(dot.contains("3 more"));
    }
}
