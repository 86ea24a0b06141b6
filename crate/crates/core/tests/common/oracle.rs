//! Independent bond-graph construction and a backtracking isomorphism check.

use std::collections::BTreeMap;

use circuit_graph::bondgraph::{BgNodeKind, BondGraph};
use circuit_graph::netlist::{net_order, Circuit, ElementKind, Mode};

/// Node-labelled, edge-weighted undirected graph.
#[derive(Debug, Clone, Default)]
pub struct Labeled {
    pub kinds: Vec<BgNodeKind>,
    pub values: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Labeled {
    fn node(&mut self, kind: BgNodeKind, value: f64) -> usize {
        self.kinds.push(kind);
        self.values.push(value);
        self.kinds.len() - 1
    }

    fn edge(&mut self, a: usize, b: usize, w: f64) {
        self.edges.push((a, b, w));
    }

    pub fn from_graph(g: &BondGraph) -> Self {
        Self {
            kinds: g.nodes.iter().map(|n| n.kind).collect(),
            values: g.nodes.iter().map(|n| n.value).collect(),
            edges: g.edges.iter().map(|e| (e.a, e.b, e.weight)).collect(),
        }
    }

    fn weights(&self) -> BTreeMap<(usize, usize), f64> {
        self.edges.iter().map(|&(a, b, w)| ((a.min(b), a.max(b)), w)).collect()
    }
}

fn element_kind(kind: ElementKind) -> BgNodeKind {
    match kind {
        ElementKind::VoltageSource => BgNodeKind::Se,
        ElementKind::CurrentSource => BgNodeKind::Sf,
        ElementKind::Resistor => BgNodeKind::R,
        ElementKind::Inductor => BgNodeKind::I,
        ElementKind::Capacitor => BgNodeKind::C,
        ElementKind::Switch => unreachable!("switches are handled separately"),
    }
}

/// Expected bond graph written directly from the element-to-node mapping:
/// a 0-junction per net, a 1-junction plus element node per two-terminal
/// element, a switched 1-junction plus zero flow source per switch and, for
/// DCM, a switched junction across the single inductor with the leftover duty.
pub fn expected_graph(circuit: &Circuit) -> Labeled {
    let mut g = Labeled::default();
    let mut nets: Vec<String> = circuit.elements.iter().flat_map(|e| [e.net_pos.clone(), e.net_neg.clone()]).collect();
    nets.sort_by(|a, b| net_order(a, b));
    nets.dedup();
    let j0: BTreeMap<String, usize> = nets.iter().map(|n| (n.clone(), g.node(BgNodeKind::Junction0, 0.0))).collect();
    let mut duties = Vec::new();
    for e in &circuit.elements {
        let (kind, value, w) = if e.kind == ElementKind::Switch {
            duties.push(e.value);
            (BgNodeKind::Junction1s, 0.0, e.value)
        } else {
            (BgNodeKind::Junction1, e.value, 1.0)
        };
        let j = g.node(kind, 0.0);
        let partner =
            if e.kind == ElementKind::Switch { g.node(BgNodeKind::Sf, 0.0) } else { g.node(element_kind(e.kind), value) };
        g.edge(j, partner, w);
        g.edge(j, j0[&e.net_pos], w);
        g.edge(j, j0[&e.net_neg], w);
    }
    if circuit.mode == Mode::Dcm {
        let inductor = circuit.elements.iter().find(|e| e.kind == ElementKind::Inductor).expect("DCM circuit has an inductor");
        let d3 = 1.0 - (duties[0] + duties[1]);
        let j = g.node(BgNodeKind::Junction1s, 0.0);
        let ctrl = g.node(BgNodeKind::Sf, 0.0);
        g.edge(j, ctrl, d3);
        g.edge(j, j0[&inductor.net_pos], d3);
        g.edge(j, j0[&inductor.net_neg], d3);
    }
    g
}

/// Finds a bijection preserving node kinds, node values, adjacency and edge
/// weights (all compared exactly) by depth-first search.
pub fn isomorphic(a: &Labeled, b: &Labeled) -> bool {
    let n = a.kinds.len();
    if n != b.kinds.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let (wa, wb) = (a.weights(), b.weights());
    if wa.len() != a.edges.len() || wb.len() != b.edges.len() {
        return false;
    }
    let neighbors = |w: &BTreeMap<(usize, usize), f64>| {
        let mut adj = vec![Vec::new(); n];
        for &(x, y) in w.keys() {
            adj[x].push(y);
            adj[y].push(x);
        }
        adj
    };
    let (adj_a, adj_b) = (neighbors(&wa), neighbors(&wb));
    let compatible =
        |i: usize, j: usize| a.kinds[i] == b.kinds[j] && a.values[i] == b.values[j] && adj_a[i].len() == adj_b[j].len();

    // visit a-nodes in BFS order so each one is usually adjacent to a mapped node
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        order.push(root);
        let mut k = order.len() - 1;
        while k < order.len() {
            for &m in &adj_a[order[k]] {
                if !seen[m] {
                    seen[m] = true;
                    order.push(m);
                }
            }
            k += 1;
        }
    }

    type Consistent<'a> = dyn Fn(usize, usize, &[Option<usize>]) -> bool + 'a;

    fn extend(depth: usize, order: &[usize], map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, ctx: &Consistent) -> bool {
        let Some(&i) = order.get(depth) else {
            return true;
        };
        for j in 0..used.len() {
            if used[j] || !ctx(i, j, map) {
                continue;
            }
            map[i] = Some(j);
            used[j] = true;
            if extend(depth + 1, order, map, used, ctx) {
                return true;
            }
            map[i] = None;
            used[j] = false;
        }
        false
    }

    let consistent = |i: usize, j: usize, map: &[Option<usize>]| {
        compatible(i, j)
            && map.iter().enumerate().all(|(x, mx)| match mx {
                Some(y) => wa.get(&(i.min(x), i.max(x))) == wb.get(&(j.min(*y), j.max(*y))),
                None => true,
            })
    };
    extend(0, &order, &mut vec![None; n], &mut vec![false; n], &consistent)
}
