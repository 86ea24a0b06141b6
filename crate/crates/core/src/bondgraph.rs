//! Circuit to bond-graph transformation.
//!
//! Every distinct net gets a 0-junction and every two-terminal element gets a
//! 1-junction joining the element node to the 0-junctions of its terminals.
//! Switches become switched 1-junctions (`Junction1s`) with a zero-valued
//! control flow source; the bonds of a switched junction carry the duty ratio
//! of its control signal. In DCM a virtual switch bridges the inductor of the
//! switching cell and conducts for the remaining fraction of the period.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{validate, Circuit, ElementKind, Mode, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BgNodeKind {
    Se,
    Sf,
    R,
    I,
    C,
    Junction1,
    Junction0,
    Junction1s,
    Junction0s,
}

impl BgNodeKind {
    pub const ALL: [BgNodeKind; 9] =
        [Self::Se, Self::Sf, Self::R, Self::I, Self::C, Self::Junction1, Self::Junction0, Self::Junction1s, Self::Junction0s];

    pub fn from_element(kind: ElementKind) -> Option<Self> {
        match kind {
            ElementKind::VoltageSource => Some(Self::Se),
            ElementKind::CurrentSource => Some(Self::Sf),
            ElementKind::Resistor => Some(Self::R),
            ElementKind::Inductor => Some(Self::I),
            ElementKind::Capacitor => Some(Self::C),
            ElementKind::Switch => None,
        }
    }

    pub fn is_junction(self) -> bool {
        matches!(self, Self::Junction1 | Self::Junction0 | Self::Junction1s | Self::Junction0s)
    }

    pub fn is_switched(self) -> bool {
        matches!(self, Self::Junction1s | Self::Junction0s)
    }
}

/// What a bond-graph node was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "name")]
pub enum NodeOrigin {
    Net(String),
    Element(String),
    /// 1-junction of the named element.
    ElementJunction(String),
    /// Zero-valued control source of the named switch.
    Control(String),
    VirtualSwitch,
    VirtualControl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgNode {
    pub id: usize,
    pub kind: BgNodeKind,
    pub value: f64,
    pub phase: f64,
    /// Source frequency on source nodes, switching frequency on control nodes.
    pub frequency: f64,
    pub origin: NodeOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BgEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondGraph {
    pub nodes: Vec<BgNode>,
    pub edges: Vec<BgEdge>,
    pub class_label: Option<usize>,
    pub mode: Mode,
    pub frequency: f64,
    /// Analytic resonance frequency, when the generating template defines one.
    pub resonance_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BondGraphError {
    #[error("invalid circuit: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidCircuit(Vec<Violation>),
    #[error("switch construction requires a CCM or DCM circuit with at least one switch")]
    ModeRequiresSwitch,
    #[error("virtual switch requires a DCM graph")]
    NotDcm,
    #[error("duty ratios d1 = {d1}, d2 = {d2} must be non-negative with d1 + d2 <= 1")]
    DutyOverflow { d1: f64, d2: f64 },
    #[error("no inductor named `{0}`")]
    NoSuchInductor(String),
    #[error("cannot place DCM virtual switch: {0}")]
    UnsupportedDcmCell(String),
}

impl BondGraph {
    fn empty(circuit: &Circuit) -> Self {
        Self {
            nodes: Vec::new(),
            edges: Vec::new(),
            class_label: circuit.class_label,
            mode: circuit.mode,
            frequency: circuit.frequency,
            resonance_hz: None,
        }
    }

    fn push_node(&mut self, kind: BgNodeKind, value: f64, phase: f64, frequency: f64, origin: NodeOrigin) -> usize {
        let id = self.nodes.len();
        self.nodes.push(BgNode { id, kind, value, phase, frequency, origin });
        id
    }

    fn push_edge(&mut self, a: usize, b: usize, weight: f64) {
        debug_assert!(a != b);
        debug_assert!(!self.edges.iter().any(|e| (e.a, e.b) == (a, b) || (e.a, e.b) == (b, a)));
        self.edges.push(BgEdge { a, b, weight });
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn find(&self, origin: &NodeOrigin) -> Option<usize> {
        self.nodes.iter().position(|n| &n.origin == origin)
    }

    pub fn degree(&self, id: usize) -> usize {
        self.edges.iter().filter(|e| e.a == id || e.b == id).count()
    }

    pub fn neighbors(&self, id: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.edges.iter().filter_map(move |e| {
            if e.a == id {
                Some((e.b, e.weight))
            } else if e.b == id {
                Some((e.a, e.weight))
            } else {
                None
            }
        })
    }

    pub fn count_kind(&self, kind: BgNodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Human-readable node and edge listing.
    pub fn summary(&self) -> String {
        let mut counts: BTreeMap<BgNodeKind, usize> = BTreeMap::new();
        for n in &self.nodes {
            *counts.entry(n.kind).or_default() += 1;
        }
        let mut s = format!("bond graph: {} nodes, {} edges, mode {}\n", self.nodes.len(), self.edges.len(), self.mode);
        for (k, c) in counts {
            s.push_str(&format!("  {k:?}: {c}\n"));
        }
        for n in &self.nodes {
            let label = match &n.origin {
                NodeOrigin::Net(x) => format!("net {x}"),
                NodeOrigin::Element(x) => x.clone(),
                NodeOrigin::ElementJunction(x) => format!("1-junction({x})"),
                NodeOrigin::Control(x) => format!("control({x})"),
                NodeOrigin::VirtualSwitch => "virtual switch".into(),
                NodeOrigin::VirtualControl => "control(virtual)".into(),
            };
            s.push_str(&format!("  [{}] {:?} {} value={}", n.id, n.kind, label, n.value));
            if n.phase != 0.0 {
                s.push_str(&format!(" phase={}", n.phase));
            }
            s.push('\n');
        }
        for e in &self.edges {
            s.push_str(&format!("  {} -- {} (w={})\n", e.a, e.b, e.weight));
        }
        s
    }
}

/// Builds the bond graph of a valid circuit, applying the switch and DCM
/// constructions for switching circuits.
pub fn to_bond_graph(circuit: &Circuit) -> Result<BondGraph, BondGraphError> {
    let violations = validate(circuit);
    if !violations.is_empty() {
        return Err(BondGraphError::InvalidCircuit(violations));
    }

    let mut g = BondGraph::empty(circuit);
    for net in circuit.nets() {
        g.push_node(BgNodeKind::Junction0, 0.0, 0.0, 0.0, NodeOrigin::Net(net));
    }
    for e in &circuit.elements {
        let Some(kind) = BgNodeKind::from_element(e.kind) else {
            continue;
        };
        let freq = if e.kind.is_source() { circuit.frequency } else { 0.0 };
        let j1 = g.push_node(BgNodeKind::Junction1, 0.0, 0.0, 0.0, NodeOrigin::ElementJunction(e.name.clone()));
        let el = g.push_node(kind, e.value, 0.0, freq, NodeOrigin::Element(e.name.clone()));
        g.push_edge(j1, el, 1.0);
        connect_terminals(&mut g, j1, &e.net_pos, &e.net_neg, 1.0);
    }

    match circuit.mode {
        Mode::Continuous => Ok(g),
        Mode::Ccm => apply_switch_cells(circuit, g),
        Mode::Dcm => {
            let g = apply_switch_cells(circuit, g)?;
            let (inductor, d1, d2) = dcm_cell(circuit)?;
            apply_dcm_virtual_switch(g, &inductor, d1, d2)
        }
    }
}

fn net_junction(g: &BondGraph, net: &str) -> usize {
    g.find(&NodeOrigin::Net(net.to_string())).unwrap_or_else(|| panic!("0-junction for net {net} exists by construction"))
}

fn connect_terminals(g: &mut BondGraph, junction: usize, pos: &str, neg: &str, weight: f64) {
    let (p, n) = (net_junction(g, pos), net_junction(g, neg));
    g.push_edge(junction, p, weight);
    g.push_edge(junction, n, weight);
}

/// Appends one switched 1-junction and its zero-valued control source per
/// switch, in netlist order. Every bond of the switched junction carries the
/// switch's duty ratio.
pub fn apply_switch_cells(circuit: &Circuit, mut graph: BondGraph) -> Result<BondGraph, BondGraphError> {
    if !circuit.mode.is_switching() || circuit.switches().next().is_none() {
        return Err(BondGraphError::ModeRequiresSwitch);
    }
    for (_, sw) in circuit.switches() {
        let j = graph.push_node(BgNodeKind::Junction1s, 0.0, 0.0, 0.0, NodeOrigin::Element(sw.name.clone()));
        let ctrl = graph.push_node(BgNodeKind::Sf, 0.0, sw.phase, circuit.frequency, NodeOrigin::Control(sw.name.clone()));
        graph.push_edge(j, ctrl, sw.value);
        connect_terminals(&mut graph, j, &sw.net_pos, &sw.net_neg, sw.value);
    }
    Ok(graph)
}

/// Locates the inductor and the two switch duties of the circuit's DCM cell:
/// the single two-switch cell whose commutation net touches exactly one inductor.
fn dcm_cell(circuit: &Circuit) -> Result<(String, f64, f64), BondGraphError> {
    let cells = circuit.switch_cells();
    let [cell] = cells.as_slice() else {
        return Err(BondGraphError::UnsupportedDcmCell(format!("expected one switching cell, found {}", cells.len())));
    };
    let [s1, s2] = cell.switches[..] else {
        return Err(BondGraphError::UnsupportedDcmCell(format!(
            "expected two switches in the cell, found {}",
            cell.switches.len()
        )));
    };
    let inductors: Vec<&str> = circuit
        .elements
        .iter()
        .filter(|e| e.kind == ElementKind::Inductor && cell.common_nets.iter().any(|n| e.touches(n)))
        .map(|e| e.name.as_str())
        .collect();
    let [inductor] = inductors[..] else {
        return Err(BondGraphError::UnsupportedDcmCell(format!(
            "expected one inductor on the commutation net, found {}",
            inductors.len()
        )));
    };
    Ok((inductor.to_string(), circuit.elements[s1].value, circuit.elements[s2].value))
}

/// Duty of the virtual switch; `d1 + d2 + d3 == 1` holds exactly in floating point.
pub fn virtual_duty(d1: f64, d2: f64) -> f64 {
    1.0 - (d1 + d2)
}

/// Adds the DCM virtual switch across the terminals of `inductor`.
pub fn apply_dcm_virtual_switch(mut graph: BondGraph, inductor: &str, d1: f64, d2: f64) -> Result<BondGraph, BondGraphError> {
    if graph.mode != Mode::Dcm {
        return Err(BondGraphError::NotDcm);
    }
    if !(d1 >= 0.0 && d2 >= 0.0 && d1 + d2 <= 1.0) {
        return Err(BondGraphError::DutyOverflow { d1, d2 });
    }
    let el = graph
        .find(&NodeOrigin::Element(inductor.to_string()))
        .filter(|&i| graph.nodes[i].kind == BgNodeKind::I)
        .ok_or_else(|| BondGraphError::NoSuchInductor(inductor.to_string()))?;
    let (j1, _) = graph.neighbors(el).next().expect("element node is bonded to its 1-junction");
    let terminals: Vec<usize> = graph.neighbors(j1).map(|(n, _)| n).filter(|&n| n != el).collect();
    let [a, b] = terminals[..] else {
        unreachable!("1-junction of a two-terminal element has two terminal bonds");
    };

    let d3 = virtual_duty(d1, d2);
    let freq = graph.frequency;
    let vs = graph.push_node(BgNodeKind::Junction1s, 0.0, 0.0, 0.0, NodeOrigin::VirtualSwitch);
    let ctrl = graph.push_node(BgNodeKind::Sf, 0.0, 0.0, freq, NodeOrigin::VirtualControl);
    graph.push_edge(vs, ctrl, d3);
    graph.push_edge(vs, a, d3);
    graph.push_edge(vs, b, d3);
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    const BUCK: &str = "V1 1 0 10\nS1 1 2 0.6\nS2 2 0 0.4\nL1 2 3 1m\nC1 3 0 1u\nR1 3 0 5\n";

    fn graph(text: &str) -> BondGraph {
        to_bond_graph(&parse_netlist(text).unwrap()).unwrap()
    }

    #[test]
    fn source_and_resistor() {
        let g = graph("V1 1 0 10\nR1 1 0 5");
        let kinds: Vec<BgNodeKind> = g.nodes.iter().map(|n| n.kind).collect();
        use BgNodeKind::*;
        assert_eq!(kinds, vec![Junction0, Junction0, Junction1, Se, Junction1, R]);
        assert_eq!(g.nodes[0].origin, NodeOrigin::Net("0".into()));
        assert_eq!(g.edges.len(), 6);
        assert!(g.edges.iter().all(|e| e.weight == 1.0));
        assert_eq!(g.nodes[3].value, 10.0);
        assert_eq!(g.nodes[3].frequency, 1.0);
        assert_eq!(g.nodes[5].frequency, 0.0);
    }

    #[test]
    fn series_loop_counts() {
        let g = graph("V1 1 0 10\nR1 1 2 5\nL1 2 3 1m\nC1 3 0 1u");
        assert_eq!(g.node_count(), 12);
        assert_eq!(g.edges.len(), 12);
        assert_eq!(g.count_kind(BgNodeKind::Junction0), 4);
        assert_eq!(g.count_kind(BgNodeKind::Junction1), 4);
    }

    #[test]
    fn self_loop_is_invalid() {
        let c = parse_netlist("V1 1 0 10\nR1 1 1 5").unwrap();
        assert!(matches!(to_bond_graph(&c), Err(BondGraphError::InvalidCircuit(_))));
    }

    #[test]
    fn buck_cell_duty_weights() {
        let g = graph(&format!("{BUCK}.mode CCM"));
        assert_eq!(g.count_kind(BgNodeKind::Junction1s), 2);
        let s1 = g.find(&NodeOrigin::Element("S1".into())).unwrap();
        let s2 = g.find(&NodeOrigin::Element("S2".into())).unwrap();
        assert!(g.neighbors(s1).all(|(_, w)| w == 0.6));
        assert!(g.neighbors(s2).all(|(_, w)| w == 0.4));
        assert_eq!(g.degree(s1), 3);
        // switched part is appended after the continuous part
        assert!(s1 > g.find(&NodeOrigin::Element("R1".into())).unwrap());
        let ctrl = g.find(&NodeOrigin::Control("S1".into())).unwrap();
        assert_eq!(g.nodes[ctrl].kind, BgNodeKind::Sf);
        assert_eq!(g.nodes[ctrl].value, 0.0);
        for e in &g.edges {
            let switched = g.nodes[e.a].kind.is_switched() || g.nodes[e.b].kind.is_switched();
            assert_eq!(switched, e.weight != 1.0);
        }
    }

    #[test]
    fn phase_lands_on_control_source() {
        let g = graph(&format!("{BUCK}.mode CCM\n.phase S1 {}", std::f64::consts::FRAC_PI_2));
        let c1 = g.find(&NodeOrigin::Control("S1".into())).unwrap();
        let c2 = g.find(&NodeOrigin::Control("S2".into())).unwrap();
        assert_eq!(g.nodes[c1].phase, std::f64::consts::FRAC_PI_2);
        assert_eq!(g.nodes[c2].phase, 0.0);
        let s1 = g.find(&NodeOrigin::Element("S1".into())).unwrap();
        assert_eq!(g.nodes[s1].phase, 0.0);
    }

    #[test]
    fn switch_cells_need_switching_mode() {
        let c = parse_netlist("V1 1 0 10\nR1 1 0 5").unwrap();
        let g = to_bond_graph(&c).unwrap();
        assert_eq!(apply_switch_cells(&c, g), Err(BondGraphError::ModeRequiresSwitch));
    }

    fn dcm_base() -> BondGraph {
        let mut g = graph(&format!("{BUCK}.mode CCM"));
        g.mode = Mode::Dcm;
        g
    }

    #[test]
    fn virtual_switch_weights() {
        let g = apply_dcm_virtual_switch(dcm_base(), "L1", 0.3, 0.5).unwrap();
        let vs = g.find(&NodeOrigin::VirtualSwitch).unwrap();
        assert!(g.neighbors(vs).all(|(_, w)| (w - 0.2).abs() < 1e-15));
        assert_eq!(g.degree(vs), 3);
        let l = g.find(&NodeOrigin::Element("L1".into())).unwrap();
        let (lj, _) = g.neighbors(l).next().unwrap();
        let mut l_terms: Vec<usize> = g.neighbors(lj).map(|(n, _)| n).filter(|&n| n != l).collect();
        let mut v_terms: Vec<usize> =
            g.neighbors(vs).map(|(n, _)| n).filter(|&n| g.nodes[n].kind == BgNodeKind::Junction0).collect();
        l_terms.sort();
        v_terms.sort();
        assert_eq!(l_terms, v_terms);
    }

    #[test]
    fn virtual_switch_at_ccm_boundary() {
        let g = apply_dcm_virtual_switch(dcm_base(), "L1", 0.3, 0.7).unwrap();
        let vs = g.find(&NodeOrigin::VirtualSwitch).unwrap();
        assert!(g.neighbors(vs).all(|(_, w)| w == 0.0));
    }

    #[test]
    fn virtual_switch_errors() {
        assert_eq!(apply_dcm_virtual_switch(dcm_base(), "L1", 0.6, 0.6), Err(BondGraphError::DutyOverflow { d1: 0.6, d2: 0.6 }));
        assert_eq!(apply_dcm_virtual_switch(dcm_base(), "C1", 0.3, 0.3), Err(BondGraphError::NoSuchInductor("C1".into())));
        let ccm = graph(&format!("{BUCK}.mode CCM"));
        assert_eq!(apply_dcm_virtual_switch(ccm, "L1", 0.3, 0.3), Err(BondGraphError::NotDcm));
    }

    #[test]
    fn dcm_circuit_gets_virtual_switch() {
        let g = graph(&format!("{BUCK}.mode DCM\n.duty S2 0.3"));
        assert_eq!(g.count_kind(BgNodeKind::Junction1s), 3);
        let vs = g.find(&NodeOrigin::VirtualSwitch).unwrap();
        let d3 = g.neighbors(vs).next().unwrap().1;
        assert_eq!(0.6 + 0.3 + d3, 1.0);
    }

    #[test]
    fn virtual_duty_sums_exactly() {
        for i in 0..=100 {
            for j in 0..=(100 - i) {
                let (d1, d2) = (i as f64 * 0.01, j as f64 * 0.01);
                if d1 + d2 <= 1.0 {
                    assert_eq!(d1 + d2 + virtual_duty(d1, d2), 1.0, "{d1} {d2}");
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let text = format!("{BUCK}.mode DCM\n.duty S2 0.25");
        assert_eq!(graph(&text), graph(&text));
    }
}
