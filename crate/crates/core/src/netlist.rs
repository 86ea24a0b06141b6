//! SPICE-like netlist parsing, rendering and validation.
//!
//! Grammar (line oriented, `*` starts a comment line):
//!
//! ```text
//! <Name> <net+> <net-> <value>      Name starts with V, I, R, L, C or S
//! .freq <hz>
//! .mode CONT|CCM|DCM
//! .duty <switch-name> <d>
//! .phase <switch-name> <radians>
//! ```
//!
//! Values accept the usual engineering suffixes (`p`, `n`, `u`, `m`, `k`,
//! `meg`, `g`). The ground net is spelled `0`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GROUND: &str = "0";

const DUTY_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementKind {
    VoltageSource,
    CurrentSource,
    Resistor,
    Inductor,
    Capacitor,
    Switch,
}

impl ElementKind {
    pub fn from_prefix(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'V' => Some(Self::VoltageSource),
            'I' => Some(Self::CurrentSource),
            'R' => Some(Self::Resistor),
            'L' => Some(Self::Inductor),
            'C' => Some(Self::Capacitor),
            'S' => Some(Self::Switch),
            _ => None,
        }
    }

    pub fn prefix(self) -> char {
        match self {
            Self::VoltageSource => 'V',
            Self::CurrentSource => 'I',
            Self::Resistor => 'R',
            Self::Inductor => 'L',
            Self::Capacitor => 'C',
            Self::Switch => 'S',
        }
    }

    pub fn is_source(self) -> bool {
        matches!(self, Self::VoltageSource | Self::CurrentSource)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub net_pos: String,
    pub net_neg: String,
    /// Component value in SI units; the duty ratio for switches.
    pub value: f64,
    /// Phase shift in radians. Only meaningful for switches.
    pub phase: f64,
}

impl Element {
    pub fn new(name: impl Into<String>, kind: ElementKind, pos: impl Into<String>, neg: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), kind, net_pos: pos.into(), net_neg: neg.into(), value, phase: 0.0 }
    }

    pub fn touches(&self, net: &str) -> bool {
        self.net_pos == net || self.net_neg == net
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Continuous,
    Ccm,
    Dcm,
}

impl Mode {
    pub fn is_switching(self) -> bool {
        !matches!(self, Mode::Continuous)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Mode::Continuous => "CONT",
            Mode::Ccm => "CCM",
            Mode::Dcm => "DCM",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CONT" | "CONTINUOUS" => Ok(Mode::Continuous),
            "CCM" => Ok(Mode::Ccm),
            "DCM" => Ok(Mode::Dcm),
            other => Err(format!("unknown mode `{other}` (expected CONT, CCM or DCM)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub elements: Vec<Element>,
    /// Source frequency for continuous circuits, switching frequency otherwise.
    pub frequency: f64,
    pub mode: Mode,
    pub class_label: Option<usize>,
}

impl Default for Circuit {
    fn default() -> Self {
        Self { elements: Vec::new(), frequency: 1.0, mode: Mode::Continuous, class_label: None }
    }
}

/// Numeric nets sort numerically and before named nets, which sort lexically.
pub fn net_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Switches that commutate together: they share a non-ground net.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCell {
    /// Indices into `Circuit::elements`, in netlist order.
    pub switches: Vec<usize>,
    /// Non-ground nets shared by two or more switches of the cell.
    pub common_nets: Vec<String>,
}

impl Circuit {
    /// Distinct nets referenced by elements, in [`net_order`].
    pub fn nets(&self) -> Vec<String> {
        let mut nets: Vec<String> = self
            .elements
            .iter()
            .flat_map(|e| [e.net_pos.clone(), e.net_neg.clone()])
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        nets.sort_by(|a, b| net_order(a, b));
        nets
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn switches(&self) -> impl Iterator<Item = (usize, &Element)> {
        self.elements.iter().enumerate().filter(|(_, e)| e.kind == ElementKind::Switch)
    }

    pub fn switch_cells(&self) -> Vec<SwitchCell> {
        let switch_idx: Vec<usize> = self.switches().map(|(i, _)| i).collect();
        let mut parent: Vec<usize> = (0..switch_idx.len()).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        let mut by_net: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (k, &i) in switch_idx.iter().enumerate() {
            let e = &self.elements[i];
            for net in [e.net_pos.as_str(), e.net_neg.as_str()] {
                if net != GROUND {
                    by_net.entry(net).or_default().push(k);
                }
            }
        }
        for members in by_net.values() {
            for w in members.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut cells: BTreeMap<usize, SwitchCell> = BTreeMap::new();
        for (k, &idx) in switch_idx.iter().enumerate() {
            let root = find(&mut parent, k);
            cells.entry(root).or_insert_with(|| SwitchCell { switches: Vec::new(), common_nets: Vec::new() }).switches.push(idx);
        }
        for cell in cells.values_mut() {
            let mut nets: Vec<String> = by_net
                .iter()
                .filter(|(_, m)| m.iter().filter(|&&k| cell.switches.contains(&switch_idx[k])).count() >= 2)
                .map(|(n, _)| n.to_string())
                .collect();
            nets.sort_by(|a, b| net_order(a, b));
            cell.common_nets = nets;
        }
        cells.into_values().collect()
    }

    /// Canonical netlist text. `parse_netlist(&c.render()) == c` for valid
    /// circuits without a class label.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.elements {
            out.push_str(&format!("{} {} {} {}\n", e.name, e.net_pos, e.net_neg, e.value));
        }
        out.push_str(&format!(".freq {}\n", self.frequency));
        out.push_str(&format!(".mode {}\n", self.mode));
        for e in &self.elements {
            if e.phase != 0.0 {
                out.push_str(&format!(".phase {} {}\n", e.name, e.phase));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: duplicate element name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: unknown element prefix `{prefix}` (expected V, I, R, L, C or S)")]
    UnknownKindPrefix { line: usize, prefix: char },
}

impl NetlistError {
    pub fn line(&self) -> usize {
        match self {
            Self::Syntax { line, .. } | Self::DuplicateName { line, .. } | Self::UnknownKindPrefix { line, .. } => *line,
        }
    }
}

/// Parses a number with an optional SPICE engineering suffix.
pub fn parse_value(token: &str) -> Option<f64> {
    if let Ok(v) = token.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let lower = token.to_ascii_lowercase();
    let (digits, exponent) = if let Some(d) = lower.strip_suffix("meg") {
        (d, 6)
    } else {
        let (d, last) = lower.split_at(lower.len().checked_sub(1)?);
        let exponent = match last {
            "t" => 12,
            "g" => 9,
            "k" => 3,
            "m" => -3,
            "u" => -6,
            "n" => -9,
            "p" => -12,
            "f" => -15,
            _ => return None,
        };
        (d, exponent)
    };
    let v = if digits.contains('e') {
        digits.parse::<f64>().ok()? * 10f64.powi(exponent)
    } else {
        format!("{digits}e{exponent}").parse::<f64>().ok()?
    };
    v.is_finite().then_some(v)
}

pub fn parse_netlist(text: &str) -> Result<Circuit, NetlistError> {
    let mut circuit = Circuit::default();
    let mut names: HashMap<String, usize> = HashMap::new();
    // (line, switch name, value) applied once all elements are known.
    let mut duties: Vec<(usize, String, f64)> = Vec::new();
    let mut phases: Vec<(usize, String, f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let syntax = |reason: String| NetlistError::Syntax { line, reason };

        if let Some(directive) = tokens[0].strip_prefix('.') {
            match directive.to_ascii_lowercase().as_str() {
                "freq" => {
                    let [_, v] = tokens[..] else {
                        return Err(syntax("expected `.freq <hz>`".into()));
                    };
                    circuit.frequency = parse_value(v).ok_or_else(|| syntax(format!("invalid frequency `{v}`")))?;
                }
                "mode" => {
                    let [_, m] = tokens[..] else {
                        return Err(syntax("expected `.mode CONT|CCM|DCM`".into()));
                    };
                    circuit.mode = m.parse().map_err(syntax)?;
                }
                "duty" | "phase" => {
                    let [_, name, v] = tokens[..] else {
                        return Err(syntax(format!("expected `.{directive} <switch-name> <value>`")));
                    };
                    let v = parse_value(v).ok_or_else(|| syntax(format!("invalid number `{v}`")))?;
                    let entry = (line, name.to_string(), v);
                    if directive.eq_ignore_ascii_case("duty") {
                        duties.push(entry);
                    } else {
                        phases.push(entry);
                    }
                }
                _ => return Err(syntax(format!("unknown directive `{}`", tokens[0]))),
            }
            continue;
        }

        let name = tokens[0];
        let prefix = name.chars().next().expect("non-empty token");
        let kind = ElementKind::from_prefix(prefix).ok_or(NetlistError::UnknownKindPrefix { line, prefix })?;
        let [_, pos, neg, value] = tokens[..] else {
            return Err(syntax(format!("expected `<name> <net+> <net-> <value>`, found {} fields", tokens.len())));
        };
        let value = parse_value(value).ok_or_else(|| syntax(format!("invalid value `{value}`")))?;
        if names.insert(name.to_string(), circuit.elements.len()).is_some() {
            return Err(NetlistError::DuplicateName { line, name: name.to_string() });
        }
        circuit.elements.push(Element::new(name, kind, pos, neg, value));
    }

    let switch_index = |line: usize, name: &str| -> Result<usize, NetlistError> {
        match names.get(name) {
            Some(&i) if circuit.elements[i].kind == ElementKind::Switch => Ok(i),
            Some(_) => Err(NetlistError::Syntax { line, reason: format!("`{name}` is not a switch") }),
            None => Err(NetlistError::Syntax { line, reason: format!("no element named `{name}`") }),
        }
    };
    let duties: Vec<(usize, f64)> =
        duties.into_iter().map(|(line, name, v)| switch_index(line, &name).map(|i| (i, v))).collect::<Result<_, _>>()?;
    let phases: Vec<(usize, f64)> =
        phases.into_iter().map(|(line, name, v)| switch_index(line, &name).map(|i| (i, v))).collect::<Result<_, _>>()?;
    for (i, d) in duties {
        circuit.elements[i].value = d;
    }
    for (i, p) in phases {
        circuit.elements[i].phase = p;
    }
    Ok(circuit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    NonPositiveValue,
    DutyOutOfRange,
    SelfLoop,
    MissingGround,
    MissingSource,
    Disconnected,
    ModeRequiresSwitch,
    SwitchInContinuousMode,
    CellDutyMismatch,
    NonPositiveFrequency,
    PhaseOnNonSwitch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

/// Every invariant violation of `circuit`; empty means valid.
pub fn validate(circuit: &Circuit) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, message: String| out.push(Violation { code, message });

    if !(circuit.frequency.is_finite() && circuit.frequency > 0.0) {
        push(ViolationCode::NonPositiveFrequency, format!("frequency {} must be positive", circuit.frequency));
    }
    for e in &circuit.elements {
        if e.kind == ElementKind::Switch {
            if !(0.0..=1.0).contains(&e.value) {
                push(ViolationCode::DutyOutOfRange, format!("{}: duty {} outside [0, 1]", e.name, e.value));
            }
        } else {
            if !(e.value.is_finite() && e.value > 0.0) {
                push(ViolationCode::NonPositiveValue, format!("{}: value {} must be positive", e.name, e.value));
            }
            if e.phase != 0.0 {
                push(ViolationCode::PhaseOnNonSwitch, format!("{}: phase is only defined for switches", e.name));
            }
        }
        if e.net_pos == e.net_neg {
            push(ViolationCode::SelfLoop, format!("{}: both terminals on net {}", e.name, e.net_pos));
        }
    }

    let nets = circuit.nets();
    if !nets.iter().any(|n| n == GROUND) {
        push(ViolationCode::MissingGround, "no element connects to ground net 0".into());
    } else {
        let unreachable = unreachable_nets(circuit, &nets);
        if !unreachable.is_empty() {
            push(ViolationCode::Disconnected, format!("nets not reachable from ground: {}", unreachable.join(", ")));
        }
    }
    if !circuit.elements.iter().any(|e| e.kind.is_source()) {
        push(ViolationCode::MissingSource, "circuit has no voltage or current source".into());
    }

    let n_switches = circuit.switches().count();
    match circuit.mode {
        Mode::Continuous if n_switches > 0 => {
            push(ViolationCode::SwitchInContinuousMode, format!("continuous circuit contains {n_switches} switch(es)"))
        }
        Mode::Ccm | Mode::Dcm if n_switches == 0 => {
            push(ViolationCode::ModeRequiresSwitch, format!("mode {} requires at least one switch", circuit.mode))
        }
        _ => {}
    }
    if circuit.mode.is_switching() {
        for cell in circuit.switch_cells().iter().filter(|c| c.switches.len() >= 2) {
            let sum: f64 = cell.switches.iter().map(|&i| circuit.elements[i].value).sum();
            let names: Vec<&str> = cell.switches.iter().map(|&i| circuit.elements[i].name.as_str()).collect();
            let bad = match circuit.mode {
                Mode::Ccm => (sum - 1.0).abs() > DUTY_SUM_TOLERANCE,
                _ => sum > 1.0 + DUTY_SUM_TOLERANCE,
            };
            if bad {
                push(
                    ViolationCode::CellDutyMismatch,
                    format!("switching cell [{}] duties sum to {sum} in mode {}", names.join(", "), circuit.mode),
                );
            }
        }
    }
    out
}

fn unreachable_nets(circuit: &Circuit, nets: &[String]) -> Vec<String> {
    let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
    for e in &circuit.elements {
        adj.entry(&e.net_pos).or_default().push(&e.net_neg);
        adj.entry(&e.net_neg).or_default().push(&e.net_pos);
    }
    let mut seen: HashSet<&str> = HashSet::from([GROUND]);
    let mut stack = vec![GROUND];
    while let Some(n) = stack.pop() {
        for &m in adj.get(n).map(Vec::as_slice).unwrap_or_default() {
            if seen.insert(m) {
                stack.push(m);
            }
        }
    }
    nets.iter().filter(|n| !seen.contains(n.as_str())).cloned().collect()
}
