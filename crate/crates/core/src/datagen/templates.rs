//! Built-in circuit classes.
//!
//! Continuous suite (all source-driven resonant circuits):
//!
//! | id | name              | order | structure                                   |
//! |----|-------------------|-------|---------------------------------------------|
//! | 0  | rl-parallel-tank  | 2     | V - R - (L ∥ C)                             |
//! | 1  | rl-series-tank    | 2     | (I ∥ R) - L - C, the current-fed dual of 0  |
//! | 2  | series-rlc        | 2     | V - R - L - C                               |
//! | 3  | loaded-series-rlc | 2     | V - R - L - (C ∥ R_load)                    |
//! | 4  | lclc-ladder       | 4     | V - R - L1 - C1 - L2 - C2                   |
//! | 5  | lcc               | 3     | V - L - Cs - (Cp ∥ R)                       |
//! | 6  | cllc              | 4     | V - C1 - L1 - (Lm) - C2 - R                 |
//!
//! Switching suite: buck, boost and buck-boost, each in CCM and DCM, with the
//! diode of each converter modelled as the complementary switch.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::netlist::{parse_netlist, Circuit, Mode, NetlistError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
    pub log_uniform: bool,
}

impl ParamRange {
    pub const fn log(min: f64, max: f64) -> Self {
        Self { min, max, log_uniform: true }
    }

    pub const fn uniform(min: f64, max: f64) -> Self {
        Self { min, max, log_uniform: false }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.log_uniform {
            (rng.gen_range(self.min.ln()..=self.max.ln())).exp().clamp(self.min, self.max)
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.min..=self.max).contains(&v)
    }
}

pub const RESISTANCE: ParamRange = ParamRange::log(1.0, 100.0);
pub const INDUCTANCE: ParamRange = ParamRange::log(1e-6, 1e-3);
pub const CAPACITANCE: ParamRange = ParamRange::log(1e-9, 1e-5);
pub const SOURCE: ParamRange = ParamRange::log(1.0, 100.0);
/// Source frequency of continuous circuits relative to their resonance.
pub const FREQUENCY_RATIO: ParamRange = ParamRange::log(0.25, 4.0);
pub const SWITCHING_FREQUENCY: ParamRange = ParamRange::log(10e3, 500e3);
pub const CCM_DUTY: ParamRange = ParamRange::uniform(0.2, 0.8);
pub const DCM_DUTY: ParamRange = ParamRange::uniform(0.2, 0.7);
/// Second DCM interval as a fraction of what the first leaves.
pub const DCM_SECOND_SHARE: ParamRange = ParamRange::uniform(0.1, 0.9);

/// How the `{F}`, `{D1}` and `{D2}` placeholders are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operating {
    /// `{F}` is the resonance frequency times a sampled ratio.
    Resonant,
    /// `{F}` is a switching frequency; `{D2} = 1 - {D1}`.
    Ccm,
    /// `{F}` is a switching frequency; `{D1} + {D2} < 1`.
    Dcm,
}

#[derive(Debug, Clone)]
pub struct ClassTemplate {
    pub name: &'static str,
    pub class_id: usize,
    pub mode: Mode,
    /// Netlist text with `{param}` placeholders.
    pub netlist_skeleton: &'static str,
    pub sample_ranges: Vec<(&'static str, ParamRange)>,
    pub operating: Operating,
    /// Resonance frequency in hertz of a sampled parameter set.
    pub resonance: fn(&BTreeMap<String, f64>) -> f64,
}

fn lc_resonance(l: f64, c: f64) -> f64 {
    1.0 / (2.0 * PI * (l * c).sqrt())
}

fn series(a: f64, b: f64) -> f64 {
    a * b / (a + b)
}

/// A sampled template instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub circuit: Circuit,
    pub params: BTreeMap<String, f64>,
    pub resonance_hz: f64,
}

impl ClassTemplate {
    pub fn instantiate(&self, rng: &mut ChaCha8Rng) -> Result<Instance, NetlistError> {
        let mut params: BTreeMap<String, f64> = BTreeMap::new();
        for (name, range) in &self.sample_ranges {
            params.insert(name.to_string(), range.sample(rng));
        }
        let resonance_hz = (self.resonance)(&params);
        match self.operating {
            Operating::Resonant => {
                let f = resonance_hz * FREQUENCY_RATIO.sample(rng);
                params.insert("F".into(), f);
            }
            Operating::Ccm => {
                params.insert("F".into(), SWITCHING_FREQUENCY.sample(rng));
                let d1 = CCM_DUTY.sample(rng);
                params.insert("D1".into(), d1);
                params.insert("D2".into(), 1.0 - d1);
            }
            Operating::Dcm => {
                params.insert("F".into(), SWITCHING_FREQUENCY.sample(rng));
                let d1 = DCM_DUTY.sample(rng);
                let d2 = (1.0 - d1) * DCM_SECOND_SHARE.sample(rng);
                params.insert("D1".into(), d1);
                params.insert("D2".into(), d2);
            }
        }
        let mut circuit = parse_netlist(&self.render(&params))?;
        circuit.class_label = Some(self.class_id);
        Ok(Instance { circuit, params, resonance_hz })
    }

    pub fn render(&self, params: &BTreeMap<String, f64>) -> String {
        let mut text = self.netlist_skeleton.to_string();
        for (k, v) in params {
            text = text.replace(&format!("{{{k}}}"), &v.to_string());
        }
        text
    }
}

macro_rules! ranges {
    ($($name:literal => $range:expr),* $(,)?) => {
        vec![$(($name, $range)),*]
    };
}

pub fn continuous_templates() -> Vec<ClassTemplate> {
    vec![
        ClassTemplate {
            name: "rl-parallel-tank",
            class_id: 0,
            mode: Mode::Continuous,
            netlist_skeleton: "V1 1 0 {V1}\nR1 1 2 {R1}\nL1 2 0 {L1}\nC1 2 0 {C1}\n.freq {F}\n",
            sample_ranges: ranges!("V1" => SOURCE, "R1" => RESISTANCE, "L1" => INDUCTANCE, "C1" => CAPACITANCE),
            operating: Operating::Resonant,
            resonance: |p| lc_resonance(p["L1"], p["C1"]),
        },
        ClassTemplate {
            name: "rl-series-tank",
            class_id: 1,
            mode: Mode::Continuous,
            netlist_skeleton: "I1 1 0 {I1}\nR1 1 0 {R1}\nL1 1 2 {L1}\nC1 2 0 {C1}\n.freq {F}\n",
            sample_ranges: ranges!("I1" => SOURCE, "R1" => RESISTANCE, "L1" => INDUCTANCE, "C1" => CAPACITANCE),
            operating: Operating::Resonant,
            resonance: |p| lc_resonance(p["L1"], p["C1"]),
        },
        ClassTemplate {
            name: "series-rlc",
            class_id: 2,
            mode: Mode::Continuous,
            netlist_skeleton: "V1 1 0 {V1}\nR1 1 2 {R1}\nL1 2 3 {L1}\nC1 3 0 {C1}\n.freq {F}\n",
            sample_ranges: ranges!("V1" => SOURCE, "R1" => RESISTANCE, "L1" => INDUCTANCE, "C1" => CAPACITANCE),
            operating: Operating::Resonant,
            resonance: |p| lc_resonance(p["L1"], p["C1"]),
        },
        ClassTemplate {
            name: "loaded-series-rlc",
            class_id: 3,
            mode: Mode::Continuous,
            netlist_skeleton: "V1 1 0 {V1}\nR1 1 2 {R1}\nL1 2 3 {L1}\nC1 3 0 {C1}\nR2 3 0 {R2}\n.freq {F}\n",
            sample_ranges: ranges!(
                "V1" => SOURCE, "R1" => RESISTANCE, "L1" => INDUCTANCE, "C1" => CAPACITANCE, "R2" => RESISTANCE
            ),
            operating: Operating::Resonant,
            resonance: |p| lc_resonance(p["L1"], p["C1"]),
        },
        ClassTemplate {
            name: "lclc-ladder",
            class_id: 4,
            mode: Mode::Continuous,
            netlist_skeleton: "V1 1 0 {V1}\nR1 1 2 {R1}\nL1 2 3 {L1}\nC1 3 0 {C1}\nL2 3 4 {L2}\nC2 4 0 {C2}\n.freq {F}\n",
            sample_ranges: ranges!(
                "V1" => SOURCE, "R1" => RESISTANCE, "L1" => INDUCTANCE, "C1" => CAPACITANCE,
                "L2" => INDUCTANCE, "C2" => CAPACITANCE
            ),
            operating: Operating::Resonant,
            resonance: |p| lc_resonance(p["L1"], p["C1"]),
        },
        ClassTemplate {
            name: "lcc",
            class_id: 5,
            mode: Mode::Continuous,
            netlist_skeleton: "V1 1 0 {V1}\nL1 1 2 {L1}\nC1 2 3 {C1}\nC2 3 0 {C2}\nR1 3 0 {R1}\n.freq {F}\n",
            sample_ranges: ranges!(
                "V1" => SOURCE, "L1" => INDUCTANCE, "C1" => CAPACITANCE, "C2" => CAPACITANCE, "R1" => RESISTANCE
            ),
            operating: Operating::Resonant,
            resonance: |p| lc_resonance(p["L1"], series(p["C1"], p["C2"])),
        },
        ClassTemplate {
            name: "cllc",
            class_id: 6,
            mode: Mode::Continuous,
            netlist_skeleton: "V1 1 0 {V1}\nC1 1 2 {C1}\nL1 2 3 {L1}\nL2 3 0 {L2}\nC2 3 4 {C2}\nR1 4 0 {R1}\n.freq {F}\n",
            sample_ranges: ranges!(
                "V1" => SOURCE, "C1" => CAPACITANCE, "L1" => INDUCTANCE, "L2" => INDUCTANCE,
                "C2" => CAPACITANCE, "R1" => RESISTANCE
            ),
            operating: Operating::Resonant,
            resonance: |p| lc_resonance(p["L1"], p["C1"]),
        },
    ]
}

macro_rules! converter {
    ($($body:literal),*; $mode:literal) => {
        concat!($($body),*, ".freq {F}\n.mode ", $mode, "\n")
    };
}

macro_rules! buck {
    ($mode:literal) => {
        converter!("V1 1 0 {V1}\n", "S1 1 2 {D1}\n", "S2 2 0 {D2}\n", "L1 2 3 {L1}\n", "C1 3 0 {C1}\n", "R1 3 0 {R1}\n"; $mode)
    };
}

macro_rules! boost {
    ($mode:literal) => {
        converter!("V1 1 0 {V1}\n", "L1 1 2 {L1}\n", "S1 2 0 {D1}\n", "S2 2 3 {D2}\n", "C1 3 0 {C1}\n", "R1 3 0 {R1}\n"; $mode)
    };
}

macro_rules! buck_boost {
    ($mode:literal) => {
        converter!("V1 1 0 {V1}\n", "S1 1 2 {D1}\n", "L1 2 0 {L1}\n", "S2 3 2 {D2}\n", "C1 3 0 {C1}\n", "R1 3 0 {R1}\n"; $mode)
    };
}

pub fn switching_templates() -> Vec<ClassTemplate> {
    let converter = |name, class_id, mode, netlist_skeleton| ClassTemplate {
        name,
        class_id,
        mode,
        netlist_skeleton,
        sample_ranges: ranges!("V1" => SOURCE, "L1" => INDUCTANCE, "C1" => CAPACITANCE, "R1" => RESISTANCE),
        operating: if mode == Mode::Ccm { Operating::Ccm } else { Operating::Dcm },
        resonance: |p| lc_resonance(p["L1"], p["C1"]),
    };
    vec![
        converter("buck-ccm", 0, Mode::Ccm, buck!("CCM")),
        converter("boost-ccm", 1, Mode::Ccm, boost!("CCM")),
        converter("buck-boost-ccm", 2, Mode::Ccm, buck_boost!("CCM")),
        converter("buck-dcm", 3, Mode::Dcm, buck!("DCM")),
        converter("boost-dcm", 4, Mode::Dcm, boost!("DCM")),
        converter("buck-boost-dcm", 5, Mode::Dcm, buck_boost!("DCM")),
    ]
}
