//! Finite enumerated causal populations with complete potential-outcome
//! tables.
//!
//! A population lists units with a weight, the treatment each would take at
//! both instrument levels `D(z)`, the potential outcome table `Y(z, d)`, an
//! optional discrete confounder label, and the per-unit probability of being
//! assigned `Z = 1`. Everything is stored as exact rationals; float views are
//! derived on demand.

use serde::{Deserialize, Serialize};

use crate::error::{MrError, Result};
use crate::rational::Rat;

fn bool_from_int<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    use serde::de::{self, Visitor};
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = bool;
        fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            f.write_str("a boolean or 0/1")
        }
        fn visit_bool<E: de::Error>(self, v: bool) -> std::result::Result<bool, E> {
            Ok(v)
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<bool, E> {
            match v {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(E::custom("treatment indicator must be 0 or 1")),
            }
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<bool, E> {
            self.visit_u64(v.try_into().map_err(|_| E::custom("negative indicator"))?)
        }
    }
    d.deserialize_any(V)
}

fn bool_to_int<S: serde::Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

/// One unit (or homogeneous stratum of units) in a causal population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub weight: Rat,
    /// Treatment taken when `Z = 0`.
    #[serde(deserialize_with = "bool_from_int", serialize_with = "bool_to_int")]
    pub d0: bool,
    /// Treatment taken when `Z = 1`.
    #[serde(deserialize_with = "bool_from_int", serialize_with = "bool_to_int")]
    pub d1: bool,
    /// Potential outcome `Y(z=0, d=0)`.
    pub y00: Rat,
    /// Potential outcome `Y(z=0, d=1)`.
    pub y01: Rat,
    /// Potential outcome `Y(z=1, d=0)`.
    pub y10: Rat,
    /// Potential outcome `Y(z=1, d=1)`.
    pub y11: Rat,
    /// Optional discrete confounder label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<String>,
    /// Probability that this unit is assigned `Z = 1`.
    pub z_prob: Rat,
}

impl Unit {
    pub fn d(&self, z: usize) -> bool {
        if z == 0 {
            self.d0
        } else {
            self.d1
        }
    }

    pub fn y(&self, z: usize, d: usize) -> &Rat {
        match (z, d) {
            (0, 0) => &self.y00,
            (0, 1) => &self.y01,
            (1, 0) => &self.y10,
            (1, 1) => &self.y11,
            _ => unreachable!("binary indices"),
        }
    }
}

/// A finite causal population; weights must sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalPopulation {
    pub units: Vec<Unit>,
}

impl CausalPopulation {
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        let pop = CausalPopulation { units };
        let report = pop.validate();
        if report.is_empty() {
            Ok(pop)
        } else {
            Err(MrError::InvalidInput(report.join("; ")))
        }
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn has_confounder_labels(&self) -> bool {
        self.units.iter().all(|u| u.u.is_some())
    }

    pub fn validate(&self) -> Vec<String> {
        let mut report = Vec::new();
        if self.units.is_empty() {
            report.push("population has no units".to_string());
            return report;
        }
        let mut total = Rat::zero();
        for (i, unit) in self.units.iter().enumerate() {
            if unit.weight < Rat::zero() {
                report.push(format!("unit {i}: negative weight"));
            }
            if unit.z_prob < Rat::zero() || unit.z_prob > Rat::one() {
                report.push(format!("unit {i}: z_prob outside [0,1]"));
            }
            total = &total + &unit.weight;
        }
        if total != Rat::one() {
            report.push(format!("weights sum to {total}, not 1"));
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit(weight: Rat, d0: bool, d1: bool, y0: i64, y1: i64, q: Rat) -> Unit {
        Unit {
            weight,
            d0,
            d1,
            y00: Rat::int(y0),
            y01: Rat::int(y1),
            y10: Rat::int(y0),
            y11: Rat::int(y1),
            u: None,
            z_prob: q,
        }
    }

    #[test]
    fn weights_must_sum_to_one() {
        let pop = CausalPopulation {
            units: vec![
                unit(Rat::new(1, 2), false, true, 0, 1, Rat::new(1, 2)),
                unit(Rat::new(1, 2), false, false, 0, 0, Rat::new(1, 2)),
            ],
        };
        assert!(pop.validate().is_empty());

        let bad = CausalPopulation {
            units: vec![unit(Rat::new(1, 3), false, true, 0, 1, Rat::new(1, 2))],
        };
        assert!(bad.validate().iter().any(|v| v.contains("weights sum")));
    }

    #[test]
    fn json_round_trip() {
        let pop = CausalPopulation {
            units: vec![
                unit(Rat::new(1, 2), false, true, 0, 2, Rat::new(1, 3)),
                unit(Rat::new(1, 2), true, true, 1, 3, Rat::new(1, 3)),
            ],
        };
        let json = serde_json::to_string(&pop).unwrap();
        let back: CausalPopulation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pop);
    }

    #[test]
    fn accepts_numeric_weights_and_indicators() {
        let json = r#"{"units":[
            {"weight":0.5,"d0":0,"d1":1,"y00":0,"y01":2,"y10":0,"y11":2,"z_prob":"1/2"},
            {"weight":"1/2","d0":false,"d1":false,"y00":1,"y01":1,"y10":1,"y11":1,"z_prob":0.5}
        ]}"#;
        let pop: CausalPopulation = serde_json::from_str(json).unwrap();
        assert!(pop.validate().is_empty());
        assert!(pop.units[0].d1);
    }
}
