//! Serde helpers for energy values.
//!
//! JSON has no literal for infinity, so an infinite energy is written as the
//! string `"inf"`. The helpers accept numbers as well as `"inf"`/`"infinity"`
//! (case-insensitive) on input.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EnergyRepr {
    Num(f64),
    Word(String),
}

fn to_repr(value: f64) -> EnergyRepr {
    if value == f64::INFINITY {
        EnergyRepr::Word("inf".to_string())
    } else {
        EnergyRepr::Num(value)
    }
}

fn from_repr<E: serde::de::Error>(repr: EnergyRepr) -> Result<f64, E> {
    match repr {
        EnergyRepr::Num(x) => Ok(x),
        EnergyRepr::Word(s) => {
            if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
                Ok(f64::INFINITY)
            } else {
                Err(E::custom(format!("invalid energy value {s:?}")))
            }
        }
    }
}

/// `#[serde(with = "energy")]` for a single possibly-infinite `f64`.
pub mod energy {
    use super::*;

    pub fn serialize<S: Serializer>(value: &f64, ser: S) -> Result<S::Ok, S::Error> {
        to_repr(*value).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        from_repr(EnergyRepr::deserialize(de)?)
    }
}

/// `#[serde(with = "energy_vec")]` for a list of possibly-infinite energies.
pub mod energy_vec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[f64], ser: S) -> Result<S::Ok, S::Error> {
        let reprs: Vec<EnergyRepr> = values.iter().map(|&v| to_repr(v)).collect();
        reprs.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
        Vec::<EnergyRepr>::deserialize(de)?
            .into_iter()
            .map(from_repr)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Sample {
        #[serde(with = "super::energy_vec")]
        energies: Vec<f64>,
    }

    #[test]
    fn infinity_round_trip() {
        let s = Sample {
            energies: vec![0.0, 1.5, f64::INFINITY],
        };
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"energies":[0.0,1.5,"inf"]}"#);
        let back: Sample = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let upper: Sample = serde_json::from_str(r#"{"energies":[0,"Infinity"]}"#).unwrap();
        assert_eq!(upper.energies, vec![0.0, f64::INFINITY]);
        assert!(serde_json::from_str::<Sample>(r#"{"energies":["nan"]}"#).is_err());
    }
}
