//! JSON form: `{"axes":[{"label","size"}], "probs":[...]}` with an optional
//! `"given"` list for kernels. Probabilities are written as shortest round-trip
//! decimals, so reading them back reproduces every bit. Decimal strings are accepted on input.

use super::{Alphabet, JointPmf, Kernel, Pmf};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Float(f64),
    Text(String),
}

fn probs_de<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    let raw = Vec::<Number>::deserialize(d)?;
    raw.into_iter()
        .map(|n| match n {
            Number::Float(x) => Ok(x),
            Number::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|e| de::Error::custom(format!("bad probability `{s}`: {e}"))),
        })
        .collect()
}

#[derive(Serialize)]
struct JointOut<'a> {
    axes: &'a [Alphabet],
    probs: &'a [f64],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointIn {
    axes: Vec<Alphabet>,
    #[serde(deserialize_with = "probs_de")]
    probs: Vec<f64>,
}

#[derive(Serialize)]
struct KernelOut<'a> {
    given: &'a [Alphabet],
    axes: &'a [Alphabet],
    probs: &'a [f64],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelIn {
    #[serde(default)]
    given: Vec<Alphabet>,
    axes: Vec<Alphabet>,
    #[serde(deserialize_with = "probs_de")]
    probs: Vec<f64>,
}

impl Serialize for JointPmf {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        JointOut {
            axes: &self.axes,
            probs: &self.probs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointPmf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = JointIn::deserialize(d)?;
        JointPmf::new(r.axes, r.probs).map_err(de::Error::custom)
    }
}

impl Serialize for Pmf {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        JointOut {
            axes: std::slice::from_ref(&self.alphabet),
            probs: &self.probs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut r = JointIn::deserialize(d)?;
        if r.axes.len() != 1 {
            return Err(de::Error::custom(format!(
                "a single-variable distribution needs exactly one axis, got {}",
                r.axes.len()
            )));
        }
        Pmf::new(r.axes.remove(0), r.probs).map_err(de::Error::custom)
    }
}

impl Serialize for Kernel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        KernelOut {
            given: &self.given,
            axes: &self.axes,
            probs: &self.probs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = KernelIn::deserialize(d)?;
        Kernel::new(r.given, r.axes, r.probs).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_round_trip_is_bit_exact() {
        let w = vec![0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, 2.0f64.sqrt(), 0.0];
        let j = JointPmf::from_weights(vec![Alphabet::new("A", 2), Alphabet::new("B", 3)], w).unwrap();
        let s = serde_json::to_string(&j).unwrap();
        let back: JointPmf = serde_json::from_str(&s).unwrap();
        for (a, b) in j.probs().iter().zip(back.probs()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.axes(), j.axes());
    }

    #[test]
    fn accepts_decimal_strings() {
        let p: Pmf = serde_json::from_str(r#"{"axes":[{"label":"U","size":2}],"probs":["0.25","0.75"]}"#).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn kernel_round_trip() {
        let k = Kernel::bsc("X", "Y", 0.11).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert!(s.starts_with(r#"{"given":[{"label":"X","size":2}]"#));
        let back: Kernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
    }

    #[test]
    fn invalid_json_distribution_is_rejected() {
        let r: Result<JointPmf, _> = serde_json::from_str(r#"{"axes":[{"label":"A","size":2}],"probs":[0.5,0.6]}"#);
        assert!(r.is_err());
        let r: Result<Pmf, _> = serde_json::from_str(r#"{"axes":[],"probs":[1.0]}"#);
        assert!(r.is_err());
    }
}
