//! One coordination problem: source, wiretap channel and target conditional.

use crate::error::{Error, Result};
use crate::prob::{Alphabet, Kernel, Pmf};
use serde::{Deserialize, Serialize};

/// Source `P̄_U`, channel `P̄_{YZ|X}` and target `P̄_{V|U}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemSpec {
    source: Pmf,
    channel: Kernel,
    target: Kernel,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    source: Pmf,
    channel: Kernel,
    target: Kernel,
}

impl<'de> Deserialize<'de> for ProblemSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = Raw::deserialize(d)?;
        ProblemSpec::new(r.source, r.channel, r.target).map_err(serde::de::Error::custom)
    }
}

/// Label of the source-side auxiliary.
pub const W1_LABEL: &str = "W1";
/// Label of the channel-side auxiliary.
pub const W2_LABEL: &str = "W2";

impl ProblemSpec {
    pub fn new(source: Pmf, channel: Kernel, target: Kernel) -> Result<Self> {
        if channel.given().len() != 1 || channel.axes().len() != 2 {
            return Err(Error::Shape("channel must map one input axis X to two output axes (Y, Z)".into()));
        }
        if target.given().len() != 1 || target.axes().len() != 1 {
            return Err(Error::Shape("target must map one axis U to one axis V".into()));
        }
        if target.given()[0] != *source.alphabet() {
            return Err(Error::Shape(format!(
                "target is conditioned on {:?} but the source is over {:?}",
                target.given()[0],
                source.alphabet()
            )));
        }
        let labels = [
            &source.alphabet().label,
            &target.axes()[0].label,
            &channel.given()[0].label,
            &channel.axes()[0].label,
            &channel.axes()[1].label,
        ];
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateAxis((*l).clone()));
            }
            if l.as_str() == W1_LABEL || l.as_str() == W2_LABEL {
                return Err(Error::InvalidArgument(format!("axis label `{l}` is reserved for auxiliaries")));
            }
        }
        Ok(ProblemSpec { source, channel, target })
    }

    pub fn source(&self) -> &Pmf {
        &self.source
    }

    pub fn channel(&self) -> &Kernel {
        &self.channel
    }

    pub fn target(&self) -> &Kernel {
        &self.target
    }

    /// Alphabets `(U, V, X, Y, Z)`.
    pub fn alphabets(&self) -> [&Alphabet; 5] {
        [
            self.source.alphabet(),
            &self.target.axes()[0],
            &self.channel.given()[0],
            &self.channel.axes()[0],
            &self.channel.axes()[1],
        ]
    }

    /// Largest auxiliary alphabets allowed: `(|U||V|+1, |X|+1)`.
    pub fn cardinality_caps(&self) -> (usize, usize) {
        let [u, v, x, _, _] = self.alphabets();
        (u.size * v.size + 1, x.size + 1)
    }

    /// Same problem with another channel.
    pub fn with_channel(&self, channel: Kernel) -> Result<Self> {
        ProblemSpec::new(self.source.clone(), channel, self.target.clone())
    }
}
