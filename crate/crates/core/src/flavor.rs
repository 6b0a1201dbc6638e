use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Flavor outcome of a measurement.
///
/// On the two-qubit register the flavors are the computational states
/// e → |00⟩, μ → |01⟩, τ → |10⟩ and x → |11⟩, where x is either the
/// decoupled unphysical state or a sterile fourth flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    E,
    Mu,
    Tau,
    X,
}

impl Flavor {
    pub const ALL: [Flavor; 4] = [Flavor::E, Flavor::Mu, Flavor::Tau, Flavor::X];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn symbol(self) -> char {
        match self {
            Flavor::E => 'e',
            Flavor::Mu => 'm',
            Flavor::Tau => 't',
            Flavor::X => 'x',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flavor::E => "e",
            Flavor::Mu => "mu",
            Flavor::Tau => "tau",
            Flavor::X => "x",
        }
    }

    /// The first `n` flavors.
    pub fn first(n: usize) -> &'static [Flavor] {
        &Self::ALL[..n.min(4)]
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e" => Ok(Flavor::E),
            "mu" => Ok(Flavor::Mu),
            "tau" => Ok(Flavor::Tau),
            "x" => Ok(Flavor::X),
            other => Err(Error::invalid(
                "flavor",
                format!("unknown flavor `{other}` (expected e, mu, tau or x)"),
            )),
        }
    }
}
