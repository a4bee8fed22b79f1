use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::simulate::LabelDomain;

/// Network input representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    /// Log range-azimuth-Doppler volume, Doppler as channels.
    Rad,
    /// Log range-azimuth map, one channel.
    Ra,
    /// Cartesian bird's-eye resampling of the RA map, one channel.
    Doa,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Rad, Modality::Ra, Modality::Doa];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Rad => "rad",
            Modality::Ra => "ra",
            Modality::Doa => "doa",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Modality::Rad => "RAD",
            Modality::Ra => "RA",
            Modality::Doa => "DoA",
        }
    }

    /// Grid the input lives on.
    pub fn native_domain(self) -> LabelDomain {
        match self {
            Modality::Rad | Modality::Ra => LabelDomain::Polar,
            Modality::Doa => LabelDomain::Cartesian,
        }
    }

    /// DoA inputs have no polar-label pairing.
    pub fn supports(self, labels: LabelDomain) -> bool {
        !(self == Modality::Doa && labels == LabelDomain::Polar)
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rad" => Ok(Modality::Rad),
            "ra" => Ok(Modality::Ra),
            "doa" => Ok(Modality::Doa),
            other => Err(Error::invalid(alloc::format!("unknown modality `{other}`"))),
        }
    }
}

impl LabelDomain {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelDomain::Polar => "polar",
            LabelDomain::Cartesian => "cartesian",
        }
    }

    /// Report name of the mask type.
    pub fn label(self) -> &'static str {
        match self {
            LabelDomain::Polar => "RA",
            LabelDomain::Cartesian => "DoA",
        }
    }
}

impl fmt::Display for LabelDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polar" => Ok(LabelDomain::Polar),
            "cartesian" => Ok(LabelDomain::Cartesian),
            other => Err(Error::invalid(alloc::format!("unknown label domain `{other}`"))),
        }
    }
}
