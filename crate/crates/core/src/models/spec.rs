use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arch {
    Fcn,
    FcnTiny,
    DeepLabV3Plus,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::FcnTiny, Arch::Fcn, Arch::DeepLabV3Plus];

    pub fn as_str(self) -> &'static str {
        match self {
            Arch::Fcn => "fcn",
            Arch::FcnTiny => "fcn_tiny",
            Arch::DeepLabV3Plus => "deeplabv3p",
        }
    }

    /// Display name used in report headers.
    pub fn label(self) -> &'static str {
        match self {
            Arch::Fcn => "FCN",
            Arch::FcnTiny => "FCN_tiny",
            Arch::DeepLabV3Plus => "DeepLabV3+",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fcn" => Ok(Arch::Fcn),
            "fcn_tiny" => Ok(Arch::FcnTiny),
            "deeplabv3p" => Ok(Arch::DeepLabV3Plus),
            other => Err(Error::invalid(alloc::format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub arch: Arch,
    pub width_multiplier: f64,
    pub in_channels: usize,
    pub n_classes: usize,
    /// Channels of every decoder feature map.
    pub decoder_depth: usize,
    /// Dilations of the 3×3 ASPP branches; empty for the FCN family.
    pub aspp_rates: Vec<usize>,
}

impl ModelSpec {
    pub fn new(arch: Arch, in_channels: usize) -> Self {
        let (width_multiplier, decoder_depth, aspp_rates) = match arch {
            Arch::Fcn => (1.0, 64, vec![]),
            Arch::FcnTiny => (0.25, 8, vec![]),
            Arch::DeepLabV3Plus => (1.0, 64, vec![2, 4, 6]),
        };
        Self {
            arch,
            width_multiplier,
            in_channels,
            n_classes: 2,
            decoder_depth,
            aspp_rates,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.decoder_depth == 0 {
            return Err(Error::invalid("channel counts must be positive"));
        }
        if self.n_classes != 2 {
            return Err(Error::invalid("only binary segmentation is supported"));
        }
        if !(self.width_multiplier > 0.0 && self.width_multiplier.is_finite()) {
            return Err(Error::invalid("width multiplier must be positive"));
        }
        match self.arch {
            Arch::FcnTiny if self.width_multiplier != 0.25 || self.decoder_depth != 8 => {
                Err(Error::invalid("fcn_tiny requires width 0.25 and decoder depth 8"))
            }
            Arch::DeepLabV3Plus if self.aspp_rates != [2, 4, 6] => {
                Err(Error::invalid("deeplabv3p requires ASPP rates 2, 4, 6"))
            }
            Arch::Fcn | Arch::FcnTiny if !self.aspp_rates.is_empty() => {
                Err(Error::invalid("FCN models have no ASPP"))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for a in Arch::ALL {
            let s = ModelSpec::new(a, 64);
            s.validate().unwrap();
            assert_eq!(s.n_classes, 2);
            assert_eq!(a.as_str().parse::<Arch>().unwrap(), a);
        }
        let tiny = ModelSpec::new(Arch::FcnTiny, 1);
        assert_eq!((tiny.width_multiplier, tiny.decoder_depth), (0.25, 8));
        let mut bad = tiny.clone();
        bad.decoder_depth = 16;
        assert!(bad.validate().is_err());
        assert!("unet".parse::<Arch>().is_err());
    }
}
