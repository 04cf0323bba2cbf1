use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::neuron::Network;

/// E12 mantissas scaled by ten.
const E12: [u32; 12] = [10, 12, 15, 18, 22, 27, 33, 39, 47, 56, 68, 82];
const E24: [u32; 24] = [
    10, 11, 12, 13, 15, 16, 18, 20, 22, 24, 27, 30, 33, 36, 39, 43, 47, 51, 56, 62, 68, 75, 82, 91,
];
const ONE_DIGIT: [u32; 9] = [10, 20, 30, 40, 50, 60, 70, 80, 90];

/// Purchasable resistor values that trained resistances are snapped to.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ResistorCatalog {
    /// `d * 10^k` for a single digit `d`.
    #[default]
    OneSignificantDigit,
    E12,
    E24,
    Custom(Vec<f64>),
}

impl ResistorCatalog {
    pub fn custom(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("custom catalog is empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("custom catalog values must be positive".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("custom catalog must be strictly increasing".into()));
        }
        Ok(ResistorCatalog::Custom(values))
    }

    fn decade_mantissas(&self) -> Option<&'static [u32]> {
        match self {
            ResistorCatalog::OneSignificantDigit => Some(&ONE_DIGIT),
            ResistorCatalog::E12 => Some(&E12),
            ResistorCatalog::E24 => Some(&E24),
            ResistorCatalog::Custom(_) => None,
        }
    }

    /// Catalog values immediately at or below and at or above `r`.
    pub fn neighbours(&self, r: f64) -> (f64, f64) {
        match self {
            ResistorCatalog::Custom(values) => {
                let i = values.partition_point(|v| *v < r);
                if i < values.len() && values[i] == r {
                    return (r, r);
                }
                let lower = if i == 0 { values[0] } else { values[i - 1] };
                let upper = values.get(i).copied().unwrap_or(values[values.len() - 1]);
                (lower, upper)
            }
            _ => {
                let mantissas = self.decade_mantissas().expect("series catalog");
                let mut exp = r.log10().floor() as i32;
                // log10 can land one decade off near exact powers of ten
                if 10f64.powi(exp) > r {
                    exp -= 1;
                } else if 10f64.powi(exp + 1) <= r {
                    exp += 1;
                }
                let unit = 10f64.powi(exp - 1);
                let candidates = mantissas
                    .iter()
                    .map(|&m| m as f64 * unit)
                    .chain(std::iter::once(100.0 * unit));
                let mut lower = mantissas[0] as f64 * unit;
                let mut upper = 100.0 * unit;
                for c in candidates {
                    if c <= r {
                        lower = c;
                    }
                    if c >= r && c < upper {
                        upper = c;
                    }
                }
                (lower, upper)
            }
        }
    }

    /// Nearest catalog value; exact halves go up for the series catalogs
    /// (matching ordinary mantissa rounding) and down for custom lists.
    pub fn round(&self, r: f64) -> f64 {
        let (lower, upper) = self.neighbours(r);
        let (dl, du) = (r - lower, upper - r);
        let up = match self {
            ResistorCatalog::Custom(_) => du < dl,
            _ => du <= dl,
        };
        if up {
            upper
        } else {
            lower
        }
    }
}

impl fmt::Display for ResistorCatalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResistorCatalog::OneSignificantDigit => f.write_str("one-significant-digit"),
            ResistorCatalog::E12 => f.write_str("e12"),
            ResistorCatalog::E24 => f.write_str("e24"),
            ResistorCatalog::Custom(v) => {
                let parts: Vec<String> = v.iter().map(f64::to_string).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for ResistorCatalog {
    type Err = Error;

    /// `one-significant-digit`, `e12`, `e24` or `custom:<ohms>,<ohms>,...`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-significant-digit" | "one_significant_digit" => Ok(Self::OneSignificantDigit),
            "e12" | "E12" => Ok(Self::E12),
            "e24" | "E24" => Ok(Self::E24),
            _ => match s.strip_prefix("custom:") {
                Some(list) => {
                    let values = list
                        .split(',')
                        .map(|v| {
                            v.trim().parse::<f64>().map_err(|e| {
                                Error::InvalidArgument(format!("catalog value {v:?}: {e}"))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Self::custom(values)
                }
                None => Err(Error::InvalidArgument(format!("unknown resistor catalog {s:?}"))),
            },
        }
    }
}

pub fn round_resistance(r: f64, catalog: &ResistorCatalog) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("resistance must be positive, got {r}")));
    }
    Ok(catalog.round(r))
}

pub fn quantize_network(net: &Network, catalog: &ResistorCatalog) -> Network {
    let mut out = net.clone();
    for n in out.neurons_mut() {
        n.resistances_mut().for_each(|r| *r = catalog.round(*r));
    }
    out
}
