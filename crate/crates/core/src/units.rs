//! Physical constants, dB conversions and unit-suffixed quantity parsing.

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Dispersion in ps/nm converted to SI (s/m).
pub fn ps_per_nm_to_si(d: f64) -> f64 {
    d * 1e-12 / 1e-9
}

/// Quantity kinds accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Frequency,
    Power,
    Dispersion,
}

/// Parses a number with a mandatory unit suffix into SI-ish base units:
/// frequencies in Hz, powers in dBm, dispersion in ps/nm.
///
/// Accepted suffixes: `Hz`, `kHz`, `MHz`, `GHz`, `THz`; `dBm`, `mW`, `W`; `ps/nm`.
/// A bare number is rejected so that a missing unit never slips through silently.
pub fn parse_quantity(text: &str, kind: Quantity) -> Result<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_ascii_alphabetic() || c == '/')
        .ok_or_else(|| Error::InvalidParameter(format!("'{text}' is missing a unit suffix")))?;
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("'{text}' is not a number with a unit")))?;
    let unit = unit.trim();
    let converted = match (kind, unit) {
        (Quantity::Frequency, "Hz") => value,
        (Quantity::Frequency, "kHz") => value * 1e3,
        (Quantity::Frequency, "MHz") => value * 1e6,
        (Quantity::Frequency, "GHz") => value * 1e9,
        (Quantity::Frequency, "THz") => value * 1e12,
        (Quantity::Power, "dBm") => value,
        (Quantity::Power, "mW") if value > 0.0 => watts_to_dbm(value * 1e-3),
        (Quantity::Power, "W") if value > 0.0 => watts_to_dbm(value),
        (Quantity::Dispersion, "ps/nm") => value,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "unit '{unit}' is not valid for a {kind:?} quantity"
            )))
        }
    };
    if !converted.is_finite() {
        return Err(Error::InvalidParameter(format!("'{text}' is not finite")));
    }
    Ok(converted)
}
