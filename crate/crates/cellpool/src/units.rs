//! Conversions between logarithmic radio units and the linear SI values used
//! everywhere inside the crate. dB quantities never cross module boundaries;
//! they exist only at the configuration edge.

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Split "value [unit]" into the numeric part and a (possibly empty) unit
/// suffix; whitespace between them is optional. Scientific notation is
/// handled by taking the longest prefix that parses as a float.
fn split_quantity(field: &'static str, s: &str) -> Result<(f64, String)> {
    let t = s.trim();
    let mut best: Option<(f64, usize)> = None;
    for i in 1..=t.len() {
        if !t.is_char_boundary(i) {
            continue;
        }
        if let Ok(v) = t[..i].parse::<f64>() {
            best = Some((v, i));
        }
    }
    match best {
        Some((v, i)) => Ok((v, t[i..].trim().to_string())),
        None => Err(Error::UnitParse {
            field: field.to_string(),
            message: format!("`{s}` has no leading number"),
        }),
    }
}

fn bad_unit(field: &'static str, unit: &str, accepted: &str) -> Error {
    Error::UnitParse {
        field: field.to_string(),
        message: format!("unknown unit `{unit}` (accepted: {accepted})"),
    }
}

/// Transmit power: bare numbers are watts; "dBm", "mW", "W", "kW" accepted.
pub fn parse_power(field: &'static str, s: &str) -> Result<f64> {
    let (v, unit) = split_quantity(field, s)?;
    match unit.as_str() {
        "" | "W" => Ok(v),
        "dBm" => Ok(dbm_to_watts(v)),
        "mW" => Ok(v * 1e-3),
        "kW" => Ok(v * 1e3),
        u => Err(bad_unit(field, u, "W, mW, kW, dBm")),
    }
}

/// Bandwidth / frequency: bare numbers are Hz.
pub fn parse_bandwidth(field: &'static str, s: &str) -> Result<f64> {
    let (v, unit) = split_quantity(field, s)?;
    match unit.as_str() {
        "" | "Hz" => Ok(v),
        "kHz" => Ok(v * 1e3),
        "MHz" => Ok(v * 1e6),
        "GHz" => Ok(v * 1e9),
        u => Err(bad_unit(field, u, "Hz, kHz, MHz, GHz")),
    }
}

/// Length: bare numbers are meters.
pub fn parse_length(field: &'static str, s: &str) -> Result<f64> {
    let (v, unit) = split_quantity(field, s)?;
    match unit.as_str() {
        "" | "m" => Ok(v),
        "km" => Ok(v * 1e3),
        u => Err(bad_unit(field, u, "m, km")),
    }
}

/// Noise spectral density: bare numbers are W/Hz.
pub fn parse_noise_density(field: &'static str, s: &str) -> Result<f64> {
    let (v, unit) = split_quantity(field, s)?;
    match unit.as_str() {
        "" | "W/Hz" => Ok(v),
        "dBm/Hz" => Ok(dbm_to_watts(v)),
        u => Err(bad_unit(field, u, "W/Hz, dBm/Hz")),
    }
}

/// A quantity stated in dB (e.g. shadowing spread); bare numbers are dB.
pub fn parse_db(field: &'static str, s: &str) -> Result<f64> {
    let (v, unit) = split_quantity(field, s)?;
    match unit.as_str() {
        "" | "dB" => Ok(v),
        u => Err(bad_unit(field, u, "dB")),
    }
}

/// Config fields that carry a unit can be written either as a bare number
/// (SI base unit) or as a quoted string with a suffix.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawQuantity {
    Num(f64),
    Text(String),
}

fn de_with<'de, D>(
    d: D,
    field: &'static str,
    parse: fn(&'static str, &str) -> Result<f64>,
) -> std::result::Result<f64, D::Error>
where
    D: Deserializer<'de>,
{
    match RawQuantity::deserialize(d)? {
        RawQuantity::Num(v) => Ok(v),
        RawQuantity::Text(s) => parse(field, &s).map_err(serde::de::Error::custom),
    }
}

pub fn de_power<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    de_with(d, "power", parse_power)
}

pub fn de_bandwidth<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    de_with(d, "bandwidth", parse_bandwidth)
}

pub fn de_length<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    de_with(d, "length", parse_length)
}

pub fn de_noise_density<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    de_with(d, "noise_density", parse_noise_density)
}

pub fn de_db<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    de_with(d, "dB quantity", parse_db)
}
