//! File-based inputs: station layout CSVs and scenario configuration files.
//! Everything is normalized to linear SI units on the way in; dB and degree
//! values never leave this boundary.

use crate::deployment::{BaseStation, SubchannelRange};
use crate::error::{Error, Result};
use crate::simulator::ScenarioConfig;
use std::path::Path;

const EARTH_RADIUS: f64 = 6_371_000.0;

fn map_csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::CsvParse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn parse_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(idx).ok_or(Error::CsvParse {
        line,
        message: format!("missing `{name}` column"),
    })?;
    raw.parse().map_err(|_| Error::CsvParse {
        line,
        message: format!("cannot parse `{raw}` as {name}"),
    })
}

fn check_operator(rec: &csv::StringRecord, op: u8) -> Result<u8> {
    if op == 1 || op == 2 {
        Ok(op)
    } else {
        Err(Error::CsvParse {
            line: rec.position().map_or(0, |p| p.line()),
            message: format!("operator must be 1 or 2, got {op}"),
        })
    }
}

fn check_finite(rec: &csv::StringRecord, name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::CsvParse {
            line: rec.position().map_or(0, |p| p.line()),
            message: format!("{name} must be finite, got {v}"),
        })
    }
}

/// Load a station layout. Two header schemas are accepted:
/// `operator,x_m,y_m` (planar meters) and `operator,lat,lon` (degrees,
/// projected to planar meters with a local equirectangular projection about
/// the centroid). Station ids follow file order. An empty body yields an
/// empty list; the caller decides whether that is fatal.
pub fn load_bs_csv(path: &Path) -> Result<Vec<BaseStation>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(map_csv_err)?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(map_csv_err)?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let geographic = match headers.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["operator", "x_m", "y_m"] => false,
        ["operator", "lat", "lon"] => true,
        _ => {
            return Err(Error::UnknownHeader {
                found: headers.join(","),
            })
        }
    };

    let mut rows: Vec<(u8, f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(map_csv_err)?;
        let op = check_operator(&rec, parse_field(&rec, 0, "operator")?)?;
        let a = check_finite(&rec, &headers[1], parse_field(&rec, 1, &headers[1])?)?;
        let b = check_finite(&rec, &headers[2], parse_field(&rec, 2, &headers[2])?)?;
        if geographic && (a.abs() > 90.0 || b.abs() > 180.0) {
            return Err(Error::CsvParse {
                line: rec.position().map_or(0, |p| p.line()),
                message: format!("({a}, {b}) is not a valid lat/lon pair"),
            });
        }
        rows.push((op, a, b));
    }

    let coords: Vec<(f64, f64)> = if geographic && !rows.is_empty() {
        let n = rows.len() as f64;
        let lat0 = rows.iter().map(|r| r.1).sum::<f64>() / n;
        let lon0 = rows.iter().map(|r| r.2).sum::<f64>() / n;
        let scale_x = EARTH_RADIUS * lat0.to_radians().cos();
        rows.iter()
            .map(|&(_, lat, lon)| {
                (
                    scale_x * (lon - lon0).to_radians(),
                    EARTH_RADIUS * (lat - lat0).to_radians(),
                )
            })
            .collect()
    } else {
        rows.iter().map(|&(_, x, y)| (x, y)).collect()
    };

    Ok(rows
        .iter()
        .zip(coords)
        .enumerate()
        .map(|(id, (&(op, ..), (x, y)))| BaseStation {
            id,
            operator: op,
            x,
            y,
            subchannels: SubchannelRange { first: 0, count: 0 },
        })
        .collect())
}

/// Parse a scenario configuration from TOML text. Every field is optional;
/// omitted fields take the reference-scenario defaults. Dimensioned fields
/// accept unit suffixes ("46 dBm", "10 MHz", "20 km", "8 dB") or bare SI
/// numbers.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::ConfigSchema {
        problems: vec![e.message().to_string()],
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
