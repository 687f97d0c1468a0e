//! Quantities with optional unit suffixes, normalised to SI.

use serde::{Deserialize, Serialize};

/// A configuration value: a bare number (already SI) or text such as
/// `"100 µg"`, `"100 kHz"`, `"0.3 mm"` or `"3R"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl From<f64> for Quantity {
    fn from(x: f64) -> Self {
        Quantity::Number(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Mass,
    Frequency,
    Length,
    Dimensionless,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Mass => "mass",
            Dimension::Frequency => "frequency",
            Dimension::Length => "length",
            Dimension::Dimensionless => "dimensionless",
        }
    }

    /// Unit symbols with their decimal exponent relative to SI.
    fn units(self) -> &'static [(&'static str, i32)] {
        match self {
            Dimension::Mass => &[("kg", 0), ("g", -3), ("mg", -6), ("µg", -9), ("μg", -9), ("ug", -9)],
            Dimension::Frequency => &[("Hz", 0), ("kHz", 3), ("MHz", 6), ("mHz", -3)],
            Dimension::Length => &[("m", 0), ("mm", -3), ("µm", -6), ("μm", -6), ("um", -6), ("nm", -9)],
            Dimension::Dimensionless => &[],
        }
    }
}

/// Centre distance, absolute or relative to the sphere radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separation {
    Meters(f64),
    Radii(f64),
}

fn split_number(text: &str) -> Result<(f64, &str), String> {
    let t = text.trim();
    let end = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-'
                || ((c == 'e' || c == 'E') && i > 0 && t[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map_or(t.len(), |(i, _)| i);
    let value: f64 = t[..end]
        .parse()
        .map_err(|_| format!("cannot read a number from {text:?}"))?;
    Ok((value, t[end..].trim()))
}

/// `value·10^k`, rounded once from the shortest decimal form of `value`.
fn shift_decimal(value: f64, k: i32) -> f64 {
    if k == 0 || !value.is_finite() {
        return value;
    }
    let repr = format!("{value:e}");
    let (mantissa, exp) = repr.split_once('e').unwrap_or((&repr, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    format!("{mantissa}e{}", exp + k).parse().unwrap_or(value)
}

/// Converts `q` to SI, checking that its unit has dimension `dim`.
pub fn to_si(q: &Quantity, dim: Dimension) -> Result<f64, String> {
    let value = match q {
        Quantity::Number(x) => *x,
        Quantity::Text(text) => {
            let (value, unit) = split_number(text)?;
            if unit.is_empty() {
                value
            } else {
                let exponent = dim
                    .units()
                    .iter()
                    .find(|(u, _)| *u == unit)
                    .map(|&(_, k)| k)
                    .ok_or_else(|| unit_error(unit, dim))?;
                shift_decimal(value, exponent)
            }
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("value {value} is not finite"))
    }
}

fn unit_error(unit: &str, dim: Dimension) -> String {
    let other = [Dimension::Mass, Dimension::Frequency, Dimension::Length]
        .into_iter()
        .find(|d| d.units().iter().any(|(u, _)| *u == unit));
    match other {
        Some(d) => format!("unit mismatch: `{unit}` is a {} unit, expected {}", d.name(), dim.name()),
        None if dim == Dimension::Dimensionless => format!("unexpected unit `{unit}` on a dimensionless value"),
        None => {
            let known: Vec<_> = dim.units().iter().map(|(u, _)| *u).collect();
            format!("unknown {} unit `{unit}` (known: {})", dim.name(), known.join(", "))
        }
    }
}

/// Parses a separation: a length, or a multiple of the radius written `3R`.
pub fn separation(q: &Quantity) -> Result<Separation, String> {
    if let Quantity::Text(text) = q {
        let t = text.trim();
        if let Some(head) = t.strip_suffix('R') {
            let (k, rest) = split_number(head)?;
            if !rest.is_empty() {
                return Err(format!("cannot read a radius multiple from {text:?}"));
            }
            return Ok(Separation::Radii(k));
        }
    }
    to_si(q, Dimension::Length).map(Separation::Meters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> Quantity {
        Quantity::Text(s.into())
    }

    #[test]
    fn suffixes() {
        assert_eq!(to_si(&text("100 µg"), Dimension::Mass).unwrap(), 1e-7);
        assert_eq!(to_si(&text("100ug"), Dimension::Mass).unwrap(), 1e-7);
        assert_eq!(to_si(&text("5 mg"), Dimension::Mass).unwrap(), 5e-6);
        assert_eq!(to_si(&text("2 g"), Dimension::Mass).unwrap(), 2e-3);
        assert_eq!(to_si(&text("1 kg"), Dimension::Mass).unwrap(), 1.0);
        assert_eq!(to_si(&text("100 kHz"), Dimension::Frequency).unwrap(), 1e5);
        assert_eq!(to_si(&text("0.1 Hz"), Dimension::Frequency).unwrap(), 0.1);
        assert_eq!(to_si(&text("0.3 mm"), Dimension::Length).unwrap(), 3e-4);
        assert_eq!(to_si(&text("250 µm"), Dimension::Length).unwrap(), 2.5e-4);
        assert_eq!(to_si(&text("1e-7"), Dimension::Mass).unwrap(), 1e-7);
        assert_eq!(to_si(&text("2.5e3 Hz"), Dimension::Frequency).unwrap(), 2500.0);
        assert_eq!(to_si(&Quantity::Number(3.0), Dimension::Length).unwrap(), 3.0);
    }

    #[test]
    fn mismatches() {
        let err = to_si(&text("3 Hz"), Dimension::Mass).unwrap_err();
        assert!(err.contains("unit mismatch"), "{err}");
        assert!(to_si(&text("3 parsec"), Dimension::Length).unwrap_err().contains("unknown length unit"));
        assert!(to_si(&text("abc"), Dimension::Mass).is_err());
    }

    #[test]
    fn separations() {
        assert_eq!(separation(&text("3R")).unwrap(), Separation::Radii(3.0));
        assert_eq!(separation(&text("2.1 R")).unwrap(), Separation::Radii(2.1));
        assert_eq!(separation(&text("0.3 mm")).unwrap(), Separation::Meters(3e-4));
        assert_eq!(separation(&Quantity::Number(0.05)).unwrap(), Separation::Meters(0.05));
        assert!(separation(&text("xR")).is_err());
    }
}
