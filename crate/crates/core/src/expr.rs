//! Numeric tokens of the form `2*pi*3.6e6`, `pi/16` or `-pi/4`.
//!
//! Only products and quotients of literals and the constant `pi` are
//! accepted; evaluation is strictly left to right.

use crate::error::{Error, Result};
use std::f64::consts::PI;

pub fn parse_number(token: &str) -> Result<f64> {
    let s = token.trim();
    if s.is_empty() {
        return Err(Error::Expression(token.to_string()));
    }
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(s)),
    };

    let mut value = 1.0;
    let mut op = '*';
    let mut start = 0;
    let bytes: Vec<char> = body.chars().collect();
    for i in 0..=bytes.len() {
        let at_end = i == bytes.len();
        if at_end || bytes[i] == '*' || bytes[i] == '/' {
            let factor: String = bytes[start..i].iter().collect();
            let f = factor_value(factor.trim()).ok_or_else(|| Error::Expression(token.to_string()))?;
            match op {
                '*' => value *= f,
                _ => value /= f,
            }
            if !at_end {
                op = bytes[i];
            }
            start = i + 1;
        }
    }
    if !value.is_finite() {
        return Err(Error::Expression(token.to_string()));
    }
    Ok(sign * value)
}

fn factor_value(s: &str) -> Option<f64> {
    match s {
        "pi" | "PI" | "π" => Some(PI),
        "" => None,
        other => other.parse::<f64>().ok(),
    }
}

/// Comma separated list of numeric tokens.
pub fn parse_list(list: &str) -> Result<Vec<f64>> {
    list.split(',').map(parse_number).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_pi_fractions() {
        assert_eq!(parse_number("0.25").unwrap(), 0.25);
        assert_eq!(parse_number("pi/16").unwrap(), PI / 16.0);
        assert_eq!(parse_number("-pi/4").unwrap(), -PI / 4.0);
        assert_eq!(parse_number("2*pi*3.6e6").unwrap(), 2.0 * PI * 3.6e6);
        assert_eq!(parse_number("1e-5").unwrap(), 1e-5);
        assert_eq!(parse_number("pi").unwrap(), PI);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_number("").is_err());
        assert!(parse_number("pi/").is_err());
        assert!(parse_number("two").is_err());
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("pi+1").is_err());
    }

    #[test]
    fn lists() {
        let v = parse_list("0, pi/16,pi/6").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[1], PI / 16.0);
    }
}
