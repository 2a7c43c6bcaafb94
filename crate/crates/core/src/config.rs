//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Values are numbers or
//! `pi`-expressions (`pi/16`, `2*pi*3.6e6`). Keys are the field names of
//! [`SystemParams`]; a cavity driven by explicit power instead of a
//! cooperativity uses
//!
//! * `drive_amplitude` (ε_l / κ) or `laser_power` (W) with `kappa_phys` (rad/s),
//! * `g0` (units of κ) or `cavity_length` (m) with `mirror_mass` (kg) and `kappa_phys`,
//! * `bare_detuning` (ω_c − ω_l in units of κ, default ω_m).

use crate::error::{Error, Result};
use crate::expr::parse_number;
use crate::params::{drive_amplitude_from_power, single_photon_coupling, Drive, SystemParams, SCALAR_KEYS};
use std::collections::BTreeMap;

const POWER_KEYS: &[&str] = &[
    "drive_amplitude",
    "laser_power",
    "kappa_phys",
    "g0",
    "cavity_length",
    "mirror_mass",
    "bare_detuning",
];

/// Raw `key -> value` pairs in file order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, f64, usize)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config { line: line_no, reason: "empty key".into() });
        }
        let value = parse_number(value).map_err(|_| Error::Config {
            line: line_no,
            reason: format!("cannot parse value for `{key}`"),
        })?;
        out.push((key.to_string(), value, line_no));
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<SystemParams> {
    let mut p = SystemParams::default();
    let mut power: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut saw_cooperativity = false;

    for (key, value, line) in parse_pairs(text)? {
        if let Some(k) = POWER_KEYS.iter().find(|k| **k == key) {
            if power.insert(k, value).is_some() {
                return Err(Error::Config { line, reason: format!("duplicate key `{key}`") });
            }
        } else if SCALAR_KEYS.contains(&key.as_str()) {
            saw_cooperativity |= key == "cooperativity";
            p.set(&key, value)?;
        } else {
            return Err(Error::UnknownKey(key));
        }
    }

    if !power.is_empty() {
        if saw_cooperativity {
            return Err(Error::Config {
                line: 0,
                reason: "`cooperativity` cannot be combined with power-drive keys".into(),
            });
        }
        p.drive = power_drive(&p, &power)?;
    }
    p.validate()?;
    Ok(p)
}

fn power_drive(p: &SystemParams, keys: &BTreeMap<&'static str, f64>) -> Result<Drive> {
    let missing = |what: &str| Error::Config { line: 0, reason: format!("power drive needs {what}") };
    let bare_detuning = keys.get("bare_detuning").copied().unwrap_or(p.omega_m);
    let kappa_phys = keys.get("kappa_phys").copied();

    let amplitude = match (keys.get("drive_amplitude"), keys.get("laser_power")) {
        (Some(a), _) => *a,
        (None, Some(power)) => {
            let kp = kappa_phys.ok_or_else(|| missing("`kappa_phys` with `laser_power`"))?;
            let omega_laser = p.omega_c_phys - bare_detuning * kp;
            drive_amplitude_from_power(*power, kp, omega_laser)
        }
        (None, None) => return Err(missing("`drive_amplitude` or `laser_power`")),
    };
    let g0 = match (keys.get("g0"), keys.get("cavity_length"), keys.get("mirror_mass")) {
        (Some(g0), _, _) => *g0,
        (None, Some(len), Some(mass)) => {
            let kp = kappa_phys.ok_or_else(|| missing("`kappa_phys` with `cavity_length`"))?;
            single_photon_coupling(p.omega_c_phys, *len, *mass, p.omega_m_phys, kp)
        }
        _ => return Err(missing("`g0` or `cavity_length` and `mirror_mass`")),
    };
    Ok(Drive::Power { amplitude, g0, bare_detuning })
}

/// Renders the resolved parameters as `key = value` lines.
pub fn render_config(p: &SystemParams) -> String {
    let mut lines = vec![
        format!("kappa = {}", p.kappa),
        format!("omega_m = {}", p.omega_m),
        format!("gamma_m = {}", p.gamma_m),
        format!("gain = {}", p.gain),
        format!("theta = {}", p.theta),
    ];
    match p.drive {
        Drive::Cooperativity(c) => lines.push(format!("cooperativity = {c}")),
        Drive::Power { amplitude, g0, bare_detuning } => {
            lines.push(format!("drive_amplitude = {amplitude}"));
            lines.push(format!("g0 = {g0}"));
            lines.push(format!("bare_detuning = {bare_detuning}"));
        }
    }
    lines.push(format!("temperature = {}", p.temperature));
    lines.push(format!("omega_m_phys = {}", p.omega_m_phys));
    lines.push(format!("omega_c_phys = {}", p.omega_c_phys));
    if let Some(d) = p.detuning {
        lines.push(format!("detuning = {d}"));
    }
    if let Some(n) = p.n_th_m {
        lines.push(format!("n_th_m = {n}"));
    }
    if let Some(n) = p.n_th_c {
        lines.push(format!("n_th_c = {n}"));
    }
    lines.join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn preset_style_config() {
        let text = "# squeezing optimum\nomega_m = 10\ngamma_m = 1e-5\ncooperativity = 400\ngain = 0.49\ntheta = pi/16 # optimal\n";
        let p = parse_config(text).unwrap();
        assert_eq!(p.gain, 0.49);
        assert_eq!(p.theta, PI / 16.0);
        assert_eq!(p.drive, Drive::Cooperativity(400.0));
    }

    #[test]
    fn render_round_trips() {
        let p = SystemParams { detuning: Some(9.5), n_th_m: Some(3.0), ..SystemParams::default() }
            .with_gain(0.31)
            .with_temperature(0.01);
        assert_eq!(parse_config(&render_config(&p)).unwrap(), p);
        let p = SystemParams {
            drive: Drive::Power { amplitude: 12.0, g0: 1e-3, bare_detuning: 10.0 },
            ..SystemParams::default()
        };
        assert_eq!(parse_config(&render_config(&p)).unwrap(), p);
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(parse_config("gain 0.3"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse_config("foo = 1"), Err(Error::UnknownKey(k)) if k == "foo"));
        assert!(matches!(parse_config("gain = x"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse_config("gamma_m = -1"), Err(Error::InvalidParameter { .. })));
        assert!(parse_config("cooperativity = 10\ng0 = 0.1\ndrive_amplitude = 3").is_err());
        assert!(parse_config("g0 = 0.1").is_err());
    }

    #[test]
    fn physical_power_drive() {
        let text = "laser_power = 1e-6\nkappa_phys = 2*pi*1e5\ncavity_length = 1e-3\nmirror_mass = 1e-12\n";
        let p = parse_config(text).unwrap();
        match p.drive {
            Drive::Power { amplitude, g0, bare_detuning } => {
                assert!(amplitude > 0.0 && g0 > 0.0);
                assert_eq!(bare_detuning, 10.0);
            }
            _ => panic!("expected power drive"),
        }
    }
}
