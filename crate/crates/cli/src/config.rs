//! Configuration loading: a plain-text file of dotted `key = value`
//! lines plus repeatable `--set key=value` overrides, both applied
//! through the same typed path so they behave identically.

use std::path::{Path, PathBuf};

use beamcast_core::error::{Error, Result};
use beamcast_core::SimConfig;

/// Splits config text into `(key, value)` pairs. `#` starts a comment,
/// blank lines are ignored, and everything else must be `key = value`.
pub fn parse_config_lines(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: idx + 1,
                msg: format!("expected `key = value`, got `{}`", raw.trim()),
            });
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, expected: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::config(format!(
            "invalid value `{value}` for `{key}` (expected {expected})"
        ))
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::config(format!(
            "invalid value `{value}` for `{key}` (expected true|false)"
        ))),
    }
}

fn parse_num_list<T: std::str::FromStr>(key: &str, value: &str, expected: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|item| parse_num(key, item.trim(), expected))
        .collect()
}

/// Comma-separated list of values with their own `FromStr` diagnostics
/// (clustering strategies, metrics, precoders).
fn parse_word_list<T: std::str::FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    value.split(',').map(|item| item.trim().parse()).collect()
}

/// Applies one dotted setting to the configuration; unknown keys and
/// mistyped values are rejected with the offending key in the message.
pub fn apply_setting(cfg: &mut SimConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "layout.rings" => cfg.layout.rings = parse_num(key, value, "a non-negative integer")?,
        "layout.beam_radius_km" => cfg.layout.beam_radius_km = parse_num(key, value, "a number")?,
        "layout.center_lat_deg" => cfg.layout.center_lat_deg = parse_num(key, value, "a number")?,
        "layout.center_lon_deg" => cfg.layout.center_lon_deg = parse_num(key, value, "a number")?,
        "layout.csv" => cfg.layout.csv = Some(PathBuf::from(value)),
        "layout.satellite_lon_deg" => {
            cfg.layout.satellite_lon_deg = parse_num(key, value, "a number")?
        }
        "deploy.density" => cfg.deploy.density_per_km2 = parse_num(key, value, "a number")?,
        "deploy.rounding" => cfg.deploy.rounding = value.parse()?,
        "cluster.size" => cfg.cluster.size = parse_num(key, value, "a positive integer")?,
        "cluster.algorithm" => cfg.cluster.algorithm = value.parse()?,
        "cluster.metric" => cfg.cluster.metric = value.parse()?,
        "cluster.normalize" => cfg.cluster.normalize = parse_bool(key, value)?,
        "cluster.kmeans_tol" => cfg.cluster.kmeans_tol = parse_num(key, value, "a number")?,
        "cluster.kmeans_max_iter" => {
            cfg.cluster.kmeans_max_iter = parse_num(key, value, "a positive integer")?
        }
        "channel.peak_gain_dbi" => cfg.channel.peak_gain_dbi = parse_num(key, value, "a number")?,
        "channel.gain_csv" => cfg.channel.gain_csv = Some(PathBuf::from(value)),
        "channel.phase_per" => cfg.channel.phase_per = value.parse()?,
        "channel.frequency_hz" => {
            cfg.channel.link.carrier_frequency_hz = parse_num(key, value, "a number")?
        }
        "channel.rx_diameter_m" => {
            cfg.channel.link.rx_antenna_diameter_m = parse_num(key, value, "a number")?
        }
        "channel.rx_efficiency" => {
            cfg.channel.link.rx_antenna_efficiency = parse_num(key, value, "a number")?
        }
        "channel.losses_db" => {
            cfg.channel.link.antenna_losses_db = parse_num(key, value, "a number")?
        }
        "channel.noise_temperature_k" => {
            cfg.channel.link.noise_temperature_k = parse_num(key, value, "a number")?
        }
        "channel.bandwidth_hz" => {
            cfg.channel.link.user_bandwidth_hz = parse_num(key, value, "a number")?
        }
        "power.psat" => cfg.power.psat_w = parse_num(key, value, "a number")?,
        "power.precoder" => cfg.power.precoder = value.parse()?,
        "rate.model" => cfg.rate.model = value.parse()?,
        "rate.modcod_csv" => cfg.rate.modcod_csv = Some(PathBuf::from(value)),
        "run.iterations" => cfg.run.iterations = parse_num(key, value, "a positive integer")?,
        "run.seed" => cfg.run.seed = parse_num(key, value, "an unsigned integer")?,
        "run.include_reserves" => cfg.run.include_reserves = parse_bool(key, value)?,
        "sweep.algorithm" => cfg.sweep.algorithm = Some(parse_word_list(value)?),
        "sweep.metric" => cfg.sweep.metric = Some(parse_word_list(value)?),
        "sweep.precoder" => cfg.sweep.precoder = Some(parse_word_list(value)?),
        "sweep.k" => cfg.sweep.k = Some(parse_num_list(key, value, "a positive integer")?),
        "sweep.rho" => cfg.sweep.rho = Some(parse_num_list(key, value, "a number")?),
        "sweep.psat" => cfg.sweep.psat = Some(parse_num_list(key, value, "a number")?),
        other => {
            return Err(Error::config(format!(
                "unknown configuration key `{other}`"
            )))
        }
    }
    Ok(())
}

/// Builds the full configuration: defaults, then the config file (if
/// any), then `--set` overrides in order, then the `--seed` shortcut;
/// validates the result.
pub fn load_config(
    config_path: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)?;
        for (key, value) in parse_config_lines(&text, &path.display().to_string())? {
            apply_setting(&mut cfg, &key, &value)?;
        }
    }
    for item in overrides {
        let Some((key, value)) = item.split_once('=') else {
            return Err(Error::config(format!(
                "override `{item}` is not of the form key=value"
            )));
        };
        apply_setting(&mut cfg, key.trim(), value.trim())?;
    }
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}
