//! Forward-link channel synthesis: link-budget parameters, transmit feed
//! patterns, and the noise-normalised complex coefficient between every
//! feed and every user.
//!
//! Coefficients are scaled by `1 / sqrt(noise power)`, so downstream SINR
//! denominators are simply `1 + interference` and no separate noise term
//! is carried around. Each coefficient combines receive gain, feed gain
//! towards the user, losses, free-space attenuation, the propagation
//! phase, and a per-feed (or per-beam) random phase offset.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{off_axis_angle_rad, BeamLayout, GeoPos, UserDeployment};
use crate::math::{aperture_taper, db_to_lin, taper_half_power_arg};

/// Boltzmann constant, J/K.
pub const BOLTZMANN_J_PER_K: f64 = 1.380649e-23;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Complex feed-to-user coefficients for one user, indexed by feed.
pub type ChannelVector = Vec<Complex64>;

// ---------- Link budget ----------

/// Receiver, loss, and noise parameters of the forward link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkBudgetParams {
    pub carrier_frequency_hz: f64,
    pub rx_antenna_diameter_m: f64,
    /// Receive aperture efficiency, in (0, 1].
    pub rx_antenna_efficiency: f64,
    /// Overall antenna losses as a positive dB figure.
    pub antenna_losses_db: f64,
    pub noise_temperature_k: f64,
    pub user_bandwidth_hz: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        LinkBudgetParams {
            carrier_frequency_hz: 19.5e9,
            rx_antenna_diameter_m: 0.6,
            rx_antenna_efficiency: 0.6,
            antenna_losses_db: 2.55,
            noise_temperature_k: 207.0,
            user_bandwidth_hz: 500e6,
        }
    }
}

impl LinkBudgetParams {
    /// Carrier wavelength in metres.
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_S / self.carrier_frequency_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier frequency", self.carrier_frequency_hz),
            ("rx antenna diameter", self.rx_antenna_diameter_m),
            ("noise temperature", self.noise_temperature_k),
            ("user bandwidth", self.user_bandwidth_hz),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.rx_antenna_efficiency > 0.0 && self.rx_antenna_efficiency <= 1.0) {
            return Err(Error::config(format!(
                "rx antenna efficiency must be in (0, 1], got {}",
                self.rx_antenna_efficiency
            )));
        }
        if self.antenna_losses_db < 0.0 {
            return Err(Error::config(format!(
                "antenna losses must be a non-negative dB figure, got {}",
                self.antenna_losses_db
            )));
        }
        Ok(())
    }
}

/// Receive antenna gain (linear) of a circular aperture:
/// `efficiency * (pi * diameter / wavelength)^2`.
pub fn rx_antenna_gain_lin(params: &LinkBudgetParams) -> f64 {
    let d_over_lambda = params.rx_antenna_diameter_m / params.wavelength_m();
    params.rx_antenna_efficiency * (std::f64::consts::PI * d_over_lambda).powi(2)
}

/// Thermal noise power `k * T * B` in watts.
pub fn noise_power_w(params: &LinkBudgetParams) -> f64 {
    BOLTZMANN_J_PER_K * params.noise_temperature_k * params.user_bandwidth_hz
}

// ---------- Feed patterns ----------

/// Transmit pattern of the satellite feeds.
#[derive(Debug, Clone)]
pub enum AntennaPattern {
    /// Circular-aperture taper `peak * (2 J1(u) / u)^2` with
    /// `u = u_3dB * sin(theta) / sin(theta_edge)`, where `theta_edge` is
    /// the angle subtended by the footprint point one radius due north of
    /// the beam centre. The -3 dB level therefore lands on the beam edge
    /// at that calibration point.
    TaperedAperture {
        peak_gain_dbi: f64,
        /// Cached half-power argument of the taper (`~1.61634`).
        half_power_arg: f64,
    },
    /// Per-feed sampled gains interpolated bilinearly (in dBi) over a
    /// rectangular latitude/longitude grid.
    Table(GainTable),
}

impl AntennaPattern {
    /// Taper pattern with the given peak feed gain.
    pub fn tapered(peak_gain_dbi: f64) -> Self {
        AntennaPattern::TaperedAperture {
            peak_gain_dbi,
            half_power_arg: taper_half_power_arg(),
        }
    }

    /// Linear gain of feed `feed_index` towards `user`.
    pub fn gain_lin(&self, layout: &BeamLayout, feed_index: usize, user: GeoPos) -> Result<f64> {
        match self {
            AntennaPattern::TaperedAperture {
                peak_gain_dbi,
                half_power_arg,
            } => {
                let sat = layout.satellite_ecef_km();
                let theta = off_axis_angle_rad(&sat, layout.beams[feed_index].center, user);
                let edge = layout.beam_edge_angle_rad(feed_index);
                Ok(tapered_gain_lin(
                    db_to_lin(*peak_gain_dbi),
                    *half_power_arg,
                    theta,
                    edge,
                ))
            }
            AntennaPattern::Table(table) => {
                let feed_id = layout.beams[feed_index].id;
                table.gain_dbi(feed_id, user).map(db_to_lin)
            }
        }
    }
}

/// Taper gain evaluation with precomputed per-feed quantities.
fn tapered_gain_lin(peak_lin: f64, half_power_arg: f64, theta: f64, edge_angle: f64) -> f64 {
    let u = half_power_arg * theta.sin() / edge_angle.sin();
    peak_lin * aperture_taper(u)
}

// ---------- Sampled gain tables ----------

/// Sampled feed gains over rectangular latitude/longitude grids, one grid
/// per feed id.
#[derive(Debug, Clone)]
pub struct GainTable {
    feeds: BTreeMap<usize, FeedGrid>,
}

#[derive(Debug, Clone)]
struct FeedGrid {
    lats: Vec<f64>,
    lons: Vec<f64>,
    /// Row-major over (lat index, lon index).
    gains_dbi: Vec<f64>,
}

impl GainTable {
    /// Bilinear interpolation of the feed's gain at `pos`, in dBi.
    pub fn gain_dbi(&self, feed_id: usize, pos: GeoPos) -> Result<f64> {
        let grid = self.feeds.get(&feed_id).ok_or_else(|| {
            Error::config(format!("gain table has no samples for feed {feed_id}"))
        })?;
        let (i0, i1, tlat) = bracket(&grid.lats, pos.lat_deg).ok_or_else(|| {
            Error::numerical(format!(
                "latitude {} outside gain grid for feed {feed_id}",
                pos.lat_deg
            ))
        })?;
        let (j0, j1, tlon) = bracket(&grid.lons, pos.lon_deg).ok_or_else(|| {
            Error::numerical(format!(
                "longitude {} outside gain grid for feed {feed_id}",
                pos.lon_deg
            ))
        })?;
        let at = |i: usize, j: usize| grid.gains_dbi[i * grid.lons.len() + j];
        let g0 = at(i0, j0) * (1.0 - tlon) + at(i0, j1) * tlon;
        let g1 = at(i1, j0) * (1.0 - tlon) + at(i1, j1) * tlon;
        Ok(g0 * (1.0 - tlat) + g1 * tlat)
    }

    pub fn feed_ids(&self) -> Vec<usize> {
        self.feeds.keys().copied().collect()
    }
}

/// Bracketing indices and interpolation weight for `x` in a sorted axis.
fn bracket(axis: &[f64], x: f64) -> Option<(usize, usize, f64)> {
    if axis.is_empty() || x < axis[0] || x > axis[axis.len() - 1] {
        return None;
    }
    if axis.len() == 1 {
        return Some((0, 0, 0.0));
    }
    let hi = axis.partition_point(|&v| v < x).min(axis.len() - 1).max(1);
    let lo = hi - 1;
    let span = axis[hi] - axis[lo];
    let t = if span > 0.0 {
        (x - axis[lo]) / span
    } else {
        0.0
    };
    Some((lo, hi, t))
}

/// Loads a sampled gain table from a CSV file with header
/// `feed_id,lat_deg,lon_deg,gain_dbi`. Every feed's samples must form a
/// complete rectangular latitude/longitude grid.
pub fn load_gain_table(path: &std::path::Path) -> Result<GainTable> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path_str.clone(),
        line: 1,
        msg: "file is empty".into(),
    })?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields != ["feed_id", "lat_deg", "lon_deg", "gain_dbi"] {
        return Err(Error::Parse {
            path: path_str,
            line: 1,
            msg: format!("expected header `feed_id,lat_deg,lon_deg,gain_dbi`, got `{header}`"),
        });
    }
    let mut samples: BTreeMap<usize, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: path_str,
                line: line_no,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let feed: usize = fields[0].parse().map_err(|_| Error::Parse {
            path: path_str.clone(),
            line: line_no,
            msg: format!("invalid feed id `{}`", fields[0]),
        })?;
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: line_no,
                msg: format!("invalid {what} `{s}`"),
            })
        };
        let lat = parse_f(fields[1], "latitude")?;
        let lon = parse_f(fields[2], "longitude")?;
        let gain = parse_f(fields[3], "gain")?;
        samples.entry(feed).or_default().push((lat, lon, gain));
    }
    let mut feeds = BTreeMap::new();
    for (feed, pts) in samples {
        let mut lats: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let mut lons: Vec<f64> = pts.iter().map(|p| p.1).collect();
        lats.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lats.dedup();
        lons.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lons.dedup();
        let mut gains = vec![None; lats.len() * lons.len()];
        for (lat, lon, g) in &pts {
            let i = lats.iter().position(|v| v == lat).unwrap();
            let j = lons.iter().position(|v| v == lon).unwrap();
            gains[i * lons.len() + j] = Some(*g);
        }
        if gains.iter().any(Option::is_none) || pts.len() != lats.len() * lons.len() {
            return Err(Error::config(format!(
                "gain samples for feed {feed} do not form a complete rectangular grid"
            )));
        }
        feeds.insert(
            feed,
            FeedGrid {
                lats,
                lons,
                gains_dbi: gains.into_iter().map(Option::unwrap).collect(),
            },
        );
    }
    if feeds.is_empty() {
        return Err(Error::config("gain table contains no samples"));
    }
    Ok(GainTable { feeds })
}

// ---------- Coefficient synthesis ----------

/// Whether the random phase offset is drawn per transmit feed (default)
/// or once per receiving beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseScope {
    Feed,
    Beam,
}

impl std::fmt::Display for PhaseScope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PhaseScope::Feed => "feed",
            PhaseScope::Beam => "beam",
        })
    }
}

impl std::str::FromStr for PhaseScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feed" => Ok(PhaseScope::Feed),
            "beam" => Ok(PhaseScope::Beam),
            other => Err(Error::config(format!(
                "unknown phase scope `{other}` (expected feed|beam)"
            ))),
        }
    }
}

/// One noise-normalised coefficient from explicit link quantities:
/// `sqrt(G_rx * G_loss * G_feed) / (4 pi d / lambda * sqrt(P_noise))`
/// with phase `-(2 pi d / lambda + phase_offset)`.
pub fn channel_coefficient(
    feed_gain_lin: f64,
    distance_m: f64,
    phase_offset_rad: f64,
    params: &LinkBudgetParams,
) -> Complex64 {
    let lambda = params.wavelength_m();
    let g_rx = rx_antenna_gain_lin(params);
    let g_loss = db_to_lin(-params.antenna_losses_db);
    let noise = noise_power_w(params);
    let magnitude = (g_rx * g_loss * feed_gain_lin).sqrt()
        / (4.0 * std::f64::consts::PI * (distance_m / lambda) * noise.sqrt());
    let phase = -(2.0 * std::f64::consts::PI / lambda) * distance_m - phase_offset_rad;
    Complex64::from_polar(magnitude, phase)
}

/// Synthesises the full set of feed-to-user coefficients for a deployment,
/// drawing one random phase offset per feed (or per beam) in index order.
pub fn synthesize_channels(
    layout: &BeamLayout,
    deployment: &UserDeployment,
    pattern: &AntennaPattern,
    params: &LinkBudgetParams,
    phase_scope: PhaseScope,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<ChannelVector>>> {
    let phases: Vec<f64> = (0..layout.n_beams())
        .map(|_| 2.0 * std::f64::consts::PI * rng.gen::<f64>())
        .collect();
    synthesize_channels_with_phases(layout, deployment, pattern, params, phase_scope, &phases)
}

/// Deterministic core of [`synthesize_channels`] with the phase offsets
/// supplied explicitly (`phases[j]` applies per feed `j`, or per beam when
/// the scope is [`PhaseScope::Beam`]).
pub fn synthesize_channels_with_phases(
    layout: &BeamLayout,
    deployment: &UserDeployment,
    pattern: &AntennaPattern,
    params: &LinkBudgetParams,
    phase_scope: PhaseScope,
    phases: &[f64],
) -> Result<Vec<Vec<ChannelVector>>> {
    params.validate()?;
    let n_beams = layout.n_beams();
    assert_eq!(
        deployment.per_beam.len(),
        n_beams,
        "deployment does not match layout"
    );
    assert_eq!(phases.len(), n_beams, "need one phase offset per feed");
    let sat = layout.satellite_ecef_km();
    let mut out = Vec::with_capacity(n_beams);
    for (b, users) in deployment.per_beam.iter().enumerate() {
        let mut rows = Vec::with_capacity(users.len());
        for &user in users {
            let distance_m = crate::geometry::slant_range_km(user, &sat) * 1000.0;
            let mut coeffs = Vec::with_capacity(n_beams);
            for j in 0..n_beams {
                let gain = pattern.gain_lin(layout, j, user)?;
                let phase = match phase_scope {
                    PhaseScope::Feed => phases[j],
                    PhaseScope::Beam => phases[b],
                };
                coeffs.push(channel_coefficient(gain, distance_m, phase, params));
            }
            rows.push(coeffs);
        }
        out.push(rows);
    }
    Ok(out)
}
