//! Beam geometry on a spherical Earth seen from a geostationary satellite:
//! beam layouts (generated hexagonal grids or CSV files), random user
//! deployment inside each footprint, and slant ranges to the satellite.
//!
//! Conventions used throughout:
//! * Earth is a sphere; the satellite sits on the equatorial GEO arc at a
//!   configurable longitude.
//! * Beam footprints are circles on the local tangent plane at the beam
//!   centre; small offsets are mapped to latitude/longitude with an
//!   equirectangular approximation, which is accurate at footprint scale.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Geostationary orbit radius (from Earth's centre) in kilometres.
pub const GEO_ORBIT_RADIUS_KM: f64 = 42164.0;

// ---------- Positions ----------

/// Geographic position on the spherical Earth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPos {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPos {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Self {
        GeoPos { lat_deg, lon_deg }
    }

    /// Earth-centred cartesian coordinates in kilometres.
    pub fn ecef_km(&self) -> [f64; 3] {
        let la = self.lat_deg.to_radians();
        let lo = self.lon_deg.to_radians();
        [
            EARTH_RADIUS_KM * la.cos() * lo.cos(),
            EARTH_RADIUS_KM * la.cos() * lo.sin(),
            EARTH_RADIUS_KM * la.sin(),
        ]
    }
}

/// Satellite position on the GEO arc, in Earth-centred kilometres.
pub fn satellite_ecef_km(satellite_longitude_deg: f64) -> [f64; 3] {
    let lo = satellite_longitude_deg.to_radians();
    [
        GEO_ORBIT_RADIUS_KM * lo.cos(),
        GEO_ORBIT_RADIUS_KM * lo.sin(),
        0.0,
    ]
}

/// True when the satellite is at or above the horizon for this position.
pub fn is_visible(pos: GeoPos, satellite_longitude_deg: f64) -> bool {
    let la = pos.lat_deg.to_radians();
    let dlon = (pos.lon_deg - satellite_longitude_deg).to_radians();
    // Central angle psi between the position and the sub-satellite point;
    // elevation >= 0 exactly when cos(psi) >= R_earth / R_orbit.
    la.cos() * dlon.cos() >= EARTH_RADIUS_KM / GEO_ORBIT_RADIUS_KM
}

/// Straight-line distance from a ground position to the satellite, km.
pub fn slant_range_km(pos: GeoPos, satellite_ecef_km: &[f64; 3]) -> f64 {
    let p = pos.ecef_km();
    let dx = satellite_ecef_km[0] - p[0];
    let dy = satellite_ecef_km[1] - p[1];
    let dz = satellite_ecef_km[2] - p[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

// ---------- Tangent plane ----------

/// East/north offset (km) of `point` relative to `origin` on the local
/// tangent plane, using the equirectangular small-offset mapping.
pub fn tangent_offset_km(origin: GeoPos, point: GeoPos) -> [f64; 2] {
    let east = (point.lon_deg - origin.lon_deg).to_radians()
        * EARTH_RADIUS_KM
        * origin.lat_deg.to_radians().cos();
    let north = (point.lat_deg - origin.lat_deg).to_radians() * EARTH_RADIUS_KM;
    [east, north]
}

/// Inverse of [`tangent_offset_km`]: the position at a given east/north
/// offset from `origin`.
pub fn tangent_point(origin: GeoPos, east_km: f64, north_km: f64) -> GeoPos {
    let lat = origin.lat_deg + (north_km / EARTH_RADIUS_KM).to_degrees();
    let lon = origin.lon_deg
        + (east_km / (EARTH_RADIUS_KM * origin.lat_deg.to_radians().cos())).to_degrees();
    GeoPos::new(lat, lon)
}

/// Angle at the satellite between the boresight direction and a target
/// position (radians). Uses atan2 for stability at small angles.
pub fn off_axis_angle_rad(satellite_ecef_km: &[f64; 3], boresight: GeoPos, target: GeoPos) -> f64 {
    let a = direction_from(satellite_ecef_km, boresight);
    let b = direction_from(satellite_ecef_km, target);
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let cx = a[1] * b[2] - a[2] * b[1];
    let cy = a[2] * b[0] - a[0] * b[2];
    let cz = a[0] * b[1] - a[1] * b[0];
    let cross = (cx * cx + cy * cy + cz * cz).sqrt();
    cross.atan2(dot)
}

fn direction_from(satellite_ecef_km: &[f64; 3], pos: GeoPos) -> [f64; 3] {
    let p = pos.ecef_km();
    [
        p[0] - satellite_ecef_km[0],
        p[1] - satellite_ecef_km[1],
        p[2] - satellite_ecef_km[2],
    ]
}

// ---------- Beam layouts ----------

/// One beam: an identifier, a footprint centre, and a footprint radius.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpec {
    pub id: usize,
    pub center: GeoPos,
    pub radius_km: f64,
}

impl BeamSpec {
    /// Footprint area, km^2.
    pub fn area_km2(&self) -> f64 {
        std::f64::consts::PI * self.radius_km * self.radius_km
    }
}

/// A full beam layout plus the satellite serving it.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamLayout {
    pub beams: Vec<BeamSpec>,
    pub satellite_longitude_deg: f64,
}

impl BeamLayout {
    pub fn n_beams(&self) -> usize {
        self.beams.len()
    }

    /// Satellite position for this layout, Earth-centred km.
    pub fn satellite_ecef_km(&self) -> [f64; 3] {
        satellite_ecef_km(self.satellite_longitude_deg)
    }

    /// Off-axis angle subtended at the satellite by a beam's edge,
    /// measured to the footprint point one radius due north of the centre.
    pub fn beam_edge_angle_rad(&self, beam_index: usize) -> f64 {
        let sat = self.satellite_ecef_km();
        let beam = &self.beams[beam_index];
        let edge = tangent_point(beam.center, 0.0, beam.radius_km);
        off_axis_angle_rad(&sat, beam.center, edge)
    }

    /// Checks structural and visibility invariants.
    pub fn validate(&self) -> Result<()> {
        if self.beams.is_empty() {
            return Err(Error::Geometry("layout has no beams".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for beam in &self.beams {
            if !seen.insert(beam.id) {
                return Err(Error::Geometry(format!("duplicate beam id {}", beam.id)));
            }
            if !(beam.radius_km > 0.0) {
                return Err(Error::Geometry(format!(
                    "beam {} has non-positive radius {}",
                    beam.id, beam.radius_km
                )));
            }
            if beam.center.lat_deg.abs() >= 90.0 {
                return Err(Error::Geometry(format!(
                    "beam {} centre latitude {} is out of range",
                    beam.id, beam.center.lat_deg
                )));
            }
            if !is_visible(beam.center, self.satellite_longitude_deg) {
                return Err(Error::Geometry(format!(
                    "beam {} centre ({}, {}) is not visible from the satellite at {} deg E",
                    beam.id, beam.center.lat_deg, beam.center.lon_deg, self.satellite_longitude_deg
                )));
            }
        }
        Ok(())
    }
}

/// Number of beams in a hexagonal layout with `n_rings` rings around the
/// central beam: 1 + 3 n (n + 1).
pub fn hex_beam_count(n_rings: usize) -> usize {
    1 + 3 * n_rings * (n_rings + 1)
}

/// Generates a hexagonal beam grid centred at `center`.
///
/// Beam centres form a hexagonal lattice with spacing `sqrt(3) * radius`,
/// placed on the centre beam's tangent plane. Ordering is the centre beam
/// first, then ring by ring walking each ring counter-clockwise from its
/// easternmost cell; ids follow that order starting at 0.
pub fn generate_hex_layout(
    n_rings: usize,
    beam_radius_km: f64,
    center: GeoPos,
    satellite_longitude_deg: f64,
) -> Result<BeamLayout> {
    if !(beam_radius_km > 0.0) {
        return Err(Error::Geometry(format!(
            "beam radius must be positive, got {beam_radius_km}"
        )));
    }
    let spacing = 3.0_f64.sqrt() * beam_radius_km;
    // Axial hex coordinates (q, r) -> tangent plane km.
    let to_xy = |q: i64, r: i64| {
        let x = spacing * (q as f64 + r as f64 / 2.0);
        let y = spacing * (3.0_f64.sqrt() / 2.0) * r as f64;
        (x, y)
    };
    let mut cells: Vec<(i64, i64)> = vec![(0, 0)];
    // Walk each ring: start at (k, 0), take k steps in each of the six
    // axial directions; the walk closes back on the start.
    const DIRS: [(i64, i64); 6] = [(-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1)];
    for k in 1..=n_rings as i64 {
        let (mut q, mut r) = (k, 0);
        for (dq, dr) in DIRS {
            for _ in 0..k {
                cells.push((q, r));
                q += dq;
                r += dr;
            }
        }
    }
    let beams = cells
        .iter()
        .enumerate()
        .map(|(id, &(q, r))| {
            let (x, y) = to_xy(q, r);
            BeamSpec {
                id,
                center: tangent_point(center, x, y),
                radius_km: beam_radius_km,
            }
        })
        .collect();
    let layout = BeamLayout {
        beams,
        satellite_longitude_deg,
    };
    layout.validate()?;
    Ok(layout)
}

/// Loads a beam layout from a CSV file with header
/// `id,lat_deg,lon_deg,radius_km`.
pub fn load_beam_layout(
    path: &std::path::Path,
    satellite_longitude_deg: f64,
) -> Result<BeamLayout> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path_str.clone(),
        line: 1,
        msg: "file is empty".into(),
    })?;
    let header_fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if header_fields != ["id", "lat_deg", "lon_deg", "radius_km"] {
        return Err(Error::Parse {
            path: path_str,
            line: 1,
            msg: format!("expected header `id,lat_deg,lon_deg,radius_km`, got `{header}`"),
        });
    }
    let mut beams = Vec::new();
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
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: line_no,
                msg: format!("invalid {what} `{s}`"),
            })
        };
        let id: usize = fields[0].parse().map_err(|_| Error::Parse {
            path: path_str.clone(),
            line: line_no,
            msg: format!("invalid id `{}`", fields[0]),
        })?;
        if beams.iter().any(|b: &BeamSpec| b.id == id) {
            return Err(Error::Parse {
                path: path_str,
                line: line_no,
                msg: format!("duplicate beam id {id}"),
            });
        }
        beams.push(BeamSpec {
            id,
            center: GeoPos::new(
                parse_f(fields[1], "latitude")?,
                parse_f(fields[2], "longitude")?,
            ),
            radius_km: parse_f(fields[3], "radius")?,
        });
    }
    let layout = BeamLayout {
        beams,
        satellite_longitude_deg,
    };
    layout.validate()?;
    Ok(layout)
}

// ---------- User deployment ----------

/// How a fractional expected user count becomes an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Round half away from zero (2.5 -> 3).
    Round,
    /// Truncate (2.5 -> 2).
    Floor,
}

impl std::fmt::Display for Rounding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rounding::Round => "round",
            Rounding::Floor => "floor",
        })
    }
}

impl std::str::FromStr for Rounding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "round" => Ok(Rounding::Round),
            "floor" => Ok(Rounding::Floor),
            other => Err(Error::config(format!(
                "unknown rounding mode `{other}` (expected round|floor)"
            ))),
        }
    }
}

/// Integer user count for an expected value `x = density * area`.
pub fn user_count(x: f64, rounding: Rounding) -> usize {
    let n = match rounding {
        Rounding::Round => x.round(),
        Rounding::Floor => x.floor(),
    };
    n.max(0.0) as usize
}

/// Users dropped into each beam footprint; `per_beam[i]` aligns with
/// `layout.beams[i]` and indexes users locally within that beam.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDeployment {
    pub per_beam: Vec<Vec<GeoPos>>,
    pub warnings: Vec<String>,
}

impl UserDeployment {
    pub fn total_users(&self) -> usize {
        self.per_beam.iter().map(Vec::len).sum()
    }
}

/// Deploys `round(density * area)` users uniformly over each beam's
/// circular footprint.
///
/// Draw order is fixed — beams in layout order, users in sequence, and per
/// user a radius draw then an angle draw — so a given RNG state always
/// produces the same deployment.
pub fn deploy_users(
    layout: &BeamLayout,
    density_per_km2: f64,
    rounding: Rounding,
    rng: &mut impl Rng,
) -> Result<UserDeployment> {
    if !(density_per_km2 > 0.0) {
        return Err(Error::config(format!(
            "user density must be positive, got {density_per_km2}"
        )));
    }
    let mut per_beam = Vec::with_capacity(layout.n_beams());
    let mut warnings = Vec::new();
    for beam in &layout.beams {
        let n = user_count(density_per_km2 * beam.area_km2(), rounding);
        if n == 0 {
            warnings.push(format!(
                "beam {}: density {} over {:.1} km^2 rounds to 0 users; beam will be skipped",
                beam.id,
                density_per_km2,
                beam.area_km2()
            ));
        }
        let mut users = Vec::with_capacity(n);
        for _ in 0..n {
            // Uniform over a disk: radius scales with sqrt of a uniform.
            let radial = beam.radius_km * rng.gen::<f64>().sqrt();
            let angle = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            users.push(tangent_point(
                beam.center,
                radial * angle.cos(),
                radial * angle.sin(),
            ));
        }
        per_beam.push(users);
    }
    Ok(UserDeployment { per_beam, warnings })
}
