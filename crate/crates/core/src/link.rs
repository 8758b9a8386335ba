//! Link layer: mapping a cluster's worst-member SINR to a served rate,
//! either through a modulation-and-coding threshold ladder or through the
//! Shannon bound, plus the per-cluster result record the Monte Carlo
//! harness aggregates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::lin_to_db;

/// How SINR becomes spectral efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    /// Step function over a threshold ladder; SINR below the first rung
    /// is an outage with rate zero.
    ModCod,
    /// `log2(1 + SINR)`, the idealised continuous rate.
    Shannon,
}

impl std::fmt::Display for RateModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateModel::ModCod => "modcod",
            RateModel::Shannon => "shannon",
        })
    }
}

impl std::str::FromStr for RateModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modcod" => Ok(RateModel::ModCod),
            "shannon" => Ok(RateModel::Shannon),
            other => Err(Error::config(format!(
                "unknown rate model `{other}` (expected modcod|shannon)"
            ))),
        }
    }
}

// ---------- Threshold ladder ----------

/// Decoding thresholds (Es/N0, dB) and spectral efficiencies (bit/s/Hz),
/// strictly increasing in both columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ModCodTable {
    rows: Vec<(f64, f64)>,
}

/// Published AWGN decoding thresholds (ideal Es/N0, normal frames) for
/// the DVB-S2/S2X modulation-and-coding set, QPSK 1/4 through 32APSK
/// 9/10. Rows dominated by a cheaper threshold with higher efficiency
/// are omitted so the ladder stays strictly monotone. Engineering data
/// shipped as the default; override with a table file when modelling
/// different hardware.
const DVB_S2X_NORMAL_FRAME: [(f64, f64); 23] = [
    (-2.35, 0.490243), // QPSK 1/4
    (-1.24, 0.656448), // QPSK 1/3
    (-0.30, 0.789412), // QPSK 2/5
    (1.00, 0.988858),  // QPSK 1/2
    (2.23, 1.188304),  // QPSK 3/5
    (3.10, 1.322253),  // QPSK 2/3
    (4.03, 1.487473),  // QPSK 3/4
    (4.68, 1.587196),  // QPSK 4/5
    (5.18, 1.654663),  // QPSK 5/6
    (5.50, 1.779991),  // 8PSK 3/5
    (6.62, 1.980636),  // 8PSK 2/3
    (7.91, 2.228124),  // 8PSK 3/4
    (9.35, 2.478562),  // 8PSK 5/6
    (10.69, 2.646012), // 8PSK 8/9
    (10.98, 2.679207), // 8PSK 9/10
    (11.03, 3.165623), // 16APSK 4/5
    (11.61, 3.300184), // 16APSK 5/6
    (12.89, 3.523143), // 16APSK 8/9
    (13.13, 3.567342), // 16APSK 9/10
    (13.64, 3.951571), // 32APSK 4/5
    (14.28, 4.119540), // 32APSK 5/6
    (15.69, 4.397854), // 32APSK 8/9
    (16.05, 4.453027), // 32APSK 9/10
];

impl ModCodTable {
    /// The built-in DVB-S2X normal-frame ladder.
    pub fn builtin_dvbs2x() -> Self {
        ModCodTable {
            rows: DVB_S2X_NORMAL_FRAME.to_vec(),
        }
    }

    /// Builds a table after checking both columns are strictly increasing
    /// and every efficiency is positive.
    pub fn from_rows(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::config("rate table has no rows"));
        }
        for (i, &(t, e)) in rows.iter().enumerate() {
            if !(e > 0.0) {
                return Err(Error::config(format!(
                    "rate table row {i}: efficiency {e} must be positive"
                )));
            }
            if i > 0 {
                let (pt, pe) = rows[i - 1];
                if !(t > pt) {
                    return Err(Error::config(format!(
                        "rate table row {i}: threshold {t} dB does not increase over {pt} dB"
                    )));
                }
                if !(e > pe) {
                    return Err(Error::config(format!(
                        "rate table row {i}: efficiency {e} does not increase over {pe}"
                    )));
                }
            }
        }
        Ok(ModCodTable { rows })
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    /// Efficiency of the highest rung whose threshold is at or below the
    /// given SINR (dB); `None` below the first rung (outage).
    pub fn efficiency_for_db(&self, sinr_db: f64) -> Option<f64> {
        let idx = self.rows.partition_point(|&(t, _)| t <= sinr_db);
        if idx == 0 {
            None
        } else {
            Some(self.rows[idx - 1].1)
        }
    }
}

/// Loads a threshold ladder from a CSV file with header
/// `es_n0_dB,spectral_efficiency`.
pub fn load_modcod_table(path: &std::path::Path) -> Result<ModCodTable> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path_str.clone(),
        line: 1,
        msg: "file is empty".into(),
    })?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields != ["es_n0_dB", "spectral_efficiency"] {
        return Err(Error::Parse {
            path: path_str,
            line: 1,
            msg: format!("expected header `es_n0_dB,spectral_efficiency`, got `{header}`"),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path_str,
                line: line_no,
                msg: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: line_no,
                msg: format!("invalid {what} `{s}`"),
            })
        };
        rows.push((
            parse_f(fields[0], "threshold")?,
            parse_f(fields[1], "efficiency")?,
        ));
    }
    ModCodTable::from_rows(rows).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

// ---------- Rates ----------

/// Shannon spectral efficiency `log2(1 + SINR)` for a linear SINR.
pub fn shannon_rate(sinr_lin: f64) -> f64 {
    (1.0 + sinr_lin).log2()
}

/// Served rate for a linear SINR under the chosen model. The ladder is
/// only consulted in ModCod mode.
pub fn rate_for_sinr(model: RateModel, table: &ModCodTable, sinr_lin: f64) -> f64 {
    match model {
        RateModel::Shannon => shannon_rate(sinr_lin),
        RateModel::ModCod => table.efficiency_for_db(lin_to_db(sinr_lin)).unwrap_or(0.0),
    }
}

// ---------- Per-cluster results ----------

/// Link outcome of one served cluster in one frame: the multicast rate is
/// set by the worst member, and every other member's SINR surplus is a
/// loss relative to what it could have decoded alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLinkResult {
    pub beam: usize,
    pub cluster_index: usize,
    pub member_sinr_db: Vec<f64>,
    /// Worst member SINR — the one the transmission is dimensioned for.
    pub serving_sinr_db: f64,
    /// Per-member SINR losses `member - serving` in dB, all >= 0.
    pub delta_db: Vec<f64>,
    /// Served spectral efficiency, bit/s/Hz.
    pub rate_bps_hz: f64,
    /// True when the serving SINR fell below the first ladder rung.
    pub outage: bool,
}

/// Evaluates one served cluster from its members' linear SINRs.
pub fn cluster_link_result(
    beam: usize,
    cluster_index: usize,
    member_sinrs_lin: &[f64],
    model: RateModel,
    table: &ModCodTable,
) -> Result<ClusterLinkResult> {
    if member_sinrs_lin.is_empty() {
        return Err(Error::numerical(
            "cluster with no members has no link result",
        ));
    }
    let serving_lin = member_sinrs_lin
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let member_sinr_db: Vec<f64> = member_sinrs_lin.iter().map(|&s| lin_to_db(s)).collect();
    let serving_sinr_db = lin_to_db(serving_lin);
    // A cluster whose worst SINR is exactly zero would give indeterminate
    // dB differences; report zero loss instead of NaN in that corner.
    let delta_db: Vec<f64> = member_sinr_db
        .iter()
        .map(|&m| {
            if serving_lin > 0.0 {
                m - serving_sinr_db
            } else {
                0.0
            }
        })
        .collect();
    let rate_bps_hz = rate_for_sinr(model, table, serving_lin);
    let outage = model == RateModel::ModCod && rate_bps_hz == 0.0;
    Ok(ClusterLinkResult {
        beam,
        cluster_index,
        member_sinr_db,
        serving_sinr_db,
        delta_db,
        rate_bps_hz,
        outage,
    })
}
