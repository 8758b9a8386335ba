//! The `emit-plots` subcommand: turns per-point result JSON into flat
//! CSV tables that plotting tools can consume directly.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use beamcast_core::clustering::FeatureMetric;
use beamcast_core::error::{Error, Result};
use beamcast_core::montecarlo::{report_from_json, GridPoint, RateReport};

use crate::EmitPlotsArgs;

/// Cells identifying a grid point, in summary-CSV column order.
fn point_cells(point: &GridPoint) -> String {
    format!(
        "{},{},{},{},{},{}",
        point.algorithm, point.metric, point.precoder, point.k, point.rho, point.psat
    )
}

fn point_sort_key(point: &GridPoint) -> (String, String, String, usize, f64, f64) {
    (
        point.algorithm.to_string(),
        point.metric.to_string(),
        point.precoder.to_string(),
        point.k,
        point.rho,
        point.psat,
    )
}

/// Loads every `point_*.json` in the directory, sorted into a stable
/// (algorithm, metric, precoder, K, rho, psat) order.
pub fn collect_reports(dir: &Path) -> Result<Vec<RateReport>> {
    let mut reports = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("point_") && name.ends_with(".json") {
            let text = fs::read_to_string(entry.path())?;
            let report = report_from_json(&text)
                .map_err(|err| Error::config(format!("{}: {err}", entry.path().display())))?;
            reports.push(report);
        }
    }
    if reports.is_empty() {
        return Err(Error::Io(io::Error::new(
            io::ErrorKind::NotFound,
            format!("no point_*.json result files in {}", dir.display()),
        )));
    }
    reports.sort_by(|a, b| {
        let (aa, am, ap, ak, ar, aw) = point_sort_key(&a.point);
        let (ba, bm, bp, bk, br, bw) = point_sort_key(&b.point);
        (aa, am, ap, ak)
            .cmp(&(ba, bm, bp, bk))
            .then(ar.total_cmp(&br))
            .then(aw.total_cmp(&bw))
    });
    Ok(reports)
}

/// Average rate against cluster size, one row per grid point.
pub fn rate_vs_k_csv(reports: &[RateReport]) -> String {
    let mut text =
        String::from("algorithm,metric,precoder,K,rho,psat,avg_rate_bps_hz,stderr_rate_bps_hz\n");
    for report in reports {
        text.push_str(&format!(
            "{},{},{}\n",
            point_cells(&report.point),
            report.avg_rate_bps_hz,
            report.stderr_rate_bps_hz
        ));
    }
    text
}

/// Pairs channel-feature and position-feature runs of the same
/// algorithm, precoder, K, rho, and psat, and reports the rate ratio
/// (channel over position). Returns the CSV (if any pairs exist) and
/// warnings for points left unpaired.
pub fn rate_gain_csv(reports: &[RateReport]) -> (Option<String>, Vec<String>) {
    // Positive floats compare in bit order, so to_bits keys sort numerically.
    let mut pairs: BTreeMap<(String, String, usize, u64, u64), (Option<f64>, Option<f64>)> =
        BTreeMap::new();
    for report in reports {
        let point = &report.point;
        let key = (
            point.algorithm.to_string(),
            point.precoder.to_string(),
            point.k,
            point.rho.to_bits(),
            point.psat.to_bits(),
        );
        let slot = pairs.entry(key).or_default();
        match point.metric {
            FeatureMetric::Channel => slot.0 = Some(report.avg_rate_bps_hz),
            FeatureMetric::Euclidean => slot.1 = Some(report.avg_rate_bps_hz),
        }
    }

    let mut text =
        String::from("algorithm,precoder,K,rho,psat,avg_rate_channel,avg_rate_euclidean,gain\n");
    let mut rows = 0usize;
    let mut warnings = Vec::new();
    for ((algorithm, precoder, k, rho_bits, psat_bits), pair) in pairs {
        let rho = f64::from_bits(rho_bits);
        let psat = f64::from_bits(psat_bits);
        match pair {
            (Some(channel), Some(euclidean)) => {
                text.push_str(&format!(
                    "{algorithm},{precoder},{k},{rho},{psat},{channel},{euclidean},{}\n",
                    channel / euclidean
                ));
                rows += 1;
            }
            (got_channel, _) => {
                let have = if got_channel.is_some() {
                    "channel"
                } else {
                    "euclidean"
                };
                warnings.push(format!(
                    "no metric pair for {algorithm}/{precoder}/K={k}/rho={rho}/psat={psat} \
                     (only the {have} run is present); skipping it in the gain table"
                ));
            }
        }
    }
    if rows == 0 {
        (None, warnings)
    } else {
        (Some(text), warnings)
    }
}

/// Long-format empirical CDF over one sorted sample vector per report.
/// `value_name` is the CSV column header for the sample values.
pub fn cdf_csv(
    reports: &[RateReport],
    value_name: &str,
    samples: impl Fn(&RateReport) -> &[f64],
) -> String {
    let mut text = format!("algorithm,metric,precoder,K,rho,psat,{value_name},cdf\n");
    for report in reports {
        let values = samples(report);
        let n = values.len();
        for (i, value) in values.iter().enumerate() {
            text.push_str(&format!(
                "{},{},{}\n",
                point_cells(&report.point),
                value,
                (i + 1) as f64 / n as f64
            ));
        }
    }
    text
}

/// Cluster-size histogram rows with per-point fractions.
pub fn cluster_size_hist_csv(reports: &[RateReport]) -> String {
    let mut text = String::from("algorithm,metric,precoder,K,rho,psat,size,count,fraction\n");
    for report in reports {
        let total: usize = report.cluster_size_hist.values().sum();
        for (size, count) in &report.cluster_size_hist {
            text.push_str(&format!(
                "{},{size},{count},{}\n",
                point_cells(&report.point),
                *count as f64 / total as f64
            ));
        }
    }
    text
}

/// `emit-plots`: read simulation results from the output directory and
/// write the plot tables next to them.
pub fn cmd_emit_plots(args: &EmitPlotsArgs) -> Result<()> {
    let reports = collect_reports(&args.out)?;

    let mut written = vec![("rate_vs_k.csv", rate_vs_k_csv(&reports))];
    let (gain, warnings) = rate_gain_csv(&reports);
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    match gain {
        Some(text) => written.push(("rate_gain.csv", text)),
        None => {
            eprintln!("warning: no channel/position metric pairs found; rate_gain.csv not written")
        }
    }
    written.push((
        "cdf_serving_sinr.csv",
        cdf_csv(&reports, "serving_sinr_db", |r| &r.serving_sinr_db),
    ));
    written.push((
        "cdf_sinr_loss_spread.csv",
        cdf_csv(&reports, "sigma_delta_gamma_db", |r| {
            &r.sigma_delta_gamma_db
        }),
    ));
    written.push(("cluster_size_hist.csv", cluster_size_hist_csv(&reports)));

    for (name, text) in &written {
        fs::write(args.out.join(name), text)?;
        println!("wrote {}", args.out.join(name).display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use beamcast_core::clustering::Algorithm;
    use beamcast_core::precoding::Precoder;
    use std::collections::BTreeMap as Hist;

    fn report(metric: FeatureMetric, k: usize, avg: f64) -> RateReport {
        RateReport {
            point: GridPoint {
                algorithm: Algorithm::MaxDist,
                metric,
                precoder: Precoder::Pac,
                k,
                rho: 1.25e-3,
                psat: 90.0,
            },
            seed: 42,
            iterations: 2,
            include_reserves: false,
            avg_rate_bps_hz: avg,
            stderr_rate_bps_hz: 0.1,
            outage_fraction: 0.0,
            clusters_counted: 4,
            reserve_clusters: 0,
            per_iteration_mean_rate: vec![avg, avg],
            serving_sinr_db: vec![3.0, 5.0, 9.0],
            sigma_delta_gamma_db: vec![0.5, 1.5],
            cluster_size_hist: Hist::from([(2, 3), (1, 1)]),
            warnings: vec![],
            detail: None,
        }
    }

    #[test]
    fn gain_table_pairs_metrics_and_reports_the_ratio() {
        let reports = vec![
            report(FeatureMetric::Channel, 4, 3.0),
            report(FeatureMetric::Euclidean, 4, 2.0),
        ];
        let (csv, warnings) = rate_gain_csv(&reports);
        assert!(warnings.is_empty(), "{warnings:?}");
        let csv = csv.unwrap();
        let row = csv.lines().nth(1).unwrap();
        assert_eq!(row, "maxdist,pac,4,0.00125,90,3,2,1.5");
    }

    #[test]
    fn unpaired_points_are_skipped_with_a_warning() {
        let reports = vec![report(FeatureMetric::Channel, 4, 3.0)];
        let (csv, warnings) = rate_gain_csv(&reports);
        assert!(csv.is_none());
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("K=4"), "{}", warnings[0]);
    }

    #[test]
    fn cdf_rows_step_up_to_one() {
        let reports = vec![report(FeatureMetric::Channel, 4, 3.0)];
        let csv = cdf_csv(&reports, "serving_sinr_db", |r| &r.serving_sinr_db);
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].ends_with(",3,0.3333333333333333"), "{}", rows[0]);
        assert!(rows[2].ends_with(",9,1"), "{}", rows[2]);
    }

    #[test]
    fn histogram_rows_carry_fractions() {
        let reports = vec![report(FeatureMetric::Channel, 4, 3.0)];
        let csv = cluster_size_hist_csv(&reports);
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].ends_with(",1,1,0.25"), "{}", rows[0]);
        assert!(rows[1].ends_with(",2,3,0.75"), "{}", rows[1]);
    }
}
