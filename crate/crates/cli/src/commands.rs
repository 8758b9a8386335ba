//! The `run`, `sweep`, and `validate` subcommands.

use std::fs;
use std::path::Path;

use beamcast_core::error::{Error, Result};
use beamcast_core::montecarlo::{
    expand_grid, point_file_stem, report_from_json, run_grid_point_detail, summary_csv_row,
    to_json_pretty, GridPoint, RateReport, RunDocument, SimContext, SweepDocument,
    SUMMARY_CSV_HEADER,
};

use crate::config::load_config;
use crate::{ConfigArgs, RunArgs, SweepArgs};

fn load(args: &ConfigArgs) -> Result<(beamcast_core::SimConfig, SimContext)> {
    let cfg = load_config(args.config.as_deref(), &args.set, args.seed)?;
    let ctx = SimContext::build(&cfg)?;
    Ok((cfg, ctx))
}

/// `validate`: exercise the same loading path as `run`/`sweep` and stop
/// before any simulation; succeeds exactly when they would start.
pub fn cmd_validate(args: &ConfigArgs) -> Result<()> {
    let (cfg, ctx) = load(args)?;
    println!(
        "configuration OK: {} beams, {} grid point(s), {} iteration(s)",
        ctx.layout.n_beams(),
        expand_grid(&cfg).len(),
        cfg.run.iterations
    );
    Ok(())
}

fn write_summary_csv(path: &Path, reports: &[RateReport]) -> Result<()> {
    let mut text = String::from(SUMMARY_CSV_HEADER);
    text.push('\n');
    for report in reports {
        text.push_str(&summary_csv_row(report));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn print_report_line(report: &RateReport) {
    println!(
        "{}: avg rate {:.4} bit/s/Hz (stderr {:.4}), outage {:.2}%, {} clusters / {} iterations",
        point_file_stem(&report.point),
        report.avg_rate_bps_hz,
        report.stderr_rate_bps_hz,
        100.0 * report.outage_fraction,
        report.clusters_counted,
        report.iterations
    );
}

/// `run`: simulate the single grid point described by the configuration
/// and write `run.json`, `run.csv`, and a per-point JSON file.
pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let (cfg, ctx) = load(&args.config)?;
    let point = GridPoint::from_config(&cfg);
    let report = run_grid_point_detail(&ctx, &cfg, &point, args.jobs, args.detail)?;

    fs::create_dir_all(&args.out)?;
    let point_path = args.out.join(format!("{}.json", point_file_stem(&point)));
    fs::write(&point_path, to_json_pretty(&report)?)?;
    let document = RunDocument {
        config: cfg,
        report,
    };
    fs::write(args.out.join("run.json"), to_json_pretty(&document)?)?;
    write_summary_csv(
        &args.out.join("run.csv"),
        std::slice::from_ref(&document.report),
    )?;

    print_report_line(&document.report);
    println!("results written to {}", args.out.display());
    Ok(())
}

/// `sweep`: simulate every grid point, writing one JSON per point as it
/// completes, then the combined `sweep.csv` and `sweep.json`. With
/// `--resume`, points whose JSON already parses are reused instead of
/// recomputed. Failed points are reported and skipped; the first
/// failure decides the exit status after the survivors are written.
pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let (cfg, ctx) = load(&args.config)?;
    let points = expand_grid(&cfg);

    fs::create_dir_all(&args.out)?;
    let mut reports = Vec::with_capacity(points.len());
    let mut failures: Vec<(String, Error)> = Vec::new();
    for point in &points {
        let stem = point_file_stem(point);
        let path = args.out.join(format!("{stem}.json"));
        if args.resume && path.exists() {
            match fs::read_to_string(&path)
                .map_err(Error::from)
                .and_then(|text| report_from_json(&text))
            {
                Ok(report) => {
                    println!("{stem}: reusing existing result");
                    reports.push(report);
                    continue;
                }
                Err(err) => {
                    eprintln!(
                        "{stem}: could not reuse {}: {err}; recomputing",
                        path.display()
                    );
                }
            }
        }
        match run_grid_point_detail(&ctx, &cfg, point, args.jobs, args.detail) {
            Ok(report) => {
                fs::write(&path, to_json_pretty(&report)?)?;
                print_report_line(&report);
                reports.push(report);
            }
            Err(err) => {
                eprintln!("{stem}: failed: {err}");
                failures.push((stem, err));
            }
        }
    }

    write_summary_csv(&args.out.join("sweep.csv"), &reports)?;
    let document = SweepDocument {
        config: cfg,
        reports,
    };
    fs::write(args.out.join("sweep.json"), to_json_pretty(&document)?)?;
    println!(
        "{} of {} grid point(s) written to {}",
        document.reports.len(),
        points.len(),
        args.out.display()
    );

    match failures.into_iter().next() {
        None => Ok(()),
        Some((stem, err)) => Err(Error::numerical(format!("grid point {stem} failed: {err}"))),
    }
}
