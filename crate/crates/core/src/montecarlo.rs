//! Monte Carlo harness tying the pieces together: configuration, the
//! per-iteration pipeline (deploy users, synthesise channels, cluster,
//! schedule frames, precode, rate), parallel execution over iterations,
//! and aggregation into serialisable rate reports.
//!
//! # Determinism
//!
//! Every random quantity comes from a counter-based derivation of the
//! master seed. Iteration seeds depend only on the master seed, the user
//! density, and the iteration index — deliberately *not* on the
//! clustering strategy, cluster size, feature space, power, or precoder —
//! so a sweep across those axes sees identical user drops, phase draws,
//! and schedules, and differences between strategies are paired rather
//! than resampled. Within an iteration, deployment, phase, clustering,
//! and scheduling each use an independent derived stream, so a strategy
//! that draws fewer clustering randoms cannot shift anyone else's draws.
//! Results are bit-identical for a given seed regardless of thread count.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::channel::{
    load_gain_table, synthesize_channels, AntennaPattern, ChannelVector, LinkBudgetParams,
    PhaseScope,
};
use crate::clustering::{
    cluster_kmeanspp, cluster_maxdist, cluster_random, cluster_upperbound, feature_vectors,
    kmeans_cluster_count, Algorithm, FeatureMetric, KmeansParams, Partition,
};
use crate::error::{Error, Result};
use crate::geometry::{
    deploy_users, generate_hex_layout, load_beam_layout, BeamLayout, GeoPos, Rounding,
};
use crate::linalg::CMat;
use crate::link::{
    cluster_link_result, load_modcod_table, ClusterLinkResult, ModCodTable, RateModel,
};
use crate::math::{derive_seed, mean, std_population, std_sample};
use crate::precoding::{
    equivalent_channel, mmse_precoder, normalize_per_feed, normalize_total_power, user_sinr,
    Precoder,
};

// ---------- Configuration ----------

/// Beam layout inputs: either a generated hexagonal grid or a CSV file
/// (the file wins when both are given).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    /// Rings of beams around the central one (0 gives a single beam).
    pub rings: usize,
    pub beam_radius_km: f64,
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
    /// Optional beam list file overriding the generated grid.
    pub csv: Option<PathBuf>,
    pub satellite_lon_deg: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            rings: 1,
            beam_radius_km: 100.0,
            center_lat_deg: 45.0,
            center_lon_deg: 10.0,
            csv: None,
            satellite_lon_deg: 30.0,
        }
    }
}

/// User deployment controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeployConfig {
    /// Users per square kilometre of footprint.
    pub density_per_km2: f64,
    pub rounding: Rounding,
}

impl Default for DeployConfig {
    fn default() -> Self {
        DeployConfig {
            density_per_km2: 1.25e-3,
            rounding: Rounding::Round,
        }
    }
}

/// Clustering controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    /// Target cluster size (exact for the fixed-size strategies, average
    /// for k-means).
    pub size: usize,
    pub algorithm: Algorithm,
    pub metric: FeatureMetric,
    /// Scale every feature dimension to unit variance per beam.
    pub normalize: bool,
    pub kmeans_tol: f64,
    pub kmeans_max_iter: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let kp = KmeansParams::default();
        ClusterConfig {
            size: 4,
            algorithm: Algorithm::MaxDist,
            metric: FeatureMetric::Channel,
            normalize: false,
            kmeans_tol: kp.tol,
            kmeans_max_iter: kp.max_iter,
        }
    }
}

impl ClusterConfig {
    pub fn kmeans_params(&self) -> KmeansParams {
        KmeansParams {
            tol: self.kmeans_tol,
            max_iter: self.kmeans_max_iter,
        }
    }
}

/// Channel synthesis controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    /// Peak feed gain of the tapered pattern, dBi.
    pub peak_gain_dbi: f64,
    /// Optional sampled gain table overriding the tapered pattern.
    pub gain_csv: Option<PathBuf>,
    /// Random phase offset drawn per feed or per beam.
    pub phase_per: PhaseScope,
    pub link: LinkBudgetParams,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            peak_gain_dbi: 52.0,
            gain_csv: None,
            phase_per: PhaseScope::Feed,
            link: LinkBudgetParams::default(),
        }
    }
}

/// Transmit power and precoding controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerConfig {
    /// Per-feed saturation power, watts.
    pub psat_w: f64,
    pub precoder: Precoder,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            psat_w: 90.0,
            precoder: Precoder::Pac,
        }
    }
}

/// Rate model controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RateConfig {
    pub model: RateModel,
    /// Optional threshold ladder file overriding the built-in one.
    pub modcod_csv: Option<PathBuf>,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            model: RateModel::ModCod,
            modcod_csv: None,
        }
    }
}

/// Run-level controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Count repeat servings of an already-served cluster in the
    /// aggregates instead of only flagging them.
    pub include_reserves: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            iterations: 50,
            seed: 42,
            include_reserves: false,
        }
    }
}

/// Optional sweep axes; `None` means "use the scalar setting".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub algorithm: Option<Vec<Algorithm>>,
    pub metric: Option<Vec<FeatureMetric>>,
    pub precoder: Option<Vec<Precoder>>,
    pub k: Option<Vec<usize>>,
    pub rho: Option<Vec<f64>>,
    pub psat: Option<Vec<f64>>,
}

/// Complete simulation configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub layout: LayoutConfig,
    pub deploy: DeployConfig,
    pub cluster: ClusterConfig,
    pub channel: ChannelConfig,
    pub power: PowerConfig,
    pub rate: RateConfig,
    pub run: RunConfig,
    pub sweep: SweepConfig,
}

impl SimConfig {
    /// Checks every scalar setting and sweep axis for validity.
    pub fn validate(&self) -> Result<()> {
        if self.layout.csv.is_none() && !(self.layout.beam_radius_km > 0.0) {
            return Err(Error::config(format!(
                "beam radius must be positive, got {}",
                self.layout.beam_radius_km
            )));
        }
        if !(self.deploy.density_per_km2 > 0.0) {
            return Err(Error::config(format!(
                "user density must be positive, got {}",
                self.deploy.density_per_km2
            )));
        }
        if self.cluster.size == 0 {
            return Err(Error::config("cluster size must be at least 1"));
        }
        if !(self.cluster.kmeans_tol >= 0.0) {
            return Err(Error::config(format!(
                "k-means tolerance must be non-negative, got {}",
                self.cluster.kmeans_tol
            )));
        }
        if self.cluster.kmeans_max_iter == 0 {
            return Err(Error::config("k-means iteration cap must be at least 1"));
        }
        self.channel.link.validate()?;
        if !(self.power.psat_w > 0.0) {
            return Err(Error::config(format!(
                "transmit power must be positive, got {}",
                self.power.psat_w
            )));
        }
        if self.run.iterations == 0 {
            return Err(Error::config("at least one iteration is required"));
        }
        fn check_axis<T>(name: &str, axis: &Option<Vec<T>>) -> Result<()> {
            if let Some(values) = axis {
                if values.is_empty() {
                    return Err(Error::config(format!("sweep axis `{name}` is empty")));
                }
            }
            Ok(())
        }
        check_axis("algorithm", &self.sweep.algorithm)?;
        check_axis("metric", &self.sweep.metric)?;
        check_axis("precoder", &self.sweep.precoder)?;
        check_axis("k", &self.sweep.k)?;
        check_axis("rho", &self.sweep.rho)?;
        check_axis("psat", &self.sweep.psat)?;
        if let Some(ks) = &self.sweep.k {
            if ks.contains(&0) {
                return Err(Error::config("sweep axis `k` contains 0"));
            }
        }
        if let Some(rhos) = &self.sweep.rho {
            if let Some(bad) = rhos.iter().find(|&&r| !(r > 0.0)) {
                return Err(Error::config(format!(
                    "sweep axis `rho` contains non-positive value {bad}"
                )));
            }
        }
        if let Some(ps) = &self.sweep.psat {
            if let Some(bad) = ps.iter().find(|&&p| !(p > 0.0)) {
                return Err(Error::config(format!(
                    "sweep axis `psat` contains non-positive value {bad}"
                )));
            }
        }
        Ok(())
    }
}

// ---------- Context ----------

/// Immutable per-run assets built once from the configuration: the beam
/// layout, the feed pattern, and the rate ladder.
#[derive(Debug, Clone)]
pub struct SimContext {
    pub layout: BeamLayout,
    pub pattern: AntennaPattern,
    pub table: ModCodTable,
}

impl SimContext {
    pub fn build(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = match &cfg.layout.csv {
            Some(path) => load_beam_layout(path, cfg.layout.satellite_lon_deg)?,
            None => generate_hex_layout(
                cfg.layout.rings,
                cfg.layout.beam_radius_km,
                GeoPos::new(cfg.layout.center_lat_deg, cfg.layout.center_lon_deg),
                cfg.layout.satellite_lon_deg,
            )?,
        };
        let pattern = match &cfg.channel.gain_csv {
            Some(path) => {
                let table = load_gain_table(path)?;
                let ids = table.feed_ids();
                for beam in &layout.beams {
                    if !ids.contains(&beam.id) {
                        return Err(Error::config(format!(
                            "gain table has no samples for beam {}",
                            beam.id
                        )));
                    }
                }
                AntennaPattern::Table(table)
            }
            None => AntennaPattern::tapered(cfg.channel.peak_gain_dbi),
        };
        let table = match &cfg.rate.modcod_csv {
            Some(path) => load_modcod_table(path)?,
            None => ModCodTable::builtin_dvbs2x(),
        };
        Ok(SimContext {
            layout,
            pattern,
            table,
        })
    }
}

// ---------- Grid points ----------

/// One point of the sweep grid: the axes a result row is keyed by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub algorithm: Algorithm,
    pub metric: FeatureMetric,
    pub precoder: Precoder,
    pub k: usize,
    /// Users per square kilometre.
    pub rho: f64,
    /// Per-feed power, watts.
    pub psat: f64,
}

impl GridPoint {
    /// The scalar settings as a single grid point.
    pub fn from_config(cfg: &SimConfig) -> Self {
        GridPoint {
            algorithm: cfg.cluster.algorithm,
            metric: cfg.cluster.metric,
            precoder: cfg.power.precoder,
            k: cfg.cluster.size,
            rho: cfg.deploy.density_per_km2,
            psat: cfg.power.psat_w,
        }
    }
}

/// Expands the sweep axes into grid points; axes left unset collapse to
/// the scalar setting. Nesting order (outermost first): algorithm,
/// metric, precoder, k, rho, psat — matching the summary CSV column
/// order.
pub fn expand_grid(cfg: &SimConfig) -> Vec<GridPoint> {
    let algorithms = cfg
        .sweep
        .algorithm
        .clone()
        .unwrap_or_else(|| vec![cfg.cluster.algorithm]);
    let metrics = cfg
        .sweep
        .metric
        .clone()
        .unwrap_or_else(|| vec![cfg.cluster.metric]);
    let precoders = cfg
        .sweep
        .precoder
        .clone()
        .unwrap_or_else(|| vec![cfg.power.precoder]);
    let ks = cfg
        .sweep
        .k
        .clone()
        .unwrap_or_else(|| vec![cfg.cluster.size]);
    let rhos = cfg
        .sweep
        .rho
        .clone()
        .unwrap_or_else(|| vec![cfg.deploy.density_per_km2]);
    let psats = cfg
        .sweep
        .psat
        .clone()
        .unwrap_or_else(|| vec![cfg.power.psat_w]);
    let mut points = Vec::new();
    for &algorithm in &algorithms {
        for &metric in &metrics {
            for &precoder in &precoders {
                for &k in &ks {
                    for &rho in &rhos {
                        for &psat in &psats {
                            points.push(GridPoint {
                                algorithm,
                                metric,
                                precoder,
                                k,
                                rho,
                                psat,
                            });
                        }
                    }
                }
            }
        }
    }
    points
}

/// Seed of one Monte Carlo iteration. Only the master seed, the density,
/// and the iteration index enter — see the module documentation for why
/// the other axes are excluded.
pub fn iteration_seed(master_seed: u64, rho: f64, iteration: usize) -> u64 {
    derive_seed(master_seed, &[rho.to_bits(), iteration as u64])
}

// ---------- Per-iteration pipeline ----------

/// One served cluster in one frame of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub iteration: usize,
    pub frame: usize,
    /// True when the beam had run out of fresh clusters and repeated an
    /// already-served one to keep transmitting.
    pub reserve: bool,
    pub link: ClusterLinkResult,
}

/// Everything one iteration produced.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    pub records: Vec<ClusterRecord>,
    pub warnings: Vec<String>,
}

/// Decides which cluster each beam serves in each frame.
///
/// The frame count is the largest per-beam cluster count. A beam serves
/// its clusters in creation order, one per frame; once it runs out it
/// repeats a uniformly random already-served cluster (flagged), and a
/// beam with no clusters stays silent. Random draws happen in frame
/// order, beams ascending within a frame, so the sequence is reproducible.
pub fn schedule_frames(
    cluster_counts: &[usize],
    rng: &mut impl Rng,
) -> Vec<Vec<Option<(usize, bool)>>> {
    let frames = cluster_counts.iter().copied().max().unwrap_or(0);
    let mut schedule = Vec::with_capacity(frames);
    for frame in 0..frames {
        let mut row = Vec::with_capacity(cluster_counts.len());
        for &count in cluster_counts {
            row.push(if count == 0 {
                None
            } else if frame < count {
                Some((frame, false))
            } else {
                Some((rng.gen_range(0..count), true))
            });
        }
        schedule.push(row);
    }
    schedule
}

/// Precoding weights (feeds x active streams) for one frame.
fn frame_weights(
    h_eq: &CMat,
    active_beams: &[usize],
    n_feeds: usize,
    precoder: Precoder,
    psat: f64,
) -> Result<CMat> {
    match precoder {
        Precoder::None => {
            // Each active beam's feed carries that beam's stream directly.
            let mut w = CMat::zeros(n_feeds, active_beams.len());
            for (s, &b) in active_beams.iter().enumerate() {
                w[(b, s)] = Complex64::new(1.0, 0.0);
            }
            Ok(w)
        }
        Precoder::Pac => {
            let alpha = vec![1.0 / psat; n_feeds];
            normalize_per_feed(&mmse_precoder(h_eq, &alpha)?)
        }
        Precoder::Spc => {
            let alpha = vec![1.0 / psat; n_feeds];
            normalize_total_power(&mmse_precoder(h_eq, &alpha)?)
        }
    }
}

/// Runs one full Monte Carlo iteration at one grid point.
pub fn run_iteration(
    ctx: &SimContext,
    cfg: &SimConfig,
    point: &GridPoint,
    iteration: usize,
    iter_seed: u64,
) -> Result<IterationResult> {
    // Independent sub-streams so strategies that consume different
    // amounts of clustering randomness still share drops and phases.
    let mut deploy_rng = ChaCha8Rng::seed_from_u64(derive_seed(iter_seed, &[1]));
    let mut phase_rng = ChaCha8Rng::seed_from_u64(derive_seed(iter_seed, &[2]));
    let mut cluster_rng = ChaCha8Rng::seed_from_u64(derive_seed(iter_seed, &[3]));
    let mut schedule_rng = ChaCha8Rng::seed_from_u64(derive_seed(iter_seed, &[4]));

    let deployment = deploy_users(&ctx.layout, point.rho, cfg.deploy.rounding, &mut deploy_rng)?;
    let warnings = deployment.warnings.clone();
    let channels: Vec<Vec<ChannelVector>> = synthesize_channels(
        &ctx.layout,
        &deployment,
        &ctx.pattern,
        &cfg.channel.link,
        cfg.channel.phase_per,
        &mut phase_rng,
    )?;

    // Cluster each beam's users independently (beams in index order).
    let mut partitions: Vec<Option<Partition>> = Vec::with_capacity(ctx.layout.n_beams());
    for (b, users) in deployment.per_beam.iter().enumerate() {
        if users.is_empty() {
            partitions.push(None);
            continue;
        }
        let features = feature_vectors(
            point.metric,
            users,
            ctx.layout.beams[b].center,
            &channels[b],
            cfg.cluster.normalize,
        );
        let partition = match point.algorithm {
            Algorithm::UpperBound => cluster_upperbound(&features, point.k, &mut cluster_rng)?,
            Algorithm::Random => cluster_random(&features, point.k, &mut cluster_rng)?,
            Algorithm::MaxDist => cluster_maxdist(&features, point.k)?,
            Algorithm::KMeansPP => cluster_kmeanspp(
                &features,
                kmeans_cluster_count(users.len(), point.k),
                cfg.cluster.kmeans_params(),
                &mut cluster_rng,
            )?,
        };
        partition.validate(users.len())?;
        partitions.push(Some(partition));
    }

    let cluster_counts: Vec<usize> = partitions
        .iter()
        .map(|p| p.as_ref().map_or(0, Partition::n_clusters))
        .collect();
    let schedule = schedule_frames(&cluster_counts, &mut schedule_rng);

    let n_feeds = ctx.layout.n_beams();
    let mut records = Vec::new();
    for (frame, serving) in schedule.iter().enumerate() {
        let active: Vec<(usize, usize, bool)> = serving
            .iter()
            .enumerate()
            .filter_map(|(b, s)| s.map(|(c, reserve)| (b, c, reserve)))
            .collect();
        if active.is_empty() {
            continue;
        }
        // Equivalent channel per served cluster, one row per active stream.
        let mut h_rows = Vec::with_capacity(active.len());
        for &(b, c, _) in &active {
            let members = &partitions[b].as_ref().unwrap().clusters[c];
            let rows: Vec<&[Complex64]> =
                members.iter().map(|&u| channels[b][u].as_slice()).collect();
            h_rows.push(equivalent_channel(&rows)?);
        }
        let h_eq = CMat::from_rows(&h_rows);
        let active_beams: Vec<usize> = active.iter().map(|&(b, _, _)| b).collect();
        let w = frame_weights(&h_eq, &active_beams, n_feeds, point.precoder, point.psat)?;
        for (stream, &(b, c, reserve)) in active.iter().enumerate() {
            let members = &partitions[b].as_ref().unwrap().clusters[c];
            let member_sinrs: Vec<f64> = members
                .iter()
                .map(|&u| user_sinr(&channels[b][u], &w, stream, point.psat))
                .collect();
            let link = cluster_link_result(b, c, &member_sinrs, cfg.rate.model, &ctx.table)?;
            records.push(ClusterRecord {
                iteration,
                frame,
                reserve,
                link,
            });
        }
    }
    Ok(IterationResult { records, warnings })
}

// ---------- Aggregation ----------

/// Aggregated results of all iterations at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub point: GridPoint,
    pub seed: u64,
    pub iterations: usize,
    /// Whether repeat servings were counted in the aggregates.
    pub include_reserves: bool,
    /// Mean served rate over every counted cluster serving, bit/s/Hz.
    pub avg_rate_bps_hz: f64,
    /// Standard error of the per-iteration mean rates.
    pub stderr_rate_bps_hz: f64,
    /// Fraction of counted servings whose worst member was in outage.
    pub outage_fraction: f64,
    pub clusters_counted: usize,
    /// Repeat servings seen (always tracked, counted only on request).
    pub reserve_clusters: usize,
    pub per_iteration_mean_rate: Vec<f64>,
    /// Worst-member SINRs of all counted servings, dB, ascending.
    pub serving_sinr_db: Vec<f64>,
    /// Spread (population standard deviation) of the per-member SINR
    /// losses of each counted serving, dB, ascending.
    pub sigma_delta_gamma_db: Vec<f64>,
    /// Served cluster size -> number of counted servings.
    pub cluster_size_hist: BTreeMap<usize, usize>,
    pub warnings: Vec<String>,
    /// Every per-cluster record of every iteration, kept only on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Vec<ClusterRecord>>,
}

/// Folds iteration results into a [`RateReport`].
pub fn aggregate(
    point: GridPoint,
    seed: u64,
    include_reserves: bool,
    iterations: &[IterationResult],
) -> Result<RateReport> {
    let mut pooled_rates = Vec::new();
    let mut per_iteration_mean_rate = Vec::new();
    let mut serving_sinr_db = Vec::new();
    let mut sigma_delta_gamma_db = Vec::new();
    let mut cluster_size_hist = BTreeMap::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut outages = 0usize;
    let mut reserve_clusters = 0usize;
    for result in iterations {
        for w in &result.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
        let mut iter_rates = Vec::new();
        for record in &result.records {
            if record.reserve {
                reserve_clusters += 1;
                if !include_reserves {
                    continue;
                }
            }
            iter_rates.push(record.link.rate_bps_hz);
            pooled_rates.push(record.link.rate_bps_hz);
            serving_sinr_db.push(record.link.serving_sinr_db);
            sigma_delta_gamma_db.push(std_population(&record.link.delta_db));
            *cluster_size_hist
                .entry(record.link.member_sinr_db.len())
                .or_insert(0usize) += 1;
            if record.link.outage {
                outages += 1;
            }
        }
        if !iter_rates.is_empty() {
            per_iteration_mean_rate.push(mean(&iter_rates));
        }
    }
    let clusters_counted = pooled_rates.len();
    if clusters_counted == 0 {
        return Err(Error::numerical(
            "no clusters were served — every beam rounded to zero users",
        ));
    }
    serving_sinr_db.sort_by(f64::total_cmp);
    sigma_delta_gamma_db.sort_by(f64::total_cmp);
    let stderr_rate_bps_hz =
        std_sample(&per_iteration_mean_rate) / (per_iteration_mean_rate.len() as f64).sqrt();
    Ok(RateReport {
        point,
        seed,
        iterations: iterations.len(),
        include_reserves,
        avg_rate_bps_hz: mean(&pooled_rates),
        stderr_rate_bps_hz,
        outage_fraction: outages as f64 / clusters_counted as f64,
        clusters_counted,
        reserve_clusters,
        per_iteration_mean_rate,
        serving_sinr_db,
        sigma_delta_gamma_db,
        cluster_size_hist,
        warnings,
        detail: None,
    })
}

// ---------- Grid execution ----------

/// Runs all iterations at one grid point and aggregates them.
///
/// `jobs` is the worker thread count (0 uses all cores, 1 runs serially);
/// iteration results are collected in index order, so the report is
/// bit-identical for every `jobs` value.
pub fn run_grid_point(
    ctx: &SimContext,
    cfg: &SimConfig,
    point: &GridPoint,
    jobs: usize,
) -> Result<RateReport> {
    run_grid_point_detail(ctx, cfg, point, jobs, false)
}

/// [`run_grid_point`] that can also keep every per-cluster record (in
/// iteration order) in the report's `detail` field.
pub fn run_grid_point_detail(
    ctx: &SimContext,
    cfg: &SimConfig,
    point: &GridPoint,
    jobs: usize,
    collect_detail: bool,
) -> Result<RateReport> {
    let run_one = |iteration: usize| -> Result<IterationResult> {
        let seed = iteration_seed(cfg.run.seed, point.rho, iteration);
        run_iteration(ctx, cfg, point, iteration, seed)
    };
    let results: Vec<IterationResult> = if jobs == 1 {
        (0..cfg.run.iterations)
            .map(run_one)
            .collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::numerical(format!("could not build thread pool: {e}")))?;
        pool.install(|| {
            (0..cfg.run.iterations)
                .into_par_iter()
                .map(run_one)
                .collect::<Result<Vec<_>>>()
        })?
    };
    let mut report = aggregate(
        point.clone(),
        cfg.run.seed,
        cfg.run.include_reserves,
        &results,
    )?;
    if collect_detail {
        report.detail = Some(
            results
                .iter()
                .flat_map(|r| r.records.iter().cloned())
                .collect(),
        );
    }
    Ok(report)
}

// ---------- Report output ----------

/// Header of the sweep summary CSV.
pub const SUMMARY_CSV_HEADER: &str = "algorithm,metric,precoder,K,rho,psat,avg_rate,outage_frac";

/// One summary CSV row; floats use the shortest representation that
/// parses back to the same value.
pub fn summary_csv_row(report: &RateReport) -> String {
    let p = &report.point;
    format!(
        "{},{},{},{},{},{},{},{}",
        p.algorithm,
        p.metric,
        p.precoder,
        p.k,
        p.rho,
        p.psat,
        report.avg_rate_bps_hz,
        report.outage_fraction
    )
}

/// File stem identifying a grid point, e.g.
/// `point_maxdist_channel_pac_k4_rho0.00125_psat90`.
pub fn point_file_stem(point: &GridPoint) -> String {
    format!(
        "point_{}_{}_{}_k{}_rho{}_psat{}",
        point.algorithm, point.metric, point.precoder, point.k, point.rho, point.psat
    )
}

/// Single-run result file contents: the configuration that produced a
/// report, echoed back, plus the report itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub config: SimConfig,
    pub report: RateReport,
}

/// Sweep result file contents: the configuration echo plus one report
/// per grid point in execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub config: SimConfig,
    pub reports: Vec<RateReport>,
}

/// Pretty JSON encoding of any result value, newline-terminated.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::numerical(format!("could not encode result: {e}")))
}

/// Decodes a value written by [`to_json_pretty`].
pub fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| Error::numerical(format!("could not decode result: {e}")))
}

/// Pretty JSON encoding of a report, newline-terminated.
pub fn report_to_json(report: &RateReport) -> Result<String> {
    to_json_pretty(report)
}

/// Decodes a report written by [`report_to_json`].
pub fn report_from_json(text: &str) -> Result<RateReport> {
    from_json(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SimConfig {
        let mut cfg = SimConfig::default();
        // 7 beams of 30 km radius; density 1.25e-3 over pi*30^2 km^2
        // rounds to 4 users per beam.
        cfg.layout.beam_radius_km = 30.0;
        cfg.cluster.size = 2;
        cfg.run.iterations = 3;
        cfg
    }

    #[test]
    fn schedule_serves_fresh_clusters_then_repeats() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let schedule = schedule_frames(&[3, 2], &mut rng);
        assert_eq!(schedule.len(), 3, "frame count is the max cluster count");
        assert_eq!(schedule[0], vec![Some((0, false)), Some((0, false))]);
        assert_eq!(schedule[1], vec![Some((1, false)), Some((1, false))]);
        assert_eq!(schedule[2][0], Some((2, false)));
        let (repeat, reserve) = schedule[2][1].unwrap();
        assert!(reserve, "exhausted beam must be flagged as repeating");
        assert!(repeat < 2, "repeat must pick an already-served cluster");
    }

    #[test]
    fn schedule_keeps_userless_beams_silent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let schedule = schedule_frames(&[0, 2], &mut rng);
        assert_eq!(schedule.len(), 2);
        for frame in &schedule {
            assert_eq!(frame[0], None);
        }
        assert!(schedule_frames(&[], &mut rng).is_empty());
    }

    #[test]
    fn schedule_repeat_draws_happen_in_frame_then_beam_order() {
        let counts = [1, 3, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let schedule = schedule_frames(&counts, &mut rng);
        // Replay the same stream manually: frame 1 draws for beam 0, frame
        // 2 draws for beam 0 then beam 2.
        let mut replay = ChaCha8Rng::seed_from_u64(123);
        let expected = [
            (1usize, 0usize, replay.gen_range(0..1usize)),
            (2, 0, replay.gen_range(0..1)),
            (2, 2, replay.gen_range(0..2)),
        ];
        for (frame, beam, cluster) in expected {
            assert_eq!(schedule[frame][beam], Some((cluster, true)));
        }
        assert_eq!(schedule[1][1], Some((1, false)));
        assert_eq!(schedule[2][1], Some((2, false)));
    }

    fn synthetic_record(iteration: usize, rate: f64, reserve: bool, outage: bool) -> ClusterRecord {
        ClusterRecord {
            iteration,
            frame: 0,
            reserve,
            link: ClusterLinkResult {
                beam: 0,
                cluster_index: 0,
                member_sinr_db: vec![10.0, 13.0],
                serving_sinr_db: 10.0,
                delta_db: vec![0.0, 3.0],
                rate_bps_hz: rate,
                outage,
            },
        }
    }

    fn point() -> GridPoint {
        GridPoint {
            algorithm: Algorithm::MaxDist,
            metric: FeatureMetric::Channel,
            precoder: Precoder::Pac,
            k: 4,
            rho: 1.25e-3,
            psat: 90.0,
        }
    }

    #[test]
    fn aggregate_pools_rates_and_skips_repeats_by_default() {
        let iterations = vec![
            IterationResult {
                records: vec![
                    synthetic_record(0, 1.0, false, false),
                    synthetic_record(0, 100.0, true, false),
                ],
                warnings: vec!["w".into()],
            },
            IterationResult {
                records: vec![synthetic_record(1, 3.0, false, true)],
                warnings: vec!["w".into()],
            },
        ];
        let r = aggregate(point(), 7, false, &iterations).unwrap();
        assert_eq!(r.avg_rate_bps_hz, 2.0);
        assert_eq!(r.clusters_counted, 2);
        assert_eq!(r.reserve_clusters, 1);
        assert_eq!(r.outage_fraction, 0.5);
        assert_eq!(r.per_iteration_mean_rate, vec![1.0, 3.0]);
        // Means {1, 3}: sample std sqrt(2), over sqrt(2) iterations -> 1.
        assert!((r.stderr_rate_bps_hz - 1.0).abs() < 1e-12);
        // The loss spread of {0, 3} dB is 1.5 dB for every record.
        assert!(r
            .sigma_delta_gamma_db
            .iter()
            .all(|&s| (s - 1.5).abs() < 1e-12));
        assert_eq!(r.cluster_size_hist.get(&2), Some(&2));
        assert_eq!(r.warnings, vec!["w".to_string()], "warnings deduplicate");

        let with = aggregate(point(), 7, true, &iterations).unwrap();
        assert_eq!(with.clusters_counted, 3);
        assert_eq!(with.reserve_clusters, 1);
        assert!((with.avg_rate_bps_hz - 104.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn grid_expansion_and_iteration_seeds() {
        let mut cfg = SimConfig::default();
        cfg.sweep.k = Some(vec![2, 4]);
        cfg.sweep.rho = Some(vec![1.0e-3, 2.0e-3]);
        let grid = expand_grid(&cfg);
        let kr: Vec<(usize, f64)> = grid.iter().map(|p| (p.k, p.rho)).collect();
        assert_eq!(
            kr,
            vec![(2, 1.0e-3), (2, 2.0e-3), (4, 1.0e-3), (4, 2.0e-3)],
            "k is the outer axis, rho the inner"
        );
        assert!(grid.iter().all(|p| p.algorithm == Algorithm::MaxDist));

        assert_eq!(
            iteration_seed(5, 1.0e-3, 3),
            iteration_seed(5, 1.0e-3, 3),
            "seeds are a pure function"
        );
        assert_ne!(iteration_seed(5, 1.0e-3, 3), iteration_seed(5, 1.0e-3, 4));
        assert_ne!(iteration_seed(5, 1.0e-3, 3), iteration_seed(5, 2.0e-3, 3));
        assert_ne!(iteration_seed(5, 1.0e-3, 3), iteration_seed(6, 1.0e-3, 3));
    }

    #[test]
    fn pipeline_serves_every_cluster_of_every_beam_exactly_once() {
        let cfg = small_config();
        let ctx = SimContext::build(&cfg).unwrap();
        let point = GridPoint::from_config(&cfg);
        let result = run_iteration(
            &ctx,
            &cfg,
            &point,
            0,
            iteration_seed(cfg.run.seed, point.rho, 0),
        )
        .unwrap();
        // 4 users per beam at size 2 -> 2 clusters per beam, 2 frames, no
        // repeats needed.
        assert!(result.records.iter().all(|r| !r.reserve));
        for beam in 0..ctx.layout.n_beams() {
            let mut indices: Vec<usize> = result
                .records
                .iter()
                .filter(|r| r.link.beam == beam)
                .map(|r| r.link.cluster_index)
                .collect();
            indices.sort_unstable();
            assert_eq!(indices, vec![0, 1], "beam {beam} cluster coverage");
            let served_users: usize = result
                .records
                .iter()
                .filter(|r| r.link.beam == beam)
                .map(|r| r.link.member_sinr_db.len())
                .sum();
            assert_eq!(served_users, 4, "beam {beam} must serve all its users");
        }
    }

    #[test]
    fn repeats_appear_when_cluster_counts_differ_and_are_flagged() {
        // Force unequal cluster counts with k-means (variable sizes are
        // possible) by using a layout whose beams get different user
        // counts: a CSV layout with two beam radii.
        let mut cfg = SimConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("beams.csv");
        std::fs::write(
            &path,
            "id,lat_deg,lon_deg,radius_km\n0,45.0,10.0,30.0\n1,45.0,12.5,45.0\n",
        )
        .unwrap();
        cfg.layout.csv = Some(path);
        cfg.cluster.size = 2;
        cfg.run.iterations = 1;
        let ctx = SimContext::build(&cfg).unwrap();
        let point = GridPoint::from_config(&cfg);
        // Beam 0 has 4 users (2 clusters), beam 1 has round(1.25e-3 *
        // pi*45^2) = 8 users (4 clusters): two repeat servings for beam 0.
        let result = run_iteration(&ctx, &cfg, &point, 0, 99).unwrap();
        let repeats: Vec<&ClusterRecord> = result.records.iter().filter(|r| r.reserve).collect();
        assert_eq!(repeats.len(), 2);
        assert!(repeats.iter().all(|r| r.link.beam == 0));
        assert!(repeats.iter().all(|r| r.frame >= 2));
        let report = aggregate(point, cfg.run.seed, false, &[result]).unwrap();
        assert_eq!(report.reserve_clusters, 2);
        assert_eq!(report.clusters_counted, 6);
    }

    #[test]
    fn parallel_and_serial_runs_are_bit_identical() {
        let cfg = small_config();
        let ctx = SimContext::build(&cfg).unwrap();
        let point = GridPoint::from_config(&cfg);
        let serial = run_grid_point(&ctx, &cfg, &point, 1).unwrap();
        let parallel = run_grid_point(&ctx, &cfg, &point, 4).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn fixed_size_strategies_coincide_at_unit_cluster_size() {
        // At size 1 every covering strategy degenerates to one user per
        // cluster in index order, so the reports agree bit for bit.
        let mut cfg = small_config();
        cfg.cluster.size = 1;
        let ctx = SimContext::build(&cfg).unwrap();
        let mut reports = Vec::new();
        for algorithm in [Algorithm::Random, Algorithm::MaxDist, Algorithm::KMeansPP] {
            cfg.cluster.algorithm = algorithm;
            let point = GridPoint::from_config(&cfg);
            reports.push(run_grid_point(&ctx, &cfg, &point, 1).unwrap());
        }
        assert_eq!(reports[0].avg_rate_bps_hz, reports[1].avg_rate_bps_hz);
        assert_eq!(reports[1].avg_rate_bps_hz, reports[2].avg_rate_bps_hz);
        assert_eq!(reports[0].serving_sinr_db, reports[1].serving_sinr_db);
        assert_eq!(reports[1].serving_sinr_db, reports[2].serving_sinr_db);
    }

    #[test]
    fn config_validation_rejects_bad_settings() {
        let mut cfg = SimConfig::default();
        cfg.cluster.size = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.deploy.density_per_km2 = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.power.psat_w = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.run.iterations = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.sweep.k = Some(vec![]);
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.sweep.rho = Some(vec![1.0e-3, 0.0]);
        assert!(cfg.validate().is_err());
        assert!(SimConfig::default().validate().is_ok());
    }

    #[test]
    fn csv_row_and_file_stem_formatting() {
        let mut report = aggregate(
            point(),
            7,
            false,
            &[IterationResult {
                records: vec![synthetic_record(0, 2.5, false, false)],
                warnings: vec![],
            }],
        )
        .unwrap();
        report.outage_fraction = 0.125;
        assert_eq!(
            summary_csv_row(&report),
            "maxdist,channel,pac,4,0.00125,90,2.5,0.125"
        );
        assert_eq!(
            point_file_stem(&report.point),
            "point_maxdist_channel_pac_k4_rho0.00125_psat90"
        );
    }

    #[test]
    fn report_json_round_trips() {
        let cfg = small_config();
        let ctx = SimContext::build(&cfg).unwrap();
        let point = GridPoint::from_config(&cfg);
        let report = run_grid_point(&ctx, &cfg, &point, 1).unwrap();
        let json = report_to_json(&report).unwrap();
        let back = report_from_json(&json).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn context_rejects_gain_tables_missing_a_beam() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gains.csv");
        std::fs::write(
            &path,
            "feed_id,lat_deg,lon_deg,gain_dbi\n0,40,5,52\n0,40,15,52\n0,50,5,52\n0,50,15,52\n",
        )
        .unwrap();
        let mut cfg = SimConfig::default();
        cfg.channel.gain_csv = Some(path);
        match SimContext::build(&cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("no samples for beam")),
            other => panic!("expected a config error, got {other:?}"),
        }
    }
}
