//! Experiment execution: deterministic dispatch from a config to CSV rows,
//! kind-specific JSON reports, and a manifest written last.
//!
//! Seeding is counter-based: every row comes from a substream labeled by
//! experiment, trial, and functional, so rows are reproducible one at a time
//! and the parallel schedule cannot leak into the output. Trials are the
//! partition unit; results are collected in trial order.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::entropy;
use crate::functionals;
use crate::isoconst::{self, SampleMode};
use crate::linalg::dot;
use crate::measures::{Distribution, DistributionKind, MomentBody, SampleCache};
use crate::polytope::VertexPolytope;
use crate::rng::Stream;
use crate::stats;

use super::config::{hex, Budgets, ExperimentConfig, ExperimentKind};
use super::csvio::{self, Row};
use super::manifest::{now_unix_ms, OutputDigest, RunManifest, ARTIFACT_VERSION};
use super::HarnessError;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "POLYLAB_OUT";

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Overrides the config's output directory.
    pub out_dir: Option<PathBuf>,
    pub seed_override: Option<u64>,
    /// 0 means the rayon default.
    pub workers: usize,
    pub budget_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { out_dir: None, seed_override: None, workers: 1, budget_scale: 1.0 }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: RunManifest,
    pub row_count: usize,
}

fn out_root_from(cli: Option<&Path>, config: Option<&Path>, env: Option<PathBuf>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| config.map(Path::to_path_buf))
        .or(env)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

pub fn resolve_out_root(config: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    out_root_from(
        opts.out_dir.as_deref(),
        config.out_dir.as_deref(),
        std::env::var_os(OUT_ENV).map(PathBuf::from),
    )
}

/// Runs one experiment end to end. The effective config (seed override and
/// budget scaling applied) is written into the run directory alongside the
/// rows, so a run can be reproduced from its own artifacts.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    config.validate()?;
    if !(opts.budget_scale.is_finite() && opts.budget_scale > 0.0) {
        return Err(HarnessError::Config {
            field: "budget_scale",
            message: format!("must be positive and finite, got {}", opts.budget_scale),
        });
    }
    let mut effective = config.clone();
    effective.seed = opts.seed_override.unwrap_or(config.seed);
    effective.budgets = config.budgets.scaled(opts.budget_scale);
    effective.out_dir = None;
    let digest = effective.digest();

    let root = resolve_out_root(config, opts);
    let dir = root.join(format!("{}-{}-s{}", effective.experiment.name(), &digest[..12], effective.seed));
    fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;

    let started = now_unix_ms();
    let (rows, report) = dispatch(&effective, opts.workers)?;

    let mut outputs = Vec::new();
    let config_path = dir.join("config.json");
    let config_text = effective.canonical_json();
    fs::write(&config_path, config_text.as_bytes()).map_err(HarnessError::io(&config_path))?;
    outputs.push(OutputDigest {
        file: "config.json".into(),
        sha256: hex(&Sha256::digest(config_text.as_bytes())),
        rows: 0,
    });

    let csv_path = dir.join("rows.csv");
    let csv_digest = csvio::write_rows(&csv_path, &rows)?;
    outputs.push(OutputDigest { file: "rows.csv".into(), sha256: csv_digest, rows: rows.len() as u64 });

    if let Some(report) = report {
        let report_path = dir.join("report.json");
        let text = serde_json::to_string_pretty(&report)?;
        fs::write(&report_path, text.as_bytes()).map_err(HarnessError::io(&report_path))?;
        outputs.push(OutputDigest {
            file: "report.json".into(),
            sha256: hex(&Sha256::digest(text.as_bytes())),
            rows: 0,
        });
    }

    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION,
        experiment: effective.experiment.name().into(),
        config_sha256: digest,
        seed: effective.seed,
        workers: opts.workers,
        budget_scale: opts.budget_scale,
        started_unix_ms: started,
        finished_unix_ms: now_unix_ms(),
        outputs,
    };
    let manifest_path = manifest.write_atomic(&dir)?;
    Ok(RunReport { row_count: rows.len(), csv_path, manifest_path, manifest, dir })
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("rayon pool construction");
    pool.install(f)
}

/// Indexed parallel map collected in job order, so output order does not
/// depend on the schedule.
fn par_map<T, F>(workers: usize, jobs: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync + Send,
{
    with_pool(workers, || (0..jobs).into_par_iter().map(f).collect())
}

fn dispatch(config: &ExperimentConfig, workers: usize) -> Result<(Vec<Row>, Option<Value>), HarnessError> {
    match config.experiment {
        ExperimentKind::Widths => trial_experiment(config, workers, widths_trial),
        ExperimentKind::Quermass => trial_experiment(config, workers, quermass_trial),
        ExperimentKind::Radii => trial_experiment(config, workers, radii_trial),
        ExperimentKind::Sections => trial_experiment(config, workers, sections_trial),
        ExperimentKind::Entropy => trial_experiment(config, workers, entropy_trial),
        ExperimentKind::Isoconst => trial_experiment(config, workers, isoconst_trial),
        ExperimentKind::Tails => trial_experiment(config, workers, tails_trial),
        ExperimentKind::Inclusion => {
            let (rows, report) = inclusion_study(
                config.distribution,
                config.n,
                config.vertex_counts[0],
                &config.q_list,
                config.trials,
                &config.budgets,
                config.seed,
                workers,
            )?;
            Ok((rows, Some(serde_json::to_value(report)?)))
        }
        ExperimentKind::Scaling => {
            let (rows, report) = scaling_study(
                config.distribution,
                config.n,
                &config.vertex_counts,
                &config.k_list,
                config.trials,
                &config.budgets,
                config.seed,
                workers,
            )?;
            Ok((rows, Some(serde_json::to_value(report)?)))
        }
    }
}

type TrialOut = (Vec<Row>, Option<Value>);

fn trial_experiment(
    config: &ExperimentConfig,
    workers: usize,
    trial_fn: fn(&ExperimentConfig, u64, Stream) -> Result<TrialOut, HarnessError>,
) -> Result<(Vec<Row>, Option<Value>), HarnessError> {
    let outs = par_map(workers, config.trials, |t| {
        let stream = Stream::root(config.seed).child_named(config.experiment.name()).child(t as u64);
        trial_fn(config, t as u64, stream)
    })?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (r, report) in outs {
        rows.extend(r);
        if let Some(v) = report {
            reports.push(v);
        }
    }
    let report = if reports.is_empty() { None } else { Some(Value::Array(reports)) };
    Ok((rows, report))
}

fn draw_body(config: &ExperimentConfig, count: usize, stream: Stream) -> Result<VertexPolytope, HarnessError> {
    let dist = Distribution::new(config.distribution, config.n)?;
    Ok(VertexPolytope::from_distribution(&dist, count, stream.child_named("gens"))?)
}

fn widths_trial(config: &ExperimentConfig, trial: u64, stream: Stream) -> Result<TrialOut, HarnessError> {
    let body = draw_body(config, config.vertex_counts[0], stream)?;
    let b = &config.budgets;
    let mut rows = Vec::new();
    let ws = stream.child_named("width");
    let w = functionals::mean_width(&body, b.sphere, ws);
    rows.push(
        Row::new(trial, "mean_width", w.value).stderr(w.standard_error).budget(b.sphere).seed(ws.id()),
    );
    for &p in &config.q_list {
        let ps = stream.child_named("p_width").child(p.to_bits());
        let est = functionals::p_mean_width(&body, p, b.sphere, ps)?;
        rows.push(
            Row::new(trial, "p_mean_width", est.value)
                .q(p)
                .stderr(est.standard_error)
                .budget(b.sphere)
                .seed(ps.id()),
        );
    }
    Ok((rows, None))
}

fn quermass_trial(config: &ExperimentConfig, trial: u64, stream: Stream) -> Result<TrialOut, HarnessError> {
    let body = draw_body(config, config.vertex_counts[0], stream)?;
    let b = &config.budgets;
    let qs = stream.child_named("quermass");
    let profile = functionals::quermass_profile(&body, &config.k_list, b.subspaces, qs)?;
    let rows = profile
        .into_iter()
        .map(|(k, est)| {
            Row::new(trial, "quermass", est.value)
                .k(k)
                .stderr(est.standard_error)
                .budget(b.subspaces)
                .seed(qs.id())
        })
        .collect();
    Ok((rows, None))
}

fn radii_trial(config: &ExperimentConfig, trial: u64, stream: Stream) -> Result<TrialOut, HarnessError> {
    let body = draw_body(config, config.vertex_counts[0], stream)?;
    let b = &config.budgets;
    let mut rows = vec![Row::new(trial, "radius", functionals::radius(&body)).seed(stream.id())];
    for &k in &config.k_list {
        let os = stream.child_named("outer").child(k as u64);
        let outer = functionals::outer_radius_rk(&body, k, b.subspaces, os)?;
        rows.push(
            Row::new(trial, "outer_radius", outer.value)
                .k(k)
                .stderr(outer.standard_error)
                .budget(b.subspaces)
                .seed(os.id()),
        );
        let is = stream.child_named("inner").child(k as u64);
        let inner = functionals::inner_mean_dk(&body, k, b.subspaces, b.directions, is)?;
        rows.push(
            Row::new(trial, "section_radius", inner.value)
                .k(k)
                .stderr(inner.standard_error)
                .budget(b.subspaces * b.directions)
                .seed(is.id()),
        );
    }
    let ms = stream.child_named("gauge_mean");
    let m = functionals::m_value(&body, b.sphere, ms)?;
    rows.push(Row::new(trial, "gauge_mean", m.value).stderr(m.standard_error).budget(b.sphere).seed(ms.id()));
    Ok((rows, None))
}

fn sections_trial(config: &ExperimentConfig, trial: u64, stream: Stream) -> Result<TrialOut, HarnessError> {
    let body = draw_body(config, config.vertex_counts[0], stream)?;
    let b = &config.budgets;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &k in &config.k_list {
        let ss = stream.child_named("sections").child(k as u64);
        let report = entropy::section_lower_bound_check(&body, k, b.subspaces, b.directions, ss)?;
        rows.push(
            Row::new(trial, "section_min_radius", report.min_radius)
                .k(k)
                .budget(b.subspaces * b.directions)
                .seed(ss.id()),
        );
        rows.push(
            Row::new(trial, "section_min_ratio", report.min_ratio)
                .k(k)
                .budget(b.subspaces * b.directions)
                .seed(ss.id()),
        );
        reports.push(serde_json::to_value(&report)?);
    }
    Ok((rows, Some(Value::Array(reports))))
}

fn entropy_trial(config: &ExperimentConfig, trial: u64, stream: Stream) -> Result<TrialOut, HarnessError> {
    let body = draw_body(config, config.vertex_counts[0], stream)?;
    let b = &config.budgets;
    let es = stream.child_named("entropy");
    let (by_ball, by_body) = entropy::regularity_profile(&body, &config.t_list, b.pool, es)?;
    let mut rows = Vec::new();
    for report in [&by_ball, &by_body] {
        let name = format!("log_cover_{}", report.direction);
        for row in &report.rows {
            rows.push(
                Row::new(trial, name.clone(), row.log_count).t(row.t).budget(b.pool).seed(es.id()),
            );
        }
        rows.push(
            Row::new(trial, format!("fitted_c_{}", report.direction), report.fitted_c)
                .budget(b.pool)
                .seed(es.id()),
        );
    }
    let report = serde_json::json!({
        "trial": trial,
        "body_by_ball": serde_json::to_value(&by_ball)?,
        "ball_by_body": serde_json::to_value(&by_body)?,
    });
    Ok((rows, Some(report)))
}

/// Exact facet enumeration drives the isotropic-constant experiment up to
/// this dimension; beyond it the runner switches to hit-and-run moments.
const EXACT_ISO_DIM: usize = 6;

fn isoconst_trial(config: &ExperimentConfig, trial: u64, stream: Stream) -> Result<TrialOut, HarnessError> {
    let body = draw_body(config, config.vertex_counts[0], stream)?;
    let b = &config.budgets;
    if config.n <= EXACT_ISO_DIM {
        let report = isoconst::kk_bound_pipeline(&body)?;
        let seed = stream.id();
        let rows = vec![
            Row::new(trial, "direct_l", report.direct_l).seed(seed),
            Row::new(trial, "implied_l_interior", report.implied_l_interior).seed(seed),
            Row::new(trial, "implied_l_facet", report.implied_l_facet).seed(seed),
            Row::new(trial, "implied_l_sign", report.implied_l_sign).seed(seed),
            Row::new(trial, "interior_second_moment", report.interior_second_moment).seed(seed),
            Row::new(trial, "facet_bound", report.facet_bound).seed(seed),
            Row::new(trial, "sign_bound", report.sign_bound).seed(seed),
            Row::new(trial, "volume_radius", report.volume_radius).seed(seed),
            Row::new(trial, "facet_count", report.facet_count as f64).seed(seed),
        ];
        Ok((rows, Some(serde_json::to_value(&report)?)))
    } else {
        let ms = stream.child_named("moments");
        let moments = isoconst::body_moments(&body, SampleMode::HitAndRun, b.interior, ms)?;
        let rows = vec![
            Row::new(trial, "second_trace", moments.second_trace.value)
                .stderr(moments.second_trace.standard_error)
                .budget(b.interior)
                .seed(ms.id()),
            Row::new(trial, "split_chain_r_hat", moments.r_hat.unwrap_or(f64::NAN))
                .budget(b.interior)
                .seed(ms.id()),
            Row::new(trial, "non_convergence", f64::from(u8::from(moments.non_convergence)))
                .budget(b.interior)
                .seed(ms.id()),
        ];
        Ok((rows, Some(serde_json::to_value(&moments)?)))
    }
}

const SMALL_BALL_GRID: [f64; 3] = [0.5, 0.7, 0.9];
const LATALA_GRID: [f64; 3] = [0.25, 0.5, 1.0];

fn tails_trial(config: &ExperimentConfig, trial: u64, stream: Stream) -> Result<TrialOut, HarnessError> {
    let dist = Distribution::new(config.distribution, config.n)?;
    let b = &config.budgets;
    let ts = stream.child_named("tails");
    let cache = SampleCache::build(&dist, b.volume, ts);
    let deviation_grid: Vec<f64> =
        if config.t_list.is_empty() { vec![1.0, 1.5, 2.0] } else { config.t_list.clone() };
    let report = crate::measures::tail_probabilities(
        &cache,
        1.0,
        &deviation_grid,
        &SMALL_BALL_GRID,
        &LATALA_GRID,
    );
    let m = b.volume as f64;
    let se = |p: f64| (p * (1.0 - p) / m).sqrt();
    let mut rows = Vec::new();
    for r in &report.deviation {
        rows.push(
            Row::new(trial, "tail_deviation", r.probability)
                .t(r.threshold)
                .stderr(se(r.probability))
                .budget(b.volume)
                .seed(ts.id()),
        );
    }
    for r in &report.small_ball {
        rows.push(
            Row::new(trial, "tail_small_ball", r.probability)
                .t(r.threshold)
                .stderr(se(r.probability))
                .budget(b.volume)
                .seed(ts.id()),
        );
    }
    for r in &report.latala {
        rows.push(
            Row::new(trial, "tail_latala", r.probability)
                .t(r.threshold)
                .stderr(se(r.probability))
                .budget(b.volume)
                .seed(ts.id()),
        );
    }
    rows.push(Row::new(trial, "fitted_deviation_scale", report.fitted_deviation_scale).seed(ts.id()));
    rows.push(
        Row::new(trial, "fitted_small_ball_exponent", report.fitted_small_ball_exponent).seed(ts.id()),
    );
    rows.push(Row::new(trial, "fitted_latala_constant", report.fitted_latala_constant).seed(ts.id()));
    rows.push(Row::new(trial, "mean_norm", report.mean_norm).seed(ts.id()));
    Ok((rows, Some(serde_json::to_value(&report)?)))
}

/// min over directions of h_K(theta) / h_Z(theta): the largest c with
/// c Z subset K as witnessed by the direction set.
pub fn inclusion_ratio(k: &VertexPolytope, dirs: &[Vec<f64>], h_z: &[f64]) -> f64 {
    assert_eq!(dirs.len(), h_z.len());
    let n = k.dim();
    let mut c = f64::INFINITY;
    for (theta, &hz) in dirs.iter().zip(h_z) {
        assert_eq!(theta.len(), n);
        let mut hk = 0.0f64;
        for g in k.generators().chunks_exact(n) {
            hk = hk.max(dot(g, theta).abs());
        }
        if hz > 0.0 {
            c = c.min(hk / hz);
        }
    }
    c
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionQ {
    pub q: f64,
    pub values: Vec<f64>,
    pub min: f64,
    pub median: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub n: usize,
    pub vertex_count: usize,
    pub directions: usize,
    pub trials: usize,
    pub per_q: Vec<InclusionQ>,
}

/// Inclusion study: empirical c(q) = min_theta h_K / h_Z over a direction
/// set shared by every trial, against moment bodies of the sampling
/// distribution (closed form for the gaussian, calibrated Monte Carlo
/// otherwise).
#[allow(clippy::too_many_arguments)]
pub fn inclusion_study(
    dist_kind: DistributionKind,
    n: usize,
    count: usize,
    qs: &[f64],
    trials: usize,
    budgets: &Budgets,
    seed: u64,
    workers: usize,
) -> Result<(Vec<Row>, InclusionReport), HarnessError> {
    let dist = Distribution::new(dist_kind, n)?;
    let root = Stream::root(seed).child_named("inclusion");
    let mut dir_rng = root.child_named("dirs").rng();
    let dirs: Vec<Vec<f64>> = (0..budgets.directions)
        .map(|_| crate::geometry::sample_sphere(n, &mut dir_rng).into_inner())
        .collect();

    // Support values of each moment body over the shared directions.
    let mut h_z_per_q = Vec::with_capacity(qs.len());
    let calibration = match dist_kind {
        DistributionKind::Gaussian => None,
        _ => Some(SampleCache::build(&dist, budgets.volume, root.child_named("calibration"))),
    };
    for &q in qs {
        if q <= 0.0 {
            return Err(HarnessError::Config {
                field: "q_list",
                message: format!("inclusion needs positive moment orders, got {q}"),
            });
        }
        let body = match &calibration {
            None => MomentBody::gaussian(n, q)?,
            Some(cache) => MomentBody::empirical(cache.clone(), q)?,
        };
        let h_z: Vec<f64> = dirs.iter().map(|theta| body.support(theta).value).collect();
        h_z_per_q.push(h_z);
    }

    let per_trial: Vec<Vec<f64>> = par_map(workers, trials, |t| {
        let ts = root.child(t as u64);
        let body = VertexPolytope::from_distribution(&dist, count, ts.child_named("gens"))?;
        Ok(h_z_per_q.iter().map(|h_z| inclusion_ratio(&body, &dirs, h_z)).collect())
    })?;

    let mut rows = Vec::new();
    for (t, cs) in per_trial.iter().enumerate() {
        let ts = root.child(t as u64);
        for (qi, &c) in cs.iter().enumerate() {
            rows.push(
                Row::new(t as u64, "inclusion_c", c)
                    .q(qs[qi])
                    .budget(budgets.directions)
                    .seed(ts.id()),
            );
        }
    }
    let per_q = qs
        .iter()
        .enumerate()
        .map(|(qi, &q)| {
            let mut values: Vec<f64> = per_trial.iter().map(|cs| cs[qi]).collect();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let min = sorted[0];
            let median = stats::quantile_sorted(&sorted, 0.5);
            values.shrink_to_fit();
            InclusionQ { q, values, min, median }
        })
        .collect();
    let report = InclusionReport {
        n,
        vertex_count: count,
        directions: budgets.directions,
        trials,
        per_q,
    };
    Ok((rows, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub functional: String,
    pub k: Option<usize>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    /// Regressor: sqrt(log N) over the vertex-count grid.
    pub x_label: String,
    pub vertex_counts: Vec<usize>,
    pub trials_per_point: usize,
    pub fits: Vec<ScalingFit>,
    /// Range of mean R(K_N)/sqrt(n) across the grid.
    pub radius_over_sqrt_n_min: f64,
    pub radius_over_sqrt_n_max: f64,
}

/// Scaling study over an N grid: quermass means, mean width, and radius per
/// (N, trial), with least-squares fits against sqrt(log N).
#[allow(clippy::too_many_arguments)]
pub fn scaling_study(
    dist_kind: DistributionKind,
    n: usize,
    counts: &[usize],
    ks: &[usize],
    trials: usize,
    budgets: &Budgets,
    seed: u64,
    workers: usize,
) -> Result<(Vec<Row>, ScalingReport), HarnessError> {
    assert!(counts.len() >= 2, "scaling needs a grid");
    let dist = Distribution::new(dist_kind, n)?;
    let root = Stream::root(seed).child_named("scaling");
    let jobs = counts.len() * trials;

    struct JobOut {
        rows: Vec<Row>,
        quermass: Vec<f64>,
        width: f64,
        radius: f64,
    }

    let outs: Vec<JobOut> = par_map(workers, jobs, |j| {
        let count_idx = j / trials;
        let trial = (j % trials) as u64;
        let count = counts[count_idx];
        let js = root.child(count_idx as u64).child(trial);
        let body = VertexPolytope::from_distribution(&dist, count, js.child_named("gens"))?;
        let qs = js.child_named("quermass");
        let profile = functionals::quermass_profile(&body, ks, budgets.subspaces, qs)?;
        let ws = js.child_named("width");
        let w = functionals::mean_width(&body, budgets.sphere, ws);
        let r = functionals::radius(&body);
        let mut rows = Vec::new();
        let mut quermass = Vec::with_capacity(ks.len());
        for (k, est) in &profile {
            rows.push(
                Row::new(trial, "quermass", est.value)
                    .k(*k)
                    .q(count as f64)
                    .stderr(est.standard_error)
                    .budget(budgets.subspaces)
                    .seed(qs.id()),
            );
            quermass.push(est.value);
        }
        rows.push(
            Row::new(trial, "mean_width", w.value)
                .q(count as f64)
                .stderr(w.standard_error)
                .budget(budgets.sphere)
                .seed(ws.id()),
        );
        rows.push(Row::new(trial, "radius", r).q(count as f64).seed(js.id()));
        Ok(JobOut { rows, quermass, width: w.value, radius: r })
    })?;

    let mut rows = Vec::new();
    for out in &outs {
        rows.extend(out.rows.iter().cloned());
    }

    let xs: Vec<f64> = counts.iter().map(|&c| (c as f64).ln().sqrt()).collect();
    let grid_mean = |extract: &dyn Fn(&JobOut) -> f64| -> Vec<f64> {
        (0..counts.len())
            .map(|ci| {
                let vals: Vec<f64> =
                    (0..trials).map(|t| extract(&outs[ci * trials + t])).collect();
                stats::pairwise_sum(&vals) / trials as f64
            })
            .collect()
    };
    let mut fits = Vec::new();
    for (ki, &k) in ks.iter().enumerate() {
        let ys = grid_mean(&|out: &JobOut| out.quermass[ki]);
        let fit = stats::fit_line(&xs, &ys);
        fits.push(ScalingFit {
            functional: "quermass".into(),
            k: Some(k),
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
        });
    }
    let width_means = grid_mean(&|out: &JobOut| out.width);
    let wfit = stats::fit_line(&xs, &width_means);
    fits.push(ScalingFit {
        functional: "mean_width".into(),
        k: None,
        slope: wfit.slope,
        intercept: wfit.intercept,
        r_squared: wfit.r_squared,
    });
    let radius_means = grid_mean(&|out: &JobOut| out.radius);
    let sqrt_n = (n as f64).sqrt();
    let report = ScalingReport {
        x_label: "sqrt_log_N".into(),
        vertex_counts: counts.to_vec(),
        trials_per_point: trials,
        fits,
        radius_over_sqrt_n_min: radius_means.iter().fold(f64::INFINITY, |a, &v| a.min(v / sqrt_n)),
        radius_over_sqrt_n_max: radius_means.iter().fold(0.0f64, |a, &v| a.max(v / sqrt_n)),
    };
    Ok((rows, report))
}

/// Nested-draw width monotonicity: widths of K_N over a nested prefix of one
/// generator sample, evaluated on shared directions. Monotone by hull
/// nesting, sample-wise.
pub fn nested_width_profile(
    dist_kind: DistributionKind,
    n: usize,
    counts: &[usize],
    sphere_draws: usize,
    seed: u64,
) -> Result<Vec<f64>, HarnessError> {
    let dist = Distribution::new(dist_kind, n)?;
    let stream = Stream::root(seed).child_named("nested");
    let max_count = *counts.iter().max().expect("nonempty counts");
    let mut rng = stream.child_named("gens").rng();
    let all = dist.sample(max_count, &mut rng);
    let mut widths = Vec::with_capacity(counts.len());
    for &count in counts {
        assert!(count <= max_count && count >= 1);
        let body = VertexPolytope::new(n, all[..count * n].to_vec())?;
        widths.push(functionals::mean_width(&body, sphere_draws, stream.child_named("width")).value);
    }
    Ok(widths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn widths_config(dir: Option<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            experiment: ExperimentKind::Widths,
            distribution: DistributionKind::Gaussian,
            n: 16,
            vertex_counts: vec![256],
            k_list: vec![],
            q_list: vec![],
            t_list: vec![],
            trials: 5,
            budgets: Budgets { sphere: 64, ..Budgets::default() },
            seed: 1,
            out_dir: dir,
        }
    }

    #[test]
    fn reruns_are_byte_identical_across_worker_counts() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let config = widths_config(None);
        let a = run(
            &config,
            &RunOptions { out_dir: Some(dir_a.path().into()), workers: 1, ..Default::default() },
        )
        .unwrap();
        let b = run(
            &config,
            &RunOptions { out_dir: Some(dir_b.path().into()), workers: 3, ..Default::default() },
        )
        .unwrap();
        let bytes_a = fs::read(&a.csv_path).unwrap();
        let bytes_b = fs::read(&b.csv_path).unwrap();
        assert_eq!(bytes_a, bytes_b);
        assert_eq!(a.manifest.outputs, b.manifest.outputs);
        assert_eq!(a.row_count, 5);
        let text = String::from_utf8(bytes_a).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(1).unwrap().starts_with("0,mean_width,"));
    }

    #[test]
    fn seed_override_changes_rows_and_directory() {
        let dir = tempfile::tempdir().unwrap();
        let config = widths_config(Some(dir.path().into()));
        let base = run(&config, &RunOptions::default()).unwrap();
        let moved = run(
            &config,
            &RunOptions { seed_override: Some(2), ..Default::default() },
        )
        .unwrap();
        assert_ne!(base.dir, moved.dir);
        assert_ne!(
            fs::read(&base.csv_path).unwrap(),
            fs::read(&moved.csv_path).unwrap()
        );
        assert_eq!(moved.manifest.seed, 2);
    }

    #[test]
    fn out_root_precedence_is_cli_config_env_default() {
        let cli = PathBuf::from("/cli");
        let cfg = PathBuf::from("/cfg");
        let env = PathBuf::from("/env");
        assert_eq!(out_root_from(Some(&cli), Some(&cfg), Some(env.clone())), cli);
        assert_eq!(out_root_from(None, Some(&cfg), Some(env.clone())), cfg);
        assert_eq!(out_root_from(None, None, Some(env.clone())), env);
        assert_eq!(out_root_from(None, None, None), PathBuf::from("runs"));
    }

    #[test]
    fn interrupted_runs_leave_no_manifest_and_rerun_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let config = widths_config(Some(dir.path().into()));
        // Simulate an interrupt: the run directory exists with data but the
        // manifest never landed.
        let run_dir = {
            let mut effective = config.clone();
            effective.out_dir = None;
            let digest = effective.digest();
            dir.path().join(format!("widths-{}-s1", &digest[..12]))
        };
        fs::create_dir_all(&run_dir).unwrap();
        fs::write(run_dir.join("rows.csv.partial"), b"truncated").unwrap();
        assert!(RunManifest::read(&run_dir).is_err());

        let report = run(&config, &RunOptions::default()).unwrap();
        assert_eq!(report.dir, run_dir);
        assert!(RunManifest::read(&run_dir).is_ok());
        assert!(!run_dir.join("rows.csv.partial").exists());
    }

    #[test]
    fn identity_cross_polytope_inclusion_ratio_is_one() {
        let k = VertexPolytope::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let mut rng = Stream::root(190).child_named("dirs").rng();
        let dirs: Vec<Vec<f64>> =
            (0..64).map(|_| crate::geometry::sample_sphere(2, &mut rng).into_inner()).collect();
        // Against its own support function the ratio is exactly 1.
        let h_self: Vec<f64> =
            dirs.iter().map(|t| t[0].abs().max(t[1].abs())).collect();
        let c = inclusion_ratio(&k, &dirs, &h_self);
        assert!((c - 1.0).abs() < 1e-12, "c = {c}");
    }

    #[test]
    fn unit_ball_is_included_at_small_q() {
        // B_2^n subset of c K_N with c bounded away from zero: q = 2 moment
        // body of the gaussian is the unit ball.
        let (rows, report) = inclusion_study(
            DistributionKind::Gaussian,
            8,
            128,
            &[2.0],
            4,
            &Budgets { directions: 128, ..Budgets::default() },
            191,
            1,
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(report.per_q.len(), 1);
        assert!(report.per_q[0].min > 0.5, "min c = {}", report.per_q[0].min);
        assert!(rows.iter().all(|r| r.functional == "inclusion_c" && r.q == Some(2.0)));
    }

    #[test]
    fn scaling_study_emits_fits_and_ordered_rows() {
        let (rows, report) = scaling_study(
            DistributionKind::Gaussian,
            4,
            &[8, 64],
            &[1, 2],
            3,
            &Budgets { subspaces: 16, sphere: 32, ..Budgets::default() },
            192,
            1,
        )
        .unwrap();
        // Two grid points, three trials, four rows per job.
        assert_eq!(rows.len(), 2 * 3 * 4);
        assert_eq!(report.fits.len(), 3);
        assert!(report.fits.iter().all(|f| f.r_squared.is_finite()));
        assert!(report.radius_over_sqrt_n_min <= report.radius_over_sqrt_n_max);
        // Rows arrive grid-point-major, trial-minor.
        assert_eq!(rows[0].q, Some(8.0));
        assert_eq!(rows[23].q, Some(64.0));
    }

    #[test]
    fn widths_grow_with_nested_vertex_sets() {
        let widths =
            nested_width_profile(DistributionKind::Gaussian, 8, &[16, 64, 256], 128, 193).unwrap();
        assert!(widths[0] <= widths[1] && widths[1] <= widths[2], "{widths:?}");
    }
}
