use std::path::PathBuf;

use gravent_core::analytics::{
    self, oscillator_peak_squeezed, oscillator_peak_thermal, released_crossing_time_with, released_entanglement_with,
};
use gravent_core::dynamics::LyapunovOptions;
use gravent_core::environment::{feasibility, FeasibilityOptions, FeasibilityReport};
use gravent_core::geometry;
use gravent_core::{Scenario, Setup, Simulator};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{apply_axis, RunConfig};
use crate::output::{self, fmt_f64, fmt_opt, SCHEMA_VERSION};
use crate::units::Separation;
use crate::CliError;

#[derive(Debug, Serialize)]
struct Crossing {
    threshold: f64,
    t: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Failure {
    t: f64,
    message: String,
}

#[derive(Debug, Serialize)]
struct Analytic {
    /// Closed-form value: the predicted peak (trapped) or `E` at the last
    /// sample (released).
    value: f64,
    in_regime: bool,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    name: String,
    csv: String,
    setup: Setup,
    eta: f64,
    nu: f64,
    samples: usize,
    peak_t: Option<f64>,
    peak_e: Option<f64>,
    crossings: Vec<Crossing>,
    complete: bool,
    failure: Option<Failure>,
    analytic: Analytic,
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    schema_version: u32,
    runs: Vec<RunSummary>,
}

fn simulator(sc: &Scenario, rtol: Option<f64>) -> Result<Simulator, CliError> {
    let mut opts = LyapunovOptions::default();
    if let Some(r) = rtol {
        opts.rtol = r;
    }
    Ok(Simulator::new(sc).map_err(CliError::numerical)?.with_options(opts))
}

fn analytic_check(sc: &Scenario, t_last: f64) -> Analytic {
    let c = &sc.constants;
    let eta = sc.rates().eta;
    let init = &sc.initial;
    match sc.setup {
        Setup::Oscillators if init.s_a != 0.0 || init.s_b != 0.0 => {
            let p = oscillator_peak_squeezed(init.s_a, init.s_b, eta, sc.omega, init.nbar);
            Analytic {
                value: p.value.e_max,
                in_regime: p.in_regime && sc.gamma == 0.0,
            }
        }
        Setup::Oscillators => Analytic {
            value: oscillator_peak_thermal(eta, sc.omega, init.nbar).e_max,
            in_regime: sc.gamma == 0.0,
        },
        Setup::Released => {
            let f = released_entanglement_with(c, t_last, sc.mass, sc.omega, sc.separation, init.nbar);
            Analytic {
                value: f.value,
                in_regime: f.in_regime && init.s_a == 0.0 && init.s_b == 0.0,
            }
        }
    }
}

/// Writes one CSV per run and a JSON summary. Returns the written paths.
pub fn simulate(cfg: &RunConfig, out_dir: Option<PathBuf>) -> Result<Vec<PathBuf>, CliError> {
    let grid = cfg
        .time
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs a [time] section with `stop`".into()))?;
    let times = grid.times();
    let dir = out_dir.unwrap_or_else(|| cfg.output.dir.clone());
    let mut written = Vec::new();
    let mut runs = Vec::new();
    let mut any_failure = false;

    for (name, sc) in cfg.runs()? {
        let sim = simulator(&sc, cfg.rtol)?;
        let series = sim.trace(&times).map_err(CliError::numerical)?;
        let csv_name = format!("{name}.csv");
        let path = dir.join(&csv_name);
        output::write_file(&path, &output::trace_csv(&series.samples))?;
        written.push(path);

        let crossings = cfg
            .output
            .thresholds
            .iter()
            .map(|&th| Crossing {
                threshold: th,
                t: sim.crossing_time(th, &times).ok().flatten(),
            })
            .collect();
        let peak = series.peak();
        let rates = sc.rates();
        any_failure |= series.failure.is_some();
        runs.push(RunSummary {
            name,
            csv: csv_name,
            setup: sc.setup,
            eta: rates.eta,
            nu: rates.nu,
            samples: series.samples.len(),
            peak_t: peak.map(|p| p.0),
            peak_e: peak.map(|p| p.1),
            crossings,
            complete: series.is_complete(),
            failure: series.failure.as_ref().map(|(t, e)| Failure {
                t: *t,
                message: e.to_string(),
            }),
            analytic: analytic_check(&sc, *times.last().unwrap_or(&0.0)),
        });
    }

    let summary = SimulateSummary {
        schema_version: SCHEMA_VERSION,
        runs,
    };
    let path = dir.join(format!("{}.summary.json", cfg.output.name));
    output::write_file(&path, &output::json(&summary)?)?;
    written.push(path);
    if any_failure {
        return Err(CliError::Numerical(
            "propagation failed; rows up to the failure were written".into(),
        ));
    }
    Ok(written)
}

#[derive(Debug, Serialize)]
struct FeasibilityRun {
    name: String,
    target_e: f64,
    #[serde(flatten)]
    report: FeasibilityReport,
    feasible: bool,
}

#[derive(Debug, Serialize)]
struct FeasibilityFile {
    schema_version: u32,
    runs: Vec<FeasibilityRun>,
}

pub struct FeasibilityOutcome {
    pub path: PathBuf,
    pub lines: Vec<String>,
    pub all_feasible: bool,
}

pub fn feasibility_report(
    cfg: &RunConfig,
    target_e: f64,
    horizon: Option<f64>,
    out_dir: Option<PathBuf>,
) -> Result<FeasibilityOutcome, CliError> {
    let opts = FeasibilityOptions { horizon, dx: cfg.dx };
    let mut runs = Vec::new();
    let mut lines = Vec::new();
    for (name, sc) in cfg.runs()? {
        let report = feasibility(&sc, &cfg.environment, target_e, &opts).map_err(CliError::from_core)?;
        lines.push(format!(
            "{name}: {:?}  t_target = {}  tau_photon = {:.3e} s  tau_gas = {:.3e} s  r_cg = {:.3e}",
            report.verdict,
            report.t_target.map_or("unreached".into(), |t| format!("{t:.4} s")),
            report.tau_photon,
            report.tau_gas,
            report.r_cg
        ));
        runs.push(FeasibilityRun {
            name,
            target_e,
            feasible: report.feasible(),
            report,
        });
    }
    let all_feasible = runs.iter().all(|r| r.feasible);
    let file = FeasibilityFile {
        schema_version: SCHEMA_VERSION,
        runs,
    };
    let dir = out_dir.unwrap_or_else(|| cfg.output.dir.clone());
    let path = dir.join(format!("{}.feasibility.json", cfg.output.name));
    output::write_file(&path, &output::json(&file)?)?;
    Ok(FeasibilityOutcome {
        path,
        lines,
        all_feasible,
    })
}

/// Row-major (first axis slowest) index tuples of a grid.
pub fn grid_indices(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

struct SweepRow {
    axes: Vec<String>,
    eta: Option<f64>,
    peak: Option<(f64, f64)>,
    report: Option<FeasibilityReport>,
    status: String,
}

pub const SWEEP_FIXED_COLUMNS: &str = "eta,peak_E,t_peak,t_target,tau_photon,tau_gas,r_cg,verdict,status";

fn sweep_point(cfg: &RunConfig, idx: &[usize]) -> SweepRow {
    let sweep = cfg.sweep.as_ref().expect("sweep section checked by caller");
    let mut spec = cfg.spec.clone();
    let mut env = cfg.environment;
    for (axis, &i) in sweep.axes.iter().zip(idx) {
        // Values were validated at parse time.
        if let Ok((s, e)) = apply_axis(&spec, &env, &axis.name, &axis.values[i]) {
            spec = s;
            env = e;
        }
    }
    let mut row = SweepRow {
        axes: Vec::new(),
        eta: None,
        peak: None,
        report: None,
        status: "ok".into(),
    };
    let sc = match spec.resolve(&cfg.constants) {
        Ok(sc) => sc,
        Err(e) => {
            row.axes = axis_columns(cfg, &spec, &env, None);
            row.status = format!("invalid: {e}");
            return row;
        }
    };
    row.axes = axis_columns(cfg, &spec, &env, Some(&sc));
    row.eta = Some(sc.rates().eta);
    if let Err(e) = env.validate() {
        row.status = format!("invalid: {e}");
        return row;
    }
    if let Some(grid) = &cfg.time {
        match simulator(&sc, cfg.rtol).and_then(|sim| sim.trace(&grid.times()).map_err(CliError::numerical)) {
            Ok(series) => {
                row.peak = series.peak();
                if let Some((t, e)) = series.failure {
                    row.status = format!("failed at t = {t:e}: {e}");
                }
            }
            Err(e) => row.status = format!("failed: {e}"),
        }
    }
    let opts = FeasibilityOptions {
        horizon: sweep.horizon,
        dx: cfg.dx,
    };
    match feasibility(&sc, &env, sweep.target_e, &opts) {
        Ok(r) => row.report = Some(r),
        Err(e) if row.status == "ok" => row.status = format!("feasibility failed: {e}"),
        Err(_) => {}
    }
    row
}

fn axis_columns(
    cfg: &RunConfig,
    spec: &crate::config::ScenarioSpec,
    env: &gravent_core::EnvironmentSpec,
    sc: Option<&Scenario>,
) -> Vec<String> {
    let sweep = cfg.sweep.as_ref().expect("sweep section checked by caller");
    sweep
        .axes
        .iter()
        .map(|a| {
            let v = match a.name.as_str() {
                "mass" => spec.mass,
                "omega" => spec.omega,
                "separation" => match (sc, spec.separation) {
                    (Some(sc), _) => sc.separation,
                    (None, Separation::Meters(l)) => l,
                    (None, Separation::Radii(_)) => f64::NAN,
                },
                "density" => spec.density.unwrap_or(f64::NAN),
                "nbar" => spec.initial.nbar,
                "s" | "s_a" => spec.initial.s_a,
                "s_b" => spec.initial.s_b,
                "q" => match spec.damping {
                    crate::config::Damping::Quality(q) => q,
                    _ => f64::NAN,
                },
                "gamma" => sc.map_or(f64::NAN, |s| s.gamma),
                "temperature" => env.temperature,
                "gas_density" => env.gas_density,
                "f0" => env.f0,
                _ => f64::NAN,
            };
            fmt_f64(v)
        })
        .collect()
}

/// Evaluates the sweep grid in parallel and writes a long-form CSV.
pub fn sweep(cfg: &RunConfig, out_dir: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section with [[sweep.axis]] entries".into()))?;
    let sizes: Vec<usize> = spec.axes.iter().map(|a| a.values.len()).collect();
    let count = sizes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).unwrap_or(usize::MAX);
    if count > spec.max_points {
        return Err(CliError::Config(format!(
            "sweep grid has {count} points, above the cap of {} (raise sweep.max_points)",
            spec.max_points
        )));
    }
    let indices = grid_indices(&sizes);
    let rows: Vec<SweepRow> = indices.par_iter().map(|idx| sweep_point(cfg, idx)).collect();

    let mut csv = String::new();
    let names: Vec<&str> = spec.axes.iter().map(|a| a.name.as_str()).collect();
    csv.push_str(&names.join(","));
    csv.push(',');
    csv.push_str(SWEEP_FIXED_COLUMNS);
    csv.push('\n');
    for row in rows {
        let mut cols = row.axes;
        cols.push(fmt_opt(row.eta));
        cols.push(fmt_opt(row.peak.map(|p| p.1)));
        cols.push(fmt_opt(row.peak.map(|p| p.0)));
        match &row.report {
            Some(r) => {
                cols.push(fmt_opt(r.t_target));
                cols.push(fmt_f64(r.tau_photon));
                cols.push(fmt_f64(r.tau_gas));
                cols.push(fmt_f64(r.r_cg));
                cols.push(serde_json::to_value(r.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
            }
            None => cols.extend(std::iter::repeat_n(String::new(), 5)),
        }
        cols.push(csv_escape(&row.status));
        csv.push_str(&cols.join(","));
        csv.push('\n');
    }
    let dir = out_dir.unwrap_or_else(|| cfg.output.dir.clone());
    let path = dir.join(format!("{}.sweep.csv", cfg.output.name));
    output::write_file(&path, &csv)?;
    Ok(path)
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Serialize)]
struct ShapeRate {
    parameter: f64,
    f: f64,
    rate: f64,
}

#[derive(Debug, Serialize)]
struct GeometryReport {
    schema_version: u32,
    density: f64,
    omega_a: f64,
    equal_spheres_rate: f64,
    rod_sphere_optimum_varsigma: f64,
    rod_sphere_f_max: f64,
    rod_length_over_distance: f64,
    rod_sphere_max_rate: f64,
    plane_point_coupling: f64,
    unequal_spheres: Vec<ShapeRate>,
    rod_sphere: Vec<ShapeRate>,
}

pub fn geometry_report(density: f64, omega_a: f64, alphas: &[f64], varsigmas: &[f64]) -> Result<String, CliError> {
    if !(density > 0.0 && omega_a > 0.0 && density.is_finite() && omega_a.is_finite()) {
        return Err(CliError::Config("density and omega must be positive".into()));
    }
    if alphas.iter().any(|a| a.is_nan() || *a < 0.0) || varsigmas.iter().any(|s| s.is_nan() || *s <= 0.0) {
        return Err(CliError::Config("need alpha >= 0 and varsigma > 0".into()));
    }
    let r1 = geometry::sphere_pair_rate_coefficient(density) / omega_a;
    let rod = geometry::rod_sphere_rate_coefficient(density) / omega_a;
    let (s_opt, f_max) = geometry::rod_sphere_optimum();
    let report = GeometryReport {
        schema_version: SCHEMA_VERSION,
        density,
        omega_a,
        equal_spheres_rate: r1,
        rod_sphere_optimum_varsigma: s_opt,
        rod_sphere_f_max: f_max,
        rod_length_over_distance: 2.0 / s_opt,
        rod_sphere_max_rate: rod * f_max,
        plane_point_coupling: geometry::plane_point_coupling(),
        unequal_spheres: alphas
            .iter()
            .map(|&a| ShapeRate {
                parameter: a,
                f: a.powf(2.25),
                rate: geometry::rate_unequal_spheres_with_density(a, omega_a, density),
            })
            .collect(),
        rod_sphere: varsigmas
            .iter()
            .map(|&s| ShapeRate {
                parameter: s,
                f: geometry::rod_sphere_f(s),
                rate: rod * geometry::rod_sphere_f(s),
            })
            .collect(),
    };
    output::json(&report)
}

#[derive(Debug, Serialize)]
struct AnalyticReport {
    schema_version: u32,
    name: String,
    setup: Setup,
    eta: f64,
    nu: f64,
    thermal_penalty: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_unsqueezed: Option<analytics::PeakPrediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_squeezed: Option<analytics::Flagged<analytics::PeakPrediction>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    repeat_period: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    crossings: Vec<Crossing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    released_at_stop: Option<analytics::Flagged<f64>>,
}

/// Closed-form predictions for each run of the configuration.
pub fn analytic_report(cfg: &RunConfig) -> Result<String, CliError> {
    let stop = cfg.time.as_ref().map_or(100.0, |t| t.stop);
    let mut reports = Vec::new();
    for (name, sc) in cfg.runs()? {
        let rates = sc.rates();
        let init = sc.initial;
        let c = &sc.constants;
        let mut r = AnalyticReport {
            schema_version: SCHEMA_VERSION,
            name,
            setup: sc.setup,
            eta: rates.eta,
            nu: rates.nu,
            thermal_penalty: analytics::thermal_penalty(init.nbar),
            peak_unsqueezed: None,
            peak_squeezed: None,
            repeat_period: None,
            crossings: Vec::new(),
            released_at_stop: None,
        };
        match sc.setup {
            Setup::Oscillators => {
                r.peak_unsqueezed = Some(oscillator_peak_thermal(rates.eta, sc.omega, init.nbar));
                r.peak_squeezed = Some(oscillator_peak_squeezed(init.s_a, init.s_b, rates.eta, sc.omega, init.nbar));
                r.repeat_period = Some(std::f64::consts::PI / ((1.0 - rates.eta) * sc.omega));
            }
            Setup::Released => {
                r.crossings = cfg
                    .output
                    .thresholds
                    .iter()
                    .map(|&th| Crossing {
                        threshold: th,
                        t: released_crossing_time_with(c, th, sc.mass, sc.omega, sc.separation, init.nbar, stop),
                    })
                    .collect();
                r.released_at_stop = Some(released_entanglement_with(c, stop, sc.mass, sc.omega, sc.separation, init.nbar));
            }
        }
        reports.push(r);
    }
    output::json(&reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_is_lexicographic() {
        let g = grid_indices(&[2, 3]);
        assert_eq!(g, vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![1, 2]]);
        assert_eq!(grid_indices(&[]), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn csv_escaping() {
        assert_eq!(csv_escape("ok"), "ok");
        assert_eq!(csv_escape("a, b"), "\"a, b\"");
    }
}
