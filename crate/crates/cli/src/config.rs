//! Scenario files: TOML with `[scenario]`, `[environment]`, `[time]`,
//! `[output]`, `[[variant]]` and `[sweep]` sections.
//!
//! Values may carry unit suffixes (see [`crate::units`]). Diagnostics name
//! the offending key and the line it was read from.

use std::collections::BTreeSet;
use std::path::PathBuf;

use gravent_core::constants::{sphere_radius, Constants};
use gravent_core::environment::EnvironmentSpec;
use gravent_core::{InitialStateSpec, Scenario, Setup};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::units::{self, Dimension, Quantity, Separation};
use crate::CliError;

/// Default cap on the number of sweep grid points.
pub const DEFAULT_MAX_POINTS: usize = 10_000;
pub const MAX_AXES: usize = 3;

type Field<T> = Option<Spanned<T>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    scenario: Option<RawScenario>,
    environment: Option<RawEnvironment>,
    time: Option<RawTime>,
    output: Option<RawOutput>,
    #[serde(default)]
    variant: Vec<Spanned<RawVariant>>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    setup: Field<String>,
    mass: Field<Quantity>,
    omega: Field<Quantity>,
    separation: Field<Quantity>,
    density: Field<f64>,
    nbar: Field<f64>,
    s: Field<f64>,
    s_a: Field<f64>,
    s_b: Field<f64>,
    q: Field<f64>,
    gamma: Field<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvironment {
    temperature: Field<f64>,
    gas_density: Field<f64>,
    m_air: Field<f64>,
    f0: Field<f64>,
    dx: Field<Quantity>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    start: Field<f64>,
    stop: Field<f64>,
    points: Field<i64>,
    rtol: Field<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Field<String>,
    name: Field<String>,
    thresholds: Field<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariant {
    name: Field<String>,
    nbar: Field<f64>,
    s: Field<f64>,
    s_a: Field<f64>,
    s_b: Field<f64>,
    q: Field<f64>,
    gamma: Field<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    target_e: Field<f64>,
    max_points: Field<i64>,
    horizon: Field<f64>,
    #[serde(default)]
    axis: Vec<Spanned<RawAxis>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    name: Spanned<String>,
    values: Spanned<Vec<Quantity>>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr; $($f:ident),+) => {
        {$( if $src.$f.is_some() { $dst.$f = $src.$f; } )+}
    };
}

fn overlay_section<T: Default>(dst: &mut Option<T>, src: Option<T>, apply: impl FnOnce(&mut T, T)) {
    if let Some(s) = src {
        apply(dst.get_or_insert_with(T::default), s);
    }
}

/// Mechanical damping, given either as a quality factor or a rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    None,
    Quality(f64),
    Rate(f64),
}

/// A scenario before the separation rule and damping are resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub setup: Setup,
    pub mass: f64,
    pub omega: f64,
    pub separation: Separation,
    pub density: Option<f64>,
    pub initial: InitialStateSpec,
    pub damping: Damping,
}

impl ScenarioSpec {
    pub fn resolve(&self, constants: &Constants) -> Result<Scenario, String> {
        let separation = match self.separation {
            Separation::Meters(l) => l,
            Separation::Radii(k) => {
                let rho = self
                    .density
                    .ok_or("a separation in radii needs `density`")?;
                k * sphere_radius(self.mass, rho)
            }
        };
        let mut sc = Scenario::new(self.setup, self.mass, self.omega, separation)
            .with_initial(self.initial)
            .with_constants(*constants);
        sc.density = self.density;
        sc = match self.damping {
            Damping::None => sc,
            Damping::Quality(q) => sc.with_quality_factor(q),
            Damping::Rate(g) => sc.with_gamma(g),
        };
        sc.validate().map_err(|e| e.to_string())?;
        Ok(sc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        gravent_core::dynamics::linspace(self.start, self.stop, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub name: String,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub spec: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub target_e: f64,
    pub max_points: usize,
    pub horizon: Option<f64>,
    pub axes: Vec<Axis>,
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: ScenarioSpec,
    pub scenario: Scenario,
    pub environment: EnvironmentSpec,
    /// Explicit superposition size for decoherence estimates, m.
    pub dx: Option<f64>,
    pub time: Option<TimeGrid>,
    pub rtol: Option<f64>,
    pub output: OutputSpec,
    pub variants: Vec<Variant>,
    pub sweep: Option<SweepSpec>,
    pub constants: Constants,
}

impl RunConfig {
    /// Every scenario to simulate: the variants if any, else the base one.
    pub fn runs(&self) -> Result<Vec<(String, Scenario)>, CliError> {
        if self.variants.is_empty() {
            return Ok(vec![(self.output.name.clone(), self.scenario.clone())]);
        }
        self.variants
            .iter()
            .map(|v| {
                v.spec
                    .resolve(&self.constants)
                    .map(|sc| (format!("{}_{}", self.output.name, v.name), sc))
                    .map_err(|e| CliError::Config(format!("variant `{}`: {e}", v.name)))
            })
            .collect()
    }
}

/// Parameter names accepted as sweep axes.
pub const SWEEP_PARAMETERS: &[&str] = &[
    "mass",
    "omega",
    "separation",
    "density",
    "nbar",
    "s",
    "s_a",
    "s_b",
    "q",
    "gamma",
    "temperature",
    "gas_density",
    "f0",
];

/// Tracks where each key came from, for diagnostics.
struct Locator<'a> {
    source: &'a str,
    text: &'a str,
    overridden: BTreeSet<String>,
}

impl Locator<'_> {
    fn line(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, key: &str, span: Option<std::ops::Range<usize>>, msg: impl std::fmt::Display) -> Result<T, CliError> {
        let at = if self.overridden.contains(key) {
            format!("--set {key}")
        } else if let Some(span) = span {
            format!("{}:{}", self.source, self.line(span.start))
        } else {
            self.source.to_string()
        };
        Err(CliError::Config(format!("{at}: `{key}`: {msg}")))
    }

    fn required<'f, T>(&self, key: &str, field: &'f Field<T>) -> Result<&'f Spanned<T>, CliError> {
        match field {
            Some(f) => Ok(f),
            None => self.err(key, None, "missing required field"),
        }
    }

    fn quantity(&self, key: &str, f: &Spanned<Quantity>, dim: Dimension) -> Result<f64, CliError> {
        units::to_si(f.get_ref(), dim).or_else(|e| self.err(key, Some(f.span()), e))
    }
}

fn parse_toml(source: &str, text: &str) -> Result<RawDoc, CliError> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let msg = e.message().trim().to_string();
        match line {
            Some(l) => CliError::Config(format!("{source}:{l}: {msg}")),
            None => CliError::Config(format!("{source}: {msg}")),
        }
    })
}

/// Turns `section.key=value` overrides into a TOML fragment.
fn overrides_document(overrides: &[String]) -> Result<(String, BTreeSet<String>), CliError> {
    let mut by_section: Vec<(String, Vec<String>)> = Vec::new();
    let mut keys = BTreeSet::new();
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set {o}: expected section.key=value")))?;
        let (section, field) = key
            .trim()
            .split_once('.')
            .ok_or_else(|| CliError::Config(format!("--set {o}: expected section.key=value")))?;
        if !["scenario", "environment", "time", "output", "sweep"].contains(&section) {
            return Err(CliError::Config(format!("--set {o}: unknown section `{section}`")));
        }
        let value = value.trim();
        let literal = if toml::from_str::<toml::Table>(&format!("v = {value}")).is_ok() {
            value.to_string()
        } else {
            toml::Value::String(value.to_string()).to_string()
        };
        keys.insert(field.trim().to_string());
        let line = format!("{} = {literal}", field.trim());
        match by_section.iter_mut().find(|(s, _)| s == section) {
            Some((_, lines)) => lines.push(line),
            None => by_section.push((section.to_string(), vec![line])),
        }
    }
    let mut doc = String::new();
    for (section, lines) in by_section {
        doc.push_str(&format!("[{section}]\n"));
        for l in lines {
            doc.push_str(&l);
            doc.push('\n');
        }
    }
    Ok((doc, keys))
}

/// Parses and validates a scenario file, applying `--set` overrides.
pub fn parse_config(source: &str, text: &str, overrides: &[String], constants: &Constants) -> Result<RunConfig, CliError> {
    let mut raw = parse_toml(source, text)?;
    let (extra, overridden) = overrides_document(overrides)?;
    if !extra.is_empty() {
        let o = parse_toml("--set", &extra)?;
        overlay_section(&mut raw.scenario, o.scenario, |d, s| {
            overlay!(d, s; setup, mass, omega, separation, density, nbar, s, s_a, s_b, q, gamma)
        });
        overlay_section(&mut raw.environment, o.environment, |d, s| {
            overlay!(d, s; temperature, gas_density, m_air, f0, dx)
        });
        overlay_section(&mut raw.time, o.time, |d, s| overlay!(d, s; start, stop, points, rtol));
        overlay_section(&mut raw.output, o.output, |d, s| overlay!(d, s; dir, name, thresholds));
        overlay_section(&mut raw.sweep, o.sweep, |d, s| overlay!(d, s; target_e, max_points, horizon));
    }
    let loc = Locator {
        source,
        text,
        overridden,
    };
    build(&loc, raw, constants)
}

fn initial_state(
    loc: &Locator,
    nbar: &Field<f64>,
    s: &Field<f64>,
    s_a: &Field<f64>,
    s_b: &Field<f64>,
    base: InitialStateSpec,
) -> Result<InitialStateSpec, CliError> {
    let mut init = base;
    if let Some(n) = nbar {
        init.nbar = *n.get_ref();
    }
    if let Some(s) = s {
        if let Some(other) = s_a.as_ref().or(s_b.as_ref()) {
            return loc.err("s", Some(other.span()), "give either `s` or `s_a`/`s_b`, not both");
        }
        init.s_a = *s.get_ref();
        init.s_b = *s.get_ref();
    }
    if let Some(a) = s_a {
        init.s_a = *a.get_ref();
    }
    if let Some(b) = s_b {
        init.s_b = *b.get_ref();
    }
    if let Err(e) = init.validate() {
        let span = nbar.as_ref().map(|n| n.span());
        return loc.err("nbar", span, e);
    }
    Ok(init)
}

fn damping(loc: &Locator, q: &Field<f64>, gamma: &Field<f64>, base: Damping) -> Result<Damping, CliError> {
    match (q, gamma) {
        (Some(_), Some(g)) => loc.err("gamma", Some(g.span()), "conflicts with `q`; give exactly one of them"),
        (Some(q), None) => {
            let v = *q.get_ref();
            if !(v.is_finite() && v > 0.0) {
                return loc.err("q", Some(q.span()), format!("must be > 0, got {v}"));
            }
            Ok(Damping::Quality(v))
        }
        (None, Some(g)) => {
            let v = *g.get_ref();
            if !(v.is_finite() && v >= 0.0) {
                return loc.err("gamma", Some(g.span()), format!("must be >= 0, got {v}"));
            }
            Ok(if v == 0.0 { Damping::None } else { Damping::Rate(v) })
        }
        (None, None) => Ok(base),
    }
}

fn build(loc: &Locator, raw: RawDoc, constants: &Constants) -> Result<RunConfig, CliError> {
    let sc = match raw.scenario {
        Some(s) => s,
        None => return loc.err("scenario", None, "missing [scenario] section"),
    };
    let setup_field = loc.required("setup", &sc.setup)?;
    let setup = match setup_field.get_ref().as_str() {
        "oscillators" | "oscillator" | "trapped" => Setup::Oscillators,
        "released" | "free" => Setup::Released,
        other => {
            return loc.err(
                "setup",
                Some(setup_field.span()),
                format!("unknown setup `{other}` (expected `oscillators` or `released`)"),
            )
        }
    };
    let mass = loc.quantity("mass", loc.required("mass", &sc.mass)?, Dimension::Mass)?;
    let omega = loc.quantity("omega", loc.required("omega", &sc.omega)?, Dimension::Frequency)?;
    let sep_field = loc.required("separation", &sc.separation)?;
    let separation = units::separation(sep_field.get_ref()).or_else(|e| loc.err("separation", Some(sep_field.span()), e))?;
    let density = sc.density.as_ref().map(|d| *d.get_ref());
    let initial = initial_state(loc, &sc.nbar, &sc.s, &sc.s_a, &sc.s_b, InitialStateSpec::ground())?;
    let damp = damping(loc, &sc.q, &sc.gamma, Damping::None)?;
    if setup == Setup::Released && damp != Damping::None {
        let span = sc.q.as_ref().or(sc.gamma.as_ref()).map(|f| f.span());
        return loc.err("q", span, "released masses are undamped; remove `q`/`gamma`");
    }
    let spec = ScenarioSpec {
        setup,
        mass,
        omega,
        separation,
        density,
        initial,
        damping: damp,
    };
    let scenario = spec
        .resolve(constants)
        .or_else(|e| loc.err("scenario", Some(sep_field.span()), e))?;

    let env_raw = raw.environment.unwrap_or_default();
    let mut environment = EnvironmentSpec::earth_uhv();
    if let Some(t) = &env_raw.temperature {
        environment.temperature = *t.get_ref();
    }
    if let Some(n) = &env_raw.gas_density {
        environment.gas_density = *n.get_ref();
    }
    if let Some(m) = &env_raw.m_air {
        environment.m_air = *m.get_ref();
    }
    if let Some(f) = &env_raw.f0 {
        environment.f0 = *f.get_ref();
    }
    if let Err(e) = environment.validate() {
        let span = env_raw.temperature.as_ref().or(env_raw.f0.as_ref()).map(|f| f.span());
        return loc.err("environment", span, e);
    }
    let dx = match &env_raw.dx {
        Some(f) => {
            let v = loc.quantity("dx", f, Dimension::Length)?;
            if v < 0.0 {
                return loc.err("dx", Some(f.span()), "must be >= 0");
            }
            Some(v)
        }
        None => None,
    };

    let (time, rtol) = match raw.time {
        None => (None, None),
        Some(t) => {
            let start = t.start.as_ref().map_or(0.0, |s| *s.get_ref());
            let stop_f = loc.required("stop", &t.stop)?;
            let stop = *stop_f.get_ref();
            let points = t.points.as_ref().map_or(1001, |p| *p.get_ref());
            if points < 1 {
                let span = t.points.as_ref().map(|p| p.span());
                return loc.err("points", span, "time grid is empty; need at least 1 point");
            }
            if !(start.is_finite() && start >= 0.0 && stop.is_finite() && stop >= start) {
                return loc.err("stop", Some(stop_f.span()), format!("need 0 <= start <= stop, got [{start}, {stop}]"));
            }
            let rtol = match &t.rtol {
                Some(r) if !(*r.get_ref() > 0.0 && *r.get_ref() < 1.0) => {
                    return loc.err("rtol", Some(r.span()), "must lie in (0, 1)")
                }
                Some(r) => Some(*r.get_ref()),
                None => None,
            };
            (
                Some(TimeGrid {
                    start,
                    stop,
                    points: points as usize,
                }),
                rtol,
            )
        }
    };

    let out_raw = raw.output.unwrap_or_default();
    let name = out_raw.name.as_ref().map_or("run".to_string(), |n| n.get_ref().clone());
    if name.is_empty() || name.contains(['/', '\\']) {
        let span = out_raw.name.as_ref().map(|n| n.span());
        return loc.err("name", span, "must be a non-empty file stem");
    }
    let output = OutputSpec {
        dir: PathBuf::from(out_raw.dir.as_ref().map_or(".", |d| d.get_ref().as_str())),
        name,
        thresholds: out_raw.thresholds.as_ref().map_or(vec![0.01], |t| t.get_ref().clone()),
    };
    if let Some(t) = &out_raw.thresholds {
        if t.get_ref().iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return loc.err("thresholds", Some(t.span()), "must be finite and >= 0");
        }
    }

    let mut variants = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, v) in raw.variant.iter().enumerate() {
        let r = v.get_ref();
        let name = r.name.as_ref().map_or(format!("{}", i + 1), |n| n.get_ref().clone());
        if !seen.insert(name.clone()) {
            return loc.err("variant.name", Some(v.span()), format!("duplicate variant name `{name}`"));
        }
        let initial = initial_state(loc, &r.nbar, &r.s, &r.s_a, &r.s_b, spec.initial)?;
        let damp = damping(loc, &r.q, &r.gamma, spec.damping)?;
        let vspec = ScenarioSpec {
            initial,
            damping: damp,
            ..spec.clone()
        };
        vspec
            .resolve(constants)
            .or_else(|e| loc.err("variant", Some(v.span()), e))?;
        variants.push(Variant { name, spec: vspec });
    }

    let sweep = match raw.sweep {
        None => None,
        Some(s) => {
            if s.axis.is_empty() {
                return loc.err("sweep.axis", None, "a sweep needs at least one [[sweep.axis]]");
            }
            if s.axis.len() > MAX_AXES {
                return loc.err("sweep.axis", Some(s.axis[MAX_AXES].span()), format!("at most {MAX_AXES} axes"));
            }
            let mut axes = Vec::new();
            for a in &s.axis {
                let a = a.get_ref();
                let n = a.name.get_ref();
                if !SWEEP_PARAMETERS.contains(&n.as_str()) {
                    return loc.err(
                        "sweep.axis.name",
                        Some(a.name.span()),
                        format!("unknown parameter `{n}` (known: {})", SWEEP_PARAMETERS.join(", ")),
                    );
                }
                if axes.iter().any(|x: &Axis| &x.name == n) {
                    return loc.err("sweep.axis.name", Some(a.name.span()), format!("axis `{n}` given twice"));
                }
                if a.values.get_ref().is_empty() {
                    return loc.err("sweep.axis.values", Some(a.values.span()), "needs at least one value");
                }
                let axis = Axis {
                    name: n.clone(),
                    values: a.values.get_ref().clone(),
                };
                for v in &axis.values {
                    apply_axis(&spec, &environment, &axis.name, v)
                        .or_else(|e| loc.err("sweep.axis.values", Some(a.values.span()), e))?;
                }
                axes.push(axis);
            }
            let max_points = match &s.max_points {
                Some(m) if *m.get_ref() < 1 => return loc.err("max_points", Some(m.span()), "must be >= 1"),
                Some(m) => *m.get_ref() as usize,
                None => DEFAULT_MAX_POINTS,
            };
            let target_e = s.target_e.as_ref().map_or(0.01, |t| *t.get_ref());
            if !(target_e.is_finite() && target_e >= 0.0) {
                return loc.err("target_e", s.target_e.as_ref().map(|t| t.span()), "must be finite and >= 0");
            }
            Some(SweepSpec {
                target_e,
                max_points,
                horizon: s.horizon.as_ref().map(|h| *h.get_ref()),
                axes,
            })
        }
    };

    Ok(RunConfig {
        spec,
        scenario,
        environment,
        dx,
        time,
        rtol,
        output,
        variants,
        sweep,
        constants: *constants,
    })
}

/// Sets one sweep parameter on copies of the base scenario and environment.
pub fn apply_axis(
    spec: &ScenarioSpec,
    env: &EnvironmentSpec,
    name: &str,
    value: &Quantity,
) -> Result<(ScenarioSpec, EnvironmentSpec), String> {
    let mut s = spec.clone();
    let mut e = *env;
    let plain = || units::to_si(value, Dimension::Dimensionless);
    match name {
        "mass" => s.mass = units::to_si(value, Dimension::Mass)?,
        "omega" => s.omega = units::to_si(value, Dimension::Frequency)?,
        "separation" => s.separation = units::separation(value)?,
        "density" => s.density = Some(plain()?),
        "nbar" => s.initial.nbar = plain()?,
        "s" => {
            let v = plain()?;
            s.initial.s_a = v;
            s.initial.s_b = v;
        }
        "s_a" => s.initial.s_a = plain()?,
        "s_b" => s.initial.s_b = plain()?,
        "q" => s.damping = Damping::Quality(plain()?),
        "gamma" => {
            let g = plain()?;
            s.damping = if g == 0.0 { Damping::None } else { Damping::Rate(g) };
        }
        "temperature" => e.temperature = plain()?,
        "gas_density" => e.gas_density = plain()?,
        "f0" => e.f0 = plain()?,
        other => return Err(format!("unknown sweep parameter `{other}`")),
    }
    Ok((s, e))
}
