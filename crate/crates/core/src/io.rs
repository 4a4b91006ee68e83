//! Scenario files and deterministic text, CSV and SVG emitters.
//!
//! A scenario file is strict JSON: unknown keys are rejected and rationals are
//! written as `"p/q"` strings (integers are accepted as plain numbers).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifyOutcome, WeakVerdict};
use crate::lattice::{LatticeClass, RationalClass};
use crate::rational::{format_rational, serde_string, to_f64, Rational};
use crate::scenario::{
    ComponentKind, CriticalDatum, DivisorData, FixedComponent, FixedPointData, LevelLattice, Mode, ValidationReport,
    ValueLatticeReport,
};
use crate::walk::WalkTrace;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
struct RationalText(#[serde(with = "serde_string")] Rational);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub dim: u32,
    pub mode: Mode,
    pub levels: Vec<LevelFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelFile {
    #[serde(with = "serde_string")]
    pub value: Rational,
    pub components: Vec<ComponentFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_minus: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "is_default_lattice")]
    pub lattice: LevelLattice,
}

fn is_default_lattice(l: &LevelLattice) -> bool {
    *l == LevelLattice::default()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub kind: ComponentKind,
    pub index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genus: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_class: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_split: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_euler: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<Vec<RationalText>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_class: Option<Vec<i64>>,
}

impl ComponentFile {
    fn to_component(&self) -> Result<FixedComponent, IoError> {
        let mut c = match self.kind {
            ComponentKind::Point => FixedComponent::point(self.index),
            ComponentKind::Surface => {
                let class = self
                    .reduced_class
                    .clone()
                    .ok_or_else(|| IoError::Schema("surface component needs \"reduced_class\"".into()))?;
                FixedComponent::surface(self.index, self.genus.unwrap_or(0), LatticeClass::new(class))
            }
            ComponentKind::Divisor => {
                let missing = |key: &str| IoError::Schema(format!("divisor component needs \"{key}\""));
                let data = DivisorData {
                    gram: self.gram.clone().ok_or_else(|| missing("gram"))?,
                    canonical: self.canonical.clone().map(LatticeClass::new),
                    omega: RationalClass::new(
                        self.omega
                            .as_ref()
                            .ok_or_else(|| missing("omega"))?
                            .iter()
                            .map(|q| q.0)
                            .collect(),
                    ),
                    euler: LatticeClass::new(self.euler_class.clone().ok_or_else(|| missing("euler_class"))?),
                };
                FixedComponent::divisor(self.index, data)
            }
        };
        if self.kind != ComponentKind::Divisor
            && (self.gram.is_some() || self.canonical.is_some() || self.omega.is_some() || self.euler_class.is_some())
        {
            return Err(IoError::Schema(
                "gram/canonical/omega/euler_class are only allowed on divisor components".into(),
            ));
        }
        if self.kind == ComponentKind::Point {
            c.genus = self.genus;
            c.reduced_class = self.reduced_class.clone().map(LatticeClass::new);
        }
        if let Some([neg, pos]) = self.normal_split {
            c.normal_split = (neg, pos);
        }
        c.normal_euler = self.normal_euler;
        Ok(c)
    }

    fn from_component(c: &FixedComponent) -> Self {
        let d = c.divisor.as_ref();
        ComponentFile {
            kind: c.kind,
            index: c.index,
            genus: c.genus,
            reduced_class: c.reduced_class.as_ref().map(|x| x.coeffs().to_vec()),
            normal_split: Some([c.normal_split.0, c.normal_split.1]),
            normal_euler: c.normal_euler,
            gram: d.map(|d| d.gram.clone()),
            canonical: d.and_then(|d| d.canonical.as_ref().map(|k| k.coeffs().to_vec())),
            omega: d.map(|d| d.omega.coeffs().iter().copied().map(RationalText).collect()),
            euler_class: d.map(|d| d.euler.coeffs().to_vec()),
        }
    }
}

impl ScenarioFile {
    pub fn to_data(&self) -> Result<FixedPointData, IoError> {
        if self.dim != 6 {
            return Err(IoError::Schema(format!("\"dim\" must be 6, got {}", self.dim)));
        }
        let levels = self
            .levels
            .iter()
            .map(|l| {
                let mut level = CriticalDatum::new(
                    l.value,
                    l.components
                        .iter()
                        .map(ComponentFile::to_component)
                        .collect::<Result<_, _>>()?,
                );
                level.euler_minus = l.euler_minus.clone().map(LatticeClass::new);
                level.lattice = l.lattice;
                Ok(level)
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        FixedPointData::new(self.name.clone(), self.dim, self.mode, levels).map_err(|e| IoError::Schema(e.to_string()))
    }

    pub fn from_data(data: &FixedPointData) -> Self {
        ScenarioFile {
            name: data.name().to_string(),
            dim: data.dim(),
            mode: data.mode(),
            levels: data
                .levels()
                .iter()
                .map(|l| LevelFile {
                    value: l.value,
                    components: l.components.iter().map(ComponentFile::from_component).collect(),
                    euler_minus: l.euler_minus.as_ref().map(|e| e.coeffs().to_vec()),
                    lattice: l.lattice,
                })
                .collect(),
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<FixedPointData, IoError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.to_data()
}

pub fn read_scenario(path: &std::path::Path) -> Result<FixedPointData, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn scenario_to_json(data: &FixedPointData) -> String {
    let mut s = serde_json::to_string_pretty(&ScenarioFile::from_data(data)).expect("scenario files serialize");
    s.push('\n');
    s
}

pub const TRACE_CSV_HEADER: &str = "interval_lo,interval_hi,k,exc_areas,euler_fingerprint,volume_poly,rigidity_status";

pub fn trace_text(trace: &WalkTrace) -> String {
    trace.to_string()
}

pub fn trace_csv(trace: &WalkTrace) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for s in &trace.states {
        let iv = s.interval();
        let areas: Vec<String> = s
            .exceptional_areas()
            .iter()
            .map(|(c, p)| format!("{}={}", s.lattice().class_name(c), p))
            .collect();
        let euler = crate::fingerprint::ClassFingerprint::of(s.lattice(), &s.euler.class)
            .map(|f| f.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_rational(&iv.lo),
            format_rational(&iv.hi.unwrap_or(trace.end.value)),
            s.k(),
            areas.join(";"),
            euler,
            s.volume(),
            s.rigidity.status
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileSample {
    pub t: Rational,
    pub volume: Rational,
    pub k: usize,
}

/// `samples` equally spaced points from the minimum to the maximum, both included.
pub fn dh_profile(trace: &WalkTrace, samples: usize) -> Vec<ProfileSample> {
    let n = samples.max(2);
    let (lo, hi) = (trace.start.value, trace.end.value);
    (0..n)
        .map(|i| {
            let t = lo + (hi - lo) * Rational::new(i as i128, (n - 1) as i128);
            let idx = trace.interval_index(&t).expect("sample inside the trace");
            let state = &trace.states[idx];
            ProfileSample {
                t,
                volume: state.volume().eval(&t),
                k: state.k(),
            }
        })
        .collect()
}

pub fn dh_csv(samples: &[ProfileSample]) -> String {
    let mut out = String::from("t,volume,k\n");
    for s in samples {
        let _ = writeln!(out, "{},{},{}", format_rational(&s.t), format_rational(&s.volume), s.k);
    }
    out
}

pub fn dh_text(trace: &WalkTrace, samples: &[ProfileSample]) -> String {
    let mut out = format!("DH volume profile of {}\n", trace.name);
    for s in &trace.states {
        let iv = s.interval();
        let _ = writeln!(
            out,
            "on ({}, {}): vol(t) = {}",
            format_rational(&iv.lo),
            format_rational(&iv.hi.unwrap_or(trace.end.value)),
            s.volume()
        );
    }
    for s in samples {
        let _ = writeln!(
            out,
            "t={} volume={} k={}",
            format_rational(&s.t),
            format_rational(&s.volume),
            s.k
        );
    }
    out
}

/// Static plot of volume against `t`, with dashed markers at the walls.
pub fn dh_svg(trace: &WalkTrace, samples: &[ProfileSample]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    let lo = to_f64(&trace.start.value);
    let hi = to_f64(&trace.end.value);
    let vmax = samples
        .iter()
        .map(|s| to_f64(&s.volume))
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    let x = |t: f64| PAD + (t - lo) / (hi - lo) * (W - 2.0 * PAD);
    let y = |v: f64| H - PAD - v / vmax * (H - 2.0 * PAD);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<title>DH volume of {}</title>"#, trace.name);
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
        b = H - PAD
    );
    for w in trace.walls() {
        let xw = x(to_f64(&w));
        let _ = writeln!(
            out,
            r#"<line x1="{xw:.2}" y1="{PAD}" x2="{xw:.2}" y2="{b}" stroke="gray" stroke-dasharray="4 3"/>"#,
            b = H - PAD
        );
        let _ = writeln!(
            out,
            r#"<text x="{xw:.2}" y="{ty}" font-size="10" text-anchor="middle">{}</text>"#,
            format_rational(&w),
            ty = H - PAD + 14.0
        );
    }
    let points: Vec<String> = samples
        .iter()
        .map(|s| format!("{:.2},{:.2}", x(to_f64(&s.t)), y(to_f64(&s.volume))))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        points.join(" ")
    );
    out.push_str("</svg>\n");
    out
}

pub fn validation_text(report: &ValidationReport, values: Option<&ValueLatticeReport>) -> String {
    let mut out = report.to_string();
    match values {
        Some(ValueLatticeReport::Pass { lambdas }) => {
            let ls: Vec<String> = lambdas.iter().map(format_rational).collect();
            let _ = writeln!(out, "value lattice: pass (lambda = {})", ls.join(","));
        }
        Some(ValueLatticeReport::Fail { reason }) => {
            let _ = writeln!(out, "value lattice: fail: {reason}");
        }
        Some(ValueLatticeReport::NotApplicable { .. }) | None => {}
    }
    out
}

pub fn certificate_text(outcome: &ClassifyOutcome) -> String {
    match outcome {
        ClassifyOutcome::Certificate(c) => {
            let mut out = format!("certificate: {} {}\n", c.name, c.statement());
            let ls: Vec<String> = c.lambdas.iter().map(format_rational).collect();
            let _ = writeln!(out, "lambda = ({})", ls.join(","));
            let _ = writeln!(out, "rigidity minimum: {}", c.certification.minimum);
            for (id, cite) in c.citations() {
                let _ = writeln!(out, "uses {id}: {cite}");
            }
            out.push_str(&trace_text(&c.trace));
            out
        }
        ClassifyOutcome::Refusal(r) => format!("{r}\n"),
    }
}

pub fn weak_verdict_text(verdict: &WeakVerdict) -> String {
    format!("{}: {verdict}\n", verdict.tag())
}
