//! Executable certificates: uniqueness of `Y³` among isolated data, the weak
//! classification by full fixed point data, and recovery of full data from small data.
//!
//! A certificate states that the data meets the hypotheses of the classification; it
//! never constructs a symplectomorphism.

use std::fmt;

use thiserror::Error;

use crate::lattice::LatticeForm;
use crate::rational::{format_rational, Rational};
use crate::rigidity::{fact, Certification};
use crate::scenario::{
    compare_fixed_point_data, isolated_value_lattice_check, validate_structure, Comparison, ComponentKind,
    FixedPointData, LevelLattice, Mode, ValueLatticeReport, AMBIENT_DIM,
};
use crate::walk::{run_walk, WalkError, WalkTrace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub name: String,
    pub lambdas: [Rational; 3],
    pub trace: WalkTrace,
    pub certification: Certification,
}

impl Certificate {
    /// `(fact id, citation)` for every rigidity fact the walk used.
    pub fn citations(&self) -> Vec<(String, &'static str)> {
        self.certification
            .facts
            .iter()
            .map(|id| (id.clone(), fact(id).map_or("", |f| f.citation)))
            .collect()
    }

    pub fn statement(&self) -> String {
        let [a, b, c] = &self.lambdas;
        format!(
            "isomorphic to Y3({},{},{})",
            format_rational(a),
            format_rational(b),
            format_rational(c)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefusalStage {
    Precondition,
    Validation,
    ValueLattice,
    Walk,
    Maximum,
    Certification,
}

impl fmt::Display for RefusalStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefusalStage::Precondition => "precondition",
            RefusalStage::Validation => "validation",
            RefusalStage::ValueLattice => "value_lattice",
            RefusalStage::Walk => "walk",
            RefusalStage::Maximum => "maximum",
            RefusalStage::Certification => "certification",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refusal {
    pub stage: RefusalStage,
    pub reason: String,
    pub internal: bool,
}

impl fmt::Display for Refusal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "refused at {}: {}", self.stage, self.reason)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum ClassifyOutcome {
    Certificate(Certificate),
    Refusal(Refusal),
}

impl ClassifyOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            ClassifyOutcome::Certificate(c) => Some(c),
            ClassifyOutcome::Refusal(_) => None,
        }
    }

    pub fn refusal(&self) -> Option<&Refusal> {
        match self {
            ClassifyOutcome::Certificate(_) => None,
            ClassifyOutcome::Refusal(r) => Some(r),
        }
    }
}

fn refuse(stage: RefusalStage, reason: impl Into<String>) -> ClassifyOutcome {
    ClassifyOutcome::Refusal(Refusal {
        stage,
        reason: reason.into(),
        internal: false,
    })
}

fn walk_refusal(err: WalkError) -> ClassifyOutcome {
    let internal = err.is_invariant_breach();
    let stage = match err {
        WalkError::InvalidData(_) => RefusalStage::Validation,
        _ => RefusalStage::Walk,
    };
    ClassifyOutcome::Refusal(Refusal {
        stage,
        reason: err.to_string(),
        internal,
    })
}

/// Certifies that isolated data is that of `Y³(λ₁,λ₂,λ₃)`, or names the first failing check.
pub fn classify_isolated(data: &FixedPointData) -> ClassifyOutcome {
    if data.dim() != AMBIENT_DIM || !data.is_isolated() {
        return refuse(
            RefusalStage::Precondition,
            "requires isolated fixed points in dimension 6",
        );
    }
    let report = validate_structure(data);
    if let Some(v) = report.violations.first() {
        return refuse(RefusalStage::Validation, v.to_string());
    }
    let lambdas = match isolated_value_lattice_check(data) {
        ValueLatticeReport::Pass { lambdas } => [lambdas[0], lambdas[1], lambdas[2]],
        ValueLatticeReport::Fail { reason } | ValueLatticeReport::NotApplicable { reason } => {
            return refuse(RefusalStage::ValueLattice, reason)
        }
    };
    let trace = match run_walk(data) {
        Ok(t) => t,
        Err(e) => return walk_refusal(e),
    };
    if let Some(r) = trace.final_report.as_ref().filter(|r| !r.passed) {
        return refuse(RefusalStage::Maximum, r.failures.join("; "));
    }
    let certification = trace.certification();
    if !certification.is_certified() {
        return refuse(RefusalStage::Certification, uncertified_reason(&trace));
    }
    ClassifyOutcome::Certificate(Certificate {
        name: data.name().to_string(),
        lambdas,
        trace,
        certification,
    })
}

pub fn uncertified_reason(trace: &WalkTrace) -> String {
    if trace.forced_uncertified {
        "extremal 4-dimensional data is taken at face value".into()
    } else {
        format!("rigidity along the walk is only {}", trace.certification().minimum)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("bootstrap refused at {}: {reason}", format_rational(.level))]
pub struct BootstrapError {
    pub level: Rational,
    pub reason: String,
}

/// Recovers the Euler class below every interior level by replaying the walk.
pub fn small_data_bootstrap(data: &FixedPointData) -> Result<FixedPointData, BootstrapError> {
    let at_min = |reason: String| BootstrapError {
        level: data.minimum().value,
        reason,
    };
    if let Some(c) = data
        .interior()
        .iter()
        .flat_map(|l| &l.components)
        .find(|c| !matches!(c.kind, ComponentKind::Point | ComponentKind::Surface))
    {
        return Err(at_min(format!("interior {:?} components are not supported", c.kind)));
    }
    let trace = run_walk(data).map_err(|e| match e {
        WalkError::Wall { value, source } => BootstrapError {
            level: value,
            reason: source.to_string(),
        },
        other => at_min(other.to_string()),
    })?;
    if let Some(r) = trace.final_report.as_ref().filter(|r| !r.passed) {
        return Err(BootstrapError {
            level: r.value,
            reason: r.failures.join("; "),
        });
    }
    let mut levels = data.levels().to_vec();
    let n = levels.len();
    for (i, level) in levels.iter_mut().enumerate().take(n - 1).skip(1) {
        // states[i - 1] is the interval just below interior level i.
        let arriving = &trace.states[i - 1];
        let kind = match arriving.lattice().form() {
            LatticeForm::BlowupPlane { .. } => LevelLattice::BlowupPlane,
            LatticeForm::Hyperbolic => LevelLattice::Hyperbolic,
            LatticeForm::General => {
                return Err(BootstrapError {
                    level: level.value,
                    reason: format!("reduced space {} has no normal form", arriving.lattice()),
                })
            }
        };
        let declares_classes = level.components.iter().any(|c| c.reduced_class.is_some());
        if declares_classes && kind != level.lattice {
            return Err(BootstrapError {
                level: level.value,
                reason: format!(
                    "classes declared in a {:?} basis, reduced space is {}",
                    level.lattice,
                    arriving.lattice()
                ),
            });
        }
        level.lattice = kind;
        level.euler_minus = Some(arriving.euler.class.clone());
    }
    data.with_levels(Mode::Full, levels).map_err(|e| at_min(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeakVerdict {
    NotApplicable { reason: String },
    DistinctData { witness: String },
    Inconclusive { reason: String },
    Isomorphic { facts: Vec<String> },
}

impl WeakVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            WeakVerdict::NotApplicable { .. } => "not_applicable",
            WeakVerdict::DistinctData { .. } => "distinct_data",
            WeakVerdict::Inconclusive { .. } => "inconclusive",
            WeakVerdict::Isomorphic { .. } => "isomorphic_certified",
        }
    }
}

impl fmt::Display for WeakVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeakVerdict::NotApplicable { reason } => write!(f, "not applicable: {reason}"),
            WeakVerdict::DistinctData { witness } => write!(f, "distinct data: {witness}"),
            WeakVerdict::Inconclusive { reason } => write!(f, "inconclusive: {reason}"),
            WeakVerdict::Isomorphic { facts } => write!(f, "isomorphic (certified; facts {})", facts.join(", ")),
        }
    }
}

/// Same full fixed point data plus rigidity along both walks gives isomorphism.
pub fn weak_classification_check(d1: &FixedPointData, d2: &FixedPointData) -> WeakVerdict {
    for (tag, d) in [("first", d1), ("second", d2)] {
        if d.mode() != Mode::Full {
            return WeakVerdict::NotApplicable {
                reason: format!("{tag} data is not in full mode"),
            };
        }
    }
    match compare_fixed_point_data(d1, d2) {
        Err(e) => return WeakVerdict::NotApplicable { reason: e.to_string() },
        Ok(Comparison::Different { witness }) => return WeakVerdict::DistinctData { witness },
        Ok(Comparison::Same) => {}
    }
    if let Some(level) = d1.levels().iter().find(|l| !l.is_simple()) {
        return WeakVerdict::NotApplicable {
            reason: format!("non-simple level at {}", format_rational(&level.value)),
        };
    }
    let mut facts: Vec<String> = Vec::new();
    for (tag, d) in [("first", d1), ("second", d2)] {
        let trace = match run_walk(d) {
            Ok(t) => t,
            Err(e) => {
                return WeakVerdict::NotApplicable {
                    reason: format!("{tag} walk failed: {e}"),
                }
            }
        };
        if !trace.passed() {
            return WeakVerdict::NotApplicable {
                reason: format!("{tag} walk does not close at the maximum"),
            };
        }
        let cert = trace.certification();
        if !cert.is_certified() {
            return WeakVerdict::Inconclusive {
                reason: format!("{tag} walk is uncertified ({})", uncertified_reason(&trace)),
            };
        }
        for f in cert.facts {
            if !facts.contains(&f) {
                facts.push(f);
            }
        }
    }
    facts.sort();
    WeakVerdict::Isomorphic { facts }
}
