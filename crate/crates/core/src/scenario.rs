//! Fixed point data of a semi-free Hamiltonian circle action on a closed 6-manifold.
//!
//! Weights are not stored: semi-freeness makes them `±1`, so the normal data of a
//! component is just the complex ranks of its negative and positive normal parts.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingerprint::ClassFingerprint;
use crate::lattice::{IntersectionLattice, LatticeClass, LatticeError, RationalClass};
use crate::rational::{format_rational, Rational};

pub const AMBIENT_DIM: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("small fixed point data cannot carry Euler classes (level {0})")]
    EulerInSmallMode(String),
    #[error("conflicting Euler classes declared for level {0}")]
    ConflictingEuler(String),
    #[error("conflicting lattice kinds declared for level {0}")]
    ConflictingLattice(String),
    #[error("no levels declared")]
    Empty,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Point,
    Surface,
    /// A 4-dimensional component; only admissible as an extremum.
    Divisor,
}

impl ComponentKind {
    pub fn real_dim(self) -> u32 {
        match self {
            ComponentKind::Point => 0,
            ComponentKind::Surface => 2,
            ComponentKind::Divisor => 4,
        }
    }

    /// Complex codimension in the 6-manifold.
    pub fn complex_codim(self) -> u32 {
        (AMBIENT_DIM - self.real_dim()) / 2
    }
}

/// Declared data of a 4-dimensional extremal component, taken at face value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorData {
    pub gram: Vec<Vec<i64>>,
    pub canonical: Option<LatticeClass>,
    /// Class of the restricted symplectic form.
    pub omega: RationalClass,
    /// Euler class of the reduction bundle on the adjacent regular levels.
    pub euler: LatticeClass,
}

impl DivisorData {
    pub fn lattice(&self) -> Result<IntersectionLattice, LatticeError> {
        IntersectionLattice::general(self.gram.clone(), None, self.canonical.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedComponent {
    pub kind: ComponentKind,
    /// Morse index of the moment map at the component.
    pub index: u32,
    pub genus: Option<u32>,
    /// Class of the component's image in the reduced space at its level.
    pub reduced_class: Option<LatticeClass>,
    /// Complex ranks of the negative and positive normal bundles.
    pub normal_split: (u32, u32),
    pub normal_euler: Option<i64>,
    pub divisor: Option<DivisorData>,
}

impl FixedComponent {
    pub fn point(index: u32) -> Self {
        FixedComponent {
            kind: ComponentKind::Point,
            index,
            genus: None,
            reduced_class: None,
            normal_split: (index / 2, 3u32.saturating_sub(index / 2)),
            normal_euler: None,
            divisor: None,
        }
    }

    pub fn surface(index: u32, genus: u32, reduced_class: LatticeClass) -> Self {
        FixedComponent {
            kind: ComponentKind::Surface,
            index,
            genus: Some(genus),
            reduced_class: Some(reduced_class),
            normal_split: (index / 2, 2u32.saturating_sub(index / 2)),
            normal_euler: None,
            divisor: None,
        }
    }

    pub fn divisor(index: u32, data: DivisorData) -> Self {
        FixedComponent {
            kind: ComponentKind::Divisor,
            index,
            genus: None,
            reduced_class: None,
            normal_split: (index / 2, 1u32.saturating_sub(index / 2)),
            normal_euler: None,
            divisor: Some(data),
        }
    }

    /// Morse coindex: `2·codim - index`.
    pub fn coindex(&self) -> i64 {
        2 * self.kind.complex_codim() as i64 - self.index as i64
    }

    /// Index-2 component: a point blow-up or a surface shift.
    pub fn raises(&self) -> bool {
        self.index == 2
    }
}

/// Which normal form the declared classes of a level are written in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelLattice {
    #[default]
    BlowupPlane,
    Hyperbolic,
}

impl LevelLattice {
    pub fn lattice(self, rank: usize) -> Result<IntersectionLattice, ScenarioError> {
        match self {
            LevelLattice::BlowupPlane if rank >= 1 => Ok(IntersectionLattice::blowup_plane(rank - 1)),
            LevelLattice::Hyperbolic if rank == 2 => Ok(IntersectionLattice::hyperbolic()),
            _ => Err(ScenarioError::Precondition(format!(
                "no {self:?} lattice of rank {rank}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalDatum {
    #[serde(with = "crate::rational::serde_string")]
    pub value: Rational,
    pub components: Vec<FixedComponent>,
    /// Euler class of the reduction bundle just below the level (full mode only).
    pub euler_minus: Option<LatticeClass>,
    pub lattice: LevelLattice,
}

impl CriticalDatum {
    pub fn new(value: Rational, components: Vec<FixedComponent>) -> Self {
        CriticalDatum {
            value,
            components,
            euler_minus: None,
            lattice: LevelLattice::BlowupPlane,
        }
    }

    /// All components share one index.
    pub fn is_simple(&self) -> bool {
        self.components.windows(2).all(|w| w[0].index == w[1].index)
    }

    /// Rank of the declared classes at this level, if any are declared.
    pub fn declared_rank(&self) -> Option<usize> {
        self.euler_minus.as_ref().map(LatticeClass::rank).or_else(|| {
            self.components
                .iter()
                .find_map(|c| c.reduced_class.as_ref().map(LatticeClass::rank))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    Small,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPointData {
    name: String,
    dim: u32,
    mode: Mode,
    levels: Vec<CriticalDatum>,
}

impl FixedPointData {
    /// Sorts levels by value and merges levels with equal values.
    pub fn new(
        name: impl Into<String>,
        dim: u32,
        mode: Mode,
        levels: Vec<CriticalDatum>,
    ) -> Result<Self, ScenarioError> {
        if levels.is_empty() {
            return Err(ScenarioError::Empty);
        }
        let mut merged: BTreeMap<Rational, CriticalDatum> = BTreeMap::new();
        for level in levels {
            if mode == Mode::Small && level.euler_minus.is_some() {
                return Err(ScenarioError::EulerInSmallMode(format_rational(&level.value)));
            }
            match merged.get_mut(&level.value) {
                None => {
                    merged.insert(level.value, level);
                }
                Some(existing) => {
                    match (&existing.euler_minus, level.euler_minus) {
                        (Some(a), Some(b)) if *a != b => {
                            return Err(ScenarioError::ConflictingEuler(format_rational(&existing.value)))
                        }
                        (None, Some(b)) => existing.euler_minus = Some(b),
                        _ => {}
                    }
                    if existing.lattice != level.lattice {
                        return Err(ScenarioError::ConflictingLattice(format_rational(&existing.value)));
                    }
                    existing.components.extend(level.components);
                }
            }
        }
        Ok(FixedPointData {
            name: name.into(),
            dim,
            mode,
            levels: merged.into_values().collect(),
        })
    }

    /// Small fixed point data of `S²×S²×S²` with the diagonal action and sphere areas `λ`.
    pub fn y3(l1: Rational, l2: Rational, l3: Rational) -> Self {
        let mut levels = vec![CriticalDatum::new(
            Rational::from_integer(0),
            vec![FixedComponent::point(0)],
        )];
        for l in [l1, l2, l3] {
            levels.push(CriticalDatum::new(l, vec![FixedComponent::point(2)]));
        }
        for (a, b) in [(l1, l2), (l1, l3), (l2, l3)] {
            levels.push(CriticalDatum::new(a + b, vec![FixedComponent::point(4)]));
        }
        levels.push(CriticalDatum::new(l1 + l2 + l3, vec![FixedComponent::point(6)]));
        let name = format!(
            "Y3({},{},{})",
            format_rational(&l1),
            format_rational(&l2),
            format_rational(&l3)
        );
        FixedPointData::new(name, AMBIENT_DIM, Mode::Small, levels).expect("small-mode levels")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn levels(&self) -> &[CriticalDatum] {
        &self.levels
    }

    pub fn minimum(&self) -> &CriticalDatum {
        &self.levels[0]
    }

    pub fn maximum(&self) -> &CriticalDatum {
        self.levels.last().expect("nonempty by construction")
    }

    pub fn interior(&self) -> &[CriticalDatum] {
        if self.levels.len() < 2 {
            &[]
        } else {
            &self.levels[1..self.levels.len() - 1]
        }
    }

    pub fn max_value(&self) -> Rational {
        self.maximum().value
    }

    pub fn is_isolated(&self) -> bool {
        self.levels
            .iter()
            .all(|l| l.components.iter().all(|c| c.kind == ComponentKind::Point))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Replaces the declared levels (re-sorting and re-merging).
    pub fn with_levels(&self, mode: Mode, levels: Vec<CriticalDatum>) -> Result<Self, ScenarioError> {
        FixedPointData::new(self.name.clone(), self.dim, mode, levels)
    }

    /// Drops every Euler class.
    pub fn to_small(&self) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|l| CriticalDatum {
                euler_minus: None,
                ..l.clone()
            })
            .collect();
        FixedPointData {
            mode: Mode::Small,
            levels,
            ..self.clone()
        }
    }

    /// Data of the same manifold with moment map `max - H`.
    ///
    /// Only point components are supported: surface classes would have to be
    /// transported into the reversed walk's basis, which has no canonical choice.
    pub fn time_reversed(&self) -> Result<Self, ScenarioError> {
        let total = self.max_value();
        let mut levels = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            let mut comps = Vec::with_capacity(level.components.len());
            for c in &level.components {
                if c.kind != ComponentKind::Point {
                    return Err(ScenarioError::Unsupported(
                        "time reversal of non-isolated fixed point data".into(),
                    ));
                }
                let index = (2 * c.kind.complex_codim()).saturating_sub(c.index);
                comps.push(FixedComponent {
                    index,
                    normal_split: (c.normal_split.1, c.normal_split.0),
                    ..c.clone()
                });
            }
            levels.push(CriticalDatum::new(total - level.value, comps));
        }
        FixedPointData::new(format!("{}~reversed", self.name), self.dim, Mode::Small, levels)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    WrongDimension { dim: u32 },
    TooFewLevels,
    UnsortedLevels,
    MinimumNotZero,
    MinimumNotUnique { count: usize },
    MinimumIndexNonzero { index: u32 },
    MaximumNotUnique { count: usize },
    MaximumCoindexNonzero { coindex: i64 },
    OddIndex { index: u32 },
    IndexOutOfRange { index: u32 },
    NormalSplitMismatch { split: (u32, u32), index: u32 },
    ExtremalIndexInInterior { index: u32 },
    InteriorIndex { index: u32 },
    DivisorInInterior,
    DivisorDataMissing,
    MissingReducedClass,
    UnexpectedSurfaceData,
    MissingEuler,
    EulerAtExtremum,
    ClassRankMismatch { expected: usize, found: usize },
    BadLevelLattice { detail: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(default, with = "opt_value")]
    pub level: Option<Rational>,
    pub violation: ViolationKind,
}

mod opt_value {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rational::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(v) = &self.level {
            write!(f, "level {}: ", format_rational(v))?;
        }
        use ViolationKind::*;
        match &self.violation {
            WrongDimension { dim } => write!(f, "ambient dimension must be 6, got {dim}"),
            TooFewLevels => write!(f, "need at least a minimum and a maximum level"),
            UnsortedLevels => write!(f, "critical values must be strictly increasing"),
            MinimumNotZero => write!(f, "minimum value must be 0"),
            MinimumNotUnique { count } => write!(f, "minimum must be a single component, found {count}"),
            MinimumIndexNonzero { index } => write!(f, "minimum must have index 0, found {index}"),
            MaximumNotUnique { count } => write!(f, "maximum must be a single component, found {count}"),
            MaximumCoindexNonzero { coindex } => write!(f, "maximum must have coindex 0, found {coindex}"),
            OddIndex { index } => write!(f, "index {index} is odd"),
            IndexOutOfRange { index } => write!(f, "index {index} exceeds twice the codimension"),
            NormalSplitMismatch { split, index } => write!(
                f,
                "normal split ({},{}) inconsistent with index {index} and codimension",
                split.0, split.1
            ),
            ExtremalIndexInInterior { index } => write!(f, "non-extremal component has extremal index {index}"),
            InteriorIndex { index } => write!(f, "non-extremal component must have index 2 or 4, found {index}"),
            DivisorInInterior => write!(f, "4-dimensional components can only be extremal"),
            DivisorDataMissing => write!(f, "4-dimensional component lacks gram/omega/euler data"),
            MissingReducedClass => write!(f, "surface component lacks a reduced class"),
            UnexpectedSurfaceData => write!(f, "point component carries genus or reduced class"),
            MissingEuler => write!(f, "full-mode level lacks euler_minus"),
            EulerAtExtremum => write!(f, "extremal level carries euler_minus"),
            ClassRankMismatch { expected, found } => {
                write!(f, "declared classes have inconsistent ranks ({expected} vs {found})")
            }
            BadLevelLattice { detail } => write!(f, "{detail}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, level: Option<Rational>, violation: ViolationKind) {
        self.violations.push(Violation { level, violation });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok: no violations");
        }
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        Ok(())
    }
}

/// Structural checks that need no walk.
pub fn validate_structure(data: &FixedPointData) -> ValidationReport {
    let mut report = ValidationReport::default();
    if data.dim != AMBIENT_DIM {
        report.push(None, ViolationKind::WrongDimension { dim: data.dim });
    }
    let levels = data.levels();
    if levels.len() < 2 {
        report.push(None, ViolationKind::TooFewLevels);
        return report;
    }
    if levels.windows(2).any(|w| w[0].value >= w[1].value) {
        report.push(None, ViolationKind::UnsortedLevels);
    }

    let min = data.minimum();
    if min.value != Rational::from_integer(0) {
        report.push(Some(min.value), ViolationKind::MinimumNotZero);
    }
    if min.components.len() != 1 {
        report.push(
            Some(min.value),
            ViolationKind::MinimumNotUnique {
                count: min.components.len(),
            },
        );
    }
    for c in &min.components {
        if c.index != 0 {
            report.push(Some(min.value), ViolationKind::MinimumIndexNonzero { index: c.index });
        }
    }
    let max = data.maximum();
    if max.components.len() != 1 {
        report.push(
            Some(max.value),
            ViolationKind::MaximumNotUnique {
                count: max.components.len(),
            },
        );
    }
    for c in &max.components {
        if c.coindex() != 0 {
            report.push(
                Some(max.value),
                ViolationKind::MaximumCoindexNonzero { coindex: c.coindex() },
            );
        }
    }

    let last = levels.len() - 1;
    for (i, level) in levels.iter().enumerate() {
        let at = Some(level.value);
        let extremal = i == 0 || i == last;
        for c in &level.components {
            check_component(&mut report, at, c, extremal);
        }
        if extremal && level.euler_minus.is_some() {
            report.push(at, ViolationKind::EulerAtExtremum);
        }
        if !extremal && data.mode == Mode::Full && level.euler_minus.is_none() {
            report.push(at, ViolationKind::MissingEuler);
        }
        let ranks: Vec<usize> = level
            .euler_minus
            .iter()
            .chain(level.components.iter().filter_map(|c| c.reduced_class.as_ref()))
            .map(LatticeClass::rank)
            .collect();
        if let Some(first) = ranks.first() {
            if let Some(other) = ranks.iter().find(|r| *r != first) {
                report.push(
                    at,
                    ViolationKind::ClassRankMismatch {
                        expected: *first,
                        found: *other,
                    },
                );
            } else if let Err(e) = level.lattice.lattice(*first) {
                report.push(at, ViolationKind::BadLevelLattice { detail: e.to_string() });
            }
        }
    }
    report
}

fn check_component(report: &mut ValidationReport, at: Option<Rational>, c: &FixedComponent, extremal: bool) {
    let codim = c.kind.complex_codim();
    if !c.index.is_multiple_of(2) {
        report.push(at, ViolationKind::OddIndex { index: c.index });
    }
    if c.index > 2 * codim {
        report.push(at, ViolationKind::IndexOutOfRange { index: c.index });
    }
    let (neg, pos) = c.normal_split;
    if neg + pos != codim || 2 * neg != c.index {
        report.push(
            at,
            ViolationKind::NormalSplitMismatch {
                split: c.normal_split,
                index: c.index,
            },
        );
    }
    if !extremal {
        if c.index == 0 || c.coindex() == 0 {
            report.push(at, ViolationKind::ExtremalIndexInInterior { index: c.index });
        } else if c.index != 2 && c.index != 4 {
            report.push(at, ViolationKind::InteriorIndex { index: c.index });
        }
        if c.kind == ComponentKind::Divisor {
            report.push(at, ViolationKind::DivisorInInterior);
        }
    }
    match c.kind {
        ComponentKind::Point => {
            if c.genus.is_some() || c.reduced_class.is_some() {
                report.push(at, ViolationKind::UnexpectedSurfaceData);
            }
        }
        ComponentKind::Surface => {
            if c.reduced_class.is_none() && !extremal {
                report.push(at, ViolationKind::MissingReducedClass);
            }
        }
        ComponentKind::Divisor => {
            if c.divisor.is_none() {
                report.push(at, ViolationKind::DivisorDataMissing);
            }
        }
    }
}

/// Outcome of checking the eight isolated critical values against the `Y³` pattern.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ValueLatticeReport {
    Pass {
        #[serde(with = "crate::rational::serde_string_vec")]
        lambdas: Vec<Rational>,
    },
    Fail {
        reason: String,
    },
    NotApplicable {
        reason: String,
    },
}

impl ValueLatticeReport {
    pub fn passed(&self) -> bool {
        matches!(self, ValueLatticeReport::Pass { .. })
    }
}

/// Checks that the critical values of isolated data are
/// `{0, λᵢ, λᵢ+λⱼ, λ₁+λ₂+λ₃}` with indices `(0, 2, 4, 6)` respectively.
pub fn isolated_value_lattice_check(data: &FixedPointData) -> ValueLatticeReport {
    if data.dim != AMBIENT_DIM || !data.is_isolated() {
        return ValueLatticeReport::NotApplicable {
            reason: "requires isolated fixed points in dimension 6".into(),
        };
    }
    let mut actual: Vec<(u32, Rational)> = data
        .levels()
        .iter()
        .flat_map(|l| l.components.iter().map(move |c| (c.index, l.value)))
        .collect();
    actual.sort();
    let mut raising: Vec<Rational> = actual.iter().filter(|(i, _)| *i == 2).map(|(_, v)| *v).collect();
    if actual.len() != 8 || raising.len() != 3 {
        return ValueLatticeReport::Fail {
            reason: format!(
                "expected 8 fixed points with 3 of index 2, found {} with {} of index 2",
                actual.len(),
                raising.len()
            ),
        };
    }
    raising.sort();
    let [l1, l2, l3] = [raising[0], raising[1], raising[2]];
    let mut expected = [
        (0, Rational::from_integer(0)),
        (2, l1),
        (2, l2),
        (2, l3),
        (4, l1 + l2),
        (4, l1 + l3),
        (4, l2 + l3),
        (6, l1 + l2 + l3),
    ];
    expected.sort();
    if let Some((e, a)) = expected.iter().zip(&actual).find(|(e, a)| e != a) {
        return ValueLatticeReport::Fail {
            reason: format!(
                "expected index {} at {}, found index {} at {}",
                e.0,
                format_rational(&e.1),
                a.0,
                format_rational(&a.1)
            ),
        };
    }
    ValueLatticeReport::Pass {
        lambdas: vec![l1, l2, l3],
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComponentFingerprint {
    pub kind: ComponentKind,
    pub index: u32,
    pub genus: Option<u32>,
    pub normal_split: (u32, u32),
    pub normal_euler: Option<i64>,
    pub reduced_class: Option<ClassFingerprint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelFingerprint {
    pub value: Rational,
    pub components: Vec<ComponentFingerprint>,
    pub euler: Option<ClassFingerprint>,
}

pub fn level_fingerprint(level: &CriticalDatum) -> Result<LevelFingerprint, ScenarioError> {
    let lattice = level.declared_rank().map(|r| level.lattice.lattice(r)).transpose()?;
    let class_fp = |x: &LatticeClass| -> Result<ClassFingerprint, ScenarioError> {
        let lat = lattice.as_ref().expect("rank known when a class is declared");
        Ok(ClassFingerprint::of(lat, x)?)
    };
    let mut components = level
        .components
        .iter()
        .map(|c| {
            Ok(ComponentFingerprint {
                kind: c.kind,
                index: c.index,
                genus: c.genus,
                normal_split: c.normal_split,
                normal_euler: c.normal_euler,
                reduced_class: c.reduced_class.as_ref().map(&class_fp).transpose()?,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    components.sort();
    Ok(LevelFingerprint {
        value: level.value,
        components,
        euler: level.euler_minus.as_ref().map(&class_fp).transpose()?,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Comparison {
    Same,
    Different { witness: String },
}

impl Comparison {
    pub fn is_same(&self) -> bool {
        matches!(self, Comparison::Same)
    }
}

/// Compares fixed point data up to lattice isometry and component relabelling.
pub fn compare_fixed_point_data(d1: &FixedPointData, d2: &FixedPointData) -> Result<Comparison, ScenarioError> {
    for (tag, d) in [("first", d1), ("second", d2)] {
        let report = validate_structure(d);
        if !report.is_empty() {
            return Err(ScenarioError::Precondition(format!(
                "{tag} data does not validate: {}",
                report.violations[0]
            )));
        }
    }
    let different = |witness: String| Ok(Comparison::Different { witness });
    let values = |d: &FixedPointData| d.levels().iter().map(|l| l.value).collect::<Vec<_>>();
    if values(d1) != values(d2) {
        let show = |d: &FixedPointData| values(d).iter().map(format_rational).collect::<Vec<_>>().join(",");
        return different(format!("value multiset {{{}}} vs {{{}}}", show(d1), show(d2)));
    }
    if d1.mode != d2.mode {
        return different(format!("mode {:?} vs {:?}", d1.mode, d2.mode));
    }
    for (a, b) in d1.levels().iter().zip(d2.levels()) {
        let at = format_rational(&a.value);
        let fa = level_fingerprint(a)?;
        let fb = level_fingerprint(b)?;
        let indices = |f: &LevelFingerprint| {
            let mut v: Vec<u32> = f.components.iter().map(|c| c.index).collect();
            v.sort();
            v
        };
        if indices(&fa) != indices(&fb) {
            return different(format!("index multiset at {at}"));
        }
        let shape = |f: &LevelFingerprint| {
            f.components
                .iter()
                .map(|c| (c.kind, c.index, c.genus, c.normal_split, c.normal_euler))
                .collect::<Vec<_>>()
        };
        if shape(&fa) != shape(&fb) {
            return different(format!("component kinds/genera at {at}"));
        }
        if fa.components != fb.components {
            return different(format!("reduced class fingerprint at {at}"));
        }
        if fa.euler != fb.euler {
            let show = |f: &Option<ClassFingerprint>| f.as_ref().map_or_else(|| "none".into(), |x| x.to_string());
            return different(format!(
                "Euler fingerprint at {at}: {{{}}} vs {{{}}}",
                show(&fa.euler),
                show(&fb.euler)
            ));
        }
    }
    Ok(Comparison::Same)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn points(values: &[(i64, u32)]) -> FixedPointData {
        let levels = values
            .iter()
            .map(|(v, i)| CriticalDatum::new(int(*v), vec![FixedComponent::point(*i)]))
            .collect();
        FixedPointData::new("t", 6, Mode::Small, levels).unwrap()
    }

    #[test]
    fn y3_validates() {
        let d = FixedPointData::y3(int(2), int(3), int(4));
        assert!(validate_structure(&d).is_empty());
        assert_eq!(d.levels().len(), 8);
    }

    #[test]
    fn maximum_with_index_four_is_rejected() {
        let d = points(&[(0, 0), (1, 2), (2, 4)]);
        let report = validate_structure(&d);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v.violation, ViolationKind::MaximumCoindexNonzero { coindex: 2 })));
        assert!(report.to_string().contains("maximum must have coindex 0"));
    }

    #[test]
    fn same_index_multi_component_level_passes() {
        let levels = vec![
            CriticalDatum::new(int(0), vec![FixedComponent::point(0)]),
            CriticalDatum::new(int(1), vec![FixedComponent::point(2), FixedComponent::point(2)]),
            CriticalDatum::new(int(3), vec![FixedComponent::point(6)]),
        ];
        let d = FixedPointData::new("two", 6, Mode::Small, levels).unwrap();
        assert!(d.levels()[1].is_simple());
        assert!(validate_structure(&d).is_empty());
    }

    #[test]
    fn interior_extremal_index_is_flagged() {
        let d = points(&[(0, 0), (1, 0), (2, 6)]);
        assert!(validate_structure(&d)
            .violations
            .iter()
            .any(|v| matches!(v.violation, ViolationKind::ExtremalIndexInInterior { index: 0 })));
    }

    #[test]
    fn small_mode_rejects_euler() {
        let mut level = CriticalDatum::new(int(1), vec![FixedComponent::point(2)]);
        level.euler_minus = Some(LatticeClass::new(vec![-1]));
        assert!(matches!(
            FixedPointData::new("x", 6, Mode::Small, vec![level]),
            Err(ScenarioError::EulerInSmallMode(_))
        ));
    }

    #[test]
    fn equal_values_merge() {
        let d = FixedPointData::y3(int(1), int(1), int(1));
        assert_eq!(d.levels().len(), 4);
        assert_eq!(d.levels()[1].components.len(), 3);
    }

    #[test]
    fn value_lattice_examples() {
        let pattern = [0, 2, 2, 2, 4, 4, 4, 6];
        let build = |vals: [i64; 8]| {
            let levels = vals
                .iter()
                .zip(pattern)
                .map(|(v, i)| CriticalDatum::new(int(*v), vec![FixedComponent::point(i)]))
                .collect();
            FixedPointData::new("v", 6, Mode::Small, levels).unwrap()
        };
        assert_eq!(
            isolated_value_lattice_check(&build([0, 2, 3, 4, 5, 6, 7, 9])),
            ValueLatticeReport::Pass {
                lambdas: vec![int(2), int(3), int(4)]
            }
        );
        assert!(!isolated_value_lattice_check(&build([0, 2, 3, 4, 5, 6, 8, 9])).passed());
        assert_eq!(
            isolated_value_lattice_check(&build([0, 1, 1, 1, 2, 2, 2, 3])),
            ValueLatticeReport::Pass {
                lambdas: vec![int(1), int(1), int(1)]
            }
        );
    }

    #[test]
    fn value_lattice_not_applicable_with_surfaces() {
        let levels = vec![
            CriticalDatum::new(int(0), vec![FixedComponent::point(0)]),
            CriticalDatum::new(int(1), vec![FixedComponent::surface(2, 0, LatticeClass::new(vec![2]))]),
            CriticalDatum::new(int(2), vec![FixedComponent::point(6)]),
        ];
        let d = FixedPointData::new("conic", 6, Mode::Small, levels).unwrap();
        assert!(matches!(
            isolated_value_lattice_check(&d),
            ValueLatticeReport::NotApplicable { .. }
        ));
    }

    #[test]
    fn compare_permuted_and_perturbed() {
        let a = FixedPointData::y3(int(2), int(3), int(4));
        let b = FixedPointData::y3(int(4), int(2), int(3));
        assert!(compare_fixed_point_data(&a, &b).unwrap().is_same());
        let c = FixedPointData::y3(int(2), int(3), int(5));
        match compare_fixed_point_data(&a, &c).unwrap() {
            Comparison::Different { witness } => assert!(witness.starts_with("value multiset")),
            Comparison::Same => panic!("expected different"),
        }
    }

    #[test]
    fn time_reversal_of_y3_is_y3() {
        let d = FixedPointData::y3(int(1), int(2), int(4));
        let r = d.time_reversed().unwrap();
        assert!(validate_structure(&r).is_empty());
        assert!(compare_fixed_point_data(&d, &r).unwrap().is_same());
    }
}
