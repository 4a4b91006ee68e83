//! The walk engine: evolves `(lattice, class family, Euler class)` along the
//! moment interval, crossing critical levels by blow-up, blow-down and Euler shifts.
//!
//! Crossing rules, with `e⁻`/`e⁺` the Euler classes below/above a level:
//!
//! * index-2 point: blow up, `e⁺ = e⁻ + E_new`;
//! * index-4 point: blow down the unique exceptional class `C` whose area vanishes
//!   at the level with negative slope; `e⁻·C = 1` is checked, `e⁺ = push(e⁻ + C)`;
//! * non-extremal surface `F`: lattice unchanged, `e⁺ = e⁻ + [F̄]`.
//!
//! The reduced class is continuous across every level; only its slope changes.
//! Levels with several components apply blow-downs, then shifts, then blow-ups.

use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::family::{
    cone_check_left_of, cone_check_right_of, symplectic_cone_check, AffineClassFamily, ConeStatus, EulerClass, Interval,
};
use crate::fingerprint::{ClassFingerprint, ProbeKind, StateFingerprint};
use crate::lattice::{
    blow_down_data, blow_up_lattice, normalize_lattice, BasisChange, BlowDownMap, Inclusion, IntersectionLattice,
    LatticeClass, LatticeError, LatticeForm, RationalClass,
};
use crate::poly::Poly;
use crate::rational::{format_rational, Rational};
use crate::rigidity::{lookup, Certification, RigidityVerdict};
use crate::scenario::{
    validate_structure, ComponentKind, CriticalDatum, FixedComponent, FixedPointData, ValidationReport,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrossingError {
    #[error("unsupported extremum: {0}")]
    UnsupportedExtremum(String),
    #[error("state interval ends at {expected}, cannot cross at {found}")]
    NotAtWall { expected: String, found: String },
    #[error("wall mismatch: {0}")]
    WallMismatch(String),
    #[error("Euler inconsistency: e·{class} = {pairing}, blow-down requires 1")]
    EulerInconsistency { class: String, pairing: i64 },
    #[error("{found} exceptional classes vanish ({classes}) but only {expected} coindex-2 points are declared")]
    AmbiguousVanishing {
        expected: usize,
        found: usize,
        classes: String,
    },
    #[error("inconsistent data: {0}")]
    InconsistentData(String),
    #[error("declared Euler class {{{declared}}} does not match the arriving one {{{arriving}}}")]
    EulerMismatch { declared: String, arriving: String },
    #[error("declared class has rank {found}, reduced space has rank {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("internal invariant breached: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("fixed point data does not validate:\n{0}")]
    InvalidData(ValidationReport),
    #[error("at the minimum: {0}")]
    Init(CrossingError),
    #[error("at {}: {source}", format_rational(.value))]
    Wall { value: Rational, source: CrossingError },
}

impl WalkError {
    pub fn is_invariant_breach(&self) -> bool {
        matches!(
            self,
            WalkError::Init(CrossingError::Invariant(_))
                | WalkError::Wall {
                    source: CrossingError::Invariant(_),
                    ..
                }
        )
    }
}

/// The reduced space over one regular interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkState {
    pub family: AffineClassFamily,
    pub euler: EulerClass,
    pub rigidity: RigidityVerdict,
}

impl WalkState {
    pub fn new(family: AffineClassFamily, euler: EulerClass) -> Result<Self, CrossingError> {
        let state = WalkState {
            rigidity: lookup(&family),
            family,
            euler,
        };
        state.check_euler_convention()?;
        Ok(state)
    }

    pub fn lattice(&self) -> &IntersectionLattice {
        &self.family.lattice
    }

    pub fn interval(&self) -> &Interval {
        &self.family.interval
    }

    pub fn k(&self) -> usize {
        self.lattice().k()
    }

    pub fn fingerprint(&self) -> StateFingerprint {
        StateFingerprint::of(&self.family, &self.euler).expect("state classes share the lattice rank")
    }

    pub fn volume(&self) -> Poly {
        self.family.volume_poly()
    }

    /// Area of every exceptional class, ordered by degree and then by name.
    pub fn exceptional_areas(&self) -> Vec<(LatticeClass, Poly)> {
        self.probe_areas(ProbeKind::Exceptional)
    }

    pub fn probe_areas(&self, kind: ProbeKind) -> Vec<(LatticeClass, Poly)> {
        let (square, kpair) = kind.constraints();
        let mut classes = match self.lattice().canonical() {
            Some(_) => self.lattice().classes_with(square, kpair).unwrap_or_default(),
            None => Vec::new(),
        };
        let by_degree = matches!(self.lattice().form(), LatticeForm::BlowupPlane { .. });
        classes.sort_by_cached_key(|c| (if by_degree { c.coeffs()[0] } else { 0 }, self.lattice().class_name(c)));
        classes
            .into_iter()
            .map(|c| {
                let p = self.family.area_poly(&c).expect("same lattice");
                (c, p)
            })
            .collect()
    }

    fn check_euler_convention(&self) -> Result<(), CrossingError> {
        if self.family.slope != -&self.euler.class {
            return Err(CrossingError::Invariant(format!(
                "slope {:?} is not minus the Euler class {:?}",
                self.family.slope.coeffs(),
                self.euler.class.coeffs()
            )));
        }
        Ok(())
    }

    /// The same state over a different interval.
    pub fn restricted(&self, interval: Interval) -> Self {
        WalkState {
            family: self.family.with_interval(interval),
            ..self.clone()
        }
    }

    fn bounded_above(&self, hi: Rational) -> Self {
        self.restricted(Interval::open(self.interval().lo, hi))
    }

    fn at_wall(&self, value: &Rational) -> Result<Wall, CrossingError> {
        let interval = self.interval();
        let ok = match interval.hi {
            Some(hi) => hi == *value,
            None => *value > interval.lo,
        };
        if !ok {
            return Err(CrossingError::NotAtWall {
                expected: interval.hi.as_ref().map_or_else(|| "open".into(), format_rational),
                found: format_rational(value),
            });
        }
        Ok(Wall {
            lattice: self.lattice().clone(),
            omega: self.family.class_at(value),
            euler: self.euler.class.clone(),
        })
    }
}

/// The reduced space exactly at a critical value, mid-surgery.
struct Wall {
    lattice: IntersectionLattice,
    omega: RationalClass,
    euler: LatticeClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceShift {
    /// `e⁺ = e⁻ + [F̄]`
    Raise,
    /// `e⁺ = e⁻ - [F̄]`, the inverse move.
    Lower,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CrossingAction {
    BlowUp {
        component: usize,
        new_class: LatticeClass,
    },
    BlowDown {
        component: usize,
        class: LatticeClass,
        name: String,
        euler_pairing: i64,
    },
    EulerShift {
        component: usize,
        class: LatticeClass,
        sign: i64,
    },
    Normalize,
}

impl fmt::Display for CrossingAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossingAction::BlowUp { component, .. } => write!(f, "blow_up[{component}]"),
            CrossingAction::BlowDown {
                component,
                name,
                euler_pairing,
                ..
            } => {
                write!(f, "blow_down[{component}]({name}; e.C={euler_pairing})")
            }
            CrossingAction::EulerShift { component, sign, .. } => {
                write!(
                    f,
                    "euler_shift[{component}]({}PD(F))",
                    if *sign > 0 { "+" } else { "-" }
                )
            }
            CrossingAction::Normalize => f.write_str("normalize_basis"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CrossingMap {
    Inclusion(Inclusion),
    BlowDown(Box<BlowDownMap>),
    BasisChange(Box<BasisChange>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingEvent {
    pub value: Rational,
    pub actions: Vec<CrossingAction>,
    pub maps: Vec<CrossingMap>,
    pub before: StateFingerprint,
    pub after: StateFingerprint,
}

/// What a level asks the engine to do.
#[derive(Default)]
struct CrossingPlan {
    downs: Vec<usize>,
    shifts: Vec<(usize, LatticeClass, i64)>,
    ups: Vec<usize>,
    declared_euler: Option<(LatticeClass, crate::scenario::LevelLattice)>,
}

impl CrossingPlan {
    fn from_level(level: &CriticalDatum) -> Result<Self, CrossingError> {
        let mut plan = CrossingPlan {
            declared_euler: level.euler_minus.clone().map(|e| (e, level.lattice)),
            ..Default::default()
        };
        for (i, c) in level.components.iter().enumerate() {
            match (c.kind, c.index) {
                (ComponentKind::Point, 2) => plan.ups.push(i),
                (ComponentKind::Point, 4) => plan.downs.push(i),
                (ComponentKind::Surface, 2) => {
                    let class = c
                        .reduced_class
                        .clone()
                        .ok_or_else(|| CrossingError::InconsistentData("surface without reduced class".into()))?;
                    plan.shifts.push((i, class, 1));
                }
                (kind, index) => {
                    return Err(CrossingError::Invariant(format!(
                        "no crossing rule for a non-extremal {kind:?} of index {index}"
                    )))
                }
            }
        }
        Ok(plan)
    }
}

fn cross(state: &WalkState, value: Rational, plan: CrossingPlan) -> Result<(WalkState, CrossingEvent), CrossingError> {
    let before = state.fingerprint();
    let mut wall = state.at_wall(&value)?;
    let mut actions = Vec::new();
    let mut maps = Vec::new();

    if let Some((declared, kind)) = &plan.declared_euler {
        let declared_lattice = kind
            .lattice(declared.rank())
            .map_err(|e| CrossingError::InconsistentData(e.to_string()))?;
        let declared_fp = ClassFingerprint::of(&declared_lattice, declared)?;
        let arriving_fp = ClassFingerprint::of(&wall.lattice, &wall.euler)?;
        if declared_fp != arriving_fp {
            return Err(CrossingError::EulerMismatch {
                declared: declared_fp.to_string(),
                arriving: arriving_fp.to_string(),
            });
        }
    }
    for (_, class, _) in &plan.shifts {
        if class.rank() != wall.lattice.rank() {
            return Err(CrossingError::Dimension {
                expected: wall.lattice.rank(),
                found: class.rank(),
            });
        }
    }
    let mut shifts = plan.shifts;

    if !plan.downs.is_empty() {
        let slope = -&wall.euler;
        let mut vanishing = Vec::new();
        let mut roots = Vec::new();
        for c in wall.lattice.exceptional()? {
            let area = wall.lattice.pair_rational(&wall.omega, &c)?;
            let rate = wall.lattice.pair(&slope, &c)?;
            if rate < 0 {
                if area.is_zero() {
                    vanishing.push(c);
                } else {
                    let root = value + area / Rational::from_integer(-rate as i128);
                    roots.push(format!("{} at {}", wall.lattice.class_name(&c), format_rational(&root)));
                }
            }
        }
        if vanishing.len() < plan.downs.len() {
            return Err(CrossingError::WallMismatch(format!(
                "{} coindex-2 point(s) declared but {} exceptional class(es) vanish here{}",
                plan.downs.len(),
                vanishing.len(),
                if roots.is_empty() {
                    String::new()
                } else {
                    format!("; decreasing classes vanish at: {}", roots.join(", "))
                }
            )));
        }
        if vanishing.len() > plan.downs.len() {
            let names: Vec<String> = vanishing.iter().map(|c| wall.lattice.class_name(c)).collect();
            return Err(CrossingError::AmbiguousVanishing {
                expected: plan.downs.len(),
                found: vanishing.len(),
                classes: names.join(", "),
            });
        }
        let mut pending = vanishing;
        for component in &plan.downs {
            pending.sort();
            let class = pending.remove(0);
            if !wall.lattice.is_exceptional(&class)? {
                return Err(CrossingError::InconsistentData(format!(
                    "vanishing classes are not disjoint: {} is no longer exceptional",
                    wall.lattice.class_name(&class)
                )));
            }
            let pairing = wall.lattice.pair(&wall.euler, &class)?;
            if pairing != 1 {
                return Err(CrossingError::EulerInconsistency {
                    class: wall.lattice.class_name(&class),
                    pairing,
                });
            }
            let map = blow_down_data(&wall.lattice, &class)?;
            let name = wall.lattice.class_name(&class);
            wall.euler = map.pushforward(&(&wall.euler + &class))?;
            wall.omega = map.pushforward_rational(&wall.omega)?;
            pending = pending.iter().map(|c| map.pushforward(c)).collect::<Result<_, _>>()?;
            for (_, f, _) in shifts.iter_mut() {
                *f = map.pushforward(f)?;
            }
            wall.lattice = map.downstairs().clone();
            actions.push(CrossingAction::BlowDown {
                component: *component,
                class,
                name,
                euler_pairing: pairing,
            });
            maps.push(CrossingMap::BlowDown(Box::new(map)));
        }
    }

    for (component, class, sign) in &shifts {
        wall.euler = &wall.euler + &class.scaled(*sign);
        actions.push(CrossingAction::EulerShift {
            component: *component,
            class: class.clone(),
            sign: *sign,
        });
    }

    for component in &plan.ups {
        let (lattice, inclusion) = blow_up_lattice(&wall.lattice);
        let new_class = inclusion.new_class();
        wall.euler = &inclusion.apply(&wall.euler) + &new_class;
        wall.omega = inclusion.apply_rational(&wall.omega);
        wall.lattice = lattice;
        actions.push(CrossingAction::BlowUp {
            component: *component,
            new_class,
        });
        maps.push(CrossingMap::Inclusion(inclusion));
    }

    if wall.lattice.form() == LatticeForm::General && wall.lattice.canonical().is_some() {
        if let Ok(change) = normalize_lattice(&wall.lattice) {
            wall.euler = change.apply(&wall.lattice, &wall.euler)?;
            wall.omega = change.apply_rational(&wall.lattice, &wall.omega);
            wall.lattice = change.target.clone();
            actions.push(CrossingAction::Normalize);
            maps.push(CrossingMap::BasisChange(Box::new(change)));
        }
    }

    let euler = EulerClass::new(wall.euler);
    let family = AffineClassFamily::through(wall.lattice, &wall.omega, value, &euler, Interval::open_right(value))?;
    if let ConeStatus::Violated(w) = cone_check_right_of(&family, &value) {
        return Err(CrossingError::InconsistentData(format!(
            "symplectic cone violated just after the level: {w}"
        )));
    }
    let next = WalkState::new(family, euler)?;
    let after = next.fingerprint();
    Ok((
        next,
        CrossingEvent {
            value,
            actions,
            maps,
            before,
            after,
        },
    ))
}

/// Initial state above the minimum.
pub fn init_from_minimum(data: &FixedPointData) -> Result<WalkState, CrossingError> {
    let min = data.minimum();
    let component = match min.components.as_slice() {
        [c] => c,
        _ => return Err(CrossingError::UnsupportedExtremum("minimum must be connected".into())),
    };
    let interval = match data.levels().get(1) {
        Some(next) => Interval::open(min.value, next.value),
        None => Interval::open_right(min.value),
    };
    match component.kind {
        ComponentKind::Point => {
            // Hopf fibration over CP²: area(L) = t - min, e = -L.
            let lattice = IntersectionLattice::blowup_plane(0);
            let euler = EulerClass::new(LatticeClass::new(vec![-1]));
            let family = AffineClassFamily::through(lattice, &RationalClass::zero(1), min.value, &euler, interval)?;
            WalkState::new(family, euler)
        }
        ComponentKind::Divisor => {
            let d = component
                .divisor
                .as_ref()
                .ok_or_else(|| CrossingError::InconsistentData("4-dimensional minimum without data".into()))?;
            let lattice = d.lattice()?;
            if d.omega.rank() != lattice.rank() {
                return Err(CrossingError::Dimension {
                    expected: lattice.rank(),
                    found: d.omega.rank(),
                });
            }
            let euler = EulerClass::new(d.euler.clone());
            lattice.check_rank(&euler.class)?;
            let family = AffineClassFamily::through(lattice, &d.omega, min.value, &euler, interval)?;
            WalkState::new(family, euler)
        }
        ComponentKind::Surface => Err(CrossingError::UnsupportedExtremum(
            "codimension-4 minimum (sphere-bundle reduced spaces) is out of scope".into(),
        )),
    }
}

pub fn cross_index2_point(state: &WalkState, value: Rational) -> Result<WalkState, CrossingError> {
    let plan = CrossingPlan {
        ups: vec![0],
        ..Default::default()
    };
    cross(state, value, plan).map(|(s, _)| s)
}

pub fn cross_coindex2_point(state: &WalkState, value: Rational) -> Result<WalkState, CrossingError> {
    let plan = CrossingPlan {
        downs: vec![0],
        ..Default::default()
    };
    cross(state, value, plan).map(|(s, _)| s)
}

pub fn cross_surface(
    state: &WalkState,
    value: Rational,
    surface: &FixedComponent,
    shift: SurfaceShift,
) -> Result<WalkState, CrossingError> {
    if surface.kind != ComponentKind::Surface {
        return Err(CrossingError::InconsistentData("not a surface component".into()));
    }
    let class = surface
        .reduced_class
        .clone()
        .ok_or_else(|| CrossingError::InconsistentData("surface without reduced class".into()))?;
    let sign = match shift {
        SurfaceShift::Raise => 1,
        SurfaceShift::Lower => -1,
    };
    let plan = CrossingPlan {
        shifts: vec![(0, class, sign)],
        ..Default::default()
    };
    cross(state, value, plan).map(|(s, _)| s)
}

/// Crosses a level with any mix of components, returning the logged event.
pub fn cross_level(state: &WalkState, level: &CriticalDatum) -> Result<(WalkState, CrossingEvent), CrossingError> {
    cross(state, level.value, CrossingPlan::from_level(level)?)
}

pub fn cross_non_simple(state: &WalkState, value: Rational, level: &CriticalDatum) -> Result<WalkState, CrossingError> {
    if level.value != value {
        return Err(CrossingError::NotAtWall {
            expected: format_rational(&level.value),
            found: format_rational(&value),
        });
    }
    cross_level(state, level).map(|(s, _)| s)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinalReport {
    pub value: Rational,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks that the last reduced space collapses onto the declared maximum.
pub fn finalize_at_maximum(state: &WalkState, value: Rational, level: &CriticalDatum) -> FinalReport {
    let mut failures = Vec::new();
    if let Some(hi) = state.interval().hi {
        if hi != value {
            failures.push(format!(
                "last interval ends at {}, maximum declared at {}",
                format_rational(&hi),
                format_rational(&value)
            ));
        }
    }
    if let ConeStatus::Violated(w) = cone_check_left_of(&state.family, &value) {
        failures.push(format!("symplectic cone violated before the maximum: {w}"));
    }
    match level.components.as_slice() {
        [c] if c.kind == ComponentKind::Point => {
            if state.lattice().form() != (LatticeForm::BlowupPlane { k: 0 }) {
                failures.push(format!(
                    "reduced space must collapse: arriving space is {} (k={}), expected CP2",
                    state.lattice(),
                    state.k()
                ));
            } else {
                let line = LatticeClass::new(vec![1]);
                let area = state.family.area_poly(&line).expect("rank 1").eval(&value);
                if !area.is_zero() {
                    failures.push(format!(
                        "area(L)({}) = {} != 0",
                        format_rational(&value),
                        format_rational(&area)
                    ));
                }
                let pairing = state.lattice().pair(&state.euler.class, &line).expect("rank 1");
                if pairing != 1 {
                    failures.push(format!(
                        "Euler class at the maximum must be the positive generator, found e.L = {pairing}"
                    ));
                }
            }
        }
        [c] if c.kind == ComponentKind::Divisor => match c.divisor.as_ref().map(|d| (d, d.lattice())) {
            Some((d, Ok(declared))) => {
                let arriving = state.lattice();
                if declared.rank() != arriving.rank()
                    || declared.signature() != arriving.signature()
                    || declared.is_even() != arriving.is_even()
                {
                    failures.push(format!(
                        "arriving reduced space {arriving} does not match the declared maximum {declared}"
                    ));
                } else {
                    let arriving_vol = state.family.volume_poly().eval(&value);
                    let declared_vol =
                        declared.square_rational(&d.omega).unwrap_or_default() / Rational::from_integer(2);
                    if arriving_vol != declared_vol {
                        failures.push(format!(
                            "volume at the maximum is {}, declared component has {}",
                            format_rational(&arriving_vol),
                            format_rational(&declared_vol)
                        ));
                    }
                }
            }
            Some((_, Err(e))) => failures.push(format!("declared maximum lattice invalid: {e}")),
            None => failures.push("4-dimensional maximum without data".into()),
        },
        [c] => failures.push(format!("unsupported maximum of kind {:?}", c.kind)),
        _ => failures.push("maximum must be connected".into()),
    }
    FinalReport {
        value,
        passed: failures.is_empty(),
        failures,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointKind {
    Extremum,
    Seam,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endpoint {
    pub value: Rational,
    pub kind: EndpointKind,
}

/// A replayable record of a walk over (part of) the moment interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkTrace {
    pub name: String,
    pub start: Endpoint,
    pub end: Endpoint,
    /// One state per regular interval, in order.
    pub states: Vec<WalkState>,
    /// `events[i]` separates `states[i]` from `states[i + 1]`.
    pub events: Vec<CrossingEvent>,
    pub final_report: Option<FinalReport>,
    /// Set when extremal data was taken at face value.
    pub forced_uncertified: bool,
}

impl WalkTrace {
    pub fn initial(&self) -> &WalkState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &WalkState {
        self.states.last().expect("a trace has at least one interval")
    }

    pub fn k_sequence(&self) -> Vec<usize> {
        self.states.iter().map(WalkState::k).collect()
    }

    pub fn walls(&self) -> Vec<Rational> {
        self.events.iter().map(|e| e.value).collect()
    }

    pub fn volume_polys(&self) -> Vec<Poly> {
        self.states.iter().map(WalkState::volume).collect()
    }

    pub fn certification(&self) -> Certification {
        Certification::from_verdicts(self.states.iter().map(|s| &s.rigidity), self.forced_uncertified)
    }

    pub fn passed(&self) -> bool {
        self.final_report.as_ref().is_none_or(|r| r.passed)
    }

    /// Index of the interval whose closure contains `t`, preferring the right one at walls.
    pub fn interval_index(&self, t: &Rational) -> Option<usize> {
        if *t < self.start.value || *t > self.end.value {
            return None;
        }
        let idx = self
            .states
            .iter()
            .position(|s| s.interval().hi.is_none_or(|hi| *t < hi))
            .unwrap_or(self.states.len() - 1);
        Some(idx)
    }

    /// Piecewise DH volume at `t`.
    pub fn volume_at(&self, t: &Rational) -> Option<Rational> {
        self.interval_index(t).map(|i| self.states[i].volume().eval(t))
    }

    pub fn fingerprint(&self) -> TraceFingerprint {
        TraceFingerprint {
            intervals: self
                .states
                .iter()
                .map(|s| IntervalFingerprint {
                    lo: s.interval().lo,
                    hi: s.interval().hi.unwrap_or(self.end.value),
                    state: s.fingerprint(),
                })
                .collect(),
            walls: self.walls(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalFingerprint {
    pub lo: Rational,
    pub hi: Rational,
    pub state: StateFingerprint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFingerprint {
    pub intervals: Vec<IntervalFingerprint>,
    pub walls: Vec<Rational>,
}

impl TraceFingerprint {
    /// The fingerprint expected for the walk of `H ↦ total - H`.
    pub fn time_reversed(&self, total: Rational) -> Self {
        TraceFingerprint {
            intervals: self
                .intervals
                .iter()
                .rev()
                .map(|i| IntervalFingerprint {
                    lo: total - i.hi,
                    hi: total - i.lo,
                    state: i.state.time_reversed(total),
                })
                .collect(),
            walls: self.walls.iter().rev().map(|w| total - w).collect(),
        }
    }
}

/// Walks `levels` (all non-extremal) starting from `state`, then finalizes at `top` if given.
pub fn walk_from(
    name: &str,
    start: Endpoint,
    state: WalkState,
    levels: &[CriticalDatum],
    top: Option<&CriticalDatum>,
    end_value: Rational,
) -> Result<WalkTrace, WalkError> {
    let wall_err = |value: Rational| move |source: CrossingError| WalkError::Wall { value, source };
    let bound = |s: &WalkState, hi: Rational| -> Result<WalkState, WalkError> {
        let s = s.bounded_above(hi);
        if let ConeStatus::Violated(w) = symplectic_cone_check(&s.family, &s.interval().midpoint().expect("bounded")) {
            return Err(WalkError::Wall {
                value: hi,
                source: CrossingError::InconsistentData(format!("symplectic cone violated inside the interval: {w}")),
            });
        }
        if top.is_some() || hi != end_value {
            if let ConeStatus::Violated(w) = cone_check_left_of(&s.family, &hi) {
                return Err(WalkError::Wall {
                    value: hi,
                    source: CrossingError::InconsistentData(format!("symplectic cone violated before the level: {w}")),
                });
            }
        }
        Ok(s)
    };

    let first_hi = levels.first().map_or(end_value, |l| l.value);
    let mut states = vec![bound(&state, first_hi)?];
    let mut events = Vec::new();
    for (i, level) in levels.iter().enumerate() {
        let current = states.last().expect("nonempty");
        let (next, event) = cross_level(current, level).map_err(wall_err(level.value))?;
        let hi = levels.get(i + 1).map_or(end_value, |l| l.value);
        states.push(bound(&next, hi)?);
        events.push(event);
    }
    let final_report = top.map(|level| finalize_at_maximum(states.last().expect("nonempty"), level.value, level));
    let forced_uncertified = false;
    Ok(WalkTrace {
        name: name.to_string(),
        start,
        end: Endpoint {
            value: end_value,
            kind: if top.is_some() {
                EndpointKind::Extremum
            } else {
                EndpointKind::Seam
            },
        },
        states,
        events,
        final_report,
        forced_uncertified,
    })
}

/// Runs the full walk from the minimum to the maximum.
pub fn run_walk(data: &FixedPointData) -> Result<WalkTrace, WalkError> {
    let report = validate_structure(data);
    if !report.is_empty() {
        return Err(WalkError::InvalidData(report));
    }
    let initial = init_from_minimum(data).map_err(WalkError::Init)?;
    let divisor_extremum = [data.minimum(), data.maximum()]
        .iter()
        .any(|l| l.components.iter().any(|c| c.kind == ComponentKind::Divisor));
    let mut trace = walk_from(
        data.name(),
        Endpoint {
            value: data.minimum().value,
            kind: EndpointKind::Extremum,
        },
        initial,
        data.interior(),
        Some(data.maximum()),
        data.max_value(),
    )?;
    trace.forced_uncertified = divisor_extremum;
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GluingError {
    #[error("seam at {0} is a critical value; seams must be regular")]
    CriticalSeam(String),
    #[error("{0} lies outside the trace")]
    OutsideTrace(String),
    #[error("left trace ends at {left}, right trace starts at {right}")]
    SeamPosition { left: String, right: String },
    #[error("traces do not meet at a seam (left end or right start is an extremum)")]
    NotASeam,
    #[error("fingerprints disagree at the seam {value}: {field}")]
    SeamMismatch { value: String, field: String },
}

/// Cuts a trace at a regular value into two traces that compose back to it.
pub fn split_trace(trace: &WalkTrace, t: Rational) -> Result<(WalkTrace, WalkTrace), GluingError> {
    if trace.walls().contains(&t) {
        return Err(GluingError::CriticalSeam(format_rational(&t)));
    }
    if t <= trace.start.value || t >= trace.end.value {
        return Err(GluingError::OutsideTrace(format_rational(&t)));
    }
    let idx = trace.interval_index(&t).expect("inside the trace");
    let seam = Endpoint {
        value: t,
        kind: EndpointKind::Seam,
    };
    let cut = &trace.states[idx];
    let mut left_states = trace.states[..idx].to_vec();
    left_states.push(cut.restricted(Interval::open(cut.interval().lo, t)));
    let mut right_states = vec![cut.restricted(Interval {
        lo: t,
        ..cut.interval().clone()
    })];
    right_states.extend_from_slice(&trace.states[idx + 1..]);
    let left = WalkTrace {
        name: format!("{}[..{}]", trace.name, format_rational(&t)),
        start: trace.start.clone(),
        end: seam.clone(),
        states: left_states,
        events: trace.events[..idx].to_vec(),
        final_report: None,
        forced_uncertified: trace.forced_uncertified,
    };
    let right = WalkTrace {
        name: format!("{}[{}..]", trace.name, format_rational(&t)),
        start: seam,
        end: trace.end.clone(),
        states: right_states,
        events: trace.events[idx..].to_vec(),
        final_report: trace.final_report.clone(),
        forced_uncertified: trace.forced_uncertified,
    };
    Ok((left, right))
}

/// Glues two traces along a common regular value.
pub fn compose_traces(left: &WalkTrace, right: &WalkTrace) -> Result<WalkTrace, GluingError> {
    if left.end.kind != EndpointKind::Seam || right.start.kind != EndpointKind::Seam {
        return Err(GluingError::NotASeam);
    }
    let seam = left.end.value;
    if right.start.value != seam {
        return Err(GluingError::SeamPosition {
            left: format_rational(&seam),
            right: format_rational(&right.start.value),
        });
    }
    if left.walls().contains(&seam) || right.walls().contains(&seam) {
        return Err(GluingError::CriticalSeam(format_rational(&seam)));
    }
    let a = left.final_state();
    let b = right.initial();
    if let Some(field) = a.fingerprint().first_difference(&b.fingerprint()) {
        return Err(GluingError::SeamMismatch {
            value: format_rational(&seam),
            field: field.to_string(),
        });
    }
    let mut states = left.states[..left.states.len() - 1].to_vec();
    states.push(a.restricted(Interval {
        lo: a.interval().lo,
        ..b.interval().clone()
    }));
    states.extend_from_slice(&right.states[1..]);
    let mut events = left.events.clone();
    events.extend_from_slice(&right.events);
    let name = match (left.name.split_once('['), right.name.split_once('[')) {
        (Some((l, _)), Some((r, _))) if l == r => l.to_string(),
        _ => format!("{}+{}", left.name, right.name),
    };
    Ok(WalkTrace {
        name,
        start: left.start.clone(),
        end: right.end.clone(),
        states,
        events,
        final_report: right.final_report.clone(),
        forced_uncertified: left.forced_uncertified || right.forced_uncertified,
    })
}

/// Continues a walk from the state at a seam over the levels above it.
pub fn resume_walk(data: &FixedPointData, seam_state: &WalkState, seam: Rational) -> Result<WalkTrace, WalkError> {
    let above: Vec<CriticalDatum> = data.interior().iter().filter(|l| l.value > seam).cloned().collect();
    let state = seam_state.restricted(Interval::open_right(seam));
    walk_from(
        data.name(),
        Endpoint {
            value: seam,
            kind: EndpointKind::Seam,
        },
        state,
        &above,
        Some(data.maximum()),
        data.max_value(),
    )
}

impl fmt::Display for WalkTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "walk {}", self.name)?;
        for (i, s) in self.states.iter().enumerate() {
            let iv = s.interval();
            writeln!(
                f,
                "interval ({}, {}): {} k={} e={} volume={} rigidity={}",
                format_rational(&iv.lo),
                format_rational(&iv.hi.unwrap_or(self.end.value)),
                s.lattice(),
                s.k(),
                s.lattice().class_name(&s.euler.class),
                s.volume(),
                s.rigidity.status
            )?;
            let probes = match s.lattice().form() {
                LatticeForm::Hyperbolic => s.probe_areas(ProbeKind::Fiber),
                _ => s.exceptional_areas(),
            };
            for (c, area) in probes {
                writeln!(f, "  area({}) = {}", s.lattice().class_name(&c), area)?;
            }
            if let Some(ev) = self.events.get(i) {
                let acts: Vec<String> = ev.actions.iter().map(ToString::to_string).collect();
                writeln!(f, "wall {}: {}", format_rational(&ev.value), acts.join(", "))?;
            }
        }
        if let Some(r) = &self.final_report {
            if r.passed {
                writeln!(f, "maximum {}: pass", format_rational(&r.value))?;
            } else {
                writeln!(
                    f,
                    "maximum {}: fail: {}",
                    format_rational(&r.value),
                    r.failures.join("; ")
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::scenario::Mode;

    fn cls(v: &[i64]) -> LatticeClass {
        LatticeClass::new(v.to_vec())
    }

    fn y3(a: i64, b: i64, c: i64) -> FixedPointData {
        FixedPointData::y3(int(a), int(b), int(c))
    }

    fn area(state: &WalkState, v: &[i64]) -> Poly {
        state.family.area_poly(&cls(v)).unwrap()
    }

    #[test]
    fn init_is_hopf() {
        let s = init_from_minimum(&y3(2, 3, 4)).unwrap();
        assert_eq!(s.k(), 0);
        assert_eq!(area(&s, &[1]), Poly::t());
        assert_eq!(s.euler.class, cls(&[-1]));
    }

    #[test]
    fn index2_crossings() {
        let s0 = init_from_minimum(&y3(2, 3, 4)).unwrap();
        let s1 = cross_index2_point(&s0, int(2)).unwrap();
        assert_eq!(s1.euler.class, cls(&[-1, 1]));
        assert_eq!(area(&s1, &[0, 1]), Poly::affine(int(-2), int(1)));
        assert_eq!(area(&s1, &[1, 0]).eval(&int(2)), area(&s0, &[1]).eval(&int(2)));
        let s2 = cross_index2_point(&s1.bounded_above(int(3)), int(3)).unwrap();
        assert_eq!(s2.euler.class, cls(&[-1, 1, 1]));
        assert_eq!(area(&s2, &[1, 0, 0]), Poly::t());
        assert_eq!(area(&s2, &[0, 0, 1]), Poly::affine(int(-3), int(1)));
    }

    #[test]
    fn coindex2_crossing_at_five() {
        let mut s = init_from_minimum(&y3(2, 3, 4)).unwrap();
        for (v, hi) in [(2, 3), (3, 4), (4, 5)] {
            s = cross_index2_point(&s, int(v)).unwrap().bounded_above(int(hi));
        }
        assert_eq!(s.euler.class, cls(&[-1, 1, 1, 1]));
        let down = cross_coindex2_point(&s, int(5)).unwrap();
        assert_eq!(down.k(), 2);
        assert_eq!(down.euler.class, cls(&[1, -1, -1]));
        assert_eq!(area(&down, &[1, 0, 0]), Poly::affine(int(9), int(-1)));
        assert_eq!(area(&down, &[0, 1, 0]), Poly::affine(int(7), int(-1)));
        assert_eq!(area(&down, &[0, 0, 1]), Poly::affine(int(6), int(-1)));
        let next = cross_coindex2_point(&down.bounded_above(int(6)), int(6)).unwrap();
        assert_eq!(next.k(), 1);
    }

    #[test]
    fn coindex2_without_vanishing_class_is_a_wall_mismatch() {
        let mut s = init_from_minimum(&y3(2, 3, 4)).unwrap();
        for (v, hi) in [(2, 3), (3, 4)] {
            s = cross_index2_point(&s, int(v)).unwrap().bounded_above(int(hi));
        }
        // k=2 with areas t, t-2, t-3: L-E1-E2 vanishes at 5, not at 4.
        assert!(matches!(
            cross_coindex2_point(&s, int(4)),
            Err(CrossingError::WallMismatch(_))
        ));
    }

    #[test]
    fn surface_shift_flips_the_slope() {
        let s0 = init_from_minimum(&y3(2, 3, 4)).unwrap().bounded_above(int(1));
        let conic = FixedComponent::surface(2, 0, cls(&[2]));
        let s1 = cross_surface(&s0, int(1), &conic, SurfaceShift::Raise).unwrap();
        assert_eq!(s1.euler.class, cls(&[1]));
        assert_eq!(area(&s1, &[1]).coeff(1), int(-1));
        let back = cross_surface(&s1.bounded_above(ratio(3, 2)), ratio(3, 2), &conic, SurfaceShift::Lower).unwrap();
        assert_eq!(back.euler.class, cls(&[-1]));
        let bad = FixedComponent::surface(2, 0, cls(&[1, 0]));
        assert!(matches!(
            cross_surface(&s0, int(1), &bad, SurfaceShift::Raise),
            Err(CrossingError::Dimension { .. })
        ));
    }

    #[test]
    fn surface_minimum_is_unsupported() {
        let levels = vec![
            CriticalDatum::new(int(0), vec![FixedComponent::surface(0, 0, cls(&[1]))]),
            CriticalDatum::new(int(1), vec![FixedComponent::point(6)]),
        ];
        let d = FixedPointData::new("s", 6, Mode::Small, levels).unwrap();
        assert!(matches!(
            init_from_minimum(&d),
            Err(CrossingError::UnsupportedExtremum(_))
        ));
    }

    #[test]
    fn y3_walk_k_sequence() {
        let t = run_walk(&y3(2, 3, 4)).unwrap();
        assert_eq!(t.k_sequence(), vec![0, 1, 2, 3, 2, 1, 0]);
        assert_eq!(t.walls(), (2..=7).map(int).collect::<Vec<_>>());
        assert!(t.passed());
        assert_eq!(t.final_state().euler.class, cls(&[1]));
        assert_eq!(area(t.final_state(), &[1]), Poly::affine(int(9), int(-1)));
    }

    #[test]
    fn maximum_declared_too_early_fails() {
        let d = y3(2, 3, 4);
        let mut levels = d.levels().to_vec();
        levels.last_mut().unwrap().value = int(8);
        let d8 = d.with_levels(Mode::Small, levels).unwrap();
        let t = run_walk(&d8).unwrap();
        let report = t.final_report.unwrap();
        assert!(!report.passed);
        assert!(report.failures.iter().any(|f| f.contains("area(L)(8) = 1")));
    }

    #[test]
    fn residual_blowup_at_maximum_fails() {
        let s = cross_index2_point(&init_from_minimum(&y3(2, 3, 4)).unwrap(), int(2))
            .unwrap()
            .bounded_above(int(3));
        let top = CriticalDatum::new(int(3), vec![FixedComponent::point(6)]);
        let r = finalize_at_maximum(&s, int(3), &top);
        assert!(!r.passed);
        assert!(r.failures.iter().any(|f| f.contains("must collapse")));
    }

    #[test]
    fn split_at_a_wall_is_rejected() {
        let t = run_walk(&y3(2, 3, 4)).unwrap();
        assert!(matches!(split_trace(&t, int(5)), Err(GluingError::CriticalSeam(_))));
        let (l, r) = split_trace(&t, ratio(9, 2)).unwrap();
        assert_eq!(compose_traces(&l, &r).unwrap().fingerprint(), t.fingerprint());
    }
}
