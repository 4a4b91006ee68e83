//! Affine families of reduced symplectic classes and the Duistermaat-Heckman volume.
//!
//! A family is `[ω̄ₜ] = A + t·B` over an interval of regular values. The slope is
//! tied to the Euler class of the reduction bundle by the single global
//! convention `area-slope(C) = -e·C`, i.e. `B = -e`.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{IntersectionLattice, LatticeClass, LatticeError, LatticeForm, RationalClass, CERTIFIED_MAX_K};
use crate::poly::Poly;
use crate::rational::{format_rational, half, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("t = {t} lies outside the family interval [{lo}, {hi}]")]
    OutOfDomain { t: String, lo: String, hi: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// An interval of moment values. `hi = None` means not yet bounded above.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::rational::serde_string")]
    pub lo: Rational,
    #[serde(default, with = "opt_rational")]
    pub hi: Option<Rational>,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

mod opt_rational {
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

impl Interval {
    pub fn open(lo: Rational, hi: Rational) -> Self {
        Interval {
            lo,
            hi: Some(hi),
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn open_right(lo: Rational) -> Self {
        Interval {
            lo,
            hi: None,
            lo_closed: false,
            hi_closed: false,
        }
    }

    /// Closed membership test: endpoints are always admissible for evaluation.
    pub fn contains_closed(&self, t: &Rational) -> bool {
        *t >= self.lo && self.hi.is_none_or(|hi| *t <= hi)
    }

    pub fn contains_open(&self, t: &Rational) -> bool {
        *t > self.lo && self.hi.is_none_or(|hi| *t < hi)
    }

    pub fn midpoint(&self) -> Option<Rational> {
        self.hi.map(|hi| (self.lo + hi) / Rational::from_integer(2))
    }
}

/// Euler class of a reduction bundle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EulerClass {
    pub class: LatticeClass,
}

impl EulerClass {
    pub fn new(class: LatticeClass) -> Self {
        EulerClass { class }
    }
}

/// The area slope `B` with `B·C = -e·C` for every `C`, i.e. `B = -e`.
pub fn slope_from_euler(e: &EulerClass, lattice: &IntersectionLattice) -> Result<LatticeClass, LatticeError> {
    lattice.check_rank(&e.class)?;
    Ok(-&e.class)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineClassFamily {
    pub lattice: IntersectionLattice,
    pub base: RationalClass,
    pub slope: LatticeClass,
    pub interval: Interval,
}

impl AffineClassFamily {
    pub fn new(
        lattice: IntersectionLattice,
        base: RationalClass,
        slope: LatticeClass,
        interval: Interval,
    ) -> Result<Self, LatticeError> {
        if base.rank() != lattice.rank() {
            return Err(LatticeError::RankMismatch {
                expected: lattice.rank(),
                found: base.rank(),
            });
        }
        lattice.check_rank(&slope)?;
        Ok(AffineClassFamily {
            lattice,
            base,
            slope,
            interval,
        })
    }

    /// The family passing through `class_at_wall` at `t = wall` with slope `-e`.
    pub fn through(
        lattice: IntersectionLattice,
        class_at_wall: &RationalClass,
        wall: Rational,
        euler: &EulerClass,
        interval: Interval,
    ) -> Result<Self, LatticeError> {
        let slope = slope_from_euler(euler, &lattice)?;
        let base = class_at_wall.add_scaled(-wall, &slope);
        AffineClassFamily::new(lattice, base, slope, interval)
    }

    /// `[ω̄ₜ]` without domain checks.
    pub fn class_at(&self, t: &Rational) -> RationalClass {
        self.base.add_scaled(*t, &self.slope)
    }

    /// Area of `C` as an affine polynomial in `t`.
    pub fn area_poly(&self, c: &LatticeClass) -> Result<Poly, LatticeError> {
        let constant = self.lattice.pair_rational(&self.base, c)?;
        let slope = self.lattice.pair(&self.slope, c)?;
        Ok(Poly::affine(constant, Rational::from_integer(slope as i128)))
    }

    pub fn area(&self, c: &LatticeClass, t: &Rational) -> Result<Rational, FamilyError> {
        if !self.interval.contains_closed(t) {
            return Err(FamilyError::OutOfDomain {
                t: format_rational(t),
                lo: format_rational(&self.interval.lo),
                hi: self
                    .interval
                    .hi
                    .as_ref()
                    .map_or_else(|| "inf".to_string(), format_rational),
            });
        }
        Ok(self.area_poly(c)?.eval(t))
    }

    /// `½·(A + tB)²` as a polynomial of degree at most 2.
    pub fn volume_poly(&self) -> Poly {
        let aa = self
            .lattice
            .square_rational(&self.base)
            .expect("rank checked at construction");
        let ab = self
            .lattice
            .pair_rational(&self.base, &self.slope)
            .expect("rank checked");
        let bb = self.lattice.pair(&self.slope, &self.slope).expect("rank checked");
        Poly::new(vec![half() * aa, ab, half() * Rational::from_integer(bb as i128)])
    }

    pub fn with_interval(&self, interval: Interval) -> Self {
        AffineClassFamily {
            interval,
            ..self.clone()
        }
    }
}

/// Why a class fails positivity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeWitness {
    Class {
        class: LatticeClass,
        name: String,
        #[serde(with = "crate::rational::serde_string")]
        area: Rational,
    },
    Volume {
        #[serde(with = "crate::rational::serde_string")]
        volume: Rational,
    },
}

impl std::fmt::Display for ConeWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConeWitness::Class { name, area, .. } => write!(f, "{name} has area {}", format_rational(area)),
            ConeWitness::Volume { volume } => write!(f, "volume {}", format_rational(volume)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeStatus {
    Positive,
    Violated(ConeWitness),
    Unknown(String),
}

impl ConeStatus {
    pub fn is_positive(&self) -> bool {
        matches!(self, ConeStatus::Positive)
    }
}

/// Classes whose positivity characterises the symplectic cone for the
/// supported normal forms: exceptional and line classes on `CP²#k` (k <= 3),
/// the two rulings on `S²×S²`.
pub(crate) fn cone_test_classes(lattice: &IntersectionLattice) -> Result<Vec<LatticeClass>, String> {
    match lattice.form() {
        LatticeForm::BlowupPlane { k } if k <= CERTIFIED_MAX_K => {
            let mut classes = lattice.exceptional().map_err(|e| e.to_string())?;
            classes.extend(lattice.classes_with(1, -3).map_err(|e| e.to_string())?);
            Ok(classes)
        }
        LatticeForm::BlowupPlane { k } => Err(format!("positivity criterion not certified for k={k}")),
        LatticeForm::Hyperbolic => lattice.classes_with(0, -2).map_err(|e| e.to_string()),
        LatticeForm::General => Err("non-default basis".to_string()),
    }
}

pub fn symplectic_cone_check(family: &AffineClassFamily, t: &Rational) -> ConeStatus {
    let classes = match cone_test_classes(&family.lattice) {
        Ok(c) => c,
        Err(reason) => return ConeStatus::Unknown(reason),
    };
    for c in classes {
        let area = family.area_poly(&c).expect("classes come from the lattice").eval(t);
        if !area.is_positive() {
            return ConeStatus::Violated(ConeWitness::Class {
                name: family.lattice.class_name(&c),
                class: c,
                area,
            });
        }
    }
    let volume = family.volume_poly().eval(t);
    if !volume.is_positive() {
        return ConeStatus::Violated(ConeWitness::Volume { volume });
    }
    ConeStatus::Positive
}

/// Positivity for all `t` in `(wall, wall + ε)` for some `ε > 0`.
pub fn cone_check_right_of(family: &AffineClassFamily, wall: &Rational) -> ConeStatus {
    cone_check_germ(family, wall, Rational::from_integer(1))
}

/// Positivity for all `t` in `(wall - ε, wall)` for some `ε > 0`.
pub fn cone_check_left_of(family: &AffineClassFamily, wall: &Rational) -> ConeStatus {
    cone_check_germ(family, wall, Rational::from_integer(-1))
}

fn cone_check_germ(family: &AffineClassFamily, wall: &Rational, direction: Rational) -> ConeStatus {
    let classes = match cone_test_classes(&family.lattice) {
        Ok(c) => c,
        Err(reason) => return ConeStatus::Unknown(reason),
    };
    // Sign of p(wall + direction·s) for small s > 0: first nonzero Taylor term.
    let germ_positive = |p: &Poly| {
        let local = p.compose_affine(*wall, direction);
        local
            .coeffs()
            .iter()
            .find(|c| !c.is_zero())
            .is_some_and(|c| c.is_positive())
    };
    for c in classes {
        let p = family.area_poly(&c).expect("classes come from the lattice");
        if !germ_positive(&p) {
            return ConeStatus::Violated(ConeWitness::Class {
                name: family.lattice.class_name(&c),
                class: c,
                area: p.eval(wall),
            });
        }
    }
    let vol = family.volume_poly();
    if !germ_positive(&vol) {
        return ConeStatus::Violated(ConeWitness::Volume { volume: vol.eval(wall) });
    }
    ConeStatus::Positive
}
