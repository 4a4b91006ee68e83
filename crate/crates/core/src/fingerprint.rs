//! Basis-independent fingerprints of classes and walk states.
//!
//! Coordinates depend on the blow-down canonicalisation; every comparison across
//! scenarios, splits or time reversal goes through these fingerprints instead.
//! They are built from pairings with the canonical probe sets (exceptional,
//! fibre and line classes), which any canonical-class-preserving isometry permutes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::family::{AffineClassFamily, EulerClass};
use crate::lattice::{IntersectionLattice, LatticeClass, LatticeError};
use crate::poly::Poly;
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// `C² = -1`, `C·K = -1`
    Exceptional,
    /// `F² = 0`, `F·K = -2`
    Fiber,
    /// `X² = 1`, `X·K = -3`
    Line,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 3] = [ProbeKind::Exceptional, ProbeKind::Fiber, ProbeKind::Line];

    pub fn constraints(self) -> (i64, i64) {
        match self {
            ProbeKind::Exceptional => (-1, -1),
            ProbeKind::Fiber => (0, -2),
            ProbeKind::Line => (1, -3),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ProbeKind::Exceptional => "exc",
            ProbeKind::Fiber => "fib",
            ProbeKind::Line => "line",
        }
    }
}

/// All probe classes of a lattice, grouped by kind. Empty without a canonical class.
pub fn probe_classes(lattice: &IntersectionLattice) -> Vec<(ProbeKind, LatticeClass)> {
    if lattice.canonical().is_none() {
        return Vec::new();
    }
    ProbeKind::ALL
        .iter()
        .flat_map(|kind| {
            let (s, k) = kind.constraints();
            lattice
                .classes_with(s, k)
                .expect("canonical class present")
                .into_iter()
                .map(move |c| (*kind, c))
        })
        .collect()
}

/// Invariants of a single integral class in a lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassFingerprint {
    pub rank: usize,
    pub even: bool,
    pub square: i64,
    pub canonical_pairing: Option<i64>,
    pub probes: Vec<(ProbeKind, i64)>,
}

impl ClassFingerprint {
    pub fn of(lattice: &IntersectionLattice, x: &LatticeClass) -> Result<Self, LatticeError> {
        lattice.check_rank(x)?;
        let mut probes: Vec<(ProbeKind, i64)> = probe_classes(lattice)
            .into_iter()
            .map(|(kind, c)| (kind, lattice.pair_unchecked(x.coeffs(), c.coeffs())))
            .collect();
        probes.sort();
        Ok(ClassFingerprint {
            rank: lattice.rank(),
            even: lattice.is_even(),
            square: lattice.pair(x, x)?,
            canonical_pairing: lattice
                .canonical()
                .map(|k| lattice.pair_unchecked(x.coeffs(), k.coeffs())),
            probes,
        })
    }

    pub fn negated(&self) -> Self {
        let mut probes: Vec<(ProbeKind, i64)> = self.probes.iter().map(|(k, v)| (*k, -v)).collect();
        probes.sort();
        ClassFingerprint {
            canonical_pairing: self.canonical_pairing.map(|v| -v),
            probes,
            ..self.clone()
        }
    }
}

impl fmt::Display for ClassFingerprint {
    /// Compact, comma-free form, e.g. `sq=-2 K=-1 exc=-1:-1:-1:1:1:1 line=-1:1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sq={}", self.square)?;
        if let Some(k) = self.canonical_pairing {
            write!(f, " K={k}")?;
        }
        for kind in ProbeKind::ALL {
            let vals: Vec<String> = self
                .probes
                .iter()
                .filter(|(k, _)| *k == kind)
                .map(|(_, v)| v.to_string())
                .collect();
            if !vals.is_empty() {
                write!(f, " {}={}", kind.tag(), vals.join(":"))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub kind: ProbeKind,
    /// Area as an affine function of `t`.
    pub area: Poly,
    pub euler_pairing: i64,
}

/// Everything about a regular interval that survives a change of basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateFingerprint {
    pub rank: usize,
    pub signature: (usize, usize),
    pub even: bool,
    pub canonical_known: bool,
    pub volume: Poly,
    /// `[ω̄ₜ]·e` as a function of `t`.
    pub omega_euler: Poly,
    pub euler: ClassFingerprint,
    pub probes: Vec<ProbeEntry>,
}

impl StateFingerprint {
    pub fn of(family: &AffineClassFamily, euler: &EulerClass) -> Result<Self, LatticeError> {
        let lattice = &family.lattice;
        let mut probes: Vec<ProbeEntry> = probe_classes(lattice)
            .into_iter()
            .map(|(kind, c)| {
                Ok(ProbeEntry {
                    kind,
                    area: family.area_poly(&c)?,
                    euler_pairing: lattice.pair(&euler.class, &c)?,
                })
            })
            .collect::<Result<_, LatticeError>>()?;
        probes.sort();
        let omega_euler = Poly::affine(
            lattice.pair_rational(&family.base, &euler.class)?,
            Rational::from_integer(lattice.pair(&family.slope, &euler.class)? as i128),
        );
        Ok(StateFingerprint {
            rank: lattice.rank(),
            signature: lattice.signature(),
            even: lattice.is_even(),
            canonical_known: lattice.canonical().is_some(),
            volume: family.volume_poly(),
            omega_euler,
            euler: ClassFingerprint::of(lattice, &euler.class)?,
            probes,
        })
    }

    /// Fingerprint of the same reduced space seen from `H ↦ total - H`.
    pub fn time_reversed(&self, total: Rational) -> Self {
        let flip = |p: &Poly| p.compose_affine(total, -Rational::from_integer(1));
        let mut probes: Vec<ProbeEntry> = self
            .probes
            .iter()
            .map(|p| ProbeEntry {
                kind: p.kind,
                area: flip(&p.area),
                euler_pairing: -p.euler_pairing,
            })
            .collect();
        probes.sort();
        StateFingerprint {
            volume: flip(&self.volume),
            omega_euler: -&flip(&self.omega_euler),
            euler: self.euler.negated(),
            probes,
            ..self.clone()
        }
    }

    /// First field that differs, for gluing diagnostics.
    pub fn first_difference(&self, other: &Self) -> Option<&'static str> {
        if self.rank != other.rank || self.signature != other.signature || self.even != other.even {
            return Some("lattice");
        }
        if self.volume != other.volume {
            return Some("volume");
        }
        if self
            .probes
            .iter()
            .map(|p| &p.area)
            .ne(other.probes.iter().map(|p| &p.area))
        {
            return Some("areas");
        }
        if self.euler != other.euler || self.probes != other.probes || self.omega_euler != other.omega_euler {
            return Some("euler");
        }
        if self.canonical_known != other.canonical_known {
            return Some("canonical");
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{cremona_standard, LatticeIsometry};

    #[test]
    fn euler_fingerprint_of_three_point_blowup() {
        let lat = IntersectionLattice::blowup_plane(3);
        let e = LatticeClass::new(vec![-1, 1, 1, 1]);
        let fp = ClassFingerprint::of(&lat, &e).unwrap();
        assert_eq!(fp.square, -2);
        let exc: Vec<i64> = fp
            .probes
            .iter()
            .filter(|p| p.0 == ProbeKind::Exceptional)
            .map(|p| p.1)
            .collect();
        assert_eq!(exc, vec![-1, -1, -1, 1, 1, 1]);
        assert_eq!(fp.to_string(), "sq=-2 K=0 exc=-1:-1:-1:1:1:1 fib=0:0:0 line=-1:1");
    }

    #[test]
    fn fingerprint_invariant_under_cremona() {
        let lat = IntersectionLattice::blowup_plane(3);
        let s = cremona_standard(&lat, 1, 2, 3).unwrap();
        let p = LatticeIsometry::permute_exceptionals(&lat, &[2, 0, 1]).unwrap();
        for v in [[-1, 1, 1, 1], [1, 0, 0, 0], [0, 1, -1, 0], [3, -1, 2, 0]] {
            let x = LatticeClass::new(v.to_vec());
            let fp = ClassFingerprint::of(&lat, &x).unwrap();
            assert_eq!(fp, ClassFingerprint::of(&lat, &s.apply(&x).unwrap()).unwrap());
            assert_eq!(fp, ClassFingerprint::of(&lat, &p.apply(&x).unwrap()).unwrap());
        }
    }
}
