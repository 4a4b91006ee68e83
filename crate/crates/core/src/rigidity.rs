//! Cited rigidity facts for 4-dimensional reduced spaces with their form families.
//!
//! Rigidity of a pair `(B, {ω̄ₜ})` means: `Symp(B, ω̄ₜ) ∩ Diff₀(B)` is path connected
//! for every `t`, and deformations between cohomologous forms can be homotoped
//! to isotopies. Nothing here is computed from first principles; every status
//! comes from a literature fact in [`FACTS`], and anything not covered is `Unknown`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::family::AffineClassFamily;
use crate::lattice::LatticeForm;
use crate::poly::Poly;

/// Ordered from weakest to strongest so that `min` is the certification rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigidityStatus {
    NotRigid,
    Unknown,
    RigidViaHRestrictedSymp,
    Rigid,
}

impl RigidityStatus {
    pub fn is_rigid(self) -> bool {
        self >= RigidityStatus::RigidViaHRestrictedSymp
    }

    pub fn tag(self) -> &'static str {
        match self {
            RigidityStatus::NotRigid => "not_rigid",
            RigidityStatus::Unknown => "unknown",
            RigidityStatus::RigidViaHRestrictedSymp => "rigid_via_H_restricted_symp",
            RigidityStatus::Rigid => "rigid",
        }
    }
}

impl fmt::Display for RigidityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RigidityFact {
    pub id: &'static str,
    pub space: &'static str,
    pub pattern: &'static str,
    pub status: RigidityStatus,
    pub citation: &'static str,
    /// Whether cohomologous forms are also known to be diffeomorphic (tracked, never used).
    pub uniqueness_known: bool,
}

pub const FACTS: &[RigidityFact] = &[
    RigidityFact {
        id: "cp2",
        space: "CP2",
        pattern: "any family",
        status: RigidityStatus::Rigid,
        citation: "McDuff, deformation implies isotopy on rational surfaces; Gromov, Symp(CP2) connected",
        uniqueness_known: true,
    },
    RigidityFact {
        id: "cp2-one-point",
        space: "CP2#1",
        pattern: "any family",
        status: RigidityStatus::Rigid,
        citation: "McDuff, deformation implies isotopy; Abreu-McDuff, Lalonde-Pinsonnault, Symp of the one-point blow-up connected",
        uniqueness_known: true,
    },
    RigidityFact {
        id: "s2xs2",
        space: "S2xS2",
        pattern: "any family",
        status: RigidityStatus::Rigid,
        citation: "McDuff, deformation implies isotopy; Gromov, Abreu-McDuff, Symp(S2xS2) meets Diff0 in a connected group",
        uniqueness_known: true,
    },
    RigidityFact {
        id: "cp2-blowup-le3",
        space: "CP2#k, k=2,3",
        pattern: "distinct exceptional areas",
        status: RigidityStatus::RigidViaHRestrictedSymp,
        citation: "McDuff, deformation implies isotopy; Pinsonnault, Evans, homologically trivial symplectomorphisms path connected for k<=3",
        uniqueness_known: true,
    },
    RigidityFact {
        id: "cp2-blowup-le3-equal-areas",
        space: "CP2#k, k=2,3",
        pattern: "some equal exceptional areas",
        status: RigidityStatus::RigidViaHRestrictedSymp,
        citation: "Pinsonnault, Evans, identity component of Diff connected; symplectomorphisms permuting equal exceptional classes lie outside Diff0",
        uniqueness_known: true,
    },
    RigidityFact {
        id: "cp2-blowup-5-monotone",
        space: "CP2#5",
        pattern: "monotone (class proportional to -K)",
        status: RigidityStatus::NotRigid,
        citation: "Seidel, Lagrangian two-spheres can be symplectically knotted (monotone five-point blow-up)",
        uniqueness_known: false,
    },
];

pub fn fact(id: &str) -> Option<&'static RigidityFact> {
    FACTS.iter().find(|f| f.id == id)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RigidityVerdict {
    pub status: RigidityStatus,
    /// Fact id, or `None` when no fact applies.
    pub fact: Option<String>,
}

impl RigidityVerdict {
    fn from_fact(id: &str) -> Self {
        let f = fact(id).expect("fact ids are static");
        RigidityVerdict {
            status: f.status,
            fact: Some(f.id.to_string()),
        }
    }

    fn unknown() -> Self {
        RigidityVerdict {
            status: RigidityStatus::Unknown,
            fact: None,
        }
    }

    pub fn citation(&self) -> Option<&'static str> {
        self.fact.as_deref().and_then(fact).map(|f| f.citation)
    }
}

/// Rigidity status of a reduced space with its form family.
///
/// Depends only on the lattice normal form and the multiset of exceptional area
/// functions, both invariant under canonical-class-preserving isometries.
pub fn lookup(family: &AffineClassFamily) -> RigidityVerdict {
    let lattice = &family.lattice;
    match lattice.form() {
        LatticeForm::BlowupPlane { k: 0 } => RigidityVerdict::from_fact("cp2"),
        LatticeForm::BlowupPlane { k: 1 } => RigidityVerdict::from_fact("cp2-one-point"),
        LatticeForm::Hyperbolic => RigidityVerdict::from_fact("s2xs2"),
        LatticeForm::BlowupPlane { k: 2 | 3 } => {
            let mut areas: Vec<Poly> = lattice
                .exceptional()
                .expect("normal form carries a canonical class")
                .iter()
                .map(|c| family.area_poly(c).expect("same lattice"))
                .collect();
            areas.sort();
            if areas.windows(2).any(|w| w[0] == w[1]) {
                RigidityVerdict::from_fact("cp2-blowup-le3-equal-areas")
            } else {
                RigidityVerdict::from_fact("cp2-blowup-le3")
            }
        }
        LatticeForm::BlowupPlane { k: 5 } => {
            let k = lattice.canonical().expect("normal form carries a canonical class");
            let base_parallel = family.base.proportionality(k).is_some();
            let slope_parallel = family.slope.to_rational().proportionality(k).is_some();
            if base_parallel && slope_parallel {
                RigidityVerdict::from_fact("cp2-blowup-5-monotone")
            } else {
                RigidityVerdict::unknown()
            }
        }
        _ => RigidityVerdict::unknown(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificationLevel {
    Certified,
    Uncertified,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certification {
    pub level: CertificationLevel,
    pub minimum: RigidityStatus,
    /// Fact ids in order of first use.
    pub facts: Vec<String>,
}

impl Certification {
    pub fn is_certified(&self) -> bool {
        self.level == CertificationLevel::Certified
    }

    /// Minimum over verdicts; `forced_uncertified` marks face-value extremal data.
    pub fn from_verdicts<'a>(
        verdicts: impl IntoIterator<Item = &'a RigidityVerdict>,
        forced_uncertified: bool,
    ) -> Self {
        let mut minimum = RigidityStatus::Rigid;
        let mut facts: Vec<String> = Vec::new();
        for v in verdicts {
            minimum = minimum.min(v.status);
            if let Some(f) = &v.fact {
                if !facts.contains(f) {
                    facts.push(f.clone());
                }
            }
        }
        let level = if minimum.is_rigid() && !forced_uncertified {
            CertificationLevel::Certified
        } else {
            CertificationLevel::Uncertified
        };
        Certification { level, minimum, facts }
    }
}

/// Human-readable table of every fact.
pub fn citation_table() -> String {
    let mut out = String::from("id | space | pattern | status | uniqueness | citation\n");
    for f in FACTS {
        out.push_str(&format!(
            "{} | {} | {} | {} | {} | {}\n",
            f.id,
            f.space,
            f.pattern,
            f.status,
            if f.uniqueness_known { "known" } else { "open" },
            f.citation
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{EulerClass, Interval};
    use crate::lattice::{canonical_class, IntersectionLattice, LatticeClass, RationalClass};
    use crate::rational::int;

    fn family(k: usize, at_zero: Vec<i64>, euler: Vec<i64>) -> AffineClassFamily {
        AffineClassFamily::through(
            IntersectionLattice::blowup_plane(k),
            &LatticeClass::new(at_zero).to_rational(),
            int(0),
            &EulerClass::new(LatticeClass::new(euler)),
            Interval::open(int(3), int(4)),
        )
        .unwrap()
    }

    #[test]
    fn every_fact_is_cited() {
        assert!(FACTS.iter().all(|f| !f.citation.is_empty()));
    }

    #[test]
    fn projective_plane_is_rigid() {
        let v = lookup(&family(0, vec![0], vec![-1]));
        assert_eq!(v.status, RigidityStatus::Rigid);
        assert_eq!(v.fact.as_deref(), Some("cp2"));
    }

    #[test]
    fn two_point_blowup_uses_restricted_group() {
        // areas (t, t-2, t-3)
        let v = lookup(&family(2, vec![0, 2, 3], vec![-1, 1, 1]));
        assert_eq!(v.status, RigidityStatus::RigidViaHRestrictedSymp);
        assert_eq!(v.fact.as_deref(), Some("cp2-blowup-le3"));
        let eq = lookup(&family(3, vec![0, 1, 1, 1], vec![-1, 1, 1, 1]));
        assert_eq!(eq.fact.as_deref(), Some("cp2-blowup-le3-equal-areas"));
    }

    #[test]
    fn monotone_five_point_blowup_is_not_rigid() {
        let lattice = IntersectionLattice::blowup_plane(5);
        let minus_k = canonical_class(5).scaled(-1);
        let f =
            AffineClassFamily::new(lattice, RationalClass::zero(6), minus_k, Interval::open(int(1), int(2))).unwrap();
        assert_eq!(lookup(&f).status, RigidityStatus::NotRigid);
    }

    #[test]
    fn certification_is_the_minimum() {
        let r = RigidityVerdict::from_fact("cp2");
        let u = RigidityVerdict::unknown();
        assert!(Certification::from_verdicts([&r], false).is_certified());
        let c = Certification::from_verdicts([&r, &u], false);
        assert!(!c.is_certified());
        assert_eq!(c.minimum, RigidityStatus::Unknown);
        assert!(!Certification::from_verdicts([&r], true).is_certified());
    }
}
