#![allow(dead_code)]

use proptest::prelude::*;
use semifree_core::lattice::{IntersectionLattice, LatticeClass};
use semifree_core::rational::Rational;

/// Positive rationals with small numerators and denominators.
pub fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i128..=24, 1i128..=6).prop_map(|(p, q)| Rational::new(p, q))
}

pub fn lambda_triple() -> impl Strategy<Value = [Rational; 3]> {
    [positive_rational(), positive_rational(), positive_rational()]
}

pub fn class(rank: usize, bound: i64) -> impl Strategy<Value = LatticeClass> {
    proptest::collection::vec(-bound..=bound, rank).prop_map(LatticeClass::new)
}

/// Every class in the box `|aᵢ| ≤ bound` with `C² = -1`, `C·K = -1`.
pub fn box_exceptional(k: usize, bound: i64) -> Vec<LatticeClass> {
    let lattice = IntersectionLattice::blowup_plane(k);
    let canonical = lattice.canonical().unwrap().clone();
    let rank = k + 1;
    let mut out = Vec::new();
    let mut coeffs = vec![-bound; rank];
    loop {
        let c = LatticeClass::new(coeffs.clone());
        if lattice.pair(&c, &c).unwrap() == -1 && lattice.pair(&c, &canonical).unwrap() == -1 {
            out.push(c);
        }
        let mut i = 0;
        while i < rank && coeffs[i] == bound {
            coeffs[i] = -bound;
            i += 1;
        }
        if i == rank {
            break;
        }
        coeffs[i] += 1;
    }
    out.sort();
    out
}
