//! Exact wall-crossing engine for semi-free Hamiltonian circle actions on closed
//! symplectic 6-manifolds with isolated or low-dimensional fixed point sets.
//!
//! The walk follows the reduced spaces `B_t = H⁻¹(t)/S¹` across the moment
//! interval, keeping their intersection lattice, the affine family of reduced
//! classes and the Euler class of the circle bundle in exact rational arithmetic.

pub mod classify;
pub mod family;
pub mod fingerprint;
pub mod io;
pub mod lattice;
pub mod poly;
pub mod rational;
pub mod rigidity;
pub mod scenario;
pub mod walk;

pub use classify::{classify_isolated, small_data_bootstrap, weak_classification_check, ClassifyOutcome, WeakVerdict};
pub use family::{AffineClassFamily, ConeStatus, EulerClass, Interval};
pub use fingerprint::{ClassFingerprint, StateFingerprint};
pub use io::{parse_scenario, read_scenario, IoError};
pub use lattice::{exceptional_classes, IntersectionLattice, LatticeClass, LatticeError, LatticeForm, RationalClass};
pub use poly::Poly;
pub use rational::{format_rational, parse_rational, Rational};
pub use rigidity::{Certification, RigidityStatus, RigidityVerdict};
pub use scenario::{ComponentKind, CriticalDatum, FixedComponent, FixedPointData, Mode};
pub use walk::{run_walk, CrossingError, WalkError, WalkState, WalkTrace};
