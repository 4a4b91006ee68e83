//! Dense univariate polynomials in the moment parameter `t` with exact coefficients.
//!
//! Areas are affine in `t` and reduced volumes are quadratic, so everything here
//! stays tiny; the type is general only to keep integration and composition honest.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rational, Rational};

/// `coeffs[i]` is the coefficient of `t^i`; trailing zeros are trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Poly {
    #[serde(with = "crate::rational::serde_string_vec")]
    coeffs: Vec<Rational>,
}

impl Poly {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Poly::new(vec![c])
    }

    /// `constant + slope * t`.
    pub fn affine(constant: Rational, slope: Rational) -> Self {
        Poly::new(vec![constant, slope])
    }

    /// The monomial `t`.
    pub fn t() -> Self {
        Poly::affine(Rational::zero(), Rational::one())
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).copied().unwrap_or_else(Rational::zero)
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer(i as i128))
                .collect(),
        )
    }

    /// Antiderivative vanishing at `t = 0`.
    pub fn antiderivative(&self) -> Poly {
        let mut coeffs = vec![Rational::zero()];
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c / Rational::from_integer(i as i128 + 1)),
        );
        Poly::new(coeffs)
    }

    pub fn integrate(&self, lo: &Rational, hi: &Rational) -> Rational {
        let anti = self.antiderivative();
        anti.eval(hi) - anti.eval(lo)
    }

    /// `p(a + b t)`.
    pub fn compose_affine(&self, a: Rational, b: Rational) -> Poly {
        let inner = Poly::affine(a, b);
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, c| &(&acc * &inner) + &Poly::constant(*c))
    }

    pub fn scale(&self, factor: Rational) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * factor).collect())
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;

    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl fmt::Display for Poly {
    /// Highest degree first: `1/2*t^2-2*t+5`, `-t+5`, `t-2`, `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let negative = c.is_negative();
            let mag = c.abs();
            if negative {
                f.write_str("-")?;
            } else if !first {
                f.write_str("+")?;
            }
            first = false;
            let mono = match i {
                0 => String::new(),
                1 => "t".to_string(),
                _ => format!("t^{i}"),
            };
            if i == 0 {
                f.write_str(&format_rational(&mag))?;
            } else if mag.is_one() {
                f.write_str(&mono)?;
            } else {
                write!(f, "{}*{}", format_rational(&mag), mono)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn display_orders_terms_by_degree() {
        assert_eq!(Poly::affine(int(5), int(-1)).to_string(), "-t+5");
        assert_eq!(Poly::affine(int(-2), int(1)).to_string(), "t-2");
        assert_eq!(Poly::new(vec![int(0), int(0), ratio(1, 2)]).to_string(), "1/2*t^2");
        assert_eq!(Poly::zero().to_string(), "0");
    }

    #[test]
    fn integrates_exactly() {
        // ∫_0^3 t^2/2 dt = 9/2
        let p = Poly::new(vec![int(0), int(0), ratio(1, 2)]);
        assert_eq!(p.integrate(&int(0), &int(3)), ratio(9, 2));
    }

    #[test]
    fn composition_reverses_time() {
        let p = Poly::affine(int(-2), int(1));
        // (9 - t) - 2 = 7 - t
        assert_eq!(p.compose_affine(int(9), int(-1)), Poly::affine(int(7), int(-1)));
    }
}
