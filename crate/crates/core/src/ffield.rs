//! Prime-field arithmetic, vectors over `F_q^d` and additive characters.
//!
//! Points and frequencies share one linear layout: the vector `(x_0, .., x_{d-1})`
//! lives at index `x_0 + x_1 q + .. + x_{d-1} q^{d-1}` (little-endian mixed radix).

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut i = 3;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 2;
    }
    true
}

fn pow_mod(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc = 1 % modulus;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % modulus;
        }
        base = base * base % modulus;
        exp >>= 1;
    }
    acc
}

/// The field `F_q` for an odd prime `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    pub fn new(q: u32) -> Result<Self> {
        if q < 3 || !is_prime(q as u64) {
            return Err(Error::NotOddPrime(q as u64));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn reduce(&self, t: i64) -> u32 {
        t.rem_euclid(self.q as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.q as u64) as u32
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.q as u64 - b as u64) % self.q as u64) as u32
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        (a as u64 * b as u64 % self.q as u64) as u32
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        (self.q - a % self.q) % self.q
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        pow_mod(a as u64, e, self.q as u64) as u32
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u32) -> Option<u32> {
        if a.is_multiple_of(self.q) {
            None
        } else {
            Some(self.pow(a, self.q as u64 - 2))
        }
    }

    /// Legendre symbol of `t` (0, +1 or -1).
    pub fn quadratic_character(&self, t: i64) -> i8 {
        let t = self.reduce(t);
        if t == 0 {
            return 0;
        }
        if self.pow(t, (self.q as u64 - 1) / 2) == 1 {
            1
        } else {
            -1
        }
    }

    /// True when `-1` is a non-square, i.e. `q ≡ 3 mod 4`.
    pub fn minus_one_is_nonsquare(&self) -> bool {
        self.q % 4 == 3
    }
}

/// Legendre symbol of `t` modulo the odd prime `q`.
pub fn quadratic_character(q: u32, t: i64) -> Result<i8> {
    Ok(PrimeField::new(q)?.quadratic_character(t))
}

/// `F_q^d` together with its linear index layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpace {
    field: PrimeField,
    dim: usize,
}

impl FieldSpace {
    pub fn new(q: u32, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let field = PrimeField::new(q)?;
        // keep q^d addressable
        let size = (q as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
        if size > (1u128 << 40) {
            return Err(Error::BudgetExceeded { candidates: size, budget: 1u128 << 40 });
        }
        Ok(Self { field, dim })
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.field.q
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `q^d`.
    #[inline]
    pub fn size(&self) -> usize {
        (self.q() as usize).pow(self.dim as u32)
    }

    pub fn index_of(&self, coords: &[u32]) -> usize {
        let q = self.q() as usize;
        coords.iter().rev().fold(0usize, |acc, &c| acc * q + c as usize)
    }

    pub fn coords_into(&self, mut index: usize, out: &mut [u32]) {
        let q = self.q() as usize;
        for c in out.iter_mut() {
            *c = (index % q) as u32;
            index /= q;
        }
    }

    pub fn point(&self, index: usize) -> FieldVector {
        let mut coords = vec![0; self.dim];
        self.coords_into(index, &mut coords);
        FieldVector { q: self.q(), coords }
    }

    pub fn points(&self) -> impl Iterator<Item = FieldVector> + '_ {
        (0..self.size()).map(move |i| self.point(i))
    }

    /// Norm of the point stored at `index`, without allocating.
    pub fn norm_at(&self, mut index: usize) -> u32 {
        let q = self.q() as usize;
        let mut acc = 0u64;
        for _ in 0..self.dim {
            let c = (index % q) as u64;
            acc += c * c;
            index /= q;
        }
        (acc % q as u64) as u32
    }

    /// Dot product of the points stored at two indices.
    pub fn dot_at(&self, mut a: usize, mut b: usize) -> u32 {
        let q = self.q() as usize;
        let mut acc = 0u64;
        for _ in 0..self.dim {
            acc += ((a % q) * (b % q)) as u64;
            a /= q;
            b /= q;
        }
        (acc % q as u64) as u32
    }

    /// Index of `a + b`.
    pub fn add_at(&self, mut a: usize, mut b: usize) -> usize {
        let q = self.q() as usize;
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.dim {
            out += ((a % q + b % q) % q) * place;
            a /= q;
            b /= q;
            place *= q;
        }
        out
    }

    pub fn check(&self, v: &FieldVector) -> Result<()> {
        if v.q != self.q() {
            return Err(Error::ModulusMismatch { left: self.q(), right: v.q });
        }
        if v.coords.len() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: v.coords.len() });
        }
        Ok(())
    }
}

/// A vector in `F_q^d`; carries its modulus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldVector {
    q: u32,
    coords: Vec<u32>,
}

impl FieldVector {
    pub fn new(q: u32, coords: &[i64]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let field = PrimeField::new(q)?;
        Ok(Self { q, coords: coords.iter().map(|&c| field.reduce(c)).collect() })
    }

    pub fn zero(q: u32, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        PrimeField::new(q)?;
        Ok(Self { q, coords: vec![0; dim] })
    }

    pub(crate) fn from_reduced(q: u32, coords: Vec<u32>) -> Self {
        Self { q, coords }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.q != other.q {
            return Err(Error::ModulusMismatch { left: self.q, right: other.q });
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> Result<u32> {
        self.compatible(other)?;
        let q = self.q as u64;
        let s: u64 = self.coords.iter().zip(&other.coords).map(|(&a, &b)| a as u64 * b as u64 % q).sum();
        Ok((s % q) as u32)
    }

    /// The quadratic form `x_1^2 + .. + x_d^2`.
    pub fn norm(&self) -> u32 {
        let q = self.q as u64;
        let s: u64 = self.coords.iter().map(|&a| a as u64 * a as u64 % q).sum();
        (s % q) as u32
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let q = self.q;
        let coords = self.coords.iter().zip(&other.coords).map(|(&a, &b)| (a + b) % q).collect();
        Ok(Self { q, coords })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let q = self.q;
        let coords = self.coords.iter().zip(&other.coords).map(|(&a, &b)| (a + q - b) % q).collect();
        Ok(Self { q, coords })
    }

    pub fn neg(&self) -> Self {
        let q = self.q;
        Self { q, coords: self.coords.iter().map(|&a| (q - a) % q).collect() }
    }
}

/// Canonical additive character `t ↦ exp(2πi t / q)`.
#[derive(Debug, Clone)]
pub struct AdditiveCharacter {
    q: u32,
    table: Vec<Complex64>,
}

impl AdditiveCharacter {
    pub fn new(q: u32) -> Result<Self> {
        PrimeField::new(q)?;
        let table = (0..q)
            .map(|t| {
                if t == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, TAU * t as f64 / q as f64)
                }
            })
            .collect();
        Ok(Self { q, table })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn eval(&self, t: i64) -> Complex64 {
        self.table[t.rem_euclid(self.q as i64) as usize]
    }

    /// `χ(t)` for an already reduced residue.
    #[inline]
    pub fn at(&self, t: u32) -> Complex64 {
        self.table[t as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_and_composite_moduli() {
        for q in [0, 1, 2, 4, 9, 15, 21] {
            assert!(PrimeField::new(q).is_err(), "q={q}");
        }
        assert!(PrimeField::new(3).is_ok());
    }

    #[test]
    fn dot_examples() {
        let x = FieldVector::new(3, &[1, 2]).unwrap();
        let y = FieldVector::new(3, &[2, 2]).unwrap();
        assert_eq!(x.dot(&y).unwrap(), 0);
        let z = FieldVector::zero(3, 2).unwrap();
        assert_eq!(x.dot(&z).unwrap(), 0);
        let a = FieldVector::new(7, &[1, 1]).unwrap();
        let b = FieldVector::new(7, &[3, 4]).unwrap();
        assert_eq!(a.dot(&b).unwrap(), 0);
    }

    #[test]
    fn dot_mismatch_errors() {
        let x = FieldVector::new(3, &[1, 2]).unwrap();
        let y = FieldVector::new(5, &[1, 2]).unwrap();
        let z = FieldVector::new(3, &[1, 2, 0]).unwrap();
        assert!(matches!(x.dot(&y), Err(Error::ModulusMismatch { .. })));
        assert!(matches!(x.dot(&z), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(FieldVector::new(3, &[0, 0]).unwrap().norm(), 0);
        assert_eq!(FieldVector::new(3, &[1, 1]).unwrap().norm(), 2);
        assert_eq!(FieldVector::new(7, &[2, 3]).unwrap().norm(), 6);
    }

    fn squares_oracle(q: u32, t: i64) -> i8 {
        let t = t.rem_euclid(q as i64) as u32;
        if t == 0 {
            return 0;
        }
        if (1..q).any(|a| a * a % q == t) {
            1
        } else {
            -1
        }
    }

    #[test]
    fn quadratic_character_examples() {
        assert_eq!(quadratic_character(3, -1).unwrap(), -1);
        assert_eq!(quadratic_character(5, -1).unwrap(), 1);
        for q in [3, 5, 7, 11, 13] {
            assert_eq!(quadratic_character(q, 1).unwrap(), 1);
            for t in -20..20 {
                assert_eq!(quadratic_character(q, t).unwrap(), squares_oracle(q, t), "q={q} t={t}");
            }
        }
    }

    #[test]
    fn minus_one_nonsquare_iff_three_mod_four() {
        for q in (3..200u32).filter(|&q| is_prime(q as u64)) {
            let chi = quadratic_character(q, -1).unwrap();
            assert_eq!(chi == -1, q % 4 == 3, "q={q}");
        }
    }

    #[test]
    fn character_axioms() {
        for q in [3, 5, 7, 31] {
            let chi = AdditiveCharacter::new(q).unwrap();
            assert_eq!(chi.eval(0), Complex64::new(1.0, 0.0));
            let mut total = Complex64::new(0.0, 0.0);
            for s in 0..q as i64 {
                assert!((chi.eval(s).norm() - 1.0).abs() < 1e-14);
                total += chi.eval(s);
                for t in 0..q as i64 {
                    assert!((chi.eval(s + t) - chi.eval(s) * chi.eval(t)).norm() < 1e-12);
                }
            }
            assert!(total.norm() < 1e-12);
        }
    }

    #[test]
    fn index_layout_is_little_endian() {
        let sp = FieldSpace::new(5, 3).unwrap();
        assert_eq!(sp.index_of(&[1, 0, 0]), 1);
        assert_eq!(sp.index_of(&[0, 1, 0]), 5);
        assert_eq!(sp.index_of(&[2, 3, 4]), 2 + 15 + 100);
        for i in 0..sp.size() {
            let p = sp.point(i);
            assert_eq!(sp.index_of(p.coords()), i);
            assert_eq!(sp.norm_at(i), p.norm());
        }
        let a = sp.index_of(&[4, 4, 1]);
        let b = sp.index_of(&[1, 2, 4]);
        assert_eq!(sp.add_at(a, b), sp.index_of(&[0, 1, 0]));
        assert_eq!(sp.dot_at(a, b), (4 + 8 + 4) % 5);
    }
}
