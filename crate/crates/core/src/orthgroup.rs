//! Orthogonal groups `O(d, F_q)` for the form `x_1^2 + .. + x_d^2`.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{FieldSpace, FieldVector, PrimeField};

/// Default ceiling on `q^{d^2}` for brute-force enumeration.
pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

/// A `d × d` matrix over `F_q` with `gᵀg = I`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrthMatrix {
    q: u32,
    d: usize,
    entries: Vec<u32>,
}

impl OrthMatrix {
    pub fn identity(q: u32, d: usize) -> Self {
        let mut entries = vec![0; d * d];
        for i in 0..d {
            entries[i * d + i] = 1;
        }
        Self { q, d, entries }
    }

    /// Builds a matrix from row-major entries and checks orthogonality.
    pub fn from_rows(q: u32, d: usize, entries: &[i64]) -> Result<Self> {
        let field = PrimeField::new(q)?;
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch { left: d * d, right: entries.len() });
        }
        let m = Self { q, d, entries: entries.iter().map(|&e| field.reduce(e)).collect() };
        if !m.is_orthogonal() {
            return Err(Error::InvalidParameter("matrix is not orthogonal".into()));
        }
        Ok(m)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.entries[row * self.d + col]
    }

    fn is_orthogonal(&self) -> bool {
        columns_orthonormal(self.q as u64, self.d, &self.entries)
    }

    pub fn transpose(&self) -> Self {
        let d = self.d;
        let mut entries = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.entries[i * d + j];
            }
        }
        Self { q: self.q, d, entries }
    }

    /// Inverse, which for an orthogonal matrix is the transpose.
    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.q != other.q {
            return Err(Error::ModulusMismatch { left: self.q, right: other.q });
        }
        if self.d != other.d {
            return Err(Error::DimensionMismatch { left: self.d, right: other.d });
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let d = self.d;
        let q = self.q as u64;
        let mut entries = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                let s: u64 = (0..d).map(|k| self.entries[i * d + k] as u64 * other.entries[k * d + j] as u64).sum();
                entries[i * d + j] = (s % q) as u32;
            }
        }
        Self { q: self.q, d, entries }
    }

    pub fn apply(&self, x: &FieldVector) -> Result<FieldVector> {
        if x.q() != self.q {
            return Err(Error::ModulusMismatch { left: self.q, right: x.q() });
        }
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch { left: self.d, right: x.dim() });
        }
        let q = self.q as u64;
        let xs = x.coords();
        let out = (0..self.d)
            .map(|i| {
                let s: u64 = (0..self.d).map(|k| self.entries[i * self.d + k] as u64 * xs[k] as u64).sum();
                (s % q) as u32
            })
            .collect();
        Ok(FieldVector::from_reduced(self.q, out))
    }

    /// Action on linear indices of `space`; the caller guarantees matching `(q, d)`.
    pub fn apply_index(&self, space: &FieldSpace, index: usize, scratch: &mut [u32]) -> usize {
        let d = self.d;
        let q = self.q as usize;
        space.coords_into(index, &mut scratch[..d]);
        let mut out = 0usize;
        for i in (0..d).rev() {
            let s: usize = (0..d).map(|k| self.entries[i * d + k] as usize * scratch[k] as usize).sum();
            out = out * q + s % q;
        }
        out
    }

    /// Index permutation of `F_q^d` induced by this matrix.
    pub fn permutation(&self, space: &FieldSpace) -> Vec<u32> {
        let mut scratch = vec![0; self.d];
        (0..space.size()).map(|i| self.apply_index(space, i, &mut scratch) as u32).collect()
    }
}

fn columns_orthonormal(q: u64, d: usize, m: &[u32]) -> bool {
    for i in 0..d {
        for j in i..d {
            let s: u64 = (0..d).map(|k| m[k * d + i] as u64 * m[k * d + j] as u64).sum();
            let want = u64::from(i == j);
            if s % q != want {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnumerationMethod {
    /// `d = 2` only: rotations `[[a,-b],[b,a]]` and reflections `[[a,b],[b,-a]]` over `a^2+b^2=1`.
    ClosedForm,
    /// Every matrix in `F_q^{d×d}` tested for `gᵀg = I`.
    BruteForce,
    /// Breadth-first closure of signed permutations and all anisotropic reflections.
    ReflectionClosure,
}

/// All elements of `O(d, F_q)` in lexicographic order of their entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthGroup {
    q: u32,
    d: usize,
    elements: Vec<OrthMatrix>,
}

impl OrthGroup {
    /// Closed form for `d = 2`, brute force under [`DEFAULT_BUDGET`] otherwise.
    pub fn enumerate(q: u32, d: usize) -> Result<Self> {
        let method = if d == 2 { EnumerationMethod::ClosedForm } else { EnumerationMethod::BruteForce };
        Self::enumerate_with(q, d, method, DEFAULT_BUDGET)
    }

    pub fn enumerate_with(q: u32, d: usize, method: EnumerationMethod, budget: u128) -> Result<Self> {
        PrimeField::new(q)?;
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut elements = match method {
            EnumerationMethod::ClosedForm => {
                if d != 2 {
                    return Err(Error::InvalidParameter("closed form enumeration needs d = 2".into()));
                }
                closed_form_2d(q)
            }
            EnumerationMethod::BruteForce => brute_force(q, d, budget)?,
            EnumerationMethod::ReflectionClosure => reflection_closure(q, d, budget)?,
        };
        elements.sort();
        elements.dedup();
        Ok(Self { q, d, elements })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[OrthMatrix] {
        &self.elements
    }

    pub fn contains(&self, g: &OrthMatrix) -> bool {
        self.elements.binary_search(g).is_ok()
    }

    /// `#{g : gx = x}`.
    pub fn stabilizer_size(&self, x: &FieldVector) -> Result<usize> {
        if x.q() != self.q {
            return Err(Error::ModulusMismatch { left: self.q, right: x.q() });
        }
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch { left: self.d, right: x.dim() });
        }
        let mut count = 0;
        for g in &self.elements {
            if g.apply(x)? == *x {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Stabilizer sizes grouped by norm class; the zero vector is reported on its own.
    pub fn stabilizers_by_norm(&self) -> Result<Vec<NormClassStabilizer>> {
        let space = FieldSpace::new(self.q, self.d)?;
        let perms: Vec<Vec<u32>> = self.elements.iter().map(|g| g.permutation(&space)).collect();
        let mut classes: BTreeMap<(bool, u32), (usize, usize, usize)> = BTreeMap::new();
        for x in 0..space.size() {
            let stab = perms.iter().filter(|p| p[x] as usize == x).count();
            let key = (x == 0, space.norm_at(x));
            let e = classes.entry(key).or_insert((0, usize::MAX, 0));
            e.0 += 1;
            e.1 = e.1.min(stab);
            e.2 = e.2.max(stab);
        }
        Ok(classes
            .into_iter()
            .map(|((zero, norm), (count, min, max))| NormClassStabilizer {
                norm,
                zero_vector: zero,
                vectors: count,
                min_stabilizer: min,
                max_stabilizer: max,
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormClassStabilizer {
    pub norm: u32,
    pub zero_vector: bool,
    pub vectors: usize,
    pub min_stabilizer: usize,
    pub max_stabilizer: usize,
}

/// Order of `O(d, F_q)` from the classical formulas, for `q` odd.
pub fn known_order(q: u32, d: usize) -> Option<u128> {
    if d == 0 {
        return None;
    }
    let field = PrimeField::new(q).ok()?;
    let qq = q as u128;
    let m = d / 2;
    if d % 2 == 1 {
        let mut order = 2 * qq.checked_pow((m * m) as u32)?;
        for i in 1..=m {
            order = order.checked_mul(qq.checked_pow(2 * i as u32)? - 1)?;
        }
        Some(order)
    } else {
        // sign of the discriminant (-1)^m of the sum-of-squares form
        let eps = field.quadratic_character(if m.is_multiple_of(2) { 1 } else { -1 }) as i128;
        let top = qq.checked_pow(m as u32)? as i128 - eps;
        let mut order = 2 * qq.checked_pow((m * (m - 1)) as u32)? * top as u128;
        for i in 1..m {
            order = order.checked_mul(qq.checked_pow(2 * i as u32)? - 1)?;
        }
        Some(order)
    }
}

fn closed_form_2d(q: u32) -> Vec<OrthMatrix> {
    let f = PrimeField::new(q).expect("validated modulus");
    let mut out = Vec::new();
    for a in 0..q {
        for b in 0..q {
            if f.add(f.mul(a, a), f.mul(b, b)) != 1 {
                continue;
            }
            out.push(OrthMatrix { q, d: 2, entries: vec![a, f.neg(b), b, a] });
            out.push(OrthMatrix { q, d: 2, entries: vec![a, b, b, f.neg(a)] });
        }
    }
    out
}

fn brute_force(q: u32, d: usize, budget: u128) -> Result<Vec<OrthMatrix>> {
    let cells = (d * d) as u32;
    let total = (q as u128).checked_pow(cells).unwrap_or(u128::MAX);
    if total > budget || total > u64::MAX as u128 {
        return Err(Error::BudgetExceeded { candidates: total, budget });
    }
    let qq = q as u64;
    let found: Vec<OrthMatrix> = (0..total as u64)
        .into_par_iter()
        .filter_map(|mut idx| {
            let mut entries = vec![0u32; d * d];
            for e in entries.iter_mut() {
                *e = (idx % qq) as u32;
                idx /= qq;
            }
            columns_orthonormal(qq, d, &entries).then_some(OrthMatrix { q, d, entries })
        })
        .collect();
    Ok(found)
}

fn signed_permutations(q: u32, d: usize) -> Vec<OrthMatrix> {
    fn perms(k: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                perms(k, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut ps = Vec::new();
    perms(d, &mut Vec::new(), &mut vec![false; d], &mut ps);
    let mut out = Vec::new();
    for p in &ps {
        for signs in 0..(1u32 << d) {
            let mut entries = vec![0; d * d];
            for (row, &col) in p.iter().enumerate() {
                entries[row * d + col] = if signs >> row & 1 == 1 { q - 1 } else { 1 };
            }
            out.push(OrthMatrix { q, d, entries });
        }
    }
    out
}

/// Reflection `x ↦ x - 2 (x·v)/(v·v) v` for an anisotropic `v`.
fn reflection(f: &PrimeField, d: usize, v: &[u32]) -> Option<OrthMatrix> {
    let vv = v.iter().fold(0, |acc, &c| f.add(acc, f.mul(c, c)));
    let scale = f.mul(2, f.inv(vv)?);
    let mut entries = vec![0; d * d];
    for i in 0..d {
        for j in 0..d {
            let id = u32::from(i == j);
            entries[i * d + j] = f.sub(id, f.mul(scale, f.mul(v[i], v[j])));
        }
    }
    Some(OrthMatrix { q: f.modulus(), d, entries })
}

fn reflection_closure(q: u32, d: usize, budget: u128) -> Result<Vec<OrthMatrix>> {
    let f = PrimeField::new(q)?;
    let space = FieldSpace::new(q, d)?;
    let mut gens = signed_permutations(q, d);
    let mut v = vec![0u32; d];
    for idx in 1..space.size() {
        space.coords_into(idx, &mut v);
        // one representative per line: leading nonzero coordinate equal to 1
        if v.iter().find(|&&c| c != 0) != Some(&1) {
            continue;
        }
        if let Some(r) = reflection(&f, d, &v) {
            gens.push(r);
        }
    }
    let id = OrthMatrix::identity(q, d);
    let mut seen: HashSet<OrthMatrix> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(id.clone());
    queue.push_back(id);
    while let Some(g) = queue.pop_front() {
        for h in &gens {
            let gh = g.mul_unchecked(h);
            if seen.insert(gh.clone()) {
                if seen.len() as u128 > budget {
                    return Err(Error::BudgetExceeded { candidates: seen.len() as u128, budget });
                }
                queue.push_back(gh);
            }
        }
    }
    Ok(seen.into_iter().collect())
}
