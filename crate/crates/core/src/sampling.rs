//! Seeded samplers for point sets in `F_q^d`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::FieldSpace;
use crate::ffourier::PointSet;

/// How a random point set is drawn. Every sampler returns a nonempty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSampler {
    /// Each point kept independently with probability `p`.
    Density { p: f64 },
    /// Uniform size in `[min, max]`, then a uniform subset of that size.
    SizeRange { min: usize, max: usize },
    /// Translate of a random linear subspace of dimension `dim`.
    Subspace { dim: usize },
    /// The sphere `S_j` for a uniform random `j`.
    Sphere,
    /// Cartesian product of random coordinate subsets, each kept with probability `p`.
    Product { p: f64 },
    /// Cycles through density, subspace, sphere and product draws.
    Mixed,
}

impl SetSampler {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SetSampler::Density { p } | SetSampler::Product { p } if !(p > 0.0 && p <= 1.0) => {
                Err(Error::InvalidParameter(format!("probability {p} outside (0, 1]")))
            }
            SetSampler::SizeRange { min, max } if min == 0 || min > max => {
                Err(Error::InvalidParameter(format!("size range [{min}, {max}] is invalid")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng>(&self, space: FieldSpace, rng: &mut R) -> Result<PointSet> {
        self.validate()?;
        let n = space.size();
        let set = match *self {
            SetSampler::Density { p } => {
                let mask = (0..n).map(|_| rng.gen_bool(p)).collect();
                PointSet::from_mask(space, mask)?
            }
            SetSampler::SizeRange { min, max } => {
                let size = rng.gen_range(min.min(n)..=max.min(n));
                uniform_subset(space, size, rng)?
            }
            SetSampler::Subspace { dim } => subspace(space, dim.min(space.dim()), rng)?,
            SetSampler::Sphere => {
                let j = rng.gen_range(0..space.q());
                PointSet::from_indices(space, (0..n).filter(|&m| space.norm_at(m) == j))?
            }
            SetSampler::Product { p } => {
                let q = space.q() as usize;
                let factors: Vec<Vec<bool>> = (0..space.dim()).map(|_| (0..q).map(|_| rng.gen_bool(p)).collect()).collect();
                let mut coords = vec![0u32; space.dim()];
                let mask = (0..n)
                    .map(|i| {
                        space.coords_into(i, &mut coords);
                        coords.iter().zip(&factors).all(|(&c, f)| f[c as usize])
                    })
                    .collect();
                PointSet::from_mask(space, mask)?
            }
            SetSampler::Mixed => {
                let pick = rng.gen_range(0..4);
                let inner = match pick {
                    0 => SetSampler::Density { p: rng.gen_range(0.05..0.9) },
                    1 => SetSampler::Subspace { dim: rng.gen_range(0..space.dim()) },
                    2 => SetSampler::Sphere,
                    _ => SetSampler::Product { p: rng.gen_range(0.2..0.9) },
                };
                inner.sample(space, rng)?
            }
        };
        if set.is_empty() {
            // keep samplers total: fall back to a single uniform point
            let mut set = set;
            set.insert_index(rng.gen_range(0..n));
            return Ok(set);
        }
        Ok(set)
    }
}

pub fn uniform_subset<R: Rng>(space: FieldSpace, size: usize, rng: &mut R) -> Result<PointSet> {
    if size > space.size() {
        return Err(Error::InvalidParameter(format!("cannot draw {size} of {} points", space.size())));
    }
    let mut picked = index::sample(rng, space.size(), size).into_vec();
    picked.sort_unstable();
    PointSet::from_indices(space, picked)
}

fn subspace<R: Rng>(space: FieldSpace, dim: usize, rng: &mut R) -> Result<PointSet> {
    let basis: Vec<usize> = (0..dim).map(|_| rng.gen_range(0..space.size())).collect();
    let shift = rng.gen_range(0..space.size());
    let mut set = PointSet::from_indices(space, [shift])?;
    // span by repeated addition of basis vectors
    let mut frontier = vec![shift];
    for &b in &basis {
        let mut next = Vec::new();
        for &p in &frontier {
            let mut cur = p;
            for _ in 0..space.q() {
                cur = space.add_at(cur, b);
                set.insert_index(cur);
                next.push(cur);
            }
        }
        next.sort_unstable();
        next.dedup();
        frontier = next;
    }
    Ok(set)
}
