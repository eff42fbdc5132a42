//! Seeded sampling of points and tangent vectors.
//!
//! The generator is SplitMix64 seeded directly with the user seed; normal
//! deviates come from `rand_distr::StandardNormal`. Every sample drawn from a
//! given seed is therefore reproducible across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;

use crate::nkspace::{PointNK, TangentNK};
use crate::quat::{ImQuat, Quaternion};

pub struct Sampler {
    rng: SplitMix64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: SplitMix64::seed_from_u64(seed) }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn im_quat(&mut self) -> ImQuat {
        ImQuat::new(self.normal(), self.normal(), self.normal())
    }

    pub fn unit_im_quat(&mut self) -> ImQuat {
        loop {
            let v = self.im_quat();
            let n = v.norm();
            if n > 1e-6 {
                return v.scale(1.0 / n);
            }
        }
    }

    /// Uniformly distributed unit quaternion (normalized Gaussian 4-vector).
    pub fn unit_quat(&mut self) -> Quaternion {
        loop {
            let q = Quaternion::new(self.normal(), self.normal(), self.normal(), self.normal());
            if let Ok(u) = q.normalize() {
                if q.norm() > 1e-6 {
                    return u;
                }
            }
        }
    }

    pub fn point(&mut self) -> PointNK {
        PointNK::new_unchecked(self.unit_quat(), self.unit_quat())
    }

    /// Tangent vector `(p·a, q·b)` with `a`, `b` standard Gaussian imaginary
    /// quaternions; draws span the full six-dimensional tangent space.
    pub fn tangent(&mut self, base: PointNK) -> TangentNK {
        let a = self.im_quat();
        let b = self.im_quat();
        TangentNK::from_left_trivialized(base, a, b)
    }
}

pub fn random_point(seed: u64) -> PointNK {
    Sampler::new(seed).point()
}

pub fn random_tangent(base: PointNK, seed: u64) -> TangentNK {
    Sampler::new(seed).tangent(base)
}
