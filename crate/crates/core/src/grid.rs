//! Rectangular parameter grids and second-order finite differences on them.
//!
//! Node `(i, j)` sits at `(u0 + i·du, v0 + j·dv)` and is stored at index
//! `i·nv + j` (u-major). Along a periodic axis the right end of the domain
//! is identified with the left one and is not a node; differences wrap.
//! Along a closed axis the end nodes use one-sided second-order stencils and
//! are excluded from interior statistics.

use std::ops::{Add, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::ImQuat;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
    pub periodic: [bool; 2],
}

impl Domain {
    pub fn new(u0: f64, u1: f64, v0: f64, v1: f64) -> Self {
        Self { u0, u1, v0, v1, periodic: [false, false] }
    }

    pub fn with_periodic(mut self, periodic: [bool; 2]) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic[0] || self.periodic[1]
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.u0, self.u1, self.v0, self.v1]
    }
}

/// A domain together with its node counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeom {
    pub domain: Domain,
    pub nu: usize,
    pub nv: usize,
}

impl GridGeom {
    pub fn new(domain: Domain, nu: usize, nv: usize) -> Result<Self> {
        if nu < 3 || nv < 3 {
            return Err(Error::BadInput(format!("grid {nu}x{nv} needs at least 3 nodes per axis")));
        }
        if !(domain.u1 > domain.u0) || !(domain.v1 > domain.v0) {
            return Err(Error::BadInput(format!("empty domain {:?}", domain.as_array())));
        }
        Ok(Self { domain, nu, nv })
    }

    pub fn du(&self) -> f64 {
        let n = if self.domain.periodic[0] { self.nu } else { self.nu - 1 };
        (self.domain.u1 - self.domain.u0) / n as f64
    }

    pub fn dv(&self) -> f64 {
        let n = if self.domain.periodic[1] { self.nv } else { self.nv - 1 };
        (self.domain.v1 - self.domain.v0) / n as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        self.domain.u0 + i as f64 * self.du()
    }

    pub fn v(&self, j: usize) -> f64 {
        self.domain.v0 + j as f64 * self.dv()
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        let iu = self.domain.periodic[0] || (i > 0 && i + 1 < self.nu);
        let iv = self.domain.periodic[1] || (j > 0 && j + 1 < self.nv);
        iu && iv
    }

    /// Node index nearest to `(u, v)` if the point coincides with a node.
    pub fn node_of(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        let locate = |x: f64, x0: f64, span: f64, h: f64, n: usize, periodic: bool| {
            let mut t = (x - x0) / h;
            if periodic {
                let period = span / h;
                t = t.rem_euclid(period);
                if (t - period).abs() < 1e-6 {
                    t = 0.0;
                }
            }
            let r = t.round();
            if (t - r).abs() > 1e-6 || r < 0.0 || r as usize >= n {
                None
            } else {
                Some(r as usize)
            }
        };
        let d = &self.domain;
        let i = locate(u, d.u0, d.u1 - d.u0, self.du(), self.nu, d.periodic[0])?;
        let j = locate(v, d.v0, d.v1 - d.v0, self.dv(), self.nv, d.periodic[1])?;
        Some((i, j))
    }

    /// Same grid with both node counts refined to `2n − 1` (closed axes) or
    /// `2n` (periodic axes), so that every old node remains a node.
    pub fn refined(&self) -> Self {
        let r = |n: usize, p: bool| if p { 2 * n } else { 2 * n - 1 };
        Self { domain: self.domain, nu: r(self.nu, self.domain.periodic[0]), nv: r(self.nv, self.domain.periodic[1]) }
    }
}

/// Values of type `T` on the nodes of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2<T> {
    pub geom: GridGeom,
    pub data: Vec<T>,
}

impl<T: Send> Grid2<T> {
    /// Evaluates `f(i, j)` at every node (in parallel; result order is fixed).
    pub fn from_fn<F>(geom: GridGeom, f: F) -> Self
    where
        F: Fn(usize, usize) -> T + Sync,
    {
        let nv = geom.nv;
        let data = (0..geom.len()).into_par_iter().map(|k| f(k / nv, k % nv)).collect();
        Self { geom, data }
    }

    pub fn try_from_fn<F>(geom: GridGeom, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<T> + Sync,
    {
        let nv = geom.nv;
        let data = (0..geom.len()).into_par_iter().map(|k| f(k / nv, k % nv)).collect::<Result<Vec<T>>>()?;
        Ok(Self { geom, data })
    }
}

impl<T: Copy> Grid2<T> {
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[self.geom.index(i, j)]
    }

    pub fn map<U: Send, F: Fn(T) -> U + Sync>(&self, f: F) -> Grid2<U>
    where
        T: Sync,
    {
        Grid2 { geom: self.geom, data: self.data.par_iter().map(|&x| f(x)).collect() }
    }
}

impl Grid2<f64> {
    /// Largest value over interior nodes (NaN propagates as +∞).
    pub fn max_interior(&self) -> f64 {
        self.fold_interior(f64::NEG_INFINITY, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
    }

    pub fn min_interior(&self) -> f64 {
        self.fold_interior(f64::INFINITY, |m, x| if x.is_nan() { f64::NEG_INFINITY } else { m.min(x) })
    }

    pub fn max_abs_interior(&self) -> f64 {
        self.map(f64::abs).max_interior()
    }

    pub fn max_all(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
    }

    pub fn min_all(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &x| if x.is_nan() { f64::NEG_INFINITY } else { m.min(x) })
    }

    /// Mean over interior nodes by pairwise summation.
    pub fn mean_interior(&self) -> f64 {
        let vals = self.interior_values();
        pairwise_sum(&vals) / vals.len() as f64
    }

    pub fn interior_values(&self) -> Vec<f64> {
        let g = &self.geom;
        let mut out = Vec::with_capacity(g.len());
        for i in 0..g.nu {
            for j in 0..g.nv {
                if g.is_interior(i, j) {
                    out.push(self.at(i, j));
                }
            }
        }
        out
    }

    fn fold_interior(&self, init: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        let g = &self.geom;
        let mut acc = init;
        for i in 0..g.nu {
            for j in 0..g.nv {
                if g.is_interior(i, j) {
                    acc = f(acc, self.at(i, j));
                }
            }
        }
        acc
    }
}

/// Pairwise (cascade) summation; the result does not depend on scheduling.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Values that can be differenced on a grid.
pub trait GridValue: Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> {
    fn scaled(self, s: f64) -> Self;
}

impl GridValue for f64 {
    fn scaled(self, s: f64) -> Self {
        self * s
    }
}

impl GridValue for ImQuat {
    fn scaled(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl GridValue for Complex64 {
    fn scaled(self, s: f64) -> Self {
        self * s
    }
}

#[derive(Clone, Copy)]
enum Axis {
    U,
    V,
}

fn line_values<T: GridValue>(g: &Grid2<T>, axis: Axis, i: usize, j: usize, k: isize) -> T {
    let geom = &g.geom;
    match axis {
        Axis::U => {
            let n = geom.nu as isize;
            let ii = (i as isize + k).rem_euclid(n) as usize;
            g.at(ii, j)
        }
        Axis::V => {
            let n = geom.nv as isize;
            let jj = (j as isize + k).rem_euclid(n) as usize;
            g.at(i, jj)
        }
    }
}

fn derivative<T: GridValue>(g: &Grid2<T>, axis: Axis, second: bool) -> Grid2<T> {
    let geom = g.geom;
    let (h, n, periodic) = match axis {
        Axis::U => (geom.du(), geom.nu, geom.domain.periodic[0]),
        Axis::V => (geom.dv(), geom.nv, geom.domain.periodic[1]),
    };
    Grid2::from_fn(geom, |i, j| {
        let pos = match axis {
            Axis::U => i,
            Axis::V => j,
        };
        let f = |k: isize| line_values(g, axis, i, j, k);
        if periodic || (pos > 0 && pos + 1 < n) {
            if second {
                (f(1) - f(0).scaled(2.0) + f(-1)).scaled(1.0 / (h * h))
            } else {
                (f(1) - f(-1)).scaled(0.5 / h)
            }
        } else {
            // one-sided, second order; `s` points into the domain
            let s: isize = if pos == 0 { 1 } else { -1 };
            if second {
                (f(0).scaled(2.0) - f(s).scaled(5.0) + f(2 * s).scaled(4.0) - f(3 * s)).scaled(1.0 / (h * h))
            } else {
                (f(s).scaled(4.0) - f(0).scaled(3.0) - f(2 * s)).scaled(s as f64 * 0.5 / h)
            }
        }
    })
}

pub fn d_u<T: GridValue>(g: &Grid2<T>) -> Grid2<T> {
    derivative(g, Axis::U, false)
}

pub fn d_v<T: GridValue>(g: &Grid2<T>) -> Grid2<T> {
    derivative(g, Axis::V, false)
}

pub fn d_uu<T: GridValue>(g: &Grid2<T>) -> Grid2<T> {
    derivative(g, Axis::U, true)
}

pub fn d_vv<T: GridValue>(g: &Grid2<T>) -> Grid2<T> {
    derivative(g, Axis::V, true)
}

/// Weights `(offset, c)` of the first-derivative stencil at position `pos`
/// of an axis with `n` nodes, to be divided by the spacing.
///
/// Fourth-order central differences; on closed axes the first and last two
/// nodes use six-point one-sided stencils (fifth order), and axes shorter
/// than six nodes fall back to the second-order stencils.
pub(crate) fn first_derivative_weights(pos: usize, n: usize, periodic: bool) -> Vec<(isize, f64)> {
    let scaled = |w: &[(isize, f64)], d: f64, sign: isize| w.iter().map(|&(k, c)| (sign * k, sign as f64 * c / d)).collect();
    let from_end = n - 1 - pos;
    if periodic && n >= 5 || (pos >= 2 && from_end >= 2) {
        return scaled(&[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)], 12.0, 1);
    }
    if periodic || n < 6 {
        return if periodic || (pos > 0 && from_end > 0) {
            scaled(&[(-1, -1.0), (1, 1.0)], 2.0, 1)
        } else {
            scaled(&[(0, -3.0), (1, 4.0), (2, -1.0)], 2.0, if pos == 0 { 1 } else { -1 })
        };
    }
    const EDGE: [(isize, f64); 6] = [(0, -137.0), (1, 300.0), (2, -300.0), (3, 200.0), (4, -75.0), (5, 12.0)];
    const NEXT: [(isize, f64); 6] = [(-1, -12.0), (0, -65.0), (1, 120.0), (2, -60.0), (3, 20.0), (4, -3.0)];
    match (pos, from_end) {
        (0, _) => scaled(&EDGE, 60.0, 1),
        (1, _) => scaled(&NEXT, 60.0, 1),
        (_, 0) => scaled(&EDGE, 60.0, -1),
        _ => scaled(&NEXT, 60.0, -1),
    }
}

fn derivative4<T: GridValue>(g: &Grid2<T>, axis: Axis) -> Grid2<T> {
    let geom = g.geom;
    let (h, n, periodic) = match axis {
        Axis::U => (geom.du(), geom.nu, geom.domain.periodic[0]),
        Axis::V => (geom.dv(), geom.nv, geom.domain.periodic[1]),
    };
    Grid2::from_fn(geom, |i, j| {
        let pos = match axis {
            Axis::U => i,
            Axis::V => j,
        };
        let w = first_derivative_weights(pos, n, periodic);
        let f = |k: isize| line_values(g, axis, i, j, k);
        let mut acc = f(w[0].0).scaled(w[0].1);
        for &(k, c) in &w[1..] {
            acc = acc + f(k).scaled(c);
        }
        acc.scaled(1.0 / h)
    })
}

/// Fourth-order first derivative along `u`; see [`first_derivative_weights`].
pub fn d_u4<T: GridValue>(g: &Grid2<T>) -> Grid2<T> {
    derivative4(g, Axis::U)
}

pub fn d_v4<T: GridValue>(g: &Grid2<T>) -> Grid2<T> {
    derivative4(g, Axis::V)
}

/// Five-point Laplacian (one-sided second derivatives on closed edges).
pub fn laplacian<T: GridValue>(g: &Grid2<T>) -> Grid2<T> {
    let (a, b) = (d_uu(g), d_vv(g));
    Grid2::from_fn(g.geom, |i, j| a.at(i, j) + b.at(i, j))
}

/// Observed convergence order `log2(e_coarse / e_fine)` for successive
/// halvings of the step.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(nu: usize, nv: usize, periodic: [bool; 2]) -> GridGeom {
        GridGeom::new(Domain::new(0.0, 2.0, -1.0, 1.0).with_periodic(periodic), nu, nv).unwrap()
    }

    #[test]
    fn node_layout() {
        let g = geom(5, 3, [false, false]);
        assert_eq!(g.du(), 0.5);
        assert_eq!(g.dv(), 1.0);
        assert_eq!(g.index(2, 1), 7);
        assert_eq!(g.node_of(1.5, 0.0), Some((3, 1)));
        assert_eq!(g.node_of(1.4, 0.0), None);
        let p = geom(4, 3, [true, false]);
        assert_eq!(p.du(), 0.5);
        assert_eq!(p.node_of(2.0, 1.0), Some((0, 2)));
        assert_eq!(p.node_of(-0.5, 1.0), Some((3, 2)));
        assert!(p.is_interior(0, 1) && !p.is_interior(0, 0));
    }

    #[test]
    fn differences_of_quadratics_are_exact() {
        let g = geom(9, 7, [false, false]);
        let f = Grid2::from_fn(g, |i, j| {
            let (u, v) = (g.u(i), g.v(j));
            u * u - 3.0 * u * v + 2.0 * v * v + u
        });
        let fu = d_u(&f);
        let fvv = d_vv(&f);
        for i in 0..g.nu {
            for j in 0..g.nv {
                let (u, v) = (g.u(i), g.v(j));
                assert!((fu.at(i, j) - (2.0 * u - 3.0 * v + 1.0)).abs() < 1e-12);
                assert!((fvv.at(i, j) - 4.0).abs() < 1e-10);
            }
        }
        let lap = laplacian(&f);
        assert!((lap.max_all() - 6.0).abs() < 1e-10 && (lap.min_all() - 6.0).abs() < 1e-10);
    }

    #[test]
    fn fourth_order_stencils_are_exact_on_quartics() {
        let g = geom(11, 9, [false, false]);
        let f = Grid2::from_fn(g, |i, j| {
            let (u, v) = (g.u(i), g.v(j));
            u.powi(4) - 2.0 * u.powi(3) * v + v.powi(4) + u
        });
        let (fu, fv) = (d_u4(&f), d_v4(&f));
        for i in 0..g.nu {
            for j in 0..g.nv {
                let (u, v) = (g.u(i), g.v(j));
                assert!((fu.at(i, j) - (4.0 * u.powi(3) - 6.0 * u * u * v + 1.0)).abs() < 1e-10);
                assert!((fv.at(i, j) - (-2.0 * u.powi(3) + 4.0 * v.powi(3))).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn periodic_derivative_converges() {
        let err = |n: usize| {
            let g = GridGeom::new(
                Domain::new(0.0, std::f64::consts::TAU, 0.0, 1.0).with_periodic([true, false]),
                n,
                3,
            )
            .unwrap();
            let f = Grid2::from_fn(g, |i, _| g.u(i).sin());
            let fu = d_u(&f);
            (0..n).map(|i| (fu.at(i, 1) - g.u(i).cos()).abs()).fold(0.0, f64::max)
        };
        let orders = observed_orders(&[err(16), err(32), err(64)]);
        assert!(orders.iter().all(|&o| (o - 2.0).abs() < 0.1), "{orders:?}");
    }

    #[test]
    fn pairwise_sum_matches() {
        let v: Vec<f64> = (0..1000).map(|k| k as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&v), 249750.0);
    }
}
