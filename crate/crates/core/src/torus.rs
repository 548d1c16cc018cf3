//! Geometry of the periodic lattice `Λ_{L,d} = ((-L/2, L/2] ∩ Z)^d`.
//!
//! Sites are enumerated row-major: the first coordinate varies slowest and
//! each coordinate runs over `c_min, c_min + 1, …, ⌊L/2⌋` with
//! `c_min = ⌊L/2⌋ − L + 1`. Array-valued fields over the torus (kernels,
//! symbols, predictions) are always stored in this order, and the dual
//! lattice of frequencies uses the same index set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default refusal threshold for materialising lattice-sized arrays.
pub const DEFAULT_SIZE_CAP: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGeometry {
    side: usize,
    dim: usize,
    sites: usize,
}

/// A canonical representative: every coordinate lies in `(-L/2, L/2]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<i64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }

    pub fn norm2_sq(&self) -> f64 {
        self.0.iter().map(|&c| (c as f64) * (c as f64)).sum()
    }
}

/// Exponent of an `l^p` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormExponent {
    Finite(f64),
    Infinity,
}

impl NormExponent {
    pub const L1: NormExponent = NormExponent::Finite(1.0);
    pub const L2: NormExponent = NormExponent::Finite(2.0);
}

impl TorusGeometry {
    pub fn new(side: usize, dim: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::InvalidParameter(format!("side length L = {side} must be at least 2")));
        }
        if dim < 1 {
            return Err(Error::InvalidParameter("dimension d must be at least 1".into()));
        }
        let sites = (side as u128)
            .checked_pow(dim as u32)
            .filter(|&n| n <= usize::MAX as u128)
            .ok_or(Error::Capacity { sites: u128::MAX, cap: usize::MAX })?;
        Ok(Self { side, dim, sites: sites as usize })
    }

    /// Side length `L`.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Site count `N = L^d`.
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Smallest coordinate value of a canonical representative.
    pub fn coord_min(&self) -> i64 {
        (self.side / 2) as i64 - self.side as i64 + 1
    }

    /// Largest coordinate value of a canonical representative, `⌊L/2⌋`.
    pub fn coord_max(&self) -> i64 {
        (self.side / 2) as i64
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got });
        }
        Ok(())
    }

    /// Reduce a single integer into `(-L/2, L/2]`.
    #[inline]
    pub fn reduce(&self, c: i64) -> i64 {
        let l = self.side as i64;
        let r = c.rem_euclid(l);
        if 2 * r > l {
            r - l
        } else {
            r
        }
    }

    pub fn canonical_rep(&self, x: &[i64]) -> Result<LatticePoint> {
        self.check_dim(x.len())?;
        Ok(LatticePoint(x.iter().map(|&c| self.reduce(c)).collect()))
    }

    /// `l^p` norm of the canonical representative of `x`.
    pub fn periodic_norm(&self, x: &[i64], p: NormExponent) -> Result<f64> {
        self.check_dim(x.len())?;
        let reduced = x.iter().map(|&c| self.reduce(c).unsigned_abs() as f64);
        match p {
            NormExponent::Infinity => Ok(reduced.fold(0.0, f64::max)),
            NormExponent::Finite(p) if p >= 1.0 && p.is_finite() => {
                if p == 1.0 {
                    Ok(reduced.sum())
                } else if p == 2.0 {
                    Ok(reduced.map(|a| a * a).sum::<f64>().sqrt())
                } else {
                    Ok(reduced.map(|a| a.powf(p)).sum::<f64>().powf(1.0 / p))
                }
            }
            NormExponent::Finite(p) => Err(Error::InvalidParameter(format!("norm exponent p = {p} must be >= 1"))),
        }
    }

    /// Periodic distance `‖[x − y]_L‖_p` between two points.
    pub fn periodic_distance(&self, x: &[i64], y: &[i64], p: NormExponent) -> Result<f64> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        let diff: Vec<i64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.periodic_norm(&diff, p)
    }

    /// Every site of the torus in the fixed row-major order.
    pub fn lattice_points(&self, size_cap: usize) -> Result<Vec<LatticePoint>> {
        self.ensure_within(size_cap)?;
        Ok((0..self.sites).map(|i| self.point_at(i)).collect())
    }

    pub fn ensure_within(&self, size_cap: usize) -> Result<()> {
        if self.sites > size_cap {
            return Err(Error::Capacity { sites: self.sites as u128, cap: size_cap });
        }
        Ok(())
    }

    /// Fill `out` with the coordinates of the site at enumeration `index`.
    #[inline]
    pub fn coords_into(&self, mut index: usize, out: &mut [i64]) {
        let cmin = self.coord_min();
        for slot in out.iter_mut().rev() {
            *slot = (index % self.side) as i64 + cmin;
            index /= self.side;
        }
    }

    pub fn point_at(&self, index: usize) -> LatticePoint {
        let mut c = vec![0; self.dim];
        self.coords_into(index, &mut c);
        LatticePoint(c)
    }

    /// Enumeration index of the canonical representative of `x`.
    pub fn index_of(&self, x: &[i64]) -> Result<usize> {
        self.check_dim(x.len())?;
        let cmin = self.coord_min();
        Ok(x.iter().fold(0usize, |acc, &c| acc * self.side + (self.reduce(c) - cmin) as usize))
    }

    /// Index of the origin in the enumeration.
    pub fn origin_index(&self) -> usize {
        let offset = (-self.coord_min()) as usize;
        (0..self.dim).fold(0, |acc, _| acc * self.side + offset)
    }

    /// Index of `-x` for the site at `index`.
    pub fn negated_index(&self, index: usize) -> usize {
        let mut c = vec![0; self.dim];
        self.coords_into(index, &mut c);
        let cmin = self.coord_min();
        c.iter().fold(0usize, |acc, &v| acc * self.side + (self.reduce(-v) - cmin) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(l: usize, d: usize) -> TorusGeometry {
        TorusGeometry::new(l, d).unwrap()
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(g(10, 1).canonical_rep(&[7]).unwrap().coords(), &[-3]);
        assert_eq!(g(10, 1).canonical_rep(&[-5]).unwrap().coords(), &[5]);
        assert_eq!(g(8, 2).canonical_rep(&[0, 0]).unwrap().coords(), &[0, 0]);
        assert!(matches!(g(8, 2).canonical_rep(&[1]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(g(10, 1).periodic_norm(&[7], NormExponent::L2).unwrap(), 3.0);
        assert_eq!(g(10, 2).periodic_norm(&[5, 5], NormExponent::L1).unwrap(), 10.0);
        assert_eq!(g(12, 1).periodic_norm(&[12], NormExponent::L2).unwrap(), 0.0);
        assert!(g(12, 1).periodic_norm(&[1], NormExponent::Finite(0.5)).is_err());
        assert_eq!(g(10, 2).periodic_norm(&[3, -14], NormExponent::Infinity).unwrap(), 4.0);
    }

    #[test]
    fn enumeration_examples() {
        let pts: Vec<_> = g(2, 1).lattice_points(DEFAULT_SIZE_CAP).unwrap().into_iter().map(|p| p.into_coords()).collect();
        assert_eq!(pts, vec![vec![0], vec![1]]);
        let pts: Vec<_> = g(3, 1).lattice_points(DEFAULT_SIZE_CAP).unwrap().into_iter().map(|p| p.into_coords()).collect();
        assert_eq!(pts, vec![vec![-1], vec![0], vec![1]]);
        let pts = g(2, 2).lattice_points(DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(pts.len(), 4);
        let mut dedup = pts.clone();
        dedup.sort_by(|a, b| a.coords().cmp(b.coords()));
        dedup.dedup();
        assert_eq!(dedup.len(), 4);
    }

    #[test]
    fn capacity_refused() {
        let geom = g(64, 3);
        assert!(matches!(geom.lattice_points(1000), Err(Error::Capacity { .. })));
    }

    #[test]
    fn index_roundtrip_and_origin() {
        let geom = g(7, 3);
        for i in 0..geom.sites() {
            let p = geom.point_at(i);
            assert_eq!(geom.index_of(p.coords()).unwrap(), i);
        }
        assert_eq!(geom.point_at(geom.origin_index()).coords(), &[0, 0, 0]);
        let geom = g(8, 2);
        let i = geom.index_of(&[2, 4]).unwrap();
        assert_eq!(geom.point_at(geom.negated_index(i)).coords(), &[-2, 4]);
    }

    #[test]
    fn bad_geometry() {
        assert!(TorusGeometry::new(1, 1).is_err());
        assert!(TorusGeometry::new(4, 0).is_err());
    }
}
