//! Multidimensional DFT over torus-indexed arrays.
//!
//! Arrays are kept in the torus enumeration order (coordinates `c_min..=⌊L/2⌋`
//! per axis); the transforms reorder into DFT order (`0..L`, coordinate taken
//! mod `L`) internally.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::torus::TorusGeometry;

/// Sign of the exponent in `Σ_x v(x) e^{±2πi k·x/L}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

fn per_axis_map(geom: &TorusGeometry) -> Vec<usize> {
    let l = geom.side() as i64;
    let cmin = geom.coord_min();
    (0..l).map(|a| (a + cmin).rem_euclid(l) as usize).collect()
}

fn permutation(geom: &TorusGeometry) -> Vec<usize> {
    let l = geom.side();
    let axis = per_axis_map(geom);
    let mut perm = vec![0usize; geom.sites()];
    perm.par_iter_mut().enumerate().for_each(|(mut i, slot)| {
        let mut out = 0usize;
        let mut scale = 1usize;
        for _ in 0..geom.dim() {
            out += axis[i % l] * scale;
            i /= l;
            scale *= l;
        }
        *slot = out;
    });
    perm
}

fn transform_axis(data: &mut [Complex64], side: usize, stride: usize, fft: &Arc<dyn Fft<f64>>) {
    let block = side * stride;
    if stride == 1 {
        data.par_chunks_mut(side).for_each_init(
            || vec![Complex64::default(); fft.get_inplace_scratch_len()],
            |scratch, line| fft.process_with_scratch(line, scratch),
        );
        return;
    }
    let mut lines = vec![Complex64::default(); block];
    for chunk in data.chunks_mut(block) {
        {
            let src: &[Complex64] = chunk;
            lines.par_chunks_mut(side).enumerate().for_each(|(inner, line)| {
                for (j, v) in line.iter_mut().enumerate() {
                    *v = src[inner + j * stride];
                }
            });
        }
        lines.par_chunks_mut(side).for_each_init(
            || vec![Complex64::default(); fft.get_inplace_scratch_len()],
            |scratch, line| fft.process_with_scratch(line, scratch),
        );
        let src: &[Complex64] = &lines;
        chunk.par_chunks_mut(stride).enumerate().for_each(|(j, row)| {
            for (inner, v) in row.iter_mut().enumerate() {
                *v = src[inner * side + j];
            }
        });
    }
}

/// Unnormalised transform `out(k) = Σ_x v(x) e^{±2πi k·x/L}` with both
/// `v` and `out` in torus enumeration order.
pub fn dft(geom: &TorusGeometry, values: &[Complex64], sign: Sign) -> Vec<Complex64> {
    assert_eq!(values.len(), geom.sites());
    let perm = permutation(geom);
    let mut work = vec![Complex64::default(); values.len()];
    for (i, &p) in perm.iter().enumerate() {
        work[p] = values[i];
    }
    let side = geom.side();
    let mut planner = FftPlanner::<f64>::new();
    // rustfft's forward transform uses e^{-2πi…}
    let fft = match sign {
        Sign::Minus => planner.plan_fft_forward(side),
        Sign::Plus => planner.plan_fft_inverse(side),
    };
    let mut stride = geom.sites() / side;
    for _ in 0..geom.dim() {
        transform_axis(&mut work, side, stride, &fft);
        stride /= side;
    }
    perm.par_iter().map(|&p| work[p]).collect()
}

pub fn dft_real(geom: &TorusGeometry, values: &[f64], sign: Sign) -> Vec<Complex64> {
    let c: Vec<Complex64> = values.par_iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft(geom, &c, sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive(geom: &TorusGeometry, v: &[Complex64], sign: Sign) -> Vec<Complex64> {
        let s = if sign == Sign::Plus { 1.0 } else { -1.0 };
        let l = geom.side() as f64;
        (0..geom.sites())
            .map(|ki| {
                let k = geom.point_at(ki);
                (0..geom.sites())
                    .map(|xi| {
                        let x = geom.point_at(xi);
                        let dot: f64 = k.coords().iter().zip(x.coords()).map(|(a, b)| (a * b) as f64).sum();
                        v[xi] * Complex64::from_polar(1.0, s * 2.0 * PI * dot / l)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for (l, d) in [(5usize, 1usize), (6, 2), (4, 3), (7, 2)] {
            let geom = TorusGeometry::new(l, d).unwrap();
            let v: Vec<Complex64> = (0..geom.sites()).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64).cos() * 0.1)).collect();
            for sign in [Sign::Plus, Sign::Minus] {
                let fast = dft(&geom, &v, sign);
                let slow = naive(&geom, &v, sign);
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).norm() < 1e-11, "L={l} d={d}");
                }
            }
        }
    }
}
