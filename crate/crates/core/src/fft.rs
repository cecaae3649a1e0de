//! Multidimensional complex FFT on cubic row-major buffers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::exec::{for_each_chunk, for_each_chunk_init, Execution};
use crate::geometry::Dim;

/// Unnormalized forward/inverse transforms over all axes of a `side^n` array.
#[derive(Clone)]
pub struct FftNd {
    dim: Dim,
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd")
            .field("dim", &self.dim)
            .field("side", &self.side)
            .finish()
    }
}

impl FftNd {
    pub fn new(dim: Dim, side: usize) -> FftNd {
        let mut planner = FftPlanner::new();
        FftNd {
            dim,
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.dim.n() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    pub fn forward(&self, data: &mut [Complex64], exec: Execution) {
        self.process(data, &self.forward, exec);
    }

    /// Inverse transform without the `1/len` factor.
    pub fn inverse(&self, data: &mut [Complex64], exec: Execution) {
        self.process(data, &self.inverse, exec);
    }

    fn process(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>, exec: Execution) {
        assert_eq!(
            data.len(),
            self.len(),
            "buffer does not match transform size"
        );
        let p = self.side;
        let scratch_len = fft.get_inplace_scratch_len();
        let rows = |buf: &mut [Complex64]| {
            for_each_chunk_init(
                exec,
                buf,
                p,
                || vec![Complex64::default(); scratch_len],
                |s, _, line| fft.process_with_scratch(line, s),
            );
        };
        rows(data);
        let mut tmp = vec![Complex64::default(); data.len()];
        match self.dim {
            Dim::Two => {
                transpose(exec, data, p, p, &mut tmp);
                rows(&mut tmp);
                transpose(exec, &tmp, p, p, data);
            }
            Dim::Three => {
                for_each_chunk_init(
                    exec,
                    data,
                    p * p,
                    || {
                        (
                            vec![Complex64::default(); scratch_len],
                            vec![Complex64::default(); p * p],
                        )
                    },
                    |(s, plane), _, chunk| {
                        transpose(Execution::Sequential, chunk, p, p, plane);
                        for line in plane.chunks_mut(p) {
                            fft.process_with_scratch(line, s);
                        }
                        transpose(Execution::Sequential, plane, p, p, chunk);
                    },
                );
                transpose(exec, data, p, p * p, &mut tmp);
                rows(&mut tmp);
                transpose(exec, &tmp, p * p, p, data);
            }
        }
    }
}

/// `out[c][r] = input[r][c]` for an input of `rows x cols`.
fn transpose(
    exec: Execution,
    input: &[Complex64],
    rows: usize,
    cols: usize,
    out: &mut [Complex64],
) {
    for_each_chunk(exec, out, rows, |c, line| {
        for (r, v) in line.iter_mut().enumerate() {
            *v = input[r * cols + c];
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(dim: Dim, side: usize, data: &[Complex64]) -> Vec<Complex64> {
        let n = dim.n();
        let len = data.len();
        let idx = |i: usize| -> Vec<usize> {
            (0..n)
                .rev()
                .map(|a| (i / side.pow(a as u32)) % side)
                .collect()
        };
        (0..len)
            .map(|m| {
                let mi = idx(m);
                (0..len)
                    .map(|j| {
                        let ji = idx(j);
                        let phase: f64 = mi.iter().zip(&ji).map(|(a, b)| (a * b) as f64).sum();
                        data[j] * Complex64::cis(-2.0 * std::f64::consts::PI * phase / side as f64)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for dim in [Dim::Two, Dim::Three] {
            let side: usize = 4;
            let len = side.pow(dim.n() as u32);
            let data: Vec<Complex64> = (0..len)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
                .collect();
            let expected = naive_dft(dim, side, &data);
            for exec in [Execution::Sequential, Execution::Parallel] {
                let mut got = data.clone();
                FftNd::new(dim, side).forward(&mut got, exec);
                for (a, b) in got.iter().zip(&expected) {
                    assert!((a - b).norm() < 1e-12);
                }
                FftNd::new(dim, side).inverse(&mut got, exec);
                for (a, b) in got.iter().zip(&data) {
                    assert!((a / len as f64 - b).norm() < 1e-14);
                }
            }
        }
    }
}
