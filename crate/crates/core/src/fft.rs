//! Thin n-dimensional wrapper over `rustfft` for periodic grids.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

/// Forward and inverse plans for one [`GridSpec`].
#[derive(Clone)]
pub struct FftGrid {
    spec: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftGrid {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(spec.points());
        let inverse = planner.plan_fft_inverse(spec.points());
        Self { spec, forward, inverse }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward_real(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        buf
    }

    /// Inverse DFT normalized by `N^n`, keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.inverse);
        let scale = 1.0 / self.spec.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Inverse DFT normalized by `N^n`, keeping both parts.
    pub fn inverse_complex(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut spectrum, &self.inverse);
        let scale = 1.0 / self.spec.len() as f64;
        spectrum.iter_mut().for_each(|c| *c *= scale);
        spectrum
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.spec.points();
        match self.spec.dim() {
            1 => plan.process(buf),
            _ => {
                plan.process(buf);
                transpose_square(buf, n);
                plan.process(buf);
                transpose_square(buf, n);
            }
        }
    }

    /// Signed integer mode of a flat spectral index, in `[-N/2, N/2)` per axis.
    pub fn mode(&self, index: usize) -> [i64; 2] {
        let n = self.spec.points() as i64;
        let c = self.spec.coords(index);
        let signed = |k: usize| {
            let k = k as i64;
            if k >= n / 2 {
                k - n
            } else {
                k
            }
        };
        match self.spec.dim() {
            1 => [signed(c[0]), 0],
            _ => [signed(c[0]), signed(c[1])],
        }
    }

    /// Physical wavevector `ξ = 2π k / L`.
    pub fn wavevector(&self, index: usize) -> [f64; 2] {
        let k = self.mode(index);
        let scale = 2.0 * PI / self.spec.period();
        [k[0] as f64 * scale, k[1] as f64 * scale]
    }

    /// `|ξ|` of every spectral index.
    pub fn frequency_norms(&self) -> Vec<f64> {
        (0..self.spec.len())
            .map(|i| {
                let xi = self.wavevector(i);
                (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
            })
            .collect()
    }

    /// Whether the index sits on the Nyquist mode `-N/2` along `axis`.
    pub fn is_nyquist(&self, index: usize, axis: usize) -> bool {
        self.mode(index)[axis] == -(self.spec.points() as i64 / 2)
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let spec = GridSpec::new(2, 16, 1.0).unwrap();
        let fft = FftGrid::new(spec);
        let v: Vec<f64> = (0..spec.len()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let back = fft.inverse_real(fft.forward_real(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let spec = GridSpec::new(2, 16, 1.0).unwrap();
        let fft = FftGrid::new(spec);
        let v: Vec<f64> = (0..spec.len())
            .map(|i| {
                let x = spec.position(i);
                (2.0 * PI * (3.0 * x[0] - 2.0 * x[1])).cos()
            })
            .collect();
        let hat = fft.forward_real(&v);
        for (i, c) in hat.iter().enumerate() {
            let k = fft.mode(i);
            let expected = if k == [3, -2] || k == [-3, 2] { 0.5 * spec.len() as f64 } else { 0.0 };
            assert!((c.re - expected).abs() < 1e-9 && c.im.abs() < 1e-9, "{k:?} {c}");
        }
    }
}
