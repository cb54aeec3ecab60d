//! Periodic spectral grid on [-L/2, L/2) with power-of-two collocation points.
//!
//! Frequencies are xi_j = 2*pi*j/L for j in {-n/2, ..., n/2 - 1}, stored in FFT
//! bin order (bin m holds j = m for m < n/2 and j = m - n otherwise). The
//! continuum Fourier normalization u_hat(xi) = integral e^{-i xi x} u(x) dx is
//! used throughout so that coefficients are grid-independent for band-limited
//! data.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{LabError, Result};

type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

pub struct Grid {
    length: f64,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // Transforms on the 2n-point padding grid, built on first dealiased product.
    padded: OnceLock<FftPair>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("length", &self.length)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.length.to_bits() == other.length.to_bits() && self.n == other.n
    }
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Arc<Grid>> {
        if !(length.is_finite() && length > 0.0) {
            return Err(LabError::Argument(format!("grid length must be positive, got {length}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(LabError::Argument(format!("grid size must be a power of two >= 4, got {n}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            length,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            padded: OnceLock::new(),
        }))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Frequency spacing 2*pi/L.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest resolvable |xi| (the unpaired -n/2 mode).
    pub fn max_xi(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Signed frequency index of FFT bin m.
    pub fn signed_index(&self, bin: usize) -> i64 {
        if bin < self.n / 2 {
            bin as i64
        } else {
            bin as i64 - self.n as i64
        }
    }

    /// FFT bin of signed index j in [-n/2, n/2).
    pub fn bin_of(&self, j: i64) -> usize {
        debug_assert!(j >= -(self.n as i64) / 2 && j < self.n as i64 / 2);
        j.rem_euclid(self.n as i64) as usize
    }

    pub fn xi(&self, bin: usize) -> f64 {
        self.signed_index(bin) as f64 * self.dxi()
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.dx()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Forward transform of physical samples into continuum-normalized
    /// coefficients, in place.
    pub(crate) fn samples_to_coeffs(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        let dx = self.dx();
        for (m, c) in buf.iter_mut().enumerate() {
            // (-1)^j accounts for x starting at -L/2; parity of j equals parity of m.
            let sign = if m % 2 == 0 { dx } else { -dx };
            *c *= sign;
        }
    }

    /// Inverse of [`samples_to_coeffs`], in place.
    pub(crate) fn coeffs_to_samples(&self, buf: &mut [Complex64]) {
        let inv_l = 1.0 / self.length;
        for (m, c) in buf.iter_mut().enumerate() {
            let sign = if m % 2 == 0 { inv_l } else { -inv_l };
            *c *= sign;
        }
        self.inverse.process(buf);
    }

    pub(crate) fn padded_plans(&self) -> &FftPair {
        self.padded.get_or_init(|| {
            let mut planner = FftPlanner::new();
            (
                planner.plan_fft_forward(2 * self.n),
                planner.plan_fft_inverse(2 * self.n),
            )
        })
    }
}

/// A region of the frequency line.
///
/// Unit boxes are right-open [k - 1/2, k + 1/2) so that boxes over k in Z tile
/// the line exactly; dyadic band j >= 1 is |xi| in [2^{j-1}, 2^j) and band 0 is
/// |xi| < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrequencyWindow {
    UnitBox(i64),
    DyadicBand(u32),
    Interval { lo: f64, hi: f64 },
}

impl FrequencyWindow {
    pub fn contains(&self, xi: f64) -> bool {
        match *self {
            FrequencyWindow::UnitBox(k) => {
                let k = k as f64;
                xi >= k - 0.5 && xi < k + 0.5
            }
            FrequencyWindow::DyadicBand(0) => xi.abs() < 1.0,
            FrequencyWindow::DyadicBand(j) => {
                let a = (j - 1) as f64;
                let lo = 2f64.powf(a);
                xi.abs() >= lo && xi.abs() < 2.0 * lo
            }
            FrequencyWindow::Interval { lo, hi } => xi >= lo && xi < hi,
        }
    }
}

/// Unit-box index containing xi: k = floor(xi + 1/2).
pub fn unit_box_of(xi: f64) -> i64 {
    (xi + 0.5).floor() as i64
}

/// Dyadic band index containing xi.
pub fn dyadic_band_of(xi: f64) -> u32 {
    let a = xi.abs();
    if a < 1.0 {
        0
    } else {
        a.log2().floor() as u32 + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basic_geometry() {
        let g = Grid::new(128.0, 256).unwrap();
        assert_eq!(g.dx() * g.n() as f64, g.length());
        assert_eq!(g.signed_index(0), 0);
        assert_eq!(g.signed_index(128), -128);
        assert_eq!(g.signed_index(255), -1);
        assert!((g.xi(1) - 2.0 * PI / 128.0).abs() < 1e-15);
        assert!((g.x(0) + 64.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(128.0, 100).is_err());
        assert!(Grid::new(-1.0, 128).is_err());
        assert!(Grid::new(f64::NAN, 128).is_err());
    }

    #[test]
    fn unit_boxes_tile_without_overlap() {
        // Box edges belong to exactly one box under the right-open convention.
        assert_eq!(unit_box_of(4.5), 5);
        assert_eq!(unit_box_of(4.499999), 4);
        assert_eq!(unit_box_of(-4.5), -4);
        assert!(FrequencyWindow::UnitBox(5).contains(4.5));
        assert!(!FrequencyWindow::UnitBox(4).contains(4.5));
        for xi in [-7.25, -0.5, 0.0, 0.49, 3.5, 10.1] {
            let k = unit_box_of(xi);
            assert!(FrequencyWindow::UnitBox(k).contains(xi));
            assert!(!FrequencyWindow::UnitBox(k - 1).contains(xi));
            assert!(!FrequencyWindow::UnitBox(k + 1).contains(xi));
        }
    }

    #[test]
    fn dyadic_bands_tile() {
        assert_eq!(dyadic_band_of(0.0), 0);
        assert_eq!(dyadic_band_of(0.99), 0);
        assert_eq!(dyadic_band_of(1.0), 1);
        assert_eq!(dyadic_band_of(1.99), 1);
        assert_eq!(dyadic_band_of(2.0), 2);
        assert_eq!(dyadic_band_of(-3.0), 2);
        assert_eq!(dyadic_band_of(4.0), 3);
        for xi in [0.1, 0.9, 1.5, 2.0, 5.3, 64.0, 100.7] {
            let j = dyadic_band_of(xi);
            assert!(FrequencyWindow::DyadicBand(j).contains(xi), "xi={xi} j={j}");
        }
    }
}
