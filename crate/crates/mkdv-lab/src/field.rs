//! One function of x held as Fourier coefficients — the currency of the lab.

use std::sync::Arc;

use num_complex::Complex64;

use crate::grid::{FrequencyWindow, Grid};
use crate::{LabError, Result};

/// Relative tolerance for the conjugate-symmetry (realness) test.
const REAL_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    /// Coefficients in FFT bin order, continuum normalization.
    coeffs: Vec<Complex64>,
    real: bool,
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("real", &self.real)
            .field("l2", &self.l2_norm())
            .finish()
    }
}

/// Maximum |c| over coefficients, for relative comparisons.
fn max_abs(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
}

fn conjugate_symmetric(grid: &Grid, coeffs: &[Complex64]) -> bool {
    let scale = max_abs(coeffs);
    if scale == 0.0 {
        return true;
    }
    let tol = REAL_TOL * scale;
    let n = grid.n();
    if coeffs[0].im.abs() > tol || coeffs[n / 2].im.abs() > tol {
        return false;
    }
    for j in 1..n / 2 {
        let d = coeffs[j] - coeffs[n - j].conj();
        if d.norm() > tol {
            return false;
        }
    }
    true
}

impl SpectralField {
    pub fn zero(grid: &Arc<Grid>) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::ZERO; grid.n()],
            real: true,
        }
    }

    /// Transform real physical samples; the result is real-flagged.
    pub fn from_real_samples(grid: &Arc<Grid>, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(LabError::LengthMismatch { expected: grid.n(), got: samples.len() });
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        grid.samples_to_coeffs(&mut buf);
        Ok(SpectralField { grid: grid.clone(), coeffs: buf, real: true })
    }

    pub fn from_complex_samples(grid: &Arc<Grid>, samples: &[Complex64]) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(LabError::LengthMismatch { expected: grid.n(), got: samples.len() });
        }
        let mut buf = samples.to_vec();
        grid.samples_to_coeffs(&mut buf);
        let real = conjugate_symmetric(grid, &buf);
        Ok(SpectralField { grid: grid.clone(), coeffs: buf, real })
    }

    /// Build directly from coefficients in FFT bin order.
    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(LabError::LengthMismatch { expected: grid.n(), got: coeffs.len() });
        }
        let real = conjugate_symmetric(grid, &coeffs);
        Ok(SpectralField { grid: grid.clone(), coeffs, real })
    }

    /// Sample a spectral profile at the grid frequencies.
    pub fn from_spectrum<F>(grid: &Arc<Grid>, profile: F) -> Self
    where
        F: Fn(f64) -> Complex64,
    {
        let coeffs: Vec<Complex64> = (0..grid.n()).map(|m| profile(grid.xi(m))).collect();
        let real = conjugate_symmetric(grid, &coeffs);
        SpectralField { grid: grid.clone(), coeffs, real }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient at signed frequency index j.
    pub fn coeff(&self, j: i64) -> Complex64 {
        self.coeffs[self.grid.bin_of(j)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// Physical samples on the collocation points.
    pub fn samples(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        self.grid.coeffs_to_samples(&mut buf);
        buf
    }

    /// Physical samples of a real-flagged field.
    pub fn real_samples(&self) -> Result<Vec<f64>> {
        if !self.real {
            return Err(LabError::Argument("field is not real-flagged".into()));
        }
        Ok(self.samples().into_iter().map(|c| c.re).collect())
    }

    /// L2 norm via Parseval: ||u||^2 = (1/L) sum |u_hat|^2.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s / self.grid.length()).sqrt()
    }

    /// Largest |xi| carrying a nonzero coefficient; 0 for the zero field.
    pub fn max_support_xi(&self) -> f64 {
        let mut m = 0.0f64;
        for (bin, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() > 0.0 {
                m = m.max(self.grid.xi(bin).abs());
            }
        }
        m
    }

    /// True when the spectrum fits the cubic dealiasing band |j| <= n/4.
    pub fn within_dealias_band(&self) -> bool {
        self.max_support_xi() <= 0.5 * self.grid.max_xi()
    }

    /// Multiply every coefficient by m(xi_j).
    ///
    /// The real flag survives exactly when the multiplied coefficients are
    /// still conjugate-symmetric (in particular whenever m(-xi) = conj m(xi)).
    pub fn apply_multiplier<F>(&self, m: F) -> Result<SpectralField>
    where
        F: Fn(f64) -> Complex64,
    {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (bin, c) in self.coeffs.iter().enumerate() {
            let xi = self.grid.xi(bin);
            let v = m(xi);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(LabError::NonFinite { context: format!("multiplier at xi = {xi}") });
            }
            coeffs.push(c * v);
        }
        let real = self.real && conjugate_symmetric(&self.grid, &coeffs);
        Ok(SpectralField { grid: self.grid.clone(), coeffs, real })
    }

    /// Zero every coefficient outside the window.
    pub fn project(&self, window: FrequencyWindow) -> SpectralField {
        let coeffs: Vec<Complex64> = (0..self.coeffs.len())
            .map(|bin| {
                if window.contains(self.grid.xi(bin)) {
                    self.coeffs[bin]
                } else {
                    Complex64::ZERO
                }
            })
            .collect();
        let real = self.real && conjugate_symmetric(&self.grid, &coeffs);
        SpectralField { grid: self.grid.clone(), coeffs, real }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            real: self.real,
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip(other, |a, b| a - b)
    }

    fn zip<F>(&self, other: &SpectralField, f: F) -> Result<SpectralField>
    where
        F: Fn(Complex64, Complex64) -> Complex64,
    {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(LabError::GridMismatch);
        }
        let coeffs: Vec<Complex64> =
            self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        let real = self.real && other.real;
        Ok(SpectralField { grid: self.grid.clone(), coeffs, real })
    }

    /// Symmetrize coefficients to enforce exact conjugate symmetry.
    pub(crate) fn enforce_conjugate_symmetry(coeffs: &mut [Complex64]) {
        let n = coeffs.len();
        coeffs[0] = Complex64::new(coeffs[0].re, 0.0);
        coeffs[n / 2] = Complex64::new(coeffs[n / 2].re, 0.0);
        for j in 1..n / 2 {
            let avg = 0.5 * (coeffs[j] + coeffs[n - j].conj());
            coeffs[j] = avg;
            coeffs[n - j] = avg.conj();
        }
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, coeffs: Vec<Complex64>, real: bool) -> Self {
        SpectralField { grid, coeffs, real }
    }
}

/// Pad coefficients from the n-grid to the 2n fine grid (same frequency
/// spacing, doubled band). Continuum normalization makes this a plain copy.
fn pad_coeffs(grid: &Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let fine = 2 * n;
    let mut out = vec![Complex64::ZERO; fine];
    for (bin, &c) in coeffs.iter().enumerate() {
        let j = grid.signed_index(bin);
        let fine_bin = j.rem_euclid(fine as i64) as usize;
        out[fine_bin] = c;
    }
    out
}

/// Inverse transform on the fine grid (continuum normalization, 2n points).
fn fine_to_samples(grid: &Grid, buf: &mut [Complex64]) {
    let inv_l = 1.0 / grid.length();
    for (m, c) in buf.iter_mut().enumerate() {
        let sign = if m % 2 == 0 { inv_l } else { -inv_l };
        *c *= sign;
    }
    grid.padded_plans().1.process(buf);
}

fn fine_to_coeffs(grid: &Grid, buf: &mut [Complex64]) {
    grid.padded_plans().0.process(buf);
    let dxf = grid.length() / (2 * grid.n()) as f64;
    for (m, c) in buf.iter_mut().enumerate() {
        let sign = if m % 2 == 0 { dxf } else { -dxf };
        *c *= sign;
    }
}

fn truncate_to_grid(grid: &Grid, fine: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let fine_n = 2 * n;
    (0..n)
        .map(|bin| {
            let j = grid.signed_index(bin);
            fine[j.rem_euclid(fine_n as i64) as usize]
        })
        .collect()
}

/// Pointwise product f*g*h computed alias-free on the 2n padding grid.
///
/// Exact for factors band-limited to |j| <= n/4 (output truncated to the grid
/// band); factors outside that band still multiply but the caller accepts
/// aliasing of sums beyond twice the grid band.
pub fn dealiased_product(
    f: &SpectralField,
    g: &SpectralField,
    h: &SpectralField,
) -> Result<SpectralField> {
    if f.grid.as_ref() != g.grid.as_ref() || f.grid.as_ref() != h.grid.as_ref() {
        return Err(LabError::GridMismatch);
    }
    let grid = &f.grid;
    let mut a = pad_coeffs(grid, &f.coeffs);
    let mut b = pad_coeffs(grid, &g.coeffs);
    let mut c = pad_coeffs(grid, &h.coeffs);
    fine_to_samples(grid, &mut a);
    fine_to_samples(grid, &mut b);
    fine_to_samples(grid, &mut c);
    for i in 0..a.len() {
        a[i] *= b[i] * c[i];
    }
    fine_to_coeffs(grid, &mut a);
    let coeffs = truncate_to_grid(grid, &a);
    let real = f.real && g.real && h.real;
    Ok(SpectralField { grid: grid.clone(), coeffs, real })
}

/// f^3 with one transform pair instead of three.
pub fn dealiased_cube(f: &SpectralField) -> SpectralField {
    let grid = &f.grid;
    let mut a = pad_coeffs(grid, &f.coeffs);
    fine_to_samples(grid, &mut a);
    for v in a.iter_mut() {
        *v = *v * *v * *v;
    }
    fine_to_coeffs(grid, &mut a);
    let coeffs = truncate_to_grid(grid, &a);
    SpectralField { grid: grid.clone(), coeffs, real: f.real }
}

/// Raw-buffer cube for the time stepper: coeffs (bin order) -> coeffs of u^3.
pub(crate) fn cube_coeffs(grid: &Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut a = pad_coeffs(grid, coeffs);
    fine_to_samples(grid, &mut a);
    for v in a.iter_mut() {
        *v = *v * *v * *v;
    }
    fine_to_coeffs(grid, &mut a);
    truncate_to_grid(grid, &a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyWindow as FW;
    use std::f64::consts::{PI, TAU};

    fn grid() -> Arc<Grid> {
        Grid::new(128.0, 512).unwrap()
    }

    #[test]
    fn constant_has_only_dc_mode() {
        let g = grid();
        let samples = vec![1.0; g.n()];
        let f = SpectralField::from_real_samples(&g, &samples).unwrap();
        assert!((f.coeff(0).re - g.length()).abs() < 1e-9 * g.length());
        assert!(f.coeff(0).im.abs() < 1e-9);
        let off_dc: f64 = (1..g.n()).map(|m| f.coeffs()[m].norm()).sum();
        assert!(off_dc < 1e-9 * g.length());
    }

    #[test]
    fn cosine_splits_into_two_modes() {
        let g = grid();
        let samples: Vec<f64> = g.xs().map(|x| (TAU * x / g.length()).cos()).collect();
        let f = SpectralField::from_real_samples(&g, &samples).unwrap();
        let half_l = 0.5 * g.length();
        assert!((f.coeff(1).re - half_l).abs() < 1e-8 * half_l);
        assert!((f.coeff(-1).re - half_l).abs() < 1e-8 * half_l);
        assert!(f.coeff(2).norm() < 1e-8 * half_l);
    }

    #[test]
    fn roundtrip_random_real_samples() {
        let g = grid();
        let samples: Vec<f64> =
            (0..g.n()).map(|i| ((i * 2654435761) % 1000) as f64 / 500.0 - 1.0).collect();
        let f = SpectralField::from_real_samples(&g, &samples).unwrap();
        assert!(f.is_real());
        let back = f.real_samples().unwrap();
        let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        for (a, b) in samples.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let g = grid();
        assert!(matches!(
            SpectralField::from_real_samples(&g, &[1.0, 2.0]),
            Err(LabError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn parseval_holds() {
        let g = grid();
        let samples: Vec<f64> = g.xs().map(|x| (-x * x / 40.0).exp() * (3.0 * x).sin()).collect();
        let f = SpectralField::from_real_samples(&g, &samples).unwrap();
        let phys: f64 = samples.iter().map(|s| s * s).sum::<f64>() * g.dx();
        let spec = f.l2_norm().powi(2);
        assert!((phys - spec).abs() < 1e-12 * phys.max(1.0));
    }

    #[test]
    fn identity_multiplier_is_identity() {
        let g = grid();
        let f = SpectralField::from_spectrum(&g, |xi| {
            Complex64::new((-(xi - 2.0) * (xi - 2.0)).exp(), 0.0)
        });
        let out = f.apply_multiplier(|_| Complex64::ONE).unwrap();
        for (a, b) in f.coeffs().iter().zip(out.coeffs()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn derivative_of_cosine() {
        let g = grid();
        let k = TAU / g.length();
        let samples: Vec<f64> = g.xs().map(|x| (k * x).cos()).collect();
        let f = SpectralField::from_real_samples(&g, &samples).unwrap();
        let df = f.apply_multiplier(|xi| Complex64::new(0.0, xi)).unwrap();
        assert!(df.is_real());
        let got = df.real_samples().unwrap();
        for (i, x) in g.xs().enumerate() {
            let want = -k * (k * x).sin();
            assert!((got[i] - want).abs() < 1e-10, "at x={x}: {} vs {want}", got[i]);
        }
    }

    #[test]
    fn multiplier_semigroup() {
        let g = grid();
        let f = SpectralField::from_spectrum(&g, |xi| {
            Complex64::new((-(xi * xi) / 8.0).exp(), 0.3 * (xi / 3.0).sin())
        });
        let eighth = f
            .apply_multiplier(|xi| Complex64::new(xi.abs().powf(0.125), 0.0))
            .unwrap()
            .apply_multiplier(|xi| Complex64::new(xi.abs().powf(0.125), 0.0))
            .unwrap();
        let quarter = f.apply_multiplier(|xi| Complex64::new(xi.abs().powf(0.25), 0.0)).unwrap();
        for (a, b) in eighth.coeffs().iter().zip(quarter.coeffs()) {
            assert!((a - b).norm() <= 1e-14 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn nonfinite_multiplier_rejected() {
        let g = grid();
        let f = SpectralField::zero(&g);
        let r = f.apply_multiplier(|xi| Complex64::new(1.0 / xi, 0.0));
        assert!(matches!(r, Err(LabError::NonFinite { .. })));
    }

    #[test]
    fn projection_support_containment_and_idempotence() {
        let g = grid();
        // Spectrum inside [4.6, 5.4) sits inside unit box 5 = [4.5, 5.5).
        let f = SpectralField::from_spectrum(&g, |xi| {
            if (4.6..5.4).contains(&xi) {
                Complex64::new(1.0, -0.5)
            } else {
                Complex64::ZERO
            }
        });
        let p = f.project(FW::UnitBox(5));
        for (a, b) in f.coeffs().iter().zip(p.coeffs()) {
            assert_eq!(a, b);
        }
        let pp = p.project(FW::UnitBox(5));
        for (a, b) in p.coeffs().iter().zip(pp.coeffs()) {
            assert_eq!(a, b);
        }
        assert!(p.project(FW::UnitBox(7)).is_zero());
    }

    #[test]
    fn projections_resolve_identity() {
        let g = grid();
        let f = SpectralField::from_spectrum(&g, |xi| {
            Complex64::new((-(xi * xi) / 50.0).exp(), 0.1 * xi)
        });
        let k_max = (g.max_xi() + 1.0) as i64;
        let mut sum = SpectralField::zero(&g);
        for k in -k_max..=k_max {
            sum = sum.add(&f.project(FW::UnitBox(k))).unwrap();
        }
        let diff = sum.sub(&f).unwrap().l2_norm();
        assert!(diff < 1e-12 * f.l2_norm());
    }

    #[test]
    fn product_of_constants() {
        let g = grid();
        let c = 1.7;
        let f = SpectralField::from_real_samples(&g, &vec![c; g.n()]).unwrap();
        let p = dealiased_product(&f, &f, &f).unwrap();
        let s = p.real_samples().unwrap();
        for v in s {
            assert!((v - c * c * c).abs() < 1e-10);
        }
    }

    #[test]
    fn single_modes_add_frequencies() {
        let g = grid();
        let mode = |j: i64| {
            let mut coeffs = vec![Complex64::ZERO; g.n()];
            coeffs[g.bin_of(j)] = Complex64::new(g.length(), 0.0);
            SpectralField::from_coeffs(&g, coeffs).unwrap()
        };
        let (a, b, c) = (7i64, -3i64, 12i64);
        let p = dealiased_product(&mode(a), &mode(b), &mode(c)).unwrap();
        for bin in 0..g.n() {
            let j = g.signed_index(bin);
            let v = p.coeffs()[bin];
            if j == a + b + c {
                assert!((v.re - g.length()).abs() < 1e-7 * g.length(), "peak {v}");
                assert!(v.im.abs() < 1e-7 * g.length());
            } else {
                assert!(v.norm() < 1e-7 * g.length(), "leak at j={j}: {v}");
            }
        }
    }

    #[test]
    fn product_matches_fine_grid_oracle() {
        // Oracle: build the same band-limited factors on a 2x finer grid,
        // multiply pointwise there, and read the coarse-band coefficients.
        let g = grid();
        let fine = Grid::new(g.length(), 2 * g.n()).unwrap();
        let band = 0.5 * g.max_xi();
        let profile = |seed: u64| {
            move |xi: f64| {
                if xi.abs() > band {
                    return Complex64::ZERO;
                }
                let t = xi * 0.37 + seed as f64;
                Complex64::new((t.sin() + 0.3) * (-(xi / band).powi(2)).exp(), (1.3 * t).cos())
            }
        };
        let (f1, f2, f3) = (profile(1), profile(2), profile(3));
        let a = SpectralField::from_spectrum(&g, f1);
        let b = SpectralField::from_spectrum(&g, f2);
        let c = SpectralField::from_spectrum(&g, f3);
        let p = dealiased_product(&a, &b, &c).unwrap();

        let af = SpectralField::from_spectrum(&fine, f1);
        let bf = SpectralField::from_spectrum(&fine, f2);
        let cf = SpectralField::from_spectrum(&fine, f3);
        let mut prod_samples = af.samples();
        let bs = bf.samples();
        let cs = cf.samples();
        for i in 0..prod_samples.len() {
            prod_samples[i] *= bs[i] * cs[i];
        }
        let pf = SpectralField::from_complex_samples(&fine, &prod_samples).unwrap();

        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for bin in 0..g.n() {
            let j = g.signed_index(bin);
            let want = pf.coeff(j);
            num += (p.coeffs()[bin] - want).norm_sqr();
            den += want.norm_sqr();
        }
        assert!((num / den).sqrt() < 1e-10, "rel err {}", (num / den).sqrt());
    }

    #[test]
    fn cube_agrees_with_triple_product() {
        let g = grid();
        let f = SpectralField::from_spectrum(&g, |xi| {
            if xi.abs() < 20.0 {
                Complex64::new((0.1 * xi).cos(), (0.05 * xi).sin())
            } else {
                Complex64::ZERO
            }
        });
        let a = dealiased_product(&f, &f, &f).unwrap();
        let b = dealiased_cube(&f);
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).norm() < 1e-10 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = grid();
        let other = Grid::new(64.0, 512).unwrap();
        let f = SpectralField::zero(&g);
        let h = SpectralField::zero(&other);
        assert!(matches!(dealiased_product(&f, &f, &h), Err(LabError::GridMismatch)));
    }

    #[test]
    fn airy_like_multiplier_keeps_realness() {
        let g = grid();
        let samples: Vec<f64> = g.xs().map(|x| (-x * x / 30.0).exp()).collect();
        let f = SpectralField::from_real_samples(&g, &samples).unwrap();
        let t = 0.37;
        let out = f.apply_multiplier(|xi| Complex64::from_polar(1.0, t * xi * xi * xi)).unwrap();
        assert!(out.is_real());
        // PI is irrational in binary, so a constant-phase multiplier must drop the flag
        // unless the phase is conjugate-symmetric; e^{i*pi/3} is not.
        let skew = f.apply_multiplier(|_| Complex64::from_polar(1.0, PI / 3.0)).unwrap();
        assert!(!skew.is_real());
    }
}
