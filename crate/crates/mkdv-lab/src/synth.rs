//! Seeded test-data families: band-limited random fields, smooth packets and
//! spectral bumps.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::field::SpectralField;
use crate::grid::Grid;

/// Deterministic per-point stream derived from a master seed (splitmix64 step).
pub fn sub_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random real field with spectrum in 0 < |xi| <= max_xi (or including the
/// mean when `zero_mean` is false). Coefficients have uniform magnitude in
/// [1/2, 1] and uniform phase; conjugate symmetry is built in.
pub fn random_real_band_field(
    grid: &Arc<Grid>,
    max_xi: f64,
    zero_mean: bool,
    rng: &mut ChaCha8Rng,
) -> SpectralField {
    let n = grid.n();
    let mut coeffs = vec![Complex64::ZERO; n];
    for j in 1..n / 2 {
        let xi = grid.xi(j);
        if xi <= max_xi {
            let amp: f64 = rng.random_range(0.5..1.0);
            let phase: f64 = rng.random_range(0.0..TAU);
            let c = Complex64::from_polar(amp, phase);
            coeffs[j] = c;
            coeffs[n - j] = c.conj();
        }
    }
    if !zero_mean {
        coeffs[0] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
    }
    SpectralField::from_coeffs(grid, coeffs).expect("construction is well-formed")
}

/// Random complex field supported exactly on grid frequencies in [lo, hi],
/// normalized to unit L2.
pub fn random_complex_in_interval(
    grid: &Arc<Grid>,
    lo: f64,
    hi: f64,
    rng: &mut ChaCha8Rng,
) -> SpectralField {
    let mut coeffs = vec![Complex64::ZERO; grid.n()];
    for (bin, c) in coeffs.iter_mut().enumerate() {
        let xi = grid.xi(bin);
        if xi >= lo && xi <= hi {
            let amp: f64 = rng.random_range(0.5..1.0);
            let phase: f64 = rng.random_range(0.0..TAU);
            *c = Complex64::from_polar(amp, phase);
        }
    }
    let f = SpectralField::from_coeffs(grid, coeffs).expect("construction is well-formed");
    let norm = f.l2_norm();
    if norm > 0.0 {
        f.scaled(1.0 / norm)
    } else {
        f
    }
}

/// Random real field supported in the dyadic band |xi| in [2^{j-1}, 2^j)
/// (|xi| < 1 for j = 0), unit L2.
pub fn random_real_dyadic_field(grid: &Arc<Grid>, band: u32, rng: &mut ChaCha8Rng) -> SpectralField {
    let (lo, hi) = if band == 0 {
        (0.0, 1.0)
    } else {
        (2f64.powi(band as i32 - 1), 2f64.powi(band as i32))
    };
    let n = grid.n();
    let mut coeffs = vec![Complex64::ZERO; n];
    for j in 1..n / 2 {
        let xi = grid.xi(j);
        if xi >= lo && xi < hi {
            let amp: f64 = rng.random_range(0.5..1.0);
            let phase: f64 = rng.random_range(0.0..TAU);
            let c = Complex64::from_polar(amp, phase);
            coeffs[j] = c;
            coeffs[n - j] = c.conj();
        }
    }
    let f = SpectralField::from_coeffs(grid, coeffs).expect("construction is well-formed");
    let norm = f.l2_norm();
    if norm > 0.0 {
        f.scaled(1.0 / norm)
    } else {
        f
    }
}

/// Deterministic C^1 bump: cos^2 profile supported on [lo, hi], shifted in x
/// by `x_shift` and with optional per-mode phase jitter.
pub fn cos2_bump(
    grid: &Arc<Grid>,
    lo: f64,
    hi: f64,
    x_shift: f64,
    jitter: f64,
    rng: &mut ChaCha8Rng,
) -> SpectralField {
    let c = 0.5 * (lo + hi);
    let w = hi - lo;
    let mut coeffs = vec![Complex64::ZERO; grid.n()];
    for (bin, v) in coeffs.iter_mut().enumerate() {
        let xi = grid.xi(bin);
        if xi >= lo && xi <= hi {
            let env = (std::f64::consts::PI * (xi - c) / w).cos().powi(2);
            let mut phase = -xi * x_shift;
            if jitter > 0.0 {
                phase += rng.random_range(-jitter..jitter);
            }
            *v = Complex64::from_polar(env, phase);
        }
    }
    let f = SpectralField::from_coeffs(grid, coeffs).expect("construction is well-formed");
    let norm = f.l2_norm();
    if norm > 0.0 {
        f.scaled(1.0 / norm)
    } else {
        f
    }
}

/// Real coherent packet with cos^2 spectral profile on +/-[lo, hi), unit L2,
/// translated to x0 with optional per-mode phase jitter. The all-aligned
/// phases make it x-concentrated, the near-extremizer family for dispersive
/// decay measurements on the torus.
pub fn band_packet(
    grid: &Arc<Grid>,
    lo: f64,
    hi: f64,
    x0: f64,
    jitter: f64,
    rng: &mut ChaCha8Rng,
) -> SpectralField {
    let c = 0.5 * (lo + hi);
    let w = hi - lo;
    let n = grid.n();
    let mut coeffs = vec![Complex64::ZERO; n];
    for j in 1..n / 2 {
        let xi = grid.xi(j);
        if xi >= lo && xi < hi {
            let env = (std::f64::consts::PI * (xi - c) / w).cos().powi(2);
            let mut phase = -xi * x0;
            if jitter > 0.0 {
                phase += rng.random_range(-jitter..jitter);
            }
            let v = Complex64::from_polar(env, phase);
            coeffs[j] = v;
            coeffs[n - j] = v.conj();
        }
    }
    let f = SpectralField::from_coeffs(grid, coeffs).expect("construction is well-formed");
    let norm = f.l2_norm();
    if norm > 0.0 {
        f.scaled(1.0 / norm)
    } else {
        f
    }
}

/// Smooth real wave packet: Gaussian spectral envelopes around +/- center_xi,
/// physically centered at x0. Amplitude is the physical peak scale. Envelope
/// tails below 1e-16 of the peak are cut to exact zeros so the packet is
/// genuinely band-limited on the grid.
pub fn gaussian_packet(
    grid: &Arc<Grid>,
    center_xi: f64,
    sigma_xi: f64,
    amplitude: f64,
    x0: f64,
) -> SpectralField {
    let f = SpectralField::from_spectrum(grid, |xi| {
        let env = (-((xi - center_xi) / sigma_xi).powi(2) / 2.0).exp()
            + (-((xi + center_xi) / sigma_xi).powi(2) / 2.0).exp();
        if env < 1e-16 {
            return Complex64::ZERO;
        }
        Complex64::from_polar(env, -xi * x0)
    });
    let peak = f
        .samples()
        .iter()
        .fold(0.0f64, |m, c| m.max(c.norm()));
    if peak > 0.0 {
        f.scaled(amplitude / peak)
    } else {
        f
    }
}
