//! Every norm the lab measures: Lebesgue, mixed space-time, Sobolev (both
//! flavors), Besov, modulation and Fourier-Lebesgue.
//!
//! Conventions: frequency-side integrals carry the measure d(xi)/(2*pi), so the
//! Sobolev norm with s = 0 coincides with the physical L2 norm (Parseval). The
//! ell^q sums run over the boxes/bands intersecting the grid band; fields are
//! band-limited so the dropped tail is exactly zero. q = infinity is an exact
//! maximum over computed terms.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::field::SpectralField;
use crate::grid::{dyadic_band_of, unit_box_of, Grid};
use crate::{LabError, Result};

/// A tagged description of a norm with its parameters. Exponents p, q live in
/// [1, inf], with infinity encoded as `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpec {
    Lebesgue { p: f64 },
    Mixed { p_time: f64, q_space: f64 },
    Sobolev { s: f64 },
    HomogeneousSobolev { s: f64 },
    Besov { s: f64, q: f64 },
    Modulation { s: f64, q: f64 },
    FourierLebesgue { s: f64, q: f64 },
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(LabError::Argument(format!("{name} must lie in [1, inf], got {p}")))
    }
}

/// <k> = (1 + k^2)^{1/2}.
pub fn bracket(k: f64) -> f64 {
    (1.0 + k * k).sqrt()
}

/// Scale-protected ell^q sum; q = infinity is the maximum.
fn lq(terms: &[f64], q: f64) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    let m = terms.iter().fold(0.0f64, |a, &b| a.max(b));
    if m == 0.0 || q.is_infinite() {
        return m;
    }
    let s: f64 = terms.iter().map(|&t| (t / m).powf(q)).sum();
    m * s.powf(1.0 / q)
}

/// Modulation norms need at least 4 modes per unit box.
fn check_box_resolution(grid: &Grid) -> Result<()> {
    if grid.dxi() > 0.25 {
        return Err(LabError::Resolution(format!(
            "frequency spacing {:.4} > 1/4: unit boxes hold fewer than 4 modes (need L >= {:.1})",
            grid.dxi(),
            8.0 * std::f64::consts::PI
        )));
    }
    Ok(())
}

/// Per-box L2 masses (1/L) sum |u_hat|^2 keyed by unit-box index.
fn box_masses(f: &SpectralField) -> BTreeMap<i64, f64> {
    let grid = f.grid();
    let mut masses: BTreeMap<i64, f64> = BTreeMap::new();
    for (bin, c) in f.coeffs().iter().enumerate() {
        let m = c.norm_sqr();
        if m > 0.0 {
            *masses.entry(unit_box_of(grid.xi(bin))).or_insert(0.0) += m;
        }
    }
    for v in masses.values_mut() {
        *v /= grid.length();
    }
    masses
}

fn band_masses(f: &SpectralField) -> BTreeMap<u32, f64> {
    let grid = f.grid();
    let mut masses: BTreeMap<u32, f64> = BTreeMap::new();
    for (bin, c) in f.coeffs().iter().enumerate() {
        let m = c.norm_sqr();
        if m > 0.0 {
            *masses.entry(dyadic_band_of(grid.xi(bin))).or_insert(0.0) += m;
        }
    }
    for v in masses.values_mut() {
        *v /= grid.length();
    }
    masses
}

/// Evaluate a norm of a single field. Mixed norms need a [`Trajectory`]; asking
/// for one here is an argument error. A homogeneous Sobolev norm with s < 0 and
/// a nonvanishing mean is reported as `f64::INFINITY`.
pub fn norm(f: &SpectralField, spec: &NormSpec) -> Result<f64> {
    match *spec {
        NormSpec::Lebesgue { p } => {
            check_exponent("p", p)?;
            let samples = f.samples();
            if p.is_infinite() {
                Ok(samples.iter().fold(0.0f64, |m, c| m.max(c.norm())))
            } else {
                let dx = f.grid().dx();
                let m = samples.iter().fold(0.0f64, |a, c| a.max(c.norm()));
                if m == 0.0 {
                    return Ok(0.0);
                }
                let s: f64 = samples.iter().map(|c| (c.norm() / m).powf(p)).sum();
                Ok(m * (dx * s).powf(1.0 / p))
            }
        }
        NormSpec::Mixed { .. } => Err(LabError::Argument(
            "mixed space-time norms apply to trajectories; use mixed_norm".into(),
        )),
        NormSpec::Sobolev { s } => {
            let grid = f.grid();
            let sum: f64 = f
                .coeffs()
                .iter()
                .enumerate()
                .map(|(bin, c)| bracket(grid.xi(bin)).powf(2.0 * s) * c.norm_sqr())
                .sum();
            Ok((sum / grid.length()).sqrt())
        }
        NormSpec::HomogeneousSobolev { s } => {
            let grid = f.grid();
            let scale = f.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
            let mean = f.coeff(0).norm();
            if s < 0.0 && mean > 1e-10 * scale && scale > 0.0 {
                return Ok(f64::INFINITY);
            }
            let sum: f64 = f
                .coeffs()
                .iter()
                .enumerate()
                .filter(|(bin, _)| grid.signed_index(*bin) != 0)
                .map(|(bin, c)| grid.xi(bin).abs().powf(2.0 * s) * c.norm_sqr())
                .sum();
            let dc = if s == 0.0 { mean * mean } else { 0.0 };
            Ok(((sum + dc) / grid.length()).sqrt())
        }
        NormSpec::Besov { s, q } => {
            check_exponent("q", q)?;
            check_box_resolution(f.grid())?;
            let terms: Vec<f64> = band_masses(f)
                .into_iter()
                .map(|(j, mass)| 2f64.powf(j as f64 * s) * mass.sqrt())
                .collect();
            Ok(lq(&terms, q))
        }
        NormSpec::Modulation { s, q } => {
            check_exponent("q", q)?;
            check_box_resolution(f.grid())?;
            let terms: Vec<f64> = box_masses(f)
                .into_iter()
                .map(|(k, mass)| bracket(k as f64).powf(s) * mass.sqrt())
                .collect();
            Ok(lq(&terms, q))
        }
        NormSpec::FourierLebesgue { s, q } => {
            check_exponent("q", q)?;
            let grid = f.grid();
            if q.is_infinite() {
                Ok(f
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(bin, c)| bracket(grid.xi(bin)).powf(s) * c.norm())
                    .fold(0.0, f64::max))
            } else {
                let terms: Vec<f64> = f
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(bin, c)| bracket(grid.xi(bin)).powf(s) * c.norm())
                    .collect();
                let m = terms.iter().fold(0.0f64, |a, &b| a.max(b));
                if m == 0.0 {
                    return Ok(0.0);
                }
                let sum: f64 = terms.iter().map(|&t| (t / m).powf(q)).sum();
                Ok(m * (sum / grid.length()).powf(1.0 / q))
            }
        }
    }
}

/// norm(f, outer) / norm(f, inner).
pub fn embedding_ratio(f: &SpectralField, outer: &NormSpec, inner: &NormSpec) -> Result<f64> {
    let no = norm(f, outer)?;
    let ni = norm(f, inner)?;
    if !no.is_finite() || !ni.is_finite() {
        return Err(LabError::Argument("embedding ratio needs both norms finite".into()));
    }
    if ni == 0.0 {
        return Err(LabError::UndefinedRatio);
    }
    Ok(no / ni)
}

/// Time-sampled sequence of fields on a shared grid with uniform spacing.
#[derive(Clone)]
pub struct Trajectory {
    grid: Arc<Grid>,
    times: Vec<f64>,
    fields: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, fields: Vec<SpectralField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(LabError::Argument(format!(
                "trajectory needs matching nonempty times/fields, got {}/{}",
                times.len(),
                fields.len()
            )));
        }
        let grid = fields[0].grid().clone();
        for f in &fields {
            if f.grid().as_ref() != grid.as_ref() {
                return Err(LabError::GridMismatch);
            }
        }
        if times.len() > 1 {
            let dt = times[1] - times[0];
            if dt <= 0.0 {
                return Err(LabError::Argument("times must be strictly increasing".into()));
            }
            for w in times.windows(2) {
                let step = w[1] - w[0];
                if step <= 0.0 || (step - dt).abs() > 1e-9 * dt.max(1e-300) {
                    return Err(LabError::Argument(
                        "trajectory time grid must be uniform".into(),
                    ));
                }
            }
        }
        Ok(Trajectory { grid, times, fields })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> &SpectralField {
        &self.fields[0]
    }

    pub fn last(&self) -> &SpectralField {
        self.fields.last().unwrap()
    }
}

/// Composite-trapezoid L^p in time of the spatial L^q norms; p = infinity is
/// the maximum over samples.
pub fn mixed_norm(tr: &Trajectory, p_time: f64, q_space: f64) -> Result<f64> {
    check_exponent("p_time", p_time)?;
    check_exponent("q_space", q_space)?;
    let space: Result<Vec<f64>> =
        tr.fields().iter().map(|f| norm(f, &NormSpec::Lebesgue { p: q_space })).collect();
    let space = space?;
    if p_time.is_infinite() {
        return Ok(space.into_iter().fold(0.0, f64::max));
    }
    if tr.len() < 2 {
        return Err(LabError::Argument(
            "finite p_time needs at least 2 time samples".into(),
        ));
    }
    let dt = tr.times()[1] - tr.times()[0];
    let m = space.iter().fold(0.0f64, |a, &b| a.max(b));
    if m == 0.0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (i, s) in space.iter().enumerate() {
        let w = if i == 0 || i == space.len() - 1 { 0.5 } else { 1.0 };
        acc += w * (s / m).powf(p_time);
    }
    Ok(m * (dt * acc).powf(1.0 / p_time))
}
