//! Periodic grids, fields with paired spatial/spectral views, and Fourier multipliers.
//!
//! The torus is `[-1/2, 1/2)^n` with sample points `x_k = k/N - 1/2`. Spectra follow
//! `f(x) = sum_k fhat(k) e^{2 pi i k.x}` over `k in [-N/2, N/2)^n`, stored in FFT order.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Uniform grid on the torus `[-1/2, 1/2)^dim` with `n` samples per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return precondition(format!("dimension must be 1 or 2, got {dim}"));
        }
        if n < 16 || !n.is_power_of_two() {
            return precondition(format!("resolution must be a power of two >= 16, got {n}"));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        (self.n as f64).powi(-(self.dim as i32))
    }

    /// Largest dyadic scale with a complete partition of unity: `log2(N) - 2`.
    pub fn j_max(&self) -> usize {
        self.n.trailing_zeros() as usize - 2
    }

    /// The grid with twice the resolution, used for bilinear outputs.
    pub fn padded(&self) -> Grid {
        Grid { dim: self.dim, n: 2 * self.n }
    }

    fn axis_freq(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Integer frequency vector of a storage index (second slot is 0 in 1D).
    pub fn wavevector(&self, idx: usize) -> [i64; 2] {
        match self.dim {
            1 => [self.axis_freq(idx), 0],
            _ => [self.axis_freq(idx / self.n), self.axis_freq(idx % self.n)],
        }
    }

    pub fn freq_norm(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt()
    }

    /// Storage index of a frequency vector, if it is representable.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let half = (self.n / 2) as i64;
        let mut idx = 0usize;
        for &c in k {
            if c < -half || c >= half {
                return None;
            }
            idx = idx * self.n + c.rem_euclid(self.n as i64) as usize;
        }
        Some(idx)
    }

    /// Spatial coordinates of a sample (second slot is 0 in 1D).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = 1.0 / self.n as f64;
        match self.dim {
            1 => [idx as f64 * h - 0.5, 0.0],
            _ => [(idx / self.n) as f64 * h - 0.5, (idx % self.n) as f64 * h - 0.5],
        }
    }

    /// Torus distance from a sample to the origin.
    pub fn torus_abs(&self, idx: usize) -> f64 {
        let x = self.point(idx);
        (x[0] * x[0] + x[1] * x[1]).sqrt()
    }

    /// Storage index of the sample at the origin.
    pub fn origin_index(&self) -> usize {
        match self.dim {
            1 => self.n / 2,
            _ => (self.n / 2) * self.n + self.n / 2,
        }
    }

    fn parity_sign(&self, idx: usize) -> f64 {
        let s = match self.dim {
            1 => idx,
            _ => idx / self.n + idx % self.n,
        };
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

fn fft_in_place(grid: &Grid, data: &mut [C64], inverse: bool) {
    let n = grid.n;
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    fft.process(data);
    if grid.dim == 2 {
        let mut t = vec![C64::new(0.0, 0.0); data.len()];
        for r in 0..n {
            for c in 0..n {
                t[c * n + r] = data[r * n + c];
            }
        }
        fft.process(&mut t);
        for r in 0..n {
            for c in 0..n {
                data[r * n + c] = t[c * n + r];
            }
        }
    }
}

fn spectral_to_spatial(grid: &Grid, spec: &[C64]) -> Vec<C64> {
    let mut buf: Vec<C64> = spec
        .iter()
        .enumerate()
        .map(|(i, c)| c * grid.parity_sign(i))
        .collect();
    fft_in_place(grid, &mut buf, true);
    buf
}

fn spatial_to_spectral(grid: &Grid, vals: &[C64]) -> Vec<C64> {
    let mut buf = vals.to_vec();
    fft_in_place(grid, &mut buf, false);
    let scale = grid.cell_volume();
    for (i, c) in buf.iter_mut().enumerate() {
        *c *= scale * grid.parity_sign(i);
    }
    buf
}

/// A complex function on a grid, holding both its samples and its Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    spatial: Vec<C64>,
    spectral: Vec<C64>,
}

/// Fourier coefficients detached from their samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub grid: Grid,
    pub coeffs: Vec<C64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Structural(format!(
                "spectrum has {} coefficients, grid needs {}",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }
}

pub fn to_spectrum(f: &Field) -> Spectrum {
    Spectrum { grid: f.grid, coeffs: f.spectral.clone() }
}

pub fn to_field(s: &Spectrum) -> Result<Field> {
    Field::from_spectral(s.grid, s.coeffs.clone())
}

impl Field {
    pub fn from_spatial(grid: Grid, spatial: Vec<C64>) -> Result<Self> {
        if spatial.len() != grid.len() {
            return Err(Error::Structural(format!(
                "got {} samples for a grid of {}",
                spatial.len(),
                grid.len()
            )));
        }
        let spectral = spatial_to_spectral(&grid, &spatial);
        Ok(Self { grid, spatial, spectral })
    }

    pub fn from_spectral(grid: Grid, spectral: Vec<C64>) -> Result<Self> {
        if spectral.len() != grid.len() {
            return Err(Error::Structural(format!(
                "got {} coefficients for a grid of {}",
                spectral.len(),
                grid.len()
            )));
        }
        let spatial = spectral_to_spatial(&grid, &spectral);
        Ok(Self { grid, spatial, spectral })
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::from_spatial(grid, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let vals = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::from_spatial(grid, vals).expect("length matches grid")
    }

    pub fn zeros(grid: Grid) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.len()];
        Self { grid, spatial: z.clone(), spectral: z }
    }

    pub fn constant(grid: Grid, c: C64) -> Self {
        let mut spec = vec![C64::new(0.0, 0.0); grid.len()];
        spec[0] = c;
        Self { grid, spatial: vec![c; grid.len()], spectral: spec }
    }

    /// The pure exponential `e^{2 pi i k.x}`.
    pub fn mode(grid: Grid, k: &[i64]) -> Result<Self> {
        let idx = grid
            .index_of(k)
            .ok_or_else(|| Error::Precondition(format!("frequency {k:?} not on grid")))?;
        let mut spec = vec![C64::new(0.0, 0.0); grid.len()];
        spec[idx] = C64::new(1.0, 0.0);
        Self::from_spectral(grid, spec)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn spatial(&self) -> &[C64] {
        &self.spatial
    }

    pub fn spectral(&self) -> &[C64] {
        &self.spectral
    }

    pub fn coefficient(&self, k: &[i64]) -> Option<C64> {
        self.grid.index_of(k).map(|i| self.spectral[i])
    }

    pub fn is_mean_zero(&self) -> bool {
        self.spectral[0] == C64::new(0.0, 0.0)
    }

    /// Pointwise moduli of the samples.
    pub fn abs(&self) -> Vec<f64> {
        self.spatial.iter().map(|c| c.norm()).collect()
    }

    /// New field whose coefficient at each index is `f(index, coefficient)`.
    pub fn map_spectrum(&self, f: impl Fn(usize, C64) -> C64) -> Field {
        let spec = self.spectral.iter().enumerate().map(|(i, &c)| f(i, c)).collect();
        Field::from_spectral(self.grid, spec).expect("same grid")
    }

    pub fn scale(&self, c: C64) -> Field {
        Field {
            grid: self.grid,
            spatial: self.spatial.iter().map(|v| v * c).collect(),
            spectral: self.spectral.iter().map(|v| v * c).collect(),
        }
    }

    fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Structural(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_grid(other)?;
        Ok(Field {
            grid: self.grid,
            spatial: self.spatial.iter().zip(&other.spatial).map(|(a, b)| a + b).collect(),
            spectral: self.spectral.iter().zip(&other.spectral).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Pointwise product of samples on a shared grid (aliases if the band is too wide).
    pub fn mul_pointwise(&self, other: &Field) -> Result<Field> {
        self.check_grid(other)?;
        let vals = self.spatial.iter().zip(&other.spatial).map(|(a, b)| a * b).collect();
        Field::from_spatial(self.grid, vals)
    }

    /// `(sum |f(x)|^2 / N^n)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.spatial.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `(sum |fhat(k)|^2)^{1/2}`.
    pub fn spectral_l2_norm(&self) -> f64 {
        self.spectral.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.spatial.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest `|k|` carrying a nonzero coefficient, or 0 for the zero field.
    pub fn max_freq(&self) -> f64 {
        self.spectral
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, _)| self.grid.freq_norm(i))
            .fold(0.0, f64::max)
    }

    /// Re-express on a finer grid of the same dimension by copying coefficients.
    pub fn pad_to(&self, target: Grid) -> Result<Field> {
        if target.dim != self.grid.dim || target.n < self.grid.n {
            return Err(Error::Structural(format!(
                "cannot embed {:?} into {:?}",
                self.grid, target
            )));
        }
        let mut spec = vec![C64::new(0.0, 0.0); target.len()];
        for (i, &c) in self.spectral.iter().enumerate() {
            if c.norm_sqr() > 0.0 {
                let k = self.grid.wavevector(i);
                let j = target.index_of(&k[..target.dim]).expect("finer grid holds every mode");
                spec[j] = c;
            }
        }
        Field::from_spectral(target, spec)
    }

    /// `f(2^k x)` realised by multiplying every frequency by `2^k`.
    pub fn dilate_pow2(&self, k: u32) -> Result<Field> {
        let factor = 1i64 << k;
        let mut spec = vec![C64::new(0.0, 0.0); self.grid.len()];
        for (i, &c) in self.spectral.iter().enumerate() {
            if c.norm_sqr() > 0.0 {
                let w = self.grid.wavevector(i);
                let scaled = [w[0] * factor, w[1] * factor];
                let j = self.grid.index_of(&scaled[..self.grid.dim]).ok_or_else(|| {
                    Error::Precondition(format!("dilation by 2^{k} leaves the band at {w:?}"))
                })?;
                spec[j] = c;
            }
        }
        Field::from_spectral(self.grid, spec)
    }
}

/// Treatment of the zero frequency by a multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroRule {
    Keep,
    Zero,
}

type MultiplierFn = dyn Fn(&[f64]) -> C64 + Send + Sync;

/// A Fourier multiplier `m(D)` given by its symbol on real frequency vectors.
#[derive(Clone)]
pub struct FrequencyMultiplier {
    eval: Arc<MultiplierFn>,
    pub zero_rule: ZeroRule,
}

impl std::fmt::Debug for FrequencyMultiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrequencyMultiplier").field("zero_rule", &self.zero_rule).finish()
    }
}

impl FrequencyMultiplier {
    pub fn new(zero_rule: ZeroRule, eval: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), zero_rule }
    }

    pub fn identity() -> Self {
        Self::new(ZeroRule::Keep, |_| C64::new(1.0, 0.0))
    }

    pub fn eval(&self, xi: &[f64]) -> C64 {
        (self.eval)(xi)
    }

    /// Mode-wise product of two multipliers; the zero frequency is zeroed if either zeroes it.
    pub fn compose(&self, other: &FrequencyMultiplier) -> FrequencyMultiplier {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let rule = if self.zero_rule == ZeroRule::Zero || other.zero_rule == ZeroRule::Zero {
            ZeroRule::Zero
        } else {
            ZeroRule::Keep
        };
        Self::new(rule, move |xi| a(xi) * b(xi))
    }
}

pub fn apply_multiplier(f: &Field, m: &FrequencyMultiplier) -> Result<Field> {
    let grid = f.grid;
    let mut spec = Vec::with_capacity(grid.len());
    for (i, &c) in f.spectral.iter().enumerate() {
        if i == 0 && m.zero_rule == ZeroRule::Zero {
            spec.push(C64::new(0.0, 0.0));
            continue;
        }
        let k = grid.wavevector(i);
        let xi = [k[0] as f64, k[1] as f64];
        let v = m.eval(&xi[..grid.dim]);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NumericDomain(format!(
                "multiplier is not finite at frequency {:?}",
                &k[..grid.dim]
            )));
        }
        spec.push(c * v);
    }
    Field::from_spectral(grid, spec)
}

/// Homogeneous derivative `D^s`, symbol `|k|^s`, with the mean removed.
pub fn d_s(f: &Field, s: f64) -> Result<Field> {
    if s < 0.0 && !f.is_mean_zero() {
        return precondition("D^s with s < 0 needs a mean-zero field");
    }
    let g = f.grid;
    Ok(f.map_spectrum(|i, c| if i == 0 { C64::new(0.0, 0.0) } else { c * g.freq_norm(i).powf(s) }))
}

/// Bessel potential `J^s`, symbol `(1 + |k|^2)^{s/2}`.
pub fn j_s(f: &Field, s: f64) -> Field {
    let g = f.grid;
    f.map_spectrum(|i, c| {
        let k = g.freq_norm(i);
        c * (1.0 + k * k).powf(0.5 * s)
    })
}

/// Complex Gaussian coefficients on the annulus `lo <= |k| <= hi`, normalised to unit L2 norm.
pub fn random_band_limited(grid: Grid, lo: f64, hi: f64, seed: u64, mean_zero: bool) -> Result<Field> {
    if !(0.0 <= lo && lo <= hi && hi <= (grid.n / 2) as f64 - 1.0) {
        return precondition(format!(
            "band [{lo}, {hi}] must satisfy 0 <= lo <= hi <= N/2 - 1 = {}",
            grid.n / 2 - 1
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![C64::new(0.0, 0.0); grid.len()];
    let mut any = false;
    for (i, c) in spec.iter_mut().enumerate() {
        let r = grid.freq_norm(i);
        if r < lo || r > hi || (mean_zero && i == 0) {
            continue;
        }
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *c = C64::new(re, im);
        any = true;
    }
    if !any {
        return precondition(format!("band [{lo}, {hi}] holds no admissible frequency"));
    }
    let norm = spec.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in spec.iter_mut() {
        *c /= norm;
    }
    Field::from_spectral(grid, spec)
}

/// JSON form `{n, N, spectral: [[k...], re, im]...}` listing the nonzero coefficients.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FieldJson {
    pub n: usize,
    #[serde(rename = "N")]
    pub resolution: usize,
    pub spectral: Vec<(Vec<i64>, f64, f64)>,
}

impl FieldJson {
    pub fn from_field(f: &Field) -> Self {
        let g = f.grid;
        let spectral = f
            .spectral
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, c)| (g.wavevector(i)[..g.dim].to_vec(), c.re, c.im))
            .collect();
        Self { n: g.dim, resolution: g.n, spectral }
    }

    pub fn to_field(&self) -> Result<Field> {
        let grid = Grid::new(self.n, self.resolution)?;
        let mut spec = vec![C64::new(0.0, 0.0); grid.len()];
        for (k, re, im) in &self.spectral {
            let i = grid
                .index_of(k)
                .ok_or_else(|| Error::Structural(format!("frequency {k:?} not on grid")))?;
            spec[i] = C64::new(*re, *im);
        }
        Field::from_spectral(grid, spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1(n: usize) -> Grid {
        Grid::new(1, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 24).is_err());
        assert!(Grid::new(3, 32).is_err());
        assert!(Grid::new(2, 8).is_err());
        assert_eq!(g1(256).j_max(), 6);
    }

    #[test]
    fn delta_at_left_endpoint_has_flat_spectrum() {
        let g = g1(32);
        let mut v = vec![0.0; 32];
        v[0] = 1.0;
        let f = Field::from_real(g, &v).unwrap();
        for (i, c) in f.spectral().iter().enumerate() {
            let sign = if g.wavevector(i)[0] % 2 == 0 { 1.0 } else { -1.0 };
            assert!((c - C64::new(sign / 32.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn single_mode_spectrum() {
        let g = g1(64);
        let f = Field::from_fn(g, |x| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * 3.0 * x[0]));
        for (i, c) in f.spectral().iter().enumerate() {
            let want = if g.wavevector(i)[0] == 3 { 1.0 } else { 0.0 };
            assert!((c - C64::new(want, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn mode_constructor_matches_exponential() {
        let g = Grid::new(2, 16).unwrap();
        let f = Field::mode(g, &[2, -3]).unwrap();
        for (i, v) in f.spatial().iter().enumerate() {
            let x = g.point(i);
            let want = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (2.0 * x[0] - 3.0 * x[1]));
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn multiplier_modulation_and_abs() {
        let g = g1(64);
        let f = Field::mode(g, &[3]).unwrap();
        let m = FrequencyMultiplier::new(ZeroRule::Keep, |k| C64::new(k[0].abs(), 0.0));
        let out = apply_multiplier(&f, &m).unwrap();
        assert!((out.coefficient(&[3]).unwrap() - C64::new(3.0, 0.0)).norm() < 1e-15);
        let a = 0.3;
        let m = FrequencyMultiplier::new(ZeroRule::Keep, move |k| {
            C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k[0] * a)
        });
        let out = apply_multiplier(&f, &m).unwrap();
        let want = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * 3.0 * a);
        assert!((out.coefficient(&[3]).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn non_finite_multiplier_is_rejected() {
        let g = g1(32);
        let f = Field::constant(g, C64::new(1.0, 0.0));
        let m = FrequencyMultiplier::new(ZeroRule::Keep, |k| C64::new(1.0 / k[0].abs(), 0.0));
        assert!(matches!(apply_multiplier(&f, &m), Err(Error::NumericDomain(_))));
        let m = FrequencyMultiplier::new(ZeroRule::Zero, |k| C64::new(1.0 / k[0].abs(), 0.0));
        assert!(apply_multiplier(&f, &m).is_ok());
    }

    #[test]
    fn derivatives() {
        let g = g1(128);
        let f = random_band_limited(g, 1.0, 30.0, 7, true).unwrap();
        let f0 = d_s(&f, 0.0).unwrap();
        assert_eq!(f0.spectral(), f.spectral());
        let a = d_s(&d_s(&f, 1.0).unwrap(), 1.0).unwrap();
        let b = d_s(&f, 2.0).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-12 * b.l2_norm());
        let c = Field::constant(g, C64::new(2.5, 0.0));
        assert!(j_s(&c, 3.0).sub(&c).unwrap().sup_norm() < 1e-15);
        assert!(d_s(&c, -1.0).is_err());
    }

    #[test]
    fn band_limited_generator() {
        let g = g1(64);
        let f = random_band_limited(g, 1.0, 1.0, 3, true).unwrap();
        for (i, c) in f.spectral().iter().enumerate() {
            if c.norm() > 0.0 {
                assert_eq!(g.wavevector(i)[0].abs(), 1);
            }
        }
        assert!((f.spectral_l2_norm() - 1.0).abs() < 1e-14);
        assert_eq!(f, random_band_limited(g, 1.0, 1.0, 3, true).unwrap());
        let h = random_band_limited(g, 0.0, 5.0, 3, true).unwrap();
        assert!(h.is_mean_zero());
        assert!(random_band_limited(g, 1.2, 1.8, 3, true).is_err());
        assert!(random_band_limited(g, 1.0, 40.0, 3, true).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = Grid::new(2, 16).unwrap();
        let f = random_band_limited(g, 1.0, 4.0, 11, true).unwrap();
        let s = serde_json::to_string(&FieldJson::from_field(&f)).unwrap();
        let back: FieldJson = serde_json::from_str(&s).unwrap();
        let h = back.to_field().unwrap();
        for (a, b) in h.spectral().iter().zip(f.spectral()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(s.contains("\"N\":16"));
    }

    #[test]
    fn spectrum_size_mismatch() {
        let g = g1(16);
        assert!(matches!(Spectrum::new(g, vec![C64::new(0.0, 0.0); 15]), Err(Error::Structural(_))));
    }

    #[test]
    fn dilation_and_padding() {
        let g = g1(64);
        let f = Field::mode(g, &[3]).unwrap();
        let d = f.dilate_pow2(2).unwrap();
        assert_eq!(d.coefficient(&[12]).unwrap(), C64::new(1.0, 0.0));
        assert!(f.dilate_pow2(4).is_err());
        let p = f.pad_to(g.padded()).unwrap();
        assert_eq!(p.coefficient(&[3]).unwrap(), C64::new(1.0, 0.0));
        assert!((p.l2_norm() - 1.0).abs() < 1e-14);
    }
}
