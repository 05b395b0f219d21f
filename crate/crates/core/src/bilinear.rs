//! Bilinear Fourier multipliers: direct evaluation, symbol-estimate scans and the
//! paraproduct expansion `T = T^1 + T^2` with fitted coefficients `C_j(a, b)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::grid_field::{Field, Grid};
use crate::littlewood_paley::{smoothstep, LpFamily};

type Profile = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Symbol `sigma(xi, eta)` depending on `|xi|` and `|eta|` only.
#[derive(Clone)]
pub struct BilinearSymbol {
    name: String,
    order: f64,
    inhomogeneous: bool,
    budget: usize,
    profile: Profile,
}

impl fmt::Debug for BilinearSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BilinearSymbol")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("inhomogeneous", &self.inhomogeneous)
            .finish()
    }
}

/// Smooth cutoff in `t = log(|eta| / |xi|)`: 1 on the cone `S_delta`, 0 outside `S_{delta/2}`.
pub fn cone_cutoff(delta: f64, xi: f64, eta: f64) -> f64 {
    if xi == 0.0 || eta == 0.0 {
        return 0.0;
    }
    let t = (eta.abs().ln() - xi.abs().ln()).abs();
    let inner = (1.0 / delta).ln();
    smoothstep(0.5, (t - inner) / std::f64::consts::LN_2)
}

impl BilinearSymbol {
    pub fn new(
        name: impl Into<String>,
        order: f64,
        inhomogeneous: bool,
        profile: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), order, inhomogeneous, budget: 3, profile: Arc::new(profile) }
    }

    pub fn one() -> Self {
        Self::new("one", 0.0, false, |_, _| 1.0)
    }

    /// `1 / (|xi|^g + |eta|^g)`, order `-g`.
    pub fn inverse_gamma(g: f64) -> Self {
        Self::new(format!("inverse_gamma({g})"), -g, false, move |x, y| 1.0 / (x.powf(g) + y.powf(g)))
    }

    /// `1 / ((1+|xi|^2)^{g/2} + (1+|eta|^2)^{g/2})`.
    pub fn inverse_gamma_inhom(g: f64) -> Self {
        Self::new(format!("inverse_gamma_inhom({g})"), -g, true, move |x, y| {
            1.0 / ((1.0 + x * x).powf(0.5 * g) + (1.0 + y * y).powf(0.5 * g))
        })
    }

    /// `(1 - e^{-t lambda}) / lambda` with `lambda = |xi|^g + |eta|^g`; equals `t` at `lambda = 0`.
    pub fn scattering_transient(g: f64, t: f64) -> Self {
        Self::new(format!("scattering_transient({g},{t})"), -g, false, move |x, y| {
            let lam = x.powf(g) + y.powf(g);
            if lam == 0.0 {
                t
            } else {
                -(-t * lam).exp_m1() / lam
            }
        })
    }

    /// `h(log(|eta|/|xi|)) / (|xi|^g + |eta|^g)`.
    pub fn cone_inverse_gamma(delta: f64, g: f64) -> Self {
        Self::new(format!("cone_cutoff({delta})*inverse_gamma({g})"), -g, false, move |x, y| {
            let h = cone_cutoff(delta, x, y);
            if h == 0.0 {
                0.0
            } else {
                h / (x.powf(g) + y.powf(g))
            }
        })
    }

    /// `|xi|^g + |eta|^g`, order `g`.
    pub fn power_sum(g: f64) -> Self {
        Self::new(format!("power_sum({g})"), g, false, move |x, y| x.powf(g) + y.powf(g))
    }

    /// Library lookup by name, e.g. `inverse_gamma(2)` or `cone_cutoff(0.5)*inverse_gamma(1)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let s = s.replace('·', "*");
        if let Some((a, b)) = s.split_once('*') {
            let d = args(a, "cone_cutoff", 1)?;
            let g = args(b, "inverse_gamma", 1)?;
            return Ok(Self::cone_inverse_gamma(d[0], g[0]));
        }
        if s == "one" {
            return Ok(Self::one());
        }
        let head = s.split('(').next().unwrap_or("");
        match head {
            "inverse_gamma" => Ok(Self::inverse_gamma(args(&s, head, 1)?[0])),
            "inverse_gamma_inhom" => Ok(Self::inverse_gamma_inhom(args(&s, head, 1)?[0])),
            "scattering_transient" => {
                let v = args(&s, head, 2)?;
                Ok(Self::scattering_transient(v[0], v[1]))
            }
            "power_sum" => Ok(Self::power_sum(args(&s, head, 1)?[0])),
            _ => Err(Error::Config(format!("unknown symbol '{spec}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn is_inhomogeneous(&self) -> bool {
        self.inhomogeneous
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn with_budget(mut self, k: usize) -> Self {
        self.budget = k;
        self
    }

    /// Value at magnitudes `(|xi|, |eta|)`.
    pub fn radial(&self, r1: f64, r2: f64) -> f64 {
        (self.profile)(r1, r2)
    }

    pub fn eval(&self, xi: &[f64], eta: &[f64]) -> f64 {
        let n1 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n2 = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.radial(n1, n2)
    }
}

fn args(s: &str, head: &str, count: usize) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse '{s}' as {head}(...)"));
    let inner = s.strip_prefix(head).and_then(|r| r.strip_prefix('(')).and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
    let v: Vec<f64> = inner.split(',').map(|x| x.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    if v.len() != count {
        return Err(bad());
    }
    Ok(v)
}

/// `T_sigma(f, g)` by summing `sigma(k, l) fhat(k) ghat(l)` over all pairs, on the doubled grid.
pub fn apply_direct(sigma: &BilinearSymbol, f: &Field, g: &Field) -> Result<Field> {
    let grid = f.grid();
    if g.grid() != grid {
        return Err(Error::Structural("inputs live on different grids".into()));
    }
    let dim = grid.dim();
    let out_grid = grid.padded();
    let fk: Vec<(usize, [i64; 2], f64, C64)> = nonzero_modes(f);
    let gl = g.spectral();

    // first failing pair, scanned in a fixed order
    for &(_, k, rk, cf) in &fk {
        for (il, &cg) in gl.iter().enumerate() {
            if cg.norm_sqr() == 0.0 {
                continue;
            }
            let v = sigma.radial(rk, grid.freq_norm(il));
            if !v.is_finite() && cf.norm_sqr() > 0.0 {
                let l = grid.wavevector(il);
                return Err(Error::NumericDomain(format!(
                    "symbol {} is not finite at k={:?}, l={:?}",
                    sigma.name(),
                    &k[..dim],
                    &l[..dim]
                )));
            }
        }
    }

    let spec: Vec<C64> = (0..out_grid.len())
        .into_par_iter()
        .map(|im| {
            let m = out_grid.wavevector(im);
            let mut acc = C64::new(0.0, 0.0);
            for &(_, k, rk, cf) in &fk {
                let l = [m[0] - k[0], m[1] - k[1]];
                if let Some(il) = grid.index_of(&l[..dim]) {
                    let cg = gl[il];
                    if cg.norm_sqr() != 0.0 {
                        acc += cf * cg * sigma.radial(rk, grid.freq_norm(il));
                    }
                }
            }
            acc
        })
        .collect();
    Field::from_spectral(out_grid, spec)
}

fn nonzero_modes(f: &Field) -> Vec<(usize, [i64; 2], f64, C64)> {
    let g = f.grid();
    f.spectral()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() != 0.0)
        .map(|(i, &c)| (i, g.wavevector(i), g.freq_norm(i), c))
        .collect()
}

/// One row of a symbol-estimate scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmEntry {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    /// `sup |d^alpha_xi d^beta_eta sigma| (|xi|+|eta|)^{|alpha+beta| - m}` over the samples.
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmReport {
    pub order: f64,
    pub entries: Vec<CmEntry>,
    /// Indices of samples where some difference quotient was not finite.
    pub flagged: Vec<usize>,
}

impl CmReport {
    pub fn all_finite(&self) -> bool {
        self.flagged.is_empty() && self.entries.iter().all(|e| e.constant.is_finite())
    }

    pub fn constant(&self, alpha: &[usize], beta: &[usize]) -> Option<f64> {
        self.entries.iter().find(|e| e.alpha == alpha && e.beta == beta).map(|e| e.constant)
    }
}

fn multi_indices(vars: usize, max_total: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..vars {
        let mut next = Vec::new();
        for v in &out {
            let used: usize = v.iter().sum();
            for k in 0..=(max_total - used) {
                let mut w = v.clone();
                w.push(k);
                next.push(w);
            }
        }
        out = next;
    }
    out.sort_by_key(|v| (v.iter().sum::<usize>(), std::cmp::Reverse(v.clone())));
    out
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Tensor central difference of order `mi` at `x` with step `h`.
fn central_difference(eval: &dyn Fn(&[f64]) -> f64, x: &[f64], mi: &[usize], h: f64) -> f64 {
    let vars = x.len();
    let total: usize = mi.iter().sum();
    let mut counters = vec![0usize; vars];
    let mut acc = 0.0;
    let mut point = x.to_vec();
    loop {
        let mut coef = 1.0;
        for d in 0..vars {
            let (k, i) = (mi[d], counters[d]);
            coef *= if i % 2 == 0 { 1.0 } else { -1.0 } * binom(k, i);
            point[d] = x[d] + (0.5 * k as f64 - i as f64) * h;
        }
        acc += coef * eval(&point);
        let mut d = 0;
        loop {
            if d == vars {
                return acc / h.powi(total as i32);
            }
            counters[d] += 1;
            if counters[d] <= mi[d] {
                break;
            }
            counters[d] = 0;
            d += 1;
        }
    }
}

/// Scan of the Coifman-Meyer constants for all `|alpha + beta| <= k` on the given `(xi, eta)` samples.
pub fn cm_order_check(sigma: &BilinearSymbol, m: f64, k: usize, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<CmReport> {
    if k > sigma.budget() {
        return precondition(format!("derivative order {k} exceeds the symbol budget {}", sigma.budget()));
    }
    let Some(first) = samples.first() else {
        return Ok(CmReport { order: m, entries: vec![], flagged: vec![] });
    };
    let n = first.0.len();
    if samples.iter().any(|(a, b)| a.len() != n || b.len() != n) {
        return Err(Error::Structural("samples mix dimensions".into()));
    }
    let eval = |z: &[f64]| sigma.eval(&z[..n], &z[n..]);
    let indices = multi_indices(2 * n, k);
    let mut constants = vec![0.0f64; indices.len()];
    let mut flagged = Vec::new();
    for (si, (xi, eta)) in samples.iter().enumerate() {
        let nx = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ne = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !sigma.inhomogeneous && nx + ne == 0.0 {
            return precondition("homogeneous symbols cannot be sampled at the origin");
        }
        let scale = if sigma.inhomogeneous { 1.0 + nx + ne } else { nx + ne };
        let h = 1e-3 * (nx + ne).max(1.0);
        let z: Vec<f64> = xi.iter().chain(eta).copied().collect();
        let mut bad = false;
        for (ii, mi) in indices.iter().enumerate() {
            let total: usize = mi.iter().sum();
            let d = if total == 0 {
                eval(&z)
            } else {
                let coarse = central_difference(&eval, &z, mi, h);
                let fine = central_difference(&eval, &z, mi, 0.5 * h);
                (4.0 * fine - coarse) / 3.0
            };
            if !d.is_finite() {
                bad = true;
                continue;
            }
            let c = d.abs() * scale.powf(total as f64 - m);
            constants[ii] = constants[ii].max(c);
        }
        if bad {
            flagged.push(si);
        }
    }
    let entries = indices
        .into_iter()
        .zip(constants)
        .map(|(mi, constant)| CmEntry { alpha: mi[..n].to_vec(), beta: mi[n..].to_vec(), constant })
        .collect();
    Ok(CmReport { order: m, entries, flagged })
}

/// Log-spaced `(xi, eta)` magnitude pairs along fixed directions, away from the origin.
pub fn default_cm_samples(dim: usize, per_axis: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let dir = |r: f64, turn: f64| -> Vec<f64> {
        if dim == 1 {
            vec![r]
        } else {
            vec![r * (2.0 * PI * turn).cos(), r * (2.0 * PI * turn).sin()]
        }
    };
    let mags: Vec<f64> = (0..per_axis)
        .map(|i| 2f64.powf(-3.0 + 8.0 * i as f64 / (per_axis.max(2) - 1) as f64))
        .collect();
    let mut out = Vec::new();
    for (i, &a) in mags.iter().enumerate() {
        for (j, &b) in mags.iter().enumerate() {
            out.push((dir(a, 0.1 * i as f64), dir(b, 0.37 + 0.1 * j as f64)));
        }
    }
    out
}

/// Smoothness budget `gamma^{tl}` or `gamma^{b}` from the exponents and the `tau_w` of both weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Tl,
    Besov,
}

#[allow(clippy::too_many_arguments)]
pub fn derivative_budget(n: usize, p1: f64, p2: f64, p: f64, q: f64, tau1: f64, tau2: f64, setting: Setting) -> u64 {
    let outer = p.min(q).min(1.0);
    let mut inner = (p1 / tau1).min(p2 / tau2).min(1.0);
    if setting == Setting::Tl {
        inner = inner.min(q);
    }
    let x = n as f64 * (1.0 / outer + 1.0 / inner);
    2 * (x.floor() as u64 + 1)
}

// ---------------------------------------------------------------------------
// Paraproduct expansion

/// Fit parameters for the coefficient tables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParaproductConfig {
    /// Period `L` of the Fourier series in each frequency variable.
    pub period: f64,
    /// Decay exponent `N` in `(1 + |a|^2 + |b|^2)^N`.
    pub decay: u32,
    pub a_max: usize,
    /// Tikhonov parameter of the least-squares fit.
    pub ridge: f64,
    /// Midpoint samples per frequency axis; defaults to `8(2A+1)` in 1D and `3(2A+1)` in 2D.
    pub samples: Option<usize>,
}

impl ParaproductConfig {
    pub fn new(dim: usize, a_max: usize) -> Self {
        Self { period: 5.0, decay: dim as u32 + 1, a_max, ridge: 1e-8, samples: None }
    }

    fn samples_for(&self, dim: usize) -> usize {
        let w = 2 * self.a_max + 1;
        self.samples.unwrap_or(if dim == 1 { 8 * w } else { 3 * w })
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.decay as usize <= dim {
            return precondition(format!("decay exponent N = {} must exceed n = {dim}", self.decay));
        }
        if !(self.period > 4.0) {
            return precondition(format!("period must exceed 4, got {}", self.period));
        }
        if !(self.ridge >= 0.0) {
            return precondition("ridge parameter must be non-negative");
        }
        if self.samples_for(dim) <= 2 * self.a_max {
            return precondition("fewer samples than coefficients per axis");
        }
        Ok(())
    }
}

/// Coefficients `c_j(a, b)` of one scale, row-major over `(a_1..a_n, b_1..b_n)`, each in `-A..=A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSlab {
    pub j: usize,
    pub t1: Vec<C64>,
    pub t2: Vec<C64>,
    /// Weighted relative residual of the two fits.
    pub residual: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParaproductExpansion {
    pub symbol: String,
    pub dim: usize,
    pub config: ParaproductConfig,
    pub slabs: Vec<CoefficientSlab>,
}

impl ParaproductExpansion {
    pub fn side(&self) -> usize {
        2 * self.config.a_max + 1
    }

    fn flat_index(&self, a: &[i64], b: &[i64]) -> Option<usize> {
        let am = self.config.a_max as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &v in a.iter().chain(b) {
            if v.abs() > am {
                return None;
            }
            idx = idx * side + (v + am) as usize;
        }
        Some(idx)
    }

    fn offsets(&self, flat: usize) -> Vec<i64> {
        let side = self.side();
        let am = self.config.a_max as i64;
        let mut v = vec![0i64; 2 * self.dim];
        let mut r = flat;
        for d in (0..2 * self.dim).rev() {
            v[d] = (r % side) as i64 - am;
            r /= side;
        }
        v
    }

    fn decay_factor(&self, ab: &[i64]) -> f64 {
        let s: f64 = ab.iter().map(|&v| (v * v) as f64).sum();
        (1.0 + s).powi(self.config.decay as i32)
    }

    /// `C_j(a, b) = (1 + |a|^2 + |b|^2)^N c_j(a, b)` for `part` 1 or 2.
    pub fn big_c(&self, j: usize, part: u8, a: &[i64], b: &[i64]) -> Option<C64> {
        let slab = self.slabs.get(j)?;
        let idx = self.flat_index(a, b)?;
        let c = if part == 1 { slab.t1[idx] } else { slab.t2[idx] };
        let ab: Vec<i64> = a.iter().chain(b).copied().collect();
        Some(c * self.decay_factor(&ab))
    }

    /// `max_{a,b} 2^{-jm} |C_j(a, b)|` per scale, over both parts.
    pub fn coefficient_bound(&self, m: f64) -> Vec<f64> {
        self.slabs
            .iter()
            .map(|s| {
                let mut best: f64 = 0.0;
                for (i, (c1, c2)) in s.t1.iter().zip(&s.t2).enumerate() {
                    let f = self.decay_factor(&self.offsets(i));
                    best = best.max(c1.norm() * f).max(c2.norm() * f);
                }
                best * 2f64.powf(-(s.j as f64) * m)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

const FOLD_STEPS: usize = 200_000;
const FOLD_END: f64 = 2.5;

struct FoldTables {
    g: Vec<f64>,
    r: Vec<f64>,
}

fn cumulative(vals: &[f64], du: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in vals.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * du;
        out.push(acc);
    }
    out
}

fn fold_tables() -> &'static FoldTables {
    static T: OnceLock<FoldTables> = OnceLock::new();
    T.get_or_init(|| {
        let du = FOLD_END / FOLD_STEPS as f64;
        let u: Vec<f64> = (0..=FOLD_STEPS).map(|i| i as f64 * du).collect();
        let slope: Vec<f64> = u.iter().map(|&x| if x <= 2.0 { 1.0 } else { smoothstep(1.0, (x - 2.0) / 0.5) }).collect();
        let g = cumulative(&slope, du);
        let c0 = 0.1;
        let lift: Vec<f64> = u
            .iter()
            .map(|&x| if x >= 0.5 { 1.0 } else if x <= c0 { 0.0 } else { 1.0 - smoothstep(1.0, (x - c0) / (0.5 - c0)) })
            .collect();
        let it = cumulative(&lift, du);
        let half = it[FOLD_STEPS / 5];
        let r = it.iter().map(|v| 0.5 - (half - v)).collect();
        FoldTables { g, r }
    })
}

fn interp(table: &[f64], u: f64) -> f64 {
    let x = (u / FOLD_END * FOLD_STEPS as f64).clamp(0.0, FOLD_STEPS as f64);
    let i = (x.floor() as usize).min(FOLD_STEPS - 1);
    let t = x - i as f64;
    table[i] * (1.0 - t) + table[i + 1] * t
}

/// Odd map equal to the identity on `[-2, 2]`, constant beyond `2.5`.
fn fold_g(x: f64) -> f64 {
    x.signum() * interp(&fold_tables().g, x.abs())
}

/// Identity above `1/2`, bounded below by a positive constant.
fn fold_r(u: f64) -> f64 {
    if u >= 0.5 {
        u
    } else {
        interp(&fold_tables().r, u)
    }
}

fn fold_norm(xs: &[f64]) -> f64 {
    xs.iter().map(|&x| fold_g(x).powi(2)).sum::<f64>().sqrt()
}

/// One frequency axis of the fit: `diag(w) E / D` and its SVD.
struct Axis {
    weights: Vec<f64>,
    d: Vec<f64>,
    u: DMatrix<C64>,
    s: Vec<f64>,
    vt: DMatrix<C64>,
}

impl Axis {
    fn new(xs: &[f64], weight: impl Fn(f64) -> f64, a_max: usize, period: f64, decay: u32) -> Result<Axis> {
        let side = 2 * a_max + 1;
        let weights: Vec<f64> = xs.iter().map(|&x| weight(x)).collect();
        let d: Vec<f64> = (0..side)
            .map(|i| {
                let a = i as f64 - a_max as f64;
                (1.0 + a * a).powf(0.5 * decay as f64)
            })
            .collect();
        let b = DMatrix::from_fn(xs.len(), side, |r, c| {
            let a = c as f64 - a_max as f64;
            C64::from_polar(weights[r] / d[c], 2.0 * PI * xs[r] * a / period)
        });
        let svd = b.svd(true, true);
        let u = svd.u.ok_or_else(|| Error::Convergence("SVD did not return U".into()))?;
        let vt = svd.v_t.ok_or_else(|| Error::Convergence("SVD did not return V".into()))?;
        Ok(Axis { weights, d, u, s: svd.singular_values.iter().copied().collect(), vt })
    }
}

/// Apply `mat` (rows x dims[axis]) along `axis` of a row-major tensor.
fn mode_product(t: &[C64], dims: &[usize], axis: usize, mat: &DMatrix<C64>) -> (Vec<C64>, Vec<usize>) {
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let (rows, cols) = mat.shape();
    debug_assert_eq!(cols, dims[axis]);
    let mut out = vec![C64::new(0.0, 0.0); outer * rows * inner];
    for o in 0..outer {
        for r in 0..rows {
            let dst = &mut out[(o * rows + r) * inner..(o * rows + r + 1) * inner];
            for x in 0..cols {
                let m = mat[(r, x)];
                if m.norm_sqr() == 0.0 {
                    continue;
                }
                let src = &t[(o * cols + x) * inner..(o * cols + x + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += m * s;
                }
            }
        }
    }
    let mut nd = dims.to_vec();
    nd[axis] = rows;
    (out, nd)
}

/// Ridge-regularised tensor least squares `min |W(m - E c)|^2 + mu |D c|^2`, axis by axis.
fn tensor_solve(axes: &[&Axis], target: &[f64], m: usize, ridge: f64) -> (Vec<C64>, f64) {
    let k = axes.len();
    let mut weighted: Vec<C64> = Vec::with_capacity(target.len());
    let mut idx = vec![0usize; k];
    let mut norm2 = 0.0;
    for &v in target {
        let w: f64 = (0..k).map(|d| axes[d].weights[idx[d]]).product();
        weighted.push(C64::new(v * w, 0.0));
        norm2 += (v * w).powi(2);
        for d in (0..k).rev() {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
        }
    }
    let mut t = weighted.clone();
    let mut dims = vec![m; k];
    for (d, ax) in axes.iter().enumerate() {
        let uh = ax.u.adjoint();
        let (nt, nd) = mode_product(&t, &dims, d, &uh);
        t = nt;
        dims = nd;
    }
    let mut idx = vec![0usize; k];
    for v in t.iter_mut() {
        let s: f64 = (0..k).map(|d| axes[d].s[idx[d]]).product();
        *v *= s / (s * s + ridge);
        for d in (0..k).rev() {
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    for (d, ax) in axes.iter().enumerate() {
        let v = ax.vt.adjoint();
        let (nt, nd) = mode_product(&t, &dims, d, &v);
        t = nt;
        dims = nd;
    }
    // residual of the fitted model against the weighted target
    let mut fit = t.clone();
    let mut fd = dims.clone();
    for (d, ax) in axes.iter().enumerate() {
        let (nt, nd) = mode_product(&fit, &fd, d, &(&ax.u * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(ax.s.len(), ax.s.iter().map(|&s| C64::new(s, 0.0)))) * &ax.vt));
        fit = nt;
        fd = nd;
    }
    let res2: f64 = fit.iter().zip(&weighted).map(|(a, b)| (a - b).norm_sqr()).sum();
    let residual = if norm2 > 0.0 { (res2 / norm2).sqrt() } else { 0.0 };

    let side = dims[0];
    let mut idx = vec![0usize; k];
    for v in t.iter_mut() {
        let dd: f64 = (0..k).map(|d| axes[d].d[idx[d]]).product();
        *v /= dd;
        for d in (0..k).rev() {
            idx[d] += 1;
            if idx[d] < side {
                break;
            }
            idx[d] = 0;
        }
    }
    (t, residual)
}

struct AxisSet {
    xs: Vec<f64>,
    f1: Axis,
    g1: Axis,
    f2: Axis,
    g2: Axis,
}

fn axis_set(fam: &LpFamily, dim: usize, cfg: &ParaproductConfig) -> Result<AxisSet> {
    let m = cfg.samples_for(dim);
    let l = cfg.period;
    let xs: Vec<f64> = (0..m).map(|i| -0.5 * l + (i as f64 + 0.5) * l / m as f64).collect();
    let mk = |w: &dyn Fn(f64) -> f64| Axis::new(&xs, w, cfg.a_max, l, cfg.decay);
    let psi = |x: f64| fam.psi_hat(x.abs());
    let phi = |x: f64| fam.phi_hat(x.abs());
    let phi2 = |x: f64| fam.phi_hat(2.0 * x.abs());
    if dim == 1 {
        Ok(AxisSet { f1: mk(&psi)?, g1: mk(&phi)?, f2: mk(&phi2)?, g2: mk(&psi)?, xs })
    } else {
        // coordinate envelopes covering the radial supports
        Ok(AxisSet { f1: mk(&phi)?, g1: mk(&phi)?, f2: mk(&phi2)?, g2: mk(&phi)?, xs })
    }
}

fn fit_slab(sigma: &BilinearSymbol, ax: &AxisSet, dim: usize, j: usize, cfg: &ParaproductConfig) -> CoefficientSlab {
    let m = ax.xs.len();
    let scale = 2f64.powi(j as i32);
    let total = m.pow(2 * dim as u32);
    let mut t1 = Vec::with_capacity(total);
    let mut t2 = Vec::with_capacity(total);
    let mut idx = vec![0usize; 2 * dim];
    for _ in 0..total {
        let x: Vec<f64> = idx[..dim].iter().map(|&i| ax.xs[i]).collect();
        let y: Vec<f64> = idx[dim..].iter().map(|&i| ax.xs[i]).collect();
        let (gx, gy) = (fold_norm(&x), fold_norm(&y));
        let clean = |v: f64| if v.is_finite() { v } else { 0.0 };
        t1.push(clean(sigma.radial(scale * fold_r(gx), scale * gy)));
        t2.push(clean(sigma.radial(scale * gx, scale * fold_r(gy))));
        for d in (0..2 * dim).rev() {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
        }
    }
    let axes1: Vec<&Axis> = (0..2 * dim).map(|d| if d < dim { &ax.f1 } else { &ax.g1 }).collect();
    let axes2: Vec<&Axis> = (0..2 * dim).map(|d| if d < dim { &ax.f2 } else { &ax.g2 }).collect();
    let (c1, r1) = tensor_solve(&axes1, &t1, m, cfg.ridge);
    let (c2, r2) = tensor_solve(&axes2, &t2, m, cfg.ridge);
    CoefficientSlab { j, t1: c1, t2: c2, residual: [r1, r2] }
}

/// Coefficient slab of scale `j`.
pub fn paraproduct_coefficients(
    sigma: &BilinearSymbol,
    fam: &LpFamily,
    j: usize,
    cfg: &ParaproductConfig,
) -> Result<CoefficientSlab> {
    let dim = fam.grid.dim();
    cfg.validate(dim)?;
    if j > fam.j_max() {
        return precondition(format!("scale j = {j} outside 0..={}", fam.j_max()));
    }
    let ax = axis_set(fam, dim, cfg)?;
    Ok(fit_slab(sigma, &ax, dim, j, cfg))
}

/// Coefficient tables for every scale of the family's grid.
pub fn expand(sigma: &BilinearSymbol, fam: &LpFamily, cfg: &ParaproductConfig) -> Result<ParaproductExpansion> {
    let dim = fam.grid.dim();
    cfg.validate(dim)?;
    let ax = axis_set(fam, dim, cfg)?;
    let slabs = (0..=fam.j_max()).into_par_iter().map(|j| fit_slab(sigma, &ax, dim, j, cfg)).collect();
    Ok(ParaproductExpansion { symbol: sigma.name().to_string(), dim, config: *cfg, slabs })
}

/// `h(2^{-j}|k|) e^{2 pi i 2^{-j} k.a / L} fhat(k)`, zero padded and returned as spatial samples.
fn modulated_block(f: &Field, j: usize, a: &[i64], period: f64, h: &dyn Fn(f64) -> f64, out: Grid) -> Result<Vec<C64>> {
    let g = f.grid();
    let scale = 2f64.powi(-(j as i32));
    let block = f.map_spectrum(|i, c| {
        if c.norm_sqr() == 0.0 {
            return c;
        }
        let v = h(g.freq_norm(i) * scale);
        if v == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let k = g.wavevector(i);
        let phase: f64 = (0..g.dim()).map(|d| k[d] as f64 * a[d] as f64).sum::<f64>() * scale / period;
        c * v * C64::from_polar(1.0, 2.0 * PI * phase)
    });
    Ok(block.pad_to(out)?.spatial().to_vec())
}

/// Spatial samples of the `j`-th summand of `T^part`, on the doubled grid.
pub fn paraproduct_term(exp: &ParaproductExpansion, fam: &LpFamily, f: &Field, g: &Field, j: usize, part: u8) -> Result<Vec<C64>> {
    let grid = f.grid();
    let out = grid.padded();
    let slab = exp.slabs.get(j).ok_or_else(|| Error::Structural(format!("expansion has no scale {j}")))?;
    type Profile<'a> = Box<dyn Fn(f64) -> f64 + 'a>;
    let (coeffs, hf, hg): (&[C64], Profile, Profile) = if part == 1 {
        (&slab.t1, Box::new(|r| fam.psi_hat(r)), Box::new(|r| fam.phi_hat(r)))
    } else {
        (&slab.t2, Box::new(|r| fam.phi_hat(2.0 * r)), Box::new(|r| fam.psi_hat(r)))
    };
    let n = exp.dim;
    let side = exp.side();
    let count = side.pow(n as u32);
    let offs: Vec<Vec<i64>> = (0..count).map(|i| exp.offsets(i * count)[..n].to_vec()).collect();
    let period = exp.config.period;
    let fa: Vec<Vec<C64>> = offs.iter().map(|a| modulated_block(f, j, a, period, &*hf, out)).collect::<Result<_>>()?;
    let gb: Vec<Vec<C64>> = offs.iter().map(|b| modulated_block(g, j, b, period, &*hg, out)).collect::<Result<_>>()?;
    let mut acc = vec![C64::new(0.0, 0.0); out.len()];
    let mut h = vec![C64::new(0.0, 0.0); out.len()];
    for (ia, fv) in fa.iter().enumerate() {
        h.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (ib, gv) in gb.iter().enumerate() {
            let c = coeffs[ia * count + ib];
            for (hv, x) in h.iter_mut().zip(gv) {
                *hv += c * x;
            }
        }
        for ((a, x), y) in acc.iter_mut().zip(fv).zip(&h) {
            *a += x * y;
        }
    }
    Ok(acc)
}

/// `sum_j T^1_j(f, g) + T^2_j(f, g)` with the truncated coefficient tables.
pub fn apply_paraproduct(exp: &ParaproductExpansion, sigma: &BilinearSymbol, f: &Field, g: &Field, fam: &LpFamily) -> Result<Field> {
    let grid = f.grid();
    if g.grid() != grid {
        return Err(Error::Structural("inputs live on different grids".into()));
    }
    if grid.dim() != exp.dim || fam.grid.dim() != exp.dim {
        return Err(Error::Structural("expansion, family and fields disagree on the dimension".into()));
    }
    if sigma.name() != exp.symbol {
        return Err(Error::Structural(format!("expansion was built for {}, not {}", exp.symbol, sigma.name())));
    }
    let fam = fam.on_grid(grid);
    if exp.slabs.len() != fam.j_max() + 1 {
        return Err(Error::Structural("expansion was built for a different grid size".into()));
    }
    if !f.is_mean_zero() && !g.is_mean_zero() {
        return precondition("paraproduct needs a mean-zero input");
    }
    let band = 2f64.powi(fam.j_max() as i32);
    if f.max_freq() > band || g.max_freq() > band {
        return precondition(format!("inputs must be band limited to |k| <= {band}"));
    }
    let terms: Vec<Vec<C64>> = (0..exp.slabs.len() * 2)
        .into_par_iter()
        .map(|t| paraproduct_term(exp, &fam, f, g, t / 2, (t % 2 + 1) as u8))
        .collect::<Result<_>>()?;
    let mut acc = vec![C64::new(0.0, 0.0); grid.padded().len()];
    for t in &terms {
        for (a, v) in acc.iter_mut().zip(t) {
            *a += v;
        }
    }
    Field::from_spatial(grid.padded(), acc)
}
