//! Muckenhoupt weights, dyadic ball family, maximal operators and weighted base-space norms.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::grid_field::{Field, Grid};

/// Grid-independent description of a weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant { c: f64 },
    /// `|x|^a` in torus distance.
    Power { a: f64 },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Constant { c: 1.0 }
    }
}

impl WeightSpec {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn materialize(&self, grid: Grid) -> Result<Weight> {
        match *self {
            WeightSpec::Constant { c } => Weight::constant(grid, c),
            WeightSpec::Power { a } => Weight::power(grid, a),
        }
    }

    /// `w1^{e1} w2^{e2}`, closed on constant and power weights.
    pub fn compose(w1: &WeightSpec, e1: f64, w2: &WeightSpec, e2: f64) -> WeightSpec {
        use WeightSpec::*;
        match (w1, w2) {
            (Constant { c: c1 }, Constant { c: c2 }) => Constant { c: c1.powf(e1) * c2.powf(e2) },
            (Power { a }, Constant { .. }) => Power { a: a * e1 },
            (Constant { .. }, Power { a }) => Power { a: a * e2 },
            (Power { a: a1 }, Power { a: a2 }) => Power { a: a1 * e1 + a2 * e2 },
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, WeightSpec::Constant { c } if *c == 1.0)
    }
}

/// Positive weight samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    grid: Grid,
    samples: Vec<f64>,
    spec: Option<WeightSpec>,
}

impl Weight {
    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return precondition(format!("constant weight must be positive, got {c}"));
        }
        Ok(Self { grid, samples: vec![c; grid.len()], spec: Some(WeightSpec::Constant { c }) })
    }

    pub fn unit(grid: Grid) -> Self {
        Self::constant(grid, 1.0).expect("1 is positive")
    }

    /// `|x|^a`; the sample at the origin is the cell average (1D) or the value at radius `1/(2N)` (2D).
    pub fn power(grid: Grid, a: f64) -> Result<Self> {
        let n = grid.dim() as f64;
        if a <= -n {
            return precondition(format!("|x|^{a} is not locally integrable in dimension {n}"));
        }
        let half_cell = 0.5 / grid.n() as f64;
        let origin = grid.origin_index();
        let samples = (0..grid.len())
            .map(|i| {
                if i == origin {
                    if grid.dim() == 1 {
                        half_cell.powf(a) / (a + 1.0)
                    } else {
                        half_cell.powf(a)
                    }
                } else {
                    grid.torus_abs(i).powf(a)
                }
            })
            .collect();
        Ok(Self { grid, samples, spec: Some(WeightSpec::Power { a }) })
    }

    pub fn custom(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Structural("weight sample count does not match grid".into()));
        }
        if let Some(i) = samples.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return precondition(format!("weight sample {i} is not positive"));
        }
        Ok(Self { grid, samples, spec: None })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn spec(&self) -> Option<&WeightSpec> {
        self.spec.as_ref()
    }

    /// `int_E w` over the cells listed.
    pub fn measure(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Average over `2^n` blocks of cells, halving the resolution.
    pub fn coarsen(&self) -> Result<Weight> {
        let n = self.grid.n();
        let g = Grid::new(self.grid.dim(), n / 2)?;
        let m = n / 2;
        let samples = match self.grid.dim() {
            1 => (0..m).map(|i| 0.5 * (self.samples[2 * i] + self.samples[2 * i + 1])).collect(),
            _ => (0..m * m)
                .map(|idx| {
                    let (r, c) = (idx / m, idx % m);
                    let s = |rr: usize, cc: usize| self.samples[rr * n + cc];
                    0.25 * (s(2 * r, 2 * c) + s(2 * r + 1, 2 * c) + s(2 * r, 2 * c + 1) + s(2 * r + 1, 2 * c + 1))
                })
                .collect(),
        };
        Ok(Weight { grid: g, samples, spec: None })
    }
}

/// Dyadic balls `B(x_c, 2^{-l})` centred at grid points, plus the whole torus.
///
/// Radii run over `l = 1..=log2 N`, followed by the single-cell ball (`l = log2 N + 1`).
/// A ball holds the cells whose centre offset lies within the radius, clipped to one period.
#[derive(Clone, Debug)]
pub struct BallFamily {
    grid: Grid,
    radii: Vec<f64>,
    /// Per radius: row segments `(dy, dx_lo, dx_hi)` in cell units.
    shapes: Vec<Vec<(i64, i64, i64)>>,
    counts: Vec<usize>,
}

impl BallFamily {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n() as i64;
        let levels = grid.n().trailing_zeros() as i32 + 1;
        let half = n / 2;
        let mut radii = Vec::new();
        let mut shapes = Vec::new();
        let mut counts = Vec::new();
        for l in 1..=levels {
            let r = 2f64.powi(-l);
            let rc = r * n as f64;
            let ri = rc.floor() as i64;
            let mut segs = Vec::new();
            let rows: Vec<i64> = if grid.dim() == 1 { vec![0] } else { (-ri.min(half)..=ri.min(half - 1)).collect() };
            for dy in rows {
                let hx = ((rc * rc - (dy * dy) as f64).max(0.0)).sqrt().floor() as i64;
                let lo = (-hx).max(-half);
                let hi = hx.min(half - 1);
                segs.push((dy, lo, hi));
            }
            let count = segs.iter().map(|s| (s.2 - s.1 + 1) as usize).sum();
            radii.push(r);
            shapes.push(segs);
            counts.push(count);
        }
        Self { grid, radii, shapes, counts }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Number of cells in a ball of the given level.
    pub fn count(&self, level: usize) -> usize {
        self.counts[level]
    }

    /// Sums of `v` over every ball of every level, indexed `[level][center]`.
    pub fn sums(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let n = self.grid.n();
        let rows = if self.grid.dim() == 1 { 1 } else { n };
        // periodic prefix sums along each row, over two periods
        let mut prefix = vec![0.0; rows * (2 * n + 1)];
        for r in 0..rows {
            let base = r * (2 * n + 1);
            for c in 0..2 * n {
                prefix[base + c + 1] = prefix[base + c] + v[r * n + c % n];
            }
        }
        let seg = |row: usize, start: i64, len: i64| -> f64 {
            let base = row * (2 * n + 1);
            let s = start.rem_euclid(n as i64) as usize;
            prefix[base + s + len as usize] - prefix[base + s]
        };
        self.shapes
            .iter()
            .map(|segs| {
                (0..self.grid.len())
                    .map(|center| {
                        let (cr, cc) = if self.grid.dim() == 1 { (0, center as i64) } else { ((center / n) as i64, (center % n) as i64) };
                        segs.iter()
                            .map(|&(dy, lo, hi)| {
                                let row = (cr + dy).rem_euclid(rows as i64) as usize;
                                seg(row, cc + lo, hi - lo + 1)
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// For every point, the maximum of `vals` over ball centres whose ball of `level` contains it.
    fn max_filter(&self, level: usize, vals: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        let rows = if self.grid.dim() == 1 { 1 } else { n };
        let mut out = vec![f64::NEG_INFINITY; self.grid.len()];
        for &(dy, lo, hi) in &self.shapes[level] {
            for r in 0..rows {
                // x lies in B(c) iff c - x is an offset of the (symmetric) shape
                let src = (r as i64 + dy).rem_euclid(rows as i64) as usize;
                let row = &vals[src * n..src * n + n];
                let win = sliding_max_periodic(row, lo, hi);
                for c in 0..n {
                    let o = &mut out[r * n + c];
                    if win[c] > *o {
                        *o = win[c];
                    }
                }
            }
        }
        out
    }
}

/// `out[c] = max(row[c + lo ..= c + hi])` with periodic indexing, via a monotone deque.
fn sliding_max_periodic(row: &[f64], lo: i64, hi: i64) -> Vec<f64> {
    let n = row.len() as i64;
    let width = (hi - lo + 1) as usize;
    let at = |i: i64| row[i.rem_euclid(n) as usize];
    let mut out = vec![0.0; n as usize];
    let mut dq: VecDeque<i64> = VecDeque::new();
    let mut next = lo;
    for c in 0..n {
        let end = c + hi;
        while next <= end {
            let v = at(next);
            while dq.back().is_some_and(|&b| at(b) <= v) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f < c + lo) {
            dq.pop_front();
        }
        debug_assert!(dq.len() <= width);
        out[c as usize] = at(*dq.front().expect("window is never empty"));
    }
    out
}

/// Uncentred Hardy-Littlewood maximal function over the ball family, `M_r f = M(|f|^r)^{1/r}`.
pub fn maximal(f: &Field, r: f64) -> Vec<f64> {
    maximal_values(f.grid(), &f.abs(), r)
}

pub fn maximal_values(grid: Grid, abs_vals: &[f64], r: f64) -> Vec<f64> {
    let fam = BallFamily::new(grid);
    let powered: Vec<f64> = abs_vals.iter().map(|v| v.powf(r)).collect();
    let total = powered.iter().sum::<f64>() / grid.len() as f64;
    let sums = fam.sums(&powered);
    let mut best = vec![total; grid.len()];
    for (level, s) in sums.iter().enumerate() {
        let cnt = fam.count(level) as f64;
        let avg: Vec<f64> = s.iter().map(|v| v / cnt).collect();
        let m = fam.max_filter(level, &avg);
        for (b, v) in best.iter_mut().zip(m) {
            if v > *b {
                *b = v;
            }
        }
    }
    best.into_iter().map(|v| v.max(0.0).powf(1.0 / r)).collect()
}

/// Supremum over the ball family of `avg(w) avg(w^{-1/(p-1)})^{p-1}`.
pub fn ap_constant(w: &Weight, p: f64) -> Result<f64> {
    if p <= 1.0 {
        return precondition(format!("A_p needs p > 1, got {p}"));
    }
    let dual: Vec<f64> = w.samples.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    let fam = BallFamily::new(w.grid);
    let sw = fam.sums(&w.samples);
    let sd = fam.sums(&dual);
    let len = w.grid.len() as f64;
    let mut best = (w.samples.iter().sum::<f64>() / len) * (dual.iter().sum::<f64>() / len).powf(p - 1.0);
    for level in 0..sw.len() {
        let cnt = fam.count(level) as f64;
        for (a, b) in sw[level].iter().zip(&sd[level]) {
            let v = (a / cnt) * (b / cnt).powf(p - 1.0);
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

/// Interval estimate of `tau_w = inf { tau > 1 : w in A_tau }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauInterval {
    pub lo: f64,
    pub hi: f64,
}

impl TauInterval {
    pub fn exact(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    /// Conservative representative used in strict inequalities.
    pub fn upper(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Growth exponent of the A_tau constant under one grid refinement.
fn refinement_exponent(fine: &Weight, coarse: &Weight, tau: f64) -> f64 {
    let a = ap_constant(fine, tau).expect("tau > 1");
    let b = ap_constant(coarse, tau).expect("tau > 1");
    (a / b).log2()
}

const TAU_MAX: f64 = 8.0;
const GROWTH_CERTAIN: f64 = 0.25;
const GROWTH_NONE: f64 = 0.02;

/// Bisection on `tau` over `(1, 8]`: `w` counts as `A_tau` when its A_tau constant stops
/// growing under refinement. The interval spans the taus where growth is neither clearly
/// present (exponent above 0.25) nor clearly absent (below 0.02).
///
/// The input is treated as the finer resolution and compared with its coarsening.
pub fn tau_w_estimate(w: &Weight) -> Result<TauInterval> {
    if w.grid.n() < 64 {
        return precondition("tau_w estimation needs at least 64 samples per axis");
    }
    if w.samples.iter().all(|&v| v == w.samples[0]) {
        return Ok(TauInterval::exact(1.0));
    }
    let coarse = w.coarsen()?;
    let growth = |tau: f64| refinement_exponent(w, &coarse, tau);
    let first_below = |thresh: f64| -> f64 {
        let (mut lo, mut hi) = (1.0 + 1e-6, TAU_MAX);
        if growth(lo) < thresh {
            return 1.0;
        }
        if growth(hi) >= thresh {
            return f64::INFINITY;
        }
        for _ in 0..30 {
            let m = 0.5 * (lo + hi);
            if growth(m) < thresh {
                hi = m;
            } else {
                lo = m;
            }
        }
        hi
    };
    let lo = first_below(GROWTH_CERTAIN);
    let hi = first_below(GROWTH_NONE);
    Ok(TauInterval { lo: lo.min(hi), hi })
}

fn check_lengths(vals: &[f64], w: &Weight) -> Result<()> {
    if vals.len() != w.grid.len() {
        return Err(Error::Structural("values and weight live on different grids".into()));
    }
    Ok(())
}

/// `(int |f|^p w)^{1/p}` by cell sums; `p = inf` gives the sample maximum.
pub fn lp_norm_values(vals: &[f64], p: f64, w: &Weight) -> Result<f64> {
    check_lengths(vals, w)?;
    if !(p > 0.0) {
        return precondition(format!("p must be positive, got {p}"));
    }
    if p.is_infinite() {
        return Ok(vals.iter().fold(0.0, |a, &b| a.max(b.abs())));
    }
    let s: f64 = vals.iter().zip(&w.samples).map(|(v, wi)| v.abs().powf(p) * wi).sum();
    Ok((s * w.grid.cell_volume()).powf(1.0 / p))
}

pub fn lp_norm(f: &Field, p: f64, w: &Weight) -> Result<f64> {
    lp_norm_values(&f.abs(), p, w)
}

/// Weighted Lorentz quasi-norm `(int_0^inf (tau^{1/p} f*_w(tau))^t dtau/tau)^{1/t}`.
///
/// The rearrangement is a step function with jumps at the cumulative weighted cell
/// measures `T_i`, so each step contributes `v_i^t (p/t)(T_i^{t/p} - T_{i-1}^{t/p})` exactly.
pub fn lorentz_norm_values(vals: &[f64], p: f64, t: f64, w: &Weight) -> Result<f64> {
    check_lengths(vals, w)?;
    if !(p > 0.0 && p.is_finite() && t > 0.0) {
        return precondition(format!("Lorentz norm needs 0 < p < inf and t > 0, got p={p}, t={t}"));
    }
    let h = w.grid.cell_volume();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()).then(a.cmp(&b)));
    let mut cum = 0.0;
    if t.is_infinite() {
        let mut best: f64 = 0.0;
        for &i in &order {
            cum += w.samples[i] * h;
            best = best.max(vals[i].abs() * cum.powf(1.0 / p));
        }
        return Ok(best);
    }
    let e = t / p;
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &i in &order {
        cum += w.samples[i] * h;
        let now = cum.powf(e);
        acc += vals[i].abs().powf(t) * (now - prev);
        prev = now;
    }
    Ok((acc / e).powf(1.0 / t))
}

pub fn lorentz_norm(f: &Field, p: f64, t: f64, w: &Weight) -> Result<f64> {
    lorentz_norm_values(&f.abs(), p, t, w)
}

/// Weighted Morrey norm `sup_B w(B)^{1/t - 1/p} (int_B |f|^p w)^{1/p}` over the ball family and the torus.
pub fn morrey_norm_values(vals: &[f64], p: f64, t: f64, w: &Weight) -> Result<f64> {
    check_lengths(vals, w)?;
    if !(p > 0.0 && p <= t && t.is_finite()) {
        return precondition(format!("Morrey norm needs 0 < p <= t < inf, got p={p}, t={t}"));
    }
    let h = w.grid.cell_volume();
    let fp: Vec<f64> = vals.iter().zip(&w.samples).map(|(v, wi)| v.abs().powf(p) * wi).collect();
    let ex = 1.0 / t - 1.0 / p;
    let mut best = (w.samples.iter().sum::<f64>() * h).powf(ex) * (fp.iter().sum::<f64>() * h).powf(1.0 / p);
    if ex == 0.0 {
        return Ok(best);
    }
    let fam = BallFamily::new(w.grid);
    let sw = fam.sums(&w.samples);
    let sf = fam.sums(&fp);
    for level in 0..sw.len() {
        for (a, b) in sw[level].iter().zip(&sf[level]) {
            let v = (a * h).powf(ex) * (b.max(0.0) * h).powf(1.0 / p);
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

pub fn morrey_norm(f: &Field, p: f64, t: f64, w: &Weight) -> Result<f64> {
    morrey_norm_values(&f.abs(), p, t, w)
}

/// Grid-independent description of a variable exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExponentSpec {
    Constant { p: f64 },
    /// `base + amp * sin(2 pi x_1)`.
    Sinusoid { base: f64, amp: f64 },
}

impl ExponentSpec {
    pub fn materialize(&self, grid: Grid) -> Result<ExponentFunction> {
        let samples = (0..grid.len())
            .map(|i| match *self {
                ExponentSpec::Constant { p } => p,
                ExponentSpec::Sinusoid { base, amp } => {
                    base + amp * (2.0 * std::f64::consts::PI * grid.point(i)[0]).sin()
                }
            })
            .collect();
        ExponentFunction::new(grid, samples)
    }

    /// The exponent multiplied pointwise by `c`.
    pub fn scaled(&self, c: f64) -> ExponentSpec {
        match *self {
            ExponentSpec::Constant { p } => ExponentSpec::Constant { p: p * c },
            ExponentSpec::Sinusoid { base, amp } => ExponentSpec::Sinusoid { base: base * c, amp: amp * c },
        }
    }

    pub fn p_minus(&self) -> f64 {
        match *self {
            ExponentSpec::Constant { p } => p,
            ExponentSpec::Sinusoid { base, amp } => base - amp.abs(),
        }
    }
}

/// Exponent samples `p(x)` with `0 < p_- <= p_+ < inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentFunction {
    grid: Grid,
    samples: Vec<f64>,
}

impl ExponentFunction {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Structural("exponent sample count does not match grid".into()));
        }
        if samples.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return precondition("variable exponent must satisfy 0 < p_- <= p_+ < inf");
        }
        Ok(Self { grid, samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn p_minus(&self) -> f64 {
        self.samples.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn p_plus(&self) -> f64 {
        self.samples.iter().cloned().fold(0.0, f64::max)
    }
}

/// Luxemburg norm `inf { lambda > 0 : int |f/lambda|^{p(x)} <= 1 }` by bisection.
pub fn variable_lp_norm_values(vals: &[f64], pfun: &ExponentFunction) -> Result<f64> {
    if vals.len() != pfun.grid.len() {
        return Err(Error::Structural("values and exponent live on different grids".into()));
    }
    if vals.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let h = pfun.grid.cell_volume();
    let modular = |lam: f64| -> f64 {
        vals.iter().zip(&pfun.samples).map(|(v, p)| (v.abs() / lam).powf(*p)).sum::<f64>() * h
    };
    let mut hi = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    while modular(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while modular(lo) <= 1.0 {
        lo *= 0.5;
    }
    for _ in 0..200 {
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
        let m = 0.5 * (lo + hi);
        if modular(m) <= 1.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    Ok(hi)
}

pub fn variable_lp_norm(f: &Field, pfun: &ExponentFunction) -> Result<f64> {
    variable_lp_norm_values(&f.abs(), pfun)
}

/// Vector-valued maximal inequality ratio and whether its hypothesis held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeffermanSteinReport {
    pub ratio: f64,
    pub hypothesis_ok: bool,
}

/// `||(sum_j M_r(f_j)^q)^{1/q}||_{L^p(w)} / ||(sum_j |f_j|^q)^{1/q}||_{L^p(w)}`.
///
/// The hypothesis `0 < r < min(p / tau_w, q)` uses the upper end of the `tau_w` interval.
pub fn fefferman_stein_check(
    family: &[Field],
    p: f64,
    q: f64,
    r: f64,
    w: &Weight,
    tau_w: TauInterval,
) -> Result<FeffermanSteinReport> {
    let Some(first) = family.first() else {
        return precondition("empty family");
    };
    let grid = first.grid();
    let mut num = vec![0.0; grid.len()];
    let mut den = vec![0.0; grid.len()];
    for f in family {
        if f.grid() != grid {
            return Err(Error::Structural("family members live on different grids".into()));
        }
        let m = maximal(f, r);
        for (i, v) in f.abs().into_iter().enumerate() {
            if q.is_infinite() {
                num[i] = f64::max(num[i], m[i]);
                den[i] = f64::max(den[i], v);
            } else {
                num[i] += m[i].powf(q);
                den[i] += v.powf(q);
            }
        }
    }
    if q.is_finite() {
        num.iter_mut().for_each(|v| *v = v.powf(1.0 / q));
        den.iter_mut().for_each(|v| *v = v.powf(1.0 / q));
    }
    let top = lp_norm_values(&num, p, w)?;
    let bottom = lp_norm_values(&den, p, w)?;
    let hypothesis_ok = r > 0.0 && r < (p / tau_w.upper()).min(q);
    Ok(FeffermanSteinReport { ratio: top / bottom, hypothesis_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::random_band_limited;
    use num_complex::Complex64 as C64;

    fn g1(n: usize) -> Grid {
        Grid::new(1, n).unwrap()
    }

    #[test]
    fn sliding_max_matches_brute_force() {
        let row: Vec<f64> = (0..16).map(|i| ((i * 7) % 11) as f64).collect();
        let out = sliding_max_periodic(&row, -3, 2);
        for c in 0..16i64 {
            let want = (-3..=2).map(|d| row[(c + d).rem_euclid(16) as usize]).fold(f64::MIN, f64::max);
            assert_eq!(out[c as usize], want);
        }
    }

    #[test]
    fn ball_family_shapes() {
        let fam = BallFamily::new(g1(64));
        assert_eq!(fam.count(0), 64);
        assert_eq!(fam.count(1), 33);
        assert_eq!(*fam.counts.last().unwrap(), 1);
        let fam2 = BallFamily::new(Grid::new(2, 16).unwrap());
        assert_eq!(*fam2.counts.last().unwrap(), 1);
        assert!(fam2.count(0) < 256);
    }

    #[test]
    fn ball_sums_match_brute_force_2d() {
        let g = Grid::new(2, 16).unwrap();
        let v: Vec<f64> = (0..g.len()).map(|i| ((i * 37) % 13) as f64).collect();
        let fam = BallFamily::new(g);
        let sums = fam.sums(&v);
        for (level, segs) in fam.shapes.iter().enumerate() {
            for center in [0usize, 17, 200, 255] {
                let (cr, cc) = ((center / 16) as i64, (center % 16) as i64);
                let mut want = 0.0;
                for &(dy, lo, hi) in segs {
                    for dx in lo..=hi {
                        let r = (cr + dy).rem_euclid(16) as usize;
                        let c = (cc + dx).rem_euclid(16) as usize;
                        want += v[r * 16 + c];
                    }
                }
                assert!((sums[level][center] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn maximal_basics() {
        let g = g1(64);
        let c = Field::constant(g, C64::new(-2.0, 0.0));
        for v in maximal(&c, 1.0) {
            assert!((v - 2.0).abs() < 1e-12);
        }
        let f = random_band_limited(g, 1.0, 15.0, 2, true).unwrap();
        let m = maximal(&f, 1.0);
        for (a, b) in f.abs().iter().zip(&m) {
            assert!(*a <= b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn maximal_sublinear() {
        let g = Grid::new(2, 16).unwrap();
        let f = random_band_limited(g, 1.0, 4.0, 2, true).unwrap();
        let h = random_band_limited(g, 1.0, 4.0, 3, true).unwrap();
        let s = maximal(&f.add(&h).unwrap(), 1.0);
        let (mf, mh) = (maximal(&f, 1.0), maximal(&h, 1.0));
        for i in 0..g.len() {
            assert!(s[i] <= mf[i] + mh[i] + 1e-12);
        }
    }

    #[test]
    fn ap_of_constants() {
        let g = g1(128);
        assert!((ap_constant(&Weight::unit(g), 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((ap_constant(&Weight::constant(g, 3.7).unwrap(), 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(ap_constant(&Weight::unit(g), 1.0).is_err());
    }

    #[test]
    fn ap_nonincreasing_in_p() {
        let w = Weight::power(g1(256), 0.5).unwrap();
        let mut prev = f64::INFINITY;
        for p in [1.6, 2.0, 3.0, 4.0] {
            let a = ap_constant(&w, p).unwrap();
            assert!(a <= prev * (1.0 + 1e-12));
            prev = a;
        }
    }

    #[test]
    fn norms_of_constants() {
        let g = g1(64);
        let one = Field::constant(g, C64::new(1.0, 0.0));
        let w = Weight::unit(g);
        for p in [0.5, 1.0, 2.0, 7.0, f64::INFINITY] {
            assert!((lp_norm(&one, p, &w).unwrap() - 1.0).abs() < 1e-14);
        }
        let half: Vec<f64> = (0..64).map(|i| if i < 32 { 1.0 } else { 0.0 }).collect();
        assert!((lp_norm_values(&half, 1.0, &w).unwrap() - 0.5).abs() < 1e-15);
        assert!((morrey_norm(&one, 2.0, 4.0, &w).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lorentz_reductions() {
        let g = g1(128);
        let f = random_band_limited(g, 1.0, 30.0, 9, true).unwrap();
        let w = Weight::power(g, 0.5).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let a = lorentz_norm(&f, p, p, &w).unwrap();
            let b = lp_norm(&f, p, &w).unwrap();
            assert!((a - b).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn morrey_reduction() {
        let g = Grid::new(2, 16).unwrap();
        let f = random_band_limited(g, 1.0, 4.0, 9, true).unwrap();
        let w = Weight::power(g, 0.5).unwrap();
        let a = morrey_norm(&f, 2.0, 2.0, &w).unwrap();
        let b = lp_norm(&f, 2.0, &w).unwrap();
        assert!((a - b).abs() < 1e-10 * b);
        assert!(morrey_norm(&f, 3.0, 2.0, &w).is_err());
    }

    #[test]
    fn variable_exponent_identities() {
        let g = g1(128);
        let f = random_band_limited(g, 1.0, 20.0, 4, true).unwrap();
        let pc = ExponentSpec::Constant { p: 3.0 }.materialize(g).unwrap();
        let a = variable_lp_norm(&f, &pc).unwrap();
        let b = lp_norm(&f, 3.0, &Weight::unit(g)).unwrap();
        assert!((a - b).abs() < 1e-8 * b);
        let spec = ExponentSpec::Sinusoid { base: 2.0, amp: 0.5 };
        let p = spec.materialize(g).unwrap();
        let p2 = spec.scaled(2.0).materialize(g).unwrap();
        let sq: Vec<f64> = f.abs().iter().map(|v| v * v).collect();
        let lhs = variable_lp_norm_values(&sq, &p).unwrap();
        let rhs = variable_lp_norm(&f, &p2).unwrap().powi(2);
        assert!((lhs - rhs).abs() < 1e-8 * rhs);
        assert_eq!(variable_lp_norm(&Field::zeros(g), &p).unwrap(), 0.0);
    }

    #[test]
    fn power_weight_origin_cell() {
        let g = g1(64);
        let w = Weight::power(g, 0.5).unwrap();
        let h: f64 = 0.5 / 64.0;
        assert!((w.samples()[32] - h.sqrt() / 1.5).abs() < 1e-15);
        assert!(Weight::power(g, -1.0).is_err());
    }

    #[test]
    fn fefferman_stein_single_constant() {
        let g = g1(64);
        let c = Field::constant(g, C64::new(1.5, 0.0));
        let rep = fefferman_stein_check(&[c], 2.0, 2.0, 1.0, &Weight::unit(g), TauInterval::exact(1.0)).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-12);
        assert!(rep.hypothesis_ok);
    }
}
#[cfg(test)]
mod tau_tests {
    use super::*;

    #[test]
    fn power_weight_tau_brackets_one_plus_a_over_n() {
        let w = Weight::power(Grid::new(1, 256).unwrap(), 0.5).unwrap();
        assert!(tau_w_estimate(&w).unwrap().contains(1.5));
        let w = Weight::power(Grid::new(1, 512).unwrap(), 1.0).unwrap();
        assert!(tau_w_estimate(&w).unwrap().contains(2.0));
        let w = Weight::power(Grid::new(2, 64).unwrap(), 0.5).unwrap();
        assert!(tau_w_estimate(&w).unwrap().contains(1.25));
    }

    #[test]
    fn a1_weight_is_near_one() {
        let w = Weight::power(Grid::new(1, 256).unwrap(), -0.5).unwrap();
        assert!(tau_w_estimate(&w).unwrap().upper() < 1.01);
        assert!(tau_w_estimate(&Weight::power(Grid::new(1, 32).unwrap(), 0.5).unwrap()).is_err());
    }
}
