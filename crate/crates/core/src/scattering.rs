//! The triangular system `u' = v w`, `v' + L v = 0`, `w' + L w = 0` with `L = D^gamma` or `J^gamma`,
//! solved by quadrature and in closed form, and its scattering limit.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bilinear::{apply_direct, cone_cutoff, derivative_budget, BilinearSymbol, Setting};
use crate::error::{precondition, Error, Result};
use crate::grid_field::{random_band_limited, Field, Grid};
use crate::littlewood_paley::LpFamily;
use crate::spaces::{norm, norm_mod_constants, tau_p, tau_pq, tau_w_of, SpaceSpec};
use crate::weights::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorType {
    /// `D^gamma`, symbol `|k|^gamma`.
    Homogeneous,
    /// `J^gamma`, symbol `(1+|k|^2)^{gamma/2}`.
    Inhomogeneous,
}

impl OperatorType {
    pub fn symbol(self, gamma: f64, r: f64) -> f64 {
        match self {
            OperatorType::Homogeneous => r.powf(gamma),
            OperatorType::Inhomogeneous => (1.0 + r * r).powf(0.5 * gamma),
        }
    }
}

/// `lambda(xi, eta) = a(xi) + b(eta)` for the operator type.
pub fn lambda_symbol(kind: OperatorType, gamma: f64) -> BilinearSymbol {
    BilinearSymbol::new(format!("lambda({kind:?},{gamma})"), gamma, kind == OperatorType::Inhomogeneous, move |x, y| {
        kind.symbol(gamma, x) + kind.symbol(gamma, y)
    })
}

/// `(1 - e^{-t lambda}) / lambda`.
pub fn transient_symbol(kind: OperatorType, gamma: f64, t: f64) -> BilinearSymbol {
    if kind == OperatorType::Homogeneous {
        return BilinearSymbol::scattering_transient(gamma, t);
    }
    BilinearSymbol::new(format!("scattering_transient_inhom({gamma},{t})"), -gamma, true, move |x, y| {
        let lam = kind.symbol(gamma, x) + kind.symbol(gamma, y);
        -(-t * lam).exp_m1() / lam
    })
}

/// `1 / lambda`.
pub fn inverse_lambda(kind: OperatorType, gamma: f64) -> BilinearSymbol {
    match kind {
        OperatorType::Homogeneous => BilinearSymbol::inverse_gamma(gamma),
        OperatorType::Inhomogeneous => BilinearSymbol::inverse_gamma_inhom(gamma),
    }
}

/// Target of the scattering estimate: `||u_inf||_X` against the two products on the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringEstimate {
    pub setting: Setting,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub s: f64,
    #[serde(default)]
    pub w1: WeightSpec,
    #[serde(default)]
    pub w2: WeightSpec,
}

impl ScatteringEstimate {
    pub fn validate(&self) -> Result<()> {
        let holder = 1.0 / self.p - 1.0 / self.p1 - 1.0 / self.p2;
        if holder.abs() > 1e-12 {
            return Err(Error::Config(format!(
                "exponents violate 1/p = 1/p1 + 1/p2: p={}, p1={}, p2={}",
                self.p, self.p1, self.p2
            )));
        }
        Ok(())
    }

    pub fn weight(&self) -> WeightSpec {
        WeightSpec::compose(&self.w1, self.p / self.p1, &self.w2, self.p / self.p2)
    }
}

#[derive(Clone, Debug)]
pub struct ScatteringProblem {
    pub kind: OperatorType,
    pub gamma: f64,
    pub f: Field,
    pub g: Field,
    pub times: Vec<f64>,
    pub specs: Vec<SpaceSpec>,
    pub delta: Option<f64>,
    pub estimate: Option<ScatteringEstimate>,
}

impl ScatteringProblem {
    pub fn new(kind: OperatorType, gamma: f64, f: Field, g: Field) -> Self {
        Self { kind, gamma, f, g, times: vec![], specs: vec![], delta: None, estimate: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return precondition(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.f.grid() != self.g.grid() {
            return Err(Error::Structural("f and g live on different grids".into()));
        }
        if self.kind == OperatorType::Homogeneous && (!self.f.is_mean_zero() || !self.g.is_mean_zero()) {
            return precondition("the homogeneous system needs mean-zero data");
        }
        if self.times.iter().any(|t| !(*t >= 0.0)) {
            return precondition("times must be non-negative");
        }
        Ok(())
    }

    fn support_range(&self, f: &Field) -> (f64, f64) {
        let g = f.grid();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (i, c) in f.spectral().iter().enumerate() {
            if c.norm_sqr() > 0.0 {
                let a = self.kind.symbol(self.gamma, g.freq_norm(i));
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
        (lo, hi)
    }

    /// `min lambda` over the product support.
    pub fn lambda_min(&self) -> f64 {
        self.support_range(&self.f).0 + self.support_range(&self.g).0
    }

    pub fn lambda_max(&self) -> f64 {
        self.support_range(&self.f).1 + self.support_range(&self.g).1
    }
}

/// `e^{-t a(D)} f`.
pub fn evolve_linear(f: &Field, gamma: f64, kind: OperatorType, t: f64) -> Result<Field> {
    if !(t >= 0.0) {
        return precondition(format!("time must be non-negative, got {t}"));
    }
    let g = f.grid();
    Ok(f.map_spectrum(|i, c| c * (-t * kind.symbol(gamma, g.freq_norm(i))).exp()))
}

/// Nodes and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::from_fn(m, m, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

const QUAD_TOL: f64 = 1e-8;
const QUAD_MAX_NODES: usize = 128;

/// `u(t) = int_0^t v(s) w(s) ds` by Gauss-Legendre on geometrically graded panels,
/// doubling the nodes per panel until successive results agree to `1e-8`.
pub fn solve_u_quadrature(problem: &ScatteringProblem, t: f64) -> Result<Field> {
    problem.validate()?;
    let grid = problem.f.grid();
    let out = grid.padded();
    if t == 0.0 {
        return Ok(Field::zeros(out));
    }
    let fp = problem.f.pad_to(out)?;
    let gp = problem.g.pad_to(out)?;
    let first = (1.0 / problem.lambda_max().max(1e-300)).min(t);
    let mut edges = vec![0.0, first];
    while *edges.last().unwrap() < t {
        let next = (2.0 * edges.last().unwrap()).min(t);
        edges.push(next);
    }
    let integrate = |m: usize| -> Result<Vec<C64>> {
        let (x, w) = gauss_legendre(m);
        let mut acc = vec![C64::new(0.0, 0.0); out.len()];
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            for (xi, wi) in x.iter().zip(&w) {
                let s = a + half * (xi + 1.0);
                let v = evolve_linear(&fp, problem.gamma, problem.kind, s)?;
                let u = evolve_linear(&gp, problem.gamma, problem.kind, s)?;
                for ((o, vv), uu) in acc.iter_mut().zip(v.spatial()).zip(u.spatial()) {
                    *o += vv * uu * (half * wi);
                }
            }
        }
        Ok(acc)
    };
    let mut m = 8;
    let mut prev = integrate(m)?;
    let mut change = f64::INFINITY;
    while m < QUAD_MAX_NODES {
        m *= 2;
        let next = integrate(m)?;
        let diff: f64 = next.iter().zip(&prev).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let size: f64 = next.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        change = if size > 0.0 { diff / size } else { diff };
        prev = next;
        if change < QUAD_TOL {
            return Field::from_spatial(out, prev);
        }
    }
    Err(Error::Convergence(format!("quadrature stalled at relative change {change:.3e} with {m} nodes per panel")))
}

/// `u(t) = T_{(1 - e^{-t lambda}) / lambda}(f, g)`.
pub fn solve_u_closed(problem: &ScatteringProblem, t: f64) -> Result<Field> {
    problem.validate()?;
    if !(t >= 0.0) {
        return precondition(format!("time must be non-negative, got {t}"));
    }
    apply_direct(&transient_symbol(problem.kind, problem.gamma, t), &problem.f, &problem.g)
}

/// `u_inf = T_{1/lambda}(f, g)`.
pub fn u_infinity(problem: &ScatteringProblem) -> Result<Field> {
    problem.validate()?;
    if !(problem.lambda_min() > 0.0) {
        return precondition("lambda vanishes on the support of the data");
    }
    apply_direct(&inverse_lambda(problem.kind, problem.gamma), &problem.f, &problem.g)
}

/// `h(xi, eta) / lambda` with the cone cutoff of width `delta`; agrees with `u_inf` on cone data.
pub fn u_infinity_cone(problem: &ScatteringProblem, delta: f64) -> Result<Field> {
    problem.validate()?;
    let kind = problem.kind;
    let gamma = problem.gamma;
    let sym = BilinearSymbol::new(format!("cone({delta})/lambda"), -gamma, kind == OperatorType::Inhomogeneous, move |x, y| {
        let h = match kind {
            OperatorType::Homogeneous => cone_cutoff(delta, x, y),
            OperatorType::Inhomogeneous => cone_cutoff(delta, (1.0 + x * x).sqrt(), (1.0 + y * y).sqrt()),
        };
        if h == 0.0 {
            0.0
        } else {
            h / (kind.symbol(gamma, x) + kind.symbol(gamma, y))
        }
    });
    apply_direct(&sym, &problem.f, &problem.g)
}

/// Largest `c2` with `[c1, c2]` inside the cone of aperture `delta`.
fn cone_outer_radius(delta: f64, c1: f64, kind: OperatorType) -> f64 {
    match kind {
        OperatorType::Homogeneous => (c1 / delta * (1.0 + 1e-12)).floor(),
        OperatorType::Inhomogeneous => ((1.0 + c1 * c1).sqrt() / delta * (1.0 + 1e-12)).floor(),
    }
}

/// Data with `fhat(k) ghat(l)` supported in the cone, built on an annulus `c1 <= |k| <= c2`.
pub fn cone_data(grid: Grid, delta: f64, seed: u64, kind: OperatorType) -> Result<(Field, Field)> {
    cone_data_with(grid, delta, 2.0, seed, kind)
}

pub fn cone_data_with(grid: Grid, delta: f64, c1: f64, seed: u64, kind: OperatorType) -> Result<(Field, Field)> {
    if !(delta > 0.0 && delta < 1.0) {
        return precondition(format!("delta must lie in (0, 1), got {delta}"));
    }
    let limit = (grid.n() / 4) as f64;
    let c2 = cone_outer_radius(delta, c1, kind).min(limit);
    if !(c1 >= 1.0) || c2 < c1 {
        return precondition(format!("no admissible annulus starting at {c1} on a grid of size {}", grid.n()));
    }
    let f = random_band_limited(grid, c1, c2, seed, true)?;
    let g = random_band_limited(grid, c1, c2, seed.wrapping_add(0x9e37_79b9), true)?;
    Ok((f, g))
}

/// Exhaustive check that every product of nonzero coefficients lies in the cone.
pub fn in_cone(f: &Field, g: &Field, delta: f64, kind: OperatorType) -> bool {
    let grid = f.grid();
    let radii = |h: &Field| -> Vec<f64> {
        h.spectral().iter().enumerate().filter(|(_, c)| c.norm_sqr() > 0.0).map(|(i, _)| grid.freq_norm(i)).collect()
    };
    let (rf, rg) = (radii(f), radii(g));
    let bracket = |r: f64| match kind {
        OperatorType::Homogeneous => r,
        OperatorType::Inhomogeneous => (1.0 + r * r).sqrt(),
    };
    rf.iter().all(|&a| rg.iter().all(|&b| b <= bracket(a) / delta && a <= bracket(b) / delta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringReport {
    pub kind: OperatorType,
    pub gamma: f64,
    pub times: Vec<f64>,
    /// `||u(t) - u_inf||_{L^2}` per time.
    pub l2_distance: Vec<f64>,
    /// Distance in each target space, `[spec][time]`.
    pub spec_distance: Vec<Vec<f64>>,
    pub lambda_min: f64,
    /// Slope of `-log ||u(t) - u_inf||` over the later half of the times.
    pub decay_rate: Option<f64>,
    pub monotone: bool,
    pub estimate_ratio: Option<f64>,
    pub gamma_even: bool,
    pub gamma_budget: Option<u64>,
    /// Neither `gamma` even nor above the budget: the theorem asks for cone data.
    pub cone_required: bool,
    pub cone_data: Option<bool>,
    pub below_threshold: bool,
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx)
}

fn estimate_space(setting: Setting, homogeneous: bool, p: f64, q: f64, s: f64, w: WeightSpec) -> SpaceSpec {
    let base = match setting {
        Setting::Tl => SpaceSpec::tl(p, q, s, homogeneous),
        Setting::Besov => SpaceSpec::besov(p, q, s, homogeneous),
    };
    base.with_weight(w)
}

fn hardy_or_sup(f: &Field, p: f64, w: &WeightSpec, homogeneous: bool, fam: &LpFamily) -> Result<f64> {
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    norm(f, &SpaceSpec::hardy(p, !homogeneous).with_weight(w.clone()), fam)
}

/// `||u_inf||_X / (||f||_{X1^{s-gamma}} ||g||_{H^{p2}} + ||f||_{H^{p1}} ||g||_{X2^{s-gamma}})`.
pub fn estimate_ratio(problem: &ScatteringProblem, est: &ScatteringEstimate, u_inf: &Field, fam: &LpFamily) -> Result<f64> {
    est.validate()?;
    let hom = problem.kind == OperatorType::Homogeneous;
    let w = est.weight();
    let lhs = norm_mod_constants(u_inf, &estimate_space(est.setting, hom, est.p, est.q, est.s, w), &fam.on_grid(u_inf.grid()))?;
    let fam_in = fam.on_grid(problem.f.grid());
    let sg = est.s - problem.gamma;
    let f_x = norm(&problem.f, &estimate_space(est.setting, hom, est.p1, est.q, sg, est.w1.clone()), &fam_in)?;
    let g_x = norm(&problem.g, &estimate_space(est.setting, hom, est.p2, est.q, sg, est.w2.clone()), &fam_in)?;
    let f_h = hardy_or_sup(&problem.f, est.p1, &est.w1, hom, &fam_in)?;
    let g_h = hardy_or_sup(&problem.g, est.p2, &est.w2, hom, &fam_in)?;
    let rhs = f_x * g_h + f_h * g_x;
    if rhs == 0.0 {
        return Err(Error::NumericDomain("right-hand side vanishes".into()));
    }
    Ok(lhs / rhs)
}

/// Distances to `u_inf` over the time grid, decay fit, estimate ratio and hypothesis flags.
pub fn verify_scattering(problem: &ScatteringProblem, fam: &LpFamily) -> Result<ScatteringReport> {
    problem.validate()?;
    let u_inf = u_infinity(problem)?;
    let out = u_inf.grid();
    let fam_out = fam.on_grid(out);
    let n = problem.f.grid().dim();
    let mut l2 = Vec::with_capacity(problem.times.len());
    let mut spec_distance = vec![Vec::with_capacity(problem.times.len()); problem.specs.len()];
    for &t in &problem.times {
        let diff = solve_u_closed(problem, t)?.sub(&u_inf)?;
        l2.push(diff.l2_norm());
        for (k, spec) in problem.specs.iter().enumerate() {
            spec_distance[k].push(norm_mod_constants(&diff, spec, &fam_out)?);
        }
    }
    let monotone = l2.windows(2).all(|w| w[1] < w[0]);
    let half = problem.times.len() / 2;
    let late: Vec<(f64, f64)> = problem.times[half..]
        .iter()
        .zip(&l2[half..])
        .filter(|(_, d)| **d > 0.0)
        .map(|(t, d)| (*t, -d.ln()))
        .collect();
    let (lt, ly): (Vec<f64>, Vec<f64>) = late.into_iter().unzip();
    let decay_rate = slope(&lt, &ly);

    let gamma_even = problem.gamma.fract() == 0.0 && (problem.gamma as i64) % 2 == 0;
    let mut gamma_budget = None;
    let mut below_threshold = false;
    let mut estimate_ratio_v = None;
    if let Some(est) = &problem.estimate {
        let t1 = tau_w_of(&est.w1, n).upper();
        let t2 = tau_w_of(&est.w2, n).upper();
        gamma_budget = Some(derivative_budget(n, est.p1, est.p2, est.p, est.q, t1, t2, est.setting));
        let tw = tau_w_of(&est.weight(), n).upper();
        below_threshold = match est.setting {
            Setting::Tl => est.s <= tau_pq(n, est.p, est.q, tw),
            Setting::Besov => est.s <= tau_p(n, est.p, tw),
        };
        estimate_ratio_v = Some(estimate_ratio(problem, est, &u_inf, fam)?);
    }
    let cone_required = !gamma_even && gamma_budget.is_none_or(|b| problem.gamma < b as f64);
    let cone = problem.delta.map(|d| in_cone(&problem.f, &problem.g, d, problem.kind));
    Ok(ScatteringReport {
        kind: problem.kind,
        gamma: problem.gamma,
        times: problem.times.clone(),
        l2_distance: l2,
        spec_distance,
        lambda_min: problem.lambda_min(),
        decay_rate,
        monotone,
        estimate_ratio: estimate_ratio_v,
        gamma_even,
        gamma_budget,
        cone_required,
        cone_data: cone,
        below_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::{make_lp_family, TransitionProfile};

    fn data(n: usize, seed: u64) -> (Field, Field) {
        let g = Grid::new(1, n).unwrap();
        (
            random_band_limited(g, 1.0, (n / 4) as f64, seed, true).unwrap(),
            random_band_limited(g, 1.0, (n / 4) as f64, seed + 100, true).unwrap(),
        )
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(6);
        let int = |p: i32| x.iter().zip(&w).map(|(a, b)| b * a.powi(p)).sum::<f64>();
        assert!((int(0) - 2.0).abs() < 1e-14);
        assert!((int(10) - 2.0 / 11.0).abs() < 1e-14);
        assert!(int(7).abs() < 1e-14);
    }

    #[test]
    fn evolution_semigroup() {
        let (f, _) = data(64, 1);
        let a = evolve_linear(&evolve_linear(&f, 2.0, OperatorType::Homogeneous, 0.01).unwrap(), 2.0, OperatorType::Homogeneous, 0.02).unwrap();
        let b = evolve_linear(&f, 2.0, OperatorType::Homogeneous, 0.03).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-12 * b.l2_norm());
        let z = evolve_linear(&f, 2.0, OperatorType::Homogeneous, 0.0).unwrap();
        assert_eq!(z.spectral(), f.spectral());
        let m = Field::mode(f.grid(), &[3]).unwrap();
        let e = evolve_linear(&m, 2.0, OperatorType::Homogeneous, 1.0).unwrap();
        assert!((e.coefficient(&[3]).unwrap().re - (-9.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn single_mode_formula() {
        let g = Grid::new(1, 32).unwrap();
        let p = ScatteringProblem::new(OperatorType::Homogeneous, 2.0, Field::mode(g, &[2]).unwrap(), Field::mode(g, &[-3]).unwrap());
        let t = 0.3;
        let lam: f64 = 13.0;
        let want = -(-t * lam).exp_m1() / lam;
        let q = solve_u_quadrature(&p, t).unwrap();
        let c = solve_u_closed(&p, t).unwrap();
        let mode = Field::mode(g.padded(), &[-1]).unwrap();
        assert!(c.sub(&mode.scale(C64::new(want, 0.0))).unwrap().sup_norm() < 1e-12);
        assert!(q.sub(&c).unwrap().l2_norm() < 1e-12);
        let ui = u_infinity(&p).unwrap();
        assert!(ui.sub(&mode.scale(C64::new(1.0 / lam, 0.0))).unwrap().sup_norm() < 1e-14);
        assert_eq!(solve_u_quadrature(&p, 0.0).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let (f, g) = data(64, 3);
        let p = ScatteringProblem::new(OperatorType::Homogeneous, 2.0, f, g);
        for t in [0.05, 1.0] {
            let q = solve_u_quadrature(&p, t).unwrap();
            let c = solve_u_closed(&p, t).unwrap();
            assert!(q.sub(&c).unwrap().l2_norm() < 1e-6 * c.l2_norm());
        }
    }

    #[test]
    fn decay_and_monotonicity() {
        let fam = make_lp_family(TransitionProfile::default(), Grid::new(1, 64).unwrap()).unwrap();
        let (f, g) = data(64, 5);
        let mut p = ScatteringProblem::new(OperatorType::Homogeneous, 2.0, f, g);
        p.times = (0..=12).map(|i| 0.5 * i as f64).collect();
        let r = verify_scattering(&p, &fam).unwrap();
        assert!(r.monotone);
        assert_eq!(r.lambda_min, 2.0);
        let rate = r.decay_rate.unwrap();
        assert!((rate / r.lambda_min - 1.0).abs() < 0.1, "{rate}");
        let u = u_infinity(&p).unwrap();
        for (t, d) in r.times.iter().zip(&r.l2_distance) {
            assert!(*d <= (-t * 2.0).exp() * u.l2_norm() * 2.0 + 1e-15);
        }
    }

    #[test]
    fn cone_data_lies_in_cone() {
        let g = Grid::new(1, 64).unwrap();
        let (f, h) = cone_data(g, 0.5, 4, OperatorType::Homogeneous).unwrap();
        assert!(in_cone(&f, &h, 0.5, OperatorType::Homogeneous));
        assert_eq!(f.max_freq(), 4.0);
        let p = ScatteringProblem::new(OperatorType::Homogeneous, 1.0, f, h);
        let a = u_infinity(&p).unwrap();
        let b = u_infinity_cone(&p, 0.5).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-14 * a.l2_norm());
        let (f1, _) = cone_data(g, 0.99, 4, OperatorType::Homogeneous).unwrap();
        assert_eq!(f1.max_freq(), 2.0);
        assert!(cone_data(g, 1.0, 4, OperatorType::Homogeneous).is_err());
    }

    #[test]
    fn homogeneous_needs_mean_zero() {
        let g = Grid::new(1, 32).unwrap();
        let c = Field::constant(g, C64::new(1.0, 0.0));
        let p = ScatteringProblem::new(OperatorType::Homogeneous, 2.0, c.clone(), c.clone());
        assert!(u_infinity(&p).is_err());
        let pi = ScatteringProblem::new(OperatorType::Inhomogeneous, 2.0, c.clone(), c);
        let u = u_infinity(&pi).unwrap();
        assert!((u.coefficient(&[0]).unwrap().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn estimate_ratio_scales_out() {
        let fam = make_lp_family(TransitionProfile::default(), Grid::new(1, 64).unwrap()).unwrap();
        let (f, g) = data(64, 8);
        let est = ScatteringEstimate { setting: Setting::Tl, p: 2.0, p1: 4.0, p2: 4.0, q: 2.0, s: 1.5, w1: WeightSpec::unit(), w2: WeightSpec::unit() };
        let p = ScatteringProblem::new(OperatorType::Homogeneous, 2.0, f.clone(), g.clone());
        let p2 = ScatteringProblem::new(OperatorType::Homogeneous, 2.0, f.scale(C64::new(3.0, 0.0)), g);
        let a = estimate_ratio(&p, &est, &u_infinity(&p).unwrap(), &fam).unwrap();
        let b = estimate_ratio(&p2, &est, &u_infinity(&p2).unwrap(), &fam).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        let bad = ScatteringEstimate { p: 3.0, ..est };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }
}
