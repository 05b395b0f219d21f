//! Quasi-norms of Triebel-Lizorkin, Besov, Hardy and Sobolev type over weighted base spaces.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::grid_field::{d_s, j_s, Field, Grid};
use crate::littlewood_paley::LpFamily;
use crate::weights::{
    lorentz_norm_values, lp_norm_values, morrey_norm_values, variable_lp_norm_values, ExponentSpec,
    TauInterval, WeightSpec,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[serde(alias = "tl")]
    TriebelLizorkin,
    Besov,
    Hardy,
    LocalHardy,
    Lebesgue,
    Lorentz,
    Morrey,
    VariableLebesgue,
    Sobolev,
}

/// The base space whose quasi-norm is taken after the Littlewood-Paley step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Base {
    #[default]
    Lebesgue,
    Lorentz {
        t: f64,
    },
    Morrey {
        t: f64,
    },
    Variable {
        exponent: ExponentSpec,
    },
}

/// Function-space descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub family: Family,
    #[serde(default = "yes")]
    pub homogeneous: bool,
    pub p: f64,
    #[serde(default = "two")]
    pub q: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub base: Base,
    #[serde(default)]
    pub weight: WeightSpec,
}

fn yes() -> bool {
    true
}

fn two() -> f64 {
    2.0
}

impl SpaceSpec {
    fn with_family(family: Family, p: f64, q: f64, s: f64, homogeneous: bool) -> Self {
        Self { family, homogeneous, p, q, s, base: Base::Lebesgue, weight: WeightSpec::unit() }
    }

    pub fn tl(p: f64, q: f64, s: f64, homogeneous: bool) -> Self {
        Self::with_family(Family::TriebelLizorkin, p, q, s, homogeneous)
    }

    pub fn besov(p: f64, q: f64, s: f64, homogeneous: bool) -> Self {
        Self::with_family(Family::Besov, p, q, s, homogeneous)
    }

    /// `H^p` (homogeneous) or `h^p` (local).
    pub fn hardy(p: f64, local: bool) -> Self {
        let fam = if local { Family::LocalHardy } else { Family::Hardy };
        Self::with_family(fam, p, 2.0, 0.0, !local)
    }

    pub fn lebesgue(p: f64) -> Self {
        Self::with_family(Family::Lebesgue, p, 2.0, 0.0, true)
    }

    pub fn sobolev(p: f64, s: f64, homogeneous: bool) -> Self {
        Self::with_family(Family::Sobolev, p, 2.0, s, homogeneous)
    }

    pub fn with_weight(mut self, w: WeightSpec) -> Self {
        self.weight = w;
        self
    }

    pub fn with_base(mut self, b: Base) -> Self {
        self.base = b;
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    /// Parameter ranges for the family.
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0) || !(self.q > 0.0) {
            return precondition(format!("p and q must be positive, got p={}, q={}", self.p, self.q));
        }
        match self.family {
            Family::TriebelLizorkin | Family::Hardy | Family::LocalHardy | Family::Sobolev
                if self.p.is_infinite() =>
            {
                return Err(Error::Unsupported(format!("{:?} with p = inf", self.family)));
            }
            _ => {}
        }
        match &self.base {
            Base::Morrey { t } if !(self.p <= *t && t.is_finite()) => {
                precondition(format!("Morrey base needs p <= t < inf, got p={}, t={t}", self.p))
            }
            Base::Lorentz { t } if !(*t > 0.0) || self.p.is_infinite() => {
                precondition(format!("Lorentz base needs 0 < p < inf and t > 0, got p={}, t={t}", self.p))
            }
            Base::Variable { exponent } if exponent.p_minus() <= 0.0 => {
                precondition("variable exponent must be positive")
            }
            Base::Variable { .. } if !self.weight.is_unit() => {
                Err(Error::Unsupported("weighted variable-exponent spaces".into()))
            }
            _ => Ok(()),
        }
    }

    /// Smallest exponent that governs the quasi-triangle inequality.
    pub fn effective_p(&self) -> f64 {
        match &self.base {
            Base::Variable { exponent } => exponent.p_minus(),
            _ => self.p,
        }
    }
}

/// `n(1/min(p/tau_w, q, 1) - 1)`.
pub fn tau_pq(n: usize, p: f64, q: f64, tau_w: f64) -> f64 {
    n as f64 * (1.0 / (p / tau_w).min(q).min(1.0) - 1.0)
}

/// `n(1/min(p/tau_w, 1) - 1)`.
pub fn tau_p(n: usize, p: f64, tau_w: f64) -> f64 {
    n as f64 * (1.0 / (p / tau_w).min(1.0) - 1.0)
}

/// `n(1/min(p/tau_w, t, q, 1) - 1)`.
pub fn tau_ptq(n: usize, p: f64, t: f64, q: f64, tau_w: f64) -> f64 {
    n as f64 * (1.0 / (p / tau_w).min(t).min(q).min(1.0) - 1.0)
}

/// Known `tau_w` for the descriptor kinds: 1 for constants, `max(1, 1 + a/n)` for `|x|^a`.
pub fn tau_w_of(spec: &WeightSpec, n: usize) -> TauInterval {
    match *spec {
        WeightSpec::Constant { .. } => TauInterval::exact(1.0),
        WeightSpec::Power { a } => TauInterval::exact((1.0 + a / n as f64).max(1.0)),
    }
}

/// Quasi-norm of sample moduli in the base space of `spec`, materialised on `grid`.
pub fn base_norm(vals: &[f64], grid: Grid, p: f64, base: &Base, weight: &WeightSpec) -> Result<f64> {
    let w = weight.materialize(grid)?;
    match base {
        Base::Lebesgue => lp_norm_values(vals, p, &w),
        Base::Lorentz { t } => lorentz_norm_values(vals, p, *t, &w),
        Base::Morrey { t } => morrey_norm_values(vals, p, *t, &w),
        Base::Variable { exponent } => {
            if !weight.is_unit() {
                return Err(Error::Unsupported("weighted variable-exponent spaces".into()));
            }
            variable_lp_norm_values(vals, &exponent.materialize(grid)?)
        }
    }
}

/// Littlewood-Paley pieces with their scale index: `Delta_j`, or `S_0, Delta_1, ...` when inhomogeneous.
pub fn lp_pieces(f: &Field, fam: &LpFamily, homogeneous: bool) -> Result<Vec<(usize, Field)>> {
    if homogeneous && !f.is_mean_zero() {
        return precondition("homogeneous quasi-norms need a mean-zero field");
    }
    let fam = fam.on_grid(f.grid());
    let mut out = Vec::with_capacity(fam.j_max() + 1);
    for j in 0..=fam.j_max() {
        let piece = if j == 0 && !homogeneous { fam.s_j(f, 0)? } else { fam.delta_j(f, j)? };
        out.push((j, piece));
    }
    Ok(out)
}

fn lq_combine(acc: &mut [f64], vals: &[f64], weight: f64, q: f64) {
    for (a, v) in acc.iter_mut().zip(vals) {
        let x = weight * v;
        if q.is_infinite() {
            *a = a.max(x);
        } else {
            *a += x.powf(q);
        }
    }
}

fn lq_finish(acc: &mut [f64], q: f64) {
    if q.is_finite() {
        acc.iter_mut().for_each(|a| *a = a.powf(1.0 / q));
    }
}

/// `|| (sum_j (2^{js} |Delta_j f|)^q)^{1/q} ||_{base}`.
pub fn tl_norm(f: &Field, spec: &SpaceSpec, fam: &LpFamily) -> Result<f64> {
    spec.validate()?;
    let pieces = lp_pieces(f, fam, spec.homogeneous)?;
    let mut acc = vec![0.0; f.grid().len()];
    for (j, piece) in &pieces {
        lq_combine(&mut acc, &piece.abs(), 2f64.powf(*j as f64 * spec.s), spec.q);
    }
    lq_finish(&mut acc, spec.q);
    base_norm(&acc, f.grid(), spec.p, &spec.base, &spec.weight)
}

/// `(sum_j (2^{js} ||Delta_j f||_{base})^q)^{1/q}`.
pub fn besov_norm(f: &Field, spec: &SpaceSpec, fam: &LpFamily) -> Result<f64> {
    spec.validate()?;
    let pieces = lp_pieces(f, fam, spec.homogeneous)?;
    let mut acc: f64 = 0.0;
    for (j, piece) in &pieces {
        let v = 2f64.powf(*j as f64 * spec.s) * base_norm(&piece.abs(), f.grid(), spec.p, &spec.base, &spec.weight)?;
        if spec.q.is_infinite() {
            acc = acc.max(v);
        } else {
            acc += v.powf(spec.q);
        }
    }
    Ok(if spec.q.is_infinite() { acc } else { acc.powf(1.0 / spec.q) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardyMethod {
    /// Square function, i.e. the `F^0_{p,2}` quasi-norm.
    Square,
    /// Grand sup over dyadic dilates of the smooth cutoff.
    Maximal,
}

/// `H^p` / `h^p` quasi-norm over the base space of `spec`. Local when `spec.homogeneous` is false.
pub fn hardy_norm(f: &Field, spec: &SpaceSpec, fam: &LpFamily, method: HardyMethod) -> Result<f64> {
    let local = !spec.homogeneous || spec.family == Family::LocalHardy;
    match method {
        HardyMethod::Square => {
            let sq = SpaceSpec { family: Family::TriebelLizorkin, q: 2.0, s: 0.0, homogeneous: !local, ..spec.clone() };
            tl_norm(f, &sq, fam)
        }
        HardyMethod::Maximal => {
            spec.validate()?;
            let fam = fam.on_grid(f.grid());
            let mut acc = vec![0.0f64; f.grid().len()];
            for j in 0..=fam.j_max() {
                let sj = fam.s_j(f, j)?;
                for (a, v) in acc.iter_mut().zip(sj.abs()) {
                    *a = a.max(v);
                }
            }
            if !local {
                // dilates with t > 1 see only the mean
                let mean = f.spectral()[0].norm();
                acc.iter_mut().for_each(|a| *a = a.max(mean));
            }
            base_norm(&acc, f.grid(), spec.p, &spec.base, &spec.weight)
        }
    }
}

/// `||D^s f||_{H^p(w)}` (or `||J^s f||_{h^p(w)}` when inhomogeneous).
pub fn sobolev_norm(f: &Field, spec: &SpaceSpec, fam: &LpFamily) -> Result<f64> {
    let lifted = if spec.homogeneous { d_s(f, spec.s)? } else { j_s(f, spec.s) };
    let h = SpaceSpec { family: if spec.homogeneous { Family::Hardy } else { Family::LocalHardy }, s: 0.0, ..spec.clone() };
    hardy_norm(&lifted, &h, fam, HardyMethod::Square)
}

/// Dispatch on the family of `spec`.
pub fn norm(f: &Field, spec: &SpaceSpec, fam: &LpFamily) -> Result<f64> {
    match spec.family {
        Family::TriebelLizorkin => tl_norm(f, spec, fam),
        Family::Besov => besov_norm(f, spec, fam),
        Family::Hardy | Family::LocalHardy => hardy_norm(f, spec, fam, HardyMethod::Square),
        Family::Sobolev => sobolev_norm(f, spec, fam),
        Family::Lebesgue | Family::Lorentz | Family::Morrey | Family::VariableLebesgue => {
            spec.validate()?;
            base_norm(&f.abs(), f.grid(), spec.p, &spec.base, &spec.weight)
        }
    }
}

/// [`norm`] with homogeneous Littlewood-Paley spaces taken modulo constants.
pub fn norm_mod_constants(f: &Field, spec: &SpaceSpec, fam: &LpFamily) -> Result<f64> {
    let lp_based = !matches!(spec.family, Family::Lebesgue | Family::Lorentz | Family::Morrey | Family::VariableLebesgue);
    if spec.homogeneous && lp_based && !f.is_mean_zero() {
        let g = f.map_spectrum(|i, c| if i == 0 { c * 0.0 } else { c });
        norm(&g, spec, fam)
    } else {
        norm(f, spec, fam)
    }
}

/// `||f||_{X^s} / ||L^s f||_{X^0}` with `L = D` (homogeneous) or `J` (inhomogeneous).
pub fn lifting_check(f: &Field, spec: &SpaceSpec, fam: &LpFamily) -> Result<f64> {
    let lifted = if spec.homogeneous { d_s(f, spec.s)? } else { j_s(f, spec.s) };
    let flat = SpaceSpec { s: 0.0, ..spec.clone() };
    let top = norm(f, spec, fam)?;
    let bottom = norm(&lifted, &flat, fam)?;
    if bottom == 0.0 {
        return Err(Error::NumericDomain("lifting ratio undefined for the zero field".into()));
    }
    Ok(top / bottom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::random_band_limited;
    use crate::littlewood_paley::{make_lp_family, TransitionProfile};
    use num_complex::Complex64 as C64;

    fn fam(n: usize) -> LpFamily {
        make_lp_family(TransitionProfile::default(), Grid::new(1, n).unwrap()).unwrap()
    }

    #[test]
    fn thresholds() {
        assert_eq!(tau_pq(1, 2.0, 2.0, 1.0), 0.0);
        assert_eq!(tau_pq(2, 0.5, 2.0, 1.0), 2.0);
        assert_eq!(tau_p(1, 2.0, 1.5), 0.0);
        assert!((tau_p(1, 1.0, 1.5) - 0.5).abs() < 1e-15);
        assert_eq!(tau_ptq(1, 2.0, 0.5, 2.0, 1.0), 1.0);
        assert_eq!(tau_w_of(&WeightSpec::Power { a: 0.5 }, 1).hi, 1.5);
        assert_eq!(tau_w_of(&WeightSpec::Power { a: -0.5 }, 1).hi, 1.0);
    }

    #[test]
    fn single_mode_tl_equals_l2() {
        let fm = fam(64);
        let f = Field::mode(fm.grid, &[1]).unwrap();
        let v = tl_norm(&f, &SpaceSpec::tl(2.0, 2.0, 0.0, true), &fm).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dyadic_mode_scales_exactly() {
        let fm = fam(128);
        let f = Field::mode(fm.grid, &[8]).unwrap();
        let a = tl_norm(&f, &SpaceSpec::tl(2.0, 2.0, 1.3, true), &fm).unwrap();
        let b = tl_norm(&f, &SpaceSpec::tl(2.0, 2.0, 0.0, true), &fm).unwrap();
        assert!((a - 8f64.powf(1.3) * b).abs() < 1e-12 * a);
        let bb = besov_norm(&f, &SpaceSpec::besov(3.0, 0.7, 1.3, true), &fm).unwrap();
        let tt = tl_norm(&f, &SpaceSpec::tl(3.0, 0.7, 1.3, true), &fm).unwrap();
        assert!((bb - tt).abs() < 1e-12 * tt);
    }

    #[test]
    fn inhomogeneous_constant() {
        let fm = fam(64);
        let c = Field::constant(fm.grid, C64::new(2.0, 0.0));
        let v = tl_norm(&c, &SpaceSpec::tl(3.0, 2.0, 1.0, false), &fm).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        assert!(tl_norm(&c, &SpaceSpec::tl(3.0, 2.0, 1.0, true), &fm).is_err());
    }

    #[test]
    fn tl_rejects_p_infinity() {
        let fm = fam(64);
        let f = Field::mode(fm.grid, &[1]).unwrap();
        assert!(matches!(tl_norm(&f, &SpaceSpec::tl(f64::INFINITY, 2.0, 0.0, true), &fm), Err(Error::Unsupported(_))));
        assert!(besov_norm(&f, &SpaceSpec::besov(f64::INFINITY, 2.0, 0.0, true), &fm).is_ok());
    }

    #[test]
    fn besov_sup_and_sum() {
        let fm = fam(128);
        let g = fm.grid;
        let f = Field::mode(g, &[2]).unwrap().add(&Field::mode(g, &[16]).unwrap().scale(C64::new(0.5, 0.0))).unwrap();
        let sup = besov_norm(&f, &SpaceSpec::besov(2.0, f64::INFINITY, 1.0, true), &fm).unwrap();
        assert!((sup - 8.0).abs() < 1e-12);
        let sum = besov_norm(&f, &SpaceSpec::besov(2.0, 1.0, 1.0, true), &fm).unwrap();
        assert!((sum - 10.0).abs() < 1e-12);
    }

    #[test]
    fn hardy_local_matches_global_on_mean_zero() {
        let fm = fam(128);
        let f = random_band_limited(fm.grid, 1.0, 32.0, 3, true).unwrap();
        let a = hardy_norm(&f, &SpaceSpec::hardy(1.5, false), &fm, HardyMethod::Maximal).unwrap();
        let b = hardy_norm(&f, &SpaceSpec::hardy(1.5, true), &fm, HardyMethod::Maximal).unwrap();
        assert!((a - b).abs() < 1e-6 * a);
    }

    #[test]
    fn lifting_single_mode_is_one() {
        let fm = fam(64);
        let f = Field::mode(fm.grid, &[4]).unwrap();
        let r = lifting_check(&f, &SpaceSpec::tl(2.0, 2.0, 1.0, true), &fm).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(lifting_check(&Field::zeros(fm.grid), &SpaceSpec::tl(2.0, 2.0, 1.0, true), &fm).is_err());
    }

    #[test]
    fn sobolev_scaling() {
        let fm = fam(64);
        let f = Field::mode(fm.grid, &[2]).unwrap();
        let a = sobolev_norm(&f, &SpaceSpec::sobolev(2.0, 1.5, true), &fm).unwrap();
        let b = sobolev_norm(&f, &SpaceSpec::sobolev(2.0, 0.0, true), &fm).unwrap();
        assert!((a - 2f64.powf(1.5) * b).abs() < 1e-12);
    }

    #[test]
    fn lorentz_base_with_t_equal_p() {
        let fm = fam(128);
        let f = random_band_limited(fm.grid, 1.0, 30.0, 8, true).unwrap();
        let w = WeightSpec::Power { a: 0.5 };
        let plain = SpaceSpec::tl(2.5, 2.0, 0.7, true).with_weight(w.clone());
        let lor = plain.clone().with_base(Base::Lorentz { t: 2.5 });
        let a = tl_norm(&f, &plain, &fm).unwrap();
        let b = tl_norm(&f, &lor, &fm).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn morrey_validation() {
        let s = SpaceSpec::tl(3.0, 2.0, 0.0, true).with_base(Base::Morrey { t: 2.0 });
        assert!(s.validate().is_err());
    }
}
