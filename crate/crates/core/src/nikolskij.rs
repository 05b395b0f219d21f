//! Nikol'skij representation: assemblies of band-limited pieces and the convolution and
//! series lemmas behind the bound.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::grid_field::{Field, Grid};
use crate::littlewood_paley::LpFamily;
use crate::spaces::{base_norm, norm, tau_p, tau_pq, tau_w_of, Family, SpaceSpec};
use crate::weights::{lp_norm, maximal, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceProfile {
    /// Gaussian coefficients on the whole ball `|k| <= D 2^j`.
    Random,
    /// Gaussian coefficients on the outer shell `D 2^{j-1} <= |k| <= D 2^j`.
    Concentrated,
}

/// Pieces `u_j` with `supp(hat u_j)` inside `|k| <= D 2^j`.
#[derive(Clone, Debug)]
pub struct BandLimitedSequence {
    pub d: f64,
    pub seed: u64,
    pub pieces: Vec<(usize, Field)>,
}

impl BandLimitedSequence {
    pub fn grid(&self) -> Option<Grid> {
        self.pieces.first().map(|(_, f)| f.grid())
    }

    pub fn sum(&self) -> Result<Field> {
        let grid = self.grid().ok_or_else(|| Error::Structural("empty sequence".into()))?;
        self.pieces.iter().try_fold(Field::zeros(grid), |acc, (_, u)| acc.add(u))
    }

    pub fn scale(&self, c: f64) -> Self {
        let pieces = self.pieces.iter().map(|(j, u)| (*j, u.scale(C64::new(c, 0.0)))).collect();
        Self { pieces, ..self.clone() }
    }
}

/// Mean-zero pieces for `j` in `j_range`, each with unit `L^2` norm.
pub fn generate_sequence(
    grid: Grid,
    d: f64,
    j_range: std::ops::RangeInclusive<usize>,
    seed: u64,
    profile: SequenceProfile,
) -> Result<BandLimitedSequence> {
    if !(d > 0.0) {
        return precondition(format!("D must be positive, got {d}"));
    }
    let top = d * 2f64.powi(*j_range.end() as i32);
    if top > (grid.n() / 2 - 1) as f64 {
        return precondition(format!("D 2^j = {top} exceeds the band limit {}", grid.n() / 2 - 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pieces = Vec::new();
    for j in j_range {
        let hi = d * 2f64.powi(j as i32);
        let lo = match profile {
            SequenceProfile::Random => 0.0,
            SequenceProfile::Concentrated => 0.5 * hi,
        };
        let mut spec = vec![C64::new(0.0, 0.0); grid.len()];
        for (i, c) in spec.iter_mut().enumerate() {
            let r = grid.freq_norm(i);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if r > 0.0 && r >= lo && r <= hi {
                *c = C64::new(re, im);
            }
        }
        let f = Field::from_spectral(grid, spec)?;
        let l2 = f.l2_norm();
        let f = if l2 > 0.0 { f.scale(C64::new(1.0 / l2, 0.0)) } else { f };
        pieces.push((j, f));
    }
    Ok(BandLimitedSequence { d, seed, pieces })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NikolskijBound {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `s` at or below the threshold of the theorem.
    pub below_threshold: bool,
}

/// `||sum_j u_j||_X` against the mixed norm of `{2^{js} u_j}`; `X` is TL or Besov.
pub fn assemble_and_bound(seq: &BandLimitedSequence, spec: &SpaceSpec, fam: &LpFamily) -> Result<NikolskijBound> {
    let grid = seq.grid().ok_or_else(|| Error::Structural("empty sequence".into()))?;
    let n = grid.dim();
    let tau = tau_w_of(&spec.weight, n).upper();
    let threshold = match spec.family {
        Family::TriebelLizorkin => tau_pq(n, spec.p, spec.q, tau),
        Family::Besov => tau_p(n, spec.p, tau),
        other => return Err(Error::Unsupported(format!("Nikol'skij bound for {other:?}"))),
    };
    let lhs = norm(&seq.sum()?, spec, fam)?;
    let rhs = match spec.family {
        Family::TriebelLizorkin => {
            let mut acc = vec![0.0f64; grid.len()];
            for (j, u) in &seq.pieces {
                let c = 2f64.powf(*j as f64 * spec.s);
                for (a, v) in acc.iter_mut().zip(u.abs()) {
                    if spec.q.is_infinite() {
                        *a = a.max(c * v);
                    } else {
                        *a += (c * v).powf(spec.q);
                    }
                }
            }
            if spec.q.is_finite() {
                acc.iter_mut().for_each(|a| *a = a.powf(1.0 / spec.q));
            }
            base_norm(&acc, grid, spec.p, &spec.base, &spec.weight)?
        }
        _ => {
            let mut acc: f64 = 0.0;
            for (j, u) in &seq.pieces {
                let v = 2f64.powf(*j as f64 * spec.s) * base_norm(&u.abs(), grid, spec.p, &spec.base, &spec.weight)?;
                acc = if spec.q.is_infinite() { acc.max(v) } else { acc + v.powf(spec.q) };
            }
            if spec.q.is_infinite() {
                acc
            } else {
                acc.powf(1.0 / spec.q)
            }
        }
    };
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(NikolskijBound { lhs, rhs, ratio, below_threshold: spec.s <= threshold })
}

/// Periodic convolution `phi * f`, i.e. the product of spectra.
pub fn convolve(phi: &Field, f: &Field) -> Result<Field> {
    if phi.grid() != f.grid() {
        return Err(Error::Structural("kernel and field live on different grids".into()));
    }
    let spec = phi.spectral().iter().zip(f.spectral()).map(|(a, b)| a * b).collect();
    Field::from_spectral(f.grid(), spec)
}

/// Kernel `2^{jn} phi(2^j x)` on the torus, given by its cutoff `h(2^{-j}|k|)`.
pub fn dyadic_kernel(grid: Grid, j: i32, h: impl Fn(f64) -> f64) -> Result<Field> {
    let scale = 2f64.powi(-j);
    let spec = (0..grid.len()).map(|i| C64::new(h(grid.freq_norm(i) * scale), 0.0)).collect();
    Field::from_spectral(grid, spec)
}

fn weighted_sup(phi: &Field, weight: impl Fn(f64) -> f64) -> f64 {
    let g = phi.grid();
    phi.spatial().iter().enumerate().map(|(i, v)| weight(g.torus_abs(i)) * v.norm()).fold(0.0, f64::max)
}

fn check_support(f: &Field, limit: f64) -> Result<()> {
    let top = f.max_freq();
    if top > limit {
        return precondition(format!("field has frequencies up to {top}, beyond A R = {limit}"));
    }
    Ok(())
}

/// `sup_x |phi * f(x)| / (R^{n(1/r-1)} A^{-n} ||(1+|A.|)^d phi||_inf M_r f(x))`.
pub fn peetre_convolution_bound(phi: &Field, f: &Field, a: f64, r_big: f64, r: f64, d: f64) -> Result<f64> {
    let n = f.grid().dim() as f64;
    if !(r > 0.0 && r <= 1.0) || !(a > 0.0) || !(r_big >= 1.0) || !(d > n / r) {
        return precondition(format!("need 0<r<=1, A>0, R>=1, d>n/r; got r={r}, A={a}, R={r_big}, d={d}"));
    }
    check_support(f, a * r_big)?;
    let conv = convolve(phi, f)?;
    let k = weighted_sup(phi, |x| (1.0 + a * x).powf(d));
    let pre = r_big.powf(n * (1.0 / r - 1.0)) * a.powf(-n) * k;
    let m = maximal(f, r);
    let mut best: f64 = 0.0;
    for (c, mv) in conv.spatial().iter().zip(&m) {
        let lhs = c.norm();
        if lhs == 0.0 {
            continue;
        }
        best = best.max(lhs / (pre * mv));
    }
    Ok(best)
}

/// `||phi * f||_{L^p(w)} / (R^{b-n} A^{-n} ||(1+|A.|^d) phi||_inf ||f||_{L^p(w)})`.
#[allow(clippy::too_many_arguments)]
pub fn convolution_norm_bound(
    phi: &Field,
    f: &Field,
    a: f64,
    r_big: f64,
    b: f64,
    d: f64,
    p: f64,
    w: &Weight,
    tau_w: f64,
) -> Result<f64> {
    let n = f.grid().dim() as f64;
    let floor = n / (p / tau_w).min(1.0);
    if !(d > b && b > floor) {
        return precondition(format!("need d > b > n/min(1, p/tau_w) = {floor}; got d={d}, b={b}"));
    }
    if !(a > 0.0) || !(r_big >= 1.0) {
        return precondition(format!("need A > 0 and R >= 1; got A={a}, R={r_big}"));
    }
    check_support(f, a * r_big)?;
    let rhs_f = lp_norm(f, p, w)?;
    if rhs_f == 0.0 {
        return Ok(0.0);
    }
    let conv = convolve(phi, f)?;
    let k = weighted_sup(phi, |x| 1.0 + (a * x).powf(d));
    Ok(lp_norm(&conv, p, w)? / (r_big.powf(b - n) * a.powf(-n) * k * rhs_f))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesBound {
    pub lhs: f64,
    pub rhs: f64,
    /// `(sum_{k >= k0} 2^{tau q k})^{1/q}` for `q <= 1`, `sum_{k >= k0} 2^{tau k}` otherwise.
    pub analytic_constant: f64,
}

impl SeriesBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.analytic_constant * self.rhs * (1.0 + 1e-12)
    }
}

/// Both sides of the dyadic series inequality for `d` supported on indices `0..d.len()`.
/// Indices `j <= -k0` see every entry through the geometric factor and are summed in closed form.
pub fn dyadic_series_bound(d: &[f64], tau: f64, lambda: f64, q: f64, k0: i64) -> Result<SeriesBound> {
    if !(tau < 0.0) {
        return precondition(format!("tau must be negative, got {tau}"));
    }
    if !(q > 0.0) {
        return precondition(format!("q must be positive, got {q}"));
    }
    if d.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return precondition("sequence entries must be finite and non-negative");
    }
    let len = d.len() as i64;
    let geo = |x: f64| 2f64.powf(x);
    let analytic_constant = if q <= 1.0 {
        (geo(tau * q * k0 as f64) / (1.0 - geo(tau * q))).powf(1.0 / q)
    } else {
        geo(tau * k0 as f64) / (1.0 - geo(tau))
    };
    let rhs_terms: Vec<f64> = (0..len).map(|i| geo(lambda * i as f64) * d[i as usize]).collect();
    let agg = |terms: &mut dyn Iterator<Item = f64>| -> f64 {
        if q.is_infinite() {
            terms.fold(0.0, f64::max)
        } else {
            terms.map(|t| t.powf(q)).sum::<f64>()
        }
    };
    let finish = |s: f64| if q.is_infinite() { s } else { s.powf(1.0 / q) };
    let rhs = finish(agg(&mut rhs_terms.iter().copied()));

    let inner = |j: i64| -> f64 {
        (0..len)
            .filter(|&i| i - j >= k0)
            .map(|i| geo(tau * (i - j) as f64) * rhs_terms[i as usize])
            .sum()
    };
    // j in (-k0, len - 1 - k0] directly
    let direct: Vec<f64> = ((-k0 + 1)..=(len - 1 - k0)).map(inner).collect();
    let s_all: f64 = (0..len).map(|i| geo(tau * i as f64) * rhs_terms[i as usize]).sum();
    let lhs = if q.is_infinite() {
        let tail = s_all * geo(tau * k0 as f64);
        finish(agg(&mut direct.into_iter()).max(tail))
    } else {
        let tail = s_all.powf(q) * geo(tau * q * k0 as f64) / (1.0 - geo(tau * q));
        finish(agg(&mut direct.into_iter()) + tail)
    };
    Ok(SeriesBound { lhs, rhs, analytic_constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::random_band_limited;
    use crate::littlewood_paley::{make_lp_family, TransitionProfile};
    use crate::weights::WeightSpec;

    fn fam(n: usize) -> LpFamily {
        make_lp_family(TransitionProfile::default(), Grid::new(1, n).unwrap()).unwrap()
    }

    #[test]
    fn sequence_supports() {
        let g = Grid::new(1, 128).unwrap();
        let s = generate_sequence(g, 1.0, 0..=4, 3, SequenceProfile::Random).unwrap();
        for (j, u) in &s.pieces {
            for (i, c) in u.spectral().iter().enumerate() {
                if c.norm() > 0.0 {
                    assert!(g.freq_norm(i) <= 2f64.powi(*j as i32));
                }
            }
        }
        let u0 = &s.pieces[0].1;
        assert!(u0.coefficient(&[1]).unwrap().norm() > 0.0 && u0.coefficient(&[2]).unwrap().norm() == 0.0);
        let c = generate_sequence(g, 1.5, 1..=5, 3, SequenceProfile::Concentrated).unwrap();
        for (j, u) in &c.pieces {
            let hi = 1.5 * 2f64.powi(*j as i32);
            for (i, v) in u.spectral().iter().enumerate() {
                if v.norm() > 0.0 {
                    let r = g.freq_norm(i);
                    assert!(r >= 0.5 * hi && r <= hi);
                }
            }
        }
        let again = generate_sequence(g, 1.0, 0..=4, 3, SequenceProfile::Random).unwrap();
        assert_eq!(again.pieces[3].1.spectral(), s.pieces[3].1.spectral());
        assert!(generate_sequence(g, 1.0, 0..=6, 3, SequenceProfile::Random).is_err());
    }

    #[test]
    fn single_piece_closed_form() {
        let fm = fam(128);
        let g = fm.grid;
        let u = Field::mode(g, &[8]).unwrap();
        let seq = BandLimitedSequence { d: 1.0, seed: 0, pieces: vec![(3, u.clone())] };
        let spec = SpaceSpec::tl(2.0, 2.0, 1.0, true);
        let b = assemble_and_bound(&seq, &spec, &fm).unwrap();
        let want = norm(&u, &spec, &fm).unwrap() / (8.0 * u.l2_norm());
        assert!((b.ratio - want).abs() < 1e-12);
        assert!(!b.below_threshold);
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let fm = fam(128);
        let seq = generate_sequence(fm.grid, 1.0, 0..=5, 9, SequenceProfile::Random).unwrap();
        let spec = SpaceSpec::besov(2.0, 1.0, 1.0, true).with_weight(WeightSpec::Power { a: 0.5 });
        let a = assemble_and_bound(&seq, &spec, &fm).unwrap();
        let b = assemble_and_bound(&seq.scale(3.0), &spec, &fm).unwrap();
        assert!((a.ratio - b.ratio).abs() < 1e-12 * a.ratio);
    }

    #[test]
    fn series_single_entry_is_two() {
        let b = dyadic_series_bound(&[1.0], -1.0, 0.7, 1.0, 0).unwrap();
        assert!((b.lhs / b.rhs - 2.0).abs() < 1e-12);
        assert!((b.analytic_constant - 2.0).abs() < 1e-12);
        let z = dyadic_series_bound(&[0.0; 5], -1.0, 0.0, 0.5, 0).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        assert!(z.holds());
        assert!(dyadic_series_bound(&[1.0], 0.0, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn series_matches_brute_force() {
        let d = [0.3, 0.0, 1.2, 0.7];
        let (tau, lam, q, k0) = (-0.8, 0.4, 0.5, -1i64);
        let b = dyadic_series_bound(&d, tau, lam, q, k0).unwrap();
        let mut s = 0.0;
        for j in -400i64..10 {
            let mut inner = 0.0;
            for k in k0..600 {
                let i = j + k;
                if (0..4).contains(&i) {
                    inner += 2f64.powf(tau * k as f64) * 2f64.powf(lam * i as f64) * d[i as usize];
                }
            }
            s += f64::powf(inner, q);
        }
        assert!((b.lhs - s.powf(1.0 / q)).abs() < 1e-10 * b.lhs);
        assert!(b.holds());
    }

    #[test]
    fn convolution_lemmas() {
        let g = Grid::new(1, 256).unwrap();
        let fm = fam(256);
        let zero = Field::zeros(g);
        let phi = dyadic_kernel(g, 3, |r| fm.phi_hat(r)).unwrap();
        assert_eq!(peetre_convolution_bound(&phi, &zero, 8.0, 2.0, 1.0, 2.0).unwrap(), 0.0);
        let f = random_band_limited(g, 1.0, 16.0, 4, true).unwrap();
        let c = peetre_convolution_bound(&phi, &f, 8.0, 2.0, 0.5, 3.0).unwrap();
        assert!(c.is_finite() && c > 0.0);
        let c2 = peetre_convolution_bound(&phi.scale(C64::new(2.0, 0.0)), &f.scale(C64::new(-3.0, 0.0)), 8.0, 2.0, 0.5, 3.0).unwrap();
        assert!((c - c2).abs() < 1e-12 * c);
        assert!(peetre_convolution_bound(&phi, &f, 4.0, 2.0, 0.5, 3.0).is_err());
        let w = Weight::unit(g);
        assert_eq!(convolution_norm_bound(&phi, &zero, 8.0, 2.0, 1.5, 3.0, 2.0, &w, 1.0).unwrap(), 0.0);
        let v = convolution_norm_bound(&phi, &f, 8.0, 2.0, 1.5, 3.0, 2.0, &w, 1.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(convolution_norm_bound(&phi, &f, 8.0, 2.0, 0.9, 3.0, 2.0, &w, 1.0).is_err());
    }
}
