//! Smooth dyadic cutoffs and Littlewood-Paley blocks.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::grid_field::{Field, Grid};
use crate::weights;

/// Monotone transition `chi` with `chi = 1` on `[0, 1]` and `chi = 0` on `[2, inf)`.
///
/// On `(1, 2)` it is the mollifier smoothstep `h(1-u) / (h(u) + h(1-u))`, `u = t - 1`,
/// with `h(s) = exp(-kappa / s)`. Larger `kappa` steepens the middle of the ramp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionProfile {
    pub kappa: f64,
}

impl Default for TransitionProfile {
    fn default() -> Self {
        Self { kappa: 0.5 }
    }
}

fn bump_tail(kappa: f64, s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-kappa / s).exp()
    }
}

/// Mollifier smoothstep from 1 at `u <= 0` down to 0 at `u >= 1`.
pub fn smoothstep(kappa: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    if u >= 1.0 {
        return 0.0;
    }
    let a = bump_tail(kappa, 1.0 - u);
    let b = bump_tail(kappa, u);
    a / (a + b)
}

impl TransitionProfile {
    pub fn chi(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= 2.0 {
            0.0
        } else {
            smoothstep(self.kappa, t - 1.0)
        }
    }

    /// Checks monotonicity and the annulus margins `chi(6/5) <= 0.95`, `chi(5/3) >= 0.05`.
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return precondition(format!("profile smoothness must be positive, got {}", self.kappa));
        }
        let mut prev = 1.0;
        for i in 0..=4000 {
            let t = 1.0 + i as f64 / 4000.0;
            let v = self.chi(t);
            if v > prev {
                return precondition(format!("profile increases near |xi| = {t}"));
            }
            prev = v;
        }
        let hi = self.chi(1.2);
        if hi > 0.95 {
            return precondition(format!(
                "annulus lower bound fails at |xi| = 3/5: chi(6/5) = {hi} > 0.95"
            ));
        }
        let lo = self.chi(5.0 / 3.0);
        if lo < 0.05 {
            return precondition(format!(
                "annulus lower bound fails at |xi| = 5/3: chi(5/3) = {lo} < 0.05"
            ));
        }
        Ok(())
    }
}

/// Which generator a translated block uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    Psi,
    Phi,
}

/// The cutoff family `psi, phi, Psi, Phi` on a grid, plus the fattened companion cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpFamily {
    pub profile: TransitionProfile,
    pub grid: Grid,
    /// Relative widening of the companion cutoff beyond `[1/2, 2]`.
    pub margin: f64,
}

pub fn make_lp_family(profile: TransitionProfile, grid: Grid) -> Result<LpFamily> {
    LpFamily::with_margin(profile, grid, 0.1)
}

impl LpFamily {
    pub fn with_margin(profile: TransitionProfile, grid: Grid, margin: f64) -> Result<Self> {
        profile.validate()?;
        if !(margin > 0.0 && margin < 0.5) {
            return precondition(format!("margin must lie in (0, 1/2), got {margin}"));
        }
        let fam = Self { profile, grid, margin };
        let worst = fam.partition_error();
        if worst > 1e-12 {
            return Err(Error::NumericDomain(format!("partition of unity off by {worst}")));
        }
        Ok(fam)
    }

    pub fn j_max(&self) -> usize {
        self.grid.j_max()
    }

    /// Same cutoffs on another grid; the partition check is grid independent.
    pub fn on_grid(&self, grid: Grid) -> LpFamily {
        LpFamily { grid, ..*self }
    }

    /// `psi(r) = chi(r) - chi(2r)`, supported in `1/2 < r < 2`.
    pub fn psi_hat(&self, r: f64) -> f64 {
        self.profile.chi(r) - self.profile.chi(2.0 * r)
    }

    /// `phi(r) = chi(r)`.
    pub fn phi_hat(&self, r: f64) -> f64 {
        self.profile.chi(r)
    }

    /// Generator with unit dyadic sum; identical to `psi` for this construction.
    pub fn big_psi_hat(&self, r: f64) -> f64 {
        self.psi_hat(r)
    }

    /// `Phi = sum_{j <= 0} Psi(2^{-j} .)` off the origin and `Phi(0) = 1`; equals `chi`.
    pub fn big_phi_hat(&self, r: f64) -> f64 {
        self.profile.chi(r)
    }

    /// Companion cutoff equal to 1 on `[1/2, 2]`, vanishing outside the widened annulus.
    pub fn fattened_hat(&self, r: f64) -> f64 {
        let lo = 0.5 * (1.0 - self.margin);
        let hi = 2.0 * (1.0 + self.margin);
        if r <= lo || r >= hi {
            0.0
        } else if r < 0.5 {
            1.0 - self.profile.chi(1.0 + (r - lo) / (0.5 - lo))
        } else if r > 2.0 {
            self.profile.chi(1.0 + (r - 2.0) / (hi - 2.0))
        } else {
            1.0
        }
    }

    pub fn cutoff(&self, kind: BlockKind, r: f64) -> f64 {
        match kind {
            BlockKind::Psi => self.big_psi_hat(r),
            BlockKind::Phi => self.big_phi_hat(r),
        }
    }

    /// Largest deviation of `sum_j psi(2^{-j} k)` from 1 over nonzero in-band frequencies.
    pub fn partition_error(&self) -> f64 {
        let jm = self.j_max();
        let band = (1usize << jm) as f64;
        let mut worst: f64 = 0.0;
        for i in 1..self.grid.len() {
            let r = self.grid.freq_norm(i);
            if r > band {
                continue;
            }
            let s: f64 = (0..=jm).map(|j| self.psi_hat(r / (1u64 << j) as f64)).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }

    /// Minimum of `|psi(2^{-j} k)|` over grid frequencies with `3/5 < 2^{-j}|k| < 5/3`.
    pub fn annulus_lower_bound(&self) -> f64 {
        let mut lo = f64::INFINITY;
        for j in 0..=self.j_max() {
            let scale = (1u64 << j) as f64;
            for i in 1..self.grid.len() {
                let r = self.grid.freq_norm(i) / scale;
                if r > 0.6 && r < 5.0 / 3.0 {
                    lo = lo.min(self.psi_hat(r).abs());
                }
            }
        }
        lo
    }

    fn check_j(&self, j: usize) -> Result<()> {
        if j > self.j_max() {
            return precondition(format!("scale j = {j} outside 0..={}", self.j_max()));
        }
        Ok(())
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if f.grid().dim() != self.grid.dim() {
            return Err(Error::Structural("field and family dimensions differ".into()));
        }
        Ok(())
    }

    /// Multiply by `h(2^{-j}|k|)` for an arbitrary radial cutoff `h`.
    pub fn apply_radial(&self, f: &Field, j: i32, h: impl Fn(f64) -> f64) -> Field {
        let g = f.grid();
        let scale = 2f64.powi(-j);
        f.map_spectrum(|i, c| {
            if c.norm_sqr() == 0.0 {
                return c;
            }
            let v = h(g.freq_norm(i) * scale);
            if v == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                c * v
            }
        })
    }

    /// `Delta_j f`, spectrum `psi(2^{-j}k) fhat(k)`.
    pub fn delta_j(&self, f: &Field, j: usize) -> Result<Field> {
        self.check_j(j)?;
        self.check_grid(f)?;
        Ok(self.apply_radial(f, j as i32, |r| self.psi_hat(r)))
    }

    /// `S_j f`, spectrum `phi(2^{-j}k) fhat(k)`.
    pub fn s_j(&self, f: &Field, j: usize) -> Result<Field> {
        self.check_j(j)?;
        self.check_grid(f)?;
        Ok(self.apply_radial(f, j as i32, |r| self.phi_hat(r)))
    }

    /// Block with the companion cutoff at scale `j`.
    pub fn fattened_j(&self, f: &Field, j: usize) -> Result<Field> {
        self.check_j(j)?;
        self.check_grid(f)?;
        Ok(self.apply_radial(f, j as i32, |r| self.fattened_hat(r)))
    }

    /// Block of `kind` at scale `j` modulated by `e^{2 pi i 2^{-j} k.a / period}`.
    pub fn translated_block(&self, f: &Field, j: usize, a: &[f64], kind: BlockKind, period: f64) -> Result<Field> {
        self.check_j(j)?;
        self.check_grid(f)?;
        let g = f.grid();
        if a.len() != g.dim() {
            return Err(Error::Structural("translation vector has the wrong dimension".into()));
        }
        let scale = 2f64.powi(-(j as i32));
        Ok(f.map_spectrum(|i, c| {
            let h = self.cutoff(kind, g.freq_norm(i) * scale);
            if h == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let k = g.wavevector(i);
            let phase: f64 = (0..g.dim()).map(|d| k[d] as f64 * a[d]).sum::<f64>() * scale / period;
            c * h * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
        }))
    }

    /// Rows `(r, chi(r), psi(r), phi(r))` on `n` equispaced radii in `[0, 3]`.
    pub fn cutoff_table(&self, n: usize) -> Vec<[f64; 4]> {
        (0..n)
            .map(|i| {
                let r = 3.0 * i as f64 / (n.max(2) - 1) as f64;
                [r, self.profile.chi(r), self.psi_hat(r), self.phi_hat(r)]
            })
            .collect()
    }

    pub fn cutoff_csv(&self, n: usize) -> String {
        let mut out = String::from("r,chi,psi_hat,phi_hat\n");
        for row in self.cutoff_table(n) {
            out.push_str(&format!("{},{},{},{}\n", row[0], row[1], row[2], row[3]));
        }
        out
    }
}

/// Outcome of the translated-block versus maximal-function comparison.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PeetreReport {
    pub max_ratio: f64,
    /// Largest ratio for each translation in the input order.
    pub per_translation: Vec<f64>,
    /// Set when the maximal function vanished where the block did not.
    pub grid_artifact: bool,
}

/// `max_{x,a} |P_j^{tau_a Psi} f(x)| / ((1+|a|)^{eps + n/r} M_r(P_j^{phi_2} f)(x))`.
pub fn peetre_check(
    fam: &LpFamily,
    f: &Field,
    j: usize,
    translations: &[Vec<f64>],
    r: f64,
    eps: f64,
) -> Result<PeetreReport> {
    if !(r > 0.0 && r <= 1.0) {
        return precondition(format!("r must lie in (0, 1], got {r}"));
    }
    if eps <= 0.0 {
        return precondition(format!("epsilon must be positive, got {eps}"));
    }
    let n = f.grid().dim() as f64;
    let wide = fam.fattened_j(f, j)?;
    let mr = weights::maximal(&wide, r);
    let mut per = Vec::with_capacity(translations.len());
    let mut artifact = false;
    for a in translations {
        let block = fam.translated_block(f, j, a, BlockKind::Psi, 1.0)?;
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let growth = (1.0 + na).powf(eps + n / r);
        let mut best: f64 = 0.0;
        for (v, m) in block.spatial().iter().zip(mr.iter()) {
            let num = v.norm();
            if num <= 1e-14 {
                continue;
            }
            if *m <= 0.0 {
                artifact = true;
                continue;
            }
            best = best.max(num / (growth * m));
        }
        per.push(best);
    }
    let max_ratio = per.iter().cloned().fold(0.0, f64::max);
    Ok(PeetreReport { max_ratio, per_translation: per, grid_artifact: artifact })
}
