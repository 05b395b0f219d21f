//! Config-driven verification campaigns: random trials, ratio reports, lemma suites.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bilinear::{apply_direct, derivative_budget, BilinearSymbol, Setting};
use crate::error::{Error, Result};
use crate::grid_field::{random_band_limited, Field, Grid};
use crate::littlewood_paley::{make_lp_family, LpFamily, TransitionProfile};
use crate::nikolskij::{
    assemble_and_bound, convolution_norm_bound, dyadic_kernel, dyadic_series_bound, generate_sequence,
    peetre_convolution_bound, SequenceProfile,
};
use crate::scattering::{
    cone_data_with, estimate_ratio, u_infinity, OperatorType, ScatteringEstimate, ScatteringProblem,
};
use crate::spaces::{norm, norm_mod_constants, tau_p, tau_pq, tau_ptq, tau_w_of, Base, Family, SpaceSpec};
use crate::weights::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Leibniz,
    LeibnizCm,
    HardyLeibniz,
    Nikolskij,
    Scattering,
    LemmaSuite,
    NormBench,
}

/// Leibniz-type campaign: `||T(f,g)||_lhs` against
/// `||f||_{rhs1} ||g||_{rough2} + ||f||_{rough1} ||g||_{rhs2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeibnizParams {
    pub lhs: SpaceSpec,
    pub rhs1: SpaceSpec,
    pub rhs2: SpaceSpec,
    /// Defaults to the Hardy space with the exponent, base and weight of `rhs1`.
    #[serde(default)]
    pub rough1: Option<SpaceSpec>,
    #[serde(default)]
    pub rough2: Option<SpaceSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NikolskijParams {
    pub space: SpaceSpec,
    #[serde(default = "default_d")]
    pub d: f64,
    pub j_range: [usize; 2],
    #[serde(default = "default_profile")]
    pub profile: SequenceProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringParams {
    #[serde(rename = "type")]
    pub kind: OperatorType,
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    pub times: Vec<f64>,
    #[serde(default)]
    pub specs: Vec<SpaceSpec>,
    #[serde(default)]
    pub estimate: Option<ScatteringEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    /// Exponents `j` of the sweep `A = 2^j`.
    #[serde(default = "default_a_exponents")]
    pub a_exponents: Vec<i32>,
    /// Levels for the pointwise Peetre inequality.
    #[serde(default = "default_peetre_levels")]
    pub peetre_levels: Vec<usize>,
    #[serde(default = "default_series_trials")]
    pub series_trials: usize,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self { a_exponents: default_a_exponents(), peetre_levels: default_peetre_levels(), series_trials: default_series_trials() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBenchParams {
    pub spaces: Vec<SpaceSpec>,
}

fn default_d() -> f64 {
    1.0
}
fn default_profile() -> SequenceProfile {
    SequenceProfile::Random
}
fn default_a_exponents() -> Vec<i32> {
    vec![1, 2, 3, 4]
}
fn default_peetre_levels() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_series_trials() -> usize {
    1000
}
fn default_dim() -> usize {
    1
}
fn default_grid() -> usize {
    128
}
fn default_trials() -> usize {
    20
}
fn default_symbol() -> String {
    "one".into()
}
fn default_dilations() -> [i32; 2] {
    [0, 0]
}

/// One experiment as read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_symbol")]
    pub symbol: String,
    /// Inclusive range of `k` in `f(2^k .)`, realised relative to the coarsest member.
    #[serde(default = "default_dilations")]
    pub dilations: [i32; 2],
    /// Annulus of the random spectra; defaults to `[1, N / 2^{k_max - k_min + 2}]`.
    #[serde(default)]
    pub band: Option<[f64; 2]>,
    #[serde(default)]
    pub leibniz: Option<LeibnizParams>,
    #[serde(default)]
    pub nikolskij: Option<NikolskijParams>,
    #[serde(default)]
    pub scattering: Option<ScatteringParams>,
    #[serde(default)]
    pub lemmas: Option<LemmaParams>,
    #[serde(default)]
    pub norm_bench: Option<NormBenchParams>,
}

fn hardy_of(spec: &SpaceSpec) -> SpaceSpec {
    let family = if spec.homogeneous { Family::Hardy } else { Family::LocalHardy };
    SpaceSpec { family, q: 2.0, s: 0.0, ..spec.clone() }
}

fn same_weight(a: &WeightSpec, b: &WeightSpec) -> bool {
    match (a, b) {
        (WeightSpec::Constant { c: x }, WeightSpec::Constant { c: y }) => (x - y).abs() <= 1e-12 * x.abs().max(1.0),
        (WeightSpec::Power { a: x }, WeightSpec::Power { a: y }) => (x - y).abs() <= 1e-12,
        _ => false,
    }
}

fn base_t(b: &Base) -> Option<f64> {
    match b {
        Base::Lorentz { t } | Base::Morrey { t } => Some(*t),
        _ => None,
    }
}

fn check_pairing(lhs: &SpaceSpec, a: &SpaceSpec, b: &SpaceSpec) -> Result<()> {
    let (p, p1, p2) = (lhs.effective_p(), a.effective_p(), b.effective_p());
    if (1.0 / p - 1.0 / p1 - 1.0 / p2).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "Hoelder mismatch: 1/p = {:.6} but 1/p1 + 1/p2 = {:.6} (p={p}, p1={p1}, p2={p2})",
            1.0 / p,
            1.0 / p1 + 1.0 / p2
        )));
    }
    if let (Some(t), Some(t1), Some(t2)) = (base_t(&lhs.base), base_t(&a.base), base_t(&b.base)) {
        if (1.0 / t - 1.0 / t1 - 1.0 / t2).abs() > 1e-12 {
            return Err(Error::Config(format!("second-index mismatch: 1/t != 1/t1 + 1/t2 (t={t}, t1={t1}, t2={t2})")));
        }
    }
    let want = WeightSpec::compose(&a.weight, p / p1, &b.weight, p / p2);
    if !same_weight(&want, &lhs.weight) {
        return Err(Error::Config(format!(
            "weight mismatch: w1^(p/p1) w2^(p/p2) = {want:?} but the left-hand side uses {:?}",
            lhs.weight
        )));
    }
    Ok(())
}

impl LeibnizParams {
    pub fn rough1(&self) -> SpaceSpec {
        self.rough1.clone().unwrap_or_else(|| hardy_of(&self.rhs1))
    }

    pub fn rough2(&self) -> SpaceSpec {
        self.rough2.clone().unwrap_or_else(|| hardy_of(&self.rhs2))
    }

    pub fn validate(&self, order: f64) -> Result<()> {
        for s in [&self.lhs, &self.rhs1, &self.rhs2, &self.rough1(), &self.rough2()] {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        for r in [&self.rhs1, &self.rhs2] {
            if (r.s - self.lhs.s - order).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "right-hand smoothness must be s + m = {}, got {}",
                    self.lhs.s + order,
                    r.s
                )));
            }
        }
        check_pairing(&self.lhs, &self.rhs1, &self.rough2())?;
        check_pairing(&self.lhs, &self.rough1(), &self.rhs2)
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.grid).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn symbol(&self) -> Result<BilinearSymbol> {
        BilinearSymbol::parse(&self.symbol).map_err(|e| Error::Config(e.to_string()))
    }

    fn missing(&self, section: &str) -> Error {
        Error::Config(format!("experiment kind {:?} needs a [{section}] table", self.kind))
    }

    /// Structural checks done at load: parameter sections, Hoelder and weight consistency.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.dilations[0] > self.dilations[1] {
            return Err(Error::Config(format!("empty dilation range {:?}", self.dilations)));
        }
        if let Some([lo, hi]) = self.band {
            if !(lo >= 0.0 && lo <= hi) {
                return Err(Error::Config(format!("invalid band [{lo}, {hi}]")));
            }
        }
        match self.kind {
            ExperimentKind::Leibniz | ExperimentKind::LeibnizCm | ExperimentKind::HardyLeibniz => {
                let p = self.leibniz.as_ref().ok_or_else(|| self.missing("leibniz"))?;
                p.validate(self.symbol()?.order())
            }
            ExperimentKind::Nikolskij => {
                let p = self.nikolskij.as_ref().ok_or_else(|| self.missing("nikolskij"))?;
                p.space.validate().map_err(|e| Error::Config(e.to_string()))?;
                if p.j_range[0] > p.j_range[1] {
                    return Err(Error::Config(format!("empty j range {:?}", p.j_range)));
                }
                Ok(())
            }
            ExperimentKind::Scattering => {
                let p = self.scattering.as_ref().ok_or_else(|| self.missing("scattering"))?;
                if p.gammas.iter().any(|g| !(*g > 0.0)) {
                    return Err(Error::Config("gamma values must be positive".into()));
                }
                if p.times.iter().any(|t| !(*t >= 0.0)) || p.times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("times must be non-negative and increasing".into()));
                }
                if let Some(est) = &p.estimate {
                    est.validate()?;
                }
                Ok(())
            }
            ExperimentKind::LemmaSuite => Ok(()),
            ExperimentKind::NormBench => {
                let p = self.norm_bench.as_ref().ok_or_else(|| self.missing("norm_bench"))?;
                for s in &p.spaces {
                    s.validate().map_err(|e| Error::Config(e.to_string()))?;
                }
                Ok(())
            }
        }
    }

    fn band(&self) -> [f64; 2] {
        self.band.unwrap_or_else(|| {
            let span = (self.dilations[1] - self.dilations[0]) as u32 + 2;
            [1.0, ((self.grid >> span) as f64).max(1.0)]
        })
    }
}

/// Independent seed for trial `i`.
pub fn trial_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add((i as u64 + 1).wrapping_mul(0xbf58_476d_1ce4_e5b9))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub dim: usize,
    pub grid: usize,
    pub seed: u64,
    pub trials: usize,
    pub version: String,
}

impl Environment {
    fn of(spec: &ExperimentSpec) -> Self {
        Self { dim: spec.dim, grid: spec.grid, seed: spec.seed, trials: spec.trials, version: env!("CARGO_PKG_VERSION").into() }
    }
}

/// Thresholds of the theorems evaluated at the user's parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub s: f64,
    pub tau_w: f64,
    pub tau_pq: f64,
    pub tau_p: f64,
    pub tau_ptq: Option<f64>,
    pub gamma_tl: u64,
    pub gamma_besov: u64,
    pub below_threshold: bool,
}

fn thresholds(n: usize, lhs: &SpaceSpec, w1: &WeightSpec, w2: &WeightSpec, p1: f64, p2: f64) -> Thresholds {
    let tw = tau_w_of(&lhs.weight, n).upper();
    let (t1, t2) = (tau_w_of(w1, n).upper(), tau_w_of(w2, n).upper());
    let p = lhs.effective_p();
    let tpq = tau_pq(n, p, lhs.q, tw);
    let tp = tau_p(n, p, tw);
    let tptq = base_t(&lhs.base).map(|t| tau_ptq(n, p, t, lhs.q, tw));
    let limit = match lhs.family {
        Family::Besov => tp,
        _ => tptq.unwrap_or(tpq),
    };
    Thresholds {
        s: lhs.s,
        tau_w: tw,
        tau_pq: tpq,
        tau_p: tp,
        tau_ptq: tptq,
        gamma_tl: derivative_budget(n, p1, p2, p, lhs.q, t1, t2, Setting::Tl),
        gamma_besov: derivative_budget(n, p1, p2, p, lhs.q, t1, t2, Setting::Besov),
        below_threshold: lhs.s <= limit,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub dilation: i32,
    pub lhs: f64,
    pub rhs1: f64,
    pub rhs2: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub kind: ExperimentKind,
    pub symbol: String,
    pub environment: Environment,
    pub thresholds: Option<Thresholds>,
    pub records: Vec<TrialRecord>,
    pub skipped: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// `(k, max ratio over trials)` per dilation.
    pub per_dilation_max: Vec<(i32, f64)>,
    /// Wall-clock stamp set by the caller; ignored by [`RatioReport::canonical_json`].
    #[serde(default)]
    pub timestamp: Option<String>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Structural(e.to_string())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Structural(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Structural(e.to_string()))
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl RatioReport {
    fn assemble(spec: &ExperimentSpec, symbol: String, thresholds: Option<Thresholds>, records: Vec<TrialRecord>, skipped: usize) -> Self {
        let mut ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
        let max_ratio = ratios.iter().copied().fold(f64::NAN, f64::max);
        let median_ratio = median(&mut ratios);
        let mut per = Vec::new();
        for k in spec.dilations[0]..=spec.dilations[1] {
            let m = records.iter().filter(|r| r.dilation == k).map(|r| r.ratio).fold(f64::NAN, f64::max);
            if !m.is_nan() {
                per.push((k, m));
            }
        }
        Self {
            kind: spec.kind,
            symbol,
            environment: Environment::of(spec),
            thresholds,
            records,
            skipped,
            max_ratio,
            median_ratio,
            per_dilation_max: per,
            timestamp: None,
        }
    }

    /// All ratios finite and positive.
    pub fn all_finite(&self) -> bool {
        self.records.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0)
    }

    /// Largest over smallest per-dilation maximum.
    pub fn dilation_spread(&self) -> f64 {
        let hi = self.per_dilation_max.iter().map(|x| x.1).fold(f64::NAN, f64::max);
        let lo = self.per_dilation_max.iter().map(|x| x.1).fold(f64::NAN, f64::min);
        hi / lo
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Structural(e.to_string()))
    }

    /// JSON without the timestamp, for byte comparison between runs.
    pub fn canonical_json(&self) -> Result<String> {
        Self { timestamp: None, ..self.clone() }.to_json()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(["trial", "dilation", "lhs", "rhs1", "rhs2", "ratio"]).map_err(csv_err)?;
        for r in &self.records {
            w.serialize(r).map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

fn family_for(grid: Grid) -> Result<LpFamily> {
    make_lp_family(TransitionProfile::default(), grid)
}

fn measure(f: &Field, spec: &SpaceSpec, fam: &LpFamily) -> Result<f64> {
    norm_mod_constants(f, spec, &fam.on_grid(f.grid()))
}

/// Leibniz-type ratios over random trials and the dilation family.
pub fn run_leibniz(spec: &ExperimentSpec) -> Result<RatioReport> {
    spec.validate()?;
    let params = spec.leibniz.as_ref().ok_or_else(|| spec.missing("leibniz"))?;
    let sigma = spec.symbol()?;
    let grid = spec.grid()?;
    let fam = family_for(grid)?;
    let [lo, hi] = spec.band();
    let (rough1, rough2) = (params.rough1(), params.rough2());
    let mean_zero = params.rhs1.homogeneous || params.rhs2.homogeneous || params.lhs.homogeneous;
    let [k0, k1] = spec.dilations;
    let per_trial: Vec<Result<(Vec<TrialRecord>, usize)>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(spec.seed, t);
            let f0 = random_band_limited(grid, lo, hi, seed, mean_zero)?;
            let g0 = random_band_limited(grid, lo, hi, seed ^ 0x5555_5555, mean_zero)?;
            let mut recs = Vec::new();
            let mut skipped = 0;
            for k in k0..=k1 {
                let shift = (k - k0) as u32;
                let (Ok(f), Ok(g)) = (f0.dilate_pow2(shift), g0.dilate_pow2(shift)) else {
                    skipped += 1;
                    continue;
                };
                if f.max_freq().max(g.max_freq()) > 2f64.powi(grid.j_max() as i32) {
                    skipped += 1;
                    continue;
                }
                let prod = apply_direct(&sigma, &f, &g)?;
                let lhs = measure(&prod, &params.lhs, &fam)?;
                let rhs1 = measure(&f, &params.rhs1, &fam)? * measure(&g, &rough2, &fam)?;
                let rhs2 = measure(&f, &rough1, &fam)? * measure(&g, &params.rhs2, &fam)?;
                let den = rhs1 + rhs2;
                let ratio = if den > 0.0 { lhs / den } else { f64::INFINITY };
                recs.push(TrialRecord { trial: t, dilation: k, lhs, rhs1, rhs2, ratio });
            }
            Ok((recs, skipped))
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = 0;
    for r in per_trial {
        let (recs, s) = r?;
        records.extend(recs);
        skipped += s;
    }
    let th = thresholds(grid.dim(), &params.lhs, &params.rhs1.weight, &params.rhs2.weight, params.rhs1.effective_p(), params.rhs2.effective_p());
    Ok(RatioReport::assemble(spec, sigma.name().to_string(), Some(th), records, skipped))
}

/// Nikol'skij assembly ratios over random sequences.
pub fn run_nikolskij(spec: &ExperimentSpec) -> Result<RatioReport> {
    spec.validate()?;
    let params = spec.nikolskij.as_ref().ok_or_else(|| spec.missing("nikolskij"))?;
    let grid = spec.grid()?;
    let fam = family_for(grid)?;
    let records: Vec<Result<TrialRecord>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let seq = generate_sequence(grid, params.d, params.j_range[0]..=params.j_range[1], trial_seed(spec.seed, t), params.profile)?;
            let b = assemble_and_bound(&seq, &params.space, &fam)?;
            Ok(TrialRecord { trial: t, dilation: 0, lhs: b.lhs, rhs1: b.rhs, rhs2: 0.0, ratio: b.ratio })
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let sp = &params.space;
    let th = thresholds(grid.dim(), sp, &sp.weight, &sp.weight, 2.0 * sp.effective_p(), 2.0 * sp.effective_p());
    let spec0 = ExperimentSpec { dilations: [0, 0], ..spec.clone() };
    Ok(RatioReport::assemble(&spec0, format!("nikolskij(D={})", params.d), Some(th), records, 0))
}

/// Norms of random fields in each listed space.
pub fn run_norm_bench(spec: &ExperimentSpec) -> Result<RatioReport> {
    spec.validate()?;
    let params = spec.norm_bench.as_ref().ok_or_else(|| spec.missing("norm_bench"))?;
    let grid = spec.grid()?;
    let fam = family_for(grid)?;
    let [lo, hi] = spec.band();
    let records: Vec<Result<Vec<TrialRecord>>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let f = random_band_limited(grid, lo.max(1.0), hi, trial_seed(spec.seed, t), true)?;
            params
                .spaces
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let v = norm(&f, s, &fam)?;
                    Ok(TrialRecord { trial: t, dilation: i as i32, lhs: v, rhs1: f.l2_norm(), rhs2: 0.0, ratio: v / f.l2_norm() })
                })
                .collect()
        })
        .collect();
    let mut all = Vec::new();
    for r in records {
        all.extend(r?);
    }
    let spec0 = ExperimentSpec { dilations: [0, params.spaces.len().saturating_sub(1) as i32], ..spec.clone() };
    Ok(RatioReport::assemble(&spec0, "norm_bench".into(), None, all, 0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub gamma: f64,
    pub lambda_min: f64,
    pub decay_rate: Option<f64>,
    pub times: Vec<f64>,
    /// `||u(t) - u_inf||_{L^2}` for the first trial.
    pub l2_distance: Vec<f64>,
    /// Distances in the target spaces for the first trial, `[spec][time]`.
    pub spec_distance: Vec<Vec<f64>>,
    pub monotone: bool,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub gamma_even: bool,
    pub gamma_budget: Option<u64>,
    pub cone_required: bool,
    pub cone_data: bool,
    pub below_threshold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringCampaign {
    pub environment: Environment,
    pub tables: Vec<DecayTable>,
    #[serde(default)]
    pub timestamp: Option<String>,
}

impl ScatteringCampaign {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(["gamma", "t", "l2_distance"]).map_err(csv_err)?;
        for tab in &self.tables {
            for (t, d) in tab.times.iter().zip(&tab.l2_distance) {
                w.serialize((tab.gamma, t, d)).map_err(csv_err)?;
            }
        }
        finish_csv(w)
    }

    pub fn passed(&self) -> bool {
        self.tables.iter().all(|t| t.monotone && t.ratios.iter().all(|r| r.is_finite() && *r > 0.0))
    }
}

fn scattering_data(grid: Grid, p: &ScatteringParams, band: [f64; 2], seed: u64) -> Result<(Field, Field)> {
    let mean_zero = p.kind == OperatorType::Homogeneous;
    match p.delta {
        Some(d) => cone_data_with(grid, d, band[0].max(2.0), seed, p.kind),
        None => Ok((
            random_band_limited(grid, band[0].max(1.0), band[1], seed, mean_zero)?,
            random_band_limited(grid, band[0].max(1.0), band[1], seed ^ 0x5555_5555, mean_zero)?,
        )),
    }
}

/// Decay tables and estimate ratios for every `gamma` in the sweep.
pub fn run_scattering(spec: &ExperimentSpec) -> Result<ScatteringCampaign> {
    spec.validate()?;
    let p = spec.scattering.as_ref().ok_or_else(|| spec.missing("scattering"))?;
    let grid = spec.grid()?;
    let fam = family_for(grid)?;
    let band = spec.band.unwrap_or([1.0, (grid.n() / 4) as f64]);
    let mut tables = Vec::new();
    for &gamma in &p.gammas {
        let problem = |t: usize| -> Result<ScatteringProblem> {
            let (f, g) = scattering_data(grid, p, band, trial_seed(spec.seed, t))?;
            let mut pr = ScatteringProblem::new(p.kind, gamma, f, g);
            pr.times = p.times.clone();
            pr.specs = p.specs.clone();
            pr.delta = p.delta;
            pr.estimate = p.estimate.clone();
            Ok(pr)
        };
        let first = problem(0)?;
        let rep = crate::scattering::verify_scattering(&ScatteringProblem { estimate: None, ..first.clone() }, &fam)?;
        let ratios: Vec<Result<f64>> = (0..if p.estimate.is_some() { spec.trials } else { 0 })
            .into_par_iter()
            .map(|t| {
                let pr = problem(t)?;
                let est = pr.estimate.clone().expect("estimate present");
                let u = u_infinity(&pr)?;
                estimate_ratio(&pr, &est, &u, &fam)
            })
            .collect();
        let ratios = ratios.into_iter().collect::<Result<Vec<_>>>()?;
        let (gamma_budget, below) = match &p.estimate {
            Some(est) => {
                let n = grid.dim();
                let t1 = tau_w_of(&est.w1, n).upper();
                let t2 = tau_w_of(&est.w2, n).upper();
                let tw = tau_w_of(&est.weight(), n).upper();
                let below = match est.setting {
                    Setting::Tl => est.s <= tau_pq(n, est.p, est.q, tw),
                    Setting::Besov => est.s <= tau_p(n, est.p, tw),
                };
                (Some(derivative_budget(n, est.p1, est.p2, est.p, est.q, t1, t2, est.setting)), below)
            }
            None => (None, false),
        };
        let gamma_even = gamma.fract() == 0.0 && (gamma as i64) % 2 == 0;
        tables.push(DecayTable {
            gamma,
            lambda_min: rep.lambda_min,
            decay_rate: rep.decay_rate,
            times: rep.times,
            l2_distance: rep.l2_distance,
            spec_distance: rep.spec_distance,
            monotone: rep.monotone,
            max_ratio: ratios.iter().copied().fold(f64::NAN, f64::max),
            ratios,
            gamma_even,
            gamma_budget,
            cone_required: !gamma_even && gamma_budget.is_none_or(|b| gamma < b as f64),
            cone_data: rep.cone_data.unwrap_or(false),
            below_threshold: below,
        });
    }
    Ok(ScatteringCampaign { environment: Environment::of(spec), tables, timestamp: None })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaEntry {
    pub lemma: String,
    pub parameter: String,
    pub value: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct LemmaReport {
    pub entries: Vec<LemmaEntry>,
    /// Largest over smallest constant of each sweep.
    pub spreads: Vec<(String, f64)>,
    pub failures: Vec<String>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.entries.iter().all(|e| e.ok)
    }

    fn push(&mut self, lemma: &str, parameter: String, r: Result<f64>, ok: impl Fn(f64) -> bool) {
        match r {
            Ok(v) => self.entries.push(LemmaEntry { lemma: lemma.into(), parameter, value: v, ok: v.is_finite() && ok(v) }),
            Err(e) => self.failures.push(format!("{lemma} [{parameter}]: {e}")),
        }
    }

    fn spread(&mut self, lemma: &str) {
        let v: Vec<f64> = self.entries.iter().filter(|e| e.lemma == lemma).map(|e| e.value).collect();
        if v.len() > 1 {
            let hi = v.iter().copied().fold(f64::NAN, f64::max);
            let lo = v.iter().copied().fold(f64::NAN, f64::min);
            self.spreads.push((lemma.into(), hi / lo));
        }
    }
}

/// Constants of the pointwise and convolution lemmas and the dyadic series inequality.
pub fn run_lemma_suite(spec: &ExperimentSpec) -> Result<LemmaReport> {
    spec.validate()?;
    let params = spec.lemmas.clone().unwrap_or_default();
    let grid = spec.grid()?;
    let fam = family_for(grid)?;
    let mut rep = LemmaReport::default();
    let n = grid.dim();

    let f = random_band_limited(grid, 1.0, (grid.n() / 4) as f64, trial_seed(spec.seed, 0), true)?;
    let translations: Vec<Vec<f64>> = [0.0, 0.5, 1.0, 2.0, 4.0].iter().map(|&a| vec![a; n]).collect();
    for &j in &params.peetre_levels {
        let r = crate::littlewood_paley::peetre_check(&fam, &f, j, &translations, 0.5, 0.5).map(|p| p.max_ratio);
        rep.push("peetre_pointwise", format!("j={j}"), r, |_| true);
    }

    for &j in &params.a_exponents {
        let a = 2f64.powi(j);
        let phi = dyadic_kernel(grid, j, |r| fam.phi_hat(r));
        let data = random_band_limited(grid, 0.0, a.min((grid.n() / 2 - 1) as f64), trial_seed(spec.seed, j as usize + 1), false);
        let (phi, data) = match (phi, data) {
            (Ok(p), Ok(d)) => (p, d),
            (Err(e), _) | (_, Err(e)) => {
                rep.failures.push(format!("A=2^{j}: {e}"));
                continue;
            }
        };
        rep.push("peetre_convolution", format!("A=2^{j}"), peetre_convolution_bound(&phi, &data, a, 1.0, 0.5, n as f64 / 0.5 + 1.0), |_| true);
        for w in [WeightSpec::unit(), WeightSpec::Power { a: 0.5 }] {
            let tw = tau_w_of(&w, n).upper();
            let floor = n as f64 / (2.0 / tw).min(1.0);
            let r = w.materialize(grid).and_then(|wm| convolution_norm_bound(&phi, &data, a, 1.0, floor + 0.5, floor + 1.5, 2.0, &wm, tw));
            let name = if w.is_unit() { "convolution_norm" } else { "convolution_norm_weighted" };
            rep.push(name, format!("A=2^{j}"), r, |_| true);
        }
    }
    for lemma in ["peetre_convolution", "convolution_norm", "convolution_norm_weighted"] {
        rep.spread(lemma);
    }

    if params.series_trials > 0 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(trial_seed(spec.seed, 9999));
        let mut worst: f64 = 0.0;
        let mut violations = 0;
        for _ in 0..params.series_trials {
            let len = rng.random_range(1..=12usize);
            let d: Vec<f64> = (0..len).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() }).collect();
            let tau = -rng.random_range(0.25..2.0);
            let q = [0.5, 0.75, 1.0][rng.random_range(0..3usize)];
            let lambda = rng.random_range(-1.0..1.0);
            let k0 = rng.random_range(0..3i64);
            let b = dyadic_series_bound(&d, tau, lambda, q, k0)?;
            if b.rhs > 0.0 {
                worst = worst.max(b.lhs / (b.analytic_constant * b.rhs));
            }
            if !b.holds() {
                violations += 1;
            }
        }
        rep.push("dyadic_series", format!("{} trials, worst lhs/(C rhs)", params.series_trials), Ok(worst), |v| v <= 1.0 + 1e-12);
        rep.push("dyadic_series_violations", String::new(), Ok(violations as f64), |v| v == 0.0);
        let single = dyadic_series_bound(&[1.0], -1.0, 0.0, 1.0, 0)?;
        rep.push("dyadic_series_single", "tau=-1,q=1,k0=0".into(), Ok(single.lhs / single.rhs), |v| (v - 2.0).abs() < 1e-12);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KP: &str = r#"
kind = "leibniz"
grid = 64
trials = 3
dilations = [-1, 1]
[leibniz.lhs]
family = "triebel_lizorkin"
p = 2
s = 1
[leibniz.rhs1]
family = "triebel_lizorkin"
p = 4
s = 1
[leibniz.rhs2]
family = "triebel_lizorkin"
p = 4
s = 1
"#;

    #[test]
    fn hoelder_mismatch_rejected() {
        let bad = KP.replacen("p = 4", "p = 3", 1);
        let err = ExperimentSpec::from_toml(&bad).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("Hoelder")), "{err}");
    }

    #[test]
    fn weight_composition_enforced() {
        let w = KP.replace("p = 4\ns = 1", "p = 4\ns = 1\nweight = { kind = \"power\", a = 0.5 }");
        let err = ExperimentSpec::from_toml(&w).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("weight")), "{err}");
        let ok = w.replace("p = 2\ns = 1", "p = 2\ns = 1\nweight = { kind = \"power\", a = 0.5 }");
        ExperimentSpec::from_toml(&ok).unwrap();
    }

    #[test]
    fn smoothness_must_match_symbol_order() {
        let bad = KP.replace("kind = \"leibniz\"", "kind = \"leibniz_cm\"\nsymbol = \"inverse_gamma(2)\"");
        assert!(matches!(ExperimentSpec::from_toml(&bad), Err(Error::Config(_))));
        let ok = bad.replace("p = 4\ns = 1", "p = 4\ns = -1");
        ExperimentSpec::from_toml(&ok).unwrap();
    }

    #[test]
    fn leibniz_report_shape() {
        let spec = ExperimentSpec::from_toml(KP).unwrap();
        let rep = run_leibniz(&spec).unwrap();
        assert_eq!(rep.records.len(), 9);
        assert_eq!(rep.per_dilation_max.len(), 3);
        assert!(rep.all_finite());
        let th = rep.thresholds.clone().unwrap();
        assert_eq!(th.gamma_tl, 6);
        assert!(!th.below_threshold);
        assert_eq!(rep.canonical_json().unwrap(), run_leibniz(&spec).unwrap().canonical_json().unwrap());
        let csv = rep.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("trial,dilation,lhs,rhs1,rhs2,ratio\n"));
    }

    #[test]
    fn zero_trials_give_header_only() {
        let spec = ExperimentSpec { trials: 0, ..ExperimentSpec::from_toml(KP).unwrap() };
        let rep = run_leibniz(&spec).unwrap();
        assert!(rep.records.is_empty());
        assert_eq!(rep.to_csv().unwrap(), "trial,dilation,lhs,rhs1,rhs2,ratio\n");
    }

    #[test]
    fn band_overflow_is_skipped() {
        let spec = ExperimentSpec { band: Some([1.0, 16.0]), ..ExperimentSpec::from_toml(KP).unwrap() };
        let rep = run_leibniz(&spec).unwrap();
        assert_eq!(rep.skipped, 6);
        assert_eq!(rep.records.len(), 3);
    }

    #[test]
    fn empty_lemma_grid() {
        let spec = ExperimentSpec::from_toml(
            "kind = \"lemma_suite\"\n[lemmas]\na_exponents = []\npeetre_levels = []\nseries_trials = 0\n",
        )
        .unwrap();
        let rep = run_lemma_suite(&spec).unwrap();
        assert!(rep.entries.is_empty() && rep.spreads.is_empty() && rep.failures.is_empty());
    }

    #[test]
    fn missing_section_is_config_error() {
        assert!(matches!(ExperimentSpec::from_toml("kind = \"nikolskij\""), Err(Error::Config(_))));
        assert!(matches!(ExperimentSpec::from_toml("kind = \"leibniz\"\ngrid = 100"), Err(Error::Config(_))));
    }

    #[test]
    fn scattering_campaign_tables() {
        let spec = ExperimentSpec::from_toml(
            "kind = \"scattering\"\ngrid = 64\ntrials = 2\n[scattering]\ntype = \"homogeneous\"\ngammas = [2.0, 4.0]\ntimes = [0.0, 1.0, 2.0, 3.0]\n",
        )
        .unwrap();
        let c = run_scattering(&spec).unwrap();
        assert_eq!(c.tables.len(), 2);
        assert!(c.passed());
        assert!(c.tables.iter().all(|t| t.ratios.is_empty() && t.gamma_even));
        assert_eq!(c.to_csv().unwrap().lines().count(), 9);
    }
}
