//! Acceptance criteria 1-14: one PASS/FAIL line each.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64 as C64;
use torus_lp::bilinear::{
    apply_direct, apply_paraproduct, derivative_budget, expand, BilinearSymbol, ParaproductConfig, ParaproductExpansion,
    Setting,
};
use torus_lp::grid_field::{random_band_limited, Field, Grid};
use torus_lp::harness::{
    run_leibniz, run_lemma_suite, run_nikolskij, run_scattering, ExperimentSpec, RatioReport,
};
use torus_lp::littlewood_paley::{make_lp_family, LpFamily, TransitionProfile};
use torus_lp::scattering::{solve_u_closed, solve_u_quadrature, OperatorType, ScatteringProblem};
use torus_lp::spaces::{hardy_norm, lifting_check, HardyMethod, SpaceSpec};
use torus_lp::weights::WeightSpec;

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn family(dim: usize, n: usize) -> LpFamily {
    make_lp_family(TransitionProfile::default(), Grid::new(dim, n).unwrap()).unwrap()
}

fn config(name: &str, grid: usize) -> ExperimentSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let mut spec = ExperimentSpec::from_toml(&std::fs::read_to_string(&path).unwrap()).unwrap();
    spec.grid = grid;
    spec
}

fn within(a: f64, b: f64, factor: f64) -> bool {
    a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 && a.max(b) / a.min(b) <= factor
}

fn rel(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

fn criterion_1() -> Outcome {
    let err = family(1, 256).partition_error();
    let err2 = family(2, 32).partition_error();
    Outcome { id: 1, pass: err < 1e-12 && err2 < 1e-12, detail: format!("max |sum - 1| = {err:.2e} (n=1, N=256), {err2:.2e} (n=2, N=32)") }
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parseval: f64 = 0.0;
    for (dim, n) in [(1, 128), (1, 256), (2, 32)] {
        let g = Grid::new(dim, n).unwrap();
        for seed in 0..5 {
            let f = random_band_limited(g, 0.0, (n / 2 - 1) as f64, seed, false).unwrap();
            let back = Field::from_spatial(g, f.spatial().to_vec()).unwrap();
            let d: f64 = back.spectral().iter().zip(f.spectral()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(d / f.spectral_l2_norm());
            parseval = parseval.max((f.l2_norm() - f.spectral_l2_norm()).abs() / f.spectral_l2_norm());
        }
    }
    Outcome { id: 2, pass: worst < 1e-12 && parseval < 1e-12, detail: format!("round trip {worst:.2e}, Parseval {parseval:.2e}") }
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for (dim, n) in [(1, 128), (2, 32)] {
        let g = Grid::new(dim, n).unwrap();
        let f = random_band_limited(g, 0.0, (n / 2 - 1) as f64, 1, false).unwrap();
        let h = random_band_limited(g, 0.0, (n / 2 - 1) as f64, 2, false).unwrap();
        let t = apply_direct(&BilinearSymbol::one(), &f, &h).unwrap();
        let direct = f.pad_to(g.padded()).unwrap().mul_pointwise(&h.pad_to(g.padded()).unwrap()).unwrap();
        worst = worst.max(rel(&t, &direct));
    }
    let g = Grid::new(1, 64).unwrap();
    let mut single: f64 = 0.0;
    for sigma in [BilinearSymbol::one(), BilinearSymbol::inverse_gamma(2.0)] {
        for (k, l) in [(1i64, 2i64), (-5, 3), (31, 31), (-31, 7)] {
            let t = apply_direct(&sigma, &Field::mode(g, &[k]).unwrap(), &Field::mode(g, &[l]).unwrap()).unwrap();
            let want = Field::mode(g.padded(), &[k + l]).unwrap().scale(C64::new(sigma.eval(&[k as f64], &[l as f64]), 0.0));
            single = single.max(t.sub(&want).unwrap().sup_norm());
        }
    }
    Outcome { id: 3, pass: worst < 1e-10 && single < 1e-12, detail: format!("sigma=1 rel {worst:.2e}, single modes {single:.2e}") }
}

fn paraproduct_error(fam: &LpFamily, sigma: &BilinearSymbol, a: usize, seed: u64) -> (f64, ParaproductExpansion) {
    let g = fam.grid;
    let band = (1usize << g.j_max()) as f64;
    let f = random_band_limited(g, 1.0, band, seed, true).unwrap();
    let h = random_band_limited(g, 1.0, band, seed + 1, true).unwrap();
    let direct = apply_direct(sigma, &f, &h).unwrap();
    let exp = expand(sigma, fam, &ParaproductConfig::new(g.dim(), a)).unwrap();
    let t = apply_paraproduct(&exp, sigma, &f, &h, fam).unwrap();
    (rel(&t, &direct), exp)
}

fn criterion_4_5() -> (Outcome, Outcome, String) {
    let fam = family(1, 128);
    let mut pass = true;
    let mut detail = String::from("n=1 N=128:");
    let mut inverse8 = None;
    for sigma in [BilinearSymbol::one(), BilinearSymbol::inverse_gamma(2.0)] {
        let mut errs = Vec::new();
        for a in [4usize, 8, 16] {
            let start = Instant::now();
            let (e, exp) = paraproduct_error(&fam, &sigma, a, 2);
            errs.push((e, start.elapsed().as_secs_f64()));
            if a == 8 && sigma.name() != "one" {
                inverse8 = Some(exp);
            }
        }
        let decreasing = errs.windows(2).all(|w| w[1].0 < w[0].0);
        pass &= errs[1].0 < 1e-2 && decreasing && errs[2].1 < 600.0;
        detail += &format!(
            " {} A=4/8/16 -> {:.2e}/{:.2e}/{:.2e};",
            sigma.name(),
            errs[0].0,
            errs[1].0,
            errs[2].0
        );
    }

    let exp = inverse8.unwrap();
    let vals: Vec<f64> = (0..exp.slabs.len())
        .flat_map(|j| {
            let e = &exp;
            [1u8, 2].map(move |part| 4f64.powi(j as i32) * e.big_c(j, part, &[0], &[0]).unwrap().norm())
        })
        .collect();
    let part = |p: usize| -> f64 {
        let v: Vec<f64> = vals.iter().skip(p).step_by(2).copied().collect();
        v.iter().copied().fold(f64::NAN, f64::max) / v.iter().copied().fold(f64::NAN, f64::min)
    };
    let (r1, r2) = (part(0), part(1));
    let c5 = Outcome {
        id: 5,
        pass: r1 < 2.0 && r2 < 2.0,
        detail: format!("max/min of 2^(2j)|C_j(0,0)| over j=0..{}: {r1:.6} (first part), {r2:.6} (second part)", exp.slabs.len() - 1),
    };

    let fam2 = family(2, 32);
    let mut note = String::from("n=2 N=32, A=8:");
    for sigma in [BilinearSymbol::one(), BilinearSymbol::inverse_gamma(2.0)] {
        let (e, _) = paraproduct_error(&fam2, &sigma, 8, 2);
        note += &format!(" {} -> {e:.2e};", sigma.name());
    }
    (Outcome { id: 4, pass, detail }, c5, note)
}

fn leibniz_pair(name: &str) -> (RatioReport, RatioReport) {
    (run_leibniz(&config(name, 128)).unwrap(), run_leibniz(&config(name, 256)).unwrap())
}

fn stable_leibniz(a: &RatioReport, b: &RatioReport) -> bool {
    a.all_finite() && b.all_finite() && a.dilation_spread() <= 4.0 && b.dilation_spread() <= 4.0 && within(a.max_ratio, b.max_ratio, 2.0)
}

fn describe(tag: &str, a: &RatioReport, b: &RatioReport) -> String {
    format!(
        "{tag}: {} ratios, max {:.4} (N=128) / {:.4} (N=256), dilation spread {:.3} / {:.3}",
        a.records.len() + b.records.len(),
        a.max_ratio,
        b.max_ratio,
        a.dilation_spread(),
        b.dilation_spread()
    )
}

fn criterion_6() -> Outcome {
    let (a, b) = leibniz_pair("kato_ponce.toml");
    Outcome { id: 6, pass: stable_leibniz(&a, &b) && a.environment.trials == 200, detail: describe("Kato-Ponce", &a, &b) }
}

fn criterion_7() -> Outcome {
    let (a, b) = leibniz_pair("weighted_leibniz.toml");
    let th = a.thresholds.clone().unwrap();
    let pass = stable_leibniz(&a, &b) && !th.below_threshold;
    Outcome { id: 7, pass, detail: format!("{}; s = {} > tau_pq(w) = {}", describe("weighted", &a, &b), th.s, th.tau_pq) }
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (tag, file) in [("Lorentz", "lorentz_leibniz.toml"), ("Morrey", "morrey_leibniz.toml"), ("variable", "variable_leibniz.toml")] {
        let (a, b) = leibniz_pair(file);
        pass &= stable_leibniz(&a, &b);
        parts.push(describe(tag, &a, &b));
    }
    Outcome { id: 8, pass, detail: parts.join("; ") }
}

fn hardy_constant(n: usize, spec: &SpaceSpec) -> f64 {
    let fam = family(1, n);
    (0..50u64)
        .map(|seed| {
            let f = random_band_limited(fam.grid, 1.0, (n / 4) as f64, 500 + seed, true).unwrap();
            let sq = hardy_norm(&f, spec, &fam, HardyMethod::Square).unwrap();
            let mx = hardy_norm(&f, spec, &fam, HardyMethod::Maximal).unwrap();
            (sq / mx).max(mx / sq)
        })
        .fold(0.0, f64::max)
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (tag, spec) in [
        ("H^1", SpaceSpec::hardy(1.0, false)),
        ("H^2(|x|^1/2)", SpaceSpec::hardy(2.0, false).with_weight(WeightSpec::Power { a: 0.5 })),
        ("h^1", SpaceSpec::hardy(1.0, true)),
    ] {
        let (a, b) = (hardy_constant(128, &spec), hardy_constant(256, &spec));
        pass &= a < 10.0 && b < 10.0 && within(a, b, 2.0);
        parts.push(format!("{tag}: C = {a:.3} (N=128), {b:.3} (N=256)"));
    }
    Outcome { id: 9, pass, detail: parts.join("; ") }
}

fn criterion_10() -> Outcome {
    let fam = family(1, 128);
    let mut pass = true;
    let mut parts = Vec::new();
    for (tag, w) in [("w=1", WeightSpec::unit()), ("w=|x|^1/2", WeightSpec::Power { a: 0.5 })] {
        let spec = SpaceSpec::tl(2.0, 2.0, 1.0, true).with_weight(w);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for seed in 0..100u64 {
            let f = random_band_limited(fam.grid, 1.0, 32.0, 900 + seed, true).unwrap();
            let r = lifting_check(&f, &spec, &fam).unwrap();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        pass &= lo >= 0.2 && hi <= 5.0;
        parts.push(format!("{tag}: ratios in [{lo:.4}, {hi:.4}]"));
    }
    Outcome { id: 10, pass, detail: parts.join("; ") }
}

fn criterion_11() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for file in ["nikolskij_tl_unit.toml", "nikolskij_tl_power.toml", "nikolskij_besov_unit.toml", "nikolskij_besov_power.toml"] {
        let a = run_nikolskij(&config(file, 128)).unwrap();
        let b = run_nikolskij(&config(file, 256)).unwrap();
        pass &= a.all_finite() && b.all_finite() && a.records.len() == 100 && within(a.max_ratio, b.max_ratio, 2.0);
        parts.push(format!("{}: {:.4} / {:.4}", file.trim_end_matches(".toml"), a.max_ratio, b.max_ratio));
    }
    Outcome { id: 11, pass, detail: parts.join("; ") }
}

fn criterion_12() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [128usize, 256] {
        let mut spec = ExperimentSpec::from_toml("kind = \"lemma_suite\"\nseed = 5\n").unwrap();
        spec.grid = n;
        let rep = run_lemma_suite(&spec).unwrap();
        let spread_ok = rep.spreads.iter().all(|(_, s)| *s <= 2.0);
        let single = rep.entries.iter().find(|e| e.lemma == "dyadic_series_single").map(|e| e.value).unwrap_or(f64::NAN);
        let violations = rep.entries.iter().find(|e| e.lemma == "dyadic_series_violations").map(|e| e.value).unwrap_or(f64::NAN);
        pass &= rep.passed() && spread_ok && (single - 2.0).abs() < 1e-12 && violations == 0.0;
        let spreads: Vec<String> = rep.spreads.iter().map(|(l, s)| format!("{l} {s:.3}")).collect();
        parts.push(format!("N={n}: spreads [{}], series violations {violations}, single-entry ratio {single:.15}", spreads.join(", ")));
    }
    Outcome { id: 12, pass, detail: parts.join("; ") }
}

fn criterion_13() -> Outcome {
    let g = Grid::new(1, 128).unwrap();
    let f = random_band_limited(g, 1.0, 32.0, 71, true).unwrap();
    let h = random_band_limited(g, 1.0, 32.0, 72, true).unwrap();
    let p = ScatteringProblem::new(OperatorType::Homogeneous, 2.0, f, h);
    let mut quad: f64 = 0.0;
    for t in [0.001, 0.1, 1.0, 5.0] {
        let a = solve_u_quadrature(&p, t).unwrap();
        let b = solve_u_closed(&p, t).unwrap();
        quad = quad.max(rel(&a, &b));
    }
    let sweep = run_scattering(&config("scattering.toml", 128)).unwrap();
    let cone = run_scattering(&config("scattering_cone.toml", 128)).unwrap();
    let decay_ok = sweep.tables.iter().all(|t| t.decay_rate.is_some_and(|r| (r / t.lambda_min - 1.0).abs() < 0.1));
    let rates: Vec<String> = sweep
        .tables
        .iter()
        .map(|t| format!("gamma={} rate {:.6} vs lambda_min {}", t.gamma, t.decay_rate.unwrap_or(f64::NAN), t.lambda_min))
        .collect();
    let g2 = &sweep.tables[0];
    let ratio_ok = g2.gamma == 2.0 && g2.ratios.len() == 100 && g2.ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    let c = &cone.tables[0];
    let cone_ok = c.cone_data && c.ratios.len() == 50 && c.ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    let budget = derivative_budget(1, 2.0, 2.0, 2.0, 2.0, 1.0, 1.0, Setting::Tl);
    Outcome {
        id: 13,
        pass: quad < 1e-6 && decay_ok && ratio_ok && cone_ok && budget == 6 && sweep.passed() && cone.passed(),
        detail: format!(
            "quadrature vs closed {quad:.2e}; {}; gamma=2 max ratio {:.4} over {}; cone gamma=1 max ratio {:.4} over {}; derivative_budget = {budget}",
            rates.join(", "),
            g2.max_ratio,
            g2.ratios.len(),
            c.max_ratio,
            c.ratios.len()
        ),
    }
}

fn suite_json() -> String {
    let mut out = String::new();
    out += &run_leibniz(&config("kato_ponce.toml", 128)).unwrap().canonical_json().unwrap();
    out += &run_leibniz(&config("weighted_leibniz.toml", 128)).unwrap().canonical_json().unwrap();
    out += &run_nikolskij(&config("nikolskij_tl_power.toml", 128)).unwrap().canonical_json().unwrap();
    out += &serde_json::to_string(&run_scattering(&config("scattering.toml", 128)).unwrap()).unwrap();
    out += &serde_json::to_string(&run_lemma_suite(&ExperimentSpec::from_toml("kind = \"lemma_suite\"").unwrap()).unwrap()).unwrap();
    out
}

fn criterion_14() -> Outcome {
    let a = suite_json();
    let b = suite_json();
    Outcome { id: 14, pass: a == b, detail: format!("{} bytes per run, identical: {}", a.len(), a == b) }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut outcomes = vec![criterion_1(), criterion_2(), criterion_3()];
    let (c4, c5, note) = criterion_4_5();
    outcomes.push(c4);
    outcomes.push(c5);
    let runs: [fn() -> Outcome; 9] =
        [criterion_6, criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13, criterion_14];
    for run in runs {
        outcomes.push(run());
    }
    let mut failed = 0;
    for o in &outcomes {
        println!("criterion {:>2}: {}  {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("note: paraproduct reconstruction at {note}");
    println!("{} of {} criteria passed in {:.1} s", outcomes.len() - failed, outcomes.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
