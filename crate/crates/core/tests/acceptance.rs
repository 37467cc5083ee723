//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::time::Instant;

use declab::bilinear::{design_test, igw_spanner, spanner_coefficients, BilinearEmbedding, EnumerationOracle};
use declab::dec::{dec_dual_lp, dec_lp, igw};
use declab::e2d::{run_experiment, E2dOption, ExperimentConfig};
use declab::estimation::OracleState;
use declab::families::{family_lower_bound, make_family, verify_family, FamilySpec, VerifyOptions};
use declab::mdp::{
    lfp_policy, mixed_policy_objective, occupancy, pcigw, policy_value, simulation_gap, value_iteration, Policy,
    TabularMdp,
};
use declab::models::{mix_outcomes, Model, ModelClass};
use declab::probkit::{DivergenceKind, OutcomeDist};
use declab::rng::stream;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_means(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.02..0.98)).collect()
}

fn random_class(rng: &mut ChaCha8Rng, models: usize, decisions: usize) -> ModelClass {
    let means: Vec<Vec<f64>> = (0..models).map(|_| random_means(rng, decisions)).collect();
    ModelClass::bernoulli(&means).unwrap()
}

fn minimax_duality() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..500u64 {
        let mut rng = stream(1, k, 0);
        let n = rng.random_range(1..=6);
        let a = rng.random_range(1..=6);
        let class = random_class(&mut rng, n, a);
        let reference = if rng.random_bool(0.5) {
            class.model(rng.random_range(0..n)).clone()
        } else {
            Model::bernoulli(&random_means(&mut rng, a)).unwrap()
        };
        let gamma = 10f64.powf(rng.random_range(-1.0..2.0));
        let primal = dec_lp(&class, &reference, gamma, DivergenceKind::HellingerSq).map_err(|e| e.to_string())?;
        let dual = dec_dual_lp(&class, &reference, gamma, DivergenceKind::HellingerSq).map_err(|e| e.to_string())?;
        worst = worst.max((primal.value - dual.value).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-6 && secs < 60.0, format!("max |primal - dual| = {worst:.3e}, {secs:.1} s"))
}

/// `sup_f [max_j f_j - <p, f> - gamma <p, (f - fbar)^2>]` over `f in [0,1]^A`.
///
/// For a fixed maximizing arm j with value c, every other coordinate solves
/// a clipped scalar quadratic, and the result is concave in c.
fn igw_sup(p: &[f64], fbar: &[f64], gamma: f64) -> f64 {
    let inner = |i: usize, c: f64| {
        let f = (fbar[i] - 1.0 / (2.0 * gamma)).clamp(0.0, c);
        -p[i] * f - gamma * p[i] * (f - fbar[i]).powi(2)
    };
    let mut best = f64::NEG_INFINITY;
    for j in 0..p.len() {
        let phi = |c: f64| {
            c * (1.0 - p[j]) - gamma * p[j] * (c - fbar[j]).powi(2)
                + (0..p.len()).filter(|&i| i != j).map(|i| inner(i, c)).sum::<f64>()
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if phi(m1) < phi(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        best = best.max(phi(0.5 * (lo + hi))).max(phi(0.0)).max(phi(1.0));
    }
    best
}

fn igw_certificate() -> Outcome {
    let mut worst_sup = f64::NEG_INFINITY;
    let mut worst_lp = f64::NEG_INFINITY;
    for (ai, a) in [2usize, 5, 10].into_iter().enumerate() {
        for (gi, gamma) in [1.0, 10.0, 100.0].into_iter().enumerate() {
            for k in 0..100u64 {
                let mut rng = stream(2, (ai * 3 + gi) as u64, k);
                let fbar = random_means(&mut rng, a);
                let cert = igw(&fbar, gamma).map_err(|e| e.to_string())?;
                worst_sup = worst_sup.max(igw_sup(&cert.witness, &fbar, gamma) - cert.value);
                let class = random_class(&mut rng, 5, a).with_model(Model::bernoulli(&fbar).unwrap()).unwrap();
                let reference = Model::bernoulli(&fbar).unwrap();
                let lp = dec_lp(&class, &reference, gamma, DivergenceKind::SquaredMean).map_err(|e| e.to_string())?;
                worst_lp = worst_lp.max(lp.value - cert.value);
            }
        }
    }
    check(
        worst_sup <= 1e-9 && worst_lp <= 1e-9,
        format!("max sup - A/gamma = {worst_sup:.3e}, max dec_lp - A/gamma = {worst_lp:.3e}"),
    )
}

fn mab_lower_bound() -> Outcome {
    let mut worst = f64::INFINITY;
    for a in [2usize, 4, 8] {
        let af = a as f64;
        for gamma in [af / 3.0, af, 3.0 * af, 10.0 * af, 50.0 * af] {
            let gap = af / (12.0 * gamma);
            let f = make_family(&FamilySpec::Mab { actions: a, gap }).map_err(|e| e.to_string())?;
            let declab::families::FamilyInstance::Bandit { class, reference, .. } = &f.instance else {
                return Err("mab family is not a bandit family".into());
            };
            let dual = dec_dual_lp(class, reference, gamma, DivergenceKind::HellingerSq).map_err(|e| e.to_string())?;
            let target = af / (48.0 * gamma);
            if (family_lower_bound(&f, gamma) - target).abs() > 1e-12 {
                return Err(format!("lower bound formula mismatch at A={a}, gamma={gamma}"));
            }
            worst = worst.min(dual.value - target);
        }
    }
    check(worst >= -1e-9, format!("min dual - A/(48 gamma) = {worst:.3e}"))
}

fn aggregation_regret() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..1000u64 {
        let mut rng = stream(4, k, 0);
        let n = rng.random_range(1..=8);
        let a = rng.random_range(1..=4);
        let class = random_class(&mut rng, n, a);
        let t = rng.random_range(1..=50);
        let mut state = OracleState::new(n);
        for _ in 0..t {
            let pi = rng.random_range(0..a);
            let x = OutcomeDist::Bernoulli(rng.random::<f64>()).sample(&mut rng);
            state.aggregate_update(&class, pi, &x).map_err(|e| e.to_string())?;
        }
        worst = worst.max(state.reg_kl() - (n as f64).ln());
    }
    check(worst <= 1e-9, format!("max Reg_KL - log|class| = {worst:.3e}"))
}

fn logloss_to_hellinger() -> Outcome {
    let mut est = Vec::new();
    let mut reg = Vec::new();
    for k in 0..200u64 {
        let mut rng = stream(5, k, 0);
        let class = random_class(&mut rng, 5, 4);
        let truth = rng.random_range(0..5);
        let cfg = ExperimentConfig { seed: 5, run: k, ..ExperimentConfig::new(100, 5.0, E2dOption::I) };
        let tr = run_experiment(&class, truth, &cfg).map_err(|e| e.to_string())?;
        est.push(tr.summary.est_h);
        reg.push(tr.summary.reg_kl);
    }
    let n = est.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let diff: Vec<f64> = est.iter().zip(&reg).map(|(e, r)| e - r).collect();
    let md = mean(&diff);
    let se = (diff.iter().map(|d| (d - md).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
    check(
        md <= 3.0 * se,
        format!("mean Est_H = {:.4}, mean Reg_KL = {:.4}, 3 SE = {:.4}", mean(&est), mean(&reg), 3.0 * se),
    )
}

fn e2d_pathwise() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut runs = 0;
    for k in 0..40u64 {
        let mut rng = stream(6, k, 0);
        let n = rng.random_range(2..=6);
        let a = rng.random_range(2..=5);
        let class = random_class(&mut rng, n, a);
        let truth = rng.random_range(0..n);
        let gamma = 10f64.powf(rng.random_range(0.0..1.5));
        for option in [E2dOption::I, E2dOption::II, E2dOption::Bayes, E2dOption::Generalized, E2dOption::Contextual] {
            let cfg = ExperimentConfig { seed: 6, run: k, ..ExperimentConfig::new(60, gamma, option) };
            let tr = run_experiment(&class, truth, &cfg).map_err(|e| format!("{option:?}: {e}"))?;
            for r in &tr.records {
                worst = worst.max(r.inst_regret - r.dec_value - gamma * r.hell_inc);
            }
            worst = worst.max(tr.summary.cum_regret - tr.summary.bound_rhs);
            runs += 1;
        }
    }
    check(worst <= 1e-9, format!("{runs} runs, max per-round excess = {worst:.3e}"))
}

fn e2d_scaling() -> Outcome {
    let start = Instant::now();
    let a = 5usize;
    let means: Vec<Vec<f64>> = (0..a).map(|i| (0..a).map(|pi| if pi == i { 0.7 } else { 0.5 }).collect()).collect();
    let class = ModelClass::bernoulli(&means).unwrap();
    let mean_regret = |t: usize| -> Result<f64, String> {
        let gamma = (a as f64 * t as f64 / (a as f64).ln()).sqrt();
        let mut total = 0.0;
        for seed in 0..20u64 {
            let cfg = ExperimentConfig { seed, ..ExperimentConfig::new(t, gamma, E2dOption::I) };
            total += run_experiment(&class, (seed % a as u64) as usize, &cfg).map_err(|e| e.to_string())?.summary.cum_regret;
        }
        Ok(total / 20.0)
    };
    let r1 = mean_regret(2000)?;
    let r2 = mean_regret(4000)?;
    let bound = 6.0 * (a as f64 * 2000.0 * (a as f64).ln()).sqrt();
    let secs = start.elapsed().as_secs_f64();
    check(
        r1 <= bound && r2 <= 1.6 * r1 && secs < 300.0,
        format!("mean regret {r1:.2} (bound {bound:.1}), doubled T {r2:.2} (ratio {:.3}), {secs:.1} s", r2 / r1),
    )
}

/// Mixes kernels, initial law and rewards of `base` toward `other` at weight `w`.
fn perturb(base: &TabularMdp, other: &TabularMdp, w: f64) -> TabularMdp {
    let mut m = base.clone();
    let (h, s, a) = (base.horizon(), base.num_states(), base.num_actions());
    for hh in 0..h {
        for ss in 0..s {
            for aa in 0..a {
                let row = base.kernel(hh, ss, aa).iter().zip(other.kernel(hh, ss, aa)).map(|(x, y)| (1.0 - w) * x + w * y).collect();
                m.set_kernel(hh, ss, aa, row).unwrap();
                let r = mix_outcomes(&[base.reward(hh, ss, aa), other.reward(hh, ss, aa)], &[1.0 - w, w]).unwrap();
                m.set_reward(hh, ss, aa, r).unwrap();
            }
        }
    }
    let d1 = base.initial().iter().zip(other.initial()).map(|(x, y)| (1.0 - w) * x + w * y).collect();
    m.set_initial(d1).unwrap();
    m
}

fn pcigw_certificate() -> Outcome {
    let mut worst_plain = f64::NEG_INFINITY;
    let mut worst_floor = f64::NEG_INFINITY;
    let mut lambda_ok = true;
    for (ci, (h, s, a)) in [(2usize, 2usize, 2usize), (3, 3, 2)].into_iter().enumerate() {
        let scale = (h * h * h * s * a) as f64;
        for gamma in [10.0, 100.0] {
            let eta = gamma / (21.0 * (h * h) as f64);
            for r in 0..10u64 {
                let mut rng = stream(8, (ci * 2) as u64 + (gamma as u64 / 100), r);
                let reference = TabularMdp::random(h, s, a, &mut rng);
                for (floor, worst, constant) in [(None, &mut worst_plain, 95.0), (Some(1e-6), &mut worst_floor, 175.0)] {
                    let cover = pcigw(&reference, eta, floor).map_err(|e| e.to_string())?;
                    lambda_ok &= cover.lambda >= 1.0 && cover.lambda <= 2.0 * (h * s * a) as f64;
                    let bound = constant * scale / gamma;
                    for k in 0..20 {
                        let other = TabularMdp::random(h, s, a, &mut rng);
                        let test = match k % 4 {
                            0 => other,
                            1 => perturb(&reference, &other, 0.01),
                            2 => perturb(&reference, &other, 0.1),
                            _ => perturb(&reference, &other, 0.5),
                        };
                        let obj = mixed_policy_objective(&test, &reference, &cover.policies, &cover.weights, gamma)
                            .map_err(|e| e.to_string())?;
                        *worst = worst.max(obj - bound);
                    }
                    let own = mixed_policy_objective(&reference, &reference, &cover.policies, &cover.weights, gamma)
                        .map_err(|e| e.to_string())?;
                    *worst = worst.max(own - bound);
                }
            }
        }
    }
    check(
        worst_plain <= 1e-6 && worst_floor <= 0.0 && lambda_ok,
        format!("max objective - bound: {worst_plain:.3e} plain, {worst_floor:.3e} floored; lambda in range: {lambda_ok}"),
    )
}

fn lfp_correctness() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let (h, s, a) = (2usize, 2usize, 2usize);
    let base = 2.0 * (h * s * a) as f64;
    for k in 0..50u64 {
        let mut rng = stream(9, k, 0);
        let m = TabularMdp::random(h, s, a, &mut rng);
        let eta = [0.5, 5.0, 50.0][k as usize % 3];
        let target = (rng.random_range(0..h), rng.random_range(0..s), rng.random_range(0..a));
        let sol = lfp_policy(&m, target, eta).map_err(|e| e.to_string())?;
        let fstar = value_iteration(&m).value;
        let mut best = 0.0f64;
        for _ in 0..10_000 {
            let pi = Policy::random(h, s, a, &mut rng);
            let occ = occupancy(&m, &pi).map_err(|e| e.to_string())?;
            let gap = (fstar - policy_value(&m, &pi).map_err(|e| e.to_string())?).max(0.0);
            best = best.max(occ.d[target.0][target.1][target.2] / (base + eta * gap));
        }
        worst = worst.max(best - sol.ratio);
    }
    check(worst <= 1e-3, format!("max sampled ratio - LFP ratio = {worst:.3e}"))
}

fn spanner_quality() -> Outcome {
    let mut worst_coeff = 0.0f64;
    let mut worst_design = f64::NEG_INFINITY;
    for k in 0..100u64 {
        let mut rng = stream(10, k, 0);
        let d = rng.random_range(1..=5);
        let n = rng.random_range(d..=50);
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = rng.random::<f64>().max(0.05);
                v.into_iter().map(|x| x / norm * r).collect()
            })
            .collect();
        let emb = BilinearEmbedding::from_vectors(vectors.clone()).map_err(|e| e.to_string())?;
        let sp = igw_spanner(&emb, &EnumerationOracle, 0, 1.0, None).map_err(|e| e.to_string())?;
        let coeffs = spanner_coefficients(&emb, 0, 1.0, &sp).map_err(|e| e.to_string())?;
        for c in coeffs.iter().flatten() {
            worst_coeff = worst_coeff.max(c.abs());
        }
        let mut q = vec![0.0; n];
        for &m in &sp.members {
            q[m] += 1.0 / sp.members.len() as f64;
        }
        let value = design_test(&vectors, &q).map_err(|e| e.to_string())?;
        worst_design = worst_design.max(value - 2.0 * (d * d) as f64);
    }
    check(
        worst_coeff <= 2.0 + 1e-6 && worst_design <= 1e-6,
        format!("max |coeff| = {worst_coeff:.4}, max design value - 2d^2 = {worst_design:.3e}"),
    )
}

fn simulation_lemma() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..500u64 {
        let mut rng = stream(11, k, 0);
        let (h, s, a) = (rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(1..=3));
        let reference = TabularMdp::random(h, s, a, &mut rng);
        let other = TabularMdp::random(h, s, a, &mut rng);
        let m = if k % 2 == 0 { other } else { perturb(&reference, &other, rng.random::<f64>()) };
        let pi = Policy::random(h, s, a, &mut rng);
        let (lhs, rhs) = simulation_gap(&m, &reference, &pi).map_err(|e| e.to_string())?;
        worst = worst.max(lhs - rhs);
    }
    check(worst <= 1e-9, format!("max |f_M - f_ref| - rhs = {worst:.3e}"))
}

fn family_suite() -> Outcome {
    let grid: Vec<Vec<f64>> = (0..=60).map(|i| vec![i as f64 / 60.0]).collect();
    let grid2: Vec<Vec<f64>> =
        (0..=12).flat_map(|i| (0..=12).map(move |j| vec![i as f64 / 12.0, j as f64 / 12.0])).collect();
    let specs = vec![
        FamilySpec::Mab { actions: 3, gap: 0.1 },
        FamilySpec::Mab { actions: 8, gap: 0.3 },
        FamilySpec::Linear { dim: 4, gap: 0.1, decisions: None, seed: 0 },
        FamilySpec::Linear { dim: 8, gap: 0.5, decisions: None, seed: 1 },
        FamilySpec::Lipschitz { points: grid, eps: 0.05 },
        FamilySpec::Lipschitz { points: grid2, eps: 0.2 },
        FamilySpec::Relu { dim: 4, eps: 0.1, decisions: None, seed: 0 },
        FamilySpec::Relu { dim: 16, eps: 0.25, decisions: None, seed: 2 },
        FamilySpec::GapMab { actions: 4, gap: 0.1 },
        FamilySpec::GapLinear { dim: 5, gap: 0.2 },
        FamilySpec::Tree { states: 4, actions: 2, horizon: 2, gap: 0.1 },
        FamilySpec::Tree { states: 8, actions: 3, horizon: 4, gap: 0.25 },
        FamilySpec::LinearQStar { dim: 16, horizon: 2, gap: 1.0 / 6.0, m: None, seed: 0 },
        FamilySpec::LinearQStar { dim: 64, horizon: 3, gap: 0.1, m: None, seed: 1 },
    ];
    let mut failures = Vec::new();
    let mut sampled = 0;
    for spec in &specs {
        let f = make_family(spec).map_err(|e| format!("{}: {e}", spec.kind_name()))?;
        let r = verify_family(&f, &VerifyOptions::default()).map_err(|e| e.to_string())?;
        sampled += usize::from(r.sampled);
        if !r.passes {
            failures.push(format!("{} {:?}", spec.kind_name(), r));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} families verified ({sampled} on sampled policies)", specs.len())
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 minimax duality", minimax_duality),
        ("2 IGW certificate", igw_certificate),
        ("3 MAB lower bound", mab_lower_bound),
        ("4 aggregation regret", aggregation_regret),
        ("5 log-loss to Hellinger", logloss_to_hellinger),
        ("6 E2D pathwise bound", e2d_pathwise),
        ("7 E2D regret scaling", e2d_scaling),
        ("8 PC-IGW certificate", pcigw_certificate),
        ("9 LFP correctness", lfp_correctness),
        ("10 spanner", spanner_quality),
        ("11 simulation lemma", simulation_lemma),
        ("12 family suite", family_suite),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
