//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 6 and 7 are long training runs; they are skipped unless the
//! binary is given `--ignored` or `--include-ignored`
//! (`cargo test --test acceptance -- --include-ignored`).

mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{chain_policy, five_state, greedy_oracle, seeded, Dense};
use rand::Rng;
use rkhs_pg::config::parse_config;
use rkhs_pg::env::{value_iteration, CartPole, ChainMdp};
use rkhs_pg::estimators::{estimate_u, sample_geometric};
use rkhs_pg::rollout::{episode_return, fan_out, mean_and_se};
use rkhs_pg::seeding;
use rkhs_pg::trainer::{evaluate_policy, Trainer};
use rkhs_pg::{estimate_q, komp, stochastic_gradient, EstimatorConfig, GaussianPolicy};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const Z: f64 = 3.0;
const CHAIN_GAMMA: f64 = 0.9;
const Q_DRAWS: usize = 100_000;
const BELLMAN_TOL: f64 = 1e-9;
const GRAD_DRAWS: usize = 200_000;
const FD_DELTA: f64 = 0.05;
const FD_ROLLOUTS: usize = 1_000_000;
const U_TRUNCATION_TOL: f64 = 1e-6;
const KOMP_CASES: usize = 1000;
const KOMP_SLACK: f64 = 1e-8;
const KOMP_WEIGHT_RTOL: f64 = 1e-7;
const CHI_ALPHA: f64 = 0.001;
const CHI_DRAWS: usize = 100_000;
const CHI_BINS: usize = 31;
const MC_EPISODES: usize = 5000;
const MC_MAX_ORDER: usize = 200;
const MC_PLATEAU: f64 = 1.25;
const MC_SOLVED: f64 = 90.0;
const MC_SOLVE_EPISODES: usize = 50_000;
const CP_SOLVED: f64 = 195.0;
const CP_EVAL_CAP: usize = 200;
const CP_EPISODES: usize = 10_000;
const SEED_RETRIES: u64 = 2;
const CONST_TOL: f64 = 1e-10;
const CHAIN_EPISODES: usize = 2000;
const CHAIN_U_ROLLOUTS: usize = 2000;

type Outcome = Result<String, String>;

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn q_unbiased() -> Outcome {
    let chain = ChainMdp::new(five_state(), 1000).map_err(|e| e.to_string())?;
    let pi = chain_policy();
    let probs = chain.sign_probabilities(&pi).unwrap();
    let table = value_iteration(chain.chain(), &probs, CHAIN_GAMMA).unwrap();
    let residual = table.bellman_residual(chain.chain(), &probs, CHAIN_GAMMA);
    if residual > BELLMAN_TOL {
        return Err(format!("oracle Bellman residual {residual:e}"));
    }
    let cfg = EstimatorConfig::new(CHAIN_GAMMA, 1000).unwrap();
    let mut worst: f64 = 0.0;
    for s in 0..5 {
        for (k, a) in [-0.7, 0.4].into_iter().enumerate() {
            let mut rng = seeding::stream(100, "q-probe", (2 * s + k) as u64);
            let x = chain.state_vector(s);
            let draws: Vec<f64> = (0..Q_DRAWS)
                .map(|_| estimate_q(&chain, &pi, &x, &[a], &cfg, &mut rng).unwrap().value)
                .collect();
            let (mean, se) = mean_and_se(&draws);
            let z = (mean - table.q[s][k]).abs() / se;
            worst = worst.max(z);
        }
    }
    check(worst <= Z, format!("10 probes, worst |mean - Q| = {worst:.2} SE, residual {residual:.1e}"))
}

fn shifted(pi: &GaussianPolicy, center: f64, delta: f64) -> GaussianPolicy {
    pi.with_mean(pi.mean().add_scaled_kernel(&[center], &[delta]).unwrap()).unwrap()
}

fn gradient_vs_fd() -> Outcome {
    let chain = ChainMdp::new(five_state(), 1000).unwrap();
    let pi = chain_policy();
    let s_star = 0.0;
    let cfg = EstimatorConfig::new(CHAIN_GAMMA, 1000).unwrap();
    let bw = pi.mean().kernel().bandwidths().to_vec();
    let start = chain.state_vector(0);
    let base = seeded(200).random::<u64>();
    let directional = fan_out(base, GRAD_DRAWS, |_, rng| {
        let g = stochastic_gradient(&chain, &pi, &cfg, rng, &start)?;
        Ok(g.coeff[0] * common::kernel(&bw, &g.center, &[s_star]))
    })
    .map_err(|e| e.to_string())?;
    let (grad, grad_se) = mean_and_se(&directional);

    // Truncation bias gamma^H B_r / (1 - gamma) below the tolerance.
    let horizon = ((U_TRUNCATION_TOL * (1.0 - CHAIN_GAMMA) / chain.chain().reward_bound()).ln()
        / CHAIN_GAMMA.ln())
    .ceil() as usize;
    let plus = shifted(&pi, s_star, FD_DELTA);
    let minus = shifted(&pi, s_star, -FD_DELTA);
    // Both sides consume the same stream per rollout index.
    let base = seeded(201).random::<u64>();
    let diffs = fan_out(base, FD_ROLLOUTS, |_, rng| {
        let mut twin = rng.clone();
        let up = episode_return(&chain, &plus, CHAIN_GAMMA, horizon, rng)?;
        let down = episode_return(&chain, &minus, CHAIN_GAMMA, horizon, &mut twin)?;
        Ok((up - down) / (2.0 * FD_DELTA))
    })
    .map_err(|e| e.to_string())?;
    let (fd, fd_se) = mean_and_se(&diffs);
    // Side check of the U oracle itself.
    let (u_plus, _) = estimate_u(&chain, &plus, CHAIN_GAMMA, &mut seeded(202), 1000, horizon, U_TRUNCATION_TOL)
        .map_err(|e| e.to_string())?;
    let combined = (grad_se * grad_se + fd_se * fd_se).sqrt();
    let gap = (grad - fd).abs();
    check(
        gap <= Z * combined && u_plus.is_finite(),
        format!("gradient {grad:.5} vs finite difference {fd:.5}: gap {:.2} combined SE (H = {horizon})", gap / combined),
    )
}

fn komp_matches_oracle() -> Outcome {
    let mut rng = seeded(300);
    let mut worst_w: f64 = 0.0;
    let mut worst_budget = f64::NEG_INFINITY;
    for case in 0..KOMP_CASES {
        let m = rng.random_range(1..=6);
        let n = rng.random_range(1..=3);
        let p = rng.random_range(1..=2);
        let h = common::random_function(&mut rng, m, n, p);
        let norm = h.hilbert_norm().unwrap();
        let eps = rng.random_range(0.0..1.2) * norm;
        let got = komp(&h, eps).map_err(|e| e.to_string())?;
        let want = greedy_oracle(&Dense::of(&h), eps);
        if got.removal_order != want.removed || got.kept != want.kept {
            return Err(format!(
                "case {case}: removal order {:?} vs oracle {:?}",
                got.removal_order, want.removed
            ));
        }
        let err = want.error_sq.sqrt();
        worst_budget = worst_budget.max(got.final_error - eps).max(err - eps);
        if got.final_error > eps + KOMP_SLACK {
            return Err(format!("case {case}: error {} over budget {eps}", got.final_error));
        }
        let w = got.pruned.weight_list();
        let scale = want.weights.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())).max(f64::MIN_POSITIVE);
        for (a, b) in w.iter().flatten().zip(want.weights.iter().flatten()) {
            worst_w = worst_w.max((a - b).abs() / scale);
        }
    }
    check(
        worst_w <= KOMP_WEIGHT_RTOL,
        format!("{KOMP_CASES} functions, sequences identical, worst weight gap {worst_w:.1e} relative, worst error - eps {worst_budget:.1e}"),
    )
}

fn geometric_chi_square() -> Outcome {
    let critical = ChiSquared::new((CHI_BINS) as f64).unwrap().inverse_cdf(1.0 - CHI_ALPHA);
    let mut report = Vec::new();
    let mut ok = true;
    for (i, gamma) in [0.5, 0.9, 0.99].into_iter().enumerate() {
        let mut rng = seeding::stream(400, "geometric", i as u64);
        let mut counts = [0usize; CHI_BINS + 1];
        for _ in 0..CHI_DRAWS {
            let t = sample_geometric(gamma, &mut rng).unwrap() as usize;
            counts[t.min(CHI_BINS)] += 1;
        }
        let mut stat = 0.0;
        for (t, c) in counts.iter().enumerate() {
            let p = if t < CHI_BINS {
                (1.0 - gamma) * f64::powi(gamma, t as i32)
            } else {
                f64::powi(gamma, CHI_BINS as i32)
            };
            let e = p * CHI_DRAWS as f64;
            stat += (*c as f64 - e).powi(2) / e;
        }
        ok &= stat < critical;
        report.push(format!("gamma {gamma}: {stat:.1}"));
    }
    check(ok, format!("{} (critical {critical:.1})", report.join(", ")))
}

fn mountain_car_order() -> Outcome {
    let path = configs().join("mountain_car.cfg");
    let cfg = parse_config(&path, &[format!("episodes={MC_EPISODES}")]).map_err(|e| e.to_string())?;
    let env = cfg.build_env().unwrap();
    let mut trainer = Trainer::new(&cfg, env.as_ref()).map_err(|e| e.to_string())?;
    let mut rng = seeding::stream(cfg.seed, seeding::TRAIN, 0);
    let mut orders = Vec::with_capacity(MC_EPISODES);
    for _ in 0..MC_EPISODES {
        orders.push(trainer.step(&mut rng).map_err(|e| e.to_string())?.model_order);
    }
    let q = MC_EPISODES / 4;
    let max = *orders.iter().max().unwrap();
    let mid = *orders[q..3 * q].iter().max().unwrap();
    let last = *orders[3 * q..].iter().max().unwrap();
    check(
        max <= MC_MAX_ORDER && last as f64 <= MC_PLATEAU * mid as f64,
        format!("max order {max}, mid-run max {mid}, final-quartile max {last}"),
    )
}

fn mountain_car_solve() -> Outcome {
    let path = configs().join("mountain_car.cfg");
    let mut tried = Vec::new();
    for retry in 0..=SEED_RETRIES {
        let base = parse_config(&path, &[]).unwrap().seed;
        let cfg = parse_config(&path, &[format!("episodes={MC_SOLVE_EPISODES}"), format!("seed={}", base + retry)])
            .map_err(|e| e.to_string())?;
        let env = cfg.build_env().unwrap();
        let mut trainer = Trainer::new(&cfg, env.as_ref()).map_err(|e| e.to_string())?;
        let mut rng = seeding::stream(cfg.seed, seeding::TRAIN, 0);
        let mut best = f64::NEG_INFINITY;
        let mut at = 0;
        for _ in 0..cfg.episodes {
            let r = trainer.step(&mut rng).map_err(|e| e.to_string())?;
            if r.episode >= cfg.eval_window && r.avg_return > best {
                best = r.avg_return;
                at = r.episode;
            }
            if best > MC_SOLVED {
                break;
            }
        }
        tried.push(format!("seed {}: best trailing average {best:.1} at episode {at}", cfg.seed));
        if best > MC_SOLVED {
            return Ok(tried.join("; "));
        }
    }
    Err(tried.join("; "))
}

fn cartpole_solve() -> Outcome {
    let path = configs().join("cartpole.cfg");
    let eval_env = CartPole::new(CP_EVAL_CAP);
    let mut tried = Vec::new();
    for retry in 0..=SEED_RETRIES {
        let base = parse_config(&path, &[]).unwrap().seed;
        let cfg = parse_config(&path, &[format!("episodes={CP_EPISODES}"), format!("seed={}", base + retry)])
            .map_err(|e| e.to_string())?;
        let env = cfg.build_env().unwrap();
        let mut trainer = Trainer::new(&cfg, env.as_ref()).map_err(|e| e.to_string())?;
        let mut rng = seeding::stream(cfg.seed, seeding::TRAIN, 0);
        let mut eval_rng = seeding::stream(cfg.seed, seeding::EVAL, 0);
        let mut best = f64::NEG_INFINITY;
        let mut at = 0;
        let mut order = 0;
        for _ in 0..cfg.episodes {
            let r = trainer.step(&mut rng).map_err(|e| e.to_string())?;
            order = r.model_order;
            if r.episode % cfg.eval_window == 0 {
                let (mean, _) = evaluate_policy(&eval_env, trainer.policy(), 1.0, cfg.eval_episodes, &mut eval_rng)
                    .map_err(|e| e.to_string())?;
                if mean > best {
                    best = mean;
                    at = r.episode;
                }
                if best > CP_SOLVED {
                    break;
                }
            }
        }
        tried.push(format!("seed {}: best evaluation {best:.1} at episode {at}, model order {order}", cfg.seed));
        if best > CP_SOLVED {
            return Ok(tried.join("; "));
        }
    }
    Err(tried.join("; "))
}

fn constants_by_hand() -> Outcome {
    let k = rkhs_pg::constants::theoretical_constants(1.0, 0.9, &[1.0], 1, 0.01, 0.0).map_err(|e| e.to_string())?;
    // (4 Gamma(5/2) / Gamma(1/2))^{1/4} = 3^{1/4}.
    let sigma = 2.7f64.cbrt() / 0.01 * 3f64.powf(0.25);
    let l1 = 2000.0;
    let l2 = 1900.0;
    let c = l1 * sigma * sigma + 0.01 * l2 * sigma.powi(3);
    let radius = (0.01 * c).sqrt();
    let pairs = [
        ("sigma", k.sigma_bound, sigma),
        ("L1", k.l1, l1),
        ("L2", k.l2, l2),
        ("C", k.c, c),
        ("radius", k.radius, radius),
    ];
    let worst = pairs
        .iter()
        .map(|(_, got, want)| ((got - want) / want).abs())
        .fold(0.0, f64::max);
    check(
        worst <= CONST_TOL,
        format!("sigma {:.6}, L1 {}, L2 {}, C {:.6e}, radius {:.6}; worst relative gap {worst:.1e}", k.sigma_bound, k.l1, k.l2, k.c, k.radius),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = configs().join("mountain_car.cfg");
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "4")] {
        let status = Command::new(env!("CARGO_BIN_EXE_rkhs-pg"))
            .env(rkhs_pg::rollout::THREADS_ENV, threads)
            .args(["train", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(name))
            .args(["--overrides", "episodes=300"])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        let csv = std::fs::read(dir.path().join(name).join("metrics.csv")).map_err(|e| e.to_string())?;
        let ck = std::fs::read(dir.path().join(name).join("checkpoint.json")).map_err(|e| e.to_string())?;
        outputs.push((csv, ck));
    }
    check(
        outputs[0] == outputs[1],
        format!("300 mountain car episodes, {} CSV bytes, identical: {}", outputs[0].0.len(), outputs[0] == outputs[1]),
    )
}

fn chain_improvement() -> Outcome {
    let path = configs().join("chain.cfg");
    let cfg = parse_config(&path, &[format!("episodes={CHAIN_EPISODES}")]).map_err(|e| e.to_string())?;
    let env = cfg.build_env().unwrap();
    let initial = cfg.initial_policy(1).unwrap();
    let mut trainer = Trainer::new(&cfg, env.as_ref()).map_err(|e| e.to_string())?;
    let mut rng = seeding::stream(cfg.seed, seeding::TRAIN, 0);
    for _ in 0..cfg.episodes {
        trainer.step(&mut rng).map_err(|e| e.to_string())?;
    }
    let trained: &GaussianPolicy = trainer.policy();
    let horizon = ((U_TRUNCATION_TOL * (1.0 - cfg.gamma) / env.spec().reward_bound).ln() / cfg.gamma.ln()).ceil() as usize;
    let u = |pi: &GaussianPolicy, seed| {
        estimate_u(env.as_ref(), pi, cfg.gamma, &mut seeded(seed), CHAIN_U_ROLLOUTS, horizon, U_TRUNCATION_TOL)
    };
    let (u0, se0) = u(&initial, 500).map_err(|e| e.to_string())?;
    let (u1, se1) = u(trained, 501).map_err(|e| e.to_string())?;
    let se = (se0 * se0 + se1 * se1).sqrt();
    check(
        u1 - u0 >= Z * se,
        format!("U {u0:.4} -> {u1:.4} ({:.1} SE), model order {}", (u1 - u0) / se, trained.mean().len()),
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let nightly = args.iter().any(|a| a == "--ignored" || a == "--include-ignored");
    let only_nightly = args.iter().any(|a| a == "--ignored");
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();

    type Criterion = (&'static str, bool, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("1 q_estimator_unbiased", false, q_unbiased),
        ("2 gradient_matches_finite_difference", false, gradient_vs_fd),
        ("3 komp_budget_and_optimality", false, komp_matches_oracle),
        ("4 geometric_sampler_chi_square", false, geometric_chi_square),
        ("5 mountain_car_model_order_bounded", false, mountain_car_order),
        ("6 mountain_car_solved", true, mountain_car_solve),
        ("7 cartpole_solved", true, cartpole_solve),
        ("8 constants_match_hand_values", false, constants_by_hand),
        ("9 metrics_csv_deterministic", false, determinism),
        ("chain_policy_improves", false, chain_improvement),
    ];
    let mut failed = 0;
    for (name, is_nightly, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        if (is_nightly && !nightly) || (only_nightly && !is_nightly) {
            println!("SKIP {name} (long run; pass --include-ignored)");
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
