//! Acceptance gate: one line per criterion, nonzero exit if any criterion fails.

use std::time::Instant;

use jsum::chain::{builtin_chain, BuiltinKind, Chain};
use jsum::densechain::{build_dense, check_splitting, DecompositionSpec};
use jsum::estimates::{check_lower, check_skipped_block_lemma, check_stepping, check_upper, CheckReport};
use jsum::extraction::{
    attach_functionals, default_threshold, select_sequence, skipped_blocks_basis, verify_block_system, SubspaceM,
};
use jsum::jnorm::{jnorm, jnorm_oracle_with_limit, norm};
use jsum::projections::{p_interval, p_n, q_alpha, q_n};
use jsum::random::{
    gaussian_vec, random_block_system, random_interval, random_step_sequence, random_stepped_blocks, random_subset,
    random_vector, rng_for,
};
use jsum::vector::{JVector, Tail};
use nalgebra::DVector;
use rand::Rng;

const SEED: u64 = 20_240_601;

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Pool of chains at q = 2: James, mixed-exponent and random Euclidean chains.
fn chain_pool() -> Vec<Chain> {
    let mut pool = Vec::new();
    for n in 1..=8 {
        pool.push(builtin_chain(&BuiltinKind::James { n }).unwrap());
    }
    let exps = [1.0, 1.25, 1.5, 2.0, 3.0, 4.0, f64::INFINITY];
    for n in 2..=7 {
        for dims in [1, 2, 3] {
            let p = exps[exps.len() - n..].to_vec();
            pool.push(builtin_chain(&BuiltinKind::Lpn { n, p, dims }).unwrap());
        }
    }
    for seed in 0..24 {
        pool.push(
            builtin_chain(&BuiltinKind::Random {
                seed,
                n: 1 + (seed as usize % 8),
                max_dim: 3,
            })
            .unwrap(),
        );
    }
    pool
}

fn pick<'a, R: Rng>(rng: &mut R, pool: &'a [Chain]) -> &'a Chain {
    &pool[rng.random_range(0..pool.len())]
}

fn summarize(reports: &[CheckReport]) -> (usize, usize, f64) {
    let failed = reports.iter().filter(|r| r.failed()).count();
    let worst = reports.iter().map(|r| r.relative_margin).fold(f64::INFINITY, f64::min);
    (reports.len(), failed, worst)
}

fn tally(name: &str, reports: &[CheckReport]) -> Outcome {
    let (total, failed, worst) = summarize(reports);
    outcome(
        failed == 0,
        format!("{name}: {total} cases, {failed} failures, worst relative margin {worst:.3e}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut bad = 0;
    for c in 0..500u64 {
        let mut rng = rng_for(SEED, c);
        let n = rng.random_range(1..=7);
        let chain = builtin_chain(&BuiltinKind::Random {
            seed: SEED ^ c,
            n,
            max_dim: 3,
        })
        .unwrap();
        for _ in 0..10 {
            let tail = if rng.random_bool(0.5) {
                Tail::Zero
            } else {
                Tail::EventuallyConstant
            };
            let x = random_vector(&mut rng, &chain, tail);
            let dp = jnorm(&chain, &x).unwrap().value;
            let oracle = jnorm_oracle_with_limit(&chain, &x, 7).unwrap().value;
            let rel = (dp - oracle).abs() / oracle.max(1.0);
            worst = worst.max(rel);
            if rel > 1e-9 {
                bad += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad == 0 && secs <= 60.0,
        format!("5000 cases, {bad} failures, worst relative difference {worst:.3e}, {secs:.2} s"),
    )
}

fn isometric_embedding(pool: &[Chain]) -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let mut rng = rng_for(SEED + 2, i);
        let chain = pick(&mut rng, pool);
        let m = rng.random_range(1..=chain.len());
        let v = gaussian_vec(&mut rng, chain.dim(m));
        let x = JVector::single(chain, m, v.clone()).unwrap();
        let bn = chain.block_norm(m, &v);
        worst = worst.max((norm(chain, &x).unwrap() - bn).abs() / bn.max(1.0));
    }
    outcome(
        worst <= 1e-12,
        format!("1000 cases, worst relative deviation {worst:.3e}"),
    )
}

fn contractivity(pool: &[Chain]) -> Outcome {
    let mut reports = Vec::new();
    for i in 0..10_000 {
        let mut rng = rng_for(SEED + 3, i);
        let chain = pick(&mut rng, pool);
        let tail = if rng.random_bool(0.5) {
            Tail::Zero
        } else {
            Tail::EventuallyConstant
        };
        let x = random_vector(&mut rng, chain, tail);
        let xn = norm(chain, &x).unwrap();
        let interval = random_interval(&mut rng, chain.len());
        let alpha = random_step_sequence(&mut rng, chain.len());
        let p = norm(chain, &p_interval(chain, &x, interval).unwrap()).unwrap();
        let q = norm(chain, &q_alpha(chain, &x, &alpha).unwrap()).unwrap();
        reports.push(CheckReport::new("p", p, xn, 1e-12));
        reports.push(CheckReport::new("q", q, xn, 1e-12));
    }
    tally("interval and stepping projections", &reports)
}

fn upper_lower(pool: &[Chain]) -> Outcome {
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for i in 0..1000 {
        let mut rng = rng_for(SEED + 4, i);
        let chain = pick(&mut rng, pool);
        upper.push(check_upper(chain, &random_block_system(&mut rng, chain, 1)).unwrap());
        lower.push(check_lower(chain, &random_block_system(&mut rng, chain, 2)).unwrap());
    }
    let a = tally("upper (3)", &upper);
    let b = tally("lower (2)", &lower);
    outcome(a.passed && b.passed, format!("{}; {}", a.detail, b.detail))
}

fn pq_qp(pool: &[Chain]) -> Outcome {
    let mut alg = 0.0f64;
    let mut norms = 0.0f64;
    for i in 0..1000 {
        let mut rng = rng_for(SEED + 5, i);
        let chain = pick(&mut rng, pool);
        let tail = if rng.random_bool(0.5) {
            Tail::Zero
        } else {
            Tail::EventuallyConstant
        };
        let x = random_vector(&mut rng, chain, tail);
        let m = rng.random_range(1..=chain.len());
        let (pm, qm) = (p_n(chain, &x, m).unwrap(), q_n(chain, &x, m).unwrap());
        let scale = x.max_abs().max(1.0);
        alg = alg.max(q_n(chain, &pm, m).unwrap().max_abs_diff(&qm) / scale);
        alg = alg.max(p_n(chain, &qm, m).unwrap().max_abs_diff(&pm) / scale);
        let (a, b) = (norm(chain, &pm).unwrap(), norm(chain, &qm).unwrap());
        norms = norms.max((a - b).abs() / a.max(1.0));
    }
    outcome(
        alg <= 1e-12 && norms <= 1e-9,
        format!("1000 cases, worst coordinate deviation {alg:.3e}, worst norm deviation {norms:.3e}"),
    )
}

fn lemmas(pool: &[Chain]) -> Outcome {
    let mut stepping = Vec::new();
    for i in 0..10_000 {
        let mut rng = rng_for(SEED + 6, i);
        let chain = pick(&mut rng, pool);
        let tail = if rng.random_bool(0.5) {
            Tail::Zero
        } else {
            Tail::EventuallyConstant
        };
        let x = random_vector(&mut rng, chain, tail);
        let alpha = random_step_sequence(&mut rng, chain.len());
        let s = random_subset(&mut rng, chain.len());
        stepping.push(check_stepping(chain, &x, &alpha, &s).unwrap());
    }
    let mut skipped = Vec::new();
    for i in 0..1000 {
        let mut rng = rng_for(SEED + 7, i);
        let chain = pick(&mut rng, pool);
        let (m, xs) = random_stepped_blocks(&mut rng, chain);
        skipped.push(check_skipped_block_lemma(chain, &m, &xs).unwrap());
    }
    let a = tally("stepping", &stepping);
    let b = tally("stepped blocks", &skipped);
    outcome(a.passed && b.passed, format!("{}; {}", a.detail, b.detail))
}

fn extraction() -> Outcome {
    let chain = builtin_chain(&BuiltinKind::James { n: 40 }).unwrap();
    let basis = skipped_blocks_basis(&mut rng_for(SEED + 8, 0), &chain, 8, 5e-4).unwrap();
    let m = SubspaceM::new(&chain, basis).unwrap();
    let system = match select_sequence(&chain, &m, 6, 1, &default_threshold) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("selection failed: {e}")),
    };
    let system = match attach_functionals(&chain, system) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("functionals failed: {e}")),
    };
    let report = verify_block_system(&chain, &m, &system, 100, SEED).unwrap();
    let required = [
        "q_threshold",
        "tail_threshold",
        "gap",
        "block_norm_lower",
        "block_norm_upper",
        "functional_norm",
        "analysis_bound",
        "projection_idempotent",
        "perturbation_smallness",
        "perturbation_maps_blocks",
    ];
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|name| !report.worst.contains_key(*name))
        .collect();
    let smallness = report
        .reports
        .iter()
        .find(|r| r.check == "perturbation_smallness")
        .map(|r| r.lhs);
    let ratio16 = report.worst.get("analysis_bound").map(|w| w.worst_ratio);
    outcome(
        report.all_passed() && missing.is_empty() && system.len() == 6,
        format!(
            "indices {:?}, {} checks, {} failures, smallness sum {:.3e}, worst analysis ratio {:.3}{}",
            system.indices(),
            report.counts.total,
            report.counts.failed + report.counts.refused,
            smallness.unwrap_or(f64::NAN),
            ratio16.unwrap_or(f64::NAN),
            if missing.is_empty() {
                String::new()
            } else {
                format!(", missing {missing:?}")
            }
        ),
    )
}

fn dense() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for p in [1.0, 1.5, 2.0] {
        let dc = build_dense(&DecompositionSpec::lp(p, &[2, 2, 2]).unwrap()).unwrap();
        let reports = check_splitting(&dc, 1000, SEED).unwrap();
        let t = tally(&format!("p = {p}"), &reports);
        ok &= t.passed;
        parts.push(t.detail);
    }
    let dc = build_dense(&DecompositionSpec::lp(2.0, &[1, 1]).unwrap()).unwrap();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let z = gaussian_vec(&mut rng_for(SEED + 9, i), 2);
        let zn = dc.host_norm(&z);
        worst = worst.max((norm(dc.chain(), &dc.embed_t(&z).unwrap()).unwrap() - zn).abs() / zn.max(1.0));
    }
    let z = DVector::from_vec(vec![3.0, -4.0]);
    worst = worst.max((norm(dc.chain(), &dc.embed_t(&z).unwrap()).unwrap() - 5.0).abs() / 5.0);
    ok &= worst <= 1e-9;
    parts.push(format!("D = 2 isometry worst {worst:.3e}"));
    outcome(ok, parts.join("; "))
}

fn truncation(pool: &[Chain]) -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let mut rng = rng_for(SEED + 10, i);
        let chain = pick(&mut rng, pool);
        let x = random_vector(&mut rng, chain, Tail::EventuallyConstant);
        let ext = chain.extend_identity(5);
        let a = norm(chain, &x).unwrap();
        let b = norm(&ext, &x.extend_to(&ext).unwrap()).unwrap();
        worst = worst.max((a - b).abs() / a.max(1.0));
    }
    outcome(worst <= 1e-12, format!("100 cases, worst relative change {worst:.3e}"))
}

fn negative_control() -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = jsum::cli::run(
        [
            "jsum",
            "suite",
            "--chain",
            "james:6",
            "--trials",
            "100",
            "--seed",
            "1",
            "--perturb",
            "3:1.2",
        ],
        &mut out,
        &mut err,
    );
    let report: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let failed = report["result"]["counts"]["failed"].as_u64().unwrap_or(0);
    let chain = builtin_chain(&BuiltinKind::James { n: 6 })
        .unwrap()
        .with_scaled_map(3, 1.2)
        .unwrap();
    let measured = jsum::chain::spectral_norm(chain.map(3));
    outcome(
        code == 1 && failed >= 1,
        format!("map norm {measured:.2}, {failed} recorded failures, exit code {code}"),
    )
}

fn main() {
    let pool = chain_pool();
    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("isometric embedding", Box::new(|| isometric_embedding(&pool))),
        ("contractivity", Box::new(|| contractivity(&pool))),
        ("upper and lower estimates", Box::new(|| upper_lower(&pool))),
        ("PQ/QP identities", Box::new(|| pq_qp(&pool))),
        ("stepping and stepped-block lemmas", Box::new(|| lemmas(&pool))),
        ("extraction end to end", Box::new(extraction)),
        ("dense chain splitting", Box::new(dense)),
        ("truncation stability", Box::new(|| truncation(&pool))),
        ("negative control", Box::new(negative_control)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
