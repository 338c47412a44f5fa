//! Acceptance criteria. Runs without the libtest harness: every criterion
//! prints one `PASS`/`FAIL` line and the binary exits non-zero if any fail.

use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pmlab::certify::{check_thm6, check_thm6_proof_invariant, check_thm7, lemma_suite, thm6_proof_gap, Ensemble};
use pmlab::choi::{random_channel, PartialSwapParams};
use pmlab::entropy::{afw_bound, coherent_information};
use pmlab::optimize::{brute_force_lo_bound, maximize_coherent_information, OptimizerConfig};
use pmlab::process::{
    build_three_relation_process, partial_swap, partial_swap_process, relabel_for_theorem6, validate,
    ProcessMatrix, ThreeRelationParams,
};
use pmlab::random::{random_density, rng_from_seed};
use pmlab::tensor::{sys, trace_distance, LabeledOperator, Role, C64};
use pmlab::Execution;
use rand::Rng;

const SEED: u64 = 20240611;

type Outcome = (bool, String);

fn report(pass: bool, detail: String) -> Outcome {
    (pass, detail)
}

fn p_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.05).collect()
}

fn i_b(w: &ProcessMatrix) -> f64 {
    coherent_information(w.op(), &["b1", "b2"], &["a1", "a2"]).unwrap()
}

fn optimum(w: &ProcessMatrix, seed: u64) -> f64 {
    maximize_coherent_information(w, &OptimizerConfig::with_seed(seed))
        .unwrap()
        .best_value
}

fn criterion_1_validity_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = [f64::INFINITY, 0.0, 0.0, 0.0];
    let mut count = 0;
    let mut track = |w: &ProcessMatrix| {
        let r = validate(w).unwrap();
        worst[0] = worst[0].min(r.min_eigenvalue);
        worst[1] = worst[1].max(r.trace_deviation);
        worst[2] = worst[2].max(r.lv_residual);
        worst[3] = worst[3].max(r.factorization_residual);
        count += 1;
    };
    for p in p_grid() {
        track(partial_swap(p, 2).unwrap().process());
    }
    let mut rng = rng_from_seed(SEED);
    for _ in 0..50 {
        let z: Vec<C64> = (0..3)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let n = z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let alpha = [z[0] / n, z[1] / n, z[2] / n];
        let params = ThreeRelationParams::with_default_psi(alpha, 2).unwrap();
        track(build_three_relation_process(&params).unwrap().process());
    }
    let elapsed = start.elapsed();
    let pass = worst[0] >= -1e-9
        && worst[1] <= 1e-10
        && worst[2] <= 1e-8
        && worst[3] <= 1e-8
        && elapsed < Duration::from_secs(60);
    report(
        pass,
        format!(
            "{count} processes, min eig {:.3e} (>= -1e-9), |Tr-1| {:.3e} (<= 1e-10), L_V {:.3e} (<= 1e-8), factorization {:.3e} (<= 1e-8), {:.1?}",
            worst[0], worst[1], worst[2], worst[3], elapsed
        ),
    )
}

fn criterion_2_theorem6_partial_swap_half() -> Outcome {
    let start = Instant::now();
    let wp = partial_swap(0.5, 2).unwrap();
    let cfg = OptimizerConfig::with_seed(SEED);
    let r = check_thm6(&wp, &["e1"], Some(&cfg)).unwrap();
    let elapsed = start.elapsed();
    let worst = r.hypotheses.iter().map(|h| h.value).fold(0.0, f64::max);
    let value = r.conclusion_value.unwrap();
    let pass = r.hypotheses.iter().all(|h| h.value <= 1e-8)
        && value <= 1e-4
        && elapsed < Duration::from_secs(300);
    report(
        pass,
        format!(
            "p=0.5 worst hypothesis residual {worst:.3e} (<= 1e-8), max I^B_LO {value:.6} (<= 1e-4), {elapsed:.1?}"
        ),
    )
}

fn criterion_3_theorem6_three_relation_relabeled() -> Outcome {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let alpha = [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)];
    let params = ThreeRelationParams::with_default_psi(alpha, 2).unwrap();
    let wp = relabel_for_theorem6(&build_three_relation_process(&params).unwrap()).unwrap();
    let cfg = OptimizerConfig::with_seed(SEED);
    let r = check_thm6(&wp, &["e0"], Some(&cfg)).unwrap();
    let worst = r.hypotheses.iter().map(|h| h.value).fold(0.0, f64::max);
    let value = r.conclusion_value.unwrap();
    let pass = r.hypotheses_pass && value <= 1e-4;
    report(
        pass,
        format!("worst hypothesis residual {worst:.3e} (<= 1e-8), max I^B_LO {value:.3e} (<= 1e-4)"),
    )
}

fn criterion_4_correlation_reduction_curve() -> Outcome {
    let v0 = optimum(partial_swap(0.0, 2).unwrap().process(), SEED);
    let v1 = optimum(partial_swap(1.0, 2).unwrap().process(), SEED);
    let vh = optimum(partial_swap(0.5, 2).unwrap().process(), SEED);
    let pass = v0 >= 1.0 - 1e-3 && v1 >= 1.0 - 1e-3 && vh <= 1e-4;
    report(
        pass,
        format!("I^B_LO p=0 {v0:.6} (>= 0.999), p=1 {v1:.6} (>= 0.999), p=0.5 {vh:.6} (<= 1e-4)"),
    )
}

fn criterion_5_theorem7_three_relation() -> Outcome {
    let a = C64::new(1.0 / 3f64.sqrt(), 0.0);
    let params = ThreeRelationParams::with_default_psi([a, a, a], 2).unwrap();
    let wp = build_three_relation_process(&params).unwrap();
    let r = check_thm7(&wp, &["e1"]).unwrap();
    let sym = r.hypotheses[0].value;
    let slacks: Vec<f64> = r.hypotheses[1..].iter().map(|h| h.value).collect();
    let value = r.conclusion_value.unwrap();
    let pass = sym <= 1e-8 && slacks.iter().all(|s| *s >= -1e-9) && value <= 1e-9;
    // regression value computed on first run
    let regression = (value - (-1.1751617816995457)).abs() <= 1e-9;
    report(
        pass && regression,
        format!(
            "f=e1 symmetry {sym:.3e} (<= 1e-8), slacks {:.3e} {:.3e} (>= -1e-9), I^B {value:.16} (<= 1e-9, regression -1.1751617816995457)",
            slacks[0], slacks[1]
        ),
    )
}

fn criterion_6_theorem6_proof_invariant() -> Outcome {
    let wp = partial_swap(0.5, 2).unwrap();
    let mut rng = rng_from_seed(SEED);
    let mut worst_gap: f64 = 0.0;
    let mut refused = None;
    for _ in 0..20 {
        let rank = rng.random_range(1..=4);
        let m = random_channel(
            vec![sys("a1", 2, Role::PartyInput)],
            vec![sys("a2", 2, Role::PartyOutput), sys("a'", 2, Role::Ancilla)],
            rank,
            &mut rng,
        )
        .unwrap();
        worst_gap = worst_gap.max(thm6_proof_gap(&wp, &["e1"], &m).unwrap());
        if let Err(e) = check_thm6_proof_invariant(&wp, &["e1"], &m) {
            refused.get_or_insert_with(|| e.to_string());
        }
    }
    let pass = refused.is_none() && worst_gap <= 1e-8;
    let why = refused.map(|e| format!(", refused: {e}")).unwrap_or_default();
    report(
        pass,
        format!("p=0.5, 20 random M at A, worst |I^b1 - I^e0| {worst_gap:.3e} (<= 1e-8){why}"),
    )
}

fn criterion_7_lemma_suite() -> Outcome {
    let start = Instant::now();
    let r = lemma_suite(SEED, 1000, &[2, 3, 4], Ensemble::Generic, Execution::default()).unwrap();
    let elapsed = start.elapsed();
    let worst = r.lemmas.iter().map(|l| l.worst_slack).fold(f64::INFINITY, f64::min);
    let afw = r.lemmas.iter().find(|l| l.name == "afw_continuity").unwrap();
    let pass = r.lemmas.iter().all(|l| l.worst_slack >= -1e-9 && l.nan_count == 0)
        && afw.worst_slack >= 0.0
        && elapsed < Duration::from_secs(120);
    let per: Vec<String> = r
        .lemmas
        .iter()
        .map(|l| format!("{} {:.3e}", l.name, l.worst_slack))
        .collect();
    report(
        pass,
        format!(
            "1000 trials x {} lemmas, worst slack {worst:.3e} (>= -1e-9) [{}], {elapsed:.1?}",
            r.lemmas.len(),
            per.join(", ")
        ),
    )
}

fn criterion_8_oracle_equivalence() -> Outcome {
    let mut rows = Vec::new();
    let mut pass = true;
    for (k, p) in [0.0, 0.25, 0.5, 0.75, 1.0].into_iter().enumerate() {
        let wp = partial_swap(p, 2).unwrap();
        let w = wp.process();
        let cfg = OptimizerConfig::with_seed(SEED + k as u64);
        let opt = maximize_coherent_information(w, &cfg).unwrap().best_value;
        let brute = brute_force_lo_bound(w, 10_000, SEED + 100 + k as u64, cfg.dims(w), Execution::default()).unwrap();
        pass &= opt >= brute - 1e-3;
        rows.push(format!("p={p} opt {opt:.4} brute {brute:.4}"));
    }
    report(pass, format!("optimizer >= brute(1e4) - 1e-3: {}", rows.join("; ")))
}

fn criterion_9_continuity() -> Outcome {
    let base = partial_swap(0.5, 2).unwrap();
    let w = base.process();
    let i0 = i_b(w);
    let mut rng = rng_from_seed(SEED);
    let mut worst_slack = f64::INFINITY;
    let mut max_eps: f64 = 0.0;
    for _ in 0..100 {
        // a random valid process to mix toward
        let p = rng.random::<f64>();
        let rho = random_density(
            &[sys("a1", 2, Role::PartyInput), sys("a1'", 2, Role::Ancilla)],
            &mut rng,
        );
        let rank = rng.random_range(1..=4);
        let n = random_channel(
            vec![sys("a2", 2, Role::PartyOutput)],
            vec![sys("a2'", 2, Role::Ancilla)],
            rank,
            &mut rng,
        )
        .unwrap();
        let other = partial_swap_process(PartialSwapParams::new(p, 2).unwrap(), &rho, &n).unwrap();
        let t = 0.05 * rng.random::<f64>();
        let mixed: LabeledOperator = w.op().scale(1.0 - t).add(&other.op().scale(t)).unwrap();
        let perturbed = ProcessMatrix::new(mixed).unwrap();
        let eps = trace_distance(w.op(), perturbed.op()).unwrap();
        max_eps = max_eps.max(eps);
        let delta = (i_b(&perturbed) - i0).abs();
        worst_slack = worst_slack.min(afw_bound(eps, 4).unwrap() + 1e-9 - delta);
    }
    let pass = max_eps <= 0.05 && worst_slack >= 0.0;
    report(
        pass,
        format!("100 perturbations, max eps {max_eps:.4} (<= 0.05), worst afw_bound + 1e-9 - |dI^B| {worst_slack:.3e} (>= 0)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1_validity_suite),
        (2, criterion_2_theorem6_partial_swap_half),
        (3, criterion_3_theorem6_three_relation_relabeled),
        (4, criterion_4_correlation_reduction_curve),
        (5, criterion_5_theorem7_three_relation),
        (6, criterion_6_theorem6_proof_invariant),
        (7, criterion_7_lemma_suite),
        (8, criterion_8_oracle_equivalence),
        (9, criterion_9_continuity),
    ];
    let mut failed = Vec::new();
    for (n, run) in criteria {
        let (pass, detail) = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        println!("{} criterion {n}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(n);
        }
    }
    println!(
        "acceptance: {} of {} criteria pass{}",
        criteria.len() - failed.len(),
        criteria.len(),
        if failed.is_empty() { String::new() } else { format!(", failing {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
