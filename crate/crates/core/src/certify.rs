//! Hypothesis checks and conclusion certificates for the two main theorems,
//! plus a randomized suite for the entropy lemmas they rest on.

use serde::Serialize;

use crate::choi::{apply_channel, link, random_channel, ChoiChannel};
use crate::entropy::{afw_bound, marginal_entropy, measure, von_neumann_entropy, MeasureReport};
use crate::error::{Error, Result};
use crate::optimize::{maximize_coherent_information, OptimizationResult, OptimizerConfig};
use crate::par::{map_indexed, Execution};
use crate::process::{swap_parties, PurifiedProcess};
use crate::random::{derive_seed, random_density, random_pure, rng_from_seed, Rng64};
use crate::tensor::{sys, trace_distance, trace_norm_hermitian, LabeledOperator, Role, SystemLabel};

use rand::Rng;

/// Residual tolerance on operator identities.
pub const HYPOTHESIS_TOL: f64 = 1e-8;
/// Slack tolerance on entropy inequalities.
pub const ENTROPY_TOL: f64 = 1e-9;
/// An optimized value at or below this counts as zero.
pub const CERTIFIED_ZERO: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Theorem {
    T6,
    T7,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// Must be at most the tolerance.
    Residual,
    /// Must be at least minus the tolerance.
    Slack,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub kind: Measure,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Hypothesis {
    fn residual(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind: Measure::Residual,
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    fn slack(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind: Measure::Slack,
            value,
            tolerance,
            pass: value >= -tolerance,
        }
    }
}

/// Which environment factors played which role.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Subsystems {
    /// `e0` (Theorem 6) or `f` (Theorem 7).
    pub selected: Vec<String>,
    /// Environment factors entangled with `a1 a2 b1`.
    pub e1_group: Vec<String>,
    /// Environment factors purifying `b2`.
    pub e2_group: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub theorem: Theorem,
    pub hypotheses: Vec<Hypothesis>,
    pub hypotheses_pass: bool,
    /// Theorem 6: optimized `I^B_LO`. Theorem 7: `I^B(W^{AB})`.
    pub conclusion_value: Option<f64>,
    pub conclusion_tolerance: f64,
    pub conclusion_pass: bool,
    pub subsystems: Subsystems,
    pub measures: Option<MeasureReport>,
    pub evidence: Option<OptimizationResult>,
}

fn owned(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn check_environment_subset(wp: &PurifiedProcess, subset: &[&str], what: &str) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::BadPartition(format!("{what} must name at least one factor")));
    }
    let env = wp.environment_labels();
    for s in subset {
        if !env.contains(s) {
            return Err(Error::BadPartition(format!(
                "{what} label `{s}` is not an environment factor (have {env:?})"
            )));
        }
    }
    Ok(())
}

/// Nonempty subsets of `labels`, smallest first, in mask order within a size.
fn subsets<'a>(labels: &[&'a str]) -> Vec<Vec<&'a str>> {
    let n = labels.len();
    let mut masks: Vec<u32> = (1..(1u32 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks
        .into_iter()
        .map(|m| (0..n).filter(|k| m >> k & 1 == 1).map(|k| labels[k]).collect())
        .collect()
}

/// `1 − λ_max` of the marginal on `keep`; zero iff that marginal is pure.
fn impurity(wp: &PurifiedProcess, keep: &[&str]) -> Result<f64> {
    let l = wp.marginal(keep)?.eigenvalues()?;
    Ok((1.0 - l[0]).max(0.0))
}

/// Smallest set of environment factors that purifies `b2`, with its impurity.
/// Falls back to the least impure candidate when none is pure.
pub fn find_b2_purifier(wp: &PurifiedProcess) -> Result<(Vec<String>, f64)> {
    let env = wp.environment_labels();
    let mut best: Option<(Vec<String>, f64)> = None;
    for s in subsets(&env) {
        let mut keep = vec!["b2"];
        keep.extend(&s);
        let r = impurity(wp, &keep)?;
        if best.as_ref().is_none_or(|(_, b)| r < *b) {
            best = Some((owned(&s), r));
        }
        if r <= HYPOTHESIS_TOL {
            break;
        }
    }
    best.ok_or_else(|| Error::BadPartition("process has no environment factors".into()))
}

/// Marginal on `a1 a2` plus `third`, with `third` merged into one system called `b1`.
fn a_side_with(wp: &PurifiedProcess, third: &[&str]) -> Result<LabeledOperator> {
    let mut keep = vec!["a1", "a2"];
    keep.extend_from_slice(third);
    let m = wp.marginal(&keep)?;
    let d: usize = third.iter().map(|l| m.system(l).unwrap().dim()).product();
    let s = |name: &str| m.system(name).unwrap().clone();
    LabeledOperator::new(
        vec![s("a1"), s("a2"), sys("b1", d, Role::PartyInput)],
        m.into_matrix(),
    )
}

/// Trace distance between `W^{a1b1}_{a2}` and `W^{a1e0}_{a2}` with `e0` read as `b1`.
pub fn mirror_residual(wp: &PurifiedProcess, e0: &[&str]) -> Result<f64> {
    let lhs = a_side_with(wp, &["b1"])?;
    let rhs = a_side_with(wp, e0)?;
    let (dl, dr) = (lhs.system("b1").unwrap().dim(), rhs.system("b1").unwrap().dim());
    if dl != dr {
        return Err(Error::DimensionMismatch {
            label: "e0".into(),
            expected: dl,
            found: dr,
        });
    }
    trace_distance(&lhs, &rhs)
}

/// Trace distance between `W^{AB}` and `W^{a1b1}_{a2} ⊗ W_{b2}`.
pub fn product_form_residual(wp: &PurifiedProcess) -> Result<f64> {
    let w = wp.process().op();
    let prod = w.reduce_to(&["a1", "a2", "b1"])?.tensor(&w.reduce_to(&["b2"])?)?;
    trace_distance(w, &prod.aligned_to(w)?)
}

struct T6Hypotheses {
    hypotheses: Vec<Hypothesis>,
    subsystems: Subsystems,
}

fn thm6_hypotheses(wp: &PurifiedProcess, e0: &[&str]) -> Result<T6Hypotheses> {
    check_environment_subset(wp, e0, "e0")?;
    let (e2_group, purity_residual) = find_b2_purifier(wp)?;
    let e1_group: Vec<String> = wp
        .environment_labels()
        .into_iter()
        .filter(|l| !e2_group.iter().any(|e| e == l))
        .map(String::from)
        .collect();
    for e in e0 {
        if !e1_group.iter().any(|g| g == e) {
            return Err(Error::BadPartition(format!(
                "e0 label `{e}` is not a factor of the e1 group {e1_group:?}"
            )));
        }
    }
    let hypotheses = vec![
        Hypothesis::residual("b2_product_form", product_form_residual(wp)?, HYPOTHESIS_TOL),
        Hypothesis::residual("purification_product_structure", purity_residual, HYPOTHESIS_TOL),
        Hypothesis::residual("e0_mirrors_b1", mirror_residual(wp, e0)?, HYPOTHESIS_TOL),
    ];
    Ok(T6Hypotheses {
        hypotheses,
        subsystems: Subsystems {
            selected: owned(e0),
            e1_group,
            e2_group,
        },
    })
}

/// Checks Theorem 6's hypotheses for the factor set `e0` and, when an
/// optimizer config is given, attaches the optimized `I^B_LO` as evidence.
/// The conclusion passes when every hypothesis holds and the optimum is at
/// most [`CERTIFIED_ZERO`].
pub fn check_thm6(
    wp: &PurifiedProcess,
    e0: &[&str],
    optimizer: Option<&OptimizerConfig>,
) -> Result<CertificationReport> {
    let h = thm6_hypotheses(wp, e0)?;
    let hypotheses_pass = h.hypotheses.iter().all(|x| x.pass);
    let evidence = match optimizer {
        Some(cfg) => Some(maximize_coherent_information(wp.process(), cfg)?),
        None => None,
    };
    let conclusion_value = evidence.as_ref().map(|e| e.best_value);
    let conclusion_pass = hypotheses_pass && conclusion_value.is_some_and(|v| v <= CERTIFIED_ZERO);
    Ok(CertificationReport {
        theorem: Theorem::T6,
        hypotheses: h.hypotheses,
        hypotheses_pass,
        conclusion_value,
        conclusion_tolerance: CERTIFIED_ZERO,
        conclusion_pass,
        subsystems: h.subsystems,
        measures: Some(measure(wp.process().op(), &["b1", "b2"], &["a1", "a2"])?),
        evidence,
    })
}

/// `|I^{b1}(ω^{a'b1}) − I^{e0}(ω^{a'e0})|` after applying `m` (`a1 → a2 a'`)
/// to the `a1 a2 b1 e1` part of the purification. No hypothesis check.
pub fn thm6_proof_gap(wp: &PurifiedProcess, e0: &[&str], m: &ChoiChannel) -> Result<f64> {
    let (e2_group, _) = find_b2_purifier(wp)?;
    let mut keep: Vec<&str> = vec!["a1", "a2", "b1"];
    keep.extend(
        wp.environment_labels()
            .into_iter()
            .filter(|l| !e2_group.iter().any(|e| e == l)),
    );
    let rho = wp.marginal(&keep)?;
    let omega = link(&rho, m.op(), &["a1", "a2"])?;
    let kept: Vec<&str> = m.outputs().into_iter().filter(|o| *o != "a2").collect();
    let coherent = |target: &[&str]| -> Result<f64> {
        let mut all = kept.clone();
        all.extend_from_slice(target);
        Ok(marginal_entropy(&omega, target)? - marginal_entropy(&omega, &all)?)
    };
    Ok((coherent(&["b1"])? - coherent(e0)?).abs())
}

/// The proof-step equality `I^{b1}(ω) = I^{e0}(ω)`; requires Theorem 6's hypotheses.
pub fn check_thm6_proof_invariant(wp: &PurifiedProcess, e0: &[&str], m: &ChoiChannel) -> Result<f64> {
    let h = thm6_hypotheses(wp, e0)?;
    if let Some(bad) = h.hypotheses.iter().find(|x| !x.pass) {
        return Err(Error::HypothesisFailed(format!(
            "{} = {:e} exceeds {:e}",
            bad.name, bad.value, bad.tolerance
        )));
    }
    thm6_proof_gap(wp, e0, m)
}

/// Checks Theorem 7 with environment factors `f` standing in for its `e1`.
pub fn check_thm7(wp: &PurifiedProcess, f: &[&str]) -> Result<CertificationReport> {
    check_environment_subset(wp, f, "f")?;
    let w = wp.process();
    let sym = trace_distance(w.op(), swap_parties(w)?.op())?;
    let s = |keep: &[&str]| -> Result<f64> { von_neumann_entropy(&wp.marginal(keep)?) };
    let s_b1 = s(&["b1"])?;
    let s_f = s(f)?;
    let s_a1b2 = s(&["a1", "b2"])?;
    let mut b1f = vec!["b1"];
    b1f.extend_from_slice(f);
    let s_b1f = s(&b1f)?;
    let hypotheses = vec![
        Hypothesis::residual("party_symmetry", sym, HYPOTHESIS_TOL),
        Hypothesis::slack("S_b1_le_S_f", s_f - s_b1, ENTROPY_TOL),
        Hypothesis::slack("S_a1b2_ge_S_b1f", s_a1b2 - s_b1f, ENTROPY_TOL),
    ];
    let hypotheses_pass = hypotheses.iter().all(|h| h.pass);
    let m = measure(w.op(), &["b1", "b2"], &["a1", "a2"])?;
    let value = m.coherent_info;
    Ok(CertificationReport {
        theorem: Theorem::T7,
        hypotheses,
        hypotheses_pass,
        conclusion_value: Some(value),
        conclusion_tolerance: ENTROPY_TOL,
        conclusion_pass: hypotheses_pass && value <= ENTROPY_TOL,
        subsystems: Subsystems {
            selected: owned(f),
            ..Subsystems::default()
        },
        measures: Some(m),
        evidence: None,
    })
}

/// Every nonempty set of environment factors with its Theorem 7 report,
/// smallest sets first.
pub fn thm7_search(wp: &PurifiedProcess) -> Result<Vec<CertificationReport>> {
    let env = wp.environment_labels();
    subsets(&env).into_iter().map(|f| check_thm7(wp, &f)).collect()
}

/// First passing factor set of [`thm7_search`], if any.
pub fn find_thm7_factor(wp: &PurifiedProcess) -> Result<Option<CertificationReport>> {
    Ok(thm7_search(wp)?.into_iter().find(|r| r.hypotheses_pass))
}

// ---- lemma suite ----

/// Which states the lemma suite draws.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Full-rank Ginibre states and Haar pure states.
    #[default]
    Generic,
    /// States with one eigenvalue `1 − 1e-10`.
    NearPure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaResult {
    pub name: String,
    pub trials: usize,
    pub worst_slack: f64,
    pub nan_count: usize,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaSuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub ensemble: Ensemble,
    pub lemmas: Vec<LemmaResult>,
    pub all_pass: bool,
}

pub const LEMMAS: [&str; 5] = [
    "subadditivity",
    "strong_subadditivity",
    "purification_duality",
    "data_processing",
    "afw_continuity",
];

const NEAR_PURE_GAP: f64 = 1e-10;

fn label(name: &str, d: usize) -> SystemLabel {
    sys(name, d, Role::Ancilla)
}

fn draw_state(systems: &[SystemLabel], ensemble: Ensemble, rng: &mut Rng64) -> LabeledOperator {
    match ensemble {
        Ensemble::Generic => random_density(systems, rng),
        Ensemble::NearPure => {
            let psi = random_pure(systems, rng).density();
            let noise = random_density(systems, rng);
            psi.scale(1.0 - NEAR_PURE_GAP).add(&noise.scale(NEAR_PURE_GAP)).expect("same systems")
        }
    }
}

/// `S_A + S_B − S_AB` for a state on `a, b`.
pub fn subadditivity_slack(rho: &LabeledOperator) -> Result<f64> {
    Ok(marginal_entropy(rho, &["a"])? + marginal_entropy(rho, &["b"])? - von_neumann_entropy(rho)?)
}

/// `S_ab + S_bc − S_abc − S_b` for a state on `a, b, c`.
pub fn ssa_slack(rho: &LabeledOperator) -> Result<f64> {
    Ok(marginal_entropy(rho, &["a", "b"])? + marginal_entropy(rho, &["b", "c"])?
        - von_neumann_entropy(rho)?
        - marginal_entropy(rho, &["b"])?)
}

/// `−|I^b(ρ^{ab}) + I^e(ρ^{ae})|` for a pure state on `a, b, e`.
pub fn duality_slack(rho: &LabeledOperator) -> Result<f64> {
    let ab = rho.reduce_to(&["a", "b"])?;
    let ae = rho.reduce_to(&["a", "e"])?;
    let ib = marginal_entropy(&ab, &["b"])? - von_neumann_entropy(&ab)?;
    let ie = marginal_entropy(&ae, &["e"])? - von_neumann_entropy(&ae)?;
    Ok(-(ib + ie).abs())
}

/// `I^b(ρ) − I^c(N(ρ))` for a state on `a, b` and a channel `b → c`.
pub fn dpi_slack(rho: &LabeledOperator, n: &ChoiChannel) -> Result<f64> {
    let before = marginal_entropy(rho, &["b"])? - von_neumann_entropy(rho)?;
    let out = apply_channel(n, rho)?;
    let after = marginal_entropy(&out, &["c"])? - von_neumann_entropy(&out)?;
    Ok(before - after)
}

/// `afw_bound(ε, |a|) − |I^b(ρ) − I^b(σ)|` with `ε = ½‖ρ − σ‖₁`.
pub fn afw_slack(rho: &LabeledOperator, sigma: &LabeledOperator) -> Result<f64> {
    let eps = (0.5 * trace_norm_hermitian(rho.sub(sigma)?.matrix())?).min(1.0);
    let ib = |x: &LabeledOperator| -> Result<f64> { Ok(marginal_entropy(x, &["b"])? - von_neumann_entropy(x)?) };
    let da = rho.system("a").ok_or_else(|| Error::UnknownLabel("a".into()))?.dim();
    Ok(afw_bound(eps, da)? - (ib(rho)? - ib(sigma)?).abs())
}

fn lemma_trial(lemma: usize, dims: &[usize], ensemble: Ensemble, rng: &mut Rng64) -> Result<f64> {
    let pick = |rng: &mut Rng64| dims[rng.random_range(0..dims.len())];
    match lemma {
        0 => {
            let s = [label("a", pick(rng)), label("b", pick(rng))];
            subadditivity_slack(&draw_state(&s, ensemble, rng))
        }
        1 => {
            let s = [label("a", pick(rng)), label("b", pick(rng)), label("c", pick(rng))];
            ssa_slack(&draw_state(&s, ensemble, rng))
        }
        2 => {
            let s = [label("a", pick(rng)), label("b", pick(rng)), label("e", pick(rng))];
            duality_slack(&random_pure(&s, rng).density())
        }
        3 => {
            let (db, dc) = (pick(rng), pick(rng));
            let s = [label("a", pick(rng)), label("b", db)];
            let rho = draw_state(&s, ensemble, rng);
            let rank = rng.random_range(1..=db * dc);
            let rank = rank.max(db.div_ceil(dc));
            let n = random_channel(vec![label("b", db)], vec![label("c", dc)], rank, rng)?;
            dpi_slack(&rho, &n)
        }
        _ => {
            let s = [label("a", pick(rng)), label("b", pick(rng))];
            let rho = draw_state(&s, ensemble, rng);
            let other = draw_state(&s, ensemble, rng);
            // mix toward an independent state so ε covers small and large values
            let t: f64 = rng.random::<f64>().powi(3);
            let sigma = rho.scale(1.0 - t).add(&other.scale(t))?;
            afw_slack(&rho, &sigma)
        }
    }
}

/// Runs `trials` random instances of each lemma with subsystem dimensions drawn from `dims`.
pub fn lemma_suite(
    seed: u64,
    trials: usize,
    dims: &[usize],
    ensemble: Ensemble,
    execution: Execution,
) -> Result<LemmaSuiteReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    if dims.is_empty() || dims.iter().any(|&d| d == 0 || d > 4) {
        return Err(Error::InvalidParameter {
            name: "dims",
            value: dims.iter().copied().max().unwrap_or(0) as f64,
            reason: "dimensions must lie in 1..=4",
        });
    }
    let mut lemmas = Vec::new();
    for (li, name) in LEMMAS.iter().enumerate() {
        let lemma_seed = derive_seed(seed, li as u64);
        let slacks = map_indexed(execution, trials, |k| {
            let mut rng = rng_from_seed(derive_seed(lemma_seed, k as u64));
            lemma_trial(li, dims, ensemble, &mut rng)
        });
        let mut worst = f64::INFINITY;
        let mut nan_count = 0;
        for s in slacks {
            let s = s?;
            if s.is_nan() {
                nan_count += 1;
            } else {
                worst = worst.min(s);
            }
        }
        lemmas.push(LemmaResult {
            name: name.to_string(),
            trials,
            worst_slack: worst,
            nan_count,
            tolerance: ENTROPY_TOL,
            pass: nan_count == 0 && worst >= -ENTROPY_TOL,
        });
    }
    let all_pass = lemmas.iter().all(|l| l.pass);
    Ok(LemmaSuiteReport {
        seed,
        trials,
        dims: dims.to_vec(),
        ensemble,
        lemmas,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::max_entangled;
    use crate::optimize::{realize_local_op, LocalOpParams, LocalShape, Party};
    use crate::process::{
        build_three_relation_process, partial_swap, relabel_for_theorem6, ThreeRelationParams,
    };
    use crate::tensor::{PureVector, C64};

    fn three(alpha: [f64; 3]) -> PurifiedProcess {
        let p = ThreeRelationParams::with_default_psi(alpha.map(|x| C64::new(x, 0.0)), 2).unwrap();
        build_three_relation_process(&p).unwrap()
    }

    fn theorem6_example() -> PurifiedProcess {
        let h = 1.0 / 2f64.sqrt();
        relabel_for_theorem6(&three([h, 0.0, h])).unwrap()
    }

    fn random_op_at_a(rng: &mut Rng64) -> ChoiChannel {
        let s = LocalShape::new(Party::A, 2, 2, 2, 4).unwrap();
        realize_local_op(&LocalOpParams::random(s, rng)).unwrap()
    }

    #[test]
    fn subset_enumeration_is_smallest_first() {
        let s = subsets(&["x", "y", "z"]);
        assert_eq!(s.len(), 7);
        assert_eq!(s[0], vec!["x"]);
        assert_eq!(s[3], vec!["x", "y"]);
        assert_eq!(s[6], vec!["x", "y", "z"]);
    }

    #[test]
    fn partial_swap_half_meets_product_form_and_purification_structure() {
        let wp = partial_swap(0.5, 2).unwrap();
        let r = check_thm6(&wp, &["e1"], None).unwrap();
        assert_eq!(r.subsystems.e2_group, vec!["e2"]);
        assert_eq!(r.subsystems.e1_group, vec!["e1"]);
        assert!(r.hypotheses[0].pass && r.hypotheses[1].pass, "{:?}", r.hypotheses);
        assert!(r.conclusion_value.is_none() && !r.conclusion_pass);
    }

    /// With the unitary partial swap the `a1 e1` marginal is the complex
    /// conjugate of the `a1 b1` marginal, not the marginal itself.
    #[test]
    fn partial_swap_mirror_residual_closed_form() {
        let wp = partial_swap(0.5, 2).unwrap();
        let lhs = a_side_with(&wp, &["b1"]).unwrap();
        let rhs = a_side_with(&wp, &["e1"]).unwrap();
        assert!(trace_distance(&lhs.conj(), &rhs).unwrap() < 1e-12);
        for p in [0.0, 0.3, 0.5, 0.8] {
            let wp = partial_swap(p, 2).unwrap();
            let r = mirror_residual(&wp, &["e1"]).unwrap();
            assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-12, "p = {p}: {r}");
        }
    }

    #[test]
    fn partial_swap_off_center_fails_the_mirror_condition() {
        let wp = partial_swap(0.3, 2).unwrap();
        let r = check_thm6(&wp, &["e1"], None).unwrap();
        assert!(!r.hypotheses[2].pass && r.hypotheses[2].value > 1e-3);
        assert!(!r.conclusion_pass);
    }

    #[test]
    fn three_relation_relabeled_meets_theorem6_hypotheses() {
        let wp = theorem6_example();
        let r = check_thm6(&wp, &["e0"], None).unwrap();
        assert!(r.hypotheses_pass, "{:?}", r.hypotheses);
        assert_eq!(r.subsystems.e2_group, vec!["e2"]);
        assert_eq!(r.subsystems.e1_group, vec!["g", "e0", "e3"]);
    }

    #[test]
    fn e0_must_be_an_e1_factor() {
        let wp = partial_swap(0.5, 2).unwrap();
        assert!(matches!(check_thm6(&wp, &["e9"], None), Err(Error::BadPartition(_))));
        assert!(matches!(check_thm6(&wp, &["e2"], None), Err(Error::BadPartition(_))));
        assert!(matches!(check_thm6(&wp, &[], None), Err(Error::BadPartition(_))));
    }

    #[test]
    fn proof_invariant_holds_where_hypotheses_hold() {
        let wp = theorem6_example();
        let mut rng = rng_from_seed(70);
        let id = {
            let s = LocalShape::new(Party::A, 2, 2, 2, 4).unwrap();
            realize_local_op(&LocalOpParams::zeros(s)).unwrap()
        };
        assert!(check_thm6_proof_invariant(&wp, &["e0"], &id).unwrap() <= 1e-8);
        for _ in 0..20 {
            let m = random_op_at_a(&mut rng);
            assert!(check_thm6_proof_invariant(&wp, &["e0"], &m).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn proof_invariant_rejects_broken_hypotheses() {
        let mut rng = rng_from_seed(71);
        let m = random_op_at_a(&mut rng);
        let wp = partial_swap(0.3, 2).unwrap();
        assert!(matches!(
            check_thm6_proof_invariant(&wp, &["e1"], &m),
            Err(Error::HypothesisFailed(_))
        ));
        // the unchecked gap is generically nonzero there
        assert!(thm6_proof_gap(&wp, &["e1"], &m).unwrap() >= 0.0);
    }

    #[test]
    fn theorem7_example_certifies() {
        let s = 1.0 / 3f64.sqrt();
        let wp = three([s, s, s]);
        let found = find_thm7_factor(&wp).unwrap().expect("a passing factor");
        assert_eq!(found.subsystems.selected, vec!["e1"]);
        assert!(found.conclusion_pass);
        let v = found.conclusion_value.unwrap();
        assert!((v - (-1.175_161_781_699_545_7)).abs() < 1e-10, "{v}");
        let m = found.measures.as_ref().unwrap();
        assert!((m.s_b - 2.0).abs() < 1e-10);
        assert!((m.s_ab - 3.175_161_781_699_545_7).abs() < 1e-10);
        // mutual-information corollary
        let s_a = m.mutual_info - m.coherent_info;
        assert!(m.mutual_info <= s_a + 1e-9);
        // e1 is the only passing factor, up to adding the trivial e3
        let passing: Vec<Vec<String>> = thm7_search(&wp)
            .unwrap()
            .into_iter()
            .filter(|r| r.hypotheses_pass)
            .map(|r| r.subsystems.selected)
            .collect();
        assert_eq!(passing, vec![vec!["e1".to_string()], vec!["e1".to_string(), "e3".to_string()]]);
    }

    #[test]
    fn asymmetric_process_fails_theorem7_symmetry() {
        let wp = three([1.0, 0.0, 0.0]);
        let r = check_thm7(&wp, &["e1"]).unwrap();
        assert!(!r.hypotheses[0].pass && !r.conclusion_pass);
    }

    #[test]
    fn product_process_passes_theorem7_for_single_factors() {
        let q = |n: &str, r: Role| sys(n, 2, r);
        let mut v: Option<PureVector> = None;
        for (p, e, r) in [("a1", "e1", Role::PartyInput), ("a2", "e2", Role::PartyOutput), ("b1", "e3", Role::PartyInput), ("b2", "e4", Role::PartyOutput)] {
            let f = max_entangled(q(p, r), q(e, Role::Environment)).unwrap();
            v = Some(match v {
                None => f,
                Some(x) => x.tensor(&f).unwrap(),
            });
        }
        let wp = PurifiedProcess::new(v.unwrap()).unwrap();
        for f in ["e1", "e2", "e3", "e4"] {
            let r = check_thm7(&wp, &[f]).unwrap();
            assert!(r.conclusion_pass, "{f}: {:?}", r.hypotheses);
            // S_B − S_AB = 2 − 4
            assert!((r.conclusion_value.unwrap() + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lemma_suite_passes_on_small_dims() {
        let r = lemma_suite(3, 100, &[2], Ensemble::Generic, Execution::default()).unwrap();
        assert!(r.all_pass, "{:?}", r.lemmas);
        assert_eq!(r.lemmas.len(), 5);
        let r = lemma_suite(4, 50, &[2, 3], Ensemble::NearPure, Execution::default()).unwrap();
        assert!(r.all_pass && r.lemmas.iter().all(|l| l.nan_count == 0), "{:?}", r.lemmas);
    }

    #[test]
    fn lemma_suite_is_reproducible() {
        let a = lemma_suite(5, 20, &[2, 3], Ensemble::Generic, Execution::Parallel).unwrap();
        let b = lemma_suite(5, 20, &[2, 3], Ensemble::Generic, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(lemma_suite(5, 0, &[2], Ensemble::Generic, Execution::default()).is_err());
        assert!(lemma_suite(5, 1, &[5], Ensemble::Generic, Execution::default()).is_err());
    }

    #[test]
    fn ssa_on_a_fixed_state() {
        let phi = max_entangled(label("a", 2), label("b", 2)).unwrap();
        let rho = phi
            .tensor(&PureVector::basis(vec![label("c", 2)], 0).unwrap())
            .unwrap()
            .density();
        // S_ab = 0, S_bc = 1, S_abc = 0, S_b = 1
        assert!(ssa_slack(&rho).unwrap().abs() < 1e-12);
        let phi3 = max_entangled(label("b", 2), label("c", 2)).unwrap();
        let rho = PureVector::basis(vec![label("a", 2)], 0).unwrap().tensor(&phi3).unwrap().density();
        assert!(ssa_slack(&rho).unwrap().abs() < 1e-12);
    }
}
