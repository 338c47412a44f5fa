//! Bipartite process matrices over `a1, a2, b1, b2`, validity checks and the
//! two example families.
//!
//! `a1`/`b1` are the parties' inputs (what the process delivers) and
//! `a2`/`b2` their outputs (what the process consumes). Process matrices use
//! the same trace-1 normalization as Choi states.

use serde::Serialize;

use crate::choi::{link, max_entangled, partial_swap_channel, partial_swap_unitary, ChoiChannel, PartialSwapParams};
use crate::error::{Error, Result};
use crate::tensor::{
    sys, trace_distance, LabeledOperator, Mat, PureVector, Role,
    SystemLabel, Vector, C64, HERMITIAN_TOL, PSD_TOL, ZERO,
};

/// Canonical party order.
pub const PARTY_LABELS: [&str; 4] = ["a1", "a2", "b1", "b2"];
pub const PROCESS_TRACE_TOL: f64 = 1e-10;
pub const LV_TOL: f64 = 1e-8;
pub const FACTORIZATION_TOL: f64 = 1e-8;

fn party_role(name: &str) -> Role {
    match name {
        "a1" | "b1" => Role::PartyInput,
        _ => Role::PartyOutput,
    }
}

/// Party systems `a1, a2, b1, b2`, all of dimension `d`.
pub fn party_systems(d: usize) -> Vec<SystemLabel> {
    PARTY_LABELS.iter().map(|n| sys(n, d, party_role(n))).collect()
}

/// A process matrix `W^{a1 b1}_{a2 b2}` stored in canonical party order.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    op: LabeledOperator,
}

impl ProcessMatrix {
    /// Accepts any operator over exactly the four party labels, in any order.
    /// Validity is not checked here; see [`validate`].
    pub fn new(op: LabeledOperator) -> Result<Self> {
        for l in PARTY_LABELS {
            if !op.has(l) {
                return Err(Error::MissingPartyLabel(l.to_string()));
            }
        }
        if op.systems().len() != PARTY_LABELS.len() {
            let extra: Vec<&str> = op
                .labels()
                .into_iter()
                .filter(|l| !PARTY_LABELS.contains(l))
                .collect();
            return Err(Error::BadPartition(format!(
                "non-party systems {extra:?}; trace the environment first"
            )));
        }
        let op = op.permute_systems(&PARTY_LABELS)?;
        let systems = op
            .systems()
            .iter()
            .map(|s| s.with_role(party_role(s.name())))
            .collect();
        Ok(Self {
            op: op.with_systems(systems)?,
        })
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn into_op(self) -> LabeledOperator {
        self.op
    }

    pub fn dim(&self, label: &str) -> usize {
        self.op.system(label).map_or(0, SystemLabel::dim)
    }

    /// The product process `π ⊗ π ⊗ π ⊗ π`.
    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::new(LabeledOperator::maximally_mixed(party_systems(d))?)
    }
}

/// `⟨W⟩_X = Tr_X W ⊗ 𝟙_X / d_X`, returned in `w`'s system order.
pub fn trace_replace(w: &LabeledOperator, xs: &[&str]) -> Result<LabeledOperator> {
    let traced: Vec<SystemLabel> = xs
        .iter()
        .map(|x| w.system(x).cloned().ok_or_else(|| Error::UnknownLabel(x.to_string())))
        .collect::<Result<_>>()?;
    let pi = LabeledOperator::maximally_mixed(traced)?;
    w.partial_trace(xs)?.tensor(&pi)?.permute_systems(&w.labels())
}

/// Projector onto the valid-process subspace.
pub fn project_valid(w: &ProcessMatrix) -> Result<LabeledOperator> {
    let op = w.op();
    let terms: [(f64, &[&str]); 7] = [
        (1.0, &["b2"]),
        (1.0, &["a2"]),
        (-1.0, &["a2", "b2"]),
        (-1.0, &["b1", "b2"]),
        (1.0, &["a2", "b1", "b2"]),
        (-1.0, &["a1", "a2"]),
        (1.0, &["a1", "a2", "b2"]),
    ];
    let mut acc = Mat::zeros(op.side(), op.side());
    for (sign, xs) in terms {
        acc += trace_replace(op, xs)?.matrix() * C64::new(sign, 0.0);
    }
    LabeledOperator::new(op.systems().to_vec(), acc)
}

/// Trace norm of `x − y` as a sum of singular values, so it is defined for
/// non-Hermitian (corrupted) input too.
fn tn(x: &LabeledOperator, y: &LabeledOperator) -> Result<f64> {
    Ok(x.sub(y)?.into_matrix().singular_values().sum())
}

/// Outcome of [`validate`]. Residuals are trace norms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    pub hermiticity_defect: f64,
    /// Of the Hermitian part when `W` is not Hermitian.
    pub min_eigenvalue: f64,
    pub trace_deviation: f64,
    pub lv_residual: f64,
    /// The three trace-and-replace conditions, in the order
    /// `⟨b1b2⟩ = ⟨a2b1b2⟩`, `⟨a1a2⟩ = ⟨a1a2b2⟩`, `W = ⟨a2⟩ + ⟨b2⟩ − ⟨a2b2⟩`.
    pub condition_residuals: [f64; 3],
    pub factorization_residual: f64,
    pub positive: bool,
    pub normalized: bool,
    pub in_valid_subspace: bool,
    pub valid: bool,
}

fn hermitian_part(w: &ProcessMatrix) -> Result<ProcessMatrix> {
    let op = w.op();
    Ok(ProcessMatrix {
        op: op.map_matrix(|m| (m + m.adjoint()).scale(0.5))?,
    })
}

pub fn validate(w: &ProcessMatrix) -> Result<ValidityReport> {
    let op = w.op();
    let hermiticity_defect = op.hermiticity_defect();
    let herm = hermitian_part(w)?;
    let min_eigenvalue = herm.op().min_eigenvalue()?;
    let tr = op.trace();
    let trace_deviation = (tr - 1.0).norm();
    let lv_residual = tn(op, &project_valid(w)?)?;
    let tr_r = |xs: &[&str]| trace_replace(op, xs);
    let c1 = tn(&tr_r(&["b1", "b2"])?, &tr_r(&["a2", "b1", "b2"])?)?;
    let c2 = tn(&tr_r(&["a1", "a2"])?, &tr_r(&["a1", "a2", "b2"])?)?;
    let rhs = tr_r(&["a2"])?.add(&tr_r(&["b2"])?)?.sub(&tr_r(&["a2", "b2"])?)?;
    let c3 = tn(op, &rhs)?;
    let factorization_residual = check_factorization(&herm)?;
    let hermitian = hermiticity_defect <= HERMITIAN_TOL;
    let positive = hermitian && min_eigenvalue >= PSD_TOL;
    let normalized = trace_deviation <= PROCESS_TRACE_TOL;
    let in_valid_subspace = lv_residual <= LV_TOL;
    Ok(ValidityReport {
        hermiticity_defect,
        min_eigenvalue,
        trace_deviation,
        lv_residual,
        condition_residuals: [c1, c2, c3],
        factorization_residual,
        positive,
        normalized,
        in_valid_subspace,
        valid: positive && normalized && in_valid_subspace,
    })
}

/// Trace distance between `Tr_{b1} W` and `W^{a1}_{b2} ⊗ W_{a2}`.
pub fn check_factorization(w: &ProcessMatrix) -> Result<f64> {
    let op = w.op();
    let lhs = op.reduce_to(&["a1", "a2", "b2"])?;
    let a1b2 = op.reduce_to(&["a1", "b2"])?;
    let a2 = op.reduce_to(&["a2"])?;
    let prod = a1b2.tensor(&a2)?.aligned_to(&lhs)?;
    trace_distance(&lhs, &prod)
}

/// Exchanges the parties: `(a1, a2) ↔ (b1, b2)`.
pub fn swap_parties(w: &ProcessMatrix) -> Result<ProcessMatrix> {
    for (x, y) in [("a1", "b1"), ("a2", "b2")] {
        if w.dim(x) != w.dim(y) {
            return Err(Error::DimensionMismatch {
                label: y.to_string(),
                expected: w.dim(x),
                found: w.dim(y),
            });
        }
    }
    let systems = w
        .op()
        .systems()
        .iter()
        .map(|s| {
            let to = match s.name() {
                "a1" => "b1",
                "a2" => "b2",
                "b1" => "a1",
                _ => "a2",
            };
            s.renamed(to)
        })
        .collect();
    ProcessMatrix::new(w.op().with_systems(systems)?)
}

/// Tolerance on the purification round trip.
pub const PURIFICATION_TOL: f64 = 1e-9;

/// A pure vector over the party labels plus environment/global labels, with
/// the process obtained by tracing everything but the parties.
#[derive(Clone, Debug, PartialEq)]
pub struct PurifiedProcess {
    vector: PureVector,
    process: ProcessMatrix,
}

impl PurifiedProcess {
    pub fn new(vector: PureVector) -> Result<Self> {
        let process = ProcessMatrix::new(vector.reduced(&PARTY_LABELS)?)?;
        Ok(Self { vector, process })
    }

    pub fn vector(&self) -> &PureVector {
        &self.vector
    }

    pub fn process(&self) -> &ProcessMatrix {
        &self.process
    }

    /// Non-party labels in vector order.
    pub fn environment_labels(&self) -> Vec<&str> {
        self.vector
            .labels()
            .into_iter()
            .filter(|l| !PARTY_LABELS.contains(l))
            .collect()
    }

    /// Marginal of the purifying vector on `keep`.
    pub fn marginal(&self, keep: &[&str]) -> Result<LabeledOperator> {
        self.vector.reduced(keep)
    }

    /// Trace distance between the traced vector and the stored process.
    pub fn round_trip_residual(&self) -> Result<f64> {
        let traced = self.vector.reduced(&PARTY_LABELS)?;
        trace_distance(&traced, self.process.op())
    }

    /// Renames one environment label (party labels are fixed).
    pub fn rename_environment(&self, from: &str, to: &str) -> Result<Self> {
        if PARTY_LABELS.contains(&from) || PARTY_LABELS.contains(&to) {
            return Err(Error::BadPartition(format!("cannot rename `{from}` to `{to}`")));
        }
        Ok(Self {
            vector: self.vector.rename(from, to)?,
            process: self.process.clone(),
        })
    }
}

fn state_vector(rho: &LabeledOperator, what: &str) -> Result<PureVector> {
    let e = rho.eigen_decompose()?;
    if e.values.len() > 1 && e.values[1] > 1e-10 {
        return Err(Error::HypothesisFailed(format!(
            "{what} must be pure (rank one) for a purified output; second eigenvalue {:e}",
            e.values[1]
        )));
    }
    PureVector::normalized(rho.systems().to_vec(), e.vectors.column(0).clone_owned())
}

fn check_partial_swap_inputs(
    params: PartialSwapParams,
    rho: &LabeledOperator,
    n: &ChoiChannel,
) -> Result<()> {
    let d = params.d;
    let mut rho_labels = rho.labels();
    rho_labels.sort_unstable();
    if rho_labels != ["a1", "a1'"] {
        return Err(Error::BadPartition("ρ must act on exactly `a1` and `a1'`".into()));
    }
    if n.inputs() != ["a2"] || n.outputs() != ["a2'"] {
        return Err(Error::BadPartition("N must map `a2` to `a2'`".into()));
    }
    for s in rho.systems().iter().chain(n.op().systems()) {
        if s.dim() != d {
            return Err(Error::DimensionMismatch {
                label: s.name().to_string(),
                expected: d,
                found: s.dim(),
            });
        }
    }
    if !rho.is_density() {
        return Err(Error::NotPsd(rho.min_eigenvalue()?));
    }
    Ok(())
}

fn swap_io(d: usize) -> ([SystemLabel; 2], [SystemLabel; 2]) {
    (
        [sys("a1'", d, Role::Ancilla), sys("a2'", d, Role::Ancilla)],
        [sys("b1", d, Role::PartyInput), sys("e1", d, Role::Environment)],
    )
}

/// `W^{a1b1}_{a2} ⊗ π_{b2}` with `W^{a1b1}_{a2} = Tr_{e1} P(p) ∗ ρ^{a1a1'} ∗ N^{a2'}_{a2}`.
///
/// `ρ` acts on `a1, a1'`; `N` maps `a2 → a2'`; the partial swap takes
/// `(a1', a2')` to `(b1, e1)`.
pub fn partial_swap_process(
    params: PartialSwapParams,
    rho: &LabeledOperator,
    n: &ChoiChannel,
) -> Result<ProcessMatrix> {
    check_partial_swap_inputs(params, rho, n)?;
    let d = params.d;
    let (ins, outs) = swap_io(d);
    let ps = partial_swap_channel(params, ins, outs)?;
    let joint = rho.tensor(n.op())?;
    let w = link(&joint, ps.op(), &["a1'", "a2'"])?;
    let pi_b2 = LabeledOperator::maximally_mixed(vec![sys("b2", d, Role::PartyOutput)])?;
    ProcessMatrix::new(w.partial_trace(&["e1"])?.tensor(&pi_b2)?)
}

/// Purified partial-swap process over `a1, a2, b1, b2, e1, e2`: `e1` is the
/// discarded swap output and `e2` purifies `π_{b2}`. Needs `ρ` pure and `N` unitary.
pub fn build_partial_swap_process(
    params: PartialSwapParams,
    rho: &LabeledOperator,
    n: &ChoiChannel,
) -> Result<PurifiedProcess> {
    check_partial_swap_inputs(params, rho, n)?;
    let d = params.d;
    let rv = state_vector(rho, "ρ")?;
    let nv = state_vector(n.op(), "the Choi state of N")?;
    let u = partial_swap_unitary(params.p, d)?;
    let v = rv
        .tensor(&nv)?
        .apply(&["a1'", "a2'"], &u)?
        .rename("a1'", "b1")?
        .rename("a2'", "e1")?;
    let b2e2 = max_entangled(sys("b2", d, Role::PartyOutput), sys("e2", d, Role::Environment))?;
    let v = v
        .tensor(&b2e2)?
        .permute_systems(&["a1", "a2", "b1", "b2", "e1", "e2"])?;
    let v = with_roles(v)?;
    PurifiedProcess::new(v)
}

/// `ρ = Φ+^{a1a1'}` and `N = id`.
pub fn default_partial_swap_inputs(d: usize) -> Result<(LabeledOperator, ChoiChannel)> {
    let rho = max_entangled(sys("a1", d, Role::PartyInput), sys("a1'", d, Role::Ancilla))?.density();
    let n = crate::choi::choi_of_unitary(
        &Mat::identity(d, d),
        vec![sys("a2", d, Role::PartyOutput)],
        vec![sys("a2'", d, Role::Ancilla)],
    )?;
    Ok((rho, n))
}

/// Purified partial-swap process with the default inputs.
pub fn partial_swap(p: f64, d: usize) -> Result<PurifiedProcess> {
    let params = PartialSwapParams::new(p, d)?;
    let (rho, n) = default_partial_swap_inputs(d)?;
    build_partial_swap_process(params, &rho, &n)
}

fn role_of(name: &str) -> Role {
    if PARTY_LABELS.contains(&name) {
        party_role(name)
    } else if name == "g" {
        Role::Global
    } else {
        Role::Environment
    }
}

fn with_roles(v: PureVector) -> Result<PureVector> {
    let systems = v.systems().iter().map(|s| s.with_role(role_of(s.name()))).collect();
    PureVector::new(systems, v.amplitudes().clone())
}

/// Amplitude tolerance on `‖α‖ = 1`.
pub const ALPHA_NORM_TOL: f64 = 1e-12;

/// Parameters of the three-relation family: branch amplitudes `α` and the
/// tripartite vector `Ψ` (slots `x, y, z` by position).
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeRelationParams {
    pub alpha: [C64; 3],
    pub psi: PureVector,
    pub d: usize,
}

impl ThreeRelationParams {
    pub fn new(alpha: [C64; 3], psi: PureVector, d: usize) -> Result<Self> {
        let norm = alpha.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > ALPHA_NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        if psi.systems().len() != 3 {
            return Err(Error::BadPartition("Ψ must have exactly three slots".into()));
        }
        for s in &psi.systems()[..2] {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    label: s.name().to_string(),
                    expected: d,
                    found: s.dim(),
                });
            }
        }
        Ok(Self { alpha, psi, d })
    }

    /// `Ψ = Φ+^{xy} ⊗ |0⟩^z` with a one-dimensional `z`.
    pub fn default_psi(d: usize) -> Result<PureVector> {
        let phi = max_entangled(sys("x", d, Role::Environment), sys("y", d, Role::Environment))?;
        phi.tensor(&PureVector::basis(vec![sys("z", 1, Role::Environment)], 0)?)
    }

    pub fn with_default_psi(alpha: [C64; 3], d: usize) -> Result<Self> {
        Self::new(alpha, Self::default_psi(d)?, d)
    }

    /// Real amplitudes `(sinθ cosφ, sinθ sinφ, cosθ)` times optional phases.
    pub fn from_angles(theta: f64, phi: f64, phases: [f64; 3], d: usize) -> Result<Self> {
        let mags = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let alpha = [0, 1, 2].map(|k| C64::from_polar(mags[k], phases[k]));
        Self::with_default_psi(alpha, d)
    }

    pub fn dim_z(&self) -> usize {
        self.psi.systems()[2].dim()
    }
}

/// Canonical label order of the three-relation vector.
pub const THREE_RELATION_LABELS: [&str; 8] = ["g", "a1", "a2", "b1", "b2", "e1", "e2", "e3"];

/// `|w(α)⟩ = α1|1⟩Ψ^{a1e2e3}I^{a2b1}I^{b2e1} + α2|2⟩Ψ^{e1b1e3}I^{b2a1}I^{a2e2}
///         + α3|3⟩Ψ^{a1b1e3}I^{a2e1}I^{b2e2}`, with `g` indices shifted to `0, 1, 2`.
pub fn build_three_relation_process(params: &ThreeRelationParams) -> Result<PurifiedProcess> {
    let d = params.d;
    let dz = params.dim_z();
    let l = |name: &str| sys(name, if name == "e3" { dz } else { d }, role_of(name));
    let psi_on = |x: &str, y: &str, z: &str| {
        PureVector::new(vec![l(x), l(y), l(z)], params.psi.amplitudes().clone())
    };
    let ent = |x: &str, y: &str| max_entangled(l(x), l(y));
    let g = |k: usize| PureVector::basis(vec![sys("g", 3, Role::Global)], k);

    let branches = [
        g(0)?.tensor(&psi_on("a1", "e2", "e3")?)?.tensor(&ent("a2", "b1")?)?.tensor(&ent("b2", "e1")?)?,
        g(1)?.tensor(&psi_on("e1", "b1", "e3")?)?.tensor(&ent("b2", "a1")?)?.tensor(&ent("a2", "e2")?)?,
        g(2)?.tensor(&psi_on("a1", "b1", "e3")?)?.tensor(&ent("a2", "e1")?)?.tensor(&ent("b2", "e2")?)?,
    ];
    let mut amps = Vector::zeros(3 * d.pow(6) * dz);
    let mut systems = Vec::new();
    for (alpha, b) in params.alpha.iter().zip(branches) {
        let b = b.permute_systems(&THREE_RELATION_LABELS)?;
        amps += b.amplitudes() * *alpha;
        systems = b.systems().to_vec();
    }
    PurifiedProcess::new(PureVector::normalized(systems, amps)?)
}

/// Applies the environment unitary that swaps `e1 ↔ e2` on the `g = 1` branch
/// (index 0), then renames `e1` to `e0`. The result is another purification of
/// the same process in which `e1 = g·e0·e3` and `e2` purifies `b2`.
pub fn relabel_for_theorem6(wp: &PurifiedProcess) -> Result<PurifiedProcess> {
    let v = wp.vector();
    let (d1, d2) = match (
        v.systems().iter().find(|s| s.name() == "e1"),
        v.systems().iter().find(|s| s.name() == "e2"),
    ) {
        (Some(a), Some(b)) => (a.dim(), b.dim()),
        _ => return Err(Error::BadPartition("need environment labels e1 and e2".into())),
    };
    if d1 != d2 {
        return Err(Error::DimensionMismatch {
            label: "e2".into(),
            expected: d1,
            found: d2,
        });
    }
    let d = d1;
    let n = 3 * d * d;
    let mut u = Mat::from_element(n, n, ZERO);
    for k in 0..3 {
        for i in 0..d {
            for j in 0..d {
                let col = (k * d + i) * d + j;
                let row = if k == 0 { (k * d + j) * d + i } else { col };
                u[(row, col)] = C64::new(1.0, 0.0);
            }
        }
    }
    let out = v.apply(&["g", "e1", "e2"], &u)?.rename("e1", "e0")?;
    PurifiedProcess::new(out)
}
