//! Coherent information under local operations without communication.
//!
//! Each party applies a channel from its input to its output plus a kept
//! system (`a1 → a2 a'` at A, `b1 → b2 b'` at B). The channel is realized by
//! a unitary on `input ⊗ ancilla`, fed `|i⟩ ⊗ |0⟩`, whose output splits as
//! `(output, kept, remainder)` with the remainder discarded. The figure of
//! merit is `I^{b'}(ω^{a'b'}) = S(b') − S(a'b')`.
//!
//! The search runs projected gradient ascent on the isometries themselves
//! (Stiefel manifold, polar retraction, Armijo backtracking). The entropy
//! gradient needs no eigenvector derivatives:
//! `dI = Tr[(log₂ ω − 𝟙 ⊗ log₂ ω_{b'}) dω]`.

use serde::{Deserialize, Serialize};

use crate::choi::{link, stinespring_choi, ChoiChannel};
use crate::entropy::{coherent_information, log2_psd, spectrum_entropy};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::process::ProcessMatrix;
use crate::random::{derive_seed, haar_isometry, rng_from_seed, Rng64};
use crate::tensor::{eigh, sys, LabeledOperator, Mat, Role, SystemLabel, C64, ZERO};

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    /// `(input, output, kept)` labels.
    pub fn labels(self) -> (&'static str, &'static str, &'static str) {
        match self {
            Party::A => ("a1", "a2", "a'"),
            Party::B => ("b1", "b2", "b'"),
        }
    }
}

/// Shape of one party's dilation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalShape {
    pub party: Party,
    pub input_dim: usize,
    pub output_dim: usize,
    pub kept_dim: usize,
    pub ancilla_dim: usize,
}

impl LocalShape {
    pub fn new(
        party: Party,
        input_dim: usize,
        output_dim: usize,
        kept_dim: usize,
        ancilla_dim: usize,
    ) -> Result<Self> {
        for (name, v) in [
            ("input_dim", input_dim),
            ("output_dim", output_dim),
            ("kept_dim", kept_dim),
            ("ancilla_dim", ancilla_dim),
        ] {
            if v == 0 {
                return Err(Error::ZeroDimension(name.into()));
            }
        }
        let s = Self {
            party,
            input_dim,
            output_dim,
            kept_dim,
            ancilla_dim,
        };
        if !s.dilated().is_multiple_of(output_dim * kept_dim) {
            return Err(Error::InvalidParameter {
                name: "ancilla_dim",
                value: ancilla_dim as f64,
                reason: "input_dim * ancilla_dim must be a multiple of output_dim * kept_dim",
            });
        }
        Ok(s)
    }

    /// Side of the dilated unitary.
    pub fn dilated(&self) -> usize {
        self.input_dim * self.ancilla_dim
    }

    /// Dimension of the discarded remainder.
    pub fn remainder(&self) -> usize {
        self.dilated() / (self.output_dim * self.kept_dim)
    }

    pub fn param_count(&self) -> usize {
        self.dilated() * self.dilated()
    }

    fn systems(&self) -> (SystemLabel, SystemLabel, SystemLabel) {
        let (i, o, k) = self.party.labels();
        (
            sys(i, self.input_dim, Role::PartyInput),
            sys(o, self.output_dim, Role::PartyOutput),
            sys(k, self.kept_dim, Role::Ancilla),
        )
    }

    /// Choi state of the channel realized by `isometry` (no checks).
    fn choi(&self, isometry: &Mat) -> LabeledOperator {
        let (i, o, k) = self.systems();
        let m = stinespring_choi(
            isometry,
            self.input_dim,
            self.output_dim * self.kept_dim,
            self.remainder(),
        );
        LabeledOperator::new(vec![i, o, k], m).expect("shape from dilation")
    }
}

/// A local operation as a real generator of the dilated unitary `exp(iH)`.
///
/// `parameters` holds the `n` diagonal entries of `H`, then the real parts and
/// then the imaginary parts of the strict upper triangle (row-major).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalOpParams {
    pub shape: LocalShape,
    pub parameters: Vec<f64>,
}

fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

impl LocalOpParams {
    pub fn new(shape: LocalShape, parameters: Vec<f64>) -> Result<Self> {
        if parameters.len() != shape.param_count() {
            return Err(Error::ShapeMismatch {
                expected: shape.param_count(),
                found: parameters.len(),
            });
        }
        Ok(Self { shape, parameters })
    }

    pub fn zeros(shape: LocalShape) -> Self {
        Self {
            parameters: vec![0.0; shape.param_count()],
            shape,
        }
    }

    pub fn random<R: Rng + ?Sized>(shape: LocalShape, rng: &mut R) -> Self {
        let pi = std::f64::consts::PI;
        let parameters = (0..shape.param_count()).map(|_| rng.random_range(-pi..=pi)).collect();
        Self { shape, parameters }
    }

    pub fn generator(&self) -> Mat {
        let n = self.shape.dilated();
        let mut h = Mat::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = C64::new(self.parameters[i], 0.0);
        }
        let m = n * (n - 1) / 2;
        for (k, (i, j)) in upper_pairs(n).enumerate() {
            let z = C64::new(self.parameters[n + k], self.parameters[n + m + k]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
        h
    }

    pub fn unitary(&self) -> Mat {
        let e = eigh(&self.generator()).expect("generator is Hermitian by construction");
        let n = e.values.len();
        let mut scaled = e.vectors.clone();
        for (j, &l) in e.values.iter().enumerate() {
            let ph = C64::from_polar(1.0, l);
            for i in 0..n {
                scaled[(i, j)] *= ph;
            }
        }
        scaled * e.vectors.adjoint()
    }

    /// Columns of the unitary at `|i⟩ ⊗ |0⟩_anc`.
    pub fn isometry(&self) -> Mat {
        let u = self.unitary();
        let anc = self.shape.ancilla_dim;
        Mat::from_fn(u.nrows(), self.shape.input_dim, |r, i| u[(r, i * anc)])
    }

    /// Parameters whose isometry is `isometry` (unitary completion, then a logarithm).
    pub fn from_isometry(shape: LocalShape, isometry: &Mat) -> Result<Self> {
        let n = shape.dilated();
        let anc = shape.ancilla_dim;
        if isometry.nrows() != n || isometry.ncols() != shape.input_dim {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: isometry.nrows(),
            });
        }
        let u = complete_unitary(isometry, anc);
        let (q, t) = u.schur().unpack();
        let mut d = Mat::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = C64::new(t[(i, i)].arg(), 0.0);
        }
        let h = &q * d * q.adjoint();
        let m = n * (n - 1) / 2;
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            p[i] = h[(i, i)].re;
        }
        for (k, (i, j)) in upper_pairs(n).enumerate() {
            p[n + k] = h[(i, j)].re;
            p[n + m + k] = h[(i, j)].im;
        }
        Self::new(shape, p)
    }
}

/// Unitary whose columns `i·anc` are the columns of `v`; the rest are filled
/// by Gram-Schmidt against the standard basis.
fn complete_unitary(v: &Mat, anc: usize) -> Mat {
    let n = v.nrows();
    let k = v.ncols();
    let mut cols: Vec<nalgebra::DVector<C64>> = (0..k).map(|i| v.column(i).clone_owned()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = nalgebra::DVector::<C64>::zeros(n);
        w[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&w);
                w -= c * proj;
            }
        }
        let nrm = w.norm();
        if nrm > 1e-6 {
            cols.push(w.unscale(nrm));
        }
    }
    let mut u = Mat::zeros(n, n);
    let mut extra = k;
    for j in 0..n {
        let src = if j % anc == 0 && j / anc < k {
            j / anc
        } else {
            let s = extra;
            extra += 1;
            s
        };
        u.set_column(j, &cols[src]);
    }
    u
}

/// The channel `input → output ⊗ kept` realized by `params`.
pub fn realize_local_op(params: &LocalOpParams) -> Result<ChoiChannel> {
    let s = params.shape;
    if params.parameters.len() != s.param_count() {
        return Err(Error::ShapeMismatch {
            expected: s.param_count(),
            found: params.parameters.len(),
        });
    }
    let (i, o, k) = s.systems();
    ChoiChannel::from_stinespring(&params.isometry(), vec![i], vec![o, k], s.remainder())
}

fn check_local_op(ch: &ChoiChannel, party: Party) -> Result<()> {
    let (i, o, k) = party.labels();
    let mut outs = ch.outputs();
    outs.sort_unstable();
    let mut want = vec![o, k];
    want.sort_unstable();
    if ch.inputs() != [i] || outs != want {
        return Err(Error::LabelMismatch);
    }
    Ok(())
}

/// `ω^{a'b'}` produced by applying `m_a` and `m_b` to `w`.
pub fn apply_local_ops(w: &ProcessMatrix, m_a: &ChoiChannel, m_b: &ChoiChannel) -> Result<LabeledOperator> {
    check_local_op(m_a, Party::A)?;
    check_local_op(m_b, Party::B)?;
    let t = link(w.op(), m_a.op(), &["a1", "a2"])?;
    link(&t, m_b.op(), &["b1", "b2"])?.permute_systems(&["a'", "b'"])
}

/// `I^{b'}` of the state produced by `(pa, pb)`, through the general link path.
pub fn evaluate_local_ops(w: &ProcessMatrix, pa: &LocalOpParams, pb: &LocalOpParams) -> Result<f64> {
    let omega = apply_local_ops(w, &realize_local_op(pa)?, &realize_local_op(pb)?)?;
    coherent_information(&omega, &["b'"], &["a'"])
}

/// Kept and ancilla dimensions for both parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoDims {
    pub kept_dim: usize,
    pub ancilla_dim: usize,
}

impl LoDims {
    /// Caps relative to each party's input dimension `d`: `kept ≤ d²`, `ancilla ≤ d²`.
    pub fn shapes(&self, w: &ProcessMatrix) -> Result<(LocalShape, LocalShape)> {
        let mk = |party: Party| {
            let (i, o, _) = party.labels();
            let d = w.dim(i);
            for (name, v) in [("kept_dim", self.kept_dim), ("ancilla_dim", self.ancilla_dim)] {
                if v > d * d {
                    return Err(Error::InvalidParameter {
                        name,
                        value: v as f64,
                        reason: "exceeds the cap d^2",
                    });
                }
            }
            LocalShape::new(party, d, w.dim(o), self.kept_dim, self.ancilla_dim)
        };
        Ok((mk(Party::A)?, mk(Party::B)?))
    }

    /// `kept = d`, `ancilla = d²` with `d` the larger input dimension.
    pub fn default_for(w: &ProcessMatrix) -> Self {
        let d = w.dim("a1").max(w.dim("b1"));
        Self {
            kept_dim: d,
            ancilla_dim: d * d,
        }
    }
}

/// Settings for [`maximize_coherent_information`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Objective evaluations per restart (gradient evaluations included).
    pub budget: usize,
    pub kept_dim: Option<usize>,
    pub ancilla_dim: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            budget: 2000,
            kept_dim: None,
            ancilla_dim: None,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn dims(&self, w: &ProcessMatrix) -> LoDims {
        let def = LoDims::default_for(w);
        LoDims {
            kept_dim: self.kept_dim.unwrap_or(def.kept_dim),
            ancilla_dim: self.ancilla_dim.unwrap_or(def.ancilla_dim),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_value: f64,
    pub best_params: (LocalOpParams, LocalOpParams),
    pub restarts: usize,
    pub seed: u64,
    /// Best value reached by each restart, in restart order.
    pub restart_maxima: Vec<f64>,
    /// Value of the canonical embedding (zero parameters), always a candidate.
    pub baseline_value: f64,
    pub kept_dim: usize,
    pub ancilla_dim: usize,
    pub budget: usize,
    pub evaluations: usize,
    pub method: String,
}

/// Fast evaluator for one process and pair of shapes.
pub(crate) struct Objective<'a> {
    w: &'a LabeledOperator,
    sa: LocalShape,
    sb: LocalShape,
}

pub(crate) struct Evaluation {
    pub value: f64,
    pub grad_a: Mat,
    pub grad_b: Mat,
}

fn entropy_and_log(m: &Mat) -> Result<(f64, Mat)> {
    let s = spectrum_entropy(&eigh(m)?.values);
    Ok((s, log2_psd(m)?))
}

impl<'a> Objective<'a> {
    pub fn new(w: &'a ProcessMatrix, sa: LocalShape, sb: LocalShape) -> Self {
        Self { w: w.op(), sa, sb }
    }

    fn omega(&self, ca: &LabeledOperator, cb: &LabeledOperator) -> Result<(LabeledOperator, LabeledOperator)> {
        let ya = link(self.w, ca, &["a1", "a2"])?;
        let omega = link(&ya, cb, &["b1", "b2"])?;
        Ok((omega, ya))
    }

    fn coherent(omega: &LabeledOperator) -> Result<f64> {
        let s_ab = spectrum_entropy(&omega.eigenvalues()?);
        let s_b = spectrum_entropy(&omega.partial_trace(&["a'"])?.eigenvalues()?);
        Ok(s_b - s_ab)
    }

    pub fn value(&self, va: &Mat, vb: &Mat) -> Result<f64> {
        let (omega, _) = self.omega(&self.sa.choi(va), &self.sb.choi(vb))?;
        Self::coherent(&omega)
    }

    /// Value plus Euclidean gradients (real inner product `Re tr(X†Y)`).
    pub fn evaluate(&self, va: &Mat, vb: &Mat) -> Result<Evaluation> {
        let ca = self.sa.choi(va);
        let cb = self.sb.choi(vb);
        let (omega, ya) = self.omega(&ca, &cb)?;
        let omega_b = omega.partial_trace(&["a'"])?;
        let (s_ab, log_ab) = entropy_and_log(omega.matrix())?;
        let (s_b, log_b) = entropy_and_log(omega_b.matrix())?;
        let ka = self.sa.kept_dim;
        let g = log_ab - Mat::identity(ka, ka).kronecker(&log_b);
        let g = LabeledOperator::new(omega.systems().to_vec(), g)?.conj();

        // Γ_A from W ∗ C_B and Γ_B from W ∗ C_A, each contracted with conj(G)
        let yb = link(self.w, &cb, &["b1", "b2"])?;
        let ka_f = (self.sa.input_dim * self.sa.output_dim) as f64;
        let kb_f = (self.sb.input_dim * self.sb.output_dim) as f64;
        let gamma_a = link(&yb, &g.permute_systems(&["b'", "a'"])?, &["b'"])?
            .scale(ka_f / self.sb.kept_dim as f64);
        let gamma_b = link(&ya, &g, &["a'"])?.scale(kb_f / self.sa.kept_dim as f64);
        Ok(Evaluation {
            value: s_b - s_ab,
            grad_a: isometry_gradient(&self.sa, gamma_a.matrix(), va),
            grad_b: isometry_gradient(&self.sb, gamma_b.matrix(), vb),
        })
    }
}

/// `conj(X)` with `X[(o,k,r),i] = (2/d) Σ_{jOK} Γ[(i,o,k),(j,O,K)] conj(V[(O,K,r),j])`.
fn isometry_gradient(s: &LocalShape, gamma: &Mat, v: &Mat) -> Mat {
    let din = s.input_dim;
    let ok = s.output_dim * s.kept_dim;
    let rem = s.remainder();
    let w = 2.0 / din as f64;
    Mat::from_fn(v.nrows(), din, |row, i| {
        let (o, r) = (row / rem, row % rem);
        let mut acc = ZERO;
        for j in 0..din {
            for oo in 0..ok {
                acc += gamma[(i * ok + o, j * ok + oo)] * v[(oo * rem + r, j)].conj();
            }
        }
        (acc * w).conj()
    })
}

/// Projection of `g` onto the tangent space of the Stiefel manifold at `v`.
fn tangent(v: &Mat, g: &Mat) -> Mat {
    let m = v.adjoint() * g;
    let sym = (&m + m.adjoint()).scale(0.5);
    g - v * sym
}

/// Polar retraction: the closest isometry to `m`.
fn polar(m: &Mat) -> Mat {
    let svd = m.clone().svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

fn frob2(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-20;

pub(crate) struct AscentResult {
    pub value: f64,
    pub va: Mat,
    pub vb: Mat,
    pub evaluations: usize,
}

/// Projected gradient ascent from `(va, vb)` with at most `budget` evaluations.
pub(crate) fn ascend(obj: &Objective<'_>, mut va: Mat, mut vb: Mat, budget: usize) -> Result<AscentResult> {
    let mut e = obj.evaluate(&va, &vb)?;
    let mut evals = 1;
    let mut step = 1.0;
    'outer: while evals < budget {
        let xa = tangent(&va, &e.grad_a);
        let xb = tangent(&vb, &e.grad_b);
        let n2 = frob2(&xa) + frob2(&xb);
        if n2 < GRAD_TOL {
            break;
        }
        loop {
            if evals >= budget {
                break 'outer;
            }
            let ca = polar(&(&va + &xa * C64::new(step, 0.0)));
            let cb = polar(&(&vb + &xb * C64::new(step, 0.0)));
            let f = obj.value(&ca, &cb)?;
            evals += 1;
            if f >= e.value + ARMIJO_C * step * n2 {
                va = ca;
                vb = cb;
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                break 'outer;
            }
        }
        if evals >= budget {
            e.value = obj.value(&va, &vb)?;
            break;
        }
        e = obj.evaluate(&va, &vb)?;
        evals += 1;
        step = (step * 2.0).min(16.0);
    }
    Ok(AscentResult {
        value: e.value,
        va,
        vb,
        evaluations: evals,
    })
}

/// Canonical embedding of the input: `|i⟩ ↦ |i·anc⟩`.
fn embedding(s: &LocalShape) -> Mat {
    LocalOpParams::zeros(*s).isometry()
}

pub const METHOD: &str = "stiefel-gradient-ascent";

/// Best `I^{b'}` over local operations, from `restarts` random starts.
pub fn maximize_coherent_information(w: &ProcessMatrix, config: &OptimizerConfig) -> Result<OptimizationResult> {
    if config.restarts == 0 {
        return Err(Error::InvalidParameter {
            name: "restarts",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    if config.budget == 0 {
        return Err(Error::InvalidParameter {
            name: "budget",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let dims = config.dims(w);
    let (sa, sb) = dims.shapes(w)?;
    let obj = Objective::new(w, sa, sb);
    let (ea, eb) = (embedding(&sa), embedding(&sb));
    let baseline_value = obj.value(&ea, &eb)?;

    let runs: Vec<Result<AscentResult>> = map_indexed(config.execution, config.restarts, |k| {
        let mut rng: Rng64 = rng_from_seed(derive_seed(config.seed, k as u64));
        let va = haar_isometry(sa.dilated(), sa.input_dim, &mut rng);
        let vb = haar_isometry(sb.dilated(), sb.input_dim, &mut rng);
        ascend(&obj, va, vb, config.budget)
    });
    let runs: Vec<AscentResult> = runs.into_iter().collect::<Result<_>>()?;

    let restart_maxima: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let evaluations = runs.iter().map(|r| r.evaluations).sum::<usize>() + 1;
    // first strict maximum wins, so ties resolve by restart index
    let best = runs
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |acc, (k, r)| match acc {
            Some((_, v)) if v >= r.value => acc,
            _ => Some((k, r.value)),
        })
        .expect("at least one restart");
    let (best_value, best_params) = if best.1 > baseline_value {
        let r = &runs[best.0];
        (
            r.value,
            (
                LocalOpParams::from_isometry(sa, &r.va)?,
                LocalOpParams::from_isometry(sb, &r.vb)?,
            ),
        )
    } else {
        (baseline_value, (LocalOpParams::zeros(sa), LocalOpParams::zeros(sb)))
    };
    Ok(OptimizationResult {
        best_value,
        best_params,
        restarts: config.restarts,
        seed: config.seed,
        restart_maxima,
        baseline_value,
        kept_dim: dims.kept_dim,
        ancilla_dim: dims.ancilla_dim,
        budget: config.budget,
        evaluations,
        method: METHOD.to_string(),
    })
}

/// Maximum `I^{b'}` over `samples` independent uniform parameter draws in
/// `[−π, π]`, evaluated through the general link path.
pub fn brute_force_lo_bound(
    w: &ProcessMatrix,
    samples: usize,
    seed: u64,
    dims: LoDims,
    execution: Execution,
) -> Result<f64> {
    let (sa, sb) = dims.shapes(w)?;
    let vals: Vec<Result<f64>> = map_indexed(execution, samples.max(1), |k| {
        let mut rng = rng_from_seed(derive_seed(seed, k as u64));
        let pa = LocalOpParams::random(sa, &mut rng);
        let pb = LocalOpParams::random(sb, &mut rng);
        evaluate_local_ops(w, &pa, &pb)
    });
    let mut best = f64::NEG_INFINITY;
    for v in vals {
        best = best.max(v?);
    }
    Ok(best)
}
