//! Channels as trace-1 Choi states and their composition.
//!
//! A channel `N: X → Y` is stored as `(id_X ⊗ N)(|Φ+⟩⟨Φ+|)` with the unit-norm
//! maximally entangled vector, so every Choi operator has trace 1. Composition
//! over shared wires carries the compensating factor `d_shared`:
//!
//! ```text
//! link(x, y; S) = d_S · Tr_S[(x^{T_S} ⊗ 1)(1 ⊗ y)]
//! ```
//!
//! which maps trace-1 Choi states of CPTP maps to the trace-1 Choi state of the
//! sequential composite, and maps `(state, channel)` to the output state.

use rand::Rng;

use crate::error::{Error, Result};
use crate::random::haar_isometry;
use crate::tensor::{
    eigh, positions_of, trace_norm_hermitian, LabeledOperator, Mat, PureVector, SystemLabel,
    Vector, C64, PSD_TOL, ZERO,
};

/// Trace tolerance for Choi states.
pub const TRACE_TOL: f64 = 1e-10;
/// Trace-preservation tolerance (trace norm of `Tr_out C − π_in`).
pub const CPTP_TOL: f64 = 1e-9;
/// Unitarity tolerance for `choi_of_unitary`.
pub const UNITARY_TOL: f64 = 1e-10;

fn side(systems: &[SystemLabel]) -> usize {
    systems.iter().map(SystemLabel::dim).product()
}

/// `d_S · Tr_S[(x^{T_S} ⊗ 1)(1 ⊗ y)]` over the shared labels.
///
/// The result carries `x`'s remaining systems followed by `y`'s.
pub fn link(x: &LabeledOperator, y: &LabeledOperator, shared: &[&str]) -> Result<LabeledOperator> {
    if shared.is_empty() {
        return Err(Error::NoSharedSystems);
    }
    positions_of(x.systems(), shared)?;
    positions_of(y.systems(), shared)?;
    for s in shared {
        let (dx, dy) = (x.system(s).unwrap().dim(), y.system(s).unwrap().dim());
        if dx != dy {
            return Err(Error::DimensionMismatch {
                label: s.to_string(),
                expected: dx,
                found: dy,
            });
        }
    }
    let x_rest: Vec<&str> = x.labels().into_iter().filter(|l| !shared.contains(l)).collect();
    let y_rest: Vec<&str> = y.labels().into_iter().filter(|l| !shared.contains(l)).collect();

    let mut x_order = x_rest.clone();
    x_order.extend_from_slice(shared);
    let mut y_order = shared.to_vec();
    y_order.extend_from_slice(&y_rest);
    let xp = x.permute_systems(&x_order)?;
    let yp = y.permute_systems(&y_order)?;

    let ds = xp.dim_of(shared)?;
    let dx = xp.side() / ds;
    let dy = yp.side() / ds;
    let xm = xp.matrix();
    let ym = yp.matrix();

    let xt = Mat::from_fn(dx * dx, ds * ds, |r, c| {
        let (i, ip) = (r / dx, r % dx);
        let (sp, s) = (c / ds, c % ds);
        xm[(i * ds + sp, ip * ds + s)]
    });
    let yt = Mat::from_fn(ds * ds, dy * dy, |r, c| {
        let (sp, s) = (r / ds, r % ds);
        let (k, kp) = (c / dy, c % dy);
        ym[(sp * dy + k, s * dy + kp)]
    });
    let prod = xt * yt;
    let scale = ds as f64;
    let out = Mat::from_fn(dx * dy, dx * dy, |r, c| {
        let (i, k) = (r / dy, r % dy);
        let (ip, kp) = (c / dy, c % dy);
        prod[(i * dx + ip, k * dy + kp)] * scale
    });

    let mut systems: Vec<SystemLabel> = x_rest
        .iter()
        .map(|l| x.system(l).unwrap().clone())
        .collect();
    systems.extend(y_rest.iter().map(|l| y.system(l).unwrap().clone()));
    LabeledOperator::new(systems, out)
}

/// `(1/d_in) Σ_r V[(o,r),i] conj(V[(O,r),j])` at `[(i,o),(j,O)]`, unchecked.
pub(crate) fn stinespring_choi(isometry: &Mat, din: usize, dout: usize, remainder: usize) -> Mat {
    let n = din * dout;
    let mut m = Mat::zeros(n, n);
    let w = 1.0 / din as f64;
    for i in 0..din {
        for j in 0..din {
            for o in 0..dout {
                for op in 0..dout {
                    let mut acc = ZERO;
                    for r in 0..remainder {
                        acc += isometry[(o * remainder + r, i)]
                            * isometry[(op * remainder + r, j)].conj();
                    }
                    m[(i * dout + o, j * dout + op)] = acc * w;
                }
            }
        }
    }
    m
}

/// A CPTP map stored as its trace-1 Choi state.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiChannel {
    op: LabeledOperator,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl ChoiChannel {
    /// Validates positivity, unit trace and trace preservation.
    pub fn new(op: LabeledOperator, inputs: &[&str], outputs: &[&str]) -> Result<Self> {
        let ch = Self::unchecked(op, inputs, outputs)?;
        let tr = ch.op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::TraceDeviation((tr - 1.0).norm()));
        }
        let min = ch.op.min_eigenvalue()?;
        if min < PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        let resid = ch.cptp_residual()?;
        if resid > CPTP_TOL {
            return Err(Error::Format(format!(
                "channel is not trace preserving (residual {resid:e})"
            )));
        }
        Ok(ch)
    }

    fn unchecked(op: LabeledOperator, inputs: &[&str], outputs: &[&str]) -> Result<Self> {
        let mut all: Vec<&str> = inputs.to_vec();
        all.extend_from_slice(outputs);
        let pos = positions_of(op.systems(), &all)?;
        if pos.len() != op.systems().len() {
            return Err(Error::BadPartition(
                "inputs and outputs must cover every system of the Choi operator".into(),
            ));
        }
        Ok(Self {
            op,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn inputs(&self) -> Vec<&str> {
        self.inputs.iter().map(String::as_str).collect()
    }

    pub fn outputs(&self) -> Vec<&str> {
        self.outputs.iter().map(String::as_str).collect()
    }

    /// Trace norm of `Tr_out C − π_in`.
    pub fn cptp_residual(&self) -> Result<f64> {
        let marg = self.op.reduce_to(&self.inputs())?;
        let pi = LabeledOperator::maximally_mixed(marg.systems().to_vec())?;
        trace_norm_hermitian(&(marg.matrix() - pi.matrix()))
    }

    /// Choi state of `V ρ V†` followed by tracing `remainder`.
    /// `isometry` maps the input space into `outputs ⊗ remainder` (rows in that order).
    pub fn from_stinespring(
        isometry: &Mat,
        inputs: Vec<SystemLabel>,
        outputs: Vec<SystemLabel>,
        remainder: usize,
    ) -> Result<Self> {
        let din = side(&inputs);
        let dout = side(&outputs);
        if isometry.ncols() != din || isometry.nrows() != dout * remainder {
            return Err(Error::ShapeMismatch {
                expected: dout * remainder,
                found: isometry.nrows(),
            });
        }
        let m = stinespring_choi(isometry, din, dout, remainder);
        let in_names: Vec<String> = inputs.iter().map(|s| s.name().to_string()).collect();
        let out_names: Vec<String> = outputs.iter().map(|s| s.name().to_string()).collect();
        let mut systems = inputs;
        systems.extend(outputs);
        let op = LabeledOperator::new(systems, m)?;
        let ins: Vec<&str> = in_names.iter().map(String::as_str).collect();
        let outs: Vec<&str> = out_names.iter().map(String::as_str).collect();
        Self::new(op, &ins, &outs)
    }

    /// Sequential composite `next ∘ self` over the wires `self` outputs and `next` consumes.
    pub fn then(&self, next: &ChoiChannel) -> Result<ChoiChannel> {
        let shared: Vec<&str> = self
            .outputs()
            .into_iter()
            .filter(|o| next.inputs.iter().any(|i| i == o))
            .collect();
        let op = link(&self.op, &next.op, &shared)?;
        let inputs: Vec<&str> = self
            .inputs()
            .into_iter()
            .chain(next.inputs().into_iter().filter(|i| !shared.contains(i)))
            .collect();
        let outputs: Vec<&str> = self
            .outputs()
            .into_iter()
            .filter(|o| !shared.contains(o))
            .chain(next.outputs())
            .collect();
        ChoiChannel::new(op, &inputs, &outputs)
    }

    /// Kraus operators from the Choi eigendecomposition (maps `inputs → outputs`).
    pub fn kraus(&self) -> Result<Vec<Mat>> {
        let mut order = self.inputs();
        order.extend(self.outputs());
        let c = self.op.permute_systems(&order)?;
        let din = c.dim_of(&self.inputs())?;
        let dout = c.side() / din;
        let e = eigh(c.matrix())?;
        let mut out = Vec::new();
        for (k, &mu) in e.values.iter().enumerate() {
            if mu <= 1e-14 {
                continue;
            }
            let s = (mu * din as f64).sqrt();
            out.push(Mat::from_fn(dout, din, |o, i| e.vectors[(i * dout + o, k)] * s));
        }
        Ok(out)
    }
}

/// Applies `ch` to the `ch.inputs()` systems of `rho`; other systems pass through.
pub fn apply_channel(ch: &ChoiChannel, rho: &LabeledOperator) -> Result<LabeledOperator> {
    let inputs = ch.inputs();
    for i in &inputs {
        if !rho.has(i) {
            return Err(Error::UnknownLabel(i.to_string()));
        }
    }
    link(rho, ch.op(), &inputs)
}

fn unitary_defect(u: &Mat) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - Mat::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Choi state of `ρ ↦ U ρ U†`, with `U` mapping `inputs` (columns) to `outputs` (rows).
pub fn choi_of_unitary(
    u: &Mat,
    inputs: Vec<SystemLabel>,
    outputs: Vec<SystemLabel>,
) -> Result<ChoiChannel> {
    if side(&inputs) != side(&outputs) || u.nrows() != u.ncols() || u.ncols() != side(&inputs) {
        return Err(Error::ShapeMismatch {
            expected: side(&inputs),
            found: u.ncols(),
        });
    }
    let defect = unitary_defect(u);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    ChoiChannel::from_stinespring(u, inputs, outputs, 1)
}

/// The two-wire unitary `√(1−p)·𝟙 + i√p·SWAP` as a matrix from `(x1, x2)` to `(y1, y2)`.
pub fn partial_swap_unitary(p: f64, d: usize) -> Result<Mat> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "must lie in [0, 1]",
        });
    }
    let n = d * d;
    let (c, s) = ((1.0 - p).sqrt(), p.sqrt());
    let mut u = Mat::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            let col = a * d + b;
            u[(col, col)] += C64::new(c, 0.0);
            u[(b * d + a, col)] += C64::new(0.0, s);
        }
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialSwapParams {
    pub p: f64,
    pub d: usize,
}

impl PartialSwapParams {
    pub fn new(p: f64, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "must lie in [0, 1]",
            });
        }
        if d == 0 {
            return Err(Error::ZeroDimension("d".into()));
        }
        Ok(Self { p, d })
    }
}

/// Choi state of the partial swap: the identity part sends `x1→y1, x2→y2`,
/// the swap part sends `x1→y2, x2→y1`.
pub fn partial_swap_channel(
    params: PartialSwapParams,
    inputs: [SystemLabel; 2],
    outputs: [SystemLabel; 2],
) -> Result<ChoiChannel> {
    for s in inputs.iter().chain(outputs.iter()) {
        if s.dim() != params.d {
            return Err(Error::DimensionMismatch {
                label: s.name().to_string(),
                expected: params.d,
                found: s.dim(),
            });
        }
    }
    let u = partial_swap_unitary(params.p, params.d)?;
    choi_of_unitary(&u, inputs.to_vec(), outputs.to_vec())
}

/// `(1/√d) Σ_i |ii⟩` on `(x, y)`.
pub fn max_entangled(x: SystemLabel, y: SystemLabel) -> Result<PureVector> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            label: y.name().to_string(),
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let d = x.dim();
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = Vector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    PureVector::normalized(vec![x, y], v)
}

/// Eigenvalues at or below this count as zero when measuring rank.
pub const RANK_FLOOR: f64 = 1e-12;

/// Canonical purification `Σ_k √λ_k |v_k⟩ ⊗ |k⟩_env`.
pub fn purify(rho: &LabeledOperator, env: SystemLabel) -> Result<PureVector> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::TraceDeviation((tr - 1.0).norm()));
    }
    let e = rho.eigen_decompose()?;
    if e.min() < PSD_TOL {
        return Err(Error::NotPsd(e.min()));
    }
    let rank = e.values.iter().filter(|&&l| l > RANK_FLOOR).count();
    if env.dim() < rank {
        return Err(Error::InsufficientEnvironment {
            rank,
            dim: env.dim(),
        });
    }
    let n = rho.side();
    let de = env.dim();
    let mut v = Vector::zeros(n * de);
    for (k, &l) in e.values.iter().enumerate().take(rank) {
        let w = l.sqrt();
        for i in 0..n {
            v[i * de + k] += e.vectors[(i, k)] * w;
        }
    }
    let mut systems = rho.systems().to_vec();
    systems.push(env);
    PureVector::normalized(systems, v)
}

/// Random CPTP map with Kraus rank `kraus_rank`, via a Haar isometry.
pub fn random_channel<R: Rng + ?Sized>(
    inputs: Vec<SystemLabel>,
    outputs: Vec<SystemLabel>,
    kraus_rank: usize,
    rng: &mut R,
) -> Result<ChoiChannel> {
    if side(&outputs) * kraus_rank < side(&inputs) {
        return Err(Error::InvalidParameter {
            name: "kraus_rank",
            value: kraus_rank as f64,
            reason: "output dimension times Kraus rank must cover the input dimension",
        });
    }
    let v = haar_isometry(side(&outputs) * kraus_rank, side(&inputs), rng);
    ChoiChannel::from_stinespring(&v, inputs, outputs, kraus_rank)
}
