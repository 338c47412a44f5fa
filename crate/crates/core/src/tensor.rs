//! Labeled finite-dimensional operator algebra.
//!
//! Every operator carries an ordered list of named systems. Flat indices are
//! row-major over that list (the first system is the most significant digit),
//! which is the usual Kronecker convention: `x ⊗ y` has `x`'s systems first.

use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Largest matrix side accepted by the dense representation.
pub const MAX_SIDE: usize = 1024;
/// Hermiticity tolerance for accepting an operator into the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Minimum eigenvalue tolerated before an operator counts as non-PSD.
pub const PSD_TOL: f64 = -1e-9;
/// Asymmetry threshold behind the stored `hermitian` flag.
const HERMITIAN_FLAG_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    PartyInput,
    PartyOutput,
    Environment,
    Ancilla,
    Global,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::PartyInput => "party-input",
            Role::PartyOutput => "party-output",
            Role::Environment => "environment",
            Role::Ancilla => "ancilla",
            Role::Global => "global",
        };
        f.write_str(s)
    }
}

/// A named wire of fixed dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemLabel {
    name: String,
    dim: usize,
    role: Role,
}

impl SystemLabel {
    pub fn new(name: impl Into<String>, dim: usize, role: Role) -> Result<Self> {
        let name = name.into();
        if dim == 0 {
            return Err(Error::ZeroDimension(name));
        }
        Ok(Self { name, dim, role })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..self.clone()
        }
    }

    pub fn with_role(&self, role: Role) -> Self {
        Self {
            role,
            ..self.clone()
        }
    }
}

/// Shorthand used heavily by constructors and tests.
pub fn sys(name: &str, dim: usize, role: Role) -> SystemLabel {
    SystemLabel::new(name, dim, role).expect("dimension must be positive")
}

fn check_unique(systems: &[SystemLabel]) -> Result<()> {
    let mut seen = HashSet::new();
    for s in systems {
        if !seen.insert(s.name()) {
            return Err(Error::DuplicateLabel(s.name().to_string()));
        }
    }
    Ok(())
}

fn side_of(systems: &[SystemLabel]) -> usize {
    systems.iter().map(SystemLabel::dim).product()
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        out[k] = out[k + 1] * dims[k + 1];
    }
    out
}

/// Flat offsets of every multi-index over the systems at `positions`,
/// measured in the strides of the full layout.
fn offsets(dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(out.len() * dims[p]);
        for &o in &out {
            for i in 0..dims[p] {
                next.push(o + i * st[p]);
            }
        }
        out = next;
    }
    out
}

pub(crate) fn positions_of(systems: &[SystemLabel], names: &[&str]) -> Result<Vec<usize>> {
    let mut seen = HashSet::new();
    names
        .iter()
        .map(|n| {
            if !seen.insert(*n) {
                return Err(Error::DuplicateLabel(n.to_string()));
            }
            systems
                .iter()
                .position(|s| s.name() == *n)
                .ok_or_else(|| Error::UnknownLabel(n.to_string()))
        })
        .collect()
}

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl Eigen {
    pub fn reconstruct(&self) -> Mat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            for i in 0..n {
                scaled[(i, j)] *= l;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Max |m_ij - conj(m_ji)|.
pub fn hermiticity_defect(m: &Mat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian eigendecomposition of a bare matrix.
pub fn eigh(m: &Mat) -> Result<Eigen> {
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let h = (m + m.adjoint()).scale(0.5);
    let se = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = Mat::from_fn(m.nrows(), m.ncols(), |i, j| se.eigenvectors[(i, order[j])]);
    Ok(Eigen { values, vectors })
}

/// Hermitian eigenvalues only, descending.
pub fn eigvalsh(m: &Mat) -> Result<Vec<f64>> {
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let h = (m + m.adjoint()).scale(0.5);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &Mat) -> Result<f64> {
    Ok(eigvalsh(m)?.iter().map(|l| l.abs()).sum())
}

/// A dense complex operator over an ordered list of labeled systems.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    systems: Vec<SystemLabel>,
    matrix: Mat,
    hermitian: bool,
}

impl LabeledOperator {
    pub fn new(systems: Vec<SystemLabel>, matrix: Mat) -> Result<Self> {
        check_unique(&systems)?;
        let side = side_of(&systems);
        if side > MAX_SIDE {
            return Err(Error::TooLarge(side));
        }
        if matrix.nrows() != side || matrix.ncols() != side {
            return Err(Error::ShapeMismatch {
                expected: side,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let hermitian = hermiticity_defect(&matrix) <= HERMITIAN_FLAG_TOL;
        Ok(Self {
            systems,
            matrix,
            hermitian,
        })
    }

    pub fn identity(systems: Vec<SystemLabel>) -> Result<Self> {
        let n = side_of(&systems);
        Self::new(systems, Mat::identity(n, n))
    }

    /// Maximally mixed state `1/d` over the given systems.
    pub fn maximally_mixed(systems: Vec<SystemLabel>) -> Result<Self> {
        let n = side_of(&systems);
        Self::new(systems, Mat::identity(n, n).scale(1.0 / n as f64))
    }

    /// Rank-one projector onto the computational basis state `index`.
    pub fn basis_projector(systems: Vec<SystemLabel>, index: usize) -> Result<Self> {
        let n = side_of(&systems);
        let mut m = Mat::zeros(n, n);
        if index >= n {
            return Err(Error::InvalidParameter {
                name: "index",
                value: index as f64,
                reason: "basis index exceeds the operator side",
            });
        }
        m[(index, index)] = ONE;
        Self::new(systems, m)
    }

    pub fn systems(&self) -> &[SystemLabel] {
        &self.systems
    }

    pub fn labels(&self) -> Vec<&str> {
        self.systems.iter().map(SystemLabel::name).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.systems.iter().map(SystemLabel::dim).collect()
    }

    pub fn system(&self, name: &str) -> Option<&SystemLabel> {
        self.systems.iter().find(|s| s.name() == name)
    }

    pub fn has(&self, name: &str) -> bool {
        self.system(name).is_some()
    }

    pub fn dim_of(&self, names: &[&str]) -> Result<usize> {
        let pos = positions_of(&self.systems, names)?;
        Ok(pos.iter().map(|&p| self.systems[p].dim()).product())
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat {
        self.matrix
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    /// Whether the stored entries are Hermitian to within 1e-12.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigvalsh(&self.matrix)?.last().copied().unwrap_or(0.0))
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue().is_ok_and(|m| m >= PSD_TOL)
    }

    pub fn is_density(&self) -> bool {
        self.is_psd() && (self.trace().re - 1.0).abs() <= 1e-8 && self.trace().im.abs() <= 1e-8
    }

    pub fn map_matrix(&self, f: impl FnOnce(&Mat) -> Mat) -> Result<Self> {
        Self::new(self.systems.clone(), f(&self.matrix))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.systems.clone(), self.matrix.scale(s)).expect("same shape")
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.systems.clone(), self.matrix.adjoint()).expect("same shape")
    }

    /// `self + other`, with `other` reordered to this operator's system order.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let o = other.aligned_to(self)?;
        Self::new(self.systems.clone(), &self.matrix + o.matrix)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let o = other.aligned_to(self)?;
        Self::new(self.systems.clone(), &self.matrix - o.matrix)
    }

    /// Operator product on identical systems.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let o = other.aligned_to(self)?;
        Self::new(self.systems.clone(), &self.matrix * o.matrix)
    }

    /// Reorders `self` to match the system order of `reference`.
    pub fn aligned_to(&self, reference: &Self) -> Result<Self> {
        if self.systems.len() != reference.systems.len() {
            return Err(Error::LabelMismatch);
        }
        for s in &reference.systems {
            match self.system(s.name()) {
                Some(mine) if mine.dim() == s.dim() => {}
                Some(mine) => {
                    return Err(Error::DimensionMismatch {
                        label: s.name().to_string(),
                        expected: s.dim(),
                        found: mine.dim(),
                    })
                }
                None => return Err(Error::LabelMismatch),
            }
        }
        self.permute_systems(&reference.labels())
    }

    /// Renames one system, keeping its position, dimension and role.
    pub fn rename(&self, from: &str, to: &str) -> Result<Self> {
        let pos = positions_of(&self.systems, &[from])?[0];
        let mut systems = self.systems.clone();
        systems[pos] = systems[pos].renamed(to);
        Self::new(systems, self.matrix.clone())
    }

    pub fn with_systems(&self, systems: Vec<SystemLabel>) -> Result<Self> {
        if systems.iter().map(SystemLabel::dim).collect::<Vec<_>>() != self.dims() {
            return Err(Error::LabelMismatch);
        }
        Self::new(systems, self.matrix.clone())
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut systems = self.systems.clone();
        systems.extend(other.systems.iter().cloned());
        check_unique(&systems)?;
        Self::new(systems, self.matrix.kronecker(&other.matrix))
    }

    /// Traces out `discard`, keeping the remaining systems in their original order.
    pub fn partial_trace(&self, discard: &[&str]) -> Result<Self> {
        let tpos = positions_of(&self.systems, discard)?;
        let kpos: Vec<usize> = (0..self.systems.len()).filter(|p| !tpos.contains(p)).collect();
        let dims = self.dims();
        let kept = offsets(&dims, &kpos);
        let traced = offsets(&dims, &tpos);
        let n = kept.len();
        let mut out = Mat::zeros(n, n);
        for (r, &kr) in kept.iter().enumerate() {
            for (c, &kc) in kept.iter().enumerate() {
                let mut acc = ZERO;
                for &t in &traced {
                    acc += self.matrix[(kr + t, kc + t)];
                }
                out[(r, c)] = acc;
            }
        }
        let systems = kpos.iter().map(|&p| self.systems[p].clone()).collect();
        Self::new(systems, out)
    }

    /// Keeps only `keep` (in the order given), tracing everything else.
    pub fn reduce_to(&self, keep: &[&str]) -> Result<Self> {
        positions_of(&self.systems, keep)?;
        let discard: Vec<&str> = self
            .labels()
            .into_iter()
            .filter(|l| !keep.contains(l))
            .collect();
        self.partial_trace(&discard)?.permute_systems(keep)
    }

    /// Reorders systems; entries are conjugated by the index permutation.
    pub fn permute_systems(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.systems.len() {
            return Err(Error::NotPermutation);
        }
        let pos = positions_of(&self.systems, order).map_err(|e| match e {
            Error::UnknownLabel(_) | Error::DuplicateLabel(_) => Error::NotPermutation,
            other => other,
        })?;
        if pos.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let map = offsets(&self.dims(), &pos);
        let n = map.len();
        let out = Mat::from_fn(n, n, |r, c| self.matrix[(map[r], map[c])]);
        let systems = pos.iter().map(|&p| self.systems[p].clone()).collect();
        Self::new(systems, out)
    }

    /// Transposes the row and column digits of the systems in `subset`.
    pub fn partial_transpose(&self, subset: &[&str]) -> Result<Self> {
        let spos = positions_of(&self.systems, subset)?;
        let kpos: Vec<usize> = (0..self.systems.len()).filter(|p| !spos.contains(p)).collect();
        let dims = self.dims();
        let n = self.side();
        // split[flat] = (offset of the kept digits, offset of the subset digits)
        let mut split = vec![(0usize, 0usize); n];
        for &k in &offsets(&dims, &kpos) {
            for &s in &offsets(&dims, &spos) {
                split[k + s] = (k, s);
            }
        }
        let out = Mat::from_fn(n, n, |r, c| {
            let (rk, rs) = split[r];
            let (ck, cs) = split[c];
            self.matrix[(rk + cs, ck + rs)]
        });
        Self::new(self.systems.clone(), out)
    }

    pub fn eigen_decompose(&self) -> Result<Eigen> {
        eigh(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigvalsh(&self.matrix)
    }

    /// Replaces every entry by its complex conjugate.
    pub fn conj(&self) -> Self {
        Self::new(self.systems.clone(), self.matrix.map(|z| z.conj())).expect("same shape")
    }
}

/// `½‖x − y‖₁`; `y` is reordered to `x`'s systems first.
pub fn trace_distance(x: &LabeledOperator, y: &LabeledOperator) -> Result<f64> {
    let diff = x.sub(y)?;
    Ok(0.5 * trace_norm_hermitian(diff.matrix())?)
}

/// A unit-norm pure state over labeled systems.
#[derive(Clone, Debug, PartialEq)]
pub struct PureVector {
    systems: Vec<SystemLabel>,
    amplitudes: Vector,
}

/// Norm tolerance on pure vectors.
pub const NORM_TOL: f64 = 1e-12;

impl PureVector {
    pub fn new(systems: Vec<SystemLabel>, amplitudes: Vector) -> Result<Self> {
        check_unique(&systems)?;
        let side = side_of(&systems);
        if amplitudes.len() != side {
            return Err(Error::ShapeMismatch {
                expected: side,
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            systems,
            amplitudes,
        })
    }

    /// Normalizes before validating; fails only on a zero vector or bad shape.
    pub fn normalized(systems: Vec<SystemLabel>, amplitudes: Vector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::new(systems, amplitudes.unscale(norm))
    }

    pub fn basis(systems: Vec<SystemLabel>, index: usize) -> Result<Self> {
        let n = side_of(&systems);
        let mut v = Vector::zeros(n);
        if index >= n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: index,
            });
        }
        v[index] = ONE;
        Self::new(systems, v)
    }

    pub fn systems(&self) -> &[SystemLabel] {
        &self.systems
    }

    pub fn labels(&self) -> Vec<&str> {
        self.systems.iter().map(SystemLabel::name).collect()
    }

    pub fn amplitudes(&self) -> &Vector {
        &self.amplitudes
    }

    pub fn density(&self) -> LabeledOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        LabeledOperator::new(self.systems.clone(), m).expect("shape checked at construction")
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut systems = self.systems.clone();
        systems.extend(other.systems.iter().cloned());
        check_unique(&systems)?;
        let amps = self.amplitudes.kronecker(&other.amplitudes);
        Self::new(systems, amps)
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        let o = other.permute_systems(&self.labels())?;
        Ok(self.amplitudes.dotc(&o.amplitudes))
    }

    pub fn permute_systems(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.systems.len() {
            return Err(Error::NotPermutation);
        }
        let pos = positions_of(&self.systems, order).map_err(|_| Error::NotPermutation)?;
        let dims: Vec<usize> = self.systems.iter().map(SystemLabel::dim).collect();
        let map = offsets(&dims, &pos);
        let amps = Vector::from_fn(map.len(), |r, _| self.amplitudes[map[r]]);
        let systems = pos.iter().map(|&p| self.systems[p].clone()).collect();
        Self::new(systems, amps)
    }

    pub fn rename(&self, from: &str, to: &str) -> Result<Self> {
        let pos = positions_of(&self.systems, &[from])?[0];
        let mut systems = self.systems.clone();
        systems[pos] = systems[pos].renamed(to);
        Self::new(systems, self.amplitudes.clone())
    }

    /// Marginal density operator on `keep` (in that order), traced from the vector directly.
    pub fn reduced(&self, keep: &[&str]) -> Result<LabeledOperator> {
        let kpos = positions_of(&self.systems, keep)?;
        let dims: Vec<usize> = self.systems.iter().map(SystemLabel::dim).collect();
        let rpos: Vec<usize> = (0..dims.len()).filter(|p| !kpos.contains(p)).collect();
        let k_off = offsets(&dims, &kpos);
        let r_off = offsets(&dims, &rpos);
        let m = Mat::from_fn(k_off.len(), r_off.len(), |k, r| self.amplitudes[k_off[k] + r_off[r]]);
        let systems = kpos.iter().map(|&p| self.systems[p].clone()).collect();
        LabeledOperator::new(systems, &m * m.adjoint())
    }

    /// Applies a unitary acting on `targets` (in that order); identity elsewhere.
    pub fn apply(&self, targets: &[&str], unitary: &Mat) -> Result<Self> {
        let tpos = positions_of(&self.systems, targets)?;
        let dims: Vec<usize> = self.systems.iter().map(SystemLabel::dim).collect();
        let t_off = offsets(&dims, &tpos);
        if unitary.nrows() != t_off.len() || unitary.ncols() != t_off.len() {
            return Err(Error::ShapeMismatch {
                expected: t_off.len(),
                found: unitary.nrows(),
            });
        }
        let kpos: Vec<usize> = (0..dims.len()).filter(|p| !tpos.contains(p)).collect();
        let mut out = Vector::zeros(self.amplitudes.len());
        for &k in &offsets(&dims, &kpos) {
            for (r, &tr) in t_off.iter().enumerate() {
                let mut acc = ZERO;
                for (c, &tc) in t_off.iter().enumerate() {
                    acc += unitary[(r, c)] * self.amplitudes[k + tc];
                }
                out[k + tr] = acc;
            }
        }
        Self::normalized(self.systems.clone(), out)
    }
}
