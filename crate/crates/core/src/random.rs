//! Seeded random states, unitaries and isometries.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::{LabeledOperator, Mat, PureVector, SystemLabel, Vector, C64};

pub type Rng64 = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic child seed for task `index` of a run seeded by `master`
/// (splitmix64 over the pair).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Complex Ginibre matrix with i.i.d. standard normal entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

fn side(systems: &[SystemLabel]) -> usize {
    systems.iter().map(SystemLabel::dim).product()
}

/// Full-rank density operator `G G† / Tr(G G†)` from a square Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(systems: &[SystemLabel], rng: &mut R) -> LabeledOperator {
    let n = side(systems);
    random_density_rank(systems, n, rng)
}

/// Density operator of rank at most `rank`.
pub fn random_density_rank<R: Rng + ?Sized>(
    systems: &[SystemLabel],
    rank: usize,
    rng: &mut R,
) -> LabeledOperator {
    let n = side(systems);
    let g = ginibre(n, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    LabeledOperator::new(systems.to_vec(), m.unscale(tr)).expect("shape from systems")
}

pub fn random_hermitian<R: Rng + ?Sized>(systems: &[SystemLabel], rng: &mut R) -> LabeledOperator {
    let n = side(systems);
    let g = ginibre(n, n, rng);
    LabeledOperator::new(systems.to_vec(), (&g + g.adjoint()).scale(0.5)).expect("shape")
}

pub fn random_pure<R: Rng + ?Sized>(systems: &[SystemLabel], rng: &mut R) -> PureVector {
    let n = side(systems);
    let v = Vector::from_fn(n, |_, _| gaussian(rng));
    PureVector::normalized(systems.to_vec(), v).expect("nonzero gaussian vector")
}

/// Orthonormalizes the columns of `m` (modified Gram-Schmidt, twice).
pub(crate) fn orthonormalize_columns(m: &Mat) -> Mat {
    let mut q = m.clone();
    for _pass in 0..2 {
        for j in 0..q.ncols() {
            let mut v = q.column(j).clone_owned();
            for k in 0..j {
                let u = q.column(k);
                let proj = u.dotc(&v);
                v -= u * proj;
            }
            let norm = v.norm();
            q.set_column(j, &v.unscale(norm));
        }
    }
    q
}

/// Haar-random `n x n` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    haar_isometry(n, n, rng)
}

/// Haar-random isometry with `cols` orthonormal columns in dimension `rows`.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    assert!(cols <= rows, "isometry needs rows >= cols");
    orthonormalize_columns(&ginibre(rows, cols, rng))
}
