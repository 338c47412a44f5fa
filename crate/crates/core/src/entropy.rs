//! Von Neumann entropy and the correlation measures built on it. All
//! logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{eigh, positions_of, LabeledOperator, Mat, PSD_TOL};

/// Eigenvalues below this contribute nothing to an entropy.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;
/// Trace tolerance for entropy inputs.
pub const ENTROPY_TRACE_TOL: f64 = 1e-8;

/// Binary entropy `h₂(x)`, with `h₂(0) = h₂(1) = 0`.
pub fn h2(x: f64) -> f64 {
    let term = |t: f64| if t > 0.0 { -t * t.log2() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// `−Σ λ log₂ λ` over the values above the floor.
pub fn spectrum_entropy(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&l| l > EIGENVALUE_FLOOR)
        .map(|&l| -l * l.log2())
        .sum()
}

fn check_state(rho: &LabeledOperator) -> Result<()> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > ENTROPY_TRACE_TOL || tr.im.abs() > ENTROPY_TRACE_TOL {
        return Err(Error::TraceDeviation((tr - 1.0).norm()));
    }
    Ok(())
}

pub fn von_neumann_entropy(rho: &LabeledOperator) -> Result<f64> {
    check_state(rho)?;
    let l = rho.eigenvalues()?;
    let min = l.last().copied().unwrap_or(0.0);
    if min < PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    let max = (rho.side() as f64).log2();
    Ok(spectrum_entropy(&l).clamp(0.0, max))
}

/// Entropy of the marginal on `keep`.
pub fn marginal_entropy(rho: &LabeledOperator, keep: &[&str]) -> Result<f64> {
    if keep.is_empty() {
        return Ok(0.0);
    }
    von_neumann_entropy(&rho.reduce_to(keep)?)
}

fn check_partition(rho: &LabeledOperator, a: &[&str], b: &[&str]) -> Result<()> {
    let mut all = a.to_vec();
    all.extend_from_slice(b);
    match positions_of(rho.systems(), &all) {
        Err(Error::DuplicateLabel(l)) => {
            return Err(Error::BadPartition(format!("`{l}` appears on both sides")))
        }
        Err(e) => return Err(e),
        Ok(p) if p.len() != rho.systems().len() => {
            return Err(Error::BadPartition(
                "the two label sets must cover every system".into(),
            ))
        }
        Ok(_) => {}
    }
    Ok(())
}

/// Entropies and correlation measures of `rho` for the cut `(rest | target)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    #[serde(rename = "S_B")]
    pub s_b: f64,
    #[serde(rename = "S_AB")]
    pub s_ab: f64,
    pub coherent_info: f64,
    pub mutual_info: f64,
    pub eigenvalue_floor_used: f64,
}

/// Full report with `target` in the role of `B` and `rest` in the role of `A`.
pub fn measure(rho: &LabeledOperator, target: &[&str], rest: &[&str]) -> Result<MeasureReport> {
    check_partition(rho, target, rest)?;
    let s_ab = von_neumann_entropy(rho)?;
    let s_b = marginal_entropy(rho, target)?;
    let s_a = marginal_entropy(rho, rest)?;
    let coherent_info = s_b - s_ab;
    Ok(MeasureReport {
        s_b,
        s_ab,
        coherent_info,
        mutual_info: coherent_info + s_a,
        eigenvalue_floor_used: EIGENVALUE_FLOOR,
    })
}

/// `S(target) − S(whole)`.
pub fn coherent_information(rho: &LabeledOperator, target: &[&str], rest: &[&str]) -> Result<f64> {
    check_partition(rho, target, rest)?;
    Ok(marginal_entropy(rho, target)? - von_neumann_entropy(rho)?)
}

/// `S_A + S_B − S_AB`.
pub fn mutual_information(rho: &LabeledOperator, a: &[&str], b: &[&str]) -> Result<f64> {
    Ok(measure(rho, b, a)?.mutual_info)
}

/// `2ε log₂|a| + (1+ε) h₂(ε/(1+ε))`.
pub fn afw_bound(eps: f64, dim_a: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) || eps.is_nan() {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: eps,
            reason: "must lie in [0, 1]",
        });
    }
    if dim_a == 0 {
        return Err(Error::ZeroDimension("a".into()));
    }
    Ok(2.0 * eps * (dim_a as f64).log2() + (1.0 + eps) * h2(eps / (1.0 + eps)))
}

/// `log₂` of a PSD matrix with eigenvalues clamped to the floor.
pub(crate) fn log2_psd(m: &Mat) -> Result<Mat> {
    let e = eigh(m)?;
    let logs: Vec<f64> = e.values.iter().map(|&l| l.max(EIGENVALUE_FLOOR).log2()).collect();
    let n = m.nrows();
    let mut scaled = e.vectors.clone();
    for (j, l) in logs.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= *l;
        }
    }
    Ok(scaled * e.vectors.adjoint())
}
