use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{DenseMatrix, SymMatrix};

/// Orthogonal matrix whose columns are basis vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoBasis {
    u: DenseMatrix,
}

impl OrthoBasis {
    pub fn identity(n: usize) -> Self {
        OrthoBasis {
            u: DenseMatrix::identity(n),
        }
    }

    /// Wraps `u`, checking `‖UᵀU − I‖_max <= tol`.
    pub fn new(u: DenseMatrix, tol: f64) -> Result<Self> {
        let err = u.orthogonality_error();
        if !(err <= tol) {
            return Err(Error::invalid(format!("basis is not orthogonal: ‖UᵀU − I‖ = {err:e}")));
        }
        Ok(OrthoBasis { u })
    }

    pub(crate) fn from_dense_unchecked(u: DenseMatrix) -> Self {
        OrthoBasis { u }
    }

    pub fn n(&self) -> usize {
        self.u.n()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.u.column(j)
    }

    pub fn orthogonality_error(&self) -> f64 {
        self.u.orthogonality_error()
    }

    /// Reorders columns by `order` and flips each so its entries sum to a
    /// nonnegative value (first nonzero entry positive on an exact tie).
    pub(crate) fn reorder_and_fix_signs(&self, order: &[usize]) -> OrthoBasis {
        let n = self.n();
        let mut out = DenseMatrix::zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            let col = self.u.column(src);
            let sign = column_sign(&col);
            for (k, v) in col.iter().enumerate() {
                out.set(k, dst, sign * v);
            }
        }
        OrthoBasis { u: out }
    }
}

pub(crate) fn column_sign(col: &[f64]) -> f64 {
    let sum: f64 = col.iter().sum();
    let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sum.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return if sum < 0.0 { -1.0 } else { 1.0 };
    }
    match col.iter().find(|v| v.abs() > 1e-12 * scale) {
        Some(v) if *v < 0.0 => -1.0,
        _ => 1.0,
    }
}

const EIG_MAX_SWEEPS: usize = 100;

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order with aligned eigenvector columns.
pub fn eig_sym(m: &SymMatrix) -> Result<(Vec<f64>, OrthoBasis)> {
    if !m.is_finite() {
        return Err(Error::NonFinite("eigensolver input"));
    }
    let n = m.n();
    let mut a = m.to_dense();
    let mut v = DenseMatrix::identity(n);
    let scale = m.frobenius_sq();
    for _ in 0..EIG_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum();
        if off <= f64::EPSILON * f64::EPSILON * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_sym(&mut a, p, q, c, s);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let vals: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]).then(x.cmp(&y)));
    let sorted = order.iter().map(|&i| vals[i]).collect();
    let basis = OrthoBasis::from_dense_unchecked(v).reorder_and_fix_signs(&order);
    Ok((sorted, basis))
}

/// Applies the Jacobi rotation to off-block entries of rows/columns p, q.
fn rotate_sym(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.n();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        let np = c * akp - s * akq;
        let nq = s * akp + c * akq;
        a.set(k, p, np);
        a.set(p, k, np);
        a.set(k, q, nq);
        a.set(q, k, nq);
    }
}

/// Principal eigenvector of a nonnegative matrix, unit norm, entries summing
/// to a positive value.
pub fn eigenvector_centrality(m: &SymMatrix) -> Result<Vec<f64>> {
    if let Some(v) = m.as_slice().iter().find(|v| **v < 0.0) {
        return Err(Error::invalid(format!(
            "centrality needs nonnegative weights, found {v}"
        )));
    }
    if m.max_abs() == 0.0 {
        return Err(Error::Degenerate("all-zero matrix".into()));
    }
    let (_, basis) = eig_sym(m)?;
    let mut x = basis.column(0);
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sign = column_sign(&x);
    for v in &mut x {
        *v *= sign / norm;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let (vals, _) = eig_sym(&SymMatrix::identity(4)).unwrap();
        assert_eq!(vals, vec![1.0; 4]);
        let (vals, basis) = eig_sym(&SymMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
        assert_eq!(basis.column(0), vec![1.0, 0.0, 0.0]);
        assert_eq!(basis.column(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(basis.column(2), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = SymMatrix::from_lower_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let (vals, basis) = eig_sym(&m).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((basis.column(0)[0] - h).abs() < 1e-14 && (basis.column(0)[1] - h).abs() < 1e-14);
    }

    #[test]
    fn star_and_complete_centrality() {
        let mut star = SymMatrix::zeros(5);
        for leaf in 1..5 {
            star.set(0, leaf, 1.0);
        }
        let x = eigenvector_centrality(&star).unwrap();
        assert!((1..5).all(|i| x[0] > x[i] + 1e-9));
        let n = 6;
        let kn = SymMatrix::from_lower_fn(n, |i, j| if i == j { 0.0 } else { 1.0 });
        let x = eigenvector_centrality(&kn).unwrap();
        for v in x {
            assert!((v - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn centrality_errors() {
        assert!(matches!(
            eigenvector_centrality(&SymMatrix::zeros(3)),
            Err(Error::Degenerate(_))
        ));
        let mut m = SymMatrix::zeros(2);
        m.set(0, 1, -1.0);
        assert!(eigenvector_centrality(&m).is_err());
    }
}
