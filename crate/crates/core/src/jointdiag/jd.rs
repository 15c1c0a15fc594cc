use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eig::OrthoBasis;
use crate::error::{Error, Result};
use crate::netcore::{DenseMatrix, SymMatrix};
use crate::sampler::SampleBatch;

/// Sum of squared off-diagonal entries.
pub fn off2(c: &SymMatrix) -> f64 {
    off2_slice(c.as_slice(), c.n())
}

fn off2_slice(a: &[f64], n: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        for (j, v) in row.iter().enumerate() {
            if j != i {
                total += v * v;
            }
        }
    }
    total
}

/// `Uᵀ H U`, symmetrised.
pub fn project(h: &SymMatrix, basis: &OrthoBasis) -> Result<SymMatrix> {
    let n = h.n();
    if basis.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: basis.n(),
        });
    }
    let u = basis.matrix();
    let hu = h.to_dense().matmul(u);
    let c = u.transpose().matmul(&hu);
    Ok(SymMatrix::symmetrize(&c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JdOptions {
    /// Stop once a sweep lowers total off₂ by less than `tol` times its
    /// initial value.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for JdOptions {
    fn default() -> Self {
        JdOptions {
            tol: 1e-5,
            max_sweeps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JdResult {
    pub basis: OrthoBasis,
    /// Mean diagonal of the projected matrices (the average eigenvalues).
    pub avg_diag: Vec<f64>,
    /// off₂ of each projected matrix.
    pub deviations: Vec<f64>,
    /// Total off₂ before the first sweep and after each sweep.
    pub off2_history: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

impl JdResult {
    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// Whether `off2_history` never increases.
    pub fn is_monotone(&self) -> bool {
        self.off2_history.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Rotations whose predicted off₂ reduction is below this fraction of the
/// set's total squared norm are skipped; they are below round-off.
const ROTATION_FLOOR: f64 = 1e-14;
/// Matrices per storage block.
const BLOCK: usize = 64;

/// Working copy of the matrix set: blocks of up to [`BLOCK`] matrices, each
/// stored entry-major over the upper triangle so that one entry of every
/// matrix in the block is a contiguous run. A rotation then streams whole
/// runs instead of striding through each matrix.
struct PackedSet {
    n: usize,
    /// `pos[i * n + j]` is the packed entry index of `(i, j)`.
    pos: Vec<usize>,
    diag_pos: Vec<usize>,
    offdiag_pos: Vec<usize>,
    blocks: Vec<Vec<f64>>,
    lens: Vec<usize>,
}

impl PackedSet {
    fn new(mats: &[SymMatrix]) -> Self {
        let n = mats[0].n();
        let mut pos = vec![0; n * n];
        let mut diag_pos = Vec::with_capacity(n);
        let mut offdiag_pos = Vec::new();
        let mut e = 0;
        for i in 0..n {
            for j in i..n {
                pos[i * n + j] = e;
                pos[j * n + i] = e;
                if i == j {
                    diag_pos.push(e);
                } else {
                    offdiag_pos.push(e);
                }
                e += 1;
            }
        }
        let tri = e;
        let mut blocks = Vec::new();
        let mut lens = Vec::new();
        for chunk in mats.chunks(BLOCK) {
            let len = chunk.len();
            let mut data = vec![0.0; tri * len];
            for (m, mat) in chunk.iter().enumerate() {
                for i in 0..n {
                    for j in i..n {
                        data[pos[i * n + j] * len + m] = mat.get(i, j);
                    }
                }
            }
            blocks.push(data);
            lens.push(len);
        }
        PackedSet {
            n,
            pos,
            diag_pos,
            offdiag_pos,
            blocks,
            lens,
        }
    }

    /// off₂ of every matrix, in input order.
    fn per_matrix_off2(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (data, &len) in self.blocks.iter().zip(&self.lens) {
            let mut acc = vec![0.0; len];
            for &e in &self.offdiag_pos {
                for (a, v) in acc.iter_mut().zip(&data[e * len..(e + 1) * len]) {
                    *a += v * v;
                }
            }
            out.extend(acc.into_iter().map(|a| 2.0 * a));
        }
        out
    }

    fn total_off2(&self) -> f64 {
        self.per_matrix_off2().iter().sum()
    }

    fn total_norm_sq(&self) -> f64 {
        self.blocks
            .iter()
            .zip(&self.lens)
            .map(|(data, &len)| {
                let off: f64 = self
                    .offdiag_pos
                    .iter()
                    .flat_map(|&e| &data[e * len..(e + 1) * len])
                    .map(|v| v * v)
                    .sum();
                let on: f64 = self
                    .diag_pos
                    .iter()
                    .flat_map(|&e| &data[e * len..(e + 1) * len])
                    .map(|v| v * v)
                    .sum();
                2.0 * off + on
            })
            .sum()
    }

    /// Accumulates `G` for pair `(p, q)`. Blocks are summed in order, so the
    /// result does not depend on thread scheduling.
    fn pair_moments(&self, p: usize, q: usize) -> (f64, f64, f64) {
        let (epp, eqq, epq) = (
            self.pos[p * self.n + p],
            self.pos[q * self.n + q],
            self.pos[p * self.n + q],
        );
        let partial: Vec<(f64, f64, f64)> = self
            .blocks
            .par_iter()
            .zip(&self.lens)
            .map(|(data, &len)| {
                let app = &data[epp * len..(epp + 1) * len];
                let aqq = &data[eqq * len..(eqq + 1) * len];
                let apq = &data[epq * len..(epq + 1) * len];
                let (mut g00, mut g11, mut g01) = (0.0, 0.0, 0.0);
                for m in 0..len {
                    let d = app[m] - aqq[m];
                    let o = 2.0 * apq[m];
                    g00 += d * d;
                    g11 += o * o;
                    g01 += d * o;
                }
                (g00, g11, g01)
            })
            .collect();
        partial
            .into_iter()
            .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
    }

    /// `A ← Rᵀ A R` on every matrix for the rotation with new columns
    /// `c·e_p + s·e_q` and `−s·e_p + c·e_q`.
    fn rotate(&mut self, p: usize, q: usize, c: f64, s: f64) {
        let n = self.n;
        let pos = &self.pos;
        self.blocks.par_iter_mut().zip(&self.lens).for_each(|(data, &len)| {
            for k in 0..n {
                if k == p || k == q {
                    continue;
                }
                let (x, y) = two_runs(data, pos[k * n + p], pos[k * n + q], len);
                for (xp, yq) in x.iter_mut().zip(y.iter_mut()) {
                    let (akp, akq) = (*xp, *yq);
                    *xp = c * akp + s * akq;
                    *yq = -s * akp + c * akq;
                }
            }
            let (epp, eqq, epq) = (pos[p * n + p], pos[q * n + q], pos[p * n + q]);
            let cs = c * s;
            let (cc, ss, diff) = (c * c, s * s, c * c - s * s);
            for m in 0..len {
                let app = data[epp * len + m];
                let aqq = data[eqq * len + m];
                let apq = data[epq * len + m];
                data[epp * len + m] = cc * app + 2.0 * cs * apq + ss * aqq;
                data[eqq * len + m] = ss * app - 2.0 * cs * apq + cc * aqq;
                data[epq * len + m] = diff * apq + cs * (aqq - app);
            }
        });
    }

    /// Mean of each diagonal entry over all matrices.
    fn mean_diag(&self, count: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (data, &len) in self.blocks.iter().zip(&self.lens) {
            for (d, &e) in out.iter_mut().zip(&self.diag_pos) {
                *d += data[e * len..(e + 1) * len].iter().sum::<f64>();
            }
        }
        for d in &mut out {
            *d /= count as f64;
        }
        out
    }
}

/// Disjoint mutable runs `a` and `b` (entry indices) of length `len`.
fn two_runs(data: &mut [f64], a: usize, b: usize, len: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = data.split_at_mut(b * len);
        (&mut lo[a * len..(a + 1) * len], &mut hi[..len])
    } else {
        let (lo, hi) = data.split_at_mut(a * len);
        let (y, x) = (&mut lo[b * len..(b + 1) * len], &mut hi[..len]);
        (x, y)
    }
}

/// Joint diagonalisation of a set of symmetric matrices by Givens-rotation
/// sweeps.
///
/// For each index pair `(p, q)` the rotation angle is the closed-form
/// minimiser of the summed off-diagonal energy over all matrices: with
/// `h_i = (C_i[p,p] − C_i[q,q], 2 C_i[p,q])` and `G = Σ h_i h_iᵀ`, the
/// doubled angle points along the dominant eigenvector of `G`. Every matrix
/// is rotated in place, so each rotation provably does not increase the
/// objective.
///
/// Columns of the returned basis are sorted by average diagonal, largest
/// first, and each is signed so its entries sum to a nonnegative value.
pub fn joint_diagonalise(mats: &[SymMatrix], opts: JdOptions) -> Result<JdResult> {
    let first = mats
        .first()
        .ok_or_else(|| Error::EmptyInput("no matrices to diagonalise".into()))?;
    let n = first.n();
    if let Some(m) = mats.iter().find(|m| m.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.n(),
        });
    }
    if mats.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("joint diagonalisation input"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let count = mats.len();
    let mut work = PackedSet::new(mats);
    let mut basis = DenseMatrix::identity(n);

    let norm_total = work.total_norm_sq();
    let floor = ROTATION_FLOOR * norm_total;

    let initial = work.total_off2();
    let mut history = vec![initial];
    let mut converged = initial == 0.0;
    let mut sweeps = 0;

    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (g00, g11, g01) = work.pair_moments(p, q);
                let half_diff = 0.5 * (g00 - g11);
                let lambda_max = 0.5 * (g00 + g11) + (half_diff * half_diff + g01 * g01).sqrt();
                let gain = 0.5 * (lambda_max - g00);
                debug_assert!(gain >= -1e-12 * norm_total.max(1.0), "rotation would raise off2");
                if gain <= floor {
                    continue;
                }
                let theta = 0.25 * (2.0 * g01).atan2(g00 - g11);
                let (s, c) = theta.sin_cos();
                rotated = true;
                work.rotate(p, q, c, s);
                let u = basis.data_mut();
                for k in 0..n {
                    let ukp = u[k * n + p];
                    let ukq = u[k * n + q];
                    u[k * n + p] = c * ukp + s * ukq;
                    u[k * n + q] = -s * ukp + c * ukq;
                }
            }
        }
        let off = work.total_off2();
        let prev = *history.last().unwrap();
        history.push(off);
        // per-rotation gains are nonnegative; the slack covers summation
        // round-off only
        assert!(
            off <= prev + 1e-12 * norm_total,
            "off2 increased across a sweep: {prev} -> {off}"
        );
        if !rotated || prev - off < opts.tol * initial {
            converged = true;
        }
    }

    let deviations = work.per_matrix_off2();
    let avg_diag = work.mean_diag(count);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| avg_diag[y].total_cmp(&avg_diag[x]).then(x.cmp(&y)));
    let avg_diag = order.iter().map(|&i| avg_diag[i]).collect();
    let basis = OrthoBasis::from_dense_unchecked(basis).reorder_and_fix_signs(&order);

    Ok(JdResult {
        basis,
        avg_diag,
        deviations,
        off2_history: history,
        converged,
        sweeps,
    })
}

/// Tree adjacency matrices of a batch, in sample order.
pub fn batch_matrices(batch: &SampleBatch) -> Vec<SymMatrix> {
    batch.samples.par_iter().map(|s| s.matrix()).collect()
}

pub fn joint_diagonalise_batch(batch: &SampleBatch, opts: JdOptions) -> Result<JdResult> {
    joint_diagonalise(&batch_matrices(batch), opts)
}

/// Average graph `Ū diag(C̄) Ūᵀ`. Refuses unconverged results unless
/// `force` is set.
pub fn reconstruct_average(result: &JdResult, force: bool) -> Result<SymMatrix> {
    if !result.converged && !force {
        return Err(Error::NotConverged { sweeps: result.sweeps });
    }
    let n = result.n();
    let u = result.basis.matrix();
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..n).map(|k| u.get(i, k) * result.avg_diag[k] * u.get(j, k)).sum();
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(SymMatrix::symmetrize(&out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn off2_small_cases() {
        assert_eq!(off2(&SymMatrix::from_diag(&[1.0, 5.0, -2.0])), 0.0);
        let m = SymMatrix::from_lower_fn(2, |i, j| if i == j { (2 * i + 1) as f64 } else { 2.0 });
        assert_eq!(off2(&m), 8.0);
    }

    #[test]
    fn identity_projection_is_noop() {
        let m = SymMatrix::from_lower_fn(3, |i, j| (i + 2 * j) as f64);
        assert_eq!(project(&m, &OrthoBasis::identity(3)).unwrap(), m);
        assert!(project(&m, &OrthoBasis::identity(4)).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            joint_diagonalise(&[], JdOptions::default()),
            Err(Error::EmptyInput(_))
        ));
        let a = SymMatrix::zeros(2);
        let b = SymMatrix::zeros(3);
        assert!(joint_diagonalise(&[a.clone(), b], JdOptions::default()).is_err());
        let mut bad = SymMatrix::zeros(2);
        bad.set(0, 1, f64::INFINITY);
        assert!(matches!(
            joint_diagonalise(&[a.clone(), bad], JdOptions::default()),
            Err(Error::NonFinite(_))
        ));
        let opts = JdOptions {
            tol: 0.0,
            max_sweeps: 1,
        };
        assert!(joint_diagonalise(&[a], opts).is_err());
    }

    #[test]
    fn zero_diagonal_start_escapes_identity() {
        // pure off-diagonal input: the naive half-angle formula stalls at 0
        let mut m = SymMatrix::zeros(2);
        m.set(0, 1, 1.0);
        let r = joint_diagonalise(&[m.clone(), m], JdOptions::default()).unwrap();
        assert!(r.deviations.iter().all(|&d| d < 1e-20));
        assert!((r.avg_diag[0] - 1.0).abs() < 1e-14);
        assert!((r.avg_diag[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn unconverged_reconstruction_needs_force() {
        let mut a = SymMatrix::zeros(3);
        a.set(0, 1, 1.0);
        let mut b = SymMatrix::zeros(3);
        b.set(1, 2, 1.0);
        let r = joint_diagonalise(
            &[a, b],
            JdOptions {
                tol: 1e-9,
                max_sweeps: 0,
            },
        )
        .unwrap();
        assert!(!r.converged);
        assert!(matches!(
            reconstruct_average(&r, false),
            Err(Error::NotConverged { .. })
        ));
        assert!(reconstruct_average(&r, true).is_ok());
    }
}
