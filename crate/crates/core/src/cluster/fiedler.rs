use serde::Serialize;

use crate::error::{Error, Result};
use crate::jointdiag::eig_sym;
use crate::netcore::SymMatrix;

/// Second eigenvalues below this fraction of the largest one count as zero.
const ZERO_EIGEN_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Fiedler {
    /// Unit eigenvector of the second-smallest Laplacian eigenvalue, signed so
    /// its first nonzero entry is positive.
    pub vector: Vec<f64>,
    /// Algebraic connectivity.
    pub value: f64,
    /// The weight graph has more than one component.
    pub disconnected: bool,
}

fn check_weights(w: &SymMatrix) -> Result<()> {
    for (k, &v) in w.as_slice().iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite("weight matrix"));
        }
        if v < 0.0 && k / w.n() != k % w.n() {
            return Err(Error::invalid(format!(
                "negative weight {v} at ({}, {})",
                k / w.n(),
                k % w.n()
            )));
        }
    }
    Ok(())
}

/// `L = D − W` with the diagonal of `W` ignored, so `L·1 = 0` holds exactly
/// in the row sums.
pub fn laplacian(w: &SymMatrix) -> Result<SymMatrix> {
    check_weights(w)?;
    let n = w.n();
    let mut l = SymMatrix::from_lower_fn(n, |i, j| if i == j { 0.0 } else { -w.get(i, j) });
    for i in 0..n {
        let d: f64 = (0..n).filter(|&j| j != i).map(|j| w.get(i, j)).sum();
        l.set(i, i, d);
    }
    Ok(l)
}

pub fn fiedler_vector(w: &SymMatrix) -> Result<Fiedler> {
    let n = w.n();
    if n < 2 {
        return Err(Error::invalid(format!(
            "Fiedler vector needs at least 2 nodes, got {n}"
        )));
    }
    let l = laplacian(w)?;
    let (vals, basis) = eig_sym(&l)?;
    let value = vals[n - 2];
    let mut vector = basis.column(n - 2);
    let scale = 1e-12 * vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = vector.iter().find(|v| v.abs() > scale) {
        if *first < 0.0 {
            vector.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let disconnected = value <= ZERO_EIGEN_RTOL * vals[0].max(f64::MIN_POSITIVE);
    Ok(Fiedler {
        vector,
        value,
        disconnected,
    })
}

/// Binary tree of node sets from recursive Fiedler bisection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    /// Node indices, ascending.
    pub members: Vec<usize>,
    /// Depth of this block; the root is level 0.
    pub level: usize,
    /// Algebraic connectivity of the block's induced subgraph, when computed.
    pub fiedler_value: Option<f64>,
    /// The block's induced subgraph is disconnected, which stops bisection.
    pub disconnected: bool,
    pub children: Option<Box<(Dendrogram, Dendrogram)>>,
}

impl Dendrogram {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    /// Member sets of the terminal blocks, left to right.
    pub fn leaves(&self) -> Vec<&[usize]> {
        match &self.children {
            None => vec![&self.members],
            Some(c) => {
                let mut out = c.0.leaves();
                out.extend(c.1.leaves());
                out
            }
        }
    }

    /// Blocks at exactly `level`, or terminal blocks above it.
    pub fn cut(&self, level: usize) -> Vec<&[usize]> {
        match &self.children {
            Some(c) if self.level < level => {
                let mut out = c.0.cut(level);
                out.extend(c.1.cut(level));
                out
            }
            _ => vec![&self.members],
        }
    }

    pub fn depth(&self) -> usize {
        match &self.children {
            None => 0,
            Some(c) => 1 + c.0.depth().max(c.1.depth()),
        }
    }

    /// Newick text. Terminal blocks list their nodes as sibling leaves and
    /// internal nodes carry their Fiedler value as a label.
    pub fn to_newick(&self, labels: Option<&[String]>) -> String {
        let mut out = String::new();
        self.write_newick(labels, &mut out);
        out.push(';');
        out
    }

    fn write_newick(&self, labels: Option<&[String]>, out: &mut String) {
        match &self.children {
            Some(c) => {
                out.push('(');
                c.0.write_newick(labels, out);
                out.push(',');
                c.1.write_newick(labels, out);
                out.push(')');
                if let Some(v) = self.fiedler_value {
                    out.push_str(&format!("{v:.6}"));
                }
            }
            None if self.members.len() == 1 => out.push_str(&newick_label(self.members[0], labels)),
            None => {
                out.push('(');
                let names: Vec<String> = self.members.iter().map(|&m| newick_label(m, labels)).collect();
                out.push_str(&names.join(","));
                out.push(')');
            }
        }
    }
}

fn newick_label(node: usize, labels: Option<&[String]>) -> String {
    let name = labels
        .and_then(|l| l.get(node))
        .cloned()
        .unwrap_or_else(|| node.to_string());
    if name.chars().any(|c| "()[]':;, \t".contains(c)) || name.is_empty() {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name
    }
}

fn induced(w: &SymMatrix, members: &[usize]) -> SymMatrix {
    SymMatrix::from_lower_fn(
        members.len(),
        |i, j| if i == j { 0.0 } else { w.get(members[i], members[j]) },
    )
}

/// Recursive bisection by the sign of the Fiedler vector. A block becomes a
/// leaf once it has at most `min_size` nodes or its induced subgraph is
/// disconnected. Entries equal to zero go with the positive side.
pub fn fiedler_dendrogram(w: &SymMatrix, min_size: usize) -> Result<Dendrogram> {
    check_weights(w)?;
    if w.n() == 0 {
        return Err(Error::EmptyInput("weight matrix has no nodes".into()));
    }
    bisect(w, (0..w.n()).collect(), 0, min_size.max(1))
}

fn bisect(w: &SymMatrix, members: Vec<usize>, level: usize, min_size: usize) -> Result<Dendrogram> {
    let mut node = Dendrogram {
        members,
        level,
        fiedler_value: None,
        disconnected: false,
        children: None,
    };
    if node.members.len() <= min_size || node.members.len() < 2 {
        return Ok(node);
    }
    let f = fiedler_vector(&induced(w, &node.members))?;
    node.fiedler_value = Some(f.value);
    if f.disconnected {
        node.disconnected = true;
        return Ok(node);
    }
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (&m, &v) in node.members.iter().zip(&f.vector) {
        if v >= 0.0 {
            pos.push(m);
        } else {
            neg.push(m);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Ok(node);
    }
    let left = bisect(w, pos, level + 1, min_size)?;
    let right = bisect(w, neg, level + 1, min_size)?;
    node.children = Some(Box::new((left, right)));
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for &(a, b, w) in edges {
            m.set(a, b, w);
        }
        m
    }

    fn two_cliques(k: usize, bridge: f64) -> SymMatrix {
        let mut e = vec![];
        for base in [0, k] {
            for i in base..base + k {
                for j in i + 1..base + k {
                    e.push((i, j, 1.0));
                }
            }
        }
        e.push((k - 1, k, bridge));
        from_edges(2 * k, &e)
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        // dyadic weights sum without rounding, so the zero is exact
        let l = laplacian(&two_cliques(4, 0.25)).unwrap();
        for row in l.to_dense().as_slice().chunks(8) {
            assert_eq!(row.iter().sum::<f64>(), 0.0);
        }
        let l = laplacian(&two_cliques(4, 0.3)).unwrap();
        for row in l.to_dense().as_slice().chunks(8) {
            assert!(row.iter().sum::<f64>().abs() <= 4.0 * f64::EPSILON);
        }
        let (vals, _) = eig_sym(&l).unwrap();
        assert!(vals[7] >= -1e-10);
    }

    #[test]
    fn weak_bridge_separates_cliques() {
        let f = fiedler_vector(&two_cliques(5, 0.05)).unwrap();
        assert!(!f.disconnected);
        assert!(f.vector[..5].iter().all(|&v| v > 0.0));
        assert!(f.vector[5..].iter().all(|&v| v < 0.0));
        let norm: f64 = f.vector.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_value() {
        let n = 6;
        let w = SymMatrix::from_lower_fn(n, |i, j| if i == j { 0.0 } else { 0.5 });
        let f = fiedler_vector(&w).unwrap();
        assert!((f.value - n as f64 * 0.5).abs() < 1e-10);
    }

    #[test]
    fn path_vector_is_monotone() {
        let f = fiedler_vector(&from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)])).unwrap();
        // closed form (1, 0, -1)/sqrt(2), eigenvalue 1
        assert!((f.value - 1.0).abs() < 1e-12);
        assert!((f.vector[0] - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(f.vector[1].abs() < 1e-12);
        assert!(f.vector[0] > f.vector[1] && f.vector[1] > f.vector[2]);
    }

    #[test]
    fn disconnected_is_flagged() {
        let f = fiedler_vector(&from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)])).unwrap();
        assert!(f.disconnected);
        assert!(f.value.abs() < 1e-12);
        let d = fiedler_dendrogram(&from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]), 1).unwrap();
        assert!(d.is_leaf() && d.disconnected);
    }

    #[test]
    fn negative_weight_rejected() {
        let w = from_edges(3, &[(0, 1, -0.1)]);
        assert!(fiedler_vector(&w).is_err());
        assert!(fiedler_vector(&SymMatrix::zeros(1)).is_err());
    }

    #[test]
    fn planted_hierarchy_recovered() {
        // four blocks of 4: strong inside, medium within each pair, weak across
        let n = 16;
        let w = SymMatrix::from_lower_fn(n, |i, j| {
            if i == j {
                0.0
            } else if i / 4 == j / 4 {
                1.0
            } else if i / 8 == j / 8 {
                0.2
            } else {
                0.01
            }
        });
        let d = fiedler_dendrogram(&w, 4).unwrap();
        let mut top: Vec<Vec<usize>> = d.cut(1).into_iter().map(|s| s.to_vec()).collect();
        top.sort();
        assert_eq!(top, vec![(0..8).collect::<Vec<_>>(), (8..16).collect()]);
        let mut leaves: Vec<Vec<usize>> = d.leaves().into_iter().map(|s| s.to_vec()).collect();
        leaves.sort();
        let want: Vec<Vec<usize>> = (0..4).map(|b| (4 * b..4 * b + 4).collect()).collect();
        assert_eq!(leaves, want);
        assert_eq!(d.depth(), 2);
    }

    #[test]
    fn min_size_n_gives_single_leaf() {
        let d = fiedler_dendrogram(&two_cliques(3, 0.1), 6).unwrap();
        assert!(d.is_leaf());
        assert_eq!(d.to_newick(None), "(0,1,2,3,4,5);");
    }

    #[test]
    fn newick_quotes_awkward_labels() {
        let d = fiedler_dendrogram(&two_cliques(2, 0.1), 1).unwrap();
        let labels: Vec<String> = ["a", "b c", "d", "e'f"].iter().map(|s| s.to_string()).collect();
        let text = d.to_newick(Some(&labels));
        assert!(text.contains("'b c'") && text.contains("'e''f'"), "{text}");
        assert!(text.ends_with(';'));
    }
}
