//! Envelope (skyline) LDLᵀ factorization for sparse symmetric matrices.
//!
//! Rows are renumbered with reverse Cuthill-McKee before factorization to
//! shrink the envelope. No pivoting is performed, so indefinite matrices are
//! handled as long as no leading minor vanishes; a pivot whose magnitude falls
//! below `PIVOT_TOL * max|A|` is reported as singular.

use std::collections::VecDeque;

pub(crate) const PIVOT_TOL: f64 = 1e-12;

/// Symmetric matrix in compressed sparse row form (both triangles stored).
#[derive(Clone, Debug)]
pub(crate) struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&j) {
            Ok(k) => self.val[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, a)| a * x[j]).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug)]
pub(crate) struct SingularPivot {
    pub row: usize,
    pub pivot: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct SkylineLdl {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    first: Vec<usize>,
    /// offset of row `i`'s entry `first[i]` in `env`
    start: Vec<usize>,
    env: Vec<f64>,
    diag: Vec<f64>,
}

/// Reverse Cuthill-McKee ordering of the symmetric sparsity graph.
fn rcm(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    let mut nbrs = Vec::new();
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let mut queue = VecDeque::from([seed]);
        visited[seed] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]));
            nbrs.sort_by_key(|&j| (degree[j], j));
            for &j in &nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

impl SkylineLdl {
    pub fn factorize(a: &CsrMatrix) -> Result<Self, SingularPivot> {
        let n = a.n;
        let perm = rcm(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            start.push(total);
            total += i - first[i];
        }
        start.push(total);
        let mut env = vec![0.0; total];
        let mut diag = vec![0.0; n];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn < new {
                    env[start[new] + jn - first[new]] = v;
                } else if jn == new {
                    diag[new] = v;
                }
            }
        }

        let threshold = PIVOT_TOL * a.max_abs();
        for i in 0..n {
            let fi = first[i];
            // pass 1: env row i holds u_ij = l_ij d_j after this loop
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = env[start[i] + j - fi];
                let (ri, rj) = (start[i] + k0 - fi, start[j] + k0 - fj);
                let len = j - k0;
                for k in 0..len {
                    s -= env[rj + k] * env[ri + k];
                }
                env[start[i] + j - fi] = s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let u = env[start[i] + j - fi];
                let l = u / diag[j];
                d -= l * u;
                env[start[i] + j - fi] = l;
            }
            if !(d.abs() > threshold) {
                return Err(SingularPivot {
                    row: perm[i],
                    pivot: d,
                    threshold,
                });
            }
            diag[i] = d;
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            env,
            diag,
        })
    }

    pub fn pivots(&self) -> &[f64] {
        &self.diag
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.env[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            let row = &self.env[self.start[i]..self.start[i + 1]];
            for (l, v) in row.iter().zip(&mut y[fi..i]) {
                *v -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
