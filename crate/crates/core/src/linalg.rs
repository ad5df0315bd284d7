//! Linear solvers for the Markov-chain oracle.
//!
//! Systems are nonsingular M-matrices (negated generators restricted to a
//! transient set). Small systems use dense LU with partial pivoting; larger
//! ones use ILU(0)-preconditioned restarted GMRES. Both finish with iterative
//! refinement against the original matrix.

use crate::error::{Error, Result};

/// Size at or below which the dense path is taken.
pub const DENSE_LIMIT: usize = 64;

#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Build from per-row entry lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in r {
                if last == Some(c) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Csr { n, indptr, indices, data }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            y[i] = s;
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        Csr::from_rows(rows)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[i * self.n + j] += v;
            }
        }
        a
    }

    pub fn residual_inf(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.matvec(x, &mut ax);
        ax.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Dense LU factors with row permutation.
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pv) = (k..n).map(|i| (i, a[i * n + k].abs())).fold((k, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            if pv <= 1e-14 * scale {
                return Err(Error::Solver("singular matrix (reducible chain?)".into()));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                a[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Incomplete LU with zero fill on the pattern of `a`.
pub struct Ilu0 {
    m: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn factor(a: &Csr) -> Result<Self> {
        let mut m = a.clone();
        let n = m.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in m.indptr[i]..m.indptr[i + 1] {
                if m.indices[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::Solver(format!("missing diagonal in row {i}")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in m.indptr[i]..m.indptr[i + 1] {
                pos[m.indices[k]] = k;
            }
            for k in m.indptr[i]..m.indptr[i + 1] {
                let j = m.indices[k];
                if j >= i {
                    break;
                }
                let piv = m.data[diag[j]];
                let f = m.data[k] / piv;
                m.data[k] = f;
                for kk in diag[j] + 1..m.indptr[j + 1] {
                    let c = m.indices[kk];
                    let p = pos[c];
                    if p != usize::MAX {
                        m.data[p] -= f * m.data[kk];
                    }
                }
            }
            for k in m.indptr[i]..m.indptr[i + 1] {
                pos[m.indices[k]] = usize::MAX;
            }
            if m.data[diag[i]].abs() < 1e-300 {
                return Err(Error::Solver("zero pivot in ILU(0)".into()));
            }
        }
        Ok(Ilu0 { m, diag })
    }

    pub fn apply(&self, b: &[f64], x: &mut [f64]) {
        let m = &self.m;
        x.copy_from_slice(b);
        for i in 0..m.n {
            let mut s = x[i];
            for k in m.indptr[i]..self.diag[i] {
                s -= m.data[k] * x[m.indices[k]];
            }
            x[i] = s;
        }
        for i in (0..m.n).rev() {
            let mut s = x[i];
            for k in self.diag[i] + 1..m.indptr[i + 1] {
                s -= m.data[k] * x[m.indices[k]];
            }
            x[i] = s / m.data[self.diag[i]];
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES. Returns the iterate after reaching
/// relative residual `tol` or exhausting `max_iter`.
pub fn gmres(a: &Csr, b: &[f64], pre: &Ilu0, tol: f64, restart: usize, max_iter: usize) -> Vec<f64> {
    let n = a.n;
    let mut x = vec![0.0; n];
    let bn = norm(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut iters = 0;
    let mut last = f64::INFINITY;
    while iters < max_iter {
        a.matvec(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        // stop at the tolerance or once a restart no longer helps
        if beta <= tol * bn || beta > 0.5 * last {
            break;
        }
        last = beta;
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            iters += 1;
            pre.apply(&v[k], &mut z);
            a.matvec(&z, &mut w);
            for j in 0..=k {
                let hj: f64 = w.iter().zip(&v[j]).map(|(a, b)| a * b).sum();
                h[j][k] = hj;
                for i in 0..n {
                    w[i] -= hj * v[j][i];
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if d == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= tol * bn || hn == 0.0 || iters >= max_iter {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut u = vec![0.0; n];
        for j in 0..k_used {
            for i in 0..n {
                u[i] += y[j] * v[j][i];
            }
        }
        pre.apply(&u, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
    }
    x
}

/// Solve `a x = b`; returns the solution and the final residual (max norm).
pub fn solve(a: &Csr, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    if a.n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut x;
    if a.n <= DENSE_LIMIT {
        let lu = DenseLu::factor(a.to_dense(), a.n)?;
        x = lu.solve(b);
        for _ in 0..3 {
            let r = residual(a, &x, b);
            let dx = lu.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        }
    } else {
        let pre = Ilu0::factor(a)?;
        x = gmres(a, b, &pre, 1e-14, 80, 4000);
        let mut best = a.residual_inf(&x, b);
        let good = 1e-12 * b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for _ in 0..3 {
            if best <= good {
                break;
            }
            let r = residual(a, &x, b);
            let dx = gmres(a, &r, &pre, 1e-14, 80, 2000);
            let y: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let ry = a.residual_inf(&y, b);
            if ry >= best {
                break;
            }
            best = ry;
            x = y;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite solution".into()));
    }
    let res = a.residual_inf(&x, b);
    Ok((x, res))
}

fn residual(a: &Csr, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut ax = vec![0.0; a.n];
    a.matvec(x, &mut ax);
    b.iter().zip(&ax).map(|(b, a)| b - a).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_like(n: usize) -> Csr {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.5)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                if i + 7 < n {
                    r.push((i + 7, -0.3));
                }
                r
            })
            .collect();
        Csr::from_rows(rows)
    }

    #[test]
    fn dense_and_gmres_agree() {
        let a = laplace_like(300);
        let b: Vec<f64> = (0..300).map(|i| 1.0 + (i % 5) as f64).collect();
        let (x, res) = solve(&a, &b).unwrap();
        assert!(res < 1e-12);
        let lu = DenseLu::factor(a.to_dense(), 300).unwrap();
        let y = lu.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_detected() {
        let a = Csr::from_rows(vec![vec![(0, 1.0), (1, -1.0)], vec![(0, -1.0), (1, 1.0)]]);
        assert!(solve(&a, &[1.0, 1.0]).is_err());
    }
}
