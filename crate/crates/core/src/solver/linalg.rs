//! Compressed sparse rows and Jacobi-preconditioned conjugate gradients.

#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Pattern coupling all `block` components of vertices sharing a
    /// triangle.
    pub fn from_triangles(num_vertices: usize, triangles: &[[usize; 3]], block: usize) -> Csr {
        let mut adj: Vec<Vec<usize>> = (0..num_vertices).map(|v| vec![v]).collect();
        for t in triangles {
            for &a in t {
                for &b in t {
                    adj[a].push(b);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        let n = num_vertices * block;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for v in 0..num_vertices {
            for _ in 0..block {
                for &w in &adj[v] {
                    for b in 0..block {
                        cols.push(w * block + b);
                    }
                }
                row_ptr.push(cols.len());
            }
        }
        let nnz = cols.len();
        Csr { n, row_ptr, cols, vals: vec![0.0; nnz] }
    }

    pub fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        self.row_ptr[i] + row.binary_search(&j).expect("entry outside the sparsity pattern")
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.vals[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).map(|k| self.vals[self.row_ptr[i] + k]).unwrap_or(0.0)
    }

    /// Replaces rows and columns of masked unknowns by the identity.
    pub fn apply_mask(&mut self, mask: &[bool]) {
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if mask[i] || mask[j] {
                    self.vals[k] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` from `x = 0`. Returns the iteration count and the final
/// relative residual.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> (usize, f64) {
    let n = a.n;
    x.iter_mut().for_each(|v| *v = 0.0);
    let inv: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return (0, 0.0);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, i)| r * i).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return (it, dot(&r, &r).sqrt() / bnorm);
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let res = dot(&r, &r).sqrt() / bnorm;
        if res <= rel_tol {
            return (it + 1, res);
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (max_iter, dot(&r, &r).sqrt() / bnorm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_path_laplacian() {
        // 1D Laplacian on a triangle strip: vertices 0..4 with triangles
        // linking consecutive triples
        let tris = [[0, 1, 2], [1, 2, 3], [2, 3, 4]];
        let mut a = Csr::from_triangles(5, &tris, 1);
        for i in 0..5 {
            a.add(i, i, 2.0);
            if i + 1 < 5 {
                a.add(i, i + 1, -1.0);
                a.add(i + 1, i, -1.0);
            }
        }
        let b = [1.0, 0.0, 0.0, 0.0, 1.0];
        let mut x = vec![0.0; 5];
        let (_, res) = pcg(&a, &b, &mut x, 1e-14, 50);
        assert!(res < 1e-14);
        for v in x {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mask_gives_identity_rows() {
        let mut a = Csr::from_triangles(3, &[[0, 1, 2]], 2);
        for i in 0..6 {
            for j in 0..6 {
                a.add(i, j, 1.0 + (i == j) as usize as f64);
            }
        }
        let mut mask = vec![false; 6];
        mask[1] = true;
        a.apply_mask(&mask);
        assert_eq!(a.get(1, 1), 1.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(0, 0), 2.0);
    }
}
