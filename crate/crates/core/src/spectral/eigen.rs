use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Result, SpectralError};

const EIG_EPS: f64 = 1e-14;
const EIG_MAX_ITER: usize = 10_000;

/// Eigenpairs sorted by ascending eigenvalue; eigenvectors are the columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn sorted_spectrum(values: &DVector<f64>, vectors: &DMatrix<f64>) -> Spectrum {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = DMatrix::zeros(vectors.nrows(), n);
    let mut vals = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        vals.push(values[src]);
        let mut col: Vec<f64> = vectors.column(src).iter().copied().collect();
        canonical_sign(&mut col);
        out.set_column(k, &DVector::from_vec(col));
    }
    Spectrum {
        values: vals,
        vectors: out,
    }
}

/// Full symmetric eigendecomposition, eigenvalues ascending.
pub fn eig_ascending(l: &DMatrix<f64>) -> Result<Spectrum> {
    assert_eq!(l.nrows(), l.ncols(), "matrix must be square");
    if l.nrows() == 0 {
        return Ok(Spectrum {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(l.clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or(SpectralError::ConvergenceFailure)?;
    Ok(sorted_spectrum(&eig.eigenvalues, &eig.eigenvectors))
}

/// Symmetric sparse matrix in adjacency-list form.
#[derive(Debug, Clone)]
pub(crate) struct SparseSym {
    pub diag: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = self.diag[i] * x[i];
            for &(j, v) in row {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, v) in &self.rows[i] {
                m[(i, j)] = v;
            }
        }
        m
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the components of `w` along every basis vector, twice.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dotv(w, q);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, basis);
        let norm = dotv(&v, &v).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            return Some(v);
        }
    }
    None
}

/// `m` Lanczos steps with full reorthogonalization. On breakdown the
/// recurrence restarts from a fresh random vector orthogonal to the basis, so
/// invariant subspaces do not stop it early. Returns the basis, the
/// tridiagonal coefficients and the residual coupling `β_m`.
fn lanczos_run(
    op: &SparseSym,
    m: usize,
    seed: u64,
) -> Option<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>, f64)> {
    let n = op.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut q = random_unit(&mut rng, n, &basis)?;
    let mut w = vec![0.0; n];
    loop {
        op.apply(&q, &mut w);
        let a = dotv(&w, &q);
        alpha.push(a);
        basis.push(q);
        orthogonalize(&mut w, &basis);
        let b = dotv(&w, &w).sqrt();
        if basis.len() == m {
            return Some((basis, alpha, beta, b));
        }
        if b > 1e-10 {
            beta.push(b);
            q = w.iter().map(|x| x / b).collect();
        } else {
            beta.push(0.0);
            q = random_unit(&mut rng, n, &basis)?;
        }
    }
}

/// Lowest `nev` eigenpairs of a symmetric sparse operator by Lanczos with a
/// growing Krylov dimension until the wanted Ritz pairs converge.
pub(crate) fn lanczos_lowest(op: &SparseSym, nev: usize, seed: u64) -> Result<Spectrum> {
    let n = op.n();
    let nev = nev.min(n);
    if n <= 2 {
        let mut s = eig_ascending(&op.to_dense())?;
        s.values.truncate(nev);
        s.vectors = s.vectors.columns(0, nev).into_owned();
        return Ok(s);
    }
    let mut m = n.min((2 * nev + 20).max(40));
    loop {
        let (basis, alpha, beta, b_last) =
            lanczos_run(op, m, seed).ok_or(SpectralError::ConvergenceFailure)?;
        let k = basis.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let ritz = eig_ascending(&t)?;
        let scale = ritz
            .values
            .iter()
            .fold(1.0f64, |acc, v| acc.max(v.abs()));
        let converged = (0..nev).all(|i| (b_last * ritz.vectors[(k - 1, i)]).abs() <= 1e-9 * scale);
        if converged || m == n {
            let mut vectors = DMatrix::zeros(n, nev);
            for c in 0..nev {
                let mut v = vec![0.0; n];
                for (j, q) in basis.iter().enumerate() {
                    let s = ritz.vectors[(j, c)];
                    v.iter_mut().zip(q).for_each(|(x, y)| *x += s * y);
                }
                let norm = dotv(&v, &v).sqrt();
                v.iter_mut().for_each(|x| *x /= norm);
                canonical_sign(&mut v);
                vectors.set_column(c, &DVector::from_vec(v));
            }
            return Ok(Spectrum {
                values: ritz.values[..nev].to_vec(),
                vectors,
            });
        }
        m = n.min(2 * m);
    }
}
