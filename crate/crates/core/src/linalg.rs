//! Dense and tridiagonal symmetric eigensolvers.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`eigensolve`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Per-eigenpair residual bound ‖Hv − λv‖ ≤ RESIDUAL_TOL·‖H‖.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Full eigendecomposition, eigenvalues ascending, column k of `vectors` is
/// the eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub fn max_asymmetry(h: &Mat<f64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(h: &Mat<f64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::Domain(format!("matrix is {}x{}, not square", h.nrows(), h.ncols())));
    }
    let scale = h.norm_max().max(f64::MIN_POSITIVE);
    let asym = max_asymmetry(h);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym / scale });
    }
    Ok(())
}

/// Symmetric eigendecomposition with a residual check on every eigenpair.
pub fn eigensolve(h: &Mat<f64>) -> Result<Eigen> {
    check_symmetric(h)?;
    let n = h.nrows();
    let evd = h.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let values: Vec<f64> = (0..n).map(|k| s.read(k)).collect();
    let vectors = evd.u().to_owned();

    let norm = h.norm_l2().max(f64::MIN_POSITIVE);
    let hv = h * &vectors;
    for (k, &lambda) in values.iter().enumerate() {
        if !lambda.is_finite() {
            return Err(Error::EigenNotConverged { index: k, residual: f64::NAN });
        }
        let mut r2 = 0.0;
        for i in 0..n {
            let r = hv[(i, k)] - lambda * vectors[(i, k)];
            r2 += r * r;
        }
        let residual = r2.sqrt();
        if !(residual <= RESIDUAL_TOL * norm) {
            return Err(Error::EigenNotConverged { index: k, residual: residual / norm });
        }
    }
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only (ascending).
pub fn eigenvalues(h: &Mat<f64>) -> Result<Vec<f64>> {
    check_symmetric(h)?;
    let mut v = h.selfadjoint_eigenvalues(Side::Lower);
    if let Some(k) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::EigenNotConverged { index: k, residual: f64::NAN });
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length must be n - 1");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let (lo, hi) = self.gershgorin();
        let tiny = f64::EPSILON * (hi - lo).abs().max(1.0) * 1e-3;
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let qq = if q.abs() < tiny { tiny.copysign(q) } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / qq;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let width = (hi - lo).max(1.0);
        lo -= 1e-9 * width;
        hi += 1e-9 * width;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `k` smallest eigenvalues.
    pub fn lowest(&self, k: usize) -> Vec<f64> {
        (0..k.min(self.len())).map(|i| self.eigenvalue(i)).collect()
    }

    /// Unit eigenvector for eigenvalue `lambda` by inverse iteration.
    ///
    /// `previous` holds already computed eigenvectors with nearby eigenvalues;
    /// the iterate is kept orthogonal to them.
    pub fn eigenvector(&self, lambda: f64, previous: &[&[f64]]) -> Vec<f64> {
        let n = self.len();
        let (lo, hi) = self.gershgorin();
        let scale = (hi - lo).abs().max(1.0);
        let lu = TridiagLu::factor(self, lambda, f64::EPSILON * scale);
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * ((i as f64) * 0.754_877_666).sin())
            .collect();
        for _ in 0..6 {
            orthogonalize(&mut v, previous);
            normalize(&mut v);
            lu.solve(&mut v);
        }
        orthogonalize(&mut v, previous);
        normalize(&mut v);
        v
    }
}

fn orthogonalize(v: &mut [f64], basis: &[&[f64]]) {
    for _ in 0..2 {
        for b in basis {
            let d: f64 = v.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b.iter()).for_each(|(x, y)| *x -= d * y);
        }
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// LU factorization with partial pivoting of T − λI (T tridiagonal).
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &SymTridiagonal, lambda: f64, pivot_floor: f64) -> Self {
        let n = t.len();
        let mut dl = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|x| x - lambda).collect();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < pivot_floor {
                    d[i] = pivot_floor;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1].abs() < pivot_floor {
            d[n - 1] = pivot_floor;
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * b[i + 2];
            }
            b[i] = s / self.d[i];
        }
        let m = b.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if m > 0.0 && m.is_finite() {
            b.iter_mut().for_each(|x| *x /= m);
        }
    }
}
