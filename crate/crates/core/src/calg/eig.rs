//! Eigenvalues and eigenvectors of small dense complex matrices via the
//! shifted QR iteration on a Hessenberg reduction, with eigenvectors
//! recovered from SVD null spaces. Intended for the low-dimensional
//! Jacobians that appear in basin linearization (n = 2..4 in practice).

use nalgebra::SVD;

use super::{AlgError, CMatrix, Cpx};

/// Eigenvalues sorted by descending modulus (ties by `re`, then `im`),
/// with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Cpx>,
    /// Column `i` is a unit eigenvector for `values[i]`.
    pub vectors: CMatrix,
}

fn sort_key(l: &Cpx) -> (f64, f64, f64) {
    (-l.norm(), l.re, l.im)
}

fn eig_2x2(a: Cpx, b: Cpx, c: Cpx, d: Cpx) -> (Cpx, Cpx) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det.scale(4.0)).sqrt();
    let l1 = (tr + disc).scale(0.5);
    let l2 = (tr - disc).scale(0.5);
    (l1, l2)
}

/// Complex Givens rotation zeroing `b` in the pair `(a, b)`.
fn givens(a: Cpx, b: Cpx) -> (f64, Cpx) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Cpx::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, Cpx::new(1.0, 0.0));
    }
    let n = (an * an + bn * bn).sqrt();
    let c = an / n;
    let s = (a / an) * b.conj() / n;
    (c, s)
}

fn hessenberg(mut a: CMatrix) -> CMatrix {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        for i in (k + 2..n).rev() {
            let (c, s) = givens(a[(k + 1, k)], a[(i, k)]);
            if s.norm() == 0.0 {
                continue;
            }
            // rows k+1 and i
            for col in 0..n {
                let x = a[(k + 1, col)];
                let y = a[(i, col)];
                a[(k + 1, col)] = x.scale(c) + s * y;
                a[(i, col)] = -s.conj() * x + y.scale(c);
            }
            // matching columns to keep similarity
            for row in 0..n {
                let x = a[(row, k + 1)];
                let y = a[(row, i)];
                a[(row, k + 1)] = x.scale(c) + s.conj() * y;
                a[(row, i)] = -s * x + y.scale(c);
            }
        }
    }
    a
}

/// Eigenvalues of a square complex matrix, sorted by descending modulus.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Cpx>, AlgError> {
    let n = a.nrows();
    if n != a.ncols() || n == 0 {
        return Err(AlgError::DimMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let mut h = hessenberg(a.clone());
    let mut vals: Vec<Cpx> = Vec::with_capacity(n);
    let mut hi = n; // active block is 0..hi
    let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    let eps = 1e-14 * scale;
    let mut iters = 0usize;
    let max_iters = 200 * n;
    while hi > 0 {
        if hi == 1 {
            vals.push(h[(0, 0)]);
            break;
        }
        // deflate trailing entries
        if h[(hi - 1, hi - 2)].norm()
            <= 1e-14 * (h[(hi - 1, hi - 1)].norm() + h[(hi - 2, hi - 2)].norm()).max(eps)
        {
            vals.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            continue;
        }
        if hi == 2 {
            let (l1, l2) = eig_2x2(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
            vals.push(l1);
            vals.push(l2);
            break;
        }
        iters += 1;
        if iters > max_iters {
            return Err(AlgError::NonFinite);
        }
        // Wilkinson shift from the trailing 2x2 of the active block.
        let (l1, l2) = eig_2x2(
            h[(hi - 2, hi - 2)],
            h[(hi - 2, hi - 1)],
            h[(hi - 1, hi - 2)],
            h[(hi - 1, hi - 1)],
        );
        let d = h[(hi - 1, hi - 1)];
        let mu = if (l1 - d).norm() <= (l2 - d).norm() {
            l1
        } else {
            l2
        };
        // Explicit QR step on the active block: H - mu I = QR, H <- RQ + mu I.
        let m = hi;
        let mut rots: Vec<(f64, Cpx)> = Vec::with_capacity(m - 1);
        for i in 0..m {
            h[(i, i)] -= mu;
        }
        for k in 0..m - 1 {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rots.push((c, s));
            for col in k..m {
                let x = h[(k, col)];
                let y = h[(k + 1, col)];
                h[(k, col)] = x.scale(c) + s * y;
                h[(k + 1, col)] = -s.conj() * x + y.scale(c);
            }
        }
        for (k, (c, s)) in rots.iter().enumerate() {
            for row in 0..(k + 2).min(m) {
                let x = h[(row, k)];
                let y = h[(row, k + 1)];
                h[(row, k)] = x.scale(*c) + s.conj() * y;
                h[(row, k + 1)] = -*s * x + y.scale(*c);
            }
        }
        for i in 0..m {
            h[(i, i)] += mu;
        }
    }
    vals.sort_by(|x, y| sort_key(x).partial_cmp(&sort_key(y)).unwrap());
    Ok(vals)
}

/// Full eigen decomposition with eigenvectors from SVD null spaces. For a
/// repeated eigenvalue, successive occurrences take successive smallest
/// singular directions, so a semisimple eigenvalue still yields an
/// independent set of columns.
pub fn eigen_decomposition(a: &CMatrix) -> Result<EigenDecomposition, AlgError> {
    let n = a.nrows();
    let values = eigenvalues(a)?;
    let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    let mut vectors = CMatrix::zeros(n, n);
    for (i, lam) in values.iter().enumerate() {
        let multiplicity_rank = values[..i]
            .iter()
            .filter(|prev| (*prev - lam).norm() <= 1e-9 * scale)
            .count();
        let mut m = a.clone();
        for d in 0..n {
            m[(d, d)] -= lam;
        }
        let svd = SVD::new(m, false, true);
        let vt = svd.v_t.ok_or(AlgError::NonFinite)?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&x, &y| {
            svd.singular_values[x]
                .partial_cmp(&svd.singular_values[y])
                .unwrap()
        });
        let pick = order[multiplicity_rank.min(order.len() - 1)];
        for r in 0..n {
            vectors[(r, i)] = vt[(pick, r)].conj();
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::rng;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Cpx {
        Cpx::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 0)] = c(0.5, 0.0);
        a[(1, 1)] = c(0.0, 0.25);
        a[(2, 2)] = c(-0.75, 0.1);
        let vals = eigenvalues(&a).unwrap();
        assert!((vals[0] - c(-0.75, 0.1)).norm() < 1e-12);
        assert!((vals[1] - c(0.5, 0.0)).norm() < 1e-12);
        assert!((vals[2] - c(0.0, 0.25)).norm() < 1e-12);
    }

    #[test]
    fn recovers_constructed_spectrum() {
        // Oracle: build A = P D P^{-1} with a known diagonal and compare.
        let mut r = rng(42);
        for trial in 0..50 {
            let n = 2 + trial % 3;
            let mut d_vals: Vec<Cpx> = (0..n)
                .map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
                .collect();
            let mut p = CMatrix::zeros(n, n);
            loop {
                for i in 0..n {
                    for j in 0..n {
                        p[(i, j)] = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                    }
                }
                if p.clone().try_inverse().is_some() {
                    break;
                }
            }
            let pinv = p.clone().try_inverse().unwrap();
            let mut d = CMatrix::zeros(n, n);
            for i in 0..n {
                d[(i, i)] = d_vals[i];
            }
            let a = &p * d * pinv;
            let mut vals = eigenvalues(&a).unwrap();
            let key = |l: &Cpx| (-l.norm(), l.re, l.im);
            d_vals.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
            vals.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
            for (got, want) in vals.iter().zip(d_vals.iter()) {
                assert!(
                    (got - want).norm() < 1e-8,
                    "eigenvalue mismatch: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn eigenvectors_satisfy_definition() {
        let mut r = rng(17);
        for _ in 0..30 {
            let n = 2;
            let mut a = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                }
            }
            let dec = eigen_decomposition(&a).unwrap();
            for i in 0..n {
                let v = dec.vectors.column(i);
                let av = &a * v;
                let lv = v * dec.values[i];
                assert!((av - lv).norm() < 1e-8);
            }
        }
    }
}
