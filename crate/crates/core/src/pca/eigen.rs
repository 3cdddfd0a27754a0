//! Cyclic Jacobi eigendecomposition for small dense symmetric matrices.

/// Eigenvalues and eigenvectors of a symmetric matrix, sorted by eigenvalue
/// descending. `vectors[i]` pairs with `values[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 100;

/// Diagonalizes `a` (row-major, `n × n`, symmetric) by repeated plane
/// rotations until every off-diagonal entry is negligible relative to the
/// diagonal scale.
pub fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> SymmetricEigen {
    let n = a.len();
    debug_assert!(a.iter().all(|r| r.len() == n));
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= f64::EPSILON * f64::EPSILON * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    SymmetricEigen {
        values: order.iter().map(|&i| a[i][i]).collect(),
        vectors: order.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect(),
    }
}

fn rotate(a: &mut [Vec<f64>], v: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let n = a.len();
    for k in 0..n {
        let akp = a[k][p];
        let akq = a[k][q];
        a[k][p] = c * akp - s * akq;
        a[k][q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p][k];
        let aqk = a[q][k];
        a[p][k] = c * apk - s * aqk;
        a[q][k] = s * apk + c * aqk;
    }
    for row in v.iter_mut() {
        let vp = row[p];
        let vq = row[q];
        row[p] = c * vp - s * vq;
        row[q] = s * vp + c * vq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn diagonal_is_sorted() {
        let e = symmetric_eigen(vec![vec![1.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(e.values, [3.0, 1.0]);
        assert_eq!(e.vectors[0], [0.0, 1.0]);
    }

    #[test]
    fn two_by_two() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let e = symmetric_eigen(a.clone());
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        for (val, vec) in e.values.iter().zip(&e.vectors) {
            let av = mat_vec(&a, vec);
            for (x, y) in av.iter().zip(vec) {
                assert!((x - val * y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_symmetric_decomposes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                a[i][j] = x;
                a[j][i] = x;
            }
        }
        let e = symmetric_eigen(a.clone());
        for (val, vec) in e.values.iter().zip(&e.vectors) {
            let av = mat_vec(&a, vec);
            for (x, y) in av.iter().zip(vec) {
                assert!((x - val * y).abs() < 1e-10);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = e.vectors[i].iter().zip(&e.vectors[j]).map(|(p, q)| p * q).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }
}
