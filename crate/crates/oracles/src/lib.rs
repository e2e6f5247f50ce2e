//! Slow, independent reference computations used only by tests.
//!
//! Everything here works on plain `Vec<Vec<f64>>` and shares no code with
//! `spice-core`, so agreement between the two is meaningful.

pub type Mat = Vec<Vec<f64>>;

pub fn identity(p: usize) -> Mat {
    (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn frobenius(a: &Mat) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect()).collect()
}

/// Determinant by Laplace expansion along the first row.
pub fn det_cofactor(a: &Mat) -> f64 {
    let n = a.len();
    match n {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => {
            let mut total = 0.0;
            for c in 0..n {
                if a[0][c] == 0.0 {
                    continue;
                }
                let minor: Mat = a[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, v)| *v).collect())
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * a[0][c] * det_cofactor(&minor);
            }
            total
        }
    }
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse_gauss_jordan(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let mut aug: Mat = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))?;
        if aug[pivot][col].abs() < 1e-300 {
            return None;
        }
        aug.swap(col, pivot);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    let pivot_row = aug[col].clone();
                    for (v, pv) in aug[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut m = a.clone();
    let scale: f64 = a.iter().flatten().map(|v| v * v).sum();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// `tr(Omega S) - log det Omega + lambda sum_{i != j} |omega_ij|`, or `None`
/// when `Omega` is not positive definite.
pub fn lasso_objective(s: &Mat, omega: &Mat, lambda: f64) -> Option<f64> {
    let eig = jacobi_eigenvalues(omega);
    if eig[0] <= 0.0 {
        return None;
    }
    let p = s.len();
    let mut trace = 0.0;
    let mut pen = 0.0;
    for i in 0..p {
        for j in 0..p {
            trace += omega[i][j] * s[j][i];
            if i != j {
                pen += omega[i][j].abs();
            }
        }
    }
    Some(trace - eig.iter().map(|e| e.ln()).sum::<f64>() + lambda * pen)
}

fn smooth_part(s: &Mat, omega: &Mat) -> Option<f64> {
    lasso_objective(s, omega, 0.0)
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn prox_step(omega: &Mat, grad: &Mat, step: f64, lambda: f64) -> Mat {
    let p = omega.len();
    (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let v = omega[i][j] - step * grad[i][j];
                    if i == j {
                        v
                    } else {
                        soft(v, step * lambda)
                    }
                })
                .collect()
        })
        .collect()
}

/// Minimizes [`lasso_objective`] by accelerated proximal gradient descent
/// with backtracking and restarts, starting from `diag(1 / s_ii)`. Stops when
/// the gradient mapping drops below `tol`. Returns the minimizer and its
/// objective.
pub fn proximal_gradient_lasso(s: &Mat, lambda: f64, tol: f64, max_iter: usize) -> (Mat, f64) {
    let p = s.len();
    let mut x: Mat = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 / s[i][i] } else { 0.0 }).collect())
        .collect();
    let mut fx = lasso_objective(s, &x, lambda).expect("diagonal start is positive definite");
    let mut y = x.clone();
    let mut theta = 1.0_f64;
    let mut step = 1.0;
    for _ in 0..max_iter {
        let Some(g0) = smooth_part(s, &y) else {
            y = x.clone();
            theta = 1.0;
            continue;
        };
        let grad = sub(s, &inverse_gauss_jordan(&y).expect("positive definite"));
        step *= 1.5;
        let (cand, gmap) = loop {
            let cand = prox_step(&y, &grad, step, lambda);
            let diff = sub(&cand, &y);
            if let Some(g1) = smooth_part(s, &cand) {
                let lin: f64 = diff.iter().flatten().zip(grad.iter().flatten()).map(|(d, g)| d * g).sum();
                let quad = frobenius(&diff).powi(2) / (2.0 * step);
                if g1 <= g0 + lin + quad + 1e-14 * g0.abs() {
                    break (cand, frobenius(&diff) / step);
                }
            }
            step *= 0.5;
            assert!(step > 1e-30, "backtracking failed");
        };
        let fc = lasso_objective(s, &cand, lambda).expect("accepted points are positive definite");
        if fc > fx {
            // momentum overshot; restart from the last accepted point
            if y == x {
                break;
            }
            y = x.clone();
            theta = 1.0;
            continue;
        }
        let theta_next = (1.0 + (1.0 + 4.0 * theta * theta).sqrt()) / 2.0;
        let beta = (theta - 1.0) / theta_next;
        y = cand.iter().zip(&x).map(|(c, o)| c.iter().zip(o).map(|(a, b)| a + beta * (a - b)).collect()).collect();
        x = cand;
        fx = fc;
        theta = theta_next;
        if gmap < tol {
            break;
        }
    }
    (x, fx)
}

/// Shrinkage toward `mu I` written out with explicit outer products:
/// `S = (1/n) sum x_k x_k^T` on centered rows, `mu = tr(S)/p`,
/// `d^2 = ||S - mu I||^2 / p`, `bbar^2 = (1/n^2) sum ||x_k x_k^T - S||^2 / p`,
/// `b^2 = min(bbar^2, d^2)`, result `(b^2/d^2) mu I + (1 - b^2/d^2) S`.
pub fn ledoit_wolf_literal(rows: &Mat) -> (Mat, f64) {
    let n = rows.len();
    let p = rows[0].len();
    let means: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered: Mat = rows.iter().map(|r| r.iter().zip(&means).map(|(v, m)| v - m).collect()).collect();
    let outer = |x: &Vec<f64>| -> Mat { (0..p).map(|i| (0..p).map(|j| x[i] * x[j]).collect()).collect() };
    let mut s = vec![vec![0.0; p]; p];
    for x in &centered {
        let o = outer(x);
        for i in 0..p {
            for j in 0..p {
                s[i][j] += o[i][j] / n as f64;
            }
        }
    }
    let mu = (0..p).map(|i| s[i][i]).sum::<f64>() / p as f64;
    let mut mu_i = identity(p);
    for row in mu_i.iter_mut() {
        for v in row.iter_mut() {
            *v *= mu;
        }
    }
    let d2 = frobenius(&sub(&s, &mu_i)).powi(2) / p as f64;
    if d2 == 0.0 {
        return (s, 0.0);
    }
    let bbar2 = centered
        .iter()
        .map(|x| frobenius(&sub(&outer(x), &s)).powi(2) / p as f64)
        .sum::<f64>()
        / (n * n) as f64;
    let b2 = bbar2.min(d2);
    let rho = b2 / d2;
    let out = (0..p)
        .map(|i| (0..p).map(|j| rho * mu_i[i][j] + (1.0 - rho) * s[i][j]).collect())
        .collect();
    (out, rho)
}
