//! Test-only oracles, independent of the library's implementation paths.

use slope_core::{Coefficients, Design, Response};

/// Exhaustive prox oracle for p <= 4.
///
/// Every minimizer is described by an ordering of coordinates by decreasing
/// magnitude, a sign pattern, and a block/zero-tail structure on the sorted
/// magnitudes. For each such pattern the restricted quadratic has a closed
/// form (block means of the shifted target). Enumerating all patterns and
/// evaluating the true objective of each reconstructed candidate therefore
/// covers the optimum; infeasible candidates only ever lose.
pub fn prox_oracle(v: &[f64], lambda: &[f64]) -> Vec<f64> {
    let p = v.len();
    assert!((1..=4).contains(&p));
    assert_eq!(lambda.len(), p);

    let mut best: Vec<f64> = vec![0.0; p];
    let mut best_value = objective(v, lambda, &best);

    for perm in permutations(p) {
        for sign_mask in 0..(1u32 << p) {
            let signs: Vec<f64> = (0..p)
                .map(|j| if sign_mask >> j & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            // Target for the sorted magnitudes u_r.
            let target: Vec<f64> = (0..p)
                .map(|r| signs[perm[r]] * v[perm[r]] - lambda[r])
                .collect();
            for nonzero in 0..=p {
                for blocks in compositions(nonzero) {
                    let mut u = vec![0.0; p];
                    let mut start = 0;
                    for len in &blocks {
                        let mean: f64 =
                            target[start..start + len].iter().sum::<f64>() / *len as f64;
                        for r in start..start + len {
                            u[r] = mean;
                        }
                        start += len;
                    }
                    let mut x = vec![0.0; p];
                    for r in 0..p {
                        x[perm[r]] = signs[perm[r]] * u[r];
                    }
                    let value = objective(v, lambda, &x);
                    if value < best_value {
                        best_value = value;
                        best = x;
                    }
                }
            }
        }
    }
    best
}

fn objective(v: &[f64], lambda: &[f64], x: &[f64]) -> f64 {
    let quad: f64 = x.iter().zip(v).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
    let mut mags: Vec<f64> = x.iter().map(|a| a.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    quad + mags.iter().zip(lambda).map(|(m, w)| m * w).sum::<f64>()
}

fn permutations(p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..p).collect();
    permute(&mut items, 0, &mut out);
    out
}

fn permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// All ordered compositions of m (block size lists summing to m).
fn compositions(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=m {
        for rest in compositions(m - first) {
            let mut c = vec![first];
            c.extend(rest);
            out.push(c);
        }
    }
    out
}

/// Standard normal CDF via Simpson quadrature of the density.
pub fn normal_cdf_quadrature(x: f64) -> f64 {
    let a = x.abs();
    let steps = 4000usize;
    let h = a / steps as f64;
    let density = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut integral = density(0.0) + density(a);
    for i in 1..steps {
        let t = i as f64 * h;
        integral += density(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    integral *= h / 3.0;
    if x >= 0.0 {
        0.5 + integral
    } else {
        0.5 - integral
    }
}

/// Standard normal quantile by bisection on the quadrature CDF.
pub fn normal_quantile_oracle(prob: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0);
    let mut lo = -12.0f64;
    let mut hi = 12.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_quadrature(mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First-principles duality gap, relative infeasibility, and primal value for
/// the problem restricted to `working` (flattened coefficient positions),
/// written from the defining formulas rather than the solver's code path.
pub fn gap_oracle(
    design: &Design,
    response: &Response,
    working: &[usize],
    beta: &Coefficients,
    lambda_full: &[f64],
) -> (f64, f64, f64) {
    let n = design.n();
    let p = design.p();
    let classes = response.classes();
    let m = working.len();
    let lambda: Vec<f64> = lambda_full[..m].to_vec();

    // Linear predictors over the working set only.
    let mut eta = vec![0.0; n * classes];
    for &pos in working {
        let j = pos % p;
        let class = pos / p;
        let b = beta.as_slice()[pos];
        if b != 0.0 {
            design.col_axpy(j, b, &mut eta[class * n..(class + 1) * n]);
        }
    }

    // Loss, pointwise derivative, and conjugate of a scaled dual point.
    let (f, w): (f64, Vec<f64>) = match response {
        Response::Gaussian { values, .. } => {
            let f = values
                .iter()
                .zip(&eta)
                .map(|(y, e)| 0.5 * (y - e) * (y - e))
                .sum();
            let w = values.iter().zip(&eta).map(|(y, e)| e - y).collect();
            (f, w)
        }
        Response::Logistic { values } => {
            let f = values
                .iter()
                .zip(&eta)
                .map(|(y, &e)| e.max(0.0) + (-e.abs()).exp().ln_1p() - y * e)
                .sum();
            let w = values
                .iter()
                .zip(&eta)
                .map(|(y, &e)| 1.0 / (1.0 + (-e).exp()) - y)
                .collect();
            (f, w)
        }
        Response::Poisson { values } => {
            let f = values
                .iter()
                .zip(&eta)
                .map(|(y, &e)| e.exp() - y * e)
                .sum();
            let w = values.iter().zip(&eta).map(|(y, &e)| e.exp() - y).collect();
            (f, w)
        }
        Response::Multinomial { .. } => panic!("gap oracle covers single-response families"),
    };

    let mut sorted_beta: Vec<f64> = working.iter().map(|&pos| beta.as_slice()[pos].abs()).collect();
    sorted_beta.sort_by(|a, b| b.total_cmp(a));
    let penalty: f64 = sorted_beta.iter().zip(&lambda).map(|(m, w)| m * w).sum();
    let primal = f + penalty;

    // Gradient over the working set.
    let mut grad: Vec<f64> = working
        .iter()
        .map(|&pos| {
            let j = pos % p;
            let class = pos / p;
            design.col_dot(j, &w[class * n..(class + 1) * n])
        })
        .collect();
    grad.iter_mut().for_each(|g| *g = g.abs());
    grad.sort_by(|a, b| b.total_cmp(a));

    let mut excess = 0.0f64;
    let mut rho = 0.0f64;
    let (mut cg, mut cl) = (0.0, 0.0);
    for (g, l) in grad.iter().zip(&lambda) {
        cg += g;
        cl += l;
        excess = excess.max(cg - cl);
        if cl > 0.0 {
            rho = rho.max(cg / cl);
        }
    }
    let lambda_total: f64 = lambda.iter().sum();
    let infeas = if lambda_total > 0.0 {
        excess.max(0.0) / lambda_total
    } else {
        0.0
    };

    let scale = 1.0 / rho.max(1.0);
    let theta: Vec<f64> = w.iter().map(|wi| -wi * scale).collect();
    let conj = match response {
        Response::Gaussian { values, .. } => values
            .iter()
            .zip(&theta)
            .map(|(y, t)| 0.5 * t * t - t * y)
            .sum::<f64>(),
        Response::Logistic { values } => values
            .iter()
            .zip(&theta)
            .map(|(y, t)| {
                let a = (y - t).clamp(0.0, 1.0);
                xlogx(a) + xlogx(1.0 - a)
            })
            .sum::<f64>(),
        Response::Poisson { values } => values
            .iter()
            .zip(&theta)
            .map(|(y, t)| {
                let a = (y - t).max(0.0);
                xlogx(a) - a
            })
            .sum::<f64>(),
        Response::Multinomial { .. } => unreachable!(),
    };

    ((primal + conj).max(0.0), infeas, primal)
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Densifies a sparse step-coefficient list.
pub fn dense_coefficients(pairs: &[(usize, f64)], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for &(i, v) in pairs {
        out[i] = v;
    }
    out
}
