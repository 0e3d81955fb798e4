//! Discretized branching operator and its principal eigenvalue.
//!
//! The mean-offspring operator of the limit branching process truncated at
//! `t_hat` acts as an integral operator with the symmetric kernel
//! `K(u, s) = E(u) E(s) / (lambda(u) lambda(s)) * min(t_hat, u, s)`
//! against the weight `rho = lambda f / E`. Composite trapezoid quadrature
//! on nodes clustered near zero (where `E / lambda` blows up like `1/u`)
//! turns it into a finite symmetric eigenproblem; power iteration started
//! from the all-ones vector finds the principal pair deterministically.
//! The eigenvalue crosses one exactly at the critical time, and the
//! transformed eigenfunction `w = lambda v / E` must solve
//! `mu w'' = -H w` with `w(0) = 0, w'(0) = 1`; that independent
//! Sturm-Liouville route serves as a consistency check.

use crate::ode::LambdaSolution;
use crate::{Error, Result};

/// Quadrature discretization of the branching operator at one `t_hat`.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub t_hat: f64,
    /// Quadrature nodes `u_1 < ... < u_G` on `(0, u_max]`.
    pub nodes: Vec<f64>,
    /// Trapezoid weights against the measure `rho`: `w_i = rho(u_i) delta_i`.
    pub weights: Vec<f64>,
    /// Row-major `G x G` kernel values.
    pub kernel: Vec<f64>,
    /// `E(u_i) / lambda(u_i)`, kept for the eigenfunction transform.
    pub e_over_lambda: Vec<f64>,
}

/// Converged principal pair.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub mu: f64,
    /// Eigenvector on the nodes, positive, normalized to sup-norm one.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Build the quadrature grid: `u_max` is chosen where the remaining mass
/// of `H` drops below 1e-8; nodes are split between a geometric zone near
/// zero, a uniform zone over the bulk of the `H` mass, and a log-spaced
/// zone following the heavy tail.
pub fn build_grid(sol: &LambdaSolution, t_hat: f64, g: usize) -> Result<KernelGrid> {
    build_grid_alloc(sol, t_hat, g, 0.15, 0.10)
}

/// `build_grid` with explicit zone fractions (geometric, tail).
pub fn build_grid_alloc(
    sol: &LambdaSolution,
    t_hat: f64,
    g: usize,
    geo_frac: f64,
    tail_frac: f64,
) -> Result<KernelGrid> {
    if g < 100 {
        return Err(Error::Solver(format!("kernel grid needs at least 100 nodes, got {g}")));
    }
    if !(t_hat > 0.0) {
        return Err(Error::Solver(format!("t_hat must be positive, got {t_hat}")));
    }
    let horizon = sol.horizon();
    let tail_target = 1e-8;
    let u_max = if 1.0 - sol.hitting_cdf(horizon) >= tail_target {
        horizon
    } else {
        crate::ode::bisect(
            |t| (1.0 - sol.hitting_cdf(t)) - tail_target,
            0.0,
            horizon,
            1e-10,
        )
    };

    // Three zones: geometric nodes resolve the 1/u blow-up of E/lambda
    // near zero, uniform nodes cover the bulk of the H mass, and
    // log-spaced nodes follow the heavy 1/(t log^2 t) tail out to u_max
    // (which can sit many decades beyond the bulk).
    let bulk_end = crate::ode::bisect(
        |t| (1.0 - sol.hitting_cdf(t)) - 1e-2,
        0.0,
        u_max,
        1e-10,
    )
    .max(1.0)
    .min(u_max);
    let crossover = (bulk_end / 4.0).min(1.0);
    let g_geo = (g as f64 * geo_frac) as usize;
    let g_tail =
        if u_max > 4.0 * bulk_end { (g as f64 * tail_frac) as usize } else { 0 };
    let g_uni = g - g_geo - g_tail;
    let mut nodes = Vec::with_capacity(g);
    // Contributions below 1e-5 * crossover scale like u^4; no need to
    // spend decades there.
    let lo = 1e-5 * crossover;
    let ratio = (crossover / lo).powf(1.0 / g_geo as f64);
    let mut u = lo;
    for _ in 0..g_geo {
        nodes.push(u);
        u *= ratio;
    }
    let start = *nodes.last().unwrap();
    let uni_end = if g_tail > 0 { bulk_end } else { u_max };
    let h = (uni_end - start) / g_uni as f64;
    for i in 1..=g_uni {
        nodes.push(start + h * i as f64);
    }
    if g_tail > 0 {
        let start = *nodes.last().unwrap();
        let ratio = (u_max / start).powf(1.0 / g_tail as f64);
        let mut u = start;
        for _ in 0..g_tail {
            u *= ratio;
            nodes.push(u);
        }
    }
    // Both the kernel and the principal eigenfunction have a kink at
    // t_hat; snapping the nearest node onto it keeps the trapezoid error
    // from depending on where the kink falls inside an interval.
    if t_hat.is_finite() && t_hat > nodes[0] && t_hat < u_max {
        let pos = nodes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t_hat).abs().total_cmp(&(b.1 - t_hat).abs()))
            .map(|(i, _)| i)
            .unwrap();
        nodes[pos] = t_hat;
    }

    let mut weights = Vec::with_capacity(g);
    for i in 0..g {
        let left = if i == 0 { 0.0 } else { nodes[i - 1] };
        let right = if i + 1 == g { nodes[g - 1] } else { nodes[i + 1] };
        weights.push(sol.rho_weight(nodes[i]) * (right - left) / 2.0);
    }

    let e_over_lambda: Vec<f64> = nodes
        .iter()
        .map(|&u| {
            let lam = sol.lambda(u);
            if lam <= 0.0 {
                // lambda ~ u near zero; fall back to the series limit.
                sol.mean_children(u) / u
            } else {
                sol.mean_children(u) / lam
            }
        })
        .collect();

    // The dense kernel is only materialized at sizes where the O(G^2)
    // memory is harmless; iteration itself uses the min-structure.
    let kernel = if g <= KERNEL_MATERIALIZE_MAX {
        let mut kernel = vec![0.0; g * g];
        for i in 0..g {
            for j in i..g {
                let v =
                    e_over_lambda[i] * e_over_lambda[j] * t_hat.min(nodes[i]).min(nodes[j]);
                kernel[i * g + j] = v;
                kernel[j * g + i] = v;
            }
        }
        kernel
    } else {
        Vec::new()
    };
    Ok(KernelGrid { t_hat, nodes, weights, kernel, e_over_lambda })
}

/// Largest grid for which the dense kernel matrix is stored.
pub const KERNEL_MATERIALIZE_MAX: usize = 4096;

/// Power iteration with Rayleigh-quotient convergence, seeded with the
/// all-ones vector. The operator is applied through the min-kernel
/// structure in O(G) per sweep: with `a = E/lambda` and `m_i =
/// min(t_hat, u_i)`, `(Bv)_i = a_i (prefix_i(a m w v) + m_i suffix_i(a w v))`.
pub fn principal_eigenvalue(grid: &KernelGrid, tol: f64, max_iters: usize) -> Result<EigenPair> {
    let g = grid.nodes.len();
    let a = &grid.e_over_lambda;
    let m: Vec<f64> = grid.nodes.iter().map(|&u| grid.t_hat.min(u)).collect();
    let mut v = vec![1.0f64; g];
    let mut y = vec![0.0f64; g];
    let mut mu_prev = f64::NAN;
    for iter in 1..=max_iters {
        let mut prefix = 0.0f64;
        for i in 0..g {
            prefix += a[i] * m[i] * grid.weights[i] * v[i];
            y[i] = prefix;
        }
        let mut suffix = 0.0f64;
        for i in (0..g).rev() {
            y[i] = a[i] * (y[i] + m[i] * suffix);
            suffix += a[i] * grid.weights[i] * v[i];
        }
        // Rayleigh quotient in the rho inner product.
        let num: f64 = (0..g).map(|i| v[i] * y[i] * grid.weights[i]).sum();
        let den: f64 = (0..g).map(|i| v[i] * v[i] * grid.weights[i]).sum();
        let mu = num / den;
        let sup = y.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
        for x in y.iter_mut() {
            *x /= sup;
        }
        std::mem::swap(&mut v, &mut y);
        if (mu - mu_prev).abs() < tol {
            return Ok(EigenPair { mu, vector: v, iterations: iter });
        }
        mu_prev = mu;
    }
    Err(Error::Solver(format!(
        "power iteration did not converge within {max_iters} iterations (last mu {mu_prev})"
    )))
}

/// Consistency report of the eigenpair against the Sturm-Liouville route.
#[derive(Debug, Clone, Copy)]
pub struct CrosscheckReport {
    /// Max relative deviation between the transformed eigenvector and the
    /// integrated `mu w'' = -H w` solution on nodes up to `t_hat`.
    pub max_residual: f64,
    /// `|mu w'(t_hat) - w(t_hat) (1 - int_0^t_hat H)|`.
    pub boundary_residual: f64,
}

/// Transform the eigenvector to `w = lambda v / E`, rescale to unit
/// initial slope, and compare with a direct integration of
/// `mu w'' = -H w`, `w(0) = 0`, `w'(0) = 1`.
pub fn eigenfunction_crosscheck(
    grid: &KernelGrid,
    sol: &LambdaSolution,
    pair: &EigenPair,
) -> CrosscheckReport {
    let w_raw: Vec<f64> =
        (0..grid.nodes.len()).map(|i| pair.vector[i] / grid.e_over_lambda[i]).collect();
    // Small-t slope from the first node (w ~ w'(0) u + O(u^3) there).
    let scale = grid.nodes[0] / w_raw[0];

    // Fixed-step RK4 for the 2-state linear system on [0, t_hat].
    let t_end = grid.t_hat.min(sol.horizon());
    let steps = 40_000usize;
    let h = t_end / steps as f64;
    let mut w = 0.0f64;
    let mut wp = 1.0f64;
    let rhs = |t: f64, w: f64, wp: f64| -> (f64, f64) {
        (wp, -sol.hitting_density(t) * w / pair.mu)
    };
    let mut node_iter = grid.nodes.iter().enumerate().peekable();
    let mut max_residual = 0.0f64;
    for step in 0..steps {
        let t = step as f64 * h;
        while let Some(&(i, &u)) = node_iter.peek() {
            if u <= t + h {
                // Linear placement inside the step is plenty at this h.
                let frac = ((u - t) / h).clamp(0.0, 1.0);
                let w_at = w + frac * h * wp;
                let rel = (scale * w_raw[i] - w_at).abs() / w_at.abs().max(1e-12);
                max_residual = max_residual.max(rel);
                node_iter.next();
            } else {
                break;
            }
        }
        let (k1w, k1p) = rhs(t, w, wp);
        let (k2w, k2p) = rhs(t + h / 2.0, w + h / 2.0 * k1w, wp + h / 2.0 * k1p);
        let (k3w, k3p) = rhs(t + h / 2.0, w + h / 2.0 * k2w, wp + h / 2.0 * k2p);
        let (k4w, k4p) = rhs(t + h, w + h * k3w, wp + h * k3p);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        wp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
    let boundary_residual = (pair.mu * wp - w * (1.0 - sol.hitting_cdf(t_end))).abs();
    CrosscheckReport { max_residual, boundary_residual }
}

/// Convenience: eigenvalue of the branching operator at one `t_hat`.
pub fn mu_at(sol: &LambdaSolution, t_hat: f64, g: usize) -> Result<EigenPair> {
    let grid = build_grid(sol, t_hat, g)?;
    principal_eigenvalue(&grid, 1e-10, 20_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DegreeDistribution;

    fn dist3() -> DegreeDistribution {
        DegreeDistribution::from_pmf(&[(3, 1.0)]).unwrap()
    }

    #[test]
    fn kernel_symmetric_nonnegative() {
        let sol = LambdaSolution::solve(&dist3()).unwrap();
        let grid = build_grid(&sol, 1.0, 500).unwrap();
        let g = grid.nodes.len();
        for i in 0..g {
            for j in 0..g {
                let a = grid.kernel[i * g + j];
                let b = grid.kernel[j * g + i];
                assert!(a.to_bits() == b.to_bits(), "kernel not bitwise symmetric");
                assert!(a >= 0.0);
            }
            assert!(grid.weights[i] >= 0.0);
        }
    }

    #[test]
    fn tiny_t_hat_kills_kernel() {
        // Below the smallest node the factor min(t_hat, u, s) makes every
        // kernel entry proportional to t_hat.
        let sol = LambdaSolution::solve(&dist3()).unwrap();
        let max_at = |t_hat: f64| {
            let grid = build_grid(&sol, t_hat, 200).unwrap();
            grid.kernel.iter().fold(0.0f64, |m, &x| m.max(x))
        };
        let ratio = max_at(1e-12) / max_at(1e-9);
        assert!((ratio - 1e-3).abs() < 1e-5, "ratio {ratio}");
        assert!(build_grid(&sol, 1.0, 50).is_err());
        assert!(build_grid(&sol, 0.0, 200).is_err());
    }

    #[test]
    fn eigenvector_positive_and_converges() {
        let sol = LambdaSolution::solve(&dist3()).unwrap();
        let pair = mu_at(&sol, 1.0, 400).unwrap();
        assert!(pair.vector.iter().all(|&x| x > 0.0));
        assert!(pair.mu > 0.0);
    }

    #[test]
    fn grid_refinement_stable() {
        // Doubling G away from 2000 moves mu by less than 1e-4.
        let sol = LambdaSolution::solve(&dist3()).unwrap();
        let a = mu_at(&sol, 1.2, 2000).unwrap().mu;
        let b = mu_at(&sol, 1.2, 4000).unwrap().mu;
        assert!((a - b).abs() < 1e-4, "mu {a} vs {b}");
    }

    #[test]
    fn mu_is_one_at_critical_time() {
        let dist = dist3();
        let (sol, report) = crate::ode::critical_time(&dist, 1e-11).unwrap();
        let pair = mu_at(&sol, report.t_hat_c, 2000).unwrap();
        assert!((pair.mu - 1.0).abs() < 5e-3, "mu at critical time: {}", pair.mu);
    }

    #[test]
    fn mu_increases_in_t_hat() {
        let sol = LambdaSolution::solve(&dist3()).unwrap();
        let mut prev = 0.0;
        for i in 1..=10 {
            let t_hat = 0.2 * i as f64;
            let mu = mu_at(&sol, t_hat, 600).unwrap().mu;
            assert!(mu > prev, "mu ladder not increasing at {t_hat}: {mu} after {prev}");
            prev = mu;
        }
    }

    #[test]
    fn matches_dense_symmetric_eigensolve() {
        // Independent oracle: symmetrize M = D^{1/2} K D^{1/2} (D = diag
        // of weights) and take nalgebra's largest symmetric eigenvalue.
        let sol = LambdaSolution::solve(&dist3()).unwrap();
        let grid = build_grid(&sol, 1.0, 260).unwrap();
        let g = grid.nodes.len();
        let mut m = nalgebra::DMatrix::<f64>::zeros(g, g);
        for i in 0..g {
            for j in 0..g {
                m[(i, j)] = grid.weights[i].sqrt()
                    * grid.kernel[i * g + j]
                    * grid.weights[j].sqrt();
            }
        }
        let dense_mu = nalgebra::SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let power_mu = principal_eigenvalue(&grid, 1e-12, 50_000).unwrap().mu;
        assert!(
            (dense_mu - power_mu).abs() < 1e-8,
            "dense {dense_mu} vs power {power_mu}"
        );
    }

    #[test]
    fn eigenfunction_satisfies_sturm_liouville() {
        let dist = dist3();
        let (sol, report) = crate::ode::critical_time(&dist, 1e-11).unwrap();
        let grid = build_grid(&sol, report.t_hat_c, 2000).unwrap();
        let pair = principal_eigenvalue(&grid, 1e-10, 20_000).unwrap();
        let check = eigenfunction_crosscheck(&grid, &sol, &pair);
        assert!(check.max_residual < 1e-2, "w residual {}", check.max_residual);
        assert!(check.boundary_residual < 1e-2, "boundary {}", check.boundary_residual);
        // w increasing and concave on [0, t_hat]: check the transformed
        // eigenvector along the nodes.
        let w: Vec<f64> = (0..grid.nodes.len())
            .map(|i| pair.vector[i] / grid.e_over_lambda[i])
            .collect();
        let upto = grid.nodes.iter().position(|&u| u > report.t_hat_c).unwrap_or(w.len());
        for i in 1..upto {
            assert!(w[i] >= w[i - 1] - 1e-9, "w not increasing at node {i}");
        }
    }
}
