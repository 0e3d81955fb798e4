//! The lambda initial value problem and everything derived from it.
//!
//! `lambda` solves `lambda' = exp(-lambda) * sum_{k=0}^{delta-1} lambda^k/k! * q_{k+1}`
//! with `lambda(0) = 0`. Its derivative is the probability that the root of
//! the limit object is still unsaturated at time `t`, and every scalar the
//! artifact needs is a closed-form function of `lambda(t)`:
//!
//! * `f = -lambda''`, the density of the root's phantom saturation time,
//! * `H = E f / lambda`, the density of the hitting time of `D - 1` children,
//! * `E`, the expected child count of a non-root vertex given its type,
//! * `rho = lambda f / E`, the weight making the branching operator self-adjoint,
//! * `F = int lambda'^2`, the expected root degree (time change to step counts).
//!
//! The critical time is located through the companion linear system
//! `W'' = -H W`, `W(0) = 0`, `W'(0) = 1`: with `gamma = W' - W (1 - int H)`,
//! the critical time is the unique root of `gamma` before the first zero
//! `theta` of `W'`. Everything is integrated as one autonomous system with
//! a Dormand-Prince 5(4) stepper and cubic Hermite dense output.

use crate::dist::DegreeDistribution;
use crate::{Error, Result};

/// Solver knobs. `abs_tol` is the per-step local error target; integration
/// stops once `lambda'` falls below `lambda_prime_cutoff` (the remaining
/// mass of `f` beyond the horizon is exactly `lambda'(horizon)`).
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub abs_tol: f64,
    pub lambda_prime_cutoff: f64,
    pub t_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, lambda_prime_cutoff: 1e-8, t_cap: 1e12 }
    }
}

/// `lambda'` as a function of `lambda`.
pub(crate) fn psi(dist: &DegreeDistribution, lam: f64) -> f64 {
    let delta = dist.delta_max();
    let mut term = (-lam).exp(); // e^-lam * lam^k / k!
    let mut sum = 0.0;
    for k in 0..=delta.saturating_sub(1) {
        if k > 0 {
            term *= lam / k as f64;
        }
        sum += term * dist.tail(k + 1);
    }
    sum
}

/// `f(t) = -lambda'' = lambda' * e^-lambda * sum lambda^k/k! * p_{k+1}`.
pub(crate) fn f_of_lambda(dist: &DegreeDistribution, lam: f64) -> f64 {
    let delta = dist.delta_max();
    let mut term = (-lam).exp();
    let mut sum = 0.0;
    for k in 0..=delta.saturating_sub(1) {
        if k > 0 {
            term *= lam / k as f64;
        }
        sum += term * dist.pmf(k + 1);
    }
    psi(dist, lam) * sum
}

/// `H(t) = lambda' * e^-lambda * sum lambda^k/k! * p_{k+2}`.
pub(crate) fn h_of_lambda(dist: &DegreeDistribution, lam: f64) -> f64 {
    let delta = dist.delta_max();
    if delta < 2 {
        return 0.0;
    }
    let mut term = (-lam).exp();
    let mut sum = 0.0;
    for k in 0..=delta - 2 {
        if k > 0 {
            term *= lam / k as f64;
        }
        sum += term * dist.pmf(k + 2);
    }
    psi(dist, lam) * sum
}

/// `1 - int_0^t H = e^-lambda * sum lambda^k/k! * q_{k+2}` (exact identity).
pub(crate) fn tail_h_of_lambda(dist: &DegreeDistribution, lam: f64) -> f64 {
    let delta = dist.delta_max();
    if delta < 2 {
        return 0.0;
    }
    let mut term = (-lam).exp();
    let mut sum = 0.0;
    for k in 0..=delta - 2 {
        if k > 0 {
            term *= lam / k as f64;
        }
        sum += term * dist.tail(k + 2);
    }
    sum
}

/// `E(t) = sum k z_k / sum z_k`, the expected number of children of a
/// non-root vertex of type `t`. The `t -> 0` limit is `min support - 1`.
pub(crate) fn e_of_lambda(dist: &DegreeDistribution, lam: f64) -> f64 {
    let delta = dist.delta_max();
    // Common factor e^-lambda cancels; normalize by the largest term to
    // keep the ratio stable for large lambda.
    let mut terms = Vec::with_capacity(delta);
    let mut term = 1.0f64;
    let mut max_t = 0.0f64;
    for k in 0..=delta.saturating_sub(1) {
        if k > 0 {
            term *= lam / k as f64;
        }
        let v = term * dist.pmf(k + 1);
        max_t = max_t.max(v);
        terms.push(v);
    }
    if max_t == 0.0 {
        return (dist.min_support() - 1) as f64;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, v) in terms.iter().enumerate() {
        num += k as f64 * v / max_t;
        den += v / max_t;
    }
    if den == 0.0 {
        (dist.min_support() - 1) as f64
    } else {
        num / den
    }
}

const STATE: usize = 4; // [lambda, W, W', F]

fn rhs(dist: &DegreeDistribution, y: &[f64; STATE]) -> [f64; STATE] {
    let lp = psi(dist, y[0]);
    [lp, y[2], -h_of_lambda(dist, y[0]) * y[1], lp * lp]
}

/// Dense numerical solution of the combined system plus derived evaluators.
///
/// Immutable after construction; all queries are `&self` and the struct is
/// `Send + Sync`, so workers share one solution read-only.
#[derive(Debug, Clone)]
pub struct LambdaSolution {
    dist: DegreeDistribution,
    ts: Vec<f64>,
    ys: Vec<[f64; STATE]>,
    derivs: Vec<[f64; STATE]>,
    abs_tol: f64,
}

impl LambdaSolution {
    /// Integrate with default options.
    pub fn solve(dist: &DegreeDistribution) -> Result<Self> {
        Self::solve_with(dist, SolverOptions::default())
    }

    pub fn solve_tol(dist: &DegreeDistribution, abs_tol: f64) -> Result<Self> {
        Self::solve_with(dist, SolverOptions { abs_tol, ..SolverOptions::default() })
    }

    pub fn solve_with(dist: &DegreeDistribution, opts: SolverOptions) -> Result<Self> {
        if !(1e-13..=1e-6).contains(&opts.abs_tol) {
            return Err(Error::Solver(format!(
                "abs_tol {} outside supported range [1e-13, 1e-6]",
                opts.abs_tol
            )));
        }
        // Dormand-Prince 5(4) pair.
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const B5: [f64; 7] =
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];

        let mut t = 0.0f64;
        let mut y = [0.0f64; STATE];
        y[2] = 1.0; // W'(0) = 1
        let mut ts = vec![t];
        let mut ys = vec![y];
        let mut derivs = vec![rhs(dist, &y)];

        let mut h = 1e-4f64;
        let mut k = [[0.0f64; STATE]; 7];
        while psi(dist, y[0]) > opts.lambda_prime_cutoff && t < opts.t_cap {
            if h < 1e-14 * t.max(1.0) {
                return Err(Error::Solver(format!("step size underflow at t = {t}")));
            }
            k[0] = rhs(dist, &y);
            for stage in 1..7 {
                let mut ys_stage = y;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    let a = A[stage - 1][j];
                    if a != 0.0 {
                        for idx in 0..STATE {
                            ys_stage[idx] += h * a * kj[idx];
                        }
                    }
                }
                k[stage] = rhs(dist, &ys_stage);
            }
            let mut y5 = y;
            let mut y4 = y;
            for (j, kj) in k.iter().enumerate() {
                for idx in 0..STATE {
                    y5[idx] += h * B5[j] * kj[idx];
                    y4[idx] += h * B4[j] * kj[idx];
                }
            }
            let mut err = 0.0f64;
            for idx in 0..STATE {
                let sc = opts.abs_tol * (1.0 + y[idx].abs().max(y5[idx].abs()));
                err = err.max((y5[idx] - y4[idx]).abs() / sc);
            }
            if err <= 1.0 {
                t += h;
                y = y5;
                // lambda must stay non-negative and monotone.
                y[0] = y[0].max(ys.last().unwrap()[0]);
                ts.push(t);
                ys.push(y);
                derivs.push(rhs(dist, &y));
            }
            let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h *= factor.clamp(0.2, 5.0);
        }
        if psi(dist, y[0]) > opts.lambda_prime_cutoff {
            return Err(Error::Solver(format!(
                "horizon cap {} reached with lambda' = {:.3e} still above cutoff {:.3e}",
                opts.t_cap,
                psi(dist, y[0]),
                opts.lambda_prime_cutoff
            )));
        }
        Ok(Self { dist: dist.clone(), ts, ys, derivs, abs_tol: opts.abs_tol })
    }

    pub fn dist(&self) -> &DegreeDistribution {
        &self.dist
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    /// End of the solved grid; `lambda'(horizon) <= cutoff`, and the mass of
    /// `f` beyond it equals `lambda'(horizon)` exactly.
    pub fn horizon(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn grid(&self) -> &[f64] {
        &self.ts
    }

    fn segment(&self, t: f64) -> usize {
        match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.ts.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.ts.len() - 2),
        }
    }

    fn hermite(&self, t: f64, idx: usize) -> f64 {
        // Queries are clamped to the solved grid; tail mass past the horizon
        // is below the solver cutoff by construction.
        let t = t.clamp(0.0, self.horizon());
        let seg = self.segment(t);
        let (t0, t1) = (self.ts[seg], self.ts[seg + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (self.ys[seg][idx], self.ys[seg + 1][idx]);
        let (m0, m1) = (self.derivs[seg][idx], self.derivs[seg + 1][idx]);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * m1
    }

    /// `lambda(t)`, clamped to the solved horizon.
    pub fn lambda(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.hermite(t, 0).max(0.0)
    }

    /// `lambda'(t)`, evaluated as `psi(lambda(t))` so the identity with the
    /// IVP holds exactly.
    pub fn lambda_prime(&self, t: f64) -> f64 {
        psi(&self.dist, self.lambda(t))
    }

    /// Density of the root's phantom saturation time.
    pub fn phantom_density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        f_of_lambda(&self.dist, self.lambda(t))
    }

    /// CDF of the root's phantom saturation time: `1 - lambda'(t)`.
    pub fn phantom_cdf(&self, t: f64) -> f64 {
        1.0 - self.lambda_prime(t)
    }

    /// Density of the hitting time of `D - 1` accepted children.
    pub fn hitting_density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        h_of_lambda(&self.dist, self.lambda(t))
    }

    /// `int_0^t H`, via the exact tail identity.
    pub fn hitting_cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        1.0 - tail_h_of_lambda(&self.dist, self.lambda(t))
    }

    /// Expected number of children of a non-root vertex with type `t`.
    pub fn mean_children(&self, t: f64) -> f64 {
        e_of_lambda(&self.dist, self.lambda(t))
    }

    /// Weight `rho = lambda f / E` making the branching operator self-adjoint.
    pub fn rho_weight(&self, t: f64) -> f64 {
        let lam = self.lambda(t);
        let e = e_of_lambda(&self.dist, lam);
        if e == 0.0 {
            return 0.0;
        }
        lam * f_of_lambda(&self.dist, lam) / e
    }

    /// `z_k^t = e^-lambda lambda^k / k! * p_{k+1}`.
    pub fn poisson_weight(&self, t: f64, k: usize) -> f64 {
        let lam = self.lambda(t);
        let mut term = (-lam).exp();
        for j in 1..=k {
            term *= lam / j as f64;
        }
        term * self.dist.pmf(k + 1)
    }

    /// String-keyed evaluator for the CLI: `f`, `H`, `E`, `rho` or `z_k`.
    pub fn eval_derived(&self, which: &str, t: f64) -> Result<f64> {
        match which {
            "f" => Ok(self.phantom_density(t)),
            "H" => Ok(self.hitting_density(t)),
            "E" => Ok(self.mean_children(t)),
            "rho" => Ok(self.rho_weight(t)),
            _ => {
                if let Some(k) = which.strip_prefix("z_") {
                    let k: usize = k
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad z_k selector `{which}`")))?;
                    Ok(self.poisson_weight(t, k))
                } else {
                    Err(Error::Parse(format!("unknown derived function `{which}`")))
                }
            }
        }
    }

    /// `F(t) = int_0^t lambda'^2`, the expected root degree at time `t`.
    pub fn big_f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.hermite(t, 3)
    }

    /// Inverse of `F` on `[0, E(D))` by monotone bisection.
    pub fn big_f_inverse(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::Solver(format!("F inverse needs s >= 0, got {s}")));
        }
        if s >= self.dist.mean() {
            return Err(Error::Solver(format!(
                "F inverse diverges as s approaches E(D) = {}; got {s}",
                self.dist.mean()
            )));
        }
        let horizon = self.horizon();
        if s > self.big_f(horizon) {
            return Err(Error::Solver(format!(
                "s = {s} beyond F(horizon) = {}; value too close to E(D)",
                self.big_f(horizon)
            )));
        }
        Ok(bisect(|t| self.big_f(t) - s, 0.0, horizon, 1e-12))
    }

    /// `W(t)` of the companion system `W'' = -H W`.
    pub fn w(&self, t: f64) -> f64 {
        self.hermite(t, 1)
    }

    /// `W'(t)`.
    pub fn w_prime(&self, t: f64) -> f64 {
        self.hermite(t, 2)
    }

    /// `gamma(t) = W'(t) - W(t) * (1 - int_0^t H)`.
    pub fn gamma(&self, t: f64) -> f64 {
        self.w_prime(t) - self.w(t) * tail_h_of_lambda(&self.dist, self.lambda(t))
    }

    /// First zero of `W'`, or `None` when `W'` stays positive on the grid.
    pub fn theta(&self) -> Option<f64> {
        let idx = (1..self.ts.len()).find(|&i| self.ys[i][2] <= 0.0)?;
        Some(bisect(|t| self.w_prime(t), self.ts[idx - 1], self.ts[idx], 1e-12))
    }

    /// Invert `lambda` (strictly increasing).
    pub fn lambda_inverse(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.lambda(self.horizon()));
        bisect(|t| self.lambda(t) - x, 0.0, self.horizon(), 1e-13)
    }

    /// Invert `lambda'` (strictly decreasing): the `t` with `lambda'(t) = y`.
    pub fn lambda_prime_inverse(&self, y: f64) -> f64 {
        let end = self.horizon();
        let y = y.clamp(self.lambda_prime(end), 1.0);
        // Solve psi(lam) = y for lam first (psi is decreasing in lam), then
        // invert lambda; both are monotone bisections.
        let lam_end = self.lambda(end);
        let lam = bisect(|l| y - psi(&self.dist, l), 0.0, lam_end, 1e-15);
        self.lambda_inverse(lam)
    }

    /// Assemble the critical-time report from this solution.
    pub fn critical_report(&self) -> Result<CriticalTimeReport> {
        let (theta, theta_at_horizon) = match self.theta() {
            Some(th) => (th, false),
            None => (self.horizon(), true),
        };
        // gamma must decrease strictly up to theta (grid check).
        let mut prev = f64::INFINITY;
        for (i, &t) in self.ts.iter().enumerate() {
            if t > theta {
                break;
            }
            let g = self.gamma(t);
            if g > prev + 1e-9 {
                return Err(Error::Solver(format!(
                    "gamma not decreasing near t = {t} (node {i}): {g} after {prev}"
                )));
            }
            prev = g;
        }
        let g_theta = self.gamma(theta);
        if g_theta > 0.0 {
            return Err(Error::Solver(format!(
                "no sign change of gamma on [0, theta]: gamma(theta) = {g_theta}; solver resolution failure"
            )));
        }
        let t_hat_c = bisect(|t| self.gamma(t), 0.0, theta, 1e-12);
        let t_c = self.big_f(t_hat_c) / 2.0;
        let delta = simpson(|s| self.hitting_density(s) * (1.0 - s * s), 0.0, 1.0, 4000);
        let i_diag = self.hitting_cdf(1.0 + 2.0 * delta);
        let j_diag = 1.0 - self.lambda(1.0);
        let asymptotic_ref = 2.0 / std::f64::consts::E * self.dist.inv_factorial_moment();
        let below_resolution = asymptotic_ref < 1e-6;
        let ratio =
            if below_resolution { f64::NAN } else { (t_hat_c - 1.0) / asymptotic_ref };
        Ok(CriticalTimeReport {
            t_hat_c,
            t_c,
            theta,
            delta,
            i_diag,
            j_diag,
            asymptotic_ref,
            ratio,
            below_resolution,
            theta_at_horizon,
            // Local tolerance compounds across steps; the factor was
            // calibrated against tolerance-ladder runs of the gamma root.
            tolerance: (5000.0 * self.abs_tol).max(1e-12),
            mu_at_tc: None,
        })
    }
}

/// Critical time of giant-component emergence plus diagnostics.
#[derive(Debug, Clone)]
pub struct CriticalTimeReport {
    /// Continuous critical time: unique root of `gamma` on `[0, theta]`.
    pub t_hat_c: f64,
    /// Discrete critical time (edges per vertex): `F(t_hat_c) / 2`.
    pub t_c: f64,
    /// First zero of `W'`.
    pub theta: f64,
    /// `int_0^1 H(s) (1 - s^2) ds`.
    pub delta: f64,
    /// `int_0^{1+2 delta} H`.
    pub i_diag: f64,
    /// `int_0^1 P(D <= X_s) ds = 1 - lambda(1)`.
    pub j_diag: f64,
    /// `(2/e) * E(1/D!)`.
    pub asymptotic_ref: f64,
    /// `(t_hat_c - 1) / asymptotic_ref`; NaN when below resolution.
    pub ratio: f64,
    /// Set when the asymptotic reference falls below the gamma-root noise floor.
    pub below_resolution: bool,
    /// Set when `W'` has no zero on the solved grid.
    pub theta_at_horizon: bool,
    /// Reported absolute tolerance of `t_hat_c`.
    pub tolerance: f64,
    /// Principal eigenvalue at `t_hat_c`, filled in by the spectral module.
    pub mu_at_tc: Option<f64>,
}

impl CriticalTimeReport {
    pub fn flags(&self) -> String {
        let mut fs = Vec::new();
        if self.below_resolution {
            fs.push("below_resolution");
        }
        if self.theta_at_horizon {
            fs.push("theta_at_horizon");
        }
        fs.join("+")
    }
}

/// Convenience: solve and report in one call.
pub fn critical_time(dist: &DegreeDistribution, abs_tol: f64) -> Result<(LambdaSolution, CriticalTimeReport)> {
    let sol = LambdaSolution::solve_tol(dist, abs_tol)?;
    let report = sol.critical_report()?;
    Ok((sol, report))
}

/// Bisection for a function with a sign change on `[lo, hi]` (`f(lo) >= 0`
/// or monotone decreasing use-cases in this crate).
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm >= 0.0) == (flo >= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Quadrature of a smooth decaying density over `[0, end]`: Simpson on
/// dyadic windows `[0,1], [1,2], [2,4], ...` so that heavy tails spread
/// over many decades (the horizon can sit at t ~ 1e8) are still resolved.
pub fn integrate_tail(f: impl Fn(f64) -> f64, end: f64, panels_per_window: usize) -> f64 {
    let mut total = 0.0;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64.min(end);
    loop {
        total += simpson(&f, lo, hi, panels_per_window);
        if hi >= end {
            return total;
        }
        lo = hi;
        hi = (hi * 2.0).min(end);
    }
}

/// Composite Simpson quadrature with `panels` (made even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = if panels % 2 == 0 { panels } else { panels + 1 };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}
