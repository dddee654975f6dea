//! Bound-constrained trust-region least squares for the three-parameter
//! evaporation model.
//!
//! The residual function is expensive (each evaluation solves one initial-
//! boundary value problem per sample) and its gradient is unavailable, so
//! every iteration builds a forward-difference Jacobian: one evaluation at
//! the base point plus one per parameter, four in total, matching the cost
//! accounting of the calibration procedure. The quadratic model is
//! minimized inside a trust region in a scaled norm (Levenberg-Marquardt
//! parameterization with a More-Hebden multiplier update); steps that
//! would leave the bound box are truncated at the wall, reflected off it,
//! or replaced by a projected steepest-descent step, whichever the model
//! prefers, so every evaluated point stays strictly feasible.
//!
//! Acceptance is deferred: the trial point becomes the next base point and
//! its evaluation at the top of the next iteration doubles as the
//! acceptance test. A failed trial restores the previous iterate and
//! shrinks the region before the next attempt. Accepted costs are
//! therefore non-increasing and every iteration performs exactly four
//! residual evaluations.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Residual vector as a function of the parameter triple `[k, M_b, gamma]`.
pub trait ResidualFn {
    fn eval(&self, params: [f64; 3]) -> Result<Vec<f64>>;
}

impl<F> ResidualFn for F
where
    F: Fn([f64; 3]) -> Result<Vec<f64>>,
{
    fn eval(&self, params: [f64; 3]) -> Result<Vec<f64>> {
        self(params)
    }
}

/// Box constraints for the parameter triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl Default for Bounds {
    /// The calibration box: `k` in [1e-4, 1e-3], `M_b` in [0.02, 0.2],
    /// `gamma` in [10, 150].
    fn default() -> Self {
        Bounds {
            lower: [1e-4, 0.02, 10.0],
            upper: [1e-3, 0.2, 150.0],
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for m in 0..3 {
            if !self.lower[m].is_finite() || !self.upper[m].is_finite() {
                return Err(Error::Fit(format!(
                    "bounds for parameter {m} must be finite"
                )));
            }
            if self.lower[m] >= self.upper[m] {
                return Err(Error::Fit(format!(
                    "degenerate bounds for parameter {m}: [{}, {}]",
                    self.lower[m], self.upper[m]
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|m| p[m] >= self.lower[m] && p[m] <= self.upper[m])
    }

    /// Nudges a point into the strict interior of the box.
    fn interior(&self, mut p: [f64; 3]) -> [f64; 3] {
        for m in 0..3 {
            let margin = 1e-10 * (self.upper[m] - self.lower[m]);
            p[m] = p[m].clamp(self.lower[m] + margin, self.upper[m] - margin);
        }
        p
    }
}

/// How the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    /// Gradient infinity-norm fell below `gtol`.
    GradientTol,
    /// The proposed step became negligible relative to the iterate.
    StepTol,
    /// The cost vanished or stopped decreasing in relative terms.
    CostTol,
    /// The iteration limit was reached.
    MaxIter,
}

impl std::fmt::Display for ConvergenceStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ConvergenceStatus::GradientTol => "gradient-tol",
            ConvergenceStatus::StepTol => "step-tol",
            ConvergenceStatus::CostTol => "cost-tol",
            ConvergenceStatus::MaxIter => "max-iter",
        };
        f.write_str(name)
    }
}

/// Tolerances and controls for [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrOptions {
    /// Relative cost-decrease tolerance.
    pub ftol: f64,
    /// Relative step tolerance (in the scaled norm).
    pub xtol: f64,
    /// Gradient infinity-norm tolerance.
    pub gtol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Per-parameter fallback scale for the finite-difference step
    /// `h = sqrt(eps) * max(|p|, scale)`, protecting parameters near zero.
    pub fd_scale: [f64; 3],
}

impl Default for TrOptions {
    fn default() -> Self {
        TrOptions {
            ftol: 1e-8,
            xtol: 1e-8,
            gtol: 1e-8,
            max_iter: 100,
            fd_scale: [1e-4, 1e-2, 1.0],
        }
    }
}

/// Output of [`minimize`].
#[derive(Debug, Clone)]
pub struct Minimum {
    pub params: [f64; 3],
    pub residuals: Vec<f64>,
    /// Final cost `||f||^2`.
    pub cost: f64,
    pub n_iterations: usize,
    pub n_residual_evals: usize,
    pub status: ConvergenceStatus,
    /// Cost at the initial point and after each accepted step
    /// (non-increasing).
    pub cost_history: Vec<f64>,
}

/// Forward-difference Jacobian columns about a known base evaluation.
/// Steps default to `sqrt(eps) * max(|p|, scale)` per parameter, flipped
/// inward when the forward point would leave the box; the exactly
/// representable increment is used in the divisor.
pub(crate) fn fd_columns(
    f: &dyn ResidualFn,
    p: [f64; 3],
    f_base: &[f64],
    bounds: &Bounds,
    fd_scale: [f64; 3],
    steps: Option<[f64; 3]>,
    n_evals: &mut usize,
) -> Result<Vec<[f64; 3]>> {
    let mut jac = vec![[0.0; 3]; f_base.len()];
    for m in 0..3 {
        let mut h = match steps {
            Some(s) => s[m],
            None => f64::EPSILON.sqrt() * p[m].abs().max(fd_scale[m]),
        };
        if p[m] + h > bounds.upper[m] {
            h = -h;
        }
        if p[m] + h < bounds.lower[m] {
            return Err(Error::Fit(format!(
                "finite-difference step for parameter {m} leaves the bounds in both directions"
            )));
        }
        let mut shifted = p;
        shifted[m] = p[m] + h;
        let h_exact = shifted[m] - p[m];
        let f_shift = f.eval(shifted)?;
        *n_evals += 1;
        if f_shift.len() != f_base.len() {
            return Err(Error::Fit(
                "residual length changed between evaluations".into(),
            ));
        }
        for (row, (fs, fb)) in jac.iter_mut().zip(f_shift.iter().zip(f_base)) {
            row[m] = (fs - fb) / h_exact;
        }
    }
    Ok(jac)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Gram matrix `J^T J` and gradient `J^T f`.
fn gram_and_gradient(jac: &[[f64; 3]], f: &[f64]) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut g = [0.0; 3];
    let mut gram = [[0.0; 3]; 3];
    for (row, &fi) in jac.iter().zip(f) {
        for a in 0..3 {
            g[a] += row[a] * fi;
            for b in a..3 {
                gram[a][b] += row[a] * row[b];
            }
        }
    }
    for a in 0..3 {
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
    }
    (gram, g)
}

/// Cholesky factor of a symmetric positive-definite 3x3 matrix.
fn cholesky(a: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

fn forward_sub(l: &[[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let mut y = [0.0; 3];
    for i in 0..3 {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    y
}

fn solve_cholesky(l: &[[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let y = forward_sub(l, b);
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut sum = y[i];
        for k in i + 1..3 {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// Components frozen at an active bound: the parameter sits at a wall and
/// the descent direction points outward, so the subproblem is solved in
/// the remaining free subspace.
fn active_mask(p: [f64; 3], g: [f64; 3], bounds: &Bounds) -> [bool; 3] {
    let mut mask = [false; 3];
    for m in 0..3 {
        let width = bounds.upper[m] - bounds.lower[m];
        let near_lo = p[m] - bounds.lower[m] <= 1e-8 * width;
        let near_hi = bounds.upper[m] - p[m] <= 1e-8 * width;
        // The descent direction is -g.
        mask[m] = (near_hi && g[m] < 0.0) || (near_lo && g[m] > 0.0);
    }
    mask
}

/// Solves the trust-region subproblem `min ||f + J s||`, `||D s|| <= delta`
/// in the scaled variable `u = D s`, with masked components held at zero.
/// Returns the step and whether it sits on the region boundary.
fn tr_subproblem(
    gram: &[[f64; 3]; 3],
    g: [f64; 3],
    d: [f64; 3],
    delta: f64,
    mask: [bool; 3],
) -> ([f64; 3], bool) {
    let mut gs = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            gs[a][b] = gram[a][b] / (d[a] * d[b]);
        }
    }
    let mut gt = [g[0] / d[0], g[1] / d[1], g[2] / d[2]];
    // Decouple frozen components: zero their gradient and detach their
    // rows/columns, leaving a unit diagonal so the factorization stays
    // positive definite and yields u[m] = 0.
    for m in 0..3 {
        if mask[m] {
            gt[m] = 0.0;
            for a in 0..3 {
                gs[m][a] = 0.0;
                gs[a][m] = 0.0;
            }
            gs[m][m] = 1.0;
        }
    }
    let neg_gt = [-gt[0], -gt[1], -gt[2]];
    let unscale = |u: [f64; 3]| [u[0] / d[0], u[1] / d[1], u[2] / d[2]];

    // Gauss-Newton step, if it exists and fits inside the region.
    if let Some(l) = cholesky(&gs) {
        let u = solve_cholesky(&l, neg_gt);
        if norm(u) <= delta {
            return (unscale(u), false);
        }
    }

    // More-Hebden iteration: find mu > 0 with ||u(mu)|| ~ delta where
    // (G + mu I) u = -g. G + mu I is positive definite for any mu > 0.
    let mut mu_lo: f64 = 0.0;
    let mut mu_hi: f64 = (norm(gt) / delta).max(1e-300);
    let mut mu = (1e-3 * mu_hi).max(1e-300);
    let mut u = [0.0; 3];
    for _ in 0..60 {
        let mut shifted = gs;
        for a in 0..3 {
            shifted[a][a] += mu;
        }
        let Some(l) = cholesky(&shifted) else {
            mu_lo = mu;
            mu = if mu_hi > mu { 0.5 * (mu + mu_hi) } else { 10.0 * mu };
            continue;
        };
        u = solve_cholesky(&l, neg_gt);
        let nu = norm(u);
        if (nu - delta).abs() <= 0.1 * delta {
            break;
        }
        if nu > delta {
            mu_lo = mu_lo.max(mu);
        } else {
            mu_hi = mu_hi.min(mu);
        }
        // Newton update on 1/||u||: mu += (||u||/||q||)^2 (||u||-delta)/delta
        // with q = L^-1 u.
        let q = forward_sub(&l, u);
        let nq = norm(q).max(1e-300);
        let mut mu_next = mu + (nu / nq).powi(2) * (nu - delta) / delta;
        if !mu_next.is_finite() || mu_next <= mu_lo || mu_next >= mu_hi {
            mu_next = (mu_lo * mu_hi).sqrt().max(mu_lo + 1e-3 * (mu_hi - mu_lo));
        }
        mu = mu_next.max(1e-300);
    }
    (unscale(u), true)
}

/// Largest step fraction keeping `p + theta s` inside the box, and the
/// first component to hit a wall.
fn step_to_boundary(p: [f64; 3], s: [f64; 3], bounds: &Bounds) -> (f64, usize) {
    let mut theta = f64::INFINITY;
    let mut hit = 0;
    for m in 0..3 {
        let t = if s[m] > 0.0 {
            (bounds.upper[m] - p[m]) / s[m]
        } else if s[m] < 0.0 {
            (bounds.lower[m] - p[m]) / s[m]
        } else {
            f64::INFINITY
        };
        if t < theta {
            theta = t;
            hit = m;
        }
    }
    (theta, hit)
}

/// Change of the quadratic model of the cost along `s`:
/// `m(s) - m(0) = 2 g.s + s.G s`. Negative is a predicted improvement.
fn model_change(gram: &[[f64; 3]; 3], g: [f64; 3], s: [f64; 3]) -> f64 {
    let gs = [dot(gram[0], s), dot(gram[1], s), dot(gram[2], s)];
    2.0 * dot(g, s) + dot(s, gs)
}

/// Turns the raw trust-region step into a strictly feasible one. When the
/// step stays in the box it passes through; otherwise the truncated,
/// reflected and projected-gradient candidates compete on model value.
#[allow(clippy::too_many_arguments)]
fn select_feasible_step(
    p: [f64; 3],
    s_tr: [f64; 3],
    gram: &[[f64; 3]; 3],
    g: [f64; 3],
    g_desc: [f64; 3],
    d: [f64; 3],
    delta: f64,
    bounds: &Bounds,
) -> [f64; 3] {
    let scale = |s: [f64; 3], t: f64| [s[0] * t, s[1] * t, s[2] * t];
    let scaled_norm = |s: [f64; 3]| norm([s[0] * d[0], s[1] * d[1], s[2] * d[2]]);

    let (theta, hit) = step_to_boundary(p, s_tr, bounds);
    if theta >= 1.0 {
        return s_tr;
    }

    let mut candidates: Vec<[f64; 3]> = Vec::with_capacity(3);

    // Truncated: stop just short of the wall.
    candidates.push(scale(s_tr, (theta * (1.0 - 1e-10)).max(0.0)));

    // Reflected: bounce the offending component off the wall, then fit the
    // result back into both the box and the region.
    let mut refl = s_tr;
    refl[hit] = -refl[hit];
    let (theta_r, _) = step_to_boundary(p, refl, bounds);
    let mut t_r = theta_r.min(1.0) * (1.0 - 1e-10);
    let sn = scaled_norm(refl);
    if sn > 0.0 {
        t_r = t_r.min(delta / sn);
    }
    candidates.push(scale(refl, t_r.max(0.0)));

    // Projected steepest descent (frozen components excluded) with the
    // Cauchy length t* = ||g||^2 / (g.G g).
    let neg_g = [-g_desc[0], -g_desc[1], -g_desc[2]];
    let curv = model_change(gram, [0.0; 3], neg_g);
    let t_cauchy = if curv > 0.0 {
        (dot(g_desc, g_desc) / curv).min(1e30)
    } else {
        0.0
    };
    let mut sd = scale(neg_g, t_cauchy);
    let (theta_g, _) = step_to_boundary(p, sd, bounds);
    let mut t_g = theta_g.min(1.0) * (1.0 - 1e-10);
    let sn = scaled_norm(sd);
    if sn > 0.0 {
        t_g = t_g.min(delta / sn);
    }
    sd = scale(sd, t_g.max(0.0));
    candidates.push(sd);

    candidates
        .into_iter()
        .min_by(|a, b| model_change(gram, g, *a).total_cmp(&model_change(gram, g, *b)))
        .unwrap()
}

/// Runs the bound-constrained trust-region iteration from `init`.
///
/// The initial point must lie within the bounds; it is nudged into the
/// strict interior if it sits exactly on a wall, and every evaluated point
/// is strictly feasible. If the initial cost is already zero the fitter
/// returns immediately (cost-tol, zero iterations, one evaluation);
/// otherwise each iteration costs exactly four evaluations: the base point
/// (which doubles as the acceptance test of the previous trial step) plus
/// three difference columns.
pub fn minimize(
    f: &dyn ResidualFn,
    bounds: &Bounds,
    init: [f64; 3],
    opts: &TrOptions,
) -> Result<Minimum> {
    bounds.validate()?;
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("initial guess must be finite".into()));
    }
    if !bounds.contains(init) {
        return Err(Error::Fit(format!(
            "initial guess {init:?} lies outside the bounds"
        )));
    }

    let mut p = bounds.interior(init);
    let mut n_evals = 0usize;
    let mut n_iterations = 0usize;
    let mut cost_history: Vec<f64> = Vec::new();

    let mut have_best = false;
    let mut best_p = p;
    let mut best_f: Vec<f64> = Vec::new();
    let mut best_cost = f64::INFINITY;

    // Set when a trial step is pending: (predicted decrease, step touched
    // the region boundary).
    let mut pending: Option<(f64, bool)> = None;
    let mut delta = 0.0f64;
    let mut d_scale = [0.0f64; 3];
    let mut status = ConvergenceStatus::MaxIter;

    for iter in 1..=opts.max_iter {
        n_iterations = iter;
        let f_cur = f.eval(p)?;
        n_evals += 1;
        let cost: f64 = f_cur.iter().map(|r| r * r).sum();
        if !cost.is_finite() {
            return Err(Error::Fit(format!("non-finite cost at {p:?}")));
        }

        let mut last_decrease = None;
        match pending.take() {
            None => {
                // Initial point (or re-evaluation of a restored iterate
                // after a rejection; the value is identical by
                // determinism of the residual function).
                if !have_best {
                    have_best = true;
                    best_p = p;
                    best_f = f_cur;
                    best_cost = cost;
                    cost_history.push(cost);
                }
            }
            Some((pred, on_boundary)) => {
                if cost < best_cost {
                    let rho = (best_cost - cost) / pred.max(f64::MIN_POSITIVE);
                    if rho > 0.75 && on_boundary {
                        delta *= 2.0;
                    } else if rho < 0.25 {
                        delta *= 0.25;
                    }
                    last_decrease = Some(best_cost - cost);
                    best_p = p;
                    best_f = f_cur;
                    best_cost = cost;
                    cost_history.push(cost);
                } else {
                    p = best_p;
                    delta *= 0.25;
                }
            }
        }

        // A zero-residual initial point needs no iteration at all.
        if iter == 1 && best_cost <= 1e-300 {
            status = ConvergenceStatus::CostTol;
            n_iterations = 0;
            break;
        }

        let jac = fd_columns(f, p, &best_f, bounds, opts.fd_scale, None, &mut n_evals)?;
        let (gram, g) = gram_and_gradient(&jac, &best_f);
        // Convergence is judged on the gradient projected onto the free
        // subspace: components blocked by an active bound do not count.
        let mask = active_mask(p, g, bounds);
        let mut g_proj = g;
        for m in 0..3 {
            if mask[m] {
                g_proj[m] = 0.0;
            }
        }
        if g_proj.iter().all(|v| v.abs() <= opts.gtol) {
            status = ConvergenceStatus::GradientTol;
            break;
        }
        if let Some(dec) = last_decrease {
            if dec <= opts.ftol * best_cost.max(f64::MIN_POSITIVE) {
                status = ConvergenceStatus::CostTol;
                break;
            }
        }

        // Column scaling, non-decreasing across iterations.
        let max_col = (0..3)
            .map(|m| gram[m][m].sqrt())
            .fold(1e-300f64, f64::max);
        for m in 0..3 {
            d_scale[m] = d_scale[m].max(gram[m][m].sqrt()).max(1e-12 * max_col);
        }
        if delta == 0.0 {
            let dp = norm([p[0] * d_scale[0], p[1] * d_scale[1], p[2] * d_scale[2]]);
            delta = if dp > 0.0 { dp } else { 1.0 };
        }

        let (s_tr, _) = tr_subproblem(&gram, g, d_scale, delta, mask);
        let s = select_feasible_step(p, s_tr, &gram, g, g_proj, d_scale, delta, bounds);

        let scaled_step = norm([s[0] * d_scale[0], s[1] * d_scale[1], s[2] * d_scale[2]]);
        let scaled_p = norm([p[0] * d_scale[0], p[1] * d_scale[1], p[2] * d_scale[2]]);
        if scaled_step <= opts.xtol * (opts.xtol + scaled_p) {
            status = ConvergenceStatus::StepTol;
            break;
        }
        let pred = -model_change(&gram, g, s);
        if pred.is_nan() || pred <= 0.0 {
            // No feasible model decrease left.
            status = ConvergenceStatus::StepTol;
            break;
        }
        pending = Some((pred, scaled_step >= 0.9 * delta));
        p = bounds.interior([p[0] + s[0], p[1] + s[1], p[2] + s[2]]);
        debug_assert!(bounds.contains(p));
    }

    Ok(Minimum {
        params: best_p,
        residuals: best_f,
        cost: best_cost,
        n_iterations,
        n_residual_evals: n_evals,
        status,
        cost_history,
    })
}
