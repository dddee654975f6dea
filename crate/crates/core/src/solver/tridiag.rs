//! Direct solver for the almost-tridiagonal systems produced by the
//! implicit diffusion step.
//!
//! Rows 0..n-2 are ordinary tridiagonal rows; the last row couples the
//! final three unknowns because the Robin condition is discretized with a
//! second-order one-sided difference. The system is solved by the Thomas
//! forward sweep with an explicit closure of the widened last row.

/// The last row of the system: `a x[n-3] + b x[n-2] + c x[n-1] = rhs`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TailRow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub rhs: f64,
}

/// Solves the n x n system whose rows 0..n-2 are tridiagonal
/// (`sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`, with `sub[0]`
/// ignored) and whose last row is `tail`. Requires n >= 3. Returns None if
/// a pivot vanishes.
pub(crate) fn solve_with_tail(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
    tail: TailRow,
    x: &mut [f64],
) -> Option<()> {
    let n = x.len();
    debug_assert!(n >= 3);
    debug_assert_eq!(sub.len(), n - 1);
    debug_assert_eq!(diag.len(), n - 1);
    debug_assert_eq!(sup.len(), n - 1);
    debug_assert_eq!(rhs.len(), n - 1);

    // Forward sweep: x[i] = dp[i] - cp[i] x[i+1] for i = 0..n-2.
    let mut cp = vec![0.0; n - 1];
    let mut dp = vec![0.0; n - 1];
    if diag[0] == 0.0 {
        return None;
    }
    cp[0] = sup[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for i in 1..n - 1 {
        let m = diag[i] - sub[i] * cp[i - 1];
        if m == 0.0 {
            return None;
        }
        cp[i] = sup[i] / m;
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / m;
    }

    // Fold x[n-3] and x[n-2] out of the tail row.
    // x[n-3] = dp[n-3] - cp[n-3] x[n-2], x[n-2] = dp[n-2] - cp[n-2] x[n-1].
    let q = tail.b - tail.a * cp[n - 3];
    let s = tail.rhs - tail.a * dp[n - 3];
    let denom = tail.c - q * cp[n - 2];
    if denom == 0.0 {
        return None;
    }
    x[n - 1] = (s - q * dp[n - 2]) / denom;
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    Some(())
}

/// Mirror-image variant used to cross-check the flip covariance of the
/// stage solver: the widened row sits first (`a x0 + b x1 + c x2 = rhs`)
/// and the sweep runs from the far end, so the arithmetic takes a genuinely
/// different path from [`solve_with_tail`] on reversed data.
#[cfg(test)]
pub(crate) fn solve_with_head(
    head: TailRow,
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
    x: &mut [f64],
) -> Option<()> {
    let n = x.len();
    debug_assert!(n >= 3);
    // Rows 1..n are tridiagonal; arrays indexed by row, entry 0 unused.
    debug_assert_eq!(sub.len(), n);
    debug_assert_eq!(diag.len(), n);
    debug_assert_eq!(sup.len(), n);
    debug_assert_eq!(rhs.len(), n);

    // Backward sweep: x[i] = dp[i] - cp[i] x[i-1] for i = n-1..1.
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    if diag[n - 1] == 0.0 {
        return None;
    }
    cp[n - 1] = sub[n - 1] / diag[n - 1];
    dp[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (1..n - 1).rev() {
        let m = diag[i] - sup[i] * cp[i + 1];
        if m == 0.0 {
            return None;
        }
        cp[i] = sub[i] / m;
        dp[i] = (rhs[i] - sup[i] * dp[i + 1]) / m;
    }

    // Head row with x1 = dp[1] - cp[1] x0 and x2 = dp[2] - cp[2] x1.
    let q = head.b - head.c * cp[2];
    let s = head.rhs - head.c * dp[2];
    let denom = head.a - q * cp[1];
    if denom == 0.0 {
        return None;
    }
    x[0] = (s - q * dp[1]) / denom;
    for i in 1..n {
        x[i] = dp[i] - cp[i] * x[i - 1];
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_tail(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64], tail: TailRow, x: &[f64]) -> f64 {
        let n = x.len();
        let mut worst: f64 = 0.0;
        for i in 0..n - 1 {
            let mut r = diag[i] * x[i] - rhs[i];
            if i > 0 {
                r += sub[i] * x[i - 1];
            }
            if i + 1 < n {
                r += sup[i] * x[i + 1];
            }
            worst = worst.max(r.abs());
        }
        let r = tail.a * x[n - 3] + tail.b * x[n - 2] + tail.c * x[n - 1] - tail.rhs;
        worst.max(r.abs())
    }

    #[test]
    fn solves_small_system_exactly() {
        // 4x4 with a widened last row; verified against the row residuals.
        let sub = vec![0.0, -1.0, -2.0];
        let diag = vec![2.0, 4.0, 5.0];
        let sup = vec![-1.0, -1.0, -1.0];
        let rhs = vec![1.0, 2.0, 3.0];
        let tail = TailRow {
            a: 1.0,
            b: -4.0,
            c: 6.0,
            rhs: 2.0,
        };
        let mut x = vec![0.0; 4];
        solve_with_tail(&sub, &diag, &sup, &rhs, tail, &mut x).unwrap();
        assert!(residual_tail(&sub, &diag, &sup, &rhs, tail, &x) < 1e-13);
    }

    #[test]
    fn residual_small_for_random_diag_dominant() {
        let n = 57;
        let mut sub = vec![0.0; n - 1];
        let mut diag = vec![0.0; n - 1];
        let mut sup = vec![0.0; n - 1];
        let mut rhs = vec![0.0; n - 1];
        // Deterministic pseudo-random fill.
        let mut s = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n - 1 {
            sub[i] = next();
            sup[i] = next();
            diag[i] = 4.0 + next();
            rhs[i] = next() * 10.0;
        }
        sub[0] = 0.0;
        let tail = TailRow {
            a: 1.0,
            b: -4.0,
            c: 5.0 + next().abs(),
            rhs: next() * 10.0,
        };
        let mut x = vec![0.0; n];
        solve_with_tail(&sub, &diag, &sup, &rhs, tail, &mut x).unwrap();
        assert!(residual_tail(&sub, &diag, &sup, &rhs, tail, &x) < 1e-10);
    }

    #[test]
    fn head_variant_matches_reversed_tail_system() {
        // Solving A x = b with the widened row first must agree with
        // solving the index-reversed system with the widened row last.
        let n = 23;
        let mut s = 0xabcdef12345u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        // Head-form system: row 0 widened, rows 1..n tridiagonal.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n {
            sub[i] = next();
            diag[i] = 4.0 + next();
            sup[i] = if i + 1 < n { next() } else { 0.0 };
            rhs[i] = next() * 3.0;
        }
        let head = TailRow {
            a: 5.0 + next().abs(),
            b: -3.0,
            c: 0.7,
            rhs: next() * 3.0,
        };
        let mut x_head = vec![0.0; n];
        solve_with_head(head, &sub, &diag, &sup, &rhs, &mut x_head).unwrap();

        // Reverse: unknown y[j] = x[n-1-j].
        let mut rsub = vec![0.0; n - 1];
        let mut rdiag = vec![0.0; n - 1];
        let mut rsup = vec![0.0; n - 1];
        let mut rrhs = vec![0.0; n - 1];
        for i in 1..n {
            let j = n - 1 - i; // reversed row index, 0..n-1
            if j < n - 1 {
                rdiag[j] = diag[i];
                rsub[j] = sup[i];
                rsup[j] = sub[i];
                rrhs[j] = rhs[i];
            }
        }
        let rtail = TailRow {
            a: head.c,
            b: head.b,
            c: head.a,
            rhs: head.rhs,
        };
        let mut y = vec![0.0; n];
        solve_with_tail(&rsub, &rdiag, &rsup, &rrhs, rtail, &mut y).unwrap();
        for j in 0..n {
            let diff = (y[j] - x_head[n - 1 - j]).abs();
            assert!(diff < 1e-11, "mismatch at {j}: {diff}");
        }
    }
}
