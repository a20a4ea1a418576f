//! Levenberg-Marquardt least squares for small, fixed parameter counts.

/// Stopping rules shared by every fit in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    /// Converged once an accepted step changes every parameter by less than
    /// this, relative to its magnitude (floored at 1e-3).
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            rel_tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult<const N: usize> {
    pub params: [f64; N],
    /// `s²·(JᵀJ)⁻¹` with `s² = RSS/(n − N)`; NaN where singular.
    pub covariance: [[f64; N]; N],
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl<const N: usize> LmResult<N> {
    /// One-sigma parameter errors.
    pub fn errors(&self) -> [f64; N] {
        std::array::from_fn(|i| self.covariance[i][i].sqrt())
    }
}

/// Solves `a·x = b` by Gaussian elimination with partial pivoting.
pub fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..N {
            let f = a[r][col] / a[col][col];
            for c in col..N {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for r in (0..N).rev() {
        let mut s = b[r];
        for c in r + 1..N {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn invert<const N: usize>(a: &[[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut inv = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        let col = solve(*a, e)?;
        for i in 0..N {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

fn normal_equations<const N: usize, F>(
    x: &[f64],
    y: &[f64],
    p: &[f64; N],
    model: &F,
) -> ([[f64; N]; N], [f64; N], f64)
where
    F: Fn(f64, &[f64; N]) -> (f64, [f64; N]),
{
    let mut jtj = [[0.0; N]; N];
    let mut jtr = [0.0; N];
    let mut rss = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let (f, g) = model(xi, p);
        let r = yi - f;
        rss += r * r;
        for a in 0..N {
            jtr[a] += g[a] * r;
            for b in 0..=a {
                jtj[a][b] += g[a] * g[b];
            }
        }
    }
    for a in 0..N {
        for b in a + 1..N {
            jtj[a][b] = jtj[b][a];
        }
    }
    (jtj, jtr, rss)
}

fn rss_of<const N: usize, F>(x: &[f64], y: &[f64], p: &[f64; N], model: &F) -> f64
where
    F: Fn(f64, &[f64; N]) -> (f64, [f64; N]),
{
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - model(xi, p).0).powi(2))
        .sum()
}

/// Minimises `Σ(y − f(x; p))²`. `model` returns the value and the gradient
/// with respect to the parameters.
pub fn levenberg_marquardt<const N: usize, F>(
    x: &[f64],
    y: &[f64],
    p0: [f64; N],
    model: F,
    opts: LmOptions,
) -> LmResult<N>
where
    F: Fn(f64, &[f64; N]) -> (f64, [f64; N]),
{
    let mut p = p0;
    let mut lambda = 1e-3;
    let (mut jtj, mut jtr, mut rss) = normal_equations(x, y, &p, &model);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter && rss.is_finite() {
        iterations += 1;
        let mut a = jtj;
        for i in 0..N {
            a[i][i] += lambda * jtj[i][i].max(f64::MIN_POSITIVE);
        }
        let Some(step) = solve(a, jtr) else {
            lambda *= 10.0;
            if lambda > 1e30 {
                break;
            }
            continue;
        };
        let trial: [f64; N] = std::array::from_fn(|i| p[i] + step[i]);
        let trial_rss = rss_of(x, y, &trial, &model);
        if trial_rss.is_finite() && trial_rss <= rss {
            // parameters are expected in normalized units; the floor keeps a
            // parameter sitting at zero from blocking convergence
            let small = (0..N).all(|i| step[i].abs() <= opts.rel_tol * trial[i].abs().max(1e-3));
            p = trial;
            (jtj, jtr, rss) = normal_equations(x, y, &p, &model);
            lambda = (lambda * 0.1).max(1e-12);
            if small || rss == 0.0 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e30 {
                // no downhill step left at machine precision
                converged = rss.is_finite();
                break;
            }
        }
    }
    let dof = x.len().saturating_sub(N).max(1) as f64;
    let s2 = rss / dof;
    let covariance = invert(&jtj)
        .map(|inv| inv.map(|row| row.map(|v| v * s2)))
        .unwrap_or([[f64::NAN; N]; N]);
    LmResult {
        params: p,
        covariance,
        rss,
        iterations,
        converged,
    }
}
