//! Reference computations that share no code with `edm-core`.
//!
//! Used by tests to pin values that the production solvers must reproduce.

/// Result of shooting for the canonical Choquard ground state
/// `-v'' + v - W[v] v = 0`, `W[v](r) = int v(s)^2 / max(r, s) ds`.
#[derive(Debug, Clone, Copy)]
pub struct ShootingResult {
    /// `v'(0)` of the canonical solution.
    pub slope_at_origin: f64,
    /// `int_0^inf v^2` of the canonical solution.
    pub l2_mass: f64,
    /// `W[v](0)` of the canonical solution.
    pub potential_at_origin: f64,
}

#[derive(Clone, Copy)]
struct State {
    v: f64,
    dv: f64,
    y: f64,
    dy: f64,
    // running integrals of v^2/s and v^2
    w0: f64,
    l2: f64,
}

fn rhs(r: f64, s: &State, e: f64) -> State {
    State {
        v: s.dv,
        dv: (e + s.y / r) * s.v,
        y: s.dy,
        dy: s.v * s.v / r,
        w0: s.v * s.v / r,
        l2: s.v * s.v,
    }
}

fn axpy(s: &State, a: f64, k: &State) -> State {
    State {
        v: s.v + a * k.v,
        dv: s.dv + a * k.dv,
        y: s.y + a * k.y,
        dy: s.dy + a * k.dy,
        w0: s.w0 + a * k.w0,
        l2: s.l2 + a * k.l2,
    }
}

fn rk4(r: f64, s: &State, h: f64, e: f64) -> State {
    let k1 = rhs(r, s, e);
    let k2 = rhs(r + 0.5 * h, &axpy(s, 0.5 * h, &k1), e);
    let k3 = rhs(r + 0.5 * h, &axpy(s, 0.5 * h, &k2), e);
    let k4 = rhs(r + h, &axpy(s, h, &k3), e);
    State {
        v: s.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
        dv: s.dv + h / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
        y: s.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
        dy: s.dy + h / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy),
        w0: s.w0 + h / 6.0 * (k1.w0 + 2.0 * k2.w0 + 2.0 * k3.w0 + k4.w0),
        l2: s.l2 + h / 6.0 * (k1.l2 + 2.0 * k2.l2 + 2.0 * k3.l2 + k4.l2),
    }
}

enum Outcome {
    /// `v` crossed zero: the trial constant is too small.
    Crossed,
    /// `v` turned upward while positive: the trial constant is too large.
    Diverged,
}

/// Integrates `v'' = (c + Y/r) v`, `Y'' = v^2/r` with `v ~ r`, `Y ~ r^3/6`
/// until the solution leaves the decaying branch. Returns the outcome and the
/// state where it was detected.
fn shoot(c: f64, h: f64, r_end: f64) -> (Outcome, State, f64) {
    let r0 = 1e-6;
    let mut s = State {
        v: r0,
        dv: 1.0,
        y: r0.powi(3) / 6.0,
        dy: 0.5 * r0 * r0,
        w0: 0.5 * r0 * r0,
        l2: r0.powi(3) / 3.0,
    };
    let mut r = r0;
    let mut descending = false;
    while r < r_end {
        let next = rk4(r, &s, h, c);
        r += h;
        if next.v <= 0.0 {
            return (Outcome::Crossed, s, r);
        }
        if next.dv < 0.0 {
            descending = true;
        } else if descending {
            return (Outcome::Diverged, s, r);
        }
        s = next;
    }
    (Outcome::Diverged, s, r)
}

/// Shoots for the positive decaying solution and rescales it to the canonical
/// normalization. Accurate to roughly 1e-8 relative with the default step.
pub fn choquard_shooting(step: f64) -> ShootingResult {
    // With v'(0) = 1 fixed, the equation becomes v'' = (c + Y/r) v where the
    // constant c = lambda - W(0) is unknown; bisect it.
    let (mut lo, mut hi) = (-3.0_f64, 0.0_f64);
    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (out, state, r) = shoot(mid, step, 80.0);
        match out {
            Outcome::Crossed => lo = mid,
            Outcome::Diverged => hi = mid,
        }
        best = Some((mid, state, r));
    }
    let (c, state, _) = best.expect("bisection ran");
    let w0 = state.w0;
    let lambda = c + w0;
    // v_mu(r) = mu v(mu r) solves the problem with lambda scaled by mu^2.
    let mu = 1.0 / lambda.sqrt();
    ShootingResult {
        slope_at_origin: mu * mu,
        l2_mass: mu * state.l2,
        potential_at_origin: mu * mu * w0,
    }
}

/// `W_i = sum_j w_j rho_j / max(r_i, r_j)` by direct summation.
pub fn brute_force_potential(r: &[f64], w: &[f64], rho: &[f64]) -> Vec<f64> {
    r.iter()
        .map(|&ri| {
            r.iter()
                .zip(w)
                .zip(rho)
                .map(|((&rj, &wj), &pj)| wj * pj / ri.max(rj))
                .sum()
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Linearized limit operator at `eps = 0`, assembled directly from its
/// definition on the staggered layout.
///
/// Unknown ordering is `[h (nodes), k (cells), l (nodes), z (nodes)]`, rows are
/// `[cell rows for h, node rows for k, cell rows for l, cell rows for z]`, each
/// block closed at `R_max` (`h = 0`, and `(r l)' = (r z)' = 0`). Nodes `r`, spacings `dr`,
/// cell midpoints `d` and origin-vanishing trapezoid weights `w` follow the
/// zero-based convention where cell `k` spans `[r_{k-1}, r_k]`, `r_{-1} = 0`.
pub struct AnchorGrid<'a> {
    pub r: &'a [f64],
    pub dr: &'a [f64],
    pub d: &'a [f64],
    pub w: &'a [f64],
}

pub fn anchor_linearization(
    g: &AnchorGrid,
    m: f64,
    e: f64,
    phi0: &[f64],
    tau0: &[f64],
    zeta0: &[f64],
) -> Vec<Vec<f64>> {
    let n = g.r.len();
    let (ih, ik, il, iz) = (0, n, 2 * n, 3 * n);
    let mut a = vec![vec![0.0; 4 * n]; 4 * n];
    let (r, dr, d, w) = (g.r, g.dr, g.d, g.w);

    // h' - h/r + 2m k = 0 on cells.
    for k in 0..n {
        let row = k;
        a[row][ih + k] += 1.0 / dr[k] - 0.5 / d[k];
        if k > 0 {
            a[row][ih + k - 1] += -1.0 / dr[k] - 0.5 / d[k];
        }
        a[row][ik + k] += 2.0 * m;
    }
    // k' + k/r + h - m(phi0 l + tau0 h) + e(phi0 z + zeta0 h) = 0 on interior nodes.
    for i in 0..n - 1 {
        let row = n + i;
        let gap = d[i + 1] - d[i];
        a[row][ik + i + 1] += 1.0 / gap + 0.5 / r[i];
        a[row][ik + i] += -1.0 / gap + 0.5 / r[i];
        a[row][ih + i] += 1.0 - m * tau0[i] + e * zeta0[i];
        a[row][il + i] += -m * phi0[i];
        a[row][iz + i] += e * phi0[i];
    }
    a[2 * n - 1][ih + n - 1] = 1.0 / dr[n - 1];
    // l' + (16 pi m / r^2) int_0^r phi0 h = 0 and the same for z with e.
    for (block, coef) in [(il, m), (iz, e)] {
        let row0 = block;
        for k in 1..n {
            let row = row0 + k - 1;
            a[row][block + k] += 1.0 / dr[k];
            a[row][block + k - 1] += -1.0 / dr[k];
            let s = 16.0 * std::f64::consts::PI * coef / (r[k - 1] * r[k]);
            for j in 0..k {
                a[row][ih + j] += s * w[j] * phi0[j];
            }
        }
        // f(R) = -R f'(R), with f'(R) from the same equation at the last node.
        let last = row0 + n - 1;
        a[last][block + n - 1] = 1.0 / dr[n - 1];
        let s = 16.0 * std::f64::consts::PI * coef / (r[n - 1] * dr[n - 1]);
        for j in 0..n {
            a[last][ih + j] -= s * w[j] * phi0[j];
        }
    }
    a
}
