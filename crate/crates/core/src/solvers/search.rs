use crate::error::{Error, Result};

/// Default bracket for the transport multiplier.
pub const LAMBDA_MIN: f64 = 1e-10;
pub const LAMBDA_MAX: f64 = 1e10;
/// Golden-section stopping width in `log λ`.
pub const SEARCH_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;
/// Number of log-spaced probes used to seed and cross-check the search.
pub const PROBES: usize = 16;
/// Allowed excess of the golden-section value over the best probe.
pub const PROBE_SLACK: f64 = 1e-8;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `log Σ exp(x_i)`, with `−∞` entries ignored and `+∞` propagated.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Settings shared by the one-dimensional dual searches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            lambda_min: LAMBDA_MIN,
            lambda_max: LAMBDA_MAX,
            tol: SEARCH_TOL,
            max_iterations: MAX_ITERATIONS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub width: f64,
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
///
/// `+∞` values are allowed. When both interior probes are infinite the
/// bracket moves right, which is correct for functions whose effective domain
/// is an interval unbounded above.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> GoldenResult {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut it = 0;
    while (b - a).abs() > tol && it < max_iter {
        it += 1;
        let go_left = if fc.is_infinite() && fd.is_infinite() { false } else { fc <= fd };
        if go_left {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    GoldenResult {
        x,
        value,
        iterations: it,
        width: (b - a).abs(),
    }
}

/// Outcome of a search over `λ ∈ [λ_min, λ_max]` on a log scale.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSearch {
    pub lambda: f64,
    pub value: f64,
    pub iterations: usize,
    pub width: f64,
    /// Smallest value among the log-spaced probes.
    pub probe_min: f64,
    /// Whether the golden-section value exceeded the best probe by more than
    /// `PROBE_SLACK`; the better point is returned either way.
    pub probe_warning: bool,
    pub at_lower_bound: bool,
}

/// Minimizes `F(λ)` by golden section over `log λ`, bracketed by the best of
/// [`PROBES`] log-spaced probes and cross-checked against them.
pub fn minimize_over_log_lambda<F: FnMut(f64) -> f64>(mut f: F, opts: &SearchOptions) -> Result<LambdaSearch> {
    let (s_lo, s_hi) = (opts.lambda_min.ln(), opts.lambda_max.ln());
    let step = (s_hi - s_lo) / (PROBES - 1) as f64;
    let probes: Vec<(f64, f64)> = (0..PROBES)
        .map(|k| {
            let s = if k == PROBES - 1 { s_hi } else { s_lo + k as f64 * step };
            (s, f(s.exp()))
        })
        .collect();
    if probes.iter().any(|(_, v)| v.is_nan()) {
        return Err(Error::Numerical("dual objective evaluated to NaN".into()));
    }
    let (k_best, &(_, probe_min)) = probes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).expect("no NaN"))
        .expect("probes are nonempty");
    if probe_min.is_infinite() {
        return Err(Error::Unbounded(
            "dual objective is +inf for every multiplier in the search bracket".into(),
        ));
    }
    let a = probes[k_best.saturating_sub(1)].0;
    let b = probes[(k_best + 1).min(PROBES - 1)].0;
    let g = golden_section(|s| f(s.exp()), a, b, opts.tol, opts.max_iterations);
    let mut best = (g.x, g.value);
    // The bracket ends are legitimate candidates too.
    for (s, v) in [(a, probes[k_best.saturating_sub(1)].1), (b, probes[(k_best + 1).min(PROBES - 1)].1)] {
        if v < best.1 {
            best = (s, v);
        }
    }
    let probe_warning = best.1 > probe_min + PROBE_SLACK;
    if probe_warning {
        log::warn!(
            "golden-section value {} exceeds best probe {} by more than {PROBE_SLACK:e}",
            best.1,
            probe_min
        );
        best = probes[k_best];
    }
    Ok(LambdaSearch {
        lambda: best.0.exp(),
        value: best.1,
        iterations: g.iterations + PROBES,
        width: g.width,
        probe_min,
        probe_warning,
        at_lower_bound: best.0 <= s_lo + 10.0 * opts.tol,
    })
}

/// Root of a nondecreasing function on `[a, b]` by bisection; assumes
/// `g(a) ≤ 0 ≤ g(b)`.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(mut g: F, mut a: f64, mut b: f64, max_iter: usize) -> f64 {
    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if g(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
