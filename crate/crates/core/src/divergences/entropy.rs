use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::Ext;

/// Entropy function `φ : [0, ∞) → [0, ∞]`, convex with `φ(1) = 0`.
///
/// | name                | `φ(t)`                              | Csiszár dual        | `φ′∞`                   |
/// |---------------------|-------------------------------------|---------------------|-------------------------|
/// | `kullback-leibler`  | `t log t − t + 1`                   | `burg`              | `∞`                     |
/// | `burg`              | `−log t + t − 1`                    | `kullback-leibler`  | `1`                     |
/// | `j-divergence`      | `(t − 1) log t`                     | itself              | `∞`                     |
/// | `chi2`              | `(t − 1)² / t`                      | `modified-chi2`     | `1`                     |
/// | `modified-chi2`     | `(t − 1)²`                          | `chi2`              | `∞`                     |
/// | `hellinger`         | `(√t − 1)²`                         | itself              | `1`                     |
/// | `chi-order-n`       | `|t − 1|ⁿ`, `n > 1`                 | `chi-order-n-dual`  | `∞`                     |
/// | `chi-order-n-dual`  | `t |1/t − 1|ⁿ`                      | `chi-order-n`       | `1`                     |
/// | `total-variation`   | `|t − 1|`                           | itself              | `1`                     |
/// | `cressie-read`      | `(1 − θ + θt − t^θ) / (θ(1 − θ))`   | `cressie-read(1−θ)` | `1/(1−θ)` if `θ < 1`, else `∞` |
///
/// The recession slope `φ′∞ = lim φ(t)/t` is computed from each formula.
/// `φ(0)` is the right limit at zero and always equals the dual's recession
/// slope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EntropyFunction {
    KullbackLeibler,
    Burg,
    JDivergence,
    #[serde(rename = "chi2")]
    ChiSquared,
    #[serde(rename = "modified-chi2")]
    ModifiedChiSquared,
    Hellinger,
    #[serde(rename = "chi-order-n")]
    ChiOrder {
        n: f64,
    },
    #[serde(rename = "chi-order-n-dual")]
    ChiOrderDual {
        n: f64,
    },
    TotalVariation,
    CressieRead {
        theta: f64,
    },
}

use EntropyFunction::*;

impl EntropyFunction {
    /// The nine named families, with sample parameters for the two
    /// parametric ones.
    pub fn catalog() -> Vec<EntropyFunction> {
        vec![
            KullbackLeibler,
            Burg,
            JDivergence,
            ChiSquared,
            ModifiedChiSquared,
            Hellinger,
            ChiOrder { n: 3.0 },
            TotalVariation,
            CressieRead { theta: 0.5 },
        ]
    }

    pub fn chi_order(n: f64) -> Result<Self> {
        ChiOrder { n }.validated()
    }

    pub fn cressie_read(theta: f64) -> Result<Self> {
        CressieRead { theta }.validated()
    }

    /// Rejects `n ≤ 1` and `θ ∈ {0, 1}`.
    pub fn validated(self) -> Result<Self> {
        match self {
            ChiOrder { n } | ChiOrderDual { n } if !(n > 1.0 && n.is_finite()) => {
                Err(Error::Parameter(format!("chi order needs n > 1, got {n}")))
            }
            CressieRead { theta } if !theta.is_finite() || theta == 0.0 || theta == 1.0 => {
                Err(Error::Parameter(format!("cressie-read needs theta outside {{0, 1}}, got {theta}")))
            }
            other => Ok(other),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KullbackLeibler => "kullback-leibler",
            Burg => "burg",
            JDivergence => "j-divergence",
            ChiSquared => "chi2",
            ModifiedChiSquared => "modified-chi2",
            Hellinger => "hellinger",
            ChiOrder { .. } => "chi-order-n",
            ChiOrderDual { .. } => "chi-order-n-dual",
            TotalVariation => "total-variation",
            CressieRead { .. } => "cressie-read",
        }
    }

    /// `φ(t)`; negative `t` is a domain error.
    pub fn eval(&self, t: f64) -> Result<Ext> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("{} is defined on t >= 0, got {t}", self.name())));
        }
        Ok(self.value(t))
    }

    /// `φ(t)` for `t ≥ 0`, with `t = +∞` mapped to `+∞` unless `φ` is constant there.
    pub fn value(&self, t: f64) -> Ext {
        debug_assert!(t >= 0.0);
        if t == 0.0 {
            return self.at_zero();
        }
        if t == f64::INFINITY {
            return Ext::Infinite;
        }
        let v = match *self {
            KullbackLeibler => t * t.ln() - t + 1.0,
            Burg => -t.ln() + t - 1.0,
            JDivergence => (t - 1.0) * t.ln(),
            ChiSquared => (t - 1.0) * (t - 1.0) / t,
            ModifiedChiSquared => (t - 1.0) * (t - 1.0),
            Hellinger => {
                let r = t.sqrt() - 1.0;
                r * r
            }
            ChiOrder { n } => (t - 1.0).abs().powf(n),
            ChiOrderDual { n } => t * (1.0 / t - 1.0).abs().powf(n),
            TotalVariation => (t - 1.0).abs(),
            CressieRead { theta } => (1.0 - theta + theta * t - t.powf(theta)) / (theta * (1.0 - theta)),
        };
        // Rounding can leave tiny negative values near t = 1.
        Ext::from_f64(v.max(0.0))
    }

    /// `lim_{t→0⁺} φ(t)`.
    pub fn at_zero(&self) -> Ext {
        match *self {
            KullbackLeibler | ModifiedChiSquared | Hellinger | ChiOrder { .. } | TotalVariation => Ext::Finite(1.0),
            Burg | JDivergence | ChiSquared | ChiOrderDual { .. } => Ext::Infinite,
            CressieRead { theta } if theta > 0.0 => Ext::Finite(1.0 / theta),
            CressieRead { .. } => Ext::Infinite,
        }
    }

    /// Recession slope `φ′∞ = lim_{t→∞} φ(t)/t`.
    pub fn recession(&self) -> Ext {
        match *self {
            KullbackLeibler | JDivergence | ModifiedChiSquared | ChiOrder { .. } => Ext::Infinite,
            Burg | ChiSquared | Hellinger | ChiOrderDual { .. } | TotalVariation => Ext::Finite(1.0),
            CressieRead { theta } if theta < 1.0 => Ext::Finite(1.0 / (1.0 - theta)),
            CressieRead { .. } => Ext::Infinite,
        }
    }

    /// Csiszár dual `ψ(t) = t·φ(1/t)`.
    pub fn csiszar_dual(&self) -> EntropyFunction {
        match *self {
            KullbackLeibler => Burg,
            Burg => KullbackLeibler,
            JDivergence => JDivergence,
            ChiSquared => ModifiedChiSquared,
            ModifiedChiSquared => ChiSquared,
            Hellinger => Hellinger,
            ChiOrder { n } => ChiOrderDual { n },
            ChiOrderDual { n } => ChiOrder { n },
            TotalVariation => TotalVariation,
            CressieRead { theta } => CressieRead { theta: 1.0 - theta },
        }
    }

    /// Convex conjugate `φ*(s) = sup_{t ≥ 0} s·t − φ(t)`.
    pub fn conjugate(&self, s: f64) -> Ext {
        assert!(!s.is_nan());
        match self.conjugate_point(s) {
            Conj::Infinite => Ext::Infinite,
            Conj::Attained { value, .. } | Conj::Limit { value } => Ext::from_f64(value),
        }
    }

    /// Maximiser `t*(s)` of `s·t − φ(t)`, which is also `(φ*)′(s)` wherever
    /// `φ*` is differentiable. `None` when the supremum is infinite or not
    /// attained.
    pub fn conjugate_argmax(&self, s: f64) -> Option<f64> {
        match self.conjugate_point(s) {
            Conj::Attained { argmax, .. } => Some(argmax),
            _ => None,
        }
    }

    /// Whether `φ*` is strictly increasing on the region where it exceeds its
    /// infimum `−φ(0)`, which is what the two-multiplier dual needs.
    pub fn conjugate_strictly_increasing(&self) -> bool {
        matches!(self, KullbackLeibler | ModifiedChiSquared | ChiOrder { .. })
    }

    fn conjugate_point(&self, s: f64) -> Conj {
        match *self {
            KullbackLeibler => {
                let t = s.exp();
                if t.is_infinite() {
                    Conj::Infinite
                } else {
                    Conj::Attained {
                        value: s.exp_m1(),
                        argmax: t,
                    }
                }
            }
            Burg => {
                if s >= 1.0 {
                    Conj::Infinite
                } else {
                    Conj::Attained {
                        value: -(-s).ln_1p(),
                        argmax: 1.0 / (1.0 - s),
                    }
                }
            }
            JDivergence => {
                // s = log t + 1 − 1/t; with u = 1/t this is u + log u = 1 − s.
                let y = log_wright_omega(1.0 - s);
                let t = (-y).exp();
                if t.is_infinite() {
                    return Conj::Infinite;
                }
                Conj::Attained {
                    value: s * t + (t - 1.0) * y,
                    argmax: t,
                }
            }
            ChiSquared => {
                if s > 1.0 {
                    Conj::Infinite
                } else if s == 1.0 {
                    Conj::Limit { value: 2.0 }
                } else {
                    let r = (1.0 - s).sqrt();
                    Conj::Attained {
                        value: 2.0 - 2.0 * r,
                        argmax: 1.0 / r,
                    }
                }
            }
            ModifiedChiSquared => {
                if s < -2.0 {
                    Conj::Attained { value: -1.0, argmax: 0.0 }
                } else {
                    Conj::Attained {
                        value: s + s * s / 4.0,
                        argmax: 1.0 + s / 2.0,
                    }
                }
            }
            Hellinger => {
                if s >= 1.0 {
                    Conj::Infinite
                } else {
                    Conj::Attained {
                        value: s / (1.0 - s),
                        argmax: 1.0 / ((1.0 - s) * (1.0 - s)),
                    }
                }
            }
            ChiOrder { n } => {
                if s < -n {
                    Conj::Attained { value: -1.0, argmax: 0.0 }
                } else {
                    let u = (s.abs() / n).powf(1.0 / (n - 1.0));
                    Conj::Attained {
                        value: s + (n - 1.0) * u.powf(n),
                        argmax: 1.0 + s.signum() * u,
                    }
                }
            }
            ChiOrderDual { n } => chi_order_dual_conjugate(n, s),
            TotalVariation => {
                if s > 1.0 {
                    Conj::Infinite
                } else if s < -1.0 {
                    Conj::Attained { value: -1.0, argmax: 0.0 }
                } else {
                    Conj::Attained { value: s, argmax: 1.0 }
                }
            }
            CressieRead { theta } => cressie_read_conjugate(theta, s),
        }
    }
}

enum Conj {
    Infinite,
    Attained { value: f64, argmax: f64 },
    Limit { value: f64 },
}

fn cressie_read_conjugate(theta: f64, s: f64) -> Conj {
    // Stationarity: t^(θ−1) = u with u = 1 − (1 − θ)s; value (t^θ − 1)/θ.
    let u = 1.0 - (1.0 - theta) * s;
    if theta < 1.0 {
        if u > 0.0 {
            let t = u.powf(1.0 / (theta - 1.0));
            if t.is_infinite() {
                return Conj::Infinite;
            }
            Conj::Attained {
                value: (u.powf(theta / (theta - 1.0)) - 1.0) / theta,
                argmax: t,
            }
        } else if u == 0.0 && theta < 0.0 {
            Conj::Limit { value: -1.0 / theta }
        } else {
            Conj::Infinite
        }
    } else if u <= 0.0 {
        Conj::Attained {
            value: -1.0 / theta,
            argmax: 0.0,
        }
    } else {
        let t = u.powf(1.0 / (theta - 1.0));
        if t.is_infinite() {
            return Conj::Infinite;
        }
        Conj::Attained {
            value: (u.powf(theta / (theta - 1.0)) - 1.0) / theta,
            argmax: t,
        }
    }
}

/// `ψ(t) = t|1/t − 1|ⁿ` has no closed-form conjugate; solve `ψ′(t) = s` by
/// bisection in `log t`. `ψ′` increases from `−∞` at zero to `1` at infinity.
fn chi_order_dual_conjugate(n: f64, s: f64) -> Conj {
    if s > 1.0 {
        return Conj::Infinite;
    }
    if s == 1.0 {
        return Conj::Limit { value: n };
    }
    let psi = ChiOrderDual { n };
    let slope = |t: f64| {
        let u = 1.0 / t - 1.0;
        u.abs().powf(n - 1.0) * (u.abs() - u.signum() * n / t)
    };
    let (mut lo, mut hi) = (-700.0f64, 700.0f64);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if slope(mid.exp()) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let t = (0.5 * (lo + hi)).exp();
    match psi.value(t) {
        Ext::Finite(p) => Conj::Attained {
            value: s * t - p,
            argmax: t,
        },
        Ext::Infinite => Conj::Infinite,
    }
}

/// `log ω(x)` where the Wright omega function solves `ω + log ω = x`.
///
/// Newton's method on `e^y + y = x`, started above the root so the iterates
/// decrease monotonically.
pub(crate) fn log_wright_omega(x: f64) -> f64 {
    let mut y = if x > 1.0 { x.ln() } else { x };
    for _ in 0..200 {
        let e = y.exp();
        let step = (e + y - x) / (e + 1.0);
        y -= step;
        if step.abs() <= 1e-16 * y.abs().max(1.0) {
            break;
        }
    }
    y
}

impl fmt::Display for EntropyFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChiOrder { n } | ChiOrderDual { n } => write!(f, "{}:{}", self.name(), n),
            CressieRead { theta } => write!(f, "{}:{}", self.name(), theta),
            _ => f.write_str(self.name()),
        }
    }
}

/// Parses `name` or `name:parameter`, e.g. `kullback-leibler`, `chi-order-n:3`,
/// `cressie-read:0.5`.
impl FromStr for EntropyFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let number = || -> Result<f64> {
            param
                .ok_or_else(|| Error::Input(format!("{name} needs a parameter, e.g. {name}:2")))?
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("bad parameter for {name}: {e}")))
        };
        let phi = match name {
            "kullback-leibler" | "kl" => KullbackLeibler,
            "burg" => Burg,
            "j-divergence" => JDivergence,
            "chi2" => ChiSquared,
            "modified-chi2" => ModifiedChiSquared,
            "hellinger" => Hellinger,
            "chi-order-n" => ChiOrder { n: number()? },
            "chi-order-n-dual" => ChiOrderDual { n: number()? },
            "total-variation" | "tv" => TotalVariation,
            "cressie-read" => CressieRead { theta: number()? },
            other => return Err(Error::Input(format!("unknown entropy function {other:?}"))),
        };
        if param.is_some() && !matches!(phi, ChiOrder { .. } | ChiOrderDual { .. } | CressieRead { .. }) {
            return Err(Error::Input(format!("{name} takes no parameter")));
        }
        phi.validated()
    }
}
