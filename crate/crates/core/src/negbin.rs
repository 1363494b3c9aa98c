//! Negative binomial null distribution of the minority-count statistic.
//!
//! `N` counts the trials needed to collect `k` successes when each trial
//! succeeds with probability `p0`, so its support starts at `n = k` and
//!
//! ```text
//! f_k(n) = C(n-1, k-1) p0^k (1-p0)^(n-k)
//! ```
//!
//! Lower tails with fewer than [`DIRECT_SUM_MAX_TERMS`] terms are summed
//! directly, relative to the leading term; longer tails use the identity
//! `P(N < n) = P(Bin(n-1, p0) >= k) = I_{p0}(k, n-k)` with the regularized
//! incomplete beta function evaluated by continued fraction.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

/// Longest lower tail (in terms) summed directly instead of via the
/// incomplete beta function.
pub const DIRECT_SUM_MAX_TERMS: u64 = 64;

/// Smallest probability the linear-scale API returns.
pub const PROB_FLOOR: f64 = 1e-300;

const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinParams {
    k: u64,
    p0: f64,
}

impl NegBinParams {
    pub fn new(k: u64, p0: f64) -> Result<Self> {
        if k == 0 {
            return domain("negative binomial k must be at least 1");
        }
        if !(p0 > 0.0 && p0 < 1.0) {
            return domain(format!("negative binomial p0 must lie in (0, 1), got {p0}"));
        }
        Ok(Self { k, p0 })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    fn check_support(&self, n: u64) -> Result<()> {
        if n < self.k {
            return domain(format!(
                "n = {n} lies below the support start k = {}",
                self.k
            ));
        }
        Ok(())
    }

    /// `k ln p0 + (n-k) ln(1-p0)`
    fn ln_power_part(&self, n: u64) -> f64 {
        self.k as f64 * self.p0.ln() + (n - self.k) as f64 * (-self.p0).ln_1p()
    }
}

/// `ln C(n, r)`. Short products are accumulated term by term, which keeps
/// small-count values accurate to a few ulps; long ones go through log-gamma.
pub(crate) fn ln_choose(n: u64, r: u64) -> f64 {
    debug_assert!(r <= n);
    let r = r.min(n - r);
    if r <= DIRECT_SUM_MAX_TERMS {
        let base = (n - r) as f64;
        (1..=r).map(|i| ((base + i as f64) / i as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)
    }
}

/// Natural log of `f_k(n)`.
pub fn log_pmf(params: &NegBinParams, n: u64) -> Result<f64> {
    params.check_support(n)?;
    Ok(ln_choose(n - 1, params.k - 1) + params.ln_power_part(n))
}

/// `f_k(n)` on the linear scale, floored at [`PROB_FLOOR`].
pub fn pmf(params: &NegBinParams, n: u64) -> Result<f64> {
    Ok(clamp_prob(log_pmf(params, n)?.exp()))
}

/// `P(N < n)`, exactly zero at the support start.
pub fn cdf_below(params: &NegBinParams, n: u64) -> Result<f64> {
    params.check_support(n)?;
    let terms = n - params.k;
    if terms == 0 {
        return Ok(0.0);
    }
    let value = if terms <= DIRECT_SUM_MAX_TERMS {
        direct_lower_tail(params, n)
    } else {
        incomplete_beta_lower_tail(params, n)
    };
    Ok(value.clamp(PROB_FLOOR, 1.0))
}

/// The mid-p adjusted p-value `e = P(N < n_obs) + f_k(n_obs) / 2`.
///
/// Values above one half favor the majority class, values below favor the
/// minority class.
pub fn adjusted_pvalue(params: &NegBinParams, n_obs: u64) -> Result<f64> {
    let below = cdf_below(params, n_obs)?;
    let half_mass = 0.5 * log_pmf(params, n_obs)?.exp();
    Ok(clamp_prob(below + half_mass))
}

/// `P(N > n_obs) + f_k(n_obs) / 2`, the evidence for the opposite
/// alternative. Always `1 - adjusted_pvalue` by construction.
pub fn complementary_pvalue(params: &NegBinParams, n_obs: u64) -> Result<f64> {
    let below = cdf_below(params, n_obs)?;
    let mass = log_pmf(params, n_obs)?.exp();
    let above = (1.0 - below - mass).max(0.0);
    Ok(above + 0.5 * mass)
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0)
}

/// Sum of `f_k(m)` for `m = k..n-1`, accumulated relative to `f_k(k)` with
/// the ratio recurrence `f(m+1) / f(m) = m (1-p0) / (m-k+1)`.
fn direct_lower_tail(params: &NegBinParams, n: u64) -> f64 {
    let k = params.k;
    let q = 1.0 - params.p0;
    let mut log_scale = 0.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in k..n - 1 {
        term *= m as f64 * q / (m - k + 1) as f64;
        sum += term;
        if sum > 1e250 {
            log_scale += sum.ln();
            term /= sum;
            sum = 1.0;
        }
    }
    let ln_first = params.k as f64 * params.p0.ln();
    (ln_first + log_scale + sum.ln()).exp()
}

/// `I_{p0}(k, n-k)` with prefactors built from [`ln_choose`].
fn incomplete_beta_lower_tail(params: &NegBinParams, n: u64) -> f64 {
    let k = params.k;
    let a = k as f64;
    let b = (n - k) as f64;
    let x = params.p0;
    // x^a (1-x)^b
    let ln_xa_yb = a * x.ln() + b * (-x).ln_1p();
    if x < (a + 1.0) / (a + b + 2.0) {
        // 1 / (a B(a, b)) = C(n-1, k)
        let ln_front = ln_choose(n - 1, k) + ln_xa_yb;
        (ln_front.exp() * beta_continued_fraction(a, b, x)).min(1.0)
    } else {
        // 1 / (b B(a, b)) = C(n-1, n-k)
        let ln_front = ln_choose(n - 1, n - k) + ln_xa_yb;
        (1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x)).max(0.0)
    }
}

/// Continued fraction for the incomplete beta function, modified Lentz.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}
