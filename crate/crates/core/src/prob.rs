//! Closed-form calculators used to reason about regularized evolution:
//! hypergeometric selection probabilities, the generalized birthday bound,
//! normal order statistics and the derived scheduling and donor-delay
//! estimates.
//!
//! Rank convention: `rank = 1` is the worst member of a population and
//! `rank = P` the best, so `P - rank` counts the strictly better members.

use std::f64::consts::PI;

use num_rational::Ratio;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypergeomParams {
    /// Population size.
    pub total: u64,
    /// Marked members of the population.
    pub marked: u64,
    /// Draws without replacement.
    pub draws: u64,
}

impl HypergeomParams {
    pub fn new(total: u64, marked: u64, draws: u64) -> Result<Self> {
        if marked > total || draws > total {
            return Err(Error::InvalidParams(format!(
                "hypergeometric needs K <= N and n <= N (N={total}, K={marked}, n={draws})"
            )));
        }
        Ok(HypergeomParams {
            total,
            marked,
            draws,
        })
    }

    fn support(&self) -> (u64, u64) {
        let lo = (self.draws + self.marked).saturating_sub(self.total);
        (lo, self.draws.min(self.marked))
    }
}

/// Exact binomial coefficient, `None` on u128 overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) since acc = C(n, i)
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `P(X = k)` as an exact fraction, when every coefficient fits in 128 bits.
pub fn hypergeom_pmf_exact(params: HypergeomParams, k: u64) -> Option<Ratio<u128>> {
    let (lo, hi) = params.support();
    if k < lo || k > hi {
        return Some(Ratio::from_integer(0));
    }
    let HypergeomParams {
        total,
        marked,
        draws,
    } = params;
    let num = binomial(marked, k)?.checked_mul(binomial(total - marked, draws - k)?)?;
    Some(Ratio::new(num, binomial(total, draws)?))
}

/// `P(X = k)` for `X ~ H(N, K, n)`; zero outside the support.
///
/// Uses exact integer arithmetic when the coefficients fit and log-gamma
/// otherwise.
pub fn hypergeom_pmf(params: HypergeomParams, k: u64) -> f64 {
    if let Some(r) = hypergeom_pmf_exact(params, k) {
        return *r.numer() as f64 / *r.denom() as f64;
    }
    let HypergeomParams {
        total,
        marked,
        draws,
    } = params;
    let ln =
        ln_binomial(marked, k) + ln_binomial(total - marked, draws - k) - ln_binomial(total, draws);
    ln.exp().clamp(0.0, 1.0)
}

fn check_rank(population: u64, rank: u64, sample: u64) -> Result<()> {
    if population == 0 || rank == 0 || rank > population || sample == 0 || sample > population {
        return Err(Error::InvalidParams(format!(
            "need 1 <= rank <= P and 1 <= s <= P (P={population}, rank={rank}, s={sample})"
        )));
    }
    Ok(())
}

/// Upper bound on the probability that the member of rank `rank` is the best
/// of one uniform sample of size `sample`: no strictly better member is drawn.
pub fn transfer_prob_bound(population: u64, rank: u64, sample: u64) -> Result<f64> {
    check_rank(population, rank, sample)?;
    let params = HypergeomParams::new(population, population - rank, sample)?;
    Ok(hypergeom_pmf(params, 0))
}

/// Exact-fraction form of [`transfer_prob_bound`], `C(rank, s) / C(P, s)`.
pub fn transfer_prob_bound_exact(
    population: u64,
    rank: u64,
    sample: u64,
) -> Result<Option<Ratio<u128>>> {
    check_rank(population, rank, sample)?;
    let params = HypergeomParams::new(population, population - rank, sample)?;
    Ok(hypergeom_pmf_exact(params, 0))
}

/// Sample size at which some one of `prefixes` equally likely values repeats
/// at least `repeats` times with probability `prob`:
/// `(c^(k-1) * k! * ln(1 / (1 - p)))^(1/k)`.
pub fn birthday_threshold(prefixes: f64, repeats: u32, prob: f64) -> Result<f64> {
    if !(prefixes >= 1.0 && prefixes.is_finite()) || repeats < 2 || !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidParams(format!(
            "need c >= 1, k >= 2, 0 < p < 1 (c={prefixes}, k={repeats}, p={prob})"
        )));
    }
    let k = repeats as f64;
    let ln_k_factorial = libm::lgamma(k + 1.0);
    let ln_log_term = (-(-prob).ln_1p()).ln();
    Ok((((k - 1.0) * prefixes.ln() + ln_k_factorial + ln_log_term) / k).exp())
}

/// Largest repetition count whose birthday threshold is within `sample_size`.
pub fn birthday_expected_repeats(prefixes: f64, sample_size: f64, prob: f64) -> Result<u32> {
    let mut k = 1;
    while birthday_threshold(prefixes, k + 1, prob)? <= sample_size {
        k += 1;
        if k > 10_000 {
            break;
        }
    }
    Ok(k)
}

/// Approximate expected value of the `rank`-th smallest of `count` standard
/// normal draws: `Phi^-1((r - pi/8) / (w - pi/4 + 1))`.
pub fn normal_order_stat(rank: u64, count: u64) -> Result<f64> {
    if rank == 0 || rank > count {
        return Err(Error::InvalidParams(format!(
            "need 1 <= r <= w (r={rank}, w={count})"
        )));
    }
    let arg = (rank as f64 - PI / 8.0) / (count as f64 - PI / 4.0 + 1.0);
    if !(arg > 0.0 && arg < 1.0) {
        return Err(Error::InvalidParams(format!(
            "order statistic argument {arg} is outside (0, 1)"
        )));
    }
    Ok(inverse_normal_cdf(arg))
}

/// Bound on the mean idle wait added by waiting for `wait_for` of `workers`
/// normally distributed evaluations to finish before assigning new work.
///
/// The order-statistic difference is standardized; it is scaled by the
/// duration standard deviation and returned as a magnitude.
pub fn quanta_delay_bound(wait_for: u64, workers: u64, mean: f64, stddev: f64) -> Result<f64> {
    if wait_for == 0 || wait_for > workers {
        return Err(Error::InvalidParams(format!(
            "need 1 <= s <= w (s={wait_for}, w={workers})"
        )));
    }
    if !(mean > 0.0 && mean.is_finite()) || !(stddev >= 0.0 && stddev.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "need mu > 0 and sigma >= 0 (mu={mean}, sigma={stddev})"
        )));
    }
    if stddev == 0.0 {
        return Ok(0.0);
    }
    let gap = normal_order_stat(wait_for, workers)? - normal_order_stat(workers, workers)?;
    Ok(stddev * gap.abs())
}

/// Mean number of samplings until the population's best member is drawn:
/// each uniform sample of `s` out of `P` contains it with probability `s / P`.
pub fn expected_evals_until_donor(population: u64, sample: u64) -> Result<f64> {
    if sample == 0 || sample > population {
        return Err(Error::InvalidParams(format!(
            "need 1 <= s <= P (P={population}, s={sample})"
        )));
    }
    Ok(population as f64 / sample as f64)
}

/// Inverse of the standard normal CDF (Wichura's AS 241, PPND16).
///
/// Relative accuracy is about 1e-16 over the open unit interval. Returns
/// infinities at 0 and 1 and NaN outside `[0, 1]`.
#[allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2509.080_928_730_122_7 + 33430.575_583_588_13) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((r * 5226.495_278_852_546 + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((r * 1.050_750_071_644_416_8e-9 + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_887_9)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}
