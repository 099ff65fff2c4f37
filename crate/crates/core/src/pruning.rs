//! Uncertain support priors, their precision, and the two pruning rules.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest confidence produced by [`jitter_confidences`].
pub const MIN_CONFIDENCE: f64 = 1e-6;

/// Allowed drift of the PMF total mass before it is rejected.
pub const PMF_DRIFT_TOL: f64 = 1e-9;

/// True safe-row indicator: `q_i = 1` if row `i` is not attacked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportIndicator {
    pub q: Vec<u8>,
}

impl SupportIndicator {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn safe_count(&self) -> usize {
        self.q.iter().filter(|&&v| v == 1).count()
    }
}

pub fn indicator_from_support(support: &[usize], rows: usize) -> Result<SupportIndicator> {
    let mut q = vec![1u8; rows];
    for &i in support {
        if i >= rows {
            return Err(Error::IndexOutOfRange { index: i, len: rows });
        }
        q[i] = 0;
    }
    Ok(SupportIndicator { q })
}

/// Estimated indicator `q_hat` with per-row confidences `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPrior {
    pub q_hat: Vec<u8>,
    pub p: Vec<f64>,
    pub true_rate: f64,
}

impl SupportPrior {
    pub fn new(q_hat: Vec<u8>, p: Vec<f64>) -> Result<Self> {
        if q_hat.len() != p.len() {
            return Err(Error::DimensionMismatch(format!(
                "q_hat has length {}, p has length {}",
                q_hat.len(),
                p.len()
            )));
        }
        if q_hat.iter().any(|&v| v > 1) {
            return Err(Error::InvalidParameter("q_hat entries must be 0 or 1".into()));
        }
        validate_confidences(&p)?;
        let true_rate = if p.is_empty() { 0.0 } else { p.iter().sum::<f64>() / p.len() as f64 };
        Ok(Self { q_hat, p, true_rate })
    }

    /// Rows the prior labels safe.
    pub fn estimated_safe(&self) -> Vec<usize> {
        (0..self.q_hat.len()).filter(|&i| self.q_hat[i] == 1).collect()
    }
}

pub fn validate_confidences(p: &[f64]) -> Result<()> {
    match p.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
        Some(bad) => Err(Error::InvalidParameter(format!(
            "confidences must lie in (0,1], got {bad}"
        ))),
        None => Ok(()),
    }
}

fn validate_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter("eta must lie in (0,1)".into()))
    }
}

/// Draws `eps_i ~ Bernoulli(p_i)` and keeps `q_i` when `eps_i = 1`, flips it otherwise.
pub fn sample_prior<R: Rng + ?Sized>(q: &SupportIndicator, p: &[f64], rng: &mut R) -> Result<SupportPrior> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "indicator has length {}, p has length {}",
            q.len(),
            p.len()
        )));
    }
    validate_confidences(p)?;
    let q_hat = q
        .q
        .iter()
        .zip(p)
        .map(|(&qi, &pi)| if rng.random::<f64>() < pi { qi } else { 1 - qi })
        .collect();
    SupportPrior::new(q_hat, p.to_vec())
}

/// Confidences `clamp(T_r + U(-h, h), 1e-6, 1)`.
pub fn jitter_confidences<R: Rng + ?Sized>(rows: usize, true_rate: f64, half_width: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(true_rate > 0.0 && true_rate <= 1.0) {
        return Err(Error::InvalidParameter(format!("true rate must lie in (0,1], got {true_rate}")));
    }
    if !(half_width >= 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidParameter(format!("jitter half-width must be non-negative, got {half_width}")));
    }
    Ok((0..rows)
        .map(|_| {
            let u = if half_width > 0.0 { rng.random_range(-half_width..half_width) } else { 0.0 };
            (true_rate + u).clamp(MIN_CONFIDENCE, 1.0)
        })
        .collect())
}

/// Precision `||q o q_hat||_0 / ||q_hat||_0`.
pub fn ppv(q: &SupportIndicator, q_hat: &[u8]) -> Result<f64> {
    if q.len() != q_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "indicator has length {}, estimate has length {}",
            q.len(),
            q_hat.len()
        )));
    }
    let flagged = q_hat.iter().filter(|&&v| v == 1).count();
    if flagged == 0 {
        return Err(Error::EmptyEstimate);
    }
    let hits = q.q.iter().zip(q_hat).filter(|(&a, &b)| a == 1 && b == 1).count();
    Ok(hits as f64 / flagged as f64)
}

/// Precision of an index set; the empty set counts as fully precise.
pub fn set_ppv(q: &SupportIndicator, set: &[usize]) -> f64 {
    if set.is_empty() {
        return 1.0;
    }
    set.iter().filter(|&&i| q.q[i] == 1).count() as f64 / set.len() as f64
}

/// `r[k] = Pr{sum eps_i = k}` for independent Bernoulli variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfVector {
    pub r: Vec<f64>,
}

impl PmfVector {
    /// `Pr{S >= k}`.
    pub fn tail(&self, k: usize) -> f64 {
        self.r.iter().skip(k).sum::<f64>().min(1.0)
    }
}

/// Convolves the two-point masses `[1 - p_i, p_i]`.
///
/// This is the product form `beta * conv([-s_i; 1])` with the factor `p_i`
/// folded into each term, which avoids dividing by small `p_i`.
pub fn poisson_binomial_pmf(p: &[f64]) -> Result<PmfVector> {
    validate_confidences(p)?;
    let mut r = vec![0.0; p.len() + 1];
    r[0] = 1.0;
    for (j, &pi) in p.iter().enumerate() {
        for k in (0..=j + 1).rev() {
            let stay = if k <= j { r[k] * (1.0 - pi) } else { 0.0 };
            let up = if k > 0 { r[k - 1] * pi } else { 0.0 };
            r[k] = stay + up;
        }
    }
    let total: f64 = r.iter().sum();
    let drift = (total - 1.0).abs();
    if drift > PMF_DRIFT_TOL {
        return Err(Error::NumericalInstability { drift });
    }
    if drift > 0.0 {
        r.iter_mut().for_each(|v| *v /= total);
    }
    Ok(PmfVector { r })
}

/// Indices sorted by descending key, lowest index first among ties.
fn argsort_desc(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    order
}

/// Largest index set whose confidence product is at least `eta`, returned in
/// selection order (descending `p`).
pub fn prune_offline(p: &[f64], eta: f64) -> Result<Vec<usize>> {
    validate_confidences(p)?;
    validate_eta(eta)?;
    let mut prod = 1.0;
    let mut out = Vec::new();
    for i in argsort_desc(p) {
        prod *= p[i];
        if prod < eta {
            break;
        }
        out.push(i);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrunedPrior {
    #[serde(rename = "I")]
    pub offline_set: Vec<usize>,
    #[serde(rename = "pruned_set")]
    pub safe_set: Vec<usize>,
    pub eta: f64,
    pub l_eta: Option<usize>,
}

/// Online extraction: keeps the offline rows that the prior labels safe.
pub fn prune_online(offline_set: &[usize], prior: &SupportPrior, eta: f64) -> Result<PrunedPrior> {
    let len = prior.q_hat.len();
    if let Some(&bad) = offline_set.iter().find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange { index: bad, len });
    }
    let mut safe_set: Vec<usize> = offline_set.iter().copied().filter(|&i| prior.q_hat[i] == 1).collect();
    safe_set.sort_unstable();
    Ok(PrunedPrior {
        offline_set: offline_set.to_vec(),
        safe_set,
        eta,
        l_eta: None,
    })
}

/// Product pruning end to end: the offline set from `p`, then the online filter.
pub fn prune_product(prior: &SupportPrior, eta: f64) -> Result<PrunedPrior> {
    let offline = prune_offline(&prior.p, eta)?;
    prune_online(&offline, prior, eta)
}

/// Trust number `l_eta = max{k : Pr{S >= k} >= eta}` where `S` counts correct
/// labels among the estimated-safe rows; keeps the `l_eta` most confident of them.
pub fn prune_quantile(prior: &SupportPrior, eta: f64) -> Result<PrunedPrior> {
    validate_eta(eta)?;
    let safe = prior.estimated_safe();
    if safe.is_empty() {
        return Err(Error::EmptyEstimate);
    }
    let p_safe: Vec<f64> = safe.iter().map(|&i| prior.p[i]).collect();
    let pmf = poisson_binomial_pmf(&p_safe)?;
    let l_eta = (0..=safe.len()).rev().find(|&k| pmf.tail(k) >= eta).unwrap_or(0);
    let keys: Vec<f64> = prior
        .p
        .iter()
        .zip(&prior.q_hat)
        .map(|(&pi, &qi)| pi * qi as f64)
        .collect();
    let mut kept: Vec<usize> = argsort_desc(&keys).into_iter().take(l_eta).collect();
    kept.sort_unstable();
    Ok(PrunedPrior {
        offline_set: kept.clone(),
        safe_set: kept,
        eta,
        l_eta: Some(l_eta),
    })
}

/// How an observer turns a prior into trusted rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Plain l1 decoder, prior ignored.
    None,
    /// Trust every row the prior labels safe.
    Prior,
    PrunedProduct,
    PrunedQuantile,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::None,
        Strategy::Prior,
        Strategy::PrunedProduct,
        Strategy::PrunedQuantile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Prior => "prior",
            Strategy::PrunedProduct => "pruned_product",
            Strategy::PrunedQuantile => "pruned_quantile",
        }
    }

    /// Trusted rows for the weighted observer. An empty result means uniform
    /// weights, i.e. the plain l1 decoder.
    pub fn trusted_rows(self, prior: &SupportPrior, eta: f64) -> Result<Vec<usize>> {
        match self {
            Strategy::None => Ok(Vec::new()),
            Strategy::Prior => Ok(prior.estimated_safe()),
            Strategy::PrunedProduct => Ok(prune_product(prior, eta)?.safe_set),
            Strategy::PrunedQuantile => {
                if prior.q_hat.iter().all(|&v| v == 0) {
                    Ok(Vec::new())
                } else {
                    Ok(prune_quantile(prior, eta)?.safe_set)
                }
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown strategy '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuaranteeEstimate {
    /// Fraction of draws with every pruned row truly safe.
    pub rate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub empty_sets: usize,
}

/// Monte Carlo estimate of `Pr{PPV_eta = 1}` over fresh indicators and prior
/// draws; an empty pruned set counts as precise.
pub fn ppv_guarantee_check<R, G>(
    mut q_generator: G,
    p: &[f64],
    eta: f64,
    strategy: Strategy,
    trials: usize,
    rng: &mut R,
) -> Result<GuaranteeEstimate>
where
    R: Rng + ?Sized,
    G: FnMut(&mut R) -> SupportIndicator,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    validate_eta(eta)?;
    let mut hits = 0usize;
    let mut empty_sets = 0usize;
    for _ in 0..trials {
        let q = q_generator(rng);
        let prior = sample_prior(&q, p, rng)?;
        let set = strategy.trusted_rows(&prior, eta)?;
        if set.is_empty() {
            empty_sets += 1;
        }
        if set.iter().all(|&i| q.q[i] == 1) {
            hits += 1;
        }
    }
    let rate = hits as f64 / trials as f64;
    Ok(GuaranteeEstimate {
        rate,
        stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
        trials,
        empty_sets,
    })
}

/// Advisory quantities about a prior; never enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriorDiagnostics {
    pub sum_p: f64,
    /// `sum p_i > Tm * p_A`: the localiser beats a fair coin.
    pub better_than_coin: bool,
    /// `1 - e (1 - (e - 1) S / (e |T^c|))^{|T^c|}` with `S` the confidence
    /// mass on estimated-safe rows.
    pub eta_upper_bound: f64,
}

pub fn prior_diagnostics(prior: &SupportPrior, attacked_rows: usize) -> PriorDiagnostics {
    let rows = prior.p.len();
    let sum_p: f64 = prior.p.iter().sum();
    let p_a = if rows == 0 { 0.0 } else { attacked_rows as f64 / rows as f64 };
    let safe_rows = rows.saturating_sub(attacked_rows) as f64;
    let s: f64 = prior.estimated_safe().iter().map(|&i| prior.p[i]).sum();
    let e = std::f64::consts::E;
    let eta_upper_bound = if safe_rows == 0.0 {
        f64::NAN
    } else {
        1.0 - e * (1.0 - (e - 1.0) * s / (e * safe_rows)).powf(safe_rows)
    };
    PriorDiagnostics {
        sum_p,
        better_than_coin: sum_p > rows as f64 * p_a,
        eta_upper_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn enumerate_pmf(p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let mut r = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let mut prob = 1.0;
            for (i, &pi) in p.iter().enumerate() {
                prob *= if mask >> i & 1 == 1 { pi } else { 1.0 - pi };
            }
            r[mask.count_ones() as usize] += prob;
        }
        r
    }

    fn brute_force_offline(p: &[f64], eta: f64) -> usize {
        let n = p.len();
        (0u32..(1 << n))
            .filter(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| p[i]).product::<f64>() >= eta)
            .map(|mask| mask.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(indicator_from_support(&[], 3).unwrap().q, vec![1, 1, 1]);
        assert_eq!(indicator_from_support(&[0, 1, 2], 3).unwrap().q, vec![0, 0, 0]);
        assert_eq!(indicator_from_support(&[1], 4).unwrap().q, vec![1, 0, 1, 1]);
        assert!(indicator_from_support(&[4], 4).is_err());
    }

    #[test]
    fn ppv_examples() {
        let q = SupportIndicator { q: vec![1, 0, 1, 1] };
        assert!((ppv(&q, &[1, 1, 0, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ppv(&q, &q.q.clone()).unwrap(), 1.0);
        assert_eq!(ppv(&SupportIndicator { q: vec![1; 3] }, &[0, 1, 0]).unwrap(), 1.0);
        assert_eq!(ppv(&q, &[0, 0, 0, 0]).unwrap_err(), Error::EmptyEstimate);
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(poisson_binomial_pmf(&[0.5, 0.5]).unwrap().r, vec![0.25, 0.5, 0.25]);
        assert_eq!(poisson_binomial_pmf(&[1.0, 1.0, 1.0]).unwrap().r, vec![0.0, 0.0, 0.0, 1.0]);
        let r = poisson_binomial_pmf(&[0.9, 0.8]).unwrap().r;
        for (a, b) in r.iter().zip(enumerate_pmf(&[0.9, 0.8])) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((r[0] - 0.02).abs() < 1e-15 && (r[1] - 0.26).abs() < 1e-15 && (r[2] - 0.72).abs() < 1e-15);
        assert!(poisson_binomial_pmf(&[0.0]).is_err());
    }

    #[test]
    fn offline_examples() {
        assert_eq!(prune_offline(&[0.9, 0.8, 0.95], 0.7).unwrap(), vec![2, 0]);
        assert_eq!(brute_force_offline(&[0.9, 0.8, 0.95], 0.7), 2);
        assert_eq!(prune_offline(&[0.9, 0.8, 0.95], 1e-9).unwrap().len(), 3);
        assert_eq!(prune_offline(&[1.0; 5], 0.99).unwrap().len(), 5);
        assert!(prune_offline(&[0.5, 0.6], 0.7).unwrap().is_empty());
        assert_eq!(prune_offline(&[0.5], 1.5).unwrap_err(), Error::InvalidParameter("eta must lie in (0,1)".into()));
        // ties keep the lower index first
        assert_eq!(prune_offline(&[0.9, 0.9, 0.9], 0.8).unwrap(), vec![0, 1]);
    }

    #[test]
    fn online_examples() {
        let prior = SupportPrior::new(vec![1, 0, 1], vec![0.9; 3]).unwrap();
        assert_eq!(prune_online(&[0, 1, 2], &prior, 0.5).unwrap().safe_set, vec![0, 2]);
        assert!(prune_online(&[], &prior, 0.5).unwrap().safe_set.is_empty());
        let none = SupportPrior::new(vec![0, 0, 0], vec![0.9; 3]).unwrap();
        assert!(prune_online(&[0, 1, 2], &none, 0.5).unwrap().safe_set.is_empty());
    }

    #[test]
    fn quantile_examples() {
        let prior = SupportPrior::new(vec![1, 1], vec![0.5, 0.5]).unwrap();
        let pr = prune_quantile(&prior, 0.7).unwrap();
        assert_eq!(pr.l_eta, Some(1));
        assert_eq!(pr.safe_set, vec![0]);
        let sure = SupportPrior::new(vec![1, 0, 1], vec![1.0; 3]).unwrap();
        assert_eq!(prune_quantile(&sure, 0.99).unwrap().safe_set, vec![0, 2]);
        let shaky = SupportPrior::new(vec![1, 1, 1], vec![0.9; 3]).unwrap();
        assert_eq!(prune_quantile(&shaky, 1.0 - 1e-9).unwrap().l_eta, Some(0));
        let empty = SupportPrior::new(vec![0, 0], vec![0.9; 2]).unwrap();
        assert_eq!(prune_quantile(&empty, 0.5).unwrap_err(), Error::EmptyEstimate);
    }

    #[test]
    fn sampling_contracts() {
        let q = indicator_from_support(&[1, 3], 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_prior(&q, &[1.0; 6], &mut rng).unwrap().q_hat, q.q);
        let a = sample_prior(&q, &[0.6; 6], &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = sample_prior(&q, &[0.6; 6], &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);

        let n = 10_000;
        let big = indicator_from_support(&[], n).unwrap();
        let prior = sample_prior(&big, &vec![0.5; n], &mut rng).unwrap();
        let flips = prior.q_hat.iter().filter(|&&v| v == 0).count() as f64 / n as f64;
        assert!((flips - 0.5).abs() < 0.02);
    }

    #[test]
    fn flip_rate_matches_confidence() {
        let q = indicator_from_support(&[0], 3).unwrap();
        let p = [0.3, 0.7, 0.95];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draws = 20_000;
        let mut flips = [0usize; 3];
        for _ in 0..draws {
            let prior = sample_prior(&q, &p, &mut rng).unwrap();
            for i in 0..3 {
                flips[i] += (prior.q_hat[i] != q.q[i]) as usize;
            }
        }
        for i in 0..3 {
            let rate = flips[i] as f64 / draws as f64;
            let se = (p[i] * (1.0 - p[i]) / draws as f64).sqrt();
            assert!((rate - (1.0 - p[i])).abs() <= 3.0 * se + 1e-12, "row {i}: {rate}");
        }
    }

    #[test]
    fn guarantee_with_certain_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = ppv_guarantee_check(
            |_: &mut ChaCha8Rng| indicator_from_support(&[0, 2], 5).unwrap(),
            &[1.0; 5],
            0.9,
            Strategy::PrunedProduct,
            50,
            &mut rng,
        )
        .unwrap();
        assert_eq!(est.rate, 1.0);
        let one = ppv_guarantee_check(
            |_: &mut ChaCha8Rng| indicator_from_support(&[0, 2], 5).unwrap(),
            &[0.7; 5],
            0.5,
            Strategy::PrunedQuantile,
            1,
            &mut rng,
        )
        .unwrap();
        assert!(one.rate == 0.0 || one.rate == 1.0);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!("bogus".parse::<Strategy>().is_err());
    }

    #[test]
    fn jitter_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = jitter_confidences(1000, 0.95, 0.1, &mut rng).unwrap();
        assert!(p.iter().all(|v| (MIN_CONFIDENCE..=1.0).contains(v)));
        assert!(p.contains(&1.0));
        assert!(jitter_confidences(3, 0.0, 0.1, &mut rng).is_err());
    }

    proptest::proptest! {
        #[test]
        fn pmf_matches_enumeration(p in proptest::collection::vec(0.01f64..=1.0, 1..=12)) {
            let got = poisson_binomial_pmf(&p).unwrap().r;
            for (a, b) in got.iter().zip(enumerate_pmf(&p)) {
                proptest::prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn offline_is_optimal(p in proptest::collection::vec(0.3f64..=1.0, 1..=12), eta in 0.05f64..0.99) {
            let set = prune_offline(&p, eta).unwrap();
            proptest::prop_assert_eq!(set.len(), brute_force_offline(&p, eta));
            proptest::prop_assert!(set.iter().map(|&i| p[i]).product::<f64>() >= eta);
        }

        #[test]
        fn pruned_sets_stay_inside_estimated_safe_rows(
            p in proptest::collection::vec(0.3f64..=1.0, 1..=12),
            bits in proptest::collection::vec(0u8..=1, 12),
            eta in 0.05f64..0.99,
        ) {
            let q_hat = bits[..p.len()].to_vec();
            proptest::prop_assume!(q_hat.contains(&1));
            let prior = SupportPrior::new(q_hat.clone(), p).unwrap();
            for set in [prune_product(&prior, eta).unwrap().safe_set, prune_quantile(&prior, eta).unwrap().safe_set] {
                proptest::prop_assert!(set.iter().all(|&i| q_hat[i] == 1));
            }
        }
    }
}
