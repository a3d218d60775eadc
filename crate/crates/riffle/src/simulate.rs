//! Seeded Monte Carlo GSR a-shuffle sampling and empirical TV
//! estimation, cross-validated against the exact engine.
//!
//! The sampler draws a word of n i.i.d. uniform digits in 0..a. Digit
//! word w corresponds bijectively to one cut/riffle combination: packet
//! j consists of the next #(p : w_p = j) cards of the source deck,
//! packets taken top-down in digit order, and output position p receives
//! the next unused card of packet w_p. Each word has probability a^-n,
//! so the induced permutation distribution is exactly the a-shuffle
//! distribution C(a+n-des-1, n) / a^n. Enumerating all a^n words instead
//! of sampling reproduces it with no randomness at all, which is how the
//! sampler core is tested.

use std::collections::{BTreeMap, HashMap};

use num::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::deck::Deck;
use crate::exact::{transition_prob, Permutation};
use crate::{numfmt, Budget, Error, Int, Rat, Result};

/// Builds the a-shuffle permutation encoded by a digit word. Digits are
/// 0-based; the word length is the deck size.
pub fn permutation_from_digits(digits: &[u64]) -> Permutation {
    let n = digits.len();
    let a = digits.iter().max().map_or(1, |&d| d + 1) as usize;
    let mut counts = vec![0u32; a];
    for &d in digits {
        counts[d as usize] += 1;
    }
    // start of each packet within the source deck
    let mut next_card = vec![0u32; a];
    let mut acc = 0u32;
    for (j, &c) in counts.iter().enumerate() {
        next_card[j] = acc;
        acc += c;
    }
    let mut images = vec![0u32; n];
    for (p, &d) in digits.iter().enumerate() {
        let source = next_card[d as usize];
        next_card[d as usize] += 1;
        images[source as usize] = p as u32;
    }
    Permutation::from_raw(images)
}

/// A seeded GSR a-shuffle sampler. Given (seed, stream, a, n) the
/// permutation sequence is reproducible bit for bit; distinct streams
/// are independent and may be fanned out across workers.
#[derive(Debug, Clone)]
pub struct ShuffleSampler {
    a: u64,
    n: usize,
    seed: u64,
    rng: ChaCha8Rng,
}

impl ShuffleSampler {
    pub fn new(a: u64, n: usize, seed: u64) -> ShuffleSampler {
        Self::with_stream(a, n, seed, 0)
    }

    pub fn with_stream(a: u64, n: usize, seed: u64, stream: u64) -> ShuffleSampler {
        assert!(a >= 1 && n >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        ShuffleSampler { a, n, seed, rng }
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn deck_size(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draws one a-shuffle permutation.
    pub fn sample(&mut self) -> Permutation {
        let digits: Vec<u64> = (0..self.n)
            .map(|_| self.rng.random_range(0..self.a))
            .collect();
        permutation_from_digits(&digits)
    }

    /// Applies a fresh a-shuffle to the deck.
    pub fn shuffle(&mut self, deck: &Deck) -> Deck {
        assert_eq!(deck.len(), self.n, "sampler deck size mismatch");
        self.sample().apply(deck)
    }
}

/// What a TV-estimation experiment holds fixed.
#[derive(Debug, Clone)]
pub enum TvMode {
    /// Shuffle this deck and tally the resulting orderings.
    FixedSource(Deck),
    /// Shuffle a standard deck, deal it by this pattern, and tally the
    /// resulting partitions (the orbit deck that the shuffle maps to the
    /// pattern).
    FixedTarget(Deck),
}

impl TvMode {
    fn deck(&self) -> &Deck {
        match self {
            TvMode::FixedSource(d) | TvMode::FixedTarget(d) => d,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            TvMode::FixedSource(_) => "fixed_source",
            TvMode::FixedTarget(_) => "fixed_target",
        }
    }
}

/// Result of a Monte Carlo TV estimation run.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub a: u64,
    pub trials: u64,
    pub mode: String,
    pub seed: u64,
    /// Plug-in estimate (1/2) sum |f_i - 1/N|, exact given the tallies.
    pub tv_estimate: Rat,
    /// The plug-in estimator is biased upward by at most about
    /// sqrt(N / trials) / 2 (Cauchy-Schwarz over the per-cell sampling
    /// noise); estimates should be read as upper-ish values.
    pub bias_bound: f64,
    /// Delta-method standard error of the estimate.
    pub std_err: f64,
    /// Tally per orbit deck, keyed by deck string.
    pub frequencies: BTreeMap<String, u64>,
    /// Exact TV from the descent-polynomial engine, when requested.
    pub exact_tv: Option<Rat>,
    /// Chi-square statistic of the tallies against the exact transition
    /// distribution, when requested.
    pub chi2: Option<f64>,
    pub p_value: Option<f64>,
    pub dof: Option<usize>,
}

impl SimReport {
    pub fn to_json(&self, include_frequencies: bool) -> serde_json::Value {
        let mut v = json!({
            "trials": self.trials,
            "a": self.a,
            "mode": self.mode,
            "seed": self.seed,
            "tv_estimate": numfmt::approx_f64(&self.tv_estimate),
            "tv_estimate_exact": numfmt::fraction(&self.tv_estimate),
            "bias_bound": self.bias_bound,
            "std_err": self.std_err,
            "exact_tv": self.exact_tv.as_ref().map(|r| numfmt::fraction(r)),
            "chi2": self.chi2,
            "p": self.p_value,
            "dof": self.dof,
        });
        if include_frequencies {
            v["frequencies"] = json!(self.frequencies);
        }
        v
    }
}

/// Estimates the fixed-source or fixed-target variation distance from
/// uniform by Monte Carlo, tallying outcomes over the whole orbit.
/// Refused when the orbit is too large to tally; exact TV at scale
/// belongs to the exact engine or the kappa asymptotics.
pub fn estimate_tv(
    sampler: &mut ShuffleSampler,
    mode: &TvMode,
    trials: u64,
    exact_reference: bool,
    budget: &Budget,
) -> Result<SimReport> {
    assert!(trials >= 1);
    let deck = mode.deck();
    assert_eq!(deck.len(), sampler.deck_size(), "sampler deck size mismatch");
    let comp = deck.composition();
    let orbit_size_int = comp.orbit_size();
    if orbit_size_int > Int::from(budget.max_tally_orbit) {
        return Err(Error::BudgetExceeded {
            task: "Monte Carlo outcome tally".into(),
            required: format!("N = {orbit_size_int} outcomes"),
            budget: budget.max_tally_orbit.to_string(),
        });
    }

    let mut tally: HashMap<Vec<u8>, u64> = HashMap::new();
    match mode {
        TvMode::FixedSource(source) => {
            for _ in 0..trials {
                let shuffled = sampler.shuffle(source);
                *tally.entry(shuffled.indices().to_vec()).or_insert(0) += 1;
            }
        }
        TvMode::FixedTarget(target) => {
            // The partition dealt after shuffle pi is the orbit deck D
            // with D(i) = target(pi(i)); pi maps D to the target.
            let tgt = target.indices();
            for _ in 0..trials {
                let perm = sampler.sample();
                let outcome: Vec<u8> =
                    (0..tgt.len()).map(|i| tgt[perm.image_of(i)]).collect();
                *tally.entry(outcome).or_insert(0) += 1;
            }
        }
    }

    let uniform = Rat::new(Int::one(), orbit_size_int.clone());
    let mut tv = Rat::zero();
    let mut frequencies = BTreeMap::new();
    let mut observed: Vec<u64> = Vec::new();
    let mut exact_probs: Vec<Rat> = Vec::new();
    let mut signed_mass = 0.0f64;
    for orbit_deck in comp.enumerate(budget)? {
        let count = tally
            .get(orbit_deck.indices())
            .copied()
            .unwrap_or_default();
        let f_hat = Rat::new(Int::from(count), Int::from(trials));
        let diff = &f_hat - &uniform;
        if diff.is_positive() {
            signed_mass += f_hat.to_f64().unwrap_or(0.0);
        } else {
            signed_mass -= f_hat.to_f64().unwrap_or(0.0);
        }
        tv += diff.abs();
        if count > 0 {
            frequencies.insert(orbit_deck.to_string(), count);
        }
        observed.push(count);
        if exact_reference {
            let p = match mode {
                TvMode::FixedSource(source) => {
                    transition_prob(sampler.a(), source, &orbit_deck, budget)?
                }
                TvMode::FixedTarget(target) => {
                    transition_prob(sampler.a(), &orbit_deck, target, budget)?
                }
            };
            exact_probs.push(p);
        }
    }
    tv /= Rat::from_integer(Int::from(2));

    let orbit_f = orbit_size_int.to_f64().unwrap_or(f64::INFINITY);
    let bias_bound = 0.5 * (orbit_f / trials as f64).sqrt();
    let std_err = ((1.0 - signed_mass * signed_mass).max(0.0) / (4.0 * trials as f64)).sqrt();

    let mut report = SimReport {
        a: sampler.a(),
        trials,
        mode: mode.name().to_string(),
        seed: sampler.seed(),
        tv_estimate: tv,
        bias_bound,
        std_err,
        frequencies,
        exact_tv: None,
        chi2: None,
        p_value: None,
        dof: None,
    };

    if exact_reference {
        let mut exact_tv = Rat::zero();
        for p in &exact_probs {
            exact_tv += (p - &uniform).abs();
        }
        report.exact_tv = Some(exact_tv / Rat::from_integer(Int::from(2)));
        // drop structurally impossible outcomes (the sampler cannot hit
        // them); a nonzero count there is a model violation
        let mut obs = Vec::new();
        let mut probs = Vec::new();
        for (o, p) in observed.iter().zip(&exact_probs) {
            if p.is_zero() {
                if *o > 0 {
                    return Err(Error::ZeroProbabilityCell);
                }
            } else {
                obs.push(*o);
                probs.push(p.to_f64().unwrap_or(0.0));
            }
        }
        match gof_test(&obs, &probs) {
            Ok(gof) => {
                report.chi2 = Some(gof.chi2);
                report.p_value = Some(gof.p_value);
                report.dof = Some(gof.dof);
            }
            // a = 1 (or a one-deck orbit) concentrates the exact
            // distribution on a single outcome; there is nothing to test
            Err(Error::DegenerateDistribution) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Pearson chi-square goodness-of-fit result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofResult {
    pub chi2: f64,
    pub p_value: f64,
    /// Degrees of freedom after pooling.
    pub dof: usize,
    /// Number of cells pooled together for the expected-count rule.
    pub pooled_cells: usize,
}

/// Pearson chi-square test of observed counts against model
/// probabilities. Cells with expected count below 5 are pooled (smallest
/// expectations first) per the standard validity rule. The p-value is
/// the regularized upper incomplete gamma Q(dof/2, chi2/2), accurate to
/// about 1e-8.
pub fn gof_test(observed: &[u64], probs: &[f64]) -> Result<GofResult> {
    assert_eq!(observed.len(), probs.len(), "one probability per cell");
    if probs.iter().any(|&p| p <= 0.0) {
        return Err(Error::ZeroProbabilityCell);
    }
    let trials: u64 = observed.iter().sum();
    let total_p: f64 = probs.iter().sum();

    // pool smallest expectations until every cell expects at least 5
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&i, &j| probs[i].partial_cmp(&probs[j]).unwrap());
    let mut cells: Vec<(f64, u64)> = Vec::new(); // (expected, observed)
    let mut pool_e = 0.0;
    let mut pool_o = 0u64;
    let mut pooled_cells = 0usize;
    for &i in &order {
        let e = probs[i] / total_p * trials as f64;
        if pool_e < 5.0 {
            pool_e += e;
            pool_o += observed[i];
            pooled_cells += 1;
            if pool_e >= 5.0 {
                cells.push((pool_e, pool_o));
                pool_e = 0.0;
                pool_o = 0;
            }
        } else {
            cells.push((e, observed[i]));
        }
    }
    if pool_e > 0.0 {
        // leftover under-5 pool: merge into the last closed cell
        if let Some(last) = cells.last_mut() {
            last.0 += pool_e;
            last.1 += pool_o;
        } else {
            cells.push((pool_e, pool_o));
        }
    }
    if pooled_cells == probs.len() && cells.len() <= 1 && probs.len() > 1 {
        // everything collapsed into one cell; not testable
        return Err(Error::DegenerateDistribution);
    }
    if cells.len() < 2 {
        return Err(Error::DegenerateDistribution);
    }

    let chi2: f64 = cells
        .iter()
        .map(|&(e, o)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = cells.len() - 1;
    let p_value = chi2_tail(dof as f64, chi2);
    Ok(GofResult {
        chi2,
        p_value,
        dof,
        pooled_cells,
    })
}

/// Upper tail of the chi-square distribution: Q(dof/2, x/2).
fn chi2_tail(dof: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(dof / 2.0, x / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{shuffle_prob_distinct, tv_fixed_source};
    use itertools::Itertools;

    fn deck(s: &str) -> Deck {
        Deck::parse(s).unwrap()
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(Int::from(n), Int::from(d))
    }

    /// Enumerates all a^n digit words through the sampler core and
    /// checks the exact permutation distribution.
    fn word_enumeration_matches_formula(a: u64, n: usize) {
        let mut tally: HashMap<Permutation, u64> = HashMap::new();
        let mut word = vec![0u64; n];
        'outer: loop {
            *tally.entry(permutation_from_digits(&word)).or_insert(0) += 1;
            let mut i = 0;
            loop {
                if i == n {
                    break 'outer;
                }
                word[i] += 1;
                if word[i] < a {
                    break;
                }
                word[i] = 0;
                i += 1;
            }
        }
        let denom = Int::from(a).pow(n as u32);
        for images in (0..n).permutations(n) {
            let perm = Permutation::from_images(images).unwrap();
            let count = tally.get(&perm).copied().unwrap_or(0);
            let got = Rat::new(Int::from(count), denom.clone());
            let want = shuffle_prob_distinct(a, n, perm.descents() as i64);
            assert_eq!(got, want, "a={a} n={n} perm={perm}");
        }
    }

    #[test]
    fn sampler_core_is_exact_at_desk_scale() {
        for a in 1..=4u64 {
            for n in 1..=4usize {
                word_enumeration_matches_formula(a, n);
            }
        }
    }

    #[test]
    fn one_shuffle_and_one_card_are_identities() {
        let mut s = ShuffleSampler::new(1, 5, 42);
        let d = deck("ABCDE");
        for _ in 0..20 {
            assert_eq!(s.sample(), Permutation::identity(5));
            assert_eq!(s.shuffle(&d), d);
        }
        let mut s1 = ShuffleSampler::new(7, 1, 42);
        for _ in 0..20 {
            assert_eq!(s1.sample(), Permutation::identity(1));
        }
    }

    #[test]
    fn constant_deck_is_fixed() {
        let mut s = ShuffleSampler::new(4, 4, 9);
        let d = deck("AAAA");
        for _ in 0..50 {
            assert_eq!(s.shuffle(&d), d);
        }
    }

    #[test]
    fn shuffle_preserves_composition() {
        let mut s = ShuffleSampler::new(3, 6, 11);
        let d = deck("AABBCC");
        for _ in 0..100 {
            assert_eq!(s.shuffle(&d).composition(), d.composition());
        }
    }

    #[test]
    fn identical_seeds_reproduce_reports() {
        let b = Budget::default();
        let mode = TvMode::FixedSource(deck("AABB"));
        let run = |seed| {
            let mut s = ShuffleSampler::new(4, 4, seed);
            estimate_tv(&mut s, &mode, 5_000, true, &b).unwrap()
        };
        let r1 = run(3);
        let r2 = run(3);
        assert_eq!(r1.tv_estimate, r2.tv_estimate);
        assert_eq!(r1.frequencies, r2.frequencies);
        assert_eq!(r1.chi2, r2.chi2);
        let r3 = run(4);
        assert_ne!(r1.frequencies, r3.frequencies);
    }

    #[test]
    fn streams_are_independent_but_reproducible() {
        let mut s0 = ShuffleSampler::with_stream(4, 4, 7, 0);
        let mut s0b = ShuffleSampler::with_stream(4, 4, 7, 0);
        let mut s1 = ShuffleSampler::with_stream(4, 4, 7, 1);
        let a: Vec<Permutation> = (0..10).map(|_| s0.sample()).collect();
        let b: Vec<Permutation> = (0..10).map(|_| s0b.sample()).collect();
        let c: Vec<Permutation> = (0..10).map(|_| s1.sample()).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn estimate_tv_identity_shuffle_is_deterministic() {
        let b = Budget::default();
        let mut s = ShuffleSampler::new(1, 4, 0);
        let report = estimate_tv(&mut s, &TvMode::FixedSource(deck("AABB")), 1_000, true, &b)
            .unwrap();
        // only the identity outcome occurs; N = 6
        assert_eq!(report.tv_estimate, Rat::one() - rat(1, 6));
        assert_eq!(report.exact_tv, Some(Rat::one() - rat(1, 6)));
        assert_eq!(report.frequencies.len(), 1);
        assert_eq!(report.frequencies["AABB"], 1_000);
        // the reference distribution is a point mass: nothing to test
        assert!(report.chi2.is_none());
    }

    #[test]
    fn estimate_tv_matches_exact_within_noise() {
        let b = Budget::default();
        let source = deck("ABAB");
        let mut s = ShuffleSampler::new(4, 4, 12345);
        let trials = 200_000;
        let report = estimate_tv(&mut s, &TvMode::FixedSource(source.clone()), trials, true, &b)
            .unwrap();
        let exact = tv_fixed_source(4, &source, &b).unwrap();
        assert_eq!(report.exact_tv, Some(exact.clone()));
        let est = report.tv_estimate.to_f64().unwrap();
        let truth = exact.to_f64().unwrap();
        // upward-biased estimator: allow [truth - 3se, truth + bias + 3se]
        assert!(est >= truth - 3.0 * report.std_err, "est {est}, truth {truth}");
        assert!(
            est <= truth + report.bias_bound + 3.0 * report.std_err,
            "est {est}, truth {truth}, bias {}",
            report.bias_bound
        );
        // the chi-square against the exact distribution should not reject
        assert!(report.p_value.unwrap() > 1e-3);
    }

    #[test]
    fn estimate_tv_fixed_target_tallies_partitions() {
        let b = Budget::default();
        let pattern = deck("(NE)^2");
        let mut s = ShuffleSampler::new(2, 4, 77);
        let report = estimate_tv(&mut s, &TvMode::FixedTarget(pattern.clone()), 50_000, true, &b)
            .unwrap();
        let exact = crate::exact::tv_fixed_target(2, &pattern, &b).unwrap();
        assert_eq!(report.exact_tv, Some(exact));
        assert_eq!(report.mode, "fixed_target");
        // all tallied outcomes are orbit members (2 N, 2 E)
        for key in report.frequencies.keys() {
            assert_eq!(key.chars().filter(|&c| c == 'N').count(), 2, "{key}");
        }
    }

    #[test]
    fn estimate_tv_refuses_large_orbits() {
        let b = Budget::default();
        let bridge = deck("(NESW)^13");
        let mut s = ShuffleSampler::new(2, 52, 0);
        assert!(matches!(
            estimate_tv(&mut s, &TvMode::FixedTarget(bridge), 10, false, &b),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn gof_exact_match_gives_p_one() {
        // observed exactly equal to expected: statistic 0, p = 1
        let observed = [50u64, 30, 20];
        let probs = [0.5, 0.3, 0.2];
        let r = gof_test(&observed, &probs).unwrap();
        assert_eq!(r.chi2, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.dof, 2);
    }

    #[test]
    fn gof_rejects_wrong_model() {
        // a = 2, n = 3 samples tested against the uniform model
        let b = Budget::default();
        let mut s = ShuffleSampler::new(2, 3, 5);
        let mode = TvMode::FixedSource(deck("ABC"));
        let report = estimate_tv(&mut s, &mode, 100_000, false, &b).unwrap();
        let comp = deck("ABC").composition();
        let observed: Vec<u64> = comp
            .enumerate(&b)
            .unwrap()
            .map(|d| report.frequencies.get(&d.to_string()).copied().unwrap_or(0))
            .collect();
        let uniform = vec![1.0 / 6.0; 6];
        let r = gof_test(&observed, &uniform).unwrap();
        assert!(r.p_value < 1e-6, "p = {}", r.p_value);
    }

    #[test]
    fn gof_input_validation() {
        assert!(matches!(
            gof_test(&[10, 10], &[0.5, 0.0]),
            Err(Error::ZeroProbabilityCell)
        ));
        assert!(matches!(
            gof_test(&[10], &[1.0]),
            Err(Error::DegenerateDistribution)
        ));
    }

    #[test]
    fn gof_pools_small_cells() {
        // 10 tiny cells with 2 expected each pool up to >= 5
        let observed = vec![2u64; 10];
        let probs = vec![0.1; 10];
        let r = gof_test(&observed, &probs).unwrap();
        assert!(r.dof < 9);
        assert!(r.pooled_cells > 0);
    }

    #[test]
    fn chi2_tail_known_values() {
        // classic table values
        assert!((chi2_tail(1.0, 3.841) - 0.05).abs() < 1e-3);
        assert!((chi2_tail(4.0, 9.488) - 0.05).abs() < 1e-3);
        assert!((chi2_tail(2.0, 0.0) - 1.0).abs() < 1e-12);
    }
}
