//! First-order asymptotics of a-shuffle transition probabilities.
//!
//! For a source deck D and target deck D', the transition probability
//! expands as P_a(D -> D') = 1/N + c1(D, D') / a + O(1/a^2). Summing
//! |c1|/2 over targets of a fixed source gives kappa1; over sources of a
//! fixed target (a dealing method) gives kappabar1. The fixed-target sum
//! is intractable to enumerate at bridge scale, so kappabar1 is computed
//! by a dynamic program over the distribution of the theta statistic
//!
//!   theta(D) = sum_i Z(D', D(i), D(i+1)) / (n_D(i) n_D(i+1)),
//!
//! which takes far fewer values than there are decks. Theta values are
//! keyed as integers scaled by a per-pattern common denominator L, and
//! deck counts are exact integers throughout.

use std::collections::{BTreeMap, HashMap};

use num::{integer, One, Signed, Zero};
use serde_json::json;

use crate::deck::{factorial_int, w_entries, z_entries, Deck};
use crate::exact::{descent_polynomial, eulerian_row};
use crate::{numfmt, Budget, Error, Int, Rat, Result};

/// An exact kappa constant together with the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KappaResult {
    pub value: Rat,
    /// Deck or pattern the constant belongs to.
    pub context: String,
    /// Orbit size N.
    pub orbit_size: Int,
    /// The integer scale L used for theta keys, when the fixed-target
    /// recursion produced the value.
    pub scale: Option<i64>,
}

impl KappaResult {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kappa": numfmt::fraction(&self.value),
            "approx": numfmt::decimal(&self.value, 12),
            "N": self.orbit_size.to_string(),
            "scale_L": self.scale,
            "context": self.context,
        })
    }
}

/// First-order coefficient of 1/a in P_a(source -> target):
/// (n / 2N) sum_{u<v} W(source,u,v) Z(target,u,v) / (n_u n_v).
pub fn c1(source: &Deck, target: &Deck) -> Result<Rat> {
    let tgt = aligned_same_composition(source, target)?;
    let k = source.alphabet().len();
    let counts = source.composition().counts_slice().to_vec();
    let w = w_entries(source.indices(), k);
    let z = z_entries(&tgt, k);
    let mut acc = Rat::zero();
    for u in 0..k {
        for v in (u + 1)..k {
            if counts[u] == 0 || counts[v] == 0 || w[u][v] == 0 || z[u][v] == 0 {
                continue;
            }
            acc += Rat::new(
                Int::from(w[u][v]) * Int::from(z[u][v]),
                Int::from((counts[u] * counts[v]) as u64),
            );
        }
    }
    let n = source.len();
    let orbit = source.composition().orbit_size();
    Ok(Rat::new(Int::from(n as u64), Int::from(2) * orbit) * acc)
}

/// Mean of asc(pi) - des(pi) over the transition set T(source, target),
/// by enumeration. The theorem identity
/// c1 = (n / 2N) * expected_asc_minus_des holds exactly.
pub fn expected_asc_minus_des(source: &Deck, target: &Deck, budget: &Budget) -> Result<Rat> {
    Ok(descent_polynomial(source, target, budget)?.mean_asc_minus_des())
}

/// The theta statistic of `source` with respect to the dealing pattern
/// `pattern` (same composition). Satisfies
/// c1(source, pattern) = (n / 2N) * theta(source).
pub fn theta(source: &Deck, pattern: &Deck) -> Result<Rat> {
    let ctx = ThetaContext::new(pattern)?;
    let src = aligned_same_composition(pattern, source)?;
    let mut scaled: i64 = 0;
    for w in src.windows(2) {
        scaled += ctx.zs[w[0] as usize][w[1] as usize];
    }
    Ok(Rat::new(Int::from(scaled), Int::from(ctx.scale)))
}

/// Exact kappa1 for an n-card all-distinct deck:
/// (n / 4 n!) sum_d <n,d> |n - 1 - 2d|.
pub fn kappa1_distinct(n: usize) -> Rat {
    assert!(n >= 1);
    let row = eulerian_row(n);
    let mut acc = Int::default();
    for (d, count) in row.iter().enumerate() {
        acc += count * Int::from((n as i64 - 1 - 2 * d as i64).abs());
    }
    Rat::new(Int::from(n as u64) * acc, Int::from(4) * factorial_int(n))
}

/// Float approximation n sqrt((n+1) / 24 pi) to kappa1 of a distinct
/// n-card deck; for orientation only, not used in any exact result.
pub fn kappa1_approx(n: usize) -> f64 {
    let nf = n as f64;
    nf * ((nf + 1.0) / (24.0 * std::f64::consts::PI)).sqrt()
}

/// Exact kappa1 of a fixed source deck: half the sum of |c1(D, D')|
/// over the orbit of D. Orbit enumeration is budgeted.
pub fn kappa1_enum(source: &Deck, budget: &Budget) -> Result<KappaResult> {
    let comp = source.composition();
    let counts = comp.counts_slice().to_vec();
    let k = source.alphabet().len();
    let n = source.len();
    let orbit_size = comp.orbit_size();
    let w = w_entries(source.indices(), k);

    // Integer-scale the per-target sums: with M a common multiple of the
    // pair products n_u n_v, each target contributes
    // s(T) = sum_{u<v} W[u][v] Z_T[u][v] M / (n_u n_v), and
    // kappa1 = n sum |s| / (4 N M).
    let mut m: i64 = 1;
    let mut terms: Vec<(usize, usize, i128)> = Vec::new();
    for u in 0..k {
        for v in (u + 1)..k {
            if counts[u] == 0 || counts[v] == 0 || w[u][v] == 0 {
                continue;
            }
            m = integer::lcm(m, (counts[u] * counts[v]) as i64);
        }
    }
    for u in 0..k {
        for v in (u + 1)..k {
            if counts[u] == 0 || counts[v] == 0 || w[u][v] == 0 {
                continue;
            }
            let coef = w[u][v] as i128 * (m as i128 / (counts[u] * counts[v]) as i128);
            terms.push((u, v, coef));
        }
    }

    let mut weighted = Int::default();
    for target in comp.enumerate(budget)? {
        let z = z_entries(target.indices(), k);
        let mut s: i128 = 0;
        for &(u, v, coef) in &terms {
            s += coef * z[u][v] as i128;
        }
        weighted += Int::from(s.unsigned_abs());
    }
    let value = Rat::new(
        Int::from(n as u64) * weighted,
        Int::from(4) * &orbit_size * Int::from(m),
    );
    Ok(KappaResult {
        value,
        context: source.to_string(),
        orbit_size,
        scale: None,
    })
}

/// Scaled-integer view of a pattern's theta terms: L and the integer
/// influences L * Z(D',u,v) / (n_u n_v).
struct ThetaContext {
    counts: Vec<usize>,
    n: usize,
    scale: i64,
    zs: Vec<Vec<i64>>,
    orbit_size: Int,
}

impl ThetaContext {
    fn new(pattern: &Deck) -> Result<ThetaContext> {
        let comp = pattern.composition();
        let counts = comp.counts_slice().to_vec();
        if let Some(i) = counts.iter().position(|&c| c == 0) {
            return Err(Error::ZeroCount(pattern.alphabet().symbols()[i]));
        }
        let k = counts.len();
        let n = pattern.len();
        let z = z_entries(pattern.indices(), k);

        let mut scale: i128 = 1;
        for u in 0..k {
            for v in (u + 1)..k {
                let prod = (counts[u] * counts[v]) as i128;
                let g = integer::gcd(z[u][v].unsigned_abs() as i128, prod);
                scale = integer::lcm(scale, prod / g);
            }
        }
        // Shifted keys must stay within i64 range: |key| <= (n-1) * L.
        if scale.checked_mul(n as i128).map_or(true, |v| v > i64::MAX as i128 / 4) {
            return Err(Error::Unsupported(
                "theta scale overflows the integer key range".into(),
            ));
        }
        let scale64 = scale as i64;
        let mut zs = vec![vec![0i64; k]; k];
        for u in 0..k {
            for v in 0..k {
                if u == v {
                    continue;
                }
                let prod = (counts[u] * counts[v]) as i128;
                zs[u][v] = ((z[u][v] as i128 * scale) / prod) as i64;
            }
        }
        Ok(ThetaContext {
            counts,
            n,
            scale: scale64,
            zs,
            orbit_size: comp.orbit_size(),
        })
    }

    fn max_abs_influence(&self) -> i64 {
        self.zs
            .iter()
            .flatten()
            .map(|z| z.abs())
            .max()
            .unwrap_or(0)
    }
}

/// Distribution of theta over the orbit of a pattern, keyed by the
/// integer L * theta. Total count equals the orbit size N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaDistribution {
    scale: i64,
    buckets: BTreeMap<i64, Int>,
}

impl ThetaDistribution {
    /// The common denominator L applied to theta values.
    pub fn scale(&self) -> i64 {
        self.scale
    }

    /// Map from L * theta to the number of orbit decks attaining it.
    pub fn buckets(&self) -> &BTreeMap<i64, Int> {
        &self.buckets
    }

    /// Number of decks covered (the orbit size).
    pub fn total(&self) -> Int {
        self.buckets.values().sum()
    }

    /// sum over decks of |theta|, exactly.
    pub fn abs_theta_sum(&self) -> Rat {
        let mut weighted = Int::default();
        for (key, count) in &self.buckets {
            weighted += Int::from(key.abs()) * count;
        }
        Rat::new(weighted, Int::from(self.scale))
    }
}

/// Runs the fixed-target recursion for `pattern`, producing the exact
/// distribution of theta over the pattern's orbit.
///
/// States are (sub-composition, final value); the recursion extends a
/// deck by its last card, shifting theta by the influence of the final
/// digraph. A one-card deck has theta 0, which is the base case. The
/// state count prod(n_v + 1) is budgeted.
pub fn theta_distribution(pattern: &Deck, budget: &Budget) -> Result<ThetaDistribution> {
    let ctx = ThetaContext::new(pattern)?;
    let states = ctx
        .counts
        .iter()
        .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128 + 1));
    if states.map_or(true, |s| s > budget.max_theta_states) {
        return Err(Error::BudgetExceeded {
            task: "theta-distribution recursion".into(),
            required: format!(
                "{:e} states",
                ctx.counts.iter().map(|&c| c as f64 + 1.0).product::<f64>()
            ),
            budget: budget.max_theta_states.to_string(),
        });
    }
    let buckets = run_theta_dp(&ctx);
    Ok(ThetaDistribution {
        scale: ctx.scale,
        buckets,
    })
}

/// Exact kappabar1 of a dealing pattern (fixed target), via the theta
/// recursion: kappabar1 = (n / 4N) sum over the orbit of |theta|.
pub fn kappabar1(pattern: &Deck, budget: &Budget) -> Result<KappaResult> {
    let dist = theta_distribution(pattern, budget)?;
    let n = pattern.len();
    let orbit_size = pattern.composition().orbit_size();
    let value = Rat::new(Int::from(n as u64), Int::from(4) * &orbit_size) * dist.abs_theta_sum();
    Ok(KappaResult {
        value,
        context: pattern.to_string(),
        orbit_size,
        scale: Some(dist.scale()),
    })
}

/// Exact kappabar1 by direct orbit enumeration; the oracle for the
/// recursion on small patterns.
pub fn kappabar1_enum(pattern: &Deck, budget: &Budget) -> Result<KappaResult> {
    let ctx = ThetaContext::new(pattern)?;
    let comp = pattern.composition();
    let mut weighted = Int::default();
    for source in comp.enumerate(budget)? {
        let mut scaled: i64 = 0;
        for w in source.indices().windows(2) {
            scaled += ctx.zs[w[0] as usize][w[1] as usize];
        }
        weighted += Int::from(scaled.unsigned_abs());
    }
    let value = Rat::new(
        Int::from(ctx.n as u64) * weighted,
        Int::from(4) * &ctx.orbit_size * Int::from(ctx.scale),
    );
    Ok(KappaResult {
        value,
        context: pattern.to_string(),
        orbit_size: ctx.orbit_size.clone(),
        scale: Some(ctx.scale),
    })
}

/// kappabar1 of every cut of a pattern, with the position of the
/// minimum.
#[derive(Debug, Clone)]
pub struct CutSweep {
    /// (cut position k, kappabar1 of the cut pattern) for k = 0..n-1.
    pub rows: Vec<(usize, KappaResult)>,
    /// Cut position with the smallest kappabar1 (smallest k on ties).
    pub argmin: usize,
}

pub fn cut_sweep(pattern: &Deck, budget: &Budget) -> Result<CutSweep> {
    let mut rows = Vec::with_capacity(pattern.len());
    for k in 0..pattern.len() {
        rows.push((k, kappabar1(&pattern.cut(k)?, budget)?));
    }
    let argmin = rows
        .iter()
        .min_by(|(_, a), (_, b)| a.value.cmp(&b.value))
        .map(|(k, _)| *k)
        .expect("patterns are nonempty");
    Ok(CutSweep { rows, argmin })
}

/// Aligns `other` into `reference`'s alphabet and verifies the two decks
/// have the same composition.
fn aligned_same_composition(reference: &Deck, other: &Deck) -> Result<Vec<u8>> {
    if other.len() != reference.len() {
        return Err(Error::CompositionMismatch);
    }
    let aligned = other
        .indices_in(reference.alphabet())
        .ok_or(Error::CompositionMismatch)?;
    let k = reference.alphabet().len();
    let mut ref_counts = vec![0usize; k];
    let mut other_counts = vec![0usize; k];
    for &c in reference.indices() {
        ref_counts[c as usize] += 1;
    }
    for &c in &aligned {
        other_counts[c as usize] += 1;
    }
    if ref_counts != other_counts {
        return Err(Error::CompositionMismatch);
    }
    Ok(aligned)
}

// ---------------------------------------------------------------------
// The theta DP.
//
// Deck counts are exact. They are carried as u128 when the orbit size
// provably fits (every intermediate count is bounded by N) and as
// BigInt otherwise. Distributions are dense key-offset vectors when the
// scaled-theta range is small, hash maps otherwise.

trait Count: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign_ref(&mut self, rhs: &Self);
    fn into_int(self) -> Int;
}

impl Count for u128 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn add_assign_ref(&mut self, rhs: &Self) {
        *self += *rhs;
    }
    fn into_int(self) -> Int {
        Int::from(self)
    }
}

impl Count for Int {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign_ref(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn into_int(self) -> Int {
        self
    }
}

const DENSE_SLOT_LIMIT: usize = 1 << 22;

fn run_theta_dp(ctx: &ThetaContext) -> BTreeMap<i64, Int> {
    let reach = (ctx.n as i64 - 1).max(0) * ctx.max_abs_influence();
    let slots = (2 * reach + 1) as usize;
    let fits_u128 = ctx.orbit_size <= Int::from(u128::MAX);
    match (slots <= DENSE_SLOT_LIMIT, fits_u128) {
        (true, true) => dp_dense::<u128>(ctx, reach),
        (true, false) => dp_dense::<Int>(ctx, reach),
        (false, true) => dp_sparse::<u128>(ctx),
        (false, false) => dp_sparse::<Int>(ctx),
    }
}

/// Visits every vector 0 <= m <= bounds with sum(m) = total.
fn for_each_bounded_composition(
    bounds: &[usize],
    total: usize,
    mut f: impl FnMut(&[u8]),
) {
    fn rec(bounds: &[usize], remaining: usize, i: usize, m: &mut Vec<u8>, f: &mut impl FnMut(&[u8])) {
        if i == bounds.len() {
            if remaining == 0 {
                f(m);
            }
            return;
        }
        let tail: usize = bounds[i + 1..].iter().sum();
        let lo = remaining.saturating_sub(tail);
        let hi = bounds[i].min(remaining);
        for c in lo..=hi {
            m.push(c as u8);
            rec(bounds, remaining - c, i + 1, m, f);
            m.pop();
        }
    }
    let mut m = Vec::with_capacity(bounds.len());
    rec(bounds, total, 0, &mut m, &mut f);
}

fn state_index(m: &[u8], strides: &[u64]) -> u64 {
    m.iter()
        .zip(strides)
        .map(|(&c, &s)| c as u64 * s)
        .sum()
}

fn strides_for(bounds: &[usize]) -> Vec<u64> {
    let mut strides = vec![0u64; bounds.len()];
    let mut acc = 1u64;
    for (i, &b) in bounds.iter().enumerate() {
        strides[i] = acc;
        acc *= b as u64 + 1;
    }
    strides
}

fn dp_dense<C: Count>(ctx: &ThetaContext, reach: i64) -> BTreeMap<i64, Int> {
    let k = ctx.counts.len();
    let slots = (2 * reach + 1) as usize;
    let offset = reach;
    let strides = strides_for(&ctx.counts);

    // layer s = 1: a single card of value v, theta = 0
    let mut prev: HashMap<u64, Vec<Option<Vec<C>>>> = HashMap::new();
    for v in 0..k {
        let mut m = vec![0u8; k];
        m[v] = 1;
        let mut dist = vec![C::zero(); slots];
        dist[offset as usize] = C::one();
        prev.entry(state_index(&m, &strides))
            .or_insert_with(|| vec![None; k])[v] = Some(dist);
    }

    for s in 2..=ctx.n {
        let mut cur: HashMap<u64, Vec<Option<Vec<C>>>> = HashMap::new();
        for_each_bounded_composition(&ctx.counts, s, |m| {
            let mut per_v: Vec<Option<Vec<C>>> = vec![None; k];
            for v in 0..k {
                if m[v] == 0 {
                    continue;
                }
                let mut pm = m.to_vec();
                pm[v] -= 1;
                let Some(pred) = prev.get(&state_index(&pm, &strides)) else {
                    continue;
                };
                let mut dist: Option<Vec<C>> = None;
                for (u, entry) in pred.iter().enumerate() {
                    let Some(pd) = entry else { continue };
                    let shift = ctx.zs[u][v];
                    let dist = dist.get_or_insert_with(|| vec![C::zero(); slots]);
                    for (i, c) in pd.iter().enumerate() {
                        if !c.is_zero() {
                            dist[(i as i64 + shift) as usize].add_assign_ref(c);
                        }
                    }
                }
                per_v[v] = dist;
            }
            cur.insert(state_index(m, &strides), per_v);
        });
        prev = cur;
    }

    let full: Vec<u8> = ctx.counts.iter().map(|&c| c as u8).collect();
    let final_states = prev
        .remove(&state_index(&full, &strides))
        .expect("final layer contains the full composition");
    let mut out: BTreeMap<i64, Int> = BTreeMap::new();
    for dist in final_states.into_iter().flatten() {
        for (i, c) in dist.into_iter().enumerate() {
            if !c.is_zero() {
                let key = i as i64 - offset;
                *out.entry(key).or_insert_with(Int::default) += c.into_int();
            }
        }
    }
    out
}

fn dp_sparse<C: Count>(ctx: &ThetaContext) -> BTreeMap<i64, Int> {
    let k = ctx.counts.len();
    let strides = strides_for(&ctx.counts);

    let mut prev: HashMap<u64, Vec<Option<HashMap<i64, C>>>> = HashMap::new();
    for v in 0..k {
        let mut m = vec![0u8; k];
        m[v] = 1;
        let mut dist = HashMap::new();
        dist.insert(0i64, C::one());
        prev.entry(state_index(&m, &strides))
            .or_insert_with(|| vec![None; k])[v] = Some(dist);
    }

    for s in 2..=ctx.n {
        let mut cur: HashMap<u64, Vec<Option<HashMap<i64, C>>>> = HashMap::new();
        for_each_bounded_composition(&ctx.counts, s, |m| {
            let mut per_v: Vec<Option<HashMap<i64, C>>> = vec![None; k];
            for v in 0..k {
                if m[v] == 0 {
                    continue;
                }
                let mut pm = m.to_vec();
                pm[v] -= 1;
                let Some(pred) = prev.get(&state_index(&pm, &strides)) else {
                    continue;
                };
                let mut dist: Option<HashMap<i64, C>> = None;
                for (u, entry) in pred.iter().enumerate() {
                    let Some(pd) = entry else { continue };
                    let shift = ctx.zs[u][v];
                    let dist = dist.get_or_insert_with(HashMap::new);
                    for (&key, c) in pd {
                        dist.entry(key + shift)
                            .or_insert_with(C::zero)
                            .add_assign_ref(c);
                    }
                }
                per_v[v] = dist;
            }
            cur.insert(state_index(m, &strides), per_v);
        });
        prev = cur;
    }

    let full: Vec<u8> = ctx.counts.iter().map(|&c| c as u8).collect();
    let final_states = prev
        .remove(&state_index(&full, &strides))
        .expect("final layer contains the full composition");
    let mut out: BTreeMap<i64, Int> = BTreeMap::new();
    for dist in final_states.into_iter().flatten() {
        for (key, c) in dist {
            if !c.is_zero() {
                *out.entry(key).or_insert_with(Int::default) += c.into_int();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::transition_prob;
    use num::ToPrimitive;

    fn deck(s: &str) -> Deck {
        Deck::parse(s).unwrap()
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(Int::from(n), Int::from(d))
    }

    #[test]
    fn c1_two_distinct_cards() {
        let ab = deck("AB");
        assert_eq!(c1(&ab, &ab).unwrap(), rat(1, 2));
        // P_a(AB -> AB) = 1/2 + 1/(2a) exactly, so the remainder vanishes
        let b = Budget::default();
        for a in [2u64, 5, 100] {
            let p = transition_prob(a, &ab, &ab, &b).unwrap();
            assert_eq!(p, rat(1, 2) + rat(1, 2) / Rat::from_integer(Int::from(a)));
        }
    }

    #[test]
    fn c1_vanishes_for_matching_ends_two_values() {
        let b = Budget::default();
        let source = deck("ABBA");
        for target in source.composition().enumerate(&b).unwrap() {
            assert_eq!(c1(&source, &target).unwrap(), Rat::zero(), "{target}");
        }
    }

    #[test]
    fn c1_matches_enumeration_oracle() {
        let b = Budget::default();
        for (src, tgt) in [
            ("AABB", "BABA"),
            ("AABB", "ABAB"),
            ("AABC", "CABA"),
            ("ABCAB", "BACBA"),
        ] {
            let source = deck(src);
            let target = Deck::parse_with_alphabet(tgt, source.alphabet()).unwrap();
            let n = source.len();
            let orbit = source.composition().orbit_size();
            let expected = Rat::new(Int::from(n as u64), Int::from(2) * orbit)
                * expected_asc_minus_des(&source, &target, &b).unwrap();
            assert_eq!(c1(&source, &target).unwrap(), expected, "{src} -> {tgt}");
        }
    }

    #[test]
    fn expected_asc_minus_des_trivials() {
        let b = Budget::default();
        assert_eq!(
            expected_asc_minus_des(&deck("AB"), &deck("AB"), &b).unwrap(),
            Rat::one()
        );
        assert_eq!(
            expected_asc_minus_des(&deck("AA"), &deck("AA"), &b).unwrap(),
            Rat::zero()
        );
    }

    #[test]
    fn c1_composition_mismatch() {
        assert!(matches!(
            c1(&deck("AAB"), &deck("ABB")),
            Err(Error::CompositionMismatch)
        ));
    }

    #[test]
    fn theta_basics() {
        let single = deck("A");
        assert_eq!(theta(&single, &single).unwrap(), Rat::zero());
        let ne = deck("NE");
        assert_eq!(theta(&ne, &ne).unwrap(), Rat::one());
    }

    #[test]
    fn theta_sums_to_zero_over_orbit() {
        let b = Budget::default();
        for pat in ["AABB", "AABC", "ABAB"] {
            let pattern = deck(pat);
            let mut acc = Rat::zero();
            for d in pattern.composition().enumerate(&b).unwrap() {
                acc += theta(&d, &pattern).unwrap();
            }
            assert_eq!(acc, Rat::zero(), "{pat}");
        }
    }

    #[test]
    fn theta_c1_identity() {
        let b = Budget::default();
        let pattern = deck("AABCB");
        let n = pattern.len();
        let orbit = pattern.composition().orbit_size();
        let scale = Rat::new(Int::from(n as u64), Int::from(2) * orbit);
        for source in pattern.composition().enumerate(&b).unwrap() {
            let via_theta = &scale * theta(&source, &pattern).unwrap();
            assert_eq!(c1(&source, &pattern).unwrap(), via_theta, "{source}");
        }
    }

    #[test]
    fn kappa1_distinct_small() {
        assert_eq!(kappa1_distinct(2), rat(1, 2));
        // (4 / 4*24) * (1*3 + 11*1 + 11*1 + 1*3) = 28/24
        assert_eq!(kappa1_distinct(4), rat(7, 6));
    }

    #[test]
    fn kappa1_distinct_matches_orbit_enumeration() {
        let b = Budget::default();
        for n in 2..=6usize {
            let source = deck(&"ABCDEF"[..n]);
            let via_enum = kappa1_enum(&source, &b).unwrap();
            assert_eq!(via_enum.value, kappa1_distinct(n), "n = {n}");
            assert_eq!(via_enum.orbit_size, factorial_int(n));
        }
    }

    #[test]
    fn kappa1_enum_two_value_cases() {
        let b = Budget::default();
        // matching top and bottom cards: kappa1 = 0
        assert_eq!(kappa1_enum(&deck("ABBA"), &b).unwrap().value, Rat::zero());
        assert_eq!(
            kappa1_enum(&deck("ABABABA"), &b).unwrap().value,
            Rat::zero()
        );
        // frozen from the six-deck tabulation of c1 over Orb(ABAB)
        assert_eq!(kappa1_enum(&deck("ABAB"), &b).unwrap().value, rat(1, 2));
    }

    #[test]
    fn kappa1_enum_agrees_with_direct_c1_sum() {
        let b = Budget::default();
        for src in ["ABAB", "AABC", "ABCAB"] {
            let source = deck(src);
            let mut acc = Rat::zero();
            for target in source.composition().enumerate(&b).unwrap() {
                acc += c1(&source, &target).unwrap().abs();
            }
            let direct = acc / Rat::from_integer(Int::from(2));
            assert_eq!(kappa1_enum(&source, &b).unwrap().value, direct, "{src}");
        }
    }

    #[test]
    fn kappa1_approx_values() {
        let exact52 = kappa1_distinct(52).to_f64().unwrap();
        let approx52 = kappa1_approx(52);
        assert!((approx52 - exact52).abs() / exact52 < 0.02);
        assert!((approx52 - 43.6).abs() < 0.05);
        // same order of magnitude as the exact 1/2 at n = 2
        assert!((kappa1_approx(2) - 0.3989).abs() < 0.001);
        for n in 1..80 {
            assert!(kappa1_approx(n + 1) > kappa1_approx(n));
        }
    }

    #[test]
    fn theta_distribution_totals_match_orbit() {
        let b = Budget::default();
        for pat in ["AABB", "(AB)^3", "AABCC", "(NESW)^2"] {
            let pattern = deck(pat);
            let dist = theta_distribution(&pattern, &b).unwrap();
            assert_eq!(dist.total(), pattern.composition().orbit_size(), "{pat}");
        }
    }

    #[test]
    fn kappabar1_small_frozen_values() {
        let b = Budget::default();
        // tabulated by hand over the six decks of Orb(ABAB)
        assert_eq!(kappabar1(&deck("ABAB"), &b).unwrap().value, rat(1, 3));
        assert_eq!(kappabar1(&deck("AABB"), &b).unwrap().value, rat(2, 3));
        // Z(ABBA) = 0, so theta vanishes identically
        assert_eq!(kappabar1(&deck("ABBA"), &b).unwrap().value, Rat::zero());
    }

    #[test]
    fn kappabar1_z_linearity() {
        let b = Budget::default();
        // Z(AABB) = 2 Z(ABAB) entrywise, so kappabar1 scales by 2
        let kb_aabb = kappabar1(&deck("AABB"), &b).unwrap().value;
        let kb_abab = kappabar1(&deck("ABAB"), &b).unwrap().value;
        assert_eq!(kb_aabb, kb_abab * Rat::from_integer(Int::from(2)));
    }

    #[test]
    fn kappabar1_matches_enum() {
        let b = Budget::default();
        for pat in [
            "(AB)^2",
            "AABB",
            "ABAB",
            "(ABC)^2",
            "AABBCC",
            "(NESW)^2",
            "AAABBC",
            "(12)^3(3)^2",
        ] {
            let pattern = deck(pat);
            let via_dp = kappabar1(&pattern, &b).unwrap();
            let via_enum = kappabar1_enum(&pattern, &b).unwrap();
            assert_eq!(via_dp.value, via_enum.value, "{pat}");
            assert_eq!(via_dp.scale, via_enum.scale);
        }
    }

    #[test]
    fn kappabar1_distinct_pattern_equals_fixed_source() {
        // for an all-distinct deck the two directions coincide
        let b = Budget::default();
        for n in 2..=5usize {
            let pattern = deck(&"ABCDE"[..n]);
            assert_eq!(
                kappabar1_enum(&pattern, &b).unwrap().value,
                kappa1_distinct(n),
                "n = {n}"
            );
        }
    }

    #[test]
    fn kappabar1_alphabet_order_independent() {
        let b = Budget::default();
        let pattern = deck("(NESW)^2");
        let reordered = Deck::parse_with_alphabet(
            &pattern.to_string(),
            &crate::deck::Alphabet::new(['W', 'S', 'E', 'N']).unwrap(),
        )
        .unwrap();
        assert_eq!(
            kappabar1(&pattern, &b).unwrap().value,
            kappabar1(&reordered, &b).unwrap().value
        );
    }

    #[test]
    fn kappabar1_rejects_zero_counts_and_large_states() {
        let b = Budget::default();
        let alpha = crate::deck::Alphabet::new(['A', 'B', 'C']).unwrap();
        let with_unused = Deck::parse_with_alphabet("AABB", &alpha).unwrap();
        assert!(matches!(
            kappabar1(&with_unused, &b),
            Err(Error::ZeroCount('C'))
        ));

        let distinct = deck("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz");
        assert!(matches!(
            kappabar1(&distinct, &b),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn sparse_dp_agrees_with_dense() {
        for pat in ["(1234)^2(5)^3", "AABBC", "(NESW)^2"] {
            let pattern = deck(pat);
            let ctx = ThetaContext::new(&pattern).unwrap();
            let reach = (ctx.n as i64 - 1) * ctx.max_abs_influence();
            let dense = dp_dense::<u128>(&ctx, reach);
            let sparse_big = dp_sparse::<Int>(&ctx);
            let sparse_small = dp_sparse::<u128>(&ctx);
            let dense_big = dp_dense::<Int>(&ctx, reach);
            assert_eq!(dense, sparse_big, "{pat}");
            assert_eq!(dense, sparse_small, "{pat}");
            assert_eq!(dense, dense_big, "{pat}");
        }
    }

    #[test]
    fn cut_sweep_small_pattern() {
        let b = Budget::default();
        let pattern = deck("(AB)^2");
        let sweep = cut_sweep(&pattern, &b).unwrap();
        assert_eq!(sweep.rows.len(), 4);
        assert_eq!(sweep.rows[0].1.value, kappabar1(&pattern, &b).unwrap().value);
        for (k, result) in &sweep.rows {
            let expected = kappabar1_enum(&pattern.cut(*k).unwrap(), &b).unwrap();
            assert_eq!(result.value, expected.value, "k = {k}");
        }
    }

    #[test]
    fn kappa_result_json_shape() {
        let b = Budget::default();
        let result = kappabar1(&deck("ABAB"), &b).unwrap();
        let json = result.to_json();
        assert_eq!(json["kappa"], "1/3");
        assert_eq!(json["N"], "6");
        assert_eq!(json["scale_L"], 2);
        assert_eq!(json["approx"], "0.333333333333");
    }

    #[test]
    fn transition_prob_first_order_agreement() {
        // |P_a - 1/N - c1/a| shrinks like 1/a^2
        let b = Budget::default();
        for (src, tgt) in [("AABB", "ABAB"), ("AABC", "BCAA"), ("ABABAB", "AABBAB")] {
            let source = deck(src);
            let target = Deck::parse_with_alphabet(tgt, source.alphabet()).unwrap();
            let uniform = Rat::new(Int::from(1), source.composition().orbit_size());
            let coef = c1(&source, &target).unwrap();
            let rem = |a: u64| {
                let p = transition_prob(a, &source, &target, &b).unwrap();
                (p - &uniform - &coef / Rat::from_integer(Int::from(a))).abs()
            };
            let r3 = rem(1_000);
            let r4 = rem(10_000);
            if r3.is_zero() {
                assert!(r4.is_zero());
            } else {
                assert!(
                    &r4 * Rat::from_integer(Int::from(50)) <= r3,
                    "{src}->{tgt}: r3 = {r3}, r4 = {r4}"
                );
            }
        }
    }
}
