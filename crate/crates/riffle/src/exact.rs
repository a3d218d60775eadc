//! Exact arbitrary-precision computations: Eulerian numbers, a-shuffle
//! probabilities, descent polynomials by enumeration, transition
//! probabilities, and variation distances from uniform.
//!
//! Everything here is an exact rational. Descent polynomials are found
//! by brute-force enumeration of the transition set T(D, D'); counting
//! them efficiently for general multiset decks is #P-complete, so
//! enumeration is gated by [`Budget::max_transition_deck`].

use std::fmt;
use std::sync::{Arc, Mutex};

use itertools::Itertools;
use num::{One, Signed, Zero};
use once_cell::sync::Lazy;

use crate::deck::{factorial_int, Deck};
use crate::{Budget, Error, Int, Rat, Result};

/// n! as a big integer.
pub fn factorial(n: usize) -> Int {
    factorial_int(n)
}

/// Binomial coefficient C(top, k) by falling-factorial product, so that
/// `top` may be far larger than k without computing its factorial.
/// Zero whenever 0 <= top < k.
pub fn binomial(top: &Int, k: usize) -> Int {
    let mut num = Int::one();
    for j in 0..k {
        num *= top - Int::from(j);
        if num.is_zero() {
            return num;
        }
    }
    num / factorial_int(k)
}

static EULERIAN_ROWS: Lazy<Mutex<Vec<Arc<Vec<Int>>>>> =
    Lazy::new(|| Mutex::new(vec![Arc::new(vec![Int::one()])]));

/// Row n of the Eulerian triangle: counts of permutations of n elements
/// by descent number, for d = 0..n-1. Rows are memoized; concurrent
/// callers only ever observe completed rows.
pub fn eulerian_row(n: usize) -> Arc<Vec<Int>> {
    assert!(n >= 1, "Eulerian rows start at n = 1");
    let mut rows = EULERIAN_ROWS.lock().unwrap();
    while rows.len() < n {
        let prev = Arc::clone(rows.last().unwrap());
        let m = rows.len() + 1;
        let mut row = vec![Int::zero(); m];
        for (d, slot) in row.iter_mut().enumerate() {
            let mut v = Int::zero();
            if d < prev.len() {
                v += Int::from(d + 1) * &prev[d];
            }
            if d >= 1 {
                v += Int::from(m - d) * &prev[d - 1];
            }
            *slot = v;
        }
        rows.push(Arc::new(row));
    }
    Arc::clone(&rows[n - 1])
}

/// The Eulerian number: permutations of n elements with exactly d
/// descents. Zero outside 0 <= d < n.
pub fn eulerian(n: usize, d: i64) -> Int {
    if d < 0 || d as usize >= n {
        return Int::zero();
    }
    eulerian_row(n)[d as usize].clone()
}

/// Probability that an a-shuffle of n distinct cards produces a given
/// permutation with d descents: C(a+n-d-1, n) / a^n.
pub fn shuffle_prob_distinct(a: u64, n: usize, d: i64) -> Rat {
    assert!(a >= 1 && n >= 1);
    if d < 0 || d as usize >= n {
        return Rat::zero();
    }
    let top = Int::from(a) + Int::from(n as i64 - d - 1);
    Rat::new(binomial(&top, n), Int::from(a).pow(n as u32))
}

/// Exact variation distance from uniform of an n-card all-distinct deck
/// after an a-shuffle.
pub fn tv_distinct(a: u64, n: usize) -> Rat {
    let row = eulerian_row(n);
    let uniform = Rat::new(Int::one(), factorial_int(n));
    let mut acc = Rat::zero();
    for (d, count) in row.iter().enumerate() {
        let diff = shuffle_prob_distinct(a, n, d as i64) - &uniform;
        acc += Rat::from_integer(count.clone()) * diff.abs();
    }
    acc / Rat::from_integer(Int::from(2))
}

/// Upper bound on |TV - kappa/a| for an n-card deck after an a-shuffle;
/// it depends only on n and a and applies to the fixed-source and
/// fixed-target distances alike.
pub fn error_bound(a: u64, n: usize) -> Rat {
    assert!(a >= 1 && n >= 1);
    let row = eulerian_row(n);
    let uniform = Rat::new(Int::one(), factorial_int(n));
    // per-permutation first-order term: ((n-1)/2 - d) / (a (n-1)!)
    let scale = Rat::new(Int::one(), Int::from(a) * factorial_int(n - 1));
    let half_top = Rat::new(Int::from(n as i64 - 1), Int::from(2));
    let mut acc = Rat::zero();
    for (d, count) in row.iter().enumerate() {
        let first_order = (&half_top - Rat::from_integer(Int::from(d))) * &scale;
        let term = shuffle_prob_distinct(a, n, d as i64) - &uniform - first_order;
        acc += Rat::from_integer(count.clone()) * term.abs();
    }
    acc / Rat::from_integer(Int::from(2))
}

/// A permutation of n positions, stored as the image sequence of a
/// position map: applying it to a deck moves the card at position i to
/// position pi(i). Images are 0-based internally and displayed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Permutation {
        Permutation {
            images: (0..n as u32).collect(),
        }
    }

    /// From 0-based images; must be a bijection on 0..n.
    pub fn from_images(images: Vec<usize>) -> Result<Permutation> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::InvalidPermutation);
            }
            seen[i] = true;
        }
        Ok(Permutation {
            images: images.into_iter().map(|i| i as u32).collect(),
        })
    }

    pub(crate) fn from_raw(images: Vec<u32>) -> Permutation {
        Permutation { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// 0-based image of 0-based position i.
    pub fn image_of(&self, i: usize) -> usize {
        self.images[i] as usize
    }

    /// Number of positions i with pi(i) > pi(i+1).
    pub fn descents(&self) -> usize {
        count_descents(&self.images)
    }

    /// n - 1 - descents.
    pub fn ascents(&self) -> usize {
        self.len().saturating_sub(1) - self.descents()
    }

    /// Applies the position map: result(pi(i)) = deck(i).
    pub fn apply(&self, deck: &Deck) -> Deck {
        assert_eq!(self.len(), deck.len(), "permutation size must match deck");
        let mut cards = vec![0u8; deck.len()];
        for (i, &img) in self.images.iter().enumerate() {
            cards[img as usize] = deck.indices()[i];
        }
        Deck::from_indices(deck.alphabet_arc(), cards).expect("permuted deck is valid")
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_based: Vec<String> = self.images.iter().map(|&i| (i + 1).to_string()).collect();
        write!(f, "({})", one_based.join(" "))
    }
}

pub(crate) fn count_descents(images: &[u32]) -> usize {
    images.windows(2).filter(|w| w[0] > w[1]).count()
}

/// Per-value position lists for source and target, the shared shape of
/// every transition-set computation.
struct TransitionSetup {
    n: usize,
    src_pos: Vec<Vec<u32>>,
    tgt_pos: Vec<Vec<u32>>,
}

fn transition_setup(source: &Deck, target: &Deck, budget: &Budget) -> Result<TransitionSetup> {
    let n = source.len();
    if n > budget.max_transition_deck {
        return Err(Error::BudgetExceeded {
            task: "transition-set enumeration".into(),
            required: format!("deck size {n}"),
            budget: budget.max_transition_deck.to_string(),
        });
    }
    let tgt_cards = target
        .indices_in(source.alphabet())
        .ok_or(Error::CompositionMismatch)?;
    if target.len() != n {
        return Err(Error::CompositionMismatch);
    }
    let k = source.alphabet().len();
    let mut src_pos = vec![Vec::new(); k];
    let mut tgt_pos = vec![Vec::new(); k];
    for (i, &c) in source.indices().iter().enumerate() {
        src_pos[c as usize].push(i as u32);
    }
    for (i, &c) in tgt_cards.iter().enumerate() {
        tgt_pos[c as usize].push(i as u32);
    }
    if src_pos.iter().zip(&tgt_pos).any(|(s, t)| s.len() != t.len()) {
        return Err(Error::CompositionMismatch);
    }
    Ok(TransitionSetup { n, src_pos, tgt_pos })
}

/// Calls `f` with the image array of every permutation taking `source`
/// to `target`. The array is reused between calls.
pub(crate) fn for_each_transition(
    source: &Deck,
    target: &Deck,
    budget: &Budget,
    f: impl FnMut(&[u32]),
) -> Result<()> {
    let setup = transition_setup(source, target, budget)?;
    let mut scan = TransitionScan {
        src_pos: &setup.src_pos,
        tgt_pos: setup.tgt_pos.clone(),
        images: vec![0u32; setup.n],
        f,
    };
    scan.assign_value(0);
    Ok(())
}

struct TransitionScan<'a, F: FnMut(&[u32])> {
    src_pos: &'a [Vec<u32>],
    tgt_pos: Vec<Vec<u32>>,
    images: Vec<u32>,
    f: F,
}

impl<F: FnMut(&[u32])> TransitionScan<'_, F> {
    fn assign_value(&mut self, v: usize) {
        if v == self.src_pos.len() {
            (self.f)(&self.images);
            return;
        }
        self.permute_slots(v, 0);
    }

    fn permute_slots(&mut self, v: usize, depth: usize) {
        let m = self.src_pos[v].len();
        if depth == m {
            self.assign_value(v + 1);
            return;
        }
        for i in depth..m {
            self.tgt_pos[v].swap(depth, i);
            self.images[self.src_pos[v][depth] as usize] = self.tgt_pos[v][depth];
            self.permute_slots(v, depth + 1);
            self.tgt_pos[v].swap(depth, i);
        }
    }
}

/// Streams the transition set T(D, D'): every permutation that takes
/// `source` to `target`. Its size is prod(n_v!), the stabilizer size.
pub fn transitions(
    source: &Deck,
    target: &Deck,
    budget: &Budget,
) -> Result<impl Iterator<Item = Permutation>> {
    let setup = transition_setup(source, target, budget)?;
    let n = setup.n;
    let src_pos = setup.src_pos;
    let per_value = setup
        .tgt_pos
        .into_iter()
        .map(|positions| {
            let m = positions.len();
            positions.into_iter().permutations(m)
        })
        .collect::<Vec<_>>();
    Ok(per_value
        .into_iter()
        .multi_cartesian_product()
        .map(move |choice| {
            let mut images = vec![0u32; n];
            for (v, perm) in choice.iter().enumerate() {
                for (j, &t) in perm.iter().enumerate() {
                    images[src_pos[v][j] as usize] = t;
                }
            }
            Permutation::from_raw(images)
        }))
}

/// The descent polynomial of (D, D'): coefficient d counts permutations
/// in T(D, D') with d descents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentPolynomial {
    n: usize,
    coeffs: Vec<Int>,
}

impl DescentPolynomial {
    /// Coefficients b_d for d = 0..n-1.
    pub fn coefficients(&self) -> &[Int] {
        &self.coeffs
    }

    pub fn deck_size(&self) -> usize {
        self.n
    }

    /// Sum of coefficients: |T(D, D')| = prod(n_v!).
    pub fn stabilizer_size(&self) -> Int {
        self.coeffs.iter().sum()
    }

    /// The transition probability after an a-shuffle:
    /// (1/a^n) sum_d b_d C(a+n-d-1, n).
    pub fn transition_prob(&self, a: u64) -> Rat {
        assert!(a >= 1);
        let mut num = Int::zero();
        for (d, b) in self.coeffs.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            let top = Int::from(a) + Int::from(self.n as i64 - d as i64 - 1);
            num += b * binomial(&top, self.n);
        }
        Rat::new(num, Int::from(a).pow(self.n as u32))
    }

    /// Mean of (ascents - descents) over T(D, D').
    pub fn mean_asc_minus_des(&self) -> Rat {
        let n = self.n as i64;
        let mut weighted = Int::zero();
        let mut total = Int::zero();
        for (d, b) in self.coeffs.iter().enumerate() {
            weighted += b * Int::from(n - 1 - 2 * d as i64);
            total += b;
        }
        Rat::new(weighted, total)
    }
}

/// Tallies T(D, D') by descent count.
pub fn descent_polynomial(
    source: &Deck,
    target: &Deck,
    budget: &Budget,
) -> Result<DescentPolynomial> {
    let n = source.len();
    let mut coeffs = vec![Int::zero(); n];
    let mut tally = vec![0u64; n];
    for_each_transition(source, target, budget, |images| {
        tally[count_descents(images)] += 1;
    })?;
    for (slot, t) in coeffs.iter_mut().zip(&tally) {
        *slot = Int::from(*t);
    }
    Ok(DescentPolynomial { n, coeffs })
}

/// Probability that an a-shuffle of `source` produces `target`.
pub fn transition_prob(a: u64, source: &Deck, target: &Deck, budget: &Budget) -> Result<Rat> {
    Ok(descent_polynomial(source, target, budget)?.transition_prob(a))
}

/// Variation distance from uniform of the deck distribution after an
/// a-shuffle of the fixed source deck.
pub fn tv_fixed_source(a: u64, source: &Deck, budget: &Budget) -> Result<Rat> {
    tv_over_orbit(a, source, budget, true)
}

/// Variation distance from uniform of the dealt-partition distribution
/// when an a-shuffled deck is dealt by the fixed target pattern.
pub fn tv_fixed_target(a: u64, target: &Deck, budget: &Budget) -> Result<Rat> {
    tv_over_orbit(a, target, budget, false)
}

fn tv_over_orbit(a: u64, fixed: &Deck, budget: &Budget, fixed_is_source: bool) -> Result<Rat> {
    let comp = fixed.composition();
    let orbit_size = comp.orbit_size();
    let uniform = Rat::new(Int::one(), orbit_size);
    let mut acc = Rat::zero();
    for other in comp.enumerate(budget)? {
        let p = if fixed_is_source {
            transition_prob(a, fixed, &other, budget)?
        } else {
            transition_prob(a, &other, fixed, budget)?
        };
        acc += (p - &uniform).abs();
    }
    Ok(acc / Rat::from_integer(Int::from(2)))
}
