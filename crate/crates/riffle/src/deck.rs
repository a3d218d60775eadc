//! Decks, dealing patterns, and the digraph/pair statistics W and Z.
//!
//! A deck is a sequence of cards whose values come from a small ordered
//! alphabet; the same type doubles as a dealing pattern (target deck),
//! where position i names the hand that receives the i-th card of the
//! pre-shuffle deck. All sign conventions for W and Z follow the
//! alphabet order; the order itself is arbitrary and none of the derived
//! scalars depend on it.

use std::fmt;
use std::sync::Arc;

use num::One;
use serde::Serialize;

use crate::{Budget, Error, Int, Result};

/// A card value. Values are opaque symbols; parentheses, caret, and
/// whitespace are reserved by the pattern grammar.
pub type CardValue = char;

fn valid_symbol(c: char) -> bool {
    !c.is_whitespace() && !c.is_control() && c != '(' && c != ')' && c != '^'
}

/// An ordered list of distinct card values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("no symbols".into()));
        }
        if symbols.len() > 256 {
            return Err(Error::InvalidAlphabet("more than 256 symbols".into()));
        }
        for (i, &c) in symbols.iter().enumerate() {
            if !valid_symbol(c) {
                return Err(Error::InvalidAlphabet(format!("unusable symbol {c:?}")));
            }
            if symbols[..i].contains(&c) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol '{c}'")));
            }
        }
        Ok(Alphabet { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one symbol
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn index_of(&self, value: char) -> Option<usize> {
        self.symbols.iter().position(|&c| c == value)
    }
}

/// How hands are dealt from the top of the deck.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DealStyle {
    /// Hands are contiguous blocks: v1^h v2^h ...
    Ordered,
    /// Round-robin: (v1 v2 ... vp)^h.
    Cyclic,
    /// Round-robin alternating direction each round, starting forward.
    BackAndForth,
}

/// A deck: a nonempty sequence of cards over an ordered alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Deck {
    alphabet: Arc<Alphabet>,
    cards: Vec<u8>,
}

impl Deck {
    /// Parses a pattern string. Grammar: `pattern := term+`,
    /// `term := symbol | "(" symbol+ ")" "^" count` with `count >= 1`.
    /// Whitespace between terms is ignored. The alphabet is the set of
    /// distinct symbols in first-appearance order.
    pub fn parse(text: &str) -> Result<Deck> {
        let expanded = expand_pattern(text)?;
        let mut symbols: Vec<char> = Vec::new();
        for &c in &expanded {
            if !symbols.contains(&c) {
                symbols.push(c);
            }
        }
        let alphabet = Arc::new(Alphabet::new(symbols)?);
        Deck::from_values(alphabet, &expanded)
    }

    /// Parses a pattern string against an explicit alphabet (which fixes
    /// the value order and may include values absent from the deck).
    pub fn parse_with_alphabet(text: &str, alphabet: &Alphabet) -> Result<Deck> {
        let expanded = expand_pattern(text)?;
        Deck::from_values(Arc::new(alphabet.clone()), &expanded)
    }

    fn from_values(alphabet: Arc<Alphabet>, values: &[char]) -> Result<Deck> {
        let mut cards = Vec::with_capacity(values.len());
        for &c in values {
            let idx = alphabet.index_of(c).ok_or(Error::UnknownValue(c))?;
            cards.push(idx as u8);
        }
        if cards.is_empty() {
            return Err(Error::EmptyPattern);
        }
        Ok(Deck { alphabet, cards })
    }

    /// Builds a deck directly from alphabet indices.
    pub fn from_indices(alphabet: Arc<Alphabet>, cards: Vec<u8>) -> Result<Deck> {
        if cards.is_empty() {
            return Err(Error::EmptyPattern);
        }
        if let Some(&bad) = cards.iter().find(|&&i| (i as usize) >= alphabet.len()) {
            return Err(Error::InvalidAlphabet(format!("card index {bad} out of range")));
        }
        Ok(Deck { alphabet, cards })
    }

    /// Builds the standard dealing pattern for `players` hands of
    /// `hand_size` cards each. Players are symbolized N, E, S, W for up
    /// to four hands, digits and letters beyond that.
    pub fn make_pattern(style: DealStyle, players: usize, hand_size: usize) -> Result<Deck> {
        if players == 0 || hand_size == 0 {
            return Err(Error::Unsupported(
                "players and hand size must be positive".into(),
            ));
        }
        let symbols = player_symbols(players)?;
        let mut cards = Vec::with_capacity(players * hand_size);
        match style {
            DealStyle::Ordered => {
                for p in 0..players {
                    cards.extend(std::iter::repeat(p as u8).take(hand_size));
                }
            }
            DealStyle::Cyclic => {
                for _ in 0..hand_size {
                    cards.extend((0..players).map(|p| p as u8));
                }
            }
            DealStyle::BackAndForth => {
                for round in 0..hand_size {
                    if round % 2 == 0 {
                        cards.extend((0..players).map(|p| p as u8));
                    } else {
                        cards.extend((0..players).rev().map(|p| p as u8));
                    }
                }
            }
        }
        Ok(Deck {
            alphabet: Arc::new(Alphabet::new(symbols)?),
            cards,
        })
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        false // decks have at least one card
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub(crate) fn alphabet_arc(&self) -> Arc<Alphabet> {
        Arc::clone(&self.alphabet)
    }

    /// Card value at 0-based position `i`.
    pub fn value_at(&self, i: usize) -> char {
        self.alphabet.symbols[self.cards[i] as usize]
    }

    pub fn values(&self) -> impl Iterator<Item = char> + '_ {
        self.cards.iter().map(|&i| self.alphabet.symbols[i as usize])
    }

    /// Alphabet indices of the cards, in deck order.
    pub fn indices(&self) -> &[u8] {
        &self.cards
    }

    /// This deck's cards re-expressed as indices into `alphabet`, or
    /// `None` if some value is missing there.
    pub(crate) fn indices_in(&self, alphabet: &Alphabet) -> Option<Vec<u8>> {
        if *alphabet == *self.alphabet {
            return Some(self.cards.clone());
        }
        let map: Option<Vec<u8>> = self
            .alphabet
            .symbols
            .iter()
            .map(|&c| alphabet.index_of(c).map(|i| i as u8))
            .collect();
        let map = map?;
        Some(self.cards.iter().map(|&i| map[i as usize]).collect())
    }

    pub fn composition(&self) -> Composition {
        let mut counts = vec![0usize; self.alphabet.len()];
        for &c in &self.cards {
            counts[c as usize] += 1;
        }
        Composition {
            alphabet: Arc::clone(&self.alphabet),
            counts,
        }
    }

    /// The pattern that results from moving the top `k` cards to the
    /// bottom before dealing: result(i) = self((i - k) mod n).
    pub fn cut(&self, k: usize) -> Result<Deck> {
        let n = self.len();
        if k >= n {
            return Err(Error::CutOutOfRange { k, n });
        }
        let cards = (0..n).map(|i| self.cards[(i + n - k) % n]).collect();
        Ok(Deck {
            alphabet: Arc::clone(&self.alphabet),
            cards,
        })
    }

    /// Number of positions i with D(i)=u and D(i+1)=v.
    pub fn count_digraphs(&self, u: char, v: char) -> Result<usize> {
        let (ui, vi) = self.pair_indices(u, v)?;
        Ok(count_digraphs_idx(&self.cards, ui, vi))
    }

    /// Number of index pairs i < j with D(i)=u and D(j)=v.
    pub fn count_pairs(&self, u: char, v: char) -> Result<usize> {
        let (ui, vi) = self.pair_indices(u, v)?;
        Ok(count_pairs_idx(&self.cards, ui, vi))
    }

    /// W(D,u,v): u-v digraphs minus v-u digraphs.
    pub fn w_stat(&self, u: char, v: char) -> Result<i64> {
        let (ui, vi) = self.pair_indices(u, v)?;
        Ok(count_digraphs_idx(&self.cards, ui, vi) as i64
            - count_digraphs_idx(&self.cards, vi, ui) as i64)
    }

    /// Z(D,u,v): u-v pairs minus v-u pairs.
    pub fn z_stat(&self, u: char, v: char) -> Result<i64> {
        let (ui, vi) = self.pair_indices(u, v)?;
        Ok(count_pairs_idx(&self.cards, ui, vi) as i64
            - count_pairs_idx(&self.cards, vi, ui) as i64)
    }

    /// All W values, indexed by the alphabet order.
    pub fn w_matrix(&self) -> ZMatrix {
        ZMatrix {
            alphabet: self.alphabet.symbols.clone(),
            entries: w_entries(&self.cards, self.alphabet.len()),
        }
    }

    /// All Z values, indexed by the alphabet order.
    pub fn z_matrix(&self) -> ZMatrix {
        ZMatrix {
            alphabet: self.alphabet.symbols.clone(),
            entries: z_entries(&self.cards, self.alphabet.len()),
        }
    }

    /// The deck restricted to values u and v, drawn as a north-east
    /// lattice path (u steps north, v steps east). The area southeast of
    /// the path counts u-v pairs, the Young shape northwest of it counts
    /// v-u pairs, and their difference is Z(D,u,v).
    pub fn lattice_path(&self, u: char, v: char) -> Result<LatticePath> {
        if u == v {
            return Err(Error::EqualValues);
        }
        let (ui, vi) = self.pair_indices(u, v)?;
        let steps: String = self
            .cards
            .iter()
            .filter_map(|&c| {
                if c == ui {
                    Some('N')
                } else if c == vi {
                    Some('E')
                } else {
                    None
                }
            })
            .collect();
        Ok(LatticePath {
            steps,
            area_southeast: count_pairs_idx(&self.cards, ui, vi) as u64,
            area_northwest: count_pairs_idx(&self.cards, vi, ui) as u64,
        })
    }

    fn pair_indices(&self, u: char, v: char) -> Result<(u8, u8)> {
        let ui = self.alphabet.index_of(u).ok_or(Error::UnknownValue(u))? as u8;
        let vi = self.alphabet.index_of(v).ok_or(Error::UnknownValue(v))? as u8;
        Ok((ui, vi))
    }
}

impl fmt::Display for Deck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.values() {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn player_symbols(players: usize) -> Result<Vec<char>> {
    const COMPASS: [char; 4] = ['N', 'E', 'S', 'W'];
    const EXTENDED: &str = "123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    if players <= 4 {
        Ok(COMPASS[..players].to_vec())
    } else if players <= EXTENDED.len() {
        Ok(EXTENDED.chars().take(players).collect())
    } else {
        Err(Error::Unsupported(format!(
            "no symbol set for {players} players"
        )))
    }
}

fn expand_pattern(text: &str) -> Result<Vec<char>> {
    let mut out: Vec<char> = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
        } else if c == '(' {
            it.next();
            let mut group: Vec<char> = Vec::new();
            loop {
                match it.next() {
                    Some((p, ')')) => {
                        if group.is_empty() {
                            return Err(Error::Syntax {
                                pos: p,
                                msg: "empty group".into(),
                            });
                        }
                        break;
                    }
                    Some((_, ch)) if valid_symbol(ch) => group.push(ch),
                    Some((p, ch)) => {
                        return Err(Error::Syntax {
                            pos: p,
                            msg: format!("unexpected '{ch}' inside group"),
                        })
                    }
                    None => {
                        return Err(Error::Syntax {
                            pos: text.len(),
                            msg: "unterminated group".into(),
                        })
                    }
                }
            }
            match it.next() {
                Some((_, '^')) => {}
                Some((p, ch)) => {
                    return Err(Error::Syntax {
                        pos: p,
                        msg: format!("expected '^' after group, found '{ch}'"),
                    })
                }
                None => {
                    return Err(Error::Syntax {
                        pos: text.len(),
                        msg: "expected '^' after group".into(),
                    })
                }
            }
            let digits_start = match it.peek() {
                Some(&(p, ch)) if ch.is_ascii_digit() => p,
                Some(&(p, _)) => {
                    return Err(Error::Syntax {
                        pos: p,
                        msg: "expected repetition count".into(),
                    })
                }
                None => {
                    return Err(Error::Syntax {
                        pos: text.len(),
                        msg: "expected repetition count".into(),
                    })
                }
            };
            let mut digits = String::new();
            while let Some(&(_, ch)) = it.peek() {
                if ch.is_ascii_digit() {
                    digits.push(ch);
                    it.next();
                } else {
                    break;
                }
            }
            let count: usize = digits.parse().map_err(|_| Error::Syntax {
                pos: digits_start,
                msg: "repetition count too large".into(),
            })?;
            if count == 0 {
                return Err(Error::Syntax {
                    pos: digits_start,
                    msg: "repetition count must be positive".into(),
                });
            }
            let added = group.len().checked_mul(count).ok_or(Error::Syntax {
                pos: digits_start,
                msg: "pattern too long".into(),
            })?;
            out.reserve(added);
            for _ in 0..count {
                out.extend_from_slice(&group);
            }
        } else if valid_symbol(c) {
            it.next();
            out.push(c);
        } else {
            return Err(Error::Syntax {
                pos,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyPattern);
    }
    Ok(out)
}

pub(crate) fn count_digraphs_idx(cards: &[u8], u: u8, v: u8) -> usize {
    cards.windows(2).filter(|w| w[0] == u && w[1] == v).count()
}

pub(crate) fn count_pairs_idx(cards: &[u8], u: u8, v: u8) -> usize {
    let mut seen_u = 0usize;
    let mut acc = 0usize;
    for &c in cards {
        if c == v {
            acc += seen_u;
        }
        if c == u {
            seen_u += 1;
        }
    }
    acc
}

/// Digraph-count differences W(u,v) for all value pairs, as a k x k
/// antisymmetric matrix in alphabet index order.
pub(crate) fn w_entries(cards: &[u8], k: usize) -> Vec<Vec<i64>> {
    let mut digraphs = vec![vec![0i64; k]; k];
    for w in cards.windows(2) {
        digraphs[w[0] as usize][w[1] as usize] += 1;
    }
    antisymmetrize(&digraphs, k)
}

/// Pair-count differences Z(u,v) for all value pairs.
pub(crate) fn z_entries(cards: &[u8], k: usize) -> Vec<Vec<i64>> {
    let mut pairs = vec![vec![0i64; k]; k];
    let mut seen = vec![0i64; k];
    for &c in cards {
        let c = c as usize;
        for u in 0..k {
            pairs[u][c] += seen[u];
        }
        seen[c] += 1;
    }
    antisymmetrize(&pairs, k)
}

fn antisymmetrize(counts: &[Vec<i64>], k: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![0i64; k]; k];
    for u in 0..k {
        for v in 0..k {
            out[u][v] = counts[u][v] - counts[v][u];
        }
    }
    out
}

/// An antisymmetric matrix of W or Z values indexed by the alphabet
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZMatrix {
    pub alphabet: Vec<char>,
    #[serde(rename = "z")]
    pub entries: Vec<Vec<i64>>,
}

/// W matrices share the shape and serialization of Z matrices.
pub type WMatrix = ZMatrix;

impl ZMatrix {
    pub fn get(&self, u: char, v: char) -> Option<i64> {
        let ui = self.alphabet.iter().position(|&c| c == u)?;
        let vi = self.alphabet.iter().position(|&c| c == v)?;
        Some(self.entries[ui][vi])
    }
}

/// A deck restricted to two values, as a north-east lattice path with
/// the complementary areas on each side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticePath {
    pub steps: String,
    pub area_southeast: u64,
    pub area_northwest: u64,
}

impl LatticePath {
    /// Area difference; equals Z(D,u,v).
    pub fn z(&self) -> i64 {
        self.area_southeast as i64 - self.area_northwest as i64
    }
}

/// Per-value card counts n_v in alphabet order; determines the orbit of
/// a deck and its size N = n! / prod(n_v!).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    alphabet: Arc<Alphabet>,
    counts: Vec<usize>,
}

impl Composition {
    pub fn new(alphabet: Alphabet, counts: Vec<usize>) -> Result<Composition> {
        if counts.len() != alphabet.len() {
            return Err(Error::InvalidAlphabet(
                "one count per alphabet symbol required".into(),
            ));
        }
        if counts.iter().sum::<usize>() == 0 {
            return Err(Error::EmptyPattern);
        }
        Ok(Composition {
            alphabet: Arc::new(alphabet),
            counts,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Count of cards with the given value.
    pub fn count_of(&self, value: char) -> Result<usize> {
        let i = self
            .alphabet
            .index_of(value)
            .ok_or(Error::UnknownValue(value))?;
        Ok(self.counts[i])
    }

    /// (value, count) pairs in alphabet order.
    pub fn counts(&self) -> impl Iterator<Item = (char, usize)> + '_ {
        self.alphabet
            .symbols
            .iter()
            .zip(&self.counts)
            .map(|(&c, &n)| (c, n))
    }

    pub(crate) fn counts_slice(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of cards n.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Orbit size N = n! / prod(n_v!): the number of distinct
    /// reorderings.
    pub fn orbit_size(&self) -> Int {
        let mut num = factorial_int(self.total());
        for &c in &self.counts {
            num /= factorial_int(c);
        }
        num
    }

    /// Streams every distinct reordering exactly once, in lexicographic
    /// order by alphabet index. Errors (reporting N) if the orbit
    /// exceeds the budget.
    pub fn enumerate(&self, budget: &Budget) -> Result<OrbitIter> {
        let n = self.orbit_size();
        if n > Int::from(budget.max_orbit) {
            return Err(Error::BudgetExceeded {
                task: "orbit enumeration".into(),
                required: format!("N = {n} decks"),
                budget: budget.max_orbit.to_string(),
            });
        }
        let mut first: Vec<u8> = Vec::with_capacity(self.total());
        for (i, &c) in self.counts.iter().enumerate() {
            first.extend(std::iter::repeat(i as u8).take(c));
        }
        Ok(OrbitIter {
            alphabet: Arc::clone(&self.alphabet),
            state: Some(first),
        })
    }
}

pub(crate) fn factorial_int(n: usize) -> Int {
    let mut acc = Int::one();
    for i in 2..=n {
        acc *= Int::from(i);
    }
    acc
}

/// Iterator over a composition's orbit in lexicographic order.
#[derive(Debug)]
pub struct OrbitIter {
    alphabet: Arc<Alphabet>,
    state: Option<Vec<u8>>,
}

impl Iterator for OrbitIter {
    type Item = Deck;

    fn next(&mut self) -> Option<Deck> {
        let current = self.state.take()?;
        let deck = Deck {
            alphabet: Arc::clone(&self.alphabet),
            cards: current.clone(),
        };
        let mut next = current;
        if next_permutation(&mut next) {
            self.state = Some(next);
        }
        Some(deck)
    }
}

/// Advances to the next lexicographic multiset permutation in place;
/// false when the sequence was the last one.
fn next_permutation(s: &mut [u8]) -> bool {
    if s.len() < 2 {
        return false;
    }
    let mut i = s.len() - 1;
    while i > 0 && s[i - 1] >= s[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = s.len() - 1;
    while s[j] <= s[i - 1] {
        j -= 1;
    }
    s.swap(i - 1, j);
    s[i..].reverse();
    true
}
