use thiserror::Error;

/// Errors reported by the deck, exact-engine, asymptotics, and simulation
/// operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Pattern text did not match the grammar. `pos` is a byte offset
    /// into the input.
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    /// A pattern expanded to zero cards.
    #[error("pattern expands to an empty deck")]
    EmptyPattern,

    /// An alphabet was constructed with no symbols, a duplicate, or an
    /// unusable character.
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    /// A card value was used that is not in the deck's alphabet.
    #[error("value '{0}' is not in the deck's alphabet")]
    UnknownValue(char),

    /// Cut position outside 0..n.
    #[error("cut position {k} out of range for a deck of {n} cards")]
    CutOutOfRange { k: usize, n: usize },

    /// Two decks that must be reorderings of each other are not.
    #[error("decks do not have the same composition")]
    CompositionMismatch,

    /// An operation on a pair of values requires them to be distinct.
    #[error("the two card values must be distinct")]
    EqualValues,

    /// The fixed-target recursion rejects compositions with a
    /// zero-count value (its theta terms would divide by zero).
    #[error("composition has zero cards of value '{0}'")]
    ZeroCount(char),

    /// An enumeration would exceed its configured budget. The required
    /// size is reported so the caller can decide whether to raise the
    /// budget.
    #[error("{task} needs {required}, exceeding the budget of {budget}")]
    BudgetExceeded {
        task: String,
        required: String,
        budget: String,
    },

    /// A permutation constructor was given a non-bijection.
    #[error("images do not form a permutation")]
    InvalidPermutation,

    /// Goodness-of-fit input has an outcome with zero model probability
    /// but a nonzero observed count.
    #[error("observed outcome has zero probability under the reference distribution")]
    ZeroProbabilityCell,

    /// Goodness-of-fit input pooled down to fewer than two cells.
    #[error("goodness-of-fit needs at least two cells after pooling")]
    DegenerateDistribution,

    /// Catch-all for argument combinations the library does not support.
    #[error("{0}")]
    Unsupported(String),
}
