//! Words, the differential map ψ, VT-style weights, and the two deletion
//! channels (bursts and localized deletions) together with their error balls.

use std::collections::BTreeSet;
use std::fmt;

/// A word over the alphabet `{0, .., q-1}`.
///
/// Symbols are stored as `u8`; `q` may be at most 256. The empty word is a
/// valid `Word`. Equality and ordering are lexicographic on the symbol
/// sequence (two words only compare meaningfully under the same `q`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    q: u16,
    symbols: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeqError {
    /// `q` outside `2..=256`.
    QOutOfRange(u16),
    /// A symbol value at (1-based) position does not lie in `{0, .., q-1}`.
    SymbolOutOfRange { pos: usize, symbol: u16, q: u16 },
    /// ψ⁻¹ applied to a word whose symbol sum is not 0 mod q.
    SumNotZeroModQ { sum: u64, q: u16 },
    /// ψ⁻¹ applied to the empty word (preimages have length ≥ 0, images ≥ 1).
    EmptyPsiImage,
    /// A deletion window `[i, i+len-1]` does not fit the word.
    WindowOutOfRange { i: usize, len: usize, n: usize },
    /// Mismatched alphabets in a two-word operation.
    AlphabetMismatch { left: u16, right: u16 },
    /// A localized-deletion pattern violates one of its structural rules.
    BadPattern(String),
    /// Text in the wire format could not be parsed.
    Parse(String),
}

impl fmt::Display for SeqError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqError::QOutOfRange(q) => write!(f, "alphabet size {} outside 2..=256", q),
            SeqError::SymbolOutOfRange { pos, symbol, q } => {
                write!(f, "symbol {} at position {} outside 0..{}", symbol, pos, q)
            }
            SeqError::SumNotZeroModQ { sum, q } => {
                write!(f, "symbol sum {} is not divisible by q = {}", sum, q)
            }
            SeqError::EmptyPsiImage => write!(f, "psi image must have length at least 1"),
            SeqError::WindowOutOfRange { i, len, n } => {
                write!(f, "window [{}, {}+{}-1] does not fit length {}", i, i, len, n)
            }
            SeqError::AlphabetMismatch { left, right } => {
                write!(f, "alphabet mismatch: q = {} vs q = {}", left, right)
            }
            SeqError::BadPattern(why) => write!(f, "invalid localized pattern: {}", why),
            SeqError::Parse(why) => write!(f, "parse error: {}", why),
        }
    }
}

impl std::error::Error for SeqError {}

impl Word {
    pub fn new(q: u16, symbols: Vec<u8>) -> Result<Word, SeqError> {
        if !(2..=256).contains(&q) {
            return Err(SeqError::QOutOfRange(q));
        }
        for (idx, &s) in symbols.iter().enumerate() {
            if u16::from(s) >= q {
                return Err(SeqError::SymbolOutOfRange { pos: idx + 1, symbol: u16::from(s), q });
            }
        }
        Ok(Word { q, symbols })
    }

    /// The all-zero word of length `n`.
    pub fn zero(q: u16, n: usize) -> Word {
        Word::new(q, vec![0; n]).expect("zero word is always valid")
    }

    pub fn q(&self) -> u16 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// Symbol at 1-based position `i`.
    pub fn at(&self, i: usize) -> u8 {
        self.symbols[i - 1]
    }

    /// Parse one word in the text wire format: bare digits when `q <= 10`
    /// (e.g. `0200`), comma-separated decimal symbols otherwise
    /// (e.g. `0,200,13`). An empty line is the empty word.
    pub fn parse(q: u16, text: &str) -> Result<Word, SeqError> {
        let text = text.trim();
        if text.is_empty() {
            return Word::new(q, Vec::new());
        }
        let symbols: Vec<u8> = if q <= 10 {
            text.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or_else(|| SeqError::Parse(format!("bad digit {:?}", c)))
                })
                .collect::<Result<_, _>>()?
        } else {
            text.split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<u8>()
                        .map_err(|e| SeqError::Parse(format!("bad symbol {:?}: {}", tok, e)))
                })
                .collect::<Result<_, _>>()?
        };
        Word::new(q, symbols)
    }
}

impl fmt::Display for Word {
    /// Render in the text wire format (see [`Word::parse`]).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q <= 10 {
            for &s in &self.symbols {
                write!(f, "{}", s)?;
            }
        } else {
            for (idx, &s) in self.symbols.iter().enumerate() {
                if idx > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", s)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(q={}, {})", self.q, self)
    }
}

/// ψ(x): the differential of `x` with virtual zeros at both ends.
///
/// For `|x| = n` the image has length `n+1` and entries
/// `ψ(x)_i = (x_{i-1} - x_i) mod q` with `x_0 = x_{n+1} = 0`. The symbol sum
/// of the image is always 0 mod q, and ψ is a bijection from `Σ_q^n` onto the
/// length-`n+1` words with that sum property.
pub fn psi(x: &Word) -> Word {
    let q = i32::from(x.q);
    let n = x.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 1..=n + 1 {
        let prev = if i >= 2 { i32::from(x.symbols[i - 2]) } else { 0 };
        let cur = if i <= n { i32::from(x.symbols[i - 1]) } else { 0 };
        out.push((prev - cur).rem_euclid(q) as u8);
    }
    Word { q: x.q, symbols: out }
}

/// ψ⁻¹(y): recovers `x` with `x_i = Σ_{k=i+1}^{n+1} y_k mod q`.
///
/// Requires `|y| >= 1` and `Sum(y) ≡ 0 (mod q)`.
pub fn psi_inverse(y: &Word) -> Result<Word, SeqError> {
    if y.is_empty() {
        return Err(SeqError::EmptyPsiImage);
    }
    let q = u64::from(y.q);
    let total = l1sum(y);
    if !total.is_multiple_of(q) {
        return Err(SeqError::SumNotZeroModQ { sum: total, q: y.q });
    }
    let mut out = vec![0u8; y.len() - 1];
    let mut suffix = 0u64;
    // x_i is the suffix sum of y strictly after position i, reduced mod q.
    for i in (1..y.len()).rev() {
        suffix = (suffix + u64::from(y.symbols[i])) % q;
        out[i - 1] = suffix as u8;
    }
    Ok(Word { q: y.q, symbols: out })
}

/// The differential without the trailing virtual zero: `y_i = (x_i - x_{i+1})
/// mod q` for `i < n` and `y_n = x_n`. Same length as `x`.
pub fn dvt(x: &Word) -> Word {
    let q = i32::from(x.q);
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let cur = i32::from(x.symbols[i - 1]);
        let next = if i < n { i32::from(x.symbols[i]) } else { 0 };
        out.push((cur - next).rem_euclid(q) as u8);
    }
    Word { q: x.q, symbols: out }
}

/// VT weight `Σ i·y_i` with 1-based positions.
pub fn vt(y: &Word) -> u64 {
    y.symbols
        .iter()
        .enumerate()
        .map(|(idx, &s)| (idx as u64 + 1) * u64::from(s))
        .sum()
}

/// L1 weight `Σ y_i`.
pub fn l1sum(y: &Word) -> u64 {
    y.symbols.iter().map(|&s| u64::from(s)).sum()
}

/// Delete the substring `x_{[i, i+len-1]}` (1-based). `len = 0` is allowed
/// and returns `x` unchanged.
pub fn apply_burst_deletion(x: &Word, i: usize, len: usize) -> Result<Word, SeqError> {
    if i < 1 || i + len > x.len() + 1 {
        return Err(SeqError::WindowOutOfRange { i, len, n: x.len() });
    }
    let mut symbols = Vec::with_capacity(x.len() - len);
    symbols.extend_from_slice(&x.symbols[..i - 1]);
    symbols.extend_from_slice(&x.symbols[i - 1 + len..]);
    Ok(Word { q: x.q, symbols })
}

/// The burst ball `D_{<=t}(x)`: every word obtained by deleting one
/// substring of length `1..=t` (deduplicated; `x` itself is not included).
pub fn burst_ball(x: &Word, t: usize) -> BTreeSet<Word> {
    let mut ball = BTreeSet::new();
    for len in 1..=t.min(x.len()) {
        for i in 1..=x.len() - len + 1 {
            ball.insert(apply_burst_deletion(x, i, len).expect("window fits"));
        }
    }
    ball
}

/// A `t`-localized deletion pattern: `k` runs `(i_s, t_s)` of deletions,
/// 1-based and increasing, pairwise non-adjacent (`i_j - i_{j-1} > t_{j-1}`),
/// all confined to a window of length `t` (`i_k - i_1 <= t - t_k`), deleting
/// `t' = Σ t_s` symbols in total with `2 <= t' <= t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalizedPattern {
    runs: Vec<(usize, usize)>,
}

impl LocalizedPattern {
    pub fn new(runs: Vec<(usize, usize)>, t: usize) -> Result<LocalizedPattern, SeqError> {
        if runs.is_empty() {
            return Err(SeqError::BadPattern("no runs".into()));
        }
        for &(i, len) in &runs {
            if i < 1 {
                return Err(SeqError::BadPattern("run start must be >= 1".into()));
            }
            if len < 1 {
                return Err(SeqError::BadPattern("run length must be >= 1".into()));
            }
        }
        for w in runs.windows(2) {
            let (i_prev, t_prev) = w[0];
            let (i_next, _) = w[1];
            // Adjacent or overlapping runs would merge into one run.
            if i_next <= i_prev + t_prev {
                return Err(SeqError::BadPattern(format!(
                    "runs at {} and {} are not separated",
                    i_prev, i_next
                )));
            }
        }
        let total: usize = runs.iter().map(|&(_, len)| len).sum();
        if total < 2 || total > t {
            return Err(SeqError::BadPattern(format!(
                "total deletions {} outside 2..={}",
                total, t
            )));
        }
        let (i_first, _) = runs[0];
        let (i_last, t_last) = *runs.last().expect("non-empty");
        if i_last - i_first > t - t_last {
            return Err(SeqError::BadPattern(format!(
                "window rule violated: {} - {} > {} - {}",
                i_last, i_first, t, t_last
            )));
        }
        Ok(LocalizedPattern { runs })
    }

    pub fn runs(&self) -> &[(usize, usize)] {
        &self.runs
    }

    /// Total number of deleted symbols `t'`.
    pub fn total(&self) -> usize {
        self.runs.iter().map(|&(_, len)| len).sum()
    }

    /// Start of the first run, `i_1`.
    pub fn first_index(&self) -> usize {
        self.runs[0].0
    }
}

/// Apply a localized-deletion pattern to `x`.
pub fn apply_localized(x: &Word, pattern: &LocalizedPattern) -> Result<Word, SeqError> {
    let (i_last, t_last) = *pattern.runs.last().expect("non-empty");
    if i_last + t_last > x.len() + 1 {
        return Err(SeqError::WindowOutOfRange { i: i_last, len: t_last, n: x.len() });
    }
    let mut deleted = vec![false; x.len()];
    for &(i, len) in &pattern.runs {
        for d in deleted.iter_mut().skip(i - 1).take(len) {
            *d = true;
        }
    }
    let symbols = x
        .symbols
        .iter()
        .zip(&deleted)
        .filter(|(_, &d)| !d)
        .map(|(&s, _)| s)
        .collect();
    Ok(Word { q: x.q, symbols })
}

/// Every valid `t`-localized pattern against a word of length `n`, i.e. all
/// run decompositions of position sets `S` with `2 <= |S| <= t` and
/// `max(S) - min(S) <= t - 1`.
pub fn all_localized_patterns(n: usize, t: usize) -> Vec<LocalizedPattern> {
    let mut patterns = Vec::new();
    if t < 2 || n < 2 {
        return patterns;
    }
    // Enumerate position sets anchored at their minimum `a`; the remaining
    // deleted positions are any subset of the next t-1 positions.
    for a in 1..=n - 1 {
        let width = (t - 1).min(n - a);
        for mask in 0u32..(1 << width) {
            let mut positions = vec![a];
            for b in 0..width {
                if mask & (1 << b) != 0 {
                    positions.push(a + 1 + b);
                }
            }
            if positions.len() < 2 || positions.len() > t {
                continue;
            }
            let mut runs: Vec<(usize, usize)> = Vec::new();
            for &p in &positions {
                match runs.last_mut() {
                    Some((start, len)) if *start + *len == p => *len += 1,
                    _ => runs.push((p, 1)),
                }
            }
            patterns.push(
                LocalizedPattern::new(runs, t)
                    .expect("sets with span <= t-1 always form valid patterns"),
            );
        }
    }
    patterns
}

/// The localized ball `D_t^loc(x)`: results of every valid pattern with
/// `2 <= t' <= t`, together with all single deletions (the `t' = 1` error is
/// handled by the single-deletion machinery but belongs to the channel).
pub fn localized_ball(x: &Word, t: usize) -> BTreeSet<Word> {
    let mut ball: BTreeSet<Word> = burst_ball(x, 1);
    for pattern in all_localized_patterns(x.len(), t) {
        ball.insert(apply_localized(x, &pattern).expect("pattern fits"));
    }
    ball
}
