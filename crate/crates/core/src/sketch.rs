//! Window-bounded burst-substitution sketches.
//!
//! A `(t1, t2)`-burst error replaces a length-`t1` window of a word with an
//! arbitrary length-`t2` word. A [`SketchTable`] assigns every length-`n`
//! word a value such that two distinct words are never confusable: whenever
//! bursts confined to a common length-`P` window map both onto the same
//! received word, their sketch values differ. The reference realization
//! greedily colors words in lexicographic order; the conflict graph is never
//! materialized — neighbors are enumerated on the fly from the received
//! words each word can produce.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Read, Write};

use crate::seq::Word;

/// Hard cap on `q^n` for table builds and deserialization.
const BUILD_BUDGET: u64 = 1 << 26;

#[derive(Debug)]
pub enum SketchError {
    AlphabetMismatch { expected: u16, got: u16 },
    LengthMismatch { expected: usize, got: usize },
    /// Replacement word length differs from the declared t2.
    BadReplacement { expected: usize, got: usize },
    /// Burst window [i, i+t1-1] leaves the word.
    WindowOutOfRange { i: usize, t1: usize, n: usize },
    /// Candidate window wider than the table's separation guarantee.
    BadWindow { lo: usize, hi: usize, max_span: usize },
    Budget { needed: u128, budget: u64 },
    NoCandidate,
    Ambiguous { count: usize },
    BadParams(String),
    BadTable(String),
    Io(io::Error),
}

impl fmt::Display for SketchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SketchError::AlphabetMismatch { expected, got } => {
                write!(f, "alphabet mismatch: expected q = {}, got {}", expected, got)
            }
            SketchError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {}, got {}", expected, got)
            }
            SketchError::BadReplacement { expected, got } => {
                write!(f, "replacement must have length {}, got {}", expected, got)
            }
            SketchError::WindowOutOfRange { i, t1, n } => {
                write!(f, "burst window [{}, {}] out of range for length {}", i, i + t1 - 1, n)
            }
            SketchError::BadWindow { lo, hi, max_span } => write!(
                f,
                "candidate window [{}, {}] spans more than the table supports ({})",
                lo, hi, max_span
            ),
            SketchError::Budget { needed, budget } => {
                write!(f, "build needs {} words, budget is {}", needed, budget)
            }
            SketchError::NoCandidate => write!(f, "no candidate survives the filters"),
            SketchError::Ambiguous { count } => {
                write!(f, "{} candidates survive; table does not separate this window", count)
            }
            SketchError::BadParams(why) => write!(f, "bad parameters: {}", why),
            SketchError::BadTable(why) => write!(f, "malformed table: {}", why),
            SketchError::Io(e) => write!(f, "io: {}", e),
        }
    }
}

impl std::error::Error for SketchError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SketchError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for SketchError {
    fn from(e: io::Error) -> Self {
        SketchError::Io(e)
    }
}

/// Replace the length-`t1` window of `x` starting at 1-based `i` with
/// `replacement`. The result has length `n - t1 + |replacement|`. With an
/// empty replacement this is exactly a burst deletion; with `t1 = 0` it is
/// an insertion at position `i`.
pub fn apply_burst_error(
    x: &Word,
    i: usize,
    t1: usize,
    replacement: &Word,
) -> Result<Word, SketchError> {
    if replacement.q() != x.q() {
        return Err(SketchError::AlphabetMismatch { expected: x.q(), got: replacement.q() });
    }
    if i < 1 || i + t1 > x.len() + 1 {
        return Err(SketchError::WindowOutOfRange { i, t1, n: x.len() });
    }
    let mut symbols = Vec::with_capacity(x.len() - t1 + replacement.len());
    symbols.extend_from_slice(&x.symbols()[..i - 1]);
    symbols.extend_from_slice(replacement.symbols());
    symbols.extend_from_slice(&x.symbols()[i - 1 + t1..]);
    Ok(Word::new(x.q(), symbols).expect("symbols come from words over the same alphabet"))
}

/// A sketch for `(t1, t2)`-burst errors confined to length-`p` windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchTable {
    q: u16,
    n: usize,
    p: usize,
    t1: usize,
    t2: usize,
    num_colors: u32,
    /// Color of every length-n word, indexed lexicographically.
    assignment: Vec<u32>,
}

impl SketchTable {
    pub fn q(&self) -> u16 {
        self.q
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn t1(&self) -> usize {
        self.t1
    }
    pub fn t2(&self) -> usize {
        self.t2
    }
    pub fn num_colors(&self) -> u32 {
        self.num_colors
    }

    /// Bits needed to transmit one sketch value.
    pub fn value_bits(&self) -> u32 {
        if self.num_colors <= 1 {
            0
        } else {
            32 - (self.num_colors - 1).leading_zeros()
        }
    }

    /// The sketch value of `x`.
    pub fn value(&self, x: &Word) -> Result<u32, SketchError> {
        if x.q() != self.q {
            return Err(SketchError::AlphabetMismatch { expected: self.q, got: x.q() });
        }
        if x.len() != self.n {
            return Err(SketchError::LengthMismatch { expected: self.n, got: x.len() });
        }
        Ok(self.assignment[lex_index(x)])
    }

    /// Serialize as the fixed binary layout: a little-endian header
    /// (q: u16, n: u64, p: u64, t1: u64, t2: u64, colors: u32) followed by
    /// one u32 per word in lexicographic order.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(&self.q.to_le_bytes())?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&(self.p as u64).to_le_bytes())?;
        out.write_all(&(self.t1 as u64).to_le_bytes())?;
        out.write_all(&(self.t2 as u64).to_le_bytes())?;
        out.write_all(&self.num_colors.to_le_bytes())?;
        for v in &self.assignment {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<SketchTable, SketchError> {
        let mut b2 = [0u8; 2];
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b2)?;
        let q = u16::from_le_bytes(b2);
        input.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        input.read_exact(&mut b8)?;
        let p = u64::from_le_bytes(b8) as usize;
        input.read_exact(&mut b8)?;
        let t1 = u64::from_le_bytes(b8) as usize;
        input.read_exact(&mut b8)?;
        let t2 = u64::from_le_bytes(b8) as usize;
        input.read_exact(&mut b4)?;
        let num_colors = u32::from_le_bytes(b4);
        if !(2..=256).contains(&q) {
            return Err(SketchError::BadTable(format!("q = {} outside 2..=256", q)));
        }
        if t1 > n || p < t1 {
            return Err(SketchError::BadTable(format!(
                "inconsistent header: n = {}, p = {}, t1 = {}",
                n, p, t1
            )));
        }
        if num_colors == 0 {
            return Err(SketchError::BadTable("zero colors".into()));
        }
        let total = match word_count(q, n) {
            Some(total) => total,
            None => {
                return Err(SketchError::BadTable(format!(
                    "q^n too large to materialize (q = {}, n = {})",
                    q, n
                )))
            }
        };
        let mut assignment = Vec::with_capacity(total);
        for _ in 0..total {
            input.read_exact(&mut b4)?;
            let v = u32::from_le_bytes(b4);
            if v >= num_colors {
                return Err(SketchError::BadTable(format!(
                    "value {} out of range for {} colors",
                    v, num_colors
                )));
            }
            assignment.push(v);
        }
        Ok(SketchTable { q, n, p, t1, t2, num_colors, assignment })
    }
}

/// Lexicographic index of a word among all length-`n` words over its alphabet.
pub fn lex_index(x: &Word) -> usize {
    let q = usize::from(x.q());
    x.symbols().iter().fold(0usize, |acc, &s| acc * q + usize::from(s))
}

fn word_count(q: u16, n: usize) -> Option<usize> {
    let mut total: u64 = 1;
    for _ in 0..n {
        total = total.checked_mul(u64::from(q))?;
        if total > BUILD_BUDGET {
            return None;
        }
    }
    Some(total as usize)
}

/// Build the greedy-coloring sketch for `(t1, t2)`-bursts in length-`p`
/// windows over length-`n` words.
///
/// Words are processed in lexicographic order; each receives the smallest
/// color not used by any already-colored confusable word. Confusability is
/// checked through received words: for every burst `u` can suffer, every
/// word that can produce the same received word with a burst starting
/// within `p - t1` positions is a neighbor. The separating property then
/// holds by construction.
pub fn build_greedy_sketch(
    q: u16,
    n: usize,
    p: usize,
    t1: usize,
    t2: usize,
) -> Result<SketchTable, SketchError> {
    if !(2..=256).contains(&q) {
        return Err(SketchError::BadParams(format!("q = {} outside 2..=256", q)));
    }
    if t1 > n {
        return Err(SketchError::BadParams(format!("t1 = {} exceeds n = {}", t1, n)));
    }
    if p < t1 {
        return Err(SketchError::BadParams(format!("p = {} shorter than t1 = {}", p, t1)));
    }
    let total = word_count(q, n).ok_or(SketchError::Budget {
        needed: (u128::from(q)).pow(n as u32),
        budget: BUILD_BUDGET,
    })?;

    let qs = usize::from(q);
    let m = n - t1 + t2; // received length
    let slack = p - t1; // max |i - i'| between confusable burst starts
    let positions = n - t1 + 1;
    let qt1 = qs.pow(t1 as u32);
    let qt2 = qs.pow(t2 as u32);
    // pow[k] = q^k, up to q^n (fits usize: total <= BUILD_BUDGET).
    let mut pow = vec![1usize; n + 1];
    for k in 1..=n {
        pow[k] = pow[k - 1] * qs;
    }

    let mut assignment = vec![u32::MAX; total];
    // mark[c] = generation that last saw color c (generation = u + 1, nonzero).
    let mut mark: Vec<u64> = Vec::new();
    let mut num_colors = 0u32;

    let mut u_digits = vec![0u8; n];
    let mut r_digits = vec![0u8; m];
    let mut rpref = vec![0usize; m + 1]; // value of r[..k]
    let mut rsuf = vec![0usize; m + 1]; // value of r[k..] as a standalone string

    for u_val in 0..total {
        let gen = u_val as u64 + 1;
        for i0 in 0..positions {
            // Received prefix is independent of the replacement w.
            r_digits[..i0].copy_from_slice(&u_digits[..i0]);
            r_digits[i0 + t2..].copy_from_slice(&u_digits[i0 + t1..]);
            for w_val in 0..qt2 {
                let mut w = w_val;
                for k in (0..t2).rev() {
                    r_digits[i0 + k] = (w % qs) as u8;
                    w /= qs;
                }
                for k in 0..m {
                    rpref[k + 1] = rpref[k] * qs + usize::from(r_digits[k]);
                }
                let mut mul = 1usize;
                for k in (0..m).rev() {
                    rsuf[k] = rsuf[k + 1] + usize::from(r_digits[k]) * mul;
                    mul *= qs;
                }
                let j_lo = i0.saturating_sub(slack);
                let j_hi = (i0 + slack).min(n - t1);
                for j0 in j_lo..=j_hi {
                    // v = r[..j0] ++ w' ++ r[j0+t2..]; scanning w' walks an
                    // arithmetic progression of lexicographic indices.
                    let stride = pow[n - j0 - t1];
                    let mut v_val = rpref[j0] * pow[n - j0] + rsuf[j0 + t2];
                    for _ in 0..qt1 {
                        let color = assignment[v_val];
                        if color != u32::MAX {
                            let c = color as usize;
                            if c >= mark.len() {
                                mark.resize(c + 1, 0);
                            }
                            mark[c] = gen;
                        }
                        v_val += stride;
                    }
                }
            }
        }
        let mut color = 0u32;
        while (color as usize) < mark.len() && mark[color as usize] == gen {
            color += 1;
        }
        assignment[u_val] = color;
        if color >= num_colors {
            num_colors = color + 1;
        }
        // Advance the digit odometer.
        for k in (0..n).rev() {
            if usize::from(u_digits[k]) + 1 < qs {
                u_digits[k] += 1;
                break;
            }
            u_digits[k] = 0;
        }
    }

    Ok(SketchTable { q, n, p, t1, t2, num_colors: num_colors.max(1), assignment })
}

/// All candidate originals for `received` under a `(t1, t2)`-burst whose
/// window starts inside the 1-based inclusive range `window`. Returns
/// `(start, candidate)` pairs; distinct pairs may repeat a candidate word.
pub fn enumerate_preimages(
    received: &Word,
    n: usize,
    t1: usize,
    window: (usize, usize),
) -> Result<Vec<(usize, Word)>, SketchError> {
    if t1 > n {
        return Err(SketchError::BadParams(format!("t1 = {} exceeds n = {}", t1, n)));
    }
    if received.len() + t1 < n {
        return Err(SketchError::LengthMismatch { expected: n - t1, got: received.len() });
    }
    let t2 = received.len() + t1 - n;
    let (lo, hi) = window;
    if lo < 1 || lo > hi || hi > n - t1 + 1 {
        return Err(SketchError::BadWindow { lo, hi, max_span: n - t1 + 1 });
    }
    let qs = usize::from(received.q());
    let reps = qs.pow(t1 as u32);
    let mut out = Vec::with_capacity((hi - lo + 1) * reps);
    let mut w_digits = vec![0u8; t1];
    for start in lo..=hi {
        for w_val in 0..reps {
            let mut w = w_val;
            for k in (0..t1).rev() {
                w_digits[k] = (w % qs) as u8;
                w /= qs;
            }
            let replacement =
                Word::new(received.q(), w_digits.clone()).expect("digits below q");
            let candidate = apply_burst_error_inverse(received, start, t2, &replacement)?;
            out.push((start, candidate));
        }
    }
    Ok(out)
}

/// Undo a `(t1, t2)`-burst: replace `received[start, start+t2-1]` with the
/// length-`t1` `replacement`, recovering a length-`n` candidate.
fn apply_burst_error_inverse(
    received: &Word,
    start: usize,
    t2: usize,
    replacement: &Word,
) -> Result<Word, SketchError> {
    apply_burst_error(received, start, t2, replacement)
}

/// Decode a received word given a window the burst is known to start in.
///
/// Enumerates every preimage, keeps those whose sketch value matches
/// `expected` and that pass `extra_filter`, and returns the unique survivor.
pub fn decode_bounded<F: Fn(&Word) -> bool>(
    received: &Word,
    window: (usize, usize),
    table: &SketchTable,
    expected: u32,
    extra_filter: F,
) -> Result<Word, SketchError> {
    if received.q() != table.q {
        return Err(SketchError::AlphabetMismatch { expected: table.q, got: received.q() });
    }
    let expect_len = table.n - table.t1 + table.t2;
    if received.len() != expect_len {
        return Err(SketchError::LengthMismatch { expected: expect_len, got: received.len() });
    }
    let (lo, hi) = window;
    if hi - lo > table.p - table.t1 {
        return Err(SketchError::BadWindow { lo, hi, max_span: table.p - table.t1 });
    }
    let mut survivors: BTreeMap<Vec<u8>, Word> = BTreeMap::new();
    for (_, candidate) in enumerate_preimages(received, table.n, table.t1, window)? {
        if table.value(&candidate)? == expected && extra_filter(&candidate) {
            survivors.insert(candidate.symbols().to_vec(), candidate);
        }
    }
    match survivors.len() {
        0 => Err(SketchError::NoCandidate),
        1 => Ok(survivors.into_values().next().expect("one survivor")),
        count => Err(SketchError::Ambiguous { count }),
    }
}

/// The tables one code needs, keyed by `(t1, t2)`.
#[derive(Debug, Clone)]
pub struct SketchSet {
    tables: BTreeMap<(usize, usize), SketchTable>,
}

impl SketchSet {
    pub fn new() -> Self {
        SketchSet { tables: BTreeMap::new() }
    }

    pub fn insert(&mut self, table: SketchTable) {
        self.tables.insert((table.t1, table.t2), table);
    }

    pub fn get(&self, t1: usize, t2: usize) -> Option<&SketchTable> {
        self.tables.get(&(t1, t2))
    }

    pub fn tables(&self) -> impl Iterator<Item = &SketchTable> {
        self.tables.values()
    }

    /// Tables for a burst code: one `(t', 0)` sketch per burst length
    /// `2 <= t' <= t`.
    pub fn build_for_burst(q: u16, n: usize, p: usize, t: usize) -> Result<Self, SketchError> {
        if t < 2 {
            return Err(SketchError::BadParams(format!("burst code needs t >= 2, got {}", t)));
        }
        let mut set = SketchSet::new();
        for t_prime in 2..=t {
            set.insert(build_greedy_sketch(q, n, p, t_prime, 0)?);
        }
        Ok(set)
    }

    /// Tables for a localized code: one `(t, t - t')` sketch per
    /// `2 <= t' <= t` — the decoder reverses a window replacement of known
    /// net length change rather than a pure deletion.
    pub fn build_for_localized(q: u16, n: usize, p: usize, t: usize) -> Result<Self, SketchError> {
        if t < 3 {
            return Err(SketchError::BadParams(format!(
                "localized code needs t >= 3, got {}",
                t
            )));
        }
        let mut set = SketchSet::new();
        for t_prime in 2..=t {
            set.insert(build_greedy_sketch(q, n, p, t, t - t_prime)?);
        }
        Ok(set)
    }
}

impl Default for SketchSet {
    fn default() -> Self {
        Self::new()
    }
}
