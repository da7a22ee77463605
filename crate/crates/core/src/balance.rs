//! Locally-balanced sequence predicates, exact weight-class counting and
//! lexicographic (un)ranking, and the exhaustive counting-lemma checker.
//!
//! All band comparisons are exact: ε is a rational `a/d` and every weight
//! test is carried out on integers scaled by `2d`, never on floats. Floats
//! only appear where a natural logarithm is genuinely required (the
//! counting-lemma premise), and that use is confined to premise evaluation.

use std::fmt;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::seq::Word;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BalanceError {
    /// ε outside the open interval (0, (q-1)/2), or a denominator too large
    /// for exact scaled-integer arithmetic.
    BadEps(String),
    /// A window predicate applied to a word shorter than the window.
    WordTooShort { n: usize, m: usize },
    /// Rank requested for a word outside the class, or an unrank index at
    /// least the class size.
    OutOfClass(String),
    /// Exhaustive enumeration would exceed the caller's budget.
    Budget { needed: u128, budget: u64 },
    AlphabetMismatch { expected: u16, got: u16 },
}

impl fmt::Display for BalanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BalanceError::BadEps(why) => write!(f, "bad epsilon: {}", why),
            BalanceError::WordTooShort { n, m } => {
                write!(f, "word of length {} shorter than window {}", n, m)
            }
            BalanceError::OutOfClass(why) => write!(f, "outside weight class: {}", why),
            BalanceError::Budget { needed, budget } => {
                write!(f, "enumeration needs {} words, budget is {}", needed, budget)
            }
            BalanceError::AlphabetMismatch { expected, got } => {
                write!(f, "alphabet mismatch: expected q = {}, got {}", expected, got)
            }
        }
    }
}

impl std::error::Error for BalanceError {}

/// Parameters of the strong-(ℓ, ε) local balance predicate: every substring
/// of length at least `ell` must have L1 weight between `p1(ε)·ℓ'` and
/// `p2(ε)·ℓ'` where `ℓ'` is the substring length, `p1(ε) = (q-1)/2 - ε` and
/// `p2(ε) = (q-1)/2 + ε`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceSpec {
    q: u16,
    ell: usize,
    eps: Ratio<i64>,
}

impl BalanceSpec {
    pub fn new(q: u16, ell: usize, eps: Ratio<i64>) -> Result<BalanceSpec, BalanceError> {
        if !(2..=256).contains(&q) {
            return Err(BalanceError::BadEps(format!("q = {} outside 2..=256", q)));
        }
        if ell == 0 {
            return Err(BalanceError::BadEps("ell must be >= 1".into()));
        }
        if eps <= Ratio::zero() || eps * 2 >= Ratio::from_integer(i64::from(q) - 1) {
            return Err(BalanceError::BadEps(format!(
                "eps = {} outside (0, (q-1)/2)",
                eps
            )));
        }
        // Scaled comparisons multiply prefix weights by 2·denom; cap the
        // denominator so i128 products can never overflow.
        if *eps.denom() > (1i64 << 40) {
            return Err(BalanceError::BadEps("eps denominator too large".into()));
        }
        Ok(BalanceSpec { q, ell, eps })
    }

    pub fn q(&self) -> u16 {
        self.q
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn eps(&self) -> Ratio<i64> {
        self.eps
    }

    /// Lower band slope `p1(ε) = (q-1)/2 - ε`.
    pub fn p1(&self) -> Ratio<i64> {
        Ratio::new(i64::from(self.q) - 1, 2) - self.eps
    }

    /// Upper band slope `p2(ε) = (q-1)/2 + ε`.
    pub fn p2(&self) -> Ratio<i64> {
        Ratio::new(i64::from(self.q) - 1, 2) + self.eps
    }
}

/// Does every substring of `x` of length `>= spec.ell` have weight within
/// the band? Vacuously true when `|x| < spec.ell`.
///
/// Runs in O(|x|): writing `S_i` for prefix weights and `ε = a/d`, the lower
/// bound for all pairs `j - i >= ℓ` is equivalent to
/// `F(j) >= max_{i <= j-ℓ} F(i)` with `F(i) = 2d·S_i - ((q-1)d - 2a)·i`,
/// and dually for the upper bound.
pub fn is_strong_locally_balanced(x: &Word, spec: &BalanceSpec) -> Result<bool, BalanceError> {
    if x.q() != spec.q {
        return Err(BalanceError::AlphabetMismatch { expected: spec.q, got: x.q() });
    }
    let n = x.len();
    if n < spec.ell {
        return Ok(true);
    }
    let a = *spec.eps.numer() as i128;
    let d = *spec.eps.denom() as i128;
    let c_lo = (i128::from(spec.q) - 1) * d - 2 * a;
    let c_hi = (i128::from(spec.q) - 1) * d + 2 * a;
    let two_d = 2 * d;

    let mut prefix: i128 = 0;
    // F and G at prefix index 0.
    let mut max_f: i128 = 0;
    let mut min_g: i128 = 0;
    // Ring buffer of the last `ell` (F, G) values so index j can admit
    // exactly the prefixes i <= j - ell into the running extrema.
    let mut pending: std::collections::VecDeque<(i128, i128)> =
        std::collections::VecDeque::with_capacity(spec.ell);
    for j in 1..=n {
        prefix += i128::from(x.at(j));
        let f_j = two_d * prefix - c_lo * j as i128;
        let g_j = two_d * prefix - c_hi * j as i128;
        pending.push_back((f_j, g_j));
        if pending.len() == spec.ell {
            if f_j < max_f || g_j > min_g {
                return Ok(false);
            }
            // Prefix j - ℓ + 1 becomes admissible at index j + 1.
            let (f_admit, g_admit) = pending.pop_front().expect("non-empty");
            max_f = max_f.max(f_admit);
            min_g = min_g.min(g_admit);
        }
    }
    Ok(true)
}

/// A fixed-length window constraint: every substring of length exactly `m`
/// must have integer weight in `lo..=hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    q: u16,
    m: usize,
    lo: u64,
    hi: u64,
}

impl WindowSpec {
    pub fn new(q: u16, m: usize, lo: u64, hi: u64) -> WindowSpec {
        WindowSpec { q, m, lo, hi }
    }

    /// The window band `[⌈p1(ε)·m⌉, ⌊p2(ε)·m⌋]`: since window weights are
    /// integers this is exactly the real band of the balance definition.
    pub fn from_eps(q: u16, m: usize, eps: Ratio<i64>) -> WindowSpec {
        let half = Ratio::new(i64::from(q) - 1, 2);
        let m_r = Ratio::from_integer(m as i64);
        let lo = ((half - eps) * m_r).ceil().to_integer().max(0) as u64;
        let hi_raw = ((half + eps) * m_r).floor().to_integer();
        let hi = (hi_raw.max(0) as u64).min(m as u64 * (u64::from(q) - 1));
        WindowSpec { q, m, lo, hi }
    }

    pub fn q(&self) -> u16 {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn contains_weight(&self, w: u64) -> bool {
        (self.lo..=self.hi).contains(&w)
    }
}

/// Does every length-`m` window of `x` have weight in the band? Errors when
/// `|x| < m` (there is nothing to certify).
pub fn is_window_bounded(x: &Word, spec: &WindowSpec) -> Result<bool, BalanceError> {
    if x.q() != spec.q {
        return Err(BalanceError::AlphabetMismatch { expected: spec.q, got: x.q() });
    }
    if x.len() < spec.m {
        return Err(BalanceError::WordTooShort { n: x.len(), m: spec.m });
    }
    let mut sum: u64 = x.symbols()[..spec.m].iter().map(|&s| u64::from(s)).sum();
    if !spec.contains_weight(sum) {
        return Ok(false);
    }
    for j in spec.m..x.len() {
        sum += u64::from(x.symbols()[j]);
        sum -= u64::from(x.symbols()[j - spec.m]);
        if !spec.contains_weight(sum) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact distribution of total weight over `Σ_q^m`: entry `w` is the number
/// of length-`m` words with L1 weight exactly `w`.
pub fn weight_distribution(q: u16, m: usize) -> Vec<BigUint> {
    let top = m * (usize::from(q) - 1);
    let mut dist = vec![BigUint::zero(); top + 1];
    dist[0] = BigUint::one();
    let mut filled = 0usize; // current maximum weight
    for _ in 0..m {
        // Convolve with the uniform symbol distribution via prefix sums.
        let new_top = filled + usize::from(q) - 1;
        let mut prefix = vec![BigUint::zero(); filled + 2];
        for w in 0..=filled {
            prefix[w + 1] = &prefix[w] + &dist[w];
        }
        let mut next = vec![BigUint::zero(); top + 1];
        for (w, slot) in next.iter_mut().enumerate().take(new_top + 1) {
            let hi = w.min(filled) + 1;
            let lo = w.saturating_sub(usize::from(q) - 1).min(filled + 1);
            *slot = &prefix[hi] - &prefix[lo];
        }
        dist = next;
        filled = new_top;
    }
    dist
}

/// Number of length-`m` words with total weight in `lo..=hi`.
pub fn count_weight_bounded(q: u16, m: usize, lo: u64, hi: u64) -> BigUint {
    let dist = weight_distribution(q, m);
    let top = dist.len() as u64 - 1;
    if lo > top || lo > hi {
        return BigUint::zero();
    }
    let hi = hi.min(top);
    dist[lo as usize..=hi as usize].iter().sum()
}

/// Number of length-`m+1` words in which at least one of the two length-`m`
/// windows has weight outside `lo..=hi` (the bad set complementary to
/// "window-bounded at both positions").
pub fn count_bad_pair_windows(q: u16, m: usize, lo: u64, hi: u64) -> BigUint {
    assert!(m >= 1);
    let total = BigUint::from(u32::from(q)).pow(m as u32 + 1);
    // Both windows share the middle m-1 symbols; condition on their weight.
    let mid = weight_distribution(q, m - 1);
    let in_band = |w: u64| -> u64 {
        // number of symbols s with lo <= w + s <= hi
        let s_lo = lo.saturating_sub(w);
        let s_hi = hi.checked_sub(w).map(|v| v.min(u64::from(q) - 1));
        match s_hi {
            Some(s_hi) if s_lo <= s_hi => s_hi - s_lo + 1,
            _ => 0,
        }
    };
    let mut good = BigUint::zero();
    for (w, cnt) in mid.iter().enumerate() {
        let choices = in_band(w as u64) * in_band(w as u64);
        good += cnt * BigUint::from(choices);
    }
    total - good
}

/// Lexicographic ranking table for the weight class
/// `{ w ∈ Σ_q^m : lo <= Sum(w) <= hi }`.
///
/// `completions[pos][acc]` counts the ways to fill positions `pos..m` so the
/// final total weight lands in the band, given weight `acc` already placed.
pub struct WeightClassTable {
    q: u16,
    m: usize,
    lo: u64,
    hi: u64,
    completions: Vec<Vec<BigUint>>,
}

impl WeightClassTable {
    pub fn new(q: u16, m: usize, lo: u64, hi: u64) -> WeightClassTable {
        let top = m * (usize::from(q) - 1);
        let mut completions: Vec<Vec<BigUint>> = Vec::with_capacity(m + 1);
        let accept = |w: usize| lo <= w as u64 && w as u64 <= hi;
        let mut row: Vec<BigUint> =
            (0..=top).map(|w| if accept(w) { BigUint::one() } else { BigUint::zero() }).collect();
        completions.push(row.clone());
        for pos in (0..m).rev() {
            // At position `pos`, at most pos·(q-1) weight has accumulated.
            let width = pos * (usize::from(q) - 1);
            let mut next = vec![BigUint::zero(); width + 1];
            for (acc, slot) in next.iter_mut().enumerate() {
                let mut total = BigUint::zero();
                for s in 0..usize::from(q) {
                    if acc + s < row.len() {
                        total += &row[acc + s];
                    }
                }
                *slot = total;
            }
            completions.push(next.clone());
            row = next;
        }
        completions.reverse();
        WeightClassTable { q, m, lo, hi, completions }
    }

    pub fn from_window(spec: &WindowSpec) -> WeightClassTable {
        WeightClassTable::new(spec.q(), spec.m(), spec.lo(), spec.hi())
    }

    /// Size of the class.
    pub fn count(&self) -> &BigUint {
        &self.completions[0][0]
    }

    /// 0-based lexicographic rank of `w` within the class.
    pub fn rank(&self, w: &Word) -> Result<BigUint, BalanceError> {
        if w.q() != self.q {
            return Err(BalanceError::AlphabetMismatch { expected: self.q, got: w.q() });
        }
        if w.len() != self.m {
            return Err(BalanceError::OutOfClass(format!(
                "length {} != class length {}",
                w.len(),
                self.m
            )));
        }
        let total: u64 = w.symbols().iter().map(|&s| u64::from(s)).sum();
        if total < self.lo || total > self.hi {
            return Err(BalanceError::OutOfClass(format!(
                "weight {} outside {}..={}",
                total, self.lo, self.hi
            )));
        }
        let mut rank = BigUint::zero();
        let mut acc = 0usize;
        for (pos, &sym) in w.symbols().iter().enumerate() {
            for s in 0..usize::from(sym) {
                if acc + s < self.completions[pos + 1].len() {
                    rank += &self.completions[pos + 1][acc + s];
                }
            }
            acc += usize::from(sym);
        }
        Ok(rank)
    }

    /// Inverse of [`WeightClassTable::rank`].
    pub fn unrank(&self, rank: &BigUint) -> Result<Word, BalanceError> {
        if rank >= self.count() {
            return Err(BalanceError::OutOfClass(format!(
                "rank {} >= class size {}",
                rank,
                self.count()
            )));
        }
        let mut remaining = rank.clone();
        let mut acc = 0usize;
        let mut symbols = Vec::with_capacity(self.m);
        for pos in 0..self.m {
            let row = &self.completions[pos + 1];
            let mut chosen = None;
            for s in 0..usize::from(self.q) {
                let ways =
                    if acc + s < row.len() { row[acc + s].clone() } else { BigUint::zero() };
                if remaining < ways {
                    chosen = Some(s);
                    break;
                }
                remaining -= ways;
            }
            let s = chosen.expect("rank < count guarantees a symbol fits");
            symbols.push(s as u8);
            acc += s;
        }
        Ok(Word::new(self.q, symbols).expect("symbols built below q"))
    }
}

/// Ranking over the complement of a weight band: words of length `m` whose
/// total weight is strictly below `lo` or strictly above `hi`, ordered with
/// the light words first. This realizes the injection of forbidden windows
/// into payload indices used by the balanced encoder.
pub struct ForbiddenClassTable {
    light: WeightClassTable,
    heavy: WeightClassTable,
}

impl ForbiddenClassTable {
    pub fn new(q: u16, m: usize, lo: u64, hi: u64) -> ForbiddenClassTable {
        let top = m as u64 * (u64::from(q) - 1);
        // An empty sub-range is encoded as an inverted band (count 0).
        let light = WeightClassTable::new(q, m, 0, lo.wrapping_sub(1).min(top));
        let light = if lo == 0 { WeightClassTable::new(q, m, 1, 0) } else { light };
        let heavy = if hi >= top {
            WeightClassTable::new(q, m, 1, 0)
        } else {
            WeightClassTable::new(q, m, hi + 1, top)
        };
        ForbiddenClassTable { light, heavy }
    }

    pub fn count(&self) -> BigUint {
        self.light.count() + self.heavy.count()
    }

    pub fn rank(&self, w: &Word) -> Result<BigUint, BalanceError> {
        match self.light.rank(w) {
            Ok(r) => Ok(r),
            Err(BalanceError::OutOfClass(_)) => {
                Ok(self.light.count() + self.heavy.rank(w)?)
            }
            Err(e) => Err(e),
        }
    }

    pub fn unrank(&self, rank: &BigUint) -> Result<Word, BalanceError> {
        if rank < self.light.count() {
            self.light.unrank(rank)
        } else {
            self.heavy.unrank(&(rank - self.light.count()))
        }
    }
}

/// Convenience wrappers over [`WeightClassTable`] for one-off calls.
pub fn rank_in_weight_class(
    q: u16,
    lo: u64,
    hi: u64,
    w: &Word,
) -> Result<BigUint, BalanceError> {
    WeightClassTable::new(q, w.len(), lo, hi).rank(w)
}

pub fn unrank_in_weight_class(
    q: u16,
    m: usize,
    lo: u64,
    hi: u64,
    rank: &BigUint,
) -> Result<Word, BalanceError> {
    WeightClassTable::new(q, m, lo, hi).unrank(rank)
}

/// Outcome of the exhaustive counting-lemma check at one parameter point.
#[derive(Debug, Clone)]
pub struct CountingLemmaReport {
    pub q: u16,
    pub n: usize,
    pub ell: usize,
    pub eps: Ratio<i64>,
    pub s: u64,
    /// Number of strong-(ℓ, ε) locally balanced words in `Σ_q^n`.
    pub strong_count: BigUint,
    /// Number of `x ∈ Σ_q^n` with ψ(x) strong-(ℓ, ε) locally balanced.
    pub psi_strong_count: BigUint,
    /// Does `ell` meet the plain premise `ℓ >= ((q-1)²/ε²)·ln(2n√s)`?
    pub premise_plain: bool,
    /// Does `ell` meet the ψ premise `ℓ >= ((q-1)²/ε²)·ln(2(n+1)√q)`?
    pub premise_psi: bool,
    /// `strong_count >= q^n·(1 - 1/(2s))`, compared exactly.
    pub bound_plain_met: bool,
    /// `psi_strong_count >= q^n/2`, compared exactly.
    pub bound_psi_met: bool,
}

/// Exhaustively count balanced words and check both counting-lemma bounds.
/// The two premises involve a natural logarithm and are evaluated in `f64`;
/// the counts and bounds themselves are exact integers.
pub fn check_counting_lemma(
    q: u16,
    n: usize,
    ell: usize,
    eps: Ratio<i64>,
    s: u64,
    budget: u64,
) -> Result<CountingLemmaReport, BalanceError> {
    let needed = (u128::from(q)).pow(n as u32);
    if needed > u128::from(budget) {
        return Err(BalanceError::Budget { needed, budget });
    }
    let spec = BalanceSpec::new(q, ell, eps)?;
    let mut strong_count = BigUint::zero();
    let mut psi_strong_count = BigUint::zero();
    let mut symbols = vec![0u8; n];
    loop {
        let x = Word::new(q, symbols.clone()).expect("in range");
        if is_strong_locally_balanced(&x, &spec)? {
            strong_count += 1u32;
        }
        if is_strong_locally_balanced(&crate::seq::psi(&x), &spec)? {
            psi_strong_count += 1u32;
        }
        // Odometer step in lexicographic order.
        let mut pos = n;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            if u16::from(symbols[pos]) + 1 < q {
                symbols[pos] += 1;
                break;
            }
            symbols[pos] = 0;
        }
        if symbols.iter().all(|&v| v == 0) {
            break;
        }
    }

    let coeff = ((f64::from(q) - 1.0) * (f64::from(q) - 1.0))
        / (eps.to_f64().expect("small rational") * eps.to_f64().expect("small rational"));
    let premise_plain = ell as f64 >= coeff * (2.0 * n as f64 * (s as f64).sqrt()).ln();
    let premise_psi =
        ell as f64 >= coeff * (2.0 * (n as f64 + 1.0) * f64::from(q).sqrt()).ln();

    let q_n = BigUint::from(u32::from(q)).pow(n as u32);
    // strong_count >= q^n (1 - 1/(2s))  <=>  2s·strong_count >= q^n (2s - 1)
    let bound_plain_met =
        &strong_count * BigUint::from(2 * s) >= &q_n * BigUint::from(2 * s - 1);
    let bound_psi_met = &psi_strong_count * BigUint::from(2u32) >= q_n;

    Ok(CountingLemmaReport {
        q,
        n,
        ell,
        eps,
        s,
        strong_count,
        psi_strong_count,
        premise_plain,
        premise_psi,
        bound_plain_met,
        bound_psi_met,
    })
}
