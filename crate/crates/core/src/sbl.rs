//! Two-stage encoder into words whose differential sequence is strongly
//! locally balanced.
//!
//! The pipeline turns an arbitrary source word of length `n − 2` into a
//! codeword of length `n` (exactly two redundant symbols) such that
//! `ψ(codeword)` is strong-(ℓ, ε) locally balanced:
//!
//! 1. `u = ψ(source)` — a zero-sum word of length `n − 1`;
//! 2. stage 1 maps `u` injectively to a word of length `n` all of whose
//!    length-`m` windows have weight inside an inner band (a member of the
//!    sliding-window class `W(n, m, [lo, hi])`), which forces strong
//!    (ℓ − 1, η₂) balance for `ℓ = s·m + 1`;
//! 3. stage 2 appends the unique symbol making the total weight divisible
//!    by `q`, so the result is again a `ψ` image and the final `ψ⁻¹` lands
//!    back in ordinary word space.
//!
//! ### Stage 1: sequence replacement with corridor-coded records
//!
//! Stage 1 appends a bottom marker `0` and then repeatedly excises the
//! leftmost out-of-band window, appending in its place a fixed-width record
//! at the end of the buffer. The buffer length never changes: a record is
//! exactly as long as the window it replaces.
//!
//! A record is `body · 1` where the trailing `1` is the record flag and
//! `body` (`m − 1` symbols) is the *corridor* encoding of the integer
//! `(p − 1)·|F| + rank_F(w)`: `p` is the 1-based start of the excised
//! window `w` and `rank_F` ranks `w` inside the out-of-band class `F`. The
//! corridor code is the lexicographic unranking into words all of whose
//! prefix weights stay within `delta/2` of the centre rate `(q−1)/2`; any
//! substring of corridor material is therefore nearly balanced. Record
//! bodies, record flags and their concatenations can consequently never
//! form an out-of-band window on their own (the corridor bound is chosen
//! with room for one flag per window), so every excised window contains at
//! least one symbol of the original input — the working prefix strictly
//! shrinks and the loop terminates after at most `n` replacements.
//!
//! Decoding unwinds the records last-in-first-out: while the buffer ends
//! with the flag `1`, pop one record, decode `(p, w)` and splice `w` back
//! at position `p`; when the buffer ends with the bottom marker `0`, strip
//! it. The decoder finally re-encodes its answer and compares, so corrupted
//! buffers that happen to parse are still rejected.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::balance::{
    is_strong_locally_balanced, is_window_bounded, BalanceError, BalanceSpec,
    ForbiddenClassTable, WindowSpec,
};
use crate::seq::{l1sum, psi, psi_inverse, SeqError, Word};
use crate::triples::Rat;

/// Bottom marker: the control symbol appended before any replacement runs.
const MARKER: u8 = 0;
/// Record flag: the last symbol of every replacement record.
const FLAG: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SblError {
    /// Parameters are self-inconsistent or outside their documented ranges.
    BadParams(String),
    /// No grid point yields a feasible window length for this `(q, n, ε)`.
    Infeasible(String),
    WrongLength { expected: usize, got: usize },
    AlphabetMismatch { expected: u16, got: u16 },
    /// A buffer handed to the decoder is not a stage-1 codeword.
    Malformed(String),
    Balance(BalanceError),
    Seq(SeqError),
}

impl fmt::Display for SblError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SblError::BadParams(why) => write!(f, "bad encoder parameters: {}", why),
            SblError::Infeasible(why) => write!(f, "no feasible parameters: {}", why),
            SblError::WrongLength { expected, got } => {
                write!(f, "expected a word of length {}, got {}", expected, got)
            }
            SblError::AlphabetMismatch { expected, got } => {
                write!(f, "alphabet mismatch: expected q = {}, got {}", expected, got)
            }
            SblError::Malformed(why) => write!(f, "malformed codeword: {}", why),
            SblError::Balance(e) => write!(f, "balance error: {}", e),
            SblError::Seq(e) => write!(f, "sequence error: {}", e),
        }
    }
}

impl std::error::Error for SblError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SblError::Balance(e) => Some(e),
            SblError::Seq(e) => Some(e),
            _ => None,
        }
    }
}

impl From<BalanceError> for SblError {
    fn from(e: BalanceError) -> SblError {
        SblError::Balance(e)
    }
}

impl From<SeqError> for SblError {
    fn from(e: SeqError) -> SblError {
        SblError::Seq(e)
    }
}

/// Parameters of the two-stage encoder, produced by [`select_params`].
///
/// `eta1` is the inner window band half-width, `eta2` the balance parameter
/// the window class forces on substrings of length at least `ℓ − 1`, and
/// `eps` the target after the stage-2 extension. `ell1` is the inner window
/// length `m`, `ell = s·m + 1` the outer balance window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub q: u16,
    pub n: usize,
    #[serde(with = "crate::codes::eps_serde")]
    pub eps: Rat,
    #[serde(with = "crate::codes::eps_serde")]
    pub eta1: Rat,
    #[serde(with = "crate::codes::eps_serde")]
    pub eta2: Rat,
    pub s: u64,
    /// Inner window length `m`.
    pub ell1: usize,
    /// Outer balance window `ℓ = s·ell1 + 1`.
    pub ell: usize,
    /// Pointer width `⌈log_q n⌉`: digits needed to address a window start.
    pub ptr_w: usize,
    /// Payload width `k = ell1 − 3 − ptr_w`; feasibility demands `|F| ≤ q^k`.
    pub k: usize,
    /// Corridor half-width for record bodies, in doubled weight units: a
    /// body prefix of length `d` keeps `|2·weight − d(q−1)| ≤ delta`.
    pub delta: u64,
    /// Measured redundancy coefficient `C = ell / log_q n`.
    pub c: f64,
}

/// What stage 1 did to one input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOneReport {
    pub replacements: usize,
}

/// Smallest `w ≥ 1` with `q^w ≥ n`.
fn ptr_width(q: u16, n: usize) -> usize {
    let mut w = 1usize;
    let mut pow = u128::from(q);
    while pow < n as u128 {
        pow *= u128::from(q);
        w += 1;
    }
    w
}

/// Corridor half-width `⌊(2·η₁·m − 3(q−1) − 2)/4⌋` (doubled weight units).
///
/// The bound is what makes record material harmless: a window inside the
/// record region decomposes into at most two corridor substrings and one
/// flag, so its doubled weight deviates from `m(q−1)` by at most
/// `3·delta + |3 − q| ≤ 4·delta + 3(q−1) ≤ 2·η₁·m − 2`, which keeps it
/// inside the integer band `[⌈(…−η₁)m⌉, ⌊(…+η₁)m⌋]`.
fn corridor_delta(q: u16, m: usize, eta1: Rat) -> Option<u64> {
    let qm1 = i64::from(q) - 1;
    let a = *eta1.numer();
    let b = *eta1.denom();
    let num = 2 * a * m as i64 - (3 * qm1 + 2) * b;
    if num < 4 * b {
        return None; // delta would be < 1
    }
    Some((num / (4 * b)) as u64)
}

/// Lexicographic rank/unrank table for the corridor class: words `v` of a
/// fixed length whose every prefix of length `d` has doubled weight within
/// `delta` of the centre line `d(q−1)`.
struct CorridorTable {
    q: u16,
    len: usize,
    delta: i64,
    /// `completions[pos][state]` counts continuations from position `pos`
    /// (0-based) with current deviation `state − delta`.
    completions: Vec<Vec<BigUint>>,
}

impl CorridorTable {
    fn new(q: u16, len: usize, delta: u64) -> CorridorTable {
        let d = delta as i64;
        let width = (2 * d + 1) as usize;
        let mut completions = vec![vec![BigUint::zero(); width]; len + 1];
        completions[len] = vec![BigUint::one(); width];
        for pos in (0..len).rev() {
            for st in 0..width {
                let dev = st as i64 - d;
                let mut total = BigUint::zero();
                for a in 0..i64::from(q) {
                    let next = dev + 2 * a - (i64::from(q) - 1);
                    if next.abs() <= d {
                        total += &completions[pos + 1][(next + d) as usize];
                    }
                }
                completions[pos][st] = total;
            }
        }
        CorridorTable { q, len, delta: d, completions }
    }

    fn count(&self) -> &BigUint {
        &self.completions[0][self.delta as usize]
    }

    fn rank(&self, body: &[u8]) -> Result<BigUint, SblError> {
        debug_assert_eq!(body.len(), self.len);
        let d = self.delta;
        let mut rank = BigUint::zero();
        let mut dev = 0i64;
        for (pos, &sym) in body.iter().enumerate() {
            for a in 0..i64::from(sym) {
                let next = dev + 2 * a - (i64::from(self.q) - 1);
                if next.abs() <= d {
                    rank += &self.completions[pos + 1][(next + d) as usize];
                }
            }
            dev += 2 * i64::from(sym) - (i64::from(self.q) - 1);
            if dev.abs() > d {
                return Err(SblError::Malformed(format!(
                    "record body leaves the corridor at position {}",
                    pos + 1
                )));
            }
        }
        Ok(rank)
    }

    fn unrank(&self, value: &BigUint) -> Result<Vec<u8>, SblError> {
        if value >= self.count() {
            return Err(SblError::BadParams(format!(
                "corridor unrank index {} out of range {}",
                value,
                self.count()
            )));
        }
        let d = self.delta;
        let mut remaining = value.clone();
        let mut dev = 0i64;
        let mut body = Vec::with_capacity(self.len);
        for pos in 0..self.len {
            let mut chosen = None;
            for a in 0..i64::from(self.q) {
                let next = dev + 2 * a - (i64::from(self.q) - 1);
                if next.abs() > d {
                    continue;
                }
                let ways = &self.completions[pos + 1][(next + d) as usize];
                if &remaining < ways {
                    chosen = Some(a);
                    break;
                }
                remaining -= ways;
            }
            let a = chosen.expect("index below count always admits a symbol");
            body.push(a as u8);
            dev += 2 * a - (i64::from(self.q) - 1);
        }
        Ok(body)
    }
}

/// First window start `≥ from` (1-based) whose weight is out of band.
fn leftmost_forbidden(buf: &[u8], window: &WindowSpec, from: usize) -> Option<usize> {
    let m = window.m();
    if buf.len() < m {
        return None;
    }
    let last_start = buf.len() - m + 1;
    let start = from.clamp(1, last_start);
    let mut sum: u64 = buf[start - 1..start - 1 + m].iter().map(|&s| u64::from(s)).sum();
    for p in start..=last_start {
        if !window.contains_weight(sum) {
            return Some(p);
        }
        if p < last_start {
            sum += u64::from(buf[p - 1 + m]);
            sum -= u64::from(buf[p - 1]);
        }
    }
    None
}

/// A validated parameter set with its ranking tables built, ready to encode
/// and decode many words. The free functions below construct one per call;
/// hold an `Encoder` when processing a stream.
pub struct Encoder {
    params: EncoderParams,
    spec: BalanceSpec,
    window: WindowSpec,
    forbidden: ForbiddenClassTable,
    f_count: BigUint,
    body: CorridorTable,
    /// `(n − m + 1)·|F|`: one more than the largest legal record value.
    val_cap: BigUint,
}

impl Encoder {
    pub fn new(params: &EncoderParams) -> Result<Encoder, SblError> {
        let q = params.q;
        let n = params.n;
        let m = params.ell1;
        if !(2..=256).contains(&q) {
            return Err(SblError::BadParams(format!("q = {} outside 2..=256", q)));
        }
        if params.eps <= Rat::zero() || params.eps * 2 >= Rat::from_integer(i64::from(q) - 1) {
            return Err(SblError::BadParams("eps outside (0, (q-1)/2)".into()));
        }
        if *params.eps.denom() > (1 << 20) {
            return Err(SblError::BadParams("eps denominator above 2^20".into()));
        }
        if params.ell != params.s as usize * m + 1 {
            return Err(SblError::BadParams("ell != s*ell1 + 1".into()));
        }
        let bridge = bridged_eta2(q, params.s, params.eta1)
            .ok_or_else(|| SblError::BadParams("eta1 outside (0, (q-1)/2)".into()))?;
        if bridge != params.eta2 {
            return Err(SblError::BadParams("eta2 does not match the bridge formula".into()));
        }
        if params.eta2 >= params.eps {
            return Err(SblError::BadParams("eta2 must be below eps".into()));
        }
        // Appending one symbol may only dilute balance by what the margin
        // (eps - eta2) absorbs over a window of length ell - 1.
        let lhs = (params.eps - params.eta2) * Rat::from_integer((params.s as usize * m) as i64);
        let rhs = Rat::new(i64::from(q) - 1, 2) - params.eta2;
        if lhs < rhs {
            return Err(SblError::BadParams("extension margin violated".into()));
        }
        if ptr_width(q, n) != params.ptr_w {
            return Err(SblError::BadParams("ptr_w does not match ceil(log_q n)".into()));
        }
        if m < params.ptr_w + 4 || params.k != m - 3 - params.ptr_w {
            return Err(SblError::BadParams("k does not match ell1 - 3 - ptr_w".into()));
        }
        if n < 2 * m + 2 {
            return Err(SblError::BadParams(format!("n = {} below 2*ell1 + 2 = {}", n, 2 * m + 2)));
        }
        match corridor_delta(q, m, params.eta1) {
            Some(d) if d == params.delta => {}
            _ => return Err(SblError::BadParams("delta does not match the corridor bound".into())),
        }
        let spec = BalanceSpec::new(q, params.ell, params.eps)?;
        let window = WindowSpec::from_eps(q, m, params.eta1);
        let forbidden = ForbiddenClassTable::new(q, m, window.lo(), window.hi());
        let f_count = forbidden.count();
        let qk = BigUint::from(u32::from(q)).pow(params.k as u32);
        if f_count > qk {
            return Err(SblError::BadParams(format!(
                "out-of-band class has {} members, payload width k = {} holds only q^k",
                f_count, params.k
            )));
        }
        let body = CorridorTable::new(q, m - 1, params.delta);
        let val_cap = BigUint::from((n - m + 1) as u64) * &f_count;
        if &val_cap > body.count() {
            return Err(SblError::BadParams(format!(
                "corridor holds {} bodies, records need {}",
                body.count(),
                val_cap
            )));
        }
        Ok(Encoder { params: params.clone(), spec, window, forbidden, f_count, body, val_cap })
    }

    pub fn params(&self) -> &EncoderParams {
        &self.params
    }

    /// The inner sliding-window class every stage-1 output lands in.
    pub fn window(&self) -> &WindowSpec {
        &self.window
    }

    fn check_word(&self, w: &Word, expected: usize) -> Result<(), SblError> {
        if w.q() != self.params.q {
            return Err(SblError::AlphabetMismatch { expected: self.params.q, got: w.q() });
        }
        if w.len() != expected {
            return Err(SblError::WrongLength { expected, got: w.len() });
        }
        Ok(())
    }

    /// Stage 1: `u` of length `n − 1` to a window-bounded word of length `n`.
    pub fn encode_stage1(&self, u: &Word) -> Result<Word, SblError> {
        Ok(self.encode_stage1_with_report(u)?.0)
    }

    pub fn encode_stage1_with_report(
        &self,
        u: &Word,
    ) -> Result<(Word, StageOneReport), SblError> {
        let n = self.params.n;
        let m = self.params.ell1;
        self.check_word(u, n - 1)?;
        let mut buf = Vec::with_capacity(n);
        buf.extend_from_slice(u.symbols());
        buf.push(MARKER);
        let mut replacements = 0usize;
        let mut scan_from = 1usize;
        while let Some(p) = leftmost_forbidden(&buf, &self.window, scan_from) {
            replacements += 1;
            if replacements > n {
                // Unreachable: every replacement consumes an input symbol.
                return Err(SblError::BadParams("replacement loop exceeded its bound".into()));
            }
            let window_word =
                Word::new(self.params.q, buf[p - 1..p - 1 + m].to_vec()).expect("symbols below q");
            let f_rank = self.forbidden.rank(&window_word)?;
            let value = BigUint::from((p - 1) as u64) * &self.f_count + f_rank;
            let body = self.body.unrank(&value)?;
            buf.drain(p - 1..p - 1 + m);
            buf.extend_from_slice(&body);
            buf.push(FLAG);
            debug_assert_eq!(buf.len(), n);
            // Windows starting before p - m + 1 are untouched and stay clean.
            scan_from = p.saturating_sub(m - 1).max(1);
        }
        let out = Word::new(self.params.q, buf).expect("symbols below q");
        Ok((out, StageOneReport { replacements }))
    }

    /// Inverse of [`Encoder::encode_stage1`]. Rejects words the encoder
    /// cannot have produced (the answer is re-encoded and compared).
    pub fn decode_stage1(&self, v: &Word) -> Result<Word, SblError> {
        let n = self.params.n;
        let m = self.params.ell1;
        self.check_word(v, n)?;
        let mut buf = v.symbols().to_vec();
        let mut steps = 0usize;
        let u = loop {
            match *buf.last().expect("buffer never empties") {
                MARKER => {
                    buf.pop();
                    break Word::new(self.params.q, buf).expect("symbols below q");
                }
                FLAG => {
                    steps += 1;
                    if steps > n {
                        return Err(SblError::Malformed(
                            "record unwind did not reach the bottom marker".into(),
                        ));
                    }
                    buf.pop();
                    let body = buf.split_off(buf.len() - (m - 1));
                    let value = self.body.rank(&body)?;
                    if value >= self.val_cap {
                        return Err(SblError::Malformed("record value out of range".into()));
                    }
                    let (p_minus_1, f_rank) = value.div_rem(&self.f_count);
                    let at = p_minus_1.to_usize().expect("below n");
                    let w = self.forbidden.unrank(&f_rank)?;
                    if at > buf.len() {
                        return Err(SblError::Malformed("record pointer beyond buffer".into()));
                    }
                    let tail = buf.split_off(at);
                    buf.extend_from_slice(w.symbols());
                    buf.extend_from_slice(&tail);
                    debug_assert_eq!(buf.len(), n);
                }
                other => {
                    return Err(SblError::Malformed(format!(
                        "trailing symbol {} is neither the bottom marker nor a record flag",
                        other
                    )));
                }
            }
        };
        let (again, _) = self.encode_stage1_with_report(&u)?;
        if again.symbols() != v.symbols() {
            return Err(SblError::Malformed("re-encoding does not reproduce the word".into()));
        }
        Ok(u)
    }

    /// Full pipeline: source of length `n − 2` to a codeword of length `n`
    /// whose differential sequence is strong-(ℓ, ε) locally balanced.
    pub fn encode(&self, source: &Word) -> Result<Word, SblError> {
        self.check_word(source, self.params.n - 2)?;
        let u = psi(source);
        let y1 = self.encode_stage1(&u)?;
        let y = encode_stage2(&y1);
        Ok(psi_inverse(&y)?)
    }

    /// Inverse of [`Encoder::encode`].
    pub fn decode(&self, codeword: &Word) -> Result<Word, SblError> {
        self.check_word(codeword, self.params.n)?;
        let y = psi(codeword);
        let mut syms = y.symbols().to_vec();
        syms.pop(); // the stage-2 control symbol, implied by zero-sum
        let y1 = Word::new(self.params.q, syms).expect("symbols below q");
        let u = self.decode_stage1(&y1)?;
        Ok(psi_inverse(&u)?)
    }

    /// Does `ψ(codeword)` satisfy the promised strong-(ℓ, ε) balance?
    pub fn verify_balance(&self, codeword: &Word) -> Result<bool, SblError> {
        self.check_word(codeword, self.params.n)?;
        Ok(is_strong_locally_balanced(&psi(codeword), &self.spec)?)
    }

    /// Is `v` a member of the stage-1 window class `W(n, m, [lo, hi])`?
    pub fn verify_window_bounded(&self, v: &Word) -> Result<bool, SblError> {
        self.check_word(v, self.params.n)?;
        Ok(is_window_bounded(v, &self.window)?)
    }
}

/// `η₂(η₁, s) = η₁ − η₁²/((q−1)s) + (q−1)/(4s)`: the balance parameter the
/// window class forces on substrings of length `≥ s·m`.
fn bridged_eta2(q: u16, s: u64, eta1: Rat) -> Option<Rat> {
    if eta1 <= Rat::zero() || eta1 * 2 >= Rat::from_integer(i64::from(q) - 1) {
        return None;
    }
    let qm1 = i64::from(q) - 1;
    let s = s as i64;
    Some(eta1 - eta1 * eta1 / Rat::from_integer(qm1 * s) + Rat::new(qm1, 4 * s))
}

/// Search the `(s, η₁)` grid for the parameter set with the smallest outer
/// window `ℓ` whose feasibility can be certified exactly: the bridge and
/// extension margins hold as rationals, the pointer/payload widths fit, the
/// out-of-band class fits the payload (`|F| ≤ q^k`), and the corridor holds
/// every possible record (`(n−m+1)·|F| ≤ |corridor|`, compared exactly).
pub fn select_params(q: u16, n: usize, eps: Rat) -> Result<EncoderParams, SblError> {
    if !(2..=256).contains(&q) {
        return Err(SblError::BadParams(format!("q = {} outside 2..=256", q)));
    }
    if eps <= Rat::zero() || eps * 2 >= Rat::from_integer(i64::from(q) - 1) {
        return Err(SblError::BadParams(format!("eps = {} outside (0, (q-1)/2)", eps)));
    }
    if *eps.denom() > (1 << 20) {
        return Err(SblError::BadParams("eps denominator above 2^20".into()));
    }
    let min_n = 2 * (usize::from(q)).pow(3);
    if n < min_n {
        return Err(SblError::Infeasible(format!("n = {} below 2q^3 = {}", n, min_n)));
    }
    let qm1 = i64::from(q) - 1;
    let ptr_w = ptr_width(q, n);
    let ln_n = (n as f64).ln();
    let mut best: Option<(usize, u64, i64, usize, Rat, Rat, u64)> = None;

    for s in 1u64..=4 {
        for j in 1i64..=15 {
            let eta1 = Rat::new(qm1 * j, 32);
            let eta2 = match bridged_eta2(q, s, eta1) {
                Some(e) => e,
                None => continue,
            };
            if eta2 <= Rat::zero() || eta2 >= eps {
                continue;
            }
            // The documented feasibility form of the extension margin, at
            // the formula value of s·m; the per-m check below re-verifies
            // it at the m actually chosen.
            let eta1_f = *eta1.numer() as f64 / *eta1.denom() as f64;
            let x_formula = (s as f64 * (qm1 as f64).powi(2) * ln_n / (eta1_f * eta1_f)).ceil();
            if x_formula > i64::MAX as f64 {
                continue;
            }
            let lhs = (eps - eta2) * Rat::from_integer(x_formula as i64);
            if lhs < Rat::new(qm1, 2) - eta2 {
                continue;
            }
            let m_formula = ((qm1 as f64).powi(2) * ln_n / (eta1_f * eta1_f)).ceil() as usize;
            let m0 = m_formula.max(2 * usize::from(q) * usize::from(q) - 1);
            let m_cap = (4 * m0 + 64).min(n.saturating_sub(2) / 2);
            for m in m0..=m_cap {
                let ell = s as usize * m + 1;
                if let Some((best_ell, ..)) = best {
                    if ell >= best_ell {
                        break;
                    }
                }
                if m < ptr_w + 4 {
                    continue;
                }
                let delta = match corridor_delta(q, m, eta1) {
                    Some(d) => d,
                    None => continue,
                };
                let lhs = (eps - eta2) * Rat::from_integer((s as usize * m) as i64);
                if lhs < Rat::new(qm1, 2) - eta2 {
                    continue;
                }
                let window = WindowSpec::from_eps(q, m, eta1);
                let f_count = ForbiddenClassTable::new(q, m, window.lo(), window.hi()).count();
                let k = m - 3 - ptr_w;
                if f_count > BigUint::from(u32::from(q)).pow(k as u32) {
                    continue;
                }
                let corridor = CorridorTable::new(q, m - 1, delta);
                if &(BigUint::from((n - m + 1) as u64) * &f_count) > corridor.count() {
                    continue;
                }
                best = Some((ell, s, j, m, eta1, eta2, delta));
                break;
            }
        }
    }

    let (ell, s, _, m, eta1, eta2, delta) = best.ok_or_else(|| {
        SblError::Infeasible(format!(
            "no (s, eta1) grid point fits q = {}, n = {}, eps = {}",
            q, n, eps
        ))
    })?;
    let c = ell as f64 * (f64::from(q)).ln() / ln_n;
    Ok(EncoderParams {
        q,
        n,
        eps,
        eta1,
        eta2,
        s,
        ell1: m,
        ell,
        ptr_w,
        k: m - 3 - ptr_w,
        delta,
        c,
    })
}

/// Stage 2: append the unique symbol making the total weight divisible by
/// `q`, so the result is again a `ψ` image.
pub fn encode_stage2(y: &Word) -> Word {
    let q = u64::from(y.q());
    let a = ((q - l1sum(y) % q) % q) as u8;
    let mut syms = y.symbols().to_vec();
    syms.push(a);
    Word::new(y.q(), syms).expect("a < q")
}

pub fn encode_stage1(u: &Word, params: &EncoderParams) -> Result<Word, SblError> {
    Encoder::new(params)?.encode_stage1(u)
}

pub fn decode_stage1(v: &Word, params: &EncoderParams) -> Result<Word, SblError> {
    Encoder::new(params)?.decode_stage1(v)
}

pub fn encode(source: &Word, params: &EncoderParams) -> Result<Word, SblError> {
    Encoder::new(params)?.encode(source)
}

pub fn decode(codeword: &Word, params: &EncoderParams) -> Result<Word, SblError> {
    Encoder::new(params)?.decode(codeword)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::{count_bad_pair_windows, count_weight_bounded};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_word(rng: &mut ChaCha20Rng, q: u16, len: usize) -> Word {
        let syms: Vec<u8> = (0..len).map(|_| rng.gen_range(0..q) as u8).collect();
        Word::new(q, syms).unwrap()
    }

    /// A word whose windows all sit mid-band: alternating ⌈(q−1)/2⌉, ⌊(q−1)/2⌋.
    fn centre_word(q: u16, len: usize) -> Word {
        let hi = ((q - 1).div_ceil(2)) as u8;
        let lo = ((q - 1) / 2) as u8;
        let syms: Vec<u8> = (0..len).map(|i| if i % 2 == 0 { hi } else { lo }).collect();
        Word::new(q, syms).unwrap()
    }

    #[test]
    fn select_params_pins_the_q2_grid_point() {
        let p = select_params(2, 1000, Rat::new(9, 20)).unwrap();
        assert_eq!(p.ptr_w, 10);
        assert_eq!(p.ell, p.s as usize * p.ell1 + 1);
        assert_eq!(p.k, p.ell1 - 3 - p.ptr_w);
        assert_eq!(p.eta2, bridged_eta2(2, p.s, p.eta1).unwrap());
        assert!(p.eta2 < p.eps);
        assert!(p.n >= 2 * p.ell1 + 2);
        assert_eq!(p.delta, corridor_delta(2, p.ell1, p.eta1).unwrap());
        // The capacity certificates, re-derived from scratch.
        let window = WindowSpec::from_eps(2, p.ell1, p.eta1);
        let f_count = ForbiddenClassTable::new(2, p.ell1, window.lo(), window.hi()).count();
        assert!(f_count <= BigUint::from(2u32).pow(p.k as u32));
        let corridor = CorridorTable::new(2, p.ell1 - 1, p.delta);
        assert!(&(BigUint::from((p.n - p.ell1 + 1) as u64) * &f_count) <= corridor.count());
        // Frozen outcome of the grid search at this point.
        assert_eq!((p.s, p.ell1, p.ell, p.delta), (2, 42, 85, 7));
        assert_eq!(p.eta1, Rat::new(13, 32));
        assert_eq!(p.eta2, Rat::new(919, 2048));
    }

    #[test]
    fn select_params_covers_the_other_alphabets() {
        let p3 = select_params(3, 300, Rat::new(9, 10)).unwrap();
        assert_eq!(p3.q, 3);
        assert!(p3.eta2 < p3.eps);
        assert!(p3.n >= 2 * p3.ell1 + 2);
        let p4 = select_params(4, 200, Rat::new(7, 5)).unwrap();
        assert_eq!(p4.q, 4);
        assert!(p4.eta2 < p4.eps);
        assert!(Encoder::new(&p3).is_ok());
        assert!(Encoder::new(&p4).is_ok());
    }

    #[test]
    fn select_params_rejects_bad_inputs() {
        // Below the documented floor n >= 2q^3.
        match select_params(2, 15, Rat::new(9, 20)) {
            Err(SblError::Infeasible(_)) => {}
            other => panic!("expected Infeasible, got {:?}", other),
        }
        // At the floor the window no longer fits the word.
        match select_params(2, 16, Rat::new(9, 20)) {
            Err(SblError::Infeasible(_)) => {}
            other => panic!("expected Infeasible, got {:?}", other),
        }
        // eps at the band edge.
        match select_params(2, 1000, Rat::new(1, 2)) {
            Err(SblError::BadParams(_)) => {}
            other => panic!("expected BadParams, got {:?}", other),
        }
        // eps so small the window outgrows n.
        match select_params(2, 1000, Rat::new(1, 1000)) {
            Err(SblError::Infeasible(_)) => {}
            other => panic!("expected Infeasible, got {:?}", other),
        }
    }

    #[test]
    fn encoder_new_rejects_inconsistent_params() {
        let good = select_params(2, 200, Rat::new(9, 20)).unwrap();
        let mut bad = good.clone();
        bad.k += 1;
        assert!(matches!(Encoder::new(&bad), Err(SblError::BadParams(_))));
        let mut bad = good.clone();
        bad.ell += 2;
        assert!(matches!(Encoder::new(&bad), Err(SblError::BadParams(_))));
        let mut bad = good.clone();
        bad.delta += 1;
        assert!(matches!(Encoder::new(&bad), Err(SblError::BadParams(_))));
        let mut bad = good;
        bad.eta2 = Rat::new(1, 3);
        assert!(matches!(Encoder::new(&bad), Err(SblError::BadParams(_))));
    }

    #[test]
    fn corridor_table_matches_brute_force() {
        for (q, len, delta) in [(2u16, 10usize, 3u64), (3, 6, 4), (4, 5, 5)] {
            let table = CorridorTable::new(q, len, delta);
            let mut members = Vec::new();
            let mut syms = vec![0u8; len];
            'outer: loop {
                let mut dev = 0i64;
                let mut inside = true;
                for &s in &syms {
                    dev += 2 * i64::from(s) - (i64::from(q) - 1);
                    if dev.abs() > delta as i64 {
                        inside = false;
                        break;
                    }
                }
                if inside {
                    members.push(syms.clone());
                }
                for slot in syms.iter_mut().rev() {
                    if u16::from(*slot) + 1 < q {
                        *slot += 1;
                        continue 'outer;
                    }
                    *slot = 0;
                }
                break;
            }
            assert_eq!(table.count(), &BigUint::from(members.len()));
            // members is in lexicographic order, so ranks must be 0, 1, 2, …
            for (expect, body) in members.iter().enumerate() {
                let rank = table.rank(body).unwrap();
                assert_eq!(rank, BigUint::from(expect));
                assert_eq!(&table.unrank(&rank).unwrap(), body);
            }
        }
    }

    #[test]
    fn stage_one_leaves_balanced_input_alone() {
        for (q, n, eps) in [(2u16, 200usize, Rat::new(9, 20)), (3, 300, Rat::new(9, 10))] {
            let params = select_params(q, n, eps).unwrap();
            let enc = Encoder::new(&params).unwrap();
            let u = centre_word(q, n - 1);
            let (v, report) = enc.encode_stage1_with_report(&u).unwrap();
            assert_eq!(report.replacements, 0);
            let mut expect = u.symbols().to_vec();
            expect.push(MARKER);
            assert_eq!(v.symbols(), &expect[..]);
            assert!(enc.verify_window_bounded(&v).unwrap());
            assert_eq!(enc.decode_stage1(&v).unwrap(), u);
        }
    }

    #[test]
    fn stage_one_reencodes_the_all_zero_word() {
        let params = select_params(2, 1000, Rat::new(9, 20)).unwrap();
        let enc = Encoder::new(&params).unwrap();
        let u = Word::new(2, vec![0; 999]).unwrap();
        let (v, report) = enc.encode_stage1_with_report(&u).unwrap();
        assert!(report.replacements >= 1, "all-zero input must fire the loop");
        assert_eq!(v.len(), 1000);
        assert!(enc.verify_window_bounded(&v).unwrap());
        assert_eq!(enc.decode_stage1(&v).unwrap(), u);
    }

    #[test]
    fn stage_one_round_trips_random_words() {
        let mut rng = ChaCha20Rng::seed_from_u64(0x5b1e);
        for (q, n, eps) in [(2u16, 200usize, Rat::new(9, 20)), (3, 300, Rat::new(9, 10))] {
            let params = select_params(q, n, eps).unwrap();
            let enc = Encoder::new(&params).unwrap();
            for _ in 0..300 {
                let u = random_word(&mut rng, q, n - 1);
                let v = enc.encode_stage1(&u).unwrap();
                assert_eq!(v.len(), n);
                assert!(enc.verify_window_bounded(&v).unwrap());
                assert_eq!(enc.decode_stage1(&v).unwrap(), u);
            }
        }
    }

    #[test]
    fn stage_one_rejects_mutations() {
        let params = select_params(2, 200, Rat::new(9, 20)).unwrap();
        let enc = Encoder::new(&params).unwrap();
        // A corrupted control symbol: flipping the bottom marker turns it
        // into a record flag whose "body" ranks far outside the record
        // range, so the unwind must fail.
        let u = centre_word(2, 199);
        let v = enc.encode_stage1(&u).unwrap();
        let mut syms = v.symbols().to_vec();
        syms[199] = FLAG;
        let bad = Word::new(2, syms).unwrap();
        assert!(matches!(enc.decode_stage1(&bad), Err(SblError::Malformed(_))));
        // No single-symbol change may decode back to the same input.
        let mut rng = ChaCha20Rng::seed_from_u64(0xdead);
        let u = random_word(&mut rng, 2, 199);
        let v = enc.encode_stage1(&u).unwrap();
        for _ in 0..50 {
            let at = rng.gen_range(0..200);
            let mut syms = v.symbols().to_vec();
            syms[at] ^= 1;
            let mutated = Word::new(2, syms).unwrap();
            match enc.decode_stage1(&mutated) {
                Err(_) => {}
                Ok(other) => assert_ne!(other, u, "mutation decoded to the original input"),
            }
        }
    }

    #[test]
    fn stage_two_appends_the_zero_sum_symbol() {
        // Sum 7 at q = 3 needs a = 2 to reach the next multiple of 3.
        let y = Word::parse(3, "21211").unwrap();
        assert_eq!(l1sum(&y), 7);
        let extended = encode_stage2(&y);
        assert_eq!(extended.at(6), 2);
        assert_eq!(l1sum(&extended) % 3, 0);
        // Already zero-sum: the appended symbol is 0.
        let y = Word::parse(2, "1010").unwrap();
        assert_eq!(encode_stage2(&y).at(5), 0);
    }

    #[test]
    fn full_encoder_round_trips_and_balances() {
        let mut rng = ChaCha20Rng::seed_from_u64(0xb0b);
        for (q, n, eps) in [(2u16, 200usize, Rat::new(9, 20)), (3, 300, Rat::new(9, 10))] {
            let params = select_params(q, n, eps).unwrap();
            let enc = Encoder::new(&params).unwrap();
            for trial in 0..100 {
                let source = if trial == 0 {
                    Word::new(q, vec![0; n - 2]).unwrap() // all-zero stress
                } else {
                    random_word(&mut rng, q, n - 2)
                };
                let code = enc.encode(&source).unwrap();
                assert_eq!(code.len(), source.len() + 2, "exactly two redundant symbols");
                assert!(enc.verify_balance(&code).unwrap());
                assert_eq!(enc.decode(&code).unwrap(), source);
            }
        }
    }

    #[test]
    fn free_functions_match_the_encoder() {
        let params = select_params(2, 200, Rat::new(9, 20)).unwrap();
        let enc = Encoder::new(&params).unwrap();
        let source = centre_word(2, 198);
        let code = encode(&source, &params).unwrap();
        assert_eq!(code, enc.encode(&source).unwrap());
        assert_eq!(decode(&code, &params).unwrap(), source);
        let u = centre_word(2, 199);
        let v = encode_stage1(&u, &params).unwrap();
        assert_eq!(decode_stage1(&v, &params).unwrap(), u);
    }

    #[test]
    fn params_serde_round_trip() {
        let params = select_params(2, 1000, Rat::new(9, 20)).unwrap();
        let json = serde_json::to_string(&params).unwrap();
        assert!(json.contains("\"eps\":\"9/20\""));
        let back: EncoderParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn class_counts_hold_at_desk_scale() {
        // The window class outgrows q^{m-1} once m clears the premise
        // m >= max{2q/(q-1), ((q-1)^2/e0^2)·ln m}.
        let w2 = WindowSpec::from_eps(2, 30, Rat::new(9, 20));
        assert!(count_weight_bounded(2, 30, w2.lo(), w2.hi()) >= BigUint::from(2u32).pow(29));
        let w3 = WindowSpec::from_eps(3, 20, Rat::new(9, 10));
        assert!(count_weight_bounded(3, 20, w3.lo(), w3.hi()) >= BigUint::from(3u32).pow(19));
        // The out-of-band class fits the payload width k = m - 3 - ceil(log_q n)
        // at q = 2, n = 1000, m = 35.
        let w = WindowSpec::from_eps(2, 35, Rat::new(9, 20));
        let f = ForbiddenClassTable::new(2, 35, w.lo(), w.hi()).count();
        assert!(f <= BigUint::from(2u32).pow(22));
        // Words of length m + 1 with an out-of-band window are rare: at
        // most q^{m-2} of them at this grid point.
        let bad = count_bad_pair_windows(2, 35, w.lo(), w.hi());
        assert!(bad <= BigUint::from(2u32).pow(33));
    }

    #[test]
    fn wrong_shapes_are_rejected() {
        let params = select_params(2, 200, Rat::new(9, 20)).unwrap();
        let enc = Encoder::new(&params).unwrap();
        let short = Word::new(2, vec![0; 100]).unwrap();
        assert!(matches!(
            enc.encode_stage1(&short),
            Err(SblError::WrongLength { expected: 199, got: 100 })
        ));
        assert!(matches!(
            enc.decode_stage1(&short),
            Err(SblError::WrongLength { expected: 200, got: 100 })
        ));
        let other_q = Word::new(3, vec![0; 199]).unwrap();
        assert!(matches!(
            enc.encode_stage1(&other_q),
            Err(SblError::AlphabetMismatch { expected: 2, got: 3 })
        ));
        assert!(matches!(
            enc.encode(&short),
            Err(SblError::WrongLength { expected: 198, got: 100 })
        ));
    }
}
