//! Code parameters, membership predicates, and the deletion decoders.
//!
//! All codes live on the differential side: a word `x` belongs to a code
//! through constraints on `y = ψ(x)` — a Varshamov–Tenengolts congruence
//! `VT(y) ≡ b (mod N)`, a weight congruence `Sum(y) ≡ c·q (mod (t+1)q)`,
//! strong local balance of `y`, and per-burst-length sketch values. Decoding
//! is two-phase: congruences localize the error to a short window, then a
//! window-confined search filtered by full membership pins the word down.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::balance::{BalanceError, BalanceSpec};
use crate::seq::{l1sum, psi, psi_inverse, vt, SeqError, Word};
use crate::sketch::{enumerate_preimages, SketchError, SketchSet, SketchTable};
use crate::triples::{classify, compute_m, compute_m_loc, Rat, TripleError};

#[derive(Debug)]
pub enum CodeError {
    Triple(TripleError),
    Seq(SeqError),
    Sketch(SketchError),
    Balance(BalanceError),
    BadParams(String),
    /// Membership/decoding asked for before residues were chosen.
    ResiduesUnset,
    BadResidues(String),
    MissingSketch { t1: usize, t2: usize },
    SketchMismatch(String),
    WrongLength { lo: usize, hi: usize, got: usize },
    /// The localization scan found no admissible index.
    NoValidJ,
    /// Syndromes inconsistent with the observed number of deletions.
    BadSyndrome(String),
    NoCandidate,
    Ambiguous { count: usize },
    NotACodeword,
    Budget { needed: u128, budget: u64 },
}

impl fmt::Display for CodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeError::Triple(e) => write!(f, "{}", e),
            CodeError::Seq(e) => write!(f, "{}", e),
            CodeError::Sketch(e) => write!(f, "{}", e),
            CodeError::Balance(e) => write!(f, "{}", e),
            CodeError::BadParams(why) => write!(f, "bad parameters: {}", why),
            CodeError::ResiduesUnset => write!(f, "residues are not set on these parameters"),
            CodeError::BadResidues(why) => write!(f, "bad residues: {}", why),
            CodeError::MissingSketch { t1, t2 } => {
                write!(f, "sketch provider lacks the ({}, {}) table", t1, t2)
            }
            CodeError::SketchMismatch(why) => write!(f, "sketch table mismatch: {}", why),
            CodeError::WrongLength { lo, hi, got } => {
                write!(f, "received length {} outside [{}, {}]", got, lo, hi)
            }
            CodeError::NoValidJ => write!(f, "no admissible localization index"),
            CodeError::BadSyndrome(why) => write!(f, "inconsistent syndrome: {}", why),
            CodeError::NoCandidate => write!(f, "no candidate passes membership"),
            CodeError::Ambiguous { count } => {
                write!(f, "{} candidates pass membership; sketch fails to separate", count)
            }
            CodeError::NotACodeword => write!(f, "input is not a codeword"),
            CodeError::Budget { needed, budget } => {
                write!(f, "enumeration needs {} words, budget is {}", needed, budget)
            }
        }
    }
}

impl std::error::Error for CodeError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CodeError::Triple(e) => Some(e),
            CodeError::Seq(e) => Some(e),
            CodeError::Sketch(e) => Some(e),
            CodeError::Balance(e) => Some(e),
            _ => None,
        }
    }
}

impl From<TripleError> for CodeError {
    fn from(e: TripleError) -> Self {
        CodeError::Triple(e)
    }
}
impl From<SeqError> for CodeError {
    fn from(e: SeqError) -> Self {
        CodeError::Seq(e)
    }
}
impl From<SketchError> for CodeError {
    fn from(e: SketchError) -> Self {
        CodeError::Sketch(e)
    }
}
impl From<BalanceError> for CodeError {
    fn from(e: BalanceError) -> Self {
        CodeError::Balance(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Single deletion; only the VT congruence is enforced.
    Single,
    /// One burst of up to `t` consecutive deletions.
    Burst,
    /// Up to `t` deletions confined to one length-`t` window.
    Localized,
    /// The slim binary variant for q = 2, t = 3: the two-deletion sketch is
    /// dropped, the VT congruence alone separates two-bursts.
    BinaryLe3Lite,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Burst => "burst",
            Mode::Localized => "localized",
            Mode::BinaryLe3Lite => "binary_le3_lite",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The chosen congruence residues: `b` for VT, `c` for the weight class,
/// `a[t']` for each enforced sketch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Residues {
    pub b: u64,
    pub c: u64,
    #[serde(default)]
    pub a: BTreeMap<usize, u32>,
}

pub(crate) mod eps_serde {
    use super::Rat;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(eps: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", eps.numer(), eps.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(d)?;
        let (p, r) = text
            .split_once('/')
            .ok_or_else(|| de::Error::custom("eps must be written as \"p/r\""))?;
        let p: i64 = p.trim().parse().map_err(de::Error::custom)?;
        let r: i64 = r.trim().parse().map_err(de::Error::custom)?;
        if r <= 0 {
            return Err(de::Error::custom("eps denominator must be positive"));
        }
        Ok(Rat::new(p, r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub q: u16,
    pub n: usize,
    pub t: usize,
    #[serde(with = "eps_serde")]
    pub eps: Rat,
    /// Balance window length ℓ = ⌈((q−1)²/ε²)·ln(2(n+1)√q)⌉.
    pub ell: usize,
    /// Sketch window length P = ℓ + t − 1.
    pub p: usize,
    /// VT modulus N.
    #[serde(rename = "N")]
    pub modulus: u64,
    pub mode: Mode,
    pub residues: Option<Residues>,
    /// Whether ℓ exceeds the mode's threshold (M or M′) at this n, i.e.
    /// whether the theorems' window guarantee is in force.
    pub ell_exceeds_threshold: bool,
    /// ℓ > n + 1 means no substring of ψ(x) is long enough to constrain.
    pub balance_vacuous: bool,
}

/// The mode's smallest admissible VT modulus.
fn modulus_floor(q: u16, n: usize, t: usize, mode: Mode) -> u64 {
    let q = q as u64;
    let n = n as u64;
    let t = t as u64;
    match mode {
        Mode::Single => (n + 1) * q,
        Mode::Burst | Mode::BinaryLe3Lite => (n * q + q - 1) * t,
        Mode::Localized => (t * (n + t) - 1) * q,
    }
}

/// Derive ℓ, P, and the default modulus for a code; residues stay unset.
pub fn derive_params(
    q: u16,
    t: usize,
    eps: Rat,
    n: usize,
    mode: Mode,
) -> Result<CodeParams, CodeError> {
    if !(2..=256).contains(&q) {
        return Err(CodeError::BadParams(format!("q = {} outside 2..=256", q)));
    }
    if n < 2 {
        return Err(CodeError::BadParams(format!("n = {} below 2", n)));
    }
    if eps <= Rat::from_integer(0) || eps * 2 >= Rat::from_integer(i64::from(q) - 1).max(Rat::from_integer(1)) {
        return Err(CodeError::BadParams(format!("eps = {} outside (0, (q-1)/2)", eps)));
    }

    let ell_exceeds_threshold = match mode {
        Mode::Single => {
            if t != 1 {
                return Err(CodeError::BadParams(format!(
                    "single-deletion mode takes t = 1, got {}",
                    t
                )));
            }
            true
        }
        Mode::Burst | Mode::Localized | Mode::BinaryLe3Lite => {
            if mode == Mode::BinaryLe3Lite && (q != 2 || t != 3) {
                return Err(CodeError::BadParams(format!(
                    "binary_le3_lite needs q = 2, t = 3, got q = {}, t = {}",
                    q, t
                )));
            }
            if mode == Mode::Localized && t < 3 {
                return Err(CodeError::BadParams(format!(
                    "localized mode needs t >= 3, got {}",
                    t
                )));
            }
            let cert = classify(q, t, eps)?;
            if !cert.is_good {
                return Err(CodeError::Triple(TripleError::NotGood {
                    reason: cert.reason.unwrap_or_default(),
                }));
            }
            let threshold = if mode == Mode::Localized {
                compute_m_loc(&cert)?
            } else {
                compute_m(&cert)?
            };
            let ell = ell_for(q, eps, n);
            Rat::from_integer(ell as i64) > threshold
        }
    };

    let ell = ell_for(q, eps, n);
    Ok(CodeParams {
        q,
        n,
        t,
        eps,
        ell,
        p: ell + t - 1,
        modulus: modulus_floor(q, n, t, mode),
        mode,
        residues: None,
        ell_exceeds_threshold,
        balance_vacuous: ell > n + 1,
    })
}

/// ℓ = ⌈((q−1)²/ε²)·ln(2(n+1)√q)⌉, evaluated in f64: the natural log is
/// irrational, so the ceiling is taken on the floating approximation.
fn ell_for(q: u16, eps: Rat, n: usize) -> usize {
    let qf = f64::from(q);
    let epsf = *eps.numer() as f64 / *eps.denom() as f64;
    let lead = (qf - 1.0) * (qf - 1.0) / (epsf * epsf);
    (lead * (2.0 * (n as f64 + 1.0) * qf.sqrt()).ln()).ceil() as usize
}

impl CodeParams {
    /// Attach residues, validating them against the parameters.
    pub fn with_residues(mut self, residues: Residues) -> Result<CodeParams, CodeError> {
        if residues.b >= self.modulus {
            return Err(CodeError::BadResidues(format!(
                "b = {} outside [0, {})",
                residues.b, self.modulus
            )));
        }
        if residues.c > self.t as u64 {
            return Err(CodeError::BadResidues(format!(
                "c = {} outside [0, {}]",
                residues.c, self.t
            )));
        }
        for t_prime in self.constrained_t_primes() {
            if !residues.a.contains_key(&t_prime) {
                return Err(CodeError::BadResidues(format!("a[{}] missing", t_prime)));
            }
        }
        for &t_prime in residues.a.keys() {
            if !(2..=self.t).contains(&t_prime) {
                return Err(CodeError::BadResidues(format!(
                    "a[{}] outside 2..={}",
                    t_prime, self.t
                )));
            }
        }
        self.residues = Some(residues);
        Ok(self)
    }

    /// Replace the modulus, which may only grow past the mode's floor.
    pub fn with_modulus(mut self, modulus: u64) -> Result<CodeParams, CodeError> {
        let floor = modulus_floor(self.q, self.n, self.t, self.mode);
        if modulus < floor {
            return Err(CodeError::BadParams(format!(
                "modulus {} below the {} floor {}",
                modulus, self.mode, floor
            )));
        }
        self.modulus = modulus;
        Ok(self)
    }

    /// The burst lengths whose sketch values this mode constrains.
    pub fn constrained_t_primes(&self) -> std::ops::RangeInclusive<usize> {
        match self.mode {
            #[allow(clippy::reversed_empty_ranges)]
            Mode::Single => 2..=1, // deliberately empty: no sketches needed
            Mode::Burst | Mode::Localized => 2..=self.t,
            Mode::BinaryLe3Lite => 3..=self.t,
        }
    }

    /// The `(t1, t2)` sketch-table key serving burst length `t_prime`.
    pub fn sketch_key(&self, t_prime: usize) -> (usize, usize) {
        match self.mode {
            Mode::Localized => (self.t, self.t - t_prime),
            _ => (t_prime, 0),
        }
    }

    fn residues_ref(&self) -> Result<&Residues, CodeError> {
        self.residues.as_ref().ok_or(CodeError::ResiduesUnset)
    }

    fn balance_spec(&self) -> Result<BalanceSpec, CodeError> {
        Ok(BalanceSpec::new(self.q, self.ell, self.eps)?)
    }

    fn table<'s>(&self, sketches: &'s SketchSet, t_prime: usize) -> Result<&'s SketchTable, CodeError> {
        let (t1, t2) = self.sketch_key(t_prime);
        let table = sketches.get(t1, t2).ok_or(CodeError::MissingSketch { t1, t2 })?;
        if table.q() != self.q || table.n() != self.n {
            return Err(CodeError::SketchMismatch(format!(
                "table ({}, {}) built for q = {}, n = {}; parameters say q = {}, n = {}",
                t1,
                t2,
                table.q(),
                table.n(),
                self.q,
                self.n
            )));
        }
        if table.p() < self.p {
            return Err(CodeError::SketchMismatch(format!(
                "table ({}, {}) separates windows of length {}, parameters need {}",
                t1,
                t2,
                table.p(),
                self.p
            )));
        }
        Ok(table)
    }
}

/// How a decode localized and resolved the error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeTrace {
    /// Number of missing symbols observed from the received length.
    pub t_prime: usize,
    /// Δ = (b − VT(ψ(received))) mod N.
    pub delta: u64,
    /// Δ_sum = (c·q − Sum(ψ(received))) mod (t+1)q — always a multiple of q.
    pub delta_sum: u64,
    /// The first admissible localization index (0 when t′ = 0).
    pub j: usize,
    /// σ^(j) at that index; for t′ = 1 this is the forced β.
    pub sigma_j: i64,
    /// 1-based window of candidate error starts in the transmitted word.
    pub window: (usize, usize),
    /// Number of (position, replacement) pairs enumerated.
    pub candidates_considered: usize,
}

fn check_length(x: &Word, params: &CodeParams) -> Result<(), CodeError> {
    if x.q() != params.q {
        return Err(CodeError::Seq(SeqError::AlphabetMismatch {
            left: params.q,
            right: x.q(),
        }));
    }
    if x.len() != params.n {
        return Err(CodeError::WrongLength { lo: params.n, hi: params.n, got: x.len() });
    }
    Ok(())
}

/// Membership in the single-deletion code: only `VT(ψ(x)) ≡ b (mod N)`.
pub fn member_single(x: &Word, params: &CodeParams) -> Result<bool, CodeError> {
    if params.mode != Mode::Single {
        return Err(CodeError::BadParams(format!(
            "member_single on {} parameters",
            params.mode
        )));
    }
    check_length(x, params)?;
    let res = params.residues_ref()?;
    let y = psi(x);
    Ok(vt(&y) % params.modulus == res.b)
}

fn member_multi(
    x: &Word,
    params: &CodeParams,
    sketches: &SketchSet,
) -> Result<bool, CodeError> {
    check_length(x, params)?;
    let res = params.residues_ref()?;
    let y = psi(x);
    if vt(&y) % params.modulus != res.b {
        return Ok(false);
    }
    let q = u64::from(params.q);
    let modq = (params.t as u64 + 1) * q;
    if l1sum(&y) % modq != res.c * q {
        return Ok(false);
    }
    if !crate::balance::is_strong_locally_balanced(&y, &params.balance_spec()?)? {
        return Ok(false);
    }
    for t_prime in params.constrained_t_primes() {
        let table = params.table(sketches, t_prime)?;
        let expected = *res
            .a
            .get(&t_prime)
            .ok_or_else(|| CodeError::BadResidues(format!("a[{}] missing", t_prime)))?;
        if table.value(x)? != expected {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Membership in the burst code (or its slim binary variant).
pub fn member_burst(
    x: &Word,
    params: &CodeParams,
    sketches: &SketchSet,
) -> Result<bool, CodeError> {
    if !matches!(params.mode, Mode::Burst | Mode::BinaryLe3Lite) {
        return Err(CodeError::BadParams(format!("member_burst on {} parameters", params.mode)));
    }
    member_multi(x, params, sketches)
}

/// Membership in the localized-deletion code.
pub fn member_localized(
    x: &Word,
    params: &CodeParams,
    sketches: &SketchSet,
) -> Result<bool, CodeError> {
    if params.mode != Mode::Localized {
        return Err(CodeError::BadParams(format!(
            "member_localized on {} parameters",
            params.mode
        )));
    }
    member_multi(x, params, sketches)
}

fn member_by_mode(
    x: &Word,
    params: &CodeParams,
    sketches: &SketchSet,
) -> Result<bool, CodeError> {
    match params.mode {
        Mode::Single => member_single(x, params),
        Mode::Burst | Mode::BinaryLe3Lite => member_burst(x, params, sketches),
        Mode::Localized => member_localized(x, params, sketches),
    }
}

/// Recover from one deletion: find the largest splice index j admitting
/// symbols α, β that restore the VT residue, splice, and invert ψ.
fn decode_one_deletion(
    received: &Word,
    params: &CodeParams,
) -> Result<(Word, DecodeTrace), CodeError> {
    let res = params.residues_ref()?;
    let y = psi(received); // length n (one more than the received word)
    let m = y.len();
    let q = u64::from(params.q);
    let sum = l1sum(&y);
    let delta =
        (res.b as i128 - vt(&y) as i128).rem_euclid(params.modulus as i128) as u64;
    let delta_sum = if delta > sum + q { q } else { 0 };

    let mut suffix: u64 = 0; // Sum(y_{[j+1, m]})
    for j in (1..=m).rev() {
        let beta = delta as i128 - (j as u64 * delta_sum) as i128 - suffix as i128;
        if (0..i128::from(q)).contains(&beta) {
            let alpha = i128::from(y.at(j)) - beta + delta_sum as i128;
            if (0..i128::from(q)).contains(&alpha) {
                // Splice (α, β) in place of y_j and invert.
                let mut symbols = Vec::with_capacity(m + 1);
                symbols.extend_from_slice(&y.symbols()[..j - 1]);
                symbols.push(alpha as u8);
                symbols.push(beta as u8);
                symbols.extend_from_slice(&y.symbols()[j..]);
                let spliced = Word::new(params.q, symbols)?;
                let x = psi_inverse(&spliced)?;
                let trace = DecodeTrace {
                    t_prime: 1,
                    delta,
                    delta_sum,
                    j,
                    sigma_j: beta as i64,
                    window: (1, j),
                    candidates_considered: m - j + 1,
                };
                return Ok((x, trace));
            }
        }
        suffix += u64::from(y.at(j));
    }
    Err(CodeError::NoValidJ)
}

/// Decode a single deletion against single-mode parameters.
pub fn decode_single(received: &Word, params: &CodeParams) -> Result<Word, CodeError> {
    if params.mode != Mode::Single {
        return Err(CodeError::BadParams(format!(
            "decode_single on {} parameters",
            params.mode
        )));
    }
    if received.q() != params.q {
        return Err(CodeError::Seq(SeqError::AlphabetMismatch {
            left: params.q,
            right: received.q(),
        }));
    }
    if received.len() == params.n {
        // Intact delivery: just check membership.
        return if member_single(received, params)? {
            Ok(received.clone())
        } else {
            Err(CodeError::NotACodeword)
        };
    }
    if received.len() + 1 != params.n {
        return Err(CodeError::WrongLength {
            lo: params.n - 1,
            hi: params.n,
            got: received.len(),
        });
    }
    decode_one_deletion(received, params).map(|(x, _)| x)
}

/// σ^(j) admissible interval for a given mode and observed deletion count.
fn sigma_range(mode: Mode, q: u64, t: usize, t_prime: usize) -> (i128, i128) {
    let qm1 = q as i128 - 1;
    let tp = t_prime as i128;
    let t = t as i128;
    let pairs = tp * (tp + 1) / 2; // C(t'+1, 2)
    match mode {
        Mode::Localized => (-qm1 * (t - tp) * tp, pairs * qm1 + q as i128 * t * (tp - 1)),
        _ => (0, pairs * qm1),
    }
}

fn decode_channel(
    received: &Word,
    params: &CodeParams,
    sketches: &SketchSet,
) -> Result<(Word, DecodeTrace), CodeError> {
    if received.q() != params.q {
        return Err(CodeError::Seq(SeqError::AlphabetMismatch {
            left: params.q,
            right: received.q(),
        }));
    }
    let n = params.n;
    let t = params.t;
    if received.len() > n || received.len() + t < n {
        return Err(CodeError::WrongLength { lo: n - t, hi: n, got: received.len() });
    }
    let t_prime = n - received.len();

    if t_prime == 0 {
        return if member_by_mode(received, params, sketches)? {
            let trace = DecodeTrace {
                t_prime: 0,
                delta: 0,
                delta_sum: 0,
                j: 0,
                sigma_j: 0,
                window: (0, 0),
                candidates_considered: 0,
            };
            Ok((received.clone(), trace))
        } else {
            Err(CodeError::NotACodeword)
        };
    }
    if t_prime == 1 {
        let (x, trace) = decode_one_deletion(received, params)?;
        return if member_by_mode(&x, params, sketches)? {
            Ok((x, trace))
        } else {
            Err(CodeError::NotACodeword)
        };
    }

    let res = params.residues_ref()?;
    let y = psi(received); // length n + 1 − t′
    let m = y.len();
    let q = u64::from(params.q);
    let delta =
        (res.b as i128 - vt(&y) as i128).rem_euclid(params.modulus as i128) as u64;
    let modq = (t as u64 + 1) * q;
    let delta_sum =
        ((res.c * q) as i128 - l1sum(&y) as i128).rem_euclid(modq as i128) as u64;
    if !delta_sum.is_multiple_of(q) || delta_sum / q > t_prime as u64 {
        return Err(CodeError::BadSyndrome(format!(
            "delta_sum = {} with {} deletions",
            delta_sum, t_prime
        )));
    }
    let (sigma_lo, sigma_hi) = sigma_range(params.mode, q, t, t_prime);

    // Right-to-left scan for the first admissible localization index.
    let mut suffix: u64 = 0; // Sum(y_{[j+1, m]})
    let mut found = None;
    for j in (1..=m).rev() {
        let sigma = delta as i128
            - j as i128 * delta_sum as i128
            - t_prime as i128 * suffix as i128;
        if (sigma_lo..=sigma_hi).contains(&sigma) {
            found = Some((j, sigma));
            break;
        }
        suffix += u64::from(y.at(j));
    }
    let (j, sigma) = found.ok_or(CodeError::NoValidJ)?;

    // Candidate window and replacement shape per mode.
    let (t1, window) = match params.mode {
        Mode::Localized => {
            let lo = j.saturating_sub(params.ell - 1).max(1);
            let hi_j = j as i128 + t_prime as i128 - t as i128;
            let hi = hi_j.min((n - t + 1) as i128);
            if hi < lo as i128 {
                return Err(CodeError::NoCandidate);
            }
            (t, (lo, hi as usize))
        }
        _ => (t_prime, (j.saturating_sub(params.ell - 1).max(1), j)),
    };

    let candidates = enumerate_preimages(received, n, t1, window)?;
    let candidates_considered = candidates.len();
    let mut survivors: BTreeSet<Word> = BTreeSet::new();
    for (_, candidate) in candidates {
        if member_by_mode(&candidate, params, sketches)? {
            survivors.insert(candidate);
        }
    }
    let trace = DecodeTrace {
        t_prime,
        delta,
        delta_sum,
        j,
        sigma_j: sigma as i64,
        window,
        candidates_considered,
    };
    match survivors.len() {
        0 => Err(CodeError::NoCandidate),
        1 => Ok((survivors.into_iter().next().expect("one survivor"), trace)),
        count => Err(CodeError::Ambiguous { count }),
    }
}

/// Decode a burst of up to `t` deletions.
pub fn decode_burst(
    received: &Word,
    params: &CodeParams,
    sketches: &SketchSet,
) -> Result<(Word, DecodeTrace), CodeError> {
    if !matches!(params.mode, Mode::Burst | Mode::BinaryLe3Lite) {
        return Err(CodeError::BadParams(format!("decode_burst on {} parameters", params.mode)));
    }
    decode_channel(received, params, sketches)
}

/// Decode up to `t` deletions confined to a length-`t` window.
pub fn decode_localized(
    received: &Word,
    params: &CodeParams,
    sketches: &SketchSet,
) -> Result<(Word, DecodeTrace), CodeError> {
    if params.mode != Mode::Localized {
        return Err(CodeError::BadParams(format!(
            "decode_localized on {} parameters",
            params.mode
        )));
    }
    decode_channel(received, params, sketches)
}

fn word_budget(q: u16, n: usize, budget: u64) -> Result<usize, CodeError> {
    let mut total: u128 = 1;
    for _ in 0..n {
        total *= u128::from(q);
        if total > u128::from(budget) {
            return Err(CodeError::Budget { needed: total, budget });
        }
    }
    Ok(total as usize)
}

fn scan_words<F: FnMut(&Word) -> Result<(), CodeError>>(
    q: u16,
    n: usize,
    budget: u64,
    mut f: F,
) -> Result<(), CodeError> {
    let total = word_budget(q, n, budget)?;
    let qs = usize::from(q);
    let mut digits = vec![0u8; n];
    for _ in 0..total {
        let word = Word::new(q, digits.clone())?;
        f(&word)?;
        for k in (0..n).rev() {
            if usize::from(digits[k]) + 1 < qs {
                digits[k] += 1;
                break;
            }
            digits[k] = 0;
        }
    }
    Ok(())
}

/// All codewords, in lexicographic order.
pub fn enumerate_codebook(
    params: &CodeParams,
    sketches: &SketchSet,
    budget: u64,
) -> Result<Vec<Word>, CodeError> {
    params.residues_ref()?;
    let mut book = Vec::new();
    scan_words(params.q, params.n, budget, |x| {
        if member_by_mode(x, params, sketches)? {
            book.push(x.clone());
        }
        Ok(())
    })?;
    Ok(book)
}

/// The residue tuple every admissible word falls into. Words whose ψ fails
/// the strong-balance test (multi-symbol modes) belong to no tuple.
type ResidueKey = (u64, u64, Vec<u32>);

/// Codebook sizes per residue tuple, in one pass over all words. The values
/// partition the admissible words: each word has exactly one key.
pub fn residue_partition(
    params: &CodeParams,
    sketches: &SketchSet,
    budget: u64,
) -> Result<BTreeMap<ResidueKey, u64>, CodeError> {
    let mut counts: BTreeMap<ResidueKey, u64> = BTreeMap::new();
    let spec = if params.mode == Mode::Single { None } else { Some(params.balance_spec()?) };
    let q = u64::from(params.q);
    let modq = (params.t as u64 + 1) * q;
    // Pre-resolve the sketch tables once.
    let mut tables = Vec::new();
    if params.mode != Mode::Single {
        for t_prime in params.constrained_t_primes() {
            tables.push(params.table(sketches, t_prime)?);
        }
    }
    scan_words(params.q, params.n, budget, |x| {
        let y = psi(x);
        if let Some(spec) = &spec {
            if !crate::balance::is_strong_locally_balanced(&y, spec)? {
                return Ok(());
            }
        }
        let b = vt(&y) % params.modulus;
        let c = match params.mode {
            Mode::Single => 0,
            _ => (l1sum(&y) % modq) / q, // Sum(ψ(x)) ≡ 0 (mod q) always
        };
        let mut a = Vec::with_capacity(tables.len());
        for table in &tables {
            a.push(table.value(x)?);
        }
        *counts.entry((b, c, a)).or_insert(0) += 1;
        Ok(())
    })?;
    Ok(counts)
}

/// Pick the residue tuple with the largest codebook (ties break toward the
/// smallest tuple) and enumerate it.
pub fn best_residue_codebook(
    params: &CodeParams,
    sketches: &SketchSet,
    budget: u64,
) -> Result<(CodeParams, Vec<Word>), CodeError> {
    let counts = residue_partition(params, sketches, budget)?;
    let (best, _) = counts
        .iter()
        .max_by(|(ka, va), (kb, vb)| va.cmp(vb).then_with(|| kb.cmp(ka)))
        .ok_or(CodeError::NoCandidate)?;
    let (b, c, a_vec) = best.clone();
    let a: BTreeMap<usize, u32> =
        params.constrained_t_primes().zip(a_vec).collect();
    let chosen = params.clone().with_residues(Residues { b, c, a })?;
    let book = enumerate_codebook(&chosen, sketches, budget)?;
    Ok((chosen, book))
}
