//! Good triples (q, t, ε) and the window lengths they certify.
//!
//! For every burst length `2 <= t' <= t` a good triple admits an integer
//! `s_{t'}` strictly inside
//!
//! ```text
//! I_{t'} = ( t'/2 - (1-2ε)t'/(2q) ,  t'/2 + 1 - (1+2ε)t'/(2q) )
//! ```
//!
//! and the derived thresholds `M` (bursts) and `M_loc` (localized deletions)
//! are the smallest window lengths for which the band argument of the
//! decoders' localization step goes through. All arithmetic here is exact
//! rational; the closed forms are cross-checked against direct interval
//! search and term maxima by the test suite.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::Zero;

pub type Rat = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TripleError {
    BadQ(u16),
    BadT { t: usize },
    /// M_loc requested for t < 3 (localized deletions assume t >= 3).
    LocalizedNeedsT3 { t: usize },
    /// Operation needs a good triple but the certificate says otherwise.
    NotGood { reason: String },
}

impl fmt::Display for TripleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TripleError::BadQ(q) => write!(f, "q = {} outside 2..=256", q),
            TripleError::BadT { t } => write!(f, "t = {} must be at least 2", t),
            TripleError::LocalizedNeedsT3 { t } => {
                write!(f, "localized threshold needs t >= 3, got {}", t)
            }
            TripleError::NotGood { reason } => write!(f, "triple is not good: {}", reason),
        }
    }
}

impl std::error::Error for TripleError {}

/// The result of classifying a triple (q, t, ε).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoodTripleCert {
    pub q: u16,
    pub t: usize,
    pub eps: Rat,
    pub is_good: bool,
    /// Why the triple fails, when it does.
    pub reason: Option<String>,
    /// `s_{t'}` for each `t'` in `2..=t` (present only for good triples).
    pub s_table: BTreeMap<usize, i64>,
    /// Largest odd integer `<= t`.
    pub t1: usize,
    /// Largest even integer `<= t`.
    pub t2: usize,
}

fn rat(n: i64, d: i64) -> Rat {
    Ratio::new(n, d)
}

/// The open interval `I_{t'}` as (left, right) endpoints.
fn interval(q: u16, t_prime: usize, eps: Rat) -> (Rat, Rat) {
    let q = i64::from(q);
    let tp = t_prime as i64;
    let left = rat(tp, 2) - (Rat::from_integer(1) - eps * 2) * rat(tp, 2 * q);
    let right = rat(tp, 2) + Rat::from_integer(1) - (Rat::from_integer(1) + eps * 2) * rat(tp, 2 * q);
    (left, right)
}

/// The precondition common to all good triples: `0 < ε < min{q/(2t), 1/2}`.
fn eps_in_base_range(q: u16, t: usize, eps: Rat) -> bool {
    eps > Rat::zero() && eps < rat(i64::from(q), 2 * t as i64) && eps < rat(1, 2)
}

/// `s_{t'}` as the closed form picks it: `⌈t'/2⌉` for `t' <= q`, else `⌊t'/2⌋`.
fn s_closed_form(q: u16, t_prime: usize) -> i64 {
    if t_prime <= usize::from(q) {
        (t_prime as i64 + 1) / 2
    } else {
        t_prime as i64 / 2
    }
}

/// Classify a triple by the closed-form case analysis.
pub fn classify(q: u16, t: usize, eps: Rat) -> Result<GoodTripleCert, TripleError> {
    if !(2..=256).contains(&q) {
        return Err(TripleError::BadQ(q));
    }
    if t < 2 {
        return Err(TripleError::BadT { t });
    }
    let delta = t % 2;
    let t1 = t - 1 + delta;
    let t2 = t - delta;
    let qi = i64::from(q);

    let fail = |reason: &str| GoodTripleCert {
        q,
        t,
        eps,
        is_good: false,
        reason: Some(reason.to_string()),
        s_table: BTreeMap::new(),
        t1,
        t2,
    };

    if !eps_in_base_range(q, t, eps) {
        return Ok(fail("eps outside (0, min{q/(2t), 1/2})"));
    }

    let good = if usize::from(q) > t {
        // ε < min{ q/(2t1) - 1/2, q/(2t), 1/2 }; the last two already hold.
        eps < rat(qi, 2 * t1 as i64) - rat(1, 2)
    } else if q.is_multiple_of(2) && t == usize::from(q) {
        eps < rat(1, 2 * (qi - 1))
    } else if q.is_multiple_of(2) && usize::from(q) < t && t < 2 * usize::from(q) {
        eps < rat(qi, t2 as i64) - rat(1, 2) && eps < rat(1, 2 * (qi + 1))
    } else {
        // q odd with t >= q, or t >= 2q: no triple is good.
        false
    };

    if !good {
        return Ok(fail("no admissible integer s_{t'} for every t'"));
    }

    let mut s_table = BTreeMap::new();
    for t_prime in 2..=t {
        s_table.insert(t_prime, s_closed_form(q, t_prime));
    }
    Ok(GoodTripleCert { q, t, eps, is_good: true, reason: None, s_table, t1, t2 })
}

/// Classify by direct search: for every `t'` scan all integers for one that
/// lies strictly inside `I_{t'}`. Serves as the oracle for [`classify`].
pub fn classify_bruteforce(q: u16, t: usize, eps: Rat) -> Result<GoodTripleCert, TripleError> {
    if !(2..=256).contains(&q) {
        return Err(TripleError::BadQ(q));
    }
    if t < 2 {
        return Err(TripleError::BadT { t });
    }
    let delta = t % 2;
    let t1 = t - 1 + delta;
    let t2 = t - delta;

    if !eps_in_base_range(q, t, eps) {
        return Ok(GoodTripleCert {
            q,
            t,
            eps,
            is_good: false,
            reason: Some("eps outside (0, min{q/(2t), 1/2})".into()),
            s_table: BTreeMap::new(),
            t1,
            t2,
        });
    }

    let mut s_table = BTreeMap::new();
    for t_prime in 2..=t {
        let (left, right) = interval(q, t_prime, eps);
        // The interval has length < 1, so at most one integer fits; scan the
        // whole plausible range anyway and assert uniqueness.
        let mut found = None;
        for s in 0..=(t_prime as i64 + 1) {
            let s_r = Rat::from_integer(s);
            if left < s_r && s_r < right {
                assert!(found.is_none(), "interval of length < 1 held two integers");
                found = Some(s);
            }
        }
        match found {
            Some(s) => {
                s_table.insert(t_prime, s);
            }
            None => {
                return Ok(GoodTripleCert {
                    q,
                    t,
                    eps,
                    is_good: false,
                    reason: Some(format!("no integer in I_{{{}}}", t_prime)),
                    s_table: BTreeMap::new(),
                    t1,
                    t2,
                });
            }
        }
    }
    Ok(GoodTripleCert { q, t, eps, is_good: true, reason: None, s_table, t1, t2 })
}

/// The two per-`t'` terms whose maximum defines M: returns (f, g) where
/// `f = t'(t'+1)(q-1) / (2 s q - t'(q-1+2ε))` and
/// `g = t'(t'+1)(q-1) / (t'(q-1-2ε) - 2(s-1)q)`.
fn m_terms(q: u16, t_prime: usize, s: i64, eps: Rat) -> (Rat, Rat) {
    let qi = i64::from(q);
    let tp = t_prime as i64;
    let numer = Rat::from_integer(tp * (tp + 1) * (qi - 1));
    let qm1 = Rat::from_integer(qi - 1);
    let denom_f = Rat::from_integer(2 * s * qi) - (qm1 + eps * 2) * tp;
    let denom_g = (qm1 - eps * 2) * tp - Rat::from_integer(2 * (s - 1) * qi);
    (numer / denom_f, numer / denom_g)
}

/// Direct evaluation of the burst threshold: the maximum of both terms over
/// all `t'` in `2..=t`.
pub fn compute_m_direct(cert: &GoodTripleCert) -> Result<Rat, TripleError> {
    if !cert.is_good {
        return Err(TripleError::NotGood {
            reason: cert.reason.clone().unwrap_or_default(),
        });
    }
    let mut best: Option<Rat> = None;
    for (&t_prime, &s) in &cert.s_table {
        let (f, g) = m_terms(cert.q, t_prime, s, cert.eps);
        for v in [f, g] {
            best = Some(match best {
                Some(b) if b >= v => b,
                _ => v,
            });
        }
    }
    Ok(best.expect("t >= 2 gives at least one term"))
}

/// The burst threshold M by closed-form case analysis.
///
/// Within each parity class of `t'` the larger of f, g moves monotonically,
/// so the maximum is attained at one of at most four candidate terms:
///
/// * even `t' <= q`: f >= g (equal at `t' = q`) and f increases — top index wins;
/// * odd  `t' <= q`: g > f and g increases — top index wins;
/// * even `t' > q`:  g > f and g increases — `g(t2)` wins;
/// * odd  `t' > q`:  f > g and f decreases — `f(q+1)` wins.
///
/// The even `t' > q` class is decisive whenever `t2 > q`; quoting
/// `(q²-1)(q+2)/(1-2ε(q+1))` for every `q < t < 2q` (as if `f(q+1)` always
/// dominated) understates the maximum, first at (q, t) = (8, 14) for small ε.
/// The grid test against [`compute_m_direct`] pins this down.
pub fn compute_m(cert: &GoodTripleCert) -> Result<Rat, TripleError> {
    if !cert.is_good {
        return Err(TripleError::NotGood {
            reason: cert.reason.clone().unwrap_or_default(),
        });
    }
    let q = i64::from(cert.q);
    let t1 = cert.t1 as i64;
    let t2 = cert.t2 as i64;
    let eps = cert.eps;
    let one = Rat::from_integer(1);

    let mut candidates: Vec<Rat> = Vec::new();
    if usize::from(cert.q) > cert.t {
        // f(t2) = (t2+1)(q-1)/(1-2ε); g(t1) = t1(t1+1)(q-1)/(q-(1+2ε)t1),
        // the latter only when the odd class 3..=t1 is nonempty.
        candidates.push(Rat::from_integer((t2 + 1) * (q - 1)) / (one - eps * 2));
        if t1 >= 3 {
            candidates.push(
                Rat::from_integer(t1 * (t1 + 1) * (q - 1))
                    / (Rat::from_integer(q) - (one + eps * 2) * t1),
            );
        }
    } else {
        // q even with q <= t < 2q, so t2 >= q and the candidates simplify to
        // f(q) = (q²-1)/(1-2ε), g(q-1) = (q³-2q²+q)/(1-2ε(q-1)),
        // g(t2) = t2(t2+1)(q-1)/(2q-(1+2ε)t2), f(q+1) = (q²-1)(q+2)/(1-2ε(q+1)).
        candidates.push(Rat::from_integer(q * q - 1) / (one - eps * 2));
        if q >= 4 {
            candidates
                .push(Rat::from_integer(q * q * q - 2 * q * q + q) / (one - eps * 2 * (q - 1)));
        }
        if t2 > q {
            candidates.push(
                Rat::from_integer(t2 * (t2 + 1) * (q - 1))
                    / (Rat::from_integer(2 * q) - (one + eps * 2) * t2),
            );
        }
        if t1 > q {
            candidates
                .push(Rat::from_integer((q * q - 1) * (q + 2)) / (one - eps * 2 * (q + 1)));
        }
    }
    Ok(candidates.into_iter().max().expect("even class is never empty"))
}

/// The localized numerator `h(t') = (q+1)t'² + ((4q-2)t + q - 1)t' - 2qt`.
fn h_loc(q: u16, t: usize, t_prime: usize) -> i64 {
    let qi = i64::from(q);
    let ti = t as i64;
    let tp = t_prime as i64;
    (qi + 1) * tp * tp + ((4 * qi - 2) * ti + qi - 1) * tp - 2 * qi * ti
}

fn m_loc_terms(q: u16, t: usize, t_prime: usize, s: i64, eps: Rat) -> (Rat, Rat) {
    let qi = i64::from(q);
    let tp = t_prime as i64;
    let numer = Rat::from_integer(h_loc(q, t, t_prime));
    let qm1 = Rat::from_integer(qi - 1);
    let denom_f = Rat::from_integer(2 * s * qi) - (qm1 + eps * 2) * tp;
    let denom_g = (qm1 - eps * 2) * tp - Rat::from_integer(2 * (s - 1) * qi);
    (numer / denom_f, numer / denom_g)
}

/// Direct evaluation of the localized threshold M' over `t'` in `2..=t`.
pub fn compute_m_loc_direct(cert: &GoodTripleCert) -> Result<Rat, TripleError> {
    if cert.t < 3 {
        return Err(TripleError::LocalizedNeedsT3 { t: cert.t });
    }
    if !cert.is_good {
        return Err(TripleError::NotGood {
            reason: cert.reason.clone().unwrap_or_default(),
        });
    }
    let mut best: Option<Rat> = None;
    for (&t_prime, &s) in &cert.s_table {
        let (f, g) = m_loc_terms(cert.q, cert.t, t_prime, s, cert.eps);
        for v in [f, g] {
            best = Some(match best {
                Some(b) if b >= v => b,
                _ => v,
            });
        }
    }
    Ok(best.expect("t >= 3 gives terms"))
}

/// The localized threshold M' by the same monotone case analysis as
/// [`compute_m`], with the heavier numerator `h(t')`. The even `t' > q`
/// candidate `g(t2)` matters here as well; with this numerator it first
/// overtakes `f(q+1)` at (q, t) = (20, 38) for small ε.
pub fn compute_m_loc(cert: &GoodTripleCert) -> Result<Rat, TripleError> {
    if cert.t < 3 {
        return Err(TripleError::LocalizedNeedsT3 { t: cert.t });
    }
    if !cert.is_good {
        return Err(TripleError::NotGood {
            reason: cert.reason.clone().unwrap_or_default(),
        });
    }
    let q = i64::from(cert.q);
    let t1 = cert.t1 as i64;
    let t2 = cert.t2 as i64;
    let eps = cert.eps;
    let one = Rat::from_integer(1);
    let h = |tp: i64| Rat::from_integer(h_loc(cert.q, cert.t, tp as usize));

    // Denominators below are the hand-simplified forms of
    // 2sq - (q-1+2ε)t' and (q-1-2ε)t' - 2(s-1)q at the top of each class.
    let mut candidates: Vec<Rat> = Vec::new();
    if usize::from(cert.q) > cert.t {
        // f(t2), and g(t1); t >= 3 keeps both parity classes nonempty.
        candidates.push(h(t2) / ((one - eps * 2) * t2));
        candidates.push(h(t1) / (Rat::from_integer(q) - (one + eps * 2) * t1));
    } else {
        // q even with q <= t < 2q: f(q), g(q-1), g(t2), f(q+1).
        candidates.push(h(q) / ((one - eps * 2) * q));
        if q >= 4 {
            candidates.push(h(q - 1) / (one - eps * 2 * (q - 1)));
        }
        if t2 > q {
            candidates.push(h(t2) / (Rat::from_integer(2 * q) - (one + eps * 2) * t2));
        }
        if t1 > q {
            candidates.push(h(q + 1) / (one - eps * 2 * (q + 1)));
        }
    }
    Ok(candidates.into_iter().max().expect("even class is never empty"))
}
