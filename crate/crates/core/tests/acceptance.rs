//! End-to-end acceptance suite. Each test covers one acceptance criterion,
//! prints exactly one `ACCEPTANCE <name>: PASS`/`FAIL` line, and asserts
//! its wall-clock budget where one is part of the criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use delcode::balance::check_counting_lemma;
use delcode::codes::{
    best_residue_codebook, decode_burst, decode_localized, decode_single, derive_params,
    member_burst, member_single, CodeParams, Mode, Residues,
};
use delcode::sbl::{select_params, Encoder};
use delcode::seq::{
    all_localized_patterns, apply_burst_deletion, apply_localized, burst_ball, dvt, l1sum,
    localized_ball, psi, vt, Word,
};
use delcode::sketch::SketchSet;
use delcode::triples::{
    classify, classify_bruteforce, compute_m, compute_m_direct, compute_m_loc,
    compute_m_loc_direct,
};

type Rat = Ratio<i64>;

fn report(name: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("ACCEPTANCE {}: PASS", name),
        Err(why) => {
            println!("ACCEPTANCE {}: FAIL — {}", name, why);
            panic!("acceptance criterion {} failed: {}", name, why);
        }
    }
}

fn ensure(cond: bool, msg: impl Fn() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration, what: &str) -> Result<(), String> {
    let elapsed = start.elapsed();
    ensure(elapsed <= budget, || {
        format!("{} took {:?}, budget {:?}", what, elapsed, budget)
    })
}

/// Visit all `q^n` words in lexicographic order.
fn for_each_word(q: u16, n: usize, mut f: impl FnMut(&Word)) {
    let mut digits = vec![0u8; n];
    loop {
        f(&Word::new(q, digits.clone()).unwrap());
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if u16::from(digits[pos]) + 1 < q {
                digits[pos] += 1;
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn burst_code(q: u16, t: usize, eps: Rat, n: usize) -> (CodeParams, SketchSet) {
    let params = derive_params(q, t, eps, n, Mode::Burst).unwrap();
    let sketches = SketchSet::build_for_burst(q, n, params.p, t).unwrap();
    (params, sketches)
}

#[test]
fn acceptance_01_worked_example_fidelity() {
    report("worked-example-fidelity", (|| {
        let start = Instant::now();
        let (params, sketches) = burst_code(3, 2, Rat::new(1, 4), 4);
        let x = Word::parse(3, "0200").unwrap();
        let a2 = sketches.get(2, 0).unwrap().value(&x).map_err(|e| e.to_string())?;
        let params = params
            .with_residues(Residues { b: 8, c: 1, a: [(2, a2)].into_iter().collect() })
            .map_err(|e| e.to_string())?;
        ensure(member_burst(&x, &params, &sketches).unwrap(), || {
            "0200 is not a codeword of its own residue class".into()
        })?;

        // Burst at positions 2–3: 0200 → 00.
        let received = apply_burst_deletion(&x, 2, 2).unwrap();
        ensure(received == Word::parse(3, "00").unwrap(), || "burst application wrong".into())?;
        let (decoded, trace) = decode_burst(&received, &params, &sketches)
            .map_err(|e| format!("decode failed: {}", e))?;
        ensure(decoded == x, || format!("decoded {} instead of 0200", decoded))?;
        ensure(trace.delta == 8, || format!("delta = {}, want 8", trace.delta))?;
        ensure(trace.delta_sum == 3, || format!("delta_sum = {}, want 3", trace.delta_sum))?;
        ensure(trace.j == 2, || format!("j = {}, want 2", trace.j))?;
        ensure(trace.sigma_j == 2, || format!("sigma_j = {}, want 2", trace.sigma_j))?;
        within_budget(start, Duration::from_secs(1), "worked example")
    })());
}

#[test]
fn acceptance_02_negative_control() {
    report("negative-control", (|| {
        let x = Word::parse(3, "0200").unwrap();
        let z = Word::parse(3, "0110").unwrap();
        ensure(x != z, || "control words must differ".into())?;
        // Equal VT syndromes of the differential words, under both the
        // same-length differential and the ψ form.
        ensure(vt(&dvt(&x)) == vt(&dvt(&z)), || {
            format!("VT(DVT) differ: {} vs {}", vt(&dvt(&x)), vt(&dvt(&z)))
        })?;
        ensure(vt(&psi(&x)) == vt(&psi(&z)), || {
            format!("VT(psi) differ: {} vs {}", vt(&psi(&x)), vt(&psi(&z)))
        })?;
        // Their (≤2)-burst balls intersect, so the syndrome alone cannot
        // tell the two apart after a burst.
        let ball_x = burst_ball(&x, 2);
        let ball_z = burst_ball(&z, 2);
        let shared: Vec<_> = ball_x.intersection(&ball_z).collect();
        ensure(!shared.is_empty(), || "burst balls are disjoint".into())
    })());
}

#[test]
fn acceptance_03_single_deletion_exhaustive() {
    report("single-deletion-exhaustive", (|| {
        let start = Instant::now();
        for q in [2u16, 3, 4] {
            for n in 6..=10usize {
                let base = derive_params(q, 1, Rat::new(1, 10), n, Mode::Single)
                    .map_err(|e| e.to_string())?;
                let modulus = base.modulus;
                ensure(modulus == (n as u64 + 1) * u64::from(q), || {
                    format!("N = {} at q = {}, n = {}", modulus, q, n)
                })?;
                // One parameter set per residue.
                let mut by_residue = Vec::with_capacity(modulus as usize);
                for b in 0..modulus {
                    by_residue.push(
                        base.clone()
                            .with_residues(Residues { b, c: 0, a: Default::default() })
                            .map_err(|e| e.to_string())?,
                    );
                }
                let mut per_residue_counts = vec![0u64; modulus as usize];
                let mut failures = 0u64;
                for_each_word(q, n, |x| {
                    let b = vt(&psi(x)) % modulus;
                    let params = &by_residue[b as usize];
                    per_residue_counts[b as usize] += 1;
                    debug_assert!(member_single(x, params).unwrap());
                    for i in 1..=n {
                        let received = apply_burst_deletion(x, i, 1).unwrap();
                        match decode_single(&received, params) {
                            Ok(decoded) if &decoded == x => {}
                            _ => failures += 1,
                        }
                    }
                });
                ensure(failures == 0, || {
                    format!("{} decode failures at q = {}, n = {}", failures, q, n)
                })?;
                // The residue classes partition the whole space.
                let total: u64 = per_residue_counts.iter().sum();
                ensure(total == (u64::from(q)).pow(n as u32), || {
                    format!("partition lost words at q = {}, n = {}", q, n)
                })?;
            }
        }
        within_budget(start, Duration::from_secs(60), "single-deletion sweep")
    })());
}

/// Shared body for the exhaustive burst criterion: best-residue codebook,
/// ball disjointness, exact decoding of every burst, trace invariants.
fn burst_exhaustive_one(q: u16, t: usize, eps: Rat, n: usize) -> Result<(), String> {
    let (params, sketches) = burst_code(q, t, eps, n);
    let (chosen, book) = best_residue_codebook(&params, &sketches, 1 << 24)
        .map_err(|e| format!("codebook at q={}, t={}, n={}: {}", q, t, n, e))?;
    ensure(!book.is_empty(), || format!("empty codebook at q={}, t={}, n={}", q, t, n))?;

    // (a) pairwise ball disjointness via a global received-word map.
    let mut owner: HashMap<Vec<u8>, usize> = HashMap::new();
    for (idx, x) in book.iter().enumerate() {
        for r in burst_ball(x, t) {
            if let Some(prev) = owner.insert(r.symbols().to_vec(), idx) {
                if prev != idx {
                    return Err(format!(
                        "balls of {} and {} intersect (q={}, t={}, n={})",
                        book[prev], x, q, t, n
                    ));
                }
            }
        }
    }

    // (b) + (c): decode every burst, check the trace along the way.
    for x in &book {
        for len in 1..=t {
            for i in 1..=(n - len + 1) {
                let received = apply_burst_deletion(x, i, len).unwrap();
                let (decoded, trace) = decode_burst(&received, &chosen, &sketches)
                    .map_err(|e| format!("decode {} (del {} at {}): {}", x, len, i, e))?;
                if &decoded != x {
                    return Err(format!("{} decoded as {} (del {} at {})", x, decoded, len, i));
                }
                if trace.delta >= chosen.modulus {
                    return Err(format!("delta {} >= N {}", trace.delta, chosen.modulus));
                }
                if trace.t_prime != len {
                    return Err(format!("t' = {} for a length-{} burst", trace.t_prime, len));
                }
                // The reported window must capture the deletion start, up to
                // equivalent starts producing the same received word.
                let in_window = (trace.window.0..=trace.window.1).any(|j| {
                    j + len <= n + 1
                        && apply_burst_deletion(x, j, len).unwrap() == received
                });
                if !in_window {
                    return Err(format!(
                        "window {:?} misses start {} ({} del {} at {})",
                        trace.window, i, x, len, i
                    ));
                }
            }
        }
    }
    Ok(())
}

#[test]
fn acceptance_04_burst_exhaustive() {
    report("burst-exhaustive", (|| {
        let start = Instant::now();
        for n in 8..=14usize {
            burst_exhaustive_one(2, 2, Rat::new(1, 10), n)?;
            burst_exhaustive_one(2, 3, Rat::new(1, 10), n)?;
        }
        for n in 12..=14usize {
            burst_exhaustive_one(3, 2, Rat::new(1, 4), n)?;
        }
        within_budget(start, Duration::from_secs(600), "burst sweep")
    })());
}

#[test]
fn acceptance_05_localized_exhaustive() {
    report("localized-exhaustive", (|| {
        let start = Instant::now();
        let (q, t, eps) = (2u16, 3usize, Rat::new(1, 10));
        for n in 8..=14usize {
            let params = derive_params(q, t, eps, n, Mode::Localized).map_err(|e| e.to_string())?;
            let sketches =
                SketchSet::build_for_localized(q, n, params.p, t).map_err(|e| e.to_string())?;
            let (chosen, book) = best_residue_codebook(&params, &sketches, 1 << 24)
                .map_err(|e| e.to_string())?;
            ensure(!book.is_empty(), || format!("empty localized codebook at n = {}", n))?;

            let mut owner: HashMap<Vec<u8>, usize> = HashMap::new();
            for (idx, x) in book.iter().enumerate() {
                for r in localized_ball(x, t) {
                    if let Some(prev) = owner.insert(r.symbols().to_vec(), idx) {
                        if prev != idx {
                            return Err(format!(
                                "localized balls of {} and {} intersect at n = {}",
                                book[prev], x, n
                            ));
                        }
                    }
                }
            }

            let patterns = all_localized_patterns(n, t);
            for x in &book {
                // The channel also delivers single deletions.
                for i in 1..=n {
                    let received = apply_burst_deletion(x, i, 1).unwrap();
                    let (decoded, trace) = decode_localized(&received, &chosen, &sketches)
                        .map_err(|e| format!("single del at {} of {}: {}", i, x, e))?;
                    if &decoded != x {
                        return Err(format!("{} decoded as {} (single del {})", x, decoded, i));
                    }
                    if trace.delta >= chosen.modulus {
                        return Err(format!("delta {} >= N {}", trace.delta, chosen.modulus));
                    }
                }
                for pattern in &patterns {
                    let received = match apply_localized(x, pattern) {
                        Ok(r) => r,
                        Err(_) => continue, // pattern overruns this length
                    };
                    let (decoded, trace) = decode_localized(&received, &chosen, &sketches)
                        .map_err(|e| format!("pattern {:?} on {}: {}", pattern.runs(), x, e))?;
                    if &decoded != x {
                        return Err(format!(
                            "{} decoded as {} under pattern {:?}",
                            x, decoded, pattern.runs()
                        ));
                    }
                    if trace.delta >= chosen.modulus {
                        return Err(format!("delta {} >= N {}", trace.delta, chosen.modulus));
                    }
                }
            }
        }
        within_budget(start, Duration::from_secs(900), "localized sweep")
    })());
}

#[test]
fn acceptance_06_triple_threshold_oracles() {
    report("triple-threshold-oracles", (|| {
        let start = Instant::now();
        let mut good_points = 0u64;
        for q in 2u16..=8 {
            for t in 2..2 * usize::from(q) {
                for k in 1..=499i64 {
                    let eps = Rat::new(k, 1000);
                    let fast = classify(q, t, eps).map_err(|e| e.to_string())?;
                    let brute = classify_bruteforce(q, t, eps).map_err(|e| e.to_string())?;
                    if fast.is_good != brute.is_good
                        || fast.s_table != brute.s_table
                        || fast.t1 != brute.t1
                        || fast.t2 != brute.t2
                    {
                        return Err(format!(
                            "classification mismatch at q={}, t={}, eps={}",
                            q, t, eps
                        ));
                    }
                    if !fast.is_good {
                        continue;
                    }
                    good_points += 1;
                    let m_closed = compute_m(&fast).map_err(|e| e.to_string())?;
                    let m_scan = compute_m_direct(&fast).map_err(|e| e.to_string())?;
                    if m_closed != m_scan {
                        return Err(format!(
                            "M mismatch at q={}, t={}, eps={}: {} vs {}",
                            q, t, eps, m_closed, m_scan
                        ));
                    }
                    if t >= 3 {
                        let loc_closed = compute_m_loc(&fast).map_err(|e| e.to_string())?;
                        let loc_scan = compute_m_loc_direct(&fast).map_err(|e| e.to_string())?;
                        if loc_closed != loc_scan {
                            return Err(format!(
                                "M' mismatch at q={}, t={}, eps={}: {} vs {}",
                                q, t, eps, loc_closed, loc_scan
                            ));
                        }
                    }
                }
            }
        }
        ensure(good_points > 10_000, || {
            format!("only {} good grid points — grid too thin", good_points)
        })?;
        within_budget(start, Duration::from_secs(60), "triple grid")
    })());
}

#[test]
fn acceptance_07_counting_lemma() {
    report("counting-lemma", (|| {
        let start = Instant::now();
        let mut plain_premises = 0u64;
        let mut psi_premises = 0u64;
        let mut checked = 0u64;
        let mut run = |q: u16, n: usize, ell: usize, eps: Rat, s: u64| -> Result<(), String> {
            let rep =
                check_counting_lemma(q, n, ell, eps, s, 1 << 24).map_err(|e| e.to_string())?;
            checked += 1;
            if rep.premise_plain {
                plain_premises += 1;
                if !rep.bound_plain_met {
                    return Err(format!(
                        "plain bound fails at q={}, n={}, ell={}, eps={}, s={}",
                        q, n, ell, eps, s
                    ));
                }
            }
            if rep.premise_psi {
                psi_premises += 1;
                if !rep.bound_psi_met {
                    return Err(format!(
                        "psi bound fails at q={}, n={}, ell={}, eps={}, s={}",
                        q, n, ell, eps, s
                    ));
                }
            }
            Ok(())
        };
        for n in [10usize, 12, 14] {
            for ell in [n - 2, n, n + 1] {
                for eps in [Rat::new(9, 20), Rat::new(49, 100), Rat::new(499, 1000)] {
                    for s in [1u64, 2] {
                        run(2, n, ell, eps, s)?;
                    }
                }
            }
        }
        for n in [8usize, 9] {
            for ell in [n - 2, n, n + 1] {
                for eps in [Rat::new(9, 10), Rat::new(99, 100)] {
                    for s in [1u64, 2] {
                        run(3, n, ell, eps, s)?;
                    }
                }
            }
        }
        run(3, 14, 14, Rat::new(99, 100), 1)?;
        ensure(plain_premises > 0, || {
            format!("premise never held across {} reports — grid vacuous", checked)
        })?;
        // The psi-side premise needs ell >= ((q-1)^2/eps^2) ln(2(n+1)sqrt(q));
        // the coefficient alone exceeds 4 and the log factor is ~3.8-4 here,
        // so the threshold tops n + 1 at every point (tightest: q=2, n=14,
        // eps=499/1000 gives ~15.05 > 15). The bound is vacuous at this
        // scale by arithmetic, and this pin keeps that fact visible.
        ensure(psi_premises == 0, || {
            format!(
                "psi premise fired {} times — the vacuity analysis no longer holds",
                psi_premises
            )
        })?;
        within_budget(start, Duration::from_secs(120), "counting-lemma grid")
    })());
}

#[test]
fn acceptance_08_encoder_scale() {
    report("encoder-scale", (|| {
        let grid: [(u16, Rat); 3] =
            [(2, Rat::new(9, 20)), (3, Rat::new(9, 10)), (4, Rat::new(7, 5))];
        for (q, eps) in grid {
            for n in [1_000usize, 10_000] {
                let params = select_params(q, n, eps)
                    .map_err(|e| format!("select_params(q={}, n={}): {}", q, n, e))?;
                let enc = Encoder::new(&params).map_err(|e| e.to_string())?;

                // The criterion's timed probe: one encode + verify at n = 10^4.
                if n == 10_000 {
                    let timed = Instant::now();
                    let source = Word::new(q, vec![0; n - 2]).unwrap();
                    let code = enc.encode(&source).map_err(|e| e.to_string())?;
                    ensure(enc.verify_balance(&code).unwrap(), || {
                        format!("all-zero encode unbalanced at q = {}", q)
                    })?;
                    within_budget(
                        timed,
                        Duration::from_secs(60),
                        &format!("n = 10^4 encode+verify at q = {}", q),
                    )?;
                }

                let mut rng = ChaCha20Rng::seed_from_u64(u64::from(q) * 31 + n as u64);
                let trips = if n == 1_000 { 1_000 } else { 100 };
                for trial in 0..trips {
                    let source = match trial {
                        0 => Word::new(q, vec![0; n - 2]).unwrap(),
                        1 => Word::new(q, vec![(q - 1) as u8; n - 2]).unwrap(),
                        _ => Word::new(
                            q,
                            (0..n - 2).map(|_| rng.gen_range(0..q) as u8).collect(),
                        )
                        .unwrap(),
                    };
                    let code = enc.encode(&source).map_err(|e| e.to_string())?;
                    if code.len() != source.len() + 2 {
                        return Err(format!("redundancy {} != 2", code.len() - source.len()));
                    }
                    let y = psi(&code);
                    if !l1sum(&y).is_multiple_of(u64::from(q)) {
                        return Err(format!("Sum(psi) not 0 mod {} at q = {}", q, q));
                    }
                    if !enc.verify_balance(&code).unwrap() {
                        return Err(format!("unbalanced output at q = {}, n = {}", q, n));
                    }
                    let back = enc.decode(&code).map_err(|e| e.to_string())?;
                    if back != source {
                        return Err(format!("round-trip mismatch at q = {}, n = {}", q, n));
                    }
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn acceptance_09_redundancy_curve() {
    report("redundancy-curve", (|| {
        let eps = Rat::new(1, 10);
        let mut rows = Vec::new();
        for n in 8..=14usize {
            let (params, sketches) = burst_code(2, 2, eps, n);
            let (_, book) =
                best_residue_codebook(&params, &sketches, 1 << 24).map_err(|e| e.to_string())?;
            ensure(!book.is_empty(), || format!("empty codebook at n = {}", n))?;
            let redundancy = n as f64 - (book.len() as f64).log2();
            rows.push((n, book.len(), redundancy));
        }
        for &(n, size, redundancy) in &rows {
            let log2n = (n as f64).log2();
            println!(
                "redundancy-curve n={:2} codewords={:4} redundancy={:6.3} log2(n)={:5.3}",
                n, size, redundancy, log2n
            );
            ensure((redundancy - log2n).abs() <= 8.0, || {
                format!(
                    "redundancy {:.3} strays more than 8 bits from log2(n) = {:.3} at n = {}",
                    redundancy, log2n, n
                )
            })?;
        }
        Ok(())
    })());
}
