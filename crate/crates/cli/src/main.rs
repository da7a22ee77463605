//! `delcode` — batch command-line surface over the deletion-code library.
//!
//! Reports go to stdout as JSON (`--format text` for human-readable lines),
//! every JSON report carries `"schema": 1`, and runs are deterministic for
//! a fixed config and seed.
//!
//! Exit codes: 0 success, 2 invariant violation (bad parameters, decode
//! failure, verification found a conflict), 3 budget exceeded, 4 I/O error.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use delcode::balance::{check_counting_lemma, BalanceError};
use delcode::codes::{
    best_residue_codebook, decode_burst, decode_localized, decode_single, derive_params,
    enumerate_codebook, CodeError, CodeParams, DecodeTrace, Mode, Residues,
};
use delcode::sbl::{select_params, Encoder, EncoderParams, SblError};
use delcode::seq::{
    all_localized_patterns, apply_burst_deletion, apply_localized, burst_ball, l1sum,
    localized_ball, psi, vt, SeqError, Word,
};
use delcode::sketch::{SketchError, SketchSet};
use delcode::triples::{
    classify, classify_bruteforce, compute_m, compute_m_direct, compute_m_loc,
    compute_m_loc_direct, TripleError,
};

type Rat = Ratio<i64>;

const SCHEMA: u32 = 1;

/// Errors carry the exit code they map to.
enum CliError {
    /// Exit 2: a parameter, word, or verification invariant is violated.
    Invariant(String),
    /// Exit 3: an exhaustive job exceeded its word budget.
    Budget(String),
    /// Exit 4: file I/O failed.
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invariant(why) => write!(f, "invariant violation: {}", why),
            CliError::Budget(why) => write!(f, "budget exceeded: {}", why),
            CliError::Io(why) => write!(f, "io error: {}", why),
        }
    }
}

impl From<CodeError> for CliError {
    fn from(e: CodeError) -> CliError {
        match e {
            CodeError::Budget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

impl From<SketchError> for CliError {
    fn from(e: SketchError) -> CliError {
        match e {
            SketchError::Budget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

impl From<BalanceError> for CliError {
    fn from(e: BalanceError) -> CliError {
        match e {
            BalanceError::Budget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

impl From<SblError> for CliError {
    fn from(e: SblError) -> CliError {
        CliError::Invariant(e.to_string())
    }
}

impl From<SeqError> for CliError {
    fn from(e: SeqError) -> CliError {
        CliError::Invariant(e.to_string())
    }
}

impl From<TripleError> for CliError {
    fn from(e: TripleError) -> CliError {
        CliError::Invariant(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "delcode", version, about = "q-ary burst/localized deletion codes")]
struct Cli {
    /// Report format for stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliMode {
    Single,
    Burst,
    Localized,
    BinaryLe3Lite,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Mode {
        match m {
            CliMode::Single => Mode::Single,
            CliMode::Burst => Mode::Burst,
            CliMode::Localized => Mode::Localized,
            CliMode::BinaryLe3Lite => Mode::BinaryLe3Lite,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a triple and derive code or encoder parameters.
    Params(ParamsArgs),
    /// Look up the index-th codeword of an enumerated codebook.
    Encode(EncodeArgs),
    /// Decode a received word against a parameter file.
    Decode(DecodeArgs),
    /// Apply a seeded random channel error to a word.
    Corrupt(CorruptArgs),
    /// Enumerate a codebook and verify pairwise deletion-ball disjointness.
    VerifyCodebook(VerifyArgs),
    /// Measure redundancy of best-residue codebooks over a range of n.
    MeasureRedundancy(MeasureArgs),
    /// Re-check the counting and threshold lemmas against brute force.
    CheckLemmas(CheckLemmasArgs),
    /// Encode blocks through the two-stage balanced encoder.
    SblEncode(SblIoArgs),
    /// Decode blocks produced by sbl-encode.
    SblDecode(SblIoArgs),
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    q: u16,
    /// Burst/localized length budget t (code parameters; omit with --sbl).
    #[arg(long, required_unless_present = "sbl")]
    t: Option<usize>,
    /// Balance slack as a fraction "p/r".
    #[arg(long)]
    eps: String,
    /// Code length n; required for --sbl and for residue derivation.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = CliMode::Burst)]
    mode: CliMode,
    /// Override the VT modulus N (must be at least the mode's floor).
    #[arg(long)]
    modulus: Option<u64>,
    /// Derive residues from this codeword (it anchors the codebook).
    #[arg(long)]
    anchor: Option<String>,
    /// Select two-stage encoder parameters instead of code parameters.
    #[arg(long, default_value_t = false)]
    sbl: bool,
    /// Write the bare parameter JSON here (for later --params use).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct EncodeArgs {
    /// Code parameter JSON produced by `params --out`.
    #[arg(long)]
    params: String,
    /// Lexicographic index into the codebook.
    #[arg(long)]
    index: u64,
    /// Maximum q^n for the enumeration.
    #[arg(long, default_value_t = 1 << 24)]
    budget: u64,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    params: String,
    /// Received word in wire format.
    #[arg(long)]
    word: String,
}

#[derive(Args)]
struct CorruptArgs {
    #[arg(long)]
    params: String,
    /// Transmitted word in wire format.
    #[arg(long)]
    word: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    params: String,
    #[arg(long, default_value_t = 1 << 24)]
    budget: u64,
    /// Worker threads for the ball scan (default: DELCODE_THREADS or 1).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    q: u16,
    #[arg(long)]
    t: usize,
    #[arg(long)]
    eps: String,
    #[arg(long, value_enum, default_value_t = CliMode::Burst)]
    mode: CliMode,
    #[arg(long)]
    n_from: usize,
    #[arg(long)]
    n_to: usize,
    #[arg(long, default_value_t = 1 << 24)]
    budget: u64,
}

#[derive(Args)]
struct CheckLemmasArgs {
    #[command(subcommand)]
    which: LemmaCommand,
}

#[derive(Subcommand)]
enum LemmaCommand {
    /// Exhaustively count balanced words and check both counting bounds.
    Counting {
        #[arg(long)]
        q: u16,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 1)]
        s: u64,
        #[arg(long, default_value_t = 1 << 24)]
        budget: u64,
    },
    /// Compare the closed-form triple classification and thresholds with
    /// brute force at one point.
    Triples {
        #[arg(long)]
        q: u16,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        eps: String,
    },
}

#[derive(Args)]
struct SblIoArgs {
    /// Encoder parameter JSON produced by `params --sbl --out`.
    #[arg(long)]
    params: String,
    /// One word in wire format (alternative to --input).
    #[arg(long, conflicts_with = "input")]
    word: Option<String>,
    /// File holding one long wire-format word; processed in blocks.
    #[arg(long, requires = "output")]
    input: Option<String>,
    /// Output file for the block-concatenated result.
    #[arg(long)]
    output: Option<String>,
}

fn parse_ratio(text: &str) -> Result<Rat, CliError> {
    let (p, r) = text
        .split_once('/')
        .ok_or_else(|| CliError::Invariant(format!("ratio {:?} must be written p/r", text)))?;
    let p: i64 = p
        .trim()
        .parse()
        .map_err(|_| CliError::Invariant(format!("bad numerator in {:?}", text)))?;
    let r: i64 = r
        .trim()
        .parse()
        .map_err(|_| CliError::Invariant(format!("bad denominator in {:?}", text)))?;
    if r <= 0 {
        return Err(CliError::Invariant("ratio denominator must be positive".into()));
    }
    Ok(Rat::new(p, r))
}

fn read_code_params(path: &str) -> Result<CodeParams, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invariant(format!("parameter file {}: {}", path, e)))
}

fn read_encoder_params(path: &str) -> Result<EncoderParams, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invariant(format!("parameter file {}: {}", path, e)))
}

fn sketches_for(params: &CodeParams) -> Result<SketchSet, CliError> {
    Ok(match params.mode {
        Mode::Single => SketchSet::new(),
        Mode::Localized => {
            SketchSet::build_for_localized(params.q, params.n, params.p, params.t)?
        }
        Mode::Burst | Mode::BinaryLe3Lite => {
            SketchSet::build_for_burst(params.q, params.n, params.p, params.t)?
        }
    })
}

/// Residues of `x` under `params`: what the codebook anchored at `x` uses.
fn residues_of(x: &Word, params: &CodeParams, sketches: &SketchSet) -> Result<Residues, CliError> {
    let y = psi(x);
    let q = u64::from(params.q);
    let b = vt(&y) % params.modulus;
    let c = match params.mode {
        Mode::Single => 0,
        _ => (l1sum(&y) % ((params.t as u64 + 1) * q)) / q,
    };
    let mut a = std::collections::BTreeMap::new();
    for t_prime in params.constrained_t_primes() {
        let (t1, t2) = params.sketch_key(t_prime);
        let table = sketches.get(t1, t2).ok_or_else(|| {
            CliError::Invariant(format!("no sketch table for ({}, {})", t1, t2))
        })?;
        a.insert(t_prime, table.value(x)?);
    }
    Ok(Residues { b, c, a })
}

fn emit<T: Serialize>(format: Format, report: &T, text: impl Fn() -> String) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report).unwrap()),
        Format::Text => println!("{}", text()),
    }
}

#[derive(Serialize)]
struct TripleReport {
    q: u16,
    t: usize,
    eps: String,
    is_good: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    m: Option<String>,
    #[serde(rename = "M_loc", skip_serializing_if = "Option::is_none")]
    m_loc: Option<String>,
}

fn triple_report(q: u16, t: usize, eps: Rat) -> Result<TripleReport, CliError> {
    let cert = classify(q, t, eps)?;
    let (m, m_loc) = if cert.is_good {
        let m = compute_m(&cert)?;
        let m_loc = if t >= 3 { Some(compute_m_loc(&cert)?.to_string()) } else { None };
        (Some(m.to_string()), m_loc)
    } else {
        (None, None)
    };
    Ok(TripleReport {
        q,
        t,
        eps: format!("{}/{}", eps.numer(), eps.denom()),
        is_good: cert.is_good,
        reason: cert.reason,
        m,
        m_loc,
    })
}

fn cmd_params(format: Format, args: ParamsArgs) -> Result<(), CliError> {
    let eps = parse_ratio(&args.eps)?;

    if args.sbl {
        let n = args
            .n
            .ok_or_else(|| CliError::Invariant("--sbl requires --n".into()))?;
        let params = select_params(args.q, n, eps)?;
        Encoder::new(&params)?; // re-validate the full invariant set
        #[derive(Serialize)]
        struct SblParamsReport {
            schema: u32,
            kind: &'static str,
            params: EncoderParams,
        }
        let report = SblParamsReport { schema: SCHEMA, kind: "sbl-encoder", params };
        if let Some(out) = &args.out {
            fs::write(out, serde_json::to_string_pretty(&report.params).unwrap())?;
        }
        emit(format, &report, || {
            format!(
                "sbl encoder: q={} n={} ell={} ell1={} s={} eta1={} eta2={} delta={} C={:.3}",
                report.params.q,
                report.params.n,
                report.params.ell,
                report.params.ell1,
                report.params.s,
                report.params.eta1,
                report.params.eta2,
                report.params.delta,
                report.params.c
            )
        });
        return Ok(());
    }

    let t = args.t.expect("clap enforces --t without --sbl");
    let mode: Mode = args.mode.into();
    // Single-deletion codes take t = 1, below the triple machinery's range.
    let certificate = if t >= 2 { Some(triple_report(args.q, t, eps)?) } else { None };

    let mut params = None;
    if let Some(n) = args.n.or_else(|| {
        args.anchor
            .as_ref()
            .and_then(|a| Word::parse(args.q, a).ok().map(|w| w.len()))
    }) {
        let mut p = derive_params(args.q, t, eps, n, mode)?;
        if let Some(modulus) = args.modulus {
            p = p.with_modulus(modulus)?;
        }
        if let Some(anchor) = &args.anchor {
            let x = Word::parse(args.q, anchor)?;
            if x.len() != n {
                return Err(CliError::Invariant(format!(
                    "anchor length {} does not match n = {}",
                    x.len(),
                    n
                )));
            }
            let sketches = sketches_for(&p)?;
            let residues = residues_of(&x, &p, &sketches)?;
            p = p.with_residues(residues)?;
        }
        params = Some(p);
    }

    #[derive(Serialize)]
    struct ParamsReport {
        schema: u32,
        kind: &'static str,
        #[serde(skip_serializing_if = "Option::is_none")]
        certificate: Option<TripleReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        params: Option<CodeParams>,
    }
    let report = ParamsReport { schema: SCHEMA, kind: "code", certificate, params };
    if let Some(out) = &args.out {
        let inner = report.params.as_ref().ok_or_else(|| {
            CliError::Invariant("--out needs derived parameters; pass --n".into())
        })?;
        fs::write(out, serde_json::to_string_pretty(inner).unwrap())?;
    }
    emit(format, &report, || {
        let mut line = String::new();
        if let Some(cert) = &report.certificate {
            line.push_str(&format!(
                "triple (q={}, t={}, eps={}): good={}",
                cert.q, cert.t, cert.eps, cert.is_good
            ));
            if let Some(m) = &cert.m {
                line.push_str(&format!(" M={}", m));
            }
            if let Some(m) = &cert.m_loc {
                line.push_str(&format!(" M_loc={}", m));
            }
        }
        if let Some(p) = &report.params {
            if !line.is_empty() {
                line.push('\n');
            }
            line.push_str(&format!(
                "params: n={} ell={} P={} N={} mode={} residues={}",
                p.n,
                p.ell,
                p.p,
                p.modulus,
                p.mode,
                if p.residues.is_some() { "set" } else { "unset" }
            ));
        }
        line
    });
    Ok(())
}

fn cmd_encode(format: Format, args: EncodeArgs) -> Result<(), CliError> {
    let params = read_code_params(&args.params)?;
    let sketches = sketches_for(&params)?;
    let book = enumerate_codebook(&params, &sketches, args.budget)?;
    let word = book.get(args.index as usize).ok_or_else(|| {
        CliError::Invariant(format!(
            "index {} out of range: codebook has {} words",
            args.index,
            book.len()
        ))
    })?;
    #[derive(Serialize)]
    struct EncodeReport {
        schema: u32,
        index: u64,
        codewords: usize,
        word: String,
    }
    let report = EncodeReport {
        schema: SCHEMA,
        index: args.index,
        codewords: book.len(),
        word: word.to_string(),
    };
    emit(format, &report, || report.word.to_string());
    Ok(())
}

fn cmd_decode(format: Format, args: DecodeArgs) -> Result<(), CliError> {
    let params = read_code_params(&args.params)?;
    let received = Word::parse(params.q, &args.word)?;
    let (decoded, trace): (Word, Option<DecodeTrace>) = match params.mode {
        Mode::Single => (decode_single(&received, &params)?, None),
        Mode::Localized => {
            let sketches = sketches_for(&params)?;
            let (x, tr) = decode_localized(&received, &params, &sketches)?;
            (x, Some(tr))
        }
        Mode::Burst | Mode::BinaryLe3Lite => {
            let sketches = sketches_for(&params)?;
            let (x, tr) = decode_burst(&received, &params, &sketches)?;
            (x, Some(tr))
        }
    };
    #[derive(Serialize)]
    struct DecodeReport {
        schema: u32,
        received: String,
        decoded: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        trace: Option<DecodeTrace>,
    }
    let report = DecodeReport {
        schema: SCHEMA,
        received: args.word.trim().to_string(),
        decoded: decoded.to_string(),
        trace,
    };
    emit(format, &report, || match &report.trace {
        Some(tr) => format!(
            "decoded {} (t'={} delta={} delta_sum={} j={} sigma={} window={}..{})",
            report.decoded,
            tr.t_prime,
            tr.delta,
            tr.delta_sum,
            tr.j,
            tr.sigma_j,
            tr.window.0,
            tr.window.1
        ),
        None => format!("decoded {}", report.decoded),
    });
    Ok(())
}

fn cmd_corrupt(format: Format, args: CorruptArgs) -> Result<(), CliError> {
    let params = read_code_params(&args.params)?;
    let x = Word::parse(params.q, &args.word)?;
    if x.len() != params.n {
        return Err(CliError::Invariant(format!(
            "word length {} does not match n = {}",
            x.len(),
            params.n
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let (received, description) = match params.mode {
        Mode::Single => {
            let i = rng.gen_range(1..=params.n);
            (apply_burst_deletion(&x, i, 1)?, format!("deletion at {}", i))
        }
        Mode::Burst | Mode::BinaryLe3Lite => {
            let len = rng.gen_range(1..=params.t.min(params.n));
            let i = rng.gen_range(1..=params.n - len + 1);
            (apply_burst_deletion(&x, i, len)?, format!("burst of {} at {}", len, i))
        }
        Mode::Localized => {
            // Singles plus every multi-run pattern, drawn uniformly.
            let patterns = all_localized_patterns(params.n, params.t);
            let total = params.n + patterns.len();
            let pick = rng.gen_range(0..total);
            if pick < params.n {
                (apply_burst_deletion(&x, pick + 1, 1)?, format!("deletion at {}", pick + 1))
            } else {
                let pattern = &patterns[pick - params.n];
                (apply_localized(&x, pattern)?, format!("pattern {:?}", pattern.runs()))
            }
        }
    };
    #[derive(Serialize)]
    struct CorruptReport {
        schema: u32,
        generator: &'static str,
        seed: u64,
        mode: String,
        transmitted: String,
        error: String,
        received: String,
    }
    let report = CorruptReport {
        schema: SCHEMA,
        generator: "chacha20",
        seed: args.seed,
        mode: params.mode.to_string(),
        transmitted: x.to_string(),
        error: description,
        received: received.to_string(),
    };
    emit(format, &report, || {
        format!("{} --[{}]--> {}", report.transmitted, report.error, report.received)
    });
    Ok(())
}

fn thread_count(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("DELCODE_THREADS").ok().and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .clamp(1, 64)
}

fn cmd_verify_codebook(format: Format, args: VerifyArgs) -> Result<(), CliError> {
    let params = read_code_params(&args.params)?;
    let sketches = sketches_for(&params)?;
    let (chosen, book) = if params.residues.is_some() {
        let book = enumerate_codebook(&params, &sketches, args.budget)?;
        (params, book)
    } else {
        best_residue_codebook(&params, &sketches, args.budget)?
    };
    if book.is_empty() {
        return Err(CliError::Invariant("codebook is empty".into()));
    }

    // Each worker builds ball entries for a slice of the book; entries are
    // merged into one map afterwards, so the scan order cannot affect the
    // verdict or the report.
    let threads = thread_count(args.threads);
    let ball = |x: &Word| -> Vec<Word> {
        match chosen.mode {
            Mode::Single => burst_ball(x, 1).into_iter().collect(),
            Mode::Localized => localized_ball(x, chosen.t).into_iter().collect(),
            Mode::Burst | Mode::BinaryLe3Lite => burst_ball(x, chosen.t).into_iter().collect(),
        }
    };
    let chunks: Vec<Vec<(Vec<u8>, usize)>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for worker in 0..threads {
            let book = &book;
            let ball = &ball;
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                let mut idx = worker;
                while idx < book.len() {
                    for r in ball(&book[idx]) {
                        out.push((r.symbols().to_vec(), idx));
                    }
                    idx += threads;
                }
                out
            }));
        }
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut owner: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut conflict: Option<(usize, usize)> = None;
    for chunk in chunks {
        for (received, idx) in chunk {
            if let Some(prev) = owner.insert(received, idx) {
                if prev != idx {
                    conflict = Some((prev.min(idx), prev.max(idx)));
                }
            }
        }
    }

    #[derive(Serialize)]
    struct VerifyReport {
        schema: u32,
        mode: String,
        n: usize,
        t: usize,
        codewords: usize,
        pairs: u64,
        disjoint: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        conflict: Option<(String, String)>,
    }
    let report = VerifyReport {
        schema: SCHEMA,
        mode: chosen.mode.to_string(),
        n: chosen.n,
        t: chosen.t,
        codewords: book.len(),
        pairs: (book.len() as u64) * (book.len() as u64 - 1) / 2,
        disjoint: conflict.is_none(),
        conflict: conflict.map(|(a, b)| (book[a].to_string(), book[b].to_string())),
    };
    emit(format, &report, || {
        format!(
            "disjoint: {} ({} codewords, {} pairs)",
            report.disjoint, report.codewords, report.pairs
        )
    });
    if let Some((a, b)) = conflict {
        return Err(CliError::Invariant(format!(
            "deletion balls of {} and {} intersect",
            book[a], book[b]
        )));
    }
    Ok(())
}

fn cmd_measure_redundancy(format: Format, args: MeasureArgs) -> Result<(), CliError> {
    let eps = parse_ratio(&args.eps)?;
    if args.n_from > args.n_to {
        return Err(CliError::Invariant("n-from exceeds n-to".into()));
    }
    #[derive(Serialize)]
    struct Row {
        n: usize,
        codewords: usize,
        redundancy_bits: f64,
        log2_n: f64,
    }
    let mut rows = Vec::new();
    for n in args.n_from..=args.n_to {
        let params = derive_params(args.q, args.t, eps, n, args.mode.into())?;
        let sketches = sketches_for(&params)?;
        let (_, book) = best_residue_codebook(&params, &sketches, args.budget)?;
        if book.is_empty() {
            return Err(CliError::Invariant(format!("empty codebook at n = {}", n)));
        }
        rows.push(Row {
            n,
            codewords: book.len(),
            redundancy_bits: (f64::from(args.q).powi(n as i32)).log2()
                - (book.len() as f64).log2(),
            log2_n: (n as f64).log2(),
        });
    }
    #[derive(Serialize)]
    struct MeasureReport {
        schema: u32,
        q: u16,
        t: usize,
        eps: String,
        mode: String,
        rows: Vec<Row>,
    }
    let report = MeasureReport {
        schema: SCHEMA,
        q: args.q,
        t: args.t,
        eps: args.eps.clone(),
        mode: Mode::from(args.mode).to_string(),
        rows,
    };
    emit(format, &report, || {
        report
            .rows
            .iter()
            .map(|r| {
                format!(
                    "n={:3} codewords={:6} redundancy={:.3} log2(n)={:.3}",
                    r.n, r.codewords, r.redundancy_bits, r.log2_n
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    });
    Ok(())
}

fn cmd_check_lemmas(format: Format, args: CheckLemmasArgs) -> Result<(), CliError> {
    match args.which {
        LemmaCommand::Counting { q, n, ell, eps, s, budget } => {
            let eps = parse_ratio(&eps)?;
            let rep = check_counting_lemma(q, n, ell, eps, s, budget)?;
            #[derive(Serialize)]
            struct CountingReport {
                schema: u32,
                q: u16,
                n: usize,
                ell: usize,
                eps: String,
                s: u64,
                strong_count: String,
                psi_strong_count: String,
                premise_plain: bool,
                premise_psi: bool,
                bound_plain_met: bool,
                bound_psi_met: bool,
            }
            let report = CountingReport {
                schema: SCHEMA,
                q: rep.q,
                n: rep.n,
                ell: rep.ell,
                eps: format!("{}/{}", rep.eps.numer(), rep.eps.denom()),
                s: rep.s,
                strong_count: rep.strong_count.to_string(),
                psi_strong_count: rep.psi_strong_count.to_string(),
                premise_plain: rep.premise_plain,
                premise_psi: rep.premise_psi,
                bound_plain_met: rep.bound_plain_met,
                bound_psi_met: rep.bound_psi_met,
            };
            let violated = (report.premise_plain && !report.bound_plain_met)
                || (report.premise_psi && !report.bound_psi_met);
            emit(format, &report, || {
                format!(
                    "strong={} psi_strong={} plain: premise={} met={} | psi: premise={} met={}",
                    report.strong_count,
                    report.psi_strong_count,
                    report.premise_plain,
                    report.bound_plain_met,
                    report.premise_psi,
                    report.bound_psi_met
                )
            });
            if violated {
                return Err(CliError::Invariant("a counting bound fails under its premise".into()));
            }
        }
        LemmaCommand::Triples { q, t, eps } => {
            let eps = parse_ratio(&eps)?;
            let fast = classify(q, t, eps)?;
            let brute = classify_bruteforce(q, t, eps)?;
            let classify_agrees = fast.is_good == brute.is_good && fast.s_table == brute.s_table;
            let (m_agrees, m_loc_agrees) = if fast.is_good {
                let m = compute_m(&fast)? == compute_m_direct(&fast)?;
                let m_loc = if t >= 3 {
                    Some(compute_m_loc(&fast)? == compute_m_loc_direct(&fast)?)
                } else {
                    None
                };
                (Some(m), m_loc)
            } else {
                (None, None)
            };
            #[derive(Serialize)]
            struct TriplesLemmaReport {
                schema: u32,
                certificate: TripleReport,
                classify_agrees: bool,
                #[serde(skip_serializing_if = "Option::is_none")]
                m_agrees: Option<bool>,
                #[serde(skip_serializing_if = "Option::is_none")]
                m_loc_agrees: Option<bool>,
            }
            let report = TriplesLemmaReport {
                schema: SCHEMA,
                certificate: triple_report(q, t, eps)?,
                classify_agrees,
                m_agrees,
                m_loc_agrees,
            };
            let all_agree = report.classify_agrees
                && report.m_agrees.unwrap_or(true)
                && report.m_loc_agrees.unwrap_or(true);
            emit(format, &report, || {
                format!(
                    "classify agrees: {}; M agrees: {:?}; M' agrees: {:?}",
                    report.classify_agrees, report.m_agrees, report.m_loc_agrees
                )
            });
            if !all_agree {
                return Err(CliError::Invariant(
                    "closed forms disagree with brute force".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Split one long wire-format word into blocks of `block_len`.
fn into_blocks(word: &Word, block_len: usize) -> Result<Vec<Word>, CliError> {
    if block_len == 0 || !word.len().is_multiple_of(block_len) {
        return Err(CliError::Invariant(format!(
            "input length {} is not a multiple of the block length {}",
            word.len(),
            block_len
        )));
    }
    Ok(word
        .symbols()
        .chunks(block_len)
        .map(|chunk| Word::new(word.q(), chunk.to_vec()).expect("symbols already valid"))
        .collect())
}

fn join_blocks(q: u16, blocks: &[Word]) -> Word {
    let symbols = blocks.iter().flat_map(|b| b.symbols().iter().copied()).collect();
    Word::new(q, symbols).expect("symbols already valid")
}

fn run_sbl(format: Format, args: SblIoArgs, encode: bool) -> Result<(), CliError> {
    let params = read_encoder_params(&args.params)?;
    let enc = Encoder::new(&params)?;
    let block_len = if encode { params.n - 2 } else { params.n };

    let text = match (&args.word, &args.input) {
        (Some(w), None) => w.clone(),
        (None, Some(path)) => fs::read_to_string(path)?,
        _ => return Err(CliError::Invariant("pass exactly one of --word or --input".into())),
    };
    let long = Word::parse(params.q, &text)?;
    let blocks = into_blocks(&long, block_len)?;
    let mut out_blocks = Vec::with_capacity(blocks.len());
    for block in &blocks {
        out_blocks.push(if encode { enc.encode(block)? } else { enc.decode(block)? });
    }
    let joined = join_blocks(params.q, &out_blocks);

    #[derive(Serialize)]
    struct SblReport {
        schema: u32,
        operation: &'static str,
        blocks: usize,
        block_in: usize,
        block_out: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        word: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        output: Option<String>,
    }
    let to_file = args.output.clone();
    if let Some(path) = &to_file {
        fs::write(path, joined.to_string())?;
    }
    let report = SblReport {
        schema: SCHEMA,
        operation: if encode { "sbl-encode" } else { "sbl-decode" },
        blocks: blocks.len(),
        block_in: block_len,
        block_out: if encode { params.n } else { params.n - 2 },
        word: if to_file.is_none() { Some(joined.to_string()) } else { None },
        output: to_file,
    };
    emit(format, &report, || match (&report.word, &report.output) {
        (Some(w), _) => w.clone(),
        (None, Some(path)) => format!("{} blocks -> {}", report.blocks, path),
        _ => unreachable!(),
    });
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Params(args) => cmd_params(cli.format, args),
        Command::Encode(args) => cmd_encode(cli.format, args),
        Command::Decode(args) => cmd_decode(cli.format, args),
        Command::Corrupt(args) => cmd_corrupt(cli.format, args),
        Command::VerifyCodebook(args) => cmd_verify_codebook(cli.format, args),
        Command::MeasureRedundancy(args) => cmd_measure_redundancy(cli.format, args),
        Command::CheckLemmas(args) => cmd_check_lemmas(cli.format, args),
        Command::SblEncode(args) => run_sbl(cli.format, args, true),
        Command::SblDecode(args) => run_sbl(cli.format, args, false),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("delcode: {}", e);
            ExitCode::from(e.code())
        }
    }
}
