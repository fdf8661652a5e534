//! Command-line front end: chain expressions, subcommands, and exact output.
//!
//! Chain grammar (whitespace allowed between tokens):
//!
//! ```text
//! chain  := ['+'|'-'] term (('+'|'-') term)*  |  '0'
//! term   := [coeff ['*']] factor+
//! coeff  := int | int '/' int
//! factor := atom ['^' ['-'] int]
//! atom   := letter+ | '[' factor+ ',' factor+ ']'
//! ```
//!
//! A run of letters is one factor, so `ab^2` is `abab`. Lowercase letters are
//! generators in alphabetical order, uppercase their inverses, and `[u,v]` is
//! `u v u^-1 v^-1`.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::freegroup::{Chain, GroupError, Letter, Word, MAX_RANK};
use crate::immersion::{self, CriterionReport, ImmersionError};
use crate::ratlp::{LpError, DEFAULT_MAX_PIVOTS};
use crate::rotation::{self, RotMethod, RotationError};
use crate::sclenc::{self, Limits, SclError, DEFAULT_MAX_LETTERS};
use crate::surfcert::{self, CertError, CertificateFile, SearchLimits, SurfaceCertificate};
use crate::Rational;

/// Soft wall-clock budget per command, in seconds; exceeding it only warns.
pub const SOFT_BUDGET_SECS: u64 = 60;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainExpression {
    pub source: String,
    pub chain: Chain,
}

/// Parses and canonicalizes a chain. The rank is the largest generator used
/// (at least 1) unless given.
pub fn parse_chain(text: &str, rank: Option<usize>) -> Result<ChainExpression, ParseError> {
    let mut p = ExprParser::new(text);
    let terms = p.chain()?;
    let rank = p.resolve_rank(rank)?;
    let terms = terms
        .into_iter()
        .map(|(c, letters)| Ok((c, Word::new(letters, rank)?.reduce())))
        .collect::<Result<Vec<_>, GroupError>>()
        .map_err(|e| ParseError { offset: 0, message: e.to_string() })?;
    let chain = Chain::new(rank, terms).map_err(|e| ParseError { offset: 0, message: e.to_string() })?;
    Ok(ChainExpression { source: text.to_string(), chain: chain.canonicalize() })
}

/// Parses a single group element (`factor+`), reduced.
pub fn parse_word(text: &str, rank: Option<usize>) -> Result<Word, ParseError> {
    let mut p = ExprParser::new(text);
    p.skip_ws();
    let letters = p.factors()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.error(format!("unexpected '{c}'")));
    }
    let rank = p.resolve_rank(rank)?;
    Word::new(letters, rank).map(|w| w.reduce()).map_err(|e| ParseError { offset: 0, message: e.to_string() })
}

struct ExprParser {
    chars: Vec<(usize, char)>,
    len: usize,
    pos: usize,
    max_generator: Option<(usize, usize)>,
}

impl ExprParser {
    fn new(text: &str) -> Self {
        ExprParser { chars: text.char_indices().collect(), len: text.len(), pos: 0, max_generator: None }
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.len, |(o, _)| *o)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { offset: self.offset(), message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn resolve_rank(&self, rank: Option<usize>) -> Result<usize, ParseError> {
        let used = self.max_generator.map_or(1, |(g, _)| g);
        match rank {
            Some(r) if r > MAX_RANK => Err(ParseError { offset: 0, message: format!("rank {r} exceeds {MAX_RANK}") }),
            Some(r) if r < used => {
                let offset = self.max_generator.map_or(0, |(_, o)| o);
                Err(ParseError { offset, message: format!("letter outside rank {r}") })
            }
            Some(r) => Ok(r),
            None => Ok(used),
        }
    }

    fn chain(&mut self) -> Result<Vec<(Rational, Vec<Letter>)>, ParseError> {
        self.skip_ws();
        if self.peek() == Some('0') {
            let save = self.pos;
            self.pos += 1;
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(Vec::new());
            }
            self.pos = save;
        }
        let mut terms = Vec::new();
        let mut sign = match self.peek() {
            Some('-') => {
                self.pos += 1;
                -1
            }
            Some('+') => {
                self.pos += 1;
                1
            }
            _ => 1,
        };
        loop {
            self.skip_ws();
            let (c, letters) = self.term()?;
            terms.push((if sign < 0 { -c } else { c }, letters));
            self.skip_ws();
            sign = match self.peek() {
                None => return Ok(terms),
                Some('+') => 1,
                Some('-') => -1,
                Some(c) => return Err(self.error(format!("unexpected '{c}'"))),
            };
            self.pos += 1;
        }
    }

    fn integer(&mut self) -> Option<BigInt> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        let digits: String = self.chars[start..self.pos].iter().map(|(_, c)| c).collect();
        digits.parse().ok()
    }

    fn term(&mut self) -> Result<(Rational, Vec<Letter>), ParseError> {
        let coeff_offset = self.offset();
        let mut coefficient = Rational::one();
        if let Some(n) = self.integer() {
            self.skip_ws();
            let mut d = BigInt::one();
            if self.peek() == Some('/') {
                self.pos += 1;
                self.skip_ws();
                d = self.integer().ok_or_else(|| self.error("expected a denominator"))?;
                if d.is_zero() {
                    return Err(ParseError { offset: coeff_offset, message: "zero denominator".into() });
                }
                self.skip_ws();
            }
            coefficient = Rational::new(n, d);
            if self.peek() == Some('*') {
                self.pos += 1;
                self.skip_ws();
            }
        }
        let letters = self.factors()?;
        Ok((coefficient, letters))
    }

    fn starts_factor(&self) -> bool {
        self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '[')
    }

    fn factors(&mut self) -> Result<Vec<Letter>, ParseError> {
        if !self.starts_factor() {
            return Err(match self.peek() {
                Some(c) => self.error(format!("expected a word, found '{c}'")),
                None => self.error("expected a word"),
            });
        }
        let mut out = Vec::new();
        loop {
            out.extend(self.factor()?);
            let save = self.pos;
            self.skip_ws();
            if !self.starts_factor() {
                self.pos = save;
                return Ok(out);
            }
        }
    }

    fn factor(&mut self) -> Result<Vec<Letter>, ParseError> {
        let atom = if self.peek() == Some('[') {
            self.pos += 1;
            self.skip_ws();
            let u = self.factors()?;
            self.skip_ws();
            if self.peek() != Some(',') {
                return Err(self.error("expected ','"));
            }
            self.pos += 1;
            self.skip_ws();
            let v = self.factors()?;
            self.skip_ws();
            if self.peek() != Some(']') {
                return Err(self.error("expected ']'"));
            }
            self.pos += 1;
            let inv = |w: &[Letter]| w.iter().rev().map(|l| l.inverse()).collect::<Vec<_>>();
            [u.clone(), v.clone(), inv(&u), inv(&v)].concat()
        } else {
            let mut letters = Vec::new();
            while let Some(c) = self.peek().filter(char::is_ascii_alphabetic) {
                let l = Letter::from_char(c).map_err(|e| self.error(e.to_string()))?;
                if self.max_generator.is_none_or(|(g, _)| l.generator() > g) {
                    self.max_generator = Some((l.generator(), self.offset()));
                }
                letters.push(l);
                self.pos += 1;
            }
            letters
        };
        let save = self.pos;
        self.skip_ws();
        if self.peek() != Some('^') {
            self.pos = save;
            return Ok(atom);
        }
        let caret = self.offset();
        self.pos += 1;
        self.skip_ws();
        let negative = self.peek() == Some('-');
        if negative {
            self.pos += 1;
        }
        let missing = || ParseError { offset: caret, message: "expected an integer exponent after '^'".into() };
        let n: usize = self.integer().ok_or_else(missing)?.try_into().map_err(|_| missing())?;
        let base: Vec<Letter> = if negative { atom.iter().rev().map(|l| l.inverse()).collect() } else { atom };
        Ok(base.repeat(n))
    }
}

/// Exact rational as `p/q` with `q > 0`.
pub fn fmt_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Turning,
    Dynamical,
    Both,
}

#[derive(Debug, Parser)]
#[command(
    name = "sclkit",
    version,
    about = "Exact stable commutator length and the rotation criterion for immersed surfaces"
)]
struct Cli {
    /// Emit one JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Cap on letters in the prepared chain.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_LETTERS)]
    max_letters: usize,
    /// Cap on simplex pivots per solve.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_PIVOTS)]
    max_pivots: u64,
    /// Free group rank (default: largest generator used).
    #[arg(long, global = true)]
    rank: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact scl of a chain.
    Scl {
        #[arg(allow_hyphen_values = true)]
        chain: String,
    },
    /// Rotation number of a rank-2 boundary chain.
    Rot {
        #[arg(allow_hyphen_values = true)]
        chain: String,
        #[arg(long, value_enum, default_value = "both")]
        method: MethodArg,
    },
    /// Whether scl equals rot/2, for the chain and its reverse.
    Immersed {
        #[arg(allow_hyphen_values = true)]
        chain: String,
    },
    /// The criterion on C + R*abAB for R = 0..=max-R.
    Stabilize {
        #[arg(allow_hyphen_values = true)]
        chain: String,
        #[arg(long = "max-R", default_value_t = 4)]
        max_r: u64,
    },
    /// The criterion on w (abAB)^n over a range of n.
    Scan {
        #[arg(long)]
        w: String,
        /// Inclusive range `lo..hi`.
        #[arg(long = "n-range", default_value = "1..4", allow_hyphen_values = true)]
        n_range: String,
    },
    /// scl of (abAB)^n c w C in rank 3 against (|n + rot(w)| + 1)/2.
    Corollary {
        #[arg(long)]
        w: String,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
    },
    /// Check a band-surface certificate file, searching for a matching if it has none.
    Certify {
        #[arg(long)]
        file: PathBuf,
        /// Base chain to compare against (overrides the file's chain line).
        #[arg(long, allow_hyphen_values = true)]
        chain: Option<String>,
        /// Write the checked certificate, including pairs, to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Upper bound for scl from the best band surface of the given degree.
    Matchbound {
        #[arg(allow_hyphen_values = true)]
        chain: String,
        #[arg(long, default_value_t = 1)]
        degree: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Parse(String),
    Usage(String),
    NotBoundary(String),
    Resource(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Usage(_) => 2,
            CliError::NotBoundary(_) => 3,
            CliError::Resource(_) => 4,
            CliError::Invariant(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m)
            | CliError::Usage(m)
            | CliError::NotBoundary(m)
            | CliError::Resource(m)
            | CliError::Invariant(m) => m,
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<SclError> for CliError {
    fn from(e: SclError) -> Self {
        let m = e.to_string();
        match e {
            SclError::NotBoundary(_) => CliError::NotBoundary(m),
            ref e if e.is_resource_limit() => CliError::Resource(m),
            SclError::Group(_) => CliError::Usage(m),
            SclError::Invariant(_) | SclError::Lp(LpError::DimensionMismatch(_)) | SclError::Lp(_) => {
                CliError::Invariant(m)
            }
            SclError::TooManyLetters { .. } => CliError::Resource(m),
        }
    }
}

impl From<RotationError> for CliError {
    fn from(e: RotationError) -> Self {
        let m = e.to_string();
        match e {
            RotationError::NotBoundary => CliError::NotBoundary(m),
            RotationError::Margin { .. } | RotationError::NotHyperbolic(_) | RotationError::Determinant(_) => {
                CliError::Invariant(m)
            }
            RotationError::Rank(_)
            | RotationError::NotClosed(_)
            | RotationError::NotCyclicallyReduced(_)
            | RotationError::Identity => CliError::Usage(m),
        }
    }
}

impl From<ImmersionError> for CliError {
    fn from(e: ImmersionError) -> Self {
        let m = e.to_string();
        match e {
            ImmersionError::NotBoundary => CliError::NotBoundary(m),
            ImmersionError::Rank(_) | ImmersionError::NotCommutator(_) | ImmersionError::Group(_) => CliError::Usage(m),
            ImmersionError::Bavard { .. } | ImmersionError::Tail { .. } => CliError::Invariant(m),
            ImmersionError::Scl(e) => e.into(),
            ImmersionError::Rotation(e) => e.into(),
        }
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> Self {
        let m = e.to_string();
        match e {
            CertError::ResourceLimit(_) => CliError::Resource(m),
            CertError::Scl(e) => e.into(),
            CertError::InvalidMatching(_)
            | CertError::InvalidArcs(_)
            | CertError::Format { .. }
            | CertError::Group(_)
            | CertError::BoundaryMismatch { .. } => CliError::Usage(m),
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Report {
    human: Vec<String>,
    result: Value,
    chain: Option<String>,
}

/// Runs one command line (including the program name) to completion.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let limits = Limits { max_letters: cli.max_letters, max_pivots: cli.max_pivots };
    let name = command_name(&cli.command);
    let start = Instant::now();
    let result = dispatch(&cli, &limits);
    let elapsed = start.elapsed();
    let mut stderr = String::new();
    if elapsed.as_secs() >= SOFT_BUDGET_SECS {
        stderr.push_str(&format!(
            "warning: {name} took {:.1} s, over the {SOFT_BUDGET_SECS} s budget\n",
            elapsed.as_secs_f64()
        ));
    }
    let limits_json = json!({ "max_letters": limits.max_letters, "max_pivots": limits.max_pivots });
    let timing = json!({ "elapsed_ms": elapsed.as_secs_f64() * 1000.0 });
    match result {
        Ok(report) => {
            let stdout = if cli.json {
                let doc = json!({
                    "command": name,
                    "chain": report.chain,
                    "limits": limits_json,
                    "result": report.result,
                    "timing": timing,
                });
                format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"))
            } else {
                report.human.iter().map(|l| format!("{l}\n")).collect()
            };
            Outcome { code: 0, stdout, stderr }
        }
        Err(e) => {
            let code = e.exit_code();
            if cli.json {
                let doc = json!({
                    "command": name,
                    "error": { "code": code, "message": e.message() },
                    "limits": limits_json,
                    "timing": timing,
                });
                let stdout = format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"));
                Outcome { code, stdout, stderr }
            } else {
                stderr.push_str(&format!("error: {}\n", e.message()));
                Outcome { code, stdout: String::new(), stderr }
            }
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Scl { .. } => "scl",
        Command::Rot { .. } => "rot",
        Command::Immersed { .. } => "immersed",
        Command::Stabilize { .. } => "stabilize",
        Command::Scan { .. } => "scan",
        Command::Corollary { .. } => "corollary",
        Command::Certify { .. } => "certify",
        Command::Matchbound { .. } => "matchbound",
    }
}

fn dispatch(cli: &Cli, limits: &Limits) -> Result<Report, CliError> {
    let chain_arg = |s: &str| parse_chain(s, cli.rank).map(|e| e.chain);
    match &cli.command {
        Command::Scl { chain } => scl_command(&chain_arg(chain)?, limits),
        Command::Rot { chain, method } => rot_command(&chain_arg(chain)?, *method),
        Command::Immersed { chain } => immersed_command(&chain_arg(chain)?, limits),
        Command::Stabilize { chain, max_r } => stabilize_command(&chain_arg(chain)?, *max_r, limits),
        Command::Scan { w, n_range } => {
            let w = parse_word(w, Some(cli.rank.unwrap_or(2)))?;
            scan_command(&w, parse_range(n_range)?, limits)
        }
        Command::Corollary { w, n } => {
            let w = parse_word(w, Some(cli.rank.unwrap_or(2)))?;
            corollary_command(&w, *n, limits)
        }
        Command::Certify { file, chain, out } => certify_command(file, chain.as_deref(), out.as_ref(), limits),
        Command::Matchbound { chain, degree } => matchbound_command(&chain_arg(chain)?, *degree),
    }
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<i64>, CliError> {
    let bad = || CliError::Parse(format!("range '{s}' is not of the form lo..hi"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn q(r: &Rational) -> String {
    fmt_rational(r)
}

fn certificate_json(cert: &SurfaceCertificate) -> Value {
    json!({
        "euler_characteristic": cert.euler_characteristic,
        "degree": cert.degree,
        "boundary": cert.boundary.to_string(),
        "provenance": cert.provenance,
    })
}

fn scl_command(chain: &Chain, limits: &Limits) -> Result<Report, CliError> {
    let solution = sclenc::solve(chain, limits)?;
    let cert = sclenc::decode_certificate(&solution)?;
    let enc = &solution.encoding;
    let human = vec![
        format!("chain = {chain}"),
        format!("scl = {}", q(&solution.value)),
        format!(
            "certificate: chi = {}, degree = {}, boundary = {}",
            cert.euler_characteristic, cert.degree, cert.boundary
        ),
        format!(
            "lp: {} variables, {} constraints, {} pivots, duality verified",
            enc.lp.num_vars(),
            enc.lp.num_constraints(),
            solution.result.pivots
        ),
    ];
    let optimum = solution.result.value.clone().unwrap_or_default();
    let result = json!({
        "scl": q(&solution.value),
        "prepared": enc.prepared.chain.to_string(),
        "scale": enc.prepared.scale.to_string(),
        "lp": {
            "variables": enc.lp.num_vars(),
            "constraints": enc.lp.num_constraints(),
            "pivots": solution.result.pivots,
            "optimum": q(&optimum),
            "duality_verified": true,
            "method": solution.result.method,
        },
        "certificate": certificate_json(&cert),
    });
    Ok(Report { human, result, chain: Some(chain.to_string()) })
}

fn rot_command(chain: &Chain, method: MethodArg) -> Result<Report, CliError> {
    let method = match method {
        MethodArg::Turning => RotMethod::Turning,
        MethodArg::Dynamical => RotMethod::Dynamical,
        MethodArg::Both => RotMethod::Both,
    };
    if chain.rank() != 2 {
        return Err(RotationError::Rank(chain.rank()).into());
    }
    let r = rotation::rotation(&rotation::pt_holonomy(), chain, method)?;
    let area = &r.value * Rational::from_integer(BigInt::from(2));
    let mut human =
        vec![format!("chain = {chain}"), format!("rot = {}", q(&r.value)), format!("area/pi = {}", q(&area))];
    if let Some(a) = r.agreement {
        human.push(format!("turning/dynamical agreement = {a}"));
    }
    if r.agreement == Some(false) {
        human.push("note: the turning number disagrees; the dynamical value is reported".into());
    }
    let result = json!({
        "rot": q(&r.value),
        "area_over_pi": q(&area),
        "method": r.method,
        "agreement": r.agreement,
    });
    Ok(Report { human, result, chain: Some(chain.to_string()) })
}

fn criterion_line(r: &CriterionReport) -> String {
    format!("scl = {}, rot/2 = {}, bounds_immersed = {}", q(&r.scl), q(&r.half_rot()), r.bounds_immersed)
}

fn criterion_json(r: &CriterionReport) -> Value {
    json!({
        "chain": r.chain.to_string(),
        "scl": q(&r.scl),
        "rot": q(&r.rot),
        "half_rot": q(&r.half_rot()),
        "bounds_immersed": r.bounds_immersed,
        "on_face": r.on_face,
    })
}

fn immersed_command(chain: &Chain, limits: &Limits) -> Result<Report, CliError> {
    let (forward, backward) = immersion::orientation_pair(chain, limits)?;
    let human = vec![criterion_line(&forward), format!("reversed {}: {}", backward.chain, criterion_line(&backward))];
    let mut result = criterion_json(&forward);
    result["reversed"] = criterion_json(&backward);
    Ok(Report { human, result, chain: Some(forward.chain.to_string()) })
}

fn stabilize_command(chain: &Chain, max_r: u64, limits: &Limits) -> Result<Report, CliError> {
    let s = immersion::minimal_stabilization(chain, max_r, limits)?;
    let mut human = vec![format!("C = {}, boundary = {}", s.base, s.boundary)];
    for (r, rep) in &s.rows {
        human.push(format!("R = {r}: {}", criterion_line(rep)));
    }
    human.push(match s.minimal {
        Some(m) => format!("minimal R = {m}"),
        None => format!("minimal R = none in 0..={max_r}"),
    });
    let rows: Vec<Value> = s
        .rows
        .iter()
        .map(|(r, rep)| {
            let mut v = criterion_json(rep);
            v["R"] = json!(r);
            v
        })
        .collect();
    let result = json!({ "boundary": s.boundary.to_string(), "rows": rows, "minimal_R": s.minimal });
    Ok(Report { human, result, chain: Some(s.base.to_string()) })
}

fn scan_command(w: &Word, range: std::ops::RangeInclusive<i64>, limits: &Limits) -> Result<Report, CliError> {
    let s = immersion::scan_conjecture(w, range, limits)?;
    let mut human = vec![format!("w = {}", s.word)];
    for (n, rep) in &s.rows {
        human.push(format!("n = {n}: {} ({})", criterion_line(rep), rep.chain));
    }
    human.push(match s.first_equal {
        Some(n) => format!("first equality at n = {n}, persists = {}", s.persists),
        None => "no equality in range".to_string(),
    });
    let rows: Vec<Value> = s
        .rows
        .iter()
        .map(|(n, rep)| {
            let mut v = criterion_json(rep);
            v["n"] = json!(n);
            v
        })
        .collect();
    let result = json!({ "w": s.word.to_string(), "rows": rows, "first_equal": s.first_equal, "persists": s.persists });
    Ok(Report { human, result, chain: None })
}

fn corollary_command(w: &Word, n: i64, limits: &Limits) -> Result<Report, CliError> {
    let r = immersion::corollary_check(w, n, limits)?;
    let human = vec![
        format!("word = {} (rank 3), rot(w) = {}", r.word, r.rot_w),
        format!("lhs = {}, rhs = {}, equal = {}", q(&r.lhs), q(&r.rhs), r.equal),
    ];
    let result = json!({
        "word": r.word.to_string(),
        "rot_w": r.rot_w,
        "lhs": q(&r.lhs),
        "rhs": q(&r.rhs),
        "equal": r.equal,
    });
    Ok(Report { human, result, chain: None })
}

fn certify_command(
    file: &PathBuf,
    chain: Option<&str>,
    out: Option<&PathBuf>,
    limits: &Limits,
) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::Usage(format!("{}: {e}", file.display())))?;
    let mut cert_file = CertificateFile::parse(&text)?;
    let arcs = cert_file.arc_system()?;
    let (matching, searched, exhaustive) = match cert_file.matching(&arcs)? {
        Some(m) => (m, false, true),
        None => {
            let best = surfcert::best_matching(&arcs, &SearchLimits::default())?
                .ok_or_else(|| CliError::Usage("no perfect matching of inverse labels exists".into()))?;
            (best.matching, true, best.exhaustive)
        }
    };
    let chi = surfcert::euler_characteristic(&arcs, &matching)?;
    let chi_cells = surfcert::euler_characteristic_cells(&arcs, &matching)?;
    if chi != chi_cells {
        return Err(CliError::Invariant(format!("corner-orbit chi {chi} differs from cell count {chi_cells}")));
    }
    let cert = SurfaceCertificate::from_band(&arcs, &matching)?;
    let mut human = vec![
        format!("chi = {chi}"),
        format!("boundary = {}", cert.boundary),
        format!("matching = {}", if searched { "searched" } else { "from file" }),
    ];
    if searched {
        human.push(format!("search exhaustive = {exhaustive}"));
    }
    let mut result = json!({
        "euler_characteristic": chi,
        "boundary": cert.boundary.to_string(),
        "searched": searched,
        "exhaustive": exhaustive,
        "pairs": matching.pairs().len(),
    });
    let base = chain.map(str::to_string).or_else(|| cert_file.chain.clone());
    let mut base_chain = None;
    if let Some(expr) = &base {
        let c = parse_chain(expr, Some(arcs.rank()))?.chain;
        let e = surfcert::extremality_ratio(&cert, &c, limits)?;
        if let Some(d) = cert_file.degree {
            if Rational::from_integer(BigInt::from(d)) != e.degree {
                return Err(CliError::Usage(format!("file states degree {d}, boundary has degree {}", q(&e.degree))));
            }
        }
        human.push(format!("degree = {}", q(&e.degree)));
        human.push(format!("ratio = {}, scl = {}, extremal = {}", q(&e.ratio), q(&e.scl), e.extremal));
        result["degree"] = json!(q(&e.degree));
        result["ratio"] = json!(q(&e.ratio));
        result["scl"] = json!(q(&e.scl));
        result["extremal"] = json!(e.extremal);
        if e.degree.is_integer() {
            cert_file.degree = e.degree.to_integer().try_into().ok();
        }
        cert_file.chain = Some(c.to_string());
        base_chain = Some(c.to_string());
    }
    if let Some(path) = out {
        let written = CertificateFile { pairs: CertificateFile::from_matching(&arcs, &matching).pairs, ..cert_file };
        std::fs::write(path, written.to_string()).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        human.push(format!("wrote {}", path.display()));
    }
    Ok(Report { human, result, chain: base_chain })
}

fn matchbound_command(chain: &Chain, degree: u64) -> Result<Report, CliError> {
    let found = surfcert::search_matching(chain, degree, &SearchLimits::default())?;
    let human = vec![
        format!("chain = {chain}"),
        format!(
            "bound = {}, chi = {}, degree = {}, exhaustive = {}",
            q(&found.bound),
            found.euler_characteristic,
            found.degree,
            found.exhaustive
        ),
    ];
    let file = CertificateFile::from_matching(&found.arcs, &found.matching);
    let result = json!({
        "bound": q(&found.bound),
        "euler_characteristic": found.euler_characteristic,
        "degree": found.degree,
        "exhaustive": found.exhaustive,
        "certificate": file.to_string(),
    });
    Ok(Report { human, result, chain: Some(chain.to_string()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(s: &str) -> String {
        parse_chain(s, None).unwrap().chain.to_string()
    }

    #[test]
    fn grammar_examples() {
        assert_eq!(
            parse_chain("2*abAB + ab - a - b", None).unwrap().chain,
            Chain::from_pairs(2, &[(2, "abAB"), (1, "ab"), (-1, "a"), (-1, "b")]).unwrap().canonicalize()
        );
        assert_eq!(chain("[a,b]^2"), "2*abAB");
        assert_eq!(chain("ab^2"), "2*ab");
        assert_eq!(chain("1/2 [a, bAB]"), "-1/2*abaBAbAB");
        assert_eq!(chain("-a + a"), "0");
        assert_eq!(chain("0"), "0");
        assert_eq!(chain("a^-1 + a"), "0");
        assert_eq!(parse_chain("c + CBAba", None).unwrap().chain.rank(), 3);
        assert_eq!(parse_chain("abAB", Some(4)).unwrap().chain.rank(), 4);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(parse_chain("ab^", None).unwrap_err().offset, 2);
        assert_eq!(parse_chain("a + ", None).unwrap_err().offset, 4);
        assert_eq!(parse_chain("a ? b", None).unwrap_err().offset, 2);
        assert_eq!(parse_chain("[a b]", None).unwrap_err().offset, 4);
        assert_eq!(parse_chain("1/0 a", None).unwrap_err().offset, 0);
        assert!(parse_chain("cab", Some(2)).is_err());
        assert!(parse_chain("a", Some(27)).is_err());
    }

    #[test]
    fn output_round_trips() {
        for s in ["2*[a,b] + ab - a - b", "1/3 abAB - 2/5 aabbAABB", "c + CBAba", "[a,b]^3 - 7 ab + a + b"] {
            let c = parse_chain(s, None).unwrap().chain;
            assert_eq!(parse_chain(&c.to_string(), Some(c.rank())).unwrap().chain, c);
        }
    }

    #[test]
    fn rationals_always_have_denominators() {
        assert_eq!(fmt_rational(&Rational::from_integer(1.into())), "1/1");
        assert_eq!(fmt_rational(&Rational::new((-2).into(), 4.into())), "-1/2");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["sclkit", "scl", "ab^"]).code, 2);
        assert_eq!(run(["sclkit", "scl", "a + b"]).code, 3);
        assert_eq!(run(["sclkit", "--max-letters", "3", "scl", "abAB"]).code, 4);
        assert_eq!(run(["sclkit", "--max-pivots", "1", "scl", "abAB"]).code, 4);
        assert_eq!(run(["sclkit", "scl", "abAB"]).code, 0);
    }
}
