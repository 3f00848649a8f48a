//! Command-line entry point. [`dispatch`] parses arguments, runs one
//! pipeline and returns the exit code with the captured output.
//!
//! Exit codes: `0` success, `1` unknown flag or subcommand, `2` bad input or
//! failed precondition, `3` precision exhausted, `4` selftest failure.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::canonical::{self, LocalDrinfeld};
use crate::drinfeld::ModuleDescriptor;
use crate::error::{Error, Result};
use crate::expr;
use crate::kassaei::{self, CorrGraph};
use crate::newton::{parse_rational, Valuation};
use crate::slopes::{self, Operator};
use crate::strata;
use crate::weights::{self, IwasawaSpec, MahlerSpace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;
pub const EXIT_SELFTEST: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OpArg {
    U,
    T,
}

impl From<OpArg> for Operator {
    fn from(o: OpArg) -> Self {
        match o {
            OpArg::U => Operator::U,
            OpArg::T => Operator::T,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "drinfeld", version, about = "Exact computations with Drinfeld modules and their modular forms")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "tsv")]
    format: Format,
    /// Write a run manifest (JSON) to this file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Re-run the command recorded in a manifest.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Count rank-r modules over F_{q^e} by height.
    StrataCensus {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        ext: u32,
        #[arg(long, default_value = "T")]
        prime: String,
        /// Also verify the three ordinarity criteria on every module.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 2_000_000)]
        bound: u64,
    },
    /// Slope table of a Hecke operator at one weight.
    Slopes {
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 20)]
        prec: i64,
        #[arg(long, value_enum, default_value = "u")]
        operator: OpArg,
        /// Read the operator matrix from a file instead.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Coefficient congruences of characteristic series at two weights.
    Gm {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        kprime: Option<u32>,
        #[arg(long, default_value_t = 20)]
        prec: i64,
        #[arg(long, value_enum, default_value = "u")]
        operator: OpArg,
        /// Scan k' = k + (q-1) p^m for m = 0..=M instead of a single k'.
        #[arg(long)]
        ladder: Option<u32>,
        /// Number of coefficients compared with --kprime (default k).
        #[arg(long)]
        terms: Option<usize>,
    },
    /// Weights grouped by the number of slopes below a cut.
    Vn {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        kmin: u32,
        #[arg(long)]
        kmax: u32,
        #[arg(long)]
        cut: String,
        #[arg(long, default_value_t = 20)]
        prec: i64,
        #[arg(long, value_enum, default_value = "u")]
        operator: OpArg,
    },
    /// Canonical subgroup of a local rank-r module.
    Canonical {
        #[arg(long)]
        module: PathBuf,
        #[arg(long, default_value_t = 24)]
        prec: i64,
        #[arg(long, default_value_t = 1)]
        echelon: usize,
    },
    /// Degrees of the U_pi images of a subgroup line.
    DegreeDynamics {
        #[arg(long)]
        module: PathBuf,
        /// `auto` for the canonical subgroup, or a file holding an approximate root
        /// `h` of the line ker(h + tau^d), refined by Newton's method.
        #[arg(long = "H", default_value = "auto")]
        h: String,
        #[arg(long, default_value_t = 24)]
        prec: i64,
    },
    /// Weight-space arithmetic.
    Weights {
        #[command(subcommand)]
        cmd: WeightsCmd,
    },
    /// Norm bounds of the continuation series on a correspondence graph.
    Kassaei {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: i64,
        /// Slope v(a_pi).
        #[arg(long)]
        slope: String,
        #[arg(long)]
        terms: usize,
        #[arg(long, default_value_t = 2)]
        r: i64,
        #[arg(long, default_value = "0")]
        eps: String,
        #[arg(long, default_value = "y")]
        start: String,
    },
    /// Run the built-in invariant checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum WeightsCmd {
    /// Mahler coefficients of an Iwasawa element.
    Mahler {
        #[arg(long)]
        expr: PathBuf,
        #[arg(long, default_value_t = 20)]
        prec: i64,
    },
    /// Membership of pi^-k times an Iwasawa element in the integral model.
    LambdaPlus {
        #[arg(long)]
        expr: PathBuf,
        #[arg(long, default_value = "1")]
        div: String,
        #[arg(long, default_value_t = 20)]
        prec: i64,
    },
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    pub version: String,
    pub precision: Option<i64>,
    pub seed: Option<u64>,
    pub elapsed_ms: u64,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn fail(code: i32, msg: String) -> Outcome {
    Outcome { code, stdout: String::new(), stderr: msg }
}

fn error_code(e: &Error) -> i32 {
    if e.is_precision() {
        EXIT_PRECISION
    } else {
        EXIT_INPUT
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("output serializes");
    s.push('\n');
    s
}

/// Parse and run `argv` (including the program name).
pub fn dispatch<I, S>(argv: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    return Outcome { code: EXIT_OK, stdout: e.to_string(), stderr: String::new() }
                }
                ErrorKind::UnknownArgument | ErrorKind::InvalidSubcommand => EXIT_USAGE,
                _ => EXIT_INPUT,
            };
            return fail(code, e.to_string());
        }
    };
    if let Some(path) = &cli.replay {
        let manifest: RunManifest = match read(path).and_then(|t| {
            serde_json::from_str(&t).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))
        }) {
            Ok(m) => m,
            Err(e) => return fail(error_code(&e), e.to_string()),
        };
        return replay(&manifest);
    }
    let Some(cmd) = cli.cmd else {
        return fail(EXIT_INPUT, "a subcommand is required (see --help)".into());
    };
    let start = Instant::now();
    let run = || run_cmd(&cmd, cli.format);
    let result = match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Error::Precondition(format!("thread pool: {e}"))),
        },
        None => run(),
    };
    let mut out = match result {
        Ok((code, stdout)) => Outcome { code, stdout, stderr: String::new() },
        Err(e) => fail(error_code(&e), format!("error: {e}")),
    };
    if let Some(path) = &cli.manifest {
        let m = manifest_for(&cmd, &argv, start.elapsed().as_millis() as u64);
        if let Err(e) = std::fs::write(path, json(&m)) {
            out = fail(EXIT_INPUT, format!("error: cannot write manifest {}: {e}", path.display()));
        }
    }
    out
}

/// Re-run a recorded command; `--manifest` is dropped so the record is not
/// overwritten.
pub fn replay(m: &RunManifest) -> Outcome {
    let mut argv = Vec::with_capacity(m.argv.len());
    let mut skip = false;
    for a in &m.argv {
        if skip {
            skip = false;
            continue;
        }
        if a == "--manifest" {
            skip = true;
            continue;
        }
        if a.starts_with("--manifest=") {
            continue;
        }
        argv.push(a.clone());
    }
    dispatch(argv)
}

fn manifest_for(cmd: &Cmd, argv: &[String], elapsed_ms: u64) -> RunManifest {
    let name = argv
        .iter()
        .skip(1)
        .find(|a| !a.starts_with('-') && cmd_names().contains(&a.as_str()))
        .cloned()
        .unwrap_or_default();
    let mut parameters = BTreeMap::new();
    let mut it = argv.iter().skip(1).peekable();
    while let Some(a) = it.next() {
        if let Some(flag) = a.strip_prefix("--") {
            if let Some((k, v)) = flag.split_once('=') {
                parameters.insert(k.to_string(), v.to_string());
            } else if it.peek().is_some_and(|v| !v.starts_with("--")) {
                parameters.insert(flag.to_string(), it.next().unwrap().clone());
            } else {
                parameters.insert(flag.to_string(), "true".into());
            }
        }
    }
    let precision = match cmd {
        Cmd::Slopes { prec, .. }
        | Cmd::Gm { prec, .. }
        | Cmd::Vn { prec, .. }
        | Cmd::Canonical { prec, .. }
        | Cmd::DegreeDynamics { prec, .. } => Some(*prec),
        Cmd::Weights { cmd: WeightsCmd::Mahler { prec, .. } | WeightsCmd::LambdaPlus { prec, .. } } => Some(*prec),
        _ => None,
    };
    let seed = match cmd {
        Cmd::Selftest { seed } => Some(*seed),
        _ => None,
    };
    RunManifest {
        command: name,
        argv: argv.to_vec(),
        parameters,
        version: env!("CARGO_PKG_VERSION").to_string(),
        precision,
        seed,
        elapsed_ms,
    }
}

fn cmd_names() -> [&'static str; 9] {
    ["strata-census", "slopes", "gm", "vn", "canonical", "degree-dynamics", "weights", "kassaei", "selftest"]
}

fn run_cmd(cmd: &Cmd, fmt: Format) -> Result<(i32, String)> {
    let out = match cmd {
        Cmd::StrataCensus { q, r, ext, prime, check, bound } => census(*q, *r, *ext, prime, *check, *bound, fmt)?,
        Cmd::Slopes { q, k, prec, operator, matrix } => slopes_cmd(*q, *k, *prec, (*operator).into(), matrix.as_deref(), fmt)?,
        Cmd::Gm { q, k, kprime, prec, operator, ladder, terms } => {
            gm_cmd(*q, *k, *kprime, *prec, (*operator).into(), *ladder, *terms, fmt)?
        },
        Cmd::Vn { q, kmin, kmax, cut, prec, operator } => vn_cmd(*q, *kmin, *kmax, cut, *prec, (*operator).into(), fmt)?,
        Cmd::Canonical { module, prec, echelon } => canonical_cmd(module, *prec, *echelon, fmt)?,
        Cmd::DegreeDynamics { module, h, prec } => dynamics_cmd(module, h, *prec, fmt)?,
        Cmd::Weights { cmd } => weights_cmd(cmd, fmt)?,
        Cmd::Kassaei { graph, k, slope, terms, r, eps, start } => {
            kassaei_cmd(graph, *k, slope, *terms, *r, eps, start, fmt)?
        }
        Cmd::Selftest { seed } => {
            let report = crate::selftest::run(*seed);
            let code = if report.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_SELFTEST };
            let text = match fmt {
                Format::Json => json(&report),
                Format::Tsv => {
                    let mut s = String::from("check\tresult\tdetail\n");
                    for c in &report {
                        let _ = writeln!(s, "{}\t{}\t{}", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
                    }
                    s
                }
            };
            return Ok((code, text));
        }
    };
    Ok((EXIT_OK, out))
}

fn census(q: u64, r: usize, ext: u32, prime: &str, check: bool, bound: u64, fmt: Format) -> Result<String> {
    let (p, e) = crate::drinfeld::prime_power(q)?;
    let base = crate::apoly::PolyRing::new(crate::field::FieldCtx::new(p, e)?);
    let f = expr::parse_prime(prime, &base)?;
    let c = strata::strata_census(&base, r, &f, ext, bound, check)?;
    if check && c.inconsistent > 0 {
        return Err(Error::Precondition(format!("{} modules with disagreeing criteria", c.inconsistent)));
    }
    Ok(match fmt {
        Format::Json => json(&c),
        Format::Tsv => {
            let mut s = String::from("h\tcount\texponent_estimate\tl_w\n");
            for row in &c.rows {
                let _ = writeln!(s, "{}\t{}\t{:.6}\t{}", row.h, row.count, row.exponent_estimate, row.l_w);
            }
            s
        }
    })
}

fn slopes_cmd(q: Option<u64>, k: Option<u32>, prec: i64, op: Operator, matrix: Option<&Path>, fmt: Format) -> Result<String> {
    let (table, ring_q) = match matrix {
        Some(path) => {
            let (h, loc) = slopes::ingest::ingest_matrix(path, prec)?;
            let r = loc.ring();
            let cs = slopes::char_series(r, &h.m);
            (slopes::slope_table(r, &cs, h.k)?, h.q)
        }
        None => {
            let q = q.ok_or_else(|| Error::Precondition("--q is required without --matrix".into()))?;
            let k = k.ok_or_else(|| Error::Precondition("--k is required without --matrix".into()))?;
            let r = slopes::operator_ring(q, prec)?;
            (slopes::weight_slopes(&r, op, k)?, q)
        }
    };
    let rows = slopes::classicity_filter(&table, table.k);
    Ok(match fmt {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                q: u64,
                k: u32,
                dim: usize,
                rows: &'a [slopes::ClassicalRow],
            }
            json(&Out { q: ring_q, k: table.k, dim: table.dim, rows: &rows })
        }
        Format::Tsv => {
            let mut s = String::from("slope\tmultiplicity\tclassical\n");
            for row in &rows {
                let _ = writeln!(s, "{}\t{}\t{}", row.slope, row.multiplicity, row.classical);
            }
            s
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn gm_cmd(q: u64, k: u32, kprime: Option<u32>, prec: i64, op: Operator, ladder: Option<u32>, terms: Option<usize>, fmt: Format) -> Result<String> {
    let r = slopes::operator_ring(q, prec)?;
    let rungs = match (kprime, ladder) {
        (Some(kp), None) => vec![slopes::GmRung { m: 0, kprime: kp, profile: slopes::gm_scan(&r, op, k, kp, terms.unwrap_or(k as usize))? }],
        (None, Some(m)) => {
            let l = slopes::gm_ladder(&r, op, k, m)?;
            if fmt == Format::Json {
                return Ok(json(&l));
            }
            l.rungs
        }
        _ => return Err(Error::Precondition("give exactly one of --kprime and --ladder".into())),
    };
    Ok(match fmt {
        Format::Json => json(&rungs[0]),
        Format::Tsv => {
            let mut s = String::from("kprime\tn\tvaluation\n");
            for g in &rungs {
                for (n, v) in g.profile.iter().enumerate() {
                    let _ = writeln!(s, "{}\t{n}\t{v}", g.kprime);
                }
            }
            s
        }
    })
}

fn vn_cmd(q: u64, kmin: u32, kmax: u32, cut: &str, prec: i64, op: Operator, fmt: Format) -> Result<String> {
    let cut = parse_rational(cut)?;
    if kmax < kmin {
        return Err(Error::Precondition("kmax below kmin".into()));
    }
    let r = slopes::operator_ring(q, prec)?;
    let rep = slopes::vn_scan(&r, op, kmin, kmax, cut)?;
    Ok(match fmt {
        Format::Json => json(&rep),
        Format::Tsv => {
            let mut s = String::from("k\tcount\tregion\n");
            for e in &rep.entries {
                let region = rep.regions.iter().position(|g| g.kmin <= e.k && e.k <= g.kmax).unwrap();
                let count = e.count.map_or("tie".to_string(), |c| c.to_string());
                let _ = writeln!(s, "{}\t{count}\t{region}", e.k);
            }
            s
        }
    })
}

fn load_local(path: &Path, prec: i64) -> Result<LocalDrinfeld> {
    let desc = ModuleDescriptor::from_json(&read(path)?)?;
    let loaded = desc.load(prec)?;
    LocalDrinfeld::new(loaded.local, &loaded.prime)
}

fn canonical_cmd(path: &Path, prec: i64, echelon: usize, fmt: Format) -> Result<String> {
    let phi = load_local(path, prec)?;
    let r = phi.ring();
    let rep = canonical::can_sub_exists(&phi, echelon)?;
    #[derive(Serialize)]
    struct Out {
        exists: bool,
        echelon: usize,
        v_hasse: Valuation,
        chain: Vec<Valuation>,
        kernel_coeffs: Option<Vec<String>>,
        deg: Option<Valuation>,
        htt_w: Option<Valuation>,
        htt_bound: Option<Valuation>,
    }
    let mut out = Out {
        exists: rep.exists,
        echelon,
        v_hasse: rep.v_hasse,
        chain: rep.chain.clone(),
        kernel_coeffs: None,
        deg: None,
        htt_w: None,
        htt_bound: None,
    };
    if canonical::can_sub_exists_1(&phi)? {
        let piece = canonical::can_sub_kernel(&phi)?;
        out.kernel_coeffs = Some(piece.ell.coeffs().iter().map(|c| r.format(c)).collect());
        out.deg = Some(canonical::deg_pi(r, &piece)?);
        let htt = canonical::htt_exponent(&phi)?;
        out.htt_w = Some(htt.w);
        out.htt_bound = Some(htt.bound);
    }
    Ok(match fmt {
        Format::Json => json(&out),
        Format::Tsv => {
            let opt = |v: &Option<Valuation>| v.map_or("-".to_string(), |v| v.to_string());
            let mut s = String::from("key\tvalue\n");
            let _ = writeln!(s, "exists\t{}", out.exists);
            let _ = writeln!(s, "echelon\t{}", out.echelon);
            let _ = writeln!(s, "v_hasse\t{}", out.v_hasse);
            let chain: Vec<String> = out.chain.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "chain\t{}", chain.join(","));
            let _ = writeln!(s, "kernel_coeffs\t{}", out.kernel_coeffs.as_ref().map_or("-".into(), |c| c.join(" ; ")));
            let _ = writeln!(s, "deg\t{}", opt(&out.deg));
            let _ = writeln!(s, "htt_w\t{}", opt(&out.htt_w));
            let _ = writeln!(s, "htt_bound\t{}", opt(&out.htt_bound));
            s
        }
    })
}

fn dynamics_cmd(path: &Path, h: &str, prec: i64, fmt: Format) -> Result<String> {
    let desc = ModuleDescriptor::from_json(&read(path)?)?;
    let loaded = desc.load(prec)?;
    let phi = LocalDrinfeld::new(loaded.local, &loaded.prime)?;
    let piece = if h == "auto" {
        canonical::can_sub_kernel(&phi)?
    } else {
        let text = read(Path::new(h))?;
        let line = text.lines().find(|l| !l.trim().is_empty()).ok_or_else(|| Error::parse(1, 1, "empty H file"))?;
        let hv = expr::parse_local(line.trim(), &loaded.loc, 1)?;
        canonical::line_through(&phi, &hv)?
    };
    let rep = canonical::deg_dynamics_check(&phi, &piece)?;
    Ok(match fmt {
        Format::Json => json(&rep),
        Format::Tsv => {
            let mut s = String::from("x\tdeg\n");
            let _ = writeln!(s, "y\t{}", rep.deg_y);
            for (i, d) in rep.images.iter().enumerate() {
                let _ = writeln!(s, "x{}\t{d}", i + 1);
            }
            s
        }
    })
}

fn weights_cmd(cmd: &WeightsCmd, fmt: Format) -> Result<String> {
    let (path, prec) = match cmd {
        WeightsCmd::Mahler { expr, prec } | WeightsCmd::LambdaPlus { expr, prec, .. } => (expr, *prec),
    };
    let spec = IwasawaSpec::from_json(&read(path)?)?;
    let (loc, elem, gens) = spec.load(prec)?;
    let r = loc.ring().clone();
    let space = MahlerSpace::new(r.clone(), spec.truncation.unwrap_or(prec as usize));
    let f = weights::mahler_embed(&space, &elem, &gens)?;
    match cmd {
        WeightsCmd::Mahler { .. } => {
            #[derive(Serialize)]
            struct Coeff {
                j: usize,
                coeff: String,
                valuation: String,
            }
            let coeffs: Vec<Coeff> = f
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| Coeff {
                    j,
                    coeff: r.format(c),
                    valuation: match r.val(c) {
                        Ok(v) => v.to_string(),
                        Err(_) => format!(">={}", r.val_lb(c)),
                    },
                })
                .collect();
            Ok(match fmt {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        coeffs: Vec<Coeff>,
                        tail: Valuation,
                    }
                    json(&Out { coeffs, tail: f.tail_val() })
                }
                Format::Tsv => {
                    let mut s = String::from("j\tcoeff\tvaluation\n");
                    for c in &coeffs {
                        let _ = writeln!(s, "{}\t{}\t{}", c.j, c.coeff, c.valuation);
                    }
                    s
                }
            })
        }
        WeightsCmd::LambdaPlus { div, .. } => {
            let k = parse_div(div)?;
            let g = space.scale(&r.pi_pow(-k), &f)?;
            let member = space.lambda_plus_member(&g)?;
            let val = space.gauss_valuation(&g)?;
            Ok(match fmt {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        member: bool,
                        valuation: Valuation,
                    }
                    json(&Out { member, valuation: val })
                }
                Format::Tsv => format!("member\tvaluation\n{member}\t{val}\n"),
            })
        }
    }
}

/// `pi^k`, `pi` or `1`.
fn parse_div(s: &str) -> Result<i64> {
    let s = s.trim();
    let bad = || Error::parse(1, 1, format!("expected pi^k, found {s:?}"));
    match s {
        "1" => Ok(0),
        "pi" => Ok(1),
        _ => s.strip_prefix("pi^").ok_or_else(bad)?.trim().parse().map_err(|_| bad()),
    }
}

#[allow(clippy::too_many_arguments)]
fn kassaei_cmd(path: &Path, k: i64, slope: &str, terms: usize, r: i64, eps: &str, start: &str, fmt: Format) -> Result<String> {
    let eps = parse_rational(eps)?;
    let v_a = parse_rational(slope)?;
    let g = CorrGraph::from_json(&read(path)?, eps)?;
    let state = kassaei::kassaei_sum(&g, start, &HashMap::new(), k, r, v_a, terms)?;
    Ok(match fmt {
        Format::Json => json(&state),
        Format::Tsv => {
            let mut s = String::from("n\tpaths\tbound\tobserved\tpartial_bound\n");
            for (t, pb) in state.terms.iter().zip(&state.partial_bounds) {
                let _ = writeln!(s, "{}\t{}\t{}\t{}\t{pb}", t.n, t.paths, t.bound, t.observed);
            }
            s
        }
    })
}
