//! Command-line verifier tying the sieve modules together.
//!
//! Subcommands mirror the proof's structure: `verify-k` certifies the
//! dimension constant, `case2` runs the checkpointed interval certification
//! with resumable JSONL certificate output, `case3` evaluates the asymptotic
//! inequality, `scan`/`witness` produce ground-truth decompositions, `gaps`
//! scans maximal prime gaps, and `constants` re-derives the lemma constants.
//!
//! Exit codes: 0 all checked claims hold, 1 usage error, 2 a verification
//! failed, 3 incomplete run or resource problem (I/O, table too small).

use std::io::{Seek, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use omega_sieve::constants::{
    combined_exponent, main_sieve_factor, optimize_alpha, remainder_constant,
    v_constant_rederivation, v_product, verify_k, VMode,
};
use omega_sieve::decomp::{min_omega_decomposition, primegap_witness, scan_range, DESK_BOUND};
use omega_sieve::pipeline::{
    case3_constants, check_case3, run_case2_resumable, Case2State, Case2Summary,
    IntervalCertificate, SieveParams, Verdict, CHECKPOINT_EVERY,
};
use omega_sieve::{max_prime_gap, Error, PrimeTable, SpfTable};

#[derive(Parser)]
#[command(
    name = "omega-sieve",
    version,
    about = "Machine verification that every N >= 2 splits as N = a + b with Omega(ab) <= 21"
)]
struct Cli {
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the dimension constant K = 3 via the four-case split.
    VerifyK,
    /// Checkpointed Case 2 interval certification over (2, q_max].
    Case2 {
        #[arg(long = "q-max")]
        q_max: u64,
        /// Level exponent s = log D / log z.
        #[arg(long, default_value_t = 18.4)]
        s: f64,
        /// Combined exponent k (default 2 + log 3).
        #[arg(long)]
        k: Option<f64>,
        /// z = N^(1/r).
        #[arg(long, default_value_t = 20)]
        r: u32,
        /// Rankin delta values, first success wins.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.8, 0.9])]
        deltas: Vec<f64>,
        /// Required log-domain positivity margin on top of accumulated slack.
        #[arg(long, default_value_t = 1e-6)]
        margin: f64,
        /// Certificate JSONL sink (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue a killed run from its checkpoint state file.
        #[arg(long)]
        resume: bool,
        /// Revalidate an existing certificate file instead of running.
        #[arg(long)]
        recheck: bool,
    },
    /// Evaluate the Case 3 asymptotic inequality at log10 N.
    Case3 {
        #[arg(long = "log10N")]
        log10_n: f64,
    },
    /// Exhaustive minimum-Omega witness scan over [lo, hi].
    Scan {
        #[arg(long)]
        lo: u64,
        #[arg(long)]
        hi: u64,
        /// Every N must admit a witness with Omega(ab) <= target.
        #[arg(long, default_value_t = 21)]
        target: u32,
        /// Report JSON sink (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Produce one decomposition witness for N.
    Witness {
        n: u64,
        /// Use the prime-gap construction a = m*p instead of brute force.
        #[arg(long)]
        m: Option<u64>,
        /// Omega budget K for the prime-gap construction.
        #[arg(long, default_value_t = 21)]
        target: u32,
    },
    /// Maximal prime gap below a limit.
    Gaps {
        #[arg(long)]
        limit: u64,
    },
    /// Re-derive and print the lemma constants.
    Constants {
        #[arg(long, default_value_t = 18.4)]
        s: f64,
        /// Also stream the exact V(limit) * log^2(limit) (long-run check).
        #[arg(long)]
        limit: Option<u64>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Precondition(_) => 1,
        Error::VerificationFailed(_) | Error::Hypothesis(_) => 2,
        Error::OutOfRange { .. } | Error::Range(_) | Error::Refused(_) | Error::Io(_) => 3,
    }
}

/// Prime table, via the cache directory in OMEGA_SIEVE_CACHE when set.
fn load_table(limit: u64) -> omega_sieve::Result<PrimeTable> {
    if let Ok(dir) = std::env::var("OMEGA_SIEVE_CACHE") {
        let dir = PathBuf::from(dir);
        let path = dir.join(format!("primes-{limit}.bin"));
        if let Some(t) = PrimeTable::read_cache(&path, limit)? {
            return Ok(t);
        }
        let t = PrimeTable::build(limit)?;
        std::fs::create_dir_all(&dir)?;
        t.write_cache(&path)?;
        return Ok(t);
    }
    PrimeTable::build(limit)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not usage errors
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("--threads must be positive");
            std::process::exit(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("thread pool: {e}");
            std::process::exit(3);
        }
    }
    let status = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    std::process::exit(status);
}

fn dispatch(cmd: Command) -> omega_sieve::Result<i32> {
    match cmd {
        Command::VerifyK => cmd_verify_k(),
        Command::Case2 {
            q_max,
            s,
            k,
            r,
            deltas,
            margin,
            out,
            resume,
            recheck,
        } => {
            let params = SieveParams {
                s,
                k: k.unwrap_or_else(combined_exponent),
                r,
                delta_set: deltas,
                margin,
            };
            if recheck {
                let out = out.ok_or_else(|| {
                    Error::InvalidArgument(
                        "--recheck needs --out pointing at a certificate file".into(),
                    )
                })?;
                cmd_case2_recheck(&out)
            } else {
                cmd_case2(q_max, &params, out.as_deref(), resume)
            }
        }
        Command::Case3 { log10_n } => {
            let report = check_case3(log10_n)?;
            println!("{}", serde_json::to_string(&report).expect("serializable"));
            Ok(if report.holds { 0 } else { 2 })
        }
        Command::Scan {
            lo,
            hi,
            target,
            out,
        } => {
            let spf = SpfTable::build(hi + 1)?;
            let report = scan_range(lo, hi, target, &spf)?;
            let json = serde_json::to_string(&report).expect("serializable");
            match out {
                Some(p) => std::fs::write(p, json + "\n")?,
                None => println!("{json}"),
            }
            Ok(if report.failures.is_empty() { 0 } else { 2 })
        }
        Command::Witness { n, m, target } => {
            let w = match m {
                Some(m) => {
                    let p_bound = n.saturating_sub(1) / m.max(1);
                    let table = load_table((p_bound + 2).max(3))?;
                    primegap_witness(n, m, target, &table)?
                }
                None => {
                    if n > DESK_BOUND {
                        return Err(Error::Refused(format!(
                            "brute-force witness capped at N <= {DESK_BOUND}; use --m for larger N"
                        )));
                    }
                    let spf = SpfTable::build(n.max(2))?;
                    min_omega_decomposition(n, &spf)?
                }
            };
            println!("{}", serde_json::to_string(&w).expect("serializable"));
            Ok(if w.omega_ab <= target { 0 } else { 2 })
        }
        Command::Gaps { limit } => {
            let (gap, at) = max_prime_gap(limit)?;
            println!(
                "{}",
                serde_json::json!({"limit": limit, "max_gap": gap, "at_prime": at})
            );
            Ok(0)
        }
        Command::Constants { s, limit } => cmd_constants(s, limit),
    }
}

fn cmd_verify_k() -> omega_sieve::Result<i32> {
    let table = load_table(300)?;
    let report = verify_k(&table)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("serializable")
    );
    if report.all_ok() {
        println!("K = {} certified", report.k_certified);
        Ok(0)
    } else {
        Ok(2)
    }
}

fn cmd_constants(s: f64, limit: Option<u64>) -> omega_sieve::Result<i32> {
    let k = combined_exponent();
    let alpha = optimize_alpha(s)?;
    let mut out = serde_json::json!({
        "kappa": omega_sieve::constants::KAPPA,
        "big_k": omega_sieve::constants::BIG_K,
        "combined_exponent": k,
        "v_lower_constant": omega_sieve::constants::V_LOWER_CONSTANT,
        "v_rederived": v_constant_rederivation(),
        "remainder_exp_constant": omega_sieve::constants::REMAINDER_EXP_CONSTANT,
        "alpha_opt": alpha,
        "remainder_constant": remainder_constant(alpha, s)?,
        "main_sieve_factor": main_sieve_factor(s, k)?,
        "case3": case3_constants()?,
    });
    if let Some(limit) = limit {
        let v = v_product(limit as f64, VMode::Exact)?;
        let lz = (limit as f64).ln();
        out["v_times_log2"] = serde_json::json!(v.value() * lz * lz);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("serializable")
    );
    Ok(0)
}

fn state_path(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".state");
    PathBuf::from(os)
}

/// Checkpoint state plus the JSONL byte offset it corresponds to.
fn write_state(path: &Path, state: &Case2State, offset: u64) -> std::io::Result<()> {
    let tmp = path.with_extension("state.tmp");
    let mut buf = state.encode();
    buf.extend_from_slice(&offset.to_le_bytes());
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

fn read_state(path: &Path) -> omega_sieve::Result<Option<(Case2State, u64)>> {
    let buf = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    if buf.len() < 8 {
        return Err(Error::InvalidArgument(
            "truncated checkpoint state file".into(),
        ));
    }
    let (state_bytes, off) = buf.split_at(buf.len() - 8);
    let offset = u64::from_le_bytes(off.try_into().unwrap());
    Ok(Some((Case2State::decode(state_bytes)?, offset)))
}

fn cmd_case2(
    q_max: u64,
    params: &SieveParams,
    out: Option<&Path>,
    resume: bool,
) -> omega_sieve::Result<i32> {
    if resume && out.is_none() {
        return Err(Error::InvalidArgument("--resume needs --out".into()));
    }
    let summary = match out {
        None => {
            let stdout = std::io::stdout();
            let mut w = std::io::BufWriter::new(stdout.lock());
            let mut io_err: Option<std::io::Error> = None;
            let s = run_case2_resumable(
                None,
                q_max,
                params,
                CHECKPOINT_EVERY,
                |cert| {
                    if io_err.is_none() {
                        if let Err(e) = writeln!(w, "{}", serde_json::to_string(cert).unwrap()) {
                            io_err = Some(e);
                        }
                    }
                },
                |_| {},
            )?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            writeln!(w, "{}", serde_json::to_string(&s).expect("serializable"))?;
            return Ok(finish_code(&s));
        }
        Some(out) => {
            let spath = state_path(out);
            let resumed = if resume { read_state(&spath)? } else { None };
            let mut file = std::fs::OpenOptions::new()
                .create(true)
                .write(true)
                .read(true)
                .open(out)?;
            let start_state = match resumed {
                Some((st, offset)) => {
                    // drop any certificates written after the last checkpoint;
                    // the resumed run regenerates them bit-identically
                    file.set_len(offset)?;
                    file.seek(std::io::SeekFrom::Start(offset))?;
                    Some(st)
                }
                None => {
                    file.set_len(0)?;
                    None
                }
            };
            let file = std::cell::RefCell::new(std::io::BufWriter::new(file));
            let io_err = std::cell::RefCell::new(None::<std::io::Error>);
            let persist = |st: &Case2State| {
                let res = || -> std::io::Result<()> {
                    let mut w = file.borrow_mut();
                    w.flush()?;
                    w.get_ref().sync_all()?;
                    let offset = {
                        let mut f: &std::fs::File = w.get_ref();
                        f.stream_position()?
                    };
                    write_state(&spath, st, offset)
                };
                if io_err.borrow().is_none() {
                    if let Err(e) = res() {
                        *io_err.borrow_mut() = Some(e);
                    }
                }
            };
            let sink = |cert: &IntervalCertificate| {
                if io_err.borrow().is_none() {
                    let line = serde_json::to_string(cert).unwrap();
                    if let Err(e) = writeln!(file.borrow_mut(), "{line}") {
                        *io_err.borrow_mut() = Some(e);
                    }
                }
            };
            let s =
                run_case2_resumable(start_state, q_max, params, CHECKPOINT_EVERY, sink, persist)?;
            if let Some(e) = io_err.into_inner() {
                return Err(e.into());
            }
            let mut w = file.into_inner();
            writeln!(w, "{}", serde_json::to_string(&s).expect("serializable"))?;
            w.flush()?;
            w.get_ref().sync_all()?;
            // a finished run no longer needs its checkpoint
            let _ = std::fs::remove_file(&spath);
            s
        }
    };
    println!("{}", serde_json::to_string(&summary).expect("serializable"));
    Ok(finish_code(&summary))
}

fn finish_code(s: &Case2Summary) -> i32 {
    if s.failures > 0 {
        2
    } else if !s.complete {
        3
    } else {
        0
    }
}

/// Re-read a certificate file and recompute every verdict from the stored
/// log values; the trailing summary must agree with the recount.
fn cmd_case2_recheck(out: &Path) -> omega_sieve::Result<i32> {
    let data = std::fs::read_to_string(out)?;
    let mut intervals = 0u64;
    let mut failures = 0u64;
    let mut summary: Option<Case2Summary> = None;
    let mut bad = 0u64;
    let mut q_prev = 0u64;
    for line in data.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(cert) = serde_json::from_str::<IntervalCertificate>(line) {
            intervals += 1;
            if cert.verdict == Verdict::Failed {
                failures += 1;
            }
            if !cert.revalidates() || (q_prev != 0 && cert.q_lo != q_prev) {
                bad += 1;
                eprintln!("recheck: bad certificate at ({}, {}]", cert.q_lo, cert.q_hi);
            }
            q_prev = cert.q_hi;
        } else if let Ok(s) = serde_json::from_str::<Case2Summary>(line) {
            summary = Some(s);
        } else {
            return Err(Error::InvalidArgument(format!(
                "unparseable certificate line: {line}"
            )));
        }
    }
    let Some(summary) = summary else {
        return Err(Error::InvalidArgument(
            "certificate file has no summary".into(),
        ));
    };
    let consistent = summary.intervals == intervals && summary.failures == failures;
    if !consistent {
        eprintln!(
            "recheck: summary says {}/{} intervals/failures, file has {}/{}",
            summary.intervals, summary.failures, intervals, failures
        );
    }
    println!(
        "{}",
        serde_json::json!({
            "intervals": intervals,
            "failures": failures,
            "invalid": bad,
            "summary_consistent": consistent,
        })
    );
    Ok(
        if bad == 0 && failures == 0 && consistent && summary.complete {
            0
        } else if bad > 0 || failures > 0 || !consistent {
            2
        } else {
            3
        },
    )
}
