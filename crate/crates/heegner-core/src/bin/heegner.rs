//! Command line driver: curve surveys, single traces, nu, class
//! numbers, and Fourier coefficient tables.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 a survey found
//! a counterexample.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use heegner_core::curve_store::{self, CurveRecord};
use heegner_core::ec_arith;
use heegner_core::error::Error;
use heegner_core::heegner;
use heegner_core::quadforms::{self, HeegnerPair};
use heegner_core::survey::{render_json, render_tsv, run_survey, SurveyOptions};

/// Environment variable overriding the coefficient cache directory.
const CACHE_ENV: &str = "HEEGNER_CACHE_DIR";

#[derive(Parser)]
#[command(
    name = "heegner",
    version,
    about = "Heegner point traces, subgroup indices, and real components of X0+(N)"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Survey the rank-one prime-conductor curves of a curve file.
    Survey {
        /// Curve file to read.
        #[arg(long)]
        curves: PathBuf,
        /// Largest |D| tried per curve.
        #[arg(long, default_value_t = 163)]
        dmax: i64,
        /// Working precision in bits.
        #[arg(long, default_value_t = 256)]
        prec: u32,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Report format.
        #[arg(long, value_parser = ["tsv", "json"], default_value = "tsv")]
        format: String,
        /// Omit timings so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Trace one Heegner pair (D, r) on a curve from the curve file.
    Trace {
        label: String,
        #[arg(allow_hyphen_values = true)]
        d: i64,
        r: u64,
        /// Working precision in bits.
        #[arg(long, default_value_t = 256)]
        prec: u32,
        /// Curve file to read.
        #[arg(long, default_value = "data/curves.txt")]
        curves: PathBuf,
    },
    /// Real components of X0+(N) for prime N.
    Nu { n: u64 },
    /// Class number of a fundamental discriminant (either sign).
    Classnum {
        #[arg(allow_hyphen_values = true)]
        delta: i64,
    },
    /// Fourier coefficients a_1..a_m of a curve, one per line.
    An {
        label: String,
        m: u64,
        /// Curve file to read.
        #[arg(long, default_value = "data/curves.txt")]
        curves: PathBuf,
    },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Domain(_) => 1,
        Error::Parse { .. } | Error::Io(_) | Error::Precision(_) | Error::Recognition(_) => 2,
    }
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(PathBuf::from)
}

fn load_curve(path: &PathBuf, label: &str) -> Result<CurveRecord, Error> {
    let curves = curve_store::parse_curve_file(path)?;
    curves
        .into_iter()
        .find(|c| c.label == label)
        .ok_or_else(|| Error::Validation(format!("no curve labelled {label} in {}", path.display())))
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.cmd {
        Cmd::Survey {
            curves,
            dmax,
            prec,
            jobs,
            format,
            no_timing,
        } => {
            let records = curve_store::parse_curve_file(&curves)?;
            let opts = SurveyOptions {
                dmax,
                precision_bits: prec,
                jobs,
                with_timing: !no_timing,
                cache_dir: cache_dir(),
            };
            let report = run_survey(&records, &opts)?;
            match format.as_str() {
                "json" => print!("{}", render_json(&report)?),
                _ => print!("{}", render_tsv(&report)),
            }
            Ok(if report.counterexamples > 0 { 3 } else { 0 })
        }
        Cmd::Trace {
            label,
            d,
            r,
            prec,
            curves,
        } => {
            let curve = load_curve(&curves, &label)?;
            let two_n = 2 * curve.conductor;
            let pair = HeegnerPair {
                n: curve.conductor,
                d,
                r,
                r_conj: (two_n - r % two_n) % two_n,
            };
            let t = heegner::trace(&pair, &curve, prec)?;
            println!("curve\t{label}");
            println!("pair\tD={d} r={r} u={}", t.u_d);
            println!("point\t{}", t.point);
            println!(
                "index\t{}",
                t.index.map_or("-".into(), |i| i.to_string())
            );
            println!("residual\t{:.3e}", t.residual);
            println!("precision_bits\t{}", t.precision_bits);
            Ok(0)
        }
        Cmd::Nu { n } => {
            if !quadforms::is_prime(n) {
                eprintln!("error: nu needs a prime level, {n} is composite");
                return Ok(2);
            }
            println!("{}", quadforms::nu(n)?);
            Ok(0)
        }
        Cmd::Classnum { delta } => {
            let h = if delta < 0 {
                quadforms::class_group(delta)?.len() as u64
            } else {
                quadforms::indefinite_class_number(delta)?
            };
            println!("{h}");
            Ok(0)
        }
        Cmd::An { label, m, curves } => {
            let curve = load_curve(&curves, &label)?;
            let table = match cache_dir() {
                Some(dir) => {
                    if let Some(t) = curve_store::load_cache(&label, m, &dir)? {
                        t
                    } else {
                        let t = ec_arith::an_table(&curve, m)?;
                        curve_store::store_cache(&t, &dir)?;
                        t
                    }
                }
                None => ec_arith::an_table(&curve, m)?,
            };
            let mut out = String::new();
            for n in 1..=m {
                out.push_str(&table.get(n).to_string());
                out.push('\n');
            }
            print!("{out}");
            Ok(0)
        }
    }
}
