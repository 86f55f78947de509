//! Command-line surface: reproducible experiments over families, chains,
//! and certificates.
//!
//! Every run is a pure function of its arguments and input files; outputs
//! are byte-identical across repeated runs. Exit codes: `0` success, `1`
//! a violated bound or a freeness violation during certification, `2`
//! usage or input errors.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::certio::serialize_certificate;
use crate::cyclic::CyclicPermutation;
use crate::grouping::{build_certificate, cycle_bound, CertifyOutcome};
use crate::lattice::{
    k_middle_levels, katona_tarjan_construction, parse_family, serialize_family, GroundSet,
    SetFamily,
};
use crate::pattern::{find_embedding, PosetPattern};
use crate::search::{
    branch_and_bound_max, brute_force_max, double_count_check, lym_report,
    random_maximal_free_family, SearchConfig, SearchMode,
};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "yfree",
    version,
    about = "Forbidden-subposet detection, cyclic-interval certificates, and extremal search over set families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ConstructKind {
    /// Union of the k largest levels of 2^[n].
    Middle,
    /// The Katona–Tarján V- and Λ-free construction.
    Kt,
    /// Seeded random maximal induced {Y_k, Y_k'}-free family.
    Random,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Bnb,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a family file for one of the standard constructions.
    Construct {
        #[arg(long, value_enum)]
        kind: ConstructKind,
        #[arg(long)]
        n: u32,
        /// Number of levels (middle) or pattern parameter (random).
        #[arg(long)]
        k: Option<u32>,
        /// Seed for the random construction (required there).
        #[arg(long)]
        seed: Option<u64>,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search a family for one forbidden pattern; print a witness or FREE.
    Detect {
        /// Pattern spec: chain:k, v, lambda, y:k, yprime:k, butterfly.
        #[arg(long)]
        pattern: String,
        /// Require an induced copy (order-reflecting), not just a weak one.
        #[arg(long)]
        induced: bool,
        #[arg(long)]
        family: PathBuf,
    },
    /// Build and print the chain-grouping certificate for |A ∩ I(n)^pi| <= kn.
    Certify {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        k: u32,
        /// Permutation: "id" or a comma list "3,1,2,...".
        #[arg(long, default_value = "id")]
        pi: String,
        /// Write the certificate here instead of stdout.
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Maximize a free family over 2^[n].
    Search {
        #[arg(long)]
        n: u32,
        /// Comma-separated pattern specs, e.g. "y:2,yprime:2".
        #[arg(long)]
        patterns: String,
        #[arg(long)]
        induced: bool,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Node budget; required in bnb mode.
        #[arg(long)]
        budget: Option<u64>,
        /// Worker threads for bnb mode.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write the witness family here instead of stdout.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Exact rational LYM sum of a family against the bound k.
    Lym {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        k: u32,
    },
    /// Verify the permutation double-counting identity for a family.
    Doublecount {
        #[arg(long)]
        family: PathBuf,
    },
}

/// Runs the CLI on explicit arguments (the program name included),
/// writing to the given streams. Returns the process exit code.
pub fn run<O: Write, E: Write>(args: &[String], out: &mut O, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here with exit code 0
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return e.exit_code();
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn read_family(path: &PathBuf) -> Result<SetFamily> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_family(&text)
}

fn write_output(path: &Option<PathBuf>, text: &str, out: &mut impl Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            let _ = write!(out, "{text}");
            Ok(())
        }
    }
}

fn dispatch<O: Write>(command: Command, out: &mut O) -> Result<i32> {
    match command {
        Command::Construct {
            kind,
            n,
            k,
            seed,
            out: out_path,
        } => {
            let ground = GroundSet::new(n)?;
            let family = match kind {
                ConstructKind::Middle => {
                    let k = k.ok_or_else(|| Error::invalid("construct --kind middle needs --k"))?;
                    k_middle_levels(ground, k)?
                }
                ConstructKind::Kt => katona_tarjan_construction(ground),
                ConstructKind::Random => {
                    let k = k.ok_or_else(|| Error::invalid("construct --kind random needs --k"))?;
                    let seed =
                        seed.ok_or_else(|| Error::invalid("construct --kind random needs --seed"))?;
                    let patterns = [PosetPattern::y(k)?, PosetPattern::yprime(k)?];
                    random_maximal_free_family(ground, &patterns, true, seed)?
                }
            };
            write_output(&out_path, &serialize_family(&family), out)?;
            Ok(0)
        }
        Command::Detect {
            pattern,
            induced,
            family,
        } => {
            let fam = read_family(&family)?;
            let pattern = PosetPattern::parse_spec(&pattern)?;
            match find_embedding(&fam, &pattern, induced) {
                Some(embedding) => {
                    let _ = writeln!(out, "pattern={} induced={induced}", pattern.label());
                    let _ = write!(out, "{}", embedding.render(&fam, &pattern));
                }
                None => {
                    let _ = writeln!(out, "FREE");
                }
            }
            Ok(0)
        }
        Command::Certify {
            family,
            k,
            pi,
            cert,
        } => {
            let fam = read_family(&family)?;
            let pi = CyclicPermutation::parse(fam.n(), &pi)?;
            let (count, bound, holds) = cycle_bound(&fam, k, &pi)?;
            match build_certificate(&fam, k, &pi)? {
                CertifyOutcome::Certificate(certificate) => {
                    debug_assert_eq!((certificate.count, certificate.bound), (count, bound));
                    let verdict = if holds { "OK" } else { "EXCEEDED" };
                    let _ = writeln!(out, "count={count} bound={bound} {verdict}");
                    write_output(&cert, &serialize_certificate(&certificate), out)?;
                    Ok(if holds { 0 } else { 1 })
                }
                CertifyOutcome::Violation(v) => {
                    let _ = writeln!(out, "count={count} bound={bound} VIOLATION");
                    let _ = writeln!(out, "pattern={}", v.pattern.label());
                    let _ = writeln!(out, "provenance={}", v.provenance);
                    let _ = write!(out, "{}", v.embedding.render(&fam, &v.pattern));
                    Ok(1)
                }
            }
        }
        Command::Search {
            n,
            patterns,
            induced,
            mode,
            budget,
            jobs,
            witness_out,
        } => {
            let ground = GroundSet::new(n)?;
            let patterns = PosetPattern::parse_spec_list(&patterns)?;
            let jobs = jobs.max(1);
            let result = match mode {
                ModeArg::Exhaustive => {
                    let cfg = SearchConfig::new(ground, patterns, induced, SearchMode::Exhaustive);
                    brute_force_max(&cfg)?
                }
                ModeArg::Bnb => {
                    let budget = budget
                        .ok_or_else(|| Error::invalid("search --mode bnb needs an explicit --budget"))?;
                    let mut cfg =
                        SearchConfig::new(ground, patterns, induced, SearchMode::BranchAndBound);
                    cfg.node_budget = Some(budget);
                    cfg.jobs = jobs;
                    branch_and_bound_max(&cfg)?
                }
            };
            let _ = writeln!(out, "max={}", result.max_size);
            if jobs <= 1 {
                // node counts are schedule-dependent with several workers;
                // keep the output a pure function of the arguments
                let _ = writeln!(out, "nodes={}", result.nodes);
            }
            let _ = writeln!(out, "exhaustive={}", result.exhaustive);
            write_output(&witness_out, &serialize_family(&result.witness), out)?;
            Ok(0)
        }
        Command::Lym { family, k } => {
            let fam = read_family(&family)?;
            let report = lym_report(&fam, k)?;
            let _ = writeln!(
                out,
                "sum={} k={} holds={} tight={} slack={}",
                report.sum,
                report.k,
                report.holds(),
                report.tight,
                report.slack
            );
            Ok(if report.holds() { 0 } else { 1 })
        }
        Command::Doublecount { family } => {
            let fam = read_family(&family)?;
            let report = double_count_check(&fam)?;
            let _ = writeln!(
                out,
                "lhs={} rhs={} equal={} max-intersection={} implied-lym-bound={}",
                report.lhs, report.rhs, report.holds, report.max_intersection,
                report.implied_lym_bound
            );
            Ok(if report.holds { 0 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let args: Vec<String> = std::iter::once("yfree".to_string())
            .chain(args.iter().map(|s| s.to_string()))
            .collect();
        let code = run(&args, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_2() {
        let (code, _, err) = run_cli(&["construct", "--kind", "middle", "--n", "4"]);
        assert_eq!(code, 2);
        assert!(err.contains("--k"), "{err}");
        let (code, _, _) = run_cli(&["nonsense"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_cli(&["search", "--n", "4", "--patterns", "y:2", "--mode", "bnb"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = run_cli(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("certify"));
    }

    #[test]
    fn construct_writes_family_text() {
        let (code, out, _) = run_cli(&["construct", "--kind", "middle", "--n", "4", "--k", "2"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("n=4\n"));
        assert_eq!(out.lines().count(), 11);
        let (code, out, _) = run_cli(&["construct", "--kind", "kt", "--n", "3"]);
        assert_eq!(code, 0);
        assert!(out.contains("1,3"));
    }

    #[test]
    fn search_exhaustive_prints_max() {
        let (code, out, _) = run_cli(&[
            "search",
            "--n",
            "3",
            "--patterns",
            "y:2,yprime:2",
            "--induced",
            "--mode",
            "exhaustive",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("max=6\n"), "{out}");
        assert!(out.contains("exhaustive=true"));
    }
}
