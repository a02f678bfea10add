//! `ietlab`: Rauzy classes, induction paths, block codings, mixing checks,
//! the full construction and L-shaped tables from the command line.
//!
//! Permutations are given in direct one-line notation (`3142` means
//! `π(1)=3, π(2)=1, ...`). Exit codes: 0 success, 2 a check ran and did not
//! verify, 1 usage or internal error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use ietlab::billiard::{flow_mixing_check, suspension_data, transversal_iet, FlowStatus, LTable};
use ietlab::coding::{hat_blocks, return_blocks_with_budget, HatKind, DEFAULT_EXPANSION_BUDGET};
use ietlab::construct::{run_construction, ConstructOptions};
use ietlab::iet::{check_keane, induce_path};
use ietlab::mixing::{alphabet_mixing_check, FullShift, IetLanguage, Language, MixingStatus, SubstitutionLanguage};
use ietlab::paths::{build_named_path, make_columns_coprime, make_proxy_coprime, PathKind, DEFAULT_CAP};
use ietlab::perm::classify;
use ietlab::rauzy::{enumerate_class, moves_to_string, step};
use ietlab::{ExactIet, ExactNumber, Move, Permutation, SCHEMA};

#[derive(Parser)]
#[command(name = "ietlab", version, about = "Exact IETs, Rauzy induction and finite mixing certificates")]
struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel checks (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate the Rauzy class of a permutation.
    Class {
        #[arg(long)]
        perm: Permutation,
    },
    /// One Rauzy move on a permutation.
    Step {
        #[arg(long)]
        perm: Permutation,
        #[arg(long = "move")]
        mv: Move,
    },
    /// Run Rauzy induction on a concrete IET.
    Induce {
        #[command(flatten)]
        iet: IetArgs,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Emit a named induction path with its matrix.
    Paths {
        #[arg(long)]
        kind: PathKind,
        /// First parameter (`s` for MStar).
        #[arg(long, default_value_t = 1)]
        m: u64,
        /// Second parameter (`ℓ` for MStar).
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long, default_value_t = 4)]
        d: usize,
        /// Proxy permutation for tilde kinds, standard start for MStar.
        #[arg(long)]
        anchor: Option<Permutation>,
    },
    /// Coprime column sums: from four sums, or from a permutation's class.
    Coprime {
        /// Four comma-separated column sums.
        #[arg(long, value_delimiter = ',', conflicts_with = "perm")]
        sums: Option<Vec<u64>>,
        #[arg(long)]
        perm: Option<Permutation>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
    /// Return blocks after induction, or the symbolic hat-block table.
    Blocks {
        #[command(flatten)]
        iet: IetArgs,
        #[arg(long, default_value_t = 4)]
        steps: usize,
        /// Print the hat table of this kind instead (four-letter, proxy, quasi).
        #[arg(long)]
        hat: Option<HatKind>,
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long, default_value_t = 1)]
        n: u64,
    },
    /// Check k-alphabet mixing of an IET or a reference language.
    CheckMixing {
        #[command(flatten)]
        iet: IetArgs,
        /// `fibonacci` or `full-shift:D` instead of an IET.
        #[arg(long)]
        language: Option<String>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        #[arg(long, env = "IETLAB_BUDGET", default_value_t = 50_000)]
        budget: usize,
    },
    /// Build an IET with a verified k-alphabet mixing certificate.
    Construct {
        #[arg(long)]
        perm: Permutation,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        scale: u64,
        #[arg(long)]
        seed: Option<ExactNumber>,
        #[arg(long, default_value_t = 10_000)]
        keane_horizon: usize,
        #[arg(long, default_value_t = 500)]
        horizon: usize,
        #[arg(long, env = "IETLAB_BUDGET", default_value_t = 50_000)]
        budget: usize,
    },
    /// L-shaped table: transversal IET, heights, optional flow check.
    Billiard {
        /// Table JSON `{a,b,s,t,cot_theta}`; overrides the numeric flags.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value = "3")]
        a: ExactNumber,
        #[arg(long, default_value = "1")]
        b: ExactNumber,
        #[arg(long, default_value = "1")]
        s: ExactNumber,
        #[arg(long, default_value = "1")]
        t: ExactNumber,
        #[arg(long, default_value = "1/2")]
        cot: ExactNumber,
        /// Run the flow check with this ε.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 50.0)]
        t_max: f64,
        #[arg(long, env = "IETLAB_BUDGET", default_value_t = 50_000)]
        budget: usize,
    },
}

/// An IET from a JSON file, or from a permutation and comma-separated lengths
/// (normalized to total 1).
#[derive(Args)]
struct IetArgs {
    #[arg(long, conflicts_with_all = ["perm", "lengths"])]
    iet: Option<PathBuf>,
    #[arg(long, requires = "lengths")]
    perm: Option<Permutation>,
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<ExactNumber>>,
}

impl IetArgs {
    fn load(&self) -> Result<Option<ExactIet>, String> {
        if let Some(p) = &self.iet {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            return serde_json::from_str(&text).map(Some).map_err(|e| format!("{}: {e}", p.display()));
        }
        match (&self.perm, &self.lengths) {
            (Some(p), Some(l)) => ExactIet::normalized(p.clone(), l.clone()).map(Some).map_err(|e| e.to_string()),
            _ => Ok(None),
        }
    }

    fn require(&self) -> Result<ExactIet, String> {
        self.load()?.ok_or_else(|| "give --iet FILE or --perm with --lengths".to_string())
    }
}

/// What a command produced: the JSON artifact, its text rendering, an
/// optional DOT rendering, and whether the check it ran verified.
struct Output {
    json: Value,
    text: String,
    dot: Option<String>,
    verified: bool,
}

impl Output {
    fn new<T: Serialize>(value: &T, text: String) -> Result<Output, String> {
        let mut json = serde_json::to_value(value).map_err(|e| e.to_string())?;
        if let Value::Object(map) = &mut json {
            map.insert("schema".into(), json!(SCHEMA));
        }
        Ok(Output { json, text, dot: None, verified: true })
    }
}

fn rows_text(rows: &[Vec<u64>]) -> String {
    rows.iter().map(|r| r.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("\n")
}

fn word_text(w: &[u8]) -> String {
    w.iter().map(u8::to_string).collect()
}

fn run(cmd: &Cmd) -> Result<Output, String> {
    let e = |x: ietlab::Error| x.to_string();
    match cmd {
        Cmd::Class { perm } => {
            let g = enumerate_class(perm).map_err(e)?;
            let mut text = format!("{} vertices\n", g.vertices.len());
            for edge in &g.edges {
                text += &format!("{} -{}-> {}\n", edge.from, edge.mv, edge.to);
            }
            let info = json!({ "start": perm, "class": classify(perm), "graph": g, "strongly_connected": g.is_strongly_connected() });
            let mut out = Output::new(&info, text)?;
            out.dot = Some(g.to_dot());
            Ok(out)
        }
        Cmd::Step { perm, mv } => {
            let (next, matrix) = step(perm, *mv).map_err(e)?;
            let text = format!("{perm} -{mv}-> {next}\n{}", rows_text(&matrix.rows()));
            Output::new(&json!({ "perm": perm, "move": mv, "next": next, "matrix": matrix }), text)
        }
        Cmd::Induce { iet, steps } => {
            let t = iet.require()?;
            let r = induce_path(&t, *steps).map_err(e)?;
            let text = format!("moves {}\nend {}\n{}", moves_to_string(&r.moves), r.iet.perm(), rows_text(&r.matrix.rows()));
            Output::new(&json!({ "input": t, "moves": moves_to_string(&r.moves), "matrix": r.matrix, "iet": r.iet }), text)
        }
        Cmd::Paths { kind, m, n, d, anchor } => {
            let p = build_named_path(*kind, [*m, *n], *d, anchor.as_ref()).map_err(e)?;
            let text = format!("{:?}{:?} {} -> {}\nmoves {}\n{}", p.kind, p.params, p.start, p.end, moves_to_string(&p.moves), rows_text(&p.matrix.rows()));
            Output::new(&p, text)
        }
        Cmd::Coprime { sums, perm, cap } => match (sums, perm) {
            (Some(c), None) => {
                let c: [u64; 4] = c.as_slice().try_into().map_err(|_| "--sums needs exactly four values".to_string())?;
                let cert = make_columns_coprime(c, *cap).map_err(e)?;
                let text = format!("a = {}, b = {}, sums ({}, {})", cert.chosen_a, cert.chosen_b, cert.col2_sum, cert.col3_sum);
                Output::new(&cert, text)
            }
            (None, Some(p)) => {
                let r = make_proxy_coprime(p, *cap).map_err(e)?;
                let text = format!("{} -> proxy {} ({:?})\ncolumn sums {:?}", p, r.proxy, r.kind, r.matrix.column_sums());
                Output::new(&r, text)
            }
            _ => Err("give --sums or --perm".into()),
        },
        Cmd::Blocks { iet, steps, hat, d, m, n } => {
            if let Some(kind) = hat {
                let table = hat_blocks(*kind, *d, *m, *n).map_err(e)?;
                let text = table.rows.iter().enumerate().map(|(i, r)| format!("B^{} = {r}", i + 1)).collect::<Vec<_>>().join("\n");
                return Output::new(&table, text);
            }
            let t = iet.require()?;
            let fam = return_blocks_with_budget(&t, *steps, DEFAULT_EXPANSION_BUDGET).map_err(e)?;
            let text = fam.blocks.iter().enumerate().map(|(i, b)| format!("B{} = {}", i + 1, word_text(b))).collect::<Vec<_>>().join("\n");
            Output::new(&fam, text)
        }
        Cmd::CheckMixing { iet, language, k, horizon, budget } => {
            let t = iet.load()?;
            let lang: Box<dyn Language + '_> = match (language.as_deref(), &t) {
                (Some("fibonacci"), None) => Box::new(SubstitutionLanguage::fibonacci()),
                (Some(l), None) if l.starts_with("full-shift:") => {
                    let d = l["full-shift:".len()..].parse().map_err(|_| format!("bad alphabet size in {l}"))?;
                    Box::new(FullShift { d })
                }
                (None, Some(t)) => Box::new(IetLanguage { iet: t }),
                (Some(l), None) => return Err(format!("unknown language {l}")),
                _ => return Err("give exactly one of an IET or --language".into()),
            };
            let r = alphabet_mixing_check(lang.as_ref(), *k, *horizon, *budget).map_err(e)?;
            let mut text = format!("{:?}, N = {:?}, {} blocks", r.status, r.n, r.block_count);
            for f in r.failing_pairs.iter().take(10) {
                text += &format!("\n  {} .. {} missing length {}", word_text(&f.u), word_text(&f.v), f.missing);
            }
            let mut out = Output::new(&r, text)?;
            out.verified = r.status == MixingStatus::Verified;
            Ok(out)
        }
        Cmd::Construct { perm, k, scale, seed, keane_horizon, horizon, budget } => {
            let mut opts = ConstructOptions { scale_p: *scale, keane_horizon: *keane_horizon, mixing_horizon: *horizon, length_budget: *budget, ..Default::default() };
            if let Some(s) = seed {
                opts.seed = s.clone();
            }
            let r = run_construction(perm, *k, &opts).map_err(e)?;
            let text = format!(
                "path {} moves (prefix {}, coprime stage ends at {})\nproxy {} {:?}\nblock lengths {:?}, g = {}, p = {}\nKeane to {}: {}\nmixing {:?}, N = {:?}\nlengths {}",
                r.path.len(),
                r.prefix_len,
                r.coprime_len,
                r.proxy,
                r.proxy_kind,
                r.block_lengths,
                r.g,
                r.scale_p,
                r.keane.verified_horizon,
                r.keane.passed,
                r.mixing.status,
                r.mixing.n,
                r.iet.lengths().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", "),
            );
            let mut out = Output::new(&r, text)?;
            out.verified = r.succeeded();
            Ok(out)
        }
        Cmd::Billiard { table, a, b, s, t, cot, epsilon, k, t_max, budget } => {
            let tb = match table {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(|x| format!("{}: {x}", p.display()))?;
                    serde_json::from_str::<LTable>(&text).map_err(|x| format!("{}: {x}", p.display()))?
                }
                None => LTable { a: a.clone(), b: b.clone(), s: s.clone(), t: t.clone(), cot_theta: cot.clone() },
            };
            let iet = transversal_iet(&tb).map_err(e)?;
            let susp = suspension_data(&tb).map_err(e)?;
            let mut text = format!("IET {} lengths {}\nheights {:?}", iet.perm(), iet.lengths().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", "), susp.heights);
            let keane = check_keane(&iet, 10_000).map_err(e)?;
            text += &format!("\nKeane to {}: {}", keane.verified_horizon, keane.passed);
            let flow = match epsilon {
                Some(eps) => {
                    let f = flow_mixing_check(&iet, &susp.heights, *k, *eps, *t_max, *budget).map_err(e)?;
                    text += &format!("\nflow {:?}, T0 = {:?}", f.status, f.t0);
                    Some(f)
                }
                None => None,
            };
            let verified = flow.as_ref().map_or(true, |f| f.status == FlowStatus::Verified);
            let mut out = Output::new(&json!({ "table": tb, "iet": iet, "suspension": susp, "keane": keane, "flow": flow }), text)?;
            out.verified = verified;
            Ok(out)
        }
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<(), String> {
    let body = match cli.format {
        Format::Json => serde_json::to_string_pretty(&out.json).map_err(|e| e.to_string())? + "\n",
        Format::Text => out.text.clone() + "\n",
        Format::Dot => out.dot.clone().ok_or("DOT output is only available for `class`")?,
    };
    match &cli.out {
        Some(p) => fs::write(p, body).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("ietlab: {err}");
            return ExitCode::from(1);
        }
    }
    let result = run(&cli.cmd).and_then(|out| emit(&cli, &out).map(|()| out.verified));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("ietlab: {msg}");
            ExitCode::from(1)
        }
    }
}
