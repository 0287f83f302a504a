//! Command-line front end. Exit codes: 0 = success/pass, 1 = verification
//! fail, 2 = budget exceeded, 3 = invalid input.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use crate::combinators::{
    bound_abelian_ext, bound_general_ext, bound_gm, bound_semidirect, check_expression_maps,
    scheme_for, transport_generators, BoundTable, ExtensionData, SchemeMethod,
};
use crate::error::{Error, Result};
use crate::folner::{cube_words, verify_boundary_folner, verify_folner, FiniteSet};
use crate::groups::{Element, Group, QuotientStructure};
use crate::search::{distortion, folner_function_csv, optimal_folner, SearchBudget};
use crate::search::folner_function;
use crate::spec::load_group;
use crate::words::Word;

#[derive(Parser)]
#[command(name = "folner", about = "Exact Følner-set construction and verification", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct BudgetArgs {
    /// Ball radius cap for searches
    #[arg(long, default_value_t = 12)]
    max_radius: usize,
    /// Cardinality cap for searched sets
    #[arg(long, default_value_t = 16)]
    max_cardinality: usize,
    /// Candidate-subset cap
    #[arg(long, default_value_t = 10_000_000)]
    max_candidates: u64,
    /// Ball-size cap (elements)
    #[arg(long, default_value_t = 2_000_000)]
    max_ball: usize,
    /// Wall-clock cap in seconds
    #[arg(long, default_value_t = 120)]
    time_limit_secs: u64,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            max_radius: self.max_radius,
            max_cardinality: self.max_cardinality,
            max_candidates: self.max_candidates,
            max_ball: self.max_ball,
            time_limit: Duration::from_secs(self.time_limit_secs),
        }
    }
}

#[derive(Args)]
struct OutArg {
    /// Write primary output here instead of stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Enumerate,
    Cube,
    Semiabe,
    Abex,
    Semid,
}

impl MethodArg {
    fn method(self) -> SchemeMethod {
        match self {
            MethodArg::Auto => SchemeMethod::Auto,
            MethodArg::Enumerate => SchemeMethod::Enumerate,
            MethodArg::Cube => SchemeMethod::Cube,
            MethodArg::Semiabe => SchemeMethod::Semiabe,
            MethodArg::Abex => SchemeMethod::Abex,
            MethodArg::Semid => SchemeMethod::Semid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Formula {
    Gm,
    Abex,
    Semid,
    Genex,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify that a word set evaluates to an n-Følner set
    Verify {
        #[arg(long)]
        group: String,
        #[arg(long)]
        set: String,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Verify the boundary variant |∂F|/|F| <= 1/n
    BoundaryVerify {
        #[arg(long)]
        group: String,
        #[arg(long)]
        set: String,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Cube of commuting elements C_n(y1..ys)
    Cube {
        #[arg(long)]
        group: String,
        /// File of words, one commuting generator per line
        #[arg(long)]
        ys: String,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Produce an n-Følner word set via a construction scheme
    Scheme {
        #[arg(long)]
        group: String,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Parse and build a group spec, printing a summary
    Build {
        #[arg(long)]
        group: String,
    },
    /// Minimal n-Følner set by exhaustive ball search (ball-certified)
    SearchOptimal {
        #[arg(long)]
        group: String,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Tabulate the ball-certified Følner function for n = 1..=n_max
    FolnerFunction {
        #[arg(long)]
        group: String,
        #[arg(long)]
        n_max: u64,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Distortion table of N inside Γ up to a radius
    Distortion {
        /// Quotient-kind group spec for Γ with K = Γ/N
        #[arg(long)]
        group: String,
        /// Group spec for N over its own generators Y
        #[arg(long)]
        n_group: String,
        /// File embedding each Y-generator as an X-word, one per line
        #[arg(long)]
        embed: String,
        #[arg(long)]
        r_max: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Evaluate a Følner-function upper bound exactly
    Bound {
        #[arg(long, value_enum)]
        formula: Formula,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        l0: Option<u64>,
        #[arg(long)]
        l1: Option<u64>,
        #[arg(long)]
        l2: Option<u64>,
        #[arg(long)]
        size_x: Option<u64>,
        #[arg(long)]
        size_y: Option<u64>,
        #[arg(long)]
        c: Option<u64>,
        /// F_{Γ/N}(2n) for the abex formula
        #[arg(long)]
        fq: Option<BigUint>,
        /// Tables: `id`, `pow:E`, `const:V`, or `map:1=3,2=5`
        #[arg(long)]
        f_h: Option<String>,
        #[arg(long)]
        f_n: Option<String>,
        #[arg(long)]
        f_k: Option<String>,
        #[arg(long)]
        delta: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Transport a scheme's output to a new generating set
    Transport {
        /// Group over the old generators X
        #[arg(long)]
        group_x: String,
        /// Group over the new generators Y
        #[arg(long)]
        group_y: String,
        /// File with φ(x) as a Y-word, one line per X-generator
        #[arg(long)]
        phi: String,
        /// File with ψ(y) as an X-word, one line per Y-generator
        #[arg(long)]
        psi: String,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArg,
    },
}

fn read_words(path: &str, g: &Group) -> Result<Vec<Word>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read word file `{path}`: {e}")))?;
    let mut words = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        words.push(
            Word::parse(line, g.alphabet())
                .map_err(|e| Error::input(format!("{path}:{}: {e}", i + 1)))?,
        );
    }
    if words.is_empty() {
        return Err(Error::input(format!("word file `{path}` is empty")));
    }
    Ok(words)
}

fn emit(out: &OutArg, content: &str) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::input(format!("cannot write `{path}`: {e}"))),
        None => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn words_block(g: &Group, words: impl Iterator<Item = Word>) -> String {
    let mut s = String::new();
    for w in words {
        s.push_str(&w.display(g.alphabet()));
        s.push('\n');
    }
    s
}

fn parse_bound_table(which: &str, s: Option<&String>) -> Result<BoundTable> {
    let s = s.ok_or_else(|| Error::input(format!("formula requires --{which}")))?;
    if s == "id" {
        return Ok(BoundTable::Identity);
    }
    if let Some(e) = s.strip_prefix("pow:") {
        let e: u32 = e.parse().map_err(|_| Error::input(format!("--{which}: bad exponent `{e}`")))?;
        return Ok(BoundTable::Power(e));
    }
    if let Some(v) = s.strip_prefix("const:") {
        let v: BigUint = v.parse().map_err(|_| Error::input(format!("--{which}: bad constant `{v}`")))?;
        return Ok(BoundTable::Const(v));
    }
    if let Some(body) = s.strip_prefix("map:") {
        let mut m = BTreeMap::new();
        for pair in body.split(',') {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::input(format!("--{which}: map entry `{pair}` is not k=v")))?;
            let k: BigUint = k.parse().map_err(|_| Error::input(format!("--{which}: bad key `{k}`")))?;
            let v: BigUint = v.parse().map_err(|_| Error::input(format!("--{which}: bad value `{v}`")))?;
            m.insert(k, v);
        }
        return Ok(BoundTable::Map(m));
    }
    Err(Error::input(format!(
        "--{which}: expected `id`, `pow:E`, `const:V`, or `map:k=v,...`, got `{s}`"
    )))
}

fn required<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::input(format!("formula requires --{name}")))
}

/// Runs the CLI; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Budget(_) => 2,
                Error::Input(_) | Error::Precondition(_) => 3,
            }
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Verify { group, set, n, out } => {
            let g = load_group(&group)?;
            let f = FiniteSet::from_words(&g, &read_words(&set, &g)?)?;
            let report = verify_folner(&g, &f, n)?;
            emit(&out, &report.to_csv())?;
            Ok(if report.verdict { 0 } else { 1 })
        }
        Cmd::BoundaryVerify { group, set, n, out } => {
            let g = load_group(&group)?;
            let f = FiniteSet::from_words(&g, &read_words(&set, &g)?)?;
            let report = verify_boundary_folner(&g, &f, n)?;
            emit(&out, &report.to_csv())?;
            Ok(if report.verdict { 0 } else { 1 })
        }
        Cmd::Cube { group, ys, n, out } => {
            let g = load_group(&group)?;
            let gens: Vec<(Word, Element)> = read_words(&ys, &g)?
                .into_iter()
                .map(|w| Ok((w.clone(), g.evaluate(&w)?)))
                .collect::<Result<_>>()?;
            let ws = cube_words(&g, &gens, n)?;
            emit(&out, &words_block(&g, ws.iter().map(|(_, w)| w.clone())))?;
            Ok(0)
        }
        Cmd::Scheme { group, n, method, budget, out } => {
            let g = load_group(&group)?;
            let scheme = scheme_for(&g, method.method(), &budget.budget())?;
            let ws = scheme.generate(n)?;
            eprintln!("scheme: {} at n = {n}, {} words", scheme.provenance, ws.len());
            emit(&out, &words_block(&g, ws.iter().map(|(_, w)| w.clone())))?;
            Ok(0)
        }
        Cmd::Build { group } => {
            let g = load_group(&group)?;
            println!("kind: {}", g.kind_name());
            println!("generators: {}", g.alphabet().names().join(" "));
            if let Some(q) = g.quotient_group() {
                println!("quotient: {}", q.kind_name());
            }
            Ok(0)
        }
        Cmd::SearchOptimal { group, n, budget, out } => {
            let g = load_group(&group)?;
            let (ws, cert) = optimal_folner(&g, n, &budget.budget())?;
            eprintln!(
                "optimal: {} words, certified within B_{} ({} candidates checked)",
                ws.len(),
                cert.radius,
                cert.candidates_checked
            );
            emit(&out, &words_block(&g, ws.iter().map(|(_, w)| w.clone())))?;
            Ok(0)
        }
        Cmd::FolnerFunction { group, n_max, budget, out } => {
            let g = load_group(&group)?;
            let rows = folner_function(&g, n_max, &budget.budget())?;
            emit(&out, &folner_function_csv(&rows))?;
            Ok(0)
        }
        Cmd::Distortion { group, n_group, embed, r_max, budget, out } => {
            let g = load_group(&group)?;
            let q = QuotientStructure::from_group(&g)?;
            let ng = load_group(&n_group)?;
            let embed_words = read_words(&embed, &g)?;
            let ext = ExtensionData::new(q, ng, embed_words)?;
            let table = distortion(&ext, r_max, &budget.budget())?;
            emit(&out, &table.to_csv())?;
            Ok(0)
        }
        Cmd::Bound { formula, n, p, l0, l1, l2, size_x, size_y, c, fq, f_h, f_n, f_k, delta, out } => {
            let value = match formula {
                Formula::Gm => bound_gm(
                    n,
                    required(p, "p")?,
                    required(l0, "l0")?,
                    required(l1, "l1")?,
                    required(l2, "l2")?,
                )?,
                Formula::Abex => bound_abelian_ext(
                    n,
                    required(size_x, "size-x")?,
                    &fq.ok_or_else(|| Error::input("formula requires --fq"))?,
                )?,
                Formula::Semid => bound_semidirect(
                    n,
                    required(size_y, "size-y")?,
                    required(c, "c")?,
                    &parse_bound_table("f-h", f_h.as_ref())?,
                    &parse_bound_table("f-n", f_n.as_ref())?,
                )?,
                Formula::Genex => bound_general_ext(
                    n,
                    required(size_x, "size-x")?,
                    &parse_bound_table("f-k", f_k.as_ref())?,
                    &parse_bound_table("f-n", f_n.as_ref())?,
                    &parse_bound_table("delta", delta.as_ref())?,
                )?,
            };
            emit(&out, &format!("{value}\n"))?;
            Ok(0)
        }
        Cmd::Transport { group_x, group_y, phi, psi, n, method, budget, out } => {
            let gx = load_group(&group_x)?;
            let gy = load_group(&group_y)?;
            let phi = read_words(&phi, &gy)?;
            let psi = read_words(&psi, &gx)?;
            check_expression_maps(&gx, &gy, &phi, &psi)?;
            let scheme = scheme_for(&gx, method.method(), &budget.budget())?;
            let words = transport_generators(&scheme, &phi, &psi, n)?;
            emit(&out, &words_block(&gy, words.into_iter()))?;
            Ok(0)
        }
    }
}
