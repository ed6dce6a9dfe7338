use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iacheck_core::expr::{
    eval_constraint, parse_constraint, parse_value, ConstraintError, Domain, EvalError, Valuation,
    VariableDecl, DEFAULT_ENUM_BUDGET,
};
use iacheck_core::format::{
    export_dot, export_product_dot, lint_document, parse_document, print_automaton,
    ContractDocument,
};
use iacheck_core::report::JsonReport;
use iacheck_core::{check_compatibility, product, CheckOptions, InterfaceAutomaton, ProductError};

/// Compatibility checker for interface automata with contract constraints.
#[derive(Parser)]
#[command(name = "iacheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate contract files.
    Lint {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Check two automata for compatibility.
    Check {
        /// First automaton, as FILE or FILE#NAME.
        left: String,
        /// Second automaton, as FILE or FILE#NAME.
        right: String,
        #[command(flatten)]
        options: CheckFlags,
        /// Write a JSON report to this path.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
        /// Print the shortest path to an illegal state, if any.
        #[arg(long)]
        witness: bool,
    },
    /// Write the synchronized product in `.ia` format.
    Product {
        left: String,
        right: String,
        #[arg(long)]
        qualify_hidden: bool,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Export an automaton, or the product of two, as a Graphviz graph.
    Dot {
        file: String,
        /// With a second automaton, draw their product with illegal and bad states marked.
        other: Option<String>,
        #[command(flatten)]
        options: CheckFlags,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Evaluate a constraint under explicit variable bindings.
    Eval {
        /// A bare boolean expression, or a full `pre|post|inv NAME: ...` constraint.
        constraint: String,
        /// `path=value`; use `path@pre=value` for old values.
        #[arg(long = "bind", value_name = "K=V")]
        bindings: Vec<String>,
        /// Take variable domains from an automaton (FILE or FILE#NAME).
        #[arg(long, value_name = "FILE")]
        decls: Option<String>,
    },
}

#[derive(Args, Clone, Copy)]
struct CheckFlags {
    /// Prefix unqualified hidden actions with their automaton's name.
    #[arg(long)]
    qualify_hidden: bool,
    /// Treat states without outgoing transitions as illegal.
    #[arg(long)]
    strict_deadlock: bool,
    /// Maximum valuations enumerated per falsity test.
    #[arg(long, env = "IACHECK_ENUM_BUDGET", default_value_t = DEFAULT_ENUM_BUDGET)]
    enum_budget: u64,
}

impl From<CheckFlags> for CheckOptions {
    fn from(f: CheckFlags) -> Self {
        CheckOptions {
            qualify_hidden: f.qualify_hidden,
            strict_deadlock: f.strict_deadlock,
            enum_budget: f.enum_budget,
        }
    }
}

/// Reason a command stopped; maps onto the exit status.
enum Failure {
    /// Incompatible verdict or validation failure.
    Negative(String),
    /// Unreadable input, parse error, bad arguments.
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Negative(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_file(path: &Path) -> Result<ContractDocument, Failure> {
    let text = read(path)?;
    parse_document(&text).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))
}

/// Splits `FILE#NAME`. A `#` that is part of an existing path is left alone.
fn split_selector(spec: &str) -> (PathBuf, Option<&str>) {
    match spec.rsplit_once('#') {
        Some((file, name)) if !Path::new(spec).exists() && !name.is_empty() => {
            (PathBuf::from(file), Some(name))
        }
        _ => (PathBuf::from(spec), None),
    }
}

fn load(spec: &str) -> Result<InterfaceAutomaton, Failure> {
    let (path, name) = split_selector(spec);
    let mut doc = parse_file(&path)?;
    match name {
        Some(n) => {
            let i = doc.automata.iter().position(|a| a.name == n).ok_or_else(|| {
                Failure::Usage(format!("{}: no automaton named `{n}`", path.display()))
            })?;
            Ok(doc.automata.swap_remove(i))
        }
        None if doc.automata.is_empty() => {
            Err(Failure::Usage(format!("{}: no automaton in file", path.display())))
        }
        None => Ok(doc.automata.remove(0)),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_lint(files: &[PathBuf]) -> Outcome {
    let mut worst: Option<Failure> = None;
    for path in files {
        let result = read(path).and_then(|text| {
            lint_document(&text).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))
        });
        match result {
            Ok((doc, diags)) if diags.is_empty() => {
                println!("{}: ok ({} automata)", path.display(), doc.automata.len());
            }
            Ok((_, diags)) => {
                for d in &diags {
                    println!("{}:{d}", path.display());
                }
                if worst.is_none() {
                    worst = Some(Failure::Negative(format!(
                        "{}: {} problem(s)",
                        path.display(),
                        diags.len()
                    )));
                }
            }
            Err(f) => {
                if worst.as_ref().map_or(true, |w| w.code() < f.code()) {
                    worst = Some(f);
                } else {
                    eprintln!("error: {}", message(&f));
                }
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

fn message(f: &Failure) -> &str {
    match f {
        Failure::Negative(m) | Failure::Usage(m) => m,
    }
}

fn cmd_check(
    left: &str,
    right: &str,
    options: CheckOptions,
    report_path: Option<&Path>,
    witness: bool,
) -> Outcome {
    let a1 = load(left)?;
    let a2 = load(right)?;
    let r = check_compatibility(&a1, &a2, &options);

    let mut out = String::new();
    let _ = writeln!(out, "{} x {}", r.left.name, r.right.name);
    if r.composable.is_composable() {
        let _ = writeln!(out, "  composable: yes");
    } else {
        let _ = writeln!(out, "  composable: no");
        for c in &r.composable.conflicts {
            let _ = writeln!(out, "    {c}");
        }
    }
    let shared: Vec<String> = r.shared.iter().map(|l| l.to_string()).collect();
    let _ = writeln!(out, "  shared: {{{}}}", shared.join(", "));
    if let Some(p) = &r.product {
        let _ = writeln!(
            out,
            "  product: {} states, {} transitions",
            p.automaton.states.len(),
            p.automaton.transitions.len()
        );
        let _ = writeln!(out, "  illegal: {}", r.illegal.states.len());
        for s in &r.illegal.states {
            for reason in r.illegal.reasons.get(s).into_iter().flatten() {
                let _ = writeln!(out, "    {s}: {reason}");
            }
        }
        let _ = writeln!(out, "  bad: {}", r.bad.len());
        if let Some(pr) = &r.pruned {
            let _ = writeln!(
                out,
                "  pruned: {} states, {} transitions",
                pr.states.len(),
                pr.transitions.len()
            );
        }
    }
    for u in &r.illegal.undecided {
        let _ = writeln!(
            out,
            "  unknown: {} {} ({}); treated as satisfiable",
            u.kind.keyword(),
            u.name,
            u.reason
        );
    }
    if witness {
        match &r.witness {
            Some(w) => {
                let _ = writeln!(out, "  witness: {w}");
            }
            None => {
                let _ = writeln!(out, "  witness: none");
            }
        }
    }
    let _ = writeln!(out, "verdict: {}", r.verdict);
    print!("{out}");

    if let Some(path) = report_path {
        let json = JsonReport::new(&r, &options).to_json();
        fs::write(path, json + "\n")
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    if r.verdict.is_compatible() {
        Ok(())
    } else {
        Err(Failure::Negative(String::new()))
    }
}

fn cmd_product(left: &str, right: &str, qualify: bool, output: Option<&Path>) -> Outcome {
    let mut a1 = load(left)?;
    let mut a2 = load(right)?;
    if qualify {
        a1 = iacheck_core::qualify_hidden(&a1);
        a2 = iacheck_core::qualify_hidden(&a2);
    }
    match product(&a1, &a2) {
        Ok(p) => emit(output, &print_automaton(&p.automaton)),
        Err(ProductError::NotComposable(report)) => {
            let mut msg = format!("{} and {} are not composable", a1.name, a2.name);
            for c in &report.conflicts {
                let _ = write!(msg, "\n  {c}");
            }
            Err(Failure::Negative(msg))
        }
        Err(e) => Err(Failure::Negative(e.to_string())),
    }
}

fn cmd_dot(file: &str, other: Option<&str>, options: CheckOptions, output: Option<&Path>) -> Outcome {
    let a = load(file)?;
    let text = match other {
        None => export_dot(&a),
        Some(spec) => {
            let b = load(spec)?;
            let r = check_compatibility(&a, &b, &options);
            export_product_dot(&r).ok_or_else(|| {
                Failure::Negative(format!("no product: {}", r.verdict))
            })?
        }
    };
    emit(output, &text)
}

fn cmd_eval(constraint: &str, bindings: &[String], decls: Option<&str>) -> Outcome {
    let mut vars: Vec<VariableDecl> = match decls {
        Some(spec) => load(spec)?.variables,
        None => Vec::new(),
    };
    let mut parsed = Vec::new();
    for b in bindings {
        let (key, text) = b
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("binding `{b}` is not of the form K=V")))?;
        let (path, old) = match key.trim().strip_suffix("@pre") {
            Some(p) => (p.trim().to_string(), true),
            None => (key.trim().to_string(), false),
        };
        let domain = vars.iter().find(|d| d.name == path).map(|d| d.domain.clone());
        let value = parse_value(text, domain.as_ref())
            .map_err(|e| Failure::Usage(format!("binding `{b}`: {e}")))?;
        match &domain {
            Some(d) if !d.contains(&value) => {
                return Err(Failure::Usage(format!("binding `{b}`: {value} is not in {d}")));
            }
            Some(_) => {}
            None => vars.push(VariableDecl::new(path.clone(), Domain::Opaque)),
        }
        parsed.push((path, old, value));
    }

    let first = constraint.split_whitespace().next().unwrap_or("");
    let text = if ["pre", "post", "inv", "context"].contains(&first) {
        constraint.to_string()
    } else {
        format!("post eval: {constraint}")
    };
    let c = parse_constraint(&text, &vars).map_err(|e| match e {
        ConstraintError::UnknownVariable { name, .. } => {
            Failure::Usage(format!("unbound variable `{name}`; pass --bind {name}=VALUE"))
        }
        other => Failure::Usage(other.to_string()),
    })?;
    let mut valuation = Valuation::new();
    for (path, old, value) in parsed {
        valuation.set(&path, value, old);
    }
    match eval_constraint(&c, &valuation) {
        Ok(true) => {
            println!("true");
            Ok(())
        }
        Ok(false) => {
            println!("false");
            Err(Failure::Negative(String::new()))
        }
        Err(e @ (EvalError::MissingVariable { .. } | EvalError::MissingOld { .. })) => {
            Err(Failure::Usage(e.to_string()))
        }
        Err(e) => {
            println!("error: {e}");
            Err(Failure::Negative(String::new()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Lint { files } => cmd_lint(files),
        Command::Check {
            left,
            right,
            options,
            report,
            witness,
        } => cmd_check(left, right, (*options).into(), report.as_deref(), *witness),
        Command::Product {
            left,
            right,
            qualify_hidden,
            output,
        } => cmd_product(left, right, *qualify_hidden, output.as_deref()),
        Command::Dot {
            file,
            other,
            options,
            output,
        } => cmd_dot(file, other.as_deref(), (*options).into(), output.as_deref()),
        Command::Eval {
            constraint,
            bindings,
            decls,
        } => cmd_eval(constraint, bindings, decls.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !message(&f).is_empty() {
                eprintln!("error: {}", message(&f));
            }
            ExitCode::from(f.code())
        }
    }
}
