use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use super::{
    load_file, parse_potential, potential_arg_types, verifiable_decls, verify_bound, LoadError, Loaded, Report,
    TrialConfig,
};
use crate::cost_eval::{eval, program_env};
use crate::extract::potential_type;
use crate::models::{value_potential, Interp, Model};
use crate::rec_lang::{pretty_rec_expr, pretty_rec_type, simplify, RecType};
use crate::semdom::Sem;
use crate::source_ast::{parse_expr_in, parse_type, pretty_type, pretty_value, SrcType, ValueEnv};
use crate::typecheck::check_value;

#[derive(Parser, Debug)]
#[command(name = "costrec", version, about = "Cost recurrences for a typed functional language")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Type-check a program and print each declaration's type.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate `main` (or another declaration) and print its value and cost.
    Eval {
        file: PathBuf,
        #[arg(long = "main", value_name = "NAME")]
        main: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Print the extracted recurrence of every declaration.
    Extract {
        file: PathBuf,
        #[arg(long)]
        simplify: bool,
        #[arg(long)]
        json: bool,
    },
    /// Interpret a declaration's recurrence in a model at given input potentials.
    Analyze {
        file: PathBuf,
        #[arg(long)]
        model: Model,
        #[arg(long = "fn", value_name = "NAME")]
        function: String,
        /// Input potentials, one per curried argument.
        #[arg(long, num_args = 1.., value_name = "ARG")]
        at: Vec<String>,
        /// Type at which the declaration's type parameters are instantiated.
        #[arg(long, value_name = "TYPE", default_value = "nat")]
        inst: String,
        #[arg(long)]
        json: bool,
    },
    /// Compare operational costs on random inputs against the models' bounds.
    Verify {
        file: PathBuf,
        /// Models to check; all of them when omitted.
        #[arg(long)]
        model: Vec<Model>,
        /// Declarations to check; every first-order function when omitted.
        #[arg(long = "fn", value_name = "NAME")]
        function: Vec<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-size", default_value_t = 12)]
        max_size: u64,
        #[arg(long)]
        json: bool,
    },
}

/// Exit status of a subcommand that ran.
enum Outcome {
    Ok,
    Failed,
}

struct CliError(String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

/// Runs the command line tool and returns its exit status.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let mut out = std::io::stdout().lock();
    match run(cli.command, &mut out) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::Failed) => 1,
        Err(CliError(msg)) => {
            let _ = out.flush();
            eprintln!("error: {msg}");
            1
        }
    }
}

fn load(file: &Path, json: bool, out: &mut dyn Write) -> Result<Option<Loaded>, CliError> {
    match load_file(file) {
        Ok(p) => Ok(Some(p)),
        Err(e) if json => {
            let (kind, span) = match &e {
                LoadError::Io(..) => ("io", None),
                LoadError::Parse(p) => ("parse", Some(p.span.to_string())),
                LoadError::Type(t) => ("type", t.span.map(|s| s.to_string())),
            };
            writeln!(
                out,
                "{}",
                json!({ "ok": false, "error": { "kind": kind, "span": span, "message": e.to_string() } })
            )?;
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn run(cmd: Command, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match cmd {
        Command::Check { file, json } => {
            let Some(p) = load(&file, json, out)? else { return Ok(Outcome::Failed) };
            let names = p.source.type_names();
            let decls: Vec<_> = p.checked.decls.iter().chain(p.checked.main.iter()).collect();
            if json {
                let items: Vec<_> = decls
                    .iter()
                    .map(|d| json!({ "name": d.name, "params": d.scheme.vars, "type": pretty_type(&d.scheme.body, &names) }))
                    .collect();
                writeln!(out, "{}", json!({ "ok": true, "decls": items }))?;
            } else {
                for d in decls {
                    writeln!(out, "{} : {}", d.name, pretty_type(&d.scheme.body, &names))?;
                }
            }
            Ok(Outcome::Ok)
        }
        Command::Eval { file, main, json } => {
            let Some(p) = load(&file, json, out)? else { return Ok(Outcome::Failed) };
            let (env, costs) = program_env(&p.source)?;
            let (value, cost, ty) = match main.as_deref() {
                None | Some("main") => {
                    let d = p.source.main.as_ref().ok_or("the program has no `main`")?;
                    let r = eval(&env, &d.expr)?;
                    let ty = p.checked.main.as_ref().map(|d| d.scheme.body.clone());
                    (r.value, r.cost, ty)
                }
                Some(name) => {
                    let v = env.lookup(name).ok_or_else(|| format!("no declaration named `{name}`"))?.clone();
                    let cost = costs.iter().find(|(n, _)| n == name).map_or(0, |(_, c)| *c);
                    (v, cost, p.checked.decl(name).map(|d| d.scheme.body.clone()))
                }
            };
            let names = p.source.type_names();
            let ty = ty.map(|t| pretty_type(&t, &names));
            if json {
                writeln!(out, "{}", json!({ "ok": true, "value": pretty_value(&value), "type": ty, "cost": cost }))?;
            } else {
                writeln!(out, "{}", pretty_value(&value))?;
                writeln!(out, "cost: {cost}")?;
            }
            Ok(Outcome::Ok)
        }
        Command::Extract { file, simplify: simp, json } => {
            let Some(p) = load(&file, json, out)? else { return Ok(Outcome::Failed) };
            let decls: Vec<_> = p.extracted.decls.iter().chain(p.extracted.main.iter()).collect();
            let mut items = Vec::new();
            for d in decls {
                let term = if simp { simplify(&d.complexity) } else { d.complexity.clone() };
                let ty = pretty_rec_type(&RecType::complexity(d.scheme.strip_foralls().1.clone()));
                let scheme = pretty_rec_type(&d.scheme);
                if json {
                    items.push(
                        json!({ "name": d.name, "scheme": scheme, "type": ty, "recurrence": pretty_rec_expr(&term) }),
                    );
                } else {
                    writeln!(out, "{} : {}", d.name, ty)?;
                    writeln!(out, "  = {}", pretty_rec_expr(&term))?;
                }
            }
            if json {
                writeln!(out, "{}", json!({ "ok": true, "decls": items }))?;
            }
            Ok(Outcome::Ok)
        }
        Command::Analyze { file, model, function, at, inst, json } => {
            let Some(p) = load(&file, json, out)? else { return Ok(Outcome::Failed) };
            let inst_ty = parse_type(&inst)?;
            let decl = p.extracted.decl(&function).ok_or_else(|| format!("no declaration named `{function}`"))?;
            let checked = p.checked.decl(&function).expect("checked and extracted declarations agree");
            let sig = super::Signature::of(checked, &inst_ty);
            if at.len() > sig.args.len() {
                return Err(CliError(format!("`{function}` takes at most {} arguments", sig.args.len())));
            }
            let args = if model == Model::Exact {
                exact_args(&p, &sig.args, &at)?
            } else {
                potential_arg_types(&sig)
                    .iter()
                    .zip(&at)
                    .map(|(t, a)| parse_potential(model, a, t))
                    .collect::<Result<_, _>>()?
            };
            let interp = Interp::new(model);
            let result = interp.program_env(&p.extracted).and_then(|env| {
                let tys = vec![potential_type(&inst_ty); decl.type_params.len()];
                interp.analyze(&env, decl, &tys, &args)
            });
            match result {
                Ok((cost, pot)) => {
                    if json {
                        writeln!(
                            out,
                            "{}",
                            json!({ "ok": true, "model": model.name(), "fn": function, "at": at,
                                    "cost": cost.to_string(), "potential": pot.to_string() })
                        )?;
                    } else {
                        writeln!(out, "cost: {cost}")?;
                        writeln!(out, "potential: {pot}")?;
                    }
                    Ok(Outcome::Ok)
                }
                Err(e) if json => {
                    writeln!(
                        out,
                        "{}",
                        json!({ "ok": false, "model": model.name(), "fn": function, "error": e.to_string() })
                    )?;
                    Ok(Outcome::Failed)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Verify { file, model, function, trials, seed, max_size, json } => {
            let Some(p) = load(&file, json, out)? else { return Ok(Outcome::Failed) };
            let models = if model.is_empty() { Model::ALL.to_vec() } else { model };
            let cfg = TrialConfig { trials, max_value_size: max_size, models, seed };
            let names = if function.is_empty() { verifiable_decls(&p) } else { function };
            let mut reports = Vec::new();
            for name in &names {
                reports.push(verify_bound(&p, name, &cfg)?);
            }
            let failed = reports.iter().any(|r| !r.failures.is_empty());
            if json {
                let text = if reports.len() == 1 {
                    serde_json::to_string_pretty(&reports[0])?
                } else {
                    serde_json::to_string_pretty(&reports)?
                };
                writeln!(out, "{text}")?;
            } else {
                for r in &reports {
                    write_report(r, out)?;
                }
            }
            Ok(if failed { Outcome::Failed } else { Outcome::Ok })
        }
    }
}

fn exact_args(p: &Loaded, tys: &[SrcType], at: &[String]) -> Result<Vec<Sem>, CliError> {
    let ctx = p.checked.context();
    tys.iter()
        .zip(at)
        .map(|(ty, text)| {
            let e = parse_expr_in(&p.source, text)?;
            let v = eval(&ValueEnv::new(), &e)?.value;
            check_value(&ctx, &v, ty)?;
            Ok(value_potential(Model::Exact, &v, ty)?)
        })
        .collect()
}

fn write_report(r: &Report, out: &mut dyn Write) -> std::io::Result<()> {
    let s = &r.summary;
    let verdict = if r.failures.is_empty() { "ok" } else { "FAILED" };
    writeln!(
        out,
        "{}.{}: {verdict}  trials {}  checks {}  passed {}  failed {}  skipped {}",
        r.program, r.function, s.trials, s.checks, s.passed, s.failed, s.skipped
    )?;
    for f in &r.failures {
        writeln!(
            out,
            "  trial {} (seed {}) [{}] inputs {}: {}",
            f.index,
            f.seed,
            f.check,
            f.inputs.join(", "),
            f.reason
        )?;
    }
    Ok(())
}
