//! Loading programs, generating inputs and checking extracted bounds against
//! the operational cost semantics.

mod args;
mod cli;
mod gen;

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost_eval::{program_env, EvalError, Evaluator};
use crate::extract::{extract_program, potential_type, ExtractedProgram};
use crate::models::{value_potential, Direction, Interp, Model};
use crate::rec_lang::RecType;
use crate::semdom::{leq, sem_eq, ExtNat, Sem, SemEnv, SemError};
use crate::source_ast::{parse_program, pretty_value, ParseError, Program, SrcType, Value, ValueEnv};
use crate::typecheck::{check_program, check_value, CheckedDecl, CheckedProgram, TypeError};

pub use args::{parse_potential, ArgError};
pub use cli::cli_main;
pub use gen::{gen_value, min_size, GenError, GenMode};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {0}: {1}")]
    Io(String, String),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
}

/// A parsed, checked and extracted program.
pub struct Loaded {
    pub name: String,
    pub source: Program,
    pub checked: CheckedProgram,
    pub extracted: ExtractedProgram,
}

pub fn load_source(name: &str, text: &str) -> Result<Loaded, LoadError> {
    let source = parse_program(text)?;
    let checked = check_program(&source)?;
    let extracted = extract_program(&checked);
    Ok(Loaded { name: name.to_string(), source, checked, extracted })
}

pub fn load_file(path: &Path) -> Result<Loaded, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.display().to_string(), e.to_string()))?;
    let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    load_source(&name, &text)
}

/// A declaration's type with every type parameter instantiated, split into
/// curried argument types and the final result type.
#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    pub args: Vec<SrcType>,
    pub result: SrcType,
}

impl Signature {
    pub fn of(decl: &CheckedDecl, instance: &SrcType) -> Signature {
        let map = decl.scheme.vars.iter().map(|v| (v.clone(), instance.clone())).collect();
        let mut ty = decl.scheme.body.subst(&map);
        let mut args = Vec::new();
        while let SrcType::Arrow(a, b) = ty {
            args.push(*a);
            ty = *b;
        }
        Signature { args, result: ty }
    }

    /// Functions of at least one argument between observable types.
    pub fn is_verifiable(&self) -> bool {
        !self.args.is_empty() && self.args.iter().all(SrcType::is_observable) && self.result.is_observable()
    }
}

/// Declarations that `verify` can check.
pub fn verifiable_decls(p: &Loaded) -> Vec<String> {
    p.checked
        .decls
        .iter()
        .filter(|d| Signature::of(d, &SrcType::nat()).is_verifiable())
        .map(|d| d.name.clone())
        .collect()
}

#[derive(Clone, Debug)]
pub struct TrialConfig {
    pub trials: usize,
    pub max_value_size: u64,
    pub models: Vec<Model>,
    pub seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig { trials: 100, max_value_size: 12, models: Model::ALL.to_vec(), seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundRecord {
    pub model: String,
    pub cost: String,
    pub potential: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub cost: u64,
    pub result: String,
    pub bounds: Vec<BoundRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub index: usize,
    pub seed: u64,
    pub check: String,
    pub inputs: Vec<String>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub program: String,
    #[serde(rename = "fn")]
    pub function: String,
    pub seed: u64,
    pub trials: Vec<TrialRecord>,
    pub failures: Vec<Failure>,
    pub summary: Summary,
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("no declaration named `{0}`")]
    UnknownFunction(String),
    #[error("`{0}` does not have a first-order function type")]
    NotVerifiable(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("evaluating the program failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] SemError),
}

/// The seed of one trial, derived from the run's seed.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inputs of one trial: each argument gets its own budget.
pub fn trial_inputs(sig: &Signature, seed: u64, index: usize, max_size: u64) -> Result<Vec<Value>, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = GenMode::for_trial(index);
    sig.args
        .iter()
        .map(|t| {
            let lo = min_size(t)?;
            let budget = if lo >= max_size { lo } else { rng.gen_range(lo..=max_size) };
            gen_value(t, budget, mode, &mut rng)
        })
        .collect()
}

/// Runs a declaration on concrete arguments; the cost includes that of
/// evaluating the declaration itself.
pub fn run_operational(env: &ValueEnv, decl_cost: u64, name: &str, args: &[Value]) -> Result<(Value, u64), EvalError> {
    let mut f = env.lookup(name).cloned().ok_or_else(|| EvalError::Unbound(name.to_string()))?;
    let mut ev = Evaluator::new();
    let mut cost = decl_cost;
    for a in args {
        let r = ev.apply(&f, a)?;
        cost += r.cost;
        f = r.value;
    }
    Ok((f, cost))
}

/// One model's view of a declaration, with bounds cached by input potential.
pub struct ModelRunner<'a> {
    pub interp: Interp,
    env: SemEnv,
    program: &'a ExtractedProgram,
    cache: HashMap<String, (ExtNat, Sem)>,
}

impl<'a> ModelRunner<'a> {
    pub fn new(model: Model, program: &'a ExtractedProgram) -> Result<Self, SemError> {
        let interp = Interp::new(model);
        let env = interp.program_env(program)?;
        Ok(ModelRunner { interp, env, program, cache: HashMap::new() })
    }

    pub fn model(&self) -> Model {
        self.interp.model()
    }

    /// Cost and potential bounds of `name` instantiated at `nat`.
    pub fn bound(&mut self, name: &str, args: &[Sem]) -> Result<(ExtNat, Sem), SemError> {
        let decl = self.program.decl(name).ok_or_else(|| SemError::Unbound(name.to_string()))?;
        let cacheable = self.model() != Model::Exact && !args.iter().any(Sem::contains_function);
        let key = args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ; ");
        if cacheable {
            if let Some(r) = self.cache.get(&key) {
                return Ok(r.clone());
            }
        }
        let r = self.interp.analyze(&self.env, decl, &[RecType::nat()], args)?;
        if cacheable {
            self.cache.insert(key, r.clone());
        }
        Ok(r)
    }
}

fn check_bound(
    runner: &mut ModelRunner,
    name: &str,
    sig: &Signature,
    inputs: &[Value],
    result: &Value,
    cost: u64,
) -> Result<(BoundRecord, Option<String>), SemError> {
    let model = runner.model();
    let pots =
        inputs.iter().zip(&sig.args).map(|(v, t)| value_potential(model, v, t)).collect::<Result<Vec<_>, _>>()?;
    let (bc, bp) = runner.bound(name, &pots)?;
    let actual = value_potential(model, result, &sig.result)?;
    let op = ExtNat::Fin(cost);
    let problem = match model.direction() {
        Direction::Upper => {
            if op > bc {
                Some(format!("cost {cost} exceeds bound {bc}"))
            } else if !leq(&actual, &bp)? {
                Some(format!("result potential {actual} exceeds bound {bp}"))
            } else {
                None
            }
        }
        Direction::Lower => (bc > op).then(|| format!("lower bound {bc} exceeds cost {cost}")),
        Direction::Exact => {
            if bc != op {
                Some(format!("exact cost {bc} differs from operational cost {cost}"))
            } else if !sem_eq(&actual, &bp)? {
                Some(format!("exact result {bp} differs from {actual}"))
            } else {
                None
            }
        }
    };
    let record = BoundRecord {
        model: model.name().to_string(),
        cost: bc.to_string(),
        potential: bp.to_string(),
        status: if problem.is_some() { Status::Fail } else { Status::Pass },
        note: problem.clone(),
    };
    Ok((record, problem))
}

/// Checks the bounds of `name` on `cfg.trials` random inputs.
pub fn verify_bound(p: &Loaded, name: &str, cfg: &TrialConfig) -> Result<Report, VerifyError> {
    let decl = p.checked.decl(name).ok_or_else(|| VerifyError::UnknownFunction(name.to_string()))?;
    let sig = Signature::of(decl, &SrcType::nat());
    if !sig.is_verifiable() {
        return Err(VerifyError::NotVerifiable(name.to_string()));
    }
    let (env, decl_costs) = program_env(&p.source)?;
    let decl_cost = decl_costs.iter().find(|(n, _)| n == name).map_or(0, |(_, c)| *c);
    let ctx = p.checked.context();
    let mut runners = Vec::new();
    let mut skipped_models = Vec::new();
    for m in &cfg.models {
        match ModelRunner::new(*m, &p.extracted) {
            Ok(r) => runners.push(r),
            Err(e) => skipped_models.push((*m, e.to_string())),
        }
    }

    let mut report = Report {
        program: p.name.clone(),
        function: name.to_string(),
        seed: cfg.seed,
        trials: Vec::with_capacity(cfg.trials),
        failures: Vec::new(),
        summary: Summary { trials: cfg.trials, ..Summary::default() },
    };
    for index in 0..cfg.trials {
        let seed = trial_seed(cfg.seed, index);
        let inputs = trial_inputs(&sig, seed, index, cfg.max_value_size)?;
        let shown: Vec<String> = inputs.iter().map(pretty_value).collect();
        let (result, cost) = run_operational(&env, decl_cost, name, &inputs)?;
        let mut fail = |check: &str, reason: String, summary: &mut Summary| {
            summary.failed += 1;
            report.failures.push(Failure { index, seed, check: check.to_string(), inputs: shown.clone(), reason });
        };

        report.summary.checks += 1;
        if let Err(e) = check_value(&ctx, &result, &sig.result) {
            fail("type preservation", e.to_string(), &mut report.summary);
        } else {
            report.summary.passed += 1;
        }

        let mut bounds = Vec::new();
        for runner in runners.iter_mut() {
            report.summary.checks += 1;
            let model = runner.model();
            match check_bound(runner, name, &sig, &inputs, &result, cost) {
                Ok((record, problem)) => {
                    match problem {
                        Some(reason) => fail(model.name(), reason, &mut report.summary),
                        None => report.summary.passed += 1,
                    }
                    bounds.push(record);
                }
                Err(e @ (SemError::Unsupported(_) | SemError::StepLimit(_))) => {
                    report.summary.skipped += 1;
                    bounds.push(BoundRecord {
                        model: model.name().to_string(),
                        cost: "-".into(),
                        potential: "-".into(),
                        status: Status::Skipped,
                        note: Some(e.to_string()),
                    });
                }
                Err(e) => {
                    fail(model.name(), e.to_string(), &mut report.summary);
                    bounds.push(BoundRecord {
                        model: model.name().to_string(),
                        cost: "-".into(),
                        potential: "-".into(),
                        status: Status::Fail,
                        note: Some(e.to_string()),
                    });
                }
            }
        }
        for (m, why) in &skipped_models {
            report.summary.checks += 1;
            report.summary.skipped += 1;
            bounds.push(BoundRecord {
                model: m.name().to_string(),
                cost: "-".into(),
                potential: "-".into(),
                status: Status::Skipped,
                note: Some(why.clone()),
            });
        }
        report.trials.push(TrialRecord { index, seed, inputs: shown, cost, result: pretty_value(&result), bounds });
    }
    Ok(report)
}

/// The arguments' source types of `name`, with type parameters at `nat`.
pub fn signature_of(p: &Loaded, name: &str) -> Option<Signature> {
    p.checked.decl(name).map(|d| Signature::of(d, &SrcType::nat()))
}

/// Potential types of a signature's arguments.
pub fn potential_arg_types(sig: &Signature) -> Vec<RecType> {
    sig.args.iter().map(potential_type).collect()
}

/// Runs `f` on a thread with a large stack; deep folds recurse deeply.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(512 << 20)
        .spawn(f)
        .expect("spawn worker thread")
        .join()
        .unwrap_or_else(|e| std::panic::resume_unwind(e))
}
