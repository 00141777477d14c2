//! Acceptance run: one PASS/FAIL line per criterion, with timings.

mod common;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use costrec::cost_eval::program_env;
use costrec::extract::{check_extracted, potential_type};
use costrec::harness::{
    gen_value, potential_arg_types, run_operational, signature_of, trial_inputs, verifiable_decls, verify_bound,
    with_big_stack, GenMode, Loaded, Report, Status, TrialConfig,
};
use costrec::models::{abs, conc, top, value_potential, Interp, Model};
use costrec::rec_lang::{simplify_with_budget, RecType, DEFAULT_SIMPLIFY_BUDGET};
use costrec::semdom::{leq, sem_eq, ExtNat, Sem, SizeMap};
use costrec::source_ast::{SrcType, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fin(n: u64) -> ExtNat {
    ExtNat::Fin(n)
}

struct Analyzer {
    interp: Interp,
    env: costrec::semdom::SemEnv,
    program: Loaded,
}

impl Analyzer {
    fn new(model: Model, stem: &str) -> Analyzer {
        let program = common::corpus_file(stem);
        let interp = Interp::new(model);
        let env = interp.program_env(&program.extracted).expect("program denotes");
        Analyzer { interp, env, program }
    }

    fn at(&self, name: &str, args: &[Sem]) -> Result<(ExtNat, Sem), String> {
        let decl = self.program.extracted.decl(name).ok_or_else(|| format!("no {name}"))?;
        self.interp.analyze(&self.env, decl, &[], args).map_err(|e| format!("{name}: {e}"))
    }
}

fn operational(p: &Loaded, name: &str, args: &[Value]) -> Result<(Value, u64), String> {
    let (env, costs) = program_env(&p.source).map_err(|e| e.to_string())?;
    let c = costs.iter().find(|(n, _)| n == name).map_or(0, |(_, c)| *c);
    run_operational(&env, c, name, args).map_err(|e| e.to_string())
}

// ---- 1 ------------------------------------------------------------------

/// T(n) = max of 1 (the empty tree) and 1 + T(n0) + T(n1) over subtree
/// sizes n0, n1 >= 1 with n0 + n1 < n.
fn copy_oracle(n: u64, memo: &mut HashMap<u64, u64>) -> u64 {
    if let Some(v) = memo.get(&n) {
        return *v;
    }
    let mut best = 1;
    for n0 in 1..n {
        for n1 in 1..n - n0 {
            best = best.max(1 + copy_oracle(n0, memo) + copy_oracle(n1, memo));
        }
    }
    memo.insert(n, best);
    best
}

fn criterion_1() -> Outcome {
    let a = Analyzer::new(Model::Size, "copy");
    let mut memo = HashMap::new();
    let mut odd = Vec::new();
    for n in 1..=12 {
        let oracle = copy_oracle(n, &mut memo);
        let (c, p) = a.at("copy", &[Sem::size(n)])?;
        ensure(c == fin(oracle), || format!("T({n}) = {c}, oracle {oracle}"))?;
        ensure(p.to_string() == oracle.to_string(), || format!("S({n}) = {p}, oracle {oracle}"))?;
        if n % 2 == 1 {
            ensure(oracle == n, || format!("T({n}) = {oracle} at odd n"))?;
            odd.push(n);
        }
    }
    let ty = SrcType::tree(SrcType::nat());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..100 {
        let budget = rng.gen_range(1..=25);
        let t = gen_value(&ty, budget, GenMode::Random, &mut rng).map_err(|e| e.to_string())?;
        let pot = value_potential(Model::Size, &t, &ty).map_err(|e| e.to_string())?;
        let (_, cost) = operational(&a.program, "copy", &[t])?;
        let (bound, _) = a.at("copy", std::slice::from_ref(&pot))?;
        ensure(bound == fin(cost), || format!("tree {i} of potential {pot}: cost {cost}, bound {bound}"))?;
    }
    Ok(format!(
        "T(n) equals the brute-force oracle for n=1..12 and equals n at every odd n {odd:?} (the sizes trees have); \
         even n give n-1; 100 random trees cost exactly their bound"
    ))
}

// ---- 2 ------------------------------------------------------------------

/// T(h) = max of 1 and, for child heights h0, h1 < h, the three branches
/// 1 + T(h0), 1 and 1 + T(h1).
fn mem_oracle(h: u64, memo: &mut HashMap<u64, u64>) -> u64 {
    if let Some(v) = memo.get(&h) {
        return *v;
    }
    let mut best = 1;
    for h0 in 1..h {
        for h1 in 1..h {
            best = best.max(1 + mem_oracle(h0, memo)).max(1).max(1 + mem_oracle(h1, memo));
        }
    }
    memo.insert(h, best);
    best
}

#[derive(Clone)]
enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    fn random(nodes: usize, rng: &mut impl Rng) -> Shape {
        if nodes == 0 {
            return Shape::Leaf;
        }
        let left = rng.gen_range(0..nodes);
        Shape::Node(Box::new(Shape::random(left, rng)), Box::new(Shape::random(nodes - 1 - left, rng)))
    }

    fn height(&self) -> u64 {
        match self {
            Shape::Leaf => 1,
            Shape::Node(l, r) => 1 + l.height().max(r.height()),
        }
    }

    fn size(&self) -> usize {
        match self {
            Shape::Leaf => 0,
            Shape::Node(l, r) => 1 + l.size() + r.size(),
        }
    }

    /// Labels nodes in order from `keys`, giving a search tree when the keys
    /// are sorted.
    fn label(&self, keys: &mut std::slice::Iter<'_, bool>) -> Value {
        let ty = SrcType::tree(SrcType::bool());
        match self {
            Shape::Leaf => Value::cons(ty, Value::inj(0, Value::Unit)),
            Shape::Node(l, r) => {
                let lv = l.label(keys);
                let k = *keys.next().expect("enough keys");
                let rv = r.label(keys);
                Value::cons(ty, Value::inj(1, Value::pair(Value::bool(k), Value::pair(lv, rv))))
            }
        }
    }
}

fn criterion_2() -> Outcome {
    let a = Analyzer::new(Model::Height, "mem");
    let any_bool = top(Model::Height, &RecType::bool()).map_err(|e| e.to_string())?;
    let mut memo = HashMap::new();
    for h in 1..=10 {
        let oracle = mem_oracle(h, &mut memo);
        let (c, _) = a.at("mem", &[Sem::size(h), any_bool.clone()])?;
        ensure(oracle == h, || format!("oracle T({h}) = {oracle}"))?;
        ensure(c == fin(oracle), || format!("bound at height {h} is {c}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut trees = 0;
    while trees < 200 {
        let shape = Shape::random(rng.gen_range(0..40), &mut rng);
        let h = shape.height();
        if h > 10 {
            continue;
        }
        trees += 1;
        let falses = rng.gen_range(0..=shape.size());
        let keys: Vec<bool> = (0..shape.size()).map(|i| i >= falses).collect();
        let t = shape.label(&mut keys.iter());
        let x = rng.gen_bool(0.5);
        let (_, cost) = operational(&a.program, "mem", &[t, Value::bool(x)])?;
        ensure(cost <= h, || format!("search tree of height {h} costs {cost}"))?;
    }
    for h in 1..=10u64 {
        // A left spine of `true` keys makes a search for `false` go left
        // at every node.
        let mut shape = Shape::Leaf;
        for _ in 1..h {
            shape = Shape::Node(Box::new(shape), Box::new(Shape::Leaf));
        }
        let keys = vec![true; shape.size()];
        let t = shape.label(&mut keys.iter());
        let (_, cost) = operational(&a.program, "mem", &[t, Value::bool(false)])?;
        ensure(cost == h, || format!("spine of height {h} costs {cost}"))?;
    }
    Ok("bound = h for h=1..10; 200 random search trees within bound; spines attain it".into())
}

// ---- 3 ------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tree = SrcType::tree(SrcType::nat());
    let list = SrcType::list(SrcType::nat());
    for i in 0..50 {
        let budget = rng.gen_range(1..=40);
        let t = gen_value(&tree, budget, GenMode::Random, &mut rng).map_err(|e| e.to_string())?;
        let p = value_potential(Model::Size, &t, &tree).map_err(|e| e.to_string())?;
        let expected = 2 * common::internal_nodes(&t) + 1;
        ensure(p.to_string() == expected.to_string(), || format!("tree {i}: potential {p}, expected {expected}"))?;
        let l = gen_value(&list, budget, GenMode::Random, &mut rng).map_err(|e| e.to_string())?;
        let p = value_potential(Model::Size, &l, &list).map_err(|e| e.to_string())?;
        let expected = common::list_length(&l) + 1;
        ensure(p.to_string() == expected.to_string(), || format!("list {i}: potential {p}, expected {expected}"))?;
    }
    let nat = RecType::nat();
    for n in 0..=20 {
        let p = value_potential(Model::AllCons, &Value::nat(n), &SrcType::nat()).map_err(|e| e.to_string())?;
        let phi = Sem::map(SizeMap::single(&nat, fin(n + 1)));
        ensure(sem_eq(&p, &phi).unwrap_or(false), || format!("#{n} has potential {p}, expected {phi}"))?;
    }
    Ok("50 trees give 2i+1, 50 lists give length+1, #n gives {nat:n+1} for n=0..20".into())
}

// ---- 4 ------------------------------------------------------------------

#[allow(clippy::only_used_in_recursion)]
fn plus_cost(m: u64, n: u64) -> u64 {
    if m == 1 {
        1
    } else {
        1 + plus_cost(m - 1, n)
    }
}

fn plus_size(m: u64, n: u64) -> u64 {
    if m == 1 {
        n
    } else {
        1 + plus_size(m - 1, n)
    }
}

fn criterion_4() -> Outcome {
    let a = Analyzer::new(Model::AllCons, "plus");
    let nat = RecType::nat();
    let phi = |k: u64| Sem::map(SizeMap::single(&nat, fin(k)));
    for m in 1..=8 {
        for n in 1..=8 {
            let (c, p) = a.at("plus", &[phi(m), phi(n)])?;
            ensure(c == fin(plus_cost(m, n)) && c == fin(m), || format!("T({m},{n}) = {c}"))?;
            let want = phi(plus_size(m, n));
            ensure(plus_size(m, n) == m + n - 1, || format!("oracle S({m},{n}) = {}", plus_size(m, n)))?;
            ensure(sem_eq(&p, &want).unwrap_or(false), || format!("S({m},{n}) = {p}, expected {want}"))?;
        }
    }
    Ok("cost m and potential {nat:m+n-1} for all m,n in 1..8".into())
}

// ---- 5 ------------------------------------------------------------------

fn rev_size(n: u64, m: u64) -> u64 {
    if n == 1 {
        m
    } else {
        rev_size(n - 1, m + 1)
    }
}

#[allow(clippy::only_used_in_recursion)]
fn rev_cost(n: u64, m: u64) -> u64 {
    if n == 1 {
        1
    } else {
        1 + rev_cost(n - 1, m + 1)
    }
}

fn criterion_5() -> Outcome {
    let a = Analyzer::new(Model::Merged, "rev");
    let list = RecType::list(RecType::nat());
    for n in 1..=8 {
        for m in 0..=8 {
            let args = [conc(&list, &Sem::size(n)), conc(&list, &Sem::size(m))];
            let args: Vec<Sem> = args.into_iter().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
            let (c, p) = a.at("rev'", &args)?;
            let size = abs(&list, &p).map_err(|e| e.to_string())?;
            let want = rev_size(n, m);
            ensure(want == m + n - 1, || format!("oracle S({n},{m}) = {want}"))?;
            ensure(size.to_string() == want.to_string(), || format!("S({n},{m}) = {size} from {p}"))?;
            ensure(c == fin(rev_cost(n, m)) && c == fin(n), || format!("T({n},{m}) = {c}"))?;
        }
    }
    Ok("S(n,m) = m+n-1 and cost n for n=1..8, m=0..8".into())
}

// ---- 6 ------------------------------------------------------------------

/// The map recurrence T(1) = 1, T(n) = 1 + c + T(n-1), unrolled.
fn map_oracle(n: u64, c: u64) -> u64 {
    if n == 1 {
        1
    } else {
        1 + c + map_oracle(n - 1, c)
    }
}

fn criterion_6() -> Outcome {
    let upper = Analyzer::new(Model::Size, "map");
    let lower = Analyzer::new(Model::Lower, "map");
    let nat = RecType::nat();
    let cost_of = |a: &Analyzer, f: &str, x: Sem| -> Result<u64, String> {
        let (c, _) = a.at(f, &[x])?;
        c.finite().ok_or_else(|| format!("{f} has no finite cost"))
    };
    let g_inf = cost_of(&upper, "g", Sem::Size(ExtNat::Inf))?;
    let g_inf_p = upper.at("g", &[Sem::Size(ExtNat::Inf)])?.1;
    let f_after_g = cost_of(&upper, "f", g_inf_p)?;
    let bot = costrec::models::bottom(Model::Lower, &nat).map_err(|e| e.to_string())?;
    let g_bot = cost_of(&lower, "g", bot.clone())?;
    let f_bot = cost_of(&lower, "f", bot)?;
    ensure((g_inf, f_after_g, g_bot, f_bot) == (2, 3, 2, 3), || {
        format!("fixture constants: (g inf)c={g_inf} (f (g inf)p)c={f_after_g} (g bot)c={g_bot} (f bot)c={f_bot}")
    })?;
    let mut rows = Vec::new();
    for n in 1..=10 {
        let (up, _) = upper.at("map_fused", &[Sem::size(n)])?;
        let (lo, _) = lower.at("map_composed", &[Sem::size(n)])?;
        let want_up = map_oracle(n, g_inf + f_after_g);
        let want_lo = map_oracle(n, g_bot) + map_oracle(n, f_bot);
        ensure(up == fin(want_up), || format!("upper fused at {n}: {up}, recurrence {want_up}"))?;
        ensure(lo == fin(want_lo), || format!("lower composed at {n}: {lo}, recurrence {want_lo}"))?;
        ensure(lo >= up, || format!("at {n}: lower composed {lo} < upper fused {up}"))?;
        // Closed forms coincide with the recurrences for cost-free f and g.
        let (up0, _) = upper.at("map_fused0", &[Sem::size(n)])?;
        let (lo0, _) = lower.at("map_composed0", &[Sem::size(n)])?;
        ensure(up0 == fin(n), || format!("upper fused0 at {n}: {up0}, closed form {n}"))?;
        ensure(lo0 == fin(2 * n), || format!("lower composed0 at {n}: {lo0}, closed form {}", 2 * n))?;
        // The actual costs on a list of potential n sit between the bounds.
        let xs = common::nat_list(&vec![1; n as usize - 1]);
        let (_, fused) = operational(&upper.program, "map_fused", std::slice::from_ref(&xs))?;
        let (_, composed) = operational(&upper.program, "map_composed", &[xs])?;
        ensure(fin(fused) <= up && lo <= fin(composed), || format!("at {n}: fused {fused}, composed {composed}"))?;
        rows.push(format!("{n}:{up}<={lo}"));
    }
    Ok(format!(
        "c_g=2, c_f'=3; upper(fused) and lower(composed) equal their recurrences; lower >= upper at {}; \
         closed forms n(1+c) and 2n(1+c) hold exactly when c=0",
        rows.join(" ")
    ))
}

// ---- 7 ------------------------------------------------------------------

fn parse_cost(s: &str) -> Option<ExtNat> {
    if s == "∞" {
        Some(ExtNat::Inf)
    } else {
        s.parse().ok().map(ExtNat::Fin)
    }
}

fn verify_corpus(trials: usize, models: Vec<Model>) -> Result<Vec<Report>, String> {
    let dir = common::corpus_dir();
    let mut paths: Vec<_> = std::fs::read_dir(&dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    paths.sort();
    let handles: Vec<_> = paths
        .into_iter()
        .map(|path| {
            let models = models.clone();
            std::thread::Builder::new()
                .stack_size(256 << 20)
                .spawn(move || -> Result<Vec<Report>, String> {
                    let p = costrec::harness::load_file(&path).map_err(|e| e.to_string())?;
                    let cfg = TrialConfig { trials, models, seed: 2024, ..TrialConfig::default() };
                    verifiable_decls(&p)
                        .iter()
                        .map(|name| verify_bound(&p, name, &cfg).map_err(|e| format!("{}.{name}: {e}", p.name)))
                        .collect()
                })
                .expect("spawn")
        })
        .collect();
    let mut out = Vec::new();
    for h in handles {
        out.extend(h.join().map_err(|_| "verification thread panicked".to_string())??);
    }
    Ok(out)
}

fn criterion_7() -> Outcome {
    let reports = verify_corpus(1000, Model::ALL.to_vec())?;
    let programs: std::collections::BTreeSet<_> = reports.iter().map(|r| r.program.clone()).collect();
    ensure(programs.len() >= 8, || format!("only {} programs", programs.len()))?;
    let mut failures = 0;
    let mut skipped = 0;
    let mut trials = 0;
    for r in &reports {
        ensure(r.trials.len() >= 1000, || format!("{}.{}: {} trials", r.program, r.function, r.trials.len()))?;
        trials += r.trials.len();
        failures += r.failures.len();
        skipped += r.summary.skipped;
        if let Some(f) = r.failures.first() {
            return Err(format!("{}.{} trial {} [{}]: {}", r.program, r.function, f.index, f.check, f.reason));
        }
        for t in &r.trials {
            let cost = |m: &str| {
                t.bounds.iter().find(|b| b.model == m && b.status == Status::Pass).and_then(|b| parse_cost(&b.cost))
            };
            let exact = cost("exact")
                .ok_or_else(|| format!("{}.{} trial {}: no exact cost", r.program, r.function, t.index))?;
            ensure(exact == fin(t.cost), || {
                format!("{}.{} trial {}: exact {exact} vs {}", r.program, r.function, t.index, t.cost)
            })?;
            let lo = cost("lower").unwrap_or(ExtNat::ZERO);
            for m in ["size", "height", "allcons", "merged"] {
                if let Some(up) = cost(m) {
                    ensure(lo <= exact && exact <= up, || {
                        format!("{}.{} trial {}: lower {lo}, exact {exact}, {m} {up}", r.program, r.function, t.index)
                    })?;
                }
            }
        }
    }
    Ok(format!(
        "{} programs, {} functions, {trials} trials, {failures} violations, {skipped} skipped checks; \
         lower <= exact <= upper on every trial",
        programs.len(),
        reports.len()
    ))
}

// ---- 8 ------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let reports = verify_corpus(1000, Vec::new())?;
    let preserved: usize = reports.iter().map(|r| r.summary.passed).sum();
    let broken: usize = reports.iter().map(|r| r.failures.len()).sum();
    ensure(broken == 0, || format!("{broken} results failed to check at their types"))?;

    let corpus = common::corpus();
    for p in &corpus {
        check_extracted(&p.extracted).map_err(|e| format!("{}: {e}", p.name))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut compared = 0;
    for p in &corpus {
        let simplified = p.extracted.map_terms(|e| simplify_with_budget(e, DEFAULT_SIMPLIFY_BUDGET).0);
        for model in Model::ALL {
            let interp = Interp::new(model);
            let e0 = interp.program_env(&p.extracted).map_err(|e| e.to_string())?;
            let e1 = interp.program_env(&simplified).map_err(|e| e.to_string())?;
            for name in verifiable_decls(p) {
                let sig = signature_of(p, &name).expect("declared");
                let tys = potential_arg_types(&sig);
                for i in 0..20 {
                    let args: Vec<Sem> = if model == Model::Exact {
                        let vs = trial_inputs(&sig, 8, i, 10).map_err(|e| e.to_string())?;
                        vs.iter()
                            .zip(&sig.args)
                            .map(|(v, t)| value_potential(model, v, t))
                            .collect::<Result<_, _>>()
                            .map_err(|e| e.to_string())?
                    } else {
                        tys.iter().map(|t| common::random_sem(model, t, &mut rng)).collect()
                    };
                    let a =
                        interp.analyze(&e0, p.extracted.decl(&name).unwrap(), &[], &args).map_err(|e| e.to_string())?;
                    let b =
                        interp.analyze(&e1, simplified.decl(&name).unwrap(), &[], &args).map_err(|e| e.to_string())?;
                    ensure(a.0 == b.0 && sem_eq(&a.1, &b.1).unwrap_or(false), || {
                        format!("{}.{name} in {}: {:?} vs {:?}", p.name, model.name(), a.0, b.0)
                    })?;
                    compared += 1;
                }
            }
        }
    }

    let types = common::sample_types();
    for src in &types {
        let ty = potential_type(src);
        for _ in 0..500 {
            let v = common::random_sem(Model::Size, &ty, &mut rng);
            let back = abs(&ty, &conc(&ty, &v).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            ensure(sem_eq(&back, &v).unwrap_or(false), || format!("abs(conc {v}) = {back} at {ty}"))?;
            let w = common::random_sem(Model::AllCons, &ty, &mut rng);
            let up = conc(&ty, &abs(&ty, &w).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            ensure(leq(&w, &up).unwrap_or(false), || format!("{w} is not below conc(abs {w}) = {up}"))?;
        }
    }
    Ok(format!(
        "{preserved} results preserve their types; {} programs extract at their complexity types; \
         {compared} simplified denotations agree; Galois laws on 500 values for each of {} types",
        corpus.len(),
        types.len()
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "tree copy recurrence", Duration::from_secs(5), criterion_1),
        (2, "search tree membership", Duration::from_secs(5), criterion_2),
        (3, "value potentials", Duration::from_secs(2), criterion_3),
        (4, "plus in the all-constructors model", Duration::from_secs(5), criterion_4),
        (5, "rev in the merged model", Duration::from_secs(5), criterion_5),
        (6, "map fusion", Duration::from_secs(2), criterion_6),
        (7, "bounding over the corpus", Duration::from_secs(120), criterion_7),
        (8, "metatheory suites", Duration::from_secs(60), criterion_8),
    ];
    let failed = with_big_stack(move || {
        let mut failed = 0;
        for (n, title, limit, run) in criteria {
            let start = Instant::now();
            let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
            let took = start.elapsed();
            let outcome = match outcome {
                Ok(detail) if took > limit => Err(format!("took {took:.2?}, limit {limit:?}; {detail}")),
                other => other,
            };
            match outcome {
                Ok(detail) => println!("PASS {n} {title} ({took:.2?}): {detail}"),
                Err(why) => {
                    failed += 1;
                    println!("FAIL {n} {title} ({took:.2?}): {why}");
                }
            }
        }
        failed
    });
    if failed > 0 {
        std::process::exit(1);
    }
}
