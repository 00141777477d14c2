//! Pretty-printer producing text that the parser reads back to the same tree.

use std::collections::BTreeMap;

use super::parser::is_keyword;
use super::{Expr, Program, Shape, SrcType, Value};

/// Named type templates used to print types compactly.
#[derive(Clone, Debug, Default)]
pub struct TypeNames {
    entries: Vec<(String, Vec<String>, SrcType)>,
}

impl TypeNames {
    pub fn builtin() -> Self {
        let a = || SrcType::var("a");
        let mut n = TypeNames::default();
        n.push("order", vec![], SrcType::order());
        n.push("bool", vec![], SrcType::bool());
        n.push("nat", vec![], SrcType::nat());
        n.push("list", vec!["a".into()], SrcType::list(a()));
        n.push("tree", vec!["a".into()], SrcType::tree(a()));
        n
    }

    pub fn push(&mut self, name: &str, params: Vec<String>, body: SrcType) {
        self.entries.push((name.to_string(), params, body));
    }

    fn lookup(&self, ty: &SrcType) -> Option<(String, Vec<SrcType>)> {
        for (name, params, body) in &self.entries {
            let mut binds = BTreeMap::new();
            if match_type(body, ty, params, &mut binds) {
                let args = params.iter().map(|p| binds.get(p).cloned().unwrap_or(SrcType::Unit)).collect();
                return Some((name.clone(), args));
            }
        }
        None
    }
}

fn match_type(pat: &SrcType, ty: &SrcType, params: &[String], binds: &mut BTreeMap<String, SrcType>) -> bool {
    match (pat, ty) {
        (SrcType::Var(a), _) if params.contains(a) => match binds.get(a) {
            Some(b) => b == ty,
            None => {
                binds.insert(a.clone(), ty.clone());
                true
            }
        },
        (SrcType::Var(a), SrcType::Var(b)) => a == b,
        (SrcType::Unit, SrcType::Unit) => true,
        (SrcType::Prod(a, b), SrcType::Prod(c, d))
        | (SrcType::Sum(a, b), SrcType::Sum(c, d))
        | (SrcType::Arrow(a, b), SrcType::Arrow(c, d)) => {
            match_type(a, c, params, binds) && match_type(b, d, params, binds)
        }
        (SrcType::Susp(a), SrcType::Susp(b)) => match_type(a, b, params, binds),
        (SrcType::Mu(f), SrcType::Mu(g)) => match_shape(f, g, params, binds),
        _ => false,
    }
}

fn match_shape(pat: &Shape, sh: &Shape, params: &[String], binds: &mut BTreeMap<String, SrcType>) -> bool {
    match (pat, sh) {
        (Shape::T, Shape::T) => true,
        (Shape::Const(a), Shape::Const(b)) => match_type(a, b, params, binds),
        (Shape::Prod(a, b), Shape::Prod(c, d)) | (Shape::Sum(a, b), Shape::Sum(c, d)) => {
            match_shape(a, c, params, binds) && match_shape(b, d, params, binds)
        }
        (Shape::Arrow(a, b), Shape::Arrow(c, d)) => match_type(a, c, params, binds) && match_shape(b, d, params, binds),
        _ => false,
    }
}

pub fn pretty_type(ty: &SrcType, names: &TypeNames) -> String {
    let mut out = String::new();
    write_type(ty, names, 0, &mut out);
    out
}

fn write_type(ty: &SrcType, names: &TypeNames, level: u8, out: &mut String) {
    if !matches!(ty, SrcType::Var(_) | SrcType::Unit) {
        if let Some((name, args)) = names.lookup(ty) {
            out.push_str(&name);
            if !args.is_empty() {
                out.push('<');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_type(a, names, 0, out);
                }
                out.push('>');
            }
            return;
        }
    }
    let paren = |needed: bool, out: &mut String, f: &mut dyn FnMut(&mut String)| {
        if needed {
            out.push('(');
        }
        f(out);
        if needed {
            out.push(')');
        }
    };
    match ty {
        SrcType::Var(a) => out.push_str(a),
        SrcType::Unit => out.push_str("unit"),
        SrcType::Arrow(a, b) => paren(level > 0, out, &mut |out| {
            write_type(a, names, 1, out);
            out.push_str(" -> ");
            write_type(b, names, 0, out);
        }),
        SrcType::Sum(a, b) => paren(level > 1, out, &mut |out| {
            write_type(a, names, 1, out);
            out.push_str(" + ");
            write_type(b, names, 2, out);
        }),
        SrcType::Prod(a, b) => paren(level > 2, out, &mut |out| {
            write_type(a, names, 3, out);
            out.push_str(" * ");
            write_type(b, names, 2, out);
        }),
        SrcType::Susp(a) => {
            out.push_str("susp ");
            write_type(a, names, 3, out);
        }
        SrcType::Mu(f) => paren(level > 0, out, &mut |out| {
            let fv = ty.free_vars();
            let mut t = "t".to_string();
            let mut i = 0;
            while fv.contains(&t) || is_keyword(&t) {
                i += 1;
                t = format!("t{i}");
            }
            out.push_str("mu ");
            out.push_str(&t);
            out.push_str(". ");
            write_type(&super::subst_shape(f, &SrcType::Var(t.clone())), names, 0, out);
        }),
    }
}

pub fn pretty_expr(e: &Expr, names: &TypeNames) -> String {
    let mut p = Printer { names, out: String::new() };
    p.expr(e, Level::Top);
    p.out
}

pub fn pretty_program(prog: &Program) -> String {
    let names = prog.type_names();
    let mut out = String::new();
    for t in &prog.types {
        out.push_str("type ");
        out.push_str(&t.name);
        if !t.params.is_empty() {
            out.push('<');
            out.push_str(&t.params.join(", "));
            out.push('>');
        }
        out.push_str(" = ");
        out.push_str(&pretty_type(&t.body, &TypeNames::builtin()));
        out.push_str(";\n");
    }
    for d in &prog.decls {
        out.push_str(&format!("let {} = {};\n", d.name, pretty_expr(&d.expr, &names)));
    }
    if let Some(m) = &prog.main {
        out.push_str(&format!("main = {};\n", pretty_expr(&m.expr, &names)));
    }
    out
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Top,
    App,
    Atom,
}

struct Printer<'a> {
    names: &'a TypeNames,
    out: String,
}

enum Sugar<'e> {
    Numeral(u64),
    Bool(bool),
    Nil(SrcType),
    Cons(SrcType, &'e Expr, &'e Expr),
    Emp(SrcType),
    Node(SrcType, &'e Expr, &'e Expr, &'e Expr),
}

fn as_numeral(e: &Expr) -> Option<u64> {
    let nat = SrcType::nat();
    let unfolded = nat.unfold()?;
    let mut n = 0;
    let mut cur = e;
    loop {
        let Expr::Cons(d, inner) = cur else { return None };
        if *d != nat {
            return None;
        }
        match &**inner {
            Expr::Inj(0, t, u) if *t == unfolded && **u == Expr::Unit => return Some(n),
            Expr::Inj(1, t, next) if *t == unfolded => {
                n += 1;
                cur = next;
            }
            _ => return None,
        }
    }
}

fn element_of(d: &SrcType, make: fn(SrcType) -> SrcType) -> Option<SrcType> {
    let mut binds = BTreeMap::new();
    let params = ["a".to_string()];
    if match_type(&make(SrcType::var("a")), d, &params, &mut binds) {
        binds.remove("a")
    } else {
        None
    }
}

fn sugar(e: &Expr) -> Option<Sugar<'_>> {
    if let Some(n) = as_numeral(e) {
        return Some(Sugar::Numeral(n));
    }
    match e {
        Expr::Inj(i, t, u) if *t == SrcType::bool() && **u == Expr::Unit => Some(Sugar::Bool(*i == 1)),
        Expr::Cons(d, inner) => {
            let Expr::Inj(i, t, payload) = &**inner else { return None };
            if Some(t) != d.unfold().as_ref() {
                return None;
            }
            if let Some(a) = element_of(d, SrcType::list) {
                return match (i, &**payload) {
                    (0, Expr::Unit) => Some(Sugar::Nil(a)),
                    (1, Expr::Pair(x, xs)) => Some(Sugar::Cons(a, x, xs)),
                    _ => None,
                };
            }
            if let Some(a) = element_of(d, SrcType::tree) {
                return match (i, &**payload) {
                    (0, Expr::Unit) => Some(Sugar::Emp(a)),
                    (1, Expr::Pair(x, rest)) => match &**rest {
                        Expr::Pair(l, r) => Some(Sugar::Node(a, x, l, r)),
                        _ => None,
                    },
                    _ => None,
                };
            }
            None
        }
        _ => None,
    }
}

impl Printer<'_> {
    fn s(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn ty(&mut self, t: &SrcType) {
        let s = pretty_type(t, self.names);
        self.s(&s);
    }

    fn bracket_ty(&mut self, t: &SrcType) {
        self.s("[");
        self.ty(t);
        self.s("]");
    }

    fn open(&mut self, needed: bool) {
        if needed {
            self.s("(");
        }
    }

    fn close(&mut self, needed: bool) {
        if needed {
            self.s(")");
        }
    }

    fn expr(&mut self, e: &Expr, level: Level) {
        if let Some(sg) = sugar(e) {
            match sg {
                Sugar::Numeral(n) => self.s(&format!("#{n}")),
                Sugar::Bool(b) => self.s(if b { "true" } else { "false" }),
                Sugar::Nil(a) => {
                    self.s("nil");
                    self.bracket_ty(&a);
                }
                Sugar::Emp(a) => {
                    self.s("emp");
                    self.bracket_ty(&a);
                }
                Sugar::Cons(a, x, xs) => {
                    self.s("cons");
                    self.bracket_ty(&a);
                    self.s("(");
                    self.expr(x, Level::Top);
                    self.s(", ");
                    self.expr(xs, Level::Top);
                    self.s(")");
                }
                Sugar::Node(a, x, l, r) => {
                    self.s("node");
                    self.bracket_ty(&a);
                    self.s("(");
                    self.expr(x, Level::Top);
                    self.s(", ");
                    self.expr(l, Level::Top);
                    self.s(", ");
                    self.expr(r, Level::Top);
                    self.s(")");
                }
            }
            return;
        }
        match e {
            Expr::Var(x, inst) => {
                self.s(x);
                if let Some(args) = inst {
                    self.s("[");
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            self.s(", ");
                        }
                        self.ty(a);
                    }
                    self.s("]");
                }
            }
            Expr::Unit => self.s("()"),
            Expr::Pair(a, b) => {
                self.s("(");
                self.expr(a, Level::Top);
                self.s(", ");
                self.expr(b, Level::Top);
                self.s(")");
            }
            Expr::Proj(i, a) => {
                self.expr(a, Level::Atom);
                self.s(&format!(".{i}"));
            }
            Expr::App(f, a) => {
                let p = level == Level::Atom;
                self.open(p);
                self.expr(f, Level::App);
                self.s(" ");
                self.expr(a, Level::Atom);
                self.close(p);
            }
            Expr::Inj(i, t, a) => self.prefix(&format!("inj{i}"), Some(t), a, level),
            Expr::Cons(t, a) => self.prefix("roll", Some(t), a, level),
            Expr::Dest(t, a) => self.prefix("unroll", Some(t), a, level),
            Expr::Delay(a) => self.prefix("delay", None, a, level),
            Expr::Force(a) => self.prefix("force", None, a, level),
            Expr::Lam(x, t, body) => {
                let p = level > Level::Top;
                self.open(p);
                self.s(&format!("fn ({x}: "));
                self.ty(t);
                self.s(") => ");
                self.expr(body, Level::Top);
                self.close(p);
            }
            Expr::Let(x, a, b) => {
                let p = level > Level::Top;
                self.open(p);
                self.s(&format!("let {x} = "));
                self.expr(a, Level::Top);
                self.s(" in ");
                self.expr(b, Level::Top);
                self.close(p);
            }
            Expr::Case(scrut, x0, e0, x1, e1) => {
                let p = level > Level::Top;
                self.open(p);
                self.s("case ");
                self.expr(scrut, Level::App);
                self.s(&format!(" of inj0 {x0} => "));
                self.expr(e0, Level::App);
                self.s(&format!(" | inj1 {x1} => "));
                self.expr(e1, Level::App);
                self.close(p);
            }
            Expr::Fold { ty, scrut, binder, body, result } => {
                let p = level > Level::Top;
                self.open(p);
                self.s("fold");
                self.bracket_ty(ty);
                self.s(" ");
                self.expr(scrut, Level::App);
                self.s(&format!(" with {binder} => "));
                self.expr(body, Level::App);
                self.s(" : ");
                self.ty(result);
                self.close(p);
            }
            Expr::Map { shape, binder, fun, arg } => {
                self.s(&format!("map[{}]({binder}. {}, ", pretty_shape(shape, self.names), pretty_value(fun)));
                self.expr(arg, Level::Top);
                self.s(")");
            }
            Expr::MapV { shape, binder, fun, arg } => {
                self.s(&format!(
                    "mapv[{}]({binder}. {}, {})",
                    pretty_shape(shape, self.names),
                    pretty_value(fun),
                    pretty_value(arg)
                ));
            }
        }
    }

    fn prefix(&mut self, kw: &str, ty: Option<&SrcType>, arg: &Expr, level: Level) {
        let p = level == Level::Atom;
        self.open(p);
        self.s(kw);
        if let Some(t) = ty {
            self.bracket_ty(t);
        }
        self.s(" ");
        self.expr(arg, Level::Atom);
        self.close(p);
    }
}

fn pretty_shape(f: &Shape, names: &TypeNames) -> String {
    pretty_type(&super::subst_shape(f, &SrcType::var("t")), names)
}

/// Display form of a value. First-order values print as parseable
/// expressions whenever the sum annotations can be recovered from an
/// enclosing constructor; closures print in angle brackets.
pub fn pretty_value(v: &Value) -> String {
    match value_to_expr(v, None) {
        Some(e) => pretty_expr(&e, &TypeNames::builtin()),
        None => display_value(v),
    }
}

fn display_value(v: &Value) -> String {
    match v {
        Value::Var(x) => x.clone(),
        Value::Unit => "()".into(),
        Value::Pair(a, b) => format!("({}, {})", pretty_value(a), pretty_value(b)),
        Value::Inj(i, a) => format!("inj{i} {}", pretty_value(a)),
        Value::Cons(d, a) => format!("roll[{d}] {}", pretty_value(a)),
        Value::Lam(c) => format!("<fn ({}: {}) => {}>", c.param, c.ann, c.body),
        Value::Delay(c) => format!("<delay {}>", c.body),
    }
}

/// Converts a first-order value to the expression denoting it. `ty`
/// supplies annotations for injections that are not inside a constructor.
pub fn value_to_expr(v: &Value, ty: Option<&SrcType>) -> Option<Expr> {
    use std::rc::Rc;
    Some(match v {
        Value::Var(x) => Expr::var(x),
        Value::Unit => Expr::Unit,
        Value::Pair(a, b) => {
            let (ta, tb) = match ty {
                Some(SrcType::Prod(ta, tb)) => (Some(&**ta), Some(&**tb)),
                _ => (None, None),
            };
            Expr::Pair(Rc::new(value_to_expr(a, ta)?), Rc::new(value_to_expr(b, tb)?))
        }
        Value::Inj(i, a) => {
            let t = ty?;
            let SrcType::Sum(l, r) = t else { return None };
            let inner = if *i == 0 { &**l } else { &**r };
            Expr::Inj(*i, t.clone(), Rc::new(value_to_expr(a, Some(inner))?))
        }
        Value::Cons(d, a) => {
            let unfolded = d.unfold()?;
            Expr::Cons(d.clone(), Rc::new(value_to_expr(a, Some(&unfolded))?))
        }
        Value::Lam(_) | Value::Delay(_) => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use super::*;

    fn roundtrip(src: &str) {
        let e = parse_expr(src).unwrap();
        let printed = pretty_expr(&e, &TypeNames::builtin());
        let again = parse_expr(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(e, again, "{printed}");
    }

    #[test]
    fn unit_prints_as_parens() {
        assert_eq!(pretty_expr(&Expr::Unit, &TypeNames::builtin()), "()");
    }

    #[test]
    fn numerals_roundtrip() {
        roundtrip("#3");
        assert_eq!(pretty_expr(&parse_expr("#3").unwrap(), &TypeNames::builtin()), "#3");
    }

    #[test]
    fn assorted_roundtrips() {
        roundtrip("fn (x: nat) => fn (y: list<nat>) => (x, y, ())");
        roundtrip("let id = fn (x: a) => x in (id[nat] #1, id true)");
        roundtrip("case f x y of inj0 a => force a | inj1 b => delay (g b)");
        roundtrip("foldtree[nat] t of emp => #0 | node(x, r0, r1) => S (force r0) : nat");
        roundtrip("caseorder cmp (x, y) of LT => a | EQ => b | GT => c");
        roundtrip("unroll[list<bool>] (cons[bool](true, nil[bool]))");
        roundtrip("fn (p: (unit + nat) * susp (nat -> nat)) => p.1.0");
    }

    #[test]
    fn tree_value_roundtrips() {
        let e = parse_expr("node[nat](#0, emp[nat], emp[nat])").unwrap();
        let v = Value::cons(
            SrcType::tree(SrcType::nat()),
            Value::inj(
                1,
                Value::pair(
                    Value::nat(0),
                    Value::pair(
                        Value::cons(SrcType::tree(SrcType::nat()), Value::inj(0, Value::Unit)),
                        Value::cons(SrcType::tree(SrcType::nat()), Value::inj(0, Value::Unit)),
                    ),
                ),
            ),
        );
        let printed = pretty_value(&v);
        assert_eq!(parse_expr(&printed).unwrap(), e);
    }

    #[test]
    fn mu_types_print_with_names() {
        assert_eq!(pretty_type(&SrcType::list(SrcType::nat()), &TypeNames::builtin()), "list<nat>");
        let odd = SrcType::mu(Shape::sum(Shape::T, Shape::T));
        assert_eq!(pretty_type(&odd, &TypeNames::builtin()), "mu t. t + t");
    }
}
