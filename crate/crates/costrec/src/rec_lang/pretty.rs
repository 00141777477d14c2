//! Display syntax for recurrence types and terms.

use std::fmt::Write;

use super::{RecExpr, RecShape, RecType};

fn named(ty: &RecType) -> Option<String> {
    if *ty == RecType::nat() {
        return Some("nat".into());
    }
    if *ty == RecType::bool() {
        return Some("bool".into());
    }
    if *ty == RecType::sum(RecType::bool(), RecType::Unit) {
        return Some("order".into());
    }
    let RecType::Mu(f) = ty else { return None };
    let RecShape::Sum(l, r) = &**f else { return None };
    if **l != RecShape::Const(RecType::Unit) {
        return None;
    }
    let RecShape::Prod(h, rest) = &**r else { return None };
    let RecShape::Const(a) = &**h else { return None };
    if a.free_vars().contains("t") {
        return None;
    }
    match &**rest {
        RecShape::T => Some(format!("list<{}>", pretty_rec_type(a))),
        RecShape::Prod(x, y) if **x == RecShape::T && **y == RecShape::T => {
            Some(format!("tree<{}>", pretty_rec_type(a)))
        }
        _ => None,
    }
}

pub fn pretty_rec_type(ty: &RecType) -> String {
    let mut out = String::new();
    write_type(ty, 0, &mut out);
    out
}

fn write_type(ty: &RecType, level: u8, out: &mut String) {
    if let Some(n) = named(ty) {
        out.push_str(&n);
        return;
    }
    let paren = |needed: bool, out: &mut String, body: &dyn Fn(&mut String)| {
        if needed {
            out.push('(');
        }
        body(out);
        if needed {
            out.push(')');
        }
    };
    match ty {
        RecType::Var(a) => out.push_str(a),
        RecType::C => out.push('C'),
        RecType::Unit => out.push_str("unit"),
        RecType::Arrow(a, b) => paren(level > 0, out, &|o| {
            write_type(a, 1, o);
            o.push_str(" -> ");
            write_type(b, 0, o);
        }),
        RecType::Sum(a, b) => paren(level > 1, out, &|o| {
            write_type(a, 1, o);
            o.push_str(" + ");
            write_type(b, 2, o);
        }),
        RecType::Prod(a, b) => paren(level > 2, out, &|o| {
            write_type(a, 3, o);
            o.push_str(" * ");
            write_type(b, 2, o);
        }),
        RecType::Mu(f) => paren(level > 0, out, &|o| {
            o.push_str("mu t. ");
            write_shape(f, 0, o);
        }),
        RecType::Forall(a, body) => paren(level > 0, out, &|o| {
            let _ = write!(o, "forall {a}. ");
            write_type(body, 0, o);
        }),
    }
}

fn write_shape(f: &RecShape, level: u8, out: &mut String) {
    let open = |needed: bool, out: &mut String| {
        if needed {
            out.push('(');
        }
    };
    match f {
        RecShape::T => out.push('t'),
        RecShape::Const(s) => write_type(s, level.max(1), out),
        RecShape::Arrow(a, b) => {
            open(level > 0, out);
            write_type(a, 1, out);
            out.push_str(" -> ");
            write_shape(b, 0, out);
            if level > 0 {
                out.push(')');
            }
        }
        RecShape::Sum(a, b) => {
            open(level > 1, out);
            write_shape(a, 1, out);
            out.push_str(" + ");
            write_shape(b, 2, out);
            if level > 1 {
                out.push(')');
            }
        }
        RecShape::Prod(a, b) => {
            open(level > 2, out);
            write_shape(a, 3, out);
            out.push_str(" * ");
            write_shape(b, 2, out);
            if level > 2 {
                out.push(')');
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Lvl {
    Top,
    Sum,
    App,
    Atom,
}

pub fn pretty_rec_expr(e: &RecExpr) -> String {
    let mut out = String::new();
    write_expr(e, Lvl::Top, &mut out);
    out
}

fn write_expr(e: &RecExpr, lvl: Lvl, out: &mut String) {
    let wrap = |need: Lvl, out: &mut String, body: &mut dyn FnMut(&mut String)| {
        let p = lvl > need;
        if p {
            out.push('(');
        }
        body(out);
        if p {
            out.push(')');
        }
    };
    if let Some((c, inner)) = e.as_add_cost() {
        wrap(Lvl::Sum, out, &mut |o| {
            write_expr(c, Lvl::App, o);
            o.push_str(" +c ");
            write_expr(inner, Lvl::App, o);
        });
        return;
    }
    match e {
        RecExpr::Var(x) => out.push_str(x),
        RecExpr::Zero => out.push('0'),
        RecExpr::One => out.push('1'),
        RecExpr::Unit => out.push_str("()"),
        RecExpr::Plus(a, b) => wrap(Lvl::Sum, out, &mut |o| {
            write_expr(a, Lvl::Sum, o);
            o.push_str(" + ");
            write_expr(b, Lvl::App, o);
        }),
        RecExpr::Pair(a, b) => {
            out.push('(');
            write_expr(a, Lvl::Top, out);
            out.push_str(", ");
            write_expr(b, Lvl::Top, out);
            out.push(')');
        }
        RecExpr::Proj(i, a) => {
            write_expr(a, Lvl::Atom, out);
            let _ = write!(out, ".{i}");
        }
        RecExpr::Inj(i, t, a) => wrap(Lvl::App, out, &mut |o| {
            let _ = write!(o, "inj{i}[{}] ", pretty_rec_type(t));
            write_expr(a, Lvl::Atom, o);
        }),
        RecExpr::Case(s, x0, t0, a, x1, t1, b) => wrap(Lvl::Top, out, &mut |o| {
            o.push_str("case ");
            write_expr(s, Lvl::App, o);
            let _ = write!(o, " of inj0 ({x0} : {}) => ", pretty_rec_type(t0));
            write_expr(a, Lvl::App, o);
            let _ = write!(o, " | inj1 ({x1} : {}) => ", pretty_rec_type(t1));
            write_expr(b, Lvl::App, o);
        }),
        RecExpr::Lam(x, t, body) => wrap(Lvl::Top, out, &mut |o| {
            let _ = write!(o, "fn ({x} : {}) => ", pretty_rec_type(t));
            write_expr(body, Lvl::Top, o);
        }),
        RecExpr::App(f, a) => wrap(Lvl::App, out, &mut |o| {
            write_expr(f, Lvl::App, o);
            o.push(' ');
            write_expr(a, Lvl::Atom, o);
        }),
        RecExpr::TyLam(a, _, body) => wrap(Lvl::Top, out, &mut |o| {
            let _ = write!(o, "tfn {a} => ");
            write_expr(body, Lvl::Top, o);
        }),
        RecExpr::TyApp(a, t) => {
            write_expr(a, Lvl::Atom, out);
            let _ = write!(out, "[{}]", pretty_rec_type(t));
        }
        RecExpr::Cons(d, a) => wrap(Lvl::App, out, &mut |o| {
            let _ = write!(o, "roll[{}] ", pretty_rec_type(d));
            write_expr(a, Lvl::Atom, o);
        }),
        RecExpr::Dest(d, a) => wrap(Lvl::App, out, &mut |o| {
            let _ = write!(o, "unroll[{}] ", pretty_rec_type(d));
            write_expr(a, Lvl::Atom, o);
        }),
        RecExpr::Fold { ty, scrut, binder, result, body } => wrap(Lvl::Top, out, &mut |o| {
            let _ = write!(o, "fold[{}] ", pretty_rec_type(ty));
            write_expr(scrut, Lvl::App, o);
            let _ = write!(o, " with {binder} => ");
            write_expr(body, Lvl::App, o);
            let _ = write!(o, " : {}", pretty_rec_type(result));
        }),
    }
}
