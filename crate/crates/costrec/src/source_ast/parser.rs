//! Lexer and recursive-descent parser for `.src` programs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use super::{Expr, Shape, SrcType};

/// A source position (1-based line and column).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

/// A named datatype declaration `type NAME<a, ...> = ty;`.
#[derive(Clone, PartialEq, Debug)]
pub struct TypeDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: SrcType,
    pub span: Span,
}

/// A term declaration `let NAME = e;` or `main = e;`.
#[derive(Clone, PartialEq, Debug)]
pub struct Decl {
    pub name: String,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct Program {
    pub types: Vec<TypeDecl>,
    pub decls: Vec<Decl>,
    pub main: Option<Decl>,
}

impl Program {
    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    /// Builtin and user-declared type names, for printing.
    pub fn type_names(&self) -> super::TypeNames {
        let mut names = super::TypeNames::builtin();
        for t in &self.types {
            names.push(&t.name, t.params.clone(), t.body.clone());
        }
        names
    }
}

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Int(u64),
    Hash,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Lt,
    Gt,
    Comma,
    Semi,
    Colon,
    Eq,
    FatArrow,
    Arrow,
    Star,
    Plus,
    Bar,
    Dot,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Hash => "`#`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::Lt => "`<`",
            Tok::Gt => "`>`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Colon => "`:`",
            Tok::Eq => "`=`",
            Tok::FatArrow => "`=>`",
            Tok::Arrow => "`->`",
            Tok::Star => "`*`",
            Tok::Plus => "`+`",
            Tok::Bar => "`|`",
            Tok::Dot => "`.`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

const KEYWORDS: &[&str] = &[
    "type",
    "let",
    "main",
    "in",
    "fn",
    "case",
    "of",
    "inj0",
    "inj1",
    "roll",
    "unroll",
    "fold",
    "with",
    "delay",
    "force",
    "mu",
    "unit",
    "susp",
    "true",
    "false",
    "Z",
    "S",
    "nil",
    "cons",
    "emp",
    "node",
    "LT",
    "EQ",
    "GT",
    "caseorder",
    "foldnat",
    "foldlist",
    "foldtree",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| ParseError { span: Span { line, col }, message };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let advance = |i: &mut usize, col: &mut usize, k: usize| {
            *i += k;
            *col += k;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(&mut i, &mut col, 1);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), span));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let s: String = chars[start..i].iter().collect();
            let n = s.parse().map_err(|_| err(span.line, span.col, format!("integer literal `{s}` is too large")))?;
            out.push((Tok::Int(n), span));
            continue;
        }
        let two = |a: char, b: char| c == a && chars.get(i + 1) == Some(&b);
        let (tok, len) = if two('=', '>') {
            (Tok::FatArrow, 2)
        } else if two('-', '>') {
            (Tok::Arrow, 2)
        } else {
            let t = match c {
                '#' => Tok::Hash,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                '=' => Tok::Eq,
                '*' => Tok::Star,
                '+' => Tok::Plus,
                '|' => Tok::Bar,
                '.' => Tok::Dot,
                _ => return Err(err(line, col, format!("unexpected character `{c}`"))),
            };
            (t, 1)
        };
        advance(&mut i, &mut col, len);
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

#[derive(Clone)]
struct TypeDef {
    params: Vec<String>,
    body: SrcType,
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    types: BTreeMap<String, TypeDef>,
    /// Type variables allowed in the current position, or `None` when any
    /// non-datatype identifier is accepted as a type variable.
    scoped_vars: Option<Vec<String>>,
}

type PResult<T> = Result<T, ParseError>;

fn builtin_types() -> BTreeMap<String, TypeDef> {
    let a = SrcType::var("a");
    let mut m = BTreeMap::new();
    let mono = |body| TypeDef { params: vec![], body };
    m.insert("bool".to_string(), mono(SrcType::bool()));
    m.insert("order".to_string(), mono(SrcType::order()));
    m.insert("nat".to_string(), mono(SrcType::nat()));
    m.insert("list".to_string(), TypeDef { params: vec!["a".into()], body: SrcType::list(a.clone()) });
    m.insert("tree".to_string(), TypeDef { params: vec!["a".into()], body: SrcType::tree(a) });
    m
}

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(text)?, pos: 0, types: builtin_types(), scoped_vars: None })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { span: self.span(), message: message.into() })
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            t => self.error(format!("expected an identifier, found {t}")),
        }
    }

    // ----- types -----

    fn ty(&mut self) -> PResult<SrcType> {
        let lhs = self.sum_ty()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            Ok(SrcType::arrow(lhs, self.ty()?))
        } else {
            Ok(lhs)
        }
    }

    fn sum_ty(&mut self) -> PResult<SrcType> {
        let mut acc = self.prod_ty()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            acc = SrcType::sum(acc, self.prod_ty()?);
        }
        Ok(acc)
    }

    fn prod_ty(&mut self) -> PResult<SrcType> {
        let lhs = self.atom_ty()?;
        if *self.peek() == Tok::Star {
            self.bump();
            Ok(SrcType::prod(lhs, self.prod_ty()?))
        } else {
            Ok(lhs)
        }
    }

    fn atom_ty(&mut self) -> PResult<SrcType> {
        let span = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) if s == "unit" => {
                self.bump();
                Ok(SrcType::Unit)
            }
            Tok::Ident(s) if s == "susp" => {
                self.bump();
                Ok(SrcType::susp(self.atom_ty()?))
            }
            Tok::Ident(s) if s == "mu" => {
                self.bump();
                let t = self.ident()?;
                self.expect(Tok::Dot)?;
                let saved = self.scoped_vars.clone();
                if let Some(vs) = &mut self.scoped_vars {
                    vs.push(t.clone());
                }
                let body = self.ty();
                self.scoped_vars = saved;
                let shape = Shape::from_type(&body?, &t).map_err(|message| ParseError { span, message })?;
                Ok(SrcType::mu(shape))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                if let Some(def) = self.types.get(&s).cloned() {
                    let mut args = Vec::new();
                    if *self.peek() == Tok::Lt {
                        self.bump();
                        args.push(self.ty()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.ty()?);
                        }
                        self.expect(Tok::Gt)?;
                    }
                    if args.len() != def.params.len() {
                        return Err(ParseError {
                            span,
                            message: format!(
                                "datatype `{s}` expects {} type argument(s), got {}",
                                def.params.len(),
                                args.len()
                            ),
                        });
                    }
                    let map = def.params.iter().cloned().zip(args).collect();
                    return Ok(def.body.subst(&map));
                }
                if *self.peek() == Tok::Lt {
                    return Err(ParseError { span, message: format!("undeclared datatype `{s}`") });
                }
                if let Some(vs) = &self.scoped_vars {
                    if !vs.contains(&s) {
                        return Err(ParseError { span, message: format!("undeclared type variable `{s}`") });
                    }
                }
                Ok(SrcType::Var(s))
            }
            t => self.error(format!("expected a type, found {t}")),
        }
    }

    fn bracket_ty(&mut self) -> PResult<SrcType> {
        self.expect(Tok::LBrack)?;
        let t = self.ty()?;
        self.expect(Tok::RBrack)?;
        Ok(t)
    }

    // ----- expressions -----

    fn expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("fn") {
            self.expect(Tok::LParen)?;
            let x = self.ident()?;
            self.expect(Tok::Colon)?;
            let t = self.ty()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::FatArrow)?;
            let body = self.expr()?;
            return Ok(Expr::Lam(x, t, Rc::new(body)));
        }
        if self.eat_kw("let") {
            let x = self.ident()?;
            self.expect(Tok::Eq)?;
            let bound = self.expr()?;
            self.expect_kw("in")?;
            let body = self.expr()?;
            return Ok(Expr::Let(x, Rc::new(bound), Rc::new(body)));
        }
        if self.eat_kw("case") {
            let scrut = self.expr()?;
            self.expect_kw("of")?;
            self.expect_kw("inj0")?;
            let x0 = self.ident()?;
            self.expect(Tok::FatArrow)?;
            let e0 = self.expr()?;
            self.expect(Tok::Bar)?;
            self.expect_kw("inj1")?;
            let x1 = self.ident()?;
            self.expect(Tok::FatArrow)?;
            let e1 = self.expr()?;
            return Ok(Expr::Case(Rc::new(scrut), x0, Rc::new(e0), x1, Rc::new(e1)));
        }
        if self.eat_kw("caseorder") {
            let scrut = self.expr()?;
            self.expect_kw("of")?;
            self.expect_kw("LT")?;
            self.expect(Tok::FatArrow)?;
            let lt = self.expr()?;
            self.expect(Tok::Bar)?;
            self.expect_kw("EQ")?;
            self.expect(Tok::FatArrow)?;
            let eq = self.expr()?;
            self.expect(Tok::Bar)?;
            self.expect_kw("GT")?;
            self.expect(Tok::FatArrow)?;
            let gt = self.expr()?;
            return Ok(desugar_caseorder(scrut, lt, eq, gt));
        }
        if self.eat_kw("fold") {
            let ty = self.bracket_ty()?;
            let scrut = self.expr()?;
            self.expect_kw("with")?;
            let x = self.ident()?;
            self.expect(Tok::FatArrow)?;
            let body = self.expr()?;
            self.expect(Tok::Colon)?;
            let result = self.ty()?;
            return Ok(Expr::Fold { ty, scrut: Rc::new(scrut), binder: x, body: Rc::new(body), result });
        }
        if self.eat_kw("foldnat") {
            let scrut = self.expr()?;
            self.expect_kw("of")?;
            self.expect_kw("Z")?;
            self.expect(Tok::FatArrow)?;
            let ez = self.expr()?;
            self.expect(Tok::Bar)?;
            self.expect_kw("S")?;
            self.expect(Tok::LParen)?;
            let r = self.ident()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::FatArrow)?;
            let es = self.expr()?;
            self.expect(Tok::Colon)?;
            let result = self.ty()?;
            return Ok(desugar_foldnat(scrut, ez, r, es, result));
        }
        if self.eat_kw("foldlist") {
            let elem = self.bracket_ty()?;
            let scrut = self.expr()?;
            self.expect_kw("of")?;
            self.expect_kw("nil")?;
            self.expect(Tok::FatArrow)?;
            let enil = self.expr()?;
            self.expect(Tok::Bar)?;
            self.expect_kw("cons")?;
            self.expect(Tok::LParen)?;
            let x = self.ident()?;
            self.expect(Tok::Comma)?;
            let r = self.ident()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::FatArrow)?;
            let econs = self.expr()?;
            self.expect(Tok::Colon)?;
            let result = self.ty()?;
            return Ok(desugar_foldlist(elem, scrut, enil, x, r, econs, result));
        }
        if self.eat_kw("foldtree") {
            let elem = self.bracket_ty()?;
            let scrut = self.expr()?;
            self.expect_kw("of")?;
            self.expect_kw("emp")?;
            self.expect(Tok::FatArrow)?;
            let eemp = self.expr()?;
            self.expect(Tok::Bar)?;
            self.expect_kw("node")?;
            self.expect(Tok::LParen)?;
            let x = self.ident()?;
            self.expect(Tok::Comma)?;
            let r0 = self.ident()?;
            self.expect(Tok::Comma)?;
            let r1 = self.ident()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::FatArrow)?;
            let enode = self.expr()?;
            self.expect(Tok::Colon)?;
            let result = self.ty()?;
            return Ok(desugar_foldtree(elem, scrut, eemp, x, r0, r1, enode, result));
        }
        self.app()
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::LParen | Tok::Hash => true,
            Tok::Ident(s) => {
                !is_keyword(s)
                    || matches!(
                        s.as_str(),
                        "Z" | "S"
                            | "true"
                            | "false"
                            | "nil"
                            | "cons"
                            | "emp"
                            | "node"
                            | "LT"
                            | "EQ"
                            | "GT"
                            | "inj0"
                            | "inj1"
                            | "roll"
                            | "unroll"
                            | "delay"
                            | "force"
                    )
            }
            _ => false,
        }
    }

    fn app(&mut self) -> PResult<Expr> {
        let mut f = self.prefix()?;
        while self.starts_atom() {
            let a = self.prefix()?;
            f = Expr::App(Rc::new(f), Rc::new(a));
        }
        Ok(f)
    }

    fn prefix(&mut self) -> PResult<Expr> {
        if self.eat_kw("delay") {
            return Ok(Expr::Delay(Rc::new(self.prefix()?)));
        }
        if self.eat_kw("force") {
            return Ok(Expr::Force(Rc::new(self.prefix()?)));
        }
        if self.eat_kw("S") {
            return Ok(succ(self.prefix()?));
        }
        for (kw, i) in [("inj0", 0u8), ("inj1", 1u8)] {
            if self.eat_kw(kw) {
                let t = self.bracket_ty()?;
                return Ok(Expr::Inj(i, t, Rc::new(self.prefix()?)));
            }
        }
        if self.eat_kw("roll") {
            let t = self.bracket_ty()?;
            return Ok(Expr::Cons(t, Rc::new(self.prefix()?)));
        }
        if self.eat_kw("unroll") {
            let t = self.bracket_ty()?;
            return Ok(Expr::Dest(t, Rc::new(self.prefix()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            match self.bump() {
                Tok::Int(i @ (0 | 1)) => e = Expr::Proj(i as u8, Rc::new(e)),
                t => return self.error(format!("expected projection index 0 or 1, found {t}")),
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(Expr::Unit);
                }
                let mut items = vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    items.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                Ok(tuple(items))
            }
            Tok::Hash => {
                self.bump();
                match self.bump() {
                    Tok::Int(n) => {
                        if n > 100_000 {
                            return self.error("numeral literal too large");
                        }
                        Ok(numeral(n))
                    }
                    t => self.error(format!("expected a number after `#`, found {t}")),
                }
            }
            Tok::Ident(s) => {
                match s.as_str() {
                    "Z" => {
                        self.bump();
                        return Ok(numeral(0));
                    }
                    "true" | "false" => {
                        self.bump();
                        return Ok(Expr::Inj(u8::from(s == "true"), SrcType::bool(), Rc::new(Expr::Unit)));
                    }
                    "LT" | "EQ" | "GT" => {
                        self.bump();
                        return Ok(order_lit(&s));
                    }
                    "nil" | "emp" => {
                        self.bump();
                        let a = self.bracket_ty()?;
                        let d = if s == "nil" { SrcType::list(a) } else { SrcType::tree(a) };
                        return Ok(leaf(d));
                    }
                    "cons" => {
                        self.bump();
                        let a = self.bracket_ty()?;
                        self.expect(Tok::LParen)?;
                        let x = self.expr()?;
                        self.expect(Tok::Comma)?;
                        let xs = self.expr()?;
                        self.expect(Tok::RParen)?;
                        return Ok(branch(SrcType::list(a), tuple(vec![x, xs])));
                    }
                    "node" => {
                        self.bump();
                        let a = self.bracket_ty()?;
                        self.expect(Tok::LParen)?;
                        let x = self.expr()?;
                        self.expect(Tok::Comma)?;
                        let l = self.expr()?;
                        self.expect(Tok::Comma)?;
                        let r = self.expr()?;
                        self.expect(Tok::RParen)?;
                        return Ok(branch(SrcType::tree(a), tuple(vec![x, l, r])));
                    }
                    _ => {}
                }
                let x = self.ident()?;
                if *self.peek() == Tok::LBrack {
                    self.bump();
                    let mut args = vec![self.ty()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.ty()?);
                    }
                    self.expect(Tok::RBrack)?;
                    return Ok(Expr::Var(x, Some(args)));
                }
                Ok(Expr::Var(x, None))
            }
            t => self.error(format!("expected an expression, found {t}")),
        }
    }

    // ----- declarations -----

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        let mut seen = BTreeSet::new();
        while *self.peek() != Tok::Eof {
            let span = self.span();
            if self.eat_kw("type") {
                let name = self.ident()?;
                if self.types.contains_key(&name) {
                    return Err(ParseError { span, message: format!("datatype `{name}` is already defined") });
                }
                let mut params = Vec::new();
                if *self.peek() == Tok::Lt {
                    self.bump();
                    params.push(self.ident()?);
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        params.push(self.ident()?);
                    }
                    self.expect(Tok::Gt)?;
                }
                self.expect(Tok::Eq)?;
                self.scoped_vars = Some(params.clone());
                let body = self.ty();
                self.scoped_vars = None;
                let body = body?;
                self.expect(Tok::Semi)?;
                self.types.insert(name.clone(), TypeDef { params: params.clone(), body: body.clone() });
                prog.types.push(TypeDecl { name, params, body, span });
            } else if self.eat_kw("let") {
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                let expr = self.expr()?;
                self.expect(Tok::Semi)?;
                if !seen.insert(name.clone()) {
                    return Err(ParseError { span, message: format!("`{name}` is defined twice") });
                }
                prog.decls.push(Decl { name, expr, span });
            } else if self.eat_kw("main") {
                self.expect(Tok::Eq)?;
                let expr = self.expr()?;
                self.expect(Tok::Semi)?;
                if prog.main.is_some() {
                    return Err(ParseError { span, message: "`main` is defined twice".into() });
                }
                prog.main = Some(Decl { name: "main".into(), expr, span });
            } else {
                return self.error(format!("expected `type`, `let` or `main`, found {}", self.peek()));
            }
        }
        Ok(prog)
    }
}

fn tuple(mut items: Vec<Expr>) -> Expr {
    let last = items.pop().expect("nonempty tuple");
    items.into_iter().rev().fold(last, |acc, e| Expr::Pair(Rc::new(e), Rc::new(acc)))
}

fn leaf(d: SrcType) -> Expr {
    let unfolded = d.unfold().expect("inductive");
    Expr::Cons(d, Rc::new(Expr::Inj(0, unfolded, Rc::new(Expr::Unit))))
}

fn branch(d: SrcType, payload: Expr) -> Expr {
    let unfolded = d.unfold().expect("inductive");
    Expr::Cons(d, Rc::new(Expr::Inj(1, unfolded, Rc::new(payload))))
}

fn succ(e: Expr) -> Expr {
    branch(SrcType::nat(), e)
}

/// The numeral `#n` as nested constructors.
pub(crate) fn numeral(n: u64) -> Expr {
    (0..n).fold(leaf(SrcType::nat()), |acc, _| succ(acc))
}

fn order_lit(which: &str) -> Expr {
    let unit = || Rc::new(Expr::Unit);
    match which {
        "LT" => Expr::Inj(0, SrcType::order(), Rc::new(Expr::Inj(0, SrcType::bool(), unit()))),
        "EQ" => Expr::Inj(0, SrcType::order(), Rc::new(Expr::Inj(1, SrcType::bool(), unit()))),
        _ => Expr::Inj(1, SrcType::order(), unit()),
    }
}

fn fresh(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}{i}")).find(|c| !avoid.contains(c)).expect("unbounded supply")
}

fn names_of(es: &[&Expr], extra: &[&str]) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = extra.iter().map(|s| s.to_string()).collect();
    for e in es {
        e.all_names(&mut out);
    }
    out
}

fn desugar_caseorder(scrut: Expr, lt: Expr, eq: Expr, gt: Expr) -> Expr {
    let avoid = names_of(&[&lt, &eq, &gt], &[]);
    let w = fresh("w", &avoid);
    let u = fresh("u", &avoid);
    let inner = Expr::Case(Rc::new(Expr::var(&w)), u.clone(), Rc::new(lt), u.clone(), Rc::new(eq));
    Expr::Case(Rc::new(scrut), w, Rc::new(inner), u, Rc::new(gt))
}

fn desugar_foldnat(scrut: Expr, ez: Expr, r: String, es: Expr, result: SrcType) -> Expr {
    let avoid = names_of(&[&ez, &es], &[&r]);
    let w = fresh("w", &avoid);
    let u = fresh("u", &avoid);
    let body = Expr::Case(Rc::new(Expr::var(&w)), u, Rc::new(ez), r, Rc::new(es));
    Expr::Fold { ty: SrcType::nat(), scrut: Rc::new(scrut), binder: w, body: Rc::new(body), result }
}

fn desugar_foldlist(
    elem: SrcType,
    scrut: Expr,
    enil: Expr,
    x: String,
    r: String,
    econs: Expr,
    result: SrcType,
) -> Expr {
    let avoid = names_of(&[&enil, &econs], &[&x, &r]);
    let w = fresh("w", &avoid);
    let y = fresh("y", &avoid);
    let proj = |i| Expr::Proj(i, Rc::new(Expr::var(&y)));
    let econs =
        if x == r { econs.subst_var(&r, &proj(1)) } else { econs.subst_var(&x, &proj(0)).subst_var(&r, &proj(1)) };
    let body = Expr::Case(Rc::new(Expr::var(&w)), y.clone(), Rc::new(enil), y, Rc::new(econs));
    Expr::Fold { ty: SrcType::list(elem), scrut: Rc::new(scrut), binder: w, body: Rc::new(body), result }
}

#[allow(clippy::too_many_arguments)]
fn desugar_foldtree(
    elem: SrcType,
    scrut: Expr,
    eemp: Expr,
    x: String,
    r0: String,
    r1: String,
    enode: Expr,
    result: SrcType,
) -> Expr {
    let avoid = names_of(&[&eemp, &enode], &[&x, &r0, &r1]);
    let w = fresh("w", &avoid);
    let y = fresh("y", &avoid);
    let yv = || Rc::new(Expr::var(&y));
    let p0 = Expr::Proj(0, yv());
    let p1 = Expr::Proj(0, Rc::new(Expr::Proj(1, yv())));
    let p2 = Expr::Proj(1, Rc::new(Expr::Proj(1, yv())));
    // Later binders shadow earlier ones when names repeat.
    let mut pairs: Vec<(String, Expr)> = Vec::new();
    for (name, rep) in [(x, p0), (r0, p1), (r1, p2)] {
        pairs.retain(|(n, _)| *n != name);
        pairs.push((name, rep));
    }
    let enode = pairs.iter().fold(enode, |acc, (n, rep)| acc.subst_var(n, rep));
    let body = Expr::Case(Rc::new(Expr::var(&w)), y.clone(), Rc::new(eemp), y, Rc::new(enode));
    Expr::Fold { ty: SrcType::tree(elem), scrut: Rc::new(scrut), binder: w, body: Rc::new(body), result }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    Parser::new(text)?.program()
}

/// Parses a single expression using only the builtin datatypes.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after expression", p.peek()));
    }
    Ok(e)
}

/// Parses an expression in the scope of a program's datatype declarations.
pub fn parse_expr_in(program: &Program, text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    for t in &program.types {
        p.types.insert(t.name.clone(), TypeDef { params: t.params.clone(), body: t.body.clone() });
    }
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after expression", p.peek()));
    }
    Ok(e)
}

pub fn parse_type(text: &str) -> Result<SrcType, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after type", p.peek()));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_function() {
        let e = parse_expr("fn (x: unit) => x").unwrap();
        assert_eq!(e, Expr::Lam("x".into(), SrcType::Unit, Rc::new(Expr::var("x"))));
    }

    #[test]
    fn numeral_two_is_nested_successors() {
        let z = leaf(SrcType::nat());
        assert_eq!(parse_expr("#2").unwrap(), succ(succ(z)));
        assert_eq!(parse_expr("S (S Z)").unwrap(), parse_expr("#2").unwrap());
    }

    #[test]
    fn tuples_nest_to_the_right() {
        let e = parse_expr("(a, b, c)").unwrap();
        let v = |s: &str| Rc::new(Expr::var(s));
        assert_eq!(e, Expr::Pair(v("a"), Rc::new(Expr::Pair(v("b"), v("c")))));
    }

    #[test]
    fn operator_associativity_in_types() {
        let t = parse_type("unit + unit + unit").unwrap();
        assert_eq!(t, SrcType::order());
        let p = parse_type("a * b * c").unwrap();
        assert_eq!(p, SrcType::prod(SrcType::var("a"), SrcType::prod(SrcType::var("b"), SrcType::var("c"))));
        let f = parse_type("a -> b -> c").unwrap();
        assert_eq!(f, SrcType::arrow(SrcType::var("a"), SrcType::arrow(SrcType::var("b"), SrcType::var("c"))));
    }

    #[test]
    fn foldtree_expands_to_fold_and_case() {
        let e =
            parse_expr("foldtree[a] t of emp => emp[a] | node(x, r0, r1) => node[a](x, force r0, force r1) : tree<a>")
                .unwrap();
        let Expr::Fold { ty, binder, body, result, .. } = &e else { panic!("not a fold: {e:?}") };
        assert_eq!(*ty, SrcType::tree(SrcType::var("a")));
        assert_eq!(*result, SrcType::tree(SrcType::var("a")));
        let Expr::Case(scrut, y0, _, y1, enode) = &**body else { panic!() };
        assert_eq!(**scrut, Expr::var(binder));
        assert_eq!(y0, y1);
        let fv = enode.free_vars();
        assert!(fv.contains(y1.as_str()));
        assert!(!fv.contains("x") && !fv.contains("r0") && !fv.contains("r1"));
    }

    #[test]
    fn sugar_binders_avoid_user_names() {
        let e = parse_expr("foldlist[nat] l of nil => w | cons(x, r) => y : nat").unwrap();
        let Expr::Fold { binder, body, .. } = &e else { panic!() };
        assert_ne!(binder, "w");
        let Expr::Case(_, y, _, _, _) = &**body else { panic!() };
        assert_ne!(y, "y");
        assert_ne!(y, "w");
    }

    #[test]
    fn undeclared_datatype_is_reported() {
        let err = parse_program("let f = fn (x: foo<nat>) => x;").unwrap_err();
        assert!(err.message.contains("undeclared datatype"));
        assert_eq!(err.span.line, 1);
    }

    #[test]
    fn undeclared_type_variable_in_declaration() {
        let err = parse_program("type bad<a> = mu t. unit + b * t;").unwrap_err();
        assert!(err.message.contains("undeclared type variable"), "{err}");
    }

    #[test]
    fn user_datatype_declaration() {
        let p = parse_program("type seq<a> = mu t. unit + a * t;\nlet e = nil[nat];").unwrap();
        assert_eq!(p.types[0].body, SrcType::list(SrcType::var("a")));
    }

    #[test]
    fn error_position_is_reported() {
        let err = parse_program("let x = ();\nlet y = (;").unwrap_err();
        assert_eq!(err.span, Span { line: 2, col: 10 });
    }
}
