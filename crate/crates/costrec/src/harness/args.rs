//! Textual input potentials for `analyze`.
//!
//! ```text
//! arg  ::= NUM | inf | top | bot | * | () | ( arg , arg ) | inj0 arg | inj1 arg
//!        | { NAME : NUM , ... }
//! ```
//! A number at a datatype is a constructor size; in the size-map models it
//! also sets every other datatype inside the type to `∞`. Map keys name a
//! datatype by its head (`nat`, `list`, `tree`) or its full printed type.

use crate::models::{bottom, conc, reachable, top, Carrier, Model};
use crate::rec_lang::{pretty_rec_type, RecType};
use crate::semdom::{ExtNat, Sem, SizeMap};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("bad argument `{input}`: {message}")]
pub struct ArgError {
    pub input: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Lit {
    Num(ExtNat),
    Top,
    Bot,
    Unit,
    Pair(Box<Lit>, Box<Lit>),
    Inj(u8, Box<Lit>),
    Map(Vec<(String, ExtNat)>),
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> String {
        self.ws();
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || b"_'<>".contains(&self.s[self.i])) {
            self.i += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.i]).into_owned()
    }

    fn number(&mut self, w: &str) -> Result<ExtNat, String> {
        match w {
            "inf" | "∞" => Ok(ExtNat::Inf),
            _ => w.parse::<u64>().map(ExtNat::Fin).map_err(|_| format!("expected a number, found `{w}`")),
        }
    }

    fn lit(&mut self) -> Result<Lit, String> {
        if self.eat(b'(') {
            if self.eat(b')') {
                return Ok(Lit::Unit);
            }
            let a = self.lit()?;
            if !self.eat(b',') {
                return Err("expected `,` in a pair".into());
            }
            let b = self.lit()?;
            if !self.eat(b')') {
                return Err("expected `)`".into());
            }
            return Ok(Lit::Pair(a.into(), b.into()));
        }
        if self.eat(b'*') {
            return Ok(Lit::Unit);
        }
        if self.eat(b'{') {
            let mut entries = Vec::new();
            if self.eat(b'}') {
                return Ok(Lit::Map(entries));
            }
            loop {
                let k = self.word();
                if !self.eat(b':') {
                    return Err("expected `:` in a size map".into());
                }
                let w = self.word();
                entries.push((k, self.number(&w)?));
                if self.eat(b'}') {
                    return Ok(Lit::Map(entries));
                }
                if !self.eat(b',') {
                    return Err("expected `,` or `}` in a size map".into());
                }
            }
        }
        let w = self.word();
        match w.as_str() {
            "top" => Ok(Lit::Top),
            "bot" => Ok(Lit::Bot),
            "inj0" => Ok(Lit::Inj(0, self.lit()?.into())),
            "inj1" => Ok(Lit::Inj(1, self.lit()?.into())),
            "" => Err("unexpected input".into()),
            _ => Ok(Lit::Num(self.number(&w)?)),
        }
    }
}

fn datatype_matches(d: &RecType, key: &str) -> bool {
    let full = pretty_rec_type(d);
    full == key || full.split('<').next() == Some(key)
}

fn to_sem(model: Model, lit: &Lit, ty: &RecType) -> Result<Sem, String> {
    let err = |what: &str| Err(format!("{what} does not fit type {}", pretty_rec_type(ty)));
    match (lit, ty) {
        (Lit::Top, _) => top(model, ty).map_err(|e| e.to_string()),
        (Lit::Bot, _) => bottom(model, ty).map_err(|e| e.to_string()),
        (Lit::Unit, RecType::Unit) => Ok(Sem::Unit),
        (Lit::Num(n), RecType::C) => Ok(Sem::Cost(*n)),
        (Lit::Num(n), RecType::Mu(_)) => match model.carrier() {
            Carrier::Count { .. } => Ok(Sem::Size(*n)),
            Carrier::Maps => conc(ty, &Sem::Size(*n)).map_err(|e| e.to_string()),
            Carrier::Exact => Err("the exact model takes source values".into()),
        },
        (Lit::Map(entries), RecType::Mu(_)) if model.carrier() == Carrier::Maps => {
            let inside = reachable(ty);
            let mut m = SizeMap::new();
            for (k, n) in entries {
                let d = inside
                    .iter()
                    .find(|d| datatype_matches(d, k))
                    .ok_or_else(|| format!("no datatype `{k}` inside {}", pretty_rec_type(ty)))?;
                m.set(d, *n);
            }
            Ok(Sem::map(m))
        }
        (Lit::Pair(a, b), RecType::Prod(s, t)) => Ok(Sem::pair(to_sem(model, a, s)?, to_sem(model, b, t)?)),
        (Lit::Inj(i, a), RecType::Sum(s, t)) => {
            let v = to_sem(model, a, if *i == 0 { s } else { t })?;
            Ok(if *i == 0 { Sem::ideal(vec![v], vec![]) } else { Sem::ideal(vec![], vec![v]) })
        }
        (Lit::Map(_), _) => err("a size map"),
        (Lit::Num(_), _) => err("a number"),
        (Lit::Unit, _) => err("`*`"),
        (Lit::Pair(..), _) => err("a pair"),
        (Lit::Inj(..), _) => err("an injection"),
    }
}

/// Parses an input potential of type `ty` for a non-exact model.
pub fn parse_potential(model: Model, text: &str, ty: &RecType) -> Result<Sem, ArgError> {
    let fail = |message: String| ArgError { input: text.to_string(), message };
    let mut p = Parser { s: text.as_bytes(), i: 0 };
    let lit = p.lit().map_err(fail)?;
    p.ws();
    if p.i != text.len() {
        return Err(fail("trailing input".into()));
    }
    to_sem(model, &lit, ty).map_err(fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_infinity() {
        let l = RecType::list(RecType::nat());
        assert_eq!(parse_potential(Model::Size, "5", &l).unwrap().to_string(), "5");
        assert_eq!(parse_potential(Model::Size, "inf", &l).unwrap().to_string(), "∞");
        assert!(parse_potential(Model::Size, "5x", &l).is_err());
    }

    #[test]
    fn size_maps_by_head_name() {
        let t = RecType::tree(RecType::nat());
        let v = parse_potential(Model::AllCons, "{nat:3, tree:5}", &t).unwrap();
        assert_eq!(v.to_string(), "{nat:3, tree:5}");
        assert!(parse_potential(Model::AllCons, "{list:2}", &t).is_err());
    }

    #[test]
    fn structured_arguments() {
        let ty = RecType::prod(RecType::nat(), RecType::bool());
        assert_eq!(parse_potential(Model::Height, "(3, top)", &ty).unwrap().to_string(), "(3, {*}⊔{*})");
        assert_eq!(parse_potential(Model::Height, "(1, inj1 *)", &ty).unwrap().to_string(), "(1, {}⊔{*})");
    }
}
