//! Guard and action expressions attached to trigger arcs.
//!
//! The language is deliberately small: integer literals, variable names,
//! bare enum symbols, `now()`, `+ - *`, comparisons and `and/or/not`.
//! Numbers are 64-bit integers; the simulation clock is an integer tick.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{StateVar, VarType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Ge => ">=",
            BinOp::Gt => ">",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Eq | BinOp::Ne | BinOp::Ge | BinOp::Gt => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expr {
    Num(i64),
    /// A state variable, or an enum symbol when no variable has that name.
    Name(String),
    Now,
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

const PREC_NOT: u8 = 3;
const PREC_NEG: u8 = 7;
const PREC_ATOM: u8 = 8;

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn name(n: &str) -> Expr {
        Expr::Name(n.to_string())
    }

    /// Parses a standalone expression, e.g. `now() - start > 1`.
    pub fn parse(text: &str) -> Result<Expr, String> {
        crate::dsl::parse_expr(text)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(n) if *n < 0 => PREC_NEG,
            Expr::Num(_) | Expr::Name(_) | Expr::Now => PREC_ATOM,
            Expr::Neg(_) => PREC_NEG,
            Expr::Not(_) => PREC_NOT,
            Expr::Binary(op, _, _) => op.precedence(),
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(n) => write!(f, "{n}")?,
            Expr::Name(n) => f.write_str(n)?,
            Expr::Now => f.write_str("now()")?,
            Expr::Neg(inner) => {
                f.write_str("-")?;
                // `-5` lexes back as the literal -5, so keep the negation explicit.
                if matches!(**inner, Expr::Num(_)) {
                    write!(f, "({inner})")?;
                } else {
                    inner.write_prec(f, PREC_NEG)?;
                }
            }
            Expr::Not(inner) => {
                f.write_str("not ")?;
                inner.write_prec(f, PREC_NOT)?;
            }
            Expr::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                let (lmin, rmin) = if op.is_comparison() {
                    (p + 1, p + 1)
                } else {
                    (p, p + 1)
                };
                lhs.write_prec(f, lmin)?;
                write!(f, " {} ", op.symbol())?;
                rhs.write_prec(f, rmin)?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }

    /// Names referenced by the expression, in first-occurrence order.
    pub fn names(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
            match e {
                Expr::Name(n) => {
                    if !out.contains(&n.as_str()) {
                        out.push(n)
                    }
                }
                Expr::Num(_) | Expr::Now => {}
                Expr::Neg(x) | Expr::Not(x) => walk(x, out),
                Expr::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

/// `var := expr`
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub var: String,
    pub value: Expr,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := {}", self.var, self.value)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Num(i64),
    Sym(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Num(n) => write!(f, "{n}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("operator `{op}` cannot combine {lhs} and {rhs}")]
    TypeMismatch {
        op: &'static str,
        lhs: Value,
        rhs: Value,
    },
    #[error("operator `{op}` expects {expected}, got {got}")]
    Operand {
        op: &'static str,
        expected: &'static str,
        got: Value,
    },
    #[error("arithmetic overflow")]
    Overflow,
}

/// Variable bindings plus the current clock value.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<&Value>;
    fn now(&self) -> i64;
}

/// A plain environment used by the simulator and in tests.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bindings {
    pub values: BTreeMap<String, Value>,
    pub now: i64,
}

impl Env for Bindings {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    fn now(&self) -> i64 {
        self.now
    }
}

pub fn eval(expr: &Expr, env: &dyn Env) -> Result<Value, EvalError> {
    Ok(match expr {
        Expr::Num(n) => Value::Num(*n),
        Expr::Now => Value::Num(env.now()),
        Expr::Name(n) => env
            .lookup(n)
            .cloned()
            .unwrap_or_else(|| Value::Sym(n.clone())),
        Expr::Neg(inner) => match eval(inner, env)? {
            Value::Num(n) => Value::Num(n.checked_neg().ok_or(EvalError::Overflow)?),
            got => {
                return Err(EvalError::Operand {
                    op: "-",
                    expected: "a number",
                    got,
                })
            }
        },
        Expr::Not(inner) => match eval(inner, env)? {
            Value::Bool(b) => Value::Bool(!b),
            got => {
                return Err(EvalError::Operand {
                    op: "not",
                    expected: "a boolean",
                    got,
                })
            }
        },
        Expr::Binary(op, lhs, rhs) => {
            let op = *op;
            // short-circuit keeps `and`/`or` total over partially typed guards
            if matches!(op, BinOp::And | BinOp::Or) {
                let l = as_bool(op, eval(lhs, env)?)?;
                if (op == BinOp::And && !l) || (op == BinOp::Or && l) {
                    return Ok(Value::Bool(l));
                }
                return Ok(Value::Bool(as_bool(op, eval(rhs, env)?)?));
            }
            let l = eval(lhs, env)?;
            let r = eval(rhs, env)?;
            binary(op, l, r)?
        }
    })
}

fn as_bool(op: BinOp, v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        got => Err(EvalError::Operand {
            op: op.symbol(),
            expected: "a boolean",
            got,
        }),
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Result<Value, EvalError> {
    use BinOp::*;
    match (op, &l, &r) {
        (Add, Value::Num(a), Value::Num(b)) => {
            a.checked_add(*b).map(Value::Num).ok_or(EvalError::Overflow)
        }
        (Sub, Value::Num(a), Value::Num(b)) => {
            a.checked_sub(*b).map(Value::Num).ok_or(EvalError::Overflow)
        }
        (Mul, Value::Num(a), Value::Num(b)) => {
            a.checked_mul(*b).map(Value::Num).ok_or(EvalError::Overflow)
        }
        (Lt, Value::Num(a), Value::Num(b)) => Ok(Value::Bool(a < b)),
        (Le, Value::Num(a), Value::Num(b)) => Ok(Value::Bool(a <= b)),
        (Ge, Value::Num(a), Value::Num(b)) => Ok(Value::Bool(a >= b)),
        (Gt, Value::Num(a), Value::Num(b)) => Ok(Value::Bool(a > b)),
        (Eq, _, _) if same_kind(&l, &r) => Ok(Value::Bool(l == r)),
        (Ne, _, _) if same_kind(&l, &r) => Ok(Value::Bool(l != r)),
        _ => Err(EvalError::TypeMismatch {
            op: op.symbol(),
            lhs: l,
            rhs: r,
        }),
    }
}

fn same_kind(a: &Value, b: &Value) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

/// Static type of an expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ty {
    Num,
    Bool,
    /// Enum-typed: either a variable with its domain, or a bare symbol.
    Sym {
        domain: Option<Vec<String>>,
        literal: Option<String>,
    },
}

impl Ty {
    fn describe(&self) -> &'static str {
        match self {
            Ty::Num => "number",
            Ty::Bool => "boolean",
            Ty::Sym { .. } => "enum value",
        }
    }
}

/// Type-checks `expr` against the declared variables.
pub fn type_of(expr: &Expr, vars: &[StateVar]) -> Result<Ty, String> {
    match expr {
        Expr::Num(_) | Expr::Now => Ok(Ty::Num),
        Expr::Name(n) => {
            if let Some(v) = vars.iter().find(|v| &v.id == n) {
                return Ok(match &v.var_type {
                    VarType::Number => Ty::Num,
                    VarType::Enum(values) => Ty::Sym {
                        domain: Some(values.clone()),
                        literal: None,
                    },
                });
            }
            let known = vars.iter().any(|v| match &v.var_type {
                VarType::Enum(values) => values.contains(n),
                VarType::Number => false,
            });
            if known {
                Ok(Ty::Sym {
                    domain: None,
                    literal: Some(n.clone()),
                })
            } else {
                Err(format!("`{n}` is neither a variable nor an enum value"))
            }
        }
        Expr::Neg(inner) => match type_of(inner, vars)? {
            Ty::Num => Ok(Ty::Num),
            t => Err(format!("`-` expects a number, found {}", t.describe())),
        },
        Expr::Not(inner) => match type_of(inner, vars)? {
            Ty::Bool => Ok(Ty::Bool),
            t => Err(format!("`not` expects a boolean, found {}", t.describe())),
        },
        Expr::Binary(op, lhs, rhs) => {
            let l = type_of(lhs, vars)?;
            let r = type_of(rhs, vars)?;
            match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul => {
                    if l == Ty::Num && r == Ty::Num {
                        Ok(Ty::Num)
                    } else {
                        Err(format!("`{}` expects numbers", op.symbol()))
                    }
                }
                BinOp::And | BinOp::Or => {
                    if l == Ty::Bool && r == Ty::Bool {
                        Ok(Ty::Bool)
                    } else {
                        Err(format!("`{}` expects booleans", op.symbol()))
                    }
                }
                BinOp::Eq | BinOp::Ne => {
                    check_equatable(&l, &r)?;
                    Ok(Ty::Bool)
                }
                _ => {
                    if l == Ty::Num && r == Ty::Num {
                        Ok(Ty::Bool)
                    } else {
                        Err(format!("`{}` expects numbers", op.symbol()))
                    }
                }
            }
        }
    }
}

fn check_equatable(l: &Ty, r: &Ty) -> Result<(), String> {
    match (l, r) {
        (Ty::Num, Ty::Num) | (Ty::Bool, Ty::Bool) => Ok(()),
        (
            Ty::Sym {
                domain: ld,
                literal: ll,
            },
            Ty::Sym {
                domain: rd,
                literal: rl,
            },
        ) => {
            for (domain, literal) in [(ld, rl), (rd, ll)] {
                if let (Some(domain), Some(literal)) = (domain, literal) {
                    if !domain.contains(literal) {
                        return Err(format!(
                            "`{literal}` is not one of {{{}}}",
                            domain.join(", ")
                        ));
                    }
                }
            }
            Ok(())
        }
        _ => Err(format!(
            "cannot compare {} with {}",
            l.describe(),
            r.describe()
        )),
    }
}

/// Checks that `action` assigns a value of the variable's type.
pub fn check_action(action: &Action, vars: &[StateVar]) -> Result<(), String> {
    let var = vars
        .iter()
        .find(|v| v.id == action.var)
        .ok_or_else(|| format!("assignment to undeclared variable `{}`", action.var))?;
    let ty = type_of(&action.value, vars)?;
    match (&var.var_type, ty) {
        (VarType::Number, Ty::Num) => Ok(()),
        (VarType::Enum(values), Ty::Sym { domain, literal }) => {
            if let Some(lit) = literal {
                if !values.contains(&lit) {
                    return Err(format!("`{lit}` is not a value of `{}`", var.id));
                }
            }
            if let Some(domain) = domain {
                if domain.iter().any(|d| !values.contains(d)) {
                    return Err(format!("enum domains differ in assignment to `{}`", var.id));
                }
            }
            Ok(())
        }
        (_, ty) => Err(format!("`{}` cannot hold a {}", var.id, ty.describe())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, Value)], now: i64) -> Bindings {
        Bindings {
            values: pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            now,
        }
    }

    #[test]
    fn arithmetic_and_comparison() {
        let e = Expr::parse("now() - start > 1").unwrap();
        assert_eq!(
            eval(&e, &env(&[("start", Value::Num(3))], 5)).unwrap(),
            Value::Bool(true)
        );
        assert_eq!(
            eval(&e, &env(&[("start", Value::Num(4))], 5)).unwrap(),
            Value::Bool(false)
        );
    }

    #[test]
    fn enum_symbols_resolve_when_no_variable_matches() {
        let e = Expr::parse("light == on and not (level >= 100)").unwrap();
        let b = env(
            &[
                ("light", Value::Sym("on".into())),
                ("level", Value::Num(40)),
            ],
            0,
        );
        assert_eq!(eval(&e, &b).unwrap(), Value::Bool(true));
    }

    #[test]
    fn mismatched_operands_are_errors() {
        let e = Expr::parse("light + 1").unwrap();
        let b = env(&[("light", Value::Sym("on".into()))], 0);
        assert!(matches!(eval(&e, &b), Err(EvalError::TypeMismatch { .. })));
    }

    #[test]
    fn display_respects_precedence() {
        for src in [
            "a - (b - c)",
            "a - b - c",
            "(a + b) * c",
            "not a == b or c < d",
            "-(5) * x",
            "-5 + x",
            "a == b and (c or d)",
        ] {
            let e = Expr::parse(src).unwrap();
            assert_eq!(e.to_string(), src);
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn type_checking_catches_foreign_enum_values() {
        let vars = vec![
            StateVar {
                id: "light".into(),
                var_type: VarType::Enum(vec!["on".into(), "off".into()]),
                initial: Value::Sym("off".into()),
                span: None,
            },
            StateVar {
                id: "dir".into(),
                var_type: VarType::Enum(vec!["up".into(), "down".into()]),
                initial: Value::Sym("up".into()),
                span: None,
            },
        ];
        assert!(type_of(&Expr::parse("light == on").unwrap(), &vars).is_ok());
        assert!(type_of(&Expr::parse("light == up").unwrap(), &vars).is_err());
        assert!(type_of(&Expr::parse("light == dimmed").unwrap(), &vars).is_err());
        assert!(type_of(&Expr::parse("light < 3").unwrap(), &vars).is_err());
    }
}
