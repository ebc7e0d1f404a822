use crate::diag::{Diagnostic, Location, SourceSpan};
use crate::expr::{Action, BinOp, Expr, Value};
use crate::model::{
    Arc, ArcKind, Endpoint, EventDef, Machine, Model, ModelBuilder, Stage, StageKind, StateVar,
    VarType,
};

use super::lexer::{lex, lex_line, Line, Tok, Token};

type PResult<T> = Result<T, Diagnostic>;

/// Parses `.tm` source. `file` is only used in spans.
pub fn parse_source(text: &str, file: &str) -> Result<Model, Vec<Diagnostic>> {
    let (lines, mut diags) = lex(text, file);
    let mut p = Parser {
        file,
        builder: ModelBuilder::new(),
        stack: Vec::new(),
        machine_count: 0,
        model_seen: false,
    };
    for line in &lines {
        if let Err(d) = p.statement(line) {
            diags.push(d);
        }
    }
    if let Some(Some((id, span))) = p.stack.last() {
        diags.push(Diagnostic::error(
            "unbalanced-brace",
            format!("machine `{id}` is never closed"),
            Location::Span(span.clone()),
        ));
    } else if !p.stack.is_empty() {
        diags.push(Diagnostic::error(
            "unbalanced-brace",
            "a machine block is never closed",
            Location::Span(SourceSpan::new(file, 1, 1, 1, 1)),
        ));
    }
    if p.machine_count == 0 && diags.is_empty() {
        diags.push(Diagnostic::error(
            "no-root-machine",
            "source declares no machine",
            Location::Span(SourceSpan::new(file, 1, 1, 1, 1)),
        ));
    }
    if !diags.is_empty() {
        diags.sort_by_key(|d| match &d.location {
            Location::Span(s) => (s.start_line, s.start_col),
            Location::Element(_) => (u32::MAX, 0),
        });
        return Err(diags);
    }
    p.builder.build()
}

/// Parses a standalone expression.
pub fn parse_expr(text: &str) -> Result<Expr, String> {
    let tokens = lex_line(text, 1).map_err(|(_, m)| m)?;
    let mut c = Cursor::new(&tokens, "<expr>");
    let e = c.expr().map_err(|d| d.message)?;
    if let Some(t) = c.peek() {
        return Err(format!("unexpected {} after expression", t.describe()));
    }
    Ok(e)
}

struct Parser<'a> {
    file: &'a str,
    builder: ModelBuilder,
    /// Open machine blocks; `None` marks a block whose header failed to parse.
    stack: Vec<Option<(String, SourceSpan)>>,
    machine_count: usize,
    model_seen: bool,
}

impl<'a> Parser<'a> {
    fn current_machine(&self) -> Option<&str> {
        self.stack
            .iter()
            .rev()
            .flatten()
            .next()
            .map(|(id, _)| id.as_str())
    }

    fn statement(&mut self, line: &Line) -> PResult<()> {
        let mut c = Cursor::new(&line.tokens, self.file);
        let head = c.next().unwrap();
        let keyword = match &head.tok {
            Tok::Ident(k) => k.clone(),
            Tok::Punct("}") => {
                c.end()?;
                if self.stack.pop().is_none() {
                    return Err(c.error_at(
                        head,
                        "unbalanced-brace",
                        "`}` without an open machine",
                    ));
                }
                return Ok(());
            }
            _ => {
                return Err(c.error_at(
                    head,
                    "syntax-error",
                    format!("expected a declaration, found {}", head.describe()),
                ))
            }
        };
        let span = c.line_span();
        match keyword.as_str() {
            "model" => {
                let name = c.ident("model name")?;
                c.end()?;
                if self.model_seen || !self.stack.is_empty() {
                    return Err(c.error_at(
                        head,
                        "syntax-error",
                        "`model` must appear once, at top level",
                    ));
                }
                self.model_seen = true;
                self.builder.name(&name);
            }
            "machine" => {
                let result = self.machine(&mut c, span.clone());
                if line.tokens.last().is_some_and(|t| t.is_punct("{")) {
                    // keep braces balanced even when the header is malformed
                    self.stack
                        .push(result.as_ref().ok().map(|id| (id.clone(), span)));
                }
                result?;
            }
            "stage" => {
                let kind_tok = c.next_or("stage kind")?;
                let kind = match &kind_tok.tok {
                    Tok::Ident(k) => k
                        .parse::<StageKind>()
                        .map_err(|e| c.error_at(kind_tok, "unknown-stage-kind", e))?,
                    _ => return Err(c.unexpected(kind_tok, "stage kind")),
                };
                let id = c.ident("stage id")?;
                let label = c.optional_str();
                c.end()?;
                let Some(machine) = self.current_machine() else {
                    return Err(c.error_at(
                        head,
                        "stage-outside-machine",
                        "stages must be declared inside a machine",
                    ));
                };
                let machine = machine.to_string();
                self.builder.add_stage(Stage {
                    id,
                    kind,
                    machine,
                    label,
                    span: Some(span),
                });
            }
            "flow" => {
                let thing = c.ident("thing name")?;
                let source = c.endpoint()?;
                c.expect_punct("->")?;
                let target = c.endpoint()?;
                let id = self.arc_id(&mut c)?;
                c.end()?;
                self.builder.add_arc(Arc {
                    id,
                    kind: ArcKind::Flow,
                    source,
                    target,
                    thing: Some(thing),
                    guard: None,
                    actions: Vec::new(),
                    span: Some(span),
                });
            }
            "trigger" => {
                let source = c.endpoint()?;
                c.expect_punct("->")?;
                let target = c.endpoint()?;
                let id = self.arc_id(&mut c)?;
                let guard = if c.eat_word("if") {
                    Some(c.expr()?)
                } else {
                    None
                };
                let mut actions = Vec::new();
                if c.eat_word("do") {
                    loop {
                        let var = c.ident("variable")?;
                        c.expect_punct(":=")?;
                        let value = c.expr()?;
                        actions.push(Action { var, value });
                        if !c.eat_punct(";") {
                            break;
                        }
                    }
                }
                c.end()?;
                self.builder.add_arc(Arc {
                    id,
                    kind: ArcKind::Trigger,
                    source,
                    target,
                    thing: None,
                    guard,
                    actions,
                    span: Some(span),
                });
            }
            "var" => {
                let id = c.ident("variable name")?;
                c.expect_punct(":")?;
                let ty_tok = c.next_or("variable type")?;
                let var_type = if ty_tok.is_word("number") {
                    VarType::Number
                } else if ty_tok.is_word("enum") {
                    c.expect_punct("(")?;
                    let mut values = vec![c.ident("enum value")?];
                    while c.eat_punct(",") {
                        values.push(c.ident("enum value")?);
                    }
                    c.expect_punct(")")?;
                    VarType::Enum(values)
                } else {
                    return Err(c.unexpected(ty_tok, "`number` or `enum(...)`"));
                };
                c.expect_punct("=")?;
                let initial = match &var_type {
                    VarType::Number => {
                        let neg = c.eat_punct("-");
                        let n = c.int("initial value")?;
                        Value::Num(if neg { -n } else { n })
                    }
                    VarType::Enum(_) => Value::Sym(c.ident("initial value")?),
                };
                c.end()?;
                self.builder.add_variable(StateVar {
                    id,
                    var_type,
                    initial,
                    span: Some(span),
                });
            }
            "event" => {
                let id = c.ident("event id")?;
                let name = c.optional_str().ok_or_else(|| {
                    c.error_here("syntax-error", "expected the event name as a string")
                })?;
                if !c.eat_word("region") {
                    return Err(c.error_here("syntax-error", "expected `region`"));
                }
                c.expect_punct("{")?;
                let mut region = Vec::new();
                if !c.eat_punct("}") {
                    loop {
                        region.push(c.ident("region element")?);
                        if c.eat_punct("}") {
                            break;
                        }
                        c.expect_punct(",")?;
                    }
                }
                let time = match c.peek() {
                    Some(t) if t.is_word("time") => {
                        let t = c.next().unwrap();
                        match c.peek().map(|x| x.tok.clone()) {
                            Some(Tok::Str(s)) => {
                                c.next();
                                c.end()?;
                                Some(s)
                            }
                            Some(_) => {
                                // unquoted annotation: take the rest of the line verbatim
                                let rest: String =
                                    line.text.chars().skip(t.end_col as usize).collect();
                                let rest = rest.split('#').next().unwrap_or("").trim().to_string();
                                Some(rest)
                            }
                            None => {
                                return Err(
                                    c.error_here("syntax-error", "expected a time annotation")
                                )
                            }
                        }
                    }
                    _ => {
                        c.end()?;
                        None
                    }
                };
                self.builder.add_event(EventDef {
                    id,
                    name,
                    region,
                    time,
                    span: Some(span),
                });
            }
            other => {
                return Err(c.error_at(
                    head,
                    "syntax-error",
                    format!("unknown declaration `{other}`"),
                ))
            }
        }
        Ok(())
    }

    fn machine(&mut self, c: &mut Cursor, span: SourceSpan) -> PResult<String> {
        let id = c.ident("machine id")?;
        let name = c.optional_str().unwrap_or_else(|| id.clone());
        let mut is_actor = false;
        let mut use_case = None;
        loop {
            if c.eat_word("actor") {
                is_actor = true;
            } else if c.eat_word("usecase") {
                use_case = Some(c.optional_str().ok_or_else(|| {
                    c.error_here("syntax-error", "expected the use-case name as a string")
                })?);
            } else {
                break;
            }
        }
        c.expect_punct("{")?;
        c.end()?;
        self.machine_count += 1;
        self.builder.add_machine(Machine {
            id: id.clone(),
            name,
            parent: self.current_machine().map(str::to_string),
            is_actor,
            use_case,
            span: Some(span),
        });
        Ok(id)
    }

    fn arc_id(&mut self, c: &mut Cursor) -> PResult<String> {
        if c.eat_word("as") {
            c.ident("arc id")
        } else {
            Ok(String::new())
        }
    }
}

pub(crate) struct Cursor<'t> {
    tokens: &'t [Token],
    pos: usize,
    file: &'t str,
}

impl<'t> Cursor<'t> {
    fn new(tokens: &'t [Token], file: &'t str) -> Self {
        Cursor {
            tokens,
            pos: 0,
            file,
        }
    }

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn span_of(&self, t: &Token) -> SourceSpan {
        SourceSpan::new(self.file, t.line, t.col, t.line, t.end_col)
    }

    fn line_span(&self) -> SourceSpan {
        let first = &self.tokens[0];
        let last = self.tokens.last().unwrap();
        SourceSpan::new(self.file, first.line, first.col, last.line, last.end_col)
    }

    fn error_at(&self, t: &Token, code: &str, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(code, msg, Location::Span(self.span_of(t)))
    }

    fn error_here(&self, code: &str, msg: impl Into<String>) -> Diagnostic {
        match self.peek().or(self.tokens.last()) {
            Some(t) => self.error_at(t, code, msg),
            None => Diagnostic::error(
                code,
                msg,
                Location::Span(SourceSpan::new(self.file, 1, 1, 1, 1)),
            ),
        }
    }

    fn unexpected(&self, t: &Token, wanted: &str) -> Diagnostic {
        self.error_at(
            t,
            "syntax-error",
            format!("expected {wanted}, found {}", t.describe()),
        )
    }

    fn next_or(&mut self, wanted: &str) -> PResult<&'t Token> {
        match self.next() {
            Some(t) => Ok(t),
            None => Err(self.error_here(
                "syntax-error",
                format!("expected {wanted} before end of line"),
            )),
        }
    }

    fn ident(&mut self, wanted: &str) -> PResult<String> {
        let t = self.next_or(wanted)?;
        match &t.tok {
            Tok::Ident(s) => Ok(s.clone()),
            _ => Err(self.unexpected(t, wanted)),
        }
    }

    fn int(&mut self, wanted: &str) -> PResult<i64> {
        let t = self.next_or(wanted)?;
        match &t.tok {
            Tok::Int(n) => i64::try_from(*n)
                .map_err(|_| self.error_at(t, "syntax-error", "number out of range")),
            _ => Err(self.unexpected(t, wanted)),
        }
    }

    fn optional_str(&mut self) -> Option<String> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Some(s.clone())
            }
            _ => None,
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_word(w)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        let t = self.next_or(&format!("`{p}`"))?;
        if t.is_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(t, &format!("`{p}`")))
        }
    }

    fn end(&mut self) -> PResult<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error_at(
                t,
                "syntax-error",
                format!("unexpected {} at end of declaration", t.describe()),
            )),
        }
    }

    fn endpoint(&mut self) -> PResult<Endpoint> {
        if self.eat_punct("@") {
            Ok(Endpoint::Machine(self.ident("machine id")?))
        } else {
            Ok(Endpoint::Stage(self.ident("stage id")?))
        }
    }

    // expression grammar, lowest precedence first

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_word("or") {
            lhs = Expr::binary(BinOp::Or, lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_word("and") {
            lhs = Expr::binary(BinOp::And, lhs, self.not_expr()?);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_word("not") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek().map(|t| &t.tok) {
            Some(Tok::Punct("<")) => BinOp::Lt,
            Some(Tok::Punct("<=")) => BinOp::Le,
            Some(Tok::Punct("==")) => BinOp::Eq,
            Some(Tok::Punct("!=")) => BinOp::Ne,
            Some(Tok::Punct(">=")) => BinOp::Ge,
            Some(Tok::Punct(">")) => BinOp::Gt,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.add_expr()?;
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = if self.eat_punct("+") {
                BinOp::Add
            } else if self.eat_punct("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::binary(op, lhs, self.mul_expr()?);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.eat_punct("*") {
            lhs = Expr::binary(BinOp::Mul, lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            if let Some(Tok::Int(n)) = self.peek().map(|t| &t.tok) {
                let n = *n;
                let t = self.next().unwrap();
                let v = i64::try_from(n)
                    .map(|v| -v)
                    .or_else(|_| {
                        if n == i64::MIN.unsigned_abs() {
                            Ok(i64::MIN)
                        } else {
                            Err(())
                        }
                    })
                    .map_err(|_| self.error_at(t, "syntax-error", "number out of range"))?;
                return Ok(Expr::Num(v));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.next_or("an expression")?;
        match &t.tok {
            Tok::Int(n) => i64::try_from(*n)
                .map(Expr::Num)
                .map_err(|_| self.error_at(t, "syntax-error", "number out of range")),
            Tok::Ident(w) if w == "now" => {
                self.expect_punct("(")?;
                self.expect_punct(")")?;
                Ok(Expr::Now)
            }
            Tok::Ident(w) if matches!(w.as_str(), "and" | "or" | "not" | "do" | "if") => {
                Err(self.unexpected(t, "an expression"))
            }
            Tok::Ident(w) => Ok(Expr::Name(w.clone())),
            Tok::Punct("(") => {
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => Err(self.unexpected(t, "an expression")),
        }
    }
}
