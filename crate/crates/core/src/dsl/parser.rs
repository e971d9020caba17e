use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::DslError;

/// Names that open a distribution literal.
const DISTRIBUTIONS: [&str; 4] = ["Range", "Uniform", "Normal", "TruncatedNormal"];

/// Statement keywords recognized as Scenic syntax outside the supported fragment.
const UNSUPPORTED_STATEMENTS: [&str; 24] = [
    "take",
    "wait",
    "terminate",
    "abort",
    "record",
    "mutate",
    "override",
    "if",
    "elif",
    "else",
    "while",
    "for",
    "param",
    "model",
    "import",
    "from",
    "monitor",
    "scenario",
    "def",
    "class",
    "simulator",
    "workspace",
    "pass",
    "return",
];

/// Output of the syntactic pass; semantic assembly happens in `super::assemble`.
#[derive(Debug, Default)]
pub struct RawProgram {
    pub objects: Vec<ObjectDecl>,
    pub behaviors: Vec<BehaviorDef>,
    pub requires: Vec<Require>,
    pub unsupported: Vec<UnsupportedConstruct>,
}

pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_dist: u32,
}

impl Parser {
    pub fn new(source: &str) -> Result<Self, DslError> {
        Ok(Parser {
            tokens: tokenize(source)?,
            pos: 0,
            next_dist: 0,
        })
    }

    pub fn program(mut self) -> Result<RawProgram, DslError> {
        let mut raw = RawProgram::default();
        loop {
            self.skip_newlines();
            let tok = self.peek().clone();
            let span = self.span();
            match tok {
                Tok::Eof => break,
                Tok::Ident(ref w) if w == "behavior" => {
                    let def = self.behavior_def()?;
                    raw.behaviors.push(def);
                }
                Tok::Ident(ref w) if w == "require" => {
                    self.advance();
                    if let Tok::Ident(ref kw) = self.peek() {
                        if kw == "always" || kw == "eventually" {
                            raw.unsupported.push(UnsupportedConstruct {
                                construct: format!("require {kw}"),
                                span,
                            });
                            self.skip_statement();
                            continue;
                        }
                    }
                    let condition = self.expr()?;
                    self.end_of_line()?;
                    raw.requires.push(Require { condition, span });
                }
                Tok::Ident(ref w) if w == "new" => {
                    let count = raw.objects.len();
                    let obj = self.object_decl(format!("_obj{count}"), false, span)?;
                    raw.objects.push(obj);
                }
                Tok::Ident(ref name) if self.peek_at(1) == &Tok::Assign => {
                    if self.peek_at(2) == &Tok::Ident("new".into()) {
                        self.advance();
                        self.advance();
                        let obj = self.object_decl(name.clone(), true, span)?;
                        raw.objects.push(obj);
                    } else {
                        raw.unsupported.push(UnsupportedConstruct {
                            construct: format!("variable assignment '{name}'"),
                            span,
                        });
                        self.skip_statement();
                    }
                }
                Tok::Ident(ref w) if UNSUPPORTED_STATEMENTS.contains(&w.as_str()) => {
                    raw.unsupported.push(UnsupportedConstruct {
                        construct: w.clone(),
                        span,
                    });
                    self.skip_statement();
                }
                other => {
                    return Err(self.syntax_at(span, format!("unexpected {} at top level", other.describe())));
                }
            }
        }
        Ok(raw)
    }

    pub fn standalone_expr(mut self) -> Result<Expr, DslError> {
        self.skip_newlines();
        let e = self.expr()?;
        self.skip_newlines();
        if self.peek() != &Tok::Eof {
            return Err(self.syntax(format!("unexpected {} after expression", self.peek().describe())));
        }
        Ok(e)
    }

    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn is_word_at(&self, n: usize, w: &str) -> bool {
        matches!(self.peek_at(n), Tok::Ident(s) if s == w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), DslError> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{w}', found {}", self.peek().describe())))
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), DslError> {
        if self.peek() == &t {
            self.advance();
            Ok(())
        } else {
            Err(self.syntax(format!("expected {}, found {}", t.describe(), self.peek().describe())))
        }
    }

    fn ident(&mut self) -> Result<String, DslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            other => Err(self.syntax(format!("expected a name, found {}", other.describe()))),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek() == &Tok::Newline {
            self.advance();
        }
    }

    fn end_of_line(&mut self) -> Result<(), DslError> {
        match self.peek() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof | Tok::Dedent => Ok(()),
            other => Err(self.syntax(format!("expected end of line, found {}", other.describe()))),
        }
    }

    /// Skip the rest of the current logical line plus any indented block it opens.
    fn skip_statement(&mut self) {
        while !matches!(self.peek(), Tok::Newline | Tok::Eof) {
            self.advance();
        }
        if self.peek() == &Tok::Newline {
            self.advance();
        }
        if self.peek() == &Tok::Indent {
            let mut depth = 0;
            loop {
                match self.advance() {
                    Tok::Indent => depth += 1,
                    Tok::Dedent => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    Tok::Eof => break,
                    _ => {}
                }
            }
        }
    }

    fn syntax(&self, message: String) -> DslError {
        self.syntax_at(self.span(), message)
    }

    fn syntax_at(&self, span: Span, message: String) -> DslError {
        DslError::Syntax {
            line: span.line,
            col: span.col,
            message,
        }
    }

    fn unsupported(&self, span: Span, construct: impl Into<String>) -> DslError {
        DslError::Unsupported {
            line: span.line,
            col: span.col,
            construct: construct.into(),
        }
    }

    // ---- behaviors -----------------------------------------------------

    fn behavior_def(&mut self) -> Result<BehaviorDef, DslError> {
        let span = self.span();
        self.expect_word("behavior")?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        if self.peek() != &Tok::RParen {
            return Err(self.unsupported(self.span(), "behavior parameters"));
        }
        self.advance();
        self.expect(Tok::Colon)?;
        let body = self.block()?;
        Ok(BehaviorDef { name, body, span })
    }

    fn block(&mut self) -> Result<Stmt, DslError> {
        self.expect(Tok::Newline)?;
        self.skip_newlines();
        self.expect(Tok::Indent)?;
        let mut stmts = Vec::new();
        loop {
            self.skip_newlines();
            match self.peek() {
                Tok::Dedent => {
                    self.advance();
                    break;
                }
                Tok::Eof => break,
                _ => stmts.push(self.statement()?),
            }
        }
        match stmts.len() {
            0 => Err(self.syntax("empty block".into())),
            1 => Ok(stmts.pop().unwrap()),
            _ => Ok(Stmt::Seq(stmts)),
        }
    }

    fn statement(&mut self) -> Result<Stmt, DslError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(w) if w == "do" => {
                self.advance();
                let behavior = self.ident()?;
                if self.peek() == &Tok::LParen {
                    self.advance();
                    if self.peek() != &Tok::RParen {
                        return Err(self.unsupported(self.span(), "behavior arguments"));
                    }
                    self.advance();
                }
                if self.peek() == &Tok::Comma {
                    return Err(self.unsupported(self.span(), "parallel do"));
                }
                if self.is_word("for") {
                    return Err(self.unsupported(self.span(), "do ... for"));
                }
                let until = if self.eat_word("until") {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.end_of_line()?;
                Ok(Stmt::Do { behavior, until, span })
            }
            Tok::Ident(w) if w == "try" => {
                self.advance();
                self.expect(Tok::Colon)?;
                let mut current = self.block()?;
                let mut clauses = 0;
                loop {
                    self.skip_newlines();
                    if self.is_word("interrupt") {
                        let clause_span = self.span();
                        self.advance();
                        self.expect_word("when")?;
                        let condition = self.expr()?;
                        self.expect(Tok::Colon)?;
                        let handler = self.block()?;
                        current = Stmt::TryInterrupt {
                            body: Box::new(current),
                            condition,
                            handler: Box::new(handler),
                            span: if clauses == 0 { span } else { clause_span },
                        };
                        clauses += 1;
                    } else if self.is_word("except") {
                        return Err(self.unsupported(self.span(), "try/except"));
                    } else {
                        break;
                    }
                }
                if clauses == 0 {
                    return Err(self.syntax_at(span, "try block without an 'interrupt when' clause".into()));
                }
                Ok(current)
            }
            Tok::Ident(name) if self.peek_at(1) == &Tok::Assign => {
                self.advance();
                self.advance();
                let value = self.expr()?;
                self.end_of_line()?;
                Ok(Stmt::Assign {
                    target: name,
                    value,
                    span,
                })
            }
            Tok::Ident(w) => {
                let construct = if w == "require" {
                    "require inside behavior".to_string()
                } else {
                    w
                };
                self.skip_statement();
                Ok(Stmt::Unsupported { construct, span })
            }
            other => Err(self.syntax(format!("unexpected {} in behavior body", other.describe()))),
        }
    }

    // ---- objects -------------------------------------------------------

    fn object_decl(&mut self, name: String, named: bool, span: Span) -> Result<ObjectDecl, DslError> {
        self.expect_word("new")?;
        let class = self.ident()?;
        let mut obj = ObjectDecl {
            name,
            named,
            class,
            specifiers: Vec::new(),
            behavior: None,
            properties: Vec::new(),
            span,
        };
        let mut first = true;
        loop {
            if matches!(self.peek(), Tok::Newline | Tok::Eof) {
                break;
            }
            if !first {
                self.expect(Tok::Comma)?;
            }
            first = false;
            self.specifier(&mut obj)?;
        }
        self.end_of_line()?;
        Ok(obj)
    }

    fn specifier(&mut self, obj: &mut ObjectDecl) -> Result<(), DslError> {
        let span = self.span();
        let word = match self.peek().clone() {
            Tok::Ident(w) => w,
            other => return Err(self.syntax(format!("expected a specifier, found {}", other.describe()))),
        };
        self.advance();
        let spec = match word.as_str() {
            "with" => {
                let prop = self.ident()?;
                if prop == "behavior" {
                    let b = self.ident()?;
                    if self.peek() == &Tok::LParen {
                        self.advance();
                        if self.peek() != &Tok::RParen {
                            return Err(self.unsupported(self.span(), "behavior arguments"));
                        }
                        self.advance();
                    }
                    if obj.behavior.is_some() {
                        return Err(DslError::Semantic {
                            line: span.line,
                            message: format!("object '{}' has two behaviors", obj.name),
                        });
                    }
                    obj.behavior = Some(b);
                } else {
                    let value = self.expr()?;
                    obj.properties.push((prop, value));
                }
                return Ok(());
            }
            "at" => Specifier::At(self.expr()?),
            "in" => Specifier::In(self.expr()?),
            "on" => Specifier::On(self.expr()?),
            "offset" => {
                if self.eat_word("by") {
                    Specifier::OffsetBy(self.expr()?)
                } else {
                    self.expect_word("along")?;
                    let direction = self.expr()?;
                    self.expect_word("by")?;
                    Specifier::OffsetAlong {
                        direction,
                        offset: self.expr()?,
                    }
                }
            }
            "beyond" => {
                let target = self.expr()?;
                self.expect_word("by")?;
                let offset = self.expr()?;
                let from = if self.eat_word("from") {
                    Some(self.expr()?)
                } else {
                    None
                };
                Specifier::Beyond { target, offset, from }
            }
            "visible" => {
                let from = if self.eat_word("from") {
                    Some(self.expr()?)
                } else {
                    None
                };
                Specifier::VisibleFrom(from)
            }
            "ahead" => {
                self.expect_word("of")?;
                let target = self.expr()?;
                let by = if self.eat_word("by") { Some(self.expr()?) } else { None };
                Specifier::AheadOf { target, by }
            }
            "behind" => {
                let target = self.expr()?;
                let by = if self.eat_word("by") { Some(self.expr()?) } else { None };
                Specifier::Behind { target, by }
            }
            "following" => {
                let field = self.expr()?;
                let from = if self.eat_word("from") {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect_word("for")?;
                Specifier::Following {
                    field,
                    from,
                    distance: self.expr()?,
                }
            }
            "facing" => {
                if self.eat_word("toward") {
                    Specifier::FacingToward(self.expr()?)
                } else if self.is_word("away") && self.is_word_at(1, "from") {
                    self.advance();
                    self.advance();
                    Specifier::FacingAwayFrom(self.expr()?)
                } else {
                    Specifier::Facing(self.expr()?)
                }
            }
            "apparently" => {
                self.expect_word("facing")?;
                let heading = self.expr()?;
                let from = if self.eat_word("from") {
                    Some(self.expr()?)
                } else {
                    None
                };
                Specifier::ApparentlyFacing { heading, from }
            }
            other => return Err(self.unsupported(span, format!("specifier '{other}'"))),
        };
        obj.specifiers.push(spec);
        Ok(())
    }

    // ---- expressions ---------------------------------------------------

    pub fn expr(&mut self) -> Result<Expr, DslError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.and_expr()?;
        while self.eat_word("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinaryOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.not_expr()?;
        while self.eat_word("and") {
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinaryOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, DslError> {
        if self.is_word("not") && !self.is_word_at(1, "visible") {
            self.advance();
            let inner = self.not_expr()?;
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(inner)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, DslError> {
        let lhs = self.spatial()?;
        let op = match self.peek() {
            Tok::Lt => Some(BinaryOp::Lt),
            Tok::Le => Some(BinaryOp::Le),
            Tok::Gt => Some(BinaryOp::Gt),
            Tok::Ge => Some(BinaryOp::Ge),
            Tok::EqEq => Some(BinaryOp::Eq),
            Tok::Ne => Some(BinaryOp::Ne),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let rhs = self.spatial()?;
            return Ok(Expr::binary(op, lhs, rhs));
        }
        if self.eat_word("in") {
            let rhs = self.spatial()?;
            return Ok(Expr::In(Box::new(lhs), Box::new(rhs)));
        }
        if self.is_word("can") && self.is_word_at(1, "see") {
            self.advance();
            self.advance();
            let rhs = self.spatial()?;
            return Ok(Expr::CanSee(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn spatial(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.additive()?;
        loop {
            if self.is_word("relative") && self.is_word_at(1, "to") {
                self.advance();
                self.advance();
                let rhs = self.additive()?;
                lhs = Expr::RelativeTo(Box::new(lhs), Box::new(rhs));
            } else if self.is_word("offset") && self.is_word_at(1, "by") {
                self.advance();
                self.advance();
                let rhs = self.additive()?;
                lhs = Expr::OffsetBy(Box::new(lhs), Box::new(rhs));
            } else if self.is_word("offset") && self.is_word_at(1, "along") {
                self.advance();
                self.advance();
                let direction = self.additive()?;
                self.expect_word("by")?;
                let offset = self.additive()?;
                lhs = Expr::OffsetAlong {
                    base: Box::new(lhs),
                    direction: Box::new(direction),
                    offset: Box::new(offset),
                };
            } else if self.is_word("visible") && self.is_word_at(1, "from") {
                self.advance();
                self.advance();
                let from = self.additive()?;
                lhs = Expr::Visible {
                    region: Box::new(lhs),
                    from: Some(Box::new(from)),
                    negated: false,
                };
            } else if self.is_word("not") && self.is_word_at(1, "visible") && self.is_word_at(2, "from") {
                self.advance();
                self.advance();
                self.advance();
                let from = self.additive()?;
                lhs = Expr::Visible {
                    region: Box::new(lhs),
                    from: Some(Box::new(from)),
                    negated: true,
                };
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.peek() == &Tok::Minus {
            self.advance();
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Number(n) => Expr::Number(-n),
                other => Expr::Unary(UnaryOp::Neg, Box::new(other)),
            });
        }
        if self.is_word("relative") && self.is_word_at(1, "heading") {
            self.advance();
            self.advance();
            self.expect_word("of")?;
            let of = Box::new(self.unary()?);
            let from = if self.eat_word("from") {
                Some(Box::new(self.unary()?))
            } else {
                None
            };
            return Ok(Expr::RelativeHeading { of, from });
        }
        if self.is_word("apparent") && self.is_word_at(1, "heading") {
            self.advance();
            self.advance();
            self.expect_word("of")?;
            let of = Box::new(self.unary()?);
            let from = if self.eat_word("from") {
                Some(Box::new(self.unary()?))
            } else {
                None
            };
            return Ok(Expr::ApparentHeading { of, from });
        }
        if self.is_word("distance") || self.is_word("angle") {
            let is_distance = self.is_word("distance");
            self.advance();
            let from = if self.eat_word("from") {
                Some(Box::new(self.unary()?))
            } else {
                None
            };
            self.expect_word("to")?;
            let to = Box::new(self.unary()?);
            return Ok(if is_distance {
                Expr::Distance { from, to }
            } else {
                Expr::Angle { from, to }
            });
        }
        if self.is_word("visible") {
            self.advance();
            let region = Box::new(self.unary()?);
            return Ok(Expr::Visible {
                region,
                from: None,
                negated: false,
            });
        }
        if self.is_word("not") && self.is_word_at(1, "visible") {
            self.advance();
            self.advance();
            let region = Box::new(self.unary()?);
            return Ok(Expr::Visible {
                region,
                from: None,
                negated: true,
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, DslError> {
        let mut e = self.primary()?;
        loop {
            if self.peek() == &Tok::Dot {
                self.advance();
                let attr = self.ident()?;
                e = Expr::Attr(Box::new(e), attr);
            } else if self.is_word("deg") {
                self.advance();
                e = Expr::Deg(Box::new(e));
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(Expr::Number(n))
            }
            Tok::Ident(w) if w == "True" => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            Tok::Ident(w) if w == "False" => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(w) if DISTRIBUTIONS.contains(&w.as_str()) && self.peek_at(1) == &Tok::LParen => {
                self.advance();
                self.distribution(&w, span)
            }
            Tok::Ident(w) => {
                if is_reserved(&w) {
                    return Err(self.syntax(format!("unexpected keyword '{w}' in expression")));
                }
                self.advance();
                if self.peek() == &Tok::LParen {
                    return Err(self.unsupported(span, format!("function call '{w}(...)'")));
                }
                Ok(Expr::Name(w))
            }
            Tok::LParen => {
                self.advance();
                let first = self.expr()?;
                if self.peek() == &Tok::Comma {
                    let mut items = vec![first];
                    while self.peek() == &Tok::Comma {
                        self.advance();
                        items.push(self.expr()?);
                    }
                    self.expect(Tok::RParen)?;
                    if items.len() > 3 {
                        return Err(self.syntax_at(span, "vectors have 2 or 3 components".into()));
                    }
                    Ok(Expr::Vector(items))
                } else {
                    self.expect(Tok::RParen)?;
                    Ok(first)
                }
            }
            other => Err(self.syntax(format!("expected an expression, found {}", other.describe()))),
        }
    }

    fn distribution(&mut self, name: &str, span: Span) -> Result<Expr, DslError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        while self.peek() != &Tok::RParen {
            let negative = if self.peek() == &Tok::Minus {
                self.advance();
                true
            } else {
                false
            };
            match self.advance() {
                Tok::Number(n) => args.push(if negative { -n } else { n }),
                other => {
                    return Err(self.syntax(format!(
                        "distribution parameters must be numeric literals, found {}",
                        other.describe()
                    )))
                }
            }
            if self.peek() == &Tok::Comma {
                self.advance();
            } else if self.peek() != &Tok::RParen {
                return Err(self.syntax(format!("expected ',' or ')', found {}", self.peek().describe())));
            }
        }
        self.advance();
        let bad = |msg: &str| DslError::Syntax {
            line: span.line,
            col: span.col,
            message: format!("{name}: {msg}"),
        };
        let kind = match name {
            "Range" => {
                if args.len() != 2 {
                    return Err(bad("expects 2 parameters"));
                }
                if args[0] > args[1] {
                    return Err(bad("lower bound exceeds upper bound"));
                }
                DistKind::Range {
                    low: args[0],
                    high: args[1],
                }
            }
            "Uniform" => {
                if args.is_empty() {
                    return Err(bad("expects at least one value"));
                }
                DistKind::Uniform(args)
            }
            "Normal" => {
                if args.len() != 2 {
                    return Err(bad("expects 2 parameters"));
                }
                if args[1] <= 0.0 {
                    return Err(bad("standard deviation must be positive"));
                }
                DistKind::Normal {
                    mean: args[0],
                    std_dev: args[1],
                }
            }
            _ => {
                if args.len() != 4 {
                    return Err(bad("expects 4 parameters"));
                }
                if args[1] <= 0.0 {
                    return Err(bad("standard deviation must be positive"));
                }
                if args[2] > args[3] {
                    return Err(bad("lower bound exceeds upper bound"));
                }
                DistKind::TruncatedNormal {
                    mean: args[0],
                    std_dev: args[1],
                    low: args[2],
                    high: args[3],
                }
            }
        };
        let id = self.next_dist;
        self.next_dist += 1;
        Ok(Expr::Dist(DistRef { id, kind }))
    }
}

fn is_reserved(w: &str) -> bool {
    matches!(
        w,
        "and"
            | "or"
            | "not"
            | "in"
            | "do"
            | "until"
            | "try"
            | "interrupt"
            | "when"
            | "behavior"
            | "new"
            | "with"
            | "by"
            | "from"
            | "for"
            | "to"
            | "of"
            | "deg"
            | "require"
    )
}
