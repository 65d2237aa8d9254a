use super::{Comparator, Condition, Rule, RuleError, RuleSet};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Number { raw: String, value: f64 },
    Colon,
    Le,
    Ge,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> RuleError {
    RuleError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Spanned>, RuleError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! adv {
        ($n:expr) => {{
            let n = $n;
            i += n;
            col += n;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => adv!(1),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            ':' => {
                out.push(Spanned { tok: Tok::Colon, line: tl, column: tc });
                adv!(1);
            }
            '<' | '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    let tok = if c == '<' { Tok::Le } else { Tok::Ge };
                    out.push(Spanned { tok, line: tl, column: tc });
                    adv!(2);
                } else {
                    return Err(syntax(
                        tl,
                        tc,
                        format!("comparator '{c}' is not supported; use <= or >="),
                    ));
                }
            }
            '"' => {
                let mut s = String::new();
                adv!(1);
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(syntax(tl, tc, "unterminated quoted name")),
                        Some('"') => {
                            adv!(1);
                            break;
                        }
                        Some('\\') => match chars.get(i + 1) {
                            Some(e @ ('"' | '\\')) => {
                                s.push(*e);
                                adv!(2);
                            }
                            _ => return Err(syntax(line, col, "invalid escape; only \\\" and \\\\ are allowed")),
                        },
                        Some(&ch) => {
                            s.push(ch);
                            adv!(1);
                        }
                    }
                }
                if s.trim().is_empty() {
                    return Err(syntax(tl, tc, "empty quoted name"));
                }
                out.push(Spanned { tok: Tok::Quoted(s), line: tl, column: tc });
            }
            c if c.is_ascii_digit() || matches!(c, '.' | '+' | '-') => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len()
                    && (chars[j].is_ascii_digit()
                        || chars[j] == '.'
                        || ((chars[j] == 'e' || chars[j] == 'E')
                            && chars.get(j + 1).is_some_and(|n| n.is_ascii_digit() || *n == '-' || *n == '+'))
                        || ((chars[j] == '-' || chars[j] == '+') && matches!(chars[j - 1], 'e' | 'E')))
                {
                    j += 1;
                }
                let raw: String = chars[start..j].iter().collect();
                // A name glued to the number (e.g. `C-reactive`) needs quotes.
                if chars.get(j).is_some_and(|n| n.is_alphanumeric() || *n == '_' || *n == '-') {
                    return Err(syntax(
                        tl,
                        tc,
                        "malformed number; names containing hyphens or spaces must be quoted",
                    ));
                }
                let value: f64 = raw
                    .parse()
                    .map_err(|_| syntax(tl, tc, format!("malformed number {raw:?}")))?;
                out.push(Spanned { tok: Tok::Number { raw, value }, line: tl, column: tc });
                adv!(j - start);
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if chars.get(j) == Some(&'-') {
                    return Err(syntax(tl, tc, "names containing hyphens must be quoted"));
                }
                let w: String = chars[start..j].iter().collect();
                out.push(Spanned { tok: Tok::Word(w), line: tl, column: tc });
                adv!(j - start);
            }
            other => return Err(syntax(tl, tc, format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

fn is_kw(tok: &Tok, kw: &str) -> bool {
    matches!(tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
}

fn is_any_kw(w: &str) -> bool {
    ["RULE", "IF", "AND", "THEN", "DEFAULT"]
        .iter()
        .any(|k| k.eq_ignore_ascii_case(w))
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or(self.end)
    }

    fn err(&self, msg: impl Into<String>) -> RuleError {
        let (l, c) = self.here();
        syntax(l, c, msg)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), RuleError> {
        match self.peek() {
            Some(t) if is_kw(&t.tok, kw) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {kw}"))),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, RuleError> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Word(w)) if !is_any_kw(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            Some(Tok::Quoted(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn rule_id(&mut self) -> Result<String, RuleError> {
        if let Some(Tok::Number { raw, .. }) = self.peek().map(|t| &t.tok) {
            if raw.chars().all(|c| c.is_ascii_digit()) {
                let raw = raw.clone();
                self.pos += 1;
                return Ok(raw);
            }
        }
        self.name("rule id")
    }

    fn condition(&mut self) -> Result<Condition, RuleError> {
        let feature = self.name("feature name")?;
        let comparator = match self.peek().map(|t| &t.tok) {
            Some(Tok::Le) => Comparator::LessOrEqual,
            Some(Tok::Ge) => Comparator::GreaterOrEqual,
            _ => return Err(self.err("expected <= or >=")),
        };
        self.pos += 1;
        let threshold = match self.peek().map(|t| &t.tok) {
            Some(Tok::Number { value, .. }) if value.is_finite() => *value,
            _ => return Err(self.err("expected a finite number")),
        };
        self.pos += 1;
        Ok(Condition {
            feature,
            comparator,
            threshold,
        })
    }

    fn rule(&mut self) -> Result<Rule, RuleError> {
        let id = self.rule_id()?;
        match self.next() {
            Some(Spanned { tok: Tok::Colon, .. }) => {}
            _ => {
                self.pos -= 1;
                return Err(self.err("expected ':' after rule id"));
            }
        }
        self.expect_kw("IF")?;
        let mut conditions = vec![self.condition()?];
        loop {
            match self.peek() {
                Some(t) if is_kw(&t.tok, "AND") => {
                    self.pos += 1;
                    conditions.push(self.condition()?);
                }
                Some(t) if is_kw(&t.tok, "THEN") => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.err("expected AND or THEN")),
            }
        }
        let class = self.name("class label")?;
        Ok(Rule {
            id,
            conditions,
            class,
        })
    }
}

/// Parse rule-DSL text into a validated [`RuleSet`].
pub fn parse_rules(source: &str) -> Result<RuleSet, RuleError> {
    let toks = lex(source)?;
    let end = {
        let lines = source.split('\n').count();
        let last = source.rsplit('\n').next().unwrap_or("");
        (lines, last.chars().count() + 1)
    };
    let mut p = Parser { toks, pos: 0, end };
    let mut rules: Vec<(Rule, usize)> = Vec::new();
    let mut default: Option<String> = None;

    while let Some(t) = p.peek().cloned() {
        if is_kw(&t.tok, "RULE") {
            p.pos += 1;
            let rule = p.rule()?;
            if rules.iter().any(|(r, _)| r.id == rule.id) {
                return Err(RuleError::DuplicateRuleId {
                    id: rule.id,
                    line: t.line,
                });
            }
            rules.push((rule, t.line));
        } else if is_kw(&t.tok, "DEFAULT") {
            if default.is_some() {
                return Err(syntax(t.line, t.column, "more than one DEFAULT"));
            }
            p.pos += 1;
            default = Some(p.name("default class label")?);
        } else {
            return Err(syntax(t.line, t.column, "expected RULE or DEFAULT"));
        }
    }

    let default = default.ok_or(RuleError::MissingDefault)?;
    RuleSet::new(rules.into_iter().map(|(r, _)| r).collect(), default)
}
