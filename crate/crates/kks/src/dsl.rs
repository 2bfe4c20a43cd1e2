//! Canonical textual grammar for statements, plus the English rendering used
//! in prompts.
//!
//! The DSL is the storage format; natural language is derived from it and
//! never parsed back. Grammar (whitespace-insensitive, canonical printer uses
//! `", "` separators):
//!
//! ```text
//! stmt     := "role_claim" "(" name "," role ")"
//!           | "truth_claim" "(" name "," polarity ")"
//!           | "same_role" "(" name "," name ")"
//!           | "count" "(" scope "," role "," pred ")"
//!           | "liars" "(" scope "," pred ")"
//!           | "xor" "(" stmt "," stmt ")"
//! scope    := "all" | "{" name ("," name)* "}"
//! pred     := "even" | "odd" | integer          -- integer means "exactly"
//! role     := "knight" | "knave" | "spy"
//! polarity := "truthful" | "lying"
//! ```
//!
//! Examples: `same_role(Rachel, Violet)`, `count(all, knave, even)`,
//! `xor(count(all, knave, even), liars({Rachel, Violet, Olivia}, odd))`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::statement::{CountPredicate, Parity, PlayerId, Polarity, Role, Scope, Statement};

/// Prints a statement in canonical DSL form. `parse(print(s)) == s`.
pub fn print(stmt: &Statement) -> String {
    let mut out = String::new();
    write_stmt(&mut out, stmt);
    out
}

fn write_stmt(out: &mut String, stmt: &Statement) {
    match stmt {
        Statement::RoleClaim { subject, role } => {
            let _ = write!(out, "role_claim({subject}, {role})");
        }
        Statement::TruthClaim { subject, polarity } => {
            let pol = match polarity {
                Polarity::Truthful => "truthful",
                Polarity::Lying => "lying",
            };
            let _ = write!(out, "truth_claim({subject}, {pol})");
        }
        Statement::SameRole { a, b } => {
            let _ = write!(out, "same_role({a}, {b})");
        }
        Statement::CountRole {
            scope,
            role,
            predicate,
        } => {
            out.push_str("count(");
            write_scope(out, scope);
            let _ = write!(out, ", {role}, ");
            write_pred(out, predicate);
            out.push(')');
        }
        Statement::CountLiars { scope, predicate } => {
            out.push_str("liars(");
            write_scope(out, scope);
            out.push_str(", ");
            write_pred(out, predicate);
            out.push(')');
        }
        Statement::ExactlyOneOf { parts } => {
            out.push_str("xor(");
            write_stmt(out, &parts[0]);
            out.push_str(", ");
            write_stmt(out, &parts[1]);
            out.push(')');
        }
    }
}

fn write_scope(out: &mut String, scope: &Scope) {
    match scope {
        Scope::All => out.push_str("all"),
        Scope::Players(ps) => {
            out.push('{');
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(p.as_str());
            }
            out.push('}');
        }
    }
}

fn write_pred(out: &mut String, pred: &CountPredicate) {
    match pred {
        CountPredicate::Exactly(k) => {
            let _ = write!(out, "{k}");
        }
        CountPredicate::Parity(Parity::Even) => out.push_str("even"),
        CountPredicate::Parity(Parity::Odd) => out.push_str("odd"),
    }
}

/// Parses canonical DSL text into a statement.
pub fn parse(text: &str) -> Result<Statement> {
    let mut p = Parser { text, pos: 0 };
    let stmt = p.statement(0)?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("expected end of input"));
    }
    Ok(stmt)
}

/// Like [`parse`], but also rejects player names missing from `roster`.
pub fn parse_with_roster(text: &str, roster: &[PlayerId]) -> Result<Statement> {
    let stmt = parse(text)?;
    stmt.validate(roster)?;
    Ok(stmt)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, token: char) -> Result<()> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(token) {
            self.pos += token.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let end = rest
            .char_indices()
            .find(|(_, c)| !c.is_ascii_alphanumeric() && *c != '_' && *c != '-')
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if end == 0 {
            return Err(self.error("expected identifier"));
        }
        self.pos += end;
        Ok(&rest[..end])
    }

    fn statement(&mut self, depth: usize) -> Result<Statement> {
        self.skip_ws();
        let start = self.pos;
        let head = self.ident()?;
        self.eat('(')?;
        let stmt = match head {
            "role_claim" => {
                let subject = self.player()?;
                self.eat(',')?;
                let role = self.role()?;
                Statement::RoleClaim { subject, role }
            }
            "truth_claim" => {
                let subject = self.player()?;
                self.eat(',')?;
                let polarity = self.polarity()?;
                Statement::TruthClaim { subject, polarity }
            }
            "same_role" => {
                let a = self.player()?;
                self.eat(',')?;
                let b = self.player()?;
                Statement::SameRole { a, b }
            }
            "count" => {
                let scope = self.scope()?;
                self.eat(',')?;
                let role = self.role()?;
                self.eat(',')?;
                let predicate = self.predicate()?;
                Statement::CountRole {
                    scope,
                    role,
                    predicate,
                }
            }
            "liars" => {
                self.skip_ws();
                let scope_pos = self.pos;
                let scope = self.scope()?;
                if scope == Scope::All {
                    return Err(Error::Parse {
                        position: scope_pos,
                        message: "liar counts take an explicit player set, not `all`".into(),
                    });
                }
                self.eat(',')?;
                let predicate = self.predicate()?;
                Statement::CountLiars { scope, predicate }
            }
            "xor" => {
                if depth >= 1 {
                    self.pos = start;
                    return Err(self.error("xor must not nest"));
                }
                let a = self.statement(depth + 1)?;
                self.eat(',')?;
                let b = self.statement(depth + 1)?;
                Statement::xor(a, b)
            }
            other => {
                self.pos = start;
                return Err(self.error(format!(
                    "unknown statement head `{other}`; expected one of role_claim, \
                     truth_claim, same_role, count, liars, xor"
                )));
            }
        };
        self.eat(')')?;
        Ok(stmt)
    }

    fn player(&mut self) -> Result<PlayerId> {
        Ok(PlayerId::new(self.ident()?))
    }

    fn role(&mut self) -> Result<Role> {
        self.skip_ws();
        let pos = self.pos;
        let word = self.ident()?;
        Role::parse(word).ok_or_else(|| Error::Parse {
            position: pos,
            message: format!("unknown role `{word}`; expected knight, knave, or spy"),
        })
    }

    fn polarity(&mut self) -> Result<Polarity> {
        self.skip_ws();
        let pos = self.pos;
        match self.ident()? {
            "truthful" => Ok(Polarity::Truthful),
            "lying" => Ok(Polarity::Lying),
            other => Err(Error::Parse {
                position: pos,
                message: format!("unknown polarity `{other}`; expected truthful or lying"),
            }),
        }
    }

    fn scope(&mut self) -> Result<Scope> {
        self.skip_ws();
        if self.text[self.pos..].starts_with('{') {
            self.eat('{')?;
            let mut players = vec![self.player()?];
            loop {
                self.skip_ws();
                if self.text[self.pos..].starts_with(',') {
                    self.eat(',')?;
                    players.push(self.player()?);
                } else {
                    break;
                }
            }
            self.eat('}')?;
            Ok(Scope::Players(players))
        } else {
            self.skip_ws();
            let pos = self.pos;
            match self.ident()? {
                "all" => Ok(Scope::All),
                other => Err(Error::Parse {
                    position: pos,
                    message: format!("unknown scope `{other}`; expected `all` or `{{...}}`"),
                }),
            }
        }
    }

    fn predicate(&mut self) -> Result<CountPredicate> {
        self.skip_ws();
        let pos = self.pos;
        let word = self.ident()?;
        match word {
            "even" => Ok(CountPredicate::Parity(Parity::Even)),
            "odd" => Ok(CountPredicate::Parity(Parity::Odd)),
            _ => word
                .parse::<usize>()
                .map(CountPredicate::Exactly)
                .map_err(|_| Error::Parse {
                    position: pos,
                    message: format!(
                        "unknown predicate `{word}`; expected even, odd, or an integer"
                    ),
                }),
        }
    }
}

/// Renders a statement as the English sentence shown to agents. `speaker` is
/// the player making the statement (self-references become "I"); hints from
/// the game manager pass `None`.
pub fn render_natural(stmt: &Statement, speaker: Option<&PlayerId>) -> String {
    match stmt {
        Statement::RoleClaim { subject, role } => {
            if Some(subject) == speaker {
                format!("I am a {role}.")
            } else {
                format!("{subject} is a {role}.")
            }
        }
        Statement::TruthClaim { subject, polarity } => {
            let is_self = Some(subject) == speaker;
            match (is_self, polarity) {
                (true, Polarity::Truthful) => "I am telling the truth.".into(),
                (true, Polarity::Lying) => "I am lying.".into(),
                (false, Polarity::Truthful) => format!("{subject} is telling the truth."),
                (false, Polarity::Lying) => format!("{subject} is lying."),
            }
        }
        Statement::SameRole { a, b } => {
            if Some(a) == speaker {
                format!("{b} and I have the same role.")
            } else if Some(b) == speaker {
                format!("{a} and I have the same role.")
            } else {
                format!("{a} and {b} have the same role.")
            }
        }
        Statement::CountRole {
            scope,
            role,
            predicate,
        } => {
            let phrase = match predicate {
                CountPredicate::Exactly(1) => format!("there is exactly one {role}"),
                CountPredicate::Exactly(k) => format!("there are exactly {k} {}", role.plural()),
                CountPredicate::Parity(p) => {
                    format!("the number of {} is {}", role.plural(), parity_word(*p))
                }
            };
            format!("{}, {phrase}.", scope_phrase(scope, speaker))
        }
        Statement::CountLiars { scope, predicate } => {
            let phrase = match predicate {
                CountPredicate::Exactly(1) => "exactly one person is lying".to_string(),
                CountPredicate::Exactly(k) => format!("exactly {k} people are lying"),
                CountPredicate::Parity(p) => {
                    format!("the number of people who are lying is {}", parity_word(*p))
                }
            };
            format!("{}, {phrase}.", scope_phrase(scope, speaker))
        }
        Statement::ExactlyOneOf { parts } => format!(
            "Among the following two statements, exactly one is true: (1) {} (2) {}",
            render_natural(&parts[0], speaker),
            render_natural(&parts[1], speaker)
        ),
    }
}

fn parity_word(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

/// "Among all players" / "Among Violet and I" / "Among Rachel, Violet, and
/// Olivia". A speaker in the scope renders as "I" and moves last.
fn scope_phrase(scope: &Scope, speaker: Option<&PlayerId>) -> String {
    match scope {
        Scope::All => "Among all players".into(),
        Scope::Players(ps) => {
            let mut names: Vec<&str> = ps
                .iter()
                .filter(|p| Some(*p) != speaker)
                .map(PlayerId::as_str)
                .collect();
            if names.len() < ps.len() {
                names.push("I");
            }
            let list = match names.len() {
                0 => String::new(),
                1 => names[0].to_string(),
                2 => format!("{} and {}", names[0], names[1]),
                _ => {
                    let head = names[..names.len() - 1].join(", ");
                    format!("{}, and {}", head, names[names.len() - 1])
                }
            };
            format!("Among {list}")
        }
    }
}
