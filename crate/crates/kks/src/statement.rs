//! Player roles, the statement AST, and the truth semantics puzzles are
//! evaluated under.
//!
//! Self-reference is resolved through truth bits: every player carries a bit
//! saying whether their own statement is true. Knights force the bit to true,
//! knaves to false, spies leave it free. A statement is evaluated against the
//! bit vector, and consistency requires each player's bit to equal the actual
//! truth value of their statement. No fixed-point iteration is needed, and
//! "X is telling the truth" stays well-defined even when X is a spy.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::Puzzle;

/// One of the three player roles. There is deliberately no "unknown" variant:
/// agents must always commit to one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Knight,
    Knave,
    Spy,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Knight, Role::Knave, Role::Spy];

    pub fn name(self) -> &'static str {
        match self {
            Role::Knight => "knight",
            Role::Knave => "knave",
            Role::Spy => "spy",
        }
    }

    pub fn plural(self) -> &'static str {
        match self {
            Role::Knight => "knights",
            Role::Knave => "knaves",
            Role::Spy => "spies",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "knight" => Some(Role::Knight),
            "knave" => Some(Role::Knave),
            "spy" => Some(Role::Spy),
            _ => None,
        }
    }

    /// Whether a player's own-statement truth bit is forced by the role.
    pub fn forced_bit(self) -> Option<bool> {
        match self {
            Role::Knight => Some(true),
            Role::Knave => Some(false),
            Role::Spy => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A player name, unique within a puzzle and stable across all phases.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(String);

impl PlayerId {
    pub fn new(name: impl Into<String>) -> Self {
        PlayerId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PlayerId {
    fn from(s: &str) -> Self {
        PlayerId::new(s)
    }
}

/// Map from player to role; the predicted or ground-truth assignment.
pub type RoleAssignment = BTreeMap<PlayerId, Role>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Truthful,
    Lying,
}

impl Polarity {
    pub fn negate(self) -> Polarity {
        match self {
            Polarity::Truthful => Polarity::Lying,
            Polarity::Lying => Polarity::Truthful,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn matches(self, n: usize) -> bool {
        match self {
            Parity::Even => n.is_multiple_of(2),
            Parity::Odd => n % 2 == 1,
        }
    }
}

/// Predicate over a count of players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CountPredicate {
    Exactly(usize),
    Parity(Parity),
}

impl CountPredicate {
    pub fn matches(self, n: usize) -> bool {
        match self {
            CountPredicate::Exactly(k) => n == k,
            CountPredicate::Parity(p) => p.matches(n),
        }
    }
}

/// The set of players a counting statement ranges over.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    All,
    Players(Vec<PlayerId>),
}

/// The statement AST. The six forms are the full template inventory; meta
/// claims (`ExactlyOneOf`) take exactly two parts and do not nest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statement {
    /// "X is a knight."
    RoleClaim { subject: PlayerId, role: Role },
    /// "X is telling the truth." / "X is lying."
    TruthClaim {
        subject: PlayerId,
        polarity: Polarity,
    },
    /// "X and Y have the same role."
    SameRole { a: PlayerId, b: PlayerId },
    /// "Among <scope>, the number of <role>s is <predicate>."
    CountRole {
        scope: Scope,
        role: Role,
        predicate: CountPredicate,
    },
    /// "Among <scope>, <predicate> people are lying." Lying means the truth
    /// bit is false, not role = knave; spies who lie are counted.
    CountLiars {
        scope: Scope,
        predicate: CountPredicate,
    },
    /// "Among the following two statements, exactly one is true: ..."
    ExactlyOneOf { parts: Box<[Statement; 2]> },
}

impl Statement {
    pub fn xor(a: Statement, b: Statement) -> Statement {
        Statement::ExactlyOneOf {
            parts: Box::new([a, b]),
        }
    }

    /// AST depth; leaf claims are 1, `ExactlyOneOf` over leaves is 2.
    pub fn depth(&self) -> usize {
        match self {
            Statement::ExactlyOneOf { parts } => {
                1 + parts.iter().map(Statement::depth).max().unwrap_or(0)
            }
            _ => 1,
        }
    }

    /// All player names the statement references.
    pub fn referenced_players(&self) -> Vec<&PlayerId> {
        let mut out = Vec::new();
        self.collect_players(&mut out);
        out
    }

    fn collect_players<'a>(&'a self, out: &mut Vec<&'a PlayerId>) {
        match self {
            Statement::RoleClaim { subject, .. } | Statement::TruthClaim { subject, .. } => {
                out.push(subject)
            }
            Statement::SameRole { a, b } => {
                out.push(a);
                out.push(b);
            }
            Statement::CountRole { scope, .. } | Statement::CountLiars { scope, .. } => {
                if let Scope::Players(ps) = scope {
                    out.extend(ps.iter());
                }
            }
            Statement::ExactlyOneOf { parts } => {
                for p in parts.iter() {
                    p.collect_players(out);
                }
            }
        }
    }

    /// Checks the structural invariants against a roster: every referenced
    /// player exists, meta claims do not nest (depth at most 2), and liar
    /// counts range over explicit player sets.
    pub fn validate(&self, roster: &[PlayerId]) -> Result<()> {
        if self.depth() > 2 {
            return Err(Error::MalformedStatement(
                "meta claims must not nest".into(),
            ));
        }
        self.check_scopes()?;
        for p in self.referenced_players() {
            if !roster.contains(p) {
                return Err(Error::UnknownPlayer(p.to_string()));
            }
        }
        Ok(())
    }

    fn check_scopes(&self) -> Result<()> {
        match self {
            Statement::CountLiars {
                scope: Scope::All, ..
            } => Err(Error::MalformedStatement(
                "liar counts take an explicit player set, not `all`".into(),
            )),
            Statement::ExactlyOneOf { parts } => {
                parts[0].check_scopes()?;
                parts[1].check_scopes()
            }
            _ => Ok(()),
        }
    }

    /// True when evaluation reads only roles, never truth bits. Used by the
    /// solver to check such hints before enumerating spy bits.
    pub fn roles_only(&self) -> bool {
        match self {
            Statement::RoleClaim { .. }
            | Statement::SameRole { .. }
            | Statement::CountRole { .. } => true,
            Statement::TruthClaim { .. } | Statement::CountLiars { .. } => false,
            Statement::ExactlyOneOf { parts } => parts.iter().all(Statement::roles_only),
        }
    }
}

/// A statement from the game manager, guaranteed true in every consistent
/// world.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hint(pub Statement);

/// A candidate world: a role assignment together with the per-player truth
/// bits. Knights must carry bit true and knaves bit false; spy bits are free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    pub roles: RoleAssignment,
    pub truth_bits: BTreeMap<PlayerId, bool>,
}

impl World {
    pub fn new(roles: RoleAssignment, truth_bits: BTreeMap<PlayerId, bool>) -> Self {
        World { roles, truth_bits }
    }

    fn role(&self, p: &PlayerId) -> Result<Role> {
        self.roles
            .get(p)
            .copied()
            .ok_or_else(|| Error::UnknownPlayer(p.to_string()))
    }

    fn bit(&self, p: &PlayerId) -> Result<bool> {
        self.truth_bits
            .get(p)
            .copied()
            .ok_or_else(|| Error::UnknownPlayer(p.to_string()))
    }

    /// Role/bit coupling: knight bits true, knave bits false.
    pub fn roles_couple_bits(&self) -> bool {
        self.roles.iter().all(|(p, role)| match role.forced_bit() {
            Some(required) => self.truth_bits.get(p) == Some(&required),
            None => self.truth_bits.contains_key(p),
        })
    }
}

/// Evaluates a statement in a world. Pure and total over well-formed input;
/// referencing a player missing from the world is rejected.
pub fn evaluate(stmt: &Statement, world: &World) -> Result<bool> {
    match stmt {
        Statement::RoleClaim { subject, role } => Ok(world.role(subject)? == *role),
        Statement::TruthClaim { subject, polarity } => {
            let bit = world.bit(subject)?;
            Ok(match polarity {
                Polarity::Truthful => bit,
                Polarity::Lying => !bit,
            })
        }
        Statement::SameRole { a, b } => Ok(world.role(a)? == world.role(b)?),
        Statement::CountRole {
            scope,
            role,
            predicate,
        } => {
            let count = match scope {
                Scope::All => world.roles.values().filter(|r| **r == *role).count(),
                Scope::Players(ps) => {
                    let mut n = 0;
                    for p in ps {
                        if world.role(p)? == *role {
                            n += 1;
                        }
                    }
                    n
                }
            };
            Ok(predicate.matches(count))
        }
        Statement::CountLiars { scope, predicate } => {
            let count = match scope {
                Scope::All => world.truth_bits.values().filter(|b| !**b).count(),
                Scope::Players(ps) => {
                    let mut n = 0;
                    for p in ps {
                        if !world.bit(p)? {
                            n += 1;
                        }
                    }
                    n
                }
            };
            Ok(predicate.matches(count))
        }
        Statement::ExactlyOneOf { parts } => {
            let a = evaluate(&parts[0], world)?;
            let b = evaluate(&parts[1], world)?;
            Ok(a ^ b)
        }
    }
}

/// A world is consistent with a puzzle iff the role/bit coupling holds, each
/// player's statement evaluates to exactly their truth bit, and every hint
/// evaluates true.
pub fn is_consistent(world: &World, puzzle: &Puzzle) -> Result<bool> {
    if !world.roles_couple_bits() {
        return Ok(false);
    }
    for player in &puzzle.players {
        let stmt = puzzle
            .statements
            .get(player)
            .ok_or_else(|| Error::UnknownPlayer(player.to_string()))?;
        if evaluate(stmt, world)? != world.bit(player)? {
            return Ok(false);
        }
    }
    for hint in &puzzle.hints {
        if !evaluate(&hint.0, world)? {
            return Ok(false);
        }
    }
    Ok(true)
}
