//! Exhaustive solver certifying puzzle solutions.
//!
//! Enumerates all 3^n role assignments; knight and knave truth bits are
//! forced, each spy contributes one free bit. A role assignment is a solution
//! iff some bit completion is consistent with every statement and hint.
//! Uniqueness is defined over roles only; spy bits may stay ambiguous.
//!
//! The enumeration runs over an index-compiled copy of the puzzle (player
//! names resolved to slots) so the inner loop does no allocation or map
//! lookups. Compiled evaluation carries the same semantics as
//! [`crate::statement::evaluate`]; the test suites hold the two together with
//! a naive recursive oracle.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::generator::Puzzle;
use crate::statement::{CountPredicate, Role, RoleAssignment, Scope, Statement};

/// Hard cap on player count; 3^n * 2^n explodes past this.
pub const DEFAULT_PLAYER_CAP: usize = 12;

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// All role assignments admitting at least one consistent bit completion,
    /// sorted by role tuple in player-name order.
    pub solutions: Vec<RoleAssignment>,
    /// Number of fully completed worlds tested for consistency.
    pub worlds_checked: u64,
    pub elapsed: Duration,
}

pub fn solve(puzzle: &Puzzle) -> Result<SolveResult> {
    solve_with_cap(puzzle, DEFAULT_PLAYER_CAP)
}

/// A statement with player names resolved to slot indices.
enum CompiledStatement {
    RoleClaim {
        subject: usize,
        role: Role,
    },
    TruthClaim {
        subject: usize,
        lying: bool,
    },
    SameRole {
        a: usize,
        b: usize,
    },
    /// `scope` of `None` means all players.
    CountRole {
        scope: Option<Vec<usize>>,
        role: Role,
        predicate: CountPredicate,
    },
    CountLiars {
        scope: Option<Vec<usize>>,
        predicate: CountPredicate,
    },
    Xor(Box<CompiledStatement>, Box<CompiledStatement>),
}

impl CompiledStatement {
    fn compile(stmt: &Statement, index: &BTreeMap<&str, usize>) -> Result<CompiledStatement> {
        let resolve = |p: &crate::statement::PlayerId| -> Result<usize> {
            index
                .get(p.as_str())
                .copied()
                .ok_or_else(|| Error::UnknownPlayer(p.to_string()))
        };
        let resolve_scope = |scope: &Scope| -> Result<Option<Vec<usize>>> {
            match scope {
                Scope::All => Ok(None),
                Scope::Players(ps) => Ok(Some(
                    ps.iter().map(resolve).collect::<Result<Vec<usize>>>()?,
                )),
            }
        };
        Ok(match stmt {
            Statement::RoleClaim { subject, role } => CompiledStatement::RoleClaim {
                subject: resolve(subject)?,
                role: *role,
            },
            Statement::TruthClaim { subject, polarity } => CompiledStatement::TruthClaim {
                subject: resolve(subject)?,
                lying: *polarity == crate::statement::Polarity::Lying,
            },
            Statement::SameRole { a, b } => CompiledStatement::SameRole {
                a: resolve(a)?,
                b: resolve(b)?,
            },
            Statement::CountRole {
                scope,
                role,
                predicate,
            } => CompiledStatement::CountRole {
                scope: resolve_scope(scope)?,
                role: *role,
                predicate: *predicate,
            },
            Statement::CountLiars { scope, predicate } => CompiledStatement::CountLiars {
                scope: resolve_scope(scope)?,
                predicate: *predicate,
            },
            Statement::ExactlyOneOf { parts } => CompiledStatement::Xor(
                Box::new(CompiledStatement::compile(&parts[0], index)?),
                Box::new(CompiledStatement::compile(&parts[1], index)?),
            ),
        })
    }

    fn eval(&self, roles: &[Role], bits: &[bool]) -> bool {
        match self {
            CompiledStatement::RoleClaim { subject, role } => roles[*subject] == *role,
            CompiledStatement::TruthClaim { subject, lying } => bits[*subject] != *lying,
            CompiledStatement::SameRole { a, b } => roles[*a] == roles[*b],
            CompiledStatement::CountRole {
                scope,
                role,
                predicate,
            } => {
                let count = match scope {
                    None => roles.iter().filter(|r| **r == *role).count(),
                    Some(ps) => ps.iter().filter(|i| roles[**i] == *role).count(),
                };
                predicate.matches(count)
            }
            CompiledStatement::CountLiars { scope, predicate } => {
                let count = match scope {
                    None => bits.iter().filter(|b| !**b).count(),
                    Some(ps) => ps.iter().filter(|i| !bits[**i]).count(),
                };
                predicate.matches(count)
            }
            CompiledStatement::Xor(a, b) => a.eval(roles, bits) ^ b.eval(roles, bits),
        }
    }

    fn roles_only(&self) -> bool {
        match self {
            CompiledStatement::RoleClaim { .. }
            | CompiledStatement::SameRole { .. }
            | CompiledStatement::CountRole { .. } => true,
            CompiledStatement::TruthClaim { .. } | CompiledStatement::CountLiars { .. } => false,
            CompiledStatement::Xor(a, b) => a.roles_only() && b.roles_only(),
        }
    }
}

pub fn solve_with_cap(puzzle: &Puzzle, cap: usize) -> Result<SolveResult> {
    solve_bounded(puzzle, cap, usize::MAX)
}

/// Like [`solve_with_cap`] but stops once `limit` solutions are found.
/// Uniqueness checks only need two.
fn solve_bounded(puzzle: &Puzzle, cap: usize, limit: usize) -> Result<SolveResult> {
    let started = Instant::now();
    let n = puzzle.players.len();
    if n == 0 {
        return Err(Error::EmptyInput("solve"));
    }
    if n > cap {
        return Err(Error::PlayerCap { players: n, cap });
    }
    puzzle.validate()?;

    let index: BTreeMap<&str, usize> = puzzle
        .players
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let statements: Vec<CompiledStatement> = puzzle
        .players
        .iter()
        .map(|p| CompiledStatement::compile(&puzzle.statements[p], &index))
        .collect::<Result<_>>()?;
    let hints: Vec<CompiledStatement> = puzzle
        .hints
        .iter()
        .map(|h| CompiledStatement::compile(&h.0, &index))
        .collect::<Result<_>>()?;
    // hints readable from roles alone prune an assignment before bits exist
    let (role_hints, bit_hints): (Vec<&CompiledStatement>, Vec<&CompiledStatement>) =
        hints.iter().partition(|h| h.roles_only());

    let mut solutions: Vec<Vec<Role>> = Vec::new();
    let mut worlds_checked = 0u64;
    let mut counter = vec![0u8; n];
    let mut roles = vec![Role::Knight; n];
    let mut bits = vec![true; n];
    let mut spies = Vec::with_capacity(n);
    'assignments: loop {
        for i in 0..n {
            roles[i] = Role::ALL[counter[i] as usize];
        }

        if role_hints.iter().all(|h| h.eval(&roles, &bits)) {
            spies.clear();
            for i in 0..n {
                match roles[i].forced_bit() {
                    Some(forced) => bits[i] = forced,
                    None => spies.push(i),
                }
            }
            'completions: for pattern in 0..(1u32 << spies.len()) {
                for (j, spy) in spies.iter().enumerate() {
                    bits[*spy] = pattern >> j & 1 == 1;
                }
                worlds_checked += 1;
                for (i, stmt) in statements.iter().enumerate() {
                    if stmt.eval(&roles, &bits) != bits[i] {
                        continue 'completions;
                    }
                }
                if bit_hints.iter().all(|h| h.eval(&roles, &bits)) {
                    solutions.push(roles.clone());
                    break 'completions;
                }
            }
            if solutions.len() >= limit {
                break 'assignments;
            }
        }

        // advance the base-3 counter
        let mut i = 0;
        loop {
            if i == n {
                break 'assignments;
            }
            counter[i] += 1;
            if counter[i] < 3 {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
    }

    let mut solutions: Vec<RoleAssignment> = solutions
        .into_iter()
        .map(|roles| {
            puzzle
                .players
                .iter()
                .cloned()
                .zip(roles)
                .collect::<RoleAssignment>()
        })
        .collect();
    solutions.sort();
    Ok(SolveResult {
        solutions,
        worlds_checked,
        elapsed: started.elapsed(),
    })
}

pub fn has_unique_solution(puzzle: &Puzzle) -> Result<bool> {
    Ok(solve_bounded(puzzle, DEFAULT_PLAYER_CAP, 2)?
        .solutions
        .len()
        == 1)
}

/// Solves and returns a copy of the puzzle carrying its certified solution.
pub fn certify(puzzle: &Puzzle) -> Result<Puzzle> {
    let result = solve_bounded(puzzle, DEFAULT_PLAYER_CAP, 2)?;
    if result.solutions.len() != 1 {
        return Err(Error::NotUnique {
            count: result.solutions.len(),
        });
    }
    let mut certified = puzzle.clone();
    certified.solution = Some(result.solutions.into_iter().next().unwrap());
    Ok(certified)
}
