//! Deterministic scripted agents. Given (profile, seed, context) every call
//! is reproducible, so fixed-seed games replay byte-identically.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::engine::{
    plurality, AdjustContext, DebateContext, FinalContext, GameView, SupervisorContext,
};
use crate::error::{Error, Result};
use crate::statement::{PlayerId, Role, RoleAssignment};

use super::{Agent, AgentKind, AgentSpec, DebateTurn, Proposal, ScriptedProfile, StubbornStance};

pub struct ScriptedAgent {
    spec: AgentSpec,
    profile: ScriptedProfile,
    rng: ChaCha8Rng,
}

impl ScriptedAgent {
    pub fn new(spec: AgentSpec, seed: u64) -> Result<ScriptedAgent> {
        let profile = match &spec.kind {
            AgentKind::Scripted { profile } => *profile,
            AgentKind::Remote { .. } => {
                return Err(Error::Config(format!(
                    "agent `{}` is remote, not scripted",
                    spec.name
                )))
            }
        };
        Ok(ScriptedAgent {
            spec,
            profile,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn truth(&self, game: &GameView<'_>) -> Result<RoleAssignment> {
        game.puzzle.solution.clone().ok_or_else(|| Error::Agent {
            agent: self.spec.name.clone(),
            message: "profile needs a certified puzzle".into(),
        })
    }

    fn wrong_role(truth: Role) -> Role {
        // the role after the true one, cyclically; identical across agents
        let idx = Role::ALL.iter().position(|r| *r == truth).unwrap();
        Role::ALL[(idx + 1) % 3]
    }

    fn uniform_assignment(&mut self, players: &[PlayerId]) -> RoleAssignment {
        players
            .iter()
            .map(|p| (p.clone(), *Role::ALL.choose(&mut self.rng).unwrap()))
            .collect()
    }

    fn confidence_for(&mut self, players: &[PlayerId]) -> BTreeMap<PlayerId, u8> {
        let fixed = match self.profile {
            ScriptedProfile::Oracle { noise } => {
                Some((((1.0 - noise) * 10.0).round() as u8).clamp(1, 10))
            }
            ScriptedProfile::Conformist => Some(5),
            ScriptedProfile::Stubborn { .. } => Some(10),
            ScriptedProfile::UniformRandom => None,
        };
        players
            .iter()
            .map(|p| {
                let c = fixed.unwrap_or_else(|| self.rng.gen_range(1..=10));
                (p.clone(), c)
            })
            .collect()
    }

    fn explanation(&self) -> &'static str {
        match self.profile {
            ScriptedProfile::Oracle { .. } => {
                "Checked every role assignment against all statements and hints."
            }
            ScriptedProfile::Conformist => "Following the strongest current position.",
            ScriptedProfile::Stubborn { .. } => "My original deduction stands.",
            ScriptedProfile::UniformRandom => "Best guess.",
        }
    }

    fn initial_assignment(&mut self, game: &GameView<'_>) -> Result<RoleAssignment> {
        let players = &game.puzzle.players;
        Ok(match self.profile {
            ScriptedProfile::Oracle { noise } => {
                let truth = self.truth(game)?;
                players
                    .iter()
                    .map(|p| {
                        let t = truth[p];
                        let role = if noise > 0.0 && self.rng.gen_bool(noise) {
                            // one of the two wrong roles, uniformly
                            let wrong: Vec<Role> =
                                Role::ALL.iter().copied().filter(|r| *r != t).collect();
                            *wrong.choose(&mut self.rng).unwrap()
                        } else {
                            t
                        };
                        (p.clone(), role)
                    })
                    .collect()
            }
            ScriptedProfile::Conformist => self.uniform_assignment(players),
            ScriptedProfile::Stubborn { stance } => match stance {
                StubbornStance::Wrong => {
                    let truth = self.truth(game)?;
                    players
                        .iter()
                        .map(|p| (p.clone(), Self::wrong_role(truth[p])))
                        .collect()
                }
                StubbornStance::Random => self.uniform_assignment(players),
            },
            ScriptedProfile::UniformRandom => self.uniform_assignment(players),
        })
    }

    /// Own label, with agree/disagree derived from label match.
    fn stance_turn(&self, ctx: &DebateContext<'_>, role: Role) -> DebateTurn {
        let mut agree = std::collections::BTreeSet::new();
        let mut disagree = std::collections::BTreeSet::new();
        for view in &ctx.positions {
            if view.agent == ctx.self_name {
                continue;
            }
            if view.role == role {
                agree.insert(view.agent.clone());
            } else {
                disagree.insert(view.agent.clone());
            }
        }
        let agree_reasoning = if agree.is_empty() {
            String::new()
        } else {
            "Their label matches my deduction.".into()
        };
        let disagree_reasoning = if disagree.is_empty() {
            String::new()
        } else {
            "Their label contradicts my deduction.".into()
        };
        DebateTurn {
            focus_player: ctx.focus_player.clone(),
            role,
            agree_with: agree,
            disagree_with: disagree,
            agree_reasoning,
            disagree_reasoning,
        }
    }

    fn own_label(&self, ctx: &DebateContext<'_>) -> Result<Role> {
        ctx.positions
            .iter()
            .find(|v| v.agent == ctx.self_name)
            .map(|v| v.role)
            .ok_or_else(|| Error::Agent {
                agent: self.spec.name.clone(),
                message: "own position missing from context".into(),
            })
    }
}

impl Agent for ScriptedAgent {
    fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    fn propose(&mut self, game: &GameView<'_>) -> Result<Proposal> {
        let assignment = self.initial_assignment(game)?;
        let confidence = self.confidence_for(&game.puzzle.players);
        Ok(Proposal {
            assignment,
            explanation: self.explanation().into(),
            confidence: Some(confidence),
        })
    }

    fn debate_turn(&mut self, ctx: &DebateContext<'_>) -> Result<DebateTurn> {
        let own = self.own_label(ctx)?;
        let role = match self.profile {
            ScriptedProfile::Oracle { .. } | ScriptedProfile::Stubborn { .. } => own,
            ScriptedProfile::Conformist => {
                let labels: Vec<Role> = ctx.positions.iter().map(|v| v.role).collect();
                plurality(&labels).unwrap_or(own)
            }
            ScriptedProfile::UniformRandom => *Role::ALL.choose(&mut self.rng).unwrap(),
        };
        Ok(self.stance_turn(ctx, role))
    }

    fn self_adjust(&mut self, ctx: &AdjustContext<'_>) -> Result<Proposal> {
        let players = &ctx.game.puzzle.players;
        let own = ctx
            .latest
            .iter()
            .find(|v| v.agent == ctx.self_name)
            .ok_or_else(|| Error::Agent {
                agent: self.spec.name.clone(),
                message: "own solution missing from context".into(),
            })?
            .assignment
            .clone();
        let assignment = match self.profile {
            ScriptedProfile::Oracle { .. } | ScriptedProfile::Stubborn { .. } => own,
            ScriptedProfile::Conformist => players
                .iter()
                .map(|p| {
                    let labels: Vec<Role> = ctx.latest.iter().map(|v| v.assignment[p]).collect();
                    (p.clone(), plurality(&labels).unwrap_or(own[p]))
                })
                .collect(),
            ScriptedProfile::UniformRandom => self.uniform_assignment(players),
        };
        let confidence = self.confidence_for(players);
        Ok(Proposal {
            assignment,
            explanation: self.explanation().into(),
            confidence: Some(confidence),
        })
    }

    fn final_answer(&mut self, ctx: &FinalContext<'_>) -> Result<Proposal> {
        // scripted teams reuse their last adjustment
        let assignment = ctx
            .latest_assignment(&self.spec.name)
            .ok_or_else(|| Error::Agent {
                agent: self.spec.name.clone(),
                message: "no recorded position to finalize".into(),
            })?
            .clone();
        let confidence = self.confidence_for(&ctx.game.puzzle.players);
        Ok(Proposal {
            assignment,
            explanation: self.explanation().into(),
            confidence: Some(confidence),
        })
    }

    fn decide_supervision(&mut self, ctx: &SupervisorContext<'_>) -> Result<Proposal> {
        let assignment = self.initial_assignment(&ctx.game)?;
        Ok(Proposal {
            assignment,
            explanation: self.explanation().into(),
            confidence: None,
        })
    }

    fn propose_order(&mut self, game: &GameView<'_>) -> Result<Vec<PlayerId>> {
        let mut order = game.puzzle.players.clone();
        if self.profile == ScriptedProfile::UniformRandom {
            order.shuffle(&mut self.rng);
        }
        Ok(order)
    }
}
