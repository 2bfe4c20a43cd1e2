//! Uniform agent interface over scripted behavior profiles and remote
//! chat-endpoint models, plus the rationality judge client.

pub mod judge;
pub mod remote;
pub mod scripted;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::{AdjustContext, DebateContext, FinalContext, GameView, SupervisorContext};
use crate::error::{Error, Result};
use crate::statement::{PlayerId, Role, RoleAssignment};

pub use judge::{JudgeClient, JudgeContext, SoundnessRating};
pub use remote::{ChatClient, ChatMessage, RemoteAgent, RemoteSettings};
pub use scripted::ScriptedAgent;

/// High/Medium/Low tier labels for performance and confidence. Tiering is
/// operator-declared metadata used for team composition and per-tier
/// features; nothing assigns tiers automatically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    High,
    Medium,
    Low,
}

impl Tier {
    pub fn parse(s: &str) -> Option<Tier> {
        match s {
            "high" => Some(Tier::High),
            "medium" => Some(Tier::Medium),
            "low" => Some(Tier::Low),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::High => "high",
            Tier::Medium => "medium",
            Tier::Low => "low",
        }
    }
}

/// Initial stance of a stubborn agent (it never revises afterwards).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StubbornStance {
    /// Deterministically wrong on every player (the role after the true one,
    /// cyclically). Two such agents always hold identical labels.
    Wrong,
    /// A seeded random initial assignment.
    Random,
}

/// Deterministic behavior profiles standing in for model teams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "profile")]
pub enum ScriptedProfile {
    /// Starts from the certified solution with independent per-player
    /// probability `noise` of flipping to a wrong role, then holds those
    /// beliefs for the rest of the game.
    Oracle { noise: f64 },
    /// Adopts the current plurality label; keeps its own on ties.
    Conformist,
    /// Never revises its initial assignment.
    Stubborn { stance: StubbornStance },
    /// Draws roles uniformly at random on every call.
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum AgentKind {
    Scripted {
        #[serde(flatten)]
        profile: ScriptedProfile,
    },
    Remote {
        model: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: AgentKind,
    pub perf_tier: Tier,
    pub conf_tier: Tier,
}

impl AgentSpec {
    pub fn scripted(name: impl Into<String>, profile: ScriptedProfile) -> AgentSpec {
        AgentSpec {
            name: name.into(),
            kind: AgentKind::Scripted { profile },
            perf_tier: Tier::Medium,
            conf_tier: Tier::Medium,
        }
    }

    pub fn remote(name: impl Into<String>, model: impl Into<String>) -> AgentSpec {
        AgentSpec {
            name: name.into(),
            kind: AgentKind::Remote {
                model: model.into(),
            },
            perf_tier: Tier::Medium,
            conf_tier: Tier::Medium,
        }
    }

    pub fn with_tiers(mut self, perf: Tier, conf: Tier) -> AgentSpec {
        self.perf_tier = perf;
        self.conf_tier = conf;
        self
    }

    /// Parses a compact spec like `oracle(0.1)@high/medium`, `conformist`,
    /// `stubborn(wrong)`, `uniform@low`, or `remote(gpt-x)@high`. The name is
    /// assigned by the team builder.
    pub fn parse(text: &str) -> Result<AgentSpec> {
        let bad = |msg: &str| Error::Config(format!("bad agent spec `{text}`: {msg}"));
        let (kind_text, tier_text) = match text.split_once('@') {
            Some((k, t)) => (k.trim(), Some(t.trim())),
            None => (text.trim(), None),
        };
        let (head, arg) = match kind_text.split_once('(') {
            Some((h, rest)) => {
                let arg = rest
                    .strip_suffix(')')
                    .ok_or_else(|| bad("missing closing paren"))?;
                (h.trim(), Some(arg.trim()))
            }
            None => (kind_text, None),
        };
        let kind = match head {
            "oracle" => {
                let noise: f64 = arg
                    .ok_or_else(|| bad("oracle needs a noise argument"))?
                    .parse()
                    .map_err(|_| bad("oracle noise must be a number"))?;
                if !(0.0..=1.0).contains(&noise) {
                    return Err(bad("oracle noise must be in [0, 1]"));
                }
                AgentKind::Scripted {
                    profile: ScriptedProfile::Oracle { noise },
                }
            }
            "conformist" => AgentKind::Scripted {
                profile: ScriptedProfile::Conformist,
            },
            "stubborn" => {
                let stance = match arg.unwrap_or("random") {
                    "wrong" => StubbornStance::Wrong,
                    "random" => StubbornStance::Random,
                    other => return Err(bad(&format!("unknown stubborn stance `{other}`"))),
                };
                AgentKind::Scripted {
                    profile: ScriptedProfile::Stubborn { stance },
                }
            }
            "uniform" => AgentKind::Scripted {
                profile: ScriptedProfile::UniformRandom,
            },
            "remote" => AgentKind::Remote {
                model: arg
                    .ok_or_else(|| bad("remote needs a model id"))?
                    .to_string(),
            },
            other => return Err(bad(&format!("unknown agent kind `{other}`"))),
        };
        let (perf, conf) = match tier_text {
            None => (Tier::Medium, Tier::Medium),
            Some(t) => {
                let (p, c) = match t.split_once('/') {
                    Some((p, c)) => (p.trim(), c.trim()),
                    None => (t, "medium"),
                };
                (
                    Tier::parse(p).ok_or_else(|| bad(&format!("unknown tier `{p}`")))?,
                    Tier::parse(c).ok_or_else(|| bad(&format!("unknown tier `{c}`")))?,
                )
            }
        };
        Ok(AgentSpec {
            name: String::new(),
            kind,
            perf_tier: perf,
            conf_tier: conf,
        })
    }
}

/// A full role assignment with explanation and optional per-player confidence
/// scores on the 1-10 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub assignment: RoleAssignment,
    pub explanation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<BTreeMap<PlayerId, u8>>,
}

impl Proposal {
    pub fn new(assignment: RoleAssignment, explanation: impl Into<String>) -> Proposal {
        Proposal {
            assignment,
            explanation: explanation.into(),
            confidence: None,
        }
    }

    /// Must cover every player exactly; confidences, when present, must be in
    /// [1, 10] and refer to known players.
    pub fn validate(&self, players: &[PlayerId]) -> Result<()> {
        if self.assignment.len() != players.len()
            || players.iter().any(|p| !self.assignment.contains_key(p))
        {
            return Err(Error::MalformedResponse(format!(
                "assignment must cover all {} players",
                players.len()
            )));
        }
        if let Some(conf) = &self.confidence {
            for (p, c) in conf {
                if !players.contains(p) {
                    return Err(Error::MalformedResponse(format!(
                        "confidence for unknown player `{p}`"
                    )));
                }
                if !(1..=10).contains(c) {
                    return Err(Error::MalformedResponse(format!(
                        "confidence {c} out of the 1-10 range"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Mean confidence rounded to the nearest integer, for single-line
    /// context renderings.
    pub fn mean_confidence(&self) -> Option<u8> {
        self.confidence.as_ref().and_then(mean_confidence)
    }
}

/// Mean of a per-player confidence map, rounded to the nearest integer.
pub fn mean_confidence(conf: &BTreeMap<PlayerId, u8>) -> Option<u8> {
    if conf.is_empty() {
        return None;
    }
    let sum: u32 = conf.values().map(|c| u32::from(*c)).sum();
    Some(((sum as f64 / conf.len() as f64).round() as u8).clamp(1, 10))
}

/// One agent's contribution to the debate phase for a focus player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTurn {
    pub focus_player: PlayerId,
    pub role: Role,
    pub agree_with: BTreeSet<String>,
    pub disagree_with: BTreeSet<String>,
    pub agree_reasoning: String,
    pub disagree_reasoning: String,
}

impl DebateTurn {
    pub fn validate(&self, self_name: &str, team: &[String], focus: &PlayerId) -> Result<()> {
        if self.focus_player != *focus {
            return Err(Error::MalformedResponse(format!(
                "turn targets `{}`, expected `{focus}`",
                self.focus_player
            )));
        }
        if self.agree_with.contains(self_name) || self.disagree_with.contains(self_name) {
            return Err(Error::MalformedResponse(
                "agents must not agree or disagree with themselves".into(),
            ));
        }
        if !self.agree_with.is_disjoint(&self.disagree_with) {
            return Err(Error::MalformedResponse(
                "agree and disagree sets overlap".into(),
            ));
        }
        for name in self.agree_with.iter().chain(&self.disagree_with) {
            if !team.iter().any(|t| t == name) {
                return Err(Error::MalformedResponse(format!(
                    "unknown agent `{name}` in agree/disagree sets"
                )));
            }
        }
        Ok(())
    }
}

/// The uniform agent interface the debate engine drives. Calls within one
/// game arrive sequentially in protocol order; implementations may keep
/// per-game state (chat history, RNG).
pub trait Agent: Send {
    fn spec(&self) -> &AgentSpec;

    fn name(&self) -> &str {
        &self.spec().name
    }

    /// Initial full assignment with per-player confidence.
    fn propose(&mut self, game: &GameView<'_>) -> Result<Proposal>;

    /// One argumentative turn about the focus player.
    fn debate_turn(&mut self, ctx: &DebateContext<'_>) -> Result<DebateTurn>;

    /// Post-debate revision covering all players, not only the focus player.
    fn self_adjust(&mut self, ctx: &AdjustContext<'_>) -> Result<Proposal>;

    /// Final full assignment once every player has been debated.
    fn final_answer(&mut self, ctx: &FinalContext<'_>) -> Result<Proposal>;

    /// Full assignment used to break per-player voting ties.
    fn decide_supervision(&mut self, ctx: &SupervisorContext<'_>) -> Result<Proposal>;

    /// Preferred player order when the order policy lets agents agree on one.
    fn propose_order(&mut self, game: &GameView<'_>) -> Result<Vec<PlayerId>>;
}
