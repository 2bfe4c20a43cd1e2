//! Rationality judge: rates the logic soundness of an agent's agree and
//! disagree reasoning on the 0-4 scale, via a configured judge endpoint.

use serde::Deserialize;

use crate::engine::ProposalRecord;
use crate::error::{Error, Result};
use crate::prompts;
use crate::statement::{PlayerId, RoleAssignment};

use super::remote::{extract_json, ChatClient, ChatMessage, RemoteSettings};
use super::DebateTurn;

/// Environment variable naming the judge model id.
pub const ENV_JUDGE_MODEL: &str = "KKS_JUDGE_MODEL";

/// Everything the judge prompt needs; the ground truth is included because
/// the rating anchors reference the correct solution.
#[derive(Debug, Clone)]
pub struct JudgeContext<'a> {
    pub game_text: &'a str,
    pub players: &'a [PlayerId],
    pub num_agents: usize,
    pub focus_player: &'a PlayerId,
    pub agent_name: &'a str,
    pub ground_truth: &'a RoleAssignment,
    pub initial_proposals: &'a [ProposalRecord],
}

/// 0 means "not applicable" (no agents in that set), 1-4 rate soundness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoundnessRating {
    pub agree_soundness: u8,
    pub disagree_soundness: u8,
}

#[derive(Deserialize)]
struct WireRating {
    agree_reasoning_soundness: i64,
    disagree_reasoning_soundness: i64,
}

pub fn parse_rating(content: &str) -> Result<SoundnessRating> {
    let wire: WireRating = serde_json::from_str(extract_json(content))
        .map_err(|e| Error::MalformedResponse(format!("invalid JSON: {e}")))?;
    for value in [
        wire.agree_reasoning_soundness,
        wire.disagree_reasoning_soundness,
    ] {
        if !(0..=4).contains(&value) {
            return Err(Error::MalformedResponse(format!(
                "rating {value} outside the 0-4 scale"
            )));
        }
    }
    Ok(SoundnessRating {
        agree_soundness: wire.agree_reasoning_soundness as u8,
        disagree_soundness: wire.disagree_reasoning_soundness as u8,
    })
}

pub struct JudgeClient {
    client: ChatClient,
    model: String,
    retries: u32,
}

impl JudgeClient {
    pub fn new(settings: RemoteSettings, model: impl Into<String>) -> Result<JudgeClient> {
        let retries = settings.retries;
        Ok(JudgeClient {
            client: ChatClient::new(settings)?,
            model: model.into(),
            retries,
        })
    }

    pub fn from_env() -> Result<JudgeClient> {
        let model = std::env::var(ENV_JUDGE_MODEL)
            .map_err(|_| Error::Config(format!("{ENV_JUDGE_MODEL} is not set")))?;
        JudgeClient::new(RemoteSettings::from_env()?, model)
    }

    /// Rates one debate turn. A turn with nobody agreed or disagreed with is
    /// rated (0, 0) locally, without any remote call. A reply that stays
    /// malformed past the retry budget surfaces as an error so callers record
    /// the rating as missing rather than silently zero.
    pub fn judge_rationality(
        &self,
        turn: &DebateTurn,
        ctx: &JudgeContext<'_>,
    ) -> Result<SoundnessRating> {
        if turn.agree_with.is_empty() && turn.disagree_with.is_empty() {
            return Ok(SoundnessRating {
                agree_soundness: 0,
                disagree_soundness: 0,
            });
        }
        let mut messages = vec![
            ChatMessage::system(prompts::render_judge(ctx)),
            ChatMessage::user(prompts::render_judge_user(ctx, turn)),
        ];
        let mut last_error = None;
        for attempt in 0..=self.retries {
            let content = match self.client.complete(&self.model, &messages) {
                Ok(c) => c,
                Err(e) => {
                    last_error = Some(e);
                    continue;
                }
            };
            match parse_rating(&content) {
                Ok(rating) => return Ok(rating),
                Err(e) => {
                    last_error = Some(e);
                    if attempt < self.retries {
                        messages.push(ChatMessage::assistant(content));
                        messages.push(ChatMessage::user(
                            "Respond strictly in the requested JSON format.",
                        ));
                    }
                }
            }
        }
        Err(Error::Agent {
            agent: "judge".into(),
            message: format!(
                "no valid rating after {} attempts: {}",
                self.retries + 1,
                last_error.map_or_else(|| "unknown".into(), |e| e.to_string())
            ),
        })
    }
}
