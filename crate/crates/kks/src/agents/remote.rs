//! Remote agents speaking a chat-completions style HTTP protocol.
//!
//! Each agent keeps its own message history for the whole game, so it sees
//! its previous responses but never another agent's private history. Replies
//! must be JSON in the documented shapes; malformed replies are retried with
//! a terse repair nudge up to the retry budget, after which the engine
//! applies its fallback policy.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::{AdjustContext, DebateContext, FinalContext, GameView, SupervisorContext};
use crate::error::{Error, Result};
use crate::prompts;
use crate::statement::{PlayerId, Role, RoleAssignment};

use super::{Agent, AgentKind, AgentSpec, DebateTurn, Proposal};

/// Environment variables read by [`RemoteSettings::from_env`].
pub const ENV_BASE_URL: &str = "KKS_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "KKS_LLM_API_KEY";
pub const ENV_TEMPERATURE: &str = "KKS_LLM_TEMPERATURE";

#[derive(Debug, Clone)]
pub struct RemoteSettings {
    /// Base URL of the chat endpoint; requests go to `{base}/chat/completions`.
    pub base_url: String,
    /// Bearer token, when the endpoint needs one.
    pub api_key: Option<String>,
    pub temperature: f64,
    pub timeout: Duration,
    /// Repair retries for malformed structured output.
    pub retries: u32,
}

impl RemoteSettings {
    pub fn new(base_url: impl Into<String>) -> RemoteSettings {
        RemoteSettings {
            base_url: base_url.into(),
            api_key: None,
            temperature: 0.7,
            timeout: Duration::from_secs(120),
            retries: 3,
        }
    }

    pub fn from_env() -> Result<RemoteSettings> {
        let base_url = std::env::var(ENV_BASE_URL)
            .map_err(|_| Error::Config(format!("{ENV_BASE_URL} is not set")))?;
        let mut settings = RemoteSettings::new(base_url);
        settings.api_key = std::env::var(ENV_API_KEY).ok();
        if let Ok(t) = std::env::var(ENV_TEMPERATURE) {
            settings.temperature = t
                .parse()
                .map_err(|_| Error::Config(format!("{ENV_TEMPERATURE} must be a number")))?;
        }
        Ok(settings)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

/// Blocking chat-completions client; safe to share across concurrent games.
pub struct ChatClient {
    settings: RemoteSettings,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(settings: RemoteSettings) -> Result<ChatClient> {
        let http = reqwest::blocking::Client::builder()
            .timeout(settings.timeout)
            .build()?;
        Ok(ChatClient { settings, http })
    }

    pub fn settings(&self) -> &RemoteSettings {
        &self.settings
    }

    pub fn complete(&self, model: &str, messages: &[ChatMessage]) -> Result<String> {
        let url = format!(
            "{}/chat/completions",
            self.settings.base_url.trim_end_matches('/')
        );
        let mut request = self.http.post(url).json(&ChatRequest {
            model,
            messages,
            temperature: self.settings.temperature,
        });
        if let Some(key) = &self.settings.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send()?.error_for_status()?;
        let parsed: ChatResponse = response.json()?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Error::MalformedResponse("empty choices array".into()))
    }
}

/// Pulls the first JSON object out of a reply that may wrap it in prose or a
/// code fence.
pub fn extract_json(content: &str) -> &str {
    let trimmed = content.trim();
    if let Some(start) = trimmed.find("```json") {
        if let Some(end) = trimmed[start + 7..].find("```") {
            return trimmed[start + 7..start + 7 + end].trim();
        }
    }
    if let (Some(start), Some(end)) = (trimmed.find('{'), trimmed.rfind('}')) {
        if start < end {
            return &trimmed[start..=end];
        }
    }
    trimmed
}

#[derive(Deserialize)]
struct WirePlayerRole {
    name: String,
    role: String,
    #[serde(default)]
    confidence: Option<u8>,
}

#[derive(Deserialize)]
struct WireProposal {
    players: Vec<WirePlayerRole>,
    #[serde(default)]
    explanation: String,
}

#[derive(Deserialize)]
struct WireTurn {
    player_role: String,
    role: String,
    #[serde(default)]
    agree_with: Vec<String>,
    #[serde(default)]
    disagree_with: Vec<String>,
    #[serde(default)]
    agree_reasoning: String,
    #[serde(default)]
    disagree_reasoning: String,
}

#[derive(Deserialize)]
struct WireOrder {
    order: Vec<String>,
}

fn parse_role(s: &str) -> Result<Role> {
    Role::parse(s.trim())
        .ok_or_else(|| Error::MalformedResponse(format!("`{s}` is not knight, knave, or spy")))
}

/// Parses a full-assignment reply, requiring one entry per puzzle player.
pub fn parse_proposal(content: &str, players: &[PlayerId]) -> Result<Proposal> {
    let wire: WireProposal = serde_json::from_str(extract_json(content))
        .map_err(|e| Error::MalformedResponse(format!("invalid JSON: {e}")))?;
    let mut assignment = RoleAssignment::new();
    let mut confidence: BTreeMap<PlayerId, u8> = BTreeMap::new();
    for entry in wire.players {
        let player = PlayerId::new(entry.name);
        if !players.contains(&player) {
            return Err(Error::MalformedResponse(format!(
                "unknown player `{player}` in players array"
            )));
        }
        if assignment
            .insert(player.clone(), parse_role(&entry.role)?)
            .is_some()
        {
            return Err(Error::MalformedResponse(format!(
                "player `{player}` assigned twice"
            )));
        }
        if let Some(c) = entry.confidence {
            confidence.insert(player, c);
        }
    }
    let proposal = Proposal {
        assignment,
        explanation: wire.explanation,
        confidence: if confidence.is_empty() {
            None
        } else {
            Some(confidence)
        },
    };
    proposal.validate(players)?;
    Ok(proposal)
}

pub fn parse_turn(
    content: &str,
    self_name: &str,
    team: &[String],
    focus: &PlayerId,
) -> Result<DebateTurn> {
    let wire: WireTurn = serde_json::from_str(extract_json(content))
        .map_err(|e| Error::MalformedResponse(format!("invalid JSON: {e}")))?;
    let turn = DebateTurn {
        focus_player: PlayerId::new(wire.player_role),
        role: parse_role(&wire.role)?,
        agree_with: wire.agree_with.into_iter().collect(),
        disagree_with: wire.disagree_with.into_iter().collect(),
        agree_reasoning: wire.agree_reasoning,
        disagree_reasoning: wire.disagree_reasoning,
    };
    turn.validate(self_name, team, focus)?;
    Ok(turn)
}

pub fn parse_order(content: &str, players: &[PlayerId]) -> Result<Vec<PlayerId>> {
    let wire: WireOrder = serde_json::from_str(extract_json(content))
        .map_err(|e| Error::MalformedResponse(format!("invalid JSON: {e}")))?;
    let order: Vec<PlayerId> = wire.order.into_iter().map(PlayerId::new).collect();
    let mut sorted: Vec<&PlayerId> = order.iter().collect();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != players.len() || !players.iter().all(|p| sorted.binary_search(&p).is_ok()) {
        return Err(Error::MalformedResponse(
            "order must list every player exactly once".into(),
        ));
    }
    Ok(order)
}

const REPAIR_NUDGE: &str =
    "Your previous response was not in the required format. Respond again, strictly in the \
     requested JSON format.";

pub struct RemoteAgent {
    spec: AgentSpec,
    model: String,
    client: Arc<ChatClient>,
    history: Vec<ChatMessage>,
    retries: u32,
}

impl RemoteAgent {
    pub fn new(spec: AgentSpec, settings: RemoteSettings) -> Result<RemoteAgent> {
        let model = match &spec.kind {
            AgentKind::Remote { model } => model.clone(),
            AgentKind::Scripted { .. } => {
                return Err(Error::Config(format!(
                    "agent `{}` is scripted, not remote",
                    spec.name
                )))
            }
        };
        let retries = settings.retries;
        Ok(RemoteAgent {
            spec,
            model,
            client: Arc::new(ChatClient::new(settings)?),
            history: Vec::new(),
            retries,
        })
    }

    pub fn with_client(spec: AgentSpec, client: Arc<ChatClient>) -> Result<RemoteAgent> {
        let model = match &spec.kind {
            AgentKind::Remote { model } => model.clone(),
            AgentKind::Scripted { .. } => {
                return Err(Error::Config(format!(
                    "agent `{}` is scripted, not remote",
                    spec.name
                )))
            }
        };
        let retries = client.settings().retries;
        Ok(RemoteAgent {
            spec,
            model,
            client,
            history: Vec::new(),
            retries,
        })
    }

    /// Sends the accumulated history plus `prompt`, retrying parse failures.
    /// Only the successful exchange is committed to the history.
    fn exchange<T>(
        &mut self,
        prompt: Vec<ChatMessage>,
        parse: impl Fn(&str) -> Result<T>,
    ) -> Result<T> {
        let mut attempt_messages: Vec<ChatMessage> = self
            .history
            .iter()
            .cloned()
            .chain(prompt.iter().cloned())
            .collect();
        let mut last_error = None;
        for attempt in 0..=self.retries {
            let content = match self.client.complete(&self.model, &attempt_messages) {
                Ok(c) => c,
                Err(e) => {
                    last_error = Some(e);
                    continue;
                }
            };
            match parse(&content) {
                Ok(value) => {
                    self.history.extend(prompt);
                    self.history.push(ChatMessage::assistant(content));
                    return Ok(value);
                }
                Err(e) => {
                    last_error = Some(e);
                    if attempt < self.retries {
                        attempt_messages.push(ChatMessage::assistant(content));
                        attempt_messages.push(ChatMessage::user(REPAIR_NUDGE));
                    }
                }
            }
        }
        Err(Error::Agent {
            agent: self.spec.name.clone(),
            message: format!(
                "no valid response after {} attempts: {}",
                self.retries + 1,
                last_error.map_or_else(|| "unknown".into(), |e| e.to_string())
            ),
        })
    }
}

impl Agent for RemoteAgent {
    fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    fn propose(&mut self, game: &GameView<'_>) -> Result<Proposal> {
        let players = game.puzzle.players.clone();
        let prompt = vec![
            ChatMessage::system(prompts::render_initial_proposal(players.len())),
            ChatMessage::user(game.game_text.to_string()),
        ];
        self.exchange(prompt, move |content| parse_proposal(content, &players))
    }

    fn debate_turn(&mut self, ctx: &DebateContext<'_>) -> Result<DebateTurn> {
        let prompt = vec![ChatMessage::user(prompts::render_debate(ctx))];
        let self_name = self.spec.name.clone();
        let team = ctx.team.to_vec();
        let focus = ctx.focus_player.clone();
        self.exchange(prompt, move |content| {
            parse_turn(content, &self_name, &team, &focus)
        })
    }

    fn self_adjust(&mut self, ctx: &AdjustContext<'_>) -> Result<Proposal> {
        let prompt = vec![ChatMessage::user(prompts::render_self_adjustment(ctx))];
        let players = ctx.game.puzzle.players.clone();
        self.exchange(prompt, move |content| parse_proposal(content, &players))
    }

    fn final_answer(&mut self, ctx: &FinalContext<'_>) -> Result<Proposal> {
        let prompt = vec![ChatMessage::user(prompts::render_final_discussion(ctx))];
        let players = ctx.game.puzzle.players.clone();
        self.exchange(prompt, move |content| parse_proposal(content, &players))
    }

    fn decide_supervision(&mut self, ctx: &SupervisorContext<'_>) -> Result<Proposal> {
        let prompt = vec![ChatMessage::user(prompts::render_supervisor(ctx))];
        let players = ctx.game.puzzle.players.clone();
        self.exchange(prompt, move |content| parse_proposal(content, &players))
    }

    fn propose_order(&mut self, game: &GameView<'_>) -> Result<Vec<PlayerId>> {
        let prompt = vec![ChatMessage::user(prompts::render_order_request(
            &game.puzzle.players,
        ))];
        let players = game.puzzle.players.clone();
        self.exchange(prompt, move |content| parse_order(content, &players))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn players() -> Vec<PlayerId> {
        vec![
            PlayerId::new("Violet"),
            PlayerId::new("Uma"),
            PlayerId::new("Xavier"),
        ]
    }

    #[test]
    fn parses_the_documented_proposal_shape() {
        let content = r#"{
            "players": [
                {"name": "Violet", "role": "knight"},
                {"name": "Uma", "role": "knave"},
                {"name": "Xavier", "role": "spy"}
            ],
            "explanation": "the argument to derive the result."
        }"#;
        let proposal = parse_proposal(content, &players()).unwrap();
        assert_eq!(proposal.assignment.len(), 3);
        assert_eq!(proposal.assignment[&PlayerId::new("Xavier")], Role::Spy);
    }

    #[test]
    fn rejects_unknown_role_and_missing_player() {
        let unknown_role = r#"{"players": [
            {"name": "Violet", "role": "unknown"},
            {"name": "Uma", "role": "knave"},
            {"name": "Xavier", "role": "spy"}], "explanation": ""}"#;
        assert!(parse_proposal(unknown_role, &players()).is_err());

        let missing = r#"{"players": [
            {"name": "Violet", "role": "knight"},
            {"name": "Uma", "role": "knave"}], "explanation": ""}"#;
        assert!(parse_proposal(missing, &players()).is_err());
    }

    #[test]
    fn extracts_json_from_fenced_replies() {
        let content = "Here you go:\n```json\n{\"order\": [\"Violet\", \"Uma\", \"Xavier\"]}\n```";
        let order = parse_order(content, &players()).unwrap();
        assert_eq!(order.len(), 3);
    }

    #[test]
    fn turn_with_disagreement_carries_reasoning() {
        let team = vec!["a1".to_string(), "a2".to_string()];
        let content = r#"{
            "player_role": "Violet",
            "role": "knight",
            "agree_with": [],
            "disagree_with": ["a2"],
            "agree_reasoning": "",
            "disagree_reasoning": "Their deduction ignores the hint."
        }"#;
        let turn = parse_turn(content, "a1", &team, &PlayerId::new("Violet")).unwrap();
        assert!(turn.agree_with.is_empty());
        assert!(!turn.disagree_reasoning.is_empty());
    }
}
