//! End-to-end remote-agent tests against a local mock chat endpoint. The
//! mock inspects the last user message and answers in the documented wire
//! shapes, with switchable misbehavior to exercise repair retries and
//! fallbacks.

mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use kks::agents::{AgentSpec, JudgeClient, JudgeContext, RemoteSettings, ScriptedProfile};
use kks::engine::{run_debate_with, DebateConfig, EngineOptions, OrderPolicy, Phase};
use kks::generator::Puzzle;
use kks::solver;
use kks::statement::PlayerId;

/// How the mock behaves for a given request index.
#[derive(Clone, Copy, PartialEq)]
enum MockMode {
    /// Always well-formed.
    Wellformed,
    /// Garbage on even-numbered requests; a repair retry then succeeds.
    FlakyFirst,
    /// Garbage always.
    Broken,
}

struct MockEndpoint {
    base_url: String,
    requests: Arc<AtomicUsize>,
}

fn spawn_mock(mode: MockMode) -> MockEndpoint {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base_url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let counter = requests.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let n = counter.fetch_add(1, Ordering::SeqCst);
            handle(stream, mode, n);
        }
    });
    MockEndpoint { base_url, requests }
}

fn handle(stream: std::net::TcpStream, mode: MockMode, request_idx: usize) {
    let mut reader = BufReader::new(stream);
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).is_err() || line == "\r\n" || line.is_empty() {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = v.trim().parse().unwrap_or(0);
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok();
    let request: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();

    let garbled = match mode {
        MockMode::Wellformed => false,
        MockMode::FlakyFirst => request_idx.is_multiple_of(2),
        MockMode::Broken => true,
    };
    let content = if garbled {
        "I would rather chat about the weather.".to_string()
    } else {
        answer(&request)
    };

    let reply = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string();
    let mut stream = reader.into_inner();
    let _ = write!(
        stream,
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.len(),
        reply
    );
}

/// Crafts a schema-valid reply for whichever phase prompt arrived.
fn answer(request: &serde_json::Value) -> String {
    let text: String = request["messages"]
        .as_array()
        .map(|msgs| {
            msgs.iter()
                .map(|m| m["content"].as_str().unwrap_or(""))
                .collect::<Vec<_>>()
                .join("\n")
        })
        .unwrap_or_default();
    // the last substantive prompt: repair nudges ride behind the real one
    let last = request["messages"]
        .as_array()
        .map(|msgs| {
            msgs.iter()
                .rev()
                .filter(|m| m["role"] == "user")
                .filter_map(|m| m["content"].as_str())
                .find(|c| !c.starts_with("Your previous response was not"))
                .unwrap_or("")
        })
        .unwrap_or("");

    if last.contains("propose the order") {
        return serde_json::json!({"order": ["Violet", "Uma", "Xavier"]}).to_string();
    }
    if let Some(rest) = last.split("We are debating the role of ").nth(1) {
        let player = rest.split('.').next().unwrap_or("Violet");
        return serde_json::json!({
            "player_role": player,
            "role": "knight",
            "agree_with": [],
            "disagree_with": [],
            "agree_reasoning": "",
            "disagree_reasoning": ""
        })
        .to_string();
    }
    if text.contains("evaluating the logic soundness") {
        return serde_json::json!({
            "agree_reasoning_soundness": 3,
            "disagree_reasoning_soundness": 0
        })
        .to_string();
    }
    // initial proposal, self-adjustment, final discussion, supervisor: a full
    // assignment for the three-player demo game
    serde_json::json!({
        "players": [
            {"name": "Violet", "role": "knight", "confidence": 8},
            {"name": "Uma", "role": "knave", "confidence": 7},
            {"name": "Xavier", "role": "spy", "confidence": 6}
        ],
        "explanation": "mock deduction"
    })
    .to_string()
}

fn settings(base_url: &str) -> RemoteSettings {
    let mut s = RemoteSettings::new(base_url);
    s.timeout = Duration::from_secs(5);
    s.retries = 2;
    s
}

fn remote_team_config(seed: u64) -> DebateConfig {
    DebateConfig {
        team: vec![
            AgentSpec::remote("r1", "mock-model-a"),
            AgentSpec::remote("r2", "mock-model-b"),
        ],
        confidence_visible: false,
        order_policy: OrderPolicy::Fixed,
        depth: 1,
        supervisor: AgentSpec::scripted("supervisor", ScriptedProfile::Oracle { noise: 0.0 }),
        seed,
    }
}

#[test]
fn remote_team_completes_a_game() {
    let mock = spawn_mock(MockMode::Wellformed);
    let puzzle = solver::certify(&Puzzle::demo_size3()).unwrap();
    let opts = EngineOptions {
        remote: Some(settings(&mock.base_url)),
        offline: false,
    };
    let t = run_debate_with(&puzzle, &remote_team_config(1), &opts).unwrap();
    assert_eq!(Some(&t.final_decision), puzzle.solution.as_ref());
    assert!(t.fallbacks.is_empty());
    assert_eq!(t.rounds.len(), 3);
    // proposals parsed the optional confidence field
    assert!(t.initial_proposals[0].proposal.confidence.is_some());
    assert!(mock.requests.load(Ordering::SeqCst) >= 2 + 3 * 4 + 2);
}

#[test]
fn malformed_replies_are_repaired_by_retry() {
    let mock = spawn_mock(MockMode::FlakyFirst);
    let puzzle = solver::certify(&Puzzle::demo_size3()).unwrap();
    let opts = EngineOptions {
        remote: Some(settings(&mock.base_url)),
        offline: false,
    };
    let t = run_debate_with(&puzzle, &remote_team_config(2), &opts).unwrap();
    // every first reply was garbage, the retry fixed each one
    assert!(t.fallbacks.is_empty());
    assert_eq!(Some(&t.final_decision), puzzle.solution.as_ref());
}

#[test]
fn persistent_garbage_degrades_to_flagged_fallbacks() {
    let mock = spawn_mock(MockMode::Broken);
    let puzzle = solver::certify(&Puzzle::demo_size3()).unwrap();
    let opts = EngineOptions {
        remote: Some(settings(&mock.base_url)),
        offline: false,
    };
    let t = run_debate_with(&puzzle, &remote_team_config(3), &opts).unwrap();
    // proposals fall back to seeded uniform assignments, turns keep the
    // current label, adjustments retain the prior position; all flagged
    assert!(t
        .fallbacks
        .iter()
        .any(|f| f.phase == Phase::Proposal && f.agent == "r1"));
    assert!(t.fallbacks.iter().any(|f| f.phase == Phase::Debate));
    assert!(t.fallbacks.iter().any(|f| f.phase == Phase::Adjustment));
    // fallbacks never shrink coverage and never produce an unknown role
    for record in &t.final_per_agent {
        assert_eq!(record.proposal.assignment.len(), 3);
    }
}

#[test]
fn broken_supervisor_is_a_hard_error() {
    let mock = spawn_mock(MockMode::Broken);
    let puzzle = solver::certify(&Puzzle::demo_size3()).unwrap();
    // oracle vs stubborn-wrong ties every player, forcing supervision
    let cfg = DebateConfig {
        team: vec![
            AgentSpec::scripted("a1", ScriptedProfile::Oracle { noise: 0.0 }),
            AgentSpec::scripted(
                "a2",
                ScriptedProfile::Stubborn {
                    stance: kks::agents::StubbornStance::Wrong,
                },
            ),
        ],
        confidence_visible: false,
        order_policy: OrderPolicy::Fixed,
        depth: 1,
        supervisor: AgentSpec::remote("supervisor", "mock-supervisor"),
        seed: 6,
    };
    let opts = EngineOptions {
        remote: Some(settings(&mock.base_url)),
        offline: false,
    };
    match run_debate_with(&puzzle, &cfg, &opts) {
        Err(kks::Error::Supervisor(_)) => {}
        other => panic!("expected a supervisor error, got {other:?}"),
    }
}

#[test]
fn malformed_order_votes_are_ignored() {
    let mock = spawn_mock(MockMode::Broken);
    let puzzle = solver::certify(&Puzzle::demo_size3()).unwrap();
    let mut cfg = remote_team_config(7);
    cfg.order_policy = OrderPolicy::Agreed;
    cfg.supervisor = AgentSpec::scripted("supervisor", ScriptedProfile::Oracle { noise: 0.0 });
    let opts = EngineOptions {
        remote: Some(settings(&mock.base_url)),
        offline: false,
    };
    let t = run_debate_with(&puzzle, &cfg, &opts).unwrap();
    // with every order vote malformed the puzzle order stands, flagged
    assert_eq!(t.player_order, puzzle.players);
    assert!(t.fallbacks.iter().any(|f| f.phase == Phase::Order));
}

#[test]
fn batch_marks_failed_games_and_continues() {
    let mock = spawn_mock(MockMode::Broken);
    let dir = tempfile::tempdir().unwrap();
    let cfg = kks::experiment::ExperimentConfig {
        sizes: vec![3],
        puzzles_per_cell: 3,
        seed: 13,
        out_dir: dir.path().to_path_buf(),
        cells: vec!["A".into()],
        // ties happen whenever the two stubborn profiles split a player with
        // the oracle; the remote supervisor then fails the game
        agents: Some(vec!["oracle(0)".into(), "stubborn(wrong)".into()]),
        team_size: 2,
        supervisor: "remote(mock-supervisor)".into(),
        offline: false,
        ..Default::default()
    };
    let opts = kks::experiment::BatchOptions {
        remote: Some(settings(&mock.base_url)),
        ..Default::default()
    };
    let summary = kks::experiment::run_batch(&cfg, &opts).unwrap();
    assert_eq!(summary.failed, 3);
    assert_eq!(summary.completed, 0);
    let manifest = kks::experiment::RunManifest::load(dir.path()).unwrap();
    assert!(manifest
        .games
        .iter()
        .all(|g| g.status == kks::experiment::GameStatus::Failed));
}

#[test]
fn offline_mode_rejects_remote_teams() {
    let puzzle = solver::certify(&Puzzle::demo_size3()).unwrap();
    let opts = EngineOptions {
        remote: None,
        offline: true,
    };
    assert!(run_debate_with(&puzzle, &remote_team_config(4), &opts).is_err());
}

#[test]
fn judge_rates_turns_and_rejects_bad_scales() {
    let mock = spawn_mock(MockMode::Wellformed);
    let judge = JudgeClient::new(settings(&mock.base_url), "mock-judge").unwrap();
    let puzzle = solver::certify(&Puzzle::demo_size3()).unwrap();
    let game_text = puzzle.game_info_text();
    let truth = puzzle.solution.clone().unwrap();
    let focus = PlayerId::new("Violet");
    let proposals = vec![];
    let ctx = JudgeContext {
        game_text: &game_text,
        players: &puzzle.players,
        num_agents: 2,
        focus_player: &focus,
        agent_name: "r1",
        ground_truth: &truth,
        initial_proposals: &proposals,
    };

    // nobody agreed or disagreed with: rated (0, 0) without a remote call
    let empty_turn = kks::agents::DebateTurn {
        focus_player: focus.clone(),
        role: kks::statement::Role::Knight,
        agree_with: Default::default(),
        disagree_with: Default::default(),
        agree_reasoning: String::new(),
        disagree_reasoning: String::new(),
    };
    let before = mock.requests.load(Ordering::SeqCst);
    let rating = judge.judge_rationality(&empty_turn, &ctx).unwrap();
    assert_eq!((rating.agree_soundness, rating.disagree_soundness), (0, 0));
    assert_eq!(mock.requests.load(Ordering::SeqCst), before);

    // a real turn goes to the endpoint
    let turn = kks::agents::DebateTurn {
        agree_with: ["r2".to_string()].into(),
        agree_reasoning: "same deduction".into(),
        ..empty_turn
    };
    let rating = judge.judge_rationality(&turn, &ctx).unwrap();
    assert_eq!((rating.agree_soundness, rating.disagree_soundness), (3, 0));

    // ratings outside 0-4 are malformed
    assert!(kks::agents::judge::parse_rating(
        r#"{"agree_reasoning_soundness": 7, "disagree_reasoning_soundness": 1}"#
    )
    .is_err());

    // a broken judge surfaces an error so the rating is recorded as missing
    let broken = spawn_mock(MockMode::Broken);
    let judge = JudgeClient::new(settings(&broken.base_url), "mock-judge").unwrap();
    assert!(judge.judge_rationality(&turn, &ctx).is_err());
}
