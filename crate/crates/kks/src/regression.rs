//! Linear regression via penalized normal equations, plus the per-game
//! feature table feeding the outcome regressions.
//!
//! `fit_linear` solves (XᵀX + λD)β = Xᵀy with an unpenalized intercept
//! (D = diag(0, 1, ..., 1)). λ = 0 is plain OLS and adds classical
//! homoskedastic standard errors and R²; a singular system at λ = 0 is
//! reported as rank deficiency naming the offending columns.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, Tier};
use crate::engine::DebateTranscript;
use crate::error::{Error, Result};
use crate::generator::Puzzle;
use crate::metrics::{self, classify_position, EndState, StartState, TransitionTable};
use crate::statement::{Role, RoleAssignment};

/// Default ridge penalty for the transition-weight analysis.
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Classical OLS standard errors; present only at λ = 0 with more rows
    /// than columns.
    pub std_errors: Option<Vec<f64>>,
    pub intercept_std_error: Option<f64>,
    pub ridge_penalty: f64,
    pub r_squared: f64,
}

impl RegressionFit {
    /// Euclidean norm of the non-intercept coefficients.
    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Two-sided normal-approximation significance stars for t = coef / SE:
/// `*` p<0.05, `**` p<0.01, `***` p<0.001.
pub fn significance_stars(t_stat: f64) -> &'static str {
    let t = t_stat.abs();
    if t >= 3.290527 {
        "***"
    } else if t >= 2.575829 {
        "**"
    } else if t >= 1.959964 {
        "*"
    } else {
        ""
    }
}

pub fn fit_linear(
    features: &[Vec<f64>],
    names: &[String],
    target: &[f64],
    lambda: f64,
) -> Result<RegressionFit> {
    let n = features.len();
    let p = names.len();
    if n == 0 {
        return Err(Error::EmptyInput("fit_linear"));
    }
    if n != target.len() {
        return Err(Error::Config(format!(
            "feature rows ({n}) and target length ({}) differ",
            target.len()
        )));
    }
    if features.iter().any(|row| row.len() != p) {
        return Err(Error::Config("feature row width must match names".into()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(
            "lambda must be a finite nonnegative number".into(),
        ));
    }

    // design matrix with intercept column first
    let cols = p + 1;
    let x = DMatrix::from_fn(
        n,
        cols,
        |i, j| if j == 0 { 1.0 } else { features[i][j - 1] },
    );
    let y = DVector::from_column_slice(target);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;

    let mut a = xtx.clone();
    for j in 1..cols {
        a[(j, j)] += lambda;
    }

    let chol = match a.clone().cholesky() {
        Some(c) => c,
        None => {
            return Err(Error::RankDeficient {
                columns: dependent_columns(&x, names),
            })
        }
    };
    if lambda == 0.0 {
        // Cholesky can numerically succeed on a singular Gram matrix; check
        // column independence explicitly for the OLS path.
        let dependent = dependent_columns(&x, names);
        if !dependent.is_empty() {
            return Err(Error::RankDeficient { columns: dependent });
        }
    }
    let beta = chol.solve(&xty);

    let fitted = &x * &beta;
    let residuals = &y - &fitted;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    let (std_errors, intercept_std_error) = if lambda == 0.0 && n > cols {
        let sigma2 = rss / (n - cols) as f64;
        let inv = chol.inverse();
        let ses: Vec<f64> = (0..cols).map(|j| (sigma2 * inv[(j, j)]).sqrt()).collect();
        (Some(ses[1..].to_vec()), Some(ses[0]))
    } else {
        (None, None)
    };

    Ok(RegressionFit {
        feature_names: names.to_vec(),
        coefficients: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
        std_errors,
        intercept_std_error,
        ridge_penalty: lambda,
        r_squared,
    })
}

/// Modified Gram-Schmidt over the design matrix columns; a column whose
/// residual against the previous ones vanishes is linearly dependent.
fn dependent_columns(x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let n = x.nrows();
    let cols = x.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..cols {
        let mut v = DVector::from_fn(n, |i, _| x[(i, j)]);
        let scale = v.norm().max(1.0);
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        if v.norm() <= 1e-9 * scale {
            let name = if j == 0 {
                "intercept".to_string()
            } else {
                names[j - 1].clone()
            };
            dependent.push(name);
        } else {
            let norm = v.norm();
            basis.push(v / norm);
        }
    }
    dependent
}

/// One game's inputs to the feature table.
pub struct GameRecord<'a> {
    pub transcript: &'a DebateTranscript,
    pub puzzle: &'a Puzzle,
    pub team: &'a [AgentSpec],
}

impl GameRecord<'_> {
    fn truth(&self) -> Result<&RoleAssignment> {
        self.puzzle
            .solution
            .as_ref()
            .ok_or_else(|| Error::Config(format!("puzzle `{}` is not certified", self.puzzle.id)))
    }
}

/// Per-game features and targets for the outcome regressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Target: smooth accuracy of the final decision.
    pub final_smooth: Vec<f64>,
    /// Target: majority-agreement AUC.
    pub auc_agree_major: Vec<f64>,
}

pub const FEATURE_NAMES: [&str; 14] = [
    "game_size",
    "num_agents",
    "debate_depth",
    "init_smooth_acc",
    "init_strict_acc",
    "strong_init_smooth_acc",
    "strong_init_strict_acc",
    "weak_init_smooth_acc",
    "weak_init_strict_acc",
    "strong_in_minority",
    "weak_in_minority",
    "conf_visible",
    "debate_order_same",
    "init_has_chaos",
];

fn tier_rank(t: Tier) -> u8 {
    match t {
        Tier::High => 2,
        Tier::Medium => 1,
        Tier::Low => 0,
    }
}

fn per_agent_initial_accuracy(
    transcript: &DebateTranscript,
    truth: &RoleAssignment,
    agents: &[&str],
) -> (f64, f64) {
    if agents.is_empty() {
        return (0.0, 0.0);
    }
    let mut smooth = 0.0;
    let mut strict = 0.0;
    for agent in agents {
        let record = transcript
            .initial_proposals
            .iter()
            .find(|p| p.agent == *agent)
            .expect("agent present in proposals");
        let correct = truth
            .iter()
            .filter(|(p, role)| record.proposal.assignment.get(*p) == Some(*role))
            .count();
        smooth += correct as f64 / truth.len() as f64;
        if correct == truth.len() {
            strict += 1.0;
        }
    }
    (smooth / agents.len() as f64, strict / agents.len() as f64)
}

/// Players on which any of `agents` starts in a minority position.
fn minority_count(transcript: &DebateTranscript, truth: &RoleAssignment, agents: &[&str]) -> f64 {
    let snapshot = transcript.snapshot(0);
    let mut count = 0u64;
    for player in &transcript.player_order {
        let labels: Vec<Role> = transcript
            .team
            .iter()
            .map(|a| snapshot[a.as_str()][player])
            .collect();
        for agent in agents {
            let idx = transcript
                .team
                .iter()
                .position(|a| a == agent)
                .expect("agent in team");
            let state = classify_position(labels[idx], &labels, truth[player]);
            if matches!(state, StartState::MiC | StartState::MiW) {
                count += 1;
            }
        }
    }
    count as f64
}

pub fn build_feature_table(games: &[GameRecord<'_>]) -> Result<FeatureTable> {
    if games.is_empty() {
        return Err(Error::EmptyInput("build_feature_table"));
    }
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::with_capacity(games.len());
    let mut final_smooth = Vec::with_capacity(games.len());
    let mut auc_agree_major = Vec::with_capacity(games.len());

    for game in games {
        let truth = game.truth()?;
        let transcript = game.transcript;
        let (init_strict, init_smooth) = metrics::initial_vote_accuracy(transcript, truth);

        let top = game
            .team
            .iter()
            .map(|a| tier_rank(a.perf_tier))
            .max()
            .unwrap();
        let bottom = game
            .team
            .iter()
            .map(|a| tier_rank(a.perf_tier))
            .min()
            .unwrap();
        let strong: Vec<&str> = game
            .team
            .iter()
            .filter(|a| tier_rank(a.perf_tier) == top)
            .map(|a| a.name.as_str())
            .collect();
        let weak: Vec<&str> = game
            .team
            .iter()
            .filter(|a| tier_rank(a.perf_tier) == bottom)
            .map(|a| a.name.as_str())
            .collect();
        let (strong_smooth, strong_strict) = per_agent_initial_accuracy(transcript, truth, &strong);
        let (weak_smooth, weak_strict) = per_agent_initial_accuracy(transcript, truth, &weak);

        rows.push(vec![
            game.puzzle.size as f64,
            game.team.len() as f64,
            transcript.depth as f64,
            init_smooth,
            init_strict,
            strong_smooth,
            strong_strict,
            weak_smooth,
            weak_strict,
            minority_count(transcript, truth, &strong),
            minority_count(transcript, truth, &weak),
            f64::from(transcript.confidence_visible),
            f64::from(transcript.order_agreed),
            f64::from(metrics::initial_has_chaos(transcript)),
        ]);
        let m = metrics::instance_metrics(transcript, truth)?;
        final_smooth.push(m.final_smooth);
        auc_agree_major.push(m.auc_agree_major);
    }

    Ok(FeatureTable {
        names,
        rows,
        final_smooth,
        auc_agree_major,
    })
}

/// Feature names, per-game rows, and the target vector.
pub type TransitionFeatures = (Vec<String>, Vec<Vec<f64>>, Vec<f64>);

/// The 12 transition-count features per game, with final smooth accuracy as
/// the target; ridge weights over these reproduce the transition-contribution
/// analysis.
pub fn transition_feature_table(
    games: &[(&DebateTranscript, &RoleAssignment)],
) -> Result<TransitionFeatures> {
    if games.is_empty() {
        return Err(Error::EmptyInput("transition_feature_table"));
    }
    let mut names = Vec::new();
    for start in StartState::ALL {
        for end in [EndState::C, EndState::W] {
            names.push(format!("{start}->{end}"));
        }
    }
    let mut rows = Vec::with_capacity(games.len());
    let mut target = Vec::with_capacity(games.len());
    for (transcript, truth) in games {
        let table: TransitionTable = metrics::transition_counts(transcript, truth)?;
        let mut row = Vec::with_capacity(12);
        for start in StartState::ALL {
            for end in [EndState::C, EndState::W] {
                row.push(table.count(start, end) as f64);
            }
        }
        rows.push(row);
        let m = metrics::instance_metrics(transcript, truth)?;
        target.push(m.final_smooth);
    }
    Ok((names, rows, target))
}
