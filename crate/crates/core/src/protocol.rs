//! Annotation sessions and the consecutive-negative stopping rule.
//!
//! An annotator walks a ranking from the top, answering one binary question
//! per candidate. The session stops as soon as `n_clean` consecutive "no"
//! answers have been given, where `n_clean` is the shortest clean streak
//! that is unlikely (probability at most `p_chance`) to occur by chance if
//! every candidate were an issue with probability `p_plus`.
//!
//! Sessions are event sourced: every mutation is expressed as a
//! [`SessionEvent`], and [`AnnotationSession::apply`] is the only code path
//! that changes state. Live sessions and replayed logs therefore go through
//! the same transitions.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float;
use crate::rank::{CandidateRef, IssueRanking, NoiseType};

/// Default issue probability per candidate.
pub const DEFAULT_P_PLUS: f64 = 0.05;
/// Default tolerated probability of a chance clean streak.
pub const DEFAULT_P_CHANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("{name} = {value} is outside (0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("cannot start a session on an empty ranking")]
    EmptyRanking,
    #[error("answer is for {got:?} but the current candidate is {expected:?}")]
    StaleCandidate { expected: Option<CandidateRef>, got: CandidateRef },
    #[error("session has terminated ({0})")]
    SessionTerminated(SessionStatus),
    #[error("amending earlier answers is not supported")]
    AmendmentUnsupported,
    #[error("sensitivity grid is empty")]
    EmptyGrid,
    #[error("event log does not begin with a start event")]
    MissingStart,
    #[error("start event found after the session began")]
    UnexpectedStart,
    #[error("ranking does not match the session: {0}")]
    RankingMismatch(&'static str),
    #[error("stop event ({logged}) disagrees with session state ({actual})")]
    InconsistentStop { logged: SessionStatus, actual: SessionStatus },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
}

impl Verdict {
    pub fn is_yes(self) -> bool {
        self == Verdict::Yes
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
        }
    }
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }
}

impl FromStr for Verdict {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "yes" | "y" => Ok(Verdict::Yes),
            "no" | "n" => Ok(Verdict::No),
            _ => Err(()),
        }
    }
}

/// How the streak length is rounded from `ln(p_chance) / ln(1 - p_plus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Gives 58 at the defaults.
    #[default]
    Floor,
    /// Guarantees `(1 - p_plus)^n_clean <= p_chance`.
    Ceil,
}

/// Streak length for the stopping rule.
///
/// Returns `floor(ln(p_chance) / ln(1 - p_plus))`, or 0 when either
/// probability is 1. Ratios within `1e-9` (relative) of an integer snap to
/// it so that exact cases such as `(0.5, 0.5)` are not lost to rounding.
pub fn compute_n_clean(p_plus: f64, p_chance: f64) -> Result<u64, ProtocolError> {
    compute_n_clean_with(p_plus, p_chance, Rounding::Floor)
}

pub fn compute_n_clean_with(p_plus: f64, p_chance: f64, rounding: Rounding) -> Result<u64, ProtocolError> {
    check_probability("p_plus", p_plus)?;
    check_probability("p_chance", p_chance)?;
    if p_plus == 1.0 || p_chance == 1.0 {
        return Ok(0);
    }
    let ratio = float::ln(p_chance) / float::ln(1.0 - p_plus);
    let nearest = float::round(ratio);
    let n = if float::abs(ratio - nearest) <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        match rounding {
            Rounding::Floor => float::floor(ratio),
            Rounding::Ceil => float::ceil(ratio),
        }
    };
    Ok(n as u64)
}

fn check_probability(name: &'static str, value: f64) -> Result<(), ProtocolError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(ProtocolError::OutOfRange { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingParams {
    p_plus: f64,
    p_chance: f64,
    rounding: Rounding,
    n_clean: u64,
}

impl StoppingParams {
    pub fn new(p_plus: f64, p_chance: f64) -> Result<Self, ProtocolError> {
        Self::with_rounding(p_plus, p_chance, Rounding::Floor)
    }

    pub fn with_rounding(p_plus: f64, p_chance: f64, rounding: Rounding) -> Result<Self, ProtocolError> {
        let n_clean = compute_n_clean_with(p_plus, p_chance, rounding)?;
        Ok(Self { p_plus, p_chance, rounding, n_clean })
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_chance(&self) -> f64 {
        self.p_chance
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn n_clean(&self) -> u64 {
        self.n_clean
    }

    /// Probability of a clean streak of length `n_clean` arising by chance.
    pub fn p_seq(&self) -> f64 {
        libm::pow(1.0 - self.p_plus, self.n_clean as f64)
    }
}

impl Default for StoppingParams {
    fn default() -> Self {
        Self::new(DEFAULT_P_PLUS, DEFAULT_P_CHANCE).expect("default probabilities are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    StoppedByCriterion,
    Exhausted,
}

impl SessionStatus {
    pub fn is_terminal(self) -> bool {
        self != SessionStatus::Active
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SessionStatus::Active => "active",
            SessionStatus::StoppedByCriterion => "stopped_by_criterion",
            SessionStatus::Exhausted => "exhausted",
        }
    }
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything needed to recreate a session, recorded as its first event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStart {
    pub session_id: String,
    pub annotator_id: String,
    pub dataset: String,
    pub noise_type: NoiseType,
    pub params: StoppingParams,
    pub ranking_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SessionEvent {
    Start(SessionStart),
    Answer {
        candidate: CandidateRef,
        verdict: Verdict,
    },
    /// Records a terminal transition. The status itself is derived from the
    /// answers; this event is checked against it.
    Stop {
        status: SessionStatus,
    },
    /// Reserved; always rejected.
    Amend {
        candidate: CandidateRef,
        verdict: Verdict,
    },
}

/// What the annotator should look at next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextCandidate {
    Candidate(CandidateRef),
    Terminal(SessionStatus),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSession {
    start: SessionStart,
    ranking: Arc<IssueRanking>,
    cursor: usize,
    streak: u64,
    verdicts: Vec<(CandidateRef, Verdict)>,
    status: SessionStatus,
}

impl AnnotationSession {
    /// Opens a session and returns it with the events that record its
    /// creation. With `n_clean = 0` the session is stopped immediately.
    pub fn start(
        session_id: impl Into<String>,
        annotator_id: impl Into<String>,
        dataset: impl Into<String>,
        ranking: Arc<IssueRanking>,
        params: StoppingParams,
    ) -> Result<(Self, Vec<SessionEvent>), ProtocolError> {
        if ranking.is_empty() {
            return Err(ProtocolError::EmptyRanking);
        }
        let start = SessionStart {
            session_id: session_id.into(),
            annotator_id: annotator_id.into(),
            dataset: dataset.into(),
            noise_type: ranking.noise_type(),
            params,
            ranking_len: ranking.len(),
        };
        let session = Self::from_start(start.clone(), ranking)?;
        let mut events = alloc::vec![SessionEvent::Start(start)];
        if session.status.is_terminal() {
            events.push(SessionEvent::Stop { status: session.status });
        }
        Ok((session, events))
    }

    /// Creates the session described by a start event.
    pub fn from_start(start: SessionStart, ranking: Arc<IssueRanking>) -> Result<Self, ProtocolError> {
        if ranking.is_empty() {
            return Err(ProtocolError::EmptyRanking);
        }
        if ranking.noise_type() != start.noise_type {
            return Err(ProtocolError::RankingMismatch("noise type differs"));
        }
        if ranking.len() != start.ranking_len {
            return Err(ProtocolError::RankingMismatch("ranking length differs"));
        }
        let status =
            if start.params.n_clean() == 0 { SessionStatus::StoppedByCriterion } else { SessionStatus::Active };
        Ok(Self { start, ranking, cursor: 0, streak: 0, verdicts: Vec::new(), status })
    }

    /// Rebuilds a session from its event log.
    pub fn replay<I>(events: I, ranking: Arc<IssueRanking>) -> Result<Self, (usize, ProtocolError)>
    where
        I: IntoIterator<Item = SessionEvent>,
    {
        let mut events = events.into_iter();
        let mut session = match events.next() {
            Some(SessionEvent::Start(start)) => Self::from_start(start, ranking).map_err(|e| (0, e))?,
            _ => return Err((0, ProtocolError::MissingStart)),
        };
        for (k, event) in events.enumerate() {
            session.apply(&event).map_err(|e| (k + 1, e))?;
        }
        Ok(session)
    }

    pub fn session_id(&self) -> &str {
        &self.start.session_id
    }

    pub fn annotator_id(&self) -> &str {
        &self.start.annotator_id
    }

    pub fn dataset(&self) -> &str {
        &self.start.dataset
    }

    pub fn noise_type(&self) -> NoiseType {
        self.start.noise_type
    }

    pub fn params(&self) -> &StoppingParams {
        &self.start.params
    }

    pub fn start_event(&self) -> &SessionStart {
        &self.start
    }

    pub fn ranking(&self) -> &Arc<IssueRanking> {
        &self.ranking
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn streak(&self) -> u64 {
        self.streak
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn verdicts(&self) -> &[(CandidateRef, Verdict)] {
        &self.verdicts
    }

    pub fn confirmed(&self) -> impl Iterator<Item = CandidateRef> + '_ {
        self.verdicts.iter().filter(|(_, v)| v.is_yes()).map(|(c, _)| *c)
    }

    pub fn question(&self) -> &'static str {
        self.start.noise_type.question()
    }

    pub fn next_candidate(&self) -> NextCandidate {
        match self.status {
            SessionStatus::Active => match self.ranking.get(self.cursor) {
                Some(entry) => NextCandidate::Candidate(entry.candidate),
                None => NextCandidate::Terminal(SessionStatus::Exhausted),
            },
            terminal => NextCandidate::Terminal(terminal),
        }
    }

    /// Validates an answer and returns the events it produces, without
    /// changing the session. Persist these, then [`apply`](Self::apply) them.
    pub fn plan_answer(&self, candidate: CandidateRef, verdict: Verdict) -> Result<Vec<SessionEvent>, ProtocolError> {
        let mut probe = self.clone();
        let answer = SessionEvent::Answer { candidate, verdict };
        probe.apply(&answer)?;
        let mut events = alloc::vec![answer];
        if probe.status.is_terminal() {
            events.push(SessionEvent::Stop { status: probe.status });
        }
        Ok(events)
    }

    /// Records an answer and returns the resulting status.
    pub fn submit_answer(&mut self, candidate: CandidateRef, verdict: Verdict) -> Result<SessionStatus, ProtocolError> {
        for event in self.plan_answer(candidate, verdict)? {
            self.apply(&event)?;
        }
        Ok(self.status)
    }

    /// Applies one event. This is the only state transition.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), ProtocolError> {
        match event {
            SessionEvent::Start(_) => Err(ProtocolError::UnexpectedStart),
            SessionEvent::Amend { .. } => Err(ProtocolError::AmendmentUnsupported),
            SessionEvent::Stop { status } => {
                if *status == self.status && status.is_terminal() {
                    Ok(())
                } else {
                    Err(ProtocolError::InconsistentStop { logged: *status, actual: self.status })
                }
            }
            SessionEvent::Answer { candidate, verdict } => {
                if self.status.is_terminal() {
                    return Err(ProtocolError::SessionTerminated(self.status));
                }
                let expected = self.ranking.get(self.cursor).map(|e| e.candidate);
                if expected != Some(*candidate) {
                    return Err(ProtocolError::StaleCandidate { expected, got: *candidate });
                }
                self.verdicts.push((*candidate, *verdict));
                self.cursor += 1;
                self.streak = if verdict.is_yes() { 0 } else { self.streak + 1 };
                if self.streak >= self.start.params.n_clean() {
                    self.status = SessionStatus::StoppedByCriterion;
                } else if self.cursor >= self.ranking.len() {
                    self.status = SessionStatus::Exhausted;
                }
                Ok(())
            }
        }
    }

    pub fn pool_size(&self) -> u64 {
        self.ranking.len() as u64
    }

    /// Share of the candidate pool that was annotated.
    pub fn fraction_annotated(&self) -> f64 {
        self.verdicts.len() as f64 / self.pool_size() as f64
    }
}

/// Outcome of replaying a verdict sequence under one parameter setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p_chance: f64,
    pub p_plus: f64,
    pub n_clean: u64,
    /// "Yes" verdicts before the stop.
    pub confirmed: usize,
    /// Verdicts consumed, including the one that triggered the stop.
    pub annotated: usize,
    pub stopped: bool,
    /// The log ran out before the stop and before the pool was exhausted, so
    /// `confirmed` may undercount.
    pub lower_bound: bool,
}

/// Number of verdicts consumed before the stopping rule fires, if it does.
pub fn stop_index(verdicts: &[Verdict], n_clean: u64) -> Option<usize> {
    if n_clean == 0 {
        return Some(0);
    }
    let mut streak = 0u64;
    for (k, v) in verdicts.iter().enumerate() {
        streak = if v.is_yes() { 0 } else { streak + 1 };
        if streak >= n_clean {
            return Some(k + 1);
        }
    }
    None
}

/// Replays one annotator's verdicts under each `(p_chance, p_plus)` grid
/// point and counts the issues that would have been confirmed.
pub fn sensitivity_sweep(
    verdicts: &[Verdict],
    pool_size: u64,
    grid: &[(f64, f64)],
    rounding: Rounding,
) -> Result<Vec<SweepPoint>, ProtocolError> {
    if grid.is_empty() {
        return Err(ProtocolError::EmptyGrid);
    }
    grid.iter()
        .map(|&(p_chance, p_plus)| {
            let n_clean = compute_n_clean_with(p_plus, p_chance, rounding)?;
            let stop = stop_index(verdicts, n_clean);
            let annotated = stop.unwrap_or(verdicts.len());
            Ok(SweepPoint {
                p_chance,
                p_plus,
                n_clean,
                confirmed: verdicts[..annotated].iter().filter(|v| v.is_yes()).count(),
                annotated,
                stopped: stop.is_some(),
                lower_bound: stop.is_none() && (verdicts.len() as u64) < pool_size,
            })
        })
        .collect()
}

/// The grid used for stopping-rule sensitivity: both probabilities start at
/// their defaults and each is raised alone, in steps of 0.05, up to 1.
pub fn default_sweep_grid() -> Vec<(f64, f64)> {
    let steps: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
    let mut grid: Vec<(f64, f64)> = steps.iter().map(|&pc| (pc, DEFAULT_P_PLUS)).collect();
    grid.extend(steps.iter().skip(1).map(|&pp| (DEFAULT_P_CHANCE, pp)));
    grid
}
