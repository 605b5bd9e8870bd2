//! Scripted annotators for tests and demos.

use std::collections::BTreeSet;
use std::path::Path;
use std::thread;
use std::time::Duration;

use dqclean_core::protocol::Verdict;

use crate::error::{Error, Result};
use crate::store::{NewSession, NextView, SessionView, Store};

/// How a scripted annotator answers.
#[derive(Debug, Clone, PartialEq)]
pub enum Script {
    /// "yes" exactly for the listed candidates (id sets; order-free for pairs).
    Truth(BTreeSet<Vec<String>>),
    /// Fixed verdicts in order; `fallback` once they run out.
    Sequence { verdicts: Vec<Verdict>, fallback: Verdict },
}

impl Script {
    /// Reads a truth file: one candidate per line, ids separated by spaces
    /// or commas. `#` starts a comment.
    pub fn truth_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Script::truth(text.lines().filter_map(|line| {
            let line = line.split('#').next().unwrap_or_default();
            let ids: Vec<String> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            (!ids.is_empty()).then_some(ids)
        })))
    }

    pub fn truth<I, C, S>(candidates: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Script::Truth(
            candidates
                .into_iter()
                .map(|c| {
                    let mut ids: Vec<String> = c.into_iter().map(Into::into).collect();
                    ids.sort();
                    ids
                })
                .collect(),
        )
    }

    /// Parses `y,n,yes,no,...`.
    pub fn sequence(s: &str, fallback: Verdict) -> Result<Self> {
        let verdicts = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| match t {
                "y" | "yes" | "1" => Ok(Verdict::Yes),
                "n" | "no" | "0" => Ok(Verdict::No),
                other => Err(Error::InvalidRequest(format!("bad verdict `{other}`"))),
            })
            .collect::<Result<_>>()?;
        Ok(Script::Sequence { verdicts, fallback })
    }

    fn verdict(&self, step: usize, ids: &[String]) -> Verdict {
        match self {
            Script::Truth(truth) => {
                let mut key = ids.to_vec();
                key.sort();
                Verdict::from(truth.contains(&key))
            }
            Script::Sequence { verdicts, fallback } => verdicts.get(step).copied().unwrap_or(*fallback),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    pub max_answers: Option<usize>,
    pub delay: Option<Duration>,
}

/// Starts a session and answers until it terminates or `max_answers` is hit.
pub fn simulate(store: &Store, req: &NewSession, script: &Script, opts: &SimulationOptions) -> Result<SessionView> {
    let created = store.create_session(req)?;
    let id = created.session_id;
    let mut step = 0;
    while opts.max_answers.is_none_or(|m| step < m) {
        let NextView::Candidate { candidate, .. } = store.next(&id)? else { break };
        store.answer(&id, &candidate.ids, script.verdict(step, &candidate.ids))?;
        step += 1;
        if let Some(d) = opts.delay {
            thread::sleep(d);
        }
    }
    store.status(&id)
}
