use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use super::SimError;
use crate::model::{normalize_info, parse_vector, InfoVector};
use crate::rational::Rational;

/// Posterior proportional to `prior_j * likelihood_j`.
pub fn bayes_update(prior: &InfoVector, likelihood: &[Rational]) -> Result<InfoVector, SimError> {
    if likelihood.len() != prior.dim() {
        return Err(SimError::Dimension { expected: prior.dim(), got: likelihood.len() });
    }
    if likelihood.iter().any(Rational::is_negative) {
        return Err(SimError::Stream("likelihoods must be non-negative".into()));
    }
    let raw: Vec<Rational> = prior.entries().iter().zip(likelihood).map(|(p, l)| p * l).collect();
    normalize_info(&raw).map_err(|_| SimError::ZeroEvidence)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroEvidence {
    /// Keep the prior and continue.
    Keep,
    #[default]
    Abort,
}

/// Time-varying runtime information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfoStream {
    Constant(InfoVector),
    /// `(step, vector)` pairs with strictly increasing steps, the first at 0.
    Scripted(Vec<(usize, InfoVector)>),
    Bayes(BayesStream),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BayesStream {
    pub prior: InfoVector,
    pub likelihoods: BTreeMap<String, Vec<Rational>>,
    /// `(step, symbol)` pairs with non-decreasing steps.
    pub schedule: Vec<(usize, String)>,
    pub on_zero_evidence: ZeroEvidence,
    /// Also observe `at:<label>` whenever the play enters scenario goal `label`.
    pub observe_goals: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VectorRepr {
    List(Vec<Rational>),
    Text(String),
}

impl VectorRepr {
    fn into_info(self) -> Result<InfoVector, SimError> {
        let raw = match self {
            VectorRepr::List(v) => v,
            VectorRepr::Text(s) => parse_vector(&s).map_err(|e| SimError::Stream(e.to_string()))?,
        };
        normalize_info(&raw).map_err(|e| SimError::Stream(e.to_string()))
    }
}

#[derive(Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum StreamDoc {
    Constant {
        vector: VectorRepr,
    },
    Scripted {
        events: Vec<(usize, VectorRepr)>,
    },
    Bayes {
        prior: VectorRepr,
        likelihoods: BTreeMap<String, Vec<Rational>>,
        #[serde(default)]
        schedule: Vec<(usize, String)>,
        #[serde(default)]
        on_zero_evidence: ZeroEvidence,
        #[serde(default)]
        observe_goals: bool,
    },
}

impl InfoStream {
    pub fn from_json(text: &str) -> Result<InfoStream, SimError> {
        let doc: StreamDoc = serde_json::from_str(text).map_err(|e| SimError::Stream(e.to_string()))?;
        let stream = match doc {
            StreamDoc::Constant { vector } => InfoStream::Constant(vector.into_info()?),
            StreamDoc::Scripted { events } => InfoStream::Scripted(
                events.into_iter().map(|(t, v)| Ok((t, v.into_info()?))).collect::<Result<_, SimError>>()?,
            ),
            StreamDoc::Bayes { prior, likelihoods, schedule, on_zero_evidence, observe_goals } => {
                InfoStream::Bayes(BayesStream {
                    prior: prior.into_info()?,
                    likelihoods,
                    schedule,
                    on_zero_evidence,
                    observe_goals,
                })
            }
        };
        stream.check()?;
        Ok(stream)
    }

    pub fn dim(&self) -> usize {
        match self {
            InfoStream::Constant(p) => p.dim(),
            InfoStream::Scripted(ev) => ev.first().map_or(0, |(_, p)| p.dim()),
            InfoStream::Bayes(b) => b.prior.dim(),
        }
    }

    /// Checks ordering, dimensions and likelihood tables.
    pub fn check(&self) -> Result<(), SimError> {
        let n = self.dim();
        match self {
            InfoStream::Constant(_) => {}
            InfoStream::Scripted(ev) => {
                match ev.first() {
                    None => return Err(SimError::Stream("scripted stream has no events".into())),
                    Some((t, _)) if *t != 0 => {
                        return Err(SimError::Stream("first scripted event must be at step 0".into()))
                    }
                    _ => {}
                }
                if ev.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(SimError::Stream("scripted steps must be strictly increasing".into()));
                }
                if let Some((_, p)) = ev.iter().find(|(_, p)| p.dim() != n) {
                    return Err(SimError::Dimension { expected: n, got: p.dim() });
                }
            }
            InfoStream::Bayes(b) => {
                for (sym, l) in &b.likelihoods {
                    if l.len() != n {
                        return Err(SimError::Dimension { expected: n, got: l.len() });
                    }
                    if l.iter().any(Rational::is_negative) {
                        return Err(SimError::Stream(format!("likelihood for {sym:?} has a negative entry")));
                    }
                }
                if b.schedule.windows(2).any(|w| w[0].0 > w[1].0) {
                    return Err(SimError::Stream("schedule steps must be non-decreasing".into()));
                }
                if let Some((_, sym)) = b.schedule.iter().find(|(_, s)| !b.likelihoods.contains_key(s)) {
                    return Err(SimError::Stream(format!("no likelihood for observation {sym:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Replays a stream step by step.
#[derive(Debug, Clone)]
pub struct StreamCursor<'a> {
    stream: &'a InfoStream,
    current: Arc<InfoVector>,
    next: usize,
    dirty: bool,
}

impl<'a> StreamCursor<'a> {
    /// Positioned at step 0, with step-0 events applied.
    pub fn new(stream: &'a InfoStream) -> Result<Self, SimError> {
        stream.check()?;
        let current = match stream {
            InfoStream::Constant(p) => p.clone(),
            InfoStream::Scripted(ev) => ev[0].1.clone(),
            InfoStream::Bayes(b) => b.prior.clone(),
        };
        let mut c = StreamCursor { stream, current: Arc::new(current), next: 0, dirty: true };
        c.advance_to(0)?;
        Ok(c)
    }

    pub fn current(&self) -> &Arc<InfoVector> {
        &self.current
    }

    /// True if the vector changed since the last call.
    pub fn take_changed(&mut self) -> bool {
        std::mem::replace(&mut self.dirty, false)
    }

    /// Applies every event scheduled at or before `step`.
    pub fn advance_to(&mut self, step: usize) -> Result<(), SimError> {
        match self.stream {
            InfoStream::Constant(_) => {}
            InfoStream::Scripted(ev) => {
                while self.next < ev.len() && ev[self.next].0 <= step {
                    if *self.current != ev[self.next].1 {
                        self.current = Arc::new(ev[self.next].1.clone());
                        self.dirty = true;
                    }
                    self.next += 1;
                }
            }
            InfoStream::Bayes(b) => {
                while self.next < b.schedule.len() && b.schedule[self.next].0 <= step {
                    let sym = &b.schedule[self.next].1;
                    self.next += 1;
                    self.observe(sym)?;
                }
            }
        }
        Ok(())
    }

    /// Bayesian observation; ignored for non-Bayes streams and unknown symbols.
    pub fn observe(&mut self, symbol: &str) -> Result<(), SimError> {
        let InfoStream::Bayes(b) = self.stream else { return Ok(()) };
        let Some(l) = b.likelihoods.get(symbol) else { return Ok(()) };
        match bayes_update(&self.current, l) {
            Ok(post) => {
                if post != *self.current {
                    self.current = Arc::new(post);
                    self.dirty = true;
                }
                Ok(())
            }
            Err(SimError::ZeroEvidence) if b.on_zero_evidence == ZeroEvidence::Keep => Ok(()),
            Err(e) => Err(e),
        }
    }

    pub fn observes_goals(&self) -> bool {
        matches!(self.stream, InfoStream::Bayes(b) if b.observe_goals)
    }
}
