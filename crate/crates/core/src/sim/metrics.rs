use serde::Serialize;

use super::{finish_csv, write_record, RunTrace, SimError};
use crate::rational::Rational;

/// Steps between two monitor resets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Round {
    pub start: usize,
    /// Last step, inclusive.
    pub end: usize,
    /// Ended with a reset rather than the horizon.
    pub complete: bool,
    /// Weight accumulated from `start` until each scenario goal is first seen.
    pub reach: Vec<Option<Rational>>,
    /// `sum_j p_j * reach_j` with `p` taken at `start`; `None` if a weighted
    /// scenario was never reached.
    pub cost: Option<Rational>,
    pub excluded: bool,
}

pub(crate) fn rounds(trace: &RunTrace) -> Vec<Round> {
    let n = trace.num_scenarios;
    let mut out = Vec::new();
    let mut start = 0;
    let mut acc = Rational::zero();
    let mut reach: Vec<Option<Rational>> = vec![None; n];
    let mut excluded = false;
    let close = |start: usize, end: usize, complete: bool, reach: Vec<Option<Rational>>, excluded: bool| {
        let p = &trace.steps[start].p;
        let mut cost = Some(Rational::zero());
        for (j, r) in reach.iter().enumerate() {
            if p.get(j).is_positive() {
                cost = match (cost, r) {
                    (Some(c), Some(r)) => Some(c + p.get(j) * r),
                    _ => None,
                };
            }
        }
        Round { start, end, complete, reach, cost, excluded }
    };
    for (t, r) in trace.steps.iter().enumerate() {
        for (j, slot) in reach.iter_mut().enumerate() {
            if slot.is_none() && r.scenarios_hit >> j & 1 == 1 {
                *slot = Some(acc.clone());
            }
        }
        excluded |= r.excluded;
        acc += &r.weight;
        if r.reset {
            out.push(close(start, t, true, std::mem::replace(&mut reach, vec![None; n]), excluded));
            start = t + 1;
            acc = Rational::zero();
            excluded = false;
        }
    }
    if start < trace.steps.len() {
        out.push(close(start, trace.steps.len() - 1, false, reach, excluded));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GuaranteeStats {
    pub visits: usize,
    /// Longest stretch without a visit, counting the stretch before the first
    /// visit and after the last one.
    pub max_gap_steps: usize,
    /// Largest weight accumulated between consecutive visits.
    pub max_gap_cost: Option<Rational>,
    pub mean_gap_cost: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceMetrics {
    pub executor: String,
    pub run: usize,
    pub steps: usize,
    pub total_weight: Rational,
    /// Per step, the weight times the information mass of the scenarios not
    /// yet reached in the current round, skipping excluded steps.
    pub total_cost: Rational,
    pub switches: usize,
    pub rounds: usize,
    pub mean_round_cost: Option<Rational>,
    pub guarantees: Vec<GuaranteeStats>,
}

pub(crate) fn trace_metrics(trace: &RunTrace) -> TraceMetrics {
    let steps = &trace.steps;
    let mut prefix = Vec::with_capacity(steps.len() + 1);
    prefix.push(Rational::zero());
    for r in steps {
        let last = prefix.last().cloned().unwrap_or_default();
        prefix.push(last + &r.weight);
    }
    let mut total_cost = Rational::zero();
    let mut seen = 0u64;
    for r in steps {
        seen |= r.scenarios_hit;
        if !r.excluded && !r.weight.is_zero() {
            let pending: Rational =
                (0..trace.num_scenarios).filter(|&j| seen >> j & 1 == 0).map(|j| r.p.get(j).clone()).sum();
            total_cost += &(&r.weight * &pending);
        }
        if r.reset {
            seen = 0;
        }
    }
    let rounds = rounds(trace);
    let costs: Vec<&Rational> =
        rounds.iter().filter(|r| r.complete && !r.excluded).filter_map(|r| r.cost.as_ref()).collect();
    let guarantees = (0..trace.num_guarantees)
        .map(|j| {
            let times = trace.visit_times(j);
            let len = steps.len();
            let mut max_gap_steps = match (times.first(), times.last()) {
                (Some(&a), Some(&b)) => a.max(len - b),
                _ => len,
            };
            let mut gap_costs = Vec::new();
            for w in times.windows(2) {
                max_gap_steps = max_gap_steps.max(w[1] - w[0]);
                gap_costs.push(&prefix[w[1]] - &prefix[w[0]]);
            }
            GuaranteeStats {
                visits: times.len(),
                max_gap_steps,
                max_gap_cost: gap_costs.iter().max().cloned(),
                mean_gap_cost: mean(gap_costs.iter()),
            }
        })
        .collect();
    TraceMetrics {
        executor: trace.executor.name().to_string(),
        run: trace.run,
        steps: steps.len(),
        total_weight: prefix.last().cloned().unwrap_or_default(),
        total_cost,
        switches: steps.iter().filter(|r| r.switched).count(),
        rounds: costs.len(),
        mean_round_cost: mean(costs.into_iter()),
        guarantees,
    }
}

fn mean<'a>(xs: impl Iterator<Item = &'a Rational>) -> Option<Rational> {
    let (sum, count) = xs.fold((Rational::zero(), 0i64), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / Rational::from_int(count))
}

fn mean_of(xs: impl Iterator<Item = Rational>) -> Rational {
    let v: Vec<Rational> = xs.collect();
    mean(v.iter()).unwrap_or_default()
}

fn mean_opt(xs: impl Iterator<Item = Option<Rational>>) -> Option<Rational> {
    let v: Vec<Rational> = xs.flatten().collect();
    mean(v.iter())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeanGuarantee {
    pub visits: Rational,
    pub max_gap_steps: Rational,
    pub max_gap_cost: Option<Rational>,
    pub mean_gap_cost: Option<Rational>,
}

/// Field-wise averages over traces; optional fields average the traces that
/// have a value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeanMetrics {
    pub runs: usize,
    pub steps: Rational,
    pub total_weight: Rational,
    pub total_cost: Rational,
    pub switches: Rational,
    pub rounds: Rational,
    pub mean_round_cost: Option<Rational>,
    pub guarantees: Vec<MeanGuarantee>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricsSummary {
    pub rows: Vec<TraceMetrics>,
    pub mean: MeanMetrics,
}

pub fn metrics_summary(traces: &[RunTrace]) -> Result<MetricsSummary, SimError> {
    if traces.is_empty() {
        return Err(SimError::NoTraces);
    }
    let rows: Vec<TraceMetrics> = traces.iter().map(RunTrace::metrics).collect();
    let int = |x: usize| Rational::from_int(x as i64);
    let m = rows[0].guarantees.len();
    let mean = MeanMetrics {
        runs: rows.len(),
        steps: mean_of(rows.iter().map(|r| int(r.steps))),
        total_weight: mean_of(rows.iter().map(|r| r.total_weight.clone())),
        total_cost: mean_of(rows.iter().map(|r| r.total_cost.clone())),
        switches: mean_of(rows.iter().map(|r| int(r.switches))),
        rounds: mean_of(rows.iter().map(|r| int(r.rounds))),
        mean_round_cost: mean_opt(rows.iter().map(|r| r.mean_round_cost.clone())),
        guarantees: (0..m)
            .map(|j| MeanGuarantee {
                visits: mean_of(rows.iter().map(|r| int(r.guarantees[j].visits))),
                max_gap_steps: mean_of(rows.iter().map(|r| int(r.guarantees[j].max_gap_steps))),
                max_gap_cost: mean_opt(rows.iter().map(|r| r.guarantees[j].max_gap_cost.clone())),
                mean_gap_cost: mean_opt(rows.iter().map(|r| r.guarantees[j].mean_gap_cost.clone())),
            })
            .collect(),
    };
    Ok(MetricsSummary { rows, mean })
}

fn opt(x: &Option<Rational>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl MetricsSummary {
    /// One row per trace; empty cells for undefined values.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let m = self.mean.guarantees.len();
        let mut header =
            vec!["executor", "run", "steps", "total_weight", "total_cost", "switches", "rounds", "mean_round_cost"]
                .into_iter()
                .map(String::from)
                .collect::<Vec<_>>();
        for j in 1..=m {
            for field in ["visits", "max_gap_steps", "max_gap_cost", "mean_gap_cost"] {
                header.push(format!("g{j}_{field}"));
            }
        }
        write_record(&mut w, &header);
        for r in &self.rows {
            let mut cells = vec![
                r.executor.clone(),
                r.run.to_string(),
                r.steps.to_string(),
                r.total_weight.to_string(),
                r.total_cost.to_string(),
                r.switches.to_string(),
                r.rounds.to_string(),
                opt(&r.mean_round_cost),
            ];
            for g in &r.guarantees {
                cells.extend([
                    g.visits.to_string(),
                    g.max_gap_steps.to_string(),
                    opt(&g.max_gap_cost),
                    opt(&g.mean_gap_cost),
                ]);
            }
            write_record(&mut w, &cells);
        }
        finish_csv(w)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }
}
