//! Epsilon-optimality polytopes over the information simplex.
//!
//! For candidate strategies `rho_1..rho_N` with basis-cost rows `c_i`, the
//! polytope `S_i` holds the information vectors where `rho_i` is no worse
//! than any other candidate and within `epsilon` of the lower bound `l . p`.
//! Inside `S_i`, `C(rho_i, p) - epsilon <= C*(p) <= C(rho_i, p)`.

mod grid;
mod lp;
mod polytope;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::{self, Mode};
use crate::model::InfoVector;
use crate::rational::Rational;
use crate::synthesis::{Strategy, SynthError, Synthesizer};

pub use grid::{grid_size, simplex_grid};
pub use lp::{feasible_point, simplex_point};
pub use polytope::{build_system, min_epsilon, Bounds, HalfspaceSystem, PolytopeCert};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CertError {
    #[error("strategy {} has infinite cost for scenario {}", strategy + 1, scenario + 1)]
    InfiniteCost { strategy: usize, scenario: usize },
    #[error("optimal cost for scenario {} is infinite", scenario + 1)]
    InfiniteOptimum { scenario: usize },
    #[error("epsilon must be non-negative, got {0}")]
    NegativeEpsilon(Rational),
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("strategy index {} out of range (have {len})", index + 1)]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no candidate instantiations")]
    NoCandidates,
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error("malformed cert: {0}")]
    Json(String),
    #[error("inconsistent cert: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// A cert together with the strategies it certifies, in candidate order.
#[derive(Debug, Clone)]
pub struct Certification {
    pub cert: PolytopeCert,
    pub strategies: Vec<Strategy>,
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    /// Defaults to the smallest slack that keeps every polytope non-empty.
    pub epsilon: Option<Rational>,
    pub grid: u32,
    pub mode: Mode,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { epsilon: None, grid: 4, mode: Mode::default() }
    }
}

fn finite_ell(synth: &Synthesizer) -> Result<Vec<Rational>, CertError> {
    synth
        .optimal_basis_costs()
        .iter()
        .enumerate()
        .map(|(j, c)| c.finite().cloned().ok_or(CertError::InfiniteOptimum { scenario: j }))
        .collect()
}

/// Synthesizes one strategy per candidate and certifies them.
pub fn certify(
    synth: &Synthesizer,
    candidates: Vec<InfoVector>,
    opts: &CertifyOptions,
) -> Result<Certification, CertError> {
    if candidates.is_empty() {
        return Err(CertError::NoCandidates);
    }
    let n = synth.num_scenarios();
    if let Some(p) = candidates.iter().find(|p| p.dim() != n) {
        return Err(CertError::Dimension { expected: n, got: p.dim() });
    }
    let mut strategies = exec::try_map(opts.mode, &candidates, |p| synth.synthesize(p))?;
    for (i, st) in strategies.iter_mut().enumerate() {
        st.id = i;
    }
    let basis: Vec<Vec<Rational>> = strategies
        .iter()
        .enumerate()
        .map(|(i, st)| polytope::finite_row(&st.basis_costs, i))
        .collect::<Result<_, _>>()?;
    let ell = finite_ell(synth)?;
    let epsilon = match &opts.epsilon {
        Some(e) if e.is_negative() => return Err(CertError::NegativeEpsilon(e.clone())),
        Some(e) => e.clone(),
        None => min_epsilon(&basis, &ell, &candidates),
    };
    let mut cert = PolytopeCert::from_finite(candidates, basis, ell, epsilon);
    cert.refresh_gaps(opts.grid);
    Ok(Certification { cert, strategies })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapSelection {
    /// Lexicographically first gap not yet attempted.
    First,
    /// Uniformly random unattempted gap from a seeded generator.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandReport {
    pub rounds: usize,
    pub added: Vec<InfoVector>,
    /// Gaps whose own optimal strategy does not cover them at this epsilon.
    pub uncoverable: Vec<InfoVector>,
    /// True when no grid point is left uncovered.
    pub covered: bool,
}

/// Adds candidates at coverage gaps until the grid is covered, every gap has
/// been tried, or `max_rounds` attempts were made. A candidate is kept only
/// if its polytope covers the gap it was synthesized for.
pub fn expand_candidates(
    synth: &Synthesizer,
    certification: &mut Certification,
    grid_k: u32,
    max_rounds: usize,
    selection: GapSelection,
) -> Result<ExpandReport, CertError> {
    if max_rounds == 0 {
        return Err(CertError::NoRounds);
    }
    let mut rng = match selection {
        GapSelection::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        GapSelection::First => None,
    };
    let mut attempted: BTreeSet<InfoVector> = BTreeSet::new();
    let mut report = ExpandReport { rounds: 0, added: Vec::new(), uncoverable: Vec::new(), covered: false };
    while report.rounds < max_rounds {
        let open: Vec<InfoVector> =
            certification.cert.coverage_gaps(grid_k).into_iter().filter(|g| !attempted.contains(g)).collect();
        if open.is_empty() {
            break;
        }
        let gap = match rng.as_mut() {
            Some(r) => open[r.gen_range(0..open.len())].clone(),
            None => open[0].clone(),
        };
        attempted.insert(gap.clone());
        report.rounds += 1;
        let mut st = synth.synthesize(&gap)?;
        let index = certification.strategies.len();
        let row = polytope::finite_row(&st.basis_costs, index)?;
        let cert = &certification.cert;
        let mut candidates = cert.candidates.clone();
        candidates.push(gap.clone());
        let mut basis = cert.basis_costs.clone();
        basis.push(row);
        let next = PolytopeCert::from_finite(candidates, basis, cert.ell.clone(), cert.epsilon.clone());
        if next.select(&gap).is_some() {
            st.id = index;
            certification.strategies.push(st);
            certification.cert = next;
            report.added.push(gap);
        } else {
            report.uncoverable.push(gap);
        }
    }
    certification.cert.refresh_gaps(grid_k);
    report.covered = certification.cert.gaps.is_empty();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionRow {
    pub point: InfoVector,
    /// Cheapest candidate at the point, least index on ties.
    pub winner: usize,
    /// The point lies in some `S_i`.
    pub certified: bool,
    /// Least `i` with the point in `S_i`.
    pub chosen: Option<usize>,
}

pub fn partition(cert: &PolytopeCert, grid_k: u32) -> Vec<PartitionRow> {
    simplex_grid(cert.dim(), grid_k)
        .into_iter()
        .map(|point| {
            let chosen = cert.select(&point);
            let (winner, _) = cert.dominating(&point);
            PartitionRow { point, winner, certified: chosen.is_some(), chosen }
        })
        .collect()
}

/// CSV with columns `q1..qn, winner, certified, chosen`; indices are
/// 1-based and `chosen` is empty for uncovered points.
pub fn partition_csv(cert: &PolytopeCert, rows: &[PartitionRow]) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=cert.dim()).map(|j| format!("q{j}")).collect();
    let _ = writeln!(out, "{},winner,certified,chosen", header.join(","));
    for r in rows {
        let coords: Vec<String> = r.point.entries().iter().map(ToString::to_string).collect();
        let chosen = r.chosen.map(|i| (i + 1).to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", coords.join(","), r.winner + 1, r.certified, chosen);
    }
    out
}

fn fmt_vec(xs: &[Rational]) -> String {
    let parts: Vec<String> = xs.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(", "))
}

/// Human-readable summary of a cert.
pub fn report(cert: &PolytopeCert) -> String {
    let mut out = String::new();
    let eps_min = min_epsilon(&cert.basis_costs, &cert.ell, &cert.candidates);
    let _ = writeln!(out, "epsilon_min: {eps_min}");
    let _ = writeln!(out, "epsilon: {}", cert.epsilon);
    let _ = writeln!(out, "ell: {}", fmt_vec(&cert.ell));
    for i in 0..cert.len() {
        let _ = writeln!(
            out,
            "strategy {}: candidate {}, basis costs {}, nonempty {}",
            i + 1,
            cert.candidates[i],
            fmt_vec(&cert.basis_costs[i]),
            cert.nonempty[i]
        );
    }
    match cert.grid {
        Some(k) => {
            let _ = writeln!(out, "gaps at grid {k}: {}", cert.gaps.len());
        }
        None => {
            let _ = writeln!(out, "gaps: not computed");
        }
    }
    out
}
