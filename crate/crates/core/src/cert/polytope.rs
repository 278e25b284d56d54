use serde::{Deserialize, Serialize};

use super::{grid::simplex_grid, lp, CertError};
use crate::model::InfoVector;
use crate::rational::{Cost, Rational};

/// `{p : rows . p <= rhs}` intersected with the probability simplex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfspaceSystem {
    pub rows: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
}

impl HalfspaceSystem {
    pub fn contains(&self, p: &InfoVector) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(row, b)| p.dot(row) <= *b)
    }

    /// The system without its last (slack) row.
    pub fn without_last(&self) -> HalfspaceSystem {
        let k = self.rows.len().saturating_sub(1);
        HalfspaceSystem { rows: self.rows[..k].to_vec(), rhs: self.rhs[..k].to_vec() }
    }

    /// A simplex point satisfying every row, found by exact LP.
    pub fn feasible_point(&self) -> Option<Vec<Rational>> {
        let dim = self.rows.first().map_or(0, Vec::len);
        lp::simplex_point(&self.rows, &self.rhs, dim)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bounds {
    /// `p` lies in `S_index`: `upper - epsilon = lower <= C*(p) <= upper`.
    Certified { index: usize, lower: Rational, upper: Rational },
    /// No polytope contains `p`; the best candidate at `p` and its cost.
    Uncovered { dominating: usize, cost: Rational },
}

/// The epsilon-optimality polytopes `S_i` of a set of candidate strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolytopeCert {
    pub epsilon: Rational,
    pub ell: Vec<Rational>,
    pub candidates: Vec<InfoVector>,
    pub basis_costs: Vec<Vec<Rational>>,
    pub systems: Vec<HalfspaceSystem>,
    pub nonempty: Vec<bool>,
    /// Grid resolution of `gaps`, if they were computed.
    pub grid: Option<u32>,
    pub gaps: Vec<InfoVector>,
}

pub(crate) fn finite_row(costs: &[Cost], strategy: usize) -> Result<Vec<Rational>, CertError> {
    costs
        .iter()
        .enumerate()
        .map(|(j, c)| c.finite().cloned().ok_or(CertError::InfiniteCost { strategy, scenario: j }))
        .collect()
}

/// `max_i (C(rho_i, p_i) - l . p_i)`: the smallest slack for which every
/// polytope contains its own candidate.
pub fn min_epsilon(basis_costs: &[Vec<Rational>], ell: &[Rational], candidates: &[InfoVector]) -> Rational {
    basis_costs.iter().zip(candidates).map(|(c, p)| p.dot(c) - p.dot(ell)).max().unwrap_or_default()
}

/// Row `m` of `H_i` is `C(rho_i, .) - C(rho_m, .)`, so row `i` is zero; the
/// last row is `C(rho_i, .) - l` with right-hand side `epsilon`.
pub fn build_system(basis_costs: &[Vec<Rational>], ell: &[Rational], epsilon: &Rational, i: usize) -> HalfspaceSystem {
    let ci = &basis_costs[i];
    let mut rows: Vec<Vec<Rational>> =
        basis_costs.iter().map(|cm| ci.iter().zip(cm).map(|(a, b)| a - b).collect()).collect();
    rows.push(ci.iter().zip(ell).map(|(a, b)| a - b).collect());
    let mut rhs = vec![Rational::zero(); basis_costs.len()];
    rhs.push(epsilon.clone());
    HalfspaceSystem { rows, rhs }
}

impl PolytopeCert {
    /// Builds every `S_i` and decides non-emptiness. Gaps are left empty.
    pub fn build(
        candidates: Vec<InfoVector>,
        basis_costs: &[Vec<Cost>],
        ell: &[Cost],
        epsilon: Rational,
    ) -> Result<PolytopeCert, CertError> {
        if candidates.is_empty() {
            return Err(CertError::NoCandidates);
        }
        if candidates.len() != basis_costs.len() {
            return Err(CertError::Dimension { expected: candidates.len(), got: basis_costs.len() });
        }
        if epsilon.is_negative() {
            return Err(CertError::NegativeEpsilon(epsilon));
        }
        let n = ell.len();
        for (i, row) in basis_costs.iter().enumerate() {
            if row.len() != n {
                return Err(CertError::Dimension { expected: n, got: row.len() });
            }
            if candidates[i].dim() != n {
                return Err(CertError::Dimension { expected: n, got: candidates[i].dim() });
            }
        }
        let basis: Vec<Vec<Rational>> =
            basis_costs.iter().enumerate().map(|(i, c)| finite_row(c, i)).collect::<Result<_, _>>()?;
        let ell: Vec<Rational> = ell
            .iter()
            .enumerate()
            .map(|(j, c)| c.finite().cloned().ok_or(CertError::InfiniteOptimum { scenario: j }))
            .collect::<Result<_, _>>()?;
        Ok(Self::from_finite(candidates, basis, ell, epsilon))
    }

    pub(crate) fn from_finite(
        candidates: Vec<InfoVector>,
        basis: Vec<Vec<Rational>>,
        ell: Vec<Rational>,
        epsilon: Rational,
    ) -> PolytopeCert {
        let systems: Vec<HalfspaceSystem> = (0..basis.len()).map(|i| build_system(&basis, &ell, &epsilon, i)).collect();
        let nonempty = systems.iter().map(|s| s.feasible_point().is_some()).collect();
        PolytopeCert { epsilon, ell, candidates, basis_costs: basis, systems, nonempty, grid: None, gaps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ell.len()
    }

    fn check_index(&self, i: usize) -> Result<(), CertError> {
        if i < self.len() {
            Ok(())
        } else {
            Err(CertError::IndexOutOfRange { index: i, len: self.len() })
        }
    }

    fn check_dim(&self, p: &InfoVector) -> Result<(), CertError> {
        if p.dim() == self.dim() {
            Ok(())
        } else {
            Err(CertError::Dimension { expected: self.dim(), got: p.dim() })
        }
    }

    /// The dominance polytope `T_i` (`S_i` without the slack row).
    pub fn dominance(&self, i: usize) -> HalfspaceSystem {
        self.systems[i].without_last()
    }

    pub fn membership(&self, i: usize, p: &InfoVector) -> Result<bool, CertError> {
        self.check_index(i)?;
        self.check_dim(p)?;
        Ok(self.systems[i].contains(p))
    }

    pub fn in_dominance(&self, i: usize, p: &InfoVector) -> Result<bool, CertError> {
        self.check_index(i)?;
        self.check_dim(p)?;
        Ok(self.dominance(i).contains(p))
    }

    pub fn check_nonempty(&self, i: usize) -> Result<bool, CertError> {
        self.check_index(i)?;
        Ok(self.systems[i].feasible_point().is_some())
    }

    /// `C(rho_i, p)`.
    pub fn cost(&self, i: usize, p: &InfoVector) -> Rational {
        p.dot(&self.basis_costs[i])
    }

    /// Least index with `p` in `S_i`.
    pub fn select(&self, p: &InfoVector) -> Option<usize> {
        (0..self.len()).find(|&i| self.systems[i].contains(p))
    }

    /// Candidate with the smallest cost at `p`; least index on ties.
    pub fn dominating(&self, p: &InfoVector) -> (usize, Rational) {
        (0..self.len())
            .map(|i| (self.cost(i, p), i))
            .min()
            .map(|(c, i)| (i, c))
            .expect("cert has at least one candidate")
    }

    pub fn bounds_for(&self, p: &InfoVector) -> Result<Bounds, CertError> {
        self.check_dim(p)?;
        Ok(match self.select(p) {
            Some(index) => {
                let upper = self.cost(index, p);
                Bounds::Certified { index, lower: &upper - &self.epsilon, upper }
            }
            None => {
                let (dominating, cost) = self.dominating(p);
                Bounds::Uncovered { dominating, cost }
            }
        })
    }

    /// Grid points (denominator `k`) lying in no `S_i`, lexicographically.
    pub fn coverage_gaps(&self, k: u32) -> Vec<InfoVector> {
        simplex_grid(self.dim(), k).into_iter().filter(|p| self.select(p).is_none()).collect()
    }

    /// Recomputes and stores the gap list at resolution `k`.
    pub fn refresh_gaps(&mut self, k: u32) {
        self.gaps = self.coverage_gaps(k);
        self.grid = Some(k);
    }

    pub fn to_json(&self) -> String {
        let doc = CertDoc {
            epsilon: self.epsilon.clone(),
            ell: self.ell.clone(),
            candidates: self.candidates.clone(),
            basis_costs: self.basis_costs.clone(),
            h: self.systems.iter().map(|s| s.rows.clone()).collect(),
            b: self.systems.iter().map(|s| s.rhs.clone()).collect(),
            nonempty: self.nonempty.clone(),
            grid: self.grid,
            gaps: self.gaps.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("cert serialization is infallible");
        text.push('\n');
        text
    }

    /// Parses a cert and checks that the stored systems match the stored
    /// costs, slack and candidates.
    pub fn from_json(text: &str) -> Result<PolytopeCert, CertError> {
        let doc: CertDoc = serde_json::from_str(text).map_err(|e| CertError::Json(e.to_string()))?;
        if doc.epsilon.is_negative() {
            return Err(CertError::NegativeEpsilon(doc.epsilon));
        }
        let n = doc.ell.len();
        if doc.candidates.is_empty() {
            return Err(CertError::NoCandidates);
        }
        let count = doc.candidates.len();
        for (len, expected) in
            [(doc.basis_costs.len(), count), (doc.h.len(), count), (doc.b.len(), count), (doc.nonempty.len(), count)]
        {
            if len != expected {
                return Err(CertError::Dimension { expected, got: len });
            }
        }
        for v in doc.candidates.iter().map(InfoVector::dim).chain(doc.basis_costs.iter().map(Vec::len)) {
            if v != n {
                return Err(CertError::Dimension { expected: n, got: v });
            }
        }
        let cert = Self::from_finite(doc.candidates, doc.basis_costs, doc.ell, doc.epsilon);
        for (i, s) in cert.systems.iter().enumerate() {
            if s.rows != doc.h[i] || s.rhs != doc.b[i] {
                return Err(CertError::Inconsistent(format!("system {} does not match basis costs", i + 1)));
            }
        }
        if cert.nonempty != doc.nonempty {
            return Err(CertError::Inconsistent("non-emptiness flags do not match".into()));
        }
        let mut cert = cert;
        cert.grid = doc.grid;
        cert.gaps = doc.gaps;
        Ok(cert)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertDoc {
    epsilon: Rational,
    ell: Vec<Rational>,
    candidates: Vec<InfoVector>,
    basis_costs: Vec<Vec<Rational>>,
    #[serde(rename = "H")]
    h: Vec<Vec<Vec<Rational>>>,
    b: Vec<Vec<Rational>>,
    nonempty: Vec<bool>,
    #[serde(default)]
    grid: Option<u32>,
    #[serde(default)]
    gaps: Vec<InfoVector>,
}
