//! Exact phase-one simplex for feasibility of `{x >= 0 : A x <= b, E x = f}`.

use crate::rational::Rational;

/// A point of the system, or `None` when it is infeasible. Uses Bland's rule,
/// so it terminates on degenerate systems.
pub fn feasible_point(
    ub_rows: &[Vec<Rational>],
    ub_rhs: &[Rational],
    eq_rows: &[Vec<Rational>],
    eq_rhs: &[Rational],
    num_vars: usize,
) -> Option<Vec<Rational>> {
    let m_ub = ub_rows.len();
    let m = m_ub + eq_rows.len();
    // columns: x, one slack per inequality, then artificials
    let mut art_rows = Vec::new();
    for i in 0..m {
        let (rhs, is_eq) = if i < m_ub { (&ub_rhs[i], false) } else { (&eq_rhs[i - m_ub], true) };
        if is_eq || rhs.is_negative() {
            art_rows.push(i);
        }
    }
    let n_slack = m_ub;
    let n_art = art_rows.len();
    let width = num_vars + n_slack + n_art;
    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let (row, rhs) = if i < m_ub { (&ub_rows[i], &ub_rhs[i]) } else { (&eq_rows[i - m_ub], &eq_rhs[i - m_ub]) };
        let flip = rhs.is_negative();
        let mut t = vec![Rational::zero(); width + 1];
        for (j, a) in row.iter().enumerate() {
            t[j] = if flip { -a } else { a.clone() };
        }
        if i < m_ub {
            t[num_vars + i] = if flip { -Rational::one() } else { Rational::one() };
        }
        t[width] = if flip { -rhs } else { rhs.clone() };
        match art_rows.iter().position(|&r| r == i) {
            Some(k) => {
                t[num_vars + n_slack + k] = Rational::one();
                basis.push(num_vars + n_slack + k);
            }
            None => basis.push(num_vars + i),
        }
        tab.push(t);
    }
    // reduced costs of the phase-one objective (sum of artificials)
    let mut cost = vec![Rational::zero(); width + 1];
    for &i in &art_rows {
        for j in 0..=width {
            cost[j] -= &tab[i][j];
        }
    }
    for k in 0..n_art {
        cost[num_vars + n_slack + k] = Rational::zero();
    }
    while let Some(enter) = (0..width).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if !tab[i][enter].is_positive() {
                continue;
            }
            let ratio = &tab[i][width] / &tab[i][enter];
            let better = match &leave {
                None => true,
                Some((l, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*l]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let Some((row, _)) = leave else {
            // unbounded ray; cannot happen for a bounded-below objective
            break;
        };
        pivot(&mut tab, &mut cost, row, enter);
        basis[row] = enter;
    }
    // phase-one optimum is minus the stored objective entry
    if !cost[width].is_zero() {
        return None;
    }
    let mut x = vec![Rational::zero(); num_vars];
    for (i, &b) in basis.iter().enumerate() {
        if b < num_vars {
            x[b] = tab[i][width].clone();
        }
    }
    Some(x)
}

fn pivot(tab: &mut [Vec<Rational>], cost: &mut [Rational], row: usize, col: usize) {
    let p = tab[row][col].clone();
    for v in tab[row].iter_mut() {
        *v = &*v / &p;
    }
    let prow = tab[row].clone();
    for (i, t) in tab.iter_mut().enumerate() {
        if i == row || t[col].is_zero() {
            continue;
        }
        let f = t[col].clone();
        for (v, pv) in t.iter_mut().zip(&prow) {
            if !pv.is_zero() {
                *v -= &(&f * pv);
            }
        }
    }
    if !cost[col].is_zero() {
        let f = cost[col].clone();
        for (v, pv) in cost.iter_mut().zip(&prow) {
            if !pv.is_zero() {
                *v -= &(&f * pv);
            }
        }
    }
}

/// A point of `{p in simplex : H p <= b}`, if any.
pub fn simplex_point(rows: &[Vec<Rational>], rhs: &[Rational], dim: usize) -> Option<Vec<Rational>> {
    feasible_point(rows, rhs, &[vec![Rational::one(); dim]], &[Rational::one()], dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn r(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| rat(x, 1)).collect()
    }

    #[test]
    fn star_slack_row_forces_vertex() {
        // 2 q2 + 6 q3 <= 0 on the simplex leaves only e1
        let p = simplex_point(&[r(&[0, 2, 6])], &r(&[0]), 3).unwrap();
        assert_eq!(p, r(&[1, 0, 0]));
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        assert_eq!(simplex_point(&[r(&[1, 1])], &r(&[-1]), 2), None);
        assert_eq!(feasible_point(&[r(&[1]), r(&[-1])], &r(&[1, -2]), &[], &[], 1), None);
    }

    #[test]
    fn negative_rhs_with_feasible_region() {
        // x >= 2 and x <= 3
        let x = feasible_point(&[r(&[-1]), r(&[1])], &r(&[-2, 3]), &[], &[], 1).unwrap();
        assert!(x[0] >= rat(2, 1) && x[0] <= rat(3, 1));
    }

    fn dot(a: &[Rational], b: &[Rational]) -> Rational {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    proptest! {
        #[test]
        fn witness_satisfies_system_and_grid_points_imply_feasibility(
            rows in prop::collection::vec(prop::collection::vec(-6i64..=6, 3), 1..5),
            rhs in prop::collection::vec(-3i64..=3, 5),
        ) {
            let rows: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect();
            let rhs: Vec<Rational> = rhs[..rows.len()].iter().map(|&x| rat(x, 1)).collect();
            let found = simplex_point(&rows, &rhs, 3);
            if let Some(p) = &found {
                prop_assert!(p.iter().all(|x| !x.is_negative()));
                prop_assert_eq!(p.iter().sum::<Rational>(), Rational::one());
                for (row, b) in rows.iter().zip(&rhs) {
                    prop_assert!(dot(row, p) <= *b);
                }
            }
            let k = 6;
            for a in 0..=k {
                for b in 0..=k - a {
                    let p = vec![rat(a, k), rat(b, k), rat(k - a - b, k)];
                    if rows.iter().zip(&rhs).all(|(row, c)| dot(row, &p) <= *c) {
                        prop_assert!(found.is_some(), "grid point {:?} feasible but LP says empty", p);
                    }
                }
            }
        }
    }
}
