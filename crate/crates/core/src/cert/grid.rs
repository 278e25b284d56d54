use crate::model::InfoVector;
use crate::rational::Rational;

/// Number of points `simplex_grid(n, k)` returns: `C(k + n - 1, n - 1)`.
pub fn grid_size(n: usize, k: u32) -> u128 {
    let (top, choose) = (k as u128 + n as u128 - 1, n.saturating_sub(1) as u128);
    (0..choose).fold(1u128, |acc, i| acc * (top - i) / (i + 1))
}

/// All points of the probability simplex in `n` coordinates whose entries
/// are multiples of `1/k`, in ascending lexicographic order.
pub fn simplex_grid(n: usize, k: u32) -> Vec<InfoVector> {
    let mut out = Vec::new();
    if n == 0 || k == 0 {
        return out;
    }
    let mut cur = vec![0u32; n];
    fn rec(pos: usize, left: u32, k: u32, cur: &mut [u32], out: &mut Vec<InfoVector>) {
        let n = cur.len();
        if pos + 1 == n {
            cur[pos] = left;
            let entries = cur.iter().map(|&c| Rational::new(c as i64, k as i64)).collect();
            out.push(InfoVector::new(entries).expect("grid point lies on the simplex"));
            return;
        }
        for c in 0..=left {
            cur[pos] = c;
            rec(pos + 1, left - c, k, cur, out);
        }
    }
    rec(0, k, k, &mut cur, &mut out);
    out
}
