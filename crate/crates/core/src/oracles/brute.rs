//! Exact conditional moments of S_12 by enumerating the labels of the free nodes.

use crate::clique::clique_template;
use crate::error::{Error, Result};
use crate::num::KahanSum;
use crate::sbm::{derived_probs, Conditioning};

/// Largest admissible K^{n−2}.
pub const BRUTE_BUDGET: u64 = 10_000_000;

struct Injections {
    /// sorted pair indices (into an n×n table) touched by each injection
    edge_sets: Vec<Vec<usize>>,
}

fn injections(n: usize, m: usize) -> Result<Injections> {
    let t = clique_template(m)?;
    let mut edge_sets = Vec::new();
    let mut tuple = vec![0usize, 1];
    fn rec(n: usize, t: &[(usize, usize)], m: usize, tuple: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if tuple.len() == m {
            let mut es: Vec<usize> = t
                .iter()
                .map(|&(a, b)| {
                    let (u, v) = (tuple[a].min(tuple[b]), tuple[a].max(tuple[b]));
                    u * n + v
                })
                .collect();
            es.sort_unstable();
            out.push(es);
            return;
        }
        for u in 2..n {
            if !tuple.contains(&u) {
                tuple.push(u);
                rec(n, t, m, tuple, out);
                tuple.pop();
            }
        }
    }
    rec(n, &t.edges, m, &mut tuple, &mut edge_sets);
    Ok(Injections { edge_sets })
}

/// (E[S | z], E[S² | z]) from per-edge conditional moments of the centered entries.
fn moments_given(inj: &Injections, mu: &[f64], s2: &[f64]) -> (f64, f64) {
    let mut first = KahanSum::new();
    let mut second = KahanSum::new();
    for a in &inj.edge_sets {
        first.add(a.iter().map(|&e| mu[e]).product());
        for b in &inj.edge_sets {
            // merge two sorted edge lists: shared edges contribute E[Y²], others E[Y]
            let (mut i, mut j, mut p) = (0, 0, 1.0);
            while i < a.len() || j < b.len() {
                if j == b.len() || (i < a.len() && a[i] < b[j]) {
                    p *= mu[a[i]];
                    i += 1;
                } else if i == a.len() || b[j] < a[i] {
                    p *= mu[b[j]];
                    j += 1;
                } else {
                    p *= s2[a[i]];
                    i += 1;
                    j += 1;
                }
            }
            second.add(p);
        }
    }
    (first.value(), second.value())
}

/// Exact (mean, variance) of S_12 under the requested conditioning on (z_1, z_2),
/// for n ≤ 8. Nodes 0 and 1 play the roles of 1 and 2.
pub fn brute_moments(n: usize, k: usize, q: f64, lambda: f64, m: usize, conditioning: Conditioning) -> Result<(f64, f64)> {
    if !(3..=8).contains(&n) || m < 3 || m > n || k < 2 {
        return Err(Error::Param(format!("brute_moments needs 3 <= m <= n <= 8 and K >= 2, got n={n}, m={m}, K={k}")));
    }
    derived_probs(q, lambda)?;
    let budget = (k as u64).checked_pow(n as u32 - 2);
    if budget.is_none_or(|b| b > BRUTE_BUDGET) {
        return Err(Error::Budget(format!("K^(n-2) = {k}^{} exceeds {BRUTE_BUDGET}", n - 2)));
    }
    let inj = injections(n, m)?;
    let p_same = q + lambda;
    let moment = |prob: f64, pow: i32| prob * (1.0 - q).powi(pow) + (1.0 - prob) * (-q).powi(pow);
    let (mu_s, mu_d) = (moment(p_same, 1), moment(q, 1));
    let (s2_s, s2_d) = (moment(p_same, 2), moment(q, 2));

    // accumulate E[S] and E[S²] for one value of (z_0, z_1), averaged over the free labels
    let run = |z0: u32, z1: u32| -> (f64, f64) {
        let free = n - 2;
        let total = (k as u64).pow(free as u32);
        let mut z = vec![0u32; n];
        z[0] = z0;
        z[1] = z1;
        let mut mu = vec![0.0; n * n];
        let mut s2 = vec![0.0; n * n];
        let (mut e1, mut e2) = (KahanSum::new(), KahanSum::new());
        for code in 0..total {
            let mut c = code;
            for slot in z.iter_mut().skip(2) {
                *slot = (c % k as u64) as u32;
                c /= k as u64;
            }
            for u in 0..n {
                for v in u + 1..n {
                    let same = z[u] == z[v];
                    mu[u * n + v] = if same { mu_s } else { mu_d };
                    s2[u * n + v] = if same { s2_s } else { s2_d };
                }
            }
            let (a, b) = moments_given(&inj, &mu, &s2);
            e1.add(a);
            e2.add(b);
        }
        (e1.value() / total as f64, e2.value() / total as f64)
    };

    let same = || run(0, 0);
    let diff = || {
        let (mut a, mut b) = (KahanSum::new(), KahanSum::new());
        for z1 in 1..k as u32 {
            let (x, y) = run(0, z1);
            a.add(x);
            b.add(y);
        }
        (a.value() / (k - 1) as f64, b.value() / (k - 1) as f64)
    };
    let (e1, e2) = match conditioning {
        Conditioning::Same => same(),
        Conditioning::Diff => diff(),
        Conditioning::None => {
            let (s, d) = (same(), diff());
            let w = 1.0 / k as f64;
            (w * s.0 + (1.0 - w) * d.0, w * s.1 + (1.0 - w) * d.1)
        }
    };
    Ok((e1, e2 - e1 * e1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::clique_mean;

    #[test]
    fn small_examples() {
        let (mean, _) = brute_moments(4, 2, 0.2, 0.3, 3, Conditioning::Same).unwrap();
        assert!((mean - 0.09).abs() < 1e-15);
        let (mean, _) = brute_moments(6, 3, 0.2, 0.3, 4, Conditioning::Diff).unwrap();
        assert!(mean.abs() < 1e-15);
        let (mean, _) = brute_moments(7, 2, 0.2, 0.3, 3, Conditioning::Same).unwrap();
        assert!((mean - clique_mean(7, 2, 0.3, 3).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn triangle_variance_by_hand() {
        // m = 3: S = Σ_k Y_1k Y_2k, the k-terms are independent given (z_1, z_2)
        // only through z_k; var = (n−2)·var(Y_13 Y_23) + (n−2)(n−3)·cov, and the cov is 0
        // because distinct k share no edge and z_k are independent.
        let (q, l, k) = (0.2, 0.3, 3usize);
        let qb = q * (1.0 - q);
        let pb = qb + l * (1.0 - 2.0 * q);
        let kf = k as f64;
        let e = l * l / kf;
        let e2 = pb * pb / kf + qb * qb * (1.0 - 1.0 / kf);
        let (mean, var) = brute_moments(6, k, q, l, 3, Conditioning::Same).unwrap();
        assert!((mean - 4.0 * e).abs() < 1e-14);
        assert!((var - 4.0 * (e2 - e * e)).abs() < 1e-14);
    }

    #[test]
    fn none_is_mixture() {
        let s = brute_moments(6, 3, 0.1, 0.45, 4, Conditioning::Same).unwrap();
        let d = brute_moments(6, 3, 0.1, 0.45, 4, Conditioning::Diff).unwrap();
        let a = brute_moments(6, 3, 0.1, 0.45, 4, Conditioning::None).unwrap();
        let m2 = (s.1 + s.0 * s.0) / 3.0 + (d.1 + d.0 * d.0) * 2.0 / 3.0;
        let mean = s.0 / 3.0 + d.0 * 2.0 / 3.0;
        assert!((a.0 - mean).abs() < 1e-14 && (a.1 - (m2 - mean * mean)).abs() < 1e-13);
    }

    #[test]
    fn budget_and_domain() {
        assert!(brute_moments(9, 2, 0.2, 0.3, 3, Conditioning::Same).is_err());
        assert!(brute_moments(5, 2, 0.2, 0.3, 6, Conditioning::Same).is_err());
    }
}
