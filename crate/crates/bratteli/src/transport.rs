//! Exact solver for the finite transportation problem: the Kantorovich
//! distance between two finitely supported measures, together with an
//! optimal coupling.
//!
//! The solver is a primal transportation simplex with Bland's rule, run in
//! exact rational arithmetic; rational inputs yield the exact rational
//! optimum. Float inputs are converted losslessly (every f64 is a dyadic
//! rational) and solved by the same code path.

use crate::numeric::{rational_from_f64, rational_to_f64, Rational};
use crate::{Error, Result};
use num_traits::{Signed, Zero};

/// Nonnegative matrix with prescribed row and column sums.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub matrix: Vec<Vec<Rational>>,
}

impl Coupling {
    pub fn row_sums(&self) -> Vec<Rational> {
        self.matrix
            .iter()
            .map(|row| row.iter().cloned().sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<Rational> {
        let n = self.matrix.first().map_or(0, |r| r.len());
        let mut sums = vec![Rational::zero(); n];
        for row in &self.matrix {
            for (j, x) in row.iter().enumerate() {
                sums[j] += x;
            }
        }
        sums
    }
}

fn validate(mu: &[Rational], nu: &[Rational], cost: &[Vec<Rational>]) -> Result<()> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptyInput("transport marginals".into()));
    }
    if cost.len() != mu.len() || cost.iter().any(|row| row.len() != nu.len()) {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix must be {}x{}",
            mu.len(),
            nu.len()
        )));
    }
    if mu.iter().chain(nu.iter()).any(|x| x.is_negative()) {
        return Err(Error::InvalidMeasure("negative mass".into()));
    }
    let a: Rational = mu.iter().cloned().sum();
    let b: Rational = nu.iter().cloned().sum();
    if a != b {
        return Err(Error::MarginalMismatch(a.to_string(), b.to_string()));
    }
    if a.is_zero() {
        return Err(Error::InvalidMeasure("zero total mass".into()));
    }
    Ok(())
}

/// Exact optimum of the transportation problem
/// `min Σ ψ(i,j) cost(i,j)` over couplings ψ of (mu, nu).
pub fn kantorovich(
    mu: &[Rational],
    nu: &[Rational],
    cost: &[Vec<Rational>],
) -> Result<(Rational, Coupling)> {
    validate(mu, nu, cost)?;
    let m = mu.len();
    let n = nu.len();
    if m == 1 {
        let matrix = vec![nu.to_vec()];
        let value = nu
            .iter()
            .zip(&cost[0])
            .map(|(w, c)| w * c)
            .fold(Rational::zero(), |a, x| a + x);
        return Ok((value, Coupling { matrix }));
    }
    if n == 1 {
        let matrix: Vec<Vec<Rational>> = mu.iter().map(|w| vec![w.clone()]).collect();
        let value = mu
            .iter()
            .zip(cost)
            .map(|(w, c)| w * &c[0])
            .fold(Rational::zero(), |a, x| a + x);
        return Ok((value, Coupling { matrix }));
    }
    if m == 2 && n == 2 {
        return Ok(kantorovich_2x2(mu, nu, cost));
    }
    simplex(mu, nu, cost)
}

/// 2x2 instances have a single degree of freedom; the optimum sits at an
/// endpoint of its feasible interval.
fn kantorovich_2x2(mu: &[Rational], nu: &[Rational], cost: &[Vec<Rational>]) -> (Rational, Coupling) {
    // psi = [[t, mu0 - t], [nu0 - t, mu1 - nu0 + t]]
    let lo = (&nu[0] - &mu[1]).max(Rational::zero());
    let hi = mu[0].clone().min(nu[0].clone());
    let slope = &cost[0][0] - &cost[0][1] - &cost[1][0] + &cost[1][1];
    let t = if slope.is_negative() { hi } else { lo };
    let matrix = vec![
        vec![t.clone(), &mu[0] - &t],
        vec![&nu[0] - &t, &mu[1] - &nu[0] + &t],
    ];
    let value = matrix
        .iter()
        .zip(cost)
        .flat_map(|(rw, cw)| rw.iter().zip(cw))
        .map(|(w, c)| w * c)
        .fold(Rational::zero(), |a, x| a + x);
    (value, Coupling { matrix })
}

fn simplex(mu: &[Rational], nu: &[Rational], cost: &[Vec<Rational>]) -> Result<(Rational, Coupling)> {
    let m = mu.len();
    let n = nu.len();
    let mut flow = vec![vec![Rational::zero(); n]; m];
    let mut basis = vec![vec![false; n]; m];

    // Northwest-corner start: exactly m+n-1 basic arcs, zero flows allowed.
    {
        let mut a = mu.to_vec();
        let mut b = nu.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let d = a[i].clone().min(b[j].clone());
            flow[i][j] = d.clone();
            basis[i][j] = true;
            a[i] -= &d;
            b[j] -= &d;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if a[i].is_zero() && i < m - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    loop {
        // Duals from the basis tree: u_i + v_j = c_ij on basic arcs.
        let mut u: Vec<Option<Rational>> = vec![None; m];
        let mut v: Vec<Option<Rational>> = vec![None; n];
        u[0] = Some(Rational::zero());
        let mut queue = vec![(true, 0usize)];
        while let Some((is_row, k)) = queue.pop() {
            if is_row {
                for j in 0..n {
                    if basis[k][j] && v[j].is_none() {
                        v[j] = Some(&cost[k][j] - u[k].as_ref().unwrap());
                        queue.push((false, j));
                    }
                }
            } else {
                for i in 0..m {
                    if basis[i][k] && u[i].is_none() {
                        u[i] = Some(&cost[i][k] - v[k].as_ref().unwrap());
                        queue.push((true, i));
                    }
                }
            }
        }
        let u: Vec<Rational> = u.into_iter().map(|x| x.expect("connected basis")).collect();
        let v: Vec<Rational> = v.into_iter().map(|x| x.expect("connected basis")).collect();

        // Entering arc: first (Bland) non-basic arc with negative reduced cost.
        let mut entering = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if !basis[i][j] && &cost[i][j] - &u[i] - &v[j] < Rational::zero() {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else { break };

        // Unique cycle: path from row ei to column ej through the basis tree.
        // parent pointers over the bipartite tree
        let cycle = basis_cycle(&basis, m, n, ei, ej);
        // Arcs alternately gain/lose flow; entering arc gains.
        let mut theta: Option<(Rational, usize)> = None;
        for (pos, &(i, j)) in cycle.iter().enumerate() {
            if pos % 2 == 1 {
                let f = flow[i][j].clone();
                let better = match &theta {
                    None => true,
                    Some((best, _)) => &f < best,
                };
                if better {
                    theta = Some((f, pos));
                }
            }
        }
        let (theta, leave_pos) = theta.expect("cycle has a leaving arc");
        for (pos, &(i, j)) in cycle.iter().enumerate() {
            if pos % 2 == 0 {
                flow[i][j] += &theta;
            } else {
                flow[i][j] -= &theta;
            }
        }
        let (li, lj) = cycle[leave_pos];
        basis[li][lj] = false;
        basis[ei][ej] = true;
    }

    let value = flow
        .iter()
        .zip(cost)
        .flat_map(|(rw, cw)| rw.iter().zip(cw))
        .map(|(w, c)| w * c)
        .fold(Rational::zero(), |a, x| a + x);
    Ok((value, Coupling { matrix: flow }))
}

/// The alternating cycle closed by the entering arc (ei, ej): returns the
/// arcs in traversal order starting with the entering arc.
fn basis_cycle(basis: &[Vec<bool>], m: usize, n: usize, ei: usize, ej: usize) -> Vec<(usize, usize)> {
    // BFS from column ej to row ei over basic arcs.
    // node encoding: rows 0..m, columns m..m+n
    let total = m + n;
    let mut parent = vec![usize::MAX; total];
    let mut seen = vec![false; total];
    let start = m + ej;
    let goal = ei;
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        if x == goal {
            break;
        }
        if x < m {
            for j in 0..n {
                if basis[x][j] && !seen[m + j] {
                    seen[m + j] = true;
                    parent[m + j] = x;
                    queue.push_back(m + j);
                }
            }
        } else {
            let j = x - m;
            for i in 0..m {
                if basis[i][j] && !seen[i] {
                    seen[i] = true;
                    parent[i] = x;
                    queue.push_back(i);
                }
            }
        }
    }
    // Walk goal -> start; together with (ei, ej) this is the cycle.
    let mut arcs = vec![(ei, ej)];
    let mut node = goal;
    while node != start {
        let p = parent[node];
        let (i, j) = if node < m {
            (node, p - m)
        } else {
            (p, node - m)
        };
        arcs.push((i, j));
        node = p;
    }
    arcs
}

/// Float front-end: inputs are converted losslessly to rationals and the
/// instance is solved exactly; the defect of the float marginals must stay
/// below 1e-12 and the sink marginal is rescaled to balance exactly.
pub fn kantorovich_f64(mu: &[f64], nu: &[f64], cost: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    let conv = |xs: &[f64]| -> Result<Vec<Rational>> {
        xs.iter()
            .map(|&x| rational_from_f64(x).ok_or_else(|| Error::InvalidMeasure(format!("non-finite mass {x}"))))
            .collect()
    };
    let mut mu_r = conv(mu)?;
    let mut nu_r = conv(nu)?;
    let cost_r: Vec<Vec<Rational>> = cost
        .iter()
        .map(|row| conv(row))
        .collect::<Result<_>>()?;
    let a: Rational = mu_r.iter().cloned().sum();
    let b: Rational = nu_r.iter().cloned().sum();
    if a.is_zero() || b.is_zero() {
        return Err(Error::InvalidMeasure("zero total mass".into()));
    }
    let defect = rational_to_f64(&(&a - &b)).abs();
    if defect > 1e-12 {
        return Err(Error::MarginalMismatch(
            rational_to_f64(&a).to_string(),
            rational_to_f64(&b).to_string(),
        ));
    }
    // balance exactly on a common total
    let scale_nu = &a / &b;
    for x in nu_r.iter_mut() {
        *x *= &scale_nu;
    }
    let total = a;
    for x in mu_r.iter_mut() {
        *x /= &total;
    }
    for x in nu_r.iter_mut() {
        *x /= &total;
    }
    let (value, coupling) = kantorovich(&mu_r, &nu_r, &cost_r)?;
    let plan = coupling
        .matrix
        .iter()
        .map(|row| row.iter().map(|x| rational_to_f64(&(x * &total))).collect())
        .collect();
    Ok((rational_to_f64(&(value * total)), plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{rat, rat_int};

    fn discrete(n: usize) -> Vec<Vec<Rational>> {
        (0..n)
            .map(|i| (0..n).map(|j| rat_int((i != j) as i64)).collect())
            .collect()
    }

    #[test]
    fn identical_measures_cost_zero() {
        let mu = vec![rat(1, 3), rat(1, 6), rat(1, 2)];
        let (value, plan) = kantorovich(&mu, &mu, &discrete(3)).unwrap();
        assert!(value.is_zero());
        assert_eq!(plan.row_sums(), mu);
        assert_eq!(plan.column_sums(), mu);
    }

    #[test]
    fn two_point_swap_costs_difference() {
        // mu=(p,q), nu=(q,p), cost d off the diagonal -> |p-q| d
        let p = rat(7, 10);
        let q = rat(3, 10);
        let d = rat(5, 2);
        let cost = vec![
            vec![rat_int(0), d.clone()],
            vec![d.clone(), rat_int(0)],
        ];
        let (value, _) = kantorovich(
            &[p.clone(), q.clone()],
            &[q.clone(), p.clone()],
            &cost,
        )
        .unwrap();
        assert_eq!(value, (&p - &q) * d);
    }

    #[test]
    fn point_masses_pay_the_ground_cost() {
        let mu = vec![rat_int(1), rat_int(0)];
        let nu = vec![rat_int(0), rat_int(1)];
        let cost = vec![
            vec![rat_int(0), rat(13, 7)],
            vec![rat(13, 7), rat_int(0)],
        ];
        let (value, _) = kantorovich(&mu, &nu, &cost).unwrap();
        assert_eq!(value, rat(13, 7));
    }

    #[test]
    fn marginal_mismatch_is_an_error() {
        let err = kantorovich(&[rat_int(1)], &[rat(1, 2)], &[vec![rat_int(0)]]);
        assert!(matches!(err, Err(Error::MarginalMismatch(..))));
    }

    #[test]
    fn float_front_end_agrees() {
        let mu = [0.3, 0.7];
        let nu = [0.6, 0.4];
        let cost = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let (v, plan) = kantorovich_f64(&mu, &nu, &cost).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
        let s: f64 = plan.iter().flatten().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_instances_do_not_cycle() {
        // many equal masses and tied costs force degenerate pivots
        let mu = vec![rat(1, 4); 4];
        let nu = vec![rat(1, 4); 4];
        let cost: Vec<Vec<Rational>> = (0..4)
            .map(|i| (0..4).map(|j| rat_int(((i + j) % 2) as i64)).collect())
            .collect();
        let (value, _) = kantorovich(&mu, &nu, &cost).unwrap();
        assert!(value.is_zero());
    }
}
