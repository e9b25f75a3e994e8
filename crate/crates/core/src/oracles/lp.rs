//! Exact linear programming over rationals: a dense two-phase tableau
//! simplex with Bland's rule, so it always terminates.

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// `minimize c·z` subject to sparse rows and `z ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct Lp {
    vars: usize,
    objective: Vec<Rational>,
    rows: Vec<(Vec<(usize, Rational)>, Cmp, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub value: Rational,
    pub z: Vec<Rational>,
}

impl Lp {
    pub fn new(vars: usize) -> Self {
        Self { vars, objective: vec![Rational::zero(); vars], rows: Vec::new() }
    }

    pub fn set_cost(&mut self, var: usize, cost: Rational) {
        self.objective[var] = cost;
    }

    pub fn constrain(&mut self, terms: Vec<(usize, Rational)>, cmp: Cmp, rhs: Rational) {
        debug_assert!(terms.iter().all(|(j, _)| *j < self.vars));
        self.rows.push((terms, cmp, rhs));
    }

    pub fn minimize(&self) -> Result<Solution> {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    /// Structural, then slack/surplus, then artificial columns.
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    basis: Vec<usize>,
    vars: usize,
    first_artificial: usize,
    cols: usize,
}

impl Tableau {
    fn build(lp: &Lp) -> Self {
        let m = lp.rows.len();
        let slacks = lp.rows.iter().filter(|(_, c, _)| *c != Cmp::Eq).count();
        let first_artificial = lp.vars + slacks;
        let artificials = lp
            .rows
            .iter()
            .filter(|(_, c, rhs)| !(matches!(c, Cmp::Le) && !rhs.is_negative() || matches!(c, Cmp::Ge) && rhs.is_negative()))
            .count();
        let cols = first_artificial + artificials;
        let mut a = vec![vec![Rational::zero(); cols]; m];
        let mut b = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut slack, mut art) = (lp.vars, first_artificial);
        for (i, (terms, cmp, rhs)) in lp.rows.iter().enumerate() {
            let flip = rhs.is_negative();
            let sign = if flip { -Rational::one() } else { Rational::one() };
            for (j, coef) in terms {
                a[i][*j] = &a[i][*j] + &(coef * &sign);
            }
            b.push(rhs * &sign);
            let cmp = match (cmp, flip) {
                (Cmp::Le, true) => Cmp::Ge,
                (Cmp::Ge, true) => Cmp::Le,
                (c, _) => *c,
            };
            match cmp {
                Cmp::Le => {
                    a[i][slack] = Rational::one();
                    basis.push(slack);
                    slack += 1;
                }
                Cmp::Ge => {
                    a[i][slack] = -Rational::one();
                    slack += 1;
                    a[i][art] = Rational::one();
                    basis.push(art);
                    art += 1;
                }
                Cmp::Eq => {
                    a[i][art] = Rational::one();
                    basis.push(art);
                    art += 1;
                }
            }
        }
        debug_assert_eq!(art, cols);
        Self { a, b, basis, vars: lp.vars, first_artificial, cols }
    }

    fn reduced_costs(&self, cost: &[Rational]) -> (Vec<Rational>, Rational) {
        let mut d = cost.to_vec();
        let mut z = Rational::zero();
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = &cost[bj];
            if cb.is_zero() {
                continue;
            }
            for (dj, aij) in d.iter_mut().zip(&self.a[i]) {
                if !aij.is_zero() {
                    *dj = &*dj - &(cb * aij);
                }
            }
            z = &z + &(cb * &self.b[i]);
        }
        (d, z)
    }

    fn pivot(&mut self, row: usize, col: usize, d: &mut [Rational], z: &mut Rational) {
        let p = self.a[row][col].clone();
        if p != Rational::one() {
            for v in self.a[row].iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &p;
                }
            }
            self.b[row] = &self.b[row] / &p;
        }
        let pivot_row = self.a[row].clone();
        let pivot_b = self.b[row].clone();
        for i in 0..self.a.len() {
            if i == row || self.a[i][col].is_zero() {
                continue;
            }
            let factor = self.a[i][col].clone();
            for (v, pv) in self.a[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = &*v - &(&factor * pv);
                }
            }
            self.b[i] = &self.b[i] - &(&factor * &pivot_b);
        }
        let factor = d[col].clone();
        if !factor.is_zero() {
            for (v, pv) in d.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = &*v - &(&factor * pv);
                }
            }
            *z = &*z + &(&factor * &pivot_b);
        }
        self.basis[row] = col;
    }

    /// Runs Bland's rule over columns `< limit` until optimal.
    fn optimize(&mut self, d: &mut [Rational], z: &mut Rational, limit: usize) -> Result<()> {
        loop {
            let Some(col) = (0..limit).find(|&j| d[j].is_negative()) else { return Ok(()) };
            let mut best: Option<(Rational, usize, usize)> = None;
            for i in 0..self.a.len() {
                let aij = &self.a[i][col];
                if !aij.is_positive() {
                    continue;
                }
                let ratio = &self.b[i] / aij;
                let better = match &best {
                    None => true,
                    Some((r, _, basic)) => ratio < *r || (ratio == *r && self.basis[i] < *basic),
                };
                if better {
                    best = Some((ratio, i, self.basis[i]));
                }
            }
            let Some((_, row, _)) = best else {
                return Err(Error::InvalidParam("linear program is unbounded".into()));
            };
            self.pivot(row, col, d, z);
        }
    }

    fn solve(mut self, objective: &[Rational]) -> Result<Solution> {
        if self.first_artificial < self.cols {
            let mut phase1 = vec![Rational::zero(); self.cols];
            for c in &mut phase1[self.first_artificial..] {
                *c = Rational::one();
            }
            let (mut d, mut z) = self.reduced_costs(&phase1);
            self.optimize(&mut d, &mut z, self.cols)?;
            if !z.is_zero() {
                return Err(Error::InvalidParam("linear program is infeasible".into()));
            }
            // drive zero-level artificials out, dropping redundant rows
            let mut i = 0;
            while i < self.a.len() {
                if self.basis[i] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| !self.a[i][j].is_zero()) {
                        Some(j) => self.pivot(i, j, &mut d, &mut z),
                        None => {
                            self.a.remove(i);
                            self.b.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        let mut cost = vec![Rational::zero(); self.cols];
        cost[..self.vars].clone_from_slice(objective);
        let (mut d, mut z) = self.reduced_costs(&cost);
        self.optimize(&mut d, &mut z, self.first_artificial)?;
        let mut out = vec![Rational::zero(); self.vars];
        for (i, &bj) in self.basis.iter().enumerate() {
            if bj < self.vars {
                out[bj] = self.b[i].clone();
            }
        }
        Ok(Solution { value: z, z: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y st x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 -> 36 at (2, 6)
        let mut lp = Lp::new(2);
        lp.set_cost(0, q(-3));
        lp.set_cost(1, q(-5));
        lp.constrain(vec![(0, q(1))], Cmp::Le, q(4));
        lp.constrain(vec![(1, q(2))], Cmp::Le, q(12));
        lp.constrain(vec![(0, q(3)), (1, q(2))], Cmp::Le, q(18));
        let s = lp.minimize().unwrap();
        assert_eq!(s.value, q(-36));
        assert_eq!(s.z, vec![q(2), q(6)]);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y st x + y ≥ 2, x - y = 1 -> x = 3/2, y = 1/2
        let mut lp = Lp::new(2);
        lp.set_cost(0, q(1));
        lp.set_cost(1, q(1));
        lp.constrain(vec![(0, q(1)), (1, q(1))], Cmp::Ge, q(2));
        lp.constrain(vec![(0, q(1)), (1, q(-1))], Cmp::Eq, q(1));
        let s = lp.minimize().unwrap();
        assert_eq!(s.value, q(2));
        assert_eq!(s.z, vec![Rational::new(3, 2), Rational::new(1, 2)]);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = Lp::new(1);
        lp.constrain(vec![(0, q(1))], Cmp::Le, q(-1));
        assert!(lp.minimize().is_err());
        let mut lp = Lp::new(1);
        lp.set_cost(0, q(-1));
        assert!(lp.minimize().is_err());
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = Lp::new(2);
        lp.set_cost(0, q(1));
        lp.constrain(vec![(0, q(1)), (1, q(1))], Cmp::Eq, q(3));
        lp.constrain(vec![(0, q(2)), (1, q(2))], Cmp::Eq, q(6));
        let s = lp.minimize().unwrap();
        assert_eq!(s.value, q(0));
        assert_eq!(s.z, vec![q(0), q(3)]);
    }
}
