//! Exact linear programming over rationals.
//!
//! Small dense two-phase simplex with Bland's anti-cycling rule. Everything is
//! `BigRational`, so optima, rays and infeasibility certificates are exact and
//! every outcome is re-verified by substitution before it is returned; a
//! verification failure is reported as an internal error rather than a wrong
//! answer.
//!
//! Internally all variables are free: explicit bounds are expanded into
//! ordinary rows, then each variable is split into a difference of two
//! nonnegative ones. This keeps the certificate semantics uniform — a
//! certificate assigns one multiplier to every row of [`LinearProgram::rows`].

use num_traits::{One, Signed, Zero};

use crate::rational::Rat;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
    /// Ignore the objective; report any feasible point or an infeasibility
    /// certificate.
    Feasibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub relation: Relation,
    pub rhs: Rat,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rat>, relation: Relation, rhs: Rat) -> Self {
        Constraint { coeffs, relation, rhs }
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub sense: Sense,
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
    /// Optional (lower, upper) per variable; an empty vector means all free.
    pub bounds: Vec<(Option<Rat>, Option<Rat>)>,
}

/// Result of [`solve_lp`]. Rays and Farkas certificates refer to the expanded
/// row list of [`LinearProgram::rows`].
#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal {
        solution: Vec<Rat>,
        value: Rat,
        /// One dual multiplier per expanded row, satisfying exact dual
        /// feasibility and strong duality.
        duals: Vec<Rat>,
    },
    Infeasible {
        /// One multiplier per expanded row; see [`verify_farkas`].
        farkas: Vec<Rat>,
    },
    Unbounded {
        /// A feasible point.
        base: Vec<Rat>,
        /// A recession direction that improves the objective.
        ray: Vec<Rat>,
    },
}

impl LinearProgram {
    /// The constraint list with bounds expanded into explicit rows, in the
    /// order: declared constraints, then per-variable lower bounds, then
    /// upper bounds (each ascending by variable index).
    pub fn rows(&self) -> Vec<Constraint> {
        let mut rows = self.constraints.clone();
        let unit = |j: usize, n: usize| {
            let mut c = vec![Rat::zero(); n];
            c[j] = Rat::one();
            c
        };
        for (j, (lo, _)) in self.bounds.iter().enumerate() {
            if let Some(l) = lo {
                rows.push(Constraint::new(unit(j, self.num_vars), Relation::Ge, l.clone()));
            }
        }
        for (j, (_, hi)) in self.bounds.iter().enumerate() {
            if let Some(u) = hi {
                rows.push(Constraint::new(unit(j, self.num_vars), Relation::Le, u.clone()));
            }
        }
        rows
    }

    fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::input("objective length must match the variable count"));
        }
        if !self.bounds.is_empty() && self.bounds.len() != self.num_vars {
            return Err(Error::input("bounds must be empty or one pair per variable"));
        }
        for c in &self.constraints {
            if c.coeffs.len() != self.num_vars {
                return Err(Error::input("constraint coefficient length mismatch"));
            }
        }
        Ok(())
    }
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Checks a Farkas certificate: multipliers `farkas[i]` for the expanded rows,
/// nonnegative on inequality rows (read on the `Ge`-normalized orientation,
/// i.e. `Le` rows are negated first), free on equalities, combining to the
/// identically-zero functional with a strictly positive right-hand side.
pub fn verify_farkas(lp: &LinearProgram, farkas: &[Rat]) -> Result<()> {
    let rows = lp.rows();
    if farkas.len() != rows.len() {
        return Err(Error::verify("certificate length mismatch"));
    }
    let mut combo = vec![Rat::zero(); lp.num_vars];
    let mut rhs = Rat::zero();
    for (row, mult) in rows.iter().zip(farkas) {
        let sign = match row.relation {
            Relation::Ge => Rat::one(),
            Relation::Le => -Rat::one(),
            Relation::Eq => Rat::one(),
        };
        if row.relation != Relation::Eq && mult.is_negative() {
            return Err(Error::verify("negative multiplier on an inequality row"));
        }
        for (j, c) in row.coeffs.iter().enumerate() {
            combo[j] += mult * &(c * &sign);
        }
        rhs += mult * &(&row.rhs * &sign);
    }
    if combo.iter().any(|c| !c.is_zero()) {
        return Err(Error::verify("certificate does not annihilate the variables"));
    }
    if !rhs.is_positive() {
        return Err(Error::verify("certificate right-hand side not positive"));
    }
    Ok(())
}

fn check_feasible(lp: &LinearProgram, x: &[Rat]) -> Result<()> {
    if x.len() != lp.num_vars {
        return Err(Error::verify("solution length mismatch"));
    }
    for (i, row) in lp.rows().iter().enumerate() {
        let lhs = dot(&row.coeffs, x);
        let ok = match row.relation {
            Relation::Le => lhs <= row.rhs,
            Relation::Eq => lhs == row.rhs,
            Relation::Ge => lhs >= row.rhs,
        };
        if !ok {
            return Err(Error::verify(format!("row {i} violated by candidate point")));
        }
    }
    Ok(())
}

fn check_ray(lp: &LinearProgram, ray: &[Rat]) -> Result<()> {
    for (i, row) in lp.rows().iter().enumerate() {
        let along = dot(&row.coeffs, ray);
        let ok = match row.relation {
            Relation::Le => !along.is_positive(),
            Relation::Eq => along.is_zero(),
            Relation::Ge => !along.is_negative(),
        };
        if !ok {
            return Err(Error::verify(format!("row {i} not recessive along the ray")));
        }
    }
    let gain = dot(&lp.objective, ray);
    let improves = match lp.sense {
        Sense::Maximize => gain.is_positive(),
        Sense::Minimize => gain.is_negative(),
        Sense::Feasibility => false,
    };
    if !improves {
        return Err(Error::verify("ray does not improve the objective"));
    }
    Ok(())
}

fn check_duals(lp: &LinearProgram, x: &[Rat], value: &Rat, duals: &[Rat]) -> Result<()> {
    let rows = lp.rows();
    if duals.len() != rows.len() {
        return Err(Error::verify("dual length mismatch"));
    }
    // Dual feasibility: sum_i y_i a_ij == c_j for every variable (all original
    // variables are free once bounds are rows), with sign conditions
    // y_i >= 0 on Le rows and y_i <= 0 on Ge rows for maximization (flipped
    // for minimization), plus strong duality sum_i y_i b_i == value.
    let flip = match lp.sense {
        Sense::Maximize | Sense::Feasibility => Rat::one(),
        Sense::Minimize => -Rat::one(),
    };
    for (row, y) in rows.iter().zip(duals) {
        let oriented = y * &flip;
        match row.relation {
            Relation::Le if oriented.is_negative() => {
                return Err(Error::verify("dual sign violated on a Le row"))
            }
            Relation::Ge if oriented.is_positive() => {
                return Err(Error::verify("dual sign violated on a Ge row"))
            }
            _ => {}
        }
    }
    for j in 0..lp.num_vars {
        let lhs: Rat = rows.iter().zip(duals).map(|(r, y)| &r.coeffs[j] * y).sum();
        if lhs != lp.objective[j] {
            return Err(Error::verify(format!("dual constraint {j} not tight")));
        }
    }
    let dual_value: Rat = rows.iter().zip(duals).map(|(r, y)| &r.rhs * y).sum();
    if &dual_value != value {
        return Err(Error::verify("strong duality gap"));
    }
    let _ = x;
    Ok(())
}

/// Verifies any [`LpOutcome`] against its program by exact substitution.
pub fn verify_outcome(lp: &LinearProgram, out: &LpOutcome) -> Result<()> {
    match out {
        LpOutcome::Optimal { solution, value, duals } => {
            check_feasible(lp, solution)?;
            let attained = dot(&lp.objective, solution);
            if lp.sense != Sense::Feasibility && &attained != value {
                return Err(Error::verify("objective value mismatch"));
            }
            if lp.sense != Sense::Feasibility {
                check_duals(lp, solution, value, duals)?;
            }
            Ok(())
        }
        LpOutcome::Infeasible { farkas } => verify_farkas(lp, farkas),
        LpOutcome::Unbounded { base, ray } => {
            check_feasible(lp, base)?;
            check_ray(lp, ray)
        }
    }
}

/// Dense rational tableau kept in canonical form with respect to `basis`.
struct Tableau {
    a: Vec<Vec<Rat>>,
    b: Vec<Rat>,
    basis: Vec<usize>,
    ncols: usize,
}

enum Step {
    Optimal,
    Unbounded { entering: usize },
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            *v /= &piv;
        }
        self.b[r] /= &piv;
        for i in 0..self.a.len() {
            if i == r || self.a[i][c].is_zero() {
                continue;
            }
            let f = self.a[i][c].clone();
            for j in 0..self.ncols {
                let adj = &self.a[r][j] * &f;
                self.a[i][j] -= adj;
            }
            let adj = &self.b[r] * &f;
            self.b[i] -= adj;
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[Rat], j: usize) -> Rat {
        let mut z = Rat::zero();
        for (i, &bj) in self.basis.iter().enumerate() {
            if !cost[bj].is_zero() {
                z += &cost[bj] * &self.a[i][j];
            }
        }
        &cost[j] - &z
    }

    /// Bland's rule: enter the smallest-index improving column, leave on the
    /// minimum ratio breaking ties by smallest basic variable index.
    fn run(&mut self, cost: &[Rat], enterable: &[bool]) -> Step {
        loop {
            let mut entering = None;
            for j in 0..self.ncols {
                if !enterable[j] || self.basis.contains(&j) {
                    continue;
                }
                if self.reduced_cost(cost, j).is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return Step::Optimal;
            };
            let mut leave: Option<(usize, Rat)> = None;
            for r in 0..self.a.len() {
                if !self.a[r][c].is_positive() {
                    continue;
                }
                let ratio = &self.b[r] / &self.a[r][c];
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        if ratio < best
                            || (ratio == best && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Step::Unbounded { entering: c },
            }
        }
    }

    fn value_of(&self, col: usize) -> Rat {
        match self.basis.iter().position(|&bj| bj == col) {
            Some(r) => self.b[r].clone(),
            None => Rat::zero(),
        }
    }
}

/// Solves the program exactly. Every returned outcome has already passed
/// [`verify_outcome`].
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let rows = lp.rows();
    let n = lp.num_vars;
    let m = rows.len();

    // Standard form: x_j = u_j - v_j, one slack per inequality row, one
    // artificial per row. Column order: u (n), v (n), slacks, artificials.
    let num_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let ncols = 2 * n + num_slack + m;
    let art0 = 2 * n + num_slack;

    let mut a = vec![vec![Rat::zero(); ncols]; m];
    let mut b = Vec::with_capacity(m);
    let mut flips = Vec::with_capacity(m);
    let mut slack_idx = 2 * n;
    for (i, row) in rows.iter().enumerate() {
        let flip = row.rhs.is_negative();
        let sign = if flip { -Rat::one() } else { Rat::one() };
        for (j, c) in row.coeffs.iter().enumerate() {
            a[i][j] = c * &sign;
            a[i][n + j] = -(c * &sign);
        }
        match row.relation {
            Relation::Le => {
                a[i][slack_idx] = sign.clone();
                slack_idx += 1;
            }
            Relation::Ge => {
                a[i][slack_idx] = -sign.clone();
                slack_idx += 1;
            }
            Relation::Eq => {}
        }
        a[i][art0 + i] = Rat::one();
        b.push(&row.rhs * &sign);
        flips.push(flip);
    }

    let mut tab = Tableau { a, b, basis: (art0..art0 + m).collect(), ncols };

    // Phase 1: maximize minus the sum of artificials.
    let mut phase1_cost = vec![Rat::zero(); ncols];
    for j in art0..ncols {
        phase1_cost[j] = -Rat::one();
    }
    let enter_all: Vec<bool> = (0..ncols).map(|j| j < art0).collect();
    match tab.run(&phase1_cost, &enter_all) {
        Step::Optimal => {}
        Step::Unbounded { .. } => {
            return Err(Error::verify("phase one cannot be unbounded"));
        }
    }
    let infeas: Rat = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bj)| bj >= art0)
        .map(|(r, _)| tab.b[r].clone())
        .sum();
    if infeas.is_positive() {
        // y_i = c_B B^-1 e_i read off the artificial columns, then mapped to
        // multipliers on the Ge-normalized original rows.
        let mut farkas = Vec::with_capacity(m);
        for i in 0..m {
            let y = -Rat::one() - tab.reduced_cost(&phase1_cost, art0 + i);
            let z = if flips[i] { -y } else { y };
            let mult = match rows[i].relation {
                Relation::Le => z,
                Relation::Ge | Relation::Eq => -z,
            };
            farkas.push(mult);
        }
        let out = LpOutcome::Infeasible { farkas };
        verify_outcome(lp, &out)?;
        return Ok(out);
    }

    // Drive artificials out of the basis where possible. A row that offers no
    // real pivot is a redundant `0 = 0` row at this point: it is zero on every
    // real column, so later pivots can never touch it, and it stays behind as
    // an inert row with its artificial basic at value zero.
    for r in 0..tab.basis.len() {
        if tab.basis[r] >= art0 {
            if let Some(j) = (0..art0).find(|&j| !tab.a[r][j].is_zero()) {
                tab.pivot(r, j);
            }
        }
    }

    let max_obj: Vec<Rat> = match lp.sense {
        Sense::Maximize => lp.objective.clone(),
        Sense::Minimize => lp.objective.iter().map(|c| -c).collect(),
        Sense::Feasibility => vec![Rat::zero(); n],
    };
    let mut cost = vec![Rat::zero(); ncols];
    for j in 0..n {
        cost[j] = max_obj[j].clone();
        cost[n + j] = -max_obj[j].clone();
    }

    let extract = |tab: &Tableau| -> Vec<Rat> {
        (0..n).map(|j| tab.value_of(j) - tab.value_of(n + j)).collect()
    };

    match tab.run(&cost, &enter_all) {
        Step::Optimal => {
            let solution = extract(&tab);
            let value = dot(&lp.objective, &solution);
            // Duals read off the artificial columns, one per row.
            let mut duals = vec![Rat::zero(); m];
            for (i, dual) in duals.iter_mut().enumerate() {
                let y = -tab.reduced_cost(&cost, art0 + i);
                let z = if flips[i] { -y } else { y };
                *dual = match lp.sense {
                    Sense::Minimize => -z,
                    _ => z,
                };
            }
            let out = LpOutcome::Optimal { solution, value, duals };
            verify_outcome(lp, &out)?;
            Ok(out)
        }
        Step::Unbounded { entering } => {
            let base = extract(&tab);
            let mut dir = vec![Rat::zero(); ncols];
            dir[entering] = Rat::one();
            for (r, &bj) in tab.basis.iter().enumerate() {
                dir[bj] = -tab.a[r][entering].clone();
            }
            let ray: Vec<Rat> = (0..n).map(|j| &dir[j] - &dir[n + j]).collect();
            let out = LpOutcome::Unbounded { base, ray };
            verify_outcome(lp, &out)?;
            Ok(out)
        }
    }
}
