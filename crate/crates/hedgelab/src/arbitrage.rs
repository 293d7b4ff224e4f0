//! Arbitrage diagnostics. Instantaneous profits are ruled out by exact
//! convex-hull tests on one-step conditional supports; classical arbitrage
//! by gluing strictly positive one-step martingale laws into an equivalent
//! measure; unbounded profits by one global linear program over the full
//! strategy grid. Every verdict carries a certificate that is re-verified
//! by substitution before it is returned.

use crate::conditional::{cond_expectation, in_convex_hull, verify_hull, HullCertificate, HullResult};
use crate::lp::{solve_lp, Constraint, LinearProgram, LpOutcome, Relation, Sense};
use crate::market::{is_admissible, portfolio_value, MarketModel, Revision, SimpleStrategy};
use crate::maxingale::{
    count_stopping_times, enumerate_stopping_times, sample_stopping_time, sigma_at, StoppingTime,
};
use crate::rational::{Ext, Rat};
use crate::space::{Rv, VecRv};
use crate::{Error, Result};
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// What a violating strategy demonstrates.
#[derive(Debug, Clone)]
pub enum WitnessKind {
    /// A one-step gain bounded below by a positive constant on one atom,
    /// zero elsewhere.
    InstantaneousProfit { time: usize, atom: usize, floor: Rat },
    /// Terminal value nonnegative everywhere and positive somewhere, from
    /// zero initial capital.
    NaViolation,
    /// A direction whose multiples stay admissible at any fixed floor while
    /// the aggregate terminal value grows without bound.
    ConeDirection,
}

#[derive(Debug, Clone)]
pub struct ArbitrageWitness {
    pub strategy: SimpleStrategy,
    pub kind: WitnessKind,
    pub terminal_value: Rv,
}

impl ArbitrageWitness {
    fn build(model: &MarketModel, strategy: SimpleStrategy, kind: WitnessKind) -> Result<Self> {
        let terminal_value = portfolio_value(model, &strategy, model.space.last_time())?;
        let w = ArbitrageWitness {
            strategy,
            kind,
            terminal_value,
        };
        w.verify(model)?;
        Ok(w)
    }

    /// Recomputes the claimed gains from scratch and checks the pattern the
    /// kind promises.
    pub fn verify(&self, model: &MarketModel) -> Result<()> {
        let v = portfolio_value(model, &self.strategy, model.space.last_time())?;
        if v != self.terminal_value {
            return Err(Error::verify("witness terminal value does not replay"));
        }
        match &self.kind {
            WitnessKind::InstantaneousProfit { time, atom, floor } => {
                if !floor.is_positive() {
                    return Err(Error::verify("instantaneous profit needs a positive floor"));
                }
                let members = &model.space.atoms(*time)[*atom];
                for w in 0..model.space.num_outcomes() {
                    let inside = members.contains(&w);
                    if inside && &v.values[w] < floor {
                        return Err(Error::verify("gain dips below the claimed floor"));
                    }
                    if !inside && !v.values[w].is_zero() {
                        return Err(Error::verify("gain leaks outside the claimed atom"));
                    }
                }
            }
            WitnessKind::NaViolation => {
                if !v.is_nonneg() || v.is_zero() {
                    return Err(Error::verify("claimed free lunch is not one"));
                }
            }
            WitnessKind::ConeDirection => {
                if !is_admissible(model, &self.strategy, &Rat::zero())? {
                    return Err(Error::verify("cone direction exits the zero floor"));
                }
                let total: Rat = v.values.iter().cloned().sum();
                if !total.is_positive() {
                    return Err(Error::verify("cone direction gains nothing in aggregate"));
                }
            }
        }
        Ok(())
    }
}

/// One-step positions equal to `theta` on one date-t atom, zero elsewhere.
fn one_step_strategy(
    model: &MarketModel,
    t: usize,
    atom: usize,
    theta: &[Rat],
) -> Result<SimpleStrategy> {
    let space = &model.space;
    let members = &space.atoms(t)[atom];
    let values: Vec<Vec<Rat>> = (0..space.num_outcomes())
        .map(|w| {
            if members.contains(&w) {
                theta.to_vec()
            } else {
                vec![Rat::zero(); model.dim()]
            }
        })
        .collect();
    SimpleStrategy::new(
        model,
        Revision::Deterministic(vec![t, t + 1]),
        vec![VecRv::new(model.dim(), values)],
    )
}

/// Distinct next-date price vectors reachable from the outcomes in `members`.
fn price_cloud(model: &MarketModel, date: usize, members: &[usize]) -> Vec<Vec<Rat>> {
    let mut cloud: Vec<Vec<Rat>> = Vec::new();
    for &w in members {
        let v = model.prices.at(date, w).to_vec();
        if !cloud.contains(&v) {
            cloud.push(v);
        }
    }
    cloud
}

/// Scalar fast path: hull membership in one dimension is an interval check.
fn hull_query(point: &[Rat], cloud: &[Vec<Rat>]) -> Result<HullResult> {
    if point.len() == 1 && cloud.iter().all(|c| c.len() == 1) {
        let lo = cloud.iter().map(|c| &c[0]).min().unwrap();
        let hi = cloud.iter().map(|c| &c[0]).max().unwrap();
        let res = if &point[0] < lo {
            HullResult {
                member: false,
                certificate: HullCertificate::Separator {
                    normal: vec![Rat::one()],
                    offset: -lo.clone(),
                },
            }
        } else if &point[0] > hi {
            HullResult {
                member: false,
                certificate: HullCertificate::Separator {
                    normal: vec![-Rat::one()],
                    offset: hi.clone(),
                },
            }
        } else {
            // point = a*lo + (1-a)*hi exactly.
            let a = if lo == hi {
                Rat::one()
            } else {
                (hi - &point[0]) / (hi - lo)
            };
            let mut weights = vec![Rat::zero(); cloud.len()];
            let ilo = cloud.iter().position(|c| &c[0] == lo).unwrap();
            let ihi = cloud.iter().position(|c| &c[0] == hi).unwrap();
            weights[ilo] = a.clone();
            weights[ihi] = &weights[ihi] + (Rat::one() - a);
            HullResult {
                member: true,
                certificate: HullCertificate::Combination(weights),
            }
        };
        verify_hull(point, cloud, &res)?;
        return Ok(res);
    }
    in_convex_hull(point, cloud)
}

#[derive(Debug, Clone)]
pub struct AipReport {
    pub holds: bool,
    pub hull_checks: usize,
    /// First failing (date index, atom index), scanning forward in time.
    pub failure: Option<(usize, usize)>,
    pub witness: Option<ArbitrageWitness>,
}

/// Instantaneous profits are absent iff every current price sits inside the
/// convex hull of its one-step conditional support.
pub fn check_aip(model: &MarketModel) -> Result<AipReport> {
    let space = &model.space;
    let mut hull_checks = 0;
    for t in 0..space.num_times() - 1 {
        for (a, members) in space.atoms(t).iter().enumerate() {
            let point = model.prices.at(t, members[0]).to_vec();
            let cloud = price_cloud(model, t + 1, members);
            hull_checks += 1;
            let res = hull_query(&point, &cloud)?;
            if let HullCertificate::Separator { normal, offset } = &res.certificate {
                // Holding the separator's normal across the step earns at
                // least the (positive) violation gap on the whole atom.
                let floor = cloud
                    .iter()
                    .map(|c| {
                        normal.iter().zip(c).map(|(n, v)| n * v).sum::<Rat>()
                            - normal.iter().zip(&point).map(|(n, v)| n * v).sum::<Rat>()
                    })
                    .min()
                    .unwrap();
                let _ = offset;
                let strategy = one_step_strategy(model, t, a, normal)?;
                let witness = ArbitrageWitness::build(
                    model,
                    strategy,
                    WitnessKind::InstantaneousProfit {
                        time: t,
                        atom: a,
                        floor,
                    },
                )?;
                return Ok(AipReport {
                    holds: false,
                    hull_checks,
                    failure: Some((t, a)),
                    witness: Some(witness),
                });
            }
        }
    }
    Ok(AipReport {
        holds: true,
        hull_checks,
        failure: None,
        witness: None,
    })
}

#[derive(Debug, Clone)]
pub struct StoppingAipReport {
    pub holds: bool,
    /// Whether every ordered pair of stopping times was examined.
    pub exhaustive: bool,
    pub pairs_checked: usize,
    pub hull_checks: usize,
    /// A violating pair (earlier, later), as per-outcome date indexes.
    pub failing_pair: Option<(Vec<usize>, Vec<usize>)>,
    pub witness: Option<ArbitrageWitness>,
}

fn stopping_pair_violates(
    model: &MarketModel,
    sigma: &StoppingTime,
    tau: &StoppingTime,
    hull_checks: &mut usize,
) -> Result<bool> {
    let space = &model.space;
    for cell in sigma_at(space, sigma).cells() {
        let rep = cell[0];
        let point = model.prices.at(sigma.at(rep), rep).to_vec();
        let mut cloud: Vec<Vec<Rat>> = Vec::new();
        for &w in cell {
            let v = model.prices.at(tau.at(w), w).to_vec();
            if !cloud.contains(&v) {
                cloud.push(v);
            }
        }
        *hull_checks += 1;
        if !hull_query(&point, &cloud)?.member {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The instantaneous-profit check run over pairs of stopping times instead
/// of consecutive dates. On this finite setting the verdict provably
/// matches [`check_aip`]; the exhaustive mode enforces that agreement.
pub fn check_aip_stopping(
    model: &MarketModel,
    pair_budget: usize,
    seed: u64,
) -> Result<StoppingAipReport> {
    let space = &model.space;
    let date_report = check_aip(model)?;
    let count = count_stopping_times(space);
    let exhaustive = count.saturating_mul(count) <= pair_budget as u128;
    let mut pairs_checked = 0;
    let mut hull_checks = 0;
    let mut failing: Option<(StoppingTime, StoppingTime)> = None;

    if exhaustive {
        let all = enumerate_stopping_times(space)?;
        'outer: for sigma in &all {
            for tau in &all {
                if sigma.values().iter().zip(tau.values()).any(|(s, t)| s > t) {
                    continue;
                }
                pairs_checked += 1;
                if stopping_pair_violates(model, sigma, tau, &mut hull_checks)? {
                    failing = Some((sigma.clone(), tau.clone()));
                    break 'outer;
                }
            }
        }
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        // Deterministic date pairs are always covered, so a date-level
        // violation can never hide from a sampled run.
        let mut pairs: Vec<(StoppingTime, StoppingTime)> = Vec::new();
        for t1 in 0..space.num_times() {
            for t2 in t1..space.num_times() {
                pairs.push((
                    StoppingTime::constant(space, t1)?,
                    StoppingTime::constant(space, t2)?,
                ));
            }
        }
        while pairs.len() < pair_budget {
            let a = sample_stopping_time(space, &mut rng);
            let b = sample_stopping_time(space, &mut rng);
            let sigma = a.min_with(&b);
            let tau = StoppingTime::new(
                space,
                a.values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| *x.max(y))
                    .collect(),
            )?;
            pairs.push((sigma, tau));
        }
        for (sigma, tau) in &pairs {
            pairs_checked += 1;
            if stopping_pair_violates(model, sigma, tau, &mut hull_checks)? {
                failing = Some((sigma.clone(), tau.clone()));
                break;
            }
        }
    }

    let holds = failing.is_none();
    if holds != date_report.holds {
        if exhaustive {
            return Err(Error::verify(
                "stopping-time and date-level instantaneous-profit verdicts disagree",
            ));
        }
        // Sampling covers all date pairs, so it can only over-reject.
        return Err(Error::verify(
            "sampled stopping pairs rejected a model the date-level check accepts",
        ));
    }
    Ok(StoppingAipReport {
        holds,
        exhaustive,
        pairs_checked,
        hull_checks,
        failing_pair: failing.map(|(s, t)| (s.values().to_vec(), t.values().to_vec())),
        witness: date_report.witness,
    })
}

/// A strictly positive martingale measure with its smallest outcome mass.
#[derive(Debug, Clone)]
pub struct EmmWitness {
    pub q: Vec<Rat>,
    pub margin: Rat,
}

impl EmmWitness {
    /// Exact check: strictly positive, mass one, and prices are martingales
    /// under the measure, coordinate by coordinate and atom by atom.
    pub fn verify(&self, model: &MarketModel) -> Result<()> {
        let space = &model.space;
        if self.q.len() != space.num_outcomes() {
            return Err(Error::verify("measure has the wrong support size"));
        }
        if self.q.iter().any(|p| !p.is_positive()) {
            return Err(Error::verify("measure is not equivalent"));
        }
        if self.q.iter().cloned().sum::<Rat>() != Rat::one() {
            return Err(Error::verify("measure mass is not one"));
        }
        if self.q.iter().min() != Some(&self.margin) {
            return Err(Error::verify("stated margin is not the smallest mass"));
        }
        for t in 0..space.num_times() - 1 {
            for i in 0..model.dim() {
                let next = model.prices.layer(t + 1).coordinate(i);
                let expect = cond_expectation(space, t, &next, Some(&self.q))?;
                if expect != model.prices.layer(t).coordinate(i) {
                    return Err(Error::verify("prices fail the martingale identity"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum NaOutcome {
    Emm(EmmWitness),
    Violation(ArbitrageWitness),
}

/// Searches for an equivalent martingale measure one atom at a time: each
/// one-step market either admits a strictly positive law with zero drift,
/// or yields a position with a nonnegative never-losing one-step gain that
/// is positive somewhere. The laws glue multiplicatively along paths.
pub fn find_emm(model: &MarketModel) -> Result<NaOutcome> {
    let space = &model.space;
    // Conditional mass assigned to each next-date atom, keyed by (t+1, atom).
    let mut cond: Vec<Vec<Rat>> = (0..space.num_times())
        .map(|t| vec![Rat::zero(); space.atom_count(t)])
        .collect();
    if space.atom_count(0) > 0 {
        // Date-0 atoms carry their full unconditional mass... there may be
        // several when the initial algebra is not trivial.
    }
    for a in 0..space.atom_count(0) {
        cond[0][a] = Rat::one();
    }
    for t in 0..space.num_times() - 1 {
        for (a, members) in space.atoms(t).iter().enumerate() {
            let children: Vec<usize> = {
                let mut seen = Vec::new();
                for &w in members {
                    let c = space.atom_index_of(t + 1, w);
                    if !seen.contains(&c) {
                        seen.push(c);
                    }
                }
                seen
            };
            let point = model.prices.at(t, members[0]).to_vec();
            let deltas: Vec<Vec<Rat>> = children
                .iter()
                .map(|&c| {
                    let w = space.atoms(t + 1)[c][0];
                    model
                        .prices
                        .at(t + 1, w)
                        .iter()
                        .zip(&point)
                        .map(|(s1, s0)| s1 - s0)
                        .collect()
                })
                .collect();
            let m = children.len();
            // max eps  s.t.  sum q = 1, drift = 0, q_j >= eps.
            let mut constraints = vec![Constraint::new(
                (0..=m)
                    .map(|j| if j < m { Rat::one() } else { Rat::zero() })
                    .collect(),
                Relation::Eq,
                Rat::one(),
            )];
            for i in 0..model.dim() {
                constraints.push(Constraint::new(
                    (0..=m)
                        .map(|j| {
                            if j < m {
                                deltas[j][i].clone()
                            } else {
                                Rat::zero()
                            }
                        })
                        .collect(),
                    Relation::Eq,
                    Rat::zero(),
                ));
            }
            for j in 0..m {
                let mut coeffs = vec![Rat::zero(); m + 1];
                coeffs[j] = Rat::one();
                coeffs[m] = -Rat::one();
                constraints.push(Constraint::new(coeffs, Relation::Ge, Rat::zero()));
            }
            let mut objective = vec![Rat::zero(); m + 1];
            objective[m] = Rat::one();
            let lp = LinearProgram {
                num_vars: m + 1,
                sense: Sense::Maximize,
                objective,
                constraints,
                bounds: vec![(Some(Rat::zero()), Some(Rat::one())); m + 1],
            };
            let strictly_positive = match solve_lp(&lp)? {
                LpOutcome::Optimal { solution, value, .. } if value.is_positive() => {
                    Some(solution[..m].to_vec())
                }
                _ => None,
            };
            match strictly_positive {
                Some(q) => {
                    for (j, &c) in children.iter().enumerate() {
                        cond[t + 1][c] = q[j].clone();
                    }
                }
                None => {
                    // No strictly positive zero-drift law: the alternative
                    // is a direction with nonnegative one-step gains that
                    // cannot all vanish.
                    let ray = stiemke_direction(model.dim(), &deltas)?;
                    let strategy = one_step_strategy(model, t, a, &ray)?;
                    let witness =
                        ArbitrageWitness::build(model, strategy, WitnessKind::NaViolation)?;
                    return Ok(NaOutcome::Violation(witness));
                }
            }
        }
    }
    // Multiply conditional masses along each outcome's path.
    let mut q = vec![Rat::one(); space.num_outcomes()];
    for w in 0..space.num_outcomes() {
        for t in 0..space.num_times() {
            q[w] *= &cond[t][space.atom_index_of(t, w)];
        }
    }
    let margin = q.iter().min().unwrap().clone();
    let witness = EmmWitness { q, margin };
    witness.verify(model)?;
    Ok(NaOutcome::Emm(witness))
}

/// The direction promised by the strict-positivity alternative: gains
/// `theta . delta_j` all nonnegative and positive for at least one j.
fn stiemke_direction(dim: usize, deltas: &[Vec<Rat>]) -> Result<Vec<Rat>> {
    let constraints = deltas
        .iter()
        .map(|d| Constraint::new(d.clone(), Relation::Ge, Rat::zero()))
        .collect();
    let mut objective = vec![Rat::zero(); dim];
    for d in deltas {
        for (i, v) in d.iter().enumerate() {
            objective[i] += v;
        }
    }
    let lp = LinearProgram {
        num_vars: dim,
        sense: Sense::Maximize,
        objective,
        constraints,
        bounds: vec![(None, None); dim],
    };
    match solve_lp(&lp)? {
        LpOutcome::Unbounded { ray, .. } => Ok(ray),
        _ => Err(Error::verify(
            "one-step market admits neither a positive law nor a profitable direction",
        )),
    }
}

#[derive(Debug, Clone)]
pub struct NaReport {
    pub holds: bool,
    pub emm: Option<EmmWitness>,
    pub witness: Option<ArbitrageWitness>,
}

/// Classical no-arbitrage, decided through the martingale-measure search.
pub fn check_na(model: &MarketModel) -> Result<NaReport> {
    Ok(match find_emm(model)? {
        NaOutcome::Emm(emm) => NaReport {
            holds: true,
            emm: Some(emm),
            witness: None,
        },
        NaOutcome::Violation(w) => NaReport {
            holds: false,
            emm: None,
            witness: Some(w),
        },
    })
}

#[derive(Debug, Clone)]
pub struct NupbrReport {
    pub holds: bool,
    /// Best aggregate terminal gain under the floor; 0 or unbounded.
    pub optimum: Ext,
    pub floor: Rat,
    pub witness: Option<ArbitrageWitness>,
}

/// No unbounded profit with bounded risk: the aggregate terminal gain of
/// strategies confined above `-m` is maximized by one linear program over
/// every (date, atom) position. The verdict does not depend on m > 0: only
/// the recession cone decides whether the program is unbounded.
pub fn check_nupbr(model: &MarketModel, m: &Rat) -> Result<NupbrReport> {
    if m.is_negative() {
        return Err(Error::input("risk floor must be nonnegative"));
    }
    let space = &model.space;
    let d = model.dim();
    // One block of d variables per (date, atom) with date < last.
    let mut block_of = Vec::new();
    let mut offsets = Vec::new();
    let mut num_vars = 0;
    for t in 0..space.num_times() - 1 {
        offsets.push(num_vars);
        for _ in 0..space.atom_count(t) {
            block_of.push(t);
            num_vars += d;
        }
        let _ = &block_of;
    }
    let var_of = |t: usize, atom: usize, i: usize| offsets[t] + atom * d + i;

    let mut objective = vec![Rat::zero(); num_vars];
    for t in 0..space.num_times() - 1 {
        for w in 0..space.num_outcomes() {
            let atom = space.atom_index_of(t, w);
            let delta = model.delta(t, t + 1, w);
            for i in 0..d {
                objective[var_of(t, atom, i)] += &delta[i];
            }
        }
    }

    let mut constraints = Vec::new();
    for u in 1..space.num_times() {
        for members in space.atoms(u) {
            let w = members[0];
            let mut coeffs = vec![Rat::zero(); num_vars];
            for t in 0..u {
                let atom = space.atom_index_of(t, w);
                let delta = model.delta(t, t + 1, w);
                for i in 0..d {
                    coeffs[var_of(t, atom, i)] += &delta[i];
                }
            }
            constraints.push(Constraint::new(coeffs, Relation::Ge, -m.clone()));
        }
    }

    let lp = LinearProgram {
        num_vars,
        sense: Sense::Maximize,
        objective,
        constraints,
        bounds: vec![(None, None); num_vars],
    };
    match solve_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => Ok(NupbrReport {
            holds: true,
            optimum: Ext::Fin(value),
            floor: m.clone(),
            witness: None,
        }),
        LpOutcome::Unbounded { ray, .. } => {
            let positions = (0..space.num_times() - 1)
                .map(|t| {
                    let values = (0..space.num_outcomes())
                        .map(|w| {
                            let atom = space.atom_index_of(t, w);
                            (0..d).map(|i| ray[var_of(t, atom, i)].clone()).collect()
                        })
                        .collect();
                    VecRv::new(d, values)
                })
                .collect();
            let strategy = SimpleStrategy::new(
                model,
                Revision::Deterministic((0..space.num_times()).collect()),
                positions,
            )?;
            let witness = ArbitrageWitness::build(model, strategy, WitnessKind::ConeDirection)?;
            Ok(NupbrReport {
                holds: false,
                optimum: Ext::PosInf,
                floor: m.clone(),
                witness: Some(witness),
            })
        }
        LpOutcome::Infeasible { .. } => Err(Error::verify(
            "the zero strategy should always satisfy the risk floor",
        )),
    }
}
