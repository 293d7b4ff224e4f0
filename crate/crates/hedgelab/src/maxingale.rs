//! Stopping times, the sigma-algebra observed at a stopping time, conditional
//! essential suprema at stopping times, and maxingale verification.
//!
//! A scalar adapted process M is a sub-maxingale when the conditional
//! supremum of M_t given time u dominates M_u for every u <= t, and a strong
//! sub-maxingale when every stopped process M^tau stays a sub-maxingale. The
//! strong property is decided through the equivalent pairwise test
//! esssup at S of M_tau >= M at S min tau, over pairs of stopping times.

use crate::conditional::cond_esssup;
use crate::rational::{format_rat, rat, rint, Rat};
use crate::space::{FilteredSpace, Rv};
use crate::{Error, Result};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// A stopping time on the grid, stored as one time index per outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingTime {
    values: Vec<usize>,
}

impl StoppingTime {
    pub fn new(space: &FilteredSpace, values: Vec<usize>) -> Result<Self> {
        if !space.is_stopping_time(&values)? {
            return Err(Error::input(
                "not a stopping time: some level set is not measurable at its date",
            ));
        }
        Ok(StoppingTime { values })
    }

    pub fn constant(space: &FilteredSpace, t: usize) -> Result<Self> {
        space.check_time(t)?;
        Ok(StoppingTime {
            values: vec![t; space.num_outcomes()],
        })
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn at(&self, w: usize) -> usize {
        self.values[w]
    }

    /// Pointwise minimum; the minimum of two stopping times is one again.
    pub fn min_with(&self, other: &StoppingTime) -> StoppingTime {
        StoppingTime {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a.min(b))
                .collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }
}

/// The sigma-algebra at a stopping time, materialized as a partition. The
/// cell of an outcome w is the time-tau(w) atom containing w: the level set
/// {tau = t} is a union of time-t atoms, so intersecting with it is a no-op.
#[derive(Debug, Clone)]
pub struct StoppedSigmaAlgebra {
    cells: Vec<Vec<usize>>,
    cell_of: Vec<usize>,
}

impl StoppedSigmaAlgebra {
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell_index_of(&self, w: usize) -> usize {
        self.cell_of[w]
    }

    pub fn is_measurable(&self, x: &Rv) -> bool {
        self.cells
            .iter()
            .all(|cell| cell.iter().all(|&w| x.values[w] == x.values[cell[0]]))
    }

    /// Smallest dominating variable measurable for this partition.
    pub fn cell_max(&self, x: &Rv) -> Rv {
        let mut out = x.values.clone();
        for cell in &self.cells {
            let m = cell.iter().map(|&w| &x.values[w]).max().unwrap().clone();
            for &w in cell {
                out[w] = m.clone();
            }
        }
        Rv::new(out)
    }
}

pub fn sigma_at(space: &FilteredSpace, tau: &StoppingTime) -> StoppedSigmaAlgebra {
    let n = space.num_outcomes();
    let mut cell_of = vec![usize::MAX; n];
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<((usize, usize), usize)> = Vec::new();
    for w in 0..n {
        let key = (tau.at(w), space.atom_index_of(tau.at(w), w));
        let idx = match seen.iter().find(|(k, _)| *k == key) {
            Some(&(_, i)) => i,
            None => {
                seen.push((key, cells.len()));
                cells.push(Vec::new());
                cells.len() - 1
            }
        };
        cells[idx].push(w);
        cell_of[w] = idx;
    }
    StoppedSigmaAlgebra { cells, cell_of }
}

/// esssup of x given the information at tau. Cross-checked on every call
/// against the masking identity: restricted to {tau = t} it must agree with
/// the plain time-t conditional supremum.
pub fn cond_esssup_at(space: &FilteredSpace, tau: &StoppingTime, x: &Rv) -> Result<Rv> {
    space.check_rv(x)?;
    let sig = sigma_at(space, tau);
    let out = sig.cell_max(x);
    let mut attained: Vec<usize> = tau.values().to_vec();
    attained.sort_unstable();
    attained.dedup();
    for t in attained {
        let set: Vec<usize> = (0..x.values.len()).filter(|&w| tau.at(w) == t).collect();
        let mask = Rv::indicator(x.values.len(), &set);
        let lhs = sig.cell_max(&x.mul(&mask));
        let rhs = cond_esssup(space, t, x)?.mul(&mask);
        if lhs != rhs {
            return Err(Error::verify(
                "stopping-time esssup violates the masking identity",
            ));
        }
    }
    Ok(out)
}

fn check_layers(space: &FilteredSpace, m: &[Rv]) -> Result<()> {
    if m.len() != space.num_times() {
        return Err(Error::input("process needs one layer per date"));
    }
    for (t, layer) in m.iter().enumerate() {
        space.check_rv(layer)?;
        if !space.is_measurable(t, layer)? {
            return Err(Error::input(format!(
                "process layer {t} is not measurable at its date"
            )));
        }
    }
    Ok(())
}

/// M evaluated at the stopping time: w goes to M_{tau(w)}(w).
pub fn value_at(space: &FilteredSpace, m: &[Rv], tau: &StoppingTime) -> Result<Rv> {
    if m.len() != space.num_times() {
        return Err(Error::input("process needs one layer per date"));
    }
    Ok(Rv::new(
        (0..space.num_outcomes())
            .map(|w| m[tau.at(w)].values[w].clone())
            .collect(),
    ))
}

/// The stopped process M^tau, layer by layer: (M^tau)_t = M_{tau min t}.
pub fn stopped_layers(space: &FilteredSpace, m: &[Rv], tau: &StoppingTime) -> Result<Vec<Rv>> {
    (0..space.num_times())
        .map(|t| {
            let cut = tau.min_with(&StoppingTime::constant(space, t)?);
            value_at(space, m, &cut)
        })
        .collect()
}

/// First failing (u, t, atom) of a deterministic-pair maxingale check.
#[derive(Debug, Clone)]
pub struct PairViolation {
    pub u: usize,
    pub t: usize,
    pub atom: usize,
    pub conditional_sup: Rat,
    pub level: Rat,
}

#[derive(Debug, Clone)]
pub struct DetVerdict {
    pub holds: bool,
    pub violation: Option<PairViolation>,
}

fn deterministic_pairs(
    space: &FilteredSpace,
    m: &[Rv],
    sub: bool,
) -> Result<DetVerdict> {
    check_layers(space, m)?;
    for u in 0..space.num_times() {
        for t in u..space.num_times() {
            let sup = cond_esssup(space, u, &m[t])?;
            for (a, atom) in space.atoms(u).iter().enumerate() {
                let w = atom[0];
                let bad = if sub {
                    sup.values[w] < m[u].values[w]
                } else {
                    sup.values[w] > m[u].values[w]
                };
                if bad {
                    return Ok(DetVerdict {
                        holds: false,
                        violation: Some(PairViolation {
                            u,
                            t,
                            atom: a,
                            conditional_sup: sup.values[w].clone(),
                            level: m[u].values[w].clone(),
                        }),
                    });
                }
            }
        }
    }
    Ok(DetVerdict {
        holds: true,
        violation: None,
    })
}

/// Sub-maxingale test over all deterministic date pairs u <= t.
pub fn is_sub_maxingale(space: &FilteredSpace, m: &[Rv]) -> Result<DetVerdict> {
    deterministic_pairs(space, m, true)
}

/// Super-maxingale test; equivalent to the process being pathwise
/// non-increasing, which the tests cross-check.
pub fn is_super_maxingale(space: &FilteredSpace, m: &[Rv]) -> Result<DetVerdict> {
    deterministic_pairs(space, m, false)
}

fn child_atoms(space: &FilteredSpace, t: usize, members: &[usize]) -> Vec<usize> {
    let mut ids: Vec<usize> = members
        .iter()
        .map(|&w| space.atom_index_of(t + 1, w))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn count_node(space: &FilteredSpace, t: usize, members: &[usize]) -> u128 {
    if t + 1 == space.num_times() {
        return 1;
    }
    let mut product: u128 = 1;
    for c in child_atoms(space, t, members) {
        product = product.saturating_mul(count_node(space, t + 1, &space.atoms(t + 1)[c]));
    }
    product.saturating_add(1)
}

/// Number of stopping times on the grid: each node independently stops or
/// defers to its children, so counts multiply across siblings.
pub fn count_stopping_times(space: &FilteredSpace) -> u128 {
    let mut total: u128 = 1;
    for atom in space.atoms(0) {
        total = total.saturating_mul(count_node(space, 0, atom));
    }
    total
}

fn enum_node(space: &FilteredSpace, t: usize, members: &[usize]) -> Vec<Vec<(usize, usize)>> {
    // Stop-here first, then every way the children can carry on; this fixes
    // the canonical ordering used by sampled reports.
    let mut out = vec![members.iter().map(|&w| (w, t)).collect::<Vec<_>>()];
    if t + 1 < space.num_times() {
        let mut combos: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        for c in child_atoms(space, t, members) {
            let sub = enum_node(space, t + 1, &space.atoms(t + 1)[c]);
            let mut next = Vec::with_capacity(combos.len() * sub.len());
            for base in &combos {
                for branch in &sub {
                    let mut merged = base.clone();
                    merged.extend_from_slice(branch);
                    next.push(merged);
                }
            }
            combos = next;
        }
        out.extend(combos);
    }
    out
}

const ENUM_CAP: u128 = 1 << 20;

/// All stopping times in canonical order; refuses absurd cardinalities.
pub fn enumerate_stopping_times(space: &FilteredSpace) -> Result<Vec<StoppingTime>> {
    let total = count_stopping_times(space);
    if total > ENUM_CAP {
        return Err(Error::input(format!(
            "{total} stopping times exceed the enumeration cap"
        )));
    }
    let mut combos: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for atom in space.atoms(0) {
        let sub = enum_node(space, 0, atom);
        let mut next = Vec::with_capacity(combos.len() * sub.len());
        for base in &combos {
            for branch in &sub {
                let mut merged = base.clone();
                merged.extend_from_slice(branch);
                next.push(merged);
            }
        }
        combos = next;
    }
    combos
        .into_iter()
        .map(|assign| {
            let mut values = vec![0usize; space.num_outcomes()];
            for (w, t) in assign {
                values[w] = t;
            }
            StoppingTime::new(space, values)
        })
        .collect()
}

fn sample_rec(
    space: &FilteredSpace,
    t: usize,
    members: &[usize],
    rng: &mut ChaCha20Rng,
    values: &mut [usize],
) {
    if t + 1 == space.num_times() || rng.gen_range(0..2) == 0 {
        for &w in members {
            values[w] = t;
        }
        return;
    }
    for c in child_atoms(space, t, members) {
        sample_rec(space, t + 1, &space.atoms(t + 1)[c], rng, values);
    }
}

/// One stopping time drawn by fair stop-or-continue decisions per node.
pub fn sample_stopping_time(space: &FilteredSpace, rng: &mut ChaCha20Rng) -> StoppingTime {
    let mut values = vec![0usize; space.num_outcomes()];
    for atom in space.atoms(0) {
        sample_rec(space, 0, atom, rng, &mut values);
    }
    StoppingTime::new(space, values).expect("sampled decisions always stop validly")
}

#[derive(Debug, Clone)]
pub struct StrongViolation {
    pub s: StoppingTime,
    pub tau: StoppingTime,
    pub outcome: usize,
}

#[derive(Debug, Clone)]
pub struct StrongVerdict {
    pub holds: bool,
    pub exhaustive: bool,
    pub pairs_checked: u128,
    pub violation: Option<StrongViolation>,
}

fn pair_violates(
    space: &FilteredSpace,
    m: &[Rv],
    sig_s: &StoppedSigmaAlgebra,
    s: &StoppingTime,
    tau: &StoppingTime,
) -> Result<Option<usize>> {
    let m_tau = value_at(space, m, tau)?;
    let lhs = sig_s.cell_max(&m_tau);
    let stopped = value_at(space, m, &s.min_with(tau))?;
    Ok((0..space.num_outcomes()).find(|&w| lhs.values[w] < stopped.values[w]))
}

/// Strong sub-maxingale check. Exhaustive over all stopping-time pairs when
/// their number fits the budget; otherwise a seeded sample that always
/// includes every deterministic pair. Exhaustive runs also re-derive the
/// verdict from the stopped-process definition and insist on agreement.
pub fn is_strong_sub_maxingale(
    space: &FilteredSpace,
    m: &[Rv],
    budget: usize,
    seed: u64,
) -> Result<StrongVerdict> {
    check_layers(space, m)?;
    let count = count_stopping_times(space);
    let pairs_total = count.saturating_mul(count);
    if pairs_total <= budget as u128 {
        let taus = enumerate_stopping_times(space)?;
        let mut violation = None;
        'outer: for s in &taus {
            let sig = sigma_at(space, s);
            for tau in &taus {
                if let Some(w) = pair_violates(space, m, &sig, s, tau)? {
                    violation = Some(StrongViolation {
                        s: s.clone(),
                        tau: tau.clone(),
                        outcome: w,
                    });
                    break 'outer;
                }
            }
        }
        let mut def_holds = true;
        for tau in &taus {
            let layers = stopped_layers(space, m, tau)?;
            if !is_sub_maxingale(space, &layers)?.holds {
                def_holds = false;
                break;
            }
        }
        if def_holds != violation.is_none() {
            return Err(Error::verify(
                "pairwise and stopped-process strong tests disagree",
            ));
        }
        Ok(StrongVerdict {
            holds: violation.is_none(),
            exhaustive: true,
            pairs_checked: pairs_total,
            violation,
        })
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let consts: Vec<StoppingTime> = (0..space.num_times())
            .map(|t| StoppingTime::constant(space, t))
            .collect::<Result<_>>()?;
        let mut pairs: Vec<(StoppingTime, StoppingTime)> = Vec::new();
        for s in &consts {
            for tau in &consts {
                pairs.push((s.clone(), tau.clone()));
            }
        }
        while pairs.len() < budget.max(consts.len() * consts.len()) {
            pairs.push((
                sample_stopping_time(space, &mut rng),
                sample_stopping_time(space, &mut rng),
            ));
        }
        let mut violation = None;
        for (s, tau) in &pairs {
            let sig = sigma_at(space, s);
            if let Some(w) = pair_violates(space, m, &sig, s, tau)? {
                violation = Some(StrongViolation {
                    s: s.clone(),
                    tau: tau.clone(),
                    outcome: w,
                });
                break;
            }
        }
        Ok(StrongVerdict {
            holds: violation.is_none(),
            exhaustive: false,
            pairs_checked: pairs.len() as u128,
            violation,
        })
    }
}

/// Executable form of the identity chain behind the strong verdicts:
/// dominance of stopped values at deterministic dates, the masking identity
/// for conditional sups along a stopping time, dominance over stopping-time
/// pairs, and agreement between the pairwise and stopped-process strong
/// verdicts.  The two dominance identities only hold for sub-maxingales and
/// are skipped (None) otherwise; masking and the bridge are unconditional.
#[derive(Debug, Clone)]
pub struct LemmaSuiteReport {
    pub exhaustive: bool,
    pub stopping_times: u128,
    pub pairs_checked: u128,
    pub is_sub: bool,
    pub stopped_dominance: Option<bool>,
    pub masking: bool,
    pub pair_dominance: Option<bool>,
    pub bridge_agrees: bool,
}

impl LemmaSuiteReport {
    pub fn all_hold(&self) -> bool {
        self.stopped_dominance.unwrap_or(true)
            && self.masking
            && self.pair_dominance.unwrap_or(true)
            && self.bridge_agrees
    }
}

pub fn lemma_suite(
    space: &FilteredSpace,
    m: &[Rv],
    x: &Rv,
    budget: usize,
    seed: u64,
) -> Result<LemmaSuiteReport> {
    check_layers(space, m)?;
    space.check_rv(x)?;
    let count = count_stopping_times(space);
    let exhaustive = count.saturating_mul(count) <= budget as u128;
    let taus: Vec<StoppingTime> = if exhaustive {
        enumerate_stopping_times(space)?
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut sampled: Vec<StoppingTime> = (0..space.num_times())
            .map(|t| StoppingTime::constant(space, t))
            .collect::<Result<_>>()?;
        let want = (budget as f64).sqrt().ceil() as usize;
        while sampled.len() < want.max(space.num_times()) {
            sampled.push(sample_stopping_time(space, &mut rng));
        }
        sampled
    };

    let is_sub = is_sub_maxingale(space, m)?.holds;

    // Masking: on {tau = t} the sup against sigma(tau) is the date-t sup.
    let mut masking = true;
    'mask: for tau in &taus {
        let sig = sigma_at(space, tau);
        for t in 0..space.num_times() {
            let set: Vec<usize> = (0..space.num_outcomes())
                .filter(|&w| tau.at(w) == t)
                .collect();
            let mask = Rv::indicator(space.num_outcomes(), &set);
            if sig.cell_max(&x.mul(&mask)) != cond_esssup(space, t, x)?.mul(&mask) {
                masking = false;
                break 'mask;
            }
        }
    }

    let mut stopped_dominance = None;
    let mut pair_dominance = None;
    if is_sub {
        let mut ok_stopped = true;
        'sd: for tau in &taus {
            let m_tau = value_at(space, m, tau)?;
            for u in 0..space.num_times() {
                let cut = tau.min_with(&StoppingTime::constant(space, u)?);
                let floor = value_at(space, m, &cut)?;
                let sup = cond_esssup(space, u, &m_tau)?;
                if !floor.le(&sup) {
                    ok_stopped = false;
                    break 'sd;
                }
            }
        }
        stopped_dominance = Some(ok_stopped);
        let mut ok_pairs = true;
        'pd: for s in &taus {
            let sig = sigma_at(space, s);
            for tau in &taus {
                if pair_violates(space, m, &sig, s, tau)?.is_some() {
                    ok_pairs = false;
                    break 'pd;
                }
            }
        }
        pair_dominance = Some(ok_pairs);
    }

    let strong = is_strong_sub_maxingale(space, m, budget, seed)?;
    let mut def_holds = true;
    for tau in &taus {
        let layers = stopped_layers(space, m, tau)?;
        if !is_sub_maxingale(space, &layers)?.holds {
            def_holds = false;
            break;
        }
    }
    let bridge_agrees = strong.holds == def_holds;

    Ok(LemmaSuiteReport {
        exhaustive,
        stopping_times: count,
        pairs_checked: strong.pairs_checked,
        is_sub,
        stopped_dominance,
        masking,
        pair_dominance,
        bridge_agrees,
    })
}

/// A stopping time discretized from above onto the level-n dyadic grid,
/// together with the refined space it lives on.
#[derive(Debug)]
pub struct DyadicRefinement {
    pub space: FilteredSpace,
    pub tau: StoppingTime,
    /// original time index -> dyadic grid index
    pub time_map: Vec<usize>,
}

/// Rounds tau up to the next dyadic date: values in ((i)T/2^n, (i+1)T/2^n]
/// map to (i+1)T/2^n, and 0 maps one cell up to T/2^n. Requires every
/// original date to sit on the level-n grid.
pub fn dyadic_refine(space: &FilteredSpace, tau: &StoppingTime, n: u32) -> Result<DyadicRefinement> {
    if n == 0 || n > 24 {
        return Err(Error::input("refinement level out of range"));
    }
    if space.num_times() < 2 {
        return Err(Error::input("refinement needs at least two dates"));
    }
    let times = space.numeric_times()?;
    if !times[0].is_zero() {
        return Err(Error::input("time grid must start at 0"));
    }
    let horizon = times.last().unwrap().clone();
    let cells: u64 = 1 << n;
    let denom = rint(cells as i64);
    let mut time_map = Vec::with_capacity(space.num_times());
    for t in &times {
        let q = t * &denom / &horizon;
        if !q.is_integer() {
            return Err(Error::input(format!(
                "date {} does not sit on the level-{} dyadic grid",
                format_rat(t),
                n
            )));
        }
        time_map.push(q.to_integer().try_into().unwrap_or(usize::MAX));
    }
    let mut labels = Vec::with_capacity(cells as usize + 1);
    let mut partitions = Vec::with_capacity(cells as usize + 1);
    let mut orig = 0usize;
    for i in 0..=cells {
        let u = &horizon * rat(i as i64, cells as i64);
        labels.push(format_rat(&u));
        while orig + 1 < space.num_times() && times[orig + 1] <= u {
            orig += 1;
        }
        partitions.push(space.atoms(orig).to_vec());
    }
    let outcome_labels: Vec<String> = (0..space.num_outcomes())
        .map(|w| space.outcome_label(w).to_string())
        .collect();
    let prob: Vec<Rat> = (0..space.num_outcomes())
        .map(|w| space.prob(w).clone())
        .collect();
    let refined = if space.terminal_relaxed() {
        FilteredSpace::new_relaxed(outcome_labels, labels, partitions, prob)?
    } else {
        FilteredSpace::new(outcome_labels, labels, partitions, prob)?
    };
    let values: Vec<usize> = tau
        .values()
        .iter()
        .map(|&t| time_map[t].max(1))
        .collect();
    let tau_n = StoppingTime::new(&refined, values)?;
    Ok(DyadicRefinement {
        space: refined,
        tau: tau_n,
        time_map,
    })
}

/// Experiment: hunt for a sub-maxingale that is not a strong sub-maxingale.
/// On finite grids the lemma chain rules one out, so a hit is a bug sentinel;
/// the search reports its tally either way without claiming more.
#[derive(Debug, Clone)]
pub struct GapSearch {
    pub attempts: usize,
    pub sub_maxingales: usize,
    pub gaps: usize,
    pub example: Option<Vec<Rv>>,
}

pub fn strong_gap_search(
    space: &FilteredSpace,
    attempts: usize,
    budget: usize,
    seed: u64,
) -> Result<GapSearch> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut found = GapSearch {
        attempts,
        sub_maxingales: 0,
        gaps: 0,
        example: None,
    };
    for _ in 0..attempts {
        let m: Vec<Rv> = (0..space.num_times())
            .map(|t| {
                let mut vals = vec![Rat::zero(); space.num_outcomes()];
                for atom in space.atoms(t) {
                    let v = rat(rng.gen_range(-9..=9), rng.gen_range(1..=3));
                    for &w in atom {
                        vals[w] = v.clone();
                    }
                }
                Rv::new(vals)
            })
            .collect();
        if !is_sub_maxingale(space, &m)?.holds {
            continue;
        }
        found.sub_maxingales += 1;
        if !is_strong_sub_maxingale(space, &m, budget, seed)?.holds {
            found.gaps += 1;
            if found.example.is_none() {
                found.example = Some(m);
            }
        }
    }
    Ok(found)
}
