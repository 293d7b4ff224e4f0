//! Market models, simple strategies revised on deterministic dates or at
//! stopping times, the portfolio value operator, admissibility with a floor,
//! and finite portfolio menus with their decomposable glued extensions.

use crate::maxingale::{sigma_at, StoppingTime};
use crate::rational::Rat;
use crate::space::{AdaptedProcess, FilteredSpace, Rv, VecRv};
use crate::{Error, Result};
use num_traits::Zero;

/// d risky assets plus an implicit constant bond; prices adapted and
/// coordinate-wise nonnegative.
#[derive(Debug, Clone)]
pub struct MarketModel {
    pub space: FilteredSpace,
    pub prices: AdaptedProcess,
}

impl MarketModel {
    pub fn new(space: FilteredSpace, prices: AdaptedProcess) -> Result<Self> {
        if prices.num_times() != space.num_times() {
            return Err(Error::input("price process must cover every grid time"));
        }
        for t in 0..space.num_times() {
            for w in 0..space.num_outcomes() {
                if prices.at(t, w).iter().any(|c| c < &Rat::zero()) {
                    return Err(Error::input(format!(
                        "negative asset price at time {t}, outcome {w}"
                    )));
                }
            }
        }
        Ok(MarketModel { space, prices })
    }

    pub fn dim(&self) -> usize {
        self.prices.dim
    }

    /// S_{t2}(w) - S_{t1}(w), coordinate-wise.
    pub fn delta(&self, t1: usize, t2: usize, w: usize) -> Vec<Rat> {
        self.prices
            .at(t2, w)
            .iter()
            .zip(self.prices.at(t1, w))
            .map(|(b, a)| b - a)
            .collect()
    }
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Revision dates of a simple strategy. A position is opened at each date
/// except the last, which only closes the preceding one.
#[derive(Debug, Clone)]
pub enum Revision {
    /// Strictly increasing grid time indexes.
    Deterministic(Vec<usize>),
    /// Pathwise strictly increasing stopping times.
    Stopping(Vec<StoppingTime>),
}

#[derive(Debug, Clone)]
pub struct SimpleStrategy {
    pub revision: Revision,
    /// positions[i] is held on the interval from revision i to revision i+1.
    pub positions: Vec<VecRv>,
}

impl SimpleStrategy {
    pub fn new(model: &MarketModel, revision: Revision, positions: Vec<VecRv>) -> Result<Self> {
        let space = &model.space;
        let count = match &revision {
            Revision::Deterministic(dates) => {
                if dates.is_empty() {
                    return Err(Error::input("strategy needs at least one revision date"));
                }
                for &t in dates {
                    space.check_time(t)?;
                }
                if !dates.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::input("revision dates must strictly increase"));
                }
                dates.len()
            }
            Revision::Stopping(taus) => {
                if taus.is_empty() {
                    return Err(Error::input("strategy needs at least one revision date"));
                }
                for tau in taus {
                    if tau.values().len() != space.num_outcomes() {
                        return Err(Error::input("stopping time keyed to another space"));
                    }
                    if !space.is_stopping_time(tau.values())? {
                        return Err(Error::input("revision is not a stopping time"));
                    }
                }
                for pair in taus.windows(2) {
                    let strict = (0..space.num_outcomes())
                        .all(|w| pair[0].at(w) < pair[1].at(w));
                    if !strict {
                        return Err(Error::input(
                            "revision stopping times must strictly increase pathwise",
                        ));
                    }
                }
                taus.len()
            }
        };
        if positions.len() + 1 != count {
            return Err(Error::input(
                "need exactly one position per revision interval",
            ));
        }
        for (i, theta) in positions.iter().enumerate() {
            space.check_vec_rv(theta)?;
            if theta.dim != model.dim() {
                return Err(Error::input("position dimension must match the assets"));
            }
            let ok = match &revision {
                Revision::Deterministic(dates) => (0..theta.dim)
                    .all(|c| space_is_measurable(space, dates[i], &theta.coordinate(c))),
                Revision::Stopping(taus) => {
                    let sig = sigma_at(space, &taus[i]);
                    (0..theta.dim).all(|c| sig.is_measurable(&theta.coordinate(c)))
                }
            };
            if !ok {
                return Err(Error::input(format!(
                    "position {i} anticipates information past its revision date"
                )));
            }
        }
        Ok(SimpleStrategy {
            revision,
            positions,
        })
    }

    /// All-zero positions over the full grid.
    pub fn zero(model: &MarketModel) -> Result<Self> {
        let space = &model.space;
        let n = space.num_outcomes();
        let zero_theta = VecRv::new(model.dim(), vec![vec![Rat::zero(); model.dim()]; n]);
        Self::new(
            model,
            Revision::Deterministic((0..space.num_times()).collect()),
            vec![zero_theta; space.num_times() - 1],
        )
    }

    /// Earliest date any position can open.
    pub fn anchor(&self) -> usize {
        match &self.revision {
            Revision::Deterministic(dates) => dates[0],
            Revision::Stopping(taus) => taus[0].values().iter().copied().min().unwrap(),
        }
    }

    pub fn num_revisions(&self) -> usize {
        match &self.revision {
            Revision::Deterministic(dates) => dates.len(),
            Revision::Stopping(taus) => taus.len(),
        }
    }

    /// Revision date of position i as seen on path w.
    #[cfg(test)]
    fn date(&self, i: usize, w: usize) -> usize {
        match &self.revision {
            Revision::Deterministic(dates) => dates[i],
            Revision::Stopping(taus) => taus[i].values()[w],
        }
    }

    /// Pointwise scaling of every position by a nonnegative variable known
    /// at the anchor; keeps measurability, realizes the cone property.
    pub fn scale_positions(&self, model: &MarketModel, alpha: &Rv) -> Result<SimpleStrategy> {
        let space = &model.space;
        space.check_rv(alpha)?;
        if !alpha.is_nonneg() {
            return Err(Error::input("scaling factor must be nonnegative"));
        }
        if !space.is_measurable(self.anchor(), alpha)? {
            return Err(Error::input(
                "scaling factor must be known at the strategy anchor",
            ));
        }
        let positions = self
            .positions
            .iter()
            .map(|theta| {
                VecRv::new(
                    theta.dim,
                    theta
                        .values
                        .iter()
                        .enumerate()
                        .map(|(w, row)| row.iter().map(|c| c * &alpha.values[w]).collect())
                        .collect(),
                )
            })
            .collect();
        SimpleStrategy::new(model, self.revision.clone(), positions)
    }
}

fn space_is_measurable(space: &FilteredSpace, t: usize, x: &Rv) -> bool {
    space.is_measurable(t, x).unwrap_or(false)
}

/// The value at date u of trading through the revision sequence:
/// sum over i of theta_{i-1} . (S_{tau_i min u} - S_{tau_{i-1} min u}).
/// Zero at the anchor, and the two revision flavors share nothing but this
/// formula, which the tests exploit to cross-check them.
pub fn portfolio_value(model: &MarketModel, strat: &SimpleStrategy, u: usize) -> Result<Rv> {
    let space = &model.space;
    space.check_time(u)?;
    if u < strat.anchor() {
        return Err(Error::input("valuation date precedes the strategy anchor"));
    }
    let n = space.num_outcomes();
    let mut out = vec![Rat::zero(); n];
    match &strat.revision {
        Revision::Deterministic(dates) => {
            for i in 1..dates.len() {
                let hi = dates[i].min(u);
                let lo = dates[i - 1].min(u);
                if hi == lo {
                    continue;
                }
                for (w, acc) in out.iter_mut().enumerate() {
                    *acc += dot(strat.positions[i - 1].at(w), &model.delta(lo, hi, w));
                }
            }
        }
        Revision::Stopping(taus) => {
            for i in 1..taus.len() {
                for (w, acc) in out.iter_mut().enumerate() {
                    let hi = taus[i].at(w).min(u);
                    let lo = taus[i - 1].at(w).min(u);
                    if hi > lo {
                        *acc += dot(strat.positions[i - 1].at(w), &model.delta(lo, hi, w));
                    }
                }
            }
        }
    }
    Ok(Rv::new(out))
}

/// True when the value process never drops below -m on any grid date from
/// the anchor on.
pub fn is_admissible(model: &MarketModel, strat: &SimpleStrategy, m: &Rat) -> Result<bool> {
    if m < &Rat::zero() {
        return Err(Error::input("admissibility floor must be nonnegative"));
    }
    let floor = -m.clone();
    for u in strat.anchor()..model.space.num_times() {
        let v = portfolio_value(model, strat, u)?;
        if v.values.iter().any(|x| x < &floor) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A finite list of terminal values reachable from zero capital at the
/// anchor date. Entries are abstract: they need not come from any strategy.
#[derive(Debug, Clone)]
pub struct PortfolioMenu {
    pub anchor: usize,
    pub names: Vec<String>,
    pub entries: Vec<Rv>,
}

impl PortfolioMenu {
    pub fn new(
        space: &FilteredSpace,
        anchor: usize,
        names: Vec<String>,
        entries: Vec<Rv>,
    ) -> Result<Self> {
        space.check_time(anchor)?;
        if names.len() != entries.len() {
            return Err(Error::input("menu names and entries must pair up"));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::input(format!("duplicate menu entry name {name}")));
            }
        }
        for e in &entries {
            space.check_rv(e)?;
        }
        Ok(PortfolioMenu {
            anchor,
            names,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The decomposable extension of a menu: entries glued atom-by-atom along
/// the anchor partition.
#[derive(Debug, Clone)]
pub struct IdExtension {
    pub base: PortfolioMenu,
}

const ID_ENUM_CAP: usize = 1 << 16;

impl IdExtension {
    pub fn new(base: PortfolioMenu) -> Self {
        IdExtension { base }
    }

    /// Glue one entry per anchor atom: the value is entries[assignment[a]]
    /// on atom a.
    pub fn entry(&self, space: &FilteredSpace, assignment: &[usize]) -> Result<Rv> {
        let atoms = space.atoms(self.base.anchor);
        if assignment.len() != atoms.len() {
            return Err(Error::input(format!(
                "assignment covers {} atoms, the anchor partition has {}",
                assignment.len(),
                atoms.len()
            )));
        }
        let mut values = vec![Rat::zero(); space.num_outcomes()];
        for (a, atom) in atoms.iter().enumerate() {
            let pick = assignment[a];
            if pick >= self.base.entries.len() {
                return Err(Error::input(format!("assignment {pick} names no entry")));
            }
            for &w in atom {
                values[w] = self.base.entries[pick].values[w].clone();
            }
        }
        Ok(Rv::new(values))
    }

    /// Every assignment with its glued value, in odometer order; k entries
    /// over m atoms give exactly k^m of them.
    pub fn enumerate(&self, space: &FilteredSpace) -> Result<Vec<(Vec<usize>, Rv)>> {
        let k = self.base.entries.len();
        let m = space.atoms(self.base.anchor).len();
        if k == 0 {
            return Ok(Vec::new());
        }
        let total = k.checked_pow(m as u32).filter(|&t| t <= ID_ENUM_CAP);
        let Some(total) = total else {
            return Err(Error::input("id-extension too large to enumerate"));
        };
        let mut out = Vec::with_capacity(total);
        let mut assignment = vec![0usize; m];
        loop {
            out.push((assignment.clone(), self.entry(space, &assignment)?));
            let mut pos = 0;
            loop {
                if pos == m {
                    return Ok(out);
                }
                assignment[pos] += 1;
                if assignment[pos] < k {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
        }
    }
}
