//! Super-hedging prices. The dynamic program walks the tree backward, one
//! exact linear program per atom; menus of portfolio values are priced
//! through the conditional supremum, extended by gluing entries across
//! anchor atoms, and their price sets are closed under the sequence limits
//! of the decidable fragment. Infinite values are first-class: -inf marks
//! nodes offering instantaneous profits, +inf the empty menu.

use crate::conditional::cond_esssup;
use crate::lp::{solve_lp, Constraint, LinearProgram, LpOutcome, Relation, Sense};
use crate::market::{portfolio_value, MarketModel, PortfolioMenu, Revision, SimpleStrategy};
use crate::rational::{Ext, Rat};
use crate::space::{FilteredSpace, Rv, VecRv};
use crate::topology::{converges, SequenceSpec, Tail};
use crate::{Error, Result};
use num_traits::{One, Zero};

/// An extended-valued process with one F_t-measurable layer per grid date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceProcess {
    /// layers[t][w], constant on every date-t atom.
    pub layers: Vec<Vec<Ext>>,
}

impl PriceProcess {
    pub fn new(space: &FilteredSpace, layers: Vec<Vec<Ext>>) -> Result<Self> {
        if layers.len() != space.num_times() {
            return Err(Error::input("one price layer per grid date"));
        }
        for (t, layer) in layers.iter().enumerate() {
            if layer.len() != space.num_outcomes() {
                return Err(Error::input("price layer keyed by outcome"));
            }
            for members in space.atoms(t) {
                let first = &layer[members[0]];
                if members.iter().any(|&w| &layer[w] != first) {
                    return Err(Error::input(format!(
                        "price layer at date {t} is not measurable"
                    )));
                }
            }
        }
        Ok(PriceProcess { layers })
    }

    pub fn at(&self, t: usize, w: usize) -> &Ext {
        &self.layers[t][w]
    }

    pub fn finite_everywhere(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.iter().all(|e| matches!(e, Ext::Fin(_))))
    }

    /// The date-t layer as a plain random variable, when finite.
    pub fn finite_layer(&self, t: usize) -> Option<Rv> {
        let values = self.layers[t]
            .iter()
            .map(|e| match e {
                Ext::Fin(v) => Some(v.clone()),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Rv::new(values))
    }
}

#[derive(Debug, Clone)]
pub struct SuperhedgeResult {
    pub prices: PriceProcess,
    /// positions[t][atom]: the minimizing one-step position, where finite.
    pub positions: Vec<Vec<Option<Vec<Rat>>>>,
    /// The assembled minimal super-hedge, when every node is finite.
    pub strategy: Option<SimpleStrategy>,
}

/// Minimal super-hedging price of the terminal claim `h`, by backward
/// recursion. At each atom the cheapest capital p with a position theta
/// covering every child continuation is an exact linear program; an
/// unbounded program certifies an instantaneous profit and prices the node
/// at -inf, which then propagates toward the root.
pub fn superhedge_dp(model: &MarketModel, h: &Rv) -> Result<SuperhedgeResult> {
    let space = &model.space;
    space.check_rv(h)?;
    let d = model.dim();
    let last = space.last_time();
    let mut layers: Vec<Vec<Ext>> = vec![vec![Ext::Fin(Rat::zero()); space.num_outcomes()]; last + 1];
    layers[last] = h.values.iter().cloned().map(Ext::Fin).collect();
    let mut positions: Vec<Vec<Option<Vec<Rat>>>> = (0..last)
        .map(|t| vec![None; space.atom_count(t)])
        .collect();

    for t in (0..last).rev() {
        for (a, members) in space.atoms(t).iter().enumerate() {
            let mut children = Vec::new();
            for &w in members {
                let c = space.atom_index_of(t + 1, w);
                if !children.contains(&c) {
                    children.push(c);
                }
            }
            let reps: Vec<usize> = children.iter().map(|&c| space.atoms(t + 1)[c][0]).collect();
            if reps.iter().any(|&w| layers[t + 1][w] == Ext::PosInf) {
                for &w in members {
                    layers[t][w] = Ext::PosInf;
                }
                continue;
            }
            // Constraints only bind where the continuation is finite.
            let bound: Vec<(usize, Rat)> = reps
                .iter()
                .filter_map(|&w| match &layers[t + 1][w] {
                    Ext::Fin(v) => Some((w, v.clone())),
                    _ => None,
                })
                .collect();
            if bound.is_empty() {
                for &w in members {
                    layers[t][w] = Ext::NegInf;
                }
                continue;
            }
            // min p  s.t.  p + theta . (S_{t+1} - S_t) >= continuation.
            let constraints = bound
                .iter()
                .map(|(w, v)| {
                    let delta = model.delta(t, t + 1, *w);
                    let mut coeffs = Vec::with_capacity(d + 1);
                    coeffs.push(Rat::one());
                    coeffs.extend(delta);
                    Constraint::new(coeffs, Relation::Ge, v.clone())
                })
                .collect();
            let mut objective = vec![Rat::zero(); d + 1];
            objective[0] = Rat::one();
            let lp = LinearProgram {
                num_vars: d + 1,
                sense: Sense::Minimize,
                objective,
                constraints,
                bounds: vec![(None, None); d + 1],
            };
            match solve_lp(&lp)? {
                LpOutcome::Optimal { solution, value, .. } => {
                    for &w in members {
                        layers[t][w] = Ext::Fin(value.clone());
                    }
                    positions[t][a] = Some(solution[1..].to_vec());
                }
                LpOutcome::Unbounded { .. } => {
                    for &w in members {
                        layers[t][w] = Ext::NegInf;
                    }
                }
                LpOutcome::Infeasible { .. } => {
                    return Err(Error::verify(
                        "a large enough capital always super-hedges finitely many values",
                    ));
                }
            }
        }
    }

    let prices = PriceProcess::new(space, layers)?;
    let strategy = if prices.finite_everywhere() && last > 0 {
        let per_step: Vec<VecRv> = (0..last)
            .map(|t| {
                let values = (0..space.num_outcomes())
                    .map(|w| {
                        positions[t][space.atom_index_of(t, w)]
                            .clone()
                            .expect("finite node stores its position")
                    })
                    .collect();
                VecRv::new(d, values)
            })
            .collect();
        let strat = SimpleStrategy::new(
            model,
            Revision::Deterministic((0..=last).collect()),
            per_step,
        )?;
        // The minimal capital plus the assembled gains must dominate the
        // price process date by date, and the claim at the end.
        let p0 = prices.finite_layer(0).expect("all finite");
        for u in 0..=last {
            let v = portfolio_value(model, &strat, u)?;
            let pu = prices.finite_layer(u).expect("all finite");
            if !pu.le(&p0.add(&v)) {
                return Err(Error::verify("super-hedge fails to dominate its own tail"));
            }
        }
        Some(strat)
    } else {
        None
    };
    Ok(SuperhedgeResult {
        prices,
        positions,
        strategy,
    })
}

/// How the admissible initial prices of a claim look against a menu of
/// portfolio values anchored at one date.
#[derive(Debug, Clone)]
pub struct PriceSetDescription {
    pub time: usize,
    /// p(V) = esssup_t(h - V), one per menu entry.
    pub entry_prices: Vec<Rv>,
    /// Pointwise infimum over the menu; +inf when the menu is empty.
    pub pi: Vec<Ext>,
    /// Where the infimum is attained; the whole space for nonempty menus.
    pub lambda: Vec<bool>,
    /// Per anchor atom, the first entry whose price attains pi there.
    pub atom_argmin: Vec<usize>,
    /// A single entry priced at pi everywhere, when one exists.
    pub uniform_attainer: Option<usize>,
}

/// Prices the claim `h` against every menu entry and takes the pointwise
/// infimum, the id-extension price.
pub fn menu_price_set(
    space: &FilteredSpace,
    menu: &PortfolioMenu,
    h: &Rv,
) -> Result<PriceSetDescription> {
    space.check_rv(h)?;
    let t = menu.anchor;
    let entry_prices = menu
        .entries
        .iter()
        .map(|v| cond_esssup(space, t, &h.sub(v)))
        .collect::<Result<Vec<Rv>>>()?;
    if entry_prices.is_empty() {
        return Ok(PriceSetDescription {
            time: t,
            entry_prices,
            pi: vec![Ext::PosInf; space.num_outcomes()],
            lambda: vec![false; space.num_outcomes()],
            atom_argmin: Vec::new(),
            uniform_attainer: None,
        });
    }
    let pi_rv = entry_prices
        .iter()
        .skip(1)
        .fold(entry_prices[0].clone(), |acc, p| acc.pointwise_min(p));
    let atom_argmin = space
        .atoms(t)
        .iter()
        .map(|members| {
            let w = members[0];
            entry_prices
                .iter()
                .position(|p| p.values[w] == pi_rv.values[w])
                .expect("the minimum is attained by some entry")
        })
        .collect();
    let uniform_attainer = entry_prices.iter().position(|p| *p == pi_rv);
    Ok(PriceSetDescription {
        time: t,
        entry_prices,
        pi: pi_rv.values.into_iter().map(Ext::Fin).collect(),
        lambda: vec![true; space.num_outcomes()],
        atom_argmin,
        uniform_attainer,
    })
}

/// The id-extension priced without enumeration: gluing one entry per
/// anchor atom makes the atom-wise minimum of raw prices attainable.
#[derive(Debug, Clone)]
pub struct IdPriceSet {
    pub desc: PriceSetDescription,
    /// The gluing assignment realizing pi, one entry index per atom.
    pub assignment: Vec<usize>,
    /// The glued claim itself.
    pub attainer: Option<Rv>,
}

pub fn id_extension_price_set(
    space: &FilteredSpace,
    menu: &PortfolioMenu,
    h: &Rv,
) -> Result<IdPriceSet> {
    let desc = menu_price_set(space, menu, h)?;
    if menu.is_empty() {
        return Ok(IdPriceSet {
            desc,
            assignment: Vec::new(),
            attainer: None,
        });
    }
    let assignment = desc.atom_argmin.clone();
    let ext = crate::market::IdExtension::new(menu.clone());
    let attainer = ext.entry(space, &assignment)?;
    // The glued claim's own price must reproduce pi exactly; the supremum
    // is computed atom by atom, so gluing commutes with it.
    let glued_price = cond_esssup(space, menu.anchor, &h.sub(&attainer))?;
    let pi_rv = Rv::new(
        desc.pi
            .iter()
            .map(|e| match e {
                Ext::Fin(v) => v.clone(),
                _ => unreachable!("nonempty menus have finite pi"),
            })
            .collect(),
    );
    if glued_price != pi_rv {
        return Err(Error::verify("glued entry does not attain the infimum"));
    }
    // Small menus are cross-checked against brute-force enumeration.
    if let Ok(all) = ext.enumerate(space) {
        let mut best: Option<Rv> = None;
        for (_, entry) in &all {
            let p = cond_esssup(space, menu.anchor, &h.sub(entry))?;
            best = Some(match best {
                None => p,
                Some(b) => b.pointwise_min(&p),
            });
        }
        if best.as_ref() != Some(&pi_rv) {
            return Err(Error::verify(
                "enumerated id-extension disagrees with the atom-wise minimum",
            ));
        }
    }
    Ok(IdPriceSet {
        desc,
        assignment,
        attainer: Some(attainer),
    })
}

#[derive(Debug, Clone)]
pub struct MembershipReport {
    /// Dominates the price of one single menu entry.
    pub in_raw: bool,
    pub dominated_entry: Option<usize>,
    /// Lies in the id-extension price set: measurable and at least pi,
    /// strictly above it where the infimum is not attained.
    pub in_extended: bool,
    /// An outcome where the candidate undercuts pi, if any.
    pub shortfall: Option<usize>,
}

pub fn menu_price_membership(
    space: &FilteredSpace,
    desc: &PriceSetDescription,
    candidate: &Rv,
) -> Result<MembershipReport> {
    space.check_rv(candidate)?;
    if !space.is_measurable(desc.time, candidate)? {
        return Err(Error::input(format!(
            "candidate price must be known at date index {}",
            desc.time
        )));
    }
    let dominated_entry = desc
        .entry_prices
        .iter()
        .position(|p| p.le(candidate));
    let mut shortfall = None;
    for w in 0..space.num_outcomes() {
        let ok = match &desc.pi[w] {
            Ext::Fin(v) => {
                if desc.lambda[w] {
                    &candidate.values[w] >= v
                } else {
                    &candidate.values[w] > v
                }
            }
            Ext::PosInf => false,
            Ext::NegInf => true,
        };
        if !ok {
            shortfall = Some(w);
            break;
        }
    }
    Ok(MembershipReport {
        in_raw: dominated_entry.is_some(),
        dominated_entry,
        in_extended: shortfall.is_none(),
        shortfall,
    })
}

#[derive(Debug, Clone)]
pub struct SequenceFate {
    pub convergent: bool,
    pub divergent_outcome: Option<usize>,
    /// Price of the adjoined tail limit, when convergent.
    pub limit_price: Option<Rv>,
    pub lowered_pi: bool,
}

#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub pi: Vec<Ext>,
    pub fates: Vec<SequenceFate>,
    /// True when no adjoined limit lowered the infimum anywhere.
    pub invariant: bool,
}

/// Adjoins the limit of each recurring sequence of menu entries to the
/// menu and confirms the price infimum does not move: the id-extension
/// price set is already closed under these limits.
pub fn closed_price_invariance(
    space: &FilteredSpace,
    menu: &PortfolioMenu,
    h: &Rv,
    sequences: &[SequenceSpec],
) -> Result<ClosureReport> {
    let desc = menu_price_set(space, menu, h)?;
    if menu.is_empty() && !sequences.is_empty() {
        return Err(Error::input("an empty menu has no entry sequences"));
    }
    let mut fates = Vec::with_capacity(sequences.len());
    let mut invariant = true;
    for seq in sequences {
        if matches!(seq.tail, Tail::Monotone(_)) {
            return Err(Error::input(
                "a finite menu cannot contain a strictly monotone sequence of entries",
            ));
        }
        // Members may be glued extension claims: on every anchor atom each
        // one must coincide with some raw entry.
        for member in &seq.prefix {
            let glued = space.atoms(menu.anchor).iter().all(|atom| {
                menu.entries
                    .iter()
                    .any(|e| atom.iter().all(|&w| e.values[w] == member.values[w]))
            });
            if !glued {
                return Err(Error::input(
                    "sequence member is outside the glued extension of the menu",
                ));
            }
        }
        let conv = converges(space, menu.anchor, seq)?;
        if !conv.converges {
            fates.push(SequenceFate {
                convergent: false,
                divergent_outcome: conv.divergent_outcome,
                limit_price: None,
                lowered_pi: false,
            });
            continue;
        }
        // The largest adjoinable limit: the pointwise floor of the
        // recurring members.
        let k = seq.prefix_len();
        let recurring: Vec<&Rv> = match &seq.tail {
            Tail::Constant => vec![&seq.prefix[k - 1]],
            Tail::Periodic(p) => seq.prefix[k - p..].iter().collect(),
            Tail::Monotone(_) => unreachable!("rejected above"),
        };
        let tail_limit = recurring
            .iter()
            .skip(1)
            .fold((*recurring[0]).clone(), |acc, m| acc.pointwise_min(m));
        let price = cond_esssup(space, menu.anchor, &h.sub(&tail_limit))?;
        let lowered = (0..space.num_outcomes()).any(|w| match &desc.pi[w] {
            Ext::Fin(v) => &price.values[w] < v,
            Ext::NegInf => false,
            Ext::PosInf => true,
        });
        if lowered {
            invariant = false;
        }
        fates.push(SequenceFate {
            convergent: true,
            divergent_outcome: None,
            limit_price: Some(price),
            lowered_pi: lowered,
        });
    }
    Ok(ClosureReport {
        pi: desc.pi,
        fates,
        invariant,
    })
}
