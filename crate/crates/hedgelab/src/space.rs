//! Finite filtered probability spaces as event trees, and the random
//! variables living on them.
//!
//! A `FilteredSpace` fixes a finite outcome set, a grid of time labels and one
//! partition per grid time. Partitions must refine as time advances; the last
//! one must separate every outcome unless the space is built with the relaxed
//! terminal flag. Probabilities are strictly positive rationals summing to one
//! exactly, so null sets never appear and `esssup` is an honest atom-wise max.

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rat, Rat};
use crate::{Error, Result};

/// One cell of a partition: the time index, the cell index and its outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub time: usize,
    pub index: usize,
    pub members: Vec<usize>,
}

/// An event tree with exact probabilities.
#[derive(Debug, Clone)]
pub struct FilteredSpace {
    outcome_labels: Vec<String>,
    time_labels: Vec<String>,
    /// `partitions[t][a]` is the sorted outcome list of atom `a` at time `t`.
    partitions: Vec<Vec<Vec<usize>>>,
    /// `atom_index[t][w]` locates the atom of outcome `w` at time `t`.
    atom_index: Vec<Vec<usize>>,
    prob: Vec<Rat>,
    terminal_relaxed: bool,
}

impl FilteredSpace {
    pub fn new(
        outcome_labels: Vec<String>,
        time_labels: Vec<String>,
        partitions: Vec<Vec<Vec<usize>>>,
        prob: Vec<Rat>,
    ) -> Result<Self> {
        Self::build(outcome_labels, time_labels, partitions, prob, false)
    }

    /// Like [`FilteredSpace::new`] but allows a terminal partition coarser
    /// than the singletons.
    pub fn new_relaxed(
        outcome_labels: Vec<String>,
        time_labels: Vec<String>,
        partitions: Vec<Vec<Vec<usize>>>,
        prob: Vec<Rat>,
    ) -> Result<Self> {
        Self::build(outcome_labels, time_labels, partitions, prob, true)
    }

    fn build(
        outcome_labels: Vec<String>,
        time_labels: Vec<String>,
        mut partitions: Vec<Vec<Vec<usize>>>,
        prob: Vec<Rat>,
        terminal_relaxed: bool,
    ) -> Result<Self> {
        let n = outcome_labels.len();
        if n == 0 {
            return Err(Error::input("a space needs at least one outcome"));
        }
        if time_labels.is_empty() {
            return Err(Error::input("a space needs at least one time"));
        }
        for labels in [&outcome_labels, &time_labels] {
            let mut seen = labels.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != labels.len() {
                return Err(Error::input("labels must be unique"));
            }
        }
        if partitions.len() != time_labels.len() {
            return Err(Error::input(format!(
                "expected {} partitions, got {}",
                time_labels.len(),
                partitions.len()
            )));
        }
        if prob.len() != n {
            return Err(Error::input("one probability per outcome required"));
        }
        let mut total = Rat::zero();
        for p in &prob {
            if !p.is_positive() {
                return Err(Error::input(format!(
                    "probabilities must be strictly positive, got {}",
                    format_rat(p)
                )));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::input(format!(
                "probabilities sum to {}, not 1",
                format_rat(&total)
            )));
        }

        let mut atom_index = Vec::with_capacity(partitions.len());
        for (t, part) in partitions.iter_mut().enumerate() {
            let mut idx = vec![usize::MAX; n];
            for (a, cell) in part.iter_mut().enumerate() {
                cell.sort_unstable();
                if cell.is_empty() {
                    return Err(Error::input(format!("empty atom at time {t}")));
                }
                for &w in cell.iter() {
                    if w >= n {
                        return Err(Error::input(format!("outcome index {w} out of range")));
                    }
                    if idx[w] != usize::MAX {
                        return Err(Error::input(format!(
                            "outcome {} appears twice at time {t}",
                            outcome_labels[w]
                        )));
                    }
                    idx[w] = a;
                }
            }
            if idx.iter().any(|&a| a == usize::MAX) {
                return Err(Error::input(format!("partition at time {t} misses outcomes")));
            }
            atom_index.push(idx);
        }

        // Refinement: every atom at t+1 must sit inside a single atom at t.
        for t in 1..partitions.len() {
            for cell in &partitions[t] {
                let parent = atom_index[t - 1][cell[0]];
                if cell.iter().any(|&w| atom_index[t - 1][w] != parent) {
                    return Err(Error::input(format!(
                        "partition at time {t} does not refine time {}",
                        t - 1
                    )));
                }
            }
        }

        let last = partitions.len() - 1;
        if !terminal_relaxed && partitions[last].len() != n {
            return Err(Error::input(
                "terminal partition must separate all outcomes (or build with the relaxed flag)",
            ));
        }

        Ok(FilteredSpace {
            outcome_labels,
            time_labels,
            partitions,
            atom_index,
            prob,
            terminal_relaxed,
        })
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcome_labels.len()
    }

    pub fn num_times(&self) -> usize {
        self.time_labels.len()
    }

    pub fn last_time(&self) -> usize {
        self.time_labels.len() - 1
    }

    pub fn terminal_relaxed(&self) -> bool {
        self.terminal_relaxed
    }

    pub fn outcome_label(&self, w: usize) -> &str {
        &self.outcome_labels[w]
    }

    pub fn time_label(&self, t: usize) -> &str {
        &self.time_labels[t]
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.outcome_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::input(format!("unknown outcome {label:?}")))
    }

    pub fn time_index(&self, label: &str) -> Result<usize> {
        self.time_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::input(format!("unknown time {label:?}")))
    }

    pub fn check_time(&self, t: usize) -> Result<()> {
        if t >= self.num_times() {
            return Err(Error::input(format!(
                "time index {t} outside the grid 0..{}",
                self.num_times()
            )));
        }
        Ok(())
    }

    /// Atoms of the partition at time `t`, each a sorted outcome list.
    pub fn atoms(&self, t: usize) -> &[Vec<usize>] {
        &self.partitions[t]
    }

    pub fn atom_count(&self, t: usize) -> usize {
        self.partitions[t].len()
    }

    pub fn atom_index_of(&self, t: usize, w: usize) -> usize {
        self.atom_index[t][w]
    }

    /// The atom of the partition at `t` containing outcome `w`.
    pub fn atom_of(&self, t: usize, w: usize) -> Result<Atom> {
        self.check_time(t)?;
        if w >= self.num_outcomes() {
            return Err(Error::input(format!("outcome index {w} out of range")));
        }
        let index = self.atom_index[t][w];
        Ok(Atom {
            time: t,
            index,
            members: self.partitions[t][index].clone(),
        })
    }

    pub fn prob(&self, w: usize) -> &Rat {
        &self.prob[w]
    }

    pub fn prob_of(&self, outcomes: &[usize]) -> Rat {
        outcomes.iter().map(|&w| self.prob[w].clone()).sum()
    }

    /// Time labels parsed as rationals, for operations that need a metric grid.
    pub fn numeric_times(&self) -> Result<Vec<Rat>> {
        let vals: Vec<Rat> = self
            .time_labels
            .iter()
            .map(|l| crate::rational::parse_rat(l))
            .collect::<Result<_>>()?;
        for pair in vals.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::input("numeric time labels must strictly increase"));
            }
        }
        Ok(vals)
    }

    /// True when `x` is constant on every atom at time `t`.
    pub fn is_measurable(&self, t: usize, x: &Rv) -> Result<bool> {
        self.check_time(t)?;
        self.check_rv(x)?;
        Ok(self.partitions[t]
            .iter()
            .all(|cell| cell.iter().all(|&w| x.values[w] == x.values[cell[0]])))
    }

    /// True when `tau` (a grid-time index per outcome) is a stopping time:
    /// `{tau <= t}` must be a union of atoms at `t` for every `t`.
    pub fn is_stopping_time(&self, tau: &[usize]) -> Result<bool> {
        if tau.len() != self.num_outcomes() {
            return Err(Error::input("stopping time needs one value per outcome"));
        }
        for &v in tau {
            self.check_time(v)?;
        }
        for t in 0..self.num_times() {
            for cell in &self.partitions[t] {
                let hit = cell.iter().any(|&w| tau[w] <= t);
                if hit && cell.iter().any(|&w| tau[w] > t) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn check_rv(&self, x: &Rv) -> Result<()> {
        if x.values.len() != self.num_outcomes() {
            return Err(Error::input(format!(
                "random variable keyed to {} outcomes, space has {}",
                x.values.len(),
                self.num_outcomes()
            )));
        }
        Ok(())
    }

    pub fn check_vec_rv(&self, x: &VecRv) -> Result<()> {
        if x.values.len() != self.num_outcomes() {
            return Err(Error::input("vector variable keyed to the wrong outcome count"));
        }
        if x.values.iter().any(|v| v.len() != x.dim) {
            return Err(Error::input("vector variable has ragged coordinates"));
        }
        Ok(())
    }

    /// The conditional sub-tree rooted at atom `a` of time `t`: outcomes are
    /// the atom's members, times run from `t` to the horizon, probabilities
    /// are renormalized. Returns the new space plus the member list mapping
    /// new outcome indices to old ones.
    pub fn restrict(&self, t: usize, atom: usize) -> Result<(FilteredSpace, Vec<usize>)> {
        self.check_time(t)?;
        let members = self.partitions[t]
            .get(atom)
            .ok_or_else(|| Error::input(format!("no atom {atom} at time {t}")))?
            .clone();
        let mass = self.prob_of(&members);
        let old_to_new: std::collections::HashMap<usize, usize> =
            members.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        let mut partitions = Vec::new();
        for u in t..self.num_times() {
            let mut cells = Vec::new();
            for cell in &self.partitions[u] {
                let kept: Vec<usize> =
                    cell.iter().filter_map(|w| old_to_new.get(w).copied()).collect();
                if !kept.is_empty() {
                    cells.push(kept);
                }
            }
            partitions.push(cells);
        }
        let sub = FilteredSpace::build(
            members.iter().map(|&w| self.outcome_labels[w].clone()).collect(),
            self.time_labels[t..].to_vec(),
            partitions,
            members.iter().map(|&w| &self.prob[w] / &mass).collect(),
            self.terminal_relaxed,
        )?;
        Ok((sub, members))
    }
}

/// A scalar random variable: one rational per outcome of a fixed space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rv {
    pub values: Vec<Rat>,
}

impl Rv {
    pub fn new(values: Vec<Rat>) -> Self {
        Rv { values }
    }

    pub fn constant(n: usize, v: Rat) -> Self {
        Rv { values: vec![v; n] }
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(n, Rat::zero())
    }

    /// The indicator of an outcome set.
    pub fn indicator(n: usize, set: &[usize]) -> Self {
        let mut values = vec![Rat::zero(); n];
        for &w in set {
            values[w] = Rat::one();
        }
        Rv { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add(&self, other: &Rv) -> Rv {
        Rv::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Rv) -> Rv {
        Rv::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn neg(&self) -> Rv {
        Rv::new(self.values.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, c: &Rat) -> Rv {
        Rv::new(self.values.iter().map(|a| a * c).collect())
    }

    /// Pointwise product; used for indicator gluing and conic scaling.
    pub fn mul(&self, other: &Rv) -> Rv {
        Rv::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }

    pub fn add_const(&self, c: &Rat) -> Rv {
        Rv::new(self.values.iter().map(|a| a + c).collect())
    }

    /// Pointwise positive part.
    pub fn pos_part(&self) -> Rv {
        Rv::new(
            self.values
                .iter()
                .map(|a| if a.is_negative() { Rat::zero() } else { a.clone() })
                .collect(),
        )
    }

    /// Pointwise cap at one.
    pub fn min_one(&self) -> Rv {
        let one = Rat::one();
        Rv::new(
            self.values
                .iter()
                .map(|a| if *a > one { one.clone() } else { a.clone() })
                .collect(),
        )
    }

    pub fn pointwise_min(&self, other: &Rv) -> Rv {
        Rv::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| if a <= b { a.clone() } else { b.clone() })
                .collect(),
        )
    }

    pub fn pointwise_max(&self, other: &Rv) -> Rv {
        Rv::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| if a >= b { a.clone() } else { b.clone() })
                .collect(),
        )
    }

    /// True when `self <= other` at every outcome.
    pub fn le(&self, other: &Rv) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|a| a.is_zero())
    }

    pub fn is_nonneg(&self) -> bool {
        self.values.iter().all(|a| !a.is_negative())
    }

    pub fn expectation(&self, space: &FilteredSpace) -> Result<Rat> {
        space.check_rv(self)?;
        Ok(self
            .values
            .iter()
            .enumerate()
            .map(|(w, v)| v * space.prob(w))
            .sum())
    }
}

/// A vector-valued random variable of fixed dimension (outcome-major storage).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VecRv {
    pub dim: usize,
    /// `values[w]` is the `dim`-dimensional value at outcome `w`.
    pub values: Vec<Vec<Rat>>,
}

impl VecRv {
    pub fn new(dim: usize, values: Vec<Vec<Rat>>) -> Self {
        VecRv { dim, values }
    }

    pub fn from_scalar(x: &Rv) -> Self {
        VecRv {
            dim: 1,
            values: x.values.iter().map(|v| vec![v.clone()]).collect(),
        }
    }

    pub fn coordinate(&self, i: usize) -> Rv {
        Rv::new(self.values.iter().map(|v| v[i].clone()).collect())
    }

    pub fn at(&self, w: usize) -> &[Rat] {
        &self.values[w]
    }
}

/// A process adapted to a space: one `VecRv` per grid time, constant on atoms.
#[derive(Debug, Clone)]
pub struct AdaptedProcess {
    pub dim: usize,
    per_time: Vec<VecRv>,
}

impl AdaptedProcess {
    pub fn new(space: &FilteredSpace, per_time: Vec<VecRv>) -> Result<Self> {
        if per_time.len() != space.num_times() {
            return Err(Error::input("process needs one value layer per grid time"));
        }
        let dim = per_time.first().map(|v| v.dim).unwrap_or(0);
        for (t, layer) in per_time.iter().enumerate() {
            space.check_vec_rv(layer)?;
            if layer.dim != dim {
                return Err(Error::input("process layers disagree on dimension"));
            }
            for cell in space.atoms(t) {
                let head = &layer.values[cell[0]];
                if cell.iter().any(|&w| &layer.values[w] != head) {
                    return Err(Error::input(format!(
                        "process not adapted: layer {t} varies inside an atom"
                    )));
                }
            }
        }
        Ok(AdaptedProcess { dim, per_time })
    }

    /// Convenience constructor for scalar processes.
    pub fn from_scalars(space: &FilteredSpace, layers: Vec<Rv>) -> Result<Self> {
        Self::new(space, layers.iter().map(VecRv::from_scalar).collect())
    }

    pub fn layer(&self, t: usize) -> &VecRv {
        &self.per_time[t]
    }

    pub fn num_times(&self) -> usize {
        self.per_time.len()
    }

    /// The value vector at `(t, w)`.
    pub fn at(&self, t: usize, w: usize) -> &[Rat] {
        self.per_time[t].at(w)
    }

    pub fn scalar_layer(&self, t: usize) -> Result<Rv> {
        if self.dim != 1 {
            return Err(Error::input("scalar view requires a one-dimensional process"));
        }
        Ok(self.per_time[t].coordinate(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    fn labels(n: usize, prefix: &str) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    /// Two-period tree with a two-atom middle layer, uniform probabilities.
    pub(crate) fn four_state() -> FilteredSpace {
        FilteredSpace::new(
            labels(4, "w"),
            vec!["1".into(), "2".into()],
            vec![
                vec![vec![0, 1], vec![2, 3]],
                vec![vec![0], vec![1], vec![2], vec![3]],
            ],
            vec![rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)],
        )
        .unwrap()
    }

    #[test]
    fn atom_lookup_matches_partition() {
        let sp = four_state();
        let a = sp.atom_of(0, 0).unwrap();
        assert_eq!(a.members, vec![0, 1]);
        assert_eq!(sp.atom_of(0, 3).unwrap().members, vec![2, 3]);
        assert_eq!(sp.atom_of(1, 2).unwrap().members, vec![2]);
    }

    #[test]
    fn rejects_non_refining_partitions() {
        let err = FilteredSpace::new(
            labels(4, "w"),
            vec!["0".into(), "1".into()],
            vec![
                vec![vec![0, 1], vec![2, 3]],
                vec![vec![0, 2], vec![1], vec![3]],
            ],
            vec![rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("refine"));
    }

    #[test]
    fn rejects_bad_probabilities() {
        let bad_sum = FilteredSpace::new(
            labels(2, "w"),
            vec!["0".into()],
            vec![vec![vec![0], vec![1]]],
            vec![rat(1, 2), rat(1, 3)],
        );
        assert!(bad_sum.is_err());
        let zero = FilteredSpace::new(
            labels(2, "w"),
            vec!["0".into()],
            vec![vec![vec![0], vec![1]]],
            vec![rint(1), rint(0)],
        );
        assert!(zero.is_err());
    }

    #[test]
    fn terminal_partition_must_separate_unless_relaxed() {
        let coarse = vec![vec![vec![0, 1]]];
        let p = vec![rat(1, 2), rat(1, 2)];
        assert!(FilteredSpace::new(
            labels(2, "w"),
            vec!["0".into()],
            coarse.clone(),
            p.clone()
        )
        .is_err());
        assert!(FilteredSpace::new_relaxed(labels(2, "w"), vec!["0".into()], coarse, p).is_ok());
    }

    #[test]
    fn measurability_is_constancy_on_atoms() {
        let sp = four_state();
        let x = Rv::new(vec![rint(5), rint(5), rint(-1), rint(-1)]);
        assert!(sp.is_measurable(0, &x).unwrap());
        let y = Rv::new(vec![rint(5), rint(4), rint(-1), rint(-1)]);
        assert!(!sp.is_measurable(0, &y).unwrap());
        assert!(sp.is_measurable(1, &y).unwrap());
    }

    #[test]
    fn stopping_time_checks_anticipation() {
        let sp = four_state();
        // Stop early on the first atom, late on the second: fine.
        assert!(sp.is_stopping_time(&[0, 0, 1, 1]).unwrap());
        // Splitting an atom at time 0 anticipates the terminal branch.
        assert!(!sp.is_stopping_time(&[0, 1, 1, 1]).unwrap());
        assert!(sp.is_stopping_time(&[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn restriction_renormalizes() {
        let sp = four_state();
        let (sub, members) = sp.restrict(0, 0).unwrap();
        assert_eq!(members, vec![0, 1]);
        assert_eq!(sub.num_outcomes(), 2);
        assert_eq!(sub.prob(0), &rat(1, 2));
        assert_eq!(sub.num_times(), 2);
    }

    #[test]
    fn adapted_process_rejects_unadapted_layers() {
        let sp = four_state();
        let bad = AdaptedProcess::from_scalars(
            &sp,
            vec![
                Rv::new(vec![rint(1), rint(2), rint(3), rint(3)]),
                Rv::new(vec![rint(1), rint(2), rint(3), rint(4)]),
            ],
        );
        assert!(bad.is_err());
        let good = AdaptedProcess::from_scalars(
            &sp,
            vec![
                Rv::new(vec![rint(1), rint(1), rint(3), rint(3)]),
                Rv::new(vec![rint(1), rint(2), rint(3), rint(4)]),
            ],
        );
        assert!(good.is_ok());
    }

    #[test]
    fn expectation_is_exact() {
        let sp = four_state();
        let x = Rv::new(vec![rint(2), rint(0), rint(0), rint(0)]);
        assert_eq!(x.expectation(&sp).unwrap(), rat(1, 2));
    }
}
