//! Bundled example spaces and seeded random generators feeding unit tests,
//! the acceptance suite, and the experiment commands.

use crate::rational::{rat, Rat};
use crate::space::FilteredSpace;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

/// Two dates, four outcomes, uniform weights; the running example space:
/// F_1 splits {w1,w2} from {w3,w4}, F_2 separates everything.
pub fn four_state_space() -> FilteredSpace {
    FilteredSpace::new(
        (1..=4).map(|i| format!("w{i}")).collect(),
        vec!["1".into(), "2".into()],
        vec![
            vec![vec![0, 1], vec![2, 3]],
            vec![vec![0], vec![1], vec![2], vec![3]],
        ],
        vec![rat(1, 4); 4],
    )
    .expect("the bundled example space is valid")
}

/// Binary tree with the given number of steps; outcome labels spell the
/// up/down path, times are labeled 0..steps, all paths equally likely.
pub fn binary_space(steps: usize) -> FilteredSpace {
    assert!(steps >= 1 && steps <= 12, "binary_space size out of range");
    let n = 1usize << steps;
    let labels: Vec<String> = (0..n)
        .map(|w| {
            (0..steps)
                .map(|b| if w >> (steps - 1 - b) & 1 == 0 { 'u' } else { 'd' })
                .collect()
        })
        .collect();
    let times: Vec<String> = (0..=steps).map(|t| t.to_string()).collect();
    let mut partitions = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        // Outcomes sharing a length-t prefix sit in one atom.
        let block = 1usize << (steps - t);
        partitions.push((0..n).step_by(block).map(|s| (s..s + block).collect()).collect());
    }
    let prob = vec![rat(1, n as i64); n];
    FilteredSpace::new(labels, times, partitions, prob).expect("binary tree is valid")
}

/// Random event tree: `steps` levels after time 0, between 1 and
/// `max_branch` children per node, positive rational weights.
pub fn random_tree_space(rng: &mut ChaCha20Rng, steps: usize, max_branch: usize) -> FilteredSpace {
    assert!(steps >= 1 && max_branch >= 1);
    // Grow level by level; a node is the list of its future leaf slots, so
    // we first decide the shape as per-level child counts.
    let mut parent: Vec<Vec<usize>> = vec![vec![usize::MAX]]; // parent id per node per level
    for t in 1..=steps {
        let mut par = Vec::new();
        for node in 0..parent[t - 1].len() {
            for _ in 0..rng.gen_range(1..=max_branch) {
                par.push(node);
            }
        }
        parent.push(par);
    }
    let n = parent[steps].len();
    // Leaf w descends from ancestor(t, w); walk parents upward.
    let mut ancestor = vec![vec![0usize; n]; steps + 1];
    for w in 0..n {
        ancestor[steps][w] = w;
        for t in (0..steps).rev() {
            ancestor[t][w] = parent[t + 1][ancestor[t + 1][w]];
        }
    }
    let mut partitions: Vec<Vec<Vec<usize>>> = Vec::with_capacity(steps + 1);
    for anc in &ancestor {
        let count = anc.iter().max().unwrap() + 1;
        let mut atoms = vec![Vec::new(); count];
        for (w, &a) in anc.iter().enumerate() {
            atoms[a].push(w);
        }
        partitions.push(atoms);
    }
    let weights: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = weights.iter().sum();
    let prob: Vec<Rat> = weights.iter().map(|&w| rat(w, total)).collect();
    let labels = (0..n).map(|w| format!("w{w}")).collect();
    let times = (0..=steps).map(|t| t.to_string()).collect();
    FilteredSpace::new(labels, times, partitions, prob).expect("generated tree is valid")
}

/// Recombining-tree prices on the binary path space: each step multiplies
/// by `up` or `down` according to the outcome label.
pub fn binomial_market(steps: usize, up: Rat, down: Rat, s0: Rat) -> crate::market::MarketModel {
    use crate::space::{AdaptedProcess, Rv};
    let sp = binary_space(steps);
    let layers: Vec<Rv> = (0..=steps)
        .map(|t| {
            Rv::new(
                (0..sp.num_outcomes())
                    .map(|w| {
                        let label = sp.outcome_label(w).to_string();
                        let mut v = s0.clone();
                        for c in label.chars().take(t) {
                            v *= if c == 'u' { &up } else { &down };
                        }
                        v
                    })
                    .collect(),
            )
        })
        .collect();
    let prices = AdaptedProcess::from_scalars(&sp, layers).expect("layers are adapted");
    crate::market::MarketModel::new(sp, prices).expect("valid market")
}

/// Arbitrary nonnegative adapted prices on a random tree; no structure is
/// promised, so every arbitrage verdict is possible.
pub fn random_market(
    rng: &mut ChaCha20Rng,
    steps: usize,
    max_branch: usize,
    dim: usize,
) -> crate::market::MarketModel {
    use crate::space::{AdaptedProcess, VecRv};
    let sp = random_tree_space(rng, steps, max_branch);
    let layers: Vec<VecRv> = (0..sp.num_times())
        .map(|t| {
            let mut values = vec![vec![Rat::from_integer(0.into()); dim]; sp.num_outcomes()];
            for members in sp.atoms(t) {
                let pick: Vec<Rat> = (0..dim)
                    .map(|_| rat(rng.gen_range(0..=8), rng.gen_range(1..=2)))
                    .collect();
                for &w in members {
                    values[w] = pick.clone();
                }
            }
            VecRv::new(dim, values)
        })
        .collect();
    let prices = AdaptedProcess::new(&sp, layers).expect("layers are adapted");
    crate::market::MarketModel::new(sp, prices).expect("valid market")
}

/// Prices built backward from a random terminal layer by averaging children
/// under random strictly positive weights, so a strictly positive
/// martingale measure exists by construction.
pub fn random_martingale_market(
    rng: &mut ChaCha20Rng,
    steps: usize,
    max_branch: usize,
    dim: usize,
) -> crate::market::MarketModel {
    use crate::space::{AdaptedProcess, VecRv};
    let sp = random_tree_space(rng, steps, max_branch);
    let n = sp.num_outcomes();
    let last = sp.last_time();
    let mut layers: Vec<Vec<Vec<Rat>>> = vec![vec![vec![]; n]; sp.num_times()];
    for w in 0..n {
        layers[last][w] = (0..dim)
            .map(|_| rat(rng.gen_range(0..=9), rng.gen_range(1..=2)))
            .collect();
    }
    for t in (0..last).rev() {
        for members in sp.atoms(t) {
            let mut children = Vec::new();
            for &w in members {
                let c = sp.atom_index_of(t + 1, w);
                if !children.contains(&c) {
                    children.push(c);
                }
            }
            let weights: Vec<i64> = (0..children.len()).map(|_| rng.gen_range(1..=5)).collect();
            let total: i64 = weights.iter().sum();
            let mut avg = vec![Rat::from_integer(0.into()); dim];
            for (j, &c) in children.iter().enumerate() {
                let rep = sp.atoms(t + 1)[c][0];
                for i in 0..dim {
                    avg[i] += rat(weights[j], total) * &layers[t + 1][rep][i];
                }
            }
            for &w in members {
                layers[t][w] = avg.clone();
            }
        }
    }
    let per_time = layers.into_iter().map(|v| VecRv::new(dim, v)).collect();
    let prices = AdaptedProcess::new(&sp, per_time).expect("layers are adapted");
    crate::market::MarketModel::new(sp, prices).expect("valid market")
}

/// Four outcomes with masses 1/2, 1/4, 1/8, 1/8 under a trivial initial
/// algebra, carrying X_n = -1 on a strictly shrinking support B_n. The
/// support never vanishes, so the initial-date supremum of (0 - X_n)+ is
/// pinned at 1 forever: 0 is not a limit even though the masses of the
/// exceedance sets collapse.
pub fn shrinking_support_sequence() -> (FilteredSpace, crate::topology::SequenceSpec) {
    use crate::rational::rint;
    use crate::space::Rv;
    use crate::topology::{SequenceSpec, Tail};
    let labels = (0..4).map(|w| format!("w{w}")).collect();
    let times = vec!["0".to_string(), "1".to_string()];
    let partitions = vec![
        vec![vec![0, 1, 2, 3]],
        vec![vec![0], vec![1], vec![2], vec![3]],
    ];
    let prob = vec![rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 8)];
    let space = FilteredSpace::new(labels, times, partitions, prob).expect("valid");
    let supports: [&[usize]; 4] = [&[0, 1, 2, 3], &[1, 2, 3], &[2, 3], &[3]];
    let prefix = supports
        .iter()
        .map(|b| Rv::indicator(4, b).scale(&rint(-1)))
        .collect();
    let seq = SequenceSpec::new(&space, prefix, Tail::Constant).expect("valid");
    (space, seq)
}
