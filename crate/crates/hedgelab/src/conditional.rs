//! Conditional essential supremum calculus and exact convex-hull membership.
//!
//! On a finite space with strictly positive probabilities the conditional
//! essential supremum given a partition is the atom-wise maximum: it dominates
//! the variable on each atom and is the smallest measurable variable that
//! does. The conditional support collects the attained values per atom, and
//! hull membership is decided as an exact LP feasibility problem whose failure
//! produces a verified separating affine functional.

use num_traits::{One, Signed, Zero};

use crate::lp::{solve_lp, Constraint, LinearProgram, LpOutcome, Relation, Sense};
use crate::rational::Rat;
use crate::space::{FilteredSpace, Rv, VecRv};
use crate::{Error, Result};

/// The smallest variable measurable at `t` dominating `x`: atom-wise maximum.
pub fn cond_esssup(space: &FilteredSpace, t: usize, x: &Rv) -> Result<Rv> {
    space.check_time(t)?;
    space.check_rv(x)?;
    let mut out = vec![Rat::zero(); space.num_outcomes()];
    for cell in space.atoms(t) {
        let mut best = x.values[cell[0]].clone();
        for &w in &cell[1..] {
            if x.values[w] > best {
                best = x.values[w].clone();
            }
        }
        for &w in cell {
            out[w] = best.clone();
        }
    }
    Ok(Rv::new(out))
}

/// The largest variable measurable at `t` dominated by `x`, computed through
/// the reflection `essinf(x) = -esssup(-x)`.
pub fn cond_essinf(space: &FilteredSpace, t: usize, x: &Rv) -> Result<Rv> {
    Ok(cond_esssup(space, t, &x.neg())?.neg())
}

/// Expectation of `x` conditional on the partition at `t`, under weights `q`
/// (any strictly positive measure on the outcomes; defaults to the space's
/// probabilities when `None`).
pub fn cond_expectation(
    space: &FilteredSpace,
    t: usize,
    x: &Rv,
    q: Option<&[Rat]>,
) -> Result<Rv> {
    space.check_time(t)?;
    space.check_rv(x)?;
    let weight = |w: usize| -> Rat {
        match q {
            Some(qs) => qs[w].clone(),
            None => space.prob(w).clone(),
        }
    };
    if let Some(qs) = q {
        if qs.len() != space.num_outcomes() {
            return Err(Error::input("weight vector keyed to the wrong outcome count"));
        }
        if qs.iter().any(|v| !v.is_positive()) {
            return Err(Error::input("conditional expectation needs positive weights"));
        }
    }
    let mut out = vec![Rat::zero(); space.num_outcomes()];
    for cell in space.atoms(t) {
        let mass: Rat = cell.iter().map(|&w| weight(w)).sum();
        let avg: Rat = cell
            .iter()
            .map(|&w| &x.values[w] * &weight(w))
            .sum::<Rat>()
            / mass;
        for &w in cell {
            out[w] = avg.clone();
        }
    }
    Ok(Rv::new(out))
}

/// The attained values of `x` on each atom at `t`, deduplicated, in atom order.
pub fn cond_support(space: &FilteredSpace, t: usize, x: &VecRv) -> Result<Vec<Vec<Vec<Rat>>>> {
    space.check_time(t)?;
    space.check_vec_rv(x)?;
    let mut out = Vec::with_capacity(space.atom_count(t));
    for cell in space.atoms(t) {
        let mut pts: Vec<Vec<Rat>> = cell.iter().map(|&w| x.values[w].clone()).collect();
        pts.sort();
        pts.dedup();
        out.push(pts);
    }
    Ok(out)
}

/// Why a point is, or is not, inside the convex hull of a finite cloud.
#[derive(Debug, Clone)]
pub enum HullCertificate {
    /// Convex weights over the cloud reproducing the point exactly.
    Combination(Vec<Rat>),
    /// An affine functional `x -> normal . x + offset`, nonnegative on every
    /// cloud point and strictly negative at the queried point.
    Separator { normal: Vec<Rat>, offset: Rat },
}

#[derive(Debug, Clone)]
pub struct HullResult {
    pub member: bool,
    pub certificate: HullCertificate,
}

fn eval_affine(normal: &[Rat], offset: &Rat, x: &[Rat]) -> Rat {
    normal.iter().zip(x).map(|(n, v)| n * v).sum::<Rat>() + offset
}

/// Verifies a hull certificate by exact substitution.
pub fn verify_hull(point: &[Rat], cloud: &[Vec<Rat>], res: &HullResult) -> Result<()> {
    match (&res.certificate, res.member) {
        (HullCertificate::Combination(weights), true) => {
            if weights.len() != cloud.len() {
                return Err(Error::verify("weight count mismatch"));
            }
            if weights.iter().any(|w| w.is_negative()) {
                return Err(Error::verify("negative convex weight"));
            }
            let total: Rat = weights.iter().cloned().sum();
            if !total.is_one() {
                return Err(Error::verify("weights do not sum to one"));
            }
            for (k, target) in point.iter().enumerate() {
                let mixed: Rat = weights
                    .iter()
                    .zip(cloud)
                    .map(|(w, c)| w * &c[k])
                    .sum();
                if &mixed != target {
                    return Err(Error::verify("combination misses the point"));
                }
            }
            Ok(())
        }
        (HullCertificate::Separator { normal, offset }, false) => {
            if normal.iter().all(|n| n.is_zero()) {
                return Err(Error::verify("zero separator"));
            }
            for c in cloud {
                if eval_affine(normal, offset, c).is_negative() {
                    return Err(Error::verify("separator negative on a cloud point"));
                }
            }
            if !eval_affine(normal, offset, point).is_negative() {
                return Err(Error::verify("separator not negative at the point"));
            }
            Ok(())
        }
        _ => Err(Error::verify("certificate kind does not match the verdict")),
    }
}

/// Decides whether `point` lies in the convex hull of `cloud`, exactly.
///
/// Membership comes with convex weights; failure comes with a separating
/// affine functional extracted from the Farkas certificate of the weight LP.
/// Both are re-verified before being returned. Zero-dimensional points are
/// legal and always members of a nonempty cloud.
pub fn in_convex_hull(point: &[Rat], cloud: &[Vec<Rat>]) -> Result<HullResult> {
    if cloud.is_empty() {
        return Err(Error::input("hull query against an empty cloud"));
    }
    let dim = point.len();
    if cloud.iter().any(|c| c.len() != dim) {
        return Err(Error::input("cloud points disagree with the query dimension"));
    }

    // Degenerate cloud: all points coincide.
    if cloud.iter().all(|c| c == &cloud[0]) {
        if cloud[0] == point {
            let mut weights = vec![Rat::zero(); cloud.len()];
            weights[0] = Rat::one();
            let res = HullResult { member: true, certificate: HullCertificate::Combination(weights) };
            verify_hull(point, cloud, &res)?;
            return Ok(res);
        }
        // Separate along the difference direction: f vanishes on the cloud
        // point and is strictly negative at the query.
        let normal: Vec<Rat> = cloud[0].iter().zip(point).map(|(c, p)| c - p).collect();
        let offset: Rat = -normal.iter().zip(&cloud[0]).map(|(n, c)| n * c).sum::<Rat>();
        let res = HullResult {
            member: false,
            certificate: HullCertificate::Separator { normal, offset },
        };
        verify_hull(point, cloud, &res)?;
        return Ok(res);
    }

    // Weights lambda >= 0 with sum 1 reproducing the point coordinate-wise.
    let k = cloud.len();
    let mut constraints = Vec::with_capacity(dim + 1);
    for coord in 0..dim {
        let coeffs: Vec<Rat> = cloud.iter().map(|c| c[coord].clone()).collect();
        constraints.push(Constraint::new(coeffs, Relation::Eq, point[coord].clone()));
    }
    constraints.push(Constraint::new(vec![Rat::one(); k], Relation::Eq, Rat::one()));
    let lp = LinearProgram {
        num_vars: k,
        sense: Sense::Feasibility,
        objective: vec![Rat::zero(); k],
        constraints,
        bounds: vec![(Some(Rat::zero()), None); k],
    };
    match solve_lp(&lp)? {
        LpOutcome::Optimal { solution, .. } => {
            let res = HullResult {
                member: true,
                certificate: HullCertificate::Combination(solution),
            };
            verify_hull(point, cloud, &res)?;
            Ok(res)
        }
        LpOutcome::Infeasible { farkas } => {
            // Rows: dim coordinate equalities (multipliers mu), the sum row
            // (mu0), then the lower-bound rows. The functional
            // f(x) = -(mu . x) - mu0 is nonnegative on the cloud and negative
            // at the point.
            let mu = &farkas[..dim];
            let mu0 = &farkas[dim];
            let normal: Vec<Rat> = mu.iter().map(|m| -m).collect();
            let res = HullResult {
                member: false,
                certificate: HullCertificate::Separator { normal, offset: -mu0.clone() },
            };
            verify_hull(point, cloud, &res)?;
            Ok(res)
        }
        LpOutcome::Unbounded { .. } => Err(Error::verify("feasibility query cannot be unbounded")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn four_state() -> FilteredSpace {
        FilteredSpace::new(
            (1..=4).map(|i| format!("w{i}")).collect(),
            vec!["1".into(), "2".into()],
            vec![
                vec![vec![0, 1], vec![2, 3]],
                vec![vec![0], vec![1], vec![2], vec![3]],
            ],
            vec![rat(1, 4); 4],
        )
        .unwrap()
    }

    #[test]
    fn esssup_is_atomwise_max() {
        let sp = four_state();
        let x = Rv::new(vec![rint(2), rint(0), rint(0), rint(0)]);
        let sup = cond_esssup(&sp, 0, &x).unwrap();
        assert_eq!(sup, Rv::new(vec![rint(2), rint(2), rint(0), rint(0)]));
        // Finest partition: no smoothing at all.
        assert_eq!(cond_esssup(&sp, 1, &x).unwrap(), x);
    }

    #[test]
    fn esssup_under_trivial_partition_is_global_max() {
        let sp = FilteredSpace::new_relaxed(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["0".into()],
            vec![vec![vec![0, 1, 2]]],
            vec![rat(1, 3); 3],
        )
        .unwrap();
        let x = Rv::new(vec![rint(-7), rint(3), rint(1)]);
        assert_eq!(cond_esssup(&sp, 0, &x).unwrap(), Rv::constant(3, rint(3)));
    }

    #[test]
    fn essinf_is_reflected_esssup() {
        let sp = four_state();
        let x = Rv::new(vec![rint(2), rint(0), rint(5), rint(-3)]);
        let inf = cond_essinf(&sp, 0, &x).unwrap();
        assert_eq!(inf, Rv::new(vec![rint(0), rint(0), rint(-3), rint(-3)]));
        assert_eq!(inf, cond_esssup(&sp, 0, &x.neg()).unwrap().neg());
    }

    #[test]
    fn tower_pullout_monotone_properties() {
        let mut rng = ChaCha20Rng::seed_from_u64(0xe55);
        let sp = four_state();
        for _ in 0..300 {
            let rv = |rng: &mut ChaCha20Rng| {
                Rv::new((0..4).map(|_| rat(rng.gen_range(-8..=8), rng.gen_range(1..=4))).collect())
            };
            let x = rv(&mut rng);
            let y = rv(&mut rng);
            // Tower: conditioning coarse-after-fine collapses to coarse.
            let fine = cond_esssup(&sp, 1, &x).unwrap();
            let coarse = cond_esssup(&sp, 0, &fine).unwrap();
            assert_eq!(coarse, cond_esssup(&sp, 0, &x).unwrap());
            // Pull-out of a nonnegative measurable factor.
            let alpha_raw = rv(&mut rng).pos_part();
            let alpha = cond_esssup(&sp, 0, &alpha_raw).unwrap();
            let lhs = cond_esssup(&sp, 0, &alpha.mul(&x)).unwrap();
            let rhs = alpha.mul(&cond_esssup(&sp, 0, &x).unwrap());
            assert_eq!(lhs, rhs);
            // Monotonicity.
            let lo = x.pointwise_min(&y);
            assert!(cond_esssup(&sp, 0, &lo)
                .unwrap()
                .le(&cond_esssup(&sp, 0, &x).unwrap()));
        }
    }

    #[test]
    fn support_collects_attained_values() {
        let sp = four_state();
        let v2 = VecRv::from_scalar(&Rv::new(vec![rint(-1), rint(2), rint(3), rint(4)]));
        let supp = cond_support(&sp, 0, &v2).unwrap();
        assert_eq!(supp[0], vec![vec![rint(-1)], vec![rint(2)]]);
        assert_eq!(supp[1], vec![vec![rint(3)], vec![rint(4)]]);
    }

    #[test]
    fn scalar_point_outside_an_interval() {
        let res = in_convex_hull(&[rint(1)], &[vec![rint(2)], vec![rint(3)]]).unwrap();
        assert!(!res.member);
        verify_hull(&[rint(1)], &[vec![rint(2)], vec![rint(3)]], &res).unwrap();
        match res.certificate {
            HullCertificate::Separator { ref normal, ref offset } => {
                // Any exact separator is acceptable; it must vanish nowhere
                // on the wrong side.
                assert!(eval_affine(normal, offset, &[rint(1)]).is_negative());
            }
            _ => panic!("expected a separator"),
        }
    }

    #[test]
    fn planar_point_inside_a_triangle() {
        let cloud = vec![
            vec![rint(0), rint(0)],
            vec![rint(2), rint(0)],
            vec![rint(0), rint(2)],
        ];
        let res = in_convex_hull(&[rat(1, 2), rat(1, 2)], &cloud).unwrap();
        assert!(res.member);
        verify_hull(&[rat(1, 2), rat(1, 2)], &cloud, &res).unwrap();
    }

    #[test]
    fn degenerate_cloud_is_a_single_point() {
        let cloud = vec![vec![rint(3)], vec![rint(3)]];
        assert!(in_convex_hull(&[rint(3)], &cloud).unwrap().member);
        let res = in_convex_hull(&[rint(2)], &cloud).unwrap();
        assert!(!res.member);
        verify_hull(&[rint(2)], &cloud, &res).unwrap();
        assert!(in_convex_hull(&[rint(1)], &[]).is_err());
    }

    #[test]
    fn zero_dimensional_points_are_trivially_members() {
        let res = in_convex_hull(&[], &[vec![], vec![]]).unwrap();
        assert!(res.member);
    }

    /// Reduced row echelon form of [m | rhs]; returns None when inconsistent,
    /// otherwise Some((solution, unique)) with free variables pinned to zero.
    fn solve_rect(mut m: Vec<Vec<Rat>>, mut rhs: Vec<Rat>, cols: usize) -> Option<(Vec<Rat>, bool)> {
        let rows = rhs.len();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            let Some(pr) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, pr);
            rhs.swap(r, pr);
            let p = m[r][c].clone();
            for v in m[r].iter_mut() {
                *v /= &p;
            }
            rhs[r] /= &p;
            for i in 0..rows {
                if i == r || m[i][c].is_zero() {
                    continue;
                }
                let f = m[i][c].clone();
                for j in 0..cols {
                    let adj = &m[r][j] * &f;
                    m[i][j] -= adj;
                }
                let adj = &rhs[r] * &f;
                rhs[i] -= adj;
            }
            pivots.push((r, c));
            r += 1;
            if r == rows {
                break;
            }
        }
        for i in r..rows {
            if !rhs[i].is_zero() {
                return None;
            }
        }
        let mut sol = vec![Rat::zero(); cols];
        for &(pr, pc) in &pivots {
            sol[pc] = rhs[pr].clone();
        }
        Some((sol, pivots.len() == cols))
    }

    /// A point is in the hull iff some affinely independent subset of at most
    /// dim+1 cloud points carries nonnegative barycentric weights for it.
    /// This enumeration never touches the simplex path.
    fn hull_by_caratheodory(point: &[Rat], cloud: &[Vec<Rat>]) -> bool {
        let d = point.len();
        let k = cloud.len();
        let mut subsets: Vec<Vec<usize>> = vec![vec![]];
        for i in 0..k {
            let mut extended = Vec::new();
            for s in &subsets {
                if s.len() <= d {
                    let mut t = s.clone();
                    t.push(i);
                    extended.push(t);
                }
            }
            subsets.extend(extended);
        }
        for s in subsets.iter().filter(|s| !s.is_empty()) {
            let mut m: Vec<Vec<Rat>> = Vec::with_capacity(d + 1);
            for coord in 0..d {
                m.push(s.iter().map(|&i| cloud[i][coord].clone()).collect());
            }
            m.push(vec![Rat::one(); s.len()]);
            let mut rhs: Vec<Rat> = point.to_vec();
            rhs.push(Rat::one());
            if let Some((sol, unique)) = solve_rect(m, rhs, s.len()) {
                if unique && sol.iter().all(|v| !v.is_negative()) {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn hull_agrees_with_caratheodory_enumeration() {
        let mut rng = ChaCha20Rng::seed_from_u64(0xca7a);
        for case in 0..250 {
            let d = rng.gen_range(1..=3);
            let k = rng.gen_range(1..=6);
            let pt: Vec<Rat> = (0..d).map(|_| rint(rng.gen_range(-3..=3i64))).collect();
            let cloud: Vec<Vec<Rat>> = (0..k)
                .map(|_| (0..d).map(|_| rint(rng.gen_range(-3..=3i64))).collect())
                .collect();
            let res = in_convex_hull(&pt, &cloud).unwrap();
            verify_hull(&pt, &cloud, &res).unwrap();
            assert_eq!(
                res.member,
                hull_by_caratheodory(&pt, &cloud),
                "case {case}: simplex and enumeration disagree"
            );
        }
    }

    #[test]
    fn conditional_expectation_averages_atomwise() {
        let sp = four_state();
        let x = Rv::new(vec![rint(2), rint(0), rint(0), rint(0)]);
        let e = cond_expectation(&sp, 0, &x, None).unwrap();
        assert_eq!(e, Rv::new(vec![rint(1), rint(1), rint(0), rint(0)]));
        let q = vec![rat(1, 2), rat(1, 6), rat(1, 6), rat(1, 6)];
        let e = cond_expectation(&sp, 0, &x, Some(&q)).unwrap();
        assert_eq!(e.values[0], rat(3, 2));
    }
}
