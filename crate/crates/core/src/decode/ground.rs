//! Logical ground sets and alignment of decoded configurations.

use crate::error::{QacError, Result};
use crate::problem::{spins_from_index, IsingProblem, Spin};

/// Largest non-chain problem solved by enumeration.
pub const MAX_GROUND_SEARCH_SPINS: usize = 24;
const GROUND_TOLERANCE: f64 = 1e-9;

/// Every ground configuration of `problem`, in lexicographic order with
/// −1 before +1.
///
/// Chains without fields are solved directly: each bond is satisfied, giving
/// exactly two configurations. Anything else is enumerated.
pub fn ground_reference(problem: &IsingProblem) -> Result<Vec<Vec<Spin>>> {
    if problem.fields().next().is_none() {
        if let Some(bonds) = problem.chain_couplings() {
            let mut grounds: Vec<Vec<Spin>> = [1, -1]
                .into_iter()
                .map(|first: Spin| {
                    let mut config = vec![first];
                    for &j in &bonds {
                        let prev = *config.last().unwrap();
                        config.push(if j > 0.0 { -prev } else { prev });
                    }
                    config
                })
                .collect();
            grounds.sort();
            return Ok(grounds);
        }
    }
    let n = problem.num_spins();
    if n > MAX_GROUND_SEARCH_SPINS {
        return Err(QacError::Resource {
            what: "spins for ground-state enumeration",
            requested: n,
            cap: MAX_GROUND_SEARCH_SPINS,
        });
    }
    let energies: Vec<f64> = (0..1u64 << n).map(|i| problem.energy_of_index(i)).collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = GROUND_TOLERANCE * min.abs().max(1.0);
    let mut grounds: Vec<Vec<Spin>> = energies
        .iter()
        .enumerate()
        .filter(|&(_, &e)| e - min <= tol)
        .map(|(i, _)| spins_from_index(i as u64, n))
        .collect();
    grounds.sort();
    Ok(grounds)
}

pub fn hamming(a: &[Spin], b: &[Spin]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// The ground configuration most decoded qubits agree with and the distance
/// to it. Ties go to the lexicographically smallest ground.
pub fn align_and_distance<'a>(decoded: &[Spin], grounds: &'a [Vec<Spin>]) -> (&'a [Spin], usize) {
    let mut best: Option<(&[Spin], usize)> = None;
    for g in grounds {
        let d = hamming(decoded, g);
        let better = match best {
            None => true,
            Some((bg, bd)) => d < bd || (d == bd && g.as_slice() < bg),
        };
        if better {
            best = Some((g, d));
        }
    }
    best.expect("ground set must not be empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::make_af_chain;

    #[test]
    fn chain_grounds() {
        let g = ground_reference(&make_af_chain(4).unwrap()).unwrap();
        assert_eq!(g, vec![vec![-1, 1, -1, 1], vec![1, -1, 1, -1]]);
    }

    #[test]
    fn single_spin_field() {
        let mut p = IsingProblem::new(1);
        p.set_field(0, 1.0).unwrap();
        assert_eq!(ground_reference(&p).unwrap(), vec![vec![-1]]);
    }

    #[test]
    fn frustrated_triangle() {
        let mut p = IsingProblem::new(3);
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            p.set_coupling(i, j, 1.0).unwrap();
        }
        assert_eq!(ground_reference(&p).unwrap().len(), 6);
    }

    #[test]
    fn ferromagnetic_bond_in_chain() {
        let mut p = make_af_chain(3).unwrap();
        p.set_coupling(1, 2, -1.0).unwrap();
        assert_eq!(ground_reference(&p).unwrap(), vec![vec![-1, 1, 1], vec![1, -1, -1]]);
    }

    #[test]
    fn too_large_for_enumeration() {
        let mut p = IsingProblem::new(30);
        p.set_coupling(0, 5, 1.0).unwrap();
        assert!(matches!(ground_reference(&p), Err(QacError::Resource { .. })));
    }

    #[test]
    fn alignment() {
        let grounds = ground_reference(&make_af_chain(86).unwrap()).unwrap();
        let (g, d) = align_and_distance(&grounds[1], &grounds);
        assert_eq!((g, d), (grounds[1].as_slice(), 0));
        let mut end_flip = grounds[0].clone();
        end_flip[85] = -end_flip[85];
        assert_eq!(align_and_distance(&end_flip, &grounds).1, 1);
    }

    #[test]
    fn half_chain_domain_wall_tie() {
        let grounds = ground_reference(&make_af_chain(6).unwrap()).unwrap();
        let wall: Vec<Spin> = vec![1, -1, 1, 1, -1, 1];
        assert_eq!(hamming(&wall, &grounds[0]), 3);
        assert_eq!(hamming(&wall, &grounds[1]), 3);
        let (g, d) = align_and_distance(&wall, &grounds);
        assert_eq!(d, 3);
        assert_eq!(g, [-1, 1, -1, 1, -1, 1]);
    }
}
