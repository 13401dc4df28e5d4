use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dictionary, Learner};
use crate::data::FeatureSet;
use crate::error::{Error, Result};

const MOVE_TOL: f64 = 1e-9;

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest center (lowest index on ties).
fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bd), (i, c)| {
            let d = sq_dist(point, c);
            if d < bd {
                (i, d)
            } else {
                (bi, bd)
            }
        })
}

fn plus_plus_init(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // every remaining point coincides with a center
            Err(_) => (0..n).find(|&i| !chosen[i]).expect("k <= n"),
        };
        chosen[next] = true;
        centers.push(points[next].to_vec());
        let c = centers.last().unwrap();
        for (slot, p) in d2.iter_mut().zip(points) {
            *slot = slot.min(sq_dist(p, c));
        }
    }
    centers
}

/// K-means++ seeded Lloyd clustering; the unit-normalized centroids become
/// the atoms. Empty clusters are reseeded to the point farthest from its
/// assigned centroid.
pub fn build_dict_kmeans(train: &FeatureSet, k: usize, seed: u64, iters: usize) -> Result<Dictionary> {
    let n = train.len();
    if k > n {
        return Err(Error::Spec(format!("K={k} exceeds {n} training vectors")));
    }
    if k < 2 {
        return Err(Error::Spec("dictionary needs at least 2 atoms".into()));
    }
    if iters == 0 {
        return Err(Error::Spec("K-means needs at least one iteration".into()));
    }
    let points: Vec<&[f64]> = train.vectors().iter().map(|v| v.values.as_slice()).collect();
    let d = train.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(&points, k, &mut rng);
    let mut assign = vec![0usize; n];

    for _ in 0..iters {
        let mut dist = vec![0.0; n];
        for (i, p) in points.iter().enumerate() {
            let (c, d2) = nearest(p, &centers);
            assign[i] = c;
            dist[i] = d2;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        let mut taken = vec![false; n];
        let mut movement: f64 = 0.0;
        for c in 0..k {
            let next = if counts[c] > 0 {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dist[b] >= dist[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("k <= n");
                taken[far] = true;
                dist[far] = 0.0;
                points[far].to_vec()
            };
            movement = movement.max(sq_dist(&next, &centers[c]).sqrt());
            centers[c] = next;
        }
        if movement < MOVE_TOL {
            break;
        }
    }

    let mut atoms = DMatrix::zeros(d, k);
    for (c, center) in centers.iter().enumerate() {
        let mut col = center.clone();
        if norm(&col) == 0.0 {
            // Zero centroid: use the largest member of the cluster instead.
            let largest = |it: &mut dyn Iterator<Item = usize>| {
                it.max_by(|&a, &b| norm(points[a]).total_cmp(&norm(points[b])))
            };
            let member = largest(&mut (0..n).filter(|&i| assign[i] == c))
                .or_else(|| largest(&mut (0..n)))
                .expect("non-empty training set");
            col = points[member].to_vec();
        }
        let len = norm(&col);
        if len == 0.0 {
            return Err(Error::Data("all training vectors are zero".into()));
        }
        for (r, v) in col.iter().enumerate() {
            atoms[(r, c)] = v / len;
        }
    }
    Dictionary::new(atoms, Learner::KMeans, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repeated_points() -> (FeatureSet, Vec<Vec<f64>>) {
        let protos = vec![
            vec![10.0, 0.0, 0.0],
            vec![0.0, 5.0, 0.0],
            vec![0.0, 0.0, -7.0],
            vec![3.0, 3.0, 3.0],
        ];
        let rows = (0..40).map(|i| (format!("p{i}"), format!("c{}", i % 4), protos[i % 4].clone()));
        (FeatureSet::from_rows(rows).unwrap(), protos)
    }

    #[test]
    fn recovers_separated_points() {
        let (fs, protos) = repeated_points();
        let dict = build_dict_kmeans(&fs, 4, 11, 100).unwrap();
        for p in protos {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let found = (0..4).any(|k| {
                dict.atom(k)
                    .iter()
                    .zip(&p)
                    .all(|(a, b)| (a - b / norm).abs() < 1e-12)
            });
            assert!(found, "prototype {p:?} not recovered");
        }
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let fs = FeatureSet::from_rows(
            (0..5).map(|i| (format!("{i}"), "c", vec![1.0 + i as f64, (i * i) as f64 - 2.0])),
        )
        .unwrap();
        let dict = build_dict_kmeans(&fs, 5, 3, 100).unwrap();
        for v in fs.vectors() {
            let norm = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((0..5).any(|k| dict
                .atom(k)
                .iter()
                .zip(&v.values)
                .all(|(a, b)| (a - b / norm).abs() < 1e-12)));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (fs, _) = repeated_points();
        let a = build_dict_kmeans(&fs, 3, 9, 50).unwrap();
        let b = build_dict_kmeans(&fs, 3, 9, 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn k_above_n_rejected() {
        let (fs, _) = repeated_points();
        assert!(matches!(build_dict_kmeans(&fs, 41, 0, 10), Err(Error::Spec(_))));
    }
}
