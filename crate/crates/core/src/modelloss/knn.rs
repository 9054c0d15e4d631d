//! k-nearest-neighbor regression.

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;

use super::linear::Scaler;

/// Mean target of the `k` nearest training rows under Euclidean distance.
/// Distance ties break toward the lower row index.
pub fn knn_predict(
    train_x: &DesignMatrix,
    train_y: &[f64],
    query: &[f64],
    k: usize,
) -> Result<f64> {
    if train_x.n_rows() == 0 {
        return Err(Error::Size("knn needs a nonempty training set".into()));
    }
    if train_x.n_rows() != train_y.len() {
        return Err(Error::Shape(format!(
            "{} training rows vs {} targets",
            train_x.n_rows(),
            train_y.len()
        )));
    }
    if k == 0 || k > train_x.n_rows() {
        return Err(Error::Size(format!(
            "k = {k} not in 1..={}",
            train_x.n_rows()
        )));
    }
    if query.len() != train_x.n_cols() {
        return Err(Error::Shape(format!(
            "query width {} vs {} features",
            query.len(),
            train_x.n_cols()
        )));
    }
    let mut best = NearestSet::new(k);
    for (idx, row) in train_x.rows_iter().enumerate() {
        best.offer(idx, squared_distance(query, row));
    }
    Ok(best.mean_of(train_y))
}

/// Squared Euclidean distance, accumulated in four lanes so the adds do not
/// form one long dependency chain.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        for lane in 0..4 {
            let d = a[i + lane] - b[i + lane];
            acc[lane] += d * d;
        }
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        let d = a[i] - b[i];
        tail += d * d;
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// Fixed-capacity set of the k nearest (distance, index) pairs, ordered
/// lexicographically so index breaks distance ties deterministically.
struct NearestSet {
    k: usize,
    entries: Vec<(f64, usize)>,
}

impl NearestSet {
    fn new(k: usize) -> Self {
        Self {
            k,
            entries: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn worst(&self) -> Option<(f64, usize)> {
        if self.entries.len() == self.k {
            self.entries.last().copied()
        } else {
            None
        }
    }

    #[inline]
    fn offer(&mut self, idx: usize, d2: f64) {
        if let Some((wd, wi)) = self.worst() {
            if (d2, idx) >= (wd, wi) {
                return;
            }
        }
        let pos = self
            .entries
            .partition_point(|&(ed, ei)| (ed, ei) < (d2, idx));
        self.entries.insert(pos, (d2, idx));
        if self.entries.len() > self.k {
            self.entries.pop();
        }
    }

    fn mean_of(&self, y: &[f64]) -> f64 {
        let sum: f64 = self.entries.iter().map(|&(_, i)| y[i]).sum();
        sum / self.entries.len() as f64
    }
}

/// kNN regressor over standardized features.
#[derive(Debug, Clone)]
pub struct KnnModel {
    train: DesignMatrix,
    targets: Vec<f64>,
    k: usize,
    scaler: Scaler,
}

impl KnnModel {
    pub fn fit(x: &DesignMatrix, y: &[f64], k: usize) -> Result<Self> {
        if k == 0 || k > x.n_rows() {
            return Err(Error::Size(format!("k = {k} not in 1..={}", x.n_rows())));
        }
        if x.n_rows() != y.len() {
            return Err(Error::Shape(format!(
                "{} rows vs {} targets",
                x.n_rows(),
                y.len()
            )));
        }
        let scaler = Scaler::fit(x);
        let mut train = DesignMatrix::zeros(x.n_rows(), x.n_cols());
        for i in 0..x.n_rows() {
            let (src, dst) = (x.row(i).to_vec(), train.row_mut(i));
            scaler.transform_into(&src, dst);
        }
        Ok(Self {
            train,
            targets: y.to_vec(),
            k,
            scaler,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut z = vec![0.0; row.len()];
        self.scaler.transform_into(row, &mut z);
        self.predict_standardized(&z)
    }

    pub(crate) fn predict_standardized(&self, z: &[f64]) -> f64 {
        let mut best = NearestSet::new(self.k);
        let cutoff_check = self.train.n_cols() >= 16;
        for (idx, row) in self.train.rows_iter().enumerate() {
            if cutoff_check {
                if let Some((wd, _)) = best.worst() {
                    // cheap partial-distance abandon on the first half
                    let half = row.len() / 2;
                    let partial = squared_distance(&z[..half], &row[..half]);
                    if partial > wd {
                        continue;
                    }
                    let rest = squared_distance(&z[half..], &row[half..]);
                    best.offer(idx, partial + rest);
                    continue;
                }
            }
            best.offer(idx, squared_distance(z, row));
        }
        best.mean_of(&self.targets)
    }

    /// Standardize a query without predicting; used by batch evaluation.
    pub(crate) fn standardize_into(&self, row: &[f64], out: &mut [f64]) {
        self.scaler.transform_into(row, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DesignMatrix, Vec<f64>) {
        let x = DesignMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![5.0, 5.0],
        ])
        .unwrap();
        let y = vec![1.0, 2.0, 3.0, 10.0];
        (x, y)
    }

    #[test]
    fn k_equals_rows_gives_global_mean() {
        let (x, y) = toy();
        let p = knn_predict(&x, &y, &[0.5, 0.5], 4).unwrap();
        assert_eq!(p, 4.0);
    }

    #[test]
    fn exact_match_k1() {
        let (x, y) = toy();
        let p = knn_predict(&x, &y, &[5.0, 5.0], 1).unwrap();
        assert_eq!(p, 10.0);
    }

    #[test]
    fn tie_breaks_to_lower_index() {
        let x = DesignMatrix::from_rows(&[vec![1.0], vec![-1.0], vec![1.0]]).unwrap();
        let y = vec![10.0, 20.0, 30.0];
        // rows 0 and 2 are both at distance 0 from the query; row 1 at 2.
        let p = knn_predict(&x, &y, &[1.0], 2).unwrap();
        assert_eq!(p, 20.0); // rows 0 and 2 chosen, mean(10, 30)
    }

    #[test]
    fn matches_exhaustive_sort_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let y: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = DesignMatrix::from_rows(&rows).unwrap();
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();

            let got = knn_predict(&x, &y, &q, 3).unwrap();

            let mut dists: Vec<(f64, usize)> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    (
                        r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
                        i,
                    )
                })
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let want = dists[..3].iter().map(|&(_, i)| y[i]).sum::<f64>() / 3.0;
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_training_set_is_size_error() {
        let x = DesignMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(knn_predict(&x, &[1.0], &[0.0], 2).is_err());
    }

    #[test]
    fn model_standardization_matches_manual() {
        let (x, y) = toy();
        let model = KnnModel::fit(&x, &y, 2).unwrap();
        // prediction must be invariant under feature scaling of both sides
        let p1 = model.predict(&[1.0, 1.0]);
        let x2 = DesignMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![100.0, 0.0],
            vec![0.0, 100.0],
            vec![500.0, 500.0],
        ])
        .unwrap();
        let model2 = KnnModel::fit(&x2, &y, 2).unwrap();
        let p2 = model2.predict(&[100.0, 100.0]);
        assert_eq!(p1, p2);
    }
}
