//! Information-gain (mutual-information) feature ranking with
//! equal-frequency discretization of continuous features. All quantities
//! are in bits.

use crate::error::{Error, Result};
use crate::ml::dataset::Dataset;

/// Equal-frequency bin assignments. Bin edges are order statistics of the
/// data, so equal values always share a bin and any strictly increasing
/// transform of the column yields identical assignments. When the column
/// has at most `bins` distinct values each value gets its own bin.
pub fn equal_frequency_bins(xs: &[f64], bins: usize) -> Vec<u32> {
    let n = xs.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut edges: Vec<f64> = (1..bins).map(|b| sorted[(b * n) / bins]).collect();
    edges.dedup();
    xs.iter()
        .map(|&x| edges.partition_point(|&e| e <= x) as u32)
        .collect()
}

fn entropy_bits(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

/// Mutual information I(X,Y) = H(Y) - H(Y|X) between two discrete columns.
pub fn mutual_information(xs: &[u32], ys: &[u32]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    let x_card = xs.iter().max().map(|&m| m as usize + 1).unwrap_or(0);
    let y_card = ys.iter().max().map(|&m| m as usize + 1).unwrap_or(0);
    let mut y_counts = vec![0u64; y_card];
    let mut x_counts = vec![0u64; x_card];
    let mut joint = vec![0u64; x_card * y_card];
    for (&x, &y) in xs.iter().zip(ys) {
        y_counts[y as usize] += 1;
        x_counts[x as usize] += 1;
        joint[x as usize * y_card + y as usize] += 1;
    }
    let h_y = entropy_bits(&y_counts);
    let mut h_y_given_x = 0.0;
    for (x, &cx) in x_counts.iter().enumerate() {
        if cx == 0 {
            continue;
        }
        let slice = &joint[x * y_card..(x + 1) * y_card];
        h_y_given_x += cx as f64 / n as f64 * entropy_bits(slice);
    }
    h_y - h_y_given_x
}

/// Information gain of a continuous feature column about binary labels,
/// after equal-frequency discretization into `bins` bins.
pub fn information_gain(x: &[f64], y: &[bool], bins: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::validation("feature/label length mismatch"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite feature value"));
    }
    if bins < 2 {
        return Err(Error::validation("need at least 2 bins"));
    }
    let xb = equal_frequency_bins(x, bins);
    let yb: Vec<u32> = y.iter().map(|&b| b as u32).collect();
    Ok(mutual_information(&xb, &yb))
}

/// All features ranked by information gain, descending, with stable ties.
pub fn rank_features(ds: &Dataset, bins: usize) -> Result<Vec<(String, f64)>> {
    let mut ranked: Vec<(String, f64)> = Vec::with_capacity(ds.n_features());
    for i in 0..ds.n_features() {
        let gain = information_gain(&ds.column(i), &ds.labels, bins)?;
        ranked.push((ds.feature_names[i].clone(), gain));
    }
    // stable sort keeps the original column order for ties
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_binary_predictor_is_one_bit() {
        let x = vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let y = vec![false, true, false, true, false, true, false, true];
        let g = information_gain(&x, &y, 10).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_feature_zero_gain() {
        // x and y independent by exhaustive small table
        let x = vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0];
        let y = vec![false, true, false, true, false, true, false, true];
        let g = information_gain(&x, &y, 2).unwrap();
        assert!(g.abs() < 1e-12);
    }

    #[test]
    fn constant_labels_zero_gain() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![true; 4];
        assert_eq!(information_gain(&x, &y, 2).unwrap(), 0.0);
    }

    #[test]
    fn eight_row_joint_table_matches_hand_enumeration() {
        // joint counts: (x=0,y=0)=3, (x=0,y=1)=1, (x=1,y=0)=1, (x=1,y=1)=3
        let x = vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let y = vec![false, false, false, true, false, true, true, true];
        // H(Y) = 1; H(Y|X) = h(1/4) = 0.8112781244591328
        let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        let expected = 1.0 - h(0.25);
        let g = information_gain(&x, &y, 2).unwrap();
        assert!((g - expected).abs() < 1e-15);
    }

    #[test]
    fn symmetric_on_discrete_inputs() {
        let xs = vec![0u32, 1, 2, 0, 1, 2, 2, 1, 0, 2];
        let ys = vec![0u32, 0, 1, 1, 0, 1, 1, 0, 0, 1];
        let a = mutual_information(&xs, &ys);
        let b = mutual_information(&ys, &xs);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn binning_monotone_invariant() {
        let xs: Vec<f64> = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
        let transformed: Vec<f64> = xs.iter().map(|&x| (x * 2.0 + 1.0).exp().ln_1p()).collect();
        assert_eq!(equal_frequency_bins(&xs, 4), equal_frequency_bins(&transformed, 4));
    }

    #[test]
    fn label_column_ranks_first_with_gain_h_y() {
        let labels = vec![true, false, true, false, false, false, true, false];
        let leak: Vec<f64> = labels.iter().map(|&b| b as u8 as f64).collect();
        // repeated values whose groups mix both labels, so gain < H(Y)
        let noise: Vec<f64> = (0..8).map(|i| (i / 4) as f64).collect();
        let ds = Dataset::new(
            vec!["noise".into(), "leak".into()],
            leak.iter().zip(&noise).map(|(&l, &n)| vec![n, l]).collect(),
            labels.clone(),
            (0..8).map(|i| format!("t{i}")).collect(),
        )
        .unwrap();
        let ranked = rank_features(&ds, 10).unwrap();
        assert_eq!(ranked[0].0, "leak");
        let p = labels.iter().filter(|&&b| b).count() as f64 / 8.0;
        let h_y = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        assert!((ranked[0].1 - h_y).abs() < 1e-12);
    }
}
