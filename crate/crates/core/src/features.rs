//! The 29-feature vector assembled from a diffusion state at the prediction
//! threshold: evolution, network, geography and conductance feature groups.

use crate::error::{Error, Result};
use crate::graph::FollowerGraph;
use crate::tracker::DiffusionState;

pub const FEATURE_COUNT: usize = 29;

/// Fixed export order. Column names are stable across the CSV interfaces.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    // evolution
    "NumOfAdopters",
    "NumOfRT",
    "NumOfMention",
    "TimeTakenToPredThr",
    // network
    "HeavyUsers",
    "NumFolAdopters",
    "NumOfEdges",
    "Density",
    "SelfInitAdopters",
    "SelfInitAdoptersFollowers",
    "RatioOfSingletons",
    "RatioOfConnectedComponents",
    "LargestSize",
    "RatioSecondToFirst",
    // geography
    "InfectedGeo",
    "RatioSelfInitComm",
    "RatioCrossGeoEdges",
    "AdoptEntropy",
    "TweetingEntropy",
    "IntraGeoRT",
    "IntraGeoMention",
    // conductance
    "CummConductance",
    "ConductD1_20",
    "ConductD1_50",
    "ConductD1_100",
    "ConductD1_250",
    "ConductD2",
    "ConductD1_stdev",
    "ConductD2_stdev",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Evolution,
    Network,
    Geography,
    Conductance,
}

impl Category {
    pub fn code(&self) -> &'static str {
        match self {
            Category::Evolution => "E",
            Category::Network => "N",
            Category::Geography => "G",
            Category::Conductance => "C",
        }
    }

    pub fn from_code(code: &str) -> Option<Category> {
        match code {
            "E" => Some(Category::Evolution),
            "N" => Some(Category::Network),
            "G" => Some(Category::Geography),
            "C" => Some(Category::Conductance),
            _ => None,
        }
    }
}

pub fn category_of(index: usize) -> Category {
    match index {
        0..=3 => Category::Evolution,
        4..=13 => Category::Network,
        14..=20 => Category::Geography,
        _ => Category::Conductance,
    }
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

/// Derivative lags, smoothing windows and thresholds used by `assemble`.
/// Defaults match the source experiment.
#[derive(Debug, Clone, Copy)]
pub struct FeatureSpec {
    pub lags: [usize; 4],
    /// (short, long) first-derivative lags combined into the second derivative.
    pub second_lags: (usize, usize),
    pub stdev_window: usize,
    /// First-derivative lag used inside the stdev window.
    pub stdev_lag: usize,
    pub heavy_follower_threshold: u64,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            lags: [20, 50, 100, 250],
            second_lags: (50, 100),
            stdev_window: 100,
            stdev_lag: 50,
            heavy_follower_threshold: 3000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }
}

/// Shannon entropy in nats of a normalized distribution. `0 * ln 0` is 0.
pub fn entropy(fractions: &[f64]) -> Result<f64> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|&f| f < 0.0) {
        return Err(Error::validation("negative fraction in entropy input"));
    }
    if !fractions.is_empty() && (sum - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "entropy input sums to {sum}, expected 1"
        )));
    }
    Ok(fractions
        .iter()
        .filter(|&&f| f > 0.0)
        .map(|&f| -f * f.ln())
        .sum())
}

/// First derivative of the conductance series at 1-based index `n` with
/// tweet-count lag `k`: (c_n - c_{n-k}) / (t_n - t_{n-k}). A zero timestamp
/// gap yields 0 rather than an infinity.
pub fn conductance_derivative(series: &[f64], ts: &[i64], n: usize, k: usize) -> Result<f64> {
    if n <= k {
        return Err(Error::validation(format!(
            "derivative needs n > k, got n={n}, k={k}"
        )));
    }
    if n > series.len() || series.len() != ts.len() {
        return Err(Error::validation("series/timestamp index out of range"));
    }
    let dc = series[n - 1] - series[n - 1 - k];
    let dt = ts[n - 1] - ts[n - 1 - k];
    if dt == 0 {
        Ok(0.0)
    } else {
        Ok(dc / dt as f64)
    }
}

/// Second derivative built from the first derivatives at the two configured
/// lags: (d_short - d_long) / (t_{n-short} - t_{n-long}).
pub fn conductance_second_derivative(
    series: &[f64],
    ts: &[i64],
    n: usize,
    lags: (usize, usize),
) -> Result<f64> {
    let (short, long) = lags;
    if n <= long {
        return Err(Error::validation(format!(
            "second derivative needs n > {long}, got n={n}"
        )));
    }
    let d_short = conductance_derivative(series, ts, n, short)?;
    let d_long = conductance_derivative(series, ts, n, long)?;
    let dt = ts[n - 1 - short] - ts[n - 1 - long];
    if dt == 0 {
        Ok(0.0)
    } else {
        Ok((d_short - d_long) / dt as f64)
    }
}

fn population_stdev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// Population standard deviations of the first derivative (at `stdev_lag`)
/// and the second derivative, each evaluated at the last `window` event
/// indices up to `n`. Returns (first, second).
pub fn derivative_stdev(
    series: &[f64],
    ts: &[i64],
    n: usize,
    spec: &FeatureSpec,
) -> Result<(f64, f64)> {
    let window = spec.stdev_window;
    let max_lag = spec.second_lags.1.max(spec.stdev_lag);
    if n <= window + max_lag {
        return Err(Error::validation(format!(
            "stdev window needs n > {}, got n={n}",
            window + max_lag
        )));
    }
    let mut d1 = Vec::with_capacity(window);
    let mut d2 = Vec::with_capacity(window);
    for j in (n - window + 1)..=n {
        d1.push(conductance_derivative(series, ts, j, spec.stdev_lag)?);
        d2.push(conductance_second_derivative(series, ts, j, spec.second_lags)?);
    }
    Ok((population_stdev(&d1), population_stdev(&d2)))
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Assemble the full feature vector from a state frozen at the prediction
/// threshold. Derivative features whose lag or window exceeds the available
/// history are reported as 0 so that short-threshold runs (e.g. n=50) stay
/// finite.
pub fn assemble(state: &DiffusionState, g: &FollowerGraph, spec: &FeatureSpec) -> Result<FeatureVector> {
    let adopters = state.adopter_count() as u64;
    if adopters == 0 {
        return Err(Error::data("cannot assemble features with zero adopters"));
    }
    let n = state.tweet_count;
    let series = &state.conductance_series;
    let ts = &state.timestamps;

    let mut v = [0.0f64; FEATURE_COUNT];

    // evolution
    v[0] = adopters as f64;
    v[1] = state.rt_count as f64;
    v[2] = state.mention_count as f64;
    v[3] = (state.last_ts().unwrap() - state.first_ts().unwrap()) as f64;

    // network
    let heavy = state
        .adopters()
        .iter()
        .filter(|&&u| g.out_degree(u) as u64 >= spec.heavy_follower_threshold)
        .count();
    v[4] = heavy as f64;
    v[5] = state.volume as f64;
    v[6] = state.induced_edges as f64;
    v[7] = state.induced_edges as f64 / adopters as f64;
    let self_init = state.self_initiated.len() as u64;
    v[8] = self_init as f64;
    v[9] = state
        .self_initiated
        .iter()
        .map(|&u| g.out_degree(u) as u64)
        .sum::<u64>() as f64;
    v[10] = ratio(self_init, adopters);
    let mut wcc = state.wcc.clone();
    let components = wcc.component_count() as u64;
    let (largest, second) = wcc.top_two_sizes();
    v[11] = ratio(components, adopters);
    v[12] = largest as f64;
    v[13] = if largest == 0 {
        0.0
    } else {
        second as f64 / largest as f64
    };

    // geography
    let infected = state.geo.tweets.len() as u64;
    v[14] = infected as f64;
    let self_init_geos = state
        .geo
        .first_adopter_self_init
        .values()
        .filter(|&&b| b)
        .count() as u64;
    v[15] = ratio(self_init_geos, state.geo.first_adopter_self_init.len() as u64);
    v[16] = ratio(state.cross_geo_edges, state.induced_edges);
    let adopter_fracs: Vec<f64> = state
        .geo
        .adopters
        .values()
        .map(|&c| c as f64 / adopters as f64)
        .collect();
    v[17] = entropy(&adopter_fracs)?;
    let tweet_fracs: Vec<f64> = state
        .geo
        .tweets
        .values()
        .map(|&c| c as f64 / n as f64)
        .collect();
    v[18] = entropy(&tweet_fracs)?;
    v[19] = ratio(state.intra_geo_rt, state.attributable_rt);
    v[20] = ratio(state.intra_geo_mentions, state.attributable_mentions);

    // conductance
    v[21] = state.conductance();
    for (i, &k) in spec.lags.iter().enumerate() {
        v[22 + i] = if n > k {
            conductance_derivative(series, ts, n, k)?
        } else {
            0.0
        };
    }
    v[26] = if n > spec.second_lags.1 {
        conductance_second_derivative(series, ts, n, spec.second_lags)?
    } else {
        0.0
    };
    let max_lag = spec.second_lags.1.max(spec.stdev_lag);
    if n > spec.stdev_window + max_lag {
        let (s1, s2) = derivative_stdev(series, ts, n, spec)?;
        v[27] = s1;
        v[28] = s2;
    }

    Ok(FeatureVector { values: v })
}
