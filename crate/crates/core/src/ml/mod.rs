//! Feature ranking, random-forest training and imbalanced-class evaluation.

pub mod dataset;
pub mod eval;
pub mod forest;
pub mod info_gain;
pub mod spearman;

pub use dataset::{Dataset, E1Definition, FeatureCombo};
pub use eval::{evaluate_cv, feature_set_experiment, undersample, CvConfig, EvalReport, PrPoint};
pub use forest::{predict_proba, train_forest, FeatureSampling, ForestModel, ForestParams};
pub use info_gain::{equal_frequency_bins, information_gain, mutual_information, rank_features};
pub use spearman::{spearman, spearman_vs_growth, CorrelationPoint};
