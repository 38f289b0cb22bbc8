//! Language profiles, the six pairwise language distances, and Pearson
//! correlation. All distances lie in `[0, 1]`.

mod distance;
mod pearson;
mod profile;

pub use distance::{
    cosine_distance, data_covariate, distance, featural_distance, genetic_distance,
    geographic_distance, great_circle_fraction, Metric, MetricOptions,
};
pub use pearson::pearson;
pub use profile::{load_profiles, parse_profiles, save_profiles, LanguageProfile};
