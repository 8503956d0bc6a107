//! Private evaluation of black-box monotone statistics from quantiles of the
//! statistic over random subsamples of the data.

pub mod applications;
pub mod audit;
pub mod data;
pub mod error;
pub mod mechanisms;
pub mod noise;
pub mod regression;
pub mod selection;
pub mod statistic;
pub mod stream;

pub use data::{empirical_quantile, rank, Dataset, EmpiricalDistribution};
pub use error::{Error, Result};
pub use mechanisms::{MechanismOutput, QuantileFinderConfig, QuantileList, Release};
pub use noise::PrivacyBudget;
pub use statistic::{MonotoneStatistic, Range, Statistic};
pub use stream::Stream;
