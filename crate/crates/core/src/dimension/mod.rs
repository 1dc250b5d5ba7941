//! Mass-distribution certificates, the strategy tree measure and its
//! local exponents, and box counting.

mod boxcount;
mod certificates;
mod tree;

pub use boxcount::{box_count, POINT_BUDGET};
pub use certificates::{
    c_d, hausdorff_presum, lebesgue_samples, mass_lower_certificate, mass_upper_certificate, n_d, point_mass_samples, tree_samples, Certificate,
    Constants, MassSample,
};
pub use tree::{exponent_summary, least_squares, local_exponent, median, strategy_tree, DimensionEstimate, TreeError, TreeMeasure, TreeNode};
