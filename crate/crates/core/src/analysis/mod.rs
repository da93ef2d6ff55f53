//! Valleys, the basic valley, good environments and stopping times of the potential.

mod good_env;
mod times;
mod valley;

pub use good_env::{
    basic_valley_for, is_good_environment, SEARCH_FACTOR, off_core_occupation, search_cap, slice_upper_bound,
    window_bound, FlankBound, GoodEnvParams, GoodEnvReport, SliceBound,
};
pub use times::{band_entry_times, ladder_epochs, stopping_time_down, stopping_time_up, Epochs};
pub use valley::{
    basic_valley, gamma_n, is_deep_valley_around_zero, margin_n, refine_left, refine_right,
    BasicValley, Refinement, Valley,
};
