//! Low-degree polynomial machinery over anchored templates.

mod exhaustive;
mod gram;
mod matching;
mod moments;
mod template;

pub use exhaustive::*;
pub use gram::*;
pub use matching::{all_matchings, edit_distance, for_each_matching, forest_rank, Matching, MatchingStats, Overlay};
pub use moments::*;
pub use template::{enumerate_templates, Template, MAX_NODES};
