//! Exact arithmetic substrate: rationals, symbolic powers, the weighted
//! quasi-norm, boxes, hyperplanes and rational-point enumeration.

pub mod boxes;
pub mod dangerous;
pub mod membership;
pub mod plane;
pub mod power;
pub mod quasinorm;
pub mod rational;

pub use boxes::{AxisBox, Corner};
pub use membership::{scan_approximations, MembershipScan, ScanHit};
pub use dangerous::{dangerous_rationals, dangerous_rationals_with_budget, enumerate_near, AxisThreshold, EpsBall, TauBall, DEFAULT_BUDGET};
pub use plane::{affine_hull, plane_meets_box, rank, AffinePlane};
pub use power::{ceil_log, floor_log, PowerProduct, PowerTerm};
pub use quasinorm::{weighted_norm_approx, weighted_norm_cmp};
pub use rational::{fmt_q, parse_rational, parse_rational_list, RationalVector};
