//! Two-user downlink rate-splitting with an improper Gaussian common stream
//! and imperfect successive interference cancellation.
//!
//! * [`rates`]: closed-form private and common rates and their derivative.
//! * [`private_max`]: private sum-rate maximization.
//! * [`common_max`]: common-rate maximization at fixed private powers.
//! * [`sac`]: a soft actor-critic agent for the sum-rate problem.
//! * [`oracle`]: brute-force grid search used to verify all of the above.

pub mod common_max;
pub mod error;
pub mod oracle;
pub mod private_max;
pub mod rates;
pub mod sac;

pub use error::{Result, RsmaError};
pub use rates::{
    common_rate_k, full_report, private_rate, private_rate_dpc, Allocation, ChannelParams, DerivativeParts,
    Impropriety, RateReport, Scenario, SicModel, User,
};
