pub mod cli;
pub mod error;
pub mod format;
pub mod hodge;
pub mod ipm;
pub mod lab;
pub mod linalg;
pub mod constants;
pub mod penalty;
pub mod problem;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/constants.md")]
    mod constants {}
    #[doc = include_str!("../../../book/src/penalty.md")]
    mod penalty {}
    #[doc = include_str!("../../../book/src/ipm.md")]
    mod ipm {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/hodge.md")]
    mod hodge {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
