//! The listings of the guide in `book/` compiled as doc-tests, one module
//! per chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/mimetic.md")]
pub mod mimetic {}
#[doc = include_str!("../../../book/src/htc.md")]
pub mod htc {}
#[doc = include_str!("../../../book/src/simm.md")]
pub mod simm {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
