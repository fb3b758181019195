//! Guide chapters compiled as doc-tests, one module per chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/distributions.md")]
pub mod distributions {}
#[doc = include_str!("../../../book/src/information.md")]
pub mod information {}
#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}
#[doc = include_str!("../../../book/src/bec-bsc.md")]
pub mod bec_bsc {}
#[doc = include_str!("../../../book/src/coding.md")]
pub mod coding {}
#[doc = include_str!("../../../book/src/soft-covering.md")]
pub mod soft_covering {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/reproducibility.md")]
pub mod reproducibility {}
