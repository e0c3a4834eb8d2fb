// mdbook cannot run listings against a workspace crate, so every chapter is
// pulled in here and `cargo test --doc` runs the code blocks. One module per
// chapter keeps failures traceable to their file.

#[doc = include_str!("src/introduction.md")]
pub mod chapter1 {}
#[doc = include_str!("src/geometry.md")]
pub mod chapter2 {}
#[doc = include_str!("src/channel.md")]
pub mod chapter3 {}
#[doc = include_str!("src/receiver.md")]
pub mod chapter4 {}
#[doc = include_str!("src/strategies.md")]
pub mod chapter5 {}
#[doc = include_str!("src/campaigns.md")]
pub mod chapter6 {}
