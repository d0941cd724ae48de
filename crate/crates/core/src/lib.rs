//! LTE-WiFi split-bearer data plane.
//!
//! The transmit side numbers packets ([`pdcp`]), picks a link for each one
//! ([`flowctl`]), and either packs it into LTE transport blocks ([`framing`]) or
//! wraps it in an Ethernet frame for WiFi ([`eth`]). The receive side reassembles
//! the LTE blocks and merges both links back into sequence ([`reorder`]).
//!
//! Everything here is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod eth;
pub mod flowctl;
pub mod framing;
pub mod pdcp;
pub mod reorder;

pub use flowctl::{BacklogDelta, ControllerConfig, FlowController, Link, Mode};
pub use framing::{FrameHeader, FramedPdu, Reassembler, Segmenter};
pub use pdcp::{PdcpPdu, PdcpTx};
pub use reorder::{ReorderBuffer, ReorderConfig};
