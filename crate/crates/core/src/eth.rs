//! Ethernet-style encapsulation used on the WiFi path.

use alloc::vec::Vec;
use core::fmt;

pub const ETH_HLEN: usize = 14;
/// Local experimental ethertype marking LWA adaptation frames.
pub const ETHERTYPE_LWA: u16 = 0x88B5;

pub type MacAddr = [u8; 6];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EthFrame {
    pub dst: MacAddr,
    pub src: MacAddr,
    pub ethertype: u16,
    pub payload: Vec<u8>,
}

impl EthFrame {
    pub fn encode(&self) -> Vec<u8> {
        encap(&self.payload, self.dst, self.src, self.ethertype)
    }
}

/// Prepend the 14-byte header.
pub fn encap(payload: &[u8], dst: MacAddr, src: MacAddr, ethertype: u16) -> Vec<u8> {
    let mut out = Vec::with_capacity(ETH_HLEN + payload.len());
    out.extend_from_slice(&dst);
    out.extend_from_slice(&src);
    out.extend_from_slice(&ethertype.to_be_bytes());
    out.extend_from_slice(payload);
    out
}

/// Strip the header. Frames with another ethertype are not ours to handle.
pub fn decap(bytes: &[u8], expected_ethertype: u16) -> Result<EthFrame, EthError> {
    if bytes.len() <= ETH_HLEN {
        return Err(EthError::Truncated { len: bytes.len() });
    }
    let ethertype = u16::from_be_bytes([bytes[12], bytes[13]]);
    if ethertype != expected_ethertype {
        return Err(EthError::WrongEthertype { found: ethertype });
    }
    let mut dst = [0; 6];
    let mut src = [0; 6];
    dst.copy_from_slice(&bytes[..6]);
    src.copy_from_slice(&bytes[6..12]);
    Ok(EthFrame { dst, src, ethertype, payload: bytes[ETH_HLEN..].to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EthError {
    Truncated { len: usize },
    WrongEthertype { found: u16 },
}

impl fmt::Display for EthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EthError::Truncated { len } => write!(f, "frame of {len} bytes has no payload"),
            EthError::WrongEthertype { found } => write!(f, "unexpected ethertype {found:#06x}"),
        }
    }
}

impl core::error::Error for EthError {}
