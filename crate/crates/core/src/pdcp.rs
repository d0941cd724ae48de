//! PDCP sequence numbering. Ciphering and header compression are identity here.

use alloc::vec::Vec;
use core::fmt;

pub const SN_BITS: u32 = 12;
pub const SN_MODULUS: u16 = 1 << SN_BITS;
pub const HEADER_LEN: usize = 2;

/// Forward distance from `from` to `to` in SN space.
#[inline]
pub fn sn_distance(from: u16, to: u16) -> u16 {
    to.wrapping_sub(from) & (SN_MODULUS - 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdcpPdu {
    pub sn: u16,
    pub payload: Vec<u8>,
    /// Time the PDU entered PDCP. Not carried on the wire.
    pub enqueue_time: u64,
}

impl PdcpPdu {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    /// 4 zero bits then the 12-bit SN, big-endian, then the payload.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&(self.sn & (SN_MODULUS - 1)).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Strip the header. The high four bits are ignored and `enqueue_time` is 0.
    pub fn decode(bytes: &[u8]) -> Result<PdcpPdu, PdcpError> {
        if bytes.len() <= HEADER_LEN {
            return Err(PdcpError::Truncated { len: bytes.len() });
        }
        let sn = u16::from_be_bytes([bytes[0], bytes[1]]) & (SN_MODULUS - 1);
        Ok(PdcpPdu { sn, payload: bytes[HEADER_LEN..].to_vec(), enqueue_time: 0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdcpError {
    /// Header plus at least one payload byte is required.
    Truncated { len: usize },
}

impl fmt::Display for PdcpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PdcpError::Truncated { len } => write!(f, "PDCP PDU of {len} bytes is too short"),
        }
    }
}

impl core::error::Error for PdcpError {}

/// Transmit-side SN counter.
#[derive(Debug, Clone, Default)]
pub struct PdcpTx {
    next_sn: u16,
}

impl PdcpTx {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(sn: u16) -> Self {
        PdcpTx { next_sn: sn % SN_MODULUS }
    }

    pub fn next_sn(&self) -> u16 {
        self.next_sn
    }

    pub fn send(&mut self, payload: Vec<u8>, now: u64) -> PdcpPdu {
        let sn = self.next_sn;
        self.next_sn = (sn + 1) % SN_MODULUS;
        PdcpPdu { sn, payload, enqueue_time: now }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn first_sn_is_zero() {
        let mut tx = PdcpTx::new();
        let pdu = tx.send(vec![0x55; 100], 0);
        assert_eq!(pdu.sn, 0);
        assert_eq!(&pdu.encode()[..2], &[0x00, 0x00]);
        assert_eq!(pdu.encoded_len(), 102);
    }

    #[test]
    fn counter_wraps() {
        let mut tx = PdcpTx::starting_at(4095);
        let pdu = tx.send(vec![1], 3);
        assert_eq!(pdu.sn, 4095);
        assert_eq!(&pdu.encode()[..2], &[0x0F, 0xFF]);
        assert_eq!(tx.next_sn(), 0);
    }

    #[test]
    fn sequential_sns() {
        let mut tx = PdcpTx::new();
        let sns: Vec<u16> = (0..1000).map(|i| tx.send(vec![i as u8], i).sn).collect();
        assert!(sns.iter().copied().eq(0..1000));
    }

    #[test]
    fn decode_max_sn() {
        let pdu = PdcpPdu::decode(&[0x0F, 0xFF, 0x01]).unwrap();
        assert_eq!((pdu.sn, pdu.payload), (4095, vec![0x01]));
        assert_eq!(PdcpPdu::decode(&[0xFF, 0xFF, 0x01]).unwrap().sn, 4095);
    }

    #[test]
    fn decode_too_short() {
        assert_eq!(PdcpPdu::decode(&[0x00, 0x01]), Err(PdcpError::Truncated { len: 2 }));
        assert!(PdcpPdu::decode(&[]).is_err());
    }

    #[test]
    fn roundtrip_every_sn() {
        for sn in 0..SN_MODULUS {
            let pdu = PdcpPdu { sn, payload: vec![sn as u8, (sn >> 8) as u8], enqueue_time: 0 };
            assert_eq!(PdcpPdu::decode(&pdu.encode()).unwrap(), pdu);
        }
    }

    #[test]
    fn distance_wraps() {
        assert_eq!(sn_distance(4090, 5), 11);
        assert_eq!(sn_distance(5, 4090), 4085);
        assert_eq!(sn_distance(7, 7), 0);
    }
}
