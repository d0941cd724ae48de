//! Segmentation/concatenation framing for the LTE path.
//!
//! Every framed PDU fills exactly one transport block:
//!
//! ```text
//! byte 0      R R R R R R FI1 FI0    FI1 = start_frag, FI0 = end_frag
//! byte 1      0 SN(7)
//! byte 2..    LI(15) E(1)  big-endian, E = 1 except on the last descriptor
//! ...         payload (sum of LIs), then zero padding
//! ```
//!
//! `start_frag` is set when the first payload byte is not the first byte of an
//! SDU, `end_frag` when the last payload byte is not the last byte of an SDU.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

/// Fixed part of the header: FI byte + SN byte.
pub const FIXED_HEADER_LEN: usize = 2;
/// One LI/E descriptor.
pub const DESCRIPTOR_LEN: usize = 2;
/// Smallest transport block that can carry one payload byte.
pub const MIN_TB_SIZE: usize = FIXED_HEADER_LEN + DESCRIPTOR_LEN + 1;
pub const MAX_LI: u16 = 0x7FFF;
/// Frame sequence numbers wrap at this modulus.
pub const SN_MODULUS: u8 = 128;
pub const DEFAULT_MAX_CONCAT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameHeader {
    pub start_frag: bool,
    pub end_frag: bool,
    pub sn: u8,
    pub lis: Vec<u16>,
}

impl FrameHeader {
    pub fn encoded_len(&self) -> usize {
        FIXED_HEADER_LEN + DESCRIPTOR_LEN * self.lis.len()
    }

    fn fi_byte(&self) -> u8 {
        (u8::from(self.start_frag) << 1) | u8::from(self.end_frag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramedPdu {
    pub header: FrameHeader,
    pub payload: Vec<u8>,
    pub padding_len: usize,
}

impl FramedPdu {
    /// Total on-air size: header + payload + padding.
    pub fn encoded_len(&self) -> usize {
        self.header.encoded_len() + self.payload.len() + self.padding_len
    }

    /// Payload split along the LI boundaries.
    pub fn segments(&self) -> Segments<'_> {
        Segments { lis: self.header.lis.iter(), rest: &self.payload }
    }

    /// Serialize to the wire layout.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        debug_assert!(self.header.sn < SN_MODULUS);
        debug_assert!(!self.header.lis.is_empty());
        debug_assert_eq!(self.header.lis.iter().map(|&li| usize::from(li)).sum::<usize>(), self.payload.len());
        out.push(self.header.fi_byte());
        out.push(self.header.sn & 0x7F);
        let last = self.header.lis.len() - 1;
        for (i, &li) in self.header.lis.iter().enumerate() {
            debug_assert!((1..=MAX_LI).contains(&li));
            let e = u16::from(i != last);
            out.extend_from_slice(&((li << 1) | e).to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out.resize(out.len() + self.padding_len, 0);
    }

    /// Parse a transport block. Bytes past the last segment are padding.
    pub fn decode(bytes: &[u8]) -> Result<FramedPdu, FramingError> {
        if bytes.len() < FIXED_HEADER_LEN + DESCRIPTOR_LEN {
            return Err(FramingError::Truncated { offset: bytes.len() });
        }
        let start_frag = bytes[0] & 0b10 != 0;
        let end_frag = bytes[0] & 0b01 != 0;
        let sn = bytes[1] & 0x7F;

        let mut lis = Vec::new();
        let mut offset = FIXED_HEADER_LEN;
        loop {
            let Some(desc) = bytes.get(offset..offset + DESCRIPTOR_LEN) else {
                return Err(FramingError::Truncated { offset });
            };
            let desc = u16::from_be_bytes([desc[0], desc[1]]);
            let li = desc >> 1;
            if li == 0 {
                return Err(FramingError::ZeroLi { offset });
            }
            lis.push(li);
            offset += DESCRIPTOR_LEN;
            if desc & 1 == 0 {
                break;
            }
        }

        let payload_len: usize = lis.iter().map(|&li| usize::from(li)).sum();
        let Some(payload) = bytes.get(offset..offset + payload_len) else {
            return Err(FramingError::Truncated { offset: bytes.len() });
        };
        Ok(FramedPdu {
            header: FrameHeader { start_frag, end_frag, sn, lis },
            payload: payload.to_vec(),
            padding_len: bytes.len() - offset - payload_len,
        })
    }
}

pub struct Segments<'a> {
    lis: core::slice::Iter<'a, u16>,
    rest: &'a [u8],
}

impl<'a> Iterator for Segments<'a> {
    type Item = &'a [u8];

    fn next(&mut self) -> Option<&'a [u8]> {
        let li = usize::from(*self.lis.next()?);
        let (seg, rest) = self.rest.split_at(li);
        self.rest = rest;
        Some(seg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FramingError {
    /// The descriptor chain or payload runs past the end of the buffer.
    Truncated { offset: usize },
    /// A descriptor carries LI = 0.
    ZeroLi { offset: usize },
}

impl fmt::Display for FramingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FramingError::Truncated { offset } => write!(f, "framed PDU truncated at byte {offset}"),
            FramingError::ZeroLi { offset } => write!(f, "zero length indicator at byte {offset}"),
        }
    }
}

impl core::error::Error for FramingError {}

/// Transmit side: queue of SDUs waiting to be packed into transport blocks.
#[derive(Debug, Clone)]
pub struct Segmenter {
    queue: VecDeque<Vec<u8>>,
    /// Bytes of the queue head already sent in earlier PDUs.
    head_offset: usize,
    queued_bytes: usize,
    next_sn: u8,
    max_concat: usize,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_CONCAT)
    }
}

impl Segmenter {
    pub fn new(max_concat: usize) -> Self {
        assert!(max_concat >= 1, "max_concat must allow at least one segment");
        Segmenter { queue: VecDeque::new(), head_offset: 0, queued_bytes: 0, next_sn: 0, max_concat }
    }

    /// Start the SN counter somewhere other than zero.
    pub fn with_next_sn(mut self, sn: u8) -> Self {
        self.next_sn = sn % SN_MODULUS;
        self
    }

    /// Queue an SDU. Empty SDUs carry nothing and are ignored.
    pub fn push(&mut self, sdu: Vec<u8>) {
        if sdu.is_empty() {
            return;
        }
        self.queued_bytes += sdu.len();
        self.queue.push_back(sdu);
    }

    /// SDUs not yet completely sent, including a partially sent head.
    pub fn queued_sdus(&self) -> usize {
        self.queue.len()
    }

    /// Unsent bytes.
    pub fn queued_bytes(&self) -> usize {
        self.queued_bytes - self.head_offset
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn next_sn(&self) -> u8 {
        self.next_sn
    }

    /// Fill one transport block of `tb_size` bytes. Returns `None` if nothing is
    /// queued. A pending fragment is resumed first; the last SDU that does not fit
    /// is split and its remainder stays at the head of the queue.
    pub fn build_pdu(&mut self, tb_size: usize) -> Option<FramedPdu> {
        assert!(tb_size >= MIN_TB_SIZE, "transport block of {tb_size} bytes cannot carry data");
        if self.queue.is_empty() {
            return None;
        }
        let start_frag = self.head_offset > 0;
        let mut end_frag = false;
        let mut lis = Vec::new();
        let mut payload = Vec::new();
        let mut room = tb_size - FIXED_HEADER_LEN;

        while lis.len() < self.max_concat && room > DESCRIPTOR_LEN {
            let Some(head) = self.queue.front() else { break };
            room -= DESCRIPTOR_LEN;
            let remaining = head.len() - self.head_offset;
            let take = remaining.min(room).min(usize::from(MAX_LI));
            payload.extend_from_slice(&head[self.head_offset..self.head_offset + take]);
            lis.push(take as u16);
            room -= take;
            if take == remaining {
                self.queued_bytes -= head.len();
                self.queue.pop_front();
                self.head_offset = 0;
            } else {
                self.head_offset += take;
                end_frag = true;
                break;
            }
        }

        let sn = self.next_sn;
        self.next_sn = (sn + 1) % SN_MODULUS;
        Some(FramedPdu { header: FrameHeader { start_frag, end_frag, sn, lis }, payload, padding_len: room })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReassemblyStats {
    pub pdus: u64,
    pub sdus_delivered: u64,
    /// SN discontinuities observed.
    pub sn_gaps: u64,
    /// Partially reassembled SDUs thrown away.
    pub partials_discarded: u64,
    /// Continuation segments dropped because their head was never seen.
    pub orphan_segments: u64,
}

/// Receive side reassembly. A break in the SN sequence discards whatever was
/// pending; there is no retransmission.
#[derive(Debug, Clone, Default)]
pub struct Reassembler {
    expected_sn: Option<u8>,
    partial: Vec<u8>,
    partial_open: bool,
    stats: ReassemblyStats,
}

impl Reassembler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> ReassemblyStats {
        self.stats
    }

    pub fn expected_sn(&self) -> Option<u8> {
        self.expected_sn
    }

    pub fn has_partial(&self) -> bool {
        self.partial_open
    }

    fn discard_partial(&mut self) {
        if self.partial_open {
            self.stats.partials_discarded += 1;
        }
        self.partial.clear();
        self.partial_open = false;
    }

    /// Process one PDU, returning the SDUs it completes in order.
    pub fn push(&mut self, pdu: &FramedPdu) -> Vec<Vec<u8>> {
        self.stats.pdus += 1;
        if self.expected_sn.is_some_and(|expected| pdu.header.sn != expected) {
            self.stats.sn_gaps += 1;
            self.discard_partial();
        }
        self.expected_sn = Some((pdu.header.sn + 1) % SN_MODULUS);

        let mut out = Vec::new();
        let n = pdu.header.lis.len();
        for (i, seg) in pdu.segments().enumerate() {
            let first = i == 0;
            let closes = !(i + 1 == n && pdu.header.end_frag);
            if first && pdu.header.start_frag {
                if !self.partial_open {
                    self.stats.orphan_segments += 1;
                    continue;
                }
                self.partial.extend_from_slice(seg);
            } else {
                // A fresh SDU while one is still pending means its tail went missing.
                self.discard_partial();
                self.partial.extend_from_slice(seg);
                self.partial_open = true;
            }
            if closes {
                self.partial_open = false;
                out.push(core::mem::take(&mut self.partial));
            }
        }
        self.stats.sdus_delivered += out.len() as u64;
        out
    }
}
