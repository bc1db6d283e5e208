//! CAN 2.0A data model and bit-level codec: field layout, CRC-15, bit
//! stuffing and arbitration.
//!
//! Frame layout (base format, 11-bit identifier): SOF, identifier, RTR, IDE,
//! r0, DLC, Data (0..8 bytes), 15-bit CRC with a recessive delimiter, ACK
//! slot and delimiter, then seven recessive end-of-frame bits. Bit stuffing
//! covers SOF through the CRC sequence: after five identical consecutive
//! bits the encoder inserts the complement, and six identical bits inside
//! the stuffed region are a form error at the decoder.
//!
//! The ACK slot is encoded recessive; the bus simulator, not the codec,
//! overwrites it with a dominant level when a receiver passes the CRC.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("identifier 0x{0:X} exceeds the 11-bit range")]
    IdRange(u16),
    #[error("data length code {0} exceeds 8")]
    DlcRange(u8),
    #[error("data payload of {0} bytes exceeds 8")]
    DataLength(usize),
    #[error("stored CRC 0x{stored:04X} does not match the frame contents (computed 0x{computed:04X})")]
    CrcInvariant { stored: u16, computed: u16 },
    #[error("bit stream ends before the frame is complete")]
    Truncated,
    #[error("six identical bits at raw position {pos} inside the stuffed region")]
    StuffViolation { pos: usize },
    #[error("CRC mismatch: received 0x{received:04X}, computed 0x{computed:04X}")]
    CrcMismatch { received: u16, computed: u16 },
    #[error("form error: {0}")]
    Form(&'static str),
    #[error("arbitration tie: two nodes contend with identifier {0}")]
    ArbitrationTie(CanId),
}

/// 11-bit identifier; lower values win arbitration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanId(u16);

impl CanId {
    pub const MAX: u16 = 0x7FF;

    pub fn new(raw: u16) -> Result<Self, FrameError> {
        if raw > Self::MAX {
            return Err(FrameError::IdRange(raw));
        }
        Ok(CanId(raw))
    }

    pub fn raw(self) -> u16 {
        self.0
    }
}

impl fmt::Display for CanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:03X}", self.0)
    }
}

impl serde::Serialize for CanId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(&format_args!("0x{:03X}", self.0))
    }
}

/// Returns the higher-priority (numerically lower) identifier. Two nodes
/// contending with the same identifier is a wiring fault, not a tie-break.
pub fn wins_arbitration(a: CanId, b: CanId) -> Result<CanId, FrameError> {
    if a == b {
        return Err(FrameError::ArbitrationTie(a));
    }
    Ok(a.min(b))
}

/// Wire symbols: `false` is dominant (0), `true` is recessive (1).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    /// Append the low `width` bits of `value`, most significant first.
    pub fn push_value(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// CRC-15 over a bit stream: polynomial x^15+x^14+x^10+x^8+x^7+x^4+x^3+1
/// (0x4599), initial value 0.
pub fn crc15(bits: &BitString) -> u16 {
    crc15_bits(bits.as_slice().iter().copied())
}

fn crc15_bits(bits: impl Iterator<Item = bool>) -> u16 {
    let mut crc: u16 = 0;
    for bit in bits {
        let feedback = bit ^ ((crc >> 14) & 1 == 1);
        crc = (crc << 1) & 0x7FFF;
        if feedback {
            crc ^= 0x4599;
        }
    }
    crc
}

/// A standard CAN 2.0A frame. Constructors compute the CRC so the frame
/// invariants hold; [`CanFrame::from_parts`] builds unvalidated frames (the
/// codec rejects them at encode time) for fault-injection work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanFrame {
    id: CanId,
    rtr: bool,
    ide: bool,
    r0: bool,
    dlc: u8,
    data: [u8; 8],
    crc: u16,
}

impl CanFrame {
    /// Data frame carrying `data` (up to 8 bytes).
    pub fn new(id: CanId, data: &[u8]) -> Result<Self, FrameError> {
        if data.len() > 8 {
            return Err(FrameError::DataLength(data.len()));
        }
        let mut bytes = [0u8; 8];
        bytes[..data.len()].copy_from_slice(data);
        let mut frame = CanFrame {
            id,
            rtr: false,
            ide: false,
            r0: false,
            dlc: data.len() as u8,
            data: bytes,
            crc: 0,
        };
        frame.crc = frame.compute_crc();
        Ok(frame)
    }

    /// Remote frame: requests `dlc` bytes and carries no Data field.
    pub fn remote(id: CanId, dlc: u8) -> Result<Self, FrameError> {
        if dlc > 8 {
            return Err(FrameError::DlcRange(dlc));
        }
        let mut frame = CanFrame {
            id,
            rtr: true,
            ide: false,
            r0: false,
            dlc,
            data: [0; 8],
            crc: 0,
        };
        frame.crc = frame.compute_crc();
        Ok(frame)
    }

    /// Unvalidated constructor; pair with [`encode_frame`]'s invariant checks.
    pub fn from_parts(
        id: CanId,
        rtr: bool,
        ide: bool,
        r0: bool,
        dlc: u8,
        data: [u8; 8],
        crc: u16,
    ) -> Self {
        CanFrame { id, rtr, ide, r0, dlc, data, crc }
    }

    /// Same frame with a replaced Data field and a recomputed CRC (the
    /// link layer cannot tell a well-formed tampered frame from an honest
    /// one; only the MAC can).
    pub fn with_data(&self, data: &[u8]) -> Result<Self, FrameError> {
        let mut frame = Self::new(self.id, data)?;
        frame.rtr = self.rtr;
        frame.ide = self.ide;
        frame.r0 = self.r0;
        frame.crc = frame.compute_crc();
        Ok(frame)
    }

    pub fn id(&self) -> CanId {
        self.id
    }

    pub fn rtr(&self) -> bool {
        self.rtr
    }

    pub fn ide(&self) -> bool {
        self.ide
    }

    pub fn r0(&self) -> bool {
        self.r0
    }

    pub fn dlc(&self) -> u8 {
        self.dlc
    }

    /// The Data field (empty for remote frames).
    pub fn data(&self) -> &[u8] {
        if self.rtr {
            &[]
        } else {
            &self.data[..self.dlc as usize]
        }
    }

    pub fn crc(&self) -> u16 {
        self.crc
    }

    /// CRC over SOF..Data as encoded (before stuffing).
    pub fn compute_crc(&self) -> u16 {
        let mut bits = BitString::new();
        self.push_header_and_data(&mut bits);
        crc15(&bits)
    }

    fn push_header_and_data(&self, bits: &mut BitString) {
        bits.push(false); // SOF, dominant
        bits.push_value(u64::from(self.id.raw()), 11);
        bits.push(self.rtr);
        bits.push(self.ide);
        bits.push(self.r0);
        bits.push_value(u64::from(self.dlc), 4);
        for &byte in self.data() {
            bits.push_value(u64::from(byte), 8);
        }
    }

    fn validate(&self) -> Result<(), FrameError> {
        if self.dlc > 8 {
            return Err(FrameError::DlcRange(self.dlc));
        }
        let computed = self.compute_crc();
        if self.crc != computed {
            return Err(FrameError::CrcInvariant { stored: self.crc, computed });
        }
        Ok(())
    }
}

const EOF_BITS: usize = 7;

/// Encode to wire bits: header, data and CRC stuffed, then the unstuffed
/// CRC delimiter, ACK slot (recessive), ACK delimiter and EOF.
pub fn encode_frame(frame: &CanFrame) -> Result<BitString, FrameError> {
    frame.validate()?;

    let mut logical = BitString::new();
    frame.push_header_and_data(&mut logical);
    logical.push_value(u64::from(frame.crc), 15);

    let mut wire = BitString::new();
    let mut run_value = true;
    let mut run_len = 0u8;
    for &bit in logical.as_slice() {
        wire.push(bit);
        if bit == run_value {
            run_len += 1;
        } else {
            run_value = bit;
            run_len = 1;
        }
        if run_len == 5 {
            wire.push(!bit);
            run_value = !bit;
            run_len = 1;
        }
    }

    wire.push(true); // CRC delimiter
    wire.push(true); // ACK slot, recessive from the transmitter
    wire.push(true); // ACK delimiter
    for _ in 0..EOF_BITS {
        wire.push(true);
    }
    Ok(wire)
}

/// Cursor that removes stuff bits while tracking raw runs.
struct Destuffer<'a> {
    raw: &'a [bool],
    pos: usize,
    run_value: bool,
    run_len: u8,
}

impl<'a> Destuffer<'a> {
    fn new(raw: &'a [bool]) -> Self {
        Destuffer { raw, pos: 0, run_value: true, run_len: 0 }
    }

    fn next_raw(&mut self) -> Result<bool, FrameError> {
        let bit = *self.raw.get(self.pos).ok_or(FrameError::Truncated)?;
        self.pos += 1;
        Ok(bit)
    }

    /// Next logical bit of the stuffed region.
    fn next_logical(&mut self) -> Result<bool, FrameError> {
        if self.run_len == 5 {
            self.consume_stuff_bit()?;
        }
        let bit = self.next_raw()?;
        if bit == self.run_value {
            self.run_len += 1;
        } else {
            self.run_value = bit;
            self.run_len = 1;
        }
        Ok(bit)
    }

    fn consume_stuff_bit(&mut self) -> Result<(), FrameError> {
        let pos = self.pos;
        let stuff = self.next_raw()?;
        if stuff == self.run_value {
            return Err(FrameError::StuffViolation { pos });
        }
        self.run_value = stuff;
        self.run_len = 1;
        Ok(())
    }

    fn take_value(&mut self, width: u32) -> Result<u16, FrameError> {
        let mut v = 0u16;
        for _ in 0..width {
            v = (v << 1) | u16::from(self.next_logical()?);
        }
        Ok(v)
    }

    /// The encoder emits a stuff bit even when the run of five ends the
    /// stuffed region; consume it so the delimiter lines up.
    fn finish_region(&mut self) -> Result<usize, FrameError> {
        if self.run_len == 5 {
            self.consume_stuff_bit()?;
        }
        Ok(self.pos)
    }
}

/// Decode wire bits: destuff, parse fields, verify CRC and the fixed-form
/// trailer. Stuffing violations, CRC mismatches and truncated input are
/// reported distinctly.
pub fn decode_frame(bits: &BitString) -> Result<CanFrame, FrameError> {
    let raw = bits.as_slice();
    let mut cursor = Destuffer::new(raw);
    let mut logical = BitString::new();
    let read = |cursor: &mut Destuffer<'_>, logical: &mut BitString, width: u32| {
        let mut v: u16 = 0;
        for _ in 0..width {
            let bit = cursor.next_logical()?;
            logical.push(bit);
            v = (v << 1) | u16::from(bit);
        }
        Ok::<u16, FrameError>(v)
    };

    if read(&mut cursor, &mut logical, 1)? != 0 {
        return Err(FrameError::Form("start of frame must be dominant"));
    }
    let id = CanId::new(read(&mut cursor, &mut logical, 11)?)?;
    let rtr = read(&mut cursor, &mut logical, 1)? == 1;
    let ide = read(&mut cursor, &mut logical, 1)? == 1;
    let r0 = read(&mut cursor, &mut logical, 1)? == 1;
    let dlc = read(&mut cursor, &mut logical, 4)? as u8;
    if ide {
        return Err(FrameError::Form("extended identifiers are not supported"));
    }
    if dlc > 8 {
        return Err(FrameError::DlcRange(dlc));
    }

    let mut data = [0u8; 8];
    if !rtr {
        for byte in data.iter_mut().take(dlc as usize) {
            *byte = read(&mut cursor, &mut logical, 8)? as u8;
        }
    }

    let computed = crc15(&logical);
    let received = cursor.take_value(15)?;
    let after_stuffed = cursor.finish_region()?;

    let trailer = &raw[after_stuffed..];
    // CRC delimiter, ACK slot (either level), ACK delimiter, EOF
    if trailer.len() < 3 + EOF_BITS {
        return Err(FrameError::Truncated);
    }
    if trailer.len() > 3 + EOF_BITS {
        return Err(FrameError::Form("trailing bits after end of frame"));
    }
    if !trailer[0] {
        return Err(FrameError::Form("CRC delimiter must be recessive"));
    }
    if !trailer[2] {
        return Err(FrameError::Form("ACK delimiter must be recessive"));
    }
    if trailer[3..].iter().any(|&b| !b) {
        return Err(FrameError::Form("EOF bits must be recessive"));
    }

    if received != computed {
        return Err(FrameError::CrcMismatch { received, computed });
    }

    Ok(CanFrame::from_parts(id, rtr, ide, r0, dlc, data, received))
}
