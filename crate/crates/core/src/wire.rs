//! Versioned little-endian binary records ("EDS1").
//!
//! Every record starts with the magic, a format version, and a kind tag;
//! nested records are length-prefixed. Compressed strings serialize only
//! the forward grammar (the reverse side is re-derived on load), with all
//! derived per-node data recomputed and validated during import.

use crate::field::Fp;
use crate::fprint::FpBasis;
use crate::grammar::{CompressedString, NodeSpec};
use crate::greedy::{Flavor, GrEncoding};
use crate::masked::{MaskedPair, SegPair};
use crate::sketch::{
    AmplifiedSketch, EditSketch, MismatchSketch, PrefixSketch, SketchBody, SketchParams,
};
use crate::sym::Sym;
use alloc::vec::Vec;

pub const MAGIC: [u8; 4] = *b"EDS1";
pub const VERSION: u16 = 1;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RecordKind {
    CompressedString = 1,
    MaskedPair = 2,
    Encoding = 3,
    EditSketch = 4,
    AmplifiedSketch = 5,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WireError {
    BadMagic,
    BadVersion,
    WrongKind,
    Truncated,
    Malformed,
}

pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(kind: RecordKind) -> Writer {
        let mut buf = Vec::new();
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(kind as u8);
        Writer { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn bytes(&mut self, v: &[u8]) {
        self.u64(v.len() as u64);
        self.buf.extend_from_slice(v);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8], kind: RecordKind) -> Result<Reader<'a>, WireError> {
        let mut r = Reader { buf, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(WireError::BadMagic);
        }
        if r.u16()? != VERSION {
            return Err(WireError::BadVersion);
        }
        if r.u8()? != kind as u8 {
            return Err(WireError::WrongKind);
        }
        Ok(r)
    }

    /// Peeks the kind tag of a record without consuming it.
    pub fn peek_kind(buf: &[u8]) -> Result<u8, WireError> {
        if buf.len() < 7 || buf[0..4] != MAGIC {
            return Err(WireError::BadMagic);
        }
        Ok(buf[6])
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.at + n > self.buf.len() {
            return Err(WireError::Truncated);
        }
        let out = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64, WireError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bytes(&mut self) -> Result<&'a [u8], WireError> {
        let n = self.u64()? as usize;
        self.take(n)
    }

    pub fn done(&self) -> bool {
        self.at == self.buf.len()
    }
}

// ---------------------------------------------------------------------
// Compressed strings and encodings
// ---------------------------------------------------------------------

fn put_compressed(w: &mut Writer, cs: &CompressedString) {
    let (nodes, root) = cs.export_fwd();
    w.u64(cs.basis().base().raw());
    w.u64(cs.len());
    w.u32(nodes.len() as u32);
    for n in nodes {
        match n {
            NodeSpec::Term(s) => {
                w.u8(0);
                w.u64(s.code());
            }
            NodeSpec::Bin(a, b) => {
                w.u8(1);
                w.u32(a);
                w.u32(b);
            }
            NodeSpec::Run(u, e) => {
                w.u8(2);
                w.u32(u);
                w.u32(e);
            }
        }
    }
    match root {
        None => w.u8(0),
        Some(r) => {
            w.u8(1);
            w.u32(r);
        }
    }
}

fn get_compressed(r: &mut Reader) -> Result<CompressedString, WireError> {
    let basis = FpBasis::from_raw_base(r.u64()?);
    let len = r.u64()?;
    let count = r.u32()? as usize;
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        nodes.push(match r.u8()? {
            0 => NodeSpec::Term(sym_from_code(r.u64()?)),
            1 => NodeSpec::Bin(r.u32()?, r.u32()?),
            2 => NodeSpec::Run(r.u32()?, r.u32()?),
            _ => return Err(WireError::Malformed),
        });
    }
    let root = match r.u8()? {
        0 => None,
        1 => Some(r.u32()?),
        _ => return Err(WireError::Malformed),
    };
    let cs = CompressedString::import_fwd(basis, &nodes, root).ok_or(WireError::Malformed)?;
    if cs.len() != len {
        return Err(WireError::Malformed);
    }
    Ok(cs)
}

fn sym_from_code(code: u64) -> Sym {
    if code == Sym::HASH.code() {
        Sym::HASH
    } else if code == Sym::S1.code() {
        Sym::S1
    } else if code == Sym::S2.code() {
        Sym::S2
    } else if code == Sym::S3.code() {
        Sym::S3
    } else if code == Sym::PAD.code() {
        Sym::PAD
    } else if code < crate::sym::MAX_CHAR as u64 {
        Sym::chr(code as u32)
    } else {
        Sym::dummy(code >> 32)
    }
}

pub fn encode_compressed_string(cs: &CompressedString) -> Vec<u8> {
    let mut w = Writer::new(RecordKind::CompressedString);
    put_compressed(&mut w, cs);
    w.finish()
}

pub fn decode_compressed_string(buf: &[u8]) -> Result<CompressedString, WireError> {
    let mut r = Reader::new(buf, RecordKind::CompressedString)?;
    let cs = get_compressed(&mut r)?;
    if !r.done() {
        return Err(WireError::Malformed);
    }
    Ok(cs)
}

fn put_masked(w: &mut Writer, e: &MaskedPair) {
    put_compressed(w, e.pair_string());
    w.u64(e.x_len());
    w.u64(e.y_len());
    w.u32(e.seg_pairs().len() as u32);
    for p in e.seg_pairs() {
        w.u64(p.x);
        w.u64(p.y);
        w.u64(p.len);
    }
}

fn get_masked(r: &mut Reader) -> Result<MaskedPair, WireError> {
    let pair = get_compressed(r)?;
    let x_len = r.u64()?;
    let y_len = r.u64()?;
    if x_len + y_len != pair.len() {
        return Err(WireError::Malformed);
    }
    let count = r.u32()? as usize;
    let mut segs = Vec::with_capacity(count);
    for _ in 0..count {
        let (x, y, len) = (r.u64()?, r.u64()?, r.u64()?);
        if len == 0 || x == 0 || y == 0 || x + len > x_len + 1 || y + len > y_len + 1 {
            return Err(WireError::Malformed);
        }
        segs.push(SegPair { x, y, len });
    }
    Ok(MaskedPair::from_parts(pair, x_len, y_len, segs))
}

pub fn encode_masked_pair(e: &MaskedPair) -> Vec<u8> {
    let mut w = Writer::new(RecordKind::MaskedPair);
    put_masked(&mut w, e);
    w.finish()
}

pub fn decode_masked_pair(buf: &[u8]) -> Result<MaskedPair, WireError> {
    let mut r = Reader::new(buf, RecordKind::MaskedPair)?;
    let e = get_masked(&mut r)?;
    if !r.done() {
        return Err(WireError::Malformed);
    }
    Ok(e)
}

fn put_encoding(w: &mut Writer, e: &GrEncoding) {
    w.u8(match e.flavor {
        Flavor::Greedy => 0,
        Flavor::Quasi => 1,
    });
    w.u32(e.threshold);
    match &e.payload {
        None => w.u8(0),
        Some(p) => {
            w.u8(1);
            put_masked(w, p);
        }
    }
}

fn get_encoding(r: &mut Reader) -> Result<GrEncoding, WireError> {
    let flavor = match r.u8()? {
        0 => Flavor::Greedy,
        1 => Flavor::Quasi,
        _ => return Err(WireError::Malformed),
    };
    let threshold = r.u32()?;
    let payload = match r.u8()? {
        0 => None,
        1 => Some(get_masked(r)?),
        _ => return Err(WireError::Malformed),
    };
    Ok(GrEncoding { flavor, threshold, payload })
}

pub fn encode_encoding(e: &GrEncoding) -> Vec<u8> {
    let mut w = Writer::new(RecordKind::Encoding);
    put_encoding(&mut w, e);
    w.finish()
}

pub fn decode_encoding(buf: &[u8]) -> Result<GrEncoding, WireError> {
    let mut r = Reader::new(buf, RecordKind::Encoding)?;
    let e = get_encoding(&mut r)?;
    if !r.done() {
        return Err(WireError::Malformed);
    }
    Ok(e)
}

// ---------------------------------------------------------------------
// Sketches
// ---------------------------------------------------------------------

fn put_mismatch(w: &mut Writer, s: &MismatchSketch) {
    w.u64(s.len);
    w.u64(s.capacity);
    for v in s.mixer.salt {
        w.u64(v);
    }
    w.u32(s.cells.len() as u32);
    for c in &s.cells {
        w.i64(c.count);
        w.u64(c.key_sum.raw());
        w.u64(c.pd_sum.raw());
        w.u64(c.check_sum.raw());
        for t in c.words {
            w.u64(t.raw());
        }
    }
}

fn get_mismatch(r: &mut Reader) -> Result<MismatchSketch, WireError> {
    let len = r.u64()?;
    let capacity = r.u64()?;
    let mut salt = [0u64; 4];
    for v in &mut salt {
        *v = r.u64()?;
    }
    let count = r.u32()? as usize;
    let mut cells = Vec::with_capacity(count);
    for _ in 0..count {
        let mut cell = crate::sketch::Cell {
            count: r.i64()?,
            key_sum: Fp::new(r.u64()?),
            pd_sum: Fp::new(r.u64()?),
            check_sum: Fp::new(r.u64()?),
            words: Default::default(),
        };
        for t in cell.words.iter_mut() {
            *t = Fp::new(r.u64()?);
        }
        cells.push(cell);
    }
    Ok(MismatchSketch { len, capacity, cells, mixer: crate::sketch::Mixer { salt } })
}

fn put_prefix(w: &mut Writer, s: &PrefixSketch) {
    w.u64(s.leaves);
    w.u64(s.padded);
    w.u64(s.total_weight);
    w.u64(s.basis.base().raw());
    put_mismatch(w, &s.sketch);
}

fn get_prefix(r: &mut Reader) -> Result<PrefixSketch, WireError> {
    let leaves = r.u64()?;
    let padded = r.u64()?;
    let total_weight = r.u64()?;
    let basis = FpBasis::from_raw_base(r.u64()?);
    let sketch = get_mismatch(r)?;
    if padded < leaves || !padded.is_power_of_two() {
        return Err(WireError::Malformed);
    }
    Ok(PrefixSketch { leaves, padded, total_weight, sketch, basis })
}

fn put_params(w: &mut Writer, p: &SketchParams) {
    w.u64(p.n);
    w.u32(p.k);
    w.bytes(&p.seed);
    w.u64(p.lane);
}

fn get_params(r: &mut Reader) -> Result<SketchParams, WireError> {
    let n = r.u64()?;
    let k = r.u32()?;
    let seed_b = r.bytes()?;
    if seed_b.len() != 32 {
        return Err(WireError::Malformed);
    }
    let mut seed = [0u8; 32];
    seed.copy_from_slice(seed_b);
    let lane = r.u64()?;
    Ok(SketchParams { n, k, seed, lane })
}

fn put_edit_sketch(w: &mut Writer, s: &EditSketch) {
    put_params(w, &s.params);
    w.u64(s.len);
    match &s.body {
        SketchBody::Verbatim { syms } => {
            w.u8(0);
            w.u64(syms.len() as u64);
            for c in syms {
                w.u64(c.code());
            }
        }
        SketchBody::Full { total_pi, skh, skp, walk_forced } => {
            w.u8(1);
            w.u64(*total_pi);
            w.u8(u8::from(*walk_forced));
            put_mismatch(w, skh);
            put_prefix(w, skp);
        }
    }
}

fn get_edit_sketch(r: &mut Reader) -> Result<EditSketch, WireError> {
    let params = get_params(r)?;
    let len = r.u64()?;
    let body = match r.u8()? {
        0 => {
            let n = r.u64()? as usize;
            let mut syms = Vec::with_capacity(n);
            for _ in 0..n {
                syms.push(sym_from_code(r.u64()?));
            }
            SketchBody::Verbatim { syms }
        }
        1 => {
            let total_pi = r.u64()?;
            let walk_forced = r.u8()? != 0;
            let skh = get_mismatch(r)?;
            let skp = get_prefix(r)?;
            SketchBody::Full { total_pi, skh, skp, walk_forced }
        }
        _ => return Err(WireError::Malformed),
    };
    Ok(EditSketch { params, len, body })
}

pub fn encode_edit_sketch(s: &EditSketch) -> Vec<u8> {
    let mut w = Writer::new(RecordKind::EditSketch);
    put_edit_sketch(&mut w, s);
    w.finish()
}

pub fn decode_edit_sketch(buf: &[u8]) -> Result<EditSketch, WireError> {
    let mut r = Reader::new(buf, RecordKind::EditSketch)?;
    let s = get_edit_sketch(&mut r)?;
    if !r.done() {
        return Err(WireError::Malformed);
    }
    Ok(s)
}

pub fn encode_amplified_sketch(s: &AmplifiedSketch) -> Vec<u8> {
    let mut w = Writer::new(RecordKind::AmplifiedSketch);
    w.u64(s.n);
    w.u32(s.k);
    w.bytes(&s.seed);
    w.u32(s.delta_log2);
    w.u32(s.reps.len() as u32);
    for (a, b) in &s.reps {
        put_edit_sketch(&mut w, a);
        put_edit_sketch(&mut w, b);
    }
    w.finish()
}

pub fn decode_amplified_sketch(buf: &[u8]) -> Result<AmplifiedSketch, WireError> {
    let mut r = Reader::new(buf, RecordKind::AmplifiedSketch)?;
    let n = r.u64()?;
    let k = r.u32()?;
    let seed_b = r.bytes()?;
    if seed_b.len() != 32 {
        return Err(WireError::Malformed);
    }
    let mut seed = [0u8; 32];
    seed.copy_from_slice(seed_b);
    let delta_log2 = r.u32()?;
    let count = r.u32()? as usize;
    let mut reps = Vec::with_capacity(count);
    for _ in 0..count {
        let a = get_edit_sketch(&mut r)?;
        let b = get_edit_sketch(&mut r)?;
        reps.push((a, b));
    }
    if !r.done() {
        return Err(WireError::Malformed);
    }
    Ok(AmplifiedSketch { n, k, seed, delta_log2, reps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::qgr_short;
    use crate::sketch::{ske_build, skq_build, skq_decode, SkqOutcome};
    use crate::sym::str_syms;
    use rand::{Rng, SeedableRng};

    #[test]
    fn compressed_string_round_trip() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.gen_range(0..200);
            let s: Vec<Sym> = (0..n).map(|_| Sym::chr(rng.gen_range(0..3))).collect();
            let cs = CompressedString::from_syms(&s, FpBasis::fixed());
            let bytes = encode_compressed_string(&cs);
            let back = decode_compressed_string(&bytes).unwrap();
            assert_eq!(back.expand(), s);
            assert_eq!(back.basis(), cs.basis());
        }
    }

    #[test]
    fn encoding_round_trip() {
        let x = str_syms("abracadabra");
        let y = str_syms("abracadabrX");
        let e = qgr_short(&x, &y, 2, FpBasis::fixed());
        let bytes = encode_encoding(&e);
        let back = decode_encoding(&bytes).unwrap();
        assert_eq!(back.flavor, e.flavor);
        assert_eq!(back.threshold, e.threshold);
        assert_eq!(back.masked_sides(), e.masked_sides());
        // Bottom encodings too.
        let b = qgr_short(&str_syms("aaaa"), &str_syms("bbbb"), 1, FpBasis::fixed());
        let back = decode_encoding(&encode_encoding(&b)).unwrap();
        assert!(back.is_bottom());
    }

    #[test]
    fn sketch_round_trip_and_decode() {
        let mut seed = [0u8; 32];
        seed[3] = 9;
        let x = str_syms("the quick brown fox jumps over the lazy dog; pack my box");
        let mut y = x.clone();
        y[10] = Sym::byte(b'Z');
        // Big enough to use the full sketch body.
        let xl: Vec<Sym> = x.iter().cycle().take(400).copied().collect();
        let mut yl = xl.clone();
        yl[200] = Sym::byte(b'Q');
        let a = skq_build(512, 2, seed, 3, &xl);
        let b = skq_build(512, 2, seed, 3, &yl);
        let ab = encode_amplified_sketch(&a);
        let bb = encode_amplified_sketch(&b);
        let a2 = decode_amplified_sketch(&ab).unwrap();
        let b2 = decode_amplified_sketch(&bb).unwrap();
        match (skq_decode(&a, &b), skq_decode(&a2, &b2)) {
            (SkqOutcome::Decoded(e1), SkqOutcome::Decoded(e2)) => {
                assert_eq!(e1.is_bottom(), e2.is_bottom());
                assert_eq!(e1.masked_sides(), e2.masked_sides());
            }
            (a, b) => panic!("decode mismatch: {a:?} vs {b:?}"),
        }
        // Determinism: same input and seed give identical bytes.
        let again = encode_amplified_sketch(&skq_build(512, 2, seed, 3, &xl));
        assert_eq!(ab, again);
        // Edit sketch record too.
        let es = ske_build(crate::sketch::SketchParams::new(300, 2, seed), &x);
        let back = decode_edit_sketch(&encode_edit_sketch(&es)).unwrap();
        assert_eq!(back.len, es.len);
        assert_eq!(back.byte_size(), es.byte_size());
    }

    #[test]
    fn corrupted_records_are_rejected() {
        let cs = CompressedString::from_syms(&str_syms("xyz"), FpBasis::fixed());
        let mut bytes = encode_compressed_string(&cs);
        assert_eq!(
            decode_compressed_string(&bytes[..5]).unwrap_err(),
            WireError::Truncated
        );
        bytes[0] = b'X';
        assert_eq!(decode_compressed_string(&bytes).unwrap_err(), WireError::BadMagic);
        let ok = encode_compressed_string(&cs);
        assert_eq!(decode_masked_pair(&ok).unwrap_err(), WireError::WrongKind);
    }
}
