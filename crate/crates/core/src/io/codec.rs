//! Little-endian byte encoding shared by messages and artifact files.

use byteorder::{ByteOrder, LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use std::io::Cursor;

use crate::centers::PartialCenter;
use crate::error::{Error, Result};
use crate::model::{Bucket, BucketId, CenterRepr, CentralVector, SeedGroup};
use std::collections::BTreeMap;

#[derive(Default, Debug)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Encoder::default()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.write_u16::<LE>(v).unwrap();
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.write_u32::<LE>(v).unwrap();
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.write_u64::<LE>(v).unwrap();
    }

    pub fn i128(&mut self, v: i128) {
        self.buf.write_i128::<LE>(v).unwrap();
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.write_f32::<LE>(v).unwrap();
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.write_f64::<LE>(v).unwrap();
    }

    pub fn len_prefix(&mut self, n: usize) {
        self.u64(n as u64);
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.len_prefix(b.len());
        self.buf.extend_from_slice(b);
    }

    pub fn u32s(&mut self, v: &[u32]) {
        self.len_prefix(v.len());
        let start = self.buf.len();
        self.buf.resize(start + 4 * v.len(), 0);
        LE::write_u32_into(v, &mut self.buf[start..]);
    }

    pub fn u64s(&mut self, v: &[u64]) {
        self.len_prefix(v.len());
        for &x in v {
            self.u64(x);
        }
    }

    pub fn f32s(&mut self, v: &[f32]) {
        self.len_prefix(v.len());
        for &x in v {
            self.f32(x);
        }
    }

    pub fn f64s(&mut self, v: &[f64]) {
        self.len_prefix(v.len());
        for &x in v {
            self.f64(x);
        }
    }

    pub fn bucket(&mut self, b: &Bucket) {
        self.u32(b.id.table);
        self.u32(b.id.slot);
        self.u32s(&b.members);
    }

    pub fn buckets(&mut self, bs: &[Bucket]) {
        self.len_prefix(bs.len());
        for b in bs {
            self.bucket(b);
        }
    }

    pub fn seed_groups(&mut self, gs: &[SeedGroup]) {
        self.len_prefix(gs.len());
        for g in gs {
            self.u32s(g.members());
        }
    }

    pub fn center(&mut self, c: &CentralVector) {
        self.u64(c.weight);
        match &c.repr {
            CenterRepr::Centroid(v) => {
                self.u8(0);
                self.f32s(v);
            }
            CenterRepr::Mode(v) => {
                self.u8(1);
                self.u32s(v);
            }
            CenterRepr::SparseMode(v) => {
                self.u8(2);
                self.u32s(v);
            }
        }
    }

    pub fn centers(&mut self, cs: &[CentralVector]) {
        self.len_prefix(cs.len());
        for c in cs {
            self.center(c);
        }
    }

    pub fn partial_center(&mut self, p: &PartialCenter) {
        match p {
            PartialCenter::Sum { sums, count } => {
                self.u8(0);
                self.u64(*count);
                self.len_prefix(sums.len());
                for &s in sums {
                    self.i128(s);
                }
            }
            PartialCenter::Counts { counts, count } => {
                self.u8(1);
                self.u64(*count);
                self.len_prefix(counts.len());
                for c in counts {
                    self.count_map(c);
                }
            }
            PartialCenter::Presence { counts, count } => {
                self.u8(2);
                self.u64(*count);
                self.count_map(counts);
            }
        }
    }

    fn count_map(&mut self, m: &BTreeMap<u32, u64>) {
        self.len_prefix(m.len());
        for (&k, &v) in m {
            self.u32(k);
            self.u64(v);
        }
    }
}

/// Reads what [`Encoder`] wrote. Errors carry the byte offset, shifted by
/// `base` when the slice sits inside a larger file.
pub struct Decoder<'a> {
    cur: Cursor<&'a [u8]>,
    base: u64,
}

impl<'a> Decoder<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Decoder::with_base(bytes, 0)
    }

    pub fn with_base(bytes: &'a [u8], base: u64) -> Self {
        Decoder {
            cur: Cursor::new(bytes),
            base,
        }
    }

    pub fn offset(&self) -> u64 {
        self.base + self.cur.position()
    }

    pub fn remaining(&self) -> usize {
        self.cur.get_ref().len() - self.cur.position() as usize
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        Error::at_offset(self.offset(), msg)
    }

    fn read<T>(
        &mut self,
        f: impl FnOnce(&mut Cursor<&'a [u8]>) -> std::io::Result<T>,
    ) -> Result<T> {
        let at = self.offset();
        f(&mut self.cur).map_err(|_| Error::at_offset(at, "unexpected end of data"))
    }

    pub fn finish(self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(self.error(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        self.read(|c| c.read_u8())
    }

    pub fn u16(&mut self) -> Result<u16> {
        self.read(|c| c.read_u16::<LE>())
    }

    pub fn u32(&mut self) -> Result<u32> {
        self.read(|c| c.read_u32::<LE>())
    }

    pub fn u64(&mut self) -> Result<u64> {
        self.read(|c| c.read_u64::<LE>())
    }

    pub fn i128(&mut self) -> Result<i128> {
        self.read(|c| c.read_i128::<LE>())
    }

    pub fn f32(&mut self) -> Result<f32> {
        self.read(|c| c.read_f32::<LE>())
    }

    pub fn f64(&mut self) -> Result<f64> {
        self.read(|c| c.read_f64::<LE>())
    }

    /// A length prefix for items of `item_size` bytes, checked against the
    /// bytes left.
    pub fn len_prefix(&mut self, item_size: usize) -> Result<usize> {
        let at = self.offset();
        let n = self.u64()?;
        let need = n.checked_mul(item_size as u64);
        match need {
            Some(b) if b <= self.remaining() as u64 => Ok(n as usize),
            _ => Err(Error::at_offset(
                at,
                format!("length {n} runs past the end of data"),
            )),
        }
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.len_prefix(1)?;
        let pos = self.cur.position() as usize;
        let slice: &'a [u8] = self.cur.get_ref();
        self.cur.set_position((pos + n) as u64);
        Ok(&slice[pos..pos + n])
    }

    pub fn u32s(&mut self) -> Result<Vec<u32>> {
        let n = self.len_prefix(4)?;
        let mut v = vec![0u32; n];
        self.read(|c| c.read_u32_into::<LE>(&mut v))?;
        Ok(v)
    }

    pub fn u64s(&mut self) -> Result<Vec<u64>> {
        let n = self.len_prefix(8)?;
        (0..n).map(|_| self.u64()).collect()
    }

    pub fn f32s(&mut self) -> Result<Vec<f32>> {
        let n = self.len_prefix(4)?;
        (0..n).map(|_| self.f32()).collect()
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len_prefix(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn bucket(&mut self) -> Result<Bucket> {
        let at = self.offset();
        let table = self.u32()?;
        let slot = self.u32()?;
        let members = self.u32s()?;
        if members.is_empty() || members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::at_offset(
                at,
                "bucket members must be non-empty and strictly increasing",
            ));
        }
        Ok(Bucket {
            id: BucketId { table, slot },
            members,
        })
    }

    pub fn buckets(&mut self) -> Result<Vec<Bucket>> {
        let n = self.len_prefix(16)?;
        (0..n).map(|_| self.bucket()).collect()
    }

    pub fn seed_groups(&mut self) -> Result<Vec<SeedGroup>> {
        let n = self.len_prefix(8)?;
        (0..n)
            .map(|_| {
                let at = self.offset();
                let m = self.u32s()?;
                if m.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::at_offset(
                        at,
                        "seed group members must be strictly increasing",
                    ));
                }
                SeedGroup::new(m).map_err(|e| Error::at_offset(at, e.to_string()))
            })
            .collect()
    }

    pub fn center(&mut self) -> Result<CentralVector> {
        let weight = self.u64()?;
        let at = self.offset();
        let repr = match self.u8()? {
            0 => CenterRepr::Centroid(self.f32s()?),
            1 => CenterRepr::Mode(self.u32s()?),
            2 => CenterRepr::SparseMode(self.u32s()?),
            t => return Err(Error::at_offset(at, format!("unknown center tag {t}"))),
        };
        Ok(CentralVector { repr, weight })
    }

    pub fn centers(&mut self) -> Result<Vec<CentralVector>> {
        let n = self.len_prefix(17)?;
        (0..n).map(|_| self.center()).collect()
    }

    pub fn partial_center(&mut self) -> Result<PartialCenter> {
        let at = self.offset();
        let tag = self.u8()?;
        let count = self.u64()?;
        Ok(match tag {
            0 => {
                let n = self.len_prefix(16)?;
                let sums = (0..n).map(|_| self.i128()).collect::<Result<_>>()?;
                PartialCenter::Sum { sums, count }
            }
            1 => {
                let n = self.len_prefix(8)?;
                let counts = (0..n).map(|_| self.count_map()).collect::<Result<_>>()?;
                PartialCenter::Counts { counts, count }
            }
            2 => PartialCenter::Presence {
                counts: self.count_map()?,
                count,
            },
            t => {
                return Err(Error::at_offset(
                    at,
                    format!("unknown partial center tag {t}"),
                ))
            }
        })
    }

    fn count_map(&mut self) -> Result<BTreeMap<u32, u64>> {
        let n = self.len_prefix(12)?;
        (0..n).map(|_| Ok((self.u32()?, self.u64()?))).collect()
    }
}
