//! Wire messages: `u8` kind, `u32` sender, length-prefixed payload.

use crate::centers::PartialCenter;
use crate::error::{Error, Result};
use crate::hashing::Signature;
use crate::io::codec::{Decoder, Encoder};
use crate::model::{DataId, SeedGroup};
use crate::transform::TableFragment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageKind {
    BucketShard = 0,
    SeedGroups = 1,
    LocalCenters = 2,
    Assignments = 3,
}

impl MessageKind {
    pub const COUNT: usize = 4;
    pub const ALL: [MessageKind; 4] = [
        MessageKind::BucketShard,
        MessageKind::SeedGroups,
        MessageKind::LocalCenters,
        MessageKind::Assignments,
    ];

    fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            MessageKind::BucketShard => "bucket_shard",
            MessageKind::SeedGroups => "seed_groups",
            MessageKind::LocalCenters => "local_centers",
            MessageKind::Assignments => "assignments",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageKind,
    pub sender: u32,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn new(kind: MessageKind, sender: usize, payload: Vec<u8>) -> Self {
        Message {
            kind,
            sender: sender as u32,
            payload,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.u8(self.kind as u8);
        e.u32(self.sender);
        e.bytes(&self.payload);
        e.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut d = Decoder::new(bytes);
        let kind = d.u8()?;
        let kind = MessageKind::from_u8(kind)
            .ok_or_else(|| Error::at_offset(0, format!("unknown message kind {kind}")))?;
        let sender = d.u32()?;
        let payload = d.bytes()?.to_vec();
        d.finish()?;
        Ok(Message {
            kind,
            sender,
            payload,
        })
    }
}

pub fn encode_fragment(f: &TableFragment) -> Vec<u8> {
    let mut e = Encoder::new();
    match f {
        TableFragment::Ranked { table, entries } => {
            e.u8(0);
            e.u32(*table);
            e.len_prefix(entries.len());
            for &(v, id) in entries {
                e.f64(v);
                e.u32(id);
            }
        }
        TableFragment::Keyed { table, groups } => {
            e.u8(1);
            e.u32(*table);
            e.len_prefix(groups.len());
            for (sig, ids) in groups {
                e.u64s(sig);
                e.u32s(ids);
            }
        }
    }
    e.finish()
}

pub fn decode_fragment(bytes: &[u8]) -> Result<TableFragment> {
    let mut d = Decoder::new(bytes);
    let at = d.offset();
    let tag = d.u8()?;
    let table = d.u32()?;
    let f = match tag {
        0 => {
            let n = d.len_prefix(12)?;
            let entries = (0..n)
                .map(|_| Ok((d.f64()?, d.u32()? as DataId)))
                .collect::<Result<_>>()?;
            TableFragment::Ranked { table, entries }
        }
        1 => {
            let n = d.len_prefix(16)?;
            let groups = (0..n)
                .map(|_| Ok((d.u64s()? as Signature, d.u32s()?)))
                .collect::<Result<_>>()?;
            TableFragment::Keyed { table, groups }
        }
        t => return Err(Error::at_offset(at, format!("unknown fragment tag {t}"))),
    };
    d.finish()?;
    Ok(f)
}

pub fn encode_groups(groups: &[SeedGroup]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.seed_groups(groups);
    e.finish()
}

pub fn decode_groups(bytes: &[u8]) -> Result<Vec<SeedGroup>> {
    let mut d = Decoder::new(bytes);
    let g = d.seed_groups()?;
    d.finish()?;
    Ok(g)
}

pub fn encode_partials(parts: &[PartialCenter]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.len_prefix(parts.len());
    for p in parts {
        e.partial_center(p);
    }
    e.finish()
}

pub fn decode_partials(bytes: &[u8]) -> Result<Vec<PartialCenter>> {
    let mut d = Decoder::new(bytes);
    let n = d.len_prefix(9)?;
    let parts = (0..n).map(|_| d.partial_center()).collect::<Result<_>>()?;
    d.finish()?;
    Ok(parts)
}

pub fn encode_assignments(ids: &[u32], dists: &[f64]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.u32s(ids);
    e.f64s(dists);
    e.finish()
}

pub fn decode_assignments(bytes: &[u8]) -> Result<(Vec<u32>, Vec<f64>)> {
    let mut d = Decoder::new(bytes);
    let ids = d.u32s()?;
    let dists = d.f64s()?;
    d.finish()?;
    if ids.len() != dists.len() {
        return Err(Error::at_offset(0, "assignment and distance counts differ"));
    }
    Ok((ids, dists))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn messages_round_trip() {
        let m = Message::new(MessageKind::LocalCenters, 3, vec![1, 2, 3]);
        assert_eq!(Message::decode(&m.encode()).unwrap(), m);
        assert!(Message::decode(&m.encode()[..6]).is_err());
        let mut bad = m.encode();
        bad[0] = 9;
        assert!(Message::decode(&bad).is_err());
    }

    #[test]
    fn payloads_round_trip() {
        let f = TableFragment::Ranked {
            table: 2,
            entries: vec![(0.5, 1), (-1.0, 7)],
        };
        assert_eq!(decode_fragment(&encode_fragment(&f)).unwrap(), f);
        let f = TableFragment::Keyed {
            table: 1,
            groups: vec![(vec![4, 5, 6], vec![1, 2])],
        };
        assert_eq!(decode_fragment(&encode_fragment(&f)).unwrap(), f);
        let parts = vec![
            PartialCenter::Sum {
                sums: vec![-(1 << 80), 3],
                count: 2,
            },
            PartialCenter::Counts {
                counts: vec![BTreeMap::from([(1, 2), (4, 1)])],
                count: 3,
            },
            PartialCenter::Presence {
                counts: BTreeMap::from([(9, 1)]),
                count: 1,
            },
        ];
        assert_eq!(decode_partials(&encode_partials(&parts)).unwrap(), parts);
        let (ids, d) = decode_assignments(&encode_assignments(&[1, 0], &[0.5, 2.0])).unwrap();
        assert_eq!((ids, d), (vec![1, 0], vec![0.5, 2.0]));
    }
}
