//! Binary checkpoint format.
//!
//! ```text
//! magic    8 bytes  "RPRJCKPT"
//! version  u32
//! hlen     u64      header length in bytes
//! header:
//!   config   embed_dim, sentence_hidden, review_hidden, max_sentences,
//!            max_words, outputs (u32 each), dropout (f64)
//!   nlang    u32, then per language: tag, ntok u32, tokens (PAD/UNK implicit)
//!   ntensor  u32, then per tensor: name, ndim u32, dims u64.., offset u64
//! payload  f32 values, row-major, offsets relative to payload start
//! ```
//!
//! Strings are a u32 byte length followed by UTF-8. Integers and floats are
//! little-endian.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CheckpointError, Error, Result};
use crate::numcore::Tensor;
use crate::textpipe::Vocabulary;

use super::{Model, ModelConfig};

pub const MAGIC: &[u8; 8] = b"RPRJCKPT";
pub const VERSION: u32 = 1;

/// Header entry for one stored tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Clone, Debug)]
struct Parsed<'a> {
    config: ModelConfig,
    vocabs: Vec<Vocabulary>,
    tensors: Vec<TensorEntry>,
    payload: &'a [u8],
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

pub fn to_bytes(model: &Model<f32>) -> Vec<u8> {
    let c = model.config();
    let mut header = Vec::new();
    for v in [
        c.embed_dim,
        c.sentence_hidden,
        c.review_hidden,
        c.max_sentences,
        c.max_words,
        c.outputs,
    ] {
        put_u32(&mut header, v);
    }
    put_u64(&mut header, c.dropout.to_bits());
    put_u32(&mut header, model.languages().len());
    for lang in model.languages() {
        put_str(&mut header, lang.vocab.lang());
        put_u32(&mut header, lang.vocab.tokens().len());
        for tok in lang.vocab.tokens() {
            put_str(&mut header, tok);
        }
    }
    let slots = model.store().slots();
    put_u32(&mut header, slots.len());
    let mut offset = 0u64;
    for slot in slots {
        put_str(&mut header, &slot.name);
        put_u32(&mut header, slot.value.shape().len());
        for &d in slot.value.shape() {
            put_u64(&mut header, d as u64);
        }
        put_u64(&mut header, offset);
        offset += 4 * slot.value.len() as u64;
    }

    let mut out = Vec::with_capacity(20 + header.len() + offset as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u64(&mut out, header.len() as u64);
    out.extend_from_slice(&header);
    for slot in slots {
        for v in slot.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated(what))?;
        if end > self.buf.len() {
            return Err(CheckpointError::Truncated(what));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &'static str) -> Result<String, CheckpointError> {
        let len = self.u32(what)? as usize;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| CheckpointError::Header(format!("{what} is not UTF-8")))
    }
}

fn parse(bytes: &[u8]) -> Result<Parsed<'_>, CheckpointError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8, "magic").map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(CheckpointError::Version {
            found: version,
            expected: VERSION,
        });
    }
    let header_len = r.u64("header length")? as usize;
    let header = r.take(header_len, "header")?;
    let payload = &bytes[r.pos..];

    let mut h = Reader { buf: header, pos: 0 };
    let mut dims = [0usize; 6];
    for d in dims.iter_mut() {
        *d = h.u32("config")? as usize;
    }
    let config = ModelConfig {
        embed_dim: dims[0],
        sentence_hidden: dims[1],
        review_hidden: dims[2],
        max_sentences: dims[3],
        max_words: dims[4],
        outputs: dims[5],
        dropout: f64::from_bits(h.u64("config")?),
    };
    config.validate().map_err(|e| CheckpointError::Header(e.to_string()))?;

    let nlang = h.u32("language count")? as usize;
    let mut vocabs = Vec::with_capacity(nlang);
    for _ in 0..nlang {
        let lang = h.string("language tag")?;
        let ntok = h.u32("token count")? as usize;
        let tokens = (0..ntok).map(|_| h.string("token")).collect::<Result<Vec<_>, _>>()?;
        vocabs.push(Vocabulary::from_tokens(lang, tokens).map_err(|e| CheckpointError::Header(e.to_string()))?);
    }

    let ntensor = h.u32("tensor count")? as usize;
    let mut tensors = Vec::with_capacity(ntensor);
    for _ in 0..ntensor {
        let name = h.string("tensor name")?;
        let ndim = h.u32("tensor rank")? as usize;
        let shape = (0..ndim)
            .map(|_| h.u64("tensor shape").map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let offset = h.u64("tensor offset")? as usize;
        tensors.push(TensorEntry { name, shape, offset });
    }
    if h.pos != header.len() {
        return Err(CheckpointError::Header(format!(
            "{} trailing header bytes",
            header.len() - h.pos
        )));
    }

    let mut expected = 0usize;
    for t in &tensors {
        if t.offset != expected {
            return Err(CheckpointError::Header(format!(
                "tensor {} at offset {} (expected {expected})",
                t.name, t.offset
            )));
        }
        expected += 4 * t.shape.iter().product::<usize>();
    }
    if payload.len() < expected {
        return Err(CheckpointError::Truncated("tensor payload"));
    }
    if payload.len() > expected {
        return Err(CheckpointError::Header(format!(
            "{} unexpected payload bytes",
            payload.len() - expected
        )));
    }
    Ok(Parsed {
        config,
        vocabs,
        tensors,
        payload,
    })
}

fn decode_f32(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model<f32>> {
    let parsed = parse(bytes)?;
    // Rebuild the parameter layout, then overwrite every value from the file.
    let mut model = Model::<f32>::new(parsed.config, parsed.vocabs, &mut ChaCha8Rng::seed_from_u64(0))
        .map_err(|e| CheckpointError::Header(e.to_string()))?;
    let store = model.store_mut();
    if store.len() != parsed.tensors.len() {
        return Err(CheckpointError::Header(format!(
            "expected {} tensors, found {}",
            store.len(),
            parsed.tensors.len()
        ))
        .into());
    }
    for (id, entry) in store.ids().collect::<Vec<_>>().into_iter().zip(&parsed.tensors) {
        let slot = store.slot_mut(id);
        if slot.name != entry.name || slot.value.shape() != entry.shape.as_slice() {
            return Err(CheckpointError::Header(format!(
                "tensor {} {:?} does not match expected {} {:?}",
                entry.name,
                entry.shape,
                slot.name,
                slot.value.shape()
            ))
            .into());
        }
        let len = 4 * slot.value.len();
        let values = decode_f32(&parsed.payload[entry.offset..entry.offset + len]);
        slot.value = Tensor::new(&entry.shape, values)?;
    }
    Ok(model)
}

pub fn save_checkpoint(model: &Model<f32>, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model<f32>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

/// Raw little-endian payload bytes of every tensor, by name, in file order.
pub fn tensor_bytes(bytes: &[u8]) -> Result<Vec<(String, Vec<u8>)>> {
    let parsed = parse(bytes)?;
    Ok(parsed
        .tensors
        .iter()
        .map(|t| {
            let len = 4 * t.shape.iter().product::<usize>();
            (t.name.clone(), parsed.payload[t.offset..t.offset + len].to_vec())
        })
        .collect())
}

/// Tensor directory of a checkpoint without materialising the model.
pub fn list_tensors(bytes: &[u8]) -> Result<Vec<TensorEntry>> {
    Ok(parse(bytes)?.tensors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Model<f32> {
        let en = Vocabulary::from_tokens("en", ["good".into(), "bad".into()]).unwrap();
        let fr = Vocabulary::from_tokens("fr", ["bon".into(), "mauvais".into(), "c'est".into()]).unwrap();
        let config = ModelConfig {
            embed_dim: 3,
            sentence_hidden: 4,
            review_hidden: 5,
            max_sentences: 2,
            max_words: 3,
            outputs: 1,
            dropout: 0.5,
        };
        Model::new(config, vec![en, fr], &mut ChaCha8Rng::seed_from_u64(7)).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = model();
        let bytes = to_bytes(&m);
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back.config(), m.config());
        for (a, b) in m.store().slots().iter().zip(back.store().slots()) {
            assert_eq!(a.name, b.name);
            let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.value), bits(&b.value));
        }
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn keeps_both_languages() {
        let back = from_bytes(&to_bytes(&model())).unwrap();
        let tags: Vec<&str> = back.languages().iter().map(|l| l.vocab.lang()).collect();
        assert_eq!(tags, vec!["en", "fr"]);
        assert_eq!(back.language("fr").unwrap().vocab.encode("c'est"), 4);
    }

    #[test]
    fn corrupt_magic() {
        let mut bytes = to_bytes(&model());
        bytes[0] ^= 0xff;
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Checkpoint(CheckpointError::BadMagic))
        ));
    }

    #[test]
    fn wrong_version() {
        let mut bytes = to_bytes(&model());
        bytes[8] = 9;
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Checkpoint(CheckpointError::Version { found: 9, .. }))
        ));
    }

    #[test]
    fn truncated_file() {
        let bytes = to_bytes(&model());
        for cut in [4, 15, 40, bytes.len() - 1] {
            assert!(
                matches!(
                    from_bytes(&bytes[..cut]),
                    Err(Error::Checkpoint(CheckpointError::Truncated(_)) | Error::Checkpoint(CheckpointError::BadMagic))
                ),
                "cut at {cut}"
            );
        }
        assert!(matches!(
            from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Checkpoint(CheckpointError::Truncated(_)))
        ));
    }

    #[test]
    fn inconsistent_shape() {
        let m = model();
        let mut bytes = to_bytes(&m);
        let extra = [0u8; 4];
        bytes.extend_from_slice(&extra);
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Checkpoint(CheckpointError::Header(_)))
        ));
    }
}
