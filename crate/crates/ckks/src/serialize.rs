//! Versioned little-endian binary serialization.
//!
//! Layout: magic `PCOL`, format version u16, type tag u8, then the type's
//! payload with length-prefixed coefficient arrays. Secret keys serialize
//! only through [`export_secret_key`].

use crate::cipher::Ciphertext;
use crate::encoding::Plaintext;
use crate::error::CkksError;
use crate::keys::{KeySwitchKey, PublicKey, RotationKeys, SecretKey};
use crate::params::{Params, Preset};
use crate::rns::RnsPoly;

pub const MAGIC: &[u8; 4] = b"PCOL";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeTag {
    Params = 1,
    PublicMaterial = 2,
    Plaintext = 3,
    Ciphertext = 4,
    SecretKey = 5,
}

// ── Byte-level helpers ────────────────────────────────────────────────────

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(tag: TypeTag) -> Self {
        let mut buf = Vec::with_capacity(64);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.push(tag as u8);
        Self { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64_slice(&mut self, v: &[u64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.u64(x);
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8], expect: TypeTag) -> Result<Self, CkksError> {
        let mut r = Self { data, pos: 0 };
        let magic = r.bytes(4)?;
        if magic != MAGIC {
            return Err(CkksError::Serialization("bad magic".into()));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(CkksError::Serialization(format!(
                "unsupported format version {version}"
            )));
        }
        let tag = r.u8()?;
        if tag != expect as u8 {
            return Err(CkksError::Serialization(format!(
                "type tag {tag} where {} expected",
                expect as u8
            )));
        }
        Ok(r)
    }

    fn bytes(&mut self, len: usize) -> Result<&'a [u8], CkksError> {
        if self.pos + len > self.data.len() {
            return Err(CkksError::Serialization("truncated input".into()));
        }
        let out = &self.data[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CkksError> {
        Ok(self.bytes(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CkksError> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CkksError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CkksError> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CkksError> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn u64_vec(&mut self) -> Result<Vec<u64>, CkksError> {
        let len = self.u64()? as usize;
        if len > (1 << 28) {
            return Err(CkksError::Serialization("implausible array length".into()));
        }
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(self.u64()?);
        }
        Ok(out)
    }

    fn finish(self) -> Result<(), CkksError> {
        if self.pos != self.data.len() {
            return Err(CkksError::Serialization("trailing bytes".into()));
        }
        Ok(())
    }
}

// ── Poly payloads ─────────────────────────────────────────────────────────

fn write_poly(w: &mut Writer, p: &RnsPoly) {
    append_poly(&mut w.buf, p);
}

/// Appends a raw polynomial payload (no container header); the building
/// block for protocol-message payloads.
pub fn append_poly(buf: &mut Vec<u8>, p: &RnsPoly) {
    buf.extend_from_slice(&(p.prefix() as u32).to_le_bytes());
    buf.push(p.has_special() as u8);
    buf.push(p.is_ntt() as u8);
    for i in 0..p.row_count() {
        let row = p.row(i);
        buf.extend_from_slice(&(row.len() as u64).to_le_bytes());
        for &x in row {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
}

/// Reads a raw polynomial payload written by [`append_poly`], advancing
/// `pos`.
pub fn read_poly_at(
    data: &[u8],
    pos: &mut usize,
    params: &Params,
) -> Result<RnsPoly, CkksError> {
    let mut r = Reader { data, pos: *pos };
    let poly = read_poly(&mut r, params)?;
    *pos = r.pos;
    Ok(poly)
}

fn read_poly(r: &mut Reader, params: &Params) -> Result<RnsPoly, CkksError> {
    let prefix = r.u32()? as usize;
    let has_special = r.u8()? != 0;
    let ntt = r.u8()? != 0;
    if prefix == 0 || prefix > params.max_level() + 1 {
        return Err(CkksError::Serialization(format!("bad prefix {prefix}")));
    }
    let mut poly = RnsPoly::zero(params.context().clone(), prefix, has_special, ntt);
    let n = params.ring_degree();
    for i in 0..poly.row_count() {
        let row = r.u64_vec()?;
        if row.len() != n {
            return Err(CkksError::Serialization("row length mismatch".into()));
        }
        let q = poly.row_modulus(i);
        if row.iter().any(|&v| v >= q) {
            return Err(CkksError::Serialization("unreduced residue".into()));
        }
        poly.set_row(i, row);
    }
    Ok(poly)
}

fn write_ksk(w: &mut Writer, k: &KeySwitchKey) {
    w.u32(k.digits.len() as u32);
    for (b, a) in &k.digits {
        write_poly(w, b);
        write_poly(w, a);
    }
}

fn read_ksk(r: &mut Reader, params: &Params) -> Result<KeySwitchKey, CkksError> {
    let count = r.u32()? as usize;
    if count != params.max_level() + 1 {
        return Err(CkksError::Serialization("digit count mismatch".into()));
    }
    let mut digits = Vec::with_capacity(count);
    for _ in 0..count {
        let b = read_poly(r, params)?;
        let a = read_poly(r, params)?;
        digits.push((b, a));
    }
    Ok(KeySwitchKey { digits })
}

// ── Public API ────────────────────────────────────────────────────────────

pub fn serialize_params(p: &Params) -> Vec<u8> {
    let mut w = Writer::new(TypeTag::Params);
    w.u32(p.ring_degree() as u32);
    w.u32(p.scale_bits());
    w.f64(p.error_stddev());
    w.u32(p.hamming_weight() as u32);
    w.u8(match p.preset() {
        None => 0,
        Some(Preset::Toy) => 1,
        Some(Preset::Desk) => 2,
        Some(Preset::StdLike) => 3,
    });
    w.u64_slice(p.moduli());
    w.u64(p.special_prime());
    w.buf
}

pub fn deserialize_params(data: &[u8]) -> Result<Params, CkksError> {
    let mut r = Reader::new(data, TypeTag::Params)?;
    let n = r.u32()? as usize;
    let scale_bits = r.u32()?;
    let stddev = r.f64()?;
    let hamming = r.u32()? as usize;
    let preset = match r.u8()? {
        0 => None,
        1 => Some(Preset::Toy),
        2 => Some(Preset::Desk),
        3 => Some(Preset::StdLike),
        t => return Err(CkksError::Serialization(format!("bad preset {t}"))),
    };
    let moduli = r.u64_vec()?;
    let special = r.u64()?;
    r.finish()?;
    Params::from_parts(n, moduli, special, scale_bits, stddev, hamming, preset)
}

/// Serializes the public parts of a key set: encryption key, relin key,
/// rotation keys.
pub fn serialize_public_material(
    pk: &PublicKey,
    relin: &KeySwitchKey,
    rotations: &RotationKeys,
) -> Vec<u8> {
    let mut w = Writer::new(TypeTag::PublicMaterial);
    write_poly(&mut w, &pk.b);
    write_poly(&mut w, &pk.a);
    write_ksk(&mut w, relin);
    w.u32(rotations.map.len() as u32);
    for (&step, ksk) in &rotations.map {
        w.u32(step as u32);
        write_ksk(&mut w, ksk);
    }
    w.buf
}

pub fn deserialize_public_material(
    data: &[u8],
    params: &Params,
) -> Result<(PublicKey, KeySwitchKey, RotationKeys), CkksError> {
    let mut r = Reader::new(data, TypeTag::PublicMaterial)?;
    let b = read_poly(&mut r, params)?;
    let a = read_poly(&mut r, params)?;
    let relin = read_ksk(&mut r, params)?;
    let count = r.u32()? as usize;
    let mut rotations = RotationKeys::default();
    for _ in 0..count {
        let step = r.u32()? as usize;
        let ksk = read_ksk(&mut r, params)?;
        rotations.map.insert(step, ksk);
    }
    r.finish()?;
    Ok((PublicKey { b, a }, relin, rotations))
}

pub fn serialize_plaintext(pt: &Plaintext) -> Vec<u8> {
    let mut w = Writer::new(TypeTag::Plaintext);
    w.u32(pt.level() as u32);
    w.f64(pt.scale());
    w.f64(pt.value_bits());
    write_poly(&mut w, pt.poly());
    w.buf
}

pub fn deserialize_plaintext(data: &[u8], params: &Params) -> Result<Plaintext, CkksError> {
    let mut r = Reader::new(data, TypeTag::Plaintext)?;
    let level = r.u32()? as usize;
    let scale = r.f64()?;
    let value_bits = r.f64()?;
    let poly = read_poly(&mut r, params)?;
    r.finish()?;
    if poly.prefix() != level + 1 {
        return Err(CkksError::Serialization("level/prefix mismatch".into()));
    }
    Ok(Plaintext::from_parts(poly, level, scale, value_bits))
}

pub fn serialize_ciphertext(ct: &Ciphertext) -> Vec<u8> {
    let mut w = Writer::new(TypeTag::Ciphertext);
    w.u32(ct.level() as u32);
    w.f64(ct.scale());
    w.u32(ct.slot_count() as u32);
    w.f64(ct.noise_bits());
    w.f64(ct.value_bits());
    write_poly(&mut w, ct.c0());
    write_poly(&mut w, ct.c1());
    w.buf
}

pub fn deserialize_ciphertext(data: &[u8], params: &Params) -> Result<Ciphertext, CkksError> {
    let mut r = Reader::new(data, TypeTag::Ciphertext)?;
    let level = r.u32()? as usize;
    let scale = r.f64()?;
    let slots = r.u32()? as usize;
    let noise_bits = r.f64()?;
    let value_bits = r.f64()?;
    let c0 = read_poly(&mut r, params)?;
    let c1 = read_poly(&mut r, params)?;
    r.finish()?;
    if c0.prefix() != level + 1 || c1.prefix() != level + 1 {
        return Err(CkksError::Serialization("level/prefix mismatch".into()));
    }
    Ok(Ciphertext::from_parts(
        c0, c1, level, scale, slots, noise_bits, value_bits,
    ))
}

/// Explicit secret-key export. The only path that writes secret material.
pub fn export_secret_key(sk: &SecretKey) -> Vec<u8> {
    let mut w = Writer::new(TypeTag::SecretKey);
    write_poly(&mut w, sk.poly());
    w.buf
}

pub fn import_secret_key(data: &[u8], params: &Params) -> Result<SecretKey, CkksError> {
    let mut r = Reader::new(data, TypeTag::SecretKey)?;
    let poly = read_poly(&mut r, params)?;
    r.finish()?;
    if poly.prefix() != params.max_level() + 1 || !poly.has_special() {
        return Err(CkksError::Serialization("secret key basis mismatch".into()));
    }
    Ok(SecretKey::from_poly(poly))
}
