//! The `BPR1` binary container.
//!
//! ```text
//! "BPR1" | version u32 | kind u8 | n u64 | m u64
//! times   m × f64
//! weights m × f64
//! data    n × m complex, column-major, (re, im) f64 pairs
//! meta    u64 length + UTF-8 `key=value` lines
//! sha256  32 bytes over everything above
//! ```
//!
//! All numbers are little-endian, so a write/read cycle is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::balancing::{Provenance, ReducedOrderModel};
use crate::dynamics::{SnapshotKind, SnapshotSet};
use crate::error::{Error, Result};
use crate::field3d::{Box3D, Field3D};
use crate::linalg::{c64, CMat};
use crate::modal::{BasisKind, ModeBasis, WeightId};
use crate::spectral;
use crate::system::{Blocks, Field};

pub const MAGIC: &[u8; 4] = b"BPR1";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 1 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    DirectSnapshots,
    AdjointSnapshots,
    PodModes,
    BalancingModes,
    Rom,
    Field3D,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::DirectSnapshots => 0,
            Kind::AdjointSnapshots => 1,
            Kind::PodModes => 2,
            Kind::BalancingModes => 3,
            Kind::Rom => 4,
            Kind::Field3D => 5,
        }
    }

    pub fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => Kind::DirectSnapshots,
            1 => Kind::AdjointSnapshots,
            2 => Kind::PodModes,
            3 => Kind::BalancingModes,
            4 => Kind::Rom,
            5 => Kind::Field3D,
            _ => return Err(Error::Format(format!("unknown record kind {c}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub kind: Kind,
    pub times: Vec<f64>,
    pub weights: Vec<f64>,
    pub data: CMat,
    pub meta: BTreeMap<String, String>,
}

impl Record {
    pub fn new(kind: Kind, data: CMat) -> Self {
        let m = data.ncols();
        Record { kind, times: vec![0.0; m], weights: vec![1.0; m], data, meta: BTreeMap::new() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("missing metadata key '{key}'")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let s = self.get(key)?;
        s.parse().map_err(|_| Error::Format(format!("bad number for '{key}': {s}")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        let s = self.get(key)?;
        s.parse().map_err(|_| Error::Format(format!("bad integer for '{key}': {s}")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (n, m) = self.data.shape();
        let mut buf = Vec::with_capacity(HEADER + 16 * m + 16 * n * m + 64);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(self.kind.code());
        buf.extend_from_slice(&(n as u64).to_le_bytes());
        buf.extend_from_slice(&(m as u64).to_le_bytes());
        for v in self.times.iter().chain(&self.weights) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for z in self.data.iter() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        let mut meta = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(meta, "{k}={v}");
        }
        buf.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        buf.extend_from_slice(meta.as_bytes());
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(digest.as_slice());
        buf
    }

    /// Parse a record; `name` labels errors.
    pub fn from_bytes(bytes: &[u8], name: &str) -> Result<Self> {
        if bytes.len() < HEADER + 8 + 32 || &bytes[..4] != MAGIC {
            return Err(Error::Format(format!("{name}: not a BPR1 file")));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Version { found: version, expected: VERSION });
        }
        let (body, sum) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != sum {
            return Err(Error::Checksum(name.to_string()));
        }
        let mut r = Reader { buf: body, pos: 8, name };
        let kind = Kind::from_code(r.take(1)?[0])?;
        let n = r.u64()? as usize;
        let m = r.u64()? as usize;
        let times = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let weights = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let total = n.checked_mul(m).ok_or_else(|| Error::Format(format!("{name}: size overflow")))?;
        let mut vals = Vec::with_capacity(total);
        for _ in 0..total {
            let re = r.f64()?;
            let im = r.f64()?;
            vals.push(c64(re, im));
        }
        let data = CMat::from_vec(n, m, vals);
        let len = r.u64()? as usize;
        let text = std::str::from_utf8(r.take(len)?).map_err(|_| Error::Format(format!("{name}: metadata is not UTF-8")))?;
        let mut meta = BTreeMap::new();
        for line in text.lines() {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format(format!("{name}: bad metadata line '{line}'")))?;
            meta.insert(k.to_string(), v.to_string());
        }
        if r.pos != body.len() {
            return Err(Error::Format(format!("{name}: trailing bytes")));
        }
        Ok(Record { kind, times, weights, data, meta })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("partial");
        std::fs::write(&tmp, self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }

    fn expect(&self, kinds: &[Kind]) -> Result<()> {
        if kinds.contains(&self.kind) {
            Ok(())
        } else {
            Err(Error::Format(format!("expected a {:?} record, found {:?}", kinds[0], self.kind)))
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    name: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < k {
            return Err(Error::Format(format!("{}: truncated", self.name)));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// SHA-256 of a byte string as lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(Sha256::digest(bytes).as_slice())
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn split<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.parse().map_err(|_| Error::Format(format!("bad list entry '{t}'"))))
        .collect()
}

fn field_name(f: Field) -> &'static str {
    match f {
        Field::Real => "real",
        Field::Complex => "complex",
    }
}

fn parse_field(s: &str) -> Result<Field> {
    match s {
        "real" => Ok(Field::Real),
        "complex" => Ok(Field::Complex),
        _ => Err(Error::Format(format!("unknown field '{s}'"))),
    }
}

fn split_blocks(full: &CMat, sizes: &[usize]) -> Result<Blocks> {
    if sizes.iter().sum::<usize>() != full.nrows() {
        return Err(Error::Format("block sizes do not match the payload".into()));
    }
    Ok(Blocks::split(full, sizes))
}

fn block_sizes(b: &Blocks) -> Vec<usize> {
    b.0.iter().map(|m| m.nrows()).collect()
}

pub fn snapshots_to_record(set: &SnapshotSet) -> Record {
    let kind = match set.kind {
        SnapshotKind::Direct => Kind::DirectSnapshots,
        SnapshotKind::Adjoint => Kind::AdjointSnapshots,
    };
    let mut r = Record::new(kind, set.data.stacked());
    r.times = set.times.clone();
    r.weights = set.weights.clone();
    r.set("blocks", join(&block_sizes(&set.data)));
    r.set("source", &set.source);
    r.set("runs", set.runs);
    r.set("dt", set.dt);
    r.set("decay_threshold", set.decay_threshold);
    r.set("terminal_ratio", set.terminal_ratio);
    r
}

pub fn snapshots_from_record(r: &Record) -> Result<SnapshotSet> {
    r.expect(&[Kind::DirectSnapshots, Kind::AdjointSnapshots])?;
    let sizes: Vec<usize> = split(r.get("blocks")?)?;
    Ok(SnapshotSet {
        data: split_blocks(&r.data, &sizes)?,
        times: r.times.clone(),
        weights: r.weights.clone(),
        kind: if r.kind == Kind::DirectSnapshots { SnapshotKind::Direct } else { SnapshotKind::Adjoint },
        source: r.get("source")?.to_string(),
        runs: r.get_usize("runs")?,
        dt: r.get_f64("dt")?,
        decay_threshold: r.get_f64("decay_threshold")?,
        terminal_ratio: r.get_f64("terminal_ratio")?,
    })
}

/// Modes (and adjoint modes, appended as extra columns) of a basis.
pub fn basis_to_record(b: &ModeBasis) -> Record {
    let kind = match b.kind {
        BasisKind::Pod => Kind::PodModes,
        BasisKind::Balancing => Kind::BalancingModes,
    };
    let modes = b.modes.stacked();
    let data = match &b.adjoint_modes {
        Some(adj) => {
            let a = adj.stacked();
            let mut d = CMat::zeros(modes.nrows(), modes.ncols() + a.ncols());
            d.columns_mut(0, modes.ncols()).copy_from(&modes);
            d.columns_mut(modes.ncols(), a.ncols()).copy_from(&a);
            d
        }
        None => modes,
    };
    let mut r = Record::new(kind, data);
    r.set("blocks", join(&block_sizes(&b.modes)));
    r.set("rank", b.rank());
    r.set("adjoint", b.adjoint_modes.is_some() as u8);
    r.set("values", join(&b.values));
    r.set("weight", if b.weight == WeightId::Energy { "energy" } else { "mass" });
    r.set("field", field_name(b.field));
    r.set("truncated", b.truncated as u8);
    r
}

pub fn basis_from_record(r: &Record) -> Result<ModeBasis> {
    r.expect(&[Kind::PodModes, Kind::BalancingModes])?;
    let sizes: Vec<usize> = split(r.get("blocks")?)?;
    let rank = r.get_usize("rank")?;
    let adjoint = r.get("adjoint")? == "1";
    let expected = if adjoint { 2 * rank } else { rank };
    if r.data.ncols() != expected {
        return Err(Error::Format(format!("basis has {} columns, expected {expected}", r.data.ncols())));
    }
    let modes = split_blocks(&r.data.columns(0, rank).into_owned(), &sizes)?;
    let adjoint_modes = if adjoint { Some(split_blocks(&r.data.columns(rank, rank).into_owned(), &sizes)?) } else { None };
    let weight = match r.get("weight")? {
        "energy" => WeightId::Energy,
        "mass" => WeightId::Mass,
        w => return Err(Error::Format(format!("unknown weight '{w}'"))),
    };
    Ok(ModeBasis {
        modes,
        adjoint_modes,
        values: split(r.get("values")?)?,
        weight,
        kind: if r.kind == Kind::PodModes { BasisKind::Pod } else { BasisKind::Balancing },
        field: parse_field(r.get("field")?)?,
        truncated: r.get("truncated")? == "1",
    })
}

/// ROM as a single column holding `ar, br, cr, ar_conv, ar_diff, recon`
/// back to back; shapes and scalars live in the text header.
pub fn rom_to_record(rom: &ReducedOrderModel) -> Record {
    let recon = rom.recon.stacked();
    let parts = [&rom.ar, &rom.br, &rom.cr, &rom.ar_conv, &rom.ar_diff, &recon];
    let total: usize = parts.iter().map(|p| p.len()).sum();
    let mut col = CMat::zeros(total, 1);
    let mut at = 0;
    let mut shapes = Vec::new();
    for p in parts {
        for (k, z) in p.iter().enumerate() {
            col[(at + k, 0)] = *z;
        }
        at += p.len();
        shapes.push(format!("{}x{}", p.nrows(), p.ncols()));
    }
    let mut r = Record::new(Kind::Rom, col);
    r.set("shapes", shapes.join(","));
    r.set("blocks", join(&block_sizes(&rom.recon)));
    r.set("rank", rom.rank);
    r.set("output_rank", rom.output_rank);
    r.set("design_re", rom.design_re);
    r.set("re", rom.re);
    r.set("provenance", rom.provenance.name());
    r.set("field", field_name(rom.field));
    r
}

pub fn rom_from_record(r: &Record) -> Result<ReducedOrderModel> {
    r.expect(&[Kind::Rom])?;
    let shapes: Vec<(usize, usize)> = r
        .get("shapes")?
        .split(',')
        .map(|s| {
            let (a, b) = s.split_once('x').ok_or_else(|| Error::Format(format!("bad shape '{s}'")))?;
            Ok((a.parse().map_err(|_| Error::Format(format!("bad shape '{s}'")))?, b.parse().map_err(|_| Error::Format(format!("bad shape '{s}'")))?))
        })
        .collect::<Result<_>>()?;
    if shapes.len() != 6 || shapes.iter().map(|(a, b)| a * b).sum::<usize>() != r.data.nrows() {
        return Err(Error::Format("ROM shapes do not match the payload".into()));
    }
    let mut at = 0;
    let mut mats = Vec::new();
    for (nr, nc) in shapes {
        let vals: Vec<_> = (0..nr * nc).map(|k| r.data[(at + k, 0)]).collect();
        at += nr * nc;
        mats.push(CMat::from_vec(nr, nc, vals));
    }
    let sizes: Vec<usize> = split(r.get("blocks")?)?;
    let recon = split_blocks(&mats[5], &sizes)?;
    let provenance = Provenance::parse(r.get("provenance")?).ok_or_else(|| Error::Format("unknown provenance".into()))?;
    let mut it = mats.into_iter();
    Ok(ReducedOrderModel {
        ar: it.next().unwrap(),
        br: it.next().unwrap(),
        cr: it.next().unwrap(),
        ar_conv: it.next().unwrap(),
        ar_diff: it.next().unwrap(),
        rank: r.get_usize("rank")?,
        output_rank: r.get_usize("output_rank")?,
        design_re: r.get_f64("design_re")?,
        re: r.get_f64("re")?,
        provenance,
        field: parse_field(r.get("field")?)?,
        recon,
    })
}

/// Physical field: `v` in the real parts, `η` in the imaginary parts.
pub fn field_to_record(f: &Field3D) -> Record {
    let n = f.v.len();
    let data = CMat::from_fn(n, 1, |i, _| c64(f.v[i], f.eta[i]));
    let mut r = Record::new(Kind::Field3D, data);
    r.set("dims", format!("{},{},{}", f.bx.nx, f.bx.ny(), f.bx.nz));
    r.set("lx", f.bx.lx);
    r.set("lz", f.bx.lz);
    r
}

pub fn field_from_record(r: &Record) -> Result<Field3D> {
    r.expect(&[Kind::Field3D])?;
    let dims: Vec<usize> = split(r.get("dims")?)?;
    if dims.len() != 3 || dims[1] < 2 || dims.iter().product::<usize>() != r.data.nrows() {
        return Err(Error::Format("field dims do not match the payload".into()));
    }
    let grid = spectral::chebyshev_grid(dims[1] - 1)?;
    let bx = Box3D::new(r.get_f64("lx")?, r.get_f64("lz")?, dims[0], dims[2], grid)?;
    Ok(Field3D {
        bx,
        v: r.data.iter().map(|z| z.re).collect(),
        eta: r.data.iter().map(|z| z.im).collect(),
    })
}
