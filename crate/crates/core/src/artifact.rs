//! On-disk value checkpoints and policy tables.
//!
//! Both files are little-endian and start with an 8-byte magic and a `u32`
//! format version.
//!
//! Value checkpoint (`OFFLVAL\0`, version 1):
//!
//! ```text
//! magic[8] version:u32 n_max:u32 iterations:u64 status:u32 reserved:u32
//! residual:f64 nu:f64 alpha:f64 beta:f64
//! lambda:f64 mu0:f64 k:f64 f:f64 mu_c1:f64 mu_l2:f64 mu_c2:f64
//! count:u64 values:f64[count]
//! ```
//!
//! Policy table (`OFFLPOL\0`, version 1):
//!
//! ```text
//! magic[8] version:u32 n_max:u32 count:u64 actions:u8[count]
//! ```
//!
//! Entries follow the state-id order of [`StateSpace`]; actions use
//! [`Action::code`].

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::kernel::{DiscountSpec, StateSpace};
use crate::model::{Action, ModelParams};
use crate::solver::{PolicyTable, ValueTable, ViStatus};

pub const VALUE_MAGIC: [u8; 8] = *b"OFFLVAL\0";
pub const POLICY_MAGIC: [u8; 8] = *b"OFFLPOL\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a {expected} file (bad magic)")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {found} (this build reads version {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt artifact: {0}")]
    Corrupt(String),
}

/// A value table plus everything needed to resume or interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueCheckpoint {
    pub table: ValueTable,
    pub status: ViStatus,
    pub params: ModelParams,
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> io::Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf)?;
        Ok(buf)
    }
    fn u32(&mut self) -> io::Result<u32> {
        self.bytes().map(u32::from_le_bytes)
    }
    fn u64(&mut self) -> io::Result<u64> {
        self.bytes().map(u64::from_le_bytes)
    }
    fn f64(&mut self) -> io::Result<f64> {
        self.bytes().map(f64::from_le_bytes)
    }
}

fn read_header<R: Read>(c: &mut Cursor<R>, magic: [u8; 8], kind: &'static str) -> Result<(), ArtifactError> {
    if c.bytes::<8>()? != magic {
        return Err(ArtifactError::BadMagic { expected: kind });
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(ArtifactError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

fn checked_space(n_max: u32, count: u64) -> Result<StateSpace, ArtifactError> {
    let space = StateSpace::new(n_max).map_err(|e| ArtifactError::Corrupt(e.to_string()))?;
    if space.len() as u64 != count {
        return Err(ArtifactError::Corrupt(format!(
            "{count} entries for n_max = {n_max} (expected {})",
            space.len()
        )));
    }
    Ok(space)
}

pub fn write_values<W: Write>(mut w: W, ck: &ValueCheckpoint) -> io::Result<()> {
    let t = &ck.table;
    let p = &ck.params;
    w.write_all(&VALUE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&t.n_max.to_le_bytes())?;
    w.write_all(&t.iterations.to_le_bytes())?;
    let status: u32 = match ck.status {
        ViStatus::Converged => 1,
        ViStatus::MaxIterations => 0,
    };
    w.write_all(&status.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for x in [
        t.residual,
        t.discount.nu,
        t.discount.alpha,
        t.discount.beta,
        p.lambda,
        p.mu0,
        p.k,
        p.f,
        p.mu_c1,
        p.mu_l2,
        p.mu_c2,
    ] {
        w.write_all(&x.to_le_bytes())?;
    }
    w.write_all(&(t.values.len() as u64).to_le_bytes())?;
    for v in &t.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_values<R: Read>(r: R) -> Result<ValueCheckpoint, ArtifactError> {
    let mut c = Cursor { inner: r };
    read_header(&mut c, VALUE_MAGIC, "value checkpoint")?;
    let n_max = c.u32()?;
    let iterations = c.u64()?;
    let status = match c.u32()? {
        1 => ViStatus::Converged,
        0 => ViStatus::MaxIterations,
        other => return Err(ArtifactError::Corrupt(format!("status code {other}"))),
    };
    let _reserved = c.u32()?;
    let residual = c.f64()?;
    let discount = DiscountSpec {
        nu: c.f64()?,
        alpha: c.f64()?,
        beta: c.f64()?,
    };
    let params = ModelParams {
        lambda: c.f64()?,
        mu0: c.f64()?,
        k: c.f64()?,
        f: c.f64()?,
        mu_c1: c.f64()?,
        mu_l2: c.f64()?,
        mu_c2: c.f64()?,
    };
    let count = c.u64()?;
    checked_space(n_max, count)?;
    let values = (0..count).map(|_| c.f64()).collect::<io::Result<Vec<_>>>()?;
    Ok(ValueCheckpoint {
        table: ValueTable {
            values,
            iterations,
            residual,
            discount,
            n_max,
        },
        status,
        params,
    })
}

pub fn write_policy<W: Write>(mut w: W, pi: &PolicyTable) -> io::Result<()> {
    w.write_all(&POLICY_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&pi.n_max.to_le_bytes())?;
    w.write_all(&(pi.actions.len() as u64).to_le_bytes())?;
    let codes: Vec<u8> = pi.actions.iter().map(|a| a.code()).collect();
    w.write_all(&codes)?;
    w.flush()
}

pub fn read_policy<R: Read>(r: R) -> Result<PolicyTable, ArtifactError> {
    let mut c = Cursor { inner: r };
    read_header(&mut c, POLICY_MAGIC, "policy table")?;
    let n_max = c.u32()?;
    let count = c.u64()?;
    checked_space(n_max, count)?;
    let mut codes = vec![0u8; count as usize];
    c.inner.read_exact(&mut codes)?;
    let actions = codes
        .into_iter()
        .map(|b| Action::from_code(b).ok_or_else(|| ArtifactError::Corrupt(format!("action code {b}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PolicyTable { n_max, actions })
}

pub fn save_values(path: &Path, ck: &ValueCheckpoint) -> io::Result<()> {
    // write-then-rename so an interrupted checkpoint never clobbers the last good one
    let tmp = path.with_extension("tmp");
    write_values(BufWriter::new(File::create(&tmp)?), ck)?;
    std::fs::rename(tmp, path)
}

pub fn load_values(path: &Path) -> Result<ValueCheckpoint, ArtifactError> {
    read_values(BufReader::new(File::open(path)?))
}

pub fn save_policy(path: &Path, pi: &PolicyTable) -> io::Result<()> {
    write_policy(BufWriter::new(File::create(path)?), pi)
}

pub fn load_policy(path: &Path) -> Result<PolicyTable, ArtifactError> {
    read_policy(BufReader::new(File::open(path)?))
}
