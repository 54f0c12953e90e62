//! Krylov basis storage: in memory, or streamed through a scratch file.
//!
//! Scratch layout: `b"KRYV"`, version `u32`, `D u32`, `K u32` (all
//! little-endian), then `K` records of `D²` complex entries stored as
//! `(re f64, im f64)` little-endian pairs.

use num_complex::Complex64;
use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: [u8; 4] = *b"KRYV";
pub const VERSION: u32 = 1;
const HEADER_LEN: u64 = 16;

/// Ordered list of basis vectors, each of length `D²`.
#[derive(Debug)]
pub enum BasisStore {
    Memory { dim: usize, vectors: Vec<Vec<Complex64>> },
    File(FileBasis),
}

impl BasisStore {
    pub fn in_memory(dim: usize) -> Self {
        BasisStore::Memory {
            dim,
            vectors: Vec::new(),
        }
    }

    pub fn scratch_file(path: impl AsRef<Path>, dim: usize) -> io::Result<Self> {
        Ok(BasisStore::File(FileBasis::create(path, dim)?))
    }

    /// Hilbert-space dimension `D`; vectors have `D²` entries.
    pub fn dim(&self) -> usize {
        match self {
            BasisStore::Memory { dim, .. } => *dim,
            BasisStore::File(f) => f.dim,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            BasisStore::Memory { vectors, .. } => vectors.len(),
            BasisStore::File(f) => f.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, v: &[Complex64]) -> io::Result<()> {
        match self {
            BasisStore::Memory { dim, vectors } => {
                assert_eq!(v.len(), *dim * *dim);
                vectors.push(v.to_vec());
                Ok(())
            }
            BasisStore::File(f) => f.push(v),
        }
    }

    /// Visits every stored vector in order.
    pub fn for_each(&self, mut f: impl FnMut(usize, &[Complex64])) -> io::Result<()> {
        match self {
            BasisStore::Memory { vectors, .. } => {
                for (k, v) in vectors.iter().enumerate() {
                    f(k, v);
                }
                Ok(())
            }
            BasisStore::File(file) => file.for_each(f),
        }
    }

    pub fn get(&self, k: usize) -> io::Result<Vec<Complex64>> {
        match self {
            BasisStore::Memory { vectors, .. } => Ok(vectors[k].clone()),
            BasisStore::File(f) => f.read(k),
        }
    }

    /// Bytes a full basis of `k` vectors occupies.
    pub fn bytes_for(dim: usize, k: usize) -> u64 {
        (dim * dim) as u64 * k as u64 * 16
    }
}

/// Append-only scratch file; the header's `K` is rewritten on every push so
/// the file is always self-describing.
#[derive(Debug)]
pub struct FileBasis {
    path: PathBuf,
    writer: BufWriter<File>,
    dim: usize,
    len: usize,
}

impl FileBasis {
    pub fn create(path: impl AsRef<Path>, dim: usize) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .truncate(true)
            .read(true)
            .write(true)
            .open(&path)?;
        let mut writer = BufWriter::new(file);
        writer.write_all(&MAGIC)?;
        writer.write_all(&VERSION.to_le_bytes())?;
        writer.write_all(&(dim as u32).to_le_bytes())?;
        writer.write_all(&0u32.to_le_bytes())?;
        writer.flush()?;
        Ok(Self {
            path,
            writer,
            dim,
            len: 0,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn push(&mut self, v: &[Complex64]) -> io::Result<()> {
        assert_eq!(v.len(), self.dim * self.dim);
        let offset = HEADER_LEN + self.len as u64 * self.record_bytes();
        self.writer.seek(SeekFrom::Start(offset))?;
        let mut buf = Vec::with_capacity(v.len() * 16);
        for z in v {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        self.writer.write_all(&buf)?;
        self.len += 1;
        self.writer.seek(SeekFrom::Start(12))?;
        self.writer.write_all(&(self.len as u32).to_le_bytes())?;
        self.writer.flush()
    }

    fn record_bytes(&self) -> u64 {
        (self.dim * self.dim) as u64 * 16
    }

    fn decode(buf: &[u8], out: &mut Vec<Complex64>) {
        out.clear();
        out.extend(buf.chunks_exact(16).map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        }));
    }

    fn read(&self, k: usize) -> io::Result<Vec<Complex64>> {
        let mut file = File::open(&self.path)?;
        file.seek(SeekFrom::Start(HEADER_LEN + k as u64 * self.record_bytes()))?;
        let mut buf = vec![0u8; self.record_bytes() as usize];
        file.read_exact(&mut buf)?;
        let mut out = Vec::new();
        Self::decode(&buf, &mut out);
        Ok(out)
    }

    fn for_each(&self, mut f: impl FnMut(usize, &[Complex64])) -> io::Result<()> {
        let mut reader = BufReader::with_capacity(1 << 20, File::open(&self.path)?);
        reader.seek(SeekFrom::Start(HEADER_LEN))?;
        let mut buf = vec![0u8; self.record_bytes() as usize];
        let mut v = Vec::with_capacity(self.dim * self.dim);
        for k in 0..self.len {
            reader.read_exact(&mut buf)?;
            Self::decode(&buf, &mut v);
            f(k, &v);
        }
        Ok(())
    }
}

/// Header fields of a scratch file: `(version, D, K)`.
pub fn read_header(path: impl AsRef<Path>) -> io::Result<(u32, u32, u32)> {
    let mut file = File::open(path)?;
    let mut h = [0u8; HEADER_LEN as usize];
    file.read_exact(&mut h)?;
    if h[..4] != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not a KRYV scratch file"));
    }
    let word = |i: usize| u32::from_le_bytes(h[i..i + 4].try_into().unwrap());
    Ok((word(4), word(8), word(12)))
}
