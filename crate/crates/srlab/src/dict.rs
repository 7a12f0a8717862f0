//! Overcomplete dictionaries: random spherical codebooks, rate-parameterized
//! sizes, the orthonormal fixture, and a flat binary interchange format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive, sample_sphere_surface, Seed};
use crate::signal::Signal;

/// Default cap on dictionary storage, in bytes.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 * 1024 * 1024 * 1024;

const MAGIC: [u8; 4] = *b"SRLD";
const FORMAT_VERSION: u32 = 1;
const UNIT_NORM_TOL: f64 = 1e-12;

/// Dictionary size expressed as a rate: `M = round(2^(dim * rate))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSpec {
    dim: usize,
    rate: f64,
}

impl RateSpec {
    /// Creates a rate spec; `rate` is in bits per dimension and must be
    /// finite and nonnegative.
    pub fn new(dim: usize, rate: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParam("dimension must be positive".into()));
        }
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidParam(format!(
                "rate must be finite and nonnegative, got {rate}"
            )));
        }
        Ok(RateSpec { dim, rate })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Derived atom count `round(2^(dim * rate))`.
    pub fn size(&self) -> Result<u64> {
        let exact = (self.dim as f64 * self.rate).exp2();
        if !exact.is_finite() || exact >= u64::MAX as f64 {
            return Err(Error::InvalidParam(format!(
                "dictionary size 2^{} does not fit in u64",
                self.dim as f64 * self.rate
            )));
        }
        Ok(exact.round().max(1.0) as u64)
    }
}

/// Generation parameters carried alongside a dictionary and written to the
/// JSON sidecar on save.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DictionaryInfo {
    pub kind: String,
    pub dim: usize,
    pub len: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rate: Option<f64>,
}

/// An ordered collection of M atoms in R^n, stored densely atom by atom.
///
/// Atoms are unit-norm unless constructed through [`Dictionary::from_scaled_atoms`];
/// the flag is tracked so downstream code can skip normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    dim: usize,
    data: Vec<f64>,
    unit_atoms: bool,
    info: DictionaryInfo,
}

impl Dictionary {
    /// Builds a dictionary from explicit atoms, enforcing unit norms.
    pub fn from_atoms(atoms: &[Signal]) -> Result<Self> {
        let dict = Self::from_scaled_atoms(atoms)?;
        if !dict.unit_atoms {
            return Err(Error::InvalidParam(
                "atoms must have unit norm within 1e-12".into(),
            ));
        }
        Ok(dict)
    }

    /// Builds a dictionary from explicit atoms of arbitrary positive norm.
    pub fn from_scaled_atoms(atoms: &[Signal]) -> Result<Self> {
        let first = atoms.first().ok_or(Error::EmptyDictionary)?;
        let dim = first.dim();
        let mut data = Vec::with_capacity(dim * atoms.len());
        for atom in atoms {
            if atom.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: atom.dim(),
                });
            }
            if crate::signal::norm_sq(atom) == 0.0 {
                return Err(Error::InvalidParam("atoms must be nonzero".into()));
            }
            data.extend_from_slice(atom.values());
        }
        let info = DictionaryInfo {
            kind: "custom".into(),
            dim,
            len: atoms.len() as u64,
            seed: None,
            rate: None,
        };
        Ok(Self::assemble(dim, data, info))
    }

    fn assemble(dim: usize, data: Vec<f64>, info: DictionaryInfo) -> Self {
        let unit_atoms = data
            .chunks_exact(dim)
            .all(|atom| (crate::signal::norm_sq_slice(atom) - 1.0).abs() <= UNIT_NORM_TOL);
        Dictionary { dim, data, unit_atoms, info }
    }

    /// Number of atoms M.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Signal dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when every stored atom has unit norm within 1e-12.
    pub fn unit_atoms(&self) -> bool {
        self.unit_atoms
    }

    /// The atom at `index` as a raw slice of length `dim`.
    pub fn atom(&self, index: usize) -> &[f64] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    /// Generation parameters recorded at construction.
    pub fn info(&self) -> &DictionaryInfo {
        &self.info
    }

    /// Writes the atom data to `path` and generation parameters to a
    /// `<path>.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        for value in &self.data {
            out.write_all(&value.to_le_bytes())?;
        }
        out.flush()?;
        let sidecar = serde_json::to_string_pretty(&self.info)
            .map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(sidecar_path(path), sidecar)?;
        Ok(())
    }

    /// Reads a dictionary written by [`Dictionary::save`], enforcing the
    /// default memory budget. The sidecar is optional.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_budget(path, DEFAULT_MEMORY_BUDGET)
    }

    /// Reads a dictionary, rejecting files whose atom data exceeds `budget`
    /// bytes.
    pub fn load_with_budget(path: &Path, budget: u64) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::Format("bad magic, not a dictionary file".into()));
        }
        let version = read_u32(&mut input)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let dim = read_u32(&mut input)? as usize;
        let len = read_u64(&mut input)?;
        if dim == 0 || len == 0 {
            return Err(Error::Format("empty dictionary file".into()));
        }
        check_budget(dim, len, budget)?;
        let total = dim * len as usize;
        let mut data = Vec::with_capacity(total);
        let mut buf = [0u8; 8];
        for _ in 0..total {
            input.read_exact(&mut buf)?;
            let value = f64::from_le_bytes(buf);
            if !value.is_finite() {
                return Err(Error::Format("non-finite atom value".into()));
            }
            data.push(value);
        }
        let info = std::fs::read_to_string(sidecar_path(path))
            .ok()
            .and_then(|text| serde_json::from_str(&text).ok())
            .unwrap_or(DictionaryInfo {
                kind: "custom".into(),
                dim,
                len,
                seed: None,
                rate: None,
            });
        Ok(Self::assemble(dim, data, info))
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".json");
    PathBuf::from(name)
}

fn read_u32(input: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn check_budget(dim: usize, len: u64, budget: u64) -> Result<()> {
    let need = dim as u128 * len as u128 * 8;
    if need > budget as u128 {
        return Err(Error::SizeOverflow { need, budget });
    }
    Ok(())
}

/// Draws `len` independent atoms uniformly on the unit sphere surface.
pub fn random_dictionary(dim: usize, len: u64, seed: Seed) -> Result<Dictionary> {
    random_dictionary_with_budget(dim, len, seed, DEFAULT_MEMORY_BUDGET)
}

/// As [`random_dictionary`], with an explicit memory budget in bytes.
pub fn random_dictionary_with_budget(
    dim: usize,
    len: u64,
    seed: Seed,
    budget: u64,
) -> Result<Dictionary> {
    if dim == 0 {
        return Err(Error::InvalidParam("dimension must be positive".into()));
    }
    if len == 0 {
        return Err(Error::EmptyDictionary);
    }
    check_budget(dim, len, budget)?;
    let mut data = Vec::with_capacity(dim * len as usize);
    for index in 0..len {
        let atom = sample_sphere_surface(dim, derive(seed, index))?;
        data.extend_from_slice(atom.values());
    }
    let info = DictionaryInfo {
        kind: "random".into(),
        dim,
        len,
        seed: Some(seed.0),
        rate: None,
    };
    Ok(Dictionary::assemble(dim, data, info))
}

/// Draws a random dictionary whose size is derived from `spec`.
pub fn from_rate(spec: RateSpec, seed: Seed) -> Result<Dictionary> {
    from_rate_with_budget(spec, seed, DEFAULT_MEMORY_BUDGET)
}

/// As [`from_rate`], with an explicit memory budget in bytes.
pub fn from_rate_with_budget(spec: RateSpec, seed: Seed, budget: u64) -> Result<Dictionary> {
    let len = spec.size()?;
    let mut dict = random_dictionary_with_budget(spec.dim(), len, seed, budget)?;
    dict.info.kind = "rate".into();
    dict.info.rate = Some(spec.rate());
    Ok(dict)
}

/// The n standard basis vectors, the trivial complete dictionary.
pub fn orthonormal_dictionary(dim: usize) -> Dictionary {
    assert!(dim >= 1, "dimension must be positive");
    let mut data = vec![0.0; dim * dim];
    for i in 0..dim {
        data[i * dim + i] = 1.0;
    }
    let info = DictionaryInfo {
        kind: "orthonormal".into(),
        dim,
        len: dim as u64,
        seed: None,
        rate: None,
    };
    Dictionary::assemble(dim, data, info)
}
