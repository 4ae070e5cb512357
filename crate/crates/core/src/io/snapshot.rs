//! Binary field snapshots.
//!
//! Layout: `b"SGLS"`, format version (u32 little-endian), byte-order flag
//! (0 little, 1 big), then `nx`, `ny`, `|K|`, component count as u64 and `t`
//! as f64 in that byte order, then the f64 payload indexed
//! `((j·nx + i)·components + c)·|K| + k`. Component 0 is `φ̂`, components
//! `1..` are the gradient blocks `û_1, û_2`.

use std::fs;
use std::path::Path;

use super::IoError;
use crate::algebra::GpcVector;
use crate::flux::GradState;
use crate::solver::SolverState;

pub const MAGIC: &[u8; 4] = b"SGLS";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 4 * 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ByteOrder {
    #[default]
    Little,
    Big,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub nx: usize,
    pub ny: usize,
    pub modes: usize,
    pub components: usize,
    pub payload: Vec<f64>,
}

impl FieldSnapshot {
    pub fn new(t: f64, nx: usize, ny: usize, modes: usize, components: usize, payload: Vec<f64>) -> Result<Self, IoError> {
        let s = Self {
            t,
            nx,
            ny,
            modes,
            components,
            payload,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), IoError> {
        let expected = self.expected_len()?;
        if self.payload.len() != expected {
            return Err(IoError::SizeMismatch {
                expected,
                got: self.payload.len(),
            });
        }
        if !self.t.is_finite() || self.payload.iter().any(|x| !x.is_finite()) {
            return Err(IoError::Format("snapshot contains non-finite values".into()));
        }
        Ok(())
    }

    fn expected_len(&self) -> Result<usize, IoError> {
        self.nx
            .checked_mul(self.ny)
            .and_then(|n| n.checked_mul(self.modes))
            .and_then(|n| n.checked_mul(self.components))
            .ok_or_else(|| IoError::Format("layout overflows".into()))
    }

    /// Fields of a solver state.
    pub fn from_state(state: &SolverState) -> Self {
        let g = &state.grid;
        let modes = state.phi_field.first().map_or(0, |p| p.len());
        let components = 1 + g.dims;
        let mut payload = Vec::with_capacity(g.n_cells() * components * modes);
        for c in 0..g.n_cells() {
            payload.extend_from_slice(state.phi_field[c].as_slice());
            for a in 0..g.dims {
                payload.extend_from_slice(state.u_field[c].component(a).as_slice());
            }
        }
        Self {
            t: state.t,
            nx: g.nx,
            ny: if g.dims == 2 { g.ny } else { 1 },
            modes,
            components,
            payload,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Modes of component `comp` in cell `cell`.
    pub fn slot(&self, cell: usize, comp: usize) -> &[f64] {
        let start = (cell * self.components + comp) * self.modes;
        &self.payload[start..start + self.modes]
    }

    pub fn phi_field(&self) -> Vec<GpcVector> {
        (0..self.n_cells()).map(|c| GpcVector::new(self.slot(c, 0).to_vec())).collect()
    }

    pub fn u_field(&self) -> Vec<GradState> {
        (0..self.n_cells())
            .map(|c| {
                GradState::from_components((1..self.components).map(|k| GpcVector::new(self.slot(c, k).to_vec())).collect())
            })
            .collect()
    }

    pub fn to_bytes(&self, order: ByteOrder) -> Result<Vec<u8>, IoError> {
        self.validate()?;
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(match order {
            ByteOrder::Little => 0,
            ByteOrder::Big => 1,
        });
        let u64_bytes = |x: u64| match order {
            ByteOrder::Little => x.to_le_bytes(),
            ByteOrder::Big => x.to_be_bytes(),
        };
        let f64_bytes = |x: f64| match order {
            ByteOrder::Little => x.to_le_bytes(),
            ByteOrder::Big => x.to_be_bytes(),
        };
        for n in [self.nx, self.ny, self.modes, self.components] {
            out.extend_from_slice(&u64_bytes(n as u64));
        }
        out.extend_from_slice(&f64_bytes(self.t));
        for &x in &self.payload {
            out.extend_from_slice(&f64_bytes(x));
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IoError> {
        if bytes.len() < HEADER_LEN {
            return Err(IoError::SizeMismatch {
                expected: HEADER_LEN,
                got: bytes.len(),
            });
        }
        if &bytes[..4] != MAGIC {
            return Err(IoError::Format("missing SGLS magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(IoError::Format(format!("unsupported format version {version}")));
        }
        let order = match bytes[8] {
            0 => ByteOrder::Little,
            1 => ByteOrder::Big,
            b => return Err(IoError::Format(format!("invalid byte-order flag {b}"))),
        };
        let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8 bytes") };
        let read_u64 = |i: usize| match order {
            ByteOrder::Little => u64::from_le_bytes(word(i)),
            ByteOrder::Big => u64::from_be_bytes(word(i)),
        };
        let read_f64 = |i: usize| match order {
            ByteOrder::Little => f64::from_le_bytes(word(i)),
            ByteOrder::Big => f64::from_be_bytes(word(i)),
        };
        let dims: Vec<usize> = (0..4)
            .map(|k| usize::try_from(read_u64(9 + 8 * k)))
            .collect::<Result<_, _>>()
            .map_err(|_| IoError::Format("layout does not fit in memory".into()))?;
        let mut s = Self {
            t: read_f64(41),
            nx: dims[0],
            ny: dims[1],
            modes: dims[2],
            components: dims[3],
            payload: Vec::new(),
        };
        let expected = s
            .expected_len()?
            .checked_mul(8)
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or_else(|| IoError::Format("layout overflows".into()))?;
        if bytes.len() != expected {
            return Err(IoError::SizeMismatch {
                expected,
                got: bytes.len(),
            });
        }
        s.payload = (HEADER_LEN..bytes.len()).step_by(8).map(read_f64).collect();
        s.validate()?;
        Ok(s)
    }
}

pub fn write_snapshot(path: &Path, snapshot: &FieldSnapshot) -> Result<(), IoError> {
    fs::write(path, snapshot.to_bytes(ByteOrder::Little)?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<FieldSnapshot, IoError> {
    FieldSnapshot::from_bytes(&fs::read(path)?)
}

/// Plain-text 1D slice along `x`: one row per cell with the cell center and
/// every mode of every component.
pub fn write_csv_slice(path: &Path, snapshot: &FieldSnapshot, x0: f64, dx: f64, row: usize) -> Result<(), IoError> {
    if row >= snapshot.ny {
        return Err(IoError::Format(format!("row {row} outside 0..{}", snapshot.ny)));
    }
    let mut out = String::from("x");
    for c in 0..snapshot.components {
        let name = if c == 0 { "phi".to_string() } else { format!("u{c}") };
        for k in 0..snapshot.modes {
            out.push_str(&format!(",{name}_{k}"));
        }
    }
    out.push('\n');
    for i in 0..snapshot.nx {
        out.push_str(&format!("{:?}", x0 + i as f64 * dx));
        let cell = row * snapshot.nx + i;
        for c in 0..snapshot.components {
            for v in snapshot.slot(cell, c) {
                out.push_str(&format!(",{v:?}"));
            }
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
