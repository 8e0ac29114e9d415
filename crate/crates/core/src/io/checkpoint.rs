//! Binary checkpoints: a little-endian header followed by physical-space `f64`
//! payloads, x-fastest.
//!
//! ```text
//! "GEOL" | u32 version | u8 len, system tag | 3 x u32 dims | 3 x f64 lengths | f64 time
//! u32 field count | per field: u8 len, name, u64 value count | payloads in field order
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{SimState, SystemConfig};
use crate::pe::PeState;
use crate::sns::SnsState;
use crate::spectral::{Grid, PhysicalField, SpectralField, SymmetryClass};
use crate::tam::TamState;

pub const MAGIC: &[u8; 4] = b"GEOL";
pub const VERSION: u32 = 1;

/// Decoded checkpoint. Reading a written checkpoint reproduces it bitwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub system: String,
    pub dims: [u32; 3],
    pub lengths: [f64; 3],
    pub time: f64,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut out, &self.system);
        for d in self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for l in self.lengths {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&(self.fields.len() as u32).to_le_bytes());
        for (name, vals) in &self.fields {
            put_str(&mut out, name);
            out.extend_from_slice(&(vals.len() as u64).to_le_bytes());
        }
        for (_, vals) in &self.fields {
            for v in vals {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("bad magic, not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("format version {version}, expected {VERSION}")));
        }
        let system = r.string()?;
        let dims = [r.u32()?, r.u32()?, r.u32()?];
        let lengths = [r.f64()?, r.f64()?, r.f64()?];
        let time = r.f64()?;
        let count = r.u32()? as usize;
        let mut heads = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let name = r.string()?;
            let n = r.u64()? as usize;
            heads.push((name, n));
        }
        let mut fields = Vec::with_capacity(heads.len());
        for (name, n) in heads {
            let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("field too large".into()))?)?;
            let vals = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            fields.push((name, vals));
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self {
            system,
            dims,
            lengths,
            time,
            fields,
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        let [n1, n2, n3] = self.dims.map(|d| d as usize);
        let [l1, l2, l3] = self.lengths;
        if n3 == 1 {
            Grid::new2(l1, l2, n1, n2)
        } else {
            Grid::new3(l1, l2, l3, n1, n2, n3)
        }
    }

    fn field(&self, name: &str) -> Result<&[f64]> {
        self.fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Checkpoint(format!("missing field `{name}`")))
    }

    fn has(&self, name: &str) -> bool {
        self.fields.iter().any(|(n, _)| n == name)
    }

    pub fn from_state(state: &SimState) -> Self {
        let phys = |f: &SpectralField| f.to_physical();
        let (system, grid, t, fields): (&str, Grid, f64, Vec<(&str, Vec<f64>)>) = match state {
            SimState::Sns(s) => (
                "sns",
                *s.w.grid(),
                s.t,
                vec![("v1", phys(&s.v[0])), ("v2", phys(&s.v[1])), ("w", phys(&s.w)), ("p", phys(&s.p))],
            ),
            SimState::Pe(s) => {
                let mut f = vec![("v1", phys(&s.v[0])), ("v2", phys(&s.v[1]))];
                if let Some(t) = &s.temp {
                    f.push(("T", phys(t)));
                }
                f.push(("w", phys(&s.w)));
                f.push(("p_surface", phys(&s.p_surface)));
                ("pe", *s.w.grid(), s.t, f)
            }
            SimState::Tam(s) => (
                "tam",
                s.qe.grid,
                s.t,
                vec![
                    ("u1", phys(&s.u[0])),
                    ("u2", phys(&s.u[1])),
                    ("v1", phys(&s.v[0])),
                    ("v2", phys(&s.v[1])),
                    ("T_e", phys(&s.te)),
                    ("q_e", s.qe.values.clone()),
                ],
            ),
        };
        Self {
            system: system.to_string(),
            dims: grid.dims.map(|d| d as u32),
            lengths: grid.lengths,
            time: t,
            fields: fields.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
        }
    }

    /// Rebuilds the solver state; spectral fields are re-analysed from the grid values.
    pub fn to_state(&self) -> Result<SimState> {
        let g = self.grid()?;
        let spec = |name: &str, sym: SymmetryClass| -> Result<SpectralField> {
            let vals = self.field(name)?;
            let grid = if name == "p_surface" { g.horizontal() } else { g };
            SpectralField::from_physical(grid, vals, sym)
                .map_err(|e| Error::Checkpoint(format!("field `{name}`: {e}")))
        };
        let (even, odd, none) = (SymmetryClass::EvenInZ, SymmetryClass::OddInZ, SymmetryClass::NoSymmetry);
        Ok(match self.system.as_str() {
            "sns" => SimState::Sns(SnsState {
                v: [spec("v1", even)?, spec("v2", even)?],
                w: spec("w", odd)?,
                p: spec("p", even)?,
                t: self.time,
            }),
            "pe" => SimState::Pe(PeState {
                v: [spec("v1", even)?, spec("v2", even)?],
                temp: if self.has("T") { Some(spec("T", odd)?) } else { None },
                w: spec("w", odd)?,
                p_surface: spec("p_surface", none)?,
                t: self.time,
            }),
            "tam" => SimState::Tam(TamState {
                u: [spec("u1", none)?, spec("u2", none)?],
                v: [spec("v1", none)?, spec("v2", none)?],
                te: spec("T_e", none)?,
                qe: PhysicalField::new(g, self.field("q_e")?.to_vec())
                    .map_err(|e| Error::Checkpoint(format!("field `q_e`: {e}")))?,
                t: self.time,
            }),
            other => return Err(Error::Checkpoint(format!("unknown system tag `{other}`"))),
        })
    }

    /// Checks the tag and grid against a run configuration.
    pub fn check_against(&self, system: &SystemConfig) -> Result<()> {
        if self.system != system.tag() {
            return Err(Error::Checkpoint(format!(
                "system tag mismatch: checkpoint holds `{}`, run is `{}`",
                self.system,
                system.tag()
            )));
        }
        let g = system.grid();
        if self.dims != g.dims.map(|d| d as u32) {
            return Err(Error::Checkpoint(format!(
                "grid mismatch: checkpoint {:?}, config {:?}",
                self.dims, g.dims
            )));
        }
        Ok(())
    }
}

pub fn write_checkpoint(state: &SimState, path: &Path) -> Result<()> {
    fs::write(path, Checkpoint::from_state(state).to_bytes())?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&fs::read(path)?)
}

/// Reads a checkpoint for a run of `system`, validating tag and grid.
pub fn read_state_for(path: &Path, system: &SystemConfig) -> Result<SimState> {
    let ck = read_checkpoint(path)?;
    ck.check_against(system)?;
    ck.to_state()
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    let b = s.as_bytes();
    out.push(b.len().min(255) as u8);
    out.extend_from_slice(&b[..b.len().min(255)]);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated file: needed {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.take(1)?[0] as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Checkpoint("non-UTF-8 name".into()))
    }
}
