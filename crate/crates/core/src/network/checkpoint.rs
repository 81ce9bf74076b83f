//! Binary parameter files.
//!
//! Layout, all little-endian: magic `PFNN` + version byte `1`, `u32` layer
//! count, one `u32` per layer size, `u64` seed, `u64` step, then the flat
//! parameters as `f64`.

use std::io::{Read, Write};

use super::{MlpArchitecture, MlpParams, NetworkError};

const MAGIC: &[u8; 5] = b"PFNN\x01";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: MlpParams,
    pub step: u64,
}

pub fn write_checkpoint<W: Write>(mut out: W, params: &MlpParams, step: u64) -> Result<(), NetworkError> {
    out.write_all(MAGIC)?;
    let sizes = &params.arch.layer_sizes;
    out.write_all(&(sizes.len() as u32).to_le_bytes())?;
    for &s in sizes {
        out.write_all(&(s as u32).to_le_bytes())?;
    }
    out.write_all(&params.seed.to_le_bytes())?;
    out.write_all(&step.to_le_bytes())?;
    for v in params.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], NetworkError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| NetworkError::Checkpoint(format!("truncated file: {e}")))?;
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint, NetworkError> {
    if &take::<5, _>(&mut r)? != MAGIC {
        return Err(NetworkError::Checkpoint("bad magic".into()));
    }
    let n = u32::from_le_bytes(take(&mut r)?) as usize;
    if n > 1024 {
        return Err(NetworkError::Checkpoint(format!("implausible layer count {n}")));
    }
    let sizes = (0..n)
        .map(|_| Ok(u32::from_le_bytes(take(&mut r)?) as usize))
        .collect::<Result<Vec<_>, NetworkError>>()?;
    let arch = MlpArchitecture::new(sizes)?;
    let seed = u64::from_le_bytes(take(&mut r)?);
    let step = u64::from_le_bytes(take(&mut r)?);
    let values = (0..arch.n_params())
        .map(|_| Ok(f64::from_le_bytes(take(&mut r)?)))
        .collect::<Result<Vec<_>, NetworkError>>()?;
    let mut params = MlpParams::from_values(arch, values)?;
    params.seed = seed;
    Ok(Checkpoint { params, step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_xavier;

    #[test]
    fn round_trip_is_bitwise() {
        let p = init_xavier(&MlpArchitecture::new(vec![2, 7, 3]).unwrap(), 11);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &p, 4).unwrap();
        assert_eq!(buf.len(), 5 + 4 + 12 + 16 + 8 * p.values().len());
        let c = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(c.step, 4);
        assert_eq!(c.params, p);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_checkpoint(&b"nope"[..]), Err(NetworkError::Checkpoint(_))));
        let p = init_xavier(&MlpArchitecture::new(vec![1, 2, 2]).unwrap(), 0);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &p, 0).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_checkpoint(&buf[..]).is_err());
    }
}
