//! Network serialization: a text format with an architecture header and one
//! parameter per line, and a little-endian binary twin.

use std::io::{BufRead, Read, Write};

use super::{NetworkArch, NetworkState};
use crate::{Error, Result};

const TEXT_MAGIC: &str = "# sine-mlp v1";
const BIN_MAGIC: &[u8; 8] = b"SINEMLP1";

pub fn write_text<W: Write>(state: &NetworkState, mut w: W) -> Result<()> {
    writeln!(w, "{TEXT_MAGIC}")?;
    writeln!(w, "activation sine")?;
    writeln!(w, "state_dim {}", state.arch.state_dim)?;
    let widths: Vec<String> = state.arch.hidden.iter().map(|h| h.to_string()).collect();
    writeln!(w, "hidden {}", widths.join(" "))?;
    writeln!(w, "params {}", state.params.len())?;
    for p in &state.params {
        // `{:e}` prints the shortest representation that round-trips.
        writeln!(w, "{p:e}")?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<NetworkState> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines.next().ok_or_else(|| Error::Parse("truncated network file".into()))?.map_err(Error::from)
    };
    if next()?.trim() != TEXT_MAGIC {
        return Err(Error::Parse("not a sine-mlp text file".into()));
    }
    let field = |line: String, key: &str| -> Result<String> {
        line.strip_prefix(key)
            .map(|s| s.trim().to_string())
            .ok_or_else(|| Error::Parse(format!("expected `{key}`, got `{line}`")))
    };
    if field(next()?, "activation")? != "sine" {
        return Err(Error::Parse("unsupported activation".into()));
    }
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}")));
    let state_dim = parse_usize(&field(next()?, "state_dim")?)?;
    let hidden = field(next()?, "hidden")?
        .split_whitespace()
        .map(parse_usize)
        .collect::<Result<Vec<_>>>()?;
    let n = parse_usize(&field(next()?, "params")?)?;
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        let line = next()?;
        params.push(line.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{line}: {e}")))?);
    }
    NetworkState::from_params(NetworkArch::new(state_dim, hidden)?, params)
}

pub fn write_binary<W: Write>(state: &NetworkState, mut w: W) -> Result<()> {
    w.write_all(BIN_MAGIC)?;
    w.write_all(&(state.arch.state_dim as u32).to_le_bytes())?;
    w.write_all(&(state.arch.hidden.len() as u32).to_le_bytes())?;
    for h in &state.arch.hidden {
        w.write_all(&(*h as u32).to_le_bytes())?;
    }
    w.write_all(&(state.params.len() as u64).to_le_bytes())?;
    for p in &state.params {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<NetworkState> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BIN_MAGIC {
        return Err(Error::Parse("not a sine-mlp binary file".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut R| -> Result<usize> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf) as usize)
    };
    let state_dim = read_u32(&mut r)?;
    let layers = read_u32(&mut r)?;
    let hidden = (0..layers).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let n = u64::from_le_bytes(u64buf) as usize;
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut u64buf)?;
        params.push(f64::from_le_bytes(u64buf));
    }
    NetworkState::from_params(NetworkArch::new(state_dim, hidden)?, params)
}
