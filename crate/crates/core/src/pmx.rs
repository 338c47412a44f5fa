//! Process file format.
//!
//! ```text
//! b"PMX1\n" | header length (u32 LE) | JSON header | entries
//! ```
//!
//! The header holds the label table (`name`, `dim`, `role`), the matrix side
//! and an optional free-form `config` object. Entries are the row-major
//! matrix as interleaved `(re, im)` little-endian `f64` pairs, so a round
//! trip is bit exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::process::ProcessMatrix;
use crate::tensor::{LabeledOperator, Mat, SystemLabel, C64, MAX_SIDE};

pub const MAGIC: &[u8; 5] = b"PMX1\n";
const MAX_HEADER: u32 = 1 << 20;

#[derive(Serialize, Deserialize)]
struct Header {
    systems: Vec<SystemLabel>,
    side: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<Value>,
}

pub fn write_operator<W: Write>(mut out: W, op: &LabeledOperator, config: Option<&Value>) -> Result<()> {
    let header = Header {
        systems: op.systems().to_vec(),
        side: op.side(),
        config: config.cloned(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(MAGIC.len() + 4 + json.len() + op.side() * op.side() * 16);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    let m = op.matrix();
    for i in 0..op.side() {
        for j in 0..op.side() {
            buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads an operator and its embedded config. Shape and labels are checked;
/// physical validity is not.
pub fn read_operator<R: Read>(mut input: R) -> Result<(LabeledOperator, Option<Value>)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let fail = |msg: &str| Error::Format(msg.to_string());
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(fail("missing PMX1 magic"));
    }
    let mut len = [0u8; 4];
    len.copy_from_slice(&bytes[MAGIC.len()..MAGIC.len() + 4]);
    let hlen = u32::from_le_bytes(len);
    if hlen > MAX_HEADER {
        return Err(fail("header too long"));
    }
    let start = MAGIC.len() + 4;
    let end = start + hlen as usize;
    if bytes.len() < end {
        return Err(fail("truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[start..end])?;
    let systems = header
        .systems
        .into_iter()
        .map(|s| SystemLabel::new(s.name(), s.dim(), s.role()))
        .collect::<Result<Vec<_>>>()?;
    let side: usize = systems.iter().map(SystemLabel::dim).product();
    if side != header.side {
        return Err(Error::ShapeMismatch {
            expected: side,
            found: header.side,
        });
    }
    if side > MAX_SIDE {
        return Err(Error::TooLarge(side));
    }
    let body = &bytes[end..];
    if body.len() != side * side * 16 {
        return Err(fail(&format!(
            "expected {} entry bytes, found {}",
            side * side * 16,
            body.len()
        )));
    }
    let f = |k: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&body[k * 8..k * 8 + 8]);
        f64::from_le_bytes(b)
    };
    let m = Mat::from_fn(side, side, |i, j| {
        let k = 2 * (i * side + j);
        C64::new(f(k), f(k + 1))
    });
    Ok((LabeledOperator::new(systems, m)?, header.config))
}

pub fn save_process(path: &Path, w: &ProcessMatrix, config: Option<&Value>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_operator(std::io::BufWriter::new(file), w.op(), config)
}

pub fn load_process(path: &Path) -> Result<(ProcessMatrix, Option<Value>)> {
    let file = std::fs::File::open(path)?;
    let (op, config) = read_operator(std::io::BufReader::new(file))?;
    Ok((ProcessMatrix::new(op)?, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::partial_swap;

    #[test]
    fn round_trip_is_bit_exact() {
        let w = partial_swap(0.3, 2).unwrap().process().clone();
        let cfg = serde_json::json!({"family": "partial-swap", "p": 0.3});
        let mut buf = Vec::new();
        write_operator(&mut buf, w.op(), Some(&cfg)).unwrap();
        let (op, back_cfg) = read_operator(&buf[..]).unwrap();
        assert_eq!(back_cfg, Some(cfg));
        assert_eq!(op.systems(), w.op().systems());
        for (a, b) in op.matrix().iter().zip(w.op().matrix().iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let w = partial_swap(0.3, 2).unwrap().process().clone();
        let mut buf = Vec::new();
        write_operator(&mut buf, w.op(), None).unwrap();
        assert!(matches!(read_operator(&buf[..buf.len() - 1]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'Q';
        assert!(matches!(read_operator(&bad[..]), Err(Error::Format(_))));
        assert!(read_operator(&b"PMX1\n\x05\x00\x00\x00{oops"[..]).is_err());
    }
}
