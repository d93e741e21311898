//! Binary full-trace files.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes      | content                                   |
//! |------------|-------------------------------------------|
//! | 8          | magic `XPMTRACE`                          |
//! | 4          | format version (u32, currently 1)         |
//! | 8          | sample rate in Hz (f64)                   |
//! | 8          | sample count N (u64)                      |
//! | 4          | metadata key length K (u32)               |
//! | K          | metadata key, UTF-8                       |
//! | 16·N       | ρ as (re, im) f64 pairs                   |
//! | N          | valid mask, one byte per sample (0 or 1)  |

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::link::ResidualDispersion;
use crate::noise::trace::{rho_phase, PumpTag, TraceMetadata, XpmNoiseTrace};

pub const MAGIC: &[u8; 8] = b"XPMTRACE";
pub const VERSION: u32 = 1;

/// `d=<map>;s=<seed>;pumps=<Δf>@<P>,...` with `-` standing for an unknown field.
pub fn metadata_key(m: &TraceMetadata) -> String {
    let map = m
        .d_res_il
        .map(|d| d.to_string())
        .unwrap_or_else(|| "-".into());
    let seed = m.seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
    let pumps: Vec<String> = m
        .pumps
        .iter()
        .map(|p| format!("{:.8e}@{:.8e}", p.delta_f, p.p_pump_dbm))
        .collect();
    format!("d={map};s={seed};pumps={}", pumps.join(","))
}

pub fn parse_metadata_key(key: &str) -> Result<TraceMetadata> {
    let bad = || Error::Format(format!("malformed trace metadata key '{key}'"));
    let mut m = TraceMetadata::default();
    for part in key.split(';') {
        let (name, value) = part.split_once('=').ok_or_else(bad)?;
        match name {
            "d" if value != "-" => m.d_res_il = Some(value.parse::<ResidualDispersion>()?),
            "s" if value != "-" => m.seed = Some(value.parse().map_err(|_| bad())?),
            "d" | "s" => {}
            "pumps" => {
                for p in value.split(',').filter(|p| !p.is_empty()) {
                    let (f, pw) = p.split_once('@').ok_or_else(bad)?;
                    m.pumps.push(PumpTag {
                        delta_f: f.parse().map_err(|_| bad())?,
                        p_pump_dbm: pw.parse().map_err(|_| bad())?,
                    });
                }
            }
            _ => return Err(bad()),
        }
    }
    Ok(m)
}

/// File name for a trace: the metadata key with path-hostile characters replaced.
pub fn trace_file_name(m: &TraceMetadata) -> String {
    let safe: String = metadata_key(m)
        .chars()
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '-' | '+' | '_' => c,
            '@' => '~',
            _ => '_',
        })
        .collect();
    format!("{safe}.xpmtrace")
}

pub fn encode_trace(trace: &XpmNoiseTrace) -> Vec<u8> {
    let key = metadata_key(&trace.metadata);
    let n = trace.len();
    let mut out = Vec::with_capacity(32 + key.len() + 17 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&trace.sample_rate.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(key.len() as u32).to_le_bytes());
    out.extend_from_slice(key.as_bytes());
    for r in &trace.rho {
        out.extend_from_slice(&r.re.to_le_bytes());
        out.extend_from_slice(&r.im.to_le_bytes());
    }
    out.extend(trace.valid.iter().map(|&v| v as u8));
    out
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format("trace file ends early".into()))?;
    Ok(buf)
}

/// Rebuilds a trace from its file bytes: n = |ρ|, φ = unwrapped arg ρ (see [`rho_phase`]).
pub fn decode_trace(bytes: &[u8]) -> Result<XpmNoiseTrace> {
    let mut r = bytes;
    if &take::<8>(&mut r)? != MAGIC {
        return Err(Error::Format("not a trace file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported trace format version {version}"
        )));
    }
    let sample_rate = f64::from_le_bytes(take(&mut r)?);
    let n = u64::from_le_bytes(take(&mut r)?) as usize;
    let key_len = u32::from_le_bytes(take(&mut r)?) as usize;
    if r.len() != key_len + 17 * n {
        return Err(Error::Format(format!(
            "trace body is {} bytes, header implies {}",
            r.len(),
            key_len + 17 * n
        )));
    }
    let key = std::str::from_utf8(&r[..key_len]).map_err(|e| Error::Format(e.to_string()))?;
    let metadata = parse_metadata_key(key)?;
    r = &r[key_len..];
    let mut rho = Vec::with_capacity(n);
    for _ in 0..n {
        let re = f64::from_le_bytes(take(&mut r)?);
        let im = f64::from_le_bytes(take(&mut r)?);
        rho.push(Complex64::new(re, im));
    }
    let valid = r.iter().map(|&b| b != 0).collect();
    let amplitude = rho.iter().map(|x| x.norm()).collect();
    let phase = rho_phase(&rho, sample_rate);
    XpmNoiseTrace::from_polar(sample_rate, amplitude, phase, valid, metadata)
}

pub fn write_trace(path: &Path, trace: &XpmNoiseTrace) -> Result<()> {
    let tmp = path.with_extension("xpmtrace.tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&encode_trace(trace))?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<XpmNoiseTrace> {
    decode_trace(&fs::read(path)?)
}
