//! Minimal RIFF/WAVE reader and 16-bit writer.

use std::fs;
use std::path::Path;

use super::AudioBuffer;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct Fmt {
    code: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn chunk_name(id: &[u8]) -> String {
    String::from_utf8_lossy(id).trim_end().to_string()
}

/// Reads a WAV file, downmixing all channels to one by averaging each frame.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    decode_wav(&bytes)
}

/// [`load_wav`] on an in-memory byte stream.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::format("RIFF", "missing RIFF/WAVE signature"));
    }
    let mut fmt: Option<Fmt> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let remaining = bytes.len() - body_start;
        if size > remaining {
            return Err(Error::format(
                &chunk_name(id),
                format!("truncated: declares {size} bytes, {remaining} present"),
            ));
        }
        let body = &bytes[body_start..body_start + size];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are padded to even length.
        at = body_start + size + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| Error::format("fmt", "no fmt chunk"))?;
    let data = data.ok_or_else(|| Error::format("data", "no data chunk"))?;
    let align = usize::from(fmt.block_align);
    if data.len() < align {
        return Err(Error::format("data", "no sample frames"));
    }
    if data.len() % align != 0 {
        return Err(Error::format(
            "data",
            format!(
                "{} bytes is not a whole number of {align}-byte frames",
                data.len()
            ),
        ));
    }
    let channels = usize::from(fmt.channels);
    let width = usize::from(fmt.bits / 8);
    let mut samples = Vec::with_capacity(data.len() / align);
    for frame in data.chunks_exact(align) {
        let mut acc = 0.0;
        for c in 0..channels {
            acc += decode_sample(&frame[c * width..(c + 1) * width], &fmt)?;
        }
        samples.push(acc / channels as f64);
    }
    AudioBuffer::new(samples, fmt.sample_rate)
}

fn parse_fmt(body: &[u8]) -> Result<Fmt> {
    if body.len() < 16 {
        return Err(Error::format(
            "fmt",
            format!("{} bytes, need at least 16", body.len()),
        ));
    }
    let mut code = u16_at(body, 0);
    if code == FORMAT_EXTENSIBLE {
        if body.len() < 26 {
            return Err(Error::format("fmt", "extensible format without sub-format"));
        }
        code = u16_at(body, 24);
    }
    let fmt = Fmt {
        code,
        channels: u16_at(body, 2),
        sample_rate: u32_at(body, 4),
        block_align: u16_at(body, 12),
        bits: u16_at(body, 14),
    };
    let supported = match fmt.code {
        FORMAT_PCM => matches!(fmt.bits, 16 | 24 | 32),
        FORMAT_FLOAT => fmt.bits == 32,
        other => {
            return Err(Error::format("fmt", format!("unknown format code {other}")));
        }
    };
    if !supported {
        return Err(Error::format(
            "fmt",
            format!(
                "unsupported sample width {} bits for format code {}",
                fmt.bits, fmt.code
            ),
        ));
    }
    if fmt.channels == 0 {
        return Err(Error::format("fmt", "zero channels"));
    }
    if fmt.sample_rate == 0 {
        return Err(Error::format("fmt", "zero sample rate"));
    }
    if usize::from(fmt.block_align) != usize::from(fmt.channels) * usize::from(fmt.bits / 8) {
        return Err(Error::format(
            "fmt",
            format!(
                "block align {} does not match {} channels of {} bits",
                fmt.block_align, fmt.channels, fmt.bits
            ),
        ));
    }
    Ok(fmt)
}

fn decode_sample(b: &[u8], fmt: &Fmt) -> Result<f64> {
    Ok(match (fmt.code, fmt.bits) {
        (FORMAT_PCM, 16) => f64::from(i16::from_le_bytes([b[0], b[1]])) / 32768.0,
        (FORMAT_PCM, 24) => {
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            f64::from(v) / 8_388_608.0
        }
        (FORMAT_PCM, 32) => {
            f64::from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])) / 2_147_483_648.0
        }
        _ => {
            let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if !v.is_finite() {
                return Err(Error::format("data", "non-finite floating-point sample"));
            }
            // Float streams may overshoot full scale.
            f64::from(v).clamp(-1.0, 1.0)
        }
    })
}

/// Quantizes a sample as `round(x·32767)`, clamped to the 16-bit range.
pub fn quantize16(x: f64) -> i16 {
    (x * 32767.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Mono 16-bit PCM bytes of a buffer.
pub fn encode_wav16(buffer: &AudioBuffer) -> Vec<u8> {
    let data_len = buffer.samples().len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&buffer.sample_rate().to_le_bytes());
    out.extend_from_slice(&(buffer.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &x in buffer.samples() {
        out.extend_from_slice(&quantize16(x).to_le_bytes());
    }
    out
}

/// Writes `buffer` as mono PCM. Only 16-bit output is supported.
pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>, bit_depth: u16) -> Result<()> {
    if bit_depth != 16 {
        return Err(Error::domain(format!(
            "only 16-bit output is supported, got {bit_depth}"
        )));
    }
    let path = path.as_ref();
    fs::write(path, encode_wav16(buffer)).map_err(|e| io_error(path, e))
}
