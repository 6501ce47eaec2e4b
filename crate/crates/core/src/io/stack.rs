//! `WSOPLANE 1 <width> <height>\n` followed by row-major little-endian f32,
//! and a text manifest tying the planes of a stack together.

use std::path::{Path, PathBuf};

use super::{expect_schema, read_bytes, read_text, write_bytes, IoError};
use crate::phantom::{ContrastStack, Mask, Plane};

const STACK_SCHEMA: &str = "wso-stack/1";
const MASKS: [&str; 5] = ["brain", "ce", "ne", "necrosis", "contralateral"];

pub fn encode_plane(p: &Plane) -> Vec<u8> {
    let mut out = format!("WSOPLANE 1 {} {}\n", p.width(), p.height()).into_bytes();
    for v in p.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_plane(bytes: &[u8], context: &str) -> Result<Plane, IoError> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| IoError::parse(context, 1, "missing header"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| IoError::parse(context, 1, "header is not text"))?;
    let parts: Vec<&str> = header.split(' ').collect();
    if parts.len() != 4 || parts[0] != "WSOPLANE" {
        return Err(IoError::parse(context, 1, format!("bad header {header:?}")));
    }
    if parts[1] != "1" {
        return Err(IoError::Schema { context: context.into(), expected: "WSOPLANE 1".into(), found: format!("WSOPLANE {}", parts[1]) });
    }
    let dim = |s: &str| s.parse::<usize>().map_err(|_| IoError::parse(context, 1, format!("bad size {s:?}")));
    let (w, h) = (dim(parts[2])?, dim(parts[3])?);
    let payload = &bytes[nl + 1..];
    if payload.len() != 4 * w * h {
        return Err(IoError::parse(context, 1, format!("expected {} payload bytes, found {}", 4 * w * h, payload.len())));
    }
    let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok(Plane::from_vec(w, h, data).expect("size checked"))
}

pub fn write_plane(path: &Path, p: &Plane) -> Result<(), IoError> {
    write_bytes(path, &encode_plane(p))
}

pub fn read_plane(path: &Path) -> Result<Plane, IoError> {
    decode_plane(&read_bytes(path)?, &path.display().to_string())
}

/// Writes every plane next to `stack.manifest` in `dir`; returns the
/// manifest path. Lines are `<kind> <name> <file>`.
pub fn write_stack(dir: &Path, stack: &ContrastStack) -> Result<PathBuf, IoError> {
    let mut manifest = format!("# schema: {STACK_SCHEMA}\nsize {} {}\n", stack.width(), stack.height());
    for (i, (name, plane)) in stack.names.iter().zip(&stack.channels).enumerate() {
        let file = format!("channel_{i}.plane");
        write_plane(&dir.join(&file), plane)?;
        manifest.push_str(&format!("channel {name} {file}\n"));
    }
    let masks = [&stack.brain, &stack.ce, &stack.ne, &stack.necrosis, &stack.contralateral];
    for (name, mask) in MASKS.iter().zip(masks) {
        let file = format!("mask_{name}.plane");
        write_plane(&dir.join(&file), &mask.to_plane())?;
        manifest.push_str(&format!("mask {name} {file}\n"));
    }
    for (gene, plane) in &stack.truth {
        let file = format!("truth_{gene}.plane");
        write_plane(&dir.join(&file), plane)?;
        manifest.push_str(&format!("truth {gene} {file}\n"));
    }
    let path = dir.join("stack.manifest");
    write_bytes(&path, manifest.as_bytes())?;
    Ok(path)
}

/// Reads a manifest; plane paths are relative to its directory.
pub fn read_stack(manifest: &Path) -> Result<ContrastStack, IoError> {
    let ctx = manifest.display().to_string();
    let text = read_text(manifest)?;
    expect_schema(&ctx, &text, STACK_SCHEMA)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut size = None;
    let mut names = Vec::new();
    let mut channels = Vec::new();
    let mut masks: Vec<Option<Mask>> = vec![None; MASKS.len()];
    let mut truth = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(IoError::parse(&ctx, n, format!("expected 3 fields, found {}", parts.len())));
        }
        if parts[0] == "size" {
            let dim = |s: &str| s.parse::<usize>().map_err(|_| IoError::parse(&ctx, n, format!("bad size {s:?}")));
            size = Some((dim(parts[1])?, dim(parts[2])?));
            continue;
        }
        let (w, h) = size.ok_or_else(|| IoError::parse(&ctx, n, "size must come first"))?;
        let plane = read_plane(&base.join(parts[2]))?;
        if plane.width() != w || plane.height() != h {
            return Err(IoError::parse(&ctx, n, format!("{} is {}x{}, expected {w}x{h}", parts[2], plane.width(), plane.height())));
        }
        match parts[0] {
            "channel" => {
                names.push(parts[1].to_string());
                channels.push(plane);
            }
            "mask" => {
                let k = MASKS.iter().position(|&m| m == parts[1]).ok_or_else(|| IoError::parse(&ctx, n, format!("unknown mask {:?}", parts[1])))?;
                if plane.data().iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(IoError::parse(&ctx, n, format!("mask {} is not 0/1", parts[1])));
                }
                masks[k] = Some(Mask::from_plane(&plane));
            }
            "truth" => truth.push((parts[1].to_string(), plane)),
            other => return Err(IoError::parse(&ctx, n, format!("unknown entry kind {other:?}"))),
        }
    }
    let (w, h) = size.ok_or_else(|| IoError::parse(&ctx, 1, "missing size"))?;
    if channels.is_empty() {
        return Err(IoError::Invalid(format!("{ctx}: no channels")));
    }
    // missing masks default to empty, except the brain which defaults to everything
    let mut it = masks.into_iter().enumerate().map(|(k, m)| m.unwrap_or_else(|| if k == 0 { Mask::from_fn(w, h, |_, _| true) } else { Mask::new(w, h) }));
    let mut next = || it.next().expect("five masks");
    Ok(ContrastStack {
        names,
        channels,
        brain: next(),
        ce: next(),
        ne: next(),
        necrosis: next(),
        contralateral: next(),
        truth,
    })
}
