//! MetaImage (`.mhd` header + `.raw` payload) reader and writer.
//!
//! Only uncompressed little-endian payloads are handled. Volumes are stored
//! as `MET_SHORT`, masks as `MET_UCHAR` (0/1).

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{BinaryMask, CtVolume, Volume};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ElementType {
    Short,
    UChar,
}

impl ElementType {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "MET_SHORT" => Ok(ElementType::Short),
            "MET_UCHAR" => Ok(ElementType::UChar),
            other => Err(Error::UnsupportedElementType(other.to_string())),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ElementType::Short => "MET_SHORT",
            ElementType::UChar => "MET_UCHAR",
        }
    }

    fn size(self) -> usize {
        match self {
            ElementType::Short => 2,
            ElementType::UChar => 1,
        }
    }
}

struct Header {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    element: ElementType,
    data_file: PathBuf,
}

fn parse_triple<T: std::str::FromStr>(key: &str, value: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::MalformedHeader(format!(
            "{key} needs 3 values, got `{value}`"
        )));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| Error::MalformedHeader(format!("{key}: cannot parse `{p}`")))?,
        );
    }
    match <[T; 3]>::try_from(out) {
        Ok(a) => Ok(a),
        Err(_) => unreachable!("length checked above"),
    }
}

fn read_header(path: &Path) -> Result<Header> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut fields = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::MalformedHeader(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        fields.insert(key.trim().to_string(), value.trim().to_string());
    }
    let get = |key: &str| {
        fields
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::MalformedHeader(format!("missing key {key}")))
    };

    let ndims: usize = get("NDims")?
        .parse()
        .map_err(|_| Error::MalformedHeader("NDims is not an integer".into()))?;
    if ndims != 3 {
        return Err(Error::MalformedHeader(format!("NDims = {ndims}, expected 3")));
    }
    let dims = parse_triple::<usize>("DimSize", get("DimSize")?)?;
    let spacing = match fields.get("ElementSpacing").or_else(|| fields.get("ElementSize")) {
        Some(v) => parse_triple::<f64>("ElementSpacing", v)?,
        None => [1.0; 3],
    };
    let origin = match fields.get("Offset").or_else(|| fields.get("Origin")) {
        Some(v) => parse_triple::<f64>("Offset", v)?,
        None => [0.0; 3],
    };
    let element = ElementType::parse(get("ElementType")?)?;
    for key in ["BinaryDataByteOrderMSB", "ElementByteOrderMSB"] {
        if fields.get(key).is_some_and(|v| v.eq_ignore_ascii_case("true")) {
            return Err(Error::MalformedHeader("big-endian payloads are not supported".into()));
        }
    }
    if fields
        .get("CompressedData")
        .is_some_and(|v| v.eq_ignore_ascii_case("true"))
    {
        return Err(Error::MalformedHeader("compressed payloads are not supported".into()));
    }
    let data_name = get("ElementDataFile")?;
    if data_name == "LOCAL" || data_name.starts_with("LIST") || data_name.contains('%') {
        return Err(Error::MalformedHeader(format!(
            "ElementDataFile `{data_name}` is not supported"
        )));
    }
    let data_file = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(data_name);
    Ok(Header {
        dims,
        spacing,
        origin,
        element,
        data_file,
    })
}

fn read_payload(header: &Header) -> Result<Vec<u8>> {
    let bytes = fs::read(&header.data_file).map_err(|e| Error::io(&header.data_file, e))?;
    let expected = header.dims.iter().product::<usize>() * header.element.size();
    if bytes.len() != expected {
        return Err(Error::PayloadSize {
            expected,
            actual: bytes.len(),
        });
    }
    Ok(bytes)
}

/// Load a CT volume. `MET_UCHAR` payloads are widened to HU.
pub fn load_volume(path: impl AsRef<Path>) -> Result<CtVolume> {
    let header = read_header(path.as_ref())?;
    let bytes = read_payload(&header)?;
    let data = match header.element {
        ElementType::Short => bytes
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect(),
        ElementType::UChar => bytes.iter().map(|&b| i16::from(b)).collect(),
    };
    Volume::new(header.dims, header.spacing, header.origin, data)
}

/// Load a mask; any nonzero element is foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let header = read_header(path.as_ref())?;
    let bytes = read_payload(&header)?;
    let data = match header.element {
        ElementType::Short => bytes.chunks_exact(2).map(|c| c[0] != 0 || c[1] != 0).collect(),
        ElementType::UChar => bytes.iter().map(|&b| b != 0).collect(),
    };
    Volume::new(header.dims, header.spacing, header.origin, data)
}

fn raw_path(path: &Path) -> PathBuf {
    path.with_extension("raw")
}

fn write_pair<T>(path: &Path, v: &Volume<T>, element: ElementType, payload: &[u8]) -> Result<()> {
    let raw = raw_path(path);
    let raw_name = raw
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::MalformedHeader(format!("cannot derive payload name from {}", path.display())))?
        .to_string();
    let [nx, ny, nz] = v.dims();
    let [sx, sy, sz] = v.spacing();
    let [ox, oy, oz] = v.origin();
    let header = format!(
        "ObjectType = Image\n\
         NDims = 3\n\
         BinaryData = True\n\
         BinaryDataByteOrderMSB = False\n\
         CompressedData = False\n\
         Offset = {ox} {oy} {oz}\n\
         ElementSpacing = {sx} {sy} {sz}\n\
         DimSize = {nx} {ny} {nz}\n\
         ElementType = {}\n\
         ElementDataFile = {raw_name}\n",
        element.name()
    );
    fs::write(path, header).map_err(|e| Error::io(path, e))?;
    fs::write(&raw, payload).map_err(|e| Error::io(&raw, e))?;
    Ok(())
}

/// Write `path` (header) and a sibling `.raw` payload.
pub fn save_volume(v: &CtVolume, path: impl AsRef<Path>) -> Result<()> {
    let payload: Vec<u8> = v.data().iter().flat_map(|x| x.to_le_bytes()).collect();
    write_pair(path.as_ref(), v, ElementType::Short, &payload)
}

pub fn save_mask(m: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let payload: Vec<u8> = m.data().iter().map(|&b| u8::from(b)).collect();
    write_pair(path.as_ref(), m, ElementType::UChar, &payload)
}
