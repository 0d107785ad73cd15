//! MetaImage (`.mhd` + `.raw`) subset: 3-D, uncompressed, little-endian,
//! `MET_FLOAT` or `MET_UCHAR` elements, payload x-fastest then y then z.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::volcore::{Mask, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementType {
    Float,
    UChar,
}

impl ElementType {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "MET_FLOAT" => Ok(ElementType::Float),
            "MET_UCHAR" => Ok(ElementType::UChar),
            other => Err(Error::UnsupportedElementType(other.to_string())),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ElementType::Float => "MET_FLOAT",
            ElementType::UChar => "MET_UCHAR",
        }
    }

    fn size(self) -> usize {
        match self {
            ElementType::Float => 4,
            ElementType::UChar => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub element_type: ElementType,
    /// Raw payload path, resolved against the header's directory.
    pub data_file: PathBuf,
}

fn parse_triple<T: std::str::FromStr>(path: &Path, key: &str, value: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::format(path, format!("{key} needs 3 values, got `{value}`")));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| Error::format(path, format!("bad {key} value `{p}`")))?);
    }
    out.try_into().map_err(|_| Error::format(path, key.to_string()))
}

pub fn read_header(path: &Path) -> Result<MetaHeader> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut kv = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(path, format!("malformed line `{line}`")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| Error::format(path, format!("missing key {k}")));

    let ndims: usize = get("NDims")?.parse().map_err(|_| Error::format(path, "bad NDims"))?;
    if ndims != 3 {
        return Err(Error::format(path, format!("NDims must be 3, got {ndims}")));
    }
    if let Some(msb) = kv.get("BinaryDataByteOrderMSB").or_else(|| kv.get("ElementByteOrderMSB")) {
        if msb.eq_ignore_ascii_case("true") {
            return Err(Error::format(path, "big-endian payloads are not supported"));
        }
    }
    if let Some(c) = kv.get("CompressedData") {
        if c.eq_ignore_ascii_case("true") {
            return Err(Error::format(path, "compressed payloads are not supported"));
        }
    }
    let dims: [usize; 3] = parse_triple(path, "DimSize", get("DimSize")?)?;
    if dims.contains(&0) {
        return Err(Error::format(path, "DimSize entries must be >= 1"));
    }
    let spacing: [f64; 3] = parse_triple(path, "ElementSpacing", get("ElementSpacing")?)?;
    if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::format(path, "ElementSpacing entries must be positive"));
    }
    let element_type = ElementType::parse(get("ElementType")?)?;
    let data_name = get("ElementDataFile")?;
    if data_name == "LOCAL" || data_name == "LIST" {
        return Err(Error::format(path, format!("ElementDataFile = {data_name} is not supported")));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    Ok(MetaHeader { dims, spacing, element_type, data_file: dir.join(data_name) })
}

fn read_payload(path: &Path) -> Result<(MetaHeader, Vec<u8>)> {
    let header = read_header(path)?;
    let bytes = fs::read(&header.data_file).map_err(|e| Error::io(&header.data_file, e))?;
    let n = header.dims.iter().product::<usize>();
    let want = n * header.element_type.size();
    if bytes.len() != want {
        return Err(Error::format(
            path,
            format!("payload has {} bytes, expected {want} for dims {:?}", bytes.len(), header.dims),
        ));
    }
    Ok((header, bytes))
}

pub fn read_volume(path: &Path) -> Result<Volume> {
    let (h, bytes) = read_payload(path)?;
    let data: Vec<f64> = match h.element_type {
        ElementType::Float => {
            bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect()
        }
        ElementType::UChar => bytes.iter().map(|&b| b as f64).collect(),
    };
    let vol = Volume::from_vec(h.dims, h.spacing, data)?;
    vol.check_finite().map_err(|e| Error::format(path, e.to_string()))?;
    Ok(vol)
}

/// Reads a `MET_UCHAR` mask; any non-zero byte is foreground.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let (h, bytes) = read_payload(path)?;
    if h.element_type != ElementType::UChar {
        return Err(Error::UnsupportedElementType(format!("{} (masks must be MET_UCHAR)", h.element_type.name())));
    }
    Mask::from_vec(h.dims, h.spacing, bytes.iter().map(|&b| b != 0).collect())
}

fn raw_name(path: &Path) -> Result<String> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::format(path, "header path has no file name"))?;
    Ok(format!("{stem}.raw"))
}

fn write_pair(path: &Path, dims: [usize; 3], spacing: [f64; 3], et: ElementType, payload: &[u8]) -> Result<()> {
    let raw = raw_name(path)?;
    let header = format!(
        "ObjectType = Image\nNDims = 3\nBinaryData = True\nBinaryDataByteOrderMSB = False\n\
         DimSize = {} {} {}\nElementSpacing = {} {} {}\nElementType = {}\nElementDataFile = {}\n",
        dims[0], dims[1], dims[2], spacing[0], spacing[1], spacing[2], et.name(), raw
    );
    let dir = path.parent().unwrap_or(Path::new("."));
    let raw_path = dir.join(&raw);
    fs::write(&raw_path, payload).map_err(|e| Error::io(&raw_path, e))?;
    fs::write(path, header).map_err(|e| Error::io(path, e))
}

/// Writes `MET_FLOAT`; values are stored as 32-bit floats.
pub fn write_volume(vol: &Volume, path: &Path) -> Result<()> {
    let mut payload = Vec::with_capacity(vol.data().len() * 4);
    for &v in vol.data() {
        payload.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_pair(path, vol.dims(), vol.spacing(), ElementType::Float, &payload)
}

pub fn write_mask(mask: &Mask, path: &Path) -> Result<()> {
    let payload: Vec<u8> = mask.data().iter().map(|&b| b as u8).collect();
    write_pair(path, mask.dims(), mask.spacing(), ElementType::UChar, &payload)
}
