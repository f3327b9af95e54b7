//! STL and X3D file formats.

mod stl;
mod x3d;

use std::path::Path;

use thiserror::Error;

use crate::mesh::{validate, TriMesh, ValidityReport};

pub use stl::{
    read_stl, read_stl_with_stats, write_stl_ascii, write_stl_binary, StlFormat, StlStats, HEADER_LEN, RECORD_LEN,
};
pub use x3d::{read_x3d, X3dImport};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("truncated STL: {len} bytes, expected {expected}")]
    Truncated { len: usize, expected: usize },
    #[error("STL declares {declared} triangles but holds {actual}")]
    CountMismatch { declared: usize, actual: usize },
    #[error("ASCII STL line {line}: expected {expected}, found {found:?}")]
    AsciiSyntax {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("more than 2^32 - 1 triangles")]
    TooManyTriangles,
    #[error("invalid XML: {0}")]
    Xml(String),
    #[error("no IndexedFaceSet in X3D document")]
    NoIndexedFaceSet,
    #[error("IndexedFaceSet {set}: missing {what}")]
    X3dMissing { set: usize, what: &'static str },
    #[error("malformed numbers in {attribute}")]
    X3dNumber { attribute: String },
    #[error("IndexedFaceSet {set}, face {face}: index {index} out of range for {point_count} points")]
    X3dIndex {
        set: usize,
        face: usize,
        index: i64,
        point_count: usize,
    },
    #[error("IndexedFaceSet {set}, face {face}: fewer than 3 indices")]
    X3dShortFace { set: usize, face: usize },
    #[error("IndexedFaceSet {set}, face {face}: repeated index")]
    X3dRepeatedIndex { set: usize, face: usize },
    #[error("unsupported file extension {0:?}; expected .stl or .x3d")]
    UnknownExtension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Stl,
    X3d,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, FormatError> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "stl" => Ok(MeshFormat::Stl),
            "x3d" => Ok(MeshFormat::X3d),
            _ => Err(FormatError::UnknownExtension(path.display().to_string())),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads an `.stl` or `.x3d` file; X3D warnings are returned alongside.
pub fn read_mesh_file(path: &Path) -> Result<(TriMesh<f64>, Vec<String>), FormatError> {
    let format = MeshFormat::from_path(path)?;
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    match format {
        MeshFormat::Stl => Ok((read_stl(&bytes)?, Vec::new())),
        MeshFormat::X3d => {
            let text = String::from_utf8(bytes).map_err(|e| FormatError::Xml(e.to_string()))?;
            let r = read_x3d(&text)?;
            Ok((r.mesh, r.warnings))
        }
    }
}

/// Writes binary (default) or ASCII STL.
pub fn write_stl_file(path: &Path, mesh: &TriMesh<f64>, comment: &str, ascii: bool) -> Result<(), FormatError> {
    if MeshFormat::from_path(path)? != MeshFormat::Stl {
        return Err(FormatError::UnknownExtension(path.display().to_string()));
    }
    let bytes = if ascii {
        write_stl_ascii(mesh, comment).into_bytes()
    } else {
        write_stl_binary(mesh, comment)?
    };
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Read, validate, write as STL.
pub fn convert(input: &Path, output: &Path, ascii: bool) -> Result<ValidityReport<f64>, FormatError> {
    MeshFormat::from_path(output).and_then(|f| match f {
        MeshFormat::Stl => Ok(()),
        MeshFormat::X3d => Err(FormatError::UnknownExtension(output.display().to_string())),
    })?;
    let (mesh, _) = read_mesh_file(input)?;
    let report = validate(&mesh);
    let name = input.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    write_stl_file(output, &mesh, name, ascii)?;
    Ok(report)
}
