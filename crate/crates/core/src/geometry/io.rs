//! OBJ and PLY mesh loaders/writers, plus point-list readers (PLY or CSV).

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::Point3;

use super::{GeometryError, TriangleMesh};

fn parse_err(path: &Path, msg: impl Into<String>) -> GeometryError {
    GeometryError::Parse {
        path: path.display().to_string(),
        message: msg.into(),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> GeometryError {
    GeometryError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

/// Loads a mesh from `.obj` or `.ply` by extension.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh, GeometryError> {
    let (vertices, faces) = match extension(path).as_str() {
        "obj" => read_obj(path)?,
        "ply" => read_ply(path)?,
        other => return Err(parse_err(path, format!("unsupported mesh extension '{other}'"))),
    };
    TriangleMesh::new(vertices, faces)
}

pub fn save_mesh(mesh: &TriangleMesh, path: &Path) -> Result<(), GeometryError> {
    match extension(path).as_str() {
        "obj" => write_obj(mesh, path),
        "ply" => write_ply(mesh.vertices(), Some(mesh.faces()), path),
        other => Err(parse_err(path, format!("unsupported mesh extension '{other}'"))),
    }
}

/// Reads a point list from PLY vertices or a CSV of `x,y,z` rows.
pub fn load_points(path: &Path) -> Result<Vec<Point3<f64>>, GeometryError> {
    match extension(path).as_str() {
        "ply" => Ok(read_ply(path)?.0),
        "csv" | "txt" => read_csv_points(path),
        other => Err(parse_err(path, format!("unsupported point file extension '{other}'"))),
    }
}

pub fn save_points(points: &[Point3<f64>], path: &Path) -> Result<(), GeometryError> {
    match extension(path).as_str() {
        "ply" => write_ply(points, None, path),
        _ => {
            let mut out = String::new();
            for p in points {
                out.push_str(&format!("{},{},{}\n", p.x, p.y, p.z));
            }
            fs::write(path, out).map_err(|e| io_err(path, e))
        }
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

type RawMesh = (Vec<Point3<f64>>, Vec<[usize; 3]>);

fn read_obj(path: &Path) -> Result<RawMesh, GeometryError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
                if coords.len() != 3 {
                    return Err(parse_err(path, format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in tokens {
                    let first = t.split('/').next().unwrap_or("");
                    let idx: i64 = first
                        .parse()
                        .map_err(|_| parse_err(path, format!("line {}: bad face index '{t}'", lineno + 1)))?;
                    // 1-based; negative values count back from the latest vertex.
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        -1
                    };
                    if resolved < 0 {
                        return Err(parse_err(path, format!("line {}: face index {idx} out of range", lineno + 1)));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(parse_err(path, format!("line {}: face needs 3 vertices", lineno + 1)));
                }
                for k in 1..poly.len() - 1 {
                    faces.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

fn write_obj(mesh: &TriangleMesh, path: &Path) -> Result<(), GeometryError> {
    let mut out = String::with_capacity(32 * (mesh.vertices().len() + mesh.faces().len()));
    for v in mesh.vertices() {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, PartialEq)]
enum PlyFormat {
    Ascii,
    BinaryLe,
}

fn read_ply(path: &Path) -> Result<RawMesh, GeometryError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut cursor = &bytes[..];
    let mut header_lines = Vec::new();
    loop {
        let end = cursor
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse_err(path, "unterminated PLY header"))?;
        let line = String::from_utf8_lossy(&cursor[..end]).trim().to_string();
        cursor = &cursor[end + 1..];
        if line == "end_header" {
            break;
        }
        header_lines.push(line);
    }
    if header_lines.first().map(String::as_str) != Some("ply") {
        return Err(parse_err(path, "missing 'ply' magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in &header_lines[1..] {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLe),
            ["format", other, ..] => return Err(parse_err(path, format!("unsupported PLY format '{other}'"))),
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| parse_err(path, format!("bad element count '{count}'")))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let el = elements.last_mut().ok_or_else(|| parse_err(path, "property before element"))?;
                el.properties.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(count).ok_or_else(|| parse_err(path, format!("bad type '{count}'")))?,
                    item: Scalar::parse(item).ok_or_else(|| parse_err(path, format!("bad type '{item}'")))?,
                });
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| parse_err(path, "property before element"))?;
                el.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty: Scalar::parse(ty).ok_or_else(|| parse_err(path, format!("bad type '{ty}'")))?,
                });
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            _ => return Err(parse_err(path, format!("unrecognized header line '{line}'"))),
        }
    }
    let format = format.ok_or_else(|| parse_err(path, "missing format line"))?;

    let mut reader: Box<dyn FnMut(Scalar) -> Result<f64, GeometryError>> = match format {
        PlyFormat::BinaryLe => {
            let mut data = cursor;
            let p = path.to_path_buf();
            Box::new(move |ty: Scalar| {
                let n = ty.size();
                if data.len() < n {
                    return Err(parse_err(&p, "unexpected end of PLY body"));
                }
                let v = ty.decode_le(&data[..n]);
                data = &data[n..];
                Ok(v)
            })
        }
        PlyFormat::Ascii => {
            let mut text = String::new();
            let mut body = cursor;
            body.read_to_string(&mut text).map_err(|e| io_err(path, e))?;
            let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
            let mut pos = 0usize;
            let p = path.to_path_buf();
            Box::new(move |_ty: Scalar| {
                let tok = tokens
                    .get(pos)
                    .ok_or_else(|| parse_err(&p, "unexpected end of PLY body"))?;
                pos += 1;
                tok.parse::<f64>()
                    .map_err(|_| parse_err(&p, format!("bad PLY value '{tok}'")))
            })
        }
    };

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [f64::NAN; 3];
            for prop in &el.properties {
                match prop {
                    Property::Scalar { name, ty } => {
                        let v = reader(*ty)?;
                        if el.name == "vertex" {
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                    }
                    Property::List { name, count, item } => {
                        let n = reader(*count)? as usize;
                        let mut items = Vec::with_capacity(n);
                        for _ in 0..n {
                            items.push(reader(*item)?);
                        }
                        if el.name == "face" && (name == "vertex_indices" || name == "vertex_index") {
                            if n < 3 {
                                return Err(parse_err(path, "face with fewer than 3 vertices"));
                            }
                            if items.iter().any(|&i| i < 0.0) {
                                return Err(parse_err(path, "negative face index"));
                            }
                            for k in 1..n - 1 {
                                faces.push([items[0] as usize, items[k] as usize, items[k + 1] as usize]);
                            }
                        }
                    }
                }
            }
            if el.name == "vertex" {
                if xyz.iter().any(|c| c.is_nan()) {
                    return Err(parse_err(path, "vertex element lacks x/y/z"));
                }
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
        }
    }
    Ok((vertices, faces))
}

fn write_ply(vertices: &[Point3<f64>], faces: Option<&[[usize; 3]]>, path: &Path) -> Result<(), GeometryError> {
    let mut buf = Vec::new();
    let mut header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n",
        vertices.len()
    );
    if let Some(f) = faces {
        header.push_str(&format!("element face {}\nproperty list uchar int vertex_indices\n", f.len()));
    }
    header.push_str("end_header\n");
    buf.extend_from_slice(header.as_bytes());
    for v in vertices {
        for c in [v.x, v.y, v.z] {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    for f in faces.unwrap_or(&[]) {
        buf.push(3u8);
        for &i in f {
            let i = i32::try_from(i).map_err(|_| parse_err(path, "vertex index exceeds int32"))?;
            buf.extend_from_slice(&i.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&buf).map_err(|e| io_err(path, e))
}

fn read_csv_points(path: &Path) -> Result<Vec<Point3<f64>>, GeometryError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().take(3).map(str::parse::<f64>).collect();
        match parsed {
            Ok(c) if c.len() == 3 => points.push(Point3::new(c[0], c[1], c[2])),
            // A non-numeric first row is a header.
            Err(_) if row == 0 => continue,
            _ => return Err(parse_err(path, format!("row {}: expected x,y,z", row + 1))),
        }
    }
    Ok(points)
}
