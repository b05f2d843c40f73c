//! Minimal NIfTI-1 reader/writer.
//!
//! Supports single-frame 3D volumes stored as `uint8` (labels) or `float32`
//! (intensities), in `.nii` or gzip-compressed `.nii.gz` files. The affine is
//! taken from the sform when present, then the qform, else a diagonal matrix
//! built from `pixdim`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use nalgebra::{Matrix3, Matrix4};

use crate::error::{Error, Result};
use crate::volume::grid::{from_matrix, to_matrix};
use crate::volume::{Affine, Grid, IntensityVolume, LabelVolume, Volume, Voxel};

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;
const DT_UINT8: i16 = 2;
const DT_FLOAT32: i16 = 16;
const XFORM_SCANNER: i16 = 1;
const UNITS_MM: u8 = 2;

/// Which element type a file is expected to hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeKind {
    Label,
    Intensity,
}

/// A volume of either kind, as returned by [`load_volume`].
#[derive(Clone, Debug, PartialEq)]
pub enum AnyVolume {
    Label(LabelVolume),
    Intensity(IntensityVolume),
}

/// Element types that have a NIfTI on-disk representation.
pub trait NiftiVoxel: Voxel {
    const DATATYPE: i16;
    const BITPIX: i16;
    fn write_le(self, out: &mut Vec<u8>);
}

impl NiftiVoxel for u8 {
    const DATATYPE: i16 = DT_UINT8;
    const BITPIX: i16 = 8;
    fn write_le(self, out: &mut Vec<u8>) {
        out.push(self);
    }
}

impl NiftiVoxel for f32 {
    const DATATYPE: i16 = DT_FLOAT32;
    const BITPIX: i16 = 32;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

struct Header<'a> {
    raw: &'a [u8],
    big_endian: bool,
}

impl Header<'_> {
    fn i16(&self, off: usize) -> i16 {
        let b = [self.raw[off], self.raw[off + 1]];
        if self.big_endian {
            i16::from_be_bytes(b)
        } else {
            i16::from_le_bytes(b)
        }
    }

    fn f32(&self, off: usize) -> f32 {
        let b = [
            self.raw[off],
            self.raw[off + 1],
            self.raw[off + 2],
            self.raw[off + 3],
        ];
        if self.big_endian {
            f32::from_be_bytes(b)
        } else {
            f32::from_le_bytes(b)
        }
    }

    /// Header floats are single precision; widen through the shortest decimal
    /// representation so values written from short decimals come back exact.
    fn real(&self, off: usize) -> f64 {
        widen(self.f32(off))
    }
}

fn widen(v: f32) -> f64 {
    if v.is_finite() {
        v.to_string().parse().unwrap_or(v as f64)
    } else {
        v as f64
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct Decoded {
    grid: Grid,
    datatype: i16,
    slope: f32,
    inter: f32,
    payload: Vec<u8>,
    big_endian: bool,
}

fn decode(bytes: Vec<u8>) -> Result<Decoded> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::MalformedHeader(format!(
            "file is {} bytes, shorter than the 348-byte header",
            bytes.len()
        )));
    }
    let le = i32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let big_endian = match le {
        348 => false,
        _ if i32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) == 348 => true,
        _ => return Err(Error::MalformedHeader(format!("sizeof_hdr is {le}, expected 348"))),
    };
    let h = Header {
        raw: &bytes[..HEADER_SIZE],
        big_endian,
    };
    let magic = &h.raw[344..348];
    if magic != b"n+1\0" {
        return Err(Error::Unsupported(format!(
            "magic {magic:?}: only single-file NIfTI-1 (n+1) is supported"
        )));
    }
    let ndim = h.i16(40);
    if !(1..=7).contains(&ndim) {
        return Err(Error::MalformedHeader(format!("dim[0] = {ndim}")));
    }
    let mut dims = [1usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        if (a as i16) < ndim {
            let v = h.i16(42 + 2 * a as usize);
            if v < 1 {
                return Err(Error::MalformedHeader(format!("dim[{}] = {v}", a + 1)));
            }
            *d = v as usize;
        }
    }
    for a in 3..ndim as usize {
        let v = h.i16(42 + 2 * a);
        if v > 1 {
            return Err(Error::Unsupported(format!(
                "{ndim}D volume with dim[{}] = {v}; only single 3D frames are supported",
                a + 1
            )));
        }
    }
    let datatype = h.i16(70);
    if datatype != DT_UINT8 && datatype != DT_FLOAT32 {
        return Err(Error::Unsupported(format!(
            "datatype {datatype}; supported are uint8 (2) and float32 (16)"
        )));
    }
    let pixdim = [h.real(80), h.real(84), h.real(88)];
    let qfac = if h.f32(76) < 0.0 { -1.0 } else { 1.0 };
    let vox_offset = h.f32(108);
    if !(vox_offset >= HEADER_SIZE as f32) {
        return Err(Error::MalformedHeader(format!("vox_offset = {vox_offset}")));
    }
    let vox_offset = vox_offset as usize;
    let slope = h.f32(112);
    let inter = h.f32(116);
    let qform_code = h.i16(252);
    let sform_code = h.i16(254);

    let affine: Affine = if sform_code > 0 {
        let mut a = [[0.0; 4]; 4];
        for (r, row) in a.iter_mut().take(3).enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = h.real(280 + 16 * r + 4 * c);
            }
        }
        a[3][3] = 1.0;
        a
    } else if qform_code > 0 {
        let (b, c, d) = (h.real(256), h.real(260), h.real(264));
        let offset = [h.real(268), h.real(272), h.real(276)];
        qform_affine(b, c, d, qfac, pixdim, offset)
    } else {
        let mut a = [[0.0; 4]; 4];
        for i in 0..3 {
            a[i][i] = pixdim[i];
        }
        a[3][3] = 1.0;
        a
    };

    // spacing follows the affine; pixdim must agree with it
    let spacing = [0, 1, 2].map(|c| {
        let norm = (0..3).map(|r| affine[r][c].powi(2)).sum::<f64>().sqrt();
        if ((norm - pixdim[c]) / norm).abs() <= 1e-6 {
            pixdim[c]
        } else {
            norm
        }
    });
    if pixdim.iter().zip(spacing.iter()).any(|(p, s)| ((p - s) / s).abs() > 1e-5) {
        return Err(Error::MalformedHeader(format!(
            "pixdim {pixdim:?} disagrees with affine column norms {spacing:?}"
        )));
    }
    let grid = Grid::new(dims, spacing, affine).map_err(|e| match e {
        Error::SingularAffine => Error::SingularAffine,
        other => Error::MalformedHeader(other.to_string()),
    })?;
    let bytes_per = if datatype == DT_UINT8 { 1 } else { 4 };
    let need = vox_offset + grid.len() * bytes_per;
    if bytes.len() < need {
        return Err(Error::MalformedHeader(format!(
            "file holds {} bytes, header requires {need}",
            bytes.len()
        )));
    }
    let payload = bytes[vox_offset..need].to_vec();
    Ok(Decoded {
        grid,
        datatype,
        slope,
        inter,
        payload,
        big_endian,
    })
}

fn qform_affine(b: f64, c: f64, d: f64, qfac: f64, pixdim: [f64; 3], offset: [f64; 3]) -> Affine {
    let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
    let r = Matrix3::new(
        a * a + b * b - c * c - d * d,
        2.0 * (b * c - a * d),
        2.0 * (b * d + a * c),
        2.0 * (b * c + a * d),
        a * a + c * c - b * b - d * d,
        2.0 * (c * d - a * b),
        2.0 * (b * d - a * c),
        2.0 * (c * d + a * b),
        a * a + d * d - c * c - b * b,
    );
    let mut m = Matrix4::identity();
    let scale = [pixdim[0], pixdim[1], pixdim[2] * qfac];
    for row in 0..3 {
        for col in 0..3 {
            m[(row, col)] = r[(row, col)] * scale[col];
        }
        m[(row, 3)] = offset[row];
    }
    from_matrix(&m)
}

/// Quaternion `(b, c, d)` and `qfac` representing the rotation part of `affine`.
fn qform_params(grid: &Grid) -> ([f64; 3], f64) {
    let m = to_matrix(grid.affine());
    let s = grid.spacing();
    let mut r = Matrix3::from_fn(|row, col| m[(row, col)] / s[col]);
    let qfac = if r.determinant() < 0.0 {
        for row in 0..3 {
            r[(row, 2)] = -r[(row, 2)];
        }
        -1.0
    } else {
        1.0
    };
    let trace = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
    let (a, b, c, d);
    if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        a = 0.25 * s;
        b = (r[(2, 1)] - r[(1, 2)]) / s;
        c = (r[(0, 2)] - r[(2, 0)]) / s;
        d = (r[(1, 0)] - r[(0, 1)]) / s;
    } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        a = (r[(2, 1)] - r[(1, 2)]) / s;
        b = 0.25 * s;
        c = (r[(0, 1)] + r[(1, 0)]) / s;
        d = (r[(0, 2)] + r[(2, 0)]) / s;
    } else if r[(1, 1)] > r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        a = (r[(0, 2)] - r[(2, 0)]) / s;
        b = (r[(0, 1)] + r[(1, 0)]) / s;
        c = 0.25 * s;
        d = (r[(1, 2)] + r[(2, 1)]) / s;
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        a = (r[(1, 0)] - r[(0, 1)]) / s;
        b = (r[(0, 2)] + r[(2, 0)]) / s;
        c = (r[(1, 2)] + r[(2, 1)]) / s;
        d = 0.25 * s;
    }
    let sign = if a < 0.0 { -1.0 } else { 1.0 };
    ([b * sign, c * sign, d * sign], qfac)
}

fn load_labels_from(decoded: Decoded) -> Result<LabelVolume> {
    if decoded.datatype != DT_UINT8 {
        return Err(Error::Unsupported(format!(
            "label volumes must be uint8, found datatype {}",
            decoded.datatype
        )));
    }
    let identity_scale = decoded.slope == 0.0 || (decoded.slope == 1.0 && decoded.inter == 0.0);
    if !identity_scale {
        return Err(Error::Unsupported("scaled label volume".into()));
    }
    Volume::new(decoded.grid, decoded.payload)
}

fn load_intensity_from(decoded: Decoded) -> Result<IntensityVolume> {
    let scaled = decoded.slope != 0.0 && !(decoded.slope == 1.0 && decoded.inter == 0.0);
    let data: Vec<f32> = match decoded.datatype {
        DT_FLOAT32 => decoded
            .payload
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                if decoded.big_endian {
                    f32::from_be_bytes(b)
                } else {
                    f32::from_le_bytes(b)
                }
            })
            .collect(),
        other => {
            return Err(Error::Unsupported(format!(
                "intensity volumes must be float32, found datatype {other}"
            )))
        }
    };
    let data = if scaled {
        data.into_iter()
            .map(|v| v * decoded.slope + decoded.inter)
            .collect()
    } else {
        data
    };
    Volume::new(decoded.grid, data)
}

/// Loads a volume of the requested kind.
pub fn load_volume(path: impl AsRef<Path>, kind: VolumeKind) -> Result<AnyVolume> {
    let decoded = decode(read_bytes(path.as_ref())?)?;
    Ok(match kind {
        VolumeKind::Label => AnyVolume::Label(load_labels_from(decoded)?),
        VolumeKind::Intensity => AnyVolume::Intensity(load_intensity_from(decoded)?),
    })
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVolume> {
    load_labels_from(decode(read_bytes(path.as_ref())?)?)
}

pub fn load_intensity(path: impl AsRef<Path>) -> Result<IntensityVolume> {
    load_intensity_from(decode(read_bytes(path.as_ref())?)?)
}

/// Serialises a volume to NIfTI-1 bytes (uncompressed).
pub fn encode<T: NiftiVoxel>(vol: &Volume<T>) -> Result<Vec<u8>> {
    let grid = vol.grid();
    let dims = grid.dims();
    if dims.iter().any(|&d| d > i16::MAX as usize) {
        return Err(Error::Unsupported(format!("dims {dims:?} exceed NIfTI-1 limits")));
    }
    let mut h = vec![0u8; VOX_OFFSET];
    let put_i16 = |h: &mut [u8], off: usize, v: i16| h[off..off + 2].copy_from_slice(&v.to_le_bytes());
    let put_f32 = |h: &mut [u8], off: usize, v: f64| {
        h[off..off + 4].copy_from_slice(&(v as f32).to_le_bytes())
    };
    h[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    h[38] = b'r';
    put_i16(&mut h, 40, 3);
    for (a, &d) in dims.iter().enumerate() {
        put_i16(&mut h, 42 + 2 * a, d as i16);
    }
    for a in 3..7 {
        put_i16(&mut h, 42 + 2 * a, 1);
    }
    put_i16(&mut h, 70, T::DATATYPE);
    put_i16(&mut h, 72, T::BITPIX);
    let ([qb, qc, qd], qfac) = qform_params(grid);
    put_f32(&mut h, 76, qfac);
    for (a, &s) in grid.spacing().iter().enumerate() {
        put_f32(&mut h, 80 + 4 * a, s);
    }
    put_f32(&mut h, 108, VOX_OFFSET as f64);
    put_f32(&mut h, 112, 1.0);
    put_f32(&mut h, 116, 0.0);
    h[123] = UNITS_MM;
    let desc = b"fetalsim";
    h[148..148 + desc.len()].copy_from_slice(desc);
    put_i16(&mut h, 252, XFORM_SCANNER);
    put_i16(&mut h, 254, XFORM_SCANNER);
    put_f32(&mut h, 256, qb);
    put_f32(&mut h, 260, qc);
    put_f32(&mut h, 264, qd);
    let a = grid.affine();
    for r in 0..3 {
        put_f32(&mut h, 268 + 4 * r, a[r][3]);
        for c in 0..4 {
            put_f32(&mut h, 280 + 16 * r + 4 * c, a[r][c]);
        }
    }
    h[344..348].copy_from_slice(b"n+1\0");
    h.reserve(vol.data().len() * (T::BITPIX as usize / 8));
    for &v in vol.data() {
        v.write_le(&mut h);
    }
    Ok(h)
}

/// Writes a volume; a `.gz` extension selects gzip compression.
pub fn save_volume<T: NiftiVoxel>(vol: &Volume<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(vol)?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let out = if gz {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?
    } else {
        bytes
    };
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
