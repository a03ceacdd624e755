//! Serde adapter for complex matrices: `{"rows", "cols", "re", "im"}` with
//! row-major coefficient order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct MatDto {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

pub fn serialize<S: Serializer>(
    m: &DMatrix<Complex64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut re = Vec::with_capacity(m.len());
    let mut im = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            re.push(m[(r, c)].re);
            im.push(m[(r, c)].im);
        }
    }
    MatDto { rows: m.nrows(), cols: m.ncols(), re, im }.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<DMatrix<Complex64>, D::Error> {
    let dto = MatDto::deserialize(d)?;
    if dto.re.len() != dto.rows * dto.cols || dto.im.len() != dto.rows * dto.cols {
        return Err(D::Error::custom("matrix payload length mismatch"));
    }
    Ok(DMatrix::from_fn(dto.rows, dto.cols, |r, c| {
        let i = r * dto.cols + c;
        Complex64::new(dto.re[i], dto.im[i])
    }))
}
