//! Binary matrix container for operator dumps.
//!
//! Layout: `rows: u64 LE`, `cols: u64 LE`, then `rows·cols` entries in
//! row-major order, each `re: f64 LE` followed by `im: f64 LE`.

use std::io::{self, Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn write_matrix<W: Write>(mut w: W, m: &DMatrix<Complex64>) -> io::Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn write_real_matrix<W: Write>(w: W, m: &DMatrix<f64>) -> io::Result<()> {
    write_matrix(w, &m.map(|x| Complex64::new(x, 0.0)))
}

pub fn read_matrix<R: Read>(mut r: R) -> io::Result<DMatrix<Complex64>> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> io::Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let rows = u64::from_le_bytes(next(&mut r)?) as usize;
    let cols = u64::from_le_bytes(next(&mut r)?) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "matrix size overflows"))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let re = f64::from_le_bytes(next(&mut r)?);
        let im = f64::from_le_bytes(next(&mut r)?);
        data.push(Complex64::new(re, im));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = DMatrix::from_fn(3, 2, |i, j| Complex64::new(i as f64 + 0.5, -(j as f64)));
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 16 + 3 * 2 * 16);
        assert_eq!(&buf[..8], &3u64.to_le_bytes());
        // second entry in row-major order is (0, 1)
        assert_eq!(&buf[32..40], &0.5f64.to_le_bytes());
        assert_eq!(&buf[40..48], &(-1.0f64).to_le_bytes());
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn truncated_input_is_an_error() {
        let m = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_matrix(buf.as_slice()).is_err());
    }
}
