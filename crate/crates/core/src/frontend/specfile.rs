//! Flat binary spectrogram / logits format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "CSPG"
//! 4       4     version (u32 LE, currently 1)
//! 8       4     rows N (u32 LE)
//! 12      4     cols D (u32 LE)
//! 16      4*N*D row-major f32 LE values
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use super::FrontendError;

pub const SPEC_MAGIC: &[u8; 4] = b"CSPG";
pub const SPEC_VERSION: u32 = 1;

pub fn write_spectrogram<W: Write>(mut w: W, frames: &Array2<f64>) -> Result<(), FrontendError> {
    w.write_all(SPEC_MAGIC)?;
    w.write_u32::<LittleEndian>(SPEC_VERSION)?;
    w.write_u32::<LittleEndian>(frames.nrows() as u32)?;
    w.write_u32::<LittleEndian>(frames.ncols() as u32)?;
    for v in frames.iter() {
        w.write_f32::<LittleEndian>(*v as f32)?;
    }
    Ok(())
}

pub fn read_spectrogram<R: Read>(mut r: R) -> Result<Array2<f64>, FrontendError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SPEC_MAGIC {
        return Err(FrontendError::MalformedSpectrogram(format!(
            "bad magic {magic:?}"
        )));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != SPEC_VERSION {
        return Err(FrontendError::MalformedSpectrogram(format!(
            "unsupported version {version}"
        )));
    }
    let rows = r.read_u32::<LittleEndian>()? as usize;
    let cols = r.read_u32::<LittleEndian>()? as usize;
    let mut data = vec![0f32; rows * cols];
    r.read_f32_into::<LittleEndian>(&mut data)
        .map_err(|e| FrontendError::MalformedSpectrogram(format!("truncated payload: {e}")))?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(FrontendError::MalformedSpectrogram("trailing bytes".into()));
    }
    Array2::from_shape_vec((rows, cols), data.into_iter().map(f64::from).collect())
        .map_err(|e| FrontendError::MalformedSpectrogram(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let m = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        let mut buf = Vec::new();
        write_spectrogram(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], b"CSPG");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(&buf[12..16], &3u32.to_le_bytes());
        assert_eq!(&buf[16..20], &1.0f32.to_le_bytes());
        assert_eq!(buf.len(), 16 + 6 * 4);
    }

    #[test]
    fn rejects_truncation_and_bad_magic() {
        let m = Array2::<f64>::zeros((2, 2));
        let mut buf = Vec::new();
        write_spectrogram(&mut buf, &m).unwrap();
        assert!(read_spectrogram(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_spectrogram(bad.as_slice()).is_err());
        buf.push(0);
        assert!(read_spectrogram(buf.as_slice()).is_err());
    }

    proptest! {
        #[test]
        fn f32_values_round_trip(rows in 0usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let vals: Vec<f64> = (0..rows * cols)
                .map(|i| ((seed.wrapping_mul(i as u64 + 1) % 10007) as f32 / 7.0) as f64)
                .collect();
            let m = Array2::from_shape_vec((rows, cols), vals).unwrap();
            let mut buf = Vec::new();
            write_spectrogram(&mut buf, &m).unwrap();
            prop_assert_eq!(read_spectrogram(buf.as_slice()).unwrap(), m);
        }
    }
}
