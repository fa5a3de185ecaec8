//! Mono 32-bit float WAV files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::Rir;

pub fn write_wav(path: &Path, rir: &Rir) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rir.sample_rate.round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &v in &rir.samples {
        w.write_sample(v as f32)?;
    }
    w.finalize()?;
    Ok(())
}

/// Reads a mono file; integer formats are scaled to `[-1, 1)`.
pub fn read_wav(path: &Path) -> Result<Rir> {
    let mut r = hound::WavReader::open(path)?;
    let spec = r.spec();
    if spec.channels != 1 {
        return Err(Error::InvalidInput(format!(
            "{}: expected mono audio, found {} channels",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
            r.samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    Rir::new(samples, spec.sample_rate as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let rir = Rir::new(vec![0.0, 0.5, -0.25, 0.0009765625], 48_000.0).unwrap();
        write_wav(&path, &rir).unwrap();
        assert_eq!(read_wav(&path).unwrap(), rir);
    }
}
