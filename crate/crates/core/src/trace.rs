//! Trace CSV: `frame,gain,gs_loss[,est_re,est_im,omega2]`.

use std::io::{Read, Write};

use num_complex::Complex;

use crate::error::{GscloError, Result};
use crate::num::Real;
use crate::types::FrameTrace;

const BASE_HEADER: [&str; 3] = ["frame", "gain", "gs_loss"];
const UNCERTAINTY_HEADER: [&str; 3] = ["est_re", "est_im", "omega2"];

fn trace_err(e: impl std::fmt::Display) -> GscloError {
    GscloError::Trace(e.to_string())
}

/// Reads a trace, validating every row. Frames must be numbered `1..=T` in order.
pub fn read_trace<F: Real, R: Read>(reader: R) -> Result<Vec<FrameTrace<F>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(trace_err)?.iter().map(str::to_owned).collect();
    let with_uncertainty = match header.len() {
        3 => false,
        6 => true,
        n => return Err(GscloError::Trace(format!("expected 3 or 6 columns, found {n}"))),
    };
    let expected = BASE_HEADER.iter().chain(UNCERTAINTY_HEADER.iter().take(if with_uncertainty { 3 } else { 0 }));
    if !header.iter().map(String::as_str).eq(expected.copied()) {
        return Err(GscloError::Trace(format!("unexpected header {header:?}")));
    }

    let mut frames = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(trace_err)?;
        let field = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| GscloError::Trace(format!("row {}: column {}: {e}", row + 1, header[i])))
        };
        let frame_index: usize = record[0]
            .parse()
            .map_err(|e| GscloError::Trace(format!("row {}: frame: {e}", row + 1)))?;
        if frame_index != row + 1 {
            return Err(GscloError::Trace(format!(
                "row {}: frame index {frame_index} out of sequence",
                row + 1
            )));
        }
        let mut frame = FrameTrace::new(frame_index, F::lit(field(2)?), F::lit(field(1)?));
        if with_uncertainty {
            let est = Complex::new(F::lit(field(3)?), F::lit(field(4)?));
            frame = frame.with_uncertainty(est, F::lit(field(5)?));
        }
        frame.validate()?;
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(GscloError::Trace("trace has no frames".into()));
    }
    Ok(frames)
}

/// Writes a trace. Uncertainty columns are emitted iff every frame carries them.
pub fn write_trace<F: Real, W: Write>(writer: W, frames: &[FrameTrace<F>]) -> Result<()> {
    let with_uncertainty = !frames.is_empty()
        && frames.iter().all(|f| f.estimate.is_some() && f.omega2.is_some());
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = BASE_HEADER.to_vec();
    if with_uncertainty {
        header.extend(UNCERTAINTY_HEADER);
    }
    wtr.write_record(&header).map_err(trace_err)?;
    for f in frames {
        let mut row = vec![
            f.frame_index.to_string(),
            format_real(f.gain),
            format_real(f.gs_loss),
        ];
        if with_uncertainty {
            let (h, w) = (f.estimate.unwrap_or_default(), f.omega2.unwrap_or_default());
            row.extend([format_real(h.re), format_real(h.im), format_real(w)]);
        }
        wtr.write_record(&row).map_err(trace_err)?;
    }
    wtr.flush().map_err(trace_err)
}

/// Shortest decimal that round-trips through `f64`.
fn format_real<F: Real>(v: F) -> String {
    format!("{:e}", v.to_f64_lossy())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_plain() {
        let frames: Vec<FrameTrace<f64>> = (1..=4)
            .map(|t| FrameTrace::new(t, 0.01 * t as f64 + 1.0 / 3.0, 1e-6 / t as f64))
            .collect();
        let mut buf = Vec::new();
        write_trace(&mut buf, &frames).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frame,gain,gs_loss\n"));
        assert_eq!(read_trace::<f64, _>(buf.as_slice()).unwrap(), frames);
    }

    #[test]
    fn round_trip_uncertainty() {
        let h = Complex::new(7e-4, -3e-4);
        let frames = vec![
            FrameTrace::new(1, 0.02, h.norm_sqr()).with_uncertainty(h, 0.04 * h.norm_sqr()),
            FrameTrace::new(2, 0.2, h.norm_sqr()).with_uncertainty(h * 2.0, 0.04 * h.norm_sqr()),
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &frames).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("frame,gain,gs_loss,est_re,est_im,omega2\n"));
        assert_eq!(read_trace::<f64, _>(buf.as_slice()).unwrap(), frames);
    }

    #[test]
    fn rejects_malformed() {
        let bad = [
            "frame,gain\n1,1e-6\n",
            "frame,loss,gain\n1,0.1,1e-6\n",
            "frame,gain,gs_loss\n2,1e-6,0.1\n",
            "frame,gain,gs_loss\n1,-1e-6,0.1\n",
            "frame,gain,gs_loss\n1,abc,0.1\n",
            "frame,gain,gs_loss\n",
        ];
        for text in bad {
            assert!(read_trace::<f64, _>(text.as_bytes()).is_err(), "{text}");
        }
    }

    #[test]
    fn reads_into_f32() {
        let t = read_trace::<f32, _>("frame,gain,gs_loss\n1,1e-6,0.25\n".as_bytes()).unwrap();
        assert_eq!(t[0].gs_loss, 0.25f32);
    }
}
