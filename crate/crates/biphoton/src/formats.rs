//! On-disk formats. Layouts are described in `docs/formats.md`; golden tests
//! pin them.

use std::io::Write;
use std::path::Path;

use biphoton_core::counting::{CoincidenceHistogram, TimeTagStream};
use biphoton_core::experiment::CarBatch;
use biphoton_core::counting::SweepPoint;
use biphoton_core::spectral::JointSpectralAmplitude;
use biphoton_core::spectrometer::ReconstructedSpectrum;
use biphoton_core::state::Matrix4c;
use biphoton_core::tomography::{AnalyzerBasis, AnalyzerSetting, MeasurementRecord, SettingPair};
use biphoton_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| CliError::format(path, "not a file path"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::format(path, e.to_string()))?;
    let found = r.headers().map_err(|e| CliError::format(path, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::format(path, format!("expected header {}", header.join(","))));
    }
    r.records()
        .map(|rec| rec.map_err(|e| CliError::format(path, e.to_string())))
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CliError::format(path, format!("line {line}: bad field {}", i + 1)))
}

pub const JSA_HEADER: [&str; 6] = ["signal_nm", "idler_nm", "re_fminus", "im_fminus", "re_fplus", "im_fplus"];

pub fn jsa_csv(jsa: &JointSpectralAmplitude) -> Vec<u8> {
    let grid = jsa.grid();
    let rows = grid.signal_wavelengths().iter().enumerate().flat_map(|(j, &ls)| {
        grid.idler_wavelengths().iter().enumerate().map(move |(k, &li)| {
            let (m, p) = (jsa.f_minus()[jsa.index(j, k)], jsa.f_plus()[jsa.index(j, k)]);
            [ls, li, m.re, m.im, p.re, p.im].map(fmt_f64).to_vec()
        })
    });
    csv_bytes(&JSA_HEADER, rows)
}

pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Real,
    Imag,
}

/// 4x4 table with a leading label column.
pub fn density_csv(m: &Matrix4c, part: Part) -> Vec<u8> {
    let mut header = vec!["row"];
    header.extend(BASIS_LABELS);
    let rows = (0..4).map(|r| {
        let mut row = vec![BASIS_LABELS[r].to_string()];
        row.extend((0..4).map(|c| fmt_f64(if part == Part::Real { m[(r, c)].re } else { m[(r, c)].im })));
        row
    });
    csv_bytes(&header, rows)
}

/// JSON density matrix: 16 `[re, im]` entries, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityMatrixJson {
    pub basis: Vec<String>,
    pub entries: Vec<[f64; 2]>,
}

impl DensityMatrixJson {
    pub fn from_matrix(m: &Matrix4c) -> Self {
        Self {
            basis: BASIS_LABELS.iter().map(|s| s.to_string()).collect(),
            entries: (0..16).map(|k| [m[(k / 4, k % 4)].re, m[(k / 4, k % 4)].im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Option<Matrix4c> {
        if self.entries.len() != 16 {
            return None;
        }
        Some(Matrix4c::from_fn(|r, c| {
            let [re, im] = self.entries[4 * r + c];
            Complex64::new(re, im)
        }))
    }
}

pub const RECORD_HEADER: [&str; 6] = ["setting_s", "setting_i", "time_s", "coincidences", "singles_s", "singles_i"];

/// Standard settings are written as their basis label, others as
/// `qwp:hwp` in radians.
pub fn setting_label(s: &AnalyzerSetting) -> String {
    match AnalyzerBasis::of_setting(s) {
        Some(b) => b.label().to_string(),
        None => format!("{}:{}", fmt_f64(s.qwp_angle), fmt_f64(s.hwp_angle)),
    }
}

pub fn parse_setting(label: &str) -> Option<AnalyzerSetting> {
    if let Some(b) = AnalyzerBasis::from_label(label) {
        return Some(b.setting());
    }
    let (q, h) = label.split_once(':')?;
    Some(AnalyzerSetting::new(q.trim().parse().ok()?, h.trim().parse().ok()?))
}

pub fn record_csv(record: &MeasurementRecord) -> Vec<u8> {
    let rows = (0..record.len()).map(|k| {
        let (s, i) = &record.settings()[k];
        let singles = record.singles()[k];
        vec![
            setting_label(s),
            setting_label(i),
            fmt_f64(record.acquisition_time()[k]),
            fmt_f64(record.counts()[k]),
            fmt_f64(singles[0]),
            fmt_f64(singles[1]),
        ]
    });
    csv_bytes(&RECORD_HEADER, rows)
}

pub fn read_record_csv(path: &Path) -> Result<MeasurementRecord> {
    let mut settings: Vec<SettingPair> = Vec::new();
    let (mut time, mut counts, mut singles) = (Vec::new(), Vec::new(), Vec::new());
    for rec in read_csv(path, &RECORD_HEADER)? {
        let setting = |i: usize| {
            rec.get(i)
                .and_then(parse_setting)
                .ok_or_else(|| CliError::format(path, format!("bad analyzer setting {:?}", rec.get(i))))
        };
        settings.push((setting(0)?, setting(1)?));
        time.push(field(path, &rec, 2)?);
        counts.push(field(path, &rec, 3)?);
        singles.push([field(path, &rec, 4)?, field(path, &rec, 5)?]);
    }
    Ok(MeasurementRecord::new(settings, counts, time, singles)?)
}

pub const HISTOGRAM_HEADER: [&str; 2] = ["delay_ps", "counts"];

pub fn histogram_csv(hist: &CoincidenceHistogram) -> Vec<u8> {
    let rows = (0..hist.len()).map(|b| vec![fmt_f64(hist.center_ps(b)), hist.counts()[b].to_string()]);
    csv_bytes(&HISTOGRAM_HEADER, rows)
}

/// Rebuilds a histogram from its CSV; bins must be contiguous and centered
/// symmetrically about zero.
pub fn read_histogram_csv(path: &Path) -> Result<CoincidenceHistogram> {
    let rows = read_csv(path, &HISTOGRAM_HEADER)?;
    let mut centers = Vec::with_capacity(rows.len());
    let mut counts = Vec::with_capacity(rows.len());
    for rec in &rows {
        centers.push(field::<f64>(path, rec, 0)?);
        counts.push(field::<u64>(path, rec, 1)?);
    }
    if centers.len() < 2 {
        return Err(CliError::format(path, "histogram needs at least two bins"));
    }
    let width_ps = centers[1] - centers[0];
    let hist = CoincidenceHistogram::from_counts(width_ps * 1e-12, counts)?;
    let consistent = centers.iter().enumerate().all(|(b, &c)| (hist.center_ps(b) - c).abs() < 1e-6 * width_ps.max(1.0));
    if !consistent {
        return Err(CliError::format(path, "bin centers are not a symmetric uniform grid"));
    }
    Ok(hist)
}

pub const SPECTRUM_HEADER: [&str; 3] = ["wavelength_nm", "intensity", "intensity_err"];

/// Clipped counts per nm with one-sigma errors, ascending wavelength.
pub fn spectrum_csv(spectrum: &ReconstructedSpectrum) -> Vec<u8> {
    let rows = spectrum
        .bins
        .iter()
        .map(|b| vec![fmt_f64(b.wavelength), fmt_f64(b.intensity()), fmt_f64(b.intensity_err())]);
    csv_bytes(&SPECTRUM_HEADER, rows)
}

pub const CAR_HEADER: [&str; 9] = [
    "batch",
    "temperature_offset_c",
    "car",
    "car_stderr",
    "peak_counts",
    "accidental_counts",
    "accidental_expected",
    "singles_s",
    "singles_i",
];

pub fn car_timeseries_csv(batches: &[CarBatch]) -> Vec<u8> {
    let rows = batches.iter().map(|b| {
        vec![
            b.index.to_string(),
            fmt_f64(b.temperature_offset),
            fmt_f64(b.car),
            fmt_f64(b.car_stderr),
            b.peak_counts.to_string(),
            b.accidental_counts.to_string(),
            fmt_f64(b.accidental_expected),
            fmt_f64(b.singles_rate[0]),
            fmt_f64(b.singles_rate[1]),
        ]
    });
    csv_bytes(&CAR_HEADER, rows)
}

pub const SWEEP_HEADER: [&str; 4] = ["power_mw", "car", "car_stderr", "coincidence_rate"];

pub fn sweep_csv(points: &[SweepPoint]) -> Vec<u8> {
    let rows = points
        .iter()
        .map(|p| [p.power, p.car, p.car_stderr, p.coincidence_rate].map(fmt_f64).to_vec());
    csv_bytes(&SWEEP_HEADER, rows)
}

pub const TTAG_MAGIC: &[u8; 5] = b"TTAG1";
const TTAG_RECORD: usize = 9;

/// Merges streams into time order (ties by channel) as 9-byte records after
/// the magic: `u8` channel then `u64` picoseconds, little-endian.
pub fn encode_ttag(streams: &[TimeTagStream]) -> Vec<u8> {
    let mut events: Vec<(u64, u8)> = streams
        .iter()
        .flat_map(|s| s.tags().iter().map(move |&t| (t, s.channel())))
        .collect();
    events.sort_unstable();
    let mut out = Vec::with_capacity(TTAG_MAGIC.len() + TTAG_RECORD * events.len());
    out.extend_from_slice(TTAG_MAGIC);
    for (t, ch) in events {
        out.push(ch);
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

/// Splits a TTAG file back into one stream per channel, indexed by channel
/// number up to the largest present.
pub fn decode_ttag(bytes: &[u8]) -> std::result::Result<Vec<TimeTagStream>, String> {
    let body = bytes.strip_prefix(TTAG_MAGIC.as_slice()).ok_or("missing TTAG1 header")?;
    if body.len() % TTAG_RECORD != 0 {
        return Err(format!("trailing {} bytes after the last record", body.len() % TTAG_RECORD));
    }
    let mut channels: Vec<Vec<u64>> = Vec::new();
    for rec in body.chunks_exact(TTAG_RECORD) {
        let ch = rec[0] as usize;
        let t = u64::from_le_bytes(rec[1..].try_into().expect("8 bytes"));
        if channels.len() <= ch {
            channels.resize(ch + 1, Vec::new());
        }
        channels[ch].push(t);
    }
    channels
        .into_iter()
        .enumerate()
        .map(|(ch, tags)| TimeTagStream::new(ch as u8, tags).map_err(|e| format!("channel {ch}: {e}")))
        .collect()
}

pub fn write_ttag(path: &Path, streams: &[TimeTagStream]) -> Result<()> {
    write_atomic(path, &encode_ttag(streams))
}

pub fn read_ttag(path: &Path) -> Result<Vec<TimeTagStream>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_ttag(&bytes).map_err(|m| CliError::format(path, m))
}
