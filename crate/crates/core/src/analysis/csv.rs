//! CSV ingest and emit for rate-quality curves and scalable records.
//!
//! Curve schema: header `rate_bpp,quality,kind`, one point per row, kind one
//! of `PSNR`, `mAP`, `mAP@50` (consistent across the file). Rows may arrive
//! unsorted; ingest sorts by rate and rejects duplicate rates and quality
//! regressions with the offending input row number. Values are written with
//! nine significant digits, which round-trips every value the writer emits.
//!
//! Record schema: header `base_rate_bpp,enh_rate_bpp,base_quality,enh_quality`.

use std::fs;
use std::path::Path;

use super::{AnalysisError, QualityKind, RdCurve, RdPoint, ScalableRdRecord};

pub const CURVE_HEADER: &str = "rate_bpp,quality,kind";
pub const RECORD_HEADER: &str = "base_rate_bpp,enh_rate_bpp,base_quality,enh_quality";

fn csv_err(path: &Path, row: usize, msg: impl Into<String>) -> AnalysisError {
    AnalysisError::Csv {
        path: path.to_path_buf(),
        row,
        msg: msg.into(),
    }
}

fn read_to_string(path: &Path) -> Result<String, AnalysisError> {
    fs::read_to_string(path).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    row: usize,
    field: &str,
    what: &str,
) -> Result<T, AnalysisError> {
    field
        .trim()
        .parse()
        .map_err(|_| csv_err(path, row, format!("malformed {what}: {field:?}")))
}

/// Nine significant digits, plain decimal notation for ordinary magnitudes.
pub(crate) fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..9).contains(&exp) {
        return format!("{v:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn load_rd_csv(path: &Path) -> Result<RdCurve, AnalysisError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| csv_err(path, 1, "empty file"))?;
    if header.trim() != CURVE_HEADER {
        return Err(csv_err(
            path,
            1,
            format!("expected header {CURVE_HEADER:?}, got {header:?}"),
        ));
    }
    let mut kind: Option<QualityKind> = None;
    // (input row number, point)
    let mut rows: Vec<(usize, RdPoint)> = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(csv_err(path, row, format!("expected 3 fields, got {}", fields.len())));
        }
        let rate_bpp: f64 = parse_field(path, row, fields[0], "rate")?;
        let quality: f64 = parse_field(path, row, fields[1], "quality")?;
        let row_kind: QualityKind = fields[2]
            .trim()
            .parse()
            .map_err(|_| csv_err(path, row, format!("unknown quality kind {:?}", fields[2].trim())))?;
        match kind {
            None => kind = Some(row_kind),
            Some(k) if k == row_kind => {}
            Some(k) => {
                return Err(csv_err(
                    path,
                    row,
                    format!("kind {} conflicts with earlier {}", row_kind.name(), k.name()),
                ))
            }
        }
        if !(rate_bpp.is_finite() && rate_bpp > 0.0) {
            return Err(csv_err(path, row, format!("rate must be positive, got {rate_bpp}")));
        }
        rows.push((row, RdPoint { rate_bpp, quality }));
    }
    let kind = kind.ok_or_else(|| csv_err(path, 1, "no data rows"))?;
    rows.sort_by(|a, b| a.1.rate_bpp.total_cmp(&b.1.rate_bpp));
    for pair in rows.windows(2) {
        let ((row_a, a), (row_b, b)) = (pair[0], pair[1]);
        if a.rate_bpp == b.rate_bpp {
            return Err(csv_err(
                path,
                row_b,
                format!("duplicate rate {} (also on row {row_a})", fmt_sig9(a.rate_bpp)),
            ));
        }
        if b.quality < a.quality {
            return Err(csv_err(
                path,
                row_b,
                format!(
                    "quality {} regresses below {} at higher rate",
                    fmt_sig9(b.quality),
                    fmt_sig9(a.quality)
                ),
            ));
        }
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "curve".to_string());
    RdCurve::new(label, kind, rows.into_iter().map(|(_, p)| p).collect())
}

pub fn save_rd_csv(curve: &RdCurve, path: &Path) -> Result<(), AnalysisError> {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in curve.points() {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_sig9(p.rate_bpp),
            fmt_sig9(p.quality),
            curve.kind().name()
        ));
    }
    fs::write(path, out).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_records_csv(path: &Path) -> Result<Vec<ScalableRdRecord>, AnalysisError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| csv_err(path, 1, "empty file"))?;
    if header.trim() != RECORD_HEADER {
        return Err(csv_err(
            path,
            1,
            format!("expected header {RECORD_HEADER:?}, got {header:?}"),
        ));
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(csv_err(path, row, format!("expected 4 fields, got {}", fields.len())));
        }
        let record = ScalableRdRecord {
            base_rate: parse_field(path, row, fields[0], "base rate")?,
            enh_rate: parse_field(path, row, fields[1], "enh rate")?,
            base_quality: parse_field(path, row, fields[2], "base quality")?,
            enh_quality: parse_field(path, row, fields[3], "enh quality")?,
        };
        record
            .validate()
            .map_err(|e| csv_err(path, row, e.to_string()))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(AnalysisError::EmptyRecords);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(contents: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        fs::write(&path, contents).unwrap();
        (dir, path)
    }

    #[test]
    fn well_formed_file_loads_four_points() {
        let (_d, path) = write(
            "rate_bpp,quality,kind\n0.1,30.0,PSNR\n0.2,32.0,PSNR\n0.4,34.0,PSNR\n0.8,36.0,PSNR\n",
        );
        let curve = load_rd_csv(&path).unwrap();
        assert_eq!(curve.points().len(), 4);
        assert_eq!(curve.kind(), QualityKind::Psnr);
        assert_eq!(curve.label(), "curve");
    }

    #[test]
    fn unsorted_rows_are_sorted_on_ingest() {
        let (_d, path) = write(
            "rate_bpp,quality,kind\n0.8,36.0,mAP\n0.1,30.0,mAP\n0.4,34.0,mAP\n0.2,32.0,mAP\n",
        );
        let curve = load_rd_csv(&path).unwrap();
        let rates: Vec<f64> = curve.points().iter().map(|p| p.rate_bpp).collect();
        assert_eq!(rates, vec![0.1, 0.2, 0.4, 0.8]);
    }

    #[test]
    fn duplicate_rate_names_the_row() {
        let (_d, path) = write(
            "rate_bpp,quality,kind\n0.1,30.0,PSNR\n0.2,32.0,PSNR\n0.2,33.0,PSNR\n0.8,36.0,PSNR\n",
        );
        match load_rd_csv(&path) {
            Err(AnalysisError::Csv { row, msg, .. }) => {
                assert_eq!(row, 4);
                assert!(msg.contains("duplicate rate"), "{msg}");
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn quality_regression_names_the_row() {
        let (_d, path) = write(
            "rate_bpp,quality,kind\n0.1,30.0,PSNR\n0.2,29.0,PSNR\n0.4,34.0,PSNR\n0.8,36.0,PSNR\n",
        );
        match load_rd_csv(&path) {
            Err(AnalysisError::Csv { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn mixed_kinds_are_rejected() {
        let (_d, path) = write(
            "rate_bpp,quality,kind\n0.1,30.0,PSNR\n0.2,32.0,mAP\n0.4,34.0,PSNR\n0.8,36.0,PSNR\n",
        );
        assert!(matches!(
            load_rd_csv(&path),
            Err(AnalysisError::Csv { row: 3, .. })
        ));
    }

    #[test]
    fn bad_header_is_rejected() {
        let (_d, path) = write("rate,quality\n0.1,30.0\n");
        assert!(matches!(
            load_rd_csv(&path),
            Err(AnalysisError::Csv { row: 1, .. })
        ));
    }

    #[test]
    fn save_load_round_trip_is_value_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let curve = RdCurve::new(
            "out",
            QualityKind::Map50,
            vec![
                RdPoint { rate_bpp: 0.123456789, quality: 41.25 },
                RdPoint { rate_bpp: 0.25, quality: 44.5 },
                RdPoint { rate_bpp: 1.0, quality: 50.0625 },
                RdPoint { rate_bpp: 3.5, quality: 55.125 },
            ],
        )
        .unwrap();
        save_rd_csv(&curve, &path).unwrap();
        let back = load_rd_csv(&path).unwrap();
        assert_eq!(back.points(), curve.points());
        assert_eq!(back.kind(), curve.kind());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.58), "0.580000000");
        assert_eq!(fmt_sig9(37.5251), "37.5251000");
        assert_eq!(fmt_sig9(0.0), "0.0");
        assert_eq!(fmt_sig9(-2.5), "-2.50000000");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
    }

    #[test]
    fn records_csv_round_trip_and_validation() {
        let (_d, path) = write(
            "base_rate_bpp,enh_rate_bpp,base_quality,enh_quality\n0.2,0.6,40.0,35.0\n0.3,0.7,42.0,36.0\n",
        );
        let records = load_records_csv(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].base_rate, 0.2);

        let (_d2, bad) = write(
            "base_rate_bpp,enh_rate_bpp,base_quality,enh_quality\n0.0,0.6,40.0,35.0\n",
        );
        assert!(matches!(
            load_records_csv(&bad),
            Err(AnalysisError::Csv { row: 2, .. })
        ));
    }
}
