//! End-to-end tests of the `scalic` binary: pipeline sweeps, codec file
//! round trips, BD and break-even reports, and plot-data emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scalic_core::pixel::{save_ppm, ColorSpace, RasterImage};

fn scalic() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scalic"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn scalic");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn scalic");
    assert!(!out.status.success(), "command unexpectedly succeeded");
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(stderr.starts_with("error: "), "stderr: {stderr}");
    stderr
}

/// Deterministic photo-like RGB fixture: smooth shading plus fine detail
/// that coarse downsampling destroys, so the enhancement layer has real
/// work to do at every QP.
fn test_image(w: usize, h: usize) -> RasterImage {
    let mut planes: [Vec<u16>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut noise = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % 7) as f64 - 3.0
    };
    for p in 0..3usize {
        for y in 0..h {
            for x in 0..w {
                let (xf, yf) = (x as f64, y as f64);
                let v = 120.0
                    + 60.0 * (xf * 0.045 + p as f64 * 0.8).sin()
                    + 30.0 * (yf * 0.07 - p as f64).cos()
                    + 24.0 * (xf * 0.9 + yf * 0.7).sin()
                    + noise();
                planes[p].push(v.clamp(0.0, 255.0) as u16);
            }
        }
    }
    RasterImage::new(w, h, 8, ColorSpace::Rgb, planes).unwrap()
}

fn write_manifest(dir: &Path, image: &Path, out: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(
        &path,
        format!(
            "images = [{:?}]\nsurrogate_configs = [\"4:4\", \"1:8\"]\nqps = [22, 27, 32]\nsearch_range = 8\noutput_dir = {:?}\n{extra}",
            image.display().to_string(),
            out.display().to_string(),
        ),
    )
    .unwrap();
    path
}

#[test]
fn pipeline_rows_are_monotone_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let image_path = dir.path().join("photo.ppm");
    save_ppm(&test_image(192, 160), &image_path).unwrap();
    let out = dir.path().join("out");
    let manifest = write_manifest(dir.path(), &image_path, &out, "engine = \"inhouse\"\n");

    run_ok(scalic().args(["pipeline", "--manifest"]).arg(&manifest));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6, "{csv}");

    let column = |row: &str, i: usize| -> f64 {
        row.split(',').nth(i).unwrap().parse().unwrap()
    };
    // Columns: image,cfg,scale,bits,filter,qp,engine,base_bpp,preview_psnr_db,enh_bpp,...
    let s2b6: Vec<f64> = rows
        .iter()
        .filter(|r| r.contains(",s4b4_bilinear,"))
        .map(|r| column(r, 9))
        .collect();
    assert_eq!(s2b6.len(), 3);
    assert!(
        s2b6[0] > s2b6[1] && s2b6[1] > s2b6[2],
        "enh bpp not strictly decreasing in QP: {s2b6:?}"
    );

    // Lossless preview config: the enhancement degenerates to all-SKIP.
    for row in rows.iter().filter(|r| r.contains(",s1b8_bilinear,")) {
        let bpp = column(row, 9);
        assert!(bpp < 0.01, "lossless-preview row too big: {row}");
        let preview_psnr = column(row, 8);
        assert_eq!(preview_psnr, 999.0, "{row}");
    }

    // Re-running the pipeline reproduces both outputs byte for byte.
    let json_first = fs::read(out.join("results.json")).unwrap();
    run_ok(scalic().args(["pipeline", "--manifest"]).arg(&manifest));
    assert_eq!(fs::read_to_string(out.join("results.csv")).unwrap(), csv);
    assert_eq!(fs::read(out.join("results.json")).unwrap(), json_first);
}

#[test]
fn pipeline_with_missing_vtm_binary_fails_before_encoding() {
    let dir = tempfile::tempdir().unwrap();
    let image_path = dir.path().join("photo.ppm");
    save_ppm(&test_image(64, 64), &image_path).unwrap();
    let out = dir.path().join("out");
    let manifest = write_manifest(
        dir.path(),
        &image_path,
        &out,
        "engine = \"vtm\"\nvtm_encoder = \"/no/such/EncoderApp\"\n",
    );
    let stderr = run_err(scalic().args(["pipeline", "--manifest"]).arg(&manifest));
    assert!(stderr.contains("/no/such/EncoderApp"), "{stderr}");
    assert!(!out.join("results.csv").exists(), "no partial output");
}

#[test]
fn codec_file_round_trip_through_base_preview_enh_decode() {
    let dir = tempfile::tempdir().unwrap();
    let image_path = dir.path().join("in.ppm");
    save_ppm(&test_image(96, 64), &image_path).unwrap();
    let smb = dir.path().join("base.smb");
    let preview_ppm = dir.path().join("preview.ppm");
    let sme = dir.path().join("enh.sme");
    let recon_a = dir.path().join("recon_enc.yuv");
    let recon_b = dir.path().join("recon_dec.yuv");

    let out = run_ok(
        scalic()
            .args(["base", "--input"])
            .arg(&image_path)
            .args(["--scale", "2", "--bits", "6", "--output"])
            .arg(&smb),
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("bpp"));

    run_ok(
        scalic()
            .args(["preview", "--bitstream"])
            .arg(&smb)
            .arg("--output")
            .arg(&preview_ppm),
    );
    assert!(preview_ppm.is_file());

    run_ok(
        scalic()
            .args(["enh", "--original"])
            .arg(&image_path)
            .arg("--preview")
            .arg(&smb)
            .args(["--qp", "27", "--search-range", "8", "--output"])
            .arg(&sme)
            .arg("--recon")
            .arg(&recon_a),
    );
    run_ok(
        scalic()
            .args(["decode", "--bitstream"])
            .arg(&sme)
            .arg("--preview")
            .arg(&smb)
            .arg("--output")
            .arg(&recon_b),
    );
    // Encoder-side and decoder-side reconstructions are bit-identical.
    assert_eq!(fs::read(&recon_a).unwrap(), fs::read(&recon_b).unwrap());
}

fn curve_file(dir: &Path, name: &str, scale: f64) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("rate_bpp,quality,kind\n");
    for (r, q) in [(0.1, 30.0), (0.25, 33.0), (0.6, 36.0), (1.5, 39.0), (4.0, 42.0)] {
        text.push_str(&format!("{},{},PSNR\n", r * scale, q));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn bd_command_reports_zeros_and_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let anchor = curve_file(dir.path(), "anchor.csv", 1.0);
    let doubled = curve_file(dir.path(), "doubled.csv", 2.0);
    let json = dir.path().join("report.json");

    let out = run_ok(
        scalic()
            .args(["bd", "--candidate"])
            .arg(&anchor)
            .arg("--anchor")
            .arg(&anchor)
            .arg("--json")
            .arg(&json),
    );
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("BD-Rate     : +0.0000 %"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["bd_rate_percent"], 0.0);
    assert_eq!(report["bd_quality_delta"], 0.0);

    let out = run_ok(
        scalic()
            .args(["bd", "--candidate"])
            .arg(&doubled)
            .arg("--anchor")
            .arg(&anchor)
            .args(["--method", "cubic_fit"])
            .arg("--json")
            .arg(&json),
    );
    drop(out);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let bd = report["bd_rate_percent"].as_f64().unwrap();
    assert!((bd - 100.0).abs() < 0.1, "{bd}");

    // Requesting the wrong kind is a structured failure.
    let stderr = run_err(
        scalic()
            .args(["bd", "--candidate"])
            .arg(&anchor)
            .arg("--anchor")
            .arg(&anchor)
            .args(["--kind", "mAP"]),
    );
    assert!(stderr.contains("does not match"), "{stderr}");
}

fn records_file(dir: &Path, name: &str, base_scale: f64, total_scale: f64) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("base_rate_bpp,enh_rate_bpp,base_quality,enh_quality\n");
    for (i, base) in [1.0f64, 1.2, 1.4, 1.6].into_iter().enumerate() {
        let anchor_total = 2.0 * base;
        let b = base * base_scale;
        let t = anchor_total * total_scale;
        let base_q = 40.0 + i as f64 * 2.0;
        let enh_q = 35.0 + i as f64;
        text.push_str(&format!("{},{},{},{}\n", b, t - b, base_q, enh_q));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn breakeven_command_reproduces_the_worked_value() {
    let dir = tempfile::tempdir().unwrap();
    let anchor = records_file(dir.path(), "anchor.csv", 1.0, 1.0);
    let candidate = records_file(dir.path(), "candidate.csv", 0.7, 1.2);
    let json = dir.path().join("be.json");

    let out = run_ok(
        scalic()
            .args(["breakeven", "--candidate-records"])
            .arg(&candidate)
            .arg("--anchor-records")
            .arg(&anchor)
            .arg("--json")
            .arg(&json),
    );
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("total_over_base"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let f_star = report["f_star"].as_f64().unwrap();
    assert!((f_star - 0.428571).abs() < 1e-4, "f* = {f_star}");
    assert_eq!(report["oracle_agrees"], true);
    assert_eq!(report["rho_convention"], "total_over_base");

    // Convention flag is echoed unchanged.
    run_ok(
        scalic()
            .args(["breakeven", "--candidate-records"])
            .arg(&candidate)
            .arg("--anchor-records")
            .arg(&anchor)
            .args(["--rho-convention", "enh_over_base"])
            .arg("--json")
            .arg(&json),
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["rho_convention"], "enh_over_base");
    assert_eq!(report["rho"].as_f64().unwrap(), 1.0);

    // Candidate == anchor is flagged always-equal, not an error.
    run_ok(
        scalic()
            .args(["breakeven", "--candidate-records"])
            .arg(&anchor)
            .arg("--anchor-records")
            .arg(&anchor)
            .arg("--json")
            .arg(&json),
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["always_equal"], true);
}

#[test]
fn plot_data_command_groups_and_sorts() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("results.csv");
    fs::write(
        &results,
        "image,cfg,qp,enh_bpp,recon_psnr_db\n\
         a.ppm,s2b6,37,0.20,33.0\n\
         a.ppm,s2b6,22,0.90,38.0\n\
         a.ppm,s4b4,22,1.10,37.0\n",
    )
    .unwrap();
    let out_dir = dir.path().join("plots");
    run_ok(
        scalic()
            .args(["plot-data", "--results"])
            .arg(&results)
            .args(["--x", "enh_bpp", "--y", "recon_psnr_db", "--group", "cfg", "--out-dir"])
            .arg(&out_dir),
    );
    let files: Vec<_> = fs::read_dir(&out_dir).unwrap().collect();
    assert_eq!(files.len(), 2);
    let s2 = fs::read_to_string(out_dir.join("cfg_s2b6.csv")).unwrap();
    assert_eq!(s2, "enh_bpp,recon_psnr_db\n0.20,33.0\n0.90,38.0\n");

    let stderr = run_err(
        scalic()
            .args(["plot-data", "--results"])
            .arg(&results)
            .args(["--x", "bogus", "--y", "recon_psnr_db", "--group", "cfg", "--out-dir"])
            .arg(&out_dir),
    );
    assert!(stderr.contains("unknown column"), "{stderr}");
}
