//! End-to-end behaviour of the command-line interface beyond the
//! acceptance criteria: config-driven runs, unit conversion, manifests.

use std::path::Path;
use std::process::Command;

fn sqfluor() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sqfluor"))
}

#[test]
fn config_driven_sim_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let sim_out = dir.path().join("sim");
    let config = dir.path().join("job.toml");
    std::fs::write(
        &config,
        "[model]\nkind = \"no-drive\"\ngain_db = 1.4\neta = 0.55\n\n[noise]\nsigma = 0.01\nseed = 7\n",
    )
    .unwrap();
    let status = sqfluor()
        .args([
            "sim",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "7",
            "--noise",
            "0.01",
            "--out-dir",
            sim_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let trace_path = sim_out.join("trace_000.trace");
    assert!(trace_path.exists());
    assert!(sim_out.join("manifest.txt").exists());

    let fit_config = dir.path().join("fit.toml");
    std::fs::write(
        &fit_config,
        format!(
            "[model]\nkind = \"no-drive\"\ngain_db = 1.4\neta = 0.55\n\n[fit]\ntraces = [\"{}\"]\n",
            trace_path.display()
        ),
    )
    .unwrap();
    let fit_out = dir.path().join("fit");
    let output = sqfluor()
        .args([
            "fit",
            "--config",
            fit_config.to_str().unwrap(),
            "--out-dir",
            fit_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report = std::fs::read_to_string(fit_out.join("fit_report_000.txt")).unwrap();
    assert!(report.contains("m_minus_n"));
    assert!(report.contains("[provenance]"));
    // The recovered squeezing sits near the synthetic truth.
    let line = report
        .lines()
        .find(|l| l.starts_with("m_minus_n"))
        .expect("estimate present");
    let value: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((value - 0.1893).abs() < 0.02, "m_minus_n = {value}");
}

#[test]
fn hertz_output_converts_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hz");
    let status = sqfluor()
        .args([
            "sim",
            "--preset",
            "squeezed-no-drive",
            "--format",
            "hz",
            "--grid",
            "4:41",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let trace = sqfluor::io::read_trace(&out.join("trace_000.trace")).unwrap();
    assert_eq!(trace.metadata.unit, sqfluor::trace::OffsetUnit::Hertz);
    // Span ±4γ at γ = 304 kHz.
    assert!((trace.offsets()[0] + 4.0 * 304e3).abs() < 1e-6);
    assert!((trace.offsets()[40] - 4.0 * 304e3).abs() < 1e-6);
}

#[test]
fn bad_job_config_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[model]\nkind = \"no-drive\"\nn = -2.0\n").unwrap();
    let output = sqfluor()
        .args(["sim", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let message = String::from_utf8_lossy(&output.stderr);
    assert!(message.contains("model.n"), "stderr: {message}");
}

#[test]
fn sweep_gain_emits_table_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gain");
    let status = sqfluor()
        .args([
            "sweep-gain",
            "--gains",
            "1.0,2.0,3.0,4.0",
            "--noise",
            "0.005",
            "--seed",
            "3",
            "--grid",
            "8:801",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let tsv = std::fs::read_to_string(out.join("gain_sweep.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 5, "header + one row per gain");
    assert!(out.join("efficiency_report.txt").exists());
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    for name in ["gain_000.trace", "gain_003.trace", "gain_sweep.tsv", "efficiency_report.txt"] {
        assert!(manifest.contains(name), "manifest missing {name}");
        assert!(out.join(name).exists());
    }
    // Manifest hashes match the files on disk.
    for line in manifest.lines().filter(|l| l.starts_with("file = ")) {
        let rest = line.trim_start_matches("file = ");
        let (name, hash) = rest.split_once(" sha256=").unwrap();
        let actual = sqfluor::io::sha256_hex_file(&out.join(name)).unwrap();
        assert_eq!(actual, hash, "hash mismatch for {name}");
    }
}

#[test]
fn fit_flags_accept_multiple_traces_for_joint_model() {
    let dir = tempfile::tempdir().unwrap();
    // Two driven traces at a known phase spacing.
    let grid = sqfluor::trace::symmetric_grid(12.0, 601);
    let bath = sqfluor::model::bath_from_gain(
        &sqfluor::model::GainPoint::new(1.5, 0.55).unwrap(),
        0.9,
    )
    .unwrap();
    let mut paths = Vec::new();
    for (k, offset) in [0.0, 0.4].iter().enumerate() {
        let shifted = sqfluor::model::SqueezedBath::new(
            bath.n_photons(),
            bath.m_mag(),
            0.9 + offset,
        )
        .unwrap();
        let model = sqfluor::fitting::SyntheticModel::FullAnalytic {
            bath: shifted,
            eta_c: 0.81,
            rabi: 3.947,
            background: sqfluor::spectra::BackgroundModel::Flat,
            scale: 1.0,
            offset: 0.0,
            curvature: 0.0,
        };
        let mut trace = sqfluor::fitting::synthesize_trace(
            &model,
            &sqfluor::fitting::NoiseSpec { sigma: 0.004, seed: 30 + k as u64 },
            &grid,
        )
        .unwrap();
        trace.metadata.gamma_hz = Some(304e3);
        trace.metadata.rabi_hz = Some(3.947 * 304e3);
        trace.metadata.gain_db = Some(1.5);
        let path = dir.path().join(format!("trace_{k}.trace"));
        sqfluor::io::write_trace(&trace, &path).unwrap();
        paths.push(path);
    }
    let out = dir.path().join("joint");
    let output = sqfluor()
        .args([
            "fit",
            "--model",
            "full-analytic",
            "--trace",
            paths[0].to_str().unwrap(),
            "--trace",
            paths[1].to_str().unwrap(),
            "--phase-offsets",
            "0.0,0.4",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report = std::fs::read_to_string(out.join("fit_report_joint.txt")).unwrap();
    let line = report.lines().find(|l| l.starts_with("m_minus_n")).unwrap();
    let value: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    let truth = bath.m_mag() - bath.n_photons();
    assert!((value - truth).abs() / truth < 0.1, "joint m_minus_n {value} vs {truth}");
}

#[test]
fn vacuum_mollow_preset_emits_triplet() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mollow");
    let status = sqfluor()
        .args([
            "sim",
            "--preset",
            "vacuum-mollow",
            "--rabi",
            "5",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let trace = sqfluor::io::read_trace(&out.join("trace_000.trace")).unwrap();
    let value_at = |target: f64| -> f64 {
        let idx = trace
            .offsets()
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - target).abs().total_cmp(&(*b - target).abs()))
            .map(|(i, _)| i)
            .unwrap();
        trace.values()[idx]
    };
    // Three peaks: center and sidebands near ±Ω stand above the valleys.
    let (center, side, valley, floor) = (value_at(0.0), value_at(4.9), value_at(2.5), value_at(20.0));
    assert!(center > 2.0 * side, "center {center} vs sideband {side}");
    assert!(side > 3.0 * valley, "sideband {side} vs valley {valley}");
    assert!(valley > floor, "valley {valley} vs floor {floor}");
}

#[test]
fn fig2a_preset_shows_narrow_peak_with_negative_shoulders() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2a");
    let status = sqfluor()
        .args(["reproduce", "fig2a", "--out-dir", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let trace = sqfluor::io::read_trace(&out.join("fig2a.trace")).unwrap();
    let center = trace
        .values()
        .iter()
        .zip(trace.offsets())
        .filter(|(_, &w)| w.abs() < 0.1)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let edge: f64 = {
        let wings: Vec<f64> = trace
            .values()
            .iter()
            .zip(trace.offsets())
            .filter(|(_, &w)| w.abs() > 7.0)
            .map(|(&v, _)| v)
            .collect();
        wings.iter().sum::<f64>() / wings.len() as f64
    };
    let shoulder: f64 = {
        let band: Vec<f64> = trace
            .values()
            .iter()
            .zip(trace.offsets())
            .filter(|(_, &w)| (1.5..3.5).contains(&w.abs()))
            .map(|(&v, _)| v)
            .collect();
        band.iter().sum::<f64>() / band.len() as f64
    };
    assert!(center > 2.0 * edge, "narrow peak {center} above background {edge}");
    assert!(shoulder < edge, "shoulders {shoulder} dip below the background {edge}");
}

#[test]
fn hertz_traces_fit_identically() {
    // The same synthetic data fit in γ units and in hertz must agree.
    let dir = tempfile::tempdir().unwrap();
    let sim = |fmt: &str, out: &Path| {
        let status = sqfluor()
            .args([
                "sim",
                "--preset",
                "squeezed-no-drive",
                "--noise",
                "0.01",
                "--seed",
                "4",
                "--grid",
                "8:1001",
                "--format",
                fmt,
                "--out-dir",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let gamma_out = dir.path().join("gamma");
    let hz_out = dir.path().join("hz");
    sim("gamma", &gamma_out);
    sim("hz", &hz_out);
    let mut reports = Vec::new();
    for src in [&gamma_out, &hz_out] {
        let fit_out = src.join("fit");
        let output = sqfluor()
            .args([
                "fit",
                "--model",
                "no-drive",
                "--trace",
                src.join("trace_000.trace").to_str().unwrap(),
                "--out-dir",
                fit_out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
        let report = std::fs::read_to_string(fit_out.join("fit_report_000.txt")).unwrap();
        let line = report.lines().find(|l| l.starts_with("m_minus_n")).unwrap();
        reports.push(line.split('=').nth(1).unwrap().trim().parse::<f64>().unwrap());
    }
    assert!(
        (reports[0] - reports[1]).abs() < 1e-6,
        "unit handling changed the fit: {reports:?}"
    );
}

#[test]
fn help_documents_flags() {
    for (cmd, expect) in [
        ("sim", "--preset"),
        ("oracle-check", "--tolerance"),
        ("fit", "--config"),
        ("sweep-phase", "--out-dir"),
        ("sweep-gain", "--gains"),
        ("reproduce", "--phi"),
    ] {
        let output = sqfluor().args([cmd, "--help"]).output().unwrap();
        let text = String::from_utf8_lossy(&output.stdout);
        assert!(text.contains(expect), "{cmd} help missing {expect}");
    }
}

#[test]
fn reproduce_rejects_unknown_figure() {
    let output = sqfluor().args(["reproduce", "fig99"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn reproduce_fig3_shows_phase_swap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3");
    let status = sqfluor()
        .args([
            "reproduce",
            "fig3",
            "--phi",
            "0,1.5708",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let tsv = std::fs::read_to_string(out.join("fig3_widths.tsv")).unwrap();
    let rows: Vec<Vec<f64>> = tsv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    // Aligned squeezing broadens the center line; a quarter period away it
    // goes subnatural.
    assert!(rows[0][1] > 0.5, "center width at phi=0: {}", rows[0][1]);
    assert!(rows[1][1] < 0.5, "center width at phi=pi/2: {}", rows[1][1]);
}

#[test]
fn reproduce_fig6_reports_squeezing_difference() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig6");
    let status = sqfluor()
        .args(["reproduce", "fig6", "--out-dir", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(out.join("fig6_fit.txt")).unwrap();
    let estimate_block = report.split("[uncertainties]").next().unwrap();
    let uncertainty_block = report.split("[uncertainties]").nth(1).unwrap();
    assert!(estimate_block.contains("m_minus_n"));
    assert!(uncertainty_block.contains("m_minus_n"));
    let line = estimate_block
        .lines()
        .find(|l| l.starts_with("m_minus_n"))
        .unwrap();
    let value: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((value - 0.258).abs() < 0.013, "fig6 m_minus_n = {value}");
}

#[test]
fn golden_reference_is_reachable() {
    // Keep the path used by the acceptance suite valid.
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/no_drive_reference.trace");
    assert!(golden.exists());
}
