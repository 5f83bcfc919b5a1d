//! Self-contained plot-script emission for outage sweeps.
//!
//! The emitted artifact is an ordinary matplotlib script: it re-reads the
//! CSVs it was generated against, draws the analysis columns as lines and
//! the simulation columns as hollow markers on a log-scale outage axis, and
//! saves a PNG next to itself.  It refuses CSVs whose rows carry more than
//! one config hash, so accidentally concatenated outputs fail loudly
//! instead of plotting a chimera.

use std::path::Path;

use rislink_core::{ModelError, Result};

use crate::experiments::write_atomic;

/// Writes a plot script rendering one line+marker pair per CSV.
///
/// `title` becomes the axes title; each curve pair is labeled with the CSV
/// file stem.  Fails if any CSV is missing.
pub fn emit_plot_script(csv_paths: &[&Path], title: &str, script_path: &Path) -> Result<()> {
    if csv_paths.is_empty() {
        return Err(ModelError::InvalidConfig {
            message: "plot script needs at least one CSV input".to_string(),
        });
    }
    for path in csv_paths {
        if !path.is_file() {
            return Err(ModelError::Io {
                message: format!("plot input {} does not exist", path.display()),
            });
        }
    }
    let list = csv_paths
        .iter()
        .map(|p| format!("    {:?},", p.display().to_string()))
        .collect::<Vec<_>>()
        .join("\n");
    let script = format!(
        r#"#!/usr/bin/env python3
"""Outage-probability plot over the CSV artifacts listed below."""

import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV_PATHS = [
{list}
]
TITLE = {title:?}


def load(path):
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        rows = list(reader)
        columns = reader.fieldnames or []
    if not rows:
        sys.exit(f"{{path}}: no data rows")
    hashes = sorted({{row["config_hash"] for row in rows}})
    if len(hashes) != 1:
        sys.exit(f"{{path}}: refusing mixed config hashes {{hashes}}")
    return columns[0], rows


def series(rows, x_name, y_name):
    pairs = [
        (float(row[x_name]), float(row[y_name]))
        for row in rows
        if row[y_name] not in ("", None)
    ]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def main():
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for index, path in enumerate(CSV_PATHS):
        x_name, rows = load(path)
        label = os.path.splitext(os.path.basename(path))[0]
        color = f"C{{index}}"
        x, spa = series(rows, x_name, "p_out_spa")
        if x:
            ax.semilogy(x, spa, "-", color=color, label=f"{{label}} (analysis)")
        x, mc = series(rows, x_name, "p_out_mc")
        if x:
            ax.semilogy(
                x,
                mc,
                linestyle="none",
                marker="o",
                markerfacecolor="none",
                color=color,
                label=f"{{label}} (simulation)",
            )
    ax.set_xlabel("average SNR (dB)")
    ax.set_ylabel("outage probability")
    ax.set_title(TITLE)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    out = os.path.splitext(os.path.abspath(sys.argv[0]))[0] + ".png"
    fig.savefig(out, dpi=150, bbox_inches="tight")
    print(out)


if __name__ == "__main__":
    main()
"#
    );
    write_atomic(script_path, &script)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("rislink-plot-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn fake_csv(dir: &Path, name: &str, hash: &str) -> PathBuf {
        let path = dir.join(name);
        let mut text = String::from(
            "rho_bar_db,p_out_spa,p_out_mc,mc_stderr,p_out_benchmark_mc,config_hash\n",
        );
        for i in 0..5 {
            let rho = -36.0 + 0.5 * i as f64;
            let p = 10f64.powi(-i - 1);
            text.push_str(&format!("{rho},{p},{p},0.001,{p},{hash}\n"));
        }
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn missing_csv_is_an_error() {
        let dir = temp_dir("missing");
        let script = dir.join("plot.py");
        let ghost = dir.join("ghost.csv");
        assert!(emit_plot_script(&[&ghost], "t", &script).is_err());
        assert!(emit_plot_script(&[], "t", &script).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn script_lists_every_input_and_labels_them() {
        let dir = temp_dir("labels");
        let a = fake_csv(&dir, "alpha.csv", "aaaa");
        let b = fake_csv(&dir, "beta.csv", "bbbb");
        let c = fake_csv(&dir, "gamma.csv", "cccc");
        let script = dir.join("plot.py");
        emit_plot_script(&[&a, &b, &c], "three curves", &script).unwrap();
        let text = std::fs::read_to_string(&script).unwrap();
        for name in ["alpha.csv", "beta.csv", "gamma.csv"] {
            assert!(text.contains(name), "script does not mention {name}");
        }
        assert!(text.contains("three curves"));
        assert!(text.contains("config_hash"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn script_executes_and_renders() {
        let dir = temp_dir("smoke");
        let a = fake_csv(&dir, "curve.csv", "feedc0de");
        let script = dir.join("plot.py");
        emit_plot_script(&[&a], "smoke", &script).unwrap();
        let output = std::process::Command::new("python3")
            .arg(&script)
            .output()
            .expect("python3 must be runnable");
        assert!(
            output.status.success(),
            "plot script failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        assert!(dir.join("plot.png").is_file());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn script_rejects_mixed_hashes() {
        let dir = temp_dir("mixed");
        let path = dir.join("mixed.csv");
        std::fs::write(
            &path,
            "rho_bar_db,p_out_spa,p_out_mc,mc_stderr,p_out_benchmark_mc,config_hash\n\
             -36,0.5,0.5,0.001,0.4,aaaa\n\
             -35,0.1,0.1,0.001,0.05,bbbb\n",
        )
        .unwrap();
        let script = dir.join("plot.py");
        emit_plot_script(&[&path], "mixed", &script).unwrap();
        let output = std::process::Command::new("python3")
            .arg(&script)
            .output()
            .expect("python3 must be runnable");
        assert!(
            !output.status.success(),
            "script should reject mixed config hashes"
        );
        std::fs::remove_dir_all(&dir).ok();
    }
}
