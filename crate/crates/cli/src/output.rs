use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use qwalk_core::engine::Distribution;
use qwalk_core::PolyaSeries;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn resolve(dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        dir.join(path)
    }
}

pub fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn distribution_csv(dim: usize, distributions: &[(usize, Distribution)]) -> String {
    let mut out = String::from("t");
    for a in 1..=dim {
        let _ = write!(out, ",x_{a}");
    }
    out.push_str(",probability\n");
    for (t, rows) in distributions {
        for (position, p) in rows {
            let _ = write!(out, "{t}");
            for x in position {
                let _ = write!(out, ",{x}");
            }
            let _ = writeln!(out, ",{}", float(*p));
        }
    }
    out
}

/// `t, <value>, <partial>` rows for `t = 1..`.
pub fn series_csv(header: &str, series: &[(usize, f64)], partials: &PolyaSeries) -> String {
    let mut out = format!("{header}\n");
    for ((t, v), (_, p)) in series.iter().zip(&partials.partials) {
        let _ = writeln!(out, "{t},{},{}", float(*v), float(*p));
    }
    out
}
