//! Static SVG line plots of run CSV columns against time.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::output::{io_err, Table};
use crate::error::{Error, Result};

/// Samples drawn per series; longer runs are thinned evenly.
pub const MAX_POINTS: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    /// File stem, e.g. `phases`.
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub log_y: bool,
}

/// The four standard panels: phases, frequencies, diameters and energies.
pub fn default_panels(table: &Table) -> Vec<Panel> {
    let pick = |prefix: &str| -> Vec<String> {
        table
            .header
            .iter()
            .filter(|h| h.starts_with(prefix))
            .cloned()
            .collect()
    };
    vec![
        Panel {
            name: "phases".into(),
            title: "phases".into(),
            columns: pick("theta_"),
            log_y: false,
        },
        Panel {
            name: "frequencies".into(),
            title: "frequencies".into(),
            columns: pick("omega_"),
            log_y: false,
        },
        Panel {
            name: "diameters".into(),
            title: "phase and frequency diameters".into(),
            columns: vec!["D_theta".into(), "D_omega".into()],
            log_y: true,
        },
        Panel {
            name: "energies".into(),
            title: "energies".into(),
            columns: vec!["E1".into(), "E2".into()],
            log_y: true,
        },
    ]
}

fn series_range(values: impl Iterator<Item = f64>, log_y: bool) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite() && (!log_y || *v > 0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return if log_y { (1e-16, 1.0) } else { (-1.0, 1.0) };
    }
    if log_y {
        if hi / lo < 10.0 {
            (lo / 10f64.sqrt(), hi * 10f64.sqrt())
        } else {
            (lo, hi)
        }
    } else if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        (lo - 0.5 * lo.abs().max(1e-12), hi + 0.5 * hi.abs().max(1e-12))
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn draw_err(path: &Path, e: impl std::fmt::Debug) -> Error {
    io_err(path, format!("plot failed: {e:?}"))
}

/// Renders `panel` to `path`, restricted to `window` when given.
pub fn render(table: &Table, panel: &Panel, window: Option<(f64, f64)>, path: &Path) -> Result<()> {
    let t = table
        .column("t")
        .ok_or_else(|| Error::InvalidArgument("CSV has no t column".into()))?;
    let mut cols = Vec::with_capacity(panel.columns.len());
    for c in &panel.columns {
        let col = table
            .column(c)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown column {c:?}; available: {}", table.header.join(", "))))?;
        cols.push((c.as_str(), col));
    }
    if cols.is_empty() {
        return Err(Error::InvalidArgument(format!("panel {} selects no columns", panel.name)));
    }
    let mut keep: Vec<usize> = (0..t.len())
        .filter(|&k| window.map_or(true, |(a, b)| t[k] >= a && t[k] <= b))
        .collect();
    if keep.len() > MAX_POINTS {
        let stride = keep.len().div_ceil(MAX_POINTS);
        let last = *keep.last().expect("non-empty");
        keep = keep.into_iter().step_by(stride).collect();
        if keep.last() != Some(&last) {
            keep.push(last);
        }
    }
    if keep.is_empty() {
        return Err(Error::InvalidArgument(match window {
            Some((a, b)) => format!("no samples inside the window [{a}, {b}]"),
            None => "CSV has no data rows".into(),
        }));
    }
    let (t0, t1) = match window {
        Some(w) => w,
        None => (t[keep[0]], t[*keep.last().expect("non-empty")]),
    };
    let (t0, t1) = if t1 > t0 { (t0, t1) } else { (t0 - 0.5, t0 + 0.5) };
    let (y0, y1) = series_range(
        cols.iter().flat_map(|(_, c)| keep.iter().map(move |&k| c[k])),
        panel.log_y,
    );

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| draw_err(path, e))?;
    let title = match window {
        Some((a, b)) => format!("{} on [{a}, {b}]", panel.title),
        None => panel.title.clone(),
    };
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(80);

    let colour = |i: usize| Palette99::pick(i).to_rgba();
    macro_rules! draw_lines {
        ($chart:ident) => {{
            $chart
                .configure_mesh()
                .x_desc("t")
                .draw()
                .map_err(|e| draw_err(path, e))?;
            for (i, (name, col)) in cols.iter().enumerate() {
                let pts = keep
                    .iter()
                    .map(|&k| (t[k], col[k]))
                    .filter(|(_, v)| v.is_finite() && (!panel.log_y || *v > 0.0));
                $chart
                    .draw_series(LineSeries::new(pts, colour(i)))
                    .map_err(|e| draw_err(path, e))?
                    .label(*name)
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], colour(i)));
            }
            $chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| draw_err(path, e))?;
        }};
    }
    if panel.log_y {
        let mut chart = builder
            .build_cartesian_2d(t0..t1, (y0..y1).log_scale())
            .map_err(|e| draw_err(path, e))?;
        draw_lines!(chart);
    } else {
        let mut chart = builder
            .build_cartesian_2d(t0..t1, y0..y1)
            .map_err(|e| draw_err(path, e))?;
        draw_lines!(chart);
    }
    root.present().map_err(|e| draw_err(path, e))?;
    Ok(())
}

/// Renders each panel into `dir`; windowed panels get a `_local` suffix.
pub fn render_all(table: &Table, panels: &[Panel], window: Option<(f64, f64)>, dir: &Path) -> Result<Vec<PathBuf>> {
    if table.rows() == 0 {
        return Err(Error::InvalidArgument("CSV has no data rows".into()));
    }
    let mut written = Vec::with_capacity(panels.len());
    for panel in panels {
        let stem = if window.is_some() {
            format!("{}_local", panel.name)
        } else {
            panel.name.clone()
        };
        let path = dir.join(format!("{stem}.svg"));
        render(table, panel, window, &path)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        Table {
            header: vec!["t".into(), "theta_1".into(), "omega_1".into(), "D_theta".into(), "D_omega".into(), "E1".into(), "E2".into()],
            columns: vec![
                t.clone(),
                t.iter().map(|x| x.sin()).collect(),
                t.iter().map(|x| x.cos()).collect(),
                t.iter().map(|x| (-x).exp()).collect(),
                t.iter().map(|x| (-2.0 * x).exp()).collect(),
                vec![0.0; 50],
                t.iter().map(|x| 1.0 + x).collect(),
            ],
        }
    }

    #[test]
    fn default_panels_render() {
        let dir = tempfile::tempdir().unwrap();
        let tbl = table();
        let panels = default_panels(&tbl);
        assert_eq!(panels[0].columns, vec!["theta_1".to_string()]);
        let files = render_all(&tbl, &panels, None, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        for f in &files {
            let svg = std::fs::read_to_string(f).unwrap();
            assert!(svg.starts_with("<svg"), "{}", f.display());
            assert!(svg.contains("<polyline"));
        }
        let local = render_all(&tbl, &panels, Some((1.0, 3.0)), dir.path()).unwrap();
        assert!(local[0].ends_with("phases_local.svg"));
    }

    #[test]
    fn unknown_column_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let panel = Panel {
            name: "x".into(),
            title: "x".into(),
            columns: vec!["nope".into()],
            log_y: false,
        };
        let err = render(&table(), &panel, None, &dir.path().join("x.svg")).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn empty_window_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let tbl = table();
        assert!(render_all(&tbl, &default_panels(&tbl), Some((100.0, 200.0)), dir.path()).is_err());
    }
}
