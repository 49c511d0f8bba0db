//! Subcommand dispatch. Every subcommand writes its artifacts into the output
//! directory together with the normalized configuration and a manifest that
//! lists each artifact with the configuration hash.

use std::fs;
use std::path::{Path, PathBuf};

use spdc_cavity::brightness::{
    brightness_vs_r1p_sweep, brightness_vs_sigma_sweep, crossover_sigma, matched_sigma,
    plateau_brightness_vs_r2, with_output_reflectivity,
};
use spdc_cavity::cavity::{coefficient_of_finesse, Mode};
use spdc_cavity::design::{check_design, design_source, report_design};
use spdc_cavity::doubly_resonant::jsi_doubly_resonant;
use spdc_cavity::grid::{Axis, SpectralGrid};
use spdc_cavity::spectral::{
    jsi_singly_resonant, marginal_spectrum, samples_per_mode_width, weighted_correlation, Density, Marginal,
    SpdcSource, MIN_SAMPLES_PER_MODE,
};
use spdc_cavity::temporal::temporal_analysis;

use crate::config::RunConfig;
use crate::error::{io, physics, CliError, Result};
use crate::gridfile::{write_grid, write_table, Format, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    JsiSr,
    JsiDr,
    Marginal,
    Temporal,
    BrightnessSweep,
    Design,
    Airy,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::JsiSr => "jsi-sr",
            Subcommand::JsiDr => "jsi-dr",
            Subcommand::Marginal => "marginal",
            Subcommand::Temporal => "temporal",
            Subcommand::BrightnessSweep => "brightness-sweep",
            Subcommand::Design => "design",
            Subcommand::Airy => "airy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: PathBuf,
    pub kind: &'static str,
}

struct Out<'a> {
    dir: &'a Path,
    format: Format,
    hash: String,
    artifacts: Vec<Artifact>,
}

impl Out<'_> {
    fn provenance(&self, quantity: &str) -> Provenance {
        Provenance {
            config_hash: self.hash.clone(),
            quantity: quantity.into(),
        }
    }

    fn grid(&mut self, name: &str, grid: &SpectralGrid<f64>) -> Result<()> {
        let path = self.dir.join(format!("{name}.{}", self.format.extension()));
        write_grid(grid, &path, self.format, &self.provenance(name))?;
        self.artifacts.push(Artifact { path, kind: "grid" });
        Ok(())
    }

    fn table(&mut self, name: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let path = self.dir.join(format!("{name}.tsv"));
        write_table(&path, columns, rows, &self.provenance(name))?;
        self.artifacts.push(Artifact { path, kind: "table" });
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(io(&path))?;
        self.artifacts.push(Artifact { path, kind: "text" });
        Ok(())
    }
}

fn density_rows(d: &Density) -> Vec<Vec<f64>> {
    d.values.iter().enumerate().map(|(k, v)| vec![d.axis.value(k), *v]).collect()
}

fn warn_resolution(source: &SpdcSource, x: &Axis, y: &Axis) {
    if let Ok(s) = samples_per_mode_width(&source.cavity, x, y) {
        if s < MIN_SAMPLES_PER_MODE {
            log::warn!(
                "grid resolves a mode width with {s:.2} samples (recommended {MIN_SAMPLES_PER_MODE}); peaks may be undersampled"
            );
        }
    }
}

/// Label used in artifact names for a parameter value.
fn label(v: f64) -> String {
    format!("{v}")
}

fn require_doubly(source: &SpdcSource, name: &str) -> Result<()> {
    if source.cavity.is_doubly_resonant() {
        Ok(())
    } else {
        Err(CliError::Invalid {
            section: "cavity".into(),
            key: "r1p".into(),
            message: format!("{name} needs a doubly-resonant cavity; set r1p or r2p above zero"),
        })
    }
}

fn jsi_sr(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let source = cfg.source("jsi-sr")?;
    let (x, y) = cfg.axes(&source)?;
    warn_resolution(&source, &x, &y);
    let grid = jsi_singly_resonant(&source, x, y).map_err(physics("spectral"))?;
    out.grid("jsi_sr", &grid)
}

fn jsi_dr(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let base = cfg.source("jsi-dr")?;
    require_doubly(&base, "jsi-dr")?;
    let (x, y) = cfg.axes(&base)?;
    warn_resolution(&base, &x, &y);
    let r2p = base.cavity.mirrors(Mode::Pump).mirror2.magnitude();
    let r1ps = if cfg.sweep.r1p.is_empty() {
        vec![base.cavity.mirrors(Mode::Pump).mirror1.magnitude()]
    } else {
        cfg.sweep.r1p.clone()
    };
    let mut rows = Vec::new();
    for r1p in r1ps {
        let cavity = base.cavity.with_pump_mirrors(r1p, r2p).map_err(physics("cavity"))?;
        let finesse = coefficient_of_finesse(cavity.effective_reflectivity(Mode::Pump)).map_err(physics("cavity"))?;
        let source = SpdcSource::new(cavity, base.pump, base.filters);
        let grid = jsi_doubly_resonant(&source, x, y).map_err(physics("doubly_resonant"))?;
        let rho = weighted_correlation(&grid).map_err(physics("spectral"))?;
        out.grid(&format!("jsi_dr_r1p_{}", label(r1p)), &grid)?;
        rows.push(vec![r1p, r2p, finesse, rho]);
    }
    out.table("jsi_dr_correlation", &["r1p", "r2p", "pump_finesse", "pearson"], &rows)
}

fn marginal(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let source = cfg.source("marginal")?;
    let (x, y) = cfg.axes(&source)?;
    warn_resolution(&source, &x, &y);
    let grid = if source.cavity.is_doubly_resonant() {
        jsi_doubly_resonant(&source, x, y).map_err(physics("doubly_resonant"))?
    } else {
        jsi_singly_resonant(&source, x, y).map_err(physics("spectral"))?
    };
    for (name, keep) in [("marginal_signal", Marginal::Signal), ("marginal_idler", Marginal::Idler)] {
        let d = marginal_spectrum(&grid, keep).map_err(physics("spectral"))?;
        out.table(name, &["omega_rad_s", "density"], &density_rows(&d))?;
    }
    Ok(())
}

fn temporal(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let base = cfg.source("temporal")?;
    let r2s = if cfg.sweep.r2.is_empty() {
        vec![base.cavity.effective_reflectivity(Mode::Signal)]
    } else {
        cfg.sweep.r2.clone()
    };
    let mut summary = Vec::new();
    for r2 in r2s {
        let source = with_output_reflectivity(&base, r2).map_err(physics("cavity"))?;
        let w0 = source.cavity.centers().signal;
        let a = temporal_analysis(&source, &cfg.temporal).map_err(physics("temporal"))?;
        let tag = label(r2);
        out.table(&format!("temporal_s_minus_r2_{tag}"), &["t_minus_s", "density"], &density_rows(&a.marginal))?;
        let peaks: Vec<Vec<f64>> = a
            .peaks
            .positions
            .iter()
            .zip(&a.peaks.heights)
            .map(|(t, h)| vec![*t, *h])
            .collect();
        out.table(&format!("temporal_peaks_r2_{tag}"), &["t_minus_s", "height"], &peaks)?;
        summary.push(vec![
            r2,
            source.cavity.mode_width(w0, Mode::Signal).map_err(physics("cavity"))?,
            a.plan.round_trip,
            a.peaks.mean_spacing().unwrap_or(f64::NAN),
            a.correlation_time,
            a.peaks.len() as f64,
            a.plan.samples as f64,
        ]);
    }
    out.table(
        "temporal_summary",
        &["r2", "mode_width_rad_s", "round_trip_s", "peak_spacing_s", "correlation_time_s", "peaks", "samples"],
        &summary,
    )
}

fn brightness_sweep(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let base = cfg.source("brightness-sweep")?;
    let sw = &cfg.sweep;
    let opts = &cfg.brightness;
    let mut wrote = false;
    if !sw.r1p.is_empty() {
        require_doubly(&base, "an r1p sweep")?;
        let sigmas = if sw.sigma.is_empty() { vec![base.pump.sigma()] } else { sw.sigma.clone() };
        let rows = brightness_vs_r1p_sweep(&base, &sw.r1p, &sigmas, opts).map_err(physics("brightness"))?;
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.sigma, r.r1p, r.b_norm]).collect();
        out.table("brightness_r1p", &["sigma_rad_s", "r1p", "b_norm"], &rows)?;
        wrote = true;
    } else if !sw.sigma.is_empty() {
        let r2s = if sw.r2.is_empty() {
            vec![0.0, base.cavity.effective_reflectivity(Mode::Signal)]
        } else {
            sw.r2.clone()
        };
        let rows = brightness_vs_sigma_sweep(&base, &sw.sigma, &r2s, sw.reference_sigma, opts)
            .map_err(physics("brightness"))?;
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.r2, r.sigma, r.b_norm]).collect();
        out.table("brightness_sigma", &["r2", "sigma_rad_s", "b_norm"], &rows)?;
        if let Some(threshold) = sw.crossover_threshold {
            let w0 = base.cavity.centers().signal;
            let mut cross = Vec::new();
            for &r2 in r2s.iter().filter(|&&r| r > 0.0) {
                let source = with_output_reflectivity(&base, r2).map_err(physics("cavity"))?;
                let fsr = source.cavity.free_spectral_range(w0, Mode::Signal).map_err(physics("cavity"))?;
                let predicted = matched_sigma(fsr);
                let found = crossover_sigma(&source, r2, threshold, (predicted / 4.0, predicted * 4.0), opts)
                    .map_err(physics("brightness"))?;
                cross.push(vec![r2, found, predicted, found / predicted]);
            }
            out.table(
                "brightness_crossover",
                &["r2", "crossover_sigma_rad_s", "matched_fsr_sigma_rad_s", "ratio"],
                &cross,
            )?;
        }
        wrote = true;
    }
    if !sw.plateau_r2.is_empty() {
        let rows = plateau_brightness_vs_r2(&base, &sw.plateau_r2, opts).map_err(physics("brightness"))?;
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.r2, r.sigma, r.b_norm]).collect();
        out.table("brightness_plateau", &["r2", "sigma_rad_s", "b_norm"], &rows)?;
        wrote = true;
    }
    if !wrote {
        return Err(CliError::Invalid {
            section: "sweep".into(),
            key: "sigma".into(),
            message: "brightness-sweep needs sigma_<frequency>, r1p or plateau_r2 in [sweep]".into(),
        });
    }
    Ok(())
}

fn design(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let block = cfg.design.as_ref().ok_or_else(|| CliError::MissingSection {
        section: "design".into(),
        needed_by: "design".into(),
    })?;
    let result = design_source(&block.target).map_err(physics("design"))?;
    let sigma = block.check_sigma.unwrap_or(result.sigma_max);
    let check = check_design(&block.target, &result, sigma, block.check_span, block.check_half_samples)
        .map_err(physics("design"))?;
    out.text("design_report.txt", &report_design(&block.target, &result, Some(&check)))?;
    let mut values = String::new();
    for (k, v) in result.key_values() {
        values.push_str(&format!("{k} = {v}\n"));
    }
    out.text("design_values.txt", &values)?;
    out.table("design_signal_marginal", &["omega_rad_s", "density"], &density_rows(&check.marginal))
}

fn airy(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let source = cfg.source("airy")?;
    let (x, y) = cfg.axes(&source)?;
    let cav = &source.cavity;
    let sample = |axis: &Axis, mode: Mode| -> Result<Vec<Vec<f64>>> {
        axis.values()
            .into_iter()
            .map(|w| Ok(vec![w, cav.airy(w, mode).map_err(physics("cavity"))?]))
            .collect()
    };
    out.table("airy_signal", &["omega_rad_s", "airy"], &sample(&x, Mode::Signal)?)?;
    out.table("airy_idler", &["omega_rad_s", "airy"], &sample(&y, Mode::Idler)?)?;
    if cav.is_doubly_resonant() {
        let half = 0.5 * (x.end() - x.start());
        let p = Axis::from_range(cav.centers().pump() - half, cav.centers().pump() + half, x.len())
            .map_err(physics("grid"))?;
        out.table("airy_pump", &["omega_rad_s", "airy"], &sample(&p, Mode::Pump)?)?;
    }
    Ok(())
}

/// Runs `cmd` and writes its artifacts, the normalized configuration and the
/// manifest into `dir`. Returns the artifacts, manifest last.
pub fn run(cmd: Subcommand, cfg: &RunConfig, dir: &Path, format: Format) -> Result<Vec<Artifact>> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut out = Out {
        dir,
        format,
        hash: cfg.hash(),
        artifacts: Vec::new(),
    };
    out.text("config.normalized.txt", &cfg.echo())?;
    log::info!("{} with config {}", cmd.name(), out.hash);
    match cmd {
        Subcommand::JsiSr => jsi_sr(cfg, &mut out)?,
        Subcommand::JsiDr => jsi_dr(cfg, &mut out)?,
        Subcommand::Marginal => marginal(cfg, &mut out)?,
        Subcommand::Temporal => temporal(cfg, &mut out)?,
        Subcommand::BrightnessSweep => brightness_sweep(cfg, &mut out)?,
        Subcommand::Design => design(cfg, &mut out)?,
        Subcommand::Airy => airy(cfg, &mut out)?,
    }
    let manifest = dir.join("manifest.txt");
    let mut body = format!(
        "# subcommand = {}\n# generator = spdc-cavity {}\n# config_hash = {}\n",
        cmd.name(),
        env!("CARGO_PKG_VERSION"),
        out.hash
    );
    for a in &out.artifacts {
        let name = a.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        body.push_str(&format!("{name}\t{}\t{}\n", a.kind, out.hash));
    }
    fs::write(&manifest, body).map_err(io(&manifest))?;
    out.artifacts.push(Artifact {
        path: manifest,
        kind: "manifest",
    });
    Ok(out.artifacts)
}
