//! Run configuration: a sectioned TOML file in which every physical quantity
//! carries a unit suffix (`length_um`, `sigma_rad_s`, `cut_angle_deg`).
//! Values are normalized to SI and rad/s on load.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use spdc_cavity::brightness::{FactorMode, IntegrationOptions};
use spdc_cavity::cavity::{CavitySpec, CenterFrequencies, GammaConvention, Mode};
use spdc_cavity::design::DesignTarget;
use spdc_cavity::dispersion::{phasematching_angle, CrystalModel, CrystalSpec};
use spdc_cavity::grid::Axis;
use spdc_cavity::spectral::{FilterSpec, Filters, PumpSpec, SpdcSource};
use spdc_cavity::temporal::TemporalOptions;
use spdc_cavity::angular_frequency;

use crate::error::{io, physics, CliError, Result};
use crate::gridfile::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Length,
    Frequency,
    Angle,
}

const TWO_PI: f64 = 2.0 * PI;

impl Dim {
    /// `(suffix, factor, divisor)`: a value `x` becomes `x · factor / divisor`.
    /// Dividing by an exact power of ten makes `30 nm` equal to `30e-9`.
    fn units(self) -> &'static [(&'static str, f64, f64)] {
        match self {
            Dim::Length => &[("m", 1.0, 1.0), ("mm", 1.0, 1e3), ("um", 1.0, 1e6), ("nm", 1.0, 1e9)],
            Dim::Frequency => &[
                ("rad_s", 1.0, 1.0),
                ("hz", TWO_PI, 1.0),
                ("khz", TWO_PI * 1e3, 1.0),
                ("mhz", TWO_PI * 1e6, 1.0),
                ("ghz", TWO_PI * 1e9, 1.0),
                ("thz", TWO_PI * 1e12, 1.0),
            ],
            Dim::Angle => &[("rad", 1.0, 1.0), ("deg", PI, 180.0)],
        }
    }

    fn allowed(self) -> String {
        self.units()
            .iter()
            .map(|(u, _, _)| format!("_{u}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Quantity(Dim),
    QuantityList(Dim),
    Number,
    NumberList,
    Integer,
    /// Free text when the choice list is empty.
    Text(&'static [&'static str]),
}

use Dim::*;
use Kind::*;

const SCHEMA: &[(&str, &[(&str, Kind)])] = &[
    (
        "crystal",
        &[
            ("model", Text(&["bbo", "dispersionless"])),
            ("index", Number),
            ("length", Quantity(Length)),
            ("cut_angle", Quantity(Angle)),
        ],
    ),
    (
        "pump",
        &[
            ("center", Quantity(Length)),
            ("fwhm", Quantity(Length)),
            ("sigma", Quantity(Frequency)),
            ("energy", Number),
        ],
    ),
    (
        "cavity",
        &[
            ("length", Quantity(Length)),
            ("r2", Number),
            ("r2_idler", Number),
            ("r1p", Number),
            ("r2p", Number),
            ("signal_center", Quantity(Length)),
            ("phases", Text(&["solve", "zero"])),
            ("gamma", Text(&["band-center", "linear", "zero"])),
        ],
    ),
    (
        "filters",
        &[
            ("fwhm", Quantity(Length)),
            ("signal_fwhm", Quantity(Length)),
            ("idler_fwhm", Quantity(Length)),
        ],
    ),
    (
        "grid",
        &[
            ("samples", Integer),
            ("half_span", Quantity(Frequency)),
            ("half_span_fsr", Number),
        ],
    ),
    (
        "sweep",
        &[
            ("r2", NumberList),
            ("r1p", NumberList),
            ("sigma", QuantityList(Frequency)),
            ("plateau_r2", NumberList),
            ("reference_sigma", Quantity(Frequency)),
            ("crossover_threshold", Number),
        ],
    ),
    (
        "temporal",
        &[
            ("round_trips", Number),
            ("width_factor", Number),
            ("min_samples", Integer),
            ("min_prominence", Number),
        ],
    ),
    (
        "brightness",
        &[
            ("factors", Text(&["central", "exact"])),
            ("refinement", Number),
        ],
    ),
    (
        "design",
        &[
            ("signal", Quantity(Length)),
            ("bandwidth", Quantity(Frequency)),
            ("pump", Quantity(Length)),
            ("mode_spacing", Quantity(Length)),
            ("crystal", Text(&["bbo"])),
            ("pinned_length", Quantity(Length)),
            ("check_sigma", Quantity(Frequency)),
            ("check_span", Number),
            ("check_half_samples", Integer),
        ],
    ),
    (
        "output",
        &[("dir", Text(&[])), ("format", Text(&["text", "binary"]))],
    ),
];

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Num(f64),
    List(Vec<f64>),
    Int(i64),
    Text(String),
}

type Section = BTreeMap<&'static str, Item>;

type Scale = (f64, f64);

fn classify(section: &str, key: &str, entries: &[(&'static str, Kind)]) -> Result<(&'static str, Kind, Scale)> {
    let mut bad_suffix = None;
    for &(base, kind) in entries {
        match kind {
            Quantity(dim) | QuantityList(dim) => {
                if key == base {
                    return Err(CliError::MissingUnit {
                        section: section.into(),
                        key: key.into(),
                        allowed: dim.allowed(),
                    });
                }
                if let Some(suffix) = key.strip_prefix(base).and_then(|r| r.strip_prefix('_')) {
                    if let Some(&(_, f, d)) = dim.units().iter().find(|(u, _, _)| *u == suffix) {
                        return Ok((base, kind, (f, d)));
                    }
                    bad_suffix.get_or_insert((suffix.to_string(), dim));
                }
            }
            _ if key == base => return Ok((base, kind, (1.0, 1.0))),
            _ => {}
        }
    }
    match bad_suffix {
        Some((suffix, dim)) => Err(CliError::UnknownUnit {
            section: section.into(),
            key: key.into(),
            suffix,
            allowed: dim.allowed(),
        }),
        None => Err(CliError::UnknownKey {
            section: section.into(),
            key: key.into(),
        }),
    }
}

fn number(section: &str, key: &str, v: &Value, (factor, divisor): Scale) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x * factor / divisor),
        Value::Integer(i) => Ok(*i as f64 * factor / divisor),
        _ => Err(CliError::Invalid {
            section: section.into(),
            key: key.into(),
            message: format!("expected a number, got {}", v.type_str()),
        }),
    }
}

fn convert(section: &str, key: &str, kind: Kind, scale: Scale, v: &Value) -> Result<Item> {
    let invalid = |message: String| CliError::Invalid {
        section: section.into(),
        key: key.into(),
        message,
    };
    Ok(match kind {
        Quantity(_) | Number => Item::Num(number(section, key, v, scale)?),
        QuantityList(_) | NumberList => match v {
            Value::Array(a) => Item::List(
                a.iter()
                    .map(|x| number(section, key, x, scale))
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(invalid(format!("expected a list of numbers, got {}", v.type_str()))),
        },
        Integer => match v {
            Value::Integer(i) => Item::Int(*i),
            _ => return Err(invalid(format!("expected an integer, got {}", v.type_str()))),
        },
        Text(choices) => match v {
            Value::String(s) if choices.is_empty() || choices.contains(&s.as_str()) => Item::Text(s.clone()),
            Value::String(s) => {
                return Err(invalid(format!("'{s}' is not one of {}", choices.join(", "))));
            }
            _ => return Err(invalid(format!("expected a string, got {}", v.type_str()))),
        },
    })
}

fn parse_sections(text: &str) -> Result<BTreeMap<&'static str, Section>> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
    if table.is_empty() {
        return Err(CliError::Empty(REQUIRED.into()));
    }
    let mut out = BTreeMap::new();
    for (name, body) in &table {
        let (sname, entries) = SCHEMA
            .iter()
            .find(|(s, _)| s == name)
            .ok_or_else(|| CliError::UnknownSection(name.clone()))?;
        let body = body.as_table().ok_or_else(|| CliError::Invalid {
            section: name.clone(),
            key: name.clone(),
            message: "expected a [section] table".into(),
        })?;
        let mut section = Section::new();
        for (key, v) in body {
            let (base, kind, scale) = classify(name, key, entries)?;
            if section.insert(base, convert(name, key, kind, scale, v)?).is_some() {
                return Err(CliError::Invalid {
                    section: name.clone(),
                    key: key.clone(),
                    message: format!("'{base}' is given more than once"),
                });
            }
        }
        out.insert(*sname, section);
    }
    Ok(out)
}

const REQUIRED: &str = "[crystal], [pump] and [cavity] for the spectral subcommands, or [design] for design";

struct Reader<'a> {
    name: &'static str,
    section: Option<&'a Section>,
}

impl Reader<'_> {
    fn out_of_range(&self, key: &str, value: impl ToString, bounds: &str) -> CliError {
        CliError::OutOfRange {
            section: self.name.into(),
            key: key.into(),
            value: value.to_string(),
            bounds: bounds.into(),
        }
    }

    fn get(&self, key: &str) -> Option<&Item> {
        self.section.and_then(|s| s.get(key))
    }

    fn num(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Item::Num(x)) => Some(*x),
            _ => None,
        }
    }

    fn list(&self, key: &str) -> Vec<f64> {
        match self.get(key) {
            Some(Item::List(v)) => v.clone(),
            _ => Vec::new(),
        }
    }

    fn int(&self, key: &str) -> Option<i64> {
        match self.get(key) {
            Some(Item::Int(i)) => Some(*i),
            _ => None,
        }
    }

    fn text(&self, key: &str) -> Option<String> {
        match self.get(key) {
            Some(Item::Text(s)) => Some(s.clone()),
            _ => None,
        }
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.num(key).ok_or_else(|| CliError::Invalid {
            section: self.name.into(),
            key: key.into(),
            message: "is required".into(),
        })
    }

    fn positive(&self, key: &str, v: f64) -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.out_of_range(key, v, "(0, ∞)"))
        }
    }

    fn in_unit(&self, key: &str, v: f64, closed: bool) -> Result<f64> {
        let ok = v >= 0.0 && if closed { v <= 1.0 } else { v < 1.0 };
        if ok {
            Ok(v)
        } else {
            Err(self.out_of_range(key, v, if closed { "[0, 1]" } else { "[0, 1)" }))
        }
    }

    fn count(&self, key: &str, default: usize, min: usize, max: usize) -> Result<usize> {
        match self.int(key) {
            None => Ok(default),
            Some(i) if i >= min as i64 && i <= max as i64 => Ok(i as usize),
            Some(i) => Err(self.out_of_range(key, i, &format!("[{min}, {max}]"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalBlock {
    pub model: String,
    pub index: Option<f64>,
    pub length: f64,
    pub cut_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PumpBlock {
    /// Center wavelength, m.
    pub center: f64,
    /// Intensity FWHM in wavelength, m.
    pub fwhm: Option<f64>,
    /// Amplitude width σ, rad/s.
    pub sigma: Option<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityBlock {
    pub length: Option<f64>,
    pub r2: f64,
    pub r2_idler: f64,
    pub r1p: f64,
    pub r2p: f64,
    /// Signal center wavelength, m; twice the pump wavelength by default.
    pub signal_center: Option<f64>,
    pub solve_phases: bool,
    pub gamma: GammaConvention,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBlock {
    pub signal_fwhm: f64,
    pub idler_fwhm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBlock {
    pub samples: usize,
    pub half_span: Option<f64>,
    pub half_span_fsr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepBlock {
    pub r2: Vec<f64>,
    pub r1p: Vec<f64>,
    pub sigma: Vec<f64>,
    pub plateau_r2: Vec<f64>,
    pub reference_sigma: Option<f64>,
    pub crossover_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignBlock {
    pub target: DesignTarget,
    pub check_sigma: Option<f64>,
    pub check_span: f64,
    pub check_half_samples: usize,
}

/// A validated configuration with every value in SI units and rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub crystal: Option<CrystalBlock>,
    pub pump: Option<PumpBlock>,
    pub cavity: Option<CavityBlock>,
    pub filters: Option<FilterBlock>,
    pub grid: GridBlock,
    pub sweep: SweepBlock,
    pub temporal: TemporalOptions,
    pub brightness: IntegrationOptions,
    pub design: Option<DesignBlock>,
    pub output_dir: Option<String>,
    pub format: Format,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let sections = parse_sections(text)?;
    let reader = |name: &'static str| Reader {
        name,
        section: sections.get(name),
    };

    let crystal = match sections.contains_key("crystal") {
        false => None,
        true => {
            let r = reader("crystal");
            let model = r.text("model").unwrap_or_else(|| "bbo".into());
            let index = r.num("index").map(|n| r.positive("index", n)).transpose()?;
            if model == "dispersionless" && index.is_none() {
                return Err(CliError::Invalid {
                    section: "crystal".into(),
                    key: "index".into(),
                    message: "a dispersionless crystal needs its refractive index".into(),
                });
            }
            Some(CrystalBlock {
                model,
                index,
                length: r.positive("length", r.required("length")?)?,
                cut_angle: r.num("cut_angle"),
            })
        }
    };

    let pump = match sections.contains_key("pump") {
        false => None,
        true => {
            let r = reader("pump");
            let fwhm = r.num("fwhm").map(|v| r.positive("fwhm", v)).transpose()?;
            let sigma = r.num("sigma").map(|v| r.positive("sigma", v)).transpose()?;
            if fwhm.is_some() == sigma.is_some() {
                return Err(CliError::Invalid {
                    section: "pump".into(),
                    key: "fwhm".into(),
                    message: "give exactly one of fwhm_<length> and sigma_<frequency>".into(),
                });
            }
            Some(PumpBlock {
                center: r.positive("center", r.required("center")?)?,
                fwhm,
                sigma,
                energy: r.positive("energy", r.num("energy").unwrap_or(1.0))?,
            })
        }
    };

    let cavity = match sections.contains_key("cavity") {
        false => None,
        true => {
            let r = reader("cavity");
            let r2 = r.in_unit("r2", r.required("r2")?, false)?;
            Some(CavityBlock {
                length: r.num("length").map(|v| r.positive("length", v)).transpose()?,
                r2,
                r2_idler: r.in_unit("r2_idler", r.num("r2_idler").unwrap_or(r2), false)?,
                r1p: r.in_unit("r1p", r.num("r1p").unwrap_or(0.0), true)?,
                r2p: r.in_unit("r2p", r.num("r2p").unwrap_or(0.0), true)?,
                signal_center: r
                    .num("signal_center")
                    .map(|v| r.positive("signal_center", v))
                    .transpose()?,
                solve_phases: r.text("phases").is_none_or(|p| p == "solve"),
                gamma: match r.text("gamma").as_deref() {
                    Some("linear") => GammaConvention::LinearInOmega,
                    Some("zero") => GammaConvention::Zero,
                    _ => GammaConvention::BandCenter,
                },
            })
        }
    };

    let filters = match sections.contains_key("filters") {
        false => None,
        true => {
            let r = reader("filters");
            let both = r.num("fwhm");
            let pick = |key: &str| -> Result<f64> {
                let v = r.num(key).or(both).ok_or_else(|| CliError::Invalid {
                    section: "filters".into(),
                    key: key.into(),
                    message: "give fwhm_<length> or both signal_fwhm_<length> and idler_fwhm_<length>".into(),
                })?;
                r.positive(key, v)
            };
            Some(FilterBlock {
                signal_fwhm: pick("signal_fwhm")?,
                idler_fwhm: pick("idler_fwhm")?,
            })
        }
    };

    let g = reader("grid");
    if g.num("half_span").is_some() && g.num("half_span_fsr").is_some() {
        return Err(CliError::Invalid {
            section: "grid".into(),
            key: "half_span_fsr".into(),
            message: "give at most one of half_span_<frequency> and half_span_fsr".into(),
        });
    }
    let grid = GridBlock {
        samples: g.count("samples", 512, 3, 1 << 14)?,
        half_span: g.num("half_span").map(|v| g.positive("half_span", v)).transpose()?,
        half_span_fsr: g.num("half_span_fsr").map(|v| g.positive("half_span_fsr", v)).transpose()?,
    };

    let s = reader("sweep");
    let unit_list = |key: &str, closed: bool| -> Result<Vec<f64>> {
        s.list(key).into_iter().map(|v| s.in_unit(key, v, closed)).collect()
    };
    let sweep = SweepBlock {
        r2: unit_list("r2", false)?,
        r1p: unit_list("r1p", true)?,
        sigma: s.list("sigma").into_iter().map(|v| s.positive("sigma", v)).collect::<Result<_>>()?,
        plateau_r2: unit_list("plateau_r2", false)?,
        reference_sigma: s.num("reference_sigma").map(|v| s.positive("reference_sigma", v)).transpose()?,
        crossover_threshold: s
            .num("crossover_threshold")
            .map(|v| {
                if v > 1.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(s.out_of_range("crossover_threshold", v, "(1, ∞)"))
                }
            })
            .transpose()?,
    };

    let t = reader("temporal");
    let defaults = TemporalOptions::default();
    let temporal = TemporalOptions {
        round_trips: t.positive("round_trips", t.num("round_trips").unwrap_or(defaults.round_trips))?,
        width_factor: t.positive("width_factor", t.num("width_factor").unwrap_or(defaults.width_factor))?,
        min_samples: t.count("min_samples", defaults.min_samples, 16, 1 << 15)?,
        min_prominence: {
            let v = t.num("min_prominence").unwrap_or(defaults.min_prominence);
            if v > 0.0 && v < 1.0 {
                v
            } else {
                return Err(t.out_of_range("min_prominence", v, "(0, 1)"));
            }
        },
    };

    let b = reader("brightness");
    let brightness = IntegrationOptions {
        factors: match b.text("factors").as_deref() {
            Some("exact") => FactorMode::Exact,
            _ => FactorMode::CentralApprox,
        },
        refinement: b.positive("refinement", b.num("refinement").unwrap_or(1.0))?,
        ..IntegrationOptions::default()
    };

    let design = match sections.contains_key("design") {
        false => None,
        true => {
            let r = reader("design");
            let model = r.text("crystal").unwrap_or_else(|| "bbo".into());
            Some(DesignBlock {
                target: DesignTarget {
                    lambda_signal: r.positive("signal", r.required("signal")?)?,
                    transition_bandwidth: r.positive("bandwidth", r.required("bandwidth")?)?,
                    lambda_pump: r.positive("pump", r.required("pump")?)?,
                    delta_lambda_max: r.positive("mode_spacing", r.required("mode_spacing")?)?,
                    crystal: CrystalModel::by_name(&model).expect("schema restricts crystal names"),
                    pinned_length: r.num("pinned_length").map(|v| r.positive("pinned_length", v)).transpose()?,
                },
                check_sigma: r.num("check_sigma").map(|v| r.positive("check_sigma", v)).transpose()?,
                check_span: r.positive("check_span", r.num("check_span").unwrap_or(10.0))?,
                check_half_samples: r.count("check_half_samples", 200, 4, 4096)?,
            })
        }
    };

    let o = reader("output");
    let config = RunConfig {
        crystal,
        pump,
        cavity,
        filters,
        grid,
        sweep,
        temporal,
        brightness,
        design,
        output_dir: o.text("dir"),
        format: match o.text("format").as_deref() {
            Some("binary") => Format::Binary,
            _ => Format::Text,
        },
    };
    if config.crystal.is_none() && config.pump.is_none() && config.cavity.is_none() && config.design.is_none() {
        return Err(CliError::Empty(REQUIRED.into()));
    }
    Ok(config)
}

fn missing(section: &str, needed_by: &str) -> CliError {
    CliError::MissingSection {
        section: section.into(),
        needed_by: needed_by.into(),
    }
}

impl RunConfig {
    /// The normalized configuration with defaults applied, one `key = value`
    /// per line in a fixed order. Output format and directory are excluded.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:e}"));
        let list = |v: &[f64]| format!("[{}]", v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", "));
        if let Some(c) = &self.crystal {
            line("crystal.model", c.model.clone());
            line("crystal.index", opt(c.index));
            line("crystal.length_m", format!("{:e}", c.length));
            line("crystal.cut_angle_rad", opt(c.cut_angle));
        }
        if let Some(p) = &self.pump {
            line("pump.center_m", format!("{:e}", p.center));
            line("pump.fwhm_m", opt(p.fwhm));
            line("pump.sigma_rad_s", opt(p.sigma));
            line("pump.energy", format!("{:e}", p.energy));
        }
        if let Some(c) = &self.cavity {
            line("cavity.length_m", opt(c.length));
            line("cavity.r2", format!("{:e}", c.r2));
            line("cavity.r2_idler", format!("{:e}", c.r2_idler));
            line("cavity.r1p", format!("{:e}", c.r1p));
            line("cavity.r2p", format!("{:e}", c.r2p));
            line("cavity.signal_center_m", opt(c.signal_center));
            line("cavity.phases", if c.solve_phases { "solve" } else { "zero" }.into());
            line("cavity.gamma", format!("{:?}", c.gamma));
        }
        if let Some(f) = &self.filters {
            line("filters.signal_fwhm_m", format!("{:e}", f.signal_fwhm));
            line("filters.idler_fwhm_m", format!("{:e}", f.idler_fwhm));
        }
        line("grid.samples", self.grid.samples.to_string());
        line("grid.half_span_rad_s", opt(self.grid.half_span));
        line("grid.half_span_fsr", opt(self.grid.half_span_fsr));
        line("sweep.r2", list(&self.sweep.r2));
        line("sweep.r1p", list(&self.sweep.r1p));
        line("sweep.sigma_rad_s", list(&self.sweep.sigma));
        line("sweep.plateau_r2", list(&self.sweep.plateau_r2));
        line("sweep.reference_sigma_rad_s", opt(self.sweep.reference_sigma));
        line("sweep.crossover_threshold", opt(self.sweep.crossover_threshold));
        let t = &self.temporal;
        line("temporal.round_trips", format!("{:e}", t.round_trips));
        line("temporal.width_factor", format!("{:e}", t.width_factor));
        line("temporal.min_samples", t.min_samples.to_string());
        line("temporal.min_prominence", format!("{:e}", t.min_prominence));
        line("brightness.factors", format!("{:?}", self.brightness.factors));
        line("brightness.refinement", format!("{:e}", self.brightness.refinement));
        if let Some(d) = &self.design {
            let t = &d.target;
            line("design.signal_m", format!("{:e}", t.lambda_signal));
            line("design.bandwidth_rad_s", format!("{:e}", t.transition_bandwidth));
            line("design.pump_m", format!("{:e}", t.lambda_pump));
            line("design.mode_spacing_m", format!("{:e}", t.delta_lambda_max));
            line("design.crystal", t.crystal.name.clone());
            line("design.pinned_length_m", opt(t.pinned_length));
            line("design.check_sigma_rad_s", opt(d.check_sigma));
            line("design.check_span", format!("{:e}", d.check_span));
            line("design.check_half_samples", d.check_half_samples.to_string());
        }
        out
    }

    /// SHA-256 of [`RunConfig::echo`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))
    }

    /// Builds the source described by `[crystal]`, `[pump]`, `[cavity]` and
    /// `[filters]`, solving the mirror phases unless `phases = "zero"`.
    pub fn source(&self, needed_by: &str) -> Result<SpdcSource> {
        let c = self.crystal.as_ref().ok_or_else(|| missing("crystal", needed_by))?;
        let p = self.pump.as_ref().ok_or_else(|| missing("pump", needed_by))?;
        let k = self.cavity.as_ref().ok_or_else(|| missing("cavity", needed_by))?;
        let model = match c.model.as_str() {
            "dispersionless" => CrystalModel::dispersionless(c.index.expect("checked on load")),
            name => CrystalModel::by_name(name).expect("schema restricts crystal models"),
        };
        let wp = angular_frequency(p.center);
        let ws = k.signal_center.map_or(0.5 * wp, angular_frequency);
        let wi = wp - ws;
        if wi <= 0.0 {
            return Err(CliError::OutOfRange {
                section: "cavity".into(),
                key: "signal_center".into(),
                value: format!("{:e}", k.signal_center.unwrap_or(0.0)),
                bounds: format!("(λ_pump, ∞) = ({:e}, ∞) m", p.center),
            });
        }
        let crystal = CrystalSpec::new(model, 0.0, c.length).map_err(physics("dispersion"))?;
        let angle = match c.cut_angle {
            Some(a) => a,
            None => phasematching_angle(&crystal, wp, ws, wi).map_err(physics("dispersion"))?,
        };
        let crystal = crystal.with_cut_angle(angle).map_err(physics("dispersion"))?;
        let length = k.length.unwrap_or(c.length);
        let mut cavity = CavitySpec::singly_resonant(
            crystal,
            length,
            k.r2,
            k.r2_idler,
            CenterFrequencies { signal: ws, idler: wi },
        )
        .map_err(physics("cavity"))?
        .with_gamma(k.gamma);
        let doubly = k.r1p > 0.0 || k.r2p > 0.0;
        if doubly {
            cavity = cavity.with_pump_mirrors(k.r1p, k.r2p).map_err(physics("cavity"))?;
        }
        if k.solve_phases {
            let solution = cavity
                .solve_resonance_phases(ws, wi, doubly.then_some(wp), &[])
                .map_err(physics("cavity"))?;
            if !solution.relaxed.is_empty() {
                log::warn!("resonance conditions relaxed: {:?}", solution.relaxed);
            }
            cavity = solution.cavity;
        }
        let pump = match (p.sigma, p.fwhm) {
            (Some(sigma), _) => PumpSpec::new(wp, sigma, p.energy),
            (None, Some(fwhm)) => PumpSpec::from_fwhm_wavelength(p.center, fwhm, p.energy),
            (None, None) => unreachable!("checked on load"),
        }
        .map_err(physics("spectral"))?;
        let filters = match &self.filters {
            None => Filters::none(),
            Some(f) => Filters {
                signal: FilterSpec::gaussian_wavelength(spdc_cavity::wavelength(ws), f.signal_fwhm)
                    .map_err(physics("spectral"))?,
                idler: FilterSpec::gaussian_wavelength(spdc_cavity::wavelength(wi), f.idler_fwhm)
                    .map_err(physics("spectral"))?,
            },
        };
        Ok(SpdcSource::new(cavity, pump, filters))
    }

    /// Signal and idler axes from `[grid]`: an explicit half-span, a
    /// half-span in free spectral ranges, or the filter-based default.
    pub fn axes(&self, source: &SpdcSource) -> Result<(Axis, Axis)> {
        let n = self.grid.samples;
        let centers = source.cavity.centers();
        let half = match (self.grid.half_span, self.grid.half_span_fsr) {
            (Some(h), _) => h,
            (None, Some(k)) => {
                k * source
                    .cavity
                    .free_spectral_range(centers.signal, Mode::Signal)
                    .map_err(physics("cavity"))?
            }
            (None, None) => return source.default_axes(n).map_err(physics("spectral")),
        };
        let axis = |w0: f64| Axis::from_range(w0 - half, w0 + half, n).map_err(physics("grid"));
        Ok((axis(centers.signal)?, axis(centers.idler)?))
    }
}
