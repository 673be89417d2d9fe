//! Declarative scenario files.
//!
//! A file is a list of `[section]` blocks holding `key = value` lines, and
//! an `[events]` table with one event per row. `#` starts a comment.
//!
//! ```text
//! [scenario]
//! name = actuator_fault
//! initial_speed = 20
//!
//! [driver]
//! steer = sine(3, 6, 0.14, 60)
//! brake = 6.5:0, 6.6:6000, 7.4:6000, 7.5:0
//!
//! [events]
//! # time  kind           target  value
//! 1.0     effectiveness  T_rr    0.1
//! 4.0     friction       all     0.9
//! ```
//!
//! Profiles are a constant, a `t:v` breakpoint list, or
//! `sine(start, end, amplitude, segments)`. Event kinds are `effectiveness`
//! (target: actuator column name), `friction` and `road` (target: `all`,
//! `left`, `right`, `front`, `rear` or a comma list of `fl,fr,rl,rr`).
//! Sections other than `[scenario]` are optional and override defaults.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use ftvc_core::allocator::AllocatorConfig;
use ftvc_core::controllers::{BaselineGains, DriverInput, Gains, Profile, WindupLimits};
use ftvc_core::sim::{ControllerKind, Event, EventKind, Scenario};
use ftvc_core::VehicleParams;

use crate::error::{Error, Result};
use crate::ACTUATOR_COLUMNS;

/// Reads and validates a scenario file.
pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}

/// Parses and validates scenario text.
pub fn parse(text: &str) -> Result<Scenario> {
    let mut sc = Scenario {
        name: "unnamed".into(),
        initial_speed: 0.0,
        driver: DriverInput {
            steer: Profile::constant(0.0),
            pedal: Profile::constant(0.0),
            brake: Profile::constant(0.0),
        },
        ..Scenario::avoidance("unnamed", 1.0)
    };
    let mut section = String::new();
    let mut seen = HashSet::new();
    let mut has_speed = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::syntax(line_no, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::syntax(line_no, format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        if section.is_empty() {
            return Err(Error::syntax(line_no, "entry outside of any section"));
        }
        if section == "events" {
            sc.events.push(parse_event(line).map_err(|m| Error::syntax(line_no, m))?);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::syntax(line_no, "expected `key = value`"))?;
        if !seen.insert((section.clone(), key.to_string())) {
            return Err(Error::syntax(line_no, format!("duplicate key `{key}` in [{section}]")));
        }
        if section == "scenario" && key == "initial_speed" {
            has_speed = true;
        }
        set(&mut sc, &section, key, value).map_err(|m| Error::syntax(line_no, m))?;
    }
    if !has_speed {
        return Err(Error::syntax(0, "missing `initial_speed` in [scenario]"));
    }
    sc.validate()?;
    Ok(sc)
}

const SECTIONS: [&str; 9] = ["scenario", "driver", "spin", "gains", "baseline", "windup", "allocator", "vehicle", "events"];

fn set(sc: &mut Scenario, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
    match (section, key) {
        ("scenario", "name") => sc.name = value.to_string(),
        ("scenario", "controller") => sc.controller = value.parse::<ControllerKind>().map_err(|e| e.to_string())?,
        ("driver", "steer") => sc.driver.steer = parse_profile(value)?,
        ("driver", "pedal") => sc.driver.pedal = parse_profile(value)?,
        ("driver", "brake") => sc.driver.brake = parse_profile(value)?,
        ("allocator", "normalized") => sc.allocator.normalized = parse_bool(value)?,
        ("allocator", "a_m") => sc.allocator.a_m = parse_matrix(value)?,
        ("allocator", "q") => sc.allocator.q = parse_matrix(value)?,
        ("allocator", "channel_scale") => sc.allocator.channel_scale = parse_array(value)?,
        ("allocator", "actuator_scale") => sc.allocator.actuator_scale = parse_array(value)?,
        ("allocator", "channels") => {
            let flags: [f64; 5] = parse_array(value)?;
            sc.allocator.channels = flags.map(|f| f != 0.0);
        }
        _ => {
            let mut fields = numeric_fields(sc, section);
            let slot = fields
                .iter_mut()
                .find(|(k, _)| *k == key)
                .ok_or_else(|| format!("unknown key `{key}` in [{section}]"))?;
            *slot.1 = parse_number(value)?;
        }
    }
    Ok(())
}

/// Plain numeric settings of a section.
fn numeric_fields<'a>(sc: &'a mut Scenario, section: &str) -> Vec<(&'static str, &'a mut f64)> {
    match section {
        "scenario" => vec![
            ("initial_speed", &mut sc.initial_speed),
            ("horizon", &mut sc.horizon),
            ("dt", &mut sc.dt),
            ("obstacle_x", &mut sc.obstacle_x),
        ],
        "spin" => vec![("threshold", &mut sc.spin.threshold), ("duration", &mut sc.spin.duration)],
        "gains" => gain_fields(&mut sc.gains),
        "baseline" => baseline_fields(&mut sc.gains.baseline),
        "windup" => windup_fields(&mut sc.gains.windup),
        "allocator" => allocator_fields(&mut sc.allocator),
        "vehicle" => vehicle_fields(&mut sc.params),
        _ => Vec::new(),
    }
}

fn gain_fields(g: &mut Gains) -> Vec<(&'static str, &mut f64)> {
    vec![
        ("k_pf", &mut g.k_pf),
        ("k_if", &mut g.k_if),
        ("k_pmz", &mut g.k_pmz),
        ("k_imz", &mut g.k_imz),
        ("k_ps", &mut g.k_ps),
        ("k_is", &mut g.k_is),
        ("k_pr", &mut g.k_pr),
        ("k_dr", &mut g.k_dr),
        ("k_ir", &mut g.k_ir),
        ("k_pp", &mut g.k_pp),
        ("k_dp", &mut g.k_dp),
        ("k_ip", &mut g.k_ip),
        ("k_py", &mut g.k_py),
        ("k_iy", &mut g.k_iy),
        ("k_us", &mut g.k_us),
    ]
}

fn baseline_fields(b: &mut BaselineGains) -> Vec<(&'static str, &mut f64)> {
    vec![
        ("k_pf", &mut b.k_pf),
        ("k_if", &mut b.k_if),
        ("k_pp", &mut b.k_pp),
        ("k_ip", &mut b.k_ip),
        ("k_pr", &mut b.k_pr),
        ("k_ir", &mut b.k_ir),
        ("c_alpha", &mut b.c_alpha),
    ]
}

fn windup_fields(w: &mut WindupLimits) -> Vec<(&'static str, &mut f64)> {
    vec![
        ("force", &mut w.force),
        ("yaw_rate", &mut w.yaw_rate),
        ("side_slip", &mut w.side_slip),
        ("roll", &mut w.roll),
        ("pitch", &mut w.pitch),
    ]
}

fn allocator_fields(a: &mut AllocatorConfig) -> Vec<(&'static str, &mut f64)> {
    vec![
        ("gamma", &mut a.gamma),
        ("projection_factor", &mut a.projection.factor),
        ("projection_absolute", &mut a.projection.absolute),
        ("projection_layer", &mut a.projection.layer),
        ("c_alpha", &mut a.c_alpha),
    ]
}

fn vehicle_fields(p: &mut VehicleParams) -> Vec<(&'static str, &mut f64)> {
    vec![
        ("h", &mut p.h),
        ("a", &mut p.a),
        ("b", &mut p.b),
        ("w", &mut p.w),
        ("m", &mut p.m),
        ("i_x", &mut p.i_x),
        ("i_y", &mut p.i_y),
        ("i_z", &mut p.i_z),
        ("i_w", &mut p.i_w),
        ("r_w", &mut p.r_w),
        ("m_uf", &mut p.m_uf),
        ("m_ur", &mut p.m_ur),
        ("k_uf", &mut p.k_uf),
        ("k_ur", &mut p.k_ur),
        ("k_sf", &mut p.k_sf),
        ("c_sf", &mut p.c_sf),
        ("k_sr", &mut p.k_sr),
        ("c_sr", &mut p.c_sr),
        ("a_f", &mut p.a_f),
        ("c_d", &mut p.c_d),
        ("rho", &mut p.rho),
        ("p0", &mut p.p0),
        ("p1", &mut p.p1),
        ("p2", &mut p.p2),
        ("long_b", &mut p.long.b),
        ("long_c", &mut p.long.c),
        ("long_e", &mut p.long.e),
        ("lat_b", &mut p.lat.b),
        ("lat_c", &mut p.lat.c),
        ("lat_e", &mut p.lat.e),
        ("mu", &mut p.mu),
    ]
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(parse_number).collect()
}

fn parse_array<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let v = parse_list(s)?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} values, got {}", v.len()))
}

/// A 5×5 matrix: one value (scaled identity), five (diagonal) or 25 (row
/// major).
fn parse_matrix(s: &str) -> std::result::Result<ftvc_core::nalgebra::SMatrix<f64, 5, 5>, String> {
    use ftvc_core::nalgebra::{SMatrix, SVector};
    let v = parse_list(s)?;
    match v.len() {
        1 => Ok(SMatrix::identity() * v[0]),
        5 => Ok(SMatrix::from_diagonal(&SVector::from_column_slice(&v))),
        25 => Ok(SMatrix::from_row_slice(&v)),
        n => Err(format!("a 5x5 matrix needs 1, 5 or 25 values, got {n}")),
    }
}

fn parse_profile(s: &str) -> std::result::Result<Profile, String> {
    let s = s.trim();
    if let Some(args) = s.strip_prefix("sine(").and_then(|r| r.strip_suffix(')')) {
        let v = parse_list(args)?;
        let [start, end, amplitude, segments]: [f64; 4] =
            v.try_into().map_err(|_| "sine(start, end, amplitude, segments) takes four values".to_string())?;
        if !(end > start) || segments < 2.0 || segments.fract() != 0.0 {
            return Err("sine needs end > start and an integer segment count of at least 2".into());
        }
        return Ok(Profile::sine(start, end, amplitude, segments as usize));
    }
    if !s.contains(':') {
        return Ok(Profile::constant(parse_number(s)?));
    }
    let points = s
        .split(',')
        .map(|pair| {
            let (t, v) = pair.split_once(':').ok_or_else(|| format!("`{}` is not a `t:v` pair", pair.trim()))?;
            Ok((parse_number(t)?, parse_number(v)?))
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    Profile::new(points).map_err(|e| e.to_string())
}

fn parse_tires(s: &str) -> std::result::Result<[bool; 4], String> {
    match s {
        "all" => return Ok([true; 4]),
        "left" => return Ok([true, false, true, false]),
        "right" => return Ok([false, true, false, true]),
        "front" => return Ok([true, true, false, false]),
        "rear" => return Ok([false, false, true, true]),
        _ => {}
    }
    let mut tires = [false; 4];
    for name in s.split(',') {
        let i = TIRES.iter().position(|t| *t == name.trim()).ok_or_else(|| format!("unknown tire `{name}`"))?;
        tires[i] = true;
    }
    Ok(tires)
}

const TIRES: [&str; 4] = ["fl", "fr", "rl", "rr"];

fn parse_event(line: &str) -> std::result::Result<Event, String> {
    let mut rest = line;
    let mut token = || {
        let t = rest.trim_start();
        let end = t.find(char::is_whitespace).unwrap_or(t.len());
        rest = &t[end..];
        &t[..end]
    };
    let (time, kind, target) = (token(), token(), token());
    let value = rest.trim();
    if value.is_empty() {
        return Err("event rows are `time kind target value`".into());
    }
    let time = parse_number(time)?;
    let kind = match kind {
        "effectiveness" => {
            let actuator = ACTUATOR_COLUMNS
                .iter()
                .position(|c| *c == target)
                .ok_or_else(|| format!("unknown actuator `{target}`"))?;
            EventKind::Effectiveness { actuator, multiplier: parse_number(value)? }
        }
        "friction" => EventKind::LateralFriction { tires: parse_tires(target)?, multiplier: parse_number(value)? },
        "road" => EventKind::RoadElevation { tires: parse_tires(target)?, profile: parse_profile(value)? },
        other => return Err(format!("unknown event kind `{other}`")),
    };
    Ok(Event { time, kind })
}

fn format_profile(p: &Profile) -> String {
    p.points().iter().map(|(t, v)| format!("{t:?}:{v:?}")).collect::<Vec<_>>().join(", ")
}

fn format_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn format_tires(t: &[bool; 4]) -> String {
    TIRES.iter().zip(t).filter(|(_, on)| **on).map(|(n, _)| *n).collect::<Vec<_>>().join(",")
}

/// Writes every setting of `sc` in the file format. `parse(&to_text(sc))`
/// reproduces `sc` exactly.
pub fn to_text(sc: &Scenario) -> String {
    let mut out = String::new();
    let mut copy = sc.clone();
    let _ = writeln!(out, "[scenario]\nname = {}\ncontroller = {}", sc.name, sc.controller.name());
    for section in SECTIONS {
        if section != "scenario" {
            let _ = writeln!(out, "\n[{section}]");
        }
        match section {
            "driver" => {
                let d = &sc.driver;
                let _ = writeln!(out, "steer = {}", format_profile(&d.steer));
                let _ = writeln!(out, "pedal = {}", format_profile(&d.pedal));
                let _ = writeln!(out, "brake = {}", format_profile(&d.brake));
            }
            "allocator" => {
                let a = &sc.allocator;
                let mut a_m = Vec::new();
                let mut q = Vec::new();
                for i in 0..5 {
                    for j in 0..5 {
                        a_m.push(a.a_m[(i, j)]);
                        q.push(a.q[(i, j)]);
                    }
                }
                let channels: Vec<f64> = a.channels.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
                let _ = writeln!(out, "normalized = {}", a.normalized);
                let _ = writeln!(out, "a_m = {}", format_list(&a_m));
                let _ = writeln!(out, "q = {}", format_list(&q));
                let _ = writeln!(out, "channel_scale = {}", format_list(&a.channel_scale));
                let _ = writeln!(out, "actuator_scale = {}", format_list(&a.actuator_scale));
                let _ = writeln!(out, "channels = {}", format_list(&channels));
            }
            "events" => {
                for e in &sc.events {
                    let row = match &e.kind {
                        EventKind::Effectiveness { actuator, multiplier } => {
                            format!("effectiveness {} {multiplier:?}", ACTUATOR_COLUMNS[*actuator])
                        }
                        EventKind::LateralFriction { tires, multiplier } => {
                            format!("friction {} {multiplier:?}", format_tires(tires))
                        }
                        EventKind::RoadElevation { tires, profile } => {
                            format!("road {} {}", format_tires(tires), format_profile(profile))
                        }
                    };
                    let _ = writeln!(out, "{:?} {row}", e.time);
                }
            }
            _ => {}
        }
        for (key, value) in numeric_fields(&mut copy, section) {
            let _ = writeln!(out, "{key} = {:?}", *value);
        }
    }
    out
}
