//! Flat `key = value` scenario files. `#` starts a comment; blank lines are
//! ignored; unknown or repeated keys are errors.

use std::collections::HashSet;
use std::str::FromStr;

use super::{ArmSpec, Motion, ScenarioSpec};
use crate::dataset::SamplerKind;
use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const KEYS: &[&str] = &[
    "dof",
    "link_lengths",
    "link_thickness",
    "base",
    "workspace_half_width",
    "obstacle_count",
    "obstacle_radius_min",
    "obstacle_radius_max",
    "obstacle_vertices_min",
    "obstacle_vertices_max",
    "obstacle_distance_min",
    "obstacle_distance_max",
    "motion",
    "speed",
    "cycles",
    "sampler",
    "n",
    "gamma",
    "r_plus",
    "max_updates",
    "allowance",
    "allowance_fraction",
    "exploit_proportion",
    "k_ns",
    "eval_size",
    "scenes",
    "seed",
    "step_size",
    "goal_bias",
    "max_iterations",
    "edge_resolution",
    "goal_tolerance",
    "replans",
    "placement_retries",
    "sweep_obstacles",
    "sweep_n",
    "sweep_allowance_fraction",
    "record_timing",
];

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Config {
        line,
        message: format!("cannot parse `{raw}` for `{key}`"),
    })
}

fn parse_list<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',').map(|s| parse_value(line, key, s.trim())).collect()
}

fn parse_bool(line: usize, key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config {
            line,
            message: format!("`{key}` expects true or false, got `{raw}`"),
        }),
    }
}

/// Parses a scenario file on top of the defaults.
pub fn parse_config(text: &str) -> Result<ScenarioSpec> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Config {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.push((line, key.to_string(), value.to_string()));
    }
    let get = |k: &str| {
        entries
            .iter()
            .find(|(_, key, _)| key == k)
            .map(|(l, _, v)| (*l, v.as_str()))
    };

    // Arm shape first: dof and link lengths decide several defaults.
    let lengths: Option<Vec<f64>> = get("link_lengths")
        .map(|(l, v)| parse_list(l, "link_lengths", v))
        .transpose()?;
    let dof: Option<usize> = get("dof").map(|(l, v)| parse_value(l, "dof", v)).transpose()?;
    let link_lengths = match (lengths, dof) {
        (Some(ls), Some(d)) if ls.len() != d => {
            return Err(Error::Config {
                line: get("dof").map(|p| p.0).unwrap_or(0),
                message: format!("dof {d} does not match {} link lengths", ls.len()),
            })
        }
        (Some(ls), _) => ls,
        (None, Some(d)) => ArmSpec::equal_links(d).link_lengths,
        (None, None) => ArmSpec::default().link_lengths,
    };
    let mut spec = ScenarioSpec::for_dof(link_lengths.len());
    spec.arm.link_lengths = link_lengths;

    let mut allowance: Option<usize> = None;
    let mut allowance_fraction: Option<f64> = None;
    let mut motion_kind: Option<(usize, String)> = None;
    let mut speed: Option<f64> = None;

    for (line, key, value) in &entries {
        let (line, v) = (*line, value.as_str());
        let k = key.as_str();
        match k {
            "dof" | "link_lengths" => {}
            "link_thickness" => spec.arm.link_thickness = Some(parse_value(line, k, v)?),
            "base" => {
                let xy: Vec<f64> = parse_list(line, k, v)?;
                if xy.len() != 2 {
                    return Err(Error::Config {
                        line,
                        message: "`base` expects `x, y`".into(),
                    });
                }
                spec.arm.base = Vec2::new(xy[0], xy[1]);
            }
            "workspace_half_width" => spec.workspace_half_width = Some(parse_value(line, k, v)?),
            "obstacle_count" => spec.obstacles.count = parse_value(line, k, v)?,
            "obstacle_radius_min" => spec.obstacles.radius.0 = parse_value(line, k, v)?,
            "obstacle_radius_max" => spec.obstacles.radius.1 = parse_value(line, k, v)?,
            "obstacle_vertices_min" => spec.obstacles.vertices.0 = parse_value(line, k, v)?,
            "obstacle_vertices_max" => spec.obstacles.vertices.1 = parse_value(line, k, v)?,
            "obstacle_distance_min" => spec.obstacles.distance.0 = parse_value(line, k, v)?,
            "obstacle_distance_max" => spec.obstacles.distance.1 = parse_value(line, k, v)?,
            "motion" => motion_kind = Some((line, v.to_string())),
            "speed" => speed = Some(parse_value(line, k, v)?),
            "cycles" => spec.cycles = parse_value(line, k, v)?,
            "sampler" => {
                spec.sampler.kind = match v {
                    "grid" => SamplerKind::Grid,
                    "uniform" => SamplerKind::Uniform,
                    _ => {
                        return Err(Error::Config {
                            line,
                            message: format!("sampler must be grid or uniform, got `{v}`"),
                        })
                    }
                }
            }
            "n" => spec.sampler.n = parse_value(line, k, v)?,
            "gamma" => spec.gamma = parse_value(line, k, v)?,
            "r_plus" => spec.r_plus = parse_value(line, k, v)?,
            "max_updates" => spec.max_updates = parse_value(line, k, v)?,
            "allowance" => allowance = Some(parse_value(line, k, v)?),
            "allowance_fraction" => allowance_fraction = Some(parse_value(line, k, v)?),
            "exploit_proportion" => spec.exploit_proportion = parse_value(line, k, v)?,
            "k_ns" => spec.k_ns = parse_value(line, k, v)?,
            "eval_size" => spec.eval_size = parse_value(line, k, v)?,
            "scenes" => spec.scenes = parse_value(line, k, v)?,
            "seed" => spec.seed = parse_value(line, k, v)?,
            "step_size" => spec.rrt.step_size = parse_value(line, k, v)?,
            "goal_bias" => spec.rrt.goal_bias = parse_value(line, k, v)?,
            "max_iterations" => spec.rrt.max_iterations = parse_value(line, k, v)?,
            "edge_resolution" => spec.rrt.edge_resolution = parse_value(line, k, v)?,
            "goal_tolerance" => spec.rrt.goal_tolerance = parse_value(line, k, v)?,
            "replans" => spec.replans = parse_value(line, k, v)?,
            "placement_retries" => spec.placement_retries = parse_value(line, k, v)?,
            "sweep_obstacles" => spec.sweep_obstacles = parse_list(line, k, v)?,
            "sweep_n" => spec.sweep_n = parse_list(line, k, v)?,
            "sweep_allowance_fraction" => spec.sweep_allowance_fraction = parse_list(line, k, v)?,
            "record_timing" => spec.record_timing = parse_bool(line, k, v)?,
            _ => unreachable!("key list and match arms disagree on `{k}`"),
        }
    }

    spec.motion = match motion_kind {
        None => match speed {
            Some(s) => Motion::LinearBounce { speed: Some(s) },
            None => spec.motion,
        },
        Some((_, m)) if m == "static" => Motion::Static,
        Some((_, m)) if m == "linear-bounce" => Motion::LinearBounce { speed },
        Some((line, m)) => {
            return Err(Error::Config {
                line,
                message: format!("motion must be static or linear-bounce, got `{m}`"),
            })
        }
    };

    spec.allowance = match (allowance, allowance_fraction) {
        (Some(a), _) => Some(a),
        (None, Some(f)) => {
            spec.allowance_fraction = f;
            None
        }
        (None, None) => None,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_an_empty_file() {
        let spec = parse_config("# nothing\n\n").unwrap();
        assert_eq!(spec, ScenarioSpec::default());
    }

    #[test]
    fn overrides_apply() {
        let spec = parse_config(
            "dof = 3\nn = 1000 # lattice of 10^3\nsampler = grid\nr_plus = 2\nallowance_fraction = 0.5\nmotion = static\n",
        )
        .unwrap();
        assert_eq!(spec.arm.link_lengths.len(), 3);
        assert_eq!(spec.sampler.n, 1000);
        assert_eq!(spec.sampler.kind, SamplerKind::Grid);
        assert_eq!(spec.r_plus, 2.0);
        assert_eq!(spec.resolved_allowance(), 500);
        assert_eq!(spec.motion, Motion::Static);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config("n = 625\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        assert!(matches!(
            parse_config("n = 6x").unwrap_err(),
            Error::Config { line: 1, .. }
        ));
        assert!(matches!(
            parse_config("n = 1\nn = 2").unwrap_err(),
            Error::Config { line: 2, .. }
        ));
        assert!(matches!(
            parse_config("just words").unwrap_err(),
            Error::Config { line: 1, .. }
        ));
        assert!(parse_config("dof = 3\nlink_lengths = 1, 1").is_err());
        assert!(parse_config("motion = wobbly").is_err());
    }

    #[test]
    fn invalid_combinations_are_rejected() {
        assert!(parse_config("sampler = grid\nn = 600").is_err());
        assert!(parse_config("allowance = 700\nn = 625").is_err());
    }
}
