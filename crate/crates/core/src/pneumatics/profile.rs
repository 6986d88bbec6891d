use std::path::Path;

use super::{PlantConfig, PneumaticsError};

/// Parses `key = value` lines over the default plant. `#` starts a comment.
pub fn parse_plant_profile(text: &str) -> Result<PlantConfig, PneumaticsError> {
    let mut config = PlantConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| PneumaticsError::Profile { line: line_no, reason };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected key = value".into()))?;
        let key = key.trim();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| err(format!("bad number {:?}", value.trim())))?;
        if !value.is_finite() {
            return Err(err("value must be finite".into()));
        }
        let slot = match key {
            "ambient" => &mut config.ambient,
            "supply_pressure" => &mut config.supply_pressure,
            "inflate_time_constant" => &mut config.inflate_time_constant,
            "deflate_time_constant" => &mut config.deflate_time_constant,
            "inflate_line_offset" => &mut config.inflate_line_offset,
            "deflate_line_offset" => &mut config.deflate_line_offset,
            "sensor_noise" => &mut config.sensor_noise,
            "rest_volume_ml" => &mut config.rest_volume_ml,
            "volume_per_hpa_ml" => &mut config.volume_per_hpa_ml,
            other => return Err(err(format!("unknown key {other:?}"))),
        };
        *slot = value;
    }
    if config.inflate_time_constant <= 0.0 || config.deflate_time_constant <= 0.0 {
        return Err(PneumaticsError::Config("time constants must be positive".into()));
    }
    if config.sensor_noise < 0.0 {
        return Err(PneumaticsError::Config("sensor noise must be non-negative".into()));
    }
    if config.supply_pressure <= config.ambient {
        return Err(PneumaticsError::Config("supply must exceed ambient".into()));
    }
    Ok(config)
}

pub fn load_plant_profile(path: &Path) -> Result<PlantConfig, PneumaticsError> {
    let text = std::fs::read_to_string(path).map_err(|e| PneumaticsError::Config(format!("{}: {e}", path.display())))?;
    parse_plant_profile(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_comments() {
        let c = parse_plant_profile("# slow pump\ninflate_time_constant = 40\n\nsensor_noise=0 # off\n").unwrap();
        assert_eq!(c.inflate_time_constant, 40.0);
        assert_eq!(c.sensor_noise, 0.0);
        assert_eq!(c.deflate_time_constant, PlantConfig::default().deflate_time_constant);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            parse_plant_profile("ambient = 1000\nflux = 3").unwrap_err(),
            PneumaticsError::Profile { line: 2, reason: "unknown key \"flux\"".into() }
        );
        assert!(matches!(parse_plant_profile("ambient 3"), Err(PneumaticsError::Profile { line: 1, .. })));
        assert!(parse_plant_profile("deflate_time_constant = -1").is_err());
    }
}
