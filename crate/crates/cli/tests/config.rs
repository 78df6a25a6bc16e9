use becprobe_cli::config::{Kind, ScheduleSection};
use becprobe_cli::load::{apply_override, expand, parse_value, to_config};
use becprobe_cli::presets::{preset, PRESETS};
use becprobe_cli::validate::validate_value;
use becprobe_cli::{CliError, EXIT_NUMERICAL, EXIT_VALIDATION};

const SMALL: &str = r#"
name = "small"
kind = "covariance"

[trap]
chemical_potential = 2.0
grid_points = 256
half_width = 8.0

[basis]
modes = 4

[time]
t_end = 1.0
samples = 10

[observe]
modes = [1, 2]
"#;

fn small() -> toml::Value {
    parse_value(SMALL, false).unwrap()
}

#[test]
fn every_preset_parses_and_validates() {
    for (name, _) in PRESETS {
        let v = preset(name).unwrap();
        let cfg = to_config(&v).unwrap();
        assert_eq!(cfg.name, *name);
        let report = validate_value(&v);
        assert!(!report.has_errors(), "{name}: {:?}", report.findings);
    }
}

#[test]
fn defaults_fill_missing_sections() {
    let cfg = to_config(&small()).unwrap();
    assert_eq!(cfg.kind, Kind::Covariance);
    assert_eq!(cfg.trap.atom_number, 1000.0);
    assert!(cfg.basis.zero_mode);
    assert_eq!(cfg.probe.kappa2, 1.0);
    assert!(matches!(cfg.schedule, ScheduleSection::Continuous { .. }));
}

#[test]
fn overrides_set_nested_keys_with_typed_values() {
    let mut v = small();
    apply_override(&mut v, "basis.modes=6").unwrap();
    apply_override(&mut v, "probe.rayleigh_length = 0.5").unwrap();
    apply_override(&mut v, "observe.modes=[1, 3]").unwrap();
    apply_override(&mut v, "name=renamed").unwrap();
    let cfg = to_config(&v).unwrap();
    assert_eq!(cfg.basis.modes, 6);
    assert_eq!(cfg.probe.rayleigh_length, Some(0.5));
    assert_eq!(cfg.observe.modes, vec![1, 3]);
    assert_eq!(cfg.name, "renamed");
}

#[test]
fn malformed_overrides_are_config_errors() {
    let mut v = small();
    for bad in ["basis.modes", "basis..modes=3", "name.sub=1"] {
        let e = apply_override(&mut v, bad).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_VALIDATION, "{bad}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let mut v = small();
    apply_override(&mut v, "probe.kapa2=2.0").unwrap();
    let e = to_config(&v).unwrap_err();
    assert!(e.to_string().contains("kapa2"), "{e}");
    assert_eq!(e.exit_code(), EXIT_VALIDATION);
}

#[test]
fn scans_expand_to_labelled_points() {
    let mut v = small();
    apply_override(&mut v, "scan.key=probe.pixel_width").unwrap();
    apply_override(&mut v, "scan.values=[0.0, 0.5, 1.0]").unwrap();
    let points = expand(&v).unwrap();
    assert_eq!(points.len(), 3);
    assert_eq!(points[1].0.as_deref(), Some("probe.pixel_width=0.5"));
    assert_eq!(points[2].1.probe.pixel_width, 1.0);
    assert!(points.iter().all(|p| p.1.scan.is_none()));
}

#[test]
fn validation_flags_unresolvable_modes() {
    let mut v = small();
    apply_override(&mut v, "basis.modes=60").unwrap();
    let r = validate_value(&v);
    assert!(r.has_errors());
    assert!(r.findings.iter().any(|f| f.field == "basis.modes" && f.message.contains("unresolvable")), "{:?}", r.findings);
}

#[test]
fn validation_flags_dt_above_the_step_bound() {
    let mut v = small();
    apply_override(&mut v, "time.dt=0.5").unwrap();
    let r = validate_value(&v);
    let f = r.findings.iter().find(|f| f.field == "time.dt").expect("dt finding");
    assert!(f.message.contains("0.01 / max rate"), "{f}");
}

#[test]
fn validation_flags_missing_modes_and_sections() {
    let mut v = small();
    apply_override(&mut v, "observe.modes=[9]").unwrap();
    apply_override(&mut v, "kind=\"ensemble\"").unwrap();
    let r = validate_value(&v);
    let fields: Vec<&str> = r.findings.iter().map(|f| f.field.as_str()).collect();
    assert!(fields.contains(&"observe") && fields.contains(&"ensemble"), "{fields:?}");
}

#[test]
fn exit_codes_split_config_from_numerics() {
    assert_eq!(CliError::Config("x".into()).exit_code(), EXIT_VALIDATION);
    let invalid = becprobe::Error::invalid("f", "bad");
    assert_eq!(CliError::from(invalid).exit_code(), EXIT_VALIDATION);
    let numerical = becprobe::Error::Numerical("diverged".into());
    assert_eq!(CliError::from(numerical).exit_code(), EXIT_NUMERICAL);
}
