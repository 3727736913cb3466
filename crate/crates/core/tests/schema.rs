//! Reports validate against the published JSON schema.

use ghzauth::{run_session, AttackModel, CollectiveCoeffs, MeasBasis, SessionConfig};
use serde_json::Value;

const SCHEMA: &str = include_str!("../schema/session_report.schema.json");

fn validator() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn check(config: SessionConfig, redact: bool) -> Value {
    let mut report = run_session(&config).unwrap();
    if redact {
        report.redact();
    }
    let value: Value = serde_json::from_str(&report.to_json()).unwrap();
    let v = validator();
    let errors: Vec<String> = v.iter_errors(&value).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
    value
}

#[test]
fn honest_report_matches_schema() {
    let value = check(SessionConfig::honest(3, 64, 0.25, 16, 4), false);
    assert_eq!(value["schema_version"], 1);
    assert!(value["groups"][0]["trent_op"].is_u64());
}

#[test]
fn redacted_report_matches_schema() {
    let value = check(SessionConfig::honest(2, 64, 0.25, 16, 4), true);
    assert!(value["groups"].as_array().unwrap().iter().all(|g| g["trent_op"].is_null()));
}

#[test]
fn attacked_reports_match_schema() {
    let base = SessionConfig::honest(2, 64, 0.25, 16, 4);
    check(base.clone().with_attack(AttackModel::ImpersonateTrent), false);
    check(base.clone().with_attack(AttackModel::MeasureResend { basis: MeasBasis::X }), false);
    check(base.with_attack(AttackModel::GeneralCollective { coeffs: CollectiveCoeffs::identity() }), false);
}

#[test]
fn schema_rejects_unknown_keys() {
    let mut value: Value =
        serde_json::from_str(&run_session(&SessionConfig::honest(2, 32, 0.25, 4, 0)).unwrap().to_json()).unwrap();
    value["extra"] = Value::Bool(true);
    assert!(!validator().is_valid(&value));
}
