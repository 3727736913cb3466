//! Conformance against the published key-derivation vectors.

use ghzauth::authkey::{derive_key, extend_key};
use ghzauth::{Counter, IdentityNumber};
use serde::Deserialize;

#[derive(Deserialize)]
struct Vector {
    kind: String,
    id_hex: String,
    id_bits: usize,
    counter: u64,
    counter_bits: u32,
    n: usize,
    key_hex: String,
}

#[test]
fn fixture_vectors() {
    let vectors: Vec<Vector> = serde_json::from_str(include_str!("../fixtures/kdf_vectors.json")).unwrap();
    assert!(vectors.len() >= 10);
    for v in vectors {
        let id = IdentityNumber::from_hex(&v.id_hex, v.id_bits).unwrap();
        let c = Counter::new(v.counter, v.counter_bits).unwrap();
        let key = match v.kind.as_str() {
            "derive" => derive_key(&id, &c, v.n).unwrap(),
            "extend" => extend_key(&id, &c, v.n).unwrap(),
            other => panic!("unknown vector kind {other}"),
        };
        assert_eq!(key.len(), v.n);
        assert_eq!(key.to_hex(), v.key_hex, "{} {} {}", v.kind, v.id_hex, v.n);
    }
}
