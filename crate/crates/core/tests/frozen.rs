//! Norm values frozen from an independent brute-force evaluation.

use jsum::chain::{build_chain, ChainDescription};
use jsum::jnorm::{jnorm, jnorm_oracle};
use jsum::vector::{JVector, Tail};

fn chain(json: &str) -> jsum::Chain {
    let desc: ChainDescription = serde_json::from_str(json).unwrap();
    build_chain(&desc).unwrap()
}

fn check(c: &jsum::Chain, blocks: &[Vec<f64>], expected: f64) {
    let x = JVector::from_vecs(c, blocks, Tail::Zero).unwrap();
    let dp = jnorm(c, &x).unwrap();
    let oracle = jnorm_oracle(c, &x).unwrap();
    assert!(
        (dp.value - expected).abs() <= 1e-12 * expected,
        "dp {} vs {expected}",
        dp.value
    );
    assert!(
        (oracle.value - expected).abs() <= 1e-12 * expected,
        "oracle {} vs {expected}",
        oracle.value
    );
}

const MIXED_DIMS: &str = r#"{"N": 3,
    "spaces": [{"dim": 2, "p": 2}, {"dim": 1, "p": 2}, {"dim": 2, "p": 2}],
    "maps": [[[0.6, -0.3]], [[0.5], [0.4]]]}"#;

#[test]
fn mixed_dimensions() {
    let c = chain(MIXED_DIMS);
    let x = [vec![1.0, -2.0], vec![0.5], vec![3.0, -1.0]];
    check(&c, &x, 3.499464244709467);
    check(&c.with_q(1.5).unwrap(), &x, 3.788857279193893);
}

#[test]
fn mixed_exponents() {
    let c = chain(
        r#"{"N": 3,
            "spaces": [{"dim": 2, "p": 1}, {"dim": 2, "p": 2}, {"dim": 2, "p": "inf"}],
            "maps": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]],
            "validation": "asserted"}"#,
    );
    check(
        &c,
        &[vec![1.0, 1.0], vec![-1.0, 2.0], vec![0.5, 0.5]],
        2.6457513110645907,
    );
}

#[test]
fn james_with_cubic_outer_exponent() {
    let c = chain(
        r#"{"N": 5, "q": 3,
            "spaces": [{"dim": 1, "p": 2}, {"dim": 1, "p": 2}, {"dim": 1, "p": 2}, {"dim": 1, "p": 2}, {"dim": 1, "p": 2}],
            "maps": [[[1]], [[1]], [[1]], [[1]]]}"#,
    );
    check(
        &c,
        &[vec![2.0], vec![-1.0], vec![0.5], vec![3.0], vec![0.0]],
        3.979057207896392,
    );
}
