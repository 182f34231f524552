//! p-values and W statistics frozen from scipy.stats (1.x) for fixed samples.

use edqd::stats::{
    anova, compare, kruskal_wallis, levene, shapiro_wilk, welch, Direction, TestUsed,
};

const A: [f64; 7] = [2.9, 3.0, 2.5, 2.6, 3.2, 3.1, 2.8];
const B: [f64; 8] = [3.8, 2.7, 4.0, 2.4, 3.6, 4.1, 3.9, 2.2];
const C: [f64; 7] = [1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 4.0];
const D: [f64; 6] = [3.0, 4.0, 4.0, 5.0, 6.0, 6.0];

fn close(got: f64, want: f64, rel: f64) {
    assert!(
        (got - want).abs() <= rel * want.abs(),
        "got {got}, want {want} (relative tolerance {rel})"
    );
}

#[test]
fn two_sample_tests_match_scipy() {
    close(kruskal_wallis(&A, &B), 0.29762146789111255, 1e-9);
    close(welch(&A, &B), 0.14419068651553213, 1e-7);
    close(anova(&A, &B), 0.15369440273812354, 1e-7);
    close(levene(&A, &B), 0.0010687262938709216, 1e-7);

    // Tied ranks exercise the tie correction.
    close(kruskal_wallis(&C, &D), 0.010563221110373403, 1e-9);
    close(welch(&C, &D), 0.007183237806109933, 1e-7);
    close(anova(&C, &D), 0.005352596474851206, 1e-7);
    close(levene(&C, &D), 0.44374051375782425, 1e-7);
}

#[test]
fn shapiro_wilk_matches_scipy() {
    let cases: [(&[f64], f64, f64); 4] = [
        (&A, 0.9621086625719414, 0.8366093199461393),
        (&B, 0.8392049630318394, 0.07391818039997088),
        (&C, 0.9366220846809399, 0.6085084506120881),
        (&D, 0.9066998456422509, 0.4150435313576897),
    ];
    for (x, w, p) in cases {
        let sw = shapiro_wilk(x).unwrap().unwrap();
        close(sw.w, w, 1e-6);
        close(sw.p_value, p, 1e-4);
    }
}

#[test]
fn decision_tree_branches() {
    // Both normal, Levene rejects equal spread: Welch, not significant.
    let r = compare(&A, &B).unwrap();
    assert_eq!(r.test_used, TestUsed::Welch);
    assert_eq!(r.direction, Direction::Equal);
    assert!(r.levene_p.unwrap() < 0.05);

    // Both normal, equal spread: ANOVA, C below D.
    let r = compare(&C, &D).unwrap();
    assert_eq!(r.test_used, TestUsed::Anova);
    assert_eq!(r.direction, Direction::Less);
    let m = compare(&D, &C).unwrap();
    assert_eq!(m.direction, r.direction.mirrored());
    assert_eq!(m.p_value, r.p_value);
}
