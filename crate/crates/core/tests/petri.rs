mod common;

use asyncver::petri::{
    backward_cover, karp_miller, karp_miller_with, parse_net, print_net, to_boolean, BoolMode, CoverCertificate, KmLimits,
    Marking, UpwardBasis,
};
use common::{bounded_truth, cover_truth, random_net, random_target, rng, vector};
use rand::Rng;

const MAX: usize = 10_000;

#[test]
fn karp_miller_matches_enumeration() {
    let mut r = rng(31);
    let (mut decided, mut unbounded) = (0, 0);
    for _ in 0..300 {
        let n = random_net(&mut r, 5, 3, false);
        let km = karp_miller_with(&n, KmLimits { max_nodes: MAX }, |_| false).unwrap();
        let Some(truth) = bounded_truth(&n, MAX) else { continue };
        assert_eq!(km.is_bounded(), Some(truth), "\n{}", print_net(&n));
        decided += 1;
        unbounded += !truth as usize;
        let target = random_target(&mut r, &n, 3);
        if let Some(c) = cover_truth(&n, &target, MAX) {
            assert_eq!(km.covers(&target), Some(c), "target {}\n{}", n.fmt_marking(&target), print_net(&n));
        }
        for v in (0..km.nodes.len()).filter(|&v| !km.nodes[v].has_omega()) {
            let m = n.replay(&km.path_to(v)).unwrap();
            assert!(km.nodes[v].covers(&m));
        }
    }
    assert!(decided >= 200 && unbounded >= 30, "{decided} decided, {unbounded} unbounded");
}

#[test]
fn backward_coverability_matches_enumeration() {
    let mut r = rng(32);
    for resets in [false, true] {
        let (mut yes, mut no) = (0, 0);
        for _ in 0..300 {
            let n = random_net(&mut r, 5, 3, resets);
            let target = random_target(&mut r, &n, 3);
            let Some(truth) = cover_truth(&n, &target, MAX) else { continue };
            let res = backward_cover(&n, &UpwardBasis::singleton(target.clone()));
            assert_eq!(res.coverable, Some(truth), "target {}\n{}", n.fmt_marking(&target), print_net(&n));
            match &res.certificate {
                CoverCertificate::Firing(seq) => assert!(target.le(&n.replay(seq).unwrap())),
                CoverCertificate::Basis(b) => assert!(!b.contains(&n.initial)),
                other => panic!("unexpected certificate {other}"),
            }
            if truth {
                yes += 1;
            } else {
                no += 1;
            }
        }
        assert!(yes >= 50 && no >= 50, "resets {resets}: {yes} coverable, {no} not");
    }
}

#[test]
fn firing_is_monotone() {
    let mut r = rng(33);
    for _ in 0..300 {
        let n = random_net(&mut r, 5, 3, false);
        let m: Marking = random_target(&mut r, &n, 3);
        let mut bigger = m.clone();
        for p in n.places() {
            bigger.add(p, r.random_range(0..3));
        }
        for t in 0..n.transitions().len() {
            if let Ok(a) = n.fire(&m, t) {
                let b = n.fire(&bigger, t).expect("enabled on a larger marking");
                assert!(a.le(&b));
                let gap = bigger.checked_sub(&m).unwrap();
                assert_eq!(b, a.sum(&gap));
            }
        }
    }
}

#[test]
fn booleanization_preserves_bound_and_cover() {
    let mut r = rng(34);
    let (mut bound_checked, mut cover_checked) = (0, 0);
    for _ in 0..200 {
        let n = random_net(&mut r, 4, 7, false);
        let b = to_boolean(&n, BoolMode::Bound, None).unwrap();
        assert!(b.net.is_boolean(), "\n{}", print_net(&b.net));
        if let Some(truth) = bounded_truth(&n, MAX) {
            let km = karp_miller_with(&b.net, KmLimits { max_nodes: 200_000 }, |m| m.has_omega()).unwrap();
            let got = if km.stopped_at.is_some() { Some(false) } else { km.is_bounded() };
            assert_eq!(got, Some(truth), "\n{}", print_net(&n));
            bound_checked += 1;
        }
        let target = random_target(&mut r, &n, 7);
        if let Some(truth) = cover_truth(&n, &target, MAX) {
            let c = to_boolean(&n, BoolMode::Cover, Some(&target)).unwrap();
            assert!(c.net.is_boolean());
            let t = c.target.unwrap();
            assert!(t.max_count() <= 1);
            let km = karp_miller_with(&c.net, KmLimits { max_nodes: 200_000 }, |_| false).unwrap();
            assert_eq!(km.covers(&t), Some(truth), "target {}\n{}", n.fmt_marking(&target), print_net(&n));
            cover_checked += 1;
        }
    }
    assert!(bound_checked >= 100 && cover_checked >= 100, "{bound_checked} bound, {cover_checked} cover");
}

#[test]
fn booleanized_nets_keep_original_places() {
    let mut r = rng(35);
    for _ in 0..50 {
        let n = random_net(&mut r, 4, 7, false);
        let b = to_boolean(&n, BoolMode::Bound, None).unwrap();
        for p in n.places() {
            assert_eq!(b.net.place_name(p), n.place_name(p));
        }
    }
}

#[test]
fn reset_nets_are_refused_where_unsound() {
    let n = parse_net("net {\n  places: p q;\n  init: p;\n  trans t { in: p; out: q; reset: q; }\n}\n").unwrap();
    assert!(n.has_resets());
    assert!(karp_miller(&n).is_err());
    assert!(to_boolean(&n, BoolMode::Bound, None).is_err());
}

#[test]
fn net_text_round_trips() {
    let mut r = rng(36);
    for resets in [false, true] {
        for _ in 0..100 {
            let n = random_net(&mut r, 5, 3, resets);
            let text = print_net(&n);
            let m = parse_net(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert_eq!(print_net(&m), text);
            assert_eq!(vector(&m, &m.initial), vector(&n, &n.initial));
        }
    }
}
