use p4ifc::{Label, Lattice};
use proptest::prelude::*;

/// Lattices with a few shapes: the built-ins, a chain, and a product-like
/// one with two incomparable middles at two levels.
fn lattices() -> Vec<Lattice> {
    let chain = Lattice::from_cover_pairs(
        "chain",
        &["c0", "c1", "c2", "c3"],
        "c0",
        "c3",
        &[("c0", "c1"), ("c1", "c2"), ("c2", "c3")],
    )
    .unwrap();
    let wide = Lattice::from_cover_pairs(
        "wide",
        &["b", "x", "y", "m", "p", "q", "t"],
        "b",
        "t",
        &[
            ("b", "x"),
            ("b", "y"),
            ("x", "m"),
            ("y", "m"),
            ("m", "p"),
            ("m", "q"),
            ("p", "t"),
            ("q", "t"),
        ],
    )
    .unwrap();
    vec![Lattice::two_point(), Lattice::diamond(), chain, wide]
}

fn pick(lat: &Lattice, i: usize) -> Label {
    lat.elements().nth(i % lat.len()).unwrap()
}

proptest! {
    #[test]
    fn join_and_meet_laws(which in 0usize..4, a in 0usize..8, b in 0usize..8, c in 0usize..8) {
        let lats = lattices();
        let lat = &lats[which];
        let (a, b, c) = (pick(lat, a), pick(lat, b), pick(lat, c));

        prop_assert_eq!(lat.join(a, b), lat.join(b, a));
        prop_assert_eq!(lat.meet(a, b), lat.meet(b, a));
        prop_assert_eq!(lat.join(lat.join(a, b), c), lat.join(a, lat.join(b, c)));
        prop_assert_eq!(lat.meet(lat.meet(a, b), c), lat.meet(a, lat.meet(b, c)));
        prop_assert_eq!(lat.join(a, a), a);
        prop_assert_eq!(lat.join(a, lat.meet(a, b)), a);
        prop_assert_eq!(lat.meet(a, lat.join(a, b)), a);

        prop_assert_eq!(lat.leq(a, b), lat.join(a, b) == b);
        prop_assert_eq!(lat.leq(a, b), lat.meet(a, b) == a);
        prop_assert!(lat.leq(lat.bottom(), a) && lat.leq(a, lat.top()));
        prop_assert!(lat.leq(a, lat.join(a, b)) && lat.leq(lat.meet(a, b), a));
    }

    #[test]
    fn join_all_folds_join(which in 0usize..4, xs in proptest::collection::vec(0usize..8, 0..6)) {
        let lats = lattices();
        let lat = &lats[which];
        let labels: Vec<Label> = xs.iter().map(|&i| pick(lat, i)).collect();
        let j = labels.iter().fold(lat.bottom(), |acc, &l| lat.join(acc, l));
        let m = labels.iter().fold(lat.top(), |acc, &l| lat.meet(acc, l));
        prop_assert_eq!(lat.join_all(labels.iter().copied()), j);
        prop_assert_eq!(lat.meet_all(labels.iter().copied()), m);
    }
}

#[test]
fn source_round_trip() {
    for lat in lattices() {
        let again = Lattice::parse(lat.name(), &lat.to_source()).unwrap();
        for a in lat.elements() {
            for b in lat.elements() {
                let (x, y) = (
                    again.label(lat.name_of(a)).unwrap(),
                    again.label(lat.name_of(b)).unwrap(),
                );
                assert_eq!(lat.leq(a, b), again.leq(x, y));
            }
        }
    }
}

#[test]
fn rejects_non_lattices() {
    // Two incomparable upper bounds of x and y: no least one.
    let bowtie = Lattice::from_cover_pairs(
        "bowtie",
        &["b", "x", "y", "p", "q", "t"],
        "b",
        "t",
        &[
            ("b", "x"),
            ("b", "y"),
            ("x", "p"),
            ("y", "p"),
            ("x", "q"),
            ("y", "q"),
            ("p", "t"),
            ("q", "t"),
        ],
    );
    assert!(bowtie.is_err());
    let cycle =
        Lattice::from_cover_pairs("cycle", &["a", "b"], "a", "b", &[("a", "b"), ("b", "a")]);
    assert!(cycle.is_err());
    assert!(Lattice::builtin("nope").is_none());
    assert!(Lattice::two_point().label("secret").is_err());
}
