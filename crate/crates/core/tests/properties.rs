use hologn::analysis::overlap_distance;
use hologn::{majority_bundle, Engine, HDVector, PatternStore, Seed};
use proptest::prelude::*;

fn dim() -> impl Strategy<Value = usize> {
    prop_oneof![Just(64usize), Just(65), Just(127), Just(128), 64usize..700]
}

fn vector(d: usize) -> impl Strategy<Value = HDVector> {
    any::<u64>().prop_map(move |s| HDVector::random(d, Seed::new(s, 0)).unwrap())
}

fn pair() -> impl Strategy<Value = (HDVector, HDVector)> {
    dim().prop_flat_map(|d| (vector(d), vector(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shift_is_a_cyclic_group_action(v in dim().prop_flat_map(vector), i in -5000i64..5000, j in -5000i64..5000) {
        let d = v.dim() as i64;
        prop_assert_eq!(v.shift(i).shift(j), v.shift(i + j));
        prop_assert_eq!(v.shift(i).shift(-i), v.clone());
        prop_assert_eq!(v.shift(d), v.clone());
        prop_assert_eq!(v.shift(i).density(), v.density());
    }

    #[test]
    fn shift_moves_bits_forward(v in dim().prop_flat_map(vector), i in 0usize..2000) {
        let d = v.dim();
        let s = v.shift(i as i64);
        for k in 0..d {
            prop_assert_eq!(s.bit((k + i) % d), v.bit(k));
        }
    }

    #[test]
    fn xor_is_self_inverse((a, b) in pair()) {
        let x = a.xor(&b).unwrap();
        prop_assert_eq!(x.xor(&b).unwrap(), a.clone());
        prop_assert_eq!(a.xor(&a).unwrap(), HDVector::zeros(a.dim()));
        prop_assert_eq!(a.xor(&b).unwrap(), b.xor(&a).unwrap());
    }

    #[test]
    fn distance_is_density_of_xor((a, b) in pair()) {
        let m = a.mismatches(&b).unwrap();
        prop_assert_eq!(m, a.xor(&b).unwrap().density());
        let naive = a.iter_bits().zip(b.iter_bits()).filter(|(x, y)| x != y).count();
        prop_assert_eq!(m, naive);
        prop_assert_eq!(m, b.mismatches(&a).unwrap());
        prop_assert_eq!(a.mismatches(&a.complement()).unwrap(), a.dim());
        prop_assert_eq!(a.shift(7).mismatches(&b.shift(7)).unwrap(), m);
    }

    #[test]
    fn padding_stays_clear(v in dim().prop_flat_map(vector), i in -300i64..300) {
        for w in [v.shift(i), v.complement(), HDVector::ones(v.dim())] {
            prop_assert!(HDVector::from_words(w.dim(), w.words().to_vec()).is_ok());
        }
    }

    #[test]
    fn odd_bundle_is_order_free(d in dim(), seeds in prop::collection::vec(any::<u64>(), 1..6), perm in any::<u64>()) {
        let n = 2 * seeds.len() - 1;
        let vs: Vec<HDVector> = (0..n).map(|i| HDVector::random(d, Seed::new(seeds[i % seeds.len()], i as u64)).unwrap()).collect();
        let mut shuffled = vs.clone();
        shuffled.rotate_left((perm as usize) % n);
        shuffled.reverse();
        let a = majority_bundle(&vs, Seed::new(1, 1)).unwrap();
        let b = majority_bundle(&shuffled, Seed::new(2, 2)).unwrap();
        prop_assert_eq!(&a, &b);
        for k in 0..d {
            let ones = vs.iter().filter(|v| v.bit(k)).count();
            prop_assert_eq!(a.bit(k), 2 * ones > n);
        }
    }

    #[test]
    fn engines_agree(d in dim(), rows in 1usize..40, s in any::<u64>()) {
        let mut store = PatternStore::new(d);
        for r in 0..rows {
            store.insert(format!("r{r}"), &HDVector::random(d, Seed::new(s, r as u64)).unwrap()).unwrap();
        }
        let q = HDVector::random(d, Seed::new(s ^ 1, 99)).unwrap();
        let x = store.mismatches(&q, Engine::Xor).unwrap();
        let c = store.mismatches(&q, Engine::Complex).unwrap();
        prop_assert_eq!(&x, &c);
        prop_assert_eq!(store.best_match(&q, Engine::Xor).unwrap(), store.best_match(&q, Engine::Complex).unwrap());
    }

    #[test]
    fn recall_grows_with_xi(d in dim(), rows in 1usize..30, s in any::<u64>(), a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut store = PatternStore::new(d);
        let vs: Vec<HDVector> = (0..rows).map(|r| HDVector::random(d, Seed::new(s, r as u64)).unwrap()).collect();
        for (r, v) in vs.iter().enumerate() {
            store.insert(format!("r{r}"), v).unwrap();
        }
        let q = vs[0].clone();
        let small = store.recall_xi(&q, lo, Engine::Xor).unwrap();
        let large = store.recall_xi(&q, hi, Engine::Xor).unwrap();
        prop_assert!(small.len() <= large.len());
        for h in &small.hits {
            prop_assert!(large.hits.iter().any(|g| g.row == h.row));
        }
        // An exact copy is always recalled, first.
        prop_assert_eq!(small.hits[0].distance.mismatches, 0);
        for w in large.hits.windows(2) {
            prop_assert!(w[0].distance.mismatches <= w[1].distance.mismatches);
        }
    }

    #[test]
    fn vector_text_round_trip(v in dim().prop_flat_map(vector)) {
        let back = HDVector::from_text(&v.to_text()).unwrap();
        prop_assert_eq!(back, v.clone());
        prop_assert_eq!(HDVector::from_hex(v.dim(), &v.to_hex()).unwrap(), v);
    }

    #[test]
    fn store_text_round_trip(d in dim(), rows in 0usize..10, s in any::<u64>()) {
        let mut store = PatternStore::new(d);
        for r in 0..rows {
            store.insert(format!("label {r}"), &HDVector::random(d, Seed::new(s, r as u64)).unwrap()).unwrap();
        }
        let back = PatternStore::from_text(&store.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), store.to_text());
        prop_assert_eq!(back.len(), rows);
    }

    #[test]
    fn overlap_is_symmetric_and_bounded(n in 1usize..60, m in 1usize..60, c_frac in 0.0f64..=1.0) {
        let c = ((m.min(n) as f64) * c_frac) as usize;
        let a = overlap_distance(c, m, n).unwrap();
        let b = overlap_distance(c, n, m).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=0.5 + 1e-12).contains(&a));
    }
}

#[test]
fn overlap_decreases_with_shared_components() {
    for n in [3usize, 15, 55] {
        let curve: Vec<f64> = (0..=n).map(|c| overlap_distance(c, n, n).unwrap()).collect();
        assert!(curve.windows(2).all(|w| w[1] < w[0]), "n={n}: {curve:?}");
        assert!(curve[n].abs() < 1e-15);
    }
}
