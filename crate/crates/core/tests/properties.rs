use proptest::prelude::*;

use relqc_core::detector::Fuel;
use relqc_core::fixtures;
use relqc_core::group::{SubgroupSpec, YLetter};
use relqc_core::parabolics::Payload;
use relqc_core::relcayley::{has_backtracking, relative_length, remove_backtracking};
use relqc_core::structures::{canonical_map, CandidateEntry, PeripheralCandidate, TLetter, Ticker};
use relqc_core::words::{free_reduce, invert_word, GenId, Letter, RelWord};

/// Mixed words over FPROD: generators `a1, a2, b` and small `P1[x,y]` letters.
fn fprod_letter() -> impl Strategy<Value = Letter> {
    prop_oneof![
        (0u32..6).prop_map(|k| Letter::Gen(GenId(k))),
        (-2i64..=2, -2i64..=2).prop_filter("nontrivial", |&(x, y)| (x, y) != (0, 0)).prop_map(|(x, y)| Letter::Para { index: 0, payload: Payload::Vector(vec![x, y]) }),
    ]
}

fn fprod_word(max: usize) -> impl Strategy<Value = RelWord> {
    prop::collection::vec(fprod_letter(), 0..=max).prop_map(RelWord)
}

fn gen_word(max: usize) -> impl Strategy<Value = Vec<GenId>> {
    prop::collection::vec((0u32..6).prop_map(GenId), 0..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn free_reduction_is_idempotent_and_inverts(w in gen_word(12)) {
        let r = free_reduce(&w);
        prop_assert_eq!(free_reduce(&r), r.clone());
        let mut ww = w.clone();
        ww.extend(invert_word(&w));
        prop_assert!(free_reduce(&ww).is_empty());
    }

    #[test]
    fn multiplication_is_associative(a in fprod_word(5), b in fprod_word(5), c in fprod_word(5)) {
        let g = fixtures::fprod();
        let (x, y, z) = (g.element(&a).unwrap(), g.element(&b).unwrap(), g.element(&c).unwrap());
        prop_assert_eq!(g.mul(&g.mul(&x, &y), &z), g.mul(&x, &g.mul(&y, &z)));
        prop_assert!(g.mul(&x, &g.inv(&x)).is_identity());
    }

    #[test]
    fn relative_length_is_a_word_metric(a in fprod_word(6), b in fprod_word(6)) {
        let g = fixtures::fprod();
        let la = relative_length(&g, &a).unwrap();
        prop_assert!(la <= a.len());
        prop_assert_eq!(la, relative_length(&g, &g.invert_relword(&a)).unwrap());
        prop_assert_eq!(la, g.native_relative_length(&g.element(&a).unwrap()));
        let lab = relative_length(&g, &a.concat(&b)).unwrap();
        prop_assert!(lab <= la + relative_length(&g, &b).unwrap());
    }

    #[test]
    fn backtracking_removal_preserves_the_element(w in fprod_word(8)) {
        let g = fixtures::fprod();
        let r = remove_backtracking(&g, &w).unwrap();
        prop_assert!(r.len() <= w.len());
        prop_assert!(has_backtracking(&g, &r).unwrap().is_none());
        prop_assert!(g.element_equal(&w, &r).unwrap());
    }

    #[test]
    fn lattice_membership_matches_parity(x in -20i64..=20, y in -20i64..=20) {
        let g = fixtures::fprod();
        let p = g.oracle(0).unwrap();
        let gens = [Payload::Vector(vec![2, 0]), Payload::Vector(vec![0, 1])];
        prop_assert_eq!(p.membership_elems(&gens, &Payload::Vector(vec![x, y])), x % 2 == 0);
    }

    #[test]
    fn canonical_map_represents_the_same_element(
        ys in prop::collection::vec(0u32..6, 0..6),
        os in prop::collection::vec((1i64..=3, 0usize..6), 0..3),
    ) {
        // H = <a1^2, a2, b> with O = {<a1^2, a2>}; o-letters are inserted at
        // the given positions.
        let g = fixtures::fprod();
        let s = SubgroupSpec::parse(g.alphabet(), "a1 a1,a2,b").unwrap();
        let entry = CandidateEntry { peripheral: 0, conjugator: vec![], gens: vec![vec![YLetter(0)], vec![YLetter(2)]] };
        let cand = PeripheralCandidate::new(&g, &s, vec![entry]).unwrap();
        let mut t: Vec<TLetter> = ys.iter().map(|&k| TLetter::Y(YLetter(k))).collect();
        let mut expected_y = ys.iter().map(|&k| YLetter(k)).collect::<Vec<_>>();
        for &(k, pos) in &os {
            let pos = pos.min(t.len());
            let word = vec![YLetter(0); k as usize];
            let payload = Payload::Vector(vec![2 * k, 0]);
            t.insert(pos, TLetter::O(relqc_core::structures::OLetter { entry: 0, word: word.clone(), payload }));
            let ypos: usize = t[..pos].iter().map(|l| match l { TLetter::Y(_) => 1, TLetter::O(o) => o.word.len() }).sum();
            expected_y.splice(ypos..ypos, word);
        }
        let img = canonical_map(&g, &s, &cand, &t).unwrap();
        // Each Y-letter becomes its X-word; each O-letter one parabolic letter.
        let want_len: usize = t.iter().map(|l| match l { TLetter::Y(y) => s.letter_word(*y).len(), TLetter::O(_) => 1 }).sum();
        prop_assert_eq!(img.len(), want_len);
        let want = g.element_of_gens(&s.to_x_word(&expected_y)).unwrap();
        prop_assert_eq!(g.element(&img).unwrap(), want);
    }

    #[test]
    fn fuel_never_exceeds_total(
        total in 0u64..500,
        slice in 1u64..50,
        asks in prop::collection::vec((0u8..3, 1u64..80), 0..60),
    ) {
        let mut f = Fuel::new(total, slice);
        for (kind, a) in asks {
            f.open_slice();
            let before = f.consumed();
            match kind {
                0 => {
                    let mut t = f.sliced();
                    let granted = (0..a).take_while(|_| t.tick()).count() as u64;
                    prop_assert!(granted <= slice);
                }
                1 => {
                    let mut t = f.atomic();
                    (0..a).take_while(|_| t.tick()).count();
                }
                _ => {
                    let fits = f.charge(a);
                    prop_assert_eq!(fits, before + a <= total);
                }
            }
            prop_assert!(f.consumed() >= before);
            prop_assert!(f.consumed() <= f.total());
        }
    }
}
