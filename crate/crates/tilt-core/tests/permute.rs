use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilt_core::permute::*;
use tilt_core::Move;

fn random_perm(n: usize, rng: &mut ChaCha8Rng) -> Permutation {
    let mut m: Vec<usize> = (0..n).collect();
    m.shuffle(rng);
    Permutation::new(m).unwrap()
}

// Independent oracle: compose image-wise.
fn compose_all(gs: &[Permutation], n: usize) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..n).collect();
    for g in gs {
        for p in pos.iter_mut() {
            *p = g.image(*p);
        }
    }
    pos
}

fn divisor_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).map(|d| (d, n / d)).collect()
}

fn random_spec(n: usize, rng: &mut ChaCha8Rng) -> MatrixSpec {
    let ds = divisor_pairs(n);
    let (a_r, a_c) = ds[rng.gen_range(0..ds.len())];
    let (b_r, b_c) = ds[rng.gen_range(0..ds.len())];
    MatrixSpec::new(a_r, a_c, b_r, b_c).unwrap()
}

#[test]
fn four_moves_single_element() {
    let spec = MatrixSpec::square(1, 1).unwrap();
    let (mw, seq) = build_permutation_workspace(spec, &Permutation::identity(1)).unwrap();
    let out = mw.workspace.apply_sequence(&seq);
    assert_eq!(out.particles()[0].anchor, mw.base);
}

#[test]
fn reversal_of_six() {
    let spec = MatrixSpec::square(2, 3).unwrap();
    let pi = Permutation::new((0..6).rev().collect()).unwrap();
    let (mw, seq) = build_permutation_workspace(spec, &pi).unwrap();
    assert_eq!(seq, vec![Move::Up, Move::Right, Move::Down, Move::Left]);
    let out = mw.workspace.apply_sequence(&seq);
    assert_eq!(mw.read_target(&out).unwrap(), vec![5, 4, 3, 2, 1, 0]);
}

#[test]
fn fifteen_elements_obstacle_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for (a_r, a_c) in divisor_pairs(15) {
        let spec = MatrixSpec::square(a_r, a_c).unwrap();
        let pi = random_perm(15, &mut rng);
        let (mw, seq) = build_permutation_workspace(spec, &pi).unwrap();
        assert!(mw.realizes(&mw.workspace.apply_sequence(&seq), &pi));
        assert!(mw.constructed <= 61, "{} obstacles", mw.constructed);
        assert_eq!(mw.constructed, a_c + 2 * 15 + a_r);
    }
}

#[test]
fn four_move_workspaces_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let n = rng.gen_range(1..=100);
        let spec = random_spec(n, &mut rng);
        let pi = random_perm(n, &mut rng);
        let (mw, seq) = build_permutation_workspace(spec, &pi).unwrap();
        assert_eq!(seq.len(), 4);
        let out = mw.workspace.apply_sequence(&seq);
        assert!(mw.realizes(&out, &pi), "{spec:?}");
        assert!(mw.constructed <= 4 * n + 1);
        assert!(mw.bbox.0 <= 3 * n + 1 && mw.bbox.1 <= 3 * n + 1, "{:?} for {spec:?}", mw.bbox);
    }
}

#[test]
fn cycling_restores_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.gen_range(1..=12);
        let ds = divisor_pairs(n);
        let (r, c) = ds[rng.gen_range(0..ds.len())];
        let spec = MatrixSpec::square(r, c).unwrap();
        let pi = random_perm(n, &mut rng);
        let (mw, seq) = build_permutation_workspace(spec, &pi).unwrap();
        let t = permutation_order(&pi);
        let mut ws = mw.workspace.clone();
        for k in 1..=t {
            ws = ws.apply_sequence(&seq);
            let restored = mw.read_source(&ws) == Some((0..n).collect());
            assert_eq!(restored, k == t);
        }
    }
}

#[test]
fn order_examples() {
    assert_eq!(permutation_order(&Permutation::identity(5)), 1);
    assert_eq!(permutation_order(&Permutation::transposition(5, 1, 3)), 2);
    let p = Permutation::new(vec![1, 0, 3, 4, 2]).unwrap();
    assert_eq!(permutation_order(&p), 6);
    // oracle: repeated composition
    let mut q = p.clone();
    let mut t = 1;
    while !q.is_identity() {
        q = q.then(&p);
        t += 1;
    }
    assert_eq!(t, 6);
}

#[test]
fn involutions() {
    let src: Vec<u8> = (0..12).map(|i| ((i / 4 + i % 4) % 2) as u8).collect();
    let dst: Vec<u8> = src.iter().map(|c| 1 - c).collect();
    let inv = make_involution(&src, &dst).unwrap();
    assert!(inv.then(&inv).is_identity());
    for i in 0..12 {
        assert_eq!(dst[inv.image(i)], src[i]);
    }
    assert!(make_involution(&src, &src).unwrap().is_identity());
    assert_eq!(make_involution(&[0, 1, 2], &[0, 1, 2]), Err(PermuteError::TooManyColors));
    assert_eq!(make_involution(&[0, 0, 1], &[0, 1, 1]), Err(PermuteError::ColorCounts));
}

#[test]
fn involution_resets_in_two_cycles() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = MatrixSpec::square(3, 4).unwrap();
    for _ in 0..20 {
        let src: Vec<bool> = (0..12).map(|_| rng.gen()).collect();
        let mut dst = src.clone();
        dst.shuffle(&mut rng);
        let inv = make_involution(&src, &dst).unwrap();
        let (mw, seq) = build_permutation_workspace(spec, &inv).unwrap();
        let once = mw.workspace.apply_sequence(&seq);
        let colors: Vec<bool> = mw.read_target(&once).unwrap().iter().map(|&i| src[i]).collect();
        assert_eq!(colors, dst);
        let twice = once.apply_sequence(&seq);
        assert_eq!(mw.read_source(&twice).unwrap(), (0..12).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn involution_property(bits in prop::collection::vec(any::<bool>(), 1..40), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dst = bits.clone();
        dst.shuffle(&mut rng);
        let inv = make_involution(&bits, &dst).unwrap();
        prop_assert!(inv.then(&inv).is_identity());
        for i in 0..bits.len() {
            prop_assert_eq!(dst[inv.image(i)], bits[i]);
        }
    }
}

#[test]
fn selector_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 1..=6 {
        for (spec, n) in [(MatrixSpec::square(2, 2).unwrap(), 4), (MatrixSpec::new(1, 6, 2, 3).unwrap(), 6), (MatrixSpec::square(3, 2).unwrap(), 6)] {
            let perms: Vec<Permutation> = (0..k).map(|_| random_perm(n, &mut rng)).collect();
            let sel = build_selector_workspace(&perms, spec).unwrap();
            let depth = (k as f64).log2().ceil().max(1.0) as usize;
            for (i, seq) in sel.sequences.iter().enumerate() {
                assert_eq!(seq.len(), 2 * depth + 4);
                assert_eq!(&seq[..2], &[Move::Right, Move::Down]);
                assert_eq!(&seq[seq.len() - 3..], &[Move::Down, Move::Left, Move::Up]);
                let out = sel.matrix.workspace.apply_sequence(seq);
                assert!(sel.matrix.realizes(&out, &perms[i]), "k={k} i={i} {spec:?}");
            }
        }
    }
}

#[test]
fn selector_of_four_uses_eight_moves() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let spec = MatrixSpec::square(3, 3).unwrap();
    let perms: Vec<Permutation> = (0..4).map(|_| random_perm(9, &mut rng)).collect();
    let sel = build_selector_workspace(&perms, spec).unwrap();
    for (i, seq) in sel.sequences.iter().enumerate() {
        assert_eq!(seq.len(), 8);
        assert!(sel.matrix.realizes(&sel.matrix.workspace.apply_sequence(seq), &perms[i]));
    }
}

#[test]
fn two_perm_cycles() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (r, c) in [(1, 1), (1, 4), (2, 3), (3, 2), (3, 3), (4, 1)] {
        let n = r * c;
        let spec = MatrixSpec::square(r, c).unwrap();
        let p1 = random_perm(n, &mut rng);
        let p2 = random_perm(n, &mut rng);
        let mw = build_two_perm_workspace(&p1, &p2, spec).unwrap();
        let cw = mw.workspace.apply_sequence(&CLOCKWISE);
        assert!(mw.realizes(&cw, &p1), "cw {r}x{c}");
        let ccw = mw.workspace.apply_sequence(&COUNTERCLOCKWISE);
        assert!(mw.realizes(&ccw, &p2), "ccw {r}x{c}");
        // random alternations
        let mut ws = mw.workspace.clone();
        let mut applied = Vec::new();
        for _ in 0..10 {
            if rng.gen() {
                ws = ws.apply_sequence(&CLOCKWISE);
                applied.push(p1.clone());
            } else {
                ws = ws.apply_sequence(&COUNTERCLOCKWISE);
                applied.push(p2.clone());
            }
        }
        let pos = compose_all(&applied, n);
        let at = mw.read_target(&ws).unwrap();
        for i in 0..n {
            assert_eq!(at[pos[i]], i);
        }
    }
}

#[test]
fn two_perm_identity_is_noop() {
    let spec = MatrixSpec::square(2, 2).unwrap();
    let id = Permutation::identity(4);
    let mw = build_two_perm_workspace(&id, &id, spec).unwrap();
    for seq in [CLOCKWISE, COUNTERCLOCKWISE] {
        let out = mw.workspace.apply_sequence(&seq);
        assert_eq!(out.canonical_config(), mw.workspace.canonical_config());
    }
}

#[test]
fn swap_then_rotate_six() {
    let spec = MatrixSpec::square(2, 3).unwrap();
    let p = Permutation::transposition(6, 0, 1);
    let q = Permutation::rotation(6);
    let mw = build_two_perm_workspace(&p, &q, spec).unwrap();
    let out = mw.workspace.apply_sequence(&CLOCKWISE).apply_sequence(&COUNTERCLOCKWISE);
    assert!(mw.realizes(&out, &p.then(&q)));
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_perms(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

// Independent BFS over maps, generators given as permutations.
fn bfs_distances(n: usize, gens: &[Permutation]) -> std::collections::HashMap<Vec<usize>, usize> {
    let mut dist = std::collections::HashMap::new();
    let id: Vec<usize> = (0..n).collect();
    dist.insert(id.clone(), 0);
    let mut queue = std::collections::VecDeque::from([id]);
    while let Some(m) = queue.pop_front() {
        let d = dist[&m];
        for g in gens {
            let next: Vec<usize> = m.iter().map(|&x| g.image(x)).collect();
            if !dist.contains_key(&next) {
                dist.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    dist
}

fn star_gens(n: usize) -> Vec<Permutation> {
    let mut g: Vec<Permutation> = (1..n).map(|i| Permutation::transposition(n, 0, i)).collect();
    g.push(Permutation::rotation(n));
    g
}

#[test]
fn two_generator_words_exhaustive() {
    for n in 1..=6 {
        for m in all_perms(n) {
            let pi = Permutation::new(m).unwrap();
            let w = decompose_two_generators(&pi);
            assert_eq!(w.evaluate(n), pi);
            assert!(w.len() <= n * n, "{} letters for {:?}", w.len(), pi);
        }
    }
}

#[test]
fn two_generator_words_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [7, 9, 10, 20, 50] {
        for _ in 0..20 {
            let pi = random_perm(n, &mut rng);
            let w = decompose_two_generators(&pi);
            assert_eq!(w.evaluate(n), pi);
            assert!(w.len() <= n * n);
        }
        let rev = Permutation::new((0..n).rev().collect()).unwrap();
        assert!(decompose_two_generators(&rev).len() <= n * n);
    }
}

#[test]
fn star_words_are_shortest_and_within_n_up_to_six() {
    for n in 2..=6 {
        let dist = bfs_distances(n, &star_gens(n));
        for (m, d) in &dist {
            let pi = Permutation::new(m.clone()).unwrap();
            let w = decompose_n_generators(&pi);
            assert_eq!(w.evaluate(n), pi);
            assert_eq!(w.len(), *d);
            assert!(w.len() <= n);
        }
    }
}

// With seven elements some arrangements need eight letters, so an
// N-letter bound cannot hold. Exact diameters are checked here.
#[test]
fn star_diameters() {
    let expected = [(2, 1), (3, 2), (4, 4), (5, 5), (6, 6), (7, 8)];
    for (n, diam) in expected {
        let dist = bfs_distances(n, &star_gens(n));
        assert_eq!(dist.len(), (1..=n).product::<usize>());
        assert_eq!(*dist.values().max().unwrap(), diam, "n={n}");
    }
    let dist = bfs_distances(7, &star_gens(7));
    let (worst, d) = dist.iter().max_by_key(|(_, d)| **d).unwrap();
    let w = decompose_n_generators(&Permutation::new(worst.clone()).unwrap());
    assert_eq!(w.len(), *d);
    assert!(w.len() > 7);
}

#[test]
fn star_words_larger() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [8, 9, 12, 30] {
        for _ in 0..10 {
            let pi = random_perm(n, &mut rng);
            let w = decompose_n_generators(&pi);
            assert_eq!(w.evaluate(n), pi);
            if n == 8 {
                assert!(w.len() <= 9);
            }
            assert!(w.len() <= 2 * n, "{} letters, n={n}", w.len());
        }
    }
}

#[test]
fn word_text_round_trip() {
    let w = GeneratorWord::parse("p q q p").unwrap();
    assert_eq!(w.to_string(), "p q q p");
    let s = GeneratorWord::parse("p3 q p1").unwrap();
    assert_eq!(s.alphabet, Alphabet::Star);
    assert_eq!(s.to_string(), "p3 q p1");
    assert!(GeneratorWord::parse("p0").is_err());
    assert!(GeneratorWord::parse("x").is_err());
}

#[test]
fn realize_both_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (r, c) in [(1, 1), (1, 2), (2, 2), (2, 3), (1, 5)] {
        let n = r * c;
        let spec = MatrixSpec::square(r, c).unwrap();
        for _ in 0..5 {
            let pi = random_perm(n, &mut rng);
            for mode in [RealizeMode::TwoGen, RealizeMode::NGen] {
                let real = realize_permutation(&pi, spec, mode).unwrap();
                assert_eq!(real.word.evaluate(n), pi);
                let out = real.matrix.workspace.apply_sequence(&real.sequence);
                assert!(real.matrix.realizes(&out, &pi), "{mode:?} {r}x{c}");
            }
        }
    }
}

// The selector over the single given permutation builds the same
// configuration as the direct four-move construction.
#[test]
fn single_selector_matches_direct_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = MatrixSpec::square(2, 3).unwrap();
    let pi = random_perm(6, &mut rng);
    let (direct, seq) = build_permutation_workspace(spec, &pi).unwrap();
    let sel = build_selector_workspace(std::slice::from_ref(&pi), spec).unwrap();
    let a = direct.read_target(&direct.workspace.apply_sequence(&seq)).unwrap();
    let b = sel.matrix.read_target(&sel.matrix.workspace.apply_sequence(&sel.sequences[0])).unwrap();
    assert_eq!(a, b);
}
