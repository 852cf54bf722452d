use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilt_core::reductions::*;
use tilt_core::sim::{parse_moves, Move, Workspace};
use tilt_core::solver::{bfs_shortest_sequence, reachable_configs, GoalSpec, Status, DEFAULT_CAP};
use tilt_core::twf;

const FOUR_CLAUSES: &str = "c four clauses over four variables\np cnf 4 4\n-1 -3 4 0\n-2 -3 4 0\n-1 2 4 0\n1 -2 3 0\n";
const CONTRADICTION: &str = "p cnf 1 2\n1 1 1 0\n-1 -1 -1 0\n";

fn moves(s: &str) -> Vec<Move> {
    parse_moves(s).unwrap()
}

fn lit(v: i64) -> Literal {
    Literal { var: v.unsigned_abs() as usize, positive: v > 0 }
}

// Brute-force CNF truth, written without the library's evaluator.
fn cnf_truth(clauses: &[[i64; 3]], bits: u64) -> bool {
    clauses.iter().all(|c| c.iter().any(|&v| ((bits >> (v.unsigned_abs() - 1)) & 1 == 1) == (v > 0)))
}

fn formula(n: usize, clauses: &[[i64; 3]]) -> CnfFormula {
    CnfFormula::new(n, clauses.iter().map(|c| [lit(c[0]), lit(c[1]), lit(c[2])]).collect()).unwrap()
}

fn particle_cell(w: &Workspace) -> tilt_core::sim::Cell {
    w.particles()[0].anchor
}

#[test]
fn dimacs_round_trip_and_errors() {
    let f = parse_dimacs(FOUR_CLAUSES).unwrap();
    assert_eq!((f.n, f.m()), (4, 4));
    assert_eq!(f.clauses[0], [lit(-1), lit(-3), lit(4)]);
    assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
    assert_eq!(f.to_string(), "(~x1 | ~x3 | x4) & (~x2 | ~x3 | x4) & (~x1 | x2 | x4) & (x1 | ~x2 | x3)");
    // clauses may span lines
    assert_eq!(parse_dimacs("p cnf 2 1\n1\n-2 2\n0\n").unwrap().clauses[0], [lit(1), lit(-2), lit(2)]);
    assert!(matches!(parse_dimacs("p cnf 2 1\n1 2 0\n"), Err(SatError::ClauseWidth { got: 2, .. })));
    assert!(matches!(parse_dimacs("p cnf 2 1\n1 2 3 0\n"), Err(SatError::VarRange { lit: 3, .. })));
    assert!(matches!(parse_dimacs("1 2 3 0\n"), Err(SatError::Dimacs { .. })));
    assert!(matches!(parse_dimacs("p cnf 3 2\n1 2 3 0\n"), Err(SatError::Dimacs { .. })));
    assert!(matches!(parse_dimacs("p cnf 3 1\n1 2 3\n"), Err(SatError::Dimacs { .. })));
    assert!(matches!(parse_dimacs("p cnf 3 1\n1 x 3 0\n"), Err(SatError::Dimacs { .. })));
}

#[test]
fn assignments_parse() {
    assert_eq!(parse_assignment("TFFT", 4).unwrap().values, vec![true, false, false, true]);
    assert_eq!(parse_assignment("t,f", 2).unwrap().to_string(), "TF");
    assert_eq!(parse_assignment("TF", 3), Err(SatError::AssignmentLength { got: 2, n: 3 }));
    assert_eq!(parse_assignment("TX", 2), Err(SatError::AssignmentChar('X')));
}

#[test]
fn four_clause_formula() {
    let f = parse_dimacs(FOUR_CLAUSES).unwrap();
    let inst = build_3sat_workspace(&f);
    assert_eq!(inst.variable_gadgets(), 12);
    assert_eq!(inst.or_gadgets(), 4);
    assert_eq!(inst.and_inputs(), 4);
    inst.workspace.validate().unwrap();
    let run = |a: &str| {
        let a = parse_assignment(a, 4).unwrap();
        inst.reaches_target(&inst.workspace.apply_sequence(&assignment_to_sequence(&f, &a)))
    };
    assert!(run("TFFT"));
    assert!(!run("FTFT"));
    // exactly one particle reaches the target
    let end = inst.workspace.apply_sequence(&assignment_to_sequence(&f, &parse_assignment("TFFT", 4).unwrap()));
    assert!(end.goals_satisfied());
    assert_eq!(end.particles().iter().filter(|p| p.anchor == inst.target).count(), 1);
}

#[test]
fn layouts_are_locked() {
    for (name, text, fixture) in [
        ("four", FOUR_CLAUSES, include_str!("../fixtures/sat_four.twf")),
        ("contradiction", CONTRADICTION, include_str!("../fixtures/sat_contradiction.twf")),
    ] {
        let inst = build_3sat_workspace(&parse_dimacs(text).unwrap());
        assert_eq!(twf::serialize(&inst.workspace).unwrap(), fixture, "{name} layout changed");
    }
    let v = build_variable_gadget(2, 4).unwrap();
    assert_eq!(twf::serialize(&v.workspace).unwrap(), include_str!("../fixtures/var_2_of_4.twf"));
}

#[test]
fn smallest_formula() {
    let f = formula(1, &[[1, 1, 1]]);
    let inst = build_3sat_workspace(&f);
    assert_eq!((inst.variable_gadgets(), inst.or_gadgets(), inst.and_inputs()), (3, 1, 1));
    for (a, want) in [("T", true), ("F", false)] {
        let s = assignment_to_sequence(&f, &parse_assignment(a, 1).unwrap());
        assert_eq!(inst.reaches_target(&inst.workspace.apply_sequence(&s)), want, "{a}");
    }
}

fn random_formula(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<[i64; 3]> {
    (0..m)
        .map(|_| {
            [0; 3].map(|_| {
                let v = rng.gen_range(1..=n as i64);
                if rng.gen() {
                    v
                } else {
                    -v
                }
            })
        })
        .collect()
}

#[test]
fn structural_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let f = formula(n, &random_formula(&mut rng, n, m));
        let inst = build_3sat_workspace(&f);
        assert_eq!(inst.variable_gadgets(), 3 * m);
        assert_eq!(inst.or_gadgets(), m);
        assert_eq!(inst.and_inputs(), m);
        assert_eq!(inst.workspace.particles().len(), 3 * m);
        for i in 1..=n {
            let copies = inst.literals.iter().filter(|l| l.literal.var == i).count();
            assert_eq!(copies, f.occurrences(i));
        }
        inst.workspace.validate().unwrap();
    }
}

// Every clause as a multiset of literals over n variables.
fn all_clauses(n: i64) -> Vec<[i64; 3]> {
    let lits: Vec<i64> = (1..=n).flat_map(|v| [v, -v]).collect();
    let mut out = Vec::new();
    for a in 0..lits.len() {
        for b in a..lits.len() {
            for c in b..lits.len() {
                out.push([lits[a], lits[b], lits[c]]);
            }
        }
    }
    out
}

#[test]
fn exhaustive_sweep_small_formulas() {
    let mut checked = 0;
    for n in 1..=3usize {
        let clauses = all_clauses(n as i64);
        let mut formulas: Vec<Vec<[i64; 3]>> = clauses.iter().map(|c| vec![*c]).collect();
        for (i, a) in clauses.iter().enumerate() {
            for b in &clauses[i..] {
                formulas.push(vec![*a, *b]);
            }
        }
        for cl in &formulas {
            let f = formula(n, cl);
            let inst = build_3sat_workspace(&f);
            for bits in 0..1u64 << n {
                let a = Assignment::from_bits(n, bits);
                let end = inst.workspace.apply_sequence(&assignment_to_sequence(&f, &a));
                assert_eq!(inst.reaches_target(&end), cnf_truth(cl, bits), "{f} under {a}");
                checked += 1;
            }
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn contradiction_is_unsolvable_by_any_sequence() {
    let f = parse_dimacs(CONTRADICTION).unwrap();
    let inst = build_3sat_workspace(&f);
    let r = bfs_shortest_sequence(&inst.workspace, &GoalSpec::from_workspace(&inst.workspace), DEFAULT_CAP).unwrap();
    assert_eq!(r.status, Status::Unsolvable);
    let all = reachable_configs(&inst.workspace, DEFAULT_CAP);
    assert!(all.complete);
    assert_eq!(all.configs.len(), r.explored);
    for c in &all.configs {
        assert!(c.entries.iter().all(|e| e.anchor != inst.target));
    }
}

// Once a particle rests in a pocket after a sideways move, nothing brings
// it back.
#[test]
fn waste_is_final() {
    for text in [CONTRADICTION, "p cnf 1 1\n1 1 1 0\n", "p cnf 2 1\n1 -2 2 0\n"] {
        let f = parse_dimacs(text).unwrap();
        let inst = build_3sat_workspace(&f);
        for bits in 0..1u64 << f.n {
            let a = Assignment::from_bits(f.n, bits);
            let end = inst.workspace.apply_sequence(&assignment_to_sequence(&f, &a));
            let wasted: Vec<String> = end
                .particles()
                .iter()
                .filter(|p| inst.waste.contains(&p.anchor))
                .map(|p| p.id.clone())
                .collect();
            assert!(!wasted.is_empty());
            let all = reachable_configs(&end, 1_000_000);
            assert!(all.complete);
            for c in &all.configs {
                for e in c.entries.iter().filter(|e| wasted.contains(&e.id)) {
                    assert!(inst.waste.contains(&e.anchor), "{} left the pocket in {f}", e.id);
                }
            }
        }
    }
}

#[test]
fn or_gadget_subsets() {
    let g = build_or_gadget();
    for mask in 0..8u32 {
        let on: Vec<bool> = (0..3).map(|k| mask >> k & 1 == 1).collect();
        let w = g.with_inputs(&on);
        let end = w.apply_sequence(&LOGIC_PHASE);
        assert_eq!(end.is_occupied(g.output), mask != 0, "inputs {mask:03b}");
        let wasted = end.particles().iter().filter(|p| g.waste.contains(&p.anchor)).count();
        assert_eq!(wasted, (mask.count_ones() as usize).saturating_sub(1));
        // injected commands never bring a second particle out
        let all = reachable_configs(&end, 100_000);
        assert!(all.complete);
        for c in &all.configs {
            let loose = c.entries.iter().filter(|e| !g.waste.contains(&e.anchor)).count();
            assert!(loose <= 1, "inputs {mask:03b}");
        }
    }
}

#[test]
fn and_gadget_counts() {
    let g = build_and_gadget(3).unwrap();
    for mask in 0..8u32 {
        let on: Vec<bool> = (0..3).map(|k| mask >> k & 1 == 1).collect();
        let end = g.with_inputs(&on).apply_sequence(&LOGIC_PHASE);
        assert_eq!(end.is_occupied(g.output), mask == 7, "inputs {mask:03b}");
    }
    let g5 = build_and_gadget(5).unwrap();
    assert!(g5.with_inputs(&[true; 5]).apply_sequence(&LOGIC_PHASE).goals_satisfied());
    for skip in 0..5 {
        let on: Vec<bool> = (0..5).map(|k| k != skip).collect();
        assert!(!g5.with_inputs(&on).apply_sequence(&LOGIC_PHASE).goals_satisfied());
    }
    assert!(build_and_gadget(1).unwrap().with_inputs(&[true]).apply_sequence(&LOGIC_PHASE).goals_satisfied());
    assert_eq!(build_and_gadget(0), Err(SatError::NoInputs));
}

#[test]
fn variable_gadget_lanes() {
    for bits in 0..8u64 {
        let a = Assignment::from_bits(3, bits);
        let s = variable_sequence(&a.values);
        for i in 1..=3 {
            let g = build_variable_gadget(i, 3).unwrap();
            let end = g.workspace.apply_sequence(&s);
            assert_eq!(g.exit_of(particle_cell(&end)), Some(a.values[i - 1]), "x{i} under {a}");
        }
    }
    let g = build_variable_gadget(2, 4).unwrap();
    let end = g.workspace.apply_sequence(&moves("dldrdldrdrd"));
    assert_eq!(g.exit_of(particle_cell(&end)), Some(false));
    let g = build_variable_gadget(1, 1).unwrap();
    let end = g.workspace.apply_sequence(&moves("dldr"));
    assert_eq!(particle_cell(&end), g.true_out);
    assert!(matches!(build_variable_gadget(0, 2), Err(SatError::Index { .. })));
    assert!(matches!(build_variable_gadget(3, 2), Err(SatError::Index { .. })));
}

#[test]
fn outputs_fill_together() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=2);
        let f = formula(n, &random_formula(&mut rng, n, m));
        let inst = build_3sat_workspace(&f);
        let a = Assignment::from_bits(n, rng.gen());
        let s = assignment_to_sequence(&f, &a);
        let k = inst.variable_phase_len();
        let on_out = |w: &Workspace| {
            inst.literals
                .iter()
                .filter(|l| {
                    let at = w.particle(&l.particle).unwrap().anchor;
                    at == l.used_out || at == l.unused_out
                })
                .count()
        };
        for j in 0..k {
            assert_eq!(on_out(&inst.workspace.apply_sequence(&s[..j])), 0);
        }
        assert_eq!(on_out(&inst.workspace.apply_sequence(&s[..k])), inst.literals.len());
    }
}

#[test]
fn canonical_forms() {
    assert_eq!(canonicalize_sequence(&moves("dd")), moves("d"));
    assert_eq!(canonicalize_sequence(&moves("du")), vec![]);
    assert_eq!(canonicalize_sequence(&moves("ldrld")), moves("dld"));
    assert_eq!(canonicalize_sequence(&moves("u")), vec![]);
    assert_eq!(canonicalize_sequence(&moves("rlrd")), moves("d"));
    assert_eq!(canonicalize_sequence(&moves("ddudl")), moves("dl"));
    let g = build_variable_gadget(2, 3).unwrap();
    let a = g.workspace.apply_sequence(&moves("ldrld"));
    let b = g.workspace.apply_sequence(&moves("dld"));
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn canonical_is_a_fixpoint(raw in "[udlr]{0,24}") {
        let c = canonicalize_sequence(&moves(&raw));
        prop_assert_eq!(canonicalize_sequence(&c), c.clone());
        prop_assert!(!c.contains(&Move::Up));
        prop_assert!(c.first().is_none_or(|m| *m == Move::Down));
        prop_assert!(c.windows(2).all(|p| p[0] != p[1] && (p[0].is_vertical() || p[1].is_vertical())));
    }

    // Without u the rewrites are exact on a lone variable gadget.
    #[test]
    fn canonical_is_equivalent_without_up(raw in "[dlr]{0,16}", i in 1usize..=3) {
        let g = build_variable_gadget(i, 3).unwrap();
        let s = moves(&raw);
        prop_assert_eq!(
            particle_cell(&g.workspace.apply_sequence(&s)),
            particle_cell(&g.workspace.apply_sequence(&canonicalize_sequence(&s)))
        );
    }
}
