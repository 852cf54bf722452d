use proptest::prelude::*;
use tilt_core::gates::{
    self, evaluate_gadget, evaluate_with_state, fanout_gate, interconnect, memory_latch, not_gate, universal_gate,
    xor_gate, Gadget, GateError,
};
use tilt_core::{Cell, Move, Particle, Shape, Workspace, CLOCK};

fn named(g: &Gadget, bits: &[bool]) -> Vec<(String, bool)> {
    g.outputs().map(|p| p.name.clone()).zip(bits.iter().copied()).collect()
}

fn out(g: &Gadget, bits: &[bool], name: &str) -> bool {
    named(g, bits).into_iter().find(|(n, _)| n == name).map(|(_, b)| b).unwrap()
}

/// Rails in input-port order for the dual-rail gadgets with inputs A,~A,B,~B.
fn rails2(a: bool, b: bool) -> Vec<bool> {
    vec![a, !a, b, !b]
}

#[test]
fn not_swaps_rails() {
    let g = not_gate();
    assert_eq!(g.truth_table.rows.len(), 2);
    for a in [false, true] {
        let o = evaluate_gadget(&g, &[a, !a]).unwrap();
        assert_eq!(out(&g, &o, "A"), !a);
        assert_eq!(out(&g, &o, "~A"), a);
        // feed the output rails back in
        let again = evaluate_gadget(&g, &[out(&g, &o, "A"), out(&g, &o, "~A")]).unwrap();
        assert_eq!(out(&g, &again, "A"), a);
    }
}

#[test]
fn universal_rows() {
    let g = universal_gate();
    assert_eq!(g.truth_table.rows.len(), 4);
    for a in [false, true] {
        for b in [false, true] {
            let o = evaluate_gadget(&g, &rails2(a, b)).unwrap();
            assert_eq!(out(&g, &o, "AND"), a && b, "{a} {b}");
            assert_eq!(out(&g, &o, "NAND"), !(a && b));
            assert_eq!(out(&g, &o, "OR"), a || b);
            assert_eq!(out(&g, &o, "NOR"), !(a || b));
        }
    }
    let o = evaluate_gadget(&g, &rails2(true, false)).unwrap();
    assert_eq!(
        (out(&g, &o, "AND"), out(&g, &o, "NAND"), out(&g, &o, "OR"), out(&g, &o, "NOR")),
        (false, true, true, false)
    );
}

#[test]
fn xor_rows_and_constants() {
    let g = xor_gate();
    assert_eq!(g.truth_table.rows.len(), 4);
    for a in [false, true] {
        for b in [false, true] {
            let o = evaluate_gadget(&g, &rails2(a, b)).unwrap();
            assert_eq!(out(&g, &o, "XOR"), a ^ b);
            assert_eq!(out(&g, &o, "XNOR"), !(a ^ b));
            assert!(out(&g, &o, "ONE"));
            assert!(!out(&g, &o, "ZERO"));
        }
    }
}

#[test]
fn fanout_copies() {
    for n in 2..=gates::FANOUT_MAX {
        let g = fanout_gate(n).unwrap();
        assert_eq!(g.output_count(), 2 * n);
        assert_eq!(g.truth_table.rows.len(), 2);
        for a in [false, true] {
            let o = evaluate_gadget(&g, &[a, !a]).unwrap();
            for (name, bit) in named(&g, &o) {
                let want = if name.starts_with('~') { !a } else { a };
                assert_eq!(bit, want, "fanout{n} {name} with A={a}");
            }
        }
        let (w, h) = g.size();
        assert!(w <= 4 * n + 7 && h <= 2 * n + 4, "fanout{n} is {w}x{h}");
        let units = g.template.particles().iter().filter(|p| p.shape == Shape::Unit).count();
        assert_eq!(units, n - 1, "supply particles");
    }
    assert_eq!(fanout_gate(2).unwrap().size(), (15, 8));
    assert!(matches!(fanout_gate(1), Err(GateError::FanoutTooSmall(1))));
    assert!(matches!(fanout_gate(9), Err(GateError::FanoutUnavailable(9))));
}

#[test]
fn latch_rows() {
    let g = memory_latch();
    assert!(g.size().0 <= 16 && g.size().1 <= 8);
    assert_eq!(g.truth_table.rows.len(), 6);
    // (q, op) -> q'
    for q in [false, true] {
        for (op, bits) in [("set", [true, false, false]), ("clear", [false, true, false]), ("read", [false, false, true])] {
            let want = match op {
                "set" => true,
                "clear" => false,
                _ => q,
            };
            let e = evaluate_with_state(&g, &bits, Some(q)).unwrap();
            assert_eq!(e.state, Some(want), "q={q} {op}");
            assert_eq!(e.outputs, vec![want, !want], "q={q} {op}");
        }
    }
    let s = g.state.as_ref().unwrap();
    assert!(s.on.y < s.off.y, "the slider rests low for true");
}

#[test]
fn latch_state_settles_after_clear() {
    // clearing moves the slider through a side lane; one more cycle puts
    // it back at the false rest
    let g = memory_latch();
    let e = evaluate_with_state(&g, &[false, true, false], Some(true)).unwrap();
    let mut w = e.after.clone();
    for id in ["in0", "in1", "in2"] {
        w.remove_particle(id);
    }
    let w = w.apply_sequence(&CLOCK);
    assert_eq!(g.read_state(&w), Some(false));
    assert_eq!(w.particle("Z").unwrap().anchor, g.state.as_ref().unwrap().off);
}

#[test]
fn tables_match_simulation() {
    for g in gates::catalog() {
        let states: Vec<Option<bool>> = if g.is_stateful() { vec![Some(false), Some(true)] } else { vec![None] };
        let mut seen = 0;
        for q in states {
            for bits in g.legal_inputs() {
                let row = g.truth_table.lookup(&bits, q).unwrap_or_else(|| panic!("{}: no row for {bits:?}", g.name));
                let e = evaluate_with_state(&g, &bits, q).unwrap();
                assert_eq!(e.outputs, row.outputs, "{} {bits:?}", g.name);
                assert_eq!(e.state, row.state.map(|s| s.1), "{} {bits:?}", g.name);
                seen += 1;
            }
        }
        assert_eq!(seen, g.truth_table.rows.len(), "{}", g.name);
        assert!(seen <= 8);
    }
}

#[test]
fn conservation() {
    for g in gates::catalog() {
        let q = g.is_stateful().then_some(true);
        for bits in g.legal_inputs() {
            let w = g.load(&bits, q).unwrap();
            let after = w.apply_sequence(&g.clock);
            let ids = |w: &Workspace| w.particles().iter().map(|p| (p.id.clone(), p.shape)).collect::<Vec<_>>();
            assert_eq!(ids(&w), ids(&after), "{}", g.name);
        }
    }
}

#[test]
fn every_gadget_runs_the_clock() {
    for g in gates::catalog() {
        assert_eq!(g.clock, [Move::Down, Move::Left, Move::Up, Move::Right], "{}", g.name);
    }
}

#[test]
fn idle_gadgets_do_not_move() {
    for g in gates::catalog() {
        if let Some(s) = &g.state {
            for q in [false, true] {
                let mut t = g.template.clone();
                let mut z = t.remove_particle(&s.particle).unwrap();
                z.anchor = if q { s.on } else { s.off };
                t.add_particle(z).unwrap();
                assert_eq!(t.apply_sequence(&CLOCK), t, "{} idle at {q}", g.name);
            }
        } else {
            // supplies leave the fan-out, so only the slider must return
            let after = g.template.apply_sequence(&CLOCK);
            for p in g.template.particles().iter().filter(|p| p.shape != Shape::Unit) {
                assert_eq!(after.particle(&p.id).unwrap().anchor, p.anchor, "{} slider", g.name);
            }
        }
    }
}

#[test]
fn outputs_have_clear_exit_columns() {
    for g in gates::catalog() {
        for p in g.outputs() {
            if g.name == "xor" && p.name == "ZERO" {
                continue;
            }
            for y in 1..p.cell.y {
                assert!(!g.template.is_obstacle(Cell::new(p.cell.x, y)), "{} {} exit blocked at {y}", g.name, p.name);
            }
        }
        for p in g.inputs() {
            assert_eq!(p.cell.y, g.size().1 as i32 - 2, "{} {} is not on the top row", g.name, p.name);
        }
    }
}

#[test]
fn waste_is_disjoint_from_ports() {
    for g in gates::catalog() {
        for c in &g.waste {
            assert!(g.ports.iter().all(|p| p.cell != *c), "{}", g.name);
        }
    }
}

#[test]
fn no_unit_only_fanout_in_catalog() {
    let fanouts: Vec<Gadget> = gates::catalog().into_iter().filter(|g| g.name.starts_with("fanout")).collect();
    assert_eq!(fanouts.len(), gates::FANOUT_MAX - 1);
    for g in fanouts {
        assert!(g.has_slider(), "{} has only unit particles", g.name);
    }
}

#[test]
fn illegal_rails_rejected() {
    let g = universal_gate();
    assert!(matches!(evaluate_gadget(&g, &[true, true, true, false]), Err(GateError::IllegalRails { .. })));
    assert!(matches!(evaluate_gadget(&g, &[false, false, true, false]), Err(GateError::IllegalRails { .. })));
    assert!(matches!(evaluate_gadget(&g, &[true, false]), Err(GateError::Arity { .. })));
    let m = memory_latch();
    assert!(matches!(evaluate_with_state(&m, &[true, true, false], Some(false)), Err(GateError::IllegalRails { .. })));
    assert!(matches!(evaluate_with_state(&m, &[false, false, false], Some(false)), Err(GateError::IllegalRails { .. })));
    assert!(matches!(evaluate_with_state(&m, &[true, false, false], None), Err(GateError::MissingState(_))));
    assert!(matches!(gates::gadget("nope"), Err(GateError::Unknown(_))));
}

fn deliver(offset: i32) -> Workspace {
    let ic = interconnect(offset).unwrap();
    let mut w = ic.workspace.clone();
    w.add_particle(Particle::unit("a", 'a', ic.source)).unwrap();
    let after = w.apply_sequence(&CLOCK);
    assert_eq!(after.particle("a").unwrap().anchor, ic.dest, "offset {offset}");
    after
}

#[test]
fn interconnect_offsets() {
    // straight down parks the particle; it stays put on later cycles
    let parked = deliver(0);
    assert_eq!(parked.apply_sequence(&CLOCK), parked);
    let ic = interconnect(0).unwrap();
    assert_eq!(ic.dest.x, ic.source.x);
    assert!(ic.dest.y < ic.source.y);
    deliver(1);
    deliver(-3);
    for k in -8..=8 {
        if k != -1 {
            let ic = interconnect(k).unwrap();
            assert_eq!(ic.dest.x - ic.source.x, k);
            deliver(k);
        }
    }
    assert!(matches!(interconnect(-1), Err(GateError::Unroutable(-1))));
}

// Random bounded workspaces with unit particles only.
fn arb_world() -> impl Strategy<Value = (Workspace, Vec<Move>)> {
    (3usize..9, 3usize..9, any::<u64>(), prop::collection::vec(0usize..4, 1..12)).prop_map(|(w, h, seed, ms)| {
        let mut ws = Workspace::new(w + 2, h + 2);
        let mut s = seed;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s
        };
        let mut placed = 0;
        for y in 1..=h as i32 {
            for x in 1..=w as i32 {
                match next() % 10 {
                    0 | 1 => ws.set_obstacle(Cell::new(x, y)),
                    2 if placed < 5 => {
                        ws.add_particle(Particle::unit(format!("p{placed}"), (b'a' + placed) as char, Cell::new(x, y)))
                            .unwrap();
                        placed += 1;
                    }
                    _ => {}
                }
            }
        }
        if placed == 0 {
            ws.clear_obstacle(Cell::new(1, 1));
            ws.add_particle(Particle::unit("p0", 'a', Cell::new(1, 1))).unwrap();
        }
        (ws, ms.into_iter().map(|i| Move::ALL[i]).collect())
    })
}

fn free_cells(w: &Workspace) -> Vec<Cell> {
    let mut v = Vec::new();
    for y in 0..w.height() as i32 {
        for x in 0..w.width() as i32 {
            let c = Cell::new(x, y);
            if !w.is_obstacle(c) && !w.is_occupied(c) {
                v.push(c);
            }
        }
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    // an extra particle cannot keep a reached cell empty
    #[test]
    fn added_particle_cannot_block_a_goal((w, seq) in arb_world(), pick in any::<prop::sample::Index>(), at in any::<prop::sample::Index>()) {
        let p = &w.particles()[pick.index(w.particles().len())];
        let g = w.apply_sequence(&seq).particle(&p.id).unwrap().anchor;
        let free = free_cells(&w);
        prop_assume!(!free.is_empty());
        let mut w2 = w.clone();
        w2.add_particle(Particle::unit("zz", 'z', free[at.index(free.len())])).unwrap();
        prop_assert!(w2.apply_sequence(&seq).is_occupied(g));
    }

    // removing one of two particles leaves one of their targets filled
    #[test]
    fn removed_particle_leaves_a_goal((w, seq) in arb_world(), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>(), which in any::<bool>()) {
        let ps = w.particles();
        prop_assume!(ps.len() >= 2);
        let a = ps[i.index(ps.len())].id.clone();
        let b = ps[j.index(ps.len())].id.clone();
        prop_assume!(a != b);
        let end = w.apply_sequence(&seq);
        let (g1, g2) = (end.particle(&a).unwrap().anchor, end.particle(&b).unwrap().anchor);
        let mut w2 = w.clone();
        w2.remove_particle(if which { &a } else { &b });
        let end2 = w2.apply_sequence(&seq);
        prop_assert!(end2.is_occupied(g1) || end2.is_occupied(g2));
    }
}
