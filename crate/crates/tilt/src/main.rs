use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tilt_core::circuit::{self, PlacedCircuit};
use tilt_core::permute::{
    build_permutation_workspace, build_selector_workspace, build_two_perm_workspace, decompose_two_generators,
    GeneratorWord, MatrixSpec, MatrixWorkspace, Permutation, CLOCKWISE, COUNTERCLOCKWISE,
};
use tilt_core::reductions::{assignment_to_sequence, build_3sat_workspace, parse_assignment, parse_dimacs};
use tilt_core::solver::{bfs_shortest_sequence, GoalSpec, Status, DEFAULT_CAP};
use tilt_core::{format_moves, gates, parse_moves, twf, Cell, Goal, Move, Who, Workspace};

use tilt::{check, load_workspace, placed, serialize_workspace, server, svg, Format};

#[derive(Parser)]
#[command(name = "tilt", version, about = "Full-tilt particle puzzles: simulate, solve, generate and compile")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply a move sequence and report the goals.
    Sim {
        file: PathBuf,
        /// Moves such as "r,d,l" or "rdl".
        #[arg(long)]
        moves: String,
        #[arg(long, value_enum, default_value_t = Out::Ascii)]
        format: Out,
        /// Write the final workspace here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Shortest move sequence reaching the goals, by breadth-first search.
    Solve {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        max_states: usize,
        /// Extra goal, "<id|*>:x,y". Replaces the file's goals when given.
        #[arg(long = "goal")]
        goals: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Synthesize workspaces.
    #[command(subcommand)]
    Gen(Gen),
    /// The gadget catalog.
    #[command(subcommand)]
    Gadgets(Gadgets),
    /// Compile a netlist (or a counter) to a placed circuit.
    Compile {
        /// Netlist file; omit with --counter.
        netlist: Option<PathBuf>,
        #[arg(long)]
        auto_fanout: bool,
        /// Build an n-bit counter instead of reading a netlist.
        #[arg(long, conflicts_with = "netlist")]
        counter: Option<usize>,
        /// Placed circuit JSON; a summary goes to stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Evaluate a placed circuit by clocking it.
    Run {
        circuit: PathBuf,
        /// Input bits, "a=1,b=0".
        #[arg(long, default_value = "")]
        inputs: String,
        #[arg(long, default_value_t = 1)]
        evaluations: usize,
    },
    /// Draw a workspace.
    Render {
        file: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Local HTTP stepping service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Out {
    Ascii,
    Twf,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum WsFormat {
    /// TWF when every particle has a glyph id, JSON otherwise.
    Auto,
    Twf,
    Json,
}

#[derive(Args)]
struct Emit {
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = WsFormat::Auto)]
    format: WsFormat,
}

#[derive(Args)]
struct Shape {
    /// Source rows; defaults to the largest divisor of N not above its root.
    #[arg(long)]
    rows: Option<usize>,
    /// Target rows, for reshaping; defaults to the source shape.
    #[arg(long)]
    target_rows: Option<usize>,
}

#[derive(Subcommand)]
enum Gen {
    /// Four-move workspace that applies one permutation.
    Permute {
        /// Image list such as "[2,0,1]" or "2 0 1".
        #[arg(long, required_unless_present = "random")]
        perm: Option<String>,
        /// Random permutation of this size.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        emit: Emit,
    },
    /// Workspace that applies one of several permutations, chosen by the moves.
    Selector {
        /// Repeat once per permutation.
        #[arg(long = "perm")]
        perms: Vec<String>,
        /// Number of random permutations of size --n.
        #[arg(long, requires = "n")]
        random: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        emit: Emit,
    },
    /// Workspace where the clockwise cycle applies one permutation and the
    /// counterclockwise cycle another.
    TwoPerm {
        /// Clockwise permutation; defaults to swapping elements 0 and 1.
        #[arg(long)]
        cw: Option<String>,
        /// Counterclockwise permutation; defaults to the rotation.
        #[arg(long)]
        ccw: Option<String>,
        /// Size for the defaults.
        #[arg(long)]
        n: Option<usize>,
        /// Permutation to spell in the default generators; prints its moves.
        #[arg(long)]
        target: Option<String>,
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        emit: Emit,
    },
    /// Workspace whose target is reachable iff the formula is satisfiable.
    #[command(name = "3sat")]
    Sat {
        dimacs: PathBuf,
        /// Print the moves for this assignment, "TFFT".
        #[arg(long)]
        assignment: Option<String>,
        #[command(flatten)]
        emit: Emit,
    },
}

#[derive(Subcommand)]
enum Gadgets {
    List,
    /// Verify the full truth table and the size limit.
    Check { name: String },
    Show { name: String },
}

/// A failure after the arguments parsed.
struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

type Res = Result<(), Fail>;

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Res {
    std::fs::write(path, text).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Workspace, Fail> {
    load_workspace(&read(path)?).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn parse_perm(text: &str) -> Result<Permutation, Fail> {
    let map: Vec<usize> = text
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| Fail(format!("bad permutation entry {t:?}"))))
        .collect::<Result<_, _>>()?;
    Ok(Permutation::new(map)?)
}

fn random_perm(n: usize, rng: &mut ChaCha8Rng) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Permutation::new(v).expect("shuffle is a bijection")
}

fn perm_json(p: &Permutation) -> String {
    serde_json::to_string(p.as_slice()).expect("plain data")
}

fn matrix_spec(n: usize, s: &Shape) -> Result<MatrixSpec, Fail> {
    let rows = s.rows.unwrap_or_else(|| (1..=n).filter(|r| n.is_multiple_of(*r) && r * r <= n).max().unwrap_or(1));
    if rows == 0 || !n.is_multiple_of(rows) {
        return Err(Fail(format!("{rows} rows do not divide {n} elements")));
    }
    let b_r = s.target_rows.unwrap_or(rows);
    if b_r == 0 || !n.is_multiple_of(b_r) {
        return Err(Fail(format!("{b_r} target rows do not divide {n} elements")));
    }
    Ok(MatrixSpec::new(rows, n / rows, b_r, n / b_r)?)
}

fn emit(w: &Workspace, e: &Emit) -> Res {
    let text = match e.format {
        WsFormat::Json => serialize_workspace(w, Format::Json)?,
        WsFormat::Twf => serialize_workspace(w, Format::Twf)?,
        WsFormat::Auto => twf::serialize(w).unwrap_or_else(|_| tilt::json::serialize(w)),
    };
    match &e.out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn describe(m: &MatrixWorkspace) {
    eprintln!(
        "{}x{} workspace, {} constructed obstacles, bounding box {}x{}",
        m.workspace.width(),
        m.workspace.height(),
        m.constructed,
        m.bbox.0,
        m.bbox.1
    );
}

fn goal_report(w: &Workspace) -> String {
    let met = w.goals().iter().filter(|g| w.goal_met(g)).count();
    match w.goals().len() {
        0 => "no goals".into(),
        n if met == n => format!("goals satisfied ({met}/{n})"),
        n => format!("goals not satisfied ({met}/{n})"),
    }
}

fn parse_goal(text: &str) -> Result<Goal, Fail> {
    let bad = || Fail(format!("bad goal {text:?}, expected <id|*>:x,y"));
    let (who, at) = text.split_once(':').ok_or_else(bad)?;
    let (x, y) = at.split_once(',').ok_or_else(bad)?;
    let cell = Cell::new(x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?);
    let who = if who == "*" { Who::Any } else { Who::Id(who.to_string()) };
    Ok(Goal { who, cell })
}

fn parse_bits(text: &str) -> Result<BTreeMap<String, bool>, Fail> {
    let mut m = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Fail(format!("bad input {part:?}, expected name=0|1")))?;
        let bit = match v.trim() {
            "1" | "T" | "t" | "true" => true,
            "0" | "F" | "f" | "false" => false,
            _ => return Err(Fail(format!("bad bit {v:?} for {k}"))),
        };
        m.insert(k.trim().to_string(), bit);
    }
    Ok(m)
}

fn bits_line(m: &BTreeMap<String, bool>) -> String {
    m.iter().map(|(k, v)| format!("{k}={}", u8::from(*v))).collect::<Vec<_>>().join(" ")
}

fn summary(c: &PlacedCircuit) -> String {
    let inv = c.inventory.iter().map(|(k, v)| format!("{k}×{v}")).collect::<Vec<_>>().join(", ");
    let internal = c.workspace.particles().len();
    format!(
        "{}x{} workspace, {} stages, {} cycles ({} moves) per evaluation, {} internal particles\ngadgets: {inv}",
        c.workspace.width(),
        c.workspace.height(),
        c.stage_count,
        c.cycles_per_evaluation,
        c.moves_per_evaluation(),
        internal
    )
}

fn sim(file: &Path, moves: &str, format: Out, out: Option<&Path>) -> Res {
    let w = load(file)?;
    let seq = parse_moves(moves)?;
    let end = w.apply_sequence(&seq);
    let text = match format {
        Out::Ascii => twf::render_ascii(&end),
        Out::Twf => serialize_workspace(&end, Format::Twf)?,
        Out::Json => serialize_workspace(&end, Format::Json)? + "\n",
    };
    match out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    println!("after {} moves: {}", seq.len(), goal_report(&end));
    Ok(())
}

fn solve(file: &Path, cap: usize, goals: &[String], json: bool) -> Res {
    let w = load(file)?;
    let goal = if goals.is_empty() {
        GoalSpec::from_workspace(&w)
    } else {
        GoalSpec::Goals(goals.iter().map(|g| parse_goal(g)).collect::<Result<_, _>>()?)
    };
    if matches!(&goal, GoalSpec::Goals(g) if g.is_empty()) {
        return Err(Fail("no goals: add a GOALS section or --goal".into()));
    }
    let r = bfs_shortest_sequence(&w, &goal, cap)?;
    if json {
        let status = match r.status {
            Status::Solved => "solved",
            Status::Unsolvable => "unsolvable",
            Status::BudgetExhausted => "budget_exhausted",
        };
        let v = serde_json::json!({
            "status": status,
            "sequence": r.sequence.as_ref().map(|s| format_moves(s)),
            "length": r.sequence.as_ref().map(Vec::len),
            "explored": r.explored,
        });
        println!("{v}");
    } else {
        match (&r.status, &r.sequence) {
            (Status::Solved, Some(s)) => {
                let plural = if s.len() == 1 { "" } else { "s" };
                println!("solved in {} move{plural}: {}", s.len(), format_moves(s));
                println!("explored {} configurations", r.explored);
            }
            (Status::Unsolvable, _) => {
                println!("unsolvable (exhaustive)");
                println!("explored {} configurations", r.explored);
            }
            _ => {}
        }
    }
    if r.status == Status::BudgetExhausted {
        return Err(Fail(format!("undecided: budget of {cap} configurations exhausted")));
    }
    Ok(())
}

fn gen(g: Gen) -> Res {
    match g {
        Gen::Permute { perm, random, seed, shape, emit: e } => {
            let pi = match (perm, random) {
                (Some(p), _) => parse_perm(&p)?,
                (None, Some(n)) => random_perm(n, &mut ChaCha8Rng::seed_from_u64(seed)),
                (None, None) => unreachable!("clap requires one"),
            };
            let (m, seq) = build_permutation_workspace(matrix_spec(pi.len(), &shape)?, &pi)?;
            eprintln!("permutation {}", perm_json(&pi));
            describe(&m);
            eprintln!("moves: {}", format_moves(&seq));
            emit(&m.workspace, &e)
        }
        Gen::Selector { perms, random, n, seed, shape, emit: e } => {
            let mut list: Vec<Permutation> = perms.iter().map(|p| parse_perm(p)).collect::<Result<_, _>>()?;
            if let (Some(k), Some(n)) = (random, n) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                list.extend((0..k).map(|_| random_perm(n, &mut rng)));
            }
            let size = list.first().map(Permutation::len).ok_or_else(|| Fail("give --perm or --random".into()))?;
            let sel = build_selector_workspace(&list, matrix_spec(size, &shape)?)?;
            describe(&sel.matrix);
            for (p, s) in list.iter().zip(&sel.sequences) {
                eprintln!("{} via {}", perm_json(p), format_moves(s));
            }
            emit(&sel.matrix.workspace, &e)
        }
        Gen::TwoPerm { cw, ccw, n, target, shape, emit: e } => {
            let size = match (&cw, &ccw, n) {
                (_, _, Some(n)) => n,
                (Some(p), _, _) | (None, Some(p), _) => parse_perm(p)?.len(),
                _ => return Err(Fail("give --n or a permutation".into())),
            };
            if size < 2 {
                return Err(Fail("two-perm needs at least 2 elements".into()));
            }
            let p = cw.as_deref().map(parse_perm).transpose()?.unwrap_or_else(|| Permutation::transposition(size, 0, 1));
            let q = ccw.as_deref().map(parse_perm).transpose()?.unwrap_or_else(|| Permutation::rotation(size));
            let m = build_two_perm_workspace(&p, &q, matrix_spec(size, &shape)?)?;
            eprintln!("clockwise {} counterclockwise {}", perm_json(&p), perm_json(&q));
            describe(&m);
            if let Some(t) = target {
                if cw.is_some() || ccw.is_some() {
                    return Err(Fail("--target spells words in the default generators only".into()));
                }
                let word: GeneratorWord = decompose_two_generators(&parse_perm(&t)?);
                let mut seq: Vec<Move> = Vec::new();
                for g in &word.letters {
                    let four = if *g == tilt_core::permute::Generator::Q { &COUNTERCLOCKWISE } else { &CLOCKWISE };
                    seq.extend_from_slice(four);
                }
                eprintln!("word ({} letters): {word}", word.len());
                eprintln!("moves: {}", format_moves(&seq));
            }
            emit(&m.workspace, &e)
        }
        Gen::Sat { dimacs, assignment, emit: e } => {
            let f = parse_dimacs(&read(&dimacs)?)?;
            let inst = build_3sat_workspace(&f);
            eprintln!("formula {f}");
            eprintln!(
                "{}x{} workspace, {} variable gadgets, {} clause gadgets",
                inst.workspace.width(),
                inst.workspace.height(),
                inst.variable_gadgets(),
                inst.or_gadgets()
            );
            if let Some(a) = assignment {
                let a = parse_assignment(&a, f.n)?;
                let seq = assignment_to_sequence(&f, &a);
                let hit = inst.reaches_target(&inst.workspace.apply_sequence(&seq));
                eprintln!("assignment {a}: {} ({})", if hit { "reaches target" } else { "misses target" }, format_moves(&seq));
            }
            emit(&inst.workspace, &e)
        }
    }
}

fn gadgets(g: Gadgets) -> Res {
    match g {
        Gadgets::List => {
            for g in gates::catalog() {
                let (w, h) = g.size();
                let inputs: Vec<&str> = g.inputs().map(|p| p.name.as_str()).collect();
                let outputs: Vec<&str> = g.outputs().map(|p| p.name.as_str()).collect();
                println!(
                    "{:<10} {:>2}×{:<2} in: {}  out: {}  rows: {}",
                    g.name,
                    w,
                    h,
                    inputs.join(" "),
                    outputs.join(" "),
                    g.truth_table.rows.len()
                );
            }
            Ok(())
        }
        Gadgets::Check { name } => {
            let c = check::check_gadget(&gates::gadget(&name)?);
            for f in &c.failures {
                eprintln!("{f}");
            }
            println!("{c}");
            if c.ok() {
                Ok(())
            } else {
                Err(Fail(format!("{name} failed verification")))
            }
        }
        Gadgets::Show { name } => {
            let g = gates::gadget(&name)?;
            print!("{}", twf::render_ascii(&g.template));
            println!("clock: {}", format_moves(&g.clock));
            for p in &g.ports {
                let dir = if p.direction == gates::Direction::Input { "in " } else { "out" };
                println!("{dir} {:<5} ({},{})", p.name, p.cell.x, p.cell.y);
            }
            let ins: Vec<&str> = g.inputs().map(|p| p.name.as_str()).collect();
            let outs: Vec<&str> = g.outputs().map(|p| p.name.as_str()).collect();
            let state = if g.is_stateful() { " | q q'" } else { "" };
            println!("{} | {}{state}", ins.join(" "), outs.join(" "));
            let bits = |v: &[bool]| v.iter().map(|b| if *b { "1" } else { "0" }).collect::<Vec<_>>().join(" ");
            for r in &g.truth_table.rows {
                let q = r.state.map(|(a, b)| format!(" | {} {}", u8::from(a), u8::from(b))).unwrap_or_default();
                println!("{} | {}{q}", bits(&r.inputs), bits(&r.outputs));
            }
            Ok(())
        }
    }
}

fn compile(netlist: Option<&Path>, auto: bool, counter: Option<usize>, out: Option<&Path>) -> Res {
    let c = match (netlist, counter) {
        (_, Some(n)) => circuit::build_counter(n)?,
        (Some(p), None) => circuit::compile(&read(p)?, auto)?,
        (None, None) => return Err(Fail("give a netlist file or --counter".into())),
    };
    match out {
        Some(p) => {
            write(p, &placed::serialize(&c))?;
            println!("{}", summary(&c));
        }
        None => {
            println!("{}", placed::serialize(&c));
            eprintln!("{}", summary(&c));
        }
    }
    Ok(())
}

fn run(path: &Path, inputs: &str, evaluations: usize) -> Res {
    let c = placed::parse(&read(path)?)?;
    let bits = parse_bits(inputs)?;
    let results = circuit::run_circuit(&c, &bits, evaluations)?;
    for (i, r) in results.iter().enumerate() {
        println!("{}: {}", (i + 1) * c.moves_per_evaluation(), bits_line(r));
    }
    Ok(())
}

fn render(file: &Path, out: Option<&Path>) -> Res {
    let w = load(file)?;
    match out {
        Some(p) => write(p, &svg::render(&w)),
        None => {
            print!("{}", twf::render_ascii(&w));
            Ok(())
        }
    }
}

fn serve(port: u16) -> Res {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(server::serve(port))?;
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Sim { file, moves, format, out } => sim(&file, &moves, format, out.as_deref()),
        Cmd::Solve { file, max_states, goals, json } => solve(&file, max_states, &goals, json),
        Cmd::Gen(g) => gen(g),
        Cmd::Gadgets(g) => gadgets(g),
        Cmd::Compile { netlist, auto_fanout, counter, out } => {
            compile(netlist.as_deref(), auto_fanout, counter, out.as_deref())
        }
        Cmd::Run { circuit, inputs, evaluations } => run(&circuit, &inputs, evaluations),
        Cmd::Render { file, svg } => render(&file, svg.as_deref()),
        Cmd::Serve { port } => serve(port),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
