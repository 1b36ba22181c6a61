//! The bandit prelude: four object-language fragments that together make a
//! complete learning run, plus the glue that composes them.
//!
//! The fragments are deliberately separate files with separate vocabularies:
//!
//! * [`environment_source`] knows machines and payouts and speaks only
//!   `do`/`observe` over the concrete carriers `A_E`/`O_E`;
//! * [`learner_source`] knows estimates and exploration and speaks only the
//!   `_RL` interface over the abstract carriers `A_RL`/`O_RL` (it passes the
//!   `rl` fragment profile, which rejects any mention of the concrete side);
//! * [`interface_source`] is the one place both vocabularies meet: it
//!   instantiates the carriers and translates each side's operations into
//!   the other's;
//! * [`main_loop_source`] is the program being trained, written against the
//!   concrete operations with no knowledge of how they are handled.
//!
//! Each template bakes its numeric parameters into the text, so the shipped
//! `prelude/*.leff` files are just the templates at their default arguments
//! (a test keeps them in sync). [`compose`] concatenates fragments and wraps
//! the training loop in the six-handler nest; the result typechecks under
//! the empty ambient row at `Real`.

/// Arm count of the default machine room (and length of the action list the
/// interface advertises).
pub const DEFAULT_MACHINES: i64 = 6;
/// Rounds a default training run plays.
pub const DEFAULT_ROUNDS: i64 = 500;
/// Default exploration probability.
pub const DEFAULT_EPSILON: f64 = 0.05;
/// Default initial estimate for a never-pulled arm. Deliberately on the
/// optimistic side (the true means are `arm + 5`), so early rounds try
/// everything once even with a small epsilon.
pub const DEFAULT_INITIAL: f64 = 10.0;
/// Default payout spread: arm `a` pays `a + uniform[0, width)`.
pub const DEFAULT_WIDTH: f64 = 10.0;

/// Prints a real so the lexer reads it back as a `Real`, never an `Int`.
/// Same convention as the pretty-printer.
fn real_lit(x: f64) -> String {
    if x.fract() == 0.0 && x.is_finite() {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

/// The machine room: `machines` arms where arm `a` pays `a + U[0, width)`,
/// and an observation reads the most recent payout.
///
/// `h_env` threads the pending payout as a `Real -> Real * Real` state
/// function with residual row `{}`; `env_hide` runs that function from `0.0`
/// and keeps the answer. An out-of-range arm aborts the whole run with the
/// message `"This action is not available!"`.
pub fn environment_source(machines: i64, width: f64) -> String {
    let w = real_lit(width);
    format!(
        r#"-- A machine room with {machines} one-armed bandits. Pulling arm a pays
-- a + U[0, {w}); an observation reads the last payout. The payout is
-- threaded as explicit state (a Real -> Real * Real function) so the
-- handler's own residual row stays empty, and env_hide runs the state
-- function from 0.0 and keeps only the answer.

type A_E = Int
type O_E = Real

let arm_ok = fun (a : A_E) [{{}}] ->
  let lo = leq (1, a) in
  let hi = leq (a, {machines}) in
  and (lo, hi)

let draw_reward = fun (a : A_E) [{{}}] ->
  let base = real_of_int a in
  let noise = randomfloat {w} in
  plus (base, noise)

let h_env = handler {{
  return x ->
    return (fun (s : Real) [{{}}] -> return (s, x))
  | do(a; k) ->
      return (fun (s : Real) [{{}}] ->
        let ok = arm_ok a in
        let g = if ok then draw_reward a else fail_real "This action is not available!" in
        let f = k () in
        f g)
  | observe(u; k) ->
      return (fun (s : Real) [{{}}] ->
        let f = k s in
        f s)
}} : Real =[{{do, observe}} ; {{}}]=> (Real -[{{}}]-> Real * Real)

let env_hide = handler {{
  return f ->
    let x = f 0.0 in
    pi2(x)
}} : (Real -[{{}}]-> Real * Real) =[{{}} ; {{}}]=> Real
"#
    )
}

/// The abstraction boundary: instantiates all four carrier types and
/// translates between the learner's interface and the machine room.
///
/// Actions pass through unchanged (`A_RL = A_E = Int`, machine numbers
/// `1..machines`); every observation abstracts to `()` because a bandit has
/// a single state. `h_act` rewrites the training loop's `choice`/`reward`
/// into their `_RL` forms; `h_iface` answers `observe_RL` by observing the
/// real environment and abstracting, and `getactions_RL` with the constant
/// action list.
pub fn interface_source(machines: i64) -> String {
    format!(
        r#"-- The boundary between learner and environment. Both vocabularies are
-- instantiated here and nowhere else: actions are machine numbers passed
-- through unchanged, and every concrete observation abstracts to () (a
-- bandit has a single state worth distinguishing).

type A_E = Int
type O_E = Real
type A_RL = Int
type O_RL = Unit

let to_env_action = fun (x : A_RL) [{{}}] -> return x

let abstract_obs = fun (o : O_E) [{{}}] -> return ()

-- the machine numbers 1..{machines}, lowest first
let all_actions = fun (u : Unit) [{{}}] ->
  let go = fix rec (i : Int) : A_RL list [{{}}] ->
    let past = gt (i, {machines}) in
    if past then return nil[A_RL]
    else
      let j = plus (i, 1) in
      let rest = rec j in
      cons (i, rest)
  in go 1

let h_act = handler {{
  return x -> return x
  | choice(u; k) ->
      choice_RL((); x.
        let a = to_env_action x in
        k a)
  | reward(r; k) ->
      reward_RL(r; x. k x)
}} : Real =[{{choice, reward}} ; {{choice_RL, reward_RL}}]=> Real

let h_iface = handler {{
  return x -> return x
  | observe_RL(u; k) ->
      observe((); o.
        let ao = abstract_obs o in
        k ao)
  | getactions_RL(o; k) ->
      let acts = all_actions () in
      k acts
}} : Real =[{{observe_RL, getactions_RL, do, observe}} ; {{do, observe}}]=> Real
"#
    )
}

/// The epsilon-greedy tabular learner, written entirely against the
/// abstract interface (it passes the `rl` fragment profile).
///
/// Memory is `(table, no, na)`: one table row per observation seen so far,
/// each row holding `(action, pull count, estimate)` entries for every
/// available action, and the indices of the entry the latest `choice_RL`
/// touched so `reward_RL` can credit it. `h_learn` threads the memory as a
/// state function; `learn_hide` runs it from the empty table. The initial
/// indices point into the empty table, so a reward arriving before any
/// choice finds no row and updates nothing.
pub fn learner_source(epsilon: f64, initial: f64) -> String {
    let eps = real_lit(epsilon);
    let init = real_lit(initial);
    format!(
        r#"-- An epsilon-greedy tabular learner. It never names the environment's
-- operations or carrier types: observations and actions are the abstract
-- O_RL and A_RL, actions only ever come from getactions_RL, and the only
-- scrutiny an observation gets is equality (to find its table row).

type entry = A_RL * Int * Real
type row = O_RL * entry list
type mem = row list * Int * Int
type smem = mem -[{{observe_RL, getactions_RL}}]-> (mem * Real)
type kchoice = A_RL -[{{observe_RL, getactions_RL}}]-> smem

-- index of the row for observation o, or -1 when there is none yet
let find_row = fun (args : row list * O_RL) [{{}}] ->
  let rows = pi1(args) in
  let o = pi2(args) in
  let n = length rows in
  let go = fix rec (i : Int) : Int [{{}}] ->
    let past = geq (i, n) in
    if past then return -1
    else
      let rw = nth (rows, i) in
      let ro = pi1(rw) in
      let same = eq (ro, o) in
      if same then return i
      else
        let j = plus (i, 1) in
        rec j
  in go 0

-- a fresh entry list: every action untried, estimate v
let init_entries = fun (args : A_RL list * Real) [{{}}] ->
  let acts = pi1(args) in
  let v = pi2(args) in
  let n = length acts in
  let go = fix rec (i : Int) : entry list [{{}}] ->
    let past = geq (i, n) in
    if past then return nil[entry]
    else
      let a = nth (acts, i) in
      let j = plus (i, 1) in
      let rest = rec j in
      cons ((a, (0, v)), rest)
  in go 0

let set_entry = fun (args : entry list * (Int * entry)) [{{}}] ->
  let es = pi1(args) in
  let ie = pi2(args) in
  let at = pi1(ie) in
  let e = pi2(ie) in
  let n = length es in
  let go = fix rec (i : Int) : entry list [{{}}] ->
    let past = geq (i, n) in
    if past then return nil[entry]
    else
      let cur = nth (es, i) in
      let here = eq (i, at) in
      let j = plus (i, 1) in
      let rest = rec j in
      if here then cons (e, rest) else cons (cur, rest)
  in go 0

let set_row = fun (args : row list * (Int * row)) [{{}}] ->
  let rows = pi1(args) in
  let ir = pi2(args) in
  let at = pi1(ir) in
  let rw = pi2(ir) in
  let n = length rows in
  let go = fix rec (i : Int) : row list [{{}}] ->
    let past = geq (i, n) in
    if past then return nil[row]
    else
      let cur = nth (rows, i) in
      let here = eq (i, at) in
      let j = plus (i, 1) in
      let rest = rec j in
      if here then cons (rw, rest) else cons (cur, rest)
  in go 0

let append_row = fun (args : row list * row) [{{}}] ->
  let rows = pi1(args) in
  let rw = pi2(args) in
  let n = length rows in
  let go = fix rec (i : Int) : row list [{{}}] ->
    let past = geq (i, n) in
    if past then cons (rw, nil[row])
    else
      let cur = nth (rows, i) in
      let j = plus (i, 1) in
      let rest = rec j in
      cons (cur, rest)
  in go 0

-- explore with probability eps (coin <= eps, coin from [0, 1)); otherwise
-- exploit the entry with the highest estimate, ties to the lowest index
let greedy = fun (args : Real * entry list) [{{}}] ->
  let eps = pi1(args) in
  let es = pi2(args) in
  let n = length es in
  let coin = randomfloat 1.0 in
  let explore = leq (coin, eps) in
  if explore then
    let na = randomint n in
    let ent = nth (es, na) in
    let a = pi1(ent) in
    return (na, a)
  else
    let first = nth (es, 0) in
    let fcr = pi2(first) in
    let fv = pi2(fcr) in
    let go = fix rec (s : Int * (Int * Real)) : Int [{{}}] ->
      let i = pi1(s) in
      let best = pi2(s) in
      let bi = pi1(best) in
      let bv = pi2(best) in
      let past = geq (i, n) in
      if past then return bi
      else
        let ent = nth (es, i) in
        let cr = pi2(ent) in
        let ev = pi2(cr) in
        let better = gt (ev, bv) in
        let j = plus (i, 1) in
        if better then rec (j, (i, ev)) else rec (j, (bi, bv))
    in
    let na = go (1, (0, fv)) in
    let ent = nth (es, na) in
    let a = pi1(ent) in
    return (na, a)

-- the pull count goes up when the arm is chosen...
let bump_count = fun (e : entry) [{{}}] ->
  let a = pi1(e) in
  let cr = pi2(e) in
  let c = pi1(cr) in
  let v = pi2(cr) in
  let c2 = plus (c, 1) in
  return (a, (c2, v))

-- ...so the running mean v + (r - v) / count divides by the bumped count
let credit = fun (args : entry * Real) [{{}}] ->
  let e = pi1(args) in
  let r = pi2(args) in
  let a = pi1(e) in
  let cr = pi2(e) in
  let c = pi1(cr) in
  let v = pi2(cr) in
  let cf = real_of_int c in
  let dr = minus (r, v) in
  let step = div (dr, cf) in
  let v2 = plus (v, step) in
  return (a, (c, v2))

-- the shared tail of a choice: pick from row no, bump the pull count,
-- and resume the continuation with the chosen action and the new memory
let pick_then = fun (args : (row list * Int) * kchoice) [{{observe_RL, getactions_RL}}] ->
  let rn = pi1(args) in
  let k = pi2(args) in
  let rows = pi1(rn) in
  let no = pi2(rn) in
  let rw = nth (rows, no) in
  let ro = pi1(rw) in
  let q = pi2(rw) in
  let pick = greedy ({eps}, q) in
  let na = pi1(pick) in
  let a = pi2(pick) in
  let ent = nth (q, na) in
  let ent2 = bump_count ent in
  let q2 = set_entry (q, (na, ent2)) in
  let rows2 = set_row (rows, (no, (ro, q2))) in
  let f = k a in
  f (rows2, (no, na))

let h_learn = handler {{
  return x ->
    return (fun (m : mem) [{{observe_RL, getactions_RL}}] -> return (m, x))
  | choice_RL(u; k) ->
      return (fun (m : mem) [{{observe_RL, getactions_RL}}] ->
        observe_RL((); o.
          let rows = pi1(m) in
          let found = find_row (rows, o) in
          let missing = lt (found, 0) in
          if missing then
            getactions_RL(o; acts.
              let es0 = init_entries (acts, {init}) in
              let no = length rows in
              let rows2 = append_row (rows, (o, es0)) in
              pick_then ((rows2, no), k))
          else
            pick_then ((rows, found), k)))
  | reward_RL(r; k) ->
      return (fun (m : mem) [{{observe_RL, getactions_RL}}] ->
        let rows = pi1(m) in
        let idx = pi2(m) in
        let no = pi1(idx) in
        let na = pi2(idx) in
        let n = length rows in
        let valid = lt (no, n) in
        if valid then
          let rw = nth (rows, no) in
          let ro = pi1(rw) in
          let es = pi2(rw) in
          let ent = nth (es, na) in
          let ent2 = credit (ent, r) in
          let es2 = set_entry (es, (na, ent2)) in
          let rows2 = set_row (rows, (no, (ro, es2))) in
          let f = k () in
          f (rows2, (no, na))
        else
          let f = k () in
          f m)
}} : Real =[{{choice_RL, reward_RL}} ; {{observe_RL, getactions_RL}}]=> smem

let learn_hide = handler {{
  return f ->
    let x = f (nil[row], (0, 0)) in
    pi2(x)
}} : smem =[{{}} ; {{observe_RL, getactions_RL}}]=> Real
"#
    )
}

/// The program being trained: each round asks for an arm, pulls it, reads
/// the payout, and feeds the payout back as the reward. The fix parameter
/// carries `(rounds left, cumulative reward)` and the run's value is the
/// cumulative reward, so the operation word of one round is choice, do,
/// reward (observe does not count) and the whole loop grades as the unit.
pub fn main_loop_source(rounds: i64) -> String {
    format!("{}\nmain = run_rounds ()\n", main_loop_decls(rounds))
}

fn main_loop_decls(rounds: i64) -> String {
    format!(
        r#"-- One training run of {rounds} rounds. The loop knows nothing about
-- handlers: it performs choice/do/observe/reward and carries
-- (rounds left, cumulative reward) in its fix parameter.

type A_E = Int
type O_E = Real

let run_rounds = fun (u : Unit) [{{choice, reward, do, observe}}] ->
  let run = fix go (s : Int * Real) : Real [{{choice, reward, do, observe}}] ->
    let n = pi1(s) in
    let r = pi2(s) in
    let done_now = eq (n, 0) in
    if done_now then return r
    else
      choice((); a.
      do(a; u2.
      observe((); g.
      reward(g; u3.
        let m = minus (n, 1) in
        let r2 = plus (r, g) in
        go (m, r2)))))
  in run ({rounds}, 0.0)
"#
    )
}

/// The handler nest, innermost handler last. Reading outward from the loop:
/// `h_act` maps the loop's choice/reward onto the learner's interface,
/// `h_learn` implements that interface and `learn_hide` runs its memory,
/// `h_iface` grounds the learner's observations and action lists in the
/// environment, and `h_env`/`env_hide` implement and then run the machines.
const COMPOSED_MAIN: &str = "main =
  with env_hide handle
  with h_env handle
  with h_iface handle
  with learn_hide handle
  with h_learn handle
  with h_act handle
  run_rounds ()
";

/// Concatenates the four fragments into one program whose main computation
/// is the training loop wrapped in the full handler nest.
///
/// The loop fragment's own `main = ...` line (and anything after it) is
/// dropped; everything else is kept verbatim, so fragments loaded from disk
/// compose the same way the built-in templates do as long as the loop
/// fragment defines `run_rounds` and puts its `main =` last.
pub fn compose(environment: &str, interface: &str, learner: &str, main_loop: &str) -> String {
    let cut = if let Some(stripped) = main_loop.strip_prefix("main =") {
        main_loop.len() - stripped.len() - "main =".len()
    } else {
        main_loop.rfind("\nmain =").map(|i| i + 1).unwrap_or(main_loop.len())
    };
    let loop_decls = &main_loop[..cut];
    format!("{environment}\n{interface}\n{learner}\n{loop_decls}\n{COMPOSED_MAIN}")
}

/// [`compose`] over the built-in templates.
pub fn composite_source(
    machines: i64,
    rounds: i64,
    epsilon: f64,
    initial: f64,
    width: f64,
) -> String {
    compose(
        &environment_source(machines, width),
        &interface_source(machines),
        &learner_source(epsilon, initial),
        &main_loop_source(rounds),
    )
}
