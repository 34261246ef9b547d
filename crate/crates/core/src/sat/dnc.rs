// SPDX-License-Identifier: Apache-2.0

//! Master-worker divide and conquer over cubes.
//!
//! The root task always solves the full formula. When workers are idle the
//! master splits the longest-running leaf on the best-scoring node, creating
//! two children whose graphs are simplified under the extended cube and
//! re-encoded. A SAT child ends the search; UNSAT results propagate upward
//! once both siblings are UNSAT.

use std::fmt;
use std::io::Write;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::check::{verify_witness, Budget, CancelToken, CheckResult, UnknownReason};
use crate::cnf::tseitin;
use crate::cube::{propagate_constants, Cube};
use crate::error::XagError;
use crate::sat::cdcl::{SolveLimits, SolveStatus, Solver};
use crate::sat::score::{best_split_var, ScoreParams};
use crate::xag::{Lit, Xag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskState {
    /// Created, waiting for a worker.
    Pending,
    Running,
    /// The root after splitting: still solving, children exist.
    SplitRunning,
    /// A non-root task after splitting: its solver stopped and its verdict
    /// now comes from its children.
    Split,
    Unsat,
    Sat,
    Cancelled,
}

impl fmt::Display for TaskState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskState::Pending => "PENDING",
            TaskState::Running => "RUNNING",
            TaskState::SplitRunning => "SPLIT_RUNNING",
            TaskState::Split => "SPLIT",
            TaskState::Unsat => "UNSAT",
            TaskState::Sat => "SAT",
            TaskState::Cancelled => "CANCELLED",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Task {
    pub id: usize,
    pub cube: Cube,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub state: TaskState,
    pub started_at: Option<Instant>,
    cancel: CancelToken,
}

/// One state transition, in the order the master performed it.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskEvent {
    pub id: usize,
    pub parent: Option<usize>,
    pub cube_size: usize,
    pub state: TaskState,
    pub elapsed: f64,
}

impl fmt::Display for TaskEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parent = self.parent.map_or("-".to_string(), |p| p.to_string());
        write!(
            f,
            "{} {} {} {} {:.6}",
            self.id, parent, self.cube_size, self.state, self.elapsed
        )
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DncError {
    #[error("no running leaf has an unassigned variable")]
    NoSplittableTask,
    #[error(transparent)]
    Xag(#[from] XagError),
}

/// The task hierarchy owned by the master.
#[derive(Clone, Debug)]
pub struct TaskTree {
    pub tasks: Vec<Task>,
    pub events: Vec<TaskEvent>,
    origin: Instant,
}

impl TaskTree {
    pub fn new(origin: Instant) -> TaskTree {
        TaskTree {
            tasks: Vec::new(),
            events: Vec::new(),
            origin,
        }
    }

    pub fn add(&mut self, cube: Cube, parent: Option<usize>, cancel: CancelToken) -> usize {
        let id = self.tasks.len();
        self.tasks.push(Task {
            id,
            cube,
            parent,
            children: Vec::new(),
            state: TaskState::Pending,
            started_at: None,
            cancel,
        });
        if let Some(p) = parent {
            self.tasks[p].children.push(id);
        }
        self.log(id);
        id
    }

    fn log(&mut self, id: usize) {
        let t = &self.tasks[id];
        self.events.push(TaskEvent {
            id,
            parent: t.parent,
            cube_size: t.cube.len(),
            state: t.state,
            elapsed: self.origin.elapsed().as_secs_f64(),
        });
    }

    pub fn set_state(&mut self, id: usize, state: TaskState) {
        if self.tasks[id].state == state {
            return;
        }
        if state == TaskState::Running && self.tasks[id].started_at.is_none() {
            self.tasks[id].started_at = Some(Instant::now());
        }
        self.tasks[id].state = state;
        self.log(id);
    }

    fn is_final(&self, id: usize) -> bool {
        matches!(
            self.tasks[id].state,
            TaskState::Unsat | TaskState::Sat | TaskState::Cancelled
        )
    }

    /// Cancels every unresolved descendant of `id`.
    fn cancel_descendants(&mut self, id: usize) {
        let mut stack = self.tasks[id].children.clone();
        while let Some(c) = stack.pop() {
            stack.extend(self.tasks[c].children.iter().copied());
            if !self.is_final(c) {
                self.tasks[c].cancel.cancel();
                self.set_state(c, TaskState::Cancelled);
            }
        }
    }

    /// Marks `id` UNSAT, cancels its descendants and propagates upward while
    /// all siblings are UNSAT. Returns the topmost task marked.
    pub fn mark_unsat(&mut self, id: usize) -> usize {
        let mut cur = id;
        loop {
            if self.tasks[cur].state != TaskState::Unsat {
                self.tasks[cur].cancel.cancel();
                self.set_state(cur, TaskState::Unsat);
            }
            self.cancel_descendants(cur);
            let Some(p) = self.tasks[cur].parent else {
                return cur;
            };
            let all = self.tasks[p]
                .children
                .iter()
                .all(|&c| self.tasks[c].state == TaskState::Unsat);
            if !all || self.tasks[p].state == TaskState::Unsat {
                return cur;
            }
            cur = p;
        }
    }

    /// Running leaves, longest-running first, ties to the lowest id.
    pub fn running_leaves(&self, now: Instant) -> Vec<usize> {
        let mut v: Vec<(Duration, usize)> = self
            .tasks
            .iter()
            .filter(|t| t.state == TaskState::Running && t.children.is_empty())
            .map(|t| {
                (
                    now.saturating_duration_since(t.started_at.unwrap_or(now)),
                    t.id,
                )
            })
            .collect();
        v.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        v.into_iter().map(|(_, id)| id).collect()
    }

    /// Task and node to split next.
    pub fn pick_split(
        &self,
        xag: &Xag,
        now: Instant,
        params: &ScoreParams,
    ) -> Result<(usize, usize), DncError> {
        for id in self.running_leaves(now) {
            if let Some(v) = best_split_var(xag, &self.tasks[id].cube, params)? {
                return Ok((id, v));
            }
        }
        Err(DncError::NoSplittableTask)
    }
}

/// Replays `events` and checks the upward propagation rule: a task that
/// was split becomes UNSAT without its own solver exactly when all of its
/// children are UNSAT.
pub fn replay_events(events: &[TaskEvent]) -> Result<(), String> {
    use std::collections::HashMap;
    let mut state: HashMap<usize, TaskState> = HashMap::new();
    let mut children: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut parent: HashMap<usize, Option<usize>> = HashMap::new();
    for e in events {
        if let std::collections::hash_map::Entry::Vacant(v) = parent.entry(e.id) {
            v.insert(e.parent);
            if let Some(p) = e.parent {
                children.entry(p).or_default().push(e.id);
            }
        }
        let prev = state.get(&e.id).copied();
        if matches!(prev, Some(TaskState::Unsat) | Some(TaskState::Sat)) {
            return Err(format!("task {} left final state {:?}", e.id, prev));
        }
        if e.state == TaskState::Unsat && prev == Some(TaskState::Split) {
            let kids = children.get(&e.id).cloned().unwrap_or_default();
            if kids.len() != 2 || !kids.iter().all(|k| state.get(k) == Some(&TaskState::Unsat)) {
                return Err(format!("task {} marked UNSAT before both children", e.id));
            }
        }
        state.insert(e.id, e.state);
    }
    for (p, kids) in &children {
        let all = kids.len() == 2 && kids.iter().all(|k| state.get(k) == Some(&TaskState::Unsat));
        if all && state.get(p) != Some(&TaskState::Unsat) {
            return Err(format!("task {p} has two UNSAT children but is not UNSAT"));
        }
    }
    Ok(())
}

#[derive(Clone)]
pub struct DncConfig {
    pub threads: usize,
    /// Minimum time between two splits.
    pub split_interval: Duration,
    pub score: ScoreParams,
    /// Receives one line per task transition.
    pub log: Option<Arc<Mutex<dyn Write + Send>>>,
}

impl Default for DncConfig {
    fn default() -> Self {
        DncConfig {
            threads: 1,
            split_interval: Duration::from_secs(1),
            score: ScoreParams::default(),
            log: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DncStats {
    pub tasks: usize,
    pub splits: usize,
    pub conflicts: u64,
    pub decisions: u64,
}

#[derive(Clone, Debug)]
pub struct DncResult {
    pub verdict: CheckResult,
    pub stats: DncStats,
    pub events: Vec<TaskEvent>,
    pub wall: Duration,
}

enum WorkerMsg {
    Done {
        id: usize,
        status: SolveStatus,
        witness: Option<Vec<bool>>,
        conflicts: u64,
        decisions: u64,
    },
}

/// Prepared child: either decided during simplification or a formula to run.
enum Prepared {
    Unsat,
    Sat(Vec<bool>),
    Run(Xag, Vec<Option<Lit>>),
}

fn prepare(xag: &Xag, cube: &Cube) -> Result<Prepared, XagError> {
    let p = propagate_constants(xag, cube)?;
    if p.infeasible || p.xag.output() == Lit::FALSE {
        return Ok(Prepared::Unsat);
    }
    if p.xag.output() == Lit::TRUE {
        let w = decode(&p.node_map, xag.num_pis(), &[]);
        return Ok(Prepared::Sat(w));
    }
    Ok(Prepared::Run(p.xag, p.node_map))
}

/// PI values for the root graph from a child's PI values: PIs fixed by the
/// simplification take their constant, the others come from `child_pis`.
fn decode(node_map: &[Option<Lit>], num_pis: usize, child_pis: &[bool]) -> Vec<bool> {
    (0..num_pis)
        .map(|i| match node_map[i + 1] {
            Some(l) if l.is_const() => l == Lit::TRUE,
            _ => child_pis.get(i).copied().unwrap_or(false),
        })
        .collect()
}

fn run_task(
    id: usize,
    xag: Xag,
    node_map: Option<Vec<Option<Lit>>>,
    root_pis: usize,
    budget: Budget,
    tx: mpsc::Sender<WorkerMsg>,
) {
    let cnf = tseitin(&xag, true);
    let mut s = Solver::new();
    s.reserve_vars(cnf.num_vars);
    let mut ok = true;
    for c in &cnf.clauses {
        if !s.add_clause(c) {
            ok = false;
            break;
        }
    }
    let limits = SolveLimits {
        budget,
        max_conflicts: None,
    };
    let status = if ok {
        s.solve(&[], &limits)
    } else {
        SolveStatus::Unsat
    };
    let witness = (status == SolveStatus::Sat).then(|| {
        let pis: Vec<bool> = (0..xag.num_pis()).map(|i| s.model()[i + 1]).collect();
        match &node_map {
            Some(m) => decode(m, root_pis, &pis),
            None => pis,
        }
    });
    let _ = tx.send(WorkerMsg::Done {
        id,
        status,
        witness,
        conflicts: s.stats.conflicts,
        decisions: s.stats.decisions,
    });
}

/// Divide-and-conquer check that the output of `xag` is constant zero.
pub fn dnc_solve(xag: &Xag, config: &DncConfig, budget: &Budget) -> DncResult {
    let start = Instant::now();
    let threads = config.threads.max(1);
    let mut tree = TaskTree::new(start);
    let mut stats = DncStats::default();
    let mut verdict: Option<CheckResult> = None;
    let mut flushed = 0usize;
    let flush = |tree: &TaskTree, flushed: &mut usize| {
        if let Some(log) = &config.log {
            if let Ok(mut w) = log.lock() {
                for e in &tree.events[*flushed..] {
                    let _ = writeln!(w, "{e}");
                }
            }
        }
        *flushed = tree.events.len();
    };

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<WorkerMsg>();
        let mut active = 0usize;
        let mut pending: Vec<(usize, Xag, Vec<Option<Lit>>)> = Vec::new();
        let mut last_split = start;

        let root_cancel = budget.cancel.child();
        let root = tree.add(Cube::new(), None, root_cancel.clone());
        tree.set_state(root, TaskState::Running);
        {
            let tx = tx.clone();
            let b = Budget {
                deadline: budget.deadline,
                cancel: root_cancel,
            };
            let x = xag.clone();
            scope.spawn(move || run_task(root, x, None, 0, b, tx));
            active += 1;
        }

        let finish_sat = |tree: &mut TaskTree, id: usize, w: Vec<bool>| -> Option<CheckResult> {
            if !verify_witness(xag, &w) {
                return None;
            }
            tree.set_state(id, TaskState::Sat);
            Some(CheckResult::Counterexample(w))
        };

        while verdict.is_none() {
            // start pending children on idle workers
            while active < threads && !pending.is_empty() {
                let (id, x, map) = pending.remove(0);
                if tree.tasks[id].state != TaskState::Pending {
                    continue;
                }
                tree.set_state(id, TaskState::Running);
                let b = Budget {
                    deadline: budget.deadline,
                    cancel: tree.tasks[id].cancel.clone(),
                };
                let tx = tx.clone();
                let n = xag.num_pis();
                scope.spawn(move || run_task(id, x, Some(map), n, b, tx));
                active += 1;
            }

            // split when a worker is idle
            let now = Instant::now();
            if active < threads
                && pending.is_empty()
                && now.duration_since(last_split) >= config.split_interval
            {
                match tree.pick_split(xag, now, &config.score) {
                    Ok((id, v)) => {
                        stats.splits += 1;
                        last_split = now;
                        if id == root {
                            tree.set_state(id, TaskState::SplitRunning);
                        } else {
                            tree.tasks[id].cancel.cancel();
                            tree.set_state(id, TaskState::Split);
                        }
                        for neg in [false, true] {
                            let cube = tree.tasks[id]
                                .cube
                                .with(Lit::new(v, neg))
                                .expect("split node is unassigned");
                            let token = budget.cancel.child();
                            let cid = tree.add(cube.clone(), Some(id), token);
                            match prepare(xag, &cube) {
                                Ok(Prepared::Unsat) => {
                                    let top = tree.mark_unsat(cid);
                                    if top == root {
                                        verdict = Some(CheckResult::Equivalent);
                                    }
                                }
                                Ok(Prepared::Sat(w)) => {
                                    if let Some(r) = finish_sat(&mut tree, cid, w) {
                                        verdict = Some(r);
                                    }
                                }
                                Ok(Prepared::Run(x, map)) => pending.push((cid, x, map)),
                                Err(_) => {
                                    tree.tasks[cid].cancel.cancel();
                                    tree.set_state(cid, TaskState::Cancelled);
                                }
                            }
                            if verdict.is_some() || tree.is_final(id) {
                                break;
                            }
                        }
                        flush(&tree, &mut flushed);
                        continue;
                    }
                    Err(_) => last_split = now,
                }
            }
            flush(&tree, &mut flushed);
            if verdict.is_some() {
                break;
            }

            if let Some(why) = budget.stop_reason() {
                verdict = Some(CheckResult::Unknown(why));
                break;
            }
            let wait = if active < threads {
                config
                    .split_interval
                    .saturating_sub(Instant::now().duration_since(last_split))
                    .max(Duration::from_millis(1))
            } else {
                Duration::from_millis(50)
            };
            let wait = match budget.remaining() {
                Some(r) => wait.min(r.max(Duration::from_millis(1))),
                None => wait,
            };
            match rx.recv_timeout(wait) {
                Ok(WorkerMsg::Done {
                    id,
                    status,
                    witness,
                    conflicts,
                    decisions,
                }) => {
                    active -= 1;
                    stats.conflicts += conflicts;
                    stats.decisions += decisions;
                    if tree.is_final(id) || tree.tasks[id].state == TaskState::Split {
                        continue;
                    }
                    match status {
                        SolveStatus::Unsat => {
                            let top = tree.mark_unsat(id);
                            if top == root {
                                verdict = Some(CheckResult::Equivalent);
                            }
                        }
                        SolveStatus::Sat => {
                            if let Some(r) = witness.and_then(|w| finish_sat(&mut tree, id, w)) {
                                verdict = Some(r);
                            }
                        }
                        SolveStatus::Interrupted => {}
                    }
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {}
                Err(mpsc::RecvTimeoutError::Disconnected) => break,
            }
        }
        for id in 0..tree.tasks.len() {
            if !tree.is_final(id) {
                tree.tasks[id].cancel.cancel();
                tree.set_state(id, TaskState::Cancelled);
            }
        }
        flush(&tree, &mut flushed);
        drop(tx);
        // Workers observe the cancelled tokens; drain their reports.
        while active > 0 {
            match rx.recv() {
                Ok(WorkerMsg::Done {
                    conflicts,
                    decisions,
                    ..
                }) => {
                    stats.conflicts += conflicts;
                    stats.decisions += decisions;
                    active -= 1;
                }
                Err(_) => break,
            }
        }
    });

    stats.tasks = tree.tasks.len();
    DncResult {
        verdict: verdict.unwrap_or(CheckResult::Unknown(UnknownReason::Cancelled)),
        stats,
        events: tree.events,
        wall: start.elapsed(),
    }
}
