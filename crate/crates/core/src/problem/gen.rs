//! Generators for the three evaluation domains.
//!
//! Cells are `(row, col)` with row 0 at the top; `up` decreases the row and
//! `right` increases the column.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ProblemFile;
use crate::error::GenError;
use crate::model::{ActionSpec, CandidateGoalSet, PlanningDomain};
use crate::observer::{ObserverId, SensorModel, SensorRule};

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    North,
    East,
    South,
    West,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::East, Dir::South, Dir::West];

    fn tag(self) -> &'static str {
        match self {
            Dir::North => "n",
            Dir::East => "e",
            Dir::South => "s",
            Dir::West => "w",
        }
    }

    fn left(self) -> Dir {
        match self {
            Dir::North => Dir::West,
            Dir::West => Dir::South,
            Dir::South => Dir::East,
            Dir::East => Dir::North,
        }
    }

    fn right(self) -> Dir {
        self.left().left().left()
    }

    /// Neighbouring cell in this direction, if inside a `w`×`h` grid.
    fn step(self, (r, c): Cell, w: usize, h: usize) -> Option<Cell> {
        match self {
            Dir::North => r.checked_sub(1).map(|r| (r, c)),
            Dir::South => (r + 1 < h).then_some((r + 1, c)),
            Dir::West => c.checked_sub(1).map(|c| (r, c)),
            Dir::East => (c + 1 < w).then_some((r, c + 1)),
        }
    }
}

fn check_cell(cell: Cell, w: usize, h: usize) -> Result<(), GenError> {
    if cell.0 < h && cell.1 < w {
        Ok(())
    } else {
        Err(GenError::OutOfRange(cell.0, cell.1))
    }
}

fn check_goals(goals: &[Cell], true_goal: usize, w: usize, h: usize) -> Result<(), GenError> {
    if goals.is_empty() {
        return Err(GenError::InvalidParameter("at least one goal is required".into()));
    }
    if true_goal >= goals.len() {
        return Err(GenError::InvalidParameter(format!("true goal index {true_goal} out of range")));
    }
    for (i, g) in goals.iter().enumerate() {
        check_cell(*g, w, h)?;
        if goals[..i].contains(g) {
            return Err(GenError::InvalidParameter(format!("duplicate goal cell {g:?}")));
        }
    }
    Ok(())
}

fn cells(w: usize, h: usize) -> impl Iterator<Item = Cell> {
    (0..h).flat_map(move |r| (0..w).map(move |c| (r, c)))
}

const MOVES: [(Dir, &str); 4] = [(Dir::North, "up"), (Dir::South, "down"), (Dir::West, "left"), (Dir::East, "right")];

fn rules(pairs: &[(&[&str], &str)]) -> Vec<SensorRule> {
    pairs.iter().map(|(acts, sym)| SensorRule::on_actions(acts.iter().copied(), *sym)).collect()
}

fn goal_set(d: &PlanningDomain, fluents: Vec<String>, true_goal: usize) -> Result<CandidateGoalSet, GenError> {
    let goals = fluents.iter().map(|f| d.state([f.as_str()])).collect::<Result<Vec<_>, _>>()?;
    Ok(CandidateGoalSet::unlabelled(goals, true_goal)?)
}

/// Gridworld: the state is the actor's cell; four movement actions per cell
/// guarded by the grid border. X sees vertical/horizontal, C sees
/// north-east/south-west.
pub fn gen_gridworld(
    w: usize,
    h: usize,
    start: Cell,
    goals: &[Cell],
    true_goal: usize,
) -> Result<ProblemFile, GenError> {
    if w == 0 || h == 0 {
        return Err(GenError::InvalidParameter("grid dimensions must be at least 1".into()));
    }
    check_cell(start, w, h)?;
    check_goals(goals, true_goal, w, h)?;
    let at = |(r, c): Cell| format!("at_{r}_{c}");
    let fluents: Vec<String> = cells(w, h).map(at).collect();
    let mut actions = Vec::new();
    for cell in cells(w, h) {
        for (dir, name) in MOVES {
            if let Some(next) = dir.step(cell, w, h) {
                actions.push(
                    ActionSpec::new(format!("{name}_{}_{}", cell.0, cell.1))
                        .pre([at(cell)])
                        .add([at(next)])
                        .del([at(cell)]),
                );
            }
        }
    }
    let domain = PlanningDomain::new(fluents.iter(), actions, [at(start)])?;
    let goals = goal_set(&domain, goals.iter().map(|&g| at(g)).collect(), true_goal)?;
    let x = SensorModel::new(
        &domain,
        ObserverId::Adversary,
        rules(&[(&["up_*", "down_*"], "vertical"), (&["left_*", "right_*"], "horizontal")]),
        Some("horizontal".into()),
        vec![],
    )?;
    let c = SensorModel::new(
        &domain,
        ObserverId::Cooperative,
        rules(&[(&["up_*", "right_*"], "north-east"), (&["down_*", "left_*"], "south-west")]),
        Some("south-west".into()),
        vec![],
    )?;
    Ok(ProblemFile {
        name: Some(format!("gridworld-{w}x{h}")),
        family: Some("gridworld".into()),
        domain,
        goals,
        sensors: vec![c, x],
        horizon_hint: None,
        beta: None,
    })
}

#[derive(Debug, Clone)]
pub struct BoxPushConfig {
    pub width: usize,
    pub height: usize,
    pub actor: Cell,
    pub facing: Dir,
    pub box_cell: Cell,
    /// Candidate target cells for the box.
    pub goals: Vec<Cell>,
    pub true_goal: usize,
}

impl BoxPushConfig {
    /// 3x3 grid, box in the centre, candidate targets across the top row.
    pub fn standard() -> Self {
        BoxPushConfig {
            width: 3,
            height: 3,
            actor: (2, 1),
            facing: Dir::North,
            box_cell: (1, 1),
            goals: vec![(0, 0), (0, 1), (0, 2)],
            true_goal: 1,
        }
    }
}

/// Box pushing: the actor pushes the box by moving forward while facing it.
/// A state holds the actor's cell, the box cell and the facing direction.
/// Pushing the box off the grid is not applicable.
pub fn gen_boxpush(cfg: &BoxPushConfig) -> Result<ProblemFile, GenError> {
    let (w, h) = (cfg.width, cfg.height);
    if w == 0 || h == 0 {
        return Err(GenError::InvalidParameter("grid dimensions must be at least 1".into()));
    }
    check_cell(cfg.actor, w, h)?;
    check_cell(cfg.box_cell, w, h)?;
    if cfg.actor == cfg.box_cell {
        return Err(GenError::InvalidParameter("actor and box share a cell".into()));
    }
    check_goals(&cfg.goals, cfg.true_goal, w, h)?;

    let actor = |(r, c): Cell| format!("actor_{r}_{c}");
    let boxf = |(r, c): Cell| format!("box_{r}_{c}");
    let facing = |d: Dir| format!("facing_{}", d.tag());
    let mut fluents: Vec<String> = cells(w, h).map(actor).collect();
    fluents.extend(cells(w, h).map(boxf));
    fluents.extend(Dir::ALL.iter().map(|&d| facing(d)));

    let mut actions = Vec::new();
    for d in Dir::ALL {
        actions.push(
            ActionSpec::new(format!("turn-left_{}", d.tag())).pre([facing(d)]).add([facing(d.left())]).del([facing(d)]),
        );
        actions.push(
            ActionSpec::new(format!("turn-right_{}", d.tag()))
                .pre([facing(d)])
                .add([facing(d.right())])
                .del([facing(d)]),
        );
    }
    for a in cells(w, h) {
        for d in Dir::ALL {
            let Some(next) = d.step(a, w, h) else { continue };
            for b in cells(w, h) {
                if b == a || b == next {
                    continue;
                }
                actions.push(
                    ActionSpec::new(format!("move-forward_{}_{}_{}_b{}_{}", a.0, a.1, d.tag(), b.0, b.1))
                        .pre([actor(a), facing(d), boxf(b)])
                        .add([actor(next)])
                        .del([actor(a)]),
                );
            }
            if let Some(beyond) = d.step(next, w, h) {
                actions.push(
                    ActionSpec::new(format!("move-forward-push_{}_{}_{}", a.0, a.1, d.tag()))
                        .pre([actor(a), facing(d), boxf(next)])
                        .add([actor(next), boxf(beyond)])
                        .del([actor(a), boxf(next)]),
                );
            }
        }
    }
    actions.push(ActionSpec::new("stay"));

    let domain =
        PlanningDomain::new(fluents.iter(), actions, [actor(cfg.actor), boxf(cfg.box_cell), facing(cfg.facing)])?;
    let goals = goal_set(&domain, cfg.goals.iter().map(|&g| boxf(g)).collect(), cfg.true_goal)?;
    let x = SensorModel::new(
        &domain,
        ObserverId::Adversary,
        rules(&[(&["turn-left_*", "turn-right_*"], "turn"), (&["move-forward*", "stay"], "move")]),
        Some("move".into()),
        vec![],
    )?;
    let c = SensorModel::new(
        &domain,
        ObserverId::Cooperative,
        rules(&[(&["turn-right_*", "move-forward*"], "rightwards"), (&["turn-left_*", "stay"], "leftwards")]),
        Some("leftwards".into()),
        vec![],
    )?;
    Ok(ProblemFile {
        name: Some(format!("boxpush-{w}x{h}")),
        family: Some("boxpush".into()),
        domain,
        goals,
        sensors: vec![c, x],
        horizon_hint: None,
        beta: None,
    })
}

#[derive(Debug, Clone)]
pub struct RecyclingConfig {
    pub width: usize,
    pub height: usize,
    pub battery_levels: usize,
    pub actor: Cell,
    pub can: Cell,
    /// Initial battery level, `0..battery_levels`.
    pub battery: usize,
    /// Candidate bin cells the can may be dropped in.
    pub goals: Vec<Cell>,
    pub true_goal: usize,
}

impl RecyclingConfig {
    /// 3x3 grid, one can, 5 battery levels.
    pub fn standard() -> Self {
        RecyclingConfig {
            width: 3,
            height: 3,
            battery_levels: 5,
            actor: (1, 1),
            can: (1, 0),
            battery: 4,
            goals: vec![(0, 2), (2, 2), (0, 0)],
            true_goal: 0,
        }
    }
}

/// Recycling robot: moving, picking up and dropping each cost one battery
/// level; `charge` restores the battery to full from any cell.
pub fn gen_recycling(cfg: &RecyclingConfig) -> Result<ProblemFile, GenError> {
    let (w, h, levels) = (cfg.width, cfg.height, cfg.battery_levels);
    if w == 0 || h == 0 {
        return Err(GenError::InvalidParameter("grid dimensions must be at least 1".into()));
    }
    if levels == 0 {
        return Err(GenError::InvalidParameter("battery_levels must be at least 1".into()));
    }
    if cfg.battery >= levels {
        return Err(GenError::InvalidParameter(format!("battery {} out of range 0..{levels}", cfg.battery)));
    }
    check_cell(cfg.actor, w, h)?;
    check_cell(cfg.can, w, h)?;
    check_goals(&cfg.goals, cfg.true_goal, w, h)?;

    let at = |(r, c): Cell| format!("at_{r}_{c}");
    let can = |(r, c): Cell| format!("can_{r}_{c}");
    let battery = |k: usize| format!("battery_{k}");
    let mut fluents: Vec<String> = cells(w, h).map(at).collect();
    fluents.extend(cells(w, h).map(can));
    fluents.push("holding".into());
    fluents.extend((0..levels).map(battery));

    let mut actions = Vec::new();
    for cell in cells(w, h) {
        let (r, c) = cell;
        for k in 1..levels {
            for (dir, name) in MOVES {
                if let Some(next) = dir.step(cell, w, h) {
                    actions.push(
                        ActionSpec::new(format!("{name}_{r}_{c}_b{k}"))
                            .pre([at(cell), battery(k)])
                            .add([at(next), battery(k - 1)])
                            .del([at(cell), battery(k)]),
                    );
                }
            }
            actions.push(
                ActionSpec::new(format!("pick-up_{r}_{c}_b{k}"))
                    .pre([at(cell), can(cell), battery(k)])
                    .add(["holding".to_string(), battery(k - 1)])
                    .del([can(cell), battery(k)]),
            );
            actions.push(
                ActionSpec::new(format!("drop_{r}_{c}_b{k}"))
                    .pre([at(cell), "holding".to_string(), battery(k)])
                    .add([can(cell), battery(k - 1)])
                    .del(["holding".to_string(), battery(k)]),
            );
        }
    }
    for k in 0..levels.saturating_sub(1) {
        actions.push(
            ActionSpec::new(format!("charge_b{k}")).pre([battery(k)]).add([battery(levels - 1)]).del([battery(k)]),
        );
    }
    actions.push(ActionSpec::new("stay"));

    let domain = PlanningDomain::new(fluents.iter(), actions, [at(cfg.actor), can(cfg.can), battery(cfg.battery)])?;
    let goals = goal_set(&domain, cfg.goals.iter().map(|&g| can(g)).collect(), cfg.true_goal)?;
    let x = SensorModel::new(
        &domain,
        ObserverId::Adversary,
        rules(&[
            (&["left_*", "right_*"], "horizontal"),
            (&["up_*", "down_*"], "vertical"),
            (&["pick-up_*", "drop_*"], "using-gripper"),
            (&["charge_*", "stay"], "charging"),
        ]),
        Some("charging".into()),
        vec![],
    )?;
    let c = SensorModel::new(
        &domain,
        ObserverId::Cooperative,
        rules(&[
            (&["up_*", "right_*"], "north-east"),
            (&["down_*", "left_*"], "south-west"),
            (&["pick-up_*", "charge_*"], "picking"),
            (&["drop_*", "stay"], "dropping"),
        ]),
        Some("dropping".into()),
        vec![],
    )?;
    Ok(ProblemFile {
        name: Some(format!("recycling-{w}x{h}-b{levels}")),
        family: Some("recycling".into()),
        domain,
        goals,
        sensors: vec![c, x],
        horizon_hint: None,
        beta: None,
    })
}

/// Random gridworld instance: uniform start, goals drawn without
/// replacement from one checkerboard parity class (row and column parity),
/// start excluded, uniform true goal.
///
/// The adversary's vertical/horizontal sensor reveals the parity of the
/// actor's row and column offsets, so a candidate goal in another parity
/// class can never share the adversary's belief with the true goal.
pub fn random_gridworld<R: Rng>(w: usize, h: usize, n_goals: usize, rng: &mut R) -> Result<ProblemFile, GenError> {
    if n_goals == 0 {
        return Err(GenError::InvalidParameter("n_goals must be at least 1".into()));
    }
    let classes: Vec<(usize, usize)> = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .filter(|&(pr, pc)| cells(w, h).filter(|&(r, c)| r % 2 == pr && c % 2 == pc).count() > n_goals)
        .collect();
    let &(pr, pc) =
        classes.choose(rng).ok_or_else(|| GenError::InvalidParameter(format!("grid too small for {n_goals} goals")))?;
    let pool: Vec<Cell> = cells(w, h).filter(|&(r, c)| r % 2 == pr && c % 2 == pc).collect();
    let goals: Vec<Cell> = pool.choose_multiple(rng, n_goals).copied().collect();
    let starts: Vec<Cell> = cells(w, h).filter(|c| !goals.contains(c)).collect();
    let start = *starts.choose(rng).expect("pool is larger than the goal count");
    let true_goal = rng.gen_range(0..n_goals);
    gen_gridworld(w, h, start, &goals, true_goal)
}

/// Random box-pushing instance: targets on the top row, box on an interior
/// cell (a box against a wall can never be pushed off it, which would
/// strand most targets), actor and facing uniform.
pub fn random_boxpush<R: Rng>(w: usize, h: usize, n_goals: usize, rng: &mut R) -> Result<ProblemFile, GenError> {
    if h < 3 || w < 3 || n_goals == 0 || n_goals > w {
        return Err(GenError::InvalidParameter("need w, h ≥ 3 and 1 ≤ n_goals ≤ w".into()));
    }
    let top: Vec<Cell> = (0..w).map(|c| (0, c)).collect();
    let goals: Vec<Cell> = top.choose_multiple(rng, n_goals).copied().collect();
    let box_cells: Vec<Cell> = cells(w, h).filter(|&(r, c)| r > 0 && r + 1 < h && c > 0 && c + 1 < w).collect();
    let box_cell = *box_cells.choose(rng).expect("w, h ≥ 3");
    let actors: Vec<Cell> = cells(w, h).filter(|&c| c != box_cell).collect();
    let actor = *actors.choose(rng).expect("at least two cells");
    let facing = *Dir::ALL.choose(rng).expect("non-empty");
    gen_boxpush(&BoxPushConfig {
        width: w,
        height: h,
        actor,
        facing,
        box_cell,
        goals,
        true_goal: rng.gen_range(0..n_goals),
    })
}

/// Random recycling instance: distinct bins, can outside the bins, full
/// battery.
pub fn random_recycling<R: Rng>(
    w: usize,
    h: usize,
    battery_levels: usize,
    n_goals: usize,
    rng: &mut R,
) -> Result<ProblemFile, GenError> {
    let all: Vec<Cell> = cells(w, h).collect();
    if n_goals == 0 || n_goals >= all.len() {
        return Err(GenError::InvalidParameter("need 1 ≤ n_goals < cells".into()));
    }
    let goals: Vec<Cell> = all.choose_multiple(rng, n_goals).copied().collect();
    let cans: Vec<Cell> = all.iter().copied().filter(|c| !goals.contains(c)).collect();
    let can = *cans.choose(rng).expect("non-empty");
    let actor = *all.choose(rng).expect("non-empty");
    gen_recycling(&RecyclingConfig {
        width: w,
        height: h,
        battery_levels,
        actor,
        can,
        battery: battery_levels.saturating_sub(1),
        goals,
        true_goal: rng.gen_range(0..n_goals),
    })
}
