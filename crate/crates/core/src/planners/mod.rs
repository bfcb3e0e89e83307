//! Movement policies.
//!
//! Every planner is open loop: it receives the current information model
//! through [`PlannerContext`] but the four built-in planners ignore it.

pub mod coverage;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::environment::Measurement;
use crate::error::{Error, Result};
use crate::estimators::InformationModel;
use crate::geometry::{CropKind, Geometry, Region};
use crate::rng;
use crate::world::Move;

pub use coverage::{Cell, Corner};

/// Step budget of one robot. Counts moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerBudget {
    pub total_steps: usize,
    pub steps_used: usize,
}

impl PlannerBudget {
    pub fn new(total_steps: usize) -> Self {
        PlannerBudget {
            total_steps,
            steps_used: 0,
        }
    }

    pub fn remaining(&self) -> usize {
        self.total_steps.saturating_sub(self.steps_used)
    }
}

/// What a planner sees when choosing a move.
pub struct PlannerContext<'a> {
    pub robot_id: usize,
    pub position: Cell,
    pub geometry: &'a Geometry,
    pub budget: PlannerBudget,
    pub model: Option<&'a InformationModel>,
}

pub trait Planner: Send {
    fn name(&self) -> &'static str;

    fn next_move(&mut self, ctx: &PlannerContext<'_>) -> Move;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlannerKind {
    Lawnmower,
    AdaptiveLawnmower,
    Spiral,
    RandomWaypoint,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] = [
        PlannerKind::Lawnmower,
        PlannerKind::AdaptiveLawnmower,
        PlannerKind::Spiral,
        PlannerKind::RandomWaypoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Lawnmower => "lawnmower",
            PlannerKind::AdaptiveLawnmower => "adaptive-lawnmower",
            PlannerKind::Spiral => "spiral",
            PlannerKind::RandomWaypoint => "random-waypoint",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown planner `{s}`")))
    }
}

/// A precomputed coverage path plus the spacing chosen for each swept
/// region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveragePlan {
    /// Visited cells in order; consecutive cells are king-adjacent.
    pub path: Vec<Cell>,
    /// Spacing per swept region, in sweep order.
    pub spacings: Vec<usize>,
}

impl CoveragePlan {
    pub fn moves(&self) -> Vec<Move> {
        self.path.windows(2).map(|w| Move::toward(w[0], w[1])).collect()
    }

    fn truncate_to(&mut self, budget: usize) {
        self.path.truncate(budget + 1);
    }
}

/// Lawnmower over `region` from the corner nearest `start`, with the
/// smallest row spacing whose sweep fits the budget left after reaching
/// that corner.
pub fn plan_lawnmower(budget: usize, region: Region, start: Cell) -> CoveragePlan {
    plan_sweep(budget, region, start, Pattern::Lawnmower)
}

/// Inward spiral over `region`, ring spacing fitted like the lawnmower.
pub fn plan_spiral(budget: usize, region: Region, start: Cell) -> CoveragePlan {
    plan_sweep(budget, region, start, Pattern::Spiral)
}

#[derive(Clone, Copy)]
enum Pattern {
    Lawnmower,
    Spiral,
}

fn plan_sweep(budget: usize, region: Region, start: Cell, pattern: Pattern) -> CoveragePlan {
    let mut plan = CoveragePlan {
        path: vec![start],
        spacings: Vec::new(),
    };
    if region.is_empty() {
        return plan;
    }
    append_sweep(&mut plan, budget, region, pattern);
    plan.truncate_to(budget);
    plan
}

/// Travels to the nearest corner of `region` and sweeps it with the
/// smallest spacing fitting in `budget` moves (travel included).
fn append_sweep(plan: &mut CoveragePlan, budget: usize, region: Region, pattern: Pattern) {
    let here = *plan.path.last().expect("plan starts at the robot");
    let corner = Corner::nearest(region, here);
    let approach = coverage::chebyshev(here, corner.cell(region));
    let sweep_budget = budget.saturating_sub(approach);
    let length = |s| match pattern {
        Pattern::Lawnmower => coverage::lawnmower_length(region, s),
        Pattern::Spiral => coverage::spiral_length(region, s),
    };
    let (spacing, _) = coverage::fit_spacing(coverage::max_spacing(region), sweep_budget, length);
    let sweep = match pattern {
        Pattern::Lawnmower => coverage::lawnmower_path(region, spacing, corner),
        Pattern::Spiral => coverage::spiral_path(region, spacing, corner),
    };
    plan.path.extend(coverage::travel(here, corner.cell(region)));
    plan.path.extend(sweep.into_iter().skip(1));
    plan.spacings.push(spacing);
}

/// Share of the budget given to the tomato field: the tomato-relevant
/// weights (TYLCV, humidity) over the weights relevant to both fields.
pub fn tomato_share(weights: [f64; 3]) -> f64 {
    let h = weights[Measurement::Humidity.index()];
    let tomato = weights[Measurement::Tylcv.index()] + h;
    let strawberry = weights[Measurement::Ccr.index()] + h;
    tomato / (tomato + strawberry)
}

/// Two lawnmowers: the client's tomato field first, with a budget share
/// proportional to its scoring weights, then the strawberry field with
/// whatever budget remains.
pub fn plan_adaptive_lawnmower(
    budget: usize,
    geometry: &Geometry,
    weights: [f64; 3],
    start: Cell,
) -> Result<CoveragePlan> {
    let tomato = geometry
        .client_bounds(CropKind::Tomato)
        .ok_or_else(|| Error::config("adaptive lawnmower needs a client tomato field"))?;
    let strawberry = geometry
        .client_bounds(CropKind::Strawberry)
        .ok_or_else(|| Error::config("adaptive lawnmower needs a client strawberry field"))?;
    let tomato_budget = (budget as f64 * tomato_share(weights)).floor() as usize;
    let mut plan = CoveragePlan {
        path: vec![start],
        spacings: Vec::new(),
    };
    append_sweep(&mut plan, tomato_budget, tomato, Pattern::Lawnmower);
    let used = plan.path.len() - 1;
    append_sweep(&mut plan, budget.saturating_sub(used), strawberry, Pattern::Lawnmower);
    plan.truncate_to(budget);
    Ok(plan)
}

/// Follows a precomputed path, then stays put.
pub struct PathPlanner {
    name: &'static str,
    build: Box<dyn Fn(usize, Cell) -> CoveragePlan + Send>,
    plan: Option<CoveragePlan>,
    cursor: usize,
}

impl PathPlanner {
    pub fn lawnmower(region: Region) -> Self {
        PathPlanner {
            name: PlannerKind::Lawnmower.as_str(),
            build: Box::new(move |budget, start| plan_lawnmower(budget, region, start)),
            plan: None,
            cursor: 0,
        }
    }

    pub fn spiral(region: Region) -> Self {
        PathPlanner {
            name: PlannerKind::Spiral.as_str(),
            build: Box::new(move |budget, start| plan_spiral(budget, region, start)),
            plan: None,
            cursor: 0,
        }
    }

    pub fn adaptive_lawnmower(geometry: &Geometry, weights: [f64; 3]) -> Result<Self> {
        // Validate once up front; the closure re-plans from the real start.
        plan_adaptive_lawnmower(1, geometry, weights, (0, 0))?;
        let geometry = geometry.clone();
        Ok(PathPlanner {
            name: PlannerKind::AdaptiveLawnmower.as_str(),
            build: Box::new(move |budget, start| {
                plan_adaptive_lawnmower(budget, &geometry, weights, start)
                    .expect("validated at construction")
            }),
            plan: None,
            cursor: 0,
        })
    }

    pub fn plan(&self) -> Option<&CoveragePlan> {
        self.plan.as_ref()
    }
}

impl Planner for PathPlanner {
    fn name(&self) -> &'static str {
        self.name
    }

    fn next_move(&mut self, ctx: &PlannerContext<'_>) -> Move {
        let plan = self
            .plan
            .get_or_insert_with(|| (self.build)(ctx.budget.remaining(), ctx.position));
        match plan.path.get(self.cursor + 1) {
            Some(&next) => {
                self.cursor += 1;
                Move::toward(ctx.position, next)
            }
            None => Move::STAY,
        }
    }
}

/// Picks a uniformly random waypoint, walks to it along a king-move
/// geodesic, and repeats.
pub struct RandomWaypoint {
    rng: ChaCha8Rng,
    waypoint: Option<Cell>,
}

impl RandomWaypoint {
    pub fn new(seed: u64) -> Self {
        RandomWaypoint {
            rng: rng::stream(seed, "planner/random-waypoint"),
            waypoint: None,
        }
    }

    pub fn waypoint(&self) -> Option<Cell> {
        self.waypoint
    }

    fn draw(&mut self, width: usize, height: usize) -> Cell {
        (self.rng.gen_range(0..width), self.rng.gen_range(0..height))
    }
}

impl Planner for RandomWaypoint {
    fn name(&self) -> &'static str {
        PlannerKind::RandomWaypoint.as_str()
    }

    fn next_move(&mut self, ctx: &PlannerContext<'_>) -> Move {
        let (w, h) = (ctx.geometry.width(), ctx.geometry.height());
        if w * h <= 1 {
            return Move::STAY;
        }
        let mut target = match self.waypoint {
            Some(wp) => wp,
            None => self.draw(w, h),
        };
        while target == ctx.position {
            target = self.draw(w, h);
        }
        self.waypoint = Some(target);
        Move::toward(ctx.position, target)
    }
}

/// Instantiates the planner for one robot.
pub fn build_planner(
    kind: PlannerKind,
    geometry: &Geometry,
    weights: [f64; 3],
    seed: u64,
    robot_id: usize,
) -> Result<Box<dyn Planner>> {
    Ok(match kind {
        PlannerKind::Lawnmower => Box::new(PathPlanner::lawnmower(geometry.full_region())),
        PlannerKind::Spiral => Box::new(PathPlanner::spiral(geometry.full_region())),
        PlannerKind::AdaptiveLawnmower => {
            Box::new(PathPlanner::adaptive_lawnmower(geometry, weights)?)
        }
        PlannerKind::RandomWaypoint => Box::new(RandomWaypoint::new(rng::derive_seed(
            seed,
            &format!("robot/{robot_id}"),
        ))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    const PAPER_WEIGHTS: [f64; 3] = [1.0, 0.2, 0.1];

    fn drive(planner: &mut dyn Planner, g: &Geometry, start: Cell, steps: usize) -> Vec<Cell> {
        let mut pos = start;
        let mut visited = vec![pos];
        for used in 0..steps {
            let ctx = PlannerContext {
                robot_id: 0,
                position: pos,
                geometry: g,
                budget: PlannerBudget {
                    total_steps: steps,
                    steps_used: used,
                },
                model: None,
            };
            let mv = planner.next_move(&ctx);
            assert!(mv.is_unit());
            let nx = pos.0 as i64 + i64::from(mv.dx);
            let ny = pos.1 as i64 + i64::from(mv.dy);
            assert!(nx >= 0 && ny >= 0 && (nx as usize) < g.width() && (ny as usize) < g.height());
            pos = (nx as usize, ny as usize);
            visited.push(pos);
        }
        visited
    }

    #[test]
    fn lawnmower_zero_area_is_empty_plan() {
        let plan = plan_lawnmower(100, Region::new(3, 3, 3, 8), (0, 0));
        assert!(plan.moves().is_empty());
    }

    #[test]
    fn lawnmower_half_budget_spacing() {
        let plan = plan_lawnmower(50, Region::new(0, 0, 10, 10), (0, 0));
        assert_eq!(plan.spacings, vec![3]);
        assert_eq!(plan.moves().len(), 45);
    }

    #[test]
    fn adaptive_prefers_tomato_density() {
        let g = Geometry::miniberry(30);
        let plan = plan_adaptive_lawnmower(499, &g, PAPER_WEIGHTS, (0, 0)).unwrap();
        assert_eq!(plan.spacings.len(), 2);
        assert!(plan.spacings[0] < plan.spacings[1], "{:?}", plan.spacings);
        assert!(plan.path.len() <= 500);
    }

    #[test]
    fn adaptive_equal_weights_equal_density() {
        let g = Geometry::miniberry(10);
        let plan = plan_adaptive_lawnmower(400, &g, [1.0, 1.0, 1.0], (5, 0)).unwrap();
        assert_eq!(plan.spacings, vec![1, 1]);
        let plan = plan_adaptive_lawnmower(64, &g, [1.0, 1.0, 1.0], (5, 0)).unwrap();
        assert_eq!(plan.spacings[0], plan.spacings[1]);
    }

    #[test]
    fn adaptive_short_budget_never_enters_strawberries() {
        let g = Geometry::miniberry(10);
        let plan = plan_adaptive_lawnmower(3, &g, PAPER_WEIGHTS, (5, 0)).unwrap();
        assert_eq!(plan.path.len(), 4);
        assert!(plan.path.iter().all(|&(x, _)| x >= 5), "{:?}", plan.path);
    }

    #[test]
    fn adaptive_visits_tomato_first() {
        let g = Geometry::miniberry(30);
        let plan = plan_adaptive_lawnmower(499, &g, PAPER_WEIGHTS, (0, 0)).unwrap();
        // The start cell is where the robot is dropped, not a planned visit.
        let first_tomato = plan.path.iter().skip(1).position(|&(x, _)| x >= 15).unwrap();
        let first_strawberry_after = plan
            .path
            .iter()
            .skip(1 + first_tomato)
            .position(|&(x, _)| x < 15)
            .map(|p| p + first_tomato);
        assert!(first_strawberry_after.is_some());
        assert!(plan.path[1..=first_tomato].iter().all(|&(_, y)| y == 0));
    }

    #[test]
    fn path_planners_cover_miniberry_10() {
        let g = Geometry::miniberry(10);
        for mut p in [
            PathPlanner::lawnmower(g.full_region()),
            PathPlanner::spiral(g.full_region()),
        ] {
            let visited: HashSet<_> = drive(&mut p, &g, (0, 0), 100).into_iter().collect();
            assert_eq!(visited.len(), 100, "{}", p.name());
        }
    }

    #[test]
    fn random_waypoint_is_seed_deterministic() {
        let g = Geometry::miniberry(30);
        let a = drive(&mut RandomWaypoint::new(9), &g, (0, 0), 300);
        let b = drive(&mut RandomWaypoint::new(9), &g, (0, 0), 300);
        let c = drive(&mut RandomWaypoint::new(10), &g, (0, 0), 300);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_waypoint_walks_geodesics() {
        let g = Geometry::miniberry(30);
        let mut rw = RandomWaypoint::new(3);
        let mut pos = (4, 4);
        for _ in 0..20 {
            let ctx = PlannerContext {
                robot_id: 0,
                position: pos,
                geometry: &g,
                budget: PlannerBudget::new(1000),
                model: None,
            };
            let mv = rw.next_move(&ctx);
            let wp = rw.waypoint().unwrap();
            assert_ne!(wp, pos);
            let before = coverage::chebyshev(pos, wp);
            pos = (
                (pos.0 as i64 + i64::from(mv.dx)) as usize,
                (pos.1 as i64 + i64::from(mv.dy)) as usize,
            );
            assert_eq!(coverage::chebyshev(pos, wp), before - 1);
        }
    }

    #[test]
    fn waypoint_at_current_position_is_redrawn() {
        let g = Geometry::miniberry(10);
        let mut rw = RandomWaypoint::new(1);
        rw.waypoint = Some((2, 2));
        let ctx = PlannerContext {
            robot_id: 0,
            position: (2, 2),
            geometry: &g,
            budget: PlannerBudget::new(10),
            model: None,
        };
        let mv = rw.next_move(&ctx);
        assert_ne!(rw.waypoint(), Some((2, 2)));
        assert_ne!(mv, Move::STAY);
    }

    #[test]
    fn tomato_share_of_default_weights() {
        assert!((tomato_share(PAPER_WEIGHTS) - 1.1 / 1.4).abs() < 1e-15);
        assert_eq!(tomato_share([1.0, 1.0, 1.0]), 0.5);
    }

    #[test]
    fn planner_names_parse() {
        for k in PlannerKind::ALL {
            assert_eq!(k.as_str().parse::<PlannerKind>().unwrap(), k);
        }
        assert!("rrt".parse::<PlannerKind>().is_err());
    }
}
