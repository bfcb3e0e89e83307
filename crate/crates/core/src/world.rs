//! Robots, the per-timestep observe-then-move cycle and the observation log.

use std::fmt::Write as _;

use crate::environment::{EnvironmentParams, EnvironmentTensor};
use crate::error::{Error, Result};

/// A unit king move: `dx, dy ∈ {-1, 0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Move {
    pub dx: i8,
    pub dy: i8,
}

impl Move {
    pub const STAY: Move = Move { dx: 0, dy: 0 };

    pub fn new(dx: i8, dy: i8) -> Self {
        Move { dx, dy }
    }

    /// Unit move from `from` toward `to`, one step along each axis.
    pub fn toward(from: (usize, usize), to: (usize, usize)) -> Self {
        let sign = |a: usize, b: usize| match b.cmp(&a) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => 0,
        };
        Move {
            dx: sign(from.0, to.0),
            dy: sign(from.1, to.1),
        }
    }

    pub fn is_unit(self) -> bool {
        self.dx.abs() <= 1 && self.dy.abs() <= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Robot {
    pub id: usize,
    pub position: (usize, usize),
}

/// One robot's noiseless point sample of all three measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub robot_id: usize,
    pub x: usize,
    pub y: usize,
    /// Global timestep index, counted from the start of the run.
    pub timestep: u64,
    pub day: u32,
    /// `[tylcv, ccr, humidity]`.
    pub values: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorldClock {
    /// Step within the current day, `0 <= timestep < steps_per_day`.
    pub timestep: u32,
    pub day: u32,
    pub steps_per_day: u32,
}

/// The environment plus the robots moving through it.
///
/// The environment is frozen while a day's steps run; it advances when the
/// clock rolls over to the next day.
#[derive(Debug, Clone)]
pub struct World {
    env: EnvironmentTensor,
    params: EnvironmentParams,
    robots: Vec<Robot>,
    clock: WorldClock,
    elapsed: u64,
    log: Vec<Observation>,
    warnings: Vec<String>,
    observed_this_step: bool,
}

impl World {
    pub fn new(
        env: EnvironmentTensor,
        params: EnvironmentParams,
        starts: &[(usize, usize)],
        steps_per_day: u32,
    ) -> Result<Self> {
        let (w, h) = (env.width(), env.height());
        let robots = starts
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| {
                if x < w && y < h {
                    Ok(Robot {
                        id,
                        position: (x, y),
                    })
                } else {
                    Err(Error::config(format!(
                        "robot {id} starts at ({x}, {y}), outside the {w}x{h} grid"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let day = env.day();
        Ok(World {
            env,
            params,
            robots,
            clock: WorldClock {
                timestep: 0,
                day,
                steps_per_day,
            },
            elapsed: 0,
            log: Vec::new(),
            warnings: Vec::new(),
            observed_this_step: false,
        })
    }

    pub fn env(&self) -> &EnvironmentTensor {
        &self.env
    }

    pub fn params(&self) -> &EnvironmentParams {
        &self.params
    }

    pub fn robots(&self) -> &[Robot] {
        &self.robots
    }

    pub fn clock(&self) -> WorldClock {
        self.clock
    }

    /// Timesteps completed since the world was created.
    pub fn elapsed(&self) -> u64 {
        self.elapsed
    }

    /// The ordered observation log.
    pub fn observations(&self) -> &[Observation] {
        &self.log
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// First half of a timestep: every robot observes its cell, then moves.
    /// Returns the observations recorded in this step, ordered by robot id.
    ///
    /// Moves that would leave the grid are clamped and logged as warnings.
    pub fn observe_and_move(&mut self, moves: &[Move]) -> Result<&[Observation]> {
        if self.observed_this_step {
            return Err(Error::contract("observe_and_move called twice in one timestep"));
        }
        if moves.len() != self.robots.len() {
            return Err(Error::contract(format!(
                "{} moves for {} robots",
                moves.len(),
                self.robots.len()
            )));
        }
        if let Some(m) = moves.iter().find(|m| !m.is_unit()) {
            return Err(Error::contract(format!("move {m:?} exceeds unit speed")));
        }
        let start = self.log.len();
        let (w, h) = (self.env.width() as i64, self.env.height() as i64);
        for (robot, mv) in self.robots.iter_mut().zip(moves) {
            let (x, y) = robot.position;
            self.log.push(Observation {
                robot_id: robot.id,
                x,
                y,
                timestep: self.elapsed,
                day: self.env.day(),
                values: self.env.read_point(x, y),
            });
            let nx = x as i64 + i64::from(mv.dx);
            let ny = y as i64 + i64::from(mv.dy);
            let cx = nx.clamp(0, w - 1);
            let cy = ny.clamp(0, h - 1);
            if (cx, cy) != (nx, ny) {
                self.warnings.push(format!(
                    "timestep {}: robot {} move {:?} from ({x}, {y}) clamped to the grid",
                    self.elapsed, robot.id, mv
                ));
            }
            robot.position = (cx as usize, cy as usize);
        }
        self.observed_this_step = true;
        Ok(&self.log[start..])
    }

    /// Second half of a timestep: advances the clock, and the environment on
    /// day rollover. Returns `true` when a day boundary was crossed.
    pub fn finish_step(&mut self) -> Result<bool> {
        if !self.observed_this_step {
            return Err(Error::contract("finish_step called before observe_and_move"));
        }
        if self.clock.steps_per_day == 0 {
            return Err(Error::contract("world has no steps per day"));
        }
        self.observed_this_step = false;
        self.elapsed += 1;
        self.clock.timestep += 1;
        if self.clock.timestep == self.clock.steps_per_day {
            self.advance_day();
            return Ok(true);
        }
        Ok(false)
    }

    /// A complete timestep: observe, move, advance the clock.
    pub fn step_world(&mut self, moves: &[Move]) -> Result<Vec<Observation>> {
        let obs = self.observe_and_move(moves)?.to_vec();
        self.finish_step()?;
        Ok(obs)
    }

    /// Advances the environment by one day and resets the in-day clock.
    pub fn advance_day(&mut self) {
        self.env.advance_day(&self.params);
        self.clock.timestep = 0;
        self.clock.day = self.env.day();
    }
}

/// CSV with header `timestep,day,robot_id,x,y,tylcv,ccr,humidity`.
pub fn observations_csv(obs: &[Observation]) -> String {
    let mut out = String::from("timestep,day,robot_id,x,y,tylcv,ccr,humidity\n");
    for o in obs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            o.timestep, o.day, o.robot_id, o.x, o.y, o.values[0], o.values[1], o.values[2]
        );
    }
    out
}
