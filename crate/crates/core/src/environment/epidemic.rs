//! Two-dimensional SIRV epidemic spread over one crop.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng;

/// Per-cell epidemic state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CellState {
    /// Susceptible: a healthy host plant.
    S,
    /// Infected and infectious.
    I,
    /// Removed: the plant died and no longer spreads the disease.
    R,
    /// Not a host for this disease (other crop, water, unplanted land).
    V,
}

impl CellState {
    /// Plant-health value of the state: 1.0 healthy, 0.0 infected or dead.
    /// Non-host cells read as 1.0; they are masked out of scoring.
    #[inline]
    pub fn health(self) -> f32 {
        match self {
            CellState::S | CellState::V => 1.0,
            CellState::I | CellState::R => 0.0,
        }
    }
}

/// Square propagation kernel of side `2 * radius + 1`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Inverse-square distance weights `1 / d^2` for every offset with
    /// Chebyshev distance `1..=radius`, normalized to sum to 1.
    pub fn inverse_square(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::config("kernel radius must be at least 1"));
        }
        let side = 2 * radius + 1;
        let r = radius as i64;
        let mut weights = Vec::with_capacity(side * side);
        for dy in -r..=r {
            for dx in -r..=r {
                let d2 = (dx * dx + dy * dy) as f64;
                weights.push(if d2 == 0.0 { 0.0 } else { 1.0 / d2 });
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Kernel { radius, weights })
    }

    /// Explicit kernel matrix. The side must be odd, the center zero, the
    /// weights finite and non-negative and non-increasing with Euclidean
    /// distance from the center.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let side = rows.len();
        if side.is_multiple_of(2) || rows.iter().any(|r| r.len() != side) {
            return Err(Error::config("kernel must be a square matrix with odd side"));
        }
        let radius = side / 2;
        let weights: Vec<f64> = rows.iter().flatten().copied().collect();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config("kernel weights must be finite and non-negative"));
        }
        if weights[radius * side + radius] != 0.0 {
            return Err(Error::config("kernel center weight must be 0"));
        }
        let r = radius as i64;
        let mut by_distance: Vec<(i64, f64)> = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let w = weights[((dy + r) as usize) * side + (dx + r) as usize];
                by_distance.push((dx * dx + dy * dy, w));
            }
        }
        by_distance.sort_by_key(|&(d2, _)| d2);
        // Every weight must be <= every weight strictly closer to the center.
        let mut floor = f64::INFINITY;
        for ring in by_distance.chunk_by(|a, b| a.0 == b.0) {
            let (lo, hi) = ring
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, w)| (lo.min(w), hi.max(w)));
            if hi > floor {
                return Err(Error::config(
                    "kernel weights must not increase with distance from the center",
                ));
            }
            floor = floor.min(lo);
        }
        Ok(Kernel { radius, weights })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn weight(&self, dx: i64, dy: i64) -> f64 {
        let r = self.radius as i64;
        assert!(dx.abs() <= r && dy.abs() <= r);
        self.weights[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Non-zero `(dx, dy, weight)` taps in row-major order.
    fn taps(&self) -> Vec<(i64, i64, f64)> {
        let r = self.radius as i64;
        let mut taps = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let w = self.weight(dx, dy);
                if w > 0.0 {
                    taps.push((dx, dy, w));
                }
            }
        }
        taps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicParams {
    /// Total likelihood of propagation per day; scales the kernel.
    pub p_total: f64,
    pub kernel: Kernel,
    /// Days an infected cell stays infectious before it is removed.
    pub infect_duration: u32,
    /// Number of initially infected cells.
    pub seeds: usize,
    pub rng_seed: u64,
}

impl EpidemicParams {
    /// Tomato yellow leaf curl virus: fast spread, short infectious period.
    pub fn tylcv(rng_seed: u64) -> Self {
        EpidemicParams {
            p_total: 0.35,
            kernel: Kernel::inverse_square(2).expect("radius 2 is valid"),
            infect_duration: 5,
            seeds: 3,
            rng_seed,
        }
    }

    /// Charcoal rot: slower spread, longer infectious period.
    pub fn ccr(rng_seed: u64) -> Self {
        EpidemicParams {
            p_total: 0.12,
            kernel: Kernel::inverse_square(2).expect("radius 2 is valid"),
            infect_duration: 10,
            seeds: 3,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_total) {
            return Err(Error::config(format!(
                "p_total must lie in [0, 1], got {}",
                self.p_total
            )));
        }
        if self.infect_duration == 0 {
            return Err(Error::config("infect_duration must be at least 1 day"));
        }
        Ok(())
    }
}

/// Epidemic state of one disease over the whole grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicLayer {
    states: Grid<CellState>,
    /// Days spent in state I; meaningful only for I cells.
    age: Vec<u16>,
}

/// Per-state cell counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Census {
    pub s: usize,
    pub i: usize,
    pub r: usize,
    pub v: usize,
}

impl EpidemicLayer {
    /// All host cells susceptible, everything else V.
    pub fn healthy(susceptible: &Grid<bool>) -> Self {
        EpidemicLayer {
            states: susceptible.map(|&s| if s { CellState::S } else { CellState::V }),
            age: vec![0; susceptible.len()],
        }
    }

    pub fn states(&self) -> &Grid<CellState> {
        &self.states
    }

    pub fn age(&self, x: usize, y: usize) -> u16 {
        self.age[self.states.index(x, y)]
    }

    #[inline]
    pub fn state(&self, x: usize, y: usize) -> CellState {
        *self.states.get(x, y)
    }

    /// Overrides one cell. Only S and I cells may be changed, and only to S
    /// or I; V cells stay non-hosts.
    pub fn set_infected(&mut self, x: usize, y: usize, age: u16) -> Result<()> {
        let i = self.states.index(x, y);
        match self.states[i] {
            CellState::S | CellState::I => {
                self.states[i] = CellState::I;
                self.age[i] = age;
                Ok(())
            }
            other => Err(Error::contract(format!(
                "cell ({x}, {y}) is {other:?} and cannot be infected"
            ))),
        }
    }

    /// Places `count` infections uniformly among the susceptible cells.
    pub(crate) fn seed_infections(&mut self, count: usize, rng: &mut impl rand::Rng) -> Result<()> {
        let susceptible = self.census().s;
        if count > susceptible {
            return Err(Error::config(format!(
                "cannot seed {count} infections in {susceptible} susceptible cells"
            )));
        }
        let mut picks = rand::seq::index::sample(rng, susceptible, count).into_vec();
        picks.sort_unstable();
        let mut next = picks.iter().peekable();
        let mut k = 0usize;
        for (i, st) in self.states.as_mut_slice().iter_mut().enumerate() {
            if next.peek().is_none() {
                break;
            }
            if *st == CellState::S {
                if next.peek() == Some(&&k) {
                    *st = CellState::I;
                    self.age[i] = 0;
                    next.next();
                }
                k += 1;
            }
        }
        Ok(())
    }

    pub fn census(&self) -> Census {
        let mut c = Census::default();
        for s in self.states.as_slice() {
            match s {
                CellState::S => c.s += 1,
                CellState::I => c.i += 1,
                CellState::R => c.r += 1,
                CellState::V => c.v += 1,
            }
        }
        c
    }

    /// Health field: 1.0 for S and V, 0.0 for I and R.
    pub fn health_field(&self) -> Grid<f32> {
        self.states.map(|s| s.health())
    }

    /// Advances the layer by one day.
    ///
    /// Each S cell is infected with probability
    /// `min(1, p_total * sum(kernel weight of each infected neighbor))`,
    /// using the start-of-day states. The draw for a cell comes from the
    /// counter stream `(stream_key, day, cell)`. Cells that were infected at
    /// the start of the day age by one and are removed once their age
    /// reaches `infect_duration`.
    pub fn step(&mut self, params: &EpidemicParams, stream_key: u64, day: u32) {
        let (w, h) = (self.states.width() as i64, self.states.height() as i64);
        let infected: Vec<usize> = self
            .states
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == CellState::I)
            .map(|(i, _)| i)
            .collect();
        if infected.is_empty() {
            return;
        }

        let mut newly_infected = Vec::new();
        if params.p_total > 0.0 {
            let taps = params.kernel.taps();
            let mut pressure: Vec<(usize, f64)> = Vec::with_capacity(infected.len() * taps.len());
            for &i in &infected {
                let (x, y) = ((i as i64) % w, (i as i64) / w);
                for &(dx, dy, weight) in &taps {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let n = (ny * w + nx) as usize;
                    if self.states[n] == CellState::S {
                        pressure.push((n, weight));
                    }
                }
            }
            // Stable sort keeps each cell's contributions in a fixed order.
            pressure.sort_by_key(|&(n, _)| n);
            for run in pressure.chunk_by(|a, b| a.0 == b.0) {
                let cell = run[0].0;
                let total: f64 = run.iter().map(|&(_, wgt)| wgt).sum();
                let p = (params.p_total * total).min(1.0);
                if rng::cell_uniform(stream_key, u64::from(day), cell as u64) < p {
                    newly_infected.push(cell);
                }
            }
        }

        for &i in &infected {
            self.age[i] = self.age[i].saturating_add(1);
            if u32::from(self.age[i]) >= params.infect_duration {
                self.states[i] = CellState::R;
            }
        }
        for i in newly_infected {
            self.states[i] = CellState::I;
            self.age[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_neighbor_kernel() -> Kernel {
        Kernel::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    fn params(p_total: f64, kernel: Kernel, duration: u32) -> EpidemicParams {
        EpidemicParams {
            p_total,
            kernel,
            infect_duration: duration,
            seeds: 0,
            rng_seed: 11,
        }
    }

    #[test]
    fn inverse_square_kernel_invariants() {
        let k = Kernel::inverse_square(2).unwrap();
        assert_eq!(k.side(), 5);
        assert_eq!(k.weight(0, 0), 0.0);
        assert!((k.sum() - 1.0).abs() < 1e-15);
        // 1/d^2 ratios: orthogonal neighbor 1, diagonal 1/2, two steps 1/4.
        let unit = k.weight(1, 0);
        assert!((k.weight(1, 1) / unit - 0.5).abs() < 1e-15);
        assert!((k.weight(0, 2) / unit - 0.25).abs() < 1e-15);
        assert!((k.weight(2, 2) / unit - 0.125).abs() < 1e-15);
        assert!(Kernel::from_rows(&[
            vec![k.weight(-1, -1), k.weight(0, -1), k.weight(1, -1)],
            vec![k.weight(-1, 0), 0.0, k.weight(1, 0)],
            vec![k.weight(-1, 1), k.weight(0, 1), k.weight(1, 1)],
        ])
        .is_ok());
    }

    #[test]
    fn explicit_kernel_validation() {
        assert!(Kernel::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(Kernel::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0]
        ])
        .is_err());
        // Diagonal heavier than orthogonal neighbor.
        assert!(Kernel::from_rows(&[
            vec![1.0, 0.5, 1.0],
            vec![0.5, 0.0, 0.5],
            vec![1.0, 0.5, 1.0]
        ])
        .is_err());
        assert!(Kernel::from_rows(&[
            vec![0.0, -1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0]
        ])
        .is_err());
    }

    #[test]
    fn no_infection_means_no_change() {
        let mut layer = EpidemicLayer::healthy(&Grid::filled(5, 5, true));
        let before = layer.clone();
        layer.step(&params(1.0, four_neighbor_kernel(), 3), 1, 0);
        assert_eq!(layer, before);
    }

    #[test]
    fn certain_spread_to_four_neighbors() {
        // 3x3 grid, center infected, p_total = 1 and weight 1 on each
        // orthogonal neighbor: every orthogonal neighbor has p = 1, every
        // corner has p = 0.
        let mut layer = EpidemicLayer::healthy(&Grid::filled(3, 3, true));
        layer.set_infected(1, 1, 0).unwrap();
        layer.step(&params(1.0, four_neighbor_kernel(), 10), 99, 0);
        let expected = [
            [CellState::S, CellState::I, CellState::S],
            [CellState::I, CellState::I, CellState::I],
            [CellState::S, CellState::I, CellState::S],
        ];
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(layer.state(x, y), expected[y][x], "cell ({x},{y})");
            }
        }
        assert_eq!(layer.age(1, 1), 1);
        assert_eq!(layer.age(1, 0), 0);
    }

    #[test]
    fn infection_expires_at_duration() {
        let mut layer = EpidemicLayer::healthy(&Grid::filled(3, 3, true));
        layer.set_infected(0, 0, 4).unwrap();
        layer.step(&params(0.0, four_neighbor_kernel(), 5), 1, 0);
        assert_eq!(layer.state(0, 0), CellState::R);
    }

    #[test]
    fn v_cells_never_infected() {
        let mask = Grid::from_fn(3, 3, |x, _| x != 2);
        let mut layer = EpidemicLayer::healthy(&mask);
        layer.set_infected(1, 1, 0).unwrap();
        layer.step(&params(1.0, four_neighbor_kernel(), 10), 3, 0);
        assert_eq!(layer.state(2, 1), CellState::V);
        assert_eq!(layer.state(0, 1), CellState::I);
        assert!(layer.set_infected(2, 0, 0).is_err());
    }

    #[test]
    fn zero_pressure_probability_only_ages() {
        let mut layer = EpidemicLayer::healthy(&Grid::filled(6, 6, true));
        layer.set_infected(2, 2, 0).unwrap();
        layer.set_infected(4, 4, 0).unwrap();
        for day in 0..3 {
            layer.step(&params(0.0, Kernel::inverse_square(2).unwrap(), 3), 5, day);
            let c = layer.census();
            assert_eq!(c.s, 34);
            assert_eq!(c.i + c.r, 2);
        }
        assert_eq!(layer.census().r, 2);
    }

    #[test]
    fn seeding_rejects_too_many() {
        let mut layer = EpidemicLayer::healthy(&Grid::from_fn(2, 2, |x, _| x == 0));
        let mut rng = rng::stream(1, "t");
        assert!(layer.seed_infections(3, &mut rng).unwrap_err().is_config());
        layer.seed_infections(2, &mut rng).unwrap();
        assert_eq!(layer.census().i, 2);
    }

    #[test]
    fn spread_frequency_matches_probability() {
        // One infected cell with a single neighbor tap of weight 1 and
        // p_total = 0.3: the neighbor is infected on ~30% of days.
        let kernel = Kernel::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let p = params(0.3, kernel, 100);
        let trials = 20_000u32;
        let mut hits = 0;
        for day in 0..trials {
            let mut layer = EpidemicLayer::healthy(&Grid::filled(2, 1, true));
            layer.set_infected(0, 0, 0).unwrap();
            layer.step(&p, 1234, day);
            if layer.state(1, 0) == CellState::I {
                hits += 1;
            }
        }
        let freq = f64::from(hits) / f64::from(trials);
        assert!((freq - 0.3).abs() < 0.015, "observed {freq}");
    }
}
