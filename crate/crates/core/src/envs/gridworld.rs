use super::{Outcome, TabularMdp};
use crate::error::{Error, Result};
use crate::kv::KeyValues;
use std::fmt;
use std::str::FromStr;

/// Move actions in index order; ties in greedy selection go to `Up`.
pub const GRID_ACTIONS: [WindDir; 4] = [WindDir::Up, WindDir::Right, WindDir::Down, WindDir::Left];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindDir {
    Up,
    Right,
    Down,
    Left,
}

impl WindDir {
    fn delta(self) -> (i64, i64) {
        match self {
            WindDir::Up => (0, -1),
            WindDir::Right => (1, 0),
            WindDir::Down => (0, 1),
            WindDir::Left => (-1, 0),
        }
    }
}

impl FromStr for WindDir {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "up" => Ok(WindDir::Up),
            "right" => Ok(WindDir::Right),
            "down" => Ok(WindDir::Down),
            "left" => Ok(WindDir::Left),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

impl fmt::Display for WindDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WindDir::Up => "up",
            WindDir::Right => "right",
            WindDir::Down => "down",
            WindDir::Left => "left",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridObject {
    /// `(column, row)`, row 0 at the top.
    pub cell: (usize, usize),
    pub reward: f64,
}

/// Layout of a gridworld task.
///
/// File form (flat `key = value`):
///
/// ```text
/// width = 7
/// height = 1
/// start = 2,0
/// objects = 0,0:1 6,0:10
/// wind_dir = none
/// wind_prob = 0
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub objects: Vec<GridObject>,
    pub wind_dir: Option<WindDir>,
    pub wind_prob: f64,
    /// Entering a negative object ends the episode. When false, negative
    /// cells are permanent penalty cells the agent may cross.
    pub negative_terminal: bool,
}

impl GridConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let cfg = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    /// Reads the grid keys, leaving any others for the caller.
    pub fn from_kv(kv: &mut KeyValues) -> Result<Self> {
        let width = kv.require::<usize>("width")?;
        let height = kv.require::<usize>("height")?;
        let start_raw = kv.require_str("start")?;
        let start = parse_cell(&start_raw).map_err(|m| Error::config("start", m))?;
        let objects = match kv.take_str("objects") {
            None => Vec::new(),
            Some(list) => list
                .split_whitespace()
                .map(|item| {
                    let (cell, reward) = item
                        .split_once(':')
                        .ok_or_else(|| format!("`{item}` is not cell:reward"))?;
                    let cell = parse_cell(cell)?;
                    let reward = reward
                        .parse::<f64>()
                        .map_err(|e| format!("bad reward in `{item}`: {e}"))?;
                    Ok(GridObject { cell, reward })
                })
                .collect::<std::result::Result<Vec<_>, String>>()
                .map_err(|m| Error::config("objects", m))?,
        };
        let wind_dir = match kv.take_str("wind_dir") {
            None => None,
            Some(s) if s.eq_ignore_ascii_case("none") => None,
            Some(s) => Some(s.parse::<WindDir>().map_err(|m| Error::config("wind_dir", m))?),
        };
        let wind_prob = kv.take_or::<f64>("wind_prob", 0.0)?;
        let negative_terminal = kv.take_or::<bool>("negative_terminal", true)?;
        Ok(GridConfig {
            width,
            height,
            start,
            objects,
            wind_dir,
            wind_prob,
            negative_terminal,
        })
    }

    /// Serialises back to the flat file form.
    pub fn to_kv_string(&self) -> String {
        let objects: Vec<String> = self
            .objects
            .iter()
            .map(|o| format!("{},{}:{}", o.cell.0, o.cell.1, o.reward))
            .collect();
        format!(
            "width = {}\nheight = {}\nstart = {},{}\nobjects = {}\nwind_dir = {}\nwind_prob = {}\nnegative_terminal = {}\n",
            self.width,
            self.height,
            self.start.0,
            self.start.1,
            objects.join(" "),
            self.wind_dir.map_or("none".to_string(), |d| d.to_string()),
            self.wind_prob,
            self.negative_terminal
        )
    }
}

fn parse_cell(s: &str) -> std::result::Result<(usize, usize), String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("`{s}` is not a cell `x,y`"))?;
    let x = x.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}"))?;
    let y = y.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}"))?;
    Ok((x, y))
}

/// A compiled gridworld: the MDP plus the state-index bookkeeping.
///
/// States are `(cell, set of collected positive objects)`; collecting the
/// last positive object enters the single absorbing terminal state.
#[derive(Debug, Clone)]
pub struct Gridworld {
    config: GridConfig,
    positives: Vec<usize>,
    mdp: TabularMdp,
}

impl Gridworld {
    pub fn new(config: GridConfig) -> Result<Self> {
        let (w, h) = (config.width, config.height);
        if w == 0 || h == 0 {
            return Err(Error::param("width", "grid must be non-empty"));
        }
        let in_grid = |(x, y): (usize, usize)| x < w && y < h;
        if !in_grid(config.start) {
            return Err(Error::param("start", "outside the grid"));
        }
        if !(0.0..=1.0).contains(&config.wind_prob) {
            return Err(Error::param("wind_prob", format!("{} is not a probability", config.wind_prob)));
        }
        if config.wind_prob > 0.0 && config.wind_dir.is_none() {
            return Err(Error::param("wind_dir", "wind probability given without a direction"));
        }
        for (i, o) in config.objects.iter().enumerate() {
            if !in_grid(o.cell) {
                return Err(Error::param("objects", format!("object {i} outside the grid")));
            }
            if o.cell == config.start {
                return Err(Error::param("start", "start cell holds an object"));
            }
            if o.reward == 0.0 || !o.reward.is_finite() {
                return Err(Error::param("objects", format!("object {i} needs a non-zero reward")));
            }
            if config.objects[..i].iter().any(|p| p.cell == o.cell) {
                return Err(Error::param("objects", format!("two objects share cell {:?}", o.cell)));
            }
        }
        let positives: Vec<usize> = config
            .objects
            .iter()
            .enumerate()
            .filter(|(_, o)| o.reward > 0.0)
            .map(|(i, _)| i)
            .collect();
        if positives.len() > 16 {
            return Err(Error::param("objects", "at most 16 positive objects"));
        }
        if positives.is_empty() {
            return Err(Error::param("objects", "need at least one positive object"));
        }

        let cells = w * h;
        let full_mask = (1usize << positives.len()) - 1;
        let terminal_state = full_mask * cells;
        let num_states = terminal_state + 1;
        let cell_index = |(x, y): (usize, usize)| y * w + x;
        let shift = |(x, y): (usize, usize), d: WindDir| {
            let (dx, dy) = d.delta();
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                (x, y)
            } else {
                (nx as usize, ny as usize)
            }
        };

        let mut outcomes = Vec::with_capacity(num_states * 4);
        for mask in 0..full_mask {
            for y in 0..h {
                for x in 0..w {
                    for &dir in &GRID_ACTIONS {
                        let moved = shift((x, y), dir);
                        let mut landings = vec![(moved, 1.0 - config.wind_prob)];
                        if let Some(wind) = config.wind_dir {
                            landings.push((shift(moved, wind), config.wind_prob));
                        }
                        let row = landings
                            .into_iter()
                            .map(|(cell, prob)| {
                                let (next, reward) = land(
                                    &config,
                                    &positives,
                                    mask,
                                    cell,
                                    cells,
                                    terminal_state,
                                    cell_index,
                                );
                                Outcome { next, prob, reward }
                            })
                            .collect();
                        outcomes.push(row);
                    }
                }
            }
        }
        for _ in 0..4 {
            outcomes.push(vec![Outcome { next: terminal_state, prob: 1.0, reward: 0.0 }]);
        }

        let mut start = vec![0.0; num_states];
        start[cell_index(config.start)] = 1.0;
        let mut terminal = vec![false; num_states];
        terminal[terminal_state] = true;
        let mdp = TabularMdp::new(num_states, 4, outcomes, start, terminal)?;
        Ok(Gridworld { config, positives, mdp })
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn into_mdp(self) -> TabularMdp {
        self.mdp
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn num_positive(&self) -> usize {
        self.positives.len()
    }

    /// State index of standing on `cell` having collected the positive
    /// objects in `collected` (bit `i` is the `i`-th positive object in
    /// config order). `None` if every positive object is collected.
    pub fn state_of(&self, cell: (usize, usize), collected: usize) -> Option<usize> {
        let full = (1usize << self.positives.len()) - 1;
        if collected >= full || cell.0 >= self.config.width || cell.1 >= self.config.height {
            return None;
        }
        let cells = self.config.width * self.config.height;
        Some(collected * cells + cell.1 * self.config.width + cell.0)
    }
}

fn land(
    config: &GridConfig,
    positives: &[usize],
    mask: usize,
    cell: (usize, usize),
    cells: usize,
    terminal_state: usize,
    cell_index: impl Fn((usize, usize)) -> usize,
) -> (usize, f64) {
    let full = (1usize << positives.len()) - 1;
    let here = config.objects.iter().position(|o| o.cell == cell);
    match here {
        Some(i) if config.objects[i].reward > 0.0 => {
            let bit = positives.iter().position(|&p| p == i).expect("positive object");
            if mask & (1 << bit) != 0 {
                (mask * cells + cell_index(cell), 0.0)
            } else {
                let next_mask = mask | (1 << bit);
                let next = if next_mask == full {
                    terminal_state
                } else {
                    next_mask * cells + cell_index(cell)
                };
                (next, config.objects[i].reward)
            }
        }
        Some(i) => {
            let next = if config.negative_terminal {
                terminal_state
            } else {
                mask * cells + cell_index(cell)
            };
            (next, config.objects[i].reward)
        }
        None => (mask * cells + cell_index(cell), 0.0),
    }
}

/// Builds the MDP of a gridworld layout.
pub fn make_gridworld(layout: &GridConfig) -> Result<TabularMdp> {
    Gridworld::new(layout.clone()).map(Gridworld::into_mdp)
}
