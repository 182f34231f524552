//! Circular foraging arena: kinematics, ray-cast sensing, token collection
//! and local broadcast.
//!
//! The arena is centred on the origin. Each step moves every active robot
//! in ascending id order, then runs a broadcast phase on the end-of-step
//! positions so that reception is symmetric between active robots.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::archive::{BehaviourDescriptor, MapArchive};
use crate::controller::{self, ObjectClass, SensorFrame, SensorReading, SENSOR_COUNT};
use crate::genome::Genome;
use crate::geometry::{ray_circle, ray_exit_circle, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct ArenaConfig {
    pub diameter: f64,
    pub robot_radius: f64,
    pub token_radius: f64,
    pub sensor_range: f64,
    pub broadcast_range: f64,
    /// Arena units per step at full translation.
    pub max_speed: f64,
    /// Radians per step at full rotation.
    pub max_turn_rate: f64,
    pub red_tokens: usize,
    pub blue_tokens: usize,
    pub ground_rgb: [f64; 3],
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            diameter: 956.0,
            robot_radius: 5.0,
            token_radius: 5.0,
            sensor_range: 64.0,
            broadcast_range: 64.0,
            max_speed: 2.0,
            max_turn_rate: 30f64.to_radians(),
            red_tokens: 150,
            blue_tokens: 150,
            ground_rgb: [1.0; 3],
        }
    }
}

impl ArenaConfig {
    pub fn radius(&self) -> f64 {
        self.diameter / 2.0
    }

    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let positives = [
            ("diameter", self.diameter),
            ("robot-radius", self.robot_radius),
            ("token-radius", self.token_radius),
            ("sensor-range", self.sensor_range),
            ("broadcast-range", self.broadcast_range),
            ("max-speed", self.max_speed),
            ("max-turn-rate", self.max_turn_rate),
        ];
        for (k, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err((k, format!("must be positive, got {v}")));
            }
        }
        if self.broadcast_range > self.diameter {
            return Err((
                "broadcast-range",
                "must not exceed the arena diameter".into(),
            ));
        }
        if self.red_tokens == 0 || self.blue_tokens == 0 {
            return Err(("tokens", "token counts must be positive".into()));
        }
        Ok(())
    }
}

/// Body-relative sensor angles: seven covering the front 90 degrees, five
/// spread evenly over the remaining 270.
pub fn sensor_angles() -> [f64; SENSOR_COUNT] {
    let mut a = [0.0; SENSOR_COUNT];
    for (k, v) in a.iter_mut().take(7).enumerate() {
        *v = (-45.0 + 15.0 * k as f64).to_radians();
    }
    for k in 0..5 {
        a[7 + k] = (90.0 + 45.0 * k as f64).to_radians();
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenColour {
    Red,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Token {
    pub position: Vec2,
    pub colour: TokenColour,
}

/// What active robots transmit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    LocalMap,
    GenomeWithFitness,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Broadcast {
    Map(Arc<MapArchive>),
    Genome { genome: Arc<Genome>, fitness: u32 },
}

#[derive(Debug, Clone)]
pub struct Robot {
    pub id: usize,
    pub position: Vec2,
    pub heading: f64,
    pub start_position: Vec2,
    pub genome: Option<Arc<Genome>>,
    pub tokens_red: u32,
    pub tokens_blue: u32,
    pub max_displacement: f64,
    /// Shared snapshot; mutate through `Arc::make_mut` so broadcast copies stay frozen.
    pub local_map: Arc<MapArchive>,
    pub received: BTreeMap<usize, Broadcast>,
    pub memory_map: Option<MapArchive>,
}

impl Robot {
    pub fn new(
        id: usize,
        position: Vec2,
        heading: f64,
        genome: Option<Genome>,
        map: MapArchive,
    ) -> Self {
        Robot {
            id,
            position,
            heading,
            start_position: position,
            genome: genome.map(Arc::new),
            tokens_red: 0,
            tokens_blue: 0,
            max_displacement: 0.0,
            local_map: Arc::new(map),
            received: BTreeMap::new(),
            memory_map: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.genome.is_some()
    }

    pub fn fitness(&self) -> u32 {
        self.tokens_red + self.tokens_blue
    }

    /// Fitness and behaviour descriptor accumulated over the current lifetime.
    pub fn lifetime_traits(&self) -> (u32, BehaviourDescriptor) {
        let fitness = self.fitness();
        let red_ratio = if fitness == 0 {
            0.5
        } else {
            self.tokens_red as f64 / fitness as f64
        };
        (
            fitness,
            BehaviourDescriptor::new(self.max_displacement, red_ratio),
        )
    }

    pub fn reset_lifetime(&mut self) {
        self.tokens_red = 0;
        self.tokens_blue = 0;
        self.max_displacement = 0.0;
        self.start_position = self.position;
    }
}

/// Uniform bucket grid over token centres.
#[derive(Debug, Clone)]
struct TokenGrid {
    cell: f64,
    side: usize,
    origin: f64,
    buckets: Vec<Vec<usize>>,
}

impl TokenGrid {
    fn new(radius: f64, cell: f64) -> Self {
        let side = ((2.0 * radius) / cell).ceil() as usize + 1;
        TokenGrid {
            cell,
            side,
            origin: -radius,
            buckets: vec![Vec::new(); side * side],
        }
    }

    fn axis(&self, v: f64) -> usize {
        (((v - self.origin) / self.cell).floor().max(0.0) as usize).min(self.side - 1)
    }

    fn bucket(&self, p: Vec2) -> usize {
        self.axis(p.x) * self.side + self.axis(p.y)
    }

    fn insert(&mut self, idx: usize, p: Vec2) {
        let b = self.bucket(p);
        self.buckets[b].push(idx);
    }

    fn remove(&mut self, idx: usize, p: Vec2) {
        let b = self.bucket(p);
        let v = &mut self.buckets[b];
        if let Some(k) = v.iter().position(|&t| t == idx) {
            v.swap_remove(k);
        }
    }

    /// Calls `f` for every token whose bucket overlaps the square of half-size `r` around `p`.
    fn for_each_near(&self, p: Vec2, r: f64, mut f: impl FnMut(usize)) {
        let (x0, x1) = (self.axis(p.x - r), self.axis(p.x + r));
        let (y0, y1) = (self.axis(p.y - r), self.axis(p.y + r));
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                for &t in &self.buckets[gx * self.side + gy] {
                    f(t);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub config: ArenaConfig,
    pub robots: Vec<Robot>,
    pub tokens: Vec<Token>,
    pub payload: PayloadKind,
    pub iteration: u64,
    grid: TokenGrid,
    ray_dirs: [(f64, f64); SENSOR_COUNT],
}

impl World {
    /// Empty arena with no robots and no tokens.
    pub fn empty(config: ArenaConfig, payload: PayloadKind) -> Self {
        let cell = config.robot_radius + config.sensor_range + config.token_radius;
        let grid = TokenGrid::new(config.radius(), cell);
        let angles = sensor_angles();
        let mut ray_dirs = [(0.0, 0.0); SENSOR_COUNT];
        for (d, a) in ray_dirs.iter_mut().zip(angles) {
            *d = (a.cos(), a.sin());
        }
        World {
            config,
            robots: Vec::new(),
            tokens: Vec::new(),
            payload,
            iteration: 0,
            grid,
            ray_dirs,
        }
    }

    /// Random non-overlapping placement of `genomes.len()` robots and the
    /// configured tokens. Every robot starts active with an empty map.
    pub fn populate<R: Rng + ?Sized>(
        config: ArenaConfig,
        payload: PayloadKind,
        genomes: Vec<Genome>,
        empty_map: &MapArchive,
        rng: &mut R,
    ) -> Self {
        let mut w = World::empty(config, payload);
        let rr = w.config.robot_radius;
        for (id, g) in genomes.into_iter().enumerate() {
            let pos = loop {
                let p = random_in_disk(rng, w.config.radius() - rr);
                if w.robots.iter().all(|o| o.position.distance(p) >= 2.0 * rr) {
                    break p;
                }
            };
            let heading = rng.random_range(-PI..PI);
            w.robots
                .push(Robot::new(id, pos, heading, Some(g), empty_map.clone()));
        }
        let tr = w.config.token_radius;
        let colours = std::iter::repeat_n(TokenColour::Red, w.config.red_tokens)
            .chain(std::iter::repeat_n(TokenColour::Blue, w.config.blue_tokens));
        for colour in colours {
            let pos = loop {
                let p = random_in_disk(rng, w.config.radius() - tr);
                let clear_robots = w.robots.iter().all(|o| o.position.distance(p) >= rr + tr);
                let clear_tokens = w.tokens.iter().all(|t| t.position.distance(p) >= 2.0 * tr);
                if clear_robots && clear_tokens {
                    break p;
                }
            };
            w.add_token(Token {
                position: pos,
                colour,
            });
        }
        w
    }

    pub fn add_token(&mut self, token: Token) {
        let idx = self.tokens.len();
        self.grid.insert(idx, token.position);
        self.tokens.push(token);
    }

    pub fn token_count(&self, colour: TokenColour) -> usize {
        self.tokens.iter().filter(|t| t.colour == colour).count()
    }

    pub fn active_count(&self) -> usize {
        self.robots.iter().filter(|r| r.is_active()).count()
    }

    /// Sensor frame for robot `id` in the current state.
    pub fn sense(&self, id: usize) -> SensorFrame {
        let cfg = &self.config;
        let me = &self.robots[id];
        let range = cfg.sensor_range;
        let (hc, hs) = (me.heading.cos(), me.heading.sin());
        let mut dirs = [Vec2::ZERO; SENSOR_COUNT];
        let mut origins = [Vec2::ZERO; SENSOR_COUNT];
        let mut best = [(range, None::<ObjectClass>); SENSOR_COUNT];
        for k in 0..SENSOR_COUNT {
            let (c, s) = self.ray_dirs[k];
            let d = Vec2::new(hc, hs).rotate_cs(c, s);
            dirs[k] = d;
            origins[k] = me.position + d * cfg.robot_radius;
            let t = ray_exit_circle(origins[k], d, cfg.radius());
            if t <= range {
                best[k] = (t, Some(ObjectClass::Wall));
            }
        }

        let mut probe = |centre: Vec2, radius: f64, class: ObjectClass| {
            let reach = cfg.robot_radius + range + radius;
            if me.position.distance_sq(centre) > reach * reach {
                return;
            }
            for k in 0..SENSOR_COUNT {
                if let Some(t) = ray_circle(origins[k], dirs[k], centre, radius) {
                    if t <= best[k].0 && (t < best[k].0 || best[k].1.is_none()) {
                        best[k] = (t, Some(class));
                    }
                }
            }
        };

        for other in &self.robots {
            if other.id != id {
                probe(other.position, cfg.robot_radius, ObjectClass::Robot);
            }
        }
        let reach = cfg.robot_radius + range + cfg.token_radius;
        self.grid.for_each_near(me.position, reach, |t| {
            let tok = &self.tokens[t];
            let class = match tok.colour {
                TokenColour::Red => ObjectClass::RedToken,
                TokenColour::Blue => ObjectClass::BlueToken,
            };
            probe(tok.position, cfg.token_radius, class);
        });

        let mut frame = SensorFrame {
            ground_rgb: cfg.ground_rgb,
            sensors: [SensorReading::NOTHING; SENSOR_COUNT],
        };
        for (s, (t, class)) in frame.sensors.iter_mut().zip(best) {
            if class.is_some() {
                *s = SensorReading {
                    distance: (t / range).clamp(0.0, 1.0),
                    class,
                };
            }
        }
        frame
    }

    /// Advances the world by one time step.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for id in 0..self.robots.len() {
            let Some(genome) = self.robots[id].genome.clone() else {
                continue;
            };
            let frame = self.sense(id);
            let cmd = controller::forward(&genome, &frame);
            self.move_robot(id, cmd.translation, cmd.rotation);
            self.collect_tokens(id, rng);
            let r = &mut self.robots[id];
            let disp = r.position.distance(r.start_position);
            if disp > r.max_displacement {
                r.max_displacement = disp;
            }
        }
        self.broadcast_phase();
        self.iteration += 1;
    }

    fn move_robot(&mut self, id: usize, translation: f64, rotation: f64) {
        let cfg = &self.config;
        let r = &self.robots[id];
        let mut heading = r.heading + rotation * cfg.max_turn_rate;
        if heading > PI {
            heading -= 2.0 * PI;
        } else if heading <= -PI {
            heading += 2.0 * PI;
        }
        let target = r.position + Vec2::from_angle(heading) * (translation * cfg.max_speed);
        let limit = cfg.radius() - cfg.robot_radius;
        let min_gap = 2.0 * cfg.robot_radius;
        let blocked = target.norm_sq() > limit * limit
            || self
                .robots
                .iter()
                .any(|o| o.id != id && o.position.distance_sq(target) < min_gap * min_gap);
        let r = &mut self.robots[id];
        r.heading = heading;
        if !blocked {
            r.position = target;
        }
    }

    fn collect_tokens<R: Rng + ?Sized>(&mut self, id: usize, rng: &mut R) {
        let pos = self.robots[id].position;
        let reach = self.config.robot_radius + self.config.token_radius;
        let mut hits = Vec::new();
        self.grid.for_each_near(pos, reach, |t| {
            if self.tokens[t].position.distance_sq(pos) < reach * reach {
                hits.push(t);
            }
        });
        hits.sort_unstable();
        for t in hits {
            match self.tokens[t].colour {
                TokenColour::Red => self.robots[id].tokens_red += 1,
                TokenColour::Blue => self.robots[id].tokens_blue += 1,
            }
            self.respawn_token(t, rng);
        }
    }

    /// Moves token `t` to a uniform random point not overlapping any robot.
    fn respawn_token<R: Rng + ?Sized>(&mut self, t: usize, rng: &mut R) {
        let reach = self.config.robot_radius + self.config.token_radius;
        let p = loop {
            let p = random_in_disk(rng, self.config.radius() - self.config.token_radius);
            if self
                .robots
                .iter()
                .all(|r| r.position.distance_sq(p) >= reach * reach)
            {
                break p;
            }
        };
        self.grid.remove(t, self.tokens[t].position);
        self.tokens[t].position = p;
        self.grid.insert(t, p);
    }

    fn broadcast_phase(&mut self) {
        let range_sq = self.config.broadcast_range * self.config.broadcast_range;
        for s in 0..self.robots.len() {
            let sender = &self.robots[s];
            let payload = match (&sender.genome, self.payload) {
                (None, _) => continue,
                (Some(_), PayloadKind::LocalMap) => Broadcast::Map(Arc::clone(&sender.local_map)),
                (Some(g), PayloadKind::GenomeWithFitness) => Broadcast::Genome {
                    genome: Arc::clone(g),
                    fitness: sender.fitness(),
                },
            };
            let origin = sender.position;
            for r in 0..self.robots.len() {
                if r != s && self.robots[r].position.distance_sq(origin) <= range_sq {
                    self.robots[r].received.insert(s, payload.clone());
                }
            }
        }
    }

    /// Digest of the physical state: iteration, robot poses and counters, tokens.
    pub fn state_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.iteration.to_le_bytes());
        for r in &self.robots {
            h.update((r.id as u64).to_le_bytes());
            for v in [r.position.x, r.position.y, r.heading, r.max_displacement] {
                h.update(v.to_bits().to_le_bytes());
            }
            h.update(r.tokens_red.to_le_bytes());
            h.update(r.tokens_blue.to_le_bytes());
            h.update([r.is_active() as u8]);
            h.update((r.received.len() as u64).to_le_bytes());
        }
        for t in &self.tokens {
            h.update(t.position.x.to_bits().to_le_bytes());
            h.update(t.position.y.to_bits().to_le_bytes());
            h.update([t.colour as u8]);
        }
        h.finalize().into()
    }
}

fn random_in_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Vec2 {
    loop {
        let p = Vec2::new(
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
        );
        if p.norm_sq() <= radius * radius {
            return p;
        }
    }
}
