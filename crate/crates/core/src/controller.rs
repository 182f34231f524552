//! Single-layer perceptron controller: 63 sensor inputs, 2 motor outputs.
//!
//! Weight layout is input-major: the weight from input `i` to output `k`
//! sits at index `i * 2 + k`. There is no bias term.

use crate::genome::Genome;

pub const SENSOR_COUNT: usize = 12;
pub const VALUES_PER_SENSOR: usize = 5;
pub const INPUT_COUNT: usize = 3 + SENSOR_COUNT * VALUES_PER_SENSOR;
pub const OUTPUT_COUNT: usize = 2;
pub const WEIGHT_COUNT: usize = INPUT_COUNT * OUTPUT_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectClass {
    Robot,
    Wall,
    RedToken,
    BlueToken,
}

impl ObjectClass {
    fn flag_offset(self) -> usize {
        match self {
            ObjectClass::Robot => 0,
            ObjectClass::Wall => 1,
            ObjectClass::RedToken => 2,
            ObjectClass::BlueToken => 3,
        }
    }
}

/// One range sensor: normalised distance (1 = nothing in range) and what it hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReading {
    pub distance: f64,
    pub class: Option<ObjectClass>,
}

impl SensorReading {
    pub const NOTHING: SensorReading = SensorReading {
        distance: 1.0,
        class: None,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    pub ground_rgb: [f64; 3],
    pub sensors: [SensorReading; SENSOR_COUNT],
}

impl Default for SensorFrame {
    fn default() -> Self {
        SensorFrame {
            ground_rgb: [1.0; 3],
            sensors: [SensorReading::NOTHING; SENSOR_COUNT],
        }
    }
}

impl SensorFrame {
    /// Flattened network input: ground RGB, then per sensor
    /// `distance, robot, wall, red token, blue token`.
    pub fn to_inputs(&self) -> [f64; INPUT_COUNT] {
        let mut x = [0.0; INPUT_COUNT];
        x[..3].copy_from_slice(&self.ground_rgb);
        for (s, r) in self.sensors.iter().enumerate() {
            let base = 3 + s * VALUES_PER_SENSOR;
            x[base] = r.distance;
            if let Some(c) = r.class {
                x[base + 1 + c.flag_offset()] = 1.0;
            }
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorCommand {
    /// Fraction of max speed, in [-1, 1].
    pub translation: f64,
    /// Fraction of max turn rate, in [-1, 1].
    pub rotation: f64,
}

pub fn forward(genome: &Genome, frame: &SensorFrame) -> MotorCommand {
    forward_inputs(genome.weights(), &frame.to_inputs())
}

pub fn forward_inputs(weights: &[f64], inputs: &[f64; INPUT_COUNT]) -> MotorCommand {
    debug_assert_eq!(weights.len(), WEIGHT_COUNT);
    let mut acc = [0.0f64; OUTPUT_COUNT];
    for (x, w) in inputs.iter().zip(weights.chunks_exact(OUTPUT_COUNT)) {
        acc[0] += w[0] * x;
        acc[1] += w[1] * x;
    }
    MotorCommand {
        translation: acc[0].tanh().clamp(-1.0, 1.0),
        rotation: acc[1].tanh().clamp(-1.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::GENOME_LEN;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_constants() {
        assert_eq!(INPUT_COUNT, 63);
        assert_eq!(WEIGHT_COUNT, 126);
        assert_eq!(GENOME_LEN, 126);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let out = forward(&Genome::zeros(), &SensorFrame::default());
        assert_eq!(
            out,
            MotorCommand {
                translation: 0.0,
                rotation: 0.0
            }
        );
    }

    #[test]
    fn single_weight_dot_product() {
        let mut w = vec![0.0; WEIGHT_COUNT];
        w[0] = 1.0;
        let frame = SensorFrame {
            ground_rgb: [1.0, 0.0, 0.0],
            sensors: [SensorReading {
                distance: 0.0,
                class: None,
            }; SENSOR_COUNT],
        };
        let out = forward(&Genome::new(w, 0.1), &frame);
        assert!((out.translation - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert_eq!(out.rotation, 0.0);
    }

    #[test]
    fn saturation() {
        let inputs = [1.0; INPUT_COUNT];
        let out = forward_inputs(&[10.0; WEIGHT_COUNT], &inputs);
        assert!((out.translation - 1.0).abs() < 1e-12);
        assert!((out.rotation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flag_encoding_is_one_hot() {
        let mut frame = SensorFrame::default();
        frame.sensors[2] = SensorReading {
            distance: 0.25,
            class: Some(ObjectClass::BlueToken),
        };
        let x = frame.to_inputs();
        let base = 3 + 2 * 5;
        assert_eq!(&x[base..base + 5], &[0.25, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(x[3], 1.0);
        assert_eq!(&x[4..8], &[0.0; 4]);
    }

    #[test]
    fn permuting_sensors_and_weight_rows_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let classes = [
            None,
            Some(ObjectClass::Robot),
            Some(ObjectClass::Wall),
            Some(ObjectClass::RedToken),
            Some(ObjectClass::BlueToken),
        ];
        for _ in 0..50 {
            let w: Vec<f64> = (0..WEIGHT_COUNT)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let mut frame = SensorFrame::default();
            for s in frame.sensors.iter_mut() {
                *s = SensorReading {
                    distance: rng.random(),
                    class: classes[rng.random_range(0..classes.len())],
                };
            }
            let (a, b) = (
                rng.random_range(0..SENSOR_COUNT),
                rng.random_range(0..SENSOR_COUNT),
            );
            let mut frame2 = frame;
            frame2.sensors.swap(a, b);
            let mut w2 = w.clone();
            let row = |s: usize| (3 + s * VALUES_PER_SENSOR) * OUTPUT_COUNT;
            for k in 0..VALUES_PER_SENSOR * OUTPUT_COUNT {
                w2.swap(row(a) + k, row(b) + k);
            }
            let o1 = forward(&Genome::new(w, 0.1), &frame);
            let o2 = forward(&Genome::new(w2, 0.1), &frame2);
            assert!((o1.translation - o2.translation).abs() < 1e-12);
            assert!((o1.rotation - o2.rotation).abs() < 1e-12);
            assert!(o1.translation.abs() < 1.0 && o1.rotation.abs() < 1.0);
        }
    }
}
