//! CSV trajectory log.

use std::io::Write;

use crate::env::WorldState;
use crate::error::Result;

/// Buffered rows of `episode, step, action, reward, done, gripper_xyz, object_xyz`.
#[derive(Clone, Debug, Default)]
pub struct TrajectoryLog {
    rows: Vec<TrajectoryRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub episode: usize,
    pub step: usize,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
    pub gripper: [f64; 3],
    pub object: [f64; 3],
}

pub const HEADER: [&str; 11] = [
    "episode", "step", "action", "reward", "done", "gripper_x", "gripper_y", "gripper_z", "object_x",
    "object_y", "object_z",
];

impl TrajectoryLog {
    pub fn push(&mut self, episode: usize, action: usize, reward: f64, done: bool, state: &WorldState) {
        self.rows.push(TrajectoryRow {
            episode,
            step: state.steps,
            action,
            reward,
            done,
            gripper: state.gripper,
            object: state.object,
        });
    }

    pub fn rows(&self) -> &[TrajectoryRow] {
        &self.rows
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER)?;
        for r in &self.rows {
            let mut rec = vec![
                r.episode.to_string(),
                r.step.to_string(),
                r.action.to_string(),
                r.reward.to_string(),
                (r.done as u8).to_string(),
            ];
            rec.extend(r.gripper.iter().chain(&r.object).map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let f = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| crate::Error::invalid(format!("bad trajectory field {}", HEADER[i])))
            };
            rows.push(TrajectoryRow {
                episode: f(0)? as usize,
                step: f(1)? as usize,
                action: f(2)? as usize,
                reward: f(3)?,
                done: f(4)? != 0.0,
                gripper: [f(5)?, f(6)?, f(7)?],
                object: [f(8)?, f(9)?, f(10)?],
            });
        }
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{reset, step, EnvConfig};

    #[test]
    fn csv_round_trip_and_replay() {
        let cfg = EnvConfig::default();
        let (mut s, _) = reset(&cfg, 0).unwrap();
        let mut log = TrajectoryLog::default();
        for a in [1, 4, 5, 5, 0, 6, 2] {
            let t = step(&s, a, &cfg).unwrap();
            log.push(0, a, t.reward, t.done, &t.state);
            s = t.state;
            if t.done {
                break;
            }
        }
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("episode,step,action,reward,done,gripper_x"));
        let back = TrajectoryLog::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows(), log.rows());

        // replaying the action log reproduces every state
        let (mut r, _) = reset(&cfg, 0).unwrap();
        for row in back.rows() {
            r = step(&r, row.action, &cfg).unwrap().state;
            assert_eq!(r.gripper, row.gripper);
            assert_eq!(r.object, row.object);
        }
    }
}
