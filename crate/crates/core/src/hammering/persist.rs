use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::sweep::{ChunkObservation, SweepConfig};
use crate::dram_sim::{DeviceId, Flip, FlipSet};
use crate::error::{Error, Result};
use crate::records;

pub const OBSERVATION_SCHEMA: &str = "rowprint.observations";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Record {
    device: DeviceId,
    chunk: u32,
    seat_epoch: u32,
    repeat: u32,
    config: SweepConfig,
    flips: Vec<Flip>,
}

/// One line per (device, chunk, repeat), in the order given.
pub fn write_observations<W: Write>(out: W, observations: &[ChunkObservation]) -> Result<()> {
    let records = observations.iter().flat_map(|o| {
        o.sweeps.iter().enumerate().map(move |(r, s)| Record {
            device: o.device_id,
            chunk: o.chunk_id,
            seat_epoch: o.seat_epoch,
            repeat: r as u32,
            config: o.config.clone(),
            flips: s.flips.clone(),
        })
    });
    records::write_lines(out, OBSERVATION_SCHEMA, VERSION, records)
}

pub fn read_observations<R: BufRead>(input: R, label: &str) -> Result<Vec<ChunkObservation>> {
    let records: Vec<Record> = records::read_lines(input, OBSERVATION_SCHEMA, VERSION, label)?;
    let mut out: Vec<ChunkObservation> = Vec::new();
    for (i, r) in records.into_iter().enumerate() {
        let line = i + 2;
        if !r.flips.windows(2).all(|w| w[0].index < w[1].index) {
            return Err(Error::Parse {
                path: label.to_string(),
                line,
                message: "flip indices are not strictly increasing".into(),
            });
        }
        let continues = out.last().is_some_and(|o| {
            o.device_id == r.device
                && o.chunk_id == r.chunk
                && o.seat_epoch == r.seat_epoch
                && o.sweeps.len() as u32 == r.repeat
                && r.repeat > 0
        });
        if continues {
            out.last_mut()
                .unwrap()
                .sweeps
                .push(FlipSet { flips: r.flips });
        } else if r.repeat == 0 {
            out.push(ChunkObservation {
                device_id: r.device,
                chunk_id: r.chunk,
                seat_epoch: r.seat_epoch,
                sweeps: vec![FlipSet { flips: r.flips }],
                config: r.config,
            });
        } else {
            return Err(Error::Parse {
                path: label.to_string(),
                line,
                message: format!("repeat {} does not continue the previous record", r.repeat),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram_sim::FlipDirection;

    fn obs(device: u32, chunk: u32, sweeps: Vec<Vec<u64>>) -> ChunkObservation {
        ChunkObservation {
            device_id: DeviceId(device),
            chunk_id: chunk,
            seat_epoch: 0,
            sweeps: sweeps
                .into_iter()
                .map(|s| FlipSet {
                    flips: s
                        .into_iter()
                        .map(|index| Flip {
                            index,
                            direction: FlipDirection::OneToZero,
                        })
                        .collect(),
                })
                .collect(),
            config: SweepConfig::default(),
        }
    }

    #[test]
    fn round_trip() {
        let data = vec![
            obs(0, 3, vec![vec![1, 5], vec![], vec![5]]),
            obs(0, 4, vec![vec![], vec![]]),
            obs(1, 3, vec![vec![7]]),
        ];
        let mut buf = Vec::new();
        write_observations(&mut buf, &data).unwrap();
        assert_eq!(read_observations(&buf[..], "mem").unwrap(), data);
    }

    #[test]
    fn broken_sequence_names_line() {
        let data = vec![obs(0, 3, vec![vec![1], vec![2]])];
        let mut buf = Vec::new();
        write_observations(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(1);
        let text = lines.join("\n");
        match read_observations(text.as_bytes(), "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
