use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    /// Step size only.
    Fast,
    /// Step size plus covariance accumulation.
    Slow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSchedule {
    pub stages: Vec<(StageKind, usize)>,
}

impl WindowSchedule {
    pub fn total(&self) -> usize {
        self.stages.iter().map(|(_, n)| n).sum()
    }

    /// Stage kind of each warmup iteration, and whether it closes a slow window.
    pub fn iterations(&self) -> impl Iterator<Item = (StageKind, bool)> + '_ {
        self.stages.iter().flat_map(|&(kind, len)| {
            (0..len).map(move |i| (kind, kind == StageKind::Slow && i + 1 == len))
        })
    }
}

const INITIAL_FAST: usize = 75;
const FINAL_FAST: usize = 50;
const FIRST_SLOW: usize = 25;

/// Stan-style warmup windows: a fast stage of 75, doubling slow windows from
/// 25, and a final fast stage of 50. A slow window whose successor would not
/// fit absorbs the remainder. Below 150 iterations the stages are
/// `round(0.15 n)`, the remainder, and `round(0.15 n)`.
pub fn build_schedule(num_warmup: usize) -> Result<WindowSchedule> {
    if num_warmup < 20 {
        return Err(Error::invalid(
            "num_warmup",
            format!("must be at least 20, got {num_warmup}"),
        ));
    }
    if num_warmup < INITIAL_FAST + FIRST_SLOW + FINAL_FAST {
        let fast = (0.15 * num_warmup as f64).round() as usize;
        let slow = num_warmup - 2 * fast;
        return Ok(WindowSchedule {
            stages: vec![
                (StageKind::Fast, fast),
                (StageKind::Slow, slow),
                (StageKind::Fast, fast),
            ],
        });
    }

    let slow_end = num_warmup - FINAL_FAST;
    let mut stages = vec![(StageKind::Fast, INITIAL_FAST)];
    let mut start = INITIAL_FAST;
    let mut size = FIRST_SLOW;
    while start < slow_end {
        let mut end = start + size;
        if end + 2 * size > slow_end {
            end = slow_end;
        }
        stages.push((StageKind::Slow, end - start));
        start = end;
        size *= 2;
    }
    stages.push((StageKind::Fast, FINAL_FAST));
    Ok(WindowSchedule { stages })
}
