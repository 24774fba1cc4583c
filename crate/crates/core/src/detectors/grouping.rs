use std::ops::Range;

/// A per-frame statistic and the rule that turns it into events.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionCurve {
    pub values: Vec<f64>,
    pub threshold: f64,
    pub min_duration_frames: usize,
    /// Runs of at most this many sub-threshold frames do not split an event.
    pub hangover_frames: usize,
}

impl DetectionCurve {
    /// Frame ranges of events, in order.
    pub fn events(&self) -> Vec<Range<usize>> {
        let mut groups: Vec<Range<usize>> = Vec::new();
        for (f, &v) in self.values.iter().enumerate() {
            if v <= self.threshold {
                continue;
            }
            match groups.last_mut() {
                Some(g) if f - g.end <= self.hangover_frames => g.end = f + 1,
                _ => groups.push(f..f + 1),
            }
        }
        groups.retain(|g| g.len() >= self.min_duration_frames.max(1));
        groups
    }

    /// Largest value within `frames`.
    pub fn peak(&self, frames: &Range<usize>) -> (usize, f64) {
        frames.clone().map(|f| (f, self.values[f])).fold((frames.start, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
    }
}
