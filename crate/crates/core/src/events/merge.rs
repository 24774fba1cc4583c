use std::collections::BTreeMap;

use super::Event;
use crate::scheduler::{BlockOutcome, BlockStatus};

/// An interval under consideration for merging, in any time unit.
#[derive(Debug, Clone, PartialEq)]
struct Item {
    group: (u64, String),
    begin: f64,
    end: f64,
    low: f64,
    high: f64,
    score: f64,
}

fn iou(a: &Item, b: &Item) -> f64 {
    let inter = a.end.min(b.end) - a.begin.max(b.begin);
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.end.max(b.end) - a.begin.min(b.begin))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn canonical_order(items: &mut [Item]) {
    items.sort_by(|a, b| {
        a.group
            .cmp(&b.group)
            .then(a.begin.total_cmp(&b.begin))
            .then(a.end.total_cmp(&b.end))
            .then(a.low.total_cmp(&b.low))
            .then(a.high.total_cmp(&b.high))
            .then(a.score.total_cmp(&b.score))
    });
}

/// One pass: union every intersecting pair in a group with IoU at least
/// `threshold`, then replace each cluster by its bounding box and max score.
fn merge_pass(mut items: Vec<Item>, threshold: f64) -> Vec<Item> {
    canonical_order(&mut items);
    let mut uf = UnionFind::new(items.len());
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            // Sorted by begin within a group: nothing later can intersect.
            if items[j].group != items[i].group || items[j].begin >= items[i].end {
                break;
            }
            let v = iou(&items[i], &items[j]);
            if v > 0.0 && v >= threshold {
                uf.union(i, j);
            }
        }
    }
    let mut clusters: BTreeMap<usize, Item> = BTreeMap::new();
    for (i, item) in items.into_iter().enumerate() {
        let root = uf.find(i);
        clusters
            .entry(root)
            .and_modify(|m| {
                m.begin = m.begin.min(item.begin);
                m.end = m.end.max(item.end);
                m.low = m.low.min(item.low);
                m.high = m.high.max(item.high);
                m.score = m.score.max(item.score);
            })
            .or_insert(item);
    }
    clusters.into_values().collect()
}

/// Merges until no pair qualifies. Unions can create new qualifying
/// overlaps, so a single pass is not enough for idempotence.
fn merge_to_fixpoint(mut items: Vec<Item>, threshold: f64) -> Vec<Item> {
    loop {
        let before = items.len();
        items = merge_pass(items, threshold);
        if items.len() == before {
            canonical_order(&mut items);
            return items;
        }
    }
}

/// Region of the timeline a block is responsible for: from the middle of
/// its overlap with the previous block to the middle of its overlap with the
/// next, each widened by an eighth of the overlap so detections straddling
/// the cut are seen by both and merged.
fn ownership(blocks: &[&BlockOutcome]) -> Vec<(f64, f64)> {
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); blocks.len()];
    for (i, pair) in blocks.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let (shared_lo, shared_hi) = (b.start_sample as f64, (a.start_sample + a.length) as f64);
        if shared_hi > shared_lo {
            let cut = (shared_lo + shared_hi) / 2.0;
            let margin = (shared_hi - shared_lo) / 8.0;
            bounds[i].1 = cut + margin;
            bounds[i + 1].0 = cut - margin;
        }
    }
    bounds
}

/// Turns per-block detections into one event list.
///
/// Within each stream, a block keeps only detections whose midpoint lies in
/// the region it owns; this discards pieces of events cut off at a block
/// edge, which the neighbouring block sees whole. The survivors are then
/// clustered per stream and detector by time IoU and each cluster becomes
/// one event spanning its members. Only OK blocks contribute. The result
/// depends only on the set of outcomes, not their order.
pub fn merge_block_detections(outcomes: &[BlockOutcome], iou_threshold: f64) -> Vec<Event> {
    let mut by_stream: BTreeMap<usize, Vec<&BlockOutcome>> = BTreeMap::new();
    for o in outcomes.iter().filter(|o| o.status == BlockStatus::Ok) {
        by_stream.entry(o.stream_id).or_default().push(o);
    }
    let mut events = Vec::new();
    for (stream_id, mut blocks) in by_stream {
        blocks.sort_by_key(|o| (o.start_sample, o.block_id));
        let (channel, rate) = (blocks[0].channel, blocks[0].sample_rate as f64);
        let owned = ownership(&blocks);
        let mut items = Vec::new();
        for (block, (lo, hi)) in blocks.iter().zip(owned) {
            for d in &block.detections {
                let mid = (d.begin_sample + d.end_sample) as f64 / 2.0;
                if mid >= lo && mid < hi {
                    items.push(Item {
                        group: (stream_id as u64, d.detector_id.clone()),
                        begin: d.begin_sample as f64,
                        end: d.end_sample as f64,
                        low: d.low_freq,
                        high: d.high_freq,
                        score: d.score,
                    });
                }
            }
        }
        for m in merge_to_fixpoint(items, iou_threshold) {
            events.push(Event {
                selection_id: 0,
                channel: channel + 1,
                begin_time: m.begin / rate,
                end_time: m.end / rate,
                low_freq: m.low,
                high_freq: m.high,
                score: m.score,
                detector_id: m.group.1,
            });
        }
    }
    finalize(events)
}

/// Merges an event list with the same rule, per channel and detector.
pub fn merge_events(events: &[Event], iou_threshold: f64) -> Vec<Event> {
    let items = events
        .iter()
        .map(|e| Item {
            group: (e.channel as u64, e.detector_id.clone()),
            begin: e.begin_time,
            end: e.end_time,
            low: e.low_freq,
            high: e.high_freq,
            score: e.score,
        })
        .collect();
    let merged = merge_to_fixpoint(items, iou_threshold)
        .into_iter()
        .map(|m| Event {
            selection_id: 0,
            channel: m.group.0 as u16,
            begin_time: m.begin,
            end_time: m.end,
            low_freq: m.low,
            high_freq: m.high,
            score: m.score,
            detector_id: m.group.1,
        })
        .collect();
    finalize(merged)
}

/// Sorts into table order and numbers selections from 1.
pub fn finalize(mut events: Vec<Event>) -> Vec<Event> {
    events.sort_by(|a, b| {
        a.channel
            .cmp(&b.channel)
            .then(a.begin_time.total_cmp(&b.begin_time))
            .then(a.end_time.total_cmp(&b.end_time))
            .then(a.detector_id.cmp(&b.detector_id))
            .then(a.low_freq.total_cmp(&b.low_freq))
            .then(a.high_freq.total_cmp(&b.high_freq))
            .then(a.score.total_cmp(&b.score))
    });
    for (i, e) in events.iter_mut().enumerate() {
        e.selection_id = i + 1;
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::RawDetection;
    use proptest::prelude::*;

    const RATE: u32 = 100;

    fn det(begin: u64, end: u64) -> RawDetection {
        RawDetection {
            begin_sample: begin,
            end_sample: end,
            low_freq: 10.0,
            high_freq: 20.0,
            score: 1.0,
            detector_id: "d".into(),
        }
    }

    fn block(block_id: usize, start: u64, length: u64, dets: Vec<RawDetection>) -> BlockOutcome {
        BlockOutcome {
            block_id,
            stream_id: 0,
            channel: 0,
            start_sample: start,
            length,
            sample_rate: RATE,
            status: BlockStatus::Ok,
            detections: dets,
            elapsed: 0.0,
            message: String::new(),
        }
    }

    fn spans(events: &[Event]) -> Vec<(f64, f64)> {
        events.iter().map(|e| (e.begin_time, e.end_time)).collect()
    }

    #[test]
    fn same_detection_from_two_blocks_is_one_event() {
        // Blocks [0,1000) and [600,1600); the event sits on the cut at 800.
        let outs = vec![block(0, 0, 1000, vec![det(780, 830)]), block(1, 600, 1000, vec![det(780, 830)])];
        let ev = merge_block_detections(&outs, 0.5);
        assert_eq!(spans(&ev), vec![(7.8, 8.3)]);
        assert_eq!(ev[0].selection_id, 1);
        assert_eq!(ev[0].channel, 1);
    }

    #[test]
    fn disjoint_detections_stay_apart() {
        let outs = vec![block(0, 0, 1000, vec![det(100, 200), det(300, 400)])];
        assert_eq!(merge_block_detections(&outs, 0.5).len(), 2);
    }

    #[test]
    fn edge_pieces_are_dropped() {
        // Event [900, 1100) is cut at block 0's end; block 1 sees it whole.
        let outs = vec![block(0, 0, 1000, vec![det(900, 1000)]), block(1, 600, 1000, vec![det(900, 1100)])];
        assert_eq!(spans(&merge_block_detections(&outs, 0.5)), vec![(9.0, 11.0)]);
        // And the mirror: cut at block 1's start.
        let outs = vec![block(0, 0, 1000, vec![det(550, 700)]), block(1, 600, 1000, vec![det(600, 700)])];
        assert_eq!(spans(&merge_block_detections(&outs, 0.5)), vec![(5.5, 7.0)]);
    }

    #[test]
    fn failed_blocks_contribute_nothing() {
        let mut bad = block(1, 600, 1000, vec![det(1200, 1300)]);
        bad.status = BlockStatus::DetectorError;
        let outs = vec![block(0, 0, 1000, vec![det(100, 200)]), bad];
        assert_eq!(spans(&merge_block_detections(&outs, 0.5)), vec![(1.0, 2.0)]);
    }

    /// All-pairs union-find without the sweep, one pass.
    fn brute_force_clusters(ivals: &[(f64, f64)], t: f64) -> Vec<(f64, f64)> {
        let n = ivals.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(p: &mut Vec<usize>, i: usize) -> usize {
            if p[i] == i {
                i
            } else {
                let r = root(p, p[i]);
                p[i] = r;
                r
            }
        }
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (ivals[i], ivals[j]);
                let inter = a.1.min(b.1) - a.0.max(b.0);
                if i != j && inter > 0.0 && inter / (a.1.max(b.1) - a.0.min(b.0)) >= t {
                    let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                    parent[ri] = rj;
                }
            }
        }
        let mut out: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for (i, &iv) in ivals.iter().enumerate() {
            let r = root(&mut parent, i);
            let e = out.entry(r).or_insert(iv);
            e.0 = e.0.min(iv.0);
            e.1 = e.1.max(iv.1);
        }
        let mut v: Vec<_> = out.into_values().collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }

    #[test]
    fn chain_closes_transitively() {
        // A~B and B~C at IoU 0.8; A~C only 7/11, below the threshold.
        let (a, b, c) = ((0.0, 90.0), (10.0, 100.0), (20.0, 110.0));
        let events: Vec<Event> = [a, b, c]
            .iter()
            .map(|&(s, e)| Event {
                selection_id: 0,
                channel: 1,
                begin_time: s,
                end_time: e,
                low_freq: 1.0,
                high_freq: 2.0,
                score: 1.0,
                detector_id: "d".into(),
            })
            .collect();
        let merged = merge_events(&events, 0.8);
        assert_eq!(spans(&merged), vec![(0.0, 110.0)]);
        assert_eq!(spans(&merged), brute_force_clusters(&[a, b, c], 0.8));
        assert_eq!(brute_force_clusters(&[a, c], 0.8).len(), 2);
    }

    fn arb_events() -> impl Strategy<Value = Vec<Event>> {
        prop::collection::vec((0u16..2, 0u32..500, 1u32..80, 0u8..2, 0.0f64..10.0), 0..30).prop_map(|v| {
            v.into_iter()
                .map(|(ch, b, len, d, score)| Event {
                    selection_id: 0,
                    channel: ch + 1,
                    begin_time: b as f64 / 10.0,
                    end_time: (b + len) as f64 / 10.0,
                    low_freq: 5.0,
                    high_freq: 15.0 + d as f64,
                    score,
                    detector_id: if d == 0 { "a".into() } else { "b".into() },
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn merging_twice_changes_nothing(events in arb_events(), t in 0.05f64..1.0) {
            let once = merge_events(&events, t);
            prop_assert_eq!(merge_events(&once, t), once);
        }

        #[test]
        fn result_ignores_input_order(events in arb_events(), t in 0.05f64..1.0, seed in any::<u64>()) {
            let mut shuffled = events.clone();
            // Deterministic Fisher-Yates from the seed.
            let mut s = seed | 1;
            for i in (1..shuffled.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                shuffled.swap(i, (s % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(merge_events(&shuffled, t), merge_events(&events, t));
        }

        #[test]
        fn one_pass_matches_brute_force_when_stable(ivals in prop::collection::vec((0u32..300, 1u32..60), 0..15), t in 0.05f64..1.0) {
            let ivals: Vec<(f64, f64)> = ivals.into_iter().map(|(b, l)| (b as f64, (b + l) as f64)).collect();
            let items: Vec<Item> = ivals.iter().map(|&(b, e)| Item { group: (0, "d".into()), begin: b, end: e, low: 0.0, high: 1.0, score: 0.0 }).collect();
            let got: Vec<(f64, f64)> = merge_pass(items, t).into_iter().map(|m| (m.begin, m.end)).collect();
            let mut got = got;
            got.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            prop_assert_eq!(got, brute_force_clusters(&ivals, t));
        }

        #[test]
        fn block_order_is_irrelevant(perm_seed in any::<u64>()) {
            let mut outs = vec![
                block(0, 0, 1000, vec![det(100, 200), det(780, 830)]),
                block(1, 600, 1000, vec![det(780, 830), det(1500, 1600)]),
                block(2, 1200, 1000, vec![det(1500, 1600), det(2000, 2100)]),
            ];
            let want = merge_block_detections(&outs, 0.5);
            outs.rotate_left((perm_seed % 3) as usize);
            if perm_seed % 2 == 0 { outs.swap(0, 1); }
            prop_assert_eq!(merge_block_detections(&outs, 0.5), want);
        }
    }
}
