//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the verdict lines always
//! reach the output. Exits nonzero if any criterion fails.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, Once};
use std::time::Instant;

use acoustic_miner::audio::read_block;
use acoustic_miner::detector::{
    AnalysisError, AnalysisInput, Detection, Detector, DetectorDescriptor, DetectorPlugin, Registry, ValidatedParms,
};
use acoustic_miner::detectors::BandEnergy;
use acoustic_miner::events::{read_raven_table, write_raven_table, Event};
use acoustic_miner::scheduler::{compute_rate, BlockStatus};
use acoustic_miner::{ArchiveMap, RunReport};
use acoustic_miner_cli::{cmd_validate, exit, index, run, run_with, RunConfig, Workers};
use acoustic_miner_testkit::scenario::BASE_EPOCH;
use acoustic_miner_testkit::signal::{add_tone, rng, stamp, to_i16, tone_amplitude_for_band_snr, white_noise};
use acoustic_miner_testkit::{wav, BurstSpec};
use common::{bursts, fixture, silence, timestamps, BAND_PARMS, HOP};
use rand::Rng;

const RATE: u32 = 2000;
const HOP_S: f64 = HOP as f64 / RATE as f64;

enum Verdict {
    Pass(String),
    NotEvaluated(String),
}

type Outcome = Result<Verdict, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        {
            let held: bool = $cond;
            if !held {
                return Err(format!($($fmt)+));
            }
        }
    };
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("rate arithmetic", rate_arithmetic),
        ("parallel correctness", parallel_correctness),
        ("scaling", scaling),
        ("gap fault tolerance", gap_fault_tolerance),
        ("injection recall", injection_recall),
        ("block-size invariance", block_size_invariance),
        ("selection-table round-trip", table_round_trip),
        ("validation gate", validation_gate),
        ("fault isolation", fault_isolation),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(Verdict::Pass(detail)) => println!("criterion {} {name}: PASS ({secs:.1} s) {detail}", i + 1),
            Ok(Verdict::NotEvaluated(why)) => println!("criterion {} {name}: NOT-EVALUATED ({secs:.1} s) {why}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.1} s) {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn pass(detail: impl Into<String>) -> Outcome {
    Ok(Verdict::Pass(detail.into()))
}

// 1 -------------------------------------------------------------------------

fn rate_arithmetic() -> Outcome {
    let cases = [(450.2, 8.0, 0.05), (314.7, 11.5, 0.1), (76.3, 47.1, 0.1), (56.4, 63.8, 0.1)];
    let mut got = Vec::new();
    for (ert, printed, tol) in cases {
        let r = compute_rate(3600.0, ert).map_err(|e| e.to_string())?;
        ensure!((r - printed).abs() <= tol, "ERT {ert}: rate {r:.3} vs printed {printed} (±{tol})");
        got.push(format!("{r:.2}"));
    }
    ensure!(compute_rate(0.0, 5.0) == Ok(0.0), "zero audio must give rate 0");
    ensure!(compute_rate(10.0, 0.0).is_err(), "zero ERT must be rejected");
    pass(format!("rates {}", got.join(", ")))
}

// 2 -------------------------------------------------------------------------

fn parallel_correctness() -> Outcome {
    let f = bursts();
    let mut reference: Option<Vec<u8>> = None;
    let mut rows = 0;
    for w in [1, 2, 4, 8] {
        let mut cfg = f.cfg();
        (cfg.block_len_s, cfg.overlap_s) = (120.0, Some(60.0));
        cfg.workers = Workers::Count(w);
        cfg.output = f.path(&format!("w{w}.txt"));
        let s = run(&cfg).map_err(|e| e.to_string())?;
        ensure!(s.report.blocks.total() >= 8, "only {} blocks", s.report.blocks.total());
        let bytes = fs::read(&cfg.output).map_err(|e| e.to_string())?;
        rows = bytes.iter().filter(|&&b| b == b'\n').count() - 1;
        match &reference {
            None => reference = Some(bytes),
            Some(r) => ensure!(*r == bytes, "{w}-worker table differs from the 1-worker table"),
        }
    }
    pass(format!("workers 1/2/4/8 byte-identical, {rows} rows"))
}

// 3 -------------------------------------------------------------------------

const STRICT_SCALING_ENV: &str = "ACOUSTIC_MINER_STRICT_SCALING";

fn scaling() -> Outcome {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    let strict = std::env::var_os(STRICT_SCALING_ENV).is_some();
    // 64 blocks of 20 s with a heavy power-law configuration.
    let spec = BurstSpec { duration_s: 1280, file_len_s: 320, n_bursts: 0, ..BurstSpec::default() };
    let parms = "detector = power_law\nnfft = 1024\nhop = 32\nnu_frames = 61\n";
    let f = fixture(&spec, parms);
    let mut cfg = f.cfg();
    (cfg.block_len_s, cfg.overlap_s) = (20.0, Some(0.0));
    let mut ert = Vec::new();
    for w in [1, 8] {
        cfg.workers = Workers::Count(w);
        cfg.output = f.path(&format!("scale{w}.txt"));
        let s = run(&cfg).map_err(|e| e.to_string())?;
        ensure!(s.report.blocks.ok >= 64, "only {} OK blocks", s.report.blocks.ok);
        ert.push(s.report.ert_seconds);
    }
    let ratio = ert[1] / ert[0];
    let detail = format!("ERT(1)={:.2} s ERT(8)={:.2} s ratio={ratio:.2}", ert[0], ert[1]);
    if cpus < 8 && !strict {
        return Ok(Verdict::NotEvaluated(format!(
            "{detail}; needs 8 logical CPUs, found {cpus} (set {STRICT_SCALING_ENV} to enforce)"
        )));
    }
    ensure!(ratio <= 0.5, "{detail} exceeds 0.5");
    pass(detail)
}

// 4 -------------------------------------------------------------------------

type Calls = Arc<Mutex<Vec<(u64, usize)>>>;

/// Wraps a plugin, sharing its descriptor and parameters, and observes each
/// call before delegating.
struct Observed {
    inner: Arc<dyn DetectorPlugin>,
    on_call: Arc<dyn Fn(&AnalysisInput<'_>) + Send + Sync>,
}

struct ObservedInstance {
    inner: Box<dyn Detector>,
    on_call: Arc<dyn Fn(&AnalysisInput<'_>) + Send + Sync>,
}

impl DetectorPlugin for Observed {
    fn descriptor(&self) -> &DetectorDescriptor {
        self.inner.descriptor()
    }

    fn instantiate(&self, parms: &ValidatedParms, rate: u32) -> Result<Box<dyn Detector>, AnalysisError> {
        Ok(Box::new(ObservedInstance { inner: self.inner.instantiate(parms, rate)?, on_call: self.on_call.clone() }))
    }
}

impl Detector for ObservedInstance {
    fn min_window(&self) -> usize {
        self.inner.min_window()
    }

    fn analyze(&mut self, input: &AnalysisInput<'_>) -> Result<Vec<Detection>, AnalysisError> {
        (self.on_call)(input);
        self.inner.analyze(input)
    }
}

fn observed_band_energy(on_call: impl Fn(&AnalysisInput<'_>) + Send + Sync + 'static) -> Registry {
    let mut r = Registry::empty();
    r.register(Arc::new(Observed { inner: Arc::new(BandEnergy::new()), on_call: Arc::new(on_call) }));
    r
}

fn gap_fault_tolerance() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let audio = dir.path().join("audio");
    fs::create_dir(&audio).map_err(|e| e.to_string())?;
    let n = 60 * RATE as usize;
    let amp = tone_amplitude_for_band_snr(20.0, 0.01, 200.0, RATE);
    // Bursts run right up to both edges of the dropout.
    let mut a = white_noise(n, 0.01, 1);
    add_tone(&mut a, RATE, 300.0, amp, n - 3 * RATE as usize, 3 * RATE as usize);
    let mut b = white_noise(n, 0.01, 2);
    add_tone(&mut b, RATE, 300.0, amp, 0, 3 * RATE as usize);
    for (off, x) in [(0, &a), (90, &b)] {
        let path = audio.join(format!("gap_{}.wav", stamp(BASE_EPOCH + off)));
        wav::write_mono16(&path, RATE, &to_i16(x)).map_err(|e| e.to_string())?;
    }
    let map_path = dir.path().join("map.json");
    let map: ArchiveMap = index(&audio, "*.wav", &timestamps(), &map_path).map_err(|e| e.to_string())?;
    let gap = 120_000u64..180_000;
    let s = &map.streams[0];
    ensure!(
        s.gaps.len() == 1 && s.gaps[0].start_sample == gap.start && s.gaps[0].length == gap.end - gap.start,
        "gap indexed as {:?}",
        s.gaps
    );

    let read = read_block(&map, 0, 0, s.total_virtual_samples).map_err(|e| e.to_string())?;
    for (i, (&x, &v)) in read.block.samples.iter().zip(&read.block.validity).enumerate() {
        let padded = gap.contains(&(i as u64));
        ensure!(v != padded, "sample {i}: validity {v}");
        ensure!(!padded || x.to_bits() == 0, "padded sample {i} is {x}");
    }

    fs::write(dir.path().join("band.parm"), BAND_PARMS).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(&map_path, dir.path().join("band.parm"), dir.path().join("events.txt"));
    cfg.workers = Workers::Count(1);
    let calls = Calls::default();
    let log = calls.clone();
    let registry = observed_band_energy(move |input| {
        log.lock().unwrap().push((input.origin, input.samples.len()));
        assert!(input.validity.is_none(), "contiguous detector was handed a mask");
    });
    let summary = run_with(&registry, &cfg).map_err(|e| e.to_string())?;
    let calls = calls.lock().unwrap().clone();
    ensure!(calls == vec![(0, 120_000), (180_000, 120_000)], "detector calls {calls:?}");
    let (g0, g1) = (gap.start as f64 / RATE as f64, gap.end as f64 / RATE as f64);
    let inside: Vec<&Event> = summary.events.iter().filter(|e| e.begin_time < g1 && e.end_time > g0).collect();
    ensure!(inside.is_empty(), "events intersect the gap: {inside:?}");
    ensure!(summary.events.len() == 2, "expected the two edge bursts, got {:?}", summary.events);
    pass(format!("60000 padded zeros, calls {calls:?}, {} events, none in gap", summary.events.len()))
}

// 5 -------------------------------------------------------------------------

fn injection_recall() -> Outcome {
    let f = bursts();
    let s = run(&f.cfg()).map_err(|e| e.to_string())?;
    ensure!(s.events.len() == 20, "{} events, expected 20", s.events.len());
    let mut worst: f64 = 0.0;
    for (e, &(b, en)) in s.events.iter().zip(&f.archive.bursts) {
        let (tb, te) = (b as f64 / RATE as f64, en as f64 / RATE as f64);
        let err = (e.begin_time - tb).abs().max((e.end_time - te).abs());
        ensure!(err <= HOP_S + 1e-9, "event {:.3}-{:.3} vs truth {tb:.3}-{te:.3}", e.begin_time, e.end_time);
        worst = worst.max(err);
    }

    let q = silence();
    let quiet = run(&q.cfg()).map_err(|e| e.to_string())?;
    ensure!(quiet.events.is_empty(), "{} events on silence", quiet.events.len());
    pass(format!("20/20 within ±1 hop (worst {:.1} ms), 0 on silence", worst * 1e3))
}

// 6 -------------------------------------------------------------------------

fn block_size_invariance() -> Outcome {
    let f = bursts();
    let mut lists = Vec::new();
    for block in [120.0, 300.0] {
        let mut cfg = f.cfg();
        (cfg.block_len_s, cfg.overlap_s) = (block, Some(60.0));
        cfg.output = f.path(&format!("b{block}.txt"));
        lists.push(run(&cfg).map_err(|e| e.to_string())?.events);
    }
    let (a, b) = (&lists[0], &lists[1]);
    ensure!(a.len() == b.len(), "{} vs {} events", a.len(), b.len());
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = (x.begin_time - y.begin_time).abs().max((x.end_time - y.end_time).abs());
        ensure!(d <= HOP_S + 1e-9, "{x:?} vs {y:?}");
        ensure!(x.low_freq == y.low_freq && x.high_freq == y.high_freq, "frequency bounds differ: {x:?} vs {y:?}");
        worst = worst.max(d);
    }
    pass(format!("{} events match, worst boundary shift {:.1} ms", a.len(), worst * 1e3))
}

// 7 -------------------------------------------------------------------------

fn table_round_trip() -> Outcome {
    let mut r = rng(2024);
    let events: Vec<Event> = (1..=1000)
        .map(|i| {
            let begin = r.random_range(0.0..86_400.0);
            let low = r.random_range(0.0..900.0);
            Event {
                selection_id: i,
                channel: r.random_range(1..=4),
                begin_time: begin,
                end_time: begin + r.random_range(0.01..30.0),
                low_freq: low,
                high_freq: low + r.random_range(0.1..100.0),
                score: r.random_range(0.0..100.0),
                detector_id: "band_energy".into(),
            }
        })
        .collect();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("t.txt");
    write_raven_table(&events, &path).map_err(|e| e.to_string())?;
    let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let header =
        "Selection\tView\tChannel\tBegin Time (s)\tEnd Time (s)\tLow Freq (Hz)\tHigh Freq (Hz)\tScore\tDetector";
    ensure!(text.lines().next() == Some(header), "header {:?}", text.lines().next());
    ensure!(text.lines().count() == 1001, "{} lines", text.lines().count());
    let back = read_raven_table(&path).map_err(|e| e.to_string())?;
    ensure!(back.len() == events.len(), "{} rows read back", back.len());
    let (mut dt, mut df): (f64, f64) = (0.0, 0.0);
    for (a, b) in events.iter().zip(&back) {
        ensure!(a.selection_id == b.selection_id && a.channel == b.channel, "{a:?} vs {b:?}");
        ensure!(a.detector_id == b.detector_id, "{a:?} vs {b:?}");
        dt = dt.max((a.begin_time - b.begin_time).abs()).max((a.end_time - b.end_time).abs());
        df = df.max((a.low_freq - b.low_freq).abs()).max((a.high_freq - b.high_freq).abs());
    }
    ensure!(dt <= 1e-6, "time error {dt:e}");
    ensure!(df <= 0.05 + 1e-9, "frequency error {df}");
    pass(format!("1000 events, max time error {dt:.1e} s, max frequency error {df:.3} Hz"))
}

// 8 -------------------------------------------------------------------------

fn validation_gate() -> Outcome {
    let f = silence();
    fs::write(f.path("detector.parm"), BAND_PARMS.replace("high_freq = 400", "high_freq = 1500"))
        .map_err(|e| e.to_string())?;
    // With the audio gone, any attempt to read it would surface as an I/O error.
    fs::remove_dir_all(f.path("audio")).map_err(|e| e.to_string())?;
    let code = cmd_validate(&f.config, &Default::default());
    ensure!(code == exit::INVALID, "exit {code}");
    let err = acoustic_miner_cli::validate(&f.cfg()).err().map(|e| e.to_string()).unwrap_or_default();
    ensure!(err.contains("high_freq 1500 exceeds Nyquist 1000"), "message {err:?}");
    pass(format!("exit 3: {err}"))
}

// 9 -------------------------------------------------------------------------

fn fault_isolation() -> Outcome {
    let f = bursts();
    let victim: PathBuf = f.archive.files[5].clone();
    let victim_range = 5 * 60 * RATE as u64..6 * 60 * RATE as u64;
    let once = Arc::new(Once::new());
    let target = victim.clone();
    // Delete the file while the first block is being analyzed.
    let registry = observed_band_energy(move |_| once.call_once(|| fs::remove_file(&target).unwrap()));
    let mut cfg = f.cfg();
    (cfg.block_len_s, cfg.overlap_s) = (120.0, Some(60.0));
    let s = run_with(&registry, &cfg).map_err(|e| e.to_string())?;
    ensure!(!victim.exists(), "victim file still present");

    let mut expected = Vec::new();
    for o in &s.outcomes {
        let touches = o.start_sample < victim_range.end && victim_range.start < o.start_sample + o.length;
        let want = if touches { BlockStatus::IoError } else { BlockStatus::Ok };
        ensure!(o.status == want, "block {} at {} is {:?}", o.block_id, o.start_sample, o.status);
        if touches {
            expected.push(o.block_id);
        }
    }
    ensure!(!expected.is_empty(), "no block touched the victim");
    ensure!(s.exit_code() == exit::OK, "exit {}", s.exit_code());
    let report: RunReport = serde_json::from_str(&fs::read_to_string(&s.report_path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure!(report.failed_block_ids == expected, "report lists {:?}, expected {expected:?}", report.failed_block_ids);
    ensure!(report.blocks.io_error == expected.len(), "report counts {:?}", report.blocks);
    ensure!(report.blocks.ok == s.outcomes.len() - expected.len(), "report counts {:?}", report.blocks);
    pass(format!("blocks {expected:?} IO_ERROR, {} OK, exit 0", report.blocks.ok))
}
