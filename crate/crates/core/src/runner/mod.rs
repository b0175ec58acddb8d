//! Subprocess execution of a [`VariantPlan`].
//!
//! Each entry runs its script with the configuration injected as environment
//! variables, inside its own scratch directory. The verdict comes from the
//! exit status alone: code 0 is PASS, any other code FAIL. A script that
//! cannot be started is ERROR, one killed by a signal is ERROR, and one that
//! outlives its timeout is killed and recorded as TIMEOUT.

mod format;

use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::model::{Assignment, Model};
use crate::plan::{PlanEntry, VariantPlan};

pub use format::{serialize_report, ReportFormat};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
    Timeout,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Error => "ERROR",
            Verdict::Timeout => "TIMEOUT",
        }
    }

    /// Verdict for a process that exited normally.
    pub fn from_exit_code(code: i32) -> Self {
        if code == 0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub test_index: usize,
    pub variant_id: String,
    pub assignment: Assignment,
    pub verdict: Verdict,
    pub exit_code: Option<i32>,
    /// Wall-clock seconds.
    pub duration: f64,
    pub stdout_bytes: u64,
    pub stderr_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunRecord {
    pub fn name(&self) -> String {
        format!("t{}-{}", self.test_index, self.variant_id)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictTotals {
    pub pass: usize,
    pub fail: usize,
    pub error: usize,
    pub timeout: usize,
}

impl VerdictTotals {
    pub fn tally<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Self {
        let mut totals = VerdictTotals::default();
        for r in records {
            match r.verdict {
                Verdict::Pass => totals.pass += 1,
                Verdict::Fail => totals.fail += 1,
                Verdict::Error => totals.error += 1,
                Verdict::Timeout => totals.timeout += 1,
            }
        }
        totals
    }

    pub fn sum(&self) -> usize {
        self.pass + self.fail + self.error + self.timeout
    }
}

/// Records in plan order with the model they were run against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: Model,
    pub parallelism: usize,
    /// Wall-clock seconds for the whole run.
    pub wall_time: f64,
    pub totals: VerdictTotals,
    pub records: Vec<RunRecord>,
}

impl RunReport {
    pub fn new(model: Model, records: Vec<RunRecord>, parallelism: usize, wall_time: f64) -> Self {
        RunReport {
            model,
            parallelism,
            wall_time,
            totals: VerdictTotals::tally(&records),
            records,
        }
    }

    /// Process exit status for a command-line run: 0 when everything passed,
    /// 2 when anything errored or timed out, otherwise 1 when anything failed.
    pub fn exit_code(&self) -> i32 {
        if self.totals.error + self.totals.timeout > 0 {
            2
        } else if self.totals.fail > 0 {
            1
        } else {
            0
        }
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.records.iter().map(|r| r.verdict).collect()
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub parallelism: usize,
    pub default_timeout: Duration,
    /// Parent of the per-entry scratch directories.
    pub work_dir: PathBuf,
    /// Setting this stops the run: live children are killed and entries not
    /// yet finished are recorded as ERROR.
    pub cancel: Arc<AtomicBool>,
}

impl RunOptions {
    pub fn new(work_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            parallelism: 1,
            default_timeout: DEFAULT_TIMEOUT,
            work_dir: work_dir.into(),
            cancel: Arc::new(AtomicBool::new(false)),
        }
    }

    pub fn parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn default_timeout(mut self, timeout: Duration) -> Self {
        self.default_timeout = timeout;
        self
    }
}

/// Runs every entry of `plan`, up to `options.parallelism` at a time, and
/// returns the records in plan order.
pub fn run(plan: &VariantPlan, options: &RunOptions) -> RunReport {
    let started = Instant::now();
    let parallelism = options.parallelism.max(1);
    let workers = parallelism.min(plan.len()).max(1);
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();

    let mut slots: Vec<Option<RunRecord>> = vec![None; plan.len()];
    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= plan.len() {
                    break;
                }
                let record = run_entry(plan, index, options);
                if tx.send((index, record)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (index, record) in rx {
            slots[index] = Some(record);
        }
    });

    let records = slots
        .into_iter()
        .map(|r| r.expect("every plan entry yields a record"))
        .collect();
    RunReport::new(
        plan.model().clone(),
        records,
        parallelism,
        started.elapsed().as_secs_f64(),
    )
}

fn scratch_name(index: usize, entry: &PlanEntry) -> String {
    let id: String = entry
        .script
        .id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{index:06}-t{}-{id}", entry.test_index)
}

fn run_entry(plan: &VariantPlan, index: usize, options: &RunOptions) -> RunRecord {
    let entry = &plan.entries()[index];
    let mut record = RunRecord {
        test_index: entry.test_index,
        variant_id: entry.script.id.clone(),
        assignment: entry.assignment.clone(),
        verdict: Verdict::Error,
        exit_code: None,
        duration: 0.0,
        stdout_bytes: 0,
        stderr_bytes: 0,
        message: None,
    };
    if options.cancel.load(Ordering::SeqCst) {
        record.message = Some("cancelled before start".into());
        return record;
    }
    let scratch = options.work_dir.join(scratch_name(index, entry));
    let timeout = entry
        .script
        .timeout
        .map(Duration::from_secs_f64)
        .unwrap_or(options.default_timeout);

    let started = Instant::now();
    let outcome = execute(plan, index, &scratch, timeout, &options.cancel);
    record.duration = started.elapsed().as_secs_f64();
    record.stdout_bytes = file_len(&scratch.join("stdout"));
    record.stderr_bytes = file_len(&scratch.join("stderr"));
    match outcome {
        Ok(Outcome::Exited(code)) => {
            record.verdict = Verdict::from_exit_code(code);
            record.exit_code = Some(code);
        }
        Ok(Outcome::Signalled(message)) => record.message = Some(message),
        Ok(Outcome::TimedOut) => {
            record.verdict = Verdict::Timeout;
            record.message = Some(format!("killed after {:.3}s", timeout.as_secs_f64()));
        }
        Ok(Outcome::Cancelled) => record.message = Some("cancelled".into()),
        Err(e) => record.message = Some(e),
    }
    if record.verdict == Verdict::Pass {
        let _ = fs::remove_dir_all(&scratch);
    }
    record
}

enum Outcome {
    Exited(i32),
    Signalled(String),
    TimedOut,
    Cancelled,
}

fn execute(
    plan: &VariantPlan,
    index: usize,
    scratch: &Path,
    timeout: Duration,
    cancel: &AtomicBool,
) -> Result<Outcome, String> {
    let entry = &plan.entries()[index];
    let script = &entry.script.path;
    if !script.is_file() {
        return Err(format!("script not found: {}", script.display()));
    }
    let script = fs::canonicalize(script).map_err(|e| format!("{}: {e}", script.display()))?;
    fs::create_dir_all(scratch)
        .map_err(|e| format!("cannot create scratch directory {}: {e}", scratch.display()))?;
    let stdout = File::create(scratch.join("stdout")).map_err(|e| e.to_string())?;
    let stderr = File::create(scratch.join("stderr")).map_err(|e| e.to_string())?;

    let mut command = Command::new(&script);
    command
        .envs(plan.environment(index))
        .current_dir(scratch)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr);
    let mut child = spawn(&mut command).map_err(|e| format!("cannot spawn {}: {e}", script.display()))?;

    let deadline = Instant::now() + timeout;
    let tick = Duration::from_millis(50);
    loop {
        let now = Instant::now();
        if now >= deadline {
            kill(&mut child);
            return Ok(Outcome::TimedOut);
        }
        if cancel.load(Ordering::SeqCst) {
            kill(&mut child);
            return Ok(Outcome::Cancelled);
        }
        let slice = tick.min(deadline - now);
        match child.wait_timeout(slice).map_err(|e| e.to_string())? {
            Some(status) => {
                return Ok(match status.code() {
                    Some(code) => Outcome::Exited(code),
                    None => Outcome::Signalled(describe_signal(&status)),
                });
            }
            None => continue,
        }
    }
}

/// Spawns, retrying briefly on ETXTBSY: a script written moments ago can still
/// be held open for writing by a concurrently forked process.
fn spawn(command: &mut Command) -> io::Result<Child> {
    const ETXTBSY: i32 = 26;
    let mut attempts = 0;
    loop {
        match command.spawn() {
            Err(e) if e.raw_os_error() == Some(ETXTBSY) && attempts < 50 => {
                attempts += 1;
                thread::sleep(Duration::from_millis(10));
            }
            other => return other,
        }
    }
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

#[cfg(unix)]
fn describe_signal(status: &std::process::ExitStatus) -> String {
    use std::os::unix::process::ExitStatusExt;
    match status.signal() {
        Some(sig) => format!("terminated by signal {sig}"),
        None => format!("abnormal termination: {status}"),
    }
}

#[cfg(not(unix))]
fn describe_signal(status: &std::process::ExitStatus) -> String {
    format!("abnormal termination: {status}")
}

fn file_len(path: &Path) -> u64 {
    fs::metadata(path).map(|m| m.len()).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rule() {
        assert_eq!(Verdict::from_exit_code(0), Verdict::Pass);
        assert_eq!(Verdict::from_exit_code(1), Verdict::Fail);
        assert_eq!(Verdict::from_exit_code(-3), Verdict::Fail);
    }

    #[test]
    fn exit_code_precedence() {
        let model = crate::model::parse_model("a: x").unwrap();
        let record = |verdict| RunRecord {
            test_index: 0,
            variant_id: "v".into(),
            assignment: vec![0].into(),
            verdict,
            exit_code: None,
            duration: 0.0,
            stdout_bytes: 0,
            stderr_bytes: 0,
            message: None,
        };
        let report = |vs: &[Verdict]| {
            RunReport::new(model.clone(), vs.iter().map(|&v| record(v)).collect(), 1, 0.0)
        };
        assert_eq!(report(&[Verdict::Pass]).exit_code(), 0);
        assert_eq!(report(&[Verdict::Pass, Verdict::Fail]).exit_code(), 1);
        assert_eq!(report(&[Verdict::Fail, Verdict::Timeout]).exit_code(), 2);
        assert_eq!(report(&[Verdict::Error]).exit_code(), 2);
    }
}
