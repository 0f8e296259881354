//! Interestingness oracles.
//!
//! An oracle maps a [`Candidate`] to a [`Verdict`]. Every call yields exactly
//! one of interesting, not interesting, or a hard [`OracleError`]; there is
//! no third verdict. Exit code 0 from an external command means interesting;
//! any other exit code, death by signal, or timeout means not interesting.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::Candidate;
use crate::universe::Universe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Interesting,
    NotInteresting,
}

impl Verdict {
    pub fn from_bool(interesting: bool) -> Self {
        if interesting {
            Verdict::Interesting
        } else {
            Verdict::NotInteresting
        }
    }

    pub fn is_interesting(self) -> bool {
        self == Verdict::Interesting
    }
}

/// Verdict plus execution metadata. `was_timeout` implies `NotInteresting`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub exit_code: Option<i32>,
    pub wall_time: Duration,
    pub was_timeout: bool,
    /// Served from the duplicate cache instead of being executed.
    pub from_cache: bool,
}

impl Outcome {
    pub fn synthetic(verdict: Verdict) -> Self {
        Self {
            verdict,
            exit_code: None,
            wall_time: Duration::ZERO,
            was_timeout: false,
            from_cache: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("failed to spawn oracle command `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: io::Error,
    },
    #[error("oracle scratch I/O failed: {0}")]
    Io(#[from] io::Error),
    #[error("no truth-table entry for candidate {hex}")]
    MissingEntry { hex: String },
    #[error("invalid oracle specification: {0}")]
    InvalidSpec(String),
}

pub trait Oracle {
    fn evaluate(&mut self, candidate: &Candidate) -> Result<Outcome, OracleError>;
}

impl<F> Oracle for F
where
    F: FnMut(&Candidate) -> Verdict,
{
    fn evaluate(&mut self, candidate: &Candidate) -> Result<Outcome, OracleError> {
        Ok(Outcome::synthetic(self(candidate)))
    }
}

impl Oracle for Box<dyn Oracle + '_> {
    fn evaluate(&mut self, candidate: &Candidate) -> Result<Outcome, OracleError> {
        (**self).evaluate(candidate)
    }
}

/// How the command learns where the candidate file is. `CANDIDATE_PATH`
/// is exported in every mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidatePlaceholder {
    /// Every `{}` inside an argument is replaced by the absolute path.
    Substitute,
    /// The absolute path is appended as the last argument.
    Append,
    /// Nothing is passed; the command reads the fixed file name from its
    /// working directory.
    FixedName,
}

#[derive(Debug, Clone)]
pub struct OracleSpec {
    pub program: String,
    pub args: Vec<String>,
    /// Parent directory for per-test scratch directories.
    pub workdir: PathBuf,
    pub per_test_timeout: Duration,
    pub candidate_placeholder: CandidatePlaceholder,
    /// File name of the candidate inside each scratch directory.
    pub candidate_name: String,
    /// Environment variables copied from this process; everything else is
    /// cleared.
    pub env_passthrough: Vec<String>,
    pub keep_temps: bool,
    /// When set, each test's stdout/stderr go to `test-<n>.stdout` /
    /// `test-<n>.stderr` here.
    pub log_dir: Option<PathBuf>,
}

pub const DEFAULT_ENV_PASSTHROUGH: &[&str] = &[
    "PATH", "HOME", "USER", "TMPDIR", "LANG", "LC_ALL", "LC_CTYPE", "TERM",
];

impl OracleSpec {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            workdir: std::env::temp_dir(),
            per_test_timeout: Duration::from_secs(60),
            candidate_placeholder: CandidatePlaceholder::Append,
            candidate_name: "candidate".to_owned(),
            env_passthrough: DEFAULT_ENV_PASSTHROUGH.iter().map(|s| s.to_string()).collect(),
            keep_temps: false,
            log_dir: None,
        }
    }

    /// Parses a shell-quoted command line. `{}` selects substitution,
    /// otherwise the candidate path is appended.
    pub fn from_command_line(cmd: &str) -> Result<Self, OracleError> {
        let words = shlex::split(cmd)
            .ok_or_else(|| OracleError::InvalidSpec(format!("unbalanced quoting in `{cmd}`")))?;
        let mut words = words.into_iter();
        let program = words
            .next()
            .ok_or_else(|| OracleError::InvalidSpec("empty oracle command".into()))?;
        let args: Vec<String> = words.collect();
        let mut spec = Self::new(program, args);
        if spec.args.iter().any(|a| a.contains("{}")) {
            spec.candidate_placeholder = CandidatePlaceholder::Substitute;
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.program.is_empty() {
            return Err(OracleError::InvalidSpec("empty oracle command".into()));
        }
        if self.per_test_timeout.is_zero() {
            return Err(OracleError::InvalidSpec("per-test timeout must be positive".into()));
        }
        if self.candidate_name.is_empty() || self.candidate_name.contains('/') {
            return Err(OracleError::InvalidSpec(format!(
                "bad candidate file name `{}`",
                self.candidate_name
            )));
        }
        Ok(())
    }

    fn render_args(&self, candidate_path: &Path) -> Vec<OsString> {
        let path = candidate_path.to_string_lossy();
        let mut args: Vec<OsString> = match self.candidate_placeholder {
            CandidatePlaceholder::Substitute => self
                .args
                .iter()
                .map(|a| a.replace("{}", &path).into())
                .collect(),
            _ => self.args.iter().map(OsString::from).collect(),
        };
        if self.candidate_placeholder == CandidatePlaceholder::Append {
            args.push(candidate_path.as_os_str().to_owned());
        }
        args
    }
}

/// Runs the external command once on `rendered` bytes.
///
/// The candidate is written to a fresh scratch directory which becomes the
/// command's working directory. The scratch directory is removed afterwards
/// unless `keep_temps` is set. `test_number` only names log files.
pub fn run_external(
    spec: &OracleSpec,
    rendered: &[u8],
    test_number: u64,
) -> Result<Outcome, OracleError> {
    spec.validate()?;
    fs::create_dir_all(&spec.workdir)?;
    let scratch = tempfile::Builder::new()
        .prefix("monored-")
        .tempdir_in(&spec.workdir)?;
    let candidate_path = scratch.path().join(&spec.candidate_name);
    fs::write(&candidate_path, rendered)?;
    let candidate_path = candidate_path.canonicalize()?;

    let (stdout, stderr) = match &spec.log_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            (
                Stdio::from(File::create(dir.join(format!("test-{test_number}.stdout")))?),
                Stdio::from(File::create(dir.join(format!("test-{test_number}.stderr")))?),
            )
        }
        None => (Stdio::null(), Stdio::null()),
    };

    let mut cmd = Command::new(&spec.program);
    cmd.args(spec.render_args(&candidate_path))
        .current_dir(scratch.path())
        .env_clear()
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr);
    for name in &spec.env_passthrough {
        if let Some(value) = std::env::var_os(name) {
            cmd.env(name, value);
        }
    }
    cmd.env("CANDIDATE_PATH", &candidate_path);
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }

    let started = Instant::now();
    let mut child = cmd.spawn().map_err(|source| OracleError::Spawn {
        program: spec.program.clone(),
        source,
    })?;
    let status = wait_with_timeout(&mut child, spec.per_test_timeout)?;
    let wall_time = started.elapsed();

    if spec.keep_temps {
        let _ = scratch.keep();
    }

    Ok(match status {
        Some(status) => Outcome {
            verdict: Verdict::from_bool(status.success()),
            exit_code: status.code(),
            wall_time,
            was_timeout: false,
            from_cache: false,
        },
        None => Outcome {
            verdict: Verdict::NotInteresting,
            exit_code: None,
            wall_time,
            was_timeout: true,
            from_cache: false,
        },
    })
}

/// `None` means the deadline passed and the process group was killed.
fn wait_with_timeout(
    child: &mut std::process::Child,
    timeout: Duration,
) -> io::Result<Option<ExitStatus>> {
    let deadline = Instant::now() + timeout;
    let mut pause = Duration::from_millis(1);
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Some(status));
        }
        let now = Instant::now();
        if now >= deadline {
            kill_group(child);
            child.wait()?;
            return Ok(None);
        }
        thread::sleep(pause.min(deadline - now));
        pause = (pause * 2).min(Duration::from_millis(20));
    }
}

#[cfg(unix)]
fn kill_group(child: &mut std::process::Child) {
    // The child leads its own process group, so this also reaches anything
    // it forked.
    let pid = child.id() as libc::pid_t;
    unsafe {
        libc::kill(-pid, libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_group(child: &mut std::process::Child) {
    let _ = child.kill();
}

/// External command oracle over a tokenized universe.
pub struct ExternalOracle {
    spec: OracleSpec,
    universe: Universe,
    calls: u64,
}

impl ExternalOracle {
    pub fn new(spec: OracleSpec, universe: Universe) -> Result<Self, OracleError> {
        spec.validate()?;
        Ok(Self {
            spec,
            universe,
            calls: 0,
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn run_bytes(&mut self, bytes: &[u8]) -> Result<Outcome, OracleError> {
        self.calls += 1;
        run_external(&self.spec, bytes, self.calls)
    }
}

impl Oracle for ExternalOracle {
    fn evaluate(&mut self, candidate: &Candidate) -> Result<Outcome, OracleError> {
        let bytes = self.universe.render(candidate);
        self.run_bytes(&bytes)
    }
}

/// Interesting iff `target ⊆ T`. Satisfies monotonicity exactly.
#[derive(Debug, Clone)]
pub struct MonotoneOracle {
    target: Candidate,
}

impl MonotoneOracle {
    pub fn new(target: Candidate) -> Result<Self, OracleError> {
        if target.is_empty() {
            return Err(OracleError::InvalidSpec("monotone target must be non-empty".into()));
        }
        Ok(Self { target })
    }

    pub fn target(&self) -> &Candidate {
        &self.target
    }

    pub fn judge(&self, candidate: &Candidate) -> Verdict {
        Verdict::from_bool(self.target.is_subset_of(candidate))
    }
}

impl Oracle for MonotoneOracle {
    fn evaluate(&mut self, candidate: &Candidate) -> Result<Outcome, OracleError> {
        Ok(Outcome::synthetic(self.judge(candidate)))
    }
}

/// Pure lookup; a missing entry is a harness bug and a hard error.
#[derive(Debug, Clone, Default)]
pub struct TabularOracle {
    table: HashMap<Candidate, Verdict>,
}

impl TabularOracle {
    pub fn new(table: HashMap<Candidate, Verdict>) -> Self {
        Self { table }
    }

    pub fn insert(&mut self, candidate: Candidate, verdict: Verdict) {
        self.table.insert(candidate, verdict);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl FromIterator<(Candidate, Verdict)> for TabularOracle {
    fn from_iter<I: IntoIterator<Item = (Candidate, Verdict)>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl Oracle for TabularOracle {
    fn evaluate(&mut self, candidate: &Candidate) -> Result<Outcome, OracleError> {
        self.table
            .get(candidate)
            .map(|v| Outcome::synthetic(*v))
            .ok_or_else(|| OracleError::MissingEntry {
                hex: candidate.to_hex(),
            })
    }
}

/// Optional exact-duplicate memo. Disabled, it forwards every call.
pub struct CachingOracle<O> {
    inner: O,
    enabled: bool,
    memo: HashMap<Candidate, Outcome>,
    hits: u64,
    executions: u64,
}

impl<O: Oracle> CachingOracle<O> {
    pub fn new(inner: O, enabled: bool) -> Self {
        Self {
            inner,
            enabled,
            memo: HashMap::new(),
            hits: 0,
            executions: 0,
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn executions(&self) -> u64 {
        self.executions
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut O {
        &mut self.inner
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Oracle> Oracle for CachingOracle<O> {
    fn evaluate(&mut self, candidate: &Candidate) -> Result<Outcome, OracleError> {
        if self.enabled {
            if let Some(hit) = self.memo.get(candidate) {
                self.hits += 1;
                return Ok(Outcome {
                    from_cache: true,
                    ..hit.clone()
                });
            }
        }
        let outcome = self.inner.evaluate(candidate)?;
        self.executions += 1;
        if self.enabled {
            self.memo.insert(candidate.clone(), outcome.clone());
        }
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(len: usize, idx: &[usize]) -> Candidate {
        Candidate::from_indices(len, idx.iter().copied())
    }

    #[test]
    fn monotone_oracle_is_superset_test() {
        let mut o = MonotoneOracle::new(set(4, &[2])).unwrap();
        assert_eq!(o.evaluate(&set(4, &[0, 2])).unwrap().verdict, Verdict::Interesting);
        assert_eq!(o.evaluate(&set(4, &[0, 1])).unwrap().verdict, Verdict::NotInteresting);
        assert!(MonotoneOracle::new(Candidate::empty(4)).is_err());
    }

    #[test]
    fn full_target_accepts_only_full() {
        let o = MonotoneOracle::new(Candidate::full(3)).unwrap();
        for mask in 0u32..8 {
            let c = Candidate::from_indices(3, (0..3).filter(|i| mask >> i & 1 == 1));
            assert_eq!(o.judge(&c).is_interesting(), mask == 7);
        }
    }

    #[test]
    fn tabular_missing_entry_is_hard_error() {
        let mut o: TabularOracle = [(set(3, &[0]), Verdict::Interesting)].into_iter().collect();
        assert!(o.evaluate(&set(3, &[0])).unwrap().verdict.is_interesting());
        assert!(matches!(
            o.evaluate(&set(3, &[1])),
            Err(OracleError::MissingEntry { .. })
        ));
    }

    #[test]
    fn cache_disabled_passes_through() {
        let mut calls = 0;
        {
            let counting = |_: &Candidate| {
                calls += 1;
                Verdict::NotInteresting
            };
            let mut o = CachingOracle::new(counting, false);
            o.evaluate(&set(3, &[1])).unwrap();
            o.evaluate(&set(3, &[1])).unwrap();
            assert_eq!(o.hits(), 0);
            assert_eq!(o.executions(), 2);
        }
        assert_eq!(calls, 2);
    }

    #[test]
    fn cache_enabled_memoizes() {
        let mut o = CachingOracle::new(|_: &Candidate| Verdict::Interesting, true);
        let a = o.evaluate(&set(3, &[1])).unwrap();
        let b = o.evaluate(&set(3, &[1])).unwrap();
        assert_eq!(o.executions(), 1);
        assert_eq!(o.hits(), 1);
        assert_eq!(a.verdict, b.verdict);
        assert!(!a.from_cache && b.from_cache);
    }

    #[test]
    fn command_line_parsing() {
        let spec = OracleSpec::from_command_line("sh -c 'exit 0' _").unwrap();
        assert_eq!(spec.program, "sh");
        assert_eq!(spec.args, vec!["-c", "exit 0", "_"]);
        assert_eq!(spec.candidate_placeholder, CandidatePlaceholder::Append);
        let spec = OracleSpec::from_command_line("grep -q x {}").unwrap();
        assert_eq!(spec.candidate_placeholder, CandidatePlaceholder::Substitute);
        assert!(OracleSpec::from_command_line("").is_err());
        assert!(OracleSpec::from_command_line("sh -c 'oops").is_err());
    }

    #[cfg(unix)]
    mod external {
        use super::*;

        fn spec(cmd: &str, dir: &Path) -> OracleSpec {
            let mut s = OracleSpec::from_command_line(cmd).unwrap();
            s.workdir = dir.to_path_buf();
            s
        }

        #[test]
        fn grep_script_maps_exit_zero_to_interesting() {
            let dir = tempfile::tempdir().unwrap();
            let s = spec(
                r#"sh -c 'grep -q "Line 10" "$1" && exit 0 || exit 1' _"#,
                dir.path(),
            );
            let hit = run_external(&s, b"    printf(\"Line 10\\n\"); }\n", 1).unwrap();
            assert_eq!(hit.verdict, Verdict::Interesting);
            assert_eq!(hit.exit_code, Some(0));
            let miss = run_external(&s, b"void main() {\n", 2).unwrap();
            assert_eq!(miss.verdict, Verdict::NotInteresting);
            assert_eq!(miss.exit_code, Some(1));
            // scratch directories are cleaned up
            assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
        }

        #[test]
        fn env_var_and_fixed_name_are_available() {
            let dir = tempfile::tempdir().unwrap();
            let mut s = spec(
                r#"sh -c 'test "$CANDIDATE_PATH" = "$PWD/prog.c" && grep -q ok prog.c'"#,
                dir.path(),
            );
            s.candidate_placeholder = CandidatePlaceholder::FixedName;
            s.candidate_name = "prog.c".into();
            assert!(run_external(&s, b"ok\n", 1).unwrap().verdict.is_interesting());
        }

        #[test]
        fn timeout_is_not_interesting() {
            let dir = tempfile::tempdir().unwrap();
            let mut s = spec("sh -c 'sleep 5; exit 0'", dir.path());
            s.per_test_timeout = Duration::from_millis(100);
            let started = Instant::now();
            let out = run_external(&s, b"x", 1).unwrap();
            assert!(out.was_timeout);
            assert_eq!(out.verdict, Verdict::NotInteresting);
            assert!(started.elapsed() < Duration::from_secs(3));
        }

        #[test]
        fn missing_program_is_hard_error() {
            let dir = tempfile::tempdir().unwrap();
            let s = spec("/nonexistent/monored-oracle", dir.path());
            assert!(matches!(
                run_external(&s, b"x", 1),
                Err(OracleError::Spawn { .. })
            ));
        }

        #[test]
        fn keep_temps_and_logs() {
            let dir = tempfile::tempdir().unwrap();
            let logs = dir.path().join("logs");
            let mut s = spec("sh -c 'cat \"$1\"; echo err >&2' _", dir.path());
            s.keep_temps = true;
            s.log_dir = Some(logs.clone());
            run_external(&s, b"hello", 7).unwrap();
            assert_eq!(fs::read_to_string(logs.join("test-7.stdout")).unwrap(), "hello");
            assert_eq!(fs::read_to_string(logs.join("test-7.stderr")).unwrap(), "err\n");
            let kept = fs::read_dir(dir.path())
                .unwrap()
                .filter_map(|e| e.ok())
                .filter(|e| e.file_name().to_string_lossy().starts_with("monored-"))
                .count();
            assert_eq!(kept, 1);
        }
    }
}
