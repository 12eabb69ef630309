//! Text file formats: the tab-separated event log, the matrix CSV, and policy
//! snapshots.
//!
//! Event log, one event per line:
//!
//! ```text
//! timestamp<TAB>displayed_arm<TAB>click<TAB>u:f1,...,fdu<TAB>a1:f1,...,fd;a2:f1,...,fd
//! ```
//!
//! Matrix CSV: a `rows,cols` header, then one comma-separated row per line,
//! each value written with 17 significant digits.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::FormatError;
use crate::linalg::{InverseState, Matrix};
use crate::policies::{
    Algo, CoLin, FactorUcb, LatentArm, LinUcb, MLinUcb, Policy, RandomPolicy, RidgeBlock,
};
use crate::replay::EventRecord;
use crate::similarity::SimilarityMatrix;
use crate::Candidate;

/// Shortest representation that parses back to the same `f64`.
fn push_float(out: &mut String, v: f64) {
    write!(out, "{v}").expect("writing to a String");
}

fn join_floats(out: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_float(out, *x);
    }
}

fn parse_floats(s: &str, line: usize, what: &str) -> Result<Vec<f64>, FormatError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| FormatError::parse(line, format!("bad number `{t}` in {what}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(FormatError::parse(
                    line,
                    format!("non-finite value in {what}"),
                ))
            }
        })
        .collect()
}

fn valid_arm_id(id: &str) -> bool {
    !id.is_empty() && !id.contains([':', ';', '\t', '\n', '\r'])
}

pub fn format_event(e: &EventRecord) -> String {
    let mut s = String::new();
    write!(s, "{}\t{}\t{}\tu:", e.timestamp, e.displayed_arm, e.click).expect("String");
    join_floats(&mut s, &e.user_features);
    s.push('\t');
    for (i, c) in e.pool.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        s.push_str(&c.arm_id);
        s.push(':');
        join_floats(&mut s, &c.features);
    }
    s
}

pub fn parse_event(text: &str, line: usize) -> Result<EventRecord, FormatError> {
    let fields: Vec<&str> = text.trim_end_matches(['\r', '\n']).split('\t').collect();
    if fields.len() != 5 {
        return Err(FormatError::parse(
            line,
            format!("expected 5 tab-separated fields, found {}", fields.len()),
        ));
    }
    let timestamp = fields[0]
        .trim()
        .parse()
        .map_err(|_| FormatError::parse(line, "bad timestamp"))?;
    let displayed_arm = fields[1].to_string();
    if !valid_arm_id(&displayed_arm) {
        return Err(FormatError::parse(line, "bad displayed arm id"));
    }
    let click: u8 = match fields[2].trim() {
        "0" => 0,
        "1" => 1,
        other => {
            return Err(FormatError::parse(
                line,
                format!("click must be 0 or 1, found `{other}`"),
            ))
        }
    };
    let user = fields[3]
        .strip_prefix("u:")
        .ok_or_else(|| FormatError::parse(line, "user features must start with `u:`"))?;
    let user_features = parse_floats(user, line, "user features")?;
    let mut pool = Vec::new();
    for item in fields[4].split(';') {
        let (id, feats) = item
            .split_once(':')
            .ok_or_else(|| FormatError::parse(line, format!("candidate `{item}` lacks `:`")))?;
        if !valid_arm_id(id) {
            return Err(FormatError::parse(line, format!("bad arm id `{id}`")));
        }
        pool.push(Candidate::new(
            id,
            parse_floats(feats, line, "arm features")?,
        ));
    }
    let d = pool[0].features.len();
    if pool.iter().any(|c| c.features.len() != d) {
        return Err(FormatError::parse(
            line,
            "candidates differ in feature dimension",
        ));
    }
    Ok(EventRecord {
        timestamp,
        displayed_arm,
        click,
        user_features,
        pool,
    })
}

pub fn write_events<W: Write>(mut out: W, events: &[EventRecord]) -> std::io::Result<()> {
    for e in events {
        writeln!(out, "{}", format_event(e))?;
    }
    Ok(())
}

/// Streams events from a log, skipping blank lines and `#` comments. Each item
/// carries its 1-based line number on failure.
pub struct EventReader<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line: 0,
            buf: String::new(),
        }
    }

    pub fn line(&self) -> usize {
        self.line
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<EventRecord, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let t = self.buf.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some(parse_event(&self.buf, self.line));
        }
    }
}

pub fn read_events<R: BufRead>(r: R) -> Result<Vec<EventRecord>, FormatError> {
    EventReader::new(r).collect()
}

// ---------------------------------------------------------------------------

fn push_matrix(out: &mut String, m: &Matrix) {
    writeln!(out, "{},{}", m.rows(), m.cols()).expect("String");
    for r in 0..m.rows() {
        for (c, v) in m.row(r).iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").expect("String");
        }
        out.push('\n');
    }
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut s = String::new();
    push_matrix(&mut s, m);
    s
}

pub fn write_matrix<W: Write>(mut out: W, m: &Matrix) -> std::io::Result<()> {
    out.write_all(format_matrix(m).as_bytes())
}

fn parse_matrix_lines<'a, I>(
    lines: &mut I,
    first_line: usize,
) -> Result<(Matrix, usize), FormatError>
where
    I: Iterator<Item = &'a str>,
{
    let mut lineno = first_line;
    let header = lines
        .next()
        .ok_or_else(|| FormatError::parse(lineno, "missing `rows,cols` header"))?;
    let (r, c) = header
        .trim()
        .split_once(',')
        .ok_or_else(|| FormatError::parse(lineno, "header must be `rows,cols`"))?;
    let rows: usize = r
        .trim()
        .parse()
        .map_err(|_| FormatError::parse(lineno, "bad row count"))?;
    let cols: usize = c
        .trim()
        .parse()
        .map_err(|_| FormatError::parse(lineno, "bad column count"))?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        lineno += 1;
        let l = lines
            .next()
            .ok_or_else(|| FormatError::parse(lineno, "matrix ends early"))?;
        let row = parse_floats(l.trim(), lineno, "matrix row")?;
        if row.len() != cols {
            return Err(FormatError::parse(
                lineno,
                format!("expected {cols} values, found {}", row.len()),
            ));
        }
        data.extend(row);
    }
    Ok((Matrix::from_row_major(rows, cols, data)?, lineno + 1))
}

pub fn parse_matrix(text: &str) -> Result<Matrix, FormatError> {
    let mut lines = text.lines();
    let (m, next) = parse_matrix_lines(&mut lines, 1)?;
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(FormatError::parse(
            next,
            format!("trailing content `{extra}`"),
        ));
    }
    Ok(m)
}

pub fn read_matrix<R: std::io::Read>(mut r: R) -> Result<Matrix, FormatError> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    parse_matrix(&s)
}

/// Reads a W file and checks every similarity-matrix invariant.
pub fn read_similarity<R: std::io::Read>(r: R) -> Result<SimilarityMatrix, FormatError> {
    let m = read_matrix(r)?;
    let mut keep = 100.0;
    // sparsity level is not stored; infer the densest column count for reporting
    let n = m.rows();
    if n > 0 {
        let max_nz = (0..n)
            .map(|c| (0..n).filter(|&r| m.get(r, c) != 0.0).count())
            .max()
            .unwrap_or(n);
        keep = 100.0 * max_nz as f64 / n as f64;
    }
    Ok(SimilarityMatrix::from_matrix(m, keep)?)
}

// ---------------------------------------------------------------------------

pub const SNAPSHOT_MAGIC: &str = "colband-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Generic container behind policy snapshots: ordered `key value` pairs and
/// named matrices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshot {
    pub fields: Vec<(String, String)>,
    pub matrices: Vec<(String, Matrix)>,
}

impl Snapshot {
    fn field(&mut self, k: &str, v: impl ToString) {
        self.fields.push((k.to_string(), v.to_string()));
    }

    fn matrix(&mut self, name: impl Into<String>, m: Matrix) {
        self.matrices.push((name.into(), m));
    }

    fn vector(&mut self, name: impl Into<String>, v: &[f64]) {
        let m = Matrix::from_row_major(1, v.len(), v.to_vec()).expect("finite state");
        self.matrix(name, m);
    }

    fn get(&self, k: &str) -> Result<&str, FormatError> {
        self.fields
            .iter()
            .find(|(key, _)| key == k)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| FormatError::parse(0, format!("snapshot lacks field `{k}`")))
    }

    fn num<T: std::str::FromStr>(&self, k: &str) -> Result<T, FormatError> {
        self.get(k)?
            .parse()
            .map_err(|_| FormatError::parse(0, format!("snapshot field `{k}` is malformed")))
    }

    fn take(&self, name: &str) -> Result<&Matrix, FormatError> {
        self.matrices
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| FormatError::parse(0, format!("snapshot lacks matrix `{name}`")))
    }

    fn take_vec(&self, name: &str) -> Result<Vec<f64>, FormatError> {
        Ok(self.take(name)?.as_slice().to_vec())
    }

    fn take_inverse(&self, name: &str) -> Result<InverseState, FormatError> {
        Ok(InverseState::from_inverse(self.take(name)?.clone())?)
    }

    fn with_prefix<'s>(&'s self, prefix: &'s str) -> impl Iterator<Item = &'s str> + 's {
        self.matrices
            .iter()
            .filter_map(move |(n, _)| n.strip_prefix(prefix))
    }

    pub fn render(&self) -> String {
        let mut s = format!("{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}\n");
        for (k, v) in &self.fields {
            writeln!(s, "{k} {v}").expect("String");
        }
        for (name, m) in &self.matrices {
            writeln!(s, "matrix {name}").expect("String");
            push_matrix(&mut s, m);
        }
        s.push_str("end\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines();
        let head = lines.next().unwrap_or_default();
        let version = head
            .strip_prefix(SNAPSHOT_MAGIC)
            .map(str::trim)
            .ok_or_else(|| FormatError::parse(1, "not a policy snapshot"))?;
        if version != SNAPSHOT_VERSION.to_string() {
            return Err(FormatError::parse(
                1,
                format!("unsupported snapshot version `{version}`"),
            ));
        }
        let mut snap = Snapshot::default();
        let mut lineno = 2;
        loop {
            let line = lines
                .next()
                .ok_or_else(|| FormatError::parse(lineno, "snapshot ends without `end`"))?;
            if line == "end" {
                break;
            }
            if let Some(name) = line.strip_prefix("matrix ") {
                let (m, next) = parse_matrix_lines(&mut lines, lineno + 1)?;
                snap.matrices.push((name.to_string(), m));
                lineno = next;
                continue;
            }
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| FormatError::parse(lineno, "expected `key value`"))?;
            snap.fields.push((k.to_string(), v.to_string()));
            lineno += 1;
        }
        Ok(snap)
    }
}

fn row_vec(m: &Matrix) -> Vec<f64> {
    m.as_slice().to_vec()
}

impl Policy {
    /// Captures all learned state (and the RNG position for the random policy).
    pub fn snapshot(&self) -> Snapshot {
        let mut s = Snapshot::default();
        s.field("algo", self.algo());
        match self {
            Policy::Random(p) => {
                let rng = p.rng();
                let seed: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
                s.field("rng_seed", seed);
                s.field("rng_stream", rng.get_stream());
                s.field("rng_word_pos", rng.get_word_pos());
            }
            Policy::LinUcb(p) => {
                s.field("alpha", p.alpha);
                s.field("d", p.d);
                for (id, block) in &p.arms {
                    s.matrix(format!("arm.inv {id}"), block.inv.inverse().clone());
                    s.vector(format!("arm.b {id}"), &block.b);
                }
            }
            Policy::MLinUcb(p) => {
                s.field("alpha", p.alpha);
                s.field("d", p.d);
                s.field("clusters", p.blocks.len());
                for (i, block) in p.blocks.iter().enumerate() {
                    s.matrix(format!("cluster.inv {i}"), block.inv.inverse().clone());
                    s.vector(format!("cluster.b {i}"), &block.b);
                }
            }
            Policy::CoLin(p) => {
                s.field("alpha", p.alpha);
                s.field("d", p.d);
                s.matrix("w", p.w.entries().clone());
                s.matrix("a_inv", p.a_inv.inverse().clone());
                s.vector("b", &p.b);
                s.matrix("theta", p.theta.clone());
            }
            Policy::FactorUcb(p) => {
                s.field("alpha1", p.alpha1);
                s.field("alpha2", p.alpha2);
                s.field("d", p.d);
                s.field("dl", p.dl);
                s.field("seed", p.seed);
                s.field("latent_init_scale", p.latent_init_scale);
                s.matrix("w", p.w.entries().clone());
                s.matrix("a_inv", p.a_inv.inverse().clone());
                s.vector("b", &p.b);
                s.matrix("theta", p.theta.clone());
                for (id, arm) in &p.arms {
                    s.matrix(format!("arm.e_inv {id}"), arm.e_inv.inverse().clone());
                    s.vector(format!("arm.d {id}"), &arm.d_vec);
                    s.vector(format!("arm.v {id}"), &arm.v_hat);
                }
            }
        }
        s
    }

    pub fn restore(snap: &Snapshot) -> Result<Policy, FormatError> {
        let algo: Algo = snap.get("algo")?.parse()?;
        Ok(match algo {
            Algo::Random => {
                let hex = snap.get("rng_seed")?;
                let mut seed = [0u8; 32];
                if hex.len() != 64 {
                    return Err(FormatError::parse(0, "rng_seed must be 64 hex digits"));
                }
                for (i, b) in seed.iter_mut().enumerate() {
                    *b = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
                        .map_err(|_| FormatError::parse(0, "rng_seed is not hex"))?;
                }
                let mut rng = ChaCha8Rng::from_seed(seed);
                rng.set_stream(snap.num("rng_stream")?);
                rng.set_word_pos(snap.num("rng_word_pos")?);
                Policy::Random(RandomPolicy::from_rng(rng))
            }
            Algo::LinUcb => {
                let mut p = LinUcb::new(snap.num("alpha")?, snap.num("d")?);
                for id in snap.with_prefix("arm.inv ") {
                    let block = RidgeBlock {
                        inv: snap.take_inverse(&format!("arm.inv {id}"))?,
                        b: snap.take_vec(&format!("arm.b {id}"))?,
                    };
                    p.arms.insert(id.to_string(), block);
                }
                Policy::LinUcb(p)
            }
            Algo::MLinUcb => {
                let clusters: usize = snap.num("clusters")?;
                let mut p = MLinUcb::new(snap.num("alpha")?, snap.num("d")?, clusters);
                for (i, block) in p.blocks.iter_mut().enumerate() {
                    block.inv = snap.take_inverse(&format!("cluster.inv {i}"))?;
                    block.b = snap.take_vec(&format!("cluster.b {i}"))?;
                }
                Policy::MLinUcb(p)
            }
            Algo::CoLin => {
                let w = SimilarityMatrix::from_matrix(snap.take("w")?.clone(), 100.0)?;
                let mut p = CoLin::new(snap.num("alpha")?, snap.num("d")?, w);
                p.a_inv = snap.take_inverse("a_inv")?;
                p.b = snap.take_vec("b")?;
                p.theta = snap.take("theta")?.clone();
                Policy::CoLin(p)
            }
            Algo::FactorUcb => {
                let w = SimilarityMatrix::from_matrix(snap.take("w")?.clone(), 100.0)?;
                let mut p = FactorUcb::new(
                    snap.num("alpha1")?,
                    snap.num("alpha2")?,
                    snap.num("d")?,
                    snap.num("dl")?,
                    w,
                )
                .with_latent_init(snap.num("seed")?, snap.num("latent_init_scale")?);
                p.a_inv = snap.take_inverse("a_inv")?;
                p.b = snap.take_vec("b")?;
                p.theta = snap.take("theta")?.clone();
                for id in snap.with_prefix("arm.e_inv ") {
                    let arm = LatentArm {
                        e_inv: snap.take_inverse(&format!("arm.e_inv {id}"))?,
                        d_vec: row_vec(snap.take(&format!("arm.d {id}"))?),
                        v_hat: row_vec(snap.take(&format!("arm.v {id}"))?),
                    };
                    p.arms.insert(id.to_string(), arm);
                }
                Policy::FactorUcb(p)
            }
        })
    }
}
