//! Seeded synthetic corpora built from per-CWE code templates.
//!
//! Each supported family has vulnerable templates and bounds-checked /
//! sanitized counterparts. Instantiation only varies identifier names, literal
//! values and padding comments, so the weakness idiom itself is preserved.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::{Corpus, CweId, FunctionRecord, Label, SourceDescriptor};
use crate::error::{Error, Result};
use crate::seed::rng_for;

/// CWE families with templates.
pub const SUPPORTED_FAMILIES: [u32; 6] = [20, 89, 119, 125, 416, 787];

pub const SOURCE_TAG: &str = "synthetic";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Vulnerable records per CWE family.
    pub counts: BTreeMap<CweId, usize>,
    pub non_vulnerable: usize,
    pub seed: u64,
    /// Padding comment lines per function, drawn uniformly from this range.
    pub pad_lines: (usize, usize),
    /// Fraction of vulnerable records that receive a fixed counterpart. The
    /// counterparts are taken from the non-vulnerable budget.
    pub pair_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            counts: BTreeMap::new(),
            non_vulnerable: 0,
            seed: 0,
            pad_lines: (0, 4),
            pair_fraction: 0.0,
        }
    }
}

impl SyntheticSpec {
    pub fn new(counts: &[(u32, usize)], non_vulnerable: usize, seed: u64) -> Result<Self> {
        let counts = counts
            .iter()
            .map(|&(c, n)| Ok((CweId::new(c)?, n)))
            .collect::<Result<_>>()?;
        Ok(SyntheticSpec {
            counts,
            non_vulnerable,
            seed,
            ..Default::default()
        })
    }

    pub fn with_pair_fraction(mut self, fraction: f64) -> Self {
        self.pair_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for cwe in self.counts.keys() {
            if !SUPPORTED_FAMILIES.contains(&cwe.get()) {
                return Err(Error::UnknownCweFamily(cwe.get()));
            }
        }
        if !(0.0..=1.0).contains(&self.pair_fraction) {
            return Err(Error::Config(format!(
                "pair_fraction must be in [0,1], got {}",
                self.pair_fraction
            )));
        }
        if self.pad_lines.0 > self.pad_lines.1 {
            return Err(Error::Config("pad_lines range is inverted".into()));
        }
        Ok(())
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, "synthetic", "generate");

    struct Draft {
        code: String,
        label: Label,
        cwe: Option<CweId>,
        pair: Option<usize>,
    }

    // Vulnerable records, families in ascending CWE order.
    let mut instances = Vec::new();
    for (&cwe, &n) in &spec.counts {
        for _ in 0..n {
            let vars = Vars::draw(&mut rng);
            let variant = rng.gen_range(0..2);
            let padding = padding(&mut rng, spec.pad_lines);
            instances.push((cwe, vars, variant, padding));
        }
    }

    let total_vuln = instances.len();
    let n_pairs = ((spec.pair_fraction * total_vuln as f64).round() as usize)
        .min(spec.non_vulnerable)
        .min(total_vuln);
    let mut paired: Vec<usize> = (0..total_vuln).collect();
    paired.shuffle(&mut rng);
    paired.truncate(n_pairs);
    paired.sort_unstable();

    let mut drafts: Vec<Draft> = Vec::with_capacity(total_vuln + spec.non_vulnerable);
    for (i, (cwe, vars, variant, pad)) in instances.iter().enumerate() {
        let pair = paired.binary_search(&i).ok();
        drafts.push(Draft {
            code: render(cwe.get(), *variant, false, vars, pad),
            label: Label::Vulnerable,
            cwe: Some(*cwe),
            pair,
        });
        if let Some(k) = pair {
            drafts.push(Draft {
                code: render(cwe.get(), *variant, true, vars, pad),
                label: Label::NonVulnerable,
                cwe: None,
                pair: Some(k),
            });
        }
    }

    let families: Vec<u32> = if spec.counts.is_empty() {
        SUPPORTED_FAMILIES.to_vec()
    } else {
        spec.counts.keys().map(|c| c.get()).collect()
    };
    for _ in n_pairs..spec.non_vulnerable {
        let vars = Vars::draw(&mut rng);
        let pad = padding(&mut rng, spec.pad_lines);
        let code = if rng.gen_bool(0.5) {
            let family = *families.choose(&mut rng).expect("non-empty family list");
            render(family, rng.gen_range(0..2), true, &vars, &pad)
        } else {
            neutral(rng.gen_range(0..NEUTRAL_TEMPLATES), &vars, &pad)
        };
        drafts.push(Draft {
            code,
            label: Label::NonVulnerable,
            cwe: None,
            pair: None,
        });
    }

    drafts.shuffle(&mut rng);
    let records: Vec<FunctionRecord> = drafts
        .into_iter()
        .enumerate()
        .map(|(i, d)| FunctionRecord {
            id: format!("{SOURCE_TAG}:{i}"),
            code: d.code,
            label: d.label,
            cwes: d.cwe.into_iter().collect(),
            source: SOURCE_TAG.to_string(),
            project: None,
            commit: None,
            pair_id: d.pair.map(|k| format!("pair-{k}")),
        })
        .collect();

    let descriptor = SourceDescriptor {
        source: SOURCE_TAG.to_string(),
        records: records.len(),
        ..Default::default()
    };
    Ok(Corpus::new(records, vec![descriptor]))
}

const VERBS: &[&str] = &[
    "parse", "read", "load", "handle", "process", "copy", "decode", "fetch", "update", "store",
    "scan", "emit", "apply", "fill", "build", "pack",
];
const NOUNS: &[&str] = &[
    "header", "packet", "record", "entry", "frame", "message", "token", "field", "chunk",
    "request", "block", "segment", "config", "name", "item", "option",
];
const BUFS: &[&str] = &[
    "buf", "buffer", "data", "bytes", "payload", "block", "chunk", "raw", "storage", "out",
];
const INPUTS: &[&str] = &["input", "user_input", "src", "arg", "str", "text", "value", "param"];
const LENS: &[&str] = &["len", "size", "n", "count", "length", "cap", "limit", "total"];
const IDXS: &[&str] = &["idx", "i", "pos", "offset", "index", "k", "slot", "at"];
const OBJS: &[&str] = &["obj", "node", "ctx", "item", "conn_state", "session", "handle", "entry"];
const TYPES: &[&str] = &["node", "session", "context", "object", "buffer_ref", "item", "peer"];
const SINKS: &[&str] = &["log_line", "emit", "consume", "report", "send_reply", "notify", "trace"];
const SIZES: &[usize] = &[8, 16, 32, 64, 128, 256, 512];
const PAD_PHRASES: &[&str] = &[
    "keep in sync with the protocol header",
    "called from the dispatcher",
    "legacy path",
    "see changelog",
    "hot path",
    "caller owns the memory",
    "returns status code",
    "reviewed",
];

struct Vars {
    func: String,
    buf: &'static str,
    input: &'static str,
    len: &'static str,
    idx: &'static str,
    obj: &'static str,
    ty: &'static str,
    sink: &'static str,
    size: usize,
    k: u32,
    max: usize,
}

impl Vars {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let pick = |rng: &mut ChaCha8Rng, pool: &[&'static str]| *pool.choose(rng).expect("non-empty pool");
        let func = format!("{}_{}", pick(rng, VERBS), pick(rng, NOUNS));
        let buf = pick(rng, BUFS);
        let input = pick(rng, INPUTS);
        let len = pick(rng, LENS);
        // distinct index/length names keep the templates well-formed
        let mut idx = pick(rng, IDXS);
        while idx == len {
            idx = pick(rng, IDXS);
        }
        Vars {
            func,
            buf,
            input,
            len,
            idx,
            obj: pick(rng, OBJS),
            ty: pick(rng, TYPES),
            sink: pick(rng, SINKS),
            size: *SIZES.choose(rng).expect("non-empty pool"),
            k: rng.gen_range(1..10),
            max: *[64usize, 128, 1024, 4096].choose(rng).expect("non-empty pool"),
        }
    }
}

fn padding(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> String {
    let mut out = format!("/* rev {} */\n", rng.gen_range(0..1_000_000u32));
    for _ in 0..rng.gen_range(lo..=hi) {
        let phrase = PAD_PHRASES.choose(rng).expect("non-empty pool");
        out.push_str(&format!("// {phrase} ({})\n", rng.gen_range(1..100u32)));
    }
    out
}

fn render(cwe: u32, variant: usize, fixed: bool, v: &Vars, pad: &str) -> String {
    let Vars {
        func,
        buf,
        input,
        len,
        idx,
        obj,
        ty,
        sink,
        size,
        k,
        max,
    } = v;
    let body = match (cwe, variant, fixed) {
        // CWE-89: query built by string formatting vs. prepared statement
        (89, 0, false) => format!(
            "int {func}(MYSQL *conn, const char *{input}) {{
    char query[{size}];
    sprintf(query, \"SELECT * FROM users WHERE name='%s'\", {input});
    if (mysql_query(conn, query)) {{
        return -1;
    }}
    return 0;
}}
"
        ),
        (89, 1, false) => format!(
            "int {func}(sqlite3 *db, const char *{input}) {{
    char sql[{size}];
    strcpy(sql, \"DELETE FROM sessions WHERE token='\");
    strcat(sql, {input});
    strcat(sql, \"'\");
    return sqlite3_exec(db, sql, NULL, NULL, NULL);
}}
"
        ),
        (89, 0, true) => format!(
            "int {func}(MYSQL *conn, const char *{input}) {{
    MYSQL_STMT *stmt = mysql_stmt_init(conn);
    const char *query = \"SELECT * FROM users WHERE name=?\";
    if (mysql_stmt_prepare(stmt, query, strlen(query)) != 0) {{
        return -1;
    }}
    MYSQL_BIND bind[1];
    memset(bind, 0, sizeof(bind));
    bind[0].buffer = (void *){input};
    bind[0].buffer_length = strlen({input});
    mysql_stmt_bind_param(stmt, bind);
    return mysql_stmt_execute(stmt);
}}
"
        ),
        (89, 1, true) => format!(
            "int {func}(sqlite3 *db, const char *{input}) {{
    sqlite3_stmt *stmt;
    if (sqlite3_prepare_v2(db, \"DELETE FROM sessions WHERE token=?\", -1, &stmt, NULL) != SQLITE_OK) {{
        return -1;
    }}
    sqlite3_bind_text(stmt, 1, {input}, -1, SQLITE_TRANSIENT);
    int rc = sqlite3_step(stmt);
    sqlite3_finalize(stmt);
    return rc;
}}
"
        ),
        // CWE-125: out-of-bounds read
        (125, 0, false) => format!(
            "int {func}(const int *{buf}, size_t {len}, int {idx}) {{
    int value = {buf}[{idx}];
    return value * {k};
}}
"
        ),
        (125, 0, true) => format!(
            "int {func}(const int *{buf}, size_t {len}, int {idx}) {{
    if ({idx} < 0 || (size_t){idx} >= {len}) {{
        return -1;
    }}
    int value = {buf}[{idx}];
    return value * {k};
}}
"
        ),
        (125, 1, false) => format!(
            "unsigned {func}(const unsigned char *{buf}, size_t {len}) {{
    unsigned sum = 0;
    for (size_t {idx} = 0; {idx} <= {len}; {idx}++) {{
        sum += {buf}[{idx}];
    }}
    return sum;
}}
"
        ),
        (125, 1, true) => format!(
            "unsigned {func}(const unsigned char *{buf}, size_t {len}) {{
    unsigned sum = 0;
    for (size_t {idx} = 0; {idx} < {len}; {idx}++) {{
        sum += {buf}[{idx}];
    }}
    return sum;
}}
"
        ),
        // CWE-787: out-of-bounds write
        (787, 0, false) => format!(
            "void {func}(int *{buf}, size_t {len}, int {idx}, int value) {{
    {buf}[{idx}] = value + {k};
}}
"
        ),
        (787, 0, true) => format!(
            "void {func}(int *{buf}, size_t {len}, int {idx}, int value) {{
    if ({idx} < 0 || (size_t){idx} >= {len}) {{
        return;
    }}
    {buf}[{idx}] = value + {k};
}}
"
        ),
        (787, 1, false) => format!(
            "void {func}(char *dst, const char *{input}, size_t {len}) {{
    size_t {idx};
    for ({idx} = 0; {input}[{idx}] != '\\0'; {idx}++) {{
        dst[{idx}] = {input}[{idx}];
    }}
    dst[{idx}] = '\\0';
}}
"
        ),
        (787, 1, true) => format!(
            "void {func}(char *dst, const char *{input}, size_t {len}) {{
    size_t {idx};
    if ({len} == 0) {{
        return;
    }}
    for ({idx} = 0; {idx} + 1 < {len} && {input}[{idx}] != '\\0'; {idx}++) {{
        dst[{idx}] = {input}[{idx}];
    }}
    dst[{idx}] = '\\0';
}}
"
        ),
        // CWE-119: unchecked buffer operation
        (119, 0, false) => format!(
            "void {func}(char *{input}) {{
    char {buf}[{size}];
    strcpy({buf}, {input});
    {sink}({buf});
}}
"
        ),
        (119, 0, true) => format!(
            "void {func}(char *{input}) {{
    char {buf}[{size}];
    strncpy({buf}, {input}, sizeof({buf}) - 1);
    {buf}[sizeof({buf}) - 1] = '\\0';
    {sink}({buf});
}}
"
        ),
        (119, 1, false) => format!(
            "int {func}(const void *{input}, size_t {len}) {{
    unsigned char {buf}[{size}];
    memcpy({buf}, {input}, {len});
    return {sink}({buf}, {len});
}}
"
        ),
        (119, 1, true) => format!(
            "int {func}(const void *{input}, size_t {len}) {{
    unsigned char {buf}[{size}];
    if ({len} > sizeof({buf})) {{
        return -1;
    }}
    memcpy({buf}, {input}, {len});
    return {sink}({buf}, {len});
}}
"
        ),
        // CWE-20: missing input validation
        (20, 0, false) => format!(
            "int {func}(const char *{input}) {{
    int {len} = atoi({input});
    char *{buf} = malloc({len} * {k});
    {sink}({buf}, {len});
    free({buf});
    return 0;
}}
"
        ),
        (20, 0, true) => format!(
            "int {func}(const char *{input}) {{
    char *end = NULL;
    long {len} = strtol({input}, &end, 10);
    if (end == {input} || *end != '\\0' || {len} <= 0 || {len} > {max}) {{
        return -EINVAL;
    }}
    char *{buf} = malloc({len} * {k});
    if ({buf} == NULL) {{
        return -ENOMEM;
    }}
    {sink}({buf}, {len});
    free({buf});
    return 0;
}}
"
        ),
        (20, 1, false) => format!(
            "int {func}(struct {ty} *{obj}) {{
    uint16_t {len} = ntohs({obj}->length);
    return {sink}({obj}->payload, {len});
}}
"
        ),
        (20, 1, true) => format!(
            "int {func}(struct {ty} *{obj}) {{
    uint16_t {len} = ntohs({obj}->length);
    if ({len} == 0 || {len} > {obj}->capacity) {{
        return -EINVAL;
    }}
    return {sink}({obj}->payload, {len});
}}
"
        ),
        // CWE-416: use after free
        (416, 0, false) => format!(
            "void {func}(struct {ty} *{obj}) {{
    free({obj}->data);
    free({obj});
    {sink}(\"released %d\", {obj}->id);
}}
"
        ),
        (416, 0, true) => format!(
            "void {func}(struct {ty} *{obj}) {{
    int id = {obj}->id;
    free({obj}->data);
    free({obj});
    {obj} = NULL;
    {sink}(\"released %d\", id);
}}
"
        ),
        (416, 1, false) => format!(
            "int {func}(struct {ty} *{obj}) {{
    char *{buf} = {obj}->data;
    free({buf});
    return {buf}[0] + {k};
}}
"
        ),
        (416, 1, true) => format!(
            "int {func}(struct {ty} *{obj}) {{
    char *{buf} = {obj}->data;
    int first = {buf}[0];
    free({buf});
    {obj}->data = NULL;
    return first + {k};
}}
"
        ),
        _ => unreachable!("family {cwe} variant {variant} validated earlier"),
    };
    format!("{pad}{body}")
}

const NEUTRAL_TEMPLATES: usize = 6;

fn neutral(which: usize, v: &Vars, pad: &str) -> String {
    let Vars {
        func,
        buf,
        len,
        idx,
        obj,
        ty,
        k,
        ..
    } = v;
    let body = match which {
        0 => format!(
            "long {func}(const int *{buf}, size_t {len}) {{
    long total = 0;
    for (size_t {idx} = 0; {idx} < {len}; {idx}++) {{
        total += {buf}[{idx}];
    }}
    return total;
}}
"
        ),
        1 => format!(
            "int {func}(int a, int b) {{
    while (b != 0) {{
        int t = a % b;
        a = b;
        b = t;
    }}
    return a;
}}
"
        ),
        2 => format!(
            "static int {func}(int value, int lo, int hi) {{
    if (value < lo) {{
        return lo;
    }}
    if (value > hi) {{
        return hi;
    }}
    return value * {k};
}}
"
        ),
        3 => format!(
            "size_t {func}(const struct {ty} *{obj}) {{
    size_t {len} = 0;
    while ({obj} != NULL) {{
        {len}++;
        {obj} = {obj}->next;
    }}
    return {len};
}}
"
        ),
        4 => format!(
            "unsigned long {func}(const char *{buf}) {{
    unsigned long hash = 5381;
    int c;
    while ((c = *{buf}++) != 0) {{
        hash = ((hash << 5) + hash) + c;
    }}
    return hash;
}}
"
        ),
        _ => format!(
            "void {func}(int *a, int *b) {{
    int tmp = *a;
    *a = *b;
    *b = tmp + {k} - {k};
}}
"
        ),
    };
    format!("{pad}{body}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_counts_give_empty_corpus() {
        let c = generate_synthetic(&SyntheticSpec::new(&[(125, 0)], 0, 3).unwrap()).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn deterministic_for_seed() {
        let spec = SyntheticSpec::new(&[(125, 10)], 10, 7).unwrap();
        let a = generate_synthetic(&spec).unwrap().to_jsonl();
        let b = generate_synthetic(&spec).unwrap().to_jsonl();
        assert_eq!(a, b);
    }

    #[test]
    fn counts_match_spec() {
        let spec = SyntheticSpec::new(&[(125, 10), (787, 10)], 40, 1).unwrap();
        let c = generate_synthetic(&spec).unwrap();
        assert_eq!(c.len(), 60);
        assert_eq!(c.vulnerable().len(), 20);
        let mut per = BTreeMap::new();
        for r in c.vulnerable() {
            assert_eq!(r.cwes.len(), 1);
            *per.entry(r.cwes[0].get()).or_insert(0) += 1;
        }
        assert_eq!(per, BTreeMap::from([(125, 10), (787, 10)]));
        for r in c.non_vulnerable() {
            assert!(r.cwes.is_empty());
        }
    }

    #[test]
    fn unknown_family_is_fatal() {
        let err = generate_synthetic(&SyntheticSpec::new(&[(999, 1)], 0, 1).unwrap()).unwrap_err();
        assert!(matches!(err, Error::UnknownCweFamily(999)));
    }

    #[test]
    fn pairs_come_from_non_vulnerable_budget() {
        let spec = SyntheticSpec::new(&[(119, 20), (416, 20)], 30, 5)
            .unwrap()
            .with_pair_fraction(0.5);
        let c = generate_synthetic(&spec).unwrap();
        assert_eq!(c.len(), 70);
        let pairs = c.pairs();
        assert_eq!(pairs.len(), 20);
        let index = c.index();
        for (v, b) in &pairs {
            assert!(index.get(v).unwrap().is_vulnerable());
            assert!(!index.get(b).unwrap().is_vulnerable());
        }
    }

    #[test]
    fn every_family_renders_both_ways() {
        let mut rng = rng_for(0, "t", "t");
        let vars = Vars::draw(&mut rng);
        for family in SUPPORTED_FAMILIES {
            for variant in 0..2 {
                let vuln = render(family, variant, false, &vars, "");
                let fixed = render(family, variant, true, &vars, "");
                assert_ne!(vuln, fixed, "CWE-{family} variant {variant}");
                assert!(vuln.contains(&vars.func));
            }
        }
    }
}
