//! Loader for `.kz` structure files.
//!
//! ```text
//! file     := (blank | comment | header | entry)*
//! comment  := '#' any*
//! header   := '[' kind (' ' name)? ']'
//! entry    := key '=' value
//! ```
//!
//! Section kinds: `settings` (`window`, `seed`), `chart NAME` (one entry per
//! variable, `name = even|odd` followed by `grading:weight` pairs),
//! `expressions` (named macros), `fixture NAME` (`chart`, `P`, `rho`, `sigma`),
//! `map NAME` (`from`, `to`, one image per target variable) and `suites`
//! (`run`, a space or comma separated list). Keys may appear once per section.

use std::collections::BTreeMap;
use std::sync::Arc;

use koszul_core::checks::{self, Context};
use koszul_core::fixtures::Fixture;
use koszul_core::geometry::SuperManifold;
use koszul_core::hbar_ops::CoordinateMap;
use koszul_core::superalgebra::{Chart, ChartKind, GradedVariable, Parity, Poly, DEFAULT_WINDOW};

use crate::expr::{identifiers, Parser};
use crate::CliError;

#[derive(Clone, Debug)]
pub struct StructureFile {
    pub window: u32,
    pub seed: u64,
    /// Charts in declaration order.
    pub charts: Vec<(String, SuperManifold)>,
    pub expressions: BTreeMap<String, String>,
    pub fixtures: BTreeMap<String, Fixture>,
    pub maps: BTreeMap<String, CoordinateMap>,
    pub suites: Vec<String>,
}

struct Section {
    kind: String,
    name: Option<String>,
    line: usize,
    entries: Vec<(usize, String, String)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .find(|e| e.1 == key)
            .map(|e| (e.0, e.2.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &str), CliError> {
        self.get(key)
            .ok_or_else(|| CliError::file(self.line, format!("[{}] needs `{key}`", self.kind)))
    }

    fn only(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self
            .entries
            .iter()
            .find(|e| !allowed.contains(&e.1.as_str()))
        {
            Some((line, key, _)) => Err(CliError::file(
                *line,
                format!("unknown key `{key}` in [{}]", self.kind),
            )),
            None => Ok(()),
        }
    }
}

fn sections(text: &str) -> Result<Vec<Section>, CliError> {
    let mut out: Vec<Section> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(inner) = s.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| CliError::file(line, "unterminated section header"))?;
            let mut parts = inner.split_whitespace();
            let kind = parts
                .next()
                .ok_or_else(|| CliError::file(line, "empty section header"))?;
            let name = parts.next().map(str::to_string);
            if parts.next().is_some() {
                return Err(CliError::file(
                    line,
                    "section header takes at most one name",
                ));
            }
            out.push(Section {
                kind: kind.to_string(),
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| CliError::file(line, "expected `key = value`"))?;
        let key = key.trim();
        let sec = out
            .last_mut()
            .ok_or_else(|| CliError::file(line, "entry before any section"))?;
        if key.is_empty() {
            return Err(CliError::file(line, "empty key"));
        }
        if sec.get(key).is_some() {
            return Err(CliError::file(line, format!("duplicate key `{key}`")));
        }
        sec.entries
            .push((line, key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::file(line, format!("`{key}` must be a non-negative integer")))
}

fn chart(sec: &Section) -> Result<SuperManifold, CliError> {
    let mut vars = Vec::new();
    for (line, name, decl) in &sec.entries {
        let mut words = decl.split_whitespace();
        let parity = match words.next() {
            Some("even") => Parity::Even,
            Some("odd") => Parity::Odd,
            _ => {
                return Err(CliError::file(
                    *line,
                    format!("`{name}` must be declared even or odd"),
                ))
            }
        };
        let mut v = GradedVariable::new(name.as_str(), parity);
        for w in words {
            let (g, n) = w
                .split_once(':')
                .ok_or_else(|| CliError::file(*line, format!("weight `{w}` is not `grading:n`")))?;
            let n: i64 = n
                .parse()
                .map_err(|_| CliError::file(*line, format!("weight `{w}` is not an integer")))?;
            v = v.with_weight(g, n);
        }
        vars.push(v);
    }
    let base =
        Chart::build(vars, ChartKind::Base).map_err(|e| CliError::file(sec.line, e.to_string()))?;
    SuperManifold::new(base, &["t"]).map_err(|e| CliError::file(sec.line, e.to_string()))
}

/// The five charts of a manifold, smallest first.
pub fn spaces(m: &SuperManifold) -> [(&'static str, &Arc<Chart>); 5] {
    [
        ("base", &m.base),
        ("forms", &m.forms),
        ("multivectors", &m.multivectors),
        ("forms-phase", &m.forms_phase),
        ("multivectors-phase", &m.multivectors_phase),
    ]
}

impl StructureFile {
    pub fn parse(text: &str) -> Result<StructureFile, CliError> {
        let mut file = StructureFile {
            window: DEFAULT_WINDOW,
            seed: 1,
            charts: Vec::new(),
            expressions: BTreeMap::new(),
            fixtures: BTreeMap::new(),
            maps: BTreeMap::new(),
            suites: Vec::new(),
        };
        let secs = sections(text)?;
        let named = |s: &Section| {
            s.name
                .clone()
                .ok_or_else(|| CliError::file(s.line, format!("[{}] needs a name", s.kind)))
        };
        // Charts and macros first, so later sections may refer to them.
        for s in &secs {
            match s.kind.as_str() {
                "settings" => {
                    s.only(&["window", "seed"])?;
                    if let Some((l, v)) = s.get("window") {
                        file.window = number(l, "window", v)?;
                    }
                    if let Some((l, v)) = s.get("seed") {
                        file.seed = number(l, "seed", v)?;
                    }
                }
                "chart" => {
                    let name = named(s)?;
                    if file.chart(&name).is_some() {
                        return Err(CliError::file(
                            s.line,
                            format!("chart `{name}` declared twice"),
                        ));
                    }
                    file.charts.push((name, chart(s)?));
                }
                "expressions" => {
                    for (line, k, v) in &s.entries {
                        if file.expressions.insert(k.clone(), v.clone()).is_some() {
                            return Err(CliError::file(
                                *line,
                                format!("expression `{k}` defined twice"),
                            ));
                        }
                    }
                }
                "suites" => {
                    s.only(&["run"])?;
                    if let Some((l, v)) = s.get("run") {
                        for name in v
                            .split(|c: char| c == ',' || c.is_whitespace())
                            .filter(|w| !w.is_empty())
                        {
                            if name != "all" && !checks::SUITES.contains(&name) {
                                return Err(CliError::file(l, format!("unknown suite `{name}`")));
                            }
                            file.suites.push(name.to_string());
                        }
                    }
                }
                "fixture" | "map" => {}
                other => return Err(CliError::file(s.line, format!("unknown section [{other}]"))),
            }
        }
        for (line, name, text) in file.expression_lines(&secs) {
            file.resolve_anywhere(text)
                .map_err(|e| at_line(line, &format!("expression `{name}`"), e))?;
        }
        for s in &secs {
            match s.kind.as_str() {
                "fixture" => {
                    let name = named(s)?;
                    let fix = file.fixture(s, &name)?;
                    if file.fixtures.insert(name.clone(), fix).is_some() {
                        return Err(CliError::file(
                            s.line,
                            format!("fixture `{name}` declared twice"),
                        ));
                    }
                }
                "map" => {
                    let name = named(s)?;
                    let map = file.map(s)?;
                    file.maps.insert(name, map);
                }
                _ => {}
            }
        }
        Ok(file)
    }

    pub fn load(path: &std::path::Path) -> Result<StructureFile, CliError> {
        StructureFile::parse(&std::fs::read_to_string(path)?)
    }

    pub fn chart(&self, name: &str) -> Option<&SuperManifold> {
        self.charts.iter().find(|c| c.0 == name).map(|c| &c.1)
    }

    fn expression_lines<'s>(&self, secs: &'s [Section]) -> Vec<(usize, &'s str, &'s str)> {
        secs.iter()
            .filter(|s| s.kind == "expressions")
            .flat_map(|s| s.entries.iter().map(|e| (e.0, e.1.as_str(), e.2.as_str())))
            .collect()
    }

    fn resolve_anywhere(&self, text: &str) -> Result<Poly, CliError> {
        let mut last = None;
        for (_, m) in &self.charts {
            match self.eval_on(m, text) {
                Ok((_, p)) => return Ok(p),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| CliError::parse(0, "no chart is declared")))
    }

    fn parse_on(&self, chart: &Arc<Chart>, text: &str) -> Result<Poly, CliError> {
        Ok(Parser::new(chart, &self.expressions)
            .parse(text)?
            .with_window(self.window))
    }

    /// Evaluates `text` on the smallest chart of `m` that knows every
    /// identifier, macros expanded.
    pub fn eval_on(&self, m: &SuperManifold, text: &str) -> Result<(&'static str, Poly), CliError> {
        let names = self.leaf_identifiers(text, &mut Vec::new())?;
        let all = spaces(m);
        let (space, chart) = all
            .iter()
            .find(|(_, c)| names.iter().all(|n| c.index_of(n).is_some()))
            .unwrap_or(&all[4]);
        Ok((space, self.parse_on(chart, text)?))
    }

    /// Evaluates on the named chart, or the first one declared.
    pub fn eval(&self, chart: Option<&str>, text: &str) -> Result<(&'static str, Poly), CliError> {
        let m = match chart {
            Some(name) => self
                .chart(name)
                .ok_or_else(|| CliError::parse(0, format!("unknown chart `{name}`")))?,
            None => {
                &self
                    .charts
                    .first()
                    .ok_or_else(|| CliError::parse(0, "no chart is declared"))?
                    .1
            }
        };
        self.eval_on(m, text)
    }

    fn leaf_identifiers(
        &self,
        text: &str,
        seen: &mut Vec<String>,
    ) -> Result<Vec<String>, CliError> {
        let mut out = Vec::new();
        for id in identifiers(text)? {
            match self.expressions.get(&id) {
                Some(body) if !seen.contains(&id) => {
                    seen.push(id.clone());
                    out.extend(self.leaf_identifiers(body, seen)?);
                    seen.pop();
                }
                // Cycles are reported by the parser.
                Some(_) => {}
                None => out.push(id),
            }
        }
        Ok(out)
    }

    fn fixture(&self, s: &Section, name: &str) -> Result<Fixture, CliError> {
        s.only(&["chart", "P", "rho", "sigma"])?;
        let (l, cname) = s.require("chart")?;
        let m = self
            .chart(cname)
            .ok_or_else(|| CliError::file(l, format!("unknown chart `{cname}`")))?;
        let (l, p) = s.require("P")?;
        let p = self
            .parse_on(&m.multivectors, p)
            .map_err(|e| at_line(l, "P", e))?;
        let mut fix = Fixture::new(name, m.clone(), p);
        if let Some((l, rho)) = s.get("rho") {
            fix.rho = self
                .parse_on(&m.base, rho)
                .map_err(|e| at_line(l, "rho", e))?;
        }
        if let Some((l, sigma)) = s.get("sigma") {
            fix.sigma = Some(
                self.parse_on(&m.forms, sigma)
                    .map_err(|e| at_line(l, "sigma", e))?,
            );
        }
        Ok(fix)
    }

    fn map(&self, s: &Section) -> Result<CoordinateMap, CliError> {
        let side = |key: &str| -> Result<&SuperManifold, CliError> {
            let (l, name) = s.require(key)?;
            self.chart(name)
                .ok_or_else(|| CliError::file(l, format!("unknown chart `{name}`")))
        };
        let (from, to) = (&side("from")?.base, &side("to")?.base);
        for (line, key, _) in &s.entries {
            if key != "from" && key != "to" && to.index_of(key).is_none() {
                return Err(CliError::file(
                    *line,
                    format!("`{key}` is not a variable of the target chart"),
                ));
            }
        }
        let mut images = Vec::new();
        for v in to.vars() {
            let (l, text) = s.require(&v.name)?;
            images.push(
                self.parse_on(from, text)
                    .map_err(|e| at_line(l, &v.name, e))?,
            );
        }
        CoordinateMap::new(from, to, images).map_err(|e| CliError::file(s.line, e.to_string()))
    }

    /// Standard fixtures overridden by the ones declared here.
    pub fn context(&self, seed: u64, window: u32) -> Context {
        let mut ctx = Context::new(seed, window);
        ctx.fixtures.extend(self.fixtures.clone());
        ctx
    }
}

fn at_line(line: usize, what: &str, e: CliError) -> CliError {
    match e {
        CliError::Parse { pos, msg } => {
            CliError::file(line, format!("{what}, column {}: {msg}", pos + 1))
        }
        other => CliError::file(line, format!("{what}: {other}")),
    }
}
