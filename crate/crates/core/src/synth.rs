//! Surrogate NSL-KDD records.
//!
//! [`generate`] writes 43-field lines (41 features, raw label, difficulty)
//! whose label mix follows the published KDDTrain+ counts. Each attack type
//! has its own rough traffic profile. Part of `nmap` resembles `ipsweep`
//! and `portsweep` closely enough that the class stays hard to separate.
//! A small share of cells is replaced with `*`, `99999` or left empty to
//! exercise cleaning.

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_distr::{LogNormal, Normal};

use crate::seed;

/// Raw label counts in KDDTrain+.
pub const KDDTRAIN_COUNTS: [(&str, u32); 23] = [
    ("normal", 67343),
    ("neptune", 41214),
    ("satan", 3633),
    ("ipsweep", 3599),
    ("portsweep", 2931),
    ("smurf", 2646),
    ("nmap", 1493),
    ("back", 956),
    ("teardrop", 892),
    ("warezclient", 890),
    ("pod", 201),
    ("guess_passwd", 53),
    ("buffer_overflow", 30),
    ("warezmaster", 20),
    ("land", 18),
    ("imap", 11),
    ("rootkit", 10),
    ("loadmodule", 9),
    ("ftp_write", 8),
    ("multihop", 7),
    ("phf", 4),
    ("perl", 3),
    ("spy", 2),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub rows: usize,
    pub seed: u64,
    /// Per-row probability of each kind of corrupted cell.
    pub noise: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            rows: 20_000,
            seed: 7,
            noise: 0.002,
        }
    }
}

const N: usize = 41;

struct Row {
    f: [f64; N],
    proto: &'static str,
    service: &'static str,
    flag: &'static str,
}

impl Row {
    fn new(proto: &'static str, service: &'static str, flag: &'static str) -> Self {
        Row {
            f: [0.0; N],
            proto,
            service,
            flag,
        }
    }
}

// Feature positions in the record.
const DURATION: usize = 0;
const SRC_BYTES: usize = 4;
const DST_BYTES: usize = 5;
const LAND: usize = 6;
const WRONG_FRAGMENT: usize = 7;
const HOT: usize = 9;
const FAILED_LOGINS: usize = 10;
const LOGGED_IN: usize = 11;
const NUM_COMPROMISED: usize = 12;
const ROOT_SHELL: usize = 13;
const FILE_CREATIONS: usize = 16;
const IS_GUEST: usize = 21;
const COUNT: usize = 22;
const SRV_COUNT: usize = 23;
const SERROR: usize = 24;
const SRV_SERROR: usize = 25;
const RERROR: usize = 26;
const SRV_RERROR: usize = 27;
const SAME_SRV: usize = 28;
const DIFF_SRV: usize = 29;
const SRV_DIFF_HOST: usize = 30;
const DH_COUNT: usize = 31;
const DH_SRV_COUNT: usize = 32;
const DH_SAME_SRV: usize = 33;
const DH_DIFF_SRV: usize = 34;
const DH_SAME_PORT: usize = 35;
const DH_SRV_DIFF_HOST: usize = 36;
const DH_SERROR: usize = 37;
const DH_SRV_SERROR: usize = 38;
const DH_RERROR: usize = 39;
const DH_SRV_RERROR: usize = 40;

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
}

impl<R: Rng> Gen<'_, R> {
    fn unit(&mut self) -> f64 {
        self.rng.random()
    }

    /// Rate in `[0, 1]` near `center`, rounded to two decimals.
    fn rate(&mut self, center: f64, spread: f64) -> f64 {
        let v = center + spread * self.rng.sample::<f64, _>(rand_distr::StandardNormal);
        (v.clamp(0.0, 1.0) * 100.0).round() / 100.0
    }

    fn int(&mut self, lo: u32, hi: u32) -> f64 {
        f64::from(self.rng.random_range(lo..=hi))
    }

    fn lognormal(&mut self, median: f64, sigma: f64) -> f64 {
        LogNormal::new(median.ln(), sigma).expect("valid").sample(self.rng).round()
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(self.rng).expect("nonempty")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    fn host_counts(&mut self, row: &mut Row, dh: (u32, u32), dhs: (u32, u32)) {
        row.f[DH_COUNT] = self.int(dh.0, dh.1);
        row.f[DH_SRV_COUNT] = self.int(dhs.0, dhs.1);
    }
}

fn normal<R: Rng>(g: &mut Gen<R>) -> Row {
    let proto = g.pick(&["tcp", "tcp", "tcp", "tcp", "tcp", "tcp", "udp", "udp", "icmp"]);
    let mut r = match proto {
        "tcp" => {
            let svc = g.pick(&["http", "http", "http", "smtp", "ftp_data", "ftp", "telnet", "private", "other"]);
            let flag = if g.chance(0.95) { "SF" } else { g.pick(&["REJ", "S0", "RSTO", "S1"]) };
            let mut r = Row::new("tcp", svc, flag);
            r.f[LOGGED_IN] = if flag == "SF" { 1.0 } else { 0.0 };
            r.f[SRC_BYTES] = g.lognormal(250.0, 1.0);
            r.f[DST_BYTES] = g.lognormal(1800.0, 1.4);
            if flag != "SF" {
                r.f[DST_BYTES] = 0.0;
            }
            r
        }
        "udp" => {
            let svc = g.pick(&["domain_u", "domain_u", "private", "ntp_u", "other"]);
            let mut r = Row::new("udp", svc, "SF");
            r.f[SRC_BYTES] = g.lognormal(45.0, 0.4);
            r.f[DST_BYTES] = g.lognormal(90.0, 0.6);
            r
        }
        _ => {
            let mut r = Row::new("icmp", g.pick(&["eco_i", "ecr_i", "urp_i"]), "SF");
            r.f[SRC_BYTES] = g.lognormal(60.0, 0.8);
            r
        }
    };
    r.f[DURATION] = if g.chance(0.9) { 0.0 } else { g.lognormal(40.0, 1.8) };
    r.f[HOT] = if g.chance(0.1) { g.int(1, 5) } else { 0.0 };
    r.f[COUNT] = g.int(1, 25);
    r.f[SRV_COUNT] = (r.f[COUNT] + g.int(0, 15)).min(511.0);
    r.f[SERROR] = if r.flag == "S0" { 1.0 } else { g.rate(0.0, 0.03) };
    r.f[SRV_SERROR] = r.f[SERROR];
    r.f[RERROR] = if r.flag == "REJ" { 1.0 } else { g.rate(0.0, 0.04) };
    r.f[SRV_RERROR] = r.f[RERROR];
    r.f[SAME_SRV] = g.rate(0.97, 0.06);
    r.f[DIFF_SRV] = g.rate(0.02, 0.04);
    r.f[SRV_DIFF_HOST] = g.rate(0.1, 0.15);
    g.host_counts(&mut r, (1, 255), (20, 255));
    r.f[DH_SAME_SRV] = g.rate(0.85, 0.2);
    r.f[DH_DIFF_SRV] = g.rate(0.03, 0.05);
    r.f[DH_SAME_PORT] = g.rate(0.1, 0.15);
    r.f[DH_SRV_DIFF_HOST] = g.rate(0.03, 0.04);
    r.f[DH_SERROR] = g.rate(0.0, 0.02);
    r.f[DH_SRV_SERROR] = g.rate(0.0, 0.02);
    r.f[DH_RERROR] = g.rate(0.02, 0.05);
    r.f[DH_SRV_RERROR] = g.rate(0.02, 0.05);
    r
}

fn neptune<R: Rng>(g: &mut Gen<R>) -> Row {
    let svc = g.pick(&["private", "private", "private", "other", "http", "telnet", "ftp", "finger", "uucp", "imap4", "ecr_i"]);
    let svc = if svc == "ecr_i" { "private" } else { svc };
    let syn = g.chance(0.88);
    let mut r = Row::new("tcp", svc, if syn { "S0" } else { "REJ" });
    r.f[COUNT] = g.int(100, 511);
    r.f[SRV_COUNT] = g.int(1, 30);
    let (s, e) = if syn { (1.0, 0.0) } else { (0.0, 1.0) };
    r.f[SERROR] = s;
    r.f[SRV_SERROR] = s;
    r.f[RERROR] = e;
    r.f[SRV_RERROR] = e;
    r.f[SAME_SRV] = g.rate(0.05, 0.04);
    r.f[DIFF_SRV] = g.rate(0.06, 0.02);
    g.host_counts(&mut r, (200, 255), (1, 30));
    r.f[DH_SAME_SRV] = g.rate(0.05, 0.04);
    r.f[DH_DIFF_SRV] = g.rate(0.06, 0.03);
    r.f[DH_SERROR] = s;
    r.f[DH_SRV_SERROR] = s;
    r.f[DH_RERROR] = e;
    r.f[DH_SRV_RERROR] = e;
    r
}

fn smurf<R: Rng>(g: &mut Gen<R>) -> Row {
    let mut r = Row::new("icmp", "ecr_i", "SF");
    r.f[SRC_BYTES] = g.pick(&[520.0, 1032.0, 1032.0]);
    r.f[COUNT] = g.int(300, 511);
    r.f[SRV_COUNT] = r.f[COUNT];
    r.f[SAME_SRV] = 1.0;
    g.host_counts(&mut r, (255, 255), (255, 255));
    r.f[DH_SAME_SRV] = 1.0;
    r.f[DH_SAME_PORT] = 1.0;
    r
}

fn satan<R: Rng>(g: &mut Gen<R>) -> Row {
    let flag = g.pick(&["REJ", "REJ", "S0", "SF", "RSTO"]);
    let svc = g.pick(&["private", "other", "http", "finger", "telnet", "smtp", "ftp", "domain", "auth"]);
    let mut r = Row::new(if g.chance(0.9) { "tcp" } else { "udp" }, svc, flag);
    if r.proto == "udp" {
        r.service = "private";
        r.flag = "SF";
    }
    r.f[COUNT] = g.int(1, 60);
    r.f[SRV_COUNT] = g.int(1, 5);
    r.f[RERROR] = g.rate(0.75, 0.2);
    r.f[SRV_RERROR] = g.rate(0.8, 0.2);
    r.f[SERROR] = g.rate(0.1, 0.1);
    r.f[SAME_SRV] = g.rate(0.15, 0.15);
    r.f[DIFF_SRV] = g.rate(0.6, 0.2);
    g.host_counts(&mut r, (100, 255), (1, 20));
    r.f[DH_SAME_SRV] = g.rate(0.05, 0.05);
    r.f[DH_DIFF_SRV] = g.rate(0.6, 0.2);
    r.f[DH_SAME_PORT] = g.rate(0.4, 0.3);
    r.f[DH_RERROR] = g.rate(0.7, 0.2);
    r.f[DH_SRV_RERROR] = g.rate(0.6, 0.25);
    r
}

fn ipsweep<R: Rng>(g: &mut Gen<R>) -> Row {
    let mut r = if g.chance(0.93) {
        let mut r = Row::new("icmp", "eco_i", "SF");
        r.f[SRC_BYTES] = g.pick(&[8.0, 8.0, 18.0, 20.0]);
        r
    } else {
        Row::new("tcp", "private", g.pick(&["REJ", "RSTO", "SH"]))
    };
    r.f[COUNT] = g.int(1, 4);
    r.f[SRV_COUNT] = g.int(1, 40);
    r.f[SAME_SRV] = 1.0;
    r.f[SRV_DIFF_HOST] = g.rate(0.9, 0.15);
    g.host_counts(&mut r, (1, 80), (1, 120));
    r.f[DH_SAME_SRV] = 1.0;
    r.f[DH_SAME_PORT] = g.rate(0.9, 0.15);
    r.f[DH_SRV_DIFF_HOST] = g.rate(0.55, 0.2);
    r
}

fn portsweep<R: Rng>(g: &mut Gen<R>) -> Row {
    let flag = g.pick(&["RSTR", "RSTR", "REJ", "S0", "SF"]);
    let mut r = Row::new("tcp", "private", flag);
    r.f[DURATION] = if g.chance(0.3) { g.lognormal(3000.0, 1.5) } else { 0.0 };
    r.f[COUNT] = g.int(1, 3);
    r.f[SRV_COUNT] = g.int(1, 3);
    r.f[RERROR] = g.rate(0.6, 0.35);
    r.f[SRV_RERROR] = g.rate(0.6, 0.35);
    r.f[SAME_SRV] = g.rate(0.8, 0.25);
    r.f[SRV_DIFF_HOST] = g.rate(0.3, 0.3);
    g.host_counts(&mut r, (1, 255), (1, 10));
    r.f[DH_SAME_SRV] = g.rate(0.1, 0.1);
    r.f[DH_DIFF_SRV] = g.rate(0.5, 0.3);
    r.f[DH_SAME_PORT] = g.rate(0.95, 0.08);
    r.f[DH_SRV_DIFF_HOST] = g.rate(0.1, 0.1);
    r.f[DH_RERROR] = g.rate(0.3, 0.25);
    r.f[DH_SRV_RERROR] = g.rate(0.95, 0.08);
    r
}

fn nmap<R: Rng>(g: &mut Gen<R>) -> Row {
    // Some scans resemble the neighbouring probe classes with shifted host
    // statistics, so their densities overlap without coinciding.
    let u = g.unit();
    let mut r = if u < 0.3 {
        let mut r = Row::new("icmp", "eco_i", "SF");
        r.f[SRC_BYTES] = g.pick(&[8.0, 18.0, 20.0, 36.0]);
        r.f[COUNT] = g.int(1, 6);
        r.f[SRV_COUNT] = g.int(1, 40);
        r.f[SAME_SRV] = 1.0;
        r.f[SRV_DIFF_HOST] = g.rate(0.75, 0.25);
        g.host_counts(&mut r, (1, 160), (1, 120));
        r.f[DH_SAME_SRV] = g.rate(0.9, 0.15);
        r.f[DH_SAME_PORT] = g.rate(0.75, 0.2);
        r.f[DH_SRV_DIFF_HOST] = g.rate(0.35, 0.2);
        r
    } else if u < 0.45 {
        let mut r = Row::new("tcp", "private", g.pick(&["RSTR", "REJ", "S0", "SH"]));
        r.f[COUNT] = g.int(1, 5);
        r.f[SRV_COUNT] = g.int(1, 5);
        r.f[RERROR] = g.rate(0.4, 0.35);
        r.f[SRV_RERROR] = g.rate(0.4, 0.35);
        r.f[SAME_SRV] = g.rate(0.7, 0.3);
        r.f[SRV_DIFF_HOST] = g.rate(0.3, 0.3);
        g.host_counts(&mut r, (1, 255), (1, 20));
        r.f[DH_SAME_SRV] = g.rate(0.15, 0.15);
        r.f[DH_DIFF_SRV] = g.rate(0.4, 0.3);
        r.f[DH_SAME_PORT] = g.rate(0.8, 0.2);
        r.f[DH_SRV_DIFF_HOST] = g.rate(0.15, 0.15);
        r.f[DH_RERROR] = g.rate(0.25, 0.25);
        r.f[DH_SRV_RERROR] = g.rate(0.75, 0.2);
        r
    } else {
        let proto = g.pick(&["tcp", "tcp", "icmp", "udp"]);
        let mut r = match proto {
            "tcp" => Row::new("tcp", "private", g.pick(&["SH", "S0", "REJ", "OTH"])),
            "icmp" => {
                let mut r = Row::new("icmp", g.pick(&["eco_i", "tim_i", "urp_i"]), "SF");
                r.f[SRC_BYTES] = g.pick(&[8.0, 20.0, 36.0]);
                r
            }
            _ => Row::new("udp", "private", "SF"),
        };
        r.f[COUNT] = g.int(1, 6);
        r.f[SRV_COUNT] = g.int(1, 6);
        r.f[SERROR] = if r.flag == "S0" || r.flag == "SH" { g.rate(0.8, 0.2) } else { 0.0 };
        r.f[SRV_SERROR] = r.f[SERROR];
        r.f[SAME_SRV] = g.rate(0.9, 0.2);
        r.f[SRV_DIFF_HOST] = g.rate(0.2, 0.3);
        g.host_counts(&mut r, (1, 255), (1, 60));
        r.f[DH_SAME_SRV] = g.rate(0.5, 0.35);
        r.f[DH_DIFF_SRV] = g.rate(0.2, 0.2);
        r.f[DH_SAME_PORT] = g.rate(0.6, 0.3);
        r.f[DH_SRV_DIFF_HOST] = g.rate(0.3, 0.25);
        r.f[DH_SERROR] = g.rate(0.3, 0.3);
        r.f[DH_SRV_SERROR] = g.rate(0.4, 0.3);
        r
    };
    r.f[DURATION] = if g.chance(0.05) { g.int(1, 30) } else { 0.0 };
    r
}

fn ddos<R: Rng>(g: &mut Gen<R>, label: &str) -> Row {
    let mut r = match label {
        "back" => {
            let mut r = Row::new("tcp", "http", if g.chance(0.9) { "SF" } else { "RSTR" });
            r.f[SRC_BYTES] = 54540.0;
            r.f[DST_BYTES] = g.pick(&[8314.0, 7300.0, 0.0]);
            r.f[HOT] = 2.0;
            r.f[LOGGED_IN] = 1.0;
            r.f[NUM_COMPROMISED] = 1.0;
            r.f[COUNT] = g.int(1, 20);
            r.f[SRV_COUNT] = r.f[COUNT];
            r.f[SAME_SRV] = 1.0;
            r
        }
        "teardrop" => {
            let mut r = Row::new("udp", "private", "SF");
            r.f[SRC_BYTES] = 28.0;
            r.f[WRONG_FRAGMENT] = 3.0;
            r.f[COUNT] = g.int(50, 200);
            r.f[SRV_COUNT] = r.f[COUNT];
            r.f[SAME_SRV] = 1.0;
            r
        }
        "pod" => {
            let mut r = Row::new("icmp", "ecr_i", "SF");
            r.f[SRC_BYTES] = 1480.0;
            r.f[WRONG_FRAGMENT] = 1.0;
            r.f[COUNT] = g.int(1, 10);
            r.f[SRV_COUNT] = r.f[COUNT];
            r.f[SAME_SRV] = 1.0;
            r
        }
        _ => {
            let mut r = Row::new("tcp", g.pick(&["finger", "telnet", "http", "private"]), "S0");
            r.f[LAND] = 1.0;
            r.f[COUNT] = 1.0;
            r.f[SRV_COUNT] = 1.0;
            r.f[SERROR] = 1.0;
            r.f[SRV_SERROR] = 1.0;
            r.f[SAME_SRV] = 1.0;
            r
        }
    };
    g.host_counts(&mut r, (1, 255), (1, 255));
    r.f[DH_SAME_SRV] = g.rate(0.8, 0.2);
    r
}

fn r2l<R: Rng>(g: &mut Gen<R>, label: &str) -> Row {
    let mut r = match label {
        "warezclient" | "warezmaster" | "ftp_write" => {
            let mut r = Row::new("tcp", g.pick(&["ftp_data", "ftp"]), "SF");
            r.f[IS_GUEST] = 1.0;
            r.f[HOT] = g.int(0, 28);
            r.f[FILE_CREATIONS] = g.int(0, 2);
            r.f[SRC_BYTES] = g.lognormal(300_000.0, 1.0);
            r
        }
        "guess_passwd" | "imap" | "phf" => {
            let mut r = Row::new("tcp", g.pick(&["telnet", "imap4", "http"]), g.pick(&["RSTO", "SF"]));
            r.f[FAILED_LOGINS] = 1.0;
            r.f[SRC_BYTES] = g.lognormal(125.0, 0.3);
            r
        }
        _ => {
            let mut r = Row::new("tcp", "telnet", "SF");
            r.f[ROOT_SHELL] = 1.0;
            r.f[HOT] = g.int(1, 6);
            r.f[SRC_BYTES] = g.lognormal(1500.0, 1.0);
            r.f[DURATION] = g.lognormal(100.0, 1.0);
            r
        }
    };
    r.f[LOGGED_IN] = 1.0;
    r.f[COUNT] = g.int(1, 3);
    r.f[SRV_COUNT] = r.f[COUNT];
    r.f[SAME_SRV] = 1.0;
    g.host_counts(&mut r, (1, 255), (1, 50));
    r
}

fn record<R: Rng>(g: &mut Gen<R>, label: &str) -> Row {
    match label {
        "normal" => normal(g),
        "neptune" => neptune(g),
        "smurf" => smurf(g),
        "satan" => satan(g),
        "ipsweep" => ipsweep(g),
        "portsweep" => portsweep(g),
        "nmap" => nmap(g),
        "back" | "teardrop" | "pod" | "land" => ddos(g, label),
        _ => r2l(g, label),
    }
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Surrogate records, one per line, without a header.
pub fn generate(cfg: &SurrogateConfig) -> String {
    let mut rng = seed::rng(cfg.seed);
    let weights = WeightedIndex::new(KDDTRAIN_COUNTS.iter().map(|c| c.1)).expect("positive weights");
    let mut out = String::with_capacity(cfg.rows * 140);
    for _ in 0..cfg.rows {
        let label = KDDTRAIN_COUNTS[weights.sample(&mut rng)].0;
        let row = record(&mut Gen { rng: &mut rng }, label);
        let mut cells: Vec<String> = Vec::with_capacity(N + 2);
        for (j, v) in row.f.iter().enumerate() {
            cells.push(match j {
                1 => row.proto.to_string(),
                2 => row.service.to_string(),
                3 => row.flag.to_string(),
                _ => format_number(*v),
            });
        }
        if rng.random::<f64>() < cfg.noise {
            let j = rng.random_range(0..N);
            cells[j] = "*".into();
        }
        if rng.random::<f64>() < cfg.noise {
            let j = *[SRC_BYTES, DST_BYTES, DURATION].choose(&mut rng).expect("nonempty");
            cells[j] = "99999".into();
        }
        if rng.random::<f64>() < cfg.noise {
            let j = rng.random_range(0..N);
            cells[j] = String::new();
        }
        cells.push(label.to_string());
        cells.push(rng.random_range(10..=21).to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `rows × means.len()` Gaussian sample with common `sd`, clipped to
/// `[0, 1]`.
pub fn gaussian_toy(rows: usize, means: &[f64], sd: f64, seed_value: u64) -> Array2<f64> {
    let mut rng = seed::rng(seed_value);
    let noise = Normal::new(0.0, sd).expect("finite sd");
    Array2::from_shape_fn((rows, means.len()), |(_, j)| {
        (means[j] + noise.sample(&mut rng)).clamp(0.0, 1.0)
    })
}
