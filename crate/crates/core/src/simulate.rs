//! Synthetic corpora drawn from the random-intercept model, for tests and the
//! acceptance harness.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::corpus::{DocType, InstitutionRecord, PaperRecord};
use crate::error::{Error, Result};
use crate::numeric::logistic;
use crate::percentile::{ClusterRow, ClusterTable};

/// Draws `u_j ~ N(0, σ²)` and `k_j ~ Binom(n_j, logistic(β₀ + u_j))` directly,
/// bypassing papers and percentiles.
pub fn simulate_cluster_table<R: Rng + ?Sized>(
    rng: &mut R,
    subject: &str,
    sizes: &[u64],
    beta0: f64,
    sigma: f64,
) -> ClusterTable {
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    let rows = sizes
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let u = if sigma > 0.0 { normal.sample(rng) } else { 0.0 };
            let k = Binomial::new(n, logistic(beta0 + u))
                .expect("valid binomial")
                .sample(rng);
            ClusterRow {
                institution_id: format!("C{j:04}"),
                n,
                k,
            }
        })
        .collect();
    ClusterTable::new(subject, rows).expect("simulated table is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub seed: u64,
    pub n_institutions: usize,
    /// Papers each institution leads per subject.
    pub papers_per_institution: usize,
    pub beta0: f64,
    pub sigma: f64,
    /// Probability that a paper gets a second, randomly chosen institution.
    pub collaboration_rate: f64,
    pub subjects: Vec<String>,
    pub year_min: i32,
    pub year_max: i32,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_institutions: 200,
            papers_per_institution: 500,
            beta0: crate::numeric::logit(0.15),
            sigma: 0.5,
            collaboration_rate: 0.0,
            subjects: vec!["3100".to_string()],
            year_min: 2005,
            year_max: 2009,
        }
    }
}

impl SimulationConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidThreshold(m.to_string()));
        if self.n_institutions == 0 || self.papers_per_institution == 0 {
            return bad("simulation needs at least one institution and one paper");
        }
        if self.n_institutions < 2 && self.collaboration_rate > 0.0 {
            return bad("collaboration needs at least two institutions");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) || !self.beta0.is_finite() {
            return bad("beta0 must be finite and sigma non-negative");
        }
        if !(0.0..=1.0).contains(&self.collaboration_rate) {
            return bad("collaboration_rate must lie in [0, 1]");
        }
        if self.subjects.is_empty() || self.year_min > self.year_max {
            return bad("need at least one subject and year_min <= year_max");
        }
        Ok(())
    }
}

/// Class-10% flag drawn from the model for one paper in one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedFlag {
    pub paper_id: String,
    pub subject: String,
    pub is_class10: bool,
}

#[derive(Debug, Clone)]
pub struct SimulatedCorpus {
    pub papers: Vec<PaperRecord>,
    pub institutions: Vec<InstitutionRecord>,
    pub flags: Vec<SimulatedFlag>,
    /// `(subject, institution_id, u_j)`
    pub effects: Vec<(String, String, f64)>,
}

const COUNTRIES: &[&str] = &[
    "US", "DE", "GB", "FR", "JP", "CN", "IT", "ES", "CA", "NL", "CH", "AU", "SE", "KR", "BR", "IN",
];

/// Generates papers from the model. Each paper's latent score is
/// `z = β₀ + u_j + ε` with standard logistic `ε`, so `P(z > 0) = logistic(β₀ + u_j)`;
/// the flag is `z > 0` and citations increase monotonically in `z`. Stratified
/// percentile flagging therefore selects the top decile of `z`, which tracks
/// the model up to a shift of β₀: an approximation, not an identity.
pub fn simulate_corpus(config: &SimulationConfig) -> Result<SimulatedCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.sigma).expect("validated sigma");

    let institutions: Vec<InstitutionRecord> = (0..config.n_institutions)
        .map(|j| InstitutionRecord {
            institution_id: format!("I{j:04}"),
            name: format!("Institution {j:04}"),
            country: COUNTRIES[j % COUNTRIES.len()].to_string(),
            latitude: round_to(rng.random_range(-55.0..70.0), 4),
            longitude: round_to(rng.random_range(-180.0..180.0), 4),
        })
        .collect();

    let mut papers = Vec::new();
    let mut flags = Vec::new();
    let mut effects = Vec::new();
    let mut counter = 0usize;
    for subject in &config.subjects {
        for inst in &institutions {
            let u = if config.sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            effects.push((subject.clone(), inst.institution_id.clone(), u));
            for _ in 0..config.papers_per_institution {
                counter += 1;
                let v: f64 = rng.random_range(f64::EPSILON..1.0);
                let z = config.beta0 + u + (v / (1.0 - v)).ln();
                let doc_type = match rng.random_range(0..10) {
                    0 => DocType::Review,
                    1 => DocType::ConferencePaper,
                    _ => DocType::Article,
                };
                let mut affiliations = BTreeSet::from([inst.institution_id.clone()]);
                if rng.random_bool(config.collaboration_rate) {
                    loop {
                        let other = &institutions[rng.random_range(0..institutions.len())];
                        if other.institution_id != inst.institution_id {
                            affiliations.insert(other.institution_id.clone());
                            break;
                        }
                    }
                }
                let paper_id = format!("P{counter:08}");
                flags.push(SimulatedFlag {
                    paper_id: paper_id.clone(),
                    subject: subject.clone(),
                    is_class10: z > 0.0,
                });
                papers.push(PaperRecord {
                    paper_id,
                    year: rng.random_range(config.year_min..=config.year_max),
                    doc_type,
                    subject_areas: BTreeSet::from([subject.clone()]),
                    citations: (2.0 + 0.75 * z).exp().floor().min(1e7) as u64,
                    journal_sjr2: round_to(rng.random_range(0.1..4.0), 3),
                    affiliations,
                });
            }
        }
    }
    Ok(SimulatedCorpus {
        papers,
        institutions,
        flags,
        effects,
    })
}

fn round_to(x: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (x * f).round() / f
}

pub const PAPERS_FILE: &str = "papers.jsonl";
pub const INSTITUTIONS_FILE: &str = "institutions.csv";
pub const FLAGS_FILE: &str = "class10_flags.csv";
pub const EFFECTS_FILE: &str = "true_effects.csv";

/// Writes the corpus as `papers.jsonl`, `institutions.csv`, the precomputed
/// `class10_flags.csv` (`paper_id,subject,is_class10`) and `true_effects.csv`.
pub fn write_simulation(sim: &SimulatedCorpus, dir: &Path) -> Result<()> {
    let io = |path: &Path| {
        let p = path.display().to_string();
        move |e: std::io::Error| Error::Io { path: p, source: e }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;

    let path = dir.join(PAPERS_FILE);
    let mut w = BufWriter::new(fs::File::create(&path).map_err(io(&path))?);
    for p in &sim.papers {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n").map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(INSTITUTIONS_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    for inst in &sim.institutions {
        w.serialize(inst)?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(FLAGS_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["paper_id", "subject", "is_class10"])?;
    for f in &sim.flags {
        w.write_record([
            f.paper_id.as_str(),
            f.subject.as_str(),
            if f.is_class10 { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(EFFECTS_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["subject", "institution_id", "u"])?;
    for (s, i, u) in &sim.effects {
        w.write_record([s.as_str(), i.as_str(), &format!("{u:.9}")])?;
    }
    w.flush().map_err(io(&path))?;
    Ok(())
}
