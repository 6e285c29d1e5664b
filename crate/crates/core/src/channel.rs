//! Seedable channel realizations: distance-based path loss with i.i.d.
//! Rayleigh fading per subcarrier, plus a CSV dump format.
//!
//! The CSV layout is one row per user and two eavesdropper rows:
//!
//! ```text
//! kind,index,seed,n0,n1,...,n{N-1}
//! user,0,<seed>,h[0][0],...,h[0][N-1]
//! ...
//! user,K-1,<seed>,...
//! eve,0,<seed>,beta[0],...,beta[N-1]
//! eve_mean,0,<seed>,beta_mean[0],...,beta_mean[N-1]
//! ```
//!
//! Gains are written with 17 significant digits so that a load after a dump
//! reproduces every value bit for bit.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// How user distances to the base station are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    /// Distance uniform on `[min_user_distance, cell_radius]`.
    #[default]
    UniformRadius,
    /// Position uniform over the annulus between the two radii.
    UniformArea,
}

impl Placement {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "radius" | "uniform_radius" | "uniformradius" => Some(Placement::UniformRadius),
            "area" | "uniform_area" | "uniformarea" => Some(Placement::UniformArea),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Placement::UniformRadius => "radius",
            Placement::UniformArea => "area",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    /// Meters.
    pub cell_radius: f64,
    /// Eavesdropper distance from the base station, meters.
    pub eve_distance: f64,
    pub pathloss_exponent: f64,
    /// Loss at the 1 m reference distance, dB.
    pub reference_loss_db: f64,
    /// Meters.
    pub min_user_distance: f64,
    pub placement: Placement,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            cell_radius: 10.0,
            eve_distance: 10.0,
            pathloss_exponent: 3.0,
            reference_loss_db: 30.0,
            min_user_distance: 1.0,
            placement: Placement::UniformRadius,
        }
    }
}

impl GeometryParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cell_radius", self.cell_radius),
            ("eve_distance", self.eve_distance),
            ("pathloss_exponent", self.pathloss_exponent),
            ("reference_loss_db", self.reference_loss_db),
            ("min_user_distance", self.min_user_distance),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.min_user_distance >= self.cell_radius {
            return Err(Error::validation(format!(
                "min_user_distance ({}) must be below cell_radius ({})",
                self.min_user_distance, self.cell_radius
            )));
        }
        Ok(())
    }
}

/// Linear power gain at `distance` meters.
pub fn pathloss(distance: f64, geom: &GeometryParams) -> Result<f64> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    Ok(10f64.powf(-geom.reference_loss_db / 10.0) * distance.powf(-geom.pathloss_exponent))
}

/// One draw of every user and eavesdropper channel power gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    user_gains: Vec<Vec<f64>>,
    eve_gains: Vec<f64>,
    eve_mean_gains: Vec<f64>,
    seed: u64,
}

impl ChannelRealization {
    pub fn new(
        user_gains: Vec<Vec<f64>>,
        eve_gains: Vec<f64>,
        eve_mean_gains: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let k = user_gains.len();
        if k == 0 {
            return Err(Error::validation("channel realization needs at least one user"));
        }
        let n = user_gains[0].len();
        if n == 0 {
            return Err(Error::validation("channel realization needs at least one subcarrier"));
        }
        for row in &user_gains {
            if row.len() != n {
                return Err(Error::Dimension {
                    what: "user gain row",
                    expected: n,
                    got: row.len(),
                });
            }
            if let Some(g) = row.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
                return Err(Error::validation(format!(
                    "user gains must be positive and finite, got {g}"
                )));
            }
        }
        for (what, v) in [("eavesdropper gains", &eve_gains), ("eavesdropper mean gains", &eve_mean_gains)] {
            if v.len() != n {
                return Err(Error::Dimension {
                    what,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if let Some(g) = eve_gains.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::validation(format!(
                "eavesdropper gains must be non-negative and finite, got {g}"
            )));
        }
        if let Some(g) = eve_mean_gains.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::validation(format!(
                "eavesdropper mean gains must be positive and finite, got {g}"
            )));
        }
        Ok(ChannelRealization {
            user_gains,
            eve_gains,
            eve_mean_gains,
            seed,
        })
    }

    pub fn num_users(&self) -> usize {
        self.user_gains.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.eve_gains.len()
    }

    pub fn user_gains(&self) -> &[Vec<f64>] {
        &self.user_gains
    }

    pub fn user_gain(&self, k: usize, n: usize) -> f64 {
        self.user_gains[k][n]
    }

    pub fn eve_gains(&self) -> &[f64] {
        &self.eve_gains
    }

    pub fn eve_mean_gains(&self) -> &[f64] {
        &self.eve_mean_gains
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Checks that the realization has the shape `params` expects.
    pub fn check_dims(&self, params: &SystemParams) -> Result<()> {
        if self.num_users() != params.num_users() {
            return Err(Error::Dimension {
                what: "channel users",
                expected: params.num_users(),
                got: self.num_users(),
            });
        }
        if self.num_subcarriers() != params.num_subcarriers() {
            return Err(Error::Dimension {
                what: "channel subcarriers",
                expected: params.num_subcarriers(),
                got: self.num_subcarriers(),
            });
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.num_subcarriers();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["kind".to_string(), "index".to_string(), "seed".to_string()];
        header.extend((0..n).map(|i| format!("n{i}")));
        let io = |e: csv::Error| Error::validation(format!("csv write failed: {e}"));
        w.write_record(&header).map_err(io)?;
        let seed = self.seed.to_string();
        let mut emit = |kind: &str, idx: usize, row: &[f64]| -> Result<()> {
            let mut rec = vec![kind.to_string(), idx.to_string(), seed.clone()];
            rec.extend(row.iter().map(|g| format!("{g:.16e}")));
            w.write_record(&rec).map_err(io)
        };
        for (k, row) in self.user_gains.iter().enumerate() {
            emit("user", k, row)?;
        }
        emit("eve", 0, &self.eve_gains)?;
        emit("eve_mean", 0, &self.eve_mean_gains)?;
        w.flush()
            .map_err(|e| Error::validation(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(input);
        let header = rdr
            .headers()
            .map_err(|e| Error::parse(1, e.to_string()))?
            .clone();
        if header.len() < 4 || &header[0] != "kind" || &header[1] != "index" || &header[2] != "seed" {
            return Err(Error::parse(1, "expected header `kind,index,seed,n0,...`"));
        }
        let n = header.len() - 3;
        let mut users: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut eve = None;
        let mut eve_mean = None;
        let mut seed: Option<u64> = None;
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
            let idx: usize = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad index `{}`", &rec[1])))?;
            let s: u64 = rec[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad seed `{}`", &rec[2])))?;
            match seed {
                None => seed = Some(s),
                Some(prev) if prev != s => {
                    return Err(Error::parse(line, "seed differs between rows"));
                }
                _ => {}
            }
            let vals = rec
                .iter()
                .skip(3)
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(line, format!("bad gain `{f}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            debug_assert_eq!(vals.len(), n);
            match &rec[0] {
                "user" => users.push((idx, vals)),
                "eve" if eve.is_none() => eve = Some(vals),
                "eve_mean" if eve_mean.is_none() => eve_mean = Some(vals),
                "eve" | "eve_mean" => return Err(Error::parse(line, "duplicate eavesdropper row")),
                other => return Err(Error::parse(line, format!("unknown row kind `{other}`"))),
            }
        }
        users.sort_by_key(|(idx, _)| *idx);
        for (expected, (idx, _)) in users.iter().enumerate() {
            if *idx != expected {
                return Err(Error::parse(0, format!("user rows must be numbered 0..K, missing {expected}")));
            }
        }
        let eve = eve.ok_or_else(|| Error::parse(0, "missing `eve` row"))?;
        let eve_mean = eve_mean.ok_or_else(|| Error::parse(0, "missing `eve_mean` row"))?;
        let seed = seed.unwrap_or(0);
        ChannelRealization::new(users.into_iter().map(|(_, v)| v).collect(), eve, eve_mean, seed)
    }
}

/// Draws user distances, then every user gain row by row, then the
/// eavesdropper gains, all from one ChaCha stream seeded with `seed`.
pub fn generate(params: &SystemParams, geom: &GeometryParams, seed: u64) -> Result<ChannelRealization> {
    geom.validate()?;
    let k = params.num_users();
    let n = params.num_subcarriers();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (lo, hi) = (geom.min_user_distance, geom.cell_radius);
    let distances: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.gen();
            match geom.placement {
                Placement::UniformRadius => lo + (hi - lo) * u,
                Placement::UniformArea => (lo * lo + (hi * hi - lo * lo) * u).sqrt(),
            }
        })
        .collect();

    let fading = |rng: &mut ChaCha8Rng| -> f64 {
        let g: f64 = rng.sample(Exp1);
        g.max(f64::MIN_POSITIVE)
    };

    let mut user_gains = Vec::with_capacity(k);
    for d in &distances {
        let pl = pathloss(*d, geom)?;
        user_gains.push((0..n).map(|_| pl * fading(&mut rng)).collect());
    }
    let eve_pl = pathloss(geom.eve_distance, geom)?;
    let eve_gains = (0..n).map(|_| eve_pl * fading(&mut rng)).collect();
    let eve_mean_gains = vec![eve_pl; n];
    ChannelRealization::new(user_gains, eve_gains, eve_mean_gains, seed)
}
