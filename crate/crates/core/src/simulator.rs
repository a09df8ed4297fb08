//! Synthetic bridge data: a damped mass-spring chain under noise and
//! swept-sine forcing, integrated with Newmark's average-acceleration scheme,
//! with scheduled stiffness loss.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DVector, LU};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::canonical_hash;
use crate::error::{Error, Result};
use crate::ingest::{emit_binary, emit_csv, ChannelKey, Series};
use crate::linalg::RMatrix;
use crate::manifest::{DataFormat, FileEntry, Manifest, FORMAT_VERSION};
use crate::structure::{assemble_with_stiffness, chain_stiffness, modal_model, ModalModel};

const NEWMARK_BETA: f64 = 0.25;
const NEWMARK_GAMMA: f64 = 0.5;

fn default_warmup() -> f64 {
    10.0
}

fn default_forced() -> Vec<usize> {
    vec![0]
}

fn default_channels() -> Vec<SimChannel> {
    vec![SimChannel::Acceleration]
}

fn default_noise() -> SensorNoise {
    SensorNoise::SnrDb(20.0)
}

fn default_window() -> usize {
    5
}

fn default_stride() -> usize {
    1
}

/// Stiffness change on the springs owned by nodes `first_node..=last_node`.
///
/// Spring `j` (between nodes `j−1` and `j`) belongs to node `j`; the last
/// ground spring belongs to the last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageZone {
    pub first_node: usize,
    pub last_node: usize,
    /// Final stiffness multiplier. Values above 1 model stiffening.
    pub factor: f64,
    /// Seconds after the start of the recording.
    pub onset: f64,
    /// Seconds over which the factor is reached linearly; 0 is a step.
    #[serde(default)]
    pub ramp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweptSine {
    pub f_start: f64,
    pub f_end: f64,
    /// Hz per second; the sweep restarts after reaching `f_end`.
    pub rate: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Excitation {
    /// Standard deviation of the white-noise force (N).
    pub noise_std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweptSine>,
    /// Nodes receiving the force.
    #[serde(default = "default_forced")]
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimChannel {
    Acceleration,
    Displacement,
    /// Central difference of neighbouring displacements, ends fixed to ground.
    Strain,
}

impl SimChannel {
    pub fn name(self) -> &'static str {
        match self {
            SimChannel::Acceleration => "acceleration",
            SimChannel::Displacement => "displacement",
            SimChannel::Strain => "strain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorNoise {
    None,
    /// Per-channel noise at this signal-to-noise ratio (dB, RMS based).
    SnrDb(f64),
    /// Fixed standard deviation for every channel.
    Std(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub node_count: usize,
    /// Mass per node (kg).
    pub mass: f64,
    /// Baseline spring stiffness (N/m).
    pub stiffness: f64,
    pub damping_ratio: f64,
    #[serde(default)]
    pub damage: Vec<DamageZone>,
    pub excitation: Excitation,
    pub sample_rate: f64,
    /// Recorded seconds, after the warm-up.
    pub duration: f64,
    /// Seconds integrated and discarded before recording.
    #[serde(default = "default_warmup")]
    pub warmup: f64,
    #[serde(default = "default_noise")]
    pub sensor_noise: SensorNoise,
    #[serde(default = "default_channels")]
    pub channels: Vec<SimChannel>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_window")]
    pub window_length: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn spec_err(field: &str, message: impl Into<String>) -> Error {
    Error::Spec {
        field: field.into(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(spec_err(field, format!("must be positive, got {v}")))
    }
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)
            .map_err(|e| spec_err(&json_field(&e.to_string()), e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(spec_err("node_count", "must be at least 1"));
        }
        positive("mass", self.mass)?;
        positive("stiffness", self.stiffness)?;
        if !(0.0..1.0).contains(&self.damping_ratio) {
            return Err(spec_err(
                "damping_ratio",
                format!("must be in [0, 1), got {}", self.damping_ratio),
            ));
        }
        positive("sample_rate", self.sample_rate)?;
        positive("duration", self.duration)?;
        if !(self.warmup.is_finite() && self.warmup >= 0.0) {
            return Err(spec_err(
                "warmup",
                format!("must be non-negative, got {}", self.warmup),
            ));
        }
        for (i, z) in self.damage.iter().enumerate() {
            let f = format!("damage[{i}]");
            if z.first_node > z.last_node || z.last_node >= self.node_count {
                return Err(spec_err(
                    &f,
                    format!(
                        "zone {}..={} outside nodes 0..{}",
                        z.first_node, z.last_node, self.node_count
                    ),
                ));
            }
            positive(&format!("{f}.factor"), z.factor)?;
            if !(z.onset.is_finite() && (0.0..=self.duration).contains(&z.onset)) {
                return Err(spec_err(
                    &format!("{f}.onset"),
                    format!("{} is outside the recording", z.onset),
                ));
            }
            if !(z.ramp.is_finite() && z.ramp >= 0.0) {
                return Err(spec_err(
                    &format!("{f}.ramp"),
                    format!("must be non-negative, got {}", z.ramp),
                ));
            }
        }
        // Overlapping zones must agree on everything.
        for (i, a) in self.damage.iter().enumerate() {
            for (j, b) in self.damage.iter().enumerate().skip(i + 1) {
                let overlap = a.first_node <= b.last_node && b.first_node <= a.last_node;
                let same = a.factor == b.factor && a.onset == b.onset && a.ramp == b.ramp;
                if overlap && !same {
                    return Err(spec_err(
                        "damage",
                        format!("zones {i} and {j} overlap with conflicting settings"),
                    ));
                }
            }
        }
        let ex = &self.excitation;
        if !(ex.noise_std.is_finite() && ex.noise_std >= 0.0) {
            return Err(spec_err(
                "excitation.noise_std",
                format!("must be non-negative, got {}", ex.noise_std),
            ));
        }
        if let Some(&node) = ex.nodes.iter().find(|&&k| k >= self.node_count) {
            return Err(spec_err(
                "excitation.nodes",
                format!("node {node} does not exist"),
            ));
        }
        if let Some(s) = &ex.sweep {
            positive("excitation.sweep.f_start", s.f_start)?;
            positive("excitation.sweep.rate", s.rate)?;
            if !(s.f_end.is_finite() && s.f_end >= s.f_start) {
                return Err(spec_err(
                    "excitation.sweep.f_end",
                    "must be at least f_start",
                ));
            }
            if !s.amplitude.is_finite() {
                return Err(spec_err("excitation.sweep.amplitude", "must be finite"));
            }
            if self.sample_rate <= 2.0 * s.f_end {
                return Err(Error::Aliasing {
                    sample_rate: self.sample_rate,
                    max_frequency: s.f_end,
                });
            }
        }
        match self.sensor_noise {
            SensorNoise::None => {}
            SensorNoise::SnrDb(db) if db.is_finite() => {}
            SensorNoise::Std(s) if s.is_finite() && s >= 0.0 => {}
            _ => return Err(spec_err("sensor_noise", "must be finite and non-negative")),
        }
        if self.channels.is_empty() {
            return Err(spec_err("channels", "at least one channel is required"));
        }
        if self.window_length < 2 || self.stride == 0 {
            return Err(spec_err(
                "window_length",
                "window_length must be at least 2 and stride positive",
            ));
        }
        if (self.sample_count() as f64) > i32::MAX as f64 {
            return Err(spec_err(
                "duration",
                "too many samples for 32-bit timestamps",
            ));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        canonical_hash(self)
    }

    /// Recorded samples per channel.
    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    fn warmup_steps(&self) -> usize {
        (self.warmup * self.sample_rate).round() as usize
    }

    /// Earliest time at which any stiffness differs from baseline.
    pub fn damage_onset(&self) -> Option<f64> {
        self.damage
            .iter()
            .filter(|z| z.factor != 1.0)
            .map(|z| z.onset)
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Best-effort name of the offending field in a serde error message.
fn json_field(msg: &str) -> String {
    for marker in ["field `", "unknown field `"] {
        if let Some(start) = msg.find(marker) {
            let rest = &msg[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_string();
            }
        }
    }
    "spec".into()
}

/// Spring stiffnesses of the chain as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessSchedule {
    pub masses: Vec<f64>,
    pub baseline: Vec<f64>,
    pub damping_ratio: f64,
    /// Rayleigh coefficients of the undamaged structure, kept fixed.
    pub alpha: f64,
    pub beta: f64,
    /// Per spring: `(factor, onset, ramp)`, or `None` when undamaged.
    changes: Vec<Option<(f64, f64, f64)>>,
}

impl StiffnessSchedule {
    pub fn springs_at(&self, t: f64) -> Vec<f64> {
        self.baseline
            .iter()
            .zip(&self.changes)
            .map(|(&k, c)| match *c {
                None => k,
                Some((factor, onset, ramp)) => {
                    let s = if t < onset {
                        0.0
                    } else if ramp == 0.0 {
                        1.0
                    } else {
                        ((t - onset) / ramp).min(1.0)
                    };
                    k * (1.0 + (factor - 1.0) * s)
                }
            })
            .collect()
    }

    pub fn stiffness_at(&self, t: f64) -> RMatrix {
        chain_stiffness(&self.springs_at(t))
    }

    pub fn mass(&self) -> RMatrix {
        RMatrix::from_diagonal(&DVector::from_column_slice(&self.masses))
    }

    pub fn damping_at(&self, t: f64) -> RMatrix {
        self.mass() * self.alpha + self.stiffness_at(t) * self.beta
    }

    /// Times at which the stiffness stops changing, in order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .changes
            .iter()
            .flatten()
            .map(|&(_, o, r)| o + r)
            .collect();
        t.sort_by(|a, b| a.total_cmp(b));
        t.dedup();
        t
    }

    /// Exact modal model of the structure frozen at time `t`.
    pub fn modal_model_at(&self, t: f64) -> Result<ModalModel> {
        let k = self.stiffness_at(t);
        let mut m =
            assemble_with_stiffness(&self.masses, k, self.baseline[0], self.damping_ratio, None)?;
        m.alpha = self.alpha;
        m.beta = self.beta;
        m.damping = self.damping_at(t);
        modal_model(&m)
    }
}

pub fn build_scenario(spec: &ScenarioSpec) -> Result<StiffnessSchedule> {
    spec.validate()?;
    let n = spec.node_count;
    let masses = vec![spec.mass; n];
    let baseline = vec![spec.stiffness; n + 1];
    let base = assemble_with_stiffness(
        &masses,
        chain_stiffness(&baseline),
        spec.stiffness,
        spec.damping_ratio,
        None,
    )?;
    let mut changes = vec![None; n + 1];
    for (j, c) in changes.iter_mut().enumerate() {
        let owner = j.min(n - 1);
        if let Some(z) = spec
            .damage
            .iter()
            .find(|z| (z.first_node..=z.last_node).contains(&owner))
        {
            if z.factor != 1.0 {
                *c = Some((z.factor, z.onset, z.ramp));
            }
        }
    }
    Ok(StiffnessSchedule {
        masses,
        baseline,
        damping_ratio: spec.damping_ratio,
        alpha: base.alpha,
        beta: base.beta,
        changes,
    })
}

/// The exact modal model of one constant-stiffness stretch of the recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    /// Seconds from the start of the recording.
    pub start: f64,
    pub model: ModalModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub sample_rate: f64,
    pub node_count: usize,
    pub channels: Vec<SimChannel>,
    /// `data[node][channel][t]`, rounded to `f32` precision so that both
    /// output formats reproduce it exactly.
    pub data: Vec<Vec<Vec<f64>>>,
    /// Time of every recorded sample, seconds.
    pub times: Vec<f64>,
    pub damage_onset: Option<f64>,
    pub regimes: Vec<Regime>,
}

impl SimOutput {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Labels of the windows `window_and_pad` cuts from this output: a window
    /// is anomalous when any of its samples lies at or after the damage onset.
    pub fn window_labels(&self, l: usize, stride: usize) -> Vec<bool> {
        let total = self.len();
        (0..total.div_ceil(stride))
            .map(|w| {
                let last = (w * stride + l).min(total) - 1;
                self.damage_onset.is_some_and(|o| self.times[last] >= o)
            })
            .collect()
    }
}

/// State histories `[step][node]` of the recorded steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub displacement: Vec<DVector<f64>>,
    pub velocity: Vec<DVector<f64>>,
    pub acceleration: Vec<DVector<f64>>,
}

/// Unforced response from an initial displacement and velocity, sampled
/// at `fs` for `steps` samples starting with the initial state.
pub fn free_vibration(
    schedule: &StiffnessSchedule,
    x0: &[f64],
    v0: &[f64],
    fs: f64,
    steps: usize,
) -> Result<Trajectory> {
    let n = schedule.masses.len();
    if x0.len() != n || v0.len() != n {
        return Err(Error::domain(format!(
            "initial state must have {n} entries"
        )));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::domain(format!(
            "sample rate must be positive, got {fs}"
        )));
    }
    let x0 = DVector::from_column_slice(x0);
    let v0 = DVector::from_column_slice(v0);
    newmark(schedule, |_, _, f| f.fill(0.0), fs, 0, steps, (x0, v0))
}

/// Raw Newmark integration without sensor noise.
fn newmark(
    schedule: &StiffnessSchedule,
    force: impl Fn(usize, f64, &mut DVector<f64>),
    fs: f64,
    warmup_steps: usize,
    steps: usize,
    initial: (DVector<f64>, DVector<f64>),
) -> Result<Trajectory> {
    let n = schedule.masses.len();
    let dt = 1.0 / fs;
    let m = schedule.mass();
    let time = |i: usize| (i as f64 - warmup_steps as f64) * dt;
    let effective = |t: f64| {
        let k = schedule.stiffness_at(t);
        let c = schedule.damping_at(t);
        let keff = &m + &c * (NEWMARK_GAMMA * dt) + &k * (NEWMARK_BETA * dt * dt);
        (k, c, LU::new(keff))
    };
    let (mut x, mut v) = initial;
    let mut f = DVector::zeros(n);
    force(0, time(0), &mut f);
    let (mut k, mut c, mut lu) = effective(time(0));
    let m_inv = DVector::from_iterator(n, schedule.masses.iter().map(|m| 1.0 / m));
    let mut a = (&f - &c * &v - &k * &x).component_mul(&m_inv);
    let mut springs = schedule.springs_at(time(0));
    let mut out = Trajectory {
        displacement: Vec::with_capacity(steps),
        velocity: Vec::with_capacity(steps),
        acceleration: Vec::with_capacity(steps),
    };
    if warmup_steps == 0 && steps > 0 {
        out.displacement.push(x.clone());
        out.velocity.push(v.clone());
        out.acceleration.push(a.clone());
    }
    for i in 1..warmup_steps + steps {
        let t = time(i);
        let now = schedule.springs_at(t);
        if now != springs {
            (k, c, lu) = effective(t);
            springs = now;
        }
        force(i, t, &mut f);
        let xp = &x + &v * dt + &a * (0.5 * (1.0 - 2.0 * NEWMARK_BETA) * dt * dt);
        let vp = &v + &a * ((1.0 - NEWMARK_GAMMA) * dt);
        let rhs = &f - &c * &vp - &k * &xp;
        let an = lu
            .solve(&rhs)
            .ok_or_else(|| Error::domain("Newmark effective matrix is singular"))?;
        x = xp + &an * (NEWMARK_BETA * dt * dt);
        v = vp + &an * (NEWMARK_GAMMA * dt);
        a = an;
        if i >= warmup_steps {
            out.displacement.push(x.clone());
            out.velocity.push(v.clone());
            out.acceleration.push(a.clone());
        }
    }
    Ok(out)
}

/// Integrate the scenario and produce noisy sensor channels.
///
/// The force and the sensor noise come from independent streams of a
/// generator seeded with `spec.seed`.
pub fn integrate(spec: &ScenarioSpec, schedule: &StiffnessSchedule) -> Result<SimOutput> {
    spec.validate()?;
    let n = spec.node_count;
    let fs = spec.sample_rate;
    let steps = spec.sample_count();
    let warm = spec.warmup_steps();
    let ex = &spec.excitation;

    let mut force_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    force_rng.set_stream(1);
    let noise: Vec<Vec<f64>> = (0..warm + steps)
        .map(|_| {
            ex.nodes
                .iter()
                .map(|_| StandardNormal.sample(&mut force_rng))
                .collect()
        })
        .collect();
    let sweep = ex.sweep.clone();
    let warmup = spec.warmup;
    let force = move |i: usize, t: f64, f: &mut DVector<f64>| {
        f.fill(0.0);
        let s = sweep.as_ref().map_or(0.0, |s| {
            let period = (s.f_end - s.f_start) / s.rate;
            let tau = if period > 0.0 {
                (t + warmup).rem_euclid(period)
            } else {
                t + warmup
            };
            let phase = 2.0 * std::f64::consts::PI * (s.f_start * tau + 0.5 * s.rate * tau * tau);
            s.amplitude * phase.sin()
        });
        for (slot, &node) in ex.nodes.iter().enumerate() {
            f[node] += ex.noise_std * noise[i][slot] + s;
        }
    };
    let zero = DVector::zeros(n);
    let traj = newmark(schedule, force, fs, warm, steps, (zero.clone(), zero))?;

    let mut data = vec![vec![Vec::with_capacity(steps); spec.channels.len()]; n];
    for (x, a) in traj.displacement.iter().zip(&traj.acceleration) {
        for node in 0..n {
            for (ci, ch) in spec.channels.iter().enumerate() {
                let v = match ch {
                    SimChannel::Acceleration => a[node],
                    SimChannel::Displacement => x[node],
                    SimChannel::Strain => {
                        let right = if node + 1 < n { x[node + 1] } else { 0.0 };
                        let left = if node > 0 { x[node - 1] } else { 0.0 };
                        (right - left) / 2.0
                    }
                };
                data[node][ci].push(v);
            }
        }
    }

    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(2);
    for node_data in &mut data {
        for series in node_data.iter_mut() {
            let std = match spec.sensor_noise {
                SensorNoise::None => 0.0,
                SensorNoise::Std(s) => s,
                SensorNoise::SnrDb(db) => {
                    let rms = (series.iter().map(|v| v * v).sum::<f64>()
                        / series.len().max(1) as f64)
                        .sqrt();
                    rms * 10f64.powf(-db / 20.0)
                }
            };
            for v in series.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut noise_rng);
                *v = (*v + std * e) as f32 as f64;
            }
        }
    }

    let mut regimes = vec![Regime {
        start: 0.0,
        model: schedule.modal_model_at(0.0)?,
    }];
    for t in schedule.breakpoints() {
        if t < spec.duration {
            regimes.push(Regime {
                start: t,
                model: schedule.modal_model_at(t)?,
            });
        }
    }
    Ok(SimOutput {
        sample_rate: fs,
        node_count: n,
        channels: spec.channels.clone(),
        data,
        times: (0..steps).map(|i| i as f64 / fs).collect(),
        damage_onset: spec.damage_onset(),
        regimes,
    })
}

/// `build_scenario` followed by `integrate`.
pub fn simulate(spec: &ScenarioSpec) -> Result<SimOutput> {
    integrate(spec, &build_scenario(spec)?)
}

/// Sample-index timestamps; the tick rate equals the sample rate.
fn series_of(output: &SimOutput, node: usize, ch: usize) -> Series {
    Series {
        timestamps: (0..output.len() as i64).collect(),
        values: output.data[node][ch].clone(),
    }
}

/// Write the sensor channels and a `manifest.json` into `dir`.
///
/// Returns the manifest. Binary output uses one file per node and channel.
pub fn emit_dataset(
    spec: &ScenarioSpec,
    output: &SimOutput,
    dir: &Path,
    format: DataFormat,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    };
    let mut files = Vec::new();
    match format {
        DataFormat::Binary => {
            for node in 0..output.node_count {
                for (ci, ch) in output.channels.iter().enumerate() {
                    let name = format!("node{node}_{}.bin", ch.name());
                    write(&name, &emit_binary(&series_of(output, node, ci))?)?;
                    files.push(FileEntry {
                        path: name,
                        sensor: Some(node),
                        channel: Some(ch.name().into()),
                        sample_rate: output.sample_rate,
                    });
                }
            }
        }
        DataFormat::Csv => {
            let mut all = BTreeMap::new();
            for node in 0..output.node_count {
                for (ci, ch) in output.channels.iter().enumerate() {
                    let key = ChannelKey {
                        sensor: node,
                        channel: ch.name().into(),
                    };
                    all.insert(key, series_of(output, node, ci));
                }
            }
            write("data.csv", emit_csv(&all)?.as_bytes())?;
            files.push(FileEntry {
                path: "data.csv".into(),
                sensor: None,
                channel: None,
                sample_rate: output.sample_rate,
            });
        }
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        format,
        sample_rate: output.sample_rate,
        node_count: output.node_count,
        channels: output
            .channels
            .iter()
            .map(|c| c.name().to_string())
            .collect(),
        node_masses: vec![spec.mass; spec.node_count],
        stiffness: spec.stiffness,
        files,
        window_length: spec.window_length,
        stride: spec.stride,
        labels: output.window_labels(spec.window_length, spec.stride),
        split: None,
        seed: spec.seed,
        spec_hash: Some(spec.hash()),
        version: crate::VERSION.into(),
    };
    write(
        "manifest.json",
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    let regimes = serde_json::to_string_pretty(&output.regimes)?;
    write("regimes.json", regimes.as_bytes())?;
    Ok(manifest)
}
